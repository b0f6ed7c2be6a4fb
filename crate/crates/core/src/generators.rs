//! Compactly supported 1-D scaling/wavelet pairs built from Daubechies
//! conjugate-mirror filters, evaluated in the Fourier domain.
//!
//! Two flavours of Fourier evaluation live here:
//! * the *continuous* profiles `phi_hat`/`psi_hat` (truncated infinite product
//!   with a first-moment tail correction), used for validation and fits;
//! * the *finite-depth* products `phi_hat_depth`/`psi_hat_depth`, which are
//!   exactly periodic and are what the discrete bases on a `2^L` grid use.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmf::DAUBECHIES;
use crate::error::{Error, Result};

/// A real orthonormal low-pass filter with `sum h = sqrt(2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MirrorFilter {
    order: u32,
    taps: Vec<f64>,
    centroid: f64,
}

impl MirrorFilter {
    /// Daubechies filter with `order` vanishing moments (`1..=10`).
    pub fn daubechies(order: u32) -> Result<Self> {
        if order == 0 || order as usize > DAUBECHIES.len() {
            return Err(Error::Config(format!(
                "generator order {order} outside the supported range 1..={}",
                DAUBECHIES.len()
            )));
        }
        let taps = DAUBECHIES[order as usize - 1].to_vec();
        let centroid = taps.iter().enumerate().map(|(n, h)| n as f64 * h).sum::<f64>() / SQRT_2;
        Ok(MirrorFilter { order, taps, centroid })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// First moment of the scaling function, `sum n h_n / sqrt 2`.
    pub fn centroid(&self) -> f64 {
        self.centroid
    }

    /// Spatial support length `2K - 1` of the scaling function.
    pub fn support_length(&self) -> f64 {
        (self.taps.len() - 1) as f64
    }

    /// `m0(w) = 2^{-1/2} sum h_n e^{-2 pi i n w}`, period 1.
    pub fn m0(&self, w: f64) -> Complex64 {
        let z = Complex64::from_polar(1.0, -2.0 * PI * w);
        let mut acc = Complex64::new(0.0, 0.0);
        for &h in self.taps.iter().rev() {
            acc = acc * z + h;
        }
        acc / SQRT_2
    }

    /// `m1(w) = e^{-2 pi i w} conj(m0(w + 1/2))`.
    pub fn m1(&self, w: f64) -> Complex64 {
        Complex64::from_polar(1.0, -2.0 * PI * w) * self.m0(w + 0.5).conj()
    }

    /// Wavelet filter `g_k = -(-1)^k h_{1-k}` for `k = 2 - 2K ..= 1`, returned with
    /// the index of its first tap.
    pub fn highpass(&self) -> (i64, Vec<f64>) {
        let len = self.taps.len() as i64;
        let first = 2 - len;
        let g = (first..=1)
            .map(|k| {
                let h = self.taps[(1 - k) as usize];
                if k.rem_euclid(2) == 0 {
                    -h
                } else {
                    h
                }
            })
            .collect();
        (first, g)
    }
}

/// `prod_{r=1}^{depth} m0(w / 2^r)`; periodic in `w` with period `2^depth`.
pub fn phi_hat_depth(filter: &MirrorFilter, w: f64, depth: u32) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    let mut arg = w;
    for _ in 0..depth {
        arg *= 0.5;
        acc *= filter.m0(arg);
    }
    acc
}

/// `m1(w/2) prod_{r=2}^{depth} m0(w / 2^r)`; zero-depth gives `m1(w/2)`.
pub fn psi_hat_depth(filter: &MirrorFilter, w: f64, depth: u32) -> Complex64 {
    filter.m1(0.5 * w) * phi_hat_depth(filter, 0.5 * w, depth.saturating_sub(1))
}

fn tail(filter: &MirrorFilter, xi: f64, depth: u32) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * filter.centroid * xi / (depth as f64).exp2())
}

/// Continuous scaling profile at truncation depth `depth`: the finite product
/// times the first-order tail `exp(-2 pi i mu xi / 2^depth)`.
pub fn phi_hat(filter: &MirrorFilter, xi: f64, depth: u32) -> Complex64 {
    phi_hat_depth(filter, xi, depth) * tail(filter, xi, depth)
}

/// Continuous wavelet profile `m1(xi/2) phi_hat(xi/2)`.
pub fn psi_hat(filter: &MirrorFilter, xi: f64, depth: u32) -> Complex64 {
    filter.m1(0.5 * xi) * phi_hat(filter, 0.5 * xi, depth)
}

/// Frequency sample layout for 1-D profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "snake_case")]
pub enum FrequencySampling {
    /// `k * step` for all integers with `|k * step| <= extent`.
    Uniform { extent: f64, step: f64 },
    /// `0` plus `±` log-spaced points on `[lo, hi]`.
    Log { lo: f64, hi: f64, per_decade: usize },
    /// Explicit points, used as given.
    Points { xi: Vec<f64> },
}

impl FrequencySampling {
    /// Dense near zero (log spaced from `1e-4`) plus uniform step `1/8` up to `extent`.
    pub fn decay_default(extent: f64) -> Self {
        let mut xi: Vec<f64> = FrequencySampling::Log { lo: 1e-4, hi: 1.0, per_decade: 60 }.points();
        xi.extend(FrequencySampling::Uniform { extent, step: 0.125 }.points());
        xi.sort_by(f64::total_cmp);
        xi.dedup();
        FrequencySampling::Points { xi }
    }

    pub fn points(&self) -> Vec<f64> {
        match self {
            FrequencySampling::Uniform { extent, step } => {
                let n = (extent / step + 1e-9).floor() as i64;
                (-n..=n).map(|k| k as f64 * step).collect()
            }
            FrequencySampling::Log { lo, hi, per_decade } => {
                let decades = (hi / lo).log10();
                let count = ((decades * *per_decade as f64).ceil() as usize).max(1);
                let pos: Vec<f64> = (0..=count)
                    .map(|i| lo * 10f64.powf(decades * i as f64 / count as f64))
                    .collect();
                let mut out: Vec<f64> = pos.iter().rev().map(|x| -x).collect();
                out.push(0.0);
                out.extend(pos);
                out
            }
            FrequencySampling::Points { xi } => xi.clone(),
        }
    }

    pub fn extent(&self) -> f64 {
        self.points().iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Scaling,
    Wavelet,
}

/// Sampled Fourier transform of a 1-D generator.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierProfile1D {
    pub kind: ProfileKind,
    pub xi: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Length of the spatial support interval.
    pub support_radius: f64,
    pub order: u32,
    pub depth: u32,
    /// Sup difference between the last two truncation depths.
    pub truncation_residual: f64,
}

impl FourierProfile1D {
    /// A profile from explicit samples (no generator metadata).
    pub fn from_samples(kind: ProfileKind, xi: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if xi.len() != values.len() {
            return Err(Error::Shape { expected: xi.len(), got: values.len() });
        }
        Ok(FourierProfile1D {
            kind,
            xi,
            values,
            support_radius: 0.0,
            order: 0,
            depth: 0,
            truncation_residual: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// Largest `|value(-xi) - conj(value(xi))|` over mirrored sample pairs.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let mut order: Vec<usize> = (0..self.xi.len()).collect();
        order.sort_by(|&a, &b| self.xi[a].total_cmp(&self.xi[b]));
        let mut worst: f64 = 0.0;
        for (i, &x) in self.xi.iter().enumerate() {
            if x <= 0.0 {
                continue;
            }
            let pos = order.partition_point(|&k| self.xi[k] < -x - 1e-12 * x.max(1.0));
            if let Some(&k) = order.get(pos) {
                if (self.xi[k] + x).abs() <= 1e-12 * x.max(1.0) {
                    worst = worst.max((self.values[k] - self.values[i].conj()).norm());
                }
            }
        }
        worst
    }
}

/// Sample the continuous scaling and wavelet profiles of the order-`order`
/// Daubechies pair.
///
/// Depth grows until successive products differ by less than `1e-10` or
/// `max_depth` is reached; a final difference above `1e-8` is an error.
pub fn build_generators(
    order: u32,
    max_depth: u32,
    sampling: &FrequencySampling,
) -> Result<(FourierProfile1D, FourierProfile1D)> {
    let filter = MirrorFilter::daubechies(order)?;
    if max_depth == 0 {
        return Err(Error::Config("truncation depth must be positive".into()));
    }
    let xi = sampling.points();
    let mut prod = vec![Complex64::new(1.0, 0.0); xi.len()];
    let mut half = vec![Complex64::new(1.0, 0.0); xi.len()];
    let mut prev_phi: Option<Vec<Complex64>> = None;
    let mut prev_psi: Option<Vec<Complex64>> = None;
    let mut depth = 0;
    let mut residual = f64::INFINITY;
    let mut phi = Vec::new();
    let mut psi = Vec::new();
    while depth < max_depth {
        depth += 1;
        for (i, &x) in xi.iter().enumerate() {
            prod[i] *= filter.m0(x / (depth as f64).exp2());
            // half[i] tracks prod_{r=2}^{depth+1} m0(x/2^r) = phi at x/2 with depth factors
            half[i] *= filter.m0(x / (depth as f64 + 1.0).exp2());
        }
        phi = xi.iter().zip(&prod).map(|(&x, p)| p * tail(&filter, x, depth)).collect();
        psi = xi
            .iter()
            .zip(&half)
            .map(|(&x, p)| filter.m1(0.5 * x) * p * tail(&filter, 0.5 * x, depth))
            .collect();
        if let (Some(pp), Some(ps)) = (&prev_phi, &prev_psi) {
            residual = sup_diff(&phi, pp).max(sup_diff(&psi, ps));
            if residual < 1e-10 {
                break;
            }
        }
        prev_phi = Some(phi.clone());
        prev_psi = Some(psi.clone());
    }
    if residual > 1e-8 {
        return Err(Error::Convergence { depth, diff: residual });
    }
    let support = filter.support_length();
    let phi_profile = FourierProfile1D {
        kind: ProfileKind::Scaling,
        xi: xi.clone(),
        values: phi,
        support_radius: support,
        order,
        depth,
        truncation_residual: residual,
    };
    let psi_profile = FourierProfile1D {
        kind: ProfileKind::Wavelet,
        xi,
        values: psi,
        support_radius: support,
        order,
        depth,
        truncation_residual: residual,
    };
    Ok((phi_profile, psi_profile))
}

fn sup_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// `inf_{|xi| <= 1/2} |phi_hat(xi)|` over the profile samples.
pub fn support_floor(phi: &FourierProfile1D) -> Result<f64> {
    let inside: Vec<f64> = phi
        .xi
        .iter()
        .zip(&phi.values)
        .filter(|(x, _)| x.abs() <= 0.5 + 1e-12)
        .map(|(_, v)| v.norm())
        .collect();
    let covers = phi.xi.iter().any(|x| *x <= -0.5 + 1e-12) && phi.xi.iter().any(|x| *x >= 0.5 - 1e-12);
    if inside.is_empty() || !covers {
        return Err(Error::Resolution("profile samples do not cover [-1/2, 1/2]".into()));
    }
    let delta = inside.into_iter().fold(f64::INFINITY, f64::min);
    if delta <= 1e-8 {
        return Err(Error::GeneratorRejected(delta));
    }
    Ok(delta)
}

/// Theoretical decay hypotheses `rho in (0, 2/13)`, `alpha >= 6/rho + 1`,
/// `beta > alpha + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    rho: f64,
    alpha: f64,
    beta: f64,
}

impl DecayParams {
    pub fn new(rho: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 2.0 / 13.0) {
            return Err(Error::Config(format!("rho = {rho} not in (0, 2/13)")));
        }
        if !(alpha >= 6.0 / rho + 1.0) {
            return Err(Error::Config(format!("alpha = {alpha} below 6/rho + 1 = {}", 6.0 / rho + 1.0)));
        }
        if !(beta > alpha + 1.0) {
            return Err(Error::Config(format!("beta = {beta} not above alpha + 1")));
        }
        Ok(DecayParams { rho, alpha, beta })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl Default for DecayParams {
    fn default() -> Self {
        DecayParams { rho: 0.15, alpha: 41.0, beta: 42.5 }
    }
}

/// Log-log fit of a profile near zero (`alpha_hat`) and on its tail envelope
/// (`beta_hat`, the decay exponent), for the profile and its derivative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub constant: f64,
    pub deriv_alpha_hat: f64,
    pub deriv_beta_hat: f64,
    pub meets_params: bool,
    pub degenerate: bool,
    pub warnings: Vec<String>,
}

fn lsq_slope(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 3 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Least-squares line through `(x, y)`, returning `(slope, intercept)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    lsq_slope(xs, ys)
}

fn near_zero_fit(xs: &[f64], mags: &[f64]) -> std::result::Result<(f64, f64), String> {
    let smallest = xs.iter().copied().filter(|x| *x > 0.0).fold(f64::INFINITY, f64::min);
    if !smallest.is_finite() {
        return Err("no positive frequencies sampled".into());
    }
    let lo = smallest.max(1e-3);
    let hi = 10.0 * lo;
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(mags)
        .filter(|(x, m)| **x >= lo && **x <= hi && **m > 1e-14)
        .map(|(x, m)| (x.ln(), m.ln()))
        .unzip();
    lsq_slope(&lx, &ly).ok_or_else(|| format!("near-zero window [{lo:e}, {hi:e}] has too little dynamic range"))
}

fn tail_fit(xs: &[f64], mags: &[f64]) -> std::result::Result<f64, String> {
    let top = xs.iter().copied().fold(0.0, f64::max);
    if top < 16.0 {
        return Err(format!("tail extent {top} too short for an envelope fit"));
    }
    let lo = top / 16.0;
    let bins = 16;
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for b in 0..bins {
        let a = lo * (16f64).powf(b as f64 / bins as f64);
        let z = lo * (16f64).powf((b + 1) as f64 / bins as f64);
        let peak = xs
            .iter()
            .zip(mags)
            .filter(|(x, _)| **x >= a && **x <= z)
            .fold(0.0, |m: f64, (_, v)| m.max(*v));
        if peak > 1e-14 {
            lx.push(((a * z).sqrt()).ln());
            ly.push(peak.ln());
        }
    }
    lsq_slope(&lx, &ly)
        .map(|(s, _)| -s)
        .ok_or_else(|| "tail envelope below 1e-14".into())
}

/// Fit `|psi_hat| ~ |xi|^alpha` near 0 and `~ |xi|^{-beta}` on the tail,
/// plus the same for the centered finite-difference derivative.
pub fn decay_fit(profile: &FourierProfile1D, params: &DecayParams) -> DecayFit {
    let mut pts: Vec<(f64, Complex64)> = profile
        .xi
        .iter()
        .copied()
        .zip(profile.values.iter().copied())
        .filter(|(x, _)| *x > 0.0)
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let mags: Vec<f64> = pts.iter().map(|p| p.1.norm()).collect();
    let mut dxs = Vec::new();
    let mut dmags = Vec::new();
    for i in 1..pts.len().saturating_sub(1) {
        let (x0, y0) = pts[i - 1];
        let (x2, y2) = pts[i + 1];
        dxs.push(pts[i].0);
        dmags.push(((y2 - y0) / (x2 - x0)).norm());
    }

    let mut warnings = Vec::new();
    let mut grab = |r: std::result::Result<f64, String>, what: &str| match r {
        Ok(v) => v,
        Err(e) => {
            warnings.push(format!("fit-degenerate ({what}): {e}"));
            f64::NAN
        }
    };
    let near = near_zero_fit(&xs, &mags);
    let constant = near.as_ref().map(|(_, c)| c.exp()).unwrap_or(f64::NAN);
    let alpha_hat = grab(near.map(|(s, _)| s), "near zero");
    let beta_hat = grab(tail_fit(&xs, &mags), "tail");
    let deriv_alpha_hat = grab(near_zero_fit(&dxs, &dmags).map(|(s, _)| s), "derivative near zero");
    let deriv_beta_hat = grab(tail_fit(&dxs, &dmags), "derivative tail");
    let degenerate = !warnings.is_empty();
    let meets_params = !degenerate
        && alpha_hat >= params.alpha() - 0.05
        && beta_hat >= params.beta() - params.alpha() - 0.05;
    if !meets_params && !degenerate {
        warnings.push(format!(
            "fitted (alpha, beta) = ({alpha_hat:.3}, {beta_hat:.3}) does not meet the decay hypotheses \
             (alpha >= {}, tail exponent >= {})",
            params.alpha(),
            params.beta() - params.alpha()
        ));
    }
    DecayFit {
        alpha_hat,
        beta_hat,
        constant,
        deriv_alpha_hat,
        deriv_beta_hat,
        meets_params,
        degenerate,
        warnings,
    }
}

/// Values of the scaling function at `n / 2^levels`, `n = 0..=(2K-1) 2^levels`,
/// by the cascade (exact values at integers, then dyadic refinement).
pub fn cascade_scaling(filter: &MirrorFilter, levels: u32) -> Vec<f64> {
    let h = filter.taps();
    let len = h.len();
    let span = len - 1;
    // phi(k) for k = 0..=span solves phi(k) = sqrt2 sum_n h_n phi(2k - n)
    let mut at_int = vec![0.0; span + 1];
    if span == 1 {
        at_int[0] = 1.0;
    } else {
        let inner = span - 1;
        let mut mat = vec![vec![0.0; inner + 1]; inner];
        for (row, k) in (1..span).enumerate() {
            for (col, l) in (1..span).enumerate() {
                let n = 2 * k as i64 - l as i64;
                if n >= 0 && (n as usize) < len {
                    mat[row][col] = SQRT_2 * h[n as usize];
                }
            }
            mat[row][row] -= 1.0;
        }
        // replace last equation by the normalisation sum phi(k) = 1
        let last = inner - 1;
        for c in 0..inner {
            mat[last][c] = 1.0;
        }
        mat[last][inner] = 1.0;
        let sol = solve_dense(mat);
        at_int[1..span].copy_from_slice(&sol);
    }
    let mut vals = at_int;
    for _ in 0..levels {
        let fine_len = (vals.len() - 1) * 2 + 1;
        let mut next = vec![0.0; fine_len];
        let coarse = &vals;
        let step = (coarse.len() - 1) / span; // samples per unit at the coarse level
        for (i, slot) in next.iter_mut().enumerate() {
            if i % 2 == 0 {
                *slot = coarse[i / 2];
                continue;
            }
            // x = i / (2 step); phi(x) = sqrt2 sum h_n phi(2x - n)
            let mut acc = 0.0;
            for (n, hn) in h.iter().enumerate() {
                let idx = i as i64 - (n * step) as i64;
                if idx >= 0 && (idx as usize) < coarse.len() {
                    acc += hn * coarse[idx as usize];
                }
            }
            *slot = SQRT_2 * acc;
        }
        vals = next;
    }
    vals
}

/// Wavelet values at `x = (1 - K) + n / 2^levels`, covering `[1-K, K]`.
pub fn cascade_wavelet(filter: &MirrorFilter, levels: u32) -> (f64, Vec<f64>) {
    let phi = cascade_scaling(filter, levels);
    let (first, g) = filter.highpass();
    let span = (filter.taps().len() - 1) as i64;
    let per_unit = 1i64 << levels;
    let start = first / 2;
    let count = span * per_unit + 1;
    let out = (0..count)
        .map(|n| {
            // psi(x) = sqrt2 sum_k g_k phi(2x - k), 2x - k = 2 start - k + 2n / 2^levels
            let acc: f64 = g
                .iter()
                .enumerate()
                .map(|(off, gk)| {
                    let k = first + off as i64;
                    let idx = (2 * start - k) * per_unit + 2 * n;
                    if idx >= 0 && (idx as usize) < phi.len() {
                        gk * phi[idx as usize]
                    } else {
                        0.0
                    }
                })
                .sum();
            SQRT_2 * acc
        })
        .collect();
    (start as f64, out)
}

fn solve_dense(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        a.swap(col, piv);
        let p = a[col][col];
        for row in 0..n {
            if row != col {
                let f = a[row][col] / p;
                if f != 0.0 {
                    for k in col..=n {
                        a[row][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filters_are_orthonormal() {
        for k in 1..=10 {
            let f = MirrorFilter::daubechies(k).unwrap();
            let h = f.taps();
            assert_eq!(h.len(), 2 * k as usize);
            let sum: f64 = h.iter().sum();
            assert!((sum - SQRT_2).abs() < 1e-14, "K={k}");
            for shift in 0..k as usize {
                let dot: f64 = (0..h.len() - 2 * shift).map(|n| h[n] * h[n + 2 * shift]).sum();
                let want = if shift == 0 { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-13, "K={k} shift={shift} dot={dot}");
            }
            for w in [0.0, 0.1, 0.27, 0.4] {
                let q = f.m0(w).norm_sqr() + f.m0(w + 0.5).norm_sqr();
                assert!((q - 1.0).abs() < 1e-13);
            }
        }
        assert!(MirrorFilter::daubechies(0).is_err());
        assert!(MirrorFilter::daubechies(11).is_err());
    }

    #[test]
    fn haar_half_frequency() {
        let f = MirrorFilter::daubechies(1).unwrap();
        assert!((phi_hat(&f, 0.5, 24).norm() - 2.0 / PI).abs() < 1e-12);
        assert!((phi_hat(&f, 0.0, 24) - 1.0).norm() < 1e-15);
        assert!(psi_hat(&f, 0.0, 24).norm() < 1e-15);
    }

    #[test]
    fn haar_matches_closed_form() {
        let f = MirrorFilter::daubechies(1).unwrap();
        for &x in &[0.3, 1.7, -2.25, 13.5] {
            let got = phi_hat(&f, x, 30);
            let want = Complex64::from_polar((PI * x).sin() / (PI * x), -PI * x);
            assert!((got - want).norm() < 1e-12, "xi={x}");
        }
    }

    #[test]
    fn refinement_consistency() {
        let f = MirrorFilter::daubechies(3).unwrap();
        for &x in &[0.25, 0.5, 3.0, -7.5] {
            let lhs = phi_hat_depth(&f, x, 20);
            let rhs = f.m0(x / 2.0) * phi_hat_depth(&f, x / 2.0, 19);
            assert!((lhs - rhs).norm() < 1e-14);
        }
    }

    #[test]
    fn depth_profiles_are_periodic() {
        let f = MirrorFilter::daubechies(4).unwrap();
        let d = 5;
        for &x in &[0.3, 2.0, 11.0] {
            let a = phi_hat_depth(&f, x, d);
            let b = phi_hat_depth(&f, x + 32.0, d);
            assert!((a - b).norm() < 1e-12);
            let a = psi_hat_depth(&f, x, d);
            let b = psi_hat_depth(&f, x + 32.0, d);
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn cascade_integer_values_db2() {
        let f = MirrorFilter::daubechies(2).unwrap();
        let v = cascade_scaling(&f, 0);
        let s3 = 3f64.sqrt();
        let want = [0.0, (1.0 + s3) / 2.0, (1.0 - s3) / 2.0, 0.0];
        for (a, b) in v.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{v:?}");
        }
    }

    #[test]
    fn cascade_partition_of_unity_and_wavelet_mean() {
        let f = MirrorFilter::daubechies(3).unwrap();
        let lv = 6;
        let v = cascade_scaling(&f, lv);
        let per = 1usize << lv;
        // sum_k phi(x + k) = 1 at x = 3/64
        let x0 = 3;
        let s: f64 = (0..5).map(|k| v[x0 + k * per]).sum();
        assert!((s - 1.0).abs() < 1e-10);
        let (_, w) = cascade_wavelet(&f, lv);
        let mean: f64 = w.iter().sum::<f64>() / per as f64;
        assert!(mean.abs() < 1e-10);
        let energy: f64 = w.iter().map(|x| x * x).sum::<f64>() / per as f64;
        assert!((energy - 1.0).abs() < 1e-3, "{energy}");
    }

    #[test]
    fn decay_params_validation() {
        assert!(DecayParams::new(0.15, 41.0, 42.5).is_ok());
        assert!(DecayParams::new(0.2, 41.0, 42.5).is_err());
        assert!(DecayParams::new(0.15, 30.0, 42.5).is_err());
        assert!(DecayParams::new(0.15, 41.0, 41.5).is_err());
    }
}
