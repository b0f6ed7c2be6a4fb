//! Directional window, per-shear filters `G_s`, the `Theta` profiles and the
//! dual denominator `W`.
//!
//! The window is separable, `g_hat(xi) = gain * eta_hat(xi1) * theta_hat(xi2)`
//! with `eta` a Daubechies wavelet and `theta_hat(u) = phi_hat(u/2)`. On a
//! `2^L` grid the dilate at scale `j` uses the finite products
//! `eta_hat(x, L-j)` and `theta_hat(y, L-floor(j/2)) = phi_hat(y/2, L-floor(j/2)-1)`,
//! which keeps every term a table lookup.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{
    build_generators, cascade_scaling, cascade_wavelet, decay_fit, phi_hat, phi_hat_depth, psi_hat, psi_hat_depth,
    support_floor, DecayParams, FrequencySampling, MirrorFilter,
};
use crate::grid::FourierGrid;
use crate::index::{floor_half, shear_set, ShearParam};
use crate::onb::DyadicTables;

/// Window construction parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    /// Vanishing moments of the Daubechies pair behind `g`.
    pub order: u32,
    /// Amplitude; `None` scales `g` so the conic floor equals one.
    pub gain: Option<f64>,
    /// Truncation depth for continuous evaluations.
    pub depth: u32,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig { order: 4, gain: None, depth: 24 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpatial {
    /// Lower-left corner of the sampled box.
    pub origin: [f64; 2],
    pub step: f64,
    pub shape: [usize; 2],
    /// Row-major, first index along `x1`.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectionalWindow {
    filter: MirrorFilter,
    pub order: u32,
    pub gain: f64,
    pub depth: u32,
    /// `inf |g_hat|` over the cone `1/2 < |xi1| < 1`, `|xi2| < |xi1|`.
    pub delta_g: f64,
    /// `[[x1_lo, x1_hi], [x2_lo, x2_hi]]`.
    pub support_box: [[f64; 2]; 2],
    pub spatial: WindowSpatial,
    pub alpha_hat_1: f64,
    pub beta_hat_1: f64,
    pub beta_hat_2: f64,
}

impl DirectionalWindow {
    pub fn filter(&self) -> &MirrorFilter {
        &self.filter
    }

    /// Continuous `g_hat(xi)`.
    pub fn value(&self, xi: [f64; 2]) -> Complex64 {
        self.gain * psi_hat(&self.filter, xi[0], self.depth) * phi_hat(&self.filter, 0.5 * xi[1], self.depth)
    }

    /// The grid dilate `g_j` evaluated at `(x, y)` (finite products for a `2^l` grid).
    pub fn value_at_scale(&self, l: u32, j: i32, x: f64, y: f64) -> Complex64 {
        let d1 = (l as i32 - j).max(0) as u32;
        let d2 = (l as i32 - floor_half(j) - 1).max(0) as u32;
        self.gain * psi_hat_depth(&self.filter, x, d1) * phi_hat_depth(&self.filter, 0.5 * y, d2)
    }

    /// Continuous `g_hat` at the centered integer frequencies of `grid`.
    pub fn fourier_on_grid(&self, grid: &FourierGrid) -> Vec<Complex64> {
        let n = grid.n();
        let mut out = Vec::with_capacity(n * n);
        for i1 in 0..n {
            for i2 in 0..n {
                out.push(self.value([grid.freq(i1) as f64, grid.freq(i2) as f64]));
            }
        }
        out
    }

    /// Largest `|g|` outside the declared support box, relative to the peak.
    pub fn outside_mass_ratio(&self) -> f64 {
        let sp = &self.spatial;
        let peak = sp.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst: f64 = 0.0;
        for i in 0..sp.shape[0] {
            for k in 0..sp.shape[1] {
                let x1 = sp.origin[0] + i as f64 * sp.step;
                let x2 = sp.origin[1] + k as f64 * sp.step;
                let inside = x1 >= self.support_box[0][0] - 1e-12
                    && x1 <= self.support_box[0][1] + 1e-12
                    && x2 >= self.support_box[1][0] - 1e-12
                    && x2 <= self.support_box[1][1] + 1e-12;
                if !inside {
                    worst = worst.max(sp.values[i * sp.shape[1] + k].abs());
                }
            }
        }
        if peak == 0.0 {
            0.0
        } else {
            worst / peak
        }
    }
}

/// `inf` of the unscaled `|eta_hat(xi1) theta_hat(xi2)|` over the cone, by dense scan.
fn conic_floor(filter: &MirrorFilter, depth: u32) -> f64 {
    let steps = 240;
    let mut lo = f64::INFINITY;
    for a in 0..=steps {
        let x1 = 0.5 + 0.5 * a as f64 / steps as f64;
        let e = psi_hat(filter, x1, depth).norm();
        for b in 0..=steps {
            let x2 = -x1 + 2.0 * x1 * b as f64 / steps as f64;
            let v = e * phi_hat(filter, 0.5 * x2, depth).norm();
            lo = lo.min(v);
        }
    }
    lo
}

/// Build the separable directional window and validate the conic floor.
pub fn build_window(config: &WindowConfig) -> Result<DirectionalWindow> {
    let filter = MirrorFilter::daubechies(config.order)?;
    if let Some(g) = config.gain {
        if !(g > 0.0) {
            return Err(Error::Config(format!("window gain {g} must be positive")));
        }
    }
    let raw = conic_floor(&filter, config.depth);
    let gain = config.gain.unwrap_or(if raw > 0.0 { 1.0 / raw } else { 1.0 });
    let delta_g = gain * raw;
    if !(delta_g > 1e-8) {
        return Err(Error::WindowRejected(delta_g));
    }
    let k = config.order as f64;
    // eta on [1-K, K], theta(x) = 2 phi(2x) on [0, (2K-1)/2]
    let support_box = [[1.0 - k, k], [0.0, (2.0 * k - 1.0) / 2.0]];
    let levels = 4;
    let (w0, wv) = cascade_wavelet(&filter, levels);
    let ph = cascade_scaling(&filter, levels + 1);
    let step = 1.0 / (1u64 << levels) as f64;
    let pad = 1.0;
    let origin = [support_box[0][0] - pad, support_box[1][0] - pad];
    let n1 = ((support_box[0][1] - support_box[0][0] + 2.0 * pad) / step).round() as usize + 1;
    let n2 = ((support_box[1][1] - support_box[1][0] + 2.0 * pad) / step).round() as usize + 1;
    let eta_at = |x: f64| -> f64 {
        let idx = ((x - w0) / step).round();
        if idx < 0.0 || idx as usize >= wv.len() {
            0.0
        } else {
            wv[idx as usize]
        }
    };
    // theta(x) = 2 phi(2x); phi sampled at step/2
    let theta_at = |x: f64| -> f64 {
        let idx = (2.0 * x / (step / 2.0)).round();
        if idx < 0.0 || idx as usize >= ph.len() {
            0.0
        } else {
            2.0 * ph[idx as usize]
        }
    };
    let mut values = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        let x1 = origin[0] + i as f64 * step;
        let e = eta_at(x1);
        for kk in 0..n2 {
            let x2 = origin[1] + kk as f64 * step;
            values.push(gain * e * theta_at(x2));
        }
    }
    let spatial = WindowSpatial { origin, step, shape: [n1, n2], values };

    let sampling = FrequencySampling::decay_default(256.0);
    let (phi_p, psi_p) = build_generators(config.order, config.depth.max(24), &sampling)?;
    let params = DecayParams::default();
    let fit1 = decay_fit(&psi_p, &params);
    let fit2 = decay_fit(&phi_p, &params);
    Ok(DirectionalWindow {
        filter,
        order: config.order,
        gain,
        depth: config.depth,
        delta_g,
        support_box,
        spatial,
        alpha_hat_1: fit1.alpha_hat,
        beta_hat_1: fit1.beta_hat,
        beta_hat_2: fit2.beta_hat,
    })
}

/// Per-grid lookup data for evaluating `G_s` quickly.
pub struct FilterTables {
    grid: FourierGrid,
    window: DirectionalWindow,
    win: DyadicTables,
    /// `|eta_hat(xi1/2^j, L-j)|^2` by `j`.
    energy_x1: Vec<Vec<f64>>,
    /// `|phi_hat(xi, L)|^2` of the generator.
    phi0: Vec<f64>,
    zero_window: bool,
}

impl FilterTables {
    pub fn new(grid: &FourierGrid, generator: &MirrorFilter, window: &DirectionalWindow, t_max: u32) -> Self {
        let l = grid.log2();
        let n = grid.n();
        let win = DyadicTables::new(window.filter.clone(), l, t_max);
        let gen = DyadicTables::new(generator.clone(), l, 0);
        let g2 = window.gain * window.gain;
        let energy_x1 = (0..l)
            .map(|j| {
                (0..n)
                    .map(|i| {
                        let xi = grid.freq(i);
                        let v = win.m1(0, xi, j + 1) * win.low_product(0, xi, j, 2, l - j);
                        g2 * v.norm_sqr()
                    })
                    .collect()
            })
            .collect();
        let phi0 = (0..n)
            .map(|i| gen.low_product(0, grid.freq(i), 0, 1, l).norm_sqr())
            .collect();
        FilterTables { grid: grid.clone(), window: window.clone(), win, energy_x1, phi0, zero_window: false }
    }

    /// Degenerate tables with `g = 0` (only the `phi^0` term survives).
    pub fn without_window(grid: &FourierGrid, generator: &MirrorFilter, window: &DirectionalWindow, t_max: u32) -> Self {
        let mut t = FilterTables::new(grid, generator, window, t_max);
        t.zero_window = true;
        t
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn window(&self) -> &DirectionalWindow {
        &self.window
    }

    /// `prod_{r=2}^{L-b} |m0(w/2^{t+b+r})|^2` over `w mod 2^{t+L}`.
    fn theta_table(&self, t: u32, b: u32) -> Vec<f64> {
        let l = self.grid.log2();
        let period = 1i64 << (t + l);
        (0..period)
            .map(|w| self.win.low_product(t, w, b, 2, l - b).norm_sqr())
            .collect()
    }

    /// Truncated `G_s` on the grid plus the sup of its last term.
    pub fn filter_g(&self, s: ShearParam, jmax: u32) -> Result<(Vec<f64>, f64)> {
        let l = self.grid.log2();
        if jmax >= l {
            return Err(Error::Config(format!("jmax {jmax} must be below log2 N = {l}")));
        }
        if s.t() > self.win.t_max() {
            return Err(Error::Domain(format!("shear {s} outside the prepared shear set")));
        }
        let n = self.grid.n();
        let (t, q) = (s.t(), s.q());
        let mask = (1i64 << (t + l)) - 1;
        let mut out = vec![0.0; n * n];
        if s.is_zero() {
            for i1 in 0..n {
                for i2 in 0..n {
                    out[i1 * n + i2] = self.phi0[i1] * self.phi0[i2];
                }
            }
        }
        let j0 = s.min_scale();
        let mut tail = 0.0f64;
        if self.zero_window || j0 > jmax {
            return Ok((out, tail));
        }
        let mut cached_b = u32::MAX;
        let mut theta = Vec::new();
        for j in j0..=jmax {
            let b = j / 2;
            if b != cached_b {
                theta = self.theta_table(t, b);
                cached_b = b;
            }
            let ex = &self.energy_x1[j as usize];
            for i1 in 0..n {
                let e = ex[i1];
                if e == 0.0 {
                    continue;
                }
                let qx = q * self.grid.freq(i1);
                let row = &mut out[i1 * n..(i1 + 1) * n];
                for (i2, slot) in row.iter_mut().enumerate() {
                    let w = (self.grid.freq(i2) << t) - qx;
                    let v = e * theta[(w & mask) as usize];
                    *slot += v;
                    if j == jmax {
                        tail = tail.max(v);
                    }
                }
            }
        }
        Ok((out, tail))
    }
}

/// `G_s` on a grid (convenience wrapper building fresh tables).
pub fn filter_g(
    s: ShearParam,
    grid: &FourierGrid,
    jmax: u32,
    generator: &MirrorFilter,
    window: &DirectionalWindow,
) -> Result<Vec<f64>> {
    let tables = FilterTables::new(grid, generator, window, s.t());
    tables.filter_g(s, jmax).map(|r| r.0)
}

/// `Theta_hat` (`ell = None`) or `Theta_hat_ell` sampled on the grid, with the
/// grid dilates of the window and scales up to `jmax`.
pub fn theta_profiles(
    ell: Option<u32>,
    grid: &FourierGrid,
    jmax: u32,
    generator: &MirrorFilter,
    window: &DirectionalWindow,
) -> Result<Vec<f64>> {
    if let Some(e) = ell {
        if jmax < e {
            return Err(Error::Config(format!("jmax {jmax} below ell {e}")));
        }
    }
    let l = grid.log2();
    let n = grid.n();
    let lowest: i32 = ell.map(|e| -(e as i32)).unwrap_or(0);
    let mut out = vec![0.0; n * n];
    for i1 in 0..n {
        let x1 = grid.freq(i1) as f64;
        for i2 in 0..n {
            let x2 = grid.freq(i2) as f64;
            let mut acc = 0.0;
            if ell.is_none() {
                acc += (phi_hat_depth(generator, x1, l) * phi_hat_depth(generator, x2, l)).norm_sqr();
            }
            for j in lowest..=jmax as i32 {
                let a = (-(j as f64)).exp2() * x1;
                let b = (-(floor_half(j) as f64)).exp2() * x2;
                acc += window.value_at_scale(l, j, a, b).norm_sqr();
            }
            out[i1 * n + i2] = acc;
        }
    }
    Ok(out)
}

/// All `G_s` for `s` in the shear set of `jmax`, with `W` and the frame bounds.
#[derive(Clone, Debug)]
pub struct FilterBank {
    grid: FourierGrid,
    pub jmax: u32,
    pub shears: Vec<ShearParam>,
    pub g: Vec<Vec<f64>>,
    pub tails: Vec<f64>,
    pub w: Vec<f64>,
    pub a_hat: f64,
    pub b_hat: f64,
    pub delta_phi: f64,
    pub delta_g: f64,
    pub lower_bound_cert: f64,
}

impl FilterBank {
    pub fn build(tables: &FilterTables, jmax: u32, delta_phi: f64) -> Result<Self> {
        let grid = tables.grid().clone();
        let shears = shear_set(jmax);
        let built: Vec<(Vec<f64>, f64)> = shears
            .par_iter()
            .map(|s| tables.filter_g(*s, jmax))
            .collect::<Result<_>>()?;
        let (g, tails): (Vec<Vec<f64>>, Vec<f64>) = built.into_iter().unzip();
        let delta_g = if tables.zero_window { 0.0 } else { tables.window().delta_g };
        let mut bank = FilterBank {
            grid,
            jmax,
            shears,
            g,
            tails,
            w: Vec::new(),
            a_hat: 0.0,
            b_hat: 0.0,
            delta_phi,
            delta_g,
            lower_bound_cert: 0.0,
        };
        bank.w = frame_denominator(&bank.grid, &bank.g);
        let (a, b) = bank.w.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        bank.a_hat = a;
        bank.b_hat = b;
        bank.lower_bound_cert = delta_phi.powi(2).min(delta_g).powi(2);
        if !(a > 0.0) {
            return Err(Error::InvalidSystem(format!("frame function minimum {a:e} is not positive")));
        }
        Ok(bank)
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn shear_index(&self, s: ShearParam) -> Option<usize> {
        self.shears.iter().position(|x| *x == s)
    }
}

/// `W(xi) = sum_s G_s(xi)^2 + G_s(R xi)^2`.
pub fn frame_denominator(grid: &FourierGrid, g: &[Vec<f64>]) -> Vec<f64> {
    let n = grid.n();
    let mut w = vec![0.0; n * n];
    for gs in g {
        for i1 in 0..n {
            for i2 in 0..n {
                let (r1, r2) = grid.rotate_index(i1, i2);
                let a = gs[i1 * n + i2];
                let b = gs[r1 * n + r2];
                w[i1 * n + i2] += a * a + b * b;
            }
        }
    }
    w
}

/// `(W, A_hat, B_hat, certificate)` for a built bank.
pub fn frame_multiplier(bank: &FilterBank) -> (&[f64], f64, f64, f64) {
    (&bank.w, bank.a_hat, bank.b_hat, bank.lower_bound_cert)
}

/// `sup |sum_s G_s - (|phi0|^2 + sum_j sum_|k|<=2^ceil(j/2) |g(S_k^{-T} A_j^{-1} xi)|^2)|`,
/// the right side summed independently over integer shears.
pub fn partition_identity_residual(bank: &FilterBank, tables: &FilterTables) -> Result<f64> {
    let grid = bank.grid();
    let n = grid.n();
    let l = grid.log2();
    let mut lhs = vec![0.0; n * n];
    for gs in &bank.g {
        for (a, b) in lhs.iter_mut().zip(gs) {
            *a += b;
        }
    }
    let mut rhs = vec![0.0; n * n];
    for i1 in 0..n {
        for i2 in 0..n {
            rhs[i1 * n + i2] = tables.phi0[i1] * tables.phi0[i2];
        }
    }
    if !tables.zero_window {
        let t_top = bank.jmax.div_ceil(2);
        let mask = (1i64 << (t_top + l)) - 1;
        for j in 0..=bank.jmax {
            let e = j.div_ceil(2);
            let b = j / 2;
            // |g(S_k^{-T} A_j^{-1} xi)|^2: second argument (xi2 - k xi1 / 2^e) / 2^b,
            // i.e. w = 2^{t_top} xi2 - k 2^{t_top - e} xi1 on the finest table
            let theta = tables.theta_table(t_top, b);
            let ex = &tables.energy_x1[j as usize];
            let kmax = 1i64 << e;
            for k in -kmax..=kmax {
                let kk = k << (t_top - e);
                for i1 in 0..n {
                    let e1 = ex[i1];
                    if e1 == 0.0 {
                        continue;
                    }
                    let kx = kk * grid.freq(i1);
                    for i2 in 0..n {
                        let w = (grid.freq(i2) << t_top) - kx;
                        rhs[i1 * n + i2] += e1 * theta[(w & mask) as usize];
                    }
                }
            }
        }
    }
    let res = lhs.iter().zip(&rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if res > 1e-9 {
        return Err(Error::Indexing(res));
    }
    Ok(res)
}

/// Support floor `delta_phi` of the generator's scaling function.
pub fn generator_floor(order: u32, depth: u32) -> Result<f64> {
    let (phi, _) = build_generators(order, depth, &FrequencySampling::Uniform { extent: 0.5, step: 1.0 / 512.0 })?;
    support_floor(&phi)
}

/// `||Theta_ell * psi^p||_1` for the cone-0 zero shear, computed with
/// continuous profiles on a periodic box of side `period` sampled at `1/density`.
pub fn l1_diagnostic(
    window: &DirectionalWindow,
    generator: &MirrorFilter,
    ell: u32,
    p: u32,
    period: f64,
    density: usize,
) -> f64 {
    use rustfft::FftPlanner;
    let n = (period * density as f64).round() as usize;
    let depth = window.depth;
    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(n);
    let freq = |i: usize| -> f64 {
        let k = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
        k / period
    };
    let d = p.saturating_sub(1);
    let sd = (d as f64).exp2();
    // Theta_ell * psi^p = sum_i a_i(x1) b_i(x2): separable term per scale i
    let mut total = vec![0.0f64; n * n];
    let imax = (period * density as f64).log2().ceil() as i32 + 1;
    for i in -(ell as i32)..=imax {
        let mut a: Vec<Complex64> = (0..n)
            .map(|k| {
                let x = freq(k);
                let e = window.gain * psi_hat(window.filter(), x * (-(i as f64)).exp2(), depth);
                e.norm_sqr() * psi_hat(generator, x, depth)
            })
            .collect();
        let mut b: Vec<Complex64> = (0..n)
            .map(|k| {
                let x = freq(k);
                let th = phi_hat(window.filter(), 0.5 * x * (-(floor_half(i) as f64)).exp2(), depth);
                let at = if p == 0 {
                    phi_hat(generator, x, depth)
                } else {
                    psi_hat(generator, x / sd, depth) / sd.sqrt()
                };
                th.norm_sqr() * at
            })
            .collect();
        ifft.process(&mut a);
        ifft.process(&mut b);
        let scale = 1.0 / period;
        for r in 0..n {
            let ar = a[r].re * scale;
            if ar == 0.0 {
                continue;
            }
            for c in 0..n {
                total[r * n + c] += ar * b[c].re * scale;
            }
        }
    }
    let cell = 1.0 / density as f64;
    total.iter().map(|v| v.abs()).sum::<f64>() * cell * cell
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window() -> DirectionalWindow {
        build_window(&WindowConfig::default()).unwrap()
    }

    #[test]
    fn window_basic_properties() {
        let w = window();
        assert!((w.delta_g - 1.0).abs() < 1e-12);
        for x2 in [-3.0, 0.0, 0.7, 11.0] {
            assert!(w.value([0.0, x2]).norm() < 1e-14);
        }
        assert!(w.value([0.75, 0.74]).norm() >= w.delta_g * (1.0 - 1e-9));
        assert!(w.outside_mass_ratio() < 1e-10);
    }

    #[test]
    fn degenerate_window_keeps_phi0() {
        let grid = FourierGrid::new(16).unwrap();
        let gen = MirrorFilter::daubechies(2).unwrap();
        let tables = FilterTables::without_window(&grid, &gen, &window(), 2);
        let (g0, _) = tables.filter_g(ShearParam::ZERO, 3).unwrap();
        let (g1, _) = tables.filter_g("1/2".parse().unwrap(), 3).unwrap();
        assert!((g0[0] - 1.0).abs() < 1e-15);
        assert!(g1.iter().all(|v| *v == 0.0));
        let bank = FilterBank::build(&tables, 3, 0.5).unwrap();
        assert!((bank.w[0] - 2.0).abs() < 1e-14);
        assert_eq!(partition_identity_residual(&bank, &tables).unwrap(), 0.0);
    }

    #[test]
    fn filter_matches_direct_sum() {
        let grid = FourierGrid::new(32).unwrap();
        let gen = MirrorFilter::daubechies(3).unwrap();
        let w = window();
        let s: ShearParam = "1/2".parse().unwrap();
        let g = filter_g(s, &grid, 4, &gen, &w).unwrap();
        for (x1, x2) in [(5i64, -3i64), (-16, 7), (9, 9)] {
            let mut want = 0.0;
            for j in 1..=4i32 {
                let a = x1 as f64 / (j as f64).exp2();
                let b = (x2 as f64 - 0.5 * x1 as f64) / (floor_half(j) as f64).exp2();
                want += w.value_at_scale(5, j, a, b).norm_sqr();
            }
            let got = g[grid.index(x1) * 32 + grid.index(x2)];
            assert!((got - want).abs() < 1e-12 * want.max(1.0), "{got} {want}");
        }
    }
}
