//! Spatial support of primal elements in the plane.
//!
//! On the unit torus the coarse window dilates are wider than the domain, so
//! the support box `S_s^{-1} A_{j0}^{-1} [-c, c]^2` is measured in `R^2`
//! instead. In sheared coordinates `u = S_s x` the element
//! `G_s * psi_{j,s,0,p}` is a finite sum of separable terms
//!
//! `[s=0] (R_phi * psi1_j)(u1) (R_phi * X_j)(u2)
//!   + sum_{j'} gain^2 2^{j'+b'} (R_eta(2^{j'} .) * psi1_j)(u1) (R_theta(2^{b'} .) * X_j)(u2)`
//!
//! with `R_f` autocorrelations, `psi1_j = psi1(2^j .)` and `X_j` the `x2`
//! factor at level `p`. Each 1-D factor is built from exact dyadic cascade
//! samples with FFT convolutions; the shear only enters through `j0(s)`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{build_window, WindowConfig};
use crate::generators::{cascade_scaling, cascade_wavelet, MirrorFilter};
use crate::index::ShearParam;

/// Samples `v[k]` of a function at `x = (org + k) 2^-level`.
#[derive(Clone, Debug)]
struct Samples {
    org: i64,
    level: u32,
    v: Vec<f64>,
}

impl Samples {
    fn end(&self) -> i64 {
        self.org + self.v.len() as i64
    }

    /// Keep the samples on the coarser lattice `2^-level`.
    fn coarsen(&self, level: u32) -> Samples {
        assert!(level <= self.level);
        let stride = 1i64 << (self.level - level);
        let first = (self.org).rem_euclid(stride);
        let skip = if first == 0 { 0 } else { stride - first };
        let v: Vec<f64> = self.v.iter().skip(skip as usize).step_by(stride as usize).copied().collect();
        Samples { org: (self.org + skip) / stride, level, v }
    }

    /// `x -> f(2^e x)`: same values, lattice refined by `e` levels.
    fn dilate(mut self, e: u32) -> Samples {
        self.level += e;
        self
    }

    fn scale(mut self, a: f64) -> Samples {
        self.v.iter_mut().for_each(|x| *x *= a);
        self
    }
}

struct Conv {
    planner: FftPlanner<f64>,
}

impl Conv {
    fn plan(&mut self, n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
        (self.planner.plan_fft_forward(n), self.planner.plan_fft_inverse(n))
    }

    /// `(a * b)(x) = int a(t) b(x - t) dt` on a shared lattice.
    fn conv(&mut self, a: &Samples, b: &Samples) -> Samples {
        assert_eq!(a.level, b.level);
        let len = a.v.len() + b.v.len() - 1;
        let n = len.next_power_of_two();
        let (fwd, inv) = self.plan(n);
        let mut fa: Vec<Complex64> = a.v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        fa.resize(n, Complex64::default());
        let mut fb: Vec<Complex64> = b.v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        fb.resize(n, Complex64::default());
        fwd.process(&mut fa);
        fwd.process(&mut fb);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x *= y;
        }
        inv.process(&mut fa);
        let h = (-(a.level as f64)).exp2();
        let s = h / n as f64;
        Samples { org: a.org + b.org, level: a.level, v: fa[..len].iter().map(|z| z.re * s).collect() }
    }

    /// `R(x) = int f(t) f(t + x) dt`.
    fn autocorr(&mut self, f: &Samples) -> Samples {
        let rev = Samples { org: -(f.end() - 1), level: f.level, v: f.v.iter().rev().copied().collect() };
        self.conv(&rev, f)
    }
}

fn scaling(filter: &MirrorFilter, level: u32) -> Samples {
    Samples { org: 0, level, v: cascade_scaling(filter, level) }
}

fn wavelet(filter: &MirrorFilter, level: u32) -> Samples {
    let (start, v) = cascade_wavelet(filter, level);
    Samples { org: (start as i64) << level, level, v }
}

/// Settings for the plane support fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportProbe {
    /// Generator order.
    pub order: u32,
    pub window: WindowConfig,
    /// Relative threshold against the element peak.
    pub threshold: f64,
    /// Finest window scale is `j + extra_scales`.
    pub extra_scales: u32,
    /// Lattice levels per unit of the finest factor.
    pub resolution: u32,
    /// Longest axis of the 2-D evaluation grid.
    pub max_grid: usize,
}

impl Default for SupportProbe {
    fn default() -> Self {
        SupportProbe {
            order: 4,
            window: WindowConfig::default(),
            threshold: 1e-6,
            extra_scales: 3,
            resolution: 6,
            max_grid: 2048,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneSupport {
    pub j0: u32,
    pub j: u32,
    pub p: u32,
    /// Half-widths of the box in `A_{j0} u` coordinates.
    pub c1: f64,
    pub c2: f64,
    /// `max(c1, c2)`.
    pub c: f64,
    /// Box center in `u`.
    pub center: [f64; 2],
}

/// Half-extent of `{|E| > threshold * peak}` for the element at `(j, s, m = 0, p)`.
pub fn plane_support(probe: &SupportProbe, s: ShearParam, j: u32, p: u32) -> Result<PlaneSupport> {
    if !(probe.threshold > 0.0 && probe.threshold < 1.0) {
        return Err(Error::Domain(format!("threshold {} not in (0, 1)", probe.threshold)));
    }
    let j0 = s.min_scale();
    if j < j0 {
        return Err(Error::Domain(format!("scale {j} below j0 = {j0} of shear {s}")));
    }
    let gen = MirrorFilter::daubechies(probe.order)?;
    let window = build_window(&probe.window)?;
    let wfil = window.filter().clone();
    let b = j / 2;
    let d = p.saturating_sub(1);
    let top = j + probe.extra_scales;
    // u1 lattice: fine enough for psi1(2^top .); u2 for the x2 factor and theta
    let lv1 = top + probe.resolution;
    let lv2 = (top / 2 + 1).max(b + d) + probe.resolution;
    let mut cv = Conv { planner: FftPlanner::new() };

    // element factors
    let psi1 = wavelet(&gen, lv1 - j).dilate(j);
    let x2 = if p == 0 { scaling(&gen, lv2 - b).dilate(b) } else { wavelet(&gen, lv2 - b - d).dilate(b + d) };

    let mut terms: Vec<(Samples, Samples)> = Vec::new();
    // autocorrelations at extra levels for quadrature accuracy
    let extra = 3;
    if s.is_zero() {
        let rphi1 = cv.autocorr(&scaling(&gen, lv1 + extra)).coarsen(lv1);
        let rphi2 = cv.autocorr(&scaling(&gen, lv2 + extra)).coarsen(lv2);
        terms.push((cv.conv(&rphi1, &psi1), cv.conv(&rphi2, &x2)));
    }
    let g2 = window.gain * window.gain;
    for jp in j0..=top {
        let bp = jp / 2;
        let reta = cv.autocorr(&wavelet(&wfil, lv1 - jp + extra)).coarsen(lv1 - jp).dilate(jp);
        // R_theta(x) = 2 R_phi(2x)
        let rth = cv.autocorr(&scaling(&wfil, lv2 - bp - 1 + extra)).coarsen(lv2 - bp - 1).dilate(bp + 1).scale(2.0);
        let w = g2 * ((jp + bp) as f64).exp2();
        terms.push((cv.conv(&reta, &psi1).scale(w), cv.conv(&rth, &x2)));
    }

    // common index ranges, then a coarse 2-D evaluation
    let (lo1, hi1) = terms.iter().fold((i64::MAX, i64::MIN), |(a, b), t| (a.min(t.0.org), b.max(t.0.end())));
    let (lo2, hi2) = terms.iter().fold((i64::MAX, i64::MIN), |(a, b), t| (a.min(t.1.org), b.max(t.1.end())));
    let stride1 = (((hi1 - lo1) as usize).div_ceil(probe.max_grid)).max(1) as i64;
    let stride2 = (((hi2 - lo2) as usize).div_ceil(probe.max_grid)).max(1) as i64;
    let n1 = ((hi1 - lo1) / stride1 + 1) as usize;
    let n2 = ((hi2 - lo2) / stride2 + 1) as usize;
    let sample = |f: &Samples, idx: i64| -> f64 {
        let k = idx - f.org;
        if k < 0 || k >= f.v.len() as i64 {
            0.0
        } else {
            f.v[k as usize]
        }
    };
    let rows: Vec<Vec<f64>> =
        terms.iter().map(|t| (0..n1).map(|i| sample(&t.0, lo1 + i as i64 * stride1)).collect()).collect();
    let cols: Vec<Vec<f64>> =
        terms.iter().map(|t| (0..n2).map(|k| sample(&t.1, lo2 + k as i64 * stride2)).collect()).collect();
    let mut vals = vec![0.0f64; n1 * n2];
    for (r, c) in rows.iter().zip(&cols) {
        for i in 0..n1 {
            let a = r[i];
            if a == 0.0 {
                continue;
            }
            let row = &mut vals[i * n2..(i + 1) * n2];
            for (slot, bv) in row.iter_mut().zip(c) {
                *slot += a * bv;
            }
        }
    }
    let peak = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Err(Error::Domain("element vanishes".into()));
    }
    let cut = probe.threshold * peak;
    let (mut i_lo, mut i_hi, mut k_lo, mut k_hi) = (usize::MAX, 0usize, usize::MAX, 0usize);
    for i in 0..n1 {
        for k in 0..n2 {
            if vals[i * n2 + k].abs() > cut {
                i_lo = i_lo.min(i);
                i_hi = i_hi.max(i);
                k_lo = k_lo.min(k);
                k_hi = k_hi.max(k);
            }
        }
    }
    let h1 = stride1 as f64 * (-(lv1 as f64)).exp2();
    let h2 = stride2 as f64 * (-(lv2 as f64)).exp2();
    let u1 = |i: usize| lo1 as f64 * (-(lv1 as f64)).exp2() + i as f64 * h1;
    let u2 = |k: usize| lo2 as f64 * (-(lv2 as f64)).exp2() + k as f64 * h2;
    // widen by one coarse cell on each side (the true edge lies between samples)
    let c1 = (j0 as f64).exp2() * ((u1(i_hi) - u1(i_lo)) / 2.0 + h1);
    let c2 = ((j0 / 2) as f64).exp2() * ((u2(k_hi) - u2(k_lo)) / 2.0 + h2);
    Ok(PlaneSupport {
        j0,
        j,
        p,
        c1,
        c2,
        c: c1.max(c2),
        center: [(u1(i_hi) + u1(i_lo)) / 2.0, (u2(k_hi) + u2(k_lo)) / 2.0],
    })
}

/// Support constants over `j0..=j0+span` for one shear and level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapScan {
    pub shear: String,
    pub p: u32,
    pub fits: Vec<PlaneSupport>,
    /// `(max c - min c) / max c`.
    pub variation: f64,
    /// Least-squares slope of `c` against `j`.
    pub trend: f64,
    /// `c` at `j0`, the per-system cap.
    pub cap: f64,
}

pub fn cap_scan(probe: &SupportProbe, s: ShearParam, p: u32, span: u32) -> Result<CapScan> {
    let j0 = s.min_scale();
    let fits = (j0..=j0 + span).map(|j| plane_support(probe, s, j, p)).collect::<Result<Vec<_>>>()?;
    let cs: Vec<f64> = fits.iter().map(|f| f.c).collect();
    let mx = cs.iter().fold(0.0f64, |m, v| m.max(*v));
    let mn = cs.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let js: Vec<f64> = fits.iter().map(|f| f.j as f64).collect();
    let trend = crate::generators::linear_fit(&js, &cs).map(|v| v.0).unwrap_or(0.0);
    Ok(CapScan { shear: s.to_string(), p, cap: cs[0], fits, variation: (mx - mn) / mx, trend })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn autocorrelation_of_scaling_is_interpolating() {
        let f = MirrorFilter::daubechies(3).unwrap();
        let mut cv = Conv { planner: FftPlanner::new() };
        let r = cv.autocorr(&scaling(&f, 8));
        // R(n) = delta_n from orthonormality of integer shifts
        for n in -4i64..=4 {
            let idx = (n << 8) - r.org;
            let want = if n == 0 { 1.0 } else { 0.0 };
            assert!((r.v[idx as usize] - want).abs() < 1e-4, "{n} {}", r.v[idx as usize]);
        }
    }

    #[test]
    fn coarsen_keeps_lattice_points() {
        let s = Samples { org: -5, level: 3, v: (0..20).map(|k| (k as f64 - 5.0) / 8.0).collect() };
        let c = s.coarsen(1);
        for (k, v) in c.v.iter().enumerate() {
            assert!((v - (c.org + k as i64) as f64 / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn shear_enters_only_through_j0() {
        let probe = SupportProbe { max_grid: 512, ..SupportProbe::default() };
        let a = plane_support(&probe, "1/2".parse().unwrap(), 2, 0).unwrap();
        let b = plane_support(&probe, "-1/2".parse().unwrap(), 2, 0).unwrap();
        assert_eq!(a.c, b.c);
        assert!(a.c > 0.0 && a.c.is_finite());
    }
}
