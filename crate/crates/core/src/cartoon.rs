//! Cartoon-like phantoms `f = f0 + f1 * chi_B` with a star-shaped region `B`.
//!
//! The boundary is `r(theta) = r0 + sum_k (a_k cos k theta + b_k sin k theta)`
//! around a center; smooth parts are sums of compactly supported polynomial
//! bumps `A (1 - |x - c|^2 / R^2)^3` plus an optional constant on `f1`.
//!
//! Spec file (one key per line, `#` comments, bumps repeatable):
//!
//! ```text
//! center = 0.5 0.5
//! radius_cos = 0.25 0 0.05   # r0 a1 a2 ...
//! radius_sin = 0 0.02        # b1 b2 ...
//! f1_const = 1
//! f0_bump = 0.5 0.5 0.45 0.02  # x y R amplitude
//! ```

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: f64,
}

impl Bump {
    /// Value, gradient and Hessian `(f, [fx, fy], [fxx, fxy, fyy])`.
    pub fn eval(&self, x: f64, y: f64) -> (f64, [f64; 2], [f64; 3]) {
        let r2 = self.radius * self.radius;
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        let u = 1.0 - (dx * dx + dy * dy) / r2;
        if u <= 0.0 {
            return (0.0, [0.0; 2], [0.0; 3]);
        }
        let a = self.amplitude;
        // f = a u^3, du/dx = -2 dx / r2
        let (ux, uy) = (-2.0 * dx / r2, -2.0 * dy / r2);
        let f1 = 3.0 * a * u * u;
        let f2 = 6.0 * a * u;
        let uxx = -2.0 / r2;
        (
            a * u * u * u,
            [f1 * ux, f1 * uy],
            [f2 * ux * ux + f1 * uxx, f2 * ux * uy, f2 * uy * uy + f1 * uxx],
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartoonSpec {
    pub center: [f64; 2],
    /// `r0, a1, a2, ...`
    pub radius_cos: Vec<f64>,
    /// `b1, b2, ...`
    pub radius_sin: Vec<f64>,
    pub f1_const: f64,
    pub f0_bumps: Vec<Bump>,
    pub f1_bumps: Vec<Bump>,
}

impl CartoonSpec {
    pub fn disk(center: [f64; 2], radius: f64) -> Self {
        CartoonSpec {
            center,
            radius_cos: vec![radius],
            radius_sin: vec![],
            f1_const: 1.0,
            f0_bumps: vec![],
            f1_bumps: vec![],
        }
    }

    /// The phantom used by the default N-term experiment.
    pub fn default_phantom() -> Self {
        CartoonSpec {
            center: [0.5, 0.5],
            radius_cos: vec![0.27, 0.0, 0.0, 0.04],
            radius_sin: vec![0.0, 0.025, 0.0, 0.0, 0.01],
            f1_const: 0.8,
            f0_bumps: vec![Bump { center: [0.5, 0.5], radius: 0.45, amplitude: 0.02 }],
            f1_bumps: vec![Bump { center: [0.45, 0.55], radius: 0.3, amplitude: 0.008 }],
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = CartoonSpec {
            center: [0.5, 0.5],
            radius_cos: vec![],
            radius_sin: vec![],
            f1_const: 0.0,
            f0_bumps: vec![],
            f1_bumps: vec![],
        };
        let nums = |key: &str, v: &str| -> Result<Vec<f64>> {
            v.split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| Error::Spec(format!("bad number {t:?} for {key}"))))
                .collect()
        };
        let bump = |key: &str, v: &[f64]| -> Result<Bump> {
            if v.len() != 4 {
                return Err(Error::Spec(format!("{key} needs x y radius amplitude")));
            }
            Ok(Bump { center: [v[0], v[1]], radius: v[2], amplitude: v[3] })
        };
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Spec(format!("line {}: expected key = values", ln + 1)))?;
            let (k, v) = (k.trim(), nums(k.trim(), v)?);
            match k {
                "center" if v.len() == 2 => spec.center = [v[0], v[1]],
                "center" => return Err(Error::Spec("center needs two numbers".into())),
                "radius_cos" => spec.radius_cos = v,
                "radius_sin" => spec.radius_sin = v,
                "f1_const" if v.len() == 1 => spec.f1_const = v[0],
                "f1_const" => return Err(Error::Spec("f1_const needs one number".into())),
                "f0_bump" => spec.f0_bumps.push(bump(k, &v)?),
                "f1_bump" => spec.f1_bumps.push(bump(k, &v)?),
                _ => return Err(Error::Spec(format!("unknown key {k}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let mut s = format!(
            "center = {} {}\nradius_cos = {}\nradius_sin = {}\nf1_const = {}\n",
            self.center[0],
            self.center[1],
            join(&self.radius_cos),
            join(&self.radius_sin),
            self.f1_const
        );
        for (key, list) in [("f0_bump", &self.f0_bumps), ("f1_bump", &self.f1_bumps)] {
            for b in list {
                s += &format!("{key} = {} {} {} {}\n", b.center[0], b.center[1], b.radius, b.amplitude);
            }
        }
        s
    }

    /// `(r, r', r'')` at angle `theta`.
    pub fn radius(&self, theta: f64) -> (f64, f64, f64) {
        let mut r = self.radius_cos.first().copied().unwrap_or(0.0);
        let (mut d1, mut d2) = (0.0, 0.0);
        for (k, &a) in self.radius_cos.iter().enumerate().skip(1) {
            let kf = k as f64;
            let (s, c) = (kf * theta).sin_cos();
            r += a * c;
            d1 -= a * kf * s;
            d2 -= a * kf * kf * c;
        }
        for (k, &b) in self.radius_sin.iter().enumerate() {
            let kf = (k + 1) as f64;
            let (s, c) = (kf * theta).sin_cos();
            r += b * s;
            d1 += b * kf * c;
            d2 -= b * kf * kf * s;
        }
        (r, d1, d2)
    }

    /// Sum of coefficient magnitudes beyond `r0`: `r >= r0 - bound` everywhere.
    pub fn radius_variation_bound(&self) -> f64 {
        self.radius_cos.iter().skip(1).chain(&self.radius_sin).map(|v| v.abs()).sum()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        let rho = dx.hypot(dy);
        if rho == 0.0 {
            return self.radius(0.0).0 > 0.0;
        }
        rho < self.radius(dy.atan2(dx)).0
    }

    pub fn f0(&self, x: f64, y: f64) -> f64 {
        self.f0_bumps.iter().map(|b| b.eval(x, y).0).sum()
    }

    pub fn f1(&self, x: f64, y: f64) -> f64 {
        self.f1_const + self.f1_bumps.iter().map(|b| b.eval(x, y).0).sum::<f64>()
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let inside = if self.contains(x, y) { self.f1(x, y) } else { 0.0 };
        self.f0(x, y) + inside
    }

    pub fn validate(&self) -> Result<()> {
        let r0 = self.radius_cos.first().copied().unwrap_or(0.0);
        if self.radius_cos.is_empty() || r0 <= self.radius_variation_bound() {
            return Err(Error::Spec(format!(
                "r0 = {r0} must exceed the sum of higher coefficient magnitudes {}",
                self.radius_variation_bound()
            )));
        }
        let rmax = r0 + self.radius_variation_bound();
        let [cx, cy] = self.center;
        if cx - rmax < 0.0 || cx + rmax > 1.0 || cy - rmax < 0.0 || cy + rmax > 1.0 {
            return Err(Error::Spec(format!("region of radius up to {rmax} at ({cx}, {cy}) leaks outside [0,1]^2")));
        }
        for b in self.f0_bumps.iter().chain(&self.f1_bumps) {
            let [bx, by] = b.center;
            if !(b.radius > 0.0) || bx - b.radius < 0.0 || bx + b.radius > 1.0 || by - b.radius < 0.0 || by + b.radius > 1.0 {
                return Err(Error::Spec(format!("bump at ({bx}, {by}) radius {} leaks outside [0,1]^2", b.radius)));
            }
        }
        let rep = curvature_report(self);
        if rep.c2_norm_f0 > 1.0 + 1e-9 || rep.c2_norm_f1 > 1.0 + 1e-9 {
            return Err(Error::Spec(format!(
                "C2 norms {:.4}, {:.4} exceed 1",
                rep.c2_norm_f0, rep.c2_norm_f1
            )));
        }
        Ok(())
    }
}

/// Samples at pixel centers `((n1 + 1/2) / N, (n2 + 1/2) / N)`, row-major in `n1`.
pub fn generate(spec: &CartoonSpec, n: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Spec("grid side must be positive".into()));
    }
    let h = 1.0 / n as f64;
    Ok((0..n * n)
        .into_par_iter()
        .map(|i| spec.value(((i / n) as f64 + 0.5) * h, ((i % n) as f64 + 0.5) * h))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub max_abs_kappa: f64,
    pub min_r: f64,
    /// Grid estimates of `max(sup|f|, sup|Df|, sup|D^2 f|)`.
    pub c2_norm_f0: f64,
    pub c2_norm_f1: f64,
}

/// `kappa = (r^2 + 2 r'^2 - r r'') / (r^2 + r'^2)^{3/2}`.
pub fn kappa(r: f64, d1: f64, d2: f64) -> f64 {
    (r * r + 2.0 * d1 * d1 - r * d2) / (r * r + d1 * d1).powf(1.5)
}

fn c2_norm(bumps: &[Bump], constant: f64, res: usize) -> f64 {
    let h = 1.0 / res as f64;
    let grid_max = (0..=res)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 * h;
            (0..=res).fold(0.0f64, |m, k| {
                let y = k as f64 * h;
                let (mut f, mut g, mut hh) = (constant, [0.0; 2], [0.0; 3]);
                for b in bumps {
                    let (bf, bg, bh) = b.eval(x, y);
                    f += bf;
                    g[0] += bg[0];
                    g[1] += bg[1];
                    hh[0] += bh[0];
                    hh[1] += bh[1];
                    hh[2] += bh[2];
                }
                m.max(f.abs()).max(g[0].abs()).max(g[1].abs()).max(hh.iter().fold(0.0f64, |a, v| a.max(v.abs())))
            })
        })
        .reduce(|| 0.0, f64::max);
    // bump maxima sit at their centers; include them exactly
    bumps.iter().fold(grid_max, |m, b| m.max((b.amplitude + constant).abs()))
}

pub fn curvature_report(spec: &CartoonSpec) -> CurvatureReport {
    let samples = 8192;
    let (mut kmax, mut rmin) = (0.0f64, f64::INFINITY);
    for i in 0..samples {
        let th = 2.0 * PI * i as f64 / samples as f64;
        let (r, d1, d2) = spec.radius(th);
        kmax = kmax.max(kappa(r, d1, d2).abs());
        rmin = rmin.min(r);
    }
    CurvatureReport {
        max_abs_kappa: kmax,
        min_r: rmin,
        c2_norm_f0: c2_norm(&spec.f0_bumps, 0.0, 256),
        c2_norm_f1: c2_norm(&spec.f1_bumps, spec.f1_const, 256),
    }
}

/// `||f_N - f_{2N}||_2` with `f_N` replicated onto the finer grid.
pub fn refinement_gap(spec: &CartoonSpec, n: usize) -> Result<f64> {
    let coarse = generate(spec, n)?;
    let fine = generate(spec, 2 * n)?;
    let m = 2 * n;
    let s: f64 = (0..m * m)
        .map(|i| {
            let (a, b) = (i / m, i % m);
            (fine[i] - coarse[(a / 2) * n + b / 2]).powi(2)
        })
        .sum();
    Ok((s / (m * m) as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_values() {
        let spec = CartoonSpec::disk([0.5, 0.5], 0.25);
        assert_eq!(spec.value(0.5, 0.5), 1.0);
        assert_eq!(spec.value(0.9, 0.9), 0.0);
        let f = generate(&spec, 64).unwrap();
        assert!(f.iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn disk_norm_converges() {
        let spec = CartoonSpec::disk([0.5, 0.5], 0.25);
        let want = PI.sqrt() * 0.25;
        for n in [64usize, 128, 256] {
            let f = generate(&spec, n).unwrap();
            let nrm = (f.iter().map(|v| v * v).sum::<f64>() / (n * n) as f64).sqrt();
            assert!((nrm - want).abs() < 2.0 / n as f64, "{n} {nrm}");
        }
    }

    #[test]
    fn circle_curvature() {
        let spec = CartoonSpec::disk([0.5, 0.5], 0.2);
        let rep = curvature_report(&spec);
        assert!((rep.max_abs_kappa - 5.0).abs() < 1e-12);
        assert!((rep.min_r - 0.2).abs() < 1e-15);
        assert!((kappa(0.3, 0.0, 0.0) - 1.0 / 0.3).abs() < 1e-12);
    }

    #[test]
    fn cosine_boundary_curvature_matches_dense_search() {
        let mut spec = CartoonSpec::disk([0.5, 0.5], 0.25);
        spec.radius_cos = vec![0.25, 0.0, 0.05];
        let rep = curvature_report(&spec);
        // golden-section refinement around the coarse maximizer
        let k = |t: f64| {
            let r = 0.25 + 0.05 * (2.0 * t).cos();
            kappa(r, -0.1 * (2.0 * t).sin(), -0.2 * (2.0 * t).cos()).abs()
        };
        let (mut best_t, mut best) = (0.0, 0.0);
        for i in 0..1000 {
            let t = 2.0 * PI * i as f64 / 1000.0;
            if k(t) > best {
                best = k(t);
                best_t = t;
            }
        }
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (best_t - 0.01, best_t + 0.01);
        for _ in 0..100 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if k(c) > k(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let oracle = k(0.5 * (a + b));
        assert!((rep.max_abs_kappa - oracle).abs() < 1e-6 * oracle, "{} {oracle}", rep.max_abs_kappa);
    }

    #[test]
    fn f1_zero_gives_sampled_f0() {
        let mut spec = CartoonSpec::default_phantom();
        spec.f1_const = 0.0;
        spec.f1_bumps.clear();
        let n = 32;
        let f = generate(&spec, n).unwrap();
        for i in 0..n * n {
            let (x, y) = (((i / n) as f64 + 0.5) / n as f64, ((i % n) as f64 + 0.5) / n as f64);
            assert_eq!(f[i], spec.f0(x, y));
        }
    }

    #[test]
    fn spec_parse_round_trip_and_errors() {
        let spec = CartoonSpec::default_phantom();
        let back = CartoonSpec::parse(&spec.to_text()).unwrap();
        assert_eq!(back, spec);
        assert!(CartoonSpec::parse("center = 0.1 0.5\nradius_cos = 0.25\n").is_err());
        assert!(CartoonSpec::parse("radius_cos = 0.1 0.2\n").is_err());
        assert!(CartoonSpec::parse("radius_cos = 0.2\nf0_bump = 0.5 0.5 0.1 1\n").is_err());
        assert!(CartoonSpec::parse("wat = 1\n").is_err());
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let b = Bump { center: [0.4, 0.6], radius: 0.3, amplitude: 0.5 };
        let (x, y, h) = (0.5, 0.55, 1e-5);
        let (_, g, hs) = b.eval(x, y);
        let fx = (b.eval(x + h, y).0 - b.eval(x - h, y).0) / (2.0 * h);
        let fy = (b.eval(x, y + h).0 - b.eval(x, y - h).0) / (2.0 * h);
        assert!((g[0] - fx).abs() < 1e-8 && (g[1] - fy).abs() < 1e-8);
        let fxy = (b.eval(x + h, y).1[1] - b.eval(x - h, y).1[1]) / (2.0 * h);
        let fyy = (b.eval(x, y + h).1[1] - b.eval(x, y - h).1[1]) / (2.0 * h);
        assert!((hs[1] - fxy).abs() < 1e-6 && (hs[2] - fyy).abs() < 1e-6);
    }
}
