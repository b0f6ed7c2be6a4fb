//! N-term approximation experiments, rate fits and coefficient-decay probes.
//!
//! Errors are relative `L^2` on the torus grid (pixel samples), standing in for
//! `L^2(R^2)`; every report records that.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{build_generators, decay_fit, linear_fit, DecayParams, FrequencySampling};
use crate::system::{CoefficientTable, DualizableSystem, TIE_BREAK_POLICY};

pub const NORM_NOTE: &str = "relative L2 on the N x N torus grid (pixel samples) in place of L2(R^2)";

fn rel_err(f: &[f64], g: &[f64]) -> f64 {
    let num: f64 = f.iter().zip(g).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = f.iter().map(|a| a * a).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Best-N approximation through the dual frame: `(f_N, relative error)`.
pub fn nterm_approx(f: &[f64], budget: usize, sys: &DualizableSystem) -> Result<(Vec<f64>, f64)> {
    let c = sys.analyze(f)?;
    let order = c.ranking();
    nterm_from(f, &c, &order, budget, sys)
}

fn nterm_from(
    f: &[f64],
    c: &CoefficientTable,
    order: &[u32],
    budget: usize,
    sys: &DualizableSystem,
) -> Result<(Vec<f64>, f64)> {
    if budget == 0 || budget > order.len() {
        return Err(Error::Domain(format!("budget {budget} outside 1..={}", order.len())));
    }
    let fnn = sys.synthesize_dual(&c.masked(&order[..budget]))?;
    let e = rel_err(f, &fnn);
    Ok((fnn, e))
}

/// Selected flat positions for a budget (tie-break order), for determinism checks.
pub fn nterm_selection(f: &[f64], budget: usize, sys: &DualizableSystem) -> Result<Vec<u32>> {
    let c = sys.analyze(f)?;
    let mut order = c.ranking();
    if budget > order.len() {
        return Err(Error::Domain(format!("budget {budget} exceeds {}", order.len())));
    }
    order.truncate(budget);
    Ok(order)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub points: Vec<(usize, f64)>,
    pub label: String,
    pub phantom: Option<String>,
    pub config_hash: Option<String>,
    pub tie_break: String,
    pub norm: String,
}

impl RateCurve {
    /// Checks `N` strictly increasing. Errors need not be monotone for a
    /// non-tight frame; see [`max_increase`](Self::max_increase).
    pub fn new(label: &str, points: Vec<(usize, f64)>) -> Result<Self> {
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Domain("term counts must increase strictly".into()));
            }
        }
        Ok(RateCurve {
            points,
            label: label.into(),
            phantom: None,
            config_hash: None,
            tie_break: TIE_BREAK_POLICY.into(),
            norm: NORM_NOTE.into(),
        })
    }

    /// Largest `err(N_{i+1}) - err(N_i)` (nonpositive for a monotone curve).
    pub fn max_increase(&self) -> f64 {
        self.points.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Dual-frame N-term curve over `budgets`, from one analysis.
pub fn shearlet_curve(f: &[f64], sys: &DualizableSystem, budgets: &[usize]) -> Result<RateCurve> {
    let c = sys.analyze(f)?;
    let order = c.ranking();
    let pts = budgets
        .iter()
        .map(|&b| nterm_from(f, &c, &order, b, sys).map(|(_, e)| (b, e)))
        .collect::<Result<Vec<_>>>()?;
    RateCurve::new("dualizable_shearlet", pts)
}

/// Separable baseline: the unsheared per-shear basis used alone as an ONB.
pub fn tensor_curve(f: &[f64], sys: &DualizableSystem, budgets: &[usize]) -> Result<RateCurve> {
    let grid = sys.grid();
    let spec = grid.forward_real(f)?;
    let basis = sys.basis(0);
    let c = basis.analyze(&spec);
    let mags: Vec<f64> = c.iter().map(|v| v.norm_sqr()).collect();
    let mut order: Vec<u32> = (0..c.len() as u32).collect();
    order.sort_unstable_by(|&a, &b| mags[b as usize].total_cmp(&mags[a as usize]).then(a.cmp(&b)));
    let mut pts = Vec::new();
    for &b in budgets {
        if b == 0 || b > c.len() {
            return Err(Error::Domain(format!("budget {b} outside 1..={}", c.len())));
        }
        let mut kept = vec![Complex64::default(); c.len()];
        for &i in &order[..b] {
            kept[i as usize] = c[i as usize];
        }
        let back = grid.inverse_real(&basis.synthesize(&kept))?;
        pts.push((b, rel_err(f, &back)));
    }
    RateCurve::new("tensor_wavelet", pts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub log_corrected_slope: f64,
    /// `slope - (-1)`.
    pub gap_to_benchmark: f64,
    /// `slope - (-1/2)`.
    pub gap_to_tensor_reference: f64,
    pub degenerate: bool,
}

/// Least-squares slope of `log err` against `log N`, plain and with `log N` divided out.
pub fn rate_fit(curve: &RateCurve) -> Result<RateFit> {
    let pts: Vec<&(usize, f64)> = curve.points.iter().filter(|p| p.1 > 0.0 && p.0 > 1).collect();
    if pts.len() < 5 {
        return Err(Error::Fit(format!("need at least 5 points with positive error, have {}", pts.len())));
    }
    let lo = pts.iter().map(|p| p.0).min().unwrap() as f64;
    let hi = pts.iter().map(|p| p.0).max().unwrap() as f64;
    if (hi / lo).log10() < 1.5 - 1e-12 {
        return Err(Error::Fit(format!("term counts span {:.2} decades, need 1.5", (hi / lo).log10())));
    }
    let xs: Vec<f64> = pts.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let yc: Vec<f64> = pts.iter().map(|p| (p.1 / (p.0 as f64).ln()).ln()).collect();
    let (slope, intercept) = linear_fit(&xs, &ys).ok_or_else(|| Error::Fit("singular fit".into()))?;
    let (lc, _) = linear_fit(&xs, &yc).ok_or_else(|| Error::Fit("singular fit".into()))?;
    let spread = ys.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v)) - ys.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    Ok(RateFit {
        slope,
        intercept,
        log_corrected_slope: lc,
        gap_to_benchmark: slope + 1.0,
        gap_to_tensor_reference: slope + 0.5,
        degenerate: spread < 1e-9,
    })
}

/// CSV with one row per budget: `N,err_shearlet,err_tensor`.
pub fn curves_csv(shearlet: &RateCurve, tensor: Option<&RateCurve>) -> String {
    let mut s = String::from(if tensor.is_some() { "N,err_shearlet,err_tensor\n" } else { "N,err_shearlet\n" });
    for (i, (n, e)) in shearlet.points.iter().enumerate() {
        let _ = write!(s, "{n},{e:e}");
        if let Some(t) = tensor {
            let _ = write!(s, ",{:e}", t.points[i].1);
        }
        s.push('\n');
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    /// `(j, max |coeff| at scale j)`; coarse slices excluded.
    pub by_scale: Vec<(i32, f64)>,
    /// `(p, max |coeff| at level p)`.
    pub by_level: Vec<(u32, f64)>,
    pub j_slope: Option<f64>,
    pub p_slope: Option<f64>,
    /// Generator near-zero exponent; the bound predicts `p_slope <= -alpha_hat / 2`.
    pub alpha_hat: f64,
    pub degenerate: bool,
    pub sup_norm: f64,
}

/// Per-scale and per-level coefficient maxima with `log2` slope fits.
/// `max_j`/`max_p` restrict the fitted range (defaults: everything).
pub fn decay_probe(f: &[f64], sys: &DualizableSystem, max_j: Option<u32>, max_p: Option<u32>) -> Result<DecayReport> {
    let c = sys.analyze(f)?;
    let by_scale: Vec<(i32, f64)> = c
        .max_by_scale()
        .into_iter()
        .filter(|(j, _)| *j >= 0 && max_j.is_none_or(|m| *j <= m as i32))
        .collect();
    let by_level: Vec<(u32, f64)> = c.max_by_level().into_iter().filter(|(p, _)| max_p.is_none_or(|m| *p <= m)).collect();
    let fit = |pts: Vec<(f64, f64)>| -> Option<f64> {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().filter(|p| p.1 > 1e-300).map(|(a, b)| (a, b.log2())).unzip();
        if x.len() < 3 {
            return None;
        }
        linear_fit(&x, &y).map(|v| v.0)
    };
    let j_slope = fit(by_scale.iter().map(|&(j, m)| (j as f64, m)).collect());
    let p_slope = fit(by_level.iter().map(|&(p, m)| (p as f64, m)).collect());
    let degenerate = j_slope.is_none() || p_slope.is_none();
    let (_, psi) = build_generators(sys.config().order, sys.config().depth, &FrequencySampling::decay_default(256.0))?;
    let alpha_hat = decay_fit(&psi, &DecayParams::default()).alpha_hat;
    Ok(DecayReport {
        by_scale,
        by_level,
        j_slope,
        p_slope,
        alpha_hat,
        degenerate,
        sup_norm: f.iter().fold(0.0, |m, v| m.max(v.abs())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::SystemConfig;

    fn curve(f: impl Fn(f64) -> f64) -> RateCurve {
        let pts = (0..12).map(|k| 1usize << (k + 2)).map(|n| (n, f(n as f64))).collect();
        RateCurve::new("t", pts).unwrap()
    }

    #[test]
    fn exact_power_law() {
        let r = rate_fit(&curve(|n| 1.0 / n)).unwrap();
        assert!((r.slope + 1.0).abs() < 0.01);
        assert!(r.gap_to_benchmark.abs() < 0.01);
        assert!(!r.degenerate);
    }

    #[test]
    fn log_corrected() {
        let r = rate_fit(&curve(|n| n.ln() / n)).unwrap();
        assert!((r.log_corrected_slope + 1.0).abs() < 0.02);
    }

    #[test]
    fn flat_is_degenerate() {
        let r = rate_fit(&curve(|_| 0.3)).unwrap();
        assert!(r.slope.abs() < 1e-12 && r.degenerate);
    }

    #[test]
    fn too_few_points() {
        let c = RateCurve::new("t", vec![(10, 1.0), (100, 0.1), (1000, 0.01)]).unwrap();
        assert!(rate_fit(&c).is_err());
        let c = RateCurve::new("t", (1..=6).map(|k| (10 * k, 1.0 / k as f64)).collect()).unwrap();
        assert!(rate_fit(&c).is_err());
        assert!(RateCurve::new("t", vec![(10, 0.1), (20, 0.2)]).unwrap().max_increase() > 0.0);
        assert!(RateCurve::new("t", vec![(10, 0.1), (10, 0.1)]).is_err());
    }

    #[test]
    fn full_budget_reconstructs_and_curve_is_monotone() {
        let sys = DualizableSystem::new(SystemConfig { n: 16, order: 2, ..SystemConfig::default() }).unwrap();
        let f: Vec<f64> = (0..256).map(|i| ((i * 31 % 17) as f64).cos()).collect();
        let total = sys.coefficient_count();
        let (_, e) = nterm_approx(&f, total, &sys).unwrap();
        assert!(e < 1e-10);
        assert!(nterm_approx(&f, total + 1, &sys).is_err());
        let c = shearlet_curve(&f, &sys, &[1, 4, 16, 64, 256, 1024, total]).unwrap();
        assert!(c.points.last().unwrap().1 < 1e-10);
        assert!(c.max_increase() <= 1e-12, "{:?}", c.points);
    }

    #[test]
    fn zero_signal_probe_is_degenerate() {
        let sys = DualizableSystem::new(SystemConfig { n: 16, order: 2, ..SystemConfig::default() }).unwrap();
        let r = decay_probe(&vec![0.0; 256], &sys, None, None).unwrap();
        assert!(r.degenerate);
        assert!(r.by_scale.iter().all(|p| p.1 == 0.0));
    }
}
