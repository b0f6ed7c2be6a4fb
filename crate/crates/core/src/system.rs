//! The dualizable shearlet system: analysis, closed-form dual synthesis and
//! element realization on the torus, for both frequency cones.
//!
//! Cone 0 analyzes `f_hat` directly; cone 1 analyzes `f_hat o R^{-1}` with the
//! same filters and bases (`R` the quarter turn). Synthesis accumulates
//! `G_s * (ONB synthesis)` per cone, maps cone 1 back through `R`, and divides
//! by `W`. Reconstruction is exact because `sum |G_s|^2 + |G_s o R|^2 = W`
//! pointwise and each per-shear family is a complete ONB.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{build_window, generator_floor, DirectionalWindow, FilterBank, FilterTables, WindowConfig};
use crate::generators::{phi_hat_depth, psi_hat_depth, MirrorFilter};
use crate::grid::{FourierGrid, GridSpec};
use crate::index::{ceil_half, k_for, LambdaIndex, ShearParam};
use crate::onb::{AtomKind, OnbTables, ShearBasis, SliceSpec};

/// Parameters of a system on one grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Grid side `N` (power of two).
    pub n: usize,
    /// Vanishing moments of the generator pair.
    pub order: u32,
    pub window: WindowConfig,
    /// Largest filter scale; `None` means `log2 N - 1`.
    pub jmax: Option<u32>,
    /// Truncation depth for continuous profile checks.
    pub depth: u32,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig { n: 256, order: 4, window: WindowConfig::default(), jmax: None, depth: 24 }
    }
}

impl SystemConfig {
    pub fn with_n(n: usize) -> Self {
        SystemConfig { n, ..SystemConfig::default() }
    }

    pub fn resolved_jmax(&self) -> Result<u32> {
        if self.n < 4 || !self.n.is_power_of_two() {
            return Err(Error::Config(format!("grid side {} must be a power of two >= 4", self.n)));
        }
        let l = self.n.trailing_zeros();
        let j = self.jmax.unwrap_or(l - 1);
        if j >= l {
            return Err(Error::Config(format!("jmax {j} must be below log2 N = {l}")));
        }
        Ok(j)
    }
}

/// Which of the two systems an element belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Primal,
    Dual,
}

pub struct DualizableSystem {
    config: SystemConfig,
    grid: FourierGrid,
    jmax: u32,
    generator: MirrorFilter,
    window: DirectionalWindow,
    delta_phi: f64,
    tables: FilterTables,
    bank: FilterBank,
    bases: Vec<ShearBasis>,
}

impl std::fmt::Debug for DualizableSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DualizableSystem")
            .field("n", &self.grid.n())
            .field("jmax", &self.jmax)
            .field("shears", &self.bank.shears.len())
            .finish()
    }
}

impl DualizableSystem {
    pub fn new(config: SystemConfig) -> Result<Self> {
        let jmax = config.resolved_jmax()?;
        let grid = FourierGrid::new(config.n)?;
        let generator = MirrorFilter::daubechies(config.order)?;
        let window = build_window(&config.window)?;
        let delta_phi = generator_floor(config.order, config.depth)?;
        let t_max = ceil_half(jmax);
        let tables = FilterTables::new(&grid, &generator, &window, t_max);
        let bank = FilterBank::build(&tables, jmax, delta_phi)?;
        let onb = Arc::new(OnbTables::new(&grid, generator.clone(), t_max));
        let bases = bank
            .shears
            .iter()
            .map(|s| ShearBasis::new(onb.clone(), *s))
            .collect::<Result<Vec<_>>>()?;
        Ok(DualizableSystem { config, grid, jmax, generator, window, delta_phi, tables, bank, bases })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn jmax(&self) -> u32 {
        self.jmax
    }

    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }

    pub fn filter_tables(&self) -> &FilterTables {
        &self.tables
    }

    pub fn window(&self) -> &DirectionalWindow {
        &self.window
    }

    pub fn generator(&self) -> &MirrorFilter {
        &self.generator
    }

    pub fn delta_phi(&self) -> f64 {
        self.delta_phi
    }

    pub fn shears(&self) -> &[ShearParam] {
        &self.bank.shears
    }

    pub fn basis(&self, shear_index: usize) -> &ShearBasis {
        &self.bases[shear_index]
    }

    /// Number of coefficients, `2 |S| N^2`.
    pub fn coefficient_count(&self) -> usize {
        2 * self.bases.iter().map(|b| b.total_len()).sum::<usize>()
    }

    /// Coefficients `<f, psi^l_lambda>` of real samples `f`.
    pub fn analyze(&self, f: &[f64]) -> Result<CoefficientTable> {
        let spec = self.grid.forward_real(f)?;
        self.analyze_spectrum(&spec)
    }

    /// Coefficients from a normalized spectrum (FFT order).
    pub fn analyze_spectrum(&self, spectrum: &[Complex64]) -> Result<CoefficientTable> {
        self.grid.check_len(spectrum.len())?;
        let rotated = self.grid.rotate_spectrum(spectrum);
        let jobs: Vec<(u8, usize)> = (0..2u8)
            .flat_map(|c| (0..self.bases.len()).map(move |k| (c, k)))
            .collect();
        let blocks: Vec<CoefficientBlock> = jobs
            .par_iter()
            .map(|&(cone, k)| {
                let src = if cone == 0 { spectrum } else { &rotated[..] };
                let g = &self.bank.g[k];
                let h: Vec<Complex64> = src.iter().zip(g).map(|(v, w)| v * w).collect();
                let basis = &self.bases[k];
                CoefficientBlock {
                    cone,
                    shear: basis.shear(),
                    slices: basis.slices().to_vec(),
                    offsets: basis.offsets().to_vec(),
                    data: basis.analyze(&h),
                }
            })
            .collect();
        Ok(CoefficientTable { grid: self.grid.spec(), jmax: self.jmax, blocks })
    }

    fn check_table(&self, coeffs: &CoefficientTable) -> Result<()> {
        if coeffs.grid != self.grid.spec() {
            return Err(Error::Shape { expected: self.grid.n(), got: coeffs.grid.n });
        }
        if coeffs.blocks.len() != 2 * self.bases.len() {
            return Err(Error::Shape { expected: 2 * self.bases.len(), got: coeffs.blocks.len() });
        }
        for (b, blk) in coeffs.blocks.iter().enumerate() {
            let want = self.bases[b % self.bases.len()].total_len();
            if blk.data.len() != want {
                return Err(Error::Shape { expected: want, got: blk.data.len() });
            }
        }
        Ok(())
    }

    /// Spectrum of the dual synthesis `sum_lambda c_lambda psi~_lambda`.
    pub fn synthesize_dual_spectrum(&self, coeffs: &CoefficientTable) -> Result<Vec<Complex64>> {
        self.check_table(coeffs)?;
        let n = self.grid.n();
        let ns = self.bases.len();
        let partial: Vec<(u8, Vec<Complex64>)> = coeffs
            .blocks
            .par_iter()
            .enumerate()
            .filter(|(_, blk)| blk.data.iter().any(|v| v.re != 0.0 || v.im != 0.0))
            .map(|(b, blk)| {
                let k = b % ns;
                let mut y = self.bases[k].synthesize(&blk.data);
                for (v, g) in y.iter_mut().zip(&self.bank.g[k]) {
                    *v *= g;
                }
                (blk.cone, y)
            })
            .collect();
        let mut y0 = vec![Complex64::default(); n * n];
        let mut y1 = vec![Complex64::default(); n * n];
        for (cone, y) in partial {
            let dst = if cone == 0 { &mut y0 } else { &mut y1 };
            for (a, b) in dst.iter_mut().zip(&y) {
                *a += b;
            }
        }
        let mut out = vec![Complex64::default(); n * n];
        for i1 in 0..n {
            for i2 in 0..n {
                let (r1, r2) = self.grid.rotate_index(i1, i2);
                let idx = i1 * n + i2;
                out[idx] = (y0[idx] + y1[r1 * n + r2]) / self.bank.w[idx];
            }
        }
        Ok(out)
    }

    /// Real samples of the dual synthesis.
    pub fn synthesize_dual(&self, coeffs: &CoefficientTable) -> Result<Vec<f64>> {
        let spec = self.synthesize_dual_spectrum(coeffs)?;
        self.grid.inverse_real(&spec)
    }

    fn locate(&self, lambda: &LambdaIndex) -> Result<(usize, usize, SliceSpec)> {
        lambda.validate()?;
        let k = self
            .bank
            .shear_index(lambda.s)
            .ok_or_else(|| Error::Domain(format!("shear {} not in the system's shear set", lambda.s)))?;
        let basis = &self.bases[k];
        let (kind, jj) = if lambda.is_coarse() {
            (AtomKind::Scaling, lambda.s.min_scale())
        } else {
            (AtomKind::Wavelet, lambda.j as u32)
        };
        let slice = basis
            .slice_index(kind, jj, lambda.p)
            .ok_or_else(|| Error::Domain(format!("index {lambda:?} outside the truncation")))?;
        Ok((k, slice, basis.slices()[slice]))
    }

    /// Cone-0 spectrum `G_s e_hat` of the primal element at `lambda` (cone ignored).
    fn cone0_spectrum(&self, lambda: &LambdaIndex) -> Result<Vec<Complex64>> {
        let (k, slice, _) = self.locate(lambda)?;
        let mut e = self.bases[k].element_spectrum(slice, lambda.m);
        for (v, g) in e.iter_mut().zip(&self.bank.g[k]) {
            *v *= g;
        }
        Ok(e)
    }

    fn to_cone(&self, cone: u8, spec0: Vec<Complex64>) -> Vec<Complex64> {
        if cone == 0 {
            return spec0;
        }
        let n = self.grid.n();
        let mut out = vec![Complex64::default(); n * n];
        for i1 in 0..n {
            for i2 in 0..n {
                let (r1, r2) = self.grid.rotate_index(i1, i2);
                out[i1 * n + i2] = spec0[r1 * n + r2];
            }
        }
        out
    }

    /// Spectrum of the primal or dual element.
    pub fn element_spectrum(&self, lambda: &LambdaIndex, which: ElementKind) -> Result<Vec<Complex64>> {
        let spec = self.to_cone(lambda.cone, self.cone0_spectrum(lambda)?);
        Ok(match which {
            ElementKind::Primal => spec,
            ElementKind::Dual => spec.iter().zip(&self.bank.w).map(|(v, w)| v / w).collect(),
        })
    }

    /// Complex spatial samples of an element (imaginary part only from Nyquist terms).
    pub fn element_spatial_complex(&self, lambda: &LambdaIndex, which: ElementKind) -> Result<Vec<Complex64>> {
        let mut s = self.element_spectrum(lambda, which)?;
        self.grid.ifft2(&mut s);
        Ok(s)
    }

    pub fn element_spatial(&self, lambda: &LambdaIndex, which: ElementKind) -> Result<Vec<f64>> {
        Ok(self.element_spatial_complex(lambda, which)?.into_iter().map(|v| v.re).collect())
    }

    /// The primal element computed in the rotated-sheared frame
    /// `eta = S_k^{-T} A_j^{-1} xi`: profile `Theta(eta) psi^p(eta)` with the
    /// `Theta` of the anchored dilations, evaluated directly (no tables).
    pub fn element_theta_spectrum(&self, lambda: &LambdaIndex) -> Result<Vec<Complex64>> {
        let (_, _, spec) = self.locate(lambda)?;
        let l = self.grid.log2();
        let n = self.grid.n();
        let jj = spec.jj;
        let b = jj / 2;
        let j0 = lambda.s.min_scale();
        let k = k_for(lambda.s, jj)? as f64;
        let amp = (-((jj + b) as f64) / 2.0).exp2();
        let d = spec.d();
        let sd = (d as f64).exp2();
        let inv_a = (-(jj as f64)).exp2();
        let inv_b = (-(b as f64)).exp2();
        let gen = &self.generator;
        let (m1, m2) = (lambda.m.0 as f64, lambda.m.1 as f64);
        let mut out = Vec::with_capacity(n * n);
        for i1 in 0..n {
            let xi1 = self.grid.freq(i1) as f64;
            for i2 in 0..n {
                let xi2 = self.grid.freq(i2) as f64;
                let e1 = xi1 * inv_a;
                let e2 = xi2 * inv_b - k * xi1 * inv_a;
                let mut theta = 0.0;
                if lambda.s.is_zero() {
                    let a1 = e1 * (jj as f64).exp2();
                    let a2 = e2 * (b as f64).exp2();
                    theta += (phi_hat_depth(gen, a1, l) * phi_hat_depth(gen, a2, l)).norm_sqr();
                }
                for i in (j0 as i32 - jj as i32)..=(self.jmax as i32 - jj as i32) {
                    let jp = jj as i32 + i;
                    let x = e1 * (-(i as f64)).exp2();
                    let y = e2 * ((b as i32 - jp.div_euclid(2)) as f64).exp2();
                    theta += self.window.value_at_scale(l, jp, x, y).norm_sqr();
                }
                let x1 = match spec.kind {
                    AtomKind::Scaling => phi_hat_depth(gen, e1, l - jj),
                    AtomKind::Wavelet => psi_hat_depth(gen, e1, l - jj),
                };
                let x2 = if spec.p == 0 {
                    phi_hat_depth(gen, e2, l - b)
                } else {
                    psi_hat_depth(gen, e2 / sd, l - b - d) / sd.sqrt()
                };
                let phase = Complex64::from_polar(1.0, -2.0 * PI * (m1 * e1 + m2 * e2 / sd));
                out.push(theta * amp * x1 * x2 * phase);
            }
        }
        Ok(self.to_cone(lambda.cone, out))
    }

    /// Spatial samples of the primal element via the `Theta` path.
    pub fn element_theta_spatial(&self, lambda: &LambdaIndex) -> Result<Vec<Complex64>> {
        let mut s = self.element_theta_spectrum(lambda)?;
        self.grid.ifft2(&mut s);
        Ok(s)
    }

    /// Smallest `c` with all samples above `threshold * peak` inside
    /// `S_s^{-1} A_{j0}^{-1} [-c, c]^2` around the peak, measured on the torus.
    pub fn support_extent(&self, lambda: &LambdaIndex, threshold: f64) -> Result<SupportReport> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::Domain(format!("threshold {threshold} not in (0, 1)")));
        }
        let vals = self.element_spatial_complex(lambda, ElementKind::Primal)?;
        let n = self.grid.n();
        let (peak_idx, peak) = vals
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bv), (i, v)| if v.norm() > bv { (i, v.norm()) } else { (bi, bv) });
        let (p1, p2) = ((peak_idx / n) as f64, (peak_idx % n) as f64);
        let j0 = lambda.s.min_scale();
        let s = lambda.s.value();
        let a1 = (j0 as f64).exp2();
        let a2 = ((j0 / 2) as f64).exp2();
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        let mut reach: f64 = 0.0;
        for (i, v) in vals.iter().enumerate() {
            if v.norm() <= threshold * peak {
                continue;
            }
            let wrap = |x: f64| {
                let d = x / n as f64;
                d - d.round()
            };
            let mut d1 = wrap((i / n) as f64 - p1);
            let mut d2 = wrap((i % n) as f64 - p2);
            if lambda.cone == 1 {
                // cone-1 element is the cone-0 one composed with R
                let (r1, r2) = (-d2, d1);
                d1 = r1;
                d2 = r2;
            }
            reach = reach.max(d1.abs()).max(d2.abs());
            let y1 = a1 * (d1 + s * d2);
            let y2 = a2 * d2;
            lo = [lo[0].min(y1), lo[1].min(y2)];
            hi = [hi[0].max(y1), hi[1].max(y2)];
        }
        // half-extent of the box, independent of where the peak sits
        let c = ((hi[0] - lo[0]) / 2.0).max((hi[1] - lo[1]) / 2.0);
        let wraps = reach > 0.45;
        let warning = wraps.then(|| {
            format!("element support wraps around the torus (reach {reach:.3}); cap check skipped")
        });
        Ok(SupportReport { c, wraps, warning, threshold })
    }
}

/// Support fit for one element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    pub c: f64,
    pub wraps: bool,
    pub warning: Option<String>,
    pub threshold: f64,
}

/// Coefficients of one `(cone, shear)` pair, flat in slice order.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientBlock {
    pub cone: u8,
    pub shear: ShearParam,
    pub slices: Vec<SliceSpec>,
    pub offsets: Vec<usize>,
    pub data: Vec<Complex64>,
}

impl CoefficientBlock {
    pub fn slice(&self, k: usize) -> &[Complex64] {
        &self.data[self.offsets[k]..self.offsets[k + 1]]
    }
}

/// Analysis output: blocks ordered cone 0 then cone 1, shears in shear-set order.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTable {
    pub grid: GridSpec,
    pub jmax: u32,
    pub blocks: Vec<CoefficientBlock>,
}

/// Version tag of the top-N tie-break rule written to manifests.
pub const TIE_BREAK_POLICY: &str = "magnitude-desc/lexicographic(cone,shear,j,p,m1,m2)/v1";

impl CoefficientTable {
    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.data.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn energy(&self) -> f64 {
        self.blocks.iter().flat_map(|b| b.data.iter()).map(|v| v.norm_sqr()).sum()
    }

    pub fn zeros_like(&self) -> Self {
        let mut t = self.clone();
        t.blocks.iter_mut().for_each(|b| b.data.iter_mut().for_each(|v| *v = Complex64::default()));
        t
    }

    /// `a * self + b * other` (same layout required).
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::Shape { expected: self.len(), got: other.len() });
        }
        let mut t = self.clone();
        for (x, y) in t.blocks.iter_mut().zip(&other.blocks) {
            for (u, v) in x.data.iter_mut().zip(&y.data) {
                *u = *u * a + *v * b;
            }
        }
        Ok(t)
    }

    fn block_index(&self, cone: u8, s: ShearParam) -> Option<usize> {
        self.blocks.iter().position(|b| b.cone == cone && b.shear == s)
    }

    fn position(&self, lambda: &LambdaIndex) -> Option<(usize, usize)> {
        let bi = self.block_index(lambda.cone, lambda.s)?;
        let blk = &self.blocks[bi];
        let (kind, jj) = if lambda.is_coarse() {
            (AtomKind::Scaling, lambda.s.min_scale())
        } else {
            (AtomKind::Wavelet, lambda.j as u32)
        };
        let k = blk.slices.iter().position(|s| s.kind == kind && s.jj == jj && s.p == lambda.p)?;
        let sl = blk.slices[k];
        let (m1, m2) = canonical_translation(&sl, lambda.s, lambda.m);
        Some((bi, blk.offsets[k] + m1 * sl.c + m2))
    }

    pub fn get(&self, lambda: &LambdaIndex) -> Option<Complex64> {
        self.position(lambda).map(|(b, i)| self.blocks[b].data[i])
    }

    pub fn set(&mut self, lambda: &LambdaIndex, v: Complex64) -> Result<()> {
        let (b, i) = self
            .position(lambda)
            .ok_or_else(|| Error::Domain(format!("index {lambda:?} not in table")))?;
        self.blocks[b].data[i] = v;
        Ok(())
    }

    /// Index of the coefficient at flat position `flat` (tie-break order).
    pub fn lambda_at(&self, flat: usize) -> Option<LambdaIndex> {
        let mut rest = flat;
        for blk in &self.blocks {
            if rest < blk.data.len() {
                let k = blk.offsets.partition_point(|&o| o <= rest) - 1;
                let sl = blk.slices[k];
                let local = rest - blk.offsets[k];
                return Some(LambdaIndex {
                    cone: blk.cone,
                    j: sl.j_label(),
                    s: blk.shear,
                    m: ((local / sl.c) as i64, (local % sl.c) as i64),
                    p: sl.p,
                });
            }
            rest -= blk.data.len();
        }
        None
    }

    /// Flat values in tie-break order.
    pub fn values(&self) -> impl Iterator<Item = &Complex64> {
        self.blocks.iter().flat_map(|b| b.data.iter())
    }

    /// Flat positions sorted by magnitude descending, ties by position.
    pub fn ranking(&self) -> Vec<u32> {
        let mags: Vec<f64> = self.values().map(|v| v.norm_sqr()).collect();
        let mut order: Vec<u32> = (0..mags.len() as u32).collect();
        order.par_sort_unstable_by(|&a, &b| mags[b as usize].total_cmp(&mags[a as usize]).then(a.cmp(&b)));
        order
    }

    /// Copy keeping only the flat positions in `keep`.
    pub fn masked(&self, keep: &[u32]) -> Self {
        let mut flat_off = Vec::with_capacity(self.blocks.len());
        let mut acc = 0usize;
        for b in &self.blocks {
            flat_off.push(acc);
            acc += b.data.len();
        }
        let mut out = self.zeros_like();
        for &f in keep {
            let f = f as usize;
            let bi = flat_off.partition_point(|&o| o <= f) - 1;
            let local = f - flat_off[bi];
            out.blocks[bi].data[local] = self.blocks[bi].data[local];
        }
        out
    }

    /// Largest magnitude per scale label (`-1` for coarse), over both cones.
    pub fn max_by_scale(&self) -> Vec<(i32, f64)> {
        let mut acc: std::collections::BTreeMap<i32, f64> = Default::default();
        for blk in &self.blocks {
            for (k, sl) in blk.slices.iter().enumerate() {
                let m = blk.slice(k).iter().fold(0.0f64, |m, v| m.max(v.norm()));
                let e = acc.entry(sl.j_label()).or_insert(0.0);
                *e = e.max(m);
            }
        }
        acc.into_iter().collect()
    }

    /// Largest magnitude per oversampling level `p`.
    pub fn max_by_level(&self) -> Vec<(u32, f64)> {
        let mut acc: std::collections::BTreeMap<u32, f64> = Default::default();
        for blk in &self.blocks {
            for (k, sl) in blk.slices.iter().enumerate() {
                let m = blk.slice(k).iter().fold(0.0f64, |m, v| m.max(v.norm()));
                let e = acc.entry(sl.p).or_insert(0.0);
                *e = e.max(m);
            }
        }
        acc.into_iter().collect()
    }
}

/// Representative of `m` in `[0, a) x [0, c)` for the sheared lattice of a slice.
pub fn canonical_translation(sl: &SliceSpec, s: ShearParam, m: (i64, i64)) -> (usize, usize) {
    let a = sl.a as i64;
    let c = sl.c as i64;
    let m2 = m.1.rem_euclid(c);
    let k = (m.1 - m2) / c;
    let shift = s.q() * (a >> s.t());
    let m1 = (m.0 - k * shift).rem_euclid(a);
    (m1 as usize, m2 as usize)
}
