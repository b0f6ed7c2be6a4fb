//! Sheared tensor-wavelet orthonormal bases on the `2^L x 2^L` torus.
//!
//! For a shear `s = q/2^t` the basis consists of elements
//! `2^{(j+b)/2} x^p(A_j S_s x - D_p m)` realized with finite-depth products, so
//! every element is exactly periodic and the family is an orthonormal basis of
//! the grid space. With `b = floor(j/2)`, `u = (xi2 - s xi1)/2^b`:
//!
//! * x1 factor: `phi_hat(xi1/2^j, L-j)` (coarse) or `psi_hat(xi1/2^j, L-j)`;
//! * x2 factor: `phi_hat(u, L-b)` for `p = 0`, and
//!   `2^{-d/2} psi_hat(u/2^d, L-b-d)` for `p = d + 1 >= 1`;
//! * translations `m in [0, 2^j) x [0, 2^{b+d})`.
//!
//! Analysis of one x1 level runs a frequency-domain pyramid along each row
//! (multiply by the periodic factor, fold by two), then one short inverse FFT
//! per (row, level) and one per column.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{phi_hat, phi_hat_depth, psi_hat, psi_hat_depth, MirrorFilter};
use crate::grid::FourierGrid;
use crate::index::{ceil_half, ShearParam};

/// Power-of-two FFT plans up to the grid side.
pub struct Plans {
    fwd: Vec<Arc<dyn Fft<f64>>>,
    inv: Vec<Arc<dyn Fft<f64>>>,
}

impl Plans {
    pub fn new(max_log2: u32) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = (0..=max_log2).map(|e| planner.plan_fft_forward(1 << e)).collect();
        let inv = (0..=max_log2).map(|e| planner.plan_fft_inverse(1 << e)).collect();
        Plans { fwd, inv }
    }

    /// Unnormalized batched transforms over consecutive chunks of `len`.
    fn run(&self, buf: &mut [Complex64], len: usize, inverse: bool) {
        if len <= 1 || buf.is_empty() {
            return;
        }
        let e = len.trailing_zeros() as usize;
        let plan = if inverse { &self.inv[e] } else { &self.fwd[e] };
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
    }
}

/// `m0`, `m1` sampled at `k / 2^{t+L}` for every `t` up to `t_max`.
pub struct DyadicTables {
    filter: MirrorFilter,
    l: u32,
    m0: Vec<Vec<Complex64>>,
    m1: Vec<Vec<Complex64>>,
}

impl DyadicTables {
    pub fn new(filter: MirrorFilter, l: u32, t_max: u32) -> Self {
        let mut m0 = Vec::new();
        let mut m1 = Vec::new();
        for t in 0..=t_max {
            let period = 1usize << (t + l);
            let scale = 1.0 / period as f64;
            m0.push((0..period).map(|k| filter.m0(k as f64 * scale)).collect());
            m1.push((0..period).map(|k| filter.m1(k as f64 * scale)).collect());
        }
        DyadicTables { filter, l, m0, m1 }
    }

    pub fn filter(&self) -> &MirrorFilter {
        &self.filter
    }

    pub fn t_max(&self) -> u32 {
        self.m0.len() as u32 - 1
    }

    /// `m0(w / 2^{t+e})` for integer `w`, `e <= L`.
    #[inline]
    pub fn m0(&self, t: u32, w: i64, e: u32) -> Complex64 {
        let mask = (1i64 << (t + self.l)) - 1;
        self.m0[t as usize][((w << (self.l - e)) & mask) as usize]
    }

    #[inline]
    pub fn m1(&self, t: u32, w: i64, e: u32) -> Complex64 {
        let mask = (1i64 << (t + self.l)) - 1;
        self.m1[t as usize][((w << (self.l - e)) & mask) as usize]
    }

    /// `prod_{r=from}^{to} m0(w / 2^{t+e0+r})`.
    pub fn low_product(&self, t: u32, w: i64, e0: u32, from: u32, to: u32) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for r in from..=to {
            acc *= self.m0(t, w, e0 + r);
        }
        acc
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomKind {
    Scaling,
    Wavelet,
}

/// Tensor atom `phi^p` or `psi^p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TensorAtomSpec {
    pub kind: AtomKind,
    pub p: u32,
}

/// How 1-D profiles are evaluated for atoms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtomDepth {
    /// Truncated infinite product of the given depth.
    Continuous(u32),
    /// Finite products matching a `2^L` grid at scale `j = 0`.
    Grid(u32),
}

/// `atom_hat(xi)` at an arbitrary frequency.
pub fn atom_value(spec: TensorAtomSpec, filter: &MirrorFilter, depth: AtomDepth, xi: [f64; 2]) -> Complex64 {
    let d = spec.p.saturating_sub(1);
    let sd = (d as f64).exp2();
    match depth {
        AtomDepth::Continuous(t) => {
            let x1 = match spec.kind {
                AtomKind::Scaling => phi_hat(filter, xi[0], t),
                AtomKind::Wavelet => psi_hat(filter, xi[0], t),
            };
            let x2 = if spec.p == 0 {
                phi_hat(filter, xi[1], t)
            } else {
                psi_hat(filter, xi[1] / sd, t) / sd.sqrt()
            };
            x1 * x2
        }
        AtomDepth::Grid(l) => {
            let x1 = match spec.kind {
                AtomKind::Scaling => phi_hat_depth(filter, xi[0], l),
                AtomKind::Wavelet => psi_hat_depth(filter, xi[0], l),
            };
            let x2 = if spec.p == 0 {
                phi_hat_depth(filter, xi[1], l)
            } else {
                psi_hat_depth(filter, xi[1] / sd, l.saturating_sub(d)) / sd.sqrt()
            };
            x1 * x2
        }
    }
}

/// `atom_hat` sampled at the centered grid frequencies (FFT order).
pub fn atom_fourier(spec: TensorAtomSpec, filter: &MirrorFilter, depth: AtomDepth, grid: &FourierGrid) -> Result<Vec<Complex64>> {
    let n = grid.n();
    if let AtomDepth::Continuous(t) = depth {
        let reach = (n as f64) / 2.0;
        if t < 4 || reach / (t as f64).exp2() > 1e-3 {
            return Err(Error::Resolution(format!(
                "truncation depth {t} too shallow for frequencies up to {reach}"
            )));
        }
    }
    let mut out = Vec::with_capacity(n * n);
    for i1 in 0..n {
        for i2 in 0..n {
            let xi = [grid.freq(i1) as f64, grid.freq(i2) as f64];
            out.push(atom_value(spec, filter, depth, xi));
        }
    }
    Ok(out)
}

/// One `(kind, j, p)` slice of a per-shear basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub kind: AtomKind,
    /// Dilation scale (for coarse slices this is `j0(s)`).
    pub jj: u32,
    pub p: u32,
    /// Translation counts along `m1` and `m2`.
    pub a: usize,
    pub c: usize,
}

impl SliceSpec {
    pub fn b(&self) -> u32 {
        self.jj / 2
    }

    pub fn d(&self) -> u32 {
        self.p.saturating_sub(1)
    }

    pub fn len(&self) -> usize {
        self.a * self.c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Scale label: `-1` for coarse slices.
    pub fn j_label(&self) -> i32 {
        match self.kind {
            AtomKind::Scaling => -1,
            AtomKind::Wavelet => self.jj as i32,
        }
    }
}

/// Per-shear basis element specification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OnbElementSpec {
    pub kind: AtomKind,
    pub j: u32,
    pub s: ShearParam,
    pub m: (i64, i64),
    pub p: u32,
}

/// Generator tables and x1 multipliers shared by every shear on one grid.
pub struct OnbTables {
    grid: FourierGrid,
    tables: DyadicTables,
    /// `2^{-(j+b)/2} phi_hat(xi1/2^j, L-j)` by `j`, FFT order.
    x1_coarse: Vec<Vec<Complex64>>,
    x1_detail: Vec<Vec<Complex64>>,
    plans: Plans,
}

impl OnbTables {
    pub fn new(grid: &FourierGrid, filter: MirrorFilter, t_max: u32) -> Self {
        let l = grid.log2();
        let n = grid.n();
        let tables = DyadicTables::new(filter, l, t_max);
        let mut x1_coarse = Vec::new();
        let mut x1_detail = Vec::new();
        for jj in 0..l {
            let amp = (-((jj + jj / 2) as f64) / 2.0).exp2();
            let depth = l - jj;
            let mut lo = Vec::with_capacity(n);
            let mut hi = Vec::with_capacity(n);
            for i in 0..n {
                let xi = grid.freq(i);
                // phi_hat(xi/2^jj, depth) = prod_{r=1}^{depth} m0(xi / 2^{jj+r})
                let prod = tables.low_product(0, xi, jj, 2, depth);
                lo.push(amp * tables.m0(0, xi, jj + 1) * prod);
                hi.push(amp * tables.m1(0, xi, jj + 1) * prod);
            }
            x1_coarse.push(lo);
            x1_detail.push(hi);
        }
        OnbTables { grid: grid.clone(), tables, x1_coarse, x1_detail, plans: Plans::new(l) }
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn tables(&self) -> &DyadicTables {
        &self.tables
    }

    fn x1(&self, kind: AtomKind, jj: u32) -> &[Complex64] {
        match kind {
            AtomKind::Scaling => &self.x1_coarse[jj as usize],
            AtomKind::Wavelet => &self.x1_detail[jj as usize],
        }
    }
}

/// The complete orthonormal basis for one shear on one grid.
pub struct ShearBasis {
    shared: Arc<OnbTables>,
    s: ShearParam,
    slices: Vec<SliceSpec>,
    offsets: Vec<usize>,
}

struct Level {
    kind: AtomKind,
    jj: u32,
    first_slice: usize,
}

impl ShearBasis {
    pub fn new(shared: Arc<OnbTables>, s: ShearParam) -> Result<Self> {
        let l = shared.grid.log2();
        let j0 = s.min_scale();
        if j0 >= l {
            return Err(Error::Domain(format!("shear {s} needs scale {j0}, grid has only {l} levels")));
        }
        if s.t() > shared.tables.t_max() {
            return Err(Error::Domain(format!("shear {s} finer than the prepared tables")));
        }
        let mut slices = Vec::new();
        let mut push_level = |kind, jj: u32| {
            let b = jj / 2;
            for p in 0..=(l - b) {
                let d = p.saturating_sub(1);
                slices.push(SliceSpec { kind, jj, p, a: 1 << jj, c: 1 << (b + d) });
            }
        };
        push_level(AtomKind::Scaling, j0);
        for jj in j0..l {
            push_level(AtomKind::Wavelet, jj);
        }
        let mut offsets = Vec::with_capacity(slices.len() + 1);
        let mut acc = 0;
        for sl in &slices {
            offsets.push(acc);
            acc += sl.len();
        }
        offsets.push(acc);
        Ok(ShearBasis { shared, s, slices, offsets })
    }

    pub fn shear(&self) -> ShearParam {
        self.s
    }

    pub fn slices(&self) -> &[SliceSpec] {
        &self.slices
    }

    /// Offset of slice `k` in a flat coefficient vector.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn total_len(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.shared.grid
    }

    fn levels(&self) -> Vec<Level> {
        let mut out: Vec<Level> = Vec::new();
        for (k, sl) in self.slices.iter().enumerate() {
            if sl.p == 0 {
                out.push(Level { kind: sl.kind, jj: sl.jj, first_slice: k });
            }
        }
        out
    }

    /// Slice position for `(kind, jj, p)`.
    pub fn slice_index(&self, kind: AtomKind, jj: u32, p: u32) -> Option<usize> {
        self.slices.iter().position(|s| s.kind == kind && s.jj == jj && s.p == p)
    }

    /// Reduce a translation to the stored representative `[0, a) x [0, c)`.
    pub fn canonical_translation(&self, spec: &SliceSpec, m: (i64, i64)) -> (usize, usize) {
        let a = spec.a as i64;
        let c = spec.c as i64;
        let m2 = m.1.rem_euclid(c);
        let k = (m.1 - m2) / c;
        // (m1, m2 + c) ~ (m1 - a s, m2)
        let shift = self.s.q() * (a >> self.s.t());
        let m1 = (m.0 - k * shift).rem_euclid(a);
        (m1 as usize, m2 as usize)
    }

    /// Coefficients `<h, e_lambda>` for every element, flat in slice order.
    /// `spectrum` is the normalized spectrum of `h` in FFT order.
    pub fn analyze(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.total_len()];
        let (low, det) = self.x2_cascade(spectrum);
        let n = self.shared.grid.n();
        let l = self.shared.grid.log2();
        let mut rs = vec![Complex64::default(); n];
        for level in self.levels() {
            let b = level.jj / 2;
            let x1 = self.shared.x1(level.kind, level.jj);
            for p in 0..=(l - b) {
                let k = level.first_slice + p as usize;
                let spec = self.slices[k];
                let (src, scale) = if p == 0 {
                    (&low[(b + 1) as usize], 1.0)
                } else {
                    (&det[(b + p) as usize], (-((p - 1) as f64) / 2.0).exp2())
                };
                for (r, x) in rs.iter_mut().zip(x1) {
                    *r = x.conj() * scale;
                }
                let dst = &mut out[self.offsets[k]..self.offsets[k + 1]];
                self.stage_analysis(src, &rs, spec.a, spec.c, dst);
            }
        }
        out
    }

    /// Finest scale pair used by any level.
    fn b_min(&self) -> u32 {
        self.s.min_scale() / 2
    }

    /// Row-wise `x2` cascade of the raw spectrum, shared by every level:
    /// `low[e]`, `det[e]` hold `n` rows of `2^{e-1}` outputs of stage `e`.
    /// The per-level `x1` factor is a scalar per row and applied afterwards.
    fn x2_cascade(&self, spectrum: &[Complex64]) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
        let sh = &self.shared;
        let grid = &sh.grid;
        let n = grid.n();
        let l = grid.log2();
        let t = self.s.t();
        let q = self.s.q();
        let tab = &sh.tables;
        let b_min = self.b_min();
        let alloc = || -> Vec<Vec<Complex64>> {
            (0..=l).map(|e| if e > b_min { vec![Complex64::default(); n << (e - 1)] } else { Vec::new() }).collect()
        };
        let (mut low, mut det) = (alloc(), alloc());
        let mut row = vec![Complex64::default(); n];
        for i in 0..n {
            let qx = q * grid.freq(i);
            row.copy_from_slice(&spectrum[i * n..(i + 1) * n]);
            let mut len = n;
            for e in (b_min + 1..=l).rev() {
                let half = len / 2;
                let lo = &mut low[e as usize][i * half..(i + 1) * half];
                let de = &mut det[e as usize][i * half..(i + 1) * half];
                for r in 0..half {
                    let w0 = ((r as i64) << t) - qx;
                    let w1 = (((r + half) as i64) << t) - qx;
                    let (v0, v1) = (row[r], row[r + half]);
                    lo[r] = v0 * tab.m0(t, w0, e).conj() + v1 * tab.m0(t, w1, e).conj();
                    de[r] = v0 * tab.m1(t, w0, e).conj() + v1 * tab.m1(t, w1, e).conj();
                }
                row[..half].copy_from_slice(lo);
                len = half;
            }
        }
        (low, det)
    }

    /// Adds `sum_lambda c_lambda e_hat_lambda` to `acc` (normalized spectrum).
    pub fn synthesize_into(&self, coeffs: &[Complex64], acc: &mut [Complex64]) {
        let sh = &self.shared;
        let grid = &sh.grid;
        let n = grid.n();
        let l = grid.log2();
        let t = self.s.t();
        let q = self.s.q();
        let tab = &sh.tables;
        let b_min = self.b_min();
        let alloc = || -> Vec<Vec<Complex64>> {
            (0..=l).map(|e| if e > b_min { vec![Complex64::default(); n << (e - 1)] } else { Vec::new() }).collect()
        };
        let (mut low, mut det) = (alloc(), alloc());
        let mut any = false;
        for level in self.levels() {
            let b = level.jj / 2;
            let x1 = sh.x1(level.kind, level.jj);
            for p in 0..=(l - b) {
                let k = level.first_slice + p as usize;
                let spec = self.slices[k];
                let src = &coeffs[self.offsets[k]..self.offsets[k + 1]];
                if src.iter().all(|v| v.re == 0.0 && v.im == 0.0) {
                    continue;
                }
                any = true;
                let p1 = self.fold_rows(spec.a, spec.c);
                let c = spec.c;
                let rows = self.stage_synthesis(src, spec.a, c);
                let (dst, scale) = if p == 0 {
                    (&mut low[(b + 1) as usize], 1.0)
                } else {
                    (&mut det[(b + p) as usize], (-((p - 1) as f64) / 2.0).exp2())
                };
                for i in 0..n {
                    let s = x1[i] * scale;
                    let i2 = i % p1;
                    for (d, v) in dst[i * c..(i + 1) * c].iter_mut().zip(&rows[i2 * c..(i2 + 1) * c]) {
                        *d += v * s;
                    }
                }
            }
        }
        if !any {
            return;
        }
        let mut cur = vec![Complex64::default(); n];
        let mut next = vec![Complex64::default(); n];
        for i in 0..n {
            let qx = q * grid.freq(i);
            let mut len = 1usize << b_min;
            cur[..len].iter_mut().for_each(|v| *v = Complex64::default());
            for e in b_min + 1..=l {
                let lo = &low[e as usize][i * len..(i + 1) * len];
                let de = &det[e as usize][i * len..(i + 1) * len];
                for r in 0..len {
                    cur[r] += lo[r];
                }
                for r in 0..2 * len {
                    let w = ((r as i64) << t) - qx;
                    next[r] = cur[r % len] * tab.m0(t, w, e) + de[r % len] * tab.m1(t, w, e);
                }
                std::mem::swap(&mut cur, &mut next);
                len *= 2;
            }
            for (dst, v) in acc[i * n..(i + 1) * n].iter_mut().zip(&cur) {
                *dst += v;
            }
        }
    }

    pub fn synthesize(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let n = self.shared.grid.n();
        let mut acc = vec![Complex64::default(); n * n];
        self.synthesize_into(coeffs, &mut acc);
        acc
    }

    fn phase_table(&self, period: usize) -> Vec<Complex64> {
        (0..period)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / period as f64))
            .collect()
    }

    fn fold_rows(&self, a: usize, c: usize) -> usize {
        let n = self.shared.grid.n();
        n.min(a.max(c << self.s.t()))
    }

    /// Slice stage on `n` rows of `c` values, each row scaled by `row_scale[i]`.
    fn stage_analysis(&self, buf: &[Complex64], row_scale: &[Complex64], a: usize, c: usize, dst: &mut [Complex64]) {
        let grid = &self.shared.grid;
        let plans = &self.shared.plans;
        let n = grid.n();
        let p1 = self.fold_rows(a, c);
        let mut r = vec![Complex64::default(); p1 * c];
        for i in 0..n {
            let i2 = i % p1;
            let sc = row_scale[i];
            for (x, y) in r[i2 * c..(i2 + 1) * c].iter_mut().zip(&buf[i * c..(i + 1) * c]) {
                *x += y * sc;
            }
        }
        plans.run(&mut r, c, true);
        let period = c << self.s.t();
        if self.s.q() != 0 {
            let ph = self.phase_table(period);
            for i2 in 0..p1 {
                let xi = if p1 == n { grid.freq(i2) } else { i2 as i64 };
                let step = (self.s.q() * xi).rem_euclid(period as i64) as usize;
                let mut idx = 0usize;
                for v in r[i2 * c..(i2 + 1) * c].iter_mut() {
                    *v *= ph[idx];
                    idx = (idx + step) % period;
                }
            }
        }
        // fold rows to a, stored transposed (c x a) for the column transform
        let mut st = vec![Complex64::default(); c * a];
        for i2 in 0..p1 {
            let i3 = i2 % a;
            for m2 in 0..c {
                st[m2 * a + i3] += r[i2 * c + m2];
            }
        }
        plans.run(&mut st, a, true);
        for m1 in 0..a {
            for m2 in 0..c {
                dst[m1 * c + m2] = st[m2 * a + m1];
            }
        }
    }

    /// Inverse of the slice stage: returns `p1 x c` rows (`p1` from `fold_rows`).
    fn stage_synthesis(&self, coeffs: &[Complex64], a: usize, c: usize) -> Vec<Complex64> {
        let grid = &self.shared.grid;
        let plans = &self.shared.plans;
        let n = grid.n();
        let p1 = self.fold_rows(a, c);
        let mut st = vec![Complex64::default(); c * a];
        for m1 in 0..a {
            for m2 in 0..c {
                st[m2 * a + m1] = coeffs[m1 * c + m2];
            }
        }
        plans.run(&mut st, a, false);
        let mut r = vec![Complex64::default(); p1 * c];
        for i2 in 0..p1 {
            let i3 = i2 % a;
            for m2 in 0..c {
                r[i2 * c + m2] = st[m2 * a + i3];
            }
        }
        let period = c << self.s.t();
        if self.s.q() != 0 {
            let ph = self.phase_table(period);
            for i2 in 0..p1 {
                let xi = if p1 == n { grid.freq(i2) } else { i2 as i64 };
                let step = (self.s.q() * xi).rem_euclid(period as i64) as usize;
                let mut idx = 0usize;
                for v in r[i2 * c..(i2 + 1) * c].iter_mut() {
                    *v *= ph[idx].conj();
                    idx = (idx + step) % period;
                }
            }
        }
        plans.run(&mut r, c, false);
        r
    }

    /// Spectrum of one basis element, evaluated pointwise from the tables.
    pub fn element_spectrum(&self, slice: usize, m: (i64, i64)) -> Vec<Complex64> {
        let sh = &self.shared;
        let grid = &sh.grid;
        let n = grid.n();
        let l = grid.log2();
        let spec = self.slices[slice];
        let (t, q) = (self.s.t(), self.s.q());
        let b = spec.b();
        let depth = l - b;
        let x1 = sh.x1(spec.kind, spec.jj);
        let tab = &sh.tables;
        let a = spec.a as i64;
        let c = spec.c as i64;
        let period = c << t;
        let mut out = Vec::with_capacity(n * n);
        for i1 in 0..n {
            let xi1 = grid.freq(i1);
            let ph1 = (m.0 * xi1).rem_euclid(a) as f64 / a as f64;
            for i2 in 0..n {
                let xi2 = grid.freq(i2);
                let w = (xi2 << t) - q * xi1;
                let x2 = if spec.p == 0 {
                    tab.low_product(t, w, b, 1, depth)
                } else {
                    let d = spec.d();
                    let mut v = tab.m1(t, w, b + d + 1) * (-(d as f64) / 2.0).exp2();
                    if d + 2 <= depth {
                        v *= tab.low_product(t, w, b, d + 2, depth);
                    }
                    v
                };
                let ph2 = (m.1 * w).rem_euclid(period) as f64 / period as f64;
                let phase = Complex64::from_polar(1.0, -2.0 * PI * (ph1 + ph2));
                out.push(x1[i1] * x2 * phase);
            }
        }
        out
    }

    /// Spectrum of an element given by its full specification.
    pub fn element(&self, spec: &OnbElementSpec) -> Result<Vec<Complex64>> {
        if spec.s != self.s {
            return Err(Error::Domain(format!("element shear {} differs from basis shear {}", spec.s, self.s)));
        }
        let k = self
            .slice_index(spec.kind, spec.j, spec.p)
            .ok_or_else(|| Error::Domain(format!("no slice ({:?}, j={}, p={}) for shear {}", spec.kind, spec.j, spec.p, self.s)))?;
        Ok(self.element_spectrum(k, spec.m))
    }
}

/// `max |G - I|` split into off-diagonal and diagonal parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub count: usize,
    pub max_off_diagonal: f64,
    pub max_diagonal_deviation: f64,
}

/// Gram check of the subsystem `j <= max_j`, `p <= max_p`, `0 <= m_i <= max_m`.
pub fn gram_check(basis: &ShearBasis, max_j: u32, max_m: usize, max_p: u32) -> Result<GramReport> {
    let mut elems: Vec<Vec<Complex64>> = Vec::new();
    for (k, sl) in basis.slices().iter().enumerate() {
        if sl.jj > max_j || sl.p > max_p {
            continue;
        }
        for m1 in 0..sl.a.min(max_m + 1) {
            for m2 in 0..sl.c.min(max_m + 1) {
                elems.push(basis.element_spectrum(k, (m1 as i64, m2 as i64)));
                if elems.len() > 10_000 {
                    return Err(Error::Domain("gram subsystem exceeds 10^4 elements".into()));
                }
            }
        }
    }
    let mut off: f64 = 0.0;
    let mut diag: f64 = 0.0;
    for i in 0..elems.len() {
        for j in i..elems.len() {
            let g = FourierGrid::spectral_inner(&elems[i], &elems[j]);
            if i == j {
                diag = diag.max((g - 1.0).norm());
            } else {
                off = off.max(g.norm());
            }
        }
    }
    Ok(GramReport { count: elems.len(), max_off_diagonal: off, max_diagonal_deviation: diag })
}

/// Fraction of `||h||^2` captured by the slices with `j <= max_j`, `p <= max_p`.
pub fn parseval_fraction(basis: &ShearBasis, spectrum: &[Complex64], max_j: u32, max_p: u32) -> f64 {
    let total: f64 = spectrum.iter().map(|v| v.norm_sqr()).sum();
    if total == 0.0 {
        return 1.0;
    }
    let coeffs = basis.analyze(spectrum);
    let offs = basis.offsets();
    let mut kept = 0.0;
    for (k, sl) in basis.slices().iter().enumerate() {
        if sl.jj <= max_j && sl.p <= max_p {
            kept += coeffs[offs[k]..offs[k + 1]].iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
    }
    kept / total
}

/// `t` needed for all shears with `j0 <= jmax`.
pub fn t_for_jmax(jmax: u32) -> u32 {
    ceil_half(jmax)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(n: usize, k: u32, s: ShearParam) -> ShearBasis {
        let grid = FourierGrid::new(n).unwrap();
        let l = grid.log2();
        let tables = Arc::new(OnbTables::new(&grid, MirrorFilter::daubechies(k).unwrap(), t_for_jmax(l - 1)));
        ShearBasis::new(tables, s).unwrap()
    }

    fn spectrum(n: usize, seed: u64) -> Vec<Complex64> {
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (0..n * n)
            .map(|_| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let b = (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                Complex64::new(a, b)
            })
            .collect()
    }

    #[test]
    fn coefficient_count_is_grid_size() {
        for s in ["0", "1", "-1/2", "3/4", "1/4"] {
            let b = basis(32, 2, s.parse().unwrap());
            assert_eq!(b.total_len(), 32 * 32, "s={s}");
        }
    }

    #[test]
    fn analysis_matches_pointwise_elements() {
        for s in ["0", "1/2", "-3/4", "1"] {
            let b = basis(16, 2, s.parse().unwrap());
            let h = spectrum(16, 7);
            let coeffs = b.analyze(&h);
            let offs = b.offsets();
            for (k, sl) in b.slices().iter().enumerate() {
                for (m1, m2) in [(0usize, 0usize), (sl.a - 1, sl.c - 1), (sl.a / 2, 0)] {
                    let e = b.element_spectrum(k, (m1 as i64, m2 as i64));
                    let want = FourierGrid::spectral_inner(&h, &e);
                    let got = coeffs[offs[k] + m1 * sl.c + m2];
                    assert!((got - want).norm() < 1e-12, "s={s} slice={sl:?} m=({m1},{m2}) {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn exact_parseval_and_reconstruction() {
        for s in ["0", "1/2", "-1", "3/4", "-1/4"] {
            let b = basis(32, 3, s.parse().unwrap());
            let h = spectrum(32, 3);
            let c = b.analyze(&h);
            let e_h: f64 = h.iter().map(|v| v.norm_sqr()).sum();
            let e_c: f64 = c.iter().map(|v| v.norm_sqr()).sum();
            assert!((e_h - e_c).abs() < 1e-12 * e_h, "s={s} {e_h} {e_c}");
            let back = b.synthesize(&c);
            let err: f64 = back.iter().zip(&h).map(|(x, y)| (x - y).norm_sqr()).sum();
            assert!(err.sqrt() < 1e-12 * e_h.sqrt(), "s={s}");
        }
    }

    #[test]
    fn canonical_translation_identifies_equal_elements() {
        let s: ShearParam = "1/2".parse().unwrap();
        let b = basis(16, 2, s);
        let k = b.slice_index(AtomKind::Wavelet, 3, 2).unwrap();
        let sl = b.slices()[k];
        let m = (3i64, sl.c as i64 + 1);
        let (m1, m2) = b.canonical_translation(&sl, m);
        let e1 = b.element_spectrum(k, m);
        let e2 = b.element_spectrum(k, (m1 as i64, m2 as i64));
        let diff: f64 = e1.iter().zip(&e2).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }
}
