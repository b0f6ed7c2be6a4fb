//! The periodic `N x N` pixel grid on the unit torus and its frequency lattice.
//!
//! Spatial samples sit at `x = n / N`. Fourier coefficients are normalized as
//! `f_hat(xi) = N^{-2} sum_n f[n] e^{-2 pi i xi.n / N}` so that
//! `sum |f_hat|^2 = N^{-2} sum |f|^2 = ||f||^2` on the torus.
//! Arrays are row-major, first index `n1` (or `xi1`), in FFT order.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone)]
pub struct FourierGrid {
    n: usize,
    log2: u32,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for FourierGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FourierGrid({}x{})", self.n, self.n)
    }
}

impl PartialEq for FourierGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

/// Serializable description of a grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
}

impl FourierGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Config(format!("grid side {n} must be a power of two >= 4")));
        }
        let mut planner = FftPlanner::new();
        Ok(FourierGrid {
            n,
            log2: n.trailing_zeros(),
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn with_log2(l: u32) -> Result<Self> {
        FourierGrid::new(1usize << l)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn log2(&self) -> u32 {
        self.log2
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec { n: self.n }
    }

    pub fn cell_area(&self) -> f64 {
        1.0 / (self.n * self.n) as f64
    }

    /// Centered frequency of FFT index `i`: `i` below `N/2`, else `i - N`.
    #[inline]
    pub fn freq(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// FFT index of an arbitrary integer frequency.
    #[inline]
    pub fn index(&self, xi: i64) -> usize {
        xi.rem_euclid(self.n as i64) as usize
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::Shape { expected: self.len(), got: len });
        }
        Ok(())
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(data, &mut scratch);
        transpose_square(data, n);
        fft.process_with_scratch(data, &mut scratch);
        transpose_square(data, n);
    }

    /// Normalized forward transform of complex samples.
    pub fn fft2(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
        let s = self.cell_area();
        data.iter_mut().for_each(|v| *v *= s);
    }

    /// Inverse of [`fft2`](Self::fft2): synthesis `f[n] = sum f_hat e^{2 pi i xi.n/N}`.
    pub fn ifft2(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    pub fn forward_real(&self, f: &[f64]) -> Result<Vec<Complex64>> {
        self.check_len(f.len())?;
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft2(&mut buf);
        Ok(buf)
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse_real(&self, spectrum: &[Complex64]) -> Result<Vec<f64>> {
        self.check_len(spectrum.len())?;
        let mut buf = spectrum.to_vec();
        self.ifft2(&mut buf);
        Ok(buf.into_iter().map(|v| v.re).collect())
    }

    /// Index of `R xi` with `R(xi1, xi2) = (-xi2, xi1)`, wrapped onto the grid.
    #[inline]
    pub fn rotate_index(&self, i1: usize, i2: usize) -> (usize, usize) {
        ((self.n - i2) % self.n, i1)
    }

    /// Index of `R^{-1} xi = (xi2, -xi1)`.
    #[inline]
    pub fn unrotate_index(&self, i1: usize, i2: usize) -> (usize, usize) {
        (i2, (self.n - i1) % self.n)
    }

    /// `g(eta) = s(R^{-1} eta)`: the spectrum of `f o R^{-1}` from that of `f`.
    pub fn rotate_spectrum(&self, s: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut out = vec![Complex64::default(); n * n];
        for i1 in 0..n {
            for i2 in 0..n {
                let (j1, j2) = self.unrotate_index(i1, i2);
                out[i1 * n + i2] = s[j1 * n + j2];
            }
        }
        out
    }

    /// Spatial `(f o R)(x) = f(-x2, x1)` on the grid.
    pub fn rotate_signal(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for n1 in 0..n {
            for n2 in 0..n {
                out[n1 * n + n2] = f[((n - n2) % n) * n + n1];
            }
        }
        out
    }

    /// Spatial `(f o R^{-1})(x) = f(x2, -x1)`.
    pub fn unrotate_signal(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for n1 in 0..n {
            for n2 in 0..n {
                out[n1 * n + n2] = f[n2 * n + (n - n1) % n];
            }
        }
        out
    }

    /// `||f||_2` on the torus from pixel samples.
    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        (f.iter().map(|v| v * v).sum::<f64>() * self.cell_area()).sqrt()
    }

    /// Torus inner product of two spectra, `sum a conj(b)`.
    pub fn spectral_inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
    }
}

pub(crate) fn transpose_square<T: Copy>(data: &mut [T], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_parseval() {
        let g = FourierGrid::new(16).unwrap();
        let f: Vec<f64> = (0..256).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        let s = g.forward_real(&f).unwrap();
        let back = g.inverse_real(&s).unwrap();
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        let e_spec: f64 = s.iter().map(|v| v.norm_sqr()).sum();
        assert!((e_spec - g.l2_norm(&f).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn single_mode() {
        let g = FourierGrid::new(8).unwrap();
        let n = 8;
        let f: Vec<f64> = (0..64)
            .map(|k| (2.0 * std::f64::consts::PI * (3.0 * (k / n) as f64 / n as f64)).cos())
            .collect();
        let s = g.forward_real(&f).unwrap();
        assert!((s[3 * n].re - 0.5).abs() < 1e-14);
        assert!((s[5 * n].re - 0.5).abs() < 1e-14);
        assert_eq!(g.freq(5), -3);
        assert_eq!(g.index(-3), 5);
    }

    #[test]
    fn rotation_consistency() {
        let g = FourierGrid::new(8).unwrap();
        let f: Vec<f64> = (0..64).map(|i| (i as f64 * 0.37).cos() + i as f64 * 0.01).collect();
        let fr = g.rotate_signal(&f);
        assert_eq!(g.unrotate_signal(&fr), f);
        // spectrum of f o R is f_hat o R
        let s = g.forward_real(&f).unwrap();
        let sr = g.forward_real(&fr).unwrap();
        for i1 in 0..8 {
            for i2 in 0..8 {
                let (j1, j2) = g.rotate_index(i1, i2);
                assert!((sr[i1 * 8 + i2] - s[j1 * 8 + j2]).norm() < 1e-13);
            }
        }
        // spectrum of f o R^{-1} is rotate_spectrum(f_hat)
        let su = g.forward_real(&g.unrotate_signal(&f)).unwrap();
        let rs = g.rotate_spectrum(&s);
        for (a, b) in su.iter().zip(&rs) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
