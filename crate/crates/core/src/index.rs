//! Index algebra: dyadic shear parameters, parabolic/shear/sampling matrices
//! and the shearlet index set.
//!
//! Everything here is exact. Shears are stored as `q / 2^t` and every matrix
//! entry is a dyadic rational, so identities such as
//! `A_j^{-1} S_s^{-T} = S_k^{-T} A_j^{-1}` can be checked with `==`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ceiling of `j / 2` for nonnegative `j`.
pub fn ceil_half(j: u32) -> u32 {
    j.div_ceil(2)
}

/// Floor of `j / 2`, rounding toward negative infinity.
pub fn floor_half(j: i32) -> i32 {
    j.div_euclid(2)
}

/// A dyadic rational `num / 2^exp`, kept in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: i128,
    exp: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, exp: 0 };

    pub fn new(num: i128, exp: u32) -> Self {
        let mut d = Dyadic { num, exp };
        d.normalize();
        d
    }

    pub fn int(v: i128) -> Self {
        Dyadic { num: v, exp: 0 }
    }

    /// `2^e` for any integer `e`.
    pub fn pow2(e: i32) -> Self {
        if e >= 0 {
            Dyadic::int(1i128 << e)
        } else {
            Dyadic { num: 1, exp: (-e) as u32 }
        }
    }

    fn normalize(&mut self) {
        if self.num == 0 {
            self.exp = 0;
            return;
        }
        while self.exp > 0 && self.num % 2 == 0 {
            self.num /= 2;
            self.exp -= 1;
        }
    }

    pub fn numerator(&self) -> i128 {
        self.num
    }

    pub fn exponent(&self) -> u32 {
        self.exp
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / (self.exp as f64).exp2()
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    /// Multiplicative inverse, defined only for `±2^e`.
    pub fn recip(self) -> Option<Self> {
        let mag = self.num.unsigned_abs();
        if mag == 0 || !mag.is_power_of_two() {
            return None;
        }
        let sign = self.num.signum();
        let k = mag.trailing_zeros() as i32;
        let mut r = Dyadic::pow2(self.exp as i32 - k);
        r.num *= sign;
        Some(r)
    }

    fn align(a: Dyadic, b: Dyadic) -> (i128, i128, u32) {
        let e = a.exp.max(b.exp);
        (a.num << (e - a.exp), b.num << (e - b.exp), e)
    }
}

impl std::ops::Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        let (a, b, e) = Dyadic::align(self, rhs);
        Dyadic::new(a + b, e)
    }
}

impl std::ops::Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        let (a, b, e) = Dyadic::align(self, rhs);
        Dyadic::new(a - b, e)
    }
}

impl std::ops::Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        Dyadic::new(self.num * rhs.num, self.exp + rhs.exp)
    }
}

impl std::ops::Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { num: -self.num, exp: self.exp }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = Dyadic::align(*self, *other);
        a.cmp(&b)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, 1u128 << self.exp)
        }
    }
}

/// Exact 2x2 matrix over dyadic rationals, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mat2(pub [[Dyadic; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[Dyadic::ONE, Dyadic::ZERO], [Dyadic::ZERO, Dyadic::ONE]]);

    pub fn diag(a: Dyadic, d: Dyadic) -> Self {
        Mat2([[a, Dyadic::ZERO], [Dyadic::ZERO, d]])
    }

    pub fn transpose(&self) -> Self {
        let m = self.0;
        Mat2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn det(&self) -> Dyadic {
        let m = self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Exact inverse; `None` unless the determinant is `±2^e`.
    pub fn inverse(&self) -> Option<Self> {
        let r = self.det().recip()?;
        let m = self.0;
        Some(Mat2([
            [m[1][1] * r, -(m[0][1] * r)],
            [-(m[1][0] * r), m[0][0] * r],
        ]))
    }

    pub fn to_f64(&self) -> [[f64; 2]; 2] {
        let m = self.0;
        [
            [m[0][0].to_f64(), m[0][1].to_f64()],
            [m[1][0].to_f64(), m[1][1].to_f64()],
        ]
    }

    pub fn apply_f64(&self, v: [f64; 2]) -> [f64; 2] {
        let m = self.to_f64();
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }
}

impl std::ops::Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = self.0;
        let b = rhs.0;
        let mut out = [[Dyadic::ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (k, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][k] + a[i][1] * b[1][k];
            }
        }
        Mat2(out)
    }
}

/// Parabolic scaling `A_j = diag(2^j, 2^{floor(j/2)})`; negative `j` allowed.
pub fn parabolic(j: i32) -> Mat2 {
    Mat2::diag(Dyadic::pow2(j), Dyadic::pow2(floor_half(j)))
}

/// The vertical-cone scaling `diag(2^{floor(j/2)}, 2^j)`.
pub fn parabolic_tilde(j: i32) -> Mat2 {
    Mat2::diag(Dyadic::pow2(floor_half(j)), Dyadic::pow2(j))
}

/// Unit upper-triangular shear with (dyadic) off-diagonal entry.
pub fn shear(s: Dyadic) -> Mat2 {
    Mat2([[Dyadic::ONE, s], [Dyadic::ZERO, Dyadic::ONE]])
}

/// Sampling matrix `D_p = diag(1, 2^{-max(p-1,0)})`.
pub fn oversampling(p: u32) -> Mat2 {
    Mat2::diag(Dyadic::ONE, Dyadic::pow2(-(oversampling_exponent(p) as i32)))
}

/// `d_p = max(p - 1, 0)`.
pub fn oversampling_exponent(p: u32) -> u32 {
    p.saturating_sub(1)
}

/// A shear parameter `q / 2^t` in canonical form: `(t, q) = (0, 0)` or `q` odd,
/// with `|q| <= 2^t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShearParam {
    t: u32,
    q: i64,
}

impl ShearParam {
    pub const ZERO: ShearParam = ShearParam { t: 0, q: 0 };

    pub fn new(t: u32, q: i64) -> Result<Self> {
        if t > 30 {
            return Err(Error::Domain(format!("shear exponent {t} too large")));
        }
        let bound = 1i64 << t;
        if q.abs() > bound {
            return Err(Error::Domain(format!("|q| = {} exceeds 2^{t}", q.abs())));
        }
        if !(q == 0 && t == 0) && q % 2 == 0 {
            return Err(Error::Domain(format!(
                "shear {q}/2^{t} is not canonical (even numerator)"
            )));
        }
        Ok(ShearParam { t, q })
    }

    /// Canonical representation of an arbitrary `k / 2^e` with `|k| <= 2^e`.
    pub fn reduce(k: i64, e: u32) -> Result<Self> {
        if k == 0 {
            return Ok(ShearParam::ZERO);
        }
        let tz = k.trailing_zeros().min(e);
        ShearParam::new(e - tz, k >> tz)
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn q(&self) -> i64 {
        self.q
    }

    pub fn value(&self) -> f64 {
        self.q as f64 / (self.t as f64).exp2()
    }

    pub fn as_dyadic(&self) -> Dyadic {
        Dyadic::new(self.q as i128, self.t)
    }

    pub fn is_zero(&self) -> bool {
        self.q == 0
    }

    /// Smallest nonnegative scale `j0` with `ceil(j0/2) >= t`.
    pub fn min_scale(&self) -> u32 {
        if self.t == 0 {
            0
        } else {
            2 * self.t - 1
        }
    }
}

impl PartialOrd for ShearParam {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ShearParam {
    /// Ordered by value.
    fn cmp(&self, other: &Self) -> Ordering {
        self.as_dyadic().cmp(&other.as_dyadic())
    }
}

impl fmt::Display for ShearParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_dyadic())
    }
}

impl std::str::FromStr for ShearParam {
    type Err = Error;

    /// Parses `"0"`, `"-1"`, `"3/8"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Format(format!("bad shear literal {s:?}"));
        let s = s.trim();
        match s.split_once('/') {
            None => {
                let k: i64 = s.parse().map_err(|_| bad())?;
                ShearParam::reduce(k, 0)
            }
            Some((num, den)) => {
                let k: i64 = num.trim().parse().map_err(|_| bad())?;
                let d: u64 = den.trim().parse().map_err(|_| bad())?;
                if !d.is_power_of_two() {
                    return Err(bad());
                }
                ShearParam::reduce(k, d.trailing_zeros())
            }
        }
    }
}

/// The finite shear set `{0} ∪ {q / 2^{ceil(j/2)} : 0 <= j <= J, q odd}`.
///
/// Order: `0` first, then ascending by value.
pub fn shear_set(max_scale: u32) -> Vec<ShearParam> {
    let mut out = vec![ShearParam::ZERO];
    let top = ceil_half(max_scale);
    let mut rest: Vec<ShearParam> = Vec::new();
    for t in 0..=top {
        let bound = 1i64 << t;
        for q in (-bound..=bound).filter(|q| q % 2 != 0) {
            rest.push(ShearParam { t, q });
        }
    }
    rest.sort();
    rest.dedup();
    out.extend(rest);
    out
}

/// Integer shear `k` with `s = k / 2^{ceil(j/2)}`.
pub fn k_for(s: ShearParam, j: u32) -> Result<i64> {
    let e = ceil_half(j);
    if e < s.t {
        return Err(Error::Domain(format!(
            "scale {j} is below the minimal scale {} of shear {s}",
            s.min_scale()
        )));
    }
    Ok(s.q << (e - s.t))
}

/// Either an integer shear `k` or a dyadic shear parameter `s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShearSpec {
    Integer(i64),
    Param(ShearParam),
}

impl ShearSpec {
    fn dyadic(&self) -> Dyadic {
        match *self {
            ShearSpec::Integer(k) => Dyadic::int(k as i128),
            ShearSpec::Param(s) => s.as_dyadic(),
        }
    }
}

/// The matrices attached to `(j, shear, p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParabolicMatrices {
    pub scale: Mat2,
    pub scale_tilde: Mat2,
    pub shear: Mat2,
    pub sampling: Mat2,
}

impl ParabolicMatrices {
    pub fn scale_inv(&self) -> Mat2 {
        self.scale.inverse().expect("parabolic scaling is invertible")
    }

    pub fn shear_inv(&self) -> Mat2 {
        self.shear.inverse().expect("shear is unimodular")
    }

    pub fn sampling_inv(&self) -> Mat2 {
        self.sampling.inverse().expect("sampling matrix is invertible")
    }

    /// `A S`.
    pub fn scale_shear(&self) -> Mat2 {
        self.scale * self.shear
    }

    /// `(A S)^{-T} = A^{-1} S^{-T}`, the frequency-side map.
    pub fn frequency_map(&self) -> Mat2 {
        self.scale_inv() * self.shear_inv().transpose()
    }
}

pub fn matrices(j: i32, shear_spec: ShearSpec, p: u32) -> ParabolicMatrices {
    ParabolicMatrices {
        scale: parabolic(j),
        scale_tilde: parabolic_tilde(j),
        shear: shear(shear_spec.dyadic()),
        sampling: oversampling(p),
    }
}

/// Full shearlet index `(cone, j, s, m, p)`; `j = -1` marks the coarse elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LambdaIndex {
    pub cone: u8,
    pub j: i32,
    pub s: ShearParam,
    pub m: (i64, i64),
    pub p: u32,
}

impl LambdaIndex {
    pub fn new(cone: u8, j: i32, s: ShearParam, m: (i64, i64), p: u32) -> Result<Self> {
        let lambda = LambdaIndex { cone, j, s, m, p };
        lambda.validate()?;
        Ok(lambda)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cone > 1 {
            return Err(Error::Domain(format!("cone {} not in {{0,1}}", self.cone)));
        }
        if self.j != -1 && (self.j < 0 || (self.j as u32) < self.s.min_scale()) {
            return Err(Error::Domain(format!(
                "scale {} below minimal scale {} of shear {}",
                self.j,
                self.s.min_scale(),
                self.s
            )));
        }
        Ok(())
    }

    pub fn is_coarse(&self) -> bool {
        self.j == -1
    }

    /// The dilation scale: `j0(s)` for coarse elements, `j` otherwise.
    pub fn dilation_scale(&self) -> u32 {
        if self.is_coarse() {
            self.s.min_scale()
        } else {
            self.j as u32
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn values(v: &[ShearParam]) -> Vec<f64> {
        let mut out: Vec<f64> = v.iter().map(|s| s.value()).collect();
        out.sort_by(f64::total_cmp);
        out
    }

    #[test]
    fn shear_set_small_cases() {
        assert_eq!(values(&shear_set(0)), vec![-1.0, 0.0, 1.0]);
        assert_eq!(values(&shear_set(2)), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(
            values(&shear_set(4)),
            vec![-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0]
        );
    }

    #[test]
    fn shear_set_order_zero_first_then_ascending() {
        let set = shear_set(5);
        assert!(set[0].is_zero());
        assert!(set[1..].windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn shear_set_cardinality_and_nesting() {
        for big_j in 0..=16u32 {
            let set = shear_set(big_j);
            assert_eq!(set.len(), (1usize << (ceil_half(big_j) + 1)) + 1, "J={big_j}");
            let bigger = shear_set(big_j + 2);
            assert!(set.iter().all(|s| bigger.contains(s)));
        }
    }

    #[test]
    fn canonical_form_enforced() {
        assert!(ShearParam::new(2, 2).is_err());
        assert!(ShearParam::new(1, 3).is_err());
        assert!(ShearParam::new(0, 0).is_ok());
        assert_eq!(ShearParam::reduce(4, 3).unwrap(), ShearParam::new(1, 1).unwrap());
        assert_eq!("-3/8".parse::<ShearParam>().unwrap(), ShearParam::new(3, -3).unwrap());
        assert_eq!("2/4".parse::<ShearParam>().unwrap(), ShearParam::new(1, 1).unwrap());
    }

    #[test]
    fn k_for_examples() {
        let half = ShearParam::new(1, 1).unwrap();
        assert_eq!(k_for(half, 3).unwrap(), 2);
        assert_eq!(k_for(ShearParam::ZERO, 7).unwrap(), 0);
        assert_eq!(k_for(ShearParam::new(2, 3).unwrap(), 4).unwrap(), 3);
        assert!(k_for(ShearParam::new(2, 3).unwrap(), 2).is_err());
    }

    #[test]
    fn unique_shear_for_each_scale_and_k() {
        for j in 0..=12u32 {
            let bound = 1i64 << ceil_half(j);
            let set = shear_set(j);
            for k in (-bound..=bound).filter(|&k| k != 0) {
                let hits: Vec<_> = set
                    .iter()
                    .filter(|s| s.min_scale() <= j && k_for(**s, j).unwrap() == k)
                    .collect();
                assert_eq!(hits.len(), 1, "j={j} k={k}");
            }
        }
    }

    #[test]
    fn matrix_examples() {
        assert_eq!(parabolic(0), Mat2::IDENTITY);
        assert_eq!(parabolic(3), Mat2::diag(Dyadic::int(8), Dyadic::int(2)));
        assert_eq!(
            oversampling(3),
            Mat2::diag(Dyadic::ONE, Dyadic::new(1, 2))
        );
        assert_eq!(oversampling(0), Mat2::IDENTITY);
        assert_eq!(oversampling(1), Mat2::IDENTITY);
        for j in 0..10 {
            assert_eq!(parabolic(j).det(), Dyadic::pow2(j + floor_half(j)));
        }
        for k in -4..=4 {
            assert_eq!(shear(Dyadic::int(k)) * shear(Dyadic::int(-k)), Mat2::IDENTITY);
        }
    }

    #[test]
    fn scale_shear_commutation_is_exact() {
        for j in 0..=10u32 {
            for s in shear_set(j) {
                if s.min_scale() > j {
                    continue;
                }
                let k = k_for(s, j).unwrap();
                let ms = matrices(j as i32, ShearSpec::Param(s), 0);
                let mk = matrices(j as i32, ShearSpec::Integer(k), 0);
                let lhs = ms.scale_inv() * ms.shear_inv().transpose();
                let rhs = mk.shear_inv().transpose() * mk.scale_inv();
                assert_eq!(lhs, rhs, "j={j} s={s}");
                // A_j S_s = S_k A_j
                assert_eq!(ms.scale * ms.shear, mk.shear * mk.scale);
                // (A S)^T transposes back
                assert_eq!(ms.scale_shear(), (ms.shear.transpose() * ms.scale.transpose()).transpose());
            }
        }
    }

    #[test]
    fn lambda_validation() {
        let s = ShearParam::new(2, 1).unwrap();
        assert!(LambdaIndex::new(0, 3, s, (0, 0), 0).is_ok());
        assert!(LambdaIndex::new(0, 2, s, (0, 0), 0).is_err());
        assert!(LambdaIndex::new(0, -1, s, (0, 0), 0).is_ok());
        assert!(LambdaIndex::new(2, 3, s, (0, 0), 0).is_err());
    }
}
