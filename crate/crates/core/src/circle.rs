//! Trigonometric polynomials on the circle, stored by Fourier coefficients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `f(t) = sum_{|k| <= band} c_k e^{ikt}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleFunction {
    band: usize,
    coeffs: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircleKind {
    Real,
    Complex,
}

/// Wire format: `{band, re, im, kind}` with coefficients ordered from `-band` to `band`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircleRecord {
    pub band: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub kind: CircleKind,
}

impl CircleFunction {
    pub fn zero(band: usize) -> Self {
        Self { band, coeffs: vec![Complex64::new(0.0, 0.0); 2 * band + 1] }
    }

    /// Coefficients listed from `-band` to `band`.
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        assert!(coeffs.len() % 2 == 1, "coefficient vector must have odd length");
        Self { band: coeffs.len() / 2, coeffs }
    }

    pub fn constant(c: f64) -> Self {
        let mut f = Self::zero(0);
        f.coeffs[0] = Complex64::new(c, 0.0);
        f
    }

    /// The complex mode `e^{ikt}`.
    pub fn mode(k: i64) -> Self {
        let mut f = Self::zero(k.unsigned_abs() as usize);
        f.set(k, Complex64::new(1.0, 0.0));
        f
    }

    pub fn cos(k: usize) -> Self {
        let mut f = Self::zero(k);
        let k = k as i64;
        if k == 0 {
            f.set(0, Complex64::new(1.0, 0.0));
        } else {
            f.set(k, Complex64::new(0.5, 0.0));
            f.set(-k, Complex64::new(0.5, 0.0));
        }
        f
    }

    pub fn sin(k: usize) -> Self {
        let mut f = Self::zero(k);
        let k = k as i64;
        if k > 0 {
            f.set(k, Complex64::new(0.0, -0.5));
            f.set(-k, Complex64::new(0.0, 0.5));
        }
        f
    }

    /// Real series `a0 + sum_k a_k cos kt + b_k sin kt`, `k` starting at 1.
    pub fn from_real_series(a0: f64, a: &[f64], b: &[f64]) -> Self {
        let band = a.len().max(b.len());
        let mut f = Self::zero(band);
        f.set(0, Complex64::new(a0, 0.0));
        for k in 1..=band {
            let ak = a.get(k - 1).copied().unwrap_or(0.0);
            let bk = b.get(k - 1).copied().unwrap_or(0.0);
            f.set(k as i64, Complex64::new(0.5 * ak, -0.5 * bk));
            f.set(-(k as i64), Complex64::new(0.5 * ak, 0.5 * bk));
        }
        f
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.band {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + self.band as i64) as usize]
        }
    }

    /// Sets `c_k`, widening the band when needed.
    pub fn set(&mut self, k: i64, c: Complex64) {
        let need = k.unsigned_abs() as usize;
        if need > self.band {
            *self = self.widen(need);
        }
        let b = self.band as i64;
        self.coeffs[(k + b) as usize] = c;
    }

    pub fn widen(&self, band: usize) -> Self {
        let band = band.max(self.band);
        let mut out = Self::zero(band);
        let b = self.band as i64;
        for k in -b..=b {
            out.coeffs[(k + band as i64) as usize] = self.coeff(k);
        }
        out
    }

    /// Drops modes above `band`.
    pub fn truncate(&self, band: usize) -> Self {
        let mut out = Self::zero(band.min(self.band));
        let b = out.band as i64;
        for k in -b..=b {
            out.coeffs[(k + b) as usize] = self.coeff(k);
        }
        out
    }

    /// Smallest band that keeps every coefficient above `tol`.
    pub fn trim(&self, tol: f64) -> Self {
        let b = self.band as i64;
        let top = (0..=b)
            .rev()
            .find(|&k| self.coeff(k).norm() > tol || self.coeff(-k).norm() > tol)
            .unwrap_or(0);
        self.truncate(top as usize)
    }

    pub fn mean(&self) -> Complex64 {
        self.coeff(0)
    }

    /// Cosine coefficient `a_k = 2 Re c_k` for real functions (k >= 1).
    pub fn a(&self, k: usize) -> f64 {
        2.0 * self.coeff(k as i64).re
    }

    /// Sine coefficient `b_k = -2 Im c_k` for real functions (k >= 1).
    pub fn b(&self, k: usize) -> f64 {
        -2.0 * self.coeff(k as i64).im
    }

    pub fn is_real(&self, tol: f64) -> bool {
        let b = self.band as i64;
        (0..=b).all(|k| (self.coeff(k) - self.coeff(-k).conj()).norm() <= tol)
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let b = self.band as i64;
        let step = Complex64::from_polar(1.0, t);
        let mut w = Complex64::from_polar(1.0, -(b as f64) * t);
        let mut acc = Complex64::new(0.0, 0.0);
        for k in -b..=b {
            acc += self.coeffs[(k + b) as usize] * w;
            // re-anchor periodically to keep the phase accurate for large bands
            w = if k % 16 == 15 { Complex64::from_polar(1.0, (k + 1) as f64 * t) } else { w * step };
        }
        acc
    }

    pub fn eval_real(&self, t: f64) -> f64 {
        self.eval(t).re
    }

    pub fn map_coeffs<F: Fn(i64, Complex64) -> Complex64>(&self, f: F) -> Self {
        let b = self.band as i64;
        Self { band: self.band, coeffs: (-b..=b).map(|k| f(k, self.coeff(k))).collect() }
    }

    pub fn derivative(&self) -> Self {
        self.map_coeffs(|k, c| I * k as f64 * c)
    }

    pub fn nth_derivative(&self, n: u32) -> Self {
        (0..n).fold(self.clone(), |f, _| f.derivative())
    }

    /// Antiderivative of the mean-free part, normalized to vanish at `t = 0`.
    pub fn antiderivative(&self) -> Self {
        let mut out = self.map_coeffs(|k, c| if k == 0 { Complex64::new(0.0, 0.0) } else { c / (I * k as f64) });
        let at0: Complex64 = out.coeffs.iter().sum();
        out.set(0, -at0);
        out
    }

    /// `t -> f(t + tau)`.
    pub fn shift(&self, tau: f64) -> Self {
        self.map_coeffs(|k, c| c * Complex64::from_polar(1.0, k as f64 * tau))
    }

    /// Product with `e^{ijt}`.
    pub fn mul_exp(&self, j: i64) -> Self {
        let mut out = Self::zero(self.band + j.unsigned_abs() as usize);
        let b = self.band as i64;
        for k in -b..=b {
            out.set(k + j, self.coeff(k));
        }
        out
    }

    /// `t -> conj(f(t))`.
    pub fn conj(&self) -> Self {
        let b = self.band as i64;
        Self { band: self.band, coeffs: (-b..=b).map(|k| self.coeff(-k).conj()).collect() }
    }

    pub fn re(&self) -> Self {
        (self + &self.conj()).scale(0.5)
    }

    pub fn im(&self) -> Self {
        (&(self - &self.conj())).cmul(Complex64::new(0.0, -0.5))
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_coeffs(|_, c| c * s)
    }

    pub fn cmul(&self, s: Complex64) -> Self {
        self.map_coeffs(|_, c| c * s)
    }

    pub fn product(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.band + other.band);
        let (a, b) = (self.band as i64, other.band as i64);
        for k in -a..=a {
            for l in -b..=b {
                let idx = (k + l + out.band as i64) as usize;
                out.coeffs[idx] += self.coeff(k) * other.coeff(l);
            }
        }
        out
    }

    /// Max modulus over `n` equispaced samples.
    pub fn sup_norm(&self, n: usize) -> f64 {
        sample_points(n).map(|t| self.eval(t).norm()).fold(0.0, f64::max)
    }

    /// Max coefficient modulus: dominates nothing but vanishes exactly when `f` does.
    pub fn coeff_max(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn to_record(&self) -> CircleRecord {
        CircleRecord {
            band: self.band,
            re: self.coeffs.iter().map(|c| c.re).collect(),
            im: self.coeffs.iter().map(|c| c.im).collect(),
            kind: if self.is_real(0.0) { CircleKind::Real } else { CircleKind::Complex },
        }
    }

    pub fn from_record(r: &CircleRecord) -> crate::Result<Self> {
        let n = 2 * r.band + 1;
        if r.re.len() != n || r.im.len() != n {
            return Err(crate::Error::InvalidParameter(format!(
                "circle record: band {} needs {} coefficients, got re={} im={}",
                r.band,
                n,
                r.re.len(),
                r.im.len()
            )));
        }
        let f = Self::from_coeffs(r.re.iter().zip(&r.im).map(|(&a, &b)| Complex64::new(a, b)).collect());
        if r.kind == CircleKind::Real && !f.is_real(1e-14) {
            return Err(crate::Error::InvalidParameter("circle record flagged real has non-conjugate coefficients".into()));
        }
        Ok(f)
    }
}

impl Serialize for CircleFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_record().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CircleFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = CircleRecord::deserialize(d)?;
        Self::from_record(&r).map_err(serde::de::Error::custom)
    }
}

/// `n` equispaced points `2 pi j / n`.
pub fn sample_points(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |j| 2.0 * PI * j as f64 / n as f64)
}

fn combine(a: &CircleFunction, b: &CircleFunction, sign: f64) -> CircleFunction {
    let band = a.band.max(b.band);
    let mut out = a.widen(band);
    let bb = b.band as i64;
    for k in -bb..=bb {
        out.coeffs[(k + band as i64) as usize] += b.coeff(k) * sign;
    }
    out
}

impl Add for &CircleFunction {
    type Output = CircleFunction;
    fn add(self, rhs: Self) -> CircleFunction {
        combine(self, rhs, 1.0)
    }
}

impl Sub for &CircleFunction {
    type Output = CircleFunction;
    fn sub(self, rhs: Self) -> CircleFunction {
        combine(self, rhs, -1.0)
    }
}

impl Neg for &CircleFunction {
    type Output = CircleFunction;
    fn neg(self) -> CircleFunction {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &CircleFunction {
    type Output = CircleFunction;
    fn mul(self, rhs: f64) -> CircleFunction {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn real_poly(band: usize) -> impl Strategy<Value = CircleFunction> {
        (
            -1.0..1.0f64,
            prop::collection::vec(-1.0..1.0f64, band),
            prop::collection::vec(-1.0..1.0f64, band),
        )
            .prop_map(|(a0, a, b)| CircleFunction::from_real_series(a0, &a, &b))
    }

    #[test]
    fn cos_sin_evaluate() {
        let t = 0.37;
        assert!((CircleFunction::cos(3).eval_real(t) - (3.0 * t).cos()).abs() < 1e-15);
        assert!((CircleFunction::sin(2).eval_real(t) - (2.0 * t).sin()).abs() < 1e-15);
        assert!(CircleFunction::sin(2).is_real(0.0));
    }

    #[test]
    fn real_series_coefficients_round_trip() {
        let f = CircleFunction::from_real_series(0.5, &[1.0, -2.0], &[0.25, 3.0]);
        assert_eq!(f.a(1), 1.0);
        assert_eq!(f.b(2), 3.0);
        assert_eq!(f.mean().re, 0.5);
    }

    #[test]
    fn antiderivative_vanishes_at_zero() {
        let f = CircleFunction::from_real_series(0.0, &[1.0, 0.5, 0.1], &[0.3, -0.2, 0.7]);
        let g = f.antiderivative();
        assert!(g.eval(0.0).norm() < 1e-15);
        let back = g.derivative();
        assert!((&back - &f).coeff_max() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let f = CircleFunction::from_real_series(0.1, &[0.2], &[0.3]);
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"kind\":\"real\""));
        let g: CircleFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn bad_record_rejected() {
        let r = CircleRecord { band: 1, re: vec![0.0; 2], im: vec![0.0; 3], kind: CircleKind::Real };
        assert!(CircleFunction::from_record(&r).is_err());
    }

    proptest! {
        #[test]
        fn eval_matches_direct_sum(f in real_poly(8), t in 0.0..6.3f64) {
            let direct: Complex64 = (-8i64..=8).map(|k| f.coeff(k) * Complex64::from_polar(1.0, k as f64 * t)).sum();
            prop_assert!((f.eval(t) - direct).norm() < 1e-12);
            prop_assert!(f.eval(t).im.abs() < 1e-12);
        }

        #[test]
        fn derivative_matches_difference_quotient(f in real_poly(6), t in 0.0..6.3f64) {
            let h = 1e-5;
            let fd = (f.eval_real(t + h) - f.eval_real(t - h)) / (2.0 * h);
            prop_assert!((f.derivative().eval_real(t) - fd).abs() < 1e-7);
        }

        #[test]
        fn shift_and_exp_products(f in real_poly(5), t in 0.0..6.3f64, tau in -3.0..3.0f64) {
            prop_assert!((f.shift(tau).eval(t) - f.eval(t + tau)).norm() < 1e-12);
            let g = f.mul_exp(-2);
            prop_assert!((g.eval(t) - f.eval(t) * Complex64::from_polar(1.0, -2.0 * t)).norm() < 1e-12);
        }

        #[test]
        fn product_is_pointwise(f in real_poly(4), g in real_poly(3), t in 0.0..6.3f64) {
            prop_assert!((f.product(&g).eval(t) - f.eval(t) * g.eval(t)).norm() < 1e-12);
        }
    }
}
