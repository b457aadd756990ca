//! Entropies on the circle and their extensions to the plane.
//!
//! A map `Phi: S^1 -> R^2` is stored as the complex circle function
//! `w(t) = Phi_x(e^{it}) + i Phi_y(e^{it})`.

use crate::circle::{sample_points, CircleFunction};
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `Phi` restricted to the unit circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyMap {
    w: CircleFunction,
}

impl EntropyMap {
    pub fn from_complex(w: CircleFunction) -> Self {
        Self { w }
    }

    pub fn from_components(x: &CircleFunction, y: &CircleFunction) -> Self {
        Self { w: x + &y.cmul(I) }
    }

    /// `Phi(z) = z`.
    pub fn identity() -> Self {
        Self { w: CircleFunction::mode(1) }
    }

    pub fn complex(&self) -> &CircleFunction {
        &self.w
    }

    pub fn x(&self) -> CircleFunction {
        self.w.re()
    }

    pub fn y(&self) -> CircleFunction {
        self.w.im()
    }

    pub fn band(&self) -> usize {
        self.w.band()
    }

    pub fn eval(&self, t: f64) -> [f64; 2] {
        let v = self.w.eval(t);
        [v.re, v.im]
    }

    pub fn eval_complex(&self, t: f64) -> Complex64 {
        self.w.eval(t)
    }

    pub fn derivative(&self) -> EntropyMap {
        Self { w: self.w.derivative() }
    }

    pub fn add(&self, other: &EntropyMap) -> EntropyMap {
        Self { w: &self.w + &other.w }
    }

    pub fn scale(&self, s: f64) -> EntropyMap {
        Self { w: self.w.scale(s) }
    }

    /// `||Phi||_{C^2(S^1)}` as `sup|Phi| + sup|Phi'| + sup|Phi''|` over `n` samples.
    pub fn c2_norm(&self, n: usize) -> f64 {
        let d1 = self.w.derivative();
        let d2 = d1.derivative();
        self.w.sup_norm(n) + d1.sup_norm(n) + d2.sup_norm(n)
    }

    /// Sup distance to another map over `n` samples.
    pub fn distance(&self, other: &EntropyMap, n: usize) -> f64 {
        (&self.w - &other.w).sup_norm(n)
    }
}

/// `t -> e^{it} . d/dt Phi(e^{it})`, computed on coefficients.
pub fn ent_residual(phi: &EntropyMap) -> CircleFunction {
    // Re(e^{-it} w'(t)) = (e^{-it} w' + e^{it} conj(w')) / 2
    let d = phi.w.derivative();
    (&d.mul_exp(-1) + &d.conj().mul_exp(1)).scale(0.5)
}

/// Sup of the ENT residual over `n` samples.
pub fn ent_residual_sup(phi: &EntropyMap, n: usize) -> f64 {
    ent_residual(phi).sup_norm(n)
}

/// `Phi_f` for a real band-limited `f`.
pub fn phi_f(f: &CircleFunction) -> Result<EntropyMap> {
    if !f.is_real(1e-13) {
        return Err(Error::InvalidParameter("phi_f needs a real-valued f".into()));
    }
    let mut g = f.clone();
    for k in -1..=1 {
        g.set(k, Complex64::new(0.0, 0.0));
    }
    let psi = g.antiderivative();
    // the integrand psi(s) i e^{is} has no mean because g has no e^{-is} mode
    let phi = psi.mul_exp(1).cmul(I).antiderivative();
    let w = &phi.shift(FRAC_PI_2).cmul(I) - &phi.shift(-FRAC_PI_2).cmul(I);
    Ok(EntropyMap { w })
}

/// `psi_f`: the normalized antiderivative of `f` with its first three Fourier modes removed.
pub fn psi_f(f: &CircleFunction) -> CircleFunction {
    let mut g = f.clone();
    for k in -1..=1 {
        g.set(k, Complex64::new(0.0, 0.0));
    }
    g.antiderivative()
}

/// Closed forms of `Phi_f` for `f = cos kt` (`j = 1`) and `f = sin kt` (`j = 2`).
pub fn phi_fk_closed(k: usize, j: u8) -> Result<EntropyMap> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("closed form needs k >= 2, got {k}")));
    }
    let kf = k as f64;
    let c = (kf * FRAC_PI_2).cos();
    let c = if c.abs() < 1e-12 { 0.0 } else { c.round() };
    let ki = k as i64;
    let mut w = CircleFunction::zero(k + 1);
    match j {
        1 => {
            w.set(ki + 1, I * c / (kf * (kf + 1.0)));
            w.set(-(ki - 1), I * c / (kf * (kf - 1.0)));
        }
        2 => {
            w.set(1, Complex64::new(-2.0 / kf, 0.0));
            w.set(ki + 1, Complex64::new(c / (kf * (kf + 1.0)), 0.0));
            let prev = w.coeff(-(ki - 1));
            w.set(-(ki - 1), prev - c / (kf * (kf - 1.0)));
        }
        _ => return Err(Error::InvalidParameter(format!("j must be 1 or 2, got {j}"))),
    }
    Ok(EntropyMap { w })
}

/// Pointwise transcription of the closed forms with complex exponentials.
pub fn phi_fk_closed_at(k: usize, j: u8, t: f64) -> Complex64 {
    let kf = k as f64;
    let c = (kf * FRAC_PI_2).cos();
    let up = Complex64::from_polar(1.0, (kf + 1.0) * t) / (kf + 1.0);
    let down = Complex64::from_polar(1.0, -(kf - 1.0) * t) / (kf - 1.0);
    if j == 1 {
        I * c / kf * (up + down)
    } else {
        -2.0 / kf * Complex64::from_polar(1.0, t) + c / kf * (up - down)
    }
}

/// Jin-Kohn entropy `Sigma_j` on the plane.
pub fn jin_kohn_eval(j: u8, z: [f64; 2]) -> [f64; 2] {
    let [a, b] = z;
    match j {
        1 => [b * (1.0 - a * a - b * b / 3.0), a * (1.0 - b * b - a * a / 3.0)],
        _ => [-a * (1.0 - 2.0 * a * a / 3.0), b * (1.0 - 2.0 * b * b / 3.0)],
    }
}

/// Jacobian `J[r][c] = d Sigma_j^r / d z_c`.
pub fn jin_kohn_jacobian(j: u8, z: [f64; 2]) -> [[f64; 2]; 2] {
    let [a, b] = z;
    match j {
        1 => [
            [-2.0 * a * b, 1.0 - a * a - b * b],
            [1.0 - b * b - a * a, -2.0 * a * b],
        ],
        _ => [[-1.0 + 2.0 * a * a, 0.0], [0.0, 1.0 - 2.0 * b * b]],
    }
}

/// The circle restriction of `Sigma_j`.
pub fn jin_kohn_map(j: u8) -> EntropyMap {
    // sample on 16 points and project: Sigma_j is cubic, so modes |k| <= 3 are exact
    let n = 16;
    let vals: Vec<Complex64> = sample_points(n)
        .map(|t| {
            let v = jin_kohn_eval(j, [t.cos(), t.sin()]);
            Complex64::new(v[0], v[1])
        })
        .collect();
    let mut w = CircleFunction::zero(3);
    for k in -3i64..=3 {
        let c: Complex64 = sample_points(n)
            .zip(&vals)
            .map(|(t, v)| v * Complex64::from_polar(1.0, -(k as f64) * t))
            .sum::<Complex64>()
            / n as f64;
        w.set(k, c);
    }
    EntropyMap { w: w.map_coeffs(|_, c| Complex64::new(snap(c.re), snap(c.im))) }
}

fn snap(x: f64) -> f64 {
    if x.abs() < 1e-15 {
        0.0
    } else {
        x
    }
}

/// Smooth radial cutoff: `0` below `a`, `1` at `r = 1`, `0` beyond `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub a: f64,
    pub b: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Self { a: 0.5, b: 2.0 }
    }
}

pub const CUTOFF_PROFILE: &str = "quintic smootherstep 6x^5-15x^4+10x^3 on [a,1] and mirrored on [1,b]";

fn smoother(x: f64) -> (f64, f64) {
    let x = x.clamp(0.0, 1.0);
    let v = x * x * x * (x * (6.0 * x - 15.0) + 10.0);
    let d = 30.0 * x * x * (x - 1.0) * (x - 1.0);
    (v, d)
}

impl Cutoff {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.5 && b <= 2.0 && a < 1.0 && b > 1.0) {
            return Err(Error::InvalidCutoff(format!(
                "need 1/2 <= a < 1 < b <= 2 so that the cutoff vanishes on [0,1/2] and [2,inf), got a={a}, b={b}"
            )));
        }
        Ok(Self { a, b })
    }

    /// `(eta(r), eta'(r))`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        if r <= self.a || r >= self.b {
            (0.0, 0.0)
        } else if r <= 1.0 {
            let w = 1.0 - self.a;
            let (v, d) = smoother((r - self.a) / w);
            (v, d / w)
        } else {
            let w = self.b - 1.0;
            let (v, d) = smoother((self.b - r) / w);
            (v, -d / w)
        }
    }
}

/// `Phi~(z) = eta(|z|) Phi(z/|z|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialEntropy {
    pub phi: EntropyMap,
    pub cutoff: Cutoff,
    #[serde(skip)]
    dphi: Option<EntropyMap>,
}

impl RadialEntropy {
    pub fn new(phi: EntropyMap, cutoff: Cutoff) -> Self {
        let dphi = Some(phi.derivative());
        Self { phi, cutoff, dphi }
    }

    fn dphi(&self) -> EntropyMap {
        self.dphi.clone().unwrap_or_else(|| self.phi.derivative())
    }

    pub fn eval(&self, z: [f64; 2]) -> [f64; 2] {
        let r = z[0].hypot(z[1]);
        let (eta, _) = self.cutoff.eval(r);
        if eta == 0.0 {
            return [0.0, 0.0];
        }
        let v = self.phi.eval(z[1].atan2(z[0]));
        [eta * v[0], eta * v[1]]
    }

    pub fn jacobian(&self, z: [f64; 2]) -> [[f64; 2]; 2] {
        let r = z[0].hypot(z[1]);
        let (eta, deta) = self.cutoff.eval(r);
        if eta == 0.0 && deta == 0.0 {
            return [[0.0; 2]; 2];
        }
        let t = z[1].atan2(z[0]);
        let (s, c) = t.sin_cos();
        let w = self.phi.eval_complex(t);
        let dw = match &self.dphi {
            Some(d) => d.eval_complex(t),
            None => self.dphi().eval_complex(t),
        };
        // d/dz1 = cos t d/dr - sin t / r d/dt, d/dz2 = sin t d/dr + cos t / r d/dt
        let d1 = deta * c * w - eta * s / r * dw;
        let d2 = deta * s * w + eta * c / r * dw;
        [[d1.re, d2.re], [d1.im, d2.im]]
    }

    /// `gamma(z) = z^perp . D Phi~(z) z^perp / |z|^2`.
    pub fn gamma(&self, z: [f64; 2]) -> f64 {
        let j = self.jacobian(z);
        let p = [-z[1], z[0]];
        let dp = [j[0][0] * p[0] + j[0][1] * p[1], j[1][0] * p[0] + j[1][1] * p[1]];
        (p[0] * dp[0] + p[1] * dp[1]) / (z[0] * z[0] + z[1] * z[1])
    }

    /// `Psi(z) = (-D Phi~(z) z + gamma(z) z) / (2|z|^2)`.
    pub fn psi(&self, z: [f64; 2]) -> [f64; 2] {
        let j = self.jacobian(z);
        let r2 = z[0] * z[0] + z[1] * z[1];
        let g = self.gamma(z);
        let dz = [j[0][0] * z[0] + j[0][1] * z[1], j[1][0] * z[0] + j[1][1] * z[1]];
        [(-dz[0] + g * z[0]) / (2.0 * r2), (-dz[1] + g * z[1]) / (2.0 * r2)]
    }

    /// Max Frobenius norm of `D Psi` over a polar sample of `{r_lo <= |z| <= r_hi}` (central differences).
    pub fn dpsi_sup(&self, r_lo: f64, r_hi: f64, nr: usize, nt: usize) -> f64 {
        let h = 1e-5;
        let mut best: f64 = 0.0;
        for a in 0..=nr {
            let r = r_lo + (r_hi - r_lo) * a as f64 / nr as f64;
            for t in sample_points(nt) {
                let z = [r * t.cos(), r * t.sin()];
                let mut fro = 0.0;
                for c in 0..2 {
                    let mut zp = z;
                    let mut zm = z;
                    zp[c] += h;
                    zm[c] -= h;
                    let (p, m) = (self.psi(zp), self.psi(zm));
                    fro += ((p[0] - m[0]) / (2.0 * h)).powi(2) + ((p[1] - m[1]) / (2.0 * h)).powi(2);
                }
                best = best.max(fro.sqrt());
            }
        }
        best
    }
}

/// `Phi~` for an ENT map; rejects non-entropies.
pub fn radial_extension(phi: &EntropyMap, cutoff: Cutoff) -> Result<ExtendedEntropy> {
    let cutoff = Cutoff::new(cutoff.a, cutoff.b)?;
    let r = ent_residual_sup(phi, 512);
    if r > 1e-10 {
        return Err(Error::NotAnEntropy(r));
    }
    Ok(ExtendedEntropy::Radial(RadialEntropy::new(phi.clone(), cutoff)))
}

/// Real harmonic polynomial `Re sum_{k=0}^{K} c_k z^k`; `c_k = alpha_k - i beta_k`
/// multiplies `r^k cos k theta` by `alpha_k` and `r^k sin k theta` by `beta_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskHarmonic {
    pub coeffs: Vec<Complex64>,
}

/// Value and partial derivatives up to order three of a harmonic polynomial.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet3 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d11: f64,
    pub d12: f64,
    pub d22: f64,
    pub d111: f64,
    pub d112: f64,
    pub d122: f64,
    pub d222: f64,
}

impl DiskHarmonic {
    pub fn zero() -> Self {
        Self { coeffs: vec![Complex64::new(0.0, 0.0)] }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![Complex64::new(c, 0.0)] }
    }

    /// `r^k cos k theta`.
    pub fn phi2(k: usize) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); k + 1];
        c[k] = Complex64::new(1.0, 0.0);
        Self { coeffs: c }
    }

    /// `r^k sin k theta`.
    pub fn phi1(k: usize) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); k + 1];
        c[k] = Complex64::new(0.0, -1.0);
        Self { coeffs: c }
    }

    pub fn band(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn add(&self, other: &DiskHarmonic) -> DiskHarmonic {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &Vec<Complex64>, k: usize| v.get(k).copied().unwrap_or_default();
        Self { coeffs: (0..n).map(|k| get(&self.coeffs, k) + get(&other.coeffs, k)).collect() }
    }

    pub fn scale(&self, s: f64) -> DiskHarmonic {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// `(F, F', F'', F''')` at `z`.
    fn holo(&self, z: Complex64) -> [Complex64; 4] {
        let mut out = [Complex64::new(0.0, 0.0); 4];
        for (d, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, c) in self.coeffs.iter().enumerate().skip(d).rev() {
                let falling: f64 = (0..d).map(|q| (k - q) as f64).product();
                acc = acc * z + c * falling;
            }
            *o = acc;
        }
        out
    }

    pub fn eval(&self, z: [f64; 2]) -> f64 {
        self.holo(Complex64::new(z[0], z[1]))[0].re
    }

    pub fn jet(&self, z: [f64; 2]) -> Jet3 {
        let [f, f1, f2, f3] = self.holo(Complex64::new(z[0], z[1]));
        Jet3 {
            v: f.re,
            d1: f1.re,
            d2: -f1.im,
            d11: f2.re,
            d12: -f2.im,
            d22: -f2.re,
            d111: f3.re,
            d112: -f3.im,
            d122: -f3.re,
            d222: f3.im,
        }
    }

    /// Restriction to the circle as a real circle function.
    pub fn on_circle(&self) -> CircleFunction {
        let k = self.band();
        let mut f = CircleFunction::zero(k);
        f.set(0, Complex64::new(self.coeffs[0].re, 0.0));
        for (j, c) in self.coeffs.iter().enumerate().skip(1) {
            f.set(j as i64, c * 0.5);
            f.set(-(j as i64), c.conj() * 0.5);
        }
        f
    }
}

/// `E psi` for a real `psi`.
pub fn harmonic_extension(psi: &CircleFunction) -> Result<DiskHarmonic> {
    if !psi.is_real(1e-13) {
        return Err(Error::InvalidParameter("harmonic_extension needs a real psi; use harmonic_extension_complex".into()));
    }
    let mut coeffs = vec![Complex64::new(psi.coeff(0).re, 0.0)];
    coeffs.extend((1..=psi.band()).map(|k| psi.coeff(k as i64) * 2.0));
    Ok(DiskHarmonic { coeffs })
}

/// `E psi = E(Re psi) + i E(Im psi)` as a pair of real harmonic polynomials.
pub fn harmonic_extension_complex(psi: &CircleFunction) -> (DiskHarmonic, DiskHarmonic) {
    (harmonic_extension(&psi.re()).unwrap(), harmonic_extension(&psi.im()).unwrap())
}

/// `E psi` at `z = r e^{i theta}` straight from the modes `r^{|k|} e^{ik theta}`.
pub fn harmonic_extension_at(psi: &CircleFunction, r: f64, theta: f64) -> Complex64 {
    let b = psi.band() as i64;
    (-b..=b)
        .map(|k| psi.coeff(k) * r.powi(k.abs() as i32) * Complex64::from_polar(1.0, k as f64 * theta))
        .sum()
}

/// `Phi^phi(z) = phi(z) z + ((iz) . grad phi(z)) iz` with the auxiliary fields of its production.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicEntropy {
    pub phi: DiskHarmonic,
}

impl HarmonicEntropy {
    pub fn eval(&self, z: [f64; 2]) -> [f64; 2] {
        let j = self.phi.jet(z);
        let iz = [-z[1], z[0]];
        let l = iz[0] * j.d1 + iz[1] * j.d2;
        [j.v * z[0] + l * iz[0], j.v * z[1] + l * iz[1]]
    }

    pub fn jacobian(&self, z: [f64; 2]) -> [[f64; 2]; 2] {
        let j = self.phi.jet(z);
        let [z1, z2] = z;
        let iz = [-z2, z1];
        let l = -z2 * j.d1 + z1 * j.d2;
        let dl = [-z2 * j.d11 + j.d2 + z1 * j.d12, -j.d1 - z2 * j.d12 + z1 * j.d22];
        let dphi = [j.d1, j.d2];
        let ie = [[0.0, 1.0], [-1.0, 0.0]];
        let mut out = [[0.0; 2]; 2];
        for c in 0..2 {
            for r in 0..2 {
                let e = if r == c { 1.0 } else { 0.0 };
                out[r][c] = dphi[c] * z[r] + j.v * e + dl[c] * iz[r] + l * ie[c][r];
            }
        }
        out
    }

    pub fn b(&self, z: [f64; 2]) -> [f64; 2] {
        let j = self.phi.jet(z);
        let [z1, z2] = z;
        [j.d1 - 0.5 * z1 * j.d22 + 0.5 * z2 * j.d12, j.d2 - 0.5 * z2 * j.d11 + 0.5 * z1 * j.d12]
    }

    pub fn q(&self, z: [f64; 2]) -> [f64; 2] {
        let j = self.phi.jet(z);
        let [z1, z2] = z;
        [
            1.5 * j.d12 - 0.5 * z1 * j.d222 + 0.5 * z2 * j.d122,
            -1.5 * j.d11 + 0.5 * z1 * j.d122 - 0.5 * z2 * j.d112,
        ]
    }

    pub fn a(&self, z: [f64; 2]) -> [f64; 2] {
        let [q1, q2] = self.q(z);
        let [z1, z2] = z;
        let c = z1 * z1 - z2 * z2;
        let s = 2.0 * z1 * z2;
        [c * q1 + s * q2, -s * q1 + c * q2]
    }

    /// Restriction to the circle.
    pub fn on_circle(&self) -> EntropyMap {
        // Phi^phi on S^1 has band <= K + 1; sample and project exactly
        let band = self.phi.band() + 1;
        let n = 4 * band + 8;
        let mut w = CircleFunction::zero(band);
        let vals: Vec<Complex64> = sample_points(n)
            .map(|t| {
                let v = self.eval([t.cos(), t.sin()]);
                Complex64::new(v[0], v[1])
            })
            .collect();
        for k in -(band as i64)..=(band as i64) {
            let c: Complex64 = sample_points(n)
                .zip(&vals)
                .map(|(t, v)| v * Complex64::from_polar(1.0, -(k as f64) * t))
                .sum::<Complex64>()
                / n as f64;
            w.set(k, c);
        }
        EntropyMap::from_complex(w)
    }
}

pub fn harmonic_entropy(phi: &DiskHarmonic) -> ExtendedEntropy {
    ExtendedEntropy::Harmonic(HarmonicEntropy { phi: phi.clone() })
}

/// `xi_f = sum_{k>=1} (-1)^k / (k(1-2k)(1+2k)) (-a_{2k} phi^1_{2k} + b_{2k} phi^2_{2k})`.
pub fn xi_f(f: &CircleFunction) -> Result<DiskHarmonic> {
    if !f.is_real(1e-13) {
        return Err(Error::InvalidParameter("xi_f needs a real-valued f".into()));
    }
    let kmax = f.band() / 2;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * kmax + 1];
    for k in 1..=kmax {
        let kf = k as f64;
        let w = if k % 2 == 0 { 1.0 } else { -1.0 } / (kf * (1.0 - 2.0 * kf) * (1.0 + 2.0 * kf));
        // alpha = w b_{2k}, beta = -w a_{2k}, c = alpha - i beta
        coeffs[2 * k] = Complex64::new(w * f.b(2 * k), w * f.a(2 * k));
    }
    Ok(DiskHarmonic { coeffs })
}

/// Coefficient of the linear term relating `Phi^{xi_f}` and `Phi_f` on the circle.
pub fn xi_linear_term(f: &CircleFunction) -> f64 {
    (2..=f.band()).map(|k| 2.0 * f.b(k) / k as f64).sum()
}

/// Fourier multipliers: `j = 1`: `c_k -> (ik/2)(k^2-1) c_k`; `j = 2`: `c_k -> -(|k|/2)(k^2-1) c_k`.
pub fn multiplier(j: u8, psi: &CircleFunction) -> Result<CircleFunction> {
    match j {
        1 => Ok(psi.map_coeffs(|k, c| I * (k as f64 / 2.0) * ((k * k - 1) as f64) * c)),
        2 => Ok(psi.map_coeffs(|k, c| -(k.abs() as f64 / 2.0) * ((k * k - 1) as f64) * c)),
        _ => Err(Error::InvalidParameter(format!("multiplier index must be 1 or 2, got {j}"))),
    }
}

/// `-(psi''' + psi') / 2`.
pub fn multiplier1_differential(psi: &CircleFunction) -> CircleFunction {
    (&psi.nth_derivative(3) + &psi.derivative()).scale(-0.5)
}

/// An entropy with an evaluable extension to the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExtendedEntropy {
    Radial(RadialEntropy),
    Harmonic(HarmonicEntropy),
    JinKohn { j: u8 },
    /// `z -> z`.
    Linear,
    Combination { terms: Vec<(f64, ExtendedEntropy)> },
}

pub fn jin_kohn(j: u8) -> Result<ExtendedEntropy> {
    if j == 1 || j == 2 {
        Ok(ExtendedEntropy::JinKohn { j })
    } else {
        Err(Error::InvalidParameter(format!("Jin-Kohn index must be 1 or 2, got {j}")))
    }
}

impl ExtendedEntropy {
    pub fn eval(&self, z: [f64; 2]) -> [f64; 2] {
        match self {
            ExtendedEntropy::Radial(r) => r.eval(z),
            ExtendedEntropy::Harmonic(h) => h.eval(z),
            ExtendedEntropy::JinKohn { j } => jin_kohn_eval(*j, z),
            ExtendedEntropy::Linear => z,
            ExtendedEntropy::Combination { terms } => terms.iter().fold([0.0, 0.0], |acc, (c, e)| {
                let v = e.eval(z);
                [acc[0] + c * v[0], acc[1] + c * v[1]]
            }),
        }
    }

    pub fn jacobian(&self, z: [f64; 2]) -> [[f64; 2]; 2] {
        match self {
            ExtendedEntropy::Radial(r) => r.jacobian(z),
            ExtendedEntropy::Harmonic(h) => h.jacobian(z),
            ExtendedEntropy::JinKohn { j } => jin_kohn_jacobian(*j, z),
            ExtendedEntropy::Linear => [[1.0, 0.0], [0.0, 1.0]],
            ExtendedEntropy::Combination { terms } => {
                let mut out = [[0.0; 2]; 2];
                for (c, e) in terms {
                    let j = e.jacobian(z);
                    for r in 0..2 {
                        for k in 0..2 {
                            out[r][k] += c * j[r][k];
                        }
                    }
                }
                out
            }
        }
    }

    /// Largest `|z|` at which the extension is defined.
    pub fn max_radius(&self) -> f64 {
        match self {
            ExtendedEntropy::Harmonic(_) => 1.0 + 1e-10,
            ExtendedEntropy::Combination { terms } => {
                terms.iter().map(|(_, e)| e.max_radius()).fold(f64::INFINITY, f64::min)
            }
            _ => f64::INFINITY,
        }
    }

    /// Restriction to the circle.
    pub fn on_circle(&self) -> EntropyMap {
        match self {
            ExtendedEntropy::Radial(r) => r.phi.clone(),
            ExtendedEntropy::Harmonic(h) => h.on_circle(),
            ExtendedEntropy::JinKohn { j } => jin_kohn_map(*j),
            ExtendedEntropy::Linear => EntropyMap::identity(),
            ExtendedEntropy::Combination { terms } => terms
                .iter()
                .fold(EntropyMap::from_complex(CircleFunction::zero(0)), |acc, (c, e)| acc.add(&e.on_circle().scale(*c))),
        }
    }
}
