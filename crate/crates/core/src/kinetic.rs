//! Kinetic density `chi(x, s) = 1{e^{is} . m(x) > 0}`, kinetic measures and the weak
//! kinetic equation `e^{is} . grad_x chi = d_s sigma`.
//!
//! Weak form, for `zeta(x, s) = b(x) q(s)`:
//! `residual = iint chi e^{is} . grad_x zeta dx ds - iint d_s zeta d sigma`.
//! Both terms come from moving the derivative onto `zeta`, so a constant field with
//! `sigma = 0` gives zero. `grad_x b` is taken by centred differences on the grid, which
//! makes the `x`-sum a discrete summation by parts.

use crate::circle::CircleFunction;
use crate::error::{Error, Result};
use crate::fields::{unit, wrap_angle, AngleField, FieldSpec, Grid2, Region, ScalarField, VecField};
use crate::quad;
use crate::regularity::Bump;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Below this modulus a mollified field has no usable angle.
pub const DEAD_ZONE: f64 = 0.5;
pub const MIN_NS: usize = 64;

/// `int_a^b f(s) ds`, exact for trigonometric polynomials.
pub fn arc_integral(f: &CircleFunction, a: f64, b: f64) -> Complex64 {
    let band = f.band() as i64;
    (-band..=band)
        .map(|k| {
            let c = f.coeff(k);
            if k == 0 {
                c * (b - a)
            } else {
                let kf = k as f64;
                c * (Complex64::from_polar(1.0, kf * b) - Complex64::from_polar(1.0, kf * a)) / Complex64::new(0.0, kf)
            }
        })
        .sum()
}

/// `int chi(theta, s) f(s) ds` over the half circle `(theta - pi/2, theta + pi/2)`.
pub fn chi_integral(f: &CircleFunction, theta: f64) -> Complex64 {
    arc_integral(f, theta - FRAC_PI_2, theta + FRAC_PI_2)
}

/// The circle function `e^{is} q(s)`.
fn e_is(q: &CircleFunction) -> CircleFunction {
    q.mul_exp(1)
}

/// Angle of a vector field. Cells with `|v| < 1/2` are masked out.
pub fn theta_of(v: &VecField) -> ScalarField {
    let mut mask = v.mask.clone();
    let values = v
        .values
        .iter()
        .enumerate()
        .map(|(k, w)| {
            if w[0].hypot(w[1]) < DEAD_ZONE {
                mask[k] = false;
                0.0
            } else {
                wrap_angle(w[1].atan2(w[0]))
            }
        })
        .collect();
    ScalarField { grid: v.grid, values, mask }
}

/// Cells of `region` (inside the field mask) with `|v| < 1/2`.
pub fn dead_cells(v: &VecField, region: &Region) -> usize {
    (0..v.grid.len())
        .filter(|&k| v.mask[k] && region.contains(v.grid.center_of(k)))
        .filter(|&k| v.values[k][0].hypot(v.values[k][1]) < DEAD_ZONE)
        .count()
}

/// `chi` sampled at the centres of a uniform partition of `[0, 2 pi)`.
#[derive(Debug, Clone)]
pub struct KineticLattice {
    pub grid: Grid2,
    pub ns: usize,
    pub theta: Vec<f64>,
    pub mask: Vec<bool>,
    chi: Vec<bool>,
}

impl KineticLattice {
    pub fn from_theta(theta: &ScalarField, ns: usize) -> Result<Self> {
        if ns < MIN_NS {
            return Err(Error::InvalidParameter(format!("ns must be at least {MIN_NS}, got {ns}")));
        }
        let s: Vec<f64> = (0..ns).map(|l| Self::node(ns, l)).collect();
        let chi = theta
            .values
            .par_iter()
            .flat_map_iter(|&t| s.iter().map(move |&sl| (sl - t).cos() > 0.0))
            .collect();
        Ok(Self { grid: theta.grid, ns, theta: theta.values.clone(), mask: theta.mask.clone(), chi })
    }

    fn node(ns: usize, l: usize) -> f64 {
        (l as f64 + 0.5) * TAU / ns as f64
    }

    pub fn s(&self, l: usize) -> f64 {
        Self::node(self.ns, l)
    }

    pub fn ds(&self) -> f64 {
        TAU / self.ns as f64
    }

    pub fn chi(&self, cell: usize, l: usize) -> bool {
        self.chi[cell * self.ns + l]
    }

    /// Lattice value of `int_0^{2 pi} chi(x, s) ds`.
    pub fn half_measure(&self, cell: usize) -> f64 {
        (0..self.ns).filter(|&l| self.chi(cell, l)).count() as f64 * self.ds()
    }
}

pub fn chi_lattice(m: &AngleField, ns: usize) -> Result<KineticLattice> {
    let theta = ScalarField { grid: m.grid, values: m.theta().to_vec(), mask: vec![true; m.grid.len()] };
    KineticLattice::from_theta(&theta, ns)
}

/// `|int (chi(x0,s) - chi(x1,s)) q(s) ds| / (|q|_inf |m(x0) - m(x1)|)`; `None` when `m(x0) = m(x1)`.
pub fn chi_difference_ratio(theta0: f64, theta1: f64, q: &CircleFunction) -> Option<f64> {
    let m0 = unit(theta0);
    let m1 = unit(theta1);
    let dm = (m0[0] - m1[0]).hypot(m0[1] - m1[1]);
    let qmax = q.sup_norm(4096);
    if dm < 1e-14 || qmax == 0.0 {
        return None;
    }
    let diff = chi_integral(q, theta0) - chi_integral(q, theta1);
    Some(diff.norm() / (qmax * dm))
}

/// Factorized kinetic measure
/// `sigma_x = g(x)/2 (delta_{theta + pi/2} + delta_{theta - pi/2} - Lebesgue/pi)`
/// with `g = e^{2 i theta} . div Sigma(m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticMeasure {
    pub grid: Grid2,
    pub theta: Vec<f64>,
    pub g: Vec<f64>,
    pub mask: Vec<bool>,
}

impl KineticMeasure {
    /// Atom locations and weights at a cell.
    pub fn atoms(&self, cell: usize) -> [(f64, f64); 2] {
        let t = self.theta[cell];
        let w = 0.5 * self.g[cell];
        [(wrap_angle(t + FRAC_PI_2), w), (wrap_angle(t - FRAC_PI_2), w)]
    }

    /// Constant density of the Lebesgue part.
    pub fn density(&self, cell: usize) -> f64 {
        -self.g[cell] / TAU
    }

    /// `sigma_x(R / 2 pi Z)`.
    pub fn mass(&self, cell: usize) -> f64 {
        let [(_, w0), (_, w1)] = self.atoms(cell);
        w0 + w1 - self.g[cell]
    }

    /// Total variation `nu(x) = 2 |g(x)|`.
    pub fn nu(&self) -> ScalarField {
        ScalarField { grid: self.grid, values: self.g.iter().map(|g| 2.0 * g.abs()).collect(), mask: self.mask.clone() }
    }

    /// `int f d sigma_x`: atoms exactly, Lebesgue part through the mean of `f`.
    pub fn pair_cell(&self, cell: usize, f: &CircleFunction) -> f64 {
        let [(a0, w0), (a1, w1)] = self.atoms(cell);
        w0 * f.eval_real(a0) + w1 * f.eval_real(a1) - self.g[cell] * f.mean().re
    }

    /// Same pairing with the Lebesgue part done by Gauss-Legendre quadrature.
    pub fn pair_cell_quadrature(&self, cell: usize, f: &CircleFunction) -> f64 {
        let [(a0, w0), (a1, w1)] = self.atoms(cell);
        let panels = 2 * f.band().max(1) + 2;
        let lebesgue = quad::composite_gl(|s| f.eval_real(s), 0.0, TAU, panels);
        w0 * f.eval_real(a0) + w1 * f.eval_real(a1) + self.density(cell) * lebesgue
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("kinetic measure serializes")
    }
}

/// `sigma` built from `theta` and the Jin-Kohn productions `(div Sigma_1, div Sigma_2)`.
pub fn sigma_factorized(theta: &ScalarField, div_sigma: (&ScalarField, &ScalarField)) -> Result<KineticMeasure> {
    theta.grid.same_as(&div_sigma.0.grid)?;
    theta.grid.same_as(&div_sigma.1.grid)?;
    let n = theta.grid.len();
    let mask: Vec<bool> = (0..n).map(|k| theta.mask[k] && div_sigma.0.mask[k] && div_sigma.1.mask[k]).collect();
    let g = (0..n)
        .map(|k| {
            if !mask[k] {
                return 0.0;
            }
            let (s, c) = (2.0 * theta.values[k]).sin_cos();
            c * div_sigma.0.values[k] + s * div_sigma.1.values[k]
        })
        .collect();
    Ok(KineticMeasure { grid: theta.grid, theta: theta.values.clone(), g, mask })
}

/// `sum_cells (int f d sigma_x) zeta(x) |cell|`.
pub fn pair_sigma(sigma: &KineticMeasure, f: &CircleFunction, zeta: &ScalarField) -> Result<f64> {
    sigma.grid.same_as(&zeta.grid)?;
    let area = sigma.grid.cell_area();
    Ok((0..sigma.grid.len())
        .filter(|&k| sigma.mask[k] && zeta.mask[k])
        .map(|k| sigma.pair_cell(k, f) * zeta.values[k])
        .sum::<f64>()
        * area)
}

/// Kinetic measure of a straight jump: `H^1 restricted to the line` times the circle density
/// `sigma_J` with `sigma_J' = (e^{is} . eta)(chi_+ - chi_-)`, normalized to zero mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpKinetic {
    pub normal: [f64; 2],
    pub offset: f64,
    pub theta_plus: f64,
    pub theta_minus: f64,
}

impl JumpKinetic {
    pub fn from_spec(spec: &FieldSpec) -> Result<Self> {
        match *spec {
            FieldSpec::Jump { normal, offset, theta_plus, theta_minus } => {
                spec.validate()?;
                Ok(Self { normal, offset, theta_plus, theta_minus })
            }
            _ => Err(Error::InvalidParameter("jump kinetic measure needs a jump field".into())),
        }
    }

    /// `e^{is} . eta` as a circle function.
    fn eta_dot(&self) -> CircleFunction {
        let eta = Complex64::new(self.normal[0], self.normal[1]);
        CircleFunction::from_coeffs(vec![eta / 2.0, Complex64::new(0.0, 0.0), eta.conj() / 2.0])
    }

    /// `int q(s) (e^{is} . eta)(chi_+ - chi_-) ds`.
    pub fn flux(&self, q: &CircleFunction) -> f64 {
        let w = q.product(&self.eta_dot());
        (chi_integral(&w, self.theta_plus) - chi_integral(&w, self.theta_minus)).re
    }

    fn primitive(&self, s: f64) -> f64 {
        let w = self.eta_dot();
        let part = |theta: f64| {
            let lo = theta - FRAC_PI_2;
            // arc of chi(theta, .) inside [0, s], unrolled over the two lifts that can meet [0, 2 pi)
            [lo - TAU, lo, lo + TAU]
                .iter()
                .map(|&a| {
                    let (l, r) = (a.max(0.0), (a + PI).min(s));
                    if r > l {
                        arc_integral(&w, l, r).re
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
        };
        part(self.theta_plus) - part(self.theta_minus)
    }

    /// Kinks of `sigma_J` in `[0, 2 pi)`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = [self.theta_plus, self.theta_minus]
            .iter()
            .flat_map(|&t| [wrap_angle(t + FRAC_PI_2), wrap_angle(t - FRAC_PI_2)])
            .collect();
        b.sort_by(f64::total_cmp);
        b
    }

    /// Circle density `sigma_J(s)`.
    pub fn density(&self, s: f64) -> f64 {
        let s = wrap_angle(s);
        let mean = quad::integrate_split(|t| self.primitive(t), 0.0, TAU, &self.breakpoints(), 1e-14) / TAU;
        self.primitive(s) - mean
    }

    /// `int_J b dH^1` for a bump `b`.
    pub fn line_integral(&self, b: &Bump) -> f64 {
        let n = self.normal;
        let foot = {
            let d = n[0] * b.center[0] + n[1] * b.center[1] - self.offset;
            [b.center[0] - d * n[0], b.center[1] - d * n[1]]
        };
        let tang = [-n[1], n[0]];
        let r = b.radius;
        quad::integrate(|t| b.eval([foot[0] + t * tang[0], foot[1] + t * tang[1]]), -r, r, 1e-13)
    }
}

/// Test function `zeta(x, s) = b(x) q(s)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestFunction {
    pub bump: Bump,
    pub q: CircleFunction,
}

/// Right-hand measure of the kinetic equation.
#[derive(Debug, Clone, Copy)]
pub enum Sigma<'a> {
    Zero,
    Factorized(&'a KineticMeasure),
    Jump(&'a JumpKinetic),
}

/// How the `s`-integral of `chi` is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcRule {
    /// Midpoint sums over the lattice `s`-cells.
    Lattice,
    /// Exact integration over the half circle.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticResidual {
    pub id: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

fn support_cells(lattice: &KineticLattice, b: &Bump) -> Result<Vec<usize>> {
    let g = &lattice.grid;
    let (lo, up) = (g.origin, g.upper());
    if b.center[0] - b.radius < lo[0]
        || b.center[1] - b.radius < lo[1]
        || b.center[0] + b.radius > up[0]
        || b.center[1] + b.radius > up[1]
    {
        return Err(Error::SupportOnBoundary);
    }
    let h = g.spacing;
    let cells: Vec<usize> = (0..g.len())
        .filter(|&k| {
            let x = g.center_of(k);
            (x[0] - b.center[0]).hypot(x[1] - b.center[1]) < b.radius + 1.5 * h
        })
        .collect();
    if cells.iter().any(|&k| !lattice.mask[k]) {
        return Err(Error::SupportOnBoundary);
    }
    Ok(cells)
}

/// Centred-difference gradient of a bump at a point.
fn grad_h(b: &Bump, x: [f64; 2], h: f64) -> [f64; 2] {
    [
        (b.eval([x[0] + h, x[1]]) - b.eval([x[0] - h, x[1]])) / (2.0 * h),
        (b.eval([x[0], x[1] + h]) - b.eval([x[0], x[1] - h])) / (2.0 * h),
    ]
}

/// Per test function residual of the weak kinetic equation.
pub fn kinetic_residual(
    lattice: &KineticLattice,
    sigma: Sigma<'_>,
    tests: &[TestFunction],
    rule: ArcRule,
) -> Result<Vec<KineticResidual>> {
    if let Sigma::Factorized(m) = sigma {
        lattice.grid.same_as(&m.grid)?;
    }
    let area = lattice.grid.cell_area();
    tests
        .iter()
        .enumerate()
        .map(|(id, t)| {
            let cells = support_cells(lattice, &t.bump)?;
            let w = e_is(&t.q);
            let samples: Vec<Complex64> = (0..lattice.ns).map(|l| w.eval(lattice.s(l))).collect();
            let lhs = cells
                .par_iter()
                .map(|&k| {
                    let v = match rule {
                        ArcRule::Exact => chi_integral(&w, lattice.theta[k]),
                        ArcRule::Lattice => {
                            samples.iter().enumerate().filter(|&(l, _)| lattice.chi(k, l)).map(|(_, z)| z).sum::<Complex64>()
                                * lattice.ds()
                        }
                    };
                    let gb = grad_h(&t.bump, lattice.grid.center_of(k), lattice.grid.spacing);
                    gb[0] * v.re + gb[1] * v.im
                })
                .collect::<Vec<f64>>()
                .iter()
                .sum::<f64>()
                * area;
            let rhs = match sigma {
                Sigma::Zero => 0.0,
                Sigma::Factorized(m) => {
                    let dq = t.q.derivative();
                    cells.iter().filter(|&&k| m.mask[k]).map(|&k| t.bump.eval(m.grid.center_of(k)) * m.pair_cell(k, &dq)).sum::<f64>()
                        * area
                }
                Sigma::Jump(j) => -j.line_integral(&t.bump) * j.flux(&t.q),
            };
            Ok(KineticResidual { id, lhs, rhs, residual: lhs - rhs })
        })
        .collect()
}

/// CSV rows `zeta_id,level,lhs,rhs,residual`.
pub fn residuals_to_csv(rows: &[(usize, KineticResidual)]) -> String {
    let mut out = String::from("zeta_id,level,lhs,rhs,residual\n");
    for (level, r) in rows {
        out.push_str(&format!("{},{},{},{},{}\n", r.id, level, r.lhs, r.rhs, r.residual));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::phi_f;
    use crate::fields::{build_field, mollify, Mollifier};
    use crate::production::div_sigma_closed;

    fn trig(a0: f64, a: &[f64], b: &[f64]) -> CircleFunction {
        CircleFunction::from_real_series(a0, a, b)
    }

    #[test]
    fn theta_conventions() {
        let g = Grid2::new(4, 4, 1.0, [0.0, 0.0]).unwrap();
        let mut vals = vec![[1.0, 0.0]; 16];
        vals[1] = [0.0, 1.0];
        vals[2] = [-1.0, 0.0];
        vals[3] = [0.1, 0.1];
        let th = theta_of(&VecField::new(g, vals, vec![true; 16]).unwrap());
        assert_eq!(th.values[0], 0.0);
        assert_eq!(th.values[1], FRAC_PI_2);
        assert_eq!(th.values[2], PI);
        assert!(!th.mask[3] && th.mask[2]);
    }

    #[test]
    fn chi_is_a_half_circle() {
        let g = Grid2::centered_square(8, 1.0).unwrap();
        let m = build_field(&FieldSpec::Vortex { center: [0.01, 0.02] }, &g).unwrap();
        let lat = chi_lattice(&m, 128).unwrap();
        for k in 0..g.len() {
            assert!((lat.half_measure(k) - PI).abs() < 1e-12);
        }
        let c = chi_lattice(&build_field(&FieldSpec::Constant { theta: 0.0 }, &g).unwrap(), 64).unwrap();
        for l in 0..64 {
            let s = c.s(l);
            assert_eq!(c.chi(0, l), !(FRAC_PI_2..3.0 * FRAC_PI_2).contains(&s));
        }
        assert!(chi_lattice(&m, 32).is_err());
    }

    #[test]
    fn chi_difference_is_lipschitz() {
        let q = trig(0.3, &[1.0, -0.5, 0.2], &[0.4, 0.0, -0.7]);
        let mut worst: f64 = 0.0;
        for k in 0..200 {
            let t0 = 0.1 * k as f64;
            let t1 = t0 + 0.03 * ((k % 17) as f64 + 1.0);
            worst = worst.max(chi_difference_ratio(t0, t1, &q).unwrap());
        }
        assert!(worst < 2.0, "{worst}");
        assert!(chi_difference_ratio(1.0, 1.0, &q).is_none());
    }

    #[test]
    fn factorized_measure_masses() {
        let g = Grid2::new(4, 4, 0.5, [0.0, 0.0]).unwrap();
        let theta = ScalarField::from_fn(g, |x| x[0] + 2.0 * x[1]);
        let d1 = ScalarField::from_fn(g, |x| (3.0 * x[0]).sin() * 1.7);
        let d2 = ScalarField::from_fn(g, |x| x[1].exp() - 1.3);
        let s = sigma_factorized(&theta, (&d1, &d2)).unwrap();
        let f = trig(0.7, &[0.2, -1.1, 0.5], &[0.0, 0.3, 0.9]);
        for k in 0..g.len() {
            assert_eq!(s.mass(k), 0.0);
            assert_eq!(s.nu().values[k], 2.0 * s.g[k].abs());
            let t = s.theta[k];
            let closed = (0.5 * f.eval_real(t + FRAC_PI_2) + 0.5 * f.eval_real(t - FRAC_PI_2) - f.mean().re) * s.g[k];
            assert!((s.pair_cell(k, &f) - closed).abs() < 1e-13);
            assert!((s.pair_cell_quadrature(k, &f) - closed).abs() < 1e-12);
            assert_eq!(s.pair_cell(k, &CircleFunction::constant(1.0)), 0.0);
        }
        let zeros = ScalarField::from_fn(g, |_| 0.0);
        let s0 = sigma_factorized(&theta, (&zeros, &zeros)).unwrap();
        assert!(s0.nu().values.iter().all(|&v| v == 0.0));
        let back: KineticMeasure = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn pair_sigma_on_constant_angle() {
        let g = Grid2::new(5, 4, 0.25, [0.0, 0.0]).unwrap();
        let th = 0.4;
        let theta = ScalarField::from_fn(g, |_| th);
        let d1 = ScalarField::from_fn(g, |x| x[0] - x[1]);
        let d2 = ScalarField::from_fn(g, |x| x[0] * x[1]);
        let zeta = ScalarField::from_fn(g, |x| 1.0 + x[0]);
        let s = sigma_factorized(&theta, (&d1, &d2)).unwrap();
        let sum: f64 = (0..g.len()).map(|k| s.g[k] * zeta.values[k]).sum::<f64>() * g.cell_area();
        let got = pair_sigma(&s, &CircleFunction::cos(2), &zeta).unwrap();
        assert!((got + (2.0 * th).cos() * sum).abs() < 1e-14);
        assert_eq!(pair_sigma(&s, &CircleFunction::constant(1.0), &zeta).unwrap(), 0.0);
        assert_eq!(pair_sigma(&s, &CircleFunction::cos(2), &zeta.map(|_| 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn jump_density_balances() {
        let spec = FieldSpec::Jump { normal: [0.0, 1.0], offset: 0.0, theta_plus: 0.3, theta_minus: PI - 0.3 };
        let j = JumpKinetic::from_spec(&spec).unwrap();
        let m0 = quad::integrate_split(|s| j.density(s), 0.0, TAU, &j.breakpoints(), 1e-14);
        assert!(m0.abs() < 1e-12);
        let h = 1e-6;
        for s in [0.1, 1.0, 2.5, 4.0, 5.9] {
            let d = (j.density(s + h) - j.density(s - h)) / (2.0 * h);
            let chi = |t: f64| if (s - t).cos() > 0.0 { 1.0 } else { 0.0 };
            let expect = s.sin() * (chi(j.theta_plus) - chi(j.theta_minus));
            assert!((d - expect).abs() < 1e-6, "{s}: {d} vs {expect}");
        }
        // without first harmonics, int f sigma_J = eta . (Phi_f(m+) - Phi_f(m-))
        let f = trig(0.0, &[0.0, 0.8, -0.3, 0.1], &[0.0, 0.5, 0.2, -0.4]);
        let lhs = quad::integrate_split(|s| f.eval_real(s) * j.density(s), 0.0, TAU, &j.breakpoints(), 1e-14);
        let phi = phi_f(&f).unwrap();
        let (p, q) = (phi.eval(j.theta_plus), phi.eval(j.theta_minus));
        assert!((lhs - (p[1] - q[1])).abs() < 1e-9, "{lhs} vs {}", p[1] - q[1]);
    }

    fn suite() -> Vec<TestFunction> {
        vec![
            TestFunction { bump: Bump { center: [0.1, 0.5], radius: 0.3 }, q: trig(0.2, &[1.0, 0.5], &[-0.3, 0.8]) },
            TestFunction { bump: Bump { center: [-0.4, 0.0], radius: 0.35 }, q: trig(0.0, &[0.0, 0.0, 1.0], &[0.6]) },
            TestFunction { bump: Bump { center: [0.3, -0.45], radius: 0.25 }, q: CircleFunction::sin(3) },
        ]
    }

    #[test]
    fn constant_field_residual_vanishes() {
        let g = Grid2::centered_square(64, 1.0).unwrap();
        let m = build_field(&FieldSpec::Constant { theta: 0.7 }, &g).unwrap();
        let lat = chi_lattice(&m, 64).unwrap();
        for rule in [ArcRule::Exact, ArcRule::Lattice] {
            for r in kinetic_residual(&lat, Sigma::Zero, &suite(), rule).unwrap() {
                assert!(r.residual.abs() < 1e-12, "{r:?}");
            }
        }
    }

    #[test]
    fn vortex_residual_converges() {
        let spec = FieldSpec::Vortex { center: [0.0, 0.0] };
        let tests = vec![
            TestFunction { bump: Bump { center: [0.0, 0.55], radius: 0.35 }, q: trig(0.1, &[0.7, 0.3], &[0.2, -0.5]) },
            TestFunction { bump: Bump { center: [-0.5, -0.4], radius: 0.3 }, q: CircleFunction::cos(3) },
        ];
        let mut res = Vec::new();
        for n in [32, 64, 128, 256] {
            let g = Grid2::centered_square(n, 1.0).unwrap();
            let lat = chi_lattice(&build_field(&spec.placed_on(&g).unwrap(), &g).unwrap(), 64).unwrap();
            let worst =
                kinetic_residual(&lat, Sigma::Zero, &tests, ArcRule::Exact).unwrap().iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
            res.push(worst);
        }
        let order = (res[2] / res[3]).log2();
        assert!(res.windows(2).all(|w| w[1] < w[0]) && order > 1.8, "{res:?}");
    }

    #[test]
    fn jump_residual_converges() {
        let spec = FieldSpec::Jump { normal: [0.0, 1.0], offset: 0.013, theta_plus: 0.4, theta_minus: PI - 0.4 };
        let j = JumpKinetic::from_spec(&spec).unwrap();
        let tests = vec![
            TestFunction { bump: Bump { center: [0.05, 0.1], radius: 0.4 }, q: trig(0.3, &[0.9, -0.4], &[0.2, 0.6]) },
            TestFunction { bump: Bump { center: [-0.2, -0.05], radius: 0.3 }, q: CircleFunction::sin(2) },
        ];
        let mut res = Vec::new();
        for n in [64, 128, 256] {
            let g = Grid2::centered_square(n, 1.0).unwrap();
            let lat = chi_lattice(&build_field(&spec, &g).unwrap(), 64).unwrap();
            let rows = kinetic_residual(&lat, Sigma::Jump(&j), &tests, ArcRule::Exact).unwrap();
            assert!(rows.iter().all(|r| r.rhs.abs() > 1e-3));
            res.push(rows.iter().map(|r| (r.residual / r.rhs).abs()).fold(0.0, f64::max));
        }
        assert!(res[2] < res[0] && res[2] < 0.02, "{res:?}");
        let rows = kinetic_residual(
            &chi_lattice(&build_field(&spec, &Grid2::centered_square(64, 1.0).unwrap()).unwrap(), 64).unwrap(),
            Sigma::Zero,
            &tests,
            ArcRule::Exact,
        )
        .unwrap();
        assert!(rows.iter().any(|r| r.residual.abs() > 1e-2));
    }

    #[test]
    fn factorized_sigma_on_mollified_vortex() {
        let spec = FieldSpec::Vortex { center: [0.0, 0.0] };
        let tests = vec![TestFunction { bump: Bump { center: [0.0, 0.5], radius: 0.3 }, q: trig(0.1, &[0.7, 0.3], &[0.2, -0.5]) }];
        let mut res = Vec::new();
        for n in [64, 128] {
            let g = Grid2::centered_square(n, 1.0).unwrap();
            let m = build_field(&spec.placed_on(&g).unwrap(), &g).unwrap();
            let me = mollify(&m, &Mollifier::new(4.0 * g.spacing).unwrap()).unwrap();
            let theta = theta_of(&me);
            let (d1, d2) = div_sigma_closed(&me);
            let s = sigma_factorized(&theta, (&d1, &d2)).unwrap();
            let lat = KineticLattice::from_theta(&theta, 64).unwrap();
            let r = kinetic_residual(&lat, Sigma::Factorized(&s), &tests, ArcRule::Exact).unwrap();
            res.push(r[0].residual.abs());
        }
        assert!(res[1] < res[0] && res[1] < 1e-3, "{res:?}");
    }

    #[test]
    fn boundary_support_rejected() {
        let g = Grid2::centered_square(16, 1.0).unwrap();
        let lat = chi_lattice(&build_field(&FieldSpec::Constant { theta: 0.0 }, &g).unwrap(), 64).unwrap();
        let t = TestFunction { bump: Bump { center: [0.9, 0.0], radius: 0.3 }, q: CircleFunction::cos(1) };
        assert!(matches!(kinetic_residual(&lat, Sigma::Zero, &[t], ArcRule::Lattice), Err(Error::SupportOnBoundary)));
    }

    #[test]
    fn lattice_rule_within_first_order_of_exact_rule() {
        let g = Grid2::centered_square(64, 1.0).unwrap();
        let m = build_field(&FieldSpec::Vortex { center: [0.0, 0.0] }.placed_on(&g).unwrap(), &g).unwrap();
        let t = &suite()[..1];
        let wmax = e_is(&t[0].q).sup_norm(4096);
        let grad_l1: f64 = (0..g.len())
            .map(|k| {
                let d = grad_h(&t[0].bump, g.center_of(k), g.spacing);
                d[0].abs() + d[1].abs()
            })
            .sum::<f64>()
            * g.cell_area();
        for ns in [64, 256, 1024] {
            let lat = chi_lattice(&m, ns).unwrap();
            let a = kinetic_residual(&lat, Sigma::Zero, t, ArcRule::Exact).unwrap();
            let b = kinetic_residual(&lat, Sigma::Zero, t, ArcRule::Lattice).unwrap();
            let bound = 2.0 * lat.ds() * wmax * grad_l1;
            assert!((a[0].lhs - b[0].lhs).abs() <= bound, "{ns}");
        }
    }
}
