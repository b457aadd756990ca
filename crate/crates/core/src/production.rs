//! Mollified entropy productions, the cubic difference average `P_m^eps`
//! and the algebraic decompositions of `div Phi(m_eps)`.

use crate::entropy::{
    jin_kohn_eval, radial_extension, Cutoff, DiskHarmonic, EntropyMap, ExtendedEntropy, HarmonicEntropy, RadialEntropy,
};
use crate::error::{Error, Result};
use crate::fields::{cubic_difference_average, mollify, AngleField, MollifiedJet, Mollifier, Region, ScalarField, VecField};
use crate::regularity::besov_seminorm;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Guards `0/0` in ratio checks.
pub const RATIO_FLOOR: f64 = 1e-14;

fn map_field<F: Fn([f64; 2]) -> [f64; 2] + Sync>(m: &VecField, f: F) -> VecField {
    let values = m
        .values
        .par_iter()
        .zip(&m.mask)
        .map(|(&v, &keep)| if keep { f(v) } else { [0.0, 0.0] })
        .collect();
    VecField { grid: m.grid, values, mask: m.mask.clone() }
}

fn map_scalar<F: Fn([f64; 2]) -> f64 + Sync>(m: &VecField, f: F) -> ScalarField {
    let values = m.values.par_iter().zip(&m.mask).map(|(&v, &keep)| if keep { f(v) } else { 0.0 }).collect();
    ScalarField { grid: m.grid, values, mask: m.mask.clone() }
}

fn check_radius(m: &VecField, rmax: f64) -> Result<()> {
    if rmax.is_infinite() {
        return Ok(());
    }
    for (k, v) in m.values.iter().enumerate() {
        let n = v[0].hypot(v[1]);
        if m.mask[k] && n > rmax {
            let (i, j) = m.grid.ij(k);
            return Err(Error::OutsideDomain { i, j, norm: n });
        }
    }
    Ok(())
}

/// Central-difference divergence of `Phi~(m_eps)`.
pub fn div_entropy(m_eps: &VecField, entropy: &ExtendedEntropy) -> Result<ScalarField> {
    check_radius(m_eps, entropy.max_radius())?;
    Ok(map_field(m_eps, |v| entropy.eval(v)).divergence())
}

/// `div Phi~(m_eps) = sum_{b,c} d_c Phi_b(m_eps) d_b m_eps_c` from exact derivatives of `m_eps`.
pub fn div_entropy_jet(jet: &MollifiedJet, entropy: &ExtendedEntropy) -> Result<ScalarField> {
    let m = &jet.m;
    check_radius(m, entropy.max_radius())?;
    let values = (0..m.grid.len())
        .into_par_iter()
        .map(|k| {
            if !m.mask[k] {
                return 0.0;
            }
            let j = entropy.jacobian(m.values[k]);
            (0..2).map(|b| (0..2).map(|c| j[b][c] * jet.d[b].values[k][c]).sum::<f64>()).sum()
        })
        .collect();
    Ok(ScalarField { grid: m.grid, values, mask: m.mask.clone() })
}

/// `div Sigma_1 = (d1 m2 + d2 m1)(1 - |m|^2)`, `div Sigma_2 = (d2 m2 - d1 m1)(1 - |m|^2)`.
pub fn div_sigma_closed(m_eps: &VecField) -> (ScalarField, ScalarField) {
    let m1 = m_eps.component(0);
    let m2 = m_eps.component(1);
    let (d1m1, d2m1) = (m1.partial(0), m1.partial(1));
    let (d1m2, d2m2) = (m2.partial(0), m2.partial(1));
    let defect = m_eps.norms().map(|n| 1.0 - n * n);
    let s1 = d1m2.zip_with(&d2m1, |a, b| a + b).zip_with(&defect, |a, b| a * b);
    let s2 = d2m2.zip_with(&d1m1, |a, b| a - b).zip_with(&defect, |a, b| a * b);
    (s1, s2)
}

/// Central-difference divergences of `Sigma_1(m_eps)` and `Sigma_2(m_eps)`.
pub fn div_sigma_fd(m_eps: &VecField) -> (ScalarField, ScalarField) {
    (
        map_field(m_eps, |v| jin_kohn_eval(1, v)).divergence(),
        map_field(m_eps, |v| jin_kohn_eval(2, v)).divergence(),
    )
}

/// `P_m^eps` on the `eps`-interior.
pub fn p_m_eps(m: &AngleField, eps: f64) -> Result<ScalarField> {
    cubic_difference_average(m, eps)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundRow {
    pub eps: f64,
    /// `sup |div Phi~(m_eps)| / (||Phi||_{C^2} P_m^eps + floor)` over the interior,
    /// with `P_m^eps` maximized over the five-point stencil.
    pub ratio_sup: f64,
    pub production_sup: f64,
    pub p_sup: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub c2_norm: f64,
    pub rows: Vec<BoundRow>,
    /// Largest ratio along the ladder.
    pub constant: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Pointwise comparison of `|div Phi~(m_eps)|` against `||Phi||_{C^2(S^1)} P_m^eps` along an `eps` ladder.
pub fn pointwise_bound_check(
    m: &AngleField,
    phi: &EntropyMap,
    eps_ladder: &[f64],
    region: &Region,
    bound: f64,
) -> Result<BoundReport> {
    let ext = radial_extension(phi, Cutoff::default())?;
    let c2 = phi.c2_norm(512);
    let rows = eps_ladder
        .iter()
        .map(|&eps| {
            let me = mollify(m, &Mollifier::new(eps)?)?;
            let div = div_entropy(&me, &ext)?;
            let p = p_m_eps(m, eps)?;
            let cells: Vec<usize> = div.restrict(&p.mask).cells_in(region).collect();
            if cells.is_empty() {
                return Err(Error::EmptyRegion);
            }
            let mut row = BoundRow { eps, ratio_sup: 0.0, production_sup: 0.0, p_sup: 0.0 };
            let g = m.grid;
            for k in cells {
                let d = div.values[k].abs();
                // the difference stencil sees m_eps one cell away, so compare with P on the stencil
                let (i, j) = g.ij(k);
                let pk = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]
                    .iter()
                    .filter_map(|&(a, b)| g.offset(i, j, a, b))
                    .filter(|&o| p.mask[o])
                    .map(|o| p.values[o])
                    .fold(0.0, f64::max);
                row.ratio_sup = row.ratio_sup.max(d / (c2 * pk + RATIO_FLOOR));
                row.production_sup = row.production_sup.max(d);
                row.p_sup = row.p_sup.max(pk);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let constant = rows.iter().map(|r| r.ratio_sup).fold(0.0, f64::max);
    Ok(BoundReport { c2_norm: c2, rows, constant, bound, pass: constant.is_finite() && constant <= bound })
}

/// Residual fields of the harmonic decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionResidual {
    pub spacing: f64,
    /// Discrete `L^2` norm of the central-difference divergence of `m_eps`.
    pub divergence_l2: f64,
    pub lhs_l2: f64,
    pub residual_l2: f64,
}

/// Discrete `L^2` norm of `div m_eps` over `region`.
pub fn divergence_l2(m_eps: &VecField, region: &Region) -> Result<f64> {
    m_eps.divergence().lp_norm(region, 2.0)
}

/// `div Phi^phi(m) - [Q_1 div Sigma_1(m) + Q_2 div Sigma_2(m) - div((1-|m|^2) B(m))]` in `L^2(region)`.
pub fn identity_fact1_check(
    m_eps: &VecField,
    phi: &DiskHarmonic,
    region: &Region,
    div_tol: f64,
) -> Result<DecompositionResidual> {
    let divergence = divergence_l2(m_eps, region)?;
    if divergence > div_tol {
        return Err(Error::NotDivergenceFree { norm: divergence, tol: div_tol });
    }
    let h = HarmonicEntropy { phi: phi.clone() };
    let ext = ExtendedEntropy::Harmonic(h.clone());
    let lhs = div_entropy(m_eps, &ext)?;
    let (s1, s2) = div_sigma_fd(m_eps);
    let q1 = map_scalar(m_eps, |v| h.q(v)[0]);
    let q2 = map_scalar(m_eps, |v| h.q(v)[1]);
    let flux = map_field(m_eps, |v| {
        let b = h.b(v);
        let d = 1.0 - v[0] * v[0] - v[1] * v[1];
        [d * b[0], d * b[1]]
    })
    .divergence();
    let rhs = q1
        .zip_with(&s1, |a, b| a * b)
        .zip_with(&q2.zip_with(&s2, |a, b| a * b), |a, b| a + b)
        .zip_with(&flux, |a, b| a - b);
    let res = lhs.zip_with(&rhs, |a, b| a - b);
    Ok(DecompositionResidual {
        spacing: m_eps.grid.spacing,
        divergence_l2: divergence,
        lhs_l2: lhs.restrict(&res.mask).lp_norm(region, 2.0)?,
        residual_l2: res.lp_norm(region, 2.0)?,
    })
}

/// `div Phi~(m_eps) - Psi(m_eps) . grad(1 - |m_eps|^2)` in `L^2(region)`.
pub fn radial_identity_check(m_eps: &VecField, radial: &RadialEntropy, region: &Region) -> Result<DecompositionResidual> {
    let lhs = div_entropy(m_eps, &ExtendedEntropy::Radial(radial.clone()))?;
    let defect = m_eps.norms().map(|n| 1.0 - n * n);
    let (g1, g2) = (defect.partial(0), defect.partial(1));
    let psi1 = map_scalar(m_eps, |v| radial.psi(v)[0]);
    let psi2 = map_scalar(m_eps, |v| radial.psi(v)[1]);
    let rhs = psi1.zip_with(&g1, |a, b| a * b).zip_with(&psi2.zip_with(&g2, |a, b| a * b), |a, b| a + b);
    let res = lhs.zip_with(&rhs, |a, b| a - b);
    Ok(DecompositionResidual {
        spacing: m_eps.grid.spacing,
        divergence_l2: divergence_l2(m_eps, region)?,
        lhs_l2: lhs.restrict(&res.mask).lp_norm(region, 2.0)?,
        residual_l2: res.lp_norm(region, 2.0)?,
    })
}

/// Observed orders `log(r_k / r_{k+1}) / log(h_k / h_{k+1})` along a refinement ladder.
pub fn convergence_orders(spacings: &[f64], residuals: &[f64]) -> Vec<f64> {
    spacings
        .windows(2)
        .zip(residuals.windows(2))
        .map(|(h, r)| (r[0] / r[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProductionEntry {
    pub eps: f64,
    pub interior_cells: usize,
    /// `(p, ||div Phi~(m_eps)||_{L^p(U)})`.
    pub norms: Vec<(f64, f64)>,
    /// Midpoint integral of `div Phi~(m_eps)` over `U`.
    pub mass: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProductionReport {
    pub kernel: String,
    pub region: Region,
    pub entries: Vec<ProductionEntry>,
}

/// Productions along an `eps` ladder; entries are independent and come back in ladder order.
pub fn production_report(
    m: &AngleField,
    entropy: &ExtendedEntropy,
    eps_ladder: &[f64],
    region: &Region,
    exponents: &[f64],
) -> Result<(ProductionReport, Vec<ScalarField>)> {
    let out: Vec<(ProductionEntry, ScalarField)> = eps_ladder
        .par_iter()
        .map(|&eps| {
            let me = mollify(m, &Mollifier::new(eps)?)?;
            let div = div_entropy(&me, entropy)?;
            let norms = exponents.iter().map(|&p| Ok((p, div.lp_norm(region, p)?))).collect::<Result<Vec<_>>>()?;
            let entry = ProductionEntry {
                eps,
                interior_cells: div.mask.iter().filter(|&&b| b).count(),
                norms,
                mass: div.integral(region)?,
            };
            Ok((entry, div))
        })
        .collect::<Result<Vec<_>>>()?;
    let (entries, fields) = out.into_iter().unzip();
    Ok((ProductionReport { kernel: crate::fields::KERNEL_NAME.into(), region: *region, entries }, fields))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundByBesov {
    pub p: f64,
    pub eps: f64,
    pub p_norm: f64,
    pub besov_cubed: f64,
    pub ratio: f64,
    pub holds: bool,
}

/// `||P_m^eps||_{L^p(U)}` against `|m|^3_{B^{1/3}_{3p,inf}(U')}` with `U'` the `eps`-neighbourhood of `U`.
pub fn p_against_besov(m: &AngleField, eps: f64, p: f64, region: &Region, h_ladder: &[f64]) -> Result<BoundByBesov> {
    let pm = p_m_eps(m, eps)?;
    let p_norm = pm.lp_norm(region, p)?;
    let wider = region.dilate(eps);
    let b = besov_seminorm(m, 1.0 / 3.0, 3.0 * p, h_ladder, &wider)?;
    let besov_cubed = b.seminorm.powi(3);
    let ratio = p_norm / besov_cubed.max(RATIO_FLOOR);
    Ok(BoundByBesov { p, eps, p_norm, besov_cubed, ratio, holds: p_norm <= besov_cubed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::CircleFunction;
    use crate::entropy::{harmonic_extension, jin_kohn, jin_kohn_map, phi_f};
    use crate::fields::{build_field, FieldSpec, Grid2, StreamMode};
    use std::f64::consts::{FRAC_PI_4, PI};

    fn jump() -> FieldSpec {
        FieldSpec::Jump { normal: [0.0, 1.0], offset: 0.0, theta_plus: FRAC_PI_4, theta_minus: 3.0 * FRAC_PI_4 }
    }

    fn stream() -> FieldSpec {
        FieldSpec::Stream {
            theta0: 0.3,
            base_y: -1.2,
            modes: vec![StreamMode { amp: 0.1, freq: 1.1, phase: 0.2 }, StreamMode { amp: 0.05, freq: 2.3, phase: -0.7 }],
        }
    }

    #[test]
    fn constant_field_produces_nothing() {
        let g = Grid2::centered_square(32, 1.0).unwrap();
        let m = build_field(&FieldSpec::Constant { theta: 0.8 }, &g).unwrap();
        let me = mollify(&m, &Mollifier::new(0.25).unwrap()).unwrap();
        let d = div_entropy(&me, &jin_kohn(1).unwrap()).unwrap();
        assert!(d.lp_norm(&Region::Whole, f64::INFINITY).unwrap() < 1e-12);
        let (a, b) = div_sigma_closed(&me);
        assert!(a.lp_norm(&Region::Whole, f64::INFINITY).unwrap() < 1e-12);
        assert!(b.lp_norm(&Region::Whole, f64::INFINITY).unwrap() < 1e-12);
        assert!(p_m_eps(&m, 0.25).unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_fields_have_no_closed_form_production() {
        let g = Grid2::centered_square(32, 1.0).unwrap();
        let m = build_field(&stream(), &g).unwrap().to_vec_field();
        let (a, b) = div_sigma_closed(&m);
        assert!(a.values.iter().all(|v| v.abs() < 1e-12) && b.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn closed_form_agrees_with_difference_path_at_second_order() {
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for n in [64, 128] {
            let g = Grid2::centered_square(n, 1.0).unwrap();
            let m = build_field(&stream(), &g).unwrap();
            let me = mollify(&m, &Mollifier::new(0.25).unwrap()).unwrap();
            let (c1, _) = div_sigma_closed(&me);
            let (f1, _) = div_sigma_fd(&me);
            errs.push(c1.zip_with(&f1, |a, b| a - b).lp_norm(&Region::Whole, 2.0).unwrap());
            hs.push(g.spacing);
        }
        let order = convergence_orders(&hs, &errs)[0];
        assert!(order >= 1.9, "order {order}");
    }

    #[test]
    fn harmonic_entropy_rejects_large_values() {
        let g = Grid2::centered_square(8, 1.0).unwrap();
        let v = VecField::new(g, vec![[1.5, 0.0]; 64], vec![true; 64]).unwrap();
        let e = crate::entropy::harmonic_entropy(&DiskHarmonic::phi2(2));
        assert!(matches!(div_entropy(&v, &e), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn p_on_jump_line() {
        let g = Grid2::centered_square(256, 1.0).unwrap();
        let m = build_field(&jump(), &g).unwrap();
        let eps = 32.0 * g.spacing;
        let p = p_m_eps(&m, eps).unwrap();
        let k = g.idx(128, 128);
        let expect = PI / 2.0 * 2f64.sqrt().powi(3) / eps;
        assert!((p.values[k] / expect - 1.0).abs() < 0.05, "{}", p.values[k] / expect);
    }

    #[test]
    fn p_on_lipschitz_field() {
        let g = Grid2::centered_square(128, 1.0).unwrap();
        let spec = stream();
        let m = build_field(&spec, &g).unwrap();
        let d = 1e-6;
        let lip = (0..g.len())
            .map(|k| {
                let c = g.center_of(k);
                let a = spec.value_at(c);
                let bx = spec.value_at([c[0] + d, c[1]]);
                let by = spec.value_at([c[0], c[1] + d]);
                let gx = (bx[0] - a[0]).hypot(bx[1] - a[1]) / d;
                let gy = (by[0] - a[0]).hypot(by[1] - a[1]) / d;
                gx.hypot(gy)
            })
            .fold(0.0, f64::max);
        let eps = 8.0 * g.spacing;
        let p = p_m_eps(&m, eps).unwrap();
        let bound = 2.0 * PI / 5.0 * lip.powi(3) * eps * eps;
        let got = p.lp_norm(&Region::Whole, f64::INFINITY).unwrap();
        assert!(got <= bound * 1.05, "{got} vs {bound}");
    }

    #[test]
    fn linear_entropy_gives_discrete_divergence() {
        let g = Grid2::centered_square(64, 1.0).unwrap();
        let m = build_field(&stream(), &g).unwrap();
        let me = mollify(&m, &Mollifier::new(0.125).unwrap()).unwrap();
        let a = div_entropy(&me, &ExtendedEntropy::Linear).unwrap();
        let b = me.divergence();
        assert_eq!(a.values, b.values);
        assert!(b.lp_norm(&Region::Whole, 2.0).unwrap() < 1e-3);
    }

    #[test]
    fn production_is_linear_in_the_entropy() {
        let g = Grid2::centered_square(32, 1.0).unwrap();
        let m = build_field(&jump(), &g).unwrap();
        let me = mollify(&m, &Mollifier::new(0.25).unwrap()).unwrap();
        let a = jin_kohn(1).unwrap();
        let b = radial_extension(&phi_f(&CircleFunction::cos(3)).unwrap(), Cutoff::default()).unwrap();
        let comb = ExtendedEntropy::Combination { terms: vec![(2.0, a.clone()), (-0.5, b.clone())] };
        let lhs = div_entropy(&me, &comb).unwrap();
        let da = div_entropy(&me, &a).unwrap();
        let db = div_entropy(&me, &b).unwrap();
        for k in 0..g.len() {
            if lhs.mask[k] {
                assert!((lhs.values[k] - (2.0 * da.values[k] - 0.5 * db.values[k])).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn decomposition_trivial_for_constant_phi() {
        let g = Grid2::centered_square(64, 1.0).unwrap();
        let m = build_field(&stream(), &g).unwrap();
        let me = mollify(&m, &Mollifier::new(0.25).unwrap()).unwrap();
        let r = identity_fact1_check(&me, &DiskHarmonic::constant(1.0), &Region::Whole, 1e-2).unwrap();
        assert!(r.residual_l2 < 1e-3 && r.lhs_l2 < 1e-3);
    }

    #[test]
    fn decomposition_rejects_divergent_input() {
        let g = Grid2::centered_square(16, 1.0).unwrap();
        let values = (0..g.len()).map(|k| [0.5 * g.center_of(k)[0], 0.0]).collect();
        let v = VecField::new(g, values, vec![true; g.len()]).unwrap();
        let r = identity_fact1_check(&v, &DiskHarmonic::phi2(2), &Region::Whole, 1e-3);
        assert!(matches!(r, Err(Error::NotDivergenceFree { .. })));
    }

    #[test]
    fn decomposition_exact_for_quadratic_phi() {
        // phi^2_2 makes every term polynomial in m, so the identity holds at the discrete level
        let g = Grid2::centered_square(64, 1.0).unwrap();
        let m = build_field(&FieldSpec::Vortex { center: [0.0, 0.0] }, &g).unwrap();
        let me = mollify(&m, &Mollifier::new(0.125).unwrap()).unwrap();
        let region = Region::Annulus { center: [0.0, 0.0], r_in: 0.4, r_out: 0.8 };
        let r = identity_fact1_check(&me, &DiskHarmonic::phi2(2), &region, 1e-2).unwrap();
        assert!(r.residual_l2 < 1e-12, "{r:?}");
    }

    #[test]
    fn decomposition_converges_on_vortex() {
        let region = Region::Annulus { center: [0.0, 0.0], r_in: 0.4, r_out: 0.8 };
        let phi = harmonic_extension(&CircleFunction::from_real_series(0.1, &[0.3, -0.2, 0.5, 0.1], &[0.2, 0.4, -0.3, 0.6]))
            .unwrap();
        let mut hs = Vec::new();
        let mut rs = Vec::new();
        for n in [64, 128, 256] {
            let g = Grid2::centered_square(n, 1.0).unwrap();
            let m = build_field(&FieldSpec::Vortex { center: [0.0, 0.0] }, &g).unwrap();
            let me = mollify(&m, &Mollifier::new(0.125).unwrap()).unwrap();
            let r = identity_fact1_check(&me, &phi, &region, 1e-2).unwrap();
            hs.push(g.spacing);
            rs.push(r.residual_l2);
        }
        let orders = convergence_orders(&hs, &rs);
        assert!(orders.iter().all(|&o| o >= 1.9), "{orders:?} {rs:?}");
    }

    #[test]
    fn radial_identity_on_mollified_stream_field() {
        let phi = phi_f(&CircleFunction::from_real_series(0.0, &[0.0, 0.4, 0.3], &[0.0, -0.2, 0.5])).unwrap();
        let ExtendedEntropy::Radial(r) = radial_extension(&phi, Cutoff::default()).unwrap() else { unreachable!() };
        let mut hs = Vec::new();
        let mut rs = Vec::new();
        for n in [64, 128] {
            let g = Grid2::centered_square(n, 1.0).unwrap();
            let m = build_field(&stream(), &g).unwrap();
            let me = mollify(&m, &Mollifier::new(0.25).unwrap()).unwrap();
            let res = radial_identity_check(&me, &r, &Region::Whole).unwrap();
            hs.push(g.spacing);
            rs.push(res.residual_l2);
        }
        assert!(convergence_orders(&hs, &rs)[0] >= 1.9, "{rs:?}");
    }

    #[test]
    fn jump_production_mass_matches_cost() {
        let g = Grid2::centered_square(128, 1.0).unwrap();
        let m = build_field(&jump(), &g).unwrap();
        let region = Region::Rect { x: [-0.5, 0.5], y: [-0.6, 0.6] };
        let (rep, _) = production_report(&m, &jin_kohn(1).unwrap(), &[0.25, 0.125], &region, &[1.0]).unwrap();
        let s1 = jin_kohn_map(1);
        let cost = s1.eval(FRAC_PI_4)[1] - s1.eval(3.0 * FRAC_PI_4)[1];
        let len = 1.0;
        for e in &rep.entries {
            assert!((e.mass / len / cost - 1.0).abs() < 0.02, "{}", e.mass / len / cost);
        }
        assert!((cost - 2f64.sqrt() / 3.0).abs() < 1e-12);
    }

    #[test]
    fn bound_check_on_constant_and_jump() {
        let g = Grid2::centered_square(64, 1.0).unwrap();
        let phi = jin_kohn_map(1);
        let c = build_field(&FieldSpec::Constant { theta: 0.2 }, &g).unwrap();
        let r = pointwise_bound_check(&c, &phi, &[0.25, 0.125], &Region::Whole, 100.0).unwrap();
        assert!(r.pass);
        let j = build_field(&jump(), &g).unwrap();
        let r = pointwise_bound_check(&j, &phi, &[0.25, 0.125, 0.0625], &Region::Whole, 100.0).unwrap();
        assert!(r.pass, "{r:?}");
    }
}
