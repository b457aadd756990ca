//! Factorization of entropy productions through the Jin-Kohn productions:
//! `div Phi_f(m) = c_f(theta) e^{2 i theta} . div Sigma(m)` with
//! `c_f(theta) = (f(theta + pi/2) + f(theta - pi/2)) / 2 - <f, 1>`.
//!
//! Productions are evaluated with the exact derivatives of the discrete mollification,
//! so no finite-difference error floor enters the decay rates.
//!
//! Nontrivial exact solutions with `L^p` production are not available as test fields,
//! so the checks cover the algebraic identities at finite `eps` and the vanishing limit
//! on rigid fields.

use crate::circle::CircleFunction;
use crate::entropy::{
    harmonic_entropy, harmonic_extension, jin_kohn, multiplier, phi_f, radial_extension, Cutoff, ExtendedEntropy,
    HarmonicEntropy,
};
use crate::error::{Error, Result};
use crate::fields::{mollify_jet, AngleField, MollifiedJet, Mollifier, Region, ScalarField, VecField};
use crate::kinetic::{dead_cells, sigma_factorized, theta_of};
use crate::production::{div_entropy, div_entropy_jet, div_sigma_fd};
use crate::regularity::fit_slope;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

/// `(f(theta + pi/2) + f(theta - pi/2)) / 2 - <f, 1>`.
pub fn factor_coefficient(f: &CircleFunction, theta: f64) -> f64 {
    0.5 * (f.eval_real(theta + FRAC_PI_2) + f.eval_real(theta - FRAC_PI_2)) - f.mean().re
}

/// `e^{2 i theta} . (s1, s2)` and `i e^{2 i theta} . (s1, s2)` cellwise.
fn rotate2(theta: &ScalarField, s1: &ScalarField, s2: &ScalarField) -> (ScalarField, ScalarField) {
    let n = theta.grid.len();
    let mask: Vec<bool> = (0..n).map(|k| theta.mask[k] && s1.mask[k] && s2.mask[k]).collect();
    let (mut g, mut gi) = (vec![0.0; n], vec![0.0; n]);
    for k in (0..n).filter(|&k| mask[k]) {
        let (s, c) = (2.0 * theta.values[k]).sin_cos();
        g[k] = c * s1.values[k] + s * s2.values[k];
        gi[k] = -s * s1.values[k] + c * s2.values[k];
    }
    (
        ScalarField { grid: theta.grid, values: g, mask: mask.clone() },
        ScalarField { grid: theta.grid, values: gi, mask },
    )
}

fn mollified_jet(m: &AngleField, eps: f64, region: &Region) -> Result<(MollifiedJet, ScalarField)> {
    let jet = mollify_jet(m, &Mollifier::new(eps)?)?;
    let dead = dead_cells(&jet.m, region);
    if dead > 0 {
        return Err(Error::DeadZone { count: dead });
    }
    let theta = theta_of(&jet.m);
    Ok((jet, theta))
}

fn check_ladder(ladder: &[f64]) -> Result<()> {
    if ladder.is_empty() || ladder.windows(2).any(|w| w[1] >= w[0]) || ladder.iter().any(|&e| e <= 0.0) {
        return Err(Error::InvalidParameter("ladder must be positive and strictly decreasing".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationRow {
    pub eps: f64,
    pub lhs_norm: f64,
    pub rhs_norm: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub p: f64,
    pub rows: Vec<FactorizationRow>,
    pub tolerance: f64,
    pub pass: bool,
}

impl FactorizationReport {
    pub fn to_csv(&self, id: &str) -> String {
        let mut out = String::from("f_id,eps,p,lhs,rhs,residual\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{},{}\n", id, r.eps, self.p, r.lhs_norm, r.rhs_norm, r.residual));
        }
        out
    }
}

/// Per `eps`: `|| div Phi~_f(m_eps) - c_f(theta_eps) e^{2 i theta_eps} . div Sigma(m_eps) ||_{L^p(U)}`.
/// Passes when the residual at the smallest `eps` is below `tolerance`.
pub fn verify_cpeq2(
    m: &AngleField,
    f: &CircleFunction,
    eps_ladder: &[f64],
    p: f64,
    region: &Region,
    tolerance: f64,
) -> Result<FactorizationReport> {
    check_ladder(eps_ladder)?;
    let ext = radial_extension(&phi_f(f)?, Cutoff::default())?;
    let rows = eps_ladder
        .iter()
        .map(|&eps| {
            let (jet, theta) = mollified_jet(m, eps, region)?;
            let lhs = div_entropy_jet(&jet, &ext)?;
            let s1 = div_entropy_jet(&jet, &jin_kohn(1)?)?;
            let s2 = div_entropy_jet(&jet, &jin_kohn(2)?)?;
            let (g, _) = rotate2(&theta, &s1, &s2);
            let coef = theta.map(|t| factor_coefficient(f, t));
            let rhs = coef.zip_with(&g, |a, b| a * b);
            let res = lhs.zip_with(&rhs, |a, b| a - b).restrict(&g.mask);
            Ok(FactorizationRow {
                eps,
                lhs_norm: lhs.restrict(&res.mask).lp_norm(region, p)?,
                rhs_norm: rhs.restrict(&res.mask).lp_norm(region, p)?,
                residual: res.lp_norm(region, p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = rows.last().is_some_and(|r| r.residual <= tolerance);
    Ok(FactorizationReport { p, rows, tolerance, pass })
}

/// Fields of the harmonic-entropy decomposition at one `eps`, as `L^2(U)` norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntDecomReport {
    pub eps: f64,
    /// `|| div m_eps ||`; the `Q` decomposition assumes it vanishes.
    pub divergence: f64,
    pub lhs: f64,
    /// `A_1 psi(theta) e^{2 i theta} . div Sigma`.
    pub a1_term: f64,
    /// `A_2 psi(theta) i e^{2 i theta} . div Sigma`.
    pub a2_term: f64,
    /// `lhs - a1_term - a2_term`.
    pub full_residual: f64,
    /// `lhs - a1_term`.
    pub reduced_residual: f64,
    /// Residual of `div Phi^phi = Q . div Sigma - div((1 - |m|^2) B)`.
    pub q_residual: f64,
}

/// `div Phi^{E psi}(m_eps)` against the multiplier decomposition. The multiplier terms use
/// exact derivatives of `m_eps`; the `Q` residual uses central differences throughout, for
/// which the decomposition holds at the discrete level.
pub fn verify_entdecom(psi: &CircleFunction, m: &AngleField, eps: f64, region: &Region) -> Result<EntDecomReport> {
    let phi = harmonic_extension(psi)?;
    let h = HarmonicEntropy { phi: phi.clone() };
    let ext = harmonic_entropy(&phi);
    let (jet, theta) = mollified_jet(m, eps, region)?;
    let lhs = div_entropy_jet(&jet, &ext)?;
    let s1 = div_entropy_jet(&jet, &jin_kohn(1)?)?;
    let s2 = div_entropy_jet(&jet, &jin_kohn(2)?)?;
    let (g, gi) = rotate2(&theta, &s1, &s2);
    let a1 = multiplier(1, psi)?;
    let a2 = multiplier(2, psi)?;
    let t1 = theta.map(|t| a1.eval_real(t)).zip_with(&g, |a, b| a * b);
    let t2 = theta.map(|t| a2.eval_real(t)).zip_with(&gi, |a, b| a * b);
    let full = lhs.zip_with(&t1, |a, b| a - b).zip_with(&t2, |a, b| a - b).restrict(&g.mask);
    let reduced = lhs.zip_with(&t1, |a, b| a - b).restrict(&g.mask);

    let m_eps = &jet.m;
    let lhs_fd = div_entropy(m_eps, &ext)?;
    let (f1, f2) = div_sigma_fd(m_eps);
    let q = |c: usize| -> ScalarField {
        ScalarField {
            grid: m_eps.grid,
            values: m_eps.values.iter().map(|&v| h.q(v)[c]).collect(),
            mask: m_eps.mask.clone(),
        }
    };
    let flux = VecField::new(
        m_eps.grid,
        m_eps
            .values
            .iter()
            .map(|&v| {
                let b = h.b(v);
                let d = 1.0 - v[0] * v[0] - v[1] * v[1];
                [d * b[0], d * b[1]]
            })
            .collect(),
        m_eps.mask.clone(),
    )?
    .divergence();
    let q_rhs = q(0)
        .zip_with(&f1, |a, b| a * b)
        .zip_with(&q(1).zip_with(&f2, |a, b| a * b), |a, b| a + b)
        .zip_with(&flux, |a, b| a - b);
    let q_res = lhs_fd.zip_with(&q_rhs, |a, b| a - b).restrict(&g.mask);
    let div = jet.d[0].component(0).zip_with(&jet.d[1].component(1), |a, b| a + b);
    let norm = |s: &ScalarField| s.restrict(&g.mask).lp_norm(region, 2.0);
    Ok(EntDecomReport {
        eps,
        divergence: norm(&div)?,
        lhs: norm(&lhs)?,
        a1_term: norm(&t1)?,
        a2_term: norm(&t2)?,
        full_residual: full.lp_norm(region, 2.0)?,
        reduced_residual: reduced.lp_norm(region, 2.0)?,
        q_residual: q_res.lp_norm(region, 2.0)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorollaryStatus {
    /// Jin-Kohn productions and all suite productions vanish.
    Pass,
    /// The Jin-Kohn productions themselves do not vanish, so the hypothesis fails
    /// and the suite productions are not expected to vanish either.
    ExpectedFailure,
    /// Jin-Kohn productions vanish but some suite production does not.
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryRow {
    pub eps: f64,
    /// `L^1(U)` norms of `div Sigma_1`, `div Sigma_2`.
    pub jin_kohn: [f64; 2],
    /// `L^1(U)` norm of `div Phi~_f(m_eps)` per suite entry.
    pub suite: Vec<f64>,
    /// `L^1(U)` norm of `nu` from the factorized measure.
    pub nu: f64,
    /// `L^1(U)` norm of the lattice divergence of `m_eps`, zero for the continuous convolution.
    pub lattice_divergence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub rows: Vec<CorollaryRow>,
    /// Fitted `log`-`log` rates in `eps` (`None` when the norms are zero).
    pub jin_kohn_rate: Option<f64>,
    pub suite_rates: Vec<Option<f64>>,
    pub nu_rate: Option<f64>,
    pub min_rate: f64,
    pub status: CorollaryStatus,
}

/// Norms below this count as identically zero.
pub const ZERO_NORM: f64 = 1e-11;

/// A column vanishes when it is identically zero, sits below its lattice floor at every `eps`,
/// or decays at least at `min_rate`.
fn vanishes(values: &[f64], floors: &[f64], eps: &[f64], min_rate: f64) -> (Option<f64>, bool) {
    if values.iter().all(|&v| v <= ZERO_NORM) {
        return (None, true);
    }
    let pts: Vec<(f64, f64)> = eps.iter().zip(values).map(|(e, v)| (e.ln(), v.max(f64::MIN_POSITIVE).ln())).collect();
    let rate = fit_slope(&pts);
    let at_floor = values.iter().zip(floors).all(|(&v, &f)| v <= f.max(ZERO_NORM));
    (rate, at_floor || rate.is_some_and(|r| r >= min_rate))
}

/// Decay of all productions on a ladder of mollification scales.
pub fn corollary_check(
    m: &AngleField,
    suite: &[CircleFunction],
    eps_ladder: &[f64],
    region: &Region,
    min_rate: f64,
) -> Result<CorollaryReport> {
    check_ladder(eps_ladder)?;
    let maps = suite.iter().map(phi_f).collect::<Result<Vec<_>>>()?;
    let exts = maps.iter().map(|p| radial_extension(p, Cutoff::default())).collect::<Result<Vec<ExtendedEntropy>>>()?;
    let (j1, j2) = (jin_kohn(1)?, jin_kohn(2)?);
    let rows = eps_ladder
        .iter()
        .map(|&eps| {
            let (jet, theta) = mollified_jet(m, eps, region)?;
            let l1 = |s: ScalarField| s.lp_norm(region, 1.0);
            let d1 = div_entropy_jet(&jet, &j1)?;
            let d2 = div_entropy_jet(&jet, &j2)?;
            let sigma = sigma_factorized(&theta, (&d1, &d2))?;
            let suite = exts.iter().map(|e| l1(div_entropy_jet(&jet, e)?)).collect::<Result<Vec<_>>>()?;
            Ok(CorollaryRow {
                eps,
                jin_kohn: [l1(d1)?, l1(d2)?],
                suite,
                nu: l1(sigma.nu())?,
                lattice_divergence: l1(div_entropy_jet(&jet, &ExtendedEntropy::Linear)?)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let col = |f: &dyn Fn(&CorollaryRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    // a production computed through the lattice derivative of m_eps cannot resolve values
    // below ||Phi||_{C^2} times the lattice divergence, whose exact value is zero
    let floor = |c: f64| col(&|r| c * r.lattice_divergence);
    let (c1, c2) = (crate::entropy::jin_kohn_map(1).c2_norm(512), crate::entropy::jin_kohn_map(2).c2_norm(512));
    let (r1, v1) = vanishes(&col(&|r| r.jin_kohn[0]), &floor(c1), eps_ladder, min_rate);
    let (r2, v2) = vanishes(&col(&|r| r.jin_kohn[1]), &floor(c2), eps_ladder, min_rate);
    let jin_kohn_rate = match (r1, r2) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let suite_checks: Vec<(Option<f64>, bool)> = maps
        .iter()
        .enumerate()
        .map(|(i, p)| vanishes(&col(&|r| r.suite[i]), &floor(p.c2_norm(512)), eps_ladder, min_rate))
        .collect();
    let (nu_rate, nu_ok) = vanishes(&col(&|r| r.nu), &floor(2.0 * (c1 + c2)), eps_ladder, min_rate);
    let status = if !(v1 && v2) {
        CorollaryStatus::ExpectedFailure
    } else if suite_checks.iter().all(|c| c.1) && nu_ok {
        CorollaryStatus::Pass
    } else {
        CorollaryStatus::Fail
    };
    Ok(CorollaryReport {
        rows,
        jin_kohn_rate,
        suite_rates: suite_checks.into_iter().map(|c| c.0).collect(),
        nu_rate,
        min_rate,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::xi_f;
    use crate::fields::{build_field, FieldSpec, Grid2};
    use crate::kinetic::pair_sigma;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn real_poly(band: usize) -> impl Strategy<Value = CircleFunction> {
        (-1.0..1.0f64, prop::collection::vec(-1.0..1.0f64, band), prop::collection::vec(-1.0..1.0f64, band))
            .prop_map(|(a0, a, b)| CircleFunction::from_real_series(a0, &a, &b))
    }

    #[test]
    fn coefficient_examples() {
        for t in [0.0, 0.4, 2.0, 5.5] {
            assert!(factor_coefficient(&CircleFunction::constant(1.0), t).abs() < 1e-15);
            assert!(factor_coefficient(&CircleFunction::sin(1), t).abs() < 1e-15);
        }
        assert!((factor_coefficient(&CircleFunction::cos(2), 0.0) + 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn coefficient_is_a1_of_xi(f in real_poly(8), theta in 0.0..6.3f64) {
            let xi = xi_f(&f).unwrap().on_circle();
            let a1 = multiplier(1, &xi).unwrap().eval_real(theta);
            prop_assert!((a1 - factor_coefficient(&f, theta)).abs() <= 1e-10);
        }

        #[test]
        fn coefficient_shift_covariance(f in real_poly(6), theta in 0.0..6.3f64, c in -3.0..3.0f64) {
            prop_assert!((factor_coefficient(&f.shift(c), theta) - factor_coefficient(&f, theta + c)).abs() <= 1e-12);
        }

        #[test]
        fn pairing_consistency(f in real_poly(8), seed in 0u64..1000) {
            let g = Grid2::new(6, 5, 0.2, [0.0, 0.0]).unwrap();
            let s = seed as f64;
            let theta = ScalarField::from_fn(g, |x| s + 3.0 * x[0] - x[1] * x[1]);
            let d1 = ScalarField::from_fn(g, |x| (s * x[0]).sin() + x[1]);
            let d2 = ScalarField::from_fn(g, |x| (x[0] - s).cos() * x[1]);
            let zeta = ScalarField::from_fn(g, |x| (x[0] * x[1] + s).sin());
            let sigma = sigma_factorized(&theta, (&d1, &d2)).unwrap();
            let direct: f64 = (0..g.len())
                .map(|k| factor_coefficient(&f, theta.values[k]) * sigma.g[k] * zeta.values[k])
                .sum::<f64>() * g.cell_area();
            prop_assert!((pair_sigma(&sigma, &f, &zeta).unwrap() - direct).abs() <= 1e-10);
        }
    }

    fn vortex_setup(n: usize) -> (AngleField, Region) {
        let g = Grid2::centered_square(n, 1.25).unwrap();
        let spec = FieldSpec::Vortex { center: [0.0, 0.0] }.placed_on(&g).unwrap();
        (build_field(&spec, &g).unwrap(), Region::Annulus { center: [0.0, 0.0], r_in: 0.5, r_out: 0.8 })
    }

    #[test]
    fn cpeq2_on_vortex_decays() {
        let (m, u) = vortex_setup(256);
        let f = CircleFunction::from_real_series(0.3, &[0.2, 1.0, -0.5, 0.25], &[0.1, 0.4, 0.7, -0.2]);
        let r = verify_cpeq2(&m, &f, &[0.4, 0.2, 0.1], 1.0, &u, 1e-2).unwrap();
        assert!(r.rows.windows(2).all(|w| w[1].residual < w[0].residual && w[1].lhs_norm < w[0].lhs_norm), "{r:?}");
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn cpeq2_trivial_for_constant_f() {
        let (m, u) = vortex_setup(64);
        let r = verify_cpeq2(&m, &CircleFunction::constant(1.0), &[0.2, 0.1], 2.0, &u, 1e-14).unwrap();
        assert!(r.rows.iter().all(|row| row.residual == 0.0 && row.rhs_norm == 0.0));
    }

    #[test]
    fn cpeq2_rejects_dead_zone() {
        let g = Grid2::centered_square(64, 1.0).unwrap();
        let m = build_field(&FieldSpec::Vortex { center: [0.0, 0.0] }.placed_on(&g).unwrap(), &g).unwrap();
        let r = verify_cpeq2(&m, &CircleFunction::cos(2), &[0.2], 2.0, &Region::Whole, 1.0);
        assert!(matches!(r, Err(Error::DeadZone { .. })));
    }

    #[test]
    fn entdecom_cos2() {
        let psi = CircleFunction::cos(2);
        let a1 = multiplier(1, &psi).unwrap();
        for t in [0.1, 1.0, 2.7] {
            assert!((a1.eval_real(t) + 3.0 * (2.0 * t).sin()).abs() < 1e-14);
        }
        let g = Grid2::centered_square(64, 1.0).unwrap();
        let spec = FieldSpec::Jump { normal: [0.0, 1.0], offset: 0.0, theta_plus: PI / 4.0, theta_minus: 3.0 * PI / 4.0 };
        let m = build_field(&spec, &g).unwrap();
        let u = Region::Rect { x: [-0.4, 0.4], y: [-0.4, 0.4] };
        let r = verify_entdecom(&psi, &m, 0.25, &u).unwrap();
        // for a degree-2 harmonic polynomial the discrete decomposition is exact
        assert!(r.lhs > 1e-2 && r.q_residual <= 1e-12 * r.lhs.max(1.0), "{r:?}");
    }

    #[test]
    fn entdecom_low_modes_and_vortex() {
        let (m, u) = vortex_setup(256);
        let one = verify_entdecom(&CircleFunction::constant(1.0), &m, 0.1, &u).unwrap();
        assert_eq!((one.a1_term, one.a2_term), (0.0, 0.0));
        assert!((one.lhs - one.divergence).abs() <= 1e-12 && one.q_residual < 1e-3, "{one:?}");
        for psi in [CircleFunction::cos(1), CircleFunction::sin(1)] {
            let a = verify_entdecom(&psi, &m, 0.4, &u).unwrap();
            let b = verify_entdecom(&psi, &m, 0.1, &u).unwrap();
            assert_eq!((a.a1_term, a.a2_term), (0.0, 0.0));
            assert!(b.lhs < 0.2 * a.lhs, "{a:?} {b:?}");
        }
        let psi = CircleFunction::from_real_series(0.0, &[0.0, 1.0, 0.3], &[0.5, -0.2, 0.4]);
        let a = verify_entdecom(&psi, &m, 0.4, &u).unwrap();
        let b = verify_entdecom(&psi, &m, 0.1, &u).unwrap();
        for (x, y) in [(a.lhs, b.lhs), (a.a1_term, b.a1_term)] {
            assert!(y < 0.2 * x, "{a:?} {b:?}");
        }
        assert!(a.a2_term < 1e-2 * a.a1_term && b.a2_term < 1e-2 * b.a1_term, "{a:?} {b:?}");
    }

    #[test]
    fn corollary_statuses() {
        let suite = vec![
            CircleFunction::cos(2),
            CircleFunction::from_real_series(0.1, &[0.3, 0.5, 0.0, -0.4], &[0.0, 0.2, 0.6]),
            CircleFunction::sin(3),
        ];
        let ladder = [0.4, 0.2, 0.1];
        let (m, u) = vortex_setup(256);
        let v = corollary_check(&m, &suite, &ladder, &u, 0.9).unwrap();
        assert_eq!(v.status, CorollaryStatus::Pass, "{v:?}");
        // c_f vanishes for sin 3t: its production sits at the lattice floor
        let c2 = phi_f(&suite[2]).unwrap().c2_norm(512);
        assert!(v.rows.iter().all(|r| r.suite[2] <= c2 * r.lattice_divergence), "{v:?}");

        let g = Grid2::centered_square(64, 1.0).unwrap();
        let c = build_field(&FieldSpec::Constant { theta: 0.8 }, &g).unwrap();
        let r = corollary_check(&c, &suite, &[0.2, 0.1], &Region::Rect { x: [-0.5, 0.5], y: [-0.5, 0.5] }, 0.9).unwrap();
        assert_eq!(r.status, CorollaryStatus::Pass);
        assert!(r.rows.iter().all(|row| row.suite.iter().all(|&s| s <= ZERO_NORM)));

        let g = Grid2::centered_square(128, 1.0).unwrap();
        let spec = FieldSpec::Jump { normal: [0.0, 1.0], offset: 0.0, theta_plus: PI / 4.0, theta_minus: 3.0 * PI / 4.0 };
        let j = build_field(&spec, &g).unwrap();
        let r = corollary_check(&j, &suite, &[0.2, 0.1, 0.05], &Region::Rect { x: [-0.5, 0.5], y: [-0.5, 0.5] }, 0.9).unwrap();
        assert_eq!(r.status, CorollaryStatus::ExpectedFailure, "{r:?}");
    }
}
