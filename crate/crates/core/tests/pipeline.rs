use eel_core::entropy::{ent_residual_sup, jin_kohn, phi_f};
use eel_core::factorization::factor_coefficient;
use eel_core::fields::{build_field, decode_eelf, mollify, mollify_jet, Region, StreamMode};
use eel_core::kinetic::{pair_sigma, sigma_factorized, theta_of};
use eel_core::production::div_entropy_jet;
use eel_core::regularity::{besov_seminorm, Bump};
use eel_core::{CircleFunction, FieldSpec, Grid2, Mollifier, ScalarField};
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_4;

fn jump() -> FieldSpec {
    FieldSpec::Jump { normal: [0.0, 1.0], offset: 0.0, theta_plus: FRAC_PI_4, theta_minus: 3.0 * FRAC_PI_4 }
}

#[test]
fn factorized_measure_pairs_like_the_coefficient() {
    let g = Grid2::centered_square(64, 1.0).unwrap();
    let m = build_field(&jump(), &g).unwrap();
    let jet = mollify_jet(&m, &Mollifier::new(0.25).unwrap()).unwrap();
    let theta = theta_of(&jet.m);
    let d1 = div_entropy_jet(&jet, &jin_kohn(1).unwrap()).unwrap();
    let d2 = div_entropy_jet(&jet, &jin_kohn(2).unwrap()).unwrap();
    let sigma = sigma_factorized(&theta, (&d1, &d2)).unwrap();
    let bump = Bump { center: [0.1, 0.0], radius: 0.4 };
    let zeta = ScalarField::from_fn(g, |x| bump.eval(x));
    let f = CircleFunction::from_real_series(0.3, &[0.2, -0.5, 0.7], &[0.1, 0.4, -0.2]);
    let a = pair_sigma(&sigma, &f, &zeta).unwrap();
    let b = (0..g.len())
        .filter(|&k| sigma.mask[k])
        .map(|k| zeta.values[k] * factor_coefficient(&f, theta.values[k]) * sigma.g[k])
        .sum::<f64>()
        * g.cell_area();
    assert!(a.abs() > 1e-3);
    assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{a} {b}");
    for k in (0..g.len()).filter(|&k| sigma.mask[k]) {
        assert_eq!(sigma.mass(k), 0.0);
    }
}

#[test]
fn field_dumps_round_trip() {
    let g = Grid2::new(12, 7, 0.1, [-0.3, 0.2]).unwrap();
    let spec = FieldSpec::Stream {
        theta0: 0.4,
        base_y: -1.0,
        modes: vec![StreamMode { amp: 0.1, freq: 1.3, phase: 0.0 }],
    };
    let m = build_field(&spec, &g).unwrap();
    let d = decode_eelf(&m.to_eelf()).unwrap();
    assert_eq!(d.grid, g);
    assert_eq!(d.components, 1);
    assert_eq!(d.data, m.theta());

    let v = mollify(&m, &Mollifier::new(0.25).unwrap()).unwrap();
    let d = decode_eelf(&v.to_eelf()).unwrap();
    assert_eq!(d.components, 2);
    assert_eq!(d.data.len(), 2 * g.len());
    assert!(decode_eelf(b"EELX").is_err());
}

#[test]
fn jump_besov_slopes() {
    let g = Grid2::centered_square(256, 1.0).unwrap();
    let m = build_field(&jump(), &g).unwrap();
    let h: Vec<f64> = (0..5).map(|k| g.spacing * (1 << (4 - k)) as f64).collect();
    let region = Region::Rect { x: [-0.5, 0.5], y: [-0.5, 0.5] };
    for q in [3.0, 4.0] {
        let r = besov_seminorm(&m, 1.0 / 3.0, q, &h, &region).unwrap();
        let slope = r.slope.unwrap();
        assert!((slope - 1.0 / q).abs() < 0.03, "q {q}: {slope}");
    }
    let c = build_field(&FieldSpec::Constant { theta: 1.0 }, &g).unwrap();
    assert_eq!(besov_seminorm(&c, 1.0 / 3.0, 3.0, &h, &region).unwrap().slope, None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_circle_functions_give_entropies(
        a0 in -1.0..1.0f64,
        a in prop::collection::vec(-1.0..1.0f64, 8),
        b in prop::collection::vec(-1.0..1.0f64, 8),
    ) {
        let f = CircleFunction::from_real_series(a0, &a, &b);
        prop_assert!(ent_residual_sup(&phi_f(&f).unwrap(), 512) <= 1e-10);
    }

    #[test]
    fn phi_f_is_linear(s in -3.0..3.0f64, k in 2usize..9, j in 2usize..9) {
        let (f, g) = (CircleFunction::cos(k), CircleFunction::sin(j));
        let sum = phi_f(&(&f.scale(s) + &g)).unwrap();
        let parts = phi_f(&f).unwrap().scale(s).add(&phi_f(&g).unwrap());
        prop_assert!(sum.distance(&parts, 256) <= 1e-12);
    }
}
