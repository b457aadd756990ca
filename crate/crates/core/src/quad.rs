//! One-dimensional quadrature used throughout the crate.
//!
//! Tanh-sinh handles the integrable endpoint singularities that show up
//! in `t^alpha` kernels; callers split at every known kink so that each
//! piece is analytic in its interior.

use gauss_quad::legendre::GaussLegendre;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

const MAX_DEPTH: u32 = 12;
/// Error estimates below this multiple of the piece's magnitude are at the rounding floor.
const REL_FLOOR: f64 = 1e-14;

/// Adaptive tanh-sinh integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    if b == a {
        return 0.0;
    }
    adapt(&f, a, b, tol, 0)
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let out = quadrature::double_exponential::integrate(f, a, b, tol);
    if out.error_estimate <= tol.max(REL_FLOOR * out.integral.abs()) || depth >= MAX_DEPTH {
        return out.integral;
    }
    let mid = 0.5 * (a + b);
    adapt(f, a, mid, 0.5 * tol, depth + 1) + adapt(f, mid, b, 0.5 * tol, depth + 1)
}

/// Integral over `[a, b]` split at every breakpoint strictly inside the interval.
pub fn integrate_split<F>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    if b <= a {
        return 0.0;
    }
    let mut pts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    pts.push(a);
    pts.extend(breaks.iter().copied().filter(|&p| p > a && p < b));
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * (1.0 + y.abs()));
    let n = (pts.len() - 1) as f64;
    pts.windows(2)
        .map(|w| integrate(&f, w[0], w[1], tol / n))
        .sum()
}

/// Shared 32-point Gauss-Legendre rule.
pub fn gauss_legendre_32() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(32).unwrap()))
}

/// Gauss-Legendre rule of arbitrary degree.
pub fn gauss_legendre(degree: usize) -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(degree.max(1)).unwrap())
}

/// Composite Gauss-Legendre over `panels` equal panels.
pub fn composite_gl<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let rule = gauss_legendre_32();
    let w = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + k as f64 * w;
            rule.integrate(lo, lo + w, &mut f)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_singularity() {
        // int_0^1 t^{1/4} dt = 4/5
        let v = integrate(|t: f64| t.powf(0.25), 0.0, 1.0, 1e-13);
        assert!((v - 0.8).abs() < 1e-12);
    }

    #[test]
    fn split_kink() {
        let v = integrate_split(|t: f64| (t - 0.3).abs(), 0.0, 1.0, &[0.3], 1e-13);
        assert!((v - (0.045 + 0.245)).abs() < 1e-12);
    }

    #[test]
    fn gl_is_exact_on_polynomials() {
        let v = composite_gl(|x| x.powi(7) - 3.0 * x, -1.0, 2.0, 3);
        let exact = (2f64.powi(8) - 1.0) / 8.0 - 1.5 * (4.0 - 1.0);
        assert!((v - exact).abs() < 1e-11);
    }
}
