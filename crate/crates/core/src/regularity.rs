//! Besov difference quotients and the interaction functional `Delta_alpha`.

use crate::error::{Error, Result};
use crate::fields::{AngleField, FieldSpec, Grid2, Region};
use crate::quad;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

pub const BESOV_DIRECTIONS: usize = 16;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BesovRow {
    pub h: f64,
    pub direction: f64,
    pub shift: [isize; 2],
    pub norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BesovReport {
    pub s: f64,
    pub q: f64,
    pub h_ladder: Vec<f64>,
    pub rows: Vec<BesovRow>,
    /// Largest `||D^z m||_{L^q(U)}` over directions at each ladder entry.
    pub direction_max: Vec<f64>,
    /// `sup_{h' <= h}` of `direction_max`.
    pub values: Vec<f64>,
    pub seminorm: f64,
    /// Least-squares slope of `log direction_max` against `log h`.
    pub slope: Option<f64>,
}

impl BesovReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,direction,shift_x,shift_y,norm,ratio\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.h,
                r.direction,
                r.shift[0],
                r.shift[1],
                r.norm,
                r.norm * r.h.powf(-self.s)
            ));
        }
        out
    }
}

/// `||D^z m||_{L^q(U)}` for a lattice shift, with `D^z m = 0` where `x + z` leaves the grid.
pub fn shift_norm(m: &AngleField, shift: [isize; 2], q: f64, region: &Region) -> Result<f64> {
    let g = m.grid;
    let mut any = false;
    let mut acc = 0.0;
    for k in 0..g.len() {
        let c = g.center_of(k);
        if !region.contains(c) {
            continue;
        }
        any = true;
        let (i, j) = g.ij(k);
        if let Some(o) = g.offset(i, j, shift[0], shift[1]) {
            let (a, b) = (m.value(k), m.value(o));
            let d = (b[0] - a[0]).hypot(b[1] - a[1]);
            acc += d.powf(q);
        }
    }
    if !any {
        return Err(Error::EmptyRegion);
    }
    Ok((acc * g.cell_area()).powf(1.0 / q))
}

/// Difference-quotient estimate of `|m|_{B^s_{q,inf}(U)}` over a ladder of step lengths.
///
/// Steps are rounded to lattice vectors; the nominal length is reported.
pub fn besov_seminorm(m: &AngleField, s: f64, q: f64, h_ladder: &[f64], region: &Region) -> Result<BesovReport> {
    if !(q >= 1.0) {
        return Err(Error::InvalidParameter(format!("Besov exponent q must be >= 1, got {q}")));
    }
    if h_ladder.is_empty() || h_ladder.iter().any(|&h| !(h > 0.0)) {
        return Err(Error::InvalidParameter("h ladder must be non-empty and positive".into()));
    }
    let sp = m.grid.spacing;
    let jobs: Vec<(f64, f64, [isize; 2])> = h_ladder
        .iter()
        .flat_map(|&h| {
            (0..BESOV_DIRECTIONS).map(move |d| {
                let a = TAU * d as f64 / BESOV_DIRECTIONS as f64;
                (h, a, [(h * a.cos() / sp).round() as isize, (h * a.sin() / sp).round() as isize])
            })
        })
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(h, direction, shift)| Ok(BesovRow { h, direction, shift, norm: shift_norm(m, shift, q, region)? }))
        .collect::<Result<Vec<_>>>()?;
    let direction_max: Vec<f64> = h_ladder
        .iter()
        .map(|&h| rows.iter().filter(|r| r.h == h).map(|r| r.norm).fold(0.0, f64::max))
        .collect();
    let values: Vec<f64> = h_ladder
        .iter()
        .map(|&h| {
            h_ladder.iter().zip(&direction_max).filter(|(&h2, _)| h2 <= h).map(|(_, &v)| v).fold(0.0, f64::max)
        })
        .collect();
    let seminorm = h_ladder.iter().zip(&values).map(|(&h, &v)| h.powf(-s) * v).fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> =
        h_ladder.iter().zip(&direction_max).filter(|(_, &v)| v > 0.0).map(|(&h, &v)| (h.ln(), v.ln())).collect();
    Ok(BesovReport {
        s,
        q,
        h_ladder: h_ladder.to_vec(),
        rows,
        direction_max,
        values,
        seminorm,
        slope: fit_slope(&pts),
    })
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Odd, `pi`-periodic kernel equal to `t^alpha` on `[0, pi/4]`, blended to zero at `pi/2`
/// by a cubic Hermite segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiAlpha {
    pub alpha: f64,
}

pub const PHI_ALPHA_BLEND: &str =
    "cubic Hermite on [pi/4, pi/2]: value (pi/4)^a, slope a(pi/4)^(a-1) at pi/4; value 0, slope -8(pi/4)^(a-1)/pi at pi/2";

pub fn make_phi_alpha(alpha: f64) -> Result<PhiAlpha> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(PhiAlpha { alpha })
}

impl PhiAlpha {
    pub fn eval(&self, t: f64) -> f64 {
        let u = t - PI * (t / PI).round();
        if u < 0.0 {
            -self.branch(-u)
        } else {
            self.branch(u)
        }
    }

    /// Values on `[0, pi/2]`.
    fn branch(&self, u: f64) -> f64 {
        if u <= FRAC_PI_4 {
            return u.powf(self.alpha);
        }
        let tau = ((u - FRAC_PI_4) / FRAC_PI_4).min(1.0);
        let v0 = FRAC_PI_4.powf(self.alpha);
        let (t2, t3) = (tau * tau, tau * tau * tau);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + tau;
        let h11 = t3 - t2;
        v0 * (h00 + self.alpha * h10 - 2.0 * h11)
    }
}

/// Real interval `[lo, hi]`.
type Iv = (f64, f64);

/// `int_{t in T} int_{s in S} phi(s - t) H(s, t) ds dt` where `anti(t, w)` is a `t`-antiderivative
/// of `H(t + w, t)`. The outer integral runs over `w = s - t`, split at every kink of the
/// overlap length and at multiples of `pi/4`.
fn pair_integral<F>(phi: &PhiAlpha, t_iv: Iv, s_iv: Iv, anti: F, tol: f64) -> f64
where
    F: Fn(f64, f64) -> f64,
{
    let (lo, hi) = (s_iv.0 - t_iv.1, s_iv.1 - t_iv.0);
    if hi <= lo {
        return 0.0;
    }
    let mut breaks = vec![s_iv.0 - t_iv.0, s_iv.1 - t_iv.1];
    let k0 = (lo / FRAC_PI_4).floor() as i64;
    let k1 = (hi / FRAC_PI_4).ceil() as i64;
    breaks.extend((k0..=k1).map(|k| k as f64 * FRAC_PI_4));
    let inner = |w: f64| {
        let a = t_iv.0.max(s_iv.0 - w);
        let b = t_iv.1.min(s_iv.1 - w);
        if b <= a {
            0.0
        } else {
            phi.eval(w) * (anti(b, w) - anti(a, w))
        }
    };
    quad::integrate_split(inner, lo, hi, &breaks, tol)
}

const PAIR_TOL: f64 = 1e-14;

/// The arcs `I_1 \ I_0` and `I_0 \ I_1` of `D chi = chi(theta1, .) - chi(theta0, .)`,
/// with `theta1` unwrapped to within `pi` of `theta0`.
fn difference_arcs(theta0: f64, theta1: f64) -> (Iv, Iv, f64) {
    let mut d = (theta1 - theta0).rem_euclid(TAU);
    if d > PI {
        d -= TAU;
    }
    let t1 = theta0 + d;
    if d >= 0.0 {
        ((theta0 + FRAC_PI_2, t1 + FRAC_PI_2), (theta0 - FRAC_PI_2, t1 - FRAC_PI_2), t1)
    } else {
        ((t1 - FRAC_PI_2, theta0 - FRAC_PI_2), (t1 + FRAC_PI_2, theta0 + FRAC_PI_2), t1)
    }
}

/// `Delta_alpha` for the pair `m(x) = e^{i theta0}`, `m(x + he) = e^{i theta1}`.
pub fn delta_alpha_pair(phi: &PhiAlpha, theta0: f64, theta1: f64) -> f64 {
    let (plus, minus, _) = difference_arcs(theta0, theta1);
    if plus.1 <= plus.0 {
        return 0.0;
    }
    let anti = |t: f64, w: f64| t * w.sin();
    let arcs = [(plus, 1.0), (minus, -1.0)];
    let mut total = 0.0;
    for &(t_iv, st) in &arcs {
        for &(s_iv, ss) in &arcs {
            total += st * ss * pair_integral(phi, t_iv, s_iv, anti, PAIR_TOL);
        }
    }
    total
}

/// `Delta_alpha(x, h, e)` on an analytic field.
pub fn delta_alpha(spec: &FieldSpec, x: [f64; 2], h: f64, e: [f64; 2], phi: &PhiAlpha) -> f64 {
    let y = [x[0] + h * e[0], x[1] + h * e[1]];
    delta_alpha_pair(phi, spec.angle_at(x), spec.angle_at(y))
}

/// `A_alpha = (A_{alpha,1}, A_{alpha,2})` for the pair `theta0 = theta(x)`, `theta1 = theta(x + h e_1)`.
pub fn a_alpha_pair(phi: &PhiAlpha, theta0: f64, theta1: f64) -> [f64; 2] {
    let (plus, minus, t1) = difference_arcs(theta0, theta1);
    let i0 = (theta0 - FRAC_PI_2, theta0 + FRAC_PI_2);
    let i1 = (t1 - FRAC_PI_2, t1 + FRAC_PI_2);
    // sin(t + w) cos t = (sin(2t + w) + sin w) / 2
    let anti1 = |t: f64, w: f64| 0.5 * (-(2.0 * t + w).cos() / 2.0 + t * w.sin());
    // sin(t + w) sin t = (cos w - cos(2t + w)) / 2
    let anti2 = |t: f64, w: f64| 0.5 * (t * w.cos() - (2.0 * t + w).sin() / 2.0);
    let a1 = if plus.1 > plus.0 {
        pair_integral(phi, plus, i1, anti1, PAIR_TOL) - pair_integral(phi, minus, i1, anti1, PAIR_TOL)
    } else {
        0.0
    };
    let a2 = pair_integral(phi, i1, i0, anti2, PAIR_TOL);
    [2.0 * a1, 2.0 * a2]
}

/// `Xi_alpha(beta)`: `Delta_alpha` of the symmetric pair `e^{i beta}`, `e^{-i beta}`.
pub fn xi_alpha_closed(beta: f64, phi: &PhiAlpha) -> Result<f64> {
    if !(0.0..=FRAC_PI_2 + 1e-15).contains(&beta) {
        return Err(Error::InvalidParameter(format!("beta must lie in [0, pi/2], got {beta}")));
    }
    let tol = 1e-14;
    let quarter: Vec<f64> = (0..=8).map(|k| k as f64 * FRAC_PI_4).collect();
    if beta <= FRAC_PI_4 {
        let b2 = 2.0 * beta;
        let f = |w: f64| phi.eval(w) * (b2 - w) * w.sin();
        return Ok(8.0 * quad::integrate_split(f, 0.0, b2, &quarter, tol));
    }
    let b2 = 2.0 * beta;
    let split = PI - b2;
    let first = quad::integrate_split(|w| phi.eval(w) * (b2 - w) * w.sin(), 0.0, split, &quarter, tol);
    let second = quad::integrate_split(|w| phi.eval(w) * (PI - 2.0 * w) * w.sin(), split, FRAC_PI_2, &quarter, tol);
    Ok(8.0 * (first + second))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteractionSample {
    pub x: [f64; 2],
    pub h: f64,
    pub e: [f64; 2],
    pub delta: f64,
    pub dm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub alpha: f64,
    pub samples: Vec<InteractionSample>,
    /// Samples with `|D^{he} m|` below the floor are left out.
    pub excluded: usize,
    pub min_ratio: Option<f64>,
    pub threshold: f64,
    pub pass: bool,
}

pub const COERCIVITY_FLOOR: f64 = 1e-6;

/// `min Delta_alpha / |D^{he} m|^{3+alpha}` over samples `(x, h, e)`.
pub fn coercivity_scan(
    spec: &FieldSpec,
    samples: &[([f64; 2], f64, [f64; 2])],
    phi: &PhiAlpha,
    threshold: f64,
) -> CoercivityReport {
    let rows: Vec<InteractionSample> = samples
        .par_iter()
        .map(|&(x, h, e)| {
            let y = [x[0] + h * e[0], x[1] + h * e[1]];
            let (a, b) = (spec.value_at(x), spec.value_at(y));
            InteractionSample { x, h, e, delta: delta_alpha(spec, x, h, e, phi), dm: (b[0] - a[0]).hypot(b[1] - a[1]) }
        })
        .collect();
    let ratios: Vec<f64> =
        rows.iter().filter(|s| s.dm >= COERCIVITY_FLOOR).map(|s| s.delta / s.dm.powf(3.0 + phi.alpha)).collect();
    let min_ratio = ratios.iter().copied().reduce(f64::min);
    CoercivityReport {
        alpha: phi.alpha,
        excluded: rows.len() - ratios.len(),
        samples: rows,
        min_ratio,
        threshold,
        pass: min_ratio.map_or(true, |r| r >= threshold),
    }
}

/// `min Xi_alpha(beta) / beta^{3+alpha}` over `n` points of `[beta_min, pi/2]`.
pub fn xi_coercivity(phi: &PhiAlpha, beta_min: f64, n: usize) -> Result<f64> {
    (0..n)
        .map(|k| {
            let b = beta_min + (FRAC_PI_2 - beta_min) * k as f64 / (n - 1) as f64;
            Ok(xi_alpha_closed(b, phi)? / b.powf(3.0 + phi.alpha))
        })
        .try_fold(f64::INFINITY, |acc, r: Result<f64>| Ok(acc.min(r?)))
}

/// Smooth bump `exp(1 - 1/(1 - |x - c|^2 / R^2))`, equal to 1 at the centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Bump {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let r2 = ((x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2)) / (self.radius * self.radius);
        if r2 >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - r2)).exp()
        }
    }

    pub fn grad(&self, x: [f64; 2]) -> [f64; 2] {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        let r2 = (d[0] * d[0] + d[1] * d[1]) / (self.radius * self.radius);
        if r2 >= 1.0 {
            return [0.0, 0.0];
        }
        let v = (1.0 - 1.0 / (1.0 - r2)).exp();
        let c = -2.0 * v / ((1.0 - r2).powi(2) * self.radius * self.radius);
        [c * d[0], c * d[1]]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteractionRow {
    pub h: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub relative_residual: f64,
}

pub const H_NODES: usize = 12;

/// Both sides below this count as zero in the relative residual.
pub const IDENTITY_FLOOR: f64 = 1e-14;

/// `int gamma Delta_alpha(., h) dx` against `-int_0^h int grad gamma . A_alpha(., h~) dx dh~`
/// with `e = e_1`, midpoint rule on `grid` in `x` and Gauss-Legendre in `h~`.
pub fn interaction_identity_check(
    spec: &FieldSpec,
    grid: &Grid2,
    gamma: &Bump,
    phi: &PhiAlpha,
    h_ladder: &[f64],
) -> Result<Vec<InteractionRow>> {
    let reach = h_ladder.iter().fold(0.0f64, |a, h| a.max(h.abs()));
    if let Some(c) = spec.singularity() {
        let d = (c[0] - gamma.center[0]).hypot(c[1] - gamma.center[1]);
        if d <= gamma.radius + reach {
            return Err(Error::InvalidParameter("test function support meets the field singularity".into()));
        }
    }
    let lo = grid.origin;
    let up = grid.upper();
    if gamma.center[0] - gamma.radius < lo[0]
        || gamma.center[1] - gamma.radius < lo[1]
        || gamma.center[0] + gamma.radius + reach > up[0]
        || gamma.center[0] - gamma.radius - reach < lo[0]
        || gamma.center[1] + gamma.radius > up[1]
    {
        return Err(Error::SupportOnBoundary);
    }
    let cells: Vec<[f64; 2]> = (0..grid.len()).map(|k| grid.center_of(k)).filter(|&x| gamma.eval(x) > 0.0).collect();
    let area = grid.cell_area();
    let rule = quad::gauss_legendre(H_NODES);
    let e1 = [1.0, 0.0];
    h_ladder
        .iter()
        .map(|&h| {
            let terms: Vec<f64> = cells.par_iter().map(|&x| gamma.eval(x) * delta_alpha(spec, x, h, e1, phi)).collect();
            let lhs = terms.iter().sum::<f64>() * area;
            let (nodes, weights): (Vec<f64>, Vec<f64>) = rule.as_node_weight_pairs().iter().copied().unzip();
            let inner = |ht: f64| -> f64 {
                cells
                    .par_iter()
                    .map(|&x| {
                        let g = gamma.grad(x);
                        let a = a_alpha_pair(phi, spec.angle_at(x), spec.angle_at([x[0] + ht, x[1]]));
                        g[0] * a[0] + g[1] * a[1]
                    })
                    .collect::<Vec<f64>>()
                    .iter()
                    .sum::<f64>()
                    * area
            };
            let half = 0.5 * h;
            let rhs = -half * nodes.iter().zip(&weights).map(|(&n, &w)| w * inner(half * (n + 1.0))).sum::<f64>();
            let scale = lhs.abs().max(rhs.abs());
            let relative_residual = if scale < IDENTITY_FLOOR { 0.0 } else { (lhs - rhs).abs() / scale };
            Ok(InteractionRow { h, lhs, rhs, relative_residual })
        })
        .collect()
}
