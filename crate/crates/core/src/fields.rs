//! Grids, analytic test fields, mollification and finite differences.

use crate::error::{Error, Result};
use crate::quad;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, TAU};

/// Uniform cell-centred grid. Cell `(i, j)` has centre `origin + ((i + 1/2) h, (j + 1/2) h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    /// Lower-left corner of the covered rectangle.
    pub origin: [f64; 2],
}

impl Grid2 {
    pub fn new(nx: usize, ny: usize, spacing: f64, origin: [f64; 2]) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::GridTooSmall { nx, ny });
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidSpacing(spacing));
        }
        Ok(Self { nx, ny, spacing, origin })
    }

    /// Square grid of `n x n` cells covering `[-half, half]^2`.
    pub fn centered_square(n: usize, half: f64) -> Result<Self> {
        Self::new(n, n, 2.0 * half / n as f64, [-half, -half])
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.spacing,
            self.origin[1] + (j as f64 + 0.5) * self.spacing,
        ]
    }

    pub fn center_of(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.ij(idx);
        self.center(i, j)
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }

    pub fn upper(&self) -> [f64; 2] {
        [
            self.origin[0] + self.nx as f64 * self.spacing,
            self.origin[1] + self.ny as f64 * self.spacing,
        ]
    }

    /// Index of `(i + di, j + dj)` when it lies on the grid.
    pub fn offset(&self, i: usize, j: usize, di: isize, dj: isize) -> Option<usize> {
        let a = i as isize + di;
        let b = j as isize + dj;
        if a < 0 || b < 0 || a >= self.nx as isize || b >= self.ny as isize {
            None
        } else {
            Some(self.idx(a as usize, b as usize))
        }
    }

    /// Cells whose centre is at least `margin` from the boundary of the covered rectangle.
    pub fn interior_mask(&self, margin: f64) -> Vec<bool> {
        let tol = 1e-12 * self.spacing;
        (0..self.len())
            .map(|idx| {
                let (i, j) = self.ij(idx);
                let d = [
                    (i as f64 + 0.5) * self.spacing,
                    (self.nx as f64 - i as f64 - 0.5) * self.spacing,
                    (j as f64 + 0.5) * self.spacing,
                    (self.ny as f64 - j as f64 - 0.5) * self.spacing,
                ];
                d.iter().all(|&v| v + tol >= margin)
            })
            .collect()
    }

    pub fn same_as(&self, other: &Grid2) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Subdomain over which norms and integrals are taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Whole,
    Rect { x: [f64; 2], y: [f64; 2] },
    Annulus { center: [f64; 2], r_in: f64, r_out: f64 },
}

impl Region {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        match *self {
            Region::Whole => true,
            Region::Rect { x, y } => p[0] >= x[0] && p[0] <= x[1] && p[1] >= y[0] && p[1] <= y[1],
            Region::Annulus { center, r_in, r_out } => {
                let r = (p[0] - center[0]).hypot(p[1] - center[1]);
                r >= r_in && r <= r_out
            }
        }
    }

    /// The region grown by `d` in every direction.
    pub fn dilate(&self, d: f64) -> Region {
        match *self {
            Region::Whole => Region::Whole,
            Region::Rect { x, y } => Region::Rect { x: [x[0] - d, x[1] + d], y: [y[0] - d, y[1] + d] },
            Region::Annulus { center, r_in, r_out } => {
                Region::Annulus { center, r_in: (r_in - d).max(0.0), r_out: r_out + d }
            }
        }
    }
}

/// Angle field `m = e^{i theta}` sampled at cell centres, `theta` in `[0, 2 pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleField {
    pub grid: Grid2,
    theta: Vec<f64>,
}

pub fn wrap_angle(t: f64) -> f64 {
    let w = t.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

impl AngleField {
    pub fn new(grid: Grid2, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(t) = theta.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidFieldSpec(format!("non-finite angle {t}")));
        }
        Ok(Self { grid, theta: theta.into_iter().map(wrap_angle).collect() })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn value(&self, idx: usize) -> [f64; 2] {
        let (s, c) = self.theta[idx].sin_cos();
        [c, s]
    }

    pub fn to_vec_field(&self) -> VecField {
        VecField {
            grid: self.grid,
            values: (0..self.grid.len()).map(|k| self.value(k)).collect(),
            mask: vec![true; self.grid.len()],
        }
    }

    pub fn rotated(&self, angle: f64) -> AngleField {
        AngleField { grid: self.grid, theta: self.theta.iter().map(|t| wrap_angle(t + angle)).collect() }
    }

    /// `D^z m` on the embedded values, `z = (di, dj)` cells; zero where `x + z` leaves the grid.
    pub fn shift_diff(&self, di: isize, dj: isize) -> VecField {
        self.to_vec_field().shift_diff(di, dj)
    }

    pub fn to_eelf(&self) -> Vec<u8> {
        encode_eelf(&self.grid, &self.theta)
    }
}

/// Planar vector field with an evaluation mask.
#[derive(Debug, Clone, PartialEq)]
pub struct VecField {
    pub grid: Grid2,
    pub values: Vec<[f64; 2]>,
    pub mask: Vec<bool>,
}

/// Scalar field with an evaluation mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid2,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl VecField {
    pub fn new(grid: Grid2, values: Vec<[f64; 2]>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != grid.len() || mask.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, values, mask })
    }

    pub fn norms(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| v[0].hypot(v[1])).collect(),
            mask: self.mask.clone(),
        }
    }

    pub fn component(&self, c: usize) -> ScalarField {
        ScalarField { grid: self.grid, values: self.values.iter().map(|v| v[c]).collect(), mask: self.mask.clone() }
    }

    pub fn rotated(&self, angle: f64) -> VecField {
        let (s, c) = angle.sin_cos();
        VecField {
            grid: self.grid,
            values: self.values.iter().map(|v| [c * v[0] - s * v[1], s * v[0] + c * v[1]]).collect(),
            mask: self.mask.clone(),
        }
    }

    /// `D^z f(x) = f(x+z) - f(x)` when both cells are in the mask, else 0.
    pub fn shift_diff(&self, di: isize, dj: isize) -> VecField {
        let g = self.grid;
        let values = (0..g.len())
            .map(|k| {
                let (i, j) = g.ij(k);
                match g.offset(i, j, di, dj) {
                    Some(o) if self.mask[k] && self.mask[o] => {
                        [self.values[o][0] - self.values[k][0], self.values[o][1] - self.values[k][1]]
                    }
                    _ => [0.0, 0.0],
                }
            })
            .collect();
        VecField { grid: g, values, mask: self.mask.clone() }
    }

    pub fn divergence(&self) -> ScalarField {
        let dx = self.component(0).partial(0);
        let dy = self.component(1).partial(1);
        dx.zip_with(&dy, |a, b| a + b)
    }

    pub fn to_eelf(&self) -> Vec<u8> {
        let flat: Vec<f64> = self.values.iter().flat_map(|v| [v[0], v[1]]).collect();
        encode_eelf(&self.grid, &flat)
    }
}

impl ScalarField {
    pub fn new(grid: Grid2, values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != grid.len() || mask.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, values, mask })
    }

    pub fn from_fn<F: Fn([f64; 2]) -> f64 + Sync>(grid: Grid2, f: F) -> ScalarField {
        let values = (0..grid.len()).into_par_iter().map(|k| f(grid.center_of(k))).collect();
        ScalarField { grid, values, mask: vec![true; grid.len()] }
    }

    /// Central difference along axis `axis`; the mask keeps cells whose two neighbours are masked.
    pub fn partial(&self, axis: usize) -> ScalarField {
        let g = self.grid;
        let inv = 0.5 / g.spacing;
        let (di, dj) = if axis == 0 { (1, 0) } else { (0, 1) };
        let mut values = vec![0.0; g.len()];
        let mut mask = vec![false; g.len()];
        for k in 0..g.len() {
            let (i, j) = g.ij(k);
            if let (Some(p), Some(m)) = (g.offset(i, j, di, dj), g.offset(i, j, -di, -dj)) {
                if self.mask[k] && self.mask[p] && self.mask[m] {
                    values[k] = (self.values[p] - self.values[m]) * inv;
                    mask[k] = true;
                }
            }
        }
        ScalarField { grid: g, values, mask }
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &ScalarField, f: F) -> ScalarField {
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        let mask = self.mask.iter().zip(&other.mask).map(|(&a, &b)| a && b).collect();
        ScalarField { grid: self.grid, values, mask }
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> ScalarField {
        ScalarField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect(), mask: self.mask.clone() }
    }

    pub fn restrict(&self, mask: &[bool]) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.clone(),
            mask: self.mask.iter().zip(mask).map(|(&a, &b)| a && b).collect(),
        }
    }

    pub fn shift_diff(&self, di: isize, dj: isize) -> ScalarField {
        let g = self.grid;
        let values = (0..g.len())
            .map(|k| {
                let (i, j) = g.ij(k);
                match g.offset(i, j, di, dj) {
                    Some(o) if self.mask[k] && self.mask[o] => self.values[o] - self.values[k],
                    _ => 0.0,
                }
            })
            .collect();
        ScalarField { grid: g, values, mask: self.mask.clone() }
    }

    /// Masked cells whose centre lies in `region`.
    pub fn cells_in<'a>(&'a self, region: &'a Region) -> impl Iterator<Item = usize> + 'a {
        (0..self.grid.len()).filter(move |&k| self.mask[k] && region.contains(self.grid.center_of(k)))
    }

    /// Midpoint-rule `L^p` norm over the masked part of `region`; `p = inf` gives the max.
    pub fn lp_norm(&self, region: &Region, p: f64) -> Result<f64> {
        let cells: Vec<usize> = self.cells_in(region).collect();
        if cells.is_empty() {
            return Err(Error::EmptyRegion);
        }
        if p.is_infinite() {
            return Ok(cells.iter().map(|&k| self.values[k].abs()).fold(0.0, f64::max));
        }
        let s: f64 = cells.iter().map(|&k| self.values[k].abs().powf(p)).sum();
        Ok((s * self.grid.cell_area()).powf(1.0 / p))
    }

    /// Midpoint-rule integral over the masked part of `region`.
    pub fn integral(&self, region: &Region) -> Result<f64> {
        let cells: Vec<usize> = self.cells_in(region).collect();
        if cells.is_empty() {
            return Err(Error::EmptyRegion);
        }
        Ok(cells.iter().map(|&k| self.values[k]).sum::<f64>() * self.grid.cell_area())
    }

    pub fn to_eelf(&self) -> Vec<u8> {
        encode_eelf(&self.grid, &self.values)
    }
}

/// Fourier mode of a stream (characteristics) field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamMode {
    pub amp: f64,
    pub freq: f64,
    pub phase: f64,
}

/// Analytic description of a divergence-free unit field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    /// `m = e^{i theta}` everywhere.
    Constant { theta: f64 },
    /// `m = i (x - c) / |x - c|`.
    Vortex { center: [f64; 2] },
    /// Half-plane jump across `{x . normal = offset}`; `theta_plus` on the side the normal points to.
    Jump { normal: [f64; 2], offset: f64, theta_plus: f64, theta_minus: f64 },
    /// Angle constant along the characteristics `s + t i e^{i g(s)}` issued from the line `y = base_y`,
    /// with `g(s) = theta0 + sum amp sin(freq s + phase)`.
    Stream { theta0: f64, base_y: f64, modes: Vec<StreamMode> },
}

pub const TRACE_TOL: f64 = 1e-12;

impl FieldSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            FieldSpec::Constant { theta } => finite(&[*theta]),
            FieldSpec::Vortex { center } => finite(center),
            FieldSpec::Jump { normal, offset, theta_plus, theta_minus } => {
                finite(&[normal[0], normal[1], *offset, *theta_plus, *theta_minus])?;
                let n = normal[0].hypot(normal[1]);
                if (n - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidFieldSpec(format!("jump normal must be a unit vector, |normal| = {n}")));
                }
                let r = self.trace_residual().unwrap_or(0.0);
                if r > TRACE_TOL {
                    return Err(Error::TraceCondition { residual: r });
                }
                Ok(())
            }
            FieldSpec::Stream { theta0, base_y, modes } => {
                finite(&[*theta0, *base_y])?;
                for m in modes {
                    finite(&[m.amp, m.freq, m.phase])?;
                }
                if stream_gmax(*theta0, modes) >= FRAC_PI_2 {
                    return Err(Error::InvalidFieldSpec(
                        "stream angle must stay inside (-pi/2, pi/2) for characteristics to leave the base line".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// `|eta . (m+ - m-)|` for a jump spec.
    pub fn trace_residual(&self) -> Option<f64> {
        match *self {
            FieldSpec::Jump { normal, theta_plus, theta_minus, .. } => {
                let dx = theta_plus.cos() - theta_minus.cos();
                let dy = theta_plus.sin() - theta_minus.sin();
                Some((normal[0] * dx + normal[1] * dy).abs())
            }
            _ => None,
        }
    }

    /// Checks that nothing in the spec degenerates on `grid`; for vortices, moves the centre off cell centres.
    pub fn placed_on(&self, grid: &Grid2) -> Result<FieldSpec> {
        self.validate()?;
        match self {
            FieldSpec::Vortex { center } => {
                let h = grid.spacing;
                let fx = ((center[0] - grid.origin[0]) / h - 0.5).rem_euclid(1.0);
                let fy = ((center[1] - grid.origin[1]) / h - 0.5).rem_euclid(1.0);
                let near = |f: f64| f < 1e-9 || f > 1.0 - 1e-9;
                if near(fx) && near(fy) {
                    Ok(FieldSpec::Vortex { center: [center[0] + 0.5 * h, center[1] + 0.5 * h] })
                } else {
                    Ok(self.clone())
                }
            }
            FieldSpec::Stream { theta0, base_y, modes } => {
                let lo = grid.origin[1];
                let hi = grid.upper()[1];
                let reach = (lo - base_y).abs().max((hi - base_y).abs());
                let gmax = stream_gmax(*theta0, modes);
                let slope: f64 = modes.iter().map(|m| (m.amp * m.freq).abs()).sum();
                let crossing = reach * slope / gmax.cos().powi(2);
                if crossing >= 1.0 {
                    return Err(Error::InvalidFieldSpec(format!(
                        "stream characteristics cross inside the domain (focusing number {crossing:.3} >= 1)"
                    )));
                }
                Ok(self.clone())
            }
            _ => Ok(self.clone()),
        }
    }

    /// Exact angle at a point, in `[0, 2 pi)`.
    pub fn angle_at(&self, p: [f64; 2]) -> f64 {
        match self {
            FieldSpec::Constant { theta } => wrap_angle(*theta),
            FieldSpec::Vortex { center } => wrap_angle((p[1] - center[1]).atan2(p[0] - center[0]) + FRAC_PI_2),
            FieldSpec::Jump { normal, offset, theta_plus, theta_minus } => {
                if normal[0] * p[0] + normal[1] * p[1] - offset >= 0.0 {
                    wrap_angle(*theta_plus)
                } else {
                    wrap_angle(*theta_minus)
                }
            }
            FieldSpec::Stream { theta0, base_y, modes } => {
                let s = stream_foot(*theta0, *base_y, modes, p);
                wrap_angle(stream_g(*theta0, modes, s).0)
            }
        }
    }

    pub fn value_at(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.angle_at(p).sin_cos();
        [c, s]
    }

    /// Vortex centre, if any.
    pub fn singularity(&self) -> Option<[f64; 2]> {
        match self {
            FieldSpec::Vortex { center } => Some(*center),
            _ => None,
        }
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(self, FieldSpec::Jump { .. })
    }
}

fn finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidFieldSpec("non-finite parameter".into()))
    }
}

fn stream_gmax(theta0: f64, modes: &[StreamMode]) -> f64 {
    theta0.abs() + modes.iter().map(|m| m.amp.abs()).sum::<f64>()
}

fn stream_g(theta0: f64, modes: &[StreamMode], s: f64) -> (f64, f64) {
    modes.iter().fold((theta0, 0.0), |(g, dg), m| {
        let (sn, cs) = (m.freq * s + m.phase).sin_cos();
        (g + m.amp * sn, dg + m.amp * m.freq * cs)
    })
}

/// Foot `s` of the characteristic through `p`: `p.x = s - (p.y - base_y) tan g(s)`.
fn stream_foot(theta0: f64, base_y: f64, modes: &[StreamMode], p: [f64; 2]) -> f64 {
    let d = p[1] - base_y;
    let reach = d.abs() * stream_gmax(theta0, modes).tan() + 1e-12;
    let (mut lo, mut hi) = (p[0] - reach, p[0] + reach);
    let f = |s: f64| {
        let (g, dg) = stream_g(theta0, modes, s);
        let sec2 = 1.0 / g.cos().powi(2);
        (s - d * g.tan() - p[0], 1.0 - d * sec2 * dg)
    };
    let mut s = p[0];
    for _ in 0..100 {
        let (v, dv) = f(s);
        if v == 0.0 {
            return s;
        }
        if v > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let mut next = s - v / dv;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() <= 1e-15 * (1.0 + s.abs()) {
            return next;
        }
        s = next;
    }
    s
}

/// Samples `spec` at the cell centres of `grid`.
pub fn build_field(spec: &FieldSpec, grid: &Grid2) -> Result<AngleField> {
    let spec = spec.placed_on(grid)?;
    let theta = (0..grid.len()).into_par_iter().map(|k| spec.angle_at(grid.center_of(k))).collect();
    AngleField::new(*grid, theta)
}

/// Radial bump `exp(-1/(1-r^2))` scaled to radius `eps` and unit mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    pub eps: f64,
}

pub const KERNEL_NAME: &str = "bump exp(-1/(1-|z|^2)), radial quadrature normalization, discrete weights renormalized";

impl Mollifier {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("mollifier scale {eps}")));
        }
        Ok(Self { eps })
    }

    pub fn profile(r: f64) -> f64 {
        if r >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - r * r)).exp()
        }
    }

    /// `int_{B_1} rho = 2 pi int_0^1 rho(r) r dr`.
    pub fn unit_mass() -> f64 {
        TAU * quad::integrate(|r| Self::profile(r) * r, 0.0, 1.0, 1e-15)
    }

    pub fn density(&self, z: [f64; 2], mass: f64) -> f64 {
        let r = z[0].hypot(z[1]) / self.eps;
        Self::profile(r) / (self.eps * self.eps * mass)
    }

    /// `|int rho_eps - 1|` by tensor Gauss-Legendre in polar coordinates.
    pub fn normalization_error(&self) -> f64 {
        let mass = Self::unit_mass();
        let rule = quad::gauss_legendre(48);
        let total = quad::composite_gl(
            |r| {
                let ring = rule.integrate(0.0, TAU, |phi| self.density([r * phi.cos(), r * phi.sin()], mass));
                ring * r
            },
            0.0,
            self.eps,
            8,
        );
        (total - 1.0).abs()
    }

    /// Lattice offsets inside the open ball with weights summing to one.
    pub fn weights(&self, spacing: f64) -> Vec<(isize, isize, f64)> {
        let n = (self.eps / spacing).ceil() as isize;
        let mass = Self::unit_mass();
        let mut w = Vec::new();
        for dj in -n..=n {
            for di in -n..=n {
                let z = [di as f64 * spacing, dj as f64 * spacing];
                let v = self.density(z, mass);
                if v > 0.0 {
                    w.push((di, dj, v * spacing * spacing));
                }
            }
        }
        let s: f64 = w.iter().map(|x| x.2).sum();
        w.iter_mut().for_each(|x| x.2 /= s);
        w
    }

    /// Lattice weights of `-grad rho_eps`, scaled like [`Mollifier::weights`], so that
    /// `d_a m_eps(x) = sum_z w_a(z) m(x + z)` differentiates the discrete convolution exactly.
    pub fn gradient_weights(&self, spacing: f64) -> Vec<(isize, isize, [f64; 2])> {
        let n = (self.eps / spacing).ceil() as isize;
        let mass = Self::unit_mass();
        let mut total = 0.0;
        let mut w = Vec::new();
        for dj in -n..=n {
            for di in -n..=n {
                let z = [di as f64 * spacing, dj as f64 * spacing];
                let v = self.density(z, mass);
                if v > 0.0 {
                    total += v * spacing * spacing;
                    let r2 = (z[0] * z[0] + z[1] * z[1]) / (self.eps * self.eps);
                    let c = 2.0 * v / ((1.0 - r2).powi(2) * self.eps * self.eps) * spacing * spacing;
                    w.push((di, dj, [c * z[0], c * z[1]]));
                }
            }
        }
        w.iter_mut().for_each(|x| {
            x.2[0] /= total;
            x.2[1] /= total;
        });
        w
    }

    pub fn check_resolution(&self, spacing: f64) -> Result<()> {
        if self.eps < 2.0 * spacing * (1.0 - 1e-12) {
            Err(Error::UnresolvedKernel { eps: self.eps, min: 2.0 * spacing })
        } else {
            Ok(())
        }
    }
}

/// Discrete convolution of `e^{i theta}` with the kernel on the `eps`-interior.
pub fn mollify(m: &AngleField, kernel: &Mollifier) -> Result<VecField> {
    let g = m.grid;
    kernel.check_resolution(g.spacing)?;
    let w = kernel.weights(g.spacing);
    let mask = g.interior_mask(kernel.eps);
    let unit: Vec<[f64; 2]> = (0..g.len()).map(|k| m.value(k)).collect();
    let values = (0..g.len())
        .into_par_iter()
        .map(|k| {
            if !mask[k] {
                return [0.0, 0.0];
            }
            let (i, j) = g.ij(k);
            let mut acc = [0.0, 0.0];
            for &(di, dj, wt) in &w {
                // in-mask cells keep the whole stencil on the grid
                let o = g.idx((i as isize + di) as usize, (j as isize + dj) as usize);
                acc[0] += wt * unit[o][0];
                acc[1] += wt * unit[o][1];
            }
            acc
        })
        .collect();
    Ok(VecField { grid: g, values, mask })
}

/// Mollified field with its exact first derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct MollifiedJet {
    pub m: VecField,
    /// `d[a]` holds `d_a m_eps`.
    pub d: [VecField; 2],
}

/// [`mollify`] together with `grad m_eps` from the differentiated kernel.
pub fn mollify_jet(m: &AngleField, kernel: &Mollifier) -> Result<MollifiedJet> {
    let m_eps = mollify(m, kernel)?;
    let g = m.grid;
    let w = kernel.gradient_weights(g.spacing);
    let unit: Vec<[f64; 2]> = (0..g.len()).map(|k| m.value(k)).collect();
    let grads: Vec<[[f64; 2]; 2]> = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let mut acc = [[0.0; 2]; 2];
            if !m_eps.mask[k] {
                return acc;
            }
            let (i, j) = g.ij(k);
            for &(di, dj, wt) in &w {
                let o = g.idx((i as isize + di) as usize, (j as isize + dj) as usize);
                for a in 0..2 {
                    acc[a][0] += wt[a] * unit[o][0];
                    acc[a][1] += wt[a] * unit[o][1];
                }
            }
            acc
        })
        .collect();
    let d = [0, 1].map(|a| VecField { grid: g, values: grads.iter().map(|v| v[a]).collect(), mask: m_eps.mask.clone() });
    Ok(MollifiedJet { m: m_eps, d })
}

/// `P_m^eps(x) = eps^{-3} int_{B_eps} |m(x+z) - m(x)|^3 dz` by the midpoint rule on the lattice.
pub fn cubic_difference_average(m: &AngleField, eps: f64) -> Result<ScalarField> {
    let g = m.grid;
    Mollifier::new(eps)?.check_resolution(g.spacing)?;
    let n = (eps / g.spacing).ceil() as isize;
    let mut offs = Vec::new();
    for dj in -n..=n {
        for di in -n..=n {
            if ((di * di + dj * dj) as f64).sqrt() * g.spacing < eps {
                offs.push((di, dj));
            }
        }
    }
    let mask = g.interior_mask(eps);
    let scale = g.cell_area() / eps.powi(3);
    let values = (0..g.len())
        .into_par_iter()
        .map(|k| {
            if !mask[k] {
                return 0.0;
            }
            let (i, j) = g.ij(k);
            let a = m.value(k);
            let mut s = 0.0;
            for &(di, dj) in &offs {
                let b = m.value(g.idx((i as isize + di) as usize, (j as isize + dj) as usize));
                s += (b[0] - a[0]).hypot(b[1] - a[1]).powi(3);
            }
            s * scale
        })
        .collect();
    Ok(ScalarField { grid: g, values, mask })
}

const EELF_MAGIC: &[u8; 4] = b"EELF";
const EELF_VERSION: u64 = 1;
const EELF_HEADER: usize = 4 + 3 * 8 + 3 * 8;

/// Decoded field dump.
#[derive(Debug, Clone, PartialEq)]
pub struct EelfDump {
    pub grid: Grid2,
    pub components: usize,
    pub data: Vec<f64>,
}

/// Header `EELF`, u64 version, nx, ny, f64 spacing, origin x, origin y; then the row-major payload.
pub fn encode_eelf(grid: &Grid2, payload: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(EELF_HEADER + 8 * payload.len());
    out.extend_from_slice(EELF_MAGIC);
    for v in [EELF_VERSION, grid.nx as u64, grid.ny as u64] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in [grid.spacing, grid.origin[0], grid.origin[1]] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_eelf(bytes: &[u8]) -> Result<EelfDump> {
    if bytes.len() < EELF_HEADER || &bytes[..4] != EELF_MAGIC {
        return Err(Error::Dump("missing EELF header".into()));
    }
    let word = |k: usize| -> [u8; 8] { bytes[4 + 8 * k..12 + 8 * k].try_into().unwrap() };
    let version = u64::from_le_bytes(word(0));
    if version != EELF_VERSION {
        return Err(Error::Dump(format!("unsupported version {version}")));
    }
    let nx = u64::from_le_bytes(word(1)) as usize;
    let ny = u64::from_le_bytes(word(2)) as usize;
    let spacing = f64::from_le_bytes(word(3));
    let origin = [f64::from_le_bytes(word(4)), f64::from_le_bytes(word(5))];
    let grid = Grid2::new(nx, ny, spacing, origin)?;
    let body = &bytes[EELF_HEADER..];
    if body.len() % 8 != 0 || (body.len() / 8) % grid.len() != 0 {
        return Err(Error::Dump(format!("payload of {} bytes does not fit a {nx}x{ny} grid", body.len())));
    }
    let data: Vec<f64> = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(EelfDump { grid, components: data.len() / grid.len(), data })
}

/// Angular distance on the circle, in `[0, pi]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

pub fn unit(theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c, s]
}
