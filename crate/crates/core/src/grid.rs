//! Truncated-box discretization of R^N.
//!
//! Nodes sit on a midpoint lattice `x_i = -L + (i + 1/2) h`, so no node lies
//! on the box boundary or at the origin. Integrals use the midpoint rule with
//! compensated summation in a fixed order.

use serde::{Deserialize, Serialize};

use crate::error::{HeatError, Result};
use crate::par;

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

/// A point in up to three dimensions; only the first `dim` entries are used.
pub type Point = [f64; MAX_DIM];

const SUM_CHUNK: usize = 4096;

/// Accuracy expected of midpoint quadrature of smooth, well-resolved data.
pub const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
}

/// Relative half-width difference below which two lattices are the same
/// (a lattice scaled by `s` and back by `1/s` must compare equal).
const SAME_LATTICE_RTOL: f64 = 1e-12;

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.points_per_axis == other.points_per_axis
            && (self.half_width - other.half_width).abs()
                <= SAME_LATTICE_RTOL * self.half_width.max(other.half_width)
    }
}

/// Builds a validated grid.
pub fn make_grid(dim: usize, half_width: f64, points_per_axis: usize) -> Result<GridSpec> {
    GridSpec::new(dim, half_width, points_per_axis)
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(HeatError::UnsupportedDimension(dim));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(HeatError::NonPositiveExtent(half_width));
        }
        if points_per_axis < 8 || !points_per_axis.is_multiple_of(2) {
            return Err(HeatError::OddPointCount(points_per_axis));
        }
        Ok(Self {
            dim,
            half_width,
            points_per_axis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    /// `spacing^dim`, the volume of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of the `i`-th node along any axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    /// Node coordinates along one axis.
    pub fn axis(&self) -> Vec<f64> {
        (0..self.points_per_axis).map(|i| self.coord(i)).collect()
    }

    /// Row-major multi-index of a flat node index (last axis fastest).
    pub fn multi_index(&self, flat: usize) -> [usize; MAX_DIM] {
        let n = self.points_per_axis;
        let mut idx = [0usize; MAX_DIM];
        let mut rem = flat;
        for a in (0..self.dim).rev() {
            idx[a] = rem % n;
            rem /= n;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .take(self.dim)
            .fold(0, |acc, &i| acc * self.points_per_axis + i)
    }

    pub fn node(&self, flat: usize) -> Point {
        let idx = self.multi_index(flat);
        let mut p = [0.0; MAX_DIM];
        for a in 0..self.dim {
            p[a] = self.coord(idx[a]);
        }
        p
    }

    /// Distance of a node from the nearest box face, counted in nodes.
    pub fn ring_depth(&self, flat: usize) -> usize {
        let idx = self.multi_index(flat);
        let n = self.points_per_axis;
        (0..self.dim)
            .map(|a| idx[a].min(n - 1 - idx[a]))
            .min()
            .unwrap_or(0)
    }

    /// True when the node is at least `ring` nodes away from every face.
    pub fn is_interior(&self, flat: usize, ring: usize) -> bool {
        self.ring_depth(flat) >= ring
    }

    /// Same lattice stretched by `factor` (node `i` moves to `factor * x_i`).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.dim, self.half_width * factor, self.points_per_axis)
    }

    /// Sub-lattice obtained by dropping `m` nodes on each side of every axis.
    pub fn shrunk_by(&self, m: usize) -> Result<Self> {
        let n = self
            .points_per_axis
            .checked_sub(2 * m)
            .ok_or(HeatError::OddPointCount(0))?;
        Self::new(self.dim, self.half_width - m as f64 * self.spacing(), n)
    }

    /// Largest sub-lattice whose half-width does not exceed `max_half_width`.
    pub fn cropped_to(&self, max_half_width: f64) -> Result<(Self, usize)> {
        if max_half_width >= self.half_width {
            return Ok((*self, 0));
        }
        let h = self.spacing();
        let m = ((self.half_width - max_half_width) / h - 1e-9)
            .ceil()
            .max(0.0) as usize;
        Ok((self.shrunk_by(m)?, m))
    }

    pub fn is_power_of_two(&self) -> bool {
        self.points_per_axis.is_power_of_two()
    }
}

/// Box half-width that keeps the Gaussian spread of data centred at
/// distance `center` below `tail_tol` up to time `t_max` (diffusivity 1).
pub fn recommended_half_width(center: f64, t_max: f64, tail_tol: f64) -> f64 {
    center.abs() + 2.0 * (4.0 * t_max * (1.0 / tail_tol).ln()).sqrt()
}

/// The two time conventions: `u_t = Δu` and `u_t = Δu / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Diffusivity {
    #[default]
    Unit,
    Half,
}

impl Diffusivity {
    pub fn value(self) -> f64 {
        match self {
            Diffusivity::Unit => 1.0,
            Diffusivity::Half => 0.5,
        }
    }
}

/// Samples of a real function on a grid at a given diffusion time.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
    time: f64,
    diffusivity: Diffusivity,
}

impl Field {
    /// Wraps raw node values; every value must be finite.
    pub fn from_values(
        grid: GridSpec,
        values: Vec<f64>,
        time: f64,
        diffusivity: Diffusivity,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(HeatError::GridMismatch);
        }
        if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(HeatError::NonFiniteSample { node, value });
        }
        if !(time >= 0.0) {
            return Err(HeatError::InvalidArgument(format!(
                "negative field time {time}"
            )));
        }
        Ok(Self {
            grid,
            values,
            time,
            diffusivity,
        })
    }

    pub fn zeros(grid: GridSpec, time: f64, diffusivity: Diffusivity) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            time,
            diffusivity,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn diffusivity(&self) -> Diffusivity {
        self.diffusivity
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn with_diffusivity(mut self, diffusivity: Diffusivity) -> Self {
        self.diffusivity = diffusivity;
        self
    }

    fn check_compatible(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(HeatError::GridMismatch);
        }
        if self.diffusivity != other.diffusivity {
            return Err(HeatError::DiffusivityMismatch);
        }
        Ok(())
    }

    /// `a * self + b * other`; keeps the time stamp of `self`.
    pub fn combine(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Field::from_values(self.grid, values, self.time, self.diffusivity)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.combine(1.0, other, -1.0)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.combine(1.0, other, 1.0)
    }

    pub fn scale(&self, a: f64) -> Field {
        Field {
            values: self.values.iter().map(|v| a * v).collect(),
            ..self.clone()
        }
    }

    /// Pointwise map `v_i -> f(x_i, v_i)`.
    pub fn map_with_nodes<F>(&self, f: F) -> Result<Field>
    where
        F: Fn(&[f64], f64) -> f64 + Sync + Send,
    {
        let dim = self.grid.dim();
        let values = par::map_range(self.values.len(), |i| {
            let p = self.grid.node(i);
            f(&p[..dim], self.values[i])
        });
        Field::from_values(self.grid, values, self.time, self.diffusivity)
    }

    /// Restriction to the largest sub-lattice inside `max_half_width`.
    pub fn cropped_to(&self, max_half_width: f64) -> Result<Field> {
        let (sub, m) = self.grid.cropped_to(max_half_width)?;
        if m == 0 {
            return Ok(self.clone());
        }
        let dim = self.grid.dim();
        let values = (0..sub.len())
            .map(|i| {
                let mut idx = sub.multi_index(i);
                for a in idx.iter_mut().take(dim) {
                    *a += m;
                }
                self.values[self.grid.flat_index(&idx)]
            })
            .collect();
        Field::from_values(sub, values, self.time, self.diffusivity)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest |value| over nodes at least `ring` nodes from the boundary.
    pub fn interior_max_abs(&self, ring: usize) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.is_interior(*i, ring))
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()))
    }
}

/// Samples `f` at every node.
pub fn sample<F>(grid: &GridSpec, f: F, time: f64, diffusivity: Diffusivity) -> Result<Field>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let dim = grid.dim();
    let values = par::map_range(grid.len(), |i| {
        let p = grid.node(i);
        f(&p[..dim])
    });
    Field::from_values(*grid, values, time, diffusivity)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = CompensatedSum::default();
    for x in iter {
        acc.add(x);
    }
    acc.value()
}

/// Deterministic compensated sum of `term(i)` for `i < n`.
///
/// Fixed-size chunks are summed independently (possibly in parallel) and
/// merged in chunk order, so the result does not depend on thread count.
pub fn indexed_sum<F>(n: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(SUM_CHUNK);
    let partials = par::map_range(chunks, |c| {
        let mut acc = CompensatedSum::default();
        for i in c * SUM_CHUNK..((c + 1) * SUM_CHUNK).min(n) {
            acc.add(term(i));
        }
        acc
    });
    let mut total = CompensatedSum::default();
    for p in partials {
        total.merge(p);
    }
    total.value()
}

/// Weight function for [`quadrature`].
pub type Weight<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// Midpoint-rule integral `h^N Σ w(x_i) v_i`.
pub fn quadrature(field: &Field, weight: Option<Weight<'_>>) -> Result<f64> {
    let grid = field.grid();
    let dim = grid.dim();
    let vals = field.values();
    if let Some(w) = weight {
        let weights = par::map_range(vals.len(), |i| {
            let p = grid.node(i);
            w(&p[..dim])
        });
        if let Some(bad) = weights.iter().position(|w| !w.is_finite()) {
            return Err(HeatError::NonFiniteWeight(bad));
        }
        Ok(grid.cell_volume() * indexed_sum(vals.len(), |i| weights[i] * vals[i]))
    } else {
        Ok(grid.cell_volume() * indexed_sum(vals.len(), |i| vals[i]))
    }
}

/// Stationary Gaussian `(2π)^{-N/2} e^{-|x|²/2}`.
pub fn standard_gaussian(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (2.0 * std::f64::consts::PI).powf(-(x.len() as f64) / 2.0) * (-0.5 * r2).exp()
}

/// Largest |x| for which `1/G(x)` stays representable.
pub fn inverse_gauss_radius_limit() -> f64 {
    f64::MAX.ln().sqrt()
}

/// Checks that `1/G` can be evaluated at every node of `grid`.
pub fn check_inverse_gauss(grid: &GridSpec) -> Result<()> {
    let corner = grid.coord(grid.points_per_axis() - 1);
    let radius = corner * (grid.dim() as f64).sqrt();
    if radius > inverse_gauss_radius_limit() {
        return Err(HeatError::OverflowInInverseGaussWeight { radius });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormKind {
    /// L^p(dx), `p` in `[1, ∞]`.
    Lp(f64),
    /// L^1(|x| dx).
    WeightedL1,
    /// L^2(G dx) with the stationary Gaussian.
    L2Gauss,
    /// L^2(G^{-1} dx).
    L2InvGauss,
}

impl NormKind {
    pub const SUP: NormKind = NormKind::Lp(f64::INFINITY);
    pub const L1: NormKind = NormKind::Lp(1.0);
    pub const L2: NormKind = NormKind::Lp(2.0);

    pub fn label(&self) -> String {
        match self {
            NormKind::Lp(p) if p.is_infinite() => "sup".into(),
            NormKind::Lp(p) if *p == 1.0 => "l1".into(),
            NormKind::Lp(p) => format!("l{p}"),
            NormKind::WeightedL1 => "l1w".into(),
            NormKind::L2Gauss => "l2mu".into(),
            NormKind::L2InvGauss => "l2invmu".into(),
        }
    }

    pub fn parse(label: &str) -> Option<NormKind> {
        match label {
            "sup" | "linf" => Some(NormKind::SUP),
            "l1" => Some(NormKind::L1),
            "l1w" => Some(NormKind::WeightedL1),
            "l2mu" => Some(NormKind::L2Gauss),
            "l2invmu" => Some(NormKind::L2InvGauss),
            other => other
                .strip_prefix('l')
                .and_then(|p| p.parse::<f64>().ok())
                .filter(|p| *p >= 1.0)
                .map(NormKind::Lp),
        }
    }
}

/// Discrete norm of a field.
pub fn norm(field: &Field, kind: NormKind) -> Result<f64> {
    norm_values(field.grid(), field.values(), kind, |_| true)
}

/// Discrete norm restricted to nodes at least `ring` nodes from the boundary.
pub fn interior_norm(field: &Field, kind: NormKind, ring: usize) -> Result<f64> {
    let grid = *field.grid();
    norm_values(&grid, field.values(), kind, move |i| {
        grid.is_interior(i, ring)
    })
}

pub(crate) fn norm_values<M>(grid: &GridSpec, vals: &[f64], kind: NormKind, mask: M) -> Result<f64>
where
    M: Fn(usize) -> bool + Sync + Send,
{
    let dim = grid.dim();
    let vol = grid.cell_volume();
    match kind {
        NormKind::Lp(p) if !(p >= 1.0) => {
            Err(HeatError::InvalidArgument(format!("norm exponent {p} < 1")))
        }
        NormKind::Lp(p) if p.is_infinite() => Ok(vals
            .iter()
            .enumerate()
            .filter(|(i, _)| mask(*i))
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()))),
        NormKind::Lp(p) => {
            let s = vol
                * indexed_sum(vals.len(), |i| {
                    if mask(i) {
                        vals[i].abs().powf(p)
                    } else {
                        0.0
                    }
                });
            Ok(s.powf(1.0 / p))
        }
        NormKind::WeightedL1 => Ok(vol
            * indexed_sum(vals.len(), |i| {
                if mask(i) {
                    let x = grid.node(i);
                    let r = x[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
                    r * vals[i].abs()
                } else {
                    0.0
                }
            })),
        NormKind::L2Gauss => {
            let s = vol
                * indexed_sum(vals.len(), |i| {
                    if mask(i) {
                        let x = grid.node(i);
                        vals[i] * vals[i] * standard_gaussian(&x[..dim])
                    } else {
                        0.0
                    }
                });
            Ok(s.sqrt())
        }
        NormKind::L2InvGauss => {
            check_inverse_gauss(grid)?;
            let s = vol
                * indexed_sum(vals.len(), |i| {
                    if mask(i) {
                        let x = grid.node(i);
                        vals[i] * vals[i] / standard_gaussian(&x[..dim])
                    } else {
                        0.0
                    }
                });
            if !s.is_finite() {
                return Err(HeatError::OverflowInInverseGaussWeight {
                    radius: grid.half_width(),
                });
            }
            Ok(s.sqrt())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g1(x: &[f64]) -> f64 {
        (4.0 * std::f64::consts::PI).powf(-0.5) * (-x[0] * x[0] / 4.0).exp()
    }

    #[test]
    fn spacing_from_definition() {
        let g = make_grid(1, 40.0, 4096).unwrap();
        assert_eq!(g.spacing(), 0.01953125);
        assert_eq!(make_grid(2, 20.0, 256).unwrap().len(), 65536);
    }

    #[test]
    fn invalid_grids_rejected() {
        assert_eq!(
            make_grid(1, -5.0, 128),
            Err(HeatError::NonPositiveExtent(-5.0))
        );
        assert_eq!(make_grid(1, 5.0, 127), Err(HeatError::OddPointCount(127)));
        assert_eq!(make_grid(1, 5.0, 6), Err(HeatError::OddPointCount(6)));
        assert_eq!(
            make_grid(4, 5.0, 16),
            Err(HeatError::UnsupportedDimension(4))
        );
        assert_eq!(
            make_grid(0, 5.0, 16),
            Err(HeatError::UnsupportedDimension(0))
        );
    }

    #[test]
    fn midpoint_lattice_avoids_origin_and_faces() {
        let g = make_grid(1, 1.0, 8).unwrap();
        let axis = g.axis();
        assert!(axis.iter().all(|x| *x != 0.0 && x.abs() < 1.0));
        assert!((axis[0] + 0.875).abs() < 1e-15);
        // row-major: last axis fastest
        let g2 = make_grid(2, 1.0, 8).unwrap();
        assert_eq!(g2.multi_index(9), [1, 1, 0]);
        assert_eq!(g2.flat_index(&[1, 1]), 9);
    }

    #[test]
    fn sampling_reports_bad_node() {
        let g = make_grid(1, 1.0, 8).unwrap();
        let z = sample(&g, |_| 0.0, 0.0, Diffusivity::Unit).unwrap();
        assert!(z.values().iter().all(|v| *v == 0.0));
        // midpoint lattice excludes 0, so 1/x is finite
        assert!(sample(&g, |x| 1.0 / x[0], 0.0, Diffusivity::Unit).is_ok());
        let err = sample(
            &g,
            |x| if x[0] > 0.5 { f64::NAN } else { 1.0 },
            0.0,
            Diffusivity::Unit,
        );
        assert!(matches!(
            err,
            Err(HeatError::NonFiniteSample { node: 6, .. })
        ));
    }

    #[test]
    fn gaussian_mass_and_variance() {
        let g = make_grid(1, 40.0, 4096).unwrap();
        let f = sample(&g, g1, 1.0, Diffusivity::Unit).unwrap();
        // the lattice node nearest 0 sits at h/2, so G(h/2) = G(0)(1 - h²/16 + ...)
        let h = g.spacing();
        assert!((f.max_abs() - 0.2820948).abs() < 0.2820948 * h * h / 16.0 + 1e-7);
        assert!((quadrature(&f, None).unwrap() - 1.0).abs() < 1e-12);
        let w = |x: &[f64]| x[0] * x[0];
        assert!((quadrature(&f, Some(&w)).unwrap() - 2.0).abs() < 1e-10);
        assert!((norm(&f, NormKind::L1).unwrap() - 1.0).abs() < 1e-12);
        assert!(
            (norm(&f, NormKind::SUP).unwrap() - (4.0 * std::f64::consts::PI).powf(-0.5)).abs()
                < 1e-5
        );
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let g = make_grid(2, 5.0, 16).unwrap();
        let z = Field::zeros(g, 0.0, Diffusivity::Unit);
        for k in [
            NormKind::L1,
            NormKind::L2,
            NormKind::SUP,
            NormKind::Lp(3.5),
            NormKind::WeightedL1,
            NormKind::L2Gauss,
            NormKind::L2InvGauss,
        ] {
            assert_eq!(norm(&z, k).unwrap(), 0.0);
        }
        assert_eq!(quadrature(&z, None).unwrap(), 0.0);
    }

    #[test]
    fn inverse_gauss_guard() {
        let big = make_grid(1, 40.0, 64).unwrap();
        let f = Field::zeros(big, 0.0, Diffusivity::Unit);
        assert!(matches!(
            norm(&f, NormKind::L2InvGauss),
            Err(HeatError::OverflowInInverseGaussWeight { .. })
        ));
        let ok = make_grid(1, 20.0, 64).unwrap();
        assert!(norm(
            &Field::zeros(ok, 0.0, Diffusivity::Unit),
            NormKind::L2InvGauss
        )
        .is_ok());
    }

    #[test]
    fn mixed_grids_refused() {
        let grids = [
            make_grid(1, 5.0, 16).unwrap(),
            make_grid(1, 5.0, 32).unwrap(),
            make_grid(1, 6.0, 16).unwrap(),
            make_grid(2, 5.0, 16).unwrap(),
        ];
        for (i, a) in grids.iter().enumerate() {
            for (j, b) in grids.iter().enumerate() {
                let fa = Field::zeros(*a, 0.0, Diffusivity::Unit);
                let fb = Field::zeros(*b, 0.0, Diffusivity::Unit);
                let r = fa.sub(&fb);
                if i == j {
                    assert!(r.is_ok());
                } else {
                    assert_eq!(r, Err(HeatError::GridMismatch));
                }
            }
        }
        let a = Field::zeros(grids[0], 0.0, Diffusivity::Unit);
        let b = Field::zeros(grids[0], 0.0, Diffusivity::Half);
        assert_eq!(a.add(&b), Err(HeatError::DiffusivityMismatch));
    }

    #[test]
    fn crop_keeps_lattice() {
        let g = make_grid(1, 10.0, 64).unwrap();
        let f = sample(&g, |x| x[0], 0.0, Diffusivity::Unit).unwrap();
        let c = f.cropped_to(5.0).unwrap();
        assert!(c.grid().half_width() <= 5.0 + 1e-12);
        assert_eq!(c.grid().spacing(), g.spacing());
        for (i, v) in c.values().iter().enumerate() {
            assert!((v - c.grid().coord(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut v = vec![1.0];
        v.extend(std::iter::repeat_n(1e-16, 10000));
        assert!((compensated_sum(v.iter().copied()) - (1.0 + 1e-12)).abs() < 1e-15);
        let n = 20_000;
        let s = indexed_sum(n, |i| if i == 0 { 1.0 } else { 1e-16 });
        assert!((s - (1.0 + (n - 1) as f64 * 1e-16)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn l1_bounded_by_box_volume_times_sup(
            a in -3.0f64..3.0, b in 0.1f64..4.0, c in -2.0f64..2.0, dim in 1usize..3
        ) {
            let g = make_grid(dim, 6.0, 32).unwrap();
            let f = sample(&g, |x| a * (-(x[0] - c).powi(2) / b).exp() + 0.1 * x[dim - 1], 0.0, Diffusivity::Unit).unwrap();
            let l1 = norm(&f, NormKind::L1).unwrap();
            let sup = norm(&f, NormKind::SUP).unwrap();
            prop_assert!(l1 <= 12f64.powi(dim as i32) * sup * (1.0 + 1e-12));
        }

        #[test]
        fn midpoint_rule_is_second_order_for_smooth_integrands(k in 1u32..4) {
            // ∫_{-1}^{1} cos(k x) dx = 2 sin(k)/k on [-1,1]: error ≤ h²/24 ∫|f''|
            let g = make_grid(1, 1.0, 64).unwrap();
            let kk = k as f64;
            let f = sample(&g, |x| (kk * x[0]).cos(), 0.0, Diffusivity::Unit).unwrap();
            let q = quadrature(&f, None).unwrap();
            let exact = 2.0 * kk.sin() / kk;
            let bound = g.spacing().powi(2) / 24.0 * 2.0 * kk * kk;
            prop_assert!((q - exact).abs() <= bound);
        }
    }
}
