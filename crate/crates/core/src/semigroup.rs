//! The discrete heat semigroup.
//!
//! Every evolution is a single convolution with the Gaussian kernel at the
//! requested time (no time marching). Forcing is handled by Duhamel midpoint
//! quadrature, the linear reaction term by an exponential gauge, and the
//! half-line problems by odd or even reflection.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta;
use statrs::function::erf::erfc;

use crate::convolve;
use crate::error::{HeatError, Result};
use crate::grid::{self, sample, Diffusivity, Field, GridSpec, NormKind};
use crate::kernels::{gaussian_1d, SpecialSolutionKind};

/// Default bound on the fraction of mass allowed to leave the box.
pub const DEFAULT_TAIL_TOL: f64 = 1e-9;

/// Default number of Duhamel midpoint nodes.
pub const DEFAULT_DUHAMEL_NODES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMass {
    pub center: Vec<f64>,
    pub mass: f64,
}

impl PointMass {
    pub fn new(center: &[f64], mass: f64) -> Self {
        Self {
            center: center.to_vec(),
            mass,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// Samples already on the grid.
    GridSamples(Field),
    /// A catalogued solution frozen at its time `t0 > 0`.
    Catalog { kind: SpecialSolutionKind, t0: f64 },
    /// Dirac masses, realized as Gaussians of width `2 h`.
    PointMasses(Vec<PointMass>),
    /// `e^{-rate x}` for `x >= 0`, zero otherwise (one dimension).
    OneSidedExponential { rate: f64 },
    /// `scale (1 + |x|²)^{-exponent}`.
    PowerTail { exponent: f64, scale: f64 },
}

impl InitialData {
    /// Indicator of the cube `|x - center|_∞ <= radius`, scaled so that the
    /// discrete mass equals `mass`.
    pub fn box_indicator(
        grid: &GridSpec,
        center: &[f64],
        radius: f64,
        mass: f64,
        diffusivity: Diffusivity,
    ) -> Result<Self> {
        let raw = sample(
            grid,
            |x| {
                let inside = x
                    .iter()
                    .enumerate()
                    .all(|(a, xi)| (xi - center.get(a).copied().unwrap_or(0.0)).abs() <= radius);
                if inside {
                    1.0
                } else {
                    0.0
                }
            },
            0.0,
            diffusivity,
        )?;
        Self::normalized(raw, mass)
    }

    /// Smooth compactly supported bump `exp(-1 / (1 - r²/R²))` with the given
    /// discrete mass.
    pub fn smooth_bump(
        grid: &GridSpec,
        center: &[f64],
        radius: f64,
        mass: f64,
        diffusivity: Diffusivity,
    ) -> Result<Self> {
        let raw = sample(
            grid,
            |x| {
                let r2: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(a, xi)| (xi - center.get(a).copied().unwrap_or(0.0)).powi(2))
                    .sum::<f64>()
                    / (radius * radius);
                if r2 < 1.0 {
                    (-1.0 / (1.0 - r2)).exp()
                } else {
                    0.0
                }
            },
            0.0,
            diffusivity,
        )?;
        Self::normalized(raw, mass)
    }

    fn normalized(raw: Field, mass: f64) -> Result<Self> {
        let m = grid::quadrature(&raw, None)?;
        if m == 0.0 {
            return Err(HeatError::InvalidArgument(
                "support contains no grid node".into(),
            ));
        }
        Ok(InitialData::GridSamples(raw.scale(mass / m)))
    }

    /// Samples the data on `grid` at time zero.
    pub fn realize(&self, grid: &GridSpec, diffusivity: Diffusivity) -> Result<Field> {
        match self {
            InitialData::GridSamples(f) => {
                if f.grid() != grid {
                    return Err(HeatError::GridMismatch);
                }
                if f.diffusivity() != diffusivity {
                    return Err(HeatError::DiffusivityMismatch);
                }
                Ok(f.clone())
            }
            InitialData::Catalog { kind, t0 } => {
                if !kind.is_integrable() {
                    return Err(HeatError::NotIntegrable(
                        "travelling waves, blow-up and caloric polynomials cannot seed the solver",
                    ));
                }
                if !(*t0 > 0.0) {
                    return Err(HeatError::NonPositiveTime(*t0));
                }
                let t0 = *t0;
                let vals = crate::par::try_map_range(grid.len(), |i| {
                    let p = grid.node(i);
                    kind.evaluate(&p[..grid.dim()], t0, diffusivity)
                })?;
                Field::from_values(*grid, vals, 0.0, diffusivity)
            }
            InitialData::PointMasses(points) => {
                let sigma = point_mass_width(grid);
                let norm = (2.0 * PI * sigma * sigma).powf(-(grid.dim() as f64) / 2.0);
                sample(
                    grid,
                    |x| {
                        points
                            .iter()
                            .map(|p| {
                                let r2: f64 = x
                                    .iter()
                                    .enumerate()
                                    .map(|(a, xi)| {
                                        (xi - p.center.get(a).copied().unwrap_or(0.0)).powi(2)
                                    })
                                    .sum();
                                p.mass * norm * (-r2 / (2.0 * sigma * sigma)).exp()
                            })
                            .sum()
                    },
                    0.0,
                    diffusivity,
                )
            }
            InitialData::OneSidedExponential { rate } => {
                if grid.dim() != 1 {
                    return Err(HeatError::UnsupportedDimension(grid.dim()));
                }
                if !(*rate > 0.0) {
                    return Err(HeatError::InvalidArgument(format!(
                        "decay rate {rate} must be positive"
                    )));
                }
                sample(
                    grid,
                    |x| {
                        if x[0] >= 0.0 {
                            (-rate * x[0]).exp()
                        } else {
                            0.0
                        }
                    },
                    0.0,
                    diffusivity,
                )
            }
            InitialData::PowerTail { exponent, scale } => {
                if !(2.0 * exponent > grid.dim() as f64) {
                    return Err(HeatError::NotIntegrable("power tail needs 2a > N"));
                }
                sample(
                    grid,
                    |x| {
                        let r2: f64 = x.iter().map(|v| v * v).sum();
                        scale * (1.0 + r2).powf(-exponent)
                    },
                    0.0,
                    diffusivity,
                )
            }
        }
    }

    /// Estimated fraction of the data's own mass lying outside the box.
    fn off_box_fraction(&self, grid: &GridSpec, realized: &Field, diffusivity: Diffusivity) -> f64 {
        let l = grid.half_width();
        let gauss_escape = |center: &[f64], sigma: f64| -> f64 {
            (0..grid.dim())
                .map(|a| {
                    let c = center.get(a).copied().unwrap_or(0.0);
                    0.5 * erfc((l - c) / (sigma * 2f64.sqrt()))
                        + 0.5 * erfc((l + c) / (sigma * 2f64.sqrt()))
                })
                .sum()
        };
        match self {
            InitialData::GridSamples(_) => {
                let max = realized.max_abs();
                if max == 0.0 {
                    return 0.0;
                }
                let ring = realized
                    .values()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| grid.ring_depth(*i) == 0)
                    .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
                ring / max
            }
            InitialData::Catalog { kind, t0 } => {
                let a = diffusivity.value();
                match kind {
                    SpecialSolutionKind::Gaussian {
                        center, time_shift, ..
                    } => gauss_escape(center, (2.0 * (a * t0 + time_shift)).sqrt()),
                    _ => gauss_escape(&[], (2.0 * a * t0).sqrt()),
                }
            }
            InitialData::PointMasses(points) => {
                let sigma = point_mass_width(grid);
                let total: f64 = points.iter().map(|p| p.mass.abs()).sum();
                if total == 0.0 {
                    return 0.0;
                }
                points
                    .iter()
                    .map(|p| p.mass.abs() * gauss_escape(&p.center, sigma))
                    .sum::<f64>()
                    / total
            }
            InitialData::OneSidedExponential { rate } => (-rate * l).exp(),
            InitialData::PowerTail { exponent, .. } => {
                // mass outside the inscribed ball over the total mass
                let n = grid.dim() as f64;
                let outside = l.powf(n - 2.0 * exponent) / (2.0 * exponent - n);
                let total = 0.5 * beta(n / 2.0, exponent - n / 2.0);
                outside / total
            }
        }
    }
}

/// Width `σ0 = 2h` of the Gaussian standing in for a Dirac mass.
pub fn point_mass_width(grid: &GridSpec) -> f64 {
    2.0 * grid.spacing()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Method {
    Direct,
    #[default]
    Fft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum BoundaryKind {
    #[default]
    WholeSpace,
    HalfLineDirichlet,
    HalfLineNeumann,
}

/// Convolution solver bound to one grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solver {
    grid: GridSpec,
    method: Method,
    diffusivity: Diffusivity,
    tail_tol: f64,
}

impl Solver {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            grid,
            method: Method::Fft,
            diffusivity: Diffusivity::Unit,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }

    pub fn method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn diffusivity(mut self, diffusivity: Diffusivity) -> Self {
        self.diffusivity = diffusivity;
        self
    }

    pub fn tail_tol(mut self, tol: f64) -> Self {
        self.tail_tol = tol;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn get_method(&self) -> Method {
        self.method
    }

    pub fn get_diffusivity(&self) -> Diffusivity {
        self.diffusivity
    }

    pub fn get_tail_tol(&self) -> f64 {
        self.tail_tol
    }

    pub fn realize(&self, data: &InitialData) -> Result<Field> {
        data.realize(&self.grid, self.diffusivity)
    }

    /// `S_t u0` on the grid.
    pub fn evolve(&self, data: &InitialData, t: f64) -> Result<Field> {
        let u0 = self.realize(data)?;
        let data_escape = data.off_box_fraction(&self.grid, &u0, self.diffusivity);
        self.evolve_checked(&u0, t, data_escape)
    }

    /// `S_t` applied to a field already on the grid.
    pub fn evolve_field(&self, u0: &Field, t: f64) -> Result<Field> {
        self.evolve(&InitialData::GridSamples(u0.clone()), t)
    }

    fn evolve_checked(&self, u0: &Field, t: f64, data_escape: f64) -> Result<Field> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(HeatError::NonPositiveTime(t));
        }
        if self.method == Method::Fft && !self.grid.is_power_of_two() {
            return Err(HeatError::NotPowerOfTwo(self.grid.points_per_axis()));
        }
        let escaped = data_escape + kernel_escape(u0, t, self.diffusivity);
        if escaped > self.tail_tol {
            return Err(HeatError::TailEscape {
                escaped,
                tol: self.tail_tol,
            });
        }
        let taps = convolve::kernel_taps(&self.grid, t, self.diffusivity);
        let mut out = match self.method {
            Method::Direct => convolve::direct(&self.grid, u0.values(), &taps),
            Method::Fft => convolve::fft(&self.grid, u0.values(), &taps),
        };
        // The kernel is positive, so one-signed data stays one-signed; this
        // only removes FFT round-off of the opposite sign.
        if u0.values().iter().all(|v| *v >= 0.0) {
            out.iter_mut().for_each(|v| *v = v.max(0.0));
        } else if u0.values().iter().all(|v| *v <= 0.0) {
            out.iter_mut().for_each(|v| *v = v.min(0.0));
        }
        Field::from_values(self.grid, out, u0.time() + t, self.diffusivity)
    }

    /// Duhamel solution of `u_t = a Δu + f` with `n_nodes` midpoint nodes in time.
    pub fn evolve_forced<F>(
        &self,
        data: &InitialData,
        forcing: F,
        t: f64,
        n_nodes: usize,
    ) -> Result<Field>
    where
        F: Fn(&[f64], f64) -> f64 + Sync + Send,
    {
        if n_nodes == 0 {
            return Err(HeatError::InvalidArgument(
                "need at least one Duhamel node".into(),
            ));
        }
        let mut acc = self.evolve(data, t)?;
        let w = t / n_nodes as f64;
        for k in 0..n_nodes {
            let s = (k as f64 + 0.5) * w;
            let f = sample(&self.grid, |x| forcing(x, s), 0.0, self.diffusivity)?;
            if f.values().iter().all(|v| *v == 0.0) {
                continue;
            }
            let contrib = self.evolve_checked(&f, t - s, 0.0)?;
            acc = acc.combine(1.0, &contrib.with_time(acc.time()), w)?;
        }
        Ok(acc)
    }

    /// Solution of `u_t = a Δu + κ u` through the gauge `u = e^{κt} v`.
    pub fn evolve_reaction(&self, data: &InitialData, kappa: f64, t: f64) -> Result<Field> {
        Ok(self.evolve(data, t)?.scale((kappa * t).exp()))
    }

    /// Half-line problem on `(0, ∞)` solved by reflection.
    pub fn evolve_halfline(
        &self,
        data: &InitialData,
        boundary: BoundaryKind,
        t: f64,
    ) -> Result<HalfLineField> {
        let u0 = self.halfline_extension(data, boundary)?;
        Ok(HalfLineField {
            field: self.evolve_checked(&u0, t, 0.0)?,
            boundary,
        })
    }

    /// Odd (Dirichlet) or even (Neumann) extension of half-line data.
    pub fn halfline_extension(&self, data: &InitialData, boundary: BoundaryKind) -> Result<Field> {
        if self.grid.dim() != 1 {
            return Err(HeatError::UnsupportedDimension(self.grid.dim()));
        }
        let sign = match boundary {
            BoundaryKind::HalfLineDirichlet => -1.0,
            BoundaryKind::HalfLineNeumann => 1.0,
            BoundaryKind::WholeSpace => {
                return Err(HeatError::InvalidArgument(
                    "whole-space boundary on the half line".into(),
                ))
            }
        };
        let u0 = self.realize(data)?;
        let n = self.grid.points_per_axis();
        let half = n / 2;
        if let Some((node, &value)) = u0.values()[..half]
            .iter()
            .enumerate()
            .find(|(_, v)| **v != 0.0)
        {
            return Err(HeatError::DataNotSupportedInHalfLine { node, value });
        }
        let mut ext = u0.values().to_vec();
        for i in 0..half {
            ext[i] = sign * ext[n - 1 - i];
        }
        Field::from_values(self.grid, ext, u0.time(), self.diffusivity)
    }

    /// Representation-formula handle that can be evaluated anywhere.
    pub fn solution(&self, data: &InitialData) -> Result<Solution> {
        Ok(Solution {
            data: self.realize(data)?,
        })
    }
}

/// Union bound on the kernel mass leaving the box, averaged over |u0|.
fn kernel_escape(u0: &Field, t: f64, diffusivity: Diffusivity) -> f64 {
    let grid = u0.grid();
    let total: f64 = u0.values().iter().map(|v| v.abs()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let l = grid.half_width();
    let denom = (4.0 * diffusivity.value() * t).sqrt();
    let per_axis: Vec<f64> = grid
        .axis()
        .iter()
        .map(|&x| 0.5 * erfc((l - x) / denom) + 0.5 * erfc((l + x) / denom))
        .collect();
    let weighted = grid::indexed_sum(u0.values().len(), |i| {
        let idx = grid.multi_index(i);
        let esc: f64 = (0..grid.dim()).map(|a| per_axis[idx[a]]).sum();
        u0.values()[i].abs() * esc.min(1.0)
    });
    weighted / total
}

/// Evolves with default solver settings (diffusivity 1).
pub fn evolve(data: &InitialData, grid: &GridSpec, t: f64, method: Method) -> Result<Field> {
    Solver::new(*grid).method(method).evolve(data, t)
}

/// One-dimensional field on the symmetric grid, read on `x > 0` only.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfLineField {
    field: Field,
    boundary: BoundaryKind,
}

impl HalfLineField {
    /// The odd or even extension over the whole grid.
    pub fn extended(&self) -> &Field {
        &self.field
    }

    pub fn boundary(&self) -> BoundaryKind {
        self.boundary
    }

    pub fn time(&self) -> f64 {
        self.field.time()
    }

    fn half(&self) -> usize {
        self.field.grid().points_per_axis() / 2
    }

    /// Node coordinates and values with `x > 0`.
    pub fn positive_part(&self) -> (Vec<f64>, &[f64]) {
        let g = self.field.grid();
        let xs = (self.half()..g.points_per_axis())
            .map(|i| g.coord(i))
            .collect();
        (xs, &self.field.values()[self.half()..])
    }

    /// Value at `x = 0` interpolated from the two nearest nodes.
    pub fn boundary_value(&self) -> f64 {
        let v = self.field.values();
        0.5 * (v[self.half() - 1] + v[self.half()])
    }

    /// `∫_0^∞ u dx`.
    pub fn mass(&self) -> f64 {
        let (_, v) = self.positive_part();
        self.field.grid().spacing() * grid::compensated_sum(v.iter().copied())
    }

    /// `∫_0^∞ x u dx`.
    pub fn first_moment(&self) -> f64 {
        let (xs, v) = self.positive_part();
        self.field.grid().spacing() * grid::compensated_sum(xs.iter().zip(v).map(|(x, u)| x * u))
    }

    /// Norm of `u - reference` over `x > 0` for `L1`, `WeightedL1` or sup.
    pub fn distance_to<F>(&self, reference: F, kind: NormKind) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        let (xs, v) = self.positive_part();
        let h = self.field.grid().spacing();
        let diffs = xs.iter().zip(v).map(|(x, u)| (*x, u - reference(*x)));
        match kind {
            NormKind::Lp(p) if p.is_infinite() => Ok(diffs.fold(0.0, |m, (_, d)| m.max(d.abs()))),
            NormKind::L1 => Ok(h * grid::compensated_sum(diffs.map(|(_, d)| d.abs()))),
            NormKind::WeightedL1 => Ok(h * grid::compensated_sum(diffs.map(|(x, d)| x * d.abs()))),
            other => Err(HeatError::InvalidArgument(format!(
                "norm {} is not available on the half line",
                other.label()
            ))),
        }
    }
}

/// A space-time solution that can be evaluated at arbitrary points.
pub trait SpaceTime: Sync {
    fn dim(&self) -> usize;
    /// Half-width of the box on which the solution is known.
    fn source_half_width(&self) -> f64;
    fn eval(&self, x: &[f64], t: f64) -> Result<f64>;
    fn eval_grid(&self, grid: &GridSpec, t: f64) -> Result<Field>;
}

/// Gaussian representation formula over sampled initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    data: Field,
}

impl Solution {
    pub fn from_field(data: Field) -> Self {
        Self { data }
    }

    pub fn data(&self) -> &Field {
        &self.data
    }

    fn weights(&self, y: f64, t: f64) -> Vec<f64> {
        let g = self.data.grid();
        let h = g.spacing();
        let d = self.data.diffusivity();
        g.axis()
            .iter()
            .map(|x| h * gaussian_1d(y - x, t, d))
            .collect()
    }
}

impl SpaceTime for Solution {
    fn dim(&self) -> usize {
        self.data.grid().dim()
    }

    fn source_half_width(&self) -> f64 {
        self.data.grid().half_width()
    }

    fn eval(&self, x: &[f64], t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(HeatError::NonPositiveTime(t));
        }
        if x.len() != self.dim() {
            return Err(HeatError::UnsupportedDimension(x.len()));
        }
        let mut vals = self.data.values().to_vec();
        let mut shape = vec![self.data.grid().points_per_axis(); self.dim()];
        for (a, &xa) in x.iter().enumerate() {
            let (v, s) = convolve::apply_axis_matrix(&vals, &shape, a, &[self.weights(xa, t)]);
            vals = v;
            shape = s;
        }
        Ok(vals[0])
    }

    fn eval_grid(&self, grid: &GridSpec, t: f64) -> Result<Field> {
        if !(t > 0.0) {
            return Err(HeatError::NonPositiveTime(t));
        }
        if grid.dim() != self.dim() {
            return Err(HeatError::GridMismatch);
        }
        let matrix: Vec<Vec<f64>> = grid.axis().iter().map(|&y| self.weights(y, t)).collect();
        let mut vals = self.data.values().to_vec();
        let mut shape = vec![self.data.grid().points_per_axis(); self.dim()];
        for a in 0..self.dim() {
            let (v, s) = convolve::apply_axis_matrix(&vals, &shape, a, &matrix);
            vals = v;
            shape = s;
        }
        Field::from_values(*grid, vals, self.data.time() + t, self.data.diffusivity())
    }
}

/// `(T_k u)(x, t) = k^N u(k x, k² t)`.
pub struct Rescaled<'a> {
    inner: &'a dyn SpaceTime,
    k: f64,
}

/// Applies the mass-preserving scaling transform.
pub fn rescale(u: &dyn SpaceTime, k: f64) -> Result<Rescaled<'_>> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(HeatError::InvalidArgument(format!(
            "scaling factor {k} must be positive"
        )));
    }
    Ok(Rescaled { inner: u, k })
}

impl Rescaled<'_> {
    pub fn factor(&self) -> f64 {
        self.k
    }
}

impl SpaceTime for Rescaled<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn source_half_width(&self) -> f64 {
        self.inner.source_half_width() / self.k
    }

    fn eval(&self, x: &[f64], t: f64) -> Result<f64> {
        let kx: Vec<f64> = x.iter().map(|v| self.k * v).collect();
        let lim = self.inner.source_half_width();
        if let Some(bad) = kx.iter().find(|v| v.abs() > lim) {
            return Err(HeatError::RescaledArgumentOffGrid(*bad));
        }
        Ok(self.k.powi(self.dim() as i32) * self.inner.eval(&kx, self.k * self.k * t)?)
    }

    fn eval_grid(&self, grid: &GridSpec, t: f64) -> Result<Field> {
        let reach = self.k * grid.half_width();
        if reach > self.inner.source_half_width() * (1.0 + 1e-12) {
            return Err(HeatError::RescaledArgumentOffGrid(reach));
        }
        let source = self
            .inner
            .eval_grid(&grid.scaled(self.k)?, self.k * self.k * t)?;
        let kn = self.k.powi(self.dim() as i32);
        let vals = source.values().iter().map(|v| kn * v).collect();
        Field::from_values(*grid, vals, t, source.diffusivity())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, norm, quadrature};
    use crate::kernels::gaussian;

    fn sup_diff(a: &Field, b: &Field) -> f64 {
        a.sub(b).unwrap().max_abs()
    }

    fn gauss_catalog(mass: f64, center: f64, t0: f64) -> InitialData {
        InitialData::Catalog {
            kind: SpecialSolutionKind::gaussian(mass, &[center]),
            t0,
        }
    }

    #[test]
    fn catalog_gaussian_semigroup_identity() {
        let g = make_grid(1, 40.0, 4096).unwrap();
        for method in [Method::Fft, Method::Direct] {
            let u = evolve(&gauss_catalog(1.0, 0.0, 1.0), &g, 3.0, method).unwrap();
            let exact = sample(
                &g,
                |x| gaussian(x, 4.0, 1.0, &[0.0], Diffusivity::Unit).unwrap(),
                3.0,
                Diffusivity::Unit,
            )
            .unwrap();
            assert!(sup_diff(&u, &exact) < 1e-10, "{method:?}");
            assert_eq!(u.time(), 3.0);
        }
    }

    #[test]
    fn point_mass_approximates_fundamental_solution() {
        let g = make_grid(1, 40.0, 4096).unwrap();
        let u = evolve(
            &InitialData::PointMasses(vec![PointMass::new(&[0.0], 1.0)]),
            &g,
            1.0,
            Method::Fft,
        )
        .unwrap();
        let exact = sample(
            &g,
            |x| gaussian(x, 1.0, 1.0, &[0.0], Diffusivity::Unit).unwrap(),
            1.0,
            Diffusivity::Unit,
        )
        .unwrap();
        let s0 = point_mass_width(&g);
        assert!(sup_diff(&u, &exact) < s0 * s0);
    }

    #[test]
    fn one_sided_exponential_tail() {
        let g = make_grid(1, 40.0, 4096).unwrap();
        let u = evolve(
            &InitialData::OneSidedExponential { rate: 1.0 },
            &g,
            1.0,
            Method::Fft,
        )
        .unwrap();
        // x = 20 is not a node; interpolate the log linearly between neighbours
        let i = g.axis().iter().position(|x| *x > 20.0).unwrap();
        let (x0, x1) = (g.coord(i - 1), g.coord(i));
        let (l0, l1) = (u.values()[i - 1].ln(), u.values()[i].ln());
        let l20 = l0 + (l1 - l0) * (20.0 - x0) / (x1 - x0);
        assert!(((20.0 + l20).exp() - std::f64::consts::E).abs() < 1e-3);
    }

    #[test]
    fn errors_on_bad_inputs() {
        let g = make_grid(1, 20.0, 128).unwrap();
        let d = gauss_catalog(1.0, 0.0, 1.0);
        assert_eq!(
            evolve(&d, &g, 0.0, Method::Fft),
            Err(HeatError::NonPositiveTime(0.0))
        );
        let g_odd = make_grid(1, 20.0, 96).unwrap();
        assert_eq!(
            evolve(&d, &g_odd, 1.0, Method::Fft),
            Err(HeatError::NotPowerOfTwo(96))
        );
        assert!(evolve(&d, &g_odd, 1.0, Method::Direct).is_ok());
        assert!(matches!(
            evolve(&d, &g, 100.0, Method::Fft),
            Err(HeatError::TailEscape { .. })
        ));
        let tw = InitialData::Catalog {
            kind: SpecialSolutionKind::TravellingWave1D {
                amplitude: 1.0,
                speed: 1.0,
            },
            t0: 1.0,
        };
        assert!(matches!(
            evolve(&tw, &g, 1.0, Method::Fft),
            Err(HeatError::NotIntegrable(_))
        ));
        let cauchy = InitialData::PowerTail {
            exponent: 1.0,
            scale: 1.0,
        };
        assert!(matches!(
            evolve(&cauchy, &g, 1.0, Method::Fft),
            Err(HeatError::TailEscape { .. })
        ));
        let bad = InitialData::PowerTail {
            exponent: 0.4,
            scale: 1.0,
        };
        assert!(matches!(
            evolve(&bad, &g, 1.0, Method::Fft),
            Err(HeatError::NotIntegrable(_))
        ));
    }

    #[test]
    fn forcing_accumulates_mass() {
        let g = make_grid(1, 40.0, 2048).unwrap();
        let solver = Solver::new(g);
        let f = |x: &[f64], s: f64| {
            if s <= 1.0 {
                gaussian(x, 1.0, 1.0, &[0.0], Diffusivity::Unit).unwrap()
            } else {
                0.0
            }
        };
        let zero = InitialData::GridSamples(Field::zeros(g, 0.0, Diffusivity::Unit));
        let u = solver
            .evolve_forced(&zero, f, 2.0, DEFAULT_DUHAMEL_NODES)
            .unwrap();
        assert!((quadrature(&u, None).unwrap() - 1.0).abs() < 1e-6);
        let g1 = gauss_catalog(1.0, 0.0, 1.0);
        let u = solver
            .evolve_forced(&g1, f, 2.0, DEFAULT_DUHAMEL_NODES)
            .unwrap();
        assert!((quadrature(&u, None).unwrap() - 2.0).abs() < 1e-6);
        let unforced = solver.evolve_forced(&g1, |_, _| 0.0, 2.0, 8).unwrap();
        assert_eq!(unforced, solver.evolve(&g1, 2.0).unwrap());
    }

    #[test]
    fn reaction_gauge() {
        let g = make_grid(1, 40.0, 4096).unwrap();
        let solver = Solver::new(g);
        let d = gauss_catalog(1.0, 0.0, 1.0);
        assert_eq!(
            solver.evolve_reaction(&d, 0.0, 1.0).unwrap(),
            solver.evolve(&d, 1.0).unwrap()
        );
        let u = solver.evolve_reaction(&d, 1.0, 1.0).unwrap();
        let mid = u.values()[2047].max(u.values()[2048]);
        // nodes at ±h/2; compare with e G_2(h/2)
        let expect = std::f64::consts::E
            * gaussian(&[g.coord(2048)], 2.0, 1.0, &[0.0], Diffusivity::Unit).unwrap();
        assert!((mid - expect).abs() < 1e-12);
        assert!((std::f64::consts::E * (8.0 * PI).powf(-0.5) - 0.54222).abs() < 1e-5);
        let m = quadrature(&u, None).unwrap();
        assert!((m - std::f64::consts::E).abs() < 1e-10);
    }

    #[test]
    fn halfline_reflections() {
        let g = make_grid(1, 40.0, 4096).unwrap();
        let solver = Solver::new(g);
        let bump = InitialData::smooth_bump(&g, &[1.0], 0.5, 1.0, Diffusivity::Unit).unwrap();
        let d = solver
            .evolve_halfline(&bump, BoundaryKind::HalfLineDirichlet, 2.0)
            .unwrap();
        assert!(d.boundary_value().abs() <= 1e-12);
        let m0 = solver
            .evolve_halfline(&bump, BoundaryKind::HalfLineNeumann, 2.0)
            .unwrap()
            .mass();
        assert!((m0 - 1.0).abs() < 1e-8);
        let n1: Vec<f64> = [1.0, 2.0, 4.0]
            .iter()
            .map(|&t| {
                solver
                    .evolve_halfline(&bump, BoundaryKind::HalfLineDirichlet, t)
                    .unwrap()
                    .first_moment()
            })
            .collect();
        assert!((n1[0] - n1[1]).abs() < 1e-7 && (n1[0] - n1[2]).abs() < 1e-7);
        let spill = InitialData::Catalog {
            kind: SpecialSolutionKind::gaussian(1.0, &[1.0]),
            t0: 0.1,
        };
        assert!(matches!(
            solver.evolve_halfline(&spill, BoundaryKind::HalfLineDirichlet, 1.0),
            Err(HeatError::DataNotSupportedInHalfLine { .. })
        ));
    }

    #[test]
    fn rescaling() {
        let g = make_grid(1, 40.0, 1024).unwrap();
        let solver = Solver::new(g);
        let box_data = InitialData::box_indicator(&g, &[0.5], 1.0, 1.0, Diffusivity::Unit).unwrap();
        let u = solver.solution(&box_data).unwrap();
        let target = make_grid(1, 5.0, 512).unwrap();
        let base = u.eval_grid(&target, 1.0).unwrap();
        let same = rescale(&u, 1.0).unwrap().eval_grid(&target, 1.0).unwrap();
        assert!(sup_diff(&base, &same) < 1e-15);
        for k in [0.5f64, 2.0, 4.0] {
            let big = make_grid(1, 40.0 / k.max(1.0), 2048).unwrap();
            let r = rescale(&u, k).unwrap();
            let m = quadrature(&r.eval_grid(&big, 1.0).unwrap(), None).unwrap();
            let m_ref =
                quadrature(&u.eval_grid(&big.scaled(k).unwrap(), k * k).unwrap(), None).unwrap();
            assert!((m - m_ref).abs() < 1e-12);
            if k >= 1.0 {
                assert!((m - 1.0).abs() < 1e-8, "k={k} m={m}");
            }
        }
        assert!(matches!(
            rescale(&u, 16.0).unwrap().eval_grid(&target, 1.0),
            Err(HeatError::RescaledArgumentOffGrid(_))
        ));
        // fixed point: the fundamental solution is scale invariant
        let fund = Solution::from_field(
            sample(
                &g,
                |x| gaussian(x, 0.5, 1.0, &[0.0], Diffusivity::Unit).unwrap(),
                0.0,
                Diffusivity::Unit,
            )
            .unwrap(),
        );
        let k = 2.0;
        let r = rescale(&fund, k).unwrap();
        let x = [0.7];
        let lhs = r.eval(&x, 1.0).unwrap();
        // T_k G_{t+1/2} = G_{t + 1/(2k²)}
        let rhs = gaussian(&x, 1.0 + 0.5 / (k * k), 1.0, &[0.0], Diffusivity::Unit).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn point_eval_matches_grid_evolution() {
        let g = make_grid(2, 8.0, 32).unwrap();
        let solver = Solver::new(g).tail_tol(1e-3);
        let d = InitialData::PointMasses(vec![
            PointMass::new(&[1.0, -0.5], 1.0),
            PointMass::new(&[-1.0, 0.0], -0.3),
        ]);
        let u = solver.evolve(&d, 0.5).unwrap();
        let s = solver.solution(&d).unwrap();
        let i = 300;
        let p = g.node(i);
        assert!((s.eval(&p[..2], 0.5).unwrap() - u.values()[i]).abs() < 1e-13);
        let on_grid = s.eval_grid(&g, 0.5).unwrap();
        assert!(sup_diff(&on_grid, &u) < 1e-13);
    }

    #[test]
    fn contraction_in_lp() {
        let g = make_grid(1, 30.0, 1024).unwrap();
        let d = InitialData::box_indicator(&g, &[0.0], 2.0, 1.0, Diffusivity::Unit).unwrap();
        let u0 = d.realize(&g, Diffusivity::Unit).unwrap();
        let u = evolve(&d, &g, 1.0, Method::Fft).unwrap();
        for k in [NormKind::L1, NormKind::L2, NormKind::SUP] {
            assert!(norm(&u, k).unwrap() <= norm(&u0, k).unwrap() * (1.0 + 1e-12));
        }
    }
}
