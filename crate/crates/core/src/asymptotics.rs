//! Renormalized attractor errors, decay rates, correctors, and the
//! qualitative experiments (counterexample, tails, fronts, mixing, scaling).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{HeatError, Result};
use crate::grid::{self, norm, norm_values, Diffusivity, Field, GridSpec, NormKind};
use crate::kernels::{gaussian, gaussian_derivative, MultiIndex, MAX_ORDER};
use crate::regression::{fit_line, LineFit};
use crate::semigroup::{
    rescale, BoundaryKind, InitialData, PointMass, Solution, Solver, SpaceTime,
};

/// Relative mass discrepancy tolerated between data and attractor.
pub const MASS_MISMATCH_TOL: f64 = 1e-6;

/// Absolute mass discrepancy tolerated by the mixing experiment.
pub const MIXING_MASS_TOL: f64 = 1e-8;

/// Moments `∫ u0 x^α dx` for every `|α| <= k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    dim: usize,
    order: usize,
    entries: Vec<(MultiIndex, f64)>,
}

impl MomentTable {
    pub fn from_field(field: &Field, k: usize) -> Result<Self> {
        if k > MAX_ORDER {
            return Err(HeatError::OrderTooHigh {
                order: k,
                max: MAX_ORDER,
            });
        }
        let dim = field.grid().dim();
        let entries = MultiIndex::all_up_to(dim, k)
            .into_iter()
            .map(|alpha| {
                let w = |x: &[f64]| alpha.monomial(x);
                Ok((alpha, grid::quadrature(field, Some(&w))?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim,
            order: k,
            entries,
        })
    }

    /// Builds a table from explicit entries; every `|α| <= k` must be present.
    pub fn from_entries(dim: usize, k: usize, entries: &[(MultiIndex, f64)]) -> Result<Self> {
        if k > MAX_ORDER {
            return Err(HeatError::OrderTooHigh {
                order: k,
                max: MAX_ORDER,
            });
        }
        let map: BTreeMap<MultiIndex, f64> = entries.iter().cloned().collect();
        let all = MultiIndex::all_up_to(dim, k);
        let entries = all
            .into_iter()
            .map(|a| {
                map.get(&a)
                    .map(|v| (a, *v))
                    .ok_or_else(|| HeatError::InvalidArgument(format!("moment {a} missing")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim,
            order: k,
            entries,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn entries(&self) -> &[(MultiIndex, f64)] {
        &self.entries
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<f64> {
        self.entries
            .iter()
            .find(|(a, _)| a == alpha)
            .map(|(_, v)| *v)
    }

    pub fn mass(&self) -> f64 {
        self.entries[0].1
    }

    /// Table truncated to order `k`.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k > self.order {
            return Err(HeatError::OrderTooHigh {
                order: k,
                max: self.order,
            });
        }
        Ok(Self {
            dim: self.dim,
            order: k,
            entries: self
                .entries
                .iter()
                .filter(|(a, _)| a.order() <= k)
                .cloned()
                .collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AttractorSpec {
    Gaussian {
        mass: f64,
    },
    GaussianTimeShift {
        mass: f64,
        t0: f64,
    },
    GaussianCentered {
        mass: f64,
        center: Vec<f64>,
    },
    /// `strength · (-∂_x G_t)`, one dimension.
    Dipole {
        strength: f64,
    },
    Corrector {
        order: usize,
        moments: MomentTable,
    },
    /// Another solution with the given mass (mixing experiments).
    OtherSolution {
        mass: f64,
    },
}

impl AttractorSpec {
    pub fn mass(&self) -> f64 {
        match self {
            AttractorSpec::Gaussian { mass }
            | AttractorSpec::GaussianTimeShift { mass, .. }
            | AttractorSpec::GaussianCentered { mass, .. }
            | AttractorSpec::OtherSolution { mass } => *mass,
            AttractorSpec::Dipole { .. } => 0.0,
            AttractorSpec::Corrector { moments, .. } => moments.mass(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            AttractorSpec::Gaussian { mass } => format!("gaussian(M={mass})"),
            AttractorSpec::GaussianTimeShift { mass, t0 } => format!("gaussian(M={mass};t0={t0})"),
            AttractorSpec::GaussianCentered { mass, center } => {
                let c: Vec<String> = center.iter().map(|v| v.to_string()).collect();
                format!("gaussian(M={mass};xc={})", c.join(";"))
            }
            AttractorSpec::Dipole { strength } => format!("dipole(s={strength})"),
            AttractorSpec::Corrector { order, .. } => format!("corrector(k={order})"),
            AttractorSpec::OtherSolution { mass } => format!("solution(M={mass})"),
        }
    }

    /// Value at `(x, t)` for the flow `u_t = a Δu`.
    pub fn evaluate(&self, x: &[f64], t: f64, diffusivity: Diffusivity) -> Result<f64> {
        match self {
            AttractorSpec::Gaussian { mass } => gaussian(x, t, *mass, &[], diffusivity),
            AttractorSpec::GaussianTimeShift { mass, t0 } => {
                gaussian(x, t + t0, *mass, &[], diffusivity)
            }
            AttractorSpec::GaussianCentered { mass, center } => {
                gaussian(x, t, *mass, center, diffusivity)
            }
            AttractorSpec::Dipole { strength } => {
                if x.len() != 1 {
                    return Err(HeatError::UnsupportedDimension(x.len()));
                }
                Ok(-strength * gaussian_derivative(x, t, &MultiIndex::unit(1, 0), diffusivity)?)
            }
            AttractorSpec::Corrector { order, moments } => {
                corrector_attractor(moments, *order, x, t, diffusivity)
            }
            AttractorSpec::OtherSolution { .. } => Err(HeatError::InvalidArgument(
                "a solution attractor has no closed form".into(),
            )),
        }
    }

    pub fn sample(&self, grid: &GridSpec, t: f64, diffusivity: Diffusivity) -> Result<Field> {
        let vals = crate::par::try_map_range(grid.len(), |i| {
            let p = grid.node(i);
            self.evaluate(&p[..grid.dim()], t, diffusivity)
        })?;
        Field::from_values(*grid, vals, t, diffusivity)
    }
}

/// Truncated moment expansion `Σ_{|α|<=k} (-1)^{|α|}/α! m_α D^α G_t(x)`.
pub fn corrector_attractor(
    moments: &MomentTable,
    k: usize,
    x: &[f64],
    t: f64,
    diffusivity: Diffusivity,
) -> Result<f64> {
    if k > moments.order() {
        return Err(HeatError::OrderTooHigh {
            order: k,
            max: moments.order(),
        });
    }
    let mut acc = grid::CompensatedSum::default();
    for (alpha, m) in moments.entries().iter().filter(|(a, _)| a.order() <= k) {
        if *m == 0.0 {
            continue;
        }
        if alpha.order() == 0 {
            acc.add(gaussian(x, t, *m, &[], diffusivity)?);
            continue;
        }
        let sign = if alpha.order() % 2 == 0 { 1.0 } else { -1.0 };
        acc.add(sign / alpha.factorial() * m * gaussian_derivative(x, t, alpha, diffusivity)?);
    }
    Ok(acc.value())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSeries {
    pub times: Vec<f64>,
    pub raw: Vec<f64>,
    pub renormalized: Vec<f64>,
    pub norm_kind: NormKind,
    pub attractor: AttractorSpec,
}

impl ErrorSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Same raw errors renormalized by `t^power` instead.
    pub fn with_renormalization(&self, power: f64) -> Self {
        let mut s = self.clone();
        s.renormalized = self
            .times
            .iter()
            .zip(&self.raw)
            .map(|(t, e)| e * t.powf(power))
            .collect();
        s
    }
}

/// Exponent of `t` that turns a raw error into a renormalized one.
pub fn renormalization_power(kind: NormKind, dim: usize, boundary: BoundaryKind) -> f64 {
    let n = dim as f64;
    match (boundary, kind) {
        (BoundaryKind::WholeSpace, NormKind::Lp(p)) if p.is_infinite() => n / 2.0,
        (BoundaryKind::WholeSpace, NormKind::Lp(p)) => n * (p - 1.0) / (2.0 * p),
        (BoundaryKind::WholeSpace, _) => 0.0,
        (_, NormKind::Lp(p)) if p.is_infinite() => 0.5,
        _ => 0.0,
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if let Some(t) = times.iter().find(|t| !(**t > 0.0)) {
        return Err(HeatError::NonPositiveTime(*t));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HeatError::InvalidArgument(
            "times must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn check_mass(expected: f64, found: f64, scale: f64, tol: f64) -> Result<()> {
    if (expected - found).abs() > tol * scale.max(f64::MIN_POSITIVE) {
        return Err(HeatError::MassMismatch { expected, found });
    }
    Ok(())
}

/// Errors `‖u(t) - attractor(t)‖` along `times`, with `u` evolved by `solver`.
pub fn attractor_error(
    solver: &Solver,
    data: &InitialData,
    attractor: &AttractorSpec,
    kind: NormKind,
    times: &[f64],
    boundary: BoundaryKind,
) -> Result<ErrorSeries> {
    check_times(times)?;
    let grid = *solver.grid();
    let diff = solver.get_diffusivity();
    let u0 = match boundary {
        BoundaryKind::WholeSpace => solver.realize(data)?,
        _ => solver.halfline_extension(data, boundary)?,
    };
    let m0 = grid::quadrature(&u0, None)?;
    let scale = norm(&u0, NormKind::L1)?;
    check_mass(attractor.mass(), m0, scale, MASS_MISMATCH_TOL)?;
    let power = renormalization_power(kind, grid.dim(), boundary);
    let mut raw = Vec::with_capacity(times.len());
    for &t in times {
        let e = match boundary {
            BoundaryKind::WholeSpace => {
                let u = solver.evolve(data, t)?;
                let a = attractor.sample(&grid, t, diff)?;
                norm(&u.sub(&a.with_time(u.time()))?, kind)?
            }
            _ => {
                let u = solver.evolve_halfline(data, boundary, t)?;
                u.distance_to(
                    |x| attractor.evaluate(&[x], t, diff).unwrap_or(f64::NAN),
                    kind,
                )?
            }
        };
        if !e.is_finite() {
            return Err(HeatError::NonFiniteSample { node: 0, value: e });
        }
        raw.push(e);
    }
    let renormalized = times
        .iter()
        .zip(&raw)
        .map(|(t, e)| e * t.powf(power))
        .collect();
    Ok(ErrorSeries {
        times: times.to_vec(),
        raw,
        renormalized,
        norm_kind: kind,
        attractor: attractor.clone(),
    })
}

pub type RateFit = LineFit;

/// Least-squares slope of `log(renormalized)` against `log t`.
///
/// Exact zeros are dropped with a warning; a window keeps `lo <= t <= hi`.
pub fn fit_rate(series: &ErrorSeries, window: Option<(f64, f64)>) -> Result<RateFit> {
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut zeros = 0;
    for (t, e) in series.times.iter().zip(&series.renormalized) {
        if *t < lo || *t > hi {
            continue;
        }
        if *e > 0.0 {
            xs.push(t.ln());
            ys.push(e.ln());
        } else {
            zeros += 1;
        }
    }
    if zeros > 0 {
        warn!("dropping {zeros} zero error entries from the rate fit");
        if xs.len() < 3 {
            return Err(HeatError::ZeroErrorEntry);
        }
    }
    fit_line(&xs, &ys)
}

/// `‖u(t) - v(t)‖_1` for two data of equal mass.
pub fn mixing_error(
    solver: &Solver,
    u: &InitialData,
    v: &InitialData,
    times: &[f64],
) -> Result<ErrorSeries> {
    check_times(times)?;
    let mu = grid::quadrature(&solver.realize(u)?, None)?;
    let mv = grid::quadrature(&solver.realize(v)?, None)?;
    if (mu - mv).abs() > MIXING_MASS_TOL {
        return Err(HeatError::MassMismatch {
            expected: mu,
            found: mv,
        });
    }
    let raw = times
        .iter()
        .map(|&t| {
            let a = solver.evolve(u, t)?;
            let b = solver.evolve(v, t)?;
            norm(&a.sub(&b)?, NormKind::L1)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorSeries {
        times: times.to_vec(),
        renormalized: raw.clone(),
        raw,
        norm_kind: NormKind::L1,
        attractor: AttractorSpec::OtherSolution { mass: mv },
    })
}

/// Point-mass data for which no decay rate `φ` can hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub dim: usize,
    pub masses: Vec<f64>,
    pub radii: Vec<f64>,
    pub witness_times: Vec<f64>,
    /// `(4π t_n)^{N/2} |u(0,t_n) - G_{t_n}(0)|` in closed form.
    pub witness_lhs: Vec<f64>,
    /// `n φ(t_n)`.
    pub witness_rhs: Vec<f64>,
}

impl Counterexample {
    pub fn holds(&self) -> bool {
        self.witness_lhs
            .iter()
            .zip(&self.witness_rhs)
            .all(|(l, r)| l >= r)
    }

    /// Total mass moved away from the origin.
    pub fn displaced_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// The data as point masses; the `n`-th one sits at `r_n e_1`.
    pub fn data(&self) -> InitialData {
        let mut points = vec![PointMass::new(
            &vec![0.0; self.dim],
            1.0 - self.displaced_mass(),
        )];
        for (m, r) in self.masses.iter().zip(&self.radii) {
            let mut c = vec![0.0; self.dim];
            c[0] = *r;
            points.push(PointMass::new(&c, *m));
        }
        InitialData::PointMasses(points)
    }

    /// Exact solution from the point masses, as a finite Gaussian sum.
    pub fn solution_at(&self, x: &[f64], t: f64) -> Result<f64> {
        let mut acc = (1.0 - self.displaced_mass()) * gaussian(x, t, 1.0, &[], Diffusivity::Unit)?;
        for (m, r) in self.masses.iter().zip(&self.radii) {
            let mut c = vec![0.0; self.dim];
            c[0] = *r;
            acc += m * gaussian(x, t, 1.0, &c, Diffusivity::Unit)?;
        }
        Ok(acc)
    }
}

/// Relative margin on `r_n` beyond `2 sqrt(t_n ln 2)`.
pub const COUNTEREXAMPLE_MARGIN: f64 = 0.1;

const MAX_COUNTEREXAMPLE_TERMS: usize = 6;
const MAX_SEARCH_EXPONENT: i32 = 200;

/// Builds the construction for the rate `phi` with `n_terms` point masses.
pub fn build_counterexample<F>(phi: F, n_terms: usize, dim: usize) -> Result<Counterexample>
where
    F: Fn(f64) -> f64,
{
    if n_terms == 0 || n_terms > MAX_COUNTEREXAMPLE_TERMS {
        return Err(HeatError::InvalidArgument(format!(
            "n_terms must be in 1..={MAX_COUNTEREXAMPLE_TERMS}, got {n_terms}"
        )));
    }
    if !(1..=3).contains(&dim) {
        return Err(HeatError::UnsupportedDimension(dim));
    }
    let mut masses = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    let mut radii = Vec::new();
    let mut j = 0i32;
    for n in 1..=n_terms {
        let m = 0.5f64.powi(n as i32);
        let target = m / (2.0 * n as f64);
        let floor = times.last().map_or(0.0, |t| 4.0 * t);
        let t_n = loop {
            if j > MAX_SEARCH_EXPONENT {
                return Err(HeatError::RateNotDecreasing(2f64.powi(j)));
            }
            let t = 2f64.powi(j);
            let (p, q) = (phi(t), phi(2.0 * t));
            if !(p > 0.0) || !(q < p) {
                return Err(HeatError::RateNotDecreasing(t));
            }
            if t >= floor && p <= target {
                break t;
            }
            j += 1;
        };
        masses.push(m);
        times.push(t_n);
        radii.push(2.0 * (t_n * 2f64.ln()).sqrt() * (1.0 + COUNTEREXAMPLE_MARGIN));
    }
    let witness_lhs = times
        .iter()
        .map(|&t| {
            grid::compensated_sum(
                masses
                    .iter()
                    .zip(&radii)
                    .map(|(m, r)| m * (1.0 - (-r * r / (4.0 * t)).exp())),
            )
        })
        .collect();
    let witness_rhs = times
        .iter()
        .enumerate()
        .map(|(i, &t)| (i + 1) as f64 * phi(t))
        .collect();
    Ok(Counterexample {
        dim,
        masses,
        radii,
        witness_times: times,
        witness_lhs,
        witness_rhs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSample {
    pub radius: f64,
    /// `-log(u/M)`.
    pub neg_log: f64,
    /// `-log(u/M) / |x|²`.
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailProfile {
    pub time: f64,
    pub samples: Vec<TailSample>,
    /// Largest amount by which a sample leaves the bracket (0 if none).
    pub max_bracket_violation: f64,
    /// `sup |ratio - 1/(4t)|` on the annulus.
    pub max_ratio_deviation: f64,
}

impl TailProfile {
    pub fn in_bracket(&self) -> bool {
        self.max_bracket_violation == 0.0
    }
}

/// Tail of a solution whose data are supported in the ball `B_R(center)`.
///
/// Samples nodes with `r_min <= |x| <= r_max`; the evolution time is the
/// field's own time (scaled by the diffusivity).
pub fn tail_profile(
    field: &Field,
    mass: f64,
    center: &[f64],
    support_radius: f64,
    r_min: f64,
    r_max: f64,
) -> Result<TailProfile> {
    if !(mass > 0.0) {
        return Err(HeatError::InvalidArgument(format!(
            "tail mass must be positive, got {mass}"
        )));
    }
    let grid = field.grid();
    let dim = grid.dim();
    let t = field.diffusivity().value() * field.time();
    if !(t > 0.0) {
        return Err(HeatError::NonPositiveTime(field.time()));
    }
    let base = 0.5 * dim as f64 * (4.0 * PI * t).ln();
    let mut samples = Vec::new();
    for i in 0..grid.len() {
        let p = grid.node(i);
        let x = &p[..dim];
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r < r_min || r > r_max {
            continue;
        }
        let u = field.values()[i];
        if !(u > 0.0) {
            return Err(HeatError::NonPositiveField(r));
        }
        let d = x
            .iter()
            .enumerate()
            .map(|(a, v)| (v - center.get(a).copied().unwrap_or(0.0)).powi(2))
            .sum::<f64>()
            .sqrt();
        let neg_log = -(u / mass).ln();
        let lower = base + (d - support_radius).max(0.0).powi(2) / (4.0 * t);
        let upper = base + (d + support_radius).powi(2) / (4.0 * t);
        samples.push(TailSample {
            radius: r,
            neg_log,
            ratio: neg_log / (r * r),
            lower,
            upper,
        });
    }
    let max_bracket_violation = samples
        .iter()
        .map(|s| (s.lower - s.neg_log).max(s.neg_log - s.upper).max(0.0))
        .fold(0.0, f64::max);
    let max_ratio_deviation = samples
        .iter()
        .map(|s| (s.ratio - 0.25 / t).abs())
        .fold(0.0, f64::max);
    Ok(TailProfile {
        time: field.time(),
        samples,
        max_bracket_violation,
        max_ratio_deviation,
    })
}

/// Fit of `-log u` against `x` over `x_min <= x <= x_max` (one dimension).
pub fn tail_log_slope(field: &Field, x_min: f64, x_max: f64) -> Result<LineFit> {
    let grid = field.grid();
    if grid.dim() != 1 {
        return Err(HeatError::UnsupportedDimension(grid.dim()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, &u) in field.values().iter().enumerate() {
        let x = grid.coord(i);
        if x < x_min || x > x_max {
            continue;
        }
        if !(u > 0.0) {
            return Err(HeatError::NonPositiveField(x));
        }
        xs.push(x);
        ys.push(-u.ln());
    }
    fit_line(&xs, &ys)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontPoint {
    pub t: f64,
    pub position: f64,
    /// Closed-form crossing `h/2 + 2 a t log(1/ε) / h`.
    pub predicted: f64,
}

/// Zero crossing of the solution from `δ_0 - ε δ_h` (surrogates).
pub fn sign_change_front(
    solver: &Solver,
    eps: f64,
    separation: f64,
    times: &[f64],
) -> Result<Vec<FrontPoint>> {
    let grid = solver.grid();
    if grid.dim() != 1 {
        return Err(HeatError::UnsupportedDimension(grid.dim()));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(HeatError::InvalidArgument(format!(
            "mass ratio {eps} outside (0, 1]"
        )));
    }
    if !(separation > 0.0) {
        return Err(HeatError::InvalidArgument(format!(
            "separation {separation} must be positive"
        )));
    }
    check_times(times)?;
    let data = InitialData::PointMasses(vec![
        PointMass::new(&[0.0], 1.0),
        PointMass::new(&[separation], -eps),
    ]);
    let a = solver.get_diffusivity().value();
    let n = grid.points_per_axis();
    times
        .iter()
        .map(|&t| {
            let u = solver.evolve(&data, t)?;
            let v = u.values();
            let start = n / 2;
            let k = (start..n - 1)
                .find(|&i| v[i] > 0.0 && v[i + 1] <= 0.0)
                .ok_or(HeatError::NoSignChangeOnGrid(t))?;
            let (x0, x1) = (grid.coord(k), grid.coord(k + 1));
            let position = x0 + (x1 - x0) * v[k] / (v[k] - v[k + 1]);
            Ok(FrontPoint {
                t,
                position,
                predicted: 0.5 * separation + 2.0 * a * t * (1.0 / eps).ln() / separation,
            })
        })
        .collect()
}

/// `2 N_1` for half-line data, the strength of the dipole attractor.
pub fn dipole_strength(solver: &Solver, data: &InitialData) -> Result<f64> {
    let u0 = solver.realize(data)?;
    let h = u0.grid().spacing();
    let half = u0.grid().points_per_axis() / 2;
    let g = u0.grid();
    Ok(2.0
        * h
        * grid::compensated_sum((half..g.points_per_axis()).map(|i| g.coord(i) * u0.values()[i])))
}

/// Dirichlet half-line error against the dipole `2 N_1 D`.
pub fn dipole_error(
    solver: &Solver,
    data: &InitialData,
    times: &[f64],
    kind: NormKind,
) -> Result<ErrorSeries> {
    match kind {
        NormKind::Lp(p) if p == 1.0 || p.is_infinite() => {}
        NormKind::WeightedL1 => {}
        other => {
            return Err(HeatError::InvalidArgument(format!(
                "dipole errors use l1, l1w or sup, not {}",
                other.label()
            )))
        }
    }
    let strength = dipole_strength(solver, data)?;
    attractor_error(
        solver,
        data,
        &AttractorSpec::Dipole { strength },
        kind,
        times,
        BoundaryKind::HalfLineDirichlet,
    )
}

/// Half-line mass `∫_0^∞ u` along `times`.
pub fn halfline_mass_series(
    solver: &Solver,
    data: &InitialData,
    boundary: BoundaryKind,
    times: &[f64],
) -> Result<Vec<f64>> {
    check_times(times)?;
    times
        .iter()
        .map(|&t| Ok(solver.evolve_halfline(data, boundary, t)?.mass()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub k: f64,
    /// `sup |T_k u(·,1) - M G_1|` on the target grid.
    pub sup_distance: f64,
    pub l1_distance: f64,
    /// `k^N sup |u(·,k²) - M G_{k²}|` on the stretched grid.
    pub renormalized_sup_error: f64,
    pub renormalized_l1_error: f64,
}

/// Distances of the rescaled solutions from `M G_1`, measured on `target`.
pub fn scaling_experiment(
    solver: &Solver,
    data: &InitialData,
    ks: &[f64],
    target: &GridSpec,
) -> Result<Vec<ScalingPoint>> {
    let u0 = solver.realize(data)?;
    let diff = u0.diffusivity();
    let mass = grid::quadrature(&u0, None)?;
    let u = Solution::from_field(u0);
    let dim = target.dim() as f64;
    let attractor = AttractorSpec::Gaussian { mass };
    let g1 = attractor.sample(target, 1.0, diff)?;
    ks.iter()
        .map(|&k| {
            let r = rescale(&u, k)?;
            let tk = r.eval_grid(target, 1.0)?;
            let d = tk.sub(&g1.clone().with_time(tk.time()))?;
            let big = target.scaled(k)?;
            let t = k * k;
            let ut = u.eval_grid(&big, t)?;
            let e = ut.sub(&attractor.sample(&big, t, diff)?.with_time(ut.time()))?;
            Ok(ScalingPoint {
                k,
                sup_distance: norm(&d, NormKind::SUP)?,
                l1_distance: norm(&d, NormKind::L1)?,
                renormalized_sup_error: t.powf(dim / 2.0) * norm(&e, NormKind::SUP)?,
                renormalized_l1_error: norm(&e, NormKind::L1)?,
            })
        })
        .collect()
}

/// Relative excess of the p = 2 renormalized error over the interpolation
/// bound `(L¹)^{1/2} (sup)^{1/2}`; non-positive when the inequality holds.
pub fn interpolation_excess(field_error: &Field, t: f64) -> Result<f64> {
    let n = field_error.grid().dim() as f64;
    let grid = field_error.grid();
    let vals = field_error.values();
    let l1 = norm_values(grid, vals, NormKind::L1, |_| true)?;
    let sup = norm_values(grid, vals, NormKind::SUP, |_| true)? * t.powf(n / 2.0);
    let l2 = norm_values(grid, vals, NormKind::L2, |_| true)? * t.powf(n / 4.0);
    let bound = (l1 * sup).sqrt();
    if bound == 0.0 {
        return Ok(if l2 == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(l2 / bound - 1.0)
}

/// Smoothing ratios `t^{N/2p} ‖u(t)‖_∞ / ‖u0‖_p` and the Young constant
/// `‖G_1‖_{p'} = (4π)^{-N/2} (4π/p')^{N/2p'}` bounding them.
pub fn smoothing_ratios(
    solver: &Solver,
    data: &InitialData,
    p: f64,
    times: &[f64],
) -> Result<(Vec<f64>, f64)> {
    check_times(times)?;
    if !(p >= 1.0) || p.is_infinite() {
        return Err(HeatError::InvalidArgument(format!(
            "smoothing exponent {p} must be finite and >= 1"
        )));
    }
    let u0 = solver.realize(data)?;
    let n = solver.grid().dim() as f64;
    let a = solver.get_diffusivity().value();
    let base = norm(&u0, NormKind::Lp(p))?;
    let ratios = times
        .iter()
        .map(|&t| {
            let u = solver.evolve(data, t)?;
            Ok((a * t).powf(n / (2.0 * p)) * u.max_abs() / base)
        })
        .collect::<Result<Vec<_>>>()?;
    // ‖G_t‖_{p'} with 1/p + 1/p' = 1
    let q = if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    };
    let constant = if q.is_infinite() {
        (4.0 * PI).powf(-n / 2.0)
    } else {
        (4.0 * PI).powf(-n / 2.0) * (4.0 * PI / q).powf(n / (2.0 * q))
    };
    Ok((ratios, constant))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::kernels::SpecialSolutionKind;
    use crate::semigroup::Method;

    fn series(times: &[f64], vals: &[f64]) -> ErrorSeries {
        ErrorSeries {
            times: times.to_vec(),
            raw: vals.to_vec(),
            renormalized: vals.to_vec(),
            norm_kind: NormKind::SUP,
            attractor: AttractorSpec::Gaussian { mass: 1.0 },
        }
    }

    #[test]
    fn synthetic_rate_fits() {
        let ts: Vec<f64> = (0..8).map(|i| 4.0 * 2f64.powi(i)).collect();
        let ys: Vec<f64> = ts.iter().map(|t| t.powf(-0.5)).collect();
        let f = fit_rate(&series(&ts, &ys), None).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let ys: Vec<f64> = ts
            .iter()
            .map(|t| 5.0 / t * (1.0 + 0.01 * t.ln().sin()))
            .collect();
        let f = fit_rate(&series(&ts, &ys), None).unwrap();
        assert!((f.slope + 1.0).abs() < 0.01);
        assert!(matches!(
            fit_rate(&series(&ts[..2], &ys[..2]), None),
            Err(HeatError::TooFewPoints { .. })
        ));
        let mut z = ys.clone();
        z[..6].iter_mut().for_each(|v| *v = 0.0);
        assert_eq!(
            fit_rate(&series(&ts, &z), None),
            Err(HeatError::ZeroErrorEntry)
        );
        let w = fit_rate(&series(&ts, &ys), Some((8.0, 64.0))).unwrap();
        assert_eq!(w.n_points, 4);
    }

    #[test]
    fn corrector_reduces_to_gaussian() {
        let g = make_grid(1, 40.0, 1024).unwrap();
        let u0 = InitialData::Catalog {
            kind: SpecialSolutionKind::gaussian(1.0, &[0.0]),
            t0: 1.0,
        }
        .realize(&g, Diffusivity::Unit)
        .unwrap();
        let table = MomentTable::from_field(&u0, 2).unwrap();
        for x in [-3.0, 0.1, 2.5] {
            let k0 = corrector_attractor(&table, 0, &[x], 2.0, Diffusivity::Unit).unwrap();
            let k1 = corrector_attractor(&table, 1, &[x], 2.0, Diffusivity::Unit).unwrap();
            let m = gaussian(&[x], 2.0, table.mass(), &[], Diffusivity::Unit).unwrap();
            assert_eq!(k0, m);
            assert!((k1 - k0).abs() < 1e-15);
        }
        assert!(matches!(
            corrector_attractor(&table, 3, &[0.0], 1.0, Diffusivity::Unit),
            Err(HeatError::OrderTooHigh { .. })
        ));
    }

    #[test]
    fn corrector_matches_taylor_of_shifted_gaussian() {
        // m_0 = 1, m_1 = h: first-order term is -h ∂_x G = G(x - h) to O(h²)
        let h = 1e-3;
        let table = MomentTable::from_entries(
            1,
            1,
            &[(MultiIndex::zero(1), 1.0), (MultiIndex::unit(1, 0), h)],
        )
        .unwrap();
        for x in [-1.0, 0.3, 2.0] {
            let c = corrector_attractor(&table, 1, &[x], 1.0, Diffusivity::Unit).unwrap();
            let exact = gaussian(&[x], 1.0, 1.0, &[h], Diffusivity::Unit).unwrap();
            assert!((c - exact).abs() < h * h);
        }
    }

    #[test]
    fn exact_attractor_has_zero_error() {
        let g = make_grid(1, 40.0, 4096).unwrap();
        let solver = Solver::new(g);
        let d = InitialData::Catalog {
            kind: SpecialSolutionKind::gaussian(1.0, &[0.0]),
            t0: 1.0,
        };
        let s = attractor_error(
            &solver,
            &d,
            &AttractorSpec::GaussianTimeShift { mass: 1.0, t0: 1.0 },
            NormKind::SUP,
            &[1.0, 2.0, 4.0],
            BoundaryKind::WholeSpace,
        )
        .unwrap();
        assert!(s.raw.iter().all(|e| *e < 1e-15));
        let bad = attractor_error(
            &solver,
            &d,
            &AttractorSpec::Gaussian { mass: 2.0 },
            NormKind::SUP,
            &[1.0],
            BoundaryKind::WholeSpace,
        );
        assert!(matches!(bad, Err(HeatError::MassMismatch { .. })));
    }

    #[test]
    fn renormalized_errors_decrease() {
        let g = make_grid(1, 80.0, 4096).unwrap();
        let solver = Solver::new(g);
        let d = InitialData::Catalog {
            kind: SpecialSolutionKind::gaussian(1.0, &[0.0]),
            t0: 1.0,
        };
        let s = attractor_error(
            &solver,
            &d,
            &AttractorSpec::Gaussian { mass: 1.0 },
            NormKind::SUP,
            &[4.0, 16.0, 64.0],
            BoundaryKind::WholeSpace,
        )
        .unwrap();
        assert!(s.renormalized.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn counterexample_selection() {
        let c = build_counterexample(|t| t.powf(-0.5), 3, 1).unwrap();
        assert_eq!(c.witness_times, vec![16.0, 256.0, 4096.0]);
        assert_eq!(c.masses, vec![0.5, 0.25, 0.125]);
        assert!(c.holds());
        for (r, t) in c.radii.iter().zip(&c.witness_times) {
            assert!((-r * r / (4.0 * t)).exp() < 0.5);
        }
        assert!(matches!(
            build_counterexample(|t| t, 2, 1),
            Err(HeatError::RateNotDecreasing(_))
        ));
        // closed form agrees with the Gaussian sum at the origin
        let t = c.witness_times[1];
        let u = c.solution_at(&[0.0], t).unwrap();
        let g0 = (4.0 * PI * t).powf(-0.5);
        let lhs = (4.0 * PI * t).sqrt() * (u - g0).abs();
        assert!((lhs - c.witness_lhs[1]).abs() < 1e-12);
    }

    #[test]
    fn mixing_and_mass_mismatch() {
        let g = make_grid(1, 100.0, 4096).unwrap();
        let solver = Solver::new(g);
        let a = InitialData::box_indicator(&g, &[0.0], 1.0, 1.0, Diffusivity::Unit).unwrap();
        let b = InitialData::Catalog {
            kind: SpecialSolutionKind::gaussian(1.0, &[0.0]),
            t0: 1.0,
        };
        let same = mixing_error(&solver, &a, &a, &[1.0, 2.0, 4.0]).unwrap();
        assert!(same.raw.iter().all(|e| *e == 0.0));
        let s = mixing_error(&solver, &a, &b, &[4.0, 16.0, 64.0]).unwrap();
        assert!(s.raw[2] < s.raw[0]);
        let c = InitialData::Catalog {
            kind: SpecialSolutionKind::gaussian(2.0, &[0.0]),
            t0: 1.0,
        };
        assert!(matches!(
            mixing_error(&solver, &a, &c, &[1.0]),
            Err(HeatError::MassMismatch { .. })
        ));
    }

    #[test]
    fn symmetric_front_stays_in_the_middle() {
        let g = make_grid(1, 40.0, 4096).unwrap();
        let solver = Solver::new(g).method(Method::Direct);
        for p in sign_change_front(&solver, 1.0, 1.0, &[1.0, 2.0, 4.0]).unwrap() {
            // linear interpolation across the crossing is exact to O(h²)
            assert!((p.position - 0.5).abs() < g.spacing().powi(2), "{p:?}");
        }
    }

    #[test]
    fn gaussian_tail_ratio() {
        let g = make_grid(1, 40.0, 4096).unwrap();
        let f = crate::grid::sample(
            &g,
            |x| gaussian(x, 1.0, 1.0, &[], Diffusivity::Unit).unwrap(),
            1.0,
            Diffusivity::Unit,
        )
        .unwrap();
        let near = tail_profile(&f, 1.0, &[0.0], 0.0, 5.0, 6.0).unwrap();
        let far = tail_profile(&f, 1.0, &[0.0], 0.0, 14.0, 15.0).unwrap();
        assert!(far.max_ratio_deviation < near.max_ratio_deviation);
        assert!(far.max_bracket_violation < 1e-9);
    }

    #[test]
    fn smoothing_constant_for_gaussians() {
        // G_s saturates the bound as s -> 0; at s = 1, t = 1 the ratio is
        // (t/(t+s))^{N/2p}-ish below the constant
        let g = make_grid(1, 60.0, 4096).unwrap();
        let solver = Solver::new(g);
        let d = InitialData::Catalog {
            kind: SpecialSolutionKind::gaussian(1.0, &[0.0]),
            t0: 1.0,
        };
        for p in [1.0, 2.0] {
            let (r, c) = smoothing_ratios(&solver, &d, p, &[0.1, 1.0, 10.0]).unwrap();
            assert!(r.iter().all(|v| *v <= c * (1.0 + 1e-12)), "{p} {r:?} {c}");
        }
        let (_, c1) = smoothing_ratios(&solver, &d, 1.0, &[1.0]).unwrap();
        let (_, c2) = smoothing_ratios(&solver, &d, 2.0, &[1.0]).unwrap();
        assert!((c1 - (4.0 * PI).powf(-0.5)).abs() < 1e-15);
        assert!((c2 - (8.0 * PI).powf(-0.25)).abs() < 1e-15);
    }
}
