//! Mass and moment bookkeeping along evolutions.

use serde::{Deserialize, Serialize};

use crate::error::{HeatError, Result};
use crate::grid::{indexed_sum, norm, Field, NormKind};
use crate::regression::fit_line;

/// Below this |mass| the center of mass is left undefined.
pub const MASS_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub mass: f64,
    pub first_moment: Vec<f64>,
    pub second_moment: f64,
    pub centered_second: f64,
    pub third_abs: Option<f64>,
    pub center_of_mass: Option<Vec<f64>>,
}

/// Mass, first, second and absolute third moments by midpoint quadrature.
pub fn moments(field: &Field) -> MomentReport {
    let grid = field.grid();
    let dim = grid.dim();
    let vol = grid.cell_volume();
    let v = field.values();
    let n = v.len();
    let mass = vol * indexed_sum(n, |i| v[i]);
    let first_moment: Vec<f64> = (0..dim)
        .map(|a| vol * indexed_sum(n, |i| grid.node(i)[a] * v[i]))
        .collect();
    let r2 = |i: usize| grid.node(i)[..dim].iter().map(|x| x * x).sum::<f64>();
    let second_moment = vol * indexed_sum(n, |i| r2(i) * v[i]);
    let third_abs = vol * indexed_sum(n, |i| r2(i).powf(1.5) * v[i].abs());
    let (centered_second, center_of_mass) = if mass.abs() > MASS_EPS {
        let c: Vec<f64> = first_moment.iter().map(|m| m / mass).collect();
        let centered = vol
            * indexed_sum(n, |i| {
                let x = grid.node(i);
                let d2: f64 = (0..dim).map(|a| (x[a] - c[a]).powi(2)).sum();
                d2 * v[i]
            });
        (centered, Some(c))
    } else {
        (second_moment, None)
    };
    MomentReport {
        mass,
        first_moment,
        second_moment,
        centered_second,
        third_abs: Some(third_abs),
        center_of_mass,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub mass_drift: f64,
    pub first_moment_drift: f64,
    pub second_moment_slope: f64,
}

/// Drifts of mass and first moment from their initial values, and the
/// least-squares slope of the second moment against time.
pub fn conservation_report(fields: &[Field]) -> Result<ConservationReport> {
    if fields.len() < 3 {
        return Err(HeatError::TooFewPoints {
            needed: 3,
            got: fields.len(),
        });
    }
    let grid = fields[0].grid();
    if fields.iter().any(|f| f.grid() != grid) {
        return Err(HeatError::GridMismatch);
    }
    let reports: Vec<MomentReport> = crate::par::map_slice(fields, moments);
    let m0 = &reports[0];
    let mass_drift = reports
        .iter()
        .map(|r| (r.mass - m0.mass).abs())
        .fold(0.0, f64::max);
    let first_moment_drift = reports
        .iter()
        .flat_map(|r| {
            r.first_moment
                .iter()
                .zip(&m0.first_moment)
                .map(|(a, b)| (a - b).abs())
        })
        .fold(0.0, f64::max);
    let ts: Vec<f64> = fields.iter().map(|f| f.time()).collect();
    let n2: Vec<f64> = reports.iter().map(|r| r.second_moment).collect();
    let fit = fit_line(&ts, &n2)?;
    Ok(ConservationReport {
        mass_drift,
        first_moment_drift,
        second_moment_slope: fit.slope,
    })
}

/// `∫|u|^p dx`, or `sup |u|` for `p = ∞`.
pub fn p_energy(field: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(HeatError::InvalidArgument(format!(
            "energy exponent {p} < 1"
        )));
    }
    if p.is_infinite() {
        return Ok(field.max_abs());
    }
    Ok(norm(field, NormKind::Lp(p))?.powf(p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyDecayReport {
    pub p: f64,
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    /// Largest relative increase between consecutive entries (0 when monotone).
    pub max_relative_increase: f64,
    pub non_increasing: bool,
}

/// Relative slack allowed when calling a series non-increasing.
pub const ENERGY_MONOTONE_TOL: f64 = 1e-12;

pub fn energy_decay_check(series: &[Field], p: f64) -> Result<EnergyDecayReport> {
    if series.len() < 2 {
        return Err(HeatError::TooFewPoints {
            needed: 2,
            got: series.len(),
        });
    }
    let energies = series
        .iter()
        .map(|f| p_energy(f, p))
        .collect::<Result<Vec<_>>>()?;
    let max_relative_increase = energies
        .windows(2)
        .map(|w| {
            let scale = w[0].abs().max(f64::MIN_POSITIVE);
            ((w[1] - w[0]) / scale).max(0.0)
        })
        .fold(0.0, f64::max);
    Ok(EnergyDecayReport {
        p,
        times: series.iter().map(|f| f.time()).collect(),
        energies,
        max_relative_increase,
        non_increasing: max_relative_increase <= ENERGY_MONOTONE_TOL,
    })
}
