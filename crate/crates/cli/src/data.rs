//! Initial-data specifications such as `box:center=0,radius=1,mass=1`.

use heatlab_core::kernels::SpecialSolutionKind;
use heatlab_core::{Diffusivity, Field, GridSpec, InitialData, PointMass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{parse_f64, parse_pairs};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum DataTerm {
    Gaussian {
        mass: f64,
        center: Vec<f64>,
        t0: f64,
    },
    Box {
        center: Vec<f64>,
        radius: f64,
        mass: f64,
    },
    Bump {
        center: Vec<f64>,
        radius: f64,
        mass: f64,
    },
    Point {
        center: Vec<f64>,
        mass: f64,
    },
    Exponential {
        rate: f64,
    },
    PowerTail {
        exponent: f64,
        scale: f64,
    },
}

/// A sum of terms joined by `+`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSpec {
    pub terms: Vec<DataTerm>,
}

impl DataSpec {
    pub fn parse(s: &str) -> CliResult<Self> {
        let terms = split_terms(s)
            .into_iter()
            .map(parse_term)
            .collect::<CliResult<Vec<_>>>()?;
        if terms.is_empty() {
            return Err(CliError::config("empty data spec"));
        }
        Ok(DataSpec { terms })
    }

    /// The data on `grid`, with seeded multiplicative noise if `perturbation > 0`.
    pub fn realize(
        &self,
        grid: &GridSpec,
        diffusivity: Diffusivity,
        perturbation: f64,
        seed: u64,
    ) -> CliResult<InitialData> {
        let data = if let [term] = self.terms.as_slice() {
            term_data(term, grid, diffusivity)?
        } else {
            let mut acc = Field::zeros(*grid, 0.0, diffusivity);
            for t in &self.terms {
                acc = acc.add(&term_data(t, grid, diffusivity)?.realize(grid, diffusivity)?)?;
            }
            InitialData::GridSamples(acc)
        };
        if perturbation == 0.0 {
            return Ok(data);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = data.realize(grid, diffusivity)?;
        let noise: Vec<f64> = (0..grid.len())
            .map(|_| 1.0 + perturbation * rng.gen_range(-1.0..1.0))
            .collect();
        let vals = base
            .values()
            .iter()
            .zip(&noise)
            .map(|(v, e)| v * e)
            .collect();
        Ok(InitialData::GridSamples(Field::from_values(
            *grid,
            vals,
            0.0,
            diffusivity,
        )?))
    }
}

/// Splits on `+` that starts a new term (not an exponent sign).
fn split_terms(s: &str) -> Vec<&str> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    for (i, b) in bytes.iter().enumerate() {
        if *b == b'+' && (i == 0 || !matches!(bytes[i - 1], b'e' | b'E')) {
            out.push(s[start..i].trim());
            start = i + 1;
        }
    }
    out.push(s[start..].trim());
    out.into_iter().filter(|t| !t.is_empty()).collect()
}

fn parse_term(s: &str) -> CliResult<DataTerm> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let kv = parse_pairs(rest)?;
    let allowed: &[&str] = match kind {
        "gaussian" => &["mass", "center", "t0"],
        "box" | "bump" => &["center", "radius", "mass"],
        "point" => &["center", "mass"],
        "exp" => &["rate"],
        "power" => &["exponent", "scale"],
        _ => return Err(CliError::config(format!("unknown data kind '{kind}'"))),
    };
    if let Some(k) = kv.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(CliError::config(format!(
            "'{kind}' data has no parameter '{k}'"
        )));
    }
    let num = |k: &str, default: f64| kv.get(k).map_or(Ok(default), |v| parse_f64(v));
    let center = || -> CliResult<Vec<f64>> {
        kv.get("center")
            .map_or(Ok(vec![0.0]), |v| v.split(':').map(parse_f64).collect())
    };
    Ok(match kind {
        "gaussian" => DataTerm::Gaussian {
            mass: num("mass", 1.0)?,
            center: center()?,
            t0: num("t0", 1.0)?,
        },
        "box" => DataTerm::Box {
            center: center()?,
            radius: num("radius", 1.0)?,
            mass: num("mass", 1.0)?,
        },
        "bump" => DataTerm::Bump {
            center: center()?,
            radius: num("radius", 1.0)?,
            mass: num("mass", 1.0)?,
        },
        "point" => DataTerm::Point {
            center: center()?,
            mass: num("mass", 1.0)?,
        },
        "exp" => DataTerm::Exponential {
            rate: num("rate", 1.0)?,
        },
        _ => DataTerm::PowerTail {
            exponent: num("exponent", 1.0)?,
            scale: num("scale", 1.0)?,
        },
    })
}

fn padded(center: &[f64], dim: usize) -> CliResult<Vec<f64>> {
    if center.len() > dim {
        return Err(CliError::config(format!(
            "center has {} coordinates on a {dim}-dimensional grid",
            center.len()
        )));
    }
    let mut c = center.to_vec();
    c.resize(dim, 0.0);
    Ok(c)
}

fn term_data(term: &DataTerm, grid: &GridSpec, diffusivity: Diffusivity) -> CliResult<InitialData> {
    let dim = grid.dim();
    Ok(match term {
        DataTerm::Gaussian { mass, center, t0 } => InitialData::Catalog {
            kind: SpecialSolutionKind::gaussian(*mass, &padded(center, dim)?),
            t0: *t0,
        },
        DataTerm::Box {
            center,
            radius,
            mass,
        } => InitialData::box_indicator(grid, &padded(center, dim)?, *radius, *mass, diffusivity)?,
        DataTerm::Bump {
            center,
            radius,
            mass,
        } => InitialData::smooth_bump(grid, &padded(center, dim)?, *radius, *mass, diffusivity)?,
        DataTerm::Point { center, mass } => {
            InitialData::PointMasses(vec![PointMass::new(&padded(center, dim)?, *mass)])
        }
        DataTerm::Exponential { rate } => InitialData::OneSidedExponential { rate: *rate },
        DataTerm::PowerTail { exponent, scale } => InitialData::PowerTail {
            exponent: *exponent,
            scale: *scale,
        },
    })
}
