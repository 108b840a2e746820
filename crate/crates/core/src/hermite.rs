//! Probabilists' Hermite polynomials and the spectral picture of the
//! Ornstein-Uhlenbeck flow.

use serde::{Deserialize, Serialize};

use crate::error::{HeatError, Result};
use crate::grid::{self, standard_gaussian, Field, GridSpec, NormKind};
use crate::kernels::{factorial, MultiIndex, MAX_ORDER};
use crate::renormalized;

/// Exact integer coefficients in the monomial basis, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HermitePoly {
    coeffs: Vec<i64>,
}

impl HermitePoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * x + c as f64)
    }

    pub fn derivative(&self) -> HermitePoly {
        if self.coeffs.len() == 1 {
            return HermitePoly { coeffs: vec![0] };
        }
        HermitePoly {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, c)| j as i64 * c)
                .collect(),
        }
    }

    /// `∫ H_k² dμ = k!`.
    pub fn norm_sq(&self) -> f64 {
        factorial(self.degree())
    }
}

fn check_order(k: usize) -> Result<()> {
    if k > MAX_ORDER {
        return Err(HeatError::OrderTooHigh {
            order: k,
            max: MAX_ORDER,
        });
    }
    Ok(())
}

/// `H_k` from `H_0 = 1`, `H_{k+1} = x H_k - H_k'`.
pub fn hermite_1d(k: usize) -> Result<HermitePoly> {
    check_order(k)?;
    let mut h = vec![1i64];
    for _ in 0..k {
        let mut next = vec![0i64; h.len() + 1];
        for (j, c) in h.iter().enumerate() {
            next[j + 1] += c;
            if j > 0 {
                next[j - 1] -= j as i64 * c;
            }
        }
        h = next;
    }
    Ok(HermitePoly { coeffs: h })
}

/// `H_k = (-1)^k G^{-1} (d/dx)^k G`, carried out on the polynomial factor:
/// `D(P e^{-x²/2}) = (P' - x P) e^{-x²/2}`.
pub fn hermite_rodrigues(k: usize) -> Result<HermitePoly> {
    check_order(k)?;
    let mut p = vec![1i64];
    for _ in 0..k {
        let mut next = vec![0i64; p.len() + 1];
        for (j, c) in p.iter().enumerate() {
            if j > 0 {
                next[j - 1] += j as i64 * c;
            }
            next[j + 1] -= c;
        }
        p = next;
    }
    if k % 2 == 1 {
        p.iter_mut().for_each(|c| *c = -*c);
    }
    Ok(HermitePoly { coeffs: p })
}

/// `H_α(x) = Π_i H_{α_i}(x_i)`, an eigenfunction of the OU operator with
/// eigenvalue `-|α|`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteMulti {
    alpha: MultiIndex,
    factors: Vec<HermitePoly>,
}

impl HermiteMulti {
    pub fn alpha(&self) -> &MultiIndex {
        &self.alpha
    }

    pub fn eigenvalue(&self) -> usize {
        self.alpha.order()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.factors
            .iter()
            .zip(x)
            .map(|(h, xi)| h.eval(*xi))
            .product()
    }

    /// `∫ H_α² dμ = α!`.
    pub fn norm_sq(&self) -> f64 {
        self.alpha.factorial()
    }

    pub fn sample(&self, grid: &GridSpec) -> Result<Field> {
        grid::sample(grid, |x| self.eval(x), 0.0, Default::default())
    }
}

pub fn hermite_multi(alpha: &MultiIndex) -> Result<HermiteMulti> {
    check_order(alpha.order())?;
    let factors = alpha
        .orders()
        .iter()
        .map(|&k| hermite_1d(k))
        .collect::<Result<Vec<_>>>()?;
    Ok(HermiteMulti {
        alpha: *alpha,
        factors,
    })
}

/// `⟨f, g⟩_μ = ∫ f g G dx` by midpoint quadrature.
pub fn mu_inner(f: &Field, g: &Field) -> Result<f64> {
    if f.grid() != g.grid() {
        return Err(HeatError::GridMismatch);
    }
    let grid = f.grid();
    let dim = grid.dim();
    let (a, b) = (f.values(), g.values());
    Ok(grid.cell_volume()
        * grid::indexed_sum(a.len(), |i| {
            let p = grid.node(i);
            a[i] * b[i] * standard_gaussian(&p[..dim])
        }))
}

/// Smallest OU-frame half-width accepted by [`expand`].
pub fn required_half_width(k_max: usize) -> f64 {
    6f64.max((2.0 * k_max as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteCoeffs {
    dim: usize,
    time: f64,
    entries: Vec<(MultiIndex, f64)>,
}

impl HermiteCoeffs {
    pub fn from_entries(dim: usize, entries: Vec<(MultiIndex, f64)>) -> Result<Self> {
        if let Some((a, _)) = entries.iter().find(|(a, _)| a.dim() != dim) {
            return Err(HeatError::InvalidArgument(format!(
                "multi-index {a} has the wrong dimension"
            )));
        }
        if let Some((a, _)) = entries.iter().find(|(_, c)| !c.is_finite()) {
            return Err(HeatError::InvalidArgument(format!(
                "coefficient of {a} is not finite"
            )));
        }
        Ok(Self {
            dim,
            time: 0.0,
            entries,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn entries(&self) -> &[(MultiIndex, f64)] {
        &self.entries
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<f64> {
        self.entries
            .iter()
            .find(|(a, _)| a == alpha)
            .map(|(_, c)| *c)
    }

    /// `c_α(t) = c_α e^{-|α| t}`.
    pub fn evolve(&self, t: f64) -> Result<Self> {
        if !(t >= 0.0) {
            return Err(HeatError::NonPositiveTime(t));
        }
        Ok(Self {
            dim: self.dim,
            time: self.time + t,
            entries: self
                .entries
                .iter()
                .map(|(a, c)| (*a, c * (-(a.order() as f64) * t).exp()))
                .collect(),
        })
    }

    /// `Σ c_α² α!`, the squared μ-norm of the truncated series.
    pub fn mu_norm_sq(&self) -> f64 {
        grid::compensated_sum(self.entries.iter().map(|(a, c)| c * c * a.factorial()))
    }

    /// `∫ |w - 1|² dμ` of the series when `c_0 = 1`.
    pub fn ou_energy(&self) -> f64 {
        grid::compensated_sum(self.entries.iter().map(|(a, c)| {
            if a.order() == 0 {
                (c - 1.0).powi(2)
            } else {
                c * c * a.factorial()
            }
        }))
    }

    /// `2 ∫ |∇w|² dμ = 2 Σ |α| c_α² α!`.
    pub fn ou_dissipation(&self) -> f64 {
        2.0 * grid::compensated_sum(
            self.entries
                .iter()
                .map(|(a, c)| a.order() as f64 * c * c * a.factorial()),
        )
    }

    /// Sums the series on `grid`.
    pub fn reconstruct(&self, grid: &GridSpec) -> Result<Field> {
        if grid.dim() != self.dim {
            return Err(HeatError::GridMismatch);
        }
        let polys = self
            .entries
            .iter()
            .map(|(a, c)| Ok((hermite_multi(a)?, *c)))
            .collect::<Result<Vec<_>>>()?;
        let dim = self.dim;
        grid::sample(
            grid,
            |x| grid::compensated_sum(polys.iter().map(|(h, c)| c * h.eval(&x[..dim]))),
            self.time,
            Default::default(),
        )
    }
}

/// `c_α = ⟨w0, H_α⟩_μ / α!` for every `|α| <= k_max`.
pub fn expand(w0: &Field, k_max: usize) -> Result<HermiteCoeffs> {
    check_order(k_max)?;
    let grid = w0.grid();
    let need = required_half_width(k_max);
    if grid.half_width() < need {
        return Err(HeatError::BoxTooSmall {
            have: grid.half_width(),
            need,
        });
    }
    let dim = grid.dim();
    let entries = crate::par::try_map_range(MultiIndex::all_up_to(dim, k_max).len(), |j| {
        let alpha = MultiIndex::all_up_to(dim, k_max).swap_remove(j);
        let h = hermite_multi(&alpha)?.sample(grid)?;
        let c = mu_inner(
            w0,
            &h.with_time(w0.time()).with_diffusivity(w0.diffusivity()),
        )? / alpha.factorial();
        Ok::<_, HeatError>((alpha, c))
    })?;
    Ok(HermiteCoeffs {
        dim,
        time: 0.0,
        entries,
    })
}

/// Alias of [`HermiteCoeffs::evolve`].
pub fn spectral_evolve(coeffs: &HermiteCoeffs, t: f64) -> Result<HermiteCoeffs> {
    coeffs.evolve(t)
}

/// μ-norm of the difference between the PDE-evolved `w(t)` and the
/// spectral series truncated at `k_max`.
pub fn truncation_error(w0: &Field, k_max: usize, t: f64) -> Result<f64> {
    let coeffs = expand(w0, k_max)?.evolve(t)?;
    let w = renormalized::ou_evolve(w0, t)?;
    let approx = coeffs.reconstruct(w.grid())?;
    let d = w.sub(&approx.with_time(w.time()).with_diffusivity(w.diffusivity()))?;
    grid::norm(&d, NormKind::L2Gauss)
}
