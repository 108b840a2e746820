//! Closed-form solutions of the heat equation.
//!
//! Everything here is evaluated pointwise and exactly (up to rounding); the
//! grid-based solvers are tested against these functions.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{HeatError, Result};
use crate::grid::{Diffusivity, MAX_DIM};

/// Highest derivative order with precomputed tables.
pub const MAX_ORDER: usize = 12;

/// Per-axis derivative orders `α = (α_1, .., α_N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex {
    dim: usize,
    orders: [usize; MAX_DIM],
}

impl MultiIndex {
    pub fn new(orders: &[usize]) -> Result<Self> {
        if orders.is_empty() || orders.len() > MAX_DIM {
            return Err(HeatError::UnsupportedDimension(orders.len()));
        }
        let mut o = [0; MAX_DIM];
        o[..orders.len()].copy_from_slice(orders);
        let idx = Self {
            dim: orders.len(),
            orders: o,
        };
        if idx.order() > MAX_ORDER {
            return Err(HeatError::OrderTooHigh {
                order: idx.order(),
                max: MAX_ORDER,
            });
        }
        Ok(idx)
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            orders: [0; MAX_DIM],
        }
    }

    /// Unit index `e_axis`.
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut z = Self::zero(dim);
        z.orders[axis] = 1;
        z
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders[..self.dim]
    }

    /// `|α| = Σ α_i`.
    pub fn order(&self) -> usize {
        self.orders().iter().sum()
    }

    /// `α! = Π α_i!`.
    pub fn factorial(&self) -> f64 {
        self.orders().iter().map(|&k| factorial(k)).product()
    }

    /// `x^α`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.orders()
            .iter()
            .zip(x)
            .map(|(&k, &xi)| xi.powi(k as i32))
            .product()
    }

    /// All indices with `|α| <= k_max`, sorted by total order then lexicographically.
    pub fn all_up_to(dim: usize, k_max: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = [0usize; MAX_DIM];
        fn rec(
            dim: usize,
            axis: usize,
            left: usize,
            cur: &mut [usize; MAX_DIM],
            out: &mut Vec<MultiIndex>,
        ) {
            if axis == dim {
                out.push(MultiIndex { dim, orders: *cur });
                return;
            }
            for k in 0..=left {
                cur[axis] = k;
                rec(dim, axis + 1, left - k, cur, out);
            }
            cur[axis] = 0;
        }
        rec(dim, 0, k_max, &mut cur, &mut out);
        out.sort_by_key(|a| (a.order(), std::cmp::Reverse(a.orders)));
        out
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.orders().iter().map(|k| k.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Integer coefficients of the physicists' Hermite polynomials `h_k`,
/// `h_{k+1} = 2y h_k - 2k h_{k-1}`, lowest degree first.
fn physicists_table() -> &'static Vec<Vec<i64>> {
    static TABLE: OnceLock<Vec<Vec<i64>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t: Vec<Vec<i64>> = vec![vec![1], vec![0, 2]];
        for k in 1..MAX_ORDER {
            let mut next = vec![0i64; k + 2];
            for (i, c) in t[k].iter().enumerate() {
                next[i + 1] += 2 * c;
            }
            for (i, c) in t[k - 1].iter().enumerate() {
                next[i] -= 2 * k as i64 * c;
            }
            t.push(next);
        }
        t
    })
}

/// Coefficients of `h_k`; exposed for tests.
pub fn physicists_hermite(k: usize) -> Result<&'static [i64]> {
    physicists_table()
        .get(k)
        .map(|v| v.as_slice())
        .ok_or(HeatError::OrderTooHigh {
            order: k,
            max: MAX_ORDER,
        })
}

fn horner(coeffs: &[i64], y: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * y + c as f64)
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(HeatError::NonPositiveTime(t))
    }
}

/// `mass (4π a t)^{-N/2} exp(-|x - c|² / 4at)`.
pub fn gaussian(
    x: &[f64],
    t: f64,
    mass: f64,
    center: &[f64],
    diffusivity: Diffusivity,
) -> Result<f64> {
    check_time(t)?;
    let s = 4.0 * diffusivity.value() * t;
    let r2: f64 = x
        .iter()
        .enumerate()
        .map(|(i, xi)| {
            let d = xi - center.get(i).copied().unwrap_or(0.0);
            d * d
        })
        .sum();
    Ok(mass * (PI * s).powf(-(x.len() as f64) / 2.0) * (-r2 / s).exp())
}

/// One-dimensional heat kernel factor; the N-D kernel is the product over axes.
pub fn gaussian_1d(x: f64, t: f64, diffusivity: Diffusivity) -> f64 {
    let s = 4.0 * diffusivity.value() * t;
    (PI * s).powf(-0.5) * (-x * x / s).exp()
}

/// `∂^k_x` of the one-dimensional kernel.
fn gaussian_derivative_1d(x: f64, t: f64, k: usize, a: f64) -> f64 {
    let s = 4.0 * a * t;
    let root = s.sqrt();
    let y = x / root;
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let h = horner(&physicists_table()[k], y);
    sign * root.powi(-(k as i32)) * h * (PI * s).powf(-0.5) * (-y * y).exp()
}

/// Exact `D^α G_t(x)` from the Hermite factorization on each axis.
pub fn gaussian_derivative(
    x: &[f64],
    t: f64,
    alpha: &MultiIndex,
    diffusivity: Diffusivity,
) -> Result<f64> {
    check_time(t)?;
    if alpha.order() > MAX_ORDER {
        return Err(HeatError::OrderTooHigh {
            order: alpha.order(),
            max: MAX_ORDER,
        });
    }
    if alpha.dim() != x.len() {
        return Err(HeatError::InvalidArgument(format!(
            "multi-index of dimension {} applied to a {}-D point",
            alpha.dim(),
            x.len()
        )));
    }
    let a = diffusivity.value();
    Ok(x.iter()
        .zip(alpha.orders())
        .map(|(&xi, &k)| gaussian_derivative_1d(xi, t, k, a))
        .product())
}

/// Dipole `strength · (-∂_x G_t)(x)` in one dimension, constants included.
pub fn dipole(x: f64, t: f64, strength: f64) -> Result<f64> {
    check_time(t)?;
    Ok(strength * x / (2.0 * t) * gaussian_1d(x, t, Diffusivity::Unit))
}

/// Which polynomial caloric function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaloricPolynomial {
    /// `u = 1`.
    One,
    /// `u = |x|² + 2Nt`.
    SquarePlus2Nt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpecialSolutionKind {
    /// `mass · G_{t + time_shift}(x - center)`.
    Gaussian {
        mass: f64,
        center: Vec<f64>,
        time_shift: f64,
    },
    /// `scale · D^α G_t`.
    GaussianDerivative {
        alpha: MultiIndex,
        scale: f64,
    },
    /// `strength · (-∂_x G_t)`, one dimension.
    Dipole1D {
        strength: f64,
    },
    /// `C e^{c² t + c x}`, one dimension.
    TravellingWave1D {
        amplitude: f64,
        speed: f64,
    },
    /// `C (T - t)^{-N/2} e^{|x|² / 4(T - t)}`, valid for `t < T`.
    BlowUp {
        amplitude: f64,
        blowup_time: f64,
    },
    CaloricPolynomial(CaloricPolynomial),
}

impl SpecialSolutionKind {
    pub fn gaussian(mass: f64, center: &[f64]) -> Self {
        SpecialSolutionKind::Gaussian {
            mass,
            center: center.to_vec(),
            time_shift: 0.0,
        }
    }

    /// Whether the solution is integrable over R^N (and may seed the solver).
    pub fn is_integrable(&self) -> bool {
        matches!(
            self,
            SpecialSolutionKind::Gaussian { .. }
                | SpecialSolutionKind::GaussianDerivative { .. }
                | SpecialSolutionKind::Dipole1D { .. }
        )
    }

    /// Evaluates the solution of `u_t = a Δu` at `(x, t)`.
    ///
    /// Every kind is written for `a = 1`; other diffusivities use `u(x, a t)`.
    pub fn evaluate(&self, x: &[f64], t: f64, diffusivity: Diffusivity) -> Result<f64> {
        let at = diffusivity.value() * t;
        let n = x.len() as f64;
        match self {
            SpecialSolutionKind::Gaussian {
                mass,
                center,
                time_shift,
            } => gaussian(x, at + time_shift, *mass, center, Diffusivity::Unit),
            SpecialSolutionKind::GaussianDerivative { alpha, scale } => {
                Ok(scale * gaussian_derivative(x, at, alpha, Diffusivity::Unit)?)
            }
            SpecialSolutionKind::Dipole1D { strength } => {
                require_1d(x)?;
                dipole(x[0], at, *strength)
            }
            SpecialSolutionKind::TravellingWave1D { amplitude, speed } => {
                require_1d(x)?;
                Ok(amplitude * (speed * speed * at + speed * x[0]).exp())
            }
            SpecialSolutionKind::BlowUp {
                amplitude,
                blowup_time,
            } => {
                if at >= *blowup_time {
                    return Err(HeatError::EvaluationPastBlowUp {
                        t: at,
                        blowup: *blowup_time,
                    });
                }
                let rem = blowup_time - at;
                let r2: f64 = x.iter().map(|v| v * v).sum();
                Ok(amplitude * rem.powf(-n / 2.0) * (r2 / (4.0 * rem)).exp())
            }
            SpecialSolutionKind::CaloricPolynomial(CaloricPolynomial::One) => Ok(1.0),
            SpecialSolutionKind::CaloricPolynomial(CaloricPolynomial::SquarePlus2Nt) => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                Ok(r2 + 2.0 * n * at)
            }
        }
    }
}

fn require_1d(x: &[f64]) -> Result<()> {
    if x.len() == 1 {
        Ok(())
    } else {
        Err(HeatError::UnsupportedDimension(x.len()))
    }
}

/// Evaluates a special solution with diffusivity 1.
pub fn special(kind: &SpecialSolutionKind, x: &[f64], t: f64) -> Result<f64> {
    kind.evaluate(x, t, Diffusivity::Unit)
}

const TIME_STEP: f64 = 1e-4;
const SPACE_STEP: f64 = 1e-3;

/// Residual `∂_t u - a Δu` by centred finite differences.
pub fn heat_residual<F>(u: F, x: &[f64], t: f64, diffusivity: Diffusivity) -> f64
where
    F: Fn(&[f64], f64) -> f64,
{
    let dt = if t > 0.0 {
        TIME_STEP.min(0.5 * t)
    } else {
        TIME_STEP
    };
    let ut = (u(x, t + dt) - u(x, t - dt)) / (2.0 * dt);
    let center = u(x, t);
    let mut lap = 0.0;
    let mut p = x.to_vec();
    for i in 0..x.len() {
        p[i] = x[i] + SPACE_STEP;
        let up = u(&p, t);
        p[i] = x[i] - SPACE_STEP;
        let um = u(&p, t);
        p[i] = x[i];
        lap += (up - 2.0 * center + um) / (SPACE_STEP * SPACE_STEP);
    }
    ut - diffusivity.value() * lap
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const U: Diffusivity = Diffusivity::Unit;

    #[test]
    fn gaussian_values() {
        assert_abs_diff_eq!(
            gaussian(&[0.0], 1.0, 1.0, &[0.0], U).unwrap(),
            0.2820948,
            epsilon = 1e-7
        );
        assert_abs_diff_eq!(
            gaussian(&[0.0], 1.0, 2.0, &[0.0], U).unwrap(),
            0.5641896,
            epsilon = 1e-7
        );
        assert_abs_diff_eq!(
            gaussian(&[0.0], 1.0, 1.0, &[0.0], Diffusivity::Half).unwrap(),
            0.3989423,
            epsilon = 1e-7
        );
        assert_eq!(
            gaussian(&[0.0], 0.0, 1.0, &[0.0], U),
            Err(HeatError::NonPositiveTime(0.0))
        );
    }

    #[test]
    fn derivative_order_zero_is_gaussian_and_odd_first_derivative() {
        let z = MultiIndex::zero(1);
        for x in [-2.0, 0.3, 1.7] {
            assert_abs_diff_eq!(
                gaussian_derivative(&[x], 1.3, &z, U).unwrap(),
                gaussian(&[x], 1.3, 1.0, &[0.0], U).unwrap(),
                epsilon = 1e-15
            );
        }
        let e = MultiIndex::unit(1, 0);
        assert_eq!(gaussian_derivative(&[0.0], 1.0, &e, U).unwrap(), 0.0);
    }

    #[test]
    fn first_derivative_matches_finite_difference_oracle() {
        // central difference on `gaussian`, step 1e-5
        let h = 1e-5;
        let g = |x: f64| gaussian(&[x], 1.0, 1.0, &[0.0], U).unwrap();
        let fd = (g(2.0 + h) - g(2.0 - h)) / (2.0 * h);
        let exact = gaussian_derivative(&[2.0], 1.0, &MultiIndex::unit(1, 0), U).unwrap();
        assert_abs_diff_eq!(exact, fd, epsilon = 1e-8);
        assert_abs_diff_eq!(exact, -0.1037769, epsilon = 1e-7);
    }

    #[test]
    fn higher_derivatives_match_nested_differences() {
        let h = 1e-3;
        for k in 1..=4usize {
            let a = MultiIndex::new(&[k - 1]).unwrap();
            let b = MultiIndex::new(&[k]).unwrap();
            for x in [-1.5, 0.4, 2.2] {
                let fd = (gaussian_derivative(&[x + h], 0.8, &a, U).unwrap()
                    - gaussian_derivative(&[x - h], 0.8, &a, U).unwrap())
                    / (2.0 * h);
                let exact = gaussian_derivative(&[x], 0.8, &b, U).unwrap();
                assert_abs_diff_eq!(exact, fd, epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn order_limits() {
        assert!(matches!(
            MultiIndex::new(&[13]),
            Err(HeatError::OrderTooHigh { .. })
        ));
        assert!(physicists_hermite(13).is_err());
        assert_eq!(physicists_hermite(3).unwrap(), &[0, -12, 0, 8]);
    }

    #[test]
    fn dipole_values_and_moments() {
        assert_eq!(dipole(0.0, 2.0, 1.0).unwrap(), 0.0);
        assert_eq!(
            dipole(1.2, 2.0, 1.0).unwrap(),
            -gaussian_derivative(&[1.2], 2.0, &MultiIndex::unit(1, 0), U).unwrap()
        );
        // ∫_0^∞ x² e^{-bx²} dx = √π / (4 b^{3/2}) gives ∫_0^∞ x D dx = 1/2
        for t in [1.0, 4.0, 16.0] {
            let b = 1.0 / (4.0 * t);
            let moment = (4.0 * PI * t).powf(-0.5) / (2.0 * t) * PI.sqrt() / (4.0 * b.powf(1.5));
            assert_abs_diff_eq!(moment, 0.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn special_solutions() {
        let sq = SpecialSolutionKind::CaloricPolynomial(CaloricPolynomial::SquarePlus2Nt);
        assert_eq!(special(&sq, &[0.0, 0.0], 1.0).unwrap(), 4.0);
        let tw = SpecialSolutionKind::TravellingWave1D {
            amplitude: 1.0,
            speed: 1.0,
        };
        assert_abs_diff_eq!(
            special(&tw, &[0.0], 1.0).unwrap(),
            std::f64::consts::E,
            epsilon = 1e-15
        );
        let bu = SpecialSolutionKind::BlowUp {
            amplitude: 1.0,
            blowup_time: 2.0,
        };
        let r = heat_residual(|x, t| special(&bu, x, t).unwrap(), &[1.0], 1.0, U);
        assert!(r.abs() < 1e-6, "{r}");
        assert!(matches!(
            special(&bu, &[0.0], 2.0),
            Err(HeatError::EvaluationPastBlowUp { .. })
        ));
        assert!(matches!(
            special(&tw, &[0.0, 1.0], 1.0),
            Err(HeatError::UnsupportedDimension(2))
        ));
    }

    #[test]
    fn residuals_of_exact_solutions() {
        let g = |x: &[f64], t: f64| gaussian(x, t, 1.0, &[0.0], U).unwrap();
        assert!(heat_residual(g, &[1.0], 1.0, U).abs() < 1e-6);
        let g2 = |x: &[f64], t: f64| gaussian(x, t, 1.0, &[0.0, 0.0], U).unwrap();
        assert!(heat_residual(g2, &[1.0, -0.5], 1.0, U).abs() < 1e-6);
        let gh = |x: &[f64], t: f64| gaussian(x, t, 1.0, &[0.0], Diffusivity::Half).unwrap();
        assert!(heat_residual(gh, &[0.7], 1.0, Diffusivity::Half).abs() < 1e-6);
        let sq = SpecialSolutionKind::CaloricPolynomial(CaloricPolynomial::SquarePlus2Nt);
        let r = heat_residual(|x, t| special(&sq, x, t).unwrap(), &[0.3, 1.1], 2.0, U);
        assert!(r.abs() < 1e-8, "{r}");
        // v = x u_x + 2t u_t with u = G_t, u_t = u_xx
        let d1 = MultiIndex::unit(1, 0);
        let d2 = MultiIndex::new(&[2]).unwrap();
        let v = |x: &[f64], t: f64| {
            x[0] * gaussian_derivative(x, t, &d1, U).unwrap()
                + 2.0 * t * gaussian_derivative(x, t, &d2, U).unwrap()
        };
        assert!(heat_residual(v, &[1.0], 1.0, U).abs() < 1e-5);
    }

    #[test]
    fn scale_invariance() {
        for &(k, x, t) in &[
            (0.5, 0.3, 1.0),
            (2.0, -1.1, 0.7),
            (3.7, 2.5, 4.0),
            (0.1, 10.0, 0.2),
        ] {
            let lhs = k * gaussian(&[k * x], k * k * t, 1.0, &[0.0], U).unwrap();
            let rhs = gaussian(&[x], t, 1.0, &[0.0], U).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn time_derivative_lower_bound() {
        // ∂_t G = ΔG ≥ -(N/2) G / t, equality at 0
        let d2 = MultiIndex::new(&[2]).unwrap();
        let t = 1.5;
        for i in 0..41 {
            let x = -5.0 + 0.25 * i as f64;
            let gt = gaussian_derivative(&[x], t, &d2, U).unwrap();
            let g = gaussian(&[x], t, 1.0, &[0.0], U).unwrap();
            assert!(gt >= -0.5 * g / t - 1e-15);
        }
        let gt0 = gaussian_derivative(&[0.0], t, &d2, U).unwrap();
        let g0 = gaussian(&[0.0], t, 1.0, &[0.0], U).unwrap();
        assert_abs_diff_eq!(gt0, -0.5 * g0 / t, epsilon = 1e-15);
    }

    #[test]
    fn multi_index_enumeration() {
        let all = MultiIndex::all_up_to(2, 2);
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], MultiIndex::zero(2));
        assert!(all.windows(2).all(|w| w[0].order() <= w[1].order()));
        assert_eq!(MultiIndex::all_up_to(3, 3).len(), 20);
        assert_eq!(MultiIndex::new(&[2, 3]).unwrap().factorial(), 12.0);
    }
}
