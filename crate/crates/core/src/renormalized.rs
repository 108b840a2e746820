//! Self-similar frames of the heat flow and their functionals.
//!
//! With `u_τ = Δu / 2`, the substitution `u(y, τ) = (1+τ)^{-N/2} v(x, t)`,
//! `x = y (1+τ)^{-1/2}`, `t = log(1+τ) / 2` gives the Fokker-Planck flow
//! `v_t = Δv + ∇·(x v)` with stationary state `G = (2π)^{-N/2} e^{-|x|²/2}`.
//! Then `w = v / G` solves the Ornstein-Uhlenbeck flow `w_t = Δw - x·∇w` and
//! `z = v / G^{1/2}` the Schrödinger form `z_t = -H z`.

use serde::{Deserialize, Serialize};

use crate::error::{HeatError, Result};
use crate::grid::{
    self, check_inverse_gauss, standard_gaussian, Diffusivity, Field, GridSpec, NormKind,
};
use crate::hermite;
use crate::semigroup::{Method, Solver};
use crate::stencil::{gradient, laplacian, RING};

/// Smallest density value that contributes to the entropy integrand.
/// Cells below this fraction of the peak are skipped in the Fisher integrand;
/// there the convolution round-off is comparable to the density itself.
pub const FISHER_REL_FLOOR: f64 = 1e-12;
pub const V_FLOOR: f64 = 1e-300;

/// Negative values below `-NEGATIVE_DENSITY_TOL · max v` are rejected.
pub const NEGATIVE_DENSITY_TOL: f64 = 1e-12;

/// Accepted deviation of a density's mass from 1.
pub const UNIT_MASS_TOL: f64 = 1e-6;

/// Default half-width of Fokker-Planck and Ornstein-Uhlenbeck boxes.
pub const OU_BOX_HALF_WIDTH: f64 = 10.0;

fn log_gaussian(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    -0.5 * x.len() as f64 * (2.0 * std::f64::consts::PI).ln() - 0.5 * r2
}

/// `V(x) = |x|²/4 - N/2`.
pub fn hamiltonian_potential(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / 4.0 - x.len() as f64 / 2.0
}

#[derive(Debug, Clone, PartialEq)]
pub enum RenormFrame {
    /// Heat time `τ`, diffusivity 1/2.
    Physical(Field),
    /// Log time `t`.
    FokkerPlanck(Field),
    OrnsteinUhlenbeck(Field),
    Hamiltonian(Field),
}

impl RenormFrame {
    pub fn field(&self) -> &Field {
        match self {
            RenormFrame::Physical(f)
            | RenormFrame::FokkerPlanck(f)
            | RenormFrame::OrnsteinUhlenbeck(f)
            | RenormFrame::Hamiltonian(f) => f,
        }
    }

    pub fn frame_time(&self) -> f64 {
        self.field().time()
    }

    fn rank(&self) -> u8 {
        match self {
            RenormFrame::Physical(_) => 0,
            RenormFrame::FokkerPlanck(_) => 1,
            RenormFrame::OrnsteinUhlenbeck(_) => 2,
            RenormFrame::Hamiltonian(_) => 3,
        }
    }

    fn step(self, up: bool) -> Result<RenormFrame> {
        Ok(match (self, up) {
            (RenormFrame::Physical(u), true) => RenormFrame::FokkerPlanck(to_fokker_planck(&u)?),
            (RenormFrame::FokkerPlanck(v), true) => RenormFrame::OrnsteinUhlenbeck(fp_to_ou(&v)?),
            (RenormFrame::OrnsteinUhlenbeck(w), true) => {
                RenormFrame::Hamiltonian(ou_to_hamiltonian(&w)?)
            }
            (RenormFrame::FokkerPlanck(v), false) => RenormFrame::Physical(from_fokker_planck(&v)?),
            (RenormFrame::OrnsteinUhlenbeck(w), false) => RenormFrame::FokkerPlanck(ou_to_fp(&w)?),
            (RenormFrame::Hamiltonian(z), false) => {
                RenormFrame::OrnsteinUhlenbeck(hamiltonian_to_ou(&z)?)
            }
            (f, _) => f,
        })
    }

    /// Converts to the frame with the same name as `target`.
    pub fn convert_like(self, target: &RenormFrame) -> Result<RenormFrame> {
        let mut f = self;
        while f.rank() != target.rank() {
            let up = f.rank() < target.rank();
            f = f.step(up)?;
        }
        Ok(f)
    }
}

/// Physical field at heat time `τ` to the Fokker-Planck frame at
/// `t = log(1+τ)/2`.
///
/// The target lattice is the source lattice divided by `s = (1+τ)^{1/2}`, so
/// every `s x_i` is a source node and no interpolation is needed.
pub fn to_fokker_planck(u: &Field) -> Result<Field> {
    if u.diffusivity() != Diffusivity::Half {
        return Err(HeatError::DiffusivityMismatch);
    }
    let tau = u.time();
    let s = (1.0 + tau).sqrt();
    let grid = u.grid().scaled(1.0 / s)?;
    let sn = s.powi(grid.dim() as i32);
    let vals = u.values().iter().map(|v| sn * v).collect();
    Field::from_values(grid, vals, 0.5 * (1.0 + tau).ln(), Diffusivity::Half)
}

/// Inverse of [`to_fokker_planck`].
pub fn from_fokker_planck(v: &Field) -> Result<Field> {
    let t = v.time();
    let s = t.exp();
    let grid = v.grid().scaled(s)?;
    let sn = s.powi(grid.dim() as i32);
    let vals = v.values().iter().map(|x| x / sn).collect();
    Field::from_values(grid, vals, (2.0 * t).exp_m1(), Diffusivity::Half)
}

/// `w = v / G`.
pub fn fp_to_ou(v: &Field) -> Result<Field> {
    check_inverse_gauss(v.grid())?;
    v.map_with_nodes(|x, val| val / standard_gaussian(x))
}

/// `v = G w`.
pub fn ou_to_fp(w: &Field) -> Result<Field> {
    w.map_with_nodes(|x, val| val * standard_gaussian(x))
}

/// `z = G^{1/2} w`.
pub fn ou_to_hamiltonian(w: &Field) -> Result<Field> {
    w.map_with_nodes(|x, val| val * standard_gaussian(x).sqrt())
}

/// `w = z / G^{1/2}`.
pub fn hamiltonian_to_ou(z: &Field) -> Result<Field> {
    check_inverse_gauss(z.grid())?;
    z.map_with_nodes(|x, val| val / standard_gaussian(x).sqrt())
}

fn with_values(f: &Field, vals: Vec<f64>) -> Result<Field> {
    Field::from_values(*f.grid(), vals, f.time(), f.diffusivity())
}

fn x_dot_grad(f: &Field) -> Vec<f64> {
    let grid = f.grid();
    let dim = grid.dim();
    let grads: Vec<Vec<f64>> = (0..dim).map(|a| gradient(f, a)).collect();
    (0..grid.len())
        .map(|i| {
            let p = grid.node(i);
            (0..dim).map(|a| p[a] * grads[a][i]).sum()
        })
        .collect()
}

/// `L_1 v = Δv + x·∇v + N v` (zero on the boundary ring).
pub fn fp_operator(v: &Field) -> Result<Field> {
    let grid = *v.grid();
    let lap = laplacian(v);
    let adv = x_dot_grad(v);
    let n = grid.dim() as f64;
    let vals = (0..grid.len())
        .map(|i| {
            if grid.is_interior(i, RING) {
                lap[i] + adv[i] + n * v.values()[i]
            } else {
                0.0
            }
        })
        .collect();
    with_values(v, vals)
}

/// `L_2 w = Δw - x·∇w` (zero on the boundary ring).
pub fn ou_operator(w: &Field) -> Result<Field> {
    let lap = laplacian(w);
    let adv = x_dot_grad(w);
    with_values(w, lap.iter().zip(&adv).map(|(l, a)| l - a).collect())
}

/// `H z = -Δz + V z` (zero on the boundary ring).
pub fn hamiltonian(z: &Field) -> Result<Field> {
    let grid = *z.grid();
    let dim = grid.dim();
    let lap = laplacian(z);
    let vals = (0..grid.len())
        .map(|i| {
            if grid.is_interior(i, RING) {
                let p = grid.node(i);
                -lap[i] + hamiltonian_potential(&p[..dim]) * z.values()[i]
            } else {
                0.0
            }
        })
        .collect();
    with_values(z, vals)
}

/// `∫ f g G dx` over the nodes off the boundary ring.
pub fn mu_inner_interior(f: &[f64], g: &[f64], grid: &GridSpec) -> f64 {
    let dim = grid.dim();
    grid.cell_volume()
        * grid::indexed_sum(f.len(), |i| {
            if grid.is_interior(i, RING) {
                let p = grid.node(i);
                f[i] * g[i] * standard_gaussian(&p[..dim])
            } else {
                0.0
            }
        })
}

/// `∫ ∇f·∇g dμ` over the interior.
pub fn dirichlet_form(f: &Field, g: &Field) -> Result<f64> {
    if f.grid() != g.grid() {
        return Err(HeatError::GridMismatch);
    }
    let grid = f.grid();
    Ok((0..grid.dim())
        .map(|a| mu_inner_interior(&gradient(f, a), &gradient(g, a), grid))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub defect: f64,
    pub dirichlet_form: f64,
    pub dirichlet_form_gap: f64,
}

/// Symmetry of `L_2` in `L²(dμ)` and its Dirichlet-form identity.
pub fn ou_symmetry_defect(w1: &Field, w2: &Field) -> Result<SymmetryReport> {
    if w1.grid() != w2.grid() {
        return Err(HeatError::GridMismatch);
    }
    let grid = w1.grid();
    let l1 = ou_operator(w1)?;
    let l2 = ou_operator(w2)?;
    let a = mu_inner_interior(l1.values(), w2.values(), grid);
    let b = mu_inner_interior(w1.values(), l2.values(), grid);
    let form = dirichlet_form(w1, w2)?;
    Ok(SymmetryReport {
        defect: (a - b).abs(),
        dirichlet_form: form,
        dirichlet_form_gap: (a + form).abs(),
    })
}

/// `F(w) = ∫ |w - 1|² dμ`.
pub fn ou_energy(w: &Field) -> f64 {
    let grid = w.grid();
    let dim = grid.dim();
    let v = w.values();
    grid.cell_volume()
        * grid::indexed_sum(v.len(), |i| {
            let p = grid.node(i);
            (v[i] - 1.0).powi(2) * standard_gaussian(&p[..dim])
        })
}

/// `2 ∫ |∇w|² dμ`, the dissipation of `F`.
pub fn ou_dissipation(w: &Field) -> Result<f64> {
    Ok(2.0 * dirichlet_form(w, w)?)
}

/// `∫ |∇w|² dμ - Var_μ(w)`; nonnegative by the Gaussian Poincaré inequality.
/// The mean is taken with respect to μ restricted to the interior.
pub fn gaussian_poincare_gap(w: &Field) -> Result<f64> {
    let grid = w.grid();
    let ones = vec![1.0; grid.len()];
    let mass = mu_inner_interior(&ones, &ones, grid);
    let mean = mu_inner_interior(w.values(), &ones, grid) / mass;
    let centered: Vec<f64> = w.values().iter().map(|v| v - mean).collect();
    let var = mu_inner_interior(&centered, &centered, grid);
    Ok(dirichlet_form(w, w)? - var)
}

/// Padding factor for the physical box so that the Fokker-Planck box at
/// log time `t` still covers the input box.
fn padding_factor(t: f64) -> usize {
    (1.25 * t.exp()).ceil().max(1.0) as usize
}

/// Embeds `f` in a box `m` times larger with the same spacing, padding with 0.
pub fn embed_zero_padded(f: &Field, m: usize) -> Result<Field> {
    let g = f.grid();
    let n = g.points_per_axis();
    let big = GridSpec::new(g.dim(), g.half_width() * m as f64, n * m)?;
    let off = (m - 1) * n / 2;
    let mut vals = vec![0.0; big.len()];
    for (i, v) in f.values().iter().enumerate() {
        let idx = g.multi_index(i);
        let shifted: Vec<usize> = idx[..g.dim()].iter().map(|k| k + off).collect();
        vals[big.flat_index(&shifted)] = *v;
    }
    Field::from_values(big, vals, f.time(), f.diffusivity())
}

/// Fokker-Planck evolution from log time 0 to `t`, computed as a heat flow in
/// the physical frame and mapped back. The result lives on a finer lattice
/// cropped to the input box.
pub fn fp_evolve(v0: &Field, t: f64) -> Result<Field> {
    if t == 0.0 {
        return Ok(v0.clone());
    }
    if !(t > 0.0) {
        return Err(HeatError::NonPositiveTime(t));
    }
    let m = padding_factor(t).next_power_of_two();
    let u0 = embed_zero_padded(
        &v0.clone()
            .with_time(0.0)
            .with_diffusivity(Diffusivity::Half),
        m,
    )?;
    let method = if u0.grid().is_power_of_two() {
        Method::Fft
    } else {
        Method::Direct
    };
    let tau = (2.0 * t).exp_m1();
    let solver = Solver::new(*u0.grid())
        .method(method)
        .diffusivity(Diffusivity::Half);
    let u = solver.evolve_field(&u0, tau)?;
    to_fokker_planck(&u)?.cropped_to(v0.grid().half_width())
}

/// Ornstein-Uhlenbeck evolution through the Fokker-Planck pipeline.
pub fn ou_evolve(w0: &Field, t: f64) -> Result<Field> {
    let v = fp_evolve(&ou_to_fp(w0)?, t)?;
    fp_to_ou(&v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OuEvolution {
    Pde,
    Spectral { k_max: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EntropySeries {
    pub times: Vec<f64>,
    pub entropy: Vec<Option<f64>>,
    pub fisher: Vec<Option<f64>>,
    pub ou_energy: Vec<f64>,
    pub dissipation: Vec<f64>,
}

impl EntropySeries {
    /// Central differences `(t_i, dE/dt, I_i)` at interior times.
    pub fn dissipation_residual(&self) -> Vec<(f64, f64, f64)> {
        let n = self.times.len();
        (1..n.saturating_sub(1))
            .filter_map(|i| {
                let (e0, e1, ii) = (self.entropy[i - 1]?, self.entropy[i + 1]?, self.fisher[i]?);
                let dt = self.times[i + 1] - self.times[i - 1];
                Some((self.times[i], (e1 - e0) / dt, ii))
            })
            .collect()
    }
}

fn check_series_times(times: &[f64]) -> Result<()> {
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0)) {
        return Err(HeatError::NonPositiveTime(*t));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HeatError::InvalidArgument(
            "times must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `F(t)` and its dissipation for the OU flow from `w0` (unit μ-mass).
pub fn ou_decay_series(w0: &Field, times: &[f64], evolution: OuEvolution) -> Result<EntropySeries> {
    check_series_times(times)?;
    let ones = vec![1.0; w0.grid().len()];
    let m = hermite::mu_inner(w0, &with_values(w0, ones)?)?;
    if (m - 1.0).abs() > UNIT_MASS_TOL {
        return Err(HeatError::MassMismatch {
            expected: 1.0,
            found: m,
        });
    }
    let mut out = EntropySeries::default();
    match evolution {
        OuEvolution::Pde => {
            for &t in times {
                let w = ou_evolve(w0, t)?;
                out.ou_energy.push(ou_energy(&w));
                out.dissipation.push(ou_dissipation(&w)?);
            }
        }
        OuEvolution::Spectral { k_max } => {
            let c = hermite::expand(w0, k_max)?;
            for &t in times {
                let ct = c.evolve(t)?;
                out.ou_energy.push(ct.ou_energy());
                out.dissipation.push(ct.ou_dissipation());
            }
        }
    }
    out.times = times.to_vec();
    out.entropy = vec![None; times.len()];
    out.fisher = vec![None; times.len()];
    Ok(out)
}

fn check_density(v: &Field) -> Result<()> {
    let max = v.max_abs();
    if let Some((node, &value)) = v
        .values()
        .iter()
        .enumerate()
        .find(|(_, x)| **x < -NEGATIVE_DENSITY_TOL * max)
    {
        return Err(HeatError::NegativeDensity { node, value });
    }
    let m = grid::quadrature(v, None)?;
    if (m - 1.0).abs() > UNIT_MASS_TOL {
        return Err(HeatError::MassMismatch {
            expected: 1.0,
            found: m,
        });
    }
    Ok(())
}

/// `E(v) = ∫ v log(v/G) dx`.
pub fn entropy(v: &Field) -> Result<f64> {
    check_density(v)?;
    let grid = v.grid();
    let dim = grid.dim();
    let vals = v.values();
    Ok(grid.cell_volume()
        * grid::indexed_sum(vals.len(), |i| {
            let x = vals[i];
            if x > V_FLOOR {
                let p = grid.node(i);
                x * (x.ln() - log_gaussian(&p[..dim]))
            } else {
                0.0
            }
        }))
}

/// `I(v) = ∫ v |∇ log(v/G)|² dx = ∫ |∇v + x v|² / v dx` over the interior.
pub fn fisher(v: &Field) -> Result<f64> {
    check_density(v)?;
    let grid = v.grid();
    let dim = grid.dim();
    let vals = v.values();
    let grads: Vec<Vec<f64>> = (0..dim).map(|a| gradient(v, a)).collect();
    let floor = V_FLOOR.max(FISHER_REL_FLOOR * v.max_abs());
    Ok(grid.cell_volume()
        * grid::indexed_sum(vals.len(), |i| {
            let x = vals[i];
            if x > floor && grid.is_interior(i, RING) {
                let p = grid.node(i);
                (0..dim)
                    .map(|a| (grads[a][i] + p[a] * x).powi(2))
                    .sum::<f64>()
                    / x
            } else {
                0.0
            }
        }))
}

/// `I/2 - E`, nonnegative by the logarithmic Sobolev inequality.
pub fn logsob_gap(v: &Field) -> Result<f64> {
    Ok(0.5 * fisher(v)? - entropy(v)?)
}

/// `2E - ‖v - G‖_1²`, nonnegative by the Csiszár-Kullback inequality.
pub fn ck_gap(v: &Field) -> Result<f64> {
    let e = entropy(v)?;
    let grid = v.grid();
    let dim = grid.dim();
    let vals = v.values();
    let l1 = grid.cell_volume()
        * grid::indexed_sum(vals.len(), |i| {
            let p = grid.node(i);
            (vals[i] - standard_gaussian(&p[..dim])).abs()
        });
    Ok(2.0 * e - l1 * l1)
}

/// `∫ (v - G)² / G dx`, the OU energy of `v / G`.
fn fp_energy(v: &Field) -> Result<f64> {
    Ok(ou_energy(&fp_to_ou(v)?))
}

/// Entropy, Fisher information and OU energy along the Fokker-Planck flow.
pub fn entropy_decay_series(v0: &Field, times: &[f64]) -> Result<EntropySeries> {
    check_series_times(times)?;
    check_density(v0)?;
    let mut out = EntropySeries::default();
    for &t in times {
        let v = fp_evolve(v0, t)?;
        let i = fisher(&v)?;
        out.entropy.push(Some(entropy(&v)?));
        out.fisher.push(Some(i));
        out.ou_energy.push(fp_energy(&v)?);
        out.dissipation.push(i);
    }
    out.times = times.to_vec();
    Ok(out)
}

/// Interior sup norm, the norm used for operator residuals.
pub fn interior_sup(f: &Field) -> Result<f64> {
    grid::interior_norm(f, NormKind::SUP, RING)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, sample};

    fn ou_grid() -> GridSpec {
        make_grid(1, OU_BOX_HALF_WIDTH, 1024).unwrap()
    }

    fn on(grid: &GridSpec, f: impl Fn(&[f64]) -> f64 + Sync + Send) -> Field {
        sample(grid, f, 0.0, Diffusivity::Half).unwrap()
    }

    #[test]
    fn operators_on_eigenfunctions() {
        let g = ou_grid();
        let gauss = on(&g, standard_gaussian);
        assert!(interior_sup(&fp_operator(&gauss).unwrap()).unwrap() < 1e-6);
        let xg = on(&g, |x| x[0] * standard_gaussian(x));
        let r = fp_operator(&xg).unwrap().add(&xg).unwrap();
        assert!(interior_sup(&r).unwrap() < 1e-6);
        let x2g = on(&g, |x| (x[0] * x[0] - 1.0) * standard_gaussian(x));
        let r = fp_operator(&x2g).unwrap().combine(1.0, &x2g, 2.0).unwrap();
        assert!(interior_sup(&r).unwrap() < 1e-5);

        let one = on(&g, |_| 1.0);
        assert!(interior_sup(&ou_operator(&one).unwrap()).unwrap() < 1e-12);
        let x = on(&g, |x| x[0]);
        assert!(interior_sup(&ou_operator(&x).unwrap().add(&x).unwrap()).unwrap() < 1e-9);
        let h2 = on(&g, |x| x[0] * x[0] - 1.0);
        let r = ou_operator(&h2).unwrap().combine(1.0, &h2, 2.0).unwrap();
        assert!(interior_sup(&r).unwrap() < 1e-5);
    }

    #[test]
    fn hamiltonian_ground_state() {
        assert_eq!(hamiltonian_potential(&[0.0, 0.0]), -1.0);
        let g = ou_grid();
        let z = on(&g, |x| (-x[0] * x[0] / 4.0).exp());
        assert!(interior_sup(&hamiltonian(&z).unwrap()).unwrap() < 1e-6);
    }

    #[test]
    fn symmetry_and_dirichlet_form() {
        let g = ou_grid();
        let x = on(&g, |x| x[0]);
        let x2 = on(&g, |x| x[0] * x[0]);
        let one = on(&g, |_| 1.0);
        assert!(ou_symmetry_defect(&x, &x2).unwrap().defect < 1e-8);
        let r = ou_symmetry_defect(&one, &x2).unwrap();
        assert!(r.defect < 1e-10 && r.dirichlet_form_gap < 1e-10);
        let r = ou_symmetry_defect(&x, &x).unwrap();
        assert!((r.dirichlet_form - 1.0).abs() < 1e-10);
        assert!(r.dirichlet_form_gap < 1e-10);
    }

    #[test]
    fn norm_equivalence_across_frames() {
        let g = ou_grid();
        let w1 = on(&g, |x| 1.0 + x[0]);
        let w2 = on(&g, |x| x[0] * x[0] - 0.5 * x[0]);
        let (v1, v2) = (ou_to_fp(&w1).unwrap(), ou_to_fp(&w2).unwrap());
        let (z1, z2) = (
            ou_to_hamiltonian(&w1).unwrap(),
            ou_to_hamiltonian(&w2).unwrap(),
        );
        let h = g.spacing();
        let dot = |a: &Field, b: &Field, w: &dyn Fn(&[f64]) -> f64| {
            h * grid::compensated_sum(
                (0..g.len()).map(|i| a.values()[i] * b.values()[i] * w(&[g.coord(i)])),
            )
        };
        let a = dot(&v1, &v2, &|x| 1.0 / standard_gaussian(x));
        let b = dot(&z1, &z2, &|_| 1.0);
        let c = dot(&w1, &w2, &standard_gaussian);
        assert!((a - b).abs() < 1e-10 && (b - c).abs() < 1e-10);
    }

    #[test]
    fn stationary_solution_in_the_fp_frame() {
        let g = make_grid(1, 20.0, 512).unwrap();
        for tau in [0.0, 0.5, 3.0] {
            let u = sample(
                &g,
                |y| {
                    (2.0 * std::f64::consts::PI * (1.0 + tau)).powf(-0.5)
                        * (-y[0] * y[0] / (2.0 * (1.0 + tau))).exp()
                },
                tau,
                Diffusivity::Half,
            )
            .unwrap();
            let v = to_fokker_planck(&u).unwrap();
            assert!((v.time() - 0.5 * (1.0 + tau).ln()).abs() < 1e-15);
            let gv = on(v.grid(), standard_gaussian);
            assert!(v.sub(&gv.with_time(v.time())).unwrap().max_abs() < 1e-15);
            let mu = grid::quadrature(&u, None).unwrap();
            let mv = grid::quadrature(&v, None).unwrap();
            assert!((mu - mv).abs() < 1e-10);
        }
        let unit = sample(&g, |_| 0.0, 1.0, Diffusivity::Unit).unwrap();
        assert_eq!(to_fokker_planck(&unit), Err(HeatError::DiffusivityMismatch));
    }

    #[test]
    fn frame_round_trip() {
        let g = make_grid(1, 12.0, 256).unwrap();
        let u = sample(
            &g,
            |y| (-(y[0] - 0.5).powi(2) / 3.0).exp() * (1.0 + 0.1 * y[0]),
            1.0,
            Diffusivity::Half,
        )
        .unwrap();
        let start = RenormFrame::Physical(u.clone());
        let ham = start
            .convert_like(&RenormFrame::Hamiltonian(u.clone()))
            .unwrap();
        assert!(matches!(ham, RenormFrame::Hamiltonian(_)));
        let back = ham.convert_like(&RenormFrame::Physical(u.clone())).unwrap();
        let d = back.field().sub(&u).unwrap().max_abs();
        assert!(d < 1e-10, "{d}");
        assert!((back.frame_time() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn inverse_gauss_guard_trips() {
        let g = make_grid(1, 30.0, 256).unwrap();
        let v = on(&g, standard_gaussian);
        assert!(matches!(
            fp_to_ou(&v),
            Err(HeatError::OverflowInInverseGaussWeight { .. })
        ));
    }

    #[test]
    fn poincare_gap_examples() {
        let g = ou_grid();
        assert!(gaussian_poincare_gap(&on(&g, |x| x[0])).unwrap().abs() < 1e-6);
        assert!(gaussian_poincare_gap(&on(&g, |_| 3.0)).unwrap().abs() < 1e-15);
        let gap = gaussian_poincare_gap(&on(&g, |x| x[0] * x[0])).unwrap();
        assert!((gap - 2.0).abs() < 1e-6);
    }

    #[test]
    fn entropy_of_shifted_gaussians() {
        let g = ou_grid();
        let gv = on(&g, standard_gaussian);
        assert!(entropy(&gv).unwrap().abs() < 1e-12);
        assert!(fisher(&gv).unwrap().abs() < 1e-10);
        for h in [0.5, 1.0] {
            let v = on(&g, |x| standard_gaussian(&[x[0] - h]));
            let e = entropy(&v).unwrap();
            let i = fisher(&v).unwrap();
            assert!((e - h * h / 2.0).abs() < 1e-9);
            assert!((i - h * h).abs() < 1e-6);
            assert!(logsob_gap(&v).unwrap().abs() < 1e-6);
            assert!(ck_gap(&v).unwrap() >= 0.0);
        }
        let neg = on(&g, |x| standard_gaussian(x) * (1.0 - 0.5 * x[0]));
        assert!(matches!(
            entropy(&neg),
            Err(HeatError::NegativeDensity { .. })
        ));
        let heavy = gv.scale(2.0);
        assert!(matches!(
            entropy(&heavy),
            Err(HeatError::MassMismatch { .. })
        ));
    }

    #[test]
    fn padding_keeps_values() {
        let g = make_grid(1, 10.0, 16).unwrap();
        let f = on(&g, |x| x[0]);
        let p = embed_zero_padded(&f, 4).unwrap();
        assert_eq!(p.grid().points_per_axis(), 64);
        let (c, m) = p.grid().cropped_to(10.0).unwrap();
        assert_eq!(m, 24);
        assert_eq!(c, g);
        assert_eq!(p.cropped_to(10.0).unwrap().values(), f.values());
    }

    #[test]
    fn ou_decay_of_first_mode() {
        let g = make_grid(1, OU_BOX_HALF_WIDTH, 256).unwrap();
        let w0 = on(&g, |x| 1.0 + x[0]);
        let times = [0.0, 0.5, 1.0, 2.0];
        let spec = ou_decay_series(&w0, &times, OuEvolution::Spectral { k_max: 4 }).unwrap();
        let pde = ou_decay_series(&w0, &times, OuEvolution::Pde).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let exact = (-2.0 * t).exp();
            assert!((spec.ou_energy[i] - exact).abs() < 1e-10 * exact);
            assert!(
                (pde.ou_energy[i] - exact).abs() < 1e-2 * exact,
                "t={t} {}",
                pde.ou_energy[i]
            );
        }
        let bad = on(&g, |x| 2.0 + x[0]);
        assert!(matches!(
            ou_decay_series(&bad, &times, OuEvolution::Pde),
            Err(HeatError::MassMismatch { .. })
        ));
    }

    #[test]
    fn shifted_gaussian_entropy_decay() {
        let g = make_grid(1, OU_BOX_HALF_WIDTH, 512).unwrap();
        let v0 = on(&g, |x| standard_gaussian(&[x[0] - 1.0]));
        let s = entropy_decay_series(&v0, &[0.0, 0.5, 1.0]).unwrap();
        for (t, e) in s.times.iter().zip(&s.entropy) {
            assert!(
                (e.unwrap() - 0.5 * (-2.0 * t).exp()).abs() < 1e-6,
                "t={t} {e:?}"
            );
        }
    }
}
