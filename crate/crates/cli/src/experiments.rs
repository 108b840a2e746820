//! The named experiments.

use std::path::PathBuf;
use std::time::Instant;

use heatlab_core::asymptotics::{
    attractor_error, build_counterexample, dipole_error, fit_rate, halfline_mass_series,
    mixing_error, scaling_experiment, sign_change_front, smoothing_ratios, tail_profile,
    AttractorSpec, MomentTable,
};
use heatlab_core::diagnostics::{conservation_report, moments};
use heatlab_core::grid::{interior_norm, quadrature};
use heatlab_core::hermite::{
    hermite_1d, hermite_multi, hermite_rodrigues, mu_inner, required_half_width,
};
use heatlab_core::kernels::MultiIndex;
use heatlab_core::regression::fit_line;
use heatlab_core::renormalized::{ck_gap, entropy_decay_series, fp_evolve, ou_operator};
use heatlab_core::stencil::RING;
use heatlab_core::{BoundaryKind, Diffusivity, Field, HeatError, InitialData, NormKind, Solver};

use crate::config::{Experiment, Settings};
use crate::data::{DataSpec, DataTerm};
use crate::error::{CliError, CliResult};
use crate::output::{
    entropy_table, error_rows, error_table, fmt_f64, Check, EntropyRow, FitEntry, Report,
    SeriesEntry, Stage, Table, REPORT_SCHEMA,
};

struct Run<'a> {
    s: &'a Settings,
    tables: Vec<(String, Table)>,
    fits: Vec<FitEntry>,
    checks: Vec<Check>,
    stages: Vec<Stage>,
}

impl<'a> Run<'a> {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> CliResult<T>) -> CliResult<T> {
        let start = Instant::now();
        let out = f(self);
        self.stages.push(Stage {
            name: name.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    fn emit(&mut self, name: &str, table: Table) {
        self.tables.push((name.to_string(), table));
    }

    fn check(&mut self, c: Check) {
        if !c.passed {
            log::warn!("check {} failed: value {}", c.name, c.value);
        }
        self.checks.push(c);
    }

    fn tol(&self, key: &str) -> f64 {
        self.s.tol(key)
    }

    fn solver(&self) -> CliResult<Solver> {
        Ok(Solver::new(self.s.grid_spec()?).method(self.s.method()))
    }

    fn data_spec(&self, which: Option<&String>, key: &str) -> CliResult<DataSpec> {
        let text = which
            .ok_or_else(|| CliError::config(format!("{} needs '{key}'", self.s.experiment)))?;
        DataSpec::parse(text)
    }

    fn data(&self, diffusivity: Diffusivity) -> CliResult<InitialData> {
        self.data_spec(self.s.data.as_ref(), "data")?.realize(
            &self.s.grid_spec()?,
            diffusivity,
            self.s.perturbation,
            self.s.seed,
        )
    }
}

pub fn run(settings: &Settings) -> CliResult<Report> {
    std::fs::create_dir_all(&settings.out).map_err(|e| CliError::io(&settings.out, e))?;
    let mut r = Run {
        s: settings,
        tables: Vec::new(),
        fits: Vec::new(),
        checks: Vec::new(),
        stages: Vec::new(),
    };
    match settings.experiment {
        Experiment::Conserve => conserve(&mut r)?,
        Experiment::Rates => rates(&mut r)?,
        Experiment::Dipole => dipole(&mut r)?,
        Experiment::Scaling => scaling(&mut r)?,
        Experiment::Mixing => mixing(&mut r)?,
        Experiment::Spectrum => spectrum(&mut r)?,
        Experiment::Entropy => entropy(&mut r)?,
        Experiment::Tails => tails(&mut r)?,
        Experiment::Front => front(&mut r)?,
        Experiment::Counterexample => counterexample(&mut r)?,
        Experiment::Smoothing => smoothing(&mut r)?,
    }
    let start = Instant::now();
    let mut series = Vec::new();
    for (name, table) in &r.tables {
        let path: PathBuf = settings
            .out
            .join(format!("{}_{name}.csv", settings.experiment));
        table.write(&path)?;
        series.push(SeriesEntry {
            name: name.clone(),
            path,
            rows: table.rows.len(),
        });
    }
    r.stages.push(Stage {
        name: "write".into(),
        seconds: start.elapsed().as_secs_f64(),
    });
    let passed = r.checks.iter().all(|c| c.passed);
    let report = Report {
        schema: REPORT_SCHEMA,
        experiment: settings.experiment.to_string(),
        config: settings.clone(),
        threads: heatlab_core::par::current_threads(),
        series,
        fits: r.fits,
        checks: r.checks,
        passed,
        stages: r.stages,
    };
    report.write(
        &settings
            .out
            .join(format!("{}_summary.json", settings.experiment)),
    )?;
    Ok(report)
}

fn conserve(r: &mut Run) -> CliResult<()> {
    let times = r.s.fit_times()?.to_vec();
    let solver = r.solver()?;
    let data = r.data(Diffusivity::Unit)?;
    let fields = r.stage("evolve", |_| {
        let u0 = solver.realize(&data)?.with_time(0.0);
        let mut fields = vec![u0.clone()];
        for &t in &times {
            fields.push(solver.evolve_field(&u0, t)?);
        }
        Ok(fields)
    })?;
    let dim = solver.grid().dim();
    let mut header = vec!["t".to_string(), "mass".to_string()];
    header.extend((1..=dim).map(|a| format!("first_moment_{a}")));
    header.push("second_moment".into());
    let mut table = Table {
        header,
        rows: Vec::new(),
    };
    let mut ts = Vec::new();
    let mut n2 = Vec::new();
    for f in &fields {
        let m = moments(f);
        let mut row = vec![fmt_f64(f.time()), fmt_f64(m.mass)];
        row.extend(m.first_moment.iter().map(|v| fmt_f64(*v)));
        row.push(fmt_f64(m.second_moment));
        table.push(row);
        ts.push(f.time());
        n2.push(m.second_moment);
    }
    r.emit("moments", table);
    let report = conservation_report(&fields)?;
    let fit = fit_line(&ts, &n2)?;
    r.fits.push(FitEntry::new("second_moment_vs_t", &fit));
    let target = 2.0 * dim as f64;
    r.check(Check::at_most(
        "mass_drift",
        report.mass_drift,
        r.tol("mass_drift"),
    ));
    r.check(Check::at_most(
        "first_moment_drift",
        report.first_moment_drift,
        r.tol("first_moment_drift"),
    ));
    r.check(Check::within(
        "second_moment_slope",
        report.second_moment_slope,
        target,
        r.tol("second_moment_slope_rtol") * target,
    ));
    Ok(())
}

fn parse_attractor(text: &str, u0: &Field) -> CliResult<AttractorSpec> {
    let mass = quadrature(u0, None)?;
    let (kind, arg) = text.split_once(':').unwrap_or((text, ""));
    let arg_f64 = || crate::config::parse_f64(arg);
    Ok(match kind {
        "gaussian" => AttractorSpec::Gaussian { mass },
        "timeshift" => AttractorSpec::GaussianTimeShift {
            mass,
            t0: arg_f64()?,
        },
        "centered" => AttractorSpec::GaussianCentered {
            mass,
            center: moments(u0)
                .center_of_mass
                .ok_or_else(|| CliError::config("centered attractor needs nonzero mass"))?,
        },
        "corrector" => {
            let k: usize = arg.parse().map_err(|_| {
                CliError::config(format!("corrector order '{arg}' is not an integer"))
            })?;
            AttractorSpec::Corrector {
                order: k,
                moments: MomentTable::from_field(u0, k)?,
            }
        }
        _ => return Err(CliError::config(format!("unknown attractor '{text}'"))),
    })
}

fn error_series_checks(
    r: &mut Run,
    name: &str,
    series: &heatlab_core::asymptotics::ErrorSeries,
) -> CliResult<()> {
    r.emit(name, error_table(&error_rows(series)));
    let fit = fit_rate(series, None)?;
    r.fits.push(FitEntry::new(format!("{name}_slope"), &fit));
    r.check(Check::within(
        format!("{name}_slope"),
        fit.slope,
        r.tol("expected_slope"),
        r.tol("slope_tol"),
    ));
    Ok(())
}

fn rates(r: &mut Run) -> CliResult<()> {
    let times = r.s.fit_times()?.to_vec();
    let solver = r.solver()?;
    let data = r.data(Diffusivity::Unit)?;
    let u0 = solver.realize(&data)?;
    let attractor = parse_attractor(r.s.attractor.as_deref().unwrap_or("gaussian"), &u0)?;
    for kind in r.s.norm_kinds() {
        let series = r.stage(&format!("error_{}", kind.label()), |_| {
            Ok(attractor_error(
                &solver,
                &data,
                &attractor,
                kind,
                &times,
                BoundaryKind::WholeSpace,
            )?)
        })?;
        error_series_checks(r, &kind.label(), &series)?;
    }
    Ok(())
}

fn dipole(r: &mut Run) -> CliResult<()> {
    let times = r.s.fit_times()?.to_vec();
    let solver = r.solver()?;
    let data = r.data(Diffusivity::Unit)?;
    for kind in r.s.norm_kinds() {
        let series = r.stage(&format!("error_{}", kind.label()), |_| {
            Ok(dipole_error(&solver, &data, &times, kind)?)
        })?;
        error_series_checks(r, &kind.label(), &series)?;
    }
    let (dirichlet, neumann) = r.stage("halfline_mass", |_| {
        Ok((
            halfline_mass_series(&solver, &data, BoundaryKind::HalfLineDirichlet, &times)?,
            halfline_mass_series(&solver, &data, BoundaryKind::HalfLineNeumann, &times)?,
        ))
    })?;
    let mut table = Table::new(&["t", "dirichlet_mass", "neumann_mass"]);
    for i in 0..times.len() {
        table.push(vec![
            fmt_f64(times[i]),
            fmt_f64(dirichlet[i]),
            fmt_f64(neumann[i]),
        ]);
    }
    r.emit("mass", table);
    if dirichlet.iter().any(|m| *m <= 0.0) {
        return Err(CliError::NumericalGuard(HeatError::NonPositiveField(0.0)));
    }
    let lt: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let lm: Vec<f64> = dirichlet.iter().map(|m| m.ln()).collect();
    let fit = fit_line(&lt, &lm)?;
    r.fits.push(FitEntry::new("dirichlet_mass_slope", &fit));
    r.check(Check::within(
        "dirichlet_mass_slope",
        fit.slope,
        r.tol("expected_mass_slope"),
        r.tol("mass_slope_tol"),
    ));
    let m0 = quadrature(&solver.realize(&data)?, None)?;
    let drift = neumann.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max);
    r.check(Check::at_most(
        "neumann_mass_drift",
        drift,
        r.tol("neumann_mass_drift"),
    ));
    Ok(())
}

fn scaling(r: &mut Run) -> CliResult<()> {
    let solver = r.solver()?;
    let data = r.data(Diffusivity::Unit)?;
    let t =
        r.s.target_grid
            .ok_or_else(|| CliError::config("scaling needs 'target_grid'"))?;
    let target = heatlab_core::make_grid(t.dim, t.half_width, t.n)?;
    let ks =
        r.s.ks
            .clone()
            .ok_or_else(|| CliError::config("scaling needs 'ks'"))?;
    let pts = r.stage("rescale", |_| {
        Ok(scaling_experiment(&solver, &data, &ks, &target)?)
    })?;
    let mut table = Table::new(&[
        "k",
        "sup_distance",
        "l1_distance",
        "renormalized_sup_error",
        "renormalized_l1_error",
    ]);
    for p in &pts {
        table.push(vec![
            fmt_f64(p.k),
            fmt_f64(p.sup_distance),
            fmt_f64(p.l1_distance),
            fmt_f64(p.renormalized_sup_error),
            fmt_f64(p.renormalized_l1_error),
        ]);
    }
    r.emit("distances", table);
    let increment = pts
        .windows(2)
        .map(|w| w[1].sup_distance - w[0].sup_distance)
        .fold(f64::NEG_INFINITY, f64::max);
    if pts.len() >= 2 {
        r.check(Check::at_most("sup_distance_max_increment", increment, 0.0));
    }
    let gap = pts
        .iter()
        .map(|p| {
            (p.sup_distance - p.renormalized_sup_error)
                .abs()
                .max((p.l1_distance - p.renormalized_l1_error).abs())
        })
        .fold(0.0, f64::max);
    r.check(Check::at_most(
        "scaling_identity_gap",
        gap,
        r.tol("identity_tol"),
    ));
    Ok(())
}

fn mixing(r: &mut Run) -> CliResult<()> {
    let times = r.s.fit_times()?.to_vec();
    let solver = r.solver()?;
    let u = r.data(Diffusivity::Unit)?;
    let v = r.data_spec(r.s.data_b.as_ref(), "data_b")?.realize(
        solver.grid(),
        Diffusivity::Unit,
        r.s.perturbation,
        r.s.seed.wrapping_add(1),
    )?;
    let series = r.stage("mixing", |_| Ok(mixing_error(&solver, &u, &v, &times)?))?;
    error_series_checks(r, "l1", &series)
}

fn alpha_label(a: &MultiIndex) -> String {
    a.orders()
        .iter()
        .map(|o| o.to_string())
        .collect::<Vec<_>>()
        .join(":")
}

fn spectrum(r: &mut Run) -> CliResult<()> {
    let grid = r.s.grid_spec()?;
    let k_max = r.s.k_max.unwrap_or(6);
    let need = required_half_width(k_max);
    if grid.half_width() < need {
        return Err(HeatError::BoxTooSmall {
            have: grid.half_width(),
            need,
        }
        .into());
    }
    let alphas = MultiIndex::all_up_to(grid.dim(), k_max);
    let fields = r.stage("sample", |_| {
        Ok(alphas
            .iter()
            .map(|a| hermite_multi(a)?.sample(&grid))
            .collect::<Result<Vec<Field>, HeatError>>()?)
    })?;
    let (gram, residuals) = r.stage("gram", |_| {
        let mut gram = vec![vec![0.0; alphas.len()]; alphas.len()];
        for i in 0..alphas.len() {
            for j in i..alphas.len() {
                gram[i][j] = mu_inner(&fields[i], &fields[j])?;
                gram[j][i] = gram[i][j];
            }
        }
        let residuals = alphas
            .iter()
            .zip(&fields)
            .map(|(a, f)| {
                let res = ou_operator(f)?.combine(1.0, f, a.order() as f64)?;
                Ok(interior_norm(&res, NormKind::SUP, RING)?
                    / interior_norm(f, NormKind::SUP, RING)?)
            })
            .collect::<Result<Vec<f64>, HeatError>>()?;
        Ok((gram, residuals))
    })?;
    let mut table = Table::new(&[
        "alpha",
        "order",
        "norm_sq",
        "expected_norm_sq",
        "eigen_residual",
    ]);
    let mut off = 0.0f64;
    let mut diag = 0.0f64;
    for (i, a) in alphas.iter().enumerate() {
        table.push(vec![
            alpha_label(a),
            a.order().to_string(),
            fmt_f64(gram[i][i]),
            fmt_f64(a.factorial()),
            fmt_f64(residuals[i]),
        ]);
        diag = diag.max((gram[i][i] - a.factorial()).abs());
        off = gram[i][..i].iter().fold(off, |m, g| m.max(g.abs()));
    }
    r.emit("modes", table);
    let mismatches = (0..=k_max)
        .filter(|&k| hermite_1d(k).ok() != hermite_rodrigues(k).ok())
        .count();
    r.check(Check::at_most(
        "max_off_diagonal",
        off,
        r.tol("orthogonality"),
    ));
    r.check(Check::at_most(
        "max_diagonal_error",
        diag,
        r.tol("orthogonality"),
    ));
    r.check(Check::at_most(
        "max_eigen_residual",
        residuals.iter().cloned().fold(0.0, f64::max),
        r.tol("eigen_residual_rtol"),
    ));
    r.check(Check::at_most(
        "rodrigues_mismatches",
        mismatches as f64,
        0.0,
    ));
    Ok(())
}

fn entropy(r: &mut Run) -> CliResult<()> {
    let times = r.s.times.clone();
    if times.len() < 3 {
        return Err(CliError::config("entropy needs at least 3 times"));
    }
    let grid = r.s.grid_spec()?;
    let v0 = r
        .data(Diffusivity::Half)?
        .realize(&grid, Diffusivity::Half)?;
    let series = r.stage("entropy", |_| Ok(entropy_decay_series(&v0, &times)?))?;
    let ck = r.stage("csiszar_kullback", |_| {
        times
            .iter()
            .map(|&t| Ok(ck_gap(&fp_evolve(&v0, t)?)?))
            .collect::<CliResult<Vec<f64>>>()
    })?;
    let rows: Vec<EntropyRow> = (0..times.len())
        .map(|i| EntropyRow {
            t: times[i],
            entropy: series.entropy[i],
            fisher: series.fisher[i],
            energy: Some(series.ou_energy[i]),
            dissipation: Some(series.dissipation[i]),
        })
        .collect();
    r.emit("series", entropy_table(&rows));
    let logsob = series
        .entropy
        .iter()
        .zip(&series.fisher)
        .filter_map(|(e, i)| Some(0.5 * (*i)? - (*e)?))
        .fold(f64::INFINITY, f64::min);
    r.check(Check::at_least(
        "min_logsob_gap",
        logsob,
        r.tol("gap_floor"),
    ));
    r.check(Check::at_least(
        "min_ck_gap",
        ck.iter().cloned().fold(f64::INFINITY, f64::min),
        r.tol("gap_floor"),
    ));
    if let Some(e0) = series.entropy[0] {
        let excess = times
            .iter()
            .zip(&series.entropy)
            .filter_map(|(t, e)| Some((*e)? / (e0 * (-2.0 * (t - times[0])).exp()) - 1.0))
            .fold(f64::NEG_INFINITY, f64::max);
        r.check(Check::at_most(
            "max_entropy_decay_excess",
            excess,
            r.tol("decay_slack"),
        ));
    }
    let diss = series
        .dissipation_residual()
        .iter()
        .map(|(_, de, i)| (de + i).abs() / i)
        .fold(0.0, f64::max);
    r.check(Check::at_most(
        "max_dissipation_residual",
        diss,
        r.tol("dissipation_rtol"),
    ));
    Ok(())
}

fn tails(r: &mut Run) -> CliResult<()> {
    let times = r.s.positive_times()?.to_vec();
    let solver = r.solver()?;
    let spec = r.data_spec(r.s.data.as_ref(), "data")?;
    let dim = solver.grid().dim();
    let (center, support) = match spec.terms.as_slice() {
        [DataTerm::Box { center, radius, .. }] => (center.clone(), radius * (dim as f64).sqrt()),
        [DataTerm::Bump { center, radius, .. }] => (center.clone(), *radius),
        [DataTerm::Point { center, .. }] => (center.clone(), 0.0),
        _ => {
            return Err(CliError::config(
                "tails needs a single box, bump or point datum",
            ))
        }
    };
    let mut center = center;
    center.resize(dim, 0.0);
    let window = r.s.window.clone().unwrap_or_default();
    let [r_min, r_max] = window[..] else {
        return Err(CliError::config("window must be [r_min, r_max]"));
    };
    let data = spec.realize(solver.grid(), Diffusivity::Unit, r.s.perturbation, r.s.seed)?;
    let mass = quadrature(&solver.realize(&data)?, None)?;
    let mut table = Table::new(&["t", "radius", "neg_log", "ratio", "lower", "upper"]);
    let mut worst = 0.0f64;
    for &t in &times {
        let profile = r.stage(&format!("profile_t{t}"), |_| {
            let u = solver.evolve(&data, t)?;
            Ok(tail_profile(&u, mass, &center, support, r_min, r_max)?)
        })?;
        worst = worst.max(profile.max_bracket_violation);
        for s in &profile.samples {
            table.push(vec![
                fmt_f64(t),
                fmt_f64(s.radius),
                fmt_f64(s.neg_log),
                fmt_f64(s.ratio),
                fmt_f64(s.lower),
                fmt_f64(s.upper),
            ]);
        }
    }
    r.emit("profile", table);
    r.check(Check::at_most(
        "max_bracket_violation",
        worst,
        r.tol("bracket_violation"),
    ));
    Ok(())
}

fn front(r: &mut Run) -> CliResult<()> {
    let times = r.s.fit_times()?.to_vec();
    let solver = r.solver()?;
    let h = solver.grid().spacing();
    let separation = r.s.separation.unwrap_or(1.0);
    let eps_list =
        r.s.eps
            .clone()
            .ok_or_else(|| CliError::config("front needs 'eps'"))?;
    let mut table = Table::new(&["eps", "t", "position", "predicted"]);
    for eps in eps_list {
        let pts = r.stage(&format!("front_eps{eps:.6}"), |_| {
            Ok(sign_change_front(&solver, eps, separation, &times)?)
        })?;
        for p in &pts {
            table.push(vec![
                fmt_f64(eps),
                fmt_f64(p.t),
                fmt_f64(p.position),
                fmt_f64(p.predicted),
            ]);
        }
        let offset = pts
            .iter()
            .map(|p| (p.position - p.predicted).abs())
            .fold(0.0, f64::max);
        r.check(Check::at_most(
            format!("front_offset_eps{eps:.6}"),
            offset,
            r.tol("offset_cells") * h,
        ));
        let ts: Vec<f64> = pts.iter().map(|p| p.t).collect();
        let xs: Vec<f64> = pts.iter().map(|p| p.position).collect();
        let fit = fit_line(&ts, &xs)?;
        let want = 2.0 * solver.get_diffusivity().value() * (1.0 / eps).ln() / separation;
        r.fits
            .push(FitEntry::new(format!("front_speed_eps{eps:.6}"), &fit));
        r.check(Check::within(
            format!("front_speed_eps{eps:.6}"),
            fit.slope,
            want,
            r.tol("slope_rtol") * want.abs(),
        ));
    }
    r.emit("positions", table);
    Ok(())
}

fn counterexample(r: &mut Run) -> CliResult<()> {
    let a = r.s.rate_exponent.unwrap_or(0.5);
    let n = r.s.n_terms.unwrap_or(3);
    let c = build_counterexample(|t| t.powf(-a), n, r.s.grid.dim)?;
    let mut table = Table::new(&["n", "t", "mass", "radius", "lhs", "rhs"]);
    for i in 0..c.witness_times.len() {
        table.push(vec![
            (i + 1).to_string(),
            fmt_f64(c.witness_times[i]),
            fmt_f64(c.masses[i]),
            fmt_f64(c.radii[i]),
            fmt_f64(c.witness_lhs[i]),
            fmt_f64(c.witness_rhs[i]),
        ]);
    }
    r.emit("witnesses", table);
    let margin = c
        .witness_lhs
        .iter()
        .zip(&c.witness_rhs)
        .map(|(l, r)| l - r)
        .fold(f64::INFINITY, f64::min);
    r.check(Check::at_least(
        "min_witness_margin",
        margin,
        r.tol("margin"),
    ));
    Ok(())
}

fn smoothing(r: &mut Run) -> CliResult<()> {
    let times = r.s.positive_times()?.to_vec();
    let solver = r.solver()?;
    let data = r.data(Diffusivity::Unit)?;
    let ps = r.s.exponents.clone().unwrap_or_else(|| vec![1.0]);
    let mut table = Table::new(&["t", "p", "ratio", "young_constant"]);
    for p in ps {
        let (ratios, c) = r.stage(&format!("ratios_p{p}"), |_| {
            Ok(smoothing_ratios(&solver, &data, p, &times)?)
        })?;
        for (t, q) in times.iter().zip(&ratios) {
            table.push(vec![fmt_f64(*t), fmt_f64(p), fmt_f64(*q), fmt_f64(c)]);
        }
        let excess = ratios
            .iter()
            .map(|q| q / c - 1.0)
            .fold(f64::NEG_INFINITY, f64::max);
        r.check(Check::at_most(
            format!("young_excess_p{p}"),
            excess,
            r.tol("young_slack"),
        ));
    }
    r.emit("ratios", table);
    Ok(())
}
