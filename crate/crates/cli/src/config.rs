//! Experiment configuration: JSON file, command-line flags and defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use heatlab_core::{make_grid, GridSpec, Method, NormKind};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Conserve,
    Rates,
    Dipole,
    Scaling,
    Mixing,
    Spectrum,
    Entropy,
    Tails,
    Front,
    Counterexample,
    Smoothing,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::Conserve,
        Experiment::Rates,
        Experiment::Dipole,
        Experiment::Scaling,
        Experiment::Mixing,
        Experiment::Spectrum,
        Experiment::Entropy,
        Experiment::Tails,
        Experiment::Front,
        Experiment::Counterexample,
        Experiment::Smoothing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Conserve => "conserve",
            Experiment::Rates => "rates",
            Experiment::Dipole => "dipole",
            Experiment::Scaling => "scaling",
            Experiment::Mixing => "mixing",
            Experiment::Spectrum => "spectrum",
            Experiment::Entropy => "entropy",
            Experiment::Tails => "tails",
            Experiment::Front => "front",
            Experiment::Counterexample => "counterexample",
            Experiment::Smoothing => "smoothing",
        }
    }

    /// Tolerance keys the experiment reads, with their defaults.
    pub fn default_tolerances(self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            Experiment::Conserve => &[
                ("mass_drift", 1e-8),
                ("first_moment_drift", 1e-7),
                ("second_moment_slope_rtol", 1e-3),
            ],
            Experiment::Rates | Experiment::Mixing => {
                &[("expected_slope", -0.5), ("slope_tol", 0.05)]
            }
            Experiment::Dipole => &[
                ("expected_slope", -1.0),
                ("slope_tol", 0.1),
                ("expected_mass_slope", -0.5),
                ("mass_slope_tol", 0.02),
                ("neumann_mass_drift", 1e-8),
            ],
            Experiment::Scaling => &[("identity_tol", 1e-10)],
            Experiment::Spectrum => &[("orthogonality", 1e-8), ("eigen_residual_rtol", 1e-5)],
            Experiment::Entropy => &[
                ("gap_floor", -1e-8),
                ("decay_slack", 1e-2),
                ("dissipation_rtol", 0.02),
            ],
            Experiment::Tails => &[("bracket_violation", 1e-12)],
            Experiment::Front => &[("offset_cells", 1.0), ("slope_rtol", 0.03)],
            Experiment::Counterexample => &[("margin", 0.0)],
            Experiment::Smoothing => &[("young_slack", 1e-9)],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn defaults(self) -> ConfigFile {
        let mut c = ConfigFile::default();
        let s = |v: &str| Some(v.to_string());
        match self {
            Experiment::Conserve => {
                c.grid = Some(GridConfig::Text("dim=1,L=40,n=4096".into()));
                c.data =
                    s("gaussian:mass=0.3,center=-1,t0=0.5 + gaussian:mass=0.7,center=2,t0=0.5");
                c.times = Some(TimesSpec::List(vec![0.1, 0.5, 1.0, 2.0, 5.0, 10.0]));
            }
            Experiment::Rates => {
                c.grid = Some(GridConfig::Text("dim=1,L=300,n=4096".into()));
                c.data = s("gaussian:mass=1,center=1,t0=1");
                c.attractor = s("gaussian");
            }
            Experiment::Dipole => {
                c.grid = Some(GridConfig::Text("dim=1,L=300,n=4096".into()));
                c.data = s("bump:center=1,radius=0.5,mass=1");
                c.norms = Some(vec!["l1".into()]);
            }
            Experiment::Scaling => {
                c.grid = Some(GridConfig::Text("dim=1,L=100,n=2048".into()));
                c.target_grid = Some(GridConfig::Text("dim=1,L=12,n=512".into()));
                c.data = s("box:center=0.5,radius=1,mass=1");
                c.ks = Some(vec![1.0, 2.0, 4.0, 8.0]);
            }
            Experiment::Mixing => {
                c.grid = Some(GridConfig::Text("dim=1,L=300,n=4096".into()));
                c.data = s("box:center=0,radius=1,mass=1");
                c.data_b = s("gaussian:mass=1,center=1,t0=1");
            }
            Experiment::Spectrum => {
                c.grid = Some(GridConfig::Text("dim=2,L=10,n=256".into()));
                c.k_max = Some(6);
            }
            Experiment::Entropy => {
                c.grid = Some(GridConfig::Text("dim=1,L=10,n=512".into()));
                c.data = s("gaussian:mass=0.5,center=1,t0=1 + gaussian:mass=0.5,center=-1,t0=1");
                c.times = Some(TimesSpec::Text("linear:0:1.5:31".into()));
            }
            Experiment::Tails => {
                c.grid = Some(GridConfig::Text("dim=1,L=40,n=4096".into()));
                c.data = s("box:center=0,radius=1,mass=1");
                c.times = Some(TimesSpec::List(vec![1.0]));
                c.window = Some(vec![5.0, 15.0]);
                c.method = s("direct");
            }
            Experiment::Front => {
                c.grid = Some(GridConfig::Text("dim=1,L=40,n=4096".into()));
                c.times = Some(TimesSpec::List(vec![1.0, 2.0, 4.0]));
                c.eps = Some(vec![(-1.0f64).exp(), 0.1]);
                c.separation = Some(1.0);
                c.method = s("direct");
            }
            Experiment::Counterexample => {
                c.grid = Some(GridConfig::Text("dim=1,L=40,n=4096".into()));
                c.n_terms = Some(3);
                c.rate_exponent = Some(0.5);
            }
            Experiment::Smoothing => {
                c.grid = Some(GridConfig::Text("dim=1,L=200,n=8192".into()));
                c.data = s("box:center=0,radius=1,mass=1");
                c.times = Some(TimesSpec::Text("geometric:0.1:100:10".into()));
                c.exponents = Some(vec![1.0, 2.0]);
            }
        }
        c.times = c
            .times
            .or(Some(TimesSpec::Text("geometric:4:256:8".into())));
        c.norms = c.norms.or(Some(vec!["sup".into()]));
        c.method = c.method.or(s("fft"));
        c.out = Some(PathBuf::from("heatlab-out"));
        c.seed = Some(0);
        c.perturbation = Some(0.0);
        c
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::config(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridConfig {
    Text(String),
    Fields(GridFields),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFields {
    pub dim: usize,
    pub half_width: f64,
    pub n: usize,
}

impl GridConfig {
    pub fn resolve(&self) -> CliResult<GridFields> {
        match self {
            GridConfig::Fields(f) => Ok(*f),
            GridConfig::Text(s) => parse_grid(s),
        }
    }
}

/// Parses `dim=1,L=40,n=4096`.
pub fn parse_grid(s: &str) -> CliResult<GridFields> {
    let kv = parse_pairs(s)?;
    let get = |k: &str| {
        kv.get(k)
            .ok_or_else(|| CliError::config(format!("grid spec '{s}' is missing '{k}'")))
    };
    let int = |k: &str| -> CliResult<usize> {
        get(k)?
            .parse()
            .map_err(|_| CliError::config(format!("grid '{k}' must be an integer")))
    };
    if let Some(extra) = kv.keys().find(|k| !["dim", "L", "n"].contains(&k.as_str())) {
        return Err(CliError::config(format!("unknown grid key '{extra}'")));
    }
    Ok(GridFields {
        dim: int("dim")?,
        half_width: parse_f64(get("L")?)?,
        n: int("n")?,
    })
}

pub(crate) fn parse_pairs(s: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("expected key=value, got '{part}'")))?;
        if out
            .insert(k.trim().to_string(), v.trim().to_string())
            .is_some()
        {
            return Err(CliError::config(format!("key '{k}' given twice")));
        }
    }
    Ok(out)
}

pub(crate) fn parse_f64(s: &str) -> CliResult<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::config(format!("'{s}' is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(format!("'{s}' is not finite")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimesSpec {
    List(Vec<f64>),
    Text(String),
}

impl TimesSpec {
    /// `geometric:a:b:n`, `linear:a:b:n` or a comma-separated list.
    pub fn resolve(&self) -> CliResult<Vec<f64>> {
        let times = match self {
            TimesSpec::List(v) => v.clone(),
            TimesSpec::Text(s) => parse_times(s)?,
        };
        if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(CliError::config(format!(
                "time {t} must be finite and nonnegative"
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::config("times must be strictly increasing"));
        }
        Ok(times)
    }
}

fn parse_times(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [kind @ ("geometric" | "linear"), a, b, n] => {
            let (a, b) = (parse_f64(a)?, parse_f64(b)?);
            let n: usize = n
                .parse()
                .map_err(|_| CliError::config(format!("'{n}' is not a point count")))?;
            if n < 2 {
                return Err(CliError::config("a time range needs at least 2 points"));
            }
            if *kind == "geometric" && !(a > 0.0 && b > a) {
                return Err(CliError::config("geometric range needs 0 < a < b"));
            }
            let step = |i: usize| i as f64 / (n - 1) as f64;
            Ok((0..n)
                .map(|i| match *kind {
                    "geometric" => a * (b / a).powf(step(i)),
                    _ => a + (b - a) * step(i),
                })
                .collect())
        }
        [_] => s.split(',').map(parse_f64).collect(),
        _ => Err(CliError::config(format!("cannot parse times '{s}'"))),
    }
}

/// Everything a run can be configured with; all keys optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<Experiment>,
    pub grid: Option<GridConfig>,
    pub data: Option<String>,
    /// Second datum for `mixing`.
    pub data_b: Option<String>,
    pub times: Option<TimesSpec>,
    pub norms: Option<Vec<String>>,
    /// `gaussian`, `timeshift`, `centered` or `corrector:k` (`rates`).
    pub attractor: Option<String>,
    /// `fft` or `direct`.
    pub method: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Relative amplitude of seeded multiplicative noise on the data.
    pub perturbation: Option<f64>,
    pub target_grid: Option<GridConfig>,
    pub ks: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
    /// Lebesgue exponents for `smoothing`.
    pub exponents: Option<Vec<f64>>,
    pub k_max: Option<usize>,
    pub n_terms: Option<usize>,
    /// `φ(t) = t^{-rate_exponent}` for `counterexample`.
    pub rate_exponent: Option<f64>,
    /// Distance between the two masses in `front`.
    pub separation: Option<f64>,
    /// Radial window `[r_min, r_max]` for `tails`.
    pub window: Option<Vec<f64>>,
    pub tolerances: Option<BTreeMap<String, f64>>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    /// Keys set in `over` replace those in `self`; tolerances merge by key.
    pub fn overlay(mut self, over: ConfigFile) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(
            experiment,
            grid,
            data,
            data_b,
            times,
            norms,
            attractor,
            method,
            out,
            seed,
            perturbation,
            target_grid,
            ks,
            eps,
            exponents,
            k_max,
            n_terms,
            rate_exponent,
            separation,
            window
        );
        if let Some(t) = over.tolerances {
            self.tolerances.get_or_insert_with(BTreeMap::new).extend(t);
        }
        self
    }
}

/// Fully resolved settings, echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub experiment: Experiment,
    pub grid: GridFields,
    pub data: Option<String>,
    pub data_b: Option<String>,
    pub times: Vec<f64>,
    pub norms: Vec<String>,
    pub attractor: Option<String>,
    pub method: String,
    pub out: PathBuf,
    pub seed: u64,
    pub perturbation: f64,
    pub target_grid: Option<GridFields>,
    pub ks: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
    pub exponents: Option<Vec<f64>>,
    pub k_max: Option<usize>,
    pub n_terms: Option<usize>,
    pub rate_exponent: Option<f64>,
    pub separation: Option<f64>,
    pub window: Option<Vec<f64>>,
    pub tolerances: BTreeMap<String, f64>,
}

impl Settings {
    /// Resolves defaults < file < flags for `experiment`.
    pub fn resolve(
        experiment: Experiment,
        file: Option<ConfigFile>,
        flags: ConfigFile,
    ) -> CliResult<Self> {
        if let Some(e) = file.as_ref().and_then(|f| f.experiment) {
            if e != experiment {
                return Err(CliError::config(format!(
                    "config file is for '{e}' but '{experiment}' was requested"
                )));
            }
        }
        let c = experiment
            .defaults()
            .overlay(file.unwrap_or_default())
            .overlay(flags);
        let mut tolerances = experiment.default_tolerances();
        for (k, v) in c.tolerances.unwrap_or_default() {
            if !tolerances.contains_key(&k) {
                let known: Vec<&String> = tolerances.keys().collect();
                return Err(CliError::config(format!(
                    "unknown tolerance '{k}' for {experiment} (known: {known:?})"
                )));
            }
            if !v.is_finite() {
                return Err(CliError::config(format!("tolerance '{k}' must be finite")));
            }
            tolerances.insert(k, v);
        }
        let norms = c.norms.unwrap_or_default();
        for n in &norms {
            if NormKind::parse(n).is_none() {
                return Err(CliError::config(format!("unknown norm '{n}'")));
            }
        }
        let method = c.method.unwrap_or_default();
        if !["fft", "direct"].contains(&method.as_str()) {
            return Err(CliError::config(format!("unknown method '{method}'")));
        }
        let perturbation = c.perturbation.unwrap_or(0.0);
        if !(perturbation.is_finite() && (0.0..1.0).contains(&perturbation)) {
            return Err(CliError::config("perturbation must lie in [0, 1)"));
        }
        let settings = Settings {
            experiment,
            grid: c
                .grid
                .ok_or_else(|| CliError::config("no grid given"))?
                .resolve()?,
            data: c.data,
            data_b: c.data_b,
            times: c
                .times
                .ok_or_else(|| CliError::config("no times given"))?
                .resolve()?,
            norms,
            attractor: c.attractor,
            method,
            out: c.out.unwrap_or_else(|| PathBuf::from("heatlab-out")),
            seed: c.seed.unwrap_or(0),
            perturbation,
            target_grid: c.target_grid.map(|g| g.resolve()).transpose()?,
            ks: c.ks,
            eps: c.eps,
            exponents: c.exponents,
            k_max: c.k_max,
            n_terms: c.n_terms,
            rate_exponent: c.rate_exponent,
            separation: c.separation,
            window: c.window,
            tolerances,
        };
        settings.grid_spec()?;
        Ok(settings)
    }

    pub fn grid_spec(&self) -> CliResult<GridSpec> {
        Ok(make_grid(self.grid.dim, self.grid.half_width, self.grid.n)?)
    }

    pub fn method(&self) -> Method {
        if self.method == "direct" {
            Method::Direct
        } else {
            Method::Fft
        }
    }

    pub fn norm_kinds(&self) -> Vec<NormKind> {
        self.norms
            .iter()
            .filter_map(|n| NormKind::parse(n))
            .collect()
    }

    pub fn tol(&self, key: &str) -> f64 {
        self.tolerances[key]
    }

    /// Times for experiments that fit rates: at least three, all positive.
    pub fn fit_times(&self) -> CliResult<&[f64]> {
        if self.times.len() < 3 {
            return Err(CliError::config(format!(
                "{} needs at least 3 times, got {}",
                self.experiment,
                self.times.len()
            )));
        }
        self.positive_times()
    }

    pub fn positive_times(&self) -> CliResult<&[f64]> {
        if self.times.first().is_some_and(|t| *t <= 0.0) {
            return Err(CliError::config(format!(
                "{} needs positive times",
                self.experiment
            )));
        }
        Ok(&self.times)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_text_and_object_agree() {
        let a = parse_grid("dim=2,L=15,n=256").unwrap();
        let b: GridConfig = serde_json::from_str(r#"{"dim":2,"half_width":15,"n":256}"#).unwrap();
        assert_eq!(a, b.resolve().unwrap());
        assert!(parse_grid("dim=2,L=15").is_err());
        assert!(parse_grid("dim=2,L=15,n=256,q=1").is_err());
    }

    #[test]
    fn time_ranges() {
        let g = TimesSpec::Text("geometric:4:256:8".into())
            .resolve()
            .unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g[0], 4.0);
        assert!((g[7] - 256.0).abs() < 1e-12);
        let l = TimesSpec::Text("linear:0:1:5".into()).resolve().unwrap();
        assert_eq!(l, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(
            TimesSpec::Text("1,2,3".into()).resolve().unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        assert!(TimesSpec::List(vec![2.0, 1.0]).resolve().is_err());
        assert!(TimesSpec::List(vec![-1.0]).resolve().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<ConfigFile>(r#"{"grdi":"dim=1,L=1,n=8"}"#).is_err());
        let file: ConfigFile = serde_json::from_str(r#"{"tolerances":{"nope":1}}"#).unwrap();
        assert!(Settings::resolve(Experiment::Rates, Some(file), ConfigFile::default()).is_err());
    }

    #[test]
    fn flags_override_file() {
        let file: ConfigFile =
            serde_json::from_str(r#"{"data":"box:center=0,radius=1,mass=1","seed":4}"#).unwrap();
        let flags = ConfigFile {
            seed: Some(9),
            ..Default::default()
        };
        let s = Settings::resolve(Experiment::Rates, Some(file), flags).unwrap();
        assert_eq!(s.seed, 9);
        assert_eq!(s.data.as_deref(), Some("box:center=0,radius=1,mass=1"));
        assert_eq!(s.times.len(), 8);
    }

    #[test]
    fn mismatched_experiment_rejected() {
        let file: ConfigFile = serde_json::from_str(r#"{"experiment":"tails"}"#).unwrap();
        assert!(Settings::resolve(Experiment::Rates, Some(file), ConfigFile::default()).is_err());
    }
}
