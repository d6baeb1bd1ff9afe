//! `key=value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use shapelab_core::verify::Tolerances;
use shapelab_core::{DomainSpec, FunctionalParams, ProblemKind, Shape};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("missing required key '{0}'")]
    MissingKey(&'static str),
    #[error("line {line}: expected key=value, got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("invalid value for '{key}': {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("{0}")]
    Range(String),
    #[error("cannot read {path}: {reason}")]
    Read { path: PathBuf, reason: String },
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Relaxed,
    Search,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Supersolution,
    Optimality,
    Linf,
    LayerCake,
    Growth,
    KohlerJobin,
    Scaling,
    Coercivity,
}

impl Check {
    pub const ALL: [Check; 8] = [
        Check::Supersolution,
        Check::Optimality,
        Check::Linf,
        Check::LayerCake,
        Check::Growth,
        Check::KohlerJobin,
        Check::Scaling,
        Check::Coercivity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Supersolution => "supersolution",
            Check::Optimality => "optimality",
            Check::Linf => "linf",
            Check::LayerCake => "layer-cake",
            Check::Growth => "growth",
            Check::KohlerJobin => "kohler-jobin",
            Check::Scaling => "scaling",
            Check::Coercivity => "coercivity",
        }
    }
}

impl FromStr for Check {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| {
                let names: Vec<_> = Check::ALL.iter().map(|c| c.name()).collect();
                format!("unknown check '{s}', expected one of {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SolveTorsion,
    SolveEigen,
    Minimize(Method),
    Verify(Check),
    Oracle,
    SweepAlpha,
    Export,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::SolveTorsion => write!(f, "solve-torsion"),
            Command::SolveEigen => write!(f, "solve-eigen"),
            Command::Minimize(Method::Relaxed) => write!(f, "minimize relaxed"),
            Command::Minimize(Method::Search) => write!(f, "minimize search"),
            Command::Verify(c) => write!(f, "verify {}", c.name()),
            Command::Oracle => write!(f, "oracle"),
            Command::SweepAlpha => write!(f, "sweep-alpha"),
            Command::Export => write!(f, "export"),
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut words = s.split_whitespace();
        let head = words.next().unwrap_or("");
        let arg = words.next();
        if words.next().is_some() {
            return Err(format!("unexpected words in command '{s}'"));
        }
        let cmd = match (head, arg) {
            ("solve-torsion", None) => Command::SolveTorsion,
            ("solve-eigen", None) => Command::SolveEigen,
            ("minimize", Some("relaxed")) => Command::Minimize(Method::Relaxed),
            ("minimize", Some("search")) => Command::Minimize(Method::Search),
            ("minimize", _) => return Err("minimize needs 'relaxed' or 'search'".into()),
            ("verify", Some(c)) => Command::Verify(c.parse()?),
            ("verify", None) => return Err("verify needs a check name".into()),
            ("oracle", None) => Command::Oracle,
            ("sweep-alpha", None) => Command::SweepAlpha,
            ("export", None) => Command::Export,
            _ => return Err(format!("unknown command '{s}'")),
        };
        Ok(cmd)
    }
}

/// Fully resolved run configuration. Every field has a documented default
/// except `command`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// `domain`, default `square(1)`.
    pub domain: Shape,
    /// `dim` (alias `N`), default 2.
    pub dim: usize,
    /// `resolution`, grid nodes per unit length, default 64.
    pub resolution: f64,
    /// `alpha`, default 1.
    pub alpha: f64,
    /// `alphas`, comma separated, for `sweep-alpha`.
    pub alphas: Vec<f64>,
    /// `mode`: `compliance` (default) or `eigen`.
    pub mode: ProblemKind,
    /// `epsilon`, initial smoothing width relative to `‖v₀‖∞`, default 0.2.
    pub epsilon: f64,
    /// `tau`, support threshold, default 0.
    pub tau: f64,
    /// `torsion_tol`, default 1e-10.
    pub torsion_tol: f64,
    /// `eigen_tol`, default 1e-8.
    pub eigen_tol: f64,
    /// `seed`, default 0.
    pub seed: u64,
    /// `noise`, relative perturbation of the relaxed start, default 0.
    pub noise: f64,
    /// `max_iters` per annealing phase, default 400.
    pub max_iters: usize,
    /// `phases`, default 6.
    pub phases: usize,
    /// `polish`, default true.
    pub polish: bool,
    /// `restarts` of the flip search, default 0.
    pub restarts: usize,
    /// `batch` flips per sweep in the flip search, default true.
    pub batch: bool,
    /// `output_dir`, default `out`.
    pub output_dir: PathBuf,
    /// `threads`; 1 (default) is the bit-exact path, 0 uses all cores.
    pub threads: usize,
    /// `radii`, comma separated; check specific defaults when empty.
    pub radii: Vec<f64>,
    /// `center` of the growth balls; centre of the domain when empty.
    pub center: Vec<f64>,
    /// `band` excluded around free/contact junctions, default 2.
    pub band: usize,
    /// `levels` of the layer-cake profile, default 101.
    pub levels: usize,
    /// `eps` of the supersolution check, relative to `‖v‖∞`, default 1e-3.
    pub interior_eps: f64,
    /// `domains`, `;` separated, for the cross-domain checks; the first one
    /// is the reference.
    pub domains: Vec<Shape>,
    /// `tol_*` keys.
    pub tolerances: Tolerances,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            domain: Shape::Square { side: 1.0 },
            dim: 2,
            resolution: 64.0,
            alpha: 1.0,
            alphas: Vec::new(),
            mode: ProblemKind::Compliance,
            epsilon: 0.2,
            tau: 0.0,
            torsion_tol: 1e-10,
            eigen_tol: 1e-8,
            seed: 0,
            noise: 0.0,
            max_iters: 400,
            phases: 6,
            polish: true,
            restarts: 0,
            batch: true,
            output_dir: PathBuf::from("out"),
            threads: 1,
            radii: Vec::new(),
            center: Vec::new(),
            band: 2,
            levels: 101,
            interior_eps: 1e-3,
            domains: vec![
                Shape::Disk { radius: 1.0 },
                Shape::Square { side: 1.0 },
                Shape::Rectangle {
                    width: 2.0,
                    height: 1.0,
                },
                Shape::LShape { side: 1.0 },
            ],
            tolerances: Tolerances::default(),
        }
    }

    pub fn domain_spec(&self) -> DomainSpec {
        DomainSpec::new(self.domain.clone(), self.dim)
    }

    /// `key=value` lines that reproduce this configuration.
    pub fn to_lines(&self) -> Vec<String> {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let t = &self.tolerances;
        let mut out = vec![
            format!("command={}", self.command),
            format!("domain={}", self.domain),
            format!("dim={}", self.dim),
            format!("resolution={}", self.resolution),
            format!("alpha={}", self.alpha),
        ];
        if !self.alphas.is_empty() {
            out.push(format!("alphas={}", list(&self.alphas)));
        }
        out.extend([
            format!("mode={}", self.mode),
            format!("epsilon={}", self.epsilon),
            format!("tau={}", self.tau),
            format!("torsion_tol={}", self.torsion_tol),
            format!("eigen_tol={}", self.eigen_tol),
            format!("seed={}", self.seed),
            format!("noise={}", self.noise),
            format!("max_iters={}", self.max_iters),
            format!("phases={}", self.phases),
            format!("polish={}", self.polish),
            format!("restarts={}", self.restarts),
            format!("batch={}", self.batch),
            format!("output_dir={}", self.output_dir.display()),
            format!("threads={}", self.threads),
        ]);
        if !self.radii.is_empty() {
            out.push(format!("radii={}", list(&self.radii)));
        }
        if !self.center.is_empty() {
            out.push(format!("center={}", list(&self.center)));
        }
        let domains: Vec<String> = self.domains.iter().map(|d| d.to_string()).collect();
        out.extend([
            format!("band={}", self.band),
            format!("levels={}", self.levels),
            format!("eps={}", self.interior_eps),
            format!("domains={}", domains.join(";")),
            format!("tol_residual_floor={}", t.residual_floor),
            format!("tol_interior_residual={}", t.interior_residual),
            format!("tol_free_relstd={}", t.free_relstd),
            format!("tol_free_mean={}", t.free_mean),
            format!("tol_contact_min={}", t.contact_min),
            format!("tol_scaling_slope={}", t.scaling_slope),
            format!("tol_scaling_variation={}", t.scaling_variation),
            format!("tol_linf_slope={}", t.linf_slope),
            format!("tol_linf_factor={}", t.linf_factor),
            format!("tol_kohler_jobin={}", t.kohler_jobin),
            format!("tol_layer_cake={}", t.layer_cake),
            format!("tol_growth_slope={}", t.growth_slope),
            format!("tol_comparison={}", t.comparison),
            format!("tol_coercivity_slope={}", t.coercivity_slope),
            format!("tol_coercivity_growth={}", t.coercivity_growth),
        ]);
        out
    }
}

/// Splits config text into `(key, value)` pairs. `#` starts a comment;
/// blank lines are skipped.
pub fn parse_lines(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    parse_lines(&text)
}

fn value<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| ConfigError::InvalidValue {
        key: key.to_string(),
        reason: e.to_string(),
    })
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| value(key, s))
        .collect()
}

fn positive(key: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::Range(format!("{key} must be > 0, got {x}")))
    }
}

/// Resolves `(key, value)` pairs into a config; later pairs override
/// earlier ones.
pub fn parse_config(pairs: &[(String, String)]) -> Result<RunConfig> {
    let mut map: BTreeMap<&str, &str> = BTreeMap::new();
    for (k, v) in pairs {
        let k = if k == "N" { "dim" } else { k.as_str() };
        map.insert(k, v.as_str());
    }
    let mut cfg = RunConfig::new(Command::SolveTorsion);
    let mut command = None;
    for (&k, &v) in &map {
        let t = &mut cfg.tolerances;
        match k {
            "command" => command = Some(value::<Command>(k, v)?),
            "domain" => cfg.domain = value(k, v)?,
            "dim" => cfg.dim = value(k, v)?,
            "resolution" => cfg.resolution = positive(k, value(k, v)?)?,
            "alpha" => cfg.alpha = value(k, v)?,
            "alphas" => cfg.alphas = list(k, v)?,
            "mode" => cfg.mode = value(k, v)?,
            "epsilon" => cfg.epsilon = positive(k, value(k, v)?)?,
            "tau" => cfg.tau = value(k, v)?,
            "torsion_tol" => cfg.torsion_tol = positive(k, value(k, v)?)?,
            "eigen_tol" => cfg.eigen_tol = positive(k, value(k, v)?)?,
            "seed" => cfg.seed = value(k, v)?,
            "noise" => cfg.noise = value(k, v)?,
            "max_iters" => cfg.max_iters = value(k, v)?,
            "phases" => cfg.phases = value(k, v)?,
            "polish" => cfg.polish = value(k, v)?,
            "restarts" => cfg.restarts = value(k, v)?,
            "batch" => cfg.batch = value(k, v)?,
            "output_dir" => cfg.output_dir = PathBuf::from(v),
            "threads" => cfg.threads = value(k, v)?,
            "radii" => cfg.radii = list(k, v)?,
            "center" => cfg.center = list(k, v)?,
            "band" => cfg.band = value(k, v)?,
            "levels" => cfg.levels = value(k, v)?,
            "eps" => cfg.interior_eps = positive(k, value(k, v)?)?,
            "domains" => {
                cfg.domains = v
                    .split(';')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| value(k, s))
                    .collect::<Result<_>>()?
            }
            "tol_residual_floor" => t.residual_floor = value(k, v)?,
            "tol_interior_residual" => t.interior_residual = value(k, v)?,
            "tol_free_relstd" => t.free_relstd = value(k, v)?,
            "tol_free_mean" => t.free_mean = value(k, v)?,
            "tol_contact_min" => t.contact_min = value(k, v)?,
            "tol_scaling_slope" => t.scaling_slope = value(k, v)?,
            "tol_scaling_variation" => t.scaling_variation = value(k, v)?,
            "tol_linf_slope" => t.linf_slope = value(k, v)?,
            "tol_linf_factor" => t.linf_factor = value(k, v)?,
            "tol_kohler_jobin" => t.kohler_jobin = value(k, v)?,
            "tol_layer_cake" => t.layer_cake = value(k, v)?,
            "tol_growth_slope" => t.growth_slope = value(k, v)?,
            "tol_comparison" => t.comparison = value(k, v)?,
            "tol_coercivity_slope" => t.coercivity_slope = value(k, v)?,
            "tol_coercivity_growth" => t.coercivity_growth = value(k, v)?,
            _ => return Err(ConfigError::UnknownKey(k.to_string())),
        }
    }
    if !(2..=3).contains(&cfg.dim) {
        return Err(ConfigError::Range(format!(
            "dim must be 2 or 3, got {}",
            cfg.dim
        )));
    }
    // The cost exponents are checked before anything else so that a bad
    // alpha is reported even when other keys are missing.
    let verifying = matches!(command, Some(Command::Verify(_)));
    check_alpha(cfg.mode, cfg.dim, cfg.alpha, verifying)?;
    for &a in &cfg.alphas {
        check_alpha(cfg.mode, cfg.dim, a, false)?;
    }
    cfg.command = command.ok_or(ConfigError::MissingKey("command"))?;
    if cfg.threads > 1024 {
        return Err(ConfigError::Range("threads must be <= 1024".into()));
    }
    if cfg.tau.is_nan() || cfg.tau < 0.0 {
        return Err(ConfigError::Range("tau must be >= 0".into()));
    }
    if !(0.0..1.0).contains(&cfg.noise) {
        return Err(ConfigError::Range("noise must lie in [0, 1)".into()));
    }
    if cfg.command == Command::SweepAlpha && cfg.alphas.len() < 2 {
        return Err(ConfigError::Range(
            "sweep-alpha needs at least 2 alphas (>=2 required)".into(),
        ));
    }
    Ok(cfg)
}

/// Checks run at the threshold exponent itself; everything else needs the
/// strict inequality.
fn check_alpha(mode: ProblemKind, dim: usize, alpha: f64, verifying: bool) -> Result<()> {
    let r = if verifying {
        FunctionalParams::for_evaluation(mode, dim, alpha)
    } else {
        FunctionalParams::new(mode, dim, alpha)
    };
    r.map(|_| ()).map_err(|e| ConfigError::Range(e.to_string()))
}
