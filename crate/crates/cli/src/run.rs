//! Run orchestration and artifact output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use shapelab_core::optimize::{
    brute_force_oracle, extract_support, local_search, minimize_relaxed, RelaxedOptions,
    RelaxedRun, SearchOptions, SearchRun,
};
use shapelab_core::verify::{
    check_coercivity, check_growth, check_kohler_jobin, check_linf_bound, check_linf_exponent,
    check_optimality, check_scaling, check_supersolution, layer_cake_profile, linf_sample, Report,
};
use shapelab_core::{
    build_grid, fmt_real, solve_eigen, solve_torsion, CellSet, DomainSpec, FunctionalParams, Grid,
    ProblemKind, ScalarField, Shape,
};

use crate::config::{Check, Command, Method, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Solver(#[from] shapelab_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => 1,
            RunError::Solver(_) | RunError::Io(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    VerificationFailed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::VerificationFailed => 3,
        }
    }
}

/// What a run printed and whether its checks passed.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub stdout: String,
}

type Result<T> = std::result::Result<T, RunError>;

/// Collects manifest results and standard output of one run.
struct Sink<'a> {
    dir: &'a Path,
    results: Vec<(String, String)>,
    stdout: String,
}

impl Sink<'_> {
    fn result(&mut self, key: &str, value: impl ToString) {
        self.results.push((key.to_string(), value.to_string()));
    }

    fn real(&mut self, key: &str, value: f64) {
        self.result(key, fmt_real(value));
    }

    fn say(&mut self, line: impl AsRef<str>) {
        self.stdout.push_str(line.as_ref());
        self.stdout.push('\n');
    }

    fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        Ok(())
    }

    /// `field_<name>.csv` over the nodes of `D`, plus a PGM in 2D.
    fn field(&self, name: &str, v: &ScalarField) -> Result<()> {
        self.write(
            &format!("field_{name}.csv"),
            v.to_csv(&CellSet::full(v.grid())),
        )?;
        if v.grid().dim() == 2 {
            self.write(&format!("field_{name}.pgm"), v.to_pgm()?)?;
        }
        Ok(())
    }

    fn report(&mut self, r: &dyn Report) -> Result<bool> {
        self.write(&format!("report_{}.csv", r.name()), r.csv())?;
        self.stdout.push_str(&r.csv());
        self.say(r.verdict());
        self.result(
            &format!("verdict.{}", r.name()),
            if r.passed() { "PASS" } else { "FAIL" },
        );
        Ok(r.passed())
    }
}

/// Executes `cfg`, writing artifacts into `cfg.output_dir`. `threads = 1`
/// runs everything on one worker thread (the bit-reproducible path).
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    fs::create_dir_all(&cfg.output_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| RunError::Usage(format!("cannot build thread pool: {e}")))?;
    pool.install(|| execute(cfg))
}

fn execute(cfg: &RunConfig) -> Result<Outcome> {
    let mut sink = Sink {
        dir: &cfg.output_dir,
        results: Vec::new(),
        stdout: String::new(),
    };
    let passed = match cfg.command {
        Command::SolveTorsion => solve_torsion_cmd(cfg, &mut sink).map(|_| true),
        Command::SolveEigen => solve_eigen_cmd(cfg, &mut sink).map(|_| true),
        Command::Minimize(Method::Relaxed) => minimize_relaxed_cmd(cfg, &mut sink).map(|_| true),
        Command::Minimize(Method::Search) => minimize_search_cmd(cfg, &mut sink).map(|_| true),
        Command::Verify(check) => verify_cmd(cfg, check, &mut sink),
        Command::Oracle => oracle_cmd(cfg, &mut sink).map(|_| true),
        Command::SweepAlpha => sweep_alpha_cmd(cfg, &mut sink).map(|_| true),
        Command::Export => export_cmd(cfg, &mut sink).map(|_| true),
    };
    let passed = match passed {
        Ok(p) => p,
        Err(e) => {
            sink.result("error", e.to_string().replace('\n', " "));
            write_manifest(cfg, &sink)?;
            return Err(e);
        }
    };
    write_manifest(cfg, &sink)?;
    Ok(Outcome {
        status: if passed {
            Status::Success
        } else {
            Status::VerificationFailed
        },
        stdout: sink.stdout,
    })
}

/// Config lines first (so the manifest can be fed back as a config file),
/// results as `#` comments.
fn write_manifest(cfg: &RunConfig, sink: &Sink) -> Result<()> {
    let mut s = String::from("# shapelab run manifest\n");
    for line in cfg.to_lines() {
        s.push_str(&line);
        s.push('\n');
    }
    s.push_str("# results\n");
    for (k, v) in &sink.results {
        let _ = writeln!(s, "# {k} = {v}");
    }
    sink.write("manifest.txt", s)
}

fn grid_of(cfg: &RunConfig, sink: &mut Sink) -> Result<Arc<Grid>> {
    let grid = build_grid(&cfg.domain_spec(), cfg.resolution)?;
    sink.result("grid.shape", format!("{:?}", grid.shape()));
    sink.real("grid.h", grid.h());
    sink.result("grid.nodes", grid.inside_count());
    Ok(grid)
}

fn solve_torsion_cmd(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let grid = grid_of(cfg, sink)?;
    let t = solve_torsion(&CellSet::full(&grid), cfg.torsion_tol)?;
    sink.real("compliance", t.compliance);
    sink.real("sup_norm", t.sup_norm);
    sink.result("iterations", t.iterations);
    sink.real("residual", t.residual);
    sink.say(format!("compliance = {}", fmt_real(t.compliance)));
    sink.say(format!("sup_norm = {}", fmt_real(t.sup_norm)));
    sink.field("torsion", &t.w)
}

fn solve_eigen_cmd(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let grid = grid_of(cfg, sink)?;
    let e = solve_eigen(&CellSet::full(&grid), cfg.eigen_tol)?;
    sink.real("lambda1", e.lambda1);
    sink.result("iterations", e.iterations);
    sink.real("residual", e.residual);
    sink.say(format!("lambda1 = {}", fmt_real(e.lambda1)));
    sink.field("eigen", &e.u)
}

fn relaxed_options(cfg: &RunConfig) -> RelaxedOptions {
    RelaxedOptions {
        max_iters: cfg.max_iters,
        phases: cfg.phases,
        epsilon0: cfg.epsilon,
        noise: cfg.noise,
        polish: cfg.polish,
        ..RelaxedOptions::default()
    }
}

fn relaxed_params(cfg: &RunConfig, alpha: f64) -> Result<FunctionalParams> {
    Ok(FunctionalParams::new(ProblemKind::Compliance, cfg.dim, alpha)?.with_tau(cfg.tau)?)
}

/// Runs the relaxed minimizer and writes its history, field and support.
fn relaxed_run(cfg: &RunConfig, sink: &mut Sink) -> Result<(RelaxedRun, CellSet)> {
    if cfg.mode != ProblemKind::Compliance {
        return Err(RunError::Usage(
            "the relaxed minimizer supports mode=compliance only".into(),
        ));
    }
    let grid = grid_of(cfg, sink)?;
    let params = relaxed_params(cfg, cfg.alpha)?;
    let run = minimize_relaxed(&grid, &params, &relaxed_options(cfg), cfg.seed)?;
    let support = extract_support(&run, cfg.tau)?;
    let mut hist = String::from("iteration,phase,value,measure,step\n");
    for h in &run.history {
        let _ = writeln!(
            hist,
            "{},{},{},{},{}",
            h.iteration,
            h.phase,
            fmt_real(h.value),
            fmt_real(h.measure),
            fmt_real(h.step)
        );
    }
    sink.write("history.csv", hist)?;
    sink.field("v", &run.v_star)?;
    grid.write_mask_file(&sink.dir.join("omega_star.mask"), support.mask())?;
    let bc = support.classify_boundary();
    sink.real("value", run.value);
    sink.real("measure", support.measure());
    sink.real("contact_fraction", bc.contact_fraction);
    sink.result("active_nodes", support.count());
    sink.result("descent_iterations", run.history.len());
    sink.result("polish_flips", run.polish_flips);
    sink.result("converged", run.converged);
    sink.say(format!(
        "value = {}, measure = {}, contact_fraction = {}",
        fmt_real(run.value),
        fmt_real(support.measure()),
        fmt_real(bc.contact_fraction)
    ));
    Ok((run, support))
}

fn minimize_relaxed_cmd(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    relaxed_run(cfg, sink).map(|_| ())
}

fn search_result(grid: &Grid, run: &SearchRun, sink: &mut Sink) -> Result<()> {
    grid.write_mask_file(&sink.dir.join("omega_star.mask"), run.omega_star.mask())?;
    sink.real("value", run.value);
    sink.real("measure", run.omega_star.measure());
    sink.result("active_nodes", run.omega_star.count());
    sink.result("flips", run.flips);
    sink.say(format!(
        "value = {}, active nodes = {}",
        fmt_real(run.value),
        run.omega_star.count()
    ));
    Ok(())
}

fn minimize_search_cmd(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let grid = grid_of(cfg, sink)?;
    let params = FunctionalParams::new(cfg.mode, cfg.dim, cfg.alpha)?.with_tau(cfg.tau)?;
    let opts = SearchOptions {
        batch: cfg.batch,
        restarts: cfg.restarts,
        seed: cfg.seed,
        ..SearchOptions::default()
    };
    let run = local_search(&CellSet::full(&grid), &params, &opts)?;
    let mut hist = String::from("flip,node,added,value\n");
    for (i, m) in run.trace.iter().enumerate() {
        let _ = writeln!(
            hist,
            "{},{},{},{}",
            i + 1,
            m.node,
            m.added,
            fmt_real(m.value)
        );
    }
    sink.write("history.csv", hist)?;
    search_result(&grid, &run, sink)?;
    match cfg.mode {
        ProblemKind::Compliance => sink.field(
            "torsion",
            &solve_torsion(&run.omega_star, cfg.torsion_tol)?.w,
        ),
        ProblemKind::Eigen => sink.field("eigen", &solve_eigen(&run.omega_star, cfg.eigen_tol)?.u),
    }
}

fn oracle_cmd(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let grid = grid_of(cfg, sink)?;
    let params = FunctionalParams::new(cfg.mode, cfg.dim, cfg.alpha)?.with_tau(cfg.tau)?;
    let run = brute_force_oracle(&grid, &params)?;
    search_result(&grid, &run, sink)
}

fn sweep_alpha_cmd(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    if cfg.mode != ProblemKind::Compliance {
        return Err(RunError::Usage(
            "sweep-alpha supports mode=compliance only".into(),
        ));
    }
    let mut alphas = cfg.alphas.clone();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let grid = grid_of(cfg, sink)?;
    let opts = relaxed_options(cfg);
    let rows = alphas
        .par_iter()
        .map(|&a| {
            let run = minimize_relaxed(&grid, &relaxed_params(cfg, a)?, &opts, cfg.seed)?;
            let support = extract_support(&run, cfg.tau)?;
            let fraction = support.classify_boundary().contact_fraction;
            Ok((a, run.value, support.measure(), fraction))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("alpha,value,measure,contact_fraction\n");
    for (a, value, measure, fraction) in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            fmt_real(*a),
            fmt_real(*value),
            fmt_real(*measure),
            fmt_real(*fraction)
        );
    }
    sink.stdout.push_str(&csv);
    sink.write("report_sweep.csv", csv)?;
    sink.result("runs", rows.len());
    Ok(())
}

fn export_cmd(cfg: &RunConfig, sink: &mut Sink) -> Result<()> {
    let grid = grid_of(cfg, sink)?;
    let full = CellSet::full(&grid);
    grid.write_mask_file(&sink.dir.join("domain.mask"), grid.inside_mask())?;
    let t = solve_torsion(&full, cfg.torsion_tol)?;
    let e = solve_eigen(&full, cfg.eigen_tol)?;
    sink.real("compliance", t.compliance);
    sink.real("lambda1", e.lambda1);
    sink.field("torsion", &t.w)?;
    sink.field("eigen", &e.u)?;
    sink.say(format!("exported {} nodes", grid.inside_count()));
    Ok(())
}

fn radii_or(cfg: &RunConfig, default: &[f64]) -> Vec<f64> {
    if cfg.radii.is_empty() {
        default.to_vec()
    } else {
        cfg.radii.clone()
    }
}

fn centroid(grid: &Grid) -> Vec<f64> {
    let dim = grid.dim();
    let mut c = vec![0.0; dim];
    for &p in grid.inside_nodes() {
        let x = grid.coords(p);
        for d in 0..dim {
            c[d] += x[d];
        }
    }
    let n = grid.inside_count().max(1) as f64;
    c.iter().map(|v| v / n).collect()
}

fn domain_sets(cfg: &RunConfig) -> Result<Vec<(String, CellSet)>> {
    cfg.domains
        .iter()
        .map(|s: &Shape| {
            let g = build_grid(&DomainSpec::new(s.clone(), cfg.dim), cfg.resolution)?;
            Ok((s.to_string(), CellSet::full(&g)))
        })
        .collect()
}

fn verify_cmd(cfg: &RunConfig, check: Check, sink: &mut Sink) -> Result<bool> {
    let tol = &cfg.tolerances;
    match check {
        Check::Supersolution => {
            let (run, _) = relaxed_run(cfg, sink)?;
            let v = &run.v_star;
            let r = check_supersolution(v, cfg.interior_eps * v.sup_norm(), tol)?;
            sink.report(&r)
        }
        Check::Optimality => {
            let (run, _) = relaxed_run(cfg, sink)?;
            let r = check_optimality(&run.v_star, cfg.alpha, cfg.band, tol)?;
            sink.report(&r)
        }
        Check::Growth => {
            let (run, support) = relaxed_run(cfg, sink)?;
            let center = if cfg.center.is_empty() {
                centroid(run.v_star.grid())
            } else {
                cfg.center.clone()
            };
            let radii = radii_or(cfg, &[0.1, 0.2, 0.3]);
            let r = check_growth(&run.v_star, &support, &center, &radii, tol)?;
            sink.report(&r)
        }
        Check::LayerCake => {
            let grid = grid_of(cfg, sink)?;
            let w = solve_torsion(&CellSet::full(&grid), cfg.torsion_tol)?.w;
            let r = layer_cake_profile(&w, cfg.levels, tol)?;
            sink.report(&r)
        }
        Check::Linf => {
            let sets = domain_sets(cfg)?;
            let samples = sets
                .iter()
                .map(|(label, set)| linf_sample(label, set))
                .collect::<shapelab_core::Result<Vec<_>>>()?;
            let bound = check_linf_bound(&samples, &samples[0], tol)?;
            let balls = radii_or(cfg, &[0.5, 0.75, 1.0])
                .iter()
                .map(|&r| {
                    let g = build_grid(&DomainSpec::disk(r).with_dim(cfg.dim), cfg.resolution)?;
                    linf_sample(&format!("disk({r})"), &CellSet::full(&g))
                })
                .collect::<shapelab_core::Result<Vec<_>>>()?;
            let exponent = check_linf_exponent(&balls, tol)?;
            let a = sink.report(&bound)?;
            let b = sink.report(&exponent)?;
            Ok(a && b)
        }
        Check::KohlerJobin => {
            let sets = domain_sets(cfg)?;
            let r = check_kohler_jobin(&sets, &sets[0].1, tol)?;
            sink.report(&r)
        }
        Check::Scaling => {
            let radii = radii_or(cfg, &[0.5, 0.75, 1.0]);
            let r = check_scaling(cfg.alpha, cfg.mode, cfg.dim, &radii, cfg.resolution, tol)?;
            sink.report(&r)
        }
        Check::Coercivity => {
            let default: &[f64] = if cfg.dim == 2 {
                &[1.0, 0.7, 0.5, 0.35, 0.25, 0.18, 0.125, 0.09]
            } else {
                &[1.0, 0.7, 0.5, 0.35, 0.25]
            };
            let radii = radii_or(cfg, default);
            let r = check_coercivity(cfg.alpha, cfg.dim, &radii, cfg.resolution, tol)?;
            sink.report(&r)
        }
    }
}
