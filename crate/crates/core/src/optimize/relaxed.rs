//! Projected-gradient descent on the relaxed cost over `{v >= 0}`, followed
//! by flip refinement of the positivity set.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::search::{local_search, SearchOptions};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::functional::{evaluate_v, gradient_v, FunctionalParams, MeasureKind, ProblemKind};
use crate::grid::{CellSet, Grid};
use crate::pde::{solve_torsion, DEFAULT_TORSION_TOL};

#[derive(Debug, Clone)]
pub struct RelaxedOptions {
    /// Iteration cap per annealing phase.
    pub max_iters: usize,
    /// Number of annealing phases; `ε` halves between phases.
    pub phases: usize,
    /// Initial smoothing width as a fraction of `‖v₀‖∞`.
    pub epsilon0: f64,
    /// Trial step, as a fraction of `‖v‖∞ / ‖g‖∞`.
    pub step0: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    pub armijo: f64,
    /// A phase ends when the cost drops by less than `stall_tol`
    /// (relative) over `stall_window` iterations.
    pub stall_window: usize,
    pub stall_tol: f64,
    /// Amplitude of the seeded multiplicative perturbation of the start.
    pub noise: f64,
    /// Refine the positivity set by flip descent and return its torsion
    /// function.
    pub polish: bool,
}

impl Default for RelaxedOptions {
    fn default() -> Self {
        RelaxedOptions {
            max_iters: 400,
            phases: 6,
            epsilon0: 0.2,
            step0: 1.0,
            backtrack: 0.5,
            max_backtracks: 10,
            armijo: 1e-4,
            stall_window: 50,
            stall_tol: 1e-8,
            noise: 0.0,
            polish: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub phase: usize,
    pub value: f64,
    pub measure: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct RelaxedRun {
    /// Nonnegative minimizer; after polishing, the torsion function of its
    /// positivity set scaled so that `∫v = ∫|∇v|²`.
    pub v_star: ScalarField,
    /// Last descent iterate, before polishing.
    pub descent_v: ScalarField,
    pub history: Vec<HistoryEntry>,
    pub converged: bool,
    pub params: FunctionalParams,
    /// Exact-measure cost of `v_star`.
    pub value: f64,
    pub polish_flips: usize,
}

fn inner(a: &ScalarField, b: &[f64]) -> f64 {
    a.grid().cell_volume() * a.values().iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

/// Minimizes `M_ε(v)^α E(v) / I(v)²` over nonnegative fields on `grid`
/// (compliance form), starting from the torsion function of `D`.
pub fn minimize_relaxed(
    grid: &Arc<Grid>,
    params: &FunctionalParams,
    opts: &RelaxedOptions,
    seed: u64,
) -> Result<RelaxedRun> {
    if params.kind != ProblemKind::Compliance {
        return Err(Error::InvalidParameter(
            "relaxed minimization is defined for the compliance form".into(),
        ));
    }
    if opts.max_iters == 0 || opts.phases == 0 {
        return Err(Error::InvalidParameter(
            "max_iters and phases must be >= 1".into(),
        ));
    }
    if params.alpha >= params.kind.threshold(params.dim) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be < {} for minimization",
            params.kind.threshold(params.dim)
        )));
    }
    let full = CellSet::full(grid);
    let mut v = solve_torsion(&full, DEFAULT_TORSION_TOL)?.w;
    if opts.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vals = v.clone().into_values();
        for &p in grid.inside_nodes() {
            vals[p] *= 1.0 + opts.noise * rng.gen_range(-1.0..1.0);
            vals[p] = vals[p].max(0.0);
        }
        v = ScalarField::new(Arc::clone(grid), vals)?;
    }

    let mut p = params
        .with_measure(MeasureKind::Smoothed)
        .with_epsilon(opts.epsilon0 * v.sup_norm())?;
    let mut history = Vec::new();
    let mut iteration = 0;
    let mut converged = false;
    for phase in 0..opts.phases {
        let mut f = evaluate_v(&v, &p)?.value;
        let mut phase_values = vec![f];
        converged = false;
        for _ in 0..opts.max_iters {
            let g = gradient_v(&v, &p)?;
            let g_inf = g.sup_norm();
            if g_inf == 0.0 || !g_inf.is_finite() {
                if !g_inf.is_finite() {
                    return Err(Error::NonFinite { iteration });
                }
                converged = true;
                break;
            }
            let mut s = opts.step0 * v.sup_norm() / g_inf;
            let mut accepted = None;
            for _ in 0..=opts.max_backtracks {
                let trial: Vec<f64> = v
                    .values()
                    .iter()
                    .zip(g.values())
                    .map(|(a, b)| (a - s * b).max(0.0))
                    .collect();
                if trial.iter().all(|&x| x == 0.0) {
                    s *= opts.backtrack;
                    continue;
                }
                let tv = ScalarField::new(Arc::clone(grid), trial)?;
                let fv = evaluate_v(&tv, &p)?;
                if !fv.value.is_finite() {
                    return Err(Error::NonFinite { iteration });
                }
                let diff: Vec<f64> = tv
                    .values()
                    .iter()
                    .zip(v.values())
                    .map(|(a, b)| a - b)
                    .collect();
                if fv.value <= f + opts.armijo * inner(&g, &diff) {
                    accepted = Some((tv, fv));
                    break;
                }
                s *= opts.backtrack;
            }
            iteration += 1;
            let Some((tv, fv)) = accepted else {
                converged = true;
                break;
            };
            if tv.sup_norm() <= 1e-14 * v.sup_norm() {
                return Err(Error::Collapse { iteration });
            }
            v = tv;
            f = fv.value;
            history.push(HistoryEntry {
                iteration,
                phase,
                value: f,
                measure: fv.measure_term,
                step: s,
            });
            phase_values.push(f);
            let k = phase_values.len();
            if k > opts.stall_window {
                let old = phase_values[k - 1 - opts.stall_window];
                if (old - f) <= opts.stall_tol * old.abs() {
                    converged = true;
                    break;
                }
            }
        }
        if phase + 1 < opts.phases {
            p = p.with_epsilon(p.epsilon * 0.5)?;
        }
    }

    let descent_v = v.clone();
    let mut polish_flips = 0;
    let v_star = if opts.polish {
        let support = v.support(params.tau);
        if support.is_empty() {
            return Err(Error::Collapse { iteration });
        }
        let search = local_search(
            &support,
            params,
            &SearchOptions {
                batch: true,
                ..SearchOptions::default()
            },
        )?;
        polish_flips = search.flips;
        solve_torsion(&search.omega_star, DEFAULT_TORSION_TOL)?
            .w
            .normalized()?
    } else {
        v.normalized()?
    };
    let exact = params.with_measure(MeasureKind::Exact);
    let value = evaluate_v(&v_star, &exact)?.value;
    Ok(RelaxedRun {
        v_star,
        descent_v,
        history,
        converged,
        params: *params,
        value,
        polish_flips,
    })
}

/// The positivity set `{v_star > tau}` of a run.
pub fn extract_support(run: &RelaxedRun, tau: f64) -> Result<CellSet> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tau must be >= 0, got {tau}"
        )));
    }
    let set = run.v_star.support(tau);
    if set.is_empty() {
        return Err(Error::EmptyDomain);
    }
    Ok(set)
}
