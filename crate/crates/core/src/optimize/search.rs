//! Single-node flip descent on cell sets.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::functional::{
    assemble_compliance, assemble_eigen, evaluate_set, FunctionalParams, FunctionalValue,
    ProblemKind,
};
use crate::grid::{CellSet, Grid};
use crate::linalg::{BandedCholesky, StencilOperator};
use crate::pde::{solve_eigen_from, solve_torsion_from, DEFAULT_EIGEN_TOL, DEFAULT_TORSION_TOL};

/// Relative improvement below which two costs count as tied.
pub const TIE_TOL: f64 = 1e-12;

/// How candidate flips are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlipEvaluator {
    /// Exact rank-one update formulas from a band Cholesky factor of the
    /// current operator (compliance only; the eigen form falls back to
    /// re-solving).
    Factorized,
    /// A warm-started solve per candidate.
    Resolve,
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    /// Accept the lowest-index improving flip instead of the best one.
    pub first_improvement: bool,
    /// Accept several well-separated improving flips per sweep, falling back
    /// to the single best flip when the combined move does not improve.
    pub batch: bool,
    pub evaluator: FlipEvaluator,
    pub max_flips: usize,
    /// Perturb-and-descend rounds after the first local optimum.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            first_improvement: false,
            batch: false,
            evaluator: FlipEvaluator::Factorized,
            max_flips: 1_000_000,
            restarts: 0,
            seed: 0,
        }
    }
}

/// One accepted flip and the cost right after it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipMove {
    pub node: usize,
    pub added: bool,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct SearchRun {
    pub omega_star: CellSet,
    /// Cost of `omega_star`, evaluated from scratch.
    pub value: f64,
    pub evaluation: FunctionalValue,
    pub flips: usize,
    pub restarts: usize,
    pub trace: Vec<FlipMove>,
}

/// Scores flips of one fixed base set.
enum Scorer {
    Factorized {
        op: StencilOperator,
        chol: BandedCholesky,
        w: Vec<f64>,
        compliance: f64,
    },
    Resolve {
        warm: ScalarField,
    },
}

struct State {
    set: CellSet,
    scorer: Scorer,
    value: f64,
    alpha: f64,
    kind: ProblemKind,
}

impl State {
    fn new(
        set: CellSet,
        params: &FunctionalParams,
        evaluator: FlipEvaluator,
        warm: Option<&ScalarField>,
    ) -> Result<State> {
        if set.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let m = set.measure();
        let (scorer, value) = match (params.kind, evaluator) {
            (ProblemKind::Compliance, FlipEvaluator::Factorized) => {
                let op = StencilOperator::new(set.grid(), set.mask());
                let chol = BandedCholesky::factor(&op)?;
                let w = chol.solve(&vec![1.0; op.len()]);
                let compliance = set.grid().cell_volume() * w.iter().sum::<f64>();
                let value = assemble_compliance(m, compliance, params.alpha).value;
                (
                    Scorer::Factorized {
                        op,
                        chol,
                        w,
                        compliance,
                    },
                    value,
                )
            }
            (ProblemKind::Compliance, _) => {
                let t = solve_torsion_from(&set, DEFAULT_TORSION_TOL, warm)?;
                let value = assemble_compliance(m, t.compliance, params.alpha).value;
                (Scorer::Resolve { warm: t.w }, value)
            }
            (ProblemKind::Eigen, _) => {
                let e = solve_eigen_from(&set, DEFAULT_EIGEN_TOL, warm)?;
                let value = assemble_eigen(m, e.lambda1, params.alpha).value;
                (Scorer::Resolve { warm: e.u }, value)
            }
        };
        Ok(State {
            set,
            scorer,
            value,
            alpha: params.alpha,
            kind: params.kind,
        })
    }

    fn warm(&self) -> Option<&ScalarField> {
        match &self.scorer {
            Scorer::Resolve { warm } => Some(warm),
            Scorer::Factorized { .. } => None,
        }
    }

    /// Cost after flipping node `p`.
    fn score(&self, p: usize) -> Result<f64> {
        let grid = self.set.grid();
        let hn = grid.cell_volume();
        let adding = !self.set.is_active(p);
        let m = self.set.measure() + if adding { hn } else { -hn };
        match &self.scorer {
            Scorer::Factorized {
                op,
                chol,
                w,
                compliance,
            } => {
                let inv_h2 = -op.off();
                let c = if adding {
                    let mut beta = Vec::with_capacity(2 * grid.dim());
                    let mut s = 1.0;
                    for q in grid.neighbors(p) {
                        if let Some(k) = op.unknown(q) {
                            beta.push((k, op.off()));
                            s += w[k] * inv_h2;
                        }
                    }
                    let schur = op.diag() - chol.inverse_quadratic_form(&beta);
                    compliance + hn * s * s / schur
                } else {
                    let k = op.unknown(p).expect("active node has an unknown");
                    let g = chol.inverse_quadratic_form(&[(k, 1.0)]);
                    compliance - hn * w[k] * w[k] / g
                };
                Ok(assemble_compliance(m, c, self.alpha).value)
            }
            Scorer::Resolve { warm } => {
                let mut next = self.set.clone();
                next.set_active(p, adding)?;
                Ok(match self.kind {
                    ProblemKind::Compliance => {
                        let c =
                            solve_torsion_from(&next, DEFAULT_TORSION_TOL, Some(warm))?.compliance;
                        assemble_compliance(m, c, self.alpha).value
                    }
                    ProblemKind::Eigen => {
                        let l = solve_eigen_from(&next, DEFAULT_EIGEN_TOL, Some(warm))?.lambda1;
                        assemble_eigen(m, l, self.alpha).value
                    }
                })
            }
        }
    }
}

/// Nodes whose flip keeps the move local: active nodes with a non-active
/// neighbor (inside or outside `D`) and inactive nodes of `D` with an
/// active neighbor, row-major. A lone active node is never offered for
/// removal.
pub(crate) fn flip_candidates(set: &CellSet) -> Vec<usize> {
    let g = set.grid();
    let single = set.count() == 1;
    g.inside_nodes()
        .iter()
        .copied()
        .filter(|&p| {
            if set.is_active(p) {
                !single && g.neighbors(p).any(|q| !set.is_active(q))
            } else {
                g.neighbors(p).any(|q| set.is_active(q))
            }
        })
        .collect()
}

fn chebyshev(grid: &Grid, p: usize, q: usize) -> usize {
    let (a, b) = (grid.multi_index(p), grid.multi_index(q));
    (0..grid.dim())
        .map(|d| a[d].abs_diff(b[d]))
        .max()
        .unwrap_or(0)
}

fn improves(candidate: f64, current: f64) -> bool {
    candidate < current - TIE_TOL * current.abs()
}

fn flipped(set: &CellSet, nodes: &[usize]) -> Result<CellSet> {
    let mut next = set.clone();
    for &p in nodes {
        let on = !next.is_active(p);
        next.set_active(p, on)?;
    }
    Ok(next)
}

/// Descends from `state` to a flip-optimal set.
fn descend(
    mut state: State,
    params: &FunctionalParams,
    opts: &SearchOptions,
    flips: &mut usize,
    trace: &mut Vec<FlipMove>,
) -> Result<State> {
    loop {
        if *flips >= opts.max_flips {
            return Ok(state);
        }
        let candidates = flip_candidates(&state.set);
        let scores: Vec<f64> = candidates
            .par_iter()
            .map(|&p| state.score(p))
            .collect::<Result<Vec<f64>>>()?;
        let current = state.value;
        let pick = if opts.first_improvement {
            scores.iter().position(|&s| improves(s, current))
        } else {
            // Strict comparison keeps the lowest index among ties.
            let mut best: Option<usize> = None;
            for (i, &s) in scores.iter().enumerate() {
                if improves(s, current) && best.is_none_or(|b| s < scores[b]) {
                    best = Some(i);
                }
            }
            best
        };
        let Some(best) = pick else {
            return Ok(state);
        };

        if opts.batch && !opts.first_improvement {
            let mut order: Vec<usize> = (0..candidates.len())
                .filter(|&i| improves(scores[i], current))
                .collect();
            order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
            let grid = Arc::clone(state.set.grid());
            let mut chosen: Vec<usize> = Vec::new();
            for i in order {
                let p = candidates[i];
                if chosen.iter().all(|&q| chebyshev(&grid, p, q) > 2) {
                    chosen.push(p);
                }
                if *flips + chosen.len() >= opts.max_flips {
                    break;
                }
            }
            if chosen.len() > 1 {
                let next = flipped(&state.set, &chosen)?;
                if !next.is_empty() {
                    let trial = State::new(next, params, opts.evaluator, state.warm())?;
                    if improves(trial.value, current) {
                        for &p in &chosen {
                            trace.push(FlipMove {
                                node: p,
                                added: trial.set.is_active(p),
                                value: trial.value,
                            });
                        }
                        *flips += chosen.len();
                        state = trial;
                        continue;
                    }
                }
            }
        }

        let p = candidates[best];
        let next = flipped(&state.set, &[p])?;
        state = State::new(next, params, opts.evaluator, state.warm())?;
        *flips += 1;
        trace.push(FlipMove {
            node: p,
            added: state.set.is_active(p),
            value: state.value,
        });
    }
}

/// Flip descent on the set cost selected by `params.kind`, starting from
/// `init`. Deterministic: candidates are scored independently and the
/// lowest node index wins ties.
pub fn local_search(
    init: &CellSet,
    params: &FunctionalParams,
    opts: &SearchOptions,
) -> Result<SearchRun> {
    if init.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let mut flips = 0;
    let mut trace = Vec::new();
    let start = State::new(init.clone(), params, opts.evaluator, None)?;
    let mut best = descend(start, params, opts, &mut flips, &mut trace)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.restarts {
        let mut pool = flip_candidates(&best.set);
        if pool.is_empty() {
            break;
        }
        pool.shuffle(&mut rng);
        let k = (pool.len() / 10).max(1);
        let mut kick = pool[..k].to_vec();
        kick.sort_unstable();
        let perturbed = flipped(&best.set, &kick)?;
        if perturbed.is_empty() {
            continue;
        }
        let mut local_trace = Vec::new();
        let mut local_flips = 0;
        let state = State::new(perturbed, params, opts.evaluator, best.warm())?;
        let cand = descend(state, params, opts, &mut local_flips, &mut local_trace)?;
        if improves(cand.value, best.value) {
            flips += local_flips + k;
            trace.extend(local_trace);
            best = cand;
        }
    }

    let evaluation = evaluate_set(&best.set, params)?;
    Ok(SearchRun {
        value: evaluation.value,
        evaluation,
        omega_star: best.set,
        flips,
        restarts: opts.restarts,
        trace,
    })
}
