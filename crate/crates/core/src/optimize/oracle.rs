//! Exhaustive minimization over all non-empty subsets of a tiny region.

use std::sync::Arc;

use rayon::prelude::*;

use super::search::{SearchRun, TIE_TOL};
use crate::error::{Error, Result};
use crate::functional::{evaluate_set, FunctionalParams};
use crate::grid::{CellSet, Grid};

/// Largest number of nodes of `D` the oracle enumerates.
pub const ORACLE_LIMIT: usize = 20;

fn subset(grid: &Arc<Grid>, mask: u32) -> CellSet {
    let mut active = vec![false; grid.len()];
    for (bit, &p) in grid.inside_nodes().iter().enumerate() {
        if mask >> bit & 1 == 1 {
            active[p] = true;
        }
    }
    CellSet::new(Arc::clone(grid), active).expect("subset of D")
}

/// Evaluates every non-empty subset of `D` (bit `i` of the mask selects
/// the `i`-th node of `D` in row-major order) and returns the minimizer.
/// Costs within a relative `1e-12` count as ties, won by the lower mask.
pub fn brute_force_oracle(grid: &Arc<Grid>, params: &FunctionalParams) -> Result<SearchRun> {
    let n = grid.inside_count();
    if n > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge {
            nodes: n,
            limit: ORACLE_LIMIT,
        });
    }
    if n == 0 {
        return Err(Error::EmptyDomain);
    }
    let total: u32 = 1 << n;
    let values: Vec<f64> = (1..total)
        .into_par_iter()
        .map(|mask| evaluate_set(&subset(grid, mask), params).map(|v| v.value))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] - TIE_TOL * values[best].abs() {
            best = i;
        }
    }
    let omega_star = subset(grid, best as u32 + 1);
    let evaluation = evaluate_set(&omega_star, params)?;
    Ok(SearchRun {
        value: evaluation.value,
        evaluation,
        omega_star,
        flips: 0,
        restarts: 0,
        trace: Vec::new(),
    })
}
