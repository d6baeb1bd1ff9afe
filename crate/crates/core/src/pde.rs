//! Torsion problem, first Dirichlet eigenpair and the ball torsion
//! replacement, all on the `2N+1`-point stencil with node-exclusion
//! boundary conditions.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::CellSet;
use crate::linalg::{conjugate_gradient, StencilOperator};

pub const DEFAULT_TORSION_TOL: f64 = 1e-10;
pub const DEFAULT_EIGEN_TOL: f64 = 1e-8;

/// Upper bound on outer inverse-power iterations.
const MAX_POWER_ITERS: usize = 10_000;

/// Discrete torsion function `w` (`L w = 1` on the active nodes) and its
/// integral, the compliance.
#[derive(Debug, Clone)]
pub struct TorsionSolution {
    pub w: ScalarField,
    pub compliance: f64,
    pub sup_norm: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub lambda1: f64,
    /// Nonnegative, `h^N Σ u² = 1`.
    pub u: ScalarField,
    pub iterations: usize,
    /// Last relative Rayleigh-quotient increment.
    pub residual: f64,
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )))
    }
}

pub fn solve_torsion(set: &CellSet, tol: f64) -> Result<TorsionSolution> {
    solve_torsion_from(set, tol, None)
}

/// [`solve_torsion`] with an optional warm start (values at active nodes
/// are used, everything else is ignored).
pub fn solve_torsion_from(
    set: &CellSet,
    tol: f64,
    start: Option<&ScalarField>,
) -> Result<TorsionSolution> {
    check_tol(tol)?;
    if set.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let grid = set.grid();
    let op = StencilOperator::new(grid, set.mask());
    let b = vec![1.0; op.len()];
    let mut x = match start {
        Some(f) => op.gather(f.values()),
        None => vec![0.0; op.len()],
    };
    let out = conjugate_gradient(&op, &b, &mut x, tol)?;
    let w = ScalarField::from_raw(Arc::clone(grid), op.scatter(&x, grid.len()));
    Ok(TorsionSolution {
        compliance: w.integral(),
        sup_norm: w.sup_norm(),
        w,
        iterations: out.iterations,
        residual: out.residual,
    })
}

pub fn solve_eigen(set: &CellSet, tol: f64) -> Result<EigenResult> {
    solve_eigen_from(set, tol, None)
}

/// [`solve_eigen`] with an optional starting vector (defaults to all ones).
pub fn solve_eigen_from(
    set: &CellSet,
    tol: f64,
    start: Option<&ScalarField>,
) -> Result<EigenResult> {
    check_tol(tol)?;
    if set.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let grid = set.grid();
    let op = StencilOperator::new(grid, set.mask());
    let n = op.len();
    let inner_tol = (tol * 1e-2).clamp(1e-13, 1e-10);

    let mut u = match start {
        Some(f) => op.gather(f.values()),
        None => vec![1.0; n],
    };
    if u.iter().all(|&v| v == 0.0) {
        u = vec![1.0; n];
    }
    normalize(&mut u);
    let mut lu = vec![0.0; n];
    op.apply(&u, &mut lu);
    let mut lambda = dot(&u, &lu);
    let mut x: Vec<f64> = u.iter().map(|v| v / lambda).collect();
    let mut increment = f64::INFINITY;
    let mut it = 0;
    while it < MAX_POWER_ITERS {
        conjugate_gradient(&op, &u, &mut x, inner_tol)?;
        u.copy_from_slice(&x);
        normalize(&mut u);
        op.apply(&u, &mut lu);
        let next = dot(&u, &lu);
        increment = ((next - lambda) / next).abs();
        lambda = next;
        it += 1;
        if increment <= tol {
            break;
        }
        for (xi, ui) in x.iter_mut().zip(&u) {
            *xi = ui / lambda;
        }
    }
    if increment > tol {
        return Err(Error::NotConverged {
            solver: "inverse power iteration",
            iterations: it,
            residual: increment,
        });
    }
    if u.iter().sum::<f64>() < 0.0 {
        u.iter_mut().for_each(|v| *v = -*v);
    }
    let scale = 1.0 / grid.cell_volume().sqrt();
    u.iter_mut().for_each(|v| *v *= scale);
    Ok(EigenResult {
        lambda1: lambda,
        u: ScalarField::from_raw(Arc::clone(grid), op.scatter(&u, grid.len())),
        iterations: it,
        residual: increment,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(u: &mut [f64]) {
    let n = dot(u, u).sqrt();
    u.iter_mut().for_each(|v| *v /= n);
}

/// Nodes of the closed ball `|x - x0| <= radius`; every such node of the
/// array must belong to `D`.
pub(crate) fn ball_nodes(set: &CellSet, x0: &[f64], radius: f64) -> Result<Vec<bool>> {
    let grid = set.grid();
    let dim = grid.dim();
    let outside = || Error::BallOutsideDomain {
        center: x0.to_vec(),
        radius,
    };
    if x0.len() != dim || radius.is_nan() || radius <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "ball needs a {dim}-dimensional center and positive radius"
        )));
    }
    let h = grid.h();
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for d in 0..dim {
        let a = ((x0[d] - radius - grid.origin()[d]) / h).floor();
        let b = ((x0[d] + radius - grid.origin()[d]) / h).ceil();
        if a < 0.0 || b > (grid.shape()[d] - 1) as f64 {
            return Err(outside());
        }
        lo[d] = a as usize;
        hi[d] = b as usize;
    }
    let mut mask = vec![false; grid.len()];
    let r2 = radius * radius;
    for k in lo[2]..=hi[2] {
        for j in lo[1]..=hi[1] {
            for i in lo[0]..=hi[0] {
                let p = grid.index(&[i, j, k][..dim]);
                let x = grid.coords(p);
                let d2: f64 = (0..dim).map(|d| (x[d] - x0[d]) * (x[d] - x0[d])).sum();
                if d2 <= r2 {
                    if !grid.is_inside(p) {
                        return Err(outside());
                    }
                    mask[p] = true;
                }
            }
        }
    }
    Ok(mask)
}

/// Replaces `v` inside the closed ball `B_R(x0)` by the solution of
/// `L v̂ = 1` there, with Dirichlet data read from `v` on the nodes just
/// outside the ball. `v` is returned unchanged elsewhere.
pub fn solve_harmonic_replacement(
    v: &ScalarField,
    set: &CellSet,
    x0: &[f64],
    radius: f64,
    tol: f64,
) -> Result<ScalarField> {
    check_tol(tol)?;
    if !Arc::ptr_eq(v.grid(), set.grid()) && v.grid() != set.grid() {
        return Err(Error::FieldMismatch(
            "field and set live on different grids".into(),
        ));
    }
    if !v.vanishes_outside(set) {
        return Err(Error::FieldMismatch(
            "field is nonzero outside the set".into(),
        ));
    }
    let ball = ball_nodes(set, x0, radius)?;
    let grid = set.grid();
    let op = StencilOperator::new(grid, &ball);
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let vals = v.values();
    let b: Vec<f64> = op
        .nodes()
        .iter()
        .map(|&p| {
            1.0 + inv_h2
                * grid
                    .neighbors(p)
                    .filter(|&q| !ball[q])
                    .map(|q| vals[q])
                    .sum::<f64>()
        })
        .collect();
    let mut x = op.gather(vals);
    conjugate_gradient(&op, &b, &mut x, tol)?;
    let mut out = vals.to_vec();
    for (&p, &xi) in op.nodes().iter().zip(&x) {
        out[p] = xi;
    }
    Ok(ScalarField::from_raw(Arc::clone(grid), out))
}
