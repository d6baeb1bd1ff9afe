use std::fmt::Write as _;

use super::{Report, Tolerances};
use crate::error::{Error, Result};
use crate::field::{fmt_real, ScalarField};
use crate::grid::Grid;
use crate::pde::{solve_torsion, DEFAULT_TORSION_TOL};

/// Lattice radius of the fitting stencil around a boundary node.
const FIT_RADIUS: f64 = 2.5;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityReport {
    /// `α C(Ω) / |Ω|` for `Ω = {v > 0}`.
    pub target: f64,
    pub free_mean: f64,
    pub free_relstd: f64,
    pub contact_min: f64,
    pub free_pass: bool,
    pub contact_pass: bool,
    pub free_samples: usize,
    pub contact_samples: usize,
    pub compliance: f64,
    pub measure: f64,
}

impl OptimalityReport {
    pub fn free_ratio(&self) -> f64 {
        self.free_mean / self.target
    }
}

/// Estimates of `|∇v|²` on the boundary at each node of `nodes`.
///
/// A linear least-squares model of `v` is fitted over the nodes of
/// `{v > 0}` within lattice distance 2.5 of the boundary node and evaluated
/// at the centroid `x̄` of those nodes, giving `|∇v(x̄)|² + 2 v(x̄)`. For a
/// solution of `Δv = -1` the normal profile conserves `|∂_n v|² + 2v`, so
/// this extrapolates the squared gradient to the level `v = 0`.
pub fn boundary_gradient_estimates(v: &ScalarField, nodes: &[usize]) -> Vec<f64> {
    let grid = v.grid();
    nodes.iter().map(|&p| fit_estimate(grid, v, p)).collect()
}

fn fit_estimate(grid: &Grid, v: &ScalarField, p: usize) -> f64 {
    let dim = grid.dim();
    let h = grid.h();
    let m = grid.multi_index(p);
    let reach = FIT_RADIUS.floor() as isize;
    let mut pts: Vec<([f64; 3], f64)> = Vec::new();
    let range = |d: usize| if d < dim { -reach..=reach } else { 0..=0 };
    for dk in range(2) {
        for dj in range(1) {
            for di in range(0) {
                let off = [di, dj, dk];
                let r2: isize = off.iter().map(|o| o * o).sum();
                if (r2 as f64) > FIT_RADIUS * FIT_RADIUS {
                    continue;
                }
                let mut idx = [0usize; 3];
                let mut ok = true;
                for d in 0..dim {
                    let k = m[d] as isize + off[d];
                    if k < 0 || k >= grid.shape()[d] as isize {
                        ok = false;
                        break;
                    }
                    idx[d] = k as usize;
                }
                if !ok {
                    continue;
                }
                let q = grid.index(&idx[..dim]);
                let val = v.get(q);
                if val > 0.0 {
                    pts.push(([di as f64 * h, dj as f64 * h, dk as f64 * h], val));
                }
            }
        }
    }
    let n = pts.len() as f64;
    let mut c = [0.0; 3];
    let mut vbar = 0.0;
    for (x, val) in &pts {
        for d in 0..dim {
            c[d] += x[d] / n;
        }
        vbar += val / n;
    }
    let mut s = [[0.0; 3]; 3];
    let mut t = [0.0; 3];
    for (x, val) in &pts {
        for a in 0..dim {
            t[a] += (x[a] - c[a]) * (val - vbar);
            for b in 0..dim {
                s[a][b] += (x[a] - c[a]) * (x[b] - c[b]);
            }
        }
    }
    let grad = solve_small(&s, &t, dim).unwrap_or([0.0; 3]);
    grad[..dim].iter().map(|g| g * g).sum::<f64>() + 2.0 * vbar
}

/// Gaussian elimination with partial pivoting on a `dim × dim` system.
fn solve_small(a: &[[f64; 3]; 3], b: &[f64; 3], dim: usize) -> Option<[f64; 3]> {
    let mut m = *a;
    let mut r = *b;
    let scale = (0..dim).map(|i| m[i][i].abs()).fold(0.0, f64::max);
    for col in 0..dim {
        let piv = (col..dim).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..dim {
            let f = m[row][col] / m[col][col];
            let pivot = m[col];
            for (a, b) in m[row][col..dim].iter_mut().zip(&pivot[col..dim]) {
                *a -= f * b;
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..dim).rev() {
        let s: f64 = (i + 1..dim).map(|k| m[i][k] * x[k]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    Some(x)
}

fn manhattan(grid: &Grid, p: usize, q: usize) -> usize {
    let (a, b) = (grid.multi_index(p), grid.multi_index(q));
    (0..grid.dim()).map(|d| a[d].abs_diff(b[d])).sum()
}

/// Keeps the nodes of `nodes` farther than `band` lattice steps from every
/// node of `other`.
fn away_from(grid: &Grid, nodes: &[usize], other: &[usize], band: usize) -> Vec<usize> {
    nodes
        .iter()
        .copied()
        .filter(|&p| other.iter().all(|&q| manhattan(grid, p, q) > band))
        .collect()
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Compares the boundary values of `|∇v|²` with `α C(Ω)/|Ω|`, `Ω = {v > 0}`.
/// Free-boundary nodes within `band` lattice steps of the contact set (and
/// contact nodes near the free boundary) are left out of the samples. An
/// empty sample passes vacuously.
pub fn check_optimality(
    v: &ScalarField,
    alpha: f64,
    band: usize,
    tol: &Tolerances,
) -> Result<OptimalityReport> {
    let set = v.support(0.0);
    if set.is_empty() {
        return Err(Error::ZeroField);
    }
    let grid = v.grid();
    let bc = set.classify_boundary();
    if bc.free_boundary_nodes.is_empty() && bc.contact_nodes.is_empty() {
        return Err(Error::Precondition("empty boundary sample".into()));
    }
    let free = away_from(grid, &bc.free_boundary_nodes, &bc.contact_nodes, band);
    let contact = away_from(grid, &bc.contact_nodes, &bc.free_boundary_nodes, band);
    if free.is_empty() && contact.is_empty() {
        return Err(Error::Precondition(format!(
            "empty boundary sample after excluding a band of {band}"
        )));
    }
    let vn = v.normalized()?;
    let compliance = solve_torsion(&set, DEFAULT_TORSION_TOL)?.compliance;
    let measure = set.measure();
    let target = alpha * compliance / measure;

    let fe = boundary_gradient_estimates(&vn, &free);
    let ce = boundary_gradient_estimates(&vn, &contact);
    let (free_mean, free_std) = if fe.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        mean_std(&fe)
    };
    let free_relstd = free_std / free_mean.abs();
    let contact_min = ce.iter().copied().fold(f64::INFINITY, f64::min);
    let free_pass = fe.is_empty()
        || (free_relstd <= tol.free_relstd && (free_mean / target - 1.0).abs() <= tol.free_mean);
    let contact_pass = ce.is_empty() || contact_min >= tol.contact_min * target;
    Ok(OptimalityReport {
        target,
        free_mean,
        free_relstd,
        contact_min,
        free_pass,
        contact_pass,
        free_samples: fe.len(),
        contact_samples: ce.len(),
        compliance,
        measure,
    })
}

impl Report for OptimalityReport {
    fn name(&self) -> &'static str {
        "optimality"
    }

    fn passed(&self) -> bool {
        self.free_pass && self.contact_pass
    }

    fn summary(&self) -> String {
        format!(
            "target {:.6}, free mean/target {:.4} (relstd {:.4}, n={}), contact min/target {:.4} (n={})",
            self.target,
            self.free_ratio(),
            self.free_relstd,
            self.free_samples,
            self.contact_min / self.target,
            self.contact_samples
        )
    }

    fn csv(&self) -> String {
        let mut s = String::from("target,free_mean,free_relstd,contact_min,free_samples,contact_samples,free_pass,contact_pass\n");
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            fmt_real(self.target),
            fmt_real(self.free_mean),
            fmt_real(self.free_relstd),
            fmt_real(self.contact_min),
            self.free_samples,
            self.contact_samples,
            self.free_pass,
            self.contact_pass
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, CellSet, DomainSpec};

    #[test]
    fn linear_profile_is_recovered() {
        // v = 3 (x - 0.3) + 0.05 - (x-0.3)²/2 on x > 0.3 solves v'' = -1 and
        // |v'|² + 2v = 9 + 0.1 along the profile.
        let g = build_grid(&DomainSpec::square(1.0), 40.0).unwrap();
        let v = ScalarField::from_fn(&g, |x| {
            let s = x[0] - 0.3;
            if s > 0.0 {
                3.0 * s + 0.05 - s * s / 2.0
            } else {
                0.0
            }
        });
        let p = g.nearest_node(&[0.325, 0.5]);
        let e = boundary_gradient_estimates(&v, &[p])[0];
        assert!((e - 9.1).abs() < 0.01 * 9.1, "{e}");
    }

    #[test]
    fn ball_at_threshold_is_stationary() {
        let g = build_grid(&DomainSpec::square(2.0), 64.0).unwrap();
        let set = CellSet::ball(&g, &[1.0, 1.0], 0.6);
        let w = solve_torsion(&set, 1e-12).unwrap().w;
        let tol = Tolerances::default();
        let at = check_optimality(&w, 2.0, 2, &tol).unwrap();
        assert_eq!(at.contact_samples, 0);
        assert!((at.free_ratio() - 1.0).abs() < 0.05, "{}", at.summary());
        let below = check_optimality(&w, 1.0, 2, &tol).unwrap();
        assert!((below.free_ratio() - 2.0).abs() < 0.1);
        assert!(!below.free_pass);
    }

    #[test]
    fn zero_field_is_rejected() {
        let g = build_grid(&DomainSpec::square(1.0), 16.0).unwrap();
        assert!(check_optimality(&ScalarField::zeros(&g), 1.0, 0, &Tolerances::default()).is_err());
    }
}
