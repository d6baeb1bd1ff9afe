//! The restricted negative Laplacian and the two linear solvers built on it:
//! Jacobi-preconditioned conjugate gradients and a banded Cholesky factor
//! used for exact single-node update formulas.

use crate::error::{Error, Result};
use crate::grid::Grid;

const NONE: u32 = u32::MAX;

/// `L = -Δ_h` restricted to the active nodes of a mask: `2N/h²` on the
/// diagonal, `-1/h²` between active lattice neighbors, homogeneous Dirichlet
/// data at every non-active node.
#[derive(Debug, Clone)]
pub(crate) struct StencilOperator {
    nodes: Vec<usize>,
    compact: Vec<u32>,
    nbrs: Vec<u32>,
    fan: usize,
    diag: f64,
    off: f64,
}

impl StencilOperator {
    pub fn new(grid: &Grid, mask: &[bool]) -> StencilOperator {
        let nodes: Vec<usize> = grid
            .inside_nodes()
            .iter()
            .copied()
            .filter(|&p| mask[p])
            .collect();
        let mut compact = vec![NONE; grid.len()];
        for (k, &p) in nodes.iter().enumerate() {
            compact[p] = k as u32;
        }
        let fan = 2 * grid.dim();
        let mut nbrs = Vec::with_capacity(nodes.len() * fan);
        for &p in &nodes {
            nbrs.extend(grid.neighbors(p).map(|q| compact[q]));
        }
        let inv_h2 = 1.0 / (grid.h() * grid.h());
        StencilOperator {
            nodes,
            compact,
            nbrs,
            fan,
            diag: fan as f64 * inv_h2,
            off: -inv_h2,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Grid indices of the unknowns, increasing.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Unknown index of grid node `p`, if active.
    pub fn unknown(&self, p: usize) -> Option<usize> {
        match self.compact[p] {
            NONE => None,
            k => Some(k as usize),
        }
    }

    pub fn diag(&self) -> f64 {
        self.diag
    }

    pub fn off(&self) -> f64 {
        self.off
    }

    pub fn neighbors(&self, k: usize) -> &[u32] {
        &self.nbrs[k * self.fan..(k + 1) * self.fan]
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (k, (yk, nb)) in y
            .iter_mut()
            .zip(self.nbrs.chunks_exact(self.fan))
            .enumerate()
        {
            let mut s = 0.0;
            for &q in nb {
                if q != NONE {
                    s += x[q as usize];
                }
            }
            *yk = self.diag * x[k] + self.off * s;
        }
    }

    pub fn gather(&self, field: &[f64]) -> Vec<f64> {
        self.nodes.iter().map(|&p| field[p]).collect()
    }

    pub fn scatter(&self, x: &[f64], len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (&p, &v) in self.nodes.iter().zip(x) {
            out[p] = v;
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct CgOutcome {
    pub iterations: usize,
    pub residual: f64,
}

/// Iteration cap `50 · sqrt(n)`.
pub(crate) fn cg_iteration_cap(n: usize) -> usize {
    ((50.0 * (n as f64).sqrt()).ceil() as usize).max(50)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `L x = b` to relative residual `tol`, starting from the contents
/// of `x`.
pub(crate) fn conjugate_gradient(
    op: &StencilOperator,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
) -> Result<CgOutcome> {
    conjugate_gradient_capped(op, b, x, tol, cg_iteration_cap(op.len()))
}

fn conjugate_gradient_capped(
    op: &StencilOperator,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    cap: usize,
) -> Result<CgOutcome> {
    let n = op.len();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome {
            iterations: 0,
            residual: 0.0,
        });
    }
    let inv_diag = 1.0 / op.diag();
    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().map(|v| v * inv_diag).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut residual = dot(&r, &r).sqrt() / b_norm;
    let mut it = 0;
    while residual > tol {
        if it >= cap || !residual.is_finite() {
            return Err(Error::NotConverged {
                solver: "conjugate gradient",
                iterations: it,
                residual,
            });
        }
        op.apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for (zi, ri) in z.iter_mut().zip(&r) {
            *zi = ri * inv_diag;
        }
        let rz_new = dot(&r, &z);
        if rz_new == 0.0 {
            residual = 0.0;
            it += 1;
            break;
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        residual = dot(&r, &r).sqrt() / b_norm;
        it += 1;
    }
    Ok(CgOutcome {
        iterations: it,
        residual,
    })
}

/// Lower-triangular band factor `L = R Rᵀ` of a [`StencilOperator`], in the
/// operator's unknown ordering.
#[derive(Debug, Clone)]
pub(crate) struct BandedCholesky {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

/// Refuse factorizations whose band storage exceeds this many entries.
pub(crate) const MAX_BAND_ENTRIES: usize = 60_000_000;

impl BandedCholesky {
    pub fn factor(op: &StencilOperator) -> Result<BandedCholesky> {
        let n = op.len();
        let mut bw = 0;
        for k in 0..n {
            for &q in op.neighbors(k) {
                if q != NONE && (q as usize) < k {
                    bw = bw.max(k - q as usize);
                }
            }
        }
        let w = bw + 1;
        if n.saturating_mul(w) > MAX_BAND_ENTRIES {
            return Err(Error::InvalidParameter(format!(
                "band factorization too large ({n} unknowns, bandwidth {bw})"
            )));
        }
        let mut data = vec![0.0; n * w];
        // Scatter A's lower band.
        for k in 0..n {
            data[k * w + bw] = op.diag();
            for &q in op.neighbors(k) {
                if q != NONE && (q as usize) < k {
                    data[k * w + bw - (k - q as usize)] = op.off();
                }
            }
        }
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let row_i = i * w + bw - i;
                let row_j = j * w + bw - j;
                let mut s = data[row_i + j];
                for k in k0..j {
                    s -= data[row_i + k] * data[row_j + k];
                }
                if j == i {
                    if s <= 0.0 {
                        return Err(Error::InvalidParameter(
                            "matrix is not positive definite".into(),
                        ));
                    }
                    data[row_i + i] = s.sqrt();
                } else {
                    data[row_i + j] = s / data[row_j + j];
                }
            }
        }
        Ok(BandedCholesky { n, bw, data })
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.bw + 1) + self.bw + j - i]
    }

    /// `y = R⁻¹ b` for `b` supported on indices `>= start`.
    fn forward(&self, b: &[f64], start: usize) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in start..self.n {
            let k0 = start.max(i.saturating_sub(self.bw));
            let base = i * (self.bw + 1) + self.bw - i;
            let mut s = b[i];
            s -= self.data[base + k0..base + i]
                .iter()
                .zip(&y[k0..i])
                .map(|(a, b)| a * b)
                .sum::<f64>();
            y[i] = s / self.data[base + i];
        }
        y
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.forward(b, 0);
        for i in (0..self.n).rev() {
            let mut s = x[i];
            let k1 = (i + self.bw + 1).min(self.n);
            s -= (i + 1..k1).map(|k| self.at(k, i) * x[k]).sum::<f64>();
            x[i] = s / self.at(i, i);
        }
        x
    }

    /// `bᵀ L⁻¹ b` for a sparse `b` given as `(index, value)` pairs.
    pub fn inverse_quadratic_form(&self, entries: &[(usize, f64)]) -> f64 {
        let Some(start) = entries.iter().map(|e| e.0).min() else {
            return 0.0;
        };
        let mut b = vec![0.0; self.n];
        for &(i, v) in entries {
            b[i] += v;
        }
        let y = self.forward(&b, start);
        y[start..].iter().map(|v| v * v).sum()
    }
}
