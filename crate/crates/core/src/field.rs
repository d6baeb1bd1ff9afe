//! Node-indexed real fields and their discrete calculus.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{CellSet, Grid};

/// Real values per node, zero at every node outside `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<Grid>) -> ScalarField {
        ScalarField {
            values: vec![0.0; grid.len()],
            grid: Arc::clone(grid),
        }
    }

    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != grid.len() {
            return Err(Error::FieldMismatch(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(p) = (0..values.len()).find(|&p| !grid.is_inside(p) && values[p] != 0.0) {
            return Err(Error::FieldMismatch(format!(
                "nonzero value at node {p} outside D"
            )));
        }
        Ok(ScalarField { grid, values })
    }

    /// Samples `f` at the nodes of `D`.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> ScalarField {
        let dim = grid.dim();
        let mut values = vec![0.0; grid.len()];
        for &p in grid.inside_nodes() {
            values[p] = f(&grid.coords(p)[..dim]);
        }
        ScalarField {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub(crate) fn from_raw(grid: Arc<Grid>, values: Vec<f64>) -> ScalarField {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, p: usize) -> f64 {
        self.values[p]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.grid
            .inside_nodes()
            .iter()
            .map(|&p| self.values[p])
            .fold(f64::INFINITY, f64::min)
    }

    /// `I(v) = h^N Σ v`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume()
            * self
                .grid
                .inside_nodes()
                .iter()
                .map(|&p| self.values[p])
                .sum::<f64>()
    }

    /// `E(v) = h^N Σ |∇_h v|²` with forward differences over every lattice
    /// edge of the array (values outside `D` are zero, so edges leaving `D`
    /// are one-sided).
    pub fn dirichlet_energy(&self) -> f64 {
        let g = &*self.grid;
        let h2 = g.h() * g.h();
        let shape = g.shape();
        let mut sum = 0.0;
        for p in 0..g.len() {
            let m = g.multi_index(p);
            let vp = self.values[p];
            for (d, &s) in g.strides().iter().enumerate() {
                if m[d] + 1 < shape[d] {
                    let diff = self.values[p + s] - vp;
                    sum += diff * diff;
                }
            }
        }
        g.cell_volume() * sum / h2
    }

    /// `Δ_h v` at every node of `D` (zero elsewhere).
    pub fn laplacian(&self) -> Vec<f64> {
        let g = &*self.grid;
        let inv_h2 = 1.0 / (g.h() * g.h());
        let two_n = 2.0 * g.dim() as f64;
        let mut out = vec![0.0; g.len()];
        for &p in g.inside_nodes() {
            let nb: f64 = g.neighbors(p).map(|q| self.values[q]).sum();
            out[p] = (nb - two_n * self.values[p]) * inv_h2;
        }
        out
    }

    /// The positivity set `{v > tau}`.
    pub fn support(&self, tau: f64) -> CellSet {
        let active = (0..self.grid.len())
            .map(|p| self.grid.is_inside(p) && self.values[p] > tau)
            .collect();
        CellSet::new(Arc::clone(&self.grid), active).expect("support lies inside D")
    }

    pub fn scaled(&self, c: f64) -> ScalarField {
        ScalarField {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Rescaling with `∫ v / ∫ |∇v|² = 1`; the torsion function of its
    /// support is a fixed point.
    pub fn normalized(&self) -> Result<ScalarField> {
        let e = self.dirichlet_energy();
        if e <= 0.0 {
            return Err(Error::ZeroField);
        }
        Ok(self.scaled(self.integral() / e))
    }

    pub fn vanishes_outside(&self, set: &CellSet) -> bool {
        (0..self.values.len()).all(|p| set.is_active(p) || self.values[p] == 0.0)
    }

    /// CSV with header `x,y[,z],value`, one row per node of `set`, reals
    /// with 17 significant digits.
    pub fn to_csv(&self, set: &CellSet) -> String {
        let g = &*self.grid;
        let dim = g.dim();
        let mut out = String::from(if dim == 2 {
            "x,y,value\n"
        } else {
            "x,y,z,value\n"
        });
        for &p in g.inside_nodes() {
            if !set.is_active(p) {
                continue;
            }
            let x = g.coords(p);
            for c in &x[..dim] {
                let _ = write!(out, "{},", fmt_real(*c));
            }
            let _ = writeln!(out, "{}", fmt_real(self.values[p]));
        }
        out
    }

    /// Binary 8-bit PGM (P5) of a 2D field, min-max scaled over the array,
    /// first image row = largest y.
    pub fn to_pgm(&self) -> Result<Vec<u8>> {
        let g = &*self.grid;
        if g.dim() != 2 {
            return Err(Error::InvalidParameter(
                "PGM export needs a 2D field".into(),
            ));
        }
        let (nx, ny) = (g.shape()[0], g.shape()[1]);
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self
            .values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
        for j in (0..ny).rev() {
            for i in 0..nx {
                let v = (self.values[i + nx * j] - lo) / span;
                out.push((v * 255.0).round().clamp(0.0, 255.0) as u8);
            }
        }
        Ok(out)
    }
}

/// Real formatted with 17 significant digits (lossless for `f64`).
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, DomainSpec};

    #[test]
    fn energy_equals_quadratic_form() {
        let g = build_grid(&DomainSpec::lshape(1.0), 12.0).unwrap();
        let v = ScalarField::from_fn(&g, |x| (3.0 * x[0]).sin() + x[1] * x[1]);
        let lap = v.laplacian();
        let quad = -g.cell_volume()
            * g.inside_nodes()
                .iter()
                .map(|&p| v.get(p) * lap[p])
                .sum::<f64>();
        let e = v.dirichlet_energy();
        assert!((e - quad).abs() <= 1e-12 * e, "{e} vs {quad}");
    }

    #[test]
    fn single_node_energy() {
        let text = "MASK 3 3 0.1\n000\n010\n000\n";
        let path = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(path.path(), text).unwrap();
        let g = Arc::new(Grid::read_mask_file(path.path()).unwrap());
        let mut vals = vec![0.0; g.len()];
        vals[4] = 1.0;
        let v = ScalarField::new(Arc::clone(&g), vals).unwrap();
        // Four edges with difference 1/h.
        assert!((v.dirichlet_energy() - 0.01 * 4.0 / 0.01).abs() < 1e-12);
        assert!((v.integral() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn rejects_values_outside_domain() {
        let g = build_grid(&DomainSpec::square(1.0), 8.0).unwrap();
        let mut vals = vec![0.0; g.len()];
        vals[0] = 1.0;
        assert!(ScalarField::new(g, vals).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = build_grid(&DomainSpec::square(1.0), 8.0).unwrap();
        let v = ScalarField::from_fn(&g, |x| x[0]);
        let csv = v.to_csv(&CellSet::full(&g));
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,y,value"));
        assert_eq!(lines.count(), g.inside_count());
    }

    #[test]
    fn fmt_real_round_trips() {
        for v in [0.1, 1.0 / 3.0, 2.5e-7, -1234.5678, 0.0] {
            assert_eq!(fmt_real(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn pgm_header() {
        let g = build_grid(&DomainSpec::square(1.0), 8.0).unwrap();
        let v = ScalarField::from_fn(&g, |x| x[0] * x[1]);
        let img = v.to_pgm().unwrap();
        let header = format!("P5\n{} {}\n255\n", g.shape()[0], g.shape()[1]);
        assert!(img.starts_with(header.as_bytes()));
        assert_eq!(img.len(), header.len() + g.len());
    }
}
