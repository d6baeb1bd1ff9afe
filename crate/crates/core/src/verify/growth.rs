use std::fmt::Write as _;

use super::{linear_fit, Report, Tolerances};
use crate::error::{Error, Result};
use crate::field::{fmt_real, ScalarField};
use crate::grid::CellSet;
use crate::pde::{solve_harmonic_replacement, DEFAULT_TORSION_TOL};

/// Energies at or below this fraction of `E(v)` are solver noise.
const NOISE_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub radii: Vec<f64>,
    /// `∫|∇(v - v̂)|²` per radius.
    pub energies: Vec<f64>,
    /// Log-log slope of energy against radius; `+∞` when every energy is at
    /// the noise floor (the replacement reproduces `v`).
    pub fitted_slope: f64,
    /// `min (v̂ - v)` over all balls.
    pub comparison_min: f64,
    pub comparison_pass: bool,
    pub slope_pass: bool,
}

/// Replaces `v` by the ball torsion function on `B_R(x0)` for each radius
/// and measures the energy of the difference.
pub fn check_growth(
    v: &ScalarField,
    set: &CellSet,
    x0: &[f64],
    radii: &[f64],
    tol: &Tolerances,
) -> Result<GrowthReport> {
    if radii.len() < 2 {
        return Err(Error::Precondition(
            "the growth fit needs at least 2 radii".into(),
        ));
    }
    let dim = v.grid().dim();
    let floor = NOISE_FLOOR * v.dirichlet_energy();
    let mut energies = Vec::with_capacity(radii.len());
    let mut comparison_min = f64::INFINITY;
    for &r in radii {
        let vh = solve_harmonic_replacement(v, set, x0, r, DEFAULT_TORSION_TOL * 1e-2)?;
        let diff: Vec<f64> = vh
            .values()
            .iter()
            .zip(v.values())
            .map(|(a, b)| a - b)
            .collect();
        comparison_min = diff.iter().copied().fold(comparison_min, f64::min);
        let d = ScalarField::new(v.grid().clone(), diff)?;
        energies.push(d.dirichlet_energy());
    }
    let kept: Vec<usize> = (0..radii.len()).filter(|&i| energies[i] > floor).collect();
    // A radius at the noise floor means the energy vanishes faster than
    // any power the fit could show.
    let fitted_slope = if kept.len() < radii.len() {
        f64::INFINITY
    } else {
        let x: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
        let y: Vec<f64> = energies.iter().map(|e| e.ln()).collect();
        linear_fit(&x, &y).0
    };
    Ok(GrowthReport {
        radii: radii.to_vec(),
        energies,
        fitted_slope,
        comparison_min,
        comparison_pass: comparison_min >= -tol.comparison,
        slope_pass: fitted_slope >= dim as f64 - tol.growth_slope,
    })
}

impl Report for GrowthReport {
    fn name(&self) -> &'static str {
        "growth"
    }

    fn passed(&self) -> bool {
        self.comparison_pass && self.slope_pass
    }

    fn summary(&self) -> String {
        format!(
            "fitted slope {:.4}, min(vhat - v) = {:.3e}",
            self.fitted_slope, self.comparison_min
        )
    }

    fn csv(&self) -> String {
        let mut s = String::from("radius,energy\n");
        for (r, e) in self.radii.iter().zip(&self.energies) {
            let _ = writeln!(s, "{},{}", fmt_real(*r), fmt_real(*e));
        }
        s
    }
}
