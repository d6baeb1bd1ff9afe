use std::f64::consts::PI;
use std::fmt::Write as _;

use super::{Report, Tolerances};
use crate::error::{Error, Result};
use crate::field::fmt_real;
use crate::grid::CellSet;
use crate::pde::{solve_eigen, solve_torsion, DEFAULT_EIGEN_TOL, DEFAULT_TORSION_TOL};

/// First positive zero of the Bessel function `J₀`.
pub const BESSEL_J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

/// `C(B) λ₁(B)^{1+N/2}` for any ball `B` in dimension `N` (the product is
/// dilation invariant).
pub fn kohler_jobin_ball_value(dim: usize) -> f64 {
    match dim {
        2 => PI / 8.0 * BESSEL_J0_FIRST_ZERO.powi(4),
        // C(B₁) = (4π/3)/15, λ₁(B₁) = π².
        3 => 4.0 * PI / 45.0 * PI.powi(5),
        _ => f64::NAN,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KohlerJobinRow {
    pub label: String,
    pub compliance: f64,
    pub lambda1: f64,
    pub value: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KohlerJobinReport {
    pub rows: Vec<KohlerJobinRow>,
    pub reference_value: f64,
    pub pass: bool,
}

fn product(set: &CellSet) -> Result<(f64, f64, f64)> {
    let c = solve_torsion(set, DEFAULT_TORSION_TOL)?.compliance;
    let l = solve_eigen(set, DEFAULT_EIGEN_TOL)?.lambda1;
    let n = set.grid().dim() as f64;
    Ok((c, l, c * l.powf(1.0 + n / 2.0)))
}

/// `C λ₁^{1+N/2}` for each set against the same product on `reference` (a
/// discretized disk); passes when every ratio is at least
/// `1 - tol.kohler_jobin`.
pub fn check_kohler_jobin(
    sets: &[(String, CellSet)],
    reference: &CellSet,
    tol: &Tolerances,
) -> Result<KohlerJobinReport> {
    if sets.is_empty() {
        return Err(Error::Precondition("no sets to compare".into()));
    }
    let dim = reference.grid().dim();
    if sets.iter().any(|(_, s)| s.grid().dim() != dim) {
        return Err(Error::Precondition(
            "all sets must share the dimension".into(),
        ));
    }
    let (_, _, reference_value) = product(reference)?;
    let mut rows = Vec::with_capacity(sets.len());
    for (label, set) in sets {
        let (compliance, lambda1, value) = product(set)?;
        rows.push(KohlerJobinRow {
            label: label.clone(),
            compliance,
            lambda1,
            value,
            ratio: value / reference_value,
        });
    }
    let pass = rows.iter().all(|r| r.ratio >= 1.0 - tol.kohler_jobin);
    Ok(KohlerJobinReport {
        rows,
        reference_value,
        pass,
    })
}

impl Report for KohlerJobinReport {
    fn name(&self) -> &'static str {
        "kohler-jobin"
    }

    fn passed(&self) -> bool {
        self.pass
    }

    fn summary(&self) -> String {
        let worst = self
            .rows
            .iter()
            .map(|r| r.ratio)
            .fold(f64::INFINITY, f64::min);
        format!(
            "disk value {:.5}, smallest ratio {:.5}",
            self.reference_value, worst
        )
    }

    fn csv(&self) -> String {
        let mut s = String::from("domain,compliance,lambda1,value,ratio\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.label,
                fmt_real(r.compliance),
                fmt_real(r.lambda1),
                fmt_real(r.value),
                fmt_real(r.ratio)
            );
        }
        s
    }
}
