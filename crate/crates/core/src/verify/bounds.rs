use std::fmt::Write as _;

use super::{linear_fit, Report, Tolerances};
use crate::error::{Error, Result};
use crate::field::{fmt_real, ScalarField};
use crate::grid::CellSet;
use crate::pde::{solve_torsion, DEFAULT_TORSION_TOL};

/// `‖w‖∞` and `C` of one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct LinfSample {
    pub label: String,
    pub dim: usize,
    pub sup_norm: f64,
    pub compliance: f64,
}

impl LinfSample {
    /// `‖w‖∞ / C^{2/(N+2)}`.
    pub fn ratio(&self) -> f64 {
        self.sup_norm / self.compliance.powf(2.0 / (self.dim as f64 + 2.0))
    }
}

pub fn linf_sample(label: &str, set: &CellSet) -> Result<LinfSample> {
    let t = solve_torsion(set, DEFAULT_TORSION_TOL)?;
    Ok(LinfSample {
        label: label.to_string(),
        dim: set.grid().dim(),
        sup_norm: t.sup_norm,
        compliance: t.compliance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinfBoundReport {
    pub samples: Vec<LinfSample>,
    pub reference_ratio: f64,
    /// Largest `ratio / reference_ratio`.
    pub worst: f64,
    pub pass: bool,
}

/// Every domain's `‖w‖∞ / C^{2/(N+2)}` must stay within
/// `tol.linf_factor` of the reference (disk) ratio.
pub fn check_linf_bound(
    samples: &[LinfSample],
    reference: &LinfSample,
    tol: &Tolerances,
) -> Result<LinfBoundReport> {
    if samples.len() < 2 {
        return Err(Error::Precondition(
            "the L-infinity check needs at least 2 domains".into(),
        ));
    }
    let reference_ratio = reference.ratio();
    let worst = samples
        .iter()
        .map(|s| s.ratio() / reference_ratio)
        .fold(0.0, f64::max);
    Ok(LinfBoundReport {
        samples: samples.to_vec(),
        reference_ratio,
        worst,
        pass: worst <= tol.linf_factor,
    })
}

impl Report for LinfBoundReport {
    fn name(&self) -> &'static str {
        "linf-bound"
    }

    fn passed(&self) -> bool {
        self.pass
    }

    fn summary(&self) -> String {
        format!("max ratio / disk ratio = {:.4}", self.worst)
    }

    fn csv(&self) -> String {
        let mut s = String::from("domain,sup_norm,compliance,ratio,relative\n");
        for x in &self.samples {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                x.label,
                fmt_real(x.sup_norm),
                fmt_real(x.compliance),
                fmt_real(x.ratio()),
                fmt_real(x.ratio() / self.reference_ratio)
            );
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinfExponentReport {
    pub samples: Vec<LinfSample>,
    pub slope: f64,
    pub expected: f64,
    pub pass: bool,
}

/// Slope of `log ‖w‖∞` against `log C` over a family of dilated domains,
/// compared with `2/(N+2)` (relative tolerance).
pub fn check_linf_exponent(samples: &[LinfSample], tol: &Tolerances) -> Result<LinfExponentReport> {
    if samples.len() < 2 {
        return Err(Error::Precondition(
            "the exponent fit needs at least 2 domains".into(),
        ));
    }
    let dim = samples[0].dim;
    let x: Vec<f64> = samples.iter().map(|s| s.compliance.ln()).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.sup_norm.ln()).collect();
    let (slope, _) = linear_fit(&x, &y);
    let expected = 2.0 / (dim as f64 + 2.0);
    Ok(LinfExponentReport {
        samples: samples.to_vec(),
        slope,
        expected,
        pass: (slope - expected).abs() <= tol.linf_slope * expected,
    })
}

impl Report for LinfExponentReport {
    fn name(&self) -> &'static str {
        "linf-exponent"
    }

    fn passed(&self) -> bool {
        self.pass
    }

    fn summary(&self) -> String {
        format!("slope {:.5}, expected {:.5}", self.slope, self.expected)
    }

    fn csv(&self) -> String {
        let mut s = String::from("domain,compliance,sup_norm\n");
        for x in &self.samples {
            let _ = writeln!(
                s,
                "{},{},{}",
                x.label,
                fmt_real(x.compliance),
                fmt_real(x.sup_norm)
            );
        }
        s
    }
}

/// Distribution function of a nonnegative field on a uniform level grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerCakeProfile {
    /// `t_k = k ‖v‖∞ / (n - 1)`.
    pub levels: Vec<f64>,
    /// `|{v > t}|`.
    pub d_of_t: Vec<f64>,
    /// `∫_t^∞ |{v > s}| ds`, trapezoid rule on the levels.
    pub dtilde_of_t: Vec<f64>,
    /// `h^N Σ (v - t)_+`.
    pub direct: Vec<f64>,
    /// Largest `|direct - dtilde|`, relative to `∫v`.
    pub max_error: f64,
    pub pass: bool,
}

pub fn layer_cake_profile(
    v: &ScalarField,
    n_levels: usize,
    tol: &Tolerances,
) -> Result<LayerCakeProfile> {
    if n_levels < 2 {
        return Err(Error::InvalidParameter("need at least 2 levels".into()));
    }
    if v.min_value() < 0.0 {
        return Err(Error::InvalidParameter("field must be nonnegative".into()));
    }
    let grid = v.grid();
    let hn = grid.cell_volume();
    let mut vals: Vec<f64> = grid.inside_nodes().iter().map(|&p| v.get(p)).collect();
    vals.sort_by(f64::total_cmp);
    let top = vals.last().copied().unwrap_or(0.0);
    let levels: Vec<f64> = (0..n_levels)
        .map(|k| top * k as f64 / (n_levels - 1) as f64)
        .collect();
    let d_of_t: Vec<f64> = levels
        .iter()
        .map(|&t| hn * (vals.len() - vals.partition_point(|&x| x <= t)) as f64)
        .collect();
    let mut dtilde_of_t = vec![0.0; n_levels];
    for k in (0..n_levels - 1).rev() {
        dtilde_of_t[k] =
            dtilde_of_t[k + 1] + 0.5 * (d_of_t[k] + d_of_t[k + 1]) * (levels[k + 1] - levels[k]);
    }
    let direct: Vec<f64> = levels
        .iter()
        .map(|&t| hn * vals.iter().map(|&x| (x - t).max(0.0)).sum::<f64>())
        .collect();
    let total = v.integral();
    let max_error = if total > 0.0 {
        direct
            .iter()
            .zip(&dtilde_of_t)
            .map(|(a, b)| (a - b).abs() / total)
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(LayerCakeProfile {
        levels,
        d_of_t,
        dtilde_of_t,
        direct,
        max_error,
        pass: max_error <= tol.layer_cake,
    })
}

impl Report for LayerCakeProfile {
    fn name(&self) -> &'static str {
        "layer-cake"
    }

    fn passed(&self) -> bool {
        self.pass
    }

    fn summary(&self) -> String {
        format!("max identity error {:.3e} of the integral", self.max_error)
    }

    fn csv(&self) -> String {
        let mut s = String::from("t,D_of_t,Dtilde_of_t,direct\n");
        for k in 0..self.levels.len() {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                fmt_real(self.levels[k]),
                fmt_real(self.d_of_t[k]),
                fmt_real(self.dtilde_of_t[k]),
                fmt_real(self.direct[k])
            );
        }
        s
    }
}
