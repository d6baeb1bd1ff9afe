use std::fmt::Write as _;

use super::{linear_fit, Report, Tolerances};
use crate::error::{Error, Result};
use crate::field::fmt_real;
use crate::functional::{evaluate_v, FunctionalParams, MeasureKind, ProblemKind};
use crate::grid::{build_grid, CellSet, DomainSpec};
use crate::pde::{solve_eigen, solve_torsion, DEFAULT_EIGEN_TOL, DEFAULT_TORSION_TOL};

/// Measure and `C` or `λ₁` of one discretized ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallSample {
    pub radius: f64,
    pub measure: f64,
    /// `C(B_r)` in compliance mode, `λ₁(B_r)` in eigen mode.
    pub energy: f64,
}

impl BallSample {
    fn value(&self, kind: ProblemKind, alpha: f64) -> f64 {
        match kind {
            ProblemKind::Compliance => self.measure.powf(alpha) / self.energy,
            ProblemKind::Eigen => self.measure.powf(alpha) * self.energy,
        }
    }
}

/// Solves on `disk(r)` grids (each ball is its own design region) at a
/// fixed physical `resolution`.
pub fn ball_family(
    kind: ProblemKind,
    dim: usize,
    radii: &[f64],
    resolution: f64,
) -> Result<Vec<BallSample>> {
    radii
        .iter()
        .map(|&r| {
            let grid = build_grid(&DomainSpec::disk(r).with_dim(dim), resolution)?;
            let set = CellSet::full(&grid);
            let energy = match kind {
                ProblemKind::Compliance => solve_torsion(&set, DEFAULT_TORSION_TOL)?.compliance,
                ProblemKind::Eigen => solve_eigen(&set, DEFAULT_EIGEN_TOL)?.lambda1,
            };
            Ok(BallSample {
                radius: r,
                measure: set.measure(),
                energy,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub alpha: f64,
    pub kind: ProblemKind,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub expected: f64,
    /// `max/min - 1` of the values.
    pub variation: f64,
    pub at_threshold: bool,
    pub pass: bool,
}

/// Dilation law of the ball cost: log-log slope against `r` compared with
/// `αN - (N+2)` (compliance) or `αN - 2` (eigen), tolerance
/// `tol.scaling_slope · max(1, |expected|)`; at the threshold exponent the
/// values must instead agree within `tol.scaling_variation`.
pub fn check_scaling_samples(
    alpha: f64,
    kind: ProblemKind,
    dim: usize,
    samples: &[BallSample],
    tol: &Tolerances,
) -> Result<ScalingReport> {
    if samples.len() < 3 {
        return Err(Error::Precondition(
            "scaling check needs at least 3 radii".into(),
        ));
    }
    FunctionalParams::for_evaluation(kind, dim, alpha)?;
    let values: Vec<f64> = samples.iter().map(|s| s.value(kind, alpha)).collect();
    let x: Vec<f64> = samples.iter().map(|s| s.radius.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (slope, _) = linear_fit(&x, &y);
    let expected = kind.dilation_exponent(alpha, dim);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let variation = hi / lo - 1.0;
    let at_threshold = (alpha - kind.threshold(dim)).abs() < 1e-12;
    let pass = if at_threshold {
        variation <= tol.scaling_variation
    } else {
        (slope - expected).abs() <= tol.scaling_slope * expected.abs().max(1.0)
    };
    Ok(ScalingReport {
        alpha,
        kind,
        radii: samples.iter().map(|s| s.radius).collect(),
        values,
        slope,
        expected,
        variation,
        at_threshold,
        pass,
    })
}

pub fn check_scaling(
    alpha: f64,
    kind: ProblemKind,
    dim: usize,
    radii: &[f64],
    resolution: f64,
    tol: &Tolerances,
) -> Result<ScalingReport> {
    if radii.len() < 3 {
        return Err(Error::Precondition(
            "scaling check needs at least 3 radii".into(),
        ));
    }
    FunctionalParams::for_evaluation(kind, dim, alpha)?;
    let samples = ball_family(kind, dim, radii, resolution)?;
    check_scaling_samples(alpha, kind, dim, &samples, tol)
}

impl Report for ScalingReport {
    fn name(&self) -> &'static str {
        "scaling"
    }

    fn passed(&self) -> bool {
        self.pass
    }

    fn summary(&self) -> String {
        format!(
            "{} alpha={}: slope {:.5} (expected {:.5}), variation {:.3e}{}",
            self.kind,
            self.alpha,
            self.slope,
            self.expected,
            self.variation,
            if self.at_threshold {
                " [threshold exponent]"
            } else {
                ""
            }
        )
    }

    fn csv(&self) -> String {
        let mut s = String::from("radius,value\n");
        for (r, v) in self.radii.iter().zip(&self.values) {
            let _ = writeln!(s, "{},{}", fmt_real(*r), fmt_real(*v));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoercivityReport {
    pub alpha: f64,
    pub dim: usize,
    pub radii: Vec<f64>,
    pub measures: Vec<f64>,
    pub values: Vec<f64>,
    /// Log-log slope of the cost against the measure.
    pub slope: f64,
    /// `α - 1 - 2/N`.
    pub expected: f64,
    /// Cost increase over exactly two decades of shrinking measure,
    /// starting at the largest ball (log-log interpolation).
    pub growth: f64,
    /// Cost strictly increases as the measure shrinks.
    pub monotone: bool,
    pub pass: bool,
}

/// Relaxed cost of the torsion functions of concentric balls shrinking
/// inside `disk(radii[0])`. In 3D the slope bound is checked; in 2D the
/// blow-up (monotone, at least `tol.coercivity_growth` over two decades).
pub fn check_coercivity(
    alpha: f64,
    dim: usize,
    radii: &[f64],
    resolution: f64,
    tol: &Tolerances,
) -> Result<CoercivityReport> {
    if radii.len() < 2 {
        return Err(Error::Precondition(
            "coercivity check needs at least 2 radii".into(),
        ));
    }
    let params = FunctionalParams::new(ProblemKind::Compliance, dim, alpha)?
        .with_measure(MeasureKind::Exact);
    let largest = radii.iter().copied().fold(0.0, f64::max);
    let grid = build_grid(&DomainSpec::disk(largest).with_dim(dim), resolution)?;
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| b.total_cmp(a));
    let center = vec![0.0; dim];
    let mut measures = Vec::new();
    let mut values = Vec::new();
    for &r in &radii {
        let set = CellSet::ball(&grid, &center, r);
        let w = solve_torsion(&set, DEFAULT_TORSION_TOL)?.w;
        let f = evaluate_v(&w, &params)?;
        measures.push(f.measure_term);
        values.push(f.value);
    }
    let lm: Vec<f64> = measures.iter().map(|m| m.ln()).collect();
    let lf: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (slope, _) = linear_fit(&lm, &lf);
    let expected = alpha - 1.0 - 2.0 / dim as f64;
    let monotone = values.windows(2).all(|w| w[1] > w[0]);
    let goal = lm[0] - 2.0 * std::f64::consts::LN_10;
    let growth = match (1..lm.len()).find(|&i| lm[i] <= goal) {
        Some(i) => {
            let t = (lm[i - 1] - goal) / (lm[i - 1] - lm[i]);
            (lf[i - 1] + t * (lf[i] - lf[i - 1]) - lf[0]).exp()
        }
        None => f64::NAN,
    };
    let pass = if dim == 2 {
        monotone && growth >= tol.coercivity_growth
    } else {
        slope <= expected + tol.coercivity_slope
    };
    Ok(CoercivityReport {
        alpha,
        dim,
        radii,
        measures,
        values,
        slope,
        expected,
        growth,
        monotone,
        pass,
    })
}

impl Report for CoercivityReport {
    fn name(&self) -> &'static str {
        "coercivity"
    }

    fn passed(&self) -> bool {
        self.pass
    }

    fn summary(&self) -> String {
        format!(
            "N={} alpha={}: slope {:.4} (bound {:.4}), growth over two decades {:.4}, monotone {}",
            self.dim, self.alpha, self.slope, self.expected, self.growth, self.monotone
        )
    }

    fn csv(&self) -> String {
        let mut s = String::from("radius,measure,value\n");
        for i in 0..self.radii.len() {
            let _ = writeln!(
                s,
                "{},{},{}",
                fmt_real(self.radii[i]),
                fmt_real(self.measures[i]),
                fmt_real(self.values[i])
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compliance_slopes_on_coarse_balls() {
        let tol = Tolerances::default();
        let samples = ball_family(ProblemKind::Compliance, 2, &[0.5, 0.75, 1.0], 64.0).unwrap();
        let r1 = check_scaling_samples(1.0, ProblemKind::Compliance, 2, &samples, &tol).unwrap();
        assert!((r1.slope + 2.0).abs() < 0.1, "{}", r1.summary());
        let r2 = check_scaling_samples(2.0, ProblemKind::Compliance, 2, &samples, &tol).unwrap();
        assert!(r2.at_threshold);
        assert!(
            check_scaling_samples(1.0, ProblemKind::Compliance, 2, &samples[..2], &tol).is_err()
        );
    }

    #[test]
    fn coercivity_report_shape() {
        let r = check_coercivity(
            1.5,
            2,
            &[1.0, 0.5, 0.25, 0.08],
            64.0,
            &Tolerances::default(),
        )
        .unwrap();
        assert!(r.monotone);
        assert!(r.growth > 5.0 && r.growth < 11.0, "{}", r.summary());
        assert!((r.slope - r.expected).abs() < 0.1);
    }
}
