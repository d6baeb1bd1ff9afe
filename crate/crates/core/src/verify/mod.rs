//! Executable checks of structural properties of the costs and their
//! minimizers. Every check returns a report that can render itself as a
//! CSV block and a one-line `PASS`/`FAIL` verdict.

mod bounds;
mod growth;
mod optimality;
mod scaling;
mod spectral;
mod supersolution;

pub use bounds::{
    check_linf_bound, check_linf_exponent, layer_cake_profile, linf_sample, LayerCakeProfile,
    LinfBoundReport, LinfExponentReport, LinfSample,
};
pub use growth::{check_growth, GrowthReport};
pub use optimality::{boundary_gradient_estimates, check_optimality, OptimalityReport};
pub use scaling::{
    ball_family, check_coercivity, check_scaling, check_scaling_samples, BallSample,
    CoercivityReport, ScalingReport,
};
pub use spectral::{
    check_kohler_jobin, kohler_jobin_ball_value, KohlerJobinReport, KohlerJobinRow,
    BESSEL_J0_FIRST_ZERO,
};
pub use supersolution::{check_supersolution, SupersolutionReport};

/// Pass thresholds of all checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Lower bound on `Δv + 1` everywhere in `D`.
    pub residual_floor: f64,
    /// Bound on `|Δv + 1|` where `v > eps`.
    pub interior_residual: f64,
    /// Relative spread of `|∇v|²` over the free boundary.
    pub free_relstd: f64,
    /// Relative deviation of the free-boundary mean from the target.
    pub free_mean: f64,
    /// Contact minimum as a fraction of the target.
    pub contact_min: f64,
    /// Slope tolerance, scaled by `max(1, |expected|)`.
    pub scaling_slope: f64,
    /// Relative spread of the cost across radii at the threshold exponent.
    pub scaling_variation: f64,
    /// Relative tolerance of the fitted `L∞` exponent.
    pub linf_slope: f64,
    /// Allowed factor between any `L∞` ratio and the disk ratio.
    pub linf_factor: f64,
    /// Discretization allowance below the ball value.
    pub kohler_jobin: f64,
    /// Layer-cake identity error relative to `∫v`.
    pub layer_cake: f64,
    /// Slack below `N` for the growth slope.
    pub growth_slope: f64,
    /// Allowed violation of `v̂ >= v`.
    pub comparison: f64,
    /// Slack above `α - 1 - 2/N` for the coercivity slope.
    pub coercivity_slope: f64,
    /// Required increase of the cost over two decades of shrinking measure.
    pub coercivity_growth: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            residual_floor: 1e-6,
            interior_residual: 1e-4,
            free_relstd: 0.15,
            free_mean: 0.15,
            contact_min: 0.85,
            scaling_slope: 0.02,
            scaling_variation: 0.02,
            linf_slope: 0.02,
            linf_factor: 2.0,
            kohler_jobin: 0.01,
            layer_cake: 0.01,
            growth_slope: 0.3,
            comparison: 1e-8,
            coercivity_slope: 0.05,
            coercivity_growth: 10.0,
        }
    }
}

/// Common rendering of check results.
pub trait Report {
    fn name(&self) -> &'static str;
    fn passed(&self) -> bool;
    /// Short human-readable summary of the key numbers.
    fn summary(&self) -> String;
    /// CSV block with a header row.
    fn csv(&self) -> String;

    fn verdict(&self) -> String {
        format!(
            "{} {}: {}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name(),
            self.summary()
        )
    }
}

/// Least-squares slope and intercept of `y` against `x`.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.5];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let (s, c) = linear_fit(&x, &y);
        assert!((s - 2.5).abs() < 1e-12 && (c + 1.0).abs() < 1e-12);
    }
}
