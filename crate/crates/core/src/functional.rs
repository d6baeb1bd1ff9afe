//! Rescaled shape costs: `|Ω|^α / C(Ω)` and `|Ω|^α λ₁(Ω)` on sets, and the
//! relaxed cost `F(v) = M(v)^α E(v) / I(v)²` on nonnegative fields.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::CellSet;
use crate::pde::{solve_eigen, solve_torsion, DEFAULT_EIGEN_TOL, DEFAULT_TORSION_TOL};

/// Which set functional `J` multiplies the measure term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    /// `J = 1 / C(Ω)`.
    Compliance,
    /// `J = λ₁(Ω)`.
    Eigen,
}

impl ProblemKind {
    /// The dilation-invariant exponent: `1 + 2/N` for compliance, `2/N` for
    /// the eigenvalue.
    pub fn threshold(self, dim: usize) -> f64 {
        match self {
            ProblemKind::Compliance => 1.0 + 2.0 / dim as f64,
            ProblemKind::Eigen => 2.0 / dim as f64,
        }
    }

    fn threshold_formula(self) -> &'static str {
        match self {
            ProblemKind::Compliance => "1+2/N",
            ProblemKind::Eigen => "2/N",
        }
    }

    /// Exponent of `r` in the cost of a ball of radius `r`.
    pub fn dilation_exponent(self, alpha: f64, dim: usize) -> f64 {
        let n = dim as f64;
        match self {
            ProblemKind::Compliance => alpha * n - (n + 2.0),
            ProblemKind::Eigen => alpha * n - 2.0,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Compliance => "compliance",
            ProblemKind::Eigen => "eigen",
        })
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "compliance" | "torsion" => Ok(ProblemKind::Compliance),
            "eigen" | "eigenvalue" => Ok(ProblemKind::Eigen),
            other => Err(Error::InvalidParameter(format!("unknown mode '{other}'"))),
        }
    }
}

/// How the measure term of the relaxed cost is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    /// `h^N Σ min(1, v/ε)`.
    Smoothed,
    /// `h^N #{v > tau}`.
    Exact,
}

pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalParams {
    pub alpha: f64,
    /// Smoothing width of the measure term, in units of `v`.
    pub epsilon: f64,
    /// Support cutoff, in units of `v`.
    pub tau: f64,
    pub kind: ProblemKind,
    pub dim: usize,
    pub measure: MeasureKind,
}

fn short(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

impl FunctionalParams {
    /// Parameters for minimization: requires `0 <= alpha < threshold`.
    pub fn new(kind: ProblemKind, dim: usize, alpha: f64) -> Result<FunctionalParams> {
        let t = kind.threshold(dim);
        if (dim == 2 || dim == 3) && alpha >= t {
            return Err(Error::InvalidParameter(format!(
                "alpha must be < {} = {}",
                kind.threshold_formula(),
                short(t)
            )));
        }
        Self::for_evaluation(kind, dim, alpha)
    }

    /// Parameters for evaluating costs only: also admits `alpha` equal to
    /// the threshold, where the cost is dilation invariant.
    pub fn for_evaluation(kind: ProblemKind, dim: usize, alpha: f64) -> Result<FunctionalParams> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        if alpha.is_nan() || alpha < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "alpha must be >= 0, got {alpha}"
            )));
        }
        let t = kind.threshold(dim);
        if alpha > t + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "alpha must be <= {} = {}",
                kind.threshold_formula(),
                short(t)
            )));
        }
        Ok(FunctionalParams {
            alpha,
            epsilon: DEFAULT_EPSILON,
            tau: 0.0,
            kind,
            dim,
            measure: MeasureKind::Smoothed,
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be > 0, got {epsilon}"
            )));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tau must be >= 0, got {tau}"
            )));
        }
        self.tau = tau;
        Ok(self)
    }

    pub fn with_measure(mut self, measure: MeasureKind) -> Self {
        self.measure = measure;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    SetCompliance,
    VRelaxed,
    SetEigen,
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::SetCompliance => "set_compliance",
            EvalMode::VRelaxed => "v_relaxed",
            EvalMode::SetEigen => "set_eigen",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalValue {
    /// `|Ω|`, or the relaxed measure of `v`.
    pub measure_term: f64,
    /// `E(v)`, `C(Ω)` or `λ₁(Ω)` depending on the mode.
    pub energy: f64,
    /// `I(v)`, or `C(Ω)` in set-compliance mode; absent for the eigenvalue.
    pub integral: Option<f64>,
    pub value: f64,
    pub mode: EvalMode,
    /// Measure variant for the relaxed mode.
    pub measure: Option<MeasureKind>,
}

fn nonempty(set: &CellSet) -> Result<()> {
    if set.is_empty() {
        Err(Error::EmptyDomain)
    } else {
        Ok(())
    }
}

/// `|Ω|^α / C(Ω)`.
pub fn evaluate_set_compliance(
    set: &CellSet,
    params: &FunctionalParams,
) -> Result<FunctionalValue> {
    nonempty(set)?;
    let c = solve_torsion(set, DEFAULT_TORSION_TOL)?.compliance;
    Ok(assemble_compliance(set.measure(), c, params.alpha))
}

pub(crate) fn assemble_compliance(measure: f64, compliance: f64, alpha: f64) -> FunctionalValue {
    FunctionalValue {
        measure_term: measure,
        energy: compliance,
        integral: Some(compliance),
        value: measure.powf(alpha) / compliance,
        mode: EvalMode::SetCompliance,
        measure: None,
    }
}

/// `|Ω|^α λ₁(Ω)`.
pub fn evaluate_set_eigen(set: &CellSet, params: &FunctionalParams) -> Result<FunctionalValue> {
    nonempty(set)?;
    let lambda = solve_eigen(set, DEFAULT_EIGEN_TOL)?.lambda1;
    Ok(assemble_eigen(set.measure(), lambda, params.alpha))
}

pub(crate) fn assemble_eigen(measure: f64, lambda: f64, alpha: f64) -> FunctionalValue {
    FunctionalValue {
        measure_term: measure,
        energy: lambda,
        integral: None,
        value: measure.powf(alpha) * lambda,
        mode: EvalMode::SetEigen,
        measure: None,
    }
}

/// The set cost selected by `params.kind`.
pub fn evaluate_set(set: &CellSet, params: &FunctionalParams) -> Result<FunctionalValue> {
    match params.kind {
        ProblemKind::Compliance => evaluate_set_compliance(set, params),
        ProblemKind::Eigen => evaluate_set_eigen(set, params),
    }
}

fn check_nonnegative(v: &ScalarField) -> Result<()> {
    if v.min_value() < 0.0 {
        return Err(Error::InvalidParameter("field must be nonnegative".into()));
    }
    if v.values().iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroField);
    }
    Ok(())
}

/// `R_C(v) = I(v)² / E(v)`.
pub fn rc_quotient(v: &ScalarField) -> Result<f64> {
    check_nonnegative(v)?;
    let e = v.dirichlet_energy();
    let i = v.integral();
    Ok(i * i / e)
}

/// Relaxed measure of `v` under `params.measure`.
pub fn relaxed_measure(v: &ScalarField, params: &FunctionalParams) -> f64 {
    let g = v.grid();
    let vals = v.values();
    let count: f64 = match params.measure {
        MeasureKind::Smoothed => g
            .inside_nodes()
            .iter()
            .map(|&p| (vals[p] / params.epsilon).clamp(0.0, 1.0))
            .sum(),
        MeasureKind::Exact => g
            .inside_nodes()
            .iter()
            .filter(|&&p| vals[p] > params.tau)
            .count() as f64,
    };
    g.cell_volume() * count
}

/// `F(v) = M^α E / I²`.
pub fn evaluate_v(v: &ScalarField, params: &FunctionalParams) -> Result<FunctionalValue> {
    check_nonnegative(v)?;
    let m = relaxed_measure(v, params);
    let e = v.dirichlet_energy();
    let i = v.integral();
    Ok(FunctionalValue {
        measure_term: m,
        energy: e,
        integral: Some(i),
        value: m.powf(params.alpha) * e / (i * i),
        mode: EvalMode::VRelaxed,
        measure: Some(params.measure),
    })
}

/// Gradient of the smoothed [`evaluate_v`], as the nodal representative
/// `g` with directional derivative `h^N Σ g φ`. Zero outside `D`.
pub fn gradient_v(v: &ScalarField, params: &FunctionalParams) -> Result<ScalarField> {
    check_nonnegative(v)?;
    let smoothed = params.with_measure(MeasureKind::Smoothed);
    let m = relaxed_measure(v, &smoothed);
    let e = v.dirichlet_energy();
    let i = v.integral();
    let alpha = params.alpha;
    let ma = m.powf(alpha);
    let a = 2.0 * ma / (i * i);
    let b = if alpha == 0.0 {
        0.0
    } else {
        alpha * m.powf(alpha - 1.0) * e / (i * i) / params.epsilon
    };
    let c = 2.0 * ma * e / (i * i * i);
    let lap = v.laplacian();
    let vals = v.values();
    let grid = v.grid();
    let mut g = vec![0.0; grid.len()];
    for &p in grid.inside_nodes() {
        let kink = if vals[p] > 0.0 && vals[p] < params.epsilon {
            b
        } else {
            0.0
        };
        g[p] = -a * lap[p] + kink - c;
    }
    Ok(ScalarField::from_raw(Arc::clone(grid), g))
}
