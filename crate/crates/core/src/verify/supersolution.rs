use std::fmt::Write as _;

use super::{Report, Tolerances};
use crate::error::Result;
use crate::field::{fmt_real, ScalarField};

#[derive(Debug, Clone, PartialEq)]
pub struct SupersolutionReport {
    /// Scale applied to reach `∫v = ∫|∇v|²`.
    pub scale: f64,
    /// `min (Δv + 1)` over `D`, and where.
    pub floor: f64,
    pub floor_node: usize,
    /// `max |Δv + 1|` over `{v > eps}`, and where (`None` if that set is
    /// empty).
    pub interior: f64,
    pub interior_node: Option<usize>,
    pub floor_pass: bool,
    pub interior_pass: bool,
}

/// Checks `Δ_h v + 1 >= -floor` on `D` and `|Δ_h v + 1| <= interior` on
/// `{v > eps}` after rescaling `v` so that `∫v = ∫|∇v|²`. `eps` is in units
/// of the rescaled field.
pub fn check_supersolution(
    v: &ScalarField,
    eps: f64,
    tol: &Tolerances,
) -> Result<SupersolutionReport> {
    let e = v.dirichlet_energy();
    let scale = if e > 0.0 { v.integral() / e } else { 1.0 };
    let vn = v.scaled(scale);
    let lap = vn.laplacian();
    let grid = v.grid();
    let mut floor = f64::INFINITY;
    let mut floor_node = 0;
    let mut interior: f64 = 0.0;
    let mut interior_node = None;
    for &p in grid.inside_nodes() {
        let r = lap[p] + 1.0;
        if r < floor {
            floor = r;
            floor_node = p;
        }
        if vn.get(p) > eps && (interior_node.is_none() || r.abs() > interior) {
            interior = r.abs();
            interior_node = Some(p);
        }
    }
    Ok(SupersolutionReport {
        scale,
        floor,
        floor_node,
        interior,
        interior_node,
        floor_pass: floor >= -tol.residual_floor,
        interior_pass: interior <= tol.interior_residual,
    })
}

impl Report for SupersolutionReport {
    fn name(&self) -> &'static str {
        "supersolution"
    }

    fn passed(&self) -> bool {
        self.floor_pass && self.interior_pass
    }

    fn summary(&self) -> String {
        format!(
            "min(Lap v + 1) = {:.3e} at node {}, max interior |Lap v + 1| = {:.3e}",
            self.floor, self.floor_node, self.interior
        )
    }

    fn csv(&self) -> String {
        let mut s = String::from("quantity,value,node,pass\n");
        let _ = writeln!(s, "scale,{},,", fmt_real(self.scale));
        let _ = writeln!(
            s,
            "floor,{},{},{}",
            fmt_real(self.floor),
            self.floor_node,
            self.floor_pass
        );
        let node = self
            .interior_node
            .map(|p| p.to_string())
            .unwrap_or_default();
        let _ = writeln!(
            s,
            "interior,{},{},{}",
            fmt_real(self.interior),
            node,
            self.interior_pass
        );
        s
    }
}
