//! Shared fixtures for the benchmarks under `benches/`.

use shapelab_core::{build_grid, CellSet, DomainSpec};

/// The full unit square at `resolution`.
pub fn square(resolution: f64) -> CellSet {
    CellSet::full(&build_grid(&DomainSpec::square(1.0), resolution).expect("valid grid"))
}

/// The full unit disk at `resolution`.
pub fn disk(resolution: f64) -> CellSet {
    CellSet::full(&build_grid(&DomainSpec::disk(1.0), resolution).expect("valid grid"))
}
