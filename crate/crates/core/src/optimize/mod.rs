//! Minimizers of the rescaled costs: relaxed projected gradient, flip
//! descent on sets, and exhaustive search on tiny regions.

mod oracle;
mod relaxed;
mod search;

pub use oracle::{brute_force_oracle, ORACLE_LIMIT};
pub use relaxed::{extract_support, minimize_relaxed, HistoryEntry, RelaxedOptions, RelaxedRun};
pub use search::{local_search, FlipEvaluator, FlipMove, SearchOptions, SearchRun, TIE_TOL};
