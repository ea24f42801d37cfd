//! The four experiment drivers. Each returns a table, a JSON summary and a
//! pass flag for the exit code.

pub mod atoms;
pub mod equiv;
pub mod frame;
pub mod fs;

use crate::output::Table;

/// Result of one study run.
#[derive(Debug, Clone)]
pub struct StudyOutcome {
    pub table: Table,
    pub summary: serde_json::Value,
    /// Every non-degenerate row lies inside its acceptance interval.
    pub passed: bool,
}

/// Denominators below this are treated as zero and the ratio is omitted.
pub const DEGENERATE_FLOOR: f64 = 1e-300;

pub fn ratio(num: f64, den: f64) -> Option<f64> {
    (den >= DEGENERATE_FLOOR).then(|| num / den)
}
