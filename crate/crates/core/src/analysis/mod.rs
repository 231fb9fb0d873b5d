//! Diagnostics: contour zero counts, Rouché comparison, disc error surveys
//! and the short-interval prime sums.

mod hypothesis;
mod survey;
mod zeros;

pub use hypothesis::{
    check_hypothesis, fit_c0, hypothesis_interval, hypothesis_sum, log_grid, partition_blocks, partition_weighted,
    HypothesisReport, HypothesisRow, PrimeBlockPartition,
};
pub use survey::{disc_error_survey, DiscGrid, Survey};
pub use zeros::{max_modulus, min_modulus, rouche_check, zero_count, Extremum, RoucheReport, ZeroCount, CONTOUR_GUARD};
