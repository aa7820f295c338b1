//! Distance-based comparison of FIM fields and the statistics used to
//! compare methods across seeds.

mod distance;
mod ranking;
mod report;
mod stats;

pub use distance::{
    all_pair_distances, dist_mse, dist_mseps, dist_naive, dist_sl, select_pairs, total_pairs,
    AllPairs, PairBudget, PairDistances, DEFAULT_PAIR_LIMIT, DEFAULT_SUBSAMPLED_PAIRS,
};
pub use ranking::{dist_re, rank_error};
pub use report::{compare, evaluate, MetricComparison, MetricReport, METRIC_NAMES};
pub use stats::{format_mean_std, mean_std, paired_t_test, two_sided_critical_value, two_sided_p, TTest};
