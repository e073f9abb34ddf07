//! Ranking metrics, significance tests and reports.

mod metrics;
mod report;
mod stats;

pub use metrics::{average_precision, last_rel, score_record, TopicMetrics};
pub use report::{
    build_report, BaselineKey, Comparison, GroupKey, GroupSummary, Report, CSV_HEADER,
    SIGNIFICANCE_LEVEL,
};
pub use stats::{bonferroni, inc_beta, ln_gamma, paired_t_test, t_cdf, t_two_tailed, PairedTTest};
