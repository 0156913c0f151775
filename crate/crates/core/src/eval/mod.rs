//! IR evaluation: qrels and run files, effectiveness measures, paired
//! significance testing and the pruning sweep.

pub mod metrics;
pub mod qrels;
pub mod stats;
pub mod sweep;

pub use metrics::{average_precision, candidate_counts, ndcg_at, rr_at};
pub use qrels::{read_run, write_run, Judgments, Qrels};
pub use stats::{paired_t_test_bonferroni, PairedTTest};
pub use sweep::{sweep, SweepRow, SweepSettings, SweepTable, CSV_HEADER};
