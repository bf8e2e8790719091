//! Membership disclosure risk assessment for tabular synthetic data.
//!
//! Given a generator's real training table, a same-population holdout that
//! the generator never saw, and the synthetic table it produced, this
//! crate measures how well an adversary can tell members from non-members
//! using only nearest-neighbour distances into the synthetic data. The
//! distance distributions of the two classes are modelled with univariate
//! Gaussian KDEs, which turns the hard-threshold test into a calibrated
//! membership probability and unlocks ROC analysis at low false-positive
//! rates, where the worst-case leakage hides.
//!
//! Three attacks are implemented:
//!
//! * **true distribution attack** — class-conditional KDEs fit with the
//!   true labels; the data custodian's own risk estimate;
//! * **realistic attack** — the adversary has no labels and pseudo-labels
//!   records by thresholding distances before fitting KDEs;
//! * **method1** — plain hard thresholding, the baseline both posterior
//!   attacks are compared against.
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! cargo run --example schema_inference          # CSV ingestion and schema files
//! cargo run --example gower_nearest_neighbors   # mixed-type distances
//! cargo run --example kde_bandwidth             # density estimation and Scott's rule
//! cargo run --example true_distribution_attack  # label-informed posterior attack
//! cargo run --example realistic_attack_sweep    # threshold sweep without labels
//! cargo run --example roc_low_fpr               # worst-case risk readouts
//! cargo run --example full_pipeline             # end-to-end report generation
//! ```
//!
//! The `synthrisk` binary wraps [`report::run_pipeline`] behind flags and
//! exits 0 on a clean run, 2 when the low-FPR risk rule fires, and 1 on
//! error.

pub mod attacks;
pub mod distance;
pub mod kde;
pub mod metrics;
pub mod report;
pub mod tabular;

pub use attacks::{
    membership_posterior, method1_attack, realistic_attack, resolve_thresholds,
    true_distribution_attack, AttackOutcome, AttackRun, PosteriorModel, ThresholdGrid,
};
pub use distance::{
    gower_distance, nearest_neighbor_distances, split_distances, DistanceRecord, DistanceTable,
    GowerContext,
};
pub use kde::{kde_eval, kde_fit, scott_bandwidth, BandwidthSpec, KdeModel};
pub use metrics::{
    accuracy_f1, confusion, ks_two_sample, roc_curve, tp_fp_trajectory, tpr_at_fpr,
    ClassificationScores, ConfusionMatrix, KsResult, RocCurve,
};
pub use report::{compare_attacks, run_pipeline, AttackSelection, EvalReport, RunConfig};
pub use tabular::{
    build_attack_dataset, load_schema_file, load_table, AttackDataset, FeatureKind, FeatureSpec,
    MembershipLabel, Schema, SchemaSource, Table, Value,
};
