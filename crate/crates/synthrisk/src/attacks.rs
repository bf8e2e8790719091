//! The three membership-inference procedures.
//!
//! All of them consume a split [`DistanceTable`]:
//!
//! * the **true distribution attack** fits one KDE per true label class on
//!   the training split and scores test records with the two-class
//!   posterior;
//! * the **realistic attack** has no labels: it partitions the training
//!   split at a distance threshold into supposed members (below) and
//!   supposed non-members, fits KDEs to those, and scores the same way;
//! * **hard thresholding** simply predicts member when the distance falls
//!   below the threshold, with no probabilistic output.

use rayon::prelude::*;
use thiserror::Error;

use crate::distance::DistanceTable;
use crate::kde::{kde_fit, BandwidthSpec, KdeError, KdeModel};
use crate::tabular::MembershipLabel;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("attack: training split has no {0} records")]
    EmptyTrainingClass(&'static str),
    #[error("attack: test split is empty")]
    EmptyTestSplit,
    #[error("attack: every threshold was degenerate; nothing to fit")]
    AllThresholdsDegenerate,
    #[error("attack: percentile {0} must lie strictly between 0 and 100")]
    BadPercentile(f64),
    #[error("attack: percentiles must be strictly increasing")]
    PercentilesNotIncreasing,
    #[error("attack: distance table has no split records")]
    EmptyDistances,
    #[error("attack: prior {0} must lie strictly between 0 and 1")]
    BadPrior(f64),
    #[error(transparent)]
    Kde(#[from] KdeError),
}

/// Two class-conditional KDEs plus the member prior.
#[derive(Clone, Debug)]
pub struct PosteriorModel {
    pub kde_member: KdeModel,
    pub kde_non_member: KdeModel,
    prior_member: f64,
}

/// Membership probability at one distance. `member + non_member == 1.0`
/// exactly; `underflow` marks the uninformative case where both weighted
/// densities vanished and 0.5 was substituted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Posterior {
    pub member: f64,
    pub non_member: f64,
    pub underflow: bool,
}

impl PosteriorModel {
    pub fn new(
        kde_member: KdeModel,
        kde_non_member: KdeModel,
        prior_member: f64,
    ) -> Result<Self, AttackError> {
        if !(prior_member > 0.0 && prior_member < 1.0) {
            return Err(AttackError::BadPrior(prior_member));
        }
        Ok(PosteriorModel {
            kde_member,
            kde_non_member,
            prior_member,
        })
    }

    pub fn prior_member(&self) -> f64 {
        self.prior_member
    }

    /// P(member | distance) from the two weighted densities.
    pub fn posterior(&self, d: f64) -> Posterior {
        debug_assert!(d.is_finite());
        let a = self.prior_member * self.kde_member.eval(d);
        let b = (1.0 - self.prior_member) * self.kde_non_member.eval(d);
        let total = a + b;
        if total == 0.0 {
            // Both densities underflowed this far out: the evidence says
            // nothing, so report even odds rather than divide by zero.
            return Posterior {
                member: 0.5,
                non_member: 0.5,
                underflow: true,
            };
        }
        let member = a / total;
        Posterior {
            member,
            non_member: 1.0 - member,
            underflow: false,
        }
    }

    pub fn any_degenerate_bandwidth(&self) -> bool {
        self.kde_member.is_degenerate() || self.kde_non_member.is_degenerate()
    }
}

/// Convenience wrapper over [`PosteriorModel::posterior`].
pub fn membership_posterior(pm: &PosteriorModel, d: f64) -> Posterior {
    pm.posterior(d)
}

/// One scored test record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttackOutcome {
    pub source_index: usize,
    pub distance: f64,
    pub posterior: f64,
    pub predicted: MembershipLabel,
    pub truth: MembershipLabel,
}

/// A fitted posterior attack with its scored test set.
#[derive(Clone, Debug)]
pub struct AttackRun {
    pub model: PosteriorModel,
    pub outcomes: Vec<AttackOutcome>,
    /// Test records whose posterior fell back to 0.5 on underflow.
    pub underflow_count: usize,
}

fn classify(p: f64, decision_threshold: f64) -> MembershipLabel {
    // Ties classify as member: the decision rule is `p >= threshold`.
    if p >= decision_threshold {
        MembershipLabel::Member
    } else {
        MembershipLabel::NonMember
    }
}

fn score_test_split(
    dt: &DistanceTable,
    model: &PosteriorModel,
    decision_threshold: f64,
) -> (Vec<AttackOutcome>, usize) {
    let mut underflows = 0;
    let outcomes = dt
        .test_records()
        .map(|r| {
            let post = model.posterior(r.distance);
            if post.underflow {
                underflows += 1;
            }
            AttackOutcome {
                source_index: r.source_index,
                distance: r.distance,
                posterior: post.member,
                predicted: classify(post.member, decision_threshold),
                truth: r.label,
            }
        })
        .collect();
    (outcomes, underflows)
}

/// Fit class-conditional KDEs on the true training labels and score the
/// test split. This is the data custodian's view: ground truth is
/// available for fitting.
pub fn true_distribution_attack(
    dt: &DistanceTable,
    bandwidth: &BandwidthSpec,
    decision_threshold: f64,
    prior_member: f64,
) -> Result<AttackRun, AttackError> {
    if dt.test_indices.is_empty() {
        return Err(AttackError::EmptyTestSplit);
    }
    let member = dt.train_distances(MembershipLabel::Member);
    let non_member = dt.train_distances(MembershipLabel::NonMember);
    if member.is_empty() {
        return Err(AttackError::EmptyTrainingClass("member"));
    }
    if non_member.is_empty() {
        return Err(AttackError::EmptyTrainingClass("non-member"));
    }
    let model = PosteriorModel::new(
        kde_fit(&member, bandwidth)?,
        kde_fit(&non_member, bandwidth)?,
        prior_member,
    )?;
    let (outcomes, underflow_count) = score_test_split(dt, &model, decision_threshold);
    Ok(AttackRun {
        model,
        outcomes,
        underflow_count,
    })
}

/// Percentile-resolved distance thresholds.
#[derive(Clone, Debug)]
pub struct ThresholdGrid {
    percentiles: Vec<f64>,
    thresholds: Vec<f64>,
}

impl ThresholdGrid {
    pub fn percentiles(&self) -> &[f64] {
        &self.percentiles
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.percentiles
            .iter()
            .copied()
            .zip(self.thresholds.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.percentiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.percentiles.is_empty()
    }
}

/// The default nine-point percentile ladder: 10, 20, ..., 90.
pub fn default_percentiles() -> Vec<f64> {
    (1..=9).map(|k| k as f64 * 10.0).collect()
}

/// Linear-interpolation percentile of a sorted slice.
fn percentile_linear(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = p / 100.0 * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = rank - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Resolve percentiles against every distance in the table's train and
/// test splits.
pub fn resolve_thresholds(
    dt: &DistanceTable,
    percentiles: &[f64],
) -> Result<ThresholdGrid, AttackError> {
    for p in percentiles {
        if !(*p > 0.0 && *p < 100.0) {
            return Err(AttackError::BadPercentile(*p));
        }
    }
    if percentiles.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AttackError::PercentilesNotIncreasing);
    }
    let mut pool = dt.split_distances_pool();
    if pool.is_empty() {
        return Err(AttackError::EmptyDistances);
    }
    pool.sort_unstable_by(f64::total_cmp);
    let thresholds = percentiles
        .iter()
        .map(|&p| percentile_linear(&pool, p))
        .collect();
    Ok(ThresholdGrid {
        percentiles: percentiles.to_vec(),
        thresholds,
    })
}

/// Why one threshold of a realistic sweep produced no fit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SkipReason {
    /// No training distance fell below the threshold.
    NoSupposedMembers,
    /// Every training distance fell below the threshold.
    NoSupposedNonMembers,
    /// A supposed class was too small for the bandwidth rule.
    BandwidthFailure(String),
}

impl std::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SkipReason::NoSupposedMembers => write!(f, "no supposed members below threshold"),
            SkipReason::NoSupposedNonMembers => {
                write!(f, "no supposed non-members above threshold")
            }
            SkipReason::BandwidthFailure(msg) => write!(f, "bandwidth failure: {msg}"),
        }
    }
}

/// One threshold of a realistic sweep.
#[derive(Clone, Debug)]
pub struct ThresholdAttack {
    pub percentile: f64,
    pub tau: f64,
    pub outcome: ThresholdOutcome,
}

#[derive(Clone, Debug)]
pub enum ThresholdOutcome {
    Ran {
        run: AttackRun,
        /// Largest increase of the fitted posterior along a 1000-point
        /// grid over [0, 1]; non-positive means the posterior decreases
        /// monotonically in distance. Reported as a diagnostic, never
        /// asserted.
        max_posterior_increase: f64,
    },
    Skipped(SkipReason),
}

impl ThresholdAttack {
    pub fn run(&self) -> Option<&AttackRun> {
        match &self.outcome {
            ThresholdOutcome::Ran { run, .. } => Some(run),
            ThresholdOutcome::Skipped(_) => None,
        }
    }
}

/// Largest step-to-step increase of the membership posterior on an even
/// grid over `[lo, hi]`.
pub fn posterior_max_increase(model: &PosteriorModel, lo: f64, hi: f64, points: usize) -> f64 {
    assert!(points >= 2);
    let step = (hi - lo) / (points - 1) as f64;
    let mut prev = model.posterior(lo).member;
    let mut max_increase = f64::NEG_INFINITY;
    for i in 1..points {
        let p = model.posterior(lo + step * i as f64).member;
        max_increase = max_increase.max(p - prev);
        prev = p;
    }
    max_increase
}

/// The adversary's attack: no labels, only a distance threshold per grid
/// entry. Training distances below the threshold become supposed members,
/// the rest supposed non-members; KDEs are fit to those pseudo-classes and
/// the test split is scored by posterior. True labels are used only to
/// fill the `truth` field of the outcomes. Degenerate thresholds are
/// skipped, not fatal; fitting each threshold is independent and runs in
/// parallel.
pub fn realistic_attack(
    dt: &DistanceTable,
    grid: &ThresholdGrid,
    bandwidth: &BandwidthSpec,
    decision_threshold: f64,
    prior_member: f64,
) -> Result<Vec<ThresholdAttack>, AttackError> {
    if dt.test_indices.is_empty() {
        return Err(AttackError::EmptyTestSplit);
    }
    if dt.train_indices.is_empty() {
        return Err(AttackError::EmptyTrainingClass("supposed member"));
    }
    if !(prior_member > 0.0 && prior_member < 1.0) {
        return Err(AttackError::BadPrior(prior_member));
    }

    let entries: Vec<ThresholdAttack> = grid
        .iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(percentile, tau)| {
            let supposed_member: Vec<f64> = dt
                .train_records()
                .filter(|r| r.distance < tau)
                .map(|r| r.distance)
                .collect();
            let supposed_non_member: Vec<f64> = dt
                .train_records()
                .filter(|r| !(r.distance < tau))
                .map(|r| r.distance)
                .collect();

            let outcome = if supposed_member.is_empty() {
                ThresholdOutcome::Skipped(SkipReason::NoSupposedMembers)
            } else if supposed_non_member.is_empty() {
                ThresholdOutcome::Skipped(SkipReason::NoSupposedNonMembers)
            } else {
                let fit = kde_fit(&supposed_member, bandwidth).and_then(|m| {
                    kde_fit(&supposed_non_member, bandwidth).map(|n| (m, n))
                });
                match fit {
                    Ok((m, n)) => {
                        let model = PosteriorModel::new(m, n, prior_member)
                            .expect("prior validated above");
                        let (outcomes, underflow_count) =
                            score_test_split(dt, &model, decision_threshold);
                        let max_posterior_increase =
                            posterior_max_increase(&model, 0.0, 1.0, 1000);
                        ThresholdOutcome::Ran {
                            run: AttackRun {
                                model,
                                outcomes,
                                underflow_count,
                            },
                            max_posterior_increase,
                        }
                    }
                    Err(e) => ThresholdOutcome::Skipped(SkipReason::BandwidthFailure(
                        e.to_string(),
                    )),
                }
            };
            ThresholdAttack {
                percentile,
                tau,
                outcome,
            }
        })
        .collect();

    if entries.iter().all(|e| e.run().is_none()) {
        return Err(AttackError::AllThresholdsDegenerate);
    }
    Ok(entries)
}

/// Hard thresholding per grid entry.
#[derive(Clone, Debug)]
pub struct Method1Run {
    pub percentile: f64,
    pub tau: f64,
    /// Outcomes with pseudo-posterior 1 for predicted members and 0
    /// otherwise; not a probability.
    pub outcomes: Vec<AttackOutcome>,
}

/// Classify test records as members exactly when their distance is
/// strictly below each threshold. No model is fit.
pub fn method1_attack(
    dt: &DistanceTable,
    grid: &ThresholdGrid,
) -> Result<Vec<Method1Run>, AttackError> {
    if dt.test_indices.is_empty() {
        return Err(AttackError::EmptyTestSplit);
    }
    Ok(grid
        .iter()
        .map(|(percentile, tau)| {
            let outcomes = dt
                .test_records()
                .map(|r| {
                    let is_member = r.distance < tau;
                    AttackOutcome {
                        source_index: r.source_index,
                        distance: r.distance,
                        posterior: if is_member { 1.0 } else { 0.0 },
                        predicted: if is_member {
                            MembershipLabel::Member
                        } else {
                            MembershipLabel::NonMember
                        },
                        truth: r.label,
                    }
                })
                .collect();
            Method1Run {
                percentile,
                tau,
                outcomes,
            }
        })
        .collect())
}
