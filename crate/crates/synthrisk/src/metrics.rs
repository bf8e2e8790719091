//! Classification metrics, ROC analysis with low-FPR readouts, the
//! two-sample Kolmogorov-Smirnov test, and TP-FP trajectories across
//! threshold sweeps.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attacks::AttackOutcome;
use crate::tabular::MembershipLabel;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("metrics: no outcomes to score")]
    EmptyOutcomes,
    #[error("metrics: scores and truths have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("metrics: ROC needs both classes in the truth labels")]
    SingleClass,
    #[error("metrics: KS test needs at least 2 samples per side, got {0} and {1}")]
    SampleTooSmall(usize, usize),
    #[error("metrics: FPR target {0} must lie strictly between 0 and 1")]
    BadFprTarget(f64),
}

/// Binary confusion counts with member as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Count predictions against truths.
pub fn confusion(outcomes: &[AttackOutcome]) -> Result<ConfusionMatrix, MetricsError> {
    if outcomes.is_empty() {
        return Err(MetricsError::EmptyOutcomes);
    }
    let mut cm = ConfusionMatrix::default();
    for o in outcomes {
        match (o.predicted.is_member(), o.truth.is_member()) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// Accuracy, precision, recall, and F1. Precision, recall, and F1 are
/// defined as 0 when their denominators vanish.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationScores {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn accuracy_f1(cm: &ConfusionMatrix) -> Result<ClassificationScores, MetricsError> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::EmptyOutcomes);
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let accuracy = (cm.tp + cm.tn) as f64 / total as f64;
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(ClassificationScores {
        accuracy,
        precision,
        recall,
        f1,
    })
}

/// One operating point of a ROC curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Records with score >= threshold are predicted member at this point.
    pub threshold: f64,
}

/// ROC curve swept over every distinct score, descending; tied scores move
/// together. Anchored at (0,0) and (1,1).
#[derive(Clone, Debug)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub n_positive: usize,
    pub n_negative: usize,
}

pub fn roc_curve(scores: &[f64], truths: &[MembershipLabel]) -> Result<RocCurve, MetricsError> {
    if scores.len() != truths.len() {
        return Err(MetricsError::LengthMismatch(scores.len(), truths.len()));
    }
    if scores.is_empty() {
        return Err(MetricsError::EmptyOutcomes);
    }
    let n_positive = truths.iter().filter(|t| t.is_member()).count();
    let n_negative = truths.len() - n_positive;
    if n_positive == 0 || n_negative == 0 {
        return Err(MetricsError::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        // consume the whole tie group before emitting a point
        while i < order.len() && scores[order[i]] == threshold {
            if truths[order[i]].is_member() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n_negative as f64,
            tpr: tp as f64 / n_positive as f64,
            threshold,
        });
    }

    let mut auc = 0.0;
    for w in points.windows(2) {
        auc += (w[1].fpr - w[0].fpr) * 0.5 * (w[0].tpr + w[1].tpr);
    }

    Ok(RocCurve {
        points,
        auc,
        n_positive,
        n_negative,
    })
}

/// Worst-case readout at one FPR target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TprAtFpr {
    pub target_fpr: f64,
    /// Largest TPR achieved at an operating point with FPR <= target
    /// (conservative step interpolation, never above what the sample
    /// supports).
    pub tpr: f64,
    /// `tpr / target_fpr`.
    pub risk_ratio: f64,
    /// Whether the negative sample is large enough to resolve the target
    /// (at least one expected false positive).
    pub sufficient_sample: bool,
    /// Risk rule verdict: ratio above the configured multiplier on a
    /// sufficient sample.
    pub flagged: bool,
}

/// TPR at each FPR target by conservative step interpolation, with the
/// `t`-rule flag (`risk_ratio > risk_multiplier`).
pub fn tpr_at_fpr(
    curve: &RocCurve,
    fpr_targets: &[f64],
    risk_multiplier: f64,
) -> Result<Vec<TprAtFpr>, MetricsError> {
    for t in fpr_targets {
        if !(*t > 0.0 && *t < 1.0) {
            return Err(MetricsError::BadFprTarget(*t));
        }
    }
    Ok(fpr_targets
        .iter()
        .map(|&target| {
            let tpr = curve
                .points
                .iter()
                .filter(|p| p.fpr <= target)
                .map(|p| p.tpr)
                .fold(0.0, f64::max);
            let risk_ratio = tpr / target;
            let sufficient_sample = curve.n_negative as f64 * target >= 1.0;
            TprAtFpr {
                target_fpr: target,
                tpr,
                risk_ratio,
                sufficient_sample,
                flagged: sufficient_sample && risk_ratio > risk_multiplier,
            }
        })
        .collect())
}

/// Two-sample Kolmogorov-Smirnov result.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// Sup-norm of the two empirical CDFs' difference.
    pub statistic: f64,
    /// Asymptotic p-value with the small-sample lambda correction.
    pub p_value: f64,
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, MetricsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(MetricsError::SampleTooSmall(a.len(), b.len()));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    ys.sort_unstable_by(f64::total_cmp);

    let na = xs.len() as f64;
    let nb = ys.len() as f64;
    let mut i = 0usize;
    let mut j = 0usize;
    let mut statistic = 0.0f64;
    while i < xs.len() || j < ys.len() {
        let v = match (xs.get(i), ys.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        let diff = (i as f64 / na - j as f64 / nb).abs();
        if diff > statistic {
            statistic = diff;
        }
    }

    let n_eff = na * nb / (na + nb);
    let lambda = (n_eff.sqrt() + 0.12 + 0.11 / n_eff.sqrt()) * statistic;
    let p_value = kolmogorov_survival(lambda).clamp(0.0, 1.0);
    Ok(KsResult { statistic, p_value })
}

/// Asymptotic Kolmogorov survival function
/// `Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)`.
/// Returns 1 when the alternating series fails to converge (small lambda).
fn kolmogorov_survival(lambda: f64) -> f64 {
    let a2 = -2.0 * lambda * lambda;
    let mut sign = 1.0;
    let mut sum = 0.0;
    let mut prev_term = 0.0f64;
    for k in 1..=100 {
        let term = sign * (a2 * (k * k) as f64).exp();
        sum += term;
        let mag = term.abs();
        if mag <= 1e-3 * prev_term || mag <= 1e-8 * sum.abs() {
            return 2.0 * sum;
        }
        sign = -sign;
        prev_term = mag;
    }
    1.0
}

/// (TP, FP) per threshold plus whether TP grew faster than FP on the step
/// leading into each point. Input must be ordered by ascending threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub tp: usize,
    pub fp: usize,
    /// None for the first point; otherwise `delta_tp > delta_fp` for the
    /// step from the previous threshold, the condition under which F1
    /// improves as the threshold loosens.
    pub tp_growth_outpaces_fp: Option<bool>,
}

pub fn tp_fp_trajectory(per_threshold: &[ConfusionMatrix]) -> Vec<TrajectoryPoint> {
    let mut points = Vec::with_capacity(per_threshold.len());
    let mut prev: Option<(usize, usize)> = None;
    for cm in per_threshold {
        let indicator = prev.map(|(ptp, pfp)| {
            let dtp = cm.tp.saturating_sub(ptp);
            let dfp = cm.fp.saturating_sub(pfp);
            dtp > dfp
        });
        points.push(TrajectoryPoint {
            tp: cm.tp,
            fp: cm.fp,
            tp_growth_outpaces_fp: indicator,
        });
        prev = Some((cm.tp, cm.fp));
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn outcome(predicted: bool, truth: bool) -> AttackOutcome {
        AttackOutcome {
            source_index: 0,
            distance: 0.0,
            posterior: if predicted { 1.0 } else { 0.0 },
            predicted: if predicted {
                MembershipLabel::Member
            } else {
                MembershipLabel::NonMember
            },
            truth: if truth {
                MembershipLabel::Member
            } else {
                MembershipLabel::NonMember
            },
        }
    }

    fn labels(bits: &[u8]) -> Vec<MembershipLabel> {
        bits.iter()
            .map(|&b| MembershipLabel::from_bit(b).unwrap())
            .collect()
    }

    /// Mann-Whitney pair counting with ties worth one half.
    fn mann_whitney_auc(scores: &[f64], truths: &[MembershipLabel]) -> f64 {
        let pos: Vec<f64> = scores
            .iter()
            .zip(truths)
            .filter(|(_, t)| t.is_member())
            .map(|(s, _)| *s)
            .collect();
        let neg: Vec<f64> = scores
            .iter()
            .zip(truths)
            .filter(|(_, t)| !t.is_member())
            .map(|(s, _)| *s)
            .collect();
        let mut u = 0.0;
        for &p in &pos {
            for &n in &neg {
                if p > n {
                    u += 1.0;
                } else if p == n {
                    u += 0.5;
                }
            }
        }
        u / (pos.len() * neg.len()) as f64
    }

    #[test]
    fn confusion_counts_all_quadrants() {
        let outcomes = vec![
            outcome(true, true),
            outcome(true, false),
            outcome(false, false),
            outcome(false, true),
            outcome(true, true),
        ];
        let cm = confusion(&outcomes).unwrap();
        assert_eq!(
            cm,
            ConfusionMatrix {
                tp: 2,
                fp: 1,
                tn: 1,
                fn_: 1
            }
        );
    }

    #[test]
    fn all_correct_has_no_errors() {
        let outcomes = vec![outcome(true, true), outcome(false, false)];
        let cm = confusion(&outcomes).unwrap();
        assert_eq!(cm.fp, 0);
        assert_eq!(cm.fn_, 0);
    }

    #[test]
    fn always_member_on_balanced_set_hits_baselines() {
        let mut outcomes = Vec::new();
        for i in 0..60 {
            outcomes.push(outcome(true, i < 30));
        }
        let cm = confusion(&outcomes).unwrap();
        assert_eq!(cm.tp, 30);
        assert_eq!(cm.fp, 30);
        let scores = accuracy_f1(&cm).unwrap();
        assert_eq!(scores.accuracy, 0.5);
        assert_eq!(scores.precision, 0.5);
        assert_eq!(scores.recall, 1.0);
        assert_eq!(scores.f1, 2.0 / 3.0);
    }

    #[test]
    fn perfect_classifier_scores_one() {
        let outcomes = vec![outcome(true, true), outcome(false, false)];
        let scores = accuracy_f1(&confusion(&outcomes).unwrap()).unwrap();
        assert_eq!(scores.accuracy, 1.0);
        assert_eq!(scores.precision, 1.0);
        assert_eq!(scores.recall, 1.0);
        assert_eq!(scores.f1, 1.0);
    }

    #[test]
    fn no_predicted_positives_zeroes_precision_and_f1() {
        let outcomes = vec![outcome(false, true), outcome(false, false)];
        let scores = accuracy_f1(&confusion(&outcomes).unwrap()).unwrap();
        assert_eq!(scores.precision, 0.0);
        assert_eq!(scores.f1, 0.0);
    }

    #[test]
    fn roc_perfect_separation() {
        let scores = [0.9, 0.8, 0.2, 0.1];
        let truths = labels(&[1, 1, 0, 0]);
        let curve = roc_curve(&scores, &truths).unwrap();
        assert_eq!(curve.auc, 1.0);
        assert_eq!(curve.points.first().unwrap().fpr, 0.0);
        assert_eq!(curve.points.last().unwrap().tpr, 1.0);
        assert_eq!(curve.points.last().unwrap().fpr, 1.0);
    }

    #[test]
    fn roc_all_tied_scores_is_diagonal() {
        let scores = [0.5, 0.5, 0.5, 0.5];
        let truths = labels(&[1, 1, 0, 0]);
        let curve = roc_curve(&scores, &truths).unwrap();
        // two endpoints plus the single jump
        assert_eq!(curve.points.len(), 2);
        assert_eq!(curve.auc, 0.5);
    }

    #[test]
    fn roc_rejects_single_class() {
        let scores = [0.1, 0.9];
        let truths = labels(&[1, 1]);
        assert!(matches!(
            roc_curve(&scores, &truths),
            Err(MetricsError::SingleClass)
        ));
    }

    #[test]
    fn roc_monotone_and_matches_pair_counting() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let n = 20;
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let truths: Vec<MembershipLabel> = (0..n)
                .map(|i| MembershipLabel::from_bit((i % 2) as u8).unwrap())
                .collect();
            let curve = roc_curve(&scores, &truths).unwrap();
            for w in curve.points.windows(2) {
                assert!(w[1].fpr >= w[0].fpr);
                assert!(w[1].tpr >= w[0].tpr);
            }
            let mw = mann_whitney_auc(&scores, &truths);
            assert!((curve.auc - mw).abs() < 1e-12, "{} vs {mw}", curve.auc);
        }
    }

    #[test]
    fn roc_invariant_under_monotone_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let scores: Vec<f64> = (0..40).map(|_| rng.random_range(0.0..1.0)).collect();
        let truths: Vec<MembershipLabel> = (0..40)
            .map(|_| MembershipLabel::from_bit(rng.random_range(0..2) as u8).unwrap())
            .collect();
        let transformed: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp()).collect();
        let a = roc_curve(&scores, &truths).unwrap();
        let b = roc_curve(&transformed, &truths).unwrap();
        assert_eq!(a.points.len(), b.points.len());
        for (x, y) in a.points.iter().zip(&b.points) {
            assert_eq!(x.fpr, y.fpr);
            assert_eq!(x.tpr, y.tpr);
        }
        assert!((a.auc - b.auc).abs() < 1e-15);
    }

    #[test]
    fn tpr_at_fpr_perfect_classifier_is_flagged() {
        let scores = [0.9, 0.8, 0.2, 0.1];
        let truths = labels(&[1, 1, 0, 0]);
        let curve = roc_curve(&scores, &truths).unwrap();
        let readout = tpr_at_fpr(&curve, &[1e-3], 20.0).unwrap();
        assert_eq!(readout[0].tpr, 1.0);
        assert!((readout[0].risk_ratio - 1000.0).abs() < 1e-9);
        // only 2 negatives: cannot resolve 1e-3, so the flag must defer
        assert!(!readout[0].sufficient_sample);
        assert!(!readout[0].flagged);

        let many_scores: Vec<f64> = (0..4000)
            .map(|i| if i < 2000 { 0.9 } else { 0.1 })
            .collect();
        let many_truths: Vec<MembershipLabel> = (0..4000)
            .map(|i| MembershipLabel::from_bit(u8::from(i < 2000)).unwrap())
            .collect();
        let big = roc_curve(&many_scores, &many_truths).unwrap();
        let readout = tpr_at_fpr(&big, &[1e-3], 20.0).unwrap();
        assert!(readout[0].sufficient_sample);
        assert!(readout[0].flagged);
    }

    #[test]
    fn tpr_at_fpr_no_reachable_point_is_zero() {
        // All scores tied: only (0,0) and (1,1) exist; at target 0.1 the
        // conservative readout sees just (0,0).
        let scores = [0.5, 0.5, 0.5, 0.5];
        let truths = labels(&[1, 1, 0, 0]);
        let curve = roc_curve(&scores, &truths).unwrap();
        let readout = tpr_at_fpr(&curve, &[0.1], 20.0).unwrap();
        assert_eq!(readout[0].tpr, 0.0);
        assert!(!readout[0].flagged);
    }

    #[test]
    fn tpr_at_fpr_validates_targets() {
        let scores = [0.9, 0.1];
        let truths = labels(&[1, 0]);
        let curve = roc_curve(&scores, &truths).unwrap();
        assert!(matches!(
            tpr_at_fpr(&curve, &[0.0], 20.0),
            Err(MetricsError::BadFprTarget(_))
        ));
    }

    #[test]
    fn ks_identical_samples() {
        let a = [0.1, 0.5, 0.9, 0.3];
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn ks_disjoint_supports() {
        let a = [0.0, 0.1, 0.2];
        let b = [5.0, 6.0, 7.0];
        let r = ks_two_sample(&a, &b).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(r.p_value < 0.05);
    }

    #[test]
    fn ks_interleaved_thirds() {
        let a = [1.0, 2.0, 3.0];
        let b = [1.5, 2.5, 3.5];
        let r = ks_two_sample(&a, &b).unwrap();
        assert!((r.statistic - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ks_requires_two_samples_each() {
        assert!(matches!(
            ks_two_sample(&[1.0], &[1.0, 2.0]),
            Err(MetricsError::SampleTooSmall(1, 2))
        ));
    }

    /// Exhaustive oracle: evaluate both ECDFs at every pooled point.
    fn ks_statistic_oracle(a: &[f64], b: &[f64]) -> f64 {
        let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
        pooled.sort_unstable_by(f64::total_cmp);
        let ecdf = |xs: &[f64], v: f64| {
            xs.iter().filter(|&&x| x <= v).count() as f64 / xs.len() as f64
        };
        pooled
            .iter()
            .map(|&v| (ecdf(a, v) - ecdf(b, v)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn ks_matches_exhaustive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let na = rng.random_range(2..30);
            let nb = rng.random_range(2..30);
            // coarse grid so ties across samples actually happen
            let a: Vec<f64> = (0..na)
                .map(|_| rng.random_range(0..10) as f64 / 10.0)
                .collect();
            let b: Vec<f64> = (0..nb)
                .map(|_| rng.random_range(0..10) as f64 / 10.0)
                .collect();
            let got = ks_two_sample(&a, &b).unwrap().statistic;
            let want = ks_statistic_oracle(&a, &b);
            assert_eq!(got, want);
        }
    }

    #[test]
    fn trajectory_indicators() {
        let cms = [
            ConfusionMatrix { tp: 0, fp: 0, tn: 10, fn_: 10 },
            ConfusionMatrix { tp: 5, fp: 1, tn: 9, fn_: 5 },
            ConfusionMatrix { tp: 6, fp: 5, tn: 5, fn_: 4 },
        ];
        let pts = tp_fp_trajectory(&cms);
        assert_eq!(pts[0].tp_growth_outpaces_fp, None);
        assert_eq!(pts[1].tp_growth_outpaces_fp, Some(true));
        assert_eq!(pts[2].tp_growth_outpaces_fp, Some(false));
        assert_eq!(pts[2].tp, 6);
        assert_eq!(pts[2].fp, 5);
    }

    proptest! {
        #[test]
        fn auc_equals_pair_counting(
            seed in 0u64..500,
            n in 4usize..60,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let scores: Vec<f64> = (0..n)
                .map(|_| rng.random_range(0..20) as f64 / 20.0)
                .collect();
            let truths: Vec<MembershipLabel> = (0..n)
                .map(|i| MembershipLabel::from_bit((i % 2) as u8).unwrap())
                .collect();
            let curve = roc_curve(&scores, &truths).unwrap();
            let mw = mann_whitney_auc(&scores, &truths);
            prop_assert!((curve.auc - mw).abs() < 1e-12);
        }

        #[test]
        fn ks_invariant_under_monotone_transform(
            seed in 0u64..500,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<f64> = (0..15).map(|_| rng.random_range(0.0..1.0)).collect();
            let b: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..1.0)).collect();
            let f = |x: f64| (2.0 * x).exp() + x;
            let ta: Vec<f64> = a.iter().map(|&x| f(x)).collect();
            let tb: Vec<f64> = b.iter().map(|&x| f(x)).collect();
            let plain = ks_two_sample(&a, &b).unwrap();
            let mapped = ks_two_sample(&ta, &tb).unwrap();
            prop_assert_eq!(plain.statistic, mapped.statistic);
        }

        #[test]
        fn accuracy_on_balanced_set_is_mean_of_rates(
            per_class in 1usize..100,
            tp_frac in 0.0f64..=1.0,
            tn_frac in 0.0f64..=1.0,
        ) {
            let tp = (tp_frac * per_class as f64) as usize;
            let tn = (tn_frac * per_class as f64) as usize;
            let cm = ConfusionMatrix {
                tp,
                fp: per_class - tn,
                tn,
                fn_: per_class - tp,
            };
            let s = accuracy_f1(&cm).unwrap();
            let tpr = tp as f64 / per_class as f64;
            let tnr = tn as f64 / per_class as f64;
            prop_assert!((s.accuracy - (tpr + tnr) / 2.0).abs() < 1e-15);
        }
    }
}
