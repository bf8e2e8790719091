//! End-to-end pipeline: ingest tables, compute nearest-neighbour
//! distances, run the selected attacks, and emit a JSON risk report with
//! CSV sidecars for every curve and outcome table.
//!
//! Reports are self-contained: every metric in `report.json` can be
//! recomputed from the dumped outcome CSVs, and identical configs with
//! identical seeds produce byte-identical reports regardless of worker
//! count.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attacks::{
    method1_attack, realistic_attack, resolve_thresholds, true_distribution_attack,
    AttackError, AttackOutcome, AttackRun, Method1Run, ThresholdAttack, ThresholdOutcome,
};
use crate::distance::{
    nearest_neighbor_distances, split_distances, DistanceError, DistanceTable, GowerContext,
};
use crate::kde::{BandwidthSpec, KdeError};
use crate::metrics::{
    accuracy_f1, confusion, ks_two_sample, roc_curve, tp_fp_trajectory, tpr_at_fpr,
    ClassificationScores, ConfusionMatrix, KsResult, MetricsError, RocCurve, TprAtFpr,
};
use crate::tabular::{
    build_attack_dataset, duplicate_counts, load_schema_file, load_table, DuplicateCounts,
    SchemaSource, TableError,
};

pub const REPORT_VERSION: u32 = 1;

/// Grid resolution for the dumped density curves.
const DENSITY_GRID_POINTS: usize = 512;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Distance(#[from] DistanceError),
    #[error(transparent)]
    Kde(#[from] KdeError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("config: {0}")]
    Config(String),
    #[error("report: comparison requires the {0} section")]
    MissingSection(&'static str),
    #[error("report: failed to write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("report: serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

/// Which attacks to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackSelection {
    All,
    TrueDist,
    Realistic,
    Method1,
}

impl AttackSelection {
    fn true_dist(self) -> bool {
        matches!(self, AttackSelection::All | AttackSelection::TrueDist)
    }

    fn realistic(self) -> bool {
        matches!(self, AttackSelection::All | AttackSelection::Realistic)
    }

    fn method1(self) -> bool {
        matches!(self, AttackSelection::All | AttackSelection::Method1)
    }
}

/// Full pipeline configuration. The seed is mandatory so audits are
/// reproducible and disputable; there is no wall-clock default.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub train_path: Option<PathBuf>,
    pub unseen_path: Option<PathBuf>,
    pub synthetic_path: Option<PathBuf>,
    pub schema_path: Option<PathBuf>,
    pub attack: AttackSelection,
    pub percentiles: Vec<f64>,
    pub train_fraction: f64,
    pub bandwidth: BandwidthSpec,
    pub decision_threshold: f64,
    pub prior_member: f64,
    pub fpr_targets: Vec<f64>,
    pub risk_multiplier: f64,
    pub seed: u64,
    /// Subsample the larger of the two input tables so the attack dataset
    /// is balanced.
    pub balance_attack: bool,
    /// Balance the training split as well as the (always balanced) test
    /// split.
    pub balanced_train: bool,
    /// Normalize numeric differences by feature range. Off restores raw
    /// absolute differences.
    pub range_normalize: bool,
    pub distances_in: Option<PathBuf>,
    pub distances_out: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl RunConfig {
    /// Defaults mirroring the evaluation protocol: 70/30 split, Scott
    /// bandwidth, 0.5 decision threshold and prior, percentiles 10..90,
    /// FPR targets 1e-1/1e-2/1e-3, risk multiplier 20.
    pub fn new(seed: u64, out_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            train_path: None,
            unseen_path: None,
            synthetic_path: None,
            schema_path: None,
            attack: AttackSelection::All,
            percentiles: crate::attacks::default_percentiles(),
            train_fraction: 0.7,
            bandwidth: BandwidthSpec::Scott,
            decision_threshold: 0.5,
            prior_member: 0.5,
            fpr_targets: vec![1e-1, 1e-2, 1e-3],
            risk_multiplier: 20.0,
            seed,
            balance_attack: false,
            balanced_train: false,
            range_normalize: true,
            distances_in: None,
            distances_out: None,
            out_dir: out_dir.into(),
        }
    }

    fn validate(&self) -> Result<(), PipelineError> {
        let err = |msg: String| Err(PipelineError::Config(msg));
        if self.distances_in.is_none() {
            for (name, path) in [
                ("--train", &self.train_path),
                ("--unseen", &self.unseen_path),
                ("--synthetic", &self.synthetic_path),
            ] {
                if path.is_none() {
                    return err(format!("{name} is required unless --distances-in is given"));
                }
            }
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return err(format!(
                "train fraction {} must lie strictly between 0 and 1",
                self.train_fraction
            ));
        }
        if !(self.decision_threshold >= 0.0 && self.decision_threshold <= 1.0) {
            return err(format!(
                "decision threshold {} must lie in [0, 1]",
                self.decision_threshold
            ));
        }
        if !(self.prior_member > 0.0 && self.prior_member < 1.0) {
            return err(format!(
                "prior {} must lie strictly between 0 and 1",
                self.prior_member
            ));
        }
        if self.risk_multiplier <= 0.0 {
            return err(format!(
                "risk multiplier {} must be positive",
                self.risk_multiplier
            ));
        }
        if let BandwidthSpec::Fixed(h) = self.bandwidth {
            if h <= 0.0 {
                return err(format!("fixed bandwidth {h} must be positive"));
            }
        }
        for t in &self.fpr_targets {
            if !(*t > 0.0 && *t < 1.0) {
                return err(format!("FPR target {t} must lie strictly between 0 and 1"));
            }
        }
        Ok(())
    }
}

/// Input scale, split sizes, and data-quality flags.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_train_rows: Option<usize>,
    pub n_unseen_rows: Option<usize>,
    pub n_synthetic_rows: Option<usize>,
    pub n_attack_records: usize,
    pub n_members: usize,
    pub n_non_members: usize,
    pub n_train_split: usize,
    pub n_test_split: usize,
    pub n_excluded_by_balancing: usize,
    /// Exact-duplicate statistics; duplicates are kept, never dropped.
    pub duplicates: Option<DuplicateCounts>,
    pub constant_features: Vec<String>,
    pub any_kde_degenerate: bool,
    pub any_posterior_underflow: bool,
}

/// Fixed methodological choices echoed for the record.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodNotes {
    pub distance: String,
    pub kde_kernel: String,
    /// Densities are not reflected or truncated at distance zero; mass
    /// leaking below zero is left uncorrected.
    pub kde_boundary_correction: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrueDistributionSection {
    pub bandwidth_member: f64,
    pub bandwidth_non_member: f64,
    pub kde_degenerate: bool,
    pub underflow_count: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: ClassificationScores,
    pub auc: f64,
    pub tpr_at_fpr: Vec<TprAtFpr>,
    pub risk_flagged: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RealisticThresholdRow {
    pub percentile: f64,
    pub tau: f64,
    pub skipped: Option<String>,
    pub bandwidth_supposed_member: Option<f64>,
    pub bandwidth_supposed_non_member: Option<f64>,
    pub kde_degenerate: Option<bool>,
    pub underflow_count: Option<usize>,
    pub confusion: Option<ConfusionMatrix>,
    pub metrics: Option<ClassificationScores>,
    pub auc: Option<f64>,
    pub tpr_at_fpr: Option<Vec<TprAtFpr>>,
    /// Largest posterior increase along a 1000-point grid over [0, 1];
    /// non-positive means the fitted posterior decreases monotonically.
    pub max_posterior_increase: Option<f64>,
    pub risk_flagged: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RealisticSection {
    pub thresholds: Vec<RealisticThresholdRow>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Method1ThresholdRow {
    pub percentile: f64,
    pub tau: f64,
    pub confusion: ConfusionMatrix,
    pub metrics: ClassificationScores,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Method1Section {
    /// Hard thresholding emits labels, not probabilities, so no ROC or
    /// low-FPR readout is reported for it.
    pub non_probabilistic: bool,
    pub thresholds: Vec<Method1ThresholdRow>,
}

/// One cell of the attack-by-percentile accuracy/F1 heatmap.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub attack: String,
    pub percentile: f64,
    pub accuracy: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub percentile: f64,
    pub tp: usize,
    pub fp: usize,
    pub tp_growth_outpaces_fp: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub percentile: f64,
    pub realistic_f1: Option<f64>,
    pub method1_f1: f64,
    /// realistic minus hard-threshold F1 at this percentile.
    pub f1_delta: Option<f64>,
    pub realistic_exceeds_true_distribution: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub true_distribution_f1: Option<f64>,
    pub rows: Vec<ComparisonRow>,
}

/// The machine-readable risk report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub report_version: u32,
    /// True when any attack exceeded the low-FPR risk rule; the CLI maps
    /// this to exit code 2.
    pub risk_flagged: bool,
    pub config: RunConfig,
    pub dataset: DatasetSummary,
    pub method: MethodNotes,
    /// KS test between member and non-member training-split distances.
    pub ks_member_vs_non_member: Option<KsResult>,
    pub true_distribution: Option<TrueDistributionSection>,
    pub realistic: Option<RealisticSection>,
    pub method1: Option<Method1Section>,
    pub heatmap: Vec<HeatmapCell>,
    pub trajectory: Option<Vec<TrajectoryRow>>,
    pub comparison: Option<ComparisonTable>,
}

/// Per-percentile comparison of the realistic attack against hard
/// thresholding, with flags where the realistic attack beats the
/// label-informed one.
pub fn compare_attacks(report: &EvalReport) -> Result<ComparisonTable, PipelineError> {
    let realistic = report
        .realistic
        .as_ref()
        .ok_or(PipelineError::MissingSection("realistic"))?;
    let method1 = report
        .method1
        .as_ref()
        .ok_or(PipelineError::MissingSection("method1"))?;
    let true_dist_f1 = report.true_distribution.as_ref().map(|s| s.metrics.f1);

    let rows = realistic
        .thresholds
        .iter()
        .zip(&method1.thresholds)
        .map(|(r, m)| {
            debug_assert_eq!(r.percentile, m.percentile);
            let realistic_f1 = r.metrics.as_ref().map(|s| s.f1);
            ComparisonRow {
                percentile: m.percentile,
                realistic_f1,
                method1_f1: m.metrics.f1,
                f1_delta: realistic_f1.map(|f1| f1 - m.metrics.f1),
                realistic_exceeds_true_distribution: match (realistic_f1, true_dist_f1) {
                    (Some(r), Some(t)) => Some(r > t),
                    _ => None,
                },
            }
        })
        .collect();

    Ok(ComparisonTable {
        true_distribution_f1: true_dist_f1,
        rows,
    })
}

struct PosteriorMetrics {
    confusion: ConfusionMatrix,
    scores: ClassificationScores,
    curve: RocCurve,
    tpr_readout: Vec<TprAtFpr>,
    risk_flagged: bool,
}

fn posterior_metrics(
    outcomes: &[AttackOutcome],
    config: &RunConfig,
) -> Result<PosteriorMetrics, PipelineError> {
    let cm = confusion(outcomes)?;
    let scores = accuracy_f1(&cm)?;
    let posteriors: Vec<f64> = outcomes.iter().map(|o| o.posterior).collect();
    let truths: Vec<_> = outcomes.iter().map(|o| o.truth).collect();
    let curve = roc_curve(&posteriors, &truths)?;
    let readout = tpr_at_fpr(&curve, &config.fpr_targets, config.risk_multiplier)?;
    let risk_flagged = readout.iter().any(|r| r.flagged);
    Ok(PosteriorMetrics {
        confusion: cm,
        scores,
        curve,
        tpr_readout: readout,
        risk_flagged,
    })
}

/// Trimmed percentile for filenames: `10` not `10.0`, `12.5` stays.
fn pct_tag(p: f64) -> String {
    format!("{p}").replace('.', "_")
}

struct Artifacts {
    distances: DistanceTable,
    outcome_files: Vec<(String, Vec<AttackOutcome>, String, Option<f64>)>,
    roc_files: Vec<(String, RocCurve)>,
    density_files: Vec<(String, Vec<(f64, f64)>)>,
}

/// Run the configured pipeline and write `report.json` plus CSV sidecars
/// into the output directory. All computation happens before the first
/// byte is written, so input errors leave no partial outputs behind.
pub fn run_pipeline(config: &RunConfig) -> Result<EvalReport, PipelineError> {
    config.validate()?;

    // ingest + distances
    let mut n_train_rows = None;
    let mut n_unseen_rows = None;
    let mut n_synth_rows = None;
    let mut duplicates = None;
    let mut constant_features = Vec::new();

    let dt_raw = if let Some(path) = &config.distances_in {
        DistanceTable::read_csv(path)?
    } else {
        let schema_source = match &config.schema_path {
            Some(p) => SchemaSource::Provided(load_schema_file(p)?),
            None => SchemaSource::Infer,
        };
        let train = load_table(config.train_path.as_ref().unwrap(), &schema_source)?;
        let unseen = load_table(config.unseen_path.as_ref().unwrap(), &schema_source)?;
        let synth = load_table(config.synthetic_path.as_ref().unwrap(), &schema_source)?;
        n_train_rows = Some(train.n_rows());
        n_unseen_rows = Some(unseen.n_rows());
        n_synth_rows = Some(synth.n_rows());
        duplicates = Some(duplicate_counts(&train, &unseen));

        let attack = build_attack_dataset(&train, &unseen, config.balance_attack, config.seed)?;
        let ctx = GowerContext::from_tables(&[&attack.table, &synth], config.range_normalize)?;
        constant_features = ctx
            .constant_features()
            .into_iter()
            .map(str::to_string)
            .collect();
        nearest_neighbor_distances(&attack, &synth, &ctx)?
    };

    // deterministic derived seed; the attack-dataset subsample used the
    // base seed already
    let dt = split_distances(
        &dt_raw,
        config.train_fraction,
        config.balanced_train,
        config.seed.wrapping_add(1),
    )?;

    let grid = resolve_thresholds(&dt, &config.percentiles)?;

    let member_train = dt.train_distances(crate::tabular::MembershipLabel::Member);
    let non_member_train = dt.train_distances(crate::tabular::MembershipLabel::NonMember);
    let ks = match ks_two_sample(&member_train, &non_member_train) {
        Ok(r) => Some(r),
        Err(MetricsError::SampleTooSmall(..)) => None,
        Err(e) => return Err(e.into()),
    };

    let mut artifacts = Artifacts {
        distances: dt_raw,
        outcome_files: Vec::new(),
        roc_files: Vec::new(),
        density_files: Vec::new(),
    };
    let mut any_degenerate = false;
    let mut any_underflow = false;
    let mut risk_flagged = false;

    let true_distribution = if config.attack.true_dist() {
        let run = true_distribution_attack(
            &dt,
            &config.bandwidth,
            config.decision_threshold,
            config.prior_member,
        )?;
        let m = posterior_metrics(&run.outcomes, config)?;
        any_degenerate |= run.model.any_degenerate_bandwidth();
        any_underflow |= run.underflow_count > 0;
        risk_flagged |= m.risk_flagged;

        let section = TrueDistributionSection {
            bandwidth_member: run.model.kde_member.bandwidth(),
            bandwidth_non_member: run.model.kde_non_member.bandwidth(),
            kde_degenerate: run.model.any_degenerate_bandwidth(),
            underflow_count: run.underflow_count,
            confusion: m.confusion,
            metrics: m.scores,
            auc: m.curve.auc,
            tpr_at_fpr: m.tpr_readout,
            risk_flagged: m.risk_flagged,
        };

        let (lo, hi) = density_domain(&run);
        artifacts.density_files.push((
            "density-member.csv".into(),
            run.model
                .kde_member
                .density_curve(lo, hi, DENSITY_GRID_POINTS),
        ));
        artifacts.density_files.push((
            "density-non-member.csv".into(),
            run.model
                .kde_non_member
                .density_curve(lo, hi, DENSITY_GRID_POINTS),
        ));
        artifacts
            .roc_files
            .push(("roc-true-distribution.csv".into(), m.curve));
        artifacts.outcome_files.push((
            "outcomes-true-distribution.csv".into(),
            run.outcomes,
            "true-distribution".into(),
            None,
        ));
        Some(section)
    } else {
        None
    };

    let realistic = if config.attack.realistic() {
        let sweep = realistic_attack(
            &dt,
            &grid,
            &config.bandwidth,
            config.decision_threshold,
            config.prior_member,
        )?;
        let mut rows = Vec::with_capacity(sweep.len());
        for entry in sweep {
            rows.push(realistic_row(
                entry,
                config,
                &mut artifacts,
                &mut any_degenerate,
                &mut any_underflow,
                &mut risk_flagged,
            )?);
        }
        Some(RealisticSection { thresholds: rows })
    } else {
        None
    };

    let mut trajectory = None;
    let method1 = if config.attack.method1() {
        let runs = method1_attack(&dt, &grid)?;
        let mut rows = Vec::with_capacity(runs.len());
        let mut cms = Vec::with_capacity(runs.len());
        for Method1Run {
            percentile,
            tau,
            outcomes,
        } in runs
        {
            let cm = confusion(&outcomes)?;
            let scores = accuracy_f1(&cm)?;
            cms.push(cm);
            artifacts.outcome_files.push((
                format!("outcomes-method1-p{}.csv", pct_tag(percentile)),
                outcomes,
                "method1".into(),
                Some(percentile),
            ));
            rows.push(Method1ThresholdRow {
                percentile,
                tau,
                confusion: cm,
                metrics: scores,
            });
        }
        trajectory = Some(
            tp_fp_trajectory(&cms)
                .into_iter()
                .zip(&rows)
                .map(|(pt, row)| TrajectoryRow {
                    percentile: row.percentile,
                    tp: pt.tp,
                    fp: pt.fp,
                    tp_growth_outpaces_fp: pt.tp_growth_outpaces_fp,
                })
                .collect::<Vec<_>>(),
        );
        Some(Method1Section {
            non_probabilistic: true,
            thresholds: rows,
        })
    } else {
        None
    };

    let mut heatmap = Vec::new();
    if let Some(section) = &realistic {
        for row in &section.thresholds {
            heatmap.push(HeatmapCell {
                attack: "realistic".into(),
                percentile: row.percentile,
                accuracy: row.metrics.as_ref().map(|m| m.accuracy),
                f1: row.metrics.as_ref().map(|m| m.f1),
            });
        }
    }
    if let Some(section) = &method1 {
        for row in &section.thresholds {
            heatmap.push(HeatmapCell {
                attack: "method1".into(),
                percentile: row.percentile,
                accuracy: Some(row.metrics.accuracy),
                f1: Some(row.metrics.f1),
            });
        }
    }

    let n_excluded =
        dt.records.len() - dt.train_indices.len() - dt.test_indices.len();
    let (n_members, n_non_members) = {
        let m = dt
            .records
            .iter()
            .filter(|r| r.label.is_member())
            .count();
        (m, dt.records.len() - m)
    };

    let mut report = EvalReport {
        report_version: REPORT_VERSION,
        risk_flagged,
        config: config.clone(),
        dataset: DatasetSummary {
            n_train_rows,
            n_unseen_rows,
            n_synthetic_rows: n_synth_rows,
            n_attack_records: dt.records.len(),
            n_members,
            n_non_members,
            n_train_split: dt.train_indices.len(),
            n_test_split: dt.test_indices.len(),
            n_excluded_by_balancing: n_excluded,
            duplicates,
            constant_features,
            any_kde_degenerate: any_degenerate,
            any_posterior_underflow: any_underflow,
        },
        method: MethodNotes {
            distance: if config.range_normalize {
                "gower-range-normalized".into()
            } else {
                "gower-unnormalized".into()
            },
            kde_kernel: "gaussian".into(),
            kde_boundary_correction: "none".into(),
        },
        ks_member_vs_non_member: ks,
        true_distribution,
        realistic,
        method1,
        heatmap,
        trajectory,
        comparison: None,
    };
    if report.realistic.is_some() && report.method1.is_some() {
        report.comparison = Some(compare_attacks(&report)?);
    }

    write_artifacts(config, &report, &artifacts)?;
    Ok(report)
}

fn realistic_row(
    entry: ThresholdAttack,
    config: &RunConfig,
    artifacts: &mut Artifacts,
    any_degenerate: &mut bool,
    any_underflow: &mut bool,
    risk_flagged: &mut bool,
) -> Result<RealisticThresholdRow, PipelineError> {
    let ThresholdAttack {
        percentile,
        tau,
        outcome,
    } = entry;
    match outcome {
        ThresholdOutcome::Skipped(reason) => Ok(RealisticThresholdRow {
            percentile,
            tau,
            skipped: Some(reason.to_string()),
            bandwidth_supposed_member: None,
            bandwidth_supposed_non_member: None,
            kde_degenerate: None,
            underflow_count: None,
            confusion: None,
            metrics: None,
            auc: None,
            tpr_at_fpr: None,
            max_posterior_increase: None,
            risk_flagged: false,
        }),
        ThresholdOutcome::Ran {
            run,
            max_posterior_increase,
        } => {
            let AttackRun {
                model,
                outcomes,
                underflow_count,
            } = run;
            let m = posterior_metrics(&outcomes, config)?;
            *any_degenerate |= model.any_degenerate_bandwidth();
            *any_underflow |= underflow_count > 0;
            *risk_flagged |= m.risk_flagged;
            let auc = m.curve.auc;
            let tag = pct_tag(percentile);
            artifacts
                .roc_files
                .push((format!("roc-realistic-p{tag}.csv"), m.curve));
            artifacts.outcome_files.push((
                format!("outcomes-realistic-p{tag}.csv"),
                outcomes,
                "realistic".into(),
                Some(percentile),
            ));
            Ok(RealisticThresholdRow {
                percentile,
                tau,
                skipped: None,
                bandwidth_supposed_member: Some(model.kde_member.bandwidth()),
                bandwidth_supposed_non_member: Some(model.kde_non_member.bandwidth()),
                kde_degenerate: Some(model.any_degenerate_bandwidth()),
                underflow_count: Some(underflow_count),
                confusion: Some(m.confusion),
                metrics: Some(m.scores),
                auc: Some(auc),
                tpr_at_fpr: Some(m.tpr_readout),
                max_posterior_increase: Some(max_posterior_increase),
                risk_flagged: m.risk_flagged,
            })
        }
    }
}

/// Evaluation window for the dumped density curves: the sample span padded
/// by three bandwidths on each side.
fn density_domain(run: &AttackRun) -> (f64, f64) {
    let samples = run
        .model
        .kde_member
        .samples()
        .iter()
        .chain(run.model.kde_non_member.samples());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &s in samples {
        lo = lo.min(s);
        hi = hi.max(s);
    }
    let h = run
        .model
        .kde_member
        .bandwidth()
        .max(run.model.kde_non_member.bandwidth());
    (lo - 3.0 * h, hi + 3.0 * h)
}

fn write_artifacts(
    config: &RunConfig,
    report: &EvalReport,
    artifacts: &Artifacts,
) -> Result<(), PipelineError> {
    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(|e| PipelineError::Write {
        path: dir.display().to_string(),
        source: e,
    })?;

    artifacts.distances.write_csv(dir.join("distances.csv"))?;
    if let Some(extra) = &config.distances_out {
        artifacts.distances.write_csv(extra)?;
    }

    for (name, outcomes, attack, percentile) in &artifacts.outcome_files {
        write_outcomes_csv(&dir.join(name), outcomes, attack, *percentile)?;
    }
    for (name, curve) in &artifacts.roc_files {
        write_roc_csv(&dir.join(name), curve)?;
    }
    for (name, curve) in &artifacts.density_files {
        write_density_csv(&dir.join(name), curve)?;
    }
    if let Some(trajectory) = &report.trajectory {
        write_trajectory_csv(&dir.join("trajectory.csv"), trajectory)?;
    }

    let path = dir.join("report.json");
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    let mut file = fs::File::create(&path).map_err(|e| PipelineError::Write {
        path: path.display().to_string(),
        source: e,
    })?;
    file.write_all(json.as_bytes()).map_err(|e| PipelineError::Write {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, PipelineError> {
    csv::Writer::from_path(path).map_err(|e| PipelineError::Write {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    })
}

fn finish_csv(path: &Path, mut w: csv::Writer<fs::File>) -> Result<(), PipelineError> {
    w.flush().map_err(|e| PipelineError::Write {
        path: path.display().to_string(),
        source: e,
    })
}

/// Outcome dump; `threshold_percentile` is empty for the attack without a
/// threshold sweep.
pub fn write_outcomes_csv(
    path: &Path,
    outcomes: &[AttackOutcome],
    attack: &str,
    percentile: Option<f64>,
) -> Result<(), PipelineError> {
    let mut w = csv_writer(path)?;
    let wrap = |e: csv::Error| PipelineError::Write {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    };
    w.write_record([
        "source_index",
        "distance",
        "posterior",
        "predicted",
        "truth",
        "attack",
        "threshold_percentile",
    ])
    .map_err(wrap)?;
    let pct = percentile.map(|p| format!("{p}")).unwrap_or_default();
    for o in outcomes {
        w.write_record([
            o.source_index.to_string(),
            o.distance.to_string(),
            o.posterior.to_string(),
            o.predicted.bit().to_string(),
            o.truth.bit().to_string(),
            attack.to_string(),
            pct.clone(),
        ])
        .map_err(wrap)?;
    }
    finish_csv(path, w)
}

pub fn write_roc_csv(path: &Path, curve: &RocCurve) -> Result<(), PipelineError> {
    let mut w = csv_writer(path)?;
    let wrap = |e: csv::Error| PipelineError::Write {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    };
    w.write_record(["fpr", "tpr", "threshold"]).map_err(wrap)?;
    for p in &curve.points {
        w.write_record([p.fpr.to_string(), p.tpr.to_string(), p.threshold.to_string()])
            .map_err(wrap)?;
    }
    finish_csv(path, w)
}

fn write_density_csv(path: &Path, curve: &[(f64, f64)]) -> Result<(), PipelineError> {
    let mut w = csv_writer(path)?;
    let wrap = |e: csv::Error| PipelineError::Write {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    };
    w.write_record(["x", "density"]).map_err(wrap)?;
    for (x, d) in curve {
        w.write_record([x.to_string(), d.to_string()]).map_err(wrap)?;
    }
    finish_csv(path, w)
}

fn write_trajectory_csv(path: &Path, rows: &[TrajectoryRow]) -> Result<(), PipelineError> {
    let mut w = csv_writer(path)?;
    let wrap = |e: csv::Error| PipelineError::Write {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    };
    w.write_record(["percentile", "tp", "fp"]).map_err(wrap)?;
    for r in rows {
        w.write_record([
            format!("{}", r.percentile),
            r.tp.to_string(),
            r.fp.to_string(),
        ])
        .map_err(wrap)?;
    }
    finish_csv(path, w)
}

/// Parse an outcomes CSV back into attack outcomes, for recomputing
/// metrics independently of the report.
pub fn read_outcomes_csv(path: &Path) -> Result<Vec<AttackOutcome>, PipelineError> {
    use crate::tabular::MembershipLabel;
    let wrap_io = |e: csv::Error| PipelineError::Write {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    };
    let bad = |msg: String| PipelineError::Config(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(wrap_io)?;
    let mut outcomes = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(wrap_io)?;
        let parse_f64 = |i: usize| -> Result<f64, PipelineError> {
            rec[i]
                .parse::<f64>()
                .map_err(|_| bad(format!("bad float {:?}", &rec[i])))
        };
        let parse_label = |i: usize| -> Result<MembershipLabel, PipelineError> {
            rec[i]
                .parse::<u8>()
                .ok()
                .and_then(MembershipLabel::from_bit)
                .ok_or_else(|| bad(format!("bad label {:?}", &rec[i])))
        };
        outcomes.push(AttackOutcome {
            source_index: rec[0]
                .parse()
                .map_err(|_| bad(format!("bad index {:?}", &rec[0])))?,
            distance: parse_f64(1)?,
            posterior: parse_f64(2)?,
            predicted: parse_label(3)?,
            truth: parse_label(4)?,
        });
    }
    Ok(outcomes)
}

/// Serialize a report exactly as `report.json` is written.
pub fn report_to_json(report: &EvalReport) -> Result<String, PipelineError> {
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    Ok(json)
}
