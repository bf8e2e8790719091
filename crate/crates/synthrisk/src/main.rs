//! Thin CLI over the library pipeline.
//!
//! Exit codes: 0 clean, 2 when the low-FPR risk rule fired, 1 on error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use synthrisk::kde::BandwidthSpec;
use synthrisk::report::{run_pipeline, AttackSelection, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "synthrisk",
    version,
    about = "Membership disclosure risk assessment for tabular synthetic data",
    after_help = "Exit codes: 0 = clean, 2 = risk rule fired, 1 = error."
)]
struct Cli {
    /// Real training table (CSV with header row)
    #[arg(long, value_name = "FILE")]
    train: Option<PathBuf>,

    /// Unseen holdout table from the same population
    #[arg(long, value_name = "FILE")]
    unseen: Option<PathBuf>,

    /// Synthetic table produced from the training data
    #[arg(long, value_name = "FILE")]
    synthetic: Option<PathBuf>,

    /// Schema file (`name: numeric|categorical [min max]` per line);
    /// kinds are inferred when omitted
    #[arg(long, value_name = "FILE")]
    schema: Option<PathBuf>,

    /// Which attacks to run
    #[arg(long, value_enum, default_value = "all")]
    attack: AttackChoice,

    /// Percentiles resolving the threshold grid
    #[arg(long, value_delimiter = ',', default_values_t = vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0])]
    percentiles: Vec<f64>,

    /// Fraction of distances used for KDE fitting
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,

    /// `scott` or `fixed:<value>`
    #[arg(long, default_value = "scott", value_parser = parse_bandwidth)]
    bandwidth: BandwidthSpec,

    /// Posterior threshold for calling a record a member
    #[arg(long, default_value_t = 0.5)]
    decision_threshold: f64,

    /// Prior membership probability
    #[arg(long, default_value_t = 0.5)]
    prior: f64,

    /// FPR targets for the worst-case readout
    #[arg(long, value_delimiter = ',', default_values_t = vec![1e-1, 1e-2, 1e-3])]
    fpr_targets: Vec<f64>,

    /// Flag when TPR exceeds this multiple of the target FPR
    #[arg(long, default_value_t = 20.0)]
    risk_multiplier: f64,

    /// RNG seed; required so runs are reproducible
    #[arg(long)]
    seed: u64,

    /// Subsample the larger input side so members and non-members are
    /// equally represented
    #[arg(long)]
    balance: bool,

    /// Balance the training split as well as the test split
    #[arg(long)]
    balanced_train: bool,

    /// Use raw absolute differences for numeric features instead of
    /// range-normalized ones
    #[arg(long)]
    no_range_normalize: bool,

    /// Reuse a previously dumped distance table instead of recomputing
    #[arg(long, value_name = "FILE")]
    distances_in: Option<PathBuf>,

    /// Write an extra copy of the distance table here
    #[arg(long, value_name = "FILE")]
    distances_out: Option<PathBuf>,

    /// Output directory for report.json and CSV sidecars
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum AttackChoice {
    All,
    TrueDist,
    Realistic,
    Method1,
}

impl From<AttackChoice> for AttackSelection {
    fn from(choice: AttackChoice) -> Self {
        match choice {
            AttackChoice::All => AttackSelection::All,
            AttackChoice::TrueDist => AttackSelection::TrueDist,
            AttackChoice::Realistic => AttackSelection::Realistic,
            AttackChoice::Method1 => AttackSelection::Method1,
        }
    }
}

fn parse_bandwidth(s: &str) -> Result<BandwidthSpec, String> {
    if s == "scott" {
        return Ok(BandwidthSpec::Scott);
    }
    if let Some(v) = s.strip_prefix("fixed:") {
        let h: f64 = v.parse().map_err(|_| format!("bad bandwidth value {v:?}"))?;
        if h <= 0.0 {
            return Err(format!("bandwidth {h} must be positive"));
        }
        return Ok(BandwidthSpec::Fixed(h));
    }
    Err(format!("expected `scott` or `fixed:<value>`, got {s:?}"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // clap's default exit code (2) is reserved for the risk signal
            let _ = e.print();
            return ExitCode::from(1);
        }
    };

    let config = RunConfig {
        train_path: cli.train,
        unseen_path: cli.unseen,
        synthetic_path: cli.synthetic,
        schema_path: cli.schema,
        attack: cli.attack.into(),
        percentiles: cli.percentiles,
        train_fraction: cli.train_fraction,
        bandwidth: cli.bandwidth,
        decision_threshold: cli.decision_threshold,
        prior_member: cli.prior,
        fpr_targets: cli.fpr_targets,
        risk_multiplier: cli.risk_multiplier,
        seed: cli.seed,
        balance_attack: cli.balance,
        balanced_train: cli.balanced_train,
        range_normalize: !cli.no_range_normalize,
        distances_in: cli.distances_in,
        distances_out: cli.distances_out,
        out_dir: cli.out,
    };

    match run_pipeline(&config) {
        Ok(report) => {
            println!(
                "report written to {}",
                config.out_dir.join("report.json").display()
            );
            if let Some(section) = &report.true_distribution {
                println!(
                    "true distribution attack: accuracy {:.4}, F1 {:.4}, AUC {:.4}",
                    section.metrics.accuracy, section.metrics.f1, section.auc
                );
            }
            if let Some(ks) = &report.ks_member_vs_non_member {
                println!(
                    "member vs non-member KS: statistic {:.4}, p-value {:.4e}",
                    ks.statistic, ks.p_value
                );
            }
            if report.risk_flagged {
                println!("risk rule fired: TPR exceeded the configured multiple of a low FPR");
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
