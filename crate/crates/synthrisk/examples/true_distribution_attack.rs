//! The label-informed posterior attack, start to finish: ingest, distance,
//! split, fit, score.
//!
//! ```bash
//! cargo run --example true_distribution_attack
//! ```

use synthrisk::attacks::true_distribution_attack;
use synthrisk::distance::{nearest_neighbor_distances, split_distances, GowerContext};
use synthrisk::kde::BandwidthSpec;
use synthrisk::metrics::{accuracy_f1, confusion, ks_two_sample, roc_curve};
use synthrisk::tabular::{build_attack_dataset, load_table, MembershipLabel, SchemaSource};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy");
    let train = load_table(format!("{data}/r.csv"), &SchemaSource::Infer)?;
    let unseen = load_table(format!("{data}/u.csv"), &SchemaSource::Infer)?;
    let synth = load_table(format!("{data}/s.csv"), &SchemaSource::Infer)?;

    let attack = build_attack_dataset(&train, &unseen, true, 42)?;
    let ctx = GowerContext::from_tables(&[&attack.table, &synth], true)?;
    let raw = nearest_neighbor_distances(&attack, &synth, &ctx)?;
    let dt = split_distances(&raw, 0.7, false, 43)?;

    // Are the two classes even distinguishable? The KS test on the
    // training distances answers before any model is fit.
    let members = dt.train_distances(MembershipLabel::Member);
    let non_members = dt.train_distances(MembershipLabel::NonMember);
    let ks = ks_two_sample(&members, &non_members)?;
    println!("KS statistic {:.4}, p-value {:.3e}", ks.statistic, ks.p_value);

    let run = true_distribution_attack(&dt, &BandwidthSpec::Scott, 0.5, 0.5)?;
    println!(
        "bandwidths: member {:.5}, non-member {:.5}",
        run.model.kde_member.bandwidth(),
        run.model.kde_non_member.bandwidth()
    );

    let cm = confusion(&run.outcomes)?;
    let scores = accuracy_f1(&cm)?;
    println!(
        "test set: {} records | tp={} fp={} tn={} fn={}",
        run.outcomes.len(),
        cm.tp,
        cm.fp,
        cm.tn,
        cm.fn_,
    );
    println!(
        "accuracy {:.4}  precision {:.4}  recall {:.4}  F1 {:.4}",
        scores.accuracy, scores.precision, scores.recall, scores.f1
    );

    let posteriors: Vec<f64> = run.outcomes.iter().map(|o| o.posterior).collect();
    let truths: Vec<_> = run.outcomes.iter().map(|o| o.truth).collect();
    let roc = roc_curve(&posteriors, &truths)?;
    println!("AUC {:.4}", roc.auc);

    println!("\nsample scored records (distance -> membership probability):");
    for o in run.outcomes.iter().take(8) {
        println!(
            "  d={:.4}  P(member|d)={:.3}  predicted={}  truth={}",
            o.distance,
            o.posterior,
            o.predicted.bit(),
            o.truth.bit()
        );
    }

    Ok(())
}
