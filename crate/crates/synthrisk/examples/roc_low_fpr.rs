//! Why average metrics are not enough: a near-chance classifier can still
//! leak badly at low false-positive rates.
//!
//! ```bash
//! cargo run --example roc_low_fpr
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synthrisk::metrics::{roc_curve, tpr_at_fpr};
use synthrisk::tabular::MembershipLabel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 100_000;

    // Most members are indistinguishable from non-members, but one member
    // in fifty gets a confidently high score: a memorized subpopulation.
    let mut scores = Vec::with_capacity(2 * n);
    let mut truths = Vec::with_capacity(2 * n);
    for i in 0..n {
        let score = if i % 50 == 0 {
            rng.random_range(0.95..1.0)
        } else {
            rng.random_range(0.0..0.9)
        };
        scores.push(score);
        truths.push(MembershipLabel::Member);
    }
    for _ in 0..n {
        scores.push(rng.random_range(0.0..0.9));
        truths.push(MembershipLabel::NonMember);
    }

    let curve = roc_curve(&scores, &truths)?;
    println!("AUC = {:.4} -- looks harmless on average", curve.auc);

    let readout = tpr_at_fpr(&curve, &[1e-1, 1e-2, 1e-3, 1e-4], 20.0)?;
    println!(
        "\n{:>8} {:>10} {:>12} {:>10} {:>8}",
        "FPR", "TPR", "risk ratio", "sample ok", "flagged"
    );
    for r in &readout {
        println!(
            "{:>8.0e} {:>10.4} {:>12.1} {:>10} {:>8}",
            r.target_fpr, r.tpr, r.risk_ratio, r.sufficient_sample, r.flagged
        );
    }

    println!("\nthe t = 20 rule fires once TPR exceeds 20x the FPR target:");
    println!("worst-case leakage that accuracy and AUC both hide.");

    Ok(())
}
