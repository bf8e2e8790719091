//! Kernel density estimation: Scott's rule, explicit bandwidths, and
//! density curves.
//!
//! ```bash
//! cargo run --example kde_bandwidth
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synthrisk::kde::{kde_fit, scott_bandwidth, BandwidthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let samples: Vec<f64> = (0..500)
        .map(|_| {
            // bimodal: two clusters of distances
            if rng.random_bool(0.6) {
                rng.random_range(0.02..0.10)
            } else {
                rng.random_range(0.25..0.45)
            }
        })
        .collect();

    let (h, degenerate) = scott_bandwidth(&samples)?;
    println!("Scott bandwidth for n={}: h = {h:.6} (degenerate: {degenerate})", samples.len());

    let scott = kde_fit(&samples, &BandwidthSpec::Scott)?;
    let narrow = kde_fit(&samples, &BandwidthSpec::Fixed(0.005))?;

    println!("\n{:>6} {:>12} {:>12}", "x", "scott", "fixed.005");
    for i in 0..=10 {
        let x = i as f64 * 0.05;
        println!("{x:>6.2} {:>12.4} {:>12.4}", scott.eval(x), narrow.eval(x));
    }

    // Density curve dump, the same series the pipeline writes to
    // density-*.csv.
    let curve = scott.density_curve(0.0, 0.5, 6);
    println!("\ndensity_curve(0, 0.5, 6):");
    for (x, d) in curve {
        println!("  ({x:.1}, {d:.4})");
    }

    // Constant samples: the bandwidth floor keeps the model defined.
    let constant = kde_fit(&vec![0.0; 100], &BandwidthSpec::Scott)?;
    println!(
        "\nall-zero distances: h = {:e}, degenerate = {}",
        constant.bandwidth(),
        constant.is_degenerate()
    );

    Ok(())
}
