//! Univariate Gaussian kernel density estimation over distance samples.
//!
//! Density at a point is the exact naive sum
//! `(1 / (n h)) * sum_i phi((x - x_i) / h)` with `phi` the standard normal
//! density, accumulated in stored-sample order. Bandwidth comes from
//! Scott's rule (`sigma * n^(-1/5)`) or an explicit value.

use thiserror::Error;

/// Sample standard deviations below this are treated as degenerate and the
/// bandwidth is floored here. Happens when all distances coincide, e.g.
/// when the synthetic set memorized the training data and every
/// nearest-neighbour distance is zero; the resulting delta-like spike is
/// the honest density for that situation.
pub const BANDWIDTH_FLOOR: f64 = 1e-9;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Error)]
pub enum KdeError {
    #[error("kde: need at least 2 samples for Scott's rule, got {0}")]
    TooFewForBandwidth(usize),
    #[error("kde: samples must be non-empty")]
    EmptySamples,
    #[error("kde: bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("kde: samples must be finite")]
    NonFiniteSample,
}

/// Bandwidth selection for [`kde_fit`].
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthSpec {
    Scott,
    Fixed(f64),
}

/// Scott's-rule bandwidth: sample standard deviation (n-1 denominator)
/// times `n^(-1/5)`. Returns the bandwidth and whether the degeneracy
/// floor kicked in.
pub fn scott_bandwidth(samples: &[f64]) -> Result<(f64, bool), KdeError> {
    if samples.len() < 2 {
        return Err(KdeError::TooFewForBandwidth(samples.len()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let variance = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sigma = variance.sqrt();
    if sigma < BANDWIDTH_FLOOR {
        Ok((BANDWIDTH_FLOOR, true))
    } else {
        Ok((sigma * n.powf(-0.2), false))
    }
}

/// Fitted estimator: the samples plus a resolved bandwidth.
#[derive(Clone, Debug)]
pub struct KdeModel {
    samples: Vec<f64>,
    bandwidth: f64,
    degenerate: bool,
}

impl KdeModel {
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// True when Scott's rule hit the [`BANDWIDTH_FLOOR`].
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Density estimate at `x`. Pure; far-tail terms underflow to zero.
    pub fn eval(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let mut sum = 0.0;
        for &xi in &self.samples {
            let t = (x - xi) / h;
            sum += (-0.5 * t * t).exp();
        }
        sum * INV_SQRT_2PI / (self.samples.len() as f64 * h)
    }

    /// `(x, density)` pairs on an even grid, for plotting or dumping.
    pub fn density_curve(&self, lo: f64, hi: f64, points: usize) -> Vec<(f64, f64)> {
        assert!(points >= 2, "need at least two grid points");
        let step = (hi - lo) / (points - 1) as f64;
        (0..points)
            .map(|i| {
                let x = lo + step * i as f64;
                (x, self.eval(x))
            })
            .collect()
    }
}

/// Fit a model: store the samples and resolve the bandwidth.
pub fn kde_fit(samples: &[f64], bandwidth: &BandwidthSpec) -> Result<KdeModel, KdeError> {
    if samples.is_empty() {
        return Err(KdeError::EmptySamples);
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(KdeError::NonFiniteSample);
    }
    let (h, degenerate) = match bandwidth {
        BandwidthSpec::Scott => scott_bandwidth(samples)?,
        BandwidthSpec::Fixed(h) => {
            if *h > 0.0 {
                (*h, false)
            } else {
                return Err(KdeError::NonPositiveBandwidth(*h));
            }
        }
    };
    Ok(KdeModel {
        samples: samples.to_vec(),
        bandwidth: h,
        degenerate,
    })
}

/// Density estimate at `x` for a fitted model.
pub fn kde_eval(model: &KdeModel, x: f64) -> f64 {
    model.eval(x)
}
