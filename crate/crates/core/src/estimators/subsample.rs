use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Dataset, Interval};
use crate::error::{Error, Result};
use crate::linalg::quantile_sorted;
use crate::rng::stream_rng;

/// Largest tolerated share of failed subsample runs.
pub const MAX_FAILED_SHARE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubsampleOptions {
    pub n_subsamples: usize,
    /// Subsample size; `⌊n^{4/5}⌋` when absent.
    pub size: Option<usize>,
    pub alpha_level: f64,
    pub seed: u64,
    /// Rescale quantiles around the full-sample estimate by `√(b/n)`.
    pub recentered: bool,
}

impl Default for SubsampleOptions {
    fn default() -> Self {
        SubsampleOptions {
            n_subsamples: 1000,
            size: None,
            alpha_level: 0.05,
            seed: 0,
            recentered: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleCi {
    pub interval: Interval,
    pub size: usize,
    pub succeeded: usize,
    pub failed: usize,
}

/// `⌊n^{4/5}⌋`.
pub fn default_subsample_size(n: usize) -> usize {
    // Guard against floating-point landing just below an exact integer.
    let b = (n as f64).powf(0.8);
    let r = b.round();
    if (b - r).abs() < 1e-9 {
        r as usize
    } else {
        b.floor() as usize
    }
}

/// Subsampling interval for `estimator`: the empirical `α/2` and `1 − α/2`
/// quantiles of the estimates on `N` subsamples of size `b` drawn without
/// replacement. Subsample `i` uses random stream `i` under `seed`, so the
/// result does not depend on thread count.
pub fn subsample_ci<F>(
    data: &Dataset,
    options: &SubsampleOptions,
    estimator: F,
) -> Result<SubsampleCi>
where
    F: Fn(&Dataset) -> Result<f64> + Sync,
{
    let n = data.n();
    let b = options.size.unwrap_or_else(|| default_subsample_size(n));
    if b < 2 || b >= n {
        return Err(Error::InvalidInput(format!(
            "subsample size {b} must lie in 2..{n}"
        )));
    }
    if options.n_subsamples == 0 {
        return Err(Error::InvalidInput("need at least one subsample".into()));
    }
    if !(options.alpha_level > 0.0 && options.alpha_level < 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha level {} outside (0, 1)",
            options.alpha_level
        )));
    }
    let results: Vec<Option<f64>> = (0..options.n_subsamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(options.seed, i as u64);
            let mut rows = index::sample(&mut rng, n, b).into_vec();
            rows.sort_unstable();
            estimator(&data.select_rows(&rows))
                .ok()
                .filter(|v| v.is_finite())
        })
        .collect();
    let mut estimates: Vec<f64> = results.iter().flatten().copied().collect();
    let failed = options.n_subsamples - estimates.len();
    if failed as f64 > MAX_FAILED_SHARE * options.n_subsamples as f64 || estimates.is_empty() {
        return Err(Error::SubsampleFailure {
            failed,
            total: options.n_subsamples,
        });
    }
    estimates.sort_by(f64::total_cmp);
    let lo = quantile_sorted(&estimates, options.alpha_level / 2.0);
    let hi = quantile_sorted(&estimates, 1.0 - options.alpha_level / 2.0);
    let interval = if options.recentered {
        let full = estimator(data)?;
        let shrink = (b as f64 / n as f64).sqrt();
        Interval {
            lower: full - shrink * (hi - full),
            upper: full - shrink * (lo - full),
        }
    } else {
        Interval {
            lower: lo,
            upper: hi,
        }
    };
    Ok(SubsampleCi {
        interval,
        size: b,
        succeeded: estimates.len(),
        failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Matrix, Vector};

    fn data(n: usize) -> Dataset {
        let y = Vector::from_fn(n, |i, _| ((i * 37) % 101) as f64 / 10.0);
        let d = Vector::from_fn(n, |i, _| (i as f64 * 0.7).sin());
        let z = Matrix::from_fn(n, 2, |i, j| ((i + 3 * j) as f64 * 0.3).cos());
        let w = Matrix::from_fn(n, 1, |i, _| (i as f64 * 1.1).sin());
        Dataset::new(y, d, z, w, Matrix::zeros(n, 0)).unwrap()
    }

    fn mean_y(d: &Dataset) -> Result<f64> {
        Ok(d.y.mean())
    }

    #[test]
    fn default_size_is_floor_of_n_to_four_fifths() {
        // Reference values: floor(n ** 0.8) in double precision, checked by hand for exact powers.
        for (n, b) in [
            (1500, 347),
            (2500, 522),
            (5000, 910),
            (100, 39),
            (32, 16),
            (243, 81),
        ] {
            assert_eq!(default_subsample_size(n), b, "n = {n}");
        }
    }

    #[test]
    fn endpoints_are_type7_quantiles_of_the_subsample_estimates() {
        let data = data(60);
        let opts = SubsampleOptions {
            n_subsamples: 37,
            size: Some(20),
            alpha_level: 0.1,
            seed: 4,
            recentered: false,
        };
        let ci = subsample_ci(&data, &opts, mean_y).unwrap();
        let mut est: Vec<f64> = (0..37)
            .map(|i| {
                let mut rng = stream_rng(4, i);
                let rows = index::sample(&mut rng, 60, 20).into_vec();
                rows.iter().map(|&r| data.y[r]).sum::<f64>() / 20.0
            })
            .collect();
        est.sort_by(f64::total_cmp);
        // h = (N − 1) p; interpolate between floor(h) and floor(h) + 1.
        let q = |p: f64| {
            let h = 36.0 * p;
            let lo = h.floor() as usize;
            est[lo] + (h - lo as f64) * (est[(lo + 1).min(36)] - est[lo])
        };
        assert!((ci.interval.lower - q(0.05)).abs() < 1e-12);
        assert!((ci.interval.upper - q(0.95)).abs() < 1e-12);
        assert_eq!((ci.size, ci.succeeded, ci.failed), (20, 37, 0));
    }

    #[test]
    fn same_seed_same_interval_under_any_pool() {
        let data = data(80);
        let opts = SubsampleOptions {
            n_subsamples: 200,
            seed: 17,
            ..SubsampleOptions::default()
        };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| subsample_ci(&data, &opts, mean_y).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.interval.lower.to_bits(), b.interval.lower.to_bits());
        assert_eq!(a.interval.upper.to_bits(), b.interval.upper.to_bits());
        let other = subsample_ci(&data, &SubsampleOptions { seed: 18, ..opts }, mean_y).unwrap();
        assert_ne!(other.interval, a.interval);
    }

    #[test]
    fn recentered_interval_shrinks_around_the_full_estimate() {
        let data = data(100);
        let raw = SubsampleOptions {
            n_subsamples: 50,
            size: Some(25),
            ..SubsampleOptions::default()
        };
        let plain = subsample_ci(&data, &raw, mean_y).unwrap().interval;
        let centered = subsample_ci(
            &data,
            &SubsampleOptions {
                recentered: true,
                ..raw
            },
            mean_y,
        )
        .unwrap()
        .interval;
        let full = data.y.mean();
        assert!((centered.lower - (full - 0.5 * (plain.upper - full))).abs() < 1e-12);
        assert!((centered.upper - (full - 0.5 * (plain.lower - full))).abs() < 1e-12);
    }

    #[test]
    fn too_many_failures_abort() {
        let data = data(60);
        let opts = SubsampleOptions {
            n_subsamples: 100,
            size: Some(20),
            ..SubsampleOptions::default()
        };
        // Fails whenever row 0 is drawn: probability 1/3 per subsample.
        let flaky = |d: &Dataset| {
            if d.y[0] == 0.0 {
                Err(Error::InvalidInput("row 0".into()))
            } else {
                Ok(d.y.mean())
            }
        };
        assert!(matches!(
            subsample_ci(&data, &opts, flaky),
            Err(Error::SubsampleFailure { total: 100, .. })
        ));
        let rare = |d: &Dataset| {
            if d.y[0] == 0.0 && d.y[1] == 3.7 {
                Err(Error::EmptySupport)
            } else {
                Ok(d.y.mean())
            }
        };
        let ci = subsample_ci(&data, &opts, rare).unwrap();
        assert!(ci.failed < 20 && ci.succeeded + ci.failed == 100);
    }

    #[test]
    fn invalid_sizes_are_rejected() {
        let data = data(30);
        for size in [1, 30, 31] {
            let opts = SubsampleOptions {
                size: Some(size),
                ..SubsampleOptions::default()
            };
            assert!(subsample_ci(&data, &opts, mean_y).is_err());
        }
    }
}
