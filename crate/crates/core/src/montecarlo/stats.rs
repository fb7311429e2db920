use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::McError;
use crate::integrate::Path;

/// A point estimate with a confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateWithCI {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub stderr: f64,
    pub level: f64,
}

impl EstimateWithCI {
    pub fn covers(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Two-sided standard normal quantile for the given confidence level.
pub fn normal_quantile(level: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    n.inverse_cdf(0.5 + level / 2.0)
}

/// Neumaier-compensated sum, evaluated in iteration order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_ci(successes: usize, n: usize, level: f64) -> EstimateWithCI {
    assert!(n >= 1 && successes <= n, "need 0 ≤ successes ≤ n, n ≥ 1");
    let z = normal_quantile(level);
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0).min(p) };
    let hi = if successes == n { 1.0 } else { (center + half).min(1.0).max(p) };
    EstimateWithCI {
        point: p,
        lo,
        hi,
        n,
        stderr: (p * (1.0 - p) / nf).sqrt(),
        level,
    }
}

/// Sample mean with a normal-approximation interval.
pub fn mean_ci(samples: &[f64], level: f64) -> EstimateWithCI {
    let n = samples.len();
    assert!(n >= 1, "empty sample");
    let nf = n as f64;
    let mean = compensated_sum(samples.iter().copied()) / nf;
    let var = if n > 1 {
        compensated_sum(samples.iter().map(|v| (v - mean) * (v - mean))) / (nf - 1.0)
    } else {
        0.0
    };
    let stderr = (var / nf).sqrt();
    let z = normal_quantile(level);
    EstimateWithCI {
        point: mean,
        lo: mean - z * stderr,
        hi: mean + z * stderr,
        n,
        stderr,
        level,
    }
}

/// Sample median with a distribution-free order-statistic interval. The
/// reported standard error is the interval half-width divided by `z`.
pub fn median_ci(samples: &[f64], level: f64) -> EstimateWithCI {
    let n = samples.len();
    assert!(n >= 1, "empty sample");
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let point = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    let z = normal_quantile(level);
    let nf = n as f64;
    let j = ((nf - z * nf.sqrt()) / 2.0).floor().max(0.0) as usize;
    let k = (((nf + z * nf.sqrt()) / 2.0).ceil() as usize).min(n - 1);
    let (lo, hi) = (v[j].min(point), v[k].max(point));
    EstimateWithCI {
        point,
        lo,
        hi,
        n,
        stderr: (hi - lo) / (2.0 * z),
        level,
    }
}

/// `max_t ‖p(t) − q(t)‖`. Paths on different grids are compared on the grid
/// with fewer points, the other path being linearly interpolated.
pub fn sup_error(p: &Path, q: &Path) -> Result<f64, McError> {
    let (a, b) = (p.last_time(), q.last_time());
    if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
        return Err(McError::IncompatibleHorizons { a, b });
    }
    if p.dim() != q.dim() {
        return Err(McError::Precondition(format!(
            "paths have dimensions {} and {}",
            p.dim(),
            q.dim()
        )));
    }
    let norm = |x: &[f64], y: &[f64]| {
        x.iter()
            .zip(y)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt()
    };
    if p.times() == q.times() {
        return Ok(p
            .states()
            .zip(q.states())
            .map(|(x, y)| norm(x, y))
            .fold(0.0, f64::max));
    }
    let (coarse, fine) = if p.len() <= q.len() { (p, q) } else { (q, p) };
    let mut buf = vec![0.0; p.dim()];
    let mut worst = 0.0f64;
    for (k, &t) in coarse.times().iter().enumerate() {
        fine.interpolate(t, &mut buf);
        worst = worst.max(norm(coarse.state(k), &buf));
    }
    Ok(worst)
}

/// Two-sided Kolmogorov–Smirnov distance between the empirical CDF of
/// `samples` and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}
