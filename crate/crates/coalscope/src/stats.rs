//! Statistical utilities for the verification runners: two-sample and
//! one-sample Kolmogorov-Smirnov tests, sample summaries, and log-log
//! slope fits.

use serde::Serialize;

use crate::error::{CoalError, Result};

/// Two-sample KS result.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample KS test. Exact p-value by path counting when `m*n` is
/// small; the asymptotic Kolmogorov tail with the small-sample
/// correction otherwise.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(CoalError::argument("ks_two_sample requires nonempty samples"));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.total_cmp(q));
    ys.sort_by(|p, q| p.total_cmp(q));
    let (m, n) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < m && j < n {
        let t = xs[i].min(ys[j]);
        while i < m && xs[i] <= t {
            i += 1;
        }
        while j < n && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / m as f64 - j as f64 / n as f64).abs());
    }
    let p = if m * n <= 10_000 {
        ks_exact_p(m, n, d)
    } else {
        ks_asymptotic_p(m, n, d)
    };
    Ok(KsResult {
        statistic: d,
        p_value: p,
    })
}

/// Exact P(D >= d) for the two-sample statistic: fraction of
/// interleavings whose lattice path strays at least `d` from the
/// diagonal, by dynamic programming over (i, j) with stepwise
/// normalization.
fn ks_exact_p(m: usize, n: usize, d: f64) -> f64 {
    // paths counted with binomial weights; cell (i,j) is reachable only
    // while |i/m - j/n| < d (strictly, so ties at d count as rejection)
    let tol = 1e-12;
    let mut cur = vec![0.0f64; n + 1];
    cur[0] = 1.0;
    for j in 1..=n {
        cur[j] = if j as f64 / n as f64 - d < -tol { cur[j - 1] } else { 0.0 };
    }
    let mut ln_total = 0.0; // log of total path count C(m+n, n), built incrementally
    for i in 1..=m {
        let mut next = vec![0.0f64; n + 1];
        for j in 0..=n {
            let inside = (i as f64 / m as f64 - j as f64 / n as f64).abs() - d < -tol;
            if inside {
                next[j] = cur[j] + if j > 0 { next[j - 1] } else { 0.0 };
            }
        }
        // normalize to keep magnitudes bounded; track the factor
        let scale: f64 = next.iter().cloned().fold(f64::MIN, f64::max);
        if scale > 0.0 {
            for v in &mut next {
                *v /= scale;
            }
            ln_total += scale.ln();
        }
        cur = next;
    }
    // probability of staying strictly inside the band
    let ln_inside = if cur[n] > 0.0 {
        ln_total + cur[n].ln()
    } else {
        f64::NEG_INFINITY
    };
    let ln_binom = ln_factorial(m + n) - ln_factorial(m) - ln_factorial(n);
    let p_inside = if ln_inside.is_finite() {
        (ln_inside - ln_binom).exp()
    } else {
        0.0
    };
    (1.0 - p_inside).clamp(0.0, 1.0)
}

fn ln_factorial(k: usize) -> f64 {
    statrs::function::gamma::ln_gamma(k as f64 + 1.0)
}

/// Asymptotic two-sample p-value (Kolmogorov tail with the
/// `0.12 + 0.11/sqrt(ne)` finite-sample correction).
fn ks_asymptotic_p(m: usize, n: usize, d: f64) -> f64 {
    let ne = (m as f64 * n as f64) / (m as f64 + n as f64);
    let sq = ne.sqrt();
    kolmogorov_q((sq + 0.12 + 0.11 / sq) * d)
}

/// Kolmogorov tail `Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} e^{-2 j^2 lambda^2}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test against a CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<KsResult> {
    if sample.is_empty() {
        return Err(CoalError::argument("ks_one_sample requires a nonempty sample"));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(|p, q| p.total_cmp(q));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    let sq = n.sqrt();
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_q((sq + 0.12 + 0.11 / sq) * d),
    })
}

/// Moment-and-quantile summary of one sample.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub q05: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q95: f64,
}

impl Summary {
    pub fn from(sample: &[f64]) -> Result<Summary> {
        if sample.is_empty() {
            return Err(CoalError::argument("summary of an empty sample"));
        }
        let n = sample.len();
        let mean = sample.iter().sum::<f64>() / n as f64;
        let var = sample.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
            / (n as f64 - 1.0).max(1.0);
        let mut xs = sample.to_vec();
        xs.sort_by(|p, q| p.total_cmp(q));
        let q = |f: f64| xs[((n as f64 - 1.0) * f).round() as usize];
        Ok(Summary {
            count: n,
            mean,
            sd: var.sqrt(),
            q05: q(0.05),
            q25: q(0.25),
            median: q(0.50),
            q75: q(0.75),
            q95: q(0.95),
        })
    }

    /// Monte Carlo standard error of the mean.
    pub fn se(&self) -> f64 {
        self.sd / (self.count as f64).sqrt()
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(CoalError::argument("loglog_slope requires >= 2 paired points"));
    }
    if xs.iter().chain(ys).any(|&v| v <= 0.0) {
        return Err(CoalError::argument("loglog_slope requires positive data"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
