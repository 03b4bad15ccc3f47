//! Convergence diagnostics: split R-hat and autocorrelation-based ESS.

use statrs::distribution::{ContinuousCDF, Normal};

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Halves every chain; an odd middle draw is dropped.
fn split<'a>(chains: &[&'a [f64]]) -> Vec<&'a [f64]> {
    let mut out = Vec::with_capacity(chains.len() * 2);
    for c in chains {
        let half = c.len() / 2;
        out.push(&c[..half]);
        out.push(&c[c.len() - half..]);
    }
    out
}

fn check_shape(chains: &[&[f64]]) {
    assert!(chains.len() >= 2, "need at least two chains");
    let n = chains[0].len();
    assert!(n >= 4, "need at least four draws per chain");
    assert!(
        chains.iter().all(|c| c.len() == n),
        "chains must have equal length"
    );
}

/// Split-chain potential scale reduction factor.
///
/// Chains with zero within-chain variance give `+inf`.
pub fn rhat(chains: &[&[f64]]) -> f64 {
    check_shape(chains);
    let halves = split(chains);
    let m = halves.len() as f64;
    let n = halves[0].len() as f64;
    let means: Vec<f64> = halves.iter().map(|c| mean(c)).collect();
    let w = halves.iter().map(|c| var(c)).sum::<f64>() / m;
    let b = n * var(&means);
    if !(w > 0.0) {
        return f64::INFINITY;
    }
    let var_plus = (n - 1.0) / n * w + b / n;
    (var_plus / w).sqrt()
}

/// Effective sample size of the split chains, summing autocorrelation
/// pairs until the first negative pair sum (Geyer's initial positive
/// sequence, made monotone). Capped at ten times the total draw count.
pub fn ess(chains: &[&[f64]]) -> f64 {
    check_shape(chains);
    let halves = split(chains);
    let m = halves.len();
    let n = halves[0].len();
    let total = (m * n) as f64;
    let cap = 10.0 * (chains.iter().map(|c| c.len()).sum::<usize>()) as f64;

    let means: Vec<f64> = halves.iter().map(|c| mean(c)).collect();
    let centered: Vec<Vec<f64>> = halves
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|v| v - mu).collect())
        .collect();
    // Biased (1/n) autocovariance of each half-chain at lag t.
    let acov = |t: usize| -> f64 {
        centered
            .iter()
            .map(|c| {
                c[..n - t]
                    .iter()
                    .zip(&c[t..])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    / n as f64
            })
            .sum::<f64>()
            / m as f64
    };
    let mean_var = acov(0) * n as f64 / (n as f64 - 1.0);
    let var_plus = mean_var * (n as f64 - 1.0) / n as f64 + var(&means);
    if !(var_plus > 0.0) {
        return total;
    }
    let rho = |t: usize| 1.0 - (mean_var - acov(t)) / var_plus;

    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut t = 0;
    while t + 1 < n {
        let pair = if t == 0 {
            1.0 + rho(1)
        } else {
            rho(t) + rho(t + 1)
        };
        if pair < 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
        t += 2;
    }
    if tau <= 0.0 {
        return cap;
    }
    (total / tau).min(cap)
}

/// ESS of rank-normalized draws.
pub fn bulk_ess(chains: &[&[f64]]) -> f64 {
    check_shape(chains);
    let normalized = rank_normalize(chains);
    let refs: Vec<&[f64]> = normalized.iter().map(Vec::as_slice).collect();
    ess(&refs)
}

fn rank_normalize(chains: &[&[f64]]) -> Vec<Vec<f64>> {
    let mut pooled: Vec<(f64, usize, usize)> = chains
        .iter()
        .enumerate()
        .flat_map(|(c, xs)| xs.iter().enumerate().map(move |(i, &v)| (v, c, i)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let s = pooled.len();
    let std = Normal::standard();
    let mut out: Vec<Vec<f64>> = chains.iter().map(|c| vec![0.0; c.len()]).collect();
    let mut i = 0;
    while i < s {
        let mut j = i;
        while j + 1 < s && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        // Average rank (1-based) for ties.
        let r = (i + j) as f64 / 2.0 + 1.0;
        let z = std.inverse_cdf((r - 0.375) / (s as f64 + 0.25));
        for &(_, c, k) in &pooled[i..=j] {
            out[c][k] = z;
        }
        i = j + 1;
    }
    out
}
