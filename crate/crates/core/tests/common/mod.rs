#![allow(dead_code)]

use std::collections::BTreeMap;

use gwsfs::sim::{MutationTree, ROOT};

/// Spectrum computed one individual at a time: every live individual walks
/// from its genotype to the root and credits each mutation it passes.
pub fn ancestor_walk_sfs(tree: &MutationTree) -> BTreeMap<u64, u64> {
    let mut carriers = vec![0u64; tree.len()];
    for node in 0..tree.len() as u32 {
        for _ in 0..tree.live_count(node) {
            let mut cur = node;
            while cur != ROOT {
                carriers[cur as usize] += 1;
                cur = tree.parent(cur).expect("non-root node has a parent");
            }
        }
    }
    let mut hist = BTreeMap::new();
    for c in carriers.into_iter().filter(|&c| c > 0) {
        *hist.entry(c).or_insert(0) += 1;
    }
    hist
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the KS statistic `d` for `n` samples, with
/// Stephens' small-sample correction.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let x = (sn + 0.12 + 0.11 / sn) * d;
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn median(values: &[f64]) -> f64 {
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// `sum_{k>=0} p^k / ((j+k)(j+k+1))` summed term by term.
pub fn pair_series(p: f64, j: u64, terms: usize) -> f64 {
    let j = j as f64;
    let mut pk = 1.0;
    let mut total = 0.0;
    for k in 0..terms {
        let d = j + k as f64;
        total += pk / (d * (d + 1.0));
        pk *= p;
    }
    total
}
