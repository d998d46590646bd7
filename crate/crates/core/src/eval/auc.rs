use alloc::vec::Vec;

use crate::{Error, Result};

/// Area under the ROC curve: the probability that a random positive scores
/// above a random negative, ties counting one half. Computed from ranks in
/// `O((P + N) log(P + N))`.
pub fn auc(positives: &[f64], negatives: &[f64]) -> Result<f64> {
    check(positives, negatives)?;
    let mut all: Vec<(f64, bool)> = positives
        .iter()
        .map(|&s| (s, true))
        .chain(negatives.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Sum of positive ranks, average rank within each tie group.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i + 1;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let mid = (i + 1 + j) as f64 / 2.0;
        let pos = all[i..j].iter().filter(|e| e.1).count();
        rank_sum += mid * pos as f64;
        i = j;
    }
    let p = positives.len() as f64;
    let n = negatives.len() as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Quadratic pairwise count; the reference for [`auc`].
pub fn auc_brute_force(positives: &[f64], negatives: &[f64]) -> Result<f64> {
    check(positives, negatives)?;
    let mut wins = 0.0;
    for &p in positives {
        for &n in negatives {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (positives.len() as f64 * negatives.len() as f64))
}

fn check(positives: &[f64], negatives: &[f64]) -> Result<()> {
    if positives.is_empty() {
        return Err(Error::EmptyScores("positive"));
    }
    if negatives.is_empty() {
        return Err(Error::EmptyScores("negative"));
    }
    if positives.iter().chain(negatives).any(|s| s.is_nan()) {
        return Err(Error::NonFinite("auc"));
    }
    Ok(())
}
