//! Small numeric helpers shared across modules.
//!
//! Sums that feed user-visible results go through [`pairwise_sum`] so that
//! totals are bit-stable: the reduction tree depends only on the slice length,
//! never on chunking or thread count, and rounding error grows like O(log n)
//! instead of O(n).

/// Below this length a plain left-to-right loop is faster than recursing and
/// still contributes bounded rounding error.
const PAIRWISE_LEAF: usize = 32;

/// Pairwise (cascade) summation with a fixed reduction tree.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_LEAF {
        return xs.iter().sum();
    }
    let (lo, hi) = xs.split_at(xs.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}

pub fn mean(xs: &[f64]) -> f64 {
    debug_assert!(!xs.is_empty());
    pairwise_sum(xs) / xs.len() as f64
}

/// Population variance (divides by n, not n-1).
pub fn population_variance(xs: &[f64]) -> f64 {
    debug_assert!(!xs.is_empty());
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / xs.len() as f64
}

/// Linearly interpolated quantile of a sorted slice (the common "type 7"
/// definition: index h = (n-1)q).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&q));
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Sort a copy of `xs` ascending. NaN-free inputs are the caller's contract;
/// total_cmp keeps the sort deterministic regardless.
pub fn sorted_copy(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}
