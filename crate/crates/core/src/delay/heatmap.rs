use super::{DelayEstimate, DelayMethod};
use crate::matchers::MatchingMatrix;
use crate::SEQUENCE_LEN;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HeatmapOptions {
    /// Rank diagonals by votes divided by diagonal length instead of raw votes.
    pub normalize_by_length: bool,
}

/// Votes per diagonal `k = i - j`, indexed by `k + 19`. Each row votes for
/// the diagonal holding its best column (first on ties) after polarity
/// normalization.
pub fn diagonal_votes(matrix: &MatchingMatrix) -> [usize; 2 * SEQUENCE_LEN - 1] {
    let n = SEQUENCE_LEN;
    let scores = matrix.normalized();
    let mut votes = [0usize; 2 * SEQUENCE_LEN - 1];
    for (i, row) in scores.chunks_exact(n).enumerate() {
        let mut best = 0;
        for (j, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = j;
            }
        }
        votes[i + n - 1 - best] += 1;
    }
    votes
}

pub fn heatmap_estimate(matrix: &MatchingMatrix) -> DelayEstimate {
    heatmap_estimate_with(matrix, HeatmapOptions::default())
}

/// Picks the most-voted diagonal; ties go to the smallest |k|, then to the
/// negative k.
pub fn heatmap_estimate_with(matrix: &MatchingMatrix, options: HeatmapOptions) -> DelayEstimate {
    let n = SEQUENCE_LEN as i32;
    let votes = diagonal_votes(matrix);
    let len = |k: i32| (n - k.abs()) as usize;
    // a beats b when its (possibly length-normalized) vote count is larger.
    let beats = |a: (i32, usize), b: (i32, usize)| -> std::cmp::Ordering {
        if options.normalize_by_length {
            (a.1 * len(b.0)).cmp(&(b.1 * len(a.0)))
        } else {
            a.1.cmp(&b.1)
        }
    };
    let mut best = (0i32, votes[(n - 1) as usize]);
    for k in 1..n {
        for cand in [-k, k] {
            let c = (cand, votes[(cand + n - 1) as usize]);
            if beats(c, best).is_gt() {
                best = c;
            }
        }
    }
    DelayEstimate {
        delay: best.0,
        confidence: best.1 as f64 / SEQUENCE_LEN as f64,
        method: DelayMethod::HeatMap,
    }
}
