//! Block-matrix machinery behind the A-criterion bound: direct-sum
//! candidate matrices, the closed-form trace of the centered inverse,
//! partition enumeration, and the exhaustive minimum over partitions.

use nalgebra::DMatrix;

use crate::certify::n0_cubic;
use crate::{Error, Result};

/// Block sizes (r_1, ..., r_m) with sum K, kept in descending canonical
/// order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BlockPartition {
    pub k: usize,
    pub sizes: Vec<usize>,
}

impl BlockPartition {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.iter().any(|&r| r == 0) {
            return Err(Error::InvalidBlockMatrix(
                "block sizes must be positive".into(),
            ));
        }
        let k = sizes.iter().sum();
        let mut sizes = sizes;
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self { k, sizes })
    }

    /// At most two distinct sizes, and those sizes contiguous integers.
    pub fn has_contiguous_sizes(&self) -> bool {
        let max = self.sizes[0];
        let min = *self.sizes.last().unwrap();
        max - min <= 1
    }
}

/// Realized candidate matrix: direct sum of (N-3)I + 4J blocks, minus J.
/// Diagonal N, within-block off-diagonals 3, cross-block -1.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    pub n: usize,
    pub partition: BlockPartition,
    pub matrix: DMatrix<f64>,
}

fn check_n(n: usize) -> Result<()> {
    if n % 4 != 3 || n < 4 {
        return Err(Error::InvalidBlockMatrix(format!(
            "N must be 3 (mod 4) and at least 4, got {n}"
        )));
    }
    Ok(())
}

pub fn block_matrix(n: usize, partition: &BlockPartition) -> Result<BlockMatrix> {
    check_n(n)?;
    let k = partition.k;
    let mut block_of = vec![0usize; k];
    let mut idx = 0;
    for (b, &r) in partition.sizes.iter().enumerate() {
        for _ in 0..r {
            block_of[idx] = b;
            idx += 1;
        }
    }
    let matrix = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            n as f64
        } else if block_of[i] == block_of[j] {
            3.0
        } else {
            -1.0
        }
    });
    Ok(BlockMatrix {
        n,
        partition: partition.clone(),
        matrix,
    })
}

/// Which closed form of the centered-inverse trace to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormula {
    First,
    Second,
}

/// Positive definiteness of B - J/N reduces to positivity of the rank-one
/// update denominator: each direct-sum block is positive definite, so pd
/// holds iff (1 + 1/N)^{-1} > sum of r_i / L_i. The margin
/// N/(N+1) - sum r_i/L_i is a rational with modest denominator, so its sign
/// is decided exactly in integers (the boundary is attainable, e.g. N = 7
/// with block sizes (3, 3, 2, 2, 2)) and its value returned in floats.
fn centered_pd_margin(n: usize, partition: &BlockPartition) -> (std::cmp::Ordering, f64) {
    let mut den: i128 = 1;
    for &r in &partition.sizes {
        den *= (n as i128) - 3 + 4 * r as i128;
    }
    let mut num: i128 = 0;
    for &r in &partition.sizes {
        let l = (n as i128) - 3 + 4 * r as i128;
        num += r as i128 * (den / l);
    }
    let diff = n as i128 * den - (n as i128 + 1) * num;
    let margin = diff as f64 / ((n as f64 + 1.0) * den as f64);
    (diff.cmp(&0), margin)
}

/// tr{(B - J/N)^{-1}} via a closed form, with L_i = N - 3 + 4 r_i and
/// t = (N - 3)/4.
pub fn block_trace_inverse(
    n: usize,
    partition: &BlockPartition,
    variant: TraceFormula,
) -> Result<f64> {
    check_n(n)?;
    let (sign, margin) = centered_pd_margin(n, partition);
    if sign != std::cmp::Ordering::Greater {
        return Err(Error::BlockNotPositiveDefinite);
    }
    let nf = n as f64;
    let k = partition.k as f64;
    let m = partition.sizes.len() as f64;
    let value = match variant {
        TraceFormula::First => {
            let mut sum_inv = 0.0;
            let mut sum_r_inv2 = 0.0;
            for &r in &partition.sizes {
                let l = nf - 3.0 + 4.0 * r as f64;
                sum_inv += 1.0 / l;
                sum_r_inv2 += r as f64 / (l * l);
            }
            // the rank-one denominator is exactly the pd margin
            sum_inv + (k - m) / (nf - 3.0) + sum_r_inv2 / margin
        }
        TraceFormula::Second => {
            let t = (nf - 3.0) / 4.0;
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for &r in &partition.sizes {
                let rf = r as f64;
                s1 += rf / (t + rf);
                s2 += rf / ((t + rf) * (t + rf));
            }
            (k - s1 + t * s2 / (4.0 * margin)) / (4.0 * t)
        }
    };
    Ok(value)
}

/// All integer partitions of K in canonical (descending) order, largest
/// first part first.
pub fn enumerate_partitions(k: usize) -> Vec<BlockPartition> {
    fn rec(remaining: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if remaining == 0 {
            out.push(prefix.clone());
            return;
        }
        for next in (1..=max.min(remaining)).rev() {
            prefix.push(next);
            rec(remaining - next, next, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, k, &mut Vec::new(), &mut out);
    out.into_iter()
        .map(|sizes| BlockPartition { k, sizes })
        .collect()
}

/// Exhaustive ranking of all partitions of K by centered-inverse trace.
/// Partitions whose centered matrix is not positive definite rank last with
/// value +inf.
#[derive(Debug, Clone)]
pub struct BlockRanking {
    pub n: usize,
    pub k: usize,
    pub best: BlockPartition,
    pub best_value: f64,
    /// (partition, value) sorted ascending by value, ties by canonical order.
    pub ranking: Vec<(BlockPartition, f64)>,
    /// Whether K >= 4 and N clears the cubic bound, in which case the winner
    /// must be the all-ones partition.
    pub bound_met: bool,
}

pub fn min_block_trace(n: usize, k: usize) -> Result<BlockRanking> {
    check_n(n)?;
    if k < 1 {
        return Err(Error::InvalidBlockMatrix("K must be at least 1".into()));
    }
    let mut ranking: Vec<(BlockPartition, f64)> = enumerate_partitions(k)
        .into_iter()
        .map(|p| {
            let v = block_trace_inverse(n, &p, TraceFormula::First)
                .unwrap_or(f64::INFINITY);
            (p, v)
        })
        .collect();
    ranking.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    let (best, best_value) = ranking[0].clone();
    let bound_met = k >= 4 && n as f64 >= n0_cubic(k)?;
    if best_value.is_finite() {
        debug_assert!(best.has_contiguous_sizes());
    }
    Ok(BlockRanking {
        n,
        k,
        best,
        best_value,
        ranking,
        bound_met,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn part(sizes: &[usize]) -> BlockPartition {
        BlockPartition::new(sizes.to_vec()).unwrap()
    }

    #[test]
    fn block_matrix_forms() {
        // single block of 3 at N = 7: 4I + 3J
        let b = block_matrix(7, &part(&[3])).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(b.matrix[(i, j)], if i == j { 7.0 } else { 3.0 });
            }
        }
        // all singletons: 8I - J
        let b = block_matrix(7, &part(&[1, 1, 1])).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(b.matrix[(i, j)], if i == j { 7.0 } else { -1.0 });
            }
        }
        let b = block_matrix(11, &part(&[2, 1])).unwrap();
        assert_eq!(b.matrix[(0, 0)], 11.0);
        assert_eq!(b.matrix[(0, 1)], 3.0);
        assert_eq!(b.matrix[(0, 2)], -1.0);
        assert_eq!(b.matrix[(1, 2)], -1.0);
    }

    #[test]
    fn block_matrix_rejects_bad_n() {
        assert!(block_matrix(8, &part(&[2])).is_err());
    }

    #[test]
    fn trace_closed_form_singletons() {
        // all-singleton partition reduces to the two-eigenvalue closed form
        let v = block_trace_inverse(7, &part(&[1, 1, 1]), TraceFormula::First).unwrap();
        assert_relative_eq!(v, 2.0 / 8.0 + 7.0 / 32.0, max_relative = 1e-12);
        let v2 = block_trace_inverse(7, &part(&[1, 1, 1]), TraceFormula::Second).unwrap();
        assert_relative_eq!(v, v2, max_relative = 1e-12);
    }

    #[test]
    fn trace_formulas_agree_with_dense_inverse() {
        for n in (7..=31).step_by(4) {
            for k in 1..=6 {
                for p in enumerate_partitions(k) {
                    let first = block_trace_inverse(n, &p, TraceFormula::First);
                    let second = block_trace_inverse(n, &p, TraceFormula::Second);
                    let b = block_matrix(n, &p).unwrap();
                    let centered = &b.matrix
                        - DMatrix::from_element(k, k, 1.0 / n as f64);
                    match first {
                        Ok(v1) => {
                            let v2 = second.unwrap();
                            assert_relative_eq!(v1, v2, max_relative = 1e-12);
                            let inv = centered.try_inverse().unwrap();
                            assert_relative_eq!(v1, inv.trace(), max_relative = 1e-9);
                        }
                        Err(_) => {
                            // formula refused: centered matrix must not be pd
                            let eig = nalgebra::SymmetricEigen::new(centered);
                            assert!(eig.eigenvalues.min() <= 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn trace_invariant_under_permutation() {
        // canonicalization makes (2,1) and (1,2) the same partition
        assert_eq!(part(&[2, 1]), part(&[1, 2]));
        let a = block_trace_inverse(11, &part(&[2, 1]), TraceFormula::First).unwrap();
        let b = block_trace_inverse(11, &part(&[1, 2]), TraceFormula::First).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn partition_counts() {
        assert_eq!(enumerate_partitions(3).len(), 3);
        assert_eq!(enumerate_partitions(5).len(), 7);
        assert_eq!(enumerate_partitions(10).len(), 42);
        let parts = enumerate_partitions(3);
        assert!(parts.contains(&part(&[3])));
        assert!(parts.contains(&part(&[2, 1])));
        assert!(parts.contains(&part(&[1, 1, 1])));
    }

    #[test]
    fn min_above_bound_is_all_singletons() {
        // N = 11 > n0(4) ~ 7.47
        let r = min_block_trace(11, 4).unwrap();
        assert!(r.bound_met);
        assert_eq!(r.best, part(&[1, 1, 1, 1]));
        assert_eq!(r.ranking.len(), 5);

        // K = 9, N = 23 > 21.34
        let r = min_block_trace(23, 9).unwrap();
        assert!(r.bound_met);
        assert_eq!(r.best, part(&[1; 9]));
    }

    #[test]
    fn below_bound_ranking_reported() {
        // K = 9, N = 19 < 21.34: ranking exists, no optimality claim
        let r = min_block_trace(19, 9).unwrap();
        assert!(!r.bound_met);
        assert!(r.best_value.is_finite());
        assert!(r.best.has_contiguous_sizes());
    }

    #[test]
    fn minimizer_always_contiguous() {
        for n in (7..=43).step_by(4) {
            for k in 1..=8 {
                let r = min_block_trace(n, k).unwrap();
                if r.best_value.is_finite() {
                    assert!(
                        r.best.has_contiguous_sizes(),
                        "N={n} K={k} best={:?}",
                        r.best.sizes
                    );
                }
            }
        }
    }
}
