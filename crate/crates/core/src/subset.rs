//! Size-K subsets of `[0, N)` and their colexicographic ranks.
//!
//! The rank of a sorted subset `c_0 < c_1 < ... < c_{K-1}` is
//! `sum_j C(c_j, j + 1)` (combinatorial number system), which orders subsets
//! colexicographically: `{0,1} < {0,2} < {1,2} < {0,3} < ...`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) is exact at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// `C(n, k)` as a `usize`, or a resource error if it exceeds `cap`.
pub fn subset_count(n: usize, k: usize, cap: usize) -> Result<usize> {
    let count = binomial(n, k);
    if count > cap as u128 {
        return Err(Error::Resource { what: "subset enumeration", size: count, cap: cap as u128 });
    }
    Ok(count as usize)
}

/// Default bound on `C(N, K)` for anything that enumerates subsets.
pub const DEFAULT_SUBSET_CAP: usize = 10_000_000;

fn check_dims(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 <= K <= N, got N={n}, K={k}")));
    }
    Ok(())
}

/// Colexicographic rank of a sorted, distinct index set.
pub fn rank_subset(indices: &[usize], n: usize, k: usize) -> Result<usize> {
    check_dims(n, k)?;
    if indices.len() != k {
        return Err(Error::invalid(format!("subset has {} indices, expected {k}", indices.len())));
    }
    let mut rank: u128 = 0;
    for (j, &c) in indices.iter().enumerate() {
        if c >= n {
            return Err(Error::invalid(format!("index {c} out of range for N={n}")));
        }
        if j > 0 && indices[j - 1] >= c {
            return Err(Error::invalid(format!("indices must be strictly increasing, got {indices:?}")));
        }
        rank += binomial(c, j + 1);
    }
    usize::try_from(rank).map_err(|_| Error::invalid("rank does not fit in usize"))
}

/// Inverse of [`rank_subset`].
pub fn unrank_subset(rank: usize, n: usize, k: usize) -> Result<Vec<usize>> {
    check_dims(n, k)?;
    let total = binomial(n, k);
    if rank as u128 >= total {
        return Err(Error::invalid(format!("rank {rank} out of range [0, {total}) for N={n}, K={k}")));
    }
    let mut out = vec![0usize; k];
    let mut r = rank as u128;
    let mut upper = n;
    for j in (0..k).rev() {
        // largest c < upper with C(c, j+1) <= r
        let mut c = upper - 1;
        while binomial(c, j + 1) > r {
            c -= 1;
        }
        r -= binomial(c, j + 1);
        out[j] = c;
        upper = c;
    }
    Ok(out)
}

/// A size-K subset of `[0, N)` together with its colex rank.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubsetAction {
    indices: Vec<usize>,
    rank: usize,
}

impl SubsetAction {
    pub fn from_indices(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        let k = indices.len();
        indices.sort_unstable();
        let rank = rank_subset(&indices, n, k)?;
        Ok(Self { indices, rank })
    }

    pub fn from_rank(rank: usize, n: usize, k: usize) -> Result<Self> {
        let indices = unrank_subset(rank, n, k)?;
        Ok(Self { indices, rank })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Number of shared indices.
    pub fn overlap(&self, other: &SubsetAction) -> usize {
        self.indices.iter().filter(|&&i| other.contains(i)).count()
    }

    /// Whether every index of `self` is in `other`.
    pub fn is_subset_of(&self, other: &SubsetAction) -> bool {
        self.indices.iter().all(|&i| other.contains(i))
    }
}

/// Iterates all size-K subsets of `[0, N)` in colex (rank) order.
#[derive(Debug, Clone)]
pub struct Subsets {
    current: Option<Vec<usize>>,
    n: usize,
}

impl Iterator for Subsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.current.take()?;
        let k = cur.len();
        let mut next = cur.clone();
        // smallest j whose entry can move up without colliding
        let j = (0..k).find(|&j| {
            let limit = if j + 1 < k { next[j + 1] } else { self.n };
            next[j] + 1 < limit
        });
        if let Some(j) = j {
            next[j] += 1;
            for (i, slot) in next.iter_mut().enumerate().take(j) {
                *slot = i;
            }
            self.current = Some(next);
        }
        Some(cur)
    }
}

/// All size-K subsets of `[0, N)`, ordered by rank. Empty when `k > n`.
pub fn subsets(n: usize, k: usize) -> Subsets {
    let current = if k <= n { Some((0..k).collect()) } else { None };
    Subsets { current, n }
}

/// Every permutation of `0..m` (Heap's algorithm order).
pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..m).collect();
    let mut out = vec![perm.clone()];
    let mut c = vec![0usize; m];
    let mut i = 0;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            out.push(perm.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(8, 3), 56);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(60, 30), 118_264_581_564_861_424);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_subset(&[0, 1], 3, 2).unwrap(), 0);
        assert_eq!(rank_subset(&[1, 2], 3, 2).unwrap(), 2);
        let n = 7;
        let k = 3;
        let last: Vec<usize> = (n - k..n).collect();
        assert_eq!(rank_subset(&last, n, k).unwrap() as u128, binomial(n, k) - 1);
    }

    #[test]
    fn colex_enumeration_of_two_subsets_of_three() {
        // colex: compare largest element first
        let all: Vec<Vec<usize>> = subsets(3, 2).collect();
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        for (r, s) in all.iter().enumerate() {
            assert_eq!(rank_subset(s, 3, 2).unwrap(), r);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(rank_subset(&[0, 3], 3, 2).is_err());
        assert!(rank_subset(&[1, 1], 3, 2).is_err());
        assert!(rank_subset(&[2, 1], 3, 2).is_err());
        assert!(rank_subset(&[0], 3, 2).is_err());
        assert!(unrank_subset(3, 3, 2).is_err());
        assert!(unrank_subset(0, 3, 0).is_err());
        assert!(unrank_subset(0, 2, 3).is_err());
    }

    #[test]
    fn subset_count_respects_cap() {
        assert_eq!(subset_count(10, 3, 1000).unwrap(), 120);
        assert!(matches!(subset_count(40, 20, DEFAULT_SUBSET_CAP), Err(Error::Resource { .. })));
    }

    #[test]
    fn rank_unrank_exhaustive_up_to_twelve() {
        for n in 1..=12 {
            for k in 1..=n {
                let mut count = 0usize;
                for (r, s) in subsets(n, k).enumerate() {
                    assert_eq!(rank_subset(&s, n, k).unwrap(), r);
                    assert_eq!(unrank_subset(r, n, k).unwrap(), s);
                    count += 1;
                }
                assert_eq!(count as u128, binomial(n, k));
            }
        }
    }

    #[test]
    fn permutations_are_distinct_and_complete() {
        let p = permutations(4);
        assert_eq!(p.len(), 24);
        let set: std::collections::HashSet<_> = p.iter().cloned().collect();
        assert_eq!(set.len(), 24);
        assert_eq!(permutations(0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn overlap_and_containment() {
        let a = SubsetAction::from_indices(vec![3, 1, 4], 6).unwrap();
        let b = SubsetAction::from_indices(vec![1, 4], 6).unwrap();
        assert_eq!(a.indices(), &[1, 3, 4]);
        assert_eq!(a.overlap(&b), 2);
        assert!(b.is_subset_of(&a));
        assert!(!a.is_subset_of(&b));
    }

    proptest! {
        #[test]
        fn unrank_then_rank_is_identity(n in 1usize..40, k_frac in 0.0f64..1.0, r_frac in 0.0f64..1.0) {
            let k = 1 + ((n - 1) as f64 * k_frac) as usize;
            let total = binomial(n, k).min(usize::MAX as u128) as usize;
            let r = ((total - 1) as f64 * r_frac) as usize;
            let s = unrank_subset(r, n, k).unwrap();
            prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(rank_subset(&s, n, k).unwrap(), r);
        }
    }
}
