//! Strictly increasing multi-indices and the sign bookkeeping of skew tensors.
//!
//! An r-form at a point is stored by its components on increasing index
//! tuples `i_1 < ... < i_r`, enumerated lexicographically.

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// All increasing `r`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::with_capacity(binomial(n, r));
    rec(0, n, r, &mut Vec::with_capacity(r), &mut out);
    out
}

/// Sign of the permutation sorting `tuple`, or `None` if it has a repeat.
pub fn sort_sign(tuple: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut v = tuple.to_vec();
    let mut sign = 1.0;
    // insertion sort counting transpositions
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, sign))
}

/// Lookup table for components of degree-`r` forms in dimension `n`.
#[derive(Debug, Clone)]
pub struct FormIndex {
    pub n: usize,
    pub r: usize,
    sets: Vec<Vec<usize>>,
}

impl FormIndex {
    pub fn new(n: usize, r: usize) -> Self {
        Self {
            n,
            r,
            sets: subsets(n, r),
        }
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn set(&self, idx: usize) -> &[usize] {
        &self.sets[idx]
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    /// Position of an increasing tuple.
    pub fn position(&self, sorted: &[usize]) -> usize {
        self.sets
            .binary_search_by(|s| s.as_slice().cmp(sorted))
            .expect("tuple is an increasing subset")
    }

    /// Component index and sign for an arbitrary (unsorted) tuple.
    pub fn lookup(&self, tuple: &[usize]) -> Option<(usize, f64)> {
        let (sorted, sign) = sort_sign(tuple)?;
        Some((self.position(&sorted), sign))
    }
}
