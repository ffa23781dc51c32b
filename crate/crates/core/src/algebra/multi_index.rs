//! Lexicographic tables of strictly increasing multi-indices.
//!
//! A multi-index `i1 < i2 < ... < ik` in `0..n` is stored as a bitmask. For each
//! `(n, k)` the masks are listed in lexicographic order of their index tuples and a
//! reverse lookup maps a mask to its position.

use std::sync::OnceLock;

pub const MAX_DIM: usize = 8;

pub(crate) struct Table {
    pub masks: Vec<u16>,
    /// `position[mask]`, valid only for masks of the right popcount below `1 << n`.
    pub position: Vec<u32>,
}

fn build(n: usize, k: usize) -> Table {
    let mut masks = Vec::new();
    let mut stack = Vec::with_capacity(k);
    fn rec(n: usize, k: usize, start: usize, stack: &mut Vec<usize>, out: &mut Vec<u16>) {
        if stack.len() == k {
            out.push(stack.iter().fold(0u16, |m, &i| m | (1 << i)));
            return;
        }
        for i in start..n {
            stack.push(i);
            rec(n, k, i + 1, stack, out);
            stack.pop();
        }
    }
    rec(n, k, 0, &mut stack, &mut masks);
    let mut position = vec![u32::MAX; 1 << n];
    for (p, &m) in masks.iter().enumerate() {
        position[m as usize] = p as u32;
    }
    Table { masks, position }
}

pub(crate) fn table(n: usize, k: usize) -> &'static Table {
    static TABLES: OnceLock<Vec<Vec<Table>>> = OnceLock::new();
    assert!(
        n <= MAX_DIM && k <= n,
        "multi-index table out of range: n={n}, k={k}"
    );
    &TABLES.get_or_init(|| {
        (0..=MAX_DIM)
            .map(|n| (0..=n).map(|k| build(n, k)).collect())
            .collect()
    })[n][k]
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Sign of the shuffle that sorts the concatenation of two disjoint increasing index sets.
#[inline]
pub(crate) fn merge_sign(a: u16, b: u16) -> f64 {
    // Count pairs (i in a, j in b) with i > j.
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        inversions += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn indices(mask: u16) -> impl Iterator<Item = usize> {
    let mut rest = mask;
    std::iter::from_fn(move || {
        if rest == 0 {
            None
        } else {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(i)
        }
    })
}

pub(crate) fn mask_of(idx: &[usize]) -> Option<(u16, f64)> {
    // Returns the sorted mask and the sign of the sorting permutation, or None on repeats.
    let mut v: Vec<usize> = idx.to_vec();
    let mut sign = 1.0;
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    let mut mask = 0u16;
    for &i in &v {
        if mask & (1 << i) != 0 {
            return None;
        }
        mask |= 1 << i;
    }
    Some((mask, sign))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_are_lexicographic() {
        let t = table(4, 2);
        let tuples: Vec<Vec<usize>> = t.masks.iter().map(|&m| indices(m).collect()).collect();
        assert_eq!(
            tuples,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        for n in 0..=MAX_DIM {
            for k in 0..=n {
                assert_eq!(table(n, k).masks.len(), binomial(n, k));
            }
        }
    }

    #[test]
    fn merge_sign_counts_transpositions() {
        // e2 ^ e1 = -e12
        assert_eq!(merge_sign(0b10, 0b01), -1.0);
        assert_eq!(merge_sign(0b01, 0b10), 1.0);
        // e13 ^ e2 = -e123
        assert_eq!(merge_sign(0b101, 0b010), -1.0);
        assert_eq!(mask_of(&[2, 0, 1]), Some((0b111, 1.0)));
        assert_eq!(mask_of(&[1, 0]), Some((0b11, -1.0)));
        assert_eq!(mask_of(&[1, 1]), None);
    }
}
