//! Sparse integer vectors and exact rank over the rationals.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::rational::Rational;

/// Sparse integer vector; zero entries are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntVector<K: Ord>(BTreeMap<K, i64>);

impl<K: Ord + Clone> IntVector<K> {
    pub fn new() -> Self {
        IntVector(BTreeMap::new())
    }

    pub fn add(&mut self, key: K, value: i64) {
        if value == 0 {
            return;
        }
        let slot = self.0.entry(key.clone()).or_insert(0);
        *slot += value;
        if *slot == 0 {
            self.0.remove(&key);
        }
    }

    pub fn add_vector(&mut self, other: &IntVector<K>) {
        for (k, v) in &other.0 {
            self.add(k.clone(), *v);
        }
    }

    pub fn get(&self, key: &K) -> i64 {
        self.0.get(key).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn nonzero_count(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &i64)> {
        self.0.iter()
    }

    /// `sum_k self[k] * value(k)`.
    pub fn dot<F: FnMut(&K) -> Rational>(&self, mut value: F) -> Rational {
        self.0
            .iter()
            .fold(Rational::zero(), |acc, (k, &c)| acc + value(k) * Rational::from_integer(c as i128))
    }
}

impl<K: Ord + Clone> FromIterator<(K, i64)> for IntVector<K> {
    fn from_iter<I: IntoIterator<Item = (K, i64)>>(iter: I) -> Self {
        let mut v = IntVector::new();
        for (k, x) in iter {
            v.add(k, x);
        }
        v
    }
}

/// Rank of sparse vectors sharing one key space.
pub fn exact_rank<K: Ord + Clone>(vectors: &[IntVector<K>]) -> usize {
    let mut index = BTreeMap::new();
    for v in vectors {
        for (k, _) in v.iter() {
            let next = index.len();
            index.entry(k.clone()).or_insert(next);
        }
    }
    let cols = index.len();
    let rows: Vec<Vec<i64>> = vectors
        .iter()
        .map(|v| {
            let mut row = alloc::vec![0i64; cols];
            for (k, &x) in v.iter() {
                row[index[k]] = x;
            }
            row
        })
        .collect();
    exact_rank_dense(&rows)
}

/// Rank of a dense integer matrix by fraction-free (Bareiss) elimination.
pub fn exact_rank_dense(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let height = m.len();
    if height == 0 {
        return 0;
    }
    let width = m[0].len();
    let mut prev = BigInt::one();
    let mut rank = 0;
    for col in 0..width {
        if rank == height {
            break;
        }
        let Some(pivot) = (rank..height).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        let (top, rest) = m.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        for row in rest.iter_mut() {
            let factor = row[col].clone();
            for j in (col + 1)..width {
                let value = &pivot_row[col] * &row[j] - &factor * &pivot_row[j];
                row[j] = value / &prev;
            }
            row[col] = BigInt::zero();
        }
        prev = pivot_row[col].clone();
        rank += 1;
    }
    rank
}
