//! Order, rank and relative rank transforms.
//!
//! Ties are broken by position: among equal values, the one with the smaller
//! index receives the smaller rank. The copula model assumes continuous
//! marginals, where ties occur with probability zero, but tied input is
//! accepted and ranked deterministically.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};

/// Coordinates sorted increasingly; the `k`-th entry is the `k`-th order statistic.
pub fn order_transform(x: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

/// Ranks `1..=n`, ties broken by minimal index.
pub fn rank_transform(x: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    // Stable sort keeps equal values in index order.
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0; x.len()];
    for (rank, idx) in order.into_iter().enumerate() {
        ranks[idx] = rank + 1;
    }
    ranks
}

/// `n` observations of a bivariate random vector, stored coordinate-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    first: Vec<f64>,
    second: Vec<f64>,
}

impl Sample {
    pub fn new(first: Vec<f64>, second: Vec<f64>) -> Result<Self> {
        if first.len() != second.len() {
            return Err(Error::InvalidSample(format!(
                "coordinate rows have lengths {} and {}",
                first.len(),
                second.len()
            )));
        }
        if first.len() < 2 {
            return Err(Error::InvalidSample(format!("need at least 2 observations, got {}", first.len())));
        }
        if let Some(k) = first.iter().chain(&second).position(|v| !v.is_finite()) {
            return Err(Error::InvalidSample(format!("entry {} is not finite", k % first.len())));
        }
        Ok(Self { first, second })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Sample::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    pub fn first(&self) -> &[f64] {
        &self.first
    }

    pub fn second(&self) -> &[f64] {
        &self.second
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.first.iter().copied().zip(self.second.iter().copied())
    }
}

/// Relative ranks `R / (n + 1)` of both coordinates, kept as integer ranks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelativeRankMatrix {
    first: Vec<usize>,
    second: Vec<usize>,
}

impl RelativeRankMatrix {
    /// Builds the matrix from two rank rows, each of which must be a permutation of `1..=n`.
    pub fn from_ranks(first: Vec<usize>, second: Vec<usize>) -> Result<Self> {
        if first.len() != second.len() || first.is_empty() {
            return Err(Error::InvalidSample("rank rows must be non-empty and of equal length".into()));
        }
        for row in [&first, &second] {
            let mut seen = vec![false; row.len()];
            for &r in row.iter() {
                if r == 0 || r > row.len() || std::mem::replace(&mut seen[r - 1], true) {
                    return Err(Error::InvalidSample(format!("{row:?} is not a permutation of 1..={}", row.len())));
                }
            }
        }
        Ok(Self { first, second })
    }

    pub fn comonotone(n: usize) -> Self {
        Self { first: (1..=n).collect(), second: (1..=n).collect() }
    }

    pub fn countermonotone(n: usize) -> Self {
        Self { first: (1..=n).collect(), second: (1..=n).rev().collect() }
    }

    pub fn n(&self) -> usize {
        self.first.len()
    }

    pub fn first_ranks(&self) -> &[usize] {
        &self.first
    }

    pub fn second_ranks(&self) -> &[usize] {
        &self.second
    }

    pub fn rank_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.first.iter().copied().zip(self.second.iter().copied())
    }

    /// `(U_1k, U_2k)` as floats.
    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let d = (self.n() + 1) as f64;
        self.rank_pairs().map(move |(a, b)| (a as f64 / d, b as f64 / d))
    }

    /// `(U_1k, U_2k)` as exact rationals.
    pub fn exact_pairs(&self) -> impl Iterator<Item = (BigRational, BigRational)> + '_ {
        let d = BigInt::from(self.n() + 1);
        self.rank_pairs().map(move |(a, b)| {
            (BigRational::new(BigInt::from(a), d.clone()), BigRational::new(BigInt::from(b), d.clone()))
        })
    }

    /// Exchanges the two coordinates.
    pub fn swapped(&self) -> Self {
        Self { first: self.second.clone(), second: self.first.clone() }
    }

    /// Replaces the first coordinate's ranks `R` by `n + 1 - R`.
    pub fn reflected_first(&self) -> Self {
        let n = self.n();
        Self { first: self.first.iter().map(|r| n + 1 - r).collect(), second: self.second.clone() }
    }

    /// `Σ_k U_ik` as an exact rational.
    pub fn row_sum(&self, row: usize) -> BigRational {
        let ranks = if row == 0 { &self.first } else { &self.second };
        let total: usize = ranks.iter().sum();
        BigRational::new(BigInt::from(total), BigInt::from(self.n() + 1))
    }
}

pub fn relative_ranks(s: &Sample) -> RelativeRankMatrix {
    RelativeRankMatrix { first: rank_transform(s.first()), second: rank_transform(s.second()) }
}
