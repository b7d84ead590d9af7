#![allow(dead_code)]

use concordia_core::{Copula, RelativeRankMatrix};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn permutation<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (1..=n).collect();
    p.shuffle(rng);
    p
}

pub fn random_ranks<R: Rng>(rng: &mut R, n: usize) -> RelativeRankMatrix {
    RelativeRankMatrix::from_ranks(permutation(rng, n), permutation(rng, n)).unwrap()
}

/// Cell masses of a random checkerboard copula: a random convex combination
/// of permutation matrices, scaled by `1/m`.
pub fn random_grid_mass<R: Rng>(rng: &mut R, m: usize, terms: usize) -> Vec<f64> {
    let weights: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    let mut mass = vec![0.0; m * m];
    for w in weights {
        let p = permutation(rng, m);
        for (i, &j) in p.iter().enumerate() {
            mass[i * m + (j - 1)] += w / total / m as f64;
        }
    }
    mass
}

pub fn random_grid<R: Rng>(rng: &mut R, m: usize) -> Copula {
    Copula::grid(m, random_grid_mass(rng, m, 4)).unwrap()
}

/// `[C, Π] = E[(1 - U1)(1 - U2)]` under the checkerboard with these masses.
pub fn grid_against_pi(m: usize, mass: &[f64]) -> f64 {
    let mf = m as f64;
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..m {
            total += mass[i * m + j] * (1.0 - (i as f64 + 0.5) / mf) * (1.0 - (j as f64 + 0.5) / mf);
        }
    }
    total
}

/// `[C, (M + W)/2] = (E[1 - max(U1, U2)] + E[(1 - U1 - U2)^+]) / 2` under the checkerboard.
pub fn grid_against_gini(m: usize, mass: &[f64]) -> f64 {
    let mf = m as f64;
    let mut diag = 0.0;
    let mut anti = 0.0;
    for i in 0..m {
        for j in 0..m {
            let w = mass[i * m + j];
            let top = if i == j { (i as f64 + 2.0 / 3.0) / mf } else { (i.max(j) as f64 + 0.5) / mf };
            diag += w * (1.0 - top);
            anti += w * if i + j + 2 <= m {
                1.0 - (i + j + 1) as f64 / mf
            } else if i + j + 1 == m {
                1.0 / (6.0 * mf)
            } else {
                0.0
            };
        }
    }
    (diag + anti) / 2.0
}
