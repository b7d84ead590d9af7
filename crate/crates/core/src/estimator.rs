//! Rank-based estimation of `κ_A[C]`.
//!
//! For relative ranks `U_k = (U_1k, U_2k)` the empirical copula satisfies
//! `∫ Ĉ_(n) dQ^A = (1/n) Σ_k A(U_k)`, which gives the plug-in form
//! `⟨C,A⟩_(n)`. Its comonotone and countermonotone counterparts evaluate `A`
//! along the diagonal and antidiagonal of the rank grid. All three forms are
//! computed in exact rational arithmetic so that the classical sample formulas
//! for Spearman's rho and Gini's gamma hold as equalities.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::concordance::ConcordanceGenerator;
use crate::copula::{rect_mass, Copula};
use crate::error::{Error, Result};
use crate::ranks::{relative_ranks, RelativeRankMatrix, Sample};

/// Threshold above which the central square `(1/(n+1), n/(n+1)]^2` counts as charged.
pub const POSITIVE_MASS: f64 = 1e-12;
pub const DEFAULT_SIZE_CAP: usize = 10_000;

fn ratio(num: usize, den: usize) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn quarter() -> BigRational {
    ratio(1, 4)
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Step function `Ĉ_(n)(u) = (1/n) #{k : U_k ≤ u}`; not itself a copula.
#[derive(Debug, Clone)]
pub struct EmpiricalCopula {
    ranks: RelativeRankMatrix,
}

impl EmpiricalCopula {
    pub fn new(ranks: RelativeRankMatrix) -> Self {
        Self { ranks }
    }

    pub fn eval(&self, u1: f64, u2: f64) -> f64 {
        let hits = self.ranks.pairs().filter(|&(a, b)| a <= u1 && b <= u2).count();
        hits as f64 / self.ranks.n() as f64
    }

    pub fn ranks(&self) -> &RelativeRankMatrix {
        &self.ranks
    }
}

/// `⟨C,A⟩_(n) = (1/n) Σ_k A(U_k)`, exactly.
pub fn empirical_biconvex_exact(u: &RelativeRankMatrix, a: &Copula) -> BigRational {
    let total = exact_sum(u.exact_pairs().map(|(x, y)| a.eval_exact(&x, &y)));
    total / BigRational::from_integer(BigInt::from(u.n()))
}

/// Sums numerators per denominator and reduces once per distinct denominator.
fn exact_sum(terms: impl Iterator<Item = BigRational>) -> BigRational {
    let mut by_denom: BTreeMap<BigInt, BigInt> = BTreeMap::new();
    for t in terms {
        let (num, den) = t.into_raw();
        *by_denom.entry(den).or_default() += num;
    }
    by_denom.into_iter().map(|(den, num)| BigRational::new(num, den)).sum()
}

pub fn empirical_biconvex(u: &RelativeRankMatrix, a: &Copula) -> f64 {
    to_f64(&empirical_biconvex_exact(u, a))
}

/// `⟨M,A⟩_(n) = (1/n) Σ_k A(k/(n+1), k/(n+1))`.
pub fn comonotone_form_exact(a: &Copula, n: usize) -> BigRational {
    empirical_biconvex_exact(&RelativeRankMatrix::comonotone(n), a)
}

/// `⟨W,A⟩_(n) = (1/n) Σ_k A(k/(n+1), (n+1-k)/(n+1))`.
pub fn countermonotone_form_exact(a: &Copula, n: usize) -> BigRational {
    empirical_biconvex_exact(&RelativeRankMatrix::countermonotone(n), a)
}

pub fn comonotone_form(a: &Copula, n: usize) -> f64 {
    to_f64(&comonotone_form_exact(a, n))
}

pub fn countermonotone_form(a: &Copula, n: usize) -> f64 {
    to_f64(&countermonotone_form_exact(a, n))
}

/// Per-`n` constants of a generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleConstants {
    pub n: usize,
    pub m_form: BigRational,
    pub w_form: BigRational,
}

impl SampleConstants {
    pub fn compute(a: &Copula, n: usize) -> Self {
        Self { n, m_form: comonotone_form_exact(a, n), w_form: countermonotone_form_exact(a, n) }
    }
}

/// Mass of the central square `(1/(n+1), n/(n+1)]^2`.
pub fn central_mass(a: &Copula, n: usize) -> f64 {
    let lo = 1.0 / (n + 1) as f64;
    let hi = n as f64 / (n + 1) as f64;
    rect_mass(a, lo, hi, lo, hi).unwrap_or(0.0)
}

/// Smallest `n` in `2..=n_max` for which `A` charges the central square.
///
/// The answer is cross-checked against `⟨M,A⟩_(n) > 1/4` at `n` and
/// `⟨M,A⟩_(n-1) = 1/4` just below it.
pub fn minimal_sample_size(a: &Copula, n_max: usize) -> Result<usize> {
    let n = (2..=n_max).find(|&n| central_mass(a, n) > POSITIVE_MASS).ok_or(Error::NotFound(n_max))?;
    let excess = comonotone_form_exact(a, n) - quarter();
    if !excess.is_positive() {
        return Err(Error::InconsistentSampleSize { n, mass: central_mass(a, n), excess: to_f64(&excess) });
    }
    if n > 2 {
        let below = comonotone_form_exact(a, n - 1) - quarter();
        if !below.is_zero() {
            return Err(Error::InconsistentSampleSize {
                n: n - 1,
                mass: central_mass(a, n - 1),
                excess: to_f64(&below),
            });
        }
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub n: usize,
    pub generator: String,
    pub c_form: BigRational,
    pub m_form: BigRational,
    pub w_form: BigRational,
    pub kappa_hat: BigRational,
    pub n_a: usize,
    pub valid: bool,
}

impl EstimateReport {
    pub fn kappa_hat_f64(&self) -> f64 {
        to_f64(&self.kappa_hat)
    }
}

pub fn estimate(s: &Sample, g: &ConcordanceGenerator) -> Result<EstimateReport> {
    estimate_ranks(&relative_ranks(s), g)
}

/// `κ̂ = (⟨C,A⟩ - 1/4) / (⟨M,A⟩ - 1/4)`; rejects `n < n_A`.
pub fn estimate_ranks(u: &RelativeRankMatrix, g: &ConcordanceGenerator) -> Result<EstimateReport> {
    let n = u.n();
    let n_a = g.minimal_sample_size()?;
    if n < n_a {
        return Err(Error::SampleTooSmall { n, n_a });
    }
    let constants = g.sample_constants(n);
    let denom = &constants.m_form - quarter();
    if !denom.is_positive() {
        return Err(Error::SampleTooSmall { n, n_a });
    }
    let c_form = empirical_biconvex_exact(u, g.copula());
    let kappa_hat = (&c_form - quarter()) / denom;
    Ok(EstimateReport {
        n,
        generator: g.name().to_string(),
        c_form,
        m_form: constants.m_form.clone(),
        w_form: constants.w_form.clone(),
        kappa_hat,
        n_a,
        valid: true,
    })
}

/// Classical rank form of Spearman's rho, `1 - 6 Σ (R_1k - R_2k)^2 / (n (n^2 - 1))`.
pub fn spearman_rank_form(u: &RelativeRankMatrix) -> BigRational {
    let n = u.n();
    let d2: usize = u.rank_pairs().map(|(a, b)| a.abs_diff(b).pow(2)).sum();
    BigRational::from_integer(1.into()) - ratio(6 * d2, n * (n * n - 1))
}

/// Both sample forms of Gini's gamma.
#[derive(Debug, Clone, PartialEq)]
pub struct GiniForms {
    /// `(n+1)/⌊n²/2⌋ (2 Σ min(U_1k, U_2k) + 2 Σ max(U_1k + U_2k - 1, 0) - n)`.
    pub relative: BigRational,
    /// `(Σ |R_1k + R_2k - (n+1)| - Σ |R_1k - R_2k|) / ⌊n²/2⌋`.
    pub absolute: BigRational,
}

pub fn gini_sample_form(u: &RelativeRankMatrix) -> GiniForms {
    let n = u.n();
    let half_sq = n * n / 2;
    let one = BigRational::from_integer(1.into());
    let mut min_sum = BigRational::zero();
    let mut max_sum = BigRational::zero();
    for (a, b) in u.exact_pairs() {
        let s = &a + &b - &one;
        min_sum += a.min(b);
        if s.is_positive() {
            max_sum += s;
        }
    }
    let two = BigRational::from_integer(2.into());
    let relative = ratio(n + 1, half_sq)
        * (&two * min_sum + &two * max_sum - BigRational::from_integer(BigInt::from(n)));

    let mut spread: i64 = 0;
    for (a, b) in u.rank_pairs() {
        let (a, b) = (a as i64, b as i64);
        spread += (a + b - (n as i64 + 1)).abs() - (a - b).abs();
    }
    let absolute = BigRational::new(BigInt::from(spread), BigInt::from(half_sq));
    GiniForms { relative, absolute }
}

/// Swap procedure that moves a rank configuration to the comonotone one.
///
/// At step `p` the column whose second rank is `v = n + 1 - p` is paired with
/// first rank `v`: if it currently has first rank `i < v`, it exchanges its
/// first rank with the column whose first rank is `v`. Because every copula is
/// 2-increasing, `(1/n) Σ A(u_k)` cannot decrease at any step. The returned
/// trajectory has `n + 1` states, starting with `u`.
pub fn rearrange_toward_comonotone(u: &RelativeRankMatrix) -> Vec<RelativeRankMatrix> {
    let n = u.n();
    let mut first = u.first_ranks().to_vec();
    let second = u.second_ranks().to_vec();
    let mut states = Vec::with_capacity(n + 1);
    states.push(u.clone());
    for p in 1..=n {
        let v = n + 1 - p;
        let l = second.iter().position(|&r| r == v).expect("second row is a permutation");
        let i = first[l];
        if i != v {
            let m = first.iter().position(|&r| r == v).expect("first row is a permutation");
            first[m] = i;
            first[l] = v;
        }
        states.push(RelativeRankMatrix::from_ranks(first.clone(), second.clone()).expect("ranks stay permutations"));
    }
    states
}

/// Mirror procedure: reflect the first coordinate, rearrange toward the
/// comonotone configuration, reflect back. For Gamma-invariant `A` the value
/// `(1/n) Σ A(u_k)` is nonincreasing along the trajectory and ends at `⟨W,A⟩_(n)`.
pub fn rearrange_toward_countermonotone(u: &RelativeRankMatrix) -> Vec<RelativeRankMatrix> {
    rearrange_toward_comonotone(&u.reflected_first()).into_iter().map(|s| s.reflected_first()).collect()
}

impl ConcordanceGenerator {
    /// `n_A`, searched up to [`DEFAULT_SIZE_CAP`].
    pub fn minimal_sample_size(&self) -> Result<usize> {
        self.n_a_cell().get_or_init(|| minimal_sample_size(self.copula(), DEFAULT_SIZE_CAP)).clone()
    }
}
