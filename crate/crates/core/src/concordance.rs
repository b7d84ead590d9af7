//! Measures of concordance generated by a Gamma-invariant copula.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::biconvex::{biconvex_form, BiconvexResult};
use crate::copula::Copula;
use crate::error::{Error, Result};
use crate::estimator::SampleConstants;
use crate::group::{invariance_report, GroupElement, Subgroup, DEFAULT_INVARIANCE_TOL, DEFAULT_LATTICE};

pub const AXIOM_TOL: f64 = 1e-8;

/// A verified generator `A` with its population constant `[M, A]`.
#[derive(Debug)]
pub struct ConcordanceGenerator {
    name: String,
    copula: Copula,
    m_form: f64,
    invariance_checked: bool,
    sample_constants: Mutex<HashMap<usize, Arc<SampleConstants>>>,
    n_a: OnceLock<Result<usize>>,
}

impl Clone for ConcordanceGenerator {
    fn clone(&self) -> Self {
        Self {
            name: self.name.clone(),
            copula: self.copula.clone(),
            m_form: self.m_form,
            invariance_checked: self.invariance_checked,
            sample_constants: Mutex::default(),
            n_a: self.n_a.clone(),
        }
    }
}

impl ConcordanceGenerator {
    /// Verifies Gamma-invariance of `a` and caches `[M, A]`.
    pub fn new(name: impl Into<String>, a: Copula) -> Result<Self> {
        let report = invariance_report(&a, Subgroup::Gamma, DEFAULT_LATTICE, DEFAULT_INVARIANCE_TOL);
        if !report.invariant {
            return Err(Error::NotGammaInvariant {
                deviation: report.max_deviation,
                witness: report.witness,
                u1: report.point.0,
                u2: report.point.1,
            });
        }
        let m_form = biconvex_form(&Copula::M, &a)?.value;
        if m_form <= 0.25 {
            return Err(Error::DegenerateGenerator { m_form });
        }
        Ok(Self {
            name: name.into(),
            copula: a,
            m_form,
            invariance_checked: true,
            sample_constants: Mutex::default(),
            n_a: OnceLock::new(),
        })
    }

    pub fn spearman() -> Self {
        Self::new("spearman", Copula::Pi).expect("Π generates Spearman's rho")
    }

    pub fn gini() -> Self {
        Self::new("gini", Copula::gini()).expect("(M + W)/2 generates Gini's gamma")
    }

    /// Generator `E_q = (1 - q) Π + q (M + W)/2`.
    pub fn interpolated(q: f64) -> Result<Self> {
        Self::new(format!("eq:{q}"), Copula::interpolated(q)?)
    }

    /// Parses `spearman`, `gini` or `eq:<q>`.
    pub fn from_name(spec: &str) -> Result<Self> {
        match spec {
            "spearman" => Ok(Self::spearman()),
            "gini" => Ok(Self::gini()),
            _ => match spec.strip_prefix("eq:") {
                Some(q) => {
                    let q: f64 = q.trim().parse().map_err(|_| Error::UnknownGenerator(spec.to_string()))?;
                    Self::interpolated(q)
                }
                None => Err(Error::UnknownGenerator(spec.to_string())),
            },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn copula(&self) -> &Copula {
        &self.copula
    }

    /// `[M, A]`.
    pub fn m_form(&self) -> f64 {
        self.m_form
    }

    pub fn invariance_checked(&self) -> bool {
        self.invariance_checked
    }

    pub(crate) fn n_a_cell(&self) -> &OnceLock<Result<usize>> {
        &self.n_a
    }

    pub(crate) fn sample_constants(&self, n: usize) -> Arc<SampleConstants> {
        if let Some(c) = self.sample_constants.lock().unwrap().get(&n) {
            return c.clone();
        }
        let constants = Arc::new(SampleConstants::compute(&self.copula, n));
        self.sample_constants.lock().unwrap().entry(n).or_insert(constants).clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaResult {
    pub value: f64,
    pub biconvex: BiconvexResult,
}

pub fn kappa_detailed(g: &ConcordanceGenerator, c: &Copula) -> Result<KappaResult> {
    let biconvex = biconvex_form(c, g.copula())?;
    Ok(KappaResult { value: (biconvex.value - 0.25) / (g.m_form - 0.25), biconvex })
}

/// `κ_A[C] = ([C, A] - 1/4) / ([M, A] - 1/4)`.
pub fn kappa(g: &ConcordanceGenerator, c: &Copula) -> Result<f64> {
    kappa_detailed(g, c).map(|k| k.value)
}

/// Worst deviations from the bivariate measure-of-concordance axioms over a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxiomReport {
    /// `|κ[M] - 1|`.
    pub upper_bound: f64,
    /// `max |κ[π(C)] - κ[C]|`.
    pub permutation: f64,
    /// `max |κ[ν1(C)] + κ[C]|`.
    pub reflection: f64,
    /// `max |Σ_{ν ∈ Γ^ν} κ[ν(C)]|`.
    pub reflection_sum: f64,
    /// Largest excess of `|κ[C]|` over 1.
    pub range_excess: f64,
    pub passed: bool,
}

pub fn check_moc_axioms(g: &ConcordanceGenerator, corpus: &[Copula]) -> Result<AxiomReport> {
    let upper_bound = (kappa(g, &Copula::M)? - 1.0).abs();
    let per_member: Vec<[f64; 4]> = corpus
        .par_iter()
        .map(|c| -> Result<[f64; 4]> {
            let k = kappa(g, c)?;
            let k_pi = kappa(g, &c.transformed(GroupElement::PI))?;
            let k_nu1 = kappa(g, &c.transformed(GroupElement::NU1))?;
            let mut sum = 0.0;
            for &nu in Subgroup::GammaNu.elements() {
                sum += kappa(g, &c.transformed(nu))?;
            }
            Ok([(k_pi - k).abs(), (k_nu1 + k).abs(), sum.abs(), (k.abs() - 1.0).max(0.0)])
        })
        .collect::<Result<_>>()?;
    let worst = |i: usize| per_member.iter().map(|r| r[i]).fold(0.0, f64::max);
    let mut report = AxiomReport {
        upper_bound,
        permutation: worst(0),
        reflection: worst(1),
        reflection_sum: worst(2),
        range_excess: worst(3),
        passed: false,
    };
    report.passed = [report.upper_bound, report.permutation, report.reflection, report.reflection_sum]
        .iter()
        .all(|d| *d <= AXIOM_TOL)
        && report.range_excess <= 1e-9;
    Ok(report)
}
