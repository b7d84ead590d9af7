//! Seeded sampling from copulas and Monte Carlo consistency studies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concordance::{kappa_detailed, ConcordanceGenerator};
use crate::copula::{discretize, Copula, GridCopula};
use crate::error::{Error, Result};
use crate::estimator::estimate;
use crate::format::{serialize_sig17, serialize_sig17_opt};
use crate::ranks::Sample;
use crate::spec::CopulaSpec;

pub const DEFAULT_MATERIALIZE_RESOLUTION: usize = 256;
pub const REPORT_SCHEMA_VERSION: u32 = 1;

enum Sampler {
    M,
    W,
    Pi,
    Grid { m: usize, cumulative: Vec<f64> },
    Mixture { cumulative: Vec<f64>, parts: Vec<Sampler> },
}

impl Sampler {
    fn build(c: &Copula) -> Result<Self> {
        Ok(match c {
            Copula::M => Sampler::M,
            Copula::W => Sampler::W,
            Copula::Pi => Sampler::Pi,
            Copula::Grid(g) => Sampler::grid(g),
            Copula::Mixture(parts) => Sampler::Mixture {
                cumulative: running_sum(parts.iter().map(|(w, _)| *w)),
                parts: parts.iter().map(|(_, c)| Sampler::build(c)).collect::<Result<_>>()?,
            },
            Copula::E => return Err(Error::UnsupportedSampler("E")),
            Copula::Transformed(..) => return Err(Error::UnsupportedSampler("a transformed copula")),
        })
    }

    fn grid(g: &GridCopula) -> Self {
        Sampler::Grid { m: g.resolution(), cumulative: running_sum(g.mass().iter().copied()) }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        match self {
            Sampler::M => {
                let u: f64 = rng.random();
                (u, u)
            }
            Sampler::W => {
                let u: f64 = rng.random();
                (u, 1.0 - u)
            }
            Sampler::Pi => (rng.random(), rng.random()),
            Sampler::Grid { m, cumulative } => {
                let cell = pick(cumulative, rng.random());
                let (i, j) = (cell / m, cell % m);
                let x: f64 = rng.random();
                let y: f64 = rng.random();
                ((i as f64 + x) / *m as f64, (j as f64 + y) / *m as f64)
            }
            Sampler::Mixture { cumulative, parts } => parts[pick(cumulative, rng.random())].draw(rng),
        }
    }
}

fn running_sum(xs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    xs.map(|x| {
        acc += x;
        acc
    })
    .collect()
}

/// Index of the first cumulative weight exceeding `target * total`, skipping empty slots.
fn pick(cumulative: &[f64], target: f64) -> usize {
    let total = *cumulative.last().expect("non-empty");
    let t = target * total;
    let idx = cumulative.partition_point(|&c| c <= t);
    idx.min(cumulative.len() - 1)
}

/// `n` i.i.d. pairs with copula `C`, deterministic in `seed`.
pub fn sample_copula(c: &Copula, n: usize, seed: u64) -> Result<Sample> {
    if n < 2 {
        return Err(Error::InvalidSample(format!("need at least 2 observations, got {n}")));
    }
    let sampler = Sampler::build(c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(f64, f64)> = (0..n).map(|_| sampler.draw(&mut rng)).collect();
    Sample::from_pairs(&pairs)
}

/// Replaces every component the sampler cannot draw from by its checkerboard
/// discretization at `resolution`.
pub fn materialize(c: &Copula, resolution: usize) -> Result<Copula> {
    match c {
        Copula::M | Copula::W | Copula::Pi | Copula::Grid(_) => Ok(c.clone()),
        Copula::Mixture(parts) => {
            let parts = parts
                .iter()
                .map(|(w, inner)| Ok((*w, materialize(inner, resolution)?)))
                .collect::<Result<Vec<_>>>()?;
            Copula::mixture(parts)
        }
        Copula::E | Copula::Transformed(..) => Ok(discretize(c, resolution)?.into_copula()),
    }
}

/// A generator given by name (`spearman`, `gini`, `eq:<q>`) or as a copula spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneratorSpec {
    Named(String),
    Copula(CopulaSpec),
}

impl GeneratorSpec {
    pub fn build(&self) -> Result<ConcordanceGenerator> {
        match self {
            GeneratorSpec::Named(name) => ConcordanceGenerator::from_name(name),
            GeneratorSpec::Copula(spec) => ConcordanceGenerator::new("custom", spec.build()?),
        }
    }
}

fn default_resolution() -> usize {
    DEFAULT_MATERIALIZE_RESOLUTION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub generator: GeneratorSpec,
    pub copula: CopulaSpec,
    pub sizes: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub output: Option<String>,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be at least 1".into()));
        }
        if self.sizes.is_empty() {
            return Err(Error::InvalidConfig("no sample sizes given".into()));
        }
        if let Some(n) = self.sizes.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidConfig(format!("sample size {n} is below 2")));
        }
        if self.resolution == 0 {
            return Err(Error::InvalidConfig("resolution must be at least 1".into()));
        }
        Ok(())
    }

    /// Seed of replication `r`.
    pub fn replication_seed(&self, r: usize) -> u64 {
        self.seed.wrapping_add(r as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
    #[serde(serialize_with = "serialize_sig17_opt")]
    pub kappa_hat: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n: usize,
    pub count: usize,
    pub failures: usize,
    #[serde(serialize_with = "serialize_sig17_opt")]
    pub mean: Option<f64>,
    #[serde(serialize_with = "serialize_sig17_opt")]
    pub sd: Option<f64>,
    /// `sd / sqrt(count)`.
    #[serde(serialize_with = "serialize_sig17_opt")]
    pub std_error: Option<f64>,
    /// `|mean - κ_A[C]|`.
    #[serde(serialize_with = "serialize_sig17_opt")]
    pub abs_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub schema_version: u32,
    pub generator: String,
    pub copula: String,
    pub seed: u64,
    pub replications: usize,
    pub sizes: Vec<usize>,
    #[serde(serialize_with = "serialize_sig17")]
    pub target_kappa: f64,
    #[serde(serialize_with = "serialize_sig17")]
    pub target_biconvex: f64,
    pub summary: Vec<SizeSummary>,
    pub records: Vec<ReplicationRecord>,
}

impl StudyReport {
    pub fn summary_for(&self, n: usize) -> Option<&SizeSummary> {
        self.summary.iter().find(|s| s.n == n)
    }
}

/// Runs every `(size, replication)` pair, possibly in parallel; the report
/// does not depend on how the work is scheduled.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let generator = cfg.generator.build()?;
    let target = materialize(&cfg.copula.build()?, cfg.resolution)?;
    let exact = kappa_detailed(&generator, &target)?;

    let jobs: Vec<(usize, usize)> =
        cfg.sizes.iter().flat_map(|&n| (0..cfg.replications).map(move |r| (n, r))).collect();
    let records: Vec<ReplicationRecord> = jobs
        .par_iter()
        .map(|&(n, r)| {
            let seed = cfg.replication_seed(r);
            let outcome = sample_copula(&target, n, seed).and_then(|s| estimate(&s, &generator));
            match outcome {
                Ok(rep) => ReplicationRecord { n, replication: r, seed, kappa_hat: Some(rep.kappa_hat_f64()), error: None },
                Err(e) => ReplicationRecord { n, replication: r, seed, kappa_hat: None, error: Some(e.to_string()) },
            }
        })
        .collect();

    let summary = cfg
        .sizes
        .iter()
        .map(|&n| summarize(n, records.iter().filter(|r| r.n == n), exact.value))
        .collect();

    Ok(StudyReport {
        schema_version: REPORT_SCHEMA_VERSION,
        generator: generator.name().to_string(),
        copula: target.kind_name().to_string(),
        seed: cfg.seed,
        replications: cfg.replications,
        sizes: cfg.sizes.clone(),
        target_kappa: exact.value,
        target_biconvex: exact.biconvex.value,
        summary,
        records,
    })
}

fn summarize<'a>(n: usize, records: impl Iterator<Item = &'a ReplicationRecord>, target: f64) -> SizeSummary {
    let mut values = Vec::new();
    let mut failures = 0;
    for r in records {
        match r.kappa_hat {
            Some(v) => values.push(v),
            None => failures += 1,
        }
    }
    let count = values.len();
    let mean = (count > 0).then(|| values.iter().sum::<f64>() / count as f64);
    let sd = mean.filter(|_| count > 1).map(|m| {
        let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
        (ss / (count - 1) as f64).sqrt()
    });
    SizeSummary {
        n,
        count,
        failures,
        mean,
        sd,
        std_error: sd.map(|s| s / (count as f64).sqrt()),
        abs_error: mean.map(|m| (m - target).abs()),
    }
}
