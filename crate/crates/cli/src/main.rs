//! `concordia`: estimate and compute copula-generated measures of concordance.
//!
//! Exit codes: 0 on success, 1 on a failed check or any other error,
//! 2 on malformed input data, 3 when the sample is smaller than `n_A`.

mod input;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use concordia_core::concordance::{check_moc_axioms, kappa_detailed};
use concordia_core::estimator::to_f64;
use concordia_core::format::{sig17, Sig17};
use concordia_core::group::{invariance_report, DEFAULT_INVARIANCE_TOL, DEFAULT_LATTICE};
use concordia_core::simulation::{materialize, run_study, sample_copula, StudyConfig, DEFAULT_MATERIALIZE_RESOLUTION};
use concordia_core::spec::CopulaSpec;
use concordia_core::{biconvex, estimate, ConcordanceGenerator, Copula, Error, GroupElement, Subgroup};

use report::{AxiomOutput, CheckOutput, CsvRows, EstimateOutput, ExactForms, ExactOutput, Format, NaOutput, SCHEMA_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{file}: line {line}: {reason}")]
    Malformed { file: String, line: u64, reason: String },
    #[error("{0}")]
    Core(Error),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Malformed { .. } => 2,
            CliError::Core(Error::SampleTooSmall { .. }) => 3,
            _ => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "concordia", version, about = "Copula-generated measures of concordance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Output {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json", global = true)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate κ_A from a two-column CSV sample.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        /// `spearman`, `gini`, `eq:<q>`, or a path to a copula spec file.
        #[arg(long, default_value = "spearman")]
        generator: String,
        #[command(flatten)]
        output: Output,
    },
    /// Population value κ_A[C] of a copula spec.
    Exact {
        #[arg(long)]
        copula: PathBuf,
        #[arg(long, default_value = "spearman")]
        generator: String,
        /// Use the discretized route starting from this resolution.
        #[arg(long)]
        resolution: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Invariance of a copula under a subgroup; with `--generator`, also the axiom suite.
    Check {
        #[arg(long)]
        copula: PathBuf,
        #[arg(long, default_value = "Gamma")]
        subgroup: String,
        #[arg(long)]
        generator: Option<String>,
        /// Lattice size for copulas without a grid form.
        #[arg(long)]
        resolution: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Minimal sample size n_A of a generator.
    Na {
        #[arg(long)]
        generator: String,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo consistency study from a JSON config.
    Study {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        resolution: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Draw a seeded sample with the study's sampler, as CSV.
    Sample {
        #[arg(long)]
        copula: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MATERIALIZE_RESOLUTION)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_generator(spec: &str) -> Result<ConcordanceGenerator, CliError> {
    let path = Path::new(spec);
    if path.is_file() {
        let copula = CopulaSpec::load(path)?.build()?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| spec.into());
        return Ok(ConcordanceGenerator::new(name, copula)?);
    }
    Ok(ConcordanceGenerator::from_name(spec)?)
}

fn load_copula(path: &Path) -> Result<Copula, CliError> {
    Ok(CopulaSpec::load(path)?.build()?)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_report<T: serde::Serialize + CsvRows>(value: &T, output: &Output) -> Result<(), CliError> {
    emit(&report::render(value, output.format).map_err(CliError::Io)?, output.out.as_deref())
}

fn axiom_corpus(extra: &Copula) -> Result<Vec<Copula>, CliError> {
    let mut corpus = vec![Copula::M, Copula::W, Copula::Pi, Copula::E, extra.clone()];
    corpus.push(Copula::mixture(vec![(0.6, Copula::M), (0.4, Copula::E.transformed(GroupElement::NU1))])?);
    corpus.push(concordia_core::discretize(&Copula::mixture(vec![(0.3, Copula::W), (0.7, Copula::Pi)])?, 7)?.into_copula());
    Ok(corpus)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Estimate { input, generator, output } => {
            let g = load_generator(&generator)?;
            let sample = input::read_sample(&input)?;
            let r = estimate(&sample, &g)?;
            emit_report(
                &EstimateOutput {
                    schema_version: SCHEMA_VERSION,
                    command: "estimate",
                    generator: r.generator.clone(),
                    n: r.n,
                    n_a: r.n_a,
                    c_form: to_f64(&r.c_form),
                    m_form: to_f64(&r.m_form),
                    w_form: to_f64(&r.w_form),
                    kappa_hat: to_f64(&r.kappa_hat),
                    exact: ExactForms {
                        c_form: r.c_form.to_string(),
                        m_form: r.m_form.to_string(),
                        w_form: r.w_form.to_string(),
                        kappa_hat: r.kappa_hat.to_string(),
                    },
                },
                &output,
            )
        }
        Command::Exact { copula, generator, resolution, output } => {
            let g = load_generator(&generator)?;
            let c = load_copula(&copula)?;
            let result = match resolution {
                None => kappa_detailed(&g, &c)?.biconvex,
                Some(m) => biconvex::biconvex_discretized(
                    &c,
                    g.copula(),
                    m,
                    biconvex::DISCRETIZED_TOL,
                    biconvex::DISCRETIZED_CAP,
                )?,
            };
            emit_report(
                &ExactOutput {
                    schema_version: SCHEMA_VERSION,
                    command: "exact",
                    generator: g.name().to_string(),
                    copula: c.kind_name().to_string(),
                    kappa: (result.value - 0.25) / (g.m_form() - 0.25),
                    biconvex: result.value,
                    m_form: g.m_form(),
                    method: result.method,
                    resolution_used: result.resolution_used,
                    est_error: result.est_error,
                },
                &output,
            )
        }
        Command::Check { copula, subgroup, generator, resolution, output } => {
            let c = load_copula(&copula)?;
            let s: Subgroup = subgroup.parse()?;
            let inv = invariance_report(&c, s, resolution.unwrap_or(DEFAULT_LATTICE), DEFAULT_INVARIANCE_TOL);
            let axioms = match generator {
                Some(name) => {
                    let g = load_generator(&name)?;
                    let corpus = axiom_corpus(&c)?;
                    let a = check_moc_axioms(&g, &corpus)?;
                    Some(AxiomOutput {
                        generator: g.name().to_string(),
                        corpus_size: corpus.len(),
                        upper_bound: a.upper_bound,
                        permutation: a.permutation,
                        reflection: a.reflection,
                        reflection_sum: a.reflection_sum,
                        range_excess: a.range_excess,
                        passed: a.passed,
                    })
                }
                None => None,
            };
            let passed = inv.invariant && axioms.as_ref().is_none_or(|a| a.passed);
            emit_report(
                &CheckOutput {
                    schema_version: SCHEMA_VERSION,
                    command: "check",
                    copula: c.kind_name().to_string(),
                    subgroup: s.name().to_string(),
                    invariant: inv.invariant,
                    max_deviation: inv.max_deviation,
                    tolerance: DEFAULT_INVARIANCE_TOL,
                    witness: inv.witness.name().to_string(),
                    point: [Sig17(inv.point.0), Sig17(inv.point.1)],
                    exact_grid: inv.exact_grid,
                    axioms,
                    passed,
                },
                &output,
            )?;
            if passed {
                Ok(())
            } else {
                Err(CliError::CheckFailed(format!(
                    "check failed: largest deviation {} under {}",
                    sig17(inv.max_deviation),
                    inv.witness
                )))
            }
        }
        Command::Na { generator, output } => {
            let g = load_generator(&generator)?;
            let n_a = g.minimal_sample_size()?;
            emit_report(
                &NaOutput { schema_version: SCHEMA_VERSION, command: "na", generator: g.name().to_string(), n_a },
                &output,
            )
        }
        Command::Study { input, seed, resolution, output } => {
            let text = std::fs::read_to_string(&input).map_err(|e| CliError::Io(format!("{}: {e}", input.display())))?;
            let mut cfg: StudyConfig = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", input.display())))?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(m) = resolution {
                cfg.resolution = m;
            }
            let study = run_study(&cfg)?;
            let out = output.out.clone().or_else(|| cfg.output.as_ref().map(|p| input.with_file_name(p)));
            let text = report::render(&study, output.format).map_err(CliError::Io)?;
            emit(&text, out.as_deref())
        }
        Command::Sample { copula, n, seed, resolution, out } => {
            let c = materialize(&load_copula(&copula)?, resolution)?;
            let s = sample_copula(&c, n, seed)?;
            let mut text = String::from("x,y\n");
            for (x, y) in s.pairs() {
                text.push_str(&format!("{},{}\n", sig17(x), sig17(y)));
            }
            emit(&text, out.as_deref())
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("CONCORDIA_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("concordia: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
