//! JSON and CSV renderings of command results.

use concordia_core::format::{serialize_sig17, sig17};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Exact rationals are kept next to their rounded values as `"p/q"` strings.
#[derive(Debug, Serialize)]
pub struct ExactForms {
    pub c_form: String,
    pub m_form: String,
    pub w_form: String,
    pub kappa_hat: String,
}

#[derive(Debug, Serialize)]
pub struct EstimateOutput {
    pub schema_version: u32,
    pub command: &'static str,
    pub generator: String,
    pub n: usize,
    pub n_a: usize,
    #[serde(serialize_with = "serialize_sig17")]
    pub c_form: f64,
    #[serde(serialize_with = "serialize_sig17")]
    pub m_form: f64,
    #[serde(serialize_with = "serialize_sig17")]
    pub w_form: f64,
    #[serde(serialize_with = "serialize_sig17")]
    pub kappa_hat: f64,
    pub exact: ExactForms,
}

#[derive(Debug, Serialize)]
pub struct ExactOutput {
    pub schema_version: u32,
    pub command: &'static str,
    pub generator: String,
    pub copula: String,
    #[serde(serialize_with = "serialize_sig17")]
    pub kappa: f64,
    #[serde(serialize_with = "serialize_sig17")]
    pub biconvex: f64,
    #[serde(serialize_with = "serialize_sig17")]
    pub m_form: f64,
    pub method: concordia_core::Method,
    pub resolution_used: usize,
    #[serde(serialize_with = "serialize_sig17")]
    pub est_error: f64,
}

#[derive(Debug, Serialize)]
pub struct AxiomOutput {
    pub generator: String,
    pub corpus_size: usize,
    #[serde(serialize_with = "serialize_sig17")]
    pub upper_bound: f64,
    #[serde(serialize_with = "serialize_sig17")]
    pub permutation: f64,
    #[serde(serialize_with = "serialize_sig17")]
    pub reflection: f64,
    #[serde(serialize_with = "serialize_sig17")]
    pub reflection_sum: f64,
    #[serde(serialize_with = "serialize_sig17")]
    pub range_excess: f64,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct CheckOutput {
    pub schema_version: u32,
    pub command: &'static str,
    pub copula: String,
    pub subgroup: String,
    pub invariant: bool,
    #[serde(serialize_with = "serialize_sig17")]
    pub max_deviation: f64,
    #[serde(serialize_with = "serialize_sig17")]
    pub tolerance: f64,
    pub witness: String,
    pub point: [concordia_core::format::Sig17; 2],
    pub exact_grid: bool,
    pub axioms: Option<AxiomOutput>,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct NaOutput {
    pub schema_version: u32,
    pub command: &'static str,
    pub generator: String,
    pub n_a: usize,
}

/// Header and one row per record, for `--format csv`.
pub trait CsvRows {
    fn header(&self) -> Vec<&'static str>;
    fn rows(&self) -> Vec<Vec<String>>;
}

impl CsvRows for EstimateOutput {
    fn header(&self) -> Vec<&'static str> {
        vec!["generator", "n", "n_a", "c_form", "m_form", "w_form", "kappa_hat", "kappa_hat_exact"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        vec![vec![
            self.generator.clone(),
            self.n.to_string(),
            self.n_a.to_string(),
            sig17(self.c_form),
            sig17(self.m_form),
            sig17(self.w_form),
            sig17(self.kappa_hat),
            self.exact.kappa_hat.clone(),
        ]]
    }
}

impl CsvRows for ExactOutput {
    fn header(&self) -> Vec<&'static str> {
        vec!["generator", "copula", "kappa", "biconvex", "m_form", "method", "resolution_used", "est_error"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let method = serde_json::to_value(self.method).ok().and_then(|v| v.as_str().map(str::to_string));
        vec![vec![
            self.generator.clone(),
            self.copula.clone(),
            sig17(self.kappa),
            sig17(self.biconvex),
            sig17(self.m_form),
            method.unwrap_or_default(),
            self.resolution_used.to_string(),
            sig17(self.est_error),
        ]]
    }
}

impl CsvRows for CheckOutput {
    fn header(&self) -> Vec<&'static str> {
        vec!["copula", "subgroup", "invariant", "max_deviation", "witness", "u1", "u2", "axioms_passed", "passed"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        vec![vec![
            self.copula.clone(),
            self.subgroup.clone(),
            self.invariant.to_string(),
            sig17(self.max_deviation),
            self.witness.clone(),
            sig17(self.point[0].0),
            sig17(self.point[1].0),
            self.axioms.as_ref().map(|a| a.passed.to_string()).unwrap_or_default(),
            self.passed.to_string(),
        ]]
    }
}

impl CsvRows for NaOutput {
    fn header(&self) -> Vec<&'static str> {
        vec!["generator", "n_a"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        vec![vec![self.generator.clone(), self.n_a.to_string()]]
    }
}

impl CsvRows for concordia_core::simulation::StudyReport {
    fn header(&self) -> Vec<&'static str> {
        vec!["n", "replication", "seed", "kappa_hat", "error"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.records
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    r.replication.to_string(),
                    r.seed.to_string(),
                    r.kappa_hat.map(sig17).unwrap_or_default(),
                    r.error.clone().unwrap_or_default(),
                ]
            })
            .collect()
    }
}

pub fn render<T: Serialize + CsvRows>(value: &T, format: Format) -> Result<String, String> {
    match format {
        Format::Json => serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| e.to_string()),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(value.header()).map_err(|e| e.to_string())?;
            for row in value.rows() {
                w.write_record(&row).map_err(|e| e.to_string())?;
            }
            String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).map_err(|e| e.to_string())
        }
    }
}
