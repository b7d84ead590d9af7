//! JSON copula specification files.
//!
//! ```json
//! {"kind": "M"}
//! {"kind": "grid", "m": 2, "mass": [0.5, 0.0, 0.0, 0.5]}
//! {"kind": "mixture", "components": [{"weight": 0.5, "copula": {"kind": "M"}},
//!                                    {"weight": 0.5, "copula": {"kind": "W"}}]}
//! {"kind": "transformed", "element": "nu1", "copula": {"kind": "M"}}
//! ```
//!
//! Grid masses are row-major with the row index running along the first
//! coordinate. Element names are `id`, `pi`, `nu1`, `nu2`, `tau`, `pi.nu1`,
//! `pi.nu2` and `pi.tau`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::copula::Copula;
use crate::error::{Error, Result};
use crate::group::GroupElement;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum CopulaSpec {
    M,
    W,
    Pi,
    E,
    #[serde(rename = "grid")]
    Grid { m: usize, mass: Vec<f64> },
    #[serde(rename = "mixture")]
    Mixture { components: Vec<Component> },
    #[serde(rename = "transformed")]
    Transformed { element: String, copula: Box<CopulaSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub copula: CopulaSpec,
}

impl CopulaSpec {
    pub fn build(&self) -> Result<Copula> {
        match self {
            CopulaSpec::M => Ok(Copula::M),
            CopulaSpec::W => Ok(Copula::W),
            CopulaSpec::Pi => Ok(Copula::Pi),
            CopulaSpec::E => Ok(Copula::E),
            CopulaSpec::Grid { m, mass } => Copula::grid(*m, mass.clone()),
            CopulaSpec::Mixture { components } => {
                let parts = components
                    .iter()
                    .map(|c| Ok((c.weight, c.copula.build()?)))
                    .collect::<Result<Vec<_>>>()?;
                Copula::mixture(parts)
            }
            CopulaSpec::Transformed { element, copula } => {
                let g: GroupElement = element.parse()?;
                Ok(copula.build()?.transformed(g))
            }
        }
    }

    pub fn from_copula(c: &Copula) -> Self {
        match c {
            Copula::M => CopulaSpec::M,
            Copula::W => CopulaSpec::W,
            Copula::Pi => CopulaSpec::Pi,
            Copula::E => CopulaSpec::E,
            Copula::Grid(g) => CopulaSpec::Grid { m: g.resolution(), mass: g.mass().to_vec() },
            Copula::Mixture(parts) => CopulaSpec::Mixture {
                components: parts
                    .iter()
                    .map(|(w, c)| Component { weight: *w, copula: CopulaSpec::from_copula(c) })
                    .collect(),
            },
            Copula::Transformed(g, inner) => CopulaSpec::Transformed {
                element: g.name().to_string(),
                copula: Box::new(CopulaSpec::from_copula(inner)),
            },
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Spec(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

pub fn load_copula(path: &Path) -> Result<Copula> {
    CopulaSpec::load(path)?.build()
}
