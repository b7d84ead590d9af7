//! Copula-generated measures of concordance and their rank-based estimators.
//!
//! A Gamma-invariant copula `A` generates the measure of concordance
//! `κ_A[C] = ([C, A] - 1/4) / ([M, A] - 1/4)`, where `[C, D] = ∫ C dQ^D` is the
//! biconvex form. `A = Π` gives Spearman's rho and `A = (M + W)/2` gives Gini's
//! gamma. The estimator replaces `C` by the empirical copula of relative ranks.
//!
//! Modules:
//! * [`copula`]: evaluable copulas, checkerboard grids, density-induced copulas;
//! * [`group`]: the eight-element symmetry group and invariance checks;
//! * [`biconvex`]: exact evaluation of `[C, D]`;
//! * [`concordance`]: generators and population values `κ_A[C]`;
//! * [`ranks`]: order, rank and relative rank transforms;
//! * [`estimator`]: the sample forms `⟨C,A⟩_(n)` and the estimator `κ̂_A`;
//! * [`simulation`]: seeded sampling and Monte Carlo consistency studies;
//! * [`spec`]: JSON copula specification files.

pub mod biconvex;
pub mod concordance;
pub mod copula;
pub mod error;
pub mod estimator;
pub mod format;
pub mod group;
pub mod ranks;
pub mod simulation;
pub mod spec;

pub use biconvex::{biconvex_form, BiconvexResult, Method};
pub use concordance::{kappa, ConcordanceGenerator};
pub use copula::{copula_from_density, discretize, rect_mass, Copula, GridCopula, Rect};
pub use error::{Error, Result};
pub use estimator::{estimate, EstimateReport};
pub use group::{apply_transform, is_invariant, symmetrize, GroupElement, Subgroup};
pub use ranks::{rank_transform, relative_ranks, RelativeRankMatrix, Sample};
