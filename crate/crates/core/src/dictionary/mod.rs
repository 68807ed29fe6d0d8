//! Candidate-term dictionaries and the linear systems built from them.

pub mod design;
pub mod fd;
pub mod terms;

pub use design::{assemble_design, standardize, DesignSystem, DropReason, Provenance, Standardized};
pub use fd::{spatial_derivative, time_derivative, DerivativeField};
pub use terms::{enumerate_terms, Preset, TermSpec};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// How the dictionary for a run is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermSource {
    Preset(Preset),
    Enumerate { pmax: u32, dmax: usize },
}

impl TermSource {
    /// Terms for fields named `names` on a grid with `dims` spatial axes.
    pub fn terms(&self, names: &[&str], dims: usize) -> Result<Vec<TermSpec>> {
        match self {
            TermSource::Preset(p) => p.terms_named(names),
            TermSource::Enumerate { pmax, dmax } => enumerate_terms(names, *pmax, *dmax, dims),
        }
    }
}
