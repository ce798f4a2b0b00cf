//! Reeb dynamics on bypass-adapted contact models.
//!
//! The crate provides, in rough dependency order:
//!
//! * [`model_geometry`]: explicit contact forms on thickened-surface and
//!   solid-torus charts, built from reusable bump profiles, together with
//!   their Reeb fields;
//! * [`reeb_flow`]: an adaptive integrator for those Reeb fields with event
//!   localization on sections, Reeb chord search along dividing-set arcs,
//!   and linearized (variational) flows in symplectic trivializations;
//! * [`cz_index`]: rotation numbers, Conley-Zehnder indices and parity
//!   classification for paths of symplectic matrices;
//! * [`symbolic_orbits`]: cyclic words over chord alphabets, action/index
//!   bookkeeping, and graded generator blocks;
//! * [`chord_diagrams`]: non-crossing chord diagrams of meridian discs,
//!   bypass attachment surgery, and region censuses;
//! * [`homology_ranks`]: closed-form rank predictions and the block
//!   identity cross-check tying censuses to attachment histories;
//! * [`horseshoe`]: certified cone-field and fixed-point analysis for
//!   section map models of the bypass return map.

pub mod chord_diagrams;
pub mod cz_index;
mod error;
pub mod homology_ranks;
pub mod horseshoe;
pub mod model_geometry;
pub mod reeb_flow;
pub mod symbolic_orbits;

pub use error::{Error, Result};
