//! Equivariant maps between rotationally symmetric model spaces.

pub mod bochner;
pub mod equivariant;
pub mod evolve;
pub mod relax;
pub mod target;

pub use bochner::{bochner_level, bochner_residual, hessian_comparison_slack, kato_pair, BochnerLevel, BochnerReport};
pub use equivariant::{EquivariantMap, NodeJet, TensionEnergy};
pub use evolve::{hmhf_evolve, EvolveOptions, Scheme};
pub use relax::relax_harmonic;
pub use target::{TargetHelpers, TargetSpaceForm};
