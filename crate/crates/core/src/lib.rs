//! Two-patch bistable metapopulation model.
//!
//! Two habitat patches with carrying capacities `k1 >= k2`, reaction strengths
//! `lambda1`, `lambda2` and a strong Allee effect are coupled by linear
//! dispersal of rate `D`. The crate computes and classifies every stationary
//! solution, evaluates closed-form sufficient conditions for the extinction
//! state to be the unique equilibrium, enumerates the sawtooth caricature
//! exactly, integrates trajectories, and sweeps parameter planes into region
//! maps with CSV and SVG export.

pub mod cartography;
pub mod certificates;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod model;
pub mod sawtooth;

pub use error::{Error, Result};
pub use model::{
    denormalize, jacobian, normalize, vector_field, vector_field_physical, Coupling, Matrix2, NormalizedParams,
    PatchParams, ReactionKind, Reactions, State,
};
