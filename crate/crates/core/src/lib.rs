//! Free scalar field on a periodic 1-D lattice.
//!
//! The crate builds the boundary-value propagator kernels of the free field as
//! circulant matrices, evolves Gaussian field states exactly in phase space,
//! and compares reduced states of spatial regions. On top of that it provides
//! a dense truncated-Fock oracle, the Gram-equality unitary completion for
//! bipartite amplitude matrices, coherent-state superpositions with regional
//! witnesses, and a harness that runs the light-cone experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gaussian;
pub mod harness;
pub mod io;
pub mod kernels;
pub mod lattice;
pub mod linalg;
pub mod local_unitary;
pub mod oracle;
pub mod region;
pub mod superposition;
pub mod symplectic;

pub use error::{Error, Result};
pub use gaussian::{GaussianState, ReducedDescriptor, SymplecticPropagator};
pub use kernels::{IdentityKind, KernelMatrix, KernelRole};
pub use lattice::{Dispersion, LatticeSpec};
pub use region::Region;

/// Version string recorded in run manifests.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
