//! Simulation and verification toolkit for cooperative, translation-invariant
//! dynamical systems arising from mass-action chemical reaction networks.
//!
//! The crate is organized around the extent-coordinate construction: a network
//! with stoichiometry matrix `Γ` and rate map `R` induces, for every base point
//! `σ ≥ 0`, the system `ẋ = R(σ + Γx)` on the polytope `{x : σ + Γx ≥ 0}`.
//! When the right kernel of `Γ` is spanned by a positive unit vector `v`, that
//! system is invariant under translations along `v`, and its projection onto
//! `v⊥` converges to a unique equilibrium whenever the flow is strongly
//! monotone and bounded modulo `v`. The modules here make every piece of that
//! statement executable:
//!
//! - [`crn`]: network parsing, mass-action rates, exact conservation laws
//! - [`linalg`]: rational ranks/kernels, orthogonal projections, image pullback
//! - [`order`]: orthant cone orders and the translation gauge `V`
//! - [`field`]: the [`VectorField`] abstraction, projections, reversal
//! - [`extent`]: extent/species systems and hypothesis checks
//! - [`ode`]: adaptive Dormand–Prince 5(4) integration with dense output
//! - [`lab`]: trajectory-based verification procedures and equilibrium
//!   certificates
//! - [`builtin`]: ready-made example systems used by tests and the CLI

pub mod builtin;
pub mod crn;
pub mod extent;
pub mod field;
pub mod graph;
pub mod lab;
pub mod linalg;
pub mod ode;
pub mod order;

pub use field::VectorField;
