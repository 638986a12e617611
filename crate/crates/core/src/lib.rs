//! Hermitian-preserving trace-preserving maps around the canonical virtual
//! broadcasting map `B(ρ) = ½{ρ⊗I, SWAP}`.
//!
//! The crate is organised bottom-up:
//!
//! * [`densemat`]: dense complex matrices, tensor products, partial traces,
//!   the Hermitian eigensolver and seeded random generators.
//! * [`supermap`]: linear maps stored as Choi matrices.
//! * [`broadcast`]: the named broadcasting maps, axiom checks and the
//!   numerical uniqueness certificate.
//! * [`catalog`]: a name → constructor registry used by the CLI.
//! * [`diamond`]: diamond-norm estimators (SDP, pure-state ascent, affine
//!   decomposition bound).
//! * [`hovm`]: Hermitian operator-valued measures and the virtual
//!   measure-and-prepare realization of `B`.
//! * [`sot`]: quantum states over time built from a broadcaster.
//! * [`qsample`]: quasi-probability estimation of expectation values.
//! * [`cli`]: the `vbcast` command-line front end.
//!
//! Tensor index convention: `|i⟩⊗|j⟩ ↦ i·d_b + j`. Choi matrices are ordered
//! output ⊗ input, Jamiołkowski operators input ⊗ output.

pub mod broadcast;
pub mod catalog;
pub mod cli;
pub mod densemat;
pub mod diamond;
pub mod error;
pub mod hovm;
pub mod qsample;
pub mod sot;
pub mod stats;
pub mod supermap;

pub use densemat::{Operator, Rng};
pub use error::{Error, Result};
pub use supermap::{AffineDecomposition, SuperMap};

/// Library version embedded into every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Default algebraic tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;
