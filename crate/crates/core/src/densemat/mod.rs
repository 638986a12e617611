//! Dense complex linear algebra.
//!
//! Everything here is plain row-major `Complex64` storage. Dimensions never
//! exceed a few hundred, so the routines favour clarity over blocking.

mod linalg;
mod lstsq;
mod operator;
mod random;
mod rng;

pub use linalg::{eigh, hermitian_eigenvalues, psd_part, trace_norm, Eigh};
pub use lstsq::{JacobiSvd, StreamingQr};
pub use operator::{kron, kron_all, partial_trace, Keep, Operator, C64};
pub use random::{
    ginibre, haar_isometry, haar_unitary, random_channel, random_density, random_effect, random_hermitian, random_pure,
    random_pure_vector,
};
pub use rng::Rng;
