//! Rank-free Tucker denoising.
//!
//! Each mode unfolding of a noisy tensor is thresholded with the optimal
//! singular value hard threshold (known noise level, or the Marchenko–Pastur
//! median estimate when it is unknown); the surviving left singular vectors
//! define a Tucker model that is projected and reconstructed in one pass.
//! Truncated HOSVD and HOOI baselines and a synthetic benchmark harness are
//! included.

pub mod bench;
pub mod cli;
pub mod decomp;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod numeric;
pub mod svht;
pub mod tensor;
pub mod textio;

pub use decomp::{hooi, hosvd, reconstruct, tarst, tarst_with, HooiOptions, Shrink, TarstOptions, TarstReport, TuckerModel};
pub use error::{Error, Result};
pub use svht::{AspectRatio, ThresholdRule};
pub use tensor::{axpy, fold, DenseTensor, Matrix, Shape};
