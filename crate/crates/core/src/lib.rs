//! Certified low-rank decompositions of small order-3 quaternion tensors.

pub mod cmatrix;
pub mod decompose;
pub mod error;
pub mod matrix;
pub mod oracle;
pub mod scalar;
pub mod tensor;
pub mod util;

pub use decompose::{dispatch, DecomposeOutcome, Path};
pub use error::{Error, Result};
pub use matrix::HMatrix;
pub use oracle::{als_fit, random_tensor, run_suite, verify, Dist, SuiteReport};
pub use scalar::{ComplexPair, Quaternion, Real};
pub use tensor::{Decomposition, SimpleTensor, Tensor3};

/// Default-precision quaternion.
pub type Quat = Quaternion<f64>;
