//! Learning the singular value decomposition of a linear operator from
//! input-output training pairs, with the Radon transform on the unit disk
//! as the reference operator.

pub mod decoder;
pub mod error;
pub mod experiments;
pub mod io;
pub mod learner;
pub mod linalg;
pub mod phantoms;
pub mod radon;
pub mod spectra;

pub use error::{Error, Result};
