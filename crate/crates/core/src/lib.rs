//! Exact differential-privacy verification for noisy quantum algorithms.
//!
//! A quantum algorithm is a Kraus channel followed by a POVM measurement.
//! [`verifier`] decides `(ε, δ)`- and `ε`-differential privacy within a
//! trace-distance neighbourhood `η` by reducing the question to extremal
//! eigenvalues of dualized outcome-subset matrices, and builds explicit
//! counterexample state pairs when the property fails. [`oracle`] is an
//! independent sampling validator for the same property.

pub mod cli;
pub mod encoding;
pub mod error;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod tol;
pub mod verifier;

pub use error::{QdpError, Result};
