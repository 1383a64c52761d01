//! Gaussian measures of shifted sets with hyperoctahedral symmetry.
//!
//! The crate covers the Schur majorization order on squared coordinates
//! (the "Schur²" order), power means and the sets they define, the
//! probability `P(Z ∈ A + θ)` for a standard Gaussian `Z`, critical values
//! and power-matching shifts of p-mean tests, and their Pitman asymptotic
//! relative efficiency against the likelihood-ratio (2-mean) test.
//!
//! Everything here is `no_std` with `alloc`; threading, files and the CLI
//! live in the companion `schur2` crate.
#![no_std]

extern crate alloc;

pub mod are_analysis;
pub mod error;
pub mod exec;
pub mod gauss_measure;
pub mod majorization;
pub mod means;
pub mod quadrature;
pub mod roots;
pub mod sets;
pub mod solvers;
pub mod special;
pub mod vector;
pub mod verify;

pub use error::{Error, Result};
pub use exec::{Executor, Serial};
pub use gauss_measure::{GaussianShiftQuery, MeasureEngine, MeasureEstimate, Method};

pub use majorization::Majorization;
pub use means::{MeanSpec, Schur2Kind, SchurCharacter, Tail};
pub use sets::{SetShape, SetSpec};
pub use vector::RealVector;
