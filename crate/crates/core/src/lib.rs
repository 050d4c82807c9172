//! Tomographic representation of qubit and qutrit spin states.
//!
//! A spin tomogram is the family of probability distributions obtained by
//! measuring the spin projection along every direction of the unit sphere.
//! This crate builds those tomograms for density matrices of one or two
//! spin-1/2 or spin-1 particles, evaluates Bell-type inequalities
//! (Bell-Wigner, CHSH, and the quadratic Uffink inequality) directly on the
//! tomograms, searches for maximally violating measurement directions, and
//! locates the mixing-parameter threshold where a Werner family starts to
//! violate an inequality.
//!
//! Conventions used throughout:
//! * spin projections are ordered highest first, so the computational basis
//!   index 0 corresponds to m = +j;
//! * a measurement direction is stored as polar/azimuthal angles (theta, phi)
//!   with unit vector (sin theta cos phi, sin theta sin phi, cos theta);
//! * probabilities are indexed row-major over the outcome tuples, outer
//!   party first.

pub mod error;
pub mod inequalities;
pub mod linalg;
pub mod sampling;
pub mod search;
pub mod states;
pub mod tomography;

mod numfmt;

pub use error::{Error, Result};
pub use inequalities::{InequalityKind, InequalityReport};
pub use linalg::ComplexMatrix;
pub use sampling::{Estimate, ShotRecord};
pub use search::{SearchConfig, SearchResult};
pub use states::{BlochData, DensityMatrix, SeparableSpec};
pub use tomography::{Direction, Reconstruction, Tomogram, TomogramProvider};

pub use num_complex::Complex64;
