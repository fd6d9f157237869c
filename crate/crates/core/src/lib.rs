//! Simulation toolkit for the extended Pauli principle in fermionic
//! quantum-dot arrays.
//!
//! Fixed-particle-number Fock sectors and their one-body reduced density
//! matrices live in [`fock`]; [`gates`] prepares the four entanglement
//! classes of three fermions in six modes. [`polytope`] and [`functional`]
//! evaluate the linear constraints on natural occupation numbers and the
//! entropy-based entanglement measure. [`noise`], [`tomography`] and
//! [`montecarlo`] model the experimental side: dephasing during gates,
//! shot-noise-limited 1-RDM reconstruction, and the error margins that still
//! certify entanglement.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod density;
pub mod error;
pub mod fock;
pub mod functional;
pub mod gates;
pub mod linalg;
pub mod montecarlo;
pub mod noise;
pub mod polytope;
pub mod tomography;

pub use error::{Error, Result};
