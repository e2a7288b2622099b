//! Numerical laboratory for complete exponential sums over square-free moduli
//! and for the distribution of the divisor-type convolution `lambda_f * 1` in
//! arithmetic progressions.
//!
//! The crate is organised around six pieces:
//!
//! - [`arith`]: square-free factorization, modular inverses, CRT, and the
//!   classical multiplicative functions.
//! - [`expsum`]: Kloosterman and hyper-Kloosterman sums, all-residue tables,
//!   periodic Fourier transforms, and the transformed kernel used by the
//!   summation-formula machinery.
//! - [`hecke`]: exact Ramanujan tau coefficients, normalized eigenvalues, and
//!   their unit convolution.
//! - [`weights`]: smooth compactly supported bumps, log-scale partitions of
//!   unity, high-order Bessel functions, and oscillatory quadrature for the
//!   continuous Fourier and Bessel transforms.
//! - [`identities`]: finite-truncation verification of Poisson, Voronoi, and
//!   the dual bilinear expansion of the progression error term.
//! - [`experiments`]: measurement harnesses — bilinear forms against reference
//!   bound curves, error-term scans, and the exponent case analysis.

pub mod arith;
pub mod error;
pub mod expsum;
pub mod experiments;
pub mod hecke;
pub mod identities;
pub mod weights;

pub use error::{Error, Result};
