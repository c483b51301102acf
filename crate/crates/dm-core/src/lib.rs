//! Numeric and symbolic toolkit for mean values of long Dirichlet
//! polynomials with higher divisor coefficients.
//!
//! The crate computes and cross-checks every desk-scale object in that
//! story: shifted divisor arithmetic, the Euler-product family (B, Z, A, C,
//! H, g, G), smooth weights and their Fourier/Mellin transforms, additive
//! divisor correlation sums with their conjectured main terms, and the
//! moment main terms M0/M1 together with the exact polynomial layer
//! (gamma_{k,l}, w_{k,l}, a_{k,l}, g_k).

pub mod arith;
pub mod divisorsums;
pub mod error;
pub mod eulerprod;
pub mod momentpoly;
pub mod moments;
pub mod par;
pub mod policy;
pub mod quad;
pub mod weights;
pub mod rng;
pub mod specfun;
pub mod sympoly;

pub use arith::{DivisorTable, Factorization, ShiftSet};
pub use divisorsums::{AdcComparison, AdcHypothesis, KernelSpec};
pub use error::{Error, Result};
pub use eulerprod::ProductResult;
pub use moments::{MomentConfig, MomentReport};
pub use policy::TruncationPolicy;
pub use quad::{QuadScheme, QuadratureSpec};
pub use specfun::EvalControl;
pub use weights::{OmegaWeight, PhiCutoff};

pub use num_complex::Complex64;

pub use num_bigint;
pub use num_rational;
