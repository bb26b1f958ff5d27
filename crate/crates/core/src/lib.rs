//! Exact symbolic verification kernel for the SEIR nonintegrability
//! computations: differential-field towers, vector-field calculus, the
//! variational equation and its fundamental set, a restricted Risch
//! elementarity decision for the incomplete gamma function, Galois-matrix
//! certificates, and numeric cross-validation.

// Index loops here mirror the matrix formulas they implement.
#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod dynsys;
pub mod error;
pub mod galois;
pub mod numerics;
pub mod params;
pub mod parse;
pub mod poly;
pub mod quad;
pub mod rat;
pub mod ratfunc;
pub mod report;
pub mod risch;
pub mod symbol;
pub mod tower;
pub mod variational;

pub use error::{Error, Result};
pub use params::ParamAssignment;
pub use poly::{poly_gcd, Monomial, Poly};
pub use rat::Rat;
pub use ratfunc::RatFunc;
pub use symbol::Symbol;
pub use tower::{ExtensionKind, GenKind, NumericEval, SigmaSpec, Tower, TowerElem};
