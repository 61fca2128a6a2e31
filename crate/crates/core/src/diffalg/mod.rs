//! Exact coefficient arithmetic: the scalar ring Q[I,S]/(I^2+1, S^2-r) and
//! differential polynomials in the jet variables u_m^(k).

mod poly;
mod scalar;

pub use poly::{DiffPolynomial, JetVariable, Monomial};
pub use scalar::Scalar;
