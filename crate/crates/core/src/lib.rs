//! Exact symbolic machinery for r-spin descendant intersection numbers and
//! the flows of the r-th Gelfand-Dickey hierarchy.
//!
//! Everything is computed over the rationals extended by `I` (a square root
//! of -1) and `S` (a square root of `r`); no floating point appears anywhere.
//! The crate splits into layers:
//!
//! * [`diffalg`]: scalars, jet variables and differential polynomials.
//! * [`psido`]: pseudodifferential operators with truncation watermarks,
//!   r-th roots and fractional powers of a Lax operator.
//! * [`hierarchy`]: the flows themselves, in both normalizations, plus the
//!   consistency grid comparing them.
//! * [`descent`]: the index calculus relating descendant insertions to a
//!   small set of base types.
//! * [`correlators`]: intersection-number tables, generating potentials and
//!   the change-of-variables check tying the two presentations together.

pub mod correlators;
pub mod descent;
pub mod diffalg;
pub mod error;
pub mod hierarchy;
pub mod psido;

// Downstream crates should build rationals in the same numeric tower.
pub use num;

pub use correlators::{
    build_potentials, selection_rule, tilde_correlator, CorrelatorKey, CorrelatorTable,
    CorrelatorValue, PotentialSeries, Selection, TableMode,
};
pub use descent::{descent_closed_form, descent_step, variable_map_coefficient, TypeTuple};
pub use diffalg::{DiffPolynomial, JetVariable, Scalar};
pub use error::{Error, Result};
pub use hierarchy::{build_lax, consistency_grid, flow_standard, flow_tilde, FlowIndex, FlowResult};
pub use psido::{PseudoDiffOp, Watermark};
