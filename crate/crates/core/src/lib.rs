//! Generic partition refinement for finite state-based systems.
//!
//! The engine minimizes systems modulo bisimilarity-type behavioural
//! equivalence in `O((m + n) log n)`, parametrized by per-transition-type
//! refinement interfaces. Composite transition types are handled by
//! decomposing them into sorts, one per layer. A naive fixed-point oracle
//! recomputes the same partition from scratch and serves as an independent
//! cross-check.

pub mod axioms;
pub mod cli;
pub mod coalgebra;
pub mod error;
pub mod functor;
pub mod generator;
pub mod interface;
pub mod oracle;
pub mod partition;
pub mod refiner;
pub mod sorts;

pub use coalgebra::{parse_coalgebra, quotient_coalgebra, Encoding};
pub use error::{Error, Result};
pub use functor::{parse_functor, FunctorExpr};
pub use interface::{Interface, Label, ThreeValue, TypeValue, Weight};
pub use oracle::naive_refine;
pub use refiner::{refine, Refiner};
pub use sorts::{plan_sorts, SortPlan};

/// States, edges, blocks and cells are dense `u32` indices.
pub type StateId = u32;
pub type EdgeId = u32;
pub type SortId = u32;
