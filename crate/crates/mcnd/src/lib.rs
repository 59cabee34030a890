//! Dual-bound strengthening toolkit for the unsplittable multicommodity
//! capacitated network design (MCND) problem.
//!
//! The crate builds path-based formulations with integer capacity counts
//! (`INT`) or multiple-choice binary capacity selectors (`BIN`), the
//! arc-based fixed-capacity variant used by the Canad benchmark set, and
//! the cut machinery that tightens their LP relaxations:
//!
//! * single-arc commodity packing (SAC-Pack) cuts separated by an integer
//!   program over each arc's path/commodity support,
//! * generalized SAC-Pack cuts obtained by coefficient lifting and by
//!   Fenchel row generation backed by a profit-indexed knapsack oracle,
//! * metric inequalities generated from the dual of the aggregated
//!   multicommodity-flow LP and selected through a Lagrangian loop,
//! * the two-phase integrated cut-generation (ICG) pipeline combining all
//!   of the above, and
//! * a benchmark harness with a brute-force arc-set oracle that certifies
//!   every emitted cut on enumerable instances.

pub mod arcset;
pub mod bench;
pub mod cuts;
pub mod error;
pub mod gen;
pub mod gensacpack;
pub mod icg;
pub mod instance;
pub mod io;
pub mod metric;
pub mod model;
pub mod sacpack;
pub mod solver;

pub use cuts::{Cut, CutKind, PackCut, XKey};
pub use error::{McndError, Result};
pub use instance::{Arc, CapacityProfile, Commodity, Formulation, Instance, NodeRole};
pub use model::{GapReport, ModelKind, ModelSpec};
pub use solver::{HighsSolver, LpPoint, MipLimits, MipResult, SolveStatus, Solver};
