//! Coined quantum walks, lifted Markov chains and their classical
//! simulation on finite graphs.
//!
//! The crate evolves local quantum channels and lifted chains exactly,
//! builds stochastic bridges by max-flow, compiles them into clock-lifted
//! chains, and checks conductance bounds on mixing times.

pub mod bridge;
pub mod conductance;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod lattice;
pub mod lift;
pub mod lmc;
pub mod lp;
pub mod mixing;
pub mod process;
pub mod quantum;
pub mod space;

pub use error::{Error, Result};
pub use graph::{check_locality_trace, max_locality_excess, neighborhood, tv_distance, Dist, Graph, LocalityReport, NodeSet};
pub use lmc::{LiftedChain, StochMatrix};
pub use process::{ProcessKind, StochProcess};
pub use quantum::{DensityOp, KrausChannel};
pub use space::{CoinAssignment, LiftedSpace};
