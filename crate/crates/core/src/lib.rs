//! Entropic and combinatorial sumset tools over ℤ^D, 𝔽₂^D and finite
//! products of cyclic groups: entropic doubling and Ruzsa distances, the
//! maximal distance d*, three-marginal couplings, structure extraction,
//! and decompositions of pairs of sets with small distance into large
//! low-dimensional pieces.

pub mod coupling;
pub mod decompose;
pub mod dist;
pub mod dstar;
pub mod error;
pub mod fuzz;
pub mod gen;
pub mod group;
pub mod io;
pub mod lattice;
mod lp;
pub mod metrics;
pub mod structure;

pub use coupling::{CouplingOutcome, CouplingProblem};
pub use decompose::{AlgoConfig, Algorithm, DecompositionResult};
pub use dist::{FinDist, JointDist};
pub use dstar::{DStarConfig, DStarResult};
pub use error::{Error, Result};
pub use fuzz::{FuzzConfig, FuzzReport, Suite};
pub use group::{Elem, GroupContext, GroupSet, Homomorphism, Sign, SubgroupF2};
pub use metrics::{BoundCheck, MetricReport};
