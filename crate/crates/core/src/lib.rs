//! Persistent-surveillance planning for teams of energy-constrained UAVs
//! carried and recharged by mobile ground stations.
//!
//! The pipeline: discretize the area ([`geometry`]), cut it into identical
//! rectangles ([`partition`]), split each rectangle among a team's UAVs
//! ([`subpartition`]) and route them ([`tour`]), chain the rectangles into a
//! supercycle and pick the best rectangle size ([`schedule`]), turn the result
//! into velocity profiles for every vehicle ([`trajectory`]), and verify it by
//! simulation ([`sim`]).

pub mod error;
pub mod geometry;
pub mod par;
pub mod partition;
pub mod schedule;
pub mod sim;
pub mod subpartition;
pub mod tour;
pub mod trajectory;

pub use error::PlanError;
pub use geometry::{FleetParams, GridSpec, Node, NodeId, Point};
pub use par::Execution;
pub use partition::{partition, PartitionRect, PartitionSet};
pub use schedule::{build_plan, optimize_partition_size, Candidate, PlanOptions, SupercyclePlan};
pub use sim::{SimConfig, SimReport};
pub use tour::{Tour, TourSolver};
pub use trajectory::{deploy, Deployment, Mode, VelocityProfile};
