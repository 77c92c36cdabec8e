//! Decentralized allocation of moving targets among cooperating radars.
//!
//! Each radar runs a Kalman tracker per perceived target and derives an
//! uncertainty ellipse from it. Radars then allocate targets among
//! themselves with two chained consensus-based bundle auctions: the first
//! picks a *main* radar per target, the second lets radars with leftover
//! budget join as *optional* radars where their ellipse overlaps the main
//! radar's. An exact branch-and-bound solver of the centralized problems
//! provides the optimality baseline.
//!
//! Module map:
//!
//! * [`geometry`]: ellipses, areas, polygon-clipped intersection areas.
//! * [`tracking`]: constant-velocity Kalman filter and the radar measurement model.
//! * [`allocation`]: utility functions and the load-balancing bid bias.
//! * [`cbba`]: beliefs, the consensus action table, and the per-radar agent.
//! * [`oracle`]: centralized exact solvers and the shared assignment checker.
//! * [`sim`]: scenarios, world stepping, metrics, comparisons and SVG output.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod cbba;
pub mod exec;
pub mod geometry;
pub mod ids;
pub mod oracle;
pub mod sim;
pub mod tracking;

pub use exec::Execution;
pub use ids::{RadarId, TargetId};
