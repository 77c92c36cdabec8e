//! Two-round consensus-based bundle auction.
//!
//! Each step a radar bids for targets as *main* radar, then spends what is
//! left of its budget bidding as *optional* radar on targets whose main
//! radar is someone else. Both rounds exchange the same kind of belief
//! vectors with neighbours and resolve conflicts with the usual CBBA action
//! table. The auction is never closed: bids are recomputed every step from
//! fresh ellipses.

mod agent;
mod belief;

use thiserror::Error;

pub use agent::{AgentConfig, RadarAgent, StepOutput, TargetTruth};
pub use belief::{outbids, Action, BeliefState, CbbaMessage, Claim, EllipseRecord, Round, BID_TOLERANCE};

use crate::geometry::GeometryError;
use crate::ids::{RadarId, TargetId};
use crate::tracking::TrackingError;

#[derive(Debug, Error)]
pub enum CbbaError {
    #[error("{got:?} message delivered to the {expected:?} round")]
    RoundMismatch { expected: Round, got: Round },
    #[error("{sender} claims {target} in the main round without an ellipse")]
    MissingEllipse { sender: RadarId, target: TargetId },
    #[error(transparent)]
    Tracking(#[from] TrackingError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
