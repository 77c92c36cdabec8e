//! Utility and cost model shared by the auction and the exact solver.
//!
//! * main utility `f(V) = u_max / (1 + V / v_ref)`, decreasing in the
//!   ellipse area `V`;
//! * pair bonus `alpha g(V∩) = alpha / (1 + V∩ / v_ref)` when the two
//!   ellipses overlap, zero otherwise; a smaller overlap means a tighter
//!   fused estimate and earns more;
//! * bid bias `c / (|b| + 1)` so scores diminish with bundle size.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, Ellipse};

/// A main utility below this multiple of the bonus triggers a warning.
pub const DOMINANCE_FACTOR: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocationError {
    #[error("{name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

fn positive(name: &'static str, value: f64) -> Result<(), AllocationError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(AllocationError::NonPositive { name, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityParams {
    pub u_max: f64,
    pub alpha: f64,
    pub eps_min: f64,
    /// Area normalization, m^2.
    pub v_ref: f64,
}

impl Default for UtilityParams {
    fn default() -> Self {
        Self {
            u_max: 100.0,
            alpha: 5.0,
            eps_min: 0.01,
            v_ref: 10.0,
        }
    }
}

impl UtilityParams {
    pub fn validate(&self) -> Result<(), AllocationError> {
        positive("u_max", self.u_max)?;
        positive("v_ref", self.v_ref)?;
        positive("eps_min", self.eps_min)?;
        // alpha = 0 switches the optional round off; it may not be negative.
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(AllocationError::NonPositive {
                name: "alpha",
                value: self.alpha,
            });
        }
        Ok(())
    }

    /// `f(V)`.
    pub fn main_from_area(&self, area: f64) -> f64 {
        self.u_max / (1.0 + area / self.v_ref)
    }

    /// `alpha g(V∩)`, zero for an empty overlap.
    pub fn bonus_from_overlap(&self, overlap: f64) -> f64 {
        if overlap > 0.0 {
            self.alpha / (1.0 + overlap / self.v_ref)
        } else {
            0.0
        }
    }

    /// Largest overlap whose bonus still clears `eps_min`.
    pub fn max_rewarded_overlap(&self) -> f64 {
        (self.alpha / self.eps_min - 1.0) * self.v_ref
    }
}

/// Per-task radar-time cost `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskCost(f64);

impl TaskCost {
    pub fn new(gamma: f64) -> Result<Self, AllocationError> {
        positive("gamma", gamma)?;
        Ok(Self(gamma))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for TaskCost {
    fn default() -> Self {
        Self(1.0)
    }
}

pub fn utility_main(ellipse: &Ellipse, params: &UtilityParams) -> f64 {
    params.main_from_area(ellipse.area())
}

/// Bonus earned by adding `optional` as a second sensor to `main`.
pub fn pair_bonus(main: &Ellipse, optional: &Ellipse, params: &UtilityParams) -> f64 {
    params.bonus_from_overlap(geometry::intersection_area(main, optional))
}

pub fn utility_pair(main: &Ellipse, optional: &Ellipse, params: &UtilityParams) -> f64 {
    utility_main(main, params) + pair_bonus(main, optional, params)
}

/// Bid for a task given the bundle size *before* adding it.
pub fn cbba_score(raw_utility: f64, bundle_size: usize) -> f64 {
    raw_utility / (bundle_size as f64 + 1.0)
}

/// Whether a main utility dominates a bonus by at least [`DOMINANCE_FACTOR`].
pub fn dominance_holds(main_utility: f64, bonus: f64) -> bool {
    main_utility >= DOMINANCE_FACTOR * bonus
}
