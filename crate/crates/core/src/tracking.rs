//! Constant-velocity Kalman tracking in the global Cartesian frame, plus the
//! radar measurement model.
//!
//! State layout is `(x, y, vx, vy)`. Polar coordinates only appear when a
//! radar builds the covariance of a measurement.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Matrix4x2, Vector2, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, Ellipse, GeometryError, PolarNoise};
use crate::ids::RadarId;

/// S/N at which the configured noise deviations apply unchanged.
pub const NOMINAL_SNR: f64 = 13.0;

/// Initial velocity variance of a fresh track, (m/s)^2.
pub const INITIAL_VELOCITY_VARIANCE: f64 = 50.0 * 50.0;

/// Default white-noise acceleration intensity, m^2/s^3.
pub const DEFAULT_PROCESS_NOISE: f64 = 0.5;

/// Ranges below this are clamped when building a measurement covariance.
const MIN_RANGE: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackingError {
    #[error("time step must be positive, got {0}")]
    InvalidTimeStep(f64),
    #[error("innovation covariance is singular")]
    SingularInnovation,
    #[error("measurement covariance is not positive definite")]
    InvalidMeasurementCovariance,
    #[error("update at step {now} precedes last update at step {last}")]
    NonMonotonicUpdate { now: u64, last: u64 },
    #[error("invalid radar parameters: {0}")]
    InvalidRadar(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn symmetrize(p: &Matrix4<f64>) -> Matrix4<f64> {
    (p + p.transpose()) * 0.5
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    pub state: Vector4<f64>,
    pub covariance: Matrix4<f64>,
    pub last_update: u64,
}

impl TrackState {
    pub fn new(state: Vector4<f64>, covariance: Matrix4<f64>, last_update: u64) -> Self {
        Self {
            state,
            covariance: symmetrize(&covariance),
            last_update,
        }
    }

    /// Track started from a single detection: position `z`, zero velocity,
    /// covariance `diag(rm, V_init I)`.
    pub fn initialize(z: &Vector2<f64>, rm: &Matrix2<f64>, now: u64) -> Self {
        let mut p = Matrix4::zeros();
        p.fixed_view_mut::<2, 2>(0, 0).copy_from(rm);
        p[(2, 2)] = INITIAL_VELOCITY_VARIANCE;
        p[(3, 3)] = INITIAL_VELOCITY_VARIANCE;
        Self::new(Vector4::new(z.x, z.y, 0.0, 0.0), p, now)
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.state[0], self.state[1])
    }

    pub fn velocity(&self) -> Vector2<f64> {
        Vector2::new(self.state[2], self.state[3])
    }

    pub fn position_covariance(&self) -> Matrix2<f64> {
        self.covariance.fixed_view::<2, 2>(0, 0).into_owned()
    }
}

pub fn transition(dt: f64) -> Matrix4<f64> {
    let mut f = Matrix4::identity();
    f[(0, 2)] = dt;
    f[(1, 3)] = dt;
    f
}

/// Discretized white-noise-acceleration covariance.
pub fn process_noise(dt: f64, q: f64) -> Matrix4<f64> {
    let a = dt * dt * dt / 3.0;
    let b = dt * dt / 2.0;
    Matrix4::new(
        a, 0.0, b, 0.0, //
        0.0, a, 0.0, b, //
        b, 0.0, dt, 0.0, //
        0.0, b, 0.0, dt,
    ) * q
}

pub fn predict(track: &TrackState, dt: f64, q: f64) -> Result<TrackState, TrackingError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(TrackingError::InvalidTimeStep(dt));
    }
    let f = transition(dt);
    let p = f * track.covariance * f.transpose() + process_noise(dt, q);
    Ok(TrackState {
        state: f * track.state,
        covariance: symmetrize(&p),
        last_update: track.last_update,
    })
}

/// Joseph-form Kalman update with a Cartesian position measurement `z` of
/// covariance `rm`, taken at step `now`.
pub fn update(
    track: &TrackState,
    z: &Vector2<f64>,
    rm: &Matrix2<f64>,
    now: u64,
) -> Result<TrackState, TrackingError> {
    if now < track.last_update {
        return Err(TrackingError::NonMonotonicUpdate {
            now,
            last: track.last_update,
        });
    }
    if rm.cholesky().is_none() {
        return Err(TrackingError::InvalidMeasurementCovariance);
    }
    let h = Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
    let p = &track.covariance;
    let s = h * p * h.transpose() + rm;
    let s_inv = s.try_inverse().ok_or(TrackingError::SingularInnovation)?;
    let gain: Matrix4x2<f64> = p * h.transpose() * s_inv;
    let innovation = z - h * track.state;
    let state = track.state + gain * innovation;
    let i_kh = Matrix4::identity() - gain * h;
    let post = i_kh * p * i_kh.transpose() + gain * rm * gain.transpose();
    Ok(TrackState {
        state,
        covariance: symmetrize(&post),
        last_update: now,
    })
}

/// Confidence ellipse of the track's position. Callers predict first; the
/// ellipse is taken from the covariance as given.
pub fn prediction_ellipse(track: &TrackState, scale: f64) -> Result<Ellipse, GeometryError> {
    Ellipse::new(track.position(), track.position_covariance(), scale)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarParams {
    pub id: RadarId,
    /// Metres, global frame.
    pub position: [f64; 2],
    pub range_max: f64,
    pub noise: PolarNoise,
    #[serde(default = "default_snr")]
    pub snr: f64,
    /// Radar-time budget per step (`L_t`).
    #[serde(default = "default_budget")]
    pub budget: f64,
    #[serde(default = "default_process_noise")]
    pub process_noise_intensity: f64,
}

fn default_snr() -> f64 {
    NOMINAL_SNR
}

fn default_budget() -> f64 {
    4.0
}

fn default_process_noise() -> f64 {
    DEFAULT_PROCESS_NOISE
}

impl RadarParams {
    pub fn validate(&self) -> Result<(), TrackingError> {
        let bad = |what: &str| Err(TrackingError::InvalidRadar(format!("{} {what}", self.id)));
        if !self.position.iter().all(|v| v.is_finite()) {
            return bad("position is not finite");
        }
        if !(self.range_max > 0.0) {
            return bad("range_max must be positive");
        }
        if !(self.budget > 0.0) {
            return bad("budget must be positive");
        }
        if !(self.snr > 0.0) {
            return bad("snr must be positive");
        }
        if !(self.process_noise_intensity >= 0.0) {
            return bad("process noise must be non-negative");
        }
        self.noise.validate()?;
        Ok(())
    }

    pub fn position_vec(&self) -> Vector2<f64> {
        Vector2::new(self.position[0], self.position[1])
    }

    /// Noise deviations after S/N scaling: `sigma / sqrt(snr / 13)`.
    pub fn effective_noise(&self) -> PolarNoise {
        self.noise.scaled(1.0 / (self.snr / NOMINAL_SNR).sqrt())
    }

    pub fn in_range(&self, p: &Vector2<f64>) -> bool {
        (p - self.position_vec()).norm() <= self.range_max
    }

    /// Covariance this radar would attach to a measurement of a target at
    /// `p`, with both deviations multiplied by `noise_factor`.
    pub fn covariance_at(&self, p: &Vector2<f64>, noise_factor: f64) -> Result<Matrix2<f64>, GeometryError> {
        let here = self.position_vec();
        let r = (p - here).norm().max(MIN_RANGE);
        let noise = self.effective_noise().scaled(noise_factor);
        geometry::measurement_covariance(r, geometry::bearing(&here, p), &noise)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Measurement {
    Detected { z: Vector2<f64>, covariance: Matrix2<f64> },
    NoDetection,
}

/// Noisy position measurement of a target whose true position is `truth`.
pub fn measure<R: Rng + ?Sized>(
    radar: &RadarParams,
    truth: &Vector2<f64>,
    rng: &mut R,
) -> Result<Measurement, TrackingError> {
    measure_with_factor(radar, truth, 1.0, rng)
}

/// As [`measure`], with noise deviations multiplied by `noise_factor`
/// (used for lower-quality surveillance detections).
pub fn measure_with_factor<R: Rng + ?Sized>(
    radar: &RadarParams,
    truth: &Vector2<f64>,
    noise_factor: f64,
    rng: &mut R,
) -> Result<Measurement, TrackingError> {
    if !radar.in_range(truth) {
        return Ok(Measurement::NoDetection);
    }
    let covariance = radar.covariance_at(truth, noise_factor)?;
    let chol = covariance
        .cholesky()
        .ok_or(TrackingError::InvalidMeasurementCovariance)?;
    let n = Vector2::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal));
    Ok(Measurement::Detected {
        z: truth + chol.l() * n,
        covariance,
    })
}

/// Speed along the radar's line of sight.
pub fn radial_speed(radar_position: &Vector2<f64>, position: &Vector2<f64>, velocity: &Vector2<f64>) -> f64 {
    let d = position - radar_position;
    let r = d.norm();
    if r == 0.0 {
        return velocity.norm();
    }
    d.dot(velocity) / r
}

/// Whether a track moves fast enough along the line of sight to be handled.
/// A threshold of zero disables the check.
pub fn is_eligible(radar_position: &Vector2<f64>, track: &TrackState, v_radial_min: f64) -> bool {
    v_radial_min <= 0.0
        || radial_speed(radar_position, &track.position(), &track.velocity()).abs() >= v_radial_min
}
