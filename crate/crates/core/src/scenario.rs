//! Scenario description: physical constants, geometry, and power/noise budgets.
//!
//! [`ScenarioConfig`] is the single source of truth for every physical symbol
//! used by the channel models and optimizers. Derived quantities (wavelengths,
//! wavenumbers, attenuation constants) are always recomputed from the stored
//! fields so they can never go stale.

use thiserror::Error;

/// Free-space propagation speed used throughout the models, in m/s.
///
/// The nominal 3e8 value is used (rather than the CODATA constant) so that
/// derived quantities like the carrier wavelength match the usual textbook
/// figures for, e.g., a 28 GHz carrier.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Which of the two parallel waveguides a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// Transmit waveguide (downlink probing/communication).
    Tx,
    /// Receive waveguide (echo collection).
    Rx,
}

/// A point in the 3-D service volume, in meters.
///
/// Users and sensing targets live in the ground plane (`z = 0`); pinching
/// antennas sit on the waveguides at height `z = d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// A point in the ground plane.
    pub fn ground(x: f64, y: f64) -> Self {
        Self { x, y, z: 0.0 }
    }

    /// Euclidean distance to another point.
    pub fn distance(&self, other: &Position3D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Errors raised by scenario validation and channel evaluation.
#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("degenerate geometry: antenna and field point coincide")]
    DegenerateGeometry,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid solution for protocol: {0}")]
    InvalidSolution(String),
}

/// Physical constants, geometry, and budgets for one deployment.
///
/// All powers are stored in watts; dBm conversion happens only at the
/// configuration boundary (see [`dbm_to_watts`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Carrier frequency in Hz.
    pub carrier_freq_hz: f64,
    /// Effective refractive index of the dielectric waveguide (dimensionless).
    pub n_eff: f64,
    /// In-waveguide amplitude attenuation in dB/m.
    pub kappa_db_per_m: f64,
    /// Waveguide height above the ground plane, in m.
    pub d: f64,
    /// y-coordinate of the transmit waveguide, in m.
    pub y_t: f64,
    /// y-coordinate of the receive waveguide, in m.
    pub y_r: f64,
    /// Service-area side length along the waveguide axis, in m.
    pub d_x: f64,
    /// Service-area side length across the waveguide axis, in m.
    pub d_y: f64,
    /// Total transmit power budget, in W.
    pub p_max: f64,
    /// Noise power at a communication user, in W.
    pub sigma_c_sq: f64,
    /// Noise power per receive segment, in W.
    pub sigma_s_sq: f64,
    /// Reflection coefficient of the sensing target (dimensionless).
    pub alpha: f64,
    /// Minimum spacing between any two pinching antennas, in m.
    pub delta_min: f64,
}

impl ScenarioConfig {
    /// Free-space carrier wavelength λ_c = c / f, in m.
    pub fn lambda_c(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    /// Guided wavelength λ_g = λ_c / n_eff, in m.
    pub fn lambda_g(&self) -> f64 {
        self.lambda_c() / self.n_eff
    }

    /// Free-space wavenumber k_c = 2π / λ_c, in rad/m.
    pub fn k_c(&self) -> f64 {
        std::f64::consts::TAU / self.lambda_c()
    }

    /// Guided wavenumber k_g = 2π / λ_g, in rad/m.
    pub fn k_g(&self) -> f64 {
        std::f64::consts::TAU / self.lambda_g()
    }

    /// Free-space amplitude scale η = λ_c / (4π), in m.
    pub fn eta(&self) -> f64 {
        self.lambda_c() / (4.0 * std::f64::consts::PI)
    }

    /// Nepers-per-meter attenuation constant β = κ ln(10) / 20.
    pub fn beta(&self) -> f64 {
        self.kappa_db_per_m * std::f64::consts::LN_10 / 20.0
    }

    /// The y-coordinate of the given waveguide.
    pub fn wg_y(&self, side: Side) -> f64 {
        match side {
            Side::Tx => self.y_t,
            Side::Rx => self.y_r,
        }
    }

    /// Squared cross-plane distance from the given waveguide to a ground
    /// point: (y_wg − y)² + d².
    pub fn cross_distance_sq(&self, side: Side, point: &Position3D) -> f64 {
        let dy = self.wg_y(side) - point.y;
        dy * dy + self.d * self.d
    }

    /// Checks that every field lies in its admissible range.
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("carrier_freq_hz", self.carrier_freq_hz),
            ("n_eff", self.n_eff),
            ("d", self.d),
            ("d_x", self.d_x),
            ("d_y", self.d_y),
            ("p_max", self.p_max),
            ("sigma_c_sq", self.sigma_c_sq),
            ("sigma_s_sq", self.sigma_s_sq),
            ("alpha", self.alpha),
            ("delta_min", self.delta_min),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ModelError::InvalidScenario(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.kappa_db_per_m < 0.0 || !self.kappa_db_per_m.is_finite() {
            return Err(ModelError::InvalidScenario(format!(
                "kappa_db_per_m must be nonnegative, got {}",
                self.kappa_db_per_m
            )));
        }
        if !self.y_t.is_finite() || !self.y_r.is_finite() {
            return Err(ModelError::InvalidScenario(
                "waveguide y-coordinates must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Converts a dBm power level to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a power in watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Converts a dB ratio to a linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear ratio to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
