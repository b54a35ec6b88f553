//! Operating protocols and their communication/sensing metrics.
//!
//! Three segment-control protocols are supported:
//!
//! * **SS** (segment selection): one active segment per waveguide.
//! * **SA** (segment aggregation): all segments share one RF chain, so the
//!   transmit power splits evenly (`1/√N` amplitude per segment) and the
//!   receive noise aggregates to `M·σ_s²`.
//! * **SM** (segment multiplexing): per-segment RF chains with explicit
//!   beamforming and combining vectors.
//!
//! SNR convention: communication uses the bilinear form `|h_cᵀ v_t|²` (no
//! conjugation of the channel) and the echo uses `|v_rᴴ f_s|²·|h_sᵀ v_t|²`,
//! consistently for all three protocols so that they degenerate into one
//! another for single-segment layouts.

use crate::channel::cascaded_channels;
use crate::cvec::ComplexVector;
use crate::layout::SwanLayout;
use crate::scenario::{ModelError, Position3D, ScenarioConfig, Side};

/// Segment-control protocol tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    Ss,
    Sa,
    Sm,
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Ss => "ss",
            Protocol::Sa => "sa",
            Protocol::Sm => "sm",
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-protocol weighting of the segments.
#[derive(Debug, Clone, PartialEq)]
pub enum SegmentWeights {
    /// One-hot selection of a transmit and a receive segment.
    Selection { tx_index: usize, rx_index: usize },
    /// Uniform split/aggregation over all segments.
    Aggregation,
    /// Unit-norm transmit beamformer and receive combiner.
    Multiplexing { w_t: ComplexVector, w_r: ComplexVector },
}

/// A complete protocol configuration: the two layouts plus segment weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSolution {
    pub tx: SwanLayout,
    pub rx: SwanLayout,
    pub weights: SegmentWeights,
}

impl ProtocolSolution {
    pub fn protocol(&self) -> Protocol {
        match self.weights {
            SegmentWeights::Selection { .. } => Protocol::Ss,
            SegmentWeights::Aggregation => Protocol::Sa,
            SegmentWeights::Multiplexing { .. } => Protocol::Sm,
        }
    }
}

/// Communication SNR, echo SNR, and TDMA rate for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkMetrics {
    pub gamma_c: f64,
    pub gamma_s: f64,
    /// `(1/K)·log2(1 + gamma_c)` in bits/s/Hz.
    pub rate: f64,
}

const UNIT_NORM_TOL: f64 = 1e-9;

fn validate_weights(sol: &ProtocolSolution) -> Result<(), ModelError> {
    let n = sol.tx.n_segments();
    let m = sol.rx.n_segments();
    match &sol.weights {
        SegmentWeights::Selection { tx_index, rx_index } => {
            if *tx_index >= n || *rx_index >= m {
                return Err(ModelError::InvalidSolution(format!(
                    "selection indices ({tx_index}, {rx_index}) out of range for {n}x{m} segments"
                )));
            }
        }
        SegmentWeights::Aggregation => {}
        SegmentWeights::Multiplexing { w_t, w_r } => {
            if w_t.len() != n {
                return Err(ModelError::DimensionMismatch { expected: n, got: w_t.len() });
            }
            if w_r.len() != m {
                return Err(ModelError::DimensionMismatch { expected: m, got: w_r.len() });
            }
            if (w_t.norm() - 1.0).abs() > UNIT_NORM_TOL {
                return Err(ModelError::InvalidSolution(format!(
                    "transmit beamformer norm {} is not 1",
                    w_t.norm()
                )));
            }
            if (w_r.norm() - 1.0).abs() > UNIT_NORM_TOL {
                return Err(ModelError::InvalidSolution(format!(
                    "combiner norm {} is not 1",
                    w_r.norm()
                )));
            }
        }
    }
    Ok(())
}

/// Evaluates the SNRs and rate of a protocol solution at transmit power
/// `power_w`, with `k_users` TDMA slots sharing the frame.
pub fn snr_and_rate(
    cfg: &ScenarioConfig,
    sol: &ProtocolSolution,
    cu: &Position3D,
    st: &Position3D,
    power_w: f64,
    k_users: usize,
) -> Result<LinkMetrics, ModelError> {
    assert!(power_w >= 0.0, "power must be nonnegative");
    assert!(k_users >= 1, "k_users must be at least 1");
    validate_weights(sol)?;

    let h_c = cascaded_channels(cfg, &sol.tx, Side::Tx, cu)?;
    let h_s = cascaded_channels(cfg, &sol.tx, Side::Tx, st)?;
    let f_s = cascaded_channels(cfg, &sol.rx, Side::Rx, st)?;

    let n = sol.tx.n_segments() as f64;
    let m = sol.rx.n_segments() as f64;

    let (tx_com, tx_sen, rx_gain, sigma_s_eff) = match &sol.weights {
        SegmentWeights::Selection { tx_index, rx_index } => {
            let tc = h_c[*tx_index].norm_sqr();
            let ts = h_s[*tx_index].norm_sqr();
            let rg = f_s[*rx_index].norm_sqr();
            (tc, ts, rg, cfg.sigma_s_sq)
        }
        SegmentWeights::Aggregation => {
            // Transmit splitting contributes 1/N; receive aggregation raises
            // the noise floor to M sigma_s^2.
            let tc = h_c.sum().norm_sqr() / n;
            let ts = h_s.sum().norm_sqr() / n;
            let rg = f_s.sum().norm_sqr();
            (tc, ts, rg, m * cfg.sigma_s_sq)
        }
        SegmentWeights::Multiplexing { w_t, w_r } => {
            let tc = h_c.dot_t(w_t).norm_sqr();
            let ts = h_s.dot_t(w_t).norm_sqr();
            let rg = w_r.dot_h(&f_s).norm_sqr();
            (tc, ts, rg, cfg.sigma_s_sq)
        }
    };

    let gamma_c = power_w * tx_com / cfg.sigma_c_sq;
    let gamma_s = cfg.alpha * power_w * rx_gain * tx_sen / sigma_s_eff;
    let rate = (1.0 + gamma_c).log2() / k_users as f64;
    Ok(LinkMetrics { gamma_c, gamma_s, rate })
}

/// Convenience: per-watt SNRs (both SNRs are homogeneous of degree one in
/// the transmit power).
pub fn snr_per_watt(
    cfg: &ScenarioConfig,
    sol: &ProtocolSolution,
    cu: &Position3D,
    st: &Position3D,
) -> Result<(f64, f64), ModelError> {
    let m = snr_and_rate(cfg, sol, cu, st, 1.0, 1)?;
    Ok((m.gamma_c, m.gamma_s))
}

/// Unit-norm MRT beamformer matched to a channel under the bilinear
/// convention: `conj(h)/‖h‖`, which maximizes `|hᵀ w|` over unit vectors.
pub fn mrt_weights(h: &ComplexVector) -> Result<ComplexVector, ModelError> {
    h.conj().normalized()
}
