//! Segmented-waveguide pinching-antenna (SWAN) modeling for integrated
//! sensing and communication.
//!
//! A SWAN deployment runs two parallel dielectric waveguides above the
//! service area, each divided into short segments with a dedicated feed
//! point and one movable pinching antenna (PA) per segment. One waveguide
//! transmits toward communication users and a sensing target; the other
//! collects the target's echo. Because each segment is fed separately,
//! in-waveguide attenuation only accrues over a segment length rather than
//! the whole aperture, and three segment-control protocols trade hardware
//! cost against performance: selection (one active segment per side),
//! aggregation (all segments on one shared RF chain), and multiplexing
//! (per-segment RF chains with digital beamforming).
//!
//! The crate provides, end to end:
//!
//! * channel coefficients and per-protocol SNR/rate metrics
//!   ([`channel`], [`protocol`]);
//! * closed-form and Monte Carlo sensing-gain analysis of segmentation
//!   ([`sensing`]);
//! * placement machinery: the phase-aligned coarse-then-refine chain and an
//!   element-wise grid search ([`placement`]);
//! * closed-form beamformers, including the rate-optimal design under a
//!   sensing floor ([`beamforming`]);
//! * single-user Pareto fronts of rate versus sensing floor ([`pareto`]);
//! * multi-user TDMA scheduling with water-filling power allocation
//!   ([`tdma`]);
//! * a deterministic batch experiment runner emitting CSV ([`experiment`]).

pub mod beamforming;
pub mod channel;
pub mod cvec;
pub mod experiment;
pub mod layout;
pub mod pareto;
pub mod placement;
pub mod protocol;
pub mod scenario;
pub mod sensing;
pub mod tdma;

pub use cvec::ComplexVector;
pub use layout::SwanLayout;
pub use protocol::{LinkMetrics, Protocol, ProtocolSolution, SegmentWeights};
pub use scenario::{ModelError, Position3D, ScenarioConfig, Side};
