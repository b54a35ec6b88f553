//! In-waveguide and free-space channel coefficients, and their cascade.

use num_complex::Complex64;

use crate::cvec::ComplexVector;
use crate::layout::SwanLayout;
use crate::scenario::{ModelError, Position3D, ScenarioConfig, Side};

/// In-waveguide channel coefficient for a PA at `pa_x` fed from `feed_x`:
/// amplitude `10^(−κΔ/20)` and phase `−k_g·Δ` over the guided distance
/// `Δ = |feed_x − pa_x|`.
pub fn in_waveguide_coeff(cfg: &ScenarioConfig, feed_x: f64, pa_x: f64) -> Complex64 {
    let delta = (feed_x - pa_x).abs();
    let magnitude = 10f64.powf(-cfg.kappa_db_per_m * delta / 20.0);
    Complex64::from_polar(magnitude, -cfg.k_g() * delta)
}

/// Free-space channel coefficient between a PA and a field point:
/// `(η / r)·exp(−j·k_c·r)` with `r` the Euclidean distance.
///
/// The same expression serves the downlink (PA to user/target) and the
/// uplink echo (target to PA) by reciprocity.
pub fn free_space_coeff(
    cfg: &ScenarioConfig,
    pa: &Position3D,
    point: &Position3D,
) -> Result<Complex64, ModelError> {
    let r = pa.distance(point);
    if r == 0.0 {
        return Err(ModelError::DegenerateGeometry);
    }
    Ok(Complex64::from_polar(cfg.eta() / r, -cfg.k_c() * r))
}

/// Position of the PA on segment `i` of the given waveguide.
pub fn pa_position(cfg: &ScenarioConfig, layout: &SwanLayout, side: Side, i: usize) -> Position3D {
    Position3D::new(layout.pa_x()[i], cfg.wg_y(side), cfg.d)
}

/// Cascaded channel vector from one waveguide to a ground point: entry `n`
/// is the free-space coefficient of PA `n` times its in-waveguide
/// coefficient.
pub fn cascaded_channels(
    cfg: &ScenarioConfig,
    layout: &SwanLayout,
    side: Side,
    point: &Position3D,
) -> Result<ComplexVector, ModelError> {
    let mut entries = Vec::with_capacity(layout.n_segments());
    for i in 0..layout.n_segments() {
        let pa = pa_position(cfg, layout, side, i);
        let fs = free_space_coeff(cfg, &pa, point)?;
        let wg = in_waveguide_coeff(cfg, layout.feed_x(i), layout.pa_x()[i]);
        entries.push(fs * wg);
    }
    ComplexVector::new(entries)
}
