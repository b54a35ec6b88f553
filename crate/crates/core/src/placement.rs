//! Pinching-antenna placement: coarse path-loss-greedy positioning, the
//! phase-aligned coarse-then-refine chain for the echo side, and the generic
//! element-wise (coordinate) grid search.

use thiserror::Error;

use crate::layout::SwanLayout;
use crate::scenario::{Position3D, ScenarioConfig, Side};

/// Grid-search parameters for the element-wise algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Grid resolution along the waveguide, in m.
    pub grid_step: f64,
    /// Maximum number of full coordinate cycles.
    pub max_iters: usize,
    /// Terminate once the fractional objective increase over a full cycle
    /// falls below this.
    pub rel_tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { grid_step: 1e-2, max_iters: 50, rel_tol: 1e-4 }
    }
}

/// One refine step of the placement chain.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementStep {
    pub segment_index: usize,
    /// Path-loss-greedy position before the phase shift.
    pub coarse_x: f64,
    /// Applied wavelength-scale shift, `final_x − coarse_x`. Stays within
    /// the guided wavelength on unclipped steps and within half the local
    /// phase-wrap spacing (at most `λ_c/(2(n_eff−1))`) otherwise.
    pub phi: f64,
    /// Phase-wrap index targeted by the shift.
    pub l: i64,
    pub final_x: f64,
    /// True when the shift left the guided-wavelength region (exact
    /// alignment, but a long haul on the slow-gradient side) or hit segment
    /// bounds, spacing, or a missing real solution (bounded phase error).
    pub clipped: bool,
}

/// Result of the coarse-then-refine chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPlacement {
    pub layout: SwanLayout,
    /// Steps ordered by segment index (the anchor appears with `phi = 0`).
    pub steps: Vec<RefinementStep>,
    pub anchor_index: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum PlacementError {
    #[error("initial layout violates the feasibility constraints")]
    InfeasibleInitial,
    #[error("objective is not finite at the initial layout")]
    NonFiniteObjective,
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
}

/// Total cascade phase of a PA at `x` on the given waveguide relative to a
/// ground target: free-space leg `k_c·√((x−x_s)² + Δ²)` plus guided leg
/// `k_g·(x − feed_x)`.
pub fn cascade_phase(
    cfg: &ScenarioConfig,
    side: Side,
    st: &Position3D,
    feed_x: f64,
    x: f64,
) -> f64 {
    let delta_sq = cfg.cross_distance_sq(side, st);
    let dist = ((x - st.x) * (x - st.x) + delta_sq).sqrt();
    cfg.k_c() * dist + cfg.k_g() * (x - feed_x)
}

/// Path-loss-greedy placement: the anchor segment's PA goes to the target's
/// x-coordinate (clipped to its segment); the rest walk outward, each as
/// close to the target as its segment and the minimum spacing allow.
pub fn coarse_placement(
    cfg: &ScenarioConfig,
    template: &SwanLayout,
    side: Side,
    st: &Position3D,
) -> SwanLayout {
    let _ = side; // geometry along x is side-independent for the coarse step
    let m = template.n_segments();
    let anchor = template.segment_of(st.x);
    let (lo, hi) = template.segment_bounds(anchor);
    let anchor_x = st.x.clamp(lo, hi);

    let mut pa = template.pa_x().to_vec();
    pa[anchor] = anchor_x;
    let mut prev = anchor_x;
    for i in anchor + 1..m {
        let x = (prev + cfg.delta_min).max(template.feed_x(i));
        pa[i] = x;
        prev = x;
    }
    let mut prev = anchor_x;
    for i in (0..anchor).rev() {
        let x = (prev - cfg.delta_min).min(template.feed_x(i + 1));
        pa[i] = x;
        prev = x;
    }
    template.with_positions(pa).expect("coarse positions stay in bounds")
}

/// Solves `cascade_phase(u) = target` for `u` in closed form.
///
/// Squaring the free-space leg turns the equation into a quadratic in `u`;
/// the valid root (the one satisfying the pre-squaring equation) nearest
/// `near` is returned, polished with a few Newton iterations.
fn solve_phase_equation(
    cfg: &ScenarioConfig,
    side: Side,
    st: &Position3D,
    feed_x: f64,
    target: f64,
    near: f64,
) -> Option<f64> {
    let delta_sq = cfg.cross_distance_sq(side, st);
    let k_c = cfg.k_c();
    let n_eff = cfg.n_eff;
    let x_s = st.x;

    // √((u−x_s)² + Δ²) = i3 − n_eff·u must hold with a nonnegative right side.
    let i3 = target / k_c + n_eff * feed_x;
    let a = 1.0 - n_eff * n_eff;
    let b = x_s - n_eff * i3;
    let c = x_s * x_s + delta_sq - i3 * i3;
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let mut best: Option<f64> = None;
    for u in [(b + sq) / a, (b - sq) / a] {
        if !u.is_finite() || i3 - n_eff * u < -1e-9 {
            continue;
        }
        if best.map_or(true, |cur| (u - near).abs() < (cur - near).abs()) {
            best = Some(u);
        }
    }
    let mut u = best?;
    for _ in 0..3 {
        let dist = ((u - x_s) * (u - x_s) + delta_sq).sqrt();
        let f = k_c * dist + cfg.k_g() * (u - feed_x) - target;
        let df = k_c * (u - x_s) / dist + cfg.k_g();
        u -= f / df;
    }
    Some(u)
}

fn wrap_to_pi(angle: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = angle.rem_euclid(tau);
    if w > std::f64::consts::PI {
        w - tau
    } else {
        w
    }
}

fn refine_step(
    cfg: &ScenarioConfig,
    side: Side,
    st: &Position3D,
    segment_index: usize,
    feed_x: f64,
    coarse_x: f64,
    psi_ref: f64,
    win_lo: f64,
    win_hi: f64,
) -> RefinementStep {
    let tau = std::f64::consts::TAU;
    let f0 = psi_ref - cascade_phase(cfg, side, st, feed_x, coarse_x);
    let base_l = (f0 / tau).round() as i64;

    // The admissible window can be one-sided (spacing or a segment edge at
    // the coarse point), so the globally nearest wrap may lie in a forbidden
    // direction; the neighboring wraps cover both directions.
    let mut best: Option<(f64, i64)> = None;
    for l in [base_l - 1, base_l, base_l + 1] {
        let target = psi_ref - tau * l as f64;
        if let Some(u) = solve_phase_equation(cfg, side, st, feed_x, target, coarse_x) {
            if u >= win_lo && u <= win_hi {
                let better = best
                    .map_or(true, |(u_cur, _)| (u - coarse_x).abs() < (u_cur - coarse_x).abs());
                if better {
                    best = Some((u, l));
                }
            }
        }
    }
    if let Some((u, l)) = best {
        // Exact alignment; flagged when the shift had to leave the nominal
        // guided-wavelength region (the slow-gradient side of the anchor
        // may need up to half a wrap spacing, λ_c/(2(n_eff−1))).
        return RefinementStep {
            segment_index,
            coarse_x,
            phi: u - coarse_x,
            l,
            final_x: u,
            clipped: (u - coarse_x).abs() > cfg.lambda_g(),
        };
    }

    // No alignment is reachable inside the window: the wrapped phase error
    // is then monotone across it, so the best admissible point is a window
    // end. Taking the smaller error can only improve on the coarse point,
    // which is itself one of the ends.
    let err_at = |x: f64| wrap_to_pi(psi_ref - cascade_phase(cfg, side, st, feed_x, x));
    let x = if err_at(win_lo).abs() <= err_at(win_hi).abs() { win_lo } else { win_hi };
    RefinementStep {
        segment_index,
        coarse_x,
        phi: x - coarse_x,
        l: ((psi_ref - cascade_phase(cfg, side, st, feed_x, x)) / tau).round() as i64,
        final_x: x,
        clipped: true,
    }
}

/// Coarse-then-refine chain for the echo-collecting waveguide.
///
/// The anchor PA sits at the target's x-coordinate; the remaining PAs are
/// placed path-loss-greedily and then shifted by a wavelength-scale `φ` so
/// that each cascade phase matches the anchor's modulo 2π, producing a
/// constructive superposition. Shifts are confined to the segment and the
/// minimum spacing; steps whose shift exceeds the guided wavelength or
/// that cannot reach any wrap inside the window are flagged clipped (the
/// latter keep a bounded phase error).
pub fn rx_chain_placement(
    cfg: &ScenarioConfig,
    template: &SwanLayout,
    side: Side,
    st: &Position3D,
) -> ChainPlacement {
    let m = template.n_segments();
    let anchor = template.segment_of(st.x);
    let (lo, hi) = template.segment_bounds(anchor);
    let anchor_x = st.x.clamp(lo, hi);
    let psi_ref = cascade_phase(cfg, side, st, template.feed_x(anchor), anchor_x);

    let mut pa = template.pa_x().to_vec();
    pa[anchor] = anchor_x;
    let mut steps = vec![RefinementStep {
        segment_index: anchor,
        coarse_x: anchor_x,
        phi: 0.0,
        l: 0,
        final_x: anchor_x,
        clipped: anchor_x != st.x,
    }];

    let mut prev = anchor_x;
    for i in anchor + 1..m {
        let (lo, hi) = template.segment_bounds(i);
        let coarse = (prev + cfg.delta_min).max(lo);
        let win_lo = (prev + cfg.delta_min).max(lo);
        let step = refine_step(cfg, side, st, i, template.feed_x(i), coarse, psi_ref, win_lo, hi);
        pa[i] = step.final_x;
        prev = step.final_x;
        steps.push(step);
    }

    let mut prev = anchor_x;
    for i in (0..anchor).rev() {
        let (lo, hi) = template.segment_bounds(i);
        let coarse = (prev - cfg.delta_min).min(hi);
        let win_hi = (prev - cfg.delta_min).min(hi);
        let step = refine_step(cfg, side, st, i, template.feed_x(i), coarse, psi_ref, lo, win_hi);
        pa[i] = step.final_x;
        prev = step.final_x;
        steps.push(step);
    }

    steps.sort_by_key(|s| s.segment_index);
    let layout = template.with_positions(pa).expect("refined positions stay in bounds");
    ChainPlacement { layout, steps, anchor_index: anchor }
}

/// Outcome of an element-wise search.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub layout: SwanLayout,
    pub objective: f64,
    pub cycles: usize,
    /// Grid points skipped because the objective was not finite there.
    pub skipped_non_finite: usize,
}

/// Element-wise (coordinate-wise) maximization of `objective` over PA
/// position vectors.
///
/// Cycles through the segments; for each, scans a `grid_step` grid across
/// the segment, keeping the best feasible candidate (ties broken toward the
/// smallest x). Terminates when a full cycle improves the objective by less
/// than `rel_tol` (fractionally) or after `max_iters` cycles. The objective
/// value never decreases across accepted updates.
pub fn elementwise_search<F, G>(
    objective: F,
    feasible: G,
    init: &SwanLayout,
    sc: &SearchConfig,
) -> Result<SearchOutcome, PlacementError>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> bool,
{
    if !(sc.grid_step > 0.0) || !(sc.rel_tol > 0.0) || sc.max_iters == 0 {
        return Err(PlacementError::InvalidConfig(
            "grid_step, rel_tol, and max_iters must be positive".into(),
        ));
    }
    let mut pa = init.pa_x().to_vec();
    if !feasible(&pa) {
        return Err(PlacementError::InfeasibleInitial);
    }
    let mut best = objective(&pa);
    if !best.is_finite() {
        return Err(PlacementError::NonFiniteObjective);
    }

    let mut skipped = 0usize;
    let mut cycles = 0usize;
    for _ in 0..sc.max_iters {
        cycles += 1;
        let cycle_start = best;
        for n in 0..init.n_segments() {
            let (lo, hi) = init.segment_bounds(n);
            let current_x = pa[n];
            // Lowest feasible x wins ties, including against the incumbent.
            let mut best_here = (best, current_x);
            let steps = ((hi - lo) / sc.grid_step).floor() as usize;
            let mut candidates: Vec<f64> = (0..=steps).map(|j| lo + j as f64 * sc.grid_step).collect();
            if hi - candidates.last().copied().unwrap_or(lo) > 1e-12 {
                candidates.push(hi);
            }
            for x in candidates {
                pa[n] = x;
                if !feasible(&pa) {
                    continue;
                }
                let val = objective(&pa);
                if !val.is_finite() {
                    skipped += 1;
                    continue;
                }
                let better = val > best_here.0 || (val == best_here.0 && x < best_here.1);
                if better {
                    best_here = (val, x);
                }
            }
            pa[n] = best_here.1;
            debug_assert!(best_here.0 >= best, "objective decreased during a coordinate update");
            best = best_here.0;
        }
        let denom = cycle_start.abs().max(1e-12);
        if (best - cycle_start) / denom < sc.rel_tol {
            break;
        }
    }

    let layout = init
        .with_positions(pa)
        .expect("accepted candidates are always inside their segments");
    Ok(SearchOutcome { layout, objective: best, cycles, skipped_non_finite: skipped })
}
