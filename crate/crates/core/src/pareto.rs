//! Single-user, single-target Pareto fronts: best communication rate under a
//! sensing-SNR floor, for each protocol.

use rayon::prelude::*;

use crate::beamforming::{mrc_combiner, subspace_beamformer, BeamformingError};
use crate::channel::cascaded_channels;
use crate::layout::SwanLayout;
use crate::placement::{coarse_placement, elementwise_search, rx_chain_placement, SearchConfig};
use crate::protocol::{snr_and_rate, Protocol, ProtocolSolution, SegmentWeights};
use crate::scenario::{Position3D, ScenarioConfig, Side};

/// One point of a rate-versus-sensing-threshold front.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoPoint {
    /// Linear sensing-SNR floor this point was solved for.
    pub gamma_sen_threshold: f64,
    /// Achieved rate in bits/s/Hz (NaN when infeasible).
    pub achieved_rate: f64,
    /// Echo SNR of the returned solution (NaN when infeasible).
    pub achieved_gamma_s: f64,
    /// For the selection protocol: the rate of the closed-form solution with
    /// in-waveguide loss ignored, for comparison against the loss-aware
    /// default.
    pub rate_lossless: Option<f64>,
    pub solution: Option<ProtocolSolution>,
    pub feasible: bool,
}

impl ParetoPoint {
    fn infeasible(gamma_sen: f64) -> Self {
        Self {
            gamma_sen_threshold: gamma_sen,
            achieved_rate: f64::NAN,
            achieved_gamma_s: f64::NAN,
            rate_lossless: None,
            solution: None,
            feasible: false,
        }
    }
}

/// Builds a selection-protocol solution with the active PAs at `x_t`/`x_r`
/// and the inactive ones parked at their segment midpoints.
fn build_ss_solution(
    tx_template: &SwanLayout,
    rx_template: &SwanLayout,
    x_t: f64,
    x_r: f64,
) -> (ProtocolSolution, usize, usize) {
    let place = |template: &SwanLayout, x: f64| -> (SwanLayout, usize) {
        let seg = template.segment_of(x);
        let mut layout = SwanLayout::midpoints(template.n_segments(), template.segment_len());
        let (lo, hi) = layout.segment_bounds(seg);
        layout.set_pa_x(seg, x.clamp(lo, hi));
        (layout, seg)
    };
    let (tx, n_idx) = place(tx_template, x_t);
    let (rx, m_idx) = place(rx_template, x_r);
    (
        ProtocolSolution {
            tx,
            rx,
            weights: SegmentWeights::Selection { tx_index: n_idx, rx_index: m_idx },
        },
        n_idx,
        m_idx,
    )
}

fn ss_gamma_s_at(
    cfg: &ScenarioConfig,
    tx_template: &SwanLayout,
    rx_template: &SwanLayout,
    cu: &Position3D,
    st: &Position3D,
    x_t: f64,
    x_r: f64,
) -> f64 {
    let (sol, _, _) = build_ss_solution(tx_template, rx_template, x_t, x_r);
    snr_and_rate(cfg, &sol, cu, st, cfg.p_max, 1).expect("valid selection").gamma_s
}

/// Closed-form selection-protocol solve.
///
/// The echo-side PA goes to the target's x-coordinate. The transmit PA goes
/// to the user's x-coordinate if that lies in the sensing-feasible interval
/// `x_s ± √(η⁴αP/(σ_s²·Γ·Δ_r,s²) − Δ_t,s²)`, otherwise to the nearest
/// endpoint. The interval neglects in-waveguide loss, so the default result
/// re-checks the floor with loss included and walks the PA toward the target
/// until it holds; the loss-free companion rate is reported alongside.
pub fn solve_ss_single(
    cfg: &ScenarioConfig,
    tx_template: &SwanLayout,
    rx_template: &SwanLayout,
    cu: &Position3D,
    st: &Position3D,
    gamma_sen: f64,
) -> ParetoPoint {
    let span = tx_template.span();
    let x_r = st.x.clamp(0.0, rx_template.span());
    let dt_sq = cfg.cross_distance_sq(Side::Tx, st);
    let dr_sq = cfg.cross_distance_sq(Side::Rx, st);

    let eta = cfg.eta();
    let halfwidth_sq = if gamma_sen == 0.0 {
        f64::INFINITY
    } else {
        eta.powi(4) * cfg.alpha * cfg.p_max / (cfg.sigma_s_sq * gamma_sen * dr_sq) - dt_sq
    };
    if halfwidth_sq < 0.0 {
        return ParetoPoint::infeasible(gamma_sen);
    }
    let hw = halfwidth_sq.sqrt();
    let lo = (st.x - hw).max(0.0);
    let hi = (st.x + hw).min(span);
    if lo > hi {
        return ParetoPoint::infeasible(gamma_sen);
    }
    let x_t_lossless = cu.x.clamp(lo, hi);

    // Loss-free companion: evaluate the closed-form point with kappa zeroed.
    let mut lossless_cfg = cfg.clone();
    lossless_cfg.kappa_db_per_m = 0.0;
    let (lossless_sol, _, _) = build_ss_solution(tx_template, rx_template, x_t_lossless, x_r);
    let rate_lossless = snr_and_rate(&lossless_cfg, &lossless_sol, cu, st, cfg.p_max, 1)
        .expect("valid selection")
        .rate;

    // Loss-aware default: the closed-form interval ignores the guided
    // attenuation, so the floor can be slightly violated there. Walk the PA
    // toward the target until the recomputed echo SNR meets the floor.
    let margin = 1.0 - 1e-9;
    let mut x_t = x_t_lossless;
    let gamma_at = |x: f64| ss_gamma_s_at(cfg, tx_template, rx_template, cu, st, x, x_r);
    if gamma_at(x_t) < gamma_sen * margin {
        if gamma_at(st.x.clamp(0.0, span)) < gamma_sen * margin {
            return ParetoPoint::infeasible(gamma_sen);
        }
        let (mut t_lo, mut t_hi) = (0.0f64, 1.0f64);
        let target = st.x.clamp(0.0, span);
        for _ in 0..80 {
            let mid = 0.5 * (t_lo + t_hi);
            let x = x_t_lossless + mid * (target - x_t_lossless);
            if gamma_at(x) >= gamma_sen * margin {
                t_hi = mid;
            } else {
                t_lo = mid;
            }
        }
        x_t = x_t_lossless + t_hi * (target - x_t_lossless);
    }

    let (sol, _, _) = build_ss_solution(tx_template, rx_template, x_t, x_r);
    let metrics = snr_and_rate(cfg, &sol, cu, st, cfg.p_max, 1).expect("valid selection");
    ParetoPoint {
        gamma_sen_threshold: gamma_sen,
        achieved_rate: metrics.rate,
        achieved_gamma_s: metrics.gamma_s,
        rate_lossless: Some(rate_lossless),
        solution: Some(sol),
        feasible: true,
    }
}

/// Makes a sensing-feasible starting layout for the transmit search, or
/// reports that the floor is unreachable.
fn feasible_tx_start<F>(
    cfg: &ScenarioConfig,
    tx_template: &SwanLayout,
    st: &Position3D,
    sc: &SearchConfig,
    gamma_s_of: F,
    gamma_sen: f64,
) -> Option<SwanLayout>
where
    F: Fn(&[f64]) -> f64 + Copy,
{
    let chain = rx_chain_placement(cfg, tx_template, Side::Tx, st).layout;
    if gamma_s_of(chain.pa_x()) >= gamma_sen {
        return Some(chain);
    }
    // The chain is only approximately echo-optimal; let the coordinate search
    // push the echo SNR before declaring the floor unreachable.
    let polish = SearchConfig { max_iters: 8, ..sc.clone() };
    let out = elementwise_search(
        gamma_s_of,
        |x| tx_template.check_positions(x, cfg.delta_min),
        &chain,
        &polish,
    )
    .ok()?;
    (out.objective >= gamma_sen).then_some(out.layout)
}

/// Aggregation-protocol solve: echo-side PAs from the phase-aligned chain,
/// transmit-side PAs from an element-wise search of the communication SNR
/// with the sensing floor checked at every candidate.
///
/// The search runs from every feasible start among a sensing-anchored chain
/// (phases aligned toward the target) and a user-anchored chain (phases
/// aligned toward the user), keeping the best result; the coordinate search
/// is local, so anchoring only at the target leaves rate behind whenever
/// the floor is slack.
pub fn solve_sa_single(
    cfg: &ScenarioConfig,
    tx_template: &SwanLayout,
    rx_template: &SwanLayout,
    cu: &Position3D,
    st: &Position3D,
    gamma_sen: f64,
    sc: &SearchConfig,
) -> ParetoPoint {
    let rx = rx_chain_placement(cfg, rx_template, Side::Rx, st).layout;
    let eval = |x: &[f64]| {
        let tx = tx_template.with_positions(x.to_vec()).expect("candidate in bounds");
        let sol = ProtocolSolution { tx, rx: rx.clone(), weights: SegmentWeights::Aggregation };
        snr_and_rate(cfg, &sol, cu, st, cfg.p_max, 1).expect("valid aggregation")
    };
    let gamma_s_of = |x: &[f64]| eval(x).gamma_s;
    let feasible =
        |x: &[f64]| tx_template.check_positions(x, cfg.delta_min) && eval(x).gamma_s >= gamma_sen;

    let mut starts: Vec<SwanLayout> = Vec::new();
    match feasible_tx_start(cfg, tx_template, st, sc, gamma_s_of, gamma_sen) {
        Some(start) => starts.push(start),
        None => return ParetoPoint::infeasible(gamma_sen),
    }
    let toward_user = rx_chain_placement(cfg, tx_template, Side::Tx, cu).layout;
    if feasible(toward_user.pa_x()) {
        starts.push(toward_user.clone());
    }
    starts.dedup();

    let mut outcome = starts
        .iter()
        .map(|start| {
            elementwise_search(|x| eval(x).gamma_c, feasible, start, sc)
                .expect("start is feasible by construction")
        })
        .max_by(|a, b| a.objective.partial_cmp(&b.objective).expect("finite objectives"))
        .expect("at least one start");

    // Floor-free solve (independent of the target): whenever its result
    // already meets the floor it is the exact answer, and identical floors
    // across target positions then return identical solutions.
    let unconstrained = elementwise_search(
        |x| eval(x).gamma_c,
        |x| tx_template.check_positions(x, cfg.delta_min),
        &toward_user,
        sc,
    )
    .expect("structural feasibility holds for chain placements");
    if eval(unconstrained.layout.pa_x()).gamma_s >= gamma_sen
        && unconstrained.objective > outcome.objective
    {
        outcome = unconstrained;
    }

    let tx = outcome.layout;
    let sol = ProtocolSolution { tx, rx, weights: SegmentWeights::Aggregation };
    let metrics = snr_and_rate(cfg, &sol, cu, st, cfg.p_max, 1).expect("valid aggregation");
    ParetoPoint {
        gamma_sen_threshold: gamma_sen,
        achieved_rate: metrics.rate,
        achieved_gamma_s: metrics.gamma_s,
        rate_lossless: None,
        solution: Some(sol),
        feasible: true,
    }
}

/// Multiplexing-protocol solve: echo side uses coarse placement plus MRC;
/// for each transmit grid candidate the rate-optimal beamformer under the
/// sensing floor is closed-form, and the element-wise search maximizes the
/// resulting rate.
pub fn solve_sm_single(
    cfg: &ScenarioConfig,
    tx_template: &SwanLayout,
    rx_template: &SwanLayout,
    cu: &Position3D,
    st: &Position3D,
    gamma_sen: f64,
    sc: &SearchConfig,
) -> ParetoPoint {
    let rx = coarse_placement(cfg, rx_template, Side::Rx, st);
    let f_s = cascaded_channels(cfg, &rx, Side::Rx, st).expect("target off the waveguide");
    let w_r = match mrc_combiner(&f_s) {
        Ok(w) => w,
        Err(_) => return ParetoPoint::infeasible(gamma_sen),
    };

    // Returns the unit-norm transmit weights and the rate they achieve, or
    // None when the sensing floor is out of reach at this candidate.
    let design = |x: &[f64]| -> Option<(crate::cvec::ComplexVector, f64)> {
        let tx = tx_template.with_positions(x.to_vec()).ok()?;
        let h_c = cascaded_channels(cfg, &tx, Side::Tx, cu).ok()?;
        let h_s = cascaded_channels(cfg, &tx, Side::Tx, st).ok()?;
        // The beamformer works in the Hermitian pairing; the cascaded
        // channels pair bilinearly, so hand it their conjugates.
        let bf = match subspace_beamformer(
            &h_c.conj(),
            &h_s.conj(),
            &f_s,
            cfg.p_max,
            gamma_sen,
            cfg.alpha,
            cfg.sigma_s_sq,
        ) {
            Ok(bf) => bf,
            Err(BeamformingError::InfeasibleSensing) => return None,
            Err(_) => return None,
        };
        let w_unit = bf.w.scaled(num_complex::Complex64::new(1.0 / cfg.p_max.sqrt(), 0.0));
        let gamma_c = cfg.p_max * h_c.dot_t(&w_unit).norm_sqr() / cfg.sigma_c_sq;
        Some((w_unit, (1.0 + gamma_c).log2()))
    };

    // Feasibility of the floor depends only on the sensing channel power;
    // start from the path-loss-greedy layout and polish if needed.
    let sensing_start = {
        let coarse = coarse_placement(cfg, tx_template, Side::Tx, st);
        if design(coarse.pa_x()).is_some() {
            Some(coarse)
        } else {
            let polish = SearchConfig { max_iters: 8, ..sc.clone() };
            let sensing_power = |x: &[f64]| {
                let tx = tx_template.with_positions(x.to_vec()).expect("in bounds");
                cascaded_channels(cfg, &tx, Side::Tx, st).map(|h| h.norm_sq()).unwrap_or(0.0)
            };
            elementwise_search(
                sensing_power,
                |x| tx_template.check_positions(x, cfg.delta_min),
                &coarse,
                &polish,
            )
            .ok()
            .and_then(|out| design(out.layout.pa_x()).is_some().then_some(out.layout))
        }
    };
    let Some(sensing_start) = sensing_start else {
        return ParetoPoint::infeasible(gamma_sen);
    };
    // A user-anchored start complements the target-anchored one (the
    // coordinate search is local).
    let mut starts = vec![sensing_start];
    let toward_user = coarse_placement(cfg, tx_template, Side::Tx, cu);
    if design(toward_user.pa_x()).is_some() {
        starts.push(toward_user);
    }
    starts.dedup();

    let mut outcome = starts
        .iter()
        .map(|start| {
            elementwise_search(
                |x| design(x).map(|(_, rate)| rate).unwrap_or(f64::NEG_INFINITY),
                |x| tx_template.check_positions(x, cfg.delta_min) && design(x).is_some(),
                start,
                sc,
            )
            .expect("start is feasible by construction")
        })
        .max_by(|a, b| a.objective.partial_cmp(&b.objective).expect("finite objectives"))
        .expect("at least one start");

    // Floor-free solve (target-independent): pure MRT rate maximization.
    // Its solution is exact whenever the floor happens to hold there.
    {
        let mrt_rate = |x: &[f64]| -> f64 {
            let Ok(tx) = tx_template.with_positions(x.to_vec()) else {
                return f64::NEG_INFINITY;
            };
            let Ok(h_c) = cascaded_channels(cfg, &tx, Side::Tx, cu) else {
                return f64::NEG_INFINITY;
            };
            (1.0 + cfg.p_max * h_c.norm_sq() / cfg.sigma_c_sq).log2()
        };
        let toward_user = coarse_placement(cfg, tx_template, Side::Tx, cu);
        let unconstrained = elementwise_search(
            mrt_rate,
            |x| tx_template.check_positions(x, cfg.delta_min),
            &toward_user,
            sc,
        )
        .expect("structural feasibility holds for coarse placements");
        if let Some((_, rate)) = design(unconstrained.layout.pa_x()) {
            if rate > outcome.objective {
                outcome = crate::placement::SearchOutcome { objective: rate, ..unconstrained };
            }
        }
    }

    let tx = outcome.layout;
    let (w_t, _) = design(tx.pa_x()).expect("accepted layout is feasible");
    let sol = ProtocolSolution { tx, rx, weights: SegmentWeights::Multiplexing { w_t, w_r } };
    let metrics = snr_and_rate(cfg, &sol, cu, st, cfg.p_max, 1).expect("valid multiplexing");
    ParetoPoint {
        gamma_sen_threshold: gamma_sen,
        achieved_rate: metrics.rate,
        achieved_gamma_s: metrics.gamma_s,
        rate_lossless: None,
        solution: Some(sol),
        feasible: true,
    }
}

/// Solves one protocol across a sorted-ascending list of sensing floors.
///
/// Because the feasible sets are nested (a solution meeting a higher floor
/// meets every lower one), each point is refined with the best solution
/// found at any higher floor; the returned rates are therefore exactly
/// non-increasing and infeasible points are flagged rather than dropped.
pub fn pareto_sweep(
    protocol: Protocol,
    cfg: &ScenarioConfig,
    tx_template: &SwanLayout,
    rx_template: &SwanLayout,
    cu: &Position3D,
    st: &Position3D,
    thresholds: &[f64],
    sc: &SearchConfig,
) -> Vec<ParetoPoint> {
    debug_assert!(
        thresholds.windows(2).all(|w| w[0] <= w[1]),
        "thresholds must be sorted ascending"
    );
    let mut points: Vec<ParetoPoint> = thresholds
        .par_iter()
        .map(|&g| match protocol {
            Protocol::Ss => solve_ss_single(cfg, tx_template, rx_template, cu, st, g),
            Protocol::Sa => solve_sa_single(cfg, tx_template, rx_template, cu, st, g, sc),
            Protocol::Sm => solve_sm_single(cfg, tx_template, rx_template, cu, st, g, sc),
        })
        .collect();

    // Nested-feasibility refinement: adopt a higher-floor solution wherever
    // it beats the locally found one.
    for i in (0..points.len().saturating_sub(1)).rev() {
        let better_above = points[i + 1].feasible
            && (!points[i].feasible || points[i + 1].achieved_rate > points[i].achieved_rate);
        if better_above {
            let mut adopted = points[i + 1].clone();
            adopted.gamma_sen_threshold = points[i].gamma_sen_threshold;
            points[i] = adopted;
        }
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::default_scenario;

    fn pareto_setup() -> (ScenarioConfig, SwanLayout, SwanLayout, Position3D, Position3D) {
        let mut cfg = default_scenario();
        cfg.d_x = 30.0;
        let tx = SwanLayout::midpoints(10, 3.0);
        let rx = SwanLayout::midpoints(10, 3.0);
        let cu = Position3D::ground(24.0, 0.0);
        let st = Position3D::ground(10.0, -6.0);
        (cfg, tx, rx, cu, st)
    }

    #[test]
    fn vanishing_threshold_puts_pa_at_user() {
        let (cfg, tx, rx, cu, st) = pareto_setup();
        let p = solve_ss_single(&cfg, &tx, &rx, &cu, &st, 0.0);
        assert!(p.feasible);
        let sol = p.solution.unwrap();
        match sol.weights {
            SegmentWeights::Selection { tx_index, .. } => {
                assert!((sol.tx.pa_x()[tx_index] - cu.x).abs() < 1e-12);
            }
            _ => panic!("expected a selection solution"),
        }
    }

    #[test]
    fn colocated_user_and_target_align() {
        let (cfg, tx, rx, _, _) = pareto_setup();
        let shared = Position3D::ground(12.0, -6.0);
        let cu = Position3D::ground(12.0, 0.0);
        // A floor attainable at the target keeps the PA at the shared x.
        let max_gamma = {
            let p = solve_ss_single(&cfg, &tx, &rx, &cu, &shared, 0.0);
            p.achieved_gamma_s
        };
        let p = solve_ss_single(&cfg, &tx, &rx, &cu, &shared, max_gamma * 0.5);
        assert!(p.feasible);
        let sol = p.solution.unwrap();
        match sol.weights {
            SegmentWeights::Selection { tx_index, .. } => {
                assert!((sol.tx.pa_x()[tx_index] - 12.0).abs() < 1e-12);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn unreachable_floor_is_flagged_infeasible() {
        let (cfg, tx, rx, cu, st) = pareto_setup();
        let p = solve_ss_single(&cfg, &tx, &rx, &cu, &st, 1e6);
        assert!(!p.feasible);
        assert!(p.achieved_rate.is_nan());
        assert!(p.solution.is_none());
    }

    #[test]
    fn feasible_points_meet_their_floor() {
        let (cfg, tx, rx, cu, st) = pareto_setup();
        let sc = SearchConfig { grid_step: 0.05, ..Default::default() };
        for gamma in [1e-7, 1e-6, 1e-5] {
            for proto in [Protocol::Ss, Protocol::Sa, Protocol::Sm] {
                let p = match proto {
                    Protocol::Ss => solve_ss_single(&cfg, &tx, &rx, &cu, &st, gamma),
                    Protocol::Sa => solve_sa_single(&cfg, &tx, &rx, &cu, &st, gamma, &sc),
                    Protocol::Sm => solve_sm_single(&cfg, &tx, &rx, &cu, &st, gamma, &sc),
                };
                if p.feasible {
                    // Recompute through the metrics path as an independent check.
                    let sol = p.solution.as_ref().unwrap();
                    let m = snr_and_rate(&cfg, sol, &cu, &st, cfg.p_max, 1).unwrap();
                    assert!(
                        m.gamma_s >= gamma * (1.0 - 1e-9),
                        "{proto}: floor {gamma} missed with {}",
                        m.gamma_s
                    );
                }
            }
        }
    }

    #[test]
    fn sweep_handles_empty_and_singleton() {
        let (cfg, tx, rx, cu, st) = pareto_setup();
        let sc = SearchConfig { grid_step: 0.1, ..Default::default() };
        let empty = pareto_sweep(Protocol::Ss, &cfg, &tx, &rx, &cu, &st, &[], &sc);
        assert!(empty.is_empty());
        let single = pareto_sweep(Protocol::Ss, &cfg, &tx, &rx, &cu, &st, &[1e-6], &sc);
        assert_eq!(single.len(), 1);
        let direct = solve_ss_single(&cfg, &tx, &rx, &cu, &st, 1e-6);
        assert_eq!(single[0].achieved_rate.to_bits(), direct.achieved_rate.to_bits());
    }

    #[test]
    fn sweep_rates_are_non_increasing() {
        let (cfg, tx, rx, cu, st) = pareto_setup();
        let sc = SearchConfig { grid_step: 0.05, ..Default::default() };
        let thresholds: Vec<f64> = (0..10).map(|i| 1e-7 * 3f64.powi(i)).collect();
        for proto in [Protocol::Ss, Protocol::Sa, Protocol::Sm] {
            let front = pareto_sweep(proto, &cfg, &tx, &rx, &cu, &st, &thresholds, &sc);
            let mut last = f64::INFINITY;
            for p in &front {
                if p.feasible {
                    assert!(
                        p.achieved_rate <= last + 1e-12,
                        "{proto}: rate increased along the front"
                    );
                    last = p.achieved_rate;
                }
            }
        }
    }
}
