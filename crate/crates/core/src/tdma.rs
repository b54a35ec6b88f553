//! Multi-user TDMA scheduling with pinch multiplexing: antenna positions are
//! optimized once for all slots, while per-slot powers (and, for the
//! multiplexing protocol, per-slot beamformers) come from a water-filling
//! allocation under sensing and rate floors.

use thiserror::Error;

use crate::beamforming::epsilon_beamformer;
use crate::channel::cascaded_channels;
use crate::cvec::ComplexVector;
use crate::layout::SwanLayout;
use crate::placement::{coarse_placement, elementwise_search, rx_chain_placement, SearchConfig};
use crate::protocol::{Protocol, ProtocolSolution, SegmentWeights};
use crate::scenario::{Position3D, ScenarioConfig, Side};

#[derive(Debug, Error, PartialEq)]
pub enum TdmaError {
    #[error("infeasible QoS: per-slot power floors exceed the budget")]
    InfeasibleQos,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// How the per-slot rate floor converts into an SNR floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FloorRule {
    /// Rate floor applies to the TDMA rate `(1/K)·log2(1+γ)`, so the SNR
    /// floor is `2^(K·Γ_com) − 1`.
    #[default]
    TdmaScaled,
    /// SNR floor `2^(Γ_com) − 1`, ignoring the TDMA prefactor.
    PaperLiteral,
}

impl FloorRule {
    /// Minimum per-slot communication SNR implied by a rate floor.
    pub fn snr_floor(&self, gamma_com: f64, k_users: usize) -> f64 {
        match self {
            FloorRule::TdmaScaled => (k_users as f64 * gamma_com).exp2() - 1.0,
            FloorRule::PaperLiteral => gamma_com.exp2() - 1.0,
        }
    }
}

/// A multi-user scheduling instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TdmaProblem {
    pub cus: Vec<Position3D>,
    pub st: Position3D,
    /// Linear sensing-SNR floor, enforced every slot.
    pub gamma_sen: f64,
    /// Per-user rate floor in bits/s/Hz.
    pub gamma_com: f64,
    /// Total power budget in W.
    pub p_max: f64,
}

impl TdmaProblem {
    pub fn k(&self) -> usize {
        self.cus.len()
    }
}

/// Result of a water-filling allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterFill {
    pub powers: Vec<f64>,
    pub water_level: f64,
}

/// Maximizes `Σ log2(1 + P_k·g̃_k)` subject to `Σ P_k = p_max` and
/// `P_k ≥ floors[k]`: the allocation is `P_k = max(floor_k, W − 1/g̃_k)`
/// with the water level `W` found by bisection on the monotone total-power
/// curve, then solved exactly on the identified linear piece.
pub fn water_fill(g_tilde: &[f64], floors: &[f64], p_max: f64) -> Result<WaterFill, TdmaError> {
    if g_tilde.len() != floors.len() || g_tilde.is_empty() {
        return Err(TdmaError::InvalidArgument("mismatched or empty slot vectors".into()));
    }
    assert!(g_tilde.iter().all(|&g| g > 0.0 && g.is_finite()), "per-watt SNRs must be positive");
    assert!(floors.iter().all(|&f| f >= 0.0 && f.is_finite()), "floors must be nonnegative");
    assert!(p_max > 0.0, "budget must be positive");

    let floor_sum: f64 = floors.iter().sum();
    if floor_sum > p_max * (1.0 + 1e-12) {
        return Err(TdmaError::InfeasibleQos);
    }

    let inv_g: Vec<f64> = g_tilde.iter().map(|&g| 1.0 / g).collect();
    let total_at = |w: f64| -> f64 {
        floors
            .iter()
            .zip(&inv_g)
            .map(|(&f, &ig)| (w - ig).max(f))
            .sum()
    };

    let mut lo = 0.0f64;
    let mut hi = inv_g.iter().cloned().fold(0.0, f64::max) + p_max + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total_at(mid) > p_max {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-10 * hi.max(1.0) {
            break;
        }
    }
    let mut w = 0.5 * (lo + hi);

    // Solve the final linear piece exactly so the budget is machine-tight.
    for _ in 0..g_tilde.len() + 1 {
        let active: Vec<usize> = (0..g_tilde.len())
            .filter(|&k| w - inv_g[k] > floors[k])
            .collect();
        if active.is_empty() {
            break;
        }
        let inactive_floor: f64 = (0..g_tilde.len())
            .filter(|k| !active.contains(k))
            .map(|k| floors[k])
            .sum();
        let active_inv: f64 = active.iter().map(|&k| inv_g[k]).sum();
        let w_exact = (p_max - inactive_floor + active_inv) / active.len() as f64;
        if (w_exact - w).abs() <= 1e-15 * w.abs().max(1.0) {
            w = w_exact;
            break;
        }
        w = w_exact;
    }

    let powers: Vec<f64> = floors
        .iter()
        .zip(&inv_g)
        .map(|(&f, &ig)| (w - ig).max(f))
        .collect();
    Ok(WaterFill { powers, water_level: w })
}

/// A feasible multi-slot schedule, or the zero-rate infeasible marker.
#[derive(Debug, Clone, PartialEq)]
pub struct TdmaSolution {
    pub protocol: Protocol,
    pub tx: SwanLayout,
    pub rx: SwanLayout,
    pub per_slot_power: Vec<f64>,
    pub per_slot_rates: Vec<f64>,
    /// Power-split coefficients per slot (multiplexing protocol only).
    pub per_slot_eps: Option<Vec<f64>>,
    /// Unit-norm transmit beamformers per slot (multiplexing protocol only).
    pub per_slot_beamformers: Option<Vec<ComplexVector>>,
    /// Active (tx, rx) segment indices (selection protocol only).
    pub selection: Option<(usize, usize)>,
    /// Objective value after each alternating-optimization round
    /// (multiplexing protocol only).
    pub ao_trace: Option<Vec<f64>>,
    pub sum_rate: f64,
    pub water_level: Option<f64>,
    pub feasible: bool,
}

impl TdmaSolution {
    fn infeasible(protocol: Protocol, tx: SwanLayout, rx: SwanLayout) -> Self {
        Self {
            protocol,
            tx,
            rx,
            per_slot_power: vec![],
            per_slot_rates: vec![],
            per_slot_eps: None,
            per_slot_beamformers: None,
            selection: None,
            ao_trace: None,
            sum_rate: 0.0,
            water_level: None,
            feasible: false,
        }
    }
}

/// Per-slot per-watt SNRs for one placement.
struct SlotGains {
    g_c: Vec<f64>,
    g_s: Vec<f64>,
}

fn floors_for(prob: &TdmaProblem, gains: &SlotGains, rule: FloorRule) -> Vec<f64> {
    let snr_floor = rule.snr_floor(prob.gamma_com, prob.k());
    gains
        .g_c
        .iter()
        .zip(&gains.g_s)
        .map(|(&gc, &gs)| {
            let sensing = if prob.gamma_sen > 0.0 { prob.gamma_sen / gs } else { 0.0 };
            let com = if snr_floor > 0.0 { snr_floor / gc } else { 0.0 };
            sensing.max(com)
        })
        .collect()
}

struct Scored {
    wf: WaterFill,
    rates: Vec<f64>,
    sum_rate: f64,
}

fn score_gains(prob: &TdmaProblem, gains: &SlotGains, rule: FloorRule) -> Option<Scored> {
    if gains.g_s.iter().any(|&g| !(g > 0.0)) || gains.g_c.iter().any(|&g| !(g > 0.0)) {
        return None;
    }
    let floors = floors_for(prob, gains, rule);
    let wf = water_fill(&gains.g_c, &floors, prob.p_max).ok()?;
    let k = prob.k() as f64;
    let rates: Vec<f64> = wf
        .powers
        .iter()
        .zip(&gains.g_c)
        .map(|(&p, &g)| (1.0 + p * g).log2() / k)
        .collect();
    let sum_rate = rates.iter().sum();
    Some(Scored { wf, rates, sum_rate })
}

fn selection_gains(
    cfg: &ScenarioConfig,
    prob: &TdmaProblem,
    tx: &SwanLayout,
    rx: &SwanLayout,
    tx_index: usize,
    rx_index: usize,
) -> Option<SlotGains> {
    let sol = ProtocolSolution {
        tx: tx.clone(),
        rx: rx.clone(),
        weights: SegmentWeights::Selection { tx_index, rx_index },
    };
    let mut g_c = Vec::with_capacity(prob.k());
    let mut g_s = Vec::with_capacity(prob.k());
    for cu in &prob.cus {
        let m = crate::protocol::snr_and_rate(cfg, &sol, cu, &prob.st, 1.0, 1).ok()?;
        g_c.push(m.gamma_c);
        g_s.push(m.gamma_s);
    }
    Some(SlotGains { g_c, g_s })
}

/// Selection-protocol schedule: the echo PA sits at the target, and a single
/// transmit position is grid-searched over the whole waveguide with the
/// water-filling value as the score.
pub fn solve_ss_multi(
    cfg: &ScenarioConfig,
    prob: &TdmaProblem,
    tx_template: &SwanLayout,
    rx_template: &SwanLayout,
    sc: &SearchConfig,
    rule: FloorRule,
) -> TdmaSolution {
    let x_r = prob.st.x.clamp(0.0, rx_template.span());
    let rx_seg = rx_template.segment_of(x_r);
    let mut rx = SwanLayout::midpoints(rx_template.n_segments(), rx_template.segment_len());
    rx.set_pa_x(rx_seg, x_r.clamp(rx.segment_bounds(rx_seg).0, rx.segment_bounds(rx_seg).1));

    let span = tx_template.span();
    let steps = (span / sc.grid_step).floor() as usize;
    let mut best: Option<(f64, f64, Scored, SwanLayout, usize)> = None;
    for j in 0..=steps {
        let x = (j as f64 * sc.grid_step).min(span);
        let seg = tx_template.segment_of(x);
        let mut tx = SwanLayout::midpoints(tx_template.n_segments(), tx_template.segment_len());
        let (lo, hi) = tx.segment_bounds(seg);
        tx.set_pa_x(seg, x.clamp(lo, hi));
        let Some(gains) = selection_gains(cfg, prob, &tx, &rx, seg, rx_seg) else {
            continue;
        };
        let Some(scored) = score_gains(prob, &gains, rule) else {
            continue;
        };
        let better = match &best {
            None => true,
            Some((best_rate, best_x, ..)) => {
                scored.sum_rate > *best_rate
                    || (scored.sum_rate == *best_rate && x < *best_x)
            }
        };
        if better {
            best = Some((scored.sum_rate, x, scored, tx, seg));
        }
    }

    match best {
        Some((_, _, scored, tx, seg)) => TdmaSolution {
            protocol: Protocol::Ss,
            tx,
            rx,
            per_slot_power: scored.wf.powers,
            per_slot_rates: scored.rates,
            per_slot_eps: None,
            per_slot_beamformers: None,
            selection: Some((seg, rx_seg)),
            ao_trace: None,
            sum_rate: scored.sum_rate,
            water_level: Some(scored.wf.water_level),
            feasible: true,
        },
        None => TdmaSolution::infeasible(
            Protocol::Ss,
            SwanLayout::midpoints(tx_template.n_segments(), tx_template.segment_len()),
            rx,
        ),
    }
}

fn aggregation_gains(
    cfg: &ScenarioConfig,
    prob: &TdmaProblem,
    tx: &SwanLayout,
    rx: &SwanLayout,
) -> Option<SlotGains> {
    let sol = ProtocolSolution {
        tx: tx.clone(),
        rx: rx.clone(),
        weights: SegmentWeights::Aggregation,
    };
    let mut g_c = Vec::with_capacity(prob.k());
    let mut g_s = Vec::with_capacity(prob.k());
    for cu in &prob.cus {
        let m = crate::protocol::snr_and_rate(cfg, &sol, cu, &prob.st, 1.0, 1).ok()?;
        g_c.push(m.gamma_c);
        g_s.push(m.gamma_s);
    }
    Some(SlotGains { g_c, g_s })
}

/// Candidate transmit-side starting layouts, most promising first.
fn tx_start_candidates(
    cfg: &ScenarioConfig,
    prob: &TdmaProblem,
    tx_template: &SwanLayout,
) -> Vec<SwanLayout> {
    let mut starts = vec![
        rx_chain_placement(cfg, tx_template, Side::Tx, &prob.st).layout,
        coarse_placement(cfg, tx_template, Side::Tx, &prob.st),
        SwanLayout::midpoints(tx_template.n_segments(), tx_template.segment_len()),
    ];
    if !prob.cus.is_empty() {
        let centroid_x = prob.cus.iter().map(|c| c.x).sum::<f64>() / prob.k() as f64;
        let centroid = Position3D::ground(centroid_x.clamp(0.0, tx_template.span()), 0.0);
        starts.push(coarse_placement(cfg, tx_template, Side::Tx, &centroid));
    }
    starts.dedup();
    starts
}

/// Aggregation-protocol schedule: echo side from the phase-aligned chain,
/// transmit side by the element-wise search with a water-filling allocation
/// evaluated at every candidate.
pub fn solve_sa_multi(
    cfg: &ScenarioConfig,
    prob: &TdmaProblem,
    tx_template: &SwanLayout,
    rx_template: &SwanLayout,
    sc: &SearchConfig,
    rule: FloorRule,
) -> TdmaSolution {
    let rx = rx_chain_placement(cfg, rx_template, Side::Rx, &prob.st).layout;
    let score = |x: &[f64]| -> Option<Scored> {
        let tx = tx_template.with_positions(x.to_vec()).ok()?;
        let gains = aggregation_gains(cfg, prob, &tx, &rx)?;
        score_gains(prob, &gains, rule)
    };

    // The coordinate search is local, so try every feasible anchor and keep
    // the best schedule.
    let starts: Vec<SwanLayout> = tx_start_candidates(cfg, prob, tx_template)
        .into_iter()
        .filter(|layout| score(layout.pa_x()).is_some())
        .collect();
    if starts.is_empty() {
        let marker = SwanLayout::midpoints(tx_template.n_segments(), tx_template.segment_len());
        return TdmaSolution::infeasible(Protocol::Sa, marker, rx);
    }

    let outcome = starts
        .iter()
        .map(|start| {
            elementwise_search(
                |x| score(x).map(|s| s.sum_rate).unwrap_or(f64::NEG_INFINITY),
                |x| tx_template.check_positions(x, cfg.delta_min) && score(x).is_some(),
                start,
                sc,
            )
            .expect("start is feasible by construction")
        })
        .max_by(|a, b| a.objective.partial_cmp(&b.objective).expect("finite objectives"))
        .expect("at least one start");

    let tx = outcome.layout;
    let scored = score(tx.pa_x()).expect("accepted layout scores");
    TdmaSolution {
        protocol: Protocol::Sa,
        tx,
        rx,
        per_slot_power: scored.wf.powers,
        per_slot_rates: scored.rates,
        per_slot_eps: None,
        per_slot_beamformers: None,
        selection: None,
        ao_trace: None,
        sum_rate: scored.sum_rate,
        water_level: Some(scored.wf.water_level),
        feasible: true,
    }
}

/// Per-slot unit beamformer directions and gains for a fixed power split.
struct SmDesign {
    gains: SlotGains,
    directions: Vec<ComplexVector>,
}

fn sm_design(
    cfg: &ScenarioConfig,
    prob: &TdmaProblem,
    tx: &SwanLayout,
    f_s_norm_sq: f64,
    eps: &[f64],
) -> Option<SmDesign> {
    let h_s = cascaded_channels(cfg, tx, Side::Tx, &prob.st).ok()?;
    let mut g_c = Vec::with_capacity(prob.k());
    let mut g_s = Vec::with_capacity(prob.k());
    let mut directions = Vec::with_capacity(prob.k());
    for (cu, &e) in prob.cus.iter().zip(eps) {
        let h_c = cascaded_channels(cfg, tx, Side::Tx, cu).ok()?;
        // Unit-power direction; conjugated channels bridge the bilinear
        // metric convention to the beamformer's Hermitian one.
        let w = epsilon_beamformer(&h_c.conj(), &h_s.conj(), 1.0, e).ok()?;
        let gc = h_c.dot_t(&w).norm_sqr() / cfg.sigma_c_sq;
        let gs = cfg.alpha * f_s_norm_sq * h_s.dot_t(&w).norm_sqr() / cfg.sigma_s_sq;
        if !(gc > 0.0) || !(gs > 0.0) {
            return None;
        }
        g_c.push(gc);
        g_s.push(gs);
        directions.push(w);
    }
    Some(SmDesign { gains: SlotGains { g_c, g_s }, directions })
}

/// Multiplexing-protocol schedule via alternating optimization: the echo
/// side (coarse placement + MRC) is slot-invariant; transmit positions and
/// the per-slot power-split coefficients ε are optimized in turns, each
/// evaluation scored by water-filling. The objective never decreases across
/// accepted updates.
pub fn solve_sm_multi(
    cfg: &ScenarioConfig,
    prob: &TdmaProblem,
    tx_template: &SwanLayout,
    rx_template: &SwanLayout,
    sc: &SearchConfig,
    eps_step: f64,
    rule: FloorRule,
) -> TdmaSolution {
    assert!(eps_step > 0.0 && eps_step <= 1.0, "eps_step must lie in (0, 1]");
    let rx = coarse_placement(cfg, rx_template, Side::Rx, &prob.st);
    let f_s = match cascaded_channels(cfg, &rx, Side::Rx, &prob.st) {
        Ok(f) => f,
        Err(_) => return TdmaSolution::infeasible(Protocol::Sm, tx_template.clone(), rx),
    };
    let f_s_norm_sq = f_s.norm_sq();
    if f_s_norm_sq == 0.0 {
        return TdmaSolution::infeasible(Protocol::Sm, tx_template.clone(), rx);
    }

    let eps_grid: Vec<f64> = {
        let mut grid = vec![];
        let mut e = 0.0f64;
        while e < 1.0 + 1e-12 {
            grid.push(e.min(1.0));
            e += eps_step;
        }
        grid
    };

    let score = |x: &[f64], eps: &[f64]| -> Option<(Scored, SmDesign)> {
        let tx = tx_template.with_positions(x.to_vec()).ok()?;
        let design = sm_design(cfg, prob, &tx, f_s_norm_sq, eps)?;
        let scored = score_gains(prob, &design.gains, rule)?;
        Some((scored, design))
    };

    // Communication-first split (eps = 0 everywhere); when the sensing floor
    // makes a start infeasible, fall back to the most sensing-favorable
    // split. The alternating loop runs from every feasible anchor and the
    // best schedule wins.
    let mut inits: Vec<(SwanLayout, Vec<f64>)> = Vec::new();
    for candidate in tx_start_candidates(cfg, prob, tx_template) {
        for trial_eps in [vec![0.0; prob.k()], vec![eps_grid[eps_grid.len() - 1]; prob.k()]] {
            if score(candidate.pa_x(), &trial_eps).is_some() {
                inits.push((candidate, trial_eps));
                break;
            }
        }
    }
    if inits.is_empty() {
        return TdmaSolution::infeasible(Protocol::Sm, tx_template.clone(), rx);
    }

    let mut best_state: Option<(f64, SwanLayout, Vec<f64>, Vec<f64>)> = None;
    for (mut layout, mut eps) in inits {
        let mut best = score(layout.pa_x(), &eps).expect("start is feasible").0.sum_rate;
        let mut trace = vec![best];
        for _ in 0..sc.max_iters {
            let round_start = best;

            // (i) transmit positions under the current split.
            let eps_fixed = eps.clone();
            if let Ok(out) = elementwise_search(
                |x| score(x, &eps_fixed).map(|(s, _)| s.sum_rate).unwrap_or(f64::NEG_INFINITY),
                |x| tx_template.check_positions(x, cfg.delta_min) && score(x, &eps_fixed).is_some(),
                &layout,
                sc,
            ) {
                layout = out.layout;
                best = best.max(out.objective);
            }

            // (ii) per-slot one-dimensional split search.
            for k in 0..prob.k() {
                let saved = eps[k];
                let mut chosen = saved;
                for &e in &eps_grid {
                    eps[k] = e;
                    if let Some((s, _)) = score(layout.pa_x(), &eps) {
                        if s.sum_rate > best {
                            best = s.sum_rate;
                            chosen = e;
                        }
                    }
                }
                eps[k] = chosen;
            }

            trace.push(best);
            let denom = round_start.abs().max(1e-12);
            if (best - round_start) / denom < sc.rel_tol {
                break;
            }
        }
        let final_rate = score(layout.pa_x(), &eps).expect("final state is feasible").0.sum_rate;
        if best_state.as_ref().map_or(true, |(r, ..)| final_rate > *r) {
            best_state = Some((final_rate, layout, eps, trace));
        }
    }
    let (_, layout, eps, trace) = best_state.expect("at least one feasible init");

    let (scored, design) = score(layout.pa_x(), &eps).expect("final state is feasible");
    // Store unit-norm directions (renormalized if an orthogonal share was
    // dropped for parallel channels).
    let beams: Vec<ComplexVector> = design
        .directions
        .iter()
        .map(|w| w.normalized().unwrap_or_else(|_| ComplexVector::one_hot(w.len(), 0)))
        .collect();
    TdmaSolution {
        protocol: Protocol::Sm,
        tx: layout,
        rx,
        per_slot_power: scored.wf.powers,
        per_slot_rates: scored.rates,
        per_slot_eps: Some(eps),
        per_slot_beamformers: Some(beams),
        selection: None,
        ao_trace: Some(trace),
        sum_rate: scored.sum_rate,
        water_level: Some(scored.wf.water_level),
        feasible: true,
    }
}

/// Re-evaluates a previously found placement (and split) under a different
/// problem, e.g. a larger budget. Returns None when infeasible there.
pub fn rescore_solution(
    cfg: &ScenarioConfig,
    prob: &TdmaProblem,
    solution: &TdmaSolution,
    rule: FloorRule,
) -> Option<TdmaSolution> {
    if !solution.feasible {
        return None;
    }
    match solution.protocol {
        Protocol::Ss => {
            let (tx_index, rx_index) = solution.selection?;
            let gains = selection_gains(cfg, prob, &solution.tx, &solution.rx, tx_index, rx_index)?;
            let scored = score_gains(prob, &gains, rule)?;
            Some(TdmaSolution {
                per_slot_power: scored.wf.powers,
                per_slot_rates: scored.rates,
                sum_rate: scored.sum_rate,
                water_level: Some(scored.wf.water_level),
                ..solution.clone()
            })
        }
        Protocol::Sa => {
            let gains = aggregation_gains(cfg, prob, &solution.tx, &solution.rx)?;
            let scored = score_gains(prob, &gains, rule)?;
            Some(TdmaSolution {
                per_slot_power: scored.wf.powers,
                per_slot_rates: scored.rates,
                sum_rate: scored.sum_rate,
                water_level: Some(scored.wf.water_level),
                ..solution.clone()
            })
        }
        Protocol::Sm => {
            let eps = solution.per_slot_eps.clone()?;
            let f_s = cascaded_channels(cfg, &solution.rx, Side::Rx, &prob.st).ok()?;
            let design = sm_design(cfg, prob, &solution.tx, f_s.norm_sq(), &eps)?;
            let scored = score_gains(prob, &design.gains, rule)?;
            Some(TdmaSolution {
                per_slot_power: scored.wf.powers,
                per_slot_rates: scored.rates,
                sum_rate: scored.sum_rate,
                water_level: Some(scored.wf.water_level),
                ..solution.clone()
            })
        }
    }
}
