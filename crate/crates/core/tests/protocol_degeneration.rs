//! Cross-protocol consistency: single-segment layouts collapse all three
//! protocols onto one another, and the multi-user schedules follow the
//! expected budget and user-count trends.

mod common;

use swan_isac::experiment::{default_scenario, sample_users};
use swan_isac::pareto::{solve_sa_single, solve_sm_single, solve_ss_single};
use swan_isac::placement::SearchConfig;
use swan_isac::protocol::snr_and_rate;
use swan_isac::scenario::Position3D;
use swan_isac::tdma::{solve_sa_multi, solve_sm_multi, FloorRule, TdmaProblem};
use swan_isac::SwanLayout;

fn sc(step: f64) -> SearchConfig {
    SearchConfig { grid_step: step, max_iters: 50, rel_tol: 1e-6 }
}

/// With one segment per side and a slack floor, the aggregation solve
/// reduces to the selection solve. The guide is lossless so the closed-form
/// placement is exactly optimal, and the user sits on the search grid so
/// both land on the identical position.
#[test]
fn single_segment_sa_equals_ss() {
    let mut cfg = default_scenario();
    cfg.kappa_db_per_m = 0.0;
    let tx = SwanLayout::midpoints(1, 20.0);
    let rx = SwanLayout::midpoints(1, 20.0);
    let cu = Position3D::ground(5.0, 2.0);
    let st = Position3D::ground(12.0, -6.0);
    let gamma_sen = 1e-9;
    let ss = solve_ss_single(&cfg, &tx, &rx, &cu, &st, gamma_sen);
    let sa = solve_sa_single(&cfg, &tx, &rx, &cu, &st, gamma_sen, &sc(0.05));
    assert!(ss.feasible && sa.feasible);
    assert!(
        (ss.achieved_rate - sa.achieved_rate).abs() < 1e-9,
        "ss {} vs sa {}",
        ss.achieved_rate,
        sa.achieved_rate
    );
}

/// Scalar beamforming on one segment with the floor slack is plain MRT and
/// must match the selection closed form (lossless guide, on-grid user).
#[test]
fn single_segment_sm_equals_ss() {
    let mut cfg = default_scenario();
    cfg.kappa_db_per_m = 0.0;
    let tx = SwanLayout::midpoints(1, 20.0);
    let rx = SwanLayout::midpoints(1, 20.0);
    let cu = Position3D::ground(5.0, 2.0);
    let st = Position3D::ground(12.0, -6.0);
    let gamma_sen = 1e-9;
    let ss = solve_ss_single(&cfg, &tx, &rx, &cu, &st, gamma_sen);
    let sm = solve_sm_single(&cfg, &tx, &rx, &cu, &st, gamma_sen, &sc(0.05));
    assert!(ss.feasible && sm.feasible);
    assert!(
        (ss.achieved_rate - sm.achieved_rate).abs() < 1e-9,
        "ss {} vs sm {}",
        ss.achieved_rate,
        sm.achieved_rate
    );
}

/// Feasible points re-checked through the metrics path meet their floor.
#[test]
fn feasible_points_satisfy_recomputed_floor() {
    let mut cfg = default_scenario();
    cfg.d_x = 30.0;
    let tx = SwanLayout::midpoints(12, 2.5);
    let rx = SwanLayout::midpoints(12, 2.5);
    let cu = Position3D::ground(24.0, 0.0);
    let st = Position3D::ground(9.0, -6.0);
    for gamma in [3e-7, 3e-6, 3e-5] {
        for point in [
            solve_ss_single(&cfg, &tx, &rx, &cu, &st, gamma),
            solve_sa_single(&cfg, &tx, &rx, &cu, &st, gamma, &sc(0.05)),
            solve_sm_single(&cfg, &tx, &rx, &cu, &st, gamma, &sc(0.05)),
        ] {
            if !point.feasible {
                continue;
            }
            let sol = point.solution.as_ref().unwrap();
            let m = snr_and_rate(&cfg, sol, &cu, &st, cfg.p_max, 1).unwrap();
            assert!(m.gamma_s >= gamma * (1.0 - 1e-9));
            assert!((m.rate - point.achieved_rate).abs() <= 1e-12 * point.achieved_rate.max(1.0));
        }
    }
}

#[test]
fn sum_rate_grows_with_budget() {
    let cfg = default_scenario();
    let tx = SwanLayout::midpoints(8, 2.5);
    let rx = SwanLayout::midpoints(8, 2.5);
    let cus = sample_users(&cfg, 3, 11);
    let st = Position3D::ground(10.0, -6.0);
    let mut last = 0.0;
    let mut carried: Option<swan_isac::tdma::TdmaSolution> = None;
    for p_max in [0.02, 0.05, 0.1, 0.2, 0.5] {
        let prob = TdmaProblem {
            cus: cus.clone(),
            st,
            gamma_sen: 1e-6,
            gamma_com: 0.25,
            p_max,
        };
        let mut sol = solve_sa_multi(&cfg, &prob, &tx, &rx, &sc(0.1), FloorRule::TdmaScaled);
        if let Some(prev) = &carried {
            if let Some(re) = swan_isac::tdma::rescore_solution(&cfg, &prob, prev, FloorRule::TdmaScaled) {
                if !sol.feasible || re.sum_rate > sol.sum_rate {
                    sol = re;
                }
            }
        }
        let rate = if sol.feasible { sol.sum_rate } else { 0.0 };
        assert!(rate >= last - 1e-12, "sum rate dropped as the budget grew");
        last = rate;
        if sol.feasible {
            carried = Some(sol);
        }
    }
    assert!(last > 0.0, "largest budget should be feasible");
}

#[test]
fn sum_rate_shrinks_with_more_users() {
    let cfg = default_scenario();
    let tx = SwanLayout::midpoints(8, 2.5);
    let rx = SwanLayout::midpoints(8, 2.5);
    let all = sample_users(&cfg, 4, 5);
    let st = Position3D::ground(10.0, -6.0);
    let mut last = f64::INFINITY;
    for k in 1..=4usize {
        let prob = TdmaProblem {
            cus: all[..k].to_vec(),
            st,
            gamma_sen: 1e-6,
            gamma_com: 0.1,
            p_max: cfg.p_max,
        };
        let sol = solve_sa_multi(&cfg, &prob, &tx, &rx, &sc(0.1), FloorRule::TdmaScaled);
        assert!(sol.feasible, "k = {k} should be feasible at this floor");
        assert!(sol.sum_rate <= last + 1e-12, "sum rate rose from k={} to k={k}", k - 1);
        last = sol.sum_rate;
    }
}

/// Alternating optimization never decreases its objective.
#[test]
fn sm_ao_trace_is_nondecreasing_over_seeds() {
    let cfg = default_scenario();
    let tx = SwanLayout::midpoints(6, 10.0 / 3.0);
    let rx = SwanLayout::midpoints(6, 10.0 / 3.0);
    let st = Position3D::ground(10.0, -6.0);
    let mut nontrivial = 0;
    for seed in 0..20 {
        let cus = sample_users(&cfg, 2 + (seed as usize % 2), common::child_seed(400, seed));
        let prob = TdmaProblem {
            cus,
            st,
            gamma_sen: 1e-6,
            gamma_com: 0.25,
            p_max: cfg.p_max,
        };
        let sol = solve_sm_multi(&cfg, &prob, &tx, &rx, &sc(0.1), 0.1, FloorRule::TdmaScaled);
        if !sol.feasible {
            continue;
        }
        let trace = sol.ao_trace.as_ref().expect("feasible multiplexing schedules carry a trace");
        assert!(!trace.is_empty());
        for w in trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "seed {seed}: objective decreased: {trace:?}");
        }
        if trace.len() > 1 {
            nontrivial += 1;
        }
    }
    assert!(nontrivial >= 10, "most seeds should run at least one full round");
}

/// The schedule layouts are shared across slots: one placement, K power
/// levels.
#[test]
fn pinch_multiplexing_uses_one_placement() {
    let cfg = default_scenario();
    let tx = SwanLayout::midpoints(6, 10.0 / 3.0);
    let rx = SwanLayout::midpoints(6, 10.0 / 3.0);
    let cus = sample_users(&cfg, 3, 8);
    let st = Position3D::ground(10.0, -6.0);
    let prob = TdmaProblem { cus, st, gamma_sen: 1e-6, gamma_com: 0.25, p_max: cfg.p_max };
    let sol = solve_sa_multi(&cfg, &prob, &tx, &rx, &sc(0.1), FloorRule::TdmaScaled);
    assert!(sol.feasible);
    assert_eq!(sol.per_slot_power.len(), 3);
    assert_eq!(sol.per_slot_rates.len(), 3);
    // Per-slot rates recompute from the single shared placement.
    for (k, (&p, &r)) in sol.per_slot_power.iter().zip(&sol.per_slot_rates).enumerate() {
        let m = snr_and_rate(
            &cfg,
            &swan_isac::ProtocolSolution {
                tx: sol.tx.clone(),
                rx: sol.rx.clone(),
                weights: swan_isac::SegmentWeights::Aggregation,
            },
            &prob.cus[k],
            &st,
            p,
            prob.k(),
        )
        .unwrap();
        assert!((m.rate - r).abs() < 1e-12, "slot {k} rate mismatch");
        assert!(m.gamma_s >= prob.gamma_sen * (1.0 - 1e-9), "slot {k} floor violated");
        assert!(m.rate >= prob.gamma_com * (1.0 - 1e-9), "slot {k} rate floor violated");
    }
}
