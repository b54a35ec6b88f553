//! Shared oracle implementations for the integration suites. Everything
//! here is deliberately independent of the library's solver paths: brute
//! force, exhaustive grids, and first-order methods only.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swan_isac::ComplexVector;

/// Euclidean projection onto `{q : q ≥ floors, Σ q = budget}` via the
/// sorted-threshold simplex algorithm applied to the shifted variables.
pub fn project_onto_floored_simplex(p: &[f64], floors: &[f64], budget: f64) -> Vec<f64> {
    let free_budget = budget - floors.iter().sum::<f64>();
    assert!(free_budget >= -1e-12, "projection target is empty");
    let v: Vec<f64> = p.iter().zip(floors).map(|(a, f)| a - f).collect();
    let mut sorted = v.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - free_budget) / (j + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        } else {
            break;
        }
    }
    v.iter()
        .zip(floors)
        .map(|(q, f)| (q - tau).max(0.0) + f)
        .collect()
}

/// Projected-gradient ascent for the floored water-filling problem:
/// maximize `Σ log2(1 + p_k g_k)` over the floored simplex. Armijo
/// backtracking keeps the ascent stable; the step cap keeps it a plain
/// first-order method.
pub fn waterfill_projected_gradient(
    g: &[f64],
    floors: &[f64],
    p_max: f64,
    max_iters: usize,
) -> Vec<f64> {
    let k = g.len();
    let objective = |p: &[f64]| -> f64 {
        p.iter().zip(g).map(|(&pk, &gk)| (1.0 + pk * gk).log2()).sum()
    };
    let gradient = |p: &[f64]| -> Vec<f64> {
        p.iter()
            .zip(g)
            .map(|(&pk, &gk)| gk / ((1.0 + pk * gk) * std::f64::consts::LN_2))
            .collect()
    };

    // Feasible start: floors plus an even share of the slack.
    let slack = p_max - floors.iter().sum::<f64>();
    let mut p: Vec<f64> = floors.iter().map(|&f| f + slack / k as f64).collect();
    let mut f_cur = objective(&p);
    for _ in 0..max_iters {
        let grad = gradient(&p);
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial: Vec<f64> = p.iter().zip(&grad).map(|(a, g)| a + step * g).collect();
            let projected = project_onto_floored_simplex(&trial, floors, p_max);
            let f_new = objective(&projected);
            let inner: f64 = grad
                .iter()
                .zip(projected.iter().zip(&p))
                .map(|(g, (new, old))| g * (new - old))
                .sum();
            if f_new >= f_cur + 1e-4 * inner {
                let delta: f64 = projected
                    .iter()
                    .zip(&p)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                p = projected;
                f_cur = f_new;
                moved = delta > 1e-14;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    p
}

pub fn random_complex_vec(rng: &mut ChaCha8Rng, n: usize) -> ComplexVector {
    ComplexVector::new(
        (0..n)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect(),
    )
    .unwrap()
}

/// Exhaustive two-stage grid search over the span of the normalized sensing
/// direction and the orthogonal communication component: maximizes
/// `|h_cᴴ w|²` over `w = √p (cosθ e^{jδ} ĥ_s + sinθ ĥ_{c⊥s})` subject to
/// the sensing floor. Each stage evaluates `grid × grid` points; the second
/// stage zooms around the first stage's winner.
pub struct SubspaceGridOracle {
    pub best_rate: f64,
    pub evaluated: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn subspace_grid_oracle(
    h_c: &ComplexVector,
    h_s: &ComplexVector,
    f_s: &ComplexVector,
    p: f64,
    gamma_sen: f64,
    alpha: f64,
    sigma_s_sq: f64,
    sigma_c_sq: f64,
    grid: usize,
) -> Option<SubspaceGridOracle> {
    let h_s_hat = h_s.normalized().ok()?;
    let proj = h_s_hat.dot_h(h_c);
    let residual = h_c.axpy(-proj, &h_s_hat);
    let residual_norm = residual.norm();
    let h_perp_hat = if residual_norm > 1e-12 {
        residual.scaled(Complex64::new(1.0 / residual_norm, 0.0))
    } else {
        return None;
    };

    // In this basis: |h_sᴴw|² = p cos²θ ‖h_s‖², independent of δ;
    // |h_cᴴw|² = p |cosθ e^{-jδ} conj(proj)... directly evaluated below.
    let sense_gain = |theta: f64| alpha * f_s.norm_sq() * p * theta.cos().powi(2) * h_s.norm_sq() / sigma_s_sq;
    let com_rate = |theta: f64, delta: f64| -> f64 {
        let c1 = Complex64::from_polar(theta.cos() * p.sqrt(), delta);
        let c2 = Complex64::new(theta.sin() * p.sqrt(), 0.0);
        let w = h_s_hat.scaled(c1).axpy(c2, &h_perp_hat);
        let gamma_c = h_c.dot_h(&w).norm_sqr() / sigma_c_sq;
        (1.0 + gamma_c).log2()
    };

    // Where the sensing constraint is exactly active; a grid line is pinned
    // there because constrained optima sit on this arc and would otherwise
    // be resolved only to first order.
    let boundary_theta = {
        let needed = gamma_sen * sigma_s_sq / (alpha * f_s.norm_sq() * p * h_s.norm_sq());
        (needed.sqrt().min(1.0)).acos()
    };

    let mut evaluated = 0usize;
    let mut center = (std::f64::consts::FRAC_PI_4, std::f64::consts::PI);
    let mut half_theta = std::f64::consts::FRAC_PI_4;
    let mut half_delta = std::f64::consts::PI;
    let mut best: Option<(f64, f64, f64)> = None;
    for _stage in 0..2 {
        let mut thetas: Vec<f64> = (0..grid)
            .map(|i| {
                (center.0 - half_theta + 2.0 * half_theta * i as f64 / (grid - 1) as f64)
                    .clamp(0.0, std::f64::consts::FRAC_PI_2)
            })
            .collect();
        thetas.push(boundary_theta);
        for theta in thetas {
            evaluated += grid;
            if sense_gain(theta) < gamma_sen * (1.0 - 1e-9) {
                continue;
            }
            for j in 0..grid {
                let delta = center.1 - half_delta + 2.0 * half_delta * j as f64 / (grid - 1) as f64;
                let rate = com_rate(theta, delta);
                if best.map_or(true, |(r, ..)| rate > r) {
                    best = Some((rate, theta, delta));
                }
            }
        }
        let (_, t, d) = best?;
        center = (t, d);
        half_theta /= (grid - 1) as f64 / 2.0;
        half_delta /= (grid - 1) as f64 / 2.0;
    }
    best.map(|(rate, ..)| SubspaceGridOracle { best_rate: rate, evaluated })
}

/// Deterministic child seed, mirroring the library's derivation so suites
/// can fan out reproducibly.
pub fn child_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Randomized deployment for the phase-alignment suites: span, receive
/// waveguide height offset, segment count, and target position all vary.
pub struct AlignmentScenario {
    pub cfg: swan_isac::ScenarioConfig,
    pub template: swan_isac::SwanLayout,
    pub st: swan_isac::Position3D,
}

pub fn alignment_scenario(seed: u64) -> AlignmentScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = swan_isac::experiment::default_scenario();
    let d_x = 10.0 + 30.0 * rng.gen::<f64>();
    cfg.d_x = d_x;
    cfg.y_r = -2.0 - 6.0 * rng.gen::<f64>();
    let m = 4 + (rng.gen::<u64>() % 11) as usize;
    let template = swan_isac::SwanLayout::midpoints(m, d_x / m as f64);
    let st = swan_isac::Position3D::ground(
        0.2 + (d_x - 0.4) * rng.gen::<f64>(),
        -10.0 * rng.gen::<f64>(),
    );
    AlignmentScenario { cfg, template, st }
}
