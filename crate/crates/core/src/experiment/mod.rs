//! Batch experiment runner: parses a declarative config, sweeps the
//! requested axes, and emits a deterministic CSV plus a run manifest.

mod config;

pub use config::{
    default_config_template, default_scenario, parse_config, ConfigError, ExperimentConfig,
    ExperimentKind, DEFAULT_ST,
};

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::layout::SwanLayout;
use crate::pareto::pareto_sweep;
use crate::placement::SearchConfig;
use crate::protocol::Protocol;
use crate::scenario::{Position3D, ScenarioConfig, Side};
use crate::sensing::{
    gain_ss_closed, gain_ss_oracle, sa_gain_centered, sa_ratio_min_count, sm_gain_centered,
    SumMode,
};
use crate::tdma::{
    rescore_solution, solve_sa_multi, solve_sm_multi, solve_ss_multi, FloorRule, TdmaProblem,
    TdmaSolution,
};

/// Overrides applied on top of a parsed config (CLI flags).
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub floor_rule: Option<FloorRule>,
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output: PathBuf,
    pub manifest: PathBuf,
    pub rows: usize,
    pub wall_ms: u128,
}

/// A header plus pre-formatted rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// Formats a float at 12 significant digits; NaN marks undefined cells.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.11e}")
    }
}

fn fmt_bool(b: bool) -> String {
    b.to_string()
}

/// RFC-4180-style serialization: commas, quotes, and newlines inside a
/// field get quoted/escaped (current schemas never need it).
fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            debug_assert_eq!(row.len(), self.header.len(), "row width drifted from header");
            let line: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Derives a per-point seed from the master seed (splitmix64 step).
pub fn child_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws user positions uniformly over the service area.
pub fn sample_users(cfg: &ScenarioConfig, k: usize, seed: u64) -> Vec<Position3D> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k)
        .map(|_| {
            let x = rng.gen::<f64>() * cfg.d_x;
            let y = (rng.gen::<f64>() - 0.5) * cfg.d_y;
            Position3D::ground(x, y)
        })
        .collect()
}

fn run_gain_ss(
    scen: &ScenarioConfig,
    seed: u64,
    d_x: &[f64],
    n_segments: &[usize],
    mc_samples: usize,
) -> Table {
    let header = vec![
        "experiment",
        "d_x",
        "n",
        "m",
        "gamma_swan_closed",
        "gamma_pass_closed",
        "eta_closed",
        "eta_asymptotic",
        "gamma_swan_mc",
        "gamma_pass_mc",
        "eta_mc",
        "mc_se_swan",
        "mc_se_pass",
        "mc_samples",
    ];
    let mut rows = vec![];
    let mut point = 0u64;
    for &dx in d_x {
        for &n in n_segments {
            let closed = gain_ss_closed(scen, dx, n, n);
            let (mc, se_swan, se_pass) =
                gain_ss_oracle(scen, dx, n, n, mc_samples, child_seed(seed, point));
            point += 1;
            rows.push(vec![
                "gain_ss".into(),
                fmt_f64(dx),
                n.to_string(),
                n.to_string(),
                fmt_f64(closed.gain_swan),
                fmt_f64(closed.gain_pass),
                fmt_f64(closed.eta),
                fmt_f64(closed.eta_asymptotic),
                fmt_f64(mc.gain_swan),
                fmt_f64(mc.gain_pass),
                fmt_f64(mc.eta),
                fmt_f64(se_swan.std_err),
                fmt_f64(se_pass.std_err),
                mc_samples.to_string(),
            ]);
        }
    }
    Table { header, rows }
}

fn run_gain_sa_sm(scen: &ScenarioConfig, d_x: &[f64], n_segments: &[usize], st_y: f64) -> Table {
    let header = vec![
        "experiment",
        "protocol",
        "d_x",
        "n",
        "m",
        "dt_s",
        "dr_s",
        "gain_swan_exact",
        "gain_swan_approx",
        "gain_pass",
        "eta_exact",
        "eta_approx",
        "eta_asymptotic",
        "n_star",
        "m_star",
    ];
    let st = Position3D::ground(0.0, st_y);
    let dt = scen.cross_distance_sq(Side::Tx, &st).sqrt();
    let dr = scen.cross_distance_sq(Side::Rx, &st).sqrt();
    let mut rows = vec![];
    for &dx in d_x {
        for &n in n_segments {
            for proto in [Protocol::Sa, Protocol::Sm] {
                let (exact, approx) = match proto {
                    Protocol::Sa => (
                        sa_gain_centered(scen, dx, n, n, dt, dr, SumMode::Exact),
                        sa_gain_centered(scen, dx, n, n, dt, dr, SumMode::Approx),
                    ),
                    Protocol::Sm => (
                        sm_gain_centered(scen, dx, n, n, dt, dr, SumMode::Exact),
                        sm_gain_centered(scen, dx, n, n, dt, dr, SumMode::Approx),
                    ),
                    Protocol::Ss => unreachable!(),
                };
                let exact = exact.expect("odd segment counts validated upstream");
                let approx = approx.expect("approximation is total");
                let (n_star, m_star) = match proto {
                    Protocol::Sa => (sa_ratio_min_count(dx, dt), sa_ratio_min_count(dx, dr)),
                    _ => (f64::NAN, f64::NAN),
                };
                rows.push(vec![
                    "gain_sa_sm".into(),
                    proto.name().into(),
                    fmt_f64(dx),
                    n.to_string(),
                    n.to_string(),
                    fmt_f64(dt),
                    fmt_f64(dr),
                    fmt_f64(exact.gain_swan),
                    fmt_f64(approx.gain_swan),
                    fmt_f64(exact.gain_pass),
                    fmt_f64(exact.eta),
                    fmt_f64(approx.eta),
                    fmt_f64(exact.eta_asymptotic),
                    fmt_f64(n_star),
                    fmt_f64(m_star),
                ]);
            }
        }
    }
    Table { header, rows }
}

#[allow(clippy::too_many_arguments)]
fn run_pareto(
    scen: &ScenarioConfig,
    protocols: &[Protocol],
    n_segments: &[usize],
    st_x: &[f64],
    st_y: f64,
    cu: Position3D,
    gamma_sen: &[f64],
    search: &SearchConfig,
) -> Table {
    let header = vec![
        "experiment",
        "protocol",
        "n_segments",
        "st_x",
        "st_y",
        "cu_x",
        "cu_y",
        "gamma_sen",
        "feasible",
        "rate",
        "gamma_s",
        "rate_lossless",
    ];
    let mut rows = vec![];
    for &n in n_segments {
        let template = SwanLayout::midpoints(n, scen.d_x / n as f64);
        for &sx in st_x {
            let st = Position3D::ground(sx, st_y);
            for &proto in protocols {
                let front =
                    pareto_sweep(proto, scen, &template, &template, &cu, &st, gamma_sen, search);
                for p in front {
                    rows.push(vec![
                        "pareto".into(),
                        proto.name().into(),
                        n.to_string(),
                        fmt_f64(sx),
                        fmt_f64(st_y),
                        fmt_f64(cu.x),
                        fmt_f64(cu.y),
                        fmt_f64(p.gamma_sen_threshold),
                        fmt_bool(p.feasible),
                        fmt_f64(p.achieved_rate),
                        fmt_f64(p.achieved_gamma_s),
                        fmt_f64(p.rate_lossless.unwrap_or(f64::NAN)),
                    ]);
                }
            }
        }
    }
    Table { header, rows }
}

fn solve_multi(
    scen: &ScenarioConfig,
    proto: Protocol,
    prob: &TdmaProblem,
    template: &SwanLayout,
    search: &SearchConfig,
    eps_step: f64,
    rule: FloorRule,
) -> TdmaSolution {
    match proto {
        Protocol::Ss => solve_ss_multi(scen, prob, template, template, search, rule),
        Protocol::Sa => solve_sa_multi(scen, prob, template, template, search, rule),
        Protocol::Sm => solve_sm_multi(scen, prob, template, template, search, eps_step, rule),
    }
}

fn multiuser_header() -> Vec<&'static str> {
    vec![
        "experiment",
        "protocol",
        "n_segments",
        "k",
        "p_max_w",
        "gamma_sen",
        "gamma_com",
        "feasible",
        "sum_rate",
    ]
}

#[allow(clippy::too_many_arguments)]
fn run_sumrate_vs_power(
    scen: &ScenarioConfig,
    seed: u64,
    protocols: &[Protocol],
    k: usize,
    gamma_sen: f64,
    gamma_com: f64,
    p_max_w: &[f64],
    n_segments: usize,
    eps_step: f64,
    search: &SearchConfig,
    rule: FloorRule,
) -> Table {
    let template = SwanLayout::midpoints(n_segments, scen.d_x / n_segments as f64);
    let cus = sample_users(scen, k, seed);
    let st = Position3D::ground(DEFAULT_ST.0, DEFAULT_ST.1);
    let mut rows = vec![];
    for &proto in protocols {
        // Budgets ascend; a placement found at a smaller budget stays
        // feasible at a larger one and seeds it.
        let mut carried: Option<TdmaSolution> = None;
        for &p_max in p_max_w {
            let prob = TdmaProblem { cus: cus.clone(), st, gamma_sen, gamma_com, p_max };
            let mut sol = solve_multi(scen, proto, &prob, &template, search, eps_step, rule);
            if let Some(prev) = &carried {
                if let Some(rescored) = rescore_solution(scen, &prob, prev, rule) {
                    if !sol.feasible || rescored.sum_rate > sol.sum_rate {
                        sol = rescored;
                    }
                }
            }
            rows.push(vec![
                "sumrate_vs_power".into(),
                proto.name().into(),
                n_segments.to_string(),
                k.to_string(),
                fmt_f64(p_max),
                fmt_f64(gamma_sen),
                fmt_f64(gamma_com),
                fmt_bool(sol.feasible),
                fmt_f64(sol.sum_rate),
            ]);
            if sol.feasible {
                carried = Some(sol);
            }
        }
    }
    Table { header: multiuser_header(), rows }
}

#[allow(clippy::too_many_arguments)]
fn run_sumrate_vs_k(
    scen: &ScenarioConfig,
    seed: u64,
    protocols: &[Protocol],
    k_list: &[usize],
    gamma_sen: f64,
    gamma_com: f64,
    n_segments: usize,
    eps_step: f64,
    search: &SearchConfig,
    rule: FloorRule,
) -> Table {
    let template = SwanLayout::midpoints(n_segments, scen.d_x / n_segments as f64);
    let k_max = k_list.iter().copied().max().unwrap_or(0);
    // One draw, shared as prefixes, so the K-axis varies only the user count.
    let all_cus = sample_users(scen, k_max, seed);
    let st = Position3D::ground(DEFAULT_ST.0, DEFAULT_ST.1);
    let mut rows = vec![];
    for &proto in protocols {
        for &k in k_list {
            let prob = TdmaProblem {
                cus: all_cus[..k].to_vec(),
                st,
                gamma_sen,
                gamma_com,
                p_max: scen.p_max,
            };
            let sol = solve_multi(scen, proto, &prob, &template, search, eps_step, rule);
            rows.push(vec![
                "sumrate_vs_k".into(),
                proto.name().into(),
                n_segments.to_string(),
                k.to_string(),
                fmt_f64(scen.p_max),
                fmt_f64(gamma_sen),
                fmt_f64(gamma_com),
                fmt_bool(sol.feasible),
                fmt_f64(sol.sum_rate),
            ]);
        }
    }
    Table { header: multiuser_header(), rows }
}

/// Computes the sweep table for a parsed configuration.
pub fn compute_table(config: &ExperimentConfig) -> Table {
    let scen = &config.scenario;
    match &config.kind {
        ExperimentKind::GainSs { d_x, n_segments, mc_samples } => {
            run_gain_ss(scen, config.seed, d_x, n_segments, *mc_samples)
        }
        ExperimentKind::GainSaSm { d_x, n_segments, st_y } => {
            run_gain_sa_sm(scen, d_x, n_segments, *st_y)
        }
        ExperimentKind::Pareto {
            protocols,
            n_segments,
            st_x,
            st_y,
            cu_x,
            cu_y,
            gamma_sen,
            search,
        } => run_pareto(
            scen,
            protocols,
            n_segments,
            st_x,
            *st_y,
            Position3D::ground(*cu_x, *cu_y),
            gamma_sen,
            search,
        ),
        ExperimentKind::SumRateVsPower {
            protocols,
            k,
            gamma_sen,
            gamma_com,
            p_max_w,
            n_segments,
            eps_step,
            search,
        } => run_sumrate_vs_power(
            scen,
            config.seed,
            protocols,
            *k,
            *gamma_sen,
            *gamma_com,
            p_max_w,
            *n_segments,
            *eps_step,
            search,
            config.floor_rule,
        ),
        ExperimentKind::SumRateVsK {
            protocols,
            k_list,
            gamma_sen,
            gamma_com,
            n_segments,
            eps_step,
            search,
        } => run_sumrate_vs_k(
            scen,
            config.seed,
            protocols,
            k_list,
            *gamma_sen,
            *gamma_com,
            *n_segments,
            *eps_step,
            search,
            config.floor_rule,
        ),
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xCBF2_9CE4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}

/// Parses a config file, applies overrides, computes the table, and writes
/// the CSV plus a `<output>.manifest` sidecar.
pub fn run_experiment(config_path: &Path, options: &RunOptions) -> Result<RunSummary, ConfigError> {
    let start = Instant::now();
    let text = std::fs::read_to_string(config_path)?;
    let mut config = parse_config(&text)?;
    if let Some(seed) = options.seed {
        config.seed = seed;
    }
    if let Some(out) = &options.output {
        config.output = out.clone();
    }
    if let Some(rule) = options.floor_rule {
        config.floor_rule = rule;
    }

    let table = compute_table(&config);
    if let Some(parent) = config.output.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&config.output, table.to_csv())?;

    let manifest_path = {
        let mut p = config.output.clone().into_os_string();
        p.push(".manifest");
        PathBuf::from(p)
    };
    let wall_ms = start.elapsed().as_millis();
    let manifest = format!(
        "config_path = {}\nconfig_fnv1a64 = 0x{:016x}\nseed = {}\ntool = swan-isac {}\nexperiment = {}\nrows = {}\nwall_ms = {}\n",
        config_path.display(),
        fnv1a64(text.as_bytes()),
        config.seed,
        env!("CARGO_PKG_VERSION"),
        config.kind.name(),
        table.rows.len(),
        wall_ms,
    );
    std::fs::write(&manifest_path, manifest)?;

    Ok(RunSummary {
        output: config.output.clone(),
        manifest: manifest_path,
        rows: table.rows.len(),
        wall_ms,
    })
}
