//! Declarative experiment configuration: a flat `key = value` text format
//! with `[section]` headers.
//!
//! Grammar:
//!
//! ```text
//! # full-line comments start with '#'
//! [section]
//! key = value          # scalars: numbers, booleans, strings
//! key = a, b, c        # lists are comma-separated
//! ```
//!
//! Sections: `[scenario]` (optional overrides of the default scenario, with
//! powers in dBm at this boundary), `[experiment]` (type, seed, output), and
//! one section named after the experiment type carrying its sweep axes.
//! Unknown keys are rejected so typos fail loudly.

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use thiserror::Error;

use crate::placement::SearchConfig;
use crate::protocol::Protocol;
use crate::scenario::{db_to_linear, dbm_to_watts, ScenarioConfig, SPEED_OF_LIGHT};
use crate::tdma::FloorRule;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing section [{0}]")]
    MissingSection(String),
    #[error("missing key '{key}' in section [{section}]")]
    MissingKey { section: String, key: String },
    #[error("unknown key '{key}' in section [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("invalid value for '{key}' in [{section}]: {msg}")]
    InvalidValue { section: String, key: String, msg: String },
    #[error("unknown experiment type '{0}'")]
    UnknownExperiment(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// The reference deployment: a 28 GHz carrier on a 1.4-index
/// guide with 0.08 dB/m loss, 20 dBm budget, −90 dBm noise floors, unit
/// reflection, 3 m waveguide height at y = ±5 m, a 20 m × 20 m area, and a
/// half-wavelength minimum PA spacing.
pub fn default_scenario() -> ScenarioConfig {
    let carrier_freq_hz = 28e9;
    ScenarioConfig {
        carrier_freq_hz,
        n_eff: 1.4,
        kappa_db_per_m: 0.08,
        d: 3.0,
        y_t: 5.0,
        y_r: -5.0,
        d_x: 20.0,
        d_y: 20.0,
        p_max: dbm_to_watts(20.0),
        sigma_c_sq: dbm_to_watts(-90.0),
        sigma_s_sq: dbm_to_watts(-90.0),
        alpha: 1.0,
        delta_min: SPEED_OF_LIGHT / carrier_freq_hz / 2.0,
    }
}

/// Default sensing-target position (x, y) on the ground plane.
pub const DEFAULT_ST: (f64, f64) = (10.0, -6.0);

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentKind {
    /// Selection-protocol gain versus segment count (closed form + Monte
    /// Carlo oracle).
    GainSs { d_x: Vec<f64>, n_segments: Vec<usize>, mc_samples: usize },
    /// Aggregation/multiplexing gain versus segment count (exact sums +
    /// approximations).
    GainSaSm { d_x: Vec<f64>, n_segments: Vec<usize>, st_y: f64 },
    /// Rate-versus-sensing-floor fronts for the selected protocols.
    Pareto {
        protocols: Vec<Protocol>,
        n_segments: Vec<usize>,
        st_x: Vec<f64>,
        st_y: f64,
        cu_x: f64,
        cu_y: f64,
        gamma_sen: Vec<f64>,
        search: SearchConfig,
    },
    /// Multi-user sum rate versus power budget.
    SumRateVsPower {
        protocols: Vec<Protocol>,
        k: usize,
        gamma_sen: f64,
        gamma_com: f64,
        p_max_w: Vec<f64>,
        n_segments: usize,
        eps_step: f64,
        search: SearchConfig,
    },
    /// Multi-user sum rate versus the number of users.
    SumRateVsK {
        protocols: Vec<Protocol>,
        k_list: Vec<usize>,
        gamma_sen: f64,
        gamma_com: f64,
        n_segments: usize,
        eps_step: f64,
        search: SearchConfig,
    },
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::GainSs { .. } => "gain_ss",
            ExperimentKind::GainSaSm { .. } => "gain_sa_sm",
            ExperimentKind::Pareto { .. } => "pareto",
            ExperimentKind::SumRateVsPower { .. } => "sumrate_vs_power",
            ExperimentKind::SumRateVsK { .. } => "sumrate_vs_k",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub seed: u64,
    pub output: PathBuf,
    pub floor_rule: FloorRule,
    pub kind: ExperimentKind,
}

struct Raw {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

fn parse_raw(text: &str) -> Result<Raw, ConfigError> {
    let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_string();
            if sections.contains_key(&name) {
                return Err(ConfigError::Parse {
                    line: line_no,
                    msg: format!("duplicate section [{name}]"),
                });
            }
            sections.insert(name.clone(), BTreeMap::new());
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Parse {
                line: line_no,
                msg: format!("expected 'key = value', got '{line}'"),
            });
        };
        let Some(section) = &current else {
            return Err(ConfigError::Parse {
                line: line_no,
                msg: "entry before any [section] header".into(),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let entries = sections.get_mut(section).expect("section exists");
        if entries.insert(key.clone(), value).is_some() {
            return Err(ConfigError::Parse {
                line: line_no,
                msg: format!("duplicate key '{key}' in section [{section}]"),
            });
        }
    }
    Ok(Raw { sections })
}

/// Typed view over one section that tracks which keys were consumed.
struct Reader<'a> {
    name: String,
    map: Option<&'a BTreeMap<String, String>>,
    used: HashSet<String>,
}

impl<'a> Reader<'a> {
    fn new(raw: &'a Raw, name: &str) -> Self {
        Self {
            name: name.to_string(),
            map: raw.sections.get(name),
            used: HashSet::new(),
        }
    }

    fn raw_get(&mut self, key: &str) -> Option<&'a str> {
        self.used.insert(key.to_string());
        self.map.and_then(|m| m.get(key)).map(|s| s.as_str())
    }

    fn invalid(&self, key: &str, msg: impl Into<String>) -> ConfigError {
        ConfigError::InvalidValue {
            section: self.name.clone(),
            key: key.to_string(),
            msg: msg.into(),
        }
    }

    fn require(&mut self, key: &str) -> Result<&'a str, ConfigError> {
        self.raw_get(key).ok_or_else(|| ConfigError::MissingKey {
            section: self.name.clone(),
            key: key.to_string(),
        })
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.raw_get(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|e| self.invalid(key, format!("{e}"))),
        }
    }

    fn require_f64(&mut self, key: &str) -> Result<f64, ConfigError> {
        let s = self.require(key)?;
        s.parse().map_err(|e| self.invalid(key, format!("{e}")))
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.raw_get(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|e| self.invalid(key, format!("{e}"))),
        }
    }

    fn require_usize(&mut self, key: &str) -> Result<usize, ConfigError> {
        let s = self.require(key)?;
        s.parse().map_err(|e| self.invalid(key, format!("{e}")))
    }

    fn u64(&mut self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.raw_get(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|e| self.invalid(key, format!("{e}"))),
        }
    }

    fn bool(&mut self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.raw_get(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|e| self.invalid(key, format!("{e}"))),
        }
    }

    fn require_string(&mut self, key: &str) -> Result<String, ConfigError> {
        Ok(self.require(key)?.to_string())
    }

    fn list_f64(&mut self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let s = self.require(key)?;
        s.split(',')
            .map(|p| p.trim().parse().map_err(|e| self.invalid(key, format!("'{p}': {e}"))))
            .collect()
    }

    fn list_f64_or(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.raw_get(key) {
            None => Ok(default.to_vec()),
            Some(s) => s
                .split(',')
                .map(|p| p.trim().parse().map_err(|e| self.invalid(key, format!("'{p}': {e}"))))
                .collect(),
        }
    }

    fn list_usize(&mut self, key: &str) -> Result<Vec<usize>, ConfigError> {
        let s = self.require(key)?;
        s.split(',')
            .map(|p| p.trim().parse().map_err(|e| self.invalid(key, format!("'{p}': {e}"))))
            .collect()
    }

    fn protocols(&mut self, key: &str) -> Result<Vec<Protocol>, ConfigError> {
        let s = self.raw_get(key).unwrap_or("ss, sa, sm");
        s.split(',')
            .map(|p| match p.trim() {
                "ss" => Ok(Protocol::Ss),
                "sa" => Ok(Protocol::Sa),
                "sm" => Ok(Protocol::Sm),
                other => Err(self.invalid(key, format!("unknown protocol '{other}'"))),
            })
            .collect()
    }

    fn search_config(&mut self) -> Result<SearchConfig, ConfigError> {
        Ok(SearchConfig {
            grid_step: self.f64("grid_step", 1e-2)?,
            max_iters: self.usize("max_iters", 50)?,
            rel_tol: self.f64("rel_tol", 1e-4)?,
        })
    }

    /// Errors on any key that was present but never consumed.
    fn finish(self) -> Result<(), ConfigError> {
        if let Some(map) = self.map {
            for key in map.keys() {
                if !self.used.contains(key) {
                    return Err(ConfigError::UnknownKey {
                        section: self.name.clone(),
                        key: key.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

fn scenario_from(raw: &Raw) -> Result<ScenarioConfig, ConfigError> {
    let base = default_scenario();
    let mut r = Reader::new(raw, "scenario");
    let carrier_freq_hz = r.f64("carrier_freq_hz", base.carrier_freq_hz)?;
    let cfg = ScenarioConfig {
        carrier_freq_hz,
        n_eff: r.f64("n_eff", base.n_eff)?,
        kappa_db_per_m: r.f64("kappa_db_per_m", base.kappa_db_per_m)?,
        d: r.f64("d", base.d)?,
        y_t: r.f64("y_t", base.y_t)?,
        y_r: r.f64("y_r", base.y_r)?,
        d_x: r.f64("d_x", base.d_x)?,
        d_y: r.f64("d_y", base.d_y)?,
        p_max: dbm_to_watts(r.f64("p_max_dbm", 20.0)?),
        sigma_c_sq: dbm_to_watts(r.f64("sigma_c_dbm", -90.0)?),
        sigma_s_sq: dbm_to_watts(r.f64("sigma_s_dbm", -90.0)?),
        alpha: r.f64("alpha", base.alpha)?,
        delta_min: r.f64("delta_min", SPEED_OF_LIGHT / carrier_freq_hz / 2.0)?,
    };
    r.finish()?;
    cfg.validate().map_err(|e| ConfigError::InvalidScenario(e.to_string()))?;
    Ok(cfg)
}

/// Parses a configuration from text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw = parse_raw(text)?;
    let scenario = scenario_from(&raw)?;

    if !raw.sections.contains_key("experiment") {
        return Err(ConfigError::MissingSection("experiment".into()));
    }
    let mut exp = Reader::new(&raw, "experiment");
    let kind_name = exp.require_string("type")?;
    let seed = exp.u64("seed", 0)?;
    let output = PathBuf::from(exp.require_string("output")?);
    let floor_rule = if exp.bool("paper_literal_floors", false)? {
        FloorRule::PaperLiteral
    } else {
        FloorRule::TdmaScaled
    };
    exp.finish()?;

    let kind = match kind_name.as_str() {
        "gain_ss" => {
            let mut r = Reader::new(&raw, "gain_ss");
            let kind = ExperimentKind::GainSs {
                d_x: r.list_f64("d_x")?,
                n_segments: r.list_usize("n_segments")?,
                mc_samples: r.usize("mc_samples", 1_000_000)?,
            };
            r.finish()?;
            kind
        }
        "gain_sa_sm" => {
            let mut r = Reader::new(&raw, "gain_sa_sm");
            let kind = ExperimentKind::GainSaSm {
                d_x: r.list_f64("d_x")?,
                n_segments: r.list_usize("n_segments")?,
                st_y: r.f64("st_y", DEFAULT_ST.1)?,
            };
            r.finish()?;
            kind
        }
        "pareto" => {
            let mut r = Reader::new(&raw, "pareto");
            let gamma_sen_db = r.list_f64("gamma_sen_db")?;
            let mut gamma_sen: Vec<f64> = gamma_sen_db.iter().map(|&db| db_to_linear(db)).collect();
            gamma_sen.sort_by(|a, b| a.partial_cmp(b).expect("finite thresholds"));
            let kind = ExperimentKind::Pareto {
                protocols: r.protocols("protocols")?,
                n_segments: r.list_usize("n_segments")?,
                st_x: r.list_f64_or("st_x", &[DEFAULT_ST.0])?,
                st_y: r.f64("st_y", DEFAULT_ST.1)?,
                cu_x: r.f64("cu_x", 30.0)?,
                cu_y: r.f64("cu_y", 0.0)?,
                gamma_sen,
                search: r.search_config()?,
            };
            r.finish()?;
            kind
        }
        "sumrate_vs_power" => {
            let mut r = Reader::new(&raw, "sumrate_vs_power");
            let p_dbm = r.list_f64("p_max_dbm")?;
            let mut p_max_w: Vec<f64> = p_dbm.iter().map(|&d| dbm_to_watts(d)).collect();
            p_max_w.sort_by(|a, b| a.partial_cmp(b).expect("finite budgets"));
            let kind = ExperimentKind::SumRateVsPower {
                protocols: r.protocols("protocols")?,
                k: r.require_usize("k")?,
                gamma_sen: db_to_linear(r.require_f64("gamma_sen_db")?),
                gamma_com: r.f64("gamma_com", 0.25)?,
                p_max_w,
                n_segments: r.require_usize("n_segments")?,
                eps_step: r.f64("eps_step", 0.1)?,
                search: r.search_config()?,
            };
            r.finish()?;
            kind
        }
        "sumrate_vs_k" => {
            let mut r = Reader::new(&raw, "sumrate_vs_k");
            let kind = ExperimentKind::SumRateVsK {
                protocols: r.protocols("protocols")?,
                k_list: r.list_usize("k")?,
                gamma_sen: db_to_linear(r.require_f64("gamma_sen_db")?),
                gamma_com: r.f64("gamma_com", 0.25)?,
                n_segments: r.require_usize("n_segments")?,
                eps_step: r.f64("eps_step", 0.1)?,
                search: r.search_config()?,
            };
            r.finish()?;
            kind
        }
        other => return Err(ConfigError::UnknownExperiment(other.to_string())),
    };

    // Reject sections that belong to a different experiment type or are typos.
    for name in raw.sections.keys() {
        if name != "scenario" && name != "experiment" && name != kind.name() {
            return Err(ConfigError::UnknownKey {
                section: name.clone(),
                key: "(entire section)".into(),
            });
        }
    }

    Ok(ExperimentConfig { scenario, seed, output, floor_rule, kind })
}

/// Annotated template emitted by `default-config`.
pub fn default_config_template() -> String {
    r#"# swan-isac experiment configuration.
#
# Full-line comments start with '#'. Lists are comma-separated.
# Exactly one experiment section (matching 'type') may be present.

[scenario]
# All keys optional; defaults shown. Powers are dBm at this boundary.
carrier_freq_hz = 28e9
n_eff = 1.4
kappa_db_per_m = 0.08
d = 3.0
y_t = 5.0
y_r = -5.0
d_x = 20.0
d_y = 20.0
p_max_dbm = 20.0
sigma_c_dbm = -90.0
sigma_s_dbm = -90.0
alpha = 1.0
# delta_min defaults to half the carrier wavelength.

[experiment]
# type: gain_ss | gain_sa_sm | pareto | sumrate_vs_power | sumrate_vs_k
type = pareto
seed = 0
output = out/pareto.csv
# paper_literal_floors = false

[pareto]
protocols = ss, sa, sm
n_segments = 15, 30
# Sensing floors as dB SNR; sorted ascending before solving.
gamma_sen_db = -70, -67, -64, -61, -58, -55, -52, -49, -46, -43, -40, -37
st_x = 10.0
st_y = -6.0
cu_x = 30.0
cu_y = 0.0
grid_step = 1e-2
max_iters = 50
rel_tol = 1e-4

# [gain_ss]
# d_x = 50, 200
# n_segments = 1, 2, 4, 8, 16, 32, 64
# mc_samples = 1000000

# [gain_sa_sm]
# d_x = 50, 200
# n_segments = 1, 3, 5, 7, 9, 11, 15, 21, 31, 41, 51, 61
# st_y = -6.0

# [sumrate_vs_power]
# protocols = ss, sa, sm
# k = 3
# gamma_sen_db = -50
# gamma_com = 0.25
# p_max_dbm = 10, 14, 17, 20, 23, 26
# n_segments = 15
# grid_step = 1e-2
# eps_step = 0.1

# [sumrate_vs_k]
# protocols = ss, sa, sm
# k = 1, 2, 3, 4, 5
# gamma_sen_db = -50
# gamma_com = 0.25
# n_segments = 15
# grid_step = 1e-2
# eps_step = 0.1
"#
    .to_string()
}
