//! Scenario files: one `key=value` per line, `#` starts a comment, lists
//! are comma separated. Seeds also accept ranges `a..b` (exclusive) and
//! `a..=b`.
//!
//! ```text
//! sizes=50,75,100,125,150
//! qos=normal,reliable,delay,delay_reliable
//! failure=0,0.1,0.2
//! seeds=1..=10
//! ```

use std::str::FromStr;

use thiserror::Error;

use crate::netsim::SimConfig;
use crate::protocol::QosClass;

/// Environment variable that replaces a scenario's seed list.
pub const SEED_ENV: &str = "QWSN_SEED";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {key}: {msg}")]
    Range { line: usize, key: String, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Per-cell parameters; `n`, `side`, `seed` and `failure_fraction` are
    /// overwritten for every cell.
    pub base: SimConfig,
    pub sizes: Vec<usize>,
    pub qos: Vec<QosClass>,
    pub failure_fractions: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Fractions of the lifetime comparison.
    pub lifetime_failures: Vec<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            base: SimConfig::default(),
            sizes: vec![50, 75, 100, 125, 150],
            qos: QosClass::ALL.to_vec(),
            failure_fractions: vec![0.0],
            seeds: (1..=10).collect(),
            lifetime_failures: vec![0.0, 0.1, 0.2, 0.3],
        }
    }
}

/// Side of the square area that keeps 50 nodes per 70 m x 70 m.
pub fn derive_side(n: usize) -> f64 {
    70.0 * (n as f64 / 50.0).sqrt()
}

impl ScenarioConfig {
    /// Parameters of one sweep cell.
    pub fn cell(&self, n: usize, failure_fraction: f64, seed: u64) -> SimConfig {
        SimConfig { n, side: derive_side(n), seed, failure_fraction, ..self.base.clone() }
    }
}

fn list<T: FromStr>(value: &str) -> Result<Vec<T>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("cannot parse {s:?}")))
        .collect()
}

/// Parses a seed list: comma separated numbers and ranges.
pub fn parse_seeds(value: &str) -> Result<Vec<u64>, String> {
    let mut seeds = Vec::new();
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (inclusive, b) = match b.strip_prefix('=') {
                Some(b) => (true, b),
                None => (false, b),
            };
            let a: u64 = a.trim().parse().map_err(|_| format!("bad range start in {part:?}"))?;
            let b: u64 = b.trim().parse().map_err(|_| format!("bad range end in {part:?}"))?;
            if inclusive {
                seeds.extend(a..=b);
            } else {
                seeds.extend(a..b);
            }
        } else {
            seeds.push(part.parse().map_err(|_| format!("cannot parse seed {part:?}"))?);
        }
    }
    Ok(seeds)
}

fn fractions(v: Vec<f64>) -> Result<Vec<f64>, String> {
    if v.is_empty() {
        return Err("empty list".into());
    }
    match v.iter().find(|f| !(0.0..1.0).contains(*f)) {
        Some(f) => Err(format!("{f} is outside [0, 1)")),
        None => Ok(v),
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let mut cfg = ScenarioConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ScenarioError::Parse { line, msg: format!("expected key=value, got {content:?}") });
        };
        let (key, value) = (key.trim(), value.trim());
        let parse = |msg: String| ScenarioError::Parse { line, msg: format!("{key}: {msg}") };
        let range = |msg: String| ScenarioError::Range { line, key: key.to_string(), msg };
        let num = |v: &str| -> Result<f64, ScenarioError> { v.parse().map_err(|_| parse(format!("cannot parse {v:?}"))) };
        let int = |v: &str| -> Result<u64, ScenarioError> { v.parse().map_err(|_| parse(format!("cannot parse {v:?}"))) };
        let b = &mut cfg.base;
        match key {
            "sizes" => {
                let sizes: Vec<usize> = list(value).map_err(parse)?;
                if sizes.is_empty() || sizes.iter().any(|&n| n < 2) {
                    return Err(range("need at least one size, each >= 2".into()));
                }
                cfg.sizes = sizes;
            }
            "qos" => {
                let qos = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| QosClass::parse(s).ok_or_else(|| parse(format!("unknown class {s:?}"))))
                    .collect::<Result<Vec<_>, _>>()?;
                if qos.is_empty() {
                    return Err(range("empty list".into()));
                }
                cfg.qos = qos;
            }
            "failure" | "failures" => cfg.failure_fractions = fractions(list(value).map_err(parse)?).map_err(range)?,
            "lifetime_failures" => cfg.lifetime_failures = fractions(list(value).map_err(parse)?).map_err(range)?,
            "seeds" => {
                let seeds = parse_seeds(value).map_err(parse)?;
                if seeds.is_empty() {
                    return Err(range("need at least one seed".into()));
                }
                cfg.seeds = seeds;
            }
            "short_range" => b.short_range = num(value)?,
            "long_range" => b.long_range = num(value)?,
            "e_init" => b.e_init = num(value)?,
            "e_threshold" => b.e_threshold = num(value)?,
            "e_elec" => b.e_elec = num(value)?,
            "eps_amp" => b.eps_amp = num(value)?,
            "packet_bits" => b.packet_bits = int(value)? as u32,
            "ack_bits" => b.ack_bits = int(value)? as u32,
            "service_time" => b.service_time = num(value)?,
            "ack_timeout" => b.ack_timeout = num(value)?,
            "delay_bound" => b.delay_bound = num(value)?,
            "copies" => b.copies_per_query = int(value)? as usize,
            "sources" => b.sources = int(value)? as usize,
            "ttl" => b.ttl = Some(int(value)? as u32),
            _ => return Err(parse("unknown key".into())),
        }
    }
    // check the cell parameters once with the smallest size
    let smallest = *cfg.sizes.iter().min().expect("sizes non-empty");
    cfg.cell(smallest, cfg.failure_fractions[0], cfg.seeds[0])
        .validate()
        .map_err(|e| ScenarioError::Range { line: 0, key: "scenario".into(), msg: e.to_string() })?;
    Ok(cfg)
}

/// Replaces the seed list with `QWSN_SEED` when it is set.
pub fn apply_seed_override(cfg: &mut ScenarioConfig) -> Result<(), ScenarioError> {
    if let Ok(value) = std::env::var(SEED_ENV) {
        let seeds = parse_seeds(&value).map_err(|msg| ScenarioError::Parse { line: 0, msg: format!("{SEED_ENV}: {msg}") })?;
        if seeds.is_empty() {
            return Err(ScenarioError::Range { line: 0, key: SEED_ENV.into(), msg: "no seeds".into() });
        }
        cfg.seeds = seeds;
    }
    Ok(())
}
