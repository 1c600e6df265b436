//! Scenario configuration: serializable structs, the line-oriented
//! `key = value` config reader, and frequency/time parsing with explicit
//! unit suffixes.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::path::Path;

/// Frequencies are written as values/2π with a unit suffix (hz, khz, mhz)
/// and stored in rad/s.
pub fn parse_freq(s: &str) -> Result<f64> {
    let t = s.trim().to_lowercase();
    let (num, scale) = if let Some(x) = t.strip_suffix("mhz") {
        (x, 1e6)
    } else if let Some(x) = t.strip_suffix("khz") {
        (x, 1e3)
    } else if let Some(x) = t.strip_suffix("hz") {
        (x, 1.0)
    } else {
        bail!("frequency '{s}' needs a unit suffix (hz, khz, mhz)");
    };
    let v: f64 = num.trim().parse().with_context(|| format!("bad frequency '{s}'"))?;
    Ok(TAU * v * scale)
}

/// Times in units of 1/J accept an optional `pi` suffix: `40pi` = 40π/J.
pub fn parse_time_over_j(s: &str) -> Result<f64> {
    let t = s.trim().to_lowercase();
    if let Some(x) = t.strip_suffix("pi") {
        let v: f64 = x.trim().parse().with_context(|| format!("bad time '{s}'"))?;
        Ok(v * PI)
    } else {
        Ok(t.parse().with_context(|| format!("bad time '{s}'"))?)
    }
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|x| x.trim().parse::<usize>().with_context(|| format!("bad list entry '{x}'")))
        .collect()
}

pub fn parse_u32_list(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|x| x.trim().parse::<u32>().with_context(|| format!("bad list entry '{x}'")))
        .collect()
}

/// Fully resolved scenario; the metadata sidecar stores this verbatim so a
/// run can be re-executed bit-identically.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "kebab-case")]
pub enum ScenarioConfig {
    StringBreak(StringBreakConfig),
    Coleman(ColemanConfig),
    Fvd(FvdConfig),
    Modes(ModesConfig),
    HobmQs(HobmQsConfig),
}

impl ScenarioConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioConfig::StringBreak(_) => "string-break",
            ScenarioConfig::Coleman(_) => "coleman",
            ScenarioConfig::Fvd(_) => "fvd",
            ScenarioConfig::Modes(_) => "modes",
            ScenarioConfig::HobmQs(_) => "hobm-qs",
        }
    }
}

/// Quench dynamics of the flux string: boson model vs the QED reference.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StringBreakConfig {
    pub sites: usize,
    /// Boson occupation offsets to compare against the QED reference.
    pub n_offsets: Vec<u32>,
    /// µ and V in units of J.
    pub mu: f64,
    pub v: f64,
    /// Evolution window in units of 1/J.
    pub t_max: f64,
    pub points: usize,
    /// Rotor cutoff of the reference; default 1 + ⌈L/4⌉.
    pub cutoff: Option<u32>,
    /// Boson window half-width; default 1 + ⌈L/4⌉.
    pub window: Option<u32>,
    pub tolerance: f64,
}

/// Order-parameter scans across the parity transition with pseudo-critical
/// points and scaling-collapse scores.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ColemanConfig {
    pub ga: f64,
    pub mg_critical: f64,
    pub sites: Vec<usize>,
    pub n_offsets: Vec<u32>,
    pub h_min: f64,
    pub h_max: f64,
    pub h_steps: usize,
    pub eta: f64,
}

/// False-vacuum decay under the full drive vs the ideal quantum link model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FvdConfig {
    pub sites: usize,
    pub n_max: usize,
    pub order: usize,
    /// "on", "off", or "both".
    pub compensate: String,
    /// Target coupling J (rad/s).
    pub coupling_j: f64,
    /// Axial trap frequency (rad/s).
    pub omega_z: f64,
    pub eta_stretch: f64,
    /// Window in units of 1/J.
    pub t_max_over_j: f64,
    pub points: usize,
}

/// Micro-trap array mode tables and leak-out summaries.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModesConfig {
    pub blocks: usize,
    pub ions_per_block: usize,
    /// Jitter half-width (rad/s); 0 disables.
    pub jitter: f64,
    pub seeds: u64,
    pub seed0: u64,
}

/// Boson-model quantum simulator with residual AC-Stark errors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HobmQsConfig {
    pub sites: usize,
    pub n_offset: u32,
    /// Physical couplings (rad/s).
    pub coupling_j: f64,
    pub v: f64,
    pub mu: f64,
    /// Window in units of 1/J.
    pub t_max_over_j: f64,
    pub points: usize,
    /// Compensation fraction (1 = exact, 0 = off).
    pub comp_fraction: f64,
}

/// Parse a line-oriented `key = value` file (with optional `[section]`
/// headers that prefix keys as `section.key`), or a JSON metadata sidecar.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        // sidecar: pull the resolved config back out
        let v: serde_json::Value = serde_json::from_str(&text).context("bad sidecar JSON")?;
        let cfg = v
            .get("config")
            .cloned()
            .unwrap_or(v);
        let mut map = BTreeMap::new();
        flatten_json("", &cfg, &mut map);
        return Ok(map);
    }
    let mut section = String::new();
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            section = line[1..line.len() - 1].trim().to_string();
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {} is not 'key = value': {raw}", lineno + 1);
        };
        let key = if section.is_empty() {
            k.trim().to_string()
        } else {
            format!("{section}.{}", k.trim())
        };
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn flatten_json(prefix: &str, v: &serde_json::Value, out: &mut BTreeMap<String, String>) {
    match v {
        serde_json::Value::Object(m) => {
            for (k, val) in m {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_json(&key, val, out);
            }
        }
        serde_json::Value::Array(items) => {
            let joined: Vec<String> = items
                .iter()
                .map(|x| match x {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect();
            out.insert(prefix.to_string(), joined.join(","));
        }
        serde_json::Value::String(s) => {
            out.insert(prefix.to_string(), s.clone());
        }
        serde_json::Value::Null => {}
        other => {
            out.insert(prefix.to_string(), other.to_string());
        }
    }
}
