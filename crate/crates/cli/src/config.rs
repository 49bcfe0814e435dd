//! Scenario files.
//!
//! The native format is TOML with `[network]`, `[channel]`, `[radio]`,
//! `[classes]` and `[sim]` sections; a JSON document with the same keys is
//! accepted too. Anything not given falls back to the rural reference
//! deployment, except the density and path-loss exponent, which must be
//! stated (each in exactly one of its two forms).

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use lorasg_core::analytic::{
    classes_from_dbm, Scenario, LORA_RECOMMENDED_DBM, REFERENCE_SENSITIVITY_DBM,
};
use lorasg_core::channel::{dbm_to_mw, hata_exponent, FadingModel, PathLossParams};
use lorasg_core::{RadioConfig, SimConfig};
use serde::Deserialize;
use thiserror::Error;

/// The shipped reference scenario.
pub const DEFAULT_RURAL: &str = include_str!("../configs/default_rural.cfg");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse scenario: {0}")]
    Syntax(String),
    #[error("[{section}] {key}: {reason}")]
    Key {
        section: &'static str,
        key: &'static str,
        reason: String,
    },
    #[error("invalid scenario:\n{}", .0.iter().map(|e| format!("  - {e}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<String>),
}

fn key_err(section: &'static str, key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Key {
        section,
        key,
        reason: reason.into(),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub network: Option<NetworkSection>,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub radio: RadioSection,
    pub classes: Option<ClassesSpec>,
    #[serde(default)]
    pub sim: SimSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub n_nodes: Option<f64>,
    pub lambda_s: Option<f64>,
    pub norm_radius_m: Option<f64>,
    pub lambda_t: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub beta: Option<f64>,
    pub hata_antenna_height_m: Option<f64>,
    pub kappa: Option<f64>,
    pub p_tr_dbm: Option<f64>,
    pub fading: Option<String>,
    pub sigma_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioSection {
    pub bw_hz: Option<f64>,
    pub n_preamble_extra: Option<u32>,
    pub payload_bytes: Option<u32>,
    pub header: Option<u8>,
    pub low_rate_opt: Option<u8>,
    pub cr: Option<CodingRate>,
}

/// `cr = 1` or `cr = "4/5"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CodingRate {
    Code(i64),
    Text(String),
}

impl CodingRate {
    pub fn code(&self) -> Result<u8, String> {
        let code = match self {
            CodingRate::Code(c) => *c,
            CodingRate::Text(t) => match t.trim() {
                "4/5" => 1,
                "4/6" => 2,
                "4/7" => 3,
                "4/8" => 4,
                other => other
                    .parse::<i64>()
                    .map_err(|_| format!("expected 4/5..4/8 or 1..4, got {other:?}"))?,
            },
        };
        if (1..=4).contains(&code) {
            Ok(code as u8)
        } else {
            Err(format!("coding-rate code must be 1..4, got {code}"))
        }
    }
}

/// Either an explicit `[[classes]]` list or `[classes] preset = "..."`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ClassesSpec {
    List(Vec<ClassEntry>),
    Preset(ClassesPreset),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassesPreset {
    /// `reference` or `lora-recommended`.
    pub preset: String,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassEntry {
    pub sf: u8,
    pub sensitivity_dbm: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub replications: Option<u64>,
    pub seed: Option<u64>,
    pub tail_epsilon: Option<f64>,
    pub disk_truncation_m: Option<f64>,
}

/// A scenario file resolved into model inputs.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub scenario: Scenario,
    pub sim: SimConfig,
    pub class_preset: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Toml => "toml",
            Format::Json => "json",
        })
    }
}

pub fn parse_scenario(path: &Path) -> Result<ResolvedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let format = if path.extension().is_some_and(|e| e == "json") {
        Format::Json
    } else {
        sniff(&text)
    };
    parse_str(&text, format)
}

fn sniff(text: &str) -> Format {
    if text.trim_start().starts_with('{') {
        Format::Json
    } else {
        Format::Toml
    }
}

pub fn parse_str(text: &str, format: Format) -> Result<ResolvedConfig, ConfigError> {
    let file: ScenarioFile = match format {
        Format::Toml => toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?,
        Format::Json => {
            serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?
        }
    };
    file.resolve()
}

pub fn default_config() -> ResolvedConfig {
    parse_str(DEFAULT_RURAL, Format::Toml).expect("shipped default scenario is valid")
}

impl ScenarioFile {
    pub fn resolve(&self) -> Result<ResolvedConfig, ConfigError> {
        let network = self
            .network
            .as_ref()
            .ok_or_else(|| key_err("network", "n_nodes", "section [network] is required"))?;
        let norm_radius_m = network.norm_radius_m.unwrap_or(8000.0);
        let lambda_s = match (network.n_nodes, network.lambda_s) {
            (Some(n), None) => n / (PI * norm_radius_m * norm_radius_m),
            (None, Some(l)) => l,
            (Some(_), Some(_)) => {
                return Err(key_err(
                    "network",
                    "lambda_s",
                    "give exactly one of n_nodes and lambda_s, not both",
                ))
            }
            (None, None) => {
                return Err(key_err(
                    "network",
                    "n_nodes",
                    "missing; give n_nodes or lambda_s",
                ))
            }
        };

        let ch = &self.channel;
        let beta = match (ch.beta, ch.hata_antenna_height_m) {
            (Some(b), None) => b,
            (None, Some(h)) => hata_exponent(h)
                .map_err(|e| key_err("channel", "hata_antenna_height_m", e.to_string()))?,
            (Some(_), Some(_)) => {
                return Err(key_err(
                    "channel",
                    "hata_antenna_height_m",
                    "give exactly one of beta and hata_antenna_height_m, not both",
                ))
            }
            (None, None) => {
                return Err(key_err(
                    "channel",
                    "beta",
                    "missing; give beta or hata_antenna_height_m",
                ))
            }
        };
        let fading = match ch.fading.as_deref().unwrap_or("rayleigh") {
            "none" => FadingModel::NoFading,
            "rayleigh" => FadingModel::Rayleigh,
            "lognormal" => FadingModel::LogNormal {
                sigma_db: ch.sigma_db.ok_or_else(|| {
                    key_err(
                        "channel",
                        "sigma_db",
                        "required when fading = \"lognormal\"",
                    )
                })?,
            },
            other => {
                return Err(key_err(
                    "channel",
                    "fading",
                    format!("expected none, rayleigh or lognormal, got {other:?}"),
                ))
            }
        };
        if ch.sigma_db.is_some() && !matches!(fading, FadingModel::LogNormal { .. }) {
            return Err(key_err(
                "channel",
                "sigma_db",
                "only meaningful with fading = \"lognormal\"",
            ));
        }

        let r = &self.radio;
        let defaults = RadioConfig::default();
        let radio = RadioConfig {
            bandwidth_hz: r.bw_hz.unwrap_or(defaults.bandwidth_hz),
            n_preamble_extra: r.n_preamble_extra.unwrap_or(defaults.n_preamble_extra),
            payload_bytes: r.payload_bytes.unwrap_or(defaults.payload_bytes),
            header_flag: r.header.unwrap_or(defaults.header_flag),
            low_rate_opt: r.low_rate_opt.unwrap_or(defaults.low_rate_opt),
            cr_code: match &r.cr {
                Some(cr) => cr.code().map_err(|e| key_err("radio", "cr", e))?,
                None => defaults.cr_code,
            },
        };

        let (class_preset, entries): (String, Vec<(u8, f64)>) = match &self.classes {
            Some(ClassesSpec::List(list)) => (
                "custom".into(),
                list.iter().map(|e| (e.sf, e.sensitivity_dbm)).collect(),
            ),
            Some(ClassesSpec::Preset(p)) => match p.preset.as_str() {
                "reference" => (p.preset.clone(), REFERENCE_SENSITIVITY_DBM.to_vec()),
                "lora-recommended" => (p.preset.clone(), LORA_RECOMMENDED_DBM.to_vec()),
                other => {
                    return Err(key_err(
                        "classes",
                        "preset",
                        format!("expected reference or lora-recommended, got {other:?}"),
                    ))
                }
            },
            None => ("reference".into(), REFERENCE_SENSITIVITY_DBM.to_vec()),
        };

        let mut problems = Vec::new();
        check_class_entries(&entries, &mut problems);
        if let Some(n) = network.n_nodes {
            if !(n >= 0.0 && n.is_finite()) {
                problems.push(format!("[network] n_nodes must be nonnegative, got {n}"));
            }
        }
        let s = &self.sim;
        let sim = SimConfig {
            replications: s.replications.unwrap_or(SimConfig::default().replications),
            seed: s.seed.unwrap_or(0),
            tail_epsilon: s.tail_epsilon.unwrap_or(SimConfig::default().tail_epsilon),
            disk_truncation_m: s.disk_truncation_m,
        };
        if let Err(e) = sim.validate() {
            problems.push(format!("[sim] {e}"));
        }
        if let Err(e) = radio.validate() {
            problems.push(format!("[radio] {e}"));
        }
        let classes = match classes_from_dbm(&radio, &entries) {
            Ok(c) => Some(c),
            Err(e) => {
                if problems.is_empty() {
                    problems.push(format!("[classes] {e}"));
                }
                None
            }
        };
        if let Err(e) = PathLossParams::new(beta, ch.kappa.unwrap_or(0.5)) {
            problems.push(format!("[channel] {e}"));
        }

        let scenario = classes.map(|classes| Scenario {
            lambda_s,
            lambda_t: network.lambda_t.unwrap_or(0.001),
            norm_radius_m,
            alpha: network.alpha.unwrap_or(0.0),
            p_tr_mw: dbm_to_mw(ch.p_tr_dbm.unwrap_or(10.0)),
            pathloss: PathLossParams {
                beta,
                kappa: ch.kappa.unwrap_or(0.5),
            },
            fading,
            radio,
            classes,
        });
        if let Some(scn) = &scenario {
            if let Err(e) = scn.validate() {
                let msg = e.to_string();
                if !problems.iter().any(|p| p.ends_with(&msg)) {
                    problems.push(msg);
                }
            }
        }
        if !problems.is_empty() {
            return Err(ConfigError::Validation(problems));
        }
        Ok(ResolvedConfig {
            scenario: scenario.expect("classes resolved when no problems are recorded"),
            sim,
            class_preset,
        })
    }
}

fn check_class_entries(entries: &[(u8, f64)], problems: &mut Vec<String>) {
    if entries.is_empty() {
        problems.push("[classes] at least one class is required".into());
        return;
    }
    for (i, pair) in entries.windows(2).enumerate() {
        if pair[0].1 >= pair[1].1 {
            problems.push(format!(
                "[classes] entries must be ordered from the most negative sensitivity up \
                 (entry {} at {} dBm, entry {} at {} dBm)",
                i + 1,
                pair[0].1,
                i + 2,
                pair[1].1
            ));
        }
    }
    let mut sfs: Vec<u8> = entries.iter().map(|e| e.0).collect();
    sfs.sort_unstable();
    if sfs.windows(2).any(|w| w[0] == w[1]) {
        problems.push("[classes] spreading factors must be unique".into());
    }
}
