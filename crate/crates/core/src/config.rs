//! Flat key-value configuration file (TOML syntax).
//!
//! ```toml
//! n_vehicles_min = 2
//! n_vehicles_max = 6
//! speed_min = 50
//! speed_max = 120
//! duration = 20.0
//! dt = 0.05
//! presets = ["ClearNoon", "HardRainNight"]
//! lanes = [1, 2, 3, 4, 5]
//! mv_limits = [90, 100, 120]
//! dim_T = [7.5, 2.5, 3.5]
//! trigger_gap = 40.0
//! ```
//!
//! Every key is optional; missing keys keep their defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detector::DetectorConfig;
use crate::domain::{Dimensions, PresetName, VehicleKind};
use crate::error::{Error, Result};
use crate::sampler::GeneratorConfig;
use crate::sim::EngineConfig;

/// Everything a run directory is generated from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub generator: GeneratorConfig,
    pub engine: EngineConfig,
    pub detector: DetectorConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n_vehicles_min: Option<usize>,
    n_vehicles_max: Option<usize>,
    speed_min: Option<f64>,
    speed_max: Option<f64>,
    duration: Option<f64>,
    dt: Option<f64>,
    presets: Option<Vec<String>>,
    lanes: Option<Vec<u8>>,
    mv_limits: Option<Vec<f64>>,
    #[serde(rename = "dim_S")]
    dim_s: Option<[f64; 3]>,
    #[serde(rename = "dim_M")]
    dim_m: Option<[f64; 3]>,
    #[serde(rename = "dim_L")]
    dim_l: Option<[f64; 3]>,
    #[serde(rename = "dim_V")]
    dim_v: Option<[f64; 3]>,
    #[serde(rename = "dim_T")]
    dim_t: Option<[f64; 3]>,
    #[serde(rename = "dim_MC")]
    dim_mc: Option<[f64; 3]>,
    #[serde(rename = "dim_B")]
    dim_b: Option<[f64; 3]>,
    trigger_gap: Option<f64>,
    pass_margin: Option<f64>,
    return_clearance: Option<f64>,
    weather_perturbation: Option<bool>,
    g_safe: Option<f64>,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let mut cfg = Config::default();
        let g = &mut cfg.generator;
        if let Some(v) = raw.n_vehicles_min {
            g.n_vehicles_min = v;
        }
        if let Some(v) = raw.n_vehicles_max {
            g.n_vehicles_max = v;
        }
        if let Some(v) = raw.speed_min {
            g.speed_min = v;
        }
        if let Some(v) = raw.speed_max {
            g.speed_max = v;
        }
        if let Some(v) = raw.duration {
            g.clock.duration = v;
        }
        if let Some(v) = raw.dt {
            g.clock.dt = v;
        }
        if let Some(names) = raw.presets {
            g.presets = names
                .iter()
                .map(|n| n.parse::<PresetName>())
                .collect::<Result<Vec<_>>>()?;
        }
        if let Some(v) = raw.lanes {
            g.lanes = v;
        }
        if let Some(v) = raw.mv_limits {
            g.mv_limits = v;
        }
        let dims = [
            (VehicleKind::S, raw.dim_s),
            (VehicleKind::M, raw.dim_m),
            (VehicleKind::L, raw.dim_l),
            (VehicleKind::V, raw.dim_v),
            (VehicleKind::T, raw.dim_t),
            (VehicleKind::MC, raw.dim_mc),
            (VehicleKind::B, raw.dim_b),
        ];
        for (kind, d) in dims {
            if let Some([l, w, h]) = d {
                if !(l > 0.0 && w > 0.0 && h > 0.0) {
                    return Err(Error::InvalidConfig(format!("dim_{kind} must be positive")));
                }
                g.dimensions.set(kind, Dimensions::new(l, w, h));
            }
        }
        g.validate()?;

        let e = &mut cfg.engine;
        if let Some(v) = raw.trigger_gap {
            e.trigger_gap = v;
        }
        if let Some(v) = raw.pass_margin {
            e.pass_margin = v;
        }
        if let Some(v) = raw.return_clearance {
            e.return_clearance = v;
        }
        if let Some(v) = raw.weather_perturbation {
            e.perturbation.enabled = v;
        }
        if let Some(v) = raw.g_safe {
            cfg.detector.g_safe = v;
        }
        cfg.detector.lane_change = cfg.engine.lane_change;
        cfg.detector.dimensions = cfg.generator.dimensions.clone();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}
