//! Experiment configuration: a JSON document whose keys carry their units
//! (`_ps`, `_nm`, `_hz`, `_s`). Unknown keys are rejected.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clock::ClockParams;
use crate::detector::DetectorParams;
use crate::error::{Error, Result};
use crate::optics::{pair_conversion_probability, PhasematchParams};
use crate::source::SourceParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    /// Every pulse slot is simulated and every detector tag is emitted.
    Full,
    /// Only events inside the analyzer's field of view around D3 clicks.
    #[default]
    Conditioned,
}

impl std::str::FromStr for SimMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" => Ok(SimMode::Full),
            "conditioned" => Ok(SimMode::Conditioned),
            other => Err(format!("unknown mode {other:?}, expected full or conditioned")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisParams {
    /// Defaults to the pulse period.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_width_ps: Option<f64>,
    #[serde(default = "default_half_window")]
    pub half_window_bins: u32,
    #[serde(default)]
    pub peak_exclusion_radius: u32,
}

fn default_half_window() -> u32 {
    20
}

impl Default for AnalysisParams {
    fn default() -> Self {
        Self {
            bin_width_ps: None,
            half_window_bins: default_half_window(),
            peak_exclusion_radius: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayScanParams {
    /// Mean photon number per pulse of the seeded (coherent) field.
    #[serde(default = "default_coherent_mean")]
    pub coherent_mean_photons: f64,
    #[serde(default = "default_dwell")]
    pub dwell_s: f64,
}

fn default_coherent_mean() -> f64 {
    1e4
}

fn default_dwell() -> f64 {
    1.0
}

impl Default for DelayScanParams {
    fn default() -> Self {
        Self {
            coherent_mean_photons: default_coherent_mean(),
            dwell_s: default_dwell(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub clock: ClockParams,
    pub source1: SourceParams,
    pub source2: SourceParams,
    #[serde(default)]
    pub phasematch: PhasematchParams,
    /// Herald of source 1, herald of source 2, upconverted-photon detector.
    pub detectors: [DetectorParams; 3],
    #[serde(default)]
    pub residual_delay_ps: f64,
    #[serde(default)]
    pub analysis: AnalysisParams,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: SimMode,
    /// Memory cap on the expected number of tags in full mode.
    #[serde(default = "default_max_tags")]
    pub max_tags: f64,
    #[serde(default)]
    pub delay_scan: DelayScanParams,
}

fn default_duration() -> f64 {
    60.0
}

fn default_max_tags() -> f64 {
    1e8
}

impl ExperimentConfig {
    pub fn bin_width_ps(&self) -> f64 {
        self.analysis
            .bin_width_ps
            .unwrap_or_else(|| self.clock.period_ps())
    }

    pub fn herald1(&self) -> &DetectorParams {
        &self.detectors[0]
    }

    pub fn herald2(&self) -> &DetectorParams {
        &self.detectors[1]
    }

    pub fn upconversion_detector(&self) -> &DetectorParams {
        &self.detectors[2]
    }

    /// Per-pair conversion probability at the configured residual delay.
    pub fn conversion_probability(&self) -> f64 {
        pair_conversion_probability(
            self.residual_delay_ps,
            &self.phasematch,
            self.clock.pulse_fwhm_ps,
        )
        .unwrap_or(0.0)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = self.clock.violations();
        v.extend(self.source1.violations("source1"));
        v.extend(self.source2.violations("source2"));
        v.extend(self.phasematch.violations("phasematch"));
        for (i, d) in self.detectors.iter().enumerate() {
            v.extend(d.violations(&format!("detectors[{i}]")));
        }
        let labels: HashSet<&str> = self.detectors.iter().map(|d| d.label.as_str()).collect();
        if labels.len() != self.detectors.len() {
            v.push("detectors: labels must be unique".to_owned());
        }
        if let Some(b) = self.analysis.bin_width_ps {
            if !(b > 0.0 && b.is_finite()) {
                v.push(format!("analysis.bin_width_ps = {b} must be positive"));
            }
        }
        if self.analysis.peak_exclusion_radius > self.analysis.half_window_bins {
            v.push("analysis.peak_exclusion_radius must not exceed half_window_bins".to_owned());
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            v.push(format!("duration_s = {} must be positive", self.duration_s));
        }
        if !self.residual_delay_ps.is_finite() {
            v.push("residual_delay_ps must be finite".to_owned());
        }
        if !(self.max_tags > 0.0) {
            v.push("max_tags must be positive".to_owned());
        }
        if !(self.delay_scan.coherent_mean_photons >= 0.0) {
            v.push("delay_scan.coherent_mean_photons must be >= 0".to_owned());
        }
        if !(self.delay_scan.dwell_s > 0.0) {
            v.push("delay_scan.dwell_s must be positive".to_owned());
        }
        v
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = self.source1.warnings("source1");
        w.extend(self.source2.warnings("source2"));
        w
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    /// Parses, fills derived defaults and validates.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        if cfg.analysis.bin_width_ps.is_none() {
            cfg.analysis.bin_width_ps = Some(cfg.clock.period_ps());
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Loaded configuration plus any non-fatal warnings.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub warnings: Vec<String>,
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let config = ExperimentConfig::from_json(&text)?;
    let warnings = config.warnings();
    Ok(LoadedConfig { config, warnings })
}
