//! Single-photon detector click statistics.
//!
//! Photons are thinned independently with the detector efficiency and dark
//! counts are Poissonian in the observation window. Afterpulsing, dead time
//! and timing jitter are not modeled.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MODULE: &str = "detector_model";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorMode {
    FreeRunning,
    Gated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    pub label: String,
    pub mode: DetectorMode,
    pub efficiency: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dark_rate_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dark_prob_per_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_length_ns: Option<f64>,
}

impl DetectorParams {
    pub fn free_running(label: &str, efficiency: f64, dark_rate_hz: f64) -> Self {
        Self {
            label: label.to_owned(),
            mode: DetectorMode::FreeRunning,
            efficiency,
            dark_rate_hz: Some(dark_rate_hz),
            dark_prob_per_ns: None,
            gate_length_ns: None,
        }
    }

    pub fn gated(label: &str, efficiency: f64, dark_prob_per_ns: f64, gate_length_ns: f64) -> Self {
        Self {
            label: label.to_owned(),
            mode: DetectorMode::Gated,
            efficiency,
            dark_rate_hz: None,
            dark_prob_per_ns: Some(dark_prob_per_ns),
            gate_length_ns: Some(gate_length_ns),
        }
    }

    /// Unit efficiency, no dark counts.
    pub fn ideal(label: &str) -> Self {
        Self::free_running(label, 1.0, 0.0)
    }

    pub fn violations(&self, prefix: &str) -> Vec<String> {
        let mut v = Vec::new();
        if !(0.0..=1.0).contains(&self.efficiency) {
            v.push(format!(
                "{prefix}.efficiency = {} must be in [0, 1]",
                self.efficiency
            ));
        }
        match self.mode {
            DetectorMode::FreeRunning => {
                match self.dark_rate_hz {
                    Some(r) if r >= 0.0 && r.is_finite() => {}
                    Some(r) => v.push(format!("{prefix}.dark_rate_hz = {r} must be >= 0")),
                    None => v.push(format!("{prefix}: free_running detector needs dark_rate_hz")),
                }
                if self.dark_prob_per_ns.is_some() {
                    v.push(format!("{prefix}.dark_prob_per_ns is only valid for gated detectors"));
                }
                if self.gate_length_ns.is_some() {
                    v.push(format!("{prefix}.gate_length_ns is only valid for gated detectors"));
                }
            }
            DetectorMode::Gated => {
                match self.dark_prob_per_ns {
                    Some(p) if p >= 0.0 && p.is_finite() => {}
                    Some(p) => v.push(format!("{prefix}.dark_prob_per_ns = {p} must be >= 0")),
                    None => v.push(format!("{prefix}: gated detector needs dark_prob_per_ns")),
                }
                match self.gate_length_ns {
                    Some(g) if g > 0.0 && g.is_finite() => {}
                    Some(g) => v.push(format!("{prefix}.gate_length_ns = {g} must be > 0")),
                    None => v.push(format!("{prefix}: gated detector needs gate_length_ns")),
                }
                if self.dark_rate_hz.is_some() {
                    v.push(format!("{prefix}.dark_rate_hz is only valid for free_running detectors"));
                }
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations(&self.label);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    /// Dark-click probability charged to one pulse slot.
    ///
    /// Gated detectors are armed once per slot, so a slot sees the full gate;
    /// free-running detectors see one repetition period.
    pub fn slot_dark_probability(&self, period_ns: f64) -> f64 {
        let window = match self.mode {
            DetectorMode::Gated => self.gate_length_ns.unwrap_or(0.0),
            DetectorMode::FreeRunning => period_ns,
        };
        dark_click_probability(self, window)
    }
}

pub fn dark_click_probability(det: &DetectorParams, window_ns: f64) -> f64 {
    let window_ns = window_ns.max(0.0);
    let exponent = match det.mode {
        DetectorMode::FreeRunning => det.dark_rate_hz.unwrap_or(0.0) * window_ns * 1e-9,
        DetectorMode::Gated => {
            let gate = det.gate_length_ns.unwrap_or(f64::INFINITY);
            det.dark_prob_per_ns.unwrap_or(0.0) * window_ns.min(gate)
        }
    };
    -(-exponent).exp_m1()
}

/// Probability of at least one click given `n_photons` incident photons.
pub fn click_probability(n_photons: u64, det: &DetectorParams, window_ns: f64) -> Result<f64> {
    if window_ns < 0.0 {
        return Err(Error::domain(MODULE, format!("negative window {window_ns} ns")));
    }
    if det.mode == DetectorMode::Gated {
        let gate = det.gate_length_ns.unwrap_or(0.0);
        if window_ns > gate {
            return Err(Error::domain(
                MODULE,
                format!(
                    "{}: window {window_ns} ns exceeds the {gate} ns gate",
                    det.label
                ),
            ));
        }
    }
    let no_photon_click = miss_probability(det.efficiency, n_photons);
    Ok(1.0 - no_photon_click * (1.0 - dark_click_probability(det, window_ns)))
}

/// `(1 - efficiency)^n`, the chance that none of `n` photons is registered.
pub fn miss_probability(efficiency: f64, n: u64) -> f64 {
    match n {
        0 => 1.0,
        n if n <= i32::MAX as u64 => (1.0 - efficiency).powi(n as i32),
        n => (1.0 - efficiency).powf(n as f64),
    }
}

pub fn sample_click<R: Rng + ?Sized>(
    rng: &mut R,
    n_photons: u64,
    det: &DetectorParams,
    window_ns: f64,
) -> Result<bool> {
    let p = click_probability(n_photons, det, window_ns)?;
    Ok(rng.gen::<f64>() < p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn d3() -> DetectorParams {
        DetectorParams::free_running("D3", 0.6, 3.5)
    }

    fn d1() -> DetectorParams {
        DetectorParams::gated("D1", 0.6, 1e-6, 18.0)
    }

    #[test]
    fn click_probability_examples() {
        let quiet = DetectorParams::free_running("X", 0.6, 0.0);
        assert_eq!(click_probability(0, &d3(), 0.0).unwrap(), 0.0);
        assert!((click_probability(1, &quiet, 2.0).unwrap() - 0.6).abs() < 1e-15);
        assert!((click_probability(2, &quiet, 2.0).unwrap() - 0.84).abs() < 1e-15);
    }

    #[test]
    fn dark_probability_examples() {
        let p = dark_click_probability(&d3(), 1e3 / 430.0);
        assert!((p - 8.14e-9).abs() < 0.005e-9, "{p:e}");
        let g = dark_click_probability(&d1(), 18.0);
        assert!((g - 1.8e-5).abs() < 1e-9, "{g:e}");
        // windows beyond the gate are capped
        assert_eq!(dark_click_probability(&d1(), 100.0), g);
        assert_eq!(dark_click_probability(&d3(), 0.0), 0.0);
    }

    #[test]
    fn gated_window_beyond_gate_is_an_error() {
        assert!(click_probability(1, &d1(), 18.5).is_err());
        assert!(click_probability(1, &d1(), 18.0).is_ok());
        assert!(click_probability(1, &d3(), -1.0).is_err());
    }

    #[test]
    fn dark_factorization_identity() {
        for det in [d1(), d3()] {
            for n in 0..6 {
                for w in [0.0, 1.0, 2.3, 17.9] {
                    let lhs = click_probability(n, &det, w).unwrap();
                    let photon = click_probability(n, &det, 0.0).unwrap();
                    let rhs = 1.0 - (1.0 - photon) * (1.0 - dark_click_probability(&det, w));
                    assert!((lhs - rhs).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn monotone_in_photons_efficiency_and_window() {
        let mut prev = -1.0;
        for n in 0..20 {
            let p = click_probability(n, &d3(), 2.0).unwrap();
            assert!(p >= prev);
            prev = p;
        }
        let mut prev = -1.0;
        for k in 0..=10 {
            let det = DetectorParams::gated("D", k as f64 / 10.0, 1e-6, 18.0);
            let p = click_probability(1, &det, 5.0).unwrap();
            assert!(p >= prev);
            prev = p;
        }
        let mut prev = -1.0;
        for w in 0..18 {
            let p = click_probability(1, &d1(), w as f64).unwrap();
            assert!(p >= prev);
            prev = p;
        }
    }

    #[test]
    fn validation_catches_mode_mismatch() {
        let mut det = d1();
        det.dark_rate_hz = Some(3.0);
        det.efficiency = 1.2;
        let v = det.violations("D1");
        assert_eq!(v.len(), 2, "{v:?}");
        assert!(v.iter().any(|m| m.contains("efficiency")));
        let mut det = d3();
        det.dark_rate_hz = None;
        assert_eq!(det.violations("D3").len(), 1);
        let mut det = d1();
        det.gate_length_ns = Some(0.0);
        assert_eq!(det.violations("D1").len(), 1);
    }

    #[test]
    fn sampled_clicks() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let perfect = DetectorParams::ideal("P");
        let blind = DetectorParams::free_running("B", 0.0, 0.0);
        for _ in 0..1000 {
            assert!(sample_click(&mut rng, 1, &perfect, 1.0).unwrap());
            assert!(!sample_click(&mut rng, 3, &blind, 1.0).unwrap());
        }
        let det = DetectorParams::free_running("H", 0.6, 0.0);
        let n = 10_000_000u64;
        let hits = (0..n)
            .filter(|_| sample_click(&mut rng, 1, &det, 0.0).unwrap())
            .count() as f64;
        let sigma = (n as f64 * 0.6 * 0.4).sqrt();
        assert!((hits - 0.6 * n as f64).abs() < 5.0 * sigma);
    }
}
