//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use num_bigint::BigUint;
use num_traits::Zero;
use triplet_sim::config::ExperimentConfig;

pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub fn shipped(name: &str) -> ExperimentConfig {
    let path = configs_dir().join(format!("{name}.json"));
    triplet_sim::config::load_config(&path).unwrap().config
}

/// Small, fast configuration: measured hardware with a 10 MHz clock.
pub fn small_json() -> String {
    r#"{
  "clock": {"repetition_rate_hz": 1e7},
  "source1": {"mu": 0.05, "herald_coupling": 0.5, "signal_coupling": 0.5,
              "herald_wavelength_nm": 807, "signal_wavelength_nm": 1560},
  "source2": {"mu": 0.06, "herald_coupling": 0.5, "signal_coupling": 0.5,
              "herald_wavelength_nm": 810, "signal_wavelength_nm": 1551},
  "phasematch": {"lambda1_center_nm": 1560, "lambda2_center_nm": 1551,
                 "acceptance_fwhm_nm": 0.27, "eta_system": 0.02, "pigtail_coupling": 0.7},
  "detectors": [
    {"label": "D1", "mode": "gated", "efficiency": 0.6, "dark_prob_per_ns": 1e-4, "gate_length_ns": 18},
    {"label": "D2", "mode": "gated", "efficiency": 0.6, "dark_prob_per_ns": 1e-4, "gate_length_ns": 18},
    {"label": "D3", "mode": "free_running", "efficiency": 0.6, "dark_rate_hz": 2e4}
  ],
  "analysis": {"half_window_bins": 10},
  "duration_s": 2.0,
  "seed": 11
}"#
    .to_owned()
}

pub fn small_config() -> ExperimentConfig {
    ExperimentConfig::from_json(&small_json()).unwrap()
}

/// Fixed-point scale, 10^DIGITS.
const DIGITS: u32 = 700;

fn log10_big(x: &BigUint) -> f64 {
    let s = x.to_str_radix(10);
    let lead = &s[..s.len().min(17)];
    lead.parse::<f64>().unwrap().log10() + (s.len() - lead.len()) as f64
}

/// `log10 P(X >= k)` for λ = num/den: every term λ^j/j! is carried as an
/// integer at scale 10^700, then tail / total.
pub fn exact_tail_log10(k: u64, num: u64, den: u64) -> f64 {
    let scale = BigUint::from(10u32).pow(DIGITS);
    let mut term = scale.clone();
    let mut total = BigUint::zero();
    let mut tail = BigUint::zero();
    let mut j = 0u64;
    loop {
        total += &term;
        if j >= k {
            tail += &term;
        }
        j += 1;
        term = term * num / (BigUint::from(den) * j);
        if term.is_zero() {
            break;
        }
    }
    if tail.is_zero() {
        return f64::NEG_INFINITY;
    }
    log10_big(&tail) - log10_big(&total)
}
