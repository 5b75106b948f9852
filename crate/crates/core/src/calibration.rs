//! The shipped configurations. Every measured quantity is pinned; the herald
//! filter transmission is the only fitted number, and the telecom path
//! transmission sits at its physical bound of 1.
//!
//! `cargo run --example calibrate -- --write configs` regenerates the files.

use crate::clock::ClockParams;
use crate::config::{AnalysisParams, DelayScanParams, ExperimentConfig, SimMode};
use crate::detector::DetectorParams;
use crate::error::Result;
use crate::optics::PhasematchParams;
use crate::rates::{
    calibrate_filter_transmission, NoiseModel, OBSERVED_BACKGROUND_MEAN, OBSERVED_HOURS,
    PREDICTED_REFERENCE,
};
use crate::source::{mu_from_g2, PairStatistics, SourceParams};

/// Measured heralded g⁽²⁾ of source 1 and source 2.
pub const MEASURED_G2: [f64; 2] = [0.030, 0.036];

/// Mean pair number reproducing `g2` with lossless, noiseless detection.
pub fn ideal_mu_from_g2(g2: f64, clock: &ClockParams) -> Result<f64> {
    let ideal = DetectorParams::ideal("ideal");
    mu_from_g2(g2, &SourceParams::ideal(0.0), &ideal, [&ideal, &ideal], clock.period_ns())
}

fn source(mu: f64, g2: f64, herald_nm: f64, signal_nm: f64) -> SourceParams {
    SourceParams {
        mu,
        statistics: PairStatistics::Thermal,
        mode_count: 1,
        herald_coupling: 0.5,
        herald_filter_transmission: 1.0,
        signal_coupling: 0.5,
        signal_path_transmission: 1.0,
        herald_wavelength_nm: herald_nm,
        signal_wavelength_nm: signal_nm,
        g2_measured: Some(g2),
    }
}

/// Pinned hardware with uncalibrated (unit) filter transmissions.
pub fn pinned_config() -> Result<ExperimentConfig> {
    let clock = ClockParams::default();
    let mu1 = ideal_mu_from_g2(MEASURED_G2[0], &clock)?;
    let mu2 = ideal_mu_from_g2(MEASURED_G2[1], &clock)?;
    let cfg = ExperimentConfig {
        analysis: AnalysisParams {
            bin_width_ps: Some(clock.period_ps()),
            ..AnalysisParams::default()
        },
        clock,
        source1: source(mu1, MEASURED_G2[0], 807.0, 1560.0),
        source2: source(mu2, MEASURED_G2[1], 810.0, 1551.0),
        phasematch: PhasematchParams::default(),
        detectors: [
            DetectorParams::gated("D1", 0.6, 1e-6, 18.0),
            DetectorParams::gated("D2", 0.6, 1e-6, 18.0),
            DetectorParams::free_running("D3", 0.6, 3.5),
        ],
        residual_delay_ps: 0.0,
        duration_s: OBSERVED_HOURS * 3600.0,
        seed: 1,
        mode: SimMode::Conditioned,
        max_tags: 1e8,
        delay_scan: DelayScanParams::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn with_filter(mut cfg: ExperimentConfig, filter: f64) -> ExperimentConfig {
    cfg.source1.herald_filter_transmission = filter;
    cfg.source2.herald_filter_transmission = filter;
    cfg
}

/// Filter transmission calibrated so the closed-form noise is the predicted 0.20/h.
pub fn reference_config() -> Result<ExperimentConfig> {
    let cfg = pinned_config()?;
    let f = calibrate_filter_transmission(&cfg, PREDICTED_REFERENCE.1, NoiseModel::ClosedForm)?;
    Ok(with_filter(cfg, f))
}

/// Filter transmission calibrated so the simulated background per pixel
/// averages 35 counts in 260 h.
pub fn observed_config() -> Result<ExperimentConfig> {
    let cfg = pinned_config()?;
    let target = OBSERVED_BACKGROUND_MEAN / OBSERVED_HOURS;
    let f = calibrate_filter_transmission(&cfg, target, NoiseModel::ExactSlotLaw)?;
    Ok(with_filter(cfg, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::predict_rates;

    #[test]
    fn ideal_mu_is_exact_thermal_inverse() {
        let clock = ClockParams::default();
        for g2 in MEASURED_G2 {
            let mu = ideal_mu_from_g2(g2, &clock).unwrap();
            // g2 = mu(2+mu)/(1+mu)^2  <=>  mu = 1/sqrt(1-g2) - 1
            let oracle = 1.0 / (1.0 - g2).sqrt() - 1.0;
            assert!((mu - oracle).abs() < 1e-12, "{mu} vs {oracle}");
        }
    }

    #[test]
    fn calibrated_noise_hits_targets() {
        let r = predict_rates(&reference_config().unwrap()).unwrap();
        assert!((r.noise_per_hour_per_pixel - 0.20).abs() < 1e-9);
        let o = predict_rates(&observed_config().unwrap()).unwrap();
        assert!((o.exact.background_per_hour_per_pixel - 35.0 / 260.0).abs() < 1e-9);
        for cfg in [reference_config().unwrap(), observed_config().unwrap()] {
            let f = cfg.source1.herald_filter_transmission;
            assert!((0.1..=1.0).contains(&f));
            assert_eq!(cfg.source1.signal_path_transmission, 1.0);
        }
    }
}
