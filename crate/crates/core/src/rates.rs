//! Expected rates: the closed-form leading-order model, the exact per-slot
//! law, and comparisons of both against simulated or published numbers.

use serde::Serialize;

use crate::analysis::Analysis;
use crate::config::{ExperimentConfig, SimMode};
use crate::detector::dark_click_probability;
use crate::error::{Error, Result};
use crate::sim::SimulationResult;
use crate::slot_law::{SlotLaw, SlotModel};

/// Published threefold rates (signal, noise per pixel), per hour.
pub const PREDICTED_REFERENCE: (f64, f64) = (0.40, 0.20);
pub const OBSERVED_REFERENCE: (f64, f64) = (0.31, 0.13);

/// Published histogram totals: peak pixel, background mean, hours integrated.
pub const OBSERVED_PEAK_COUNTS: f64 = 80.0;
pub const OBSERVED_BACKGROUND_MEAN: f64 = 35.0;
pub const OBSERVED_HOURS: f64 = 260.0;

const SECONDS_PER_HOUR: f64 = 3600.0;

/// Rates from the exact slot law, including multi-pair and dark contributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactRates {
    pub peak_pixel_per_hour: f64,
    pub true_threefold_per_hour: f64,
    pub background_per_hour_per_pixel: f64,
    pub singles_s: [f64; 3],
    pub herald_twofold_s: f64,
    pub twofold_13_s: f64,
    pub twofold_23_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub repetition_rate_hz: f64,
    pub mu: [f64; 2],
    /// Per-photon herald detection probabilities.
    pub herald_detection: [f64; 2],
    /// Per-photon delivery to the waveguide.
    pub signal_delivery: [f64; 2],
    pub conversion_probability: f64,
    pub upconversion_efficiency: f64,
    pub d3_dark_per_bin: f64,
    pub bin_width_ps: f64,

    pub signal_per_hour: f64,
    pub noise_per_hour_per_pixel: f64,
    /// Same-slot herald coincidences, `f·μ₁H₁·μ₂H₂`.
    pub herald_twofold_s: f64,
    /// `f·(μᵢHᵢ)` for the heralds and `f·p_dark` for D3.
    pub singles_s: [f64; 3],

    pub observed_reference: (f64, f64),
    pub predicted_reference: (f64, f64),
    pub exact: ExactRates,
}

impl RateReport {
    /// Counts expected in the peak pixel after `hours`, signal plus background.
    pub fn expected_peak_counts(&self, hours: f64) -> f64 {
        (self.signal_per_hour + self.noise_per_hour_per_pixel) * hours
    }

    pub fn expected_signal_counts(&self, hours: f64) -> f64 {
        self.signal_per_hour * hours
    }

    pub fn expected_background_mean(&self, hours: f64) -> f64 {
        self.noise_per_hour_per_pixel * hours
    }

    pub fn signal_to_noise(&self) -> f64 {
        self.signal_per_hour / self.noise_per_hour_per_pixel
    }
}

pub fn predict_rates(cfg: &ExperimentConfig) -> Result<RateReport> {
    cfg.validate()?;
    let f = cfg.clock.repetition_rate_hz;
    let per_hour = f * SECONDS_PER_HOUR;
    let [d1, d2, d3] = &cfg.detectors;
    let mu = [cfg.source1.mu, cfg.source2.mu];
    let h = [
        cfg.source1.herald_transmission() * d1.efficiency,
        cfg.source2.herald_transmission() * d2.efficiency,
    ];
    let t = [
        cfg.source1.signal_transmission(),
        cfg.source2.signal_transmission(),
    ];
    let eta_sfg = cfg.conversion_probability();
    let bin_ns = cfg.bin_width_ps() * 1e-3;
    let p_dark3 = dark_click_probability(d3, bin_ns);

    let herald_pair = mu[0] * h[0] * mu[1] * h[1];
    let signal = per_hour * herald_pair * t[0] * t[1] * eta_sfg * d3.efficiency;
    let noise = per_hour * herald_pair * p_dark3;

    let law = SlotModel::from_config(cfg)?.law();
    Ok(RateReport {
        repetition_rate_hz: f,
        mu,
        herald_detection: h,
        signal_delivery: t,
        conversion_probability: eta_sfg,
        upconversion_efficiency: d3.efficiency,
        d3_dark_per_bin: p_dark3,
        bin_width_ps: cfg.bin_width_ps(),
        signal_per_hour: signal,
        noise_per_hour_per_pixel: noise,
        herald_twofold_s: f * herald_pair,
        singles_s: [f * mu[0] * h[0], f * mu[1] * h[1], f * p_dark3],
        observed_reference: OBSERVED_REFERENCE,
        predicted_reference: PREDICTED_REFERENCE,
        exact: exact_rates(&law, f),
    })
}

fn exact_rates(law: &SlotLaw, f: f64) -> ExactRates {
    let per_hour = f * SECONDS_PER_HOUR;
    ExactRates {
        peak_pixel_per_hour: per_hour * law.p123(),
        true_threefold_per_hour: per_hour * law.p123_true(),
        background_per_hour_per_pixel: per_hour * law.pixel_rate(1, 2),
        singles_s: [f * law.p1(), f * law.p2(), f * law.p3()],
        herald_twofold_s: f * law.p12(),
        twofold_13_s: f * law.p13(),
        twofold_23_s: f * law.p23(),
    }
}

/// Peak-pixel and background-pixel counts turned into hourly rates.
pub fn observed_consistency(peak_counts: f64, background_mean: f64, hours: f64) -> Result<(f64, f64)> {
    if !(hours > 0.0) {
        return Err(Error::domain("rate_model", format!("integration time {hours} h must be positive")));
    }
    Ok((peak_counts / hours, background_mean / hours))
}

/// How background noise is evaluated when calibrating a transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseModel {
    /// `R₁₂ · p_dark(D3, bin)` from [`predict_rates`].
    ClosedForm,
    /// Accidental pixel rate from the exact slot law (what a simulation produces).
    ExactSlotLaw,
}

fn noise_per_hour(cfg: &ExperimentConfig, model: NoiseModel) -> Result<f64> {
    Ok(match model {
        NoiseModel::ClosedForm => predict_rates(cfg)?.noise_per_hour_per_pixel,
        NoiseModel::ExactSlotLaw => predict_rates(cfg)?.exact.background_per_hour_per_pixel,
    })
}

/// Finds the herald filter transmission, shared by both sources, in
/// `[0.1, 1]` that yields `target_per_hour` background per pixel.
pub fn calibrate_filter_transmission(
    cfg: &ExperimentConfig,
    target_per_hour: f64,
    model: NoiseModel,
) -> Result<f64> {
    let at = |x: f64| -> Result<f64> {
        let mut c = cfg.clone();
        c.source1.herald_filter_transmission = x;
        c.source2.herald_filter_transmission = x;
        noise_per_hour(&c, model)
    };
    let (mut lo, mut hi) = (0.1, 1.0);
    let (n_lo, n_hi) = (at(lo)?, at(hi)?);
    if !(n_lo <= target_per_hour && target_per_hour <= n_hi) {
        return Err(Error::Calibration(format!(
            "background {target_per_hour}/h is outside the reachable range {n_lo:.4}..{n_hi:.4}/h"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid)? < target_per_hour {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonEntry {
    pub statistic: String,
    pub observed: f64,
    pub expected: f64,
    pub z: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub entries: Vec<ComparisonEntry>,
    pub any_flagged: bool,
}

impl Comparison {
    pub fn get(&self, statistic: &str) -> Option<&ComparisonEntry> {
        self.entries.iter().find(|e| e.statistic == statistic)
    }
}

/// Flag threshold on |z|.
pub const COMPARISON_Z_LIMIT: f64 = 5.0;

fn entry(statistic: &str, observed: f64, expected: f64) -> ComparisonEntry {
    let z = if expected > 0.0 {
        (observed - expected) / expected.sqrt()
    } else if observed == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    ComparisonEntry {
        statistic: statistic.to_owned(),
        observed,
        expected,
        z,
        flagged: !(z.abs() <= COMPARISON_Z_LIMIT),
    }
}

/// Z-scores of simulated analyzer statistics against the exact slot law,
/// with Poisson errors on the expected counts.
///
/// Herald singles are compared in full mode only: the conditioned mode emits
/// heralds just around D3 clicks.
pub fn compare_mc_analytic(
    sim: &SimulationResult,
    analysis: &Analysis,
    cfg: &ExperimentConfig,
) -> Result<Comparison> {
    if sim.config != *cfg {
        return Err(Error::Mismatch(
            "simulation and prediction use different configurations".to_owned(),
        ));
    }
    let period = cfg.clock.period_ps();
    if ((analysis.threefold.bin_width_ps - period) / period).abs() > 1e-6 {
        return Err(Error::Mismatch(
            "analytic comparison requires one bin per pulse period".to_owned(),
        ));
    }
    let law = SlotModel::from_config(cfg)?.law();
    let n = sim.truth.slots as f64;
    // Slots n at which both n − a and n − b are inside the run.
    let span = |offsets: &[i64]| -> f64 {
        let hi = offsets.iter().copied().chain([0]).max().unwrap();
        let lo = offsets.iter().copied().chain([0]).min().unwrap();
        (n - (hi - lo) as f64).max(0.0)
    };

    let mut e = Vec::new();
    let h = &analysis.threefold;
    let peak = analysis.significance.peak_coords;
    e.push(entry(
        "threefold_peak",
        h.get(peak.0, peak.1) as f64,
        span(&[peak.0, peak.1]) * law.pixel_rate(peak.0, peak.1),
    ));
    let r = cfg.analysis.peak_exclusion_radius as i64;
    let (mut obs_bg, mut exp_bg) = (0.0, 0.0);
    for ((a, b), c) in h.pixels() {
        if (a - peak.0).abs() > r || (b - peak.1).abs() > r {
            obs_bg += c as f64;
            exp_bg += span(&[a, b]) * law.pixel_rate(a, b);
        }
    }
    e.push(entry("threefold_background_total", obs_bg, exp_bg));
    e.push(entry("threefold_total", h.total() as f64, {
        let mut s = 0.0;
        for ((a, b), _) in h.pixels() {
            s += span(&[a, b]) * law.pixel_rate(a, b);
        }
        s
    }));
    e.push(entry("d3_singles", analysis.tag_counts[2] as f64, n * law.p3()));
    for (k, tf) in analysis.twofold.iter().enumerate() {
        let herald = k as u8 + 1;
        let w = tf.half_window_bins as i64;
        e.push(entry(
            &format!("twofold_{herald}3_zero"),
            tf.get(0) as f64,
            n * law.twofold_rate(herald, 0),
        ));
        let off_obs = (tf.total() - tf.get(0)) as f64;
        let off_exp: f64 = (-w..=w)
            .filter(|&t| t != 0)
            .map(|t| span(&[t]) * law.twofold_rate(herald, t))
            .sum();
        e.push(entry(&format!("twofold_{herald}3_offpeak"), off_obs, off_exp));
    }
    if sim.mode == SimMode::Full {
        e.push(entry("d1_singles", analysis.tag_counts[0] as f64, n * law.p1()));
        e.push(entry("d2_singles", analysis.tag_counts[1] as f64, n * law.p2()));
    }
    e.push(entry("true_triples", sim.truth.true_triples as f64, n * law.p123_true()));
    let any_flagged = e.iter().any(|x| x.flagged);
    Ok(Comparison {
        entries: e,
        any_flagged,
    })
}
