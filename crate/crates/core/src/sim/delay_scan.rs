//! Alignment scan: source 2 is replaced by a bright coherent pulse train and
//! the D2–D3 twofold rate is recorded as the relative delay is stepped.
//!
//! The twofold probability per slot comes from the exact slot law; the count
//! at each delay is one binomial draw over the dwell time's slots.

use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::optics::pair_conversion_probability;
use crate::rng::{stream_rng, Domain};
use crate::slot_law::SlotModel;
use crate::source::{PairDistribution, PairStatistics};

const MODULE: &str = "delay_scan";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayScanPoint {
    pub delay_ps: f64,
    pub counts: u64,
    pub twofold_rate_hz: f64,
    pub expected_rate_hz: f64,
}

pub fn simulate_delay_scan(
    cfg: &ExperimentConfig,
    delays_ps: &[f64],
    seed: u64,
) -> Result<Vec<DelayScanPoint>> {
    cfg.validate()?;
    let fwhm = cfg.clock.pulse_fwhm_ps;
    if let Some(d) = delays_ps.iter().find(|d| !(d.abs() <= 10.0 * fwhm)) {
        return Err(Error::domain(
            MODULE,
            format!("delay {d} ps outside ±10 pulse widths (±{} ps)", 10.0 * fwhm),
        ));
    }
    let mut model = SlotModel::from_config(cfg)?;
    model.pairs2 = PairDistribution::for_source(
        PairStatistics::Poisson,
        cfg.delay_scan.coherent_mean_photons,
        1,
    )?;
    let eff3 = cfg.upconversion_detector().efficiency;
    let dwell = cfg.delay_scan.dwell_s;
    let slots = cfg.clock.slots_in(dwell);

    delays_ps
        .iter()
        .enumerate()
        .map(|(i, &delay)| {
            model.convert_detect = pair_conversion_probability(delay, &cfg.phasematch, fwhm)? * eff3;
            let q = model.law().p23().clamp(0.0, 1.0);
            let mut rng = stream_rng(seed, Domain::DelayScan, i as u64);
            let counts = Binomial::new(slots, q)
                .map_err(|e| Error::domain(MODULE, e.to_string()))?
                .sample(&mut rng);
            Ok(DelayScanPoint {
                delay_ps: delay,
                counts,
                twofold_rate_hz: counts as f64 / dwell,
                expected_rate_hz: q * slots as f64 / dwell,
            })
        })
        .collect()
}

/// FWHM of the scan peak from a weighted Gaussian fit above the accidental
/// floor, which is estimated from the outer quarter of the scanned range.
pub fn fit_scan_fwhm(points: &[DelayScanPoint]) -> Result<f64> {
    let reach = points.iter().map(|p| p.delay_ps.abs()).fold(0.0, f64::max);
    let outer: Vec<f64> = points
        .iter()
        .filter(|p| p.delay_ps.abs() >= 0.75 * reach)
        .map(|p| p.twofold_rate_hz)
        .collect();
    if outer.len() < 2 || points.len() < 5 {
        return Err(Error::domain(MODULE, "too few scan points to fit"));
    }
    let floor = outer.iter().sum::<f64>() / outer.len() as f64;
    let peak = points
        .iter()
        .map(|p| p.twofold_rate_hz - floor)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) {
        return Err(Error::domain(MODULE, "no peak above the floor"));
    }

    // Weighted least squares of ln(y) = a + b·d + c·d².
    let mut m = [[0.0f64; 3]; 3];
    let mut v = [0.0f64; 3];
    let mut used = 0;
    for p in points {
        let y = p.twofold_rate_hz - floor;
        if y < 0.1 * peak || p.counts == 0 {
            continue;
        }
        used += 1;
        // Var(ln y) ≈ Var(y)/y² with Poisson counts.
        let rel_var = p.twofold_rate_hz / (p.counts as f64 * y * y) * p.twofold_rate_hz;
        let w = 1.0 / rel_var;
        let x = [1.0, p.delay_ps, p.delay_ps * p.delay_ps];
        for r in 0..3 {
            v[r] += w * x[r] * y.ln();
            for c in 0..3 {
                m[r][c] += w * x[r] * x[c];
            }
        }
    }
    if used < 3 {
        return Err(Error::domain(MODULE, "too few points above the floor"));
    }
    let coef = solve3(m, v).ok_or_else(|| Error::domain(MODULE, "singular fit"))?;
    if !(coef[2] < 0.0) {
        return Err(Error::domain(MODULE, "fitted curvature is not a peak"));
    }
    let sigma = (-0.5 / coef[2]).sqrt();
    Ok(2.0 * (2.0 * std::f64::consts::LN_2).sqrt() * sigma)
}

fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col] == 0.0 {
            return None;
        }
        m.swap(col, piv);
        v.swap(col, piv);
        for r in (col + 1)..3 {
            let f = m[r][col] / m[col][col];
            for c in col..3 {
                m[r][c] -= f * m[col][c];
            }
            v[r] -= f * v[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = ((r + 1)..3).map(|c| m[r][c] * x[c]).sum();
        x[r] = (v[r] - s) / m[r][r];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::tests::minimal_json;

    #[test]
    fn solver() {
        let x = solve3([[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]], [3.0, 5.0, 5.0]).unwrap();
        for (a, b) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_delay_rejected() {
        let cfg = ExperimentConfig::from_json(&minimal_json()).unwrap();
        assert!(simulate_delay_scan(&cfg, &[0.0, 101.0], 1).is_err());
    }

    #[test]
    fn expected_curve_is_gaussian_above_floor() {
        let cfg = ExperimentConfig::from_json(&minimal_json()).unwrap();
        let pts = simulate_delay_scan(&cfg, &[-100.0, 0.0, 10.0 * 2f64.sqrt(), 100.0], 1).unwrap();
        let floor = 0.5 * (pts[0].expected_rate_hz + pts[3].expected_rate_hz);
        let ratio = (pts[2].expected_rate_hz - floor) / (pts[1].expected_rate_hz - floor);
        assert!((ratio - 0.0625).abs() < 1e-3, "{ratio}");
    }
}
