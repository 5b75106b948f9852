use serde::Serialize;

use super::histogram::CoincHistogram2D;
use crate::error::{Error, Result};

const MODULE: &str = "coincidence_analyzer";

/// Minimum number of background pixels for a mean estimate.
pub const MIN_BACKGROUND_PIXELS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BackgroundEstimate {
    pub mean: f64,
    /// Sample variance over mean; `None` when the mean is zero.
    pub dispersion: Option<f64>,
    pub n_pixels: usize,
}

/// Mean count of pixels farther than `radius` (Chebyshev distance) from `peak`.
pub fn estimate_background(
    h: &CoincHistogram2D,
    peak: (i64, i64),
    radius: u32,
) -> Result<BackgroundEstimate> {
    let r = radius as i64;
    let vals: Vec<f64> = h
        .pixels()
        .filter(|((a, b), _)| (a - peak.0).abs() > r || (b - peak.1).abs() > r)
        .map(|(_, c)| c as f64)
        .collect();
    if vals.len() < MIN_BACKGROUND_PIXELS {
        return Err(Error::domain(
            MODULE,
            format!(
                "{} background pixels, need at least {MIN_BACKGROUND_PIXELS}",
                vals.len()
            ),
        ));
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(BackgroundEstimate {
        mean,
        dispersion: (mean > 0.0).then(|| var / mean),
        n_pixels: vals.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Significance {
    /// `(peak − mean)/√mean`; infinite when the mean is zero and the peak is not.
    pub z_sigma: f64,
    pub infinite: bool,
}

pub fn significance(peak_count: u64, background_mean: f64) -> Result<Significance> {
    if !(background_mean >= 0.0) {
        return Err(Error::domain(
            MODULE,
            format!("background mean {background_mean} must be non-negative"),
        ));
    }
    if background_mean == 0.0 {
        return Ok(if peak_count == 0 {
            Significance {
                z_sigma: 0.0,
                infinite: false,
            }
        } else {
            Significance {
                z_sigma: f64::INFINITY,
                infinite: true,
            }
        });
    }
    Ok(Significance {
        z_sigma: (peak_count as f64 - background_mean) / background_mean.sqrt(),
        infinite: false,
    })
}

/// `log₁₀ P(X ≥ k)` for `X ~ Poisson(λ)`, summed in log space.
///
/// Above the mean the upper tail is summed directly; at or below it the lower
/// sum is formed and subtracted, which is well conditioned there since the
/// upper tail is at least about one half.
pub fn poisson_tail_log10(k: u64, lambda: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if !(lambda > 0.0) {
        return f64::NEG_INFINITY;
    }
    let ln_term = |j: u64| -lambda + j as f64 * lambda.ln() - libm::lgamma(j as f64 + 1.0);
    let ln = if k as f64 > lambda {
        // Σ_{j≥k} t_j / t_k with t_{j+1}/t_j = λ/(j+1) < 1.
        let mut s = 1.0;
        let mut r = 1.0;
        let mut j = k;
        loop {
            j += 1;
            r *= lambda / j as f64;
            s += r;
            if r < 1e-17 * s {
                break;
            }
        }
        ln_term(k) + s.ln()
    } else {
        // Σ_{j<k} t_j / t_{k−1} with t_{j−1}/t_j = j/λ ≤ 1.
        let mut s = 1.0;
        let mut r = 1.0;
        let mut j = k - 1;
        while j > 0 {
            r *= j as f64 / lambda;
            s += r;
            if r < 1e-17 * s {
                break;
            }
            j -= 1;
        }
        let ln_lower = ln_term(k - 1) + s.ln();
        (-ln_lower.exp()).ln_1p()
    };
    (ln / std::f64::consts::LN_10).min(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignificanceReport {
    pub peak_coords: (i64, i64),
    pub peak_count: u64,
    pub background_mean: f64,
    pub dispersion: Option<f64>,
    pub z_sigma: f64,
    pub z_infinite: bool,
    pub tail_log10_prob: f64,
    pub n_pixels: usize,
    pub max_pixel: (i64, i64),
    pub max_count: u64,
}

/// Background, z-score and Poisson tail for the designated signal pixel.
pub fn significance_report(
    h: &CoincHistogram2D,
    peak: (i64, i64),
    exclusion_radius: u32,
) -> Result<SignificanceReport> {
    let bg = estimate_background(h, peak, exclusion_radius)?;
    let peak_count = h.get(peak.0, peak.1);
    let sig = significance(peak_count, bg.mean)?;
    let (max_pixel, max_count) = h.max_pixel();
    Ok(SignificanceReport {
        peak_coords: peak,
        peak_count,
        background_mean: bg.mean,
        dispersion: bg.dispersion,
        z_sigma: sig.z_sigma,
        z_infinite: sig.infinite,
        tail_log10_prob: poisson_tail_log10(peak_count, bg.mean),
        n_pixels: bg.n_pixels,
        max_pixel,
        max_count,
    })
}
