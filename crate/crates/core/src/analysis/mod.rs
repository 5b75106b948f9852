//! Coincidence analysis of time-tag streams.

mod g2;
mod histogram;
mod stats;

pub use g2::{estimate_conditional_g2, G2Estimate};
pub use histogram::{
    threefold_histogram, threefold_histogram_par, twofold_histogram, CoincHistogram2D,
    TwofoldHistogram,
};
pub use stats::{
    estimate_background, poisson_tail_log10, significance, significance_report,
    BackgroundEstimate, Significance, SignificanceReport, MIN_BACKGROUND_PIXELS,
};

use serde::Serialize;

use crate::error::Result;
use crate::timetag::TimeTagStream;

/// Binning and background settings for [`analyze`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisSettings {
    pub bin_width_ps: f64,
    pub half_window_bins: u32,
    pub peak_exclusion_radius: u32,
    /// Designated signal pixel.
    pub peak: (i64, i64),
}

impl AnalysisSettings {
    pub fn from_config(cfg: &crate::config::ExperimentConfig) -> Self {
        Self {
            bin_width_ps: cfg.bin_width_ps(),
            half_window_bins: cfg.analysis.half_window_bins,
            peak_exclusion_radius: cfg.analysis.peak_exclusion_radius,
            peak: (0, 0),
        }
    }
}

/// Everything the analyzer derives from one set of D1, D2, D3 streams.
#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub threefold: CoincHistogram2D,
    /// Herald 1 and herald 2 against D3.
    pub twofold: [TwofoldHistogram; 2],
    pub significance: SignificanceReport,
    pub tag_counts: [u64; 3],
    pub duration_s: f64,
}

pub fn analyze(streams: [&TimeTagStream; 3], settings: &AnalysisSettings) -> Result<Analysis> {
    let [s1, s2, s3] = streams;
    let (bin, w) = (settings.bin_width_ps, settings.half_window_bins);
    let threefold = threefold_histogram_par(s1, s2, s3, bin, w)?;
    let twofold = [
        twofold_histogram(s1, s3, bin, w)?,
        twofold_histogram(s2, s3, bin, w)?,
    ];
    let significance = significance_report(&threefold, settings.peak, settings.peak_exclusion_radius)?;
    Ok(Analysis {
        duration_s: threefold.duration_s,
        threefold,
        twofold,
        significance,
        tag_counts: [s1.len() as u64, s2.len() as u64, s3.len() as u64],
    })
}
