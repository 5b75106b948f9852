//! Run reports: a JSON document plus a plain-text summary.
//!
//! Reports carry no wall-clock time, so rerunning a command from the echoed
//! configuration reproduces the report byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::analysis::{Analysis, SignificanceReport};
use crate::config::{ExperimentConfig, SimMode};
use crate::error::{Error, Result};
use crate::rates::{Comparison, RateReport};
use crate::sim::{DelayScanPoint, SimulationResult, TruthCounts};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Span of the analyzed or generated streams.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stream_duration_ps: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub mode: SimMode,
    pub seed: u64,
    pub duration_s: f64,
    pub truth: TruthCounts,
    pub tag_counts: [u64; 3],
}

impl SimulationSummary {
    pub fn of(sim: &SimulationResult) -> Self {
        Self {
            mode: sim.mode,
            seed: sim.seed,
            duration_s: sim.duration_s,
            truth: sim.truth,
            tag_counts: sim.streams.each_ref().map(|s| s.len() as u64),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisSummary {
    pub bin_width_ps: f64,
    pub half_window_bins: u32,
    pub duration_s: f64,
    pub tag_counts: [u64; 3],
    pub threefold_total: u64,
    pub significance: SignificanceReport,
    /// Zero-delay twofold counts of herald 1 and herald 2 against D3.
    pub twofold_zero: [u64; 2],
    pub peak_rate_per_hour: f64,
    pub background_rate_per_hour: f64,
}

impl AnalysisSummary {
    pub fn of(a: &Analysis) -> Self {
        let hours = a.duration_s / 3600.0;
        Self {
            bin_width_ps: a.threefold.bin_width_ps,
            half_window_bins: a.threefold.half_window_bins,
            duration_s: a.duration_s,
            tag_counts: a.tag_counts,
            threefold_total: a.threefold.total(),
            significance: a.significance.clone(),
            twofold_zero: [a.twofold[0].get(0), a.twofold[1].get(0)],
            peak_rate_per_hour: a.significance.peak_count as f64 / hours,
            background_rate_per_hour: a.significance.background_mean / hours,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictionSummary {
    pub rates: RateReport,
    /// Expected counts over the analyzed duration, when one is known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_peak_counts: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_background_mean: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DelayScanSummary {
    pub points: Vec<DelayScanPoint>,
    pub fitted_fwhm_ps: Option<f64>,
    pub model_fwhm_ps: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhasematchSummary {
    pub lambda_lo_nm: f64,
    pub lambda_hi_nm: f64,
    pub step_nm: f64,
    pub sfg_peak: f64,
    pub shg_peak: f64,
    pub sfg_to_shg_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<ExperimentConfig>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prediction: Option<PredictionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delay_scan: Option<DelayScanSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phasematch: Option<PhasematchSummary>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            provenance: Provenance {
                tool: TOOL_NAME,
                version: TOOL_VERSION,
                command: command.to_owned(),
                seed: None,
                stream_duration_ps: None,
            },
            config: None,
            warnings: Vec::new(),
            prediction: None,
            simulation: None,
            analysis: None,
            comparison: None,
            delay_scan: None,
            phasematch: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn text_summary(&self) -> String {
        let mut s = String::new();
        let p = &self.provenance;
        let _ = writeln!(s, "{} {} {}", p.tool, p.version, p.command);
        if let Some(seed) = p.seed {
            let _ = writeln!(s, "seed {seed}");
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        if let Some(pr) = &self.prediction {
            let r = &pr.rates;
            let _ = writeln!(s, "\npredicted rates");
            let _ = writeln!(s, "  signal            {:.4} /h", r.signal_per_hour);
            let _ = writeln!(s, "  noise per pixel   {:.4} /h", r.noise_per_hour_per_pixel);
            let _ = writeln!(s, "  herald twofold    {:.4e} /s", r.herald_twofold_s);
            let _ = writeln!(
                s,
                "  singles           {:.4e} {:.4e} {:.4e} /s",
                r.singles_s[0], r.singles_s[1], r.singles_s[2]
            );
            let _ = writeln!(
                s,
                "  exact law         peak {:.4} /h, true {:.4} /h, background {:.4} /h",
                r.exact.peak_pixel_per_hour,
                r.exact.true_threefold_per_hour,
                r.exact.background_per_hour_per_pixel
            );
            let _ = writeln!(
                s,
                "  published         predicted {:.2}/{:.2} /h, observed {:.2}/{:.2} /h",
                r.predicted_reference.0,
                r.predicted_reference.1,
                r.observed_reference.0,
                r.observed_reference.1
            );
            if let (Some(peak), Some(bg)) = (pr.expected_peak_counts, pr.expected_background_mean) {
                let _ = writeln!(s, "  expected counts   peak {peak:.2}, background {bg:.2}");
            }
        }
        if let Some(sim) = &self.simulation {
            let _ = writeln!(s, "\nsimulation ({:?}, {} s)", sim.mode, sim.duration_s);
            let _ = writeln!(
                s,
                "  tags              {} {} {}",
                sim.tag_counts[0], sim.tag_counts[1], sim.tag_counts[2]
            );
            let _ = writeln!(
                s,
                "  truth             {} slots, {} true triples, {} upconverted, {} dark D3",
                sim.truth.slots,
                sim.truth.true_triples,
                sim.truth.d3_upconverted,
                sim.truth.accidental_candidates
            );
        }
        if let Some(a) = &self.analysis {
            let g = &a.significance;
            let _ = writeln!(s, "\nanalysis ({:.1} s, bin {:.4} ps, ±{} bins)", a.duration_s, a.bin_width_ps, a.half_window_bins);
            let _ = writeln!(s, "  threefold total   {}", a.threefold_total);
            let _ = writeln!(s, "  peak {:?}      {}", g.peak_coords, g.peak_count);
            let _ = writeln!(
                s,
                "  background        {:.3} per pixel over {} pixels, dispersion {}",
                g.background_mean,
                g.n_pixels,
                g.dispersion.map_or("n/a".to_owned(), |d| format!("{d:.3}"))
            );
            let z = if g.z_infinite {
                "infinite".to_owned()
            } else {
                format!("{:.2}", g.z_sigma)
            };
            let _ = writeln!(s, "  significance      {z} sigma, log10 tail {:.3}", g.tail_log10_prob);
            let _ = writeln!(
                s,
                "  rates             peak {:.4} /h, background {:.4} /h",
                a.peak_rate_per_hour, a.background_rate_per_hour
            );
        }
        if let Some(c) = &self.comparison {
            let _ = writeln!(s, "\nsimulation vs exact law");
            for e in &c.entries {
                let _ = writeln!(
                    s,
                    "  {:<28} {:>14.1} {:>16.2} z={:+.2}{}",
                    e.statistic,
                    e.observed,
                    e.expected,
                    e.z,
                    if e.flagged { "  FLAG" } else { "" }
                );
            }
        }
        if let Some(d) = &self.delay_scan {
            let _ = writeln!(s, "\ndelay scan");
            for p in &d.points {
                let _ = writeln!(s, "  {:>8.2} ps  {:>12.2} /s", p.delay_ps, p.twofold_rate_hz);
            }
            let fit = d.fitted_fwhm_ps.map_or("n/a".to_owned(), |f| format!("{f:.3}"));
            let _ = writeln!(s, "  fitted FWHM {fit} ps (model {:.3} ps)", d.model_fwhm_ps);
        }
        if let Some(pm) = &self.phasematch {
            let _ = writeln!(s, "\nphase-matching map {:.3}..{:.3} nm step {} nm", pm.lambda_lo_nm, pm.lambda_hi_nm, pm.step_nm);
            let _ = writeln!(s, "  SFG peak {:.6e}, SHG peak {:.6e}", pm.sfg_peak, pm.shg_peak);
            if let Some(r) = pm.sfg_to_shg_ratio {
                let _ = writeln!(s, "  SFG/SHG {r:.6}");
            }
        }
        s
    }

    /// Writes `report.json` and `report.txt` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let json = dir.join("report.json");
        std::fs::write(&json, self.to_json() + "\n").map_err(|e| Error::io(&json, e))?;
        let txt = dir.join("report.txt");
        std::fs::write(&txt, self.text_summary()).map_err(|e| Error::io(&txt, e))
    }
}
