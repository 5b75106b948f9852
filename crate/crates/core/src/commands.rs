//! The command implementations behind the CLI. Each writes its artifacts into
//! an output directory and returns the run report it saved there.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::analysis::{analyze, Analysis, AnalysisSettings};
use crate::config::LoadedConfig;
use crate::error::{Error, Result};
use crate::optics::{classical_map, PhasematchParams, WavelengthGrid};
use crate::rates::{compare_mc_analytic, predict_rates};
use crate::report::{
    AnalysisSummary, DelayScanSummary, PhasematchSummary, PredictionSummary, RunReport,
    SimulationSummary,
};
use crate::sim::{fit_scan_fwhm, simulate, simulate_delay_scan, SimOptions, SimulationResult};
use crate::timetag::TimeTagStream;

/// File names of the per-channel tag files, D1 to D3.
pub const TAG_FILES: [&str; 3] = ["D1.ttag", "D2.ttag", "D3.ttag"];

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).map_err(|e| Error::io(path, e))
}

fn write_histograms(a: &Analysis, out_dir: &Path) -> Result<()> {
    write_with(&out_dir.join("threefold.csv"), |w| a.threefold.write_csv(w))?;
    write_with(&out_dir.join("twofold_13.csv"), |w| a.twofold[0].write_csv(w))?;
    write_with(&out_dir.join("twofold_23.csv"), |w| a.twofold[1].write_csv(w))
}

fn prediction_for(loaded: &LoadedConfig, hours: Option<f64>) -> Result<PredictionSummary> {
    let rates = predict_rates(&loaded.config)?;
    Ok(PredictionSummary {
        expected_peak_counts: hours.map(|h| rates.expected_peak_counts(h)),
        expected_background_mean: hours.map(|h| rates.expected_background_mean(h)),
        rates,
    })
}

/// Simulation plus the analysis and comparison of its output.
pub struct SimulateOutput {
    pub report: RunReport,
    pub sim: SimulationResult,
    pub analysis: Analysis,
}

/// Simulates, writes `D1.ttag`..`D3.ttag`, the histograms, the echoed
/// configuration and the report.
pub fn cmd_simulate(loaded: &LoadedConfig, out_dir: &Path, opts: SimOptions) -> Result<SimulateOutput> {
    let cfg = &loaded.config;
    create_dir(out_dir)?;
    let sim = simulate(cfg, opts)?;
    for (s, name) in sim.streams.iter().zip(TAG_FILES) {
        s.save(&out_dir.join(name))?;
    }
    let echo = out_dir.join("config.json");
    std::fs::write(&echo, cfg.to_json() + "\n").map_err(|e| Error::io(&echo, e))?;

    let [s1, s2, s3] = &sim.streams;
    let analysis = analyze([s1, s2, s3], &AnalysisSettings::from_config(cfg))?;
    write_histograms(&analysis, out_dir)?;

    let mut report = RunReport::new("simulate");
    report.provenance.seed = Some(sim.seed);
    report.provenance.stream_duration_ps = Some(s3.duration_ps());
    report.config = Some(cfg.clone());
    report.warnings = loaded.warnings.clone();
    report.prediction = Some(prediction_for(loaded, Some(sim.duration_s / 3600.0))?);
    report.simulation = Some(SimulationSummary::of(&sim));
    report.analysis = Some(AnalysisSummary::of(&analysis));
    report.comparison = Some(compare_mc_analytic(&sim, &analysis, cfg)?);
    report.save(out_dir)?;
    Ok(SimulateOutput {
        report,
        sim,
        analysis,
    })
}

/// Resolves tag inputs: three files, or one directory holding `D1.ttag`..`D3.ttag`.
pub fn resolve_tag_files(inputs: &[PathBuf]) -> Result<[PathBuf; 3]> {
    match inputs {
        [dir] if dir.is_dir() => Ok(TAG_FILES.map(|n| dir.join(n))),
        [a, b, c] => Ok([a.clone(), b.clone(), c.clone()]),
        _ => Err(Error::domain(
            "driver_cli",
            "analyze takes three tag files (D1 D2 D3) or one directory containing D1.ttag, D2.ttag, D3.ttag",
        )),
    }
}

/// Loads three tag files sharing one duration: `duration_s` when given,
/// otherwise one past the latest tag in any stream.
pub fn load_streams(files: &[PathBuf; 3], duration_s: Option<f64>) -> Result<[TimeTagStream; 3]> {
    let [a, b, c] = files;
    let raw = [
        TimeTagStream::load(a, None)?,
        TimeTagStream::load(b, None)?,
        TimeTagStream::load(c, None)?,
    ];
    let duration_ps = match duration_s {
        Some(d) => (d * 1e12).round() as u64,
        None => raw.iter().map(|s| s.duration_ps()).max().unwrap_or(0),
    };
    let [x, y, z] = raw;
    Ok([
        x.with_duration(duration_ps)?,
        y.with_duration(duration_ps)?,
        z.with_duration(duration_ps)?,
    ])
}

/// Analyzes existing tag files. A configuration, when given, adds the
/// predicted rates and expected counts for the analyzed span.
pub fn cmd_analyze(
    files: &[PathBuf; 3],
    settings: &AnalysisSettings,
    duration_s: Option<f64>,
    config: Option<&LoadedConfig>,
    out_dir: &Path,
) -> Result<(RunReport, Analysis)> {
    create_dir(out_dir)?;
    let streams = load_streams(files, duration_s)?;
    let [s1, s2, s3] = &streams;
    let analysis = analyze([s1, s2, s3], settings)?;
    write_histograms(&analysis, out_dir)?;

    let mut report = RunReport::new("analyze");
    report.provenance.stream_duration_ps = Some(s3.duration_ps());
    if let Some(loaded) = config {
        report.config = Some(loaded.config.clone());
        report.warnings = loaded.warnings.clone();
        report.prediction = Some(prediction_for(loaded, Some(analysis.duration_s / 3600.0))?);
    }
    report.analysis = Some(AnalysisSummary::of(&analysis));
    report.save(out_dir)?;
    Ok((report, analysis))
}

pub fn cmd_predict(loaded: &LoadedConfig, out_dir: Option<&Path>) -> Result<RunReport> {
    let mut report = RunReport::new("predict");
    report.config = Some(loaded.config.clone());
    report.warnings = loaded.warnings.clone();
    report.prediction = Some(prediction_for(loaded, Some(loaded.config.duration_s / 3600.0))?);
    if let Some(dir) = out_dir {
        create_dir(dir)?;
        report.save(dir)?;
    }
    Ok(report)
}

/// Wavelength range of a phase-matching map.
#[derive(Debug, Clone, Copy)]
pub struct MapRange {
    pub lo_nm: f64,
    pub hi_nm: f64,
    pub step_nm: f64,
    pub power_mw: f64,
}

impl MapRange {
    /// ±1.5 nm around the degenerate point where both SHG ridges cross the SFG ridge.
    pub fn around_degeneracy(pm: &PhasematchParams) -> Self {
        let centre = 0.5 * (pm.lambda1_center_nm + pm.lambda2_center_nm);
        Self {
            lo_nm: centre - 1.5,
            hi_nm: centre + 1.5,
            step_nm: 0.01,
            power_mw: 1.0,
        }
    }
}

/// Writes the classical map (`pmmap.csv`) and the report.
pub fn cmd_pmmap(pm: &PhasematchParams, range: MapRange, out_dir: &Path) -> Result<RunReport> {
    create_dir(out_dir)?;
    let grid = WavelengthGrid::square(range.lo_nm, range.hi_nm, range.step_nm, range.power_mw)?;
    let map = classical_map(&grid, pm)?;
    write_with(&out_dir.join("pmmap.csv"), |w| map.write_csv(w))?;
    let mut report = RunReport::new("pmmap");
    report.phasematch = Some(PhasematchSummary {
        lambda_lo_nm: range.lo_nm,
        lambda_hi_nm: range.hi_nm,
        step_nm: range.step_nm,
        sfg_peak: map.sfg_peak(),
        shg_peak: map.shg_peak(),
        sfg_to_shg_ratio: map.sfg_to_shg_ratio(),
    });
    report.save(out_dir)?;
    Ok(report)
}

/// Delays `-half..=half` in `step` increments.
pub fn delay_grid(half_range_ps: f64, step_ps: f64) -> Result<Vec<f64>> {
    if !(step_ps > 0.0 && half_range_ps >= 0.0) {
        return Err(Error::domain("driver_cli", "delay range and step must be positive"));
    }
    let n = (half_range_ps / step_ps + 1e-9).floor() as i64;
    Ok((-n..=n).map(|i| i as f64 * step_ps).collect())
}

/// Writes `delayscan.csv` and the report with the fitted peak width.
pub fn cmd_delayscan(loaded: &LoadedConfig, delays_ps: &[f64], out_dir: &Path) -> Result<RunReport> {
    create_dir(out_dir)?;
    let cfg = &loaded.config;
    let points = simulate_delay_scan(cfg, delays_ps, cfg.seed)?;
    write_with(&out_dir.join("delayscan.csv"), |w| {
        use std::io::Write;
        writeln!(w, "delay_ps,counts,rate_hz,expected_rate_hz")?;
        for p in &points {
            writeln!(w, "{},{},{},{}", p.delay_ps, p.counts, p.twofold_rate_hz, p.expected_rate_hz)?;
        }
        Ok(())
    })?;
    let mut report = RunReport::new("delayscan");
    report.provenance.seed = Some(cfg.seed);
    report.config = Some(cfg.clone());
    report.warnings = loaded.warnings.clone();
    report.delay_scan = Some(DelayScanSummary {
        fitted_fwhm_ps: fit_scan_fwhm(&points).ok(),
        model_fwhm_ps: cfg.clock.pulse_fwhm_ps * std::f64::consts::SQRT_2,
        points,
    });
    report.save(out_dir)?;
    Ok(report)
}
