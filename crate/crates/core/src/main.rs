use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use triplet_sim::analysis::AnalysisSettings;
use triplet_sim::commands::{
    cmd_analyze, cmd_delayscan, cmd_pmmap, cmd_predict, cmd_simulate, delay_grid,
    resolve_tag_files, MapRange,
};
use triplet_sim::config::{load_config, LoadedConfig, SimMode};
use triplet_sim::optics::PhasematchParams;
use triplet_sim::sim::SimOptions;
use triplet_sim::{Error, Result};

#[derive(Parser)]
#[command(version, about = "Threefold-coincidence simulator and analyzer for two heralded photon sources")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "duration-s")]
    duration_s: Option<f64>,
    /// full or conditioned
    #[arg(long)]
    mode: Option<SimMode>,
    #[arg(long = "bin-ps")]
    bin_ps: Option<f64>,
    #[arg(long = "window-bins")]
    window_bins: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate tag streams, then analyze them.
    Simulate(Overrides),
    /// Analyze existing tag files: three paths (D1 D2 D3) or one directory.
    Analyze {
        #[command(flatten)]
        common: Overrides,
        #[arg(required = true, num_args = 1..=3)]
        tags: Vec<PathBuf>,
        /// Designated signal pixel, as τ31,τ32 in bins.
        #[arg(long, value_parser = parse_pixel, default_value = "0,0")]
        peak: (i64, i64),
        #[arg(long = "exclusion-radius")]
        exclusion_radius: Option<u32>,
    },
    /// Closed-form and exact rate predictions.
    Predict(Overrides),
    /// Classical SFG/SHG phase-matching map.
    Pmmap {
        #[command(flatten)]
        common: Overrides,
        #[arg(long = "lo-nm")]
        lo_nm: Option<f64>,
        #[arg(long = "hi-nm")]
        hi_nm: Option<f64>,
        #[arg(long = "step-nm", default_value_t = 0.01)]
        step_nm: f64,
        #[arg(long = "power-mw", default_value_t = 1.0)]
        power_mw: f64,
    },
    /// Twofold D2–D3 rate while scanning the relative delay.
    Delayscan {
        #[command(flatten)]
        common: Overrides,
        /// Scan from −range to +range.
        #[arg(long = "range-ps", default_value_t = 50.0)]
        range_ps: f64,
        #[arg(long = "step-ps", default_value_t = 2.0)]
        step_ps: f64,
    },
}

fn parse_pixel(s: &str) -> std::result::Result<(i64, i64), String> {
    let (a, b) = s.split_once(',').ok_or("expected two comma-separated integers")?;
    Ok((
        a.trim().parse().map_err(|e| format!("{e}"))?,
        b.trim().parse().map_err(|e| format!("{e}"))?,
    ))
}

impl Overrides {
    fn load(&self) -> Result<Option<LoadedConfig>> {
        let Some(path) = &self.config else {
            return Ok(None);
        };
        let mut loaded = load_config(path)?;
        let cfg = &mut loaded.config;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = self.duration_s {
            cfg.duration_s = d;
        }
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if let Some(b) = self.bin_ps {
            cfg.analysis.bin_width_ps = Some(b);
        }
        if let Some(w) = self.window_bins {
            cfg.analysis.half_window_bins = w;
        }
        cfg.validate()?;
        Ok(Some(loaded))
    }

    fn require(&self) -> Result<LoadedConfig> {
        self.load()?.ok_or_else(|| {
            Error::Validation(vec!["--config is required for this command".to_owned()])
        })
    }
}

fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Simulate(o) => {
            let loaded = o.require()?;
            Ok(cmd_simulate(&loaded, &o.out, SimOptions::default())?.report.text_summary())
        }
        Command::Analyze {
            common,
            tags,
            peak,
            exclusion_radius,
        } => {
            let loaded = common.load()?;
            let files = resolve_tag_files(&tags)?;
            let mut settings = match &loaded {
                Some(l) => AnalysisSettings::from_config(&l.config),
                None => AnalysisSettings {
                    bin_width_ps: triplet_sim::clock::ClockParams::default().period_ps(),
                    half_window_bins: 20,
                    peak_exclusion_radius: 0,
                    peak: (0, 0),
                },
            };
            if let Some(b) = common.bin_ps {
                settings.bin_width_ps = b;
            }
            if let Some(w) = common.window_bins {
                settings.half_window_bins = w;
            }
            if let Some(r) = exclusion_radius {
                settings.peak_exclusion_radius = r;
            }
            settings.peak = peak;
            let duration = common.duration_s.or(loaded.as_ref().map(|l| l.config.duration_s));
            let (report, _) = cmd_analyze(&files, &settings, duration, loaded.as_ref(), &common.out)?;
            Ok(report.text_summary())
        }
        Command::Predict(o) => {
            let loaded = o.require()?;
            Ok(cmd_predict(&loaded, Some(&o.out))?.text_summary())
        }
        Command::Pmmap {
            common,
            lo_nm,
            hi_nm,
            step_nm,
            power_mw,
        } => {
            let pm = common
                .load()?
                .map(|l| l.config.phasematch)
                .unwrap_or_else(PhasematchParams::default);
            let mut range = MapRange::around_degeneracy(&pm);
            range.lo_nm = lo_nm.unwrap_or(range.lo_nm);
            range.hi_nm = hi_nm.unwrap_or(range.hi_nm);
            range.step_nm = step_nm;
            range.power_mw = power_mw;
            Ok(cmd_pmmap(&pm, range, &common.out)?.text_summary())
        }
        Command::Delayscan {
            common,
            range_ps,
            step_ps,
        } => {
            let loaded = common.require()?;
            let delays = delay_grid(range_ps, step_ps)?;
            Ok(cmd_delayscan(&loaded, &delays, &common.out)?.text_summary())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
