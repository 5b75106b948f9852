//! Acceptance suite. Prints one PASS/FAIL line per criterion, with the
//! individual checks indented below it, and exits non-zero if any criterion
//! fails. Tolerances are fixed here, not tuned to the results.

mod common;

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{exact_tail_log10, shipped};
use triplet_sim::analysis::{
    analyze, estimate_conditional_g2, poisson_tail_log10, significance, Analysis,
    AnalysisSettings,
};
use triplet_sim::clock::ClockParams;
use triplet_sim::commands::{cmd_analyze, MapRange, TAG_FILES};
use triplet_sim::config::{ExperimentConfig, LoadedConfig, SimMode};
use triplet_sim::detector::DetectorParams;
use triplet_sim::optics::{
    classical_map, phasematch_efficiency, sfg_wavelength, PhasematchParams, SpectralPoint,
    WavelengthGrid,
};
use triplet_sim::rates::{
    observed_consistency, predict_rates, OBSERVED_BACKGROUND_MEAN, OBSERVED_HOURS,
    OBSERVED_PEAK_COUNTS,
};
use triplet_sim::sim::{
    simulate_conditioned, simulate_full, simulate_g2_measurement, SimOptions, SimulationResult,
};
use triplet_sim::source::{mu_from_g2, SourceParams};
use triplet_sim::timetag::TimeTagStream;

struct Criterion {
    id: &'static str,
    title: &'static str,
    checks: Vec<(bool, String)>,
    notes: Vec<String>,
    informational: bool,
}

impl Criterion {
    fn new(id: &'static str, title: &'static str) -> Self {
        Self {
            id,
            title,
            checks: Vec::new(),
            notes: Vec::new(),
            informational: false,
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.checks.push((ok, what));
    }

    fn note(&mut self, what: String) {
        self.notes.push(what);
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|(ok, _)| *ok)
    }

    fn print(&self, seconds: f64) {
        let verdict = match (self.informational, self.passed()) {
            (true, _) => "INFO",
            (false, true) => "PASS",
            (false, false) => "FAIL",
        };
        println!("[{verdict}] {} {} ({seconds:.1} s)", self.id, self.title);
        for (ok, what) in &self.checks {
            println!("       {} {what}", if *ok { "ok  " } else { "FAIL" });
        }
        for n in &self.notes {
            println!("       note {n}");
        }
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

// ---------------------------------------------------------------------------

fn energy_conservation() -> Criterion {
    let mut c = Criterion::new("1", "energy conservation");
    let got = sfg_wavelength(1560.0, 1551.0).unwrap();
    c.check(
        within(got, 777.76, 0.01),
        format!("sfg_wavelength(1560, 1551) = {got:.4} nm, required 777.76 ± 0.01 nm"),
    );
    let exact = 1560.0 * 1551.0 / 3111.0;
    c.check(
        within(got, exact, 1e-9),
        format!("agrees with 2419560/3111 = {exact:.6} nm"),
    );
    c.check(got.round() == 778.0, format!("rounds to {} nm", got.round()));
    c.note("the reciprocal sum is 777.7435 nm; 777.76 sits 0.0165 nm away".into());
    c
}

// ---------------------------------------------------------------------------

/// Half-maximum crossing of `f` on `[a, b]`, where `f(a) > 0.5 > f(b)` or the reverse.
fn half_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let above_a = f(a) > 0.5;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) > 0.5) == above_a {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn phase_matching() -> Criterion {
    let mut c = Criterion::new("2", "phase matching");
    let pm = PhasematchParams::default();
    let eff = |d: f64| {
        phasematch_efficiency(&SpectralPoint::new(pm.lambda1_center_nm + d, pm.lambda2_center_nm), &pm)
            .unwrap()
    };
    let hi = half_max(eff, 0.0, 0.27);
    let lo = half_max(eff, -0.27, 0.0);
    let fwhm = hi - lo;
    c.check(
        within(fwhm, 0.27, 1e-6),
        format!("FWHM along λ1 = {fwhm:.9} nm, required 0.27 ± 1e-6 nm"),
    );

    let range = MapRange::around_degeneracy(&pm);
    let grid = WavelengthGrid::square(range.lo_nm, range.hi_nm, range.step_nm, 1.0).unwrap();
    let map = classical_map(&grid, &pm).unwrap();
    let ratio = map.sfg_to_shg_ratio().unwrap();
    c.check(
        within(ratio, 4.0, 1e-9),
        format!(
            "SFG/SHG peak ratio over {:.2}..{:.2} nm = {ratio:.12}, required 4 ± 1e-9",
            range.lo_nm, range.hi_nm
        ),
    );
    c
}

// ---------------------------------------------------------------------------

/// Heralded g² of a single-mode thermal source with lossless, noiseless
/// detection, by direct summation over the pair number.
fn thermal_g2_oracle(mu: f64) -> f64 {
    let (mut h, mut ha, mut hab) = (0.0, 0.0, 0.0);
    let x = mu / (1.0 + mu);
    let mut p = 1.0 / (1.0 + mu);
    for n in 0..2000i32 {
        if n > 0 {
            let miss = 0.5f64.powi(n);
            h += p;
            ha += p * (1.0 - miss);
            hab += p * (1.0 - 2.0 * miss);
        }
        p *= x;
    }
    hab * h / (ha * ha)
}

fn oracle_mu(g2: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 0.5);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if thermal_g2_oracle(m) < g2 {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

fn source_calibration() -> Criterion {
    let mut c = Criterion::new("3", "source calibration");
    let clock = ClockParams::default();
    let ideal = DetectorParams::ideal("ideal");
    for (i, (g2, nominal)) in [(0.030, 0.0150), (0.036, 0.0180)].into_iter().enumerate() {
        let mu = mu_from_g2(g2, &SourceParams::ideal(0.0), &ideal, [&ideal, &ideal], clock.period_ns())
            .unwrap();
        let rel = mu / nominal - 1.0;
        c.check(
            rel.abs() <= 0.02,
            format!("mu_from_g2({g2}) = {mu:.6}, {:+.2} % from {nominal}, required within 2 %", 100.0 * rel),
        );
        let oracle = oracle_mu(g2);
        c.check(
            within(mu, oracle, 1e-9),
            format!("enumeration oracle gives {oracle:.9}"),
        );

        let pulses = 100_000_000u64;
        let streams = simulate_g2_measurement(
            &SourceParams::ideal(mu),
            &ideal,
            [&ideal, &ideal],
            &clock,
            pulses,
            300 + i as u64,
            SimOptions::default(),
        )
        .unwrap();
        let [h, a, b] = &streams;
        let est = estimate_conditional_g2(h, a, b, clock.period_ps()).unwrap();
        let g = est.g2.unwrap();
        let ab = est.n_hab as f64;
        let (na, nb) = (est.n_ha as f64, est.n_hb as f64);
        // Delta method on ln g with independent Poisson cells (ab, a only, b only).
        let d_ab = 1.0 / ab - 1.0 / na - 1.0 / nb;
        let var_ln = ab * d_ab * d_ab + (na - ab) / (na * na) + (nb - ab) / (nb * nb);
        let sigma = g * var_ln.sqrt();
        let z = (g - g2) / sigma;
        c.check(
            z.abs() < 5.0,
            format!(
                "simulated {pulses:.0e} pulses: g2 = {g:.5} ± {sigma:.5} ({} heralds, {} doubles), z = {z:+.2}, required |z| < 5",
                est.n_h, est.n_hab
            ),
        );
    }
    c.note("the exact thermal inverse is mu = 1/sqrt(1 - g2) - 1; 0.0150 and 0.0180 are g2/2".into());
    c
}

// ---------------------------------------------------------------------------

fn statistics_engine() -> Criterion {
    let mut c = Criterion::new("4", "statistics engine");
    let z = significance(80, 35.0).unwrap().z_sigma;
    c.check(within(z, 7.61, 0.005), format!("significance(80, 35) = {z:.4} sigma, required 7.61"));
    let tail = poisson_tail_log10(80, 35.0);
    c.check(
        within(tail, -10.5, 0.1),
        format!("poisson_tail_log10(80, 35) = {tail:.4}, required -10.5 ± 0.1"),
    );
    let oracle = exact_tail_log10(80, 35, 1);
    c.check(
        within(tail, oracle, 1e-9),
        format!("arbitrary-precision summation gives {oracle:.6}"),
    );
    let point = -35.0 / std::f64::consts::LN_10 + 80.0 * 35f64.log10()
        - libm::lgamma(81.0) / std::f64::consts::LN_10;
    c.note(format!(
        "P(X >= 80) = {:.3e}; the single term P(X = 80) = {:.3e} is log10 {point:.3}",
        10f64.powf(oracle),
        10f64.powf(point)
    ));
    c
}

// ---------------------------------------------------------------------------

fn rate_model() -> Criterion {
    let mut c = Criterion::new("5", "rate model");
    let cfg = shipped("reference");
    let r = predict_rates(&cfg).unwrap();
    c.check(
        within(r.signal_per_hour / 0.40, 1.0, 0.10),
        format!("reference signal {:.4} /h, required 0.40 ± 10 %", r.signal_per_hour),
    );
    c.check(
        within(r.noise_per_hour_per_pixel / 0.20, 1.0, 0.10),
        format!("reference noise {:.4} /h per pixel, required 0.20 ± 10 %", r.noise_per_hour_per_pixel),
    );
    let (peak, bg) = observed_consistency(OBSERVED_PEAK_COUNTS, OBSERVED_BACKGROUND_MEAN, OBSERVED_HOURS).unwrap();
    let two = |x: f64| (x * 100.0).round() / 100.0;
    c.check(
        two(peak) == 0.31 && two(bg) == 0.13,
        format!("observed_consistency(80, 35, 260 h) = ({peak:.4}, {bg:.4}) /h, required (0.31, 0.13)"),
    );
    let f = cfg.source1.herald_filter_transmission;
    let t1t2 = r.signal_delivery[0] * r.signal_delivery[1];
    c.note(format!(
        "calibrated filter transmission {f:.4}, path transmission {:.2}",
        cfg.source1.signal_path_transmission
    ));
    c.note(format!(
        "signal/noise = T1*T2*eta_SFG*eta_D3/p_dark = {:.4} with T1*T2 = {t1t2:.3}; 0.40/0.20 needs 2.0, \
         unreachable with coupling 0.5 (max 0.2875) and not even at T = 1 ({:.3})",
        r.signal_to_noise(),
        r.signal_to_noise() / t1t2
    ));
    c
}

// ---------------------------------------------------------------------------

struct LongRun {
    peak: u64,
    background: f64,
    n_pixels: usize,
    z: f64,
}

fn long_runs(cfg: &ExperimentConfig, seeds: std::ops::Range<u64>, tag: &str) -> Vec<LongRun> {
    let tmp = tempfile::tempdir().unwrap();
    let loaded = LoadedConfig {
        config: cfg.clone(),
        warnings: Vec::new(),
    };
    seeds
        .map(|seed| {
            let sim = simulate_conditioned(cfg, cfg.duration_s, seed, SimOptions::default()).unwrap();
            let dir = tmp.path().join(format!("{tag}{seed}"));
            std::fs::create_dir_all(&dir).unwrap();
            let files: [PathBuf; 3] = TAG_FILES.map(|n| dir.join(n));
            for (s, f) in sim.streams.iter().zip(&files) {
                s.save(f).unwrap();
            }
            let (_, a) = cmd_analyze(
                &files,
                &AnalysisSettings::from_config(cfg),
                Some(cfg.duration_s),
                Some(&loaded),
                &dir.join("analysis"),
            )
            .unwrap();
            std::fs::remove_dir_all(&dir).unwrap();
            let s = a.significance;
            LongRun {
                peak: s.peak_count,
                background: s.background_mean,
                n_pixels: s.n_pixels,
                z: s.z_sigma,
            }
        })
        .collect()
}

fn summarize_long_runs(c: &mut Criterion, runs: &[LongRun]) -> usize {
    let n = runs.len();
    let bg_ok = |r: &LongRun| {
        let sigma = (OBSERVED_BACKGROUND_MEAN / r.n_pixels as f64).sqrt();
        (r.background - OBSERVED_BACKGROUND_MEAN).abs() <= 5.0 * sigma
    };
    let peak_ok = |r: &LongRun| (r.peak as f64 - OBSERVED_PEAK_COUNTS).abs() <= 5.0 * OBSERVED_PEAK_COUNTS.sqrt();
    let z_ok = |r: &LongRun| r.z >= 7.0;
    let need = (0.95 * n as f64).ceil() as usize;
    let count = |f: &dyn Fn(&LongRun) -> bool| runs.iter().filter(|r| f(r)).count();
    let (nb, np, nz, nall) = (
        count(&bg_ok),
        count(&peak_ok),
        count(&z_ok),
        count(&|r| bg_ok(r) && peak_ok(r) && z_ok(r)),
    );
    c.check(nb >= need, format!("background mean within 5 sigma of 35 in {nb}/{n} runs, required {need}"));
    c.check(np >= need, format!("peak within 5 sigma of 80 in {np}/{n} runs, required {need}"));
    c.check(nz >= need, format!("z >= 7 in {nz}/{n} runs, required {need}"));
    c.check(nall >= need, format!("all three together in {nall}/{n} runs, required {need}"));
    let mean = |f: &dyn Fn(&LongRun) -> f64| runs.iter().map(|r| f(r)).sum::<f64>() / n as f64;
    c.note(format!(
        "means over runs: peak {:.1}, background {:.2}, z {:.2}",
        mean(&|r| r.peak as f64),
        mean(&|r| r.background),
        mean(&|r| r.z)
    ));
    nall
}

/// `P(X >= k)` for `X ~ Poisson(λ)` with an integer mean.
fn tail_prob(k: u64, lambda: u64) -> f64 {
    10f64.powf(exact_tail_log10(k, lambda, 1))
}

fn long_run() -> Criterion {
    let mut c = Criterion::new("6", "long run (20 x 260 h, conditioned, analyzed from files)");
    let cfg = shipped("observed");
    let r = predict_rates(&cfg).unwrap();
    let hours = cfg.duration_s / 3600.0;
    c.note(format!(
        "observed config: expected peak {:.1}, background {:.1} per pixel",
        r.exact.peak_pixel_per_hour * hours,
        r.exact.background_per_hour_per_pixel * hours
    ));
    let runs = long_runs(&cfg, 1..21, "obs");
    summarize_long_runs(&mut c, &runs);
    let k = (35.0 + 7.0 * 35f64.sqrt()).ceil() as u64;
    c.note(format!(
        "z >= 7 over a background of 35 needs a peak >= {k}; even with a true mean of 80, \
         P(peak >= {k}) = {:.3}, below 0.95",
        tail_prob(k, 80)
    ));
    c
}

/// Same pipeline with the conversion efficiency raised until the expected
/// peak is 80 counts. Not one of the criteria.
fn pipeline_diagnostic() -> Criterion {
    let mut c = Criterion::new("diag", "pipeline at an effective conversion giving an expected peak of 80");
    c.informational = true;
    let mut cfg = shipped("observed");
    let hours = cfg.duration_s / 3600.0;
    let peak_at = |cfg: &ExperimentConfig, eta: f64| {
        let mut x = cfg.clone();
        x.phasematch.eta_system = eta;
        predict_rates(&x).unwrap().exact.peak_pixel_per_hour * hours
    };
    let (mut lo, mut hi) = (cfg.phasematch.eta_system, 1e-5);
    for _ in 0..100 {
        let m = (lo * hi).sqrt();
        if peak_at(&cfg, m) < OBSERVED_PEAK_COUNTS {
            lo = m;
        } else {
            hi = m;
        }
    }
    cfg.phasematch.eta_system = (lo * hi).sqrt();
    let r = predict_rates(&cfg).unwrap();
    c.note(format!(
        "eta_system {:.4e} ({:.1}x nominal): expected peak {:.2}, background {:.2}",
        cfg.phasematch.eta_system,
        cfg.phasematch.eta_system / 1.56e-8,
        r.exact.peak_pixel_per_hour * hours,
        r.exact.background_per_hour_per_pixel * hours
    ));
    let runs = long_runs(&cfg, 101..121, "diag");
    summarize_long_runs(&mut c, &runs);
    c
}

// ---------------------------------------------------------------------------

fn random_config(rng: &mut ChaCha8Rng, i: usize) -> ExperimentConfig {
    let mut cfg = shipped("reference");
    let log_uniform = |rng: &mut ChaCha8Rng, a: f64, b: f64| (rng.gen_range(a.ln()..b.ln())).exp();
    cfg.clock.repetition_rate_hz = (rng.gen_range(1.0..5.0f64) * 1e3).round() * 1e3;
    cfg.clock.pulse_period_ps = None;
    cfg.analysis.bin_width_ps = None;
    cfg.analysis.half_window_bins = rng.gen_range(4..=20);
    for s in [&mut cfg.source1, &mut cfg.source2] {
        s.mu = rng.gen_range(0.01..0.06);
        s.herald_coupling = rng.gen_range(0.3..1.0);
        s.herald_filter_transmission = rng.gen_range(0.3..1.0);
        s.signal_coupling = rng.gen_range(0.3..1.0);
        s.signal_path_transmission = rng.gen_range(0.5..1.0);
        s.g2_measured = None;
    }
    cfg.phasematch.eta_system = log_uniform(rng, 1e-3, 0.2);
    cfg.residual_delay_ps = rng.gen_range(0.0..10.0);
    cfg.detectors = [
        DetectorParams::gated("D1", rng.gen_range(0.3..0.9), log_uniform(rng, 1e-6, 1e-3), 18.0),
        DetectorParams::gated("D2", rng.gen_range(0.3..0.9), log_uniform(rng, 1e-6, 1e-3), 18.0),
        DetectorParams::free_running("D3", rng.gen_range(0.3..0.9), log_uniform(rng, 1e3, 1e5)),
    ];
    cfg.duration_s = 60.0;
    cfg.seed = 7000 + i as u64;
    cfg.validate().unwrap();
    ExperimentConfig::from_json(&cfg.to_json()).unwrap()
}

fn poisson_z(a: u64, b: u64) -> f64 {
    if a + b == 0 {
        0.0
    } else {
        (a as f64 - b as f64) / ((a + b) as f64).sqrt()
    }
}

fn analysis_of(sim: &SimulationResult, cfg: &ExperimentConfig) -> Analysis {
    let [a, b, c] = &sim.streams;
    analyze([a, b, c], &AnalysisSettings::from_config(cfg)).unwrap()
}

fn mode_equivalence() -> Criterion {
    let mut c = Criterion::new("7", "mode equivalence (20 random configs, 60 s each)");
    let mut rng = ChaCha8Rng::seed_from_u64(20_260_001);
    let (mut worst_stat, mut worst_bin, mut n_stats, mut n_bins) = (0.0f64, 0.0f64, 0usize, 0usize);
    let mut failures = Vec::new();
    for i in 0..20 {
        let cfg = random_config(&mut rng, i);
        let full = simulate_full(&cfg, cfg.duration_s, cfg.seed, SimOptions::default()).unwrap();
        let cond = simulate_conditioned(&cfg, cfg.duration_s, cfg.seed, SimOptions::default()).unwrap();
        let (af, ac) = (analysis_of(&full, &cfg), analysis_of(&cond, &cfg));
        let peak = |a: &Analysis| a.significance.peak_count;
        let stats: Vec<(&str, u64, u64)> = vec![
            ("threefold_peak", peak(&af), peak(&ac)),
            ("threefold_total", af.threefold.total(), ac.threefold.total()),
            ("threefold_background", af.threefold.total() - peak(&af), ac.threefold.total() - peak(&ac)),
            ("d3_singles", af.tag_counts[2], ac.tag_counts[2]),
            ("twofold_13_zero", af.twofold[0].get(0), ac.twofold[0].get(0)),
            ("twofold_23_zero", af.twofold[1].get(0), ac.twofold[1].get(0)),
            ("twofold_13_total", af.twofold[0].total(), ac.twofold[0].total()),
            ("twofold_23_total", af.twofold[1].total(), ac.twofold[1].total()),
        ];
        for (name, a, b) in stats {
            let z = poisson_z(a, b);
            n_stats += 1;
            worst_stat = worst_stat.max(z.abs());
            if z.abs() >= 5.0 {
                failures.push(format!("config {i} {name}: full {a} vs conditioned {b}, z = {z:+.2}"));
            }
        }
        let w = cfg.analysis.half_window_bins as i64;
        for t31 in -w..=w {
            for t32 in -w..=w {
                let z = poisson_z(af.threefold.get(t31, t32), ac.threefold.get(t31, t32));
                n_bins += 1;
                worst_bin = worst_bin.max(z.abs());
                if z.abs() >= 5.0 {
                    failures.push(format!("config {i} threefold bin ({t31}, {t32}): z = {z:+.2}"));
                }
            }
            for k in 0..2 {
                let z = poisson_z(af.twofold[k].get(t31), ac.twofold[k].get(t31));
                n_bins += 1;
                worst_bin = worst_bin.max(z.abs());
                if z.abs() >= 5.0 {
                    failures.push(format!("config {i} twofold {} bin {t31}: z = {z:+.2}", k + 1));
                }
            }
        }
    }
    c.check(
        failures.is_empty(),
        format!("{n_stats} summary statistics, max |z| = {worst_stat:.2}, required < 5"),
    );
    c.check(
        failures.is_empty(),
        format!("{n_bins} histogram bins, max |z| = {worst_bin:.2}, required < 5"),
    );
    for f in failures.iter().take(10) {
        c.note(f.clone());
    }
    c.note("herald singles are not compared: the conditioned mode only emits heralds near D3 clicks".into());
    c
}

// ---------------------------------------------------------------------------

fn ttag_bytes(streams: &[TimeTagStream; 3]) -> Vec<Vec<u8>> {
    streams
        .iter()
        .map(|s| {
            let mut v = Vec::new();
            s.write_ttag(&mut v).unwrap();
            v
        })
        .collect()
}

fn determinism_and_throughput() -> Criterion {
    let mut c = Criterion::new("8", "determinism and analyzer throughput");
    let mut full_cfg = shipped("reference");
    full_cfg.mode = SimMode::Full;
    full_cfg.duration_s = 0.2;
    let obs = shipped("observed");
    for (label, cfg, duration) in [
        ("full, reference, 0.2 s", &full_cfg, 0.2),
        ("conditioned, observed, 260 h", &obs, obs.duration_s),
    ] {
        let run = |threads: usize, seed: u64| {
            let opts = SimOptions::threads(threads);
            let r = match cfg.mode {
                SimMode::Full => simulate_full(cfg, duration, seed, opts),
                SimMode::Conditioned => simulate_conditioned(cfg, duration, seed, opts),
            };
            ttag_bytes(&r.unwrap().streams)
        };
        let one = run(1, 42);
        let same = one == run(1, 42);
        let threads = one == run(4, 42);
        let reseeded = one != run(1, 43);
        c.check(
            same && threads && reseeded,
            format!(
                "{label}: repeat identical {same}, 1 vs 4 workers identical {threads}, new seed differs {reseeded} ({} bytes)",
                one.iter().map(Vec::len).sum::<usize>()
            ),
        );
    }

    // Dense D3 so every channel carries about a million tags per second.
    let mut dense = shipped("reference");
    dense.mode = SimMode::Full;
    dense.detectors[2] = DetectorParams::free_running("D3", 0.6, 1e6);
    let sim = simulate_full(&dense, 1.0, 5, SimOptions::default()).unwrap();
    let n_tags: usize = sim.streams.iter().map(TimeTagStream::len).sum();
    let tmp = tempfile::tempdir().unwrap();
    let files: [PathBuf; 3] = TAG_FILES.map(|n| tmp.path().join(n));
    for (s, f) in sim.streams.iter().zip(&files) {
        s.save(f).unwrap();
    }
    let settings = AnalysisSettings::from_config(&dense);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let mut best = f64::INFINITY;
    let mut total = 0;
    for _ in 0..3 {
        let t0 = Instant::now();
        let (_, a) = pool
            .install(|| cmd_analyze(&files, &settings, None, None, &tmp.path().join("out")))
            .unwrap();
        best = best.min(t0.elapsed().as_secs_f64());
        total = a.threefold.total();
    }
    let rate = n_tags as f64 / best;
    c.check(
        rate >= 1e6,
        format!(
            "one worker read and analyzed {n_tags} tags ({total} triples) in {best:.3} s: {rate:.3e} tags/s, required >= 1e6"
        ),
    );
    c
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: Vec<(&str, fn() -> Criterion)> = vec![
        ("1", energy_conservation),
        ("2", phase_matching),
        ("3", source_calibration),
        ("4", statistics_engine),
        ("5", rate_model),
        ("6", long_run),
        ("7", mode_equivalence),
        ("8", determinism_and_throughput),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let selected = |id: &str| filter.is_empty() || filter.iter().any(|f| f == id);

    let mut failed = Vec::new();
    for (id, run) in criteria {
        if !selected(id) {
            continue;
        }
        let t0 = Instant::now();
        let c = run();
        c.print(t0.elapsed().as_secs_f64());
        if !c.passed() {
            failed.push(c.id);
        }
    }
    if selected("diag") {
        let t0 = Instant::now();
        let c = pipeline_diagnostic();
        c.print(t0.elapsed().as_secs_f64());
    }
    if failed.is_empty() {
        println!("\nall acceptance criteria passed");
    } else {
        println!("\nfailed criteria: {}", failed.join(", "));
        std::process::exit(1);
    }
}
