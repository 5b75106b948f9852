//! Monte Carlo generation of detector time tags.
//!
//! Two modes share one contract (deterministic per seed, independent of the
//! worker count):
//!
//! * [`simulate_full`] walks pulse slots directly, skipping empty slots with
//!   geometric gaps over the union probability of any elementary event.
//! * [`simulate_conditioned`] only produces what the coincidence analyzer can
//!   see: every D3 click plus the heralds in the surrounding window.

mod conditioned;
mod delay_scan;
mod full;
mod g2;

pub use conditioned::simulate_conditioned;
pub use delay_scan::{fit_scan_fwhm, simulate_delay_scan, DelayScanPoint};
pub use full::simulate_full;
pub use g2::simulate_g2_measurement;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SimMode};
use crate::error::Result;
use crate::rng::{open01, pick};
use crate::timetag::TimeTagStream;

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "TRIPLET_SIM_THREADS";

/// Ground-truth tallies collected while generating tags.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthCounts {
    pub slots: u64,
    /// Slots where D1 and D2 clicked and D3 registered an upconverted photon.
    pub true_triples: u64,
    pub d3_upconverted: u64,
    /// D3 clicks caused by dark counts alone; each can seed accidental coincidences.
    pub accidental_candidates: u64,
}

impl TruthCounts {
    fn add(&mut self, other: &TruthCounts) {
        self.true_triples += other.true_triples;
        self.d3_upconverted += other.d3_upconverted;
        self.accidental_candidates += other.accidental_candidates;
    }
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub streams: [TimeTagStream; 3],
    pub truth: TruthCounts,
    pub seed: u64,
    pub mode: SimMode,
    pub duration_s: f64,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimOptions {
    /// Worker threads; `None` reads [`THREADS_ENV`] and falls back to all cores.
    pub threads: Option<usize>,
}

impl SimOptions {
    pub fn threads(n: usize) -> Self {
        Self { threads: Some(n) }
    }

    pub(crate) fn pool(&self) -> rayon::ThreadPool {
        let n = self.threads.or_else(|| {
            std::env::var(THREADS_ENV)
                .ok()
                .and_then(|v| v.trim().parse().ok())
        });
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = n {
            b = b.num_threads(n.max(1));
        }
        b.build().expect("thread pool")
    }
}

/// Runs the configured mode for `cfg.duration_s` with `cfg.seed`.
pub fn simulate(cfg: &ExperimentConfig, opts: SimOptions) -> Result<SimulationResult> {
    match cfg.mode {
        SimMode::Full => simulate_full(cfg, cfg.duration_s, cfg.seed, opts),
        SimMode::Conditioned => simulate_conditioned(cfg, cfg.duration_s, cfg.seed, opts),
    }
}

/// Picks which of several independent rare components is the first non-empty
/// one, given that at least one is.
///
/// Components before the chosen index are empty, the chosen one is non-empty
/// and those after it are unconstrained. Sampling the slot this way is exact
/// and avoids rejection when every component is rare.
#[derive(Debug, Clone)]
pub(crate) struct FirstNonEmpty {
    cdf: Vec<f64>,
    p_any: f64,
}

impl FirstNonEmpty {
    pub(crate) fn new(q: &[f64]) -> Self {
        let ln_none: f64 = q.iter().map(|&x| (-x).ln_1p()).sum();
        let p_any = -ln_none.exp_m1();
        let mut survive = 1.0;
        let mut acc = 0.0;
        let mut cdf = Vec::with_capacity(q.len());
        for &x in q {
            acc += x * survive;
            survive *= 1.0 - x;
            cdf.push(acc);
        }
        Self { cdf, p_any }
    }

    pub(crate) fn p_any(&self) -> f64 {
        self.p_any
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = self.cdf[self.cdf.len() - 1];
        pick(&self.cdf, open01(rng) * total)
    }
}

/// State of component `i` given that `first` is the first non-empty one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Constraint {
    Empty,
    NonEmpty,
    Free,
}

#[inline]
pub(crate) fn constraint(i: usize, first: usize) -> Constraint {
    match i.cmp(&first) {
        std::cmp::Ordering::Less => Constraint::Empty,
        std::cmp::Ordering::Equal => Constraint::NonEmpty,
        std::cmp::Ordering::Greater => Constraint::Free,
    }
}

#[inline]
pub(crate) fn bernoulli_with<R: Rng + ?Sized>(rng: &mut R, c: Constraint, p: f64) -> bool {
    match c {
        Constraint::Empty => false,
        Constraint::NonEmpty => true,
        Constraint::Free => rng.gen::<f64>() < p,
    }
}
