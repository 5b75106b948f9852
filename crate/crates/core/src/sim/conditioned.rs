//! Field-of-view simulation.
//!
//! D3 clicks are drawn first from their exact per-slot probability, each with
//! the herald outcome of its own slot drawn jointly. Then every slot within
//! the analysis window of some D3 click is filled with herald clicks drawn
//! from the law conditioned on D3 being silent. Slots farther than the window
//! from every D3 click are never visited, so singles rates outside the window
//! are not represented in the output.

use rayon::prelude::*;

use super::full::run_duration_ps;
use super::{SimOptions, SimulationResult, TruthCounts};
use crate::config::{ExperimentConfig, SimMode};
use crate::error::Result;
use crate::rng::{open01, pick, stream_rng, Domain, SlotSkipper};
use crate::slot_law::{D3Outcome, SlotLaw, SlotModel};
use crate::timetag::TimeTagStream;

/// Slots per work unit when drawing D3 clicks.
const D3_CHUNK_SLOTS: u64 = 1 << 32;

#[derive(Debug, Clone, Copy)]
struct D3Click {
    slot: u64,
    h1: bool,
    h2: bool,
    upconverted: bool,
}

/// Number of slots on either side of a D3 click that can land in the histogram.
pub(crate) fn window_slots(cfg: &ExperimentConfig) -> u64 {
    let w = cfg.analysis.half_window_bins as f64 + 0.5;
    (w * cfg.bin_width_ps() / cfg.clock.period_ps()).ceil() as u64
}

/// Herald outcomes `(h1, h2)` in a slot with D3 silent, excluding `(0, 0)`.
const HERALD_PATTERNS: [(bool, bool); 3] = [(true, false), (false, true), (true, true)];

struct QuietSlotLaw {
    p_any: f64,
    cdf: [f64; 3],
}

impl QuietSlotLaw {
    fn new(law: &SlotLaw) -> Self {
        let silent = D3Outcome::Silent as usize;
        let j = &law.joint;
        let quiet = j[0][0][silent] + j[1][0][silent] + j[0][1][silent] + j[1][1][silent];
        let w = [j[1][0][silent], j[0][1][silent], j[1][1][silent]];
        let any = w[0] + w[1] + w[2];
        Self {
            p_any: any / quiet,
            cdf: [w[0] / any, (w[0] + w[1]) / any, 1.0],
        }
    }
}

/// Simulates only what the coincidence analyzer can see.
pub fn simulate_conditioned(
    cfg: &ExperimentConfig,
    duration_s: f64,
    seed: u64,
    opts: SimOptions,
) -> Result<SimulationResult> {
    cfg.validate()?;
    let law = SlotModel::from_config(cfg)?.law();
    let slots = cfg.clock.slots_in(duration_s);
    let p3 = law.p3();

    // Outcome of a D3 slot: (h1, h2, cause) with cause in {upconverted, dark}.
    let mut d3_outcomes = Vec::with_capacity(8);
    let mut d3_cdf = Vec::with_capacity(8);
    let mut acc = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            for c in [D3Outcome::Upconverted, D3Outcome::Dark] {
                acc += law.joint[a][b][c as usize];
                d3_outcomes.push((a == 1, b == 1, c == D3Outcome::Upconverted));
                d3_cdf.push(acc);
            }
        }
    }

    let pool = opts.pool();
    let n_chunks = slots.div_ceil(D3_CHUNK_SLOTS);
    let clicks: Vec<D3Click> = pool.install(|| {
        (0..n_chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut rng = stream_rng(seed, Domain::ConditionedD3, chunk);
                let start = chunk * D3_CHUNK_SLOTS;
                let end = (start + D3_CHUNK_SLOTS).min(slots);
                let mut skip = SlotSkipper::new(start, end, p3);
                let mut out = Vec::new();
                while let Some(slot) = skip.next_slot(&mut rng) {
                    let (h1, h2, upconverted) = d3_outcomes[pick(&d3_cdf, open01(&mut rng) * acc)];
                    out.push(D3Click {
                        slot,
                        h1,
                        h2,
                        upconverted,
                    });
                }
                out
            })
            .flatten()
            .collect()
    });

    let mut truth = TruthCounts {
        slots,
        ..Default::default()
    };
    for c in &clicks {
        if c.upconverted {
            truth.d3_upconverted += 1;
            if c.h1 && c.h2 {
                truth.true_triples += 1;
            }
        } else {
            truth.accidental_candidates += 1;
        }
    }

    let w = window_slots(cfg);
    let intervals = merge_windows(&clicks, w, slots);
    let quiet = QuietSlotLaw::new(&law);

    let pieces: Vec<[Vec<u64>; 2]> = pool.install(|| {
        intervals
            .par_iter()
            .map(|&(lo, hi, first, last)| {
                let mut rng = stream_rng(seed, Domain::ConditionedHeralds, lo);
                let mut tags: [Vec<u64>; 2] = Default::default();
                let emit = |slot: u64, h1: bool, h2: bool, tags: &mut [Vec<u64>; 2]| {
                    let t = cfg.clock.slot_time_ps(slot);
                    if h1 {
                        tags[0].push(t);
                    }
                    if h2 {
                        tags[1].push(t);
                    }
                };
                let mut cursor = lo;
                for c in &clicks[first..last] {
                    let mut skip = SlotSkipper::new(cursor, c.slot, quiet.p_any);
                    while let Some(s) = skip.next_slot(&mut rng) {
                        let (h1, h2) = HERALD_PATTERNS[pick(&quiet.cdf, open01(&mut rng))];
                        emit(s, h1, h2, &mut tags);
                    }
                    emit(c.slot, c.h1, c.h2, &mut tags);
                    cursor = c.slot + 1;
                }
                let mut skip = SlotSkipper::new(cursor, hi, quiet.p_any);
                while let Some(s) = skip.next_slot(&mut rng) {
                    let (h1, h2) = HERALD_PATTERNS[pick(&quiet.cdf, open01(&mut rng))];
                    emit(s, h1, h2, &mut tags);
                }
                tags
            })
            .collect()
    });

    let mut heralds: [Vec<u64>; 2] = Default::default();
    for p in pieces {
        for (all, part) in heralds.iter_mut().zip(p) {
            all.extend(part);
        }
    }
    let d3: Vec<u64> = clicks.iter().map(|c| cfg.clock.slot_time_ps(c.slot)).collect();
    let duration_ps = run_duration_ps(cfg, duration_s, slots);
    let [t1, t2] = heralds;
    Ok(SimulationResult {
        streams: [
            TimeTagStream::from_sorted(1, t1, duration_ps),
            TimeTagStream::from_sorted(2, t2, duration_ps),
            TimeTagStream::from_sorted(3, d3, duration_ps),
        ],
        truth,
        seed,
        mode: SimMode::Conditioned,
        duration_s,
        config: cfg.clone(),
    })
}

/// Merges `[slot − w, slot + w]` windows into disjoint half-open slot ranges,
/// each with the index range of the D3 clicks it contains.
fn merge_windows(clicks: &[D3Click], w: u64, slots: u64) -> Vec<(u64, u64, usize, usize)> {
    let mut out: Vec<(u64, u64, usize, usize)> = Vec::new();
    for (i, c) in clicks.iter().enumerate() {
        let lo = c.slot.saturating_sub(w);
        let hi = (c.slot + w + 1).min(slots);
        match out.last_mut() {
            Some(last) if lo <= last.1 => {
                last.1 = last.1.max(hi);
                last.3 = i + 1;
            }
            _ => out.push((lo, hi, i, i + 1)),
        }
    }
    out
}
