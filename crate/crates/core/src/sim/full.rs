use rand::Rng;
use rayon::prelude::*;

use super::{
    bernoulli_with, constraint, Constraint, FirstNonEmpty, SimOptions, SimulationResult,
    TruthCounts,
};
use crate::config::{ExperimentConfig, SimMode};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Domain, SlotSkipper};
use crate::slot_law::SlotModel;
use crate::source::Emitter;
use crate::timetag::TimeTagStream;

/// Slots per independently seeded work unit.
pub(crate) const FULL_CHUNK_SLOTS: u64 = 1 << 26;

#[derive(Default)]
struct ChunkOut {
    tags: [Vec<u64>; 3],
    truth: TruthCounts,
}

/// Exact slot-by-slot simulation emitting every detector tag.
///
/// Refuses to start when the expected tag count exceeds `cfg.max_tags`.
pub fn simulate_full(
    cfg: &ExperimentConfig,
    duration_s: f64,
    seed: u64,
    opts: SimOptions,
) -> Result<SimulationResult> {
    cfg.validate()?;
    let model = SlotModel::from_config(cfg)?;
    let law = model.law();
    let slots = cfg.clock.slots_in(duration_s);
    let expected = slots as f64 * (law.p1() + law.p2() + law.p3());
    if expected > cfg.max_tags {
        return Err(Error::Capacity {
            expected,
            cap: cfg.max_tags,
        });
    }

    let em1 = Emitter::new(&cfg.source1)?;
    let em2 = Emitter::new(&cfg.source2)?;
    let components = [
        1.0 - em1.p_zero(),
        1.0 - em2.p_zero(),
        model.dark1,
        model.dark2,
        model.dark3,
    ];
    let first = FirstNonEmpty::new(&components);
    let n_chunks = slots.div_ceil(FULL_CHUNK_SLOTS);

    let run_chunk = |chunk: u64| -> ChunkOut {
        let mut rng = stream_rng(seed, Domain::FullSlots, chunk);
        let start = chunk * FULL_CHUNK_SLOTS;
        let end = (start + FULL_CHUNK_SLOTS).min(slots);
        let mut out = ChunkOut::default();
        let mut skip = SlotSkipper::new(start, end, first.p_any());
        while let Some(slot) = skip.next_slot(&mut rng) {
            let j = first.sample(&mut rng);
            let k1 = match constraint(0, j) {
                Constraint::Empty => 0,
                Constraint::NonEmpty => em1.sample_nonzero(&mut rng),
                Constraint::Free => em1.sample(&mut rng),
            };
            let k2 = match constraint(1, j) {
                Constraint::Empty => 0,
                Constraint::NonEmpty => em2.sample_nonzero(&mut rng),
                Constraint::Free => em2.sample(&mut rng),
            };
            let dark1 = bernoulli_with(&mut rng, constraint(2, j), model.dark1);
            let dark2 = bernoulli_with(&mut rng, constraint(3, j), model.dark2);
            let dark3 = bernoulli_with(&mut rng, constraint(4, j), model.dark3);

            let h1 = dark1 || any_success(&mut rng, k1, model.herald1);
            let h2 = dark2 || any_success(&mut rng, k2, model.herald2);
            let m1 = successes(&mut rng, k1, model.deliver1);
            let m2 = successes(&mut rng, k2, model.deliver2);
            let up = m1 > 0 && m2 > 0 && any_success(&mut rng, m1 * m2, model.convert_detect);
            let d3 = up || dark3;

            let t = cfg.clock.slot_time_ps(slot);
            if h1 {
                out.tags[0].push(t);
            }
            if h2 {
                out.tags[1].push(t);
            }
            if d3 {
                out.tags[2].push(t);
            }
            if up {
                out.truth.d3_upconverted += 1;
                if h1 && h2 {
                    out.truth.true_triples += 1;
                }
            } else if dark3 {
                out.truth.accidental_candidates += 1;
            }
        }
        out
    };

    let chunks: Vec<ChunkOut> = opts
        .pool()
        .install(|| (0..n_chunks).into_par_iter().map(run_chunk).collect());
    Ok(assemble(cfg, chunks, slots, duration_s, seed, SimMode::Full))
}

fn assemble(
    cfg: &ExperimentConfig,
    chunks: Vec<ChunkOut>,
    slots: u64,
    duration_s: f64,
    seed: u64,
    mode: SimMode,
) -> SimulationResult {
    let mut tags: [Vec<u64>; 3] = Default::default();
    let mut truth = TruthCounts {
        slots,
        ..Default::default()
    };
    for c in chunks {
        for (all, part) in tags.iter_mut().zip(c.tags) {
            all.extend(part);
        }
        truth.add(&c.truth);
    }
    let duration_ps = run_duration_ps(cfg, duration_s, slots);
    let [t1, t2, t3] = tags;
    SimulationResult {
        streams: [
            TimeTagStream::from_sorted(1, t1, duration_ps),
            TimeTagStream::from_sorted(2, t2, duration_ps),
            TimeTagStream::from_sorted(3, t3, duration_ps),
        ],
        truth,
        seed,
        mode,
        duration_s,
        config: cfg.clone(),
    }
}

/// Run length in ps, never shorter than one past the last slot time.
pub(crate) fn run_duration_ps(cfg: &ExperimentConfig, duration_s: f64, slots: u64) -> u64 {
    let nominal = (duration_s * 1e12).round() as u64;
    match slots {
        0 => nominal,
        n => nominal.max(cfg.clock.slot_time_ps(n - 1) + 1),
    }
}

/// Whether at least one of `n` independent trials with probability `p` succeeds.
#[inline]
pub(crate) fn any_success<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> bool {
    if n == 0 || p <= 0.0 {
        return false;
    }
    let q = if n == 1 {
        p
    } else {
        -(n as f64 * (-p).ln_1p()).exp_m1()
    };
    rng.gen::<f64>() < q
}

#[inline]
pub(crate) fn successes<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    (0..n).filter(|_| rng.gen::<f64>() < p).count() as u64
}
