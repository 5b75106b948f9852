//! Tag generation for a heralded autocorrelation measurement: one source, its
//! herald detector, and the signal arm split 50/50 onto two detectors.

use rand::Rng;
use rayon::prelude::*;

use super::full::{any_success, FULL_CHUNK_SLOTS};
use super::{bernoulli_with, constraint, Constraint, FirstNonEmpty, SimOptions};
use crate::clock::ClockParams;
use crate::detector::DetectorParams;
use crate::error::Result;
use crate::rng::{stream_rng, Domain, SlotSkipper};
use crate::source::{Emitter, SourceParams};
use crate::timetag::TimeTagStream;

/// Returns streams for the herald (channel 1) and the two split signal
/// detectors (channels 2 and 3) over `n_pulses` slots.
pub fn simulate_g2_measurement(
    source: &SourceParams,
    herald: &DetectorParams,
    signals: [&DetectorParams; 2],
    clock: &ClockParams,
    n_pulses: u64,
    seed: u64,
    opts: SimOptions,
) -> Result<[TimeTagStream; 3]> {
    let mut problems = source.violations("source");
    problems.extend(herald.violations("herald"));
    problems.extend(signals[0].violations("signal_a"));
    problems.extend(signals[1].violations("signal_b"));
    problems.extend(clock.violations());
    if !problems.is_empty() {
        return Err(crate::error::Error::Validation(problems));
    }

    let emitter = Emitter::new(source)?;
    let period_ns = clock.period_ns();
    let th = source.herald_transmission() * herald.efficiency;
    let ts = source.signal_transmission();
    let xa = 0.5 * ts * signals[0].efficiency;
    let xb = 0.5 * ts * signals[1].efficiency;
    let darks = [
        herald.slot_dark_probability(period_ns),
        signals[0].slot_dark_probability(period_ns),
        signals[1].slot_dark_probability(period_ns),
    ];
    let first = FirstNonEmpty::new(&[1.0 - emitter.p_zero(), darks[0], darks[1], darks[2]]);
    let n_chunks = n_pulses.div_ceil(FULL_CHUNK_SLOTS);

    let chunks: Vec<[Vec<u64>; 3]> = opts.pool().install(|| {
        (0..n_chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut rng = stream_rng(seed, Domain::G2Slots, chunk);
                let start = chunk * FULL_CHUNK_SLOTS;
                let end = (start + FULL_CHUNK_SLOTS).min(n_pulses);
                let mut tags: [Vec<u64>; 3] = Default::default();
                let mut skip = SlotSkipper::new(start, end, first.p_any());
                while let Some(slot) = skip.next_slot(&mut rng) {
                    let j = first.sample(&mut rng);
                    let k = match constraint(0, j) {
                        Constraint::Empty => 0,
                        Constraint::NonEmpty => emitter.sample_nonzero(&mut rng),
                        Constraint::Free => emitter.sample(&mut rng),
                    };
                    let mut click = [false; 3];
                    for (i, d) in darks.iter().enumerate() {
                        click[i] = bernoulli_with(&mut rng, constraint(i + 1, j), *d);
                    }
                    click[0] |= any_success(&mut rng, k, th);
                    for _ in 0..k {
                        let u: f64 = rng.gen();
                        if u < xa {
                            click[1] = true;
                        } else if u < xa + xb {
                            click[2] = true;
                        }
                    }
                    let t = clock.slot_time_ps(slot);
                    for (i, &c) in click.iter().enumerate() {
                        if c {
                            tags[i].push(t);
                        }
                    }
                }
                tags
            })
            .collect()
    });

    let mut all: [Vec<u64>; 3] = Default::default();
    for c in chunks {
        for (a, part) in all.iter_mut().zip(c) {
            a.extend(part);
        }
    }
    let duration_ps = if n_pulses == 0 {
        0
    } else {
        clock.slot_time_ps(n_pulses - 1) + 1
    };
    let [h, a, b] = all;
    Ok([
        TimeTagStream::from_sorted(1, h, duration_ps),
        TimeTagStream::from_sorted(2, a, duration_ps),
        TimeTagStream::from_sorted(3, b, duration_ps),
    ])
}
