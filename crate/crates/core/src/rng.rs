//! Counter-based generator streams and the small samplers built on them.
//!
//! Every stream is a ChaCha8 keystream addressed by `(seed, domain, index)`:
//! the seed and domain form the key and the index selects the 64-bit stream
//! id. Work units (slot ranges, coincidence windows) each get their own index,
//! so the draws a unit sees never depend on how units are spread over threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Distinct key material per consumer so streams never collide across modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    FullSlots = 1,
    ConditionedD3 = 2,
    ConditionedHeralds = 3,
    G2Slots = 4,
    DelayScan = 5,
}

pub fn stream_rng(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    key[16..24].copy_from_slice(b"tripsim\0");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Uniform draw on `(0, 1]`, safe to take the logarithm of.
#[inline]
pub fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.gen::<f64>()
}

/// Number of failures before the first success of a Bernoulli sequence.
///
/// `ln_fail` is `ln(1 - p)`; `p = 1` (`ln_fail = -inf`) always returns 0 and
/// `p = 0` (`ln_fail = 0`) returns `u64::MAX`.
#[inline]
pub fn geometric_failures<R: Rng + ?Sized>(rng: &mut R, ln_fail: f64) -> u64 {
    if ln_fail == f64::NEG_INFINITY {
        return 0;
    }
    if ln_fail >= 0.0 {
        return u64::MAX;
    }
    let g = (open01(rng).ln() / ln_fail).floor();
    if g >= u64::MAX as f64 {
        u64::MAX
    } else {
        g as u64
    }
}

/// Skips over runs of empty slots using geometric gaps.
///
/// Yields the indices in `[start, end)` at which an event with per-slot
/// probability `p` occurs.
pub struct SlotSkipper {
    next: u64,
    end: u64,
    ln_fail: f64,
}

impl SlotSkipper {
    pub fn new(start: u64, end: u64, p: f64) -> Self {
        let ln_fail = if p >= 1.0 {
            f64::NEG_INFINITY
        } else {
            (-p).ln_1p()
        };
        Self {
            next: start,
            end,
            ln_fail,
        }
    }

    pub fn next_slot<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<u64> {
        if self.next >= self.end {
            return None;
        }
        let gap = geometric_failures(rng, self.ln_fail);
        let slot = self.next.checked_add(gap).filter(|&s| s < self.end)?;
        self.next = slot + 1;
        Some(slot)
    }
}

/// Index into a cumulative table, `cdf` strictly covering `(0, 1]`.
#[inline]
pub fn pick(cdf: &[f64], u: f64) -> usize {
    let i = cdf.partition_point(|&c| c < u);
    i.min(cdf.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream_rng(1, Domain::FullSlots, 0).gen()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let mut r0 = stream_rng(1, Domain::FullSlots, 0);
        let mut r1 = stream_rng(1, Domain::FullSlots, 1);
        let mut r2 = stream_rng(1, Domain::G2Slots, 0);
        let mut r3 = stream_rng(2, Domain::FullSlots, 0);
        let x0: u64 = r0.gen();
        assert_ne!(x0, r1.gen::<u64>());
        assert_ne!(x0, r2.gen::<u64>());
        assert_ne!(x0, r3.gen::<u64>());
    }

    #[test]
    fn skipper_rate_matches_probability() {
        let mut rng = stream_rng(3, Domain::FullSlots, 0);
        let p = 0.01;
        let n = 10_000_000u64;
        let mut sk = SlotSkipper::new(0, n, p);
        let mut count = 0u64;
        let mut last = None;
        while let Some(s) = sk.next_slot(&mut rng) {
            assert!(last.map_or(true, |l| s > l));
            last = Some(s);
            count += 1;
        }
        let expect = n as f64 * p;
        assert!((count as f64 - expect).abs() < 5.0 * (expect * (1.0 - p)).sqrt());
    }

    #[test]
    fn skipper_extremes() {
        let mut rng = stream_rng(3, Domain::FullSlots, 0);
        let mut all = SlotSkipper::new(5, 10, 1.0);
        let got: Vec<_> = std::iter::from_fn(|| all.next_slot(&mut rng)).collect();
        assert_eq!(got, vec![5, 6, 7, 8, 9]);
        let mut none = SlotSkipper::new(0, u64::MAX, 0.0);
        assert_eq!(none.next_slot(&mut rng), None);
    }

    #[test]
    fn pick_respects_cdf() {
        let cdf = [0.25, 0.5, 1.0];
        assert_eq!(pick(&cdf, 0.1), 0);
        assert_eq!(pick(&cdf, 0.25), 0);
        assert_eq!(pick(&cdf, 0.26), 1);
        assert_eq!(pick(&cdf, 1.0), 2);
    }
}
