//! Exact joint click law of one pulse slot.
//!
//! Conditional on the pair numbers `(k₁, k₂)` the two heralds and the
//! upconversion detector are independent, so the joint probability of any
//! click pattern is a double sum over the two pair distributions. Every
//! outcome is summed directly from non-negative terms; nothing is obtained by
//! subtraction, which keeps rare outcomes (threefold ~1e-12 per slot) accurate.

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::source::PairDistribution;

/// Cause of a D3 outcome within a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum D3Outcome {
    Silent = 0,
    /// An upconverted photon was registered (a dark count may coincide).
    Upconverted = 1,
    /// Dark count only.
    Dark = 2,
}

/// Everything that fixes the per-slot law.
#[derive(Debug, Clone)]
pub struct SlotModel {
    pub pairs1: PairDistribution,
    pub pairs2: PairDistribution,
    /// Per-photon herald detection probabilities (transmission × efficiency).
    pub herald1: f64,
    pub herald2: f64,
    /// Per-photon delivery probabilities to the waveguide.
    pub deliver1: f64,
    pub deliver2: f64,
    /// Per-pair probability of a registered upconverted photon.
    pub convert_detect: f64,
    pub dark1: f64,
    pub dark2: f64,
    pub dark3: f64,
}

impl SlotModel {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let period_ns = cfg.clock.period_ns();
        let [d1, d2, d3] = &cfg.detectors;
        Ok(Self {
            pairs1: cfg.source1.pair_distribution()?,
            pairs2: cfg.source2.pair_distribution()?,
            herald1: cfg.source1.herald_transmission() * d1.efficiency,
            herald2: cfg.source2.herald_transmission() * d2.efficiency,
            deliver1: cfg.source1.signal_transmission(),
            deliver2: cfg.source2.signal_transmission(),
            convert_detect: cfg.conversion_probability() * d3.efficiency,
            dark1: d1.slot_dark_probability(period_ns),
            dark2: d2.slot_dark_probability(period_ns),
            dark3: d3.slot_dark_probability(period_ns),
        })
    }

    pub fn law(&self) -> SlotLaw {
        SlotLaw::compute(self)
    }
}

/// `(P(no click | k), P(click | k))` for a herald with per-photon probability `h`.
fn herald_terms(h: f64, dark: f64, k: usize) -> [f64; 2] {
    if k == 0 {
        return [1.0 - dark, dark];
    }
    let ln_miss = k as f64 * (-h).ln_1p() + (-dark).ln_1p();
    [ln_miss.exp(), -ln_miss.exp_m1()]
}

/// `1 - (1 - x)^k` without cancellation.
fn at_least_one(x: f64, k: usize) -> f64 {
    if k == 0 || x == 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        -(k as f64 * (-x).ln_1p()).exp_m1()
    }
}

fn binomial_pmf(k: usize, p: f64) -> Vec<f64> {
    let mut out = vec![0.0; k + 1];
    if p >= 1.0 {
        out[k] = 1.0;
        return out;
    }
    if p <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    for (m, o) in out.iter_mut().enumerate() {
        let ln_c = libm::lgamma(k as f64 + 1.0)
            - libm::lgamma(m as f64 + 1.0)
            - libm::lgamma((k - m) as f64 + 1.0);
        *o = (ln_c + m as f64 * lp + (k - m) as f64 * lq).exp();
    }
    out
}

/// Probability that at least one upconverted photon is registered given
/// `k₁, k₂` pairs: `Σ_{m₁} Bin(m₁; k₁, T₁)·[1 − (1 − T₂(1 − u^{m₁}))^{k₂}]`
/// with `u = 1 − r`, having summed `m₂` in closed form.
fn upconversion_given_pairs(binom1: &[f64], deliver2: f64, r: f64, k2: usize) -> f64 {
    if k2 == 0 || r == 0.0 || deliver2 == 0.0 {
        return 0.0;
    }
    let ln_u = (-r).ln_1p();
    binom1
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &b)| b > 0.0)
        .map(|(m1, &b)| {
            let y = if r >= 1.0 { 1.0 } else { -(m1 as f64 * ln_u).exp_m1() };
            b * at_least_one(deliver2 * y, k2)
        })
        .sum()
}

/// Joint per-slot probabilities indexed `[d1][d2][d3 outcome]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlotLaw {
    pub joint: [[[f64; 3]; 2]; 2],
}

impl SlotLaw {
    pub fn compute(m: &SlotModel) -> Self {
        let p1 = m.pairs1.probabilities();
        let p2 = m.pairs2.probabilities();
        let max2 = p2.iter().copied().fold(0.0, f64::max);
        let mut joint = [[[0.0; 3]; 2]; 2];
        for (k1, &w1) in p1.iter().enumerate() {
            if w1 == 0.0 {
                continue;
            }
            let h1 = herald_terms(m.herald1, m.dark1, k1);
            let binom1 = binomial_pmf(k1, m.deliver1);
            for (k2, &w2) in p2.iter().enumerate() {
                if w2 <= max2 * 1e-40 {
                    continue;
                }
                let h2 = herald_terms(m.herald2, m.dark2, k2);
                let up = upconversion_given_pairs(&binom1, m.deliver2, m.convert_detect, k2);
                let d3 = [(1.0 - up) * (1.0 - m.dark3), up, (1.0 - up) * m.dark3];
                let w = w1 * w2;
                for a in 0..2 {
                    for b in 0..2 {
                        let wab = w * h1[a] * h2[b];
                        for c in 0..3 {
                            joint[a][b][c] += wab * d3[c];
                        }
                    }
                }
            }
        }
        Self { joint }
    }

    fn sum(&self, f: impl Fn(usize, usize, usize) -> bool) -> f64 {
        let mut s = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..3 {
                    if f(a, b, c) {
                        s += self.joint[a][b][c];
                    }
                }
            }
        }
        s
    }

    pub fn p1(&self) -> f64 {
        self.sum(|a, _, _| a == 1)
    }

    pub fn p2(&self) -> f64 {
        self.sum(|_, b, _| b == 1)
    }

    pub fn p3(&self) -> f64 {
        self.sum(|_, _, c| c != 0)
    }

    pub fn p13(&self) -> f64 {
        self.sum(|a, _, c| a == 1 && c != 0)
    }

    pub fn p23(&self) -> f64 {
        self.sum(|_, b, c| b == 1 && c != 0)
    }

    pub fn p12(&self) -> f64 {
        self.sum(|a, b, _| a == 1 && b == 1)
    }

    pub fn p123(&self) -> f64 {
        self.sum(|a, b, c| a == 1 && b == 1 && c != 0)
    }

    /// Threefold where the D3 click carries an upconverted photon.
    pub fn p123_true(&self) -> f64 {
        self.joint[1][1][D3Outcome::Upconverted as usize]
    }

    /// Slot probability of a registered upconverted photon.
    pub fn p_upconverted(&self) -> f64 {
        self.sum(|_, _, c| c == 1)
    }

    /// Expected count per slot in threefold pixel `(τ₃₁, τ₃₂)` offsets (in slots),
    /// ignoring run edges.
    pub fn pixel_rate(&self, tau31: i64, tau32: i64) -> f64 {
        match (tau31 == 0, tau32 == 0) {
            (true, true) => self.p123(),
            (true, false) => self.p13() * self.p2(),
            (false, true) => self.p23() * self.p1(),
            (false, false) => {
                if tau31 == tau32 {
                    self.p12() * self.p3()
                } else {
                    self.p1() * self.p2() * self.p3()
                }
            }
        }
    }

    /// Expected count per slot in a twofold bin between herald `h` (1 or 2) and D3.
    pub fn twofold_rate(&self, herald: u8, tau: i64) -> f64 {
        let (joint, single) = if herald == 1 {
            (self.p13(), self.p1())
        } else {
            (self.p23(), self.p2())
        };
        if tau == 0 {
            joint
        } else {
            single * self.p3()
        }
    }
}
