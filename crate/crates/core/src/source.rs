//! Heralded pair sources: pair-number statistics, conditional g⁽²⁾ and
//! per-pulse emission sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detector::{miss_probability, DetectorParams};
use crate::error::{Error, Result};
use crate::rng::{geometric_failures, open01, pick};

const MODULE: &str = "source_model";

/// Tail mass allowed when truncating a pair distribution.
pub const TRUNCATION_TOLERANCE: f64 = 1e-12;

/// Tail mass used when the truncation point is chosen automatically.
const AUTO_TAIL: f64 = 1e-17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PairStatistics {
    /// Thermal per mode, `mode_count` independent modes sharing `mu`.
    #[default]
    Thermal,
    Poisson,
    /// Exactly `mu` pairs every pulse (`mu` must be a whole number).
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceParams {
    /// Mean number of pairs per pump pulse.
    pub mu: f64,
    #[serde(default)]
    pub statistics: PairStatistics,
    #[serde(default = "one")]
    pub mode_count: u32,
    pub herald_coupling: f64,
    #[serde(default = "default_filter")]
    pub herald_filter_transmission: f64,
    pub signal_coupling: f64,
    #[serde(default = "one_f64")]
    pub signal_path_transmission: f64,
    pub herald_wavelength_nm: f64,
    pub signal_wavelength_nm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g2_measured: Option<f64>,
}

fn one() -> u32 {
    1
}

fn one_f64() -> f64 {
    1.0
}

fn default_filter() -> f64 {
    0.30
}

impl SourceParams {
    /// Lossless source with unit transmissions everywhere.
    pub fn ideal(mu: f64) -> Self {
        Self {
            mu,
            statistics: PairStatistics::Thermal,
            mode_count: 1,
            herald_coupling: 1.0,
            herald_filter_transmission: 1.0,
            signal_coupling: 1.0,
            signal_path_transmission: 1.0,
            herald_wavelength_nm: 807.0,
            signal_wavelength_nm: 1560.0,
            g2_measured: None,
        }
    }

    /// Probability that one herald photon reaches its detector.
    pub fn herald_transmission(&self) -> f64 {
        self.herald_coupling * self.herald_filter_transmission
    }

    /// Probability that one signal photon is delivered to the waveguide (or splitter).
    pub fn signal_transmission(&self) -> f64 {
        self.signal_coupling * self.signal_path_transmission
    }

    pub fn violations(&self, prefix: &str) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            v.push(format!("{prefix}.mu = {} must be >= 0", self.mu));
        }
        if self.statistics == PairStatistics::Fixed && self.mu.fract() != 0.0 {
            v.push(format!("{prefix}.mu = {} must be a whole number for fixed statistics", self.mu));
        }
        if self.mode_count == 0 {
            v.push(format!("{prefix}.mode_count must be >= 1"));
        }
        for (name, value) in [
            ("herald_coupling", self.herald_coupling),
            ("herald_filter_transmission", self.herald_filter_transmission),
            ("signal_coupling", self.signal_coupling),
            ("signal_path_transmission", self.signal_path_transmission),
        ] {
            if !(0.0..=1.0).contains(&value) {
                v.push(format!("{prefix}.{name} = {value} must be in [0, 1]"));
            }
        }
        for (name, value) in [
            ("herald_wavelength_nm", self.herald_wavelength_nm),
            ("signal_wavelength_nm", self.signal_wavelength_nm),
        ] {
            if !(value > 0.0) {
                v.push(format!("{prefix}.{name} = {value} must be positive"));
            }
        }
        if let Some(g2) = self.g2_measured {
            if !(0.0..1.0).contains(&g2) {
                v.push(format!("{prefix}.g2_measured = {g2} must be in [0, 1)"));
            }
        }
        v
    }

    pub fn warnings(&self, prefix: &str) -> Vec<String> {
        let mut w = Vec::new();
        if self.mu > 0.1 && self.statistics != PairStatistics::Fixed {
            w.push(format!(
                "{prefix}.mu = {} is above 0.1; multi-pair emission is no longer negligible",
                self.mu
            ));
        }
        w
    }

    pub fn pair_distribution(&self) -> Result<PairDistribution> {
        PairDistribution::for_source(self.statistics, self.mu, self.mode_count)
    }
}

/// Pair-number probabilities `P(n)` for `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDistribution {
    probabilities: Vec<f64>,
}

impl PairDistribution {
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn n_max(&self) -> usize {
        self.probabilities.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// `E[zⁿ]`.
    pub fn pgf(&self, z: f64) -> f64 {
        self.probabilities
            .iter()
            .rev()
            .fold(0.0, |acc, &p| acc * z + p)
    }

    fn normalized(mut probabilities: Vec<f64>) -> Self {
        let total: f64 = probabilities.iter().sum();
        for p in &mut probabilities {
            *p /= total;
        }
        Self { probabilities }
    }

    /// Single-mode thermal law, renormalized over `0..=n_max`.
    pub fn thermal(mu: f64, n_max: usize) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::domain(MODULE, format!("mu = {mu} must be >= 0")));
        }
        if n_max < 1 {
            return Err(Error::domain(MODULE, "n_max must be >= 1"));
        }
        let ratio = mu / (1.0 + mu);
        let tail = ratio.powf(n_max as f64 + 1.0);
        if tail > TRUNCATION_TOLERANCE {
            // smallest n_max with ratio^(n_max+1) <= tolerance
            let required = ((TRUNCATION_TOLERANCE.ln() / ratio.ln()).ceil() as usize).saturating_sub(1);
            return Err(Error::Truncation {
                n_max,
                tail,
                required: required.max(n_max + 1),
            });
        }
        let p0 = 1.0 / (1.0 + mu);
        let mut probs = Vec::with_capacity(n_max + 1);
        let mut p = p0;
        for _ in 0..=n_max {
            probs.push(p);
            p *= ratio;
        }
        Ok(Self::normalized(probs))
    }

    /// `modes` independent thermal modes with total mean `mu` (negative binomial).
    pub fn multimode_thermal(mu: f64, modes: u32, n_max: usize) -> Result<Self> {
        if modes == 1 {
            return Self::thermal(mu, n_max);
        }
        if !(mu >= 0.0 && mu.is_finite()) || modes == 0 {
            return Err(Error::domain(MODULE, "need mu >= 0 and at least one mode"));
        }
        let k = modes as f64;
        let x = (mu / k) / (1.0 + mu / k);
        let mut probs = Vec::with_capacity(n_max + 1);
        let mut p = (1.0 - x).powf(k);
        for n in 0..=n_max {
            probs.push(p);
            p *= x * (n as f64 + k) / (n as f64 + 1.0);
        }
        let tail = (1.0 - probs.iter().sum::<f64>()).max(0.0);
        if tail > TRUNCATION_TOLERANCE {
            let mut required = n_max;
            let mut acc: f64 = probs.iter().sum();
            while 1.0 - acc > TRUNCATION_TOLERANCE {
                acc += p;
                required += 1;
                p *= x * (required as f64 + k) / (required as f64 + 1.0);
            }
            return Err(Error::Truncation { n_max, tail, required });
        }
        Ok(Self::normalized(probs))
    }

    pub fn poisson(mean: f64, n_max: usize) -> Result<Self> {
        if !(mean >= 0.0 && mean.is_finite()) {
            return Err(Error::domain(MODULE, format!("mean = {mean} must be >= 0")));
        }
        if mean == 0.0 {
            return Ok(Self::fixed(0));
        }
        let ln_mean = mean.ln();
        let probs: Vec<f64> = (0..=n_max)
            .map(|n| (n as f64 * ln_mean - mean - libm::lgamma(n as f64 + 1.0)).exp())
            .collect();
        let tail = (1.0 - probs.iter().sum::<f64>()).max(0.0);
        if tail > TRUNCATION_TOLERANCE {
            let required = (mean + 12.0 * mean.sqrt() + 40.0).ceil() as usize;
            return Err(Error::Truncation { n_max, tail, required });
        }
        Ok(Self::normalized(probs))
    }

    pub fn fixed(n: usize) -> Self {
        let mut probabilities = vec![0.0; n.max(1) + 1];
        probabilities[n] = 1.0;
        Self { probabilities }
    }

    /// Distribution for a source, truncated where the neglected tail is below 1e-17.
    pub fn for_source(statistics: PairStatistics, mu: f64, modes: u32) -> Result<Self> {
        match statistics {
            PairStatistics::Fixed => Ok(Self::fixed(mu as usize)),
            PairStatistics::Poisson => {
                let n_max = (mu + 14.0 * mu.sqrt() + 40.0).ceil() as usize;
                Self::poisson(mu, n_max)
            }
            PairStatistics::Thermal => {
                let k = modes.max(1) as f64;
                let x = (mu / k) / (1.0 + mu / k);
                if x <= 0.0 {
                    return Self::thermal(0.0, 1);
                }
                // The negative-binomial tail decays like x^n·n^(k-1).
                let mut n_max = (AUTO_TAIL.ln() / x.ln()).ceil() as usize + 1;
                n_max += (k * 8.0) as usize;
                Self::multimode_thermal(mu, modes, n_max.max(2))
            }
        }
    }
}

/// Thermal pair-number distribution for one mode.
pub fn pair_number_distribution(mu: f64, n_max: usize) -> Result<PairDistribution> {
    PairDistribution::thermal(mu, n_max)
}

/// Conditional second-order autocorrelation of the heralded signal arm, measured
/// behind a balanced splitter with two detectors.
///
/// Exact enumeration over the pair number with binomial loss on each arm and
/// per-slot dark counts (`period_ns` sets the free-running dark window).
pub fn heralded_g2(
    source: &SourceParams,
    herald: &DetectorParams,
    signal: [&DetectorParams; 2],
    period_ns: f64,
) -> Result<f64> {
    let dist = source.pair_distribution()?;
    Ok(heralded_g2_with(&dist, source, herald, signal, period_ns))
}

fn heralded_g2_with(
    dist: &PairDistribution,
    source: &SourceParams,
    herald: &DetectorParams,
    signal: [&DetectorParams; 2],
    period_ns: f64,
) -> f64 {
    let th = source.herald_transmission() * herald.efficiency;
    let ts = source.signal_transmission();
    let xa = 0.5 * ts * signal[0].efficiency;
    let xb = 0.5 * ts * signal[1].efficiency;
    let dh = herald.slot_dark_probability(period_ns);
    let da = signal[0].slot_dark_probability(period_ns);
    let db = signal[1].slot_dark_probability(period_ns);

    let (mut p_h, mut p_ha, mut p_hb, mut p_hab) = (0.0, 0.0, 0.0, 0.0);
    for (n, &p) in dist.probabilities().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let n = n as u64;
        let h = 1.0 - miss_probability(th, n) * (1.0 - dh);
        let na = miss_probability(xa, n) * (1.0 - da);
        let nb = miss_probability(xb, n) * (1.0 - db);
        let nab = miss_probability(xa + xb, n) * (1.0 - da) * (1.0 - db);
        let both = (1.0 - na - nb + nab).max(0.0);
        p_h += p * h;
        p_ha += p * h * (1.0 - na);
        p_hb += p * h * (1.0 - nb);
        p_hab += p * h * both;
    }
    if p_hab <= 0.0 {
        return 0.0;
    }
    p_hab * p_h / (p_ha * p_hb)
}

/// Inverts [`heralded_g2`] for the mean pair number on `μ ∈ [0, 0.5]`.
pub fn mu_from_g2(
    g2: f64,
    source: &SourceParams,
    herald: &DetectorParams,
    signal: [&DetectorParams; 2],
    period_ns: f64,
) -> Result<f64> {
    if !(0.0..1.0).contains(&g2) {
        return Err(Error::Calibration(format!("g2 = {g2} must be in [0, 1)")));
    }
    let eval = |mu: f64| -> Result<f64> {
        let s = SourceParams {
            mu,
            ..source.clone()
        };
        heralded_g2(&s, herald, signal, period_ns)
    };
    if g2 == 0.0 && eval(0.0)? == 0.0 {
        return Ok(0.0);
    }
    // Bracket on the rising branch: dark counts make g2 large at vanishing mu.
    let grid: Vec<f64> = std::iter::once(0.0)
        .chain((0..=120).map(|i| 0.5 * 10f64.powf(-9.0 * (1.0 - i as f64 / 120.0))))
        .collect();
    let values = grid.iter().map(|&m| eval(m)).collect::<Result<Vec<_>>>()?;
    let bracket = (1..grid.len())
        .rev()
        .find(|&i| values[i - 1] <= g2 && values[i] >= g2)
        .ok_or_else(|| {
            Error::Calibration(format!(
                "no mu in [0, 0.5] reproduces g2 = {g2} (range {:.4e}..{:.4e})",
                values.iter().copied().fold(f64::INFINITY, f64::min),
                values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            ))
        })?;
    let (mut lo, mut hi) = (grid[bracket - 1], grid[bracket]);
    for _ in 0..200 {
        if hi - lo <= 1e-15 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if eval(mid)? < g2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Draws a pair count from the single-mode thermal law by inverting its
/// geometric tail `P(n ≥ k) = (μ/(1+μ))^k`.
pub fn sample_emission<R: Rng + ?Sized>(rng: &mut R, mu: f64) -> u64 {
    if mu <= 0.0 {
        return 0;
    }
    let ln_ratio = (mu / (1.0 + mu)).ln();
    geometric_failures(rng, ln_ratio)
}

/// Per-pulse pair sampler for a configured source.
#[derive(Debug, Clone)]
pub enum Emitter {
    Thermal {
        /// `ln(μ_k/(1+μ_k))` with `μ_k` the per-mode mean.
        ln_ratio: f64,
        modes: u32,
        /// Probability a single mode is non-empty.
        mode_occupied: f64,
        p_zero: f64,
    },
    Table {
        cdf: Vec<f64>,
        p_zero: f64,
    },
}

impl Emitter {
    pub fn new(source: &SourceParams) -> Result<Self> {
        match source.statistics {
            PairStatistics::Thermal => {
                let k = source.mode_count.max(1);
                let mu_k = source.mu / k as f64;
                let ratio = mu_k / (1.0 + mu_k);
                Ok(Emitter::Thermal {
                    ln_ratio: ratio.ln(),
                    modes: k,
                    mode_occupied: ratio,
                    p_zero: (1.0 + mu_k).powf(-(k as f64)),
                })
            }
            _ => {
                let dist = source.pair_distribution()?;
                let mut acc = 0.0;
                let cdf: Vec<f64> = dist
                    .probabilities()
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                Ok(Emitter::Table {
                    p_zero: dist.probabilities()[0],
                    cdf,
                })
            }
        }
    }

    pub fn p_zero(&self) -> f64 {
        match self {
            Emitter::Thermal { p_zero, .. } | Emitter::Table { p_zero, .. } => *p_zero,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            Emitter::Thermal {
                ln_ratio, modes, ..
            } => (0..*modes).map(|_| geometric_failures(rng, *ln_ratio)).sum(),
            Emitter::Table { cdf, .. } => pick(cdf, open01(rng) * cdf[cdf.len() - 1]) as u64,
        }
    }

    /// Sample conditioned on at least one pair.
    pub fn sample_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            Emitter::Thermal {
                ln_ratio,
                modes,
                mode_occupied,
                ..
            } => {
                // First occupied mode j has weight q·(1-q)^j; modes after it are unconstrained.
                let q = *mode_occupied;
                let k = *modes;
                let first = if k == 1 {
                    0
                } else {
                    let norm = -((k as f64) * (-q).ln_1p()).exp_m1();
                    let u = open01(rng) * norm;
                    // P(first ≤ j) = 1 - (1-q)^(j+1)
                    let j = ((-u).ln_1p() / (-q).ln_1p()).ceil() as i64 - 1;
                    j.clamp(0, k as i64 - 1) as u32
                };
                let mut n = 1 + geometric_failures(rng, *ln_ratio);
                for _ in (first + 1)..k {
                    n += geometric_failures(rng, *ln_ratio);
                }
                n
            }
            Emitter::Table { cdf, p_zero } => {
                let total = cdf[cdf.len() - 1];
                let u = p_zero + open01(rng) * (total - p_zero);
                pick(cdf, u).max(1) as u64
            }
        }
    }
}
