use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pump laser clock. Slot times are derived from the slot index with exact
/// integer arithmetic, so there is no accumulated rounding over long runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockParams {
    pub repetition_rate_hz: f64,
    #[serde(default = "default_fwhm")]
    pub pulse_fwhm_ps: f64,
    /// Informational; checked against the rate when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse_period_ps: Option<f64>,
}

fn default_fwhm() -> f64 {
    10.0
}

impl Default for ClockParams {
    fn default() -> Self {
        Self {
            repetition_rate_hz: 4.30e8,
            pulse_fwhm_ps: 10.0,
            pulse_period_ps: None,
        }
    }
}

impl ClockParams {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let rate = self.repetition_rate_hz;
        if !(rate > 0.0 && rate.is_finite()) {
            v.push(format!("clock.repetition_rate_hz = {rate} must be positive"));
            return v;
        }
        let millihertz = (rate * 1e3).round();
        if millihertz < 1.0 || ((millihertz / 1e3 - rate) / rate).abs() > 1e-12 {
            v.push(format!(
                "clock.repetition_rate_hz = {rate} must be a whole number of millihertz"
            ));
        }
        if !(self.pulse_fwhm_ps > 0.0) {
            v.push(format!(
                "clock.pulse_fwhm_ps = {} must be positive",
                self.pulse_fwhm_ps
            ));
        }
        if let Some(period) = self.pulse_period_ps {
            if ((period - self.period_ps()) / self.period_ps()).abs() > 1e-6 {
                v.push(format!(
                    "clock.pulse_period_ps = {period} is inconsistent with the repetition rate ({})",
                    self.period_ps()
                ));
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    fn rate_millihertz(&self) -> u128 {
        (self.repetition_rate_hz * 1e3).round() as u128
    }

    pub fn period_ps(&self) -> f64 {
        1e12 / self.repetition_rate_hz
    }

    pub fn period_ns(&self) -> f64 {
        1e9 / self.repetition_rate_hz
    }

    /// `round(n · period)` in integer picoseconds.
    #[inline]
    pub fn slot_time_ps(&self, slot: u64) -> u64 {
        let r = self.rate_millihertz();
        ((slot as u128 * 1_000_000_000_000_000 + r / 2) / r) as u64
    }

    /// Number of whole pulse slots in `duration_s`.
    pub fn slots_in(&self, duration_s: f64) -> u64 {
        (duration_s * self.repetition_rate_hz).floor().max(0.0) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn period_of_reference_clock() {
        let c = ClockParams::default();
        assert!((c.period_ps() - 2325.581_395_348_837).abs() < 1e-9);
        assert!((c.period_ns() - 2.325_581_395_348_837).abs() < 1e-12);
        assert_eq!(c.slot_time_ps(0), 0);
        assert_eq!(c.slot_time_ps(1), 2326);
        assert_eq!(c.slot_time_ps(43), 100_000);
        assert_eq!(c.slot_time_ps(430_000_000), 1_000_000_000_000);
    }

    #[test]
    fn no_drift_over_long_runs() {
        // 260 h of slots; compare against exact rational n·10¹²/(4.3·10⁸) = n·10⁴/4.3
        let c = ClockParams::default();
        let last = c.slots_in(260.0 * 3600.0);
        assert_eq!(last, 402_480_000_000_000);
        let mut n = 0u64;
        let step = 9_999_999_967u64;
        while n < last {
            let t = c.slot_time_ps(n) as i128;
            // exact value scaled by 43: n·10⁵
            let exact_x43 = n as i128 * 100_000;
            assert!((t * 43 - exact_x43).abs() * 2 <= 43, "slot {n}");
            n += step;
        }
        assert!(c.slot_time_ps(last) < i64::MAX as u64);
    }

    #[test]
    fn validation() {
        let c = ClockParams {
            repetition_rate_hz: 4.3e8,
            pulse_fwhm_ps: 10.0,
            pulse_period_ps: Some(2300.0),
        };
        assert_eq!(c.violations().len(), 1);
        let c = ClockParams {
            pulse_period_ps: Some(2325.5814),
            ..c
        };
        assert!(c.validate().is_ok());
        let c = ClockParams {
            repetition_rate_hz: -1.0,
            ..c
        };
        assert!(c.validate().is_err());
    }
}
