//! Nonlinear-optics relations for the upconversion waveguide.
//!
//! Phase mismatch is parameterized directly by the measured acceptance
//! bandwidth: the efficiency is `sinc²(β·(δ₁ + δ₂))` where `δᵢ` is the detuning
//! of input `i` from its phase-matched center and `β` is fixed so that scanning
//! a single input reproduces the acceptance FWHM.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MODULE: &str = "optics_model";

/// Abscissa where `sinc²(x) = 1/2`, i.e. the positive root of `sin(x)/x = 1/√2`.
pub const SINC2_HALF_MAX: f64 = 1.391_557_378_251_510_3;

/// Ratio between the FWHM and the standard deviation of a Gaussian, `2·√(2 ln 2)`.
pub const GAUSSIAN_FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhasematchParams {
    pub lambda1_center_nm: f64,
    pub lambda2_center_nm: f64,
    /// FWHM of the efficiency when one input is scanned and the other held at center.
    pub acceptance_fwhm_nm: f64,
    /// Probability that a temporally aligned input pair leaves the waveguide as one
    /// upconverted photon, pigtail coupling included.
    pub eta_system: f64,
    pub pigtail_coupling: f64,
    #[serde(default = "default_crystal_length")]
    pub crystal_length_cm: f64,
}

fn default_crystal_length() -> f64 {
    4.5
}

impl Default for PhasematchParams {
    fn default() -> Self {
        Self {
            lambda1_center_nm: 1560.0,
            lambda2_center_nm: 1551.0,
            acceptance_fwhm_nm: 0.27,
            eta_system: 1.56e-8,
            pigtail_coupling: 0.70,
            crystal_length_cm: 4.5,
        }
    }
}

impl PhasematchParams {
    pub fn violations(&self, prefix: &str) -> Vec<String> {
        let mut v = Vec::new();
        if !(0.0..=1.0).contains(&self.eta_system) {
            v.push(format!("{prefix}.eta_system = {} must be in [0, 1]", self.eta_system));
        }
        if !(self.pigtail_coupling > 0.0 && self.pigtail_coupling <= 1.0) {
            v.push(format!(
                "{prefix}.pigtail_coupling = {} must be in (0, 1]",
                self.pigtail_coupling
            ));
        }
        if !(self.acceptance_fwhm_nm > 0.0 && self.acceptance_fwhm_nm.is_finite()) {
            v.push(format!(
                "{prefix}.acceptance_fwhm_nm = {} must be positive",
                self.acceptance_fwhm_nm
            ));
        }
        for (name, value) in [
            ("lambda1_center_nm", self.lambda1_center_nm),
            ("lambda2_center_nm", self.lambda2_center_nm),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                v.push(format!("{prefix}.{name} = {value} must be positive"));
            }
        }
        if self.lambda1_center_nm == self.lambda2_center_nm {
            v.push(format!(
                "{prefix}: lambda1_center_nm and lambda2_center_nm must differ (non-degenerate inputs)"
            ));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations("phasematch");
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    /// Scale factor `β` (nm⁻¹) mapping summed detuning onto the sinc argument.
    pub fn detuning_scale(&self) -> f64 {
        2.0 * SINC2_HALF_MAX / self.acceptance_fwhm_nm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub lambda1_nm: f64,
    pub lambda2_nm: f64,
    #[serde(default)]
    pub power1_mw: f64,
    #[serde(default)]
    pub power2_mw: f64,
}

impl SpectralPoint {
    pub fn new(lambda1_nm: f64, lambda2_nm: f64) -> Self {
        Self {
            lambda1_nm,
            lambda2_nm,
            power1_mw: 0.0,
            power2_mw: 0.0,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.lambda1_nm > 0.0 && self.lambda2_nm > 0.0) {
            return Err(Error::domain(MODULE, "wavelengths must be positive"));
        }
        if self.power1_mw < 0.0 || self.power2_mw < 0.0 {
            return Err(Error::domain(MODULE, "powers must be non-negative"));
        }
        Ok(())
    }
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Output wavelength from energy conservation, `1/λ₃ = 1/λ₁ + 1/λ₂`.
pub fn sfg_wavelength(lambda1_nm: f64, lambda2_nm: f64) -> Result<f64> {
    if !(lambda1_nm > 0.0 && lambda2_nm > 0.0) {
        return Err(Error::domain(
            MODULE,
            format!("sfg_wavelength needs positive wavelengths, got ({lambda1_nm}, {lambda2_nm})"),
        ));
    }
    Ok(lambda1_nm * lambda2_nm / (lambda1_nm + lambda2_nm))
}

pub fn phasematch_efficiency(point: &SpectralPoint, pm: &PhasematchParams) -> Result<f64> {
    point.check()?;
    pm.validate()?;
    Ok(phasematch_unchecked(point.lambda1_nm, point.lambda2_nm, pm))
}

fn phasematch_unchecked(lambda1_nm: f64, lambda2_nm: f64, pm: &PhasematchParams) -> f64 {
    let detuning = (lambda1_nm - pm.lambda1_center_nm) + (lambda2_nm - pm.lambda2_center_nm);
    let s = sinc(pm.detuning_scale() * detuning);
    s * s
}

/// Rectangular wavelength grid with fixed input powers.
#[derive(Debug, Clone)]
pub struct WavelengthGrid {
    pub lambda1_nm: Vec<f64>,
    pub lambda2_nm: Vec<f64>,
    pub power1_mw: f64,
    pub power2_mw: f64,
}

impl WavelengthGrid {
    /// Same axis for both inputs, `lo..=hi` in `step` increments.
    pub fn square(lo_nm: f64, hi_nm: f64, step_nm: f64, power_mw: f64) -> Result<Self> {
        let axis = linspace_step(lo_nm, hi_nm, step_nm)?;
        Ok(Self {
            lambda1_nm: axis.clone(),
            lambda2_nm: axis,
            power1_mw: power_mw,
            power2_mw: power_mw,
        })
    }
}

fn linspace_step(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::domain(
            MODULE,
            format!("bad wavelength range {lo}..{hi} step {step}"),
        ));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| lo + i as f64 * step).collect())
}

/// Classical three-wave mixing map: the SFG ridge plus one SHG ridge per input.
///
/// Components are stored separately, row-major with `λ₁` as the row index.
#[derive(Debug, Clone)]
pub struct ClassicalMap {
    pub lambda1_nm: Vec<f64>,
    pub lambda2_nm: Vec<f64>,
    pub sfg: Vec<f64>,
    pub shg1: Vec<f64>,
    pub shg2: Vec<f64>,
}

impl ClassicalMap {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.lambda2_nm.len() + j
    }

    pub fn total(&self, i: usize, j: usize) -> f64 {
        let k = self.idx(i, j);
        self.sfg[k] + self.shg1[k] + self.shg2[k]
    }

    pub fn sfg_peak(&self) -> f64 {
        self.sfg.iter().copied().fold(0.0, f64::max)
    }

    pub fn shg_peak(&self) -> f64 {
        self.shg1
            .iter()
            .chain(self.shg2.iter())
            .copied()
            .fold(0.0, f64::max)
    }

    /// Height of the SFG ridge relative to the taller SHG ridge.
    pub fn sfg_to_shg_ratio(&self) -> Option<f64> {
        let shg = self.shg_peak();
        (shg > 0.0).then(|| self.sfg_peak() / shg)
    }

    /// CSV with `λ₂` values in the header row and `λ₁` in the first column.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "lambda1_nm\\lambda2_nm")?;
        for l2 in &self.lambda2_nm {
            write!(w, ",{l2:.6}")?;
        }
        writeln!(w)?;
        for (i, l1) in self.lambda1_nm.iter().enumerate() {
            write!(w, "{l1:.6}")?;
            for j in 0..self.lambda2_nm.len() {
                write!(w, ",{:.9e}", self.total(i, j))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

pub fn classical_map(grid: &WavelengthGrid, pm: &PhasematchParams) -> Result<ClassicalMap> {
    pm.validate()?;
    if grid.lambda1_nm.is_empty() || grid.lambda2_nm.is_empty() {
        return Err(Error::domain(MODULE, "classical_map needs a non-empty grid"));
    }
    if grid.power1_mw < 0.0 || grid.power2_mw < 0.0 {
        return Err(Error::domain(MODULE, "powers must be non-negative"));
    }
    if grid
        .lambda1_nm
        .iter()
        .chain(grid.lambda2_nm.iter())
        .any(|&l| !(l > 0.0))
    {
        return Err(Error::domain(MODULE, "wavelengths must be positive"));
    }
    let (p1, p2) = (grid.power1_mw, grid.power2_mw);
    let n = grid.lambda1_nm.len() * grid.lambda2_nm.len();
    let mut sfg = Vec::with_capacity(n);
    let mut shg1 = Vec::with_capacity(n);
    let mut shg2 = Vec::with_capacity(n);
    for &l1 in &grid.lambda1_nm {
        let shg1_row = p1 * p1 * phasematch_unchecked(l1, l1, pm);
        for &l2 in &grid.lambda2_nm {
            // Two distinguishable fields: the cross term carries the factor 4.
            sfg.push(4.0 * p1 * p2 * phasematch_unchecked(l1, l2, pm));
            shg1.push(shg1_row);
            shg2.push(p2 * p2 * phasematch_unchecked(l2, l2, pm));
        }
    }
    Ok(ClassicalMap {
        lambda1_nm: grid.lambda1_nm.clone(),
        lambda2_nm: grid.lambda2_nm.clone(),
        sfg,
        shg1,
        shg2,
    })
}

/// Standard deviation of the temporal-overlap envelope of two equal Gaussian pulses.
pub fn overlap_sigma_ps(pulse_fwhm_ps: f64) -> f64 {
    pulse_fwhm_ps * std::f64::consts::SQRT_2 / GAUSSIAN_FWHM_PER_SIGMA
}

/// Conversion probability of one photon pair arriving `delay_ps` apart.
pub fn pair_conversion_probability(
    delay_ps: f64,
    pm: &PhasematchParams,
    pulse_fwhm_ps: f64,
) -> Result<f64> {
    if !(pulse_fwhm_ps > 0.0) {
        return Err(Error::domain(
            MODULE,
            format!("pulse_fwhm_ps must be positive, got {pulse_fwhm_ps}"),
        ));
    }
    let sigma = overlap_sigma_ps(pulse_fwhm_ps);
    Ok(pm.eta_system * (-delay_ps * delay_ps / (2.0 * sigma * sigma)).exp())
}
