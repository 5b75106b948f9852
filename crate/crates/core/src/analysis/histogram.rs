use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::timetag::TimeTagStream;

const MODULE: &str = "coincidence_analyzer";

/// Threefold histogram over `τ₃₁ = t₃ − t₁` and `τ₃₂ = t₃ − t₂`, with bins
/// centred on multiples of `bin_width_ps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoincHistogram2D {
    pub bin_width_ps: f64,
    pub half_window_bins: u32,
    /// Row-major, `τ₃₁` major, offsets `−W..=W` on each axis.
    pub counts: Vec<u64>,
    pub duration_s: f64,
}

impl CoincHistogram2D {
    pub fn empty(bin_width_ps: f64, half_window_bins: u32, duration_s: f64) -> Self {
        let side = 2 * half_window_bins as usize + 1;
        Self {
            bin_width_ps,
            half_window_bins,
            counts: vec![0; side * side],
            duration_s,
        }
    }

    pub fn side(&self) -> usize {
        2 * self.half_window_bins as usize + 1
    }

    /// Bin offsets along either axis.
    pub fn offsets(&self) -> std::ops::RangeInclusive<i64> {
        let w = self.half_window_bins as i64;
        -w..=w
    }

    fn index(&self, tau31: i64, tau32: i64) -> Option<usize> {
        let w = self.half_window_bins as i64;
        if tau31.abs() > w || tau32.abs() > w {
            return None;
        }
        Some((tau31 + w) as usize * self.side() + (tau32 + w) as usize)
    }

    pub fn get(&self, tau31: i64, tau32: i64) -> u64 {
        self.index(tau31, tau32).map_or(0, |i| self.counts[i])
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn n_pixels(&self) -> usize {
        self.counts.len()
    }

    /// Pixel with the largest count; ties resolve to the first in row-major order.
    pub fn max_pixel(&self) -> ((i64, i64), u64) {
        let w = self.half_window_bins as i64;
        let side = self.side();
        let (i, &c) = self
            .counts
            .iter()
            .enumerate()
            .rev()
            .max_by_key(|(_, &c)| c)
            .expect("non-empty histogram");
        (((i / side) as i64 - w, (i % side) as i64 - w), c)
    }

    /// Iterates `((τ₃₁, τ₃₂), count)`.
    pub fn pixels(&self) -> impl Iterator<Item = ((i64, i64), u64)> + '_ {
        let w = self.half_window_bins as i64;
        let side = self.side();
        self.counts
            .iter()
            .enumerate()
            .map(move |(i, &c)| (((i / side) as i64 - w, (i % side) as i64 - w), c))
    }

    /// Adds another histogram with the same binning, e.g. from a disjoint segment.
    pub fn merge(&mut self, other: &CoincHistogram2D) -> Result<()> {
        if self.half_window_bins != other.half_window_bins || self.bin_width_ps != other.bin_width_ps {
            return Err(Error::domain(MODULE, "cannot merge histograms with different binning"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.duration_s += other.duration_s;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "tau31_bin,tau32_bin,count")?;
        for ((a, b), c) in self.pixels() {
            writeln!(w, "{a},{b},{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwofoldHistogram {
    pub bin_width_ps: f64,
    pub half_window_bins: u32,
    /// Offsets `−W..=W` of `τ = t_b − t_a`.
    pub counts: Vec<u64>,
}

impl TwofoldHistogram {
    pub fn get(&self, tau: i64) -> u64 {
        let w = self.half_window_bins as i64;
        if tau.abs() > w {
            0
        } else {
            self.counts[(tau + w) as usize]
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "tau_bin,count")?;
        let hw = self.half_window_bins as i64;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(w, "{},{c}", i as i64 - hw)?;
        }
        Ok(())
    }
}

fn check_binning(bin_width_ps: f64) -> Result<()> {
    if !(bin_width_ps > 0.0 && bin_width_ps.is_finite()) {
        return Err(Error::domain(MODULE, format!("bin width {bin_width_ps} ps must be positive")));
    }
    Ok(())
}

fn check_durations(streams: &[&TimeTagStream]) -> Result<()> {
    let d = streams[0].duration_ps();
    if let Some(s) = streams.iter().find(|s| s.duration_ps() != d) {
        return Err(Error::domain(
            MODULE,
            format!(
                "stream {} spans {} ps but {} spans {d} ps",
                s.label(),
                s.duration_ps(),
                streams[0].label()
            ),
        ));
    }
    Ok(())
}

/// Round-to-nearest bin of a signed delay.
#[inline]
fn bin_of(delta_ps: i64, inv_bin: f64) -> i64 {
    (delta_ps as f64 * inv_bin).round() as i64
}

/// Farthest delay in ps that can still round into the window.
#[inline]
fn reach_ps(bin_width_ps: f64, half_window_bins: u32) -> u64 {
    ((half_window_bins as f64 + 0.5) * bin_width_ps).ceil() as u64
}

/// Collects the in-window bins of `tags` relative to `t`, advancing the
/// sliding lower cursor `lo`.
#[inline]
fn window_bins(tags: &[u64], lo: &mut usize, t: u64, reach: u64, inv_bin: f64, w: i64, out: &mut Vec<i64>) {
    out.clear();
    let start = t.saturating_sub(reach);
    while *lo < tags.len() && tags[*lo] < start {
        *lo += 1;
    }
    for &x in &tags[*lo..] {
        if x > t + reach {
            break;
        }
        let b = bin_of(t as i64 - x as i64, inv_bin);
        if b.abs() <= w {
            out.push(b);
        }
    }
}

fn accumulate_threefold(
    h: &mut CoincHistogram2D,
    t1: &[u64],
    t2: &[u64],
    t3: &[u64],
) {
    let inv_bin = 1.0 / h.bin_width_ps;
    let reach = reach_ps(h.bin_width_ps, h.half_window_bins);
    let w = h.half_window_bins as i64;
    let side = h.side();
    let (mut lo1, mut lo2) = (0usize, 0usize);
    let (mut b1, mut b2) = (Vec::new(), Vec::new());
    for &t in t3 {
        window_bins(t1, &mut lo1, t, reach, inv_bin, w, &mut b1);
        if b1.is_empty() {
            continue;
        }
        window_bins(t2, &mut lo2, t, reach, inv_bin, w, &mut b2);
        for &a in &b1 {
            let row = (a + w) as usize * side;
            for &b in &b2 {
                h.counts[row + (b + w) as usize] += 1;
            }
        }
    }
}

/// Single-pass threefold histogram with sliding cursors over D1 and D2.
pub fn threefold_histogram(
    s1: &TimeTagStream,
    s2: &TimeTagStream,
    s3: &TimeTagStream,
    bin_width_ps: f64,
    half_window_bins: u32,
) -> Result<CoincHistogram2D> {
    check_binning(bin_width_ps)?;
    check_durations(&[s1, s2, s3])?;
    let mut h = CoincHistogram2D::empty(bin_width_ps, half_window_bins, s3.duration_ps() as f64 * 1e-12);
    accumulate_threefold(&mut h, s1.timestamps(), s2.timestamps(), s3.timestamps());
    Ok(h)
}

/// Same result as [`threefold_histogram`], with the D3 stream split into
/// segments processed on the rayon pool and merged.
pub fn threefold_histogram_par(
    s1: &TimeTagStream,
    s2: &TimeTagStream,
    s3: &TimeTagStream,
    bin_width_ps: f64,
    half_window_bins: u32,
) -> Result<CoincHistogram2D> {
    check_binning(bin_width_ps)?;
    check_durations(&[s1, s2, s3])?;
    const SEGMENT: usize = 1 << 16;
    let reach = reach_ps(bin_width_ps, half_window_bins);
    let duration_s = s3.duration_ps() as f64 * 1e-12;
    let (t1, t2) = (s1.timestamps(), s2.timestamps());
    let parts: Vec<CoincHistogram2D> = s3
        .timestamps()
        .par_chunks(SEGMENT)
        .map(|seg| {
            let lo = seg[0].saturating_sub(reach);
            let hi = seg[seg.len() - 1].saturating_add(reach);
            let slice = |t: &[u64]| -> std::ops::Range<usize> {
                t.partition_point(|&x| x < lo)..t.partition_point(|&x| x <= hi)
            };
            let (r1, r2) = (slice(t1), slice(t2));
            let mut h = CoincHistogram2D::empty(bin_width_ps, half_window_bins, 0.0);
            accumulate_threefold(&mut h, &t1[r1], &t2[r2], seg);
            h
        })
        .collect();
    let mut total = CoincHistogram2D::empty(bin_width_ps, half_window_bins, 0.0);
    for p in &parts {
        total.merge(p)?;
    }
    total.duration_s = duration_s;
    Ok(total)
}

/// Histogram of `τ = t_b − t_a` over `|bin| ≤ half_window_bins`.
pub fn twofold_histogram(
    sa: &TimeTagStream,
    sb: &TimeTagStream,
    bin_width_ps: f64,
    half_window_bins: u32,
) -> Result<TwofoldHistogram> {
    check_binning(bin_width_ps)?;
    check_durations(&[sa, sb])?;
    let inv_bin = 1.0 / bin_width_ps;
    let reach = reach_ps(bin_width_ps, half_window_bins);
    let w = half_window_bins as i64;
    let mut counts = vec![0u64; 2 * half_window_bins as usize + 1];
    let mut lo = 0usize;
    let mut bins = Vec::new();
    for &t in sb.timestamps() {
        window_bins(sa.timestamps(), &mut lo, t, reach, inv_bin, w, &mut bins);
        for &b in &bins {
            counts[(b + w) as usize] += 1;
        }
    }
    Ok(TwofoldHistogram {
        bin_width_ps,
        half_window_bins,
        counts,
    })
}
