use serde::Serialize;

use crate::error::{Error, Result};
use crate::timetag::TimeTagStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct G2Estimate {
    /// `None` when either pair count is zero.
    pub g2: Option<f64>,
    pub n_h: u64,
    pub n_ha: u64,
    pub n_hb: u64,
    pub n_hab: u64,
}

/// For each herald tag, whether `tags` has a tag in the same bin.
fn same_bin_hits(herald: &[u64], tags: &[u64], bin_width_ps: f64) -> Vec<bool> {
    let half = (0.5 * bin_width_ps).ceil() as u64;
    let mut lo = 0usize;
    herald
        .iter()
        .map(|&t| {
            let start = t.saturating_sub(half);
            while lo < tags.len() && tags[lo] < start {
                lo += 1;
            }
            tags[lo..]
                .iter()
                .take_while(|&&x| x <= t + half)
                .any(|&x| ((x as f64 - t as f64) / bin_width_ps).round() == 0.0)
        })
        .collect()
}

/// Conditional `g² = N_hab·N_h / (N_ha·N_hb)` from same-bin coincidences.
pub fn estimate_conditional_g2(
    herald: &TimeTagStream,
    signal_a: &TimeTagStream,
    signal_b: &TimeTagStream,
    bin_width_ps: f64,
) -> Result<G2Estimate> {
    if !(bin_width_ps > 0.0) {
        return Err(Error::domain("coincidence_analyzer", "bin width must be positive"));
    }
    let a = same_bin_hits(herald.timestamps(), signal_a.timestamps(), bin_width_ps);
    let b = same_bin_hits(herald.timestamps(), signal_b.timestamps(), bin_width_ps);
    let n_h = herald.len() as u64;
    let n_ha = a.iter().filter(|&&x| x).count() as u64;
    let n_hb = b.iter().filter(|&&x| x).count() as u64;
    let n_hab = a.iter().zip(&b).filter(|(&x, &y)| x && y).count() as u64;
    let g2 = (n_ha > 0 && n_hb > 0)
        .then(|| n_hab as f64 * n_h as f64 / (n_ha as f64 * n_hb as f64));
    Ok(G2Estimate {
        g2,
        n_h,
        n_ha,
        n_hb,
        n_hab,
    })
}
