//! Per-channel time-tag streams and the `TTAG` binary container.
//!
//! Layout, little-endian:
//!
//! | offset | size | field                     |
//! |--------|------|---------------------------|
//! | 0      | 4    | magic `b"TTAG"`           |
//! | 4      | 2    | version (`u16`, = 1)      |
//! | 6      | 2    | channel (`u16`)           |
//! | 8      | 8    | count (`u64`)             |
//! | 16     | 8·n  | timestamps, ps (`u64`)    |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MODULE: &str = "timetag";

pub const MAGIC: &[u8; 4] = b"TTAG";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeTagStream {
    channel: u16,
    timestamps_ps: Vec<u64>,
    duration_ps: u64,
}

impl TimeTagStream {
    /// Validates strict monotonicity and that every tag lies in `[0, duration_ps)`.
    pub fn new(channel: u16, timestamps_ps: Vec<u64>, duration_ps: u64) -> Result<Self> {
        if let Some(i) = timestamps_ps.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::format(
                MODULE,
                format!(
                    "channel {channel}: timestamps not strictly increasing at index {} ({} then {})",
                    i + 1,
                    timestamps_ps[i],
                    timestamps_ps[i + 1]
                ),
            ));
        }
        if let Some(&last) = timestamps_ps.last() {
            if last >= duration_ps {
                return Err(Error::format(
                    MODULE,
                    format!("channel {channel}: timestamp {last} ps outside duration {duration_ps} ps"),
                ));
            }
        }
        Ok(Self {
            channel,
            timestamps_ps,
            duration_ps,
        })
    }

    pub(crate) fn from_sorted(channel: u16, timestamps_ps: Vec<u64>, duration_ps: u64) -> Self {
        debug_assert!(timestamps_ps.windows(2).all(|w| w[0] < w[1]));
        Self {
            channel,
            timestamps_ps,
            duration_ps,
        }
    }

    pub fn channel(&self) -> u16 {
        self.channel
    }

    pub fn label(&self) -> String {
        format!("D{}", self.channel)
    }

    pub fn timestamps(&self) -> &[u64] {
        &self.timestamps_ps
    }

    pub fn duration_ps(&self) -> u64 {
        self.duration_ps
    }

    pub fn len(&self) -> usize {
        self.timestamps_ps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps_ps.is_empty()
    }

    pub fn with_duration(mut self, duration_ps: u64) -> Result<Self> {
        if self.timestamps_ps.last().is_some_and(|&t| t >= duration_ps) {
            return Err(Error::domain(MODULE, "duration shorter than the last tag"));
        }
        self.duration_ps = duration_ps;
        Ok(self)
    }

    /// Shifts every tag by `offset_ps`, extending the duration by the same amount.
    pub fn shifted(&self, offset_ps: u64) -> Self {
        Self {
            channel: self.channel,
            timestamps_ps: self.timestamps_ps.iter().map(|t| t + offset_ps).collect(),
            duration_ps: self.duration_ps + offset_ps,
        }
    }

    pub fn write_ttag<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = [0u8; HEADER_LEN];
        header[0..4].copy_from_slice(MAGIC);
        header[4..6].copy_from_slice(&VERSION.to_le_bytes());
        header[6..8].copy_from_slice(&self.channel.to_le_bytes());
        header[8..16].copy_from_slice(&(self.timestamps_ps.len() as u64).to_le_bytes());
        w.write_all(&header)?;
        for chunk in self.timestamps_ps.chunks(8192) {
            let mut buf = Vec::with_capacity(chunk.len() * 8);
            for t in chunk {
                buf.extend_from_slice(&t.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        w.flush()
    }

    /// Parses a `TTAG` payload. The format carries no duration, so the caller
    /// supplies one or it defaults to one past the last tag.
    pub fn read_ttag<R: Read>(mut r: R, duration_ps: Option<u64>) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)
            .map_err(|e| Error::format(MODULE, format!("truncated header: {e}")))?;
        if &header[0..4] != MAGIC {
            return Err(Error::format(MODULE, "bad magic, expected TTAG"));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != VERSION {
            return Err(Error::format(MODULE, format!("unsupported version {version}")));
        }
        let channel = u16::from_le_bytes([header[6], header[7]]);
        let count = u64::from_le_bytes(header[8..16].try_into().unwrap());
        let mut body = Vec::new();
        r.read_to_end(&mut body)
            .map_err(|e| Error::format(MODULE, format!("read failed: {e}")))?;
        if body.len() as u64 != count.saturating_mul(8) {
            return Err(Error::format(
                MODULE,
                format!(
                    "header declares {count} tags but payload holds {} bytes",
                    body.len()
                ),
            ));
        }
        let timestamps: Vec<u64> = body
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let duration = duration_ps.unwrap_or_else(|| timestamps.last().map_or(0, |t| t + 1));
        Self::new(channel, timestamps, duration)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_ttag(BufWriter::new(f))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, duration_ps: Option<u64>) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_ttag(BufReader::new(f), duration_ps)
    }
}

/// Debug export: `channel,timestamp_ps`, streams merged in time order.
pub fn write_csv<W: Write>(streams: &[&TimeTagStream], mut w: W) -> std::io::Result<()> {
    writeln!(w, "channel,timestamp_ps")?;
    let mut rows: Vec<(u64, u16)> = streams
        .iter()
        .flat_map(|s| s.timestamps().iter().map(move |&t| (t, s.channel())))
        .collect();
    rows.sort_unstable();
    for (t, c) in rows {
        writeln!(w, "{c},{t}")?;
    }
    Ok(())
}
