//! `.wxs` state files and `.stats.csv` statistics files.
//!
//! State layout, all integers little-endian:
//!
//! ```text
//! offset  size  field
//! 0       8     magic "WXSTATE1"
//! 8       2     version (u16, currently 1)
//! 10      4     lat_count (u32)
//! 14      4     lon_count (u32)
//! 18      4     channel_count (u32, always 73)
//! 22      8     valid_time (i64 Unix seconds, UTC)
//! 30      4     resolution in microdegrees (u32)
//! 34      ...   channel_count x { name length (u8), ASCII name }
//! ...     ...   payload: f32 LE, (channel, lat, lon) row-major
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::catalog::{VariableCatalog, CHANNEL_COUNT};
use crate::field::{FieldError, FieldSet};
use crate::grid::GridSpec;
use crate::perturb::{ChannelStats, VariableStats};

pub const MAGIC: &[u8; 8] = b"WXSTATE1";
pub const VERSION: u16 = 1;
pub const FIXED_HEADER_LEN: usize = 34;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("bad magic at byte 0")]
    BadMagic,
    #[error("unsupported version {found} at byte 8")]
    UnsupportedVersion { found: u16 },
    #[error("truncated header at byte {offset}")]
    TruncatedHeader { offset: usize },
    #[error("dim mismatch at byte {offset}: {detail}")]
    DimMismatch { offset: usize, detail: String },
    #[error("truncated payload: expected {expected} bytes from byte {offset}, found {actual}")]
    TruncatedPayload { offset: usize, expected: usize, actual: usize },
    #[error("catalog mismatch at byte {offset}: channel {channel} is {found:?}, expected {expected:?}")]
    CatalogMismatch { offset: usize, channel: usize, found: String, expected: String },
    #[error("non-finite state")]
    NonFiniteState,
    #[error("invalid state: {0}")]
    Field(#[from] FieldError),
    #[error("incomplete stats: missing {}", missing.join(", "))]
    IncompleteStats { missing: Vec<String> },
    #[error("degenerate std for {variable}")]
    DegenerateStd { variable: String },
    #[error("malformed stats line {line}: {detail}")]
    MalformedStats { line: usize, detail: String },
}

impl FormatError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        FormatError::Io { path: path.to_path_buf(), source }
    }
}

/// Serializes raw state values. Refuses non-finite values.
pub fn encode_state(grid: &GridSpec, valid_time: DateTime<Utc>, values: &[f32]) -> Result<Vec<u8>, FormatError> {
    let expected = CHANNEL_COUNT * grid.points();
    if values.len() != expected {
        return Err(FormatError::Field(FieldError::ShapeMismatch { expected, actual: values.len() }));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(FormatError::NonFiniteState);
    }
    let catalog = VariableCatalog::standard();
    let table_len: usize = catalog.names().map(|n| 1 + n.len()).sum();
    let mut buf = Vec::with_capacity(FIXED_HEADER_LEN + table_len + 4 * values.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.lat_count() as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.lon_count() as u32).to_le_bytes());
    buf.extend_from_slice(&(CHANNEL_COUNT as u32).to_le_bytes());
    buf.extend_from_slice(&valid_time.timestamp().to_le_bytes());
    buf.extend_from_slice(&grid.resolution_microdeg().to_le_bytes());
    for name in catalog.names() {
        buf.push(name.len() as u8);
        buf.extend_from_slice(name.as_bytes());
    }
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(buf)
}

pub fn encode_fieldset(fs: &FieldSet) -> Result<Vec<u8>, FormatError> {
    encode_state(fs.grid(), fs.valid_time(), fs.values())
}

pub fn write_state(path: &Path, fs: &FieldSet) -> Result<(), FormatError> {
    let bytes = encode_fieldset(fs)?;
    let mut file = fs::File::create(path).map_err(|e| FormatError::io(path, e))?;
    file.write_all(&bytes).map_err(|e| FormatError::io(path, e))?;
    Ok(())
}

pub fn read_state(path: &Path) -> Result<FieldSet, FormatError> {
    let bytes = fs::read(path).map_err(|e| FormatError::io(path, e))?;
    decode_state(&bytes)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.bytes.len() < self.pos + n {
            return Err(FormatError::TruncatedHeader { offset: self.bytes.len() });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode_state(bytes: &[u8]) -> Result<FieldSet, FormatError> {
    let mut cur = Cursor { bytes, pos: 0 };
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(FormatError::BadMagic);
    }
    cur.pos = MAGIC.len();
    let version = u16::from_le_bytes(cur.take(2)?.try_into().unwrap());
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion { found: version });
    }
    let lat_count = cur.u32()? as usize;
    let lon_count = cur.u32()? as usize;
    let channel_offset = cur.pos;
    let channels = cur.u32()? as usize;
    if channels != CHANNEL_COUNT {
        return Err(FormatError::DimMismatch {
            offset: channel_offset,
            detail: format!("channel_count {channels}, expected {CHANNEL_COUNT}"),
        });
    }
    let seconds = i64::from_le_bytes(cur.take(8)?.try_into().unwrap());
    let valid_time = DateTime::from_timestamp(seconds, 0)
        .ok_or(FormatError::DimMismatch { offset: 22, detail: format!("valid_time {seconds} out of range") })?;
    let resolution = cur.u32()?;
    let grid = GridSpec::new(resolution, lat_count, lon_count)
        .map_err(|e| FormatError::DimMismatch { offset: 10, detail: e.to_string() })?;

    let catalog = VariableCatalog::standard();
    for channel in 0..channels {
        let offset = cur.pos;
        let len = cur.take(1)?[0] as usize;
        let name = cur.take(len)?;
        let expected = catalog.name(channel);
        if name != expected.as_bytes() {
            return Err(FormatError::CatalogMismatch {
                offset,
                channel,
                found: String::from_utf8_lossy(name).into_owned(),
                expected: expected.to_string(),
            });
        }
    }

    let payload_offset = cur.pos;
    let expected = 4 * channels * grid.points();
    let actual = bytes.len() - payload_offset;
    if actual < expected {
        return Err(FormatError::TruncatedPayload { offset: payload_offset, expected, actual });
    }
    if actual > expected {
        return Err(FormatError::DimMismatch {
            offset: payload_offset + expected,
            detail: format!("{} trailing bytes beyond declared {lat_count}x{lon_count} payload", actual - expected),
        });
    }
    let values =
        bytes[payload_offset..].chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect::<Vec<_>>();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(FormatError::NonFiniteState);
    }
    Ok(FieldSet::new(grid, valid_time, values)?)
}

/// One `name,mean,std` line per catalog variable, in catalog order.
pub fn format_stats(stats: &VariableStats) -> String {
    format_channel_stats(stats.channels())
}

/// Like [`format_stats`] but without the positive-std requirement, so a
/// degenerate channel can still be recorded.
pub fn format_channel_stats(channels: &[ChannelStats]) -> String {
    let catalog = VariableCatalog::standard();
    let mut out = String::new();
    for (c, s) in channels.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", catalog.name(c), s.mean, s.std));
    }
    out
}

pub fn write_stats(path: &Path, stats: &VariableStats) -> Result<(), FormatError> {
    write_channel_stats(path, stats.channels())
}

pub fn write_channel_stats(path: &Path, channels: &[ChannelStats]) -> Result<(), FormatError> {
    fs::write(path, format_channel_stats(channels)).map_err(|e| FormatError::io(path, e))
}

pub fn parse_stats(text: &str) -> Result<VariableStats, FormatError> {
    let catalog = VariableCatalog::standard();
    let mut slots: Vec<Option<ChannelStats>> = vec![None; catalog.len()];
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |detail: &str| FormatError::MalformedStats { line: line_no, detail: detail.to_string() };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [name, mean, std] = fields[..] else {
            return Err(malformed("expected name,mean,std"));
        };
        let c = catalog.index_of(name).ok_or_else(|| malformed(&format!("unknown variable {name:?}")))?;
        let mean: f64 = mean.parse().map_err(|_| malformed("bad mean"))?;
        let std: f64 = std.parse().map_err(|_| malformed("bad std"))?;
        if !mean.is_finite() || !std.is_finite() {
            return Err(malformed("non-finite value"));
        }
        if slots[c].is_some() {
            return Err(malformed(&format!("duplicate variable {name:?}")));
        }
        slots[c] = Some(ChannelStats { mean, std });
    }
    let missing: Vec<String> =
        slots.iter().enumerate().filter(|(_, s)| s.is_none()).map(|(c, _)| catalog.name(c).to_string()).collect();
    if !missing.is_empty() {
        return Err(FormatError::IncompleteStats { missing });
    }
    let channels: Vec<ChannelStats> = slots.into_iter().map(Option::unwrap).collect();
    if let Some(c) = channels.iter().position(|s| s.std <= 0.0) {
        return Err(FormatError::DegenerateStd { variable: catalog.name(c).to_string() });
    }
    Ok(VariableStats::new(channels).expect("validated above"))
}

pub fn read_stats(path: &Path) -> Result<VariableStats, FormatError> {
    let text = fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    parse_stats(&text)
}
