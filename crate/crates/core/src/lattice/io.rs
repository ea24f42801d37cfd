use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Grid, SampledField};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"ANLP";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 32;

/// JSON sidecar written next to every binary field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDescriptor {
    pub format: String,
    pub version: u32,
    pub n: usize,
    pub size: usize,
    pub period: f64,
    pub count: u64,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn encode_field(field: &SampledField) -> Vec<u8> {
    let g = field.grid();
    let mut buf = Vec::with_capacity(HEADER_LEN + 16 * field.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(g.n() as u32).to_le_bytes());
    buf.extend_from_slice(&(g.size() as u32).to_le_bytes());
    buf.extend_from_slice(&g.period().to_le_bytes());
    buf.extend_from_slice(&(field.len() as u64).to_le_bytes());
    for v in field.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    buf
}

pub fn decode_field(bytes: &[u8]) -> Result<SampledField> {
    if bytes.len() < HEADER_LEN || &bytes[0..4] != MAGIC {
        return Err(Error::Format("missing ANLP header".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = u32_at(8) as usize;
    let size = u32_at(12) as usize;
    let period = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let count = u64::from_le_bytes(bytes[24..32].try_into().unwrap()) as usize;
    let grid = Grid::new(n, size, period)?;
    if count != grid.len() || bytes.len() != HEADER_LEN + 16 * count {
        return Err(Error::Format("sample count does not match header".into()));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    SampledField::new(grid, values)
}

/// Writes the binary field to `path` and its descriptor to `path.json`.
pub fn write_field(path: &Path, field: &SampledField) -> Result<()> {
    fs::write(path, encode_field(field))?;
    let g = field.grid();
    let desc = FieldDescriptor {
        format: "anlp-field".into(),
        version: VERSION,
        n: g.n(),
        size: g.size(),
        period: g.period(),
        count: field.len() as u64,
    };
    let json = serde_json::to_string_pretty(&desc).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(sidecar_path(path), json)?;
    Ok(())
}

/// Reads a binary field; the sidecar, when present, must agree with the header.
pub fn read_field(path: &Path) -> Result<SampledField> {
    let field = decode_field(&fs::read(path)?)?;
    let side = sidecar_path(path);
    if side.exists() {
        let desc: FieldDescriptor = serde_json::from_str(&fs::read_to_string(side)?)
            .map_err(|e| Error::Format(e.to_string()))?;
        let g = field.grid();
        if desc.n != g.n() || desc.size != g.size() || desc.period != g.period() {
            return Err(Error::Format("sidecar disagrees with binary header".into()));
        }
    }
    Ok(field)
}
