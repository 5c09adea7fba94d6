//! Binary state checkpoints.
//!
//! Layout: 8-byte magic, u32 format version, 16-byte config hash (ASCII
//! hex), f64 simulation time, u64 value count, then the field values as
//! raw little-endian f64. Everything after the magic is little-endian.
//! The config hash ties a checkpoint to the exact experiment that wrote
//! it; readers decide whether a mismatch is fatal.

use std::fs;
use std::path::Path;

use crate::{io_err, HarnessError, HarnessResult};

pub const MAGIC: [u8; 8] = *b"SHELABCK";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 16 + 8 + 8;

/// A decoded checkpoint: the field state at one instant plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_hash: String,
    pub time: f64,
    pub values: Vec<f64>,
}

/// Serialize a field state. `config_hash` must be the 16-hex-char run
/// hash; values round-trip bit-exactly.
pub fn encode(config_hash: &str, time: f64, values: &[f64]) -> Vec<u8> {
    assert_eq!(config_hash.len(), 16, "config hash is 16 hex chars");
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * values.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(config_hash.as_bytes());
    out.extend_from_slice(&time.to_le_bytes());
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn malformed(path: &Path, message: impl Into<String>) -> HarnessError {
    HarnessError::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Decode bytes produced by [`encode`]. `origin` names the source in
/// error messages.
pub fn decode(bytes: &[u8], origin: &Path) -> HarnessResult<Checkpoint> {
    if bytes.len() < HEADER_LEN {
        return Err(malformed(
            origin,
            format!("checkpoint truncated: {} bytes < {HEADER_LEN}-byte header", bytes.len()),
        ));
    }
    if bytes[..8] != MAGIC {
        return Err(malformed(origin, "not a checkpoint (bad magic)"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(malformed(
            origin,
            format!("unsupported checkpoint version {version} (expected {VERSION})"),
        ));
    }
    let config_hash = std::str::from_utf8(&bytes[12..28])
        .map_err(|_| malformed(origin, "config hash is not ASCII"))?
        .to_string();
    let time = f64::from_le_bytes(bytes[28..36].try_into().unwrap());
    let count = u64::from_le_bytes(bytes[36..44].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * count {
        return Err(malformed(
            origin,
            format!("value count {count} does not match {} payload bytes", body.len()),
        ));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Checkpoint { config_hash, time, values })
}

pub fn write(path: &Path, config_hash: &str, time: f64, values: &[f64]) -> HarnessResult<()> {
    fs::write(path, encode(config_hash, time, values))
        .map_err(io_err(format!("writing {}", path.display())))
}

pub fn read(path: &Path) -> HarnessResult<Checkpoint> {
    let bytes = fs::read(path).map_err(io_err(format!("reading {}", path.display())))?;
    decode(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HASH: &str = "0123456789abcdef";

    #[test]
    fn round_trips_bit_exactly() {
        let values = vec![0.0, -0.0, 1.5, f64::MIN_POSITIVE, 1e300, -2.25e-308];
        let bytes = encode(HASH, 0.251234, &values);
        let ckpt = decode(&bytes, Path::new("mem")).unwrap();
        assert_eq!(ckpt.config_hash, HASH);
        assert_eq!(ckpt.time, 0.251234);
        assert_eq!(ckpt.values.len(), values.len());
        for (a, b) in ckpt.values.iter().zip(&values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.ckpt");
        let values: Vec<f64> = (0..1024).map(|i| (i as f64).sin()).collect();
        write(&path, HASH, 1.0, &values).unwrap();
        let ckpt = read(&path).unwrap();
        assert_eq!(ckpt.values, values);
        assert_eq!(ckpt.time, 1.0);
    }

    #[test]
    fn rejects_malformed_input() {
        let good = encode(HASH, 1.0, &[1.0, 2.0]);

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        let err = decode(&bad_magic, Path::new("m")).unwrap_err();
        assert!(err.to_string().contains("magic"), "{err}");

        let mut bad_version = good.clone();
        bad_version[8] = 9;
        let err = decode(&bad_version, Path::new("m")).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");

        let err = decode(&good[..20], Path::new("m")).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");

        let err = decode(&good[..good.len() - 8], Path::new("m")).unwrap_err();
        assert!(err.to_string().contains("count"), "{err}");

        // decode failures are validation errors (exit 2), not IO
        assert_eq!(decode(&bad_magic, Path::new("m")).unwrap_err().exit_code(), 2);
    }
}
