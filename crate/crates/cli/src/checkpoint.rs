//! JSON checkpoints: `{format_version, checksum, payload}` where the checksum
//! is the SHA-256 of the compact payload serialization with sorted keys.

use std::path::Path;

use forge_core::{ForgedState, IterationRecord};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    /// Identifies the model and cut layout the state belongs to.
    pub run_key: String,
    pub state: ForgedState,
    pub records: Vec<IterationRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Document {
    format_version: u32,
    checksum: String,
    payload: serde_json::Value,
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn corrupt(e: serde_json::Error) -> CliError {
    CliError::CheckpointCorrupted(e.to_string())
}

/// Compact text of a JSON value; keys come out sorted.
fn canonical(v: &serde_json::Value) -> Result<String> {
    serde_json::to_string(v).map_err(corrupt)
}

pub fn to_string(p: &Payload) -> Result<String> {
    let payload = serde_json::to_value(p).map_err(corrupt)?;
    let doc = Document {
        format_version: FORMAT_VERSION,
        checksum: digest(canonical(&payload)?.as_bytes()),
        payload,
    };
    let mut s = serde_json::to_string_pretty(&doc).map_err(corrupt)?;
    s.push('\n');
    Ok(s)
}

pub fn from_str(text: &str) -> Result<Payload> {
    let doc: Document = serde_json::from_str(text).map_err(corrupt)?;
    if doc.format_version != FORMAT_VERSION {
        return Err(CliError::CheckpointVersion {
            found: doc.format_version,
            expected: FORMAT_VERSION,
        });
    }
    if digest(canonical(&doc.payload)?.as_bytes()) != doc.checksum {
        return Err(CliError::CheckpointCorrupted("checksum mismatch".into()));
    }
    serde_json::from_value(doc.payload).map_err(corrupt)
}

/// Writes through a temporary file so a crash never leaves half a checkpoint.
pub fn save(p: &Payload, path: &Path) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, to_string(p)?)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Payload> {
    from_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use forge_core::fermion::build_fh;
    use forge_core::forge::single_block;
    use forge_core::SectorSpec;

    fn payload() -> Payload {
        let h = build_fh(2, 1.0, 1.0, 1.0).unwrap();
        Payload {
            run_key: "dimer".into(),
            state: single_block(&h, &SectorSpec::new(1, 1), None).unwrap(),
            records: Vec::new(),
        }
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let s = to_string(&payload()).unwrap();
        let back = from_str(&s).unwrap();
        assert_eq!(back, payload());
        assert_eq!(to_string(&back).unwrap(), s);
    }

    #[test]
    fn truncated_file_fails_checksum_or_parse() {
        let s = to_string(&payload()).unwrap();
        let cut = &s[..s.len() / 2];
        assert!(matches!(from_str(cut), Err(CliError::CheckpointCorrupted(_))));
    }

    #[test]
    fn tampered_payload_detected() {
        let s = to_string(&payload()).unwrap().replace("\"dimer\"", "\"dimmer\"");
        assert!(matches!(from_str(&s), Err(CliError::CheckpointCorrupted(_))));
    }

    #[test]
    fn version_mismatch() {
        let s = to_string(&payload())
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 7");
        assert!(matches!(
            from_str(&s),
            Err(CliError::CheckpointVersion { found: 7, .. })
        ));
    }
}
