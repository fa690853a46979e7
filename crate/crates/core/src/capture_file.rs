//! Binary capture file.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "A2GS" | version: u32 | header_len: u64 | header: JSON (header_len bytes) | payload
//! ```
//!
//! The payload holds the snapshots in time order, each port-major with
//! tones innermost, every value as two `f32` (real, imaginary).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::capture::{CaptureRecord, RecordType};
use crate::channel::TxPose;
use crate::error::{Error, Result};
use crate::waveform::TonePlan;

pub const MAGIC: [u8; 4] = *b"A2GS";
pub const FORMAT_VERSION: u32 = 1;
const MAX_HEADER_LEN: u64 = 1 << 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotMeta {
    pub snapshot_index: u64,
    pub timestamp: f64,
    pub tx_pose: Option<TxPose>,
    pub snr_db: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileHeader {
    pub record_type: RecordType,
    pub config_hash: String,
    pub geometry_hash: String,
    pub snapshot_count: usize,
    pub port_count: usize,
    pub tone_count: usize,
    pub tone_plan: TonePlan,
    pub snapshots: Vec<SnapshotMeta>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaptureFile {
    pub header: FileHeader,
    pub records: Vec<CaptureRecord>,
}

impl CaptureFile {
    /// Bundles records of one type. Values are stored as `f32` on write.
    pub fn new(
        records: Vec<CaptureRecord>,
        tone_plan: TonePlan,
        config_hash: String,
        geometry_hash: String,
    ) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::Format("a capture file needs at least one snapshot".into()))?;
        let (record_type, ports, tones) = (first.record_type, first.port_count, first.tone_count);
        if tones != tone_plan.tone_count {
            return Err(Error::DimensionMismatch(format!(
                "records have {tones} tones, plan has {}",
                tone_plan.tone_count
            )));
        }
        for r in &records {
            r.check_shape()?;
            if r.record_type != record_type {
                return Err(Error::Format("records of mixed type".into()));
            }
            if r.port_count != ports || r.tone_count != tones {
                return Err(Error::DimensionMismatch(format!(
                    "snapshot {} is {} x {}, file is {ports} x {tones}",
                    r.snapshot_index, r.port_count, r.tone_count
                )));
            }
        }
        let header = FileHeader {
            record_type,
            config_hash,
            geometry_hash,
            snapshot_count: records.len(),
            port_count: ports,
            tone_count: tones,
            tone_plan,
            snapshots: records
                .iter()
                .map(|r| SnapshotMeta {
                    snapshot_index: r.snapshot_index,
                    timestamp: r.timestamp,
                    tx_pose: r.tx_pose,
                    snr_db: r.snr_db,
                    seed: r.seed,
                })
                .collect(),
        };
        Ok(CaptureFile { header, records })
    }

    pub fn record_type(&self) -> RecordType {
        self.header.record_type
    }

    pub fn payload_len(&self) -> u64 {
        (self.header.snapshot_count * self.header.port_count * self.header.tone_count * 8) as u64
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::to_vec(&self.header).map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(&MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(header.len() as u64).to_le_bytes())?;
        w.write_all(&header)?;
        let mut buf = Vec::with_capacity(self.header.port_count * self.header.tone_count * 8);
        for r in &self.records {
            buf.clear();
            for v in &r.tf {
                buf.extend_from_slice(&(v.re as f32).to_le_bytes());
                buf.extend_from_slice(&(v.im as f32).to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic, "magic")?;
        if magic != MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?}")));
        }
        let mut word = [0u8; 4];
        read_exact(&mut r, &mut word, "version")?;
        let version = u32::from_le_bytes(word);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let mut len = [0u8; 8];
        read_exact(&mut r, &mut len, "header length")?;
        let len = u64::from_le_bytes(len);
        if len > MAX_HEADER_LEN {
            return Err(Error::Format(format!("header length {len} is implausible")));
        }
        let mut text = vec![0u8; len as usize];
        read_exact(&mut r, &mut text, "header")?;
        let header: FileHeader = serde_json::from_slice(&text).map_err(|e| Error::Format(format!("header: {e}")))?;
        if header.snapshots.len() != header.snapshot_count {
            return Err(Error::Format(format!(
                "header lists {} snapshots but declares {}",
                header.snapshots.len(),
                header.snapshot_count
            )));
        }
        if header.tone_plan.tone_count != header.tone_count {
            return Err(Error::Format("tone plan disagrees with tone count".into()));
        }
        let values = header.port_count * header.tone_count;
        let mut buf = vec![0u8; values * 8];
        let mut records = Vec::with_capacity(header.snapshot_count);
        for meta in &header.snapshots {
            read_exact(&mut r, &mut buf, "payload")?;
            let tf = buf
                .chunks_exact(8)
                .map(|c| {
                    let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                    let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
                    Complex64::new(re as f64, im as f64)
                })
                .collect();
            records.push(CaptureRecord {
                record_type: header.record_type,
                snapshot_index: meta.snapshot_index,
                timestamp: meta.timestamp,
                tx_pose: meta.tx_pose,
                snr_db: meta.snr_db,
                seed: meta.seed,
                port_count: header.port_count,
                tone_count: header.tone_count,
                tf,
            });
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        Ok(CaptureFile { header, records })
    }

    /// Compares the embedded hashes with the expected ones. Mismatches are
    /// returned as warnings, or as an error when `strict`.
    pub fn check_hashes(
        &self,
        config_hash: Option<&str>,
        geometry_hash: Option<&str>,
        strict: bool,
    ) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        for (what, expected, found) in [
            ("config", config_hash, &self.header.config_hash),
            ("geometry", geometry_hash, &self.header.geometry_hash),
        ] {
            let Some(expected) = expected else { continue };
            if expected != found {
                let err = Error::HashMismatch {
                    what,
                    expected: expected.to_string(),
                    found: found.clone(),
                };
                if strict {
                    return Err(err);
                }
                log::warn!("{err}");
                warnings.push(err.to_string());
            }
        }
        Ok(warnings)
    }

    /// Rounds every value to the stored `f32` precision.
    pub fn quantized(mut self) -> Self {
        for r in &mut self.records {
            for v in &mut r.tf {
                *v = Complex64::new(v.re as f32 as f64, v.im as f32 as f64);
            }
        }
        self
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated file while reading {what}")),
        _ => Error::Io(e),
    })
}

pub fn write_capture(path: impl AsRef<Path>, file: &CaptureFile) -> Result<()> {
    file.write_to(BufWriter::new(File::create(path)?))
}

pub fn read_capture(path: impl AsRef<Path>) -> Result<CaptureFile> {
    CaptureFile::read_from(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::make_tone_plan;

    fn record(index: u64, ports: usize, tones: usize) -> CaptureRecord {
        CaptureRecord {
            record_type: RecordType::Measurement,
            snapshot_index: index,
            timestamp: index as f64 * 0.0064,
            tx_pose: Some(TxPose {
                position: [12.0, 0.1, 1.8],
                axis: [0.0, 0.0, 1.0],
            }),
            snr_db: Some(30.0),
            seed: 9,
            port_count: ports,
            tone_count: tones,
            tf: (0..ports * tones)
                .map(|i| Complex64::new(i as f64 * 0.25 - 3.0, -(i as f64) / 8.0))
                .collect(),
        }
    }

    fn file(snapshots: u64, ports: usize, tones: usize) -> CaptureFile {
        let recs = (0..snapshots).map(|i| record(i, ports, tones)).collect();
        CaptureFile::new(
            recs,
            make_tone_plan(3.5e9, 20e3, tones).unwrap(),
            "c".into(),
            "g".into(),
        )
        .unwrap()
    }

    fn bytes(f: &CaptureFile) -> Vec<u8> {
        let mut out = Vec::new();
        f.write_to(&mut out).unwrap();
        out
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let f = file(3, 4, 5);
        let b = bytes(&f);
        let back = CaptureFile::read_from(&b[..]).unwrap();
        assert_eq!(back, f);
        assert_eq!(bytes(&back), b);
    }

    #[test]
    fn full_size_payload() {
        let f = file(1, 128, 1841);
        assert_eq!(f.payload_len(), 1_885_184);
        let b = bytes(&f);
        let header_len = u64::from_le_bytes(b[8..16].try_into().unwrap()) as usize;
        assert_eq!(b.len(), 16 + header_len + 1_885_184);
    }

    #[test]
    fn corrupt_magic_and_version() {
        let mut b = bytes(&file(1, 2, 2));
        b[0] = b'X';
        assert!(matches!(CaptureFile::read_from(&b[..]), Err(Error::Format(_))));
        let mut b = bytes(&file(1, 2, 2));
        b[4] = 9;
        assert!(matches!(CaptureFile::read_from(&b[..]), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_and_trailing() {
        let b = bytes(&file(2, 2, 3));
        assert!(matches!(
            CaptureFile::read_from(&b[..b.len() - 1]),
            Err(Error::Format(_))
        ));
        let mut extra = b.clone();
        extra.push(0);
        assert!(matches!(CaptureFile::read_from(&extra[..]), Err(Error::Format(_))));
    }

    #[test]
    fn hash_checks() {
        let f = file(1, 1, 2);
        assert!(f.check_hashes(Some("c"), Some("g"), true).unwrap().is_empty());
        assert_eq!(f.check_hashes(Some("x"), None, false).unwrap().len(), 1);
        assert!(matches!(
            f.check_hashes(Some("x"), None, true),
            Err(Error::HashMismatch { what: "config", .. })
        ));
    }

    #[test]
    fn mixed_records_rejected() {
        let mut a = record(0, 2, 2);
        let b = record(1, 2, 2);
        a.record_type = RecordType::BackToBack;
        let plan = make_tone_plan(3.5e9, 20e3, 2).unwrap();
        assert!(CaptureFile::new(vec![a, b], plan, String::new(), String::new()).is_err());
        assert!(CaptureFile::new(vec![record(0, 2, 3)], plan, String::new(), String::new()).is_err());
    }

    #[test]
    fn quantized_values_survive() {
        let mut f = file(1, 1, 2);
        f.records[0].tf[0] = Complex64::new(0.1, 1e-30);
        let q = f.clone().quantized();
        assert_eq!(CaptureFile::read_from(&bytes(&f)[..]).unwrap(), q);
    }
}
