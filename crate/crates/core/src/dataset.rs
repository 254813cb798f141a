//! Canonical dataset format: a JSON manifest plus flat little-endian `f32` payloads.
//!
//! Each entry's frames are laid out T-major, then joint, then coordinate, and
//! start at byte `offset` of `payload_file` (resolved relative to the manifest).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::{LabeledSample, SkeletonSequence, COORD_DIM, DEFAULT_FRAME_RATE};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub num_samples: usize,
    pub joint_count: usize,
    pub coord_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_rate: Option<f64>,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub subject: u32,
    pub category: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub payload_file: String,
    /// Byte offset into the payload file.
    pub offset: u64,
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    if manifest.coord_dim != COORD_DIM {
        return Err(Error::InvalidInput(format!(
            "{}: coord_dim must be 3, got {}",
            path.display(),
            manifest.coord_dim
        )));
    }
    if manifest.num_samples != manifest.entries.len() {
        return Err(Error::InvalidInput(format!(
            "{}: num_samples={} but {} entries listed",
            path.display(),
            manifest.num_samples,
            manifest.entries.len()
        )));
    }
    Ok(manifest)
}

/// Load every sample in manifest order.
pub fn load_dataset(manifest_path: &Path) -> Result<Vec<LabeledSample>> {
    let manifest = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let frame_rate = manifest.frame_rate.unwrap_or(DEFAULT_FRAME_RATE);
    let mut payloads: BTreeMap<&str, Vec<u8>> = BTreeMap::new();
    let mut samples = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        if !payloads.contains_key(entry.payload_file.as_str()) {
            let path = base.join(&entry.payload_file);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            payloads.insert(entry.payload_file.as_str(), bytes);
        }
        let bytes = &payloads[entry.payload_file.as_str()];
        let count = entry.t * manifest.joint_count * COORD_DIM;
        let start = usize::try_from(entry.offset).unwrap_or(usize::MAX);
        let available = bytes.len().saturating_sub(start) / 4;
        // A payload is matched when this entry's block ends exactly where the
        // next one starts, or at the end of a file it owns alone.
        let end = next_offset(&manifest, entry).unwrap_or(bytes.len() as u64);
        let declared_span = end.saturating_sub(entry.offset) as usize / 4;
        if available < count || declared_span != count {
            return Err(Error::ShapeMismatch {
                id: entry.id.clone(),
                expected: count,
                found: declared_span.min(available),
            });
        }
        let data: Vec<f64> = bytes[start..start + count * 4]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let per_frame = manifest.joint_count * COORD_DIM;
            return Err(Error::NonFinite {
                id: entry.id.clone(),
                frame: pos / per_frame,
                joint: (pos % per_frame) / COORD_DIM,
            });
        }
        let sequence = SkeletonSequence::from_flat(entry.t, manifest.joint_count, data, frame_rate)
            .map_err(|e| match e {
                Error::ShapeMismatch { expected, found, .. } => Error::ShapeMismatch {
                    id: entry.id.clone(),
                    expected,
                    found,
                },
                other => Error::InvalidInput(format!("sample {}: {other}", entry.id)),
            })?;
        samples.push(LabeledSample {
            sequence,
            category: entry.category,
            subject_id: entry.subject,
            video_id: entry.id.clone(),
        });
    }
    Ok(samples)
}

/// Smallest offset in the same payload file that lies beyond `entry`'s start.
fn next_offset(manifest: &Manifest, entry: &ManifestEntry) -> Option<u64> {
    manifest
        .entries
        .iter()
        .filter(|e| e.payload_file == entry.payload_file && e.offset > entry.offset)
        .map(|e| e.offset)
        .min()
}

/// Write `samples` as `<manifest_path>` plus a sibling `<stem>.bin` payload.
///
/// Coordinates are narrowed to `f32`; values already representable in `f32`
/// round-trip bit-exactly.
pub fn write_dataset(manifest_path: &Path, samples: &[LabeledSample]) -> Result<PathBuf> {
    let joint_count = match samples.first() {
        Some(s) => s.sequence.num_joints(),
        None => 0,
    };
    if let Some(bad) = samples.iter().find(|s| s.sequence.num_joints() != joint_count) {
        return Err(Error::InvalidInput(format!(
            "sample {} has {} joints, dataset uses {joint_count}",
            bad.video_id,
            bad.sequence.num_joints()
        )));
    }
    let stem = manifest_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset");
    let payload_name = format!("{stem}.bin");
    let payload_path = manifest_path.with_file_name(&payload_name);

    let mut payload = Vec::new();
    let mut entries = Vec::with_capacity(samples.len());
    for s in samples {
        let offset = payload.len() as u64;
        for v in s.sequence.frames().iter() {
            payload.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        entries.push(ManifestEntry {
            id: s.video_id.clone(),
            subject: s.subject_id,
            category: s.category,
            t: s.sequence.num_frames(),
            payload_file: payload_name.clone(),
            offset,
        });
    }
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        num_samples: samples.len(),
        joint_count,
        coord_dim: COORD_DIM,
        frame_rate: samples.first().map(|s| s.sequence.frame_rate()),
        entries,
    };
    if let Some(parent) = manifest_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(&payload_path, &payload).map_err(|e| Error::io(&payload_path, e))?;
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(manifest_path, e))?;
    fs::write(manifest_path, text).map_err(|e| Error::io(manifest_path, e))?;
    Ok(payload_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(id: &str, t: usize, n: usize, fill: f32) -> LabeledSample {
        let data = (0..t * n * 3).map(|i| (fill + i as f32 * 0.25) as f64).collect();
        LabeledSample {
            sequence: SkeletonSequence::from_flat(t, n, data, 30.0).unwrap(),
            category: 1,
            subject_id: 4,
            video_id: id.to_string(),
        }
    }

    #[test]
    fn empty_manifest_loads_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.json");
        write_dataset(&path, &[]).unwrap();
        assert!(load_dataset(&path).unwrap().is_empty());
    }

    #[test]
    fn round_trip_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.json");
        let samples = vec![sample("a", 4, 3, 0.5), sample("b", 6, 3, -2.0)];
        write_dataset(&path, &samples).unwrap();
        assert_eq!(load_dataset(&path).unwrap(), samples);
    }

    #[test]
    fn header_payload_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.json");
        let samples = vec![sample("a", 15, 15, 0.0)];
        write_dataset(&path, &samples).unwrap();
        let mut manifest = read_manifest(&path).unwrap();
        manifest.entries[0].t = 16;
        fs::write(&path, serde_json::to_string(&manifest).unwrap()).unwrap();
        let err = load_dataset(&path).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { ref id, expected: 720, found: 675 } if id == "a"), "{err}");
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_dataset(Path::new("/nonexistent/d.json")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn non_finite_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.json");
        let payload = write_dataset(&path, &[sample("a", 2, 1, 0.0)]).unwrap();
        let mut bytes = fs::read(&payload).unwrap();
        bytes[12..16].copy_from_slice(&f32::INFINITY.to_le_bytes());
        fs::write(&payload, bytes).unwrap();
        assert!(matches!(
            load_dataset(&path),
            Err(Error::NonFinite { frame: 1, joint: 0, .. })
        ));
    }
}
