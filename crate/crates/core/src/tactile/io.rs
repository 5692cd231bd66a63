//! Frame ingestion and recording.
//!
//! Two on-disk forms are supported: a raw binary frame (little-endian `u32`
//! width and height followed by packed RGB bytes) and a directory of binary
//! PPM images indexed by a JSON-lines manifest.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{TactileError, TactileFrame};
use crate::finger::FingerId;

pub const MANIFEST_FILE: &str = "manifest.jsonl";

pub fn write_raw_frame<W: Write>(mut out: W, frame: &TactileFrame) -> Result<(), TactileError> {
    let w = u32::try_from(frame.width())
        .map_err(|_| TactileError::Malformed("width overflows u32".into()))?;
    let h = u32::try_from(frame.height())
        .map_err(|_| TactileError::Malformed("height overflows u32".into()))?;
    out.write_all(&w.to_le_bytes())?;
    out.write_all(&h.to_le_bytes())?;
    let bytes: Vec<u8> = frame.pixels().iter().flatten().copied().collect();
    out.write_all(&bytes)?;
    Ok(())
}

pub fn read_raw_frame<R: Read>(
    mut input: R,
    finger: FingerId,
    timestamp: f64,
) -> Result<TactileFrame, TactileError> {
    let mut header = [0u8; 8];
    input.read_exact(&mut header)?;
    let w = u32::from_le_bytes(header[0..4].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let len = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| TactileError::Malformed(format!("frame {w}x{h} too large")))?;
    let mut bytes = vec![0u8; len];
    input.read_exact(&mut bytes)?;
    let pixels = bytes.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    TactileFrame::new(finger, timestamp, w, h, pixels)
}

pub fn save_ppm(path: &Path, frame: &TactileFrame) -> Result<(), TactileError> {
    let bytes: Vec<u8> = frame.pixels().iter().flatten().copied().collect();
    let img = image::RgbImage::from_raw(frame.width() as u32, frame.height() as u32, bytes)
        .ok_or_else(|| TactileError::Malformed("pixel buffer size".into()))?;
    img.save_with_format(path, image::ImageFormat::Pnm)?;
    Ok(())
}

pub fn load_ppm(
    path: &Path,
    finger: FingerId,
    timestamp: f64,
) -> Result<TactileFrame, TactileError> {
    let img = image::ImageReader::open(path)?
        .with_guessed_format()?
        .decode()?
        .into_rgb8();
    let (w, h) = img.dimensions();
    let pixels = img.pixels().map(|p| p.0).collect();
    TactileFrame::new(finger, timestamp, w as usize, h as usize, pixels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    /// No-contact frame used to build the baseline.
    Baseline,
    Stream,
}

/// One line of a frame-directory manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub kind: FrameKind,
    pub finger: FingerId,
    pub t: f64,
    pub tick: u64,
    /// Path relative to the manifest's directory.
    pub path: String,
}

/// Writes frames as PPM files next to a JSON-lines manifest.
pub struct FrameRecorder {
    dir: PathBuf,
    manifest: BufWriter<File>,
    count: usize,
}

impl FrameRecorder {
    pub fn create(dir: &Path) -> Result<Self, TactileError> {
        fs::create_dir_all(dir)?;
        let manifest = BufWriter::new(File::create(dir.join(MANIFEST_FILE))?);
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
            count: 0,
        })
    }

    pub fn record(
        &mut self,
        kind: FrameKind,
        tick: u64,
        frame: &TactileFrame,
    ) -> Result<(), TactileError> {
        let prefix = match kind {
            FrameKind::Baseline => "base",
            FrameKind::Stream => "f",
        };
        let name = format!("{prefix}_{tick:06}_{}.ppm", frame.finger);
        save_ppm(&self.dir.join(&name), frame)?;
        let entry = ManifestEntry {
            kind,
            finger: frame.finger,
            t: frame.timestamp,
            tick,
            path: name,
        };
        serde_json::to_writer(&mut self.manifest, &entry)?;
        self.manifest.write_all(b"\n")?;
        self.count += 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn finish(mut self) -> Result<(), TactileError> {
        self.manifest.flush()?;
        Ok(())
    }
}

pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>, TactileError> {
    let reader = BufReader::new(File::open(dir.join(MANIFEST_FILE))?);
    let mut entries = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        entries.push(serde_json::from_str(&line)?);
    }
    Ok(entries)
}

pub fn load_entry(dir: &Path, entry: &ManifestEntry) -> Result<TactileFrame, TactileError> {
    load_ppm(&dir.join(&entry.path), entry.finger, entry.t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_frame() -> TactileFrame {
        let pixels = (0..12u8).map(|i| [i, i.wrapping_mul(7), 255 - i]).collect();
        TactileFrame::new(FingerId::Index, 0.5, 4, 3, pixels).unwrap()
    }

    #[test]
    fn raw_frame_layout() {
        let frame = sample_frame();
        let mut buf = Vec::new();
        write_raw_frame(&mut buf, &frame).unwrap();
        assert_eq!(&buf[..8], &[4, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(buf.len(), 8 + 36);
        let back = read_raw_frame(&buf[..], FingerId::Index, 0.5).unwrap();
        assert_eq!(back, frame);
    }

    #[test]
    fn truncated_raw_frame_fails() {
        let frame = sample_frame();
        let mut buf = Vec::new();
        write_raw_frame(&mut buf, &frame).unwrap();
        buf.pop();
        assert!(matches!(
            read_raw_frame(&buf[..], FingerId::Index, 0.0),
            Err(TactileError::Io(_))
        ));
    }

    #[test]
    fn recorder_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut rec = FrameRecorder::create(dir.path()).unwrap();
        let frame = sample_frame();
        rec.record(FrameKind::Baseline, 0, &frame).unwrap();
        rec.record(FrameKind::Stream, 1, &frame).unwrap();
        assert_eq!(rec.len(), 2);
        rec.finish().unwrap();

        let entries = read_manifest(dir.path()).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].kind, FrameKind::Baseline);
        assert_eq!(entries[1].path, "f_000001_index.ppm");
        let loaded = load_entry(dir.path(), &entries[1]).unwrap();
        assert_eq!(loaded, frame);
    }
}
