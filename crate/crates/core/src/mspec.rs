//! `MSPEC1` binary container for mel-spectrogram matrices.
//!
//! Layout (all integers little-endian, 40-byte header):
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 8    | magic `MSPEC1\0\0`            |
//! | 8      | 2    | format version (u16)          |
//! | 10     | 4    | sample rate (u32)             |
//! | 14     | 2    | mel bands (u16)               |
//! | 16     | 4    | hop in samples (u32)          |
//! | 20     | 4    | frame size (u32)              |
//! | 24     | 1    | compression (0 = dB, 1 = log) |
//! | 25     | 1    | reserved                      |
//! | 26     | 4    | frame count (u32)             |
//! | 30     | 1    | dtype (0 = f32)               |
//! | 31     | 9    | reserved                      |
//!
//! followed by `n_mels * n_frames` row-major values.

use std::io::{Read, Write};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::mel::{Compression, MelSpectrogram};

pub const MAGIC: [u8; 8] = *b"MSPEC1\0\0";
pub const HEADER_LEN: usize = 40;
pub const FORMAT_VERSION: u16 = 1;
pub const DTYPE_F32: u8 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MspecHeader {
    pub version: u16,
    pub sample_rate: u32,
    pub n_mels: u16,
    pub hop_samples: u32,
    pub frame_size: u32,
    pub compression: Compression,
    pub n_frames: u32,
    pub dtype: u8,
}

impl MspecHeader {
    pub fn for_spectrogram(spec: &MelSpectrogram) -> Result<Self> {
        let cfg = &spec.config;
        let narrow = |v: usize, what: &str| {
            u32::try_from(v).map_err(|_| Error::invalid(format!("{what} {v} does not fit in u32")))
        };
        Ok(Self {
            version: FORMAT_VERSION,
            sample_rate: cfg.sample_rate,
            n_mels: u16::try_from(spec.n_mels())
                .map_err(|_| Error::invalid("more than 65535 mel bands"))?,
            hop_samples: narrow(cfg.hop(), "hop")?,
            frame_size: narrow(cfg.frame_size, "frame size")?,
            compression: cfg.compression,
            n_frames: narrow(spec.n_frames(), "frame count")?,
            dtype: DTYPE_F32,
        })
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..8].copy_from_slice(&MAGIC);
        b[8..10].copy_from_slice(&self.version.to_le_bytes());
        b[10..14].copy_from_slice(&self.sample_rate.to_le_bytes());
        b[14..16].copy_from_slice(&self.n_mels.to_le_bytes());
        b[16..20].copy_from_slice(&self.hop_samples.to_le_bytes());
        b[20..24].copy_from_slice(&self.frame_size.to_le_bytes());
        b[24] = self.compression.code();
        b[26..30].copy_from_slice(&self.n_frames.to_le_bytes());
        b[30] = self.dtype;
        b
    }

    pub fn parse(b: &[u8; HEADER_LEN]) -> Result<Self> {
        if b[0..8] != MAGIC {
            return Err(Error::Format("bad MSPEC1 magic".into()));
        }
        let u16_at = |o: usize| u16::from_le_bytes([b[o], b[o + 1]]);
        let u32_at = |o: usize| u32::from_le_bytes([b[o], b[o + 1], b[o + 2], b[o + 3]]);
        let version = u16_at(8);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported MSPEC1 version {version}"
            )));
        }
        let compression = Compression::from_code(b[24])
            .ok_or_else(|| Error::Format(format!("unknown compression code {}", b[24])))?;
        if b[30] != DTYPE_F32 {
            return Err(Error::Format(format!("unsupported dtype {}", b[30])));
        }
        Ok(Self {
            version,
            sample_rate: u32_at(10),
            n_mels: u16_at(14),
            hop_samples: u32_at(16),
            frame_size: u32_at(20),
            compression,
            n_frames: u32_at(26),
            dtype: b[30],
        })
    }

    pub fn payload_len(&self) -> usize {
        self.n_mels as usize * self.n_frames as usize * 4
    }
}

/// Serialize `spec` as MSPEC1 (values narrowed to f32).
pub fn write_mspec<W: Write>(mut w: W, spec: &MelSpectrogram) -> Result<()> {
    let header = MspecHeader::for_spectrogram(spec)?;
    w.write_all(&header.to_bytes())?;
    let mut payload = Vec::with_capacity(header.payload_len());
    for v in spec.values.iter() {
        payload.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    w.write_all(&payload)?;
    Ok(())
}

pub fn encode_mspec(spec: &MelSpectrogram) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_mspec(&mut out, spec)?;
    Ok(out)
}

/// Read an MSPEC1 stream back into a header and an `n_mels x n_frames` matrix.
pub fn read_mspec<R: Read>(mut r: R) -> Result<(MspecHeader, Array2<f32>)> {
    let mut hb = [0u8; HEADER_LEN];
    r.read_exact(&mut hb)
        .map_err(|_| Error::Format("truncated MSPEC1 header".into()))?;
    let header = MspecHeader::parse(&hb)?;
    let mut payload = vec![0u8; header.payload_len()];
    r.read_exact(&mut payload)
        .map_err(|_| Error::Format("truncated MSPEC1 payload".into()))?;
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let shape = (header.n_mels as usize, header.n_frames as usize);
    let matrix = Array2::from_shape_vec(shape, values)
        .map_err(|e| Error::Format(format!("payload shape: {e}")))?;
    Ok((header, matrix))
}
