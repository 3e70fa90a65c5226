//! Mono PCM input: 16-bit WAV and raw little-endian f32 streams.

use std::fs;
use std::path::Path;

use crate::dsp::AudioBuffer;
use crate::error::{Error, Result};

fn chunk_u16(b: &[u8], o: usize) -> u16 {
    u16::from_le_bytes([b[o], b[o + 1]])
}

fn chunk_u32(b: &[u8], o: usize) -> u32 {
    u32::from_le_bytes([b[o], b[o + 1], b[o + 2], b[o + 3]])
}

/// Decode a RIFF/WAVE file holding mono 16-bit signed PCM.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::Format("not a RIFF/WAVE file".into()));
    }
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let len = chunk_u32(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| Error::Format("chunk runs past end of file".into()))?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(Error::Format("fmt chunk too short".into()));
                }
                fmt = Some((
                    chunk_u16(body, 0),
                    chunk_u16(body, 2),
                    chunk_u32(body, 4),
                    chunk_u16(body, 14),
                ));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word aligned
        pos = body_end + (len & 1);
    }
    let (format, channels, rate, bits) =
        fmt.ok_or_else(|| Error::Format("missing fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::Format("missing data chunk".into()))?;
    // 1 = PCM, 0xFFFE = extensible (assumed PCM subformat)
    if !(format == 1 || format == 0xFFFE) || bits != 16 {
        return Err(Error::Format(format!(
            "only 16-bit PCM is supported (format {format}, {bits} bits)"
        )));
    }
    if channels != 1 {
        return Err(Error::Format(format!(
            "expected mono audio, found {channels} channels"
        )));
    }
    let samples = data
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
        .collect();
    AudioBuffer::new(samples, rate)
}

/// Encode mono 16-bit PCM; samples are clamped to [-1, 1].
pub fn encode_wav(audio: &AudioBuffer) -> Vec<u8> {
    let data_len = (audio.len() * 2) as u32;
    let rate = audio.sample_rate();
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in audio.samples() {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decode raw little-endian IEEE-754 f32 samples at `sample_rate`.
pub fn decode_raw_f32(bytes: &[u8], sample_rate: u32) -> Result<AudioBuffer> {
    if !bytes.len().is_multiple_of(4) {
        return Err(Error::Format(format!(
            "raw f32 stream length {} is not a multiple of 4",
            bytes.len()
        )));
    }
    let samples = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    AudioBuffer::new(samples, sample_rate)
}

/// Load a `.wav` file, or any other extension as raw f32 at `raw_rate`.
pub fn load_audio(path: &Path, raw_rate: Option<u32>) -> Result<AudioBuffer> {
    let bytes = fs::read(path)?;
    let is_wav = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
    if is_wav {
        decode_wav(&bytes)
    } else {
        let rate = raw_rate.ok_or_else(|| {
            Error::invalid(format!(
                "{}: raw f32 input needs an explicit sample rate",
                path.display()
            ))
        })?;
        decode_raw_f32(&bytes, rate)
    }
}
