//! Rational-ratio resampling with a Kaiser-windowed sinc polyphase filter.

use crate::dsp::AudioBuffer;
use crate::error::{Error, Result};

/// Largest numerator or denominator accepted for the reduced rate ratio.
pub const MAX_RATIO_TERM: u64 = 1000;
/// Filter taps evaluated per output sample (per polyphase branch).
pub const TAPS_PER_PHASE: usize = 64;
/// Passband edge as a fraction of the lower of the two Nyquist rates.
pub const CUTOFF_FRACTION: f64 = 0.9;
const KAISER_BETA: f64 = 8.6;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Reduced `(up, down)` factors for going from `from` Hz to `to` Hz.
pub fn rational_ratio(from: u32, to: u32) -> Result<(u64, u64)> {
    if from == 0 || to == 0 {
        return Err(Error::invalid("sample rates must be positive"));
    }
    let g = gcd(from as u64, to as u64);
    let (p, q) = (to as u64 / g, from as u64 / g);
    if p > MAX_RATIO_TERM || q > MAX_RATIO_TERM {
        return Err(Error::UnsupportedRatio {
            p,
            q,
            limit: MAX_RATIO_TERM,
        });
    }
    Ok((p, q))
}

// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Polyphase coefficient table: `up` branches of `TAPS_PER_PHASE` taps each,
/// every branch normalized to unit DC gain.
struct PolyphaseBank {
    up: usize,
    taps: Vec<f64>,
}

impl PolyphaseBank {
    fn new(up: u64, down: u64) -> Self {
        let up = up as usize;
        let half = (TAPS_PER_PHASE / 2) as f64;
        // cutoff in cycles per input sample
        let fc = 0.5 * CUTOFF_FRACTION * (up as f64 / down as f64).min(1.0);
        let norm = bessel_i0(KAISER_BETA);
        let mut taps = Vec::with_capacity(up * TAPS_PER_PHASE);
        for phase in 0..up {
            let frac = phase as f64 / up as f64;
            let start = taps.len();
            for j in 0..TAPS_PER_PHASE {
                let d = (j as f64 - (half - 1.0)) - frac;
                let r = d / half;
                let w = if r.abs() >= 1.0 {
                    0.0
                } else {
                    bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / norm
                };
                taps.push(2.0 * fc * sinc(2.0 * fc * d) * w);
            }
            let sum: f64 = taps[start..].iter().sum();
            for t in &mut taps[start..] {
                *t /= sum;
            }
        }
        Self { up, taps }
    }

    fn branch(&self, phase: usize) -> &[f64] {
        debug_assert!(phase < self.up);
        &self.taps[phase * TAPS_PER_PHASE..(phase + 1) * TAPS_PER_PHASE]
    }
}

/// Resample `audio` to `target_rate`. Output length is `round(len * p / q)`;
/// samples outside the input are treated as zero.
pub fn resample_rational(audio: &AudioBuffer, target_rate: u32) -> Result<AudioBuffer> {
    let (p, q) = rational_ratio(audio.sample_rate(), target_rate)?;
    if p == q {
        return Ok(audio.clone());
    }
    let bank = PolyphaseBank::new(p, q);
    let input = audio.samples();
    let n_in = input.len() as u64;
    let n_out = ((n_in * p) as f64 / q as f64).round() as u64;
    let lead = (TAPS_PER_PHASE / 2 - 1) as i64;

    let out = (0..n_out)
        .map(|n| {
            let pos = n * q;
            let base = (pos / p) as i64;
            let taps = bank.branch((pos % p) as usize);
            taps.iter()
                .enumerate()
                .filter_map(|(j, h)| {
                    let i = base - lead + j as i64;
                    (i >= 0 && (i as u64) < n_in).then(|| h * input[i as usize])
                })
                .sum::<f64>()
        })
        .collect();
    AudioBuffer::new(out, target_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::{num_complex::Complex, FftPlanner};
    use std::f64::consts::PI;

    #[test]
    fn ratio_reduction() {
        assert_eq!(rational_ratio(16000, 12000).unwrap(), (3, 4));
        assert_eq!(rational_ratio(44100, 12000).unwrap(), (40, 147));
        assert_eq!(rational_ratio(22050, 16000).unwrap(), (320, 441));
        assert!(matches!(
            rational_ratio(44101, 12000),
            Err(Error::UnsupportedRatio { .. })
        ));
    }

    #[test]
    fn bessel_known_values() {
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-13);
        assert!((bessel_i0(8.6) - 750.461_159_563_165_9).abs() < 1e-9);
    }

    #[test]
    fn dc_is_preserved() {
        let audio = AudioBuffer::new(vec![0.5; 16000], 16000).unwrap();
        let out = resample_rational(&audio, 12000).unwrap();
        assert_eq!(out.sample_rate(), 12000);
        assert_eq!(out.len(), 12000);
        let edge = TAPS_PER_PHASE;
        for (i, v) in out.samples()[edge..out.len() - edge].iter().enumerate() {
            assert!((v - 0.5).abs() < 1e-6, "sample {}: {v}", i + edge);
        }
    }

    #[test]
    fn identity_rate() {
        let x: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.1).sin()).collect();
        let audio = AudioBuffer::new(x.clone(), 16000).unwrap();
        let out = resample_rational(&audio, 16000).unwrap();
        assert_eq!(out.len(), x.len());
        let dev = out
            .samples()
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-9);
    }

    #[test]
    fn output_length_rounds() {
        for (len, from, to, want) in [
            (1001usize, 16000u32, 12000u32, 751usize),
            (10, 12000, 16000, 13),
            (7, 44100, 12000, 2),
        ] {
            let audio = AudioBuffer::new(vec![0.1; len], from).unwrap();
            assert_eq!(resample_rational(&audio, to).unwrap().len(), want);
        }
    }

    #[test]
    fn sine_keeps_its_frequency() {
        let x: Vec<f64> = (0..16000)
            .map(|i| (2.0 * PI * 440.0 * i as f64 / 16000.0).sin())
            .collect();
        let out = resample_rational(&AudioBuffer::new(x, 16000).unwrap(), 12000).unwrap();
        let n = out.len();
        let mut buf: Vec<Complex<f64>> = out
            .samples()
            .iter()
            .map(|&v| Complex::new(v, 0.0))
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let peak = buf[..n / 2]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0;
        // 1 s of output: bin index == Hz
        assert_eq!(peak, 440);
    }

    #[test]
    fn upsampling_interpolates_smoothly() {
        let x: Vec<f64> = (0..1200)
            .map(|i| (2.0 * PI * 300.0 * i as f64 / 12000.0).sin())
            .collect();
        let out = resample_rational(&AudioBuffer::new(x, 12000).unwrap(), 16000).unwrap();
        for (i, v) in out.samples().iter().enumerate().skip(100).take(1300) {
            let ideal = (2.0 * PI * 300.0 * i as f64 / 16000.0).sin();
            assert!((v - ideal).abs() < 1e-3, "sample {i}");
        }
    }
}
