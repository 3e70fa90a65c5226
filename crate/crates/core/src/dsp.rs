//! Short-time spectral analysis: windowing, framing and power spectra.

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mel::frame_count;

/// Mono PCM signal at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PaddingMode {
    /// Frames are centred on `t * hop`; the signal is reflected at both ends.
    #[default]
    CenterReflect,
    /// Frames start at `t * hop` and never run past the end of the signal.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameGrid {
    pub frame_size: usize,
    pub hop: usize,
    pub padding: PaddingMode,
}

impl FrameGrid {
    pub fn new(frame_size: usize, hop: usize, padding: PaddingMode) -> Result<Self> {
        let grid = Self {
            frame_size,
            hop,
            padding,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_size == 0 || !self.frame_size.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "frame size must be positive and even, got {}",
                self.frame_size
            )));
        }
        if self.hop == 0 {
            return Err(Error::invalid("hop must be positive"));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.frame_size / 2 + 1
    }
}

/// One-sided power spectrogram, `frame_size / 2 + 1` rows by `n_frames` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrogram {
    pub bins: Array2<f64>,
    pub sample_rate: u32,
    pub grid: FrameGrid,
}

impl PowerSpectrogram {
    pub fn n_frames(&self) -> usize {
        self.bins.ncols()
    }
}

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "window length must be at least 2, got {n}"
        )));
    }
    let step = 2.0 * std::f64::consts::PI / n as f64;
    Ok((0..n)
        .map(|k| 0.5 * (1.0 - (step * k as f64).cos()))
        .collect())
}

// Maps an index that may fall outside [0, n) back into range by mirroring
// about the end samples (the end samples themselves are not repeated).
fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut j = i.rem_euclid(period);
    if j >= n as isize {
        j = period - j;
    }
    j as usize
}

/// Power spectrogram of `audio` on the given frame grid.
pub fn stft_power(audio: &AudioBuffer, grid: &FrameGrid) -> Result<PowerSpectrogram> {
    grid.validate()?;
    if audio.is_empty() {
        return Err(Error::invalid("audio buffer is empty"));
    }
    let n_frames = frame_count(audio.len(), grid.hop, grid.padding, grid.frame_size)?;
    let window = hann_window(grid.frame_size)?;
    let n_bins = grid.n_bins();
    let samples = audio.samples();
    let half = (grid.frame_size / 2) as isize;

    let fft = FftPlanner::<f64>::new().plan_fft_forward(grid.frame_size);
    let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex::default(); grid.frame_size];
    let mut bins = Array2::<f64>::zeros((n_bins, n_frames));

    for t in 0..n_frames {
        let start = (t * grid.hop) as isize;
        for (k, (slot, w)) in buf.iter_mut().zip(&window).enumerate() {
            let x = match grid.padding {
                PaddingMode::CenterReflect => {
                    samples[reflect_index(start - half + k as isize, samples.len())]
                }
                PaddingMode::None => samples[start as usize + k],
            };
            *slot = Complex::new(x * w, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (b, c) in buf.iter().take(n_bins).enumerate() {
            bins[[b, t]] = c.norm_sqr();
        }
    }

    Ok(PowerSpectrogram {
        bins,
        sample_rate: audio.sample_rate(),
        grid: *grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(freq: f64, rate: u32, len: usize, amp: f64) -> Vec<f64> {
        (0..len)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / rate as f64).sin())
            .collect()
    }

    // Direct O(N^2) DFT of one windowed frame.
    fn brute_power(frame: &[f64]) -> Vec<f64> {
        let n = frame.len();
        (0..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, x) in frame.iter().enumerate() {
                    let ang = -2.0 * PI * (k * i) as f64 / n as f64;
                    re += x * ang.cos();
                    im += x * ang.sin();
                }
                re * re + im * im
            })
            .collect()
    }

    #[test]
    fn hann_quarter_points() {
        let w = hann_window(4).unwrap();
        let expected = [0.0, 0.5, 1.0, 0.5];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        let w = hann_window(512).unwrap();
        assert_eq!(w[0], 0.0);
        assert!((w[256] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hann_symmetry_and_range() {
        for n in [2usize, 3, 7, 64, 512, 1000] {
            let w = hann_window(n).unwrap();
            for k in 1..n {
                assert!((w[k] - w[n - k]).abs() < 1e-12, "n={n} k={k}");
            }
            assert!(w.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn hann_rejects_short() {
        assert!(matches!(hann_window(1), Err(Error::InvalidArgument(_))));
        assert!(hann_window(0).is_err());
    }

    #[test]
    fn reflect_indices() {
        let n = 5;
        let got: Vec<usize> = (-4..9).map(|i| reflect_index(i, n)).collect();
        assert_eq!(got, vec![4, 3, 2, 1, 0, 1, 2, 3, 4, 3, 2, 1, 0]);
        assert_eq!(reflect_index(-3, 1), 0);
    }

    #[test]
    fn sine_peak_matches_brute_force_dft() {
        let rate = 12000;
        let x = sine(1500.0, rate, 4096, 0.8);
        let audio = AudioBuffer::new(x.clone(), rate).unwrap();
        let grid = FrameGrid::new(512, 256, PaddingMode::None).unwrap();
        let spec = stft_power(&audio, &grid).unwrap();

        let w = hann_window(512).unwrap();
        let frame: Vec<f64> = x[..512].iter().zip(&w).map(|(a, b)| a * b).collect();
        let oracle = brute_power(&frame);
        let oracle_peak = oracle
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(oracle_peak, 64);
        for (b, o) in oracle.iter().enumerate() {
            assert!((spec.bins[[b, 0]] - o).abs() <= 1e-9 * o.max(1.0));
        }
        for t in 0..spec.n_frames() {
            let col = spec.bins.column(t);
            let peak = col
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(peak, 64, "frame {t}");
        }
    }

    #[test]
    fn zero_audio_zero_power() {
        let audio = AudioBuffer::new(vec![0.0; 3000], 16000).unwrap();
        let grid = FrameGrid::new(512, 256, PaddingMode::CenterReflect).unwrap();
        let spec = stft_power(&audio, &grid).unwrap();
        assert_eq!(spec.bins.dim(), (257, 1 + 3000 / 256));
        assert!(spec.bins.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn parseval_single_frame() {
        let x: Vec<f64> = (0..512)
            .map(|i| ((i * 7919) % 113) as f64 / 113.0 - 0.5)
            .collect();
        let audio = AudioBuffer::new(x.clone(), 16000).unwrap();
        let grid = FrameGrid::new(512, 512, PaddingMode::None).unwrap();
        let spec = stft_power(&audio, &grid).unwrap();
        let col = spec.bins.column(0);
        let one_sided: f64 = col[0] + col[256] + 2.0 * col.iter().skip(1).take(255).sum::<f64>();
        let w = hann_window(512).unwrap();
        let time: f64 = x.iter().zip(&w).map(|(a, b)| (a * b) * (a * b)).sum();
        assert!((one_sided - 512.0 * time).abs() < 1e-9 * one_sided);
    }

    #[test]
    fn empty_audio_is_rejected() {
        let audio = AudioBuffer::new(vec![], 16000).unwrap();
        let grid = FrameGrid::new(512, 256, PaddingMode::CenterReflect).unwrap();
        assert!(matches!(
            stft_power(&audio, &grid),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn grid_validation() {
        assert!(FrameGrid::new(511, 256, PaddingMode::None).is_err());
        assert!(FrameGrid::new(512, 0, PaddingMode::None).is_err());
        assert!(FrameGrid::new(0, 256, PaddingMode::None).is_err());
        assert!(AudioBuffer::new(vec![0.0], 0).is_err());
        assert!(AudioBuffer::new(vec![f64::NAN], 100).is_err());
    }

    #[test]
    fn time_shift_moves_columns() {
        let x: Vec<f64> = (0..6000)
            .map(|i| (i as f64 * 0.013).sin() * (i as f64 * 0.0007).cos())
            .collect();
        let grid = FrameGrid::new(512, 256, PaddingMode::None).unwrap();
        let a = stft_power(&AudioBuffer::new(x.clone(), 12000).unwrap(), &grid).unwrap();
        let b = stft_power(&AudioBuffer::new(x[256..].to_vec(), 12000).unwrap(), &grid).unwrap();
        assert_eq!(b.n_frames() + 1, a.n_frames());
        for t in 0..b.n_frames() {
            for r in 0..257 {
                assert!((a.bins[[r, t + 1]] - b.bins[[r, t]]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn disjoint_sines_add_in_power() {
        let rate = 16000;
        let grid = FrameGrid::new(512, 256, PaddingMode::None).unwrap();
        let a = sine(1000.0, rate, 4096, 0.4);
        let b = sine(4000.0, rate, 4096, 0.3);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let total = |x: Vec<f64>| {
            let s = stft_power(&AudioBuffer::new(x, rate).unwrap(), &grid).unwrap();
            (0..s.n_frames())
                .map(|t| s.bins.column(t).sum())
                .collect::<Vec<_>>()
        };
        let (pa, pb, ps) = (total(a), total(b), total(sum));
        for t in 0..ps.len() {
            let rel = (ps[t] - (pa[t] + pb[t])).abs() / ps[t];
            assert!(rel < 0.02, "frame {t}: {rel}");
        }
    }
}
