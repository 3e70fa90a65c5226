//! Slaney mel filterbank, log compressions, and the configurable
//! mel-spectrogram pipeline over the sample-rate / band / hop grid.

use std::fmt;

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::dsp::{stft_power, AudioBuffer, FrameGrid, PaddingMode};
use crate::error::{Error, Result};

pub const DEFAULT_FRAME_SIZE: usize = 512;
/// Reference hop; a config's hop is this times its multiplier.
pub const BASE_HOP: usize = 256;
pub const DEFAULT_DB_FLOOR: f64 = 1e-10;

pub const GRID_SAMPLE_RATES: [u32; 2] = [12000, 16000];
/// Band counts evaluated at every hop multiplier.
pub const GRID_FULL_MELS: [usize; 3] = [128, 96, 48];
/// Band counts evaluated only at the reference hop.
pub const GRID_REDUCED_MELS: [usize; 4] = [32, 24, 16, 8];
pub const GRID_HOP_MULTIPLIERS: [u32; 6] = [1, 2, 3, 4, 5, 10];
pub const GRID_COMPRESSIONS: [Compression; 2] = [Compression::Log, Compression::Db];

const F_SP: f64 = 200.0 / 3.0;
const MIN_LOG_HZ: f64 = 1000.0;
const MIN_LOG_MEL: f64 = 15.0;

fn log_step() -> f64 {
    6.4f64.ln() / 27.0
}

/// Hz to mel on the Slaney scale: linear below 1 kHz, logarithmic above.
pub fn hz_to_mel_slaney(f: f64) -> Result<f64> {
    if f.is_nan() || f < 0.0 {
        return Err(Error::invalid(format!("frequency must be >= 0, got {f}")));
    }
    Ok(if f < MIN_LOG_HZ {
        f / F_SP
    } else {
        MIN_LOG_MEL + (f / MIN_LOG_HZ).ln() / log_step()
    })
}

/// Inverse of [`hz_to_mel_slaney`].
pub fn mel_to_hz(mel: f64) -> f64 {
    if mel < MIN_LOG_MEL {
        mel * F_SP
    } else {
        MIN_LOG_HZ * ((mel - MIN_LOG_MEL) * log_step()).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Compression {
    /// `10 * log10(max(x, floor))`
    #[serde(rename = "dB", alias = "db")]
    Db,
    /// `ln(1 + 10000 * x)`
    #[serde(rename = "log")]
    Log,
}

impl Compression {
    pub fn code(self) -> u8 {
        match self {
            Compression::Db => 0,
            Compression::Log => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Compression::Db),
            1 => Some(Compression::Log),
            _ => None,
        }
    }

    pub fn apply(self, x: f64, db_floor: f64) -> f64 {
        match self {
            Compression::Db => compress_db(x, db_floor),
            Compression::Log => compress_log(x),
        }
    }
}

impl fmt::Display for Compression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Compression::Db => "dB",
            Compression::Log => "log",
        })
    }
}

impl std::str::FromStr for Compression {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dB" | "db" | "DB" => Ok(Compression::Db),
            "log" | "LOG" => Ok(Compression::Log),
            other => Err(Error::invalid(format!("unknown compression {other:?}"))),
        }
    }
}

pub fn compress_db(x: f64, floor_eps: f64) -> f64 {
    10.0 * x.max(floor_eps).log10()
}

pub fn compress_log(x: f64) -> f64 {
    (10000.0 * x).ln_1p()
}

/// Number of analysis frames for a signal of `n_samples`.
///
/// Centre-padded framing yields `1 + n / hop`; unpadded framing yields
/// `1 + (n - frame_size) / hop` and needs at least one full frame.
pub fn frame_count(
    n_samples: usize,
    hop: usize,
    padding: PaddingMode,
    frame_size: usize,
) -> Result<usize> {
    if n_samples == 0 || hop == 0 {
        return Err(Error::invalid("sample count and hop must be positive"));
    }
    match padding {
        PaddingMode::CenterReflect => Ok(1 + n_samples / hop),
        PaddingMode::None if n_samples < frame_size => Err(Error::invalid(format!(
            "{n_samples} samples is shorter than one {frame_size}-sample frame"
        ))),
        PaddingMode::None => Ok(1 + (n_samples - frame_size) / hop),
    }
}

/// True when `(sample_rate, n_mels, hop_multiplier)` is one of the evaluated cells.
pub fn is_grid_cell(sample_rate: u32, n_mels: usize, hop_multiplier: u32) -> bool {
    GRID_SAMPLE_RATES.contains(&sample_rate)
        && if GRID_FULL_MELS.contains(&n_mels) {
            GRID_HOP_MULTIPLIERS.contains(&hop_multiplier)
        } else {
            GRID_REDUCED_MELS.contains(&n_mels) && hop_multiplier == 1
        }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelConfig {
    pub sample_rate: u32,
    pub n_mels: usize,
    pub hop_multiplier: u32,
    pub compression: Compression,
    pub frame_size: usize,
    pub fmin: f64,
    pub fmax: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_frames: Option<usize>,
    #[serde(default)]
    pub padding: PaddingMode,
    #[serde(default = "default_db_floor")]
    pub db_floor: f64,
}

fn default_db_floor() -> f64 {
    DEFAULT_DB_FLOOR
}

impl MelConfig {
    /// Config with 512-sample frames and the full `0..Nyquist` band.
    pub fn new(
        sample_rate: u32,
        n_mels: usize,
        hop_multiplier: u32,
        compression: Compression,
    ) -> Self {
        Self {
            sample_rate,
            n_mels,
            hop_multiplier,
            compression,
            frame_size: DEFAULT_FRAME_SIZE,
            fmin: 0.0,
            fmax: sample_rate as f64 / 2.0,
            target_frames: None,
            padding: PaddingMode::CenterReflect,
            db_floor: DEFAULT_DB_FLOOR,
        }
    }

    pub fn with_target_frames(mut self, frames: usize) -> Self {
        self.target_frames = Some(frames);
        self
    }

    pub fn hop(&self) -> usize {
        BASE_HOP * self.hop_multiplier as usize
    }

    pub fn frame_grid(&self) -> Result<FrameGrid> {
        FrameGrid::new(self.frame_size, self.hop(), self.padding)
    }

    pub fn is_grid_cell(&self) -> bool {
        is_grid_cell(self.sample_rate, self.n_mels, self.hop_multiplier)
            && self.frame_size == DEFAULT_FRAME_SIZE
    }

    /// Short stable identifier, e.g. `12k-96mel-x1-dB`.
    pub fn id(&self) -> String {
        let rate = if self.sample_rate.is_multiple_of(1000) {
            format!("{}k", self.sample_rate / 1000)
        } else {
            format!("{}hz", self.sample_rate)
        };
        format!(
            "{rate}-{}mel-x{}-{}",
            self.n_mels, self.hop_multiplier, self.compression
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if self.n_mels == 0 {
            return Err(Error::invalid("n_mels must be at least 1"));
        }
        if self.hop_multiplier == 0 {
            return Err(Error::invalid("hop multiplier must be at least 1"));
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        if !(self.fmin >= 0.0 && self.fmin < self.fmax && self.fmax <= nyquist) {
            return Err(Error::invalid(format!(
                "need 0 <= fmin < fmax <= {nyquist}, got fmin={} fmax={}",
                self.fmin, self.fmax
            )));
        }
        if self.db_floor.is_nan() || self.db_floor <= 0.0 {
            return Err(Error::invalid("dB floor must be positive"));
        }
        if self.target_frames == Some(0) {
            return Err(Error::invalid("target_frames must be positive"));
        }
        self.frame_grid().map(|_| ())
    }

    /// Fails with `UnsupportedConfig` when the config lies off the evaluated grid.
    pub fn check_grid(&self) -> Result<()> {
        if self.is_grid_cell() {
            Ok(())
        } else {
            Err(Error::UnsupportedConfig(format!(
                "{} is not a cell of the evaluated grid",
                self.id()
            )))
        }
    }

    /// Value written into columns added to reach `target_frames`.
    pub fn pad_value(&self) -> f64 {
        self.compression.apply(0.0, self.db_floor)
    }
}

/// All 88 evaluated configurations, ordered by sample rate, compression,
/// then band count (descending) and hop multiplier.
pub fn enumerate_grid() -> Vec<MelConfig> {
    let mut out = Vec::with_capacity(88);
    for &rate in &GRID_SAMPLE_RATES {
        for &comp in &GRID_COMPRESSIONS {
            for &mels in &GRID_FULL_MELS {
                for &hop in &GRID_HOP_MULTIPLIERS {
                    out.push(MelConfig::new(rate, mels, hop, comp));
                }
            }
            for &mels in &GRID_REDUCED_MELS {
                out.push(MelConfig::new(rate, mels, 1, comp));
            }
        }
    }
    out
}

/// Triangular filters, one row per mel band, over the one-sided FFT bins.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    pub weights: Array2<f64>,
    pub center_freqs: Vec<f64>,
}

impl MelFilterbank {
    pub fn n_mels(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_bins(&self) -> usize {
        self.weights.ncols()
    }
}

/// Slaney-normalized triangular filterbank for `config`.
pub fn mel_filterbank(config: &MelConfig) -> Result<MelFilterbank> {
    config.validate()?;
    let n_bins = config.frame_size / 2 + 1;
    let n_points = config.n_mels + 2;
    let mel_lo = hz_to_mel_slaney(config.fmin)?;
    let mel_hi = hz_to_mel_slaney(config.fmax)?;
    let edges: Vec<f64> = (0..n_points)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_points - 1) as f64))
        .collect();
    let bin_hz = config.sample_rate as f64 / config.frame_size as f64;

    let mut weights = Array2::<f64>::zeros((config.n_mels, n_bins));
    for (m, tri) in edges.windows(3).enumerate() {
        let (left, center, right) = (tri[0], tri[1], tri[2]);
        let enorm = 2.0 / (right - left);
        let mut row = weights.row_mut(m);
        for (b, w) in row.iter_mut().enumerate() {
            let f = b as f64 * bin_hz;
            let rising = (f - left) / (center - left);
            let falling = (right - f) / (right - center);
            *w = enorm * rising.min(falling).max(0.0);
        }
        if !row.iter().any(|&w| w > 0.0) {
            return Err(Error::DegenerateFilterbank { band: m });
        }
    }
    Ok(MelFilterbank {
        weights,
        center_freqs: edges[1..=config.n_mels].to_vec(),
    })
}

/// Compressed mel-band energies, `n_mels` rows by `n_frames` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    pub values: Array2<f64>,
    pub config: MelConfig,
}

impl MelSpectrogram {
    pub fn n_mels(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_frames(&self) -> usize {
        self.values.ncols()
    }

    pub fn value_count(&self) -> usize {
        self.values.len()
    }
}

/// Full pipeline: power STFT, mel projection, compression, frame-count fit.
pub fn mel_spectrogram(audio: &AudioBuffer, config: &MelConfig) -> Result<MelSpectrogram> {
    let fb = mel_filterbank(config)?;
    mel_spectrogram_with(&fb, audio, config)
}

/// Same as [`mel_spectrogram`] but reuses a prebuilt filterbank.
pub fn mel_spectrogram_with(
    fb: &MelFilterbank,
    audio: &AudioBuffer,
    config: &MelConfig,
) -> Result<MelSpectrogram> {
    config.validate()?;
    if audio.sample_rate() != config.sample_rate {
        return Err(Error::invalid(format!(
            "audio is at {} Hz but config expects {} Hz; resample first",
            audio.sample_rate(),
            config.sample_rate
        )));
    }
    if fb.n_mels() != config.n_mels || fb.n_bins() != config.frame_size / 2 + 1 {
        return Err(Error::invalid("filterbank does not match config"));
    }
    let power = stft_power(audio, &config.frame_grid()?)?;
    let mut values = fb.weights.dot(&power.bins);
    values.mapv_inplace(|x| config.compression.apply(x, config.db_floor));

    if let Some(target) = config.target_frames {
        values = fit_frames(values, target, config.pad_value());
    }
    Ok(MelSpectrogram {
        values,
        config: config.clone(),
    })
}

// Right-crop or right-pad columns to exactly `target`.
fn fit_frames(values: Array2<f64>, target: usize, pad: f64) -> Array2<f64> {
    let have = values.ncols();
    if have == target {
        return values;
    }
    if have > target {
        return values.slice(s![.., ..target]).to_owned();
    }
    let mut out = Array2::from_elem((values.nrows(), target), pad);
    out.slice_mut(s![.., ..have]).assign(&values);
    out
}
