//! Declarative CNN descriptions, input-resolution pooling adaptation,
//! shape propagation and analytical multiply-accumulate counting.
//!
//! Two families are modelled:
//!
//! * `vgg-cnn`: four 3x3 conv layers (128, 384, 768, 2048 channels), each
//!   followed by a (frequency, time) max pool whose window sizes are chosen
//!   per input resolution so the final map is exactly 1x1.
//! * `musicnn-frontend`: parallel timbre (tall) and temporal (wide) filters
//!   over the spectrogram, concatenated along channels, followed by a
//!   configurable stack of 1-D back-end layers.
//!
//! MAC counts cover convolutions plus one dense output term; pooling,
//! bias, normalization and activations are not counted.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::PaddingMode;
use crate::error::{Error, Result};
use crate::mel::{
    frame_count, hz_to_mel_slaney, is_grid_cell, MelConfig, BASE_HOP, DEFAULT_FRAME_SIZE,
};
use crate::reference;

pub const VGG_CHANNELS: [usize; 4] = [128, 384, 768, 2048];
pub const VGG_KERNEL: usize = 3;
pub const DEFAULT_OUTPUT_TAGS: usize = 50;
/// Feature values are stored as f32 in MSPEC1 files.
pub const FEATURE_BYTES_PER_VALUE: usize = 4;

pub const MUSICNN_TIMBRE_WIDTHS: [usize; 3] = [1, 3, 7];
pub const MUSICNN_TEMPORAL_WIDTHS: [usize; 4] = [32, 64, 128, 165];
pub const MUSICNN_DEFAULT_FILTERS_PER_SHAPE: usize = 51;
pub const MUSICNN_DEFAULT_SEGMENT_SECONDS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Padding {
    Same,
    Valid,
    /// Valid along frequency, same along time (MUSICNN timbre branches).
    ValidFreq,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvLayerSpec {
    pub filter_freq: usize,
    pub filter_time: usize,
    pub out_channels: usize,
    pub padding: Padding,
}

impl ConvLayerSpec {
    pub fn new(
        filter_freq: usize,
        filter_time: usize,
        out_channels: usize,
        padding: Padding,
    ) -> Self {
        Self {
            filter_freq,
            filter_time,
            out_channels,
            padding,
        }
    }

    fn label(&self) -> String {
        format!(
            "conv{}x{}x{}",
            self.filter_freq, self.filter_time, self.out_channels
        )
    }

    fn validate(&self) -> Result<()> {
        if self.filter_freq == 0 || self.filter_time == 0 || self.out_channels == 0 {
            return Err(Error::invalid(format!(
                "layer {} has a zero dimension",
                self.label()
            )));
        }
        Ok(())
    }

    fn output_dims(&self, freq: usize, time: usize, stage: &str) -> Result<(usize, usize)> {
        let shrink = |d: usize, k: usize, axis: &'static str| {
            (d + 1)
                .checked_sub(k)
                .filter(|&v| v > 0)
                .ok_or_else(|| Error::ShapeUnderflow {
                    stage: stage.to_string(),
                    axis,
                })
        };
        Ok(match self.padding {
            Padding::Same => (freq, time),
            Padding::Valid => (
                shrink(freq, self.filter_freq, "frequency")?,
                shrink(time, self.filter_time, "time")?,
            ),
            Padding::ValidFreq => (shrink(freq, self.filter_freq, "frequency")?, time),
        })
    }
}

/// Max-pool window sizes for the four VGG stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolingPlan {
    pub freq_pools: [usize; 4],
    pub time_pools: [usize; 4],
}

impl PoolingPlan {
    pub fn identity() -> Self {
        Self {
            freq_pools: [1; 4],
            time_pools: [1; 4],
        }
    }

    fn validate(&self) -> Result<()> {
        if self
            .freq_pools
            .iter()
            .chain(&self.time_pools)
            .any(|&p| p == 0)
        {
            return Err(Error::invalid("pool sizes must be at least 1"));
        }
        Ok(())
    }
}

impl fmt::Display for PoolingPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[usize; 4]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        write!(
            f,
            "time: {} freq: {}",
            join(&self.time_pools),
            join(&self.freq_pools)
        )
    }
}

/// Time pools per hop multiplier and sample rate.
pub fn vgg_time_pools(sample_rate: u32, hop_multiplier: u32) -> Result<[usize; 4]> {
    let pools = match (sample_rate, hop_multiplier) {
        (12000, 1) => [4, 5, 8, 8],
        (12000, 2) => [4, 5, 8, 4],
        (12000, 3) | (12000, 4) => [4, 5, 8, 2],
        (12000, 5) => [4, 5, 8, 1],
        (12000, 10) => [4, 5, 4, 1],
        (16000, 1) => [4, 5, 9, 10],
        (16000, 2) => [4, 5, 9, 5],
        (16000, 3) => [4, 5, 9, 3],
        (16000, 4) | (16000, 5) => [4, 5, 9, 2],
        (16000, 10) => [4, 5, 9, 1],
        _ => {
            return Err(Error::UnsupportedConfig(format!(
                "no time pooling row for {sample_rate} Hz at hop x{hop_multiplier}"
            )))
        }
    };
    Ok(pools)
}

/// Frequency pools per mel band count.
pub fn vgg_freq_pools(n_mels: usize) -> Result<[usize; 4]> {
    let pools = match n_mels {
        128 => [2, 4, 4, 4],
        96 => [2, 4, 3, 4],
        48 => [2, 4, 3, 2],
        32 | 24 => [2, 2, 3, 2],
        16 => [2, 2, 2, 2],
        8 => [2, 2, 2, 1],
        _ => {
            return Err(Error::UnsupportedConfig(format!(
                "no frequency pooling row for {n_mels} mel bands"
            )))
        }
    };
    Ok(pools)
}

/// Pooling windows for a grid configuration.
pub fn vgg_pooling_plan(
    n_mels: usize,
    hop_multiplier: u32,
    sample_rate: u32,
) -> Result<PoolingPlan> {
    if !is_grid_cell(sample_rate, n_mels, hop_multiplier) {
        return Err(Error::UnsupportedConfig(format!(
            "({n_mels} mels, x{hop_multiplier}, {sample_rate} Hz) is off the evaluated grid"
        )));
    }
    Ok(PoolingPlan {
        freq_pools: vgg_freq_pools(n_mels)?,
        time_pools: vgg_time_pools(sample_rate, hop_multiplier)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArchKind {
    VggCnn,
    MusicnnFrontend,
}

impl fmt::Display for ArchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArchKind::VggCnn => "vgg-cnn",
            ArchKind::MusicnnFrontend => "musicnn-frontend",
        })
    }
}

impl std::str::FromStr for ArchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vgg" | "vgg-cnn" => Ok(ArchKind::VggCnn),
            "musicnn" | "musicnn-frontend" => Ok(ArchKind::MusicnnFrontend),
            other => Err(Error::invalid(format!("unknown architecture {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub name: ArchKind,
    /// VGG: the sequential conv stack. MUSICNN: the parallel front-end branches.
    pub layers: Vec<ConvLayerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pooling: Option<PoolingPlan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment_frames: Option<usize>,
    /// MUSICNN only: sequential 1-D layers over the concatenated front-end output.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub backend: Vec<ConvLayerSpec>,
    #[serde(default = "default_output_tags")]
    pub output_tags: usize,
}

fn default_output_tags() -> usize {
    DEFAULT_OUTPUT_TAGS
}

impl ArchSpec {
    pub fn vgg(pooling: PoolingPlan) -> Self {
        Self {
            name: ArchKind::VggCnn,
            layers: VGG_CHANNELS
                .iter()
                .map(|&c| ConvLayerSpec::new(VGG_KERNEL, VGG_KERNEL, c, Padding::Same))
                .collect(),
            pooling: Some(pooling),
            segment_frames: None,
            backend: Vec::new(),
            output_tags: DEFAULT_OUTPUT_TAGS,
        }
    }

    /// VGG with the pooling plan for a grid configuration.
    pub fn vgg_for(config: &MelConfig) -> Result<Self> {
        Ok(Self::vgg(vgg_pooling_plan(
            config.n_mels,
            config.hop_multiplier,
            config.sample_rate,
        )?))
    }

    pub fn validate(&self) -> Result<()> {
        for layer in self.layers.iter().chain(&self.backend) {
            layer.validate()?;
        }
        if self.output_tags == 0 {
            return Err(Error::invalid("output_tags must be positive"));
        }
        match self.name {
            ArchKind::VggCnn => {
                if self.layers.len() != 4 {
                    return Err(Error::invalid(format!(
                        "vgg-cnn needs 4 conv layers, got {}",
                        self.layers.len()
                    )));
                }
                self.pooling
                    .as_ref()
                    .ok_or_else(|| Error::invalid("vgg-cnn needs a pooling plan"))?
                    .validate()
            }
            ArchKind::MusicnnFrontend => {
                if self.layers.is_empty() {
                    return Err(Error::invalid("musicnn-frontend needs front-end branches"));
                }
                if self.backend.iter().any(|l| l.filter_freq != 1) {
                    return Err(Error::invalid(
                        "musicnn back-end layers must be 1-D (height 1)",
                    ));
                }
                Ok(())
            }
        }
    }

    /// Exactly the published VGG layer stack (pooling aside).
    pub fn is_canonical_vgg(&self) -> bool {
        self.name == ArchKind::VggCnn
            && self.layers.len() == 4
            && self.layers.iter().zip(VGG_CHANNELS).all(|(l, c)| {
                l.filter_freq == VGG_KERNEL && l.filter_time == VGG_KERNEL && l.out_channels == c
            })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Options for [`musicnn_frontend_spec`].
#[derive(Debug, Clone, PartialEq)]
pub struct MusicnnOptions {
    pub sample_rate: u32,
    pub hop_multiplier: u32,
    pub segment_seconds: f64,
    pub filters_per_shape: usize,
    /// Back-end stack; the default approximates three 1-D conv layers of
    /// width 7 and 512 channels.
    pub backend: Vec<ConvLayerSpec>,
    pub output_tags: usize,
}

impl Default for MusicnnOptions {
    fn default() -> Self {
        Self {
            sample_rate: 16000,
            hop_multiplier: 1,
            segment_seconds: MUSICNN_DEFAULT_SEGMENT_SECONDS,
            filters_per_shape: MUSICNN_DEFAULT_FILTERS_PER_SHAPE,
            backend: vec![ConvLayerSpec::new(1, 7, 512, Padding::Same); 3],
            output_tags: DEFAULT_OUTPUT_TAGS,
        }
    }
}

/// Timbre filter heights (90% and 40% of the band count, floored).
pub fn musicnn_timbre_heights(n_mels: usize) -> (usize, usize) {
    (n_mels * 9 / 10, n_mels * 4 / 10)
}

/// MUSICNN front-end with timbre filter heights scaled to `n_mels`.
pub fn musicnn_frontend_spec(n_mels: usize, opts: &MusicnnOptions) -> Result<ArchSpec> {
    if n_mels < 8 {
        return Err(Error::invalid(format!(
            "musicnn front-end needs at least 8 mel bands, got {n_mels}"
        )));
    }
    if opts.filters_per_shape == 0 || opts.segment_seconds.is_nan() || opts.segment_seconds <= 0.0 {
        return Err(Error::invalid(
            "filter count and segment length must be positive",
        ));
    }
    let (tall, short) = musicnn_timbre_heights(n_mels);
    let c = opts.filters_per_shape;
    let mut layers = Vec::with_capacity(10);
    for h in [short, tall] {
        for &w in &MUSICNN_TIMBRE_WIDTHS {
            layers.push(ConvLayerSpec::new(h, w, c, Padding::ValidFreq));
        }
    }
    for &w in &MUSICNN_TEMPORAL_WIDTHS {
        layers.push(ConvLayerSpec::new(1, w, c, Padding::Same));
    }
    let segment_samples = (opts.segment_seconds * opts.sample_rate as f64).round() as usize;
    let segment_frames = frame_count(
        segment_samples,
        BASE_HOP * opts.hop_multiplier as usize,
        PaddingMode::CenterReflect,
        DEFAULT_FRAME_SIZE,
    )?;
    let spec = ArchSpec {
        name: ArchKind::MusicnnFrontend,
        layers,
        pooling: None,
        segment_frames: Some(segment_frames),
        backend: opts.backend.clone(),
        output_tags: opts.output_tags,
    };
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageShape {
    pub label: String,
    pub freq: usize,
    pub time: usize,
    pub channels: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeTrace {
    /// Input first, then one entry per stage.
    pub stages: Vec<StageShape>,
    /// A terminal global pool was appended to reach 1x1.
    pub global_pool: bool,
}

impl ShapeTrace {
    pub fn freq_trace(&self) -> Vec<usize> {
        self.stages.iter().map(|s| s.freq).collect()
    }

    pub fn time_trace(&self) -> Vec<usize> {
        self.stages.iter().map(|s| s.time).collect()
    }

    pub fn last(&self) -> &StageShape {
        self.stages
            .last()
            .expect("trace always holds the input stage")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub layer_names: Vec<String>,
    pub per_layer_macs: Vec<u64>,
    pub total_macs: u64,
    pub gmacs: f64,
    pub feature_bytes: u64,
    /// Set when part of the count rests on an assumed layer layout.
    pub approximate: bool,
}

struct Walk {
    trace: ShapeTrace,
    costs: Vec<(String, u64)>,
}

fn check_dims(freq: usize, time: usize, stage: &str) -> Result<()> {
    if freq == 0 {
        return Err(Error::ShapeUnderflow {
            stage: stage.into(),
            axis: "frequency",
        });
    }
    if time == 0 {
        return Err(Error::ShapeUnderflow {
            stage: stage.into(),
            axis: "time",
        });
    }
    Ok(())
}

fn conv_macs(layer: &ConvLayerSpec, in_channels: usize, out_freq: usize, out_time: usize) -> u64 {
    [
        layer.filter_freq,
        layer.filter_time,
        in_channels,
        layer.out_channels,
        out_freq,
        out_time,
    ]
    .iter()
    .map(|&v| v as u64)
    .product()
}

fn walk(arch: &ArchSpec, input_freq: usize, input_time: usize) -> Result<Walk> {
    arch.validate()?;
    check_dims(input_freq, input_time, "input")?;
    let mut stages = vec![StageShape {
        label: "input".into(),
        freq: input_freq,
        time: input_time,
        channels: 1,
    }];
    let mut costs = Vec::new();
    let (mut freq, mut time, mut channels) = (input_freq, input_time, 1usize);

    match arch.name {
        ArchKind::VggCnn => {
            let plan = arch.pooling.expect("validated");
            for (i, layer) in arch.layers.iter().enumerate() {
                let label = format!("layer{}", i + 1);
                let (cf, ct) = layer.output_dims(freq, time, &label)?;
                costs.push((label.clone(), conv_macs(layer, channels, cf, ct)));
                freq = cf / plan.freq_pools[i];
                time = ct / plan.time_pools[i];
                channels = layer.out_channels;
                check_dims(freq, time, &label)?;
                stages.push(StageShape {
                    label,
                    freq,
                    time,
                    channels,
                });
            }
        }
        ArchKind::MusicnnFrontend => {
            // Timbre branches convolve the full spectrogram and are then
            // max-pooled over frequency; temporal branches (height 1) run on
            // the frequency-averaged envelope.
            let mut concat = 0;
            for layer in &arch.layers {
                let label = format!("frontend-{}x{}", layer.filter_freq, layer.filter_time);
                let branch_freq = if layer.filter_freq == 1 {
                    1
                } else {
                    input_freq
                };
                let (cf, ct) = layer.output_dims(branch_freq, input_time, &label)?;
                costs.push((label, conv_macs(layer, 1, cf, ct)));
                if ct != input_time {
                    return Err(Error::invalid(
                        "front-end branches must preserve the time axis",
                    ));
                }
                concat += layer.out_channels;
            }
            freq = 1;
            channels = concat;
            stages.push(StageShape {
                label: "frontend-concat".into(),
                freq,
                time,
                channels,
            });
            for (i, layer) in arch.backend.iter().enumerate() {
                let label = format!("backend{}", i + 1);
                let (cf, ct) = layer.output_dims(freq, time, &label)?;
                costs.push((label.clone(), conv_macs(layer, channels, cf, ct)));
                freq = cf;
                time = ct;
                channels = layer.out_channels;
                stages.push(StageShape {
                    label,
                    freq,
                    time,
                    channels,
                });
            }
        }
    }

    let global_pool = freq > 1 || time > 1;
    if global_pool {
        stages.push(StageShape {
            label: "global-pool".into(),
            freq: 1,
            time: 1,
            channels,
        });
    }
    costs.push(("output".into(), (channels * arch.output_tags) as u64));
    Ok(Walk {
        trace: ShapeTrace {
            stages,
            global_pool,
        },
        costs,
    })
}

/// Tensor shapes after every stage for an `input_freq x input_time` input.
pub fn propagate_shapes(
    arch: &ArchSpec,
    input_freq: usize,
    input_time: usize,
) -> Result<ShapeTrace> {
    walk(arch, input_freq, input_time).map(|w| w.trace)
}

/// Per-example MAC count. Conv MACs use the pre-pooling output extent; the
/// final entry is the dense output layer (channels x tags).
pub fn count_macs(arch: &ArchSpec, input_freq: usize, input_time: usize) -> Result<CostReport> {
    let Walk { costs, .. } = walk(arch, input_freq, input_time)?;
    let (layer_names, per_layer_macs): (Vec<_>, Vec<_>) = costs.into_iter().unzip();
    let total_macs: u64 = per_layer_macs.iter().sum();
    Ok(CostReport {
        layer_names,
        per_layer_macs,
        total_macs,
        gmacs: total_macs as f64 / 1e9,
        feature_bytes: (input_freq * input_time * FEATURE_BYTES_PER_VALUE) as u64
            + crate::mspec::HEADER_LEN as u64,
        approximate: arch.name == ArchKind::MusicnnFrontend,
    })
}

/// Physical region of the input covered by one filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterExtent {
    /// Span along the mel axis, in mel units.
    pub mel_span: f64,
    pub seconds: f64,
}

pub fn filter_extent(
    config: &MelConfig,
    filter_freq: usize,
    filter_time: usize,
) -> Result<FilterExtent> {
    config.validate()?;
    let mel_range = hz_to_mel_slaney(config.fmax)? - hz_to_mel_slaney(config.fmin)?;
    let band_spacing = mel_range / (config.n_mels + 1) as f64;
    Ok(FilterExtent {
        mel_span: band_spacing * filter_freq as f64,
        seconds: (config.hop() * filter_time) as f64 / config.sample_rate as f64,
    })
}

/// Input size fed to an architecture for `config`: VGG sees a whole clip,
/// MUSICNN a fixed-length segment.
pub fn input_dims(
    arch: ArchKind,
    config: &MelConfig,
    musicnn: &MusicnnOptions,
) -> Result<(usize, usize, ArchSpec)> {
    match arch {
        ArchKind::VggCnn => {
            let spec = ArchSpec::vgg_for(config)?;
            let frames = config.target_frames.unwrap_or_else(|| {
                reference::clip_frames(config.sample_rate, config.hop_multiplier)
            });
            Ok((config.n_mels, frames, spec))
        }
        ArchKind::MusicnnFrontend => {
            let opts = MusicnnOptions {
                sample_rate: config.sample_rate,
                hop_multiplier: config.hop_multiplier,
                ..musicnn.clone()
            };
            let spec = musicnn_frontend_spec(config.n_mels, &opts)?;
            let frames = spec.segment_frames.expect("set by constructor");
            Ok((config.n_mels, frames, spec))
        }
    }
}

#[derive(Debug)]
pub struct SweepEntry {
    pub config: MelConfig,
    pub report: Result<CostReport>,
}

/// Cost every config; failures are kept inline and never stop the sweep.
/// Output order matches `configs` regardless of scheduling.
pub fn grid_cost_sweep(arch: ArchKind, configs: &[MelConfig]) -> Vec<SweepEntry> {
    grid_cost_sweep_with(arch, configs, &MusicnnOptions::default())
}

pub fn grid_cost_sweep_with(
    arch: ArchKind,
    configs: &[MelConfig],
    musicnn: &MusicnnOptions,
) -> Vec<SweepEntry> {
    configs
        .par_iter()
        .map(|config| SweepEntry {
            config: config.clone(),
            report: input_dims(arch, config, musicnn)
                .and_then(|(f, t, spec)| count_macs(&spec, f, t)),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mel::Compression;

    #[test]
    fn table_rows() {
        let p = vgg_pooling_plan(96, 1, 12000).unwrap();
        assert_eq!(p.time_pools, [4, 5, 8, 8]);
        assert_eq!(p.freq_pools, [2, 4, 3, 4]);
        let p = vgg_pooling_plan(48, 10, 12000).unwrap();
        assert_eq!(p.time_pools, [4, 5, 4, 1]);
        assert_eq!(p.freq_pools, [2, 4, 3, 2]);
        let p = vgg_pooling_plan(8, 1, 16000).unwrap();
        assert_eq!(p.time_pools, [4, 5, 9, 10]);
        assert_eq!(p.freq_pools, [2, 2, 2, 1]);
        assert_eq!(
            vgg_pooling_plan(48, 2, 16000).unwrap().to_string(),
            "time: 4,5,9,5 freq: 2,4,3,2"
        );
    }

    #[test]
    fn off_grid_plans_rejected() {
        for (m, h, r) in [
            (64, 1, 12000),
            (8, 2, 12000),
            (96, 6, 16000),
            (96, 1, 22050),
        ] {
            assert!(matches!(
                vgg_pooling_plan(m, h, r),
                Err(Error::UnsupportedConfig(_))
            ));
        }
    }

    #[test]
    fn vgg_trace_for_baseline() {
        let arch = ArchSpec::vgg(vgg_pooling_plan(96, 1, 12000).unwrap());
        let t = propagate_shapes(&arch, 96, 1366).unwrap();
        assert_eq!(t.freq_trace(), vec![96, 48, 12, 4, 1]);
        assert_eq!(t.time_trace(), vec![1366, 341, 68, 8, 1]);
        assert!(!t.global_pool);
        assert_eq!(t.last().channels, 2048);
    }

    #[test]
    fn vgg_trace_for_coarsest_12k() {
        let arch = ArchSpec::vgg(vgg_pooling_plan(48, 10, 12000).unwrap());
        let t = propagate_shapes(&arch, 48, 137).unwrap();
        assert_eq!((t.last().freq, t.last().time), (1, 1));
        assert!(!t.global_pool);
    }

    #[test]
    fn identity_pooling_keeps_dims() {
        let arch = ArchSpec::vgg(PoolingPlan::identity());
        let t = propagate_shapes(&arch, 17, 33).unwrap();
        let before_global = &t.stages[t.stages.len() - 2];
        assert_eq!((before_global.freq, before_global.time), (17, 33));
        assert!(t.global_pool);
        assert_eq!((t.last().freq, t.last().time), (1, 1));
    }

    #[test]
    fn underflow_is_an_error() {
        let arch = ArchSpec::vgg(vgg_pooling_plan(96, 1, 12000).unwrap());
        assert!(matches!(
            propagate_shapes(&arch, 8, 1366),
            Err(Error::ShapeUnderflow {
                axis: "frequency",
                ..
            })
        ));
        assert!(matches!(
            propagate_shapes(&arch, 96, 100),
            Err(Error::ShapeUnderflow { axis: "time", .. })
        ));
        assert!(propagate_shapes(&arch, 0, 10).is_err());
    }

    #[test]
    fn first_layer_macs() {
        let arch = ArchSpec::vgg(vgg_pooling_plan(96, 1, 12000).unwrap());
        let r = count_macs(&arch, 96, 1366).unwrap();
        assert_eq!(r.per_layer_macs[0], 151_068_672);
        assert_eq!(r.total_macs, r.per_layer_macs.iter().sum::<u64>());
        assert_eq!(r.layer_names.last().unwrap(), "output");
        assert_eq!(*r.per_layer_macs.last().unwrap(), 2048 * 50);
        assert_eq!(r.feature_bytes, 524_584);

        let unit = count_macs(&ArchSpec::vgg(PoolingPlan::identity()), 1, 1).unwrap();
        assert_eq!(unit.per_layer_macs[0], 1152);
    }

    #[test]
    fn halving_mels_halves_conv_macs() {
        let a = count_macs(
            &ArchSpec::vgg(vgg_pooling_plan(96, 1, 12000).unwrap()),
            96,
            1366,
        )
        .unwrap();
        let b = count_macs(
            &ArchSpec::vgg(vgg_pooling_plan(48, 1, 12000).unwrap()),
            48,
            1366,
        )
        .unwrap();
        for i in 0..4 {
            assert_eq!(a.per_layer_macs[i], 2 * b.per_layer_macs[i]);
        }
        let ratio = b.total_macs as f64 / a.total_macs as f64;
        assert!((ratio - 0.5).abs() < 0.005);
    }

    #[test]
    fn channel_scaling_is_linear_per_layer() {
        let base = ArchSpec::vgg(vgg_pooling_plan(96, 1, 12000).unwrap());
        let mut scaled = base.clone();
        scaled.layers[2].out_channels *= 3;
        let a = count_macs(&base, 96, 1366).unwrap();
        let b = count_macs(&scaled, 96, 1366).unwrap();
        assert_eq!(b.per_layer_macs[2], 3 * a.per_layer_macs[2]);
        assert!(!scaled.is_canonical_vgg());
        assert!(base.is_canonical_vgg());
    }

    #[test]
    fn musicnn_heights() {
        assert_eq!(musicnn_timbre_heights(96), (86, 38));
        assert_eq!(musicnn_timbre_heights(48), (43, 19));
        assert_eq!(musicnn_timbre_heights(128), (115, 51));
        assert_eq!(musicnn_timbre_heights(10), (9, 4));
        let spec = musicnn_frontend_spec(96, &MusicnnOptions::default()).unwrap();
        let shapes: Vec<(usize, usize)> = spec
            .layers
            .iter()
            .map(|l| (l.filter_freq, l.filter_time))
            .collect();
        assert_eq!(
            shapes,
            vec![
                (38, 1),
                (38, 3),
                (38, 7),
                (86, 1),
                (86, 3),
                (86, 7),
                (1, 32),
                (1, 64),
                (1, 128),
                (1, 165)
            ]
        );
        // 3 s at 16 kHz, hop 256, centred
        assert_eq!(spec.segment_frames, Some(188));
        assert!(musicnn_frontend_spec(7, &MusicnnOptions::default()).is_err());
    }

    #[test]
    fn musicnn_cost_structure() {
        let opts = MusicnnOptions::default();
        let spec = musicnn_frontend_spec(96, &opts).unwrap();
        let t = propagate_shapes(&spec, 96, 188).unwrap();
        assert_eq!(t.stages[1].channels, 10 * 51);
        assert_eq!(t.stages[1].freq, 1);
        assert!(t.global_pool);
        let r = count_macs(&spec, 96, 188).unwrap();
        assert!(r.approximate);
        // 38x7 timbre branch: valid along 96 bands -> 59 rows
        assert_eq!(r.per_layer_macs[2], 38 * 7 * 51 * 59 * 188);
        // temporal 1x165 on the envelope
        assert_eq!(r.per_layer_macs[9], 165 * 51 * 188);
        assert_eq!(r.per_layer_macs[10], 7 * 510 * 512 * 188);
    }

    #[test]
    fn toml_roundtrip() {
        let arch = ArchSpec::vgg(vgg_pooling_plan(48, 2, 16000).unwrap());
        let text = arch.to_toml().unwrap();
        assert!(text.contains("name = \"vgg-cnn\""));
        assert_eq!(ArchSpec::from_toml(&text).unwrap(), arch);
        let m = musicnn_frontend_spec(48, &MusicnnOptions::default()).unwrap();
        assert_eq!(ArchSpec::from_toml(&m.to_toml().unwrap()).unwrap(), m);
        assert!(ArchSpec::from_toml("name = \"vgg-cnn\"\nlayers = []\n").is_err());
    }

    #[test]
    fn receptive_field_doubles() {
        let a = filter_extent(&MelConfig::new(12000, 96, 1, Compression::Db), 3, 3).unwrap();
        let b = filter_extent(&MelConfig::new(12000, 48, 2, Compression::Db), 3, 3).unwrap();
        assert!((b.seconds / a.seconds - 2.0).abs() < 1e-12);
        // band spacing is range / (n_mels + 1): 97/49
        assert!((b.mel_span / a.mel_span - 97.0 / 49.0).abs() < 1e-12);
        assert!((b.mel_span / a.mel_span - 2.0).abs() / 2.0 < 0.025);
    }

    #[test]
    fn sweep_keeps_order_and_inline_errors() {
        let mut configs = crate::mel::enumerate_grid();
        configs.truncate(5);
        configs.insert(2, MelConfig::new(12000, 64, 1, Compression::Db));
        let out = grid_cost_sweep(ArchKind::VggCnn, &configs);
        assert_eq!(out.len(), 6);
        for (e, c) in out.iter().zip(&configs) {
            assert_eq!(&e.config, c);
        }
        assert!(out[2].report.is_err());
        assert!(out
            .iter()
            .enumerate()
            .all(|(i, e)| i == 2 || e.report.is_ok()));
    }
}
