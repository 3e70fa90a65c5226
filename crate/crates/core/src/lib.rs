//! Mel-spectrogram input resolution toolkit: feature extraction over a
//! configuration grid, VGG/MUSICNN shape and MAC accounting, tagging
//! metrics and dataset manifests.

pub mod arch;
pub mod audio_io;
pub mod cli;
pub mod dataset;
pub mod dsp;
pub mod error;
pub mod mel;
pub mod metrics;
pub mod mspec;
pub mod reference;
pub mod report;
pub mod resample;

pub use arch::{
    count_macs, propagate_shapes, vgg_pooling_plan, ArchKind, ArchSpec, CostReport, PoolingPlan,
};
pub use dsp::{AudioBuffer, FrameGrid, PaddingMode};
pub use error::{Error, Result};
pub use mel::{enumerate_grid, mel_spectrogram, Compression, MelConfig, MelSpectrogram};
pub use metrics::{macro_summary, pr_auc, roc_auc, t_test_independent, MetricSummary};
