//! Published reference data: clip frame counts and reported tagging scores.
//!
//! Scores are carried only to annotate reports. They come from GPU training
//! runs on the full datasets and are never recomputed here.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arch::ArchKind;
use crate::dsp::PaddingMode;
use crate::mel::{frame_count, Compression, BASE_HOP, DEFAULT_FRAME_SIZE};

/// Label attached to every published score in emitted reports.
pub const PUBLISHED_LABEL: &str = "published, not reproduced";

/// Nominal clip length; at 12 kHz this gives the published 1366 frames.
pub const CLIP_SECONDS: f64 = 29.12;

/// Published frame counts of a full clip per (sample rate, hop multiplier).
pub fn published_frames(sample_rate: u32, hop_multiplier: u32) -> Option<usize> {
    let frames = match (sample_rate, hop_multiplier) {
        (12000, 1) => 1366,
        (12000, 2) => 683,
        (12000, 3) => 456,
        (12000, 4) => 342,
        (12000, 5) => 274,
        (12000, 10) => 137,
        (16000, 1) => 1820,
        (16000, 2) => 910,
        (16000, 3) => 607,
        (16000, 4) => 455,
        (16000, 5) => 364,
        (16000, 10) => 182,
        _ => return None,
    };
    Some(frames)
}

pub fn clip_samples(sample_rate: u32) -> usize {
    (CLIP_SECONDS * sample_rate as f64).round() as usize
}

/// Frames of a full clip: the published count when one exists, otherwise
/// the centred frame count of a [`CLIP_SECONDS`] clip.
pub fn clip_frames(sample_rate: u32, hop_multiplier: u32) -> usize {
    published_frames(sample_rate, hop_multiplier).unwrap_or_else(|| {
        frame_count(
            clip_samples(sample_rate).max(1),
            BASE_HOP * hop_multiplier.max(1) as usize,
            PaddingMode::CenterReflect,
            DEFAULT_FRAME_SIZE,
        )
        .expect("positive sample count and hop")
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    Mtat,
    Msd,
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Benchmark::Mtat => "mtat",
            Benchmark::Msd => "msd",
        })
    }
}

impl std::str::FromStr for Benchmark {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mtat" => Ok(Benchmark::Mtat),
            "msd" => Ok(Benchmark::Msd),
            other => Err(crate::error::Error::invalid(format!(
                "unknown benchmark {other:?}"
            ))),
        }
    }
}

/// One reported result, scores in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PublishedScore {
    pub arch: ArchKind,
    pub benchmark: Benchmark,
    pub sample_rate: u32,
    pub n_mels: usize,
    pub hop_multiplier: u32,
    pub compression: Compression,
    pub roc_auc: f64,
    pub pr_auc: f64,
}

const fn score(
    arch: ArchKind,
    benchmark: Benchmark,
    sample_rate: u32,
    n_mels: usize,
    hop_multiplier: u32,
    roc_auc: f64,
    pr_auc: f64,
) -> PublishedScore {
    score_c(
        arch,
        benchmark,
        sample_rate,
        n_mels,
        hop_multiplier,
        Db,
        roc_auc,
        pr_auc,
    )
}

#[allow(clippy::too_many_arguments)]
const fn score_c(
    arch: ArchKind,
    benchmark: Benchmark,
    sample_rate: u32,
    n_mels: usize,
    hop_multiplier: u32,
    compression: Compression,
    roc_auc: f64,
    pr_auc: f64,
) -> PublishedScore {
    PublishedScore {
        arch,
        benchmark,
        sample_rate,
        n_mels,
        hop_multiplier,
        compression,
        roc_auc,
        pr_auc,
    }
}

use ArchKind::{MusicnnFrontend as Mus, VggCnn as Vgg};
use Benchmark::{Msd, Mtat};
use Compression::{Db, Log};

pub const PUBLISHED_SCORES: [PublishedScore; 48] = [
    // MUSICNN on MTAT
    score(Mus, Mtat, 12000, 128, 1, 90.40, 38.54),
    score(Mus, Mtat, 12000, 96, 1, 90.50, 37.70),
    score(Mus, Mtat, 12000, 48, 1, 90.33, 37.80),
    score(Mus, Mtat, 16000, 128, 1, 90.83, 38.92),
    score(Mus, Mtat, 16000, 96, 1, 90.60, 38.09),
    score(Mus, Mtat, 16000, 48, 1, 90.50, 37.70),
    // VGG-CNN on MSD
    score(Vgg, Msd, 12000, 128, 1, 86.48, 27.56),
    score(Vgg, Msd, 12000, 96, 1, 86.67, 27.70),
    score(Vgg, Msd, 12000, 48, 1, 86.53, 27.27),
    score(Vgg, Msd, 12000, 128, 2, 86.28, 27.24),
    score(Vgg, Msd, 12000, 96, 2, 86.18, 26.93),
    score(Vgg, Msd, 12000, 48, 2, 85.86, 26.42),
    score(Vgg, Msd, 16000, 128, 1, 86.84, 28.10),
    score(Vgg, Msd, 16000, 96, 1, 86.71, 28.06),
    score(Vgg, Msd, 16000, 48, 1, 86.73, 27.78),
    score(Vgg, Msd, 16000, 128, 2, 86.34, 27.06),
    score(Vgg, Msd, 16000, 96, 2, 86.63, 27.70),
    score(Vgg, Msd, 16000, 48, 2, 86.41, 26.83),
    // MUSICNN on MSD
    score(Mus, Msd, 12000, 128, 1, 87.10, 26.97),
    score(Mus, Msd, 12000, 96, 1, 87.16, 27.10),
    score(Mus, Msd, 12000, 48, 1, 86.99, 26.66),
    score(Mus, Msd, 16000, 128, 1, 87.21, 26.91),
    score(Mus, Msd, 16000, 96, 1, 87.21, 26.96),
    score(Mus, Msd, 16000, 48, 1, 87.10, 26.64),
    // VGG-CNN on MTAT, mean of three runs
    score_c(Vgg, Mtat, 12000, 128, 1, Log, 88.67, 35.47),
    score_c(Vgg, Mtat, 12000, 96, 1, Log, 88.83, 35.18),
    score_c(Vgg, Mtat, 12000, 48, 1, Log, 89.10, 35.62),
    score_c(Vgg, Mtat, 12000, 128, 2, Log, 88.66, 35.56),
    score_c(Vgg, Mtat, 12000, 96, 2, Log, 88.37, 35.23),
    score_c(Vgg, Mtat, 12000, 48, 2, Log, 88.64, 35.35),
    score_c(Vgg, Mtat, 12000, 128, 1, Db, 88.76, 35.83),
    score_c(Vgg, Mtat, 12000, 96, 1, Db, 88.65, 35.33),
    score_c(Vgg, Mtat, 12000, 48, 1, Db, 89.02, 35.87),
    score_c(Vgg, Mtat, 12000, 128, 2, Db, 88.53, 35.44),
    score_c(Vgg, Mtat, 12000, 96, 2, Db, 88.58, 35.13),
    score_c(Vgg, Mtat, 12000, 48, 2, Db, 88.68, 35.71),
    score_c(Vgg, Mtat, 16000, 128, 1, Log, 88.81, 35.48),
    score_c(Vgg, Mtat, 16000, 96, 1, Log, 88.91, 35.65),
    score_c(Vgg, Mtat, 16000, 48, 1, Log, 89.17, 36.17),
    score_c(Vgg, Mtat, 16000, 128, 2, Log, 88.51, 35.41),
    score_c(Vgg, Mtat, 16000, 96, 2, Log, 88.78, 35.70),
    score_c(Vgg, Mtat, 16000, 48, 2, Log, 88.98, 35.78),
    score_c(Vgg, Mtat, 16000, 128, 1, Db, 89.07, 35.73),
    score_c(Vgg, Mtat, 16000, 96, 1, Db, 89.12, 35.97),
    score_c(Vgg, Mtat, 16000, 48, 1, Db, 89.32, 36.41),
    score_c(Vgg, Mtat, 16000, 128, 2, Db, 88.81, 35.79),
    score_c(Vgg, Mtat, 16000, 96, 2, Db, 88.86, 35.97),
    score_c(Vgg, Mtat, 16000, 48, 2, Db, 88.97, 35.89),
];

pub fn published_score(
    arch: ArchKind,
    benchmark: Benchmark,
    sample_rate: u32,
    n_mels: usize,
    hop_multiplier: u32,
    compression: Compression,
) -> Option<&'static PublishedScore> {
    PUBLISHED_SCORES.iter().find(|s| {
        s.arch == arch
            && s.benchmark == benchmark
            && s.sample_rate == sample_rate
            && s.n_mels == n_mels
            && s.hop_multiplier == hop_multiplier
            && s.compression == compression
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_follow_centred_count_at_12k() {
        for hop in [1u32, 2, 3, 4, 5, 10] {
            let computed = frame_count(
                clip_samples(12000),
                256 * hop as usize,
                PaddingMode::CenterReflect,
                512,
            )
            .unwrap();
            assert_eq!(Some(computed), published_frames(12000, hop), "hop x{hop}");
        }
    }

    #[test]
    fn off_table_frames_fall_back() {
        assert_eq!(published_frames(22050, 1), None);
        assert_eq!(clip_frames(22050, 1), 1 + 642_096 / 256);
        assert_eq!(clip_frames(16000, 1), 1820);
    }

    #[test]
    fn lookup() {
        let s = published_score(Mus, Mtat, 12000, 96, 1, Compression::Db).unwrap();
        assert_eq!(s.roc_auc, 90.50);
        let s = published_score(Vgg, Msd, 12000, 96, 1, Compression::Db).unwrap();
        assert_eq!(s.roc_auc, 86.67);
        assert!(published_score(Vgg, Msd, 12000, 96, 1, Compression::Log).is_none());
        let s = published_score(Vgg, Mtat, 16000, 48, 2, Compression::Log).unwrap();
        assert_eq!((s.roc_auc, s.pr_auc), (88.98, 35.78));
        assert!(published_score(Vgg, Msd, 12000, 96, 10, Compression::Db).is_none());
    }
}
