use proptest::prelude::*;

use melgauge_core::arch::{count_macs, propagate_shapes, ArchSpec, PoolingPlan};
use melgauge_core::dataset::{
    canonical_split, payload_size, storage_size, top_k_tags, DatasetManifest, ManifestItem,
    SplitScheme, MTAT_FOLDERS,
};
use melgauge_core::dsp::{hann_window, stft_power, AudioBuffer, FrameGrid, PaddingMode};
use melgauge_core::mel::{
    compress_db, compress_log, frame_count, hz_to_mel_slaney, mel_to_hz, Compression, MelConfig,
};
use melgauge_core::metrics::{pr_auc, roc_auc, t_test_independent};

fn labelled(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (2..=max)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(0u8..8, n)
                    .prop_map(|v| v.into_iter().map(f64::from).collect()),
                prop::collection::vec(0u8..2, n),
            )
        })
        .prop_filter("both classes", |(_, l)| l.contains(&0) && l.contains(&1))
}

proptest! {
    #[test]
    fn mel_map_inverts(hz in 0.0f64..24_000.0) {
        let back = mel_to_hz(hz_to_mel_slaney(hz).unwrap());
        prop_assert!((back - hz).abs() <= 1e-9 * hz.max(1.0));
    }

    #[test]
    fn mel_map_is_increasing(a in 0.0f64..20_000.0, d in 1e-3f64..1000.0) {
        prop_assert!(hz_to_mel_slaney(a + d).unwrap() > hz_to_mel_slaney(a).unwrap());
    }

    #[test]
    fn compressions_are_monotone(x in 0.0f64..10.0, d in 1e-6f64..1.0) {
        prop_assert!(compress_log(x + d) > compress_log(x));
        prop_assert!(compress_db(x + d, 1e-10) >= compress_db(x, 1e-10));
    }

    #[test]
    fn doubling_hop_halves_centred_frames(k in 1usize..5000, hop in 1usize..2048) {
        let n = 2 * hop * k;
        let fine = frame_count(n, hop, PaddingMode::CenterReflect, 512).unwrap();
        let coarse = frame_count(n, 2 * hop, PaddingMode::CenterReflect, 512).unwrap();
        prop_assert_eq!(fine - 1, 2 * (coarse - 1));
    }

    #[test]
    fn storage_is_linear(mels in 1usize..256, frames in 1usize..4000, k in 1usize..5) {
        let cfg = MelConfig::new(12000, mels, 1, Compression::Db);
        prop_assert_eq!(storage_size(&cfg, frames, 4) - 40, payload_size(mels, frames, 4));
        prop_assert_eq!(payload_size(k * mels, frames, 4), k as u64 * payload_size(mels, frames, 4));
        prop_assert_eq!(payload_size(mels, k * frames, 4), k as u64 * payload_size(mels, frames, 4));
    }

    #[test]
    fn power_spectrum_is_nonnegative(samples in prop::collection::vec(-1.0f64..1.0, 1..3000)) {
        let audio = AudioBuffer::new(samples, 8000).unwrap();
        let grid = FrameGrid::new(256, 128, PaddingMode::CenterReflect).unwrap();
        let spec = stft_power(&audio, &grid).unwrap();
        prop_assert!(spec.bins.iter().all(|&v| v >= 0.0 && v.is_finite()));
        prop_assert_eq!(spec.bins.nrows(), 129);
    }

    #[test]
    fn hann_is_symmetric(half in 1usize..512) {
        let n = 2 * half;
        let w = hann_window(n).unwrap();
        for k in 1..n {
            prop_assert!((w[k] - w[n - k]).abs() < 1e-12);
        }
    }

    #[test]
    fn roc_is_rank_invariant((scores, labels) in labelled(40)) {
        let a = roc_auc(&scores, &labels).unwrap();
        let warped: Vec<f64> = scores.iter().map(|s| (s * 0.7).exp()).collect();
        prop_assert!((roc_auc(&warped, &labels).unwrap() - a).abs() < 1e-12);
        let flipped: Vec<f64> = scores.iter().map(|s| -s).collect();
        prop_assert!((roc_auc(&flipped, &labels).unwrap() - (1.0 - a)).abs() < 1e-12);
    }

    #[test]
    fn pr_is_bounded((scores, labels) in labelled(40)) {
        let p = pr_auc(&scores, &labels).unwrap();
        prop_assert!(p > 0.0 && p <= 1.0);
        let perfect: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
        prop_assert_eq!(pr_auc(&perfect, &labels).unwrap(), 1.0);
    }

    #[test]
    fn t_test_is_antisymmetric(
        a in prop::collection::vec(-5.0f64..5.0, 3..20),
        b in prop::collection::vec(-5.0f64..5.0, 3..20),
    ) {
        if let (Ok(ab), Ok(ba)) = (t_test_independent(&a, &b), t_test_independent(&b, &a)) {
            prop_assert!((ab.t + ba.t).abs() < 1e-12);
            prop_assert!((ab.p - ba.p).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab.p));
        }
    }

    #[test]
    fn macs_scale_with_width(freq in 1usize..6, time in 1usize..6, scale in 2usize..4) {
        let plan = PoolingPlan { freq_pools: [1; 4], time_pools: [1; 4] };
        let arch = ArchSpec::vgg(plan);
        let base = count_macs(&arch, freq, time).unwrap();
        let wide = count_macs(&arch, freq * scale, time).unwrap();
        // Same padding keeps every conv output proportional to its input.
        let conv = |r: &melgauge_core::arch::CostReport| r.per_layer_macs[..4].iter().sum::<u64>();
        prop_assert_eq!(conv(&wide), scale as u64 * conv(&base));
        prop_assert!(propagate_shapes(&arch, freq, time).is_ok());
    }

    #[test]
    fn top_k_is_idempotent(flags in prop::collection::vec(prop::collection::vec(0u8..2, 6), 1..30), k in 1usize..6) {
        let manifest = manifest_from(&flags);
        let once = top_k_tags(&manifest, k).unwrap();
        let twice = top_k_tags(&once, k).unwrap();
        prop_assert_eq!(once.tag_names.len(), k);
        prop_assert_eq!(&once, &twice);
    }

    #[test]
    fn split_covers_every_clip(folders in prop::collection::vec(0usize..16, 1..80)) {
        let flags: Vec<Vec<u8>> = folders.iter().map(|_| vec![1, 0]).collect();
        let mut manifest = manifest_from(&flags);
        for (item, f) in manifest.items.iter_mut().zip(&folders) {
            item.folder = MTAT_FOLDERS[*f].to_string();
        }
        let split = canonical_split(&manifest, SplitScheme::Mtat12_1_3).unwrap();
        let (tr, va, te) = split.sizes();
        prop_assert_eq!(tr + va + te, manifest.items.len());
        for item in &manifest.items {
            prop_assert!(split.split_of(&item.clip_id).is_some());
        }
    }
}

fn manifest_from(flags: &[Vec<u8>]) -> DatasetManifest {
    let n_tags = flags.first().map_or(0, Vec::len);
    DatasetManifest {
        tag_names: (0..n_tags).map(|t| format!("tag{t}")).collect(),
        items: flags
            .iter()
            .enumerate()
            .map(|(i, f)| ManifestItem {
                clip_id: format!("clip{i}"),
                audio_path: format!("0/clip{i}.mp3"),
                folder: "0".into(),
                tag_flags: f.clone(),
            })
            .collect(),
    }
}
