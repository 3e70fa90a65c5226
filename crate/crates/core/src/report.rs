//! Cost and trade-off tables with byte-deterministic CSV/JSON rendering.

use std::collections::HashMap;

use serde::Serialize;

use crate::arch::{grid_cost_sweep_with, input_dims, ArchKind, CostReport, MusicnnOptions};
use crate::dataset::payload_size;
use crate::error::{Error, Result};
use crate::mel::MelConfig;
use crate::metrics::MetricSummary;
use crate::reference::{published_score, Benchmark, PUBLISHED_LABEL};

/// Format with 6 significant digits in fixed notation.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (5 - exp).max(0) as usize;
    format!("{:.*}", decimals, x)
}

#[derive(Debug, Clone, Serialize)]
pub struct CostRow {
    pub config_id: String,
    pub sample_rate: u32,
    pub n_mels: usize,
    pub hop_multiplier: u32,
    pub compression: String,
    pub input_freq: usize,
    pub input_time: usize,
    pub layer_names: Vec<String>,
    pub per_layer_macs: Vec<u64>,
    pub total_macs: u64,
    pub gmacs: f64,
    pub feature_bytes: u64,
    /// Total MACs relative to the 96-band, x1 config at the same sample rate.
    pub mac_ratio: f64,
    /// Feature payload relative to the same baseline.
    pub storage_ratio: f64,
    pub approximate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CostTable {
    pub arch: ArchKind,
    pub rows: Vec<CostRow>,
    /// Configs that could not be costed, with the reason.
    pub failures: Vec<(String, String)>,
}

fn sort_key(c: &MelConfig) -> (u32, std::cmp::Reverse<usize>, u32, crate::mel::Compression) {
    (
        c.sample_rate,
        std::cmp::Reverse(c.n_mels),
        c.hop_multiplier,
        c.compression,
    )
}

struct Baseline {
    macs: u64,
    payload: u64,
}

fn baseline_for(
    arch: ArchKind,
    template: &MelConfig,
    musicnn: &MusicnnOptions,
) -> Result<Baseline> {
    let mut cfg = MelConfig::new(template.sample_rate, 96, 1, template.compression);
    cfg.target_frames = None;
    let (f, t, spec) = input_dims(arch, &cfg, musicnn)?;
    let report = crate::arch::count_macs(&spec, f, t)?;
    Ok(Baseline {
        macs: report.total_macs,
        payload: payload_size(f, t, 4),
    })
}

/// Cost every config, sorted by (sample rate, bands descending, hop, compression).
pub fn cost_table(arch: ArchKind, configs: &[MelConfig], musicnn: &MusicnnOptions) -> CostTable {
    let mut configs = configs.to_vec();
    configs.sort_by_key(sort_key);
    let sweep = grid_cost_sweep_with(arch, &configs, musicnn);

    let mut baselines: HashMap<u32, Result<Baseline>> = HashMap::new();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for entry in sweep {
        let cfg = entry.config;
        let report: CostReport = match entry.report {
            Ok(r) => r,
            Err(e) => {
                failures.push((cfg.id(), e.to_string()));
                continue;
            }
        };
        let base = baselines
            .entry(cfg.sample_rate)
            .or_insert_with(|| baseline_for(arch, &cfg, musicnn));
        let base = match base {
            Ok(b) => b,
            Err(e) => {
                failures.push((cfg.id(), format!("baseline: {e}")));
                continue;
            }
        };
        let (f, t, _) = input_dims(arch, &cfg, musicnn).expect("costed above");
        rows.push(CostRow {
            config_id: cfg.id(),
            sample_rate: cfg.sample_rate,
            n_mels: cfg.n_mels,
            hop_multiplier: cfg.hop_multiplier,
            compression: cfg.compression.to_string(),
            input_freq: f,
            input_time: t,
            mac_ratio: report.total_macs as f64 / base.macs as f64,
            storage_ratio: payload_size(f, t, 4) as f64 / base.payload as f64,
            layer_names: report.layer_names,
            per_layer_macs: report.per_layer_macs,
            total_macs: report.total_macs,
            gmacs: report.gmacs,
            feature_bytes: report.feature_bytes,
            approximate: report.approximate,
        });
    }
    CostTable {
        arch,
        rows,
        failures,
    }
}

impl CostTable {
    pub fn to_csv(&self) -> Result<String> {
        let n_layers = self
            .rows
            .iter()
            .map(|r| r.per_layer_macs.len())
            .max()
            .unwrap_or(0);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = [
            "config_id",
            "sample_rate",
            "n_mels",
            "hop_multiplier",
            "compression",
            "input_freq",
            "input_time",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend((1..=n_layers).map(|i| format!("macs_{i}")));
        header.extend(
            [
                "total_macs",
                "gmacs",
                "feature_bytes",
                "mac_ratio",
                "storage_ratio",
                "approximate",
            ]
            .iter()
            .map(|s| s.to_string()),
        );
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.config_id.clone(),
                r.sample_rate.to_string(),
                r.n_mels.to_string(),
                r.hop_multiplier.to_string(),
                r.compression.clone(),
                r.input_freq.to_string(),
                r.input_time.to_string(),
            ];
            rec.extend((0..n_layers).map(|i| {
                r.per_layer_macs
                    .get(i)
                    .map(u64::to_string)
                    .unwrap_or_default()
            }));
            rec.extend([
                r.total_macs.to_string(),
                fmt_sig6(r.gmacs),
                r.feature_bytes.to_string(),
                fmt_sig6(r.mac_ratio),
                fmt_sig6(r.storage_ratio),
                r.approximate.to_string(),
            ]);
            w.write_record(&rec)?;
        }
        finish_csv(w)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

#[derive(Debug, Clone, Serialize)]
pub struct TradeoffRow {
    pub config_id: String,
    pub gmacs: f64,
    pub feature_bytes: u64,
    pub mac_ratio: f64,
    pub storage_ratio: f64,
    pub published_roc: Option<f64>,
    pub published_pr: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TradeoffTable {
    pub arch: ArchKind,
    pub benchmark: Benchmark,
    pub published_label: &'static str,
    pub rows: Vec<TradeoffRow>,
    pub failures: Vec<(String, String)>,
}

/// Cost table joined with published scores where they exist.
pub fn tradeoff_table(
    arch: ArchKind,
    benchmark: Benchmark,
    configs: &[MelConfig],
    musicnn: &MusicnnOptions,
) -> TradeoffTable {
    let costs = cost_table(arch, configs, musicnn);
    let rows = costs
        .rows
        .iter()
        .map(|r| {
            let compression = r.compression.parse().expect("rendered from enum");
            let score = published_score(
                arch,
                benchmark,
                r.sample_rate,
                r.n_mels,
                r.hop_multiplier,
                compression,
            );
            TradeoffRow {
                config_id: r.config_id.clone(),
                gmacs: r.gmacs,
                feature_bytes: r.feature_bytes,
                mac_ratio: r.mac_ratio,
                storage_ratio: r.storage_ratio,
                published_roc: score.map(|s| s.roc_auc),
                published_pr: score.map(|s| s.pr_auc),
            }
        })
        .collect();
    TradeoffTable {
        arch,
        benchmark,
        published_label: PUBLISHED_LABEL,
        rows,
        failures: costs.failures,
    }
}

impl TradeoffTable {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "config_id",
            "gmacs",
            "feature_bytes",
            "mac_ratio",
            "storage_ratio",
            "published_roc",
            "published_pr",
            "published_note",
        ])?;
        let opt = |v: Option<f64>| v.map(fmt_sig6).unwrap_or_default();
        for r in &self.rows {
            let note = if r.published_roc.is_some() {
                format!("{} ({})", PUBLISHED_LABEL, self.benchmark)
            } else {
                String::new()
            };
            w.write_record([
                r.config_id.clone(),
                fmt_sig6(r.gmacs),
                r.feature_bytes.to_string(),
                fmt_sig6(r.mac_ratio),
                fmt_sig6(r.storage_ratio),
                opt(r.published_roc),
                opt(r.published_pr),
                note,
            ])?;
        }
        finish_csv(w)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn summary_to_csv(summary: &MetricSummary) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["tag", "roc_auc", "pr_auc", "status"])?;
    for ((tag, roc), pr) in summary
        .tags
        .iter()
        .zip(&summary.per_tag_roc)
        .zip(&summary.per_tag_pr)
    {
        w.write_record([tag.as_str(), &fmt_sig6(*roc), &fmt_sig6(*pr), "ok"])?;
    }
    for tag in &summary.skipped_tags {
        w.write_record([tag.as_str(), "", "", "skipped"])?;
    }
    w.write_record([
        "(macro)",
        &fmt_sig6(summary.macro_roc),
        &fmt_sig6(summary.macro_pr),
        "ok",
    ])?;
    finish_csv(w)
}

pub fn summary_to_json(summary: &MetricSummary) -> Result<String> {
    Ok(serde_json::to_string_pretty(summary)?)
}
