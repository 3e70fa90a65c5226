//! Command implementations behind the `melgauge` binary.
//!
//! Every command returns an [`Outcome`] instead of printing, so tests can
//! check output bytes and exit codes without spawning processes.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::arch::{vgg_pooling_plan, ArchKind, MusicnnOptions};
use crate::audio_io::load_audio;
use crate::dataset::storage_size;
use crate::error::{Error, Result};
use crate::mel::{
    enumerate_grid, is_grid_cell, mel_filterbank, mel_spectrogram_with, Compression, MelConfig,
    GRID_COMPRESSIONS, GRID_FULL_MELS, GRID_HOP_MULTIPLIERS, GRID_REDUCED_MELS, GRID_SAMPLE_RATES,
};
use crate::metrics::{macro_summary, TagTable};
use crate::mspec::write_mspec;
use crate::reference::{clip_frames, Benchmark};
use crate::report::{cost_table, summary_to_csv, summary_to_json, tradeoff_table};
use crate::resample::resample_rational;

#[derive(Debug, Parser)]
#[command(
    name = "melgauge",
    version,
    about = "Mel-spectrogram resolution cost and metric toolkit"
)]
pub struct Cli {
    /// Worker threads for parallel stages.
    #[arg(long, global = true, env = "MELGAUGE_WORKERS", value_parser = clap::value_parser!(u32).range(1..))]
    pub workers: Option<u32>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute mel spectrograms and write one .mspec file per input.
    Extract(ExtractArgs),
    /// Analytical MAC and storage cost over a set of configs.
    Cost(CostArgs),
    /// Print the VGG pooling plan for one input resolution.
    Adapt(AdaptArgs),
    /// Per-tag and macro ROC/PR AUC from prediction and label CSVs.
    Evaluate(EvaluateArgs),
    /// List the selected configs with frame counts and storage.
    Grid(GridArgs),
    /// Cost table joined with published scores.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Selectors {
    #[arg(long = "sample-rate", value_delimiter = ',')]
    pub sample_rates: Vec<u32>,
    #[arg(long = "mels", value_delimiter = ',')]
    pub mels: Vec<usize>,
    #[arg(long = "hop-mult", value_delimiter = ',')]
    pub hop_mults: Vec<u32>,
    #[arg(long = "compression", value_delimiter = ',', value_parser = parse_compression)]
    pub compressions: Vec<Compression>,
    /// Reject selector values outside the experimental grid.
    #[arg(long)]
    pub grid_strict: bool,
}

fn parse_compression(s: &str) -> std::result::Result<Compression, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_arch(s: &str) -> std::result::Result<ArchKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_benchmark(s: &str) -> std::result::Result<Benchmark, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long, default_value_t = 12000)]
    pub sample_rate: u32,
    #[arg(long, default_value_t = 96)]
    pub mels: usize,
    #[arg(long, default_value_t = 1)]
    pub hop_mult: u32,
    #[arg(long, default_value = "dB", value_parser = parse_compression)]
    pub compression: Compression,
    /// Crop or pad every output to this many frames.
    #[arg(long)]
    pub frames: Option<usize>,
    /// Sample rate of headerless little-endian f32 inputs.
    #[arg(long)]
    pub input_rate: Option<u32>,
    #[arg(long)]
    pub grid_strict: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    #[arg(long, default_value = "vgg", value_parser = parse_arch)]
    pub arch: ArchKind,
    #[command(flatten)]
    pub selectors: Selectors,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, default_value = "vgg", value_parser = parse_arch)]
    pub arch: ArchKind,
    #[arg(long, default_value = "mtat", value_parser = parse_benchmark)]
    pub benchmark: Benchmark,
    #[command(flatten)]
    pub selectors: Selectors,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub selectors: Selectors,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct AdaptArgs {
    #[arg(long)]
    pub mels: usize,
    #[arg(long, default_value_t = 1)]
    pub hop_mult: u32,
    #[arg(long, default_value_t = 12000)]
    pub sample_rate: u32,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Result of one command: report bytes, diagnostics and exit status.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub diagnostics: Vec<String>,
    pub exit_code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self {
            stdout,
            ..Self::default()
        }
    }
}

/// Expand selectors into configs.
///
/// Grid cells matching the selectors are always kept. Combinations that are
/// off-grid only because a reduced band count was paired with a coarser hop
/// are dropped. Values outside the grid are rejected under `grid_strict`,
/// otherwise they are kept with a warning.
pub fn resolve_selection(sel: &Selectors) -> Result<(Vec<MelConfig>, Vec<String>)> {
    let all_mels: Vec<usize> = GRID_FULL_MELS
        .iter()
        .chain(&GRID_REDUCED_MELS)
        .copied()
        .collect();
    let pick = |given: &[u32], grid: &[u32]| {
        if given.is_empty() {
            grid.to_vec()
        } else {
            given.to_vec()
        }
    };
    let rates = pick(&sel.sample_rates, &GRID_SAMPLE_RATES);
    let hops = pick(&sel.hop_mults, &GRID_HOP_MULTIPLIERS);
    let mels = if sel.mels.is_empty() {
        all_mels.clone()
    } else {
        sel.mels.clone()
    };
    let comps = if sel.compressions.is_empty() {
        GRID_COMPRESSIONS.to_vec()
    } else {
        sel.compressions.clone()
    };

    let mut off_grid = Vec::new();
    off_grid.extend(
        rates
            .iter()
            .filter(|r| !GRID_SAMPLE_RATES.contains(r))
            .map(|r| format!("sample rate {r}")),
    );
    off_grid.extend(
        mels.iter()
            .filter(|m| !all_mels.contains(m))
            .map(|m| format!("{m} mel bands")),
    );
    off_grid.extend(
        hops.iter()
            .filter(|h| !GRID_HOP_MULTIPLIERS.contains(h))
            .map(|h| format!("hop multiplier x{h}")),
    );
    if sel.grid_strict && !off_grid.is_empty() {
        return Err(Error::invalid(format!(
            "outside the experimental grid: {}",
            off_grid.join(", ")
        )));
    }

    let mut configs = Vec::new();
    let mut warnings: Vec<String> = off_grid
        .iter()
        .map(|v| format!("warning: {v} is outside the experimental grid"))
        .collect();
    for &rate in &rates {
        for &m in &mels {
            for &hop in &hops {
                for &comp in &comps {
                    let explicit_off = !GRID_SAMPLE_RATES.contains(&rate)
                        || !all_mels.contains(&m)
                        || !GRID_HOP_MULTIPLIERS.contains(&hop);
                    if is_grid_cell(rate, m, hop) || explicit_off {
                        configs.push(MelConfig::new(rate, m, hop, comp));
                    }
                }
            }
        }
    }
    configs.dedup();
    if configs.is_empty() {
        return Err(Error::invalid("selectors resolve to no configs"));
    }
    if configs.len() < rates.len() * mels.len() * hops.len() * comps.len() {
        warnings.push(format!(
            "note: {} selected combinations are not grid cells and were skipped",
            rates.len() * mels.len() * hops.len() * comps.len() - configs.len()
        ));
    }
    Ok((configs, warnings))
}

fn thread_pool(workers: Option<u32>) -> Result<rayon::ThreadPool> {
    let n = match workers {
        Some(n) => n as usize,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("worker pool: {e}")))
}

fn emit(mut outcome: Outcome, out: Option<&Path>) -> Result<Outcome> {
    if let Some(path) = out {
        fs::write(path, &outcome.stdout)?;
        outcome.stdout.clear();
    }
    Ok(outcome)
}

/// Run a parsed command line.
pub fn run(cli: Cli) -> Outcome {
    let pool = match thread_pool(cli.workers) {
        Ok(p) => p,
        Err(e) => return failure(e),
    };
    let result = pool.install(|| match cli.command {
        Command::Extract(a) => cmd_extract(&a),
        Command::Cost(a) => cmd_cost(&a),
        Command::Adapt(a) => cmd_adapt(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Grid(a) => cmd_grid(&a),
        Command::Report(a) => cmd_report(&a),
    });
    result.unwrap_or_else(failure)
}

fn failure(e: Error) -> Outcome {
    Outcome {
        stdout: String::new(),
        diagnostics: vec![format!("error: {e}")],
        exit_code: 2,
    }
}

fn extract_one(
    path: &Path,
    args: &ExtractArgs,
    config: &MelConfig,
    fb: &crate::mel::MelFilterbank,
) -> Result<PathBuf> {
    let audio = load_audio(path, args.input_rate)?;
    let audio = if audio.sample_rate() == config.sample_rate {
        audio
    } else {
        resample_rational(&audio, config.sample_rate)?
    };
    let spec = mel_spectrogram_with(fb, &audio, config)?;
    let stem = path
        .file_stem()
        .ok_or_else(|| Error::invalid(format!("{} has no file name", path.display())))?;
    let target = args.out.join(stem).with_extension("mspec");
    let file = fs::File::create(&target)?;
    write_mspec(std::io::BufWriter::new(file), &spec)?;
    Ok(target)
}

pub fn cmd_extract(args: &ExtractArgs) -> Result<Outcome> {
    let mut config = MelConfig::new(args.sample_rate, args.mels, args.hop_mult, args.compression);
    config.target_frames = args.frames;
    config.validate()?;
    let mut outcome = Outcome::default();
    if !config.is_grid_cell() {
        if args.grid_strict {
            config.check_grid()?;
        }
        outcome.diagnostics.push(format!(
            "warning: {} is outside the experimental grid",
            config.id()
        ));
    }
    if args.inputs.is_empty() {
        outcome
            .diagnostics
            .push("warning: no input files given; nothing to do".into());
        return Ok(outcome);
    }
    fs::create_dir_all(&args.out)?;
    let fb = mel_filterbank(&config)?;
    let results: Vec<Result<PathBuf>> = args
        .inputs
        .par_iter()
        .map(|p| extract_one(p, args, &config, &fb))
        .collect();
    let mut failed = 0;
    for (input, r) in args.inputs.iter().zip(results) {
        match r {
            Ok(written) => {
                outcome
                    .stdout
                    .push_str(&format!("{}\t{}\n", input.display(), written.display()))
            }
            Err(e) => {
                failed += 1;
                outcome
                    .diagnostics
                    .push(format!("error: {}: {e}", input.display()));
            }
        }
    }
    if failed > 0 {
        outcome
            .diagnostics
            .push(format!("{failed} of {} inputs failed", args.inputs.len()));
        outcome.exit_code = 1;
    }
    Ok(outcome)
}

fn table_outcome(
    csv: Result<String>,
    json: Result<String>,
    format: Format,
    failures: &[(String, String)],
    warnings: Vec<String>,
) -> Result<Outcome> {
    let mut outcome = Outcome::ok(match format {
        Format::Json => json?,
        Format::Csv | Format::Text => csv?,
    });
    outcome.diagnostics = warnings;
    for (id, reason) in failures {
        outcome.diagnostics.push(format!("error: {id}: {reason}"));
    }
    if !failures.is_empty() {
        outcome.exit_code = 1;
    }
    Ok(outcome)
}

pub fn cmd_cost(args: &CostArgs) -> Result<Outcome> {
    let (configs, warnings) = resolve_selection(&args.selectors)?;
    let table = cost_table(args.arch, &configs, &MusicnnOptions::default());
    let outcome = table_outcome(
        table.to_csv(),
        table.to_json(),
        args.format,
        &table.failures,
        warnings,
    )?;
    emit(outcome, args.out.as_deref())
}

pub fn cmd_report(args: &ReportArgs) -> Result<Outcome> {
    let (configs, warnings) = resolve_selection(&args.selectors)?;
    let table = tradeoff_table(
        args.arch,
        args.benchmark,
        &configs,
        &MusicnnOptions::default(),
    );
    let outcome = table_outcome(
        table.to_csv(),
        table.to_json(),
        args.format,
        &table.failures,
        warnings,
    )?;
    emit(outcome, args.out.as_deref())
}

#[derive(Serialize)]
struct AdaptJson {
    n_mels: usize,
    hop_multiplier: u32,
    sample_rate: u32,
    time_pools: [usize; 4],
    freq_pools: [usize; 4],
}

pub fn cmd_adapt(args: &AdaptArgs) -> Result<Outcome> {
    let plan = vgg_pooling_plan(args.mels, args.hop_mult, args.sample_rate)?;
    let text = match args.format {
        Format::Json => {
            serde_json::to_string_pretty(&AdaptJson {
                n_mels: args.mels,
                hop_multiplier: args.hop_mult,
                sample_rate: args.sample_rate,
                time_pools: plan.time_pools,
                freq_pools: plan.freq_pools,
            })? + "\n"
        }
        Format::Csv => format!(
            "n_mels,hop_multiplier,sample_rate,time_pools,freq_pools\n{},{},{},\"{}\",\"{}\"\n",
            args.mels,
            args.hop_mult,
            args.sample_rate,
            join(&plan.time_pools),
            join(&plan.freq_pools)
        ),
        Format::Text => format!("{plan}\n"),
    };
    Ok(Outcome::ok(text))
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<Outcome> {
    let pred = fs::File::open(&args.predictions)?;
    let labels = fs::File::open(&args.labels)?;
    let table = TagTable::from_csv(pred, labels)?;
    let summary = macro_summary(&table)?;
    let mut outcome = Outcome::ok(match args.format {
        Format::Json => summary_to_json(&summary)? + "\n",
        Format::Csv | Format::Text => summary_to_csv(&summary)?,
    });
    for tag in &summary.skipped_tags {
        outcome.diagnostics.push(format!(
            "warning: tag {tag:?} has a single class and was skipped"
        ));
    }
    emit(outcome, args.out.as_deref())
}

#[derive(Serialize)]
struct GridRow {
    config_id: String,
    sample_rate: u32,
    n_mels: usize,
    hop_multiplier: u32,
    compression: Compression,
    hop: usize,
    clip_frames: usize,
    feature_bytes: u64,
}

pub fn cmd_grid(args: &GridArgs) -> Result<Outcome> {
    let (mut configs, warnings) = resolve_selection(&args.selectors)?;
    let order: Vec<MelConfig> = enumerate_grid();
    configs.sort_by_key(|c| {
        (
            order.iter().position(|g| g == c).unwrap_or(usize::MAX),
            c.sample_rate,
            std::cmp::Reverse(c.n_mels),
            c.hop_multiplier,
            c.compression,
        )
    });
    let rows: Vec<GridRow> = configs
        .iter()
        .map(|c| {
            let frames = clip_frames(c.sample_rate, c.hop_multiplier);
            GridRow {
                config_id: c.id(),
                sample_rate: c.sample_rate,
                n_mels: c.n_mels,
                hop_multiplier: c.hop_multiplier,
                compression: c.compression,
                hop: c.hop(),
                clip_frames: frames,
                feature_bytes: storage_size(c, frames, 4),
            }
        })
        .collect();
    let text = match args.format {
        Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
        Format::Csv | Format::Text => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))?
        }
    };
    let mut outcome = Outcome::ok(text);
    outcome.diagnostics = warnings;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("melgauge").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn default_selection_is_the_grid() {
        let (configs, warnings) = resolve_selection(&Selectors::default()).unwrap();
        assert_eq!(configs.len(), 88);
        assert!(warnings.iter().all(|w| w.starts_with("note")));
    }

    #[test]
    fn strict_rejects_off_grid() {
        let sel = Selectors {
            mels: vec![64],
            grid_strict: true,
            ..Selectors::default()
        };
        assert!(resolve_selection(&sel).is_err());
        let sel = Selectors {
            mels: vec![64],
            ..Selectors::default()
        };
        let (configs, warnings) = resolve_selection(&sel).unwrap();
        assert_eq!(configs.len(), 2 * 6 * 2);
        assert!(warnings[0].contains("64 mel bands"));
    }

    #[test]
    fn adapt_text() {
        let out = run(parse(&[
            "adapt",
            "--mels",
            "96",
            "--hop-mult",
            "1",
            "--sample-rate",
            "12000",
        ]));
        assert_eq!(out.stdout, "time: 4,5,8,8 freq: 2,4,3,4\n");
        let out = run(parse(&[
            "adapt",
            "--mels",
            "48",
            "--hop-mult",
            "2",
            "--sample-rate",
            "16000",
        ]));
        assert_eq!(out.stdout, "time: 4,5,9,5 freq: 2,4,3,2\n");
        let out = run(parse(&["adapt", "--mels", "64"]));
        assert_ne!(out.exit_code, 0);
    }

    #[test]
    fn cost_row_count() {
        let out = run(parse(&[
            "cost",
            "--arch",
            "vgg",
            "--sample-rate",
            "12000",
            "--compression",
            "dB",
        ]));
        assert_eq!(out.exit_code, 0, "{:?}", out.diagnostics);
        assert_eq!(out.stdout.lines().count(), 23);
    }
}
