//! Command-line workflow for the gait triage toolkit.
//!
//! Subcommands cover the full loop: `synth` a labelled dataset, `extract`
//! features, `train` a model, `eval` it, `filter` a manifest with it, and
//! `report` plot data. Errors print as a single `error: ...` line on
//! stderr with a nonzero exit code.

mod config;
mod svg;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use gait_triage::classifier::split_train_test;
use gait_triage::dataset::{labeled_examples, read_features_csv, write_atomic, write_features_csv};
use gait_triage::features::DEFAULT_MIN_PROMINENCE_RATIO;
use gait_triage::peaks::find_peaks;
use gait_triage::triage::{
    extract_manifest_features, read_manifest, window_segment, write_manifest_csv, ClassLabel,
    TriageParams, DEFAULT_HOP_S, DEFAULT_WINDOW_S,
};
use gait_triage::{
    energy_signal, evaluate, load_model, load_wav, melspectrogram_db, save_model, synth_dataset,
    train, triage_dataset, Error, Result, SpectroParams, TrainConfig,
};

use config::Config;

#[derive(Parser)]
#[command(name = "gait-triage", version, about = "Acoustic gait dataset triage")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Optional key=value file supplying defaults for flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled synthetic scene dataset (WAVs + manifest)
    Synth(SynthArgs),
    /// Extract per-window features from a dataset manifest
    Extract(ExtractArgs),
    /// Train a window classifier from a labelled feature CSV
    Train(TrainArgs),
    /// Evaluate a model against a labelled feature CSV
    Eval(EvalArgs),
    /// Filter a dataset manifest with a trained model
    Filter(FilterArgs),
    /// Emit scatter and energy plot data
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory (created if absent)
    #[arg(long)]
    out: PathBuf,
    /// Scenes with clear gait structure
    #[arg(long)]
    n_good: Option<usize>,
    /// Scenes with buried or cluttered gait
    #[arg(long)]
    n_bad: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct SpectroFlags {
    /// STFT window length in samples
    #[arg(long)]
    n_fft: Option<usize>,
    /// STFT hop in samples
    #[arg(long)]
    stft_hop: Option<usize>,
    /// Mel filterbank size
    #[arg(long)]
    n_mels: Option<usize>,
    /// Filterbank lower edge in Hz
    #[arg(long)]
    fmin_hz: Option<f64>,
    /// Filterbank upper edge in Hz
    #[arg(long)]
    fmax_hz: Option<f64>,
    /// Dynamic range clamp below the per-clip peak, in dB
    #[arg(long)]
    db_floor: Option<f64>,
}

impl SpectroFlags {
    fn resolve(&self, cfg: &Config) -> Result<SpectroParams> {
        let d = SpectroParams::default();
        let params = SpectroParams {
            n_fft: cfg.resolve(self.n_fft, "n-fft", d.n_fft)?,
            hop: cfg.resolve(self.stft_hop, "stft-hop", d.hop)?,
            n_mels: cfg.resolve(self.n_mels, "n-mels", d.n_mels)?,
            fmin_hz: cfg.resolve(self.fmin_hz, "fmin-hz", d.fmin_hz)?,
            fmax_hz: cfg.resolve(self.fmax_hz, "fmax-hz", d.fmax_hz)?,
            db_floor: cfg.resolve(self.db_floor, "db-floor", d.db_floor)?,
        };
        params.validate(gait_triage::CANONICAL_SAMPLE_RATE)?;
        Ok(params)
    }
}

#[derive(Args, Clone)]
struct WindowFlags {
    /// Analysis window length in seconds
    #[arg(long)]
    window_s: Option<f64>,
    /// Analysis window hop in seconds
    #[arg(long)]
    hop_s: Option<f64>,
    /// Peak threshold as a fraction of the energy signal's range
    #[arg(long)]
    min_prominence_ratio: Option<f64>,
}

fn triage_params(
    spectro: &SpectroFlags,
    window: &WindowFlags,
    strict: bool,
    threshold: Option<f64>,
    cfg: &Config,
) -> Result<TriageParams> {
    Ok(TriageParams {
        window_s: cfg.resolve(window.window_s, "window-s", DEFAULT_WINDOW_S)?,
        hop_s: cfg.resolve(window.hop_s, "hop-s", DEFAULT_HOP_S)?,
        spectro: spectro.resolve(cfg)?,
        min_prominence_ratio: cfg.resolve(
            window.min_prominence_ratio,
            "min-prominence-ratio",
            DEFAULT_MIN_PROMINENCE_RATIO,
        )?,
        strict,
        threshold_override: cfg.resolve_opt(threshold, "threshold")?,
    })
}

#[derive(Args)]
struct ExtractArgs {
    /// Dataset manifest (CSV or JSONL); audio paths resolve relative to it
    #[arg(long)]
    manifest: PathBuf,
    /// Output feature CSV
    #[arg(long)]
    out: PathBuf,
    /// Abort on the first unreadable entry instead of skipping it
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    spectro: SpectroFlags,
    #[command(flatten)]
    window: WindowFlags,
}

#[derive(Args)]
struct TrainArgs {
    /// Labelled feature CSV
    #[arg(long)]
    features: PathBuf,
    /// Output model JSON
    #[arg(long)]
    out: PathBuf,
    /// Cross-validation folds
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Wall-clock budget for the model sweep, in seconds
    #[arg(long)]
    budget_s: Option<f64>,
    /// Fraction held out for a final test report; 0 trains on everything
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Decision threshold stored in the model
    #[arg(long)]
    threshold: Option<f64>,
    /// Keep only the single best model instead of the top-3 ensemble
    #[arg(long)]
    no_ensemble: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Trained model JSON
    #[arg(long)]
    model: PathBuf,
    /// Labelled feature CSV
    #[arg(long)]
    features: PathBuf,
    /// Output metrics JSON
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FilterArgs {
    /// Dataset manifest to filter
    #[arg(long)]
    manifest: PathBuf,
    /// Trained model JSON
    #[arg(long)]
    model: PathBuf,
    /// Output manifest keeping non-gait entries plus accepted gait windows
    #[arg(long)]
    out_manifest: PathBuf,
    /// Output triage report JSON
    #[arg(long)]
    report: PathBuf,
    /// Abort on the first unreadable entry instead of skipping it
    #[arg(long)]
    strict: bool,
    /// Override the model's stored decision threshold
    #[arg(long)]
    threshold: Option<f64>,
    #[command(flatten)]
    spectro: SpectroFlags,
    #[command(flatten)]
    window: WindowFlags,
}

#[derive(Args)]
struct ReportArgs {
    /// Feature CSV to plot
    #[arg(long)]
    features: PathBuf,
    /// Output directory (created if absent)
    #[arg(long)]
    out_dir: PathBuf,
    /// Also render scatter.svg
    #[arg(long)]
    svg: bool,
    /// Window id (entry#wNNNN) to dump an energy trace for
    #[arg(long)]
    energy_window: Option<String>,
    /// Manifest locating the energy window's audio
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    spectro: SpectroFlags,
    #[command(flatten)]
    window: WindowFlags,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = Config::load(cli.config.as_deref())?;
    if let Some(jobs) = cfg.resolve_opt(cli.jobs, "jobs")? {
        if jobs == 0 {
            return Err(Error::InvalidParams("jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Synth(args) => cmd_synth(args, &cfg),
        Command::Extract(args) => cmd_extract(args, &cfg),
        Command::Train(args) => cmd_train(args, &cfg),
        Command::Eval(args) => cmd_eval(args),
        Command::Filter(args) => cmd_filter(args, &cfg),
        Command::Report(args) => cmd_report(args, &cfg),
    }
}

fn manifest_dir(manifest: &Path) -> PathBuf {
    match manifest.parent() {
        Some(p) if p.as_os_str().is_empty() => PathBuf::from("."),
        Some(p) => p.to_path_buf(),
        None => PathBuf::from("."),
    }
}

fn cmd_synth(args: SynthArgs, cfg: &Config) -> Result<()> {
    let n_good = cfg.resolve(args.n_good, "n-good", 200)?;
    let n_bad = cfg.resolve(args.n_bad, "n-bad", 200)?;
    let seed = cfg.resolve(args.seed, "seed", 0)?;
    let entries = synth_dataset(&args.out, n_good, n_bad, seed)?;
    println!(
        "wrote {} scenes ({n_good} good, {n_bad} bad) under {}",
        entries.len(),
        args.out.display()
    );
    println!("manifest: {}", args.out.join("manifest.csv").display());
    Ok(())
}

fn cmd_extract(args: ExtractArgs, cfg: &Config) -> Result<()> {
    let params = triage_params(&args.spectro, &args.window, args.strict, None, cfg)?;
    let entries = read_manifest(&args.manifest)?;
    let base = manifest_dir(&args.manifest);
    let (rows, failures) = extract_manifest_features(&entries, &base, &params)?;
    for f in &failures {
        eprintln!("warning: skipped entry '{}': {}", f.entry_id, f.error);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("no windows extracted".into()));
    }
    write_features_csv(&args.out, &rows)?;
    println!(
        "extracted {} windows from {} entries -> {}",
        rows.len(),
        entries.len() - failures.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs, cfg: &Config) -> Result<()> {
    let defaults = TrainConfig::default();
    let train_cfg = TrainConfig {
        n_folds: cfg.resolve(args.folds, "folds", defaults.n_folds)?,
        ensemble: !args.no_ensemble,
        seed: cfg.resolve(args.seed, "seed", defaults.seed)?,
        time_budget_s: cfg.resolve(args.budget_s, "budget-s", defaults.time_budget_s)?,
    };
    let test_fraction = cfg.resolve(args.test_fraction, "test-fraction", 0.2)?;
    let threshold = cfg.resolve_opt(args.threshold, "threshold")?;

    let rows = read_features_csv(&args.features)?;
    let examples = labeled_examples(&rows);
    if examples.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no labelled rows in {}",
            args.features.display()
        )));
    }

    let (train_set, test_set) = if test_fraction > 0.0 {
        split_train_test(&examples, test_fraction, train_cfg.seed)?
    } else {
        (examples, Vec::new())
    };
    let mut model = train(&train_set, &train_cfg)?;
    if let Some(t) = threshold {
        model.set_threshold(t)?;
    }

    println!("cross-validation on {} examples:", train_set.len());
    for report in &model.cv_report {
        let chosen = model.components.iter().any(|c| c.spec == report.spec);
        println!(
            "  {} {:<22} macro-F1 {:.4}",
            if chosen { "*" } else { " " },
            report.spec.to_string(),
            report.mean_macro_f1
        );
    }
    if model.sweep_truncated {
        println!("  (sweep truncated by the time budget)");
    }
    if !test_set.is_empty() {
        let metrics = evaluate(&model, &test_set)?;
        println!("held-out test ({} examples):", test_set.len());
        println!("{}", metrics.confusion_text());
        println!(
            "bad F1 {:.4}  good F1 {:.4}  macro-F1 {:.4}  accuracy {:.4}",
            metrics.bad.f1, metrics.good.f1, metrics.macro_f1, metrics.accuracy
        );
    }
    save_model(&model, &args.out)?;
    println!("model -> {}", args.out.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let rows = read_features_csv(&args.features)?;
    let examples = labeled_examples(&rows);
    let metrics = evaluate(&model, &examples)?;
    let mut body = serde_json::to_string_pretty(&metrics)
        .map_err(|e| Error::Parse(format!("metrics serialization failed: {e}")))?;
    body.push('\n');
    write_atomic(&args.out, body.as_bytes())?;
    println!("{}", metrics.confusion_text());
    print!("{}", metrics.to_csv());
    println!("metrics -> {}", args.out.display());
    Ok(())
}

fn cmd_filter(args: FilterArgs, cfg: &Config) -> Result<()> {
    let params = triage_params(
        &args.spectro,
        &args.window,
        args.strict,
        args.threshold,
        cfg,
    )?;
    let model = load_model(&args.model)?;
    let entries = read_manifest(&args.manifest)?;
    let base = manifest_dir(&args.manifest);
    let (filtered, report) = triage_dataset(&entries, &base, &model, &params)?;
    for f in &report.entries_failed {
        eprintln!("warning: skipped entry '{}': {}", f.entry_id, f.error);
    }
    write_manifest_csv(&args.out_manifest, &filtered)?;
    let mut body = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Parse(format!("report serialization failed: {e}")))?;
    body.push('\n');
    write_atomic(&args.report, body.as_bytes())?;
    println!(
        "kept {} of {} gait windows; removed {}; passed through {} non-gait entries",
        report.gait_windows_kept,
        report.gait_windows_in,
        report.gait_windows_removed,
        report.non_gait_kept
    );
    println!("filtered manifest -> {}", args.out_manifest.display());
    println!("report -> {}", args.report.display());
    Ok(())
}

fn cmd_report(args: ReportArgs, cfg: &Config) -> Result<()> {
    let rows = read_features_csv(&args.features)?;
    if rows.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no feature rows in {}",
            args.features.display()
        )));
    }
    std::fs::create_dir_all(&args.out_dir)?;

    // Scatter data grouped by label: bad, then good, then unlabelled.
    let mut scatter = String::from("label,prominence,residual,distance\n");
    let group = |want: Option<gait_triage::GaitLabel>| {
        rows.iter().filter(move |r| r.label == want).map(|r| {
            format!(
                "{},{},{},{}\n",
                r.label.map(|l| l.to_string()).unwrap_or_default(),
                r.features.avg_peak_prominence,
                r.features.rms_residual,
                r.features.avg_peak_distance
            )
        })
    };
    for want in [
        Some(gait_triage::GaitLabel::BadGait),
        Some(gait_triage::GaitLabel::GoodGait),
        None,
    ] {
        scatter.extend(group(want));
    }
    let scatter_path = args.out_dir.join("scatter.csv");
    write_atomic(&scatter_path, scatter.as_bytes())?;
    println!("scatter data -> {}", scatter_path.display());

    if args.svg {
        let svg_path = args.out_dir.join("scatter.svg");
        write_atomic(&svg_path, svg::scatter_svg(&rows).as_bytes())?;
        println!("scatter plot -> {}", svg_path.display());
    }

    if let Some(window_id) = &args.energy_window {
        let manifest = args.manifest.as_ref().ok_or_else(|| {
            Error::InvalidParams("--energy-window needs --manifest to locate audio".into())
        })?;
        let params = triage_params(&args.spectro, &args.window, true, None, cfg)?;
        let path = energy_trace(window_id, manifest, &params, &args.out_dir)?;
        println!("energy trace -> {}", path.display());
    }
    Ok(())
}

/// Recompute one window's energy signal and write it as
/// `frame,time_s,energy,is_peak` CSV.
fn energy_trace(
    window_id: &str,
    manifest: &Path,
    params: &TriageParams,
    out_dir: &Path,
) -> Result<PathBuf> {
    let entry_id = window_id.rsplit_once("#w").map(|(e, _)| e).ok_or_else(|| {
        Error::InvalidParams(format!(
            "window id '{window_id}' is not of the form entry#wNNNN"
        ))
    })?;
    let entries = read_manifest(manifest)?;
    let entry = entries
        .iter()
        .find(|e| e.id == entry_id && e.class_label == ClassLabel::Gait)
        .ok_or_else(|| Error::manifest(entry_id, "no gait entry with this id in the manifest"))?;
    let clip = load_wav(&manifest_dir(manifest).join(&entry.path))?;
    let windows = window_segment(&clip, entry, params.window_s, params.hop_s)?;
    let window = windows
        .into_iter()
        .find(|w| w.id == window_id)
        .ok_or_else(|| Error::manifest(entry_id, format!("no window '{window_id}'")))?;

    let mel = melspectrogram_db(&window.clip, &params.spectro)?;
    let energy = energy_signal(&mel);
    let (lo, hi) = energy
        .values()
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let peaks = find_peaks(energy.values(), params.min_prominence_ratio * (hi - lo))?;
    let peak_set: std::collections::HashSet<usize> = peaks.iter().map(|p| p.index).collect();

    let mut out = String::from("frame,time_s,energy,is_peak\n");
    for (i, &e) in energy.values().iter().enumerate() {
        out.push_str(&format!(
            "{i},{},{e},{}\n",
            i as f64 * energy.frame_period_s(),
            peak_set.contains(&i) as u8
        ));
    }
    let path = out_dir.join(format!("energy_{}.csv", window_id.replace('#', "_")));
    write_atomic(&path, out.as_bytes())?;
    Ok(path)
}
