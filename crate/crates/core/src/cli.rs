//! The `hpnn` command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data, geometry or I/O
//! errors (and when `gradcheck` exceeds its tolerance).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data::{generate_synthetic, load_index, subject_folds, Dataset, FoldPlan, SynthConfig};
use crate::error::{Error, Result};
use crate::experiment::{
    blur_csv, blur_sweep, format_mean_std, mean_std, run_cv, write_cv_outputs, CvOptions, ExperimentConfig,
    SweepTarget, DEFAULT_BLUR_SIZES,
};
use crate::feature_map::FeatureMap;
use crate::network::{count_params, init_params, Network};
use crate::rng::SplitMix64;
use crate::serialize::{load_model, save_model};
use crate::trainer::{evaluate, gradient_check, train, Sample};

/// `gradcheck` fails above this error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-5;
pub const GRADCHECK_STEP: f64 = 1e-5;

#[derive(Debug, Parser)]
#[command(name = "hpnn", version, about = "Sub-layered hierarchical pyramidal neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one model (test fold = --trial, validation = next fold).
    Train(TrainArgs),
    /// Evaluate a saved model.
    Eval(EvalArgs),
    /// Subject-independent cross-validation.
    Cv(CvArgs),
    /// Accuracy under increasing mean-filter blur.
    BlurSweep(BlurArgs),
    /// Trainable-parameter table.
    Params(ParamsArgs),
    /// Finite-difference check of the backpropagated gradients.
    Gradcheck(GradcheckArgs),
    /// Generate a synthetic PGM corpus and index.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    trial: usize,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    index: PathBuf,
    #[arg(long, requires = "fold")]
    fold_plan: Option<PathBuf>,
    #[arg(long, requires = "fold_plan")]
    fold: Option<usize>,
    /// Box-blur size applied after resizing.
    #[arg(long)]
    blur: Option<usize>,
    /// Directory for `eval.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    half_subjects: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("models_source").required(true).args(["model", "models"])))]
struct BlurArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// A `cv` output directory.
    #[arg(long)]
    models: Option<PathBuf>,
    #[arg(long)]
    index: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_BLUR_SIZES)]
    sizes: Vec<usize>,
    #[arg(long, requires = "fold", conflicts_with = "models")]
    fold_plan: Option<PathBuf>,
    #[arg(long, requires = "fold_plan")]
    fold: Option<usize>,
    /// Directory for `blur_sweep.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ParamsArgs {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    classes: usize,
    #[arg(long)]
    subjects: usize,
    #[arg(long)]
    per_subject: usize,
    #[arg(long)]
    size: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Parses `argv` (program name first) and runs the subcommand, printing to
/// the process's stdout and stderr.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    dispatch_to(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn dispatch_to<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    match run(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn run(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Train(a) => cmd_train(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Cv(a) => cmd_cv(a, out),
        Command::BlurSweep(a) => cmd_blur(a, out),
        Command::Params(a) => cmd_params(a, out),
        Command::Gradcheck(a) => cmd_gradcheck(a, out),
        Command::Synth(a) => cmd_synth(a, out),
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = seed {
        cfg.train.seed = seed;
    }
    Ok(cfg)
}

fn resolve_index(cli: Option<PathBuf>, cfg: &ExperimentConfig) -> Result<PathBuf> {
    cli.or_else(|| cfg.index.clone())
        .ok_or_else(|| Error::InvalidConfig("no dataset index given (--index or \"index\" in the config)".into()))
}

fn resolve_out(cli: Option<PathBuf>, cfg: &ExperimentConfig, default: &str) -> PathBuf {
    cli.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from(default))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn cmd_train(a: TrainArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = load_config(&a.config, a.seed)?;
    writeln!(out, "seed: {}", cfg.train.seed).map_err(io_err)?;
    let spec = cfg.network_spec();
    let data = Dataset::load(resolve_index(a.index, &cfg)?, spec.input_height, spec.input_width)?;
    let plan = subject_folds(&data.index, crate::data::folds::DEFAULT_FOLDS)?;
    let roles = plan.trial(a.trial);
    let train_set = data.samples(&data.records_in_folds(&plan, &roles.train), None)?;
    let val_set = data.samples(&data.records_in_folds(&plan, &[roles.validation]), None)?;
    let test_set = data.samples(&data.records_in_folds(&plan, &[roles.test]), None)?;
    let (net, history) = train(&spec, &train_set, &val_set, &cfg.train)?;
    let dir = resolve_out(a.out, &cfg, "hpnn-train");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    save_model(&net, dir.join("model.hpnn"))?;
    write_file(&dir.join("history.csv"), history.to_csv().as_bytes())?;
    write_file(&dir.join("fold_plan.csv"), plan.to_csv().as_bytes())?;
    let test = evaluate(&net, &test_set)?;
    writeln!(out, "epochs: {} (best {})", history.epochs.len(), history.best_epoch).map_err(io_err)?;
    if let Some(best) = history.best() {
        writeln!(out, "validation accuracy: {:.2}%", 100.0 * best.val_acc).map_err(io_err)?;
    }
    writeln!(out, "test fold {} accuracy: {:.2}%", roles.test, 100.0 * test.accuracy).map_err(io_err)?;
    writeln!(out, "model: {}", dir.join("model.hpnn").display()).map_err(io_err)?;
    Ok(0)
}

fn read_fold_plan(path: &Path) -> Result<FoldPlan> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    FoldPlan::from_csv(&text)
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write) -> Result<i32> {
    writeln!(out, "seed: none (evaluation is deterministic)").map_err(io_err)?;
    let net = load_model(&a.model)?;
    let data = Dataset::load(&a.index, net.spec.input_height, net.spec.input_width)?;
    let positions = match (&a.fold_plan, a.fold) {
        (Some(plan), Some(fold)) => data.records_in_folds(&read_fold_plan(plan)?, &[fold]),
        _ => (0..data.len()).collect(),
    };
    let report = evaluate(&net, &data.samples(&positions, a.blur)?)?;
    write!(out, "{}", report.to_text(&data.index.class_names)).map_err(io_err)?;
    if let Some(dir) = a.out {
        write_file(&dir.join("eval.csv"), report.to_csv().as_bytes())?;
    }
    Ok(0)
}

fn cmd_cv(a: CvArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = load_config(&a.config, a.seed)?;
    writeln!(out, "seed: {}", cfg.train.seed).map_err(io_err)?;
    let spec = cfg.network_spec();
    let data = Dataset::load(resolve_index(a.index, &cfg)?, spec.input_height, spec.input_width)?;
    let outcome = run_cv(&cfg, &data, &CvOptions { half_subjects: a.half_subjects, ..Default::default() })?;
    let dir = resolve_out(a.out, &cfg, "hpnn-cv");
    write_cv_outputs(&cfg, &outcome, &dir)?;
    writeln!(out, "trial,test_fold,train_folds,epochs,train_acc,test_acc").map_err(io_err)?;
    for t in &outcome.trials {
        let folds: Vec<String> = t.train_folds.iter().map(usize::to_string).collect();
        writeln!(
            out,
            "{},{},{},{},{:.2},{:.2}",
            t.trial,
            t.test_fold,
            folds.join(" "),
            t.history.epochs.len(),
            100.0 * t.train_acc,
            100.0 * t.test_acc
        )
        .map_err(io_err)?;
    }
    writeln!(out, "recognition rate: {}", format_mean_std(&outcome.test_accuracies())).map_err(io_err)?;
    writeln!(out, "outputs: {}", dir.display()).map_err(io_err)?;
    Ok(0)
}

/// Trial number from a `trial_XX.hpnn` file name.
fn trial_number(path: &Path) -> Option<usize> {
    let name = path.file_name()?.to_str()?;
    name.strip_prefix("trial_")?.strip_suffix(".hpnn")?.parse().ok()
}

fn cmd_blur(a: BlurArgs, out: &mut dyn Write) -> Result<i32> {
    writeln!(out, "seed: none (evaluation is deterministic)").map_err(io_err)?;
    let index = load_index(&a.index)?;
    let base = a.index.parent().unwrap_or(Path::new("."));
    let (models, plan): (Vec<(Network, Option<usize>)>, Option<FoldPlan>) = if let Some(dir) = &a.models {
        let plan = read_fold_plan(&dir.join("fold_plan.csv"))?;
        let mut found: Vec<(usize, PathBuf)> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter_map(|p| trial_number(&p).map(|t| (t, p)))
            .collect();
        found.sort();
        if found.is_empty() {
            return Err(Error::InvalidConfig(format!("no trial_XX.hpnn models in {}", dir.display())));
        }
        let models = found.into_iter().map(|(t, p)| Ok((load_model(p)?, Some(t)))).collect::<Result<_>>()?;
        (models, Some(plan))
    } else {
        let model = load_model(a.model.as_ref().expect("clap group guarantees a model"))?;
        let plan = a.fold_plan.as_deref().map(read_fold_plan).transpose()?;
        (vec![(model, a.fold)], plan)
    };
    let (h, w) = (models[0].0.spec.input_height, models[0].0.spec.input_width);
    if models.iter().any(|(m, _)| (m.spec.input_height, m.spec.input_width) != (h, w)) {
        return Err(Error::ShapeMismatch("models disagree on input size".into()));
    }
    let data = Dataset::load_images(index, base, h, w)?;
    let targets: Vec<SweepTarget> = models
        .into_iter()
        .map(|(model, fold)| {
            let positions = match (&plan, fold) {
                (Some(plan), Some(fold)) => data.records_in_folds(plan, &[fold]),
                _ => (0..data.len()).collect(),
            };
            SweepTarget { model, positions }
        })
        .collect();
    let rows = blur_sweep(&data, &targets, &a.sizes)?;
    let csv = blur_csv(&rows);
    write!(out, "{csv}").map_err(io_err)?;
    for r in &rows {
        writeln!(out, "# size {:>2}: {}", r.filter_size, format_mean_std(&r.accuracies)).map_err(io_err)?;
    }
    if let Some(dir) = a.out {
        write_file(&dir.join("blur_sweep.csv"), csv.as_bytes())?;
    }
    Ok(0)
}

fn cmd_params(a: ParamsArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = load_config(&a.config, None)?;
    writeln!(out, "seed: {}", cfg.train.seed).map_err(io_err)?;
    let count = count_params(&cfg.network_spec())?;
    writeln!(out, "layer,weights,biases,total").map_err(io_err)?;
    for l in &count.layers {
        writeln!(out, "{},{},{},{}", l.name, l.weights, l.biases, l.total()).map_err(io_err)?;
    }
    writeln!(out, "total parameters: {}", count.total).map_err(io_err)?;
    Ok(0)
}

/// The deterministic sample `gradcheck` uses for a given seed: pixels
/// uniform in `[−1, 1]` and label `seed mod classes`.
pub fn gradcheck_sample(net: &Network, seed: u64) -> Sample {
    let (h, w) = (net.spec.input_height, net.spec.input_width);
    let mut rng = SplitMix64::derived(seed, 4);
    let values = (0..h * w).map(|_| rng.uniform(-1.0, 1.0)).collect();
    Sample {
        input: FeatureMap::from_vec(1, h, w, values).expect("positive input size"),
        label: (seed % net.spec.classes as u64) as usize,
    }
}

fn cmd_gradcheck(a: GradcheckArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = load_config(&a.config, a.seed)?;
    let seed = cfg.train.seed;
    writeln!(out, "seed: {seed}").map_err(io_err)?;
    let net = init_params(&cfg.network_spec(), seed)?;
    let sample = gradcheck_sample(&net, seed);
    let err = gradient_check(&net, &sample, GRADCHECK_STEP)?;
    writeln!(out, "parameters: {}", net.param_count()).map_err(io_err)?;
    writeln!(out, "max relative error: {err:e}").map_err(io_err)?;
    if err > GRADCHECK_TOLERANCE {
        writeln!(out, "FAILED (tolerance {GRADCHECK_TOLERANCE:e})").map_err(io_err)?;
        return Ok(2);
    }
    writeln!(out, "ok").map_err(io_err)?;
    Ok(0)
}

fn cmd_synth(a: SynthArgs, out: &mut dyn Write) -> Result<i32> {
    writeln!(out, "seed: {}", a.seed).map_err(io_err)?;
    let cfg = SynthConfig { classes: a.classes, subjects: a.subjects, per_subject: a.per_subject, size: a.size, seed: a.seed };
    let index = generate_synthetic(&cfg, &a.out)?;
    writeln!(out, "images: {}", index.records.len()).map_err(io_err)?;
    writeln!(out, "index: {}", a.out.join("index.csv").display()).map_err(io_err)?;
    let (mean, _) = mean_std(&index.class_counts().iter().map(|&c| c as f64).collect::<Vec<_>>());
    writeln!(out, "per class: {mean}").map_err(io_err)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = dispatch_to(std::iter::once("hpnn").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_one_and_name_the_flag() {
        let (code, _, err) = run_args(&["params"]);
        assert_eq!(code, 1);
        assert!(err.contains("--config"), "{err}");
        let (code, _, err) = run_args(&["blur-sweep", "--index", "x.csv", "--sizes", "3,x"]);
        assert_eq!(code, 1);
        assert!(err.contains("--sizes"), "{err}");
        let (code, _, _) = run_args(&["frobnicate"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_args(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("blur-sweep"));
    }

    #[test]
    fn missing_files_exit_two() {
        let (code, _, err) = run_args(&["params", "--config", "/nonexistent/c.json"]);
        assert_eq!(code, 2);
        assert!(err.contains("/nonexistent/c.json"));
    }

    #[test]
    fn trial_numbers() {
        assert_eq!(trial_number(Path::new("x/trial_07.hpnn")), Some(7));
        assert_eq!(trial_number(Path::new("x/trial_07_history.csv")), None);
    }
}
