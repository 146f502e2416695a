use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use explainbench::bench::{
    feature_labels, render_heatmap, run_collect, steal_experiment, synth_dataset, write_outputs, BenchConfig, IsMatrix,
    MethodEntry,
};
use explainbench::data::Dataset;
use explainbench::explain::{Explanation, Method, MethodConfig};
use explainbench::metrics::{da_curve, default_k_grid, default_r_grid, maz_curve, AblationOperator, MetricCurve};
use explainbench::nn::Model;
use explainbench::rng::SeedSplitter;
use explainbench::train::{fit, SurrogateSpec};
use explainbench::{Error, Result};

#[derive(Parser)]
#[command(name = "explainbench", version, about = "Benchmark explanation methods on synthetic fixtures")]
struct Cli {
    /// Worker threads for per-sample work (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Benchmark configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the root seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic datasets of a configuration.
    Synth(Common),
    /// Train the fixture model of every dataset in a configuration.
    Train {
        #[command(flatten)]
        common: Common,
        /// Train on this dataset instead of synthesizing (single-dataset configs).
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Explain the predictions of a model on a dataset.
    Explain {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        method: Method,
        /// Explain only the first `n` samples.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Deletion and sparsity curves for saved explanations.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        explanations: PathBuf,
        /// Largest number of ablated features on the deletion curve.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Train surrogates from oracle predictions and compare their LRP explanations.
    Steal {
        #[command(flatten)]
        common: Common,
        /// Oracle model.
        #[arg(long)]
        model: PathBuf,
        /// Unlabeled queries sent to the oracle.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        layers: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        units: usize,
        #[arg(long, default_value_t = 20)]
        n: usize,
    },
    /// Pairwise top-k overlap between methods.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        method: Vec<Method>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 20)]
        n: usize,
    },
    /// Full benchmark run: report.json, curves and heatmaps.
    Report(Common),
    /// HTML heatmaps for saved explanations.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        explanations: PathBuf,
    },
}

enum Outcome {
    Done,
    Partial(usize),
}

fn load_config(common: &Common) -> Result<BenchConfig> {
    let path = common.config.as_ref().ok_or_else(|| Error::InvalidInput("--config is required".into()))?;
    let mut cfg = BenchConfig::from_json(&fs::read_to_string(path)?)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn load_model(path: &Path) -> Result<Model> {
    Model::from_json(&fs::read_to_string(path)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn load_explanations(path: &Path) -> Result<Vec<Explanation>> {
    fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

fn explain_all(model: &Model, ds: &Dataset, method: &MethodConfig, n: usize, seed: u64) -> Result<Vec<Explanation>> {
    let ex = method.build();
    let split = SeedSplitter::new(seed);
    ds.samples[..n.min(ds.len())]
        .par_iter()
        .enumerate()
        .map(|(i, s)| ex.explain(model, s, model.predict(s)?, split.derive(method.method().id(), i as u64)))
        .collect()
}

fn synth(common: &Common) -> Result<Outcome> {
    let cfg = load_config(common)?;
    let root = SeedSplitter::new(cfg.seed);
    fs::create_dir_all(&common.out)?;
    for (i, d) in cfg.datasets.iter().enumerate() {
        let seed = d.synth.seed().unwrap_or(root.child("dataset", i as u64).derive("synth", 0));
        let ds = synth_dataset(&d.synth, seed)?;
        ds.save(&common.out.join(format!("{}.jsonl", d.name)))?;
        println!("{}: {} samples, {} features", d.name, ds.len(), ds.meta.n_features);
    }
    Ok(Outcome::Done)
}

fn train(common: &Common, data: Option<&Path>) -> Result<Outcome> {
    let cfg = load_config(common)?;
    if data.is_some() && cfg.datasets.len() != 1 {
        return Err(Error::InvalidInput("--data needs a configuration with exactly one dataset".into()));
    }
    let root = SeedSplitter::new(cfg.seed);
    fs::create_dir_all(&common.out)?;
    for (i, d) in cfg.datasets.iter().enumerate() {
        let split = root.child("dataset", i as u64);
        let ds = match data {
            Some(p) => Dataset::load(p)?,
            None => synth_dataset(&d.synth, d.synth.seed().unwrap_or(split.derive("synth", 0)))?,
        };
        let mut tcfg = d.train.clone();
        tcfg.seed = split.derive("train", 0);
        let (model, log) = fit(&d.model, &ds, &tcfg)?;
        fs::write(common.out.join(format!("{}.model.json", d.name)), model.to_json()?)?;
        write_json(&common.out.join(format!("{}.train.json", d.name)), &log)?;
        println!("{}: test accuracy {:.4}", d.name, log.metrics.accuracy);
    }
    Ok(Outcome::Done)
}

fn explain(common: &Common, model: &Path, data: &Path, method: Method, n: Option<usize>) -> Result<Outcome> {
    let model = load_model(model)?;
    let ds = Dataset::load(data)?;
    let mcfg = match common.config.as_ref() {
        Some(_) => {
            let cfg = load_config(common)?;
            cfg.methods
                .iter()
                .find(|m| m.method() == method)
                .map(|m| m.resolve(model.modality()))
                .unwrap_or_else(|| MethodEntry::Id(method).resolve(model.modality()))
        }
        None => MethodConfig::default_for(method, model.modality()),
    };
    mcfg.validate()?;
    let seed = common.seed.unwrap_or(0);
    let explained = explain_all(&model, &ds, &mcfg, n.unwrap_or(ds.len()), seed)?;
    fs::create_dir_all(&common.out)?;
    let mut out = String::new();
    for e in &explained {
        out.push_str(&e.to_json()?);
        out.push('\n');
    }
    fs::write(common.out.join(format!("{method}.jsonl")), out)?;
    let degenerate = explained.iter().filter(|e| e.degenerate).count();
    println!("{method}: {} explanations, {degenerate} degenerate", explained.len());
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct Evaluation {
    n: usize,
    da_auc: f64,
    maz_auc: f64,
    per_sample_da_auc: Vec<f64>,
    per_sample_maz_auc: Vec<f64>,
}

fn mean_curve(curves: &[MetricCurve]) -> Result<MetricCurve> {
    let n = curves.len() as f64;
    let values = (0..curves[0].grid.len()).map(|j| curves.iter().map(|c| c.values[j]).sum::<f64>() / n).collect();
    MetricCurve::new(curves[0].grid.clone(), values)
}

fn evaluate(common: &Common, model: &Path, data: &Path, explanations: &Path, k: Option<usize>) -> Result<Outcome> {
    let model = load_model(model)?;
    let ds = Dataset::load(data)?;
    let explained = load_explanations(explanations)?;
    if explained.is_empty() || explained.len() > ds.len() {
        return Err(Error::InvalidInput("explanations must align with the first samples of the dataset".into()));
    }
    let op = AblationOperator::from_meta(&ds.meta)?;
    let mut k_grid = default_k_grid(model.modality(), ds.meta.n_features);
    if let Some(k) = k {
        k_grid.retain(|&g| g <= k);
    }
    let da: Vec<MetricCurve> = ds
        .samples
        .par_iter()
        .zip(&explained)
        .map(|(s, e)| da_curve(&model, s, &e.relevance, &k_grid, op))
        .collect::<Result<_>>()?;
    let r_grid = default_r_grid();
    let maz: Vec<MetricCurve> = explained.iter().map(|e| maz_curve(&e.relevance, &r_grid)).collect::<Result<_>>()?;
    let per_da: Vec<f64> = da.iter().map(|c| c.auc).collect();
    let per_maz: Vec<f64> = maz.iter().map(|c| c.auc).collect();
    let n = explained.len();
    let ev = Evaluation {
        n,
        da_auc: per_da.iter().sum::<f64>() / n as f64,
        maz_auc: per_maz.iter().sum::<f64>() / n as f64,
        per_sample_da_auc: per_da,
        per_sample_maz_auc: per_maz,
    };
    fs::create_dir_all(&common.out)?;
    fs::write(common.out.join("da.csv"), mean_curve(&da)?.to_csv("k", "score"))?;
    fs::write(common.out.join("maz.csv"), mean_curve(&maz)?.to_csv("r", "maz"))?;
    write_json(&common.out.join("evaluation.json"), &ev)?;
    println!("DA-AUC {:.4}  MAZ-AUC {:.4}  over {n} samples", ev.da_auc, ev.maz_auc);
    Ok(Outcome::Done)
}

#[allow(clippy::too_many_arguments)]
fn steal_cmd(
    common: &Common,
    model: &Path,
    data: &Path,
    k: usize,
    layers: &[usize],
    units: usize,
    n: usize,
) -> Result<Outcome> {
    let oracle = load_model(model)?;
    let queries = Dataset::load(data)?;
    for &l in layers {
        SurrogateSpec { n_hidden_layers: l, units_per_layer: units }.validate()?;
    }
    let mut tcfg = match common.config.as_ref() {
        Some(_) => load_config(common)?.steal.map(|s| s.train).unwrap_or_default(),
        None => Default::default(),
    };
    tcfg.seed = SeedSplitter::new(common.seed.unwrap_or(0)).derive("steal", 0);
    let samples = &queries.samples[..n.min(queries.len())];
    let report = steal_experiment(&oracle, &queries, samples, layers, units, &tcfg, k)?;
    write_json(&common.out.join("steal.json"), &report)?;
    for log in &report.surrogates {
        println!("surrogate-{}: agreement {:.4}", log.n_hidden_layers, log.agreement);
    }
    Ok(Outcome::Done)
}

fn compare(common: &Common, model: &Path, data: &Path, methods: &[Method], k: usize, n: usize) -> Result<Outcome> {
    let model = load_model(model)?;
    let ds = Dataset::load(data)?;
    let seed = common.seed.unwrap_or(0);
    let mut relevance = Vec::new();
    for &m in methods {
        let mcfg = MethodConfig::default_for(m, model.modality());
        relevance.push(explain_all(&model, &ds, &mcfg, n, seed)?.into_iter().map(|e| e.relevance).collect::<Vec<_>>());
    }
    let labels = methods.iter().map(|m| m.id().to_string()).collect();
    let matrix = IsMatrix::from_relevance(labels, &relevance, k)?;
    write_json(&common.out.join("compare.json"), &matrix)?;
    print!("{:>10}", "");
    for l in &matrix.labels {
        print!("{l:>10}");
    }
    println!();
    for (l, row) in matrix.labels.iter().zip(&matrix.values) {
        print!("{l:>10}");
        for v in row {
            print!("{v:>10.3}");
        }
        println!();
    }
    Ok(Outcome::Done)
}

fn report(common: &Common) -> Result<Outcome> {
    let cfg = load_config(common)?;
    let (report, artifacts) = run_collect(&cfg)?;
    write_outputs(&common.out, &report, &artifacts)?;
    println!("{:<10} {:>8} {:>8} {:>8} {:>8}  grades (da/maz/stab/compl/eff)", "method", "da", "maz", "stab", "compl");
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
    let g = |v: Option<explainbench::bench::Grade>| v.map_or("-".to_string(), |g| g.to_string());
    for row in &report.summary {
        println!(
            "{:<10} {:>8} {:>8} {:>8} {:>8}  {}/{}/{}/{}/{}",
            row.method.id(),
            fmt(row.da_auc),
            fmt(row.maz_auc),
            fmt(row.stability_is),
            fmt(row.completeness),
            g(row.grades.descriptive_accuracy),
            g(row.grades.sparsity),
            g(row.grades.stability),
            g(row.grades.completeness),
            g(row.grades.efficiency),
        );
    }
    for e in &report.errors {
        eprintln!("stage {} failed on {}: {}", e.stage, e.dataset, e.message);
    }
    Ok(if report.is_partial() { Outcome::Partial(report.errors.len()) } else { Outcome::Done })
}

fn render(common: &Common, data: &Path, explanations: &Path) -> Result<Outcome> {
    let ds = Dataset::load(data)?;
    let explained = load_explanations(explanations)?;
    if explained.len() > ds.len() {
        return Err(Error::InvalidInput("more explanations than samples".into()));
    }
    fs::create_dir_all(&common.out)?;
    for (s, e) in ds.samples.iter().zip(&explained) {
        let html = render_heatmap(s, e, &feature_labels(&ds, s))?;
        fs::write(common.out.join(format!("{}_{}.html", e.method, s.id)), html)?;
    }
    println!("wrote {} heatmaps", explained.len());
    Ok(Outcome::Done)
}

fn dispatch(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Synth(c) => synth(c),
        Command::Train { common, data } => train(common, data.as_deref()),
        Command::Explain { common, model, data, method, n } => explain(common, model, data, *method, *n),
        Command::Evaluate { common, model, data, explanations, k } => evaluate(common, model, data, explanations, *k),
        Command::Steal { common, model, data, k, layers, units, n } => steal_cmd(common, model, data, *k, layers, *units, *n),
        Command::Compare { common, model, data, method, k, n } => compare(common, model, data, method, *k, *n),
        Command::Report(c) => report(c),
        Command::Render { common, data, explanations } => render(common, data, explanations),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(&cli.command) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Partial(n)) => {
            eprintln!("{n} stage(s) failed; partial results written");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidInput(_) | Error::Json(_) | Error::Io(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
