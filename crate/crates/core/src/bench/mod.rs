//! End-to-end benchmark: synthesize data, train fixtures, explain, score
//! every criterion and write a report with curves and heatmaps.

mod compare;
mod config;
mod grade;
mod heatmap;
mod synth;

pub use compare::{steal_experiment, IsMatrix, StealReport};
pub use config::{
    BenchConfig, CompareConfig, CompletenessConfig, DatasetConfig, EfficiencyConfig, MethodEntry, MetricKind, StealConfig,
};
pub use grade::{grade_relative, Grade, GRADE_TOLERANCE};
pub use heatmap::render_heatmap;
pub use synth::{synth_dataset, token_name, SynthSpec, NOOP_TOKEN, PAD_TOKEN};

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::Result;
use crate::explain::{Explainer, Explanation, Method, MethodConfig};
use crate::metrics::{
    completeness_stats, da_curve, default_k_grid, default_r_grid, efficiency_bench, maz_curve, AblationOperator,
    CompletenessReport, EfficiencyReport, MetricCurve, StabilityReport,
};
use crate::nn::{Input, Modality, Sample};
use crate::rng::SeedSplitter;
use crate::train::{fit, TrainLog};

/// A stage that failed; the rest of the run continues without it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub dataset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSeeds {
    pub synth: u64,
    pub train: u64,
    pub explain: u64,
    pub stability: u64,
    pub completeness: u64,
    pub steal: u64,
}

/// Grades per criterion; `None` where the criterion was not measured or the
/// method is the random reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Grades {
    pub descriptive_accuracy: Option<Grade>,
    pub sparsity: Option<Grade>,
    pub stability: Option<Grade>,
    pub completeness: Option<Grade>,
    pub efficiency: Option<Grade>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    /// Mean area under the deletion curve (lower is better).
    pub da_auc: Option<f64>,
    /// Mean area under the mass-around-zero curve (higher is sparser).
    pub maz_auc: Option<f64>,
    pub stability: Option<StabilityReport>,
    /// Share of explanations flagged degenerate.
    pub degenerate_fraction: Option<f64>,
    /// Median batched seconds per sample.
    pub runtime_s: Option<f64>,
    pub grades: Grades,
}

impl MethodReport {
    fn new(method: Method) -> Self {
        Self {
            method,
            da_auc: None,
            maz_auc: None,
            stability: None,
            degenerate_fraction: None,
            runtime_s: None,
            grades: Grades::default(),
        }
    }

    fn completeness(&self) -> Option<f64> {
        self.degenerate_fraction.map(|d| 1.0 - d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub name: String,
    pub modality: Modality,
    pub n_samples: usize,
    pub n_explained: usize,
    pub seeds: DatasetSeeds,
    pub train: Option<TrainLog>,
    pub methods: Vec<MethodReport>,
    pub completeness: Option<CompletenessReport>,
    pub efficiency: Option<EfficiencyReport>,
    pub compare: Option<IsMatrix>,
    pub steal: Option<StealReport>,
}

/// Unweighted mean over datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub da_auc: Option<f64>,
    pub maz_auc: Option<f64>,
    pub stability_is: Option<f64>,
    pub completeness: Option<f64>,
    pub runtime_s: Option<f64>,
    pub grades: Grades,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub root_seed: u64,
    pub datasets: Vec<DatasetReport>,
    pub summary: Vec<MethodSummary>,
    pub errors: Vec<StageError>,
}

impl BenchReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn is_partial(&self) -> bool {
        !self.errors.is_empty()
    }

    pub fn dataset(&self, name: &str) -> Option<&DatasetReport> {
        self.datasets.iter().find(|d| d.name == name)
    }
}

impl DatasetReport {
    pub fn method(&self, m: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|r| r.method == m)
    }
}

/// Files produced alongside the report.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    /// `(relative path, contents)`.
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    fn add(&mut self, path: String, contents: String) {
        self.files.push((path, contents));
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        for (rel, contents) in &self.files {
            let p = dir.join(rel);
            if let Some(parent) = p.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(p, contents)?;
        }
        Ok(())
    }
}

/// Runs the benchmark and, if `out_dir` is set, writes `report.json`, the
/// curve CSVs and the heatmaps there.
pub fn run(config: &BenchConfig) -> Result<BenchReport> {
    let (report, artifacts) = run_collect(config)?;
    if let Some(dir) = &config.out_dir {
        write_outputs(dir, &report, &artifacts)?;
    }
    Ok(report)
}

pub fn write_outputs(dir: &Path, report: &BenchReport, artifacts: &Artifacts) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), report.to_json()?)?;
    artifacts.write(dir)
}

/// Runs the benchmark without touching the file system.
pub fn run_collect(config: &BenchConfig) -> Result<(BenchReport, Artifacts)> {
    config.validate()?;
    let root = SeedSplitter::new(config.seed);
    let mut errors = Vec::new();
    let mut artifacts = Artifacts::default();
    let datasets = config
        .datasets
        .iter()
        .enumerate()
        .map(|(i, d)| run_dataset(config, d, root.child("dataset", i as u64), &mut errors, &mut artifacts))
        .collect::<Vec<_>>();
    let summary = summarize(config, &datasets);
    Ok((BenchReport { root_seed: config.seed, datasets, summary, errors }, artifacts))
}

/// Display name of every feature of `sample`: dataset feature names for dense
/// inputs, token names for sequences.
pub fn feature_labels(ds: &Dataset, sample: &Sample) -> Vec<String> {
    match &sample.input {
        Input::Dense(v) => (0..v.len()).map(|j| ds.feature_name(j)).collect(),
        Input::Tokens(t) => t.iter().map(|&id| token_name(id)).collect(),
    }
}

fn mean(v: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn mean_curve(curves: &[MetricCurve]) -> Result<MetricCurve> {
    let n = curves.len() as f64;
    let grid = curves[0].grid.clone();
    let values = (0..grid.len()).map(|j| curves.iter().map(|c| c.values[j]).sum::<f64>() / n).collect();
    MetricCurve::new(grid, values)
}

struct Stage<'a> {
    dataset: &'a str,
    errors: &'a mut Vec<StageError>,
}

impl Stage<'_> {
    fn record<T>(&mut self, stage: &str, method: Option<Method>, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.errors.push(StageError {
                    stage: stage.into(),
                    dataset: self.dataset.into(),
                    method,
                    message: e.to_string(),
                });
                None
            }
        }
    }
}

fn run_dataset(
    config: &BenchConfig,
    dc: &DatasetConfig,
    split: SeedSplitter,
    errors: &mut Vec<StageError>,
    artifacts: &mut Artifacts,
) -> DatasetReport {
    let modality = dc.synth.modality();
    let seeds = DatasetSeeds {
        synth: dc.synth.seed().unwrap_or(split.derive("synth", 0)),
        train: split.derive("train", 0),
        explain: split.derive("explain", 0),
        stability: split.derive("stability", 0),
        completeness: split.derive("completeness", 0),
        steal: split.derive("steal", 0),
    };
    let mut report = DatasetReport {
        name: dc.name.clone(),
        modality,
        n_samples: 0,
        n_explained: 0,
        seeds,
        train: None,
        methods: Vec::new(),
        completeness: None,
        efficiency: None,
        compare: None,
        steal: None,
    };
    let mut stage = Stage { dataset: &dc.name, errors };
    let Some(ds) = stage.record("synth", None, synth_dataset(&dc.synth, seeds.synth)) else { return report };
    report.n_samples = ds.len();
    let mut tcfg = dc.train.clone();
    tcfg.seed = seeds.train;
    let Some((model, log)) = stage.record("train", None, fit(&dc.model, &ds, &tcfg)) else { return report };
    report.train = Some(log);
    let Some(op) = stage.record("ablation", None, AblationOperator::for_model(&model)) else { return report };

    let samples: Vec<Sample> = ds.samples.iter().take(config.n_explain).cloned().collect();
    report.n_explained = samples.len();
    let d = ds.meta.n_features;
    let k = config.k.unwrap_or(10).min(d);
    let classes: Vec<Option<usize>> = samples.iter().map(|s| model.predict(s).ok()).collect();
    let Some(classes) = stage.record(
        "predict",
        None,
        classes.into_iter().collect::<Option<Vec<_>>>().ok_or_else(|| crate::Error::NumericalFailure("prediction failed".into())),
    ) else {
        return report;
    };

    let method_cfgs: Vec<MethodConfig> = config.methods.iter().map(|m| m.resolve(modality)).collect();
    let explainers: Vec<Box<dyn Explainer>> = method_cfgs.iter().map(MethodConfig::build).collect();
    let explain_split = SeedSplitter::new(seeds.explain);
    let k_grid = default_k_grid(modality, d);
    let r_grid = default_r_grid();
    let mut all_relevance: Vec<(Method, Vec<Vec<f64>>)> = Vec::new();

    for (mi, ex) in explainers.iter().enumerate() {
        let method = ex.method();
        let mut mr = MethodReport::new(method);
        let explained: Result<Vec<Explanation>> = samples
            .par_iter()
            .zip(&classes)
            .enumerate()
            .map(|(i, (s, &c))| ex.explain(&model, s, c, explain_split.derive(method.id(), i as u64)))
            .collect();
        let Some(explained) = stage.record("explain", Some(method), explained) else {
            report.methods.push(mr);
            continue;
        };
        mr.degenerate_fraction = Some(explained.iter().filter(|e| e.degenerate).count() as f64 / explained.len() as f64);
        if let Some((s, e)) = samples.first().zip(explained.first()) {
            if let Some(html) = stage.record("render", Some(method), render_heatmap(s, e, &feature_labels(&ds, s))) {
                artifacts.add(format!("heatmaps/{}_{}_{}.html", dc.name, method, s.id), html);
            }
        }
        if config.wants(MetricKind::Da) {
            let curves: Result<Vec<MetricCurve>> = samples
                .par_iter()
                .zip(&explained)
                .map(|(s, e)| da_curve(&model, s, &e.relevance, &k_grid, op))
                .collect();
            if let Some(curves) = stage.record("descriptive-accuracy", Some(method), curves) {
                mr.da_auc = mean(curves.iter().map(|c| c.auc));
                if let Some(m) = stage.record("descriptive-accuracy", Some(method), mean_curve(&curves)) {
                    artifacts.add(format!("curves/{}_{}_da.csv", dc.name, method), m.to_csv("k", "score"));
                }
            }
        }
        if config.wants(MetricKind::Maz) {
            let curves: Result<Vec<MetricCurve>> = explained.iter().map(|e| maz_curve(&e.relevance, &r_grid)).collect();
            if let Some(curves) = stage.record("sparsity", Some(method), curves) {
                mr.maz_auc = mean(curves.iter().map(|c| c.auc));
                if let Some(m) = stage.record("sparsity", Some(method), mean_curve(&curves)) {
                    artifacts.add(format!("curves/{}_{}_maz.csv", dc.name, method), m.to_csv("r", "maz"));
                }
            }
        }
        if config.wants(MetricKind::Stability) {
            let seed = SeedSplitter::new(seeds.stability).derive(method.id(), mi as u64);
            mr.stability = stage.record(
                "stability",
                Some(method),
                crate::metrics::stability_run(ex.as_ref(), &model, &samples, config.stability_runs, k, seed),
            );
        }
        all_relevance.push((method, explained.into_iter().map(|e| e.relevance).collect()));
        report.methods.push(mr);
    }

    if config.wants(MetricKind::Completeness) {
        let cc = &config.completeness;
        let subset = match cc.n_samples {
            Some(n) => ds.subset(&(0..n.min(ds.len())).collect::<Vec<_>>()),
            None => ds.clone(),
        };
        report.completeness =
            stage.record("completeness", None, completeness_stats(&model, &subset, cc.l, cc.p_threshold, seeds.completeness));
    }

    if config.wants(MetricKind::Efficiency) && !explainers.is_empty() {
        let n = config.efficiency.n_samples.min(samples.len());
        let refs: Vec<&dyn Explainer> = explainers.iter().map(|b| b.as_ref()).collect();
        report.efficiency = stage.record(
            "efficiency",
            None,
            efficiency_bench(&refs, &model, &samples[..n], config.efficiency.repeats, seeds.explain),
        );
        if let Some(eff) = &report.efficiency {
            for mr in &mut report.methods {
                mr.runtime_s = eff.row(mr.method).map(|r| r.batched_s);
            }
        }
    }

    if let Some(cc) = &config.compare {
        if all_relevance.len() >= 2 {
            let labels = all_relevance.iter().map(|(m, _)| m.id().to_string()).collect();
            let groups: Vec<Vec<Vec<f64>>> = all_relevance.iter().map(|(_, r)| r.clone()).collect();
            report.compare = stage.record("compare", None, IsMatrix::from_relevance(labels, &groups, cc.k.min(d)));
        }
    }

    if let Some(sc) = &config.steal {
        let steal_split = SeedSplitter::new(seeds.steal);
        let queries_spec = reseed(&dc.synth, steal_split.derive("queries", 0)).with_n(sc.n_queries);
        let mut tcfg = sc.train.clone();
        tcfg.seed = steal_split.derive("train", 0);
        let result = synth_dataset(&queries_spec, 0).and_then(|q| {
            steal_experiment(&model, &q, &samples, &sc.layers, sc.units_per_layer, &tcfg, sc.k.min(d))
        });
        report.steal = stage.record("steal", None, result);
    }

    grade_dataset(&mut report.methods);
    report
}

fn reseed(spec: &SynthSpec, seed: u64) -> SynthSpec {
    let mut s = spec.clone();
    match &mut s {
        SynthSpec::DenseBinary { seed: sd, .. } | SynthSpec::Sequence { seed: sd, .. } => *sd = Some(seed),
    }
    s
}

type Column<T> = fn(&T) -> Option<f64>;
type Setter = fn(&mut Grades, Option<Grade>);

fn criteria<T>() -> [(Column<T>, bool, Setter); 5]
where
    T: Criteria,
{
    [
        (T::da, false, |g, v| g.descriptive_accuracy = v),
        (T::maz, true, |g, v| g.sparsity = v),
        (T::stability, true, |g, v| g.stability = v),
        (T::completeness, true, |g, v| g.completeness = v),
        (T::runtime, false, |g, v| g.efficiency = v),
    ]
}

trait Criteria {
    fn method(&self) -> Method;
    fn grades_mut(&mut self) -> &mut Grades;
    fn da(&self) -> Option<f64>;
    fn maz(&self) -> Option<f64>;
    fn stability(&self) -> Option<f64>;
    fn completeness(&self) -> Option<f64>;
    fn runtime(&self) -> Option<f64>;
}

impl Criteria for MethodReport {
    fn method(&self) -> Method {
        self.method
    }
    fn grades_mut(&mut self) -> &mut Grades {
        &mut self.grades
    }
    fn da(&self) -> Option<f64> {
        self.da_auc
    }
    fn maz(&self) -> Option<f64> {
        self.maz_auc
    }
    fn stability(&self) -> Option<f64> {
        self.stability.as_ref().map(|s| s.mean_is)
    }
    fn completeness(&self) -> Option<f64> {
        MethodReport::completeness(self)
    }
    fn runtime(&self) -> Option<f64> {
        self.runtime_s
    }
}

impl Criteria for MethodSummary {
    fn method(&self) -> Method {
        self.method
    }
    fn grades_mut(&mut self) -> &mut Grades {
        &mut self.grades
    }
    fn da(&self) -> Option<f64> {
        self.da_auc
    }
    fn maz(&self) -> Option<f64> {
        self.maz_auc
    }
    fn stability(&self) -> Option<f64> {
        self.stability_is
    }
    fn completeness(&self) -> Option<f64> {
        self.completeness
    }
    fn runtime(&self) -> Option<f64> {
        self.runtime_s
    }
}

/// Grades each criterion among the methods that measured it; the random
/// reference is never graded.
fn grade_rows<T: Criteria>(rows: &mut [T]) {
    for (col, higher, set) in criteria::<T>() {
        let idx: Vec<usize> = (0..rows.len())
            .filter(|&i| rows[i].method() != Method::Random && col(&rows[i]).is_some_and(f64::is_finite))
            .collect();
        let values: Vec<f64> = idx.iter().map(|&i| col(&rows[i]).expect("filtered")).collect();
        for (&i, g) in idx.iter().zip(grade_relative(&values, higher)) {
            set(rows[i].grades_mut(), Some(g));
        }
    }
}

fn grade_dataset(methods: &mut [MethodReport]) {
    grade_rows(methods);
}

fn summarize(config: &BenchConfig, datasets: &[DatasetReport]) -> Vec<MethodSummary> {
    let mut rows: Vec<MethodSummary> = config
        .methods
        .iter()
        .map(|m| {
            let method = m.method();
            let reports: Vec<&MethodReport> = datasets.iter().filter_map(|d| d.method(method)).collect();
            let avg = |f: fn(&MethodReport) -> Option<f64>| {
                let vals: Vec<f64> = reports.iter().filter_map(|r| f(r)).collect();
                if vals.len() == reports.len() { mean(vals) } else { None }
            };
            MethodSummary {
                method,
                da_auc: avg(|r| r.da_auc),
                maz_auc: avg(|r| r.maz_auc),
                stability_is: avg(|r| r.stability.as_ref().map(|s| s.mean_is)),
                completeness: avg(MethodReport::completeness),
                runtime_s: avg(|r| r.runtime_s),
                grades: Grades::default(),
            }
        })
        .collect();
    grade_rows(&mut rows);
    rows
}
