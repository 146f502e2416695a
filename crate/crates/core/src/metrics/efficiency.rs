use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::explain::{Explainer, Method};
use crate::nn::{Model, Sample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRow {
    pub method: Method,
    /// Median seconds per sample, one call per sample.
    pub per_sample_s: f64,
    /// Median seconds per sample when the whole set is explained in one batch.
    pub batched_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub n_samples: usize,
    pub repeats: usize,
    pub rows: Vec<EfficiencyRow>,
}

impl EfficiencyReport {
    pub fn row(&self, method: Method) -> Option<&EfficiencyRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Wall-clock runtime per explanation on a single worker thread. Each method
/// gets one untimed warm-up call; the medians over `repeats` timed passes are
/// reported.
pub fn efficiency_bench(
    explainers: &[&dyn Explainer],
    model: &Model,
    samples: &[Sample],
    repeats: usize,
    seed: u64,
) -> Result<EfficiencyReport> {
    if repeats == 0 {
        return invalid("efficiency benchmark needs at least one repeat");
    }
    if samples.is_empty() {
        return invalid("efficiency benchmark needs at least one sample");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot build timing pool: {e}")))?;
    let classes = samples.iter().map(|s| model.predict(s)).collect::<Result<Vec<_>>>()?;
    let seeds = vec![seed; samples.len()];
    let n = samples.len() as f64;
    pool.install(|| {
        let rows = explainers
            .iter()
            .map(|ex| {
                ex.explain(model, &samples[0], classes[0], seed)?;
                let mut single = Vec::with_capacity(repeats);
                let mut batched = Vec::with_capacity(repeats);
                for _ in 0..repeats {
                    let t = Instant::now();
                    for (s, &c) in samples.iter().zip(&classes) {
                        ex.explain(model, s, c, seed)?;
                    }
                    single.push(t.elapsed().as_secs_f64() / n);
                    let t = Instant::now();
                    ex.explain_batch(model, samples, &classes, &seeds)?;
                    batched.push(t.elapsed().as_secs_f64() / n);
                }
                Ok(EfficiencyRow { method: ex.method(), per_sample_s: median(single), batched_s: median(batched) })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EfficiencyReport { n_samples: samples.len(), repeats, rows })
    })
}
