// Median wall time per sample, unbatched and batched, for white-box and
// perturbation-based explainers.

use explainbench::bench::{synth_dataset, SynthSpec};
use explainbench::black::{LimeConfig, LimeExplainer, ShapConfig, ShapExplainer};
use explainbench::explain::Explainer;
use explainbench::metrics::efficiency_bench;
use explainbench::train::{fit, ModelTemplate, TrainConfig};
use explainbench::white::{GradientsExplainer, LrpConfig, LrpExplainer};
use explainbench::Result;

pub fn run_example() -> Result<()> {
    let spec: SynthSpec = serde_json::from_str(r#"{"kind": "dense-binary", "n": 100, "d": 50, "seed": 2}"#)?;
    let data = synth_dataset(&spec, 0)?;
    let (model, _) = fit(&ModelTemplate::mlp(vec![32]), &data, &TrainConfig { epochs: 5, ..Default::default() })?;
    let gradients = GradientsExplainer;
    let lrp = LrpExplainer(LrpConfig::default());
    let lime = LimeExplainer(LimeConfig::default());
    let shap = ShapExplainer(ShapConfig::default());
    let explainers: [&dyn Explainer; 4] = [&gradients, &lrp, &lime, &shap];
    let report = efficiency_bench(&explainers, &model, &data.samples[..5], 2, 0)?;
    for row in &report.rows {
        println!("{:<10} {:>12.3e} s/sample  {:>12.3e} s/sample batched", row.method, row.per_sample_s, row.batched_s);
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
