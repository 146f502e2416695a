// LIME on a trained MLP: perturb, fit a weighted sparse linear surrogate,
// and report the top features and the share of opposite-class perturbations.

use explainbench::bench::{synth_dataset, SynthSpec};
use explainbench::black::{explain_lime, LimeConfig};
use explainbench::metrics::top_k;
use explainbench::train::{fit, ModelTemplate, TrainConfig};
use explainbench::Result;

pub fn run_example() -> Result<()> {
    let spec: SynthSpec = serde_json::from_str(r#"{"kind": "dense-binary", "n": 300, "d": 20, "planted": 2, "seed": 4}"#)?;
    let data = synth_dataset(&spec, 0)?;
    let (model, _) = fit(&ModelTemplate::mlp(vec![12]), &data, &TrainConfig { learning_rate: 0.01, ..Default::default() })?;

    let positive = data.samples.iter().find(|s| s.label == 1).expect("positives exist");
    let class = model.predict(positive)?;
    let e = explain_lime(&model, positive, class, &LimeConfig::default(), 99)?;
    println!("top-3 features {:?}", top_k(&e.relevance, 3)?);
    println!("opposite-class fraction {:.3}, degenerate {}", e.opposite_fraction.unwrap_or(0.0), e.degenerate);

    let negative = data.samples.iter().find(|s| s.label == 0).expect("negatives exist");
    let e = explain_lime(&model, negative, model.predict(negative)?, &LimeConfig::default(), 99)?;
    println!(
        "negative sample: opposite-class fraction {:.3}, degenerate {}",
        e.opposite_fraction.unwrap_or(0.0),
        e.degenerate
    );
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
