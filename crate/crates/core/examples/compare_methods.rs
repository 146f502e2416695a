// Pairwise top-k overlap between the explanations of different methods for
// the same predictions.

use explainbench::bench::{synth_dataset, IsMatrix, SynthSpec};
use explainbench::explain::{Method, MethodConfig};
use explainbench::train::{fit, ModelTemplate, TrainConfig};
use explainbench::Result;

pub fn run_example() -> Result<()> {
    let spec: SynthSpec = serde_json::from_str(r#"{"kind": "dense-binary", "n": 300, "d": 25, "planted": 3, "seed": 13}"#)?;
    let data = synth_dataset(&spec, 0)?;
    let (model, _) = fit(&ModelTemplate::mlp(vec![16]), &data, &TrainConfig { learning_rate: 0.01, ..Default::default() })?;
    let methods = [Method::Gradients, Method::Ig, Method::Lrp, Method::Shap];
    let samples: Vec<_> = data.samples.iter().filter(|s| s.label == 1).take(8).collect();

    let mut relevance = Vec::new();
    for m in methods {
        let ex = MethodConfig::default_for(m, model.modality()).build();
        let mut group = Vec::new();
        for (i, s) in samples.iter().enumerate() {
            group.push(ex.explain(&model, s, model.predict(s)?, i as u64)?.relevance);
        }
        relevance.push(group);
    }
    let matrix = IsMatrix::from_relevance(methods.iter().map(|m| m.to_string()).collect(), &relevance, 3)?;
    for (label, row) in matrix.labels.iter().zip(&matrix.values) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.2}")).collect();
        println!("{label:<10} {}", cells.join("  "));
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
