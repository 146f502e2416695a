// How often the top features of each class's explanations occur in each
// class of the data.

use explainbench::bench::{synth_dataset, SynthSpec};
use explainbench::metrics::{prevalence, top_k};
use explainbench::train::{fit, ModelTemplate, TrainConfig};
use explainbench::white::{explain_lrp, LrpConfig};
use explainbench::Result;

pub fn run_example() -> Result<()> {
    let spec: SynthSpec = serde_json::from_str(
        r#"{"kind": "dense-binary", "n": 300, "d": 20, "planted": 2, "benign": 2,
            "benign_rate_negative": 0.1, "benign_rate_positive": 0.8, "seed": 30}"#,
    )?;
    let data = synth_dataset(&spec, 0)?;
    let (model, _) = fit(&ModelTemplate::mlp(vec![16]), &data, &TrainConfig { learning_rate: 0.01, ..Default::default() })?;

    let mut per_class = vec![Vec::new(); 2];
    for class in 0..2 {
        for s in data.samples.iter().filter(|s| s.label == class).take(10) {
            let e = explain_lrp(&model, s, class, &LrpConfig::default())?;
            for f in top_k(&e.relevance, 2)? {
                if !per_class[class].contains(&f) {
                    per_class[class].push(f);
                }
            }
        }
    }
    println!("{}", prevalence(&data, &per_class)?);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
