// Generates planted-feature data, trains an MLP on it and saves both to a
// temporary directory.

use explainbench::bench::{synth_dataset, SynthSpec};
use explainbench::data::Dataset;
use explainbench::nn::Model;
use explainbench::train::{fit, ModelTemplate, TrainConfig};
use explainbench::Result;

pub fn run_example() -> Result<()> {
    let spec: SynthSpec = serde_json::from_str(r#"{"kind": "dense-binary", "n": 400, "d": 30, "planted": 2}"#)?;
    let data = synth_dataset(&spec, 11)?;
    let cfg = TrainConfig { epochs: 30, learning_rate: 0.01, seed: 3, ..Default::default() };
    let (model, log) = fit(&ModelTemplate::mlp(vec![16]), &data, &cfg)?;
    println!(
        "trained {} epochs on {} samples, held-out accuracy {:.3}",
        log.epochs.len(),
        log.n_train,
        log.metrics.accuracy
    );

    let dir = std::env::temp_dir().join(format!("explainbench-train-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    data.save(&dir.join("planted.jsonl"))?;
    std::fs::write(dir.join("planted.model.json"), model.to_json()?)?;
    let reloaded = Model::from_json(&std::fs::read_to_string(dir.join("planted.model.json"))?)?;
    let reread = Dataset::load(&dir.join("planted.jsonl"))?;
    assert_eq!(reloaded, model);
    assert_eq!(reread, data);
    println!("saved and reloaded model and data in {}", dir.display());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
