// Trains surrogates of increasing depth from an oracle's predictions and
// compares their LRP explanations with the oracle's.

use explainbench::bench::{steal_experiment, synth_dataset, SynthSpec};
use explainbench::train::{fit, ModelTemplate, TrainConfig};
use explainbench::Result;

pub fn run_example() -> Result<()> {
    let spec: SynthSpec = serde_json::from_str(r#"{"kind": "dense-binary", "n": 400, "d": 20, "planted": 2}"#)?;
    let train = synth_dataset(&spec, 1)?;
    let queries = synth_dataset(&spec.with_n(600), 2)?;
    let cfg = TrainConfig { learning_rate: 0.01, ..Default::default() };
    let (oracle, _) = fit(&ModelTemplate::mlp(vec![16]), &train, &cfg)?;

    let report = steal_experiment(&oracle, &queries, &train.samples[..20], &[1, 2], 32, &cfg, 5)?;
    for log in &report.surrogates {
        println!("{} hidden layer(s): agreement with oracle {:.3}", log.n_hidden_layers, log.agreement);
    }
    println!(
        "mean IS surrogate-vs-surrogate {:.3}, surrogate-vs-oracle {:.3}",
        report.surrogate_vs_surrogate.unwrap_or(f64::NAN),
        report.surrogate_vs_oracle.unwrap_or(f64::NAN)
    );
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
