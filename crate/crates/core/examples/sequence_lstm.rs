// Trains an LSTM on motif sequences and explains one positive sample with
// LRP and integrated gradients, token by token.

use explainbench::bench::{synth_dataset, token_name, SynthSpec};
use explainbench::train::{fit, HeadKind, ModelTemplate, TrainConfig};
use explainbench::white::{explain_ig, explain_lrp, IgConfig, LrpConfig};
use explainbench::Result;

pub fn run_example() -> Result<()> {
    let spec = SynthSpec::Sequence {
        n: 300,
        length: 12,
        vocab: 12,
        motif: vec![4, 7],
        min_length: None,
        positive_fraction: 0.5,
        seed: Some(5),
    };
    let data = synth_dataset(&spec, 0)?;
    let template = ModelTemplate::Lstm { hidden: 8, embed_dim: Some(6), head: HeadKind::Softmax };
    let cfg = TrainConfig { epochs: 40, learning_rate: 0.02, seed: 1, ..Default::default() };
    let (model, log) = fit(&template, &data, &cfg)?;
    println!("lstm held-out accuracy {:.3}", log.metrics.accuracy);

    let sample = data.samples.iter().find(|s| s.label == 1).expect("positives exist");
    let class = model.predict(sample)?;
    let lrp = explain_lrp(&model, sample, class, &LrpConfig::default())?;
    let ig = explain_ig(&model, sample, class, &IgConfig::for_modality(model.modality()))?;
    let tokens = sample.input.as_tokens().expect("token input");
    println!("{:>6} {:>10} {:>10}", "token", "lrp", "ig");
    for ((t, l), i) in tokens.iter().zip(&lrp.relevance).zip(&ig.relevance) {
        println!("{:>6} {l:>10.4} {i:>10.4}", token_name(*t));
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
