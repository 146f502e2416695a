// Repeated-run stability of deterministic and sampling explainers, and the
// per-class completeness of perturbation sets.

use explainbench::bench::{synth_dataset, SynthSpec};
use explainbench::black::{LimeConfig, LimeExplainer};
use explainbench::explain::RandomExplainer;
use explainbench::metrics::{completeness_stats, stability_run};
use explainbench::train::{fit, ModelTemplate, TrainConfig};
use explainbench::white::{LrpConfig, LrpExplainer};
use explainbench::Result;

pub fn run_example() -> Result<()> {
    let spec: SynthSpec = serde_json::from_str(
        r#"{"kind": "dense-binary", "n": 300, "d": 30, "planted": 2, "benign": 3,
            "benign_rate_negative": 0.05, "benign_rate_positive": 0.7, "seed": 21}"#,
    )?;
    let data = synth_dataset(&spec, 0)?;
    let (model, _) = fit(&ModelTemplate::mlp(vec![16]), &data, &TrainConfig { learning_rate: 0.01, ..Default::default() })?;
    let samples = &data.samples[..10];

    let lrp = stability_run(&LrpExplainer(LrpConfig::default()), &model, samples, 3, 5, 1)?;
    let lime = stability_run(&LimeExplainer(LimeConfig { l: 200, ..Default::default() }), &model, samples, 3, 5, 1)?;
    let random = stability_run(&RandomExplainer, &model, samples, 3, 5, 1)?;
    for r in [lrp, lime, random] {
        println!("{:<7} mean IS {:.3}  stable {}", r.method, r.mean_is, r.stable);
    }

    let report = completeness_stats(&model, &data.subset(&(0..100).collect::<Vec<_>>()), 200, 0.05, 5)?;
    println!("{report}");
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
