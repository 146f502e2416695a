// Descriptive accuracy (deletion curve) and mass around zero for three
// explainers on one trained model, with the curves written as CSV.

use explainbench::bench::{synth_dataset, SynthSpec};
use explainbench::explain::{Explainer, RandomExplainer};
use explainbench::metrics::{da_curve, default_k_grid, default_r_grid, maz_curve, AblationOperator};
use explainbench::train::{fit, ModelTemplate, TrainConfig};
use explainbench::white::{IgConfig, IgExplainer, LrpConfig, LrpExplainer};
use explainbench::Result;

pub fn run_example() -> Result<()> {
    let spec: SynthSpec = serde_json::from_str(r#"{"kind": "dense-binary", "n": 300, "d": 24, "planted": 1, "seed": 8}"#)?;
    let data = synth_dataset(&spec, 0)?;
    let (model, _) = fit(&ModelTemplate::mlp(vec![16]), &data, &TrainConfig { learning_rate: 0.01, ..Default::default() })?;
    let op = AblationOperator::for_model(&model)?;
    let k_grid = default_k_grid(model.modality(), data.meta.n_features);
    let r_grid = default_r_grid();

    let explainers: Vec<Box<dyn Explainer>> = vec![
        Box::new(IgExplainer(IgConfig::default())),
        Box::new(LrpExplainer(LrpConfig::default())),
        Box::new(RandomExplainer),
    ];
    let positives: Vec<_> = data.samples.iter().filter(|s| s.label == 1).take(10).collect();
    for ex in &explainers {
        let (mut da, mut maz) = (0.0, 0.0);
        let mut last_curve = None;
        for (i, s) in positives.iter().enumerate() {
            let e = ex.explain(&model, s, model.predict(s)?, i as u64)?;
            let c = da_curve(&model, s, &e.relevance, &k_grid, op)?;
            da += c.auc;
            maz += maz_curve(&e.relevance, &r_grid)?.auc;
            last_curve = Some(c);
        }
        let n = positives.len() as f64;
        println!("{:<8} DA-AUC {:.3}  MAZ-AUC {:.3}", ex.method(), da / n, maz / n);
        if let Some(c) = last_curve {
            let csv = c.to_csv("k", "score");
            println!("  first rows of one deletion curve: {}", csv.lines().take(3).collect::<Vec<_>>().join(" | "));
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
