// KernelSHAP in exact mode against brute-force Shapley enumeration, then in
// sampled mode on a wider input.

use explainbench::black::{exact_shapley, explain_shap, ShapConfig};
use explainbench::nn::{Dense, Layer, Modality, Model, Sample};
use explainbench::Result;

fn model(d: usize) -> Result<Model> {
    let w1: Vec<f64> = (0..6 * d).map(|i| ((i * 7919 % 23) as f64 / 11.0) - 1.0).collect();
    let w2: Vec<f64> = (0..12).map(|i| ((i * 104729 % 17) as f64 / 8.0) - 1.0).collect();
    Model::new(
        Modality::DenseReal,
        2,
        d,
        vec![
            Layer::Dense(Dense::new(6, d, w1, vec![0.1; 6])),
            Layer::Relu,
            Layer::Dense(Dense::new(2, 6, w2, vec![0.0; 2])),
        ],
    )
}

pub fn run_example() -> Result<()> {
    let d = 6;
    let m = model(d)?;
    let x = Sample::dense("x", (0..d).map(|i| 0.3 + 0.1 * i as f64).collect(), 0);
    let class = m.predict(&x)?;
    let kernel = explain_shap(&m, &x, class, &ShapConfig::default(), 0)?;
    let brute = exact_shapley(&m, &x, class)?;
    let gap = kernel.relevance.iter().zip(&brute).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("exact KernelSHAP {:?}", kernel.relevance);
    println!("enumeration      {brute:?}");
    println!("max difference   {gap:.2e}");

    let d = 16;
    let m = model(d)?;
    let x = Sample::dense("y", vec![1.0; d], 0);
    let sampled = explain_shap(&m, &x, m.predict(&x)?, &ShapConfig { l: 2000, ..Default::default() }, 7)?;
    println!("sampled KernelSHAP (d={d}) sum {:.4}", sampled.relevance.iter().sum::<f64>());
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
