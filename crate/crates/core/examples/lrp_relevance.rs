// Epsilon-rule LRP on a bias-free ReLU network: relevance is conserved from
// the class score down to the input, up to the stabilizer.

use explainbench::nn::{Dense, Layer, Modality, Model, Sample};
use explainbench::white::{lrp_trace, LrpConfig};
use explainbench::Result;

pub fn run_example() -> Result<()> {
    let layers = vec![
        Layer::Dense(Dense::new(3, 4, vec![0.5, -0.2, 0.8, 0.1, -0.6, 0.9, 0.3, -0.4, 0.2, 0.2, -0.7, 0.6], vec![0.0; 3])),
        Layer::Relu,
        Layer::Dense(Dense::new(2, 3, vec![1.0, -0.5, 0.7, -0.9, 0.8, 0.4], vec![0.0; 2])),
    ];
    let model = Model::new(Modality::DenseReal, 2, 4, layers)?;
    let x = Sample::dense("x", vec![1.0, 0.4, 0.9, -0.2], 0);
    let class = model.predict(&x)?;

    for epsilon in [1e-1, 1e-3, 1e-6] {
        let t = lrp_trace(&model, &x, class, &LrpConfig { epsilon })?;
        let total: f64 = t.relevance.iter().sum();
        println!(
            "eps {epsilon:.0e}: score {:.6}, input relevance sum {:.6}, per layer {:?}",
            t.score, total, t.layer_sums
        );
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
