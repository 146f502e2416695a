// Integrated gradients on a small nonlinear model: the attributions sum to
// the score difference, and the residual shrinks with more steps.

use explainbench::nn::{Dense, Layer, Modality, Model, Sample};
use explainbench::white::{explain_gradients, explain_ig, IgConfig};
use explainbench::Result;

pub fn run_example() -> Result<()> {
    let layers = vec![
        Layer::Dense(Dense::new(4, 3, vec![0.9, -0.4, 0.3, -0.7, 0.8, 0.2, 0.5, 0.5, -0.6, 0.1, -0.3, 1.1], vec![0.1, -0.2, 0.05, 0.0])),
        Layer::Relu,
        Layer::Dense(Dense::new(2, 4, vec![0.7, -0.5, 0.4, 0.9, -0.8, 0.6, -0.2, 0.3], vec![0.0, 0.0])),
        Layer::Softmax,
    ];
    let model = Model::new(Modality::DenseReal, 2, 3, layers)?;
    let x = Sample::dense("x", vec![1.0, 0.5, -0.8], 0);
    let class = model.predict(&x)?;

    let saliency = explain_gradients(&model, &x, class)?;
    println!("gradients           {:?}", saliency.relevance);
    for steps in [8, 64, 512] {
        let e = explain_ig(&model, &x, class, &IgConfig::with_steps(steps))?;
        println!(
            "ig ({steps:>3} steps)    {:?}  completeness residual {:.2e}",
            e.relevance,
            e.completeness_residual.unwrap_or(f64::NAN)
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
