// Builds a small MLP by hand, evaluates it and reads input and parameter
// gradients of a class score.

use explainbench::nn::{Dense, Layer, Modality, Model, Sample};
use explainbench::Result;

pub fn run_example() -> Result<()> {
    let layers = vec![
        Layer::Dense(Dense::new(3, 2, vec![1.0, -1.0, 0.5, 0.5, -0.25, 2.0], vec![0.0, 0.1, -0.2])),
        Layer::Relu,
        Layer::Dense(Dense::new(2, 3, vec![1.0, 0.0, -1.0, -0.5, 1.0, 1.0], vec![0.0, 0.0])),
        Layer::Softmax,
    ];
    let model = Model::new(Modality::DenseReal, 2, 2, layers)?;
    let x = Sample::dense("x", vec![0.8, -0.3], 1);

    let probs = model.forward(&x)?;
    let scores = model.scores(&x)?;
    let class = model.predict(&x)?;
    println!("probabilities {probs:?}");
    println!("class scores  {scores:?} -> predicted class {class}");

    let grad = model.input_gradient(&x, class)?;
    println!("d score[{class}] / dx = {grad:?}");

    let (loss, grads) = model.param_gradient(&[x])?;
    println!("cross-entropy {loss:.6}, first-layer weight gradient {:?}", grads.layers[0][0]);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
