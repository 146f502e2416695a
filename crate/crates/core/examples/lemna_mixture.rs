// The fused-lasso mixture regression behind LEMNA: piecewise-constant
// smoothing with the TV proximal operator, then a two-component fit.

use explainbench::black::{fit_mixture, total_variation, tv_prox, LemnaConfig};
use explainbench::rng::rng_from_seed;
use explainbench::Result;
use rand::Rng;

pub fn run_example() -> Result<()> {
    let noisy = [0.1, -0.05, 0.2, 2.1, 1.9, 2.05, 1.95, -0.1, 0.0, 0.05];
    for lambda in [0.0, 0.2, 5.0] {
        let smooth = tv_prox(&noisy, lambda);
        println!("tv_prox lambda {lambda:>3}: TV {:.3}", total_variation(&smooth));
    }

    // Two linear regimes over 8 binary features.
    let d = 8;
    let mut rng = rng_from_seed(3);
    let mut masks = Vec::new();
    let mut y = Vec::new();
    for i in 0..400 {
        let m: Vec<bool> = (0..d).map(|_| rng.gen_bool(0.5)).collect();
        let x = |j: usize| if m[j] { 1.0 } else { 0.0 };
        let v = if i % 3 == 0 { 2.0 * x(0) + 2.0 * x(1) } else { -x(5) + 0.5 };
        y.push(v + rng.gen_range(-0.01..0.01));
        masks.push(m);
    }
    let cfg = LemnaConfig { k: 2, lambda: Some(0.0), ..Default::default() };
    let fit = fit_mixture(&masks, &y, &cfg, 17)?;
    println!("mixing weights {:?}, converged {}", fit.pi, fit.converged);
    for (k, b) in fit.beta.iter().enumerate() {
        let rounded: Vec<f64> = b.iter().map(|v| (v * 100.0).round() / 100.0).collect();
        println!("component {k}: {rounded:?}");
    }
    println!("objective went from {:.2} to {:.2}", fit.objective[0], fit.objective[fit.objective.len() - 1]);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
