// Renders an HTML heatmap of token relevance for a hand-built explanation.

use explainbench::bench::{render_heatmap, token_name};
use explainbench::explain::{Explanation, Method};
use explainbench::nn::Sample;
use explainbench::Result;

pub fn run_example() -> Result<()> {
    let sample = Sample::tokens("gadget-1", vec![3, 5, 9, 7, 0, 0], 1);
    let explanation = Explanation::new(Method::Lrp, 1, vec![0.1, 0.9, 1.2, -0.4, 0.0, 0.0]);
    let names: Vec<String> = sample.input.as_tokens().unwrap_or_default().iter().map(|&t| token_name(t)).collect();
    let html = render_heatmap(&sample, &explanation, &names)?;
    let path = std::env::temp_dir().join(format!("explainbench-heatmap-{}.html", std::process::id()));
    std::fs::write(&path, &html)?;
    println!("wrote {} bytes to {}", html.len(), path.display());
    std::fs::remove_file(&path)?;
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
