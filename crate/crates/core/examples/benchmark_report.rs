// Full benchmark run from a JSON configuration, producing the report,
// curve CSVs and heatmaps in memory.

use explainbench::bench::{run_collect, BenchConfig};
use explainbench::Result;

const CONFIG: &str = r#"{
    "seed": 42,
    "datasets": [{
        "name": "planted",
        "synth": {"kind": "dense-binary", "n": 200, "d": 16, "planted": 2},
        "model": {"arch": "mlp", "hidden": [12]},
        "train": {"epochs": 20, "learning_rate": 0.01}
    }],
    "methods": ["gradients", "ig", "lrp", {"method": "lime", "l": 200}, "random"],
    "n_explain": 6,
    "completeness": {"l": 100, "n_samples": 40}
}"#;

pub fn run_example() -> Result<()> {
    let config = BenchConfig::from_json(CONFIG)?;
    let (report, artifacts) = run_collect(&config)?;
    for row in &report.summary {
        println!(
            "{:<10} DA-AUC {:>6}  sparsity grade {:>6}",
            row.method,
            row.da_auc.map_or("-".into(), |v| format!("{v:.3}")),
            row.grades.sparsity.map_or("-".into(), |g| g.to_string())
        );
    }
    println!("{} artifact files, {} stage errors", artifacts.files.len(), report.errors.len());
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
