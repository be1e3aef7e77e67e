//! Runs a small config-driven sweep into a temporary directory and lists
//! the artifacts and plot tables it produced.

use control_landscape::experiment::{run_experiment, ExperimentConfig, RunOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("control-landscape-example");
    let text = format!(
        include_str!("configs/small_sweep.toml"),
        output = out.display()
    );
    let cfg = ExperimentConfig::parse(&text)?;
    let manifest = run_experiment(&cfg, &RunOptions::default())?;
    for cell in &manifest.cells {
        println!(
            "{:<28} {:?}  {} evaluations  seeds {:?}",
            cell.id, cell.status, cell.fidelity_evaluations, cell.seeds
        );
    }
    println!("{} files under {}", manifest.files.len(), out.display());
    for f in manifest
        .files
        .iter()
        .filter(|f| f.path.starts_with("plots/"))
    {
        println!("  {} {}", &f.sha256[..12], f.path);
    }
    Ok(())
}
