//! Embeds SD_2 minima in two dimensions and clusters the map by density
//! peaks. Writes `x,y,label,fidelity` rows to stdout.

use control_landscape::descent::sample;
use control_landscape::embedding::{
    density_peak_cluster, mean_intercluster_distance, tsne, ClusterOptions, EmbeddingConfig,
};
use control_landscape::quantum::{ControlProblem, SpinConvention};
use control_landscape::stats::hamming_matrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = ControlProblem::new(6, 2.5, 100).with_spin_convention(SpinConvention::SpinHalf);
    let set = sample(&problem, 2, 400, 7)?;
    let hm = hamming_matrix(&set.protocols())?;
    let cfg = EmbeddingConfig {
        perplexity: 30.0,
        ..EmbeddingConfig::default()
    };
    let emb = tsne(&hm, &cfg)?;
    let clusters = density_peak_cluster(&emb.distances(), &ClusterOptions::default())?;
    let between = mean_intercluster_distance(&clusters.labels, &hm)?;

    eprintln!("KL {:.3}, {} clusters", emb.kl, clusters.clusters());
    for c in 0..between.clusters {
        let members: Vec<usize> = (0..set.m())
            .filter(|&i| clusters.labels[i] == c as i64)
            .collect();
        let mean_f = members
            .iter()
            .map(|&i| set.records[i].fidelity)
            .sum::<f64>()
            / members.len() as f64;
        eprintln!(
            "  cluster {c}: {} minima, mean F {mean_f:.3}, intra distance {:.3}",
            members.len(),
            between.get(c, c)
        );
    }
    if let Some(r) = between.min_separation() {
        eprintln!("  smallest inter/intra ratio {r:.2}");
    }
    println!("x,y,label,fidelity");
    for (i, p) in emb.coordinates.iter().enumerate() {
        println!(
            "{},{},{},{}",
            p[0], p[1], clusters.labels[i], set.records[i].fidelity
        );
    }
    Ok(())
}
