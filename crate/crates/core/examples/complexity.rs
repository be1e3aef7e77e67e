//! Expected number of fidelity evaluations for restarted SD_1 to hit the
//! global optimum, against the number of bangs.

use control_landscape::descent::{complexity, enumerate_landscape, EnumerationOptions};
use control_landscape::quantum::{ControlProblem, FidelityEngine, SpinConvention};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!(
        "{:>4} {:>3} {:>10} {:>9} {:>12} {:>8}",
        "T", "N_T", "<n_eval>", "p_opt", "complexity", "ln C"
    );
    for t in [0.3, 3.0] {
        for n in (8..=16).step_by(2) {
            let p = ControlProblem::new(6, t, n).with_spin_convention(SpinConvention::SpinHalf);
            let engine = FidelityEngine::new(&p)?;
            let opt = enumerate_landscape(&engine, EnumerationOptions::default())?;
            let est = complexity(&engine, 1, 20_000, 3, &opt)?;
            println!(
                "{t:>4.1} {n:>3} {:>10.1} {:>9.5} {:>12.1} {:>8.2}{}",
                est.mean_n_eval,
                est.p_opt,
                est.complexity,
                est.complexity.ln(),
                if est.censored { "  (lower bound)" } else { "" }
            );
        }
    }
    Ok(())
}
