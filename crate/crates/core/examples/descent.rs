//! Samples SD_1 and SD_2 local minima at a short and a long duration and
//! reports the glass order parameters.

use control_landscape::descent::sample;
use control_landscape::quantum::{ControlProblem, SpinConvention};
use control_landscape::stats::order_parameters;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = 200;
    println!(
        "{:>4} {:>2} {:>7} {:>7} {:>9} {:>9}",
        "T", "k", "f", "q", "best F", "<n_eval>"
    );
    for t in [0.5, 1.5, 2.5, 3.5] {
        let problem = ControlProblem::new(6, t, 60).with_spin_convention(SpinConvention::SpinHalf);
        for k in [1, 2] {
            let set = sample(&problem, k, m, 42)?;
            let op = order_parameters(&set, None)?;
            let best = set.best().expect("nonempty");
            println!(
                "{t:>4.1} {k:>2} {:>7.3} {:>7.3} {:>9.5} {:>9.0}",
                op.f,
                op.q,
                best.fidelity,
                set.mean_n_eval()
            );
        }
    }
    Ok(())
}
