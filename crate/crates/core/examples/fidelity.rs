//! Evaluates a few bang-bang protocols on the six-site chain and checks the
//! fast eigenbasis engine against dense step propagators.

use control_landscape::quantum::{
    evolve, ControlProblem, FidelityEngine, Protocol, SpinConvention,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = ControlProblem::new(6, 2.0, 20).with_spin_convention(SpinConvention::SpinHalf);
    let engine = FidelityEngine::new(&problem)?;
    println!(
        "L={} T={} N_T={}: working dimension {} of {}",
        problem.sites,
        problem.duration,
        problem.bangs,
        engine.working_dimension(),
        engine.dimension()
    );

    let half: Vec<i8> = (0..20).map(|j| if j < 10 { 1 } else { -1 }).collect();
    let candidates = [
        ("all +h", Protocol::constant(20, 1)),
        ("all -h", Protocol::constant(20, -1)),
        ("single switch", Protocol::from_signs(half)?),
        ("alternating", "+-+-+-+-+-+-+-+-+-+-".parse()?),
    ];
    let props = engine.step_propagators();
    println!("step unitarity error {:.1e}", props.unitarity_error());
    for (name, p) in &candidates {
        let e = engine.evaluate(p)?;
        let dense = evolve(&problem, p, &props)?;
        let diff = dense.max_difference(&engine.evolve(p)?);
        println!(
            "{name:>14} {p}  F={:.6}  cost={:.5}  |dense - fast|={diff:.1e}",
            e.fidelity, e.cost
        );
    }
    Ok(())
}
