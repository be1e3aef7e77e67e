//! Density of states of the full landscape and where the two-flip
//! excitations of the optimum fall inside it.

use control_landscape::descent::{enumerate_landscape, EnumerationOptions};
use control_landscape::quantum::{ControlProblem, FidelityEngine, SpinConvention};
use control_landscape::stats::{dos, excitations, mean_relative_dos, DosOrigin};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for t in [1.8, 2.8] {
        let p = ControlProblem::new(6, t, 16).with_spin_convention(SpinConvention::SpinHalf);
        let engine = FidelityEngine::new(&p)?;
        let table = enumerate_landscape(
            &engine,
            EnumerationOptions {
                cap: 24,
                keep_table: true,
            },
        )?;
        let d = dos(&table.costs().expect("kept"), 40, DosOrigin::Enumeration)?;
        let ex = excitations(&engine, &table.best_protocol, &[2])?;
        let costs: Vec<f64> = ex.iter().map(|e| e.cost).collect();
        println!(
            "T={t}: optimum cost {:.4}, {} two-flip excitations, mean relative DOS {:.3}",
            table.best_cost,
            ex.len(),
            mean_relative_dos(&d, &costs)
        );
        let peak = d.histogram.max_density();
        for (b, c) in d.histogram.centers().iter().enumerate().step_by(4) {
            let hits = costs
                .iter()
                .filter(|&&x| d.histogram.bin_of(x) == Some(b))
                .count();
            println!(
                "  {c:>7.4} {:<40} {hits}",
                "#".repeat((d.histogram.density[b] / peak * 40.0) as usize)
            );
        }
        for group in [0, 2] {
            let n = ex
                .iter()
                .filter(|e| e.magnetization.abs() / 2 == group)
                .count();
            println!("  |M_h|/2 = {group}: {n} excitations");
        }
    }
    Ok(())
}
