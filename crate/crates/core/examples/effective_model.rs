//! Reconstructs the classical spin model behind a full cost landscape:
//! couplings, truncation errors, frustration, locality, and regression fits
//! on the low-cost protocols.

use control_landscape::descent::{enumerate_landscape, EnumerationOptions};
use control_landscape::effective::{
    lambda_grid, low_manifold, select_lambda, CouplingTable, Regularizer,
};
use control_landscape::quantum::{ControlProblem, FidelityEngine, SpinConvention};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 12;
    for t in [0.3, 3.0] {
        let problem = ControlProblem::new(6, t, n).with_spin_convention(SpinConvention::SpinHalf);
        let engine = FidelityEngine::new(&problem)?;
        let table = enumerate_landscape(
            &engine,
            EnumerationOptions {
                cap: 24,
                keep_table: true,
            },
        )?;
        let costs = table.costs().expect("kept");
        let model = CouplingTable::from_costs(&costs)?;
        println!(
            "T={t}: optimum {} with F={:.5}",
            table.best_protocol, table.best_fidelity
        );
        for orders in [vec![0, 1], vec![0, 1, 2], vec![0, 1, 2, 3]] {
            println!(
                "  truncation error up to order {}: {:.4}",
                orders.last().unwrap(),
                model.truncation_error(&costs, &orders)?
            );
        }
        println!("  frustration {{1,2}}: {:.3}", model.frustration(&[1, 2])?);
        let locality: Vec<String> = model
            .three_body_locality()
            .iter()
            .take(5)
            .map(|(p, v)| format!("{p}:{v:.1e}"))
            .collect();
        println!("  |K| by triangle perimeter: {}", locality.join(" "));

        let records = low_manifold(&costs, 2048)?;
        for reg in [Regularizer::Ridge, Regularizer::Lasso] {
            let fit = select_lambda(&records, &[1, 2], reg, &lambda_grid(17), 0)?;
            println!(
                "  {reg:?} on best 2048, orders {{1,2}}: lambda={:.1e} R2 train {:.3} test {:.3}, {} nonzero",
                fit.lambda,
                fit.r2_train,
                fit.r2_test,
                fit.support().len()
            );
        }
    }
    Ok(())
}
