//! Scans the duration and prints where the fraction of distinct SD_k minima
//! crosses one half, for k = 1 and k = 2.

use control_landscape::descent::sample;
use control_landscape::quantum::{ControlProblem, SpinConvention};
use control_landscape::stats::order_parameters;

type Row = (f64, f64, f64);

fn scan(
    k: usize,
    ts: &[f64],
    bangs: usize,
    m: usize,
) -> Result<Vec<Row>, Box<dyn std::error::Error>> {
    ts.iter()
        .map(|&t| {
            let p = ControlProblem::new(6, t, bangs).with_spin_convention(SpinConvention::SpinHalf);
            let op = order_parameters(&sample(&p, k, m, 1)?, None)?;
            Ok((t, op.f, op.q))
        })
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sd1: Vec<f64> = (1..=8).map(|i| i as f64 * 0.1).collect();
    let sd2: Vec<f64> = (15..=30).step_by(3).map(|i| i as f64 * 0.1).collect();
    for (k, ts) in [(1, sd1), (2, sd2)] {
        let rows = scan(k, &ts, 60, 300)?;
        println!("SD_{k}:");
        for (t, f, q) in &rows {
            println!(
                "  T={t:.1}  f={f:.3}  q={q:.3}  {}",
                "#".repeat((f * 40.0) as usize)
            );
        }
        let cross = rows.windows(2).find(|w| w[0].1 < 0.5 && w[1].1 >= 0.5);
        match cross {
            Some(w) => println!(
                "  f crosses 1/2 between T={:.1} and T={:.1}",
                w[0].0, w[1].0
            ),
            None => println!("  no crossing in this range"),
        }
    }
    Ok(())
}
