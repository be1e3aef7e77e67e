use serde::{Deserialize, Serialize};

use crate::quantum::FidelityEngine;

use super::{sample_with_engine, DescentError, Enumeration, LocalMinimum};

/// Two costs closer than this are treated as the same optimum.
pub const OPTIMUM_COST_TOLERANCE: f64 = 1e-12;

/// Expected number of fidelity evaluations to reach the global optimum by
/// restarting SD_k: `⟨n_eval⟩ / p_opt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityEstimate {
    pub n_runs: usize,
    pub hits: usize,
    pub mean_n_eval: f64,
    pub mean_n_eval_stderr: f64,
    pub p_opt: f64,
    pub p_opt_stderr: f64,
    pub complexity: f64,
    pub complexity_stderr: f64,
    /// No run reached the optimum; `p_opt` is set to `1 / n_runs` and the
    /// complexity is a lower bound.
    pub censored: bool,
    /// Some hits matched the optimal cost with a different protocol.
    pub degenerate_hits: bool,
}

/// Runs `n_runs` descents and compares them with the enumerated optimum.
pub fn complexity(
    engine: &FidelityEngine,
    k: usize,
    n_runs: usize,
    master_seed: u64,
    optimum: &Enumeration,
) -> Result<ComplexityEstimate, DescentError> {
    let set = sample_with_engine(engine, k, n_runs, master_seed)?;
    complexity_from_runs(&set.records, optimum)
}

pub fn complexity_from_runs(
    runs: &[LocalMinimum],
    optimum: &Enumeration,
) -> Result<ComplexityEstimate, DescentError> {
    let n = runs.len();
    if n == 0 {
        return Err(DescentError::InvalidArgument(
            "complexity needs at least one run".into(),
        ));
    }
    let mut hits = 0;
    let mut degenerate_hits = false;
    for r in runs {
        if r.protocol == optimum.best_protocol {
            hits += 1;
        } else if (r.cost - optimum.best_cost).abs() < OPTIMUM_COST_TOLERANCE {
            hits += 1;
            degenerate_hits = true;
        }
    }

    let nf = n as f64;
    let mean = runs.iter().map(|r| r.n_eval as f64).sum::<f64>() / nf;
    let var = if n > 1 {
        runs.iter()
            .map(|r| (r.n_eval as f64 - mean).powi(2))
            .sum::<f64>()
            / (nf - 1.0)
    } else {
        0.0
    };
    let mean_se = (var / nf).sqrt();

    let censored = hits == 0;
    let p = if censored { 1.0 / nf } else { hits as f64 / nf };
    let p_se = (p * (1.0 - p) / nf).sqrt();
    let c = mean / p;
    // delta method for a ratio of independent estimates
    let c_se = c * ((mean_se / mean).powi(2) + (p_se / p).powi(2)).sqrt();

    Ok(ComplexityEstimate {
        n_runs: n,
        hits,
        mean_n_eval: mean,
        mean_n_eval_stderr: mean_se,
        p_opt: p,
        p_opt_stderr: p_se,
        complexity: c,
        complexity_stderr: if c_se.is_finite() { c_se } else { 0.0 },
        censored,
        degenerate_hits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descent::brute_force_optimum;
    use crate::quantum::{ControlProblem, Protocol, SpinConvention};

    fn run(protocol: Protocol, cost: f64, n_eval: u64) -> LocalMinimum {
        LocalMinimum {
            protocol,
            fidelity: 0.0,
            cost,
            n_eval,
            k: 1,
            seed: 0,
            accepted_moves: 0,
            final_sweep_evals: 0,
        }
    }

    fn optimum() -> Enumeration {
        Enumeration {
            bangs: 2,
            sites: 1,
            best_index: 0,
            best_protocol: Protocol::constant(2, 1),
            best_fidelity: 1.0,
            best_cost: 0.0,
            fidelities: None,
        }
    }

    #[test]
    fn ratio_of_means() {
        let runs = vec![
            run(Protocol::constant(2, 1), 0.0, 10),
            run(Protocol::constant(2, -1), 0.5, 30),
        ];
        let c = complexity_from_runs(&runs, &optimum()).unwrap();
        assert_eq!(c.hits, 1);
        assert_eq!(c.p_opt, 0.5);
        assert_eq!(c.mean_n_eval, 20.0);
        assert_eq!(c.complexity, 40.0);
        assert!(!c.censored);
    }

    #[test]
    fn no_hits_is_censored() {
        let runs = vec![run(Protocol::constant(2, -1), 0.5, 30); 4];
        let c = complexity_from_runs(&runs, &optimum()).unwrap();
        assert!(c.censored);
        assert_eq!(c.complexity, 120.0);
    }

    #[test]
    fn degenerate_partner_counts_as_hit() {
        let runs = vec![run(Protocol::from_signs(vec![1, -1]).unwrap(), 0.0, 5)];
        let c = complexity_from_runs(&runs, &optimum()).unwrap();
        assert_eq!(c.hits, 1);
        assert!(c.degenerate_hits);
    }

    #[test]
    fn convex_regime_always_hits() {
        let problem =
            ControlProblem::new(6, 0.5, 12).with_spin_convention(SpinConvention::SpinHalf);
        let engine = FidelityEngine::new(&problem).unwrap();
        let opt = brute_force_optimum(&engine).unwrap();
        let c = complexity(&engine, 2, 20, 4, &opt).unwrap();
        assert_eq!(c.p_opt, 1.0);
        assert_eq!(c.complexity, c.mean_n_eval);
    }
}
