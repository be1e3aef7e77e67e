use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::quantum::Protocol;
use crate::stats::{hamming_matrix, DistanceMatrix};

use super::{perplexity_calibration, EmbeddingError};

/// Smallest probability entering logarithms and ratios.
const P_FLOOR: f64 = 1e-12;
const MIN_GAIN: f64 = 0.01;
/// Step-size factors after a rejected or accepted late step.
const BACKOFF: f64 = 0.5;
const RECOVERY: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub exaggeration: f64,
    pub exaggeration_epochs: usize,
    pub learning_rate: f64,
    pub momentum_initial: f64,
    pub momentum_final: f64,
    pub seed: u64,
    /// Carried along for reference; the gradient is exact.
    pub bh_angle: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            perplexity: 60.0,
            iterations: 1000,
            exaggeration: 12.0,
            exaggeration_epochs: 250,
            learning_rate: 200.0,
            momentum_initial: 0.5,
            momentum_final: 0.8,
            seed: 0,
            bh_angle: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResult {
    pub coordinates: Vec<[f64; 2]>,
    pub kl: f64,
    /// KL(P‖Q) after every epoch, measured with the unexaggerated P.
    pub kl_trace: Vec<f64>,
    /// Late steps undone because they raised the KL divergence.
    pub rejected_steps: usize,
    /// Every input distance was zero.
    pub collapsed: bool,
}

impl EmbeddingResult {
    pub fn distances(&self) -> DistanceMatrix {
        let c = &self.coordinates;
        DistanceMatrix::from_fn(c.len(), |i, j| {
            ((c[i][0] - c[j][0]).powi(2) + (c[i][1] - c[j][1]).powi(2)).sqrt()
        })
    }
}

/// Embeds protocols using their normalized Hamming distances.
pub fn tsne_protocols(
    protocols: &[Protocol],
    config: &EmbeddingConfig,
) -> Result<EmbeddingResult, EmbeddingError> {
    tsne(&hamming_matrix(protocols)?, config)
}

/// Exact t-SNE with momentum, per-coordinate gains and early exaggeration.
///
/// After the exaggeration phase every step that would raise the KL
/// divergence is undone and the step size halved, so the recorded trace is
/// nonincreasing there.
pub fn tsne(
    distances: &DistanceMatrix,
    config: &EmbeddingConfig,
) -> Result<EmbeddingResult, EmbeddingError> {
    let n = distances.len();
    if !(config.learning_rate > 0.0 && config.exaggeration >= 1.0) {
        return Err(EmbeddingError::InvalidArgument(
            "learning rate must be positive and exaggeration at least 1".into(),
        ));
    }
    if (0..n).all(|i| distances.row(i).iter().all(|&d| d == 0.0)) {
        log::warn!("all {n} inputs coincide; returning a collapsed embedding");
        return Ok(EmbeddingResult {
            coordinates: vec![[0.0; 2]; n],
            kl: 0.0,
            kl_trace: Vec::new(),
            rejected_steps: 0,
            collapsed: true,
        });
    }
    let cal = perplexity_calibration(distances, config.perplexity)?;
    if !cal.unconverged.is_empty() {
        log::warn!(
            "{} of {n} rows did not reach the perplexity target",
            cal.unconverged.len()
        );
    }
    let p: Vec<f64> = cal.joint().into_iter().map(|x| x.max(P_FLOOR)).collect();
    let entropy = off_diagonal_entropy(&p, n);
    let mass = p.iter().sum::<f64>() - (0..n).map(|i| p[i * n + i]).sum::<f64>();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, 1e-4).expect("valid width");
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)])
        .collect();
    let mut velocity = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut trace = Vec::with_capacity(config.iterations);
    let mut rate = config.learning_rate;
    let mut rejected = 0;
    let mut state = Evaluation::of(&p, entropy, mass, &y);

    for epoch in 0..config.iterations {
        let early = epoch < config.exaggeration_epochs;
        let ex = if early { config.exaggeration } else { 1.0 };
        let momentum = if early {
            config.momentum_initial
        } else {
            config.momentum_final
        };
        let grad = state.gradient(ex);
        let mut new_velocity = velocity.clone();
        let mut new_gains = gains.clone();
        let mut candidate = y.clone();
        for i in 0..n {
            for d in 0..2 {
                let g = grad[i][d];
                let gain = &mut new_gains[i][d];
                *gain = if (g > 0.0) != (velocity[i][d] > 0.0) {
                    *gain + 0.2
                } else {
                    (*gain * 0.8).max(MIN_GAIN)
                };
                new_velocity[i][d] = momentum * velocity[i][d] - rate * *gain * g;
                candidate[i][d] += new_velocity[i][d];
            }
        }
        center(&mut candidate);
        let next = Evaluation::of(&p, entropy, mass, &candidate);
        if early || next.kl <= state.kl {
            y = candidate;
            velocity = new_velocity;
            gains = new_gains;
            state = next;
            if !early {
                rate = (rate * RECOVERY).min(config.learning_rate);
            }
        } else {
            velocity = vec![[0.0; 2]; n];
            rate *= BACKOFF;
            rejected += 1;
        }
        trace.push(state.kl);
    }
    let kl = state.kl;

    Ok(EmbeddingResult {
        coordinates: y,
        kl,
        kl_trace: trace,
        rejected_steps: rejected,
        collapsed: false,
    })
}

fn center(y: &mut [[f64; 2]]) {
    let n = y.len() as f64;
    let mx = y.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = y.iter().map(|p| p[1]).sum::<f64>() / n;
    for p in y.iter_mut() {
        p[0] -= mx;
        p[1] -= my;
    }
}

fn off_diagonal_entropy(p: &[f64], n: usize) -> f64 {
    (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| i * n + j))
        .map(|k| p[k] * p[k].ln())
        .sum()
}

/// KL divergence and the two halves of its gradient at one layout.
struct Evaluation {
    kl: f64,
    /// `4 Σ_j p_ij w_ij (y_i − y_j)`.
    attraction: Vec<[f64; 2]>,
    /// `4 Σ_j q_ij w_ij (y_i − y_j)`.
    repulsion: Vec<[f64; 2]>,
}

impl Evaluation {
    /// `entropy` is `Σ p ln p` and `mass` is `Σ p`, both over
    /// off-diagonal pairs.
    fn of(p: &[f64], entropy: f64, mass: f64, y: &[[f64; 2]]) -> Self {
        let n = y.len();
        // per row: Σ w, Σ p ln(1+d²), attraction, unnormalized repulsion
        let rows: Vec<(f64, f64, [f64; 2], [f64; 2])> = (0..n)
            .into_par_iter()
            .map(|i| {
                let yi = y[i];
                let prow = &p[i * n..(i + 1) * n];
                let mut wsum = 0.0;
                let mut plog = 0.0;
                let mut a = [0.0; 2];
                let mut r = [0.0; 2];
                for (j, yj) in y.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    let dx = yi[0] - yj[0];
                    let dy = yi[1] - yj[1];
                    let inv = 1.0 + dx * dx + dy * dy;
                    let w = 1.0 / inv;
                    let pij = prow[j];
                    wsum += w;
                    plog += pij * inv.ln();
                    let fa = pij * w;
                    let fr = w * w;
                    a[0] += fa * dx;
                    a[1] += fa * dy;
                    r[0] += fr * dx;
                    r[1] += fr * dy;
                }
                (wsum, plog, a, r)
            })
            .collect();
        let z: f64 = rows.iter().map(|r| r.0).sum();
        // KL = Σ p ln p - Σ p ln q with ln q = -ln(1+d²) - ln Z
        let plog: f64 = rows.iter().map(|r| r.1).sum();
        let kl = entropy + plog + mass * z.ln();
        let mut attraction = Vec::with_capacity(n);
        let mut repulsion = Vec::with_capacity(n);
        for (_, _, a, r) in rows {
            attraction.push([4.0 * a[0], 4.0 * a[1]]);
            repulsion.push([4.0 * r[0] / z, 4.0 * r[1] / z]);
        }
        Evaluation {
            kl: kl.max(0.0),
            attraction,
            repulsion,
        }
    }

    /// `∂KL/∂y_i` with the affinities scaled by `ex`.
    fn gradient(&self, ex: f64) -> Vec<[f64; 2]> {
        self.attraction
            .iter()
            .zip(&self.repulsion)
            .map(|(a, r)| [ex * a[0] - r[0], ex * a[1] - r[1]])
            .collect()
    }
}
