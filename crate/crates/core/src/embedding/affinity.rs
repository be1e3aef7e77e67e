use rayon::prelude::*;

use crate::stats::DistanceMatrix;

use super::EmbeddingError;

/// Allowed gap between a row's entropy (bits) and `log2(perplexity)`.
pub const ENTROPY_TOLERANCE: f64 = 1e-5;
pub const BISECTION_STEPS: usize = 100;

/// Conditional affinities `p_{j|i} ∝ exp(-β_i d_ij²)`.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub n: usize,
    /// Row-major, each row sums to one with a zero diagonal.
    pub conditional: Vec<f64>,
    pub betas: Vec<f64>,
    /// Entropy reached by each row, in bits.
    pub entropies: Vec<f64>,
    /// Rows whose bisection ran out of steps.
    pub unconverged: Vec<usize>,
}

impl Calibration {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.conditional[i * self.n + j]
    }

    /// `(p_{j|i} + p_{i|j}) / 2n`, summing to one.
    pub fn joint(&self) -> Vec<f64> {
        let n = self.n;
        let mut p = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                p[i * n + j] = (self.get(i, j) + self.get(j, i)) / (2.0 * n as f64);
            }
        }
        p
    }
}

/// Finds per-row Gaussian precisions by bisection so that every row has
/// perplexity `perplexity`.
pub fn perplexity_calibration(
    distances: &DistanceMatrix,
    perplexity: f64,
) -> Result<Calibration, EmbeddingError> {
    let n = distances.len();
    if n < 3 {
        return Err(EmbeddingError::TooFewPoints { needed: 3, got: n });
    }
    let max = (n - 1) as f64;
    if !(perplexity > 1.0 && perplexity < max) {
        return Err(EmbeddingError::Perplexity {
            perplexity,
            points: n,
            max,
        });
    }
    let target = perplexity.log2();
    let rows: Vec<(Vec<f64>, f64, f64, bool)> = (0..n)
        .into_par_iter()
        .map(|i| calibrate_row(distances.row(i), i, target))
        .collect();

    let mut out = Calibration {
        n,
        conditional: Vec::with_capacity(n * n),
        betas: Vec::with_capacity(n),
        entropies: Vec::with_capacity(n),
        unconverged: Vec::new(),
    };
    for (i, (row, beta, h, ok)) in rows.into_iter().enumerate() {
        out.conditional.extend(row);
        out.betas.push(beta);
        out.entropies.push(h);
        if !ok {
            out.unconverged.push(i);
        }
    }
    Ok(out)
}

fn calibrate_row(dist: &[f64], i: usize, target: f64) -> (Vec<f64>, f64, f64, bool) {
    let sq: Vec<f64> = dist.iter().map(|d| d * d).collect();
    // shift by the nearest neighbor so the largest weight is one
    let shift = sq
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    let mut p = vec![0.0; sq.len()];
    let mut beta = 1.0;
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    let mut best = (f64::INFINITY, beta);
    for _ in 0..BISECTION_STEPS {
        let h = row_entropy(&sq, i, shift, beta, &mut p);
        let gap = h - target;
        if gap.abs() < best.0 {
            best = (gap.abs(), beta);
        }
        if gap.abs() < ENTROPY_TOLERANCE {
            return (p, beta, h, true);
        }
        if gap > 0.0 {
            // too flat: sharpen
            lo = beta;
            beta = if hi.is_finite() {
                (lo + hi) / 2.0
            } else {
                beta * 2.0
            };
        } else {
            hi = beta;
            beta = (lo + hi) / 2.0;
        }
    }
    let beta = best.1;
    let h = row_entropy(&sq, i, shift, beta, &mut p);
    (p, beta, h, false)
}

/// Fills `p` with the normalized row and returns its entropy in bits.
fn row_entropy(sq: &[f64], i: usize, shift: f64, beta: f64, p: &mut [f64]) -> f64 {
    let mut z = 0.0;
    for (j, (&d, x)) in sq.iter().zip(p.iter_mut()).enumerate() {
        *x = if j == i {
            0.0
        } else {
            (-beta * (d - shift)).exp()
        };
        z += *x;
    }
    let mut h = 0.0;
    for x in p.iter_mut() {
        *x /= z;
        if *x > 0.0 {
            h -= *x * x.log2();
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equidistant_points_give_uniform_rows() {
        let d = DistanceMatrix::from_fn(3, |_, _| 1.0);
        let c = perplexity_calibration(&d, 1.5).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.0 } else { 0.5 };
                assert!((c.get(i, j) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rows_hit_the_entropy_target() {
        let pts: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i as f64 * 0.37).sin() * 3.0, (i as f64).sqrt()])
            .collect();
        let d = DistanceMatrix::euclidean(&pts);
        let c = perplexity_calibration(&d, 10.0).unwrap();
        assert!(c.unconverged.is_empty());
        for i in 0..40 {
            let s: f64 = (0..40).map(|j| c.get(i, j)).sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert!((c.entropies[i] - 10f64.log2()).abs() < ENTROPY_TOLERANCE);
        }
        let joint: f64 = c.joint().iter().sum();
        assert!((joint - 1.0).abs() < 1e-9);
    }

    #[test]
    fn near_neighbors_dominate() {
        // two groups of five, 0.1 apart inside and 1.0 across
        let d = DistanceMatrix::from_fn(10, |i, j| if i / 5 == j / 5 { 0.1 } else { 1.0 });
        let c = perplexity_calibration(&d, 3.0).unwrap();
        assert!(c.get(0, 1) >= 10.0 * c.get(0, 7));
    }

    #[test]
    fn perplexity_range_is_checked() {
        let d = DistanceMatrix::from_fn(5, |_, _| 1.0);
        assert!(perplexity_calibration(&d, 1.0).is_err());
        assert!(perplexity_calibration(&d, 4.5).is_err());
    }
}
