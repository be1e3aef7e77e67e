use rayon::prelude::*;

use crate::quantum::Protocol;

use super::StatsError;

/// Dense symmetric matrix of normalized distances, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_fn<F: Fn(usize, usize) -> f64 + Sync>(n: usize, f: F) -> Self {
        let mut data = vec![0.0; n * n];
        data.par_chunks_mut(n.max(1))
            .enumerate()
            .for_each(|(i, row)| {
                for (j, x) in row.iter_mut().enumerate() {
                    if i != j {
                        *x = f(i.min(j), i.max(j));
                    }
                }
            });
        DistanceMatrix { n, data }
    }

    /// Euclidean distances between rows of `points`.
    pub fn euclidean(points: &[Vec<f64>]) -> Self {
        Self::from_fn(points.len(), |i, j| {
            points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Entries above the diagonal, row by row.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * self.n.saturating_sub(1) / 2);
        for i in 0..self.n {
            out.extend_from_slice(&self.row(i)[i + 1..]);
        }
        out
    }

    /// Copy with rows and columns permuted so that new index `a` is old
    /// index `order[a]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self::from_fn(order.len(), |a, b| self.get(order[a], order[b]))
    }
}

/// Normalized Hamming distances `#{j : σ_j^α ≠ σ_j^β} / N`.
pub fn hamming_matrix(protocols: &[Protocol]) -> Result<DistanceMatrix, StatsError> {
    let n = protocols.first().map(|p| p.len()).unwrap_or(0);
    if let Some(p) = protocols.iter().find(|p| p.len() != n) {
        return Err(StatsError::LengthMismatch(n, p.len()));
    }
    let packed: Vec<Vec<u64>> = protocols.iter().map(|p| p.packed()).collect();
    Ok(DistanceMatrix::from_fn(protocols.len(), |i, j| {
        let d: u32 = packed[i]
            .iter()
            .zip(&packed[j])
            .map(|(a, b)| (a ^ b).count_ones())
            .sum();
        if n == 0 {
            0.0
        } else {
            d as f64 / n as f64
        }
    }))
}
