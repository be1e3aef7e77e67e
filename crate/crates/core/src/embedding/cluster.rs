use serde::{Deserialize, Serialize};

use crate::stats::DistanceMatrix;

use super::EmbeddingError;

/// Quantile of pairwise distances used as the default cutoff.
const DEFAULT_CUTOFF_QUANTILE: f64 = 0.02;
/// The knee search looks at most this many top-ranked points.
const KNEE_CANDIDATES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterSelection {
    /// Largest ratio between consecutive entries of the sorted `ρ·δ`.
    Knee,
    /// The `n` points with the largest `ρ·δ`.
    Count(usize),
    /// Every point with `ρ > rho` and `δ > delta`.
    Thresholds { rho: f64, delta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterOptions {
    /// Density cutoff; the 2% quantile of pairwise distances when absent.
    pub cutoff: Option<f64>,
    pub centers: CenterSelection,
    /// Mark points below their cluster's border density as `-1`.
    pub halo: bool,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions {
            cutoff: None,
            centers: CenterSelection::Knee,
            halo: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// Cluster of every point, `-1` for halo points.
    pub labels: Vec<i64>,
    /// Point index of each cluster's center; cluster `c` has center `centers[c]`.
    pub centers: Vec<usize>,
    pub rho: Vec<f64>,
    pub delta: Vec<f64>,
    pub cutoff: f64,
}

impl ClusterAssignment {
    pub fn clusters(&self) -> usize {
        self.centers.len()
    }

    pub fn gamma(&self) -> Vec<f64> {
        self.rho
            .iter()
            .zip(&self.delta)
            .map(|(r, d)| r * d)
            .collect()
    }
}

/// Density-peak clustering.
///
/// `ρ_i` counts the points closer than the cutoff and `δ_i` is the distance
/// to the nearest point of higher density (ties in `ρ` go to the lower
/// index). The densest point takes the largest distance in its row.
pub fn density_peak_cluster(
    distances: &DistanceMatrix,
    options: &ClusterOptions,
) -> Result<ClusterAssignment, EmbeddingError> {
    let n = distances.len();
    if n < 2 {
        return Err(EmbeddingError::TooFewPoints { needed: 2, got: n });
    }
    let cutoff = match options.cutoff {
        Some(c) if c > 0.0 => c,
        Some(c) => {
            return Err(EmbeddingError::InvalidArgument(format!(
                "density cutoff must be positive, got {c}"
            )))
        }
        None => default_cutoff(distances)?,
    };

    let rho: Vec<f64> = (0..n)
        .map(|i| {
            distances
                .row(i)
                .iter()
                .enumerate()
                .filter(|&(j, &d)| j != i && d < cutoff)
                .count() as f64
        })
        .collect();
    // decreasing density, lower index first among ties
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| rho[b].total_cmp(&rho[a]).then(a.cmp(&b)));

    let mut delta = vec![0.0; n];
    let mut parent = vec![usize::MAX; n];
    for (rank, &i) in order.iter().enumerate() {
        if rank == 0 {
            delta[i] = distances.row(i).iter().cloned().fold(0.0, f64::max);
            continue;
        }
        let (mut best, mut arg) = (f64::INFINITY, usize::MAX);
        for &j in &order[..rank] {
            let d = distances.get(i, j);
            if d < best {
                best = d;
                arg = j;
            }
        }
        delta[i] = best;
        parent[i] = arg;
    }

    let gamma: Vec<f64> = rho.iter().zip(&delta).map(|(r, d)| r * d).collect();
    let mut by_gamma: Vec<usize> = (0..n).collect();
    by_gamma.sort_by(|&a, &b| gamma[b].total_cmp(&gamma[a]).then(a.cmp(&b)));
    let mut centers: Vec<usize> = match &options.centers {
        CenterSelection::Knee => {
            let k = knee(&by_gamma.iter().map(|&i| gamma[i]).collect::<Vec<_>>());
            by_gamma[..k].to_vec()
        }
        CenterSelection::Count(k) => {
            if *k == 0 || *k > n {
                return Err(EmbeddingError::InvalidArgument(format!(
                    "cannot pick {k} centers from {n} points"
                )));
            }
            by_gamma[..*k].to_vec()
        }
        CenterSelection::Thresholds { rho: r, delta: d } => by_gamma
            .iter()
            .copied()
            .filter(|&i| rho[i] > *r && delta[i] > *d)
            .collect(),
    };
    // the densest point must lead a cluster or it has nowhere to go
    if !centers.contains(&order[0]) {
        centers.insert(0, order[0]);
    }

    let mut labels = vec![-1i64; n];
    for (c, &i) in centers.iter().enumerate() {
        labels[i] = c as i64;
    }
    for &i in &order {
        if labels[i] < 0 {
            labels[i] = labels[parent[i]];
        }
    }

    if options.halo {
        apply_halo(distances, cutoff, &rho, &mut labels, centers.len());
    }

    Ok(ClusterAssignment {
        labels,
        centers,
        rho,
        delta,
        cutoff,
    })
}

fn default_cutoff(distances: &DistanceMatrix) -> Result<f64, EmbeddingError> {
    let mut d = distances.upper_triangle();
    d.sort_by(f64::total_cmp);
    let idx = ((d.len() as f64 * DEFAULT_CUTOFF_QUANTILE) as usize).min(d.len() - 1);
    // skip exact duplicates so the cutoff stays positive
    // when every point coincides any positive cutoff yields one cluster
    Ok(d[idx..].iter().copied().find(|&x| x > 0.0).unwrap_or(1.0))
}

/// Number of centers at the largest drop of the sorted scores.
fn knee(sorted: &[f64]) -> usize {
    let top = sorted.len().min(KNEE_CANDIDATES + 1);
    let mut best = (0.0, 1);
    for k in 1..top {
        let (a, b) = (sorted[k - 1], sorted[k]);
        if a <= 0.0 {
            break;
        }
        let ratio = if b > 0.0 { a / b } else { f64::INFINITY };
        if ratio > best.0 {
            best = (ratio, k);
        }
    }
    best.1
}

/// Points of a cluster below the densest border pair of that cluster
/// become halo.
fn apply_halo(
    distances: &DistanceMatrix,
    cutoff: f64,
    rho: &[f64],
    labels: &mut [i64],
    clusters: usize,
) {
    let n = labels.len();
    let mut border = vec![0.0f64; clusters];
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (labels[i], labels[j]);
            if a != b && distances.get(i, j) < cutoff {
                let mean = (rho[i] + rho[j]) / 2.0;
                border[a as usize] = border[a as usize].max(mean);
                border[b as usize] = border[b as usize].max(mean);
            }
        }
    }
    for i in 0..n {
        let c = labels[i] as usize;
        if rho[i] < border[c] {
            labels[i] = -1;
        }
    }
}

/// Mean distances within and between clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDistances {
    pub clusters: usize,
    /// Row-major `clusters × clusters`; the diagonal holds intra-cluster means.
    pub means: Vec<f64>,
    /// Clusters with a single member, whose intra mean is set to zero.
    pub singletons: Vec<usize>,
}

impl ClusterDistances {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.means[a * self.clusters + b]
    }

    /// Smallest `inter(a,b) / max(intra(a), intra(b))` over all pairs.
    pub fn min_separation(&self) -> Option<f64> {
        let k = self.clusters;
        let mut out: Option<f64> = None;
        for a in 0..k {
            for b in a + 1..k {
                let intra = self.get(a, a).max(self.get(b, b));
                let r = if intra > 0.0 {
                    self.get(a, b) / intra
                } else {
                    f64::INFINITY
                };
                out = Some(out.map_or(r, |o| o.min(r)));
            }
        }
        out
    }
}

/// Averages `distances` over cross pairs of every cluster pair and over
/// distinct pairs inside every cluster. Halo points are ignored.
pub fn mean_intercluster_distance(
    labels: &[i64],
    distances: &DistanceMatrix,
) -> Result<ClusterDistances, EmbeddingError> {
    if labels.len() != distances.len() {
        return Err(EmbeddingError::InvalidArgument(format!(
            "{} labels for {} points",
            labels.len(),
            distances.len()
        )));
    }
    let k = labels
        .iter()
        .copied()
        .max()
        .map_or(0, |m| (m + 1).max(0) as usize);
    if k == 0 {
        return Err(EmbeddingError::InvalidArgument("no labeled points".into()));
    }
    let mut sum = vec![0.0; k * k];
    let mut count = vec![0usize; k * k];
    let mut size = vec![0usize; k];
    for (i, &a) in labels.iter().enumerate() {
        if a < 0 {
            continue;
        }
        size[a as usize] += 1;
        for (j, &b) in labels.iter().enumerate().skip(i + 1) {
            if b < 0 {
                continue;
            }
            let (a, b) = (a as usize, b as usize);
            let d = distances.get(i, j);
            sum[a * k + b] += d;
            count[a * k + b] += 1;
            if a != b {
                sum[b * k + a] += d;
                count[b * k + a] += 1;
            }
        }
    }
    let means = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    Ok(ClusterDistances {
        clusters: k,
        means,
        singletons: (0..k).filter(|&c| size[c] == 1).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::Protocol;
    use crate::stats::hamming_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn planted(per: usize, centers: &[[f64; 2]], seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for (c, m) in centers.iter().enumerate() {
            for _ in 0..per {
                pts.push(vec![
                    m[0] + noise.sample(&mut rng),
                    m[1] + noise.sample(&mut rng),
                ]);
                truth.push(c);
            }
        }
        (pts, truth)
    }

    fn purity(labels: &[i64], truth: &[usize]) -> f64 {
        let k = labels.iter().copied().max().unwrap() as usize + 1;
        let t = truth.iter().copied().max().unwrap() + 1;
        let mut table = vec![vec![0usize; t]; k];
        for (&l, &g) in labels.iter().zip(truth) {
            if l >= 0 {
                table[l as usize][g] += 1;
            }
        }
        table
            .iter()
            .map(|r| *r.iter().max().unwrap())
            .sum::<usize>() as f64
            / labels.len() as f64
    }

    #[test]
    fn one_blob_one_cluster() {
        let (pts, _) = planted(60, &[[0.0, 0.0]], 1);
        let d = DistanceMatrix::euclidean(&pts);
        let a = density_peak_cluster(&d, &ClusterOptions::default()).unwrap();
        assert_eq!(a.clusters(), 1);
        let densest = (0..60)
            .max_by(|&i, &j| a.rho[i].total_cmp(&a.rho[j]).then(j.cmp(&i)))
            .unwrap();
        assert_eq!(a.centers, vec![densest]);
        assert!(a.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn coincident_points_form_one_cluster() {
        let d = DistanceMatrix::euclidean(&vec![vec![1.0, 2.0]; 12]);
        let a = density_peak_cluster(&d, &ClusterOptions::default()).unwrap();
        assert_eq!(a.centers, vec![0]);
        assert!(a.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn recovers_three_planted_blobs() {
        let (pts, truth) = planted(80, &[[0.0, 0.0], [8.0, 0.0], [4.0, 7.0]], 2);
        let d = DistanceMatrix::euclidean(&pts);
        let a = density_peak_cluster(&d, &ClusterOptions::default()).unwrap();
        assert_eq!(a.clusters(), 3);
        assert_eq!(purity(&a.labels, &truth), 1.0);
        for (c, &i) in a.centers.iter().enumerate() {
            assert_eq!(a.labels[i], c as i64);
        }
        let top = (0..240)
            .max_by(|&i, &j| a.rho[i].total_cmp(&a.rho[j]).then(j.cmp(&i)))
            .unwrap();
        assert_eq!(a.delta[top], d.row(top).iter().cloned().fold(0.0, f64::max));
    }

    #[test]
    fn density_ties_resolve_by_index() {
        // a square: every point has the same density
        let pts = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ];
        let d = DistanceMatrix::euclidean(&pts);
        let opts = ClusterOptions {
            cutoff: Some(1.2),
            centers: CenterSelection::Count(1),
            halo: false,
        };
        let a = density_peak_cluster(&d, &opts).unwrap();
        assert_eq!(a.centers, vec![0]);
        assert_eq!(a, density_peak_cluster(&d, &opts).unwrap());
        assert!(density_peak_cluster(
            &d,
            &ClusterOptions {
                cutoff: Some(0.0),
                ..opts
            }
        )
        .is_err());
    }

    #[test]
    fn halo_marks_sparse_edges() {
        // overlapping blobs so the border region is populated
        let (pts, _) = planted(60, &[[0.0, 0.0], [1.5, 0.0]], 5);
        let d = DistanceMatrix::euclidean(&pts);
        let opts = ClusterOptions {
            cutoff: Some(0.5),
            centers: CenterSelection::Count(2),
            halo: true,
        };
        let a = density_peak_cluster(&d, &opts).unwrap();
        assert!(a.labels.contains(&-1));
        for &c in &a.centers {
            assert!(a.labels[c] >= 0);
        }
    }

    #[test]
    fn complementary_constant_clusters() {
        let ps = vec![
            Protocol::constant(10, 1),
            Protocol::constant(10, 1),
            Protocol::constant(10, -1),
            Protocol::constant(10, -1),
        ];
        let d = hamming_matrix(&ps).unwrap();
        let m = mean_intercluster_distance(&[0, 0, 1, 1], &d).unwrap();
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.get(0, 0), 0.0);
        assert_eq!(m.get(1, 1), 0.0);
        let one = mean_intercluster_distance(&[0, 0, 0, 0], &d).unwrap();
        assert_eq!(one.clusters, 1);
        assert!((one.get(0, 0) - 4.0 / 6.0).abs() < 1e-15);
        let single = mean_intercluster_distance(&[0, 0, 0, 1], &d).unwrap();
        assert_eq!(single.singletons, vec![1]);
    }
}
