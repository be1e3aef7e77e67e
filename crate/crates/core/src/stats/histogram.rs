use serde::{Deserialize, Serialize};

use super::{DistanceMatrix, StatsError};

/// Uniform-bin histogram. The last bin is closed on the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Probability density per bin: `count / (total · width)`.
    pub density: Vec<f64>,
    pub total: u64,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Self, StatsError> {
        if bins == 0 {
            return Err(StatsError::InvalidArgument(
                "histogram needs at least one bin".into(),
            ));
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(StatsError::InvalidArgument(format!(
                "invalid histogram range [{lo}, {hi}]"
            )));
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|b| lo + b as f64 * width).collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            if let Some(b) = locate(&edges, v) {
                counts[b] += 1;
            }
        }
        let total: u64 = counts.iter().sum();
        let density = counts
            .iter()
            .map(|&c| {
                if total == 0 {
                    0.0
                } else {
                    c as f64 / (total as f64 * width)
                }
            })
            .collect();
        Ok(Histogram {
            edges,
            counts,
            density,
            total,
        })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Bin containing `x`, if inside the range.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        locate(&self.edges, x)
    }

    pub fn density_at(&self, x: f64) -> f64 {
        self.bin_of(x).map(|b| self.density[b]).unwrap_or(0.0)
    }

    /// Center of the fullest bin (the first one on ties).
    pub fn mode(&self) -> f64 {
        let mut best = 0;
        for (b, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = b;
            }
        }
        self.centers()[best]
    }

    pub fn max_density(&self) -> f64 {
        self.density.iter().cloned().fold(0.0, f64::max)
    }

    /// `Σ density · width`, one for a non-empty histogram.
    pub fn mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.width()
    }
}

/// Bin index of `x` consistent with the stored edges.
fn locate(edges: &[f64], x: f64) -> Option<usize> {
    let bins = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[bins]);
    if x < lo || x > hi || x.is_nan() {
        return None;
    }
    let width = (hi - lo) / bins as f64;
    let mut b = (((x - lo) / width) as usize).min(bins - 1);
    if x < edges[b] {
        b -= 1;
    } else if b + 1 < bins && x >= edges[b + 1] {
        b += 1;
    }
    Some(b)
}

/// Distribution of the distinct-pair entries of a distance matrix over
/// `[0, 1]`.
pub fn pairwise_histogram(matrix: &DistanceMatrix, bins: usize) -> Result<Histogram, StatsError> {
    Histogram::new(&matrix.upper_triangle(), bins, 0.0, 1.0)
}

/// Where the costs came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DosOrigin {
    Enumeration,
    /// Uniformly sampled protocols; the density is an estimate.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DosHistogram {
    pub histogram: Histogram,
    pub origin: DosOrigin,
}

/// Normalized density of states over the observed cost range. When all
/// costs coincide the range is widened to `cost ± 0.5`.
pub fn dos(costs: &[f64], bins: usize, origin: DosOrigin) -> Result<DosHistogram, StatsError> {
    let finite: Vec<f64> = costs.iter().cloned().filter(|c| c.is_finite()).collect();
    if finite.is_empty() {
        return Err(StatsError::Empty);
    }
    let lo = finite.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    };
    Ok(DosHistogram {
        histogram: Histogram::new(&finite, bins, lo, hi)?,
        origin,
    })
}

/// Interior local maxima (and edge bins higher than their only neighbor),
/// merging flat tops into their first bin.
pub fn find_peaks(hist: &Histogram) -> Vec<usize> {
    let c = &hist.counts;
    let n = c.len();
    let mut peaks = Vec::new();
    let mut b = 0;
    while b < n {
        // extent of a plateau starting at b
        let mut e = b;
        while e + 1 < n && c[e + 1] == c[b] {
            e += 1;
        }
        let left_lower = b == 0 || c[b - 1] < c[b];
        let right_lower = e + 1 == n || c[e + 1] < c[b];
        if c[b] > 0 && left_lower && right_lower {
            peaks.push(b);
        }
        b = e + 1;
    }
    peaks
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bimodality {
    /// Bin indices of the two peaks, left first.
    pub peaks: (usize, usize),
    /// Lowest count between the peaks.
    pub valley: u64,
    /// `1 - valley / min(peak counts)`.
    pub dip: f64,
}

/// The deepest-separated pair of peaks whose counts each reach
/// `min_peak_fraction` of the tallest bin, if the valley between them is at
/// least `min_dip` below the smaller peak.
pub fn bimodality(hist: &Histogram, min_dip: f64, min_peak_fraction: f64) -> Option<Bimodality> {
    let tallest = *hist.counts.iter().max()? as f64;
    let peaks: Vec<usize> = find_peaks(hist)
        .into_iter()
        .filter(|&p| hist.counts[p] as f64 >= min_peak_fraction * tallest)
        .collect();
    let mut best: Option<Bimodality> = None;
    for (i, &a) in peaks.iter().enumerate() {
        for &b in &peaks[i + 1..] {
            let valley = *hist.counts[a..=b].iter().min().expect("non-empty");
            let smaller = hist.counts[a].min(hist.counts[b]) as f64;
            let dip = 1.0 - valley as f64 / smaller;
            if dip >= min_dip && best.as_ref().is_none_or(|x| dip > x.dip) {
                best = Some(Bimodality {
                    peaks: (a, b),
                    valley,
                    dip,
                });
            }
        }
    }
    best
}
