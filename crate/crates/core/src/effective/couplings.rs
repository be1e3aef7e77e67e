use serde::{Deserialize, Serialize};

use super::{fwht, walsh_coefficients, EffectiveError};

/// Exact multilinear expansion of a cost table.
///
/// `C(σ) = C_0 + Σ_j G_j σ_j + Σ_{i<j} J_ij σ_i σ_j + Σ_{i<j<k} K_ijk σ_i σ_j σ_k + …`
/// with every coefficient for `σ ∈ {±1}`. `j` and `k` are stored densely and
/// symmetrically with zeros on repeated indices; the full spectrum keeps all
/// higher orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingTable {
    pub bangs: usize,
    pub c0: f64,
    pub g: Vec<f64>,
    /// Row-major `N × N`.
    pub j: Vec<f64>,
    /// Row-major `N × N × N`.
    pub k: Vec<f64>,
    /// Coefficient of every subset mask.
    spectrum: Vec<f64>,
}

impl CouplingTable {
    /// Expansion of a full `2^N` cost table.
    pub fn from_costs(costs: &[f64]) -> Result<Self, EffectiveError> {
        let spectrum = walsh_coefficients(costs)?;
        Ok(Self::from_spectrum(spectrum))
    }

    /// Builds the table from coefficients indexed by subset mask.
    pub fn from_spectrum(spectrum: Vec<f64>) -> Self {
        let bangs = spectrum.len().trailing_zeros() as usize;
        let n = bangs;
        let mut g = vec![0.0; n];
        let mut j = vec![0.0; n * n];
        let mut k = vec![0.0; n * n * n];
        for (mask, &a) in spectrum.iter().enumerate() {
            let idx: Vec<usize> = (0..n).filter(|&b| mask >> b & 1 == 1).collect();
            match idx.as_slice() {
                [a0] => g[*a0] = a,
                &[x, y] => {
                    j[x * n + y] = a;
                    j[y * n + x] = a;
                }
                &[x, y, z] => {
                    for (p, q, r) in [
                        (x, y, z),
                        (x, z, y),
                        (y, x, z),
                        (y, z, x),
                        (z, x, y),
                        (z, y, x),
                    ] {
                        k[(p * n + q) * n + r] = a;
                    }
                }
                _ => {}
            }
        }
        CouplingTable {
            bangs,
            c0: spectrum[0],
            g,
            j,
            k,
            spectrum,
        }
    }

    /// Model with the listed terms only: `(indices, coefficient)` pairs.
    pub fn from_terms(bangs: usize, terms: &[(Vec<usize>, f64)]) -> Result<Self, EffectiveError> {
        let mut spectrum = vec![0.0; 1usize << bangs];
        for (idx, a) in terms {
            let mut mask = 0usize;
            for &i in idx {
                if i >= bangs || mask >> i & 1 == 1 {
                    return Err(EffectiveError::InvalidArgument(format!(
                        "term indices {idx:?} invalid for {bangs} bangs"
                    )));
                }
                mask |= 1 << i;
            }
            spectrum[mask] += a;
        }
        Ok(Self::from_spectrum(spectrum))
    }

    pub fn coefficient(&self, mask: usize) -> f64 {
        self.spectrum[mask]
    }

    /// Highest order with a nonzero coefficient.
    pub fn max_order(&self) -> usize {
        self.spectrum
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(m, _)| m.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn j_at(&self, a: usize, b: usize) -> f64 {
        self.j[a * self.bangs + b]
    }

    pub fn k_at(&self, a: usize, b: usize, c: usize) -> f64 {
        self.k[(a * self.bangs + b) * self.bangs + c]
    }

    /// Coefficients with only the listed interaction orders kept.
    fn masked(&self, orders: &[usize]) -> Vec<f64> {
        self.spectrum
            .iter()
            .enumerate()
            .map(|(mask, &a)| {
                if orders.contains(&(mask.count_ones() as usize)) {
                    a
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Energy of the truncated model on one configuration, with `signs` in
    /// protocol order.
    pub fn truncated_energy(&self, orders: &[usize], signs: &[i8]) -> Result<f64, EffectiveError> {
        if signs.len() != self.bangs {
            return Err(EffectiveError::InvalidArgument(format!(
                "configuration has {} spins, model has {}",
                signs.len(),
                self.bangs
            )));
        }
        if let Some(&o) = orders.iter().find(|&&o| o > self.bangs) {
            return Err(EffectiveError::OrderUnavailable {
                order: o,
                max: self.bangs,
            });
        }
        let minus: usize = signs
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 0)
            .fold(0, |m, (b, _)| m | 1 << b);
        Ok(self
            .spectrum
            .iter()
            .enumerate()
            .filter(|(mask, _)| orders.contains(&(mask.count_ones() as usize)))
            .map(|(mask, &a)| {
                if (mask & minus).count_ones() % 2 == 1 {
                    -a
                } else {
                    a
                }
            })
            .sum())
    }

    /// Truncated-model energy of every configuration, in table order.
    pub fn truncated_spectrum(&self, orders: &[usize]) -> Vec<f64> {
        let mut e = self.masked(orders);
        fwht(&mut e).expect("power-of-two length");
        e
    }

    /// Mean absolute deviation `2^{-N} Σ_s |C_s - C_s^approx|`.
    pub fn truncation_error(&self, costs: &[f64], orders: &[usize]) -> Result<f64, EffectiveError> {
        if costs.len() != self.spectrum.len() {
            return Err(EffectiveError::InvalidArgument(format!(
                "cost table has {} entries, model covers {}",
                costs.len(),
                self.spectrum.len()
            )));
        }
        let approx = self.truncated_spectrum(orders);
        Ok(costs
            .iter()
            .zip(&approx)
            .map(|(c, a)| (c - a).abs())
            .sum::<f64>()
            / costs.len() as f64)
    }

    /// `Φ = (min_s E_s + Σ|a|) / Σ|a|` over the retained orders, where `E`
    /// is the truncated model without its constant term. Zero when every
    /// term can be minimized at once.
    pub fn frustration(&self, orders: &[usize]) -> Result<f64, EffectiveError> {
        if orders.contains(&0) {
            return Err(EffectiveError::ConstantOrder);
        }
        let masked = self.masked(orders);
        let total: f64 = masked.iter().map(|a| a.abs()).sum();
        if total == 0.0 {
            return Err(EffectiveError::ZeroCouplings);
        }
        let mut e = masked;
        fwht(&mut e).expect("power-of-two length");
        let min = e.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(((min + total) / total).clamp(0.0, 1.0))
    }

    /// Mean `|K_ijk|` grouped by triangle perimeter
    /// `|i-j| + |j-k| + |k-i|`, as `(perimeter, mean)` for every perimeter
    /// that occurs.
    pub fn three_body_locality(&self) -> Vec<(usize, f64)> {
        let n = self.bangs;
        if n < 3 {
            return Vec::new();
        }
        let max_p = 2 * (n - 1);
        let mut sum = vec![0.0; max_p + 1];
        let mut count = vec![0usize; max_p + 1];
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let p = 2 * (c - a);
                    sum[p] += self.k_at(a, b, c).abs();
                    count[p] += 1;
                }
            }
        }
        (0..=max_p)
            .filter(|&p| count[p] > 0)
            .map(|p| (p, sum[p] / count[p] as f64))
            .collect()
    }
}

/// Couplings from the per-order averaging formulas written for fields
/// `h_j = ±4`:
/// `I_0 = ⟨C⟩`, `G_j = ⟨C h_j⟩`, `J_ij = N/2! ⟨C h_i h_j⟩`,
/// `K_ijk = N²/3! ⟨C h_i h_j h_k⟩`, averages over all `2^N` protocols.
#[derive(Debug, Clone, PartialEq)]
pub struct SiCouplings {
    pub bangs: usize,
    pub i0: f64,
    pub g: Vec<f64>,
    pub j: Vec<f64>,
    pub k: Vec<f64>,
}

impl SiCouplings {
    /// Converts to `σ = ±1` coefficients: `G/4`, `J/(8N)`, `K·3/(32 N²)`.
    pub fn to_normalized(&self) -> (f64, Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.bangs as f64;
        (
            self.i0,
            self.g.iter().map(|x| x / 4.0).collect(),
            self.j.iter().map(|x| x / (8.0 * n)).collect(),
            self.k.iter().map(|x| x * 3.0 / (32.0 * n * n)).collect(),
        )
    }
}

/// Direct `O(N³ 2^N)` evaluation of the averaging formulas; an independent
/// route to the transform for small tables.
pub fn si_formula_couplings(costs: &[f64], field_max: f64) -> Result<SiCouplings, EffectiveError> {
    if !costs.len().is_power_of_two() {
        return Err(EffectiveError::NotPowerOfTwo(costs.len()));
    }
    let n = costs.len().trailing_zeros() as usize;
    let nf = n as f64;
    let m = costs.len() as f64;
    let mut i0 = 0.0;
    let mut g = vec![0.0; n];
    let mut j = vec![0.0; n * n];
    let mut k = vec![0.0; n * n * n];
    let mut h = vec![0.0; n];
    for (s, &c) in costs.iter().enumerate() {
        for (b, x) in h.iter_mut().enumerate() {
            *x = if s >> b & 1 == 1 {
                -field_max
            } else {
                field_max
            };
        }
        i0 += c;
        for a in 0..n {
            g[a] += c * h[a];
            for b in 0..n {
                if b == a {
                    continue;
                }
                j[a * n + b] += c * h[a] * h[b];
                for d in 0..n {
                    if d == a || d == b {
                        continue;
                    }
                    k[(a * n + b) * n + d] += c * h[a] * h[b] * h[d];
                }
            }
        }
    }
    Ok(SiCouplings {
        bangs: n,
        i0: i0 / m,
        g: g.iter().map(|x| x / m).collect(),
        j: j.iter().map(|x| x * nf / (2.0 * m)).collect(),
        k: k.iter().map(|x| x * nf * nf / (6.0 * m)).collect(),
    })
}
