use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::quantum::Protocol;

use super::EffectiveError;

/// Stop coordinate descent once no coefficient moves more than this.
pub const LASSO_TOLERANCE: f64 = 1e-8;
pub const LASSO_MAX_SWEEPS: usize = 10_000;

/// Smallest ridge strength accepted.
const RIDGE_MIN_LAMBDA: f64 = 1e-12;

/// Fraction of records used for training.
const TRAIN_PARTS: usize = 5;
const TOTAL_PARTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularizer {
    Ridge,
    Lasso,
}

/// Which mean centers the denominator of R².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RSquaredMean {
    /// Mean of the true values (the usual definition).
    #[default]
    True,
    /// Mean of the predictions.
    Predicted,
}

/// `1 - Σ(y - ŷ)² / Σ(y - ȳ)²`.
pub fn r_squared(
    truth: &[f64],
    predicted: &[f64],
    mean: RSquaredMean,
) -> Result<f64, EffectiveError> {
    if truth.len() != predicted.len() || truth.len() < 2 {
        return Err(EffectiveError::InvalidArgument(format!(
            "need two equal-length series of at least 2 values, got {} and {}",
            truth.len(),
            predicted.len()
        )));
    }
    let n = truth.len() as f64;
    let true_mean = truth.iter().sum::<f64>() / n;
    if truth.iter().all(|&y| (y - true_mean).abs() == 0.0) {
        return Err(EffectiveError::ZeroVariance);
    }
    let center = match mean {
        RSquaredMean::True => true_mean,
        RSquaredMean::Predicted => predicted.iter().sum::<f64>() / n,
    };
    let ss_res: f64 = truth
        .iter()
        .zip(predicted)
        .map(|(y, p)| (y - p).powi(2))
        .sum();
    let ss_tot: f64 = truth.iter().map(|y| (y - center).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(EffectiveError::ZeroVariance);
    }
    Ok(1.0 - ss_res / ss_tot)
}

/// Products `σ_i σ_j …` for every index set of the chosen orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub bangs: usize,
    pub orders: Vec<usize>,
    pub terms: Vec<Vec<usize>>,
}

impl FeatureSet {
    pub fn new(bangs: usize, orders: &[usize]) -> Result<Self, EffectiveError> {
        let mut orders = orders.to_vec();
        orders.sort_unstable();
        orders.dedup();
        if orders.is_empty() || orders.iter().any(|&o| !(1..=3).contains(&o)) {
            return Err(EffectiveError::InvalidArgument(format!(
                "fitted orders must be a non-empty subset of {{1, 2, 3}}, got {orders:?}"
            )));
        }
        if let Some(&o) = orders.iter().find(|&&o| o > bangs) {
            return Err(EffectiveError::OrderUnavailable {
                order: o,
                max: bangs,
            });
        }
        let mut terms = Vec::new();
        for &o in &orders {
            push_subsets(bangs, o, 0, &mut Vec::new(), &mut terms);
        }
        Ok(FeatureSet {
            bangs,
            orders,
            terms,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn row(&self, signs: &[i8]) -> Vec<f64> {
        self.terms
            .iter()
            .map(|t| t.iter().map(|&i| signs[i] as f64).product())
            .collect()
    }
}

fn push_subsets(
    n: usize,
    size: usize,
    from: usize,
    cur: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if cur.len() == size {
        out.push(cur.clone());
        return;
    }
    for i in from..n {
        cur.push(i);
        push_subsets(n, size, i + 1, cur, out);
        cur.pop();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub features: FeatureSet,
    pub regularizer: Regularizer,
    pub lambda: f64,
    pub intercept: f64,
    /// One coefficient per entry of `features.terms`.
    pub coefficients: Vec<f64>,
    pub r2_train: f64,
    pub r2_test: f64,
    pub split_seed: u64,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    /// False when coordinate descent hit the sweep limit.
    pub converged: bool,
    pub sweeps: usize,
}

impl FitResult {
    pub fn predict(&self, signs: &[i8]) -> f64 {
        self.intercept
            + self
                .features
                .row(signs)
                .iter()
                .zip(&self.coefficients)
                .map(|(x, b)| x * b)
                .sum::<f64>()
    }

    /// Number of coefficients that are exactly nonzero.
    pub fn support(&self) -> Vec<usize> {
        (0..self.coefficients.len())
            .filter(|&i| self.coefficients[i] != 0.0)
            .collect()
    }

    /// Sum of squared training residuals.
    pub fn train_residual(&self, records: &[(Protocol, f64)]) -> f64 {
        self.train_indices
            .iter()
            .map(|&i| (records[i].1 - self.predict(records[i].0.bangs())).powi(2))
            .sum()
    }
}

/// `points` strengths spaced logarithmically over `[1e-9, 1e-1]`.
pub fn lambda_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![1e-5],
        _ => (0..points)
            .map(|i| 10f64.powf(-9.0 + 8.0 * i as f64 / (points - 1) as f64))
            .collect(),
    }
}

/// The `count` lowest-cost protocols of a full cost table, best first.
pub fn low_manifold(costs: &[f64], count: usize) -> Result<Vec<(Protocol, f64)>, EffectiveError> {
    if !costs.len().is_power_of_two() {
        return Err(EffectiveError::NotPowerOfTwo(costs.len()));
    }
    let bangs = costs.len().trailing_zeros() as usize;
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .take(count)
        .map(|i| (Protocol::from_index(bangs, i as u64), costs[i]))
        .collect())
}

/// Fits the model on a seeded 5:3 train/test split.
///
/// Ridge minimizes `(1/n)|y - Xβ - b|² + λ|β|²`; lasso minimizes
/// `(1/2n)|y - Zβ - b|² + λ|β|₁` with `Z` the standardized features. The
/// intercept is never penalized.
pub fn fit_low_manifold(
    records: &[(Protocol, f64)],
    orders: &[usize],
    regularizer: Regularizer,
    lambda: f64,
    split_seed: u64,
) -> Result<FitResult, EffectiveError> {
    let bangs = records
        .first()
        .map(|r| r.0.len())
        .ok_or_else(|| EffectiveError::InvalidArgument("no records to fit".into()))?;
    if records.iter().any(|r| r.0.len() != bangs) {
        return Err(EffectiveError::InvalidArgument(
            "records have different protocol lengths".into(),
        ));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(EffectiveError::InvalidArgument(format!(
            "regularization strength must be finite and non-negative, got {lambda}"
        )));
    }
    if regularizer == Regularizer::Ridge && lambda <= 0.0 {
        return Err(EffectiveError::InvalidArgument(
            "ridge needs a positive strength".into(),
        ));
    }
    let features = FeatureSet::new(bangs, orders)?;
    let p = features.len();

    let mut idx: Vec<usize> = (0..records.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(split_seed));
    let n_train = (records.len() * TRAIN_PARTS + TOTAL_PARTS / 2) / TOTAL_PARTS;
    if n_train <= p || records.len() - n_train < 2 {
        return Err(EffectiveError::InvalidArgument(format!(
            "{} records give {n_train} training rows, need more than {p} features and 2 test rows",
            records.len()
        )));
    }
    let test_indices = idx.split_off(n_train);
    let train_indices = idx;

    let x = DMatrix::from_fn(n_train, p, |r, c| {
        let signs = records[train_indices[r]].0.bangs();
        features.terms[c].iter().map(|&i| signs[i] as f64).product()
    });
    let y = DVector::from_iterator(n_train, train_indices.iter().map(|&i| records[i].1));

    let (intercept, coefficients, converged, sweeps) = match regularizer {
        Regularizer::Ridge => {
            let (b, beta) = ridge(&x, &y, lambda.max(RIDGE_MIN_LAMBDA))?;
            (b, beta, true, 0)
        }
        Regularizer::Lasso => lasso(&x, &y, lambda),
    };

    let mut fit = FitResult {
        features,
        regularizer,
        lambda,
        intercept,
        coefficients,
        r2_train: 0.0,
        r2_test: 0.0,
        split_seed,
        train_indices,
        test_indices,
        converged,
        sweeps,
    };
    fit.r2_train = score(&fit, records, &fit.train_indices)?;
    fit.r2_test = score(&fit, records, &fit.test_indices)?;
    Ok(fit)
}

fn score(
    fit: &FitResult,
    records: &[(Protocol, f64)],
    rows: &[usize],
) -> Result<f64, EffectiveError> {
    let truth: Vec<f64> = rows.iter().map(|&i| records[i].1).collect();
    let pred: Vec<f64> = rows
        .iter()
        .map(|&i| fit.predict(records[i].0.bangs()))
        .collect();
    r_squared(&truth, &pred, RSquaredMean::True)
}

/// Fits every strength in `grid` and keeps the best test R².
pub fn select_lambda(
    records: &[(Protocol, f64)],
    orders: &[usize],
    regularizer: Regularizer,
    grid: &[f64],
    split_seed: u64,
) -> Result<FitResult, EffectiveError> {
    select_lambda_within(records, orders, regularizer, grid, split_seed, 0.0)
}

/// Largest strength in `grid` whose test R² is within `slack` of the best.
pub fn select_lambda_within(
    records: &[(Protocol, f64)],
    orders: &[usize],
    regularizer: Regularizer,
    grid: &[f64],
    split_seed: u64,
    slack: f64,
) -> Result<FitResult, EffectiveError> {
    let fits = grid
        .iter()
        .map(|&l| fit_low_manifold(records, orders, regularizer, l, split_seed))
        .collect::<Result<Vec<_>, _>>()?;
    let top = fits
        .iter()
        .map(|f| f.r2_test)
        .fold(f64::NEG_INFINITY, f64::max);
    fits.into_iter()
        .filter(|f| f.r2_test >= top - slack)
        .max_by(|a, b| a.lambda.total_cmp(&b.lambda))
        .ok_or_else(|| EffectiveError::InvalidArgument("empty strength grid".into()))
}

fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.mean()))
}

fn ridge(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
) -> Result<(f64, Vec<f64>), EffectiveError> {
    let n = x.nrows() as f64;
    let mx = column_means(x);
    let my = y.mean();
    let mut xc = x.clone();
    for (mut col, m) in xc.column_iter_mut().zip(mx.iter()) {
        col.add_scalar_mut(-m);
    }
    let yc = y.add_scalar(-my);
    let mut gram = xc.tr_mul(&xc) / n;
    for i in 0..gram.nrows() {
        gram[(i, i)] += lambda;
    }
    let rhs = xc.tr_mul(&yc) / n;
    let chol = gram.cholesky().ok_or_else(|| {
        EffectiveError::Singular("ridge normal matrix is not positive definite".into())
    })?;
    let beta = chol.solve(&rhs);
    let b = my - mx.dot(&beta);
    Ok((b, beta.iter().copied().collect()))
}

/// Cyclic coordinate descent on the standardized Gram matrix.
fn lasso(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> (f64, Vec<f64>, bool, usize) {
    let n = x.nrows() as f64;
    let p = x.ncols();
    let mx = column_means(x);
    let my = y.mean();
    let mut z = x.clone();
    let mut scale = vec![0.0; p];
    for (c, mut col) in z.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mx[c]);
        let s = (col.norm_squared() / n).sqrt();
        scale[c] = s;
        if s > 0.0 {
            col /= s;
        }
    }
    let yc = y.add_scalar(-my);
    let gram = z.tr_mul(&z) / n;
    let zy = z.tr_mul(&yc) / n;

    let mut beta = vec![0.0; p];
    // grad[c] = zy[c] - Σ_k gram[c,k] β_k
    let mut grad: Vec<f64> = zy.iter().copied().collect();
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < LASSO_MAX_SWEEPS {
        sweeps += 1;
        let mut max_step: f64 = 0.0;
        for c in 0..p {
            let g = gram[(c, c)];
            if g == 0.0 {
                continue;
            }
            let rho = grad[c] + g * beta[c];
            let new = soft_threshold(rho, lambda) / g;
            let step = new - beta[c];
            if step != 0.0 {
                for (k, gk) in grad.iter_mut().enumerate() {
                    *gk -= gram[(k, c)] * step;
                }
                beta[c] = new;
                max_step = max_step.max(step.abs());
            }
        }
        if max_step < LASSO_TOLERANCE {
            converged = true;
            break;
        }
    }
    let coefficients: Vec<f64> = beta
        .iter()
        .zip(&scale)
        .map(|(b, s)| if *s > 0.0 { b / s } else { 0.0 })
        .collect();
    let b = my
        - coefficients
            .iter()
            .zip(mx.iter())
            .map(|(c, m)| c * m)
            .sum::<f64>();
    (b, coefficients, converged, sweeps)
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}
