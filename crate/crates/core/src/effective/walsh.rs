use super::EffectiveError;

/// In-place unnormalized Walsh–Hadamard transform,
/// `out_S = Σ_s x_s (-1)^{popcount(s & S)}`. Applying it twice multiplies
/// by the length.
pub fn fwht(values: &mut [f64]) -> Result<(), EffectiveError> {
    let n = values.len();
    if !n.is_power_of_two() {
        return Err(EffectiveError::NotPowerOfTwo(n));
    }
    let mut h = 1;
    while h < n {
        for block in values.chunks_exact_mut(2 * h) {
            let (a, b) = block.split_at_mut(h);
            for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                let (u, v) = (*x, *y);
                *x = u + v;
                *y = u - v;
            }
        }
        h *= 2;
    }
    Ok(())
}

/// Coefficients `a_S` of `C(σ) = Σ_S a_S Π_{j∈S} σ_j`, for a table indexed
/// as in [`crate::quantum::Protocol::from_index`] (bit `j` set ⇔ `σ_j = -1`).
/// The result is indexed by the subset mask `S`.
pub fn walsh_coefficients(table: &[f64]) -> Result<Vec<f64>, EffectiveError> {
    let mut a = table.to_vec();
    fwht(&mut a)?;
    let scale = 1.0 / table.len() as f64;
    a.iter_mut().for_each(|x| *x *= scale);
    Ok(a)
}
