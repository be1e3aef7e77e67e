//! Split-storage complex vectors and the handful of kernels the fidelity
//! evaluators need. Matrices are real and stored column-major.

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Amps {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl Amps {
    pub fn zeros(dim: usize) -> Self {
        Amps {
            re: vec![0.0; dim],
            im: vec![0.0; dim],
        }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Amps {
            re: values.to_vec(),
            im: vec![0.0; values.len()],
        }
    }

    #[cfg(test)]
    pub fn from_complex(values: &[Complex64]) -> Self {
        Amps {
            re: values.iter().map(|z| z.re).collect(),
            im: values.iter().map(|z| z.im).collect(),
        }
    }

    pub fn copy_from(&mut self, other: &Amps) {
        self.re.copy_from_slice(&other.re);
        self.im.copy_from_slice(&other.im);
    }

    /// Elementwise multiplication by `phase`.
    #[inline]
    pub fn apply_phase(&mut self, phase_re: &[f64], phase_im: &[f64]) {
        let n = self.re.len();
        let (re, im) = (&mut self.re[..n], &mut self.im[..n]);
        let (pr, pi) = (&phase_re[..n], &phase_im[..n]);
        for k in 0..n {
            let (a, b) = (re[k], im[k]);
            re[k] = a * pr[k] - b * pi[k];
            im[k] = a * pi[k] + b * pr[k];
        }
    }

    /// `out = M self` for a real square column-major matrix `M`.
    #[inline]
    pub fn rotate_into(&self, matrix: &[f64], out: &mut Amps) {
        let n = self.re.len();
        out.re.iter_mut().for_each(|x| *x = 0.0);
        out.im.iter_mut().for_each(|x| *x = 0.0);
        let (ore, oim) = (&mut out.re[..n], &mut out.im[..n]);
        for (k, column) in matrix.chunks_exact(n).enumerate() {
            let (xr, xi) = (self.re[k], self.im[k]);
            for r in 0..n {
                ore[r] += column[r] * xr;
                oim[r] += column[r] * xi;
            }
        }
    }

    /// Bilinear product `Σ_k self_k other_k` (no conjugation).
    #[inline]
    pub fn dot(&self, other: &Amps) -> Complex64 {
        let n = self.re.len();
        let (ar, ai, br, bi) = (&self.re[..n], &self.im[..n], &other.re[..n], &other.im[..n]);
        let mut re = [0.0f64; 4];
        let mut im = [0.0f64; 4];
        let chunks = n / 4;
        for c in 0..chunks {
            for l in 0..4 {
                let k = 4 * c + l;
                re[l] += ar[k] * br[k] - ai[k] * bi[k];
                im[l] += ar[k] * bi[k] + ai[k] * br[k];
            }
        }
        for k in 4 * chunks..n {
            re[0] += ar[k] * br[k] - ai[k] * bi[k];
            im[0] += ar[k] * bi[k] + ai[k] * br[k];
        }
        Complex64::new(re.iter().sum(), im.iter().sum())
    }

    /// Bilinear product with a real vector.
    #[inline]
    pub fn dot_real(&self, other: &[f64]) -> Complex64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for ((&r, &i), &o) in self.re.iter().zip(&self.im).zip(other) {
            re += r * o;
            im += i * o;
        }
        Complex64::new(re, im)
    }
}
