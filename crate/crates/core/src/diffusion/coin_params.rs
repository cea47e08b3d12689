use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{expi_hermitian, expi_hermitian_backward, CMatrix, HermitianEigen};

/// Learnable Hermitian coin generators.
///
/// For every step `t` there are `features + 1` generators of size `d × d`:
/// one per input feature followed by a bias generator. Each generator is
/// stored as `d²` reals: the `d` diagonal entries, then for every pair
/// `j < k` (row-major) the real and imaginary part of entry `(j, k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoinParams {
    d: usize,
    features: usize,
    steps: usize,
    values: Vec<f64>,
}

/// Number of reals describing one `d × d` Hermitian generator.
pub fn generator_len(d: usize) -> usize {
    d * d
}

impl CoinParams {
    pub fn zeros(d: usize, features: usize, steps: usize) -> CoinParams {
        CoinParams {
            d,
            features,
            steps,
            values: vec![0.0; steps * (features + 1) * generator_len(d)],
        }
    }

    pub fn from_values(d: usize, features: usize, steps: usize, values: Vec<f64>) -> Result<CoinParams> {
        let want = steps * (features + 1) * generator_len(d);
        if values.len() != want {
            return Err(Error::Dimension(format!(
                "{} coin parameters, expected {want}",
                values.len()
            )));
        }
        Ok(CoinParams {
            d,
            features,
            steps,
            values,
        })
    }

    pub fn coin_dim(&self) -> usize {
        self.d
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Offset of generator `gen` (features first, bias last) at step `t`.
    pub fn offset(&self, t: usize, gen: usize) -> usize {
        (t * (self.features + 1) + gen) * generator_len(self.d)
    }

    pub fn bias_index(&self) -> usize {
        self.features
    }

    pub fn generator_values(&self, t: usize, gen: usize) -> &[f64] {
        let o = self.offset(t, gen);
        &self.values[o..o + generator_len(self.d)]
    }

    pub fn generator(&self, t: usize, gen: usize) -> CMatrix {
        hermitian_from_reals(self.d, self.generator_values(t, gen))
    }

    /// `G = Θ_bias + Σ_f x[f] Θ_f` as packed reals.
    pub fn combined_reals(&self, t: usize, x: &[f64]) -> Vec<f64> {
        let mut acc = self.generator_values(t, self.bias_index()).to_vec();
        for (f, &xf) in x.iter().enumerate() {
            if xf == 0.0 {
                continue;
            }
            for (a, th) in acc.iter_mut().zip(self.generator_values(t, f)) {
                *a += xf * th;
            }
        }
        acc
    }
}

/// Unpack `d²` reals into a Hermitian matrix.
pub fn hermitian_from_reals(d: usize, reals: &[f64]) -> CMatrix {
    debug_assert_eq!(reals.len(), generator_len(d));
    let mut g = CMatrix::zeros(d, d);
    for k in 0..d {
        g[(k, k)] = Complex64::new(reals[k], 0.0);
    }
    let mut idx = d;
    for j in 0..d {
        for k in (j + 1)..d {
            let z = Complex64::new(reals[idx], reals[idx + 1]);
            g[(j, k)] = z;
            g[(k, j)] = z.conj();
            idx += 2;
        }
    }
    g
}

/// Project an unconstrained gradient on the entries of `G` onto the packed
/// Hermitian parameters (the adjoint of [`hermitian_from_reals`]).
pub fn hermitian_param_gradient(grad: &CMatrix) -> Vec<f64> {
    let d = grad.rows();
    let mut out = Vec::with_capacity(generator_len(d));
    for k in 0..d {
        out.push(grad[(k, k)].re);
    }
    for j in 0..d {
        for k in (j + 1)..d {
            out.push(grad[(j, k)].re + grad[(k, j)].re);
            out.push(grad[(j, k)].im - grad[(k, j)].im);
        }
    }
    out
}

/// Coin for one node at one step: `exp(i G)` with
/// `G = Θ_{t,bias} + Σ_f x[f] Θ_{t,f}`.
pub fn coin_from_features(params: &CoinParams, t: usize, x: &[f64]) -> Result<CMatrix> {
    coin_with_spectrum(params, t, x).map(|(c, _)| c)
}

pub(crate) fn coin_with_spectrum(params: &CoinParams, t: usize, x: &[f64]) -> Result<(CMatrix, HermitianEigen)> {
    if x.len() != params.features {
        return Err(Error::Dimension(format!(
            "feature vector has {} entries, coin generators expect {}",
            x.len(),
            params.features
        )));
    }
    if t >= params.steps {
        return Err(Error::InvalidArgument(format!(
            "step {t} outside the {} parameterized steps",
            params.steps
        )));
    }
    let reals = params.combined_reals(t, x);
    if reals.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("coin generator at step {t}")));
    }
    expi_hermitian(&hermitian_from_reals(params.d, &reals))
}

/// Gradient of the packed generator reals given a gradient on the coin.
pub(crate) fn coin_backward(eig: &HermitianEigen, grad_coin: &CMatrix) -> Vec<f64> {
    hermitian_param_gradient(&expi_hermitian_backward(eig, grad_coin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_parameters_give_identity() {
        let p = CoinParams::zeros(3, 2, 1);
        let c = coin_from_features(&p, 0, &[0.4, -1.0]).unwrap();
        assert!(c.max_abs_diff(&CMatrix::identity(3)) < 1e-15);
    }

    #[test]
    fn scalar_generator_is_a_phase() {
        let p = CoinParams::from_values(1, 0, 1, vec![0.7]).unwrap();
        let c = coin_from_features(&p, 0, &[]).unwrap();
        assert!((c[(0, 0)] - Complex64::new(0.0, 0.7).exp()).norm() < 1e-15);
    }

    #[test]
    fn random_coins_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in 1..=4 {
            for _ in 0..20 {
                let n = 2 * generator_len(d);
                let vals = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
                let p = CoinParams::from_values(d, 1, 1, vals).unwrap();
                let c = coin_from_features(&p, 0, &[rng.gen_range(-1.0..1.0)]).unwrap();
                assert!(c.unitarity_defect() < 1e-9);
            }
        }
    }

    #[test]
    fn packing_is_hermitian_and_adjoint_consistent() {
        let reals = [0.5, -1.0, 2.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let g = hermitian_from_reals(3, &reals);
        assert_eq!(g.hermiticity_defect(), 0.0);
        // <grad, unpack(r)>_Re == <pack-adjoint(grad), r>
        let grad = CMatrix::from_fn(3, 3, |i, j| Complex64::new(i as f64 + 0.5, j as f64 - 1.0));
        let lhs: f64 = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| (grad[(i, j)].conj() * g[(i, j)]).re)
            .sum();
        let rhs: f64 = hermitian_param_gradient(&grad).iter().zip(&reals).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let p = CoinParams::zeros(2, 2, 1);
        assert!(coin_from_features(&p, 0, &[1.0]).is_err());
        assert!(coin_from_features(&p, 1, &[1.0, 0.0]).is_err());
        let mut bad = CoinParams::zeros(2, 0, 1);
        bad.values_mut()[0] = f64::NAN;
        assert!(matches!(coin_from_features(&bad, 0, &[]), Err(Error::NonFinite(_))));
    }
}
