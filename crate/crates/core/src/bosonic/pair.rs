use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{RMatrix, ZERO};
use crate::walk::{build_shift, evolve, init_state, CoinBank, ProbabilityMatrix, ShiftMap, WalkerState, NORM_TOL};

/// Largest single-walker dimension `n · d` for which a pair state may be
/// expanded into its dense `(n·d)²` amplitude vector.
pub const MATERIALIZE_LIMIT: usize = 64;

/// Tolerance for the exchange-symmetry check.
pub const EXCHANGE_TOL: f64 = 1e-10;

/// Two coined walkers held in factored form as
/// `α |ψ₁⟩⊗|ψ₂⟩ + β |ψ₂⟩⊗|ψ₁⟩`.
///
/// [`symmetrize`] sets `α = β = 1/√(2(1 + |⟨ψ₁|ψ₂⟩|²))`, which is the
/// normalized bosonic state. [`PairState::product`] builds the plain
/// distinguishable product (`α = 1, β = 0`).
#[derive(Clone, Debug, PartialEq)]
pub struct PairState {
    psi1: WalkerState,
    psi2: WalkerState,
    alpha: Complex64,
    beta: Complex64,
    overlap: Complex64,
}

fn check_pair(psi1: &WalkerState, psi2: &WalkerState) -> Result<()> {
    if !psi1.same_shape(psi2) {
        return Err(Error::Dimension(format!(
            "walkers are {}x{} and {}x{}",
            psi1.n(),
            psi1.coin_dim(),
            psi2.n(),
            psi2.coin_dim()
        )));
    }
    for (i, psi) in [psi1, psi2].into_iter().enumerate() {
        let norm = psi.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "walker {} has squared norm {norm}",
                i + 1
            )));
        }
    }
    Ok(())
}

pub fn symmetrize(psi1: &WalkerState, psi2: &WalkerState) -> Result<PairState> {
    check_pair(psi1, psi2)?;
    let overlap = psi1.inner(psi2);
    let c = Complex64::new(1.0 / (2.0 * (1.0 + overlap.norm_sqr())).sqrt(), 0.0);
    Ok(PairState {
        psi1: psi1.clone(),
        psi2: psi2.clone(),
        alpha: c,
        beta: c,
        overlap,
    })
}

impl PairState {
    /// Unsymmetrized `|ψ₁⟩⊗|ψ₂⟩`, the state of two distinguishable walkers.
    pub fn product(psi1: &WalkerState, psi2: &WalkerState) -> Result<PairState> {
        check_pair(psi1, psi2)?;
        Ok(PairState {
            psi1: psi1.clone(),
            psi2: psi2.clone(),
            alpha: Complex64::new(1.0, 0.0),
            beta: ZERO,
            overlap: psi1.inner(psi2),
        })
    }

    pub fn psi1(&self) -> &WalkerState {
        &self.psi1
    }

    pub fn psi2(&self) -> &WalkerState {
        &self.psi2
    }

    /// Cached `⟨ψ₁|ψ₂⟩`.
    pub fn overlap(&self) -> Complex64 {
        self.overlap
    }

    pub fn coefficients(&self) -> (Complex64, Complex64) {
        (self.alpha, self.beta)
    }

    pub fn n(&self) -> usize {
        self.psi1.n()
    }

    pub fn coin_dim(&self) -> usize {
        self.psi1.coin_dim()
    }

    /// Squared norm of the two-walker vector, from the factors alone.
    pub fn norm_sqr(&self) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        let n1 = self.psi1.norm_sqr();
        let n2 = self.psi2.norm_sqr();
        (a.norm_sqr() + b.norm_sqr()) * n1 * n2 + 2.0 * (a.conj() * b).re * self.overlap.norm_sqr()
    }

    /// Dense amplitudes indexed by `(node₁·d + slot₁)·(n·d) + node₂·d + slot₂`.
    pub fn materialize(&self) -> Result<Vec<Complex64>> {
        let m = self.n() * self.coin_dim();
        if m > MATERIALIZE_LIMIT {
            return Err(Error::TooLarge {
                what: "materialized pair state".into(),
                size: m * m,
                cap: MATERIALIZE_LIMIT * MATERIALIZE_LIMIT,
            });
        }
        let a = self.psi1.amplitudes();
        let b = self.psi2.amplitudes();
        let mut out = Vec::with_capacity(m * m);
        for x in 0..m {
            for y in 0..m {
                out.push(self.alpha * a[x] * b[y] + self.beta * b[x] * a[y]);
            }
        }
        Ok(out)
    }
}

/// True when exchanging the two walkers leaves the state unchanged.
///
/// The exchanged state is `β ψ₁⊗ψ₂ + α ψ₂⊗ψ₁`, so the difference is
/// `(α − β)(ψ₁⊗ψ₂ − ψ₂⊗ψ₁)` with squared norm
/// `|α − β|² · 2(‖ψ₁‖²‖ψ₂‖² − |⟨ψ₁|ψ₂⟩|²)`.
pub fn exchange_check(p: &PairState) -> bool {
    let antisym = 2.0 * (p.psi1.norm_sqr() * p.psi2.norm_sqr() - p.overlap.norm_sqr());
    let diff = (p.alpha - p.beta).norm_sqr() * antisym.max(0.0);
    diff.sqrt() <= EXCHANGE_TOL
}

/// Evolve both factors by the same single-walker step sequence. `U ⊗ U`
/// commutes with the exchange, so this is the exact evolution of the pair.
pub fn pair_evolve(p: &PairState, coins: &CoinBank, shift: &ShiftMap, steps: usize) -> Result<PairState> {
    let psi1 = evolve(&p.psi1, coins, shift, steps)?;
    let psi2 = evolve(&p.psi2, coins, shift, steps)?;
    let overlap = psi1.inner(&psi2);
    Ok(PairState {
        psi1,
        psi2,
        alpha: p.alpha,
        beta: p.beta,
        overlap,
    })
}

/// Per-node quantities of the factored measurement.
struct NodeMasses {
    p1: Vec<f64>,
    p2: Vec<f64>,
    // c_i = Σ_s ψ₁[i,s] conj(ψ₂[i,s])
    cross: Vec<Complex64>,
}

fn node_masses(p: &PairState) -> NodeMasses {
    let d = p.coin_dim();
    let n = p.n();
    let a = p.psi1.amplitudes();
    let b = p.psi2.amplitudes();
    let mut out = NodeMasses {
        p1: vec![0.0; n],
        p2: vec![0.0; n],
        cross: vec![ZERO; n],
    };
    for i in 0..n {
        for s in 0..d {
            let (x, y) = (a[i * d + s], b[i * d + s]);
            out.p1[i] += x.norm_sqr();
            out.p2[i] += y.norm_sqr();
            out.cross[i] += x * y.conj();
        }
    }
    out
}

/// Probability of finding the walkers on each unordered node pair, with the
/// coin marginalized. `Pr[i][j] = Pr[j][i]` each carry the full mass of the
/// pair `{i, j}`, so `Σ_{i ≤ j} Pr[i][j] = 1` for a normalized state.
///
/// Computed from the factors in `O(n·d + n²)` without materializing.
pub fn pair_position_probability(p: &PairState) -> RMatrix {
    let n = p.n();
    let m = node_masses(p);
    let (a, b) = (p.alpha, p.beta);
    let ab = a * b.conj();
    // Mass on the ordered position pair (i, j).
    let ordered = |i: usize, j: usize| -> f64 {
        a.norm_sqr() * m.p1[i] * m.p2[j]
            + b.norm_sqr() * m.p2[i] * m.p1[j]
            + 2.0 * (ab * m.cross[i] * m.cross[j].conj()).re
    };
    let mut pr = RMatrix::zeros(n, n);
    for i in 0..n {
        pr[(i, i)] = ordered(i, i);
        for j in (i + 1)..n {
            let mass = ordered(i, j) + ordered(j, i);
            pr[(i, j)] = mass;
            pr[(j, i)] = mass;
        }
    }
    pr
}

/// Expected fraction of the two bosons on each node:
/// `p[v] = (Σ_{u≠v} Pr[v][u] + 2 Pr[v][v]) / 2`.
pub fn marginal_single(pr: &RMatrix) -> Vec<f64> {
    let n = pr.rows();
    (0..n)
        .map(|v| {
            let off: f64 = (0..n).filter(|&u| u != v).map(|u| pr[(v, u)]).sum();
            (off + 2.0 * pr[(v, v)]) / 2.0
        })
        .collect()
}

/// Row `v`: both walkers start on `v` in its initial coin state, the
/// symmetrized pair is evolved, and the single-boson marginal is measured.
pub fn bosonic_walk_matrix(g: &Graph, coins: &CoinBank, steps: usize) -> Result<ProbabilityMatrix> {
    let d = coins.coin_dim();
    let shift = build_shift(g, d)?;
    let rows: Vec<Vec<f64>> = (0..g.n())
        .into_par_iter()
        .map(|v| {
            let psi = init_state(g, v, d)?;
            let pair = pair_evolve(&symmetrize(&psi, &psi)?, coins, &shift, steps)?;
            Ok(marginal_single(&pair_position_probability(&pair)))
        })
        .collect::<Result<_>>()?;
    ProbabilityMatrix::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;
    use crate::walk::walk_matrix;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identical_factors_give_plain_product() {
        let psi = WalkerState::from_amplitudes(2, 2, vec![c(0.5, 0.0), c(0.0, 0.5), c(0.5, 0.0), c(-0.5, 0.0)])
            .unwrap();
        let p = symmetrize(&psi, &psi).unwrap();
        let dense = p.materialize().unwrap();
        let a = psi.amplitudes();
        for x in 0..4 {
            for y in 0..4 {
                assert!((dense[x * 4 + y] - a[x] * a[y]).norm() < 1e-15);
            }
        }
        assert!((p.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_factors() {
        let a = WalkerState::basis(3, 1, 0, 0).unwrap();
        let b = WalkerState::basis(3, 1, 2, 0).unwrap();
        let p = symmetrize(&a, &b).unwrap();
        let (alpha, beta) = p.coefficients();
        assert!((alpha.re - FRAC_1_SQRT_2).abs() < 1e-15 && alpha == beta);
        let pr = pair_position_probability(&p);
        assert!((pr[(0, 2)] - 1.0).abs() < 1e-15);
        let marg = marginal_single(&pr);
        assert!((marg[0] - 0.5).abs() < 1e-15 && (marg[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exchange_detects_asymmetry() {
        let a = WalkerState::basis(2, 2, 0, 0).unwrap();
        let b = WalkerState::basis(2, 2, 1, 1).unwrap();
        assert!(exchange_check(&symmetrize(&a, &b).unwrap()));
        assert!(!exchange_check(&PairState::product(&a, &b).unwrap()));
        // A product of identical factors is already symmetric.
        assert!(exchange_check(&PairState::product(&a, &a).unwrap()));
    }

    #[test]
    fn double_occupancy_measurement() {
        let psi = WalkerState::basis(5, 2, 3, 1).unwrap();
        let pr = pair_position_probability(&symmetrize(&psi, &psi).unwrap());
        assert!((pr[(3, 3)] - 1.0).abs() < 1e-15);
        assert_eq!(marginal_single(&pr)[3], 1.0);
    }

    #[test]
    fn symmetrize_rejects_mismatch() {
        let a = WalkerState::basis(2, 2, 0, 0).unwrap();
        let b = WalkerState::basis(2, 1, 0, 0).unwrap();
        assert!(symmetrize(&a, &b).is_err());
        let un = WalkerState::from_amplitudes(1, 1, vec![c(2.0, 0.0)]).unwrap();
        assert!(symmetrize(&un, &un).is_err());
    }

    #[test]
    fn materialize_limit() {
        let big = WalkerState::basis(33, 2, 0, 0).unwrap();
        let p = symmetrize(&big, &big).unwrap();
        assert!(matches!(p.materialize(), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn bosonic_matrix_small_cases() {
        let g = Graph::build(&[(0, 1)], 2, RMatrix::identity(2)).unwrap();
        let coins = CoinBank::uniform(&CMatrix::identity(1), 2, 1).unwrap();
        let p = bosonic_walk_matrix(&g, &coins, 1).unwrap();
        assert_eq!(p.matrix().to_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let p0 = bosonic_walk_matrix(&g, &coins, 0).unwrap();
        assert_eq!(p0.matrix().to_rows(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        // Both bosons share one start state, so the marginal equals the single walker's.
        assert_eq!(walk_matrix(&g, &coins, 1).unwrap(), p);
    }
}
