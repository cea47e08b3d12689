//! Classical random walks and single-particle discrete-time coined quantum
//! walks. One step is `U = S (I ⊗ C)`: every node applies its coin to its
//! slot amplitudes, then the edge-swap shift moves amplitude along edges.

mod coin;
mod shift;

use num_complex::Complex64;
use rayon::prelude::*;

pub use coin::{
    coin_registry, CoinBank, Fourier, Grover, Hadamard, Identity, ReferenceCoin, SymmetricHadamard,
    DEFAULT_LATTICE_COIN, UNITARITY_TOL,
};
pub use shift::{build_shift, ShiftMap};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{RMatrix, ZERO};

/// Normalization tolerance for walker states and distributions.
pub const NORM_TOL: f64 = 1e-9;

/// Amplitudes of one coined walker over `(node, slot)` pairs, row-major `n × d`.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkerState {
    n: usize,
    d: usize,
    amp: Vec<Complex64>,
}

impl WalkerState {
    pub fn from_amplitudes(n: usize, d: usize, amp: Vec<Complex64>) -> Result<WalkerState> {
        if amp.len() != n * d {
            return Err(Error::Dimension(format!(
                "{} amplitudes for a {n}x{d} walker",
                amp.len()
            )));
        }
        Ok(WalkerState { n, d, amp })
    }

    /// Walker fully localized on `(node, slot)`.
    pub fn basis(n: usize, d: usize, node: usize, slot: usize) -> Result<WalkerState> {
        if node >= n || slot >= d {
            return Err(Error::InvalidArgument(format!(
                "basis state ({node}, {slot}) outside {n}x{d}"
            )));
        }
        let mut amp = vec![ZERO; n * d];
        amp[node * d + slot] = Complex64::new(1.0, 0.0);
        Ok(WalkerState { n, d, amp })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coin_dim(&self) -> usize {
        self.d
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amp
    }

    pub fn amp(&self, node: usize, slot: usize) -> Complex64 {
        self.amp[node * self.d + slot]
    }

    pub fn node_amplitudes(&self, node: usize) -> &[Complex64] {
        &self.amp[node * self.d..(node + 1) * self.d]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &WalkerState) -> Complex64 {
        self.amp
            .iter()
            .zip(&other.amp)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn same_shape(&self, other: &WalkerState) -> bool {
        self.n == other.n && self.d == other.d
    }
}

/// Walker on `start` in the uniform positive superposition of its real slots;
/// an isolated node puts its amplitude in slot 0.
pub fn init_state(g: &Graph, start: usize, d: usize) -> Result<WalkerState> {
    let n = g.n();
    if start >= n {
        return Err(Error::InvalidArgument(format!("start node {start} outside 0..{n}")));
    }
    if d == 0 || d < g.max_degree() {
        return Err(Error::Dimension(format!(
            "coin dimension {d} cannot host maximum degree {}",
            g.max_degree()
        )));
    }
    let deg = g.degree(start);
    let mut amp = vec![ZERO; n * d];
    if deg == 0 {
        amp[start * d] = Complex64::new(1.0, 0.0);
    } else {
        let a = Complex64::new(1.0 / (deg as f64).sqrt(), 0.0);
        for s in 0..deg {
            amp[start * d + s] = a;
        }
    }
    Ok(WalkerState { n, d, amp })
}

fn check_compatible(state: &WalkerState, coins: &CoinBank, shift: &ShiftMap, steps: usize) -> Result<()> {
    if shift.n() != state.n || shift.coin_dim() != state.d {
        return Err(Error::Dimension(format!(
            "walker is {}x{}, shift is {}x{}",
            state.n,
            state.d,
            shift.n(),
            shift.coin_dim()
        )));
    }
    if steps > 0 && (coins.nodes() != state.n || coins.coin_dim() != state.d) {
        return Err(Error::Dimension(format!(
            "walker is {}x{}, coins are {}x{}",
            state.n,
            state.d,
            coins.nodes(),
            coins.coin_dim()
        )));
    }
    if coins.steps() < steps {
        return Err(Error::Dimension(format!(
            "{steps} steps requested, coin bank holds {}",
            coins.steps()
        )));
    }
    Ok(())
}

/// One application of `S (I ⊗ C_t)`; `scratch` must have the state's length.
fn step_in_place(amp: &mut [Complex64], scratch: &mut [Complex64], coins: &CoinBank, t: usize, shift: &ShiftMap) {
    let d = shift.coin_dim();
    let mut local = [ZERO; 16];
    for v in 0..shift.n() {
        let block = &amp[v * d..(v + 1) * d];
        let coin = coins.coin(t, v);
        if d <= local.len() {
            coin.mul_vec_into(block, &mut local[..d]);
            scratch[v * d..(v + 1) * d].copy_from_slice(&local[..d]);
        } else {
            let out = coin.mul_vec(block);
            scratch[v * d..(v + 1) * d].copy_from_slice(&out);
        }
    }
    shift.apply(scratch, amp);
}

pub fn evolve(state: &WalkerState, coins: &CoinBank, shift: &ShiftMap, steps: usize) -> Result<WalkerState> {
    check_compatible(state, coins, shift, steps)?;
    let mut amp = state.amp.clone();
    let mut scratch = vec![ZERO; amp.len()];
    for t in 0..steps {
        step_in_place(&mut amp, &mut scratch, coins, t, shift);
    }
    Ok(WalkerState {
        n: state.n,
        d: state.d,
        amp,
    })
}

/// Like [`evolve`], but returns every intermediate state `ψ_0, …, ψ_T`.
pub fn evolve_trajectory(
    state: &WalkerState,
    coins: &CoinBank,
    shift: &ShiftMap,
    steps: usize,
) -> Result<Vec<WalkerState>> {
    check_compatible(state, coins, shift, steps)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(state.clone());
    let mut amp = state.amp.clone();
    let mut scratch = vec![ZERO; amp.len()];
    for t in 0..steps {
        step_in_place(&mut amp, &mut scratch, coins, t, shift);
        out.push(WalkerState {
            n: state.n,
            d: state.d,
            amp: amp.clone(),
        });
    }
    Ok(out)
}

/// Node marginal `p[v] = Σ_s |amp[v][s]|²`.
pub fn measure_positions(state: &WalkerState) -> Vec<f64> {
    state
        .amp
        .chunks(state.d.max(1))
        .map(|block| block.iter().map(|z| z.norm_sqr()).sum())
        .collect()
}

/// Row-stochastic `n × n` matrix; row `v` is the node distribution of a walk started at `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityMatrix(RMatrix);

impl ProbabilityMatrix {
    pub fn new(m: RMatrix) -> Result<ProbabilityMatrix> {
        if m.rows() != m.cols() {
            return Err(Error::Dimension("probability matrix must be square".into()));
        }
        for i in 0..m.rows() {
            let row = m.row(i);
            if row.iter().any(|&p| !(p >= -NORM_TOL)) {
                return Err(Error::InvalidArgument(format!("row {i} has a negative entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidArgument(format!("row {i} sums to {s}")));
            }
        }
        Ok(ProbabilityMatrix(m))
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<ProbabilityMatrix> {
        ProbabilityMatrix::new(RMatrix::from_rows(&rows)?)
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn row(&self, v: usize) -> &[f64] {
        self.0.row(v)
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> RMatrix {
        self.0
    }

    /// `X̂ = P X`.
    pub fn diffuse(&self, x: &RMatrix) -> Result<RMatrix> {
        self.0.matmul(x)
    }
}

/// Coined quantum walk matrix: row `v` measures the walker started at `v` after `steps`.
pub fn walk_matrix(g: &Graph, coins: &CoinBank, steps: usize) -> Result<ProbabilityMatrix> {
    let d = coins.coin_dim();
    let shift = build_shift(g, d)?;
    let rows: Vec<Vec<f64>> = (0..g.n())
        .into_par_iter()
        .map(|v| {
            let psi = init_state(g, v, d)?;
            Ok(measure_positions(&evolve(&psi, coins, &shift, steps)?))
        })
        .collect::<Result<_>>()?;
    ProbabilityMatrix::from_rows(rows)
}

/// One classical step from a node distribution: each walker picks an incident
/// edge uniformly; isolated nodes hold their mass.
pub fn classical_step(g: &Graph, dist: &[f64]) -> Vec<f64> {
    let mut next = vec![0.0; g.n()];
    for (u, &p) in dist.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let slots = g.slots(u);
        if slots.is_empty() {
            next[u] += p;
            continue;
        }
        let share = p / slots.len() as f64;
        for s in slots {
            next[s.neighbor] += share;
        }
    }
    next
}

/// `W^T` for the uniform-edge transition matrix `W`.
pub fn classical_walk_matrix(g: &Graph, steps: usize) -> Result<ProbabilityMatrix> {
    let n = g.n();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|v| {
            let mut dist = vec![0.0; n];
            dist[v] = 1.0;
            for _ in 0..steps {
                dist = classical_step(g, &dist);
            }
            dist
        })
        .collect();
    ProbabilityMatrix::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{line_center, line_graph};
    use crate::linalg::CMatrix;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn single_edge() -> Graph {
        Graph::build(&[(0, 1)], 2, RMatrix::identity(2)).unwrap()
    }

    #[test]
    fn init_state_examples() {
        let g = line_graph(3).unwrap();
        let s = init_state(&g, 0, 2).unwrap();
        assert_eq!(s.amp(0, 0), Complex64::new(1.0, 0.0));
        let s = init_state(&g, 1, 2).unwrap();
        assert!((s.amp(1, 0).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s.amp(1, 1).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
        assert!(init_state(&g, 3, 2).is_err());
        assert!(init_state(&g, 0, 1).is_err());

        let iso = Graph::build(&[], 1, RMatrix::identity(1)).unwrap();
        assert_eq!(init_state(&iso, 0, 1).unwrap().amp(0, 0).re, 1.0);
    }

    #[test]
    fn zero_steps_is_identity() {
        let g = line_graph(5).unwrap();
        let coins = CoinBank::uniform(&coin_registry().get("hadamard").unwrap().matrix(2).unwrap(), 5, 3).unwrap();
        let shift = build_shift(&g, 2).unwrap();
        let s = init_state(&g, 2, 2).unwrap();
        assert_eq!(evolve(&s, &coins, &shift, 0).unwrap(), s);
        assert!(evolve(&s, &coins, &shift, 4).is_err());
    }

    #[test]
    fn one_symmetric_step_from_center_splits_evenly() {
        let g = line_graph(61).unwrap();
        let c = line_center(61);
        let coin = coin_registry().get("symmetric").unwrap().matrix(2).unwrap();
        let coins = CoinBank::uniform(&coin, 61, 1).unwrap();
        let shift = build_shift(&g, 2).unwrap();
        let p = measure_positions(&evolve(&init_state(&g, c, 2).unwrap(), &coins, &shift, 1).unwrap());
        assert!((p[c - 1] - 0.5).abs() < 1e-15);
        assert!((p[c + 1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn measure_examples() {
        let s = WalkerState::basis(5, 2, 3, 0).unwrap();
        assert_eq!(measure_positions(&s), vec![0.0, 0.0, 0.0, 1.0, 0.0]);
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let s = WalkerState::from_amplitudes(2, 1, vec![h, h]).unwrap();
        let p = measure_positions(&s);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn walk_matrix_small_cases() {
        let g = line_graph(7).unwrap();
        let coins = CoinBank::uniform(&CMatrix::identity(2), 7, 0).unwrap();
        let p = walk_matrix(&g, &coins, 0).unwrap();
        assert!(p.matrix().max_abs_diff(&RMatrix::identity(7)) < 1e-15);

        let g = single_edge();
        for coin in [CMatrix::identity(1), CMatrix::identity(1).scale(Complex64::new(0.0, 1.0))] {
            let coins = CoinBank::uniform(&coin, 2, 1).unwrap();
            let p = walk_matrix(&g, &coins, 1).unwrap();
            assert_eq!(p.matrix().to_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        }
    }

    #[test]
    fn classical_examples() {
        let g = single_edge();
        let p = classical_walk_matrix(&g, 1).unwrap();
        assert_eq!(p.matrix().to_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let iso = Graph::build(&[(0, 1)], 3, RMatrix::identity(3)).unwrap();
        let p = classical_walk_matrix(&iso, 5).unwrap();
        assert_eq!(p.row(2), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn probability_matrix_validation() {
        assert!(ProbabilityMatrix::from_rows(vec![vec![0.5, 0.4], vec![0.0, 1.0]]).is_err());
        assert!(ProbabilityMatrix::from_rows(vec![vec![1.5, -0.5], vec![0.0, 1.0]]).is_err());
        assert!(ProbabilityMatrix::from_rows(vec![vec![0.5, 0.5], vec![0.0, 1.0]]).is_ok());
    }
}
