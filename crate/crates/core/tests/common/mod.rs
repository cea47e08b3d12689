//! Independent oracles shared by the integration and acceptance tests.
//! Nothing here calls the engine code it is used to check.
#![allow(dead_code)]

use num_complex::Complex64;
use qwalk::graph::Graph;
use qwalk::linalg::{CMatrix, RMatrix};
use qwalk::walk::{CoinBank, WalkerState};
use rand::Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; plenty for generating test matrices.
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// Haar-ish random unitary: Gram-Schmidt on complex Gaussian columns.
pub fn random_unitary<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<Complex64> = (0..d).map(|_| c(gaussian(rng), gaussian(rng))).collect();
        for u in &cols {
            let p: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= p * y;
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-6 {
            cols.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    CMatrix::from_fn(d, d, |i, j| cols[j][i])
}

pub fn random_coin_bank<R: Rng>(n: usize, d: usize, steps: usize, rng: &mut R) -> CoinBank {
    let coins = (0..steps.max(1))
        .map(|_| (0..n).map(|_| random_unitary(d, rng)).collect())
        .collect();
    CoinBank::new(coins).unwrap()
}

pub fn random_walker<R: Rng>(n: usize, d: usize, rng: &mut R) -> WalkerState {
    let mut amp: Vec<Complex64> = (0..n * d).map(|_| c(gaussian(rng), gaussian(rng))).collect();
    let norm = amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    amp.iter_mut().for_each(|z| *z /= norm);
    WalkerState::from_amplitudes(n, d, amp).unwrap()
}

/// Permutation matrix of the edge-swap shift, derived directly from the slot
/// lists: slot `s` of `v` holds edge `e`; amplitude moves to the slot of `e`
/// at the other endpoint. Padding slots stay put.
pub fn dense_shift(g: &Graph, d: usize) -> CMatrix {
    let m = g.n() * d;
    let mut s = CMatrix::zeros(m, m);
    for v in 0..g.n() {
        for k in 0..d {
            let target = match g.slots(v).get(k) {
                None => v * d + k,
                Some(slot) => {
                    let u = slot.neighbor;
                    let back = g.slots(u).iter().position(|x| x.edge == slot.edge).unwrap();
                    u * d + back
                }
            };
            s[(target, v * d + k)] = c(1.0, 0.0);
        }
    }
    s
}

/// Full `(n·d) × (n·d)` step operator `S (I ⊗ C_t)`.
pub fn dense_step(g: &Graph, coins: &CoinBank, t: usize) -> CMatrix {
    let d = coins.coin_dim();
    let m = g.n() * d;
    let mut block = CMatrix::zeros(m, m);
    for v in 0..g.n() {
        let cv = coins.coin(t, v);
        for i in 0..d {
            for j in 0..d {
                block[(v * d + i, v * d + j)] = cv[(i, j)];
            }
        }
    }
    dense_shift(g, d).matmul(&block).unwrap()
}

/// `U_{T−1} ⋯ U_0` as one dense matrix.
pub fn dense_walk_operator(g: &Graph, coins: &CoinBank, steps: usize) -> CMatrix {
    let m = g.n() * coins.coin_dim();
    let mut u = CMatrix::identity(m);
    for t in 0..steps {
        u = dense_step(g, coins, t).matmul(&u).unwrap();
    }
    u
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca, rb, cb) = (a.rows(), a.cols(), b.rows(), b.cols());
    CMatrix::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

/// Unordered pair distribution of a dense two-walker vector indexed
/// `(node₁·d + slot₁)·(n·d) + node₂·d + slot₂`: the mass of `{i, j}` is the
/// total weight of all ordered basis states whose positions are `{i, j}`.
pub fn dense_pair_probability(amp: &[Complex64], n: usize, d: usize) -> RMatrix {
    let m = n * d;
    let mut pr = RMatrix::zeros(n, n);
    for x in 0..m {
        for y in 0..m {
            let (i, j) = (x / d, y / d);
            let w = amp[x * m + y].norm_sqr();
            pr[(i.min(j), i.max(j))] += w;
        }
    }
    for i in 0..n {
        for j in 0..i {
            pr[(i, j)] = pr[(j, i)];
        }
    }
    pr
}

/// `exp(−i A t)` by scaling and squaring of a Taylor series.
pub fn expm_minus_i(a: &RMatrix, t: f64) -> CMatrix {
    let n = a.rows();
    let norm = (0..n).map(|i| a.row(i).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max) * t.abs();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let h = t / 2f64.powi(squarings as i32);
    let x = CMatrix::from_fn(n, n, |i, j| c(0.0, -h * a[(i, j)]));
    let mut term = CMatrix::identity(n);
    let mut sum = CMatrix::identity(n);
    for k in 1..30 {
        term = term.matmul(&x).unwrap().scale(c(1.0 / k as f64, 0.0));
        sum = sum.add(&term).unwrap();
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum).unwrap();
    }
    sum
}

/// Row-normalized adjacency `D⁻¹A` built from the edge list, with isolated
/// nodes holding their mass, raised to the `steps`-th power.
pub fn row_normalized_power(g: &Graph, steps: usize) -> RMatrix {
    let n = g.n();
    let mut a = RMatrix::zeros(n, n);
    for (u, v) in g.edge_list() {
        a[(u, v)] = 1.0;
        a[(v, u)] = 1.0;
    }
    for i in 0..n {
        let deg: f64 = a.row(i).iter().sum();
        if deg == 0.0 {
            a[(i, i)] = 1.0;
        } else {
            a.row_mut(i).iter_mut().for_each(|x| *x /= deg);
        }
    }
    let mut p = RMatrix::identity(n);
    for _ in 0..steps {
        p = p.matmul(&a).unwrap();
    }
    p
}

pub fn binomial_pmf(n: u64, k: u64) -> f64 {
    // ln C(n, k) − n ln 2, exact enough in f64 for n ≤ 1000
    let mut lc = 0.0;
    for i in 0..k {
        lc += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    (lc - n as f64 * std::f64::consts::LN_2).exp()
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Mean and standard deviation of node index under a distribution.
pub fn moments(p: &[f64]) -> (f64, f64) {
    let mean: f64 = p.iter().enumerate().map(|(i, w)| i as f64 * w).sum();
    let var: f64 = p.iter().enumerate().map(|(i, w)| (i as f64 - mean).powi(2) * w).sum();
    (mean, var.sqrt())
}

pub fn max_abs(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
