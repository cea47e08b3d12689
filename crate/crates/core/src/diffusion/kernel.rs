use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bosonic::{bosonic_walk_matrix, symmetrize};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{CMatrix, RMatrix, ZERO};
use crate::registry::{Named, Registry};
use crate::walk::{
    build_shift, classical_walk_matrix, evolve_trajectory, init_state, walk_matrix, CoinBank, ProbabilityMatrix,
    ShiftMap, WalkerState,
};

/// Gradient of the loss with respect to every coin, indexed `[t][v]`.
pub type CoinGradient = Vec<Vec<CMatrix>>;

/// A way of turning a graph (and, for quantum modes, a coin schedule) into
/// the probability matrix `P` used for diffusion.
pub trait WalkKernel: Named + Send + Sync {
    fn description(&self) -> &'static str;

    /// Whether `P` depends on coins. Kernels that return false have no coin parameters.
    fn uses_coins(&self) -> bool;

    fn probability(&self, g: &Graph, coins: Option<&CoinBank>, steps: usize) -> Result<ProbabilityMatrix>;

    /// Pull `dL/dP` back onto the coins, using the `∂L/∂Re + i ∂L/∂Im` convention.
    fn coin_gradient(&self, g: &Graph, coins: &CoinBank, steps: usize, dp: &RMatrix) -> Result<CoinGradient>;
}

fn need_coins<'a>(coins: Option<&'a CoinBank>, mode: &str) -> Result<&'a CoinBank> {
    coins.ok_or_else(|| Error::InvalidArgument(format!("{mode} walk needs a coin schedule")))
}

pub struct Classical;
pub struct Quantum1;
pub struct Boson2;

impl Named for Classical {
    fn name(&self) -> &'static str {
        "classical"
    }
}

impl WalkKernel for Classical {
    fn description(&self) -> &'static str {
        "uniform-edge random walk, P = W^T"
    }

    fn uses_coins(&self) -> bool {
        false
    }

    fn probability(&self, g: &Graph, _coins: Option<&CoinBank>, steps: usize) -> Result<ProbabilityMatrix> {
        classical_walk_matrix(g, steps)
    }

    fn coin_gradient(&self, _g: &Graph, _coins: &CoinBank, _steps: usize, _dp: &RMatrix) -> Result<CoinGradient> {
        Ok(Vec::new())
    }
}

impl Named for Quantum1 {
    fn name(&self) -> &'static str {
        "quantum-1"
    }
}

impl WalkKernel for Quantum1 {
    fn description(&self) -> &'static str {
        "single coined walker per start node"
    }

    fn uses_coins(&self) -> bool {
        true
    }

    fn probability(&self, g: &Graph, coins: Option<&CoinBank>, steps: usize) -> Result<ProbabilityMatrix> {
        walk_matrix(g, need_coins(coins, self.name())?, steps)
    }

    fn coin_gradient(&self, g: &Graph, coins: &CoinBank, steps: usize, dp: &RMatrix) -> Result<CoinGradient> {
        per_row_gradient(g, coins, steps, |u, d, shift, acc| {
            let traj = evolve_trajectory(&init_state(g, u, d)?, coins, shift, steps)?;
            let seed = position_seed(&traj[steps], dp.row(u), |psi, w| psi * (2.0 * w));
            backprop_walker(&traj, seed, coins, shift, acc);
            Ok(())
        })
    }
}

impl Named for Boson2 {
    fn name(&self) -> &'static str {
        "boson-2"
    }
}

impl WalkKernel for Boson2 {
    fn description(&self) -> &'static str {
        "two symmetrized coined walkers per start node, single-boson marginal"
    }

    fn uses_coins(&self) -> bool {
        true
    }

    fn probability(&self, g: &Graph, coins: Option<&CoinBank>, steps: usize) -> Result<ProbabilityMatrix> {
        bosonic_walk_matrix(g, need_coins(coins, self.name())?, steps)
    }

    // With `N² = 1/(2(1+|o|²))` and `o = ⟨a|b⟩` (constant under the walk),
    // the marginal is `p_v = N² (|a_v|² + |b_v|² + 2 Re(⟨b_v|a_v⟩ o))`.
    fn coin_gradient(&self, g: &Graph, coins: &CoinBank, steps: usize, dp: &RMatrix) -> Result<CoinGradient> {
        per_row_gradient(g, coins, steps, |u, d, shift, acc| {
            let psi = init_state(g, u, d)?;
            let pair = symmetrize(&psi, &psi)?;
            let ta = evolve_trajectory(pair.psi1(), coins, shift, steps)?;
            let tb = evolve_trajectory(pair.psi2(), coins, shift, steps)?;
            let (a, b) = (ta[steps].amplitudes(), tb[steps].amplitudes());
            let o = ta[steps].inner(&tb[steps]);
            let n2 = 1.0 / (2.0 * (1.0 + o.norm_sqr()));
            let row = dp.row(u);
            let mut ga = vec![ZERO; a.len()];
            let mut gb = vec![ZERO; b.len()];
            for k in 0..a.len() {
                let w = 2.0 * n2 * row[k / d];
                ga[k] = (a[k] + o.conj() * b[k]) * w;
                gb[k] = (b[k] + o * a[k]) * w;
            }
            backprop_walker(&ta, ga, coins, shift, acc);
            backprop_walker(&tb, gb, coins, shift, acc);
            Ok(())
        })
    }
}

/// Runs `row_fn` for every start node in parallel, each writing into its own
/// accumulator, then sums the accumulators in node order so the result does
/// not depend on scheduling.
fn per_row_gradient<F>(g: &Graph, coins: &CoinBank, steps: usize, row_fn: F) -> Result<CoinGradient>
where
    F: Fn(usize, usize, &ShiftMap, &mut CoinGradient) -> Result<()> + Sync,
{
    let d = coins.coin_dim();
    let n = g.n();
    if coins.nodes() != n || coins.steps() < steps {
        return Err(Error::Dimension(format!(
            "coin bank covers {} nodes and {} steps, graph has {n} nodes and needs {steps}",
            coins.nodes(),
            coins.steps()
        )));
    }
    let shift = build_shift(g, d)?;
    let zero = || vec![vec![CMatrix::zeros(d, d); n]; steps];
    let rows: Vec<CoinGradient> = (0..n)
        .into_par_iter()
        .map(|u| {
            let mut acc = zero();
            row_fn(u, d, &shift, &mut acc)?;
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = zero();
    for row in rows {
        for (tt, rt) in total.iter_mut().zip(row) {
            for (tv, rv) in tt.iter_mut().zip(rt) {
                *tv = tv.add(&rv)?;
            }
        }
    }
    Ok(total)
}

fn position_seed(psi: &WalkerState, dp_row: &[f64], f: impl Fn(Complex64, f64) -> Complex64) -> Vec<Complex64> {
    let d = psi.coin_dim();
    psi.amplitudes()
        .iter()
        .enumerate()
        .map(|(k, &z)| f(z, dp_row[k / d]))
        .collect()
}

/// Reverse pass through `ψ_{t+1} = S (C_t ψ_t)` for one walker trajectory,
/// adding `g_mid · ψ_t†` into `acc[t][v]`.
fn backprop_walker(
    traj: &[WalkerState],
    seed: Vec<Complex64>,
    coins: &CoinBank,
    shift: &ShiftMap,
    acc: &mut CoinGradient,
) {
    let d = shift.coin_dim();
    let mut g = seed;
    let mut mid = vec![ZERO; g.len()];
    for t in (0..traj.len() - 1).rev() {
        // S is a real involutive permutation, so Sᵀ = S.
        shift.apply(&g, &mut mid);
        let psi = traj[t].amplitudes();
        for v in 0..shift.n() {
            let m = &mid[v * d..(v + 1) * d];
            let x = &psi[v * d..(v + 1) * d];
            let gc = &mut acc[t][v];
            for i in 0..d {
                if m[i] == ZERO {
                    continue;
                }
                for j in 0..d {
                    gc[(i, j)] += m[i] * x[j].conj();
                }
            }
            let c = coins.coin(t, v);
            for j in 0..d {
                g[v * d + j] = (0..d).map(|i| c[(i, j)].conj() * m[i]).sum();
            }
        }
    }
}

pub fn kernel_registry() -> &'static Registry<dyn WalkKernel> {
    static REG: OnceLock<Registry<dyn WalkKernel>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut r: Registry<dyn WalkKernel> = Registry::new("walk mode");
        r.register(Box::new(Classical))
            .register(Box::new(Quantum1))
            .register(Box::new(Boson2));
        r
    })
}
