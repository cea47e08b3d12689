use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ONE, ZERO};
use crate::registry::{Named, Registry};

/// Unitarity tolerance enforced on every coin entering a bank.
pub const UNITARITY_TOL: f64 = 1e-9;

/// Per-step, per-node `d × d` unitary coins.
#[derive(Clone, Debug)]
pub struct CoinBank {
    d: usize,
    n: usize,
    coins: Vec<Vec<CMatrix>>,
}

impl CoinBank {
    /// `coins[t][v]` is applied to node `v` at step `t`.
    pub fn new(coins: Vec<Vec<CMatrix>>) -> Result<CoinBank> {
        let n = coins.first().map_or(0, Vec::len);
        let d = coins
            .first()
            .and_then(|row| row.first())
            .map_or(0, CMatrix::rows);
        for (t, row) in coins.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "step {t} has {} coins, expected {n}",
                    row.len()
                )));
            }
            for (v, c) in row.iter().enumerate() {
                if c.rows() != d || c.cols() != d {
                    return Err(Error::Dimension(format!(
                        "coin ({t}, {v}) is {}x{}, expected {d}x{d}",
                        c.rows(),
                        c.cols()
                    )));
                }
                if !c.is_finite() {
                    return Err(Error::NonFinite(format!("coin ({t}, {v})")));
                }
                let defect = c.unitarity_defect();
                if defect > UNITARITY_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "coin ({t}, {v}) is not unitary (defect {defect:.3e})"
                    )));
                }
            }
        }
        Ok(CoinBank { d, n, coins })
    }

    /// The same coin at every node and step.
    pub fn uniform(coin: &CMatrix, n: usize, steps: usize) -> Result<CoinBank> {
        let mut bank = CoinBank::new(vec![vec![coin.clone(); n]; steps.max(1)])?;
        if steps == 0 {
            bank.coins.clear();
            bank.d = coin.rows();
        }
        Ok(bank)
    }

    pub fn coin_dim(&self) -> usize {
        self.d
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn steps(&self) -> usize {
        self.coins.len()
    }

    pub fn coin(&self, t: usize, v: usize) -> &CMatrix {
        &self.coins[t][v]
    }
}

/// A fixed coin family used for lattice demonstrations and tests.
pub trait ReferenceCoin: Named + Send + Sync {
    fn description(&self) -> &'static str;

    fn matrix(&self, d: usize) -> Result<CMatrix>;
}

fn need_dim(name: &str, want: usize, d: usize) -> Result<()> {
    if d != want {
        return Err(Error::InvalidArgument(format!(
            "the {name} coin is {want}x{want}, requested dimension {d}"
        )));
    }
    Ok(())
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Rows `(1, 1)/√2` and `(1, −1)/√2`.
pub struct Hadamard;

/// `[[1, i], [i, 1]]/√2`: every entry has modulus `1/√2` and the coin commutes
/// with swapping the two slots, so a walker started in the uniform coin state
/// spreads symmetrically.
pub struct SymmetricHadamard;

/// `2/d · J − I`.
pub struct Grover;

/// Discrete Fourier transform on the slots.
pub struct Fourier;

pub struct Identity;

impl Named for Hadamard {
    fn name(&self) -> &'static str {
        "hadamard"
    }
}

impl ReferenceCoin for Hadamard {
    fn description(&self) -> &'static str {
        "real 2x2 Hadamard"
    }

    fn matrix(&self, d: usize) -> Result<CMatrix> {
        need_dim(self.name(), 2, d)?;
        let h = FRAC_1_SQRT_2;
        CMatrix::from_rows(&[vec![c(h, 0.0), c(h, 0.0)], vec![c(h, 0.0), c(-h, 0.0)]])
    }
}

impl Named for SymmetricHadamard {
    fn name(&self) -> &'static str {
        "symmetric"
    }
}

impl ReferenceCoin for SymmetricHadamard {
    fn description(&self) -> &'static str {
        "slot-swap symmetric 2x2 balanced coin"
    }

    fn matrix(&self, d: usize) -> Result<CMatrix> {
        need_dim(self.name(), 2, d)?;
        let h = FRAC_1_SQRT_2;
        CMatrix::from_rows(&[vec![c(h, 0.0), c(0.0, h)], vec![c(0.0, h), c(h, 0.0)]])
    }
}

impl Named for Grover {
    fn name(&self) -> &'static str {
        "grover"
    }
}

impl ReferenceCoin for Grover {
    fn description(&self) -> &'static str {
        "Grover diffusion coin, any dimension"
    }

    fn matrix(&self, d: usize) -> Result<CMatrix> {
        if d == 0 {
            return Err(Error::InvalidArgument("coin dimension must be positive".into()));
        }
        let w = 2.0 / d as f64;
        Ok(CMatrix::from_fn(d, d, |i, j| {
            c(if i == j { w - 1.0 } else { w }, 0.0)
        }))
    }
}

impl Named for Fourier {
    fn name(&self) -> &'static str {
        "fourier"
    }
}

impl ReferenceCoin for Fourier {
    fn description(&self) -> &'static str {
        "discrete Fourier transform coin, any dimension"
    }

    fn matrix(&self, d: usize) -> Result<CMatrix> {
        if d == 0 {
            return Err(Error::InvalidArgument("coin dimension must be positive".into()));
        }
        let norm = 1.0 / (d as f64).sqrt();
        Ok(CMatrix::from_fn(d, d, |i, j| {
            Complex64::from_polar(norm, 2.0 * PI * (i * j) as f64 / d as f64)
        }))
    }
}

impl Named for Identity {
    fn name(&self) -> &'static str {
        "identity"
    }
}

impl ReferenceCoin for Identity {
    fn description(&self) -> &'static str {
        "identity coin (pure shift walk)"
    }

    fn matrix(&self, d: usize) -> Result<CMatrix> {
        Ok(CMatrix::from_fn(d, d, |i, j| if i == j { ONE } else { ZERO }))
    }
}

pub fn coin_registry() -> Registry<dyn ReferenceCoin> {
    let mut r: Registry<dyn ReferenceCoin> = Registry::new("coin");
    r.register(Box::new(Hadamard))
        .register(Box::new(SymmetricHadamard))
        .register(Box::new(Grover))
        .register(Box::new(Fourier))
        .register(Box::new(Identity));
    r
}

/// Coin used by the lattice demonstrations unless another is requested.
pub const DEFAULT_LATTICE_COIN: &str = "symmetric";
