use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ZERO;
use crate::walk::WalkerState;

/// Default ceiling on the number of occupation-number states in one basis.
pub const DEFAULT_BASIS_CAP: usize = 2_000_000;

/// Occupation-number basis for `k` bosons on `n` modes.
///
/// States are listed in descending lexicographic order of their occupation
/// vectors, so for `n = 2, k = 2` the order is `(2,0), (1,1), (0,2)`.
#[derive(Debug)]
pub struct FockBasis {
    n: usize,
    k: usize,
    occupations: Vec<u32>,
    index: HashMap<Box<[u32]>, usize>,
}

/// `C(n + k − 1, k)` or `None` on overflow.
pub fn basis_size(n: usize, k: usize) -> Option<usize> {
    if n == 0 {
        return Some(usize::from(k == 0));
    }
    let mut acc: u128 = 1;
    for i in 1..=k as u128 {
        acc = acc.checked_mul(n as u128 - 1 + i)? / i;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    usize::try_from(acc).ok()
}

impl FockBasis {
    pub fn new(n: usize, k: usize) -> Result<Arc<FockBasis>> {
        FockBasis::with_cap(n, k, DEFAULT_BASIS_CAP)
    }

    pub fn with_cap(n: usize, k: usize, cap: usize) -> Result<Arc<FockBasis>> {
        if n == 0 {
            return Err(Error::InvalidArgument("a Fock basis needs at least one mode".into()));
        }
        let size = basis_size(n, k).unwrap_or(usize::MAX);
        if size > cap {
            return Err(Error::TooLarge {
                what: format!("Fock basis for {k} bosons on {n} nodes"),
                size,
                cap,
            });
        }
        let mut occupations = Vec::with_capacity(size * n);
        let mut current = vec![0u32; n];
        enumerate(&mut current, 0, k as u32, &mut occupations);
        let index = occupations
            .chunks(n)
            .enumerate()
            .map(|(i, occ)| (occ.to_vec().into_boxed_slice(), i))
            .collect();
        Ok(Arc::new(FockBasis {
            n,
            k,
            occupations,
            index,
        }))
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn particles(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.occupations[i * self.n..(i + 1) * self.n]
    }

    pub fn states(&self) -> impl Iterator<Item = &[u32]> {
        self.occupations.chunks(self.n)
    }

    pub fn index_of(&self, occupation: &[u32]) -> Option<usize> {
        self.index.get(occupation).copied()
    }
}

fn enumerate(current: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<u32>) {
    if pos == current.len() - 1 {
        current[pos] = remaining;
        out.extend_from_slice(current);
        return;
    }
    for take in (0..=remaining).rev() {
        current[pos] = take;
        enumerate(current, pos + 1, remaining - take, out);
    }
    current[pos] = 0;
}

/// Complex amplitudes over a [`FockBasis`].
#[derive(Clone, Debug)]
pub struct FockState {
    basis: Arc<FockBasis>,
    amp: Vec<Complex64>,
}

impl FockState {
    pub fn new(basis: Arc<FockBasis>, amp: Vec<Complex64>) -> Result<FockState> {
        if amp.len() != basis.len() {
            return Err(Error::Dimension(format!(
                "{} amplitudes for a basis of {} states",
                amp.len(),
                basis.len()
            )));
        }
        Ok(FockState { basis, amp })
    }

    /// The normalized basis state with the given occupations.
    pub fn occupation(basis: Arc<FockBasis>, occupation: &[u32]) -> Result<FockState> {
        let i = basis.index_of(occupation).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "occupation {occupation:?} is not in the {}-boson, {}-mode basis",
                basis.particles(),
                basis.modes()
            ))
        })?;
        let mut amp = vec![ZERO; basis.len()];
        amp[i] = Complex64::new(1.0, 0.0);
        Ok(FockState { basis, amp })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amp
    }

    pub fn amplitude_of(&self, occupation: &[u32]) -> Complex64 {
        self.basis.index_of(occupation).map_or(ZERO, |i| self.amp[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Reinterpret a one-boson state as a coin-free walker (`d = 1`).
    pub fn to_walker(&self) -> Result<WalkerState> {
        if self.basis.particles() != 1 {
            return Err(Error::InvalidArgument(
                "only single-boson states map onto a walker".into(),
            ));
        }
        let n = self.basis.modes();
        let mut amp = vec![ZERO; n];
        for (i, z) in self.amp.iter().enumerate() {
            let node = self.basis.state(i).iter().position(|&c| c == 1).expect("one boson");
            amp[node] = *z;
        }
        WalkerState::from_amplitudes(n, 1, amp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Raise,
    Lower,
}

/// Apply a creation or annihilation operator at `site`.
///
/// Raising maps `|…, n_i, …⟩ → √(n_i + 1) |…, n_i + 1, …⟩` into the `k + 1`
/// sector; lowering maps `|…, n_i, …⟩ → √n_i |…, n_i − 1, …⟩` into `k − 1`.
/// The result is not renormalized.
pub fn apply_ladder(state: &FockState, site: usize, direction: Ladder) -> Result<FockState> {
    let src = state.basis();
    let n = src.modes();
    if site >= n {
        return Err(Error::InvalidArgument(format!("site {site} outside 0..{n}")));
    }
    let k = src.particles();
    let target_k = match direction {
        Ladder::Raise => k + 1,
        Ladder::Lower if k == 0 => {
            return Err(Error::InvalidArgument("cannot lower the vacuum sector".into()))
        }
        Ladder::Lower => k - 1,
    };
    let dst = FockBasis::new(n, target_k)?;
    let mut amp = vec![ZERO; dst.len()];
    let mut occ = vec![0u32; n];
    for (i, a) in state.amplitudes().iter().enumerate() {
        if *a == ZERO {
            continue;
        }
        occ.copy_from_slice(src.state(i));
        let ni = occ[site];
        let coef = match direction {
            Ladder::Raise => {
                occ[site] += 1;
                ((ni + 1) as f64).sqrt()
            }
            Ladder::Lower => {
                if ni == 0 {
                    continue;
                }
                occ[site] -= 1;
                (ni as f64).sqrt()
            }
        };
        let j = dst.index_of(&occ).expect("neighboring sector contains the shifted state");
        amp[j] += a * coef;
    }
    FockState::new(dst, amp)
}
