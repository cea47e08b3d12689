use crate::error::{Error, Result};
use crate::graph::Graph;

/// Edge-swap (flip-flop) shift: an involutive permutation of `(node, slot)`
/// pairs. For every edge with ends `(u, i)` and `(v, j)`, amplitude in `(u, i)`
/// moves to `(v, j)` and vice versa; every other pair, including padding
/// slots past a node's degree, is a fixed point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftMap {
    n: usize,
    d: usize,
    target: Vec<usize>,
}

impl ShiftMap {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coin_dim(&self) -> usize {
        self.d
    }

    /// Flat index of `(node, slot)` after the shift.
    pub fn target(&self, index: usize) -> usize {
        self.target[index]
    }

    pub fn as_permutation(&self) -> &[usize] {
        &self.target
    }

    /// `dst[σ(k)] = src[k]`.
    pub fn apply<T: Copy>(&self, src: &[T], dst: &mut [T]) {
        for (k, &x) in src.iter().enumerate() {
            dst[self.target[k]] = x;
        }
    }

    pub fn is_involution(&self) -> bool {
        self.target
            .iter()
            .enumerate()
            .all(|(k, &t)| self.target[t] == k)
    }
}

pub fn build_shift(g: &Graph, d: usize) -> Result<ShiftMap> {
    let need = g.max_degree();
    if d < need {
        return Err(Error::Dimension(format!(
            "coin dimension {d} is below the maximum degree {need}"
        )));
    }
    let n = g.n();
    let mut target: Vec<usize> = (0..n * d).collect();
    for e in g.edges() {
        let a = e.u * d + e.slot_u;
        let b = e.v * d + e.slot_v;
        target[a] = b;
        target[b] = a;
    }
    Ok(ShiftMap { n, d, target })
}
