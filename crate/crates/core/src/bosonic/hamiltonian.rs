use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use super::fock::{FockBasis, FockState, DEFAULT_BASIS_CAP};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{symmetric_eigen, CMatrix, RMatrix, SymmetricEigen, ZERO};

/// Largest basis for which [`evolve_ct`] diagonalizes `H` exactly; larger
/// sectors are propagated in a Krylov subspace.
pub const DENSE_EVOLVE_LIMIT: usize = 1024;
/// Largest basis whose full spectrum may be requested.
pub const SPECTRUM_LIMIT: usize = 4096;

const KRYLOV_DIM: usize = 30;
/// Local error allowed per Krylov sub-step.
const KRYLOV_TOL: f64 = 1e-13;

/// Hopping-plus-interaction Hamiltonian of `k` bosons on a graph,
/// `H = Σ_{(i,j)} c_i† c_j + E Σ_i n_i (n_i − 1)`, over a [`FockBasis`].
///
/// Every matrix element is real and each basis state couples to at most
/// twice as many states as there are edges, so `H` is kept as a sparse real
/// symmetric matrix in compressed rows. The full spectrum is computed on
/// first request and cached.
#[derive(Debug)]
pub struct BosonHamiltonian {
    basis: Arc<FockBasis>,
    energy: f64,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    spectrum: OnceLock<std::result::Result<SymmetricEigen, String>>,
}

impl BosonHamiltonian {
    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn interaction(&self) -> f64 {
        self.energy
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn nonzeros(&self) -> usize {
        self.vals.len()
    }

    fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_start[i]..self.row_start[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn element(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    /// Dense copy; only sensible for small sectors.
    pub fn to_real(&self) -> RMatrix {
        let d = self.dim();
        let mut m = RMatrix::zeros(d, d);
        for i in 0..d {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn to_complex(&self) -> CMatrix {
        let m = self.to_real();
        CMatrix::from_fn(m.rows(), m.cols(), |i, j| Complex64::new(m[(i, j)], 0.0))
    }

    pub fn spectrum(&self) -> Result<&SymmetricEigen> {
        if self.dim() > SPECTRUM_LIMIT {
            return Err(Error::TooLarge {
                what: "dense diagonalization".into(),
                size: self.dim(),
                cap: SPECTRUM_LIMIT,
            });
        }
        self.spectrum
            .get_or_init(|| symmetric_eigen(self.to_real().as_slice(), self.dim()).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::InvalidArgument(format!("spectrum unavailable: {e}")))
    }

    fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *o = cols.iter().zip(vals).map(|(&j, &v)| x[j] * v).sum();
        }
    }

    /// `H |s⟩`.
    pub fn apply(&self, s: &FockState) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.dim()];
        self.apply_into(s.amplitudes(), &mut out);
        out
    }

    /// `⟨s|H|s⟩` (real for Hermitian `H`).
    pub fn energy_expectation(&self, s: &FockState) -> f64 {
        self.apply(s)
            .iter()
            .zip(s.amplitudes())
            .map(|(h, a)| (a.conj() * h).re)
            .sum()
    }

    /// Gershgorin bound on `‖H‖₂`.
    fn norm_bound(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

pub fn build_hamiltonian(g: &Graph, interaction: f64, k: usize) -> Result<BosonHamiltonian> {
    build_hamiltonian_with_cap(g, interaction, k, DEFAULT_BASIS_CAP)
}

pub fn build_hamiltonian_with_cap(
    g: &Graph,
    interaction: f64,
    k: usize,
    cap: usize,
) -> Result<BosonHamiltonian> {
    if !interaction.is_finite() {
        return Err(Error::NonFinite("interaction strength".into()));
    }
    let basis = FockBasis::with_cap(g.n(), k, cap)?;
    let dim = basis.len();
    let mut row_start = Vec::with_capacity(dim + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut occ = vec![0u32; g.n()];
    let mut entries: Vec<(usize, f64)> = Vec::new();
    row_start.push(0);
    // H is symmetric, so the column of state `s` doubles as its row.
    for (col, state) in basis.states().enumerate() {
        entries.clear();
        let mut diag: f64 = interaction * state.iter().map(|&m| (m as f64) * (m as f64 - 1.0)).sum::<f64>();
        for e in g.edges() {
            if e.is_loop() {
                diag += state[e.u] as f64;
                continue;
            }
            // Hop j -> i for both orientations of the edge.
            for (i, j) in [(e.u, e.v), (e.v, e.u)] {
                if state[j] == 0 {
                    continue;
                }
                occ.copy_from_slice(state);
                let coef = (occ[j] as f64).sqrt() * (occ[i] as f64 + 1.0).sqrt();
                occ[j] -= 1;
                occ[i] += 1;
                let row = basis.index_of(&occ).expect("hop stays in the sector");
                entries.push((row, coef));
            }
        }
        if diag != 0.0 {
            entries.push((col, diag));
        }
        entries.sort_by_key(|e| e.0);
        for &(j, v) in entries.iter() {
            if cols.len() > *row_start.last().unwrap() && *cols.last().unwrap() == j {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
            }
        }
        row_start.push(cols.len());
    }
    Ok(BosonHamiltonian {
        basis,
        energy: interaction,
        row_start,
        cols,
        vals,
        spectrum: OnceLock::new(),
    })
}

fn check_sector(h: &BosonHamiltonian, s0: &FockState, t: f64) -> Result<()> {
    if !Arc::ptr_eq(h.basis(), s0.basis())
        && (h.basis().modes() != s0.basis().modes() || h.basis().particles() != s0.basis().particles())
    {
        return Err(Error::Dimension("state and Hamiltonian live in different sectors".into()));
    }
    if !t.is_finite() {
        return Err(Error::NonFinite("evolution time".into()));
    }
    Ok(())
}

/// `exp(−iHt)|s0⟩`: exact diagonalization for small sectors, Krylov
/// propagation above [`DENSE_EVOLVE_LIMIT`] states.
pub fn evolve_ct(h: &BosonHamiltonian, s0: &FockState, t: f64) -> Result<FockState> {
    if h.dim() <= DENSE_EVOLVE_LIMIT {
        evolve_ct_spectral(h, s0, t)
    } else {
        evolve_ct_krylov(h, s0, t)
    }
}

/// `exp(−iHt)|s0⟩` through the eigendecomposition of `H`.
pub fn evolve_ct_spectral(h: &BosonHamiltonian, s0: &FockState, t: f64) -> Result<FockState> {
    check_sector(h, s0, t)?;
    if t == 0.0 {
        return Ok(s0.clone());
    }
    let spec = h.spectrum()?;
    let amp = s0.amplitudes();
    let dim = h.dim();
    let mut out = vec![ZERO; dim];
    for (lambda, vec) in spec.values.iter().zip(&spec.vectors) {
        let proj: Complex64 = vec.iter().zip(amp).map(|(v, a)| a * *v).sum();
        if proj == ZERO {
            continue;
        }
        let w = proj * Complex64::new(0.0, -lambda * t).exp();
        for (o, v) in out.iter_mut().zip(vec) {
            *o += w * *v;
        }
    }
    FockState::new(h.basis().clone(), out)
}

/// `exp(−iHt)|s0⟩` by Lanczos projection with adaptive sub-steps.
///
/// Each sub-step builds an orthonormal Krylov basis (fully
/// reorthogonalized), exponentiates the small tridiagonal projection, and
/// shrinks the step until the standard residual estimate
/// `β_m |[e^{−iT dt}]_{m,1}|` drops below the tolerance.
pub fn evolve_ct_krylov(h: &BosonHamiltonian, s0: &FockState, t: f64) -> Result<FockState> {
    check_sector(h, s0, t)?;
    let dim = h.dim();
    let mut w = s0.amplitudes().to_vec();
    let mut remaining = t.abs();
    let sign = t.signum();
    let mut dt = remaining.min(8.0 / h.norm_bound().max(1e-300));
    let mut scratch = vec![ZERO; dim];
    while remaining > 0.0 {
        let beta0 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if beta0 == 0.0 {
            break;
        }
        let m_max = KRYLOV_DIM.min(dim);
        let mut basis: Vec<Vec<Complex64>> = vec![w.iter().map(|z| z / beta0).collect()];
        let mut alpha = Vec::with_capacity(m_max);
        let mut beta = Vec::with_capacity(m_max);
        let mut exact = false;
        for j in 0..m_max {
            h.apply_into(&basis[j], &mut scratch);
            let a: f64 = basis[j].iter().zip(&scratch).map(|(v, x)| (v.conj() * x).re).sum();
            alpha.push(a);
            // Two passes of Gram-Schmidt against every previous vector.
            for _ in 0..2 {
                for v in &basis {
                    let c: Complex64 = v.iter().zip(&scratch).map(|(p, x)| p.conj() * x).sum();
                    for (x, p) in scratch.iter_mut().zip(v) {
                        *x -= c * p;
                    }
                }
            }
            let b = scratch.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            beta.push(b);
            if b <= 1e-12 * (1.0 + a.abs()) {
                exact = true;
                break;
            }
            if j + 1 < m_max {
                basis.push(scratch.iter().map(|z| z / b).collect());
            }
        }
        let m = alpha.len();
        let mut tri = vec![0.0; m * m];
        for i in 0..m {
            tri[i * m + i] = alpha[i];
            if i + 1 < m {
                tri[i * m + i + 1] = beta[i];
                tri[(i + 1) * m + i] = beta[i];
            }
        }
        let eig = symmetric_eigen(&tri, m)?;
        // y = exp(−i T dt) e₁ in the Krylov basis.
        let propagate = |dt: f64| -> Vec<Complex64> {
            let mut y = vec![ZERO; m];
            for (lambda, vec) in eig.values.iter().zip(&eig.vectors) {
                let c = Complex64::new(0.0, -sign * lambda * dt).exp() * vec[0];
                for (yi, vi) in y.iter_mut().zip(vec) {
                    *yi += c * *vi;
                }
            }
            y
        };
        let residual = beta[m - 1];
        let mut step = dt.min(remaining);
        let y = loop {
            let y = propagate(step);
            let err = if exact || m < KRYLOV_DIM.min(dim) { 0.0 } else { residual * y[m - 1].norm() };
            if err <= KRYLOV_TOL * step.max(1e-3) || step < 1e-12 {
                break y;
            }
            step *= 0.5;
        };
        for (k, z) in w.iter_mut().enumerate() {
            *z = basis.iter().zip(&y).map(|(v, c)| v[k] * c).sum::<Complex64>() * beta0;
        }
        remaining -= step;
        // Let the next step grow again if this one was accepted at full length.
        dt = if step >= dt { dt * 1.5 } else { step };
        if !exact && remaining < 1e-15 * t.abs() {
            break;
        }
    }
    FockState::new(h.basis().clone(), w)
}

/// Expected fraction of the bosons on each node, `⟨n_v⟩ / k`.
pub fn occupation_distribution(s: &FockState) -> Result<Vec<f64>> {
    let basis = s.basis();
    let k = basis.particles();
    if k == 0 {
        return Err(Error::InvalidArgument("no bosons to locate".into()));
    }
    let mut p = vec![0.0; basis.modes()];
    for (occ, a) in basis.states().zip(s.amplitudes()) {
        let w = a.norm_sqr();
        for (pv, &m) in p.iter_mut().zip(occ) {
            *pv += w * m as f64;
        }
    }
    for pv in &mut p {
        *pv /= k as f64;
    }
    Ok(p)
}

/// Unordered node-pair distribution of a two-boson Fock state, in the same
/// symmetric layout as the coined pair measurement.
pub fn fock_pair_probability(s: &FockState) -> Result<RMatrix> {
    let basis = s.basis();
    if basis.particles() != 2 {
        return Err(Error::InvalidArgument("pair probabilities need exactly two bosons".into()));
    }
    let n = basis.modes();
    let mut pr = RMatrix::zeros(n, n);
    for (occ, a) in basis.states().zip(s.amplitudes()) {
        let mut sites = occ
            .iter()
            .enumerate()
            .flat_map(|(v, &m)| std::iter::repeat_n(v, m as usize));
        let i = sites.next().expect("two bosons");
        let j = sites.next().expect("two bosons");
        pr[(i, j)] += a.norm_sqr();
        if i != j {
            pr[(j, i)] += a.norm_sqr();
        }
    }
    Ok(pr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::line_graph;

    fn edge() -> Graph {
        Graph::build(&[(0, 1)], 2, RMatrix::identity(2)).unwrap()
    }

    #[test]
    fn one_boson_hamiltonian_is_adjacency() {
        for e in [0.0, 3.0, -1.5] {
            let h = build_hamiltonian(&edge(), e, 1).unwrap();
            assert_eq!(h.to_real().to_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        }
        let g = line_graph(7).unwrap();
        let h = build_hamiltonian(&g, 2.0, 1).unwrap();
        // Basis (1,0,..), (0,1,..), ... is node order.
        assert_eq!(h.to_real(), g.adjacency());
    }

    #[test]
    fn two_boson_single_edge() {
        let h0 = build_hamiltonian(&edge(), 0.0, 2).unwrap();
        let s2 = 2f64.sqrt();
        let expect = [[0.0, s2, 0.0], [s2, 0.0, s2], [0.0, s2, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((h0.element(i, j) - expect[i][j]).abs() < 1e-15);
            }
        }
        let h5 = build_hamiltonian(&edge(), 5.0, 2).unwrap();
        let diag: Vec<f64> = (0..3).map(|i| h5.element(i, i) - h0.element(i, i)).collect();
        assert_eq!(diag, vec![10.0, 0.0, 10.0]);
        assert_eq!(h5.to_complex().hermiticity_defect(), 0.0);
    }

    #[test]
    fn single_edge_rabi_oscillation() {
        let h = build_hamiltonian(&edge(), 0.0, 1).unwrap();
        let s0 = FockState::occupation(h.basis().clone(), &[1, 0]).unwrap();
        assert_eq!(evolve_ct(&h, &s0, 0.0).unwrap().amplitudes(), s0.amplitudes());
        for t in [0.3, 1.0, 2.7] {
            let st = evolve_ct(&h, &s0, t).unwrap();
            let a = st.amplitude_of(&[1, 0]);
            let b = st.amplitude_of(&[0, 1]);
            assert!((a - Complex64::new(t.cos(), 0.0)).norm() < 1e-12);
            assert!((b - Complex64::new(0.0, -t.sin())).norm() < 1e-12);
            assert!((st.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn krylov_matches_spectral() {
        let g = crate::graph::random_graph(&mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(2), 12, 0.3, 1)
            .unwrap();
        let h = build_hamiltonian(&g, 1.5, 3).unwrap();
        assert_eq!(h.dim(), 364);
        let mut occ = vec![0u32; 12];
        occ[0] = 2;
        occ[5] = 1;
        let s0 = FockState::occupation(h.basis().clone(), &occ).unwrap();
        for t in [0.0, 0.4, 3.0, 12.0] {
            let a = evolve_ct_spectral(&h, &s0, t).unwrap();
            let b = evolve_ct_krylov(&h, &s0, t).unwrap();
            let diff = a
                .amplitudes()
                .iter()
                .zip(b.amplitudes())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-10, "t={t}: {diff}");
        }
        assert_eq!(h.to_real(), h.to_real().transpose());
    }

    #[test]
    fn occupation_examples() {
        let basis = FockBasis::new(2, 2).unwrap();
        let p = occupation_distribution(&FockState::occupation(basis.clone(), &[2, 0]).unwrap()).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);
        let p = occupation_distribution(&FockState::occupation(basis.clone(), &[1, 1]).unwrap()).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let cat = FockState::new(basis, vec![r, ZERO, r]).unwrap();
        let p = occupation_distribution(&cat).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);

        let vac = FockState::occupation(FockBasis::new(2, 0).unwrap(), &[0, 0]).unwrap();
        assert!(occupation_distribution(&vac).is_err());
    }

    #[test]
    fn fock_pairs_layout() {
        let basis = FockBasis::new(3, 2).unwrap();
        let s = FockState::occupation(basis, &[1, 0, 1]).unwrap();
        let pr = fock_pair_probability(&s).unwrap();
        assert_eq!((pr[(0, 2)], pr[(2, 0)], pr[(0, 0)]), (1.0, 1.0, 0.0));
    }
}
