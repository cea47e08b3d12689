//! Multi-boson machinery.
//!
//! Two engines live here. The Fock engine holds `k` interacting bosons in the
//! occupation-number basis and evolves them in continuous time under the
//! hopping-plus-on-site Hamiltonian. The coined pair engine keeps two
//! non-interacting coined walkers in symmetrized product form and measures
//! them over unordered node pairs.

mod fock;
mod hamiltonian;
mod pair;

pub use fock::{apply_ladder, basis_size, FockBasis, FockState, Ladder, DEFAULT_BASIS_CAP};
pub use hamiltonian::{
    build_hamiltonian, build_hamiltonian_with_cap, evolve_ct, evolve_ct_krylov, evolve_ct_spectral,
    fock_pair_probability, occupation_distribution, BosonHamiltonian, DENSE_EVOLVE_LIMIT, SPECTRUM_LIMIT,
};
pub use pair::{
    bosonic_walk_matrix, exchange_check, marginal_single, pair_evolve, pair_position_probability,
    symmetrize, PairState, EXCHANGE_TOL, MATERIALIZE_LIMIT,
};
