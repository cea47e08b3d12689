mod common;

use common::*;
use proptest::prelude::*;
use qwalk::bosonic::{
    build_hamiltonian, evolve_ct, exchange_check, fock_pair_probability, marginal_single, occupation_distribution,
    pair_evolve, pair_position_probability, symmetrize, FockBasis, FockState, PairState,
};
use qwalk::graph::{line_center, line_graph, random_graph};
use qwalk::walk::build_shift;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn symmetrized_pairs_are_exchange_symmetric(seed in any::<u64>(), n in 1usize..6, d in 1usize..3, steps in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, n, 0.5, 1).unwrap();
        let d = d.max(g.max_degree()).max(1);
        let a = random_walker(n, d, &mut rng);
        let b = random_walker(n, d, &mut rng);
        let p = symmetrize(&a, &b).unwrap();
        prop_assert!(exchange_check(&p));
        prop_assert!((p.norm_sqr() - 1.0).abs() < 1e-12);
        let coins = random_coin_bank(n, d, steps, &mut rng);
        let q = pair_evolve(&p, &coins, &build_shift(&g, d).unwrap(), steps).unwrap();
        prop_assert!(exchange_check(&q));
        let pr = pair_position_probability(&q);
        let total: f64 = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).map(|(i, j)| pr[(i, j)]).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!((marginal_single(&pr).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_evolution_matches_tensor_product_oracle(seed in any::<u64>(), n in 1usize..5, steps in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, n, 0.6, 1).unwrap();
        let d = g.max_degree().clamp(1, 2);
        prop_assume!(g.max_degree() <= 2);
        let coins = random_coin_bank(n, d, steps, &mut rng);
        let p = symmetrize(&random_walker(n, d, &mut rng), &random_walker(n, d, &mut rng)).unwrap();
        let u = dense_walk_operator(&g, &coins, steps);
        let want = kron(&u, &u).mul_vec(&p.materialize().unwrap());
        let got = pair_evolve(&p, &coins, &build_shift(&g, d).unwrap(), steps).unwrap();
        prop_assert!(max_abs(&got.materialize().unwrap(), &want) < 1e-12);
        prop_assert!(pair_position_probability(&got).max_abs_diff(&dense_pair_probability(&want, n, d)) < 1e-12);
    }

    #[test]
    fn continuous_time_conserves_norm_and_energy(seed in any::<u64>(), n in 2usize..8, k in 1usize..4, e in -5.0f64..5.0, t in 0.0f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, n, 0.5, 1).unwrap();
        let h = build_hamiltonian(&g, e, k).unwrap();
        let amp = (0..h.dim()).map(|_| c(gaussian(&mut rng), gaussian(&mut rng))).collect::<Vec<_>>();
        let norm = amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let s0 = FockState::new(h.basis().clone(), amp.iter().map(|z| z / norm).collect()).unwrap();
        let st = evolve_ct(&h, &s0, t).unwrap();
        prop_assert!((st.norm_sqr() - 1.0).abs() < 1e-10);
        prop_assert!((h.energy_expectation(&st) - h.energy_expectation(&s0)).abs() < 1e-9);
        prop_assert!((occupation_distribution(&st).unwrap().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn fock_evolution_matches_dense_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = random_graph(&mut rng, 7, 0.4, 1).unwrap();
    for (k, e) in [(1, 0.0), (2, 0.0), (2, 3.0), (3, -1.5)] {
        let h = build_hamiltonian(&g, e, k).unwrap();
        let mut occ = vec![0u32; 7];
        occ[0] = k as u32;
        let s0 = FockState::occupation(h.basis().clone(), &occ).unwrap();
        let want = expm_minus_i(&h.to_real(), 2.5).mul_vec(s0.amplitudes());
        let got = evolve_ct(&h, &s0, 2.5).unwrap();
        assert!(max_abs(got.amplitudes(), &want) < 1e-10, "k={k} E={e}");
    }
}

/// Without interaction the two-boson Fock state is the symmetrized product of
/// two single-particle evolutions.
#[test]
fn free_bosons_factorize() {
    let g = line_graph(9).unwrap();
    let h1 = build_hamiltonian(&g, 0.0, 1).unwrap();
    let h2 = build_hamiltonian(&g, 0.0, 2).unwrap();
    let single = |site: usize| {
        let mut occ = vec![0u32; 9];
        occ[site] = 1;
        evolve_ct(&h1, &FockState::occupation(h1.basis().clone(), &occ).unwrap(), 3.0)
            .unwrap()
            .to_walker()
            .unwrap()
    };
    for (u, v) in [(4, 4), (3, 5), (0, 8)] {
        let mut occ = vec![0u32; 9];
        occ[u] += 1;
        occ[v] += 1;
        let st = evolve_ct(&h2, &FockState::occupation(h2.basis().clone(), &occ).unwrap(), 3.0).unwrap();
        let pair = symmetrize(&single(u), &single(v)).unwrap();
        let pr_pair = pair_position_probability(&pair);
        let pr_fock = fock_pair_probability(&st).unwrap();
        assert!(pr_pair.max_abs_diff(&pr_fock) < 1e-12, "({u},{v})");
        let want = marginal_single(&pr_pair);
        let got = occupation_distribution(&st).unwrap();
        assert!(want.iter().zip(&got).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}

#[test]
fn basis_sizes_and_product_states() {
    assert_eq!(FockBasis::new(5, 2).unwrap().len(), 15);
    assert_eq!(FockBasis::new(11, 3).unwrap().len(), 286);
    let g = line_graph(5).unwrap();
    let c = line_center(5);
    let a = qwalk::walk::init_state(&g, c, 2).unwrap();
    let p = PairState::product(&a, &a).unwrap();
    assert!(!exchange_check(&PairState::product(
        &qwalk::walk::WalkerState::basis(5, 2, 0, 0).unwrap(),
        &qwalk::walk::WalkerState::basis(5, 2, 1, 0).unwrap()
    )
    .unwrap()));
    assert!((p.norm_sqr() - 1.0).abs() < 1e-15);
}
