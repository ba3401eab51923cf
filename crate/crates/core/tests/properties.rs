use gasketpile::gasket::{BoundaryCondition, Corner, GasketGraph};
use gasketpile::markov::{exact_chi_moments, tv_lower_bound, ChainState, ExactChain};
use gasketpile::sandpile::{identity, is_recurrent, oplus, stabilize, Configuration};
use gasketpile::selfsim::{match_rotated, verify_corner_transport, verify_junction_invariance};
use gasketpile::spectral::{
    eigenvalue, enumerate_characters, exact_distances, CharacterTable, CHARACTER_CAP,
};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(m + xi)°` for random `0 <= xi < d`: recurrent, not uniform.
fn random_recurrent(g: &GasketGraph, rng: &mut ChaCha8Rng) -> Configuration {
    let m = Configuration::max_stable(g);
    let xi: Vec<u64> = g.degrees().iter().map(|&d| rng.random_range(0..d as u64)).collect();
    let xi = Configuration::new(g, xi).unwrap();
    stabilize(g, &m.checked_add(&xi).unwrap(), &[]).unwrap().0
}

#[test]
fn corner_transport_on_random_recurrent() {
    let g = GasketGraph::new(2, BoundaryCondition::CornerSink(Corner::LowerLeft));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let eta = random_recurrent(&g, &mut rng);
        let r = verify_corner_transport(2, &eta).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.sink_received, 18);
    }
}

/// Random recurrent `eta` on `G_level` with 2 chips at the lower-right and top corners.
fn corner_two_samples(level: u32, count: usize, seed: u64) -> Vec<Configuration> {
    let g = GasketGraph::normal(level);
    let y = g.corner_index(Corner::LowerRight).unwrap();
    let z = g.corner_index(Corner::Top).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let eta = random_recurrent(&g, &mut rng);
        if eta.chips()[y] == 2 && eta.chips()[z] == 2 {
            out.push(eta);
        }
    }
    out
}

#[test]
fn junction_invariance_when_matched_is_recurrent() {
    let mut checked = 0;
    for level in 1..=2 {
        for eta in corner_two_samples(level, 40, 2) {
            let r = verify_junction_invariance(level, &eta).unwrap();
            if r.matched_recurrent {
                assert!(r.invariant, "{r:?}");
                assert!(r.burning_all_ones);
                checked += 1;
            }
        }
    }
    assert!(checked >= 5, "only {checked} recurrent matchings");
}

#[test]
fn matched_rotations_need_not_be_recurrent() {
    // Recurrence of eta alone does not carry over to the matched configuration,
    // even with every outer corner raised to its maximum.
    let big = GasketGraph::normal(3);
    let eta = corner_two_samples(2, 40, 2)
        .into_iter()
        .find(|eta| !verify_junction_invariance(2, eta).unwrap().matched_recurrent)
        .expect("a non-recurrent matching among 40 samples");
    let mut chips = match_rotated(2, &eta).unwrap().into_chips();
    for corner in [Corner::LowerLeft, Corner::LowerRight, Corner::Top] {
        chips[big.corner_index(corner).unwrap()] = 3;
    }
    let raised = Configuration::new(&big, chips).unwrap();
    assert!(!is_recurrent(&big, &raised).unwrap());
}

#[test]
fn chain_preserves_recurrence() {
    for level in 1..=3 {
        let g = GasketGraph::normal(level);
        let mut chain = ChainState::new(identity(&g).unwrap(), 5, level as u64);
        let steps = if level == 3 { 10_000 } else { 2_000 };
        for _ in 0..steps {
            chain.step(&g).unwrap();
            assert!(is_recurrent(&g, &chain.config).unwrap());
        }
    }
}

#[test]
fn lower_bound_below_exact_tv_on_level_one() {
    let g = GasketGraph::normal(1);
    let chain = ExactChain::new(&g, 10_000).unwrap();
    assert_eq!(chain.len(), 1444);
    for (t, (_, tv)) in chain.distances(20).into_iter().enumerate() {
        let bound = tv_lower_bound(1, t as u64).unwrap();
        assert!(bound <= tv + 1e-12, "t = {t}: bound {bound} > tv {tv}");
    }
}

#[test]
fn plancherel_matches_direct_on_level_one() {
    let g = GasketGraph::normal(1);
    let chain = ExactChain::new(&g, 10_000).unwrap();
    let ts: Vec<u64> = (0..=10).collect();
    let direct = chain.distances(10);
    for (p, (l2, tv)) in exact_distances(&g, &ts, CHARACTER_CAP).unwrap().iter().zip(direct) {
        assert!((p.l2 - l2).abs() < 1e-12);
        assert!(tv <= p.tv_upper + 1e-12);
        // Halving the unnormalized norm undershoots the distance.
        if p.t > 0 {
            assert!(tv > p.half_l2, "t = {}", p.t);
        }
    }
}

#[test]
fn chi_moments_on_level_one() {
    let g = GasketGraph::normal(1);
    let chain = ExactChain::new(&g, 10_000).unwrap();
    let (mean, var) = exact_chi_moments(1, &chain).unwrap();
    assert_eq!(mean, BigRational::from_integer(0.into()));
    assert_eq!(var, BigRational::from_integer(1.into()));
}

#[test]
fn recurrent_set_is_a_group() {
    let g = GasketGraph::normal(0);
    let chain = ExactChain::new(&g, 1000).unwrap();
    let e = identity(&g).unwrap();
    for a in chain.states() {
        assert_eq!(oplus(&g, a, &e).unwrap(), *a);
        let inverse = chain
            .states()
            .iter()
            .filter(|b| oplus(&g, a, b).unwrap() == e)
            .count();
        assert_eq!(inverse, 1);
    }
}

#[test]
fn characters_of_level_one() {
    let g = GasketGraph::normal(1);
    let chars = enumerate_characters(&g, CHARACTER_CAP).unwrap();
    assert_eq!(chars.len(), 1444);
    assert!(chars.iter().all(|h| h.is_harmonic(&g)));
    // The eigenvalue moduli from the table agree with the per-function path.
    let table = CharacterTable::new(&g, CHARACTER_CAP).unwrap();
    let moduli = table.eigenvalue_moduli_squared();
    for (h, m) in chars.iter().zip(&moduli).step_by(37) {
        let e = eigenvalue(&g, h).unwrap();
        assert!((e.modulus().powi(2) - m).abs() < 1e-12);
    }
}
