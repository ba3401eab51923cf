//! Acceptance criteria 1-9. Each test writes one `criterion N: PASS|FAIL`
//! line straight to stderr, so the lines show up without `--nocapture`.

use std::io::Write;
use std::time::{Duration, Instant};

use gasketpile::gasket::{vertex_count, BoundaryCondition, GasketGraph};
use gasketpile::group::{
    check_group_theorem, group_order, sandpile_group, tau_closed_form_holds, tau_matrix_tree,
    tau_recursion,
};
use gasketpile::markov::{estimate_chi_decay, ExactChain, StationarySampler};
use gasketpile::render::{render, Palette, RenderSpec};
use gasketpile::sandpile::{
    conservation_holds, identity, is_recurrent, recurrent_rep, stabilize,
    stabilize_random_order, Configuration, IntegerClassVector,
};
use gasketpile::selfsim::{build_identity_theorem, verify_doubling};
use gasketpile::spectral::{
    cell_midpoint_indices, cell_origins, eigenvalue, embed_h1, exact_distances, one_minus_over,
    stationary_variance, CHARACTER_CAP,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const CRITERION_1_LIMIT: Duration = Duration::from_secs(60);
const CRITERION_5_LIMIT: Duration = Duration::from_secs(600);
/// Plancherel against direct evolution.
const DISTANCE_TOLERANCE: f64 = 1e-12;
/// Monte-Carlo bands in standard errors.
const SIGMAS: f64 = 3.0;
const MC_TRIALS: usize = 10_000;
/// Chi-square quantile for 49 degrees of freedom at significance 0.01.
const CHI2_49_CRITICAL: f64 = 74.919;

fn report(n: u32, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n}: {status} ({detail})");
}

#[test]
fn criterion_1_identity_theorem() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let palette = Palette::default();
    for level in 2..=5 {
        let g = GasketGraph::normal(level);
        let closed = build_identity_theorem(level).unwrap();
        if closed != identity(&g).unwrap() {
            failures.push(format!("level {level}: closed form differs"));
        }
        let image = render(&g, &closed, &RenderSpec::default()).unwrap();
        let colors = gasketpile::render::ppm_colors(&image).unwrap();
        if colors != [palette.by_count[3], palette.by_count[2]] {
            failures.push(format!("level {level}: colors {colors:?}"));
        }
    }
    let elapsed = start.elapsed();
    if elapsed > CRITERION_1_LIMIT {
        failures.push(format!("took {elapsed:?}"));
    }
    let pass = failures.is_empty();
    report(1, pass, &format!("n = 2..5 in {elapsed:.2?} {failures:?}"));
    assert!(pass, "{failures:?}");
}

#[test]
fn criterion_2_doubling() {
    let gains: Vec<u64> = (1..=4).map(|n| verify_doubling(n).unwrap().gain).collect();
    let all_pass = (1..=4).all(|n| verify_doubling(n).unwrap().pass);
    let pass = gains == [10, 34, 106, 322] && all_pass;
    report(2, pass, &format!("gains {gains:?}"));
    assert!(pass);
}

#[test]
fn criterion_3_spanning_trees() {
    let mut pass = true;
    for n in 0..=5 {
        pass &= tau_matrix_tree(n).unwrap() == tau_recursion(n);
    }
    for n in 0..=4 {
        pass &= tau_closed_form_holds(n, &tau_recursion(n));
    }
    pass &= tau_recursion(1) == BigInt::from(54) && tau_recursion(2) == BigInt::from(524_880);
    report(3, pass, "matrix-tree = recursion for n <= 5, fourth power for n <= 4");
    assert!(pass);
}

#[test]
fn criterion_4_group_order() {
    let mut pass = true;
    for n in 0..=4 {
        let g = GasketGraph::normal(n);
        pass &= sandpile_group(&g).order() == Some(group_order(&g).unwrap());
    }
    let g0 = GasketGraph::normal(0);
    pass &= group_order(&g0).unwrap() == BigInt::from(50);
    let closure = ExactChain::new(&g0, 1000).unwrap().len();
    // Independently: count stable configurations passing the burning test.
    let burning = (0..64u64)
        .filter(|&k| {
            let c = Configuration::new(&g0, vec![k % 4, k / 4 % 4, k / 16]).unwrap();
            is_recurrent(&g0, &c).unwrap()
        })
        .count();
    pass &= closure == 50 && burning == 50;
    report(4, pass, &format!("closure {closure}, burning count {burning}"));
    assert!(pass);
}

#[test]
fn criterion_5_quotient_theorem() {
    let start = Instant::now();
    let reports: Vec<_> = (1..=3).map(|n| check_group_theorem(n).unwrap()).collect();
    let elapsed = start.elapsed();
    let pass = reports.iter().all(|r| r.pass && r.orders_agree) && elapsed <= CRITERION_5_LIMIT;
    let conventions: Vec<usize> = reports.iter().map(|r| r.convention_index).collect();
    report(
        5,
        pass,
        &format!("n = 1..3, conventions {conventions:?}, {elapsed:.2?}"),
    );
    assert!(pass, "{reports:?}");
}

#[test]
fn criterion_6_spectral() {
    let mut pass = true;
    for n in 1..=4 {
        let g = GasketGraph::normal(n);
        let count = cell_origins(n).unwrap().len();
        let hs: Vec<_> = (1..=count).map(|i| embed_h1(n, i).unwrap()).collect();
        for (i, h) in hs.iter().enumerate() {
            pass &= eigenvalue(&g, h).unwrap().exact == Some(one_minus_over(n, 6));
            pass &= h.product(h).unwrap().is_trivial();
            for other in &hs[i + 1..] {
                let p = h.product(other).unwrap();
                pass &= eigenvalue(&g, &p).unwrap().exact == Some(one_minus_over(n, 12));
            }
        }
        let var = stationary_variance(n).unwrap();
        pass &= var == BigRational::new(1.into(), BigInt::from(3u64.pow(n - 1)));
    }
    report(6, pass, "exact eigenvalues and Var_pi[chi] = 3^(1-n) for n <= 4");
    assert!(pass);
}

#[test]
fn criterion_7_exact_distances() {
    let g0 = GasketGraph::normal(0);
    let ts: Vec<u64> = (0..=20).collect();
    let plancherel = exact_distances(&g0, &ts, CHARACTER_CAP).unwrap();
    let direct = ExactChain::new(&g0, 1000).unwrap().distances(20);
    let worst = plancherel
        .iter()
        .zip(&direct)
        .map(|(p, (l2, _))| (p.l2 - l2).abs())
        .fold(0.0, f64::max);

    // The smallest level with |Gamma| under the cap is 1 (order 1444; the
    // next level has 25613280).
    let g1 = GasketGraph::normal(1);
    assert!(group_order(&g1).unwrap() <= BigInt::from(CHARACTER_CAP));
    assert!(group_order(&GasketGraph::normal(2)).unwrap() > BigInt::from(CHARACTER_CAP));
    let v = vertex_count(1) as f64;
    let t = (1.25 * (v + 1.0) * (34.0 * v).ln()).ceil() as u64;
    let l2 = exact_distances(&g1, &[t], CHARACTER_CAP).unwrap()[0].l2;

    let pass = worst <= DISTANCE_TOLERANCE && t == 47 && l2 <= 0.25;
    report(
        7,
        pass,
        &format!("max |plancherel - direct| = {worst:.2e}; G_1 at t = {t}: l2 = {l2:.3e}"),
    );
    assert!(pass);
}

fn chi_square_uniform(counts: &[u64], draws: u64) -> f64 {
    let expected = draws as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum()
}

#[test]
fn criterion_8_monte_carlo() {
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for n in [2u32, 3] {
        let lambda = 1.0 - 6.0 / (vertex_count(n) as f64 + 1.0);
        for t in [1u64, 5, 10, 25] {
            let e = estimate_chi_decay(n, t, MC_TRIALS, 20 + n as u64).unwrap();
            let expected = lambda.powi(t as i32);
            let z = (e.mean - expected) / e.stderr.max(f64::MIN_POSITIVE);
            lines.push(format!("n={n} t={t} z={z:.2}"));
            if z.abs() > SIGMAS {
                failures.push(format!("chi decay n={n} t={t}: {e:?} vs {expected}"));
            }
        }
    }

    // Stationary sampler on G_0 against the 50 recurrent configurations.
    let g0 = GasketGraph::normal(0);
    let chain = ExactChain::new(&g0, 1000).unwrap();
    let sampler = StationarySampler::new(&g0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut counts = vec![0u64; chain.len()];
    for _ in 0..MC_TRIALS {
        let s = sampler.sample(&mut rng).unwrap();
        counts[chain.index_of(&s).expect("sample is recurrent")] += 1;
    }
    let chi2 = chi_square_uniform(&counts, MC_TRIALS as u64);
    if chi2 > CHI2_49_CRITICAL {
        failures.push(format!("chi-square {chi2}"));
    }

    // Var_pi[chi] at n = 3 from stationary samples.
    let g3 = GasketGraph::normal(3);
    let sampler = StationarySampler::new(&g3).unwrap();
    let cells = cell_midpoint_indices(3).unwrap();
    let xs: Vec<f64> = (0..MC_TRIALS as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(33);
            rng.set_stream(i);
            let s = sampler.sample(&mut rng).unwrap();
            let sum: i64 = cells
                .iter()
                .map(|m| 1 - 2 * (m.iter().map(|&v| s.chips()[v]).sum::<u64>() % 2) as i64)
                .sum();
            sum as f64 / cells.len() as f64
        })
        .collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let dev2: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let var = dev2.iter().sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let var_se = ((m4 - var * var) / n).sqrt();
    if (var - 1.0 / 9.0).abs() > SIGMAS * var_se {
        failures.push(format!("Var {var} +- {var_se}"));
    }

    let pass = failures.is_empty();
    report(
        8,
        pass,
        &format!("{}; chi2 = {chi2:.1}; Var = {var:.4} +- {var_se:.4}", lines.join(", ")),
    );
    assert!(pass, "{failures:?}");
}

#[test]
fn criterion_9_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut pass = true;

    // Conservation and abelianness on random configurations.
    for k in 0..100 {
        let level = k % 4;
        let boundary = if k % 5 == 0 {
            BoundaryCondition::CornerSink(gasketpile::Corner::Top)
        } else {
            BoundaryCondition::Normal
        };
        let g = GasketGraph::new(level as u32, boundary);
        let chips = (0..g.len()).map(|_| rng.random_range(0..12)).collect();
        let c = Configuration::new(&g, chips).unwrap();
        let (a, oa) = stabilize(&g, &c, &[]).unwrap();
        let (b, ob) = stabilize_random_order(&g, &c, &[], &mut rng).unwrap();
        pass &= a == b && oa == ob;
        pass &= conservation_holds(&g, &c, &a, &oa) && conservation_holds(&g, &c, &b, &ob);
    }

    // Burning test against recurrent representatives over all stable
    // configurations of G_0.
    let g0 = GasketGraph::normal(0);
    for k in 0..64u64 {
        let chips = vec![k % 4, k / 4 % 4, k / 16];
        let c = Configuration::new(&g0, chips.clone()).unwrap();
        let x = IntegerClassVector::from_i64(&chips.iter().map(|&v| v as i64).collect::<Vec<_>>());
        let rep = recurrent_rep(&g0, &x).unwrap();
        pass &= is_recurrent(&g0, &c).unwrap() == (rep == c);
    }
    report(9, pass, "conservation, abelianness (100 configs), burning on G_0");
    assert!(pass);
}
