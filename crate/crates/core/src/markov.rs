//! The sandpile Markov chain: one step draws a vertex uniformly from `V`
//! plus the sink, adds a chip there and stabilizes; a sink draw changes
//! nothing.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::gasket::{vertex_count, GasketGraph};
use crate::sandpile::{identity, stabilize, ClassReducer, Configuration};
use crate::snf::smith_normal_form;
use crate::spectral::{cell_midpoint_indices, distinguishing_from_cells, one_minus_over};
use crate::{Error, Result};

/// A running chain. Trajectory `stream` of master seed `seed` draws from a
/// ChaCha8 stream of its own, so trajectories do not depend on scheduling.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub config: Configuration,
    pub steps: u64,
    pub seed: u64,
    pub stream: u64,
    rng: ChaCha8Rng,
}

impl ChainState {
    pub fn new(config: Configuration, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            config,
            steps: 0,
            seed,
            stream,
            rng,
        }
    }

    /// One step; returns the vertex that received the chip, `None` for a
    /// sink draw.
    pub fn step(&mut self, graph: &GasketGraph) -> Result<Option<usize>> {
        let draw = self.rng.random_range(0..=graph.len());
        self.steps += 1;
        if draw == graph.len() {
            return Ok(None);
        }
        self.config.add_at(draw, 1)?;
        self.config = stabilize(graph, &self.config, &[])?.0;
        Ok(Some(draw))
    }

    pub fn run(&mut self, graph: &GasketGraph, steps: u64) -> Result<()> {
        for _ in 0..steps {
            self.step(graph)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl Estimate {
    /// Sample mean and standard error, summed in index order.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / n).sqrt(),
            trials: xs.len(),
        }
    }
}

/// `E[chi(eta_t)]` over `trials` chains started at the identity of `G_n`.
pub fn estimate_chi_decay(level: u32, t: u64, trials: usize, seed: u64) -> Result<Estimate> {
    if level < 2 || trials < 100 {
        return Err(Error::Precondition("needs level >= 2 and at least 100 trials".into()));
    }
    let graph = GasketGraph::normal(level);
    let id = identity(&graph)?;
    let cells = cell_midpoint_indices(level)?;
    let samples: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut chain = ChainState::new(id.clone(), seed, i);
            chain.run(&graph, t)?;
            Ok(distinguishing_from_cells(&cells, chain.config.chips()))
        })
        .collect::<Result<_>>()?;
    Ok(Estimate::from_samples(&samples))
}

#[derive(Debug, Clone, Serialize)]
pub struct Simulation {
    pub level: u32,
    pub steps: u64,
    pub seed: u64,
    pub trials: usize,
    /// End state of trajectory 0.
    pub final_config: Configuration,
    /// `chi` over the end states; absent at level 0.
    pub statistic: Option<Estimate>,
    /// `(1 - 6/(|V|+1))^steps`; absent at level 0.
    pub expected: Option<f64>,
}

/// `trials` chains from the identity of `G_n`, `steps` steps each.
pub fn simulate(level: u32, steps: u64, seed: u64, trials: usize) -> Result<Simulation> {
    if trials == 0 {
        return Err(Error::Precondition("needs at least one trial".into()));
    }
    let graph = GasketGraph::normal(level);
    let id = identity(&graph)?;
    let finals: Vec<Configuration> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut chain = ChainState::new(id.clone(), seed, i);
            chain.run(&graph, steps)?;
            Ok(chain.config)
        })
        .collect::<Result<_>>()?;
    let (statistic, expected) = if level >= 1 {
        let cells = cell_midpoint_indices(level)?;
        let xs: Vec<f64> = finals
            .iter()
            .map(|c| distinguishing_from_cells(&cells, c.chips()))
            .collect();
        let lambda = one_minus_over(level, 6).to_f64().unwrap_or(0.0);
        (
            Some(Estimate::from_samples(&xs)),
            Some(lambda.powi(i32::try_from(steps).unwrap_or(i32::MAX))),
        )
    } else {
        (None, None)
    };
    Ok(Simulation {
        level,
        steps,
        seed,
        trials,
        final_config: finals.into_iter().next().expect("trials > 0"),
        statistic,
        expected,
    })
}

/// Exact uniform sampling from the recurrent configurations: uniform Smith
/// coordinates `c_i in [0, d_i)`, the class `U c`, then its recurrent
/// representative.
#[derive(Debug, Clone)]
pub struct StationarySampler {
    reducer: ClassReducer,
    factors: Vec<BigInt>,
    u: crate::matrix::BigMatrix,
}

impl StationarySampler {
    pub fn new(graph: &GasketGraph) -> Result<Self> {
        let s = smith_normal_form(&graph.reduced_laplacian());
        Ok(Self {
            reducer: ClassReducer::new(graph)?,
            factors: s.diagonal(),
            u: s.u,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Configuration> {
        let c: Vec<BigInt> = self
            .factors
            .iter()
            .map(|d| {
                let d = d.to_u64().ok_or_else(|| {
                    Error::Precondition(format!("invariant factor {d} exceeds u64"))
                })?;
                Ok(BigInt::from(rng.random_range(0..d)))
            })
            .collect::<Result<_>>()?;
        let x = self.u.mul_vec(&c)?;
        self.reducer.rep(&crate::sandpile::IntegerClassVector { entries: x })
    }
}

pub fn sample_stationary(graph: &GasketGraph, seed: u64) -> Result<Configuration> {
    StationarySampler::new(graph)?.sample(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// `R(t) = 3^(n-1) (1 - 6/(|V_n|+1))^(2t)`. Exact in rationals while
/// `2t <= EXACT_POWER_LIMIT`, in logarithms beyond.
pub fn r_curve(level: u32, t: u64) -> Result<f64> {
    if level == 0 {
        return Err(Error::InvalidLevel {
            level,
            reason: "R(t) needs level >= 1",
        });
    }
    let base = one_minus_over(level, 6);
    let scale = 3u64.pow(level - 1);
    if 2 * t <= EXACT_POWER_LIMIT {
        // The base is reduced, so its powers are too.
        let e = 2 * t as usize;
        let r = BigRational::new_raw(
            num_traits::pow(base.numer().clone(), e) * scale,
            num_traits::pow(base.denom().clone(), e),
        );
        return Ok(r.to_f64().unwrap_or(0.0));
    }
    let ln = (scale as f64).ln() + 2.0 * t as f64 * base.to_f64().unwrap_or(0.0).ln();
    Ok(ln.exp())
}

pub const EXACT_POWER_LIMIT: u64 = 20_000;

/// `1 - 4 / (4 + R(t))`.
pub fn tv_lower_bound(level: u32, t: u64) -> Result<f64> {
    let r = r_curve(level, t)?;
    Ok(1.0 - 4.0 / (4.0 + r))
}

/// `c = log(10^6) / 12`.
pub fn lower_bound_constant() -> f64 {
    1e6f64.ln() / 12.0
}

/// `(|V|/12) log|V| - c |V|`, unclamped.
pub fn lower_bound_t_raw(level: u32) -> f64 {
    let v = vertex_count(level) as f64;
    v / 12.0 * v.ln() - lower_bound_constant() * v
}

/// `(5/4)(|V|+1) log(34 |V|)`.
pub fn upper_bound_t(level: u32) -> f64 {
    let v = vertex_count(level) as f64;
    1.25 * (v + 1.0) * (34.0 * v).ln()
}

#[derive(Debug, Clone, Serialize)]
pub struct RPoint {
    pub t: u64,
    pub r: f64,
    pub tv_lower: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChiDecayPoint {
    pub t: u64,
    pub expected: f64,
    pub estimate: Estimate,
    pub within_three_sigma: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingReport {
    pub level: u32,
    pub vertices: u64,
    /// Clamped at 0; the bound is vacuous while the raw value is negative.
    pub lower_bound_t: f64,
    pub lower_bound_raw: f64,
    pub upper_bound_t: f64,
    pub r_curve: Vec<RPoint>,
    pub monte_carlo: Vec<ChiDecayPoint>,
}

#[derive(Debug, Clone)]
pub struct MonteCarloOptions {
    pub times: Vec<u64>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        Self {
            times: vec![1, 5, 10, 25],
            trials: 10_000,
            seed: 0,
        }
    }
}

/// Both analytic bounds, `R(t)` on a grid up to the upper bound, and
/// optionally Monte-Carlo estimates of the character decay.
pub fn mixing_report(level: u32, monte_carlo: Option<&MonteCarloOptions>) -> Result<MixingReport> {
    if level < 2 {
        return Err(Error::InvalidLevel {
            level,
            reason: "the mixing report needs level >= 2",
        });
    }
    let upper = upper_bound_t(level);
    let raw = lower_bound_t_raw(level);
    let points = 16u64;
    let r_curve = (0..=points)
        .map(|k| {
            let t = (upper * k as f64 / points as f64).round() as u64;
            Ok(RPoint {
                t,
                r: r_curve(level, t)?,
                tv_lower: tv_lower_bound(level, t)?,
            })
        })
        .collect::<Result<_>>()?;
    let monte_carlo = match monte_carlo {
        None => Vec::new(),
        Some(opts) => {
            let lambda = one_minus_over(level, 6).to_f64().unwrap_or(0.0);
            opts.times
                .iter()
                .map(|&t| {
                    let estimate = estimate_chi_decay(level, t, opts.trials, opts.seed)?;
                    let expected = lambda.powi(t as i32);
                    Ok(ChiDecayPoint {
                        t,
                        expected,
                        estimate,
                        within_three_sigma: (estimate.mean - expected).abs()
                            <= 3.0 * estimate.stderr,
                    })
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(MixingReport {
        level,
        vertices: vertex_count(level),
        lower_bound_t: raw.max(0.0),
        lower_bound_raw: raw,
        upper_bound_t: upper,
        r_curve,
        monte_carlo,
    })
}

/// The chain on the full recurrent set, enumerated as the closure of the
/// identity under `(+) delta_v`.
#[derive(Debug, Clone)]
pub struct ExactChain {
    graph: GasketGraph,
    states: Vec<Configuration>,
    /// `next[s][v]`: state index of `states[s] (+) delta_v`.
    next: Vec<Vec<usize>>,
    identity: usize,
}

impl ExactChain {
    /// Fails when more than `cap` recurrent configurations are found.
    pub fn new(graph: &GasketGraph, cap: usize) -> Result<Self> {
        let id = identity(graph)?;
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut states = vec![id.clone()];
        index.insert(id.chips().to_vec(), 0);
        let mut next = Vec::new();
        let mut s = 0;
        while s < states.len() {
            let mut row = Vec::with_capacity(graph.len());
            for v in 0..graph.len() {
                let mut c = states[s].clone();
                c.add_at(v, 1)?;
                let (c, _) = stabilize(graph, &c, &[])?;
                let len = states.len();
                let j = *index.entry(c.chips().to_vec()).or_insert(len);
                if j == len {
                    if len >= cap {
                        return Err(Error::CapExceeded {
                            order: format!("> {cap}"),
                            cap: cap as u64,
                        });
                    }
                    states.push(c);
                }
                row.push(j);
            }
            next.push(row);
            s += 1;
        }
        Ok(Self {
            graph: graph.clone(),
            states,
            next,
            identity: 0,
        })
    }

    pub fn graph(&self) -> &GasketGraph {
        &self.graph
    }

    pub fn states(&self) -> &[Configuration] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, c: &Configuration) -> Option<usize> {
        self.states.iter().position(|s| s == c)
    }

    /// `P^t(id, .)` for `t = 0..=max_t`.
    pub fn distributions(&self, max_t: u64) -> Vec<Vec<f64>> {
        let w = 1.0 / (self.graph.len() as f64 + 1.0);
        let mut p = vec![0.0; self.len()];
        p[self.identity] = 1.0;
        let mut out = vec![p.clone()];
        for _ in 0..max_t {
            let mut q = vec![0.0; self.len()];
            for (s, &mass) in p.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                q[s] += mass * w;
                for &j in &self.next[s] {
                    q[j] += mass * w;
                }
            }
            out.push(q.clone());
            p = q;
        }
        out
    }

    /// `(l2, tv)` distances to uniform for `t = 0..=max_t`.
    pub fn distances(&self, max_t: u64) -> Vec<(f64, f64)> {
        let u = 1.0 / self.len() as f64;
        self.distributions(max_t)
            .iter()
            .map(|p| {
                let l2 = p.iter().map(|x| (x - u).powi(2)).sum::<f64>().sqrt();
                let tv = 0.5 * p.iter().map(|x| (x - u).abs()).sum::<f64>();
                (l2, tv)
            })
            .collect()
    }
}

/// Exact `E_pi[chi]` and `Var_pi[chi]` by averaging over an [`ExactChain`]'s
/// states, for cross-checks on small levels.
pub fn exact_chi_moments(level: u32, chain: &ExactChain) -> Result<(BigRational, BigRational)> {
    let cells = cell_midpoint_indices(level)?;
    let n = BigRational::from_integer(BigInt::from(chain.len()));
    let k = BigInt::from(cells.len());
    let mut sum = BigRational::zero();
    let mut sq = BigRational::zero();
    for s in chain.states() {
        let total: i64 = cells
            .iter()
            .map(|m| 1 - 2 * (m.iter().map(|&v| s.chips()[v]).sum::<u64>() % 2) as i64)
            .sum();
        let x = BigRational::new(total.into(), k.clone());
        sq += &x * &x;
        sum += x;
    }
    let mean = sum / &n;
    let var = sq / &n - &mean * &mean;
    Ok((mean, var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sandpile::is_recurrent;

    #[test]
    fn sink_draw_is_lazy() {
        let g = GasketGraph::normal(2);
        let id = identity(&g).unwrap();
        let mut seed = 0;
        loop {
            let mut chain = ChainState::new(id.clone(), seed, 0);
            if chain.step(&g).unwrap().is_none() {
                assert_eq!(chain.config, id);
                assert_eq!(chain.steps, 1);
                break;
            }
            seed += 1;
        }
    }

    #[test]
    fn chain_stays_recurrent() {
        let g = GasketGraph::normal(2);
        let mut chain = ChainState::new(Configuration::max_stable(&g), 3, 0);
        for _ in 0..500 {
            chain.step(&g).unwrap();
            assert!(is_recurrent(&g, &chain.config).unwrap());
        }
    }

    #[test]
    fn equal_seeds_equal_trajectories() {
        let g = GasketGraph::normal(2);
        let id = identity(&g).unwrap();
        let mut a = ChainState::new(id.clone(), 11, 4);
        let mut b = ChainState::new(id.clone(), 11, 4);
        let mut c = ChainState::new(id, 11, 5);
        let mut differs = false;
        for _ in 0..50 {
            assert_eq!(a.step(&g).unwrap(), b.step(&g).unwrap());
            assert_eq!(a.config, b.config);
            c.step(&g).unwrap();
            differs |= c.config != a.config;
        }
        assert!(differs);
    }

    #[test]
    fn chi_decay_at_time_zero() {
        let e = estimate_chi_decay(3, 0, 100, 1).unwrap();
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.stderr, 0.0);
        assert!(estimate_chi_decay(1, 0, 100, 1).is_err());
    }

    #[test]
    fn chi_decay_is_deterministic() {
        let a = estimate_chi_decay(2, 5, 200, 9).unwrap();
        let b = estimate_chi_decay(2, 5, 200, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn r_curve_values() {
        assert!((tv_lower_bound(3, 0).unwrap() - 9.0 / 13.0).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for t in 0..50 {
            let r = r_curve(3, t).unwrap();
            assert!(r < prev);
            prev = r;
        }
        // Exact and logarithmic evaluation agree across the switch.
        let t = EXACT_POWER_LIMIT / 2;
        let exact = r_curve(2, t).unwrap();
        let approx = (2.0 * t as f64 * (5.0f64 / 8.0).ln() + 3f64.ln()).exp();
        assert!((exact - approx).abs() <= 1e-12 * approx.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn report_bounds() {
        let r = mixing_report(2, None).unwrap();
        assert!((r.upper_bound_t - 1.25 * 16.0 * (510f64).ln()).abs() < 1e-9);
        assert!(r.lower_bound_raw < 0.0);
        assert_eq!(r.lower_bound_t, 0.0);
        for level in 2..=12 {
            let r = mixing_report(level, None).unwrap();
            assert!(r.lower_bound_t < r.upper_bound_t);
        }
        assert!(mixing_report(1, None).is_err());
    }

    #[test]
    fn triangle_exact_chain() {
        let g = GasketGraph::normal(0);
        let chain = ExactChain::new(&g, 1000).unwrap();
        assert_eq!(chain.len(), 50);
        let d = chain.distances(3);
        assert!((d[0].0.powi(2) - 49.0 / 50.0).abs() < 1e-12);
        assert!(d.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn sampler_is_recurrent() {
        for level in 0..=3 {
            let g = GasketGraph::normal(level);
            let s = StationarySampler::new(&g).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(level as u64);
            for _ in 0..20 {
                assert!(is_recurrent(&g, &s.sample(&mut rng).unwrap()).unwrap());
            }
        }
    }
}
