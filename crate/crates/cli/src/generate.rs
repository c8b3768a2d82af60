//! Seeded random instance families.

use clap::ValueEnum;
use mptsp_core::exact::ExactLimits;
use mptsp_core::graph::is_connected;
use mptsp_core::{AnyInstance, Commodity, Graph, Instance, OrderedInstance};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Regeneration attempts before giving up on a seed.
pub const MAX_RETRIES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Source-sink commodities, a mix of open and closed.
    MultiPath,
    /// A cyclic order of distinct terminals.
    Ordered,
    /// Closed commodities at distinct depots.
    Vrp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GraphModel {
    /// G(n, p) conditioned on connectivity.
    ErdosRenyi { p: f64 },
    /// Uniform random recursive tree plus `extra` random chords.
    Tree { extra: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub family: Family,
    pub n_min: usize,
    pub n_max: usize,
    pub graph: GraphModel,
    /// Reject graphs with more edges than this.
    pub max_edges: Option<usize>,
    pub k_min: usize,
    pub k_max: usize,
    /// Probability that a multi-path commodity is closed (`s = t`).
    pub closed_probability: f64,
    pub seed: u64,
    pub instances: usize,
    /// Randomized runs per instance.
    pub trials: usize,
    pub workers: usize,
    /// Prepend the ten-vertex reference instance as row 0.
    pub include_fixture: bool,
    pub exact_limits: ExactLimits,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            family: Family::MultiPath,
            n_min: 4,
            n_max: 12,
            graph: GraphModel::Tree { extra: 6 },
            max_edges: Some(20),
            k_min: 1,
            k_max: 3,
            closed_probability: 0.3,
            seed: 0,
            instances: 20,
            trials: 20,
            workers: 4,
            include_fixture: false,
            exact_limits: ExactLimits::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("generation failed after {0} attempts")]
    Failed(usize),
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), GenerateError> {
        let bad = |msg: &str| Err(GenerateError::InvalidConfig(msg.to_owned()));
        if self.n_min == 0 || self.n_min > self.n_max {
            return bad("need 1 <= n_min <= n_max");
        }
        if self.k_min == 0 || self.k_min > self.k_max {
            return bad("need 1 <= k_min <= k_max");
        }
        if self.family == Family::Ordered && (self.k_max < 2 || self.n_max < 2) {
            return bad("ordered instances need k >= 2 terminals and n >= 2");
        }
        if !(0.0..=1.0).contains(&self.closed_probability) {
            return bad("closed_probability must lie in [0, 1]");
        }
        if let GraphModel::ErdosRenyi { p } = self.graph {
            if !(p > 0.0 && p <= 1.0) {
                return bad("edge probability must lie in (0, 1]");
            }
        }
        if self.max_edges.is_some_and(|m| m + 1 < self.n_min) {
            return bad("max_edges is below the spanning-tree size");
        }
        if self.workers == 0 {
            return bad("workers must be positive");
        }
        Ok(())
    }
}

/// Seed of the `index`-th generated instance of a run.
pub fn instance_seed(base: u64, index: usize) -> u64 {
    base ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn random_graph<R: Rng>(config: &BenchConfig, n: usize, rng: &mut R) -> Option<Graph> {
    let edges = match config.graph {
        GraphModel::ErdosRenyi { p } => {
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.random_bool(p) {
                        edges.push((u, v));
                    }
                }
            }
            edges
        }
        GraphModel::Tree { extra } => {
            let mut label: Vec<usize> = (0..n).collect();
            label.shuffle(rng);
            let mut edges: Vec<(usize, usize)> = (1..n)
                .map(|v| {
                    let p = rng.random_range(0..v);
                    let (a, b) = (label[v], label[p]);
                    (a.min(b), a.max(b))
                })
                .collect();
            let mut chords: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .filter(|e| !edges.contains(e))
                .collect();
            chords.shuffle(rng);
            let room = config.max_edges.map_or(usize::MAX, |m| m.saturating_sub(n - 1));
            edges.extend(chords.into_iter().take(extra.min(room)));
            edges.sort_unstable();
            edges
        }
    };
    if config.max_edges.is_some_and(|m| edges.len() > m) {
        return None;
    }
    let g = Graph::new(n, edges).expect("generated edges are simple");
    is_connected(&g).then_some(g)
}

fn random_commodities<R: Rng>(config: &BenchConfig, n: usize, rng: &mut R) -> Option<Vec<Commodity>> {
    let k = rng.random_range(config.k_min..=config.k_max);
    match config.family {
        Family::Vrp => {
            let k = k.min(n);
            Some(
                index::sample(rng, n, k)
                    .into_iter()
                    .map(|d| Commodity::new(d, d))
                    .collect(),
            )
        }
        Family::Ordered => unreachable!("ordered instances carry no commodity list"),
        Family::MultiPath => {
            let mut out: Vec<Commodity> = Vec::with_capacity(k);
            for _ in 0..k {
                let fresh = (0..100).find_map(|_| {
                    let s = rng.random_range(0..n);
                    let c = if n == 1 || rng.random_bool(config.closed_probability) {
                        Commodity::new(s, s)
                    } else {
                        let t = (s + rng.random_range(1..n)) % n;
                        Commodity::new(s, t)
                    };
                    (!out.contains(&c)).then_some(c)
                });
                out.push(fresh?);
            }
            Some(out)
        }
    }
}

/// One instance of the configured family, deterministic in `seed`.
pub fn generate(config: &BenchConfig, seed: u64) -> Result<AnyInstance, GenerateError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_RETRIES {
        let lo = if config.family == Family::Ordered {
            config.n_min.max(2)
        } else {
            config.n_min
        };
        let n = rng.random_range(lo..=config.n_max);
        let Some(graph) = random_graph(config, n, &mut rng) else {
            continue;
        };
        if config.family == Family::Ordered {
            let k = rng.random_range(config.k_min.max(2)..=config.k_max).min(n);
            let order = index::sample(&mut rng, n, k).into_vec();
            let inst = OrderedInstance::new(graph, order).expect("valid ordered instance");
            return Ok(AnyInstance::Ordered(inst));
        }
        let Some(commodities) = random_commodities(config, n, &mut rng) else {
            continue;
        };
        let inst = Instance::new(graph, commodities).expect("valid instance");
        return Ok(AnyInstance::MultiPath(inst));
    }
    Err(GenerateError::Failed(MAX_RETRIES))
}
