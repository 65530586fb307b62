use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{glue, sample_genealogy_tree, ColorNetwork, GenealogyTree, GluedNetwork, TreeMethod};
use crate::analytics::{offspring_pmf, tilted_offspring, zeta_tilt, OffspringPmf, TiltSolution, TiltedPmf};
use crate::model::{simulate_observed, Event, EventKind, MarkedTrajectory, ModelParams};
use crate::{Error, Result};

/// Conditioned decorations below this acceptance probability are refused.
pub const MIN_ACCEPTANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NetworkMethod {
    /// Conditioned color tree of the tilted law, then conditioned
    /// decorations.
    Tilted,
    /// Whole particle system from one lineage, rejected unless it has
    /// exactly `n` colors.
    Direct,
}

/// Draws decorations conditioned on their mutation counts from one shared
/// stream of unconditioned paths: each path is kept if its bucket still
/// needs one. Paths in a bucket are i.i.d. from the conditional law.
#[derive(Debug, Clone)]
pub struct DecorationPool<'a> {
    pub params: &'a ModelParams,
    pub pmf: &'a OffspringPmf,
}

impl DecorationPool<'_> {
    pub fn trajectories<R: Rng + ?Sized>(&self, counts: &[usize], rng: &mut R) -> Result<Vec<MarkedTrajectory>> {
        let max_m = counts.iter().copied().max().unwrap_or(0);
        let mut need = vec![0usize; max_m + 1];
        counts.iter().for_each(|&m| need[m] += 1);
        let mut budget = 10_000f64;
        for (m, &k) in need.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let p = self.pmf.probs.get(m).copied().unwrap_or(0.0);
            if p < MIN_ACCEPTANCE {
                return Err(Error::LowAcceptance {
                    what: format!("a decoration with {m} mutations"),
                    prob: p,
                });
            }
            budget = budget.max(50.0 * k as f64 / p + 10_000.0);
        }
        let mut buckets: Vec<Vec<MarkedTrajectory>> = vec![Vec::new(); max_m + 1];
        let mut remaining = counts.len();
        let mut buf: Vec<Event> = Vec::new();
        let mut attempts = 0u64;
        while remaining > 0 {
            if attempts as f64 > budget {
                return Err(Error::RetriesExhausted {
                    what: "pooled conditioned decorations".into(),
                    attempts,
                    accepted: (counts.len() - remaining) as u64,
                    rate: (counts.len() - remaining) as f64 / attempts as f64,
                });
            }
            attempts += 1;
            buf.clear();
            let mut m = 0usize;
            simulate_observed(self.params, 1, rng, None, |s| {
                if s.kind == EventKind::Mutation {
                    m += 1;
                }
                buf.push(Event {
                    time: s.time,
                    kind: s.kind,
                });
            })?;
            if m <= max_m && buckets[m].len() < need[m] {
                buckets[m].push(MarkedTrajectory {
                    initial_state: 1,
                    start_time: 0.0,
                    events: buf.clone(),
                    end_time: None,
                });
                remaining -= 1;
            }
        }
        let mut next = vec![0usize; max_m + 1];
        Ok(counts
            .iter()
            .map(|&m| {
                next[m] += 1;
                std::mem::replace(&mut buckets[m][next[m] - 1], MarkedTrajectory::empty())
            })
            .collect())
    }

    pub fn decorations<R: Rng + ?Sized>(&self, counts: &[usize], rng: &mut R) -> Result<Vec<ColorNetwork>> {
        self.trajectories(counts, rng)?
            .into_iter()
            .map(|t| ColorNetwork::realize(t, rng))
            .collect()
    }
}

/// Precomputed tilt and offspring laws for repeated network sampling.
#[derive(Debug, Clone)]
pub struct NetworkSampler {
    pub params: ModelParams,
    pub tilt: TiltSolution,
    pub pmf: OffspringPmf,
    pub tilted: TiltedPmf,
    pub max_retries: u64,
}

impl NetworkSampler {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let tilt = zeta_tilt(params, 1e-13)?;
        let tilted = tilted_offspring(params, &tilt, 1e-15)?;
        let pmf = offspring_pmf(params, tilted.probs.len() - 1, 1e-16)?;
        Ok(Self {
            params: *params,
            tilt,
            pmf,
            tilted,
            max_retries: 100_000_000,
        })
    }

    pub fn pool(&self) -> DecorationPool<'_> {
        DecorationPool {
            params: &self.params,
            pmf: &self.pmf,
        }
    }

    pub fn tree<R: Rng + ?Sized>(&self, n: usize, rng: &mut R, method: TreeMethod) -> Result<GenealogyTree> {
        sample_genealogy_tree(&self.tilted, n, rng, method, self.max_retries)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R, method: NetworkMethod) -> Result<GluedNetwork> {
        match method {
            NetworkMethod::Tilted => {
                let tree = self.tree(n, rng, TreeMethod::Cycle)?;
                let counts: Vec<usize> = (0..n).map(|v| tree.outdegree(v)).collect();
                let decorations = self.pool().decorations(&counts, rng)?;
                glue(tree, decorations)
            }
            NetworkMethod::Direct => self.sample_direct(n, rng),
        }
    }

    fn sample_direct<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<GluedNetwork> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be >= 1".into()));
        }
        let mut attempts = 0u64;
        'attempt: while attempts < self.max_retries {
            attempts += 1;
            let mut trajectories: Vec<MarkedTrajectory> = Vec::with_capacity(n);
            let mut children: Vec<Vec<usize>> = Vec::with_capacity(n);
            let mut stack: Vec<Option<usize>> = vec![None];
            let mut colors = 1usize;
            while let Some(parent) = stack.pop() {
                let tr = crate::model::simulate_trajectory(&self.params, 1, rng, None)?;
                let m = tr.mutation_count();
                let id = trajectories.len();
                trajectories.push(tr);
                children.push(Vec::new());
                if let Some(p) = parent {
                    children[p].push(id);
                }
                colors += m;
                if colors > n {
                    continue 'attempt;
                }
                stack.extend(std::iter::repeat_n(Some(id), m));
            }
            if colors != n {
                continue;
            }
            let decorations = trajectories
                .into_iter()
                .map(|t| ColorNetwork::realize(t, rng))
                .collect::<Result<Vec<_>>>()?;
            return glue(GenealogyTree { children }, decorations);
        }
        Err(Error::RetriesExhausted {
            what: format!("direct sampling of a network with {n} colors (use the tilted method)"),
            attempts,
            accepted: 0,
            rate: 0.0,
        })
    }
}

pub fn sample_network<R: Rng + ?Sized>(
    params: &ModelParams,
    n: usize,
    rng: &mut R,
    method: NetworkMethod,
) -> Result<GluedNetwork> {
    NetworkSampler::new(params)?.sample(n, rng, method)
}
