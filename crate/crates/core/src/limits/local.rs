use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytics::{pgf_from_state, NuCirc, TiltedPmf};
use crate::model::{paste_with_params, simulate_trajectory, EventKind, MarkedTrajectory, ModelParams};
use crate::network::{ColorNetwork, DecorationPool, NetworkSampler};
use crate::{Error, Result};

const DEFAULT_RETRIES: u64 = 10_000_000;

/// A draw together with its importance weight (1 for exact draws).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weighted<T> {
    pub value: T,
    pub weight: f64,
}

/// Samplers for the network containing a uniform point (focal) and for
/// the network containing the mutation leading to it (spinal).
///
/// The bias `ζ^M` is applied by rejection when `ζ ≤ 1`. For `ζ > 1` each
/// draw is returned once with weight `ζ^M`.
#[derive(Debug, Clone)]
pub struct FocalSampler {
    pub params: ModelParams,
    pub zeta: f64,
    pub nu: NuCirc,
    pub max_retries: u64,
}

impl FocalSampler {
    pub fn new(params: &ModelParams, zeta: f64) -> Result<Self> {
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(Error::InvalidArgument(format!("zeta must be positive, got {zeta}")));
        }
        Ok(Self {
            params: *params,
            zeta,
            nu: NuCirc::new(params, 1e-16)?,
            max_retries: DEFAULT_RETRIES,
        })
    }

    pub fn weighted(&self) -> bool {
        self.zeta > 1.0
    }

    fn biased<R, F>(&self, rng: &mut R, what: &str, mut draw: F) -> Result<Weighted<MarkedTrajectory>>
    where
        R: Rng + ?Sized,
        F: FnMut(&mut R) -> Result<(MarkedTrajectory, usize)>,
    {
        if self.weighted() {
            let (t, m) = draw(rng)?;
            return Ok(Weighted {
                value: t,
                weight: self.zeta.powi(m as i32),
            });
        }
        for _ in 0..self.max_retries {
            let (t, m) = draw(rng)?;
            if self.zeta == 1.0 || rng.random::<f64>() < self.zeta.powi(m as i32) {
                return Ok(Weighted { value: t, weight: 1.0 });
            }
        }
        Err(Error::RetriesExhausted {
            what: what.into(),
            attempts: self.max_retries,
            accepted: 0,
            rate: 0.0,
        })
    }

    /// `X′_K ≀ X″_K` with `K ~ ν∘`, realized, with the focal point uniform
    /// among the lineages alive at time 0.
    pub fn focal<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Weighted<ColorNetwork>> {
        let p = self.params;
        let t = self.biased(rng, "focal network", |r| {
            let k = self.nu.sample(r);
            let x1 = simulate_trajectory(&p, k, r, None)?;
            let x2 = simulate_trajectory(&p, k, r, None)?;
            let t = paste_with_params(&p, &x1, &x2, EventKind::Death, r)?;
            let m = t.mutation_count();
            Ok((t, m))
        })?;
        let mut net = ColorNetwork::realize(t.value, rng)?;
        let alive = net.alive_at(0.0);
        let l = alive[rng.random_range(0..alive.len())];
        net.focal_point = Some((l, 0.0));
        Ok(Weighted {
            value: net,
            weight: t.weight,
        })
    }

    /// `X′_K ≀ X″_{K−1}` with a mutation at time 0, which is the focal point.
    pub fn spinal<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Weighted<ColorNetwork>> {
        let p = self.params;
        let t = self.biased(rng, "spinal network", |r| {
            let k = self.nu.sample(r);
            let x1 = simulate_trajectory(&p, k, r, None)?;
            let x2 = if k == 1 {
                MarkedTrajectory::empty()
            } else {
                simulate_trajectory(&p, k - 1, r, None)?
            };
            let t = paste_with_params(&p, &x1, &x2, EventKind::Mutation, r)?;
            // The forced mutation is not part of the bias.
            let m = t.mutation_count() - 1;
            Ok((t, m))
        })?;
        let mut net = ColorNetwork::realize(t.value, rng)?;
        let &(l, time) = net
            .mutation_points
            .iter()
            .find(|(_, s)| *s == 0.0)
            .ok_or_else(|| Error::Structure("no mutation at time 0".into()))?;
        net.focal_point = Some((l, time));
        Ok(Weighted {
            value: net,
            weight: t.weight,
        })
    }
}

pub fn sample_focal_network<R: Rng + ?Sized>(
    params: &ModelParams,
    zeta: f64,
    rng: &mut R,
) -> Result<Weighted<ColorNetwork>> {
    FocalSampler::new(params, zeta)?.focal(rng)
}

pub fn sample_spinal_network<R: Rng + ?Sized>(
    params: &ModelParams,
    zeta: f64,
    rng: &mut R,
) -> Result<Weighted<ColorNetwork>> {
    FocalSampler::new(params, zeta)?.spinal(rng)
}

/// Law of the number `N` of same-color lineages alive at the focal point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbN {
    pub zeta: f64,
    /// `pmf[i] = P(N = i+1)`.
    pub pmf: Vec<f64>,
    /// Bound on the relative mass beyond the table.
    pub tail: f64,
}

impl ProbN {
    pub fn prob(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.pmf.get(k as usize - 1).copied().unwrap_or(0.0)
    }
}

/// `P(N = k) ∝ ν∘(k) E_k[ζ^M] E_k[ζ^M] / Π_{j≤k} (1 − p_j + p_j ζ)`,
/// `p_j = μ/ρ_j`, normalized numerically over `k`.
///
/// The second pgf factor belongs to the reversed path. Its down-jumps are the
/// births of the forward path and carry fresh marks, which removes one
/// mark factor per level `j ≤ k`.
pub fn prob_n_table(params: &ModelParams, zeta: f64, tol: f64) -> Result<ProbN> {
    let nu = NuCirc::new(params, tol.min(1e-14))?;
    if zeta == 1.0 {
        return Ok(ProbN {
            zeta,
            pmf: nu.pmf.clone(),
            tail: nu.tail_bound,
        });
    }
    let mut marks = 1.0;
    let mut w = Vec::with_capacity(nu.pmf.len());
    for (i, &q) in nu.pmf.iter().enumerate() {
        let k = i + 1;
        let p = params.mu / params.rho_of(k as u64);
        marks *= 1.0 - p + p * zeta;
        let e = pgf_from_state(params, k, zeta, 1e-13)?.mid();
        w.push(q * e * e / marks);
    }
    let s: f64 = w.iter().sum();
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Structure(format!("prob_N normalizer is {s}")));
    }
    // The weights relative to ν∘ grow at most geometrically, while the
    // ν∘ tail decays faster than any geometric.
    let growth = w.last().copied().unwrap_or(0.0) / nu.pmf.last().copied().unwrap_or(1.0);
    Ok(ProbN {
        zeta,
        pmf: w.iter().map(|x| x / s).collect(),
        tail: nu.tail_bound * growth.max(1.0),
    })
}

pub fn prob_n(params: &ModelParams, zeta: f64, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    Ok(prob_n_table(params, zeta, 1e-14)?.prob(k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallVertex {
    pub decoration: ColorNetwork,
    /// `(parent vertex, mutation index in the parent)`.
    pub parent: Option<(usize, usize)>,
    /// `Some(0)` for the focal color, `Some(k)` for the `k`-th ancestor.
    pub spine_level: Option<usize>,
    /// Distance to the focal color in the color tree.
    pub depth: usize,
}

impl BallVertex {
    pub fn outdegree(&self) -> usize {
        self.decoration.mutation_count()
    }
}

/// Neighborhood of radius `r` (in the color tree) of the focal color.
/// Vertex 0 is the focal color; vertex `k ≤ r` is its `k`-th ancestor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalBall {
    pub r: usize,
    pub vertices: Vec<BallVertex>,
    /// Importance weight of the focal draw.
    pub weight: f64,
}

impl LocalBall {
    pub fn focal(&self) -> &ColorNetwork {
        &self.vertices[0].decoration
    }

    /// Lineages of the focal color alive at the focal point.
    pub fn n_focal_lineages(&self) -> usize {
        let c = self.focal();
        let t = c.focal_point.map_or(0.0, |p| p.1);
        c.alive_at(t).len()
    }

    pub fn spine(&self) -> impl Iterator<Item = &BallVertex> {
        self.vertices.iter().filter(|v| v.spine_level.is_some())
    }

    pub fn children_of(&self, v: usize) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&i| self.vertices[i].parent.is_some_and(|(p, _)| p == v))
            .collect()
    }
}

fn draw_from<R: Rng + ?Sized>(dist: &WeightedIndex<f64>, rng: &mut R) -> usize {
    dist.sample(rng)
}

/// Tables for repeated local-ball draws.
#[derive(Debug, Clone)]
pub struct LocalBallSampler {
    pub focal: FocalSampler,
    pub network: NetworkSampler,
    /// Offspring law of off-spine colors (tilted at `focal.zeta`).
    pub tilted: TiltedPmf,
}

impl LocalBallSampler {
    pub fn new(params: &ModelParams, zeta: f64) -> Result<Self> {
        let network = NetworkSampler::new(params)?;
        let tilted = if zeta == network.tilt.zeta {
            network.tilted.clone()
        } else {
            TiltedPmf::from_pmf(&network.pmf, zeta, network.pmf.pgf(zeta))
        };
        Ok(Self {
            focal: FocalSampler::new(params, zeta)?,
            network,
            tilted,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, r: usize, rng: &mut R) -> Result<LocalBall> {
        build_ball(&self.focal, &self.tilted, &self.network.pool(), r, rng)
    }
}

pub fn sample_local_ball<R: Rng + ?Sized>(params: &ModelParams, zeta: f64, r: usize, rng: &mut R) -> Result<LocalBall> {
    LocalBallSampler::new(params, zeta)?.sample(r, rng)
}

/// Samples the radius-`r` neighborhood of a uniform point in the limit
/// network: focal color, `r` ancestors with size-biased outdegrees, and
/// Galton–Watson subtrees hanging off every vertex.
fn build_ball<R: Rng + ?Sized>(
    focal: &FocalSampler,
    tilted: &TiltedPmf,
    pool: &DecorationPool<'_>,
    r: usize,
    rng: &mut R,
) -> Result<LocalBall> {
    let f = focal.focal(rng)?;
    let size_biased = WeightedIndex::new(tilted.size_biased())
        .map_err(|e| Error::InvalidArgument(format!("size-biased law: {e}")))?;

    // Spine: outdegrees first, then the conditioned decorations in one pool.
    let spine_deg: Vec<usize> = (0..r).map(|_| draw_from(&size_biased, rng)).collect();
    let mut spine = pool.decorations(&spine_deg, rng)?.into_iter();

    let mut vertices = vec![BallVertex {
        decoration: f.value,
        parent: None,
        spine_level: Some(0),
        depth: 0,
    }];
    // Mutation slots of spine vertices that carry off-spine subtrees.
    let mut frontier: Vec<(usize, usize)> = (0..vertices[0].outdegree()).map(|s| (0, s)).collect();
    for (k, &deg) in spine_deg.iter().enumerate() {
        let level = k + 1;
        let slot = rng.random_range(0..deg);
        vertices[level - 1].parent = Some((level, slot));
        vertices.push(BallVertex {
            decoration: spine.next().expect("one decoration per spine vertex"),
            parent: None,
            spine_level: Some(level),
            depth: level,
        });
        frontier.extend((0..deg).filter(|&s| s != slot).map(|s| (level, s)));
    }

    // Off-spine subtrees, breadth first, up to color-tree distance r.
    while !frontier.is_empty() {
        let mut next_parents = Vec::new();
        let mut degs = Vec::new();
        for &(p, s) in &frontier {
            let depth = vertices[p].depth + 1;
            if depth > r {
                continue;
            }
            next_parents.push((p, s, depth));
            degs.push(tilted.sample(rng));
        }
        let decorations = pool.decorations(&degs, rng)?;
        frontier.clear();
        for ((p, s, depth), d) in next_parents.into_iter().zip(decorations) {
            let id = vertices.len();
            let deg = d.mutation_count();
            vertices.push(BallVertex {
                decoration: d,
                parent: Some((p, s)),
                spine_level: None,
                depth,
            });
            frontier.extend((0..deg).map(|s| (id, s)));
        }
    }
    Ok(LocalBall {
        r,
        vertices,
        weight: f.weight,
    })
}
