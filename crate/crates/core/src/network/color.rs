use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{condition_on_mutations, EventKind, MarkedTrajectory, ModelParams};
use crate::stats::CompensatedSum;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Attachment {
    Root,
    /// Split off `lineage` at `time`.
    Branch { lineage: usize, time: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndKind {
    Death,
    /// Ends at the mutation point with this index (time order).
    Mutation(usize),
    /// Merged into another lineage, which continues.
    CoalescedInto(usize),
    /// Still alive when the observed path ends.
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lineage {
    pub birth: f64,
    pub end: f64,
    pub parent: Attachment,
    pub end_kind: EndKind,
}

impl Lineage {
    pub fn length(&self) -> f64 {
        self.end - self.birth
    }
}

/// The time-embedded lineages of one color. Times are those of the
/// underlying trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorNetwork {
    pub trajectory: MarkedTrajectory,
    pub lineages: Vec<Lineage>,
    /// `(lineage, time)` of each mutation, in time order.
    pub mutation_points: Vec<(usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focal_point: Option<(usize, f64)>,
}

impl ColorNetwork {
    /// Realizes lineage identities along a trajectory: births split a
    /// uniform alive lineage, deaths and mutations hit a uniform alive
    /// lineage, coalescences merge a uniform pair.
    pub fn realize<R: Rng + ?Sized>(trajectory: MarkedTrajectory, rng: &mut R) -> Result<Self> {
        let t0 = trajectory.start_time;
        let mut lineages: Vec<Lineage> = (0..trajectory.initial_state)
            .map(|_| Lineage {
                birth: t0,
                end: f64::NAN,
                parent: Attachment::Root,
                end_kind: EndKind::Open,
            })
            .collect();
        let mut alive: Vec<usize> = (0..lineages.len()).collect();
        let mut mutation_points = Vec::new();
        for e in &trajectory.events {
            if alive.is_empty() {
                return Err(Error::Structure("event after absorption".into()));
            }
            let t = e.time;
            match e.kind {
                EventKind::Birth => {
                    let a = alive[rng.random_range(0..alive.len())];
                    lineages.push(Lineage {
                        birth: t,
                        end: f64::NAN,
                        parent: Attachment::Branch { lineage: a, time: t },
                        end_kind: EndKind::Open,
                    });
                    alive.push(lineages.len() - 1);
                }
                EventKind::Death | EventKind::Mutation => {
                    let i = rng.random_range(0..alive.len());
                    let l = alive.swap_remove(i);
                    lineages[l].end = t;
                    lineages[l].end_kind = if e.kind == EventKind::Death {
                        EndKind::Death
                    } else {
                        mutation_points.push((l, t));
                        EndKind::Mutation(mutation_points.len() - 1)
                    };
                }
                EventKind::Coalescence => {
                    let k = alive.len();
                    if k < 2 {
                        return Err(Error::Structure("coalescence with one lineage".into()));
                    }
                    let i = rng.random_range(0..k);
                    let mut j = rng.random_range(0..k - 1);
                    if j >= i {
                        j += 1;
                    }
                    let target = alive[j];
                    let l = alive.swap_remove(i);
                    lineages[l].end = t;
                    lineages[l].end_kind = EndKind::CoalescedInto(target);
                }
            }
        }
        if !alive.is_empty() {
            let end = trajectory
                .end_time
                .ok_or_else(|| Error::Structure("absorbed trajectory left lineages alive".into()))?;
            for l in alive {
                lineages[l].end = end;
            }
        }
        Ok(Self {
            trajectory,
            lineages,
            mutation_points,
            focal_point: None,
        })
    }

    pub fn mutation_count(&self) -> usize {
        self.mutation_points.len()
    }

    /// Total lineage length (equals `L` of the trajectory up to rounding).
    pub fn length(&self) -> f64 {
        let mut s = CompensatedSum::new();
        self.lineages.iter().for_each(|l| s.add(l.length()));
        s.value()
    }

    /// Lineages alive at `t` (right-continuous).
    pub fn alive_at(&self, t: f64) -> Vec<usize> {
        (0..self.lineages.len())
            .filter(|&i| {
                let l = &self.lineages[i];
                l.birth <= t && t < l.end
            })
            .collect()
    }

    /// Checks the alive-count process and mutation points against the
    /// trajectory.
    pub fn check_consistency(&self) -> Result<()> {
        let tr = &self.trajectory;
        for (a, b, k) in tr.holdings() {
            if b > a {
                let mid = 0.5 * (a + b);
                let n = self.alive_at(mid).len() as u64;
                if n != k {
                    return Err(Error::Structure(format!("{n} lineages alive at {mid}, state is {k}")));
                }
            }
        }
        let times: Vec<f64> = tr.mutation_times().collect();
        let pts: Vec<f64> = self.mutation_points.iter().map(|p| p.1).collect();
        if times != pts {
            return Err(Error::Structure("mutation points differ from mutation marks".into()));
        }
        let (l, len) = (tr.integral(), self.length());
        if (l - len).abs() > 1e-9 * l.max(1.0) {
            return Err(Error::Structure(format!("lineage length {len} differs from L = {l}")));
        }
        Ok(())
    }
}

/// A color network with exactly `m` mutations, by rejection.
pub fn decorate<R: Rng + ?Sized>(
    params: &ModelParams,
    m: usize,
    rng: &mut R,
    max_retries: u64,
) -> Result<ColorNetwork> {
    let tr = condition_on_mutations(params, m, rng, max_retries)?;
    ColorNetwork::realize(tr, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RngStream;

    #[test]
    fn realized_networks_are_consistent() {
        let p = ModelParams::new(0.3, 0.4, 0.5).unwrap();
        let mut r = RngStream::new(4, 0).rng();
        for m in 0..4 {
            for _ in 0..200 {
                let c = decorate(&p, m, &mut r, 1_000_000).unwrap();
                c.check_consistency().unwrap();
                assert_eq!(c.mutation_count(), m);
                if m == 0 {
                    assert!(c.trajectory.events.iter().all(|e| e.kind != EventKind::Mutation));
                }
            }
        }
    }
}
