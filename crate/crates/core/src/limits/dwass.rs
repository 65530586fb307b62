use serde::{Deserialize, Serialize};

use crate::analytics::TiltedPmf;

/// `P(Â_n)`: probability that the tilted Galton–Watson tree has `n` vertices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeProbability {
    pub n: usize,
    pub value: f64,
    /// Bound on the contribution of discarded mass.
    pub error_bar: f64,
    pub flagged: bool,
}

/// `P(Â_n) = P(M̂_1 + … + M̂_n = n − 1) / n` for `n = 1..=n_max`, by
/// iterated convolution. Sums above `n_max − 1` are dropped exactly (they
/// cannot return); entries below `1e−16/n_max` are discarded and their mass
/// is added to the error bar.
pub fn gw_size_probabilities(pmf: &TiltedPmf, n_max: usize) -> Vec<SizeProbability> {
    assert!(n_max >= 1);
    let q = &pmf.probs;
    let cap = n_max - 1;
    let floor = 1e-16 / n_max as f64;
    let mut dist = vec![0.0; cap + 1];
    let (mut lo, mut hi) = (0usize, 0usize);
    dist[0] = 1.0;
    let mut discarded = 0.0;
    let mut next = vec![0.0; cap + 1];
    let mut out = Vec::with_capacity(n_max);
    for k in 1..=n_max {
        let new_hi = (hi + q.len() - 1).min(cap);
        next[lo..=new_hi].iter_mut().for_each(|x| *x = 0.0);
        for s in lo..=hi {
            let a = dist[s];
            if a == 0.0 {
                continue;
            }
            let top = (cap - s).min(q.len() - 1);
            for (m, &p) in q[..=top].iter().enumerate() {
                next[s + m] += a * p;
            }
        }
        std::mem::swap(&mut dist, &mut next);
        hi = new_hi;
        while lo < hi && dist[lo] < floor {
            discarded += dist[lo];
            dist[lo] = 0.0;
            lo += 1;
        }
        while hi > lo && dist[hi] < floor {
            discarded += dist[hi];
            dist[hi] = 0.0;
            hi -= 1;
        }
        let value = if (lo..=hi).contains(&(k - 1)) { dist[k - 1] / k as f64 } else { 0.0 };
        let error_bar = discarded + k as f64 * pmf.dropped_mass;
        out.push(SizeProbability {
            n: k,
            value,
            error_bar,
            flagged: error_bar > 1e-3 * value,
        });
    }
    out
}

pub fn gw_size_probability(pmf: &TiltedPmf, n: usize) -> SizeProbability {
    *gw_size_probabilities(pmf, n).last().unwrap()
}
