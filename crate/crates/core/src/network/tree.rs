use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytics::TiltedPmf;
use crate::{Error, Result};

/// A plane tree with vertices numbered in depth-first preorder; vertex 0 is
/// the root and `children[v]` is ordered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenealogyTree {
    pub children: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TreeMethod {
    Cycle,
    Rejection,
}

impl GenealogyTree {
    /// Builds the tree from its preorder outdegree sequence.
    pub fn from_lukasiewicz(degrees: &[usize]) -> Result<Self> {
        let n = degrees.len();
        let mut children = vec![Vec::new(); n];
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for (v, &d) in degrees.iter().enumerate() {
            if v > 0 {
                let top = stack
                    .last_mut()
                    .ok_or_else(|| Error::Structure("degree sequence ends early".into()))?;
                children[top.0].push(v);
                top.1 -= 1;
                if top.1 == 0 {
                    stack.pop();
                }
            }
            if d > 0 {
                stack.push((v, d));
            }
        }
        if !stack.is_empty() || n == 0 {
            return Err(Error::Structure("degree sequence is not a tree".into()));
        }
        Ok(Self { children })
    }

    pub fn len(&self) -> usize {
        self.children.len()
    }

    pub fn is_empty(&self) -> bool {
        self.children.is_empty()
    }

    pub fn outdegree(&self, v: usize) -> usize {
        self.children[v].len()
    }

    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut p = vec![None; self.len()];
        for (v, cs) in self.children.iter().enumerate() {
            for &c in cs {
                p[c] = Some(v);
            }
        }
        p
    }

    /// Depth of every vertex.
    pub fn depths(&self) -> Vec<usize> {
        let mut d = vec![0; self.len()];
        // Preorder numbering puts parents before children.
        for v in 0..self.len() {
            for &c in &self.children[v] {
                d[c] = d[v] + 1;
            }
        }
        d
    }

    pub fn height(&self) -> usize {
        self.depths().into_iter().max().unwrap_or(0)
    }

    pub fn max_outdegree(&self) -> usize {
        self.children.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// A Galton–Watson tree with offspring law `offspring` conditioned on `n`
/// vertices.
///
/// `Cycle` draws `n` i.i.d. outdegrees until they sum to `n−1` and rotates
/// them to the unique cyclic shift that is a valid preorder sequence.
/// `Rejection` grows trees and keeps the first of size `n`.
pub fn sample_genealogy_tree<R: Rng + ?Sized>(
    offspring: &TiltedPmf,
    n: usize,
    rng: &mut R,
    method: TreeMethod,
    max_retries: u64,
) -> Result<GenealogyTree> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let mut degrees = Vec::with_capacity(n);
    for _ in 0..max_retries {
        degrees.clear();
        match method {
            TreeMethod::Cycle => {
                let mut sum = 0usize;
                for _ in 0..n {
                    let d = offspring.sample(rng);
                    sum += d;
                    degrees.push(d);
                }
                if sum != n - 1 {
                    continue;
                }
                // Rotate to start just after the first minimum of the walk.
                let mut s = 0i64;
                let (mut min, mut arg) = (i64::MAX, 0);
                for (i, &d) in degrees.iter().enumerate() {
                    s += d as i64 - 1;
                    if s < min {
                        min = s;
                        arg = i;
                    }
                }
                degrees.rotate_left((arg + 1) % n);
            }
            TreeMethod::Rejection => {
                let mut pending = 1usize;
                while pending > 0 && degrees.len() < n {
                    let d = offspring.sample(rng);
                    degrees.push(d);
                    pending = pending - 1 + d;
                }
                if pending != 0 || degrees.len() != n {
                    continue;
                }
            }
        }
        return GenealogyTree::from_lukasiewicz(&degrees);
    }
    Err(Error::RetriesExhausted {
        what: format!("conditioning the color tree on {n} vertices"),
        attempts: max_retries,
        accepted: 0,
        rate: 0.0,
    })
}
