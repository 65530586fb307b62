use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Attachment, EndKind, GluedNetwork};
use crate::{Error, Result};

/// Height process of the randomized depth-first traversal, sampled on a
/// uniform grid of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub grid_size: usize,
    pub t: Vec<f64>,
    /// Distance from the root of the traversal point.
    pub h: Vec<f64>,
    /// Depth in the color tree of the color being traversed.
    pub tree_h: Vec<f64>,
    /// Largest height change between consecutive grid points within one
    /// color.
    pub resolution: f64,
}

/// Contour of one color: breakpoints `(arc length, height)`.
fn color_contour<R: Rng + ?Sized>(g: &GluedNetwork, v: usize, rng: &mut R) -> Vec<(f64, f64)> {
    let d = &g.decorations[v];
    let abs = |t: f64| g.offsets[v] + (t - d.trajectory.start_time);
    let nl = d.lineages.len();
    // Interior events of each lineage: (time, other lineage, is_branch).
    let mut interior: Vec<Vec<(f64, usize, bool)>> = vec![Vec::new(); nl];
    for (j, l) in d.lineages.iter().enumerate() {
        if let Attachment::Branch { lineage, time } = l.parent {
            interior[lineage].push((time, j, true));
        }
        if let EndKind::CoalescedInto(t) = l.end_kind {
            interior[t].push((l.end, j, false));
        }
    }
    // Pieces: lineage j is cut at its interior events.
    let mut first_piece = vec![0usize; nl];
    let mut piece_span: Vec<(f64, f64)> = Vec::new();
    for (j, l) in d.lineages.iter().enumerate() {
        interior[j].sort_by(|a, b| a.0.total_cmp(&b.0));
        first_piece[j] = piece_span.len();
        let mut t = l.birth;
        for &(s, _, _) in &interior[j] {
            piece_span.push((t, s));
            t = s;
        }
        piece_span.push((t, l.end));
    }
    let last_piece = |j: usize| first_piece[j] + interior[j].len();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); piece_span.len()];
    for j in 0..nl {
        for (i, &(_, other, is_branch)) in interior[j].iter().enumerate() {
            let before = first_piece[j] + i;
            let after = before + 1;
            if is_branch {
                let mut pair = [after, first_piece[other]];
                if rng.random::<bool>() {
                    pair.swap(0, 1);
                }
                children[before].extend(pair);
            } else {
                // The continuation hangs below one of the two merging pieces.
                let parent = if rng.random::<bool>() { before } else { last_piece(other) };
                children[parent].push(after);
            }
        }
    }
    let mut out = Vec::new();
    let mut s = 0.0;
    let mut stack: Vec<(usize, bool)> = d
        .lineages
        .iter()
        .enumerate()
        .filter(|(_, l)| l.parent == Attachment::Root)
        .map(|(j, _)| (first_piece[j], false))
        .rev()
        .collect();
    out.push((0.0, abs(piece_span[stack.last().unwrap().0].0)));
    while let Some((p, returning)) = stack.pop() {
        let (a, b) = piece_span[p];
        s += b - a;
        if returning {
            out.push((s, abs(a)));
        } else {
            out.push((s, abs(b)));
            stack.push((p, true));
            for &c in children[p].iter().rev() {
                stack.push((c, false));
            }
        }
    }
    out
}

fn interpolate(pts: &[(f64, f64)], s: f64) -> f64 {
    let k = pts.partition_point(|p| p.0 < s);
    if k == 0 {
        return pts[0].1;
    }
    if k >= pts.len() {
        return pts[pts.len() - 1].1;
    }
    let (s0, h0) = pts[k - 1];
    let (s1, h1) = pts[k];
    if s1 <= s0 {
        h1
    } else {
        h0 + (h1 - h0) * (s - s0) / (s1 - s0)
    }
}

/// Traverses colors in depth-first order of the color tree, each in time
/// `1/n`; within a color follows the contour of the plane tree obtained by
/// fair coins at branch points (child order) and coalescences (which
/// incoming piece the continuation hangs from).
pub fn contour<R: Rng + ?Sized>(g: &GluedNetwork, rng: &mut R, grid_size: usize) -> Result<Contour> {
    if grid_size < 2 {
        return Err(Error::InvalidArgument("grid_size must be >= 2".into()));
    }
    let n = g.n_colors();
    let depths = g.tree.depths();
    // Colors are numbered in preorder, so id order is depth-first order.
    let contours: Vec<Vec<(f64, f64)>> = (0..n).map(|v| color_contour(g, v, rng)).collect();
    let mut out = Contour {
        grid_size,
        t: Vec::with_capacity(grid_size),
        h: Vec::with_capacity(grid_size),
        tree_h: Vec::with_capacity(grid_size),
        resolution: 0.0,
    };
    let mut prev: Option<(usize, f64)> = None;
    for i in 0..grid_size {
        let t = i as f64 / (grid_size - 1) as f64;
        let x = t * n as f64;
        let c = (x.floor() as usize).min(n - 1);
        let pts = &contours[c];
        let total = pts.last().unwrap().0;
        let h = interpolate(pts, (x - c as f64) * total);
        if let Some((pc, ph)) = prev {
            if pc == c {
                out.resolution = out.resolution.max((h - ph).abs());
            }
        }
        prev = Some((c, h));
        out.t.push(t);
        out.h.push(h);
        out.tree_h.push(depths[c] as f64);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation() {
        let pts = [(0.0, 1.0), (2.0, 3.0), (4.0, 1.0)];
        assert_eq!(interpolate(&pts, 1.0), 2.0);
        assert_eq!(interpolate(&pts, 3.0), 2.0);
        assert_eq!(interpolate(&pts, 4.0), 1.0);
    }
}
