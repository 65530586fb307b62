use rand::Rng;

use crate::stats::{Estimate, Moments};
use crate::RngStream;

/// Maximum of a uniform simple-random-walk excursion with `2m+1` steps
/// (`m` up, `m+1` down), obtained by rotating a uniform arrangement to
/// start after its first minimum, scaled by `sqrt(2m)`.
fn scaled_excursion_max<R: Rng + ?Sized>(m: usize, rng: &mut R) -> f64 {
    let total = 2 * m + 1;
    let mut s = vec![0i32; total + 1];
    let (mut ups, mut left) = (m, total);
    for i in 0..total {
        let up = rng.random_range(0..left) < ups;
        if up {
            ups -= 1;
        }
        left -= 1;
        s[i + 1] = s[i] + if up { 1 } else { -1 };
    }
    let (mut jmin, mut vmin) = (0usize, i32::MAX);
    for (i, &v) in s.iter().enumerate().skip(1) {
        if v < vmin {
            vmin = v;
            jmin = i;
        }
    }
    // Rotated walk: S_{j+i} − S_j after the minimum, then S_n − S_j + S_i.
    let after = s[jmin..].iter().map(|&v| v - vmin).max().unwrap_or(0);
    let before = s[1..=jmin].iter().map(|&v| s[total] - vmin + v).max().unwrap_or(0);
    after.max(before) as f64 / ((2 * m) as f64).sqrt()
}

/// Monte Carlo estimate of `E[sup e]` for the normalized Brownian excursion.
pub fn expected_sup_excursion(stream: RngStream, steps: usize, replicates: usize) -> Estimate {
    let m = steps / 2;
    let xs = stream.replicates(replicates, |r, _| scaled_excursion_max(m, r));
    Moments::from_slice(&xs).estimate()
}
