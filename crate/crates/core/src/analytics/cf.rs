use serde::{Deserialize, Serialize};

use super::{CertifiedValue, MAX_DEPTH, MIN_DEPTH};
use crate::model::ModelParams;
use crate::{Error, Result};

const EPS: f64 = f64::EPSILON;

/// Upper and lower convergents for every level `1..=n` at depth `n`.
struct Levels {
    upper: Vec<f64>,
    lower: Vec<f64>,
    /// `upper − lower`, propagated by its own recursion to avoid cancellation.
    gap: Vec<f64>,
    /// Bound on accumulated rounding error.
    err: Vec<f64>,
}

fn g_bar(params: &ModelParams, n: usize, z: f64) -> Option<f64> {
    let rho = params.rho_of(n as u64);
    let arg = (1.0 - rho).powi(2) - 4.0 * params.mu * (z - 1.0);
    (arg >= 0.0).then(|| 0.5 * (1.0 + rho - arg.sqrt()))
}

/// `num_n/ρ_n − ḡ_n(z)` in a cancellation-free form when possible.
fn terminal_gap(params: &ModelParams, n: usize, z: f64, lower: f64, upper: f64) -> f64 {
    let rho = params.rho_of(n as u64);
    let c = params.mu * (1.0 - z);
    let s = ((rho - 1.0).powi(2) + 4.0 * c).max(0.0).sqrt();
    if s + rho - 1.0 > 0.5 * s && c >= 0.0 {
        4.0 * c * (rho - c) / (rho * (s + rho - 1.0) * (rho + 1.0 + s))
    } else {
        upper - lower
    }
}

fn levels(params: &ModelParams, z: f64, n: usize) -> Result<Levels> {
    let mut upper = vec![0.0; n];
    let mut lower = vec![0.0; n];
    let mut gap = vec![0.0; n];
    let mut err = vec![0.0; n];
    let num = |k: usize| params.alpha + (k - 1) as f64 * params.beta + params.mu * z;
    let rho_n = params.rho_of(n as u64);
    let u = num(n) / rho_n;
    let l = g_bar(params, n, z).unwrap_or(u);
    upper[n - 1] = u;
    lower[n - 1] = l;
    gap[n - 1] = terminal_gap(params, n, z, l, u);
    err[n - 1] = 8.0 * EPS * (1.0 + rho_n);
    for k in (1..n).rev() {
        let den = 1.0 + params.rho_of(k as u64);
        let (xu, xl) = (upper[k], lower[k]);
        let du = den - xu;
        let dl = den - xl;
        if !(du > 0.0 && dl > 0.0) {
            return Err(Error::BeyondRadius { z, level: k });
        }
        let a = num(k);
        upper[k - 1] = a / du;
        lower[k - 1] = a / dl;
        gap[k - 1] = a * gap[k] / (du * dl);
        let e = err[k];
        let d = du.min(dl);
        err[k - 1] = upper[k - 1].max(lower[k - 1]) * (4.0 * EPS + (EPS * (den + xu.max(xl)) + e) / d);
    }
    Ok(Levels {
        upper,
        lower,
        gap,
        err,
    })
}

fn check_z(z: f64) -> Result<()> {
    if !(z.is_finite() && z >= 0.0) {
        return Err(Error::InvalidArgument(format!("z must be finite and >= 0, got {z}")));
    }
    Ok(())
}

fn initial_depth(level: usize) -> usize {
    MIN_DEPTH.max((2 * level).next_power_of_two())
}

/// `E[z^{M_k}]` for the excursion started at level `k = start_level`.
///
/// For `z ∈ [0, 1]` the upper and lower convergents give a certified
/// enclosure. For `z > 1` the value is a best-effort estimate from
/// consecutive depths and is flagged non-certified.
pub fn g_eval(params: &ModelParams, z: f64, start_level: usize, tol: f64) -> Result<CertifiedValue> {
    params.validate()?;
    check_z(z)?;
    if start_level == 0 {
        return Err(Error::InvalidArgument("start level must be >= 1".into()));
    }
    let i = start_level - 1;
    let mut n = initial_depth(start_level);
    if z <= 1.0 {
        loop {
            let lv = levels(params, z, n)?;
            if lv.gap[i] <= tol {
                let e = lv.err[i];
                return Ok(CertifiedValue::new(lv.lower[i] - e, lv.upper[i] + e, n, true).clip_unit());
            }
            if n >= MAX_DEPTH {
                return Err(Error::DepthExhausted { depth: n, gap: lv.gap[i] });
            }
            n *= 2;
        }
    }
    let mut prev = levels(params, z, n)?.upper[i];
    loop {
        let next = levels(params, z, 2 * n)?;
        let v = next.upper[i];
        let d = (v - prev).abs();
        if d <= tol * v.abs().max(1.0) {
            let e = next.err[i] + d;
            return Ok(CertifiedValue::new(v.min(prev) - e, v.max(prev) + e, 2 * n, false));
        }
        if 2 * n >= MAX_DEPTH {
            return Err(Error::DepthExhausted { depth: 2 * n, gap: d });
        }
        prev = v;
        n *= 2;
    }
}

/// `E_k[z^M] = Π_{j≤k} g_j(z)`: mutations on the path from `k` down to 0.
pub fn pgf_from_state(params: &ModelParams, k: usize, z: f64, tol: f64) -> Result<CertifiedValue> {
    params.validate()?;
    check_z(z)?;
    if k == 0 {
        return Ok(CertifiedValue::exact(1.0));
    }
    let mut n = initial_depth(k);
    let product = |lv: &Levels, upper: bool| -> f64 {
        (0..k)
            .map(|i| {
                if upper {
                    lv.upper[i] + lv.err[i]
                } else {
                    (lv.lower[i] - lv.err[i]).max(0.0)
                }
            })
            .product()
    };
    if z <= 1.0 {
        loop {
            let lv = levels(params, z, n)?;
            let (lo, hi) = (product(&lv, false), product(&lv, true));
            if hi - lo <= tol || n >= MAX_DEPTH {
                if hi - lo > tol {
                    return Err(Error::DepthExhausted { depth: n, gap: hi - lo });
                }
                return Ok(CertifiedValue::new(lo, hi, n, true).clip_unit());
            }
            n *= 2;
        }
    }
    let up = |lv: &Levels| (0..k).map(|i| lv.upper[i]).product::<f64>();
    let mut prev = up(&levels(params, z, n)?);
    loop {
        let v = up(&levels(params, z, 2 * n)?);
        let d = (v - prev).abs();
        if d <= tol * v.abs().max(1.0) {
            let e = d + 8.0 * EPS * k as f64 * v.abs();
            return Ok(CertifiedValue::new(v.min(prev) - e, v.max(prev) + e, 2 * n, false));
        }
        if 2 * n >= MAX_DEPTH {
            return Err(Error::DepthExhausted { depth: 2 * n, gap: d });
        }
        prev = v;
        n *= 2;
    }
}

/// `g`, `g′`, `g″` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GDerivs {
    pub g: f64,
    pub d1: f64,
    pub d2: f64,
    pub depth: usize,
    /// Largest change between depths `n` and `2n` over the three values.
    pub error: f64,
}

fn derivs_at_depth(params: &ModelParams, z: f64, n: usize) -> Result<[f64; 3]> {
    let (mut g, mut g1, mut g2) = (1.0, 0.0, 0.0);
    for k in (1..=n).rev() {
        let num = params.alpha + (k - 1) as f64 * params.beta + params.mu * z;
        let den = 1.0 + params.rho_of(k as u64) - g;
        if !(den > 0.0) {
            return Err(Error::BeyondRadius { z, level: k });
        }
        let (dd1, dd2) = (-g1, -g2);
        let v = num / den;
        let v1 = (params.mu - v * dd1) / den;
        let v2 = (-2.0 * v1 * dd1 - v * dd2) / den;
        g = v;
        g1 = v1;
        g2 = v2;
    }
    Ok([g, g1, g2])
}

/// Joint evaluation of `g`, `g′`, `g″`, deepened until consecutive depths
/// agree to `tol` (relative for values above 1).
pub(crate) fn derivs(params: &ModelParams, z: f64, tol: f64) -> Result<GDerivs> {
    check_z(z)?;
    let mut n = MIN_DEPTH;
    let mut prev = derivs_at_depth(params, z, n)?;
    loop {
        let cur = derivs_at_depth(params, z, 2 * n)?;
        let err = (0..3)
            .map(|i| (cur[i] - prev[i]).abs() / cur[i].abs().max(1.0))
            .fold(0.0, f64::max);
        if err <= tol {
            let abs_err = (0..3).map(|i| (cur[i] - prev[i]).abs()).fold(0.0, f64::max);
            return Ok(GDerivs {
                g: cur[0],
                d1: cur[1],
                d2: cur[2],
                depth: 2 * n,
                error: abs_err,
            });
        }
        if 2 * n >= MAX_DEPTH {
            return Err(Error::DepthExhausted { depth: 2 * n, gap: err });
        }
        prev = cur;
        n *= 2;
    }
}

/// `g′(z)` or `g″(z)` by analytic differentiation of the recursion. The
/// enclosure width is the agreement of depths `n` and `2n`; it is not
/// certified.
pub fn g_derivatives(params: &ModelParams, z: f64, order: u8, tol: f64) -> Result<CertifiedValue> {
    params.validate()?;
    if !(order == 1 || order == 2) {
        return Err(Error::InvalidArgument(format!("order must be 1 or 2, got {order}")));
    }
    let d = derivs(params, z, tol)?;
    let v = if order == 1 { d.d1 } else { d.d2 };
    let w = d.error.max(16.0 * EPS * v.abs());
    Ok(CertifiedValue::new(v - w, v + w, d.depth, false))
}

/// One row of the convergent table: bounds on a z-grid at depth `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergentRow {
    pub depth: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub sup_gap: f64,
    /// `Π_{k≤n} 1/ρ_k`.
    pub majorant: f64,
}

pub fn convergent_table(params: &ModelParams, z_grid: &[f64], depths: &[usize]) -> Result<Vec<ConvergentRow>> {
    params.validate()?;
    for &z in z_grid {
        check_z(z)?;
        if z > 1.0 {
            return Err(Error::InvalidArgument(format!("grid point {z} outside [0, 1]")));
        }
    }
    depths
        .iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::InvalidArgument("depth must be >= 1".into()));
            }
            let mut row = ConvergentRow {
                depth: n,
                lower: Vec::new(),
                upper: Vec::new(),
                sup_gap: 0.0,
                majorant: (1..=n as u64).map(|k| 1.0 / params.rho_of(k)).product(),
            };
            for &z in z_grid {
                let lv = levels(params, z, n)?;
                // g maps [0, 1] into [0, 1], so clipping keeps both bounds
                // valid. Where they meet, rounding must not invert them.
                let upper = lv.upper[0].clamp(0.0, 1.0);
                row.lower.push(lv.lower[0].clamp(0.0, 1.0).min(upper));
                row.upper.push(upper);
                row.sup_gap = row.sup_gap.max(lv.gap[0]);
            }
            Ok(row)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p111() -> ModelParams {
        ModelParams::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn pgf_at_one_is_one() {
        for p in [p111(), ModelParams::new(0.2, 0.2, 0.2).unwrap()] {
            let v = g_eval(&p, 1.0, 1, 1e-13).unwrap();
            assert!(v.contains(1.0), "{v:?}");
        }
    }

    #[test]
    fn gap_matches_difference_and_majorant() {
        let p = ModelParams::new(0.2, 0.2, 0.2).unwrap();
        for n in 1..12 {
            let maj: f64 = (1..=n as u64).map(|k| 1.0 / p.rho_of(k)).product();
            for i in 0..=10 {
                let z = i as f64 / 10.0;
                let lv = levels(&p, z, n).unwrap();
                assert!(lv.lower[0] <= lv.upper[0] + 1e-15);
                assert!(((lv.upper[0] - lv.lower[0]) - lv.gap[0]).abs() < 1e-13);
                assert!(lv.gap[0] <= maj * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn enclosure_contains_deep_value() {
        let p = ModelParams::new(0.3, 0.5, 0.9).unwrap();
        for z in [0.0, 0.25, 0.5, 0.99] {
            let v = g_eval(&p, z, 1, 1e-12).unwrap();
            let deep = levels(&p, z, 4096).unwrap();
            let mid = 0.5 * (deep.upper[0] + deep.lower[0]);
            assert!(v.contains(mid), "{v:?} {mid}");
        }
    }

    #[test]
    fn derivative_at_one_is_mean() {
        let p = p111();
        let d = g_derivatives(&p, 1.0, 1, 1e-13).unwrap();
        assert!((d.mid() - (std::f64::consts::E - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn pgf_from_state_product() {
        let p = p111();
        assert_eq!(pgf_from_state(&p, 0, 0.3, 1e-12).unwrap().mid(), 1.0);
        let a = pgf_from_state(&p, 1, 0.3, 1e-12).unwrap();
        let b = g_eval(&p, 0.3, 1, 1e-12).unwrap();
        assert!((a.mid() - b.mid()).abs() < 1e-12);
        let c = pgf_from_state(&p, 3, 0.3, 1e-12).unwrap();
        let prod: f64 = (1..=3).map(|j| g_eval(&p, 0.3, j, 1e-13).unwrap().mid()).product();
        assert!((c.mid() - prod).abs() < 1e-12);
    }

    #[test]
    fn beyond_radius_is_detected() {
        let p = p111();
        assert!(matches!(g_eval(&p, 50.0, 1, 1e-10), Err(Error::BeyondRadius { .. })));
    }
}
