use super::{CertifiedValue, MAX_DEPTH, MIN_DEPTH};
use crate::model::ModelParams;
use crate::{Error, Result};

const EPS: f64 = f64::EPSILON;

/// `f_j(λ) = ρ_j / (1 + ρ_j + λ/j − f_{j+1}(λ))` for `j = 1..=n`, with
/// `f_{n+1} = terminal`.
fn f_levels(params: &ModelParams, lambda: f64, n: usize, terminal: f64) -> Result<Vec<f64>> {
    let mut f = vec![0.0; n];
    let mut next = terminal;
    for j in (1..=n).rev() {
        let rho = params.rho_of(j as u64);
        let den = 1.0 + rho + lambda / j as f64 - next;
        if !(den > 0.0) {
            return Err(Error::DivergentTail { lambda, level: j });
        }
        next = rho / den;
        f[j - 1] = next;
    }
    Ok(f)
}

fn check_lambda(params: &ModelParams, lambda: f64) -> Result<()> {
    let floor = -(1.0 + params.alpha + params.mu);
    if !(lambda.is_finite() && lambda > floor) {
        return Err(Error::InvalidArgument(format!("lambda must exceed {floor}, got {lambda}")));
    }
    Ok(())
}

/// `f_k(λ) = E_k[e^{−λ T_{k−1}}]`, the Laplace transform of the passage time
/// from `k` to `k−1`. Certified for `λ ≥ 0` (terminal values 0 and 1);
/// best-effort for negative `λ`.
pub fn laplace_f(params: &ModelParams, k: usize, lambda: f64, tol: f64) -> Result<CertifiedValue> {
    params.validate()?;
    check_lambda(params, lambda)?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let mut n = MIN_DEPTH.max((2 * k).next_power_of_two());
    if lambda >= 0.0 {
        loop {
            let lo = f_levels(params, lambda, n, 0.0)?[k - 1];
            let hi = f_levels(params, lambda, n, 1.0)?[k - 1];
            let round = 4.0 * n as f64 * EPS * hi;
            if hi - lo <= tol || n >= MAX_DEPTH {
                if hi - lo > tol {
                    return Err(Error::DepthExhausted { depth: n, gap: hi - lo });
                }
                return Ok(CertifiedValue::new(lo - round, hi + round, n, true).clip_unit());
            }
            n *= 2;
        }
    }
    let mut prev = f_levels(params, lambda, n, 1.0)?[k - 1];
    loop {
        let v = f_levels(params, lambda, 2 * n, 1.0)?[k - 1];
        let d = (v - prev).abs();
        if d <= tol * v.max(1.0) {
            let e = d + 4.0 * n as f64 * EPS * v;
            return Ok(CertifiedValue::new(v.min(prev) - e, v.max(prev) + e, 2 * n, false));
        }
        if 2 * n >= MAX_DEPTH {
            return Err(Error::DepthExhausted { depth: 2 * n, gap: d });
        }
        prev = v;
        n *= 2;
    }
}

fn psi_at_depth(params: &ModelParams, lambda: f64, n: usize) -> Result<Option<f64>> {
    let f = f_levels(params, lambda, n, 1.0)?;
    let mut term = params.mu;
    let mut sum = 0.0;
    for j in 1..n / 2 {
        term *= f[j - 1] / params.rho_of(j as u64);
        sum += term;
        let r = f[j].max(1.0) / params.rho_of(j as u64 + 1);
        if r < 1.0 && term * r / (1.0 - r) <= 1e-17 * sum {
            return Ok(Some(sum));
        }
    }
    Ok(None)
}

/// `Ψ(λ) = μ Σ_j Π_{k≤j} f_k(λ)/ρ_k`, so that `Ψ(0) = E[M]`.
pub fn psi(params: &ModelParams, lambda: f64) -> Result<f64> {
    params.validate()?;
    check_lambda(params, lambda)?;
    let mut n = 2 * MIN_DEPTH;
    let mut prev = psi_at_depth(params, lambda, n)?;
    loop {
        let cur = psi_at_depth(params, lambda, 2 * n)?;
        if let (Some(a), Some(b)) = (prev, cur) {
            if (a - b).abs() <= 1e-14 * b.max(1.0) {
                return Ok(b);
            }
        }
        if 2 * n >= MAX_DEPTH {
            return Err(Error::DepthExhausted {
                depth: 2 * n,
                gap: f64::NAN,
            });
        }
        prev = cur;
        n *= 2;
    }
}

/// The Malthusian rate: the root of `Ψ(λ) = 1`. Its sign is that of
/// `E[M] − 1`. Below the root `Ψ` may diverge; such points are treated as
/// lying left of the root.
pub fn malthusian(params: &ModelParams, tol: f64) -> Result<f64> {
    params.validate()?;
    let psi0 = psi(params, 0.0)?;
    if psi0 == 1.0 {
        return Ok(0.0);
    }
    let floor = -(1.0 + params.alpha + params.mu);
    // `above(λ)` is true when λ lies left of the root.
    let above = |l: f64| -> Result<bool> {
        match psi(params, l) {
            Ok(v) => Ok(v > 1.0),
            Err(Error::DivergentTail { .. }) => Ok(true),
            Err(e) => Err(e),
        }
    };
    let (mut lo, mut hi) = if psi0 > 1.0 {
        let mut hi = 1.0;
        while above(hi)? {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::Bracket("psi stays above 1".into()));
            }
        }
        (0.0, hi)
    } else {
        let mut lo = None;
        for j in 1..60 {
            let l = floor * (1.0 - 0.5f64.powi(j));
            if above(l)? {
                lo = Some(l);
                break;
            }
        }
        let lo = lo.ok_or_else(|| {
            Error::Bracket(format!("psi stays below 1 down to the boundary {floor}"))
        })?;
        (lo, 0.0)
    };
    while hi - lo > tol * hi.abs().max(lo.abs()).max(1.0) {
        let mid = 0.5 * (lo + hi);
        if above(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{critical_mu, expected_m};

    #[test]
    fn laplace_at_zero_is_one() {
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        for k in [1, 2, 5] {
            assert!(laplace_f(&p, k, 0.0, 1e-12).unwrap().contains(1.0));
        }
    }

    #[test]
    fn laplace_decreasing() {
        let p = ModelParams::new(0.2, 0.2, 0.2).unwrap();
        let mut prev = 1.0 + 1e-9;
        for i in 1..20 {
            let v = laplace_f(&p, 1, 0.25 * i as f64, 1e-12).unwrap();
            assert!(v.upper < prev);
            prev = v.lower;
        }
    }

    #[test]
    fn psi_zero_is_mean() {
        let p = ModelParams::new(0.4, 0.9, 0.6).unwrap();
        let em = expected_m(&p, 1e-14).unwrap().mid();
        assert!((psi(&p, 0.0).unwrap() - em).abs() < 1e-13);
    }

    #[test]
    fn malthusian_sign() {
        for (a, b, m) in [(1.0, 1.0, 1.0), (0.2, 0.2, 0.2), (0.5, 2.0, 0.3), (0.1, 0.5, 1.0), (2.0, 0.1, 0.5)] {
            let p = ModelParams::new(a, b, m).unwrap();
            let em = expected_m(&p, 1e-14).unwrap().mid();
            let l = malthusian(&p, 1e-12).unwrap();
            assert_eq!(l > 0.0, em > 1.0, "{p:?}: lambda {l}, E[M] {em}");
            assert!((psi(&p, l).unwrap() - 1.0).abs() < 1e-8);
        }
        let mu = critical_mu(0.5, 0.5, 1e-15).unwrap();
        let l = malthusian(&ModelParams::new(0.5, 0.5, mu).unwrap(), 1e-12).unwrap();
        assert!(l.abs() < 1e-9);
    }
}
