use serde::{Deserialize, Serialize};

use super::cf::derivs;
use crate::model::ModelParams;
use crate::{Error, Result};

const DERIV_TOL: f64 = 1e-14;

/// The exponential tilt `ζ` making `M̂` critical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltSolution {
    pub zeta: f64,
    /// `E[ζ^M]`.
    #[serde(rename = "E_zetaM")]
    pub e_zeta_m: f64,
    /// Variance of `M̂`.
    pub sigma_hat_sq: f64,
    /// Largest `s` at which `g` was evaluated successfully.
    pub radius_hint: f64,
    /// `φ(ζ) − 1` recomputed at the returned `ζ`.
    pub phi_residual: f64,
}

/// `φ(s) = s g′(s) / g(s) = E[M s^M] / E[s^M]`.
pub fn phi(params: &ModelParams, s: f64) -> Result<f64> {
    let d = derivs(params, s, DERIV_TOL)?;
    Ok(s * d.d1 / d.g)
}

pub fn zeta_tilt(params: &ModelParams, tol: f64) -> Result<TiltSolution> {
    params.validate()?;
    let phi1 = phi(params, 1.0)?;
    let mut radius = 1.0f64;
    let (mut lo, mut hi);
    if phi1 < 1.0 {
        lo = 1.0;
        let mut step = 1.0;
        loop {
            let s = lo + step;
            match phi(params, s) {
                Ok(v) if v.is_finite() => {
                    radius = radius.max(s);
                    if v >= 1.0 {
                        hi = s;
                        break;
                    }
                    lo = s;
                    step *= 2.0;
                }
                Ok(_) | Err(Error::BeyondRadius { .. }) | Err(Error::DepthExhausted { .. }) => {
                    step *= 0.5;
                    if step < 1e-14 * lo {
                        return Err(Error::Bracket(format!(
                            "reached the pole near s = {lo} with phi still below 1"
                        )));
                    }
                }
                Err(e) => return Err(e),
            }
        }
    } else {
        hi = 1.0;
        lo = 0.5;
        while phi(params, lo)? >= 1.0 {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(Error::Bracket("phi stays above 1 near 0".into()));
            }
        }
    }
    if phi1 == 1.0 {
        lo = 1.0;
        hi = 1.0;
    }
    while hi - lo > tol * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if phi(params, mid)? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let zeta = 0.5 * (lo + hi);
    let d = derivs(params, zeta, DERIV_TOL)?;
    let sigma_hat_sq = (zeta * d.d1 + zeta * zeta * d.d2) / d.g - 1.0;
    Ok(TiltSolution {
        zeta,
        e_zeta_m: d.g,
        sigma_hat_sq,
        radius_hint: radius.max(zeta),
        phi_residual: zeta * d.d1 / d.g - 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::critical_mu;

    #[test]
    fn tilt_direction() {
        let sub = zeta_tilt(&ModelParams::new(1.0, 1.0, 1.0).unwrap(), 1e-12).unwrap();
        assert!(sub.zeta > 1.0);
        assert!(sub.phi_residual.abs() < 1e-8);
        assert!(sub.sigma_hat_sq > 0.0);
        let sup = zeta_tilt(&ModelParams::new(0.2, 0.2, 0.2).unwrap(), 1e-12).unwrap();
        assert!(sup.zeta < 1.0);
        assert!(sup.phi_residual.abs() < 1e-8);
        let mu = critical_mu(0.5, 0.5, 1e-15).unwrap();
        let crit = zeta_tilt(&ModelParams::new(0.5, 0.5, mu).unwrap(), 1e-12).unwrap();
        assert!((crit.zeta - 1.0).abs() < 1e-9, "{}", crit.zeta);
    }
}
