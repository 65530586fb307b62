use super::{expected_m, g_eval, CertifiedValue};
use crate::model::ModelParams;
use crate::{Error, Result};

/// Closed-form lower and upper bounds on the extinction probability,
/// clipped to `[0, 1]`.
pub fn simple_pext_bounds(params: &ModelParams) -> (f64, f64) {
    let ModelParams { alpha: a, beta: b, mu: m } = *params;
    let lower = a / (2.0 * m) * (b + m - 1.0 + ((b + m - 1.0).powi(2) + 4.0 * m).sqrt());
    let upper = a * ((a + b + m) * (a + 2.0 * b + m) + m) / (m * (1.0 + 2.0 * a + 2.0 * b + m));
    (lower.clamp(0.0, 1.0), upper.clamp(0.0, 1.0))
}

/// Smallest fixed point of `g` in `[0, 1]`.
///
/// Returns exactly 1 when `E[M] ≤ 1`. Otherwise the root is bracketed by
/// points `a < q < b` certified through `g_lower(a) > a` and
/// `g_upper(b) < b`, and the bracket is bisected down to `tol`.
pub fn extinction_probability(params: &ModelParams, tol: f64) -> Result<CertifiedValue> {
    let em = expected_m(params, 1e-14)?;
    if em.upper <= 1.0 || em.mid() <= 1.0 {
        return Ok(CertifiedValue::exact(1.0));
    }
    let gtol = (tol * 1e-3).max(1e-15);
    let mut depth = 0;
    let mut eval = |z: f64| -> Result<CertifiedValue> {
        let v = g_eval(params, z, 1, gtol)?;
        depth = depth.max(v.depth);
        Ok(v)
    };
    let mut a = 0.0;
    if eval(0.0)?.lower <= 0.0 {
        return Err(Error::Bracket("g(0) is not certified positive".into()));
    }
    let mut b = None;
    for j in 1..=52 {
        let z = 1.0 - 0.5f64.powi(j);
        let v = eval(z)?;
        if v.upper < z {
            b = Some(z);
            break;
        }
        if v.lower > z {
            a = z;
        }
    }
    let mut b = b.ok_or_else(|| Error::Bracket("no point below 1 with g(z) < z".into()))?;
    while b - a > tol {
        let m = 0.5 * (a + b);
        let v = eval(m)?;
        if v.lower > m {
            a = m;
        } else if v.upper < m {
            b = m;
        } else {
            break;
        }
    }
    if b - a > tol {
        return Err(Error::DepthExhausted { depth, gap: b - a });
    }
    Ok(CertifiedValue::new(a, b, depth, true))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_bounds_reference() {
        let (l, u) = simple_pext_bounds(&ModelParams::new(0.2, 0.2, 0.2).unwrap());
        assert!((l - 0.23852).abs() < 5e-6, "{l}");
        assert!((u - 0.34000).abs() < 5e-6, "{u}");
        let (l, u) = simple_pext_bounds(&ModelParams::new(1.0, 1.0, 1.0).unwrap());
        assert_eq!((l, u), (1.0, 1.0));
    }

    #[test]
    fn extinction_reference() {
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        assert_eq!(extinction_probability(&p, 1e-10).unwrap(), CertifiedValue::exact(1.0));
        let p = ModelParams::new(0.2, 0.2, 0.2).unwrap();
        let q = extinction_probability(&p, 1e-10).unwrap();
        assert!(q.width() <= 1e-10);
        assert!(q.lower >= 0.23852 && q.upper <= 0.34);
        let g = g_eval(&p, q.mid(), 1, 1e-14).unwrap();
        assert!((g.mid() - q.mid()).abs() < 1e-8);
    }
}
