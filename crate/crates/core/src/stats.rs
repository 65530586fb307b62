//! Summation, estimators and goodness-of-fit tests used by the Monte Carlo
//! checks.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Running mean and variance (Welford), mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64) * (other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            f64::INFINITY
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut m = Self::new();
        xs.iter().for_each(|&x| m.push(x));
        m
    }

    pub fn estimate(&self) -> Estimate {
        Estimate::new(self.mean, self.std_error(), self.n)
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    #[serde(default)]
    pub flags: Vec<String>,
}

impl Estimate {
    pub fn new(value: f64, std_error: f64, n_samples: u64) -> Self {
        Self {
            value,
            std_error,
            n_samples,
            flags: Vec::new(),
        }
    }

    pub fn exact(value: f64) -> Self {
        Self::new(value, 0.0, 0)
    }

    pub fn with_flag(mut self, flag: impl Into<String>) -> Self {
        self.flags.push(flag.into());
        self
    }

    /// |a − b| measured in combined standard errors.
    pub fn z_score(&self, other: &Estimate) -> f64 {
        let se = (self.std_error.powi(2) + other.std_error.powi(2)).sqrt();
        let d = (self.value - other.value).abs();
        if se == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / se
        }
    }

    /// Distance to an exact value in standard errors.
    pub fn z_to(&self, x: f64) -> f64 {
        self.z_score(&Estimate::exact(x))
    }

    /// 3-sigma intervals overlap.
    pub fn overlaps(&self, other: &Estimate, k: f64) -> bool {
        (self.value - other.value).abs() <= k * (self.std_error + other.std_error)
    }
}

/// Ratio estimator `Σ num / Σ den` with a delta-method standard error.
pub fn ratio_estimate(num: &[f64], den: &[f64]) -> Estimate {
    assert_eq!(num.len(), den.len());
    let n = num.len();
    let sn: f64 = num.iter().sum();
    let sd: f64 = den.iter().sum();
    let r = sn / sd;
    let dbar = sd / n as f64;
    let resid = Moments::from_slice(
        &num.iter()
            .zip(den)
            .map(|(a, b)| a - r * b)
            .collect::<Vec<_>>(),
    );
    let se = (resid.variance() / n as f64).sqrt() / dbar;
    Estimate::new(r, se, n as u64)
}

/// Kish effective sample size of a set of weights.
pub fn effective_sample_size(w: &[f64]) -> f64 {
    let s: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|x| x * x).sum();
    if s2 == 0.0 {
        0.0
    } else {
        s * s / s2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub df: Option<usize>,
}

impl TestResult {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

/// Asymptotic Kolmogorov survival function `P(K > x)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let t = (-2.0 * kf * kf * x * x).exp();
        s += if k % 2 == 1 { t } else { -t };
        if t < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

fn ks_p(d: f64, ne: f64) -> f64 {
    let sq = ne.sqrt();
    kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    TestResult {
        statistic: d,
        p_value: ks_p(d, ne),
        df: None,
    }
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> TestResult {
    let mut x = xs.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let f = cdf(v);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    TestResult {
        statistic: d,
        p_value: ks_p(d, n),
        df: None,
    }
}

fn chi2_sf(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("positive df");
    dist.sf(stat)
}

/// Merges adjacent cells from the right until each has expected count ≥ 5.
fn merge_cells(expected: &[f64], observed: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut e_out = Vec::new();
    let mut o_out: Vec<Vec<f64>> = vec![Vec::new(); observed.len()];
    let mut acc_e = 0.0;
    let mut acc_o = vec![0.0; observed.len()];
    for i in 0..expected.len() {
        acc_e += expected[i];
        for (a, o) in acc_o.iter_mut().zip(observed) {
            *a += o[i];
        }
        if acc_e >= 5.0 {
            e_out.push(acc_e);
            for (out, a) in o_out.iter_mut().zip(acc_o.iter_mut()) {
                out.push(*a);
                *a = 0.0;
            }
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 || acc_o.iter().any(|&a| a > 0.0) {
        if let Some(last) = e_out.last_mut() {
            *last += acc_e;
            for (out, a) in o_out.iter_mut().zip(&acc_o) {
                *out.last_mut().unwrap() += a;
            }
        } else {
            e_out.push(acc_e);
            for (out, a) in o_out.iter_mut().zip(&acc_o) {
                out.push(*a);
            }
        }
    }
    (e_out, o_out)
}

/// χ² goodness of fit of integer counts against probabilities. Cells beyond
/// `probs` are pooled into the last cell; missing probability mass is
/// assigned to it.
pub fn chi2_gof(counts: &[u64], probs: &[f64]) -> TestResult {
    let len = counts.len().max(probs.len());
    let total: u64 = counts.iter().sum();
    let n = total as f64;
    let mut obs = vec![0.0; len];
    for (i, &c) in counts.iter().enumerate() {
        obs[i] = c as f64;
    }
    let mut exp = vec![0.0; len];
    for (i, &p) in probs.iter().enumerate() {
        exp[i] = p * n;
    }
    let missing = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    exp[len - 1] += missing * n;
    let (e, o) = merge_cells(&exp, &[obs]);
    let stat: f64 = e
        .iter()
        .zip(&o[0])
        .map(|(e, o)| if *e > 0.0 { (o - e).powi(2) / e } else { 0.0 })
        .sum();
    let df = e.len().saturating_sub(1);
    TestResult {
        statistic: stat,
        p_value: chi2_sf(stat, df),
        df: Some(df),
    }
}

/// χ² test of homogeneity for two count vectors over the same cells.
pub fn chi2_two_sample(a: &[u64], b: &[u64]) -> TestResult {
    let len = a.len().max(b.len());
    let get = |v: &[u64], i: usize| v.get(i).copied().unwrap_or(0) as f64;
    let na: f64 = a.iter().sum::<u64>() as f64;
    let nb: f64 = b.iter().sum::<u64>() as f64;
    let n = na + nb;
    // Merge on the smaller expected count of the two rows.
    let pooled: Vec<f64> = (0..len)
        .map(|i| (get(a, i) + get(b, i)) * na.min(nb) / n)
        .collect();
    let oa: Vec<f64> = (0..len).map(|i| get(a, i)).collect();
    let ob: Vec<f64> = (0..len).map(|i| get(b, i)).collect();
    let (_, o) = merge_cells(&pooled, &[oa, ob]);
    let mut stat = 0.0;
    for i in 0..o[0].len() {
        let col = o[0][i] + o[1][i];
        if col == 0.0 {
            continue;
        }
        let ea = col * na / n;
        let eb = col * nb / n;
        stat += (o[0][i] - ea).powi(2) / ea + (o[1][i] - eb).powi(2) / eb;
    }
    let df = o[0].len().saturating_sub(1);
    TestResult {
        statistic: stat,
        p_value: chi2_sf(stat, df),
        df: Some(df),
    }
}

/// Histogram of nonnegative integers.
pub fn counts_of(values: impl IntoIterator<Item = usize>) -> Vec<u64> {
    let mut c: Vec<u64> = Vec::new();
    for v in values {
        if v >= c.len() {
            c.resize(v + 1, 0);
        }
        c[v] += 1;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        for _ in 0..10 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 10.0);
    }

    #[test]
    fn moments_merge_matches_sequential() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let all = Moments::from_slice(&xs);
        let mut a = Moments::from_slice(&xs[..37]);
        a.merge(&Moments::from_slice(&xs[37..]));
        assert!((all.mean - a.mean).abs() < 1e-14);
        assert!((all.variance() - a.variance()).abs() < 1e-13);
    }

    #[test]
    fn kolmogorov_reference_points() {
        // P(K > 1.36) ≈ 0.049, P(K > 1.63) ≈ 0.010
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_sf(1.628) - 0.0100).abs() < 5e-4);
    }

    #[test]
    fn chi2_identical_counts_pass() {
        let a = [100, 200, 300, 50, 2, 1];
        let r = chi2_two_sample(&a, &a);
        assert!(r.statistic.abs() < 1e-12);
        assert!(r.p_value > 0.99);
    }

    #[test]
    fn chi2_gof_detects_mismatch() {
        let r = chi2_gof(&[500, 500], &[0.9, 0.1]);
        assert!(r.p_value < 1e-10);
        let r = chi2_gof(&[900, 100], &[0.9, 0.1]);
        assert!(r.p_value > 0.5);
    }
}
