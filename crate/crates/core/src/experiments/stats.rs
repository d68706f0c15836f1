//! Small statistics kit: Kolmogorov-Smirnov tests, medians with order
//! statistic intervals, least squares and binomial intervals.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Effective sample size entering the asymptotic law.
    pub n_eff: f64,
}

impl KsResult {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value >= level
    }
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn p_value(d: f64, n_eff: f64) -> f64 {
    let sn = n_eff.sqrt();
    kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)
}

/// One-sample test against a continuous CDF.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    KsResult { statistic: d, p_value: p_value(d, n), n_eff: n }
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.total_cmp(q));
    ys.sort_by(|p, q| p.total_cmp(q));
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let t = xs[i].min(ys[j]);
        while i < n && xs[i] <= t {
            i += 1;
        }
        while j < m && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let n_eff = (n * m) as f64 / (n + m) as f64;
    KsResult { statistic: d, p_value: p_value(d, n_eff), n_eff }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MedianEstimate {
    pub median: f64,
    /// 95% distribution-free interval from order statistics.
    pub lower: f64,
    pub upper: f64,
    pub se: f64,
    pub n: usize,
    pub censored: usize,
}

/// Median of a right-censored sample; censored entries count as larger than
/// every observed value. `None` when half or more are censored.
pub fn censored_median(values: &[f64], censored: &[bool]) -> Option<MedianEstimate> {
    let n = values.len();
    let mut xs: Vec<f64> = values.iter().zip(censored).map(|(v, c)| if *c { f64::INFINITY } else { *v }).collect();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n_cens = censored.iter().filter(|c| **c).count();
    let median = if n % 2 == 1 { xs[n / 2] } else { 0.5 * (xs[n / 2 - 1] + xs[n / 2]) };
    if n == 0 || !median.is_finite() {
        return None;
    }
    let z = 1.959_963_984_540_054;
    let half = z * (n as f64).sqrt() / 2.0;
    let lo = ((n as f64 / 2.0 - half).floor().max(1.0) as usize).min(n) - 1;
    let hi = ((n as f64 / 2.0 + half).ceil() as usize).clamp(1, n) - 1;
    let (lower, upper) = (xs[lo], xs[hi]);
    Some(MedianEstimate { median, lower, upper, se: (upper - lower) / (2.0 * z), n, censored: n_cens })
}

pub fn median(values: &[f64]) -> f64 {
    censored_median(values, &vec![false; values.len()]).map_or(f64::NAN, |m| m.median)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    /// 95% interval from the Student t law with `n - 2` degrees of freedom.
    pub slope_ci: (f64, f64),
    pub r_squared: f64,
    pub n: usize,
}

/// Ordinary least squares `y = intercept + slope x`; needs three points.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_se = (rss / (nf - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, nf - 2.0).expect("positive dof").inverse_cdf(0.975);
    let r_squared = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    Some(LinearFit { slope, intercept, slope_se, slope_ci: (slope - t * slope_se, slope + t * slope_se), r_squared, n })
}

pub fn log_log_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    /// 95% Wilson interval; with no successes the upper end is the rule of
    /// three `3 / n`.
    pub lower: f64,
    pub upper: f64,
}

pub fn proportion(successes: u64, trials: u64) -> Proportion {
    let n = trials as f64;
    let p = if trials == 0 { 0.0 } else { successes as f64 / n };
    if successes == 0 {
        return Proportion { successes, trials, estimate: 0.0, lower: 0.0, upper: if trials == 0 { 1.0 } else { (3.0 / n).min(1.0) } };
    }
    let z = Normal::new(0.0, 1.0).expect("unit normal").inverse_cdf(0.975);
    let den = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / den;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / den;
    Proportion { successes, trials, estimate: p, lower: (centre - half).max(0.0), upper: (centre + half).min(1.0) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kolmogorov_reference_values() {
        // P(K > 1.36) ~ 0.05, P(K > 1.63) ~ 0.01
        assert!((kolmogorov_q(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_q(1.628) - 0.01).abs() < 1e-3);
        assert_eq!(kolmogorov_q(0.0), 1.0);
    }

    #[test]
    fn uniform_sample_passes_and_shifted_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..2000).map(|_| rng.gen()).collect();
        assert!(ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).passes(0.01));
        let shifted: Vec<f64> = xs.iter().map(|x| x * 0.9).collect();
        assert!(!ks_one_sample(&shifted, |x| x.clamp(0.0, 1.0)).passes(0.01));
        let ys: Vec<f64> = (0..1500).map(|_| rng.gen()).collect();
        assert!(ks_two_sample(&xs, &ys).passes(0.01));
        assert!(!ks_two_sample(&shifted, &ys).passes(0.01));
    }

    #[test]
    fn exponential_sample_against_its_cdf() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..5000).map(|_| -(1.0 - rng.gen::<f64>()).ln() / 2.0).collect();
        assert!(ks_one_sample(&xs, |t| 1.0 - (-2.0 * t).exp()).passes(0.01));
    }

    #[test]
    fn median_handles_censoring() {
        let v = [5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(median(&v), 3.0);
        let m = censored_median(&v, &[true, false, false, false, false]).unwrap();
        assert_eq!(m.median, 3.0);
        assert_eq!(m.censored, 1);
        assert!(censored_median(&v, &[true, true, true, false, false]).is_none());
    }

    #[test]
    fn exact_line_and_power_law() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 + 0.5 * v).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-14 && (f.intercept - 2.0).abs() < 1e-14);
        assert!(f.slope_se < 1e-12 && (f.r_squared - 1.0).abs() < 1e-14);
        let ls = [8.0, 12.0, 16.0, 24.0];
        let t: Vec<f64> = ls.iter().map(|l: &f64| 0.3 * l.powi(3)).collect();
        assert!((log_log_fit(&ls, &t).unwrap().slope - 3.0).abs() < 1e-12);
    }

    #[test]
    fn wilson_and_rule_of_three() {
        let p = proportion(0, 300);
        assert_eq!(p.upper, 0.01);
        let q = proportion(50, 100);
        assert!((q.lower - 0.4038).abs() < 1e-3 && (q.upper - 0.5962).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn ks_statistic_in_unit_interval(xs in proptest::collection::vec(0.0f64..1.0, 1..200)) {
            let r = ks_one_sample(&xs, |x| x);
            prop_assert!(r.statistic >= 0.0 && r.statistic <= 1.0);
            prop_assert!(r.p_value >= 0.0 && r.p_value <= 1.0);
        }

        #[test]
        fn fit_recovers_lines(a in -5.0f64..5.0, b in -3.0f64..3.0) {
            let x = [0.0, 1.0, 2.5, 4.0, 7.0];
            let y: Vec<f64> = x.iter().map(|v| a + b * v).collect();
            let f = linear_fit(&x, &y).unwrap();
            prop_assert!((f.slope - b).abs() < 1e-10);
            prop_assert!(f.slope_ci.0 <= b + 1e-9 && b - 1e-9 <= f.slope_ci.1);
        }
    }
}
