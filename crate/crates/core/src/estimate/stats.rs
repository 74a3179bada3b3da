use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{Error, Result};

/// Replica values of one functional, in replica-index order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSet {
    descriptor: String,
    values: Vec<f64>,
    seeds: Vec<u64>,
}

impl SampleSet {
    pub fn new(descriptor: impl Into<String>, values: Vec<f64>, seeds: Vec<u64>) -> Result<Self> {
        let descriptor = descriptor.into();
        if descriptor.is_empty() {
            return Err(Error::Data("sample set descriptor is empty".into()));
        }
        if values.len() != seeds.len() {
            return Err(Error::Data(format!(
                "{descriptor}: {} values but {} seeds",
                values.len(),
                seeds.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("{descriptor}: value {i} is not finite")));
        }
        Ok(SampleSet {
            descriptor,
            values,
            seeds,
        })
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Empirical CDF `#{x_i <= x} / n`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.values.iter().filter(|&&v| v <= x).count() as f64 / self.len() as f64
    }

    /// Applies `f` to every value, keeping seeds.
    pub fn map(&self, descriptor: impl Into<String>, f: impl Fn(f64) -> f64) -> Result<SampleSet> {
        SampleSet::new(
            descriptor,
            self.values.iter().map(|&v| f(v)).collect(),
            self.seeds.clone(),
        )
    }

    pub fn quantile(&self, p: f64) -> Result<QuantileEstimate> {
        quantile_estimate(self, p, DEFAULT_CONFIDENCE)
    }
}

pub const DEFAULT_CONFIDENCE: f64 = 0.95;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantileEstimate {
    pub p: f64,
    pub point: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub confidence: f64,
    pub n: usize,
}

impl QuantileEstimate {
    pub fn width(&self) -> f64 {
        self.ci_hi - self.ci_lo
    }
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} = {p} must lie in (0, 1)")))
    }
}

/// `x_(ceil(n p))` with a distribution-free order-statistic interval.
///
/// With `B ~ Bin(n, p)` counting samples below the true quantile,
/// `P(x_(l) <= q_p <= x_(u)) >= P(l <= B <= u - 1)`; `l` is the largest rank with
/// `P(B <= l - 1) <= (1 - c)/2` and `u` the smallest with `P(B >= u) <= (1 - c)/2`,
/// both clamped to `[1, n]`.
pub fn quantile_estimate(sample: &SampleSet, p: f64, confidence: f64) -> Result<QuantileEstimate> {
    check_probability(p, "quantile level")?;
    check_probability(confidence, "confidence")?;
    let n = sample.len();
    if n == 0 {
        return Err(Error::Data(format!("{}: no samples", sample.descriptor)));
    }
    let x = sample.sorted();
    let k = ((n as f64 * p).ceil() as usize).clamp(1, n);
    let tail = 0.5 * (1.0 - confidence);
    let bin = Binomial::new(p, n as u64).map_err(|e| Error::Domain(e.to_string()))?;
    let mut lo = 1;
    for l in (1..=k).rev() {
        if l == 1 || bin.cdf(l as u64 - 1) <= tail {
            lo = l;
            break;
        }
    }
    let mut hi = n;
    for u in k..=n {
        if 1.0 - bin.cdf(u as u64 - 1) <= tail {
            hi = u;
            break;
        }
    }
    Ok(QuantileEstimate {
        p,
        point: x[k - 1],
        ci_lo: x[lo - 1],
        ci_hi: x[hi - 1],
        confidence,
        n,
    })
}

/// Plain `x_(ceil(n p))` of a slice (`p` in (0, 1]).
pub fn order_quantile(values: &[f64], p: f64) -> f64 {
    let mut x = values.to_vec();
    x.sort_by(f64::total_cmp);
    let k = ((x.len() as f64 * p).ceil() as usize).clamp(1, x.len());
    x[k - 1]
}

/// Least-squares line `y = intercept + slope x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    pub r2: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n != y.len() || n < 3 {
        return Err(Error::Data(format!(
            "least squares needs >= 3 paired points (got {} x, {} y)",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Data("least squares input is not finite".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Data("least squares abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let stderr = (ssr / (nf - 2.0) / sxx).sqrt();
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ssr / syy).clamp(0.0, 1.0)
    };
    Ok(LineFit {
        slope,
        intercept,
        stderr,
        r2,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub r2: f64,
    /// `(ln eps, ln a_eps)`.
    pub points: Vec<(f64, f64)>,
}

/// OLS of `ln a_eps` on `ln eps`; the slope estimates `1 - xi Q(xi)`.
pub fn fit_scaling_exponent(points: &[(f64, f64)]) -> Result<ExponentFit> {
    if points.len() < 3 {
        return Err(Error::Data(format!(
            "scaling fit needs >= 3 points (got {})",
            points.len()
        )));
    }
    if let Some(&(e, a)) = points.iter().find(|(e, a)| !(*e > 0.0 && *a > 0.0)) {
        return Err(Error::Data(format!(
            "scaling fit needs positive inputs (got eps = {e}, a = {a})"
        )));
    }
    if points.windows(2).any(|w| !(w[1].0 < w[0].0)) {
        return Err(Error::Data("eps values must be strictly decreasing".into()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(e, a)| (e.ln(), a.ln())).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = logs.iter().copied().unzip();
    let fit = ols(&x, &y)?;
    Ok(ExponentFit {
        slope: fit.slope,
        intercept: fit.intercept,
        stderr: fit.stderr,
        r2: fit.r2,
        points: logs,
    })
}

/// Two-sample Kolmogorov-Smirnov statistic `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Data("KS statistic needs two nonempty samples".into()));
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic 95% critical value of the two-sample KS statistic.
pub fn ks_critical_95(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.358 * ((n + m) / (n * m)).sqrt()
}
