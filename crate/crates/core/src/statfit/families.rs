//! The candidate distribution zoo.
//!
//! Parameters are stored in natural units. Fitting happens on data divided
//! by its standard deviation and goes through an unconstrained
//! reparametrisation (`encode`/`decode`), so every family is optimised over
//! all of `R^k`.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::beta::checked_beta_reg;
use statrs::function::erf::erfc;
use statrs::function::gamma::{checked_gamma_lr, gamma, ln_gamma};

use super::StatError;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const TINY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum FamilyId {
    Normal,
    LogNormal,
    Exponential,
    Gamma,
    WeibullMin,
    Cauchy,
    HalfCauchy,
    Laplace,
    Logistic,
    StudentT,
    JohnsonSU,
    JohnsonSB,
    Gev,
    InverseGaussian,
    Rayleigh,
    Pareto,
}

impl FamilyId {
    pub const ALL: [FamilyId; 16] = [
        Self::Normal,
        Self::LogNormal,
        Self::Exponential,
        Self::Gamma,
        Self::WeibullMin,
        Self::Cauchy,
        Self::HalfCauchy,
        Self::Laplace,
        Self::Logistic,
        Self::StudentT,
        Self::JohnsonSU,
        Self::JohnsonSB,
        Self::Gev,
        Self::InverseGaussian,
        Self::Rayleigh,
        Self::Pareto,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Self::Normal => "norm",
            Self::LogNormal => "lognorm",
            Self::Exponential => "expon",
            Self::Gamma => "gamma",
            Self::WeibullMin => "weibull_min",
            Self::Cauchy => "cauchy",
            Self::HalfCauchy => "halfcauchy",
            Self::Laplace => "laplace",
            Self::Logistic => "logistic",
            Self::StudentT => "t",
            Self::JohnsonSU => "johnsonsu",
            Self::JohnsonSB => "johnsonsb",
            Self::Gev => "genextreme",
            Self::InverseGaussian => "invgauss",
            Self::Rayleigh => "rayleigh",
            Self::Pareto => "pareto",
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Self::Normal | Self::LogNormal => &["mu", "sigma"],
            Self::Exponential | Self::Cauchy | Self::HalfCauchy | Self::Laplace | Self::Logistic => &["loc", "scale"],
            Self::Gamma => &["shape", "scale"],
            Self::WeibullMin => &["shape", "scale"],
            Self::StudentT => &["nu", "loc", "scale"],
            Self::JohnsonSU | Self::JohnsonSB => &["gamma", "delta", "lambda", "xi"],
            Self::Gev => &["shape", "loc", "scale"],
            Self::InverseGaussian => &["mu", "lambda"],
            Self::Rayleigh => &["sigma"],
            Self::Pareto => &["alpha", "x_m"],
        }
    }

    pub fn param_count(self) -> usize {
        self.param_names().len()
    }

    /// Whether `p` is an admissible parameter vector.
    pub fn valid(self, p: &[f64]) -> bool {
        if p.len() != self.param_count() || p.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            Self::Normal | Self::LogNormal | Self::Exponential | Self::Cauchy | Self::HalfCauchy | Self::Laplace | Self::Logistic => p[1] > 0.0,
            Self::Gamma | Self::WeibullMin | Self::InverseGaussian | Self::Pareto => p[0] > 0.0 && p[1] > 0.0,
            Self::StudentT => p[0] > 0.0 && p[2] > 0.0,
            Self::JohnsonSU | Self::JohnsonSB => p[1] > 0.0 && p[2] > 0.0,
            Self::Gev => p[2] > 0.0,
            Self::Rayleigh => p[0] > 0.0,
        }
    }

    /// Log density; `-inf` outside the support.
    pub fn ln_pdf(self, p: &[f64], x: f64) -> f64 {
        match self {
            Self::Normal => {
                let z = (x - p[0]) / p[1];
                -LN_SQRT_2PI - p[1].ln() - 0.5 * z * z
            }
            Self::LogNormal => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let z = (x.ln() - p[0]) / p[1];
                -LN_SQRT_2PI - p[1].ln() - x.ln() - 0.5 * z * z
            }
            Self::Exponential => {
                if x < p[0] {
                    return f64::NEG_INFINITY;
                }
                -p[1].ln() - (x - p[0]) / p[1]
            }
            Self::Gamma => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                (p[0] - 1.0) * x.ln() - x / p[1] - ln_gamma(p[0]) - p[0] * p[1].ln()
            }
            Self::WeibullMin => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                let r = x / p[1];
                p[0].ln() - p[1].ln() + (p[0] - 1.0) * r.ln() - r.powf(p[0])
            }
            Self::Cauchy => {
                let z = (x - p[0]) / p[1];
                -(PI * p[1]).ln() - z.mul_add(z, 1.0).ln()
            }
            Self::HalfCauchy => {
                if x < p[0] {
                    return f64::NEG_INFINITY;
                }
                let z = (x - p[0]) / p[1];
                (2.0 / PI).ln() - p[1].ln() - z.mul_add(z, 1.0).ln()
            }
            Self::Laplace => -(2.0 * p[1]).ln() - (x - p[0]).abs() / p[1],
            Self::Logistic => {
                let z = ((x - p[0]) / p[1]).abs();
                -z - p[1].ln() - 2.0 * (-z).exp().ln_1p()
            }
            Self::StudentT => {
                let (nu, t) = (p[0], (x - p[1]) / p[2]);
                ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln() - p[2].ln()
                    - 0.5 * (nu + 1.0) * (t * t / nu).ln_1p()
            }
            Self::JohnsonSU => jsu_ln_pdf(x, p[0], p[1], p[2], p[3]),
            Self::JohnsonSB => {
                let (lo, hi) = (p[3], p[3] + p[2]);
                if x <= lo || x >= hi {
                    return f64::NEG_INFINITY;
                }
                let z = p[0] + p[1] * ((x - lo) / (hi - x)).ln();
                p[1].ln() + p[2].ln() - LN_SQRT_2PI - (x - lo).ln() - (hi - x).ln() - 0.5 * z * z
            }
            Self::Gev => {
                let (k, z) = (p[0], (x - p[1]) / p[2]);
                if k.abs() < 1e-12 {
                    return -p[2].ln() - z - (-z).exp();
                }
                let t = k.mul_add(z, 1.0);
                if t <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                -p[2].ln() - (1.0 + 1.0 / k) * t.ln() - t.powf(-1.0 / k)
            }
            Self::InverseGaussian => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let (mu, lam) = (p[0], p[1]);
                0.5 * (lam / (2.0 * PI * x * x * x)).ln() - lam * (x - mu) * (x - mu) / (2.0 * mu * mu * x)
            }
            Self::Rayleigh => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                let s2 = p[0] * p[0];
                x.ln() - s2.ln() - x * x / (2.0 * s2)
            }
            Self::Pareto => {
                if x < p[1] {
                    return f64::NEG_INFINITY;
                }
                p[0].ln() + p[0] * p[1].ln() - (p[0] + 1.0) * x.ln()
            }
        }
    }

    pub fn pdf(self, p: &[f64], x: f64) -> f64 {
        self.ln_pdf(p, x).exp()
    }

    /// Distribution function. Returns NaN if a special function fails.
    pub fn cdf(self, p: &[f64], x: f64) -> f64 {
        match self {
            Self::Normal => std_normal_cdf((x - p[0]) / p[1]),
            Self::LogNormal => {
                if x <= 0.0 {
                    0.0
                } else {
                    std_normal_cdf((x.ln() - p[0]) / p[1])
                }
            }
            Self::Exponential => {
                if x <= p[0] {
                    0.0
                } else {
                    -(-(x - p[0]) / p[1]).exp_m1()
                }
            }
            Self::Gamma => {
                if x <= 0.0 {
                    0.0
                } else if x.is_infinite() {
                    1.0
                } else {
                    checked_gamma_lr(p[0], x / p[1]).unwrap_or(f64::NAN)
                }
            }
            Self::WeibullMin => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-(x / p[1]).powf(p[0])).exp_m1()
                }
            }
            Self::Cauchy => 0.5 + ((x - p[0]) / p[1]).atan() / PI,
            Self::HalfCauchy => {
                if x <= p[0] {
                    0.0
                } else {
                    2.0 / PI * ((x - p[0]) / p[1]).atan()
                }
            }
            Self::Laplace => {
                let z = (x - p[0]) / p[1];
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
            Self::Logistic => {
                let z = (x - p[0]) / p[1];
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                }
            }
            Self::StudentT => {
                let (nu, t) = (p[0], (x - p[1]) / p[2]);
                if t.is_infinite() {
                    return if t > 0.0 { 1.0 } else { 0.0 };
                }
                let tail = match checked_beta_reg(0.5 * nu, 0.5, nu / (nu + t * t)) {
                    Ok(v) => 0.5 * v,
                    Err(_) => return f64::NAN,
                };
                if t > 0.0 {
                    1.0 - tail
                } else {
                    tail
                }
            }
            Self::JohnsonSU => std_normal_cdf(p[0] + p[1] * ((x - p[3]) / p[2]).asinh()),
            Self::JohnsonSB => {
                let (lo, hi) = (p[3], p[3] + p[2]);
                if x <= lo {
                    0.0
                } else if x >= hi {
                    1.0
                } else {
                    std_normal_cdf(p[0] + p[1] * ((x - lo) / (hi - x)).ln())
                }
            }
            Self::Gev => {
                let (k, z) = (p[0], (x - p[1]) / p[2]);
                if k.abs() < 1e-12 {
                    return (-(-z).exp()).exp();
                }
                let t = k.mul_add(z, 1.0);
                if t <= 0.0 {
                    return if k > 0.0 { 0.0 } else { 1.0 };
                }
                (-t.powf(-1.0 / k)).exp()
            }
            Self::InverseGaussian => {
                if x <= 0.0 {
                    return 0.0;
                }
                if x.is_infinite() {
                    return 1.0;
                }
                let (mu, lam) = (p[0], p[1]);
                let a = (lam / x).sqrt();
                let first = std_normal_cdf(a * (x / mu - 1.0));
                let second = (2.0 * lam / mu + ln_std_normal_cdf(-a * (x / mu + 1.0))).exp();
                (first + second).clamp(0.0, 1.0)
            }
            Self::Rayleigh => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x * x / (2.0 * p[0] * p[0])).exp_m1()
                }
            }
            Self::Pareto => {
                if x <= p[1] {
                    0.0
                } else {
                    1.0 - (p[1] / x).powf(p[0])
                }
            }
        }
    }

    /// Convert parameters fitted on `x / s` back to the units of `x`.
    pub(crate) fn rescale(self, p: &[f64], s: f64) -> Vec<f64> {
        let mut q = p.to_vec();
        match self {
            Self::Normal | Self::Exponential | Self::Cauchy | Self::HalfCauchy | Self::Laplace | Self::Logistic | Self::InverseGaussian => {
                q[0] *= s;
                q[1] *= s;
            }
            Self::LogNormal => q[0] += s.ln(),
            Self::Gamma | Self::WeibullMin | Self::Pareto => q[1] *= s,
            Self::StudentT | Self::Gev => {
                q[1] *= s;
                q[2] *= s;
            }
            Self::JohnsonSU | Self::JohnsonSB => {
                q[2] *= s;
                q[3] *= s;
            }
            Self::Rayleigh => q[0] *= s,
        }
        q
    }

    /// Moment-matched starting parameters, or `None` when the data fall
    /// outside the family's support.
    pub(crate) fn initial(self, st: &DataStats) -> Option<Vec<f64>> {
        let positive = st.min > 0.0;
        let nonneg = st.min >= 0.0;
        let p = match self {
            Self::Normal => vec![st.mean, st.sd],
            Self::LogNormal => {
                if !positive {
                    return None;
                }
                vec![st.log_mean, st.log_sd.max(1e-3)]
            }
            Self::Exponential => vec![st.min, (st.mean - st.min).max(TINY)],
            Self::Gamma => {
                if !positive {
                    return None;
                }
                let v = st.sd * st.sd;
                vec![st.mean * st.mean / v, v / st.mean]
            }
            Self::WeibullMin => {
                if !nonneg || st.mean <= 0.0 {
                    return None;
                }
                let k = (st.sd / st.mean).powf(-1.086).clamp(0.05, 50.0);
                vec![k, st.mean / gamma(1.0 + 1.0 / k)]
            }
            Self::Cauchy => vec![st.median, (0.5 * st.iqr).max(TINY)],
            Self::HalfCauchy => vec![st.min, (st.median - st.min).max(TINY)],
            Self::Laplace => vec![st.median, st.mad_median.max(TINY)],
            Self::Logistic => vec![st.mean, st.sd * 3f64.sqrt() / PI],
            Self::StudentT => vec![5.0, st.median, (st.sd * (3.0f64 / 5.0).sqrt()).max(TINY)],
            Self::JohnsonSU => {
                let g = (-st.skew).clamp(-3.0, 3.0);
                vec![g, 1.5, st.sd, st.median]
            }
            Self::JohnsonSB => {
                let r = (st.max - st.min).max(TINY);
                vec![0.0, 1.0, 1.2 * r, st.min - 0.1 * r]
            }
            Self::Gev => {
                let s = st.sd * 6f64.sqrt() / PI;
                vec![0.1, st.mean - 0.577_215_664_901_532_9 * s, s]
            }
            Self::InverseGaussian => {
                if !positive {
                    return None;
                }
                let inv = (st.mean_inv - 1.0 / st.mean).max(TINY);
                vec![st.mean, 1.0 / inv]
            }
            Self::Rayleigh => {
                if !nonneg {
                    return None;
                }
                vec![(st.mean_sq / 2.0).sqrt()]
            }
            Self::Pareto => {
                if !positive {
                    return None;
                }
                let s = st.mean_log_ratio_min;
                if s <= 0.0 {
                    return None;
                }
                vec![1.0 / s, st.min]
            }
        };
        self.valid(&p).then_some(p)
    }

    /// Natural parameters to the unconstrained search space.
    pub(crate) fn encode(self, p: &[f64], st: &DataStats) -> Vec<f64> {
        match self {
            Self::Normal | Self::LogNormal | Self::Cauchy | Self::Laplace | Self::Logistic => vec![p[0], p[1].ln()],
            // The location sits at its MLE, the sample minimum.
            Self::Exponential | Self::HalfCauchy => vec![p[1].ln()],
            Self::Pareto => vec![p[0].ln()],
            Self::Gamma | Self::WeibullMin | Self::InverseGaussian => vec![p[0].ln(), p[1].ln()],
            Self::StudentT => vec![p[0].ln(), p[1], p[2].ln()],
            Self::JohnsonSU => vec![p[0], p[1].ln(), p[2].ln(), p[3]],
            Self::JohnsonSB => {
                let r = st.range();
                let below = (st.min - p[3]).max(TINY * r);
                let above = (p[3] + p[2] - st.max).max(TINY * r);
                vec![p[0], p[1].ln(), (below / r).ln(), (above / r).ln()]
            }
            Self::Gev => vec![p[0], p[1], p[2].ln()],
            Self::Rayleigh => vec![p[0].ln()],
        }
    }

    pub(crate) fn decode(self, t: &[f64], st: &DataStats) -> Vec<f64> {
        match self {
            Self::Normal | Self::LogNormal | Self::Cauchy | Self::Laplace | Self::Logistic => vec![t[0], t[1].exp()],
            Self::Exponential | Self::HalfCauchy => vec![st.min, t[0].exp()],
            Self::Pareto => vec![t[0].exp(), st.min],
            Self::Gamma | Self::WeibullMin | Self::InverseGaussian => vec![t[0].exp(), t[1].exp()],
            Self::StudentT => vec![t[0].min(16.0).exp(), t[1], t[2].exp()],
            Self::JohnsonSU => vec![t[0], t[1].exp(), t[2].exp(), t[3]],
            Self::JohnsonSB => {
                let r = st.range();
                let lo = st.min - r * t[2].exp();
                let hi = st.max + r * t[3].exp();
                vec![t[0], t[1].exp(), hi - lo, lo]
            }
            Self::Gev => vec![t[0].clamp(-10.0, 10.0), t[1], t[2].exp()],
            Self::Rayleigh => vec![t[0].exp()],
        }
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for FamilyId {
    type Err = StatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| StatError::UnknownFamily(s.to_string()))
    }
}

impl From<FamilyId> for String {
    fn from(f: FamilyId) -> Self {
        f.id().to_string()
    }
}

impl TryFrom<String> for FamilyId {
    type Error = StatError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Summary statistics used for initial values and reparametrisation.
#[derive(Debug, Clone)]
pub(crate) struct DataStats {
    pub mean: f64,
    pub sd: f64,
    pub skew: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub iqr: f64,
    pub mad_median: f64,
    pub log_mean: f64,
    pub log_sd: f64,
    pub mean_inv: f64,
    pub mean_sq: f64,
    pub mean_log_ratio_min: f64,
}

impl DataStats {
    /// `sorted` must be sorted ascending and nonempty.
    pub fn new(sorted: &[f64]) -> Self {
        let n = sorted.len() as f64;
        let mean = sorted.iter().sum::<f64>() / n;
        let var = sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        let skew = if sd > 0.0 {
            sorted.iter().map(|x| ((x - mean) / sd).powi(3)).sum::<f64>() / n
        } else {
            0.0
        };
        let min = sorted[0];
        let max = sorted[sorted.len() - 1];
        let median = quantile(sorted, 0.5);
        let iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
        let mad_median = sorted.iter().map(|x| (x - median).abs()).sum::<f64>() / n;
        let (log_mean, log_sd, mean_inv, mean_log_ratio_min) = if min > 0.0 {
            let lm = sorted.iter().map(|x| x.ln()).sum::<f64>() / n;
            let lv = sorted.iter().map(|x| (x.ln() - lm).powi(2)).sum::<f64>() / n;
            let mi = sorted.iter().map(|x| 1.0 / x).sum::<f64>() / n;
            (lm, lv.sqrt(), mi, lm - min.ln())
        } else {
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        };
        let mean_sq = sorted.iter().map(|x| x * x).sum::<f64>() / n;
        Self { mean, sd, skew, min, max, median, iqr, mad_median, log_mean, log_sd, mean_inv, mean_sq, mean_log_ratio_min }
    }

    fn range(&self) -> f64 {
        (self.max - self.min).max(TINY)
    }
}

/// Linear-interpolated sample quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// `ln Phi(z)`, accurate far into the lower tail.
pub(crate) fn ln_std_normal_cdf(z: f64) -> f64 {
    if z > -30.0 {
        std_normal_cdf(z).ln()
    } else {
        let z2 = z * z;
        -0.5 * z2 - (-z).ln() - LN_SQRT_2PI + (1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2)).ln()
    }
}

pub(crate) fn jsu_ln_pdf(x: f64, gamma: f64, delta: f64, lambda: f64, xi: f64) -> f64 {
    let u = (x - xi) / lambda;
    let z = gamma + delta * u.asinh();
    delta.ln() - lambda.ln() - LN_SQRT_2PI - u.hypot(1.0).ln() - 0.5 * z * z
}
