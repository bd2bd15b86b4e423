//! Singular-value statistics of channel tensors and distribution-shift
//! detection.
//!
//! Pooled singular values are compared against a zoo of parametric
//! families. Each family is fitted by maximum likelihood, scored by the
//! two-sided Kolmogorov-Smirnov distance and accepted when that distance is
//! under the Lilliefors critical value at `alpha = 0.01`.

mod families;
mod fit;
mod optim;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::ChannelTensor;

pub use families::FamilyId;
pub use fit::{best_fit, detect, detect_ranked, fit_family, DetectionLevel, DetectionVerdict, FitResult, DEFAULT_DRIFT_THRESHOLD};
pub use optim::{nelder_mead, NelderMeadResult};

#[derive(Debug, Error, PartialEq)]
pub enum StatError {
    #[error("sample is empty")]
    EmptySample,
    #[error("sample value {0} is negative or not finite")]
    InvalidValue(f64),
    #[error("sample is not sorted ascending")]
    Unsorted,
    #[error("cdf returned {value} at x = {x}")]
    CdfOutOfRange { x: f64, value: f64 },
    #[error("alpha = {0} is not supported; only 0.01 has published coefficients")]
    UnsupportedAlpha(f64),
    #[error("sample size {n} is below the minimum {min}")]
    SampleTooSmall { n: usize, min: usize },
    #[error("{0}")]
    Domain(String),
    #[error("baseline fit for {0} is not accepted")]
    BaselineRejected(FamilyId),
    #[error("unknown distribution family '{0}'")]
    UnknownFamily(String),
    #[error("distribution zoo is empty")]
    EmptyZoo,
}

/// How an `N x N x N_t` tensor is flattened before the SVD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvdMode {
    /// Antenna 0 only: the `N x N` matrix `h[:][:][0]`.
    Slice0,
    /// Mode-1 unfolding: `N x (N N_t)`, row `i` is transmitter `i`.
    #[default]
    Unfold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleProvenance {
    pub realizations: usize,
    pub n_pairs: usize,
    pub n_tx: usize,
}

/// Pooled singular values, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSample {
    values: Vec<f64>,
    provenance: SampleProvenance,
}

impl EigenSample {
    pub fn new(mut values: Vec<f64>, provenance: SampleProvenance) -> Result<Self, StatError> {
        if values.is_empty() {
            return Err(StatError::EmptySample);
        }
        if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(StatError::InvalidValue(bad));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values, provenance })
    }

    /// Pool the singular values of several tensors of the same shape.
    pub fn pooled<'a, I>(tensors: I, mode: SvdMode) -> Result<Self, StatError>
    where
        I: IntoIterator<Item = &'a ChannelTensor>,
    {
        let mut values = Vec::new();
        let mut prov = SampleProvenance { realizations: 0, n_pairs: 0, n_tx: 0 };
        for h in tensors {
            values.extend(channel_eigenvalues(h, mode));
            prov = SampleProvenance { realizations: prov.realizations + 1, n_pairs: h.n_pairs(), n_tx: h.n_tx() };
        }
        Self::new(values, prov)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_sigma(&self) -> usize {
        self.values.len()
    }

    pub fn provenance(&self) -> SampleProvenance {
        self.provenance
    }
}

/// Singular values of the (flattened) tensor, descending.
pub fn channel_eigenvalues(h: &ChannelTensor, mode: SvdMode) -> Vec<f64> {
    let (n, nt) = (h.n_pairs(), h.n_tx());
    let m = match mode {
        SvdMode::Slice0 => DMatrix::from_fn(n, n, |i, r| h.get(i, r)[0]),
        SvdMode::Unfold => DMatrix::from_fn(n, n * nt, |i, j| h.get(i, j / nt)[j % nt]),
    };
    let mut sv: Vec<f64> = m.singular_values().iter().map(|s| s.max(0.0)).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

fn check_sorted(sorted: &[f64]) -> Result<(), StatError> {
    if sorted.is_empty() {
        return Err(StatError::EmptySample);
    }
    if sorted.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(StatError::Unsorted);
    }
    Ok(())
}

/// Right-continuous ECDF: fraction of values `<= x`.
pub fn empirical_cdf(sorted: &[f64], x: f64) -> Result<f64, StatError> {
    check_sorted(sorted)?;
    let count = sorted.partition_point(|&v| v <= x);
    Ok(count as f64 / sorted.len() as f64)
}

/// Two-sided KS distance between the ECDF of `sorted` and `cdf`.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64, StatError> {
    check_sorted(sorted)?;
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        if !(0.0..=1.0).contains(&f) {
            return Err(StatError::CdfOutOfRange { x, value: f });
        }
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max(hi - f).max(f - lo);
    }
    Ok(d.clamp(0.0, 1.0))
}

/// Lilliefors critical value `1.035 / ((n + 0.83)/sqrt(n) - 0.01)`.
pub fn lilliefors_dcrit(n_sigma: usize, alpha: f64) -> Result<f64, StatError> {
    if alpha != 0.01 {
        return Err(StatError::UnsupportedAlpha(alpha));
    }
    if n_sigma < 5 {
        return Err(StatError::SampleTooSmall { n: n_sigma, min: 5 });
    }
    let n = n_sigma as f64;
    Ok(1.035 / ((n + 0.83) / n.sqrt() - 0.01))
}

fn check_jsu(delta: f64, lambda: f64) -> Result<(), StatError> {
    if !(lambda > 0.0 && delta > 0.0) {
        return Err(StatError::Domain(format!("Johnson SU needs delta > 0 and lambda > 0, got delta = {delta}, lambda = {lambda}")));
    }
    Ok(())
}

pub fn johnson_su_pdf(x: f64, gamma: f64, delta: f64, lambda: f64, xi: f64) -> Result<f64, StatError> {
    check_jsu(delta, lambda)?;
    Ok(families::jsu_ln_pdf(x, gamma, delta, lambda, xi).exp())
}

pub fn johnson_su_cdf(x: f64, gamma: f64, delta: f64, lambda: f64, xi: f64) -> Result<f64, StatError> {
    check_jsu(delta, lambda)?;
    Ok(families::std_normal_cdf(gamma + delta * ((x - xi) / lambda).asinh()))
}
