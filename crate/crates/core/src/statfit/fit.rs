use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::families::{DataStats, FamilyId};
use super::optim::nelder_mead;
use super::{ks_statistic, lilliefors_dcrit, StatError};
use crate::seed::{derive, rng_from};

pub const DEFAULT_DRIFT_THRESHOLD: f64 = 0.25;
const ALPHA: f64 = 0.01;
const STARTS: usize = 5;
const XTOL: f64 = 1e-10;
const EVALS_PER_PARAM: usize = 2000;
const START_SEED: u64 = 0x05EE_DF17;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: FamilyId,
    pub params: Vec<f64>,
    pub d_stat: f64,
    pub d_crit: f64,
    pub accepted: bool,
    /// `-inf` (serialised as `null`) for failed fits.
    pub log_likelihood: f64,
    pub failed: bool,
    pub n_sigma: usize,
}

impl FitResult {
    fn failure(family: FamilyId, d_crit: f64, n_sigma: usize) -> Self {
        Self {
            family,
            params: Vec::new(),
            d_stat: 1.0,
            d_crit,
            accepted: false,
            log_likelihood: f64::NEG_INFINITY,
            failed: true,
            n_sigma,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.family.cdf(&self.params, x)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.family.pdf(&self.params, x)
    }
}

fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn log_likelihood(family: FamilyId, p: &[f64], data: &[f64]) -> f64 {
    data.iter().map(|&x| family.ln_pdf(p, x)).sum()
}

/// Maximum-likelihood fit of one family, scored by KS distance.
pub fn fit_family(values: &[f64], family: FamilyId) -> Result<FitResult, StatError> {
    if values.is_empty() {
        return Err(StatError::EmptySample);
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(StatError::InvalidValue(bad));
    }
    let n = values.len();
    let min_n = (family.param_count() + 2).max(5);
    if n < min_n {
        return Err(StatError::SampleTooSmall { n, min: min_n });
    }
    let d_crit = lilliefors_dcrit(n, ALPHA)?;
    let sorted = sorted_copy(values);
    let raw = DataStats::new(&sorted);
    if !(raw.sd > 0.0) || !raw.sd.is_finite() {
        return Ok(FitResult::failure(family, d_crit, n));
    }

    let scale = raw.sd;
    let y: Vec<f64> = sorted.iter().map(|x| x / scale).collect();
    let st = DataStats::new(&y);
    let Some(init) = family.initial(&st) else {
        return Ok(FitResult::failure(family, d_crit, n));
    };

    let objective = |t: &[f64]| {
        let p = family.decode(t, &st);
        if !family.valid(&p) {
            return f64::INFINITY;
        }
        let ll = log_likelihood(family, &p, &y);
        if ll.is_finite() {
            -ll
        } else {
            f64::INFINITY
        }
    };

    let t0 = family.encode(&init, &st);
    let k = t0.len();
    let mut rng = rng_from(derive(START_SEED, &[family as u64]));
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in 0..STARTS {
        let x0: Vec<f64> = if start == 0 {
            t0.clone()
        } else {
            t0.iter().map(|&t| t + rng.random_range(-0.5..0.5) * (1.0 + 0.25 * t.abs())).collect()
        };
        let step: Vec<f64> = x0.iter().map(|t| 0.1 + 0.05 * t.abs()).collect();
        let r = nelder_mead(objective, &x0, &step, XTOL, EVALS_PER_PARAM * k);
        if r.fx.is_finite() && best.as_ref().is_none_or(|(_, f)| r.fx < *f) {
            best = Some((r.x, r.fx));
        }
    }
    let Some((t, _)) = best else {
        return Ok(FitResult::failure(family, d_crit, n));
    };

    let params = family.rescale(&family.decode(&t, &st), scale);
    if !family.valid(&params) {
        return Ok(FitResult::failure(family, d_crit, n));
    }
    let ll = log_likelihood(family, &params, &sorted);
    let d_stat = match ks_statistic(&sorted, |x| family.cdf(&params, x)) {
        Ok(d) if ll.is_finite() => d,
        _ => return Ok(FitResult::failure(family, d_crit, n)),
    };
    Ok(FitResult {
        family,
        params,
        d_stat,
        d_crit,
        accepted: d_stat <= d_crit,
        log_likelihood: ll,
        failed: false,
        n_sigma: n,
    })
}

/// Fit every family in `zoo` and rank by KS distance.
///
/// Ties go to the higher log-likelihood, then to the lexicographically
/// smaller family id.
pub fn best_fit(values: &[f64], zoo: &[FamilyId]) -> Result<Vec<FitResult>, StatError> {
    if zoo.is_empty() {
        return Err(StatError::EmptyZoo);
    }
    let mut fits = zoo.par_iter().map(|&f| fit_family(values, f)).collect::<Result<Vec<_>, _>>()?;
    fits.sort_by(|a, b| {
        a.d_stat
            .total_cmp(&b.d_stat)
            .then_with(|| b.log_likelihood.total_cmp(&a.log_likelihood))
            .then_with(|| a.family.id().cmp(b.family.id()))
    });
    Ok(fits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DetectionLevel {
    Clean,
    WeakAlarm,
    StrongAlarm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionVerdict {
    pub level: DetectionLevel,
    pub baseline_family: FamilyId,
    pub observed_family: FamilyId,
    /// KS distance of the frozen baseline fit against the observed sample.
    pub baseline_d_on_observed: f64,
    /// KS distance of the baseline family refitted on the observed sample.
    pub refit_d: f64,
    pub refit_accepted: bool,
    /// `|p_refit - p_baseline| / |p_baseline|` per parameter.
    pub param_drift: Vec<f64>,
}

/// Compare an observed sample against an accepted baseline fit.
///
/// `StrongAlarm` when the best family changes or the refitted baseline family
/// is rejected, `WeakAlarm` when some parameter drifts by more than
/// `drift_threshold`, `Clean` otherwise.
pub fn detect(baseline: &FitResult, observed: &[f64], zoo: &[FamilyId], drift_threshold: f64) -> Result<DetectionVerdict, StatError> {
    if !baseline.accepted || baseline.failed {
        return Err(StatError::BaselineRejected(baseline.family));
    }
    let sorted = sorted_copy(observed);
    let ranking = best_fit(&sorted, zoo)?;
    detect_ranked(baseline, &sorted, &ranking, drift_threshold)
}

/// [`detect`] with the observed sample's ranking already computed.
pub fn detect_ranked(
    baseline: &FitResult,
    observed: &[f64],
    ranking: &[FitResult],
    drift_threshold: f64,
) -> Result<DetectionVerdict, StatError> {
    if !baseline.accepted || baseline.failed {
        return Err(StatError::BaselineRejected(baseline.family));
    }
    let Some(top) = ranking.first() else {
        return Err(StatError::EmptyZoo);
    };
    let sorted = sorted_copy(observed);
    let observed_family = top.family;
    let refit = match ranking.iter().find(|r| r.family == baseline.family) {
        Some(r) => r.clone(),
        None => fit_family(&sorted, baseline.family)?,
    };
    let baseline_d_on_observed = ks_statistic(&sorted, |x| baseline.cdf(x))?;
    let param_drift: Vec<f64> = if refit.failed {
        vec![f64::INFINITY; baseline.params.len()]
    } else {
        baseline
            .params
            .iter()
            .zip(&refit.params)
            .map(|(b, r)| {
                let d = (r - b).abs();
                if b.abs() > 1e-300 {
                    d / b.abs()
                } else {
                    d
                }
            })
            .collect()
    };
    let level = if observed_family != baseline.family || !refit.accepted {
        DetectionLevel::StrongAlarm
    } else if param_drift.iter().any(|&d| d > drift_threshold) {
        DetectionLevel::WeakAlarm
    } else {
        DetectionLevel::Clean
    };
    Ok(DetectionVerdict {
        level,
        baseline_family: baseline.family,
        observed_family,
        baseline_d_on_observed,
        refit_d: refit.d_stat,
        refit_accepted: refit.accepted,
        param_drift,
    })
}
