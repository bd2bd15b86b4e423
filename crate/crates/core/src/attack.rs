//! Adversarial perturbations of the channel tensor reported to the central
//! controller.
//!
//! Four constrained attacks (channel-count bounded `B_c` and gain-budget
//! bounded `B_p`, each against vertices or edges) plus three heuristic
//! baselines. Every attack returns the perturbed tensor and an
//! [`AttackReport`] recording what was touched and how much budget it used.
//!
//! Gains are ℓ2 norms of the `N_t`-length channel vectors and attacked
//! vectors are rescaled radially, so per-element phases never change. For
//! `N_t = 1` this is exactly the scalar magnitude/phase arithmetic.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::ChannelTensor;
use crate::seed::rng_from;

#[derive(Debug, Error, PartialEq)]
pub enum AttackError {
    #[error("{name} must lie in [0, 1], got {value}")]
    InvalidLevel { name: &'static str, value: f64 },
    #[error("edge attacks need at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("edge attack without limits needs an explicit nolimit_edge_scale")]
    NoLimitEdgeUnsupported,
    #[error("nolimit_edge_scale must be finite and >= 0, got {0}")]
    InvalidEdgeScale(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttackKind {
    BcVertex,
    BcEdge,
    BpVertex,
    BpEdge,
    UpperBoundBc,
    SingleBc,
    UniformBp,
}

impl AttackKind {
    pub const ALL: [AttackKind; 7] = [
        Self::BcVertex,
        Self::BcEdge,
        Self::BpVertex,
        Self::BpEdge,
        Self::UpperBoundBc,
        Self::SingleBc,
        Self::UniformBp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::BcVertex => "BcVertex",
            Self::BcEdge => "BcEdge",
            Self::BpVertex => "BpVertex",
            Self::BpEdge => "BpEdge",
            Self::UpperBoundBc => "UpperBoundBc",
            Self::SingleBc => "SingleBc",
            Self::UniformBp => "UniformBp",
        }
    }

    /// Whether the kind is driven by `l_c` (channel count) rather than `l_p`.
    pub fn uses_channel_level(self) -> bool {
        matches!(self, Self::BcVertex | Self::BcEdge | Self::UpperBoundBc)
    }

    pub fn uses_power_level(self) -> bool {
        matches!(self, Self::BpVertex | Self::BpEdge | Self::UniformBp)
    }

    pub fn is_budgeted(self) -> bool {
        self.uses_power_level()
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    pub kind: AttackKind,
    #[serde(default)]
    pub l_c: f64,
    #[serde(default)]
    pub l_p: f64,
    #[serde(default = "default_true")]
    pub enforce_limits: bool,
    #[serde(default)]
    pub seed: u64,
    /// Target gain for edge attacks run without limits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nolimit_edge_scale: Option<f64>,
    /// Adversary antenna count `L`; caps the number of attacked channels.
    /// `None` means `N^2`, which never binds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_channels: Option<usize>,
}

impl AttackConfig {
    pub fn new(kind: AttackKind) -> Self {
        Self {
            kind,
            l_c: 0.0,
            l_p: 0.0,
            enforce_limits: true,
            seed: 0,
            nolimit_edge_scale: None,
            max_channels: None,
        }
    }

    /// Set whichever level the kind consumes.
    pub fn with_level(mut self, level: f64) -> Self {
        if self.kind.uses_channel_level() {
            self.l_c = level;
        } else if self.kind.uses_power_level() {
            self.l_p = level;
        }
        self
    }

    pub fn level(&self) -> f64 {
        if self.kind.uses_channel_level() {
            self.l_c
        } else if self.kind.uses_power_level() {
            self.l_p
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<(), AttackError> {
        check_level("l_c", self.l_c)?;
        check_level("l_p", self.l_p)?;
        if let Some(s) = self.nolimit_edge_scale {
            if !(s.is_finite() && s >= 0.0) {
                return Err(AttackError::InvalidEdgeScale(s));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub kind: AttackKind,
    /// `(tx, rx)` tensor coordinates, in the order they were attacked.
    pub attacked_indices: Vec<(usize, usize)>,
    /// `s_p = h_attacked - h_clean` for each attacked channel.
    pub perturbation_signals: Vec<Vec<Complex64>>,
    /// Gain budget `P_a`; `None` for kinds without a budget.
    pub budget_total: Option<f64>,
    /// Sum of absolute gain changes over attacked channels.
    pub budget_spent: f64,
    /// Clean-tensor threshold the attack respected (`h_diag,min` or `h_diag,max`).
    pub reference_gain: Option<f64>,
    pub limits_enforced: bool,
    pub constraint_violations: Vec<String>,
}

impl AttackReport {
    fn new(kind: AttackKind, limits_enforced: bool) -> Self {
        Self {
            kind,
            attacked_indices: Vec::new(),
            perturbation_signals: Vec::new(),
            budget_total: None,
            budget_spent: 0.0,
            reference_gain: None,
            limits_enforced,
            constraint_violations: Vec::new(),
        }
    }
}

fn check_level(name: &'static str, value: f64) -> Result<(), AttackError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(AttackError::InvalidLevel { name, value })
    }
}

/// ℓ2 norm of a channel vector.
pub fn channel_gain(h: &[Complex64]) -> f64 {
    h.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `h` rescaled to gain `target`, phases untouched. A zero vector has no
/// direction; it is mapped onto the first antenna with zero phase.
pub fn rescale_to_gain(h: &[Complex64], target: f64) -> Vec<Complex64> {
    let g = channel_gain(h);
    if g > 0.0 {
        let s = target / g;
        h.iter().map(|c| c * s).collect()
    } else {
        let mut v = vec![Complex64::new(0.0, 0.0); h.len()];
        if let Some(first) = v.first_mut() {
            *first = Complex64::new(target, 0.0);
        }
        v
    }
}

/// `floor(n * level)` with a guard against `0.7 * 10 = 6.999...`.
fn count_for(n: usize, level: f64) -> usize {
    ((n as f64) * level + 1e-9).floor() as usize
}

/// First `k` entries of a partial Fisher-Yates shuffle of `0..n`. Prefixes
/// are nested across `k` for the same generator state.
fn sample_distinct<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    let k = k.min(n);
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

fn diag_gains(h: &ChannelTensor) -> Vec<f64> {
    (0..h.n_pairs()).map(|n| channel_gain(h.get(n, n))).collect()
}

fn off_diagonal_pool(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (0..n).filter(move |&r| r != i).map(move |r| (i, r))).collect()
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Replace channel `(i, n)` and log the change.
fn apply(out: &mut ChannelTensor, report: &mut AttackReport, i: usize, n: usize, new: Vec<Complex64>) {
    let old = out.get(i, n);
    let signal: Vec<Complex64> = new.iter().zip(old).map(|(a, b)| a - b).collect();
    report.budget_spent += (channel_gain(&new) - channel_gain(old)).abs();
    out.set(i, n, &new);
    report.attacked_indices.push((i, n));
    report.perturbation_signals.push(signal);
}

/// Algorithm-as-specified `B_c` vertex perturbation.
///
/// `N_a = floor(N l_c)` distinct desired channels are drawn uniformly and
/// pulled down to the clean minimum desired gain with their phase kept
/// (`h + s_p` with `s_p = -h + h_min e^{j angle h}`). Without limits the
/// chosen channels are forced to zero.
pub fn bc_vertex<R: Rng + ?Sized>(
    h: &ChannelTensor,
    l_c: f64,
    enforce_limits: bool,
    rng: &mut R,
) -> Result<(ChannelTensor, AttackReport), AttackError> {
    bc_vertex_capped(h, l_c, enforce_limits, usize::MAX, rng)
}

fn bc_vertex_capped<R: Rng + ?Sized>(
    h: &ChannelTensor,
    l_c: f64,
    enforce_limits: bool,
    cap: usize,
    rng: &mut R,
) -> Result<(ChannelTensor, AttackReport), AttackError> {
    check_level("l_c", l_c)?;
    let n = h.n_pairs();
    let h_min = min_of(&diag_gains(h));
    let n_a = count_for(n, l_c).min(cap);
    let mut out = h.clone();
    let mut report = AttackReport::new(AttackKind::BcVertex, enforce_limits);
    report.reference_gain = enforce_limits.then_some(h_min);
    for p in sample_distinct(rng, n, n_a) {
        let target = if enforce_limits { h_min } else { 0.0 };
        let new = if enforce_limits {
            rescale_to_gain(h.get(p, p), target)
        } else {
            vec![Complex64::new(0.0, 0.0); h.n_tx()]
        };
        apply(&mut out, &mut report, p, p, new);
    }
    Ok((out, report))
}

/// `B_c` edge perturbation: `floor(N l_c)` distinct interference channels
/// are raised (or lowered) to the clean maximum desired gain, phase kept.
///
/// The count `N l_c` is the fair-comparison scaling: `(N^2 - N) l_c / (N - 1)`.
/// Without limits a target gain must be given in `nolimit_edge_scale`.
pub fn bc_edge<R: Rng + ?Sized>(
    h: &ChannelTensor,
    l_c: f64,
    enforce_limits: bool,
    nolimit_edge_scale: Option<f64>,
    rng: &mut R,
) -> Result<(ChannelTensor, AttackReport), AttackError> {
    bc_edge_capped(h, l_c, enforce_limits, nolimit_edge_scale, usize::MAX, rng)
}

fn bc_edge_capped<R: Rng + ?Sized>(
    h: &ChannelTensor,
    l_c: f64,
    enforce_limits: bool,
    nolimit_edge_scale: Option<f64>,
    cap: usize,
    rng: &mut R,
) -> Result<(ChannelTensor, AttackReport), AttackError> {
    check_level("l_c", l_c)?;
    let n = h.n_pairs();
    if n < 2 {
        return Err(AttackError::TooFewPairs(n));
    }
    let h_max = max_of(&diag_gains(h));
    let target = if enforce_limits {
        h_max
    } else {
        match nolimit_edge_scale {
            Some(s) if s.is_finite() && s >= 0.0 => s,
            Some(s) => return Err(AttackError::InvalidEdgeScale(s)),
            None => return Err(AttackError::NoLimitEdgeUnsupported),
        }
    };
    let pool = off_diagonal_pool(n);
    let n_a = count_for(n, l_c).min(cap);
    let mut out = h.clone();
    let mut report = AttackReport::new(AttackKind::BcEdge, enforce_limits);
    report.reference_gain = enforce_limits.then_some(h_max);
    for idx in sample_distinct(rng, pool.len(), n_a) {
        let (i, r) = pool[idx];
        apply(&mut out, &mut report, i, r, rescale_to_gain(h.get(i, r), target));
    }
    Ok((out, report))
}

/// `B_p` vertex perturbation with budget `P_a = l_p sum_n |h_nn|`.
///
/// If the spread `h_max - h_min` exceeds the budget, the strongest desired
/// channel alone is weakened by `P_a`. Otherwise channels are pulled down to
/// `h_min`, strongest first, each charging `gain - h_min`, until the next
/// charge would overdraw the budget.
pub fn bp_vertex(h: &ChannelTensor, l_p: f64) -> Result<(ChannelTensor, AttackReport), AttackError> {
    bp_vertex_capped(h, l_p, usize::MAX)
}

fn bp_vertex_capped(h: &ChannelTensor, l_p: f64, cap: usize) -> Result<(ChannelTensor, AttackReport), AttackError> {
    check_level("l_p", l_p)?;
    let n = h.n_pairs();
    let mut gains = diag_gains(h);
    let h_min = min_of(&gains);
    let h_max = max_of(&gains);
    let budget = l_p * gains.iter().sum::<f64>();
    let mut out = h.clone();
    let mut report = AttackReport::new(AttackKind::BpVertex, true);
    report.budget_total = Some(budget);
    report.reference_gain = Some(h_min);
    if budget <= 0.0 || cap == 0 {
        return Ok((out, report));
    }
    if h_max - h_min > budget {
        let top = argmax(&gains, |_| true);
        apply(&mut out, &mut report, top, top, rescale_to_gain(h.get(top, top), h_max - budget));
        return Ok((out, report));
    }
    let mut remaining = budget;
    let mut done = vec![false; n];
    for _ in 0..n.min(cap) {
        let top = argmax(&gains, |i| !done[i]);
        let cost = gains[top] - h_min;
        if cost <= 0.0 || remaining - cost < 0.0 {
            break;
        }
        apply(&mut out, &mut report, top, top, rescale_to_gain(h.get(top, top), h_min));
        gains[top] = h_min;
        done[top] = true;
        remaining -= cost;
    }
    Ok((out, report))
}

/// `B_p` edge perturbation with the same budget as [`bp_vertex`].
///
/// If `h_max - min interference gain` exceeds the budget, the weakest
/// interference channel alone is strengthened by `P_a`. Otherwise the
/// weakest interference channels are raised to `h_max` one at a time, each
/// charging `h_max - gain`, until the budget would be overdrawn.
pub fn bp_edge(h: &ChannelTensor, l_p: f64) -> Result<(ChannelTensor, AttackReport), AttackError> {
    bp_edge_capped(h, l_p, usize::MAX)
}

fn bp_edge_capped(h: &ChannelTensor, l_p: f64, cap: usize) -> Result<(ChannelTensor, AttackReport), AttackError> {
    check_level("l_p", l_p)?;
    let n = h.n_pairs();
    if n < 2 {
        return Err(AttackError::TooFewPairs(n));
    }
    let diag = diag_gains(h);
    let h_max = max_of(&diag);
    let budget = l_p * diag.iter().sum::<f64>();
    let pool = off_diagonal_pool(n);
    let mut gains: Vec<f64> = pool.iter().map(|&(i, r)| channel_gain(h.get(i, r))).collect();
    let mut out = h.clone();
    let mut report = AttackReport::new(AttackKind::BpEdge, true);
    report.budget_total = Some(budget);
    report.reference_gain = Some(h_max);
    if budget <= 0.0 || cap == 0 {
        return Ok((out, report));
    }
    let weakest = argmin(&gains, |_| true);
    if h_max - gains[weakest] > budget {
        let (i, r) = pool[weakest];
        apply(&mut out, &mut report, i, r, rescale_to_gain(h.get(i, r), gains[weakest] + budget));
        return Ok((out, report));
    }
    let mut remaining = budget;
    let mut done = vec![false; pool.len()];
    for _ in 0..pool.len().min(cap) {
        let k = argmin(&gains, |i| !done[i]);
        let cost = h_max - gains[k];
        if cost <= 0.0 || remaining - cost < 0.0 {
            break;
        }
        let (i, r) = pool[k];
        apply(&mut out, &mut report, i, r, rescale_to_gain(h.get(i, r), h_max));
        gains[k] = h_max;
        done[k] = true;
        remaining -= cost;
    }
    Ok((out, report))
}

/// Heuristic upper bound: zero the `floor(N l_c)` strongest desired channels.
pub fn upper_bound_bc(h: &ChannelTensor, l_c: f64) -> Result<(ChannelTensor, AttackReport), AttackError> {
    upper_bound_bc_capped(h, l_c, usize::MAX)
}

fn upper_bound_bc_capped(h: &ChannelTensor, l_c: f64, cap: usize) -> Result<(ChannelTensor, AttackReport), AttackError> {
    check_level("l_c", l_c)?;
    let n = h.n_pairs();
    let gains = diag_gains(h);
    let mut order: Vec<usize> = (0..n).collect();
    // Stable: equal gains keep index order.
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));
    let mut out = h.clone();
    let mut report = AttackReport::new(AttackKind::UpperBoundBc, false);
    for &p in order.iter().take(count_for(n, l_c).min(cap)) {
        apply(&mut out, &mut report, p, p, vec![Complex64::new(0.0, 0.0); h.n_tx()]);
    }
    Ok((out, report))
}

/// Heuristic: zero one uniformly chosen desired channel.
pub fn single_bc<R: Rng + ?Sized>(h: &ChannelTensor, rng: &mut R) -> Result<(ChannelTensor, AttackReport), AttackError> {
    let n = h.n_pairs();
    let p = rng.random_range(0..n);
    let mut out = h.clone();
    let mut report = AttackReport::new(AttackKind::SingleBc, false);
    apply(&mut out, &mut report, p, p, vec![Complex64::new(0.0, 0.0); h.n_tx()]);
    Ok((out, report))
}

/// Heuristic: `K = max(1, floor(N l_p))` random desired channels each lose
/// `P_a / K` of gain, floored at zero.
pub fn uniform_bp<R: Rng + ?Sized>(
    h: &ChannelTensor,
    l_p: f64,
    rng: &mut R,
) -> Result<(ChannelTensor, AttackReport), AttackError> {
    uniform_bp_capped(h, l_p, usize::MAX, rng)
}

fn uniform_bp_capped<R: Rng + ?Sized>(
    h: &ChannelTensor,
    l_p: f64,
    cap: usize,
    rng: &mut R,
) -> Result<(ChannelTensor, AttackReport), AttackError> {
    check_level("l_p", l_p)?;
    let n = h.n_pairs();
    let budget = l_p * diag_gains(h).iter().sum::<f64>();
    let k = count_for(n, l_p).max(1).min(n).min(cap);
    let chosen = sample_distinct(rng, n, k);
    Ok(uniform_reduce(h, &chosen, budget))
}

/// Spread `budget` evenly as gain reductions over the listed desired channels.
pub fn uniform_reduce(h: &ChannelTensor, pairs: &[usize], budget: f64) -> (ChannelTensor, AttackReport) {
    let mut out = h.clone();
    let mut report = AttackReport::new(AttackKind::UniformBp, true);
    report.budget_total = Some(budget);
    if budget <= 0.0 || pairs.is_empty() {
        return (out, report);
    }
    let share = budget / pairs.len() as f64;
    for &p in pairs {
        let v = h.get(p, p);
        let target = (channel_gain(v) - share).max(0.0);
        let new = if target == 0.0 {
            vec![Complex64::new(0.0, 0.0); h.n_tx()]
        } else {
            rescale_to_gain(v, target)
        };
        apply(&mut out, &mut report, p, p, new);
    }
    (out, report)
}

fn argmax(v: &[f64], keep: impl Fn(usize) -> bool) -> usize {
    let mut best = usize::MAX;
    for (i, &x) in v.iter().enumerate() {
        if keep(i) && (best == usize::MAX || x > v[best]) {
            best = i;
        }
    }
    best
}

fn argmin(v: &[f64], keep: impl Fn(usize) -> bool) -> usize {
    let mut best = usize::MAX;
    for (i, &x) in v.iter().enumerate() {
        if keep(i) && (best == usize::MAX || x < v[best]) {
            best = i;
        }
    }
    best
}

/// Run the configured attack with a generator seeded from `cfg.seed`.
pub fn apply_attack(h: &ChannelTensor, cfg: &AttackConfig) -> Result<(ChannelTensor, AttackReport), AttackError> {
    apply_attack_with_rng(h, cfg, &mut rng_from(cfg.seed))
}

/// Run the configured attack and audit the result against its constraints.
pub fn apply_attack_with_rng<R: Rng + ?Sized>(
    h: &ChannelTensor,
    cfg: &AttackConfig,
    rng: &mut R,
) -> Result<(ChannelTensor, AttackReport), AttackError> {
    cfg.validate()?;
    let cap = cfg.max_channels.unwrap_or(usize::MAX);
    let (out, mut report) = match cfg.kind {
        AttackKind::BcVertex => bc_vertex_capped(h, cfg.l_c, cfg.enforce_limits, cap, rng)?,
        AttackKind::BcEdge => bc_edge_capped(h, cfg.l_c, cfg.enforce_limits, cfg.nolimit_edge_scale, cap, rng)?,
        AttackKind::BpVertex => bp_vertex_capped(h, cfg.l_p, cap)?,
        AttackKind::BpEdge => bp_edge_capped(h, cfg.l_p, cap)?,
        AttackKind::UpperBoundBc => upper_bound_bc_capped(h, cfg.l_c, cap)?,
        AttackKind::SingleBc => single_bc(h, rng)?,
        AttackKind::UniformBp => uniform_bp_capped(h, cfg.l_p, cap, rng)?,
    };
    report.constraint_violations = audit(h, &out, &report);
    Ok((out, report))
}

/// Check a finished attack against the constraints its kind promises.
pub fn audit(clean: &ChannelTensor, attacked: &ChannelTensor, report: &AttackReport) -> Vec<String> {
    let mut issues = Vec::new();
    let n = clean.n_pairs();
    let mut touched = vec![false; n * n];
    for &(i, r) in &report.attacked_indices {
        if touched[i * n + r] {
            issues.push(format!("channel ({i},{r}) attacked twice"));
        }
        touched[i * n + r] = true;
    }
    for i in 0..n {
        for r in 0..n {
            if !touched[i * n + r] && clean.get(i, r) != attacked.get(i, r) {
                issues.push(format!("untouched channel ({i},{r}) changed"));
            }
        }
    }
    if let Some(total) = report.budget_total {
        if report.budget_spent > total + 1e-9 * total.max(1.0) {
            issues.push(format!("spent {} of budget {}", report.budget_spent, total));
        }
    }
    if !report.limits_enforced {
        return issues;
    }
    for &(i, r) in &report.attacked_indices {
        let new_gain = channel_gain(attacked.get(i, r));
        match (report.kind, report.reference_gain) {
            (AttackKind::BcVertex, Some(h_min)) | (AttackKind::BpVertex, Some(h_min)) => {
                if new_gain < h_min - 1e-9 * h_min.max(1.0) {
                    issues.push(format!("({i},{r}) gain {new_gain} below h_diag,min {h_min}"));
                }
            }
            (AttackKind::BcEdge, Some(h_max)) | (AttackKind::BpEdge, Some(h_max)) => {
                if new_gain > h_max + 1e-12 * h_max.max(1.0) {
                    issues.push(format!("({i},{r}) gain {new_gain} above h_diag,max {h_max}"));
                }
            }
            _ => {}
        }
        if new_gain > 0.0 {
            for (a, b) in clean.get(i, r).iter().zip(attacked.get(i, r)) {
                if a.norm() > 0.0 && (a / a.norm() - b / b.norm()).norm() > 1e-12 {
                    issues.push(format!("({i},{r}) phase changed"));
                    break;
                }
            }
        }
    }
    issues
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Scalar tensor with the given diagonal and a constant or listed off-diagonal.
    fn scalar_tensor(diag: &[Complex64], off: &[Complex64]) -> ChannelTensor {
        let n = diag.len();
        let mut h = ChannelTensor::zeros(n, 1);
        let mut k = 0;
        for i in 0..n {
            for r in 0..n {
                if i == r {
                    h.set(i, i, &[diag[i]]);
                } else {
                    h.set(i, r, &[off[k % off.len()]]);
                    k += 1;
                }
            }
        }
        h
    }

    fn gain_at(h: &ChannelTensor, i: usize, r: usize) -> f64 {
        channel_gain(h.get(i, r))
    }

    fn same_phase(a: Complex64, b: Complex64) -> bool {
        (a / a.norm() - b / b.norm()).norm() < 1e-12
    }

    #[test]
    fn channel_gain_examples() {
        assert_eq!(channel_gain(&[c(3.0, 4.0)]), 5.0);
        assert_eq!(channel_gain(&[c(0.0, 0.0), c(0.0, 0.0)]), 0.0);
        assert!((channel_gain(&[c(1.0, 0.0), c(0.0, 1.0)]) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bc_vertex_two_pairs() {
        // Gains {2, 5}; whichever index is drawn ends at gain 2, phase kept.
        let h = scalar_tensor(&[c(0.0, 2.0), c(3.0, 4.0)], &[c(0.1, 0.0)]);
        for seed in 0..20 {
            let (out, rep) = bc_vertex(&h, 0.5, true, &mut rng_from(seed)).unwrap();
            assert_eq!(rep.attacked_indices.len(), 1);
            let (p, _) = rep.attacked_indices[0];
            assert!((gain_at(&out, p, p) - 2.0).abs() < 1e-15);
            assert!(same_phase(out.get(p, p)[0], h.get(p, p)[0]));
            assert_eq!(out.get(1 - p, 1 - p), h.get(1 - p, 1 - p));
        }
        let h5 = scalar_tensor(&[c(2.0, 0.0), c(3.0, 4.0)], &[c(0.1, 0.0)]);
        let (out, rep) = bc_vertex(&h5, 0.5, true, &mut rng_from(0)).unwrap();
        if rep.attacked_indices[0] == (1, 1) {
            assert!((out.get(1, 1)[0] - c(1.2, 1.6)).norm() < 1e-15);
        }
    }

    #[test]
    fn bc_vertex_no_limit_zeroes() {
        let h = scalar_tensor(&[c(1.0, 1.0), c(-2.0, 0.5), c(0.3, 0.0)], &[c(0.1, 0.1)]);
        let (out, rep) = bc_vertex(&h, 1.0, false, &mut rng_from(4)).unwrap();
        assert!(!rep.limits_enforced);
        for p in 0..3 {
            assert_eq!(gain_at(&out, p, p), 0.0);
        }
    }

    #[test]
    fn bc_vertex_three_pairs_trace() {
        let h = scalar_tensor(&[c(1.0, 0.0), c(0.0, -4.0), c(-9.0, 0.0)], &[c(0.2, 0.0)]);
        let (out, rep) = bc_vertex(&h, 1.0, true, &mut rng_from(8)).unwrap();
        let mut idx: Vec<_> = rep.attacked_indices.clone();
        idx.sort();
        assert_eq!(idx, vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(out.get(0, 0)[0], c(1.0, 0.0));
        assert_eq!(out.get(1, 1)[0], c(0.0, -1.0));
        assert_eq!(out.get(2, 2)[0], c(-1.0, 0.0));
    }

    #[test]
    fn zero_count_is_identity() {
        let h = scalar_tensor(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)], &[c(0.2, 0.0)]);
        let (out, rep) = bc_vertex(&h, 0.2, true, &mut rng_from(0)).unwrap();
        assert_eq!(out, h);
        assert!(rep.attacked_indices.is_empty());
        let (out, _) = bc_edge(&h, 0.0, true, None, &mut rng_from(0)).unwrap();
        assert_eq!(out, h);
        let (out, _) = upper_bound_bc(&h, 0.3).unwrap();
        assert_eq!(out, h);
    }

    #[test]
    fn bc_edge_two_pairs() {
        let h = scalar_tensor(&[c(2.0, 0.0), c(0.0, 5.0)], &[c(0.1, 0.0), c(0.0, -0.2)]);
        let (out, rep) = bc_edge(&h, 0.5, true, None, &mut rng_from(2)).unwrap();
        assert_eq!(rep.attacked_indices.len(), 1);
        let (i, r) = rep.attacked_indices[0];
        assert_ne!(i, r);
        assert!((gain_at(&out, i, r) - 5.0).abs() < 1e-15);
        assert!(same_phase(out.get(i, r)[0], h.get(i, r)[0]));
        let other = if (i, r) == (0, 1) { (1, 0) } else { (0, 1) };
        assert_eq!(out.get(other.0, other.1), h.get(other.0, other.1));
    }

    #[test]
    fn bc_edge_three_pairs_trace() {
        let h = scalar_tensor(
            &[c(1.0, 0.0), c(2.0, 0.0), c(0.0, 3.0)],
            &[c(0.1, 0.0), c(0.0, 0.2), c(-0.3, 0.0), c(0.4, 0.4), c(0.05, 0.0), c(0.0, -0.6)],
        );
        let (out, rep) = bc_edge(&h, 1.0, true, None, &mut rng_from(5)).unwrap();
        assert_eq!(rep.attacked_indices.len(), 3);
        for &(i, r) in &rep.attacked_indices {
            assert!((gain_at(&out, i, r) - 3.0).abs() < 1e-12);
            assert!(gain_at(&out, i, r) <= 3.0 + 1e-12);
        }
        assert!(rep.constraint_violations.is_empty());
        assert_eq!(audit(&h, &out, &rep), Vec::<String>::new());
    }

    #[test]
    fn bc_edge_errors() {
        let h1 = scalar_tensor(&[c(1.0, 0.0)], &[c(0.0, 0.0)]);
        assert_eq!(bc_edge(&h1, 0.5, true, None, &mut rng_from(0)).unwrap_err(), AttackError::TooFewPairs(1));
        let h = scalar_tensor(&[c(1.0, 0.0), c(2.0, 0.0)], &[c(0.1, 0.0)]);
        assert_eq!(
            bc_edge(&h, 0.5, false, None, &mut rng_from(0)).unwrap_err(),
            AttackError::NoLimitEdgeUnsupported
        );
        let (out, rep) = bc_edge(&h, 1.0, false, Some(7.0), &mut rng_from(0)).unwrap();
        assert!(!rep.limits_enforced);
        for &(i, r) in &rep.attacked_indices {
            assert!((gain_at(&out, i, r) - 7.0).abs() < 1e-12);
        }
        assert!(matches!(bc_vertex(&h, 1.5, true, &mut rng_from(0)), Err(AttackError::InvalidLevel { .. })));
    }

    #[test]
    fn bp_vertex_single_branch() {
        // Gains {4, 1}, P_a = 0.4 * 5 = 2 < 3: only the strongest drops 4 -> 2.
        let h = scalar_tensor(&[c(0.0, 4.0), c(1.0, 0.0)], &[c(0.1, 0.0)]);
        let (out, rep) = bp_vertex(&h, 0.4).unwrap();
        assert_eq!(rep.attacked_indices, vec![(0, 0)]);
        assert!((gain_at(&out, 0, 0) - 2.0).abs() < 1e-12);
        assert!(same_phase(out.get(0, 0)[0], h.get(0, 0)[0]));
        assert_eq!(out.get(1, 1), h.get(1, 1));
        assert!(rep.budget_spent <= rep.budget_total.unwrap() + 1e-9);
    }

    #[test]
    fn bp_vertex_greedy_loop() {
        // Gains {1, 2, 3}, P_a = 0.5 * 6 = 3: 3->1 (cost 2), 2->1 (cost 1).
        let h = scalar_tensor(&[c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 0.0)], &[c(0.1, 0.0)]);
        let (out, rep) = bp_vertex(&h, 0.5).unwrap();
        assert_eq!(rep.attacked_indices, vec![(2, 2), (1, 1)]);
        for p in 0..3 {
            assert!((gain_at(&out, p, p) - 1.0).abs() < 1e-15);
        }
        assert!((rep.budget_spent - 3.0).abs() < 1e-12);
        let (out, rep) = bp_vertex(&h, 0.0).unwrap();
        assert_eq!(out, h);
        assert!(rep.attacked_indices.is_empty());
    }

    #[test]
    fn bp_edge_single_branch() {
        // h_max = 4, interference {0.5, 3}, P_a = 0.4 * 5 = 2 < 3.5: 0.5 -> 2.5.
        let h = scalar_tensor(&[c(4.0, 0.0), c(0.0, 1.0)], &[c(0.0, 0.5), c(3.0, 0.0)]);
        let (out, rep) = bp_edge(&h, 0.4).unwrap();
        assert_eq!(rep.attacked_indices, vec![(0, 1)]);
        assert!((gain_at(&out, 0, 1) - 2.5).abs() < 1e-12);
        assert_eq!(out.get(1, 0), h.get(1, 0));
        assert!(same_phase(out.get(0, 1)[0], h.get(0, 1)[0]));
    }

    #[test]
    fn bp_edge_greedy_loop() {
        // h_max = 2, diag sum 2.6, l_p = 1 so P_a = 2.6; interference {0.5, 1}.
        let h = scalar_tensor(&[c(2.0, 0.0), c(0.6, 0.0)], &[c(0.5, 0.0), c(0.0, -1.0)]);
        let (out, rep) = bp_edge(&h, 1.0).unwrap();
        assert_eq!(rep.attacked_indices, vec![(0, 1), (1, 0)]);
        assert!((gain_at(&out, 0, 1) - 2.0).abs() < 1e-15);
        assert!((gain_at(&out, 1, 0) - 2.0).abs() < 1e-15);
        assert!((rep.budget_spent - 2.5).abs() < 1e-12);
        assert!(rep.budget_spent <= 2.6);
        let (out, _) = bp_edge(&h, 0.0).unwrap();
        assert_eq!(out, h);
    }

    #[test]
    fn upper_bound_examples() {
        let h = scalar_tensor(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)], &[c(0.2, 0.0)]);
        let (out, rep) = upper_bound_bc(&h, 1.0 / 3.0).unwrap();
        assert_eq!(rep.attacked_indices, vec![(2, 2)]);
        assert_eq!(gain_at(&out, 2, 2), 0.0);
        assert_eq!(out.get(1, 1), h.get(1, 1));
        let (out, _) = upper_bound_bc(&h, 1.0).unwrap();
        assert!((0..3).all(|p| gain_at(&out, p, p) == 0.0));
    }

    #[test]
    fn single_bc_examples() {
        let h = scalar_tensor(&[c(1.0, 1.0)], &[c(0.0, 0.0)]);
        let (out, rep) = single_bc(&h, &mut rng_from(0)).unwrap();
        assert_eq!(rep.attacked_indices, vec![(0, 0)]);
        assert_eq!(gain_at(&out, 0, 0), 0.0);
    }

    #[test]
    fn single_bc_selection_is_uniform() {
        // Two independent draws collide with probability 1/50.
        let diag: Vec<Complex64> = (0..50).map(|i| c(1.0 + i as f64, 0.0)).collect();
        let h = scalar_tensor(&diag, &[c(0.01, 0.0)]);
        let mut differ = 0;
        for t in 0..1000u64 {
            let (_, a) = single_bc(&h, &mut rng_from(2 * t)).unwrap();
            let (_, b) = single_bc(&h, &mut rng_from(2 * t + 1)).unwrap();
            assert_eq!(a.attacked_indices.len(), 1);
            differ += usize::from(a.attacked_indices != b.attacked_indices);
        }
        // 980 expected; binomial sd ~4.4.
        assert!((960..=1000).contains(&differ), "{differ}");
    }

    #[test]
    fn uniform_bp_examples() {
        let h = scalar_tensor(&[c(0.0, 2.0)], &[c(0.0, 0.0)]);
        let (out, rep) = uniform_bp(&h, 1.0, &mut rng_from(0)).unwrap();
        assert_eq!(gain_at(&out, 0, 0), 0.0);
        assert!(rep.budget_spent <= rep.budget_total.unwrap() + 1e-9);
        let (out, rep) = uniform_bp(&h, 0.0, &mut rng_from(0)).unwrap();
        assert_eq!(out, h);
        assert!(rep.attacked_indices.is_empty());

        let h = scalar_tensor(&[c(3.0, 0.0), c(0.0, -3.0)], &[c(0.1, 0.0)]);
        let (out, rep) = uniform_reduce(&h, &[0, 1], 2.0);
        assert!((gain_at(&out, 0, 0) - 2.0).abs() < 1e-15);
        assert!((gain_at(&out, 1, 1) - 2.0).abs() < 1e-15);
        assert!(same_phase(out.get(1, 1)[0], h.get(1, 1)[0]));
        assert!((rep.budget_spent - 2.0).abs() < 1e-12);
    }

    #[test]
    fn adversary_antenna_cap() {
        let h = scalar_tensor(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)], &[c(0.2, 0.0)]);
        let cfg = AttackConfig { max_channels: Some(2), ..AttackConfig::new(AttackKind::BcVertex).with_level(1.0) };
        let (_, rep) = apply_attack(&h, &cfg).unwrap();
        assert_eq!(rep.attacked_indices.len(), 2);
    }

    #[test]
    fn config_json() {
        let cfg: AttackConfig = serde_json::from_str(r#"{"kind": "BpEdge", "l_p": 0.3}"#).unwrap();
        assert_eq!(cfg.kind, AttackKind::BpEdge);
        assert!(cfg.enforce_limits);
        assert_eq!(cfg.level(), 0.3);
        assert!(serde_json::from_str::<AttackConfig>(r#"{"kind": "BpEdge", "lp": 0.3}"#).is_err());
    }

    fn arb_tensor() -> impl Strategy<Value = ChannelTensor> {
        (2usize..7, 1usize..3).prop_flat_map(|(n, nt)| {
            proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), n * n * nt).prop_map(move |v| {
                ChannelTensor::from_vec(n, nt, v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn attacks_respect_constraints(h in arb_tensor(), level in 0.0f64..=1.0, seed in 0u64..1000) {
            for kind in AttackKind::ALL {
                let cfg = AttackConfig { seed, ..AttackConfig::new(kind).with_level(level) };
                let (out, rep) = apply_attack(&h, &cfg).unwrap();
                prop_assert!(rep.constraint_violations.is_empty(), "{:?}: {:?}", kind, rep.constraint_violations);
                let mut idx = rep.attacked_indices.clone();
                idx.sort();
                idx.dedup();
                prop_assert_eq!(idx.len(), rep.attacked_indices.len());
                if matches!(kind, AttackKind::BcVertex | AttackKind::BcEdge) {
                    prop_assert_eq!(rep.attacked_indices.len(), count_for(h.n_pairs(), level));
                }
                if kind == AttackKind::BcVertex {
                    let h_min = min_of(&diag_gains(&h));
                    for &(i, r) in &rep.attacked_indices {
                        prop_assert!((gain_at(&out, i, r) - h_min).abs() <= 1e-9);
                    }
                }
            }
        }
    }
}
