//! Precoder design. The attacks never look inside the controller: they only
//! change the graph it is fed, so any power-feasible precoder map works as
//! the system under attack. Two are provided, MRT and weighted MMSE.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::{inner, qoc_unchecked, GraphModel};

/// Slack allowed on the per-pair power constraint.
pub const POWER_SLACK: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("precoder {pair} has power {power} above p_max {p_max}")]
    PowerExceeded { pair: usize, power: f64, p_max: f64 },
    #[error("precoder matrix has {len} entries, not a multiple of n_tx = {n_tx}")]
    Shape { len: usize, n_tx: usize },
    #[error("invalid controller spec: {0}")]
    InvalidSpec(String),
    #[error("p_max must be finite and > 0, got {0}")]
    InvalidPower(f64),
}

/// One `N_t`-length complex precoder per pair, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecoderSet {
    n_tx: usize,
    p_max: f64,
    q: Vec<Complex64>,
}

impl PrecoderSet {
    pub fn new(n_tx: usize, q: Vec<Complex64>, p_max: f64) -> Result<Self, ControlError> {
        if n_tx == 0 || !q.len().is_multiple_of(n_tx) {
            return Err(ControlError::Shape { len: q.len(), n_tx });
        }
        let set = Self { n_tx, p_max, q };
        for pair in 0..set.n_pairs() {
            let power = set.power(pair);
            if !(power <= p_max + POWER_SLACK) {
                return Err(ControlError::PowerExceeded { pair, power, p_max });
            }
        }
        Ok(set)
    }

    pub fn n_pairs(&self) -> usize {
        self.q.len() / self.n_tx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn get(&self, n: usize) -> &[Complex64] {
        &self.q[n * self.n_tx..(n + 1) * self.n_tx]
    }

    pub fn power(&self, n: usize) -> f64 {
        self.get(n).iter().map(|c| c.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ControllerKind {
    #[serde(rename = "MRT")]
    Mrt,
    #[default]
    #[serde(rename = "WMMSE")]
    Wmmse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSpec {
    pub kind: ControllerKind,
    pub wmmse_max_iters: usize,
    /// Relative objective change that ends the WMMSE loop.
    pub wmmse_tol: f64,
}

impl Default for ControllerSpec {
    fn default() -> Self {
        Self { kind: ControllerKind::Wmmse, wmmse_max_iters: 100, wmmse_tol: 1e-6 }
    }
}

impl ControllerSpec {
    pub fn validate(&self) -> Result<(), ControlError> {
        if self.wmmse_max_iters == 0 {
            return Err(ControlError::InvalidSpec("wmmse_max_iters must be >= 1".into()));
        }
        if !(self.wmmse_tol > 0.0) {
            return Err(ControlError::InvalidSpec("wmmse_tol must be > 0".into()));
        }
        Ok(())
    }
}

fn check_power(p_max: f64) -> Result<(), ControlError> {
    if p_max.is_finite() && p_max > 0.0 {
        Ok(())
    } else {
        Err(ControlError::InvalidPower(p_max))
    }
}

/// Maximum ratio transmission: full power along each desired channel.
pub fn mrt_precoders(g: &GraphModel, p_max: f64) -> Result<PrecoderSet, ControlError> {
    check_power(p_max)?;
    let nt = g.n_tx();
    let mut q = Vec::with_capacity(g.n_pairs() * nt);
    for n in 0..g.n_pairs() {
        let h = g.desired(n);
        let norm = h.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            let s = p_max.sqrt() / norm;
            q.extend(h.iter().map(|c| c * s));
        } else {
            q.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), nt));
        }
    }
    PrecoderSet::new(nt, q, p_max)
}

/// Result of a WMMSE run. `objective_trace[0]` is the MRT starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WmmseOutcome {
    pub precoders: PrecoderSet,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Weighted MMSE sum-rate maximization under per-pair power constraints,
/// started from MRT. Returns the best iterate seen.
pub fn wmmse_precoders(
    g: &GraphModel,
    spec: &ControllerSpec,
    p_max: f64,
) -> Result<WmmseOutcome, ControlError> {
    spec.validate()?;
    let start = mrt_precoders(g, p_max)?;
    let n = g.n_pairs();
    let nt = g.n_tx();
    let mut v = start.clone();
    let mut prev = qoc_unchecked(g, &v);
    let mut trace = vec![prev];
    let mut best = (prev, start);
    let mut converged = false;
    let mut iterations = 0;

    let mut u = vec![Complex64::new(0.0, 0.0); n];
    let mut mse_weight = vec![0.0; n];
    for _ in 0..spec.wmmse_max_iters {
        iterations += 1;
        for k in 0..n {
            let signal = inner(g.desired(k), v.get(k));
            let interference_noise: f64 = g.noise(k)
                + (0..n)
                    .filter(|&i| i != k)
                    .map(|i| inner(g.adjacency(i, k), v.get(i)).norm_sqr())
                    .sum::<f64>();
            let total = interference_noise + signal.norm_sqr();
            u[k] = signal / total;
            // 1 / e_k with e_k = (I + sigma^2) / T, written to avoid cancellation.
            mse_weight[k] = total / interference_noise;
        }

        let mut next = Vec::with_capacity(n * nt);
        for tx in 0..n {
            let mut a = DMatrix::<Complex64>::zeros(nt, nt);
            for k in 0..n {
                let coef = g.weight(k) * mse_weight[k] * u[k].norm_sqr();
                if coef == 0.0 {
                    continue;
                }
                let c = g.link(tx, k);
                for r in 0..nt {
                    for s in 0..nt {
                        a[(r, s)] += c[r] * c[s].conj() * coef;
                    }
                }
            }
            let scale = u[tx] * (g.weight(tx) * mse_weight[tx]);
            let b = DVector::from_iterator(nt, g.desired(tx).iter().map(|h| h * scale));
            next.extend(power_constrained_solve(&a, &b, p_max).iter());
        }
        v = PrecoderSet::new(nt, next, p_max)?;

        let obj = qoc_unchecked(g, &v);
        trace.push(obj);
        if obj > best.0 {
            best = (obj, v.clone());
        }
        if (obj - prev).abs() < spec.wmmse_tol * prev.abs() {
            converged = true;
            break;
        }
        prev = obj;
    }
    Ok(WmmseOutcome { precoders: best.1, objective_trace: trace, iterations, converged })
}

/// Minimize `v^H A v - 2 Re(b^H v)` subject to `||v||^2 <= p_max` for a
/// Hermitian PSD `A`: `v = (A + mu I)^{-1} b` with the smallest feasible
/// `mu >= 0`.
fn power_constrained_solve(a: &DMatrix<Complex64>, b: &DVector<Complex64>, p_max: f64) -> DVector<Complex64> {
    let nt = b.len();
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return DVector::zeros(nt);
    }
    if nt == 1 {
        let a0 = a[(0, 0)].re;
        if a0 > 0.0 {
            let v = b[0] / a0;
            if v.norm_sqr() <= p_max {
                return DVector::from_element(1, v);
            }
        }
        return DVector::from_element(1, b[0] * (p_max.sqrt() / b_norm));
    }

    let eig = a.clone().symmetric_eigen();
    let lambda: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let proj = eig.eigenvectors.adjoint() * b;
    let lam_max = lambda.iter().cloned().fold(0.0, f64::max);
    let tiny = lam_max * 1e-14;
    let weights: Vec<f64> = proj.iter().map(|c| c.norm_sqr()).collect();
    let power_at = |mu: f64| -> f64 {
        lambda
            .iter()
            .zip(&weights)
            .map(|(&l, &w)| if w == 0.0 { 0.0 } else { w / (l + mu).powi(2) })
            .sum()
    };
    let unconstrained_ok = lambda.iter().zip(&weights).all(|(&l, &w)| l > tiny || w <= 1e-30 * b_norm * b_norm);
    let mu = if unconstrained_ok && power_at(0.0) <= p_max {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0, b_norm / p_max.sqrt());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if power_at(mid) > p_max {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let scaled = DVector::from_iterator(
        nt,
        proj.iter().zip(&lambda).map(|(c, &l)| {
            if c.norm_sqr() == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                c / (l + mu)
            }
        }),
    );
    let mut v = &eig.eigenvectors * scaled;
    // Round-off can leave the boundary solution a hair outside the ball.
    let norm_sq = v.norm_squared();
    if norm_sq > p_max {
        v *= Complex64::new((p_max / norm_sq).sqrt(), 0.0);
    }
    v
}

/// Precoders from whichever controller the spec selects.
pub fn design_precoders(
    g: &GraphModel,
    spec: &ControllerSpec,
    p_max: f64,
) -> Result<PrecoderSet, ControlError> {
    match spec.kind {
        ControllerKind::Mrt => mrt_precoders(g, p_max),
        ControllerKind::Wmmse => Ok(wmmse_precoders(g, spec, p_max)?.precoders),
    }
}
