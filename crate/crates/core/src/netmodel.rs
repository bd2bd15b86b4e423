//! Network topology, channel generation, the graph feature model and the
//! SINR / weighted-sum-rate metrics.
//!
//! Tensor indexing convention throughout the crate: `h[i][n][k]` is the
//! channel from transmitter `i` to receiver `n` on transmit antenna `k`.
//! Diagonal entries (`i == n`) are desired links.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::PrecoderSet;

#[derive(Debug, Error, PartialEq)]
pub enum NetError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("distance must be positive, got {0} km")]
    NonPositiveDistance(f64),
    #[error("pair index {index} out of range for {n_pairs} pairs")]
    IndexOutOfRange { index: usize, n_pairs: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Logarithm base used by the distance term of the path-loss model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum PathLossBase {
    #[default]
    Two,
    Ten,
}

impl TryFrom<u32> for PathLossBase {
    type Error = String;
    fn try_from(v: u32) -> Result<Self, Self::Error> {
        match v {
            2 => Ok(Self::Two),
            10 => Ok(Self::Ten),
            other => Err(format!("pathloss_log_base must be 2 or 10, got {other}")),
        }
    }
}

impl From<PathLossBase> for u32 {
    fn from(b: PathLossBase) -> u32 {
        match b {
            PathLossBase::Two => 2,
            PathLossBase::Ten => 10,
        }
    }
}

/// Simulation parameters for one network realization family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_pairs: usize,
    pub n_tx_antennas: usize,
    pub area_width_m: f64,
    pub area_height_m: f64,
    pub d_min_m: f64,
    pub d_max_m: f64,
    /// Interference edge threshold `T_d`: an edge exists iff the
    /// TX-to-foreign-RX distance is strictly below it.
    pub interference_threshold_m: f64,
    pub snr_db: f64,
    pub p_max: f64,
    pub antenna_gain_dbi: f64,
    pub shadowing_sigma_db: f64,
    /// Per-pair priorities; `None` means all ones.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub seed: u64,
    pub pathloss_log_base: PathLossBase,
    /// Per-pair noise power override; `None` derives it from `snr_db`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_power: Option<Vec<f64>>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_pairs: 20,
            n_tx_antennas: 1,
            area_width_m: 1000.0,
            area_height_m: 1000.0,
            d_min_m: 10.0,
            d_max_m: 50.0,
            interference_threshold_m: 500.0,
            snr_db: 10.0,
            p_max: 1.0,
            antenna_gain_dbi: 9.0,
            shadowing_sigma_db: 0.0,
            weights: None,
            seed: 0,
            pathloss_log_base: PathLossBase::Two,
            noise_power: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        let bad = |msg: String| Err(NetError::InvalidConfig(msg));
        if self.n_pairs == 0 {
            return bad("n_pairs must be >= 1".into());
        }
        if self.n_tx_antennas == 0 {
            return bad("n_tx_antennas must be >= 1".into());
        }
        for (name, v) in [
            ("area_width_m", self.area_width_m),
            ("area_height_m", self.area_height_m),
            ("d_min_m", self.d_min_m),
            ("d_max_m", self.d_max_m),
            ("p_max", self.p_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        if self.d_min_m > self.d_max_m {
            return bad(format!(
                "d_min_m ({}) must not exceed d_max_m ({})",
                self.d_min_m, self.d_max_m
            ));
        }
        // T_d may be +inf (every pair interferes).
        if self.interference_threshold_m.is_nan() || self.interference_threshold_m < 0.0 {
            return bad("interference_threshold_m must be >= 0".into());
        }
        if !self.snr_db.is_finite() || !self.antenna_gain_dbi.is_finite() {
            return bad("snr_db and antenna_gain_dbi must be finite".into());
        }
        if !(self.shadowing_sigma_db.is_finite() && self.shadowing_sigma_db >= 0.0) {
            return bad("shadowing_sigma_db must be >= 0".into());
        }
        if let Some(w) = &self.weights {
            if w.len() != self.n_pairs {
                return bad(format!("weights has {} entries, expected {}", w.len(), self.n_pairs));
            }
            if w.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
                return bad("weights must be positive".into());
            }
        }
        if let Some(s) = &self.noise_power {
            if s.len() != self.n_pairs {
                return bad(format!(
                    "noise_power has {} entries, expected {}",
                    s.len(),
                    self.n_pairs
                ));
            }
            if s.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
                return bad("noise_power entries must be positive".into());
            }
        }
        Ok(())
    }

    pub fn weight(&self, n: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[n])
    }

    /// `sigma_n^2 = p_max * 10^(-snr_db/10)` unless overridden per pair.
    pub fn noise(&self, n: usize) -> f64 {
        match &self.noise_power {
            Some(s) => s[n],
            None => self.p_max * 10f64.powf(-self.snr_db / 10.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Transmitter/receiver placement. Receivers may sit up to `d_max` outside
/// the configured rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkTopology {
    pub tx_positions: Vec<Point>,
    pub rx_positions: Vec<Point>,
    pub pair_distances: Vec<f64>,
    /// `cross_distances[i][n]`: TX `i` to RX `n`, meters.
    pub cross_distances: Vec<Vec<f64>>,
}

impl NetworkTopology {
    pub fn n_pairs(&self) -> usize {
        self.pair_distances.len()
    }

    /// Build a topology from explicit positions.
    pub fn from_positions(tx: Vec<Point>, rx: Vec<Point>) -> Result<Self, NetError> {
        if tx.len() != rx.len() || tx.is_empty() {
            return Err(NetError::Shape(format!(
                "{} transmitters vs {} receivers",
                tx.len(),
                rx.len()
            )));
        }
        let pair_distances: Vec<f64> = tx.iter().zip(&rx).map(|(t, r)| t.distance(r)).collect();
        let cross_distances = tx
            .iter()
            .enumerate()
            .map(|(i, t)| {
                rx.iter()
                    .enumerate()
                    .map(|(n, r)| if i == n { pair_distances[i] } else { t.distance(r) })
                    .collect()
            })
            .collect();
        Ok(Self { tx_positions: tx, rx_positions: rx, pair_distances, cross_distances })
    }
}

/// Complex channel tensor of shape `N x N x N_t`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelTensor {
    n_pairs: usize,
    n_tx: usize,
    h: Vec<Complex64>,
}

impl ChannelTensor {
    pub fn zeros(n_pairs: usize, n_tx: usize) -> Self {
        Self { n_pairs, n_tx, h: vec![Complex64::new(0.0, 0.0); n_pairs * n_pairs * n_tx] }
    }

    pub fn from_vec(n_pairs: usize, n_tx: usize, h: Vec<Complex64>) -> Result<Self, NetError> {
        if h.len() != n_pairs * n_pairs * n_tx {
            return Err(NetError::Shape(format!(
                "{} entries for a {n_pairs}x{n_pairs}x{n_tx} tensor",
                h.len()
            )));
        }
        if h.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(NetError::Shape("channel tensor contains non-finite entries".into()));
        }
        Ok(Self { n_pairs, n_tx, h })
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    fn offset(&self, i: usize, n: usize) -> usize {
        debug_assert!(i < self.n_pairs && n < self.n_pairs);
        (i * self.n_pairs + n) * self.n_tx
    }

    /// Channel vector from TX `i` to RX `n`.
    pub fn get(&self, i: usize, n: usize) -> &[Complex64] {
        let o = self.offset(i, n);
        &self.h[o..o + self.n_tx]
    }

    pub fn get_mut(&mut self, i: usize, n: usize) -> &mut [Complex64] {
        let o = self.offset(i, n);
        &mut self.h[o..o + self.n_tx]
    }

    pub fn set(&mut self, i: usize, n: usize, v: &[Complex64]) {
        self.get_mut(i, n).copy_from_slice(v);
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.h
    }

    /// Validate the invariants a tensor loaded from disk must meet.
    pub fn check(&self) -> Result<(), NetError> {
        if self.h.len() != self.n_pairs * self.n_pairs * self.n_tx {
            return Err(NetError::Shape("tensor length does not match its shape".into()));
        }
        if self.h.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(NetError::Shape("channel tensor contains non-finite entries".into()));
        }
        Ok(())
    }
}

/// Path loss in dB at `d_km` kilometers, `148.1 + 37.6 log2(d_km)`.
pub fn path_loss_db(d_km: f64) -> Result<f64, NetError> {
    path_loss_db_with_base(d_km, PathLossBase::Two)
}

pub fn path_loss_db_with_base(d_km: f64, base: PathLossBase) -> Result<f64, NetError> {
    if !(d_km > 0.0) {
        return Err(NetError::NonPositiveDistance(d_km));
    }
    let log = match base {
        PathLossBase::Two => d_km.log2(),
        PathLossBase::Ten => d_km.log10(),
    };
    Ok(148.1 + 37.6 * log)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Place transmitters uniformly in the rectangle and each receiver at a
/// uniform distance in `[d_min, d_max]` and uniform bearing from its TX.
pub fn sample_topology<R: Rng + ?Sized>(
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<NetworkTopology, NetError> {
    cfg.validate()?;
    let n = cfg.n_pairs;
    let mut tx = Vec::with_capacity(n);
    let mut rx = Vec::with_capacity(n);
    let mut dist = Vec::with_capacity(n);
    for _ in 0..n {
        let t = Point {
            x: rng.random_range(0.0..cfg.area_width_m),
            y: rng.random_range(0.0..cfg.area_height_m),
        };
        let d = if cfg.d_min_m == cfg.d_max_m {
            cfg.d_min_m
        } else {
            rng.random_range(cfg.d_min_m..=cfg.d_max_m)
        };
        let theta = rng.random_range(0.0..2.0 * PI);
        tx.push(t);
        rx.push(Point { x: t.x + d * theta.cos(), y: t.y + d * theta.sin() });
        dist.push(d);
    }
    let mut topo = NetworkTopology::from_positions(tx, rx)?;
    // Keep the sampled distance exactly rather than the re-derived norm.
    for (i, d) in dist.into_iter().enumerate() {
        topo.pair_distances[i] = d;
        topo.cross_distances[i][i] = d;
    }
    Ok(topo)
}

/// `h_{i,n} = 10^{-L(d)/20} sqrt(psi rho) g`, `g ~ CN(0, I)`.
pub fn sample_channels<R: Rng + ?Sized>(
    topo: &NetworkTopology,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<ChannelTensor, NetError> {
    cfg.validate()?;
    let n = topo.n_pairs();
    if n != cfg.n_pairs {
        return Err(NetError::Shape(format!("topology has {n} pairs, config {}", cfg.n_pairs)));
    }
    let nt = cfg.n_tx_antennas;
    let psi = db_to_linear(cfg.antenna_gain_dbi);
    let mut out = ChannelTensor::zeros(n, nt);
    for i in 0..n {
        for rx in 0..n {
            let d_km = topo.cross_distances[i][rx] / 1000.0;
            let loss = path_loss_db_with_base(d_km, cfg.pathloss_log_base)?;
            let rho = if cfg.shadowing_sigma_db > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                db_to_linear(cfg.shadowing_sigma_db * z)
            } else {
                1.0
            };
            let scale = 10f64.powf(-loss / 20.0) * (psi * rho).sqrt();
            for c in out.get_mut(i, rx) {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *c = Complex64::new(re, im) * (scale * std::f64::consts::FRAC_1_SQRT_2);
            }
        }
    }
    Ok(out)
}

/// Vertex features `Z`, adjacency features `A` and the directed edge set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphModel {
    n_pairs: usize,
    n_tx: usize,
    /// Row `n` is `[h_{n,n}, w_n, sigma_n^2]`, width `N_t + 2`.
    z: Vec<Complex64>,
    a: ChannelTensor,
    edges: BTreeSet<(usize, usize)>,
}

impl GraphModel {
    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn z_row(&self, n: usize) -> &[Complex64] {
        let w = self.n_tx + 2;
        &self.z[n * w..(n + 1) * w]
    }

    pub fn desired(&self, n: usize) -> &[Complex64] {
        &self.z_row(n)[..self.n_tx]
    }

    pub fn weight(&self, n: usize) -> f64 {
        self.z_row(n)[self.n_tx].re
    }

    pub fn noise(&self, n: usize) -> f64 {
        self.z_row(n)[self.n_tx + 1].re
    }

    /// Adjacency feature `A_{i,n,:}`; zero when `(i, n)` is not an edge.
    pub fn adjacency(&self, i: usize, n: usize) -> &[Complex64] {
        self.a.get(i, n)
    }

    /// Channel from TX `i` to RX `n` as the controller sees it: the desired
    /// channel on the diagonal, the adjacency feature elsewhere.
    pub fn link(&self, i: usize, n: usize) -> &[Complex64] {
        if i == n {
            self.desired(n)
        } else {
            self.a.get(i, n)
        }
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }
}

/// Assemble `Z` and `A`; an edge `(i, n)`, `i != n`, exists iff
/// `cross_distances[i][n] < T_d`.
pub fn build_graph(
    h: &ChannelTensor,
    topo: &NetworkTopology,
    cfg: &SimConfig,
) -> Result<GraphModel, NetError> {
    cfg.validate()?;
    let n = h.n_pairs();
    let nt = h.n_tx();
    if topo.n_pairs() != n || cfg.n_pairs != n || cfg.n_tx_antennas != nt {
        return Err(NetError::Shape(format!(
            "tensor {n}x{n}x{nt}, topology {} pairs, config {}x{}",
            topo.n_pairs(),
            cfg.n_pairs,
            cfg.n_tx_antennas
        )));
    }
    let mut z = Vec::with_capacity(n * (nt + 2));
    for p in 0..n {
        z.extend_from_slice(h.get(p, p));
        z.push(Complex64::new(cfg.weight(p), 0.0));
        z.push(Complex64::new(cfg.noise(p), 0.0));
    }
    let mut a = ChannelTensor::zeros(n, nt);
    let mut edges = BTreeSet::new();
    for i in 0..n {
        for rx in 0..n {
            if i != rx && topo.cross_distances[i][rx] < cfg.interference_threshold_m {
                edges.insert((i, rx));
                a.set(i, rx, h.get(i, rx));
            }
        }
    }
    Ok(GraphModel { n_pairs: n, n_tx: nt, z, a, edges })
}

/// `x^H y`.
pub(crate) fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// SINR at receiver `n`.
pub fn sinr(g: &GraphModel, q: &PrecoderSet, n: usize) -> Result<f64, NetError> {
    let np = g.n_pairs();
    if n >= np {
        return Err(NetError::IndexOutOfRange { index: n, n_pairs: np });
    }
    if q.n_pairs() != np || q.n_tx() != g.n_tx() {
        return Err(NetError::Shape("precoder set does not match graph".into()));
    }
    Ok(sinr_unchecked(g, q, n))
}

pub(crate) fn sinr_unchecked(g: &GraphModel, q: &PrecoderSet, n: usize) -> f64 {
    let signal = inner(g.desired(n), q.get(n)).norm_sqr();
    if signal == 0.0 {
        return 0.0;
    }
    let interference: f64 = (0..g.n_pairs())
        .filter(|&i| i != n)
        .map(|i| inner(g.adjacency(i, n), q.get(i)).norm_sqr())
        .sum();
    signal / (interference + g.noise(n))
}

/// Weighted sum rate `sum_n w_n log2(1 + SINR_n)`.
pub fn qoc(g: &GraphModel, q: &PrecoderSet) -> Result<f64, NetError> {
    if q.n_pairs() != g.n_pairs() || q.n_tx() != g.n_tx() {
        return Err(NetError::Shape("precoder set does not match graph".into()));
    }
    Ok(qoc_unchecked(g, q))
}

pub(crate) fn qoc_unchecked(g: &GraphModel, q: &PrecoderSet) -> f64 {
    (0..g.n_pairs()).map(|n| g.weight(n) * (1.0 + sinr_unchecked(g, q, n)).log2()).sum()
}

impl fmt::Display for PathLossBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", u32::from(*self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn path_loss_examples() {
        assert!((path_loss_db(1.0).unwrap() - 148.1).abs() < 1e-12);
        assert!((path_loss_db(2.0).unwrap() - 185.7).abs() < 1e-12);
        assert!((path_loss_db(0.5).unwrap() - 110.5).abs() < 1e-12);
        assert_eq!(path_loss_db(0.0), Err(NetError::NonPositiveDistance(0.0)));
        assert!(path_loss_db(-1.0).is_err());
        assert!((path_loss_db_with_base(10.0, PathLossBase::Ten).unwrap() - 185.7).abs() < 1e-12);
    }

    #[test]
    fn degenerate_distance_range() {
        let cfg = SimConfig { d_min_m: 30.0, d_max_m: 30.0, ..Default::default() };
        let topo = sample_topology(&cfg, &mut rng_from(5)).unwrap();
        assert!(topo.pair_distances.iter().all(|&d| d == 30.0));
    }

    #[test]
    fn single_pair_topology() {
        let cfg = SimConfig { n_pairs: 1, ..Default::default() };
        let topo = sample_topology(&cfg, &mut rng_from(1)).unwrap();
        assert_eq!(topo.cross_distances.len(), 1);
        assert_eq!(topo.cross_distances[0].len(), 1);
        assert_eq!(topo.cross_distances[0][0], topo.pair_distances[0]);
    }

    #[test]
    fn topology_invariants() {
        let cfg = SimConfig { n_pairs: 30, ..Default::default() };
        let topo = sample_topology(&cfg, &mut rng_from(9)).unwrap();
        for i in 0..30 {
            let d = topo.pair_distances[i];
            assert!(d >= cfg.d_min_m && d <= cfg.d_max_m);
            let t = topo.tx_positions[i];
            assert!(t.x >= 0.0 && t.x <= cfg.area_width_m);
            assert!(t.y >= 0.0 && t.y <= cfg.area_height_m);
            assert!((t.distance(&topo.rx_positions[i]) - d).abs() < 1e-9);
            for n in 0..30 {
                if i != n {
                    let want = t.distance(&topo.rx_positions[n]);
                    assert_eq!(topo.cross_distances[i][n], want);
                }
            }
        }
    }

    #[test]
    fn determinism() {
        let cfg = SimConfig { n_pairs: 8, n_tx_antennas: 2, shadowing_sigma_db: 4.0, ..Default::default() };
        let run = |s| {
            let mut rng = rng_from(s);
            let topo = sample_topology(&cfg, &mut rng).unwrap();
            let h = sample_channels(&topo, &cfg, &mut rng).unwrap();
            let g = build_graph(&h, &topo, &cfg).unwrap();
            (topo, h, g)
        };
        let a = run(42);
        let b = run(42);
        assert_eq!(a, b);
        assert_ne!(a.1, run(43).1);
    }

    #[test]
    fn channel_scale_is_deterministic_without_shadowing() {
        // d = 1 km, 0 dBi: every entry is 10^(-148.1/20) times a unit CN draw.
        let cfg = SimConfig {
            n_pairs: 1,
            antenna_gain_dbi: 0.0,
            d_min_m: 1000.0,
            d_max_m: 1000.0,
            ..Default::default()
        };
        let topo = sample_topology(&cfg, &mut rng_from(0)).unwrap();
        let mut r1 = rng_from(3);
        let h = sample_channels(&topo, &cfg, &mut r1).unwrap();
        let mut r2 = rng_from(3);
        let re: f64 = r2.sample(StandardNormal);
        let im: f64 = r2.sample(StandardNormal);
        let expect = c(re, im) * (10f64.powf(-148.1 / 20.0) * std::f64::consts::FRAC_1_SQRT_2);
        assert!((h.get(0, 0)[0] - expect).norm() <= 1e-15 * expect.norm());
    }

    #[test]
    fn channel_power_monte_carlo() {
        // E|h_k|^2 = 10^(-L/10) psi. Oracle: sample mean over 1e5 draws.
        let cfg = SimConfig {
            n_pairs: 1,
            n_tx_antennas: 4,
            d_min_m: 100.0,
            d_max_m: 100.0,
            ..Default::default()
        };
        let topo = sample_topology(&cfg, &mut rng_from(0)).unwrap();
        let mut rng = rng_from(11);
        let draws = 25_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let h = sample_channels(&topo, &cfg, &mut rng).unwrap();
            acc += h.get(0, 0).iter().map(|x| x.norm_sqr()).sum::<f64>();
        }
        let mean = acc / (draws * 4) as f64;
        let loss = path_loss_db(0.1).unwrap();
        let expect = 10f64.powf(-loss / 10.0) * db_to_linear(9.0);
        assert!((mean / expect - 1.0).abs() < 0.02, "mean {mean}, expect {expect}");
    }

    fn hand_topology(cross: Vec<Vec<f64>>) -> NetworkTopology {
        let n = cross.len();
        NetworkTopology {
            tx_positions: vec![Point { x: 0.0, y: 0.0 }; n],
            rx_positions: vec![Point { x: 0.0, y: 0.0 }; n],
            pair_distances: (0..n).map(|i| cross[i][i]).collect(),
            cross_distances: cross,
        }
    }

    #[test]
    fn edge_threshold_rule() {
        // Pairs are 0-based here: the (1,2) edge of 1-based notation is (0,1).
        let mut cross = vec![vec![600.0; 3]; 3];
        for i in 0..3 {
            cross[i][i] = 20.0;
        }
        cross[0][1] = 100.0;
        let topo = hand_topology(cross);
        let base = SimConfig { n_pairs: 3, ..Default::default() };
        let h = sample_channels(&topo, &base, &mut rng_from(1)).unwrap();
        let g = build_graph(&h, &topo, &base).unwrap();
        assert_eq!(g.edges().iter().copied().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(g.adjacency(0, 1), h.get(0, 1));
        assert!(g.adjacency(1, 0).iter().all(|x| x.norm() == 0.0));

        let none = SimConfig { interference_threshold_m: 0.0, ..base.clone() };
        let g = build_graph(&h, &topo, &none).unwrap();
        assert!(g.edges().is_empty());
        let all = SimConfig { interference_threshold_m: f64::INFINITY, ..base };
        let g = build_graph(&h, &topo, &all).unwrap();
        assert_eq!(g.edges().len(), 6);
        for i in 0..3 {
            assert!(g.adjacency(i, i).iter().all(|x| x.norm() == 0.0));
            assert_eq!(g.desired(i), h.get(i, i));
            assert_eq!(g.weight(i), 1.0);
            assert!((g.noise(i) - 0.1).abs() < 1e-15);
        }
    }

    fn scalar_graph(n: usize, diag: f64, off: f64, noise: f64) -> GraphModel {
        let mut h = ChannelTensor::zeros(n, 1);
        for i in 0..n {
            for r in 0..n {
                h.set(i, r, &[c(if i == r { diag } else { off }, 0.0)]);
            }
        }
        let topo = hand_topology(vec![vec![1.0; n]; n]);
        let cfg = SimConfig {
            n_pairs: n,
            noise_power: Some(vec![noise; n]),
            interference_threshold_m: f64::INFINITY,
            ..Default::default()
        };
        build_graph(&h, &topo, &cfg).unwrap()
    }

    #[test]
    fn sinr_examples() {
        let g = scalar_graph(1, 1.0, 0.0, 4.0);
        let q = PrecoderSet::new(1, vec![c(2.0, 0.0)], 4.0).unwrap();
        assert!((sinr(&g, &q, 0).unwrap() - 1.0).abs() < 1e-15);
        let q0 = PrecoderSet::new(1, vec![c(0.0, 0.0)], 4.0).unwrap();
        assert_eq!(sinr(&g, &q0, 0).unwrap(), 0.0);
        assert_eq!(sinr(&g, &q, 1), Err(NetError::IndexOutOfRange { index: 1, n_pairs: 1 }));

        let g = scalar_graph(2, 1.0, 1.0, 1.0);
        let q = PrecoderSet::new(1, vec![c(1.0, 0.0), c(1.0, 0.0)], 1.0).unwrap();
        for n in 0..2 {
            assert!((sinr(&g, &q, n).unwrap() - 0.5).abs() < 1e-15);
        }
        assert!((qoc(&g, &q).unwrap() - 2.0 * 1.5f64.log2()).abs() < 1e-12);
        assert!((qoc(&g, &q).unwrap() - 1.169925).abs() < 1e-6);
    }

    #[test]
    fn qoc_examples() {
        let g = scalar_graph(20, 1.0, 0.0, 1.0);
        let q = PrecoderSet::new(1, vec![c(1.0, 0.0); 20], 1.0).unwrap();
        assert!((qoc(&g, &q).unwrap() - 20.0).abs() < 1e-12);
        let g = scalar_graph(5, 0.0, 0.3, 1.0);
        let q = PrecoderSet::new(1, vec![c(1.0, 0.0); 5], 1.0).unwrap();
        assert_eq!(qoc(&g, &q).unwrap(), 0.0);
    }

    #[test]
    fn config_json_rejects_unknown_keys() {
        let cfg = SimConfig { weights: Some(vec![1.0; 20]), ..Default::default() };
        let s = serde_json::to_string(&cfg).unwrap();
        let back: SimConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cfg);
        let err = serde_json::from_str::<SimConfig>(r#"{"n_pair": 3}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"));
        let partial: SimConfig = serde_json::from_str(r#"{"n_pairs": 3, "pathloss_log_base": 10}"#).unwrap();
        assert_eq!(partial.n_pairs, 3);
        assert_eq!(partial.pathloss_log_base, PathLossBase::Ten);
        assert!(serde_json::from_str::<SimConfig>(r#"{"pathloss_log_base": 3}"#).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::default().validate().is_ok());
        assert!(SimConfig { n_pairs: 0, ..Default::default() }.validate().is_err());
        assert!(SimConfig { d_min_m: 60.0, ..Default::default() }.validate().is_err());
        assert!(SimConfig { p_max: 0.0, ..Default::default() }.validate().is_err());
        assert!(SimConfig { weights: Some(vec![1.0]), ..Default::default() }.validate().is_err());
    }
}
