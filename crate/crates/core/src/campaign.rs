//! Seeded experiment campaigns: QoC sweeps under attack and eigenvalue
//! distribution studies.
//!
//! Realization `r` of every sweep point draws its network from
//! `derive(sim.seed, [r])` and each attack draws from
//! `derive(attack.seed, [r])`, so conditions are paired and every output
//! byte is a function of the campaign JSON alone.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::attack::{apply_attack_with_rng, AttackConfig, AttackKind, AttackReport};
use crate::control::{design_precoders, ControllerSpec};
use crate::netmodel::{build_graph, qoc, sample_channels, sample_topology, ChannelTensor, SimConfig};
use crate::seed::{derive, rng_from};
use crate::statfit::{
    best_fit, detect_ranked, DetectionVerdict, EigenSample, FamilyId, FitResult, SvdMode, DEFAULT_DRIFT_THRESHOLD,
};

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("invalid campaign: {0}")]
    Config(String),
    #[error("{context}: {message}")]
    Runtime { context: String, message: String },
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CampaignError {
    fn at(context: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Self::Runtime { context: context.into(), message: err.to_string() }
    }
}

/// Parameter grid. An empty axis keeps the value from `sim` (or from each
/// attack's own level).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub n_pairs: Vec<usize>,
    pub l_c: Vec<f64>,
    pub l_p: Vec<f64>,
    pub snr_db: Vec<f64>,
    /// `[d_min_m, d_max_m]` pairs.
    pub d_range: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table2Cell {
    pub n_pairs: usize,
    pub n_sigma: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenSettings {
    pub svd_mode: SvdMode,
    /// Families to fit; empty means the full zoo.
    pub zoo: Vec<FamilyId>,
    pub drift_threshold: f64,
    pub curve_points: usize,
    /// `(N, N_sigma)` cells for the sample-size study; `N_sigma` must be a
    /// multiple of `N`.
    pub table2: Vec<Table2Cell>,
}

impl Default for EigenSettings {
    fn default() -> Self {
        Self {
            svd_mode: SvdMode::Unfold,
            zoo: Vec::new(),
            drift_threshold: DEFAULT_DRIFT_THRESHOLD,
            curve_points: 512,
            table2: Vec::new(),
        }
    }
}

impl EigenSettings {
    pub fn zoo(&self) -> Vec<FamilyId> {
        if self.zoo.is_empty() {
            FamilyId::ALL.to_vec()
        } else {
            self.zoo.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Campaign {
    pub sim: SimConfig,
    pub controller: ControllerSpec,
    pub attacks: Vec<AttackConfig>,
    pub sweep: SweepGrid,
    pub n_realizations: usize,
    pub outputs: PathBuf,
    pub eigen: EigenSettings,
}

impl Default for Campaign {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            controller: ControllerSpec::default(),
            attacks: Vec::new(),
            sweep: SweepGrid::default(),
            n_realizations: 25,
            outputs: PathBuf::from("outputs"),
            eigen: EigenSettings::default(),
        }
    }
}

impl Campaign {
    pub fn from_json(text: &str) -> Result<Self, CampaignError> {
        let c: Self = serde_json::from_str(text).map_err(|e| CampaignError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("campaign serialises")
    }

    /// SHA-256 of the compact JSON form.
    pub fn config_hash(&self) -> String {
        let text = serde_json::to_string(self).expect("campaign serialises");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn validate(&self) -> Result<(), CampaignError> {
        let cfg = |e: &dyn std::fmt::Display| CampaignError::Config(e.to_string());
        if self.n_realizations == 0 {
            return Err(CampaignError::Config("n_realizations must be >= 1".into()));
        }
        for sim in self.sim_points() {
            sim.validate().map_err(|e| cfg(&e))?;
        }
        self.controller.validate().map_err(|e| cfg(&e))?;
        for a in &self.attacks {
            a.validate().map_err(|e| cfg(&e))?;
        }
        for &l in self.sweep.l_c.iter().chain(&self.sweep.l_p) {
            if !(0.0..=1.0).contains(&l) {
                return Err(CampaignError::Config(format!("sweep level {l} outside [0, 1]")));
            }
        }
        if !(self.eigen.drift_threshold >= 0.0) {
            return Err(CampaignError::Config("drift_threshold must be >= 0".into()));
        }
        if self.eigen.curve_points < 2 {
            return Err(CampaignError::Config("curve_points must be >= 2".into()));
        }
        for cell in &self.eigen.table2 {
            if cell.n_pairs == 0 || cell.n_sigma == 0 || cell.n_sigma % cell.n_pairs != 0 {
                return Err(CampaignError::Config(format!(
                    "table2 cell N = {}, N_sigma = {}: N_sigma must be a positive multiple of N",
                    cell.n_pairs, cell.n_sigma
                )));
            }
        }
        Ok(())
    }

    /// The cartesian product of the network axes.
    pub fn sim_points(&self) -> Vec<SimConfig> {
        fn axis<T: Clone>(v: &[T], base: T) -> Vec<T> {
            if v.is_empty() {
                vec![base]
            } else {
                v.to_vec()
            }
        }
        let base = &self.sim;
        let mut out = Vec::new();
        for n in axis(&self.sweep.n_pairs, base.n_pairs) {
            for snr in axis(&self.sweep.snr_db, base.snr_db) {
                for d in axis(&self.sweep.d_range, [base.d_min_m, base.d_max_m]) {
                    out.push(SimConfig { n_pairs: n, snr_db: snr, d_min_m: d[0], d_max_m: d[1], ..base.clone() });
                }
            }
        }
        out
    }

    /// Every `(attack, level)` pair the sweep asks for.
    pub fn attack_points(&self) -> Vec<AttackConfig> {
        let mut out = Vec::new();
        for a in &self.attacks {
            let levels = if a.kind.uses_channel_level() && !self.sweep.l_c.is_empty() {
                self.sweep.l_c.clone()
            } else if a.kind.uses_power_level() && !self.sweep.l_p.is_empty() {
                self.sweep.l_p.clone()
            } else {
                vec![a.level()]
            };
            out.extend(levels.into_iter().map(|l| a.clone().with_level(l)));
        }
        out
    }
}

/// Draw realization `r` of a network family.
pub fn realize(sim: &SimConfig, r: usize) -> Result<(crate::netmodel::NetworkTopology, ChannelTensor), CampaignError> {
    let mut rng = rng_from(derive(sim.seed, &[r as u64]));
    let ctx = || format!("N = {}, realization {r}", sim.n_pairs);
    let topo = sample_topology(sim, &mut rng).map_err(|e| CampaignError::at(ctx(), e))?;
    let h = sample_channels(&topo, sim, &mut rng).map_err(|e| CampaignError::at(ctx(), e))?;
    Ok((topo, h))
}

fn attack_tensor(h: &ChannelTensor, a: &AttackConfig, r: usize) -> Result<(ChannelTensor, AttackReport), CampaignError> {
    let mut rng = rng_from(derive(a.seed, &[r as u64]));
    apply_attack_with_rng(h, a, &mut rng).map_err(|e| CampaignError::at(format!("{} at level {}, realization {r}", a.kind.name(), a.level()), e))
}

fn label(a: Option<&AttackConfig>) -> (String, String) {
    match a {
        None => ("none".into(), String::new()),
        Some(a) if a.kind == AttackKind::SingleBc => (a.kind.name().into(), String::new()),
        Some(a) => (a.kind.name().into(), a.level().to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QocRow {
    pub n_pairs: usize,
    pub snr_db: f64,
    pub d_min_m: f64,
    pub d_max_m: f64,
    pub attack: String,
    /// Empty for kinds without a level.
    pub level: String,
    pub n_realizations: usize,
    pub qoc_clean: f64,
    /// Mean QoC of perturbed-input precoders on the true channels.
    pub qoc_true_channel: f64,
    /// Mean QoC of perturbed-input precoders on the perturbed channels.
    pub qoc_reported: f64,
    /// Mean over realizations of `qoc_true_channel / qoc_clean`.
    pub ratio_true: f64,
    pub ratio_reported: f64,
    pub constraint_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub n_pairs: usize,
    pub snr_db: f64,
    pub d_min_m: f64,
    pub d_max_m: f64,
    pub realization: usize,
    pub report: AttackReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<QocRow>,
    pub reports: Vec<ReportRecord>,
}

fn ratio(attacked: f64, clean: f64) -> f64 {
    if clean > 0.0 {
        attacked / clean
    } else if attacked == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

struct RealizationQoc {
    clean: f64,
    attacked: Vec<(f64, f64, AttackReport)>,
}

/// Clean and attacked QoC for every sweep point.
///
/// The controller sees the perturbed graph; its precoders are then scored on
/// the true channels (`qoc_true_channel`) and on the perturbed ones
/// (`qoc_reported`). The clean QoC is computed once per realization.
pub fn run_qoc_sweep(c: &Campaign) -> Result<SweepOutput, CampaignError> {
    c.validate()?;
    let attacks = c.attack_points();
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for sim in c.sim_points() {
        let per_real: Vec<RealizationQoc> = (0..c.n_realizations)
            .into_par_iter()
            .map(|r| {
                let ctx = |what: &str| format!("N = {}, snr = {} dB, realization {r}: {what}", sim.n_pairs, sim.snr_db);
                let (topo, h) = realize(&sim, r)?;
                let g = build_graph(&h, &topo, &sim).map_err(|e| CampaignError::at(ctx("graph"), e))?;
                let q = design_precoders(&g, &c.controller, sim.p_max).map_err(|e| CampaignError::at(ctx("controller"), e))?;
                let clean = qoc(&g, &q).map_err(|e| CampaignError::at(ctx("qoc"), e))?;
                let mut attacked = Vec::with_capacity(attacks.len());
                for a in &attacks {
                    let (hp, rep) = attack_tensor(&h, a, r)?;
                    let gp = build_graph(&hp, &topo, &sim).map_err(|e| CampaignError::at(ctx("graph"), e))?;
                    let qp = design_precoders(&gp, &c.controller, sim.p_max).map_err(|e| CampaignError::at(ctx("controller"), e))?;
                    let on_true = qoc(&g, &qp).map_err(|e| CampaignError::at(ctx("qoc"), e))?;
                    let reported = qoc(&gp, &qp).map_err(|e| CampaignError::at(ctx("qoc"), e))?;
                    attacked.push((on_true, reported, rep));
                }
                Ok(RealizationQoc { clean, attacked })
            })
            .collect::<Result<_, CampaignError>>()?;

        let n = c.n_realizations as f64;
        let clean = per_real.iter().map(|p| p.clean).sum::<f64>() / n;
        let row = |attack: Option<&AttackConfig>, on_true: f64, reported: f64, rt: f64, rr: f64, viol: usize| {
            let (name, level) = label(attack);
            QocRow {
                n_pairs: sim.n_pairs,
                snr_db: sim.snr_db,
                d_min_m: sim.d_min_m,
                d_max_m: sim.d_max_m,
                attack: name,
                level,
                n_realizations: c.n_realizations,
                qoc_clean: clean,
                qoc_true_channel: on_true,
                qoc_reported: reported,
                ratio_true: rt,
                ratio_reported: rr,
                constraint_violations: viol,
            }
        };
        if attacks.is_empty() {
            rows.push(row(None, clean, clean, 1.0, 1.0, 0));
        }
        for (k, a) in attacks.iter().enumerate() {
            let on_true = per_real.iter().map(|p| p.attacked[k].0).sum::<f64>() / n;
            let reported = per_real.iter().map(|p| p.attacked[k].1).sum::<f64>() / n;
            let rt = per_real.iter().map(|p| ratio(p.attacked[k].0, p.clean)).sum::<f64>() / n;
            let rr = per_real.iter().map(|p| ratio(p.attacked[k].1, p.clean)).sum::<f64>() / n;
            let viol = per_real.iter().map(|p| p.attacked[k].2.constraint_violations.len()).sum();
            rows.push(row(Some(a), on_true, reported, rt, rr, viol));
        }
        for (r, p) in per_real.into_iter().enumerate() {
            for (_, _, report) in p.attacked {
                reports.push(ReportRecord {
                    n_pairs: sim.n_pairs,
                    snr_db: sim.snr_db,
                    d_min_m: sim.d_min_m,
                    d_max_m: sim.d_max_m,
                    realization: r,
                    report,
                });
            }
        }
    }
    Ok(SweepOutput { rows, reports })
}

impl SweepOutput {
    /// Write `qoc_sweep.csv`, `attack_reports.jsonl` and `manifest.json`.
    pub fn write(&self, campaign: &Campaign, dir: &Path) -> Result<Vec<PathBuf>, CampaignError> {
        let mut csv = CsvTable::new(&[
            "n_pairs", "snr_db", "d_min_m", "d_max_m", "attack", "level", "n_realizations", "qoc_clean",
            "qoc_true_channel", "qoc_reported", "ratio_true", "ratio_reported", "constraint_violations",
        ]);
        for r in &self.rows {
            csv.push(vec![
                r.n_pairs.to_string(),
                r.snr_db.to_string(),
                r.d_min_m.to_string(),
                r.d_max_m.to_string(),
                r.attack.clone(),
                r.level.clone(),
                r.n_realizations.to_string(),
                r.qoc_clean.to_string(),
                r.qoc_true_channel.to_string(),
                r.qoc_reported.to_string(),
                r.ratio_true.to_string(),
                r.ratio_reported.to_string(),
                r.constraint_violations.to_string(),
            ]);
        }
        let mut jsonl = String::new();
        for rec in &self.reports {
            jsonl.push_str(&serde_json::to_string(rec).expect("report serialises"));
            jsonl.push('\n');
        }
        let mut files = vec![
            write_file(dir, "qoc_sweep.csv", csv.render()?.as_bytes())?,
            write_file(dir, "attack_reports.jsonl", jsonl.as_bytes())?,
        ];
        files.push(write_manifest(campaign, "sweep", dir, &files)?);
        Ok(files)
    }
}

/// One pooled condition of an eigen study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenCondition {
    pub attack: Option<AttackConfig>,
    pub sample: EigenSample,
    pub ranking: Vec<FitResult>,
    /// `None` when the clean baseline has no accepted family.
    pub verdict: Option<DetectionVerdict>,
}

impl EigenCondition {
    pub fn label(&self) -> String {
        match &self.attack {
            None => "clean".into(),
            Some(a) => {
                let (name, level) = label(Some(a));
                if level.is_empty() {
                    name
                } else {
                    format!("{name}@{level}")
                }
            }
        }
    }

    pub fn best(&self) -> &FitResult {
        &self.ranking[0]
    }

    pub fn fit_of(&self, family: FamilyId) -> Option<&FitResult> {
        self.ranking.iter().find(|r| r.family == family)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub n_pairs: usize,
    pub n_sigma: usize,
    pub fit: FitResult,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenStudyOutput {
    /// Clean condition first, then one per attack point.
    pub conditions: Vec<EigenCondition>,
    /// Best accepted fit on the clean sample.
    pub baseline: Option<FitResult>,
    pub table2: Vec<Table2Row>,
}

impl EigenStudyOutput {
    pub fn clean(&self) -> &EigenCondition {
        &self.conditions[0]
    }
}

fn pooled(tensors: &[ChannelTensor], mode: SvdMode, context: &str) -> Result<EigenSample, CampaignError> {
    EigenSample::pooled(tensors, mode).map_err(|e| CampaignError::at(context, e))
}

/// Pool singular values per condition, rank the zoo and run detection
/// against the clean baseline.
pub fn run_eigen_study(c: &Campaign) -> Result<EigenStudyOutput, CampaignError> {
    c.validate()?;
    let zoo = c.eigen.zoo();
    let mode = c.eigen.svd_mode;
    let sim = &c.sim;
    let clean: Vec<ChannelTensor> = (0..c.n_realizations)
        .into_par_iter()
        .map(|r| realize(sim, r).map(|(_, h)| h))
        .collect::<Result<_, _>>()?;

    let rank = |s: &EigenSample, ctx: &str| best_fit(s.values(), &zoo).map_err(|e| CampaignError::at(ctx, e));
    let clean_sample = pooled(&clean, mode, "clean")?;
    let clean_ranking = rank(&clean_sample, "clean")?;
    let baseline = clean_ranking.iter().find(|r| r.accepted).cloned();
    let verdict_for = |s: &EigenSample, ranking: &[FitResult], ctx: &str| -> Result<Option<DetectionVerdict>, CampaignError> {
        baseline
            .as_ref()
            .map(|b| detect_ranked(b, s.values(), ranking, c.eigen.drift_threshold))
            .transpose()
            .map_err(|e| CampaignError::at(ctx, e))
    };
    let clean_verdict = verdict_for(&clean_sample, &clean_ranking, "clean")?;
    let mut conditions = vec![EigenCondition { attack: None, sample: clean_sample, ranking: clean_ranking, verdict: clean_verdict }];

    for a in c.attack_points() {
        let ctx = format!("{} at level {}", a.kind.name(), a.level());
        let attacked: Vec<ChannelTensor> = clean
            .par_iter()
            .enumerate()
            .map(|(r, h)| attack_tensor(h, &a, r).map(|(t, _)| t))
            .collect::<Result<_, _>>()?;
        let sample = pooled(&attacked, mode, &ctx)?;
        let ranking = rank(&sample, &ctx)?;
        let verdict = verdict_for(&sample, &ranking, &ctx)?;
        conditions.push(EigenCondition { attack: Some(a), sample, ranking, verdict });
    }

    let mut table2 = Vec::new();
    for cell in &c.eigen.table2 {
        let cell_sim = SimConfig { n_pairs: cell.n_pairs, weights: None, noise_power: None, ..sim.clone() };
        let ctx = format!("table2 N = {}, N_sigma = {}", cell.n_pairs, cell.n_sigma);
        let tensors: Vec<ChannelTensor> = (0..cell.n_sigma / cell.n_pairs)
            .into_par_iter()
            .map(|r| realize(&cell_sim, r).map(|(_, h)| h))
            .collect::<Result<_, _>>()?;
        let sample = pooled(&tensors, mode, &ctx)?;
        for (k, fit) in rank(&sample, &ctx)?.into_iter().enumerate() {
            table2.push(Table2Row { n_pairs: cell.n_pairs, n_sigma: cell.n_sigma, fit, rank: k + 1 });
        }
    }
    Ok(EigenStudyOutput { conditions, baseline, table2 })
}

fn fmt_params(p: &[f64]) -> String {
    p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

impl EigenStudyOutput {
    /// Write the study's CSV files and `manifest.json` into `dir`.
    pub fn write(&self, campaign: &Campaign, dir: &Path) -> Result<Vec<PathBuf>, CampaignError> {
        let curve_points = campaign.eigen.curve_points;
        let cond_cols = ["condition", "attack", "level"];
        let cond_cells = |c: &EigenCondition| {
            let (name, level) = match &c.attack {
                None => ("none".to_string(), String::new()),
                Some(a) => label(Some(a)),
            };
            vec![c.label(), name, level]
        };
        let with = |extra: &[&'static str]| -> Vec<&'static str> { cond_cols.iter().chain(extra).copied().collect() };

        let mut fits = CsvTable::new(&with(&["rank", "family", "d_stat", "d_crit", "accepted", "log_likelihood", "failed", "params"]));
        let mut jsu = CsvTable::new(&with(&["gamma", "delta", "lambda", "xi", "d_stat", "accepted"]));
        let mut curves = CsvTable::new(&with(&["family", "x", "ecdf", "cdf", "pdf"]));
        let mut modes = CsvTable::new(&with(&["family", "x_mode", "pdf_max"]));
        let mut eig = CsvTable::new(&with(&["index", "value"]));
        let mut verdicts = CsvTable::new(&with(&[
            "level_detected", "baseline_family", "observed_family", "baseline_d_on_observed", "refit_d", "refit_accepted", "max_param_drift",
        ]));

        for c in &self.conditions {
            let head = cond_cells(c);
            let row = |tail: Vec<String>| head.iter().cloned().chain(tail).collect::<Vec<_>>();
            for (k, f) in c.ranking.iter().enumerate() {
                fits.push(row(vec![
                    (k + 1).to_string(),
                    f.family.to_string(),
                    f.d_stat.to_string(),
                    f.d_crit.to_string(),
                    f.accepted.to_string(),
                    f.log_likelihood.to_string(),
                    f.failed.to_string(),
                    fmt_params(&f.params),
                ]));
            }
            if let Some(f) = c.fit_of(FamilyId::JohnsonSU).filter(|f| !f.failed) {
                let mut tail: Vec<String> = f.params.iter().map(|v| v.to_string()).collect();
                tail.push(f.d_stat.to_string());
                tail.push(f.accepted.to_string());
                jsu.push(row(tail));
            }
            for (k, v) in c.sample.values().iter().enumerate() {
                eig.push(row(vec![k.to_string(), v.to_string()]));
            }

            let values = c.sample.values();
            let (lo, hi) = (values[0], values[values.len() - 1]);
            let mut shown: Vec<&FitResult> = vec![c.best()];
            if let Some(j) = c.fit_of(FamilyId::JohnsonSU) {
                if j.family != c.best().family {
                    shown.push(j);
                }
            }
            for f in shown.into_iter().filter(|f| !f.failed) {
                let mut best_x = lo;
                let mut best_pdf = f64::NEG_INFINITY;
                for k in 0..curve_points {
                    let x = lo + (hi - lo) * k as f64 / (curve_points - 1) as f64;
                    let ecdf = values.partition_point(|&v| v <= x) as f64 / values.len() as f64;
                    let pdf = f.pdf(x);
                    if pdf > best_pdf {
                        best_pdf = pdf;
                        best_x = x;
                    }
                    curves.push(row(vec![f.family.to_string(), x.to_string(), ecdf.to_string(), f.cdf(x).to_string(), pdf.to_string()]));
                }
                modes.push(row(vec![f.family.to_string(), best_x.to_string(), best_pdf.to_string()]));
            }
            if let Some(v) = &c.verdict {
                let drift = v.param_drift.iter().cloned().fold(0.0, f64::max);
                verdicts.push(row(vec![
                    format!("{:?}", v.level),
                    v.baseline_family.to_string(),
                    v.observed_family.to_string(),
                    v.baseline_d_on_observed.to_string(),
                    v.refit_d.to_string(),
                    v.refit_accepted.to_string(),
                    drift.to_string(),
                ]));
            }
        }

        let mut files = vec![
            write_file(dir, "fits.csv", fits.render()?.as_bytes())?,
            write_file(dir, "jsu_params.csv", jsu.render()?.as_bytes())?,
            write_file(dir, "curves.csv", curves.render()?.as_bytes())?,
            write_file(dir, "pdf_mode.csv", modes.render()?.as_bytes())?,
            write_file(dir, "eigenvalues.csv", eig.render()?.as_bytes())?,
            write_file(dir, "verdicts.csv", verdicts.render()?.as_bytes())?,
        ];
        if !self.table2.is_empty() {
            let mut t2 = CsvTable::new(&["n_pairs", "n_sigma", "rank", "family", "d_stat", "d_crit", "accepted"]);
            for r in &self.table2 {
                t2.push(vec![
                    r.n_pairs.to_string(),
                    r.n_sigma.to_string(),
                    r.rank.to_string(),
                    r.fit.family.to_string(),
                    r.fit.d_stat.to_string(),
                    r.fit.d_crit.to_string(),
                    r.fit.accepted.to_string(),
                ]);
            }
            files.push(write_file(dir, "table2.csv", t2.render()?.as_bytes())?);
        }
        files.push(write_manifest(campaign, "eigen", dir, &files)?);
        Ok(files)
    }
}

/// Small in-memory CSV table; rendered with LF line endings.
struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn render(&self) -> Result<String, CampaignError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let err = |e: csv::Error| CampaignError::at("csv", e);
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| CampaignError::at("csv", e))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CampaignError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CampaignError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let path = dir.join(name);
    let mut f = fs::File::create(&path).map_err(io(&path))?;
    f.write_all(bytes).map_err(io(&path))?;
    Ok(path)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_sha256: String,
    sim_seed: u64,
    attack_seeds: Vec<u64>,
    n_realizations: usize,
    files: Vec<String>,
    campaign: &'a Campaign,
}

fn write_manifest(c: &Campaign, command: &str, dir: &Path, files: &[PathBuf]) -> Result<PathBuf, CampaignError> {
    let m = Manifest {
        tool: "chanperturb",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_sha256: c.config_hash(),
        sim_seed: c.sim.seed,
        attack_seeds: c.attacks.iter().map(|a| a.seed).collect(),
        n_realizations: c.n_realizations,
        files: files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect(),
        campaign: c,
    };
    let mut text = serde_json::to_string_pretty(&m).expect("manifest serialises");
    text.push('\n');
    write_file(dir, "manifest.json", text.as_bytes())
}
