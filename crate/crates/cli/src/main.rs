//! `chanperturb`: generate networks, apply attacks, fit singular-value
//! distributions and run seeded campaigns.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use chanperturb_core::attack::apply_attack;
use chanperturb_core::campaign::{realize, run_eigen_study, run_qoc_sweep};
use chanperturb_core::netmodel::build_graph;
use chanperturb_core::statfit::{best_fit, lilliefors_dcrit};
use chanperturb_core::{
    AttackConfig, AttackReport, Campaign, CampaignError, ChannelTensor, FamilyId, GraphModel, NetworkTopology, SimConfig,
};

#[derive(Parser)]
#[command(name = "chanperturb", version, about = "Adversarial CSI perturbation and eigenvalue-based detection")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one network and dump its topology, channels and graph.
    Gen {
        #[command(flatten)]
        common: Common,
        /// Realization index under the seed.
        #[arg(long, default_value_t = 0)]
        realization: usize,
    },
    /// Apply one attack (configured by --config) to a dumped network.
    Attack {
        #[command(flatten)]
        common: Common,
        /// network.json written by `gen`.
        #[arg(long)]
        input: PathBuf,
    },
    /// Rank the distribution zoo on a file of values (one per line).
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Restrict to these family ids (repeatable).
        #[arg(long = "family")]
        families: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lilliefors critical value for a sample size.
    Dcrit {
        n_sigma: usize,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
    },
    /// QoC sweep under attack.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Singular-value distribution study and detection.
    Eigen {
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<CampaignError> for Failure {
    fn from(e: CampaignError) -> Self {
        match e {
            CampaignError::Config(_) => Failure::Config(e.into()),
            other => Failure::Runtime(other.into()),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn runtime_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

fn read_text(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(config_err)
}

fn load_campaign(common: &Common) -> Outcome<Campaign> {
    let mut c = match &common.config {
        Some(p) => {
            let text = read_text(p)?;
            Campaign::from_json(&text).map_err(|e| config_err(anyhow!("{}: {e}", p.display())))?
        }
        None => Campaign::default(),
    };
    if let Some(s) = common.seed {
        c.sim.seed = s;
    }
    if let Some(o) = &common.out {
        c.outputs = o.clone();
    }
    c.validate()?;
    Ok(c)
}

#[derive(Serialize, Deserialize)]
struct NetworkDump {
    sim: SimConfig,
    realization: usize,
    topology: NetworkTopology,
    channels: ChannelTensor,
    graph: GraphModel,
}

#[derive(Serialize)]
struct AttackDump<'a> {
    attack: &'a AttackConfig,
    sim: &'a SimConfig,
    topology: &'a NetworkTopology,
    channels: &'a ChannelTensor,
    graph: &'a GraphModel,
    report: &'a AttackReport,
}

fn write_json(path: &Path, value: &impl Serialize) -> Outcome<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(runtime_err)?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(runtime_err)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display())).map_err(runtime_err)
}

fn out_dir(common: &Common) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from("outputs"))
}

fn cmd_gen(common: &Common, realization: usize) -> Outcome<()> {
    let c = load_campaign(common)?;
    let (topology, channels) = realize(&c.sim, realization)?;
    let graph = build_graph(&channels, &topology, &c.sim).map_err(runtime_err)?;
    let path = out_dir(common).join("network.json");
    write_json(&path, &NetworkDump { sim: c.sim, realization, topology, channels, graph })?;
    println!("{}", path.display());
    Ok(())
}

fn cmd_attack(common: &Common, input: &Path) -> Outcome<()> {
    let mut attack: AttackConfig = match &common.config {
        Some(p) => serde_json::from_str(&read_text(p)?).map_err(|e| config_err(anyhow!("{}: {e}", p.display())))?,
        None => return Err(config_err(anyhow!("attack needs --config <attack.json>"))),
    };
    if let Some(s) = common.seed {
        attack.seed = s;
    }
    attack.validate().map_err(config_err)?;
    let net: NetworkDump = serde_json::from_str(&read_text(input)?).map_err(|e| config_err(anyhow!("{}: {e}", input.display())))?;
    net.channels.check().map_err(config_err)?;
    // Every attack error stems from the configuration or the input network.
    let (attacked, report) = apply_attack(&net.channels, &attack).map_err(config_err)?;
    let graph = build_graph(&attacked, &net.topology, &net.sim).map_err(runtime_err)?;
    let path = out_dir(common).join("attacked.json");
    write_json(
        &path,
        &AttackDump { attack: &attack, sim: &net.sim, topology: &net.topology, channels: &attacked, graph: &graph, report: &report },
    )?;
    println!("{}", path.display());
    if !report.constraint_violations.is_empty() {
        return Err(runtime_err(anyhow!("constraint violations: {:?}", report.constraint_violations)));
    }
    Ok(())
}

fn parse_values(text: &str) -> Outcome<Vec<f64>> {
    let mut values = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            // Tolerate a single header line.
            Err(_) if k == 0 => {}
            Err(_) => return Err(config_err(anyhow!("line {}: '{field}' is not a number", k + 1))),
        }
    }
    Ok(values)
}

fn cmd_fit(input: &Path, families: &[String], out: Option<&Path>) -> Outcome<()> {
    let values = parse_values(&read_text(input)?)?;
    let zoo: Vec<FamilyId> = if families.is_empty() {
        FamilyId::ALL.to_vec()
    } else {
        families.iter().map(|f| f.parse()).collect::<Result<_, _>>().map_err(config_err)?
    };
    let ranking = best_fit(&values, &zoo).map_err(runtime_err)?;
    let mut text = String::from("rank,family,d_stat,d_crit,accepted,log_likelihood,params\n");
    for (k, r) in ranking.iter().enumerate() {
        let params: Vec<String> = r.params.iter().map(|p| p.to_string()).collect();
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            k + 1,
            r.family,
            r.d_stat,
            r.d_crit,
            r.accepted,
            r.log_likelihood,
            params.join(";")
        ));
    }
    match out {
        Some(p) => {
            if let Some(dir) = p.parent() {
                fs::create_dir_all(dir).map_err(runtime_err)?;
            }
            fs::write(p, &text).with_context(|| format!("writing {}", p.display())).map_err(runtime_err)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_dcrit(n: usize, alpha: f64) -> Outcome<()> {
    let d = lilliefors_dcrit(n, alpha).map_err(config_err)?;
    println!("{d}");
    Ok(())
}

fn cmd_sweep(common: &Common) -> Outcome<()> {
    let c = load_campaign(common)?;
    let out = run_qoc_sweep(&c)?;
    for f in out.write(&c, &c.outputs)? {
        println!("{}", f.display());
    }
    Ok(())
}

fn cmd_eigen(common: &Common) -> Outcome<()> {
    let c = load_campaign(common)?;
    let out = run_eigen_study(&c)?;
    for f in out.write(&c, &c.outputs)? {
        println!("{}", f.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(config_err(anyhow!("--threads must be >= 1")));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(runtime_err)?;
    }
    match &cli.command {
        Command::Gen { common, realization } => cmd_gen(common, *realization),
        Command::Attack { common, input } => cmd_attack(common, input),
        Command::Fit { input, families, out } => cmd_fit(input, families, out.as_deref()),
        Command::Dcrit { n_sigma, alpha } => cmd_dcrit(*n_sigma, *alpha),
        Command::Sweep { common } => cmd_sweep(common),
        Command::Eigen { common } => cmd_eigen(common),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
