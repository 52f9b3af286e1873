//! Command-line front end: instance files, subcommands and JSON reports.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use mupricing::dynpricing::{
    self, EpsGrid, EpsGridConfig, FixedPrices, MarketInfo, Strategy, TwoPoint, TwoPointConfig,
};
use mupricing::optimizer::{self, OptimizeConfig, DMR_GRID};
use mupricing::oracle;
use mupricing::revenue;
use mupricing::{ktwo, PriceVector};

pub mod instance;

pub use instance::{DiscreteBlock, InstanceFile, Loaded, MarginalSpec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable, malformed or invalid input.
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<mupricing::Error> for CliError {
    fn from(e: mupricing::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    /// SHA-256 of the canonical instance serialization.
    pub instance_digest: String,
    pub result: Value,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

#[derive(Debug, Parser)]
#[command(name = "mupricing", version, about = "Posted prices for multi-unit buyers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct InstanceArg {
    /// JSON instance file.
    #[arg(long, env = "MUPRICING_INSTANCE")]
    pub instance: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// DMR and regularity verdicts per marginal.
    CheckDmr {
        #[command(flatten)]
        instance: InstanceArg,
        /// Grid size for numeric classification.
        #[arg(long, default_value_t = DMR_GRID, env = "MUPRICING_GRID_POINTS")]
        grid_points: usize,
    },
    /// Expected revenue of a price vector.
    Revenue {
        #[command(flatten)]
        instance: InstanceArg,
        /// Comma-separated prices p_1,…,p_k.
        #[arg(long, value_delimiter = ',', required = true, env = "MUPRICING_PRICES")]
        prices: Vec<f64>,
    },
    /// Revenue-maximizing prices.
    Optimize {
        #[command(flatten)]
        instance: InstanceArg,
        #[command(flatten)]
        opt: OptimizeArgs,
        /// Exhaustive lattice search instead of gradient ascent.
        #[arg(long, env = "MUPRICING_GRID")]
        grid: bool,
        /// Lattice points per axis; defaults by dimension.
        #[arg(long, env = "MUPRICING_GRID_RESOLUTION")]
        grid_resolution: Option<usize>,
        /// Refine the lattice by zooming until the step is at most this.
        #[arg(long, env = "MUPRICING_GRID_STEP")]
        grid_step: Option<f64>,
        /// Use the two-demand closed form when k = 2.
        #[arg(long, env = "MUPRICING_K2")]
        k2: bool,
    },
    /// Optimal randomized and deterministic mechanisms on the discrete block.
    Oracle {
        #[command(flatten)]
        instance: InstanceArg,
    },
    /// Repeated posted pricing against simulated buyers.
    Simulate {
        #[command(flatten)]
        instance: InstanceArg,
        #[arg(long, value_enum, default_value_t = StrategyName::TwoPoint, env = "MUPRICING_STRATEGY")]
        strategy: StrategyName,
        /// Number of buyers
        #[arg(long, default_value_t = 10_000, env = "MUPRICING_ROUNDS")]
        rounds: u64,
        #[arg(long, default_value_t = 0, env = "MUPRICING_SEED")]
        seed: u64,
        /// Prices for the fixed strategy; the optimizer's prices by default.
        #[arg(long, value_delimiter = ',', env = "MUPRICING_PRICES")]
        prices: Option<Vec<f64>>,
        /// Lattice points per increment axis for eps-grid.
        #[arg(long, default_value_t = 11, env = "MUPRICING_ARMS")]
        arms: usize,
        /// Trace CSV destination.
        #[arg(long, env = "MUPRICING_OUT")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    /// Stop when the certificate falls below this
    #[arg(long, env = "MUPRICING_TOL")]
    pub tol: Option<f64>,
    /// Iteration cap per restart
    #[arg(long, env = "MUPRICING_ITERS")]
    pub iters: Option<usize>,
    #[arg(long, env = "MUPRICING_RESTARTS")]
    pub restarts: Option<usize>,
    #[arg(long, env = "MUPRICING_SEED")]
    pub seed: Option<u64>,
}

impl OptimizeArgs {
    pub fn config(&self) -> OptimizeConfig {
        let d = OptimizeConfig::default();
        OptimizeConfig {
            tol: self.tol.unwrap_or(d.tol),
            max_iters: self.iters.unwrap_or(d.max_iters),
            restarts: self.restarts.unwrap_or(d.restarts),
            seed: self.seed.unwrap_or(d.seed),
            ..d
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyName {
    Fixed,
    EpsGrid,
    TwoPoint,
}

pub fn digest(file: &InstanceFile) -> String {
    format!("{:x}", Sha256::digest(file.to_json().as_bytes()))
}

pub fn run(cli: &Cli) -> Result<RunReport, CliError> {
    let (name, path) = match &cli.command {
        Command::CheckDmr { instance, .. } => ("check-dmr", &instance.instance),
        Command::Revenue { instance, .. } => ("revenue", &instance.instance),
        Command::Optimize { instance, .. } => ("optimize", &instance.instance),
        Command::Oracle { instance } => ("oracle", &instance.instance),
        Command::Simulate { instance, .. } => ("simulate", &instance.instance),
    };
    let loaded = InstanceFile::read(path)?;
    let result = match &cli.command {
        Command::CheckDmr { grid_points, .. } => cmd_check_dmr(&loaded, *grid_points)?,
        Command::Revenue { prices, .. } => cmd_revenue(&loaded, prices)?,
        Command::Optimize {
            opt,
            grid,
            grid_resolution,
            grid_step,
            k2,
            ..
        } => cmd_optimize(&loaded, &opt.config(), *grid, *grid_resolution, *grid_step, *k2)?,
        Command::Oracle { .. } => cmd_oracle(&loaded)?,
        Command::Simulate {
            strategy,
            rounds,
            seed,
            prices,
            arms,
            out,
            ..
        } => cmd_simulate(
            &loaded,
            *strategy,
            *rounds,
            *seed,
            prices.as_deref(),
            *arms,
            out.as_deref(),
        )?,
    };
    Ok(RunReport {
        command: name.into(),
        instance_digest: digest(&loaded.file),
        result,
    })
}

pub fn cmd_check_dmr(loaded: &Loaded, grid_points: usize) -> Result<Value, CliError> {
    let inst = loaded.problem()?;
    let rows: Vec<Value> = inst
        .marginals()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let v = m.is_dmr(grid_points);
            json!({
                "index": i + 1,
                "demand": inst.demands()[i],
                "kind": m.kind_name(),
                "dmr": v.is_dmr,
                "regular": m.is_regular(grid_points),
                "witness": v.witness.map(|(a, b, c)| [a, b, c]),
            })
        })
        .collect();
    Ok(json!({
        "marginals": rows,
        "all_dmr": inst.is_dmr(grid_points),
    }))
}

fn price_vector(prices: &[f64], k: usize) -> Result<PriceVector, CliError> {
    if prices.len() != k {
        return Err(CliError::Input(format!("expected {k} prices, got {}", prices.len())));
    }
    Ok(PriceVector::new(prices.to_vec())?)
}

pub fn cmd_revenue(loaded: &Loaded, prices: &[f64]) -> Result<Value, CliError> {
    let inst = loaded.problem()?;
    let p = price_vector(prices, inst.k())?;
    let rev = revenue::rev(&p, inst)?;
    let sigma = revenue::assign_sigma(&p, inst);
    let check = revenue::rev_by_integration(&p, inst)?;
    Ok(json!({
        "prices": p,
        "revenue": rev,
        "sigma": sigma.as_slice(),
        "paths": sigma.paths(),
        "integration_revenue": check,
        "integration_delta": rev - check,
    }))
}

fn default_resolution(k: usize) -> usize {
    match k {
        1 => 2001,
        2 => 201,
        3 => 41,
        4 => 17,
        _ => 9,
    }
}

pub fn cmd_optimize(
    loaded: &Loaded,
    cfg: &OptimizeConfig,
    grid: bool,
    grid_resolution: Option<usize>,
    grid_step: Option<f64>,
    k2: bool,
) -> Result<Value, CliError> {
    let inst = loaded.problem()?;
    if k2 && inst.k() == 2 {
        let sol = ktwo::solve_k2(inst)?;
        let p = sol.price_vector();
        return Ok(json!({
            "method": "k2",
            "p_star": p,
            "rev_star": sol.revenue,
            "case": sol.case_id,
            "v1_star": sol.v1_star,
            "v2_star": sol.v2_star,
            "certificate": optimizer::certificate(&p, inst, optimizer::CERT_STEP)?,
            "certified": inst.is_dmr(DMR_GRID),
        }));
    }
    let (method, res) = if grid {
        let n = grid_resolution.unwrap_or_else(|| default_resolution(inst.k()));
        let res = match grid_step {
            Some(step) => optimizer::grid_search_refined(inst, n, step)?,
            None => optimizer::grid_search(inst, n)?,
        };
        ("grid", res)
    } else {
        ("gradient", optimizer::maximize(inst, cfg)?)
    };
    Ok(json!({
        "method": method,
        "p_star": res.p_star,
        "rev_star": res.rev_star,
        "iterations": res.iterations,
        "certificate": res.certificate,
        "certified": res.certified,
        "restart_revenues": res.restart_revenues,
        "lattice_gap": res.lattice_gap,
        "k2_applicable": inst.k() == 2,
    }))
}

pub fn cmd_oracle(loaded: &Loaded) -> Result<Value, CliError> {
    let inst = loaded.discrete()?;
    let lp = oracle::lp_optimal_with(inst, &oracle::LpConfig::default())?;
    let (prices, det) = oracle::deterministic_optimal(inst)?;
    Ok(json!({
        "lp_revenue": lp.revenue,
        "lp_mechanism": lp.mechanism,
        "lp_rows": lp.rows,
        "lp_pivots": lp.pivots,
        "deterministic_demands": inst.demands(),
        "deterministic_prices": prices,
        "deterministic_revenue": det,
        "determinism_gap": lp.revenue - det,
    }))
}

pub fn cmd_simulate(
    loaded: &Loaded,
    strategy: StrategyName,
    rounds: u64,
    seed: u64,
    prices: Option<&[f64]>,
    arms: usize,
    out: Option<&std::path::Path>,
) -> Result<Value, CliError> {
    let inst = loaded.problem()?;
    let opt = optimizer::maximize(inst, &OptimizeConfig::default())?;
    let info = MarketInfo::of(inst);
    let mut s: Box<dyn Strategy> = match strategy {
        StrategyName::Fixed => {
            let p = match prices {
                Some(p) => price_vector(p, inst.k())?,
                None => opt.p_star.clone(),
            };
            Box::new(FixedPrices::new(p))
        }
        StrategyName::EpsGrid => {
            if arms < 2 {
                return Err(CliError::Input("eps-grid needs at least 2 arms per axis".into()));
            }
            Box::new(EpsGrid::new(
                EpsGrid::lattice(&info, arms),
                EpsGridConfig::default(),
                seed,
            ))
        }
        StrategyName::TwoPoint => Box::new(TwoPoint::new(info, TwoPointConfig::default(), seed)),
    };
    let trace = dynpricing::simulate(inst, s.as_mut(), rounds, seed)?;
    let report = dynpricing::regret_against(&trace, inst, opt.rev_star)?;
    if let Some(path) = out {
        let f = std::fs::File::create(path)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
        trace.write_csv(std::io::BufWriter::new(f))?;
    }
    Ok(json!({
        "strategy": trace.strategy,
        "seed": seed,
        "baseline_prices": opt.p_star,
        "regret": report,
        "final_incumbent": trace.final_incumbent,
        "csv": out.map(|p| p.display().to_string()),
    }))
}
