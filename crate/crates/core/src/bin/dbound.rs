use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dbound::cli::{self, RunConfig};
use dbound::knapsack::{KnapsackProblem, SigmoidFn};
use dbound::oracle::brute_force_optimum;
use dbound::prebounds;
use dbound::relax::Family;
use dbound::{ObjectiveKind, ProbitCurve};

#[derive(Parser)]
#[command(name = "dbound", version, about = "Dual bounds for probit districting objectives")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a relaxation, solve it and report bound and true objective.
    Solve(Common),
    /// Per-district variable ranges and gradient cuts.
    Bounds(Common),
    /// Breakpoints of the chosen step scheme.
    Breakpoints {
        #[command(flatten)]
        common: Common,
        /// Ratio range `LO,HI`; defaults to the instance's node ratios.
        #[arg(long, value_parser = parse_pair)]
        range: Option<(f64, f64)>,
    },
    /// Write the model as an LP file plus breakpoints and bounds JSON.
    ExportLp(Common),
    /// Exhaustive optimum for small instances.
    Oracle(Common),
    /// Closed-form boundaryless knapsack.
    Knapsack(KnapsackArgs),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Synthetic `ROWSxCOLS` grid seeded by --seed.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_parser = parse_objective)]
    objective: Option<ObjectiveKind>,
    #[arg(long, value_parser = parse_family)]
    relax: Option<Family>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    nu: Option<usize>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    dominating: bool,
    #[arg(long)]
    symmetry: bool,
    #[arg(long)]
    prebounds: bool,
    #[arg(long)]
    gradient_cuts: bool,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Args)]
struct KnapsackArgs {
    #[arg(long, default_value_t = ProbitCurve::BVAP.beta)]
    beta: f64,
    #[arg(long, default_value_t = ProbitCurve::BVAP.beta0)]
    beta0: f64,
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long)]
    n: usize,
    /// Total mass `M`.
    #[arg(long)]
    mass: f64,
}

fn parse_objective(s: &str) -> Result<ObjectiveKind, String> {
    ObjectiveKind::parse(s).ok_or_else(|| format!("unknown objective {s:?}; use bvap, brh-rim, brh-deep or cpvi"))
}

fn parse_family(s: &str) -> Result<Family, String> {
    Family::parse(s).ok_or_else(|| format!("unknown relaxation {s:?}; use step-max, step-exp, pwl, va-pwl, loge or bn"))
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected LO,HI")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

impl Common {
    fn config(&self) -> dbound::Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_json_file(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => {$( if let Some(v) = self.$f.clone() { c.$f = v.into(); } )*};
        }
        set!(k, tau, objective, relax, ell, nu, resolution, seed);
        if self.instance.is_some() {
            c.instance = self.instance.clone();
        }
        if self.grid.is_some() {
            c.grid = self.grid.clone();
        }
        if self.time_limit.is_some() {
            c.time_limit = self.time_limit;
        }
        if self.node_limit.is_some() {
            c.node_limit = self.node_limit;
        }
        if self.out.is_some() {
            c.out = self.out.clone();
        }
        if self.cache.is_some() {
            c.cache = self.cache.clone();
        }
        c.dominating |= self.dominating;
        c.symmetry |= self.symmetry;
        c.prebounds |= self.prebounds;
        c.gradient_cuts |= self.gradient_cuts;
        Ok(c)
    }
}

/// Writes to stdout; a closed pipe is not an error.
fn say(text: &str) -> dbound::Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn emit(out: &Option<PathBuf>, json: &str) -> dbound::Result<()> {
    match out {
        Some(p) => std::fs::write(p, json)?,
        None => say(&format!("{json}\n"))?,
    }
    Ok(())
}

fn main_inner(cli: Cli) -> dbound::Result<()> {
    match cli.cmd {
        Cmd::Solve(c) => {
            let cfg = c.config()?;
            let r = cli::run(&cfg)?;
            say(&r.to_table())?;
            if let Some(p) = &cfg.out {
                std::fs::write(p, r.to_json())?;
            }
        }
        Cmd::Bounds(c) => {
            let cfg = RunConfig {
                prebounds: true,
                ..c.config()?
            };
            cfg.validate()?;
            let inst = cfg.load_instance()?;
            let spec = cfg.spec();
            let (bounds, cuts) = cli::prebound(&cfg, &inst, &spec)?;
            let cache = prebounds::PreboundCache {
                key: prebounds::cache_key(&inst, &spec, ""),
                bounds: bounds.expect("prebounds requested"),
                cuts,
            };
            emit(&cfg.out, &serde_json::to_string_pretty(&cache).expect("bounds serialize"))?;
        }
        Cmd::Breakpoints { common, range } => {
            let cfg = common.config()?;
            let r = cli::breakpoint_report(&cfg, range)?;
            emit(&cfg.out, &serde_json::to_string_pretty(&r).expect("breakpoints serialize"))?;
        }
        Cmd::ExportLp(c) => {
            let cfg = c.config()?;
            let a = cli::export(&cfg)?;
            match &cfg.out {
                Some(p) => {
                    for f in cli::write_artifacts(&a, p)? {
                        eprintln!("wrote {}", f.display());
                    }
                }
                None => say(&a.lp)?,
            }
        }
        Cmd::Oracle(c) => {
            let cfg = c.config()?;
            cfg.validate()?;
            let inst = cfg.load_instance()?;
            let r = brute_force_optimum(&inst, &cfg.spec())?;
            let json = serde_json::json!({
                "value": r.value,
                "assignment": r.assignment.district,
                "partitions": r.count,
            });
            emit(&cfg.out, &serde_json::to_string_pretty(&json).expect("json"))?;
        }
        Cmd::Knapsack(k) => {
            let curve = ProbitCurve::new(k.beta, k.beta0);
            let p = KnapsackProblem::new(SigmoidFn::probit(curve, k.a, k.b)?, k.n, k.mass)?;
            let cont = p.continuous_optimum().ok();
            let json = serde_json::json!({
                "d_a": p.d_a()?,
                "continuous": cont,
                "integer": p.integer_optimum()?,
            });
            emit(&None, &serde_json::to_string_pretty(&json).expect("json"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
