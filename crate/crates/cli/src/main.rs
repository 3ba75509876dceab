//! `percomp`: experiment driver for two-type competition on percolation
//! clusters. Every subcommand reads one JSON config, applies command-line
//! overrides and writes CSV, JSON or PPM artifacts into `--out`.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for runtime
//! failures such as unwritable outputs.

mod config;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use percomp_core::percolation::tail_csv;
use percomp_core::renorm::pn_csv;
use percomp_core::shape::{norm_csv, norm_estimates};
use percomp_core::stats::run_replicas;
use percomp_core::{
    cpq_estimate, derive_seed, estimate_pn, main_crossings, run_competition, run_sweep,
    speed_ratio_experiment, tail_statistics, write_ppm, BoxDomain, CompetitionParams, CompetitionState,
    FanNorm, HashedField, PaletteGrid, RenormGrid, RunRecord, SweepConfig, TailConfig,
};

use config::{
    CompeteConfig, CpqConfig, Overrides, PercolateConfig, RenderConfig, RenormConfig, ShapeConfig,
    SpeedConfig, SweepFileConfig,
};

#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed or invalid configuration.
    Config(String),
    /// Failure while running or writing results.
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl From<percomp_core::Error> for CliError {
    fn from(e: percomp_core::Error) -> Self {
        match e {
            percomp_core::Error::Io(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "percomp", version, about = "Two-type competition on Bernoulli bond percolation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Finite-cluster radius and hole tails (tail.csv).
    Percolate(Common),
    /// Competition runs as JSON records, with optional snapshots (run.json, snapshot_t*.ppm).
    Compete(Common),
    /// Directional norm estimates (norm.csv).
    Shape(Common),
    /// Coupled norm-comparison ratios (cpq.csv).
    Cpq(Common),
    /// Blue reach per unit time on coexisting runs (speed.csv).
    Speed(Common),
    /// White-cube probabilities and main-crossing dumps (pn.csv, crossings.csv).
    Renorm(Common),
    /// Coexistence frequencies over a (p, q) grid (sweep.csv).
    Sweep(Common),
    /// Palette render of one competition at its horizon (render.ppm).
    Render(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides "seed" in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Replica count; overrides "replicas" in the config.
    #[arg(long)]
    replicas: Option<usize>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Override any config key: `--set key=value`, value parsed as JSON.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, replicas: self.replicas, set: self.set.clone() }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("percomp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

type Handler = fn(&Common) -> Result<(), CliError>;

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, handler): (&Common, Handler) = match &cli.command {
        Command::Percolate(c) => (c, percolate),
        Command::Compete(c) => (c, compete),
        Command::Shape(c) => (c, shape),
        Command::Cpq(c) => (c, cpq),
        Command::Speed(c) => (c, speed),
        Command::Renorm(c) => (c, renorm),
        Command::Sweep(c) => (c, sweep),
        Command::Render(c) => (c, render),
    };
    let threads = common.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
    std::fs::create_dir_all(&common.out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", common.out.display())))?;
    pool.install(|| handler(common))
}

fn write_output(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn write_image(dir: &Path, name: &str, grid: &PaletteGrid) -> Result<(), CliError> {
    let path = dir.join(name);
    write_ppm(grid, &path).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn percolate(c: &Common) -> Result<(), CliError> {
    let cfg: PercolateConfig = config::load(&c.config, &c.overrides())?;
    let rows = tail_statistics(&TailConfig {
        dim: cfg.dim,
        p: cfg.p,
        radii: cfg.radii,
        replicas: cfg.replicas,
        seed: cfg.seed,
        interior: cfg.interior,
    })?;
    write_output(&c.out, "tail.csv", tail_csv(&rows).as_bytes())
}

fn check_dim(dim: usize, sources: [&[i64]; 2]) -> Result<(), CliError> {
    if sources.iter().any(|s| s.len() != dim) {
        return Err(CliError::Config(format!("sources must have {dim} coordinates")));
    }
    Ok(())
}

fn compete(c: &Common) -> Result<(), CliError> {
    let cfg: CompeteConfig = config::load(&c.config, &c.overrides())?;
    check_dim(cfg.dim, [&cfg.s1, &cfg.s2])?;
    if cfg.replicas == 0 {
        return Err(CliError::Config("at least one replica is required".into()));
    }
    let params = CompetitionParams::new(cfg.p, cfg.q, cfg.s1.clone(), cfg.s2.clone())?;
    let domain = BoxDomain::new(cfg.dim, cfg.half_width)?;
    // replica r runs on the field seeded by derive_seed(seed, [0, r]); the
    // record carries that field seed
    let records = run_replicas(cfg.replicas, |r| {
        let field_seed = derive_seed(cfg.seed, &[0, r as u64]);
        let field = HashedField::new(field_seed, domain.clone());
        run_competition(&params, &field, cfg.horizon, cfg.allow_censored).map(|run| run.record(field_seed))
    })
    .into_iter()
    .collect::<percomp_core::Result<Vec<RunRecord>>>()?;
    let json = serde_json::to_string_pretty(&records).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_output(&c.out, "run.json", format!("{json}\n").as_bytes())?;

    if cfg.snapshots.is_empty() {
        return Ok(());
    }
    if cfg.dim != 2 {
        return Err(CliError::Config("snapshots need dim = 2".into()));
    }
    let last = *cfg.snapshots.iter().max().unwrap();
    let slack = cfg.half_width as i64 - params.source_radius();
    if last as i64 > slack && !cfg.allow_censored {
        return Err(CliError::Config(format!("snapshot time {last} exceeds the exact bound {slack}")));
    }
    let side = domain.side();
    let [width, height] = cfg.snapshot_size.unwrap_or([side, side]);
    let field = HashedField::new(derive_seed(cfg.seed, &[0, 0]), domain.clone());
    let mut state = CompetitionState::from_sources(domain, &params)?;
    for t in 0..=last {
        if cfg.snapshots.contains(&t) {
            let grid = PaletteGrid::snapshot(&state, width, height)?;
            write_image(&c.out, &format!("snapshot_t{t}.ppm"), &grid)?;
        }
        state.advance(&field, params.p, params.q);
    }
    Ok(())
}

fn shape(c: &Common) -> Result<(), CliError> {
    let cfg: ShapeConfig = config::load(&c.config, &c.overrides())?;
    let est = norm_estimates(cfg.p, &cfg.directions, &cfg.n_values, cfg.replicas, cfg.seed, cfg.margin)?;
    write_output(&c.out, "norm.csv", norm_csv(&est).as_bytes())
}

fn cpq(c: &Common) -> Result<(), CliError> {
    let cfg: CpqConfig = config::load(&c.config, &c.overrides())?;
    let table = cpq_estimate(cfg.p, cfg.q, &cfg.directions, cfg.n, cfg.replicas, cfg.seed)?;
    if let (Some(sup), Some(upper)) = (table.sup_ratio(), table.sup_upper()) {
        eprintln!("sup ratio {sup:.4}, upper 95% bound {upper:.4}");
    }
    write_output(&c.out, "cpq.csv", table.to_csv().as_bytes())
}

fn speed(c: &Common) -> Result<(), CliError> {
    let cfg: SpeedConfig = config::load(&c.config, &c.overrides())?;
    let dim = cfg.s1.len();
    check_dim(dim, [&cfg.s1, &cfg.s2])?;
    let params = CompetitionParams::new(cfg.p, cfg.q, cfg.s1.clone(), cfg.s2.clone())?;
    // the norm uses its own subtree of the seed so its fields are
    // independent of the competition fields
    let norm_seed = derive_seed(cfg.seed, &[1]);
    let norm = FanNorm::estimate(cfg.p, dim, cfg.norm.resolution, cfg.norm.reach, cfg.norm.replicas, norm_seed)
        .map_err(|e| CliError::Runtime(format!("norm estimate failed: {e}")))?;
    let res = speed_ratio_experiment(&params, cfg.half_width, cfg.horizon, cfg.replicas, cfg.seed, &norm)?;
    if let Some(d) = &res.diagnostic {
        eprintln!("warning: {d}");
    }
    write_output(&c.out, "speed.csv", res.to_csv().as_bytes())
}

fn renorm(c: &Common) -> Result<(), CliError> {
    let cfg: RenormConfig = config::load(&c.config, &c.overrides())?;
    let rows = estimate_pn(cfg.p, cfg.dim, &cfg.n_values, cfg.replicas, cfg.seed)?;
    write_output(&c.out, "pn.csv", pn_csv(&rows).as_bytes())?;
    if let Some(cross) = &cfg.crossings {
        let dim = cross.path.first().map_or(cfg.dim, Vec::len);
        let grid = RenormGrid::new(dim, cross.n)?;
        let seq = main_crossings(&cross.path, &grid)?;
        let dump = format!("k,box,len\n{}", seq.debug_dump());
        write_output(&c.out, "crossings.csv", dump.as_bytes())?;
    }
    Ok(())
}

fn sweep(c: &Common) -> Result<(), CliError> {
    let cfg: SweepFileConfig = config::load(&c.config, &c.overrides())?;
    let result = run_sweep(&SweepConfig {
        dim: cfg.dim,
        half_width: cfg.half_width,
        p_values: cfg.p_values,
        q_values: cfg.q_values,
        s1: cfg.s1,
        s2: cfg.s2,
        horizon: cfg.horizon,
        replicas: cfg.replicas,
        seed: cfg.seed,
    })?;
    write_output(&c.out, "sweep.csv", result.to_csv().as_bytes())
}

fn render(c: &Common) -> Result<(), CliError> {
    let cfg: RenderConfig = config::load(&c.config, &c.overrides())?;
    check_dim(2, [&cfg.s1, &cfg.s2])?;
    let params = CompetitionParams::new(cfg.p, cfg.q, cfg.s1, cfg.s2)?;
    let domain = BoxDomain::new(2, cfg.half_width)?;
    // same field as replica 0 of `compete`
    let field = HashedField::new(derive_seed(cfg.seed, &[0, 0]), domain);
    let run = run_competition(&params, &field, cfg.horizon, false)?;
    let grid = PaletteGrid::snapshot(&run.state, cfg.width, cfg.height)?;
    eprintln!(
        "T = {}: {} yellow, {} blue, {} green sites",
        cfg.horizon,
        run.state.count_yellow(),
        run.state.count_blue(),
        run.state.count_green()
    );
    write_image(&c.out, "render.ppm", &grid)
}
