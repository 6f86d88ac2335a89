use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use elrot_core::checkpoint::read_checkpoint;
use elrot_core::config::{parse_config, RunConfig};
use elrot_core::{identities, lagrangian, run, Error, Result, Simulation};

#[derive(Parser)]
#[command(name = "elrot", version, about = "Rotating-flow transport simulator with certified Lagrangian diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration, `key=value` per line.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Checkpoint to resume from or to inspect.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated rotation rates.
    #[arg(long, value_delimiter = ',')]
    omega_list: Vec<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Time-integrate one configuration.
    Run(Common),
    /// One run per rotation rate, with the two-dimensionalization fit.
    Sweep(Common),
    /// Identity residuals of a checkpointed state.
    Identities(Common),
    /// Steady planar eigenflow regression.
    TaylorProudman(Common),
    /// Vertical-pair and slab separation report for a checkpoint.
    Tracers(Common),
}

fn load(c: &Common) -> Result<RunConfig> {
    let path = c
        .config
        .as_ref()
        .ok_or_else(|| Error::Config {
            key: "--config".into(),
            message: "required for this command".into(),
        })?;
    let mut cfg = parse_config(&std::fs::read_to_string(path)?)?;
    if let Some(out) = &c.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn need_checkpoint(c: &Common) -> Result<&PathBuf> {
    c.resume.as_ref().ok_or_else(|| Error::Config {
        key: "--resume".into(),
        message: "checkpoint path required".into(),
    })
}

fn execute(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Run(c) => {
            let cfg = load(&c)?;
            let out = run::run(cfg, c.resume.as_deref())?;
            if let Some(s) = &out.summary {
                println!("{s}");
            }
            if let Some(e) = &out.error {
                eprintln!("error: {e}");
                eprintln!("last checkpoint retained at {}", out.checkpoint_path.display());
            }
            println!("diagnostics written to {}", out.csv_path.display());
            Ok(out.exit_code() as u8)
        }
        Command::Sweep(c) => {
            let cfg = load(&c)?;
            if c.omega_list.is_empty() {
                return Err(Error::Config {
                    key: "--omega-list".into(),
                    message: "at least one rotation rate required".into(),
                });
            }
            let report = run::sweep(&cfg, &c.omega_list);
            std::fs::create_dir_all(&cfg.out_dir)?;
            std::fs::write(cfg.out_dir.join("sweep.txt"), format!("{report}\n"))?;
            println!("{report}");
            Ok(0)
        }
        Command::Identities(c) => {
            let ck = read_checkpoint(need_checkpoint(&c)?)?;
            let det_min = match &c.config {
                Some(_) => load(&c)?.det_min,
                None => lagrangian::DEFAULT_DET_MIN,
            };
            let (sp, flow, el) = run::state_from_checkpoint(&ck)?;
            let r = identities::residuals(&sp, &el, &flow, det_min)?;
            println!("t = {:.6}  (window start {:.6})", flow.t, el.t0);
            println!("weber_rel          {:.6e}", r.weber_rel);
            println!("cauchy_rel         {:.6e}", r.cauchy_rel);
            println!("factorization_abs  {:.6e}", r.factorization_abs);
            println!("d2_rel             {:.6e}", r.d2_rel);
            Ok(0)
        }
        Command::TaylorProudman(c) => {
            let mut cfg = match &c.config {
                Some(_) => load(&c)?,
                None => parse_config("n=16\nomega=1\nnu=0\nt_end=1\nic=eigen2d\ndt=auto\ndt_max=0.01\nidentities=false")?,
            };
            if let Some(seed) = c.seed {
                cfg.seed = seed;
            }
            let omegas = if c.omega_list.is_empty() { vec![1.0, 10.0, 100.0] } else { c.omega_list.clone() };
            let mut worst: f64 = 0.0;
            for (om, r) in run::taylor_proudman(&cfg, &omegas)? {
                println!(
                    "omega {om:>8.2}  max |d_a3 lambda_3| {:.3e}  max pair gap change {:.3e}",
                    r.dz_lambda3, r.gap_change
                );
                worst = worst.max(r.dz_lambda3).max(r.gap_change);
            }
            Ok(if worst <= 1e-8 { 0 } else { 1 })
        }
        Command::Tracers(c) => {
            let cfg = load(&c)?;
            let ck = read_checkpoint(need_checkpoint(&c)?)?;
            let sim = Simulation::resume(cfg, &ck)?;
            let r = sim.tracer_report()?;
            println!("{r}");
            let ok = r.pairs.all_within() && r.separation.map_or(true, |s| s.holds());
            Ok(if ok { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
