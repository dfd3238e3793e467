use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use levy_cli::config::{Config, Overrides, Scenario};
use levy_cli::{criteria, scenarios};

#[derive(Parser)]
#[command(name = "levy", version, about = "Lévy Laplacian experiments on loop spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output root; overrides `output.dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Multiplies every tolerance.
    #[arg(long, global = true)]
    tolerance_scale: Option<f64>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Cesàro against analytic Lévy Laplacian on (functional, curve) pairs.
    Equiv,
    /// Heat-flow functionals: residuals, decay rates and limits.
    Heat,
    /// Eigenfunctional identities by both routes.
    Eigen,
    /// Latitude holonomy against Gauss–Bonnet.
    Holonomy,
    /// Yang–Mills against Hodge flow on loops.
    #[command(name = "ym-u1")]
    YmU1,
    /// Every scenario in the config.
    Run,
    /// The built-in acceptance suite; exit code 0 iff all criteria pass.
    Selftest,
}

impl Command {
    fn selects(self, s: &Scenario) -> bool {
        match self {
            Command::Equiv => matches!(s, Scenario::Equiv { .. }),
            Command::Heat => matches!(s, Scenario::Heat { .. }),
            Command::Eigen => matches!(s, Scenario::Eigen { .. }),
            Command::Holonomy => matches!(s, Scenario::Holonomy { .. }),
            Command::YmU1 => matches!(s, Scenario::YmU1 { .. }),
            Command::Run => true,
            Command::Selftest => false,
        }
    }
}

fn selftest(jobs: usize) -> ExitCode {
    if jobs > 0 {
        // only fails if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let outcomes = criteria::run_all(|o| {
        println!("{}", o.line());
        for n in o.notes.iter().filter(|n| n.starts_with("failed") || n.starts_with("aborted")) {
            println!("    {n}");
        }
    });
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("selftest: {} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run(command: Command, common: &Common) -> Result<bool, String> {
    let path = common
        .config
        .as_ref()
        .ok_or("--config is required for this subcommand")?;
    let cfg = Config::load(path)
        .and_then(|c| {
            c.resolve(Overrides {
                seed: common.seed,
                tolerance_scale: common.tolerance_scale,
            })
        })
        .map_err(|e| format!("invalid config {}: {e}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let ws = cfg
        .build(base)
        .map_err(|e| format!("invalid config {}: {e}", path.display()))?;
    if !cfg.scenarios.iter().any(|s| command.selects(s)) {
        return Err(format!("{} has no scenarios for this subcommand", path.display()));
    }
    let out = common.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let outcomes = scenarios::run_all(&cfg, &ws, &out, common.jobs, |s| command.selects(s))
        .map_err(|e| format!("writing results under {}: {e}", out.display()))?;
    print!("{}", scenarios::render_table(&outcomes));
    println!("config hash {}", cfg.hash());
    Ok(outcomes.iter().all(|o| o.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.command == Command::Selftest {
        return selftest(cli.common.jobs);
    }
    match run(cli.command, &cli.common) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
