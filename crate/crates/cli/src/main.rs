use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mirror_steady::artifacts::{self, Summary};
use mirror_steady::characteristics::{integrate, invariant_drift, sample_confined, Drift};
use mirror_steady::config::RunConfig;
use mirror_steady::density::GEvaluator;
use mirror_steady::potential::PotentialSolution;
use mirror_steady::verification::{run_all, Check};
use mirror_steady::{Error, StateKind, SteadyState};

/// Confined steady states of a two-species plasma in a mirror trap.
#[derive(Parser)]
#[command(name = "mirror-steady", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the self-consistent potential and write potential, density and summary files.
    Solve {
        config: PathBuf,
        /// Overrides the output directory of the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Re-check written artifacts and write report.json; exits 1 if any check fails.
    Verify {
        config: PathBuf,
        #[arg(long)]
        artifacts: PathBuf,
        /// Check to leave out (repeatable), e.g. `--skip charge_positivity`.
        #[arg(long = "skip")]
        skip: Vec<String>,
    },
    /// Build a vanishing-potential state and write its densities and support radii.
    Trivial {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Integrate characteristics and write trajectories.csv with a drift summary.
    Characteristics {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// An error with the process exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonConvergence { .. } => 2,
            Error::Consistency(_) => 3,
            Error::Integration { .. } => 2,
            _ => 1,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(1, e.to_string())
    }
}

type CmdResult = Result<u8, Failure>;

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("MIRROR_STEADY_THREADS") else {
        return Ok(());
    };
    let n: usize = value.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::new(
            1,
            format!("MIRROR_STEADY_THREADS must be a positive integer, got `{value}`"),
        )
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::new(1, e.to_string()))
}

fn output_dir(cfg: &RunConfig, over: Option<PathBuf>) -> Result<PathBuf, Failure> {
    let dir = over.unwrap_or_else(|| cfg.output.clone());
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn print_summary(s: &Summary) {
    println!("kind             {}", s.kind.name());
    if let (Some(c0), Some(e0), Some(r)) = (s.c0, s.e0, s.radius) {
        println!("c0               {c0:.10e}");
        println!("E0               {e0:.10e}");
        println!("R                {r:.10e}");
        println!("iterations       {}", s.iterations);
    }
    if let Some(r) = s.support_position {
        println!("support |x| <=   {r:.10e}");
    }
    if let Some(r) = s.support_velocity {
        println!("support |v| <=   {r:.10e}");
    }
    println!("charge minus     {:.10e}", s.charge_minus);
    println!("charge plus      {:.10e}", s.charge_plus);
    if !s.charge_finite {
        println!("charge           non-integrable (values truncated to the sampling grid)");
    }
    if s.constant_density {
        println!("density          spatially constant");
    }
}

fn solve(config: &Path, output: Option<PathBuf>) -> CmdResult {
    let cfg = RunConfig::load(config)?;
    if cfg.kind != StateKind::SelfConsistent {
        return Err(Failure::new(
            1,
            format!(
                "solve needs kind = self_consistent, found {}; use `trivial`",
                cfg.kind.name()
            ),
        ));
    }
    let state = cfg.build_state()?;
    let dir = output_dir(&cfg, output)?;
    artifacts::write_potential_csv(&dir.join(artifacts::POTENTIAL_CSV), &state)?;
    artifacts::write_density_csv(&dir.join(artifacts::DENSITY_CSV), &state)?;
    let summary = Summary::of(&state);
    artifacts::write_summary_json(&dir.join(artifacts::SUMMARY_JSON), &summary)?;
    print_summary(&summary);
    println!("wrote {}", dir.display());
    Ok(0)
}

fn trivial(config: &Path, output: Option<PathBuf>) -> CmdResult {
    let cfg = RunConfig::load(config)?;
    if cfg.kind == StateKind::SelfConsistent {
        return Err(Failure::new(1, "trivial needs a vanishing-potential kind; use `solve`"));
    }
    let state = cfg.build_state()?;
    let dir = output_dir(&cfg, output)?;
    artifacts::write_density_csv(&dir.join(artifacts::DENSITY_CSV), &state)?;
    let summary = Summary::of(&state);
    artifacts::write_summary_json(&dir.join(artifacts::SUMMARY_JSON), &summary)?;
    print_summary(&summary);
    println!("wrote {}", dir.display());
    Ok(0)
}

fn verify(config: &Path, dir: &Path, skip: &[String]) -> CmdResult {
    let cfg = RunConfig::load(config)?;
    let mut vcfg = cfg.verification.clone();
    for name in skip {
        let check = Check::parse(name).ok_or_else(|| Failure::new(1, format!("unknown check `{name}`")))?;
        vcfg.disabled.insert(check);
    }
    let needed: &[&str] = if cfg.kind == StateKind::SelfConsistent {
        &[artifacts::POTENTIAL_CSV, artifacts::SUMMARY_JSON]
    } else {
        &[artifacts::DENSITY_CSV, artifacts::SUMMARY_JSON]
    };
    let missing: Vec<&str> = needed.iter().copied().filter(|f| !dir.join(f).is_file()).collect();
    if !missing.is_empty() {
        return Err(Failure::new(
            4,
            format!("missing artifacts in {}: {}", dir.display(), missing.join(", ")),
        ));
    }

    let state = match (&cfg.profiles, cfg.confinement()) {
        (Some(pair), Some(consts)) => {
            let samples = artifacts::read_potential_csv(&dir.join(artifacts::POTENTIAL_CSV))?;
            let evaluator = GEvaluator::new(cfg.params, pair.clone(), cfg.quadrature)?;
            let solution = PotentialSolution::from_samples(
                samples.grid,
                samples.phi,
                samples.dphi,
                samples.d2phi,
                &evaluator,
                cfg.quadrature.radial_rule,
            )?;
            SteadyState::from_solution(evaluator, consts, solution)?
        }
        _ => cfg.build_state()?,
    };
    let report = run_all(&state, &vcfg)?;
    artifacts::write_report_json(&dir.join(artifacts::REPORT_JSON), &report)?;
    println!("{report}");
    Ok(if report.pass() { 0 } else { 1 })
}

fn characteristics(config: &Path, output: Option<PathBuf>) -> CmdResult {
    let cfg = RunConfig::load(config)?;
    let state = cfg.build_state()?;
    let cc = &cfg.characteristics;
    let starts = if cc.starts.is_empty() {
        sample_confined(&state, cc.count, cfg.seed)?
    } else {
        cc.starts.clone()
    };
    let n_steps = (cc.horizon / cc.step).round() as usize;
    let mut trajectories = Vec::with_capacity(starts.len());
    let mut worst = Drift::default();
    println!("{:>4} {:>7} {:>12} {:>12} {:>12}", "id", "species", "dE", "dP", "df");
    for (id, ic) in starts.iter().enumerate() {
        let traj = integrate(&state, ic.species, ic.x, ic.v, cc.step, n_steps)?;
        let d = invariant_drift(&traj);
        println!(
            "{id:>4} {:>7} {:>12.4e} {:>12.4e} {:>12.4e}",
            ic.species.name(),
            d.energy,
            d.momentum,
            d.distribution
        );
        worst = worst.max(d);
        trajectories.push(traj);
    }
    println!(
        "max  {:>7} {:>12.4e} {:>12.4e} {:>12.4e}",
        "", worst.energy, worst.momentum, worst.distribution
    );
    let dir = output_dir(&cfg, output)?;
    artifacts::write_trajectories_csv(&dir.join(artifacts::TRAJECTORIES_CSV), &trajectories, cc.stride)?;
    println!("wrote {}", dir.display());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Solve { config, output } => solve(&config, output),
        Command::Verify {
            config,
            artifacts,
            skip,
        } => verify(&config, &artifacts, &skip),
        Command::Trivial { config, output } => trivial(&config, output),
        Command::Characteristics { config, output } => characteristics(&config, output),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
