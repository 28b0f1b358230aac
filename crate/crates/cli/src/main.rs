//! `lwf`: command-line front end. Every run writes its outputs and a `manifest.json` into
//! `--out`; `lwf replay <manifest>` re-runs it and compares digests.
//!
//! Exit codes: 0 success, 1 I/O or internal error, 2 usage, 3 configuration, 4 invalid
//! parameter or precondition, 5 admissibility or integrability failure, 6 numerical failure
//! during simulation, 7 a command's own check failed (or a replay did not reproduce).

mod args;
mod commands;
mod manifest;

use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::Parser;
use lwf_core::config::Config;
use lwf_core::Error;

use args::{Cli, Command, Common};
use commands::{run, Ctx, Outcome};
use manifest::{read_manifest, write_manifest, write_outputs, RunManifest};

const CHECK_FAILED: u8 = 7;

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Config(_)) => 3,
        Some(
            Error::InvalidMeasure(_)
            | Error::InvalidGamma(_)
            | Error::InvalidParameter(_)
            | Error::Precondition(_)
            | Error::WrongRegime { .. }
            | Error::DomainError { .. },
        ) => 4,
        Some(Error::ThetaViolation { .. } | Error::NonIntegrable { .. }) => 5,
        Some(Error::InfiniteRate { .. } | Error::HorizonExceeded { .. } | Error::Consistency(_)) => 6,
        None => 1,
    }
}

/// Loads the config and folds the common flags into its `[run]` section.
fn effective_config(common: &Common) -> anyhow::Result<Config> {
    let path = common.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = Config::from_file(path)?;
    if let Some(s) = common.seed {
        cfg.run.seed = s;
    }
    cfg.run.reps = common.reps.or(cfg.run.reps);
    cfg.run.horizon = common.horizon.or(cfg.run.horizon);
    cfg.run.workers = common.workers.or(cfg.run.workers);
    Ok(cfg)
}

fn execute(cfg: Config, command: &Command) -> anyhow::Result<(Outcome, RunManifest)> {
    if cfg.run.reps == Some(0) {
        return Err(Error::InvalidParameter("reps must be positive".into()).into());
    }
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let workers = cfg.run.workers;
    let ctx = Ctx { config: cfg };
    let outcome = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building worker pool")?
            .install(|| run(&ctx, command))?,
        None => run(&ctx, command)?,
    };
    let manifest = RunManifest {
        version: lwf_core::VERSION.to_string(),
        command: command.clone(),
        config: ctx.config.to_toml_string(),
        seed: ctx.config.run.seed,
        workers,
        started_unix,
        wall_clock_secs: started.elapsed().as_secs_f64(),
        outputs: Vec::new(),
    };
    Ok((outcome, manifest))
}

fn main_inner(cli: Cli) -> anyhow::Result<bool> {
    let out = cli.common.out.clone();
    if let Command::Replay(r) = &cli.command {
        let old = read_manifest(&r.manifest)?;
        let mut cfg = Config::from_toml_str(&old.config)?;
        // outputs do not depend on the pool size, so a replay may use a different one
        cfg.run.workers = cli.common.workers.or(cfg.run.workers);
        let (outcome, mut manifest) = execute(cfg, &old.command)?;
        manifest.outputs = write_outputs(&out, &outcome.files)?;
        write_manifest(&out, &manifest)?;
        let mut same = old.outputs.len() == manifest.outputs.len();
        for (a, b) in old.outputs.iter().zip(&manifest.outputs) {
            if a.path != b.path || a.sha256 != b.sha256 {
                eprintln!("mismatch: {} ({} vs {})", a.path, a.sha256, b.sha256);
                same = false;
            }
        }
        println!("{}", if same { "replay reproduced all outputs" } else { "replay differs from the manifest" });
        return Ok(same);
    }
    let cfg = effective_config(&cli.common)?;
    let (outcome, mut manifest) = execute(cfg, &cli.command)?;
    manifest.outputs = write_outputs(&out, &outcome.files)?;
    write_manifest(&out, &manifest)?;
    println!("{}", outcome.report.trim_end());
    for f in &manifest.outputs {
        println!("wrote {}", out.join(&f.path).display());
    }
    if !outcome.passed {
        eprintln!("check failed");
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(CHECK_FAILED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
