use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use evintercept::harness::{self, ExperimentConfig, TrainOptions};
use evintercept::Result;

#[derive(Parser)]
#[command(name = "evintercept", version, about = "Event-driven trajectory interception simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON); built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed for every random stream.
    #[arg(long)]
    seed: u64,
    /// Output directory, overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dataset directory, overrides `dataset_dir`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Worker threads for per-trajectory work, overrides `threads`.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        cfg.seed = self.seed;
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(data) = &self.data {
            cfg.dataset_dir = data.clone();
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the train/val/test trajectory splits.
    GenData(Common),
    /// Train one predictor per sampling strategy.
    Train {
        #[command(flatten)]
        common: Common,
        /// Continue from existing checkpoints.
        #[arg(long)]
        resume: bool,
        /// Continue from existing checkpoints at a tenth of the learning rate.
        #[arg(long, conflicts_with = "resume")]
        fine_tune: bool,
    },
    /// Prediction error against trajectory percentage.
    EvalConvergence(Common),
    /// Convergence time against decision deadline, with non-convergence counts.
    EvalTiming(Common),
    /// Robot interception trials.
    Simulate(Common),
    /// Prediction error between convergence and the decision deadline.
    ErrorWindow(Common),
    /// Fit the pixel-to-height calibration.
    Calibrate(Common),
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(c) => {
            let cfg = c.load()?;
            let m = harness::cmd_gen_data(&cfg)?;
            println!(
                "wrote {} train, {} val, {} test trajectories to {}",
                m.counts.train,
                m.counts.val,
                m.counts.test,
                cfg.dataset_dir.display()
            );
        }
        Command::Train {
            common,
            resume,
            fine_tune,
        } => {
            let cfg = common.load()?;
            for s in harness::cmd_train(&cfg, TrainOptions { resume, fine_tune })? {
                println!(
                    "{}: best epoch {}, val loss {:.6}, gamma* {:.4} px/s -> {}",
                    s.strategy,
                    s.best_epoch,
                    s.best_val_loss,
                    s.gamma.gamma_star,
                    s.checkpoint.display()
                );
            }
        }
        Command::EvalConvergence(c) => {
            let cfg = c.load()?;
            let rows = harness::cmd_eval_convergence(&cfg)?;
            println!("wrote {} rows to {}", rows.len(), cfg.output_dir.join(harness::CONVERGENCE_CSV).display());
        }
        Command::EvalTiming(c) => {
            let cfg = c.load()?;
            let t = harness::cmd_eval_timing(&cfg)?;
            for s in &t.summary {
                println!(
                    "{}: {} of {} not converged in time ({} never, {} late)",
                    s.strategy, s.non_converged, s.trajectories, s.never_converged, s.late
                );
            }
        }
        Command::Simulate(c) => {
            let cfg = c.load()?;
            let (_, hits) = harness::cmd_simulate(&cfg)?;
            for h in &hits {
                println!("{} {}: {}/{} hits", h.strategy, h.policy.name(), h.hits, h.trials);
            }
        }
        Command::ErrorWindow(c) => {
            let cfg = c.load()?;
            let rows = harness::cmd_error_window(&cfg)?;
            println!("wrote {} rows to {}", rows.len(), cfg.output_dir.join(harness::ERROR_WINDOW_CSV).display());
        }
        Command::Calibrate(c) => {
            let cfg = c.load()?;
            let cal = harness::cmd_calibrate(&cfg)?;
            println!(
                "height = {:.6e} p^2 + {:.6e} p + {:.6}  (rms {:.4} m)",
                cal.a, cal.b, cal.c, cal.residual_rms
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
