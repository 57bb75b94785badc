use clap::{Parser, Subcommand};
use starslam_sim::report::write_report;
use starslam_sim::{run, RunLog, ScenarioConfig, SimError};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "starslam", version, about = "Star-convex object SLAM on simulated 2D LiDAR scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario, run the filter and write the log and report.
    Run {
        config: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the config's `output_dir`, then `out/<name>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild CSV tables and SVG snapshots from a run log.
    Report {
        runlog: PathBuf,
        /// Output directory; defaults to the log's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario config without running it.
    Validate { config: PathBuf },
}

fn print_summary(s: &starslam_sim::report::SummaryRow) {
    println!("steps                 {}", s.steps);
    println!("rmse x [m]            {:.4}", s.rmse_x);
    println!("rmse y [m]            {:.4}", s.rmse_y);
    println!("rmse heading [deg]    {:.4}", s.rmse_heading_deg);
    println!("final IoU             {:.4}", s.final_iou);
    println!("association accuracy  {:.4}", s.association_accuracy);
}

fn execute(cli: Cli) -> Result<(), SimError> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| Path::new("out").join(&cfg.name));
            let log = run(&cfg)?;
            std::fs::create_dir_all(&dir)?;
            log.write_ndjson(std::io::BufWriter::new(std::fs::File::create(dir.join("runlog.ndjson"))?))?;
            let summary = write_report(&log, &dir)?;
            println!("wrote {}", dir.display());
            print_summary(&summary);
        }
        Command::Report { runlog, out } => {
            let log = RunLog::load(&runlog)?;
            let dir = out.unwrap_or_else(|| runlog.parent().map(Path::to_path_buf).unwrap_or_default());
            let summary = write_report(&log, &dir)?;
            println!("wrote {}", dir.display());
            print_summary(&summary);
        }
        Command::Validate { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            println!(
                "{}: ok ({} objects, {} steps of {} s, {} basis angles)",
                cfg.name,
                cfg.world.len(),
                cfg.steps(),
                cfg.dt,
                cfg.basis_count
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
