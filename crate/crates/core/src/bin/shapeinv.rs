//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for invalid input or configuration,
//! 3 for failures during a run.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use shapeinv::certify::certificate_suite;
use shapeinv::config::Settings;
use shapeinv::io::{read_dataset, write_certificates, write_chain, write_dataset};
use shapeinv::mcmc::{run_chain, McmcConfig};
use shapeinv::model::{simulate, SimConfig};
use shapeinv::rng::substream;
use shapeinv::study::{emit_report, read_study_results, run_contraction_study, ReportFormat};
use shapeinv::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "shapeinv", version, about = "Randomly shifted curves: simulation, posterior sampling and contraction studies")]
struct Cli {
    /// Master seed (overrides the configuration file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a dataset from the configured truth.
    Simulate {
        /// Number of observations (overrides `n`).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Run the posterior sampler on a dataset and dump the chain.
    Fit {
        #[arg(long)]
        data: PathBuf,
    },
    /// Run the contraction study and write its report.
    Contract {
        /// Skip the SVG plot.
        #[arg(long)]
        no_svg: bool,
    },
    /// Run the certificate checks against the configured truth.
    Certify {
        /// Truncation level of the truth.
        #[arg(long, default_value_t = 3)]
        l_n: usize,
    },
    /// Re-emit the report of a finished study.
    Report {
        /// Directory holding `distances.csv`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        no_svg: bool,
    },
}

fn out_path(cli: &Cli, default: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn formats(no_svg: bool) -> Vec<ReportFormat> {
    if no_svg {
        vec![ReportFormat::Csv]
    } else {
        vec![ReportFormat::Csv, ReportFormat::Svg]
    }
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn run(cli: &Cli) -> Result<()> {
    let mut settings = match &cli.config {
        Some(p) => Settings::from_file(p)?,
        None => Settings::default(),
    };
    if let Some(s) = cli.seed {
        settings.study.seed = s;
    }
    let st = &settings.study;
    match &cli.command {
        Command::Simulate { n } => {
            let n = n.unwrap_or(settings.n);
            let cfg = SimConfig::new(st.f0.clone(), st.g0.clone(), n, st.l_obs);
            let data = simulate(&cfg, st.seed)?;
            let path = out_path(cli, "data.csv");
            write_dataset(&path, &data)?;
            println!("wrote {} ({} observations, cutoff {})", path.display(), data.n(), data.cutoff());
        }
        Command::Fit { data } => {
            let data = read_dataset(data)?;
            let mcmc = McmcConfig {
                seed: st.seed,
                ..st.mcmc.clone()
            };
            let n_calib = (data.n() as f64).max(2.0);
            let out = run_chain(&data, &st.prior, n_calib, &mcmc)?;
            let dir = out_path(cli, "chain");
            write_chain(&dir, &out)?;
            println!(
                "wrote {} samples to {} (birth/death acceptance {:.3})",
                out.samples.len(),
                dir.display(),
                out.acceptance_rate()
            );
        }
        Command::Contract { no_svg } => {
            let dir = out_path(cli, "study");
            let mut cfg = st.clone();
            cfg.out_dir = Some(dir.clone());
            let results = run_contraction_study(&cfg)?;
            print_files(&emit_report(&results, &dir, &formats(*no_svg))?);
            if let Ok(slope) = results.fitted_slope() {
                println!("fitted slope {slope:.4}, reference exponent {:.4}", results.reference_exponent());
            }
        }
        Command::Certify { l_n } => {
            let rows = certificate_suite(
                &st.f0,
                &st.g0,
                *l_n,
                settings.cert_samples,
                settings.cert_cases,
                &mut substream(st.seed, 0),
            )?;
            let path = out_path(cli, "certificates.csv");
            write_certificates(&path, &rows)?;
            let failed = rows.iter().filter(|r| !r.pass).count();
            println!("wrote {} ({} checks, {} failed)", path.display(), rows.len(), failed);
            for r in rows.iter().filter(|r| !r.pass) {
                println!("  FAIL {}: {} > {}", r.check, r.quantity, r.bound);
            }
        }
        Command::Report { input, no_svg } => {
            let results = read_study_results(input)?;
            let dir = cli.out.clone().unwrap_or_else(|| input.clone());
            print_files(&emit_report(&results, &dir, &formats(*no_svg))?);
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_validation() {
        2
    } else {
        3
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
