use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rss_survival::bootstrap::{multiplier_bootstrap, MultiplierLaw};
use rss_survival::harness::{
    kernel_table, ranked_model, run_grid, write_kernel_table, CalibrationSettings, Config,
    GridOptions,
};
use rss_survival::models::censoring_for_fraction;
use rss_survival::{
    draw_balanced_rss, rss_kaplan_meier, AftModel, Error, Jobs, RankedSetSample, RngStream,
    ShrinkageRule, SuperpopulationModel, WeibullModel,
};

#[derive(Parser)]
#[command(
    name = "rss-survival",
    version,
    about = "Survival estimation under ranked set sampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the relative-efficiency grid described by a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV; defaults to `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Full-scale replicate counts (10000 / 4000).
        #[arg(long)]
        full: bool,
    },
    /// Rank-wise and averaged KM/NA curves for a CSV of observations.
    Estimate {
        /// CSV with columns cycle,rank,time,event.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Minimum rank risk set below which the variance is blended with the pooled one.
        #[arg(long, default_value_t = 5)]
        shrink_threshold: usize,
        #[arg(long, default_value_t = 0.5)]
        shrink_weight: f64,
    },
    /// Multiplier bootstrap of the averaged curve.
    Bootstrap {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Evaluation times, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, value_enum, default_value_t = Law::Exp)]
        law: Law,
        /// Shape of the gamma multiplier law.
        #[arg(long, default_value_t = 4.0)]
        gamma_shape: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Analytic variance and efficiency table for the Weibull design.
    Kernels {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Draw one balanced RSS sample and write it as CSV.
    Sample {
        #[arg(long, value_enum, default_value_t = ModelArg::Weibull)]
        model: ModelArg,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        /// Target proxy correlation.
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, default_value_t = 0.0)]
        p_cens: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Law {
    Exp,
    Gamma,
    One,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    /// Log-normal AFT with mu=0, beta=1.5, sigma_eps=0.4.
    Aft,
    /// Unit exponential.
    Weibull,
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_sample(path: &Path) -> Result<RankedSetSample, Error> {
    let file = File::open(path).map_err(io_err(path))?;
    RankedSetSample::read_csv(file, path)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            seed,
            jobs,
            full,
        } => {
            let options = GridOptions {
                seed,
                jobs: Jobs(jobs),
                full,
            };
            let written = run_grid(&config, out.as_deref(), options)?;
            eprintln!("wrote {}", written.display());
        }
        Command::Estimate {
            input,
            out,
            shrink_threshold,
            shrink_weight,
        } => {
            let sample = read_sample(&input)?;
            let rule = ShrinkageRule::new(shrink_threshold, shrink_weight)?;
            let estimate = rss_kaplan_meier(&sample)?;
            let mut w = create(&out)?;
            estimate
                .write_csv(&sample, rule, &mut w)
                .map_err(io_err(&out))?;
            w.flush().map_err(io_err(&out))?;
        }
        Command::Bootstrap {
            input,
            out,
            times,
            reps,
            law,
            gamma_shape,
            seed,
            jobs,
        } => {
            let sample = read_sample(&input)?;
            let law = match law {
                Law::Exp => MultiplierLaw::UnitExponential,
                Law::Gamma => MultiplierLaw::Gamma { shape: gamma_shape },
                Law::One => MultiplierLaw::DegenerateOne,
            };
            let result = multiplier_bootstrap(
                &sample,
                &times,
                reps,
                law,
                RngStream::new(seed, 0),
                Jobs(jobs),
            )?;
            let mut w = create(&out)?;
            result.write_csv(&mut w).map_err(io_err(&out))?;
            w.flush().map_err(io_err(&out))?;
        }
        Command::Kernels {
            config,
            out,
            seed,
            jobs,
        } => {
            let mut cfg = Config::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let rows = kernel_table(&cfg, Jobs(jobs))?;
            let mut w = create(&out)?;
            write_kernel_table(&rows, &mut w).map_err(|source| Error::Csv {
                path: out.clone(),
                source,
            })?;
        }
        Command::Sample {
            model,
            k,
            m,
            rho,
            p_cens,
            seed,
            out,
        } => {
            let model = match model {
                ModelArg::Aft => SuperpopulationModel::Aft(AftModel::new(0.0, 1.5, 0.4)),
                ModelArg::Weibull => SuperpopulationModel::Weibull(WeibullModel::new(1.0, 1.0)),
            };
            let (ranked, _, clamped) = ranked_model(&model, rho, &CalibrationSettings::default())?;
            if clamped {
                eprintln!(
                    "rho {rho} is above the attainable correlation; using the noiseless proxy"
                );
            }
            let censoring = censoring_for_fraction(&model, p_cens)?;
            let sample = draw_balanced_rss(&ranked, k, m, &censoring, RngStream::new(seed, 0))?;
            let mut w = create(&out)?;
            sample.write_csv(&mut w).map_err(io_err(&out))?;
            w.flush().map_err(io_err(&out))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
