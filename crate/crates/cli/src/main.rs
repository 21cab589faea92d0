use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use varbound_cli::{
    cmd_compare_samplers, cmd_diagnose, cmd_fit, cmd_plot, cmd_selftest, CliError, CliResult,
    Settings, DEFAULT_PLOT_COLUMNS,
};

/// Reparameterization-gradient VI with certified gradient-variance bounds.
#[derive(Parser)]
#[command(name = "varbound", version)]
struct Cli {
    /// Worker threads for Monte Carlo loops (results do not depend on it).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a Gaussian (or other location-scale) approximation by proximal SGD.
    Fit {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[command(flatten)]
        opt: OptimizerArgs,
        /// Trace output path (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical ESN and bounds at every snapshot of a trace.
    Diagnose {
        #[command(flatten)]
        diag: DiagnoseArgs,
    },
    /// Sampler comparison at the final snapshot of a trace.
    CompareSamplers {
        #[command(flatten)]
        diag: DiagnoseArgs,
    },
    /// Run the invariant battery.
    Selftest {
        #[arg(long)]
        seed: Option<u64>,
        /// Monte Carlo draws per statistical check.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Log-scale SVG line chart of CSV columns.
    Plot {
        /// Input CSV (diagnostics output or any table with a header).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Comma-separated columns to draw.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_PLOT_COLUMNS.map(String::from))]
        columns: Vec<String>,
        #[arg(long, default_value = "iteration")]
        x: String,
        /// Only rows with this sampler label.
        #[arg(long)]
        sampler: Option<String>,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// key=value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset path.
    #[arg(long)]
    data: Option<String>,
    /// csv | libsvm
    #[arg(long)]
    format: Option<String>,
    /// linear | logistic
    #[arg(long)]
    model: Option<String>,
    /// Prior variance.
    #[arg(long)]
    sigma2: Option<String>,
    /// Observation noise variance (linear model).
    #[arg(long)]
    rho2: Option<String>,
    /// Append a constant feature.
    #[arg(long)]
    intercept: bool,
    /// Center and scale features.
    #[arg(long)]
    standardize: bool,
    /// Feature count for libsvm input.
    #[arg(long)]
    features: Option<String>,
    /// gaussian | uniform | student-t:<dof>
    #[arg(long)]
    base: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Args)]
struct OptimizerArgs {
    #[arg(long)]
    iterations: Option<String>,
    #[arg(long)]
    grad_samples: Option<String>,
    /// Defaults to 1 / scalar smoothness.
    #[arg(long)]
    step_size: Option<String>,
    /// batch | uniform | proportional | opt_scalar | opt_matrix
    #[arg(long)]
    sampler: Option<String>,
    #[arg(long)]
    snapshot_every: Option<String>,
    #[arg(long)]
    elbo_samples: Option<String>,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Trace written by `fit`.
    #[arg(long)]
    trace: PathBuf,
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Comma-separated subset of batch,uniform,proportional,opt_scalar,opt_matrix.
    #[arg(long)]
    samplers: Option<String>,
    /// Monte Carlo draws per (snapshot, sampler).
    #[arg(long)]
    mc_samples: Option<String>,
    /// CSV output path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExperimentArgs {
    fn settings(&self) -> CliResult<Settings> {
        let mut s = match &self.config {
            Some(p) => Settings::from_file(p)?,
            None => Settings::new(),
        };
        let pairs = [
            ("data", &self.data),
            ("format", &self.format),
            ("model", &self.model),
            ("sigma2", &self.sigma2),
            ("rho2", &self.rho2),
            ("features", &self.features),
            ("base", &self.base),
            ("seed", &self.seed),
        ];
        set_all(&mut s, &pairs);
        if self.intercept {
            s.set("intercept", "true");
        }
        if self.standardize {
            s.set("standardize", "true");
        }
        Ok(s)
    }
}

fn set_all(s: &mut Settings, pairs: &[(&str, &Option<String>)]) {
    for (k, v) in pairs {
        if let Some(v) = v {
            s.set(k, v.as_str());
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Domain(e.into())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn diag_settings(diag: &DiagnoseArgs) -> CliResult<Settings> {
    let mut s = diag.exp.settings()?;
    set_all(&mut s, &[("samplers", &diag.samplers), ("mc_samples", &diag.mc_samples)]);
    Ok(s)
}

fn run(cli: Cli) -> CliResult<bool> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Fit { exp, opt, out } => {
            let mut s = exp.settings()?;
            set_all(
                &mut s,
                &[
                    ("iterations", &opt.iterations),
                    ("grad_samples", &opt.grad_samples),
                    ("step_size", &opt.step_size),
                    ("sampler", &opt.sampler),
                    ("snapshot_every", &opt.snapshot_every),
                    ("elbo_samples", &opt.elbo_samples),
                ],
            );
            emit(out.as_deref(), &cmd_fit(&s)?)?;
        }
        Command::Diagnose { diag } => {
            let text = cmd_diagnose(&diag.trace, &diag_settings(&diag)?)?;
            emit(diag.out.as_deref(), &text)?;
        }
        Command::CompareSamplers { diag } => {
            let text = cmd_compare_samplers(&diag.trace, &diag_settings(&diag)?)?;
            emit(diag.out.as_deref(), &text)?;
        }
        Command::Selftest { seed, samples } => {
            let mut s = Settings::new();
            set_all(
                &mut s,
                &[("seed", &seed.map(|v| v.to_string())), ("samples", &samples.map(|v| v.to_string()))],
            );
            let (report, ok) = cmd_selftest(&s)?;
            print!("{report}");
            return Ok(ok);
        }
        Command::Plot {
            input,
            output,
            columns,
            x,
            sampler,
        } => {
            let text = std::fs::read_to_string(&input).map_err(|e| CliError::Domain(e.into()))?;
            let svg = cmd_plot(&text, &columns, &x, sampler.as_deref())?;
            emit(Some(&output), &svg)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
