mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Parser)]
#[command(name = "rnrr", version, about = "Robust non-rigid registration of surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Register a source surface onto a target and write the deformed source.
    Register(RegisterArgs),
    /// Deform a surface with known node rotations and corrupt the result.
    Synth(SynthArgs),
    /// Run a matrix of configurations and compare RMSE and wall time.
    Ablate(AblateArgs),
    /// RMSE of a registered surface against ground truth.
    Eval(EvalArgs),
}

/// Registration inputs and solver settings. Unset flags fall back to the
/// config file, then to the defaults shown.
#[derive(Args, Clone, Debug, Default)]
struct RunArgs {
    /// Flat `key = value` file using these flag names as keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    source: Option<PathBuf>,
    #[arg(long)]
    target: Option<PathBuf>,
    /// Ground-truth positions, index-aligned with the source.
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Source vertex indices to evaluate (one per line), e.g. from `synth`.
    #[arg(long)]
    retained: Option<PathBuf>,
    /// welsch | l2 [default: welsch]
    #[arg(long)]
    kernel: Option<String>,
    /// pca | farthest [default: pca]
    #[arg(long)]
    sampler: Option<String>,
    /// Graph radius over mean source edge length [default: 5]
    #[arg(long)]
    radius_factor: Option<f64>,
    /// [default: 1]
    #[arg(long)]
    k_alpha: Option<f64>,
    /// [default: 1]
    #[arg(long)]
    k_beta: Option<f64>,
    /// [default: 10]
    #[arg(long)]
    nu_a_max_factor: Option<f64>,
    /// [default: 0.5]
    #[arg(long)]
    nu_a_min_factor: Option<f64>,
    /// [default: 40]
    #[arg(long)]
    nu_r_max_factor: Option<f64>,
    /// Single stage at the final kernel widths instead of annealing.
    #[arg(long)]
    fixed_nu: bool,
    /// Rigid ICP pair rejection distance [default: 0.3]
    #[arg(long)]
    eps_d: Option<f64>,
    /// Rigid ICP pair rejection angle in degrees [default: 60]
    #[arg(long)]
    theta: Option<f64>,
    /// Rigid ICP iterations [default: 15]
    #[arg(long)]
    icp_iterations: Option<usize>,
    /// Start from the identity instead of rigid ICP.
    #[arg(long)]
    no_rigid_init: bool,
    /// Recorded with the outputs [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// L-BFGS memory [default: 5]
    #[arg(long)]
    m: Option<usize>,
    /// Line search sufficient-decrease constant [default: 0.3]
    #[arg(long)]
    gamma: Option<f64>,
    /// Inner stop on energy decrease [default: 1e-3]
    #[arg(long)]
    eps1: Option<f64>,
    /// Outer stop on max displacement [default: 1e-3]
    #[arg(long)]
    eps2: Option<f64>,
    /// Outer iterations per stage [default: 100]
    #[arg(long)]
    imax: Option<usize>,
    /// L-BFGS iterations per inner solve [default: 1000]
    #[arg(long)]
    max_inner: Option<usize>,
    /// Write zero elapsed times so traces are reproducible byte for byte.
    #[arg(long)]
    no_timing: bool,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, commands::CliError> {
        let mut c = RunConfig::default();
        if let Some(path) = &self.config {
            commands::require_exists("config", path)?;
            c.apply_file(path).map_err(commands::CliError::usage)?;
        }
        let mut set: Vec<(&str, String)> = Vec::new();
        let paths = [
            ("source", &self.source),
            ("target", &self.target),
            ("gt", &self.gt),
            ("out", &self.out),
            ("retained", &self.retained),
        ];
        for (k, v) in paths {
            if let Some(v) = v {
                set.push((k, v.display().to_string()));
            }
        }
        let mut opt = |k, v: Option<String>| {
            if let Some(v) = v {
                set.push((k, v));
            }
        };
        opt("kernel", self.kernel.clone());
        opt("sampler", self.sampler.clone());
        opt("radius-factor", self.radius_factor.map(|v| v.to_string()));
        opt("k-alpha", self.k_alpha.map(|v| v.to_string()));
        opt("k-beta", self.k_beta.map(|v| v.to_string()));
        opt("nu-a-max-factor", self.nu_a_max_factor.map(|v| v.to_string()));
        opt("nu-a-min-factor", self.nu_a_min_factor.map(|v| v.to_string()));
        opt("nu-r-max-factor", self.nu_r_max_factor.map(|v| v.to_string()));
        opt("eps-d", self.eps_d.map(|v| v.to_string()));
        opt("theta", self.theta.map(|v| v.to_string()));
        opt("icp-iterations", self.icp_iterations.map(|v| v.to_string()));
        opt("seed", self.seed.map(|v| v.to_string()));
        opt("m", self.m.map(|v| v.to_string()));
        opt("gamma", self.gamma.map(|v| v.to_string()));
        opt("eps1", self.eps1.map(|v| v.to_string()));
        opt("eps2", self.eps2.map(|v| v.to_string()));
        opt("imax", self.imax.map(|v| v.to_string()));
        opt("max-inner", self.max_inner.map(|v| v.to_string()));
        opt("fixed-nu", self.fixed_nu.then(|| "true".into()));
        opt("rigid-init", self.no_rigid_init.then(|| "false".into()));
        opt("timing", self.no_timing.then(|| "false".into()));
        for (k, v) in set {
            c.set(k, &v).map_err(commands::CliError::usage)?;
        }
        c.solver
            .validate()
            .map_err(|e| commands::CliError::usage(e.to_string()))?;
        Ok(c)
    }
}

#[derive(Args)]
struct RegisterArgs {
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Kernels to compare.
    #[arg(long, value_delimiter = ',', default_value = "welsch,l2")]
    kernels: Vec<String>,
    /// Radius factors to sweep [default: the configured radius factor]
    #[arg(long, value_delimiter = ',')]
    radius_factors: Vec<f64>,
    /// annealed | fixed, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "annealed")]
    nu_modes: Vec<String>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    source: PathBuf,
    /// Output directory for target.ply, gt.ply and the synthesis record.
    #[arg(long)]
    out: PathBuf,
    /// Seeds every random choice.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest per-node rotation, in degrees.
    #[arg(long, default_value_t = 10.0)]
    rotation_deg: f64,
    /// Graph radius used for the deformation, over mean source edge length.
    #[arg(long, default_value_t = 5.0)]
    radius_factor: f64,
    #[arg(long, default_value = "pca")]
    sampler: String,
    /// Fraction of target vertices moved along their normals by Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    noise_fraction: f64,
    /// Noise standard deviation over mean target edge length.
    #[arg(long, default_value_t = 1.0)]
    noise_sigma: f64,
    /// Fraction of target vertices pushed off the surface.
    #[arg(long, default_value_t = 0.0)]
    outlier_fraction: f64,
    /// Outlier offset over mean target edge length.
    #[arg(long, default_value_t = 5.0)]
    outlier_distance: f64,
    /// Fraction of target vertices removed as one geodesic ball.
    #[arg(long, default_value_t = 0.0)]
    remove_fraction: f64,
}

#[derive(Args)]
struct EvalArgs {
    /// Registered surface, index-aligned with the ground truth.
    #[arg(long)]
    result: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    retained: Option<PathBuf>,
    /// Write a color-coded error mesh here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Register(a) => a.run.resolve().and_then(|c| commands::register(&c)),
        Command::Synth(a) => commands::synth(&a),
        Command::Ablate(a) => a.run.resolve().and_then(|c| commands::ablate(&c, &a)),
        Command::Eval(a) => commands::eval(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
