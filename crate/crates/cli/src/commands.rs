use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use vwlb_core::blr::{blr_gibbs, simulate_blr, BlrData, BlrHyper, BlrModel};
use vwlb_core::gmm::{gmm_gibbs, simulate_gmm, GmmConfig, GmmModel};
use vwlb_core::inference::{align_labels, apply_permutation};
use vwlb_core::io;
use vwlb_core::{
    draw_weights, multi_restart_fit, reverted_draws, run_vwlb, FitOptions, GibbsSettings, PosteriorDraws,
    RandomWeights, VwlbOptions, WeightScheme,
};

use crate::config::ModelKind;
use crate::report::ReportFormat;
use crate::{read_text, run_experiment, write_atomic};

#[derive(Debug, Parser)]
#[command(name = "vwlb", version, about = "Variational weighted likelihood bootstrap experiments")]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file or directory; stdout when omitted and the command allows it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a dataset. Mixture data is one value per line; regression
    /// data is written as X.csv and y.txt inside the --out directory.
    Simulate(SimulateArgs),
    /// Fit the (optionally weighted) variational approximation.
    Fit(FitCmd),
    /// Draw from the VWLB posterior approximation.
    Vwlb(VwlbCmd),
    /// Run the Gibbs baseline.
    Gibbs(GibbsCmd),
    /// Run a coverage experiment from a config file.
    Coverage(CoverageCmd),
    /// Summarise a results directory.
    Report(ReportCmd),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: ModelKind,
    #[arg(long)]
    pub n: usize,
    /// Centre separation (mixture).
    #[arg(long, default_value_t = 3.0)]
    pub delta: f64,
    /// AR(1) correlation of the design columns (regression).
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// True coefficients, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2,3,2,4,1,2,1,0,0,2")]
    pub beta: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub model: ModelKind,
    /// Mixture observations, one per line.
    #[arg(long, required_if_eq("model", "gmm"))]
    pub data: Option<PathBuf>,
    /// Regression design, comma-separated rows.
    #[arg(long, required_if_eq("model", "blr"))]
    pub x: Option<PathBuf>,
    /// Regression response, one per line.
    #[arg(long, required_if_eq("model", "blr"))]
    pub y: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 5.0)]
    pub prior_sd: f64,
    #[arg(long, default_value_t = BlrHyper::default().v1)]
    pub v1: f64,
    #[arg(long, default_value_t = BlrHyper::default().a0)]
    pub a0: f64,
    #[arg(long, default_value_t = BlrHyper::default().b0)]
    pub b0: f64,
    #[arg(long, default_value_t = BlrHyper::default().nu)]
    pub nu: f64,
    #[arg(long, default_value_t = BlrHyper::default().lambda)]
    pub lambda: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, default_value_t = FitOptions::default().max_iters)]
    pub max_iters: usize,
    #[arg(long, default_value_t = FitOptions::default().elbo_rel_tol)]
    pub tol: f64,
    /// Random restarts; defaults to 3 for the mixture and 1 for regression.
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub init_spread: f64,
}

#[derive(Debug, Args)]
pub struct FitCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Weight scheme for a single weighted fit.
    #[arg(long, default_value = "unit")]
    pub scheme: WeightScheme,
}

#[derive(Debug, Args)]
pub struct VwlbCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Number of bootstrap replicates.
    #[arg(short = 'B', long = "replicates", default_value_t = 500)]
    pub replicates: usize,
    #[arg(long, default_value = "exp1")]
    pub scheme: WeightScheme,
    /// Reflect the draws about the unweighted variational mean.
    #[arg(long)]
    pub reverted: bool,
}

#[derive(Debug, Args)]
pub struct GibbsCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 2000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 10)]
    pub thin: usize,
}

#[derive(Debug, Args)]
pub struct CoverageCmd {
    #[arg(long)]
    pub config: PathBuf,
    /// Override a config key, e.g. `--set coverage.R=20`.
    #[arg(long = "set", value_parser = parse_pair)]
    pub overrides: Vec<(String, String)>,
}

#[derive(Debug, Args)]
pub struct ReportCmd {
    /// Results directory holding the coverage tables.
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long, default_value = "csv")]
    pub format: ReportFormat,
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

enum Loaded {
    Gmm(GmmModel),
    Blr(BlrModel),
}

fn load(args: &DataArgs) -> anyhow::Result<Loaded> {
    let path = |p: &Option<PathBuf>| p.clone().expect("required by clap");
    match args.model {
        ModelKind::Gmm => {
            let file = path(&args.data);
            let x = io::parse_column(&read_text(&file)?).with_context(|| file.display().to_string())?;
            let mut config = GmmConfig::with_separation(args.k, 0.0);
            config.prior_sd = args.prior_sd;
            Ok(Loaded::Gmm(GmmModel::new(x, config)?))
        }
        ModelKind::Blr => {
            let (xf, yf) = (path(&args.x), path(&args.y));
            let (x, p) = io::parse_design(&read_text(&xf)?).with_context(|| xf.display().to_string())?;
            let y = io::parse_column(&read_text(&yf)?).with_context(|| yf.display().to_string())?;
            let hyper = BlrHyper { v1: args.v1, a0: args.a0, b0: args.b0, nu: args.nu, lambda: args.lambda };
            Ok(Loaded::Blr(BlrModel::new(BlrData::new(x, y, p)?, hyper)?))
        }
    }
}

fn fit_options(args: &FitArgs, model: ModelKind, seed: u64) -> FitOptions {
    let default_restarts = if model == ModelKind::Gmm { 3 } else { 1 };
    FitOptions {
        max_iters: args.max_iters,
        elbo_rel_tol: args.tol,
        n_restarts: args.restarts.unwrap_or(default_restarts),
        init_spread: args.init_spread,
        seed,
    }
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => write_atomic(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn fit_summary(elbo: f64, iterations: usize, converged: bool, mean: &[f64], var: &[f64]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "elbo = {elbo}");
    let _ = writeln!(s, "iterations = {iterations}");
    let _ = writeln!(s, "converged = {converged}");
    for (k, (m, v)) in mean.iter().zip(var).enumerate() {
        let _ = writeln!(s, "theta_mean.{} = {m}", k + 1);
        let _ = writeln!(s, "theta_var.{} = {v}", k + 1);
    }
    s
}

/// Relabels each mixture draw to best match `reference`.
fn align_draws(draws: &mut PosteriorDraws, reference: &[f64]) -> anyhow::Result<()> {
    for i in 0..draws.n_draws() {
        let perm = align_labels(draws.row(i), reference)?;
        let aligned = apply_permutation(draws.row(i), &perm);
        draws.row_mut(i).copy_from_slice(&aligned);
    }
    Ok(())
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let seed = cli.seed.unwrap_or(0);
    let parallelism = cli.parallelism.unwrap_or(1);
    if parallelism == 0 {
        bail!("--parallelism must be at least 1");
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::Simulate(a) => match a.model {
            ModelKind::Gmm => {
                let sample = simulate_gmm(a.n, &GmmConfig::with_separation(a.k, a.delta), seed)?;
                emit(out, &io::format_column(&sample.x))
            }
            ModelKind::Blr => {
                let Some(dir) = out else { bail!("regression data needs an --out directory") };
                let data = simulate_blr(a.n, &a.beta, a.rho, a.noise_sd, seed)?;
                std::fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
                write_atomic(&dir.join("X.csv"), &io::format_design(&data))?;
                write_atomic(&dir.join("y.txt"), &io::format_column(&data.y))?;
                Ok(())
            }
        },
        Command::Fit(c) => {
            let opts = fit_options(&c.fit, c.data.model, seed);
            let text = match load(&c.data)? {
                Loaded::Gmm(m) => {
                    let w = weights_for(m.x.len(), c.scheme, seed)?;
                    let r = multi_restart_fit(&m, &w, &opts)?;
                    fit_summary(r.final_elbo(), r.iterations, r.converged, &r.theta_mean, &r.theta_var)
                        + &io::gmm_state_snapshot(&r.final_state)
                }
                Loaded::Blr(m) => {
                    let w = weights_for(m.data.n, c.scheme, seed)?;
                    let r = multi_restart_fit(&m, &w, &opts)?;
                    fit_summary(r.final_elbo(), r.iterations, r.converged, &r.theta_mean, &r.theta_var)
                        + &io::blr_state_snapshot(&r.final_state)
                }
            };
            emit(out, &text)
        }
        Command::Vwlb(c) => {
            let opts = fit_options(&c.fit, c.data.model, seed);
            let mut options = VwlbOptions::new(c.replicates, c.scheme, opts.clone(), seed);
            options.parallelism = parallelism;
            let vb_opts = FitOptions { seed: vwlb_core::rng::derive_seed(seed, "vb", 0), ..opts };
            let (mut draws, vb_mean) = match load(&c.data)? {
                Loaded::Gmm(m) => {
                    let vb = multi_restart_fit(&m, &RandomWeights::unit(m.x.len()), &vb_opts)?;
                    let mut draws = run_vwlb(&m, &options)?;
                    align_draws(&mut draws, &vb.theta_mean)?;
                    (draws, vb.theta_mean)
                }
                Loaded::Blr(m) => {
                    let vb = multi_restart_fit(&m, &RandomWeights::unit(m.data.n), &vb_opts)?;
                    (run_vwlb(&m, &options)?, vb.theta_mean)
                }
            };
            if c.reverted {
                draws = reverted_draws(&draws, &vb_mean)?;
            }
            emit(out, &io::format_draws_csv(&draws))
        }
        Command::Gibbs(c) => {
            let settings = GibbsSettings { n_samples: c.samples, burnin: c.burnin, thin: c.thin };
            let draws = match load(&c.data)? {
                Loaded::Gmm(m) => gmm_gibbs(&m.x, &m.config, settings, seed)?,
                Loaded::Blr(m) => blr_gibbs(&m.data, &m.hyper, settings, seed)?,
            };
            emit(out, &io::format_draws_csv(&draws))
        }
        Command::Coverage(c) => {
            let mut overrides = c.overrides;
            if let Some(s) = cli.seed {
                overrides.push(("seed".into(), s.to_string()));
            }
            if let Some(o) = &cli.out {
                overrides.push(("out".into(), o.display().to_string()));
            }
            if let Some(p) = cli.parallelism {
                overrides.push(("parallelism".into(), p.to_string()));
            }
            let manifest = run_experiment(&c.config, &overrides)?;
            for (point, status) in &manifest.points {
                match status {
                    crate::PointStatus::Done { file } => {
                        println!("{} n={} -> {}", point.value, point.n, file.display())
                    }
                    crate::PointStatus::Failed { reason } => println!("{} n={} FAILED: {reason}", point.value, point.n),
                }
            }
            println!("table: {}", manifest.table.display());
            println!("seeds: {}", manifest.seeds.display());
            println!("run: {}", manifest.run.display());
            if manifest.failures() > 0 {
                bail!("{} grid point(s) failed; see {}", manifest.failures(), manifest.run.display());
            }
            Ok(())
        }
        Command::Report(c) => {
            for path in crate::emit_report(&c.dir, c.format, out)? {
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

fn weights_for(n: usize, scheme: WeightScheme, seed: u64) -> anyhow::Result<RandomWeights> {
    Ok(match scheme {
        WeightScheme::Unit => RandomWeights::unit(n),
        s => draw_weights(n, s, vwlb_core::rng::derive_seed(seed, "weights", 0))?,
    })
}
