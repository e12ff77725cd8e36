//! The `bsl` command line.
//!
//! Every subcommand takes its parameters from flags, from a JSON file given
//! with `--config`, or both; a flag wins over the same key in the file. Block
//! indices on the command line and in outputs are 1-based.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use bsl_core::bounds::{
    self, adversarial_guarantee, gaussian_guarantee, sigma_max_without_block_factor, Algorithm,
    BlockNorms, ProbabilityForm,
};
use bsl_core::coherence::{coherence_profile, gram_bound_report_with, CoherenceProfile};
use bsl_core::dictgen::{generate_dictionary, generate_signal, measure, NoiseSpec, SignalProfile, SignalSpec};
use bsl_core::estimators::{self, EstimateResult};
use bsl_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::experiments::{self, Estimator, SweepConfig, TableConfig};
use crate::format::{self, FormatError, Observation};
use crate::presets;

/// A failure with its exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments or input files; exit status 2.
    #[error("{0}")]
    Usage(String),
    /// Numerical or output failure; exit status 1.
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    /// Process exit status.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Usage(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// Generates a parameter struct usable both as clap flags and as a `--config`
/// JSON object, plus a merge where `self` (the flags) takes precedence.
macro_rules! params {
    (
        $(#[$m:meta])*
        $name:ident {
            $( $(#[$fm:meta])* $field:ident : $ty:ty ),* $(,)?
        }
        $( switches { $( $(#[$sm:meta])* $switch:ident ),* $(,)? } )?
    ) => {
        $(#[$m])*
        #[derive(Debug, Default, Clone, Args, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $( $(#[$fm])* pub $field: Option<$ty>, )*
            $($( $(#[$sm])* #[arg(long)] #[serde(default)] pub $switch: bool, )*)?
        }

        impl $name {
            fn or(self, other: Self) -> Self {
                $name {
                    $( $field: self.$field.or(other.$field), )*
                    $($( $switch: self.$switch || other.$switch, )*)?
                }
            }
        }
    };
}

fn load_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn merged<T: DeserializeOwned + Default>(config: &Option<PathBuf>) -> CliResult<T> {
    match config {
        Some(p) => load_config(p),
        None => Ok(T::default()),
    }
}

fn required<T>(v: Option<T>, flag: &str, key: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Usage(format!("missing --{flag} (or \"{key}\" in --config)")))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Failure(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Failure(format!("stdout: {e}"))),
    }
}

fn emit_with(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult<()> {
    let res = match out {
        Some(p) => fs::File::create(p).and_then(|f| {
            let mut w = io::BufWriter::new(f);
            write(&mut w)?;
            w.flush()
        }),
        None => {
            let mut w = io::stdout().lock();
            write(&mut w)
        }
    };
    res.map_err(|e| {
        let target = out.map(|p| p.display().to_string()).unwrap_or_else(|| "stdout".into());
        CliError::Failure(format!("{target}: {e}"))
    })
}

/// 1-based user indices to sorted 0-based ones.
fn zero_based(indices: &[usize], what: &str) -> CliResult<Vec<usize>> {
    if indices.contains(&0) {
        return usage(format!("{what} indices are 1-based; 0 is not valid"));
    }
    let mut v: Vec<usize> = indices.iter().map(|i| i - 1).collect();
    v.sort_unstable();
    Ok(v)
}

fn one_based(indices: &[usize]) -> Vec<usize> {
    indices.iter().map(|i| i + 1).collect()
}

#[derive(Debug, Parser)]
#[command(name = "bsl", version, about = "Block-sparse recovery: dictionaries, greedy estimators, guarantees and Monte Carlo sweeps")]
struct Cli {
    /// Worker threads for `sweep` and `table` (default: $BSL_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random dictionary with orthonormal blocks (BSL1 format).
    GenDict(GenDictArgs),
    /// Generate a block-sparse signal, optionally with its noisy observation.
    GenSignal(GenSignalArgs),
    /// Coherence, block coherence and sub-coherence of a dictionary.
    Coherence(CoherenceArgs),
    /// Run an estimator on an observation.
    Estimate(EstimateArgs),
    /// Evaluate a recovery guarantee.
    Guarantee(GuaranteeArgs),
    /// Cramér–Rao bound for a support.
    Crb(CrbArgs),
    /// Monte Carlo median error versus noise variance (CSV).
    Sweep(SweepArgs),
    /// Guarantee table (CSV).
    Table(TableArgs),
}

params! {
    /// Dictionary generation parameters.
    GenDictParams {
        /// Measurements.
        #[arg(long = "L")]
        #[serde(rename = "L")]
        l: usize,
        /// Number of blocks.
        #[arg(long = "M")]
        #[serde(rename = "M")]
        m: usize,
        /// Block size.
        #[arg(long = "d")]
        #[serde(rename = "d")]
        d: usize,
        /// Random seed.
        #[arg(long)]
        seed: u64,
        /// Output file (default: stdout).
        #[arg(long)]
        out: PathBuf,
    }
}

#[derive(Debug, Args)]
struct GenDictArgs {
    #[command(flatten)]
    params: GenDictParams,
    /// JSON file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Noise model names on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseArg {
    /// Gaussian noise (`--sigma`).
    #[value(alias = "gaussian")]
    #[serde(alias = "gaussian")]
    Gauss,
    /// Noise of fixed Euclidean norm (`--eps`).
    #[value(alias = "adversarial", alias = "bounded")]
    #[serde(alias = "adversarial", alias = "bounded")]
    Adv,
}

params! {
    /// Signal generation parameters.
    GenSignalParams {
        /// Number of blocks (taken from --dict when given).
        #[arg(long = "M")]
        #[serde(rename = "M")]
        m: usize,
        /// Block size (taken from --dict when given).
        #[arg(long = "d")]
        #[serde(rename = "d")]
        d: usize,
        /// Nonzero blocks.
        #[arg(long)]
        s: usize,
        /// Smallest nonzero block norm (default 1).
        #[arg(long)]
        xmin: f64,
        /// Largest nonzero block norm (default: xmin).
        #[arg(long)]
        xmax: f64,
        /// Within-block shape: spike, flat, mixed or random (default random).
        #[arg(long)]
        profile: SignalProfile,
        /// Signal seed.
        #[arg(long)]
        seed: u64,
        /// Signal output file (default: stdout).
        #[arg(long)]
        out: PathBuf,
        /// Dictionary used to produce an observation.
        #[arg(long)]
        dict: PathBuf,
        /// Noise model for the observation (default gauss).
        #[arg(long, value_enum)]
        noise: NoiseArg,
        /// Gaussian standard deviation.
        #[arg(long)]
        sigma: f64,
        /// Noise norm for the bounded model.
        #[arg(long)]
        eps: f64,
        /// Noise seed (default: seed + 1).
        #[arg(long)]
        noise_seed: u64,
        /// Observation output file; required with --dict.
        #[arg(long)]
        obs_out: PathBuf,
    }
}

#[derive(Debug, Args)]
struct GenSignalArgs {
    #[command(flatten)]
    params: GenSignalParams,
    /// JSON file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

params! {
    /// Coherence parameters.
    CoherenceParams {
        /// Dictionary file.
        #[arg(long)]
        dict: PathBuf,
        /// Also check the Gram-matrix bounds on random sets of up to k blocks.
        #[arg(long)]
        k: usize,
        /// Sampled sets for the Gram check (default 100).
        #[arg(long)]
        trials: usize,
        /// Seed for the Gram check.
        #[arg(long)]
        seed: u64,
        /// Output file (default: stdout).
        #[arg(long)]
        out: PathBuf,
    }
}

#[derive(Debug, Args)]
struct CoherenceArgs {
    #[command(flatten)]
    params: CoherenceParams,
    /// JSON file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Estimators selectable by `estimate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateAlgo {
    /// Block thresholding.
    Bth,
    /// Block OMP.
    Bomp,
    /// Scalar OMP; `k` counts atoms.
    Omp,
    /// Scalar thresholding; `k` counts atoms.
    Thr,
    /// Least squares on `--support`.
    Oracle,
    /// Exhaustive maximum likelihood (small problems only).
    Ml,
}

params! {
    /// Estimation parameters.
    EstimateParams {
        /// Algorithm.
        #[arg(long, value_enum)]
        algo: EstimateAlgo,
        /// Sparsity (blocks, or atoms for omp/thr).
        #[arg(long)]
        k: usize,
        /// Dictionary file.
        #[arg(long)]
        dict: PathBuf,
        /// Observation file {"values": [...]}.
        #[arg(long)]
        obs: PathBuf,
        /// True support for the oracle, 1-based, comma separated.
        #[arg(long, value_delimiter = ',')]
        support: Vec<usize>,
        /// Output file (default: stdout).
        #[arg(long)]
        out: PathBuf,
    }
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    params: EstimateParams,
    /// JSON file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

params! {
    /// Guarantee parameters.
    GuaranteeParams {
        /// bth or bomp.
        #[arg(long)]
        algo: Algorithm,
        /// adv (bounded) or gauss.
        #[arg(long, value_enum)]
        noise: NoiseArg,
        /// Block sparsity.
        #[arg(long)]
        k: usize,
        /// Smallest nonzero block norm.
        #[arg(long)]
        xmin: f64,
        /// Largest nonzero block norm (default: xmin).
        #[arg(long)]
        xmax: f64,
        /// Noise norm bound (adv).
        #[arg(long)]
        eps: f64,
        /// Noise standard deviation (gauss).
        #[arg(long)]
        sigma: f64,
        /// Confidence level (gauss, default 0.99).
        #[arg(long)]
        confidence: f64,
        /// Probability expression: lemma5 (default) or theorem4.
        #[arg(long)]
        form: ProbabilityForm,
        /// Dictionary file to measure the metrics on.
        #[arg(long)]
        dict: PathBuf,
        /// Coherence (informational when metrics are given directly).
        #[arg(long)]
        mu: f64,
        /// Block coherence.
        #[arg(long)]
        mu_block: f64,
        /// Sub-coherence (default 0).
        #[arg(long)]
        nu: f64,
        /// L,M,d when metrics are given directly.
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        /// Output file (default: stdout).
        #[arg(long)]
        out: PathBuf,
    }
    switches {
        /// Also report sigma_max with the factor d dropped from under the root.
        diagnostic,
    }
}

#[derive(Debug, Args)]
struct GuaranteeArgs {
    #[command(flatten)]
    params: GuaranteeParams,
    /// JSON file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

params! {
    /// CRB parameters.
    CrbParams {
        /// Dictionary file.
        #[arg(long)]
        dict: PathBuf,
        /// Support, 1-based, comma separated.
        #[arg(long, value_delimiter = ',')]
        support: Vec<usize>,
        /// Noise variance (default 1).
        #[arg(long)]
        sigma2: f64,
        /// Declared sparsity (default: support size).
        #[arg(long)]
        k: usize,
        /// Output file (default: stdout).
        #[arg(long)]
        out: PathBuf,
    }
}

#[derive(Debug, Args)]
struct CrbArgs {
    #[command(flatten)]
    params: CrbParams,
    /// JSON file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Sweep configuration JSON.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration: fig1, fig1_small, fig2 or fig2_small.
    #[arg(long)]
    preset: Option<String>,
    /// Override trials per cell.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the number of signals.
    #[arg(long)]
    signals: Option<usize>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the estimators, comma separated.
    #[arg(long, value_delimiter = ',')]
    algos: Option<Vec<Estimator>>,
    /// CSV output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a log-log SVG plot.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Print one line per (estimator, σ²) to stderr.
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Debug, Args)]
struct TableArgs {
    /// Table configuration JSON.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration: table1.
    #[arg(long)]
    preset: Option<String>,
    /// Rows to compute, 1-based: `3` or `1-5`.
    #[arg(long)]
    rows: Option<String>,
    /// Override the confidence level.
    #[arg(long)]
    confidence: Option<f64>,
    /// Override the probability expression.
    #[arg(long)]
    form: Option<ProbabilityForm>,
    /// Override the seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Measure coherence on the generated dictionaries instead of using the
    /// values in the configuration.
    #[arg(long)]
    measure: bool,
    /// CSV output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn gen_dict(args: GenDictArgs) -> CliResult<()> {
    let p = args.params.or(merged(&args.config)?);
    let dict = generate_dictionary(
        required(p.l, "L", "L")?,
        required(p.m, "M", "M")?,
        required(p.d, "d", "d")?,
        p.seed.unwrap_or(0),
    )?;
    emit_with(p.out.as_deref(), |w| format::write_dictionary(&dict, w))
}

fn gen_signal(args: GenSignalArgs) -> CliResult<()> {
    let p = args.params.or(merged(&args.config)?);
    let dict = p.dict.as_deref().map(format::load_dictionary).transpose()?;
    let (m, d) = match &dict {
        Some(dict) => {
            if p.m.is_some_and(|m| m != dict.num_blocks()) || p.d.is_some_and(|d| d != dict.block_size()) {
                return usage("--M/--d disagree with the dictionary");
            }
            (dict.num_blocks(), dict.block_size())
        }
        None => (required(p.m, "M", "M")?, required(p.d, "d", "d")?),
    };
    let xmin = p.xmin.unwrap_or(1.0);
    let seed = p.seed.unwrap_or(0);
    let spec = SignalSpec {
        num_blocks: m,
        block_size: d,
        sparsity: required(p.s, "s", "s")?,
        xmin_norm: xmin,
        xmax_norm: p.xmax.unwrap_or(xmin),
        profile: p.profile.unwrap_or(SignalProfile::Random),
        seed,
    };
    let x = generate_signal(&spec)?;
    if let Some(dict) = dict {
        let obs_out = required(p.obs_out, "obs-out", "obs_out")?;
        let noise_seed = p.noise_seed.unwrap_or(seed.wrapping_add(1));
        let noise = match p.noise.unwrap_or(NoiseArg::Gauss) {
            NoiseArg::Gauss => NoiseSpec::gaussian(p.sigma.unwrap_or(0.0), noise_seed),
            NoiseArg::Adv => NoiseSpec::bounded(p.eps.unwrap_or(0.0), noise_seed),
        };
        let y = measure(&dict, &x, &noise)?;
        emit(Some(&obs_out), &format::to_json(&Observation { values: y }))?;
    } else if p.obs_out.is_some() {
        return usage("--obs-out needs --dict");
    }
    emit(p.out.as_deref(), &format::to_json(&x))
}

fn profile_json(p: &CoherenceProfile) -> Value {
    json!({
        "mu": p.mu,
        "mu_block": p.mu_block,
        "nu": p.nu,
        "L": p.measurements,
        "M": p.num_blocks,
        "d": p.block_size,
    })
}

fn coherence(args: CoherenceArgs) -> CliResult<()> {
    let p = args.params.or(merged(&args.config)?);
    let dict = format::load_dictionary(&required(p.dict, "dict", "dict")?)?;
    let profile = coherence_profile(&dict)?;
    let mut out = profile_json(&profile);
    if let Some(k) = p.k {
        let report = gram_bound_report_with(&dict, &profile, k, p.trials.unwrap_or(100), p.seed.unwrap_or(0))?;
        out["gram_bounds"] = serde_json::to_value(&report).expect("report serializes");
        out["gram_bounds_hold"] = json!(report.holds(1e-10));
    }
    emit(p.out.as_deref(), &format::to_json(&out))
}

fn estimate_json(algo: &str, r: &EstimateResult) -> Value {
    json!({
        "algo": algo,
        "estimate": r.estimate,
        "selected_support": one_based(&r.selected_support),
        "residual_norm": r.residual_norm,
        "iterations": r.iterations,
        "residual_history": r.residual_history,
    })
}

fn estimate(args: EstimateArgs) -> CliResult<()> {
    let p = args.params.or(merged(&args.config)?);
    let algo = required(p.algo, "algo", "algo")?;
    let dict = format::load_dictionary(&required(p.dict, "dict", "dict")?)?;
    let y = format::load_observation(&required(p.obs, "obs", "obs")?)?.values;
    let r = if algo == EstimateAlgo::Oracle {
        let support = zero_based(&required(p.support, "support", "support")?, "block")?;
        estimators::oracle(&dict, &y, &support)?
    } else {
        let k = required(p.k, "k", "k")?;
        match algo {
            EstimateAlgo::Bth => estimators::bth(&dict, &y, k)?,
            EstimateAlgo::Bomp => estimators::bomp(&dict, &y, k)?,
            EstimateAlgo::Omp => estimators::omp(&dict, &y, k)?,
            EstimateAlgo::Thr => estimators::thresholding(&dict, &y, k)?,
            EstimateAlgo::Ml => estimators::exhaustive_ml(&dict, &y, k)?,
            EstimateAlgo::Oracle => unreachable!(),
        }
    };
    let name = EstimateAlgo::to_possible_value(&algo).expect("no skipped variants");
    emit(p.out.as_deref(), &format::to_json(&estimate_json(name.get_name(), &r)))
}

fn guarantee_profile(p: &GuaranteeParams) -> CliResult<CoherenceProfile> {
    if let Some(path) = &p.dict {
        let dict = format::load_dictionary(path)?;
        let mut prof = coherence_profile(&dict)?;
        if let Some(v) = p.mu_block {
            prof.mu_block = v;
        }
        if let Some(v) = p.nu {
            prof.nu = v;
        }
        return Ok(prof);
    }
    let dims = required(p.dims.clone(), "dims", "dims")?;
    let [l, m, d] = dims[..] else {
        return usage("--dims takes L,M,d");
    };
    let mu_block = required(p.mu_block, "mu-block", "mu_block")?;
    let nu = p.nu.unwrap_or(0.0);
    let mu = p.mu.unwrap_or(mu_block.max(nu));
    Ok(CoherenceProfile::from_metrics(mu, mu_block, nu, l, m, d)?)
}

fn guarantee(args: GuaranteeArgs) -> CliResult<()> {
    let p = args.params.or(merged(&args.config)?);
    let profile = guarantee_profile(&p)?;
    let algo = required(p.algo, "algo", "algo")?;
    let k = required(p.k, "k", "k")?;
    let xmin = required(p.xmin, "xmin", "xmin")?;
    let norms = BlockNorms::new(xmin, p.xmax.unwrap_or(xmin))?;
    let report = match required(p.noise, "noise", "noise")? {
        NoiseArg::Adv => adversarial_guarantee(&profile, k, norms, required(p.eps, "eps", "eps")?, algo)?,
        NoiseArg::Gauss => gaussian_guarantee(
            &profile,
            k,
            norms,
            required(p.sigma, "sigma", "sigma")?,
            p.confidence.unwrap_or(0.99),
            algo,
            p.form.unwrap_or_default(),
        )?,
    };
    let mut out = serde_json::to_value(&report).expect("report serializes");
    if p.diagnostic {
        let alt = match report.alpha {
            Some(a) => sigma_max_without_block_factor(&profile, k, norms, a, algo)?,
            None => None,
        };
        out["sigma_max_without_block_factor"] = json!(alt);
    }
    emit(p.out.as_deref(), &format::to_json(&out))
}

fn crb_cmd(args: CrbArgs) -> CliResult<()> {
    let p = args.params.or(merged(&args.config)?);
    let dict = format::load_dictionary(&required(p.dict, "dict", "dict")?)?;
    let support = zero_based(&required(p.support, "support", "support")?, "block")?;
    let sigma2 = p.sigma2.unwrap_or(1.0);
    let k = p.k.unwrap_or(support.len());
    let r = bounds::crb(&dict, &support, sigma2, k)?;
    let out = json!({
        "support": one_based(&support),
        "k": k,
        "sigma2": sigma2,
        "bound": r.bound,
        "unbiased_estimable": r.unbiased_estimable,
    });
    emit(p.out.as_deref(), &format::to_json(&out))
}

fn sweep(args: SweepArgs) -> CliResult<()> {
    let mut config: SweepConfig = match (&args.config, &args.preset) {
        (Some(path), _) => load_config(path)?,
        (None, Some(name)) => presets::sweep_preset(name).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown sweep preset '{name}', expected one of {}",
                presets::SWEEP_PRESETS.join(", ")
            ))
        })?,
        (None, None) => return usage("sweep needs --config or --preset"),
    };
    if let Some(t) = args.trials {
        config.trials_per_cell = t;
    }
    if let Some(n) = args.signals {
        config.num_signals = n;
    }
    if let Some(s) = args.seed {
        config.master_seed = s;
    }
    if let Some(a) = args.algos {
        config.algorithms = a;
    }
    let out = experiments::mc_sweep(&config)?;
    if args.verbose {
        for r in &out.records {
            eprintln!(
                "{} sigma2={} median range [{}, {}] support_rate={}",
                r.algorithm,
                format::sig6(r.sigma2),
                format::sig6(r.envelope.0),
                format::sig6(r.envelope.1),
                format::sig6(r.support_recovery_rate)
            );
        }
    }
    if let Some(path) = &args.svg {
        emit_with(Some(path), |w| experiments::write_sweep_svg(&out.records, w))?;
    }
    emit_with(args.out.as_deref(), |w| experiments::write_sweep_csv(&out.cells, w))
}

/// Parses `3` or `1-5` (1-based, inclusive) into a 0-based range.
fn parse_rows(spec: &str, total: usize) -> CliResult<std::ops::Range<usize>> {
    let bad = || CliError::Usage(format!("--rows expects N or A-B with 1 <= A <= B <= {total}, got '{spec}'"));
    let (a, b) = match spec.split_once('-') {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let n: usize = spec.trim().parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    if a == 0 || a > b || b > total {
        return Err(bad());
    }
    Ok(a - 1..b)
}

fn table(args: TableArgs) -> CliResult<()> {
    let mut config: TableConfig = match (&args.config, &args.preset) {
        (Some(path), _) => load_config(path)?,
        (None, Some(name)) => presets::table_preset(name).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown table preset '{name}', expected one of {}",
                presets::TABLE_PRESETS.join(", ")
            ))
        })?,
        (None, None) => return usage("table needs --config or --preset"),
    };
    if let Some(spec) = &args.rows {
        let range = parse_rows(spec, config.rows.len())?;
        config.rows = config.rows[range].to_vec();
    }
    if let Some(c) = args.confidence {
        config.confidence = c;
    }
    if let Some(f) = args.form {
        config.form = f;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if args.measure {
        for r in &mut config.rows {
            r.mu = None;
            r.mu_block = None;
            r.nu = None;
        }
    }
    let records = experiments::guarantee_table(&config)?;
    emit_with(args.out.as_deref(), |w| experiments::write_table_csv(&records, w))
}

fn thread_count(flag: Option<usize>) -> CliResult<Option<usize>> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("BSL_THREADS") {
            Ok(v) if !v.trim().is_empty() => Some(
                v.trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("BSL_THREADS must be a positive integer, got '{v}'")))?,
            ),
            _ => None,
        },
    };
    if n == Some(0) {
        return usage("thread count must be at least 1");
    }
    Ok(n)
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let threads = thread_count(cli.threads)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Failure(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::GenDict(a) => gen_dict(a),
        Command::GenSignal(a) => gen_signal(a),
        Command::Coherence(a) => coherence(a),
        Command::Estimate(a) => estimate(a),
        Command::Guarantee(a) => guarantee(a),
        Command::Crb(a) => crb_cmd(a),
        Command::Sweep(a) => sweep(a),
        Command::Table(a) => table(a),
    })
}

fn command_name(cli: &Cli) -> &'static str {
    match cli.command {
        Command::GenDict(_) => "gen-dict",
        Command::GenSignal(_) => "gen-signal",
        Command::Coherence(_) => "coherence",
        Command::Estimate(_) => "estimate",
        Command::Guarantee(_) => "guarantee",
        Command::Crb(_) => "crb",
        Command::Sweep(_) => "sweep",
        Command::Table(_) => "table",
    }
}

/// Parses `argv`, runs the subcommand and returns the exit status. Failures
/// print a single line to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return 0;
            }
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("bsl: {}", line.trim_start_matches("error: "));
            return 2;
        }
    };
    let name = command_name(&cli);
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("bsl {name}: {e}");
            e.exit_code()
        }
    }
}
