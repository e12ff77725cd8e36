//! Monte Carlo error-versus-noise sweeps and guarantee tables.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use bsl_core::bounds::{
    crb, gaussian_error_coefficient, gaussian_guarantee, Algorithm, BlockNorms, ProbabilityForm,
};
use bsl_core::coherence::{coherence_profile, CoherenceProfile};
use bsl_core::dictgen::{generate_dictionary, generate_signal, noise_vector, NoiseSpec, SignalProfile, SignalSpec};
use bsl_core::estimators::{self, EstimateResult};
use bsl_core::rng::{derive_seed, stream_rng, Stream};
use bsl_core::{BlockSparseVector, BlockedDictionary, Error, Result};
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::format::sig6;

// Domain tags mixed into derived seeds.
const TAG_DICT: u64 = 1;
const TAG_SIGNAL: u64 = 2;
const TAG_NOISE: u64 = 3;
const TAG_TABLE: u64 = 4;

/// Estimators a sweep can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Block OMP.
    Bomp,
    /// Block thresholding.
    Bth,
    /// Scalar OMP on the same atoms, sparsity `k d`.
    Omp,
    /// Scalar thresholding on the same atoms, sparsity `k d`.
    Thr,
    /// Least squares on the true support.
    Oracle,
}

impl Estimator {
    /// All estimators, in output order.
    pub const ALL: [Estimator; 5] = [
        Estimator::Bomp,
        Estimator::Bth,
        Estimator::Omp,
        Estimator::Thr,
        Estimator::Oracle,
    ];

    /// Name used in CSV and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Bth => "bth",
            Estimator::Bomp => "bomp",
            Estimator::Omp => "omp",
            Estimator::Thr => "thr",
            Estimator::Oracle => "oracle",
        }
    }

    fn is_scalar(self) -> bool {
        matches!(self, Estimator::Omp | Estimator::Thr)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown estimator '{s}', expected bth, bomp, omp, thr or oracle")))
    }
}

fn default_trials() -> usize {
    20
}

fn default_signals() -> usize {
    12
}

fn default_profiles() -> Vec<SignalProfile> {
    SignalProfile::ALL.to_vec()
}

fn default_algorithms() -> Vec<Estimator> {
    Estimator::ALL.to_vec()
}

/// Parameters of an error-versus-noise sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Measurements `L`.
    #[serde(rename = "L")]
    pub measurements: usize,
    /// Blocks `M`.
    #[serde(rename = "M")]
    pub num_blocks: usize,
    /// Block size `d`.
    #[serde(rename = "d")]
    pub block_size: usize,
    /// Sparsity assumed by the estimators.
    pub k: usize,
    /// Nonzero blocks in each signal.
    pub s: usize,
    /// Within-block shapes, cycled over the signals.
    #[serde(default = "default_profiles")]
    pub profiles: Vec<SignalProfile>,
    /// Smallest nonzero block norm.
    pub xmin_norm: f64,
    /// Largest nonzero block norm.
    pub xmax_norm: f64,
    /// Noise variances, ascending.
    pub sigma2_grid: Vec<f64>,
    /// Noise realizations per (signal, σ²) cell.
    #[serde(default = "default_trials")]
    pub trials_per_cell: usize,
    /// Number of ground-truth signals.
    #[serde(default = "default_signals")]
    pub num_signals: usize,
    /// Estimators to run.
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Estimator>,
    /// Seed from which every random draw is derived.
    #[serde(default)]
    pub master_seed: u64,
}

impl SweepConfig {
    /// Checks the configuration invariants.
    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidArgument(m));
        if self.sigma2_grid.is_empty() {
            return invalid("sigma2_grid must not be empty".into());
        }
        if self.sigma2_grid.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return invalid("sigma2_grid entries must be finite and nonnegative".into());
        }
        if self.sigma2_grid.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("sigma2_grid must be strictly ascending".into());
        }
        if self.trials_per_cell == 0 || self.num_signals == 0 {
            return invalid("trials_per_cell and num_signals must be at least 1".into());
        }
        if self.profiles.is_empty() || self.algorithms.is_empty() {
            return invalid("profiles and algorithms must not be empty".into());
        }
        if self.k == 0 || self.k > self.num_blocks {
            return invalid(format!("k must be in 1..={}, got {}", self.num_blocks, self.k));
        }
        if self.s > self.k {
            return invalid(format!("s = {} exceeds k = {}", self.s, self.k));
        }
        if self.k * self.block_size > self.measurements {
            return invalid(format!(
                "k d = {} exceeds L = {}",
                self.k * self.block_size,
                self.measurements
            ));
        }
        Ok(())
    }

    fn signal_spec(&self, id: usize) -> SignalSpec {
        SignalSpec {
            num_blocks: self.num_blocks,
            block_size: self.block_size,
            sparsity: self.s,
            xmin_norm: self.xmin_norm,
            xmax_norm: self.xmax_norm,
            profile: self.profiles[id % self.profiles.len()],
            seed: derive_seed(&[self.master_seed, TAG_SIGNAL, id as u64]),
        }
    }
}

/// One (estimator, signal, σ²) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRecord {
    /// Estimator.
    pub algorithm: Estimator,
    /// Signal index (0-based).
    pub signal_id: usize,
    /// Position in the σ² grid.
    pub sigma2_index: usize,
    /// Noise variance.
    pub sigma2: f64,
    /// `‖x̂ − x‖₂²` per trial.
    pub squared_errors: Vec<f64>,
    /// Median over trials.
    pub median_sq_err: f64,
    /// Smallest trial error.
    pub min_sq_err: f64,
    /// Largest trial error.
    pub max_sq_err: f64,
    /// Cramér–Rao bound for this signal; absent when `s < k`.
    pub crb: Option<f64>,
    /// Fraction of trials whose selected support contains the true one.
    pub support_rate: f64,
}

/// Aggregate over signals for one (estimator, σ²) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    /// Estimator.
    pub algorithm: Estimator,
    /// Noise variance.
    pub sigma2: f64,
    /// Median squared error of each signal, by signal index.
    pub signal_medians: Vec<f64>,
    /// `(min, max)` of `signal_medians`.
    pub envelope: (f64, f64),
    /// Mean of the per-signal Cramér–Rao bounds; absent when `s < k`.
    pub crb_value: Option<f64>,
    /// Fraction of all trials whose selected support contains the true one.
    pub support_recovery_rate: f64,
}

/// Output of [`mc_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutput {
    /// Per-cell results ordered by (estimator, signal, σ² index).
    pub cells: Vec<CellRecord>,
    /// Per-(estimator, σ²) aggregates ordered by (estimator, σ² index).
    pub records: Vec<SweepRecord>,
}

/// Median; the mean of the two central values for even lengths.
pub fn median_squared_error(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::InvalidArgument("median of an empty list".into()));
    }
    let mut v = errors.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Dictionary used by a sweep, derived from the master seed.
pub fn sweep_dictionary(config: &SweepConfig) -> Result<BlockedDictionary> {
    generate_dictionary(
        config.measurements,
        config.num_blocks,
        config.block_size,
        derive_seed(&[config.master_seed, TAG_DICT]),
    )
}

/// Ground-truth signal `id` of a sweep.
pub fn sweep_signal(config: &SweepConfig, id: usize) -> Result<BlockSparseVector> {
    generate_signal(&config.signal_spec(id))
}

/// Runs `alg` on `y`; scalar estimators see `scalar`, the same atoms with `d = 1`.
fn run_estimator(
    alg: Estimator,
    dict: &BlockedDictionary,
    scalar: &BlockedDictionary,
    y: &[f64],
    k: usize,
    support: &[usize],
) -> Result<EstimateResult> {
    let kd = k * dict.block_size();
    match alg {
        Estimator::Bth => estimators::bth(dict, y, k),
        Estimator::Bomp => estimators::bomp(dict, y, k),
        Estimator::Omp => estimators::bomp(scalar, y, kd),
        Estimator::Thr => estimators::bth(scalar, y, kd),
        Estimator::Oracle => estimators::oracle(dict, y, support),
    }
}

/// Runs the sweep. Cells are computed in parallel on the current rayon pool;
/// results do not depend on the number of workers.
pub fn mc_sweep(config: &SweepConfig) -> Result<SweepOutput> {
    config.validate()?;
    let dict = sweep_dictionary(config)?;
    mc_sweep_with(config, &dict)
}

/// [`mc_sweep`] on a given dictionary.
pub fn mc_sweep_with(config: &SweepConfig, dict: &BlockedDictionary) -> Result<SweepOutput> {
    config.validate()?;
    if dict.measurements() != config.measurements
        || dict.num_blocks() != config.num_blocks
        || dict.block_size() != config.block_size
    {
        return Err(Error::InvalidArgument("dictionary dimensions do not match the sweep".into()));
    }
    let scalar = dict.with_block_size(1)?;
    let signals: Vec<BlockSparseVector> = (0..config.num_signals)
        .map(|i| sweep_signal(config, i))
        .collect::<Result<_>>()?;

    let mut algorithms = config.algorithms.clone();
    algorithms.sort();
    algorithms.dedup();

    let grid = config.sigma2_grid.len();
    let jobs: Vec<(usize, usize)> = (0..config.num_signals)
        .flat_map(|s| (0..grid).map(move |g| (s, g)))
        .collect();
    let per_job: Vec<Vec<CellRecord>> = jobs
        .par_iter()
        .map(|&(sig, g)| run_cell(config, dict, &scalar, &signals[sig], sig, g, &algorithms))
        .collect::<Result<_>>()?;

    let mut cells: Vec<CellRecord> = per_job.into_iter().flatten().collect();
    cells.sort_by_key(|c| (c.algorithm, c.signal_id, c.sigma2_index));
    let records = aggregate(config, &algorithms, &cells);
    Ok(SweepOutput { cells, records })
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    config: &SweepConfig,
    dict: &BlockedDictionary,
    scalar: &BlockedDictionary,
    x: &BlockSparseVector,
    signal_id: usize,
    g: usize,
    algorithms: &[Estimator],
) -> Result<Vec<CellRecord>> {
    let sigma2 = config.sigma2_grid[g];
    let sigma = sigma2.sqrt();
    let support = x.support();
    let scalar_support: Vec<usize> = (0..x.len()).filter(|&j| x.values()[j] != 0.0).collect();
    let clean = dict.apply(x);
    let bound = crb(dict, &support, sigma2, config.k)?.bound;

    let mut errors = vec![Vec::with_capacity(config.trials_per_cell); algorithms.len()];
    let mut hits = vec![0usize; algorithms.len()];
    for t in 0..config.trials_per_cell {
        let seed = derive_seed(&[config.master_seed, TAG_NOISE, signal_id as u64, g as u64, t as u64]);
        let w = noise_vector(clean.len(), &NoiseSpec::gaussian(sigma, seed))?;
        let y: Vec<f64> = clean.iter().zip(&w).map(|(a, b)| a + b).collect();
        for (a, &alg) in algorithms.iter().enumerate() {
            let r = run_estimator(alg, dict, scalar, &y, config.k, &support)?;
            errors[a].push(x.values().iter().zip(r.estimate.values()).map(|(p, q)| (p - q) * (p - q)).sum());
            let truth = if alg.is_scalar() { &scalar_support } else { &support };
            if r.covers(truth) {
                hits[a] += 1;
            }
        }
    }
    algorithms
        .iter()
        .zip(errors)
        .zip(hits)
        .map(|((&alg, errs), hit)| {
            let median = median_squared_error(&errs)?;
            let (lo, hi) = errs
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &e| (a.min(e), b.max(e)));
            Ok(CellRecord {
                algorithm: alg,
                signal_id,
                sigma2_index: g,
                sigma2,
                squared_errors: errs,
                median_sq_err: median,
                min_sq_err: lo,
                max_sq_err: hi,
                crb: bound,
                support_rate: hit as f64 / config.trials_per_cell as f64,
            })
        })
        .collect()
}

fn aggregate(config: &SweepConfig, algorithms: &[Estimator], cells: &[CellRecord]) -> Vec<SweepRecord> {
    let mut out = Vec::new();
    for &alg in algorithms {
        for (g, &sigma2) in config.sigma2_grid.iter().enumerate() {
            let group: Vec<&CellRecord> = cells
                .iter()
                .filter(|c| c.algorithm == alg && c.sigma2_index == g)
                .collect();
            let medians: Vec<f64> = group.iter().map(|c| c.median_sq_err).collect();
            let envelope = medians
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &m| (a.min(m), b.max(m)));
            let crbs: Option<Vec<f64>> = group.iter().map(|c| c.crb).collect();
            let crb_value = crbs.map(|v| v.iter().sum::<f64>() / v.len() as f64);
            let rate = group.iter().map(|c| c.support_rate).sum::<f64>() / group.len() as f64;
            out.push(SweepRecord {
                algorithm: alg,
                sigma2,
                signal_medians: medians,
                envelope,
                crb_value,
                support_recovery_rate: rate,
            });
        }
    }
    out
}

/// Header of the sweep CSV.
pub const SWEEP_CSV_HEADER: [&str; 8] = [
    "algo",
    "signal_id",
    "sigma2",
    "median_sq_err",
    "min_sq_err",
    "max_sq_err",
    "crb",
    "support_rate",
];

/// Writes one CSV row per cell. `signal_id` is 1-based; `min_sq_err` and
/// `max_sq_err` range over the trials of the cell; `crb` is empty when `s < k`.
pub fn write_sweep_csv(cells: &[CellRecord], w: impl Write) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SWEEP_CSV_HEADER)?;
    for c in cells {
        out.write_record([
            c.algorithm.name().to_string(),
            (c.signal_id + 1).to_string(),
            sig6(c.sigma2),
            sig6(c.median_sq_err),
            sig6(c.min_sq_err),
            sig6(c.max_sq_err),
            c.crb.map(sig6).unwrap_or_default(),
            sig6(c.support_rate),
        ])?;
    }
    out.flush()
}

/// Log-log SVG of the per-signal median envelopes with the mean CRB dashed.
pub fn write_sweep_svg(records: &[SweepRecord], mut w: impl Write) -> std::io::Result<()> {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const PAD: f64 = 60.0;
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#7f7f7f"];
    let pos = |v: f64| v > 0.0 && v.is_finite();
    let xs: Vec<f64> = records.iter().map(|r| r.sigma2).filter(|&v| pos(v)).collect();
    let ys: Vec<f64> = records
        .iter()
        .flat_map(|r| [r.envelope.0, r.envelope.1].into_iter().chain(r.crb_value))
        .filter(|&v| pos(v))
        .collect();
    writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#)?;
    writeln!(w, r#"<rect width="{W}" height="{H}" fill="white"/>"#)?;
    if xs.is_empty() || ys.is_empty() {
        return writeln!(w, "</svg>");
    }
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min).log10().floor();
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max).log10().ceil();
        (lo, if hi > lo { hi } else { lo + 1.0 })
    };
    let (x0, x1) = range(&xs);
    let (y0, y1) = range(&ys);
    let px = |v: f64| PAD + (v.log10() - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |v: f64| H - PAD - (v.log10() - y0) / (y1 - y0) * (H - 2.0 * PAD);
    writeln!(
        w,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    )?;
    for e in x0 as i32..=x1 as i32 {
        let x = px(10f64.powi(e));
        writeln!(w, r#"<text x="{x:.1}" y="{}" text-anchor="middle">1e{e}</text>"#, H - PAD + 18.0)?;
    }
    for e in y0 as i32..=y1 as i32 {
        let y = py(10f64.powi(e));
        writeln!(w, r#"<text x="{}" y="{y:.1}" text-anchor="end">1e{e}</text>"#, PAD - 6.0)?;
    }
    writeln!(w, r#"<text x="{}" y="{}" text-anchor="middle">noise variance</text>"#, W / 2.0, H - 15.0)?;

    let mut by_alg: BTreeMap<Estimator, Vec<&SweepRecord>> = BTreeMap::new();
    for r in records {
        by_alg.entry(r.algorithm).or_default().push(r);
    }
    for (n, (alg, rs)) in by_alg.iter().enumerate() {
        let c = colors[n % colors.len()];
        let pts: Vec<&&SweepRecord> = rs.iter().filter(|r| pos(r.sigma2) && pos(r.envelope.0)).collect();
        let upper: Vec<String> = pts.iter().map(|r| format!("{:.1},{:.1}", px(r.sigma2), py(r.envelope.1))).collect();
        let lower: Vec<String> = pts.iter().rev().map(|r| format!("{:.1},{:.1}", px(r.sigma2), py(r.envelope.0))).collect();
        writeln!(
            w,
            r#"<polygon points="{} {}" fill="{c}" fill-opacity="0.2" stroke="{c}"/>"#,
            upper.join(" "),
            lower.join(" ")
        )?;
        writeln!(w, r#"<text x="{}" y="{}" fill="{c}">{alg}</text>"#, W - PAD + 6.0, PAD + 16.0 * n as f64 + 12.0)?;
    }
    if let Some(rs) = by_alg.values().next() {
        let pts: Vec<String> = rs
            .iter()
            .filter_map(|r| r.crb_value.filter(|&v| pos(v) && pos(r.sigma2)).map(|v| format!("{:.1},{:.1}", px(r.sigma2), py(v))))
            .collect();
        if !pts.is_empty() {
            writeln!(w, r#"<polyline points="{}" fill="none" stroke="black" stroke-dasharray="5,4"/>"#, pts.join(" "))?;
        }
    }
    writeln!(w, "</svg>")
}

/// One row of a guarantee table. Metrics left out are measured on a
/// generated dictionary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRow {
    /// Blocks `M`.
    #[serde(rename = "M")]
    pub num_blocks: usize,
    /// Block size `d`.
    #[serde(rename = "d")]
    pub block_size: usize,
    /// Measurements `L`.
    #[serde(rename = "L")]
    pub measurements: usize,
    /// Block sparsity.
    pub k: usize,
    /// Coherence override.
    #[serde(default)]
    pub mu: Option<f64>,
    /// Block coherence override.
    #[serde(default)]
    pub mu_block: Option<f64>,
    /// Sub-coherence override.
    #[serde(default)]
    pub nu: Option<f64>,
}

fn default_confidence() -> f64 {
    0.99
}

/// A guarantee table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    /// Rows in output order.
    pub rows: Vec<TableRow>,
    /// Confidence level of the Gaussian guarantees.
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    /// Probability expression used to pick α.
    #[serde(default)]
    pub form: ProbabilityForm,
    /// Seed for dictionaries and CRB supports.
    #[serde(default)]
    pub seed: u64,
}

/// One computed table row. Guarantees are absent (printed as a dash) when
/// the recovery condition fails even without noise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRecord {
    /// Blocks `M`.
    pub num_blocks: usize,
    /// Block size `d`.
    pub block_size: usize,
    /// Measurements `L`.
    pub measurements: usize,
    /// Block sparsity.
    pub k: usize,
    /// Metrics used.
    pub profile: CoherenceProfile,
    /// Scalar OMP guarantee divided by `σ²`.
    pub omp_guarantee: Option<f64>,
    /// Scalar OMP `σ_max`.
    pub omp_sigma_max: Option<f64>,
    /// BOMP guarantee divided by `σ²`.
    pub bomp_guarantee: Option<f64>,
    /// BOMP `σ_max`.
    pub bomp_sigma_max: Option<f64>,
    /// CRB divided by `σ²` for a random size-`k` support.
    pub crb: f64,
}

/// Guarantee divided by σ² and σ_max, or `None` when no σ satisfies the condition.
fn guarantee_pair(
    profile: &CoherenceProfile,
    k: usize,
    xmin: f64,
    confidence: f64,
    form: ProbabilityForm,
) -> Result<Option<(f64, f64)>> {
    let norms = BlockNorms::new(xmin, xmin)?;
    let r = gaussian_guarantee(profile, k, norms, 0.0, confidence, Algorithm::Bomp, form)?;
    let Some(sigma_max) = r.sigma_max else {
        return Ok(None);
    };
    let alpha = r.alpha.expect("gaussian reports carry alpha");
    Ok(gaussian_error_coefficient(profile, k, alpha)?.map(|g| (g, sigma_max)))
}

/// Computes a guarantee table. Blocks have unit norm and every nonzero entry
/// equals `1/√d`; the scalar rows treat the signal as `k d`-sparse.
/// Dictionaries are generated once per `(L, M, d)` and rows run in parallel.
pub fn guarantee_table(config: &TableConfig) -> Result<Vec<TableRecord>> {
    let mut dims: Vec<(usize, usize, usize)> = config
        .rows
        .iter()
        .map(|r| (r.measurements, r.num_blocks, r.block_size))
        .collect();
    dims.sort();
    dims.dedup();
    let dicts: BTreeMap<(usize, usize, usize), BlockedDictionary> = dims
        .par_iter()
        .map(|&(l, m, d)| {
            let seed = derive_seed(&[config.seed, TAG_TABLE, l as u64, m as u64, d as u64]);
            generate_dictionary(l, m, d, seed).map(|dict| ((l, m, d), dict))
        })
        .collect::<Result<_>>()?;

    config
        .rows
        .par_iter()
        .enumerate()
        .map(|(i, row)| {
            let dict = &dicts[&(row.measurements, row.num_blocks, row.block_size)];
            table_row(config, i, row, dict)
        })
        .collect()
}

fn table_row(config: &TableConfig, index: usize, row: &TableRow, dict: &BlockedDictionary) -> Result<TableRecord> {
    let profile = match (row.mu, row.mu_block, row.nu) {
        (Some(mu), Some(mu_block), nu) => CoherenceProfile::from_metrics(
            mu,
            mu_block,
            nu.unwrap_or(0.0),
            row.measurements,
            row.num_blocks,
            row.block_size,
        )?,
        _ => {
            let measured = coherence_profile(dict)?;
            CoherenceProfile {
                mu: row.mu.unwrap_or(measured.mu),
                mu_block: row.mu_block.unwrap_or(measured.mu_block),
                nu: row.nu.unwrap_or(measured.nu),
                ..measured
            }
        }
    };
    if row.k == 0 || row.k > row.num_blocks || row.k * row.block_size > row.measurements {
        return Err(Error::InvalidArgument(format!(
            "table row {}: k = {} is infeasible for M = {}, d = {}, L = {}",
            index + 1,
            row.k,
            row.num_blocks,
            row.block_size,
            row.measurements
        )));
    }
    let d = row.block_size;
    let bomp = guarantee_pair(&profile, row.k, 1.0, config.confidence, config.form)?;
    let omp = guarantee_pair(
        &profile.scalar(),
        row.k * d,
        1.0 / (d as f64).sqrt(),
        config.confidence,
        config.form,
    )?;
    let mut rng = stream_rng(derive_seed(&[config.seed, TAG_TABLE, index as u64]), Stream::Support);
    let mut support = index::sample(&mut rng, row.num_blocks, row.k).into_vec();
    support.sort_unstable();
    let crb = crb(dict, &support, 1.0, row.k)?.bound.expect("|S| = k");
    Ok(TableRecord {
        num_blocks: row.num_blocks,
        block_size: d,
        measurements: row.measurements,
        k: row.k,
        profile,
        omp_guarantee: omp.map(|p| p.0),
        omp_sigma_max: omp.map(|p| p.1),
        bomp_guarantee: bomp.map(|p| p.0),
        bomp_sigma_max: bomp.map(|p| p.1),
        crb,
    })
}

/// Header of the table CSV, in the column order of the published table.
pub const TABLE_CSV_HEADER: [&str; 11] = [
    "M",
    "d",
    "L",
    "k",
    "mu",
    "mu_block",
    "omp_guarantee_over_sigma2",
    "omp_sigma_max",
    "bomp_guarantee_over_sigma2",
    "bomp_sigma_max",
    "crb_over_sigma2",
];

/// Writes the table as CSV with `---` for unavailable guarantees.
pub fn write_table_csv(records: &[TableRecord], w: impl Write) -> std::io::Result<()> {
    let dash = |v: Option<f64>| v.map(sig6).unwrap_or_else(|| "---".into());
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TABLE_CSV_HEADER)?;
    for r in records {
        out.write_record([
            r.num_blocks.to_string(),
            r.block_size.to_string(),
            r.measurements.to_string(),
            r.k.to_string(),
            sig6(r.profile.mu),
            sig6(r.profile.mu_block),
            dash(r.omp_guarantee),
            dash(r.omp_sigma_max),
            dash(r.bomp_guarantee),
            dash(r.bomp_sigma_max),
            sig6(r.crb),
        ])?;
    }
    out.flush()
}
