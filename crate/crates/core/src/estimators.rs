//! Greedy block-sparse estimators, the support oracle and an exhaustive ML search.
//!
//! Correlation ties are broken toward the lowest block index so that every
//! estimator is a deterministic function of its inputs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, check_block_set, BlockSparseVector, BlockedDictionary};

/// Largest number of supports [`exhaustive_ml`] will enumerate.
pub const ML_MAX_SUPPORTS: u64 = 1_000_000;

/// Output of an estimator.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimateResult {
    /// The estimate; zero outside `selected_support`.
    pub estimate: BlockSparseVector,
    /// Chosen blocks: selection order for BOMP, correlation rank for BTH,
    /// ascending for the oracle and ML.
    pub selected_support: Vec<usize>,
    /// `‖y − D x̂‖₂`.
    pub residual_norm: f64,
    /// Iterations performed.
    pub iterations: usize,
    /// Residual norm after each iteration (a single entry for one-shot methods).
    pub residual_history: Vec<f64>,
}

impl EstimateResult {
    /// Selected blocks in ascending order.
    pub fn support_sorted(&self) -> Vec<usize> {
        let mut s = self.selected_support.clone();
        s.sort_unstable();
        s
    }

    /// Whether every block of `support` was selected.
    pub fn covers(&self, support: &[usize]) -> bool {
        support.iter().all(|i| self.selected_support.contains(i))
    }
}

fn check_problem(dict: &BlockedDictionary, y: &[f64], k: usize) -> Result<()> {
    let m = dict.num_blocks();
    if k == 0 || k > m {
        return Err(Error::invalid(format!("k must be in 1..={m}, got {k}")));
    }
    if k * dict.block_size() > dict.measurements() {
        return Err(Error::invalid(format!(
            "k d = {} exceeds L = {}",
            k * dict.block_size(),
            dict.measurements()
        )));
    }
    if y.len() != dict.measurements() {
        return Err(Error::invalid(format!(
            "observation has length {}, dictionary has {} rows",
            y.len(),
            dict.measurements()
        )));
    }
    Ok(())
}

fn residual(dict: &BlockedDictionary, y: &[f64], x: &BlockSparseVector) -> Vec<f64> {
    let fit = dict.apply(x);
    y.iter().zip(fit).map(|(a, b)| a - b).collect()
}

fn sorted(set: &[usize]) -> Vec<usize> {
    let mut s = set.to_vec();
    s.sort_unstable();
    s
}

/// Block thresholding: keep the `k` blocks most correlated with `y`, then fit
/// by least squares on them.
pub fn bth(dict: &BlockedDictionary, y: &[f64], k: usize) -> Result<EstimateResult> {
    check_problem(dict, y, k)?;
    let rho = dict.block_correlations(y);
    let mut order: Vec<usize> = (0..rho.len()).collect();
    order.sort_by(|&a, &b| rho[b].total_cmp(&rho[a]).then(a.cmp(&b)));
    order.truncate(k);
    let estimate = linalg::restricted_least_squares(dict, &sorted(&order), y)?;
    let r = linalg::norm2(&residual(dict, y, &estimate));
    Ok(EstimateResult {
        estimate,
        selected_support: order,
        residual_norm: r,
        iterations: 1,
        residual_history: vec![r],
    })
}

/// Block orthogonal matching pursuit, run for exactly `k` iterations.
///
/// Each iteration picks the not-yet-selected block with the largest residual
/// correlation, refits by least squares on all selected blocks and updates the
/// residual. A block is never selected twice.
pub fn bomp(dict: &BlockedDictionary, y: &[f64], k: usize) -> Result<EstimateResult> {
    check_problem(dict, y, k)?;
    let m = dict.num_blocks();
    let mut chosen = vec![false; m];
    let mut selected = Vec::with_capacity(k);
    let mut history = Vec::with_capacity(k);
    let mut r = y.to_vec();
    let mut estimate = BlockSparseVector::zeros(m, dict.block_size());
    for _ in 0..k {
        let rho = dict.block_correlations(&r);
        let mut best: Option<usize> = None;
        for (i, &v) in rho.iter().enumerate() {
            if chosen[i] {
                continue;
            }
            if best.is_none_or(|b| v > rho[b]) {
                best = Some(i);
            }
        }
        let i = best.expect("k <= M leaves an unselected block");
        chosen[i] = true;
        selected.push(i);
        estimate = linalg::restricted_least_squares(dict, &sorted(&selected), y)?;
        r = residual(dict, y, &estimate);
        history.push(linalg::norm2(&r));
    }
    Ok(EstimateResult {
        estimate,
        selected_support: selected,
        residual_norm: *history.last().expect("k >= 1"),
        iterations: k,
        residual_history: history,
    })
}

/// Scalar OMP: BOMP on the same atoms with block size 1.
pub fn omp(dict: &BlockedDictionary, y: &[f64], k: usize) -> Result<EstimateResult> {
    bomp(&as_scalar(dict)?, y, k)
}

/// Scalar thresholding: BTH on the same atoms with block size 1.
pub fn thresholding(dict: &BlockedDictionary, y: &[f64], k: usize) -> Result<EstimateResult> {
    bth(&as_scalar(dict)?, y, k)
}

fn as_scalar(dict: &BlockedDictionary) -> Result<BlockedDictionary> {
    if dict.block_size() == 1 {
        Ok(dict.clone())
    } else {
        dict.with_block_size(1)
    }
}

/// Least squares on the true support `support` (ascending).
pub fn oracle(dict: &BlockedDictionary, y: &[f64], support: &[usize]) -> Result<EstimateResult> {
    check_block_set(support, dict.num_blocks())?;
    let estimate = linalg::restricted_least_squares(dict, support, y)?;
    let r = linalg::norm2(&residual(dict, y, &estimate));
    Ok(EstimateResult {
        estimate,
        selected_support: support.to_vec(),
        residual_norm: r,
        iterations: 0,
        residual_history: vec![r],
    })
}

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Maximum-likelihood support search by enumerating every `k`-block support.
///
/// Only usable at test scale; refuses more than [`ML_MAX_SUPPORTS`] supports.
/// Ties go to the lexicographically smallest support.
pub fn exhaustive_ml(dict: &BlockedDictionary, y: &[f64], k: usize) -> Result<EstimateResult> {
    check_problem(dict, y, k)?;
    let m = dict.num_blocks();
    let count = binomial(m, k);
    if count > ML_MAX_SUPPORTS {
        return Err(Error::invalid(format!(
            "exhaustive ML over C({m}, {k}) = {count} supports exceeds the {ML_MAX_SUPPORTS} limit; use it on test-scale problems only"
        )));
    }
    let mut set: Vec<usize> = (0..k).collect();
    let mut best: Option<(f64, Vec<usize>, BlockSparseVector)> = None;
    loop {
        let x = linalg::restricted_least_squares(dict, &set, y)?;
        let r = linalg::norm2(&residual(dict, y, &x));
        if best.as_ref().is_none_or(|(b, _, _)| r < *b) {
            best = Some((r, set.clone(), x));
        }
        if !next_combination(&mut set, m) {
            break;
        }
    }
    let (r, support, estimate) = best.expect("at least one support");
    Ok(EstimateResult {
        estimate,
        selected_support: support,
        residual_norm: r,
        iterations: count as usize,
        residual_history: vec![r],
    })
}

/// Advances an ascending `k`-subset of `0..n` in lexicographic order.
fn next_combination(set: &mut [usize], n: usize) -> bool {
    let k = set.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if set[i] < n - k + i {
            set[i] += 1;
            for j in i + 1..k {
                set[j] = set[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
