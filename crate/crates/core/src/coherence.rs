//! Coherence, block coherence and sub-coherence of a blocked dictionary.
//!
//! All three metrics come out of one pass over the upper triangle of the Gram
//! matrix `DᵀD`, computed in block-aligned column tiles so that memory stays at
//! `O(N * tile)` even for the 3000 x 6000 dictionaries of the benchmark tables.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, BlockedDictionary, Matrix};
use crate::rng::{stream_rng, Stream};

/// Target tile width (columns) for Gram scans.
const TILE_COLS: usize = 512;

/// `(μ, μ_B, ν)` of a dictionary together with its dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoherenceProfile {
    /// Largest `|⟨d_i, d_j⟩|` over distinct atoms.
    pub mu: f64,
    /// Largest `‖D[i]ᵀ D[j]‖ / d` over distinct blocks.
    pub mu_block: f64,
    /// Largest `|⟨d_i, d_j⟩|` over distinct atoms of the same block.
    pub nu: f64,
    /// Measurements `L`.
    pub measurements: usize,
    /// Blocks `M`.
    pub num_blocks: usize,
    /// Block size `d`.
    pub block_size: usize,
}

impl CoherenceProfile {
    /// Profile from known metric values.
    pub fn from_metrics(
        mu: f64,
        mu_block: f64,
        nu: f64,
        measurements: usize,
        num_blocks: usize,
        block_size: usize,
    ) -> Result<Self> {
        for (name, v) in [("mu", mu), ("mu_block", mu_block), ("nu", nu)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        if num_blocks == 0 || block_size == 0 || measurements == 0 {
            return Err(Error::invalid("dimensions must be positive"));
        }
        Ok(CoherenceProfile {
            mu,
            mu_block,
            nu,
            measurements,
            num_blocks,
            block_size,
        })
    }

    /// The same dictionary viewed with block size 1: `μ_B = μ`, `ν = 0`, `M = N`.
    pub fn scalar(&self) -> Self {
        CoherenceProfile {
            mu: self.mu,
            mu_block: self.mu,
            nu: 0.0,
            measurements: self.measurements,
            num_blocks: self.signal_len(),
            block_size: 1,
        }
    }

    /// Parameter length `N = M d`.
    pub fn signal_len(&self) -> usize {
        self.num_blocks * self.block_size
    }

    /// `(d − 1) ν`, the intra-block Gershgorin radius.
    pub fn intra_block_spread(&self) -> f64 {
        (self.block_size as f64 - 1.0) * self.nu
    }

    /// `1 − (d − 1)ν − (k − 1) d μ_B`, the lower eigenvalue bound for any `D_IᵀD_I`
    /// with `|I| <= k`. Nonpositive values mean the bound is vacuous.
    pub fn gram_eigen_floor(&self, k: usize) -> f64 {
        let d = self.block_size as f64;
        1.0 - self.intra_block_spread() - (k as f64 - 1.0) * d * self.mu_block
    }
}

#[derive(Default)]
struct ScanResult {
    mu: f64,
    mu_block: f64,
    nu: f64,
}

/// Walks the strict upper triangle of `DᵀD` tile by tile.
fn scan(dict: &BlockedDictionary, want_block: bool) -> ScanResult {
    let atoms = dict.atoms();
    let n = dict.signal_len();
    let d = dict.block_size();
    let tile = d * (TILE_COLS / d).max(1);
    let mut out = ScanResult::default();
    let mut sub = Matrix::zeros(d, d);

    let mut a0 = 0;
    while a0 < n {
        let a1 = (a0 + tile).min(n);
        let g = linalg::cross_gram(atoms, a0, a0, a1);
        // Column c of the tile is atom a0 + c; row r is atom a0 + r.
        for c in 0..(a1 - a0) {
            let col = g.column(c);
            let block_c = (a0 + c) / d;
            let block_end = (block_c + 1) * d - a0;
            for (r, &v) in col.iter().enumerate().skip(c + 1) {
                let v = v.abs();
                if v > out.mu {
                    out.mu = v;
                }
                if r < block_end && v > out.nu {
                    out.nu = v;
                }
            }
        }
        if want_block {
            for bj in (a0 / d)..(a1 / d) {
                let cj = bj * d - a0;
                for bi in (bj + 1)..dict.num_blocks() {
                    let ri = bi * d - a0;
                    let mut fro2 = 0.0;
                    for c in 0..d {
                        for r in 0..d {
                            let v = g.get(ri + r, cj + c);
                            fro2 += v * v;
                        }
                    }
                    // ‖B‖ <= ‖B‖_F, so blocks that cannot raise the max are skipped.
                    if fro2.sqrt() / d as f64 <= out.mu_block {
                        continue;
                    }
                    for c in 0..d {
                        for r in 0..d {
                            sub.set(r, c, g.get(ri + r, cj + c));
                        }
                    }
                    let s = linalg::spectral_norm(&sub).expect("non-empty block") / d as f64;
                    if s > out.mu_block {
                        out.mu_block = s;
                    }
                }
            }
        }
        a0 = a1;
    }
    out
}

/// Coherence `μ = max_{i≠j} |⟨d_i, d_j⟩|`.
pub fn coherence(dict: &BlockedDictionary) -> Result<f64> {
    if dict.signal_len() < 2 {
        return Err(Error::invalid("coherence needs at least two atoms"));
    }
    Ok(scan(dict, false).mu)
}

/// Block coherence `μ_B = max_{i≠j} ‖D[i]ᵀ D[j]‖ / d`.
pub fn block_coherence(dict: &BlockedDictionary) -> Result<f64> {
    if dict.num_blocks() < 2 {
        return Err(Error::invalid("block coherence needs at least two blocks"));
    }
    Ok(scan(dict, true).mu_block)
}

/// Sub-coherence: the largest inner product between distinct atoms of one block.
///
/// Zero when `d = 1`.
pub fn sub_coherence(dict: &BlockedDictionary) -> f64 {
    let d = dict.block_size();
    let mut nu: f64 = 0.0;
    for i in 0..dict.num_blocks() {
        let blk = dict.block_slice(i);
        let l = dict.measurements();
        for p in 0..d {
            for q in p + 1..d {
                let v = linalg::dot(&blk[p * l..(p + 1) * l], &blk[q * l..(q + 1) * l]).abs();
                nu = nu.max(v);
            }
        }
    }
    nu
}

/// All three metrics in one Gram pass.
pub fn coherence_profile(dict: &BlockedDictionary) -> Result<CoherenceProfile> {
    if dict.num_blocks() < 2 {
        return Err(Error::invalid("coherence profile needs at least two blocks"));
    }
    let s = scan(dict, true);
    Ok(CoherenceProfile {
        mu: s.mu,
        mu_block: s.mu_block,
        nu: s.nu,
        measurements: dict.measurements(),
        num_blocks: dict.num_blocks(),
        block_size: dict.block_size(),
    })
}

/// One eigenvalue bound checked against sampled index sets.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundCheck {
    /// Right-hand side implied by the coherence profile.
    pub bound: f64,
    /// Largest left-hand side observed.
    pub worst_observed: f64,
    /// `bound − worst_observed`; negative means the bound was violated.
    pub slack: f64,
}

impl BoundCheck {
    fn new(bound: f64) -> Self {
        BoundCheck {
            bound,
            worst_observed: 0.0,
            slack: bound,
        }
    }

    fn observe(&mut self, v: f64) {
        if v > self.worst_observed {
            self.worst_observed = v;
            self.slack = self.bound - v;
        }
    }
}

/// Outcome of [`gram_bound_report`]. `None` marks a bound whose denominator is
/// nonpositive, i.e. inapplicable for this profile.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GramBoundReport {
    /// Metrics the bounds were derived from.
    pub profile: CoherenceProfile,
    /// Largest sampled support size.
    pub k: usize,
    /// Number of sampled index sets.
    pub trials: usize,
    /// `‖D[i]ᵀD[j]‖ <= d μ_B` for `i ≠ j`.
    pub cross_block: BoundCheck,
    /// `‖D[i]ᵀD[i]‖ <= 1 + (d − 1)ν`.
    pub block_gram: BoundCheck,
    /// `‖(D[i]ᵀD[i])⁻¹‖ <= 1 / (1 − (d − 1)ν)`.
    pub block_gram_inverse: Option<BoundCheck>,
    /// `‖(D_IᵀD_I)⁻¹‖ <= 1 / (1 − (d − 1)ν − (k − 1) d μ_B)`.
    pub subdictionary_gram_inverse: Option<BoundCheck>,
}

impl GramBoundReport {
    /// Whether every applicable bound held, allowing `tol` of rounding.
    pub fn holds(&self, tol: f64) -> bool {
        [
            Some(self.cross_block),
            Some(self.block_gram),
            self.block_gram_inverse,
            self.subdictionary_gram_inverse,
        ]
        .into_iter()
        .flatten()
        .all(|c| c.slack >= -tol)
    }
}

/// Samples `trials` block sets of size `1..=k` and checks the Gram-matrix norm
/// bounds implied by `(μ_B, ν)` on each of them.
///
/// A single violated bound falsifies the metric computation; exhaustive
/// enumeration of all `C(M, k)` sets is out of reach at realistic sizes.
pub fn gram_bound_report(
    dict: &BlockedDictionary,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<GramBoundReport> {
    let profile = coherence_profile(dict)?;
    gram_bound_report_with(dict, &profile, k, trials, seed)
}

/// [`gram_bound_report`] with a precomputed profile.
pub fn gram_bound_report_with(
    dict: &BlockedDictionary,
    profile: &CoherenceProfile,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<GramBoundReport> {
    let d = dict.block_size();
    let m = dict.num_blocks();
    if k == 0 || k > m {
        return Err(Error::invalid(format!("k must be in 1..={m}, got {k}")));
    }
    if k * d > dict.measurements() {
        return Err(Error::invalid(format!(
            "k d = {} exceeds L = {}",
            k * d,
            dict.measurements()
        )));
    }
    let spread = profile.intra_block_spread();
    let mut cross = BoundCheck::new(d as f64 * profile.mu_block);
    let mut gram = BoundCheck::new(1.0 + spread);
    let mut gram_inv = (1.0 - spread > 0.0).then(|| BoundCheck::new(1.0 / (1.0 - spread)));
    let floor = profile.gram_eigen_floor(k);
    let mut sub_inv = (floor > 0.0).then(|| BoundCheck::new(1.0 / floor));

    let mut rng = stream_rng(seed, Stream::Sampling);
    for _ in 0..trials {
        let set = sample_block_set(m, k, &mut rng);
        for (n, &i) in set.iter().enumerate() {
            let bi = dict.block_columns(i)?;
            let sv = linalg::singular_values(&bi)?;
            let (hi, lo) = (sv[0], sv[sv.len() - 1]);
            gram.observe(hi * hi);
            if let Some(c) = gram_inv.as_mut() {
                c.observe(1.0 / (lo * lo));
            }
            for &j in &set[n + 1..] {
                let bj = dict.block_columns(j)?;
                cross.observe(linalg::spectral_norm(&bi.tr_mul(&bj)?)?);
            }
        }
        if let Some(c) = sub_inv.as_mut() {
            let sv = linalg::singular_values(&dict.subdictionary(&set)?)?;
            let lo = sv[sv.len() - 1];
            c.observe(1.0 / (lo * lo));
        }
    }
    Ok(GramBoundReport {
        profile: *profile,
        k,
        trials,
        cross_block: cross,
        block_gram: gram,
        block_gram_inverse: gram_inv,
        subdictionary_gram_inverse: sub_inv,
    })
}

/// A uniformly sized, uniformly drawn ascending set of `1..=k` blocks.
fn sample_block_set(m: usize, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let size = rng.random_range(1..=k);
    let mut set = index::sample(rng, m, size).into_vec();
    set.sort_unstable();
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    #[test]
    fn identity_has_zero_coherence() {
        let dict = BlockedDictionary::new(Matrix::identity(6), 2).unwrap();
        let p = coherence_profile(&dict).unwrap();
        assert_eq!((p.mu, p.mu_block, p.nu), (0.0, 0.0, 0.0));
    }

    #[test]
    fn identical_atoms_have_unit_coherence() {
        let mut m = Matrix::zeros(2, 2);
        m.set(0, 0, 1.0);
        m.set(0, 1, 1.0);
        let dict = BlockedDictionary::new(m, 1).unwrap();
        assert_eq!(coherence(&dict).unwrap(), 1.0);
    }

    #[test]
    fn hand_built_block_sub_coherence() {
        // One block of two atoms with inner product 0.3, then an orthogonal block.
        let s = (1.0f64 - 0.09).sqrt();
        let m = Matrix::from_row_major(
            4,
            4,
            &[
                1.0, 0.3, 0.0, 0.0, 0.0, s, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0,
            ],
        )
        .unwrap();
        let dict = BlockedDictionary::new(m, 2).unwrap();
        assert!((sub_coherence(&dict) - 0.3).abs() < 1e-15);
        assert!((coherence_profile(&dict).unwrap().nu - 0.3).abs() < 1e-15);
    }

    #[test]
    fn degenerate_sizes_rejected() {
        let one = BlockedDictionary::new(Matrix::identity(1), 1).unwrap();
        assert!(coherence(&one).is_err());
        let single_block = BlockedDictionary::new(Matrix::identity(3), 3).unwrap();
        assert!(block_coherence(&single_block).is_err());
        assert_eq!(sub_coherence(&single_block), 0.0);
    }

    #[test]
    fn identity_inverse_gram_bound_is_tight() {
        let dict = BlockedDictionary::new(Matrix::identity(8), 2).unwrap();
        let r = gram_bound_report(&dict, 3, 20, 1).unwrap();
        let c = r.subdictionary_gram_inverse.unwrap();
        assert!((c.worst_observed - 1.0).abs() < 1e-14 && c.bound == 1.0);
        assert!(r.holds(1e-12));
    }
}
