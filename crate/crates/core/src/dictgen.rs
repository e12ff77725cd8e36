//! Seeded random dictionaries, block-sparse signals and noisy measurements.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, BlockSparseVector, BlockedDictionary, Matrix};
use crate::rng::{stream_rng, Stream};

const MAX_BLOCK_RETRIES: usize = 3;

fn gaussian(rng: &mut ChaCha20Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Random `L x Md` dictionary whose blocks each have orthonormal columns.
///
/// Entries are i.i.d. standard normal; each block is then orthonormalized by
/// modified Gram–Schmidt with one re-orthogonalization pass. Blocks are not
/// orthogonal to each other, so `M d` may exceed `L`.
pub fn generate_dictionary(
    measurements: usize,
    num_blocks: usize,
    block_size: usize,
    seed: u64,
) -> Result<BlockedDictionary> {
    let (l, d) = (measurements, block_size);
    if l == 0 || num_blocks == 0 || d == 0 {
        return Err(Error::invalid("L, M and d must be positive"));
    }
    if d > l {
        return Err(Error::invalid(format!(
            "block size {d} exceeds L = {l}; blocks cannot be orthonormal"
        )));
    }
    let mut rng = stream_rng(seed, Stream::Dictionary);
    let mut data = Vec::with_capacity(l * d * num_blocks);
    let mut block = vec![0.0; l * d];
    for b in 0..num_blocks {
        let mut attempt = 0;
        loop {
            block.iter_mut().for_each(|v| *v = gaussian(&mut rng));
            if orthonormalize_block(&mut block, l, d) {
                break;
            }
            attempt += 1;
            if attempt > MAX_BLOCK_RETRIES {
                return Err(Error::Solver(format!(
                    "block {} stayed rank deficient after {MAX_BLOCK_RETRIES} redraws",
                    b + 1
                )));
            }
        }
        data.extend_from_slice(&block);
    }
    BlockedDictionary::new(Matrix::from_col_major(l, d * num_blocks, data)?, d)
}

/// MGS with re-orthogonalization on `d` contiguous columns of length `l`.
/// Returns `false` if a column loses almost all of its norm.
fn orthonormalize_block(block: &mut [f64], l: usize, d: usize) -> bool {
    for j in 0..d {
        let (done, rest) = block.split_at_mut(j * l);
        let v = &mut rest[..l];
        let original = norm2(v);
        for _pass in 0..2 {
            for p in 0..j {
                let q = &done[p * l..(p + 1) * l];
                let h = dot(q, v);
                for (vi, &qi) in v.iter_mut().zip(q) {
                    *vi -= h * qi;
                }
            }
        }
        let n = norm2(v);
        if !(n > 1e-10 * original) {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= n);
    }
    true
}

/// Within-block shape of a generated signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SignalProfile {
    /// One entry carries the whole block norm.
    Spike,
    /// All `d` entries equal `norm / √d`.
    Flat,
    /// Spike or flat, chosen per block.
    Mixed,
    /// Uniform direction on the `d`-sphere.
    Random,
}

impl SignalProfile {
    /// All profiles, in a fixed order.
    pub const ALL: [SignalProfile; 4] = [
        SignalProfile::Spike,
        SignalProfile::Flat,
        SignalProfile::Mixed,
        SignalProfile::Random,
    ];

    /// Lowercase name.
    pub fn name(self) -> &'static str {
        match self {
            SignalProfile::Spike => "spike",
            SignalProfile::Flat => "flat",
            SignalProfile::Mixed => "mixed",
            SignalProfile::Random => "random",
        }
    }
}

impl core::str::FromStr for SignalProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SignalProfile::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown signal profile `{s}`")))
    }
}

/// Parameters of a random block-sparse signal.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SignalSpec {
    /// Blocks `M`.
    pub num_blocks: usize,
    /// Block size `d`.
    pub block_size: usize,
    /// Nonzero blocks `s`.
    pub sparsity: usize,
    /// Smallest nonzero block norm.
    pub xmin_norm: f64,
    /// Largest nonzero block norm.
    pub xmax_norm: f64,
    /// Within-block shape.
    pub profile: SignalProfile,
    /// Seed for the support and shape streams.
    pub seed: u64,
}

impl SignalSpec {
    /// Checks that the parameters are consistent.
    pub fn validate(&self) -> Result<()> {
        if self.num_blocks == 0 || self.block_size == 0 {
            return Err(Error::invalid("M and d must be positive"));
        }
        if self.sparsity > self.num_blocks {
            return Err(Error::invalid(format!(
                "sparsity {} exceeds M = {}",
                self.sparsity, self.num_blocks
            )));
        }
        if !(self.xmin_norm > 0.0) || !self.xmax_norm.is_finite() || self.xmin_norm > self.xmax_norm {
            return Err(Error::invalid(format!(
                "need 0 < xmin <= xmax, got xmin = {}, xmax = {}",
                self.xmin_norm, self.xmax_norm
            )));
        }
        if self.sparsity < 2 && self.sparsity > 0 && self.xmin_norm != self.xmax_norm {
            return Err(Error::invalid(
                "a single nonzero block cannot realize distinct xmin and xmax",
            ));
        }
        Ok(())
    }
}

/// Draws a signal with exactly `s` nonzero blocks.
///
/// The support is uniform among `s`-subsets. One block has norm `xmin`, one has
/// norm `xmax` and the rest are uniform in between, assigned to support
/// positions in random order.
pub fn generate_signal(spec: &SignalSpec) -> Result<BlockSparseVector> {
    spec.validate()?;
    let (m, d, s) = (spec.num_blocks, spec.block_size, spec.sparsity);
    let mut x = BlockSparseVector::zeros(m, d);
    if s == 0 {
        return Ok(x);
    }
    let mut support_rng = stream_rng(spec.seed, Stream::Support);
    let mut support = index::sample(&mut support_rng, m, s).into_vec();
    support.sort_unstable();

    let mut rng = stream_rng(spec.seed, Stream::Shape);
    let mut norms = Vec::with_capacity(s);
    norms.push(spec.xmin_norm);
    if s >= 2 {
        norms.push(spec.xmax_norm);
    }
    while norms.len() < s {
        norms.push(rng.random_range(spec.xmin_norm..=spec.xmax_norm));
    }
    norms.shuffle(&mut rng);

    for (&i, &norm) in support.iter().zip(&norms) {
        let shape = match spec.profile {
            SignalProfile::Mixed => {
                if rng.random_bool(0.5) {
                    SignalProfile::Spike
                } else {
                    SignalProfile::Flat
                }
            }
            p => p,
        };
        let blk = x.block_mut(i);
        match shape {
            SignalProfile::Spike => {
                let pos = rng.random_range(0..d);
                blk[pos] = norm;
            }
            SignalProfile::Flat => {
                let v = norm / (d as f64).sqrt();
                blk.iter_mut().for_each(|e| *e = v);
            }
            _ => loop {
                blk.iter_mut().for_each(|e| *e = gaussian(&mut rng));
                let n = norm2(blk);
                if n > 0.0 {
                    blk.iter_mut().for_each(|e| *e *= norm / n);
                    break;
                }
            },
        }
    }
    Ok(x)
}

/// Noise model for [`measure`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "model", rename_all = "snake_case"))]
pub enum NoiseModel {
    /// White Gaussian noise with per-entry standard deviation `sigma`.
    Gaussian {
        /// Standard deviation.
        sigma: f64,
    },
    /// A random point on the sphere `‖w‖₂ = epsilon`.
    ///
    /// This probes bounded-noise guarantees with random directions; it does not
    /// construct the worst-case `w`.
    AdversarialBounded {
        /// Euclidean radius.
        epsilon: f64,
    },
}

/// A noise model plus the seed of its stream.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseSpec {
    /// Distribution of `w`.
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub model: NoiseModel,
    /// Seed of the noise stream.
    pub seed: u64,
}

impl NoiseSpec {
    /// Gaussian noise with standard deviation `sigma`.
    pub fn gaussian(sigma: f64, seed: u64) -> Self {
        NoiseSpec {
            model: NoiseModel::Gaussian { sigma },
            seed,
        }
    }

    /// Noise of Euclidean norm exactly `epsilon`.
    pub fn bounded(epsilon: f64, seed: u64) -> Self {
        NoiseSpec {
            model: NoiseModel::AdversarialBounded { epsilon },
            seed,
        }
    }
}

/// A length-`len` noise vector.
pub fn noise_vector(len: usize, noise: &NoiseSpec) -> Result<Vec<f64>> {
    let mut rng = stream_rng(noise.seed, Stream::Noise);
    match noise.model {
        NoiseModel::Gaussian { sigma } => {
            if !(sigma >= 0.0) || !sigma.is_finite() {
                return Err(Error::invalid(format!("sigma must be finite and >= 0, got {sigma}")));
            }
            if sigma == 0.0 {
                return Ok(vec![0.0; len]);
            }
            Ok((0..len).map(|_| sigma * gaussian(&mut rng)).collect())
        }
        NoiseModel::AdversarialBounded { epsilon } => {
            if !(epsilon >= 0.0) || !epsilon.is_finite() {
                return Err(Error::invalid(format!(
                    "epsilon must be finite and >= 0, got {epsilon}"
                )));
            }
            if epsilon == 0.0 || len == 0 {
                return Ok(vec![0.0; len]);
            }
            loop {
                let w: Vec<f64> = (0..len).map(|_| gaussian(&mut rng)).collect();
                let n = norm2(&w);
                if n > 0.0 {
                    return Ok(w.into_iter().map(|v| v * (epsilon / n)).collect());
                }
            }
        }
    }
}

/// `y = D x + w`.
pub fn measure(dict: &BlockedDictionary, x: &BlockSparseVector, noise: &NoiseSpec) -> Result<Vec<f64>> {
    if x.len() != dict.signal_len() || x.block_size() != dict.block_size() {
        return Err(Error::invalid(format!(
            "signal of length {} (d = {}) does not match dictionary N = {} (d = {})",
            x.len(),
            x.block_size(),
            dict.signal_len(),
            dict.block_size()
        )));
    }
    let mut y = dict.apply(x);
    let w = noise_vector(y.len(), noise)?;
    for (yi, wi) in y.iter_mut().zip(w) {
        *yi += wi;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_block_wider_than_measurements() {
        assert!(generate_dictionary(3, 2, 4, 0).is_err());
    }

    #[test]
    fn single_flat_block() {
        let spec = SignalSpec {
            num_blocks: 6,
            block_size: 4,
            sparsity: 1,
            xmin_norm: 1.0,
            xmax_norm: 1.0,
            profile: SignalProfile::Flat,
            seed: 3,
        };
        let x = generate_signal(&spec).unwrap();
        let supp = x.support();
        assert_eq!(supp.len(), 1);
        assert!(x.block(supp[0]).iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn single_block_with_distinct_extremes_is_invalid() {
        let spec = SignalSpec {
            num_blocks: 6,
            block_size: 2,
            sparsity: 1,
            xmin_norm: 1.0,
            xmax_norm: 2.0,
            profile: SignalProfile::Spike,
            seed: 0,
        };
        assert!(generate_signal(&spec).is_err());
    }

    #[test]
    fn zero_noise_is_exact() {
        let dict = generate_dictionary(8, 4, 2, 1).unwrap();
        let spec = SignalSpec {
            num_blocks: 4,
            block_size: 2,
            sparsity: 2,
            xmin_norm: 1.0,
            xmax_norm: 2.0,
            profile: SignalProfile::Random,
            seed: 9,
        };
        let x = generate_signal(&spec).unwrap();
        let clean = dict.apply(&x);
        assert_eq!(measure(&dict, &x, &NoiseSpec::gaussian(0.0, 5)).unwrap(), clean);
        assert_eq!(measure(&dict, &x, &NoiseSpec::bounded(0.0, 5)).unwrap(), clean);
    }

    #[test]
    fn bounded_noise_has_exact_norm() {
        let w = noise_vector(50, &NoiseSpec::bounded(0.37, 11)).unwrap();
        assert!((norm2(&w) - 0.37).abs() < 1e-12);
    }

    #[test]
    fn profile_names_round_trip() {
        for p in SignalProfile::ALL {
            assert_eq!(p.name().parse::<SignalProfile>().unwrap(), p);
        }
        assert!("wide".parse::<SignalProfile>().is_err());
    }
}
