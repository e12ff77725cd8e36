mod common;

use bsl_core::coherence::{
    block_coherence, coherence, coherence_profile, gram_bound_report, sub_coherence,
};
use bsl_core::dictgen::generate_dictionary;
use bsl_core::linalg::{spectral_norm, Matrix};
use bsl_core::BlockedDictionary;
use proptest::prelude::*;

use common::*;

/// Metrics by direct pairwise loops: (μ, μ_B, ν).
fn brute_force(dict: &BlockedDictionary) -> (f64, f64, f64) {
    let a = dict.atoms();
    let d = dict.block_size();
    let n = a.cols();
    let cols: Vec<Vec<f64>> = (0..n).map(|j| column(a, j)).collect();
    let (mut mu, mut nu) = (0.0f64, 0.0f64);
    for i in 0..n {
        for j in i + 1..n {
            let v = dot(&cols[i], &cols[j]).abs();
            mu = mu.max(v);
            if i / d == j / d {
                nu = nu.max(v);
            }
        }
    }
    let m = dict.num_blocks();
    let mut mu_b = 0.0f64;
    for bi in 0..m {
        for bj in 0..m {
            if bi == bj {
                continue;
            }
            let g = Matrix::from_fn(d, d, |r, c| dot(&cols[bi * d + r], &cols[bj * d + c]));
            mu_b = mu_b.max(power_iteration(&g) / d as f64);
        }
    }
    (mu, mu_b, nu)
}

#[test]
fn identity_dictionary_is_incoherent() {
    let dict = BlockedDictionary::new(Matrix::identity(6), 2).unwrap();
    let p = coherence_profile(&dict).unwrap();
    assert_eq!((p.mu, p.mu_block, p.nu), (0.0, 0.0, 0.0));
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
fn matches_pairwise_loops() {
    for (seed, (l, m, d)) in [(8, 10, 2), (5, 7, 3), (12, 9, 1), (20, 300, 2)].into_iter().enumerate() {
        let dict = random_dictionary(l, m, d, 40 + seed as u64);
        let p = coherence_profile(&dict).unwrap();
        let (mu, mu_b, nu) = brute_force(&dict);
        assert!((p.mu - mu).abs() < 1e-12, "mu {} vs {mu}", p.mu);
        assert!((p.mu_block - mu_b).abs() < 1e-10, "mu_B {} vs {mu_b}", p.mu_block);
        assert!((p.nu - nu).abs() < 1e-12, "nu {} vs {nu}", p.nu);
    }
}

#[test]
fn scalar_block_coherence_equals_coherence() {
    let dict = random_dictionary(10, 25, 1, 7);
    assert_eq!(block_coherence(&dict).unwrap(), coherence(&dict).unwrap());
    assert_eq!(sub_coherence(&dict), 0.0);
}

#[test]
fn orthonormal_blocks_have_zero_sub_coherence() {
    let dict = generate_dictionary(40, 30, 4, 3).unwrap();
    assert!(sub_coherence(&dict) < 1e-10);
}

#[test]
fn gram_bounds_hold_on_random_dictionary() {
    let dict = generate_dictionary(400, 20, 3, 9).unwrap();
    let r = gram_bound_report(&dict, 3, 100, 1).unwrap();
    assert!(r.holds(1e-10), "{r:?}");
    assert!(r.subdictionary_gram_inverse.is_some());
    let unnormal = random_dictionary(60, 20, 3, 9);
    let r = gram_bound_report(&unnormal, 3, 100, 2).unwrap();
    assert!(r.holds(1e-10), "{r:?}");
}

#[test]
fn gram_bound_on_identity_is_tight() {
    let dict = BlockedDictionary::new(Matrix::identity(8), 2).unwrap();
    let r = gram_bound_report(&dict, 4, 20, 0).unwrap();
    let inv = r.subdictionary_gram_inverse.unwrap();
    assert_eq!(inv.bound, 1.0);
    assert!((inv.worst_observed - 1.0).abs() < 1e-12);
}

#[test]
fn inapplicable_bound_reported_as_absent() {
    let dict = random_dictionary(6, 6, 2, 5);
    let r = gram_bound_report(&dict, 3, 10, 0).unwrap();
    assert!(r.subdictionary_gram_inverse.is_none());
}

#[test]
#[ignore = "full-size dictionary, several seconds in release builds"]
fn benchmark_scale_metrics() {
    let dict = generate_dictionary(3000, 1200, 5, 1).unwrap();
    let p = coherence_profile(&dict).unwrap();
    assert!((p.mu - 0.094).abs() < 0.02, "{p:?}");
    assert!((p.mu_block - 0.026).abs() < 0.01, "{p:?}");
}

fn rotate_block(dict: &BlockedDictionary, block: usize, seed: u64) -> BlockedDictionary {
    let d = dict.block_size();
    // Random orthogonal d x d from QR of a random matrix via Gram–Schmidt.
    let mut q = random_rows(d, d, seed);
    for i in 0..d {
        for j in 0..i {
            let p = dot(&q[i], &q[j]);
            let qj = q[j].clone();
            q[i].iter_mut().zip(&qj).for_each(|(a, b)| *a -= p * b);
        }
        let n = dot(&q[i], &q[i]).sqrt();
        q[i].iter_mut().for_each(|a| *a /= n);
    }
    let a = dict.atoms();
    let out = Matrix::from_fn(a.rows(), a.cols(), |r, c| {
        if c / d != block {
            return a.get(r, c);
        }
        (0..d).map(|t| a.get(r, block * d + t) * q[c % d][t]).sum()
    });
    BlockedDictionary::normalized(out, d).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn metric_ordering(seed in 0u64..100_000, m in 2usize..12, d in 1usize..4) {
        let dict = random_dictionary(3 * d + 2, m, d, seed);
        let p = coherence_profile(&dict).unwrap();
        prop_assert!(p.nu <= p.mu + 1e-12);
        prop_assert!(p.mu_block <= p.mu + 1e-12);
        prop_assert!(p.mu <= 1.0 + 1e-12);
    }

    #[test]
    fn coherence_ignores_sign_flips_and_permutations(seed in 0u64..100_000) {
        let dict = random_dictionary(7, 6, 2, seed);
        let a = dict.atoms();
        let n = a.cols();
        let flipped = Matrix::from_fn(a.rows(), n, |r, c| {
            let src = (c * 5 + 3) % n;
            let sign = if c % 3 == 0 { -1.0 } else { 1.0 };
            sign * a.get(r, src)
        });
        let other = BlockedDictionary::new(flipped, 2).unwrap();
        prop_assert!((coherence(&dict).unwrap() - coherence(&other).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn block_coherence_invariant_under_block_rotation(seed in 0u64..100_000) {
        let dict = generate_dictionary(9, 5, 3, seed).unwrap();
        let rotated = rotate_block(&dict, (seed % 5) as usize, seed + 1);
        let a = block_coherence(&dict).unwrap();
        let b = block_coherence(&rotated).unwrap();
        prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
    }
}

#[test]
fn spectral_norm_of_cross_gram_bounded_by_block_coherence() {
    let dict = generate_dictionary(30, 12, 3, 21).unwrap();
    let mu_b = block_coherence(&dict).unwrap();
    for i in 0..12 {
        for j in 0..12 {
            if i != j {
                let g = dict.block_columns(i).unwrap().tr_mul(&dict.block_columns(j).unwrap()).unwrap();
                assert!(spectral_norm(&g).unwrap() <= 3.0 * mu_b + 1e-12);
            }
        }
    }
}
