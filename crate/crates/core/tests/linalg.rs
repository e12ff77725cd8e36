mod common;

use bsl_core::linalg::{check_block_set, restricted_least_squares, spectral_norm, Matrix};
use bsl_core::{BlockedDictionary, Error};
use proptest::prelude::*;

use common::*;

#[test]
fn block_columns_identity_partition() {
    let dict = BlockedDictionary::new(Matrix::identity(4), 2).unwrap();
    let b = dict.block_columns(1).unwrap();
    assert_eq!(column(&b, 0), vec![0.0, 0.0, 1.0, 0.0]);
    assert_eq!(column(&b, 1), vec![0.0, 0.0, 0.0, 1.0]);
    assert!(dict.block_columns(2).is_err());
}

#[test]
fn block_columns_match_index_arithmetic() {
    let dict = random_dictionary(6, 3, 2, 11);
    for i in 0..3 {
        let b = dict.block_columns(i).unwrap();
        for c in 0..2 {
            assert_eq!(column(&b, c), column(dict.atoms(), i * 2 + c));
        }
    }
}

#[test]
fn subdictionary_matches_column_gather() {
    let dict = random_dictionary(6, 4, 2, 12);
    let sub = dict.subdictionary(&[0, 2]).unwrap();
    let want = [0, 1, 4, 5];
    for (c, &j) in want.iter().enumerate() {
        assert_eq!(column(&sub, c), column(dict.atoms(), j));
    }
    assert!(dict.subdictionary(&[2, 0]).is_err());
    assert!(dict.subdictionary(&[1, 1]).is_err());
}

#[test]
fn block_set_errors_are_one_based() {
    let err = check_block_set(&[0, 5], 4).unwrap_err();
    assert!(err.to_string().contains('6'), "{err}");
}

#[test]
fn least_squares_recovers_consistent_system() {
    let dict = random_dictionary(12, 6, 2, 13);
    let set = [1, 4];
    let c = [0.5, -1.5, 2.0, 0.25];
    let mut x = vec![0.0; 12];
    x[2..4].copy_from_slice(&c[..2]);
    x[8..10].copy_from_slice(&c[2..]);
    let y = dict.apply(&bsl_core::BlockSparseVector::new(x.clone(), 2).unwrap());
    let v = restricted_least_squares(&dict, &set, &y).unwrap();
    for (a, b) in v.values().iter().zip(&x) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn least_squares_matches_normal_equations() {
    for seed in 0..10 {
        let dict = random_dictionary(20, 8, 3, 100 + seed);
        let y = random_rows(1, 20, 200 + seed).remove(0);
        let set = [0, 3, 5];
        let v = restricted_least_squares(&dict, &set, &y).unwrap();
        let cols: Vec<usize> = set.iter().flat_map(|&i| i * 3..i * 3 + 3).collect();
        let want = normal_equations(dict.atoms(), &cols, &y);
        for (&j, w) in cols.iter().zip(&want) {
            assert!((v.values()[j] - w).abs() < 1e-9, "seed {seed}");
        }
    }
}

#[test]
fn rank_deficient_set_is_named() {
    let mut rows = random_rows(5, 4, 14);
    for r in rows.iter_mut() {
        r[3] = r[0];
    }
    let dict = BlockedDictionary::normalized(to_matrix(&rows), 1).unwrap();
    let err = restricted_least_squares(&dict, &[0, 3], &[1.0; 5]).unwrap_err();
    assert_eq!(err, Error::Singular { blocks: vec![0, 3] });
    assert!(err.to_string().contains("{1, 4}"));
}

#[test]
fn spectral_norm_examples() {
    assert!((spectral_norm(&Matrix::identity(7)).unwrap() - 1.0).abs() < 1e-12);
    let a = Matrix::from_diagonal(&[3.0, -5.0]);
    assert!((spectral_norm(&a).unwrap() - 5.0).abs() < 1e-12);
    assert!(spectral_norm(&Matrix::zeros(0, 0)).is_err());
}

#[test]
fn spectral_norm_matches_power_iteration() {
    for seed in 0..5 {
        let a = to_matrix(&random_rows(5, 3, 300 + seed));
        let s = spectral_norm(&a).unwrap();
        let p = power_iteration(&a);
        assert!((s - p).abs() <= 1e-10 * p, "seed {seed}: {s} vs {p}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residual_orthogonal_to_selected_blocks(seed in 0u64..10_000, m in 3usize..8, d in 1usize..4) {
        let l = 3 * m;
        let dict = random_dictionary(l, m, d, seed);
        let y = random_rows(1, l, seed ^ 0xabc).remove(0);
        let set = [0, m - 1];
        let v = restricted_least_squares(&dict, &set, &y).unwrap();
        let fit = dict.apply(&v);
        let r: Vec<f64> = y.iter().zip(&fit).map(|(a, b)| a - b).collect();
        let sub = dict.subdictionary(&set).unwrap();
        let inf = |u: Vec<f64>| u.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let lhs = inf(sub.tr_mul_vec(&r));
        let rhs = inf(sub.tr_mul_vec(&y));
        prop_assert!(lhs <= 1e-8 * rhs + 1e-12);
    }

    #[test]
    fn least_squares_is_idempotent(seed in 0u64..10_000) {
        let dict = random_dictionary(15, 5, 2, seed);
        let y = random_rows(1, 15, seed + 1).remove(0);
        let set = [1, 2];
        let v = restricted_least_squares(&dict, &set, &y).unwrap();
        let fit = dict.apply(&v);
        let r: Vec<f64> = y.iter().zip(&fit).map(|(a, b)| a - b).collect();
        let y2: Vec<f64> = fit.iter().zip(&r).map(|(a, b)| a + b).collect();
        let v2 = restricted_least_squares(&dict, &set, &y2).unwrap();
        for (a, b) in v.values().iter().zip(v2.values()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn spectral_norm_transpose_invariant(seed in 0u64..10_000, r in 1usize..9, c in 1usize..9) {
        let a = to_matrix(&random_rows(r, c, seed));
        let s = spectral_norm(&a).unwrap();
        let t = spectral_norm(&a.transpose()).unwrap();
        prop_assert!((s - t).abs() <= 1e-10 * s.max(1.0));
    }
}
