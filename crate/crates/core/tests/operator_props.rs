mod common;

use common::{builtin, max_abs_diff, random_full, random_homogeneous, unit};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wavecone::grassmannian::uniform_plane;
use wavecone::OperatorSpec;

fn dims() -> impl Strategy<Value = (usize, usize, usize, u32, u64)> {
    (1usize..=4, 1usize..=3, 1usize..=3, 1u32..=3, any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn principal_symbol_is_homogeneous((d, m, n, k, seed) in dims()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = random_homogeneous(d, m, n, k, &mut rng);
        let xi = unit(d, &mut rng);
        let base = op.principal_symbol(&xi).unwrap().matrix;
        for t in [2.0, -1.0, 0.5] {
            let scaled: Vec<f64> = xi.iter().map(|x| t * x).collect();
            let s = op.principal_symbol(&scaled).unwrap().matrix;
            let expect = &base * f64::powi(t, k as i32);
            prop_assert!(max_abs_diff(&s, &expect) <= 1e-12 * (1.0 + expect.amax()));
        }
    }

    #[test]
    fn restriction_matches_symbol_on_plane((d, m, n, k, seed) in dims(), l in 1usize..=4) {
        prop_assume!(l <= d);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = random_homogeneous(d, m, n, k, &mut rng);
        let plane = uniform_plane(l, d, &mut rng).unwrap();
        let r = op.restrict_to_plane(&plane).unwrap();
        prop_assert_eq!((r.d(), r.m(), r.n()), (l, m, n));
        let eta = unit(l, &mut rng);
        let xi: Vec<f64> = (plane.basis() * DVector::from_column_slice(&eta)).iter().copied().collect();
        let a = op.principal_symbol(&xi).unwrap().matrix;
        let b = r.principal_symbol(&eta).unwrap().matrix;
        prop_assert!(max_abs_diff(&a, &b) <= 1e-10 * (1.0 + a.amax()));
    }

    #[test]
    fn symbol_is_linear_in_the_operator((d, m, n, k, seed) in dims()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_full(d, m, n, k, &mut rng);
        let b = random_full(d, m, n, k, &mut rng);
        let sum = a.add(&b).unwrap();
        let xi: Vec<f64> = unit(d, &mut rng).iter().map(|x| 1.7 * x).collect();
        let lhs = sum.full_symbol(&xi).unwrap().matrix;
        let rhs = a.full_symbol(&xi).unwrap().matrix + b.full_symbol(&xi).unwrap().matrix;
        prop_assert!(max_abs_diff(&lhs, &rhs) <= 1e-12 * (1.0 + rhs.amax()));
    }

    #[test]
    fn json_round_trip_preserves_terms((d, m, n, k, seed) in dims()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = random_full(d, m, n, k, &mut rng);
        let back = OperatorSpec::from_json_str(&op.to_table_json().to_string()).unwrap();
        prop_assert_eq!(back.terms(), op.terms());
        prop_assert_eq!(back.k(), op.k());
    }

    #[test]
    fn div_matrix_symbol_is_matrix_times_frequency(d in 1usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = builtin("div-matrix", Some(d), None);
        let mat = common::gaussian_matrix(d, d, &mut rng);
        let xi = unit(d, &mut rng);
        // row-major vectorization
        let v = DVector::from_iterator(d * d, (0..d).flat_map(|r| (0..d).map(move |c| (r, c))).map(|(r, c)| mat[(r, c)]));
        let lhs = op.principal_symbol(&xi).unwrap().matrix * v;
        let rhs = &mat * DVector::from_column_slice(&xi);
        prop_assert!((lhs - rhs).amax() <= 1e-12 * (1.0 + mat.amax()));
    }
}

#[test]
fn builtins_are_homogeneous() {
    for name in [
        "curl",
        "curlcurl",
        "div-matrix",
        "div-vector",
        "gradient",
        "laplacian",
        "cubic3d",
        "sextic3d",
    ] {
        let op = builtin(name, None, None);
        assert!(op.is_homogeneous(), "{name}");
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let xi = unit(op.d(), &mut rng);
            let full = op.full_symbol(&xi).unwrap().matrix;
            let principal = op.principal_symbol(&xi).unwrap().matrix;
            assert_eq!(full, principal, "{name}");
        }
    }
}

#[test]
fn gradient_and_laplacian_symbols() {
    let grad = builtin("gradient", Some(3), None);
    let xi = [0.6, 0.0, -0.8];
    let g = grad.principal_symbol(&xi).unwrap().matrix;
    assert_eq!(g, DMatrix::from_column_slice(3, 1, &xi));
    let lap = builtin("laplacian", Some(3), None);
    let l = lap.principal_symbol(&[1.0, 2.0, 2.0]).unwrap().matrix;
    assert!((l[(0, 0)] - 9.0).abs() < 1e-12);
}

#[test]
fn curl_symbol_annihilates_rank_one_tensors() {
    let op = builtin("curl", Some(3), Some(2));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let xi = unit(3, &mut rng);
        let a = unit(2, &mut rng);
        let v = DVector::from_iterator(
            6,
            (0..2)
                .flat_map(|r| (0..3).map(move |c| (r, c)))
                .map(|(r, c)| a[r] * xi[c]),
        );
        let out = op.principal_symbol(&xi).unwrap().matrix * v;
        assert!(out.amax() < 1e-12);
    }
}
