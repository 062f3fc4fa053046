mod common;

use common::{builtin, random_homogeneous, unit};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavecone::measure::{
    admissible_polar_set, blowup, bv_jump_example, integral_geometric_measure, integral_geometric_quadrature,
    model_rectifiable_measure, read_field, read_field_binary, read_field_text, upper_density, verify_afree_fft,
    write_field_binary, write_field_text, DiscreteMeasure, LatticePlane, PolyhedralSet, Shape, SpectralConvention,
};

fn random_lattice_plane<R: Rng>(d: usize, ell: usize, rng: &mut R) -> LatticePlane {
    loop {
        let gens: Vec<Vec<i64>> = (0..ell)
            .map(|_| (0..d).map(|_| rng.random_range(-2..=2)).collect())
            .collect();
        if let Ok(lp) = LatticePlane::new(gens) {
            return lp;
        }
    }
}

#[test]
fn residual_vanishes_exactly_on_admissible_polars() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut tried = 0;
    while tried < 12 {
        let d = 2 + rng.random_range(0..2);
        let ell = rng.random_range(1..d);
        let m = 3 + rng.random_range(0..2);
        let op = random_homogeneous(d, m, 1 + rng.random_range(0..2), 1, &mut rng);
        let lp = random_lattice_plane(d, ell, &mut rng);
        let adm = admissible_polar_set(&op, lp.plane()).unwrap();
        if adm.ncols() == 0 || adm.ncols() == m {
            continue;
        }
        tried += 1;
        let coeffs = DVector::from_vec(unit(adm.ncols(), &mut rng));
        let good: Vec<f64> = (&adm * coeffs).iter().copied().collect();
        let mu = model_rectifiable_measure(&good, &lp, 16).unwrap();
        let r = verify_afree_fft(&op, &mu, 1e-9, SpectralConvention::Continuous).unwrap();
        assert!(r.passed && r.max < 1e-9, "{r:?}");
        // component orthogonal to the admissible set
        let raw = DVector::from_vec(unit(m, &mut rng));
        let perp = &raw - &adm * (adm.transpose() * &raw);
        let bad: Vec<f64> = perp.normalize().iter().copied().collect();
        let mu = model_rectifiable_measure(&bad, &lp, 16).unwrap();
        let r = verify_afree_fft(&op, &mu, 1e-9, SpectralConvention::Continuous).unwrap();
        assert!(!r.passed && r.max > 1e-3, "{r:?}");
    }
}

#[test]
fn bv_slab_polar_and_curl() {
    let a = [0.6, -0.8];
    let mu = bv_jump_example(
        &Shape::Slab {
            d: 3,
            axis: 0,
            lo: 0.25,
            hi: 0.75,
        },
        &a,
        16,
    )
    .unwrap();
    let curl = builtin("curl", Some(3), Some(2));
    let r = verify_afree_fft(&curl, &mu, 1e-10, SpectralConvention::CenteredDifference).unwrap();
    assert!(r.passed, "{r:?}");
    let mut seen = 0;
    for i in 0..mu.len() {
        if let Some(p) = mu.polar(i) {
            // ±a⊗e₁
            let s = p[0].signum() * a[0].signum();
            let expect = [a[0], 0.0, 0.0, a[1], 0.0, 0.0];
            assert!(p.iter().zip(expect).all(|(x, e)| (x - s * e).abs() < 1e-6), "{p:?}");
            seen += 1;
        }
    }
    assert!(seen > 0);
}

#[test]
fn bv_cube_is_curl_free_with_mixed_normals() {
    let mu = bv_jump_example(
        &Shape::Cube {
            d: 2,
            lo: 0.25,
            hi: 0.75,
        },
        &[1.0],
        32,
    )
    .unwrap();
    let r = verify_afree_fft(
        &builtin("curl", Some(2), None),
        &mu,
        1e-10,
        SpectralConvention::CenteredDifference,
    )
    .unwrap();
    assert!(r.passed, "{r:?}");
    assert!(bv_jump_example(&Shape::Cube { d: 2, lo: 0.5, hi: 0.5 }, &[1.0], 32).is_err());
}

#[test]
fn blowup_mass_matches_density_ratio() {
    let line = LatticePlane::new(vec![vec![0, 1]]).unwrap();
    let mu = model_rectifiable_measure(&[1.0, 0.0], &line, 64).unwrap();
    let x0 = [0.0, 0.3];
    for r in [0.25, 0.125, 0.0625] {
        let b = blowup(&mu, &x0, r, 1).unwrap();
        let e = upper_density(&mu, &x0, 1, &[r]).unwrap();
        assert!((b.total_variation() - e.estimate).abs() < 1e-12 * (1.0 + e.estimate));
        for i in 0..b.len() {
            assert!(b.position(i).iter().map(|x| x * x).sum::<f64>().sqrt() <= 1.0 + 0.5 / (64.0 * r) + 1e-12);
        }
    }
}

#[test]
fn oblique_line_has_unit_density() {
    let line = LatticePlane::new(vec![vec![1, 1]]).unwrap();
    let mu = model_rectifiable_measure(&[1.0], &line, 128).unwrap();
    let e = upper_density(&mu, &[0.5, 0.5], 1, &[0.125, 0.0625]).unwrap();
    assert!((e.estimate - 1.0).abs() < 0.05, "{e:?}");
}

fn random_simplices<R: Rng>(d: usize, ell: usize, count: usize, rng: &mut R) -> PolyhedralSet {
    let s = (0..count)
        .map(|_| {
            (0..=ell)
                .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect()
        })
        .collect();
    PolyhedralSet::new(d, ell, s).unwrap()
}

#[test]
fn integral_geometric_measure_is_additive_and_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for (d, ell) in [(2, 1), (3, 1), (3, 2)] {
        let a = random_simplices(d, ell, 3, &mut rng);
        let b = random_simplices(d, ell, 2, &mut rng);
        let u = a.union(&b).unwrap();
        let (qa, qb, qu) = (
            integral_geometric_quadrature(&a, 40).unwrap(),
            integral_geometric_quadrature(&b, 40).unwrap(),
            integral_geometric_quadrature(&u, 40).unwrap(),
        );
        assert!((qu - qa - qb).abs() < 1e-12 * qu.max(1.0));
        assert!(qu <= u.volume());
        let seed = rng.random();
        let ea = integral_geometric_measure(&a, ell, 500, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let eb = integral_geometric_measure(&b, ell, 500, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let eu = integral_geometric_measure(&u, ell, 500, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        // common random numbers make the estimator exactly additive
        assert!((eu.estimate - ea.estimate - eb.estimate).abs() < 1e-12 * eu.estimate.max(1.0));
        assert!(eu.max_sample <= eu.volume * (1.0 + 1e-12));
        assert!((eu.estimate - qu).abs() < 5.0 * eu.std_error + 1e-3, "{eu:?} vs {qu}");
    }
}

#[test]
fn field_files_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let grid = DiscreteMeasure::grid(2, 2, 4, (0..32).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let atoms = DiscreteMeasure::atomic(
        3,
        1,
        vec![vec![0.1, 0.2, 0.3], vec![-0.5, 0.0, 1.0 / 3.0]],
        vec![vec![1e-300], vec![-2.5]],
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (i, mu) in [grid, atoms].iter().enumerate() {
        let mut text = Vec::new();
        write_field_text(mu, &mut text).unwrap();
        assert_eq!(&read_field_text(std::str::from_utf8(&text).unwrap()).unwrap(), mu);
        let mut bin = Vec::new();
        write_field_binary(mu, &mut bin).unwrap();
        assert_eq!(&read_field_binary(bin.as_slice()).unwrap(), mu);
        let tp = dir.path().join(format!("f{i}.txt"));
        let bp = dir.path().join(format!("f{i}.bin"));
        std::fs::write(&tp, &text).unwrap();
        std::fs::write(&bp, &bin).unwrap();
        assert_eq!(&read_field(&tp).unwrap(), mu);
        assert_eq!(&read_field(&bp).unwrap(), mu);
    }
    assert!(read_field_text("wavecone-field 1\nkind grid\n").is_err());
    assert!(read_field_binary(&b"WCFB\x02"[..]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn residual_is_scale_free(s in 1e-3f64..1e3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = random_homogeneous(2, 2, 1, 1, &mut rng);
        let lp = LatticePlane::new(vec![vec![1, 2]]).unwrap();
        let lam = unit(2, &mut rng);
        let mu = model_rectifiable_measure(&lam, &lp, 16).unwrap();
        let a = verify_afree_fft(&op, &mu, 1e-9, SpectralConvention::Continuous).unwrap();
        let b = verify_afree_fft(&op, &mu.scaled(s), 1e-9, SpectralConvention::Continuous).unwrap();
        prop_assert!((a.max - b.max).abs() <= 1e-9 * (1.0 + a.max));
    }

    #[test]
    fn quadrature_never_exceeds_volume(seed in any::<u64>(), count in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = random_simplices(3, 2, count, &mut rng);
        let q = integral_geometric_quadrature(&set, 16).unwrap();
        prop_assert!(q <= set.volume() * (1.0 + 1e-12));
        prop_assert!(q >= 0.0);
    }
}

#[test]
fn admissible_polar_examples() {
    let x1 = wavecone::Plane::coordinate(3, &[1, 2]).unwrap();
    let curl = builtin("curl", Some(3), None);
    let a = admissible_polar_set(&curl, &x1).unwrap();
    assert_eq!(a.ncols(), 1);
    assert!((a[(0, 0)].abs() - 1.0).abs() < 1e-12);
    assert_eq!(admissible_polar_set(&builtin("div-matrix", Some(3), None), &x1).unwrap().ncols(), 6);
    assert_eq!(admissible_polar_set(&builtin("laplacian", Some(3), None), &x1).unwrap().ncols(), 0);
}

#[test]
fn non_admissible_div_polar_has_unit_residual() {
    let lp = LatticePlane::new(vec![vec![0, 1, 0], vec![0, 0, 1]]).unwrap();
    let mut lam = vec![0.0; 9];
    lam[0] = 1.0;
    let mu = model_rectifiable_measure(&lam, &lp, 16).unwrap();
    let r = verify_afree_fft(&builtin("div-matrix", Some(3), None), &mu, 1e-10, SpectralConvention::Continuous).unwrap();
    assert!(r.max > 0.1, "{r:?}");
}

#[test]
fn coordinate_plane_total_variation() {
    // H^ℓ of a unit cross-section is 2^ℓ/ω_ℓ in Lebesgue units
    for (gens, hf) in [
        (vec![vec![1i64, 0]], 1.0),
        (vec![vec![0, 1, 0], vec![0, 0, 1]], 4.0 / std::f64::consts::PI),
    ] {
        let n = 32;
        let mu = model_rectifiable_measure(&[0.6, 0.8], &LatticePlane::new(gens).unwrap(), n).unwrap();
        assert!((mu.total_variation() / hf - 1.0).abs() <= 1.0 / n as f64, "{}", mu.total_variation());
    }
}

#[test]
fn square_jump_mass_is_the_perimeter() {
    for n in [32, 64] {
        let mu = bv_jump_example(&Shape::Cube { d: 2, lo: 0.25, hi: 0.75 }, &[0.6, 0.8], n).unwrap();
        // |a| = 1 and the perimeter is 2
        assert!((mu.total_variation() - 2.0).abs() <= 2.0 / n as f64, "N={n}: {}", mu.total_variation());
        // the four sides carry ±a⊗e₁ and ±a⊗e₂
        let mut normals = [false; 2];
        for i in 0..mu.len() {
            if let Some(p) = mu.polar(i) {
                if p[1].abs() < 1e-12 && p[3].abs() < 1e-12 {
                    normals[0] = true;
                } else if p[0].abs() < 1e-12 && p[2].abs() < 1e-12 {
                    normals[1] = true;
                }
            }
        }
        assert_eq!(normals, [true, true]);
    }
}

#[test]
fn unit_square_in_a_plane_matches_quadrature() {
    let sq = PolyhedralSet::new(
        3,
        2,
        vec![
            vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]],
            vec![vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 0.0]],
        ],
    )
    .unwrap();
    let q = integral_geometric_quadrature(&sq, 48).unwrap();
    let e = integral_geometric_measure(&sq, 2, 20_000, &mut ChaCha8Rng::seed_from_u64(45)).unwrap();
    assert!((q - 0.5).abs() < 5e-3, "{q}");
    assert!((e.estimate / q - 1.0).abs() < 0.01, "{e:?} vs {q}");
    assert!(e.estimate < e.volume);
}

#[test]
fn blowup_converges_to_the_tangent_measure() {
    let lp = LatticePlane::new(vec![vec![1, 0, 0], vec![0, 1, 0]]).unwrap();
    let mu = model_rectifiable_measure(&[1.0, -1.0], &lp, 128).unwrap();
    let x0 = [0.5, 0.5, 0.0];
    let theta = upper_density(&mu, &x0, 2, &[0.125]).unwrap().estimate;
    let b = blowup(&mu, &x0, 0.125, 2).unwrap();
    // the limit θ·(λ/|λ|)·H²⌊π puts mass θ·ρ² in the ρ-ball
    for rho in [0.25, 0.5, 0.75, 1.0] {
        let mass: f64 = (0..b.len())
            .filter(|&i| b.position(i).iter().map(|x| x * x).sum::<f64>().sqrt() <= rho)
            .map(|i| b.mass_norm(i))
            .sum();
        let limit = theta * rho * rho;
        assert!((mass / limit - 1.0).abs() < 0.05, "ρ={rho}: {mass} vs {limit}");
    }
    for i in 0..b.len() {
        let p = b.polar(i).unwrap();
        assert!((p[0] + p[1]).abs() < 1e-12 && b.position(i)[2].abs() < 1e-12);
    }
    // off the support the window is empty
    assert!(blowup(&mu, &[0.5, 0.5, 0.25], 0.125, 2).unwrap().is_empty());
    let twice = upper_density(&mu.scaled(2.0), &x0, 2, &[0.125]).unwrap().estimate;
    assert!((twice / theta - 2.0).abs() < 1e-12);
}
