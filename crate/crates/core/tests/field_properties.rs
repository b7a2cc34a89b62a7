use std::f64::consts::PI;

use mfa_dvv_core::field::{
    downsample, generate_marschner_lobb, partition, sample_baseline, Filter, MarschnerLobb,
    ScalarGrid3D,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Written out independently of the library's formula.
fn ml_direct(x: f64, y: f64, z: f64, f_m: f64, alpha: f64) -> f64 {
    let r = x.hypot(y);
    let rho = (2.0 * PI * f_m * (PI * r / 2.0).cos()).cos();
    (1.0 - (PI * z / 2.0).sin() + alpha * (1.0 + rho)) / (2.0 * (1.0 + alpha))
}

#[test]
fn generated_samples_match_the_closed_form() {
    let (lo, hi, n) = ([-1.0, 0.0, -2.0], [1.0, 7.0, 3.0], [21, 31, 17]);
    let grid: ScalarGrid3D<f64> =
        generate_marschner_lobb(n, lo, hi, MarschnerLobb::new(4.0, 0.5).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..1000 {
        let idx = [0, 1, 2].map(|a| rng.gen_range(0..n[a]));
        let p = [0, 1, 2].map(|a| lo[a] + idx[a] as f64 * (hi[a] - lo[a]) / (n[a] - 1) as f64);
        let expected = ml_direct(p[0], p[1], p[2], 4.0, 0.5);
        let got = grid.get(idx[0], idx[1], idx[2]);
        assert!(
            (got - expected).abs() <= 1e-12 * expected.abs().max(1e-300),
            "{idx:?}: {got} vs {expected}"
        );
    }
}

#[test]
fn every_filter_reproduces_constants() {
    let grid =
        ScalarGrid3D::from_fn([6, 7, 5], [0.0; 3], [1.0, 2.0, 3.0], |_: [f64; 3]| 2.75).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let p = [
            rng.gen_range(0.0..=1.0),
            rng.gen_range(0.0..=2.0),
            rng.gen_range(0.0..=3.0),
        ];
        for f in Filter::ALL {
            let v = sample_baseline(&grid, p, f).unwrap();
            assert!((v - 2.75).abs() <= 1e-12, "{f:?} at {p:?}: {v}");
        }
    }
}

#[test]
fn interpolating_filters_reproduce_lattice_samples() {
    let grid: ScalarGrid3D<f64> =
        generate_marschner_lobb([9, 8, 7], [0.0; 3], [7.0; 3], MarschnerLobb::default()).unwrap();
    let mut tricubic_differs = false;
    for k in 0..7 {
        for j in 0..8 {
            for i in 0..9 {
                let p = grid.position(i, j, k);
                let v = grid.get(i, j, k);
                for f in [Filter::Nearest, Filter::Trilinear, Filter::CatmullRom] {
                    assert!((sample_baseline(&grid, p, f).unwrap() - v).abs() <= 1e-12);
                }
                tricubic_differs |=
                    (sample_baseline(&grid, p, Filter::Tricubic).unwrap() - v).abs() > 1e-6;
            }
        }
    }
    assert!(tricubic_differs);
}

#[test]
fn downsampling_keeps_every_other_sample() {
    let grid: ScalarGrid3D<f64> =
        generate_marschner_lobb([9; 3], [0.0; 3], [7.0; 3], MarschnerLobb::default()).unwrap();
    let coarse = downsample(&grid, 2).unwrap();
    assert_eq!(coarse.dims(), [5; 3]);
    assert_eq!(coarse.domain_max(), grid.domain_max());
    assert_eq!(coarse.get(2, 3, 4), grid.get(4, 6, 8));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_covers_the_grid_and_owned_regions_are_disjoint(
        dims in prop::array::uniform3(2usize..24),
        levels in 0u32..6,
    ) {
        let grid = ScalarGrid3D::from_fn(dims, [0.0; 3], [1.0; 3], |_: [f64; 3]| 0.0).unwrap();
        // Too many bisections for the grid is a parameter error, not a panic.
        let Ok(decomp) = partition(&grid, levels) else { return Ok(()) };
        prop_assert_eq!(decomp.blocks.len(), 1usize << levels);
        for b in &decomp.blocks {
            prop_assert!(b.extent().iter().all(|&e| e >= 2));
        }
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let idx = [i, j, k];
                    prop_assert!(decomp.blocks.iter().any(|b| b.contains_index(idx)));
                    prop_assert_eq!(decomp.blocks.iter().filter(|b| b.owns(idx, dims)).count(), 1);
                }
            }
        }
    }

    #[test]
    fn front_to_back_is_a_permutation(levels in 0u32..5, eye in prop::array::uniform3(-10.0f64..10.0)) {
        let grid = ScalarGrid3D::from_fn([17; 3], [-1.0; 3], [1.0; 3], |_: [f64; 3]| 0.0).unwrap();
        let decomp = partition(&grid, levels).unwrap();
        let mut order = decomp.front_to_back(eye);
        order.sort_unstable();
        prop_assert_eq!(order, (0..decomp.blocks.len()).collect::<Vec<_>>());
    }
}
