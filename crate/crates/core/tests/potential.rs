mod common;

use common::*;
use locc_core::operator::BipartiteSpace;
use locc_core::potential::{
    build_local_operators, decoherence_cost, decoherence_kernel, divergence_scan, fourier_modes,
    least_decoherence_rate, reconstruct_potential, tabulate_potential, Lattice, PairPotential,
};
use proptest::prelude::*;
use rand::Rng;

fn roundtrip_error(values: &[f64]) -> f64 {
    let l = values.len();
    let lattice = Lattice::new(l, 1.0).unwrap();
    let pot = PairPotential::new(values.to_vec()).unwrap();
    let pairs = build_local_operators(&fourier_modes(&pot, &lattice).unwrap());
    let space = BipartiteSpace::new(l, l).unwrap();
    let rebuilt = reconstruct_potential(&pairs, space).unwrap();
    // Tabulate V(x_A - x_B) independently of the library's helper.
    let mut worst: f64 = 0.0;
    for xa in 0..l {
        for xb in 0..l {
            let i = space.index(xa, xb);
            let expected = values[(xa + l - xb) % l];
            worst = worst.max((rebuilt.get(i, i).re - expected).abs());
            for j in 0..l * l {
                if j != i {
                    worst = worst.max(rebuilt.get(i, j).norm());
                }
            }
        }
    }
    worst
}

#[test]
fn cosine_potential_has_a_single_unit_mode() {
    let lattice = Lattice::new(4, 1.0).unwrap();
    let pot = PairPotential::cosine(&lattice, 1.0, 1).unwrap();
    let modes = fourier_modes(&pot, &lattice).unwrap();
    let expected = [0.0, 1.0, 0.0];
    for (a, b) in modes.values().iter().zip(expected) {
        assert!((a - b).abs() < 1e-14);
    }
    let pairs = build_local_operators(&modes);
    assert_eq!(pairs.len(), 2);
    assert_eq!(pairs[0].mode, 1);
}

#[test]
fn delta_potential_modes_follow_edge_weights() {
    let lattice = Lattice::new(4, 1.0).unwrap();
    let modes = fourier_modes(&PairPotential::delta(&lattice, 1.0).unwrap(), &lattice).unwrap();
    let expected = [0.25, 0.5, 0.25];
    for (a, b) in modes.values().iter().zip(expected) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn modes_match_direct_cosine_sums() {
    let mut r = rng(21);
    for l in 2..=17 {
        let values = random_even_potential(l, &mut r);
        let lattice = Lattice::new(l, 0.5).unwrap();
        let modes = fourier_modes(&PairPotential::new(values.clone()).unwrap(), &lattice).unwrap();
        let oracle = direct_modes(&values);
        assert_eq!(modes.values().len(), oracle.len());
        for (a, b) in modes.values().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12, "L={l}");
        }
    }
}

#[test]
fn twenty_random_even_potentials_reconstruct_on_eight_sites() {
    let mut r = rng(22);
    for _ in 0..20 {
        let values = random_even_potential(8, &mut r);
        assert!(roundtrip_error(&values) <= 1e-10);
    }
}

#[test]
fn tabulated_potential_matches_reconstruction() {
    let lattice = Lattice::new(6, 1.0).unwrap();
    let pot = PairPotential::power_law(&lattice, 1.0, 1.0).unwrap();
    let pairs = build_local_operators(&fourier_modes(&pot, &lattice).unwrap());
    let rebuilt = reconstruct_potential(&pairs, BipartiteSpace::new(6, 6).unwrap()).unwrap();
    assert!((&rebuilt - &tabulate_potential(&pot, &lattice)).max_abs() < 1e-12);
}

#[test]
fn kernel_equals_potential_for_nonnegative_modes() {
    let mut r = rng(23);
    for l in [4, 7, 8, 12] {
        let lattice = Lattice::new(l, 1.0).unwrap();
        // Build from nonnegative modes through the direct series.
        let coeffs: Vec<f64> = (0..=l / 2).map(|_| r.random_range(0.0..1.0)).collect();
        let values: Vec<f64> = (0..l)
            .map(|d| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(m, v)| v * (2.0 * std::f64::consts::PI * (m * d) as f64 / l as f64).cos())
                    .sum()
            })
            .collect();
        let pot = PairPotential::new(values.clone()).unwrap();
        let kernel = decoherence_kernel(&fourier_modes(&pot, &lattice).unwrap());
        for (a, b) in kernel.values().iter().zip(&values) {
            assert!((a - b).abs() <= 1e-10);
        }
    }
}

#[test]
fn kernel_of_flipped_cosine_is_positive_cosine() {
    let lattice = Lattice::new(4, 1.0).unwrap();
    let pot = PairPotential::cosine(&lattice, -1.0, 1).unwrap();
    let kernel = decoherence_kernel(&fourier_modes(&pot, &lattice).unwrap());
    let expected = [1.0, 0.0, -1.0, 0.0];
    for (a, b) in kernel.values().iter().zip(expected) {
        assert!((a - b).abs() < 1e-14);
    }
    assert_eq!(kernel.diag(), 1.0);
}

#[test]
fn least_decoherence_rate_is_two() {
    let best = least_decoherence_rate();
    assert!((best.numerical_gamma - 2.0).abs() <= 1e-9);
    assert!((best.numerical_cost - 0.5).abs() <= 1e-12);
}

#[test]
fn power_law_kernel_diagonal_grows_with_resolution() {
    let rows = divergence_scan(|r, a| 1.0 / r.max(a), 8.0, &[8, 16, 32, 64]).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].kernel_diag > w[0].kernel_diag, "{rows:?}");
    }
}

#[test]
fn smooth_potential_kernel_diagonal_converges() {
    let period = 8.0;
    let rows = divergence_scan(
        |r, _| (2.0 * std::f64::consts::PI * r / period).cos(),
        period,
        &[8, 16, 32, 64],
    )
    .unwrap();
    for row in &rows {
        assert!((row.kernel_diag - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn decomposition_round_trip(l in 2usize..=16, seed in any::<u64>()) {
        let values = random_even_potential(l, &mut rng(seed));
        prop_assert!(roundtrip_error(&values) <= 1e-10);
    }

    #[test]
    fn cost_is_bounded_below_by_one_half(gamma in 1e-3f64..1e3) {
        prop_assert!(decoherence_cost(gamma).unwrap() >= 0.5 - 1e-15);
    }

    #[test]
    fn kernel_is_idempotent_and_dominates(l in 2usize..=16, seed in any::<u64>()) {
        let lattice = Lattice::new(l, 1.0).unwrap();
        let values = random_even_potential(l, &mut rng(seed));
        let kernel = decoherence_kernel(&fourier_modes(&PairPotential::new(values.clone()).unwrap(), &lattice).unwrap());
        let again = decoherence_kernel(&fourier_modes(&kernel.as_potential(), &lattice).unwrap());
        for (a, b) in kernel.values().iter().zip(again.values()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        for (k, v) in kernel.values().iter().zip(&values) {
            prop_assert!(kernel.diag() >= k.abs() - 1e-12);
            prop_assert!(kernel.diag() >= v.abs() - 1e-12);
        }
    }
}
