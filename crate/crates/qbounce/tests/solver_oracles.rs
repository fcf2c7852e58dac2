//! Numeric eigensolver against the closed-form oracles: box levels from
//! ħ²π²n²/2ma², gravity levels from the Airy-zero table.

use qbounce::eigensolver::{
    box_eigenvalue_analytic, count_nodes, gravity_eigenvalue_analytic, solve_spectrum,
};
use qbounce::potential::{Grid, PotentialSpec, WoodSaxonParams};
use qbounce::PhysicalConstants;

#[test]
fn box_levels_match_analytic_to_a_tenth_percent() {
    let c = PhysicalConstants::neutron();
    let width = 15e-6;
    let spec = PotentialSpec::infinite_box(width).unwrap();
    let grid = Grid::new(0.0, width, 4000).unwrap();
    let spectrum = solve_spectrum(&spec, &c, &grid, 10).unwrap();
    for (i, state) in spectrum.states.iter().enumerate() {
        let exact = box_eigenvalue_analytic(i + 1, width, &c).unwrap();
        let rel = ((state.energy - exact) / exact).abs();
        assert!(rel < 1e-3, "n = {}: relative error {rel:e}", i + 1);
    }
}

#[test]
fn box_discretization_error_is_second_order() {
    // halving the spacing must shrink every level's error by ~4x
    let c = PhysicalConstants::neutron();
    let width = 15e-6;
    let spec = PotentialSpec::infinite_box(width).unwrap();

    let errors = |n_points: usize| -> Vec<f64> {
        let grid = Grid::new(0.0, width, n_points).unwrap();
        let spectrum = solve_spectrum(&spec, &c, &grid, 10).unwrap();
        spectrum
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let exact = box_eigenvalue_analytic(i + 1, width, &c).unwrap();
                ((s.energy - exact) / exact).abs()
            })
            .collect()
    };

    let coarse = errors(2000);
    let fine = errors(4000);
    for n in 0..10 {
        let ratio = coarse[n] / fine[n];
        assert!(
            ratio >= 3.5,
            "n = {}: error ratio {ratio} below second-order expectation",
            n + 1
        );
    }
}

#[test]
fn gravity_levels_match_airy_zeros_to_half_percent() {
    let c = PhysicalConstants::neutron();
    let spec = PotentialSpec::gravity_floor();
    let grid = Grid::new(0.0, 100e-6, 4000).unwrap();
    let spectrum = solve_spectrum(&spec, &c, &grid, 4).unwrap();
    for (i, state) in spectrum.states.iter().enumerate() {
        let exact = gravity_eigenvalue_analytic(i + 1, &c).unwrap();
        let rel = ((state.energy - exact) / exact).abs();
        assert!(rel < 5e-3, "n = {}: relative error {rel:e}", i + 1);
    }
}

#[test]
fn eigenstate_invariants_across_configurations() {
    let c = PhysicalConstants::neutron();
    let configs: Vec<(PotentialSpec, Grid, usize)> = vec![
        (
            PotentialSpec::infinite_box(15e-6).unwrap(),
            Grid::new(0.0, 15e-6, 2000).unwrap(),
            6,
        ),
        (
            PotentialSpec::gravity_floor(),
            Grid::new(0.0, 100e-6, 3000).unwrap(),
            4,
        ),
        (
            PotentialSpec::gravity_with_absorber(
                15e-6,
                WoodSaxonParams::new(c.from_pev(1.6), 15e-6, 0.2e-6).unwrap(),
            )
            .unwrap(),
            Grid::new(0.0, 160e-6, 3000).unwrap(),
            4,
        ),
    ];

    for (spec, grid, n_states) in configs {
        let spectrum = solve_spectrum(&spec, &c, &grid, n_states).unwrap();
        assert_eq!(spectrum.states.len(), n_states);

        for (i, state) in spectrum.states.iter().enumerate() {
            assert_eq!(state.n, i + 1);
            let density: Vec<f64> = state.psi.iter().map(|p| p * p).collect();
            let norm = grid.trapezoid(&density);
            assert!((norm - 1.0).abs() < 1e-8, "{spec:?} state {}: norm {norm}", i + 1);
            assert_eq!(count_nodes(&state.psi), i, "{spec:?} state {}", i + 1);
        }

        for i in 0..n_states {
            for j in 0..i {
                let prod: Vec<f64> = spectrum.states[i]
                    .psi
                    .iter()
                    .zip(spectrum.states[j].psi.iter())
                    .map(|(a, b)| a * b)
                    .collect();
                let overlap = grid.trapezoid(&prod).abs();
                assert!(overlap <= 1e-6, "{spec:?} states ({i},{j}): {overlap:e}");
            }
        }

        for w in spectrum.states.windows(2) {
            assert!(w[1].energy > w[0].energy);
        }
    }
}

#[test]
fn repeated_solves_are_bit_identical() {
    let c = PhysicalConstants::neutron();
    let spec = PotentialSpec::gravity_floor();
    let grid = Grid::new(0.0, 100e-6, 2000).unwrap();
    let a = solve_spectrum(&spec, &c, &grid, 3).unwrap();
    let b = solve_spectrum(&spec, &c, &grid, 3).unwrap();
    for (sa, sb) in a.states.iter().zip(b.states.iter()) {
        assert_eq!(sa.energy.to_bits(), sb.energy.to_bits());
        for (pa, pb) in sa.psi.iter().zip(sb.psi.iter()) {
            assert_eq!(pa.to_bits(), pb.to_bits());
        }
    }
}
