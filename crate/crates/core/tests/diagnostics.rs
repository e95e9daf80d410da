use std::f64::consts::PI;
use std::sync::Arc;

use qnlab::diagnostics::{
    current_pairings, density_distance, energy_budget, fit_gronwall_rate, gronwall_check,
    gronwall_tolerance, modulated_energy, modulated_entropy_fp, partition_function, DiagnosticRow,
    DiagnosticSeries, EntropySettings, TestField,
};
use qnlab::equilibrium::{Convex1dEquilibrium, Equilibrium, Polynomial1d};
use qnlab::fluid::zero_velocity;
use qnlab::kinetic::{Bump, Cic, FieldGrid, FreeSpacePoisson, ParticleEnsemble};

const EPS: f64 = 0.05;

fn harmonic() -> Convex1dEquilibrium {
    Convex1dEquilibrium::new(Arc::new(Polynomial1d::new(vec![0.0, 0.0, 0.5]).unwrap()), 2.0).unwrap()
}

/// `n` equal weights of total mass 2 spread over `(-1, 1)`, all moving with `u0`.
fn uniform(n: usize, u0: f64) -> ParticleEnsemble {
    let x = (0..n).map(|i| -1.0 + 2.0 * (i as f64 + 0.5) / n as f64).collect();
    ParticleEnsemble::new(1, x, vec![u0; n], vec![2.0 / n as f64; n], EPS, 0.0).unwrap()
}

fn matched_grid(eq: &dyn Equilibrium) -> FieldGrid {
    let mut grid = FieldGrid::for_equilibrium(eq, 256, Arc::new(Cic)).unwrap();
    grid.rho = grid.n_e.clone();
    FreeSpacePoisson::new(&grid.geom).solve(&mut grid, EPS);
    grid
}

fn series(points: &[(f64, f64)]) -> DiagnosticSeries {
    let mut s = DiagnosticSeries::new(1, 0, false);
    for &(t, h) in points {
        s.push(DiagnosticRow {
            t,
            e_kin: 0.0,
            e_phi_e: 0.0,
            e_fluct: 0.0,
            h_kin: 0.0,
            h_mod: h,
            energy_total: 0.0,
            h_fp: None,
            entropy_estimate: None,
            free_energy: None,
            charge: 2.0,
            momentum: vec![0.0],
            dist_l1: 0.0,
            dist_hminus1: 0.0,
            pairings: vec![],
        });
    }
    s
}

#[test]
fn matched_state_has_zero_modulated_energy() {
    let eq = harmonic();
    let grid = matched_grid(&eq);
    let ens = uniform(1000, 0.0);
    let h = modulated_energy(&ens, &grid, &eq, zero_velocity(1).as_ref(), 0.0);
    assert_eq!(h.kinetic, 0.0);
    assert_eq!(h.confinement, 0.0);
    assert!(h.fluctuation < 1e-24, "{}", h.fluctuation);
    let d = density_distance(&grid, EPS);
    assert_eq!(d.l1, 0.0);
    assert!(d.hminus1 < 1e-12);
}

#[test]
fn uniform_offset_costs_half_mass_times_speed_squared() {
    let eq = harmonic();
    let grid = matched_grid(&eq);
    let u0 = 0.7;
    let h = modulated_energy(&uniform(999, u0), &grid, &eq, zero_velocity(1).as_ref(), 0.0);
    let expect = 0.5 * eq.mass() * u0 * u0;
    assert!((h.kinetic - expect).abs() < 1e-13, "{} vs {expect}", h.kinetic);
}

#[test]
fn empty_ensemble_has_no_particle_energy() {
    let eq = harmonic();
    let grid = FieldGrid::for_equilibrium(&eq, 64, Arc::new(Cic)).unwrap();
    let ens = ParticleEnsemble::new(1, vec![], vec![], vec![], EPS, 0.0).unwrap();
    let b = energy_budget(&ens, &grid, &eq);
    assert_eq!(b.energy, 0.0);
    assert!(b.free_energy.is_none());
}

#[test]
fn pairings_vanish_when_matched_or_disjoint() {
    let eq = harmonic();
    let grid = matched_grid(&eq);
    let v = zero_velocity(1);
    let fields = [
        TestField { direction: vec![1.0], bump: Bump::new(vec![0.2], 0.5).unwrap() },
        TestField { direction: vec![1.0], bump: Bump::new(vec![5.0], 0.5).unwrap() },
    ];
    let still = current_pairings(&uniform(500, 0.0), &grid, v.as_ref(), 0.0, &fields);
    assert_eq!(still, vec![0.0, 0.0]);
    // moving particles only see the bump that overlaps the support
    let moving = current_pairings(&uniform(500, 1.0), &grid, v.as_ref(), 0.0, &fields);
    assert!(moving[0] > 0.0);
    assert_eq!(moving[1], 0.0);
}

#[test]
fn gronwall_examples() {
    let zero = series(&[(0.0, 0.0), (0.5, 0.0), (1.0, 0.0)]);
    assert!(gronwall_check(&zero, 0.0, 1e-6).pass);

    let (h0, c) = (0.3, 1.2);
    let pts: Vec<(f64, f64)> = (0..=20)
        .map(|k| {
            let t = 0.1 * k as f64;
            (t, h0 * (0.5 * c * t).exp())
        })
        .collect();
    let s = series(&pts);
    assert!(gronwall_check(&s, c, 0.0).pass);
    assert!(!gronwall_check(&s, 0.1, 0.0).pass);
    let fitted = fit_gronwall_rate(&s, 0.0);
    assert!((fitted - 0.5 * c).abs() < 1e-12, "{fitted}");
    assert!(gronwall_check(&s, fitted, 0.0).margin.abs() < 1e-14);

    assert_eq!(gronwall_tolerance(0.0, 100), 1e-6);
    assert!((gronwall_tolerance(1.0, 10000) - 0.03).abs() < 1e-15);
}

#[test]
fn entropy_requires_temperature() {
    let eq = harmonic();
    assert!(EntropySettings::new(&eq, EPS, 0.0).is_err());
    assert!(partition_function(&eq, EPS, -1.0).is_err());
    let grid = matched_grid(&eq);
    let ens = uniform(100, 0.0);
    let bogus = EntropySettings { theta: 0.0, z_eps: 1.0 };
    assert!(modulated_entropy_fp(&ens, &grid, &eq, zero_velocity(1).as_ref(), 0.0, &bogus).is_err());
}

#[test]
fn harmonic_partition_function() {
    let eq = harmonic();
    for (eps, theta) in [(0.1, 1.0), (0.01, 0.5), (1.0, 2.0)] {
        let z = partition_function(&eq, eps, theta).unwrap();
        // flat on [-1, 1] plus two Gaussian half tails
        let expect = 2.0 + (2.0 * PI * eps * theta).sqrt();
        assert!((z - expect).abs() < 1e-9 * expect, "{z} vs {expect}");
    }
}
