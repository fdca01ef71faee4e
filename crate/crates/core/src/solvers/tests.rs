use super::*;
use crate::embedding::draw_sensing;
use crate::rng::{child_seed, rng_from_seed};
use rand::Rng;

fn ball(c: &[f64], r: f64) -> DifferenceBall {
    DifferenceBall::new(c.to_vec(), r).unwrap()
}

fn matrix(rows: usize, cols: usize, data: &[f64]) -> SensingMatrix {
    SensingMatrix::from_rows(rows, cols, data.to_vec()).unwrap()
}

fn tight() -> SolverConfig {
    SolverConfig::new(1e-9, 1e-9, 100_000).unwrap()
}

fn random_ball(n: usize, seed: u64) -> DifferenceBall {
    let mut rng = rng_from_seed(seed);
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let r = norm(&c) * rng.random_range(0.05..0.95);
    ball(&c, r)
}

#[test]
fn one_dimensional_margin() {
    let out = infinity_margin(&matrix(1, 1, &[1.0]), &ball(&[5.0], 2.0), &tight()).unwrap();
    assert!(out.converged);
    assert!((out.tau - 3.0).abs() < 1e-6, "{out:?}");
    assert!(out.lower_bound <= out.tau + 1e-12);
}

#[test]
fn identity_margin_touches_the_corner() {
    let d = ball(&[3.0, 4.0], 1.0);
    let out = infinity_margin(&SensingMatrix::identity(2).unwrap(), &d, &tight()).unwrap();
    assert!((out.tau - 3.0).abs() < 1e-6, "{out:?}");
    assert!((out.minimizer[0] - 3.0).abs() < 1e-3 && (out.minimizer[1] - 3.0).abs() < 1e-3);
}

#[test]
fn identity_cone_margins() {
    let d = ball(&[3.0, 4.0], 1.0);
    let cones = cone_margins(&SensingMatrix::identity(2).unwrap(), &d, &tight()).unwrap();
    assert!(cones.all_converged());
    for tau in &cones.tau_j {
        assert!((tau - 3.0).abs() < 1e-6, "{cones:?}");
    }
}

#[test]
fn single_row_cone_is_the_whole_ball() {
    let cfg = SolverConfig::default();
    for seed in 0..20 {
        let d = random_ball(4, seed);
        let phi = draw_sensing(1, 4, seed + 100).unwrap();
        let tau = infinity_margin(&phi, &d, &cfg).unwrap();
        let cones = cone_margins(&phi, &d, &cfg).unwrap();
        let tol = cfg.tolerance(tau.tau, &d);
        assert!(
            (cones.tau_j[0] - tau.tau).abs() <= 2.0 * tol,
            "{} vs {}",
            cones.tau_j[0],
            tau.tau
        );
    }
}

#[test]
fn linear_test_examples() {
    let d = ball(&[0.0, 5.0], 1.0);
    assert!(!linear_eclipse_holds(&matrix(1, 2, &[1.0, 0.0]), &d).unwrap());
    assert!(linear_eclipse_holds(&SensingMatrix::identity(2).unwrap(), &d).unwrap());
    let out = infinity_margin(&matrix(1, 2, &[1.0, 0.0]), &d, &tight()).unwrap();
    assert_eq!(out.tau, 0.0);
    assert!(d.contains(&out.minimizer, 1e-12));
}

#[test]
fn rank_deficient_rows_are_handled() {
    // two copies of the same row: rank one
    let phi = matrix(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    let d = ball(&[3.0, 4.0], 1.0);
    let out = infinity_margin(&phi, &d, &tight()).unwrap();
    assert!((out.tau - (7.0 - 2f64.sqrt())).abs() < 1e-6, "{out:?}");
    let cones = cone_margins(&phi, &d, &tight()).unwrap();
    for tau in &cones.tau_j {
        assert!((tau - out.tau).abs() < 1e-5, "{cones:?}");
    }
}

#[test]
fn positive_homogeneity() {
    let cfg = SolverConfig::default();
    let phi = draw_sensing(3, 5, 8).unwrap();
    let d = random_ball(5, 9);
    let base = infinity_margin(&phi, &d, &cfg).unwrap().tau;
    for alpha in [0.01, 3.0, 250.0] {
        let scaled = infinity_margin(&phi, &d.scaled(alpha).unwrap(), &cfg).unwrap().tau;
        assert!((scaled - alpha * base).abs() <= 2.0 * cfg.tolerance(alpha * base, &d.scaled(alpha).unwrap()));
    }
}

#[test]
fn result_invariants_hold() {
    let cfg = SolverConfig::default();
    for seed in 0..30 {
        let n = 2 + (seed as usize % 6);
        let m = 1 + (seed as usize % 5);
        let d = random_ball(n, child_seed(seed, 1));
        let phi = draw_sensing(m, n, child_seed(seed, 2)).unwrap();
        let out = trial_margins(&phi, &d, &cfg).unwrap();
        assert!(out.converged());
        let tol = cfg.tolerance(out.margin.tau, &d);
        assert!(d.contains(&out.margin.minimizer, tol));
        assert!((norm_inf(&phi.mul_vec(&out.margin.minimizer).unwrap()) - out.margin.tau).abs() <= tol);
        assert!(out.margin.lower_bound <= out.margin.tau);
        assert!(out.margin.tau - out.margin.lower_bound <= tol);
        assert!((out.cones.min() - out.margin.tau).abs() <= 2.0 * tol);
        for &t in &out.cones.tau_j {
            assert!(t >= out.margin.tau);
        }
    }
}

#[test]
fn kernel_test_matches_raw_program() {
    let cfg = SolverConfig::default();
    let guard = 10.0 * cfg.eps_abs;
    for seed in 0..200 {
        let d = random_ball(6, child_seed(seed, 3));
        let phi = draw_sensing(1 + (seed as usize % 4), 6, child_seed(seed, 4)).unwrap();
        let red = Reduced::new(&phi, &d).unwrap();
        let raw = red.infinity_margin(&cfg);
        let normalised = raw.tau / d.center_norm();
        if red.holds {
            // certified strictly positive unless the instance sits within the guard band
            let proj_gap = raw.lower_bound / d.center_norm();
            assert!(proj_gap > 0.0 || normalised <= guard, "seed {seed}: {raw:?}");
        } else {
            assert!(normalised <= guard, "seed {seed}: {raw:?}");
        }
    }
}
