//! Per-draw certificates and their Monte Carlo averages.
//!
//! The dither never enters the estimators: both bounds average over it in
//! closed form, so a trial is a function of `Φ` alone. The dither is drawn
//! only by [`collision_search`].

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::embedding::{draw_sensing, QuantisedMap};
use crate::error::{check_dim, invalid, Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::geometry::{difference_set, mean_and_stderr, Ball, DifferenceBall};
use crate::rng::{child_seed, rng_from_seed};
use crate::solvers::{trial_margins, SolverConfig, TrialMargins};
use crate::vecops::{norm, sub};

/// Fraction of trials that may be dropped for solver failures.
pub const EXCLUSION_BUDGET: f64 = 0.05;

pub fn pbar_indicator(tau: f64, delta: f64) -> f64 {
    if tau > delta {
        1.0
    } else {
        0.0
    }
}

/// `∏ min(1, τ_j/δ)`; empty cones (`+∞`) contribute 1.
pub fn pbarbar_factor(tau_j: &[f64], delta: f64) -> f64 {
    tau_j.iter().map(|&t| (t / delta).min(1.0)).product()
}

/// Margins of one sensing draw, from which outcomes at any `δ` follow.
#[derive(Clone, Debug)]
pub struct TrialCertificate {
    pub trial_index: usize,
    pub seed: u64,
    pub margins: TrialMargins,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialOutcome {
    pub trial_index: usize,
    pub seed: u64,
    pub tau: f64,
    pub pbar_indicator: f64,
    pub pbarbar_factor: f64,
    pub linear_indicator: f64,
}

impl TrialCertificate {
    /// Draws `Φ` from the trial's child seed and solves its margins.
    pub fn run(d: &DifferenceBall, m: usize, trial_index: usize, master_seed: u64, cfg: &SolverConfig) -> Result<Self> {
        let seed = child_seed(master_seed, trial_index as u64);
        let phi = draw_sensing(m, d.dim(), seed)?;
        Ok(Self {
            trial_index,
            seed,
            margins: trial_margins(&phi, d, cfg)?,
        })
    }

    pub fn converged(&self) -> bool {
        self.margins.converged()
    }

    pub fn outcome(&self, delta: f64) -> TrialOutcome {
        let tau = self.margins.margin.tau;
        TrialOutcome {
            trial_index: self.trial_index,
            seed: self.seed,
            tau,
            pbar_indicator: pbar_indicator(tau, delta),
            pbarbar_factor: pbarbar_factor(&self.margins.cones.tau_j, delta),
            linear_indicator: if self.margins.linear_eclipse { 1.0 } else { 0.0 },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbabilityEstimates {
    pub p_bar_hat: f64,
    pub p_bbar_hat: f64,
    pub p_lin_hat: f64,
    pub se_bar: f64,
    pub se_bbar: f64,
    pub se_lin: f64,
    /// Trials that entered the averages.
    pub trials: usize,
    pub excluded: usize,
}

/// Averages the outcomes of converged trials at resolution `delta`.
///
/// Fails when more than [`EXCLUSION_BUDGET`] of the trials did not converge.
pub fn aggregate(certs: &[TrialCertificate], delta: f64) -> Result<ProbabilityEstimates> {
    let total = certs.len();
    let kept: Vec<TrialOutcome> = certs
        .iter()
        .filter(|c| c.converged())
        .map(|c| c.outcome(delta))
        .collect();
    let excluded = total - kept.len();
    let budget = (EXCLUSION_BUDGET * total as f64).floor() as usize;
    if excluded > budget || kept.is_empty() {
        return Err(Error::SolverBudget {
            excluded,
            trials: total,
            budget,
        });
    }
    let column = |f: fn(&TrialOutcome) -> f64| mean_and_stderr(&kept.iter().map(f).collect::<Vec<_>>());
    let (p_bar_hat, se_bar) = column(|o| o.pbar_indicator);
    let (p_bbar_hat, se_bbar) = column(|o| o.pbarbar_factor);
    let (p_lin_hat, se_lin) = column(|o| o.linear_indicator);
    Ok(ProbabilityEstimates {
        p_bar_hat,
        p_bbar_hat,
        p_lin_hat,
        se_bar,
        se_bbar,
        se_lin,
        trials: kept.len(),
        excluded,
    })
}

/// Runs `trials` independent draws; the result does not depend on `exec`.
pub fn run_trials(
    d: &DifferenceBall,
    m: usize,
    trials: usize,
    master_seed: u64,
    cfg: &SolverConfig,
    exec: Execution,
) -> Result<Vec<TrialCertificate>> {
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    map_indexed(exec, trials, |i| TrialCertificate::run(d, m, i, master_seed, cfg))
        .into_iter()
        .collect()
}

pub fn estimate(
    scene: (&Ball, &Ball),
    m: usize,
    delta: f64,
    trials: usize,
    master_seed: u64,
    cfg: &SolverConfig,
) -> Result<ProbabilityEstimates> {
    estimate_with(scene, m, delta, trials, master_seed, cfg, Execution::default())
}

pub fn estimate_with(
    scene: (&Ball, &Ball),
    m: usize,
    delta: f64,
    trials: usize,
    master_seed: u64,
    cfg: &SolverConfig,
    exec: Execution,
) -> Result<ProbabilityEstimates> {
    if trials < 2 {
        return Err(invalid("at least two trials are needed"));
    }
    if !(delta > 0.0) {
        return Err(invalid("delta must be positive"));
    }
    let d = difference_set(scene.0, scene.1)?;
    let certs = run_trials(&d, m, trials, master_seed, cfg, exec)?;
    aggregate(&certs, delta)
}

/// Looks for `x₁ ∈ C₁`, `x₂ ∈ C₂` with equal signatures. Half the samples sit
/// on the sphere near the two facing poles, half are uniform in each ball.
pub fn collision_search(
    map: &QuantisedMap,
    scene: (&Ball, &Ball),
    samples: usize,
    seed: u64,
) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    if samples == 0 {
        return Err(invalid("collision search needs at least one sample"));
    }
    let (b1, b2) = scene;
    check_dim(b1.dim(), b2.dim())?;
    check_dim(map.phi().cols(), b1.dim())?;
    difference_set(b1, b2)?;
    let axis = {
        let v = sub(b2.center(), b1.center());
        let len = norm(&v);
        v.into_iter().map(|x| x / len).collect::<Vec<_>>()
    };
    let toward: Vec<f64> = axis.iter().map(|x| -x).collect();
    let mut rng = rng_from_seed(seed);
    for _ in 0..samples {
        let near_poles = rng.random_bool(0.5);
        let (x1, x2) = if near_poles {
            (cap_point(b1, &axis, &mut rng), cap_point(b2, &toward, &mut rng))
        } else {
            (uniform_point(b1, &mut rng), uniform_point(b2, &mut rng))
        };
        if map.cells(&x1)? == map.cells(&x2)? {
            return Ok(Some((x1, x2)));
        }
    }
    Ok(None)
}

fn gaussian(n: usize, rng: &mut crate::rng::Rng) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// A point on the sphere of `ball` within a random angular spread of `pole`.
fn cap_point(ball: &Ball, pole: &[f64], rng: &mut crate::rng::Rng) -> Vec<f64> {
    let n = ball.dim();
    let spread: f64 = rng.random::<f64>() / (n as f64).sqrt();
    let g = gaussian(n, rng);
    let mut dir: Vec<f64> = pole.iter().zip(&g).map(|(p, x)| p + spread * x).collect();
    let len = norm(&dir);
    if len == 0.0 {
        dir = pole.to_vec();
    } else {
        dir.iter_mut().for_each(|x| *x /= len);
    }
    ball.center()
        .iter()
        .zip(&dir)
        .map(|(c, u)| c + ball.radius() * u)
        .collect()
}

fn uniform_point(ball: &Ball, rng: &mut crate::rng::Rng) -> Vec<f64> {
    let n = ball.dim();
    let mut g = gaussian(n, rng);
    while norm(&g) == 0.0 {
        g = gaussian(n, rng);
    }
    let len = norm(&g);
    let radius = ball.radius() * rng.random::<f64>().powf(1.0 / n as f64);
    ball.center()
        .iter()
        .zip(&g)
        .map(|(c, x)| c + radius * x / len)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::SensingMatrix;
    use proptest::prelude::*;

    #[test]
    fn indicator_examples() {
        assert_eq!(pbar_indicator(3.0, 2.0), 1.0);
        assert_eq!(pbar_indicator(3.0, 3.0), 0.0);
        assert_eq!(pbar_indicator(0.0, 1e-9), 0.0);
    }

    #[test]
    fn factor_examples() {
        assert_eq!(pbarbar_factor(&[3.0, 3.0], 4.0), 0.5625);
        assert_eq!(pbarbar_factor(&[5.0, f64::INFINITY, 4.0], 4.0), 1.0);
        assert_eq!(pbarbar_factor(&[5.0, 0.0], 4.0), 0.0);
    }

    #[test]
    fn identity_instance_factor() {
        let phi = SensingMatrix::identity(2).unwrap();
        let d = DifferenceBall::new(vec![3.0, 4.0], 1.0).unwrap();
        let margins = trial_margins(&phi, &d, &SolverConfig::default()).unwrap();
        let f = pbarbar_factor(&margins.cones.tau_j, 4.0);
        assert!((f - 0.5625).abs() < 1e-4, "{f}");
    }

    fn scene(n: usize, sep: f64) -> (Ball, Ball) {
        let mut c = vec![0.0; n];
        c[0] = sep + 2.0;
        (Ball::new(c, 1.0).unwrap(), Ball::new(vec![0.0; n], 1.0).unwrap())
    }

    #[test]
    fn estimates_are_reproducible_and_mode_independent() {
        let (b1, b2) = scene(6, 3.0);
        let cfg = SolverConfig::default();
        let a = estimate_with((&b1, &b2), 4, 0.5, 12, 77, &cfg, Execution::Sequential).unwrap();
        let b = estimate_with((&b1, &b2), 4, 0.5, 12, 77, &cfg, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trials, 12);
    }

    #[test]
    fn vanishing_resolution_matches_linear() {
        let (b1, b2) = scene(5, 2.0);
        let cfg = SolverConfig::default();
        let d = difference_set(&b1, &b2).unwrap();
        let certs = run_trials(&d, 3, 40, 5, &cfg, Execution::Sequential).unwrap();
        for c in &certs {
            let o = c.outcome(1e-12);
            assert_eq!(o.pbarbar_factor, o.linear_indicator, "{o:?}");
        }
    }

    #[test]
    fn huge_separation_is_always_certified() {
        let n = 4;
        let mut c = vec![0.0; n];
        c[0] = 1e6;
        let b1 = Ball::new(c, 1.0).unwrap();
        let b2 = Ball::new(vec![0.0; n], 1.0).unwrap();
        let est = estimate((&b1, &b2), n, 1.0, 16, 3, &SolverConfig::default()).unwrap();
        assert_eq!((est.p_bar_hat, est.p_bbar_hat, est.p_lin_hat), (1.0, 1.0, 1.0));
    }

    #[test]
    fn too_few_trials_rejected() {
        let (b1, b2) = scene(3, 1.0);
        assert!(estimate((&b1, &b2), 2, 1.0, 1, 0, &SolverConfig::default()).is_err());
    }

    #[test]
    fn one_dimensional_collision_is_found() {
        let phi = SensingMatrix::identity(1).unwrap();
        let map = QuantisedMap::new(phi, 10.0, vec![0.5]).unwrap();
        let b1 = Ball::new(vec![0.0], 1.0).unwrap();
        let b2 = Ball::new(vec![3.0], 1.0).unwrap();
        let (x1, x2) = collision_search(&map, (&b1, &b2), 1000, 1).unwrap().expect("collision");
        assert_eq!(map.apply(&x1).unwrap(), map.apply(&x2).unwrap());
        assert!(b1.contains(&x1, 1e-12) && b2.contains(&x2, 1e-12));
        assert!(collision_search(&map, (&b1, &b2), 0, 1).is_err());
    }

    #[test]
    fn certified_maps_have_no_collisions() {
        let (b1, b2) = scene(3, 4.0);
        let d = difference_set(&b1, &b2).unwrap();
        let cfg = SolverConfig::default();
        for trial in 0..10 {
            let cert = TrialCertificate::run(&d, 3, trial, 11, &cfg).unwrap();
            let delta = 0.5 * cert.margins.margin.lower_bound;
            if delta <= 0.0 {
                continue;
            }
            let phi = draw_sensing(3, 3, cert.seed).unwrap();
            let map = QuantisedMap::with_dither(phi, delta, child_seed(cert.seed, 1)).unwrap();
            assert!(collision_search(&map, (&b1, &b2), 2000, trial as u64)
                .unwrap()
                .is_none());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn dominance_chain_and_delta_monotonicity(seed in any::<u64>(), m in 1usize..5, sep in 0.05f64..6.0) {
            let (b1, b2) = scene(4, sep);
            let d = difference_set(&b1, &b2).unwrap();
            let cert = TrialCertificate::run(&d, m, 0, seed, &SolverConfig::default()).unwrap();
            let mut last = f64::INFINITY;
            for delta in [0.01, 0.1, 0.5, 1.0, 2.0, 8.0] {
                let o = cert.outcome(delta);
                prop_assert!(o.pbar_indicator <= o.pbarbar_factor);
                prop_assert!(o.pbarbar_factor <= o.linear_indicator);
                prop_assert!(o.pbarbar_factor <= last);
                last = o.pbarbar_factor;
            }
        }
    }
}
