//! Grid experiments: scenes, seeded trials, persistence and plots.
//!
//! One trial index `k` uses the same sensing draw for every `(m, σ)` cell:
//! `Φ` is drawn row-major from `child_seed(master_seed, k)`, so the matrix
//! for a smaller `m` is the top block of the one for a larger `m`. Margins
//! are solved once per `(m, σ, k)` and reused for every `δ`.

mod config;
mod phase;
mod svg;
mod table;

pub use config::parse_config;
pub use phase::{extract_curve, extract_phase_curve, Estimator, PhaseCurve};
pub use svg::{render_heatmap, write_heatmap};
pub use table::{read_csv, write_csv, write_csv_file, ResultRow};

use rand_distr::{Distribution, StandardNormal};

use crate::certificates::{aggregate, TrialCertificate, TrialOutcome};
use crate::error::{invalid, Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::geometry::{difference_set, Ball};
use crate::rng::rng_from_seed;
use crate::solvers::SolverConfig;
use crate::vecops::norm;

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub m_values: Vec<usize>,
    pub sigma_values: Vec<f64>,
    pub delta_values: Vec<f64>,
    pub r: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub level: f64,
    pub direction_seed: u64,
}

fn powers_of_two(count: u32) -> Vec<f64> {
    (0..count).map(|k| f64::from(1u32 << k)).collect()
}

impl GridSpec {
    /// Small profile for a workstation: n = 32, 64 trials.
    pub fn desk() -> Self {
        Self {
            n: 32,
            m_values: vec![1, 2, 4, 8, 16, 32],
            sigma_values: powers_of_two(8),
            delta_values: powers_of_two(6),
            r: 2.0,
            trials: 64,
            master_seed: 1,
            level: 0.9,
            direction_seed: 2,
        }
    }

    /// Full profile: n = 64, 128 trials, ten σ and ten δ values.
    pub fn full() -> Self {
        Self {
            n: 64,
            m_values: (0..7).map(|k| 1usize << k).collect(),
            sigma_values: powers_of_two(10),
            delta_values: powers_of_two(10),
            trials: 128,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn increasing<T: PartialOrd>(name: &str, v: &[T]) -> Result<()> {
            if v.is_empty() || v.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(invalid(format!("{name} must be nonempty and strictly increasing")));
            }
            Ok(())
        }
        increasing("m values", &self.m_values)?;
        increasing("sigma values", &self.sigma_values)?;
        increasing("delta values", &self.delta_values)?;
        if self.n == 0 || self.m_values[0] == 0 {
            return Err(invalid("n and every m must be at least 1"));
        }
        if !(self.sigma_values[0] > 0.0 && self.delta_values[0] > 0.0 && self.r > 0.0) {
            return Err(invalid("sigma, delta and r must be positive"));
        }
        if self
            .sigma_values
            .iter()
            .chain(&self.delta_values)
            .any(|v| !v.is_finite())
            || !self.r.is_finite()
        {
            return Err(invalid("grid values must be finite"));
        }
        if self.trials < 2 {
            return Err(invalid("at least two trials are needed"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(invalid("level must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Two balls of radius `r/2` whose difference set is `((σ+r)u, r)` for a unit
/// direction `u` fixed by `direction_seed`.
pub fn scene_from_sigma(n: usize, sigma: f64, r: f64, direction_seed: u64) -> Result<(Ball, Ball)> {
    if n == 0 || !(sigma > 0.0) || !(r > 0.0) {
        return Err(invalid("scene needs n ≥ 1 and positive sigma, r"));
    }
    let mut rng = rng_from_seed(direction_seed);
    let mut u: Vec<f64> = Vec::new();
    while norm(&u) == 0.0 {
        u = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    }
    let len = norm(&u);
    let far: Vec<f64> = u.iter().map(|x| -(sigma + r) * x / len).collect();
    Ok((Ball::new(vec![0.0; n], r / 2.0)?, Ball::new(far, r / 2.0)?))
}

/// Per-trial outcomes of one `(m, σ)` cell, for every `δ` of the grid.
#[derive(Clone, Debug)]
pub struct CellOutcomes {
    pub m: usize,
    pub sigma: f64,
    /// `per_delta[i]` holds the converged trials' outcomes at `delta_values[i]`.
    pub per_delta: Vec<Vec<TrialOutcome>>,
}

#[derive(Clone, Debug)]
pub struct GridRun {
    pub rows: Vec<ResultRow>,
    pub cells: Vec<CellOutcomes>,
}

/// Runs every cell of the grid. Rows come out in `(m, σ, δ)` order whatever
/// the execution mode.
pub fn run_grid(spec: &GridSpec, cfg: &SolverConfig, exec: Execution) -> Result<GridRun> {
    spec.validate()?;
    let scenes = spec
        .sigma_values
        .iter()
        .map(|&sigma| {
            let (c1, c2) = scene_from_sigma(spec.n, sigma, spec.r, spec.direction_seed)?;
            difference_set(&c1, &c2)
        })
        .collect::<Result<Vec<_>>>()?;

    let per_m = spec.sigma_values.len() * spec.trials;
    let jobs = spec.m_values.len() * per_m;
    let certs = map_indexed(exec, jobs, |job| {
        let m = spec.m_values[job / per_m];
        let s = job % per_m / spec.trials;
        let trial = job % spec.trials;
        TrialCertificate::run(&scenes[s], m, trial, spec.master_seed, cfg).map(|mut cert| {
            // Keep only what the aggregation needs.
            cert.margins.cones.minimizers.clear();
            cert
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(jobs / spec.trials * spec.delta_values.len());
    let mut cells = Vec::with_capacity(jobs / spec.trials);
    for (cell_index, cell) in certs.chunks(spec.trials).enumerate() {
        let m = spec.m_values[cell_index / spec.sigma_values.len()];
        let sigma = spec.sigma_values[cell_index % spec.sigma_values.len()];
        let mut per_delta = Vec::with_capacity(spec.delta_values.len());
        for &delta in &spec.delta_values {
            let est = aggregate(cell, delta).map_err(|e| Error::InCell {
                m,
                sigma,
                source: Box::new(e),
            })?;
            rows.push(ResultRow {
                n: spec.n,
                m,
                sigma,
                delta,
                r: spec.r,
                trials: spec.trials,
                master_seed: spec.master_seed,
                p_bar_hat: est.p_bar_hat,
                p_bbar_hat: est.p_bbar_hat,
                p_lin_hat: est.p_lin_hat,
                se_bar: est.se_bar,
                se_bbar: est.se_bbar,
                se_lin: est.se_lin,
                excluded_trials: est.excluded,
            });
            per_delta.push(
                cell.iter()
                    .filter(|c| c.converged())
                    .map(|c| c.outcome(delta))
                    .collect(),
            );
        }
        cells.push(CellOutcomes { m, sigma, per_delta });
    }
    Ok(GridRun { rows, cells })
}
