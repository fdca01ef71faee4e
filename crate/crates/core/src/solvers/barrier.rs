//! Interior-point kernel for the one family of programs the margins need:
//!
//! ```text
//! minimise  fᵀz                      (Linear)
//!      or   t with gᵢᵀz − t ≤ hᵢ     (Epigraph)
//! subject to gᵢᵀz ≤ hᵢ (Linear) and ‖z − c‖₂ ≤ r
//! ```
//!
//! Newton steps on the log barrier `t·objective − Σ log sᵢ − log(r² − ‖z−c‖²)`
//! with a geometric schedule for `t`. After each centering the barrier
//! multipliers `μᵢ = 1/(t sᵢ)` are turned into a certified lower bound by
//! evaluating the Lagrange dual with the ball handled exactly:
//! `min_{‖z−c‖≤r} vᵀz = vᵀc − r‖v‖`. The upper bound is the objective at the
//! current strictly feasible iterate, so the gap is always a true gap.

use nalgebra::{DMatrix, DVector};

use crate::vecops::{dot, norm};

const BARRIER_GROWTH: f64 = 16.0;
const CENTERING_TOL: f64 = 1e-10;
const MAX_CENTERING_STEPS: usize = 200;

#[derive(Clone, Copy, Debug)]
pub(crate) enum Objective<'a> {
    Linear(&'a [f64]),
    Epigraph,
}

/// Constraint rows `gᵢ` (row-major, `len × dim`) with right-hand sides `hᵢ`.
pub(crate) struct BallProgram<'a> {
    pub dim: usize,
    pub center: &'a [f64],
    pub radius: f64,
    pub rows: &'a [f64],
    pub rhs: &'a [f64],
    pub objective: Objective<'a>,
    /// A value the optimum is known never to undercut.
    pub floor: Option<f64>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct StopRule {
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Stop as soon as the lower bound exceeds this (infeasibility proof for
    /// a violation-minimising program).
    pub lower_exceeds: Option<f64>,
    /// Stop once the upper bound is negative and within a factor two of the
    /// optimum, i.e. a comfortably interior point has been found.
    pub interior_exit: bool,
}

#[derive(Clone, Debug)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub upper: f64,
    pub lower: f64,
    pub steps: usize,
    pub converged: bool,
}

impl BallProgram<'_> {
    fn len(&self) -> usize {
        self.rhs.len()
    }

    fn epigraph(&self) -> bool {
        matches!(self.objective, Objective::Epigraph)
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    /// Slack `hᵢ − gᵢᵀz (+ t)`.
    fn slacks(&self, x: &[f64], out: &mut [f64]) {
        let z = &x[..self.dim];
        let lift = if self.epigraph() { x[self.dim] } else { 0.0 };
        for (i, s) in out.iter_mut().enumerate() {
            *s = self.rhs[i] - dot(self.row(i), z) + lift;
        }
    }

    fn ball_slack(&self, x: &[f64]) -> f64 {
        let z = &x[..self.dim];
        let d2: f64 = z.iter().zip(self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        self.radius * self.radius - d2
    }

    fn objective_value(&self, x: &[f64]) -> f64 {
        match self.objective {
            Objective::Linear(f) => dot(f, &x[..self.dim]),
            Objective::Epigraph => x[self.dim],
        }
    }

    /// Best objective attainable at `z`: for the epigraph form the smallest
    /// feasible `t`.
    fn primal_value(&self, x: &[f64]) -> f64 {
        match self.objective {
            Objective::Linear(f) => dot(f, &x[..self.dim]),
            Objective::Epigraph => (0..self.len())
                .map(|i| dot(self.row(i), &x[..self.dim]) - self.rhs[i])
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    fn barrier(&self, x: &[f64], t: f64, slack: &mut [f64]) -> f64 {
        self.slacks(x, slack);
        let q = self.ball_slack(x);
        if q <= 0.0 || slack.iter().any(|&s| s <= 0.0) {
            return f64::INFINITY;
        }
        t * self.objective_value(x) - slack.iter().map(|s| s.ln()).sum::<f64>() - q.ln()
    }

    /// Lagrange dual value at multipliers `mu ≥ 0`.
    pub(crate) fn dual_value(&self, mu: &[f64]) -> f64 {
        let mut v = vec![0.0; self.dim];
        let weight = match self.objective {
            Objective::Linear(f) => {
                v.copy_from_slice(f);
                1.0
            }
            Objective::Epigraph => {
                let total: f64 = mu.iter().sum();
                if total <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                1.0 / total
            }
        };
        let mut offset = 0.0;
        for (i, &m) in mu.iter().enumerate() {
            let w = m * weight;
            if w == 0.0 {
                continue;
            }
            offset -= w * self.rhs[i];
            for (vk, gk) in v.iter_mut().zip(self.row(i)) {
                *vk += w * gk;
            }
        }
        offset + dot(&v, self.center) - self.radius * norm(&v)
    }
}

/// Runs the barrier method from a strictly feasible `x0` (`dim` entries, plus
/// the epigraph variable when present).
pub(crate) fn solve(program: &BallProgram<'_>, x0: Vec<f64>, rule: StopRule, max_steps: usize) -> Outcome {
    let k = program.len();
    let n = program.dim;
    let d = n + usize::from(program.epigraph());
    debug_assert_eq!(x0.len(), d);

    // Constraint gradients aᵢ = (gᵢ, −1 for the epigraph variable).
    let mut a = DMatrix::<f64>::zeros(k, d);
    for i in 0..k {
        for (j, g) in program.row(i).iter().enumerate() {
            a[(i, j)] = *g;
        }
        if program.epigraph() {
            a[(i, n)] = -1.0;
        }
    }
    let mut obj_grad = vec![0.0; d];
    match program.objective {
        Objective::Linear(f) => obj_grad[..n].copy_from_slice(f),
        Objective::Epigraph => obj_grad[n] = 1.0,
    }

    let mut x = x0;
    let mut slack = vec![0.0; k];
    let mut trial_slack = vec![0.0; k];
    let mut trial = vec![0.0; d];
    let mut scaled = DMatrix::<f64>::zeros(k, d);
    let mut steps = 0usize;

    let mut t = {
        let scale = program.objective_value(&x).abs().max(1.0);
        (k as f64 + 1.0) / scale
    };

    let mut best = Outcome {
        x: x.clone(),
        upper: program.primal_value(&x),
        lower: program.floor.unwrap_or(f64::NEG_INFINITY),
        steps: 0,
        converged: false,
    };

    loop {
        // Centering.
        let mut centered = false;
        for _ in 0..MAX_CENTERING_STEPS {
            if steps >= max_steps {
                break;
            }
            program.slacks(&x, &mut slack);
            let q = program.ball_slack(&x);
            let mut grad = DVector::<f64>::from_column_slice(&obj_grad) * t;
            for i in 0..k {
                let inv = 1.0 / slack[i];
                for j in 0..d {
                    let v = a[(i, j)] * inv;
                    scaled[(i, j)] = v;
                    grad[j] += v;
                }
            }
            let mut hess = scaled.tr_mul(&scaled);
            for j in 0..n {
                let w = x[j] - program.center[j];
                grad[j] += 2.0 * w / q;
                hess[(j, j)] += 2.0 / q;
                for l in 0..n {
                    hess[(j, l)] += 4.0 * w * (x[l] - program.center[l]) / (q * q);
                }
            }
            let Some(step) = newton_direction(hess, &grad) else {
                break;
            };
            let decrement = -grad.dot(&step);
            steps += 1;
            if decrement / 2.0 <= CENTERING_TOL {
                centered = true;
                break;
            }
            // Largest step keeping every slack positive.
            let mut alpha_max = f64::INFINITY;
            for i in 0..k {
                let rate: f64 = (0..d).map(|j| a[(i, j)] * step[j]).sum();
                if rate > 0.0 {
                    alpha_max = alpha_max.min(slack[i] / rate);
                }
            }
            {
                // ‖w + αv‖² < r² with w = z − c, v = Δz
                let (mut vv, mut wv, mut ww) = (0.0, 0.0, 0.0);
                for j in 0..n {
                    let w = x[j] - program.center[j];
                    vv += step[j] * step[j];
                    wv += w * step[j];
                    ww += w * w;
                }
                if vv > 0.0 {
                    let c0 = ww - program.radius * program.radius;
                    let disc = (wv * wv - vv * c0).max(0.0);
                    alpha_max = alpha_max.min((-wv + disc.sqrt()) / vv);
                }
            }
            let mut alpha = (0.99 * alpha_max).min(1.0);
            let f0 = program.barrier(&x, t, &mut trial_slack);
            let slope = grad.dot(&step);
            let mut accepted = false;
            for _ in 0..60 {
                for j in 0..d {
                    trial[j] = x[j] + alpha * step[j];
                }
                let f1 = program.barrier(&trial, t, &mut trial_slack);
                if f1 <= f0 + 0.25 * alpha * slope {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                // No progress possible at this precision.
                centered = true;
                break;
            }
            x.copy_from_slice(&trial);
        }

        // Certified bounds at the current iterate.
        program.slacks(&x, &mut slack);
        let upper = program.primal_value(&x);
        let mu: Vec<f64> = slack.iter().map(|s| 1.0 / (t * s)).collect();
        let mut lower = program.dual_value(&mu);
        if let Some(floor) = program.floor {
            lower = lower.max(floor);
        }
        if upper < best.upper || lower > best.lower {
            if upper < best.upper {
                best.upper = upper;
                best.x.copy_from_slice(&x);
            }
            best.lower = best.lower.max(lower);
        }
        best.steps = steps;

        let gap = best.upper - best.lower;
        if gap <= rule.eps_abs + rule.eps_rel * best.upper.abs() {
            best.converged = true;
            return best;
        }
        if let Some(limit) = rule.lower_exceeds {
            if best.lower > limit {
                best.converged = true;
                return best;
            }
        }
        if rule.interior_exit && best.upper < 0.0 && gap <= best.upper.abs() {
            best.converged = true;
            return best;
        }
        if steps >= max_steps || !centered && t > 1e14 {
            return best;
        }
        if t > 1e16 {
            // Out of floating-point headroom.
            return best;
        }
        t *= BARRIER_GROWTH;
    }
}

fn newton_direction(mut hess: DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let d = grad.len();
    for attempt in 0..3 {
        if let Some(chol) = hess.clone().cholesky() {
            let step = -chol.solve(grad);
            if step.iter().all(|v| v.is_finite()) {
                return Some(step);
            }
        }
        let trace: f64 = (0..d).map(|i| hess[(i, i)]).sum::<f64>().abs().max(1e-300);
        let jitter = trace / d as f64 * 10f64.powi(-12 + 3 * attempt);
        for i in 0..d {
            hess[(i, i)] += jitter;
        }
    }
    None
}
