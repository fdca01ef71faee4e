//! Margins of a difference ball under a sensing matrix.
//!
//! All three problems are solved on a reduced, normalised instance: `z` is
//! restricted to `c + rowspace(Φ)` (the component of `z` in `Ker Φ` changes
//! no objective or constraint and only wastes ball radius), and lengths are
//! divided by `‖c‖₂` so tolerances are dimensionless. When the kernel meets
//! `C⁻` every margin is exactly zero and no program is solved.

mod barrier;

use nalgebra::DMatrix;

use crate::embedding::SensingMatrix;
use crate::error::{check_dim, invalid, Result};
use crate::geometry::DifferenceBall;
use crate::vecops::{dot, norm, norm_inf};

use barrier::{BallProgram, Objective, StopRule};

const RANK_TOL: f64 = 1e-10;

/// Stopping tolerances, applied to the instance normalised by `‖c‖₂`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps_abs: 1e-6,
            eps_rel: 1e-4,
            max_iter: 100_000,
        }
    }
}

impl SolverConfig {
    pub fn new(eps_abs: f64, eps_rel: f64, max_iter: usize) -> Result<Self> {
        if !(eps_abs > 0.0 && eps_abs.is_finite()) || !(eps_rel > 0.0 && eps_rel.is_finite()) || max_iter == 0 {
            return Err(invalid("solver tolerances and iteration budget must be positive"));
        }
        Ok(Self {
            eps_abs,
            eps_rel,
            max_iter,
        })
    }

    /// Absolute tolerance on a margin of size `tau` in original units.
    pub fn tolerance(&self, tau: f64, d: &DifferenceBall) -> f64 {
        self.eps_abs * d.center_norm() + self.eps_rel * tau.abs()
    }
}

#[derive(Clone, Debug)]
pub struct MarginResult {
    pub tau: f64,
    /// Certified lower bound on the true optimum.
    pub lower_bound: f64,
    pub minimizer: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct ConeMargins {
    /// `+∞` marks an empty cone.
    pub tau_j: Vec<f64>,
    pub lower_bounds: Vec<f64>,
    pub minimizers: Vec<Option<Vec<f64>>>,
    pub converged: Vec<bool>,
    pub iterations: usize,
}

impl ConeMargins {
    pub fn min(&self) -> f64 {
        self.tau_j.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

/// Everything one sensing matrix yields for one difference ball, reconciled
/// so that `τ_j ≥ τ` holds exactly and all margins vanish exactly when the
/// kernel meets `C⁻`.
#[derive(Clone, Debug)]
pub struct TrialMargins {
    pub linear_eclipse: bool,
    pub margin: MarginResult,
    pub cones: ConeMargins,
}

impl TrialMargins {
    pub fn converged(&self) -> bool {
        self.margin.converged && self.cones.all_converged()
    }
}

/// `min ‖Φz‖∞` over `z ∈ C⁻`.
pub fn infinity_margin(phi: &SensingMatrix, d: &DifferenceBall, cfg: &SolverConfig) -> Result<MarginResult> {
    let red = Reduced::new(phi, d)?;
    if !red.holds {
        return Ok(red.kernel_margin());
    }
    Ok(red.infinity_margin(cfg))
}

/// `τ_j = min |φ_jᵀz|` over `z ∈ C⁻` with `|φ_jᵀz| ≥ |φ_iᵀz|` for all `i`.
pub fn cone_margins(phi: &SensingMatrix, d: &DifferenceBall, cfg: &SolverConfig) -> Result<ConeMargins> {
    let red = Reduced::new(phi, d)?;
    if !red.holds {
        return Ok(red.kernel_cones());
    }
    Ok(red.cone_margins(cfg))
}

/// True iff `0 ∉ ΦC⁻`.
pub fn linear_eclipse_holds(phi: &SensingMatrix, d: &DifferenceBall) -> Result<bool> {
    Ok(Reduced::new(phi, d)?.holds)
}

pub fn trial_margins(phi: &SensingMatrix, d: &DifferenceBall, cfg: &SolverConfig) -> Result<TrialMargins> {
    let red = Reduced::new(phi, d)?;
    if !red.holds {
        return Ok(TrialMargins {
            linear_eclipse: false,
            margin: red.kernel_margin(),
            cones: red.kernel_cones(),
        });
    }
    let mut margin = red.infinity_margin(cfg);
    let mut cones = red.cone_margins(cfg);

    // Any point found in a cone is also a candidate for τ.
    for z in cones.minimizers.iter().flatten() {
        let value = norm_inf(&phi.mul_vec(z)?);
        if value < margin.tau {
            margin.tau = value;
            margin.minimizer.clone_from(z);
        }
    }
    margin.lower_bound = margin.lower_bound.min(margin.tau);
    for j in 0..cones.tau_j.len() {
        cones.tau_j[j] = cones.tau_j[j].max(margin.tau);
        cones.lower_bounds[j] = cones.lower_bounds[j].max(margin.lower_bound);
    }
    Ok(TrialMargins {
        linear_eclipse: true,
        margin,
        cones,
    })
}

/// The instance restricted to `c + rowspace(Φ)`, in coordinates of an
/// orthonormal row-space basis and scaled by `1/‖c‖₂`.
pub(crate) struct Reduced {
    m: usize,
    k: usize,
    basis: DMatrix<f64>,
    phi: Vec<f64>,
    c: Vec<f64>,
    r: f64,
    scale: f64,
    c_full: Vec<f64>,
    holds: bool,
}

impl Reduced {
    pub(crate) fn new(phi: &SensingMatrix, d: &DifferenceBall) -> Result<Self> {
        check_dim(phi.cols(), d.dim())?;
        let (m, n) = (phi.rows(), phi.cols());
        let mat = DMatrix::from_row_slice(m, n, phi.data());
        let svd = mat.clone().svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors requested");
        let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| top > 0.0 && svd.singular_values[i] > RANK_TOL * top)
            .collect();
        let k = keep.len();
        let mut basis = DMatrix::<f64>::zeros(n, k);
        for (col, &i) in keep.iter().enumerate() {
            for row in 0..n {
                basis[(row, col)] = v_t[(i, row)];
            }
        }
        let scale = d.center_norm();
        let c_full = d.c().to_vec();
        let proj: Vec<f64> = (0..k).map(|col| dot(basis.column(col).as_slice(), &c_full)).collect();
        let holds = norm(&proj) > d.r();
        let reduced_phi = &mat * &basis;
        let mut phi_rows = Vec::with_capacity(m * k);
        for i in 0..m {
            for col in 0..k {
                phi_rows.push(reduced_phi[(i, col)]);
            }
        }
        Ok(Self {
            m,
            k,
            basis,
            phi: phi_rows,
            c: proj.iter().map(|v| v / scale).collect(),
            r: d.r() / scale,
            scale,
            c_full,
            holds,
        })
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.phi[i * self.k..(i + 1) * self.k]
    }

    /// Back to ℝⁿ: `z = c + ‖c‖·Q(y − c')`.
    fn lift(&self, y: &[f64]) -> Vec<f64> {
        let mut z = self.c_full.clone();
        for (col, (yc, cc)) in y.iter().zip(&self.c).enumerate() {
            let w = self.scale * (yc - cc);
            for (zi, q) in z.iter_mut().zip(self.basis.column(col).iter()) {
                *zi += w * q;
            }
        }
        z
    }

    fn kernel_point(&self) -> Vec<f64> {
        let mut z = self.c_full.clone();
        for col in 0..self.k {
            let w = self.scale * self.c[col];
            for (zi, q) in z.iter_mut().zip(self.basis.column(col).iter()) {
                *zi -= w * q;
            }
        }
        z
    }

    fn kernel_margin(&self) -> MarginResult {
        MarginResult {
            tau: 0.0,
            lower_bound: 0.0,
            minimizer: self.kernel_point(),
            iterations: 0,
            converged: true,
        }
    }

    fn kernel_cones(&self) -> ConeMargins {
        let z = self.kernel_point();
        ConeMargins {
            tau_j: vec![0.0; self.m],
            lower_bounds: vec![0.0; self.m],
            minimizers: vec![Some(z); self.m],
            converged: vec![true; self.m],
            iterations: 0,
        }
    }

    fn reduced_phi_inf(&self, y: &[f64]) -> f64 {
        (0..self.m).map(|i| dot(self.row(i), y).abs()).fold(0.0, f64::max)
    }

    /// The epigraph program, solved even when the kernel meets the ball.
    pub(crate) fn infinity_margin(&self, cfg: &SolverConfig) -> MarginResult {
        let mut rows = Vec::with_capacity(2 * self.m * self.k);
        for i in 0..self.m {
            rows.extend_from_slice(self.row(i));
            rows.extend(self.row(i).iter().map(|v| -v));
        }
        let rhs = vec![0.0; 2 * self.m];
        let program = BallProgram {
            dim: self.k,
            center: &self.c,
            radius: self.r,
            rows: &rows,
            rhs: &rhs,
            objective: Objective::Epigraph,
            floor: Some(0.0),
        };
        let mut x0 = self.c.clone();
        x0.push(self.reduced_phi_inf(&self.c) + 1.0);
        let out = barrier::solve(&program, x0, gap_rule(cfg), cfg.max_iter);
        let y = &out.x[..self.k];
        MarginResult {
            tau: self.scale * self.reduced_phi_inf(y),
            lower_bound: self.scale * out.lower.max(0.0),
            minimizer: self.lift(y),
            iterations: out.steps,
            converged: out.converged,
        }
    }

    pub(crate) fn cone_margins(&self, cfg: &SolverConfig) -> ConeMargins {
        let mut result = ConeMargins {
            tau_j: vec![f64::INFINITY; self.m],
            lower_bounds: vec![f64::INFINITY; self.m],
            minimizers: vec![None; self.m],
            converged: vec![true; self.m],
            iterations: 0,
        };
        for j in 0..self.m {
            for sign in [1.0, -1.0] {
                let piece = self.cone_piece(j, sign, cfg);
                result.iterations += piece.iterations;
                result.converged[j] &= piece.converged;
                result.lower_bounds[j] = result.lower_bounds[j].min(piece.lower);
                if piece.value < result.tau_j[j] {
                    result.tau_j[j] = piece.value;
                    result.minimizers[j] = piece.point.map(|y| self.lift(&y));
                }
            }
            result.tau_j[j] *= self.scale;
            result.lower_bounds[j] *= self.scale;
        }
        result
    }

    /// `min aᵀy` with `a = s·φ_j` over the ball and the cone piece
    /// `aᵀy ≥ 0`, `±φ_iᵀy ≤ aᵀy`.
    fn cone_piece(&self, j: usize, sign: f64, cfg: &SolverConfig) -> Piece {
        let a: Vec<f64> = self.row(j).iter().map(|v| sign * v).collect();
        let a_norm = norm(&a);
        if a_norm == 0.0 {
            // φ_j = 0 only meets points with Φz = 0, which the kernel test excluded.
            return Piece::empty(0);
        }
        let mut rows = Vec::new();
        let mut push = |g: Vec<f64>| {
            let len = norm(&g);
            if len > 1e-12 * a_norm {
                rows.extend(g.iter().map(|v| v / len));
            }
        };
        push(a.iter().map(|v| -v).collect());
        for i in (0..self.m).filter(|&i| i != j) {
            let phi_i = self.row(i);
            push(phi_i.iter().zip(&a).map(|(p, q)| p - q).collect());
            push(phi_i.iter().zip(&a).map(|(p, q)| -p - q).collect());
        }
        let count = rows.len() / self.k;
        let rhs = vec![0.0; count];

        // Phase I: minimise the largest normalised violation.
        let phase1 = BallProgram {
            dim: self.k,
            center: &self.c,
            radius: self.r,
            rows: &rows,
            rhs: &rhs,
            objective: Objective::Epigraph,
            floor: None,
        };
        let worst = (0..count)
            .map(|i| dot(&rows[i * self.k..(i + 1) * self.k], &self.c))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut x0 = self.c.clone();
        x0.push(worst + 1.0);
        let rule = StopRule {
            eps_abs: cfg.eps_abs,
            eps_rel: 0.0,
            lower_exceeds: Some(cfg.eps_abs),
            interior_exit: true,
        };
        let feas = barrier::solve(&phase1, x0, rule, cfg.max_iter);
        if !feas.converged {
            return Piece {
                value: f64::INFINITY,
                lower: 0.0,
                point: None,
                iterations: feas.steps,
                converged: false,
            };
        }
        if feas.lower > cfg.eps_abs {
            return Piece::empty(feas.steps);
        }
        let start = feas.x[..self.k].to_vec();
        if feas.upper >= 0.0 {
            // The piece is (numerically) lower dimensional: keep the
            // least-violating point.
            let value = dot(&a, &start).max(0.0);
            return Piece {
                value,
                lower: (value - cfg.eps_abs).max(0.0),
                point: Some(start),
                iterations: feas.steps,
                converged: true,
            };
        }

        let phase2 = BallProgram {
            dim: self.k,
            center: &self.c,
            radius: self.r,
            rows: &rows,
            rhs: &rhs,
            objective: Objective::Linear(&a),
            floor: Some(0.0),
        };
        let out = barrier::solve(
            &phase2,
            start,
            gap_rule(cfg),
            cfg.max_iter.saturating_sub(feas.steps).max(1),
        );
        Piece {
            value: out.upper.max(0.0),
            lower: out.lower.max(0.0),
            point: Some(out.x),
            iterations: feas.steps + out.steps,
            converged: out.converged,
        }
    }
}

struct Piece {
    value: f64,
    lower: f64,
    point: Option<Vec<f64>>,
    iterations: usize,
    converged: bool,
}

impl Piece {
    fn empty(iterations: usize) -> Self {
        Self {
            value: f64::INFINITY,
            lower: f64::INFINITY,
            point: None,
            iterations,
            converged: true,
        }
    }
}

fn gap_rule(cfg: &SolverConfig) -> StopRule {
    StopRule {
        eps_abs: cfg.eps_abs,
        eps_rel: cfg.eps_rel,
        lower_exceeds: None,
        interior_exit: false,
    }
}

#[cfg(test)]
mod tests;
