//! Balls, their difference set, and the spherical-cap description of the
//! directions it spans.
//!
//! For `C⁻ = c + r·B` with `‖c‖ > r`, the normalised directions
//! `{z/‖z‖ : z ∈ C⁻}` form a spherical cap of half-angle `arcsin(r/‖c‖)`
//! around `c/‖c‖`. The supremum of a linear form over a cap has a closed
//! form, so Gaussian width samples need no inner optimisation.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, invalid, Error, Result};
use crate::rng::rng_from_seed;
use crate::vecops::{dist, dot, norm, sub};

/// A closed Euclidean ball `center + radius·B`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    center: Vec<f64>,
    radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(invalid("ball dimension must be at least 1"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("ball radius must be positive, got {radius}")));
        }
        if center.iter().any(|x| !x.is_finite()) {
            return Err(invalid("ball center has non-finite entries"));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, x: &[f64], slack: f64) -> bool {
        dist(x, &self.center) <= self.radius + slack
    }
}

/// The difference set `C₁ − C₂ = c + r·B` of two disjoint balls.
#[derive(Clone, Debug, PartialEq)]
pub struct DifferenceBall {
    c: Vec<f64>,
    r: f64,
}

impl DifferenceBall {
    /// Rejects `‖c‖ ≤ r`: the balls would intersect.
    pub fn new(c: Vec<f64>, r: f64) -> Result<Self> {
        if c.is_empty() {
            return Err(invalid("difference set dimension must be at least 1"));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid(format!("radius must be positive, got {r}")));
        }
        let distance = norm(&c);
        if !distance.is_finite() {
            return Err(invalid("center has non-finite entries"));
        }
        if distance <= r {
            return Err(Error::NotDisjoint { distance, radius: r });
        }
        Ok(Self { c, r })
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn center_norm(&self) -> f64 {
        norm(&self.c)
    }

    /// The same set scaled by `alpha > 0`.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        Self::new(self.c.iter().map(|x| x * alpha).collect(), self.r * alpha)
    }

    pub fn contains(&self, z: &[f64], slack: f64) -> bool {
        dist(z, &self.c) <= self.r + slack
    }
}

/// Half-angle of the direction cap of a [`DifferenceBall`], in `(0, π/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapAngle {
    theta: f64,
}

impl CapAngle {
    pub fn theta(self) -> f64 {
        self.theta
    }
}

pub fn difference_set(c1: &Ball, c2: &Ball) -> Result<DifferenceBall> {
    check_dim(c1.dim(), c2.dim())?;
    DifferenceBall::new(sub(&c1.center, &c2.center), c1.radius + c2.radius)
}

/// Distance from the origin to the difference set, `‖c‖ − r`.
pub fn separation(d: &DifferenceBall) -> f64 {
    d.center_norm() - d.r
}

pub fn cap_half_angle(d: &DifferenceBall) -> CapAngle {
    CapAngle {
        theta: (d.r / d.center_norm()).asin(),
    }
}

/// `sup_{x ∈ S} |gᵀx|` where `S` is the set of unit directions of `d`.
pub fn width_sample(g: &[f64], d: &DifferenceBall) -> Result<f64> {
    check_dim(d.dim(), g.len())?;
    let g_norm = norm(g);
    if g_norm == 0.0 {
        return Err(invalid("width sample direction must be nonzero"));
    }
    let c_norm = d.center_norm();
    let theta = cap_half_angle(d).theta;
    let cos_angle = (dot(g, &d.c) / (g_norm * c_norm)).clamp(-1.0, 1.0);
    let angle = cos_angle.acos();
    // Support of the cap in direction v: ‖v‖·cos(max(∠(v,c) − θ, 0)).
    let support = |a: f64| g_norm * (a - theta).clamp(0.0, std::f64::consts::PI).cos();
    Ok(support(angle).max(support(std::f64::consts::PI - angle)))
}

/// Monte Carlo estimate of the Gaussian mean width of the direction cap,
/// returned as `(mean, standard error)`.
pub fn mean_width_estimate(d: &DifferenceBall, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(invalid("mean width needs at least two samples"));
    }
    let mut rng = rng_from_seed(seed);
    let n = d.dim();
    let mut g = vec![0.0; n];
    let mut values = Vec::with_capacity(samples);
    while values.len() < samples {
        for gi in g.iter_mut() {
            *gi = StandardNormal.sample(&mut rng);
        }
        if g.iter().all(|&x| x == 0.0) {
            continue;
        }
        values.push(width_sample(&g, d)?);
    }
    Ok(mean_and_stderr(&values))
}

pub(crate) fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}
