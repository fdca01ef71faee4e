//! Sample-complexity formulas with their hidden constants made explicit.

use crate::error::{invalid, Error, Result};
use crate::geometry::DifferenceBall;

/// Widths below this make the `w⁻² log(1/η)` term dominate artificially.
pub const SMALL_WIDTH: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundConfig {
    pub c1: f64,
    pub c2: f64,
    pub max_fixed_point_iters: usize,
    /// Optional cap on `r·m/(δ·n)` inside the logarithm of the quantised
    /// bound. `None` evaluates the formula as written.
    pub log_ratio_cap: Option<f64>,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            max_fixed_point_iters: 100,
            log_ratio_cap: None,
        }
    }
}

impl BoundConfig {
    fn validate(&self) -> Result<()> {
        let cap_ok = self.log_ratio_cap.is_none_or(|c| c > 0.0);
        if !(self.c1 > 0.0 && self.c2 > 0.0 && self.max_fixed_point_iters > 0 && cap_ok) {
            return Err(invalid("bound constants must be positive"));
        }
        Ok(())
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("eta must lie in (0, 1), got {eta}")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {v}")))
    }
}

/// Measurements for the unquantised eclipse: `⌈C1((w + √(2 ln 1/η))² + 1)⌉`.
pub fn prop1_m(w: f64, eta: f64, cfg: &BoundConfig) -> Result<u64> {
    cfg.validate()?;
    positive("w", w)?;
    check_eta(eta)?;
    let root = (2.0 * (1.0 / eta).ln()).sqrt();
    Ok((cfg.c1 * ((w + root).powi(2) + 1.0)).ceil() as u64)
}

/// Parameters of the quantised bound, which is implicit in `m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantisedBound {
    pub w: f64,
    pub n: usize,
    pub delta: f64,
    pub sigma: f64,
    pub r: f64,
    pub eta: f64,
}

impl QuantisedBound {
    fn validate(&self) -> Result<()> {
        positive("w", self.w)?;
        positive("delta", self.delta)?;
        positive("sigma", self.sigma)?;
        positive("r", self.r)?;
        check_eta(self.eta)?;
        if self.n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        Ok(())
    }

    /// One application of `m ↦ ⌈C2 (w² + nδ²/σ²)(1 + ln(1 + rm/(δn)) + w⁻² ln 1/η)⌉`.
    pub fn map(&self, m: u64, cfg: &BoundConfig) -> f64 {
        let n = self.n as f64;
        let w2 = self.w * self.w;
        let prefactor = w2 + n * self.delta * self.delta / (self.sigma * self.sigma);
        let mut ratio = self.r * m as f64 / (self.delta * n);
        if let Some(cap) = cfg.log_ratio_cap {
            ratio = ratio.min(cap);
        }
        let tail = 1.0 + ratio.ln_1p() + (1.0 / self.eta).ln() / w2;
        (cfg.c2 * prefactor * tail).ceil()
    }
}

/// Least fixed point of the quantised bound, by monotone iteration from 1.
pub fn prop2_m(bound: &QuantisedBound, cfg: &BoundConfig) -> Result<u64> {
    cfg.validate()?;
    bound.validate()?;
    let mut m = 1u64;
    for _ in 0..cfg.max_fixed_point_iters {
        let next = bound.map(m, cfg);
        if !next.is_finite() || next >= u64::MAX as f64 {
            return Err(Error::FixedPoint(cfg.max_fixed_point_iters));
        }
        let next = (next as u64).max(1);
        if next == m {
            return Ok(m);
        }
        m = next;
    }
    Err(Error::FixedPoint(cfg.max_fixed_point_iters))
}

/// Scale of the two-ball width bound, `(r/‖c‖₂)·√n`, without constants.
pub fn ball_width_bound(d: &DifferenceBall) -> f64 {
    d.r() / d.center_norm() * (d.dim() as f64).sqrt()
}

pub fn width_is_small(w: f64) -> bool {
    w < SMALL_WIDTH
}
