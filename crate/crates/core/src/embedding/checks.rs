//! Statistical and deterministic property checks of the quantised
//! embedding, shared by the test suite and the `distcheck` subcommand.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::{
    draw_dither, draw_sensing, l1_distance, quantise_scalar, soft_l1_distance, QuantisedMap, SoftDistanceParams, KAPPA0,
};
use crate::error::Result;
use crate::geometry::mean_and_stderr;
use crate::rng::{child_seed, rng_from_seed};
use crate::vecops::{norm, norm_inf, sub};

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{status}] {}: {}", self.name, self.detail)
    }
}

/// `(κ₀/m)‖Φu‖₁` for `count` random unit vectors `u`; passes when every
/// value lies in `[1 − band, 1 + band]`.
pub fn rip_concentration(m: usize, n: usize, count: usize, band: f64, seed: u64) -> Result<CheckReport> {
    let phi = draw_sensing(m, n, child_seed(seed, 0))?;
    let mut rng = rng_from_seed(child_seed(seed, 1));
    let mut worst = 0.0f64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for _ in 0..count {
        let mut u: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let un = norm(&u);
        u.iter_mut().for_each(|x| *x /= un);
        let ratio = KAPPA0 / m as f64 * phi.mul_vec(&u)?.iter().map(|x| x.abs()).sum::<f64>();
        worst = worst.max((ratio - 1.0).abs());
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok(CheckReport {
        name: "l1-l2 concentration",
        passed: worst <= band,
        detail: format!("m={m} n={n} vectors={count}: ratios in [{lo:.4}, {hi:.4}], band ±{band}"),
    })
}

/// Monte Carlo mean of `|Q_δ(a+ξ) − Q_δ(b+ξ)|` against `|a − b|` for
/// `pairs` scalar pairs whose gaps sweep `[gap_lo·δ, gap_hi·δ]`; passes when
/// at least `pairs − 1` means fall within 4 standard errors.
pub fn dither_unbiasedness(
    pairs: usize,
    dithers: usize,
    delta: f64,
    (gap_lo, gap_hi): (f64, f64),
    seed: u64,
) -> Result<CheckReport> {
    let mut rng = rng_from_seed(child_seed(seed, 0));
    let mut within = 0usize;
    let mut worst_z = 0.0f64;
    for k in 0..pairs {
        let frac = if pairs > 1 { k as f64 / (pairs - 1) as f64 } else { 0.0 };
        let gap = delta * (gap_lo + (gap_hi - gap_lo) * frac);
        let a = delta * rng.random_range(-10.0..10.0);
        let b = a + gap;
        let xi = draw_dither(dithers, delta, child_seed(seed, k as u64 + 1))?;
        let samples: Vec<f64> = xi
            .iter()
            .map(|x| (quantise_scalar(a + x, delta) - quantise_scalar(b + x, delta)).abs())
            .collect();
        let (mean, se) = mean_and_stderr(&samples);
        let z = if se > 0.0 {
            (mean - gap).abs() / se
        } else if (mean - gap).abs() < 1e-12 * delta {
            0.0
        } else {
            f64::INFINITY
        };
        worst_z = worst_z.max(z);
        if z <= 4.0 {
            within += 1;
        }
    }
    Ok(CheckReport {
        name: "dither unbiasedness",
        passed: within + 1 >= pairs,
        detail: format!("{within}/{pairs} pairs within 4 SE over {dithers} dithers (worst |z| = {worst_z:.2})"),
    })
}

/// Equal signatures imply `‖Φ(x₁ − x₂)‖_∞ < δ`. Draws `pairs` random pairs in
/// a box small enough for collisions to be common.
pub fn consistency_implication(pairs: usize, seed: u64) -> Result<CheckReport> {
    let (m, n, delta) = (3, 4, 2.0);
    let map = QuantisedMap::with_dither(draw_sensing(m, n, child_seed(seed, 0))?, delta, child_seed(seed, 1))?;
    let mut rng = rng_from_seed(child_seed(seed, 2));
    let mut collisions = 0usize;
    let mut violations = 0usize;
    for _ in 0..pairs {
        let x1: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x2: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if map.cells(&x1)? == map.cells(&x2)? {
            collisions += 1;
            if norm_inf(&map.phi().mul_vec(&sub(&x1, &x2))?) >= delta {
                violations += 1;
            }
        }
    }
    Ok(CheckReport {
        name: "consistency implication",
        passed: violations == 0 && collisions > 0,
        detail: format!("{collisions} colliding pairs of {pairs}, {violations} with ‖Φz‖∞ ≥ δ"),
    })
}

/// For fixed `a, b ∈ ℝᵐ`, every fresh dither keeps
/// `|D(A′(a), A′(b)) − D(a, b)| ≤ band·δ`.
pub fn dithered_concentration(m: usize, draws: usize, delta: f64, band: f64, seed: u64) -> Result<CheckReport> {
    let mut rng = rng_from_seed(child_seed(seed, 0));
    let a: Vec<f64> = (0..m)
        .map(|_| delta * 5.0 * Distribution::<f64>::sample(&StandardNormal, &mut rng))
        .collect();
    let b: Vec<f64> = (0..m)
        .map(|_| delta * 5.0 * Distribution::<f64>::sample(&StandardNormal, &mut rng))
        .collect();
    let reference = l1_distance(&a, &b)?;
    let mut worst = 0.0f64;
    for k in 0..draws {
        let xi = draw_dither(m, delta, child_seed(seed, k as u64 + 1))?;
        let qa: Vec<f64> = a.iter().zip(&xi).map(|(v, x)| quantise_scalar(v + x, delta)).collect();
        let qb: Vec<f64> = b.iter().zip(&xi).map(|(v, x)| quantise_scalar(v + x, delta)).collect();
        worst = worst.max((l1_distance(&qa, &qb)? - reference).abs());
    }
    Ok(CheckReport {
        name: "dithered l1 concentration",
        passed: worst <= band * delta,
        detail: format!(
            "m={m} draws={draws}: worst deviation {:.4}δ, band {band}δ",
            worst / delta
        ),
    })
}

/// Both continuity inequalities of the soft distance under `ℓ₁`
/// perturbations of size `ρ = 0.01·mδ` with `P = 10`:
///
/// `Dᵗ(a,b) ≥ D^{t+ρP/m}(a₀,b₀) − 8(δ/P + ρ/m)` and
/// `Dᵗ(a,b) ≤ D^{t−ρP/m}(a₀,b₀) + 8(δ/P + ρ/m)`.
pub fn soft_continuity(instances: usize, m: usize, seed: u64) -> Result<CheckReport> {
    let delta = 1.0;
    let p = 10.0;
    let rho = 0.01 * m as f64 * delta;
    let shift = rho * p / m as f64;
    let slack = 8.0 * (delta / p + rho / m as f64);
    let mut rng = rng_from_seed(seed);
    let mut violations = 0usize;
    let mut tightest = f64::INFINITY;
    for _ in 0..instances {
        let a: Vec<f64> = (0..m).map(|_| rng.random_range(-4.0..4.0)).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.random_range(-4.0..4.0)).collect();
        let a0 = perturb_l1(&a, rho, &mut rng);
        let b0 = perturb_l1(&b, rho, &mut rng);
        // keep t ± ρP/m inside (−δ/2, δ/2)
        let limit = 0.5 * delta - shift;
        let t = rng.random_range(-limit..limit) * 0.999;
        let at = |tt: f64| SoftDistanceParams::new(tt, delta);
        let d = soft_l1_distance(&a, &b, at(t)?)?;
        let d_plus = soft_l1_distance(&a0, &b0, at(t + shift)?)?;
        let d_minus = soft_l1_distance(&a0, &b0, at(t - shift)?)?;
        let lower_margin = d - (d_plus - slack);
        let upper_margin = (d_minus + slack) - d;
        tightest = tightest.min(lower_margin).min(upper_margin);
        if lower_margin < 0.0 || upper_margin < 0.0 {
            violations += 1;
        }
    }
    Ok(CheckReport {
        name: "soft distance continuity",
        passed: violations == 0,
        detail: format!(
            "{instances} instances (m={m}, P=10, ρ=0.01mδ): {violations} violations, tightest margin {tightest:.4}"
        ),
    })
}

/// Adds a perturbation of `ℓ₁` norm at most `rho`, sometimes spread over all
/// coordinates and sometimes concentrated on a few.
fn perturb_l1(a: &[f64], rho: f64, rng: &mut crate::rng::Rng) -> Vec<f64> {
    let m = a.len();
    let support = match rng.random_range(0..3) {
        0 => 1,
        1 => rng.random_range(1..=m.min(5)),
        _ => m,
    };
    let mut weights = vec![0.0; m];
    for _ in 0..support {
        let i = rng.random_range(0..m);
        weights[i] += rng.random::<f64>() + 1e-3;
    }
    let total: f64 = weights.iter().sum();
    let budget = rho * rng.random::<f64>();
    a.iter()
        .zip(&weights)
        .map(|(x, w)| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            x + sign * budget * w / total
        })
        .collect()
}

/// The full battery with the default sizes.
pub fn battery(seed: u64) -> Result<Vec<CheckReport>> {
    Ok(vec![
        rip_concentration(2000, 64, 100, 0.1, child_seed(seed, 1))?,
        dither_unbiasedness(20, 100_000, 1.0, (0.1, 7.3), child_seed(seed, 2))?,
        consistency_implication(10_000, child_seed(seed, 3))?,
        dithered_concentration(2000, 100, 1.0, 0.1, child_seed(seed, 4))?,
        soft_continuity(10_000, 50, child_seed(seed, 5))?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rip_concentration_holds() {
        let r = rip_concentration(2000, 64, 100, 0.1, 17).unwrap();
        assert!(r.passed, "{r}");
    }

    #[test]
    fn dither_is_unbiased() {
        let r = dither_unbiasedness(20, 100_000, 1.5, (0.1, 7.3), 23).unwrap();
        assert!(r.passed, "{r}");
    }

    #[test]
    fn consistent_pairs_have_small_projection() {
        let r = consistency_implication(10_000, 31).unwrap();
        assert!(r.passed, "{r}");
    }

    #[test]
    fn dithered_embedding_concentrates() {
        let r = dithered_concentration(2000, 100, 0.7, 0.1, 37).unwrap();
        assert!(r.passed, "{r}");
    }

    #[test]
    fn soft_distance_is_continuous() {
        let r = soft_continuity(10_000, 50, 41).unwrap();
        assert!(r.passed, "{r}");
    }
}
