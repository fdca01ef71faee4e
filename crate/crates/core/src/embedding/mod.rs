//! Gaussian sensing matrices, uniform dither and the quantised map
//! `A(x) = Q_δ(Φx + ξ)`, together with the threshold-counting distances
//! used to analyse it.

pub mod checks;

use std::io::{Read, Write};

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, invalid, Error, Result};
use crate::rng::rng_from_seed;
use crate::vecops::dot;

/// `κ₀ = √(π/2)`, the inverse of `E|g|` for a standard normal `g`.
pub const KAPPA0: f64 = 1.253_314_137_315_500_3;

/// Dense row-major `m × n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SensingMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SensingMatrix {
    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid("matrix dimensions must be at least 1"));
        }
        check_dim(rows * cols, data.len())?;
        if data.iter().any(|x| !x.is_finite()) {
            return Err(invalid("matrix has non-finite entries"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::from_rows(n, n, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Row `φ_j`.
    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.cols..(j + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.cols, x.len())?;
        Ok((0..self.rows).map(|j| dot(self.row(j), x)).collect())
    }

    /// The first `m` rows.
    pub fn top_rows(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.rows {
            return Err(invalid(format!("cannot take {m} of {} rows", self.rows)));
        }
        Self::from_rows(m, self.cols, self.data[..m * self.cols].to_vec())
    }

    /// Debug dump: `rows: u64`, `cols: u64`, then the entries as `f64`
    /// row-major, all little-endian.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.rows as u64).to_le_bytes())?;
        w.write_all(&(self.cols as u64).to_le_bytes())?;
        for x in &self.data {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let rows = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let cols = u64::from_le_bytes(word) as usize;
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Malformed("matrix dimensions overflow".into()))?;
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            r.read_exact(&mut word)?;
            data.push(f64::from_le_bytes(word));
        }
        Self::from_rows(rows, cols, data)
    }
}

/// I.i.d. standard normal entries, generated row by row from `seed`.
///
/// Generation is row-major, so the first `k` rows of an `m × n` draw equal
/// the `k × n` draw from the same seed.
pub fn draw_sensing(m: usize, n: usize, seed: u64) -> Result<SensingMatrix> {
    if m == 0 || n == 0 {
        return Err(invalid("matrix dimensions must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let data = (0..m * n).map(|_| StandardNormal.sample(&mut rng)).collect();
    SensingMatrix::from_rows(m, n, data)
}

pub fn draw_dither(m: usize, delta: f64, seed: u64) -> Result<Vec<f64>> {
    check_delta(delta)?;
    let mut rng = rng_from_seed(seed);
    Ok((0..m).map(|_| delta * rng.random::<f64>()).collect())
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("quantiser resolution must be positive, got {delta}")))
    }
}

#[inline]
fn quantise_scalar(v: f64, delta: f64) -> f64 {
    delta * (v / delta).floor()
}

/// Componentwise `δ·⌊v/δ⌋`.
pub fn quantise(v: &[f64], delta: f64) -> Result<Vec<f64>> {
    check_delta(delta)?;
    Ok(v.iter().map(|&x| quantise_scalar(x, delta)).collect())
}

/// One realisation `(Φ, δ, ξ)` of the quantised embedding.
#[derive(Clone, Debug)]
pub struct QuantisedMap {
    phi: SensingMatrix,
    delta: f64,
    xi: Vec<f64>,
}

impl QuantisedMap {
    pub fn new(phi: SensingMatrix, delta: f64, xi: Vec<f64>) -> Result<Self> {
        check_delta(delta)?;
        check_dim(phi.rows(), xi.len())?;
        if xi.iter().any(|&x| !(0.0..=delta).contains(&x)) {
            return Err(invalid("dither entries must lie in [0, δ]"));
        }
        Ok(Self { phi, delta, xi })
    }

    /// Draws a fresh dither for `phi` from `seed`.
    pub fn with_dither(phi: SensingMatrix, delta: f64, seed: u64) -> Result<Self> {
        let xi = draw_dither(phi.rows(), delta, seed)?;
        Self::new(phi, delta, xi)
    }

    pub fn phi(&self) -> &SensingMatrix {
        &self.phi
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn dither(&self) -> &[f64] {
        &self.xi
    }

    /// Signature `Q_δ(Φx + ξ)`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.phi.mul_vec(x)?;
        for (yi, xi) in y.iter_mut().zip(&self.xi) {
            *yi = quantise_scalar(*yi + xi, self.delta);
        }
        Ok(y)
    }

    /// Signature as integer cell indices `⌊(Φx + ξ)/δ⌋`, which compare
    /// exactly.
    pub fn cells(&self, x: &[f64]) -> Result<Vec<i64>> {
        let y = self.phi.mul_vec(x)?;
        Ok(y.iter()
            .zip(&self.xi)
            .map(|(yi, xi)| ((yi + xi) / self.delta).floor() as i64)
            .collect())
    }
}

/// `(1/m)‖a − b‖₁`.
pub fn l1_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    if a.is_empty() {
        return Err(invalid("l1 distance of empty vectors"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

/// `δ` times the number of thresholds `kδ` in the closed interval between
/// `a` and `b`.
///
/// Agrees with `|Q_δ(a) − Q_δ(b)|` unless an endpoint sits exactly on a
/// threshold.
pub fn hard_distance(a: f64, b: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let count = ((hi / delta).floor() - (lo / delta).ceil() + 1.0).max(0.0);
    Ok(delta * count)
}

/// Width parameter of the softened threshold-counting distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SoftDistanceParams {
    t: f64,
    delta: f64,
}

impl SoftDistanceParams {
    /// Requires `|t| < δ/2`; `t > 0` forbids, `t < 0` relaxes, the band
    /// `[kδ − |t|, kδ + |t|]` around each threshold.
    pub fn new(t: f64, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        if !(t.abs() < delta / 2.0) {
            return Err(invalid(format!(
                "soft distance needs |t| < δ/2, got t = {t}, δ = {delta}"
            )));
        }
        Ok(Self { t, delta })
    }

    pub fn t(self) -> f64 {
        self.t
    }

    pub fn delta(self) -> f64 {
        self.delta
    }
}

/// Number of integers in the open interval `(lo, hi)`.
fn integers_between(lo: f64, hi: f64) -> i64 {
    if hi <= lo {
        return 0;
    }
    (hi.ceil() - lo.floor() - 1.0).max(0.0) as i64
}

/// `δ · #{k ∈ ℤ : (a − kδ, b − kδ) ∈ Sᵗ}` with
/// `Sᵗ = {u < −t, v > t} ∪ {u > t, v < −t}` (strict inequalities).
pub fn soft_distance(a: f64, b: f64, p: SoftDistanceParams) -> f64 {
    let SoftDistanceParams { t, delta } = p;
    // a − kδ < −t and b − kδ > t  ⇔  (a + t)/δ < k < (b − t)/δ
    let up = ((a + t) / delta, (b - t) / delta);
    // a − kδ > t and b − kδ < −t  ⇔  (b + t)/δ < k < (a − t)/δ
    let down = ((b + t) / delta, (a - t) / delta);
    let both = (up.0.max(down.0), up.1.min(down.1));
    let count = integers_between(up.0, up.1) + integers_between(down.0, down.1) - integers_between(both.0, both.1);
    delta * count as f64
}

/// `(1/m) Σᵢ dᵗ(aᵢ, bᵢ)`.
pub fn soft_l1_distance(a: &[f64], b: &[f64], p: SoftDistanceParams) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    if a.is_empty() {
        return Err(invalid("soft distance of empty vectors"));
    }
    Ok(a.iter().zip(b).map(|(&x, &y)| soft_distance(x, y, p)).sum::<f64>() / a.len() as f64)
}
