//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// What the branch and bound minimises.
#[derive(Clone, Copy, Debug)]
pub enum Target {
    /// `max_i |φ_iᵀz|` over the ball.
    Infinity,
    /// `|φ_jᵀz|` over the ball restricted to `|φ_iᵀz| ≤ |φ_jᵀz|` for all `i`.
    Cone(usize),
}

#[derive(Clone, Copy, Debug)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

struct Cube {
    center: Vec<f64>,
    half: f64,
    lb: f64,
}

impl PartialEq for Cube {
    fn eq(&self, other: &Self) -> bool {
        self.lb == other.lb
    }
}
impl Eq for Cube {}
impl PartialOrd for Cube {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cube {
    // BinaryHeap is a max-heap; smallest lower bound first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.lb.total_cmp(&self.lb)
    }
}

/// Exhaustive interval branch and bound over axis-aligned cubes covering the
/// ball. Each cube gets exact interval bounds on every `|φ_iᵀz|`; cubes that
/// miss the ball or provably leave the cone are discarded. Upper bounds come
/// from cube centres projected onto the ball.
pub fn branch_and_bound(phi: &[Vec<f64>], c: &[f64], r: f64, target: Target, tol: f64, budget: usize) -> Bracket {
    let n = c.len();
    let l1: Vec<f64> = phi.iter().map(|row| row.iter().map(|x| x.abs()).sum()).collect();
    let objective = |z: &[f64]| -> Option<f64> {
        let a: Vec<f64> = phi.iter().map(|row| dot(row, z).abs()).collect();
        match target {
            Target::Infinity => Some(a.iter().copied().fold(0.0, f64::max)),
            Target::Cone(j) => a.iter().all(|&v| v <= a[j]).then_some(a[j]),
        }
    };
    let mut upper = f64::INFINITY;
    let evaluate = |center: Vec<f64>, half: f64, upper: &mut f64| -> Option<Cube> {
        // distance from the ball centre to the cube
        let gap: f64 = center
            .iter()
            .zip(c)
            .map(|(x, ci)| {
                let d = (ci - x).abs() - half;
                if d > 0.0 {
                    d * d
                } else {
                    0.0
                }
            })
            .sum::<f64>()
            .sqrt();
        if gap > r {
            return None;
        }
        let mut lo = Vec::with_capacity(phi.len());
        let mut hi = Vec::with_capacity(phi.len());
        for (row, s) in phi.iter().zip(&l1) {
            let v = dot(row, &center).abs();
            lo.push((v - s * half).max(0.0));
            hi.push(v + s * half);
        }
        let lb = match target {
            Target::Infinity => lo.iter().copied().fold(0.0, f64::max),
            Target::Cone(j) => {
                if lo.iter().any(|&l| l > hi[j]) {
                    return None;
                }
                lo[j]
            }
        };
        let offset: Vec<f64> = center.iter().zip(c).map(|(x, ci)| x - ci).collect();
        let dist = norm(&offset);
        let candidate: Vec<f64> = if dist > r {
            c.iter().zip(&offset).map(|(ci, o)| ci + r * o / dist).collect()
        } else {
            center.clone()
        };
        if let Some(v) = objective(&candidate) {
            *upper = upper.min(v);
        }
        if lb > *upper {
            return None;
        }
        Some(Cube { center, half, lb })
    };

    let mut heap = BinaryHeap::new();
    if let Some(root) = evaluate(c.to_vec(), r, &mut upper) {
        heap.push(root);
    }
    let mut evaluated = 0usize;
    while let Some(cube) = heap.pop() {
        if cube.lb > upper {
            continue;
        }
        if upper - cube.lb <= tol || evaluated >= budget {
            return Bracket { lower: cube.lb, upper };
        }
        let half = cube.half / 2.0;
        for corner in 0..(1usize << n) {
            let center: Vec<f64> = (0..n)
                .map(|k| cube.center[k] + if corner >> k & 1 == 1 { half } else { -half })
                .collect();
            evaluated += 1;
            if let Some(child) = evaluate(center, half, &mut upper) {
                heap.push(child);
            }
        }
    }
    // Everything pruned: the optimum is the incumbent (or the set is empty).
    Bracket { lower: upper, upper }
}

/// `min ‖Φz‖₂` over the ball by accelerated projected gradient.
pub fn min_image_norm(phi: &[Vec<f64>], c: &[f64], r: f64, iters: usize, stop_below: f64) -> f64 {
    let n = c.len();
    let apply = |z: &[f64]| phi.iter().map(|row| dot(row, z)).collect::<Vec<f64>>();
    let apply_t = |y: &[f64]| {
        let mut out = vec![0.0; n];
        for (row, yi) in phi.iter().zip(y) {
            for (o, p) in out.iter_mut().zip(row) {
                *o += yi * p;
            }
        }
        out
    };
    // power iteration for ‖Φ‖₂²
    let mut v = vec![1.0; n];
    let mut lip = 0.0;
    for _ in 0..200 {
        let w = apply_t(&apply(&v));
        lip = norm(&w);
        v = w.iter().map(|x| x / lip).collect();
    }
    let step = 1.0 / (1.05 * lip);
    let project = |z: Vec<f64>| {
        let off: Vec<f64> = z.iter().zip(c).map(|(a, b)| a - b).collect();
        let d = norm(&off);
        if d <= r {
            z
        } else {
            c.iter().zip(&off).map(|(ci, o)| ci + r * o / d).collect()
        }
    };
    let mut x = c.to_vec();
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut best = norm(&apply(&x));
    for _ in 0..iters {
        let grad = apply_t(&apply(&y));
        let next = project(y.iter().zip(&grad).map(|(a, g)| a - step * g).collect());
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = next
            .iter()
            .zip(&x)
            .map(|(a, b)| a + (t - 1.0) / t_next * (a - b))
            .collect();
        x = next;
        t = t_next;
        best = best.min(norm(&apply(&x)));
        if best < stop_below {
            break;
        }
    }
    best
}

/// Supremum of `|gᵀx|` over `count` quasi-uniform points of the cap of
/// half-angle `asin(r/‖c‖)` around `c/‖c‖` in ℝ³.
pub fn cap_supremum(g: &[f64], c: &[f64], r: f64, count: usize) -> f64 {
    assert_eq!(c.len(), 3);
    let len = norm(c);
    let pole: Vec<f64> = c.iter().map(|x| x / len).collect();
    // orthonormal frame around the pole
    let helper = if pole[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let mut e1: Vec<f64> = helper
        .iter()
        .zip(&pole)
        .map(|(h, p)| h - dot(&helper, &pole) * p)
        .collect();
    let l1 = norm(&e1);
    e1.iter_mut().for_each(|x| *x /= l1);
    let e2 = [
        pole[1] * e1[2] - pole[2] * e1[1],
        pole[2] * e1[0] - pole[0] * e1[2],
        pole[0] * e1[1] - pole[1] * e1[0],
    ];
    let cos_theta = (1.0 - (r / len).powi(2)).sqrt();
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut best: f64 = 0.0;
    for k in 0..count {
        // equal-area spacing in height over the cap, plus its rim
        let h = if k + 1 == count {
            cos_theta
        } else {
            1.0 - (1.0 - cos_theta) * (k as f64 + 0.5) / count as f64
        };
        let rad = (1.0 - h * h).max(0.0).sqrt();
        let phi = golden * k as f64;
        let x: Vec<f64> = (0..3)
            .map(|i| h * pole[i] + rad * (phi.cos() * e1[i] + phi.sin() * e2[i]))
            .collect();
        best = best.max(dot(g, &x).abs());
    }
    // the rim itself, densely
    let rad = (1.0 - cos_theta * cos_theta).sqrt();
    for k in 0..count / 10 {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / (count / 10) as f64;
        let x: Vec<f64> = (0..3)
            .map(|i| cos_theta * pole[i] + rad * (phi.cos() * e1[i] + phi.sin() * e2[i]))
            .collect();
        best = best.max(dot(g, &x).abs());
    }
    best
}

/// Smallest `m ∈ [1, limit]` with `F(m) = m` for the quantised bound, written
/// out directly from the formula.
#[allow(clippy::too_many_arguments)]
pub fn fixed_point_scan(
    w: f64,
    n: usize,
    delta: f64,
    sigma: f64,
    r: f64,
    eta: f64,
    c2: f64,
    limit: u64,
) -> Option<u64> {
    let nf = n as f64;
    let f = |m: u64| {
        let a = w * w + nf * delta * delta / (sigma * sigma);
        let b = 1.0 + (1.0 + r * m as f64 / (delta * nf)).ln() + (1.0 / eta).ln() / (w * w);
        (c2 * a * b).ceil() as u64
    };
    (1..=limit).find(|&m| f(m) == m)
}
