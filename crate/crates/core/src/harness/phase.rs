use std::cmp::Ordering;

use super::ResultRow;
use crate::error::{Error, Result};

/// Which column a curve is traced on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    Bar,
    BarBar,
    Linear,
}

impl Estimator {
    pub fn value(self, row: &ResultRow) -> f64 {
        match self {
            Estimator::Bar => row.p_bar_hat,
            Estimator::BarBar => row.p_bbar_hat,
            Estimator::Linear => row.p_lin_hat,
        }
    }
}

/// Per σ (ascending), the smallest grid `m` reaching the level, if any.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseCurve {
    pub delta: f64,
    pub points: Vec<(f64, Option<usize>)>,
}

impl PhaseCurve {
    /// σ values where this curve lies strictly above `other`; a missing
    /// point counts as infinitely high.
    pub fn violations_below(&self, other: &PhaseCurve) -> Vec<f64> {
        self.points
            .iter()
            .zip(&other.points)
            .filter(|((_, a), (_, b))| match (a, b) {
                (Some(a), Some(b)) => a > b,
                (None, Some(_)) => true,
                _ => false,
            })
            .map(|((s, _), _)| *s)
            .collect()
    }
}

pub fn extract_phase_curve(rows: &[ResultRow], delta: f64, level: f64) -> Result<PhaseCurve> {
    extract_curve(rows, delta, level, Estimator::BarBar)
}

pub fn extract_curve(rows: &[ResultRow], delta: f64, level: f64, est: Estimator) -> Result<PhaseCurve> {
    let grid = Grid::new(rows, delta)?;
    let points = grid
        .sigmas
        .iter()
        .enumerate()
        .map(|(s, &sigma)| {
            let m_star = grid
                .ms
                .iter()
                .enumerate()
                .find(|&(m, _)| est.value(grid.cell(m, s)) >= level)
                .map(|(_, &m)| m);
            (sigma, m_star)
        })
        .collect();
    Ok(PhaseCurve { delta, points })
}

/// The rows of one `δ` arranged as a full `m × σ` table.
pub(crate) struct Grid<'a> {
    pub ms: Vec<usize>,
    pub sigmas: Vec<f64>,
    cells: Vec<&'a ResultRow>,
}

impl<'a> Grid<'a> {
    pub(crate) fn new(rows: &'a [ResultRow], delta: f64) -> Result<Self> {
        let mut picked: Vec<&ResultRow> = rows.iter().filter(|r| r.delta == delta).collect();
        if picked.is_empty() {
            return Err(Error::Malformed(format!("no rows for delta {delta}")));
        }
        picked.sort_by(|a, b| {
            a.m.cmp(&b.m)
                .then(a.sigma.partial_cmp(&b.sigma).unwrap_or(Ordering::Equal))
        });
        let mut ms: Vec<usize> = picked.iter().map(|r| r.m).collect();
        ms.dedup();
        let mut sigmas: Vec<f64> = picked.iter().map(|r| r.sigma).collect();
        sigmas.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        sigmas.dedup();
        let full = picked.len() == ms.len() * sigmas.len()
            && picked
                .iter()
                .enumerate()
                .all(|(i, r)| r.m == ms[i / sigmas.len()] && r.sigma == sigmas[i % sigmas.len()]);
        if !full {
            return Err(Error::Malformed(format!(
                "rows for delta {delta} do not form a full m × sigma grid"
            )));
        }
        Ok(Self {
            ms,
            sigmas,
            cells: picked,
        })
    }

    pub(crate) fn cell(&self, m_index: usize, sigma_index: usize) -> &'a ResultRow {
        self.cells[m_index * self.sigmas.len() + sigma_index]
    }
}
