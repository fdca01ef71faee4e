//! Heat map of `p̄̄` over `(log₂(1/σ²), log₂(m/n))` with the phase curve.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::phase::Grid;
use super::{PhaseCurve, ResultRow};
use crate::error::Result;

const CELL: f64 = 40.0;
const MARGIN: f64 = 60.0;
/// Colour of an estimate of 0.
pub const LOW: [u8; 3] = [0x0b, 0x1d, 0x51];
/// Colour of an estimate of 1.
pub const HIGH: [u8; 3] = [0xfd, 0xe7, 0x25];

pub fn colour(p: f64) -> String {
    let t = p.clamp(0.0, 1.0);
    let ch = |i: usize| (f64::from(LOW[i]) + t * (f64::from(HIGH[i]) - f64::from(LOW[i]))).round() as u8;
    format!("#{:02x}{:02x}{:02x}", ch(0), ch(1), ch(2))
}

pub fn render_heatmap(rows: &[ResultRow], delta: f64, curve: &PhaseCurve) -> Result<String> {
    let grid = Grid::new(rows, delta)?;
    let n = grid.cell(0, 0).n as f64;
    let cols = grid.sigmas.len();
    let rows_n = grid.ms.len();
    let width = 2.0 * MARGIN + CELL * cols as f64;
    let height = 2.0 * MARGIN + CELL * rows_n as f64;

    // Columns run left to right in increasing log₂(1/σ²), i.e. decreasing σ.
    let x_of = |s: usize| MARGIN + CELL * (cols - 1 - s) as f64;
    let y_of = |m: usize| MARGIN + CELL * (rows_n - 1 - m) as f64;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(out, r#"<g font-family="sans-serif" font-size="10">"#);
    for (mi, _) in grid.ms.iter().enumerate() {
        for (si, _) in grid.sigmas.iter().enumerate() {
            let p = grid.cell(mi, si).p_bbar_hat;
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{CELL:.2}" height="{CELL:.2}" fill="{}"/>"#,
                x_of(si),
                y_of(mi),
                colour(p)
            );
        }
    }
    for (si, &sigma) in grid.sigmas.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.2}</text>"#,
            x_of(si) + CELL / 2.0,
            MARGIN + CELL * rows_n as f64 + 14.0,
            -2.0 * sigma.log2()
        );
    }
    for (mi, &m) in grid.ms.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.2}</text>"#,
            MARGIN - 6.0,
            y_of(mi) + CELL / 2.0 + 3.0,
            (m as f64 / n).log2()
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">log2(1/sigma^2)</text>"#,
        width / 2.0,
        height - 18.0
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">log2(m/n)</text>"#,
        height / 2.0,
        height / 2.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="20" text-anchor="middle">delta = {delta}</text>"#,
        width / 2.0
    );

    let points: Vec<String> = curve
        .points
        .iter()
        .filter_map(|&(sigma, m_star)| {
            let si = grid.sigmas.iter().position(|&s| s == sigma)?;
            let mi = grid.ms.iter().position(|&m| Some(m) == m_star)?;
            Some((x_of(si), y_of(mi)))
        })
        .map(|(x, y)| format!("{:.2},{:.2}", x + CELL / 2.0, y + CELL / 2.0))
        .collect();
    if !points.is_empty() {
        // Emit left to right.
        let ordered: Vec<String> = points.into_iter().rev().collect();
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#e8412c" stroke-width="2"/>"##,
            ordered.join(" ")
        );
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

pub fn write_heatmap(rows: &[ResultRow], delta: f64, curve: &PhaseCurve, path: &Path) -> Result<()> {
    fs::write(path, render_heatmap(rows, delta, curve)?)?;
    Ok(())
}
