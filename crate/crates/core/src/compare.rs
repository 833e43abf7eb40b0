//! Discrete versus smooth profile curves, and the refinement order of the gap.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cgc::{CgcFamily, SampleGrid};
use crate::error::{Error, Result};
use crate::io::fmt_f64;

/// One sample of one refinement level. Heights on both sides are measured from the
/// sample with index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub level: usize,
    pub n: i64,
    pub u: f64,
    pub f_smooth: f64,
    pub h_smooth: f64,
    pub f_discrete: f64,
    pub h_discrete: f64,
    /// Distance between the smooth and discrete profile points.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: usize,
    pub max_gap: f64,
    /// Gap at the last sample, `u = u_end`.
    pub end_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub family: CgcFamily,
    pub rows: Vec<CompareRow>,
    pub levels: Vec<LevelSummary>,
    /// Least-squares slope of `-log(end_gap)` against `log(M)`; absent with fewer than two
    /// levels or a vanishing gap.
    pub order: Option<f64>,
}

/// Rows for a single grid, tagged with `level`.
pub fn compare_on_grid(family: &CgcFamily, grid: &SampleGrid, level: usize) -> Result<Vec<CompareRow>> {
    let (profile, _) = family.discretize(grid)?;
    let u = grid.values();
    let z = grid.zero_index();
    let (_, h_base) = family.smooth(u[z])?;
    let mut rows = Vec::with_capacity(u.len());
    for (i, &ui) in u.iter().enumerate() {
        let (fs, hs) = family.smooth(ui)?;
        let hs = hs - h_base;
        let (fd, hd) = (profile.f()[i], profile.h()[i]);
        rows.push(CompareRow {
            level,
            n: i as i64 - z as i64,
            u: ui,
            f_smooth: fs,
            h_smooth: hs,
            f_discrete: fd,
            h_discrete: hd,
            gap: (fs - fd).hypot(hs - hd),
        });
    }
    Ok(rows)
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Compares on `u_n = u_start + (u_end - u_start) n / M`, `n = 0..=M`, for every `M` in
/// `levels`, and estimates the order of the end-point gap.
pub fn run_compare(family: &CgcFamily, u_start: f64, u_end: f64, levels: &[usize]) -> Result<CompareReport> {
    if levels.is_empty() || levels.contains(&0) {
        return Err(Error::Config("refinement levels must be positive".into()));
    }
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &m in levels {
        let grid = SampleGrid::from_fn(0, m as i64, |n| u_start + (u_end - u_start) * n / m as f64)?;
        let level_rows = compare_on_grid(family, &grid, m)?;
        summaries.push(LevelSummary {
            level: m,
            max_gap: level_rows.iter().map(|r| r.gap).fold(0.0, f64::max),
            end_gap: level_rows.last().map_or(0.0, |r| r.gap),
        });
        rows.extend(level_rows);
    }
    let usable: Vec<&LevelSummary> = summaries.iter().filter(|s| s.end_gap > 0.0).collect();
    let order = (usable.len() >= 2 && usable.len() == summaries.len()).then(|| {
        let x: Vec<f64> = usable.iter().map(|s| (s.level as f64).ln()).collect();
        let y: Vec<f64> = usable.iter().map(|s| s.end_gap.ln()).collect();
        -slope(&x, &y)
    });
    Ok(CompareReport { family: *family, rows, levels: summaries, order })
}

/// Columns `M, n, u, f_smooth, h_smooth, f_discrete, h_discrete, gap`.
pub fn write_compare_csv(report: &CompareReport, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["M", "n", "u", "f_smooth", "h_smooth", "f_discrete", "h_discrete", "gap"])
        .map_err(io)?;
    for r in &report.rows {
        w.write_record([
            r.level.to_string(),
            r.n.to_string(),
            fmt_f64(r.u),
            fmt_f64(r.f_smooth),
            fmt_f64(r.h_smooth),
            fmt_f64(r.f_discrete),
            fmt_f64(r.h_discrete),
            fmt_f64(r.gap),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn spindle_converges_at_second_order() {
        let family = CgcFamily::SpherePositive { p: 0.9, c: 1.0 };
        let report = run_compare(&family, 0.0, FRAC_PI_2, &[8, 16, 32, 64]).unwrap();
        let order = report.order.unwrap();
        assert!(order >= 1.9, "{order} {:?}", report.levels);
        assert_eq!(report.rows.len(), 9 + 17 + 33 + 65);
        for w in report.levels.windows(2) {
            assert!(w[1].end_gap < w[0].end_gap);
        }
    }

    #[test]
    fn radii_agree_exactly() {
        let family = CgcFamily::Pseudosphere;
        let grid = SampleGrid::from_fn(0, 4, |n| n).unwrap();
        let rows = compare_on_grid(&family, &grid, 4).unwrap();
        assert_eq!(rows[0].gap, 0.0);
        for r in &rows {
            assert_eq!(r.f_smooth, r.f_discrete);
        }
        assert!(rows[4].gap > 0.0);
    }

    #[test]
    fn rejects_empty_levels() {
        let family = CgcFamily::Catenoid;
        assert!(run_compare(&family, 0.0, 1.0, &[]).is_err());
        assert!(run_compare(&family, 0.0, 1.0, &[0, 4]).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let family = CgcFamily::Catenoid;
        let report = run_compare(&family, 0.0, 1.0, &[2]).unwrap();
        let mut buf = Vec::new();
        write_compare_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("M,n,u,f_smooth,h_smooth,f_discrete,h_discrete,gap\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
