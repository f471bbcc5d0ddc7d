//! Replay of stored (actual, estimated) gaze rows and CSV evaluation reports.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaze::{evaluate_grid, gaze_error, grid_cell, EvalRecord, GridReport, ScreenSpec};
use crate::imgcore::Point;

/// One fixture row; the CSV header is `actual_x,actual_y,est_x,est_y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureRow {
    pub actual_x: f64,
    pub actual_y: f64,
    pub est_x: f64,
    pub est_y: f64,
}

impl FixtureRow {
    pub fn actual(&self) -> Point {
        Point::new(self.actual_x, self.actual_y)
    }

    pub fn estimated(&self) -> Point {
        Point::new(self.est_x, self.est_y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TargetSummary {
    pub target: Point,
    pub count: usize,
    pub mean_px: f64,
    pub mean_mm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayReport {
    pub records: Vec<EvalRecord>,
    /// Per distinct actual point, in order of first appearance.
    pub targets: Vec<TargetSummary>,
    pub grid: GridReport,
}

impl ReplayReport {
    pub fn target(&self, x: f64, y: f64) -> Option<&TargetSummary> {
        self.targets.iter().find(|t| t.target == Point::new(x, y))
    }

    /// Mean over all rows (row-weighted, not target-weighted).
    pub fn overall_mean_px(&self) -> f64 {
        self.grid.overall_mean_px
    }

    pub fn targets_table(&self) -> String {
        let mut s = String::from("actual_x  actual_y  rows  mean_l2_px\n");
        for t in &self.targets {
            s.push_str(&format!("{:8.1}  {:8.1}  {:4}  {:10.3}\n", t.target.x, t.target.y, t.count, t.mean_px));
        }
        s.push_str(&format!("overall mean {:.3} px over {} rows\n", self.overall_mean_px(), self.records.len()));
        s
    }
}

pub fn read_fixture<R: Read>(input: R) -> Result<Vec<FixtureRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    let expected = ["actual_x", "actual_y", "est_x", "est_y"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Format(format!("fixture header must be {}, got {:?}", expected.join(","), headers)));
    }
    let rows = rdr.deserialize().collect::<std::result::Result<Vec<FixtureRow>, _>>()?;
    if let Some(bad) =
        rows.iter().position(|r| ![r.actual_x, r.actual_y, r.est_x, r.est_y].iter().all(|v| v.is_finite()))
    {
        return Err(Error::Format(format!("fixture row {} has a non-finite value", bad + 1)));
    }
    Ok(rows)
}

pub fn write_fixture<W: Write>(out: W, rows: &[FixtureRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn replay_rows(rows: &[FixtureRow], screen: &ScreenSpec) -> Result<ReplayReport> {
    if rows.is_empty() {
        return Err(Error::Format("fixture has no rows".into()));
    }
    let records: Vec<EvalRecord> = rows.iter().map(|r| gaze_error(r.actual(), r.estimated(), screen)).collect();
    let mut targets: Vec<TargetSummary> = Vec::new();
    for rec in &records {
        let t = match targets.iter_mut().find(|t| t.target == rec.actual) {
            Some(t) => t,
            None => {
                targets.push(TargetSummary { target: rec.actual, count: 0, mean_px: 0.0, mean_mm: 0.0 });
                targets.last_mut().expect("just pushed")
            }
        };
        t.count += 1;
        t.mean_px += rec.error_px;
        t.mean_mm += rec.error_mm;
    }
    for t in &mut targets {
        t.mean_px /= t.count as f64;
        t.mean_mm /= t.count as f64;
    }
    let grid = evaluate_grid(&records, screen);
    Ok(ReplayReport { records, targets, grid })
}

pub fn replay_fixture(path: impl AsRef<Path>, screen: &ScreenSpec) -> Result<ReplayReport> {
    let rows = read_fixture(std::fs::File::open(path)?)?;
    replay_rows(&rows, screen)
}

#[derive(Serialize)]
struct EvalRow {
    actual_x: f64,
    actual_y: f64,
    est_x: f64,
    est_y: f64,
    error_px: f64,
    error_mm: f64,
    cell_col: usize,
    cell_row: usize,
}

/// One EvalRecord per row; the machine-readable evaluation contract.
pub fn write_eval_csv<W: Write>(out: W, records: &[EvalRecord], screen: &ScreenSpec) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        let (cell_col, cell_row) = grid_cell(r.actual, screen);
        w.serialize(EvalRow {
            actual_x: r.actual.x,
            actual_y: r.actual.y,
            est_x: r.estimated.x,
            est_y: r.estimated.y,
            error_px: r.error_px,
            error_mm: r.error_mm,
            cell_col,
            cell_row,
        })?;
    }
    w.flush()?;
    Ok(())
}
