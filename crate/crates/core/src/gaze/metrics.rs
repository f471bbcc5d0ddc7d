use serde::{Deserialize, Serialize};

use crate::imgcore::Point;

use super::ScreenSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub actual: Point,
    pub estimated: Point,
    pub error_px: f64,
    pub error_mm: f64,
}

/// Euclidean gaze error in pixels and millimetres.
pub fn gaze_error(act: Point, est: Point, screen: &ScreenSpec) -> EvalRecord {
    let error_px = (act.x - est.x).hypot(act.y - est.y);
    EvalRecord { actual: act, estimated: est, error_px, error_mm: error_px * screen.mm_per_px }
}

/// (column, row) of the 3×3 screen cell containing `p`.
pub fn grid_cell(p: Point, screen: &ScreenSpec) -> (usize, usize) {
    let cell = |v: f64, extent: f64| ((3.0 * v / extent).floor().max(0.0) as usize).min(2);
    (cell(p.x, screen.width_px), cell(p.y, screen.height_px))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub count: usize,
    pub mean_mm: f64,
    /// Population standard deviation.
    pub std_mm: f64,
    pub mean_px: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    /// Indexed `[row][column]`; `None` for cells without records.
    pub cells: [[Option<CellStats>; 3]; 3],
    pub overall_mean_px: f64,
    pub overall_mean_mm: f64,
    pub count: usize,
}

impl GridReport {
    pub fn cell(&self, col: usize, row: usize) -> Option<&CellStats> {
        self.cells.get(row)?.get(col)?.as_ref()
    }

    /// Fixed-width text table of per-cell mean ± std in millimetres.
    pub fn to_table(&self) -> String {
        let mut out = String::from("mean error per subsection (mm, mean ± std)\n");
        for row in &self.cells {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Some(c) => format!("{:>6.2} ± {:<5.2}", c.mean_mm, c.std_mm),
                    None => format!("{:^15}", "-"),
                })
                .collect();
            out.push_str(&cells.join(" | "));
            out.push('\n');
        }
        out.push_str(&format!(
            "overall: {:.3} px, {:.3} mm over {} records\n",
            self.overall_mean_px, self.overall_mean_mm, self.count
        ));
        out
    }
}

pub fn evaluate_grid(records: &[EvalRecord], screen: &ScreenSpec) -> GridReport {
    let mut buckets: [[Vec<&EvalRecord>; 3]; 3] = Default::default();
    for r in records {
        let (c, row) = grid_cell(r.actual, screen);
        buckets[row][c].push(r);
    }
    let mut cells: [[Option<CellStats>; 3]; 3] = [[None; 3]; 3];
    for (row, bucket_row) in buckets.iter().enumerate() {
        for (col, bucket) in bucket_row.iter().enumerate() {
            if bucket.is_empty() {
                continue;
            }
            let n = bucket.len() as f64;
            let mean_mm = bucket.iter().map(|r| r.error_mm).sum::<f64>() / n;
            let var = bucket.iter().map(|r| (r.error_mm - mean_mm).powi(2)).sum::<f64>() / n;
            let mean_px = bucket.iter().map(|r| r.error_px).sum::<f64>() / n;
            cells[row][col] = Some(CellStats { count: bucket.len(), mean_mm, std_mm: var.sqrt(), mean_px });
        }
    }
    let n = records.len().max(1) as f64;
    GridReport {
        cells,
        overall_mean_px: records.iter().map(|r| r.error_px).sum::<f64>() / n,
        overall_mean_mm: records.iter().map(|r| r.error_mm).sum::<f64>() / n,
        count: records.len(),
    }
}
