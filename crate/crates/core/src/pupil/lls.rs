use std::ops::Range;

use crate::imgcore::{GrayImage, Point};

/// Longest horizontal run of set (non-zero) pixels within `rows`; returns the
/// run midpoint. Ties go to the topmost row, then the leftmost run.
pub fn longest_line_scan(mask: &GrayImage, rows: Range<usize>) -> Option<Point> {
    longest_run_in(mask, rows, 0..mask.width())
}

/// [`longest_line_scan`] restricted to a column range.
pub fn longest_run_in(mask: &GrayImage, rows: Range<usize>, cols: Range<usize>) -> Option<Point> {
    let rows = rows.start..rows.end.min(mask.height());
    let cols = cols.start..cols.end.min(mask.width());
    let mut best: Option<(usize, usize, usize)> = None; // (len, start, row)
    for y in rows {
        let mut x = cols.start;
        while x < cols.end {
            if mask.get(x, y) > 0.0 {
                let start = x;
                while x < cols.end && mask.get(x, y) > 0.0 {
                    x += 1;
                }
                let len = x - start;
                if best.is_none_or(|(l, _, _)| len > l) {
                    best = Some((len, start, y));
                }
            } else {
                x += 1;
            }
        }
    }
    best.map(|(len, start, y)| Point::new((2 * start + len - 1) as f64 / 2.0, y as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(cx: i64, cy: i64, r: i64, cut_rows_above: i64) -> GrayImage {
        GrayImage::from_fn(61, 61, |x, y| {
            let (dx, dy) = (x as i64 - cx, y as i64 - cy);
            if dx * dx + dy * dy <= r * r && (y as i64) >= cut_rows_above {
                255.0
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn full_disk_diameter() {
        let p = longest_line_scan(&disk(30, 30, 10, 0), 0..61).unwrap();
        assert_eq!((p.x, p.y), (30.0, 30.0));
    }

    #[test]
    fn every_occlusion_height_keeps_x() {
        // occlusion from the top down to (and including) the diameter row
        for cut in 0..=50 {
            let m = disk(30, 30, 10, cut);
            match longest_line_scan(&m, 0..61) {
                Some(p) => {
                    assert_eq!(p.x, 30.0, "cut {cut}");
                    let expect_y = if cut <= 30 { 30.0 } else { cut as f64 };
                    assert_eq!(p.y, expect_y, "cut {cut}");
                }
                None => assert!(cut > 40),
            }
        }
    }

    #[test]
    fn empty_and_ties() {
        let blank = GrayImage::filled(10, 10, 0.0).unwrap();
        assert!(longest_line_scan(&blank, 0..10).is_none());
        let mut m = blank.clone();
        for x in 5..8 {
            m.set(x, 6, 1.0);
            m.set(x - 5, 6, 1.0);
            m.set(x, 3, 1.0);
        }
        let p = longest_line_scan(&m, 0..10).unwrap();
        assert_eq!((p.x, p.y), (6.0, 3.0));
        let p = longest_line_scan(&m, 4..10).unwrap();
        assert_eq!((p.x, p.y), (1.0, 6.0));
        assert!(longest_line_scan(&m, 7..10).is_none());
    }
}
