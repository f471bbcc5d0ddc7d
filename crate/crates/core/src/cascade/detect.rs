use crate::error::{Error, Result};
use crate::imgcore::{integral_image, squared_integral_image, GrayImage, IntegralImage, Rect};

use super::CascadeModel;

pub const DEFAULT_SCALE_FACTOR: f64 = 1.1;
pub const DEFAULT_MIN_NEIGHBORS: usize = 3;
/// Two windows belong together when their intersection covers at least this
/// fraction of each of them.
pub const GROUP_OVERLAP: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Detection {
    pub rect: Rect,
    /// Number of raw windows merged into this detection.
    pub neighbors: usize,
    /// Mean final-stage margin of the merged windows.
    pub score: f64,
}

#[derive(Clone, Copy, Debug)]
struct ScaledRect {
    x: usize,
    y: usize,
    w: usize,
    h: usize,
    weight: f64,
}

#[derive(Clone, Debug)]
struct ScaledWeak {
    rects: Vec<ScaledRect>,
    threshold: f64,
    left_val: f64,
    right_val: f64,
}

#[derive(Clone, Debug)]
struct ScaledStage {
    weak: Vec<ScaledWeak>,
    threshold: f64,
}

/// A cascade with feature rectangles resampled to one window size.
#[derive(Clone, Debug)]
pub(crate) struct ScaledCascade {
    win_w: usize,
    win_h: usize,
    stages: Vec<ScaledStage>,
}

fn scale_coord(v: usize, s: f64) -> usize {
    (v as f64 * s).round() as usize
}

impl ScaledCascade {
    pub(crate) fn new(model: &CascadeModel, win_w: usize, win_h: usize) -> Self {
        let sx = win_w as f64 / model.base_width as f64;
        let sy = win_h as f64 / model.base_height as f64;
        let stages = model
            .stages
            .iter()
            .map(|stage| ScaledStage {
                threshold: stage.stage_threshold,
                weak: stage
                    .weak
                    .iter()
                    .map(|wc| {
                        let mut rects: Vec<ScaledRect> = wc
                            .feature
                            .rects
                            .iter()
                            .map(|fr| {
                                let x = scale_coord(fr.rect.x, sx).min(win_w - 1);
                                let y = scale_coord(fr.rect.y, sy).min(win_h - 1);
                                let w = scale_coord(fr.rect.w, sx).max(1).min(win_w - x);
                                let h = scale_coord(fr.rect.h, sy).max(1).min(win_h - y);
                                ScaledRect { x, y, w, h, weight: fr.weight }
                            })
                            .collect();
                        let base_balance: f64 = wc.feature.rects.iter().map(|r| r.weight * r.rect.area() as f64).sum();
                        // keep zero-sum features zero-sum after integer rounding
                        if base_balance.abs() < 1e-9 && rects.len() > 1 {
                            let rest: f64 = rects[1..].iter().map(|r| r.weight * (r.w * r.h) as f64).sum();
                            rects[0].weight = -rest / (rects[0].w * rects[0].h) as f64;
                        }
                        ScaledWeak { rects, threshold: wc.threshold, left_val: wc.left_val, right_val: wc.right_val }
                    })
                    .collect(),
            })
            .collect();
        Self { win_w, win_h, stages }
    }

    /// Final-stage margin when every stage passes, `None` on the first failure.
    pub(crate) fn evaluate(&self, ii: &IntegralImage, sqii: &IntegralImage, x0: usize, y0: usize) -> Option<f64> {
        let area = (self.win_w * self.win_h) as f64;
        let sum = ii.sum_unchecked(x0, y0, self.win_w, self.win_h);
        let sqsum = sqii.sum_unchecked(x0, y0, self.win_w, self.win_h);
        let nf = area * sqsum - sum * sum;
        // zero-variance window: rejected
        if nf <= 1e-9 * area * area {
            return None;
        }
        let inv_norm = 1.0 / nf.sqrt();
        let mut margin = 0.0;
        for stage in &self.stages {
            let mut acc = 0.0;
            for wc in &stage.weak {
                let mut f = 0.0;
                for r in &wc.rects {
                    f += r.weight * ii.sum_unchecked(x0 + r.x, y0 + r.y, r.w, r.h);
                }
                acc += if f * inv_norm < wc.threshold { wc.left_val } else { wc.right_val };
            }
            if acc < stage.threshold {
                return None;
            }
            margin = acc - stage.threshold;
        }
        Some(margin)
    }
}

/// Runs the cascade on one window. The window should be proportional to the
/// model's base window; its width sets the feature scale.
pub fn evaluate_window(model: &CascadeModel, ii: &IntegralImage, sqii: &IntegralImage, w: Rect) -> Result<bool> {
    let (iw, ih) = ii.source_size();
    if !w.fits_in(iw, ih) {
        return Err(Error::OutOfBounds(format!("window {w:?} outside {iw}x{ih} image")));
    }
    if w.w < model.base_width.min(2) || w.h < 1 {
        return Err(Error::InvalidParameter(format!("window {w:?} too small")));
    }
    let scaled = ScaledCascade::new(model, w.w, w.h);
    Ok(scaled.evaluate(ii, sqii, w.x, w.y).is_some())
}

fn mutual_overlap(a: &Rect, b: &Rect) -> bool {
    let inter = a.intersection_area(b) as f64;
    inter >= GROUP_OVERLAP * a.area() as f64 && inter >= GROUP_OVERLAP * b.area() as f64
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

#[derive(Clone, Copy)]
struct Group {
    sum: [f64; 4],
    count: usize,
    margin: f64,
}

impl Group {
    fn rect(&self) -> Rect {
        let n = self.count as f64;
        Rect {
            x: (self.sum[0] / n).round() as usize,
            y: (self.sum[1] / n).round() as usize,
            w: ((self.sum[2] / n).round() as usize).max(1),
            h: ((self.sum[3] / n).round() as usize).max(1),
        }
    }

    fn merge(&mut self, o: &Group) {
        for i in 0..4 {
            self.sum[i] += o.sum[i];
        }
        self.count += o.count;
        self.margin += o.margin;
    }
}

/// Union-find grouping of raw windows; returns mean rects of groups with at
/// least `min_neighbors` members, re-merged until no two outputs overlap.
pub fn group_detections(raw: &[(Rect, f64)], min_neighbors: usize) -> Vec<Detection> {
    let n = raw.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if mutual_overlap(&raw[i].0, &raw[j].0) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Option<Group>> = vec![None; n];
    for (i, (r, m)) in raw.iter().enumerate() {
        let root = find(&mut parent, i);
        let g = Group { sum: [r.x as f64, r.y as f64, r.w as f64, r.h as f64], count: 1, margin: *m };
        match &mut groups[root] {
            Some(acc) => acc.merge(&g),
            slot => *slot = Some(g),
        }
    }
    let mut kept: Vec<Group> = groups.into_iter().flatten().filter(|g| g.count >= min_neighbors.max(1)).collect();
    // mean rects of distinct groups can still overlap; fold them together
    loop {
        let mut merged = false;
        'outer: for i in 0..kept.len() {
            for j in i + 1..kept.len() {
                if mutual_overlap(&kept[i].rect(), &kept[j].rect()) {
                    let other = kept.remove(j);
                    kept[i].merge(&other);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }
    let mut out: Vec<Detection> = kept
        .iter()
        .map(|g| Detection { rect: g.rect(), neighbors: g.count, score: g.margin / g.count as f64 })
        .collect();
    out.sort_by(|a, b| {
        b.neighbors
            .cmp(&a.neighbors)
            .then(b.score.total_cmp(&a.score))
            .then(a.rect.y.cmp(&b.rect.y))
            .then(a.rect.x.cmp(&b.rect.x))
    });
    out
}

/// Raw accepted windows over a pyramid of window sizes (features scaled,
/// image fixed), restricted to `roi`.
pub(crate) fn scan_windows(
    model: &CascadeModel,
    ii: &IntegralImage,
    sqii: &IntegralImage,
    roi: Rect,
    scale_factor: f64,
    min_size: usize,
    max_size: usize,
) -> Vec<(Rect, f64)> {
    let mut raw = Vec::new();
    let base = model.base_width.max(model.base_height) as f64;
    let mut scale = (min_size as f64 / base).max(1.0);
    loop {
        let win_w = (model.base_width as f64 * scale).round() as usize;
        let win_h = (model.base_height as f64 * scale).round() as usize;
        if win_w > roi.w || win_h > roi.h || win_w.max(win_h) > max_size {
            break;
        }
        let scaled = ScaledCascade::new(model, win_w, win_h);
        let step = (scale.round() as usize).max(1);
        let mut y = roi.y;
        while y + win_h <= roi.bottom() {
            let mut x = roi.x;
            while x + win_w <= roi.right() {
                if let Some(m) = scaled.evaluate(ii, sqii, x, y) {
                    raw.push((Rect { x, y, w: win_w, h: win_h }, m));
                }
                x += step;
            }
            y += step;
        }
        scale *= scale_factor;
    }
    raw
}

/// Multi-scale sliding-window detection over the whole image.
pub fn detect_multiscale(
    model: &CascadeModel,
    img: &GrayImage,
    scale_factor: f64,
    min_neighbors: usize,
    min_size: usize,
) -> Result<Vec<Detection>> {
    let full = Rect { x: 0, y: 0, w: img.width(), h: img.height() };
    detect_in_region(model, img, full, scale_factor, min_neighbors, min_size, usize::MAX)
}

/// [`detect_multiscale`] limited to a region of interest and a window size range.
pub fn detect_in_region(
    model: &CascadeModel,
    img: &GrayImage,
    roi: Rect,
    scale_factor: f64,
    min_neighbors: usize,
    min_size: usize,
    max_size: usize,
) -> Result<Vec<Detection>> {
    if !(scale_factor > 1.0) {
        return Err(Error::InvalidParameter(format!("scale factor must exceed 1, got {scale_factor}")));
    }
    if !roi.fits_in(img.width(), img.height()) {
        return Err(Error::OutOfBounds(format!("roi {roi:?} outside image")));
    }
    if img.width() < min_size || img.height() < min_size {
        return Ok(Vec::new());
    }
    let ii = integral_image(img);
    let sqii = squared_integral_image(img);
    let raw = scan_windows(model, &ii, &sqii, roi, scale_factor, min_size, max_size);
    Ok(group_detections(&raw, min_neighbors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::parse_cascade;

    const FIXTURE: &str = r#"<opencv_storage><cascade><stageType>BOOST</stageType><featureType>HAAR</featureType>
<height>2</height><width>2</width><stages><_><stageThreshold>0</stageThreshold><weakClassifiers>
<_><internalNodes>0 -1 0 0.5</internalNodes><leafValues>-1 1</leafValues></_></weakClassifiers></_></stages>
<features><_><rects><_>0 0 2 2 -1.</_><_>0 0 1 2 2.</_></rects></_></features></cascade></opencv_storage>"#;

    fn run(pixels: [f64; 4]) -> bool {
        let m = parse_cascade(FIXTURE).unwrap();
        let img = GrayImage::from_vec(2, 2, pixels.to_vec()).unwrap();
        evaluate_window(&m, &integral_image(&img), &squared_integral_image(&img), Rect::new(0, 0, 2, 2).unwrap())
            .unwrap()
    }

    #[test]
    fn fixture_decisions() {
        // [10 0; 10 0]: feature 20, sigma 5, normalized 20 / (4*5) = 1.0 > 0.5
        assert!(run([10.0, 0.0, 10.0, 0.0]));
        // mirrored: normalized -1.0
        assert!(!run([0.0, 10.0, 0.0, 10.0]));
        // uniform window rejected outright
        assert!(!run([7.0; 4]));
    }

    #[test]
    fn out_of_bounds_window() {
        let m = parse_cascade(FIXTURE).unwrap();
        let img = GrayImage::filled(3, 3, 1.0).unwrap();
        let (ii, sq) = (integral_image(&img), squared_integral_image(&img));
        assert!(evaluate_window(&m, &ii, &sq, Rect::new(2, 2, 2, 2).unwrap()).is_err());
    }

    #[test]
    fn blank_and_tiny_images() {
        let m = parse_cascade(FIXTURE).unwrap();
        let blank = GrayImage::filled(40, 30, 128.0).unwrap();
        assert!(detect_multiscale(&m, &blank, 1.1, 1, 2).unwrap().is_empty());
        let tiny = GrayImage::filled(5, 5, 1.0).unwrap();
        assert!(detect_multiscale(&m, &tiny, 1.1, 1, 10).unwrap().is_empty());
        assert!(detect_multiscale(&m, &blank, 1.0, 1, 2).is_err());
    }

    #[test]
    fn grouping_merges_overlaps() {
        let r = |x, y, s| (Rect::new(x, y, s, s).unwrap(), 1.0);
        let raw = vec![r(10, 10, 20), r(11, 10, 20), r(12, 11, 20), r(100, 100, 20), r(60, 0, 10)];
        let d = group_detections(&raw, 2);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].neighbors, 3);
        assert_eq!(d[0].rect, Rect::new(11, 10, 20, 20).unwrap());
        let all = group_detections(&raw, 1);
        assert_eq!(all.len(), 3);
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                assert!(!mutual_overlap(&all[i].rect, &all[j].rect));
            }
        }
    }
}
