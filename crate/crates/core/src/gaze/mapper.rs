use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::Point;

use super::ScreenSpec;

/// Smallest-to-largest singular value ratio below which the affine design
/// matrix counts as rank deficient.
const AFFINE_RANK_TOLERANCE: f64 = 1e-10;
/// Feature deltas smaller than this are treated as no movement.
const DELTA_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPair {
    pub screen: Point,
    pub feature: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSet {
    pub pairs: Vec<CalibrationPair>,
    /// Index of the resting (screen center) pair.
    pub rest_index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapperMode {
    Ratio,
    Affine,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum MapperKind {
    /// `screen = rest_screen + ratio ⊙ (feature − rest_feature)`
    Ratio { ratio: [f64; 2], rest_feature: [f64; 2], rest_screen: Point },
    /// `screen_x = c[0]·u + c[1]·v + c[2]`, likewise for y.
    Affine { coeffs: [[f64; 3]; 2] },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GazeMapper {
    pub screen: ScreenSpec,
    pub kind: MapperKind,
}

impl GazeMapper {
    pub fn mode(&self) -> MapperMode {
        match self.kind {
            MapperKind::Ratio { .. } => MapperMode::Ratio,
            MapperKind::Affine { .. } => MapperMode::Affine,
        }
    }

    /// Mapping before clamping to the screen.
    pub fn map_unclamped(&self, feature: [f64; 2]) -> Point {
        match self.kind {
            MapperKind::Ratio { ratio, rest_feature, rest_screen } => Point::new(
                rest_screen.x + ratio[0] * (feature[0] - rest_feature[0]),
                rest_screen.y + ratio[1] * (feature[1] - rest_feature[1]),
            ),
            MapperKind::Affine { coeffs } => Point::new(
                coeffs[0][0] * feature[0] + coeffs[0][1] * feature[1] + coeffs[0][2],
                coeffs[1][0] * feature[0] + coeffs[1][1] * feature[1] + coeffs[1][2],
            ),
        }
    }
}

/// Per-axis screen-to-feature ratio from deltas against the rest pair.
///
/// The ratio magnitude is mean|Δscreen| / mean|Δfeature| over pairs that move,
/// and its sign is the sign of Σ Δscreen·Δfeature.
fn axis_ratio(deltas: &[(f64, f64)]) -> Option<f64> {
    let moving: Vec<&(f64, f64)> = deltas.iter().filter(|(_, f)| f.abs() > DELTA_EPS).collect();
    if moving.is_empty() {
        return None;
    }
    let n = moving.len() as f64;
    let ms = moving.iter().map(|(s, _)| s.abs()).sum::<f64>() / n;
    let mf = moving.iter().map(|(_, f)| f.abs()).sum::<f64>() / n;
    let dot: f64 = moving.iter().map(|(s, f)| s * f).sum();
    let ratio = if dot < 0.0 { -ms / mf } else { ms / mf };
    (ratio != 0.0 && ratio.is_finite()).then_some(ratio)
}

pub fn calibrate(set: &CalibrationSet, mode: MapperMode, screen: ScreenSpec) -> Result<GazeMapper> {
    if set.pairs.iter().any(|p| !p.screen.is_finite() || !p.feature.iter().all(|v| v.is_finite())) {
        return Err(Error::InvalidParameter("calibration pair is not finite".into()));
    }
    let kind = match mode {
        MapperMode::Ratio => {
            if set.pairs.len() < 2 {
                return Err(Error::InvalidParameter("ratio calibration needs at least 2 pairs".into()));
            }
            let rest = *set
                .pairs
                .get(set.rest_index)
                .ok_or_else(|| Error::InvalidParameter(format!("rest index {} out of range", set.rest_index)))?;
            let deltas = |axis: usize| -> Vec<(f64, f64)> {
                set.pairs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != set.rest_index)
                    .map(|(_, p)| {
                        let ds = if axis == 0 { p.screen.x - rest.screen.x } else { p.screen.y - rest.screen.y };
                        (ds, p.feature[axis] - rest.feature[axis])
                    })
                    .collect()
            };
            let (dx, dy) = (deltas(0), deltas(1));
            let still = |d: &[(f64, f64)]| d.iter().all(|(s, _)| s.abs() <= DELTA_EPS);
            let (rx, ry) = match (axis_ratio(&dx), axis_ratio(&dy)) {
                (Some(rx), Some(ry)) => (rx, ry),
                // an axis the calibration never exercised borrows the other's scale
                (Some(rx), None) if still(&dy) => (rx, rx),
                (None, Some(ry)) if still(&dx) => (ry, ry),
                _ => return Err(Error::Degenerate("feature does not move on some calibrated axis".into())),
            };
            MapperKind::Ratio { ratio: [rx, ry], rest_feature: rest.feature, rest_screen: rest.screen }
        }
        MapperMode::Affine => {
            let n = set.pairs.len();
            if n < 3 {
                return Err(Error::InvalidParameter("affine calibration needs at least 3 pairs".into()));
            }
            let a = DMatrix::from_fn(n, 3, |i, j| if j < 2 { set.pairs[i].feature[j] } else { 1.0 });
            let svd = a.clone().svd(true, true);
            let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
            if !(smin > AFFINE_RANK_TOLERANCE * smax) {
                return Err(Error::Degenerate("affine design matrix is rank deficient".into()));
            }
            let mut coeffs = [[0.0; 3]; 2];
            for (axis, row) in coeffs.iter_mut().enumerate() {
                let b =
                    DVector::from_fn(n, |i, _| if axis == 0 { set.pairs[i].screen.x } else { set.pairs[i].screen.y });
                let x = svd.solve(&b, 0.0).map_err(|e| Error::Degenerate(format!("affine solve failed: {e}")))?;
                *row = [x[0], x[1], x[2]];
            }
            MapperKind::Affine { coeffs }
        }
    };
    Ok(GazeMapper { screen, kind })
}

/// Maps a feature to the screen and clamps to `[0, width] × [0, height]`.
pub fn estimate_gaze(m: &GazeMapper, feature: [f64; 2]) -> Point {
    m.screen.clamp(m.map_unclamped(feature))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(sx: f64, sy: f64, fx: f64, fy: f64) -> CalibrationPair {
        CalibrationPair { screen: Point::new(sx, sy), feature: [fx, fy] }
    }

    #[test]
    fn single_pair_ratio() {
        let set =
            CalibrationSet { pairs: vec![pair(640.0, 360.0, 0.0, 0.0), pair(840.0, 360.0, 2.0, 0.0)], rest_index: 0 };
        let m = calibrate(&set, MapperMode::Ratio, ScreenSpec::default()).unwrap();
        match m.kind {
            MapperKind::Ratio { ratio, .. } => assert_eq!(ratio[0], 100.0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn ratio_estimate_and_clamp() {
        let m = GazeMapper {
            screen: ScreenSpec::default(),
            kind: MapperKind::Ratio {
                ratio: [100.0, 100.0],
                rest_feature: [3.0, 4.0],
                rest_screen: Point::new(640.0, 360.0),
            },
        };
        assert_eq!(estimate_gaze(&m, [4.0, 4.5]), Point::new(740.0, 410.0));
        assert_eq!(estimate_gaze(&m, [3.0, 4.0]), Point::new(640.0, 360.0));
        assert_eq!(estimate_gaze(&m, [-3.9, 2.4]), Point::new(0.0, 200.0));
    }

    #[test]
    fn symmetric_five_point_ratio() {
        let s = ScreenSpec::default();
        let pairs = s
            .five_point_layout()
            .into_iter()
            .map(|p| pair(p.x, p.y, 10.0 - 0.02 * (p.x - 640.0), 5.0 + 0.03 * (p.y - 360.0)))
            .collect();
        let m = calibrate(&CalibrationSet { pairs, rest_index: 0 }, MapperMode::Ratio, s).unwrap();
        match m.kind {
            MapperKind::Ratio { ratio, .. } => {
                assert!((ratio[0] + 50.0).abs() < 1e-9 && (ratio[1] - 100.0 / 3.0).abs() < 1e-9);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn degenerate_sets() {
        let s = ScreenSpec::default();
        let still =
            CalibrationSet { pairs: vec![pair(640.0, 360.0, 1.0, 1.0), pair(100.0, 100.0, 1.0, 1.0)], rest_index: 0 };
        assert!(calibrate(&still, MapperMode::Ratio, s).is_err());
        let collinear = CalibrationSet {
            pairs: vec![pair(0.0, 0.0, 0.0, 0.0), pair(1.0, 1.0, 1.0, 1.0), pair(2.0, 2.0, 2.0, 2.0)],
            rest_index: 0,
        };
        assert!(calibrate(&collinear, MapperMode::Affine, s).is_err());
    }

    #[test]
    fn affine_recovers_exact_map() {
        let c = [[310.0, -25.0, 41.5], [12.0, 207.0, -9.25]];
        let feats = [[0.5, 0.0], [0.2, -0.1], [0.8, -0.1], [0.2, 0.1], [0.8, 0.1]];
        let pairs = feats
            .iter()
            .map(|f| {
                pair(c[0][0] * f[0] + c[0][1] * f[1] + c[0][2], c[1][0] * f[0] + c[1][1] * f[1] + c[1][2], f[0], f[1])
            })
            .collect::<Vec<_>>();
        let m = calibrate(
            &CalibrationSet { pairs: pairs.clone(), rest_index: 0 },
            MapperMode::Affine,
            ScreenSpec::default(),
        )
        .unwrap();
        match m.kind {
            MapperKind::Affine { coeffs } => {
                for a in 0..2 {
                    for k in 0..3 {
                        assert!((coeffs[a][k] - c[a][k]).abs() < 1e-9);
                    }
                }
            }
            _ => unreachable!(),
        }
        for p in pairs {
            assert!(m.map_unclamped(p.feature).distance(p.screen) < 1e-9);
        }
    }
}
