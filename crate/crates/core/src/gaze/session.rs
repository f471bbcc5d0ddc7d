use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{to_grayscale, ColorImage, Point};
use crate::pupil::{PupilConfig, PupilMethod};

use super::mapper::{calibrate, estimate_gaze, CalibrationPair, CalibrationSet, GazeMapper, MapperMode};
use super::pipeline::{extract_features, FrameFeatures, RegionFinder};
use super::{decay_update, DecayState, ScreenSpec, DEFAULT_ALPHA};

/// Tracking pipeline. 1: Hough pupils + Harris eye corners, affine mapping,
/// decay smoothing. 2: OCEM pupils, five-point ratio mapping, no smoothing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Pipeline {
    One,
    Two,
}

impl Pipeline {
    pub fn mapper_mode(self) -> MapperMode {
        match self {
            Pipeline::One => MapperMode::Affine,
            Pipeline::Two => MapperMode::Ratio,
        }
    }

    pub fn pupil_method(self) -> PupilMethod {
        match self {
            Pipeline::One => PupilMethod::Hough,
            Pipeline::Two => PupilMethod::Ocem,
        }
    }
}

impl TryFrom<u8> for Pipeline {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Pipeline::One),
            2 => Ok(Pipeline::Two),
            other => Err(format!("unknown pipeline {other}")),
        }
    }
}

impl From<Pipeline> for u8 {
    fn from(p: Pipeline) -> u8 {
        match p {
            Pipeline::One => 1,
            Pipeline::Two => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SessionConfig {
    pub screen: ScreenSpec,
    pub pipeline: Pipeline,
    pub alpha: f64,
    pub pupil: PupilConfig,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            screen: ScreenSpec::default(),
            pipeline: Pipeline::One,
            alpha: DEFAULT_ALPHA,
            pupil: PupilConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackResult {
    /// Reported estimate: smoothed for pipeline 1, raw for pipeline 2.
    pub estimate: Option<Point>,
    /// Mapped estimate of this frame alone.
    pub instantaneous: Option<Point>,
    pub confidence: f64,
    pub features: Option<FrameFeatures>,
}

/// Per-user tracking state: calibration samples, mapper and decay filter.
/// Single-writer; share across threads only behind a lock.
#[derive(Debug)]
pub struct GazeSession {
    config: SessionConfig,
    finder: RegionFinder,
    layout: Vec<Point>,
    samples: Vec<Option<[f64; 2]>>,
    /// Running sum of half the left-to-right pupil vector, for one-eyed frames.
    half_span: (Point, usize),
    mapper: Option<GazeMapper>,
    decay: Option<DecayState>,
}

impl GazeSession {
    pub fn new(config: SessionConfig, finder: RegionFinder) -> Result<Self> {
        DecayState::new(Point::new(0.0, 0.0), config.alpha)?;
        let layout = config.screen.five_point_layout();
        Ok(Self {
            samples: vec![None; layout.len()],
            layout,
            config,
            finder,
            half_span: (Point::new(0.0, 0.0), 0),
            mapper: None,
            decay: None,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn layout(&self) -> &[Point] {
        &self.layout
    }

    pub fn mapper(&self) -> Option<&GazeMapper> {
        self.mapper.as_ref()
    }

    pub fn decay(&self) -> Option<&DecayState> {
        self.decay.as_ref()
    }

    pub fn is_calibrated(&self) -> bool {
        self.mapper.is_some()
    }

    pub fn set_alpha(&mut self, alpha: f64) -> Result<()> {
        DecayState::new(Point::new(0.0, 0.0), alpha)?;
        self.config.alpha = alpha;
        if let Some(d) = &mut self.decay {
            d.alpha = alpha;
        }
        Ok(())
    }

    /// Switching pipelines discards the calibration.
    pub fn set_pipeline(&mut self, pipeline: Pipeline) {
        if pipeline != self.config.pipeline {
            self.config.pipeline = pipeline;
            self.reset_calibration();
        }
    }

    pub fn reset_calibration(&mut self) {
        self.samples = vec![None; self.layout.len()];
        self.half_span = (Point::new(0.0, 0.0), 0);
        self.mapper = None;
        self.decay = None;
    }

    /// Installs a previously computed mapper, e.g. from a calibration file.
    pub fn install_mapper(&mut self, mapper: GazeMapper) -> Result<()> {
        if mapper.mode() != self.config.pipeline.mapper_mode() {
            return Err(Error::InvalidParameter("mapper mode does not match the pipeline".into()));
        }
        self.config.screen = mapper.screen;
        self.decay = Some(DecayState::new(mapper.screen.center(), self.config.alpha)?);
        self.mapper = Some(mapper);
        Ok(())
    }

    pub fn features(&self, frame: &ColorImage) -> Option<FrameFeatures> {
        let gray = to_grayscale(frame);
        let p = self.config.pipeline;
        extract_features(frame, &gray, &self.finder, &self.config.pupil, p.pupil_method(), p == Pipeline::One)
    }

    /// Mapper input for one frame plus the mean pupil confidence.
    fn feature_vector(&self, ff: &FrameFeatures) -> Option<([f64; 2], f64)> {
        match self.config.pipeline {
            Pipeline::One => {
                let used: Vec<_> = ff.eyes().filter_map(|e| Some((e.normalized()?, e.pupil?.confidence))).collect();
                if used.is_empty() {
                    return None;
                }
                let n = used.len() as f64;
                let u = used.iter().map(|((u, _), _)| u).sum::<f64>() / n;
                let v = used.iter().map(|((_, v), _)| v).sum::<f64>() / n;
                Some(([u, v], used.iter().map(|(_, c)| c).sum::<f64>() / n))
            }
            Pipeline::Two => {
                let l = ff.left.as_ref().and_then(|e| e.pupil);
                let r = ff.right.as_ref().and_then(|e| e.pupil);
                let half = (self.half_span.1 > 0).then(|| self.half_span.0 * (1.0 / self.half_span.1 as f64));
                let (mid, conf) = match (l, r, half) {
                    (Some(l), Some(r), _) => ((l.center + r.center) * 0.5, (l.confidence + r.confidence) / 2.0),
                    (Some(l), None, Some(h)) => (l.center + h, l.confidence),
                    (None, Some(r), Some(h)) => (r.center - h, r.confidence),
                    _ => return None,
                };
                Some(([mid.x, mid.y], conf))
            }
        }
    }

    /// Records the averaged feature for calibration target `index` from one
    /// or more frames of the user looking at it.
    pub fn calibrate_point(&mut self, index: usize, frames: &[ColorImage]) -> Result<[f64; 2]> {
        if index >= self.layout.len() {
            return Err(Error::InvalidParameter(format!("calibration index {index} out of range")));
        }
        let feats: Vec<FrameFeatures> = frames.iter().filter_map(|f| self.features(f)).collect();
        for ff in &feats {
            if let (Some(l), Some(r)) =
                (ff.left.as_ref().and_then(|e| e.pupil), ff.right.as_ref().and_then(|e| e.pupil))
            {
                self.half_span.0 = self.half_span.0 + (r.center - l.center) * 0.5;
                self.half_span.1 += 1;
            }
        }
        let vecs: Vec<[f64; 2]> = feats.iter().filter_map(|ff| self.feature_vector(ff)).map(|(v, _)| v).collect();
        if vecs.is_empty() {
            return Err(Error::Degenerate(format!("no eye features found for calibration point {index}")));
        }
        let n = vecs.len() as f64;
        let mean = [vecs.iter().map(|v| v[0]).sum::<f64>() / n, vecs.iter().map(|v| v[1]).sum::<f64>() / n];
        self.samples[index] = Some(mean);
        self.mapper = None;
        Ok(mean)
    }

    pub fn calibration_set(&self) -> Result<CalibrationSet> {
        let pairs = self
            .layout
            .iter()
            .zip(&self.samples)
            .enumerate()
            .map(|(i, (s, f))| {
                f.map(|feature| CalibrationPair { screen: *s, feature })
                    .ok_or_else(|| Error::InvalidParameter(format!("calibration point {i} not recorded")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CalibrationSet { pairs, rest_index: 0 })
    }

    /// Fits the mapper for the active pipeline and resets the decay filter
    /// to the screen center.
    pub fn calibrate_done(&mut self) -> Result<GazeMapper> {
        let set = self.calibration_set()?;
        let mapper = calibrate(&set, self.config.pipeline.mapper_mode(), self.config.screen)?;
        self.install_mapper(mapper)?;
        Ok(mapper)
    }

    /// Processes one frame. Frames without usable eyes leave the decay state
    /// untouched and yield no estimate.
    pub fn track(&mut self, frame: &ColorImage) -> Result<TrackResult> {
        let mapper = self.mapper.ok_or(Error::Uncalibrated)?;
        let features = self.features(frame);
        let Some((vec, confidence)) = features.as_ref().and_then(|ff| self.feature_vector(ff)) else {
            return Ok(TrackResult { estimate: None, instantaneous: None, confidence: 0.0, features });
        };
        let inst = estimate_gaze(&mapper, vec);
        let estimate = match self.config.pipeline {
            Pipeline::One => {
                let d = self.decay.get_or_insert(DecayState::new(self.config.screen.center(), self.config.alpha)?);
                *d = decay_update(*d, inst);
                d.estimate
            }
            Pipeline::Two => inst,
        };
        Ok(TrackResult { estimate: Some(estimate), instantaneous: Some(inst), confidence, features })
    }
}
