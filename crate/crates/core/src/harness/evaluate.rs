//! End-to-end accuracy and latency against the synthetic gaze rig.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::gaze::{
    gaze_error, EvalRecord, GazeMapper, GazeSession, Pipeline, RegionFinder, SessionConfig, DEFAULT_ALPHA,
};
use crate::imgcore::Point;

use super::rig::{RigScene, SynthGazeRig};

#[derive(Clone, Debug)]
pub struct RigEvalConfig {
    pub rig: SynthGazeRig,
    pub pipeline: Pipeline,
    pub alpha: f64,
    pub targets: usize,
    pub calibration_frames: usize,
    /// Frames shown per target; the estimate after the last one is scored.
    pub dwell_frames: usize,
    pub seed: u64,
}

impl RigEvalConfig {
    /// 20 targets, 10 calibration frames per point; pipeline 1 dwells 60
    /// frames per target, pipeline 2 is scored on a single frame.
    pub fn new(pipeline: Pipeline, seed: u64) -> Self {
        Self {
            rig: SynthGazeRig::default(),
            pipeline,
            alpha: DEFAULT_ALPHA,
            targets: 20,
            calibration_frames: 10,
            dwell_frames: match pipeline {
                Pipeline::One => 60,
                Pipeline::Two => 1,
            },
            seed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RigEvalReport {
    pub records: Vec<EvalRecord>,
    pub mapper: GazeMapper,
    /// Wall time of every `track` call, in milliseconds.
    pub frame_times_ms: Vec<f64>,
    /// Frames for which no estimate could be produced.
    pub missed_frames: usize,
}

impl RigEvalReport {
    pub fn mean_error_px(&self) -> f64 {
        self.records.iter().map(|r| r.error_px).sum::<f64>() / self.records.len().max(1) as f64
    }

    pub fn median_frame_ms(&self) -> f64 {
        median(&self.frame_times_ms)
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Deterministic per-frame noise seeds.
#[derive(Clone, Debug)]
pub struct FrameSeeds {
    base: u64,
    next: u64,
}

impl FrameSeeds {
    pub fn new(seed: u64) -> Self {
        Self { base: seed.wrapping_mul(0x9E37_79B9_7F4A_7C15), next: 0 }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> u64 {
        self.next += 1;
        self.base.wrapping_add(self.next)
    }
}

/// Runs the five-point calibration on rig frames and fits the mapper.
pub fn calibrate_on_rig(
    session: &mut GazeSession,
    rig: &SynthGazeRig,
    frames_per_point: usize,
    seeds: &mut FrameSeeds,
) -> Result<GazeMapper> {
    for (i, target) in session.layout().to_vec().into_iter().enumerate() {
        let scene = RigScene::new(rig, target)?;
        let frames = (0..frames_per_point.max(1)).map(|_| scene.frame(seeds.next())).collect::<Result<Vec<_>>>()?;
        session.calibrate_point(i, &frames)?;
    }
    session.calibrate_done()
}

pub fn random_targets(rig: &SynthGazeRig, n: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Point::new(rng.random_range(0.0..rig.screen.width_px), rng.random_range(0.0..rig.screen.height_px)))
        .collect()
}

pub fn run_rig_evaluation(cfg: &RigEvalConfig, finder: RegionFinder) -> Result<RigEvalReport> {
    let screen = cfg.rig.screen;
    let session_cfg = SessionConfig { screen, pipeline: cfg.pipeline, alpha: cfg.alpha, ..SessionConfig::default() };
    let mut session = GazeSession::new(session_cfg, finder)?;
    let mut seeds = FrameSeeds::new(cfg.seed);
    let mapper = calibrate_on_rig(&mut session, &cfg.rig, cfg.calibration_frames, &mut seeds)?;

    let mut records = Vec::with_capacity(cfg.targets);
    let mut frame_times_ms = Vec::new();
    let mut missed_frames = 0;
    let mut last = screen.center();
    for target in random_targets(&cfg.rig, cfg.targets, cfg.seed) {
        let scene = RigScene::new(&cfg.rig, target)?;
        for _ in 0..cfg.dwell_frames.max(1) {
            let frame = scene.frame(seeds.next())?;
            let t0 = Instant::now();
            let r = session.track(&frame)?;
            frame_times_ms.push(t0.elapsed().as_secs_f64() * 1e3);
            match r.estimate {
                Some(e) => last = e,
                None => missed_frames += 1,
            }
        }
        records.push(gaze_error(target, last, &screen));
    }
    Ok(RigEvalReport { records, mapper, frame_times_ms, missed_frames })
}
