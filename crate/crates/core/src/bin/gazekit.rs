use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use gazekit::cascade::{detect_multiscale, CascadeModel, DEFAULT_MIN_NEIGHBORS, DEFAULT_SCALE_FACTOR};
use gazekit::gaze::{
    CalibrationFile, GazeSession, MapperMode, Pipeline, RegionFinder, ScreenSpec, SessionConfig, DEFAULT_ALPHA,
    DEFAULT_MM_PER_PX,
};
use gazekit::harness::{
    calibrate_on_rig, load_image, render_rig_frame, render_synthetic_eye, replay_fixture, run_rig_evaluation,
    save_image, serve, write_eval_csv, FrameSeeds, RigEvalConfig, ServeConfig, SynthEyeParams, SynthGazeRig,
};
use gazekit::imgcore::{to_grayscale, Point};
use gazekit::pupil::{detect_pupil, detect_pupil_ocem, EyeWindow, PupilConfig, PupilMethod};
use gazekit::Error;

/// Webcam gaze estimation toolkit.
#[derive(Parser)]
#[command(name = "gazekit", version, about)]
struct Cli {
    /// Log filter, e.g. `info` or `gazekit=debug`.
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ScreenArgs {
    /// Screen size in pixels, WxH.
    #[arg(long, default_value = "1280x720", value_parser = parse_screen)]
    screen: (f64, f64),
    #[arg(long, default_value_t = DEFAULT_MM_PER_PX)]
    mm_per_px: f64,
}

impl ScreenArgs {
    fn spec(&self) -> Result<ScreenSpec, CliError> {
        ScreenSpec::new(self.screen.0, self.screen.1, self.mm_per_px).map_err(CliError::usage)
    }
}

#[derive(Args, Clone, Default)]
struct ModelArgs {
    /// Face cascade XML; the skin-color model is used when omitted.
    #[arg(long)]
    cascade_face: Option<PathBuf>,
    /// Eye cascade XML; eyes come from the skin mask when omitted.
    #[arg(long)]
    cascade_eye: Option<PathBuf>,
}

impl ModelArgs {
    fn finder(&self) -> Result<RegionFinder, CliError> {
        let load = |p: &Path| CascadeModel::from_file(p).map(Arc::new);
        match (&self.cascade_face, &self.cascade_eye) {
            (None, None) => Ok(RegionFinder::skin_only()),
            (None, Some(_)) => Err(CliError::Usage("--cascade-eye requires --cascade-face".into())),
            (Some(f), e) => {
                let eye = e.as_deref().map(load).transpose()?;
                Ok(RegionFinder::with_cascades(load(f)?, eye))
            }
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Hough,
    Ocem,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Eye,
    Rig,
}

#[derive(Subcommand)]
enum Command {
    /// Detect faces and print them as JSON.
    DetectFace {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        models: ModelArgs,
    },
    /// Detect the face and its eye regions.
    DetectEyes {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        models: ModelArgs,
    },
    /// Locate pupils in a face frame, or in an eye crop when --face-width is given.
    #[command(alias = "pupil")]
    DetectPupil {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "hough")]
        method: MethodArg,
        /// Treat the input as an eye crop from a face this many pixels wide.
        #[arg(long)]
        face_width: Option<f64>,
        #[command(flatten)]
        models: ModelArgs,
    },
    /// Five-point calibration from frames on disk (`point<i>_*.png|ppm`) or the synthetic rig.
    Calibrate {
        /// Directory of calibration frames; the synthetic rig is used when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Calibration file to write.
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        pipeline: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rig frames per calibration point.
        #[arg(long, default_value_t = 10)]
        frames: usize,
        #[command(flatten)]
        screen: ScreenArgs,
        #[command(flatten)]
        models: ModelArgs,
    },
    /// Track gaze over a directory of frames with a saved calibration.
    Track {
        #[arg(long)]
        calibration: PathBuf,
        /// Directory of frames, processed in file-name order.
        #[arg(long)]
        input: PathBuf,
        /// CSV of per-frame estimates; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[command(flatten)]
        models: ModelArgs,
    },
    /// End-to-end accuracy on the synthetic rig.
    Evaluate {
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        pipeline: u8,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        targets: usize,
        /// Frames per target; defaults to 60 for pipeline 1 and 1 for pipeline 2.
        #[arg(long)]
        dwell: Option<usize>,
        /// CSV of evaluation records.
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        screen: ScreenArgs,
    },
    /// Render synthetic eyes or rig frames with ground truth.
    Synth {
        #[arg(long, value_enum, default_value = "eye")]
        kind: SynthKind,
        /// Output directory.
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Rig gaze target `x,y`; random when omitted.
        #[arg(long, value_parser = parse_point)]
        target: Option<Point>,
        #[arg(long, default_value_t = 200.0)]
        face_width: f64,
        #[arg(long, default_value_t = 0.0)]
        occlusion: f64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[command(flatten)]
        screen: ScreenArgs,
    },
    /// Replay an `actual_x,actual_y,est_x,est_y` fixture and print the error tables.
    Replay {
        #[arg(long)]
        input: PathBuf,
        /// CSV of evaluation records.
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        screen: ScreenArgs,
    },
    /// Run the WebSocket session service.
    Serve {
        #[arg(long, default_value_t = 8765)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        pipeline: u8,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[command(flatten)]
        screen: ScreenArgs,
        #[command(flatten)]
        models: ModelArgs,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Input(Error),
    Internal(String),
}

impl CliError {
    fn usage(e: Error) -> Self {
        CliError::Usage(e.to_string())
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(m) => CliError::Usage(m),
            Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::Format(_)
            | Error::Model(_)
            | Error::InvalidImage(_)
            | Error::OutOfBounds(_)
            | Error::Degenerate(_)
            | Error::Uncalibrated => CliError::Input(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.into())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Input(e) => write!(f, "{e}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

fn parse_screen(s: &str) -> Result<(f64, f64), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WxH, e.g. 1280x720")?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("bad dimension {v:?}"));
    Ok((parse(w)?, parse(h)?))
}

fn parse_point(s: &str) -> Result<Point, String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("bad coordinate {v:?}"));
    Ok(Point::new(parse(x)?, parse(y)?))
}

fn pipeline_of(n: u8) -> Pipeline {
    if n == 2 {
        Pipeline::Two
    } else {
        Pipeline::One
    }
}

fn emit(output: Option<&Path>, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    match output {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => writeln!(std::io::stdout().lock(), "{text}")?,
    }
    Ok(())
}

fn image_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| ["png", "ppm", "pgm"].contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::DetectFace { input, output, models } => {
            let img = load_image(&input)?;
            let finder = models.finder()?;
            let value = match &finder.face_model {
                Some(model) => {
                    let gray = to_grayscale(&img);
                    let min = gray.width().min(gray.height()) / 5;
                    let faces = detect_multiscale(model, &gray, DEFAULT_SCALE_FACTOR, DEFAULT_MIN_NEIGHBORS, min)?;
                    json!({ "source": "cascade", "faces": faces })
                }
                None => {
                    let faces: Vec<_> = finder.find(&img, &to_grayscale(&img)).into_iter().collect();
                    json!({ "source": "skin", "faces": faces })
                }
            };
            emit(output.as_deref(), &value)
        }
        Command::DetectEyes { input, output, models } => {
            let img = load_image(&input)?;
            let region = models.finder()?.find(&img, &to_grayscale(&img));
            emit(output.as_deref(), &json!({ "region": region }))
        }
        Command::DetectPupil { input, output, method, face_width, models } => {
            let img = load_image(&input)?;
            let gray = to_grayscale(&img);
            let cfg = PupilConfig::default();
            let value = match face_width {
                Some(fw) => {
                    let eye = EyeWindow::new(gray, (0, 0), fw)?;
                    let est = match method {
                        MethodArg::Hough => detect_pupil(&eye, &cfg),
                        MethodArg::Ocem => detect_pupil_ocem(&eye, &cfg),
                    };
                    json!({ "pupil": est })
                }
                None => {
                    let pm = match method {
                        MethodArg::Hough => PupilMethod::Hough,
                        MethodArg::Ocem => PupilMethod::Ocem,
                    };
                    let ff = gazekit::gaze::extract_features(&img, &gray, &models.finder()?, &cfg, pm, true);
                    json!({ "features": ff })
                }
            };
            emit(output.as_deref(), &value)
        }
        Command::Calibrate { input, output, pipeline, seed, frames, screen, models } => {
            let screen = screen.spec()?;
            let cfg = SessionConfig { screen, pipeline: pipeline_of(pipeline), ..SessionConfig::default() };
            let mut session = GazeSession::new(cfg, models.finder()?)?;
            let mapper = match input {
                None => {
                    let rig = SynthGazeRig { screen, ..SynthGazeRig::default() };
                    calibrate_on_rig(&mut session, &rig, frames, &mut FrameSeeds::new(seed))?
                }
                Some(dir) => {
                    let files = image_files(&dir)?;
                    for i in 0..session.layout().len() {
                        let prefix = format!("point{i}_");
                        let imgs = files
                            .iter()
                            .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with(&prefix)))
                            .map(load_image)
                            .collect::<Result<Vec<_>, _>>()?;
                        if imgs.is_empty() {
                            return Err(CliError::Input(Error::Format(format!(
                                "no frames named {prefix}* in {}",
                                dir.display()
                            ))));
                        }
                        session.calibrate_point(i, &imgs)?;
                    }
                    session.calibrate_done()?
                }
            };
            let set = session.calibration_set()?;
            let file = CalibrationFile::new(&mapper, session.layout().to_vec(), set.pairs, set.rest_index);
            file.save(&output)?;
            eprintln!("wrote {:?} calibration to {}", mapper.mode(), output.display());
            Ok(())
        }
        Command::Track { calibration, input, output, alpha, models } => {
            let file = CalibrationFile::load(&calibration)?;
            let pipeline = match file.mode {
                MapperMode::Affine => Pipeline::One,
                MapperMode::Ratio => Pipeline::Two,
            };
            let cfg = SessionConfig { screen: file.screen, pipeline, alpha, ..SessionConfig::default() };
            let mut session = GazeSession::new(cfg, models.finder()?)?;
            session.install_mapper(file.mapper())?;
            let sink: Box<dyn std::io::Write> = match &output {
                Some(p) => Box::new(std::fs::File::create(p)?),
                None => Box::new(std::io::stdout()),
            };
            let mut w = csv::Writer::from_writer(sink);
            w.write_record(["frame", "x", "y", "raw_x", "raw_y", "confidence"]).map_err(Error::from)?;
            for path in image_files(&input)? {
                let r = session.track(&load_image(&path)?)?;
                let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
                let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
                w.write_record([
                    name,
                    cell(r.estimate.map(|p| p.x)),
                    cell(r.estimate.map(|p| p.y)),
                    cell(r.instantaneous.map(|p| p.x)),
                    cell(r.instantaneous.map(|p| p.y)),
                    r.confidence.to_string(),
                ])
                .map_err(Error::from)?;
            }
            w.flush()?;
            Ok(())
        }
        Command::Evaluate { pipeline, alpha, seed, targets, dwell, output, screen } => {
            let screen = screen.spec()?;
            let mut cfg = RigEvalConfig::new(pipeline_of(pipeline), seed);
            cfg.rig.screen = screen;
            cfg.alpha = alpha;
            cfg.targets = targets;
            if let Some(d) = dwell {
                cfg.dwell_frames = d;
            }
            let rep = run_rig_evaluation(&cfg, RegionFinder::skin_only())?;
            if let Some(p) = &output {
                write_eval_csv(std::fs::File::create(p)?, &rep.records, &screen)?;
            }
            let grid = gazekit::gaze::evaluate_grid(&rep.records, &screen);
            let mut out = std::io::stdout().lock();
            write!(out, "{}", grid.to_table())?;
            writeln!(
                out,
                "pipeline {pipeline}: mean error {:.2} px over {} targets; median frame {:.1} ms; {} frames without estimate",
                rep.mean_error_px(),
                rep.records.len(),
                rep.median_frame_ms(),
                rep.missed_frames
            )?;
            Ok(())
        }
        Command::Synth { kind, output, seed, count, target, face_width, occlusion, noise, screen } => {
            std::fs::create_dir_all(&output)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for k in 0..count {
                let frame_seed = seed.wrapping_mul(1000).wrapping_add(k as u64);
                let truth = match kind {
                    SynthKind::Eye => {
                        let size = ((0.45 * face_width).round() as usize, (0.3 * face_width).round() as usize);
                        let mut p = SynthEyeParams::centered(size, face_width);
                        let slack = (size.0 as f64 / 2.0 - p.iris_radius - 2.0).max(0.0) * 0.5;
                        p.iris_center.x += rng.random_range(-slack..=slack);
                        p.eyelid_occlusion = occlusion;
                        p.noise_sigma = noise;
                        p.seed = frame_seed;
                        let (img, c) = render_synthetic_eye(&p)?;
                        save_image(output.join(format!("eye_{k:04}.png")), &img)?;
                        json!({ "iris_center": c, "iris_radius": p.iris_radius, "face_width": face_width })
                    }
                    SynthKind::Rig => {
                        let rig = SynthGazeRig { screen: screen.spec()?, ..SynthGazeRig::default() };
                        let t = target.unwrap_or_else(|| {
                            Point::new(
                                rng.random_range(0.0..rig.screen.width_px),
                                rng.random_range(0.0..rig.screen.height_px),
                            )
                        });
                        let (img, truth) = render_rig_frame(&rig, t, frame_seed)?;
                        save_image(output.join(format!("frame_{k:04}.png")), &img)?;
                        json!(truth)
                    }
                };
                let prefix = match kind {
                    SynthKind::Eye => "eye",
                    SynthKind::Rig => "frame",
                };
                emit(Some(&output.join(format!("{prefix}_{k:04}.json"))), &truth)?;
            }
            Ok(())
        }
        Command::Replay { input, output, screen } => {
            let screen = screen.spec()?;
            let rep = replay_fixture(&input, &screen)?;
            let mut out = std::io::stdout().lock();
            write!(out, "{}{}", rep.targets_table(), rep.grid.to_table())?;
            if let Some(p) = &output {
                write_eval_csv(std::fs::File::create(p)?, &rep.records, &screen)?;
            }
            Ok(())
        }
        Command::Serve { port, host, pipeline, alpha, screen, models } => {
            let session = SessionConfig {
                screen: screen.spec()?,
                pipeline: pipeline_of(pipeline),
                alpha,
                ..SessionConfig::default()
            };
            GazeSession::new(session, RegionFinder::skin_only())?;
            let config = ServeConfig { session, finder: models.finder()? };
            serve(SocketAddr::new(host, port), config)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_new(&cli.log).unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    let outcome = std::panic::catch_unwind(move || run(cli.command)).unwrap_or_else(|p| {
        let msg = p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned());
        Err(CliError::Internal(msg.unwrap_or_else(|| "panic".into())))
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gazekit: {e}");
            ExitCode::from(e.code())
        }
    }
}
