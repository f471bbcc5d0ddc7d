//! Synthetic ground truth, fixture replay, reports and the session service.

pub mod codec;
pub mod evaluate;
pub mod fixture;
pub mod protocol;
pub mod rig;
pub mod server;
pub mod synth;

pub use codec::{decode_base64_png, decode_png, encode_base64_png, encode_png, load_image, save_image};
pub use evaluate::{calibrate_on_rig, random_targets, run_rig_evaluation, FrameSeeds, RigEvalConfig, RigEvalReport};
pub use fixture::{
    read_fixture, replay_fixture, replay_rows, write_eval_csv, write_fixture, FixtureRow, ReplayReport, TargetSummary,
};
pub use protocol::{ClientMessage, Clock, Connection, Envelope, MonotonicClock, ServerMessage, PROTOCOL_VERSION};
pub use rig::{render_rig_frame, RigScene, RigTruth, SynthGazeRig};
pub use server::{serve, serve_listener, ServeConfig};
pub use synth::{render_synthetic_eye, SynthEyeParams};
