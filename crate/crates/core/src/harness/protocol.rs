//! Session protocol, version "1": JSON text messages with a mandatory
//! `version` field and a `kind` tag.
//!
//! Every client message gets exactly one reply, in arrival order. A `frame`
//! is answered by an `estimate` or an `error`, never both and never neither.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::gaze::{GazeSession, Pipeline, RegionFinder, ScreenSpec, SessionConfig, DEFAULT_MM_PER_PX};
use crate::imgcore::Point;

use super::codec::decode_base64_png;

pub const PROTOCOL_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub version: String,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Envelope<T> {
    pub fn new(body: T) -> Self {
        Self { version: PROTOCOL_VERSION.to_string(), body }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScreenDims {
    pub width: f64,
    pub height: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mm_per_px: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", rename_all_fields = "camelCase")]
pub enum ClientMessage {
    Hello {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        screen: Option<ScreenDims>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pipeline: Option<Pipeline>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
    /// Without frames: asks for the target of `index`. With frames: submits
    /// the images captured while the user looked at that target.
    CalibratePoint {
        index: usize,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        frames: Vec<String>,
    },
    CalibrateDone,
    Frame {
        index: u64,
        image: String,
    },
    Config {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pipeline: Option<Pipeline>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", rename_all_fields = "camelCase")]
pub enum ServerMessage {
    HelloAck {
        protocol: String,
        screen: ScreenSpec,
        pipeline: Pipeline,
        alpha: f64,
        layout: Vec<Point>,
    },
    CalibratePoint {
        index: usize,
        x: f64,
        y: f64,
    },
    Ack {
        of: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        detail: Option<String>,
    },
    Nack {
        of: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<usize>,
        reason: String,
    },
    Estimate {
        index: u64,
        x: f64,
        y: f64,
        raw_x: f64,
        raw_y: f64,
        confidence: f64,
        latency_ms: f64,
    },
    Error {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<u64>,
        code: String,
        message: String,
    },
}

pub mod codes {
    pub const BAD_MESSAGE: &str = "bad_message";
    pub const UNSUPPORTED_VERSION: &str = "unsupported_version";
    pub const UNCALIBRATED: &str = "uncalibrated";
    pub const BAD_FRAME: &str = "bad_frame";
    pub const OUT_OF_ORDER: &str = "out_of_order";
    pub const NO_FEATURES: &str = "no_features";
    pub const INTERNAL: &str = "internal";
}

/// Monotonic time source used for latency accounting.
pub trait Clock: Send {
    fn now(&self) -> Duration;
}

#[derive(Clone, Copy, Debug)]
pub struct MonotonicClock {
    origin: Instant,
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Clock for MonotonicClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }
}

fn error_reply(index: Option<u64>, code: &str, message: impl Into<String>) -> ServerMessage {
    ServerMessage::Error { index, code: code.to_string(), message: message.into() }
}

/// Protocol state of one connection: exactly one GazeSession.
pub struct Connection<C: Clock = MonotonicClock> {
    defaults: SessionConfig,
    finder: RegionFinder,
    session: Option<GazeSession>,
    last_frame: Option<u64>,
    clock: C,
}

impl<C: Clock> Connection<C> {
    pub fn new(defaults: SessionConfig, finder: RegionFinder, clock: C) -> Self {
        Self { defaults, finder, session: None, last_frame: None, clock }
    }

    pub fn session(&self) -> Option<&GazeSession> {
        self.session.as_ref()
    }

    pub fn clock(&self) -> &C {
        &self.clock
    }

    fn session_mut(&mut self) -> crate::Result<&mut GazeSession> {
        if self.session.is_none() {
            self.session = Some(GazeSession::new(self.defaults, self.finder.clone())?);
        }
        Ok(self.session.as_mut().expect("created above"))
    }

    /// Handles one text message and returns its single reply, serialized.
    pub fn handle_text(&mut self, text: &str) -> String {
        let start = self.clock.now();
        let reply = self.handle_at(text, start);
        serde_json::to_string(&Envelope::new(reply)).expect("server messages always serialize")
    }

    fn handle_at(&mut self, text: &str, start: Duration) -> ServerMessage {
        let value: serde_json::Value = match serde_json::from_str(text) {
            Ok(v) => v,
            Err(e) => return error_reply(None, codes::BAD_MESSAGE, format!("not JSON: {e}")),
        };
        let frame_index = (value.get("kind").and_then(|k| k.as_str()) == Some("frame"))
            .then(|| value.get("index").and_then(|i| i.as_u64()))
            .flatten();
        match value.get("version").and_then(|v| v.as_str()) {
            Some(PROTOCOL_VERSION) => {}
            Some(other) => {
                return error_reply(
                    frame_index,
                    codes::UNSUPPORTED_VERSION,
                    format!("version {other:?} is not supported"),
                )
            }
            None => return error_reply(frame_index, codes::BAD_MESSAGE, "missing version field"),
        }
        let msg: Envelope<ClientMessage> = match serde_json::from_value(value) {
            Ok(m) => m,
            Err(e) => return error_reply(frame_index, codes::BAD_MESSAGE, e.to_string()),
        };
        match msg.body {
            ClientMessage::Hello { screen, pipeline, alpha } => self.hello(screen, pipeline, alpha),
            ClientMessage::CalibratePoint { index, frames } => self.calibrate_point(index, &frames),
            ClientMessage::CalibrateDone => self.calibrate_done(),
            ClientMessage::Frame { index, image } => self.frame(index, &image, start),
            ClientMessage::Config { alpha, pipeline } => self.config(alpha, pipeline),
        }
    }

    fn hello(&mut self, screen: Option<ScreenDims>, pipeline: Option<Pipeline>, alpha: Option<f64>) -> ServerMessage {
        let nack = |reason: String| ServerMessage::Nack { of: "hello".into(), index: None, reason };
        let mut cfg = self.defaults;
        if let Some(s) = screen {
            match ScreenSpec::new(s.width, s.height, s.mm_per_px.unwrap_or(DEFAULT_MM_PER_PX)) {
                Ok(spec) => cfg.screen = spec,
                Err(e) => return nack(e.to_string()),
            }
        }
        if let Some(p) = pipeline {
            cfg.pipeline = p;
        }
        if let Some(a) = alpha {
            cfg.alpha = a;
        }
        match GazeSession::new(cfg, self.finder.clone()) {
            Ok(s) => {
                let reply = ServerMessage::HelloAck {
                    protocol: PROTOCOL_VERSION.into(),
                    screen: cfg.screen,
                    pipeline: cfg.pipeline,
                    alpha: cfg.alpha,
                    layout: s.layout().to_vec(),
                };
                self.session = Some(s);
                self.last_frame = None;
                reply
            }
            Err(e) => nack(e.to_string()),
        }
    }

    fn calibrate_point(&mut self, index: usize, frames: &[String]) -> ServerMessage {
        let nack = |reason: String| ServerMessage::Nack { of: "calibrate_point".into(), index: Some(index), reason };
        let session = match self.session_mut() {
            Ok(s) => s,
            Err(e) => return nack(e.to_string()),
        };
        let Some(&target) = session.layout().get(index) else {
            return nack(format!("calibration index {index} out of range 0..{}", session.layout().len()));
        };
        if frames.is_empty() {
            return ServerMessage::CalibratePoint { index, x: target.x, y: target.y };
        }
        let images = match frames.iter().map(|f| decode_base64_png(f)).collect::<crate::Result<Vec<_>>>() {
            Ok(v) => v,
            Err(e) => return nack(e.to_string()),
        };
        match session.calibrate_point(index, &images) {
            Ok(f) => ServerMessage::Ack {
                of: "calibrate_point".into(),
                index: Some(index),
                detail: Some(format!("feature {:.5} {:.5}", f[0], f[1])),
            },
            Err(e) => nack(e.to_string()),
        }
    }

    fn calibrate_done(&mut self) -> ServerMessage {
        let nack = |reason: String| ServerMessage::Nack { of: "calibrate_done".into(), index: None, reason };
        let session = match self.session_mut() {
            Ok(s) => s,
            Err(e) => return nack(e.to_string()),
        };
        match session.calibrate_done() {
            Ok(m) => {
                self.last_frame = None;
                ServerMessage::Ack {
                    of: "calibrate_done".into(),
                    index: None,
                    detail: Some(format!("{:?}", m.mode()).to_lowercase()),
                }
            }
            Err(e) => nack(e.to_string()),
        }
    }

    fn frame(&mut self, index: u64, image: &str, start: Duration) -> ServerMessage {
        if let Some(last) = self.last_frame {
            if index <= last {
                return error_reply(
                    Some(index),
                    codes::OUT_OF_ORDER,
                    format!("frame {index} is not after frame {last}"),
                );
            }
        }
        let session = match self.session_mut() {
            Ok(s) => s,
            Err(e) => return error_reply(Some(index), codes::INTERNAL, e.to_string()),
        };
        if !session.is_calibrated() {
            return error_reply(Some(index), codes::UNCALIBRATED, "calibration has not completed");
        }
        let frame = match decode_base64_png(image) {
            Ok(f) => f,
            Err(e) => return error_reply(Some(index), codes::BAD_FRAME, e.to_string()),
        };
        let result = session.track(&frame);
        self.last_frame = Some(index);
        match result {
            Ok(r) => match (r.estimate, r.instantaneous) {
                (Some(e), Some(raw)) => {
                    let latency = self.clock.now().saturating_sub(start);
                    ServerMessage::Estimate {
                        index,
                        x: e.x,
                        y: e.y,
                        raw_x: raw.x,
                        raw_y: raw.y,
                        confidence: r.confidence,
                        latency_ms: latency.as_secs_f64() * 1e3,
                    }
                }
                _ => error_reply(Some(index), codes::NO_FEATURES, "no face or pupil found in frame"),
            },
            Err(Error::Uncalibrated) => error_reply(Some(index), codes::UNCALIBRATED, "calibration has not completed"),
            Err(e) => error_reply(Some(index), codes::INTERNAL, e.to_string()),
        }
    }

    fn config(&mut self, alpha: Option<f64>, pipeline: Option<Pipeline>) -> ServerMessage {
        let nack = |reason: String| ServerMessage::Nack { of: "config".into(), index: None, reason };
        let session = match self.session_mut() {
            Ok(s) => s,
            Err(e) => return nack(e.to_string()),
        };
        if let Some(a) = alpha {
            if let Err(e) = session.set_alpha(a) {
                return nack(e.to_string());
            }
        }
        let mut notes = Vec::new();
        if let Some(p) = pipeline {
            if p != session.config().pipeline {
                session.set_pipeline(p);
                notes.push("pipeline changed; recalibrate");
            }
        }
        ServerMessage::Ack { of: "config".into(), index: None, detail: (!notes.is_empty()).then(|| notes.join("; ")) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conn() -> Connection {
        Connection::new(SessionConfig::default(), RegionFinder::skin_only(), MonotonicClock::default())
    }

    fn reply(c: &mut Connection, text: &str) -> ServerMessage {
        let out = c.handle_text(text);
        let env: Envelope<ServerMessage> = serde_json::from_str(&out).unwrap();
        assert_eq!(env.version, "1");
        env.body
    }

    #[test]
    fn hello_gets_version_one_ack() {
        let mut c = conn();
        let r = reply(&mut c, r#"{"version":"1","kind":"hello","screen":{"width":800,"height":600}}"#);
        match r {
            ServerMessage::HelloAck { protocol, screen, layout, .. } => {
                assert_eq!(protocol, "1");
                assert_eq!(screen.width_px, 800.0);
                assert_eq!(layout.len(), 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn frame_before_calibration_is_uncalibrated() {
        let mut c = conn();
        let r = reply(&mut c, r#"{"version":"1","kind":"frame","index":3,"image":""}"#);
        assert_eq!(r, error_reply(Some(3), codes::UNCALIBRATED, "calibration has not completed"));
    }

    #[test]
    fn malformed_messages_still_get_one_reply() {
        let mut c = conn();
        for (text, code) in [
            ("not json", codes::BAD_MESSAGE),
            (r#"{"kind":"hello"}"#, codes::BAD_MESSAGE),
            (r#"{"version":"2","kind":"hello"}"#, codes::UNSUPPORTED_VERSION),
            (r#"{"version":"1","kind":"dance"}"#, codes::BAD_MESSAGE),
        ] {
            match reply(&mut c, text) {
                ServerMessage::Error { code: got, .. } => assert_eq!(got, code, "{text}"),
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn calibration_target_request_and_bad_index() {
        let mut c = conn();
        let r = reply(&mut c, r#"{"version":"1","kind":"calibrate_point","index":0}"#);
        assert_eq!(r, ServerMessage::CalibratePoint { index: 0, x: 640.0, y: 360.0 });
        assert!(matches!(
            reply(&mut c, r#"{"version":"1","kind":"calibrate_point","index":9}"#),
            ServerMessage::Nack { .. }
        ));
        assert!(matches!(reply(&mut c, r#"{"version":"1","kind":"calibrate_done"}"#), ServerMessage::Nack { .. }));
    }

    #[test]
    fn config_validates_alpha() {
        let mut c = conn();
        assert!(matches!(reply(&mut c, r#"{"version":"1","kind":"config","alpha":0.5}"#), ServerMessage::Ack { .. }));
        assert_eq!(c.session().unwrap().config().alpha, 0.5);
        assert!(matches!(reply(&mut c, r#"{"version":"1","kind":"config","alpha":0}"#), ServerMessage::Nack { .. }));
        let bad = r#"{"version":"1","kind":"config","alpha":2,"pipeline":2}"#;
        assert!(matches!(reply(&mut c, bad), ServerMessage::Nack { .. }));
        assert_eq!(c.session().unwrap().config().pipeline, Pipeline::One);
    }

    #[test]
    fn wire_shape_is_camel_case() {
        let m = Envelope::new(ServerMessage::Estimate {
            index: 1,
            x: 1.0,
            y: 2.0,
            raw_x: 3.0,
            raw_y: 4.0,
            confidence: 0.5,
            latency_ms: 7.0,
        });
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        assert_eq!(v["kind"], "estimate");
        assert_eq!(v["version"], "1");
        assert_eq!(v["latencyMs"], 7.0);
        assert_eq!(v["rawX"], 3.0);
    }
}
