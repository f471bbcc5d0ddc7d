use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::Point;

use super::mapper::{CalibrationPair, GazeMapper, MapperKind, MapperMode};
use super::ScreenSpec;

pub const CALIBRATION_FILE_VERSION: u32 = 1;

/// On-disk calibration: the layout, the measured pairs and the fitted mapper.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub version: u32,
    pub screen: ScreenSpec,
    pub mode: MapperMode,
    pub layout: Vec<Point>,
    pub pairs: Vec<CalibrationPair>,
    pub rest_index: usize,
    pub mapper: MapperKind,
}

impl CalibrationFile {
    pub fn new(mapper: &GazeMapper, layout: Vec<Point>, pairs: Vec<CalibrationPair>, rest_index: usize) -> Self {
        Self {
            version: CALIBRATION_FILE_VERSION,
            screen: mapper.screen,
            mode: mapper.mode(),
            layout,
            pairs,
            rest_index,
            mapper: mapper.kind,
        }
    }

    pub fn mapper(&self) -> GazeMapper {
        GazeMapper { screen: self.screen, kind: self.mapper }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CalibrationFile = serde_json::from_str(text)?;
        if file.version != CALIBRATION_FILE_VERSION {
            return Err(Error::Format(format!("unsupported calibration file version {}", file.version)));
        }
        let kind_mode = file.mapper().mode();
        if kind_mode != file.mode {
            return Err(Error::Format(format!("mode {:?} disagrees with mapper {:?}", file.mode, kind_mode)));
        }
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
