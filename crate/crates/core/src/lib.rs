#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cascade;
pub mod eigenfaces;
pub mod error;
pub mod gaze;
pub mod harness;
pub mod imgcore;
pub mod pupil;
pub mod skinmodel;

pub use error::{Error, Result};
