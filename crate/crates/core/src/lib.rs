//! Pseudospectral solver for the Jin-Xin relaxation system and its parabolic
//! limit, with Littlewood-Paley diagnostics.

pub mod cli;
pub mod config;
pub mod error;
pub mod diag;
pub mod grid;
pub mod jinxin;
pub mod limit;
pub mod lp;
pub mod rng;
pub mod sweep;
pub mod symbol;

pub use error::{Error, Result};
