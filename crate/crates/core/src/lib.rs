//! Numerical laboratory for gradient estimates of harmonic map heat flows
//! along model backward super Ricci flows.

pub mod error;
pub mod estimates;
pub mod flows;
pub mod kato;
pub mod maps;
pub mod numerics;
pub mod radial;
pub mod reduced;

pub use error::{Error, Result};
