//! Liftings of line fields to sphere-valued maps of bounded variation: geometry of
//! `𝕊^{d-1}` and `ℝP^{d-1}`, optimal constants, discrete energies and lifting
//! constructions on grids.

pub mod constants;
pub mod energy;
pub mod error;
pub mod field;
pub mod generators;
pub mod geometry;
pub mod laplace;
pub mod lifting;
pub mod montecarlo;
pub mod verify;
