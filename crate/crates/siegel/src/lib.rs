//! Numerical companion to `siegel-core`: the fitted model map, escape-area
//! measurements, rendering, and the reproducible pipeline behind the `siegel`
//! binary.

pub mod model;
pub mod escape;
pub mod render;
pub mod demo;
pub mod io;
pub mod pipeline;
