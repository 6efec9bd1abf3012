//! Numerical core for experiments on Siegel disks of the family
//! `e^{2πiθ} sin z`: arithmetic of rotation numbers, critical circle maps,
//! cell decompositions of the disk and their extensions, area measures on the
//! Riemann sphere, and Besicovitch-type covering checks.
//!
//! The crate is `no_std` with `alloc`; the model fit, escape-time sampling and
//! the command line live in the `siegel` crate.

#![no_std]

extern crate alloc;

pub mod arithmetic;
pub mod cells;
pub mod circle;
pub mod covering;
pub mod measure;
