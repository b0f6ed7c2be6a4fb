//! Dualizable shearlet frames on a periodic pixel grid.
//!
//! Each shear direction `s` carries an orthonormal sheared tensor-wavelet basis;
//! convolving it with a directional filter `G_s` yields the frame, and the dual
//! is the closed form `G_s psi / W` with `W = sum_s |G_s|^2 + |G_s o R|^2`.

mod cmf;

pub mod error;
pub mod generators;
pub mod grid;
pub mod index;
pub mod filters;
pub mod onb;
pub mod system;
pub mod io;
pub mod config;
pub mod cartoon;
pub mod bench;
pub mod support;

pub use error::{Error, Result};
pub use grid::FourierGrid;
pub use index::{LambdaIndex, ShearParam};
