//! Discontinuous-Galerkin spectral-element solver for coupled elastic/acoustic
//! wave propagation on multi-block hexahedral meshes.
//!
//! The crate is organised bottom-up:
//!
//! * [`basis`] — Gauss-Lobatto-Legendre nodes, Lagrange bases and the trilinear
//!   reference-to-physical map.
//! * [`mesh`] — multi-block hex meshes, boundary tags and non-conforming
//!   interface pairing.
//! * [`materials`] — elastic/acoustic material records and layered assignment.
//! * [`operators`] — matrix-free mass, stiffness, interface and boundary terms.
//! * [`sources`] — kinematic fault and plane-wave load vectors.
//! * [`timeint`] — predictor-corrector leap-frog with acoustic sub-cycling.
//! * [`postproc`] — receivers, pressures, peak-ground-motion maps.
//! * [`signal`] — filtering, spectra and goodness-of-fit scoring.

pub mod basis;
pub mod geom;
pub mod materials;
pub mod mesh;
pub mod operators;
pub mod postproc;
pub mod signal;
pub mod sources;
pub mod timeint;

pub use geom::Point3;
