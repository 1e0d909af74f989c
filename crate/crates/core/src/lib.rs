//! Escape times of the quadratic family near parabolic parameters of the
//! Mandelbrot set, and the machinery that predicts them.
//!
//! Along a parameter ray landing at a parabolic parameter `c₀`, the escape
//! time `N(c)` of the critical orbit satisfies `N(c)·|c − c₀|·τ(c₀) → π`
//! (satellite case) or `N(c)·|c − c₀|^{1/2}·τ(c₀) → π` (primitive case), where
//! `τ(c₀) = |μ'_{qn}(c₀)|/(2qn)` comes from the multiplier map of the
//! component rooted at `c₀`.
//!
//! Modules, bottom up:
//! - [`dynamics`]: escape times and derivative jets of `z² + c`;
//! - [`orbits`]: periodic orbits and the multiplier map;
//! - [`parabolic`]: parabolic sites, `τ`, fixed-point splitting and indices;
//! - [`rays`]: external parameter rays and the exterior distance bound;
//! - [`experiments`]: reproducible experiments and their CSV/JSON records.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod orbits;
pub mod parabolic;
pub mod rays;

pub use dynamics::{
    escape_time, escape_time_batch, iterate_jet, ComplexValue, EscapeOutcome, OrbitJet,
};
pub use error::{Error, Result};
pub use experiments::{circle_min_escape, ExperimentRecord, Report, RunMetadata};
pub use orbits::{find_periodic_orbit, multiplier_map, MultiplierSample, PeriodicOrbit};
pub use parabolic::{
    cardioid_root, locate_primitive, locate_satellite, BifurcationSite, RotationNumber,
    SplitFixedPoints,
};
pub use rays::{exterior_distance, trace_ray, ExternalAngle, Potential, RayPoint, RayTrace};
