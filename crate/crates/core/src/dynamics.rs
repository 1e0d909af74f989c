//! Iteration of the quadratic family `p_c(z) = z² + c`.
//!
//! Escape times are measured for the critical orbit `z₀ = 0`. Derivatives are
//! carried by forward recurrences, so no finite differencing happens here.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The universal scalar of the crate: a binary64 complex number.
pub type ComplexValue = Complex64;

/// Escape radius used by the experiments (`|p^k(0)| > 2`).
pub const DEFAULT_ESCAPE_RADIUS: f64 = 2.0;

/// Default iteration cap; non-escape at the cap is data, not an error.
pub const DEFAULT_MAX_ITER: u64 = 100_000_000;

/// Orbits whose modulus passes this bound are reported as divergent by the jet
/// iterations, well before `|z|²` could overflow.
pub const DIVERGENCE_BOUND: f64 = 1e150;

/// Result of iterating the critical orbit against an escape radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeOutcome {
    pub escaped: bool,
    /// First `n` with `|z_n| > R`, or the iteration cap when not escaped.
    pub n: u64,
    pub final_z: ComplexValue,
}

impl EscapeOutcome {
    /// The escape time, if the orbit escaped.
    pub fn escape_time(&self) -> Option<u64> {
        self.escaped.then_some(self.n)
    }
}

/// Orbit point together with its first partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitJet {
    pub z: ComplexValue,
    /// `∂z_k/∂z₀`
    pub dz_dz0: ComplexValue,
    /// `∂z_k/∂c`
    pub dz_dc: ComplexValue,
    pub k: u64,
}

/// First and second partials of `z_k` with respect to `z₀` and `c`.
///
/// Used by the Newton solvers that need the derivative of the multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderJet {
    pub z: ComplexValue,
    pub dz_dz0: ComplexValue,
    pub dz_dc: ComplexValue,
    /// `∂²z_k/∂z₀²`
    pub d2z_dz0: ComplexValue,
    /// `∂²z_k/∂z₀∂c`
    pub d2z_dz0dc: ComplexValue,
}

/// Escape time of the critical orbit of `p_c` with `|z|² > R²` as the test.
pub fn escape_time(c: ComplexValue, radius: f64, max_iter: u64) -> EscapeOutcome {
    let r2 = radius * radius;
    let (cr, ci) = (c.re, c.im);
    let (mut x, mut y) = (0.0f64, 0.0f64);
    for n in 1..=max_iter {
        let x2 = x * x;
        let y2 = y * y;
        y = 2.0 * x * y + ci;
        x = x2 - y2 + cr;
        if x * x + y * y > r2 {
            return EscapeOutcome {
                escaped: true,
                n,
                final_z: ComplexValue::new(x, y),
            };
        }
    }
    EscapeOutcome {
        escaped: false,
        n: max_iter,
        final_z: ComplexValue::new(x, y),
    }
}

/// Elementwise [`escape_time`], evaluated in parallel, order preserved.
pub fn escape_time_batch(cs: &[ComplexValue], radius: f64, max_iter: u64) -> Vec<EscapeOutcome> {
    cs.par_iter()
        .map(|&c| escape_time(c, radius, max_iter))
        .collect()
}

/// Iterate `k` steps from `z0` carrying `∂/∂z₀` (seed 1) and `∂/∂c` (seed 0).
pub fn iterate_jet(c: ComplexValue, z0: ComplexValue, k: u64) -> Result<OrbitJet> {
    if k == 0 {
        return Err(Error::pre("iterate_jet needs k >= 1"));
    }
    let mut z = z0;
    let mut dz = ComplexValue::new(1.0, 0.0);
    let mut dc = ComplexValue::new(0.0, 0.0);
    for step in 0..k {
        dc = 2.0 * z * dc + 1.0;
        dz = 2.0 * z * dz;
        z = z * z + c;
        if !(z.norm_sqr() <= DIVERGENCE_BOUND * DIVERGENCE_BOUND) {
            return Err(Error::Divergence {
                steps: step + 1,
                bound: DIVERGENCE_BOUND,
            });
        }
    }
    Ok(OrbitJet {
        z,
        dz_dz0: dz,
        dz_dc: dc,
        k,
    })
}

/// Like [`iterate_jet`] with the two second partials needed for `∂μ/∂z` and
/// `∂μ/∂c`.
pub fn iterate_second_order(c: ComplexValue, z0: ComplexValue, k: u64) -> Result<SecondOrderJet> {
    let one = ComplexValue::new(1.0, 0.0);
    let mut j = SecondOrderJet {
        z: z0,
        dz_dz0: one,
        dz_dc: ComplexValue::new(0.0, 0.0),
        d2z_dz0: ComplexValue::new(0.0, 0.0),
        d2z_dz0dc: ComplexValue::new(0.0, 0.0),
    };
    for step in 0..k {
        let two_z = 2.0 * j.z;
        j.d2z_dz0dc = 2.0 * j.dz_dz0 * j.dz_dc + two_z * j.d2z_dz0dc;
        j.d2z_dz0 = 2.0 * j.dz_dz0 * j.dz_dz0 + two_z * j.d2z_dz0;
        j.dz_dc = two_z * j.dz_dc + one;
        j.dz_dz0 = two_z * j.dz_dz0;
        j.z = j.z * j.z + c;
        if !(j.z.norm_sqr() <= DIVERGENCE_BOUND * DIVERGENCE_BOUND) {
            return Err(Error::Divergence {
                steps: step + 1,
                bound: DIVERGENCE_BOUND,
            });
        }
    }
    Ok(j)
}

/// Critical orbit with `∂z/∂c`, stopped at the first `|z_n| > radius`.
///
/// Returns `None` when the orbit stays inside the radius for `max_iter` steps.
pub fn escape_with_derivative(c: ComplexValue, radius: f64, max_iter: u64) -> Option<OrbitJet> {
    let r2 = radius * radius;
    let mut z = ComplexValue::new(0.0, 0.0);
    let mut dc = ComplexValue::new(0.0, 0.0);
    for n in 1..=max_iter {
        dc = 2.0 * z * dc + 1.0;
        z = z * z + c;
        if z.norm_sqr() > r2 {
            return Some(OrbitJet {
                z,
                dz_dz0: ComplexValue::new(f64::NAN, f64::NAN),
                dz_dc: dc,
                k: n,
            });
        }
    }
    None
}

/// `k` steps of the critical orbit, the usual seed for attracting cycles.
pub fn critical_orbit_point(c: ComplexValue, k: u64) -> ComplexValue {
    let mut z = ComplexValue::new(0.0, 0.0);
    for _ in 0..k {
        z = z * z + c;
        if !z.is_finite() {
            break;
        }
    }
    z
}

/// True when both parts are finite.
pub fn is_finite(c: ComplexValue) -> bool {
    c.re.is_finite() && c.im.is_finite()
}
