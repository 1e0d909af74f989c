//! Periodic orbits of `p_c`, their multipliers, and the multiplier map.

use serde::{Deserialize, Serialize};

use crate::dynamics::{critical_orbit_point, iterate_jet, iterate_second_order, ComplexValue};
use crate::error::{Error, Result};

/// Largest period the solvers accept.
pub const MAX_PERIOD: u32 = 24;
/// Residual `|p^n(z) − z|` required of a converged orbit.
pub const RESIDUAL_TOL: f64 = 1e-12;
/// A proper divisor `d` with `|p^d(z) − z|` below this makes the period inexact.
pub const EXACTNESS_GUARD: f64 = 1e-8;
pub const MAX_NEWTON_STEPS: u32 = 200;
/// `|∂g/∂z|` below this makes the implicit derivative of the cycle undefined.
pub const IMPLICIT_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub c: ComplexValue,
    /// Exact period.
    pub period: u32,
    /// One point of the orbit.
    pub point: ComplexValue,
    /// `(p_c^n)'(point)`
    pub multiplier: ComplexValue,
    /// `|p_c^n(point) − point|`
    pub residual: f64,
}

impl PeriodicOrbit {
    pub fn points(&self) -> Vec<ComplexValue> {
        orbit_points(self.c, self.point, self.period)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSample {
    pub c: ComplexValue,
    pub n: u32,
    pub mu: ComplexValue,
    pub dmu_dc: ComplexValue,
}

/// The `n` points `z, p(z), …, p^{n−1}(z)`.
pub fn orbit_points(c: ComplexValue, z: ComplexValue, n: u32) -> Vec<ComplexValue> {
    let mut pts = Vec::with_capacity(n as usize);
    let mut w = z;
    for _ in 0..n {
        pts.push(w);
        w = w * w + c;
    }
    pts
}

/// Seed for the attracting cycle of period `n`: the critical orbit after
/// `50·n` steps.
pub fn attracting_seed(c: ComplexValue, n: u32) -> ComplexValue {
    critical_orbit_point(c, 50 * n as u64)
}

/// Newton on `g(z) = p_c^n(z) − z`, returning the raw root near `seed`.
///
/// No tie-breaking or exactness check is applied.
pub fn newton_cycle_point(
    c: ComplexValue,
    n: u32,
    seed: ComplexValue,
    tol: f64,
) -> Result<ComplexValue> {
    check_period(n)?;
    let mut z = seed;
    let mut residual = f64::INFINITY;
    let mut last_step = f64::INFINITY;
    let mut polish = 0;
    for _ in 0..MAX_NEWTON_STEPS {
        let jet = iterate_jet(c, z, n as u64)?;
        let g = jet.z - z;
        residual = g.norm();
        let dg = jet.dz_dz0 - 1.0;
        if residual < tol {
            // a few polishing steps while they keep shrinking
            if polish >= 3 || dg.norm() == 0.0 {
                return Ok(z);
            }
            let step = g / dg;
            if step.norm() >= last_step {
                return Ok(z);
            }
            last_step = step.norm();
            z -= step;
            polish += 1;
            continue;
        }
        if dg.norm() == 0.0 {
            break;
        }
        let step = g / dg;
        last_step = step.norm();
        z -= step;
        if !(z.re.is_finite() && z.im.is_finite()) {
            break;
        }
    }
    if residual < tol {
        return Ok(z);
    }
    Err(Error::NonConvergence {
        op: "periodic orbit",
        steps: MAX_NEWTON_STEPS,
        residual,
    })
}

/// Converged orbit of exact period `n` reached by Newton from `seed`.
///
/// The reported point is the orbit point of smallest modulus, ties broken by
/// larger real part, then larger imaginary part.
pub fn find_periodic_orbit(
    c: ComplexValue,
    n: u32,
    seed: ComplexValue,
    tol: f64,
) -> Result<PeriodicOrbit> {
    let z = newton_cycle_point(c, n, seed, tol)?;
    verify_exact_period(c, z, n)?;
    let point = canonical_point(&orbit_points(c, z, n));
    build_orbit(c, n, point)
}

/// Assemble a [`PeriodicOrbit`] for a point already known to be periodic.
pub fn build_orbit(c: ComplexValue, n: u32, point: ComplexValue) -> Result<PeriodicOrbit> {
    let jet = iterate_jet(c, point, n as u64)?;
    Ok(PeriodicOrbit {
        c,
        period: n,
        point,
        multiplier: jet.dz_dz0,
        residual: (jet.z - point).norm(),
    })
}

/// Fails with `PeriodNotExact` if a proper divisor of `n` also returns `z`.
pub fn verify_exact_period(c: ComplexValue, z: ComplexValue, n: u32) -> Result<()> {
    for d in 1..n {
        if !n.is_multiple_of(d) {
            continue;
        }
        let jet = iterate_jet(c, z, d as u64)?;
        if (jet.z - z).norm() < EXACTNESS_GUARD {
            return Err(Error::PeriodNotExact {
                period: n,
                divisor: d,
            });
        }
    }
    Ok(())
}

/// Deterministic representative of an orbit.
pub fn canonical_point(points: &[ComplexValue]) -> ComplexValue {
    const TIE: f64 = 1e-12;
    let mut best = points[0];
    for &p in &points[1..] {
        let (a, b) = (p.norm(), best.norm());
        let better = if (a - b).abs() > TIE {
            a < b
        } else if (p.re - best.re).abs() > TIE {
            p.re > best.re
        } else {
            p.im > best.im
        };
        if better {
            best = p;
        }
    }
    best
}

/// Multiplier of the period-`n` cycle reached from `seed` and its derivative
/// in `c` by implicit differentiation of `g(z, c) = p_c^n(z) − z`.
pub fn multiplier_map(c: ComplexValue, n: u32, seed: ComplexValue) -> Result<MultiplierSample> {
    let orbit = find_periodic_orbit(c, n, seed, RESIDUAL_TOL)?;
    let (mu, dmu_dc) = multiplier_derivative(c, orbit.point, n)?;
    Ok(MultiplierSample { c, n, mu, dmu_dc })
}

/// `(μ, dμ/dc)` at a periodic point `z` of period `n`.
///
/// `dz*/dc = −(∂g/∂c)/(∂g/∂z)` and `dμ/dc = ∂μ/∂c + (∂μ/∂z)·dz*/dc`, with the
/// second partials taken from [`iterate_second_order`].
pub fn multiplier_derivative(
    c: ComplexValue,
    z: ComplexValue,
    n: u32,
) -> Result<(ComplexValue, ComplexValue)> {
    let jet = iterate_second_order(c, z, n as u64)?;
    let dg_dz = jet.dz_dz0 - 1.0;
    if dg_dz.norm() < IMPLICIT_GUARD {
        return Err(Error::SingularImplicit(dg_dz.norm()));
    }
    let dz_star = -jet.dz_dc / dg_dz;
    Ok((jet.dz_dz0, jet.d2z_dz0dc + jet.d2z_dz0 * dz_star))
}

fn check_period(n: u32) -> Result<()> {
    if n == 0 || n > MAX_PERIOD {
        return Err(Error::pre(format!("period {n} outside 1..={MAX_PERIOD}")));
    }
    Ok(())
}
