//! Parabolic parameters: location, the scaling constant `τ`, splitting of the
//! parabolic cycle under perturbation, holomorphic indices and lifted phases.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{critical_orbit_point, iterate_jet, iterate_second_order, ComplexValue};
use crate::error::{Error, Result};
use crate::orbits::{
    build_orbit, canonical_point, multiplier_derivative, newton_cycle_point, orbit_points,
    verify_exact_period, PeriodicOrbit, RESIDUAL_TOL,
};

const LOCATE_TOL: f64 = 1e-12;
const LOCATE_MAX_STEPS: u32 = 100;
/// Internal-ray levels `|μ| = 1 − 2^{−j}` used for the limit of `μ'_{qn}`.
const RAY_LEVELS: [i32; 2] = [8, 9];
/// `λ = √(c − c₀)` levels `2^{−j}` for the primitive chart derivative.
const CHART_LEVELS: [i32; 2] = [8, 9];

/// Reduced rotation number `p/q`, `q ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RotationNumber {
    p: i64,
    q: u32,
}

impl RotationNumber {
    pub fn new(p: i64, q: u32) -> Result<Self> {
        if q == 0 {
            return Err(Error::pre("rotation denominator must be positive"));
        }
        if gcd(p.unsigned_abs(), q as u64) != 1 {
            return Err(Error::pre(format!("gcd({p}, {q}) != 1")));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// `e^{2πi p/q}`
    pub fn root_of_unity(&self) -> ComplexValue {
        let turns = (self.p.rem_euclid(self.q as i64)) as f64 / self.q as f64;
        ComplexValue::from_polar(1.0, 2.0 * PI * turns)
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Root of the `p/q` bulb on the main cardioid: `c = λ/2 − λ²/4`.
pub fn cardioid_root(rot: RotationNumber) -> ComplexValue {
    let lambda = rot.root_of_unity();
    lambda / 2.0 - lambda * lambda / 4.0
}

/// Root of the `p/q` bulb on the period-2 disk: `c = −1 + λ/4`.
pub fn period_two_root(rot: RotationNumber) -> ComplexValue {
    rot.root_of_unity() / 4.0 - 1.0
}

/// A parabolic parameter with its periods and scaling constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BifurcationSite {
    pub c0: ComplexValue,
    /// Period of the parabolic cycle.
    pub n: u32,
    /// Rotation order; `q = 1` for primitive sites.
    pub q: u32,
    pub p: i64,
    /// `e^{2πi p/q}`
    pub lambda: ComplexValue,
    /// Parabolic periodic point (canonical orbit representative).
    pub z0: ComplexValue,
    /// `μ'_{qn}(c₀)`; for primitive sites the derivative in `λ = √(c − c₀)`.
    pub dmu_qn: ComplexValue,
    /// `|μ'_{qn}(c₀)| / (2qn)`
    pub tau: f64,
}

impl BifurcationSite {
    pub fn qn(&self) -> u32 {
        self.q * self.n
    }

    pub fn is_primitive(&self) -> bool {
        self.q == 1
    }
}

/// Newton in `(c, z)` on `(p_c^n(z) − z, (p_c^n)'(z) − target)`.
pub fn solve_cycle_with_multiplier(
    n: u32,
    target: ComplexValue,
    seed_c: ComplexValue,
    seed_z: ComplexValue,
) -> Result<(ComplexValue, ComplexValue)> {
    let (mut c, mut z) = (seed_c, seed_z);
    let mut residual = f64::INFINITY;
    let mut polish = 0;
    for _ in 0..LOCATE_MAX_STEPS {
        let j = iterate_second_order(c, z, n as u64)?;
        let f1 = j.z - z;
        let f2 = j.dz_dz0 - target;
        residual = f1.norm().max(f2.norm());
        if residual < LOCATE_TOL {
            if polish >= 2 {
                return Ok((c, z));
            }
            polish += 1;
        }
        let a = j.dz_dz0 - 1.0;
        let b = j.dz_dc;
        let det = a * j.d2z_dz0dc - b * j.d2z_dz0;
        if !(det.norm() > 0.0) || !det.is_finite() {
            return Err(Error::JacobianSingular {
                op: "cycle with multiplier",
                det: det.norm(),
            });
        }
        let dz = (f1 * j.d2z_dz0dc - b * f2) / det;
        let dc = (a * f2 - j.d2z_dz0 * f1) / det;
        z -= dz;
        c -= dc;
        if !(z.is_finite() && c.is_finite()) {
            break;
        }
    }
    if residual < LOCATE_TOL {
        return Ok((c, z));
    }
    Err(Error::NonConvergence {
        op: "cycle with multiplier",
        steps: LOCATE_MAX_STEPS,
        residual,
    })
}

/// Satellite bifurcation from period `n` to period `qn` with rotation `p/q`.
pub fn locate_satellite(
    n: u32,
    rot: RotationNumber,
    seed_c: ComplexValue,
    seed_z: ComplexValue,
) -> Result<BifurcationSite> {
    if rot.q() < 2 {
        return Err(Error::pre("satellite sites need q >= 2"));
    }
    let lambda = rot.root_of_unity();
    let (c0, z) = solve_cycle_with_multiplier(n, lambda, seed_c, seed_z)?;
    verify_exact_period(c0, z, n)?;
    let z0 = canonical_point(&orbit_points(c0, z, n));
    let dmu_qn = internal_ray_limit(c0, z0, n, rot.q(), lambda)?;
    let qn = rot.q() * n;
    Ok(BifurcationSite {
        c0,
        n,
        q: rot.q(),
        p: rot.p(),
        lambda,
        z0,
        dmu_qn,
        tau: dmu_qn.norm() / (2.0 * qn as f64),
    })
}

/// Point on the internal ray of angle 0 of the period-`qn` component born at
/// `c0`, where `μ_{qn} = radius`. Returns `(c, z, μ'_{qn}(c))`.
pub fn internal_ray_point(
    c0: ComplexValue,
    z0: ComplexValue,
    n: u32,
    q: u32,
    lambda: ComplexValue,
    radius: f64,
) -> Result<(ComplexValue, ComplexValue, ComplexValue)> {
    let qn = q * n;
    // first-order guess from μ'_{qn} ≈ −q²·conj(λ)·μ'_n
    let (_, dmu_n) = multiplier_derivative(c0, z0, n)?;
    let slope = -((q * q) as f64) * lambda.conj() * dmu_n;
    let c_seed = c0 + (radius - 1.0) / slope;
    let settle = 64 * qn as u64 * (1.0 / (1.0 - radius)).ceil() as u64;
    let mut w = critical_orbit_point(c_seed, settle);
    let mut z_seed = w;
    for _ in 0..qn {
        w = w * w + c_seed;
        if (w - z0).norm() < (z_seed - z0).norm() {
            z_seed = w;
        }
    }
    let (c, z) = solve_cycle_with_multiplier(qn, ComplexValue::new(radius, 0.0), c_seed, z_seed)?;
    verify_exact_period(c, z, qn)?;
    let (_, dmu) = multiplier_derivative(c, z, qn)?;
    Ok((c, z, dmu))
}

fn internal_ray_limit(
    c0: ComplexValue,
    z0: ComplexValue,
    n: u32,
    q: u32,
    lambda: ComplexValue,
) -> Result<ComplexValue> {
    let mut samples = Vec::with_capacity(RAY_LEVELS.len());
    for j in RAY_LEVELS {
        let (_, _, dmu) = internal_ray_point(c0, z0, n, q, lambda, 1.0 - 2f64.powi(-j))?;
        samples.push(dmu);
    }
    // D(h) = D₀ + a·h + O(h²), h halved between levels
    Ok(2.0 * samples[1] - samples[0])
}

/// Locates the parabolic parameter of period `n` and rotation number `p/q`
/// near `seed_c`; `q = 1` asks for a primitive root.
///
/// Without a seed, `n = 1` starts from the cardioid roots and `n = 2` from
/// the roots on the period-2 disk. The cycle seed is the critical orbit.
pub fn locate(
    n: u32,
    rot: RotationNumber,
    seed_c: Option<ComplexValue>,
) -> Result<BifurcationSite> {
    let seed_c = match (seed_c, n, rot.q()) {
        (Some(c), _, _) => c,
        (None, 1, _) => cardioid_root(rot),
        (None, 2, q) if q >= 2 => period_two_root(rot),
        _ => {
            return Err(Error::pre(format!(
                "period {n} with rotation number {}/{} needs a seed parameter",
                rot.p(),
                rot.q()
            )))
        }
    };
    let seed_z = if n == 1 {
        rot.root_of_unity() / 2.0
    } else {
        critical_orbit_point(seed_c, 5000 * n as u64)
    };
    if rot.q() == 1 {
        locate_primitive(n, seed_c, seed_z)
    } else {
        locate_satellite(n, rot, seed_c, seed_z)
    }
}

/// Primitive parabolic parameter of period `n` (multiplier `+1`).
pub fn locate_primitive(
    n: u32,
    seed_c: ComplexValue,
    seed_z: ComplexValue,
) -> Result<BifurcationSite> {
    let one = ComplexValue::new(1.0, 0.0);
    let (c0, z) = solve_cycle_with_multiplier(n, one, seed_c, seed_z)?;
    verify_exact_period(c0, z, n)?;
    let z0 = canonical_point(&orbit_points(c0, z, n));
    let dmu = chart_derivative(c0, z0, n)?;
    Ok(BifurcationSite {
        c0,
        n,
        q: 1,
        p: 0,
        lambda: one,
        z0,
        dmu_qn: dmu,
        tau: dmu.norm() / (2.0 * n as f64),
    })
}

/// Offsets of the two period-`n` points near a double parabolic point `z0`
/// for `c = c₀ + λ²`: `±λ·√(−2 (∂g/∂c)/(∂²g/∂z²))`.
fn primitive_split_offset(c0: ComplexValue, z0: ComplexValue, n: u32) -> Result<ComplexValue> {
    let j = iterate_second_order(c0, z0, n as u64)?;
    if j.d2z_dz0.norm() == 0.0 {
        return Err(Error::JacobianSingular {
            op: "primitive split",
            det: 0.0,
        });
    }
    Ok((-2.0 * j.dz_dc / j.d2z_dz0).sqrt())
}

/// `dμ/dλ` at `λ = 0` for the chart `λ = √(c − c₀)`, from the odd part
/// `(μ_A − μ_B)/(2λ)` of the two colliding cycles, extrapolated in `λ²`.
/// The sign is normalised to `Im ≥ 0`.
fn chart_derivative(c0: ComplexValue, z0: ComplexValue, n: u32) -> Result<ComplexValue> {
    let shape = primitive_split_offset(c0, z0, n)?;
    let mut odd = Vec::with_capacity(CHART_LEVELS.len());
    for j in CHART_LEVELS {
        let lam = 2f64.powi(-j);
        let c = c0 + lam * lam;
        let za = newton_cycle_point(c, n, z0 + lam * shape, RESIDUAL_TOL)?;
        let zb = newton_cycle_point(c, n, z0 - lam * shape, RESIDUAL_TOL)?;
        if (za - zb).norm() < 1e-3 * lam * shape.norm() {
            return Err(Error::SeedCollision {
                re: za.re,
                im: za.im,
            });
        }
        let mu_a = iterate_jet(c, za, n as u64)?.dz_dz0;
        let mu_b = iterate_jet(c, zb, n as u64)?.dz_dz0;
        odd.push((mu_a - mu_b) / (2.0 * lam));
    }
    // odd part is even in λ: a(λ) = a₀ + b·λ² + …
    let d = (4.0 * odd[1] - odd[0]) / 3.0;
    Ok(if d.im < 0.0 || (d.im == 0.0 && d.re < 0.0) {
        -d
    } else {
        d
    })
}

/// The fixed points of `p^{qn}` near `z₀` after perturbing `c₀` by `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitFixedPoints {
    pub alpha: ComplexValue,
    /// Survivor of period `n` (for primitive sites, one of the two cycles).
    pub sigma: PeriodicOrbit,
    /// The `q` points of the period-`qn` cycle near `z₀`.
    pub varsigma: Vec<PeriodicOrbit>,
    /// `+1` iff every `ς_k` has positive imaginary index.
    pub ray_sign: i8,
}

/// Split the parabolic cycle at `c₀ + alpha` into its `q + 1` fixed points of
/// `p^{qn}` near `z₀`.
pub fn split_fixed_points(site: &BifurcationSite, alpha: ComplexValue) -> Result<SplitFixedPoints> {
    let a = alpha.norm();
    if !(a > 0.0) {
        return Err(Error::pre("alpha must be nonzero"));
    }
    if a > 1e-2 {
        return Err(Error::pre(format!("|alpha| = {a} is not small (<= 1e-2)")));
    }
    let c = site.c0 + alpha;
    let (sigma, varsigma) = if site.is_primitive() {
        let shape = primitive_split_offset(site.c0, site.z0, site.n)?;
        let off = alpha.sqrt() * shape;
        let za = newton_cycle_point(c, site.n, site.z0 + off, RESIDUAL_TOL)?;
        let zb = newton_cycle_point(c, site.n, site.z0 - off, RESIDUAL_TOL)?;
        if (za - zb).norm() < 1e-3 * off.norm() {
            return Err(Error::SeedCollision {
                re: za.re,
                im: za.im,
            });
        }
        verify_exact_period(c, za, site.n)?;
        verify_exact_period(c, zb, site.n)?;
        (
            build_orbit(c, site.n, za)?,
            vec![build_orbit(c, site.n, zb)?],
        )
    } else {
        let zs = newton_cycle_point(c, site.n, site.z0, RESIDUAL_TOL)?;
        verify_exact_period(c, zs, site.n)?;
        let sigma = build_orbit(c, site.n, zs)?;
        (sigma, satellite_varsigma(site, c, zs)?)
    };
    let all_multipliers =
        std::iter::once(sigma.multiplier).chain(varsigma.iter().map(|o| o.multiplier));
    for m in all_multipliers {
        if m.norm() < 1.0 {
            return Err(Error::pre(format!(
                "c0 + alpha lies in a hyperbolic component (|mu| = {})",
                m.norm()
            )));
        }
    }
    let ray_sign = if varsigma.iter().all(|o| {
        holomorphic_index(o.multiplier)
            .map(|i| i.im > 0.0)
            .unwrap_or(false)
    }) {
        1
    } else {
        -1
    };
    Ok(SplitFixedPoints {
        alpha,
        sigma,
        varsigma,
        ray_sign,
    })
}

fn satellite_varsigma(
    site: &BifurcationSite,
    c: ComplexValue,
    sigma: ComplexValue,
) -> Result<Vec<PeriodicOrbit>> {
    let q = site.q as usize;
    let qn = site.qn();
    let rho = (c - site.c0).norm().powf(1.0 / site.q as f64);
    let separation = 1e-3 * rho;
    let mut found: Vec<ComplexValue> = Vec::with_capacity(q);
    let mut collision = None;
    let phases = 8;
    'outer: for s in 0..phases {
        let phi0 = 2.0 * PI * s as f64 / (phases * site.q) as f64;
        for k in 0..q {
            let angle = 2.0 * PI * k as f64 / q as f64 + phi0;
            let seed = site.z0 + ComplexValue::from_polar(rho, angle);
            let Ok(z) = newton_cycle_point(c, qn, seed, RESIDUAL_TOL) else {
                continue;
            };
            if (z - site.z0).norm() > 10.0 * rho || (z - sigma).norm() < separation {
                continue;
            }
            if verify_exact_period(c, z, qn).is_err() {
                continue;
            }
            if found.iter().any(|f| (f - z).norm() < separation) {
                collision = Some(z);
                continue;
            }
            found.push(z);
            if found.len() == q {
                break 'outer;
            }
        }
    }
    if found.len() < q {
        let z = collision.unwrap_or(site.z0);
        return Err(Error::SeedCollision { re: z.re, im: z.im });
    }
    // order by angle around z₀ for reproducible labelling
    found.sort_by(|a, b| {
        let ta = (a - site.z0).arg();
        let tb = (b - site.z0).arg();
        ta.total_cmp(&tb)
    });
    found.into_iter().map(|z| build_orbit(c, qn, z)).collect()
}

/// Holomorphic index `1/(1 − m)` of a simple fixed point with multiplier `m`.
pub fn holomorphic_index(multiplier: ComplexValue) -> Result<ComplexValue> {
    let d = ComplexValue::new(1.0, 0.0) - multiplier;
    if d.norm() == 0.0 {
        return Err(Error::MultiplierOne);
    }
    let v = d.inv();
    if !v.is_finite() {
        return Err(Error::MultiplierOne);
    }
    Ok(v)
}

/// `−2πi / log m` on the principal branch, `Im log ∈ (−π, π]`.
pub fn jind(multiplier: ComplexValue) -> Result<ComplexValue> {
    if multiplier.norm() == 0.0 || multiplier == ComplexValue::new(1.0, 0.0) {
        return Err(Error::BranchUndefined(format!("{multiplier}")));
    }
    let mut log = multiplier.ln();
    if log.im == -PI {
        log.im = PI;
    }
    if log.norm() == 0.0 {
        return Err(Error::BranchUndefined(format!("{multiplier}")));
    }
    Ok(ComplexValue::new(0.0, -2.0 * PI) / log)
}

/// Predicted lifted phase `−2πi / (μ'_{qn}(c₀)·α)`.
pub fn lifted_phase_prediction(
    site: &BifurcationSite,
    alpha: ComplexValue,
) -> Result<ComplexValue> {
    if alpha.norm() == 0.0 {
        return Err(Error::pre("alpha must be nonzero"));
    }
    Ok(ComplexValue::new(0.0, -2.0 * PI) / (site.dmu_qn * alpha))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellBehavedReport {
    /// `ι(σ)` followed by `ι(ς_k)`.
    pub indices: Vec<ComplexValue>,
    /// Minimum of `|Im Σ_{X} ι|` over proper nonempty subsets `X`.
    pub min_subset_im: f64,
    /// Sum of all indices, bounded as `α → 0`.
    pub total: ComplexValue,
    pub ray_sign: i8,
}

/// Index diagnostics for a split: all indices, the subset minimum of
/// `|Im Σ ι|`, and the total.
pub fn wellbehaved_diagnostic(split: &SplitFixedPoints) -> Result<WellBehavedReport> {
    let q = split.varsigma.len() as u32;
    // σ has period n; as a fixed point of p^{qn} its multiplier is μ_n^q
    let sigma_mult = split.sigma.multiplier.powu(
        if split.varsigma.first().map(|v| v.period) == Some(split.sigma.period) {
            1
        } else {
            q
        },
    );
    let mut indices = vec![holomorphic_index(sigma_mult)?];
    for v in &split.varsigma {
        indices.push(holomorphic_index(v.multiplier)?);
    }
    let m = indices.len();
    let full = (1u32 << m) - 1;
    let mut min_im = f64::INFINITY;
    for mask in 1..full {
        let s: ComplexValue = (0..m)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| indices[i])
            .sum();
        min_im = min_im.min(s.im.abs());
    }
    let total = indices.iter().sum();
    Ok(WellBehavedReport {
        indices,
        min_subset_im: min_im,
        total,
        ray_sign: split.ray_sign,
    })
}

/// `|μ'_n(c₀) + μ'_{qn}(c₀)/(q²·conj(μ_n(c₀)))|`, zero when the two
/// multiplier maps are consistent at a satellite root.
pub fn guckenheimer_check(site: &BifurcationSite) -> Result<f64> {
    if site.is_primitive() {
        return Err(Error::pre("guckenheimer check needs a satellite site"));
    }
    let (mu_n, dmu_n) = multiplier_derivative(site.c0, site.z0, site.n)?;
    let q2 = (site.q * site.q) as f64;
    Ok((dmu_n + site.dmu_qn / (q2 * mu_n.conj())).norm())
}
