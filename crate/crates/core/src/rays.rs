//! External parameter rays of the Mandelbrot set.
//!
//! A point at potential `G` on the ray of angle `θ` satisfies
//! `Φ_M(c) = e^{G + 2πiθ}`, and for depth `m` with `2^m·G` large,
//! `z_m(c) ≈ Φ_M(c)^{2^{m−1}}` (with `z_1 = c`). The tracer solves
//! `log z_m(c) = 2^{m−1}·(G + 2πiθ)`
//! by Newton, stepping the potential down geometrically. Potentials near a
//! parabolic landing point underflow binary64 quickly, so they are carried as
//! base-2 logarithms ([`Potential`]).

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::dynamics::{escape_with_derivative, ComplexValue, DEFAULT_MAX_ITER};
use crate::error::{Error, Result};
use crate::parabolic::{gcd, BifurcationSite};

/// Escape radius for potential and argument evaluation.
pub const BOETTCHER_RADIUS: f64 = 1e6;
/// Steps per halving of the potential away from parabolic points.
pub const DEFAULT_STEPS: u32 = 8;
/// Steps per halving used when approaching a parabolic landing point.
pub const PARABOLIC_STEPS: u32 = 24;
/// Largest angle mismatch, in turns, accepted from a Newton solve.
pub const ANGLE_TOLERANCE: f64 = 1.0 / 1024.0;

const NEWTON_MAX: u32 = 64;
const NEWTON_TOL: f64 = 1e-12;
/// `log₂ ln|z_m|` on integer levels; the scaled log-radius lives in `[16, 32)`.
const LEVEL_LOG2_RADIUS: i64 = 4;
/// Highest potential the tracer starts from (`|c| ≈ e^8`).
const START_LEVEL: i64 = -3;
/// Integer level from which a trace may jump ahead along the ray.
const HOP_MIN_LEVEL: i64 = 1024;

/// External angle `num/den` in turns, reduced, `0 ≤ num < den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExternalAngle {
    num: u64,
    den: u64,
}

impl ExternalAngle {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::pre("angle denominator must be positive"));
        }
        let num = num % den;
        let g = gcd(num, den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn turns(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `2^k·θ mod 1`, exactly.
    pub fn doubled(&self, k: u64) -> ExternalAngle {
        let num = (self.num as u128 * pow2_mod(k, self.den) as u128 % self.den as u128) as u64;
        ExternalAngle { num, den: self.den }
    }

    /// The complex-conjugate ray `−θ`.
    pub fn conjugate(&self) -> ExternalAngle {
        ExternalAngle {
            num: (self.den - self.num) % self.den,
            den: self.den,
        }
    }

    /// Period under doubling, `None` for strictly preperiodic angles.
    pub fn period(&self) -> Option<u32> {
        if self.num == 0 {
            return Some(1);
        }
        if self.den.is_multiple_of(2) {
            return None;
        }
        let mut x = self.doubled(1);
        for p in 1..=64u32 {
            if x == *self {
                return Some(p);
            }
            x = x.doubled(1);
        }
        None
    }

    /// Angle in radians in `(−π, π]`, computed symmetrically so that
    /// conjugate angles give exactly negated values.
    fn radians(&self) -> f64 {
        let n = self.num as i128;
        let d = self.den as i128;
        let signed = if 2 * n > d { n - d } else { n };
        2.0 * PI * (signed as f64 / d as f64)
    }
}

impl fmt::Display for ExternalAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn pow2_mod(mut k: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let m = m as u128;
    let mut base = 2u128 % m;
    let mut acc = 1u128;
    while k > 0 {
        if k & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        k >>= 1;
    }
    acc as u64
}

/// Green's function value `G(c) = log|Φ_M(c)|`, stored as `log₂ G`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Potential {
    log2: f64,
}

impl Potential {
    pub fn from_value(g: f64) -> Result<Self> {
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::pre(format!("potential must be positive, got {g}")));
        }
        Ok(Self { log2: g.log2() })
    }

    pub fn from_log2(log2: f64) -> Self {
        Self { log2 }
    }

    pub fn log2(&self) -> f64 {
        self.log2
    }

    /// The value as binary64; underflows to zero below about `2^{−1074}`.
    pub fn value(&self) -> f64 {
        self.log2.exp2()
    }

    /// Scientific notation that stays exact-looking past binary64 underflow.
    pub fn to_scientific(&self) -> String {
        if self.log2 > -1000.0 {
            return format!("{:e}", self.value());
        }
        let log10 = self.log2 * std::f64::consts::LOG10_2;
        let mut exp = log10.floor();
        let mut mant = 10f64.powf(log10 - exp);
        if mant >= 9.9999999999995 {
            mant = 1.0;
            exp += 1.0;
        }
        format!("{mant:.12}e{}", exp as i64)
    }

    /// Continuous depth `u = −log₂ G` used to parameterise the tracer.
    fn level(&self) -> f64 {
        -self.log2
    }
}

/// Output of [`boettcher`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoettcherValue {
    pub potential: Potential,
    /// `arg Φ_M(c)` in turns, `[0, 1)`.
    pub argument: f64,
    /// `d log Φ_M / dc ≈ 2^{1−n} z_n'/z_n`; underflows for deep points.
    pub derivative: ComplexValue,
    /// Iteration at which `|z_n| > 10⁶`.
    pub depth: u64,
}

/// Potential, argument and derivative of the Riemann map of `C∖M` at `c`.
///
/// The argument is unwound along the orbit,
/// `arg c + Σ_{j≥1} 2^{−j} arg(1 + c/z_j²)`, which is exact when `|c| > 2` and
/// a heuristic closer to `M`.
pub fn boettcher(c: ComplexValue, depth: u64) -> Result<BoettcherValue> {
    let r2 = BOETTCHER_RADIUS * BOETTCHER_RADIUS;
    let mut z = c;
    let mut dz = ComplexValue::new(1.0, 0.0);
    let mut arg = c.arg();
    let mut scale = 1.0f64;
    let mut n = 1u64;
    while z.norm_sqr() <= r2 {
        if n >= depth {
            return Err(Error::InsideOrUndecided {
                re: c.re,
                im: c.im,
                depth,
            });
        }
        scale *= 0.5;
        let next = z * z + c;
        arg += scale * (next / (z * z)).arg();
        dz = 2.0 * z * dz + 1.0;
        z = next;
        n += 1;
    }
    let log2_g = z.norm().ln().log2() - (n - 1) as f64;
    let turns = (arg / (2.0 * PI)).rem_euclid(1.0);
    Ok(BoettcherValue {
        potential: Potential::from_log2(log2_g),
        argument: if turns >= 1.0 { 0.0 } else { turns },
        derivative: dz / z * (-((n - 1) as f64)).exp2(),
        depth: n,
    })
}

/// `2^{k−1}·arg Φ_M(c) mod 1` at the first `k` where the dynamical Böttcher
/// coordinate is given exactly by its product formula.
///
/// Returns `(k, turns)`. The product uses principal logarithms of
/// `1 + c/z_j²`, valid once `|z_j|` exceeds `(1 + √(1 + 4|c|))/2`.
pub fn angle_residue(c: ComplexValue, max_iter: u64) -> Result<(u64, f64)> {
    let r = (1.0 + (1.0 + 4.0 * c.norm()).sqrt()) / 2.0 * (1.0 + 1e-9);
    let mut z = ComplexValue::new(0.0, 0.0);
    let mut k = 0u64;
    loop {
        z = z * z + c;
        k += 1;
        if z.norm() > r {
            break;
        }
        if k >= max_iter {
            return Err(Error::InsideOrUndecided {
                re: c.re,
                im: c.im,
                depth: max_iter,
            });
        }
    }
    let mut arg = z.arg();
    let mut w = z;
    let mut scale = 1.0;
    while (c / (w * w)).norm() > 1e-18 && scale > 1e-300 {
        scale *= 0.5;
        arg += scale * (ComplexValue::new(1.0, 0.0) + c / (w * w)).arg();
        w = w * w + c;
    }
    Ok((k, (arg / (2.0 * PI)).rem_euclid(1.0)))
}

fn turn_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayPoint {
    pub c: ComplexValue,
    pub theta: ExternalAngle,
    pub potential: Potential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayTrace {
    pub theta: ExternalAngle,
    /// Ordered by decreasing potential.
    pub points: Vec<RayPoint>,
    pub landing_estimate: ComplexValue,
}

impl RayTrace {
    /// CSV with columns `theta_num,theta_den,potential,re,im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "theta_num,theta_den,potential,re,im")?;
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{:e},{:e}",
                p.theta.num,
                p.theta.den,
                p.potential.to_scientific(),
                p.c.re,
                p.c.im
            )?;
        }
        Ok(())
    }
}

/// Depth `m` and scaled log-radius `s = 2^{m−1}·G` for the continuous level `u`.
fn level_target(u: f64) -> (u64, f64) {
    let m = (u + LEVEL_LOG2_RADIUS as f64 + 1.0).ceil().max(1.0);
    ((m as u64), (m - 1.0 - u).exp2())
}

fn wrap_pi(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Newton solve for the point of ray `theta` at continuous level `u`.
fn solve_level(theta: ExternalAngle, u: f64, guess: ComplexValue) -> Result<ComplexValue> {
    let (m, s) = level_target(u);
    let target_arg = theta.doubled(m - 1).radians();
    let mut c = guess;
    let mut last = f64::INFINITY;
    let mut smallest_step = f64::INFINITY;
    let mut converged = false;
    for _ in 0..NEWTON_MAX {
        let (f, df) = log_orbit(c, m);
        let f = ComplexValue::new(f.re - s, wrap_pi(f.im - target_arg));
        last = f.norm();
        if !(df.norm() > 0.0) || !df.is_finite() || !f.is_finite() {
            break;
        }
        // Newton in log c: exact in the far field where log z_m ≈ 2^{m−1} log c
        let step = f / df;
        let next = c * (-step / c).exp();
        let step = (c - next).norm();
        c = next;
        smallest_step = smallest_step.min(step / c.norm());
        // deep orbits near parabolic points lose digits of log z_m to
        // rounding, so stagnation of c also counts as convergence
        if last < NEWTON_TOL || step <= 1e-14 * c.norm() {
            converged = true;
            break;
        }
    }
    let converged = converged || (last < 1e-3 && smallest_step <= 1e-12);
    if !converged || !c.is_finite() {
        return Err(Error::NewtonLost {
            depth: m,
            mismatch: last / (2.0 * PI),
        });
    }
    // the escape-depth Böttcher angle pins the ray among its 2^m siblings
    let (k, turns) = angle_residue(c, m + 64)?;
    let mismatch = turn_distance(turns, theta.doubled(k - 1).turns());
    if mismatch > ANGLE_TOLERANCE {
        return Err(Error::NewtonLost { depth: m, mismatch });
    }
    Ok(c)
}

/// `(log z_m(c), d log z_m/dc)`; orbits that leave early are continued with
/// the Böttcher scaling `log z_m ≈ 2^{m−k} log z_k`.
fn log_orbit(c: ComplexValue, m: u64) -> (ComplexValue, ComplexValue) {
    let mut z = ComplexValue::new(0.0, 0.0);
    let mut dz = ComplexValue::new(0.0, 0.0);
    for k in 1..=m {
        dz = 2.0 * z * dz + 1.0;
        z = z * z + c;
        if z.norm_sqr() > 1e200 && k < m {
            let scale = ((m - k) as f64).exp2();
            return (z.ln() * scale, dz / z * scale);
        }
    }
    (z.ln(), dz / z)
}

/// Incremental tracer along one ray.
#[derive(Clone)]
struct RayWalker {
    theta: ExternalAngle,
    steps: u32,
    /// Current level is `index / steps`.
    index: i64,
    c: ComplexValue,
    prev: Option<ComplexValue>,
}

impl RayWalker {
    fn start(theta: ExternalAngle, steps: u32) -> Result<Self> {
        if steps == 0 {
            return Err(Error::pre("steps per halving must be positive"));
        }
        let u0 = START_LEVEL as f64;
        let guess = ComplexValue::from_polar((-u0).exp2().exp(), theta.radians());
        let c = solve_level(theta, u0, guess)?;
        Ok(Self {
            theta,
            steps,
            index: START_LEVEL * steps as i64,
            c,
            prev: None,
        })
    }

    fn level(&self) -> f64 {
        self.index as f64 / self.steps as f64
    }

    fn potential(&self) -> Potential {
        Potential::from_log2(-self.level())
    }

    fn point(&self) -> RayPoint {
        RayPoint {
            c: self.c,
            theta: self.theta,
            potential: self.potential(),
        }
    }

    fn step(&mut self) -> Result<()> {
        let guess = match self.prev {
            Some(p) => self.c + (self.c - p),
            None => self.c,
        };
        let next_index = self.index + 1;
        let u = next_index as f64 / self.steps as f64;
        let c =
            solve_level(self.theta, u, guess).or_else(|_| solve_level(self.theta, u, self.c))?;
        self.prev = Some(self.c);
        self.c = c;
        self.index = next_index;
        Ok(())
    }

    fn integer_level(&self) -> Option<i64> {
        let steps = self.steps as i64;
        (self.index % steps == 0).then_some(self.index / steps)
    }

    fn jump_to(&mut self, level: i64, c: ComplexValue) {
        self.index = level * self.steps as i64;
        self.c = c;
        self.prev = None;
    }
}

/// Jumps along a periodic ray near its landing point.
///
/// In the chart `w` the ray points on levels `L ≡ 0 (mod period)` follow
/// `w(L) ≈ A + a·L + b·ln L` (the logarithm comes from the Fatou coordinate).
/// The three constants are fitted through samples at widely separated
/// levels, so rounding noise in individual points barely moves the slope.
struct Hopper {
    chart: Chart,
    period: i64,
    /// `(level, w)` with `level ≡ 0 (mod period)`, increasing.
    samples: Vec<(i64, ComplexValue)>,
    resume_at: i64,
}

impl Hopper {
    const MIN_PERIODS: i64 = 8;

    fn new(chart: Chart, period: i64) -> Self {
        Self {
            chart,
            period,
            samples: Vec::new(),
            resume_at: HOP_MIN_LEVEL,
        }
    }

    fn observe(&mut self, walker: &RayWalker, force: bool) {
        let Some(level) = walker.integer_level() else {
            return;
        };
        if level <= 0 || level % self.period != 0 || (!force && level % (32 * self.period) != 0) {
            return;
        }
        if self.samples.last().is_none_or(|&(l, _)| l < level) {
            self.samples.push((level, self.chart.to_w(walker.c)));
        }
    }

    fn sample_near(&self, level: f64) -> Option<(i64, ComplexValue)> {
        self.samples
            .iter()
            .copied()
            .rev()
            .find(|&(l, _)| l as f64 <= level)
    }

    /// Fitted `(a, b)` of the model through the latest sample.
    fn fit(&self) -> Option<(ComplexValue, ComplexValue)> {
        let &(l2, w2) = self.samples.last()?;
        let (l1, w1) = self.sample_near(l2 as f64 / 2.0)?;
        let (l0, w0) = self.sample_near(l1 as f64 / 2.0)?;
        if l0 == l1 || l0 <= 0 {
            return None;
        }
        let (x0, x1, x2) = (l0 as f64, l1 as f64, l2 as f64);
        // divided differences of w against L and ln L
        let s1 = (w2 - w1) / (x2 - x1);
        let s0 = (w1 - w0) / (x1 - x0);
        let g1 = (x2 / x1).ln() / (x2 - x1);
        let g0 = (x1 / x0).ln() / (x1 - x0);
        let b = (s1 - s0) / (g1 - g0);
        let a = s1 - b * g1;
        Some((a, b))
    }

    fn predict(
        &self,
        fit: (ComplexValue, ComplexValue),
        from: (i64, ComplexValue),
        to: i64,
    ) -> ComplexValue {
        let (a, b) = fit;
        let (l, w) = from;
        w + a * (to - l) as f64 + b * (to as f64 / l as f64).ln()
    }

    /// Try to move the walker most of the way to `target` distance in one
    /// jump. Returns whether the walker moved.
    fn try_hop(&mut self, walker: &mut RayWalker, target: f64) -> bool {
        let Some(level) = walker.integer_level() else {
            return false;
        };
        if level < self.resume_at || level % self.period != 0 {
            return false;
        }
        self.observe(walker, true);
        let Some(fit) = self.fit() else {
            return false;
        };
        let from = (level, self.chart.to_w(walker.c));
        let per_period = fit.0 * self.period as f64;
        let w_target = self.chart.to_w(self.chart.c0 + target).norm();
        // |w| grows by about |a|·period per period; stop a few periods short
        let mut k = ((w_target - from.1.norm()) / per_period.norm()).floor() as i64 - 4;
        k = k.min(3 * level / self.period);
        if k < Self::MIN_PERIODS {
            // too close to the target to be worth a jump; not a failure
            return false;
        }
        while k >= Self::MIN_PERIODS {
            let mut trial = walker.clone();
            if self.jump(&mut trial, fit, from, k).is_ok() {
                *walker = trial;
                self.observe(walker, true);
                return true;
            }
            k /= 2;
        }
        self.resume_at = level + (64 * self.period).max(level / 8);
        false
    }

    /// Land `k − 2` periods ahead, then walk two periods so the history the
    /// next jump needs comes from ordinary steps.
    fn jump(
        &self,
        walker: &mut RayWalker,
        fit: (ComplexValue, ComplexValue),
        from: (i64, ComplexValue),
        k: i64,
    ) -> Result<()> {
        let p = self.period;
        let land = from.0 + (k - 2) * p;
        let w_guess = self.predict(fit, from, land);
        let c = solve_level(walker.theta, land as f64, self.chart.to_c(w_guess))?;
        let per_period = (fit.0 * p as f64).norm();
        let miss = (self.chart.to_w(c) - w_guess).norm();
        if miss > 0.1 * per_period {
            return Err(Error::NewtonLost {
                depth: level_target(land as f64).0,
                mismatch: miss / per_period,
            });
        }
        walker.jump_to(land, c);
        for _ in 0..(2 * p * walker.steps as i64) {
            walker.step()?;
        }
        let miss = (self.chart.to_w(walker.c) - self.predict(fit, from, land + 2 * p)).norm();
        if miss > 0.1 * per_period {
            return Err(Error::NewtonLost {
                depth: level_target(walker.level()).0,
                mismatch: miss / per_period,
            });
        }
        Ok(())
    }
}

/// Coordinate in which the ray becomes asymptotically periodic near `c₀`:
/// `w = 1/(c − c₀)` at satellites, `w = 1/√(c − c₀)` at primitive roots.
struct Chart {
    c0: ComplexValue,
    primitive: bool,
}

impl Chart {
    fn to_w(&self, c: ComplexValue) -> ComplexValue {
        let a = c - self.c0;
        if self.primitive {
            a.sqrt().inv()
        } else {
            a.inv()
        }
    }

    fn to_c(&self, w: ComplexValue) -> ComplexValue {
        let a = w.inv();
        self.c0 + if self.primitive { a * a } else { a }
    }
}

/// Trace the ray of angle `theta` from potential `pot_start` down to `pot_end`
/// with `steps_per_halving` Newton solves per halving of the potential.
pub fn trace_ray(
    theta: ExternalAngle,
    pot_start: Potential,
    pot_end: Potential,
    steps_per_halving: u32,
) -> Result<RayTrace> {
    if !(pot_start > pot_end) {
        return Err(Error::pre("pot_start must exceed pot_end"));
    }
    let mut walker = RayWalker::start(theta, steps_per_halving)?;
    let u_start = pot_start.level();
    let u_end = pot_end.level();
    let mut points = Vec::new();
    if walker.level() >= u_start {
        points.push(walker.point());
    }
    while walker.level() < u_end {
        let next = (walker.index + 1) as f64 / walker.steps as f64;
        if next > u_end {
            let c = solve_level(theta, u_end, walker.c)?;
            points.push(RayPoint {
                c,
                theta,
                potential: pot_end,
            });
            break;
        }
        walker.step()?;
        if walker.level() >= u_start {
            points.push(walker.point());
        }
    }
    let landing_estimate = points.last().map(|p| p.c).unwrap_or(walker.c);
    Ok(RayTrace {
        theta,
        points,
        landing_estimate,
    })
}

/// Points `c_k` on the ray `theta` landing at the site with
/// `|c_k − c₀| = 10⁻¹·2^{−k/2}`, `k = 1..=count`.
pub fn approach_sequence(
    site: &BifurcationSite,
    theta: ExternalAngle,
    count: usize,
) -> Result<Vec<ComplexValue>> {
    let distances: Vec<f64> = (1..=count)
        .map(|k| 0.1 * (-(k as f64) / 2.0).exp2())
        .collect();
    approach_points(site, theta, &distances, PARABOLIC_STEPS)
}

/// Ray points at the requested distances from `c₀` (any order), each the
/// first point of the ray, coming in from infinity, at that distance.
/// Distances are matched to a relative error below `10⁻⁹`.
pub fn approach_points(
    site: &BifurcationSite,
    theta: ExternalAngle,
    distances: &[f64],
    steps: u32,
) -> Result<Vec<ComplexValue>> {
    approach_impl(site, theta, distances, steps, true)
}

fn approach_impl(
    site: &BifurcationSite,
    theta: ExternalAngle,
    distances: &[f64],
    steps: u32,
    hops: bool,
) -> Result<Vec<ComplexValue>> {
    if let Some(bad) = distances.iter().find(|d| !(**d > 0.0)) {
        return Err(Error::pre(format!("distance {bad} must be positive")));
    }
    let mut order: Vec<usize> = (0..distances.len()).collect();
    order.sort_by(|&a, &b| distances[b].total_cmp(&distances[a]));
    let mut out = vec![ComplexValue::new(0.0, 0.0); distances.len()];
    if distances.is_empty() {
        return Ok(out);
    }
    let chart = Chart {
        c0: site.c0,
        primitive: site.is_primitive(),
    };
    let mut hopper = theta
        .period()
        .filter(|_| hops)
        .map(|p| Hopper::new(chart, p as i64));
    let mut walker = RayWalker::start(theta, steps)?;
    let dist = |c: ComplexValue| (c - site.c0).norm();
    for idx in order {
        let target = distances[idx];
        while dist(walker.c) > target {
            if let Some(h) = hopper.as_mut() {
                if h.try_hop(&mut walker, target) {
                    continue;
                }
            }
            walker.step()?;
            if let Some(h) = hopper.as_mut() {
                h.observe(&walker, false);
            }
        }
        // bracket [previous, current] in level and bisect on the distance
        let mut hi_u = walker.level();
        let mut hi_c = walker.c;
        let (mut lo_u, mut lo_c) = match walker.prev {
            Some(p) if dist(p) > target => (hi_u - 1.0 / walker.steps as f64, p),
            _ => {
                // a hop can land below the target only if it overshoots; walk
                // back by single levels
                out[idx] = refine_backwards(theta, &dist, target, hi_u, hi_c, walker.steps)?;
                continue;
            }
        };
        if dist(hi_c) == target {
            out[idx] = hi_c;
            continue;
        }
        for _ in 0..200 {
            let (dl, dh) = (dist(lo_c) - target, dist(hi_c) - target);
            // secant in u, safeguarded by bisection
            let mut u = lo_u + (hi_u - lo_u) * dl / (dl - dh);
            if !(u > lo_u && u < hi_u) || !u.is_finite() {
                u = 0.5 * (lo_u + hi_u);
            }
            let t = (u - lo_u) / (hi_u - lo_u);
            let c = solve_level(theta, u, lo_c + (hi_c - lo_c) * t)?;
            let d = dist(c) - target;
            if d.abs() <= 1e-11 * target || hi_u - lo_u < 1e-15 * hi_u.abs().max(1.0) {
                hi_c = c;
                break;
            }
            if d > 0.0 {
                lo_u = u;
                lo_c = c;
            } else {
                hi_u = u;
                hi_c = c;
            }
        }
        out[idx] = hi_c;
    }
    Ok(out)
}

fn refine_backwards(
    theta: ExternalAngle,
    dist: &dyn Fn(ComplexValue) -> f64,
    target: f64,
    hi_u: f64,
    hi_c: ComplexValue,
    steps: u32,
) -> Result<ComplexValue> {
    let h = 1.0 / steps as f64;
    let (mut hi_u, mut hi_c) = (hi_u, hi_c);
    let mut prev = None;
    loop {
        let guess = match prev {
            Some(p) => hi_c + (hi_c - p),
            None => hi_c,
        };
        let c = solve_level(theta, hi_u - h, guess)?;
        if dist(c) > target {
            // bisect inside [hi_u − h, hi_u]
            let (mut lo_u, mut lo_c) = (hi_u - h, c);
            for _ in 0..200 {
                let u = 0.5 * (lo_u + hi_u);
                let m = solve_level(theta, u, 0.5 * (lo_c + hi_c))?;
                let d = dist(m) - target;
                if d.abs() <= 1e-11 * target || hi_u - lo_u < 1e-15 * hi_u.abs().max(1.0) {
                    return Ok(m);
                }
                if d > 0.0 {
                    lo_u = u;
                    lo_c = m;
                } else {
                    hi_u = u;
                    hi_c = m;
                }
            }
            return Ok(hi_c);
        }
        prev = Some(hi_c);
        hi_u -= h;
        hi_c = c;
    }
}

/// Lower bound on the distance from an exterior `c` to `M`:
/// `sinh G / (2 e^G |G'|)` from the Koebe quarter theorem.
pub fn exterior_distance(c: ComplexValue) -> Result<f64> {
    exterior_distance_with_depth(c, DEFAULT_MAX_ITER)
}

pub fn exterior_distance_with_depth(c: ComplexValue, depth: u64) -> Result<f64> {
    let jet =
        escape_with_derivative(c, BOETTCHER_RADIUS, depth).ok_or(Error::InsideOrUndecided {
            re: c.re,
            im: c.im,
            depth,
        })?;
    let zn = jet.z.norm();
    let ln_z = zn.ln();
    let dzn = jet.dz_dc.norm();
    // G = 2^{1−n} ln|z|, |G'| = 2^{1−n}|z'|/|z|
    let log2_g = ln_z.log2() - (jet.k - 1) as f64;
    let ratio = zn * ln_z / dzn; // G/|G'|
    let d = if log2_g < -20.0 {
        // (1 − e^{−2G})/(4|G'|) with G → 0
        let g = log2_g.exp2();
        ratio * (1.0 - g) / 2.0
    } else {
        let g = log2_g.exp2();
        -(-2.0 * g).exp_m1() / (4.0 * g) * ratio
    };
    Ok(d)
}
