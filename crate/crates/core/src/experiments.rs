//! Reproducible numerical experiments around parabolic parameters.
//!
//! Every experiment returns plain records; CSV and JSON emission live here
//! too so that the command-line front end stays a thin shell.

use std::f64::consts::PI;
use std::io::{self, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{escape_time, ComplexValue, DEFAULT_ESCAPE_RADIUS};
use crate::error::{Error, Result};
use crate::parabolic::{lifted_phase_prediction, locate, BifurcationSite, RotationNumber};
use crate::rays::{
    approach_points, approach_sequence, exterior_distance, ExternalAngle, PARABOLIC_STEPS,
};

/// Default number of points on each Table 1 circle.
pub const DEFAULT_SAMPLES: usize = 16384;
/// Smallest accepted circle sample count.
pub const MIN_SAMPLES: usize = 1024;

/// One row of the π-convergence tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub site_c0: ComplexValue,
    pub qn: u32,
    pub alpha_abs: f64,
    #[serde(rename = "N")]
    pub n: u64,
    /// `N·|α|·τ` at satellites, `N·|α|^{1/2}·τ` at primitive sites.
    pub scaled: f64,
    /// `π/(|α|·τ) − N` (with `|α|^{1/2}` at primitive sites).
    pub residual: f64,
}

impl ExperimentRecord {
    pub fn new(site: &BifurcationSite, alpha_abs: f64, n: u64) -> Self {
        let x = if site.is_primitive() {
            alpha_abs.sqrt()
        } else {
            alpha_abs
        };
        Self {
            site_c0: site.c0,
            qn: site.qn(),
            alpha_abs,
            n,
            scaled: n as f64 * x * site.tau,
            residual: PI / (x * site.tau) - n as f64,
        }
    }

    pub const CSV_HEADER: &'static str = "site_re,site_im,qn,alpha_abs,N,scaled,residual";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:e},{},{:.9},{:.9}",
            self.site_c0.re,
            self.site_c0.im,
            self.qn,
            self.alpha_abs,
            self.n,
            self.scaled,
            self.residual
        )
    }
}

pub fn write_records_csv<W: Write>(mut out: W, records: &[ExperimentRecord]) -> io::Result<()> {
    writeln!(out, "{}", ExperimentRecord::CSV_HEADER)?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Parameters recorded alongside every JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    #[serde(rename = "R")]
    pub radius: f64,
    pub cap: Option<u64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    /// Seconds; `None` unless timing was requested, which keeps reports
    /// byte-identical across runs.
    pub wall_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub metadata: RunMetadata,
    pub records: Vec<T>,
}

impl<T: Serialize> Report<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Default iteration cap `20π/(|α|τ)` for a circle of radius `alpha_abs`.
pub fn default_cap(site: &BifurcationSite, alpha_abs: f64) -> u64 {
    let x = if site.is_primitive() {
        alpha_abs.sqrt()
    } else {
        alpha_abs
    };
    (20.0 * PI / (x * site.tau)).ceil() as u64
}

/// Smallest escape time over `samples` equally spaced points of the circle
/// `|c − c₀| = alpha_abs`. Points that do not escape within `cap` are skipped.
///
/// Each sample is iterated only up to the best time found so far, which
/// leaves the minimum unchanged and makes the result independent of
/// evaluation order.
pub fn circle_min_escape(
    site: &BifurcationSite,
    alpha_abs: f64,
    samples: usize,
    radius: f64,
    cap: u64,
) -> Result<ExperimentRecord> {
    if samples < MIN_SAMPLES {
        return Err(Error::pre(format!(
            "samples must be at least {MIN_SAMPLES}, got {samples}"
        )));
    }
    if !(alpha_abs > 0.0) || !alpha_abs.is_finite() {
        return Err(Error::pre(format!(
            "alpha must be positive, got {alpha_abs}"
        )));
    }
    if !(radius >= 2.0) {
        return Err(Error::pre(format!(
            "escape radius must be at least 2, got {radius}"
        )));
    }
    let min_cap = default_cap(site, alpha_abs);
    if cap < min_cap {
        return Err(Error::pre(format!(
            "cap {cap} below 20π/(|α|τ) = {min_cap}"
        )));
    }
    circle_min_impl(
        site,
        alpha_abs,
        samples,
        radius,
        cap,
        alpha_abs < CERTIFY_BELOW,
    )
}

fn circle_min_impl(
    site: &BifurcationSite,
    alpha_abs: f64,
    samples: usize,
    radius: f64,
    cap: u64,
    certify: bool,
) -> Result<ExperimentRecord> {
    let best = AtomicU64::new(u64::MAX);
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks).into_par_iter().for_each(|chunk| {
        let mut tracker = certify.then(|| CycleTracker::new(site));
        for j in chunk * CHUNK..((chunk + 1) * CHUNK).min(samples) {
            let c =
                site.c0 + ComplexValue::from_polar(alpha_abs, 2.0 * PI * j as f64 / samples as f64);
            // a certified attracting cycle means c ∈ M: the sample would
            // never escape, so it cannot affect the minimum
            if let Some(t) = tracker.as_mut() {
                if t.certifies_interior(c) {
                    continue;
                }
            }
            let limit = best.load(Ordering::Relaxed).min(cap);
            if let Some(n) = escape_time(c, radius, limit).escape_time() {
                best.fetch_min(n, Ordering::Relaxed);
            }
        }
    });
    match best.into_inner() {
        u64::MAX => Err(Error::AllInterior),
        n => Ok(ExperimentRecord::new(site, alpha_abs, n)),
    }
}

/// Circles smaller than this skip samples with a certified attracting cycle.
const CERTIFY_BELOW: f64 = 5e-3;
/// Consecutive circle samples handled by one cycle tracker.
const CHUNK: usize = 1024;

/// Follows the periodic cycles born at a parabolic site along a circle
/// of parameters, by Newton continuation from the previous sample.
///
/// Near `c₀` the interior of `M` on a small circle belongs to the components
/// whose cycles collide at `z₀`: period `n` and, at satellites, period `qn`.
struct CycleTracker<'a> {
    site: &'a BifurcationSite,
    /// `(period, point)`; empty until seeded.
    tracks: Vec<(u32, ComplexValue)>,
}

impl<'a> CycleTracker<'a> {
    fn new(site: &'a BifurcationSite) -> Self {
        Self {
            site,
            tracks: Vec::new(),
        }
    }

    /// Finds the cycles near `z₀` from scratch; returns whether one of them
    /// is attracting.
    fn seed(&mut self, c: ComplexValue) -> bool {
        let site = self.site;
        let r = (c - site.c0).norm();
        self.tracks.clear();
        let mut attracting = false;
        let mut push = |tracks: &mut Vec<(u32, ComplexValue)>, period, z, mu: ComplexValue| {
            attracting |= certainly_attracting(mu);
            tracks.push((period, z));
        };
        if site.is_primitive() {
            let rho = r.sqrt();
            for k in 0..8 {
                let z = site.z0 + ComplexValue::from_polar(rho, PI * k as f64 / 4.0);
                if let Some((z, mu)) = cycle_newton(c, site.n, z, 30) {
                    if self
                        .tracks
                        .iter()
                        .all(|&(_, t)| (t - z).norm() > 1e-3 * rho)
                    {
                        push(&mut self.tracks, site.n, z, mu);
                    }
                }
            }
            return attracting;
        }
        let rho = r.powf(1.0 / site.q as f64);
        let parent = cycle_newton(c, site.n, site.z0, 30);
        if let Some((z, mu)) = parent {
            push(&mut self.tracks, site.n, z, mu);
        }
        let qn = site.qn();
        for k in 0..8 * site.q {
            let seed =
                site.z0 + ComplexValue::from_polar(rho, 2.0 * PI * k as f64 / (8 * site.q) as f64);
            let Some((z, mu)) = cycle_newton(c, qn, seed, 30) else {
                continue;
            };
            let near = (z - site.z0).norm() < 10.0 * rho;
            let distinct = parent.is_none_or(|(p, _)| (p - z).norm() > 1e-3 * rho);
            if near && distinct {
                push(&mut self.tracks, qn, z, mu);
                break;
            }
        }
        attracting
    }

    fn certifies_interior(&mut self, c: ComplexValue) -> bool {
        let mut lost = self.tracks.is_empty();
        let mut attracting = false;
        for (period, z) in self.tracks.iter_mut() {
            match cycle_newton(c, *period, *z, 8) {
                Some((w, mu)) => {
                    *z = w;
                    attracting |= certainly_attracting(mu);
                }
                None => lost = true,
            }
        }
        if attracting {
            return true;
        }
        lost && self.seed(c)
    }
}

/// `|μ| < 1` with room for rounding: a cycle found by Newton carries an
/// error of about `ε/|μ − 1|`, which perturbs `μ` by a similar amount.
fn certainly_attracting(mu: ComplexValue) -> bool {
    let slack = 1e-12 + 1e-13 / (mu - 1.0).norm();
    mu.norm() < 1.0 - slack
}

/// Newton for a point of period dividing `p`; returns the point and the
/// cycle multiplier once the step and the residual are both negligible.
fn cycle_newton(
    c: ComplexValue,
    p: u32,
    mut z: ComplexValue,
    steps: u32,
) -> Option<(ComplexValue, ComplexValue)> {
    for _ in 0..steps {
        let mut w = z;
        let mut d = ComplexValue::new(1.0, 0.0);
        for _ in 0..p {
            d *= 2.0 * w;
            w = w * w + c;
        }
        let step = (w - z) / (d - 1.0);
        if !step.is_finite() {
            return None;
        }
        z -= step;
        let scale = z.norm().max(1.0);
        // near a parabolic parameter (p^p)' ≈ 1, so rounding alone moves z
        // by about ε/|μ − 1|
        if step.norm() <= 1e-14 * scale * (1.0 / (d - 1.0).norm()).max(1.0) {
            let mut w = z;
            let mut mu = ComplexValue::new(1.0, 0.0);
            for _ in 0..p {
                mu *= 2.0 * w;
                w = w * w + c;
            }
            return ((w - z).norm() <= 1e-12 * scale).then_some((z, mu));
        }
    }
    None
}

/// Sample count that resolves the circle's exterior arcs: near a satellite
/// root the circle leaves `M` only in two arcs of angular width `∝ |α|`.
pub fn resolving_samples(alpha_abs: f64) -> usize {
    let need = (8.0 / alpha_abs).ceil().min(1e12) as usize;
    need.next_power_of_two().max(DEFAULT_SAMPLES)
}

/// Doubles the sample count from `start` until two successive doublings
/// change the minimum by at most one, or `max_samples` is reached.
///
/// Sample sets are nested (`j/M = 2j/2M`), so the minimum never increases.
pub fn circle_min_converged(
    site: &BifurcationSite,
    alpha_abs: f64,
    start: usize,
    max_samples: usize,
    radius: f64,
) -> Result<(ExperimentRecord, usize)> {
    let cap = default_cap(site, alpha_abs);
    let mut samples = start;
    let mut history = vec![circle_min_escape(site, alpha_abs, samples, radius, cap)];
    while samples * 2 <= max_samples {
        let stable = match history.as_slice() {
            [.., Ok(a), Ok(b), Ok(c)] => a.n - c.n <= 1 && b.n >= c.n,
            _ => false,
        };
        if stable {
            break;
        }
        samples *= 2;
        history.push(circle_min_escape(site, alpha_abs, samples, radius, cap));
    }
    history
        .pop()
        .expect("at least one run")
        .map(|r| (r, samples))
}

fn ray_cap(site: &BifurcationSite, alpha_abs: f64) -> u64 {
    default_cap(site, alpha_abs).max(10_000)
}

fn ray_records(
    site: &BifurcationSite,
    points: &[ComplexValue],
    radius: f64,
) -> Result<Vec<ExperimentRecord>> {
    points
        .par_iter()
        .map(|&c| {
            let alpha = (c - site.c0).norm();
            let out = escape_time(c, radius, ray_cap(site, alpha));
            out.escape_time()
                .map(|n| ExperimentRecord::new(site, alpha, n))
                .ok_or(Error::InsideOrUndecided {
                    re: c.re,
                    im: c.im,
                    depth: out.n,
                })
        })
        .collect()
}

/// Escape times along the ray `theta` at `|c_k − c₀| = 10⁻¹·2^{−k/2}`,
/// `k = 1..=count`, with escape radius 2.
pub fn ray_pi_experiment(
    site: &BifurcationSite,
    theta: ExternalAngle,
    count: usize,
) -> Result<Vec<ExperimentRecord>> {
    let points = approach_sequence(site, theta, count)?;
    ray_records(site, &points, DEFAULT_ESCAPE_RADIUS)
}

/// [`ray_pi_experiment`] at explicit distances and escape radius.
pub fn ray_pi_at(
    site: &BifurcationSite,
    theta: ExternalAngle,
    alphas: &[f64],
    radius: f64,
) -> Result<Vec<ExperimentRecord>> {
    if !(radius >= 2.0) {
        return Err(Error::pre(format!(
            "escape radius must be at least 2, got {radius}"
        )));
    }
    let points = approach_points(site, theta, alphas, PARABOLIC_STEPS)?;
    ray_records(site, &points, radius)
}

/// Primitive-case convergence `N·|α|^{1/2}·τ → π` along the ray `theta`.
///
/// The zero ray is the real half-line `(1/4, ∞)`, so for it the points
/// `c₀ + |α|` are used exactly instead of traced.
pub fn primitive_pi_experiment(
    site: &BifurcationSite,
    theta: ExternalAngle,
    alphas: &[f64],
    radius: f64,
) -> Result<Vec<ExperimentRecord>> {
    if !site.is_primitive() {
        return Err(Error::pre("primitive experiment needs a primitive site"));
    }
    if theta.num() == 0 && site.c0.im == 0.0 {
        if let Some(bad) = alphas.iter().find(|a| !(**a > 0.0)) {
            return Err(Error::pre(format!("distance {bad} must be positive")));
        }
        let points: Vec<_> = alphas.iter().map(|&a| site.c0 + a).collect();
        let records = ray_records(site, &points, radius)?;
        // keep the nominal |α| rather than the rounded |c − c₀|
        return Ok(records
            .into_iter()
            .zip(alphas)
            .map(|(r, &a)| ExperimentRecord::new(site, a, r.n))
            .collect());
    }
    ray_pi_at(site, theta, alphas, radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityRecord {
    pub t_index: usize,
    pub c_on_ray: ComplexValue,
    pub alpha_abs: f64,
    /// Escape time of the ray point itself.
    pub n_ray: u64,
    pub samples: usize,
    /// `max |N(c̃) − N(c_ray)|` over the sampled disk.
    pub max_dev: u64,
    pub disk_radius: f64,
}

/// Escape-time spread on disks of radius `exterior_distance(c_k)/a` around
/// ray points `c_k` at the given distances from `c₀`.
///
/// Each depth draws from its own ChaCha stream derived from `seed`, so the
/// output does not depend on scheduling.
pub fn theorem2_experiment(
    site: &BifurcationSite,
    theta: ExternalAngle,
    alphas: &[f64],
    a: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<StabilityRecord>> {
    if !(a > 1.0) || !a.is_finite() {
        return Err(Error::pre(format!("disk factor a must exceed 1, got {a}")));
    }
    let points = approach_points(site, theta, alphas, PARABOLIC_STEPS)?;
    points
        .par_iter()
        .enumerate()
        .map(|(k, &c)| {
            let alpha = (c - site.c0).norm();
            let cap = ray_cap(site, alpha);
            let out = escape_time(c, DEFAULT_ESCAPE_RADIUS, cap);
            let n_ray = out.escape_time().ok_or(Error::InsideOrUndecided {
                re: c.re,
                im: c.im,
                depth: cap,
            })?;
            let disk_radius = exterior_distance(c)? / a;
            if !(disk_radius > 0.0) || !disk_radius.is_finite() {
                return Err(Error::DiskDegenerate(disk_radius));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut max_dev = 0u64;
            for _ in 0..samples {
                let offset = loop {
                    let x: f64 = rng.random_range(-1.0..=1.0);
                    let y: f64 = rng.random_range(-1.0..=1.0);
                    if x * x + y * y <= 1.0 {
                        break ComplexValue::new(x, y) * disk_radius;
                    }
                };
                let ct = c + offset;
                // a disk point that fails to escape would contradict the
                // disk lying outside M; report it as the largest deviation
                let n = escape_time(ct, DEFAULT_ESCAPE_RADIUS, 2 * cap)
                    .escape_time()
                    .unwrap_or(2 * cap);
                max_dev = max_dev.max(n.abs_diff(n_ray));
            }
            Ok(StabilityRecord {
                t_index: k,
                c_on_ray: c,
                alpha_abs: alpha,
                n_ray,
                samples,
                max_dev,
                disk_radius,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitRow {
    pub alpha_abs: f64,
    #[serde(rename = "N")]
    pub n: u64,
    /// `|ℒ_pred(c_k − c₀)|`
    pub predicted: f64,
    /// `|N/(qn) − |ℒ_pred||`
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitReport {
    pub rows: Vec<TransitRow>,
    pub max_deviation: f64,
    /// Least-squares slope of the deviation against `1/|α|`.
    pub slope: f64,
}

/// Compares escape times along a ray with the lifted-phase prediction for
/// the transit time through the gate.
pub fn transit_diagnostic(
    site: &BifurcationSite,
    theta: ExternalAngle,
    alphas: &[f64],
) -> Result<TransitReport> {
    if site.is_primitive() {
        return Err(Error::pre(
            "transit diagnostic needs a satellite site (q ≥ 2)",
        ));
    }
    let points = approach_points(site, theta, alphas, PARABOLIC_STEPS)?;
    let records = ray_records(site, &points, DEFAULT_ESCAPE_RADIUS)?;
    let qn = site.qn() as f64;
    let rows = points
        .iter()
        .zip(&records)
        .map(|(&c, r)| {
            let predicted = lifted_phase_prediction(site, c - site.c0)?.norm();
            Ok(TransitRow {
                alpha_abs: r.alpha_abs,
                n: r.n,
                predicted,
                deviation: (r.n as f64 / qn - predicted).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_deviation = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
    let xs: Vec<f64> = rows.iter().map(|r| 1.0 / r.alpha_abs).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.deviation).collect();
    Ok(TransitReport {
        rows,
        max_deviation,
        slope: least_squares_slope(&xs, &ys),
    })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// One cell of the circle-minimum grid; failures are kept inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Cell {
    pub site_c0: ComplexValue,
    pub qn: u32,
    pub alpha_abs: f64,
    pub record: Option<ExperimentRecord>,
    pub error: Option<String>,
}

/// The four sites of Table 1: the `1/4` bulb of the cardioid, the `1/3`
/// bulb of the period-2 disk, the `1/2` bulb of the real period-3 component
/// and the `1/3` bulb of the cardioid.
pub fn table1_sites() -> Result<Vec<BifurcationSite>> {
    let rot = |p, q| RotationNumber::new(p, q);
    Ok(vec![
        locate(1, rot(1, 4)?, None)?,
        locate(2, rot(1, 3)?, None)?,
        locate(3, rot(1, 2)?, Some(ComplexValue::new(-1.7685, 0.0)))?,
        locate(1, rot(1, 3)?, None)?,
    ])
}

/// Runs [`circle_min_escape`] over every `(site, |α|)` pair with the default
/// escape radius and cap.
pub fn table1_report(sites: &[BifurcationSite], alphas: &[f64], samples: usize) -> Vec<Table1Cell> {
    let mut cells = Vec::with_capacity(sites.len() * alphas.len());
    for site in sites {
        for &alpha in alphas {
            let outcome = circle_min_escape(
                site,
                alpha,
                samples,
                DEFAULT_ESCAPE_RADIUS,
                default_cap(site, alpha),
            );
            let (record, error) = match outcome {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            cells.push(Table1Cell {
                site_c0: site.c0,
                qn: site.qn(),
                alpha_abs: alpha,
                record,
                error,
            });
        }
    }
    cells
}

/// CSV for a Table 1 grid; failed cells keep their coordinates and leave the
/// numeric columns empty.
pub fn write_table1_csv<W: Write>(mut out: W, cells: &[Table1Cell]) -> io::Result<()> {
    writeln!(out, "{}", ExperimentRecord::CSV_HEADER)?;
    for cell in cells {
        match &cell.record {
            Some(r) => writeln!(out, "{}", r.csv_row())?,
            None => writeln!(
                out,
                "{},{},{},{:e},,,",
                cell.site_c0.re, cell.site_c0.im, cell.qn, cell.alpha_abs
            )?,
        }
    }
    Ok(())
}
