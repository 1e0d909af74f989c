//! Subcommand implementations. Each returns the full text to emit.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use parabolica::dynamics::{escape_time, ComplexValue};
use parabolica::experiments::{
    circle_min_converged, primitive_pi_experiment, ray_pi_at, resolving_samples, table1_report,
    table1_sites, theorem2_experiment, transit_diagnostic, write_records_csv, write_table1_csv,
    Report, RunMetadata, Table1Cell,
};
use parabolica::parabolic::{
    guckenheimer_check, jind, lifted_phase_prediction, locate, split_fixed_points,
    wellbehaved_diagnostic, BifurcationSite, RotationNumber,
};
use parabolica::rays::{approach_points, trace_ray, ExternalAngle, Potential, PARABOLIC_STEPS};
use serde::Serialize;

use crate::{CliError, Command, Format, SiteArgs};

pub struct Context {
    pub format: Format,
    /// Set when `--timing` was given.
    pub timing: Option<Instant>,
}

impl Context {
    fn metadata(
        &self,
        radius: f64,
        cap: Option<u64>,
        samples: Option<usize>,
        seed: Option<u64>,
    ) -> RunMetadata {
        RunMetadata {
            radius,
            cap,
            samples,
            seed,
            wall_time: self.timing.map(|t| t.elapsed().as_secs_f64()),
        }
    }
}

pub fn execute(command: Command, ctx: &Context) -> Result<String, CliError> {
    match command {
        Command::Escape { c, radius, cap } => escape(ctx, c, radius, cap),
        Command::Locate { site } => site_report(ctx, &site, false),
        Command::Tau { site } => site_report(ctx, &site, true),
        Command::Ray {
            theta,
            from,
            to,
            steps,
        } => ray(ctx, theta, from, to, steps),
        Command::Table1 {
            alphas,
            samples,
            escalate,
            max_samples,
        } => table1(ctx, &alphas.0, samples, escalate.then_some(max_samples)),
        Command::RayPi {
            site,
            theta,
            alphas,
            count,
            radius,
        } => {
            let alphas = alphas.map(|a| a.0).unwrap_or_else(|| {
                (1..=count)
                    .map(|k| 0.1 * (-(k as f64) / 2.0).exp2())
                    .collect()
            });
            ray_pi(ctx, &site, theta, &alphas, radius)
        }
        Command::PrimitivePi {
            n,
            c0,
            theta,
            alphas,
            radius,
        } => {
            let site = SiteArgs { n, p: 0, q: 1, c0 };
            primitive_pi(ctx, &site, theta, &alphas.0, radius)
        }
        Command::Thm2 {
            site,
            theta,
            alphas,
            a,
            samples,
            seed,
        } => thm2(ctx, &site, theta, &alphas.0, a, samples, seed),
        Command::Gates {
            site,
            alpha,
            theta,
            distance,
        } => gates(ctx, &site, alpha, theta.zip(distance)),
        Command::Transit {
            site,
            theta,
            alphas,
        } => transit(ctx, &site, theta, &alphas.0),
        Command::DemoClassic { depth, radius } => demo_classic(ctx, depth, radius),
    }
}

fn locate_site(args: &SiteArgs) -> Result<BifurcationSite, CliError> {
    let rot = RotationNumber::new(args.p, args.q).map_err(|e| CliError::Input(e.to_string()))?;
    locate(args.n, rot, args.c0).map_err(|e| CliError::from_core("locate", e))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("values serialise");
    s.push('\n');
    s
}

fn utf8(buf: Vec<u8>) -> String {
    String::from_utf8(buf).expect("CSV writers emit UTF-8")
}

#[derive(Serialize)]
struct EscapeReport {
    c: ComplexValue,
    #[serde(rename = "R")]
    radius: f64,
    cap: u64,
    escaped: bool,
    #[serde(rename = "N")]
    n: u64,
    status: &'static str,
}

fn escape(ctx: &Context, c: ComplexValue, radius: f64, cap: u64) -> Result<String, CliError> {
    if radius < 2.0 {
        return Err(CliError::Input(format!(
            "escape radius must be at least 2, got {radius}"
        )));
    }
    let out = escape_time(c, radius, cap);
    let status = if out.escaped {
        "escaped"
    } else {
        "non-escaped at cap"
    };
    Ok(match ctx.format {
        Format::Csv => format!("re,im,status,N\n{},{},{status},{}\n", c.re, c.im, out.n),
        Format::Json => json(&EscapeReport {
            c,
            radius,
            cap,
            escaped: out.escaped,
            n: out.n,
            status,
        }),
    })
}

#[derive(Serialize)]
struct SiteReport {
    #[serde(flatten)]
    site: BifurcationSite,
    qn: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    guckenheimer_residual: Option<f64>,
}

fn site_report(ctx: &Context, args: &SiteArgs, with_check: bool) -> Result<String, CliError> {
    let site = locate_site(args)?;
    let residual = if with_check && !site.is_primitive() {
        Some(guckenheimer_check(&site).map_err(|e| CliError::from_core("guckenheimer_check", e))?)
    } else {
        None
    };
    Ok(match ctx.format {
        Format::Csv => {
            let mut s = String::from("c0_re,c0_im,n,p,q,qn,z0_re,z0_im,dmu_re,dmu_im,tau");
            if with_check {
                s.push_str(",guckenheimer_residual");
            }
            let _ = write!(
                s,
                "\n{},{},{},{},{},{},{},{},{},{},{}",
                site.c0.re,
                site.c0.im,
                site.n,
                site.p,
                site.q,
                site.qn(),
                site.z0.re,
                site.z0.im,
                site.dmu_qn.re,
                site.dmu_qn.im,
                site.tau
            );
            if with_check {
                let _ = write!(
                    s,
                    ",{}",
                    residual.map(|r| r.to_string()).unwrap_or_default()
                );
            }
            s.push('\n');
            s
        }
        Format::Json => json(&SiteReport {
            site,
            qn: site.qn(),
            guckenheimer_residual: residual,
        }),
    })
}

fn ray(
    ctx: &Context,
    theta: ExternalAngle,
    from: f64,
    to: f64,
    steps: u32,
) -> Result<String, CliError> {
    let start = Potential::from_value(from).map_err(|e| CliError::from_core("trace_ray", e))?;
    let end = Potential::from_value(to).map_err(|e| CliError::from_core("trace_ray", e))?;
    let trace =
        trace_ray(theta, start, end, steps).map_err(|e| CliError::from_core("trace_ray", e))?;
    Ok(match ctx.format {
        Format::Csv => {
            let mut buf = Vec::new();
            trace.write_csv(&mut buf)?;
            utf8(buf)
        }
        Format::Json => json(&trace),
    })
}

fn table1(
    ctx: &Context,
    alphas: &[f64],
    samples: usize,
    escalate: Option<usize>,
) -> Result<String, CliError> {
    let sites = table1_sites().map_err(|e| CliError::from_core("locate", e))?;
    let cells: Vec<Table1Cell> = match escalate {
        None => table1_report(&sites, alphas, samples),
        Some(max) => sites
            .iter()
            .flat_map(|site| alphas.iter().map(move |&alpha| (site, alpha)))
            .map(|(site, alpha)| {
                let start = samples.max(resolving_samples(alpha)).min(max);
                let outcome = circle_min_converged(site, alpha, start, max, 2.0);
                Table1Cell {
                    site_c0: site.c0,
                    qn: site.qn(),
                    alpha_abs: alpha,
                    record: outcome.as_ref().ok().map(|(r, _)| *r),
                    error: outcome.err().map(|e| e.to_string()),
                }
            })
            .collect(),
    };
    for cell in &cells {
        if let Some(err) = &cell.error {
            eprintln!(
                "warning: cell ({}, {:e}): {err}",
                cell.site_c0, cell.alpha_abs
            );
        }
    }
    Ok(match ctx.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_table1_csv(&mut buf, &cells)?;
            utf8(buf)
        }
        Format::Json => json(&Report {
            metadata: ctx.metadata(2.0, None, Some(samples), None),
            records: cells,
        }),
    })
}

fn records_output(
    ctx: &Context,
    records: Vec<parabolica::ExperimentRecord>,
    metadata: RunMetadata,
) -> Result<String, CliError> {
    Ok(match ctx.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_records_csv(&mut buf, &records)?;
            utf8(buf)
        }
        Format::Json => json(&Report { metadata, records }),
    })
}

fn ray_pi(
    ctx: &Context,
    args: &SiteArgs,
    theta: ExternalAngle,
    alphas: &[f64],
    radius: f64,
) -> Result<String, CliError> {
    let site = locate_site(args)?;
    let records = ray_pi_at(&site, theta, alphas, radius)
        .map_err(|e| CliError::from_core("ray_pi_experiment", e))?;
    records_output(ctx, records, ctx.metadata(radius, None, None, None))
}

fn primitive_pi(
    ctx: &Context,
    args: &SiteArgs,
    theta: ExternalAngle,
    alphas: &[f64],
    radius: f64,
) -> Result<String, CliError> {
    let site = locate_site(args)?;
    let records = primitive_pi_experiment(&site, theta, alphas, radius)
        .map_err(|e| CliError::from_core("primitive_pi_experiment", e))?;
    records_output(ctx, records, ctx.metadata(radius, None, None, None))
}

fn thm2(
    ctx: &Context,
    args: &SiteArgs,
    theta: ExternalAngle,
    alphas: &[f64],
    a: f64,
    samples: usize,
    seed: u64,
) -> Result<String, CliError> {
    let site = locate_site(args)?;
    let records = theorem2_experiment(&site, theta, alphas, a, samples, seed)
        .map_err(|e| CliError::from_core("theorem2_experiment", e))?;
    Ok(match ctx.format {
        Format::Csv => {
            let mut s =
                String::from("t_index,c_re,c_im,alpha_abs,N_ray,samples,max_dev,disk_radius\n");
            for r in &records {
                let _ = writeln!(
                    s,
                    "{},{},{},{:e},{},{},{},{:e}",
                    r.t_index,
                    r.c_on_ray.re,
                    r.c_on_ray.im,
                    r.alpha_abs,
                    r.n_ray,
                    r.samples,
                    r.max_dev,
                    r.disk_radius
                );
            }
            s
        }
        Format::Json => json(&Report {
            metadata: ctx.metadata(2.0, None, Some(samples), Some(seed)),
            records,
        }),
    })
}

#[derive(Serialize)]
struct GateRow {
    quantity: String,
    re: f64,
    im: f64,
}

fn gates(
    ctx: &Context,
    args: &SiteArgs,
    alpha: Option<ComplexValue>,
    on_ray: Option<(ExternalAngle, f64)>,
) -> Result<String, CliError> {
    let site = locate_site(args)?;
    let alpha = match (alpha, on_ray) {
        (Some(a), _) => a,
        (None, Some((theta, d))) => {
            approach_points(&site, theta, &[d], PARABOLIC_STEPS)
                .map_err(|e| CliError::from_core("approach_points", e))?[0]
                - site.c0
        }
        (None, None) => {
            return Err(CliError::Input(
                "give --alpha, or --theta with --distance".into(),
            ))
        }
    };
    let split = split_fixed_points(&site, alpha)
        .map_err(|e| CliError::from_core("split_fixed_points", e))?;
    let report = wellbehaved_diagnostic(&split)
        .map_err(|e| CliError::from_core("wellbehaved_diagnostic", e))?;
    let phase = lifted_phase_prediction(&site, alpha)
        .map_err(|e| CliError::from_core("lifted_phase_prediction", e))?;

    let mut rows = Vec::new();
    let mut push = |quantity: String, z: ComplexValue| {
        rows.push(GateRow {
            quantity,
            re: z.re,
            im: z.im,
        })
    };
    push("alpha".into(), alpha);
    let orbits = std::iter::once(("sigma".to_string(), &split.sigma)).chain(
        split
            .varsigma
            .iter()
            .enumerate()
            .map(|(k, o)| (format!("varsigma_{k}"), o)),
    );
    for ((name, orbit), index) in orbits.zip(&report.indices) {
        push(format!("{name}_point"), orbit.point);
        push(format!("{name}_multiplier"), orbit.multiplier);
        push(format!("{name}_index"), *index);
        if let Ok(j) = jind(orbit.multiplier) {
            push(format!("{name}_jind"), j);
        }
    }
    push("index_sum".into(), report.total);
    push(
        "min_subset_im".into(),
        ComplexValue::new(report.min_subset_im, 0.0),
    );
    push(
        "ray_sign".into(),
        ComplexValue::new(report.ray_sign as f64, 0.0),
    );
    push("lifted_phase".into(), phase);
    Ok(match ctx.format {
        Format::Csv => {
            let mut s = String::from("quantity,re,im\n");
            for r in &rows {
                let _ = writeln!(s, "{},{},{}", r.quantity, r.re, r.im);
            }
            s
        }
        Format::Json => json(&rows),
    })
}

fn transit(
    ctx: &Context,
    args: &SiteArgs,
    theta: ExternalAngle,
    alphas: &[f64],
) -> Result<String, CliError> {
    let site = locate_site(args)?;
    let report = transit_diagnostic(&site, theta, alphas)
        .map_err(|e| CliError::from_core("transit_diagnostic", e))?;
    Ok(match ctx.format {
        Format::Csv => {
            let mut s = String::from("alpha_abs,N,predicted,deviation\n");
            for r in &report.rows {
                let _ = writeln!(
                    s,
                    "{:e},{},{:.9},{:.9}",
                    r.alpha_abs, r.n, r.predicted, r.deviation
                );
            }
            eprintln!(
                "max deviation {:.6}, slope {:e}",
                report.max_deviation, report.slope
            );
            s
        }
        Format::Json => json(&report),
    })
}

#[derive(Serialize)]
struct ClassicRow {
    sequence: &'static str,
    t: f64,
    c: ComplexValue,
    #[serde(rename = "N")]
    n: u64,
    product: f64,
    limit: f64,
}

fn demo_classic(ctx: &Context, depth: u32, radius: f64) -> Result<String, CliError> {
    if radius < 2.0 {
        return Err(CliError::Input(format!(
            "escape radius must be at least 2, got {radius}"
        )));
    }
    let mut rows = Vec::new();
    for k in 1..=depth {
        let t: f64 = format!("1e-{k}").parse().expect("literal");
        let cap = (100.0 / t) as u64 + 1000;
        let sequences = [
            ("vertical -3/4+it", ComplexValue::new(-0.75, t), t, PI),
            ("real 1/4+t", ComplexValue::new(0.25 + t, 0.0), t.sqrt(), PI),
            (
                "parabola -5/4-t^2+it",
                ComplexValue::new(-1.25 - t * t, t),
                t,
                PI / 2.0,
            ),
        ];
        for (sequence, c, scale, limit) in sequences {
            let out = escape_time(c, radius, cap);
            if !out.escaped {
                return Err(CliError::Input(format!(
                    "{sequence} at t = {t:e} did not escape within {cap}"
                )));
            }
            rows.push(ClassicRow {
                sequence,
                t,
                c,
                n: out.n,
                product: out.n as f64 * scale,
                limit,
            });
        }
    }
    Ok(match ctx.format {
        Format::Csv => {
            let mut s = String::from("sequence,t,c_re,c_im,N,product,limit\n");
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{},{:e},{},{},{},{:.9},{:.9}",
                    r.sequence, r.t, r.c.re, r.c.im, r.n, r.product, r.limit
                );
            }
            s
        }
        Format::Json => json(&rows),
    })
}
