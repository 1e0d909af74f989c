use parabolica::dynamics::{escape_time, ComplexValue};
use parabolica::parabolic::{locate, RotationNumber};
use parabolica::rays::{
    angle_residue, approach_sequence, boettcher, exterior_distance, trace_ray, ExternalAngle,
    Potential, DEFAULT_STEPS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> ComplexValue {
    ComplexValue::new(re, im)
}

fn angle(num: u64, den: u64) -> ExternalAngle {
    ExternalAngle::new(num, den).unwrap()
}

fn pot(g: f64) -> Potential {
    Potential::from_value(g).unwrap()
}

/// `|θ(c) − θ|` in turns, read off the exact Böttcher product at the first
/// escape index `k` and divided back by `2^{k−1}`.
fn angle_error(p: ComplexValue, theta: ExternalAngle) -> f64 {
    let (k, turns) = angle_residue(p, 1 << 20).unwrap();
    let expected = theta.doubled(k - 1).turns();
    let d = (turns - expected).rem_euclid(1.0);
    d.min(1.0 - d) / ((k - 1) as f64).exp2()
}

#[test]
fn boettcher_is_close_to_identity_far_out() {
    for p in [c(10.0, 0.0), c(0.0, 12.0), c(-7.0, 8.0)] {
        let b = boettcher(p, 100).unwrap();
        let phi = ComplexValue::from_polar(
            b.potential.value().exp(),
            2.0 * std::f64::consts::PI * b.argument,
        );
        assert!((phi / p - 1.0).norm() < 0.2, "c = {p}: Φ = {phi}");
    }
}

#[test]
fn traced_points_carry_their_angle() {
    for theta in [angle(1, 3), angle(1, 7), angle(22, 63), angle(1, 15)] {
        let trace = trace_ray(theta, pot(4.0), pot(1e-6), DEFAULT_STEPS).unwrap();
        assert!(trace.points.len() > 100);
        for p in &trace.points {
            let err = angle_error(p.c, theta);
            assert!(err < (-20f64).exp2(), "θ = {theta:?} at {}: {err:e}", p.c);
        }
        for w in trace.points.windows(2) {
            assert!(w[1].potential.log2() < w[0].potential.log2());
        }
        assert_eq!(trace.landing_estimate, trace.points.last().unwrap().c);
    }
}

#[test]
fn conjugate_angles_trace_mirror_images() {
    for (num, den) in [(1, 3), (1, 7), (2, 5)] {
        let a = trace_ray(angle(num, den), pot(2.0), pot(1e-5), DEFAULT_STEPS).unwrap();
        let b = trace_ray(angle(den - num, den), pot(2.0), pot(1e-5), DEFAULT_STEPS).unwrap();
        assert_eq!(a.points.len(), b.points.len());
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!((p.c - q.c.conj()).norm() < 1e-10);
        }
    }
}

#[test]
fn real_rays_stay_real() {
    let half = trace_ray(angle(1, 2), pot(2.0), pot(1e-6), DEFAULT_STEPS).unwrap();
    for p in &half.points {
        assert!(p.c.im.abs() < 1e-12 && p.c.re < -2.0);
    }
    // the tip −2 is not parabolic: the ray reaches it like G²
    assert!((half.landing_estimate + 2.0).norm() < 1e-6);
    let zero = trace_ray(angle(0, 1), pot(2.0), pot(1e-6), DEFAULT_STEPS).unwrap();
    for w in zero.points.windows(2) {
        assert!(w[0].c.im.abs() < 1e-12 && w[1].c.re < w[0].c.re && w[1].c.re > 0.25);
    }
}

#[test]
fn rays_land_at_parabolic_parameters() {
    // near a parabolic root the escape time, hence −log₂ G, grows like
    // 1/|c − c₀| (or 1/√|c − c₀| at 1/4): the rays arrive only at tiny potentials
    let zero = trace_ray(
        angle(0, 1),
        pot(1.0),
        Potential::from_log2(-400.0),
        DEFAULT_STEPS,
    )
    .unwrap();
    assert!(
        (zero.landing_estimate - 0.25).norm() < 1e-3,
        "{}",
        zero.landing_estimate
    );
    let third = trace_ray(
        angle(1, 3),
        pot(1.0),
        Potential::from_log2(-4000.0),
        DEFAULT_STEPS,
    )
    .unwrap();
    assert!(
        (third.landing_estimate + 0.75).norm() < 1e-3,
        "{}",
        third.landing_estimate
    );
    // at G = 10⁻⁶ the θ = 0 ray is still ≈ (π/N)² from 1/4
    let shallow = trace_ray(angle(0, 1), pot(1.0), pot(1e-6), DEFAULT_STEPS).unwrap();
    let n = escape_time(shallow.landing_estimate, 2.0, 1000).n as f64;
    let d = shallow.landing_estimate.re - 0.25;
    assert!(
        (d.sqrt() * n - std::f64::consts::PI).abs() < 0.5,
        "d = {d}, N = {n}"
    );
}

#[test]
fn approach_sequences() {
    let rot = RotationNumber::new(1, 2).unwrap();
    let site = locate(1, rot, None).unwrap();
    let pts = approach_sequence(&site, angle(1, 3), 10).unwrap();
    for (k, p) in pts.iter().enumerate() {
        let want = 0.1 * (-((k + 1) as f64) / 2.0).exp2();
        let d = (p - site.c0).norm();
        assert!((d - want).abs() < 1e-3 * want);
        assert!(escape_time(*p, 2.0, 1 << 20).escaped);
        assert!(angle_error(*p, angle(1, 3)) < 1e-9);
    }
    let quarter = locate(1, RotationNumber::new(0, 1).unwrap(), None).unwrap();
    let pts = approach_sequence(&quarter, angle(0, 1), 10).unwrap();
    for w in pts.windows(2) {
        assert!(w[0].im.abs() < 1e-12 && w[1].re < w[0].re && w[1].re > 0.25);
    }
    assert!(approach_sequence(&site, angle(1, 3), 0).unwrap().is_empty());
}

#[test]
fn exterior_distance_far_and_near() {
    let d = exterior_distance(c(10.0, 0.0)).unwrap();
    assert!(d > 0.0 && d <= 8.0, "{d}");
    let p = trace_ray(angle(0, 1), pot(1.0), pot(1e-3), DEFAULT_STEPS)
        .unwrap()
        .landing_estimate;
    let d = exterior_distance(p).unwrap();
    assert!(d > 0.0 && d < (p - 0.25).norm());
    assert!(exterior_distance(c(0.0, 0.0)).is_err());
}

#[test]
fn exterior_distance_is_a_lower_bound() {
    // escape-time picture of M on a 1000×1000 grid; unresolved pixels count as M,
    // which only shrinks the reference distance
    let (x0, y0, w) = (-2.25, -1.5, 3.0);
    let n = 1000;
    let h = w / n as f64;
    let inside: Vec<ComplexValue> = (0..n * n)
        .map(|i| c(x0 + (i % n) as f64 * h, y0 + (i / n) as f64 * h))
        .filter(|p| !escape_time(*p, 2.0, 500).escaped)
        .collect();
    let boundary: Vec<ComplexValue> = inside
        .iter()
        .copied()
        .filter(|p| {
            [c(h, 0.0), c(-h, 0.0), c(0.0, h), c(0.0, -h)]
                .iter()
                .any(|o| escape_time(p + o, 2.0, 500).escaped)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut tested = 0;
    while tested < 100 {
        let p = c(rng.random_range(-2.5..1.0), rng.random_range(-1.6..1.6));
        if !escape_time(p, 2.0, 500).escaped {
            continue;
        }
        tested += 1;
        let d = exterior_distance(p).unwrap();
        let reference = boundary
            .iter()
            .map(|b| (b - p).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(
            d <= reference + h * std::f64::consts::SQRT_2,
            "c = {p}: {d} vs {reference}"
        );
    }
}
