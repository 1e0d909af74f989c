use parabolica::dynamics::ComplexValue;
use parabolica::orbits::{
    attracting_seed, find_periodic_orbit, multiplier_map, verify_exact_period, RESIDUAL_TOL,
};
use parabolica::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> ComplexValue {
    ComplexValue::new(re, im)
}

fn unit_disk(rng: &mut ChaCha8Rng, r: f64) -> ComplexValue {
    loop {
        let p = c(rng.random_range(-r..r), rng.random_range(-r..r));
        if p.norm() < r {
            return p;
        }
    }
}

#[test]
fn cardioid_multipliers_match_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        // c = μ/2 − μ²/4 with |μ| < 0.95 lies inside the main cardioid
        let mu = unit_disk(&mut rng, 0.95);
        let cv = mu / 2.0 - mu * mu / 4.0;
        let s = multiplier_map(cv, 1, attracting_seed(cv, 1)).unwrap();
        let closed = 1.0 - (1.0 - 4.0 * cv).sqrt();
        assert!(
            (s.mu - closed).norm() < 1e-10,
            "c = {cv}: {} vs {closed}",
            s.mu
        );
        // μ₁'(c) = 2/√(1 − 4c)
        let dclosed = 2.0 / (1.0 - 4.0 * cv).sqrt();
        assert!((s.dmu_dc - dclosed).norm() < 1e-8 * dclosed.norm());
    }
}

#[test]
fn period_two_multipliers_match_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let w = unit_disk(&mut rng, 0.95);
        let cv = w / 4.0 - 1.0;
        let s = multiplier_map(cv, 2, attracting_seed(cv, 2)).unwrap();
        assert!((s.mu - 4.0 * (cv + 1.0)).norm() < 1e-10, "c = {cv}");
        assert!((s.dmu_dc - 4.0).norm() < 1e-8);
    }
}

#[test]
fn implicit_derivative_matches_finite_differences() {
    // centres and interior points of components of periods 3, 4 and 5
    let cases = [
        (c(-0.1225611668766536, 0.7448617666197442), 3),
        (c(-1.7548776662466927, 0.0), 3),
        (c(-1.3107026413368328, 0.0), 4),
        (c(0.2822713907669139, 0.5300606175785253), 4),
        (c(-0.5043401754462431, 0.5627657614529813), 5),
    ];
    let h = 1e-6;
    for (centre, n) in cases {
        for off in [c(0.0, 0.0), c(1e-3, 5e-4)] {
            let cv = centre + off;
            let s = multiplier_map(cv, n, attracting_seed(cv, n)).unwrap();
            let plus = multiplier_map(cv + h, n, attracting_seed(cv + h, n)).unwrap();
            let minus = multiplier_map(cv - h, n, attracting_seed(cv - h, n)).unwrap();
            let fd = (plus.mu - minus.mu) / (2.0 * h);
            assert!(
                (fd - s.dmu_dc).norm() < 1e-5 * s.dmu_dc.norm(),
                "c = {cv}, n = {n}: {fd} vs {}",
                s.dmu_dc
            );
        }
    }
}

#[test]
fn exactness_classifier_never_accepts_a_divisor() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let cv = unit_disk(&mut rng, 0.95) / 2.0 - 0.1;
        let fixed = (1.0 - (1.0 - 4.0 * cv).sqrt()) / 2.0;
        for n in [2, 3, 4, 6] {
            assert!(matches!(
                verify_exact_period(cv, fixed, n),
                Err(Error::PeriodNotExact { divisor: 1, .. })
            ));
        }
    }
}

#[test]
fn orbit_invariants_hold() {
    let cv = c(-1.7548776662466927, 0.0);
    let o = find_periodic_orbit(cv, 3, attracting_seed(cv, 3), RESIDUAL_TOL).unwrap();
    assert_eq!(o.period, 3);
    assert!(o.residual < 1e-12);
    let pts = o.points();
    let product: ComplexValue = pts.iter().map(|z| 2.0 * z).product();
    assert!((product - o.multiplier).norm() < 1e-12);
    assert!(pts.iter().all(|z| z.norm() >= o.point.norm()));
}

#[test]
fn multiplier_map_small_examples() {
    let s = multiplier_map(c(-0.76, 0.0), 2, attracting_seed(c(-0.76, 0.0), 2)).unwrap();
    assert!((s.mu - c(0.96, 0.0)).norm() < 1e-10);
    let s = multiplier_map(c(-1.0, 0.0), 2, c(0.1, 0.0)).unwrap();
    assert!(s.mu.norm() < 1e-12 && (s.dmu_dc - 4.0).norm() < 1e-9);
}
