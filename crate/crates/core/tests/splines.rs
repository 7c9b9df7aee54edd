use magswim::splines::{clamped_uniform_knots, BSplineCurve};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn knot_examples() {
    assert_eq!(clamped_uniform_knots(4, 3, 0.0, 1.0).unwrap().knots, vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
    assert_eq!(
        clamped_uniform_knots(5, 3, 0.0, 1.0).unwrap().knots,
        vec![0.0, 0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0, 1.0]
    );
    let k = clamped_uniform_knots(40, 3, 0.0, 3.0).unwrap();
    assert_eq!(k.knots.len(), 44);
    assert_eq!(k.n_basis(), 40);
    assert!(clamped_uniform_knots(3, 3, 0.0, 1.0).is_err());
    assert!(clamped_uniform_knots(5, 3, 1.0, 1.0).is_err());
}

#[test]
fn partition_of_unity_on_fine_grid() {
    let k = clamped_uniform_knots(40, 3, 0.0, 3.0).unwrap();
    for i in 0..=10_000 {
        let t = 3.0 * i as f64 / 10_000.0;
        let s: f64 = k.basis_full(t).unwrap().iter().sum();
        assert!((s - 1.0).abs() < 1e-12, "t = {t}");
    }
}

#[test]
fn constant_and_endpoint_interpolation() {
    let c = BSplineCurve::clamped_uniform(vec![0.004; 12], 3, 0.0, 2.0).unwrap();
    for i in 0..=50 {
        assert!((c.eval(0.04 * i as f64).unwrap() - 0.004).abs() < 1e-15);
    }
    let pts: Vec<f64> = (0..9).map(|i| (i as f64).sin()).collect();
    let c = BSplineCurve::clamped_uniform(pts.clone(), 3, 0.0, 2.0).unwrap();
    assert_eq!(c.eval(0.0).unwrap(), pts[0]);
    assert_eq!(c.eval(2.0).unwrap(), pts[8]);
    assert!(c.eval(2.1).is_err());
}

#[test]
fn convex_hull_bound_on_random_curves() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..1000 {
        let n = rng.random_range(4..45);
        let pts: Vec<f64> = (0..n).map(|_| rng.random_range(-0.01..0.01)).collect();
        let c = BSplineCurve::clamped_uniform(pts.clone(), 3, 0.0, 3.0).unwrap();
        let bound = pts.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..=60 {
            assert!(c.eval(0.05 * i as f64).unwrap().abs() <= bound + 1e-18);
        }
    }
}

proptest! {
    #[test]
    fn local_support(idx in 0usize..20, delta in -1.0f64..1.0) {
        let d = 3;
        let pts: Vec<f64> = (0..20).map(|i| (0.3 * i as f64).cos()).collect();
        let a = BSplineCurve::clamped_uniform(pts.clone(), d, 0.0, 1.0).unwrap();
        let mut moved = pts;
        moved[idx] += delta;
        let b = BSplineCurve::clamped_uniform(moved, d, 0.0, 1.0).unwrap();
        let knots = &a.knots.knots;
        let (lo, hi) = (knots[idx], knots[idx + d + 1]);
        for i in 0..=500 {
            let t = i as f64 / 500.0;
            if t < lo || t > hi {
                prop_assert_eq!(a.eval(t).unwrap(), b.eval(t).unwrap());
            }
        }
    }

    #[test]
    fn partition_of_unity_any_degree(deg in 1usize..6, extra in 0usize..20, t in 0.0f64..=1.0) {
        let k = clamped_uniform_knots(deg + 1 + extra, deg, 0.0, 1.0).unwrap();
        let s: f64 = k.basis_full(t).unwrap().iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }
}
