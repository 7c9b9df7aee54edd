use magswim::brackets::{
    alpha_closed_form, alpha_numeric, d_map, det_equilibrium_closed_form, evaluate_bracket, f202_at_origin,
    fifth_order_brackets, lemma_suite, order_tolerance, verify_assumptions, BracketWord, DifferentiationScheme,
    FnFields,
};
use magswim::linalg::{norm2, norm_inf};
use magswim::SwimmerParams;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn golden(key: &str) -> f64 {
    let v: serde_json::Value = serde_json::from_str(include_str!("golden/reference.json")).unwrap();
    v[key].as_f64().unwrap()
}

fn word(s: &str) -> BracketWord {
    s.parse().unwrap()
}

/// Random polynomial vector field on R³ of total degree ≤ `deg`.
#[derive(Clone, Debug)]
struct Poly {
    // (coefficient, exponents, output component)
    terms: Vec<(f64, [u32; 3], usize)>,
}

impl Poly {
    fn random(rng: &mut ChaCha8Rng, deg: u32) -> Self {
        let mut terms = Vec::new();
        for out in 0..3 {
            for _ in 0..5 {
                let mut e = [0u32; 3];
                let mut budget = rng.random_range(0..=deg);
                while budget > 0 {
                    e[rng.random_range(0..3)] += 1;
                    budget -= 1;
                }
                terms.push((rng.random_range(-1.0..1.0), e, out));
            }
        }
        Poly { terms }
    }

    fn eval(&self, p: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; 3];
        for (c, e, out) in &self.terms {
            v[*out] += c * p[0].powi(e[0] as i32) * p[1].powi(e[1] as i32) * p[2].powi(e[2] as i32);
        }
        v
    }
}

fn family(polys: [Poly; 3]) -> FnFields<impl Fn(u8, &[f64]) -> Vec<f64> + Sync> {
    FnFields {
        dim: 3,
        f: move |i: u8, p: &[f64]| polys[i as usize].eval(p),
    }
}

fn residual(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&d) / (1.0 + norm2(a).max(norm2(b)))
}

#[test]
fn planar_example() {
    let fields = FnFields {
        dim: 2,
        f: |i: u8, p: &[f64]| if i == 0 { vec![p[1], 0.0] } else { vec![0.0, p[0]] },
    };
    let v = evaluate_bracket(&word("[0,1]"), &fields, &[1.0, 2.0], &DifferentiationScheme::default()).unwrap();
    assert!((v[0] + 1.0).abs() < 1e-12 && (v[1] - 2.0).abs() < 1e-12);
}

#[test]
fn word_syntax() {
    for s in ["0", "[2,[0,2]]", "[[0,2],[1,[1,2]]]"] {
        assert_eq!(word(s).to_string(), s);
    }
    assert!("[0,".parse::<BracketWord>().is_err());
    assert!("[3,1]".parse::<BracketWord>().is_err());
    let counts: Vec<usize> = (1..=4).map(|n| BracketWord::enumerate(n).len()).collect();
    assert_eq!(counts, vec![3, 12, 66, 471]);
    let w = word("[2,[0,2]]");
    assert_eq!((w.len(), w.count(2), w.count(0)), (3, 2, 1));
    let json = serde_json::to_string(&w).unwrap();
    assert_eq!(serde_json::from_str::<BracketWord>(&json).unwrap(), w);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn antisymmetry_and_bilinearity(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0,
                                   x in prop::array::uniform3(-1.0f64..1.0)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, g, h) = (Poly::random(&mut rng, 2), Poly::random(&mut rng, 2), Poly::random(&mut rng, 2));
        let scheme = DifferentiationScheme::default();
        let fam = family([f.clone(), g.clone(), h.clone()]);
        let fg = evaluate_bracket(&word("[0,1]"), &fam, &x, &scheme).unwrap();
        let gf = evaluate_bracket(&word("[1,0]"), &fam, &x, &scheme).unwrap();
        let neg: Vec<f64> = gf.iter().map(|v| -v).collect();
        prop_assert!(residual(&fg, &neg) < 1e-10);

        let fh = evaluate_bracket(&word("[0,2]"), &fam, &x, &scheme).unwrap();
        let mix = FnFields {
            dim: 3,
            f: |i: u8, p: &[f64]| {
                if i == 0 {
                    f.eval(p)
                } else {
                    g.eval(p).iter().zip(h.eval(p)).map(|(u, v)| a * u + b * v).collect()
                }
            },
        };
        let lhs = evaluate_bracket(&word("[0,1]"), &mix, &x, &scheme).unwrap();
        let rhs: Vec<f64> = fg.iter().zip(&fh).map(|(u, v)| a * u + b * v).collect();
        prop_assert!(residual(&lhs, &rhs) < 1e-10);
    }
}

#[test]
fn jacobi_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let scheme = DifferentiationScheme::default();
    for _ in 0..5 {
        let fam = family([Poly::random(&mut rng, 3), Poly::random(&mut rng, 3), Poly::random(&mut rng, 3)]);
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let terms: Vec<Vec<f64>> = ["[0,[1,2]]", "[1,[2,0]]", "[2,[0,1]]"]
            .iter()
            .map(|w| evaluate_bracket(&word(w), &fam, &x, &scheme).unwrap())
            .collect();
        let sum: Vec<f64> = (0..3).map(|i| terms.iter().map(|t| t[i]).sum()).collect();
        let scale = 1.0 + terms.iter().map(|t| norm2(t)).fold(0.0, f64::max);
        assert!(norm2(&sum) / scale < 1e-6, "{sum:?}");
    }
}

#[test]
fn assumptions_hold_for_table_values() {
    let checks = verify_assumptions(&SwimmerParams::default(), &DifferentiationScheme::default()).unwrap();
    assert!(checks.all_pass(), "{checks:?}");
}

#[test]
fn third_order_obstruction_direction() {
    let params = SwimmerParams::default();
    let scheme = DifferentiationScheme::default();
    let v = f202_at_origin(&params, &scheme).unwrap();
    let alpha = v[0];
    assert!(alpha != 0.0);
    assert!(norm_inf(&v[1..]) < 1e-6 * alpha.abs());
    let f212 = evaluate_bracket(&word("[2,[1,2]]"), &magswim::brackets::SwimmerFields { params: &params }, &[0.0; 5], &scheme)
        .unwrap();
    assert!(norm2(&f212) < 1e-6 * alpha.abs());
    assert!(alpha.abs() > 1e3 * norm2(&f212));
}

#[test]
fn alpha_scaling_laws() {
    let params = SwimmerParams::default();
    let scheme = DifferentiationScheme::default();
    let base = alpha_numeric(&params, &scheme).unwrap();
    let stiffer = SwimmerParams { elastic: 2.0 * params.elastic, ..params };
    assert!((alpha_numeric(&stiffer, &scheme).unwrap() / base - 2.0).abs() < 1e-4);
    let stronger = SwimmerParams { magnetization: 2.0 * params.magnetization, ..params };
    assert!((alpha_numeric(&stronger, &scheme).unwrap() / base - 4.0).abs() < 1e-4);

    let cf = alpha_closed_form(&params).unwrap();
    assert!((alpha_closed_form(&stronger).unwrap() / cf - 4.0).abs() < 1e-12);
    let limp = SwimmerParams { elastic: 0.0, ..params };
    assert_eq!(alpha_closed_form(&limp).unwrap(), 0.0);
}

#[test]
fn richardson_levels_converge() {
    let params = SwimmerParams::default();
    let two = DifferentiationScheme { levels: 2, ..Default::default() };
    let a2 = alpha_numeric(&params, &two).unwrap();
    let a3 = alpha_numeric(&params, &DifferentiationScheme::default()).unwrap();
    assert!(((a2 - a3) / a3).abs() < 1e-5);
}

#[test]
fn closed_form_alpha_golden() {
    let cf = alpha_closed_form(&SwimmerParams::default()).unwrap();
    assert_eq!(cf, golden("alpha_closed_form"));
}

#[test]
fn closed_form_determinant_is_negative() {
    assert!(det_equilibrium_closed_form(&SwimmerParams::default()).unwrap() < 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let mut draw = || 10f64.powf(rng.random_range(-3.0..3.0));
        let p = SwimmerParams {
            total_length: 7e-3 * draw(),
            head_radius: 3e-4 * draw(),
            head_drag_par: draw(),
            head_drag_perp: draw(),
            head_drag_rot: draw(),
            link_drag_par: draw(),
            link_drag_perp: draw(),
            ..SwimmerParams::default()
        };
        assert!(det_equilibrium_closed_form(&p).unwrap() < 0.0, "{p:?}");
    }
    let p = SwimmerParams::default();
    let doubled = SwimmerParams { link_drag_perp: 2.0 * p.link_drag_perp, ..p };
    let l = p.link_length();
    let r = p.head_radius;
    let w = |kt: f64| {
        14.0 * kt * kt * l.powi(4)
            + 42.0 * p.head_drag_perp * p.head_drag_rot * r.powi(4)
            + kt * l * r * (12.0 * p.head_drag_rot * r * r + p.head_drag_perp * (49.0 * l * l + 39.0 * l * r + 12.0 * r * r))
    };
    let ratio = det_equilibrium_closed_form(&doubled).unwrap() / det_equilibrium_closed_form(&p).unwrap();
    let expected = 4.0 * w(2.0 * p.link_drag_perp) / w(p.link_drag_perp);
    assert!((ratio / expected - 1.0).abs() < 1e-12);
}

#[test]
fn short_words_obey_lemmas() {
    let suite = lemma_suite(&SwimmerParams::default(), 3, &DifferentiationScheme::default()).unwrap();
    assert_eq!(suite.entries.len(), 3 + 9 + 54);
    let failures: Vec<_> = suite.failures().map(|e| e.word.to_string()).collect();
    assert!(failures.is_empty(), "{failures:?}");
    let zero_f2 = suite.entries.iter().find(|e| e.word == word("[0,1]")).unwrap();
    assert!(zero_f2.norm < order_tolerance(1));
    let lemma3 = suite.entries.iter().find(|e| e.word == word("[0,[0,2]]")).unwrap();
    assert!(lemma3.first_component.abs() < order_tolerance(2) * (1.0 + lemma3.norm));
}

#[test]
fn d_map_is_a_quadratic_form() {
    let params = SwimmerParams::default();
    let scheme = DifferentiationScheme::default();
    let fifth = fifth_order_brackets(&params, &scheme).unwrap();
    assert!(fifth.combine(0.3, 0.0, 0.0).iter().all(|&v| v == 0.0));
    let a = fifth.combine(0.3, 0.7, -1.1);
    let b = fifth.combine(0.3, 2.1, -3.3);
    for (x, y) in a.iter().zip(&b) {
        assert!((y - 9.0 * x).abs() <= 1e-9 * y.abs().max(1.0));
    }
    // Mirror symmetry keeps every fifth-order value on the first axis.
    for v in [&fifth.f02_002, &fifth.f12_012, &fifth.f12_102] {
        assert!(norm_inf(&v[1..]) <= 1e-3 * v[0].abs());
    }
    let direct = d_map(&params, 0.3, 0.7, -1.1, &scheme).unwrap();
    assert_eq!(direct, a);
}
