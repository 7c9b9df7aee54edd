use magswim::integrate::{
    integrate, integrate_fixed, ConstantControl, IntegrateOptions, IntegrationError, Method, Tolerance, Trajectory,
    ZeroControl,
};
use magswim::reach::{draw_eta, random_control};
use magswim::SwimmerParams;

const BENT: [f64; 5] = [0.0, 0.0, 0.0, 0.2, -0.1];

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn equilibrium_stays_put() {
    let p = SwimmerParams::default();
    let traj = integrate(&p, &ZeroControl, &[0.0; 5], 1.0, &IntegrateOptions::default()).unwrap();
    assert!(traj.final_state().iter().all(|v| v.abs() < 1e-10));
    assert_eq!(traj.times[0], 0.0);
    assert_eq!(*traj.times.last().unwrap(), 1.0);
}

#[test]
fn translated_start_gives_translated_trajectory() {
    let p = SwimmerParams::default();
    // Purely absolute tolerance keeps the step sequence independent of the offset.
    let opts = IntegrateOptions::<f64>::with_tol(Tolerance { abs: 1e-10, rel: 0.0 });
    let a = integrate(&p, &ConstantControl([0.0, 0.005]), &BENT, 0.2, &opts).unwrap();
    let mut shifted = BENT;
    shifted[0] += 5.0;
    shifted[1] -= 3.0;
    let b = integrate(&p, &ConstantControl([0.0, 0.005]), &shifted, 0.2, &opts).unwrap();
    let ea = a.final_state();
    let eb = b.final_state();
    assert!((eb[0] - 5.0 - ea[0]).abs() < 1e-9);
    assert!((eb[1] + 3.0 - ea[1]).abs() < 1e-9);
    assert!(max_abs_diff(&ea[2..], &eb[2..]) < 1e-9);
}

#[test]
fn rk45_matches_tight_reference() {
    let p = SwimmerParams::default();
    let loose = integrate(&p, &ZeroControl, &BENT, 1.0, &IntegrateOptions::default()).unwrap();
    let tight = integrate(&p, &ZeroControl, &BENT, 1.0, &IntegrateOptions::with_tol(Tolerance::uniform(1e-12))).unwrap();
    assert!(max_abs_diff(loose.final_state(), tight.final_state()) < 1e-6);
}

#[test]
fn rk4_is_fourth_order() {
    let p = SwimmerParams::default();
    let horizon = 0.1;
    let reference = integrate(&p, &ZeroControl, &BENT, horizon, &IntegrateOptions::with_tol(Tolerance::uniform(1e-12)))
        .unwrap();
    let err = |steps| {
        let t = integrate_fixed(&p, &ZeroControl, &BENT, horizon, steps).unwrap();
        max_abs_diff(t.final_state(), reference.final_state())
    };
    let (e1, e2) = (err(8000), err(16000));
    let ratio = e1 / e2;
    assert!((12.0..20.0).contains(&ratio), "ratio {ratio}, errors {e1:e} {e2:e}");
}

#[test]
fn rodas_agrees_with_rk45() {
    let p = SwimmerParams::default();
    let control = random_control(1.0, draw_eta(2024, 0));
    let rk = integrate(&p, &control, &[0.0; 5], 0.05, &IntegrateOptions::with_tol(Tolerance::uniform(1e-10))).unwrap();
    let ro = integrate(&p, &control, &[0.0; 5], 0.05, &IntegrateOptions::stiff(Tolerance { abs: 1e-12, rel: 1e-9 })).unwrap();
    assert!(max_abs_diff(rk.final_state(), ro.final_state()) < 1e-8);
}

#[test]
fn tighter_tolerance_moves_endpoint_little() {
    let p = SwimmerParams::default();
    let control = random_control(1.0, draw_eta(7, 3));
    let run = |tol: f64| {
        let opts = IntegrateOptions {
            method: Method::Rodas4,
            tol: Tolerance::uniform(tol),
            ..Default::default()
        };
        integrate(&p, &control, &[0.0; 5], 1.0, &opts).unwrap()
    };
    let a = run(1e-7);
    let b = run(1e-8);
    assert!(max_abs_diff(a.final_state(), b.final_state()) < 10.0 * 1e-7);
}

#[test]
fn deterministic_grids() {
    let p = SwimmerParams::default();
    let control = random_control(0.5, draw_eta(11, 2));
    let opts = IntegrateOptions::default();
    let a = integrate(&p, &control, &BENT, 0.05, &opts).unwrap();
    let b = integrate(&p, &control, &BENT, 0.05, &opts).unwrap();
    assert_eq!(a.times, b.times);
    assert_eq!(a.states, b.states);
}

#[test]
fn elastic_relaxation_straightens() {
    let p = SwimmerParams::default();
    let traj = integrate(&p, &ZeroControl, &BENT, 50.0, &IntegrateOptions::stiff(Tolerance::uniform(1e-9))).unwrap();
    let bend = |s: &[f64]| s[3..].iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(bend(traj.final_state()) < bend(&BENT));
}

#[test]
fn sampling_exact_at_nodes_and_on_lines() {
    let p = SwimmerParams::default();
    let traj = integrate(&p, &ZeroControl, &BENT, 0.01, &IntegrateOptions::default()).unwrap();
    assert_eq!(traj.sample(0.0).unwrap(), BENT.to_vec());
    let k = traj.times.len() / 2;
    assert_eq!(traj.sample(traj.times[k]).unwrap(), traj.states[k]);
    assert!(matches!(traj.sample(0.02), Err(IntegrationError::OutOfRange { .. })));

    let times: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
    let line = |t: f64| vec![1.0 + 2.0 * t, -3.0 * t];
    let lin = Trajectory::from_nodes(
        times.clone(),
        times.iter().map(|&t| line(t)).collect(),
        vec![vec![2.0, -3.0]; times.len()],
        vec![[0.0, 0.0]; times.len()],
    );
    for k in 0..10 {
        let t = 0.1 * k as f64 + 0.05;
        assert!(max_abs_diff(&lin.sample(t).unwrap(), &line(t)) < 1e-10);
    }
}

#[test]
fn sample_times_are_grid_nodes() {
    let p = SwimmerParams::default();
    let opts = IntegrateOptions {
        sample_times: vec![0.0025, 0.005],
        ..Default::default()
    };
    let traj = integrate(&p, &ZeroControl, &BENT, 0.01, &opts).unwrap();
    assert!(traj.times.contains(&0.0025) && traj.times.contains(&0.005));
    assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn rejects_bad_horizon() {
    let p = SwimmerParams::default();
    assert!(integrate(&p, &ZeroControl, &BENT, 0.0, &IntegrateOptions::default()).is_err());
}
