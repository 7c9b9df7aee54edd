use magswim::reach::{
    draw_eta, monte_carlo, occupancy, occupancy_of_points, random_control, GridSpec, ReachabilityConfig, Side,
};
use magswim::integrate::Control;
use magswim::SwimmerParams;

fn small_config() -> ReachabilityConfig {
    ReachabilityConfig {
        n_mc: 12,
        path_samples: 5,
        ..Default::default()
    }
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

#[test]
fn bitwise_reproducible_across_thread_counts() {
    let params = SwimmerParams::default();
    let cfg = small_config();
    let one = pool(1).install(|| monte_carlo(&params, &cfg).unwrap());
    let two = pool(2).install(|| monte_carlo(&params, &cfg).unwrap());
    assert_eq!(one, two);
    assert!(one.failures.is_empty());
    assert_eq!(one.records.len(), 12);
    assert!(one.records.iter().enumerate().all(|(i, r)| r.run == i as u64));
    assert_eq!(one.records[3].path.len(), 5);
    assert_eq!(one.records[3].path[0], [0.0, 0.0]);
}

#[test]
fn random_control_is_bounded_by_its_amplitude() {
    let eta = draw_eta(2024, 9);
    let c = random_control(1.0, eta);
    for k in 0..=100 {
        let u = c.at(k as f64 / 100.0);
        assert!(u[0].abs() <= 3.0 && u[1].abs() <= 3.0);
    }
}

#[test]
fn empty_cells_never_increase_with_more_runs() {
    let params = SwimmerParams::default();
    let grid = GridSpec::square(0.02, 8);
    let cfg = |n| ReachabilityConfig {
        n_mc: n,
        ..Default::default()
    };
    let small = monte_carlo(&params, &cfg(6)).unwrap();
    let large = monte_carlo(&params, &cfg(12)).unwrap();
    assert_eq!(small.records[..], large.records[..6]);
    let a = occupancy(&small, &grid).unwrap();
    let b = occupancy(&large, &grid).unwrap();
    assert!(b.empty_cells <= a.empty_cells);
}

#[test]
fn occupancy_examples() {
    let occ = occupancy_of_points(&[[0.0, 0.0]], &GridSpec::square(1.0, 2)).unwrap();
    assert_eq!(occ.counts.iter().filter(|&&c| c > 0).count(), 1);
    assert_eq!(occ.points_in_window, 1);

    let degenerate = GridSpec {
        x_min: 1.0,
        x_max: 1.0,
        ..GridSpec::square(1.0, 4)
    };
    assert!(occupancy_of_points(&[[0.0, 0.0]], &degenerate).is_err());

    // A filled half-plane x < 0 with an empty slab on the right of the origin.
    let mut pts = Vec::new();
    for i in 0..40 {
        for j in 0..40 {
            let x = -1.0 + (i as f64 + 0.5) / 20.0;
            let y = -1.0 + (j as f64 + 0.5) / 20.0;
            if x < 0.0 || x > 0.4 {
                pts.push([x, y]);
            }
        }
    }
    let occ = occupancy_of_points(&pts, &GridSpec::square(1.0, 10)).unwrap();
    let right = occ.region(Side::Positive).expect("slab flagged");
    assert_eq!(right.cells.len(), 20);
    assert!(right.bounds[0].abs() < 1e-12 && (right.bounds[1] - 0.4).abs() < 1e-12);
    assert!(occ.region(Side::Negative).is_none());
}
