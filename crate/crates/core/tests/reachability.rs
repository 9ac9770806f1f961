use nalgebra::{dvector, DVector};
use nzpc_core::benchmark::ReachabilityExperiment;
use nzpc_core::data::state_from_output;
use nzpc_core::plant::{sample_in_zonotope, verify_containment, Dynamics};
use nzpc_core::reach::compute_zeps;
use nzpc_core::{DataWindow, ReachResult, Zonotope};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn standard_result(exp: &ReachabilityExperiment) -> ReachResult {
    let data = exp.generate_data(7, false).unwrap();
    let window = DataWindow::build(&data.trajectories).unwrap();
    exp.reach(&window).unwrap()
}

fn hulls_widen(small: &ReachResult, large: &ReachResult) {
    for (s, l) in small.output_sets.iter().zip(&large.output_sets) {
        assert!(l.to_interval().encloses(&s.to_interval(), 1e-12));
    }
}

#[test]
fn recorded_states_lie_in_the_output_to_state_set() {
    let exp = ReachabilityExperiment::standard();
    let data = exp.generate_data(3, true).unwrap();
    let states = data.states.unwrap();
    let mut checked = 0;
    for (traj, (id, xs)) in data.trajectories.iter().zip(&states) {
        assert_eq!(&traj.id, id);
        for (y, x) in traj.outputs.iter().zip(xs) {
            let set = state_from_output(y, &exp.reach.zv, &exp.dims).unwrap();
            assert!(set.contains_point(x, 1e-9).unwrap());
            checked += 1;
        }
    }
    assert_eq!(checked, 50 * 10);
}

#[test]
fn successor_outputs_match_ground_truth_within_noise() {
    let exp = ReachabilityExperiment::standard();
    let data = exp.generate_data(4, true).unwrap();
    let states = data.states.unwrap();
    let h = exp.dims.h();
    let step_noise = exp
        .reach
        .zw
        .linear_map(h)
        .unwrap()
        .minkowski_sum(&exp.reach.zv)
        .unwrap();
    for (traj, (_, xs)) in data.trajectories.iter().zip(&states) {
        for (k, x) in xs.iter().take(traj.transitions()).enumerate() {
            assert!(exp
                .reach
                .zv
                .contains_point(&(&traj.outputs[k] - h * x), 1e-9)
                .unwrap());
            let next = exp.plant.step(x, &traj.inputs[k]).unwrap();
            let residual = &traj.outputs[k + 1] - h * next;
            assert!(step_noise.contains_point(&residual, 1e-9).unwrap());
        }
    }
}

#[test]
fn same_seed_gives_identical_data() {
    let exp = ReachabilityExperiment::standard();
    let a = exp.generate_data(11, false).unwrap();
    let b = exp.generate_data(11, false).unwrap();
    let c = exp.generate_data(12, false).unwrap();
    let csv = |d: &nzpc_core::plant::Dataset| {
        let mut buf = Vec::new();
        nzpc_core::data::write_trajectories_csv(&mut buf, &d.trajectories).unwrap();
        buf
    };
    assert_eq!(csv(&a), csv(&b));
    assert_ne!(csv(&a), csv(&c));
}

#[test]
fn doubling_process_noise_widens_every_hull() {
    let base = ReachabilityExperiment::standard();
    let mut wide = base.clone();
    wide.reach.zw = base.reach.zw.scale_generators(2.0);
    hulls_widen(&standard_result(&base), &standard_result(&wide));
}

#[test]
fn larger_measurement_noise_widens_every_hull() {
    let base = ReachabilityExperiment::standard();
    let mut wide = base.clone();
    wide.reach.zv = base.reach.zv.scale_generators(3.0);
    // same data, so only the set computation sees the change
    let data = base.generate_data(7, false).unwrap();
    let window = DataWindow::build(&data.trajectories).unwrap();
    let ry0 = base.initial_output_set().unwrap();
    let small = nzpc_core::reach::reach_horizon(&window, &ry0, 5, &base.reach, &base.dims).unwrap();
    let large = nzpc_core::reach::reach_horizon(&window, &ry0, 5, &wide.reach, &wide.dims).unwrap();
    hulls_widen(&small, &large);
}

#[test]
fn larger_covering_radius_widens_every_hull() {
    let mut base = ReachabilityExperiment::standard();
    base.reach.zeps_override = None;
    base.reach.delta = 0.01;
    let mut wide = base.clone();
    wide.reach.delta = 0.05;
    hulls_widen(&standard_result(&base), &standard_result(&wide));
}

#[test]
fn generator_counts_add_up() {
    let exp = ReachabilityExperiment::standard();
    let r = standard_result(&exp);
    let cfg = &exp.reach;
    for (rx, next) in r.state_sets.iter().zip(&r.output_sets) {
        let expected = rx.num_generators()
            + cfg.zu.num_generators()
            + cfg.zv.num_generators()
            + cfg.zw.num_generators()
            + r.zl.num_generators()
            + r.zeps.num_generators();
        assert_eq!(next.num_generators(), expected);
    }
}

#[test]
fn zero_covering_radius_gives_zero_zeps() {
    let mut exp = ReachabilityExperiment::standard();
    exp.reach.zeps_override = None;
    exp.reach.delta = 0.0;
    let z = compute_zeps(&exp.reach, &exp.dims);
    assert!(z.center().iter().all(|&v| v == 0.0));
    assert!(z.generators().iter().all(|&v| v == 0.0));
}

#[test]
fn inflated_sets_still_contain_every_sample() {
    let exp = ReachabilityExperiment::standard();
    let mut r = standard_result(&exp);
    for set in &mut r.output_sets {
        *set = set.scale_generators(1.1);
    }
    let sim = exp.simulator(7).unwrap();
    let report = verify_containment(&sim, &r, &exp.x0, &exp.reach.zu, 200, 9, 1e-9).unwrap();
    assert!(report.all_contained());
    assert_eq!(report.steps.len(), 5);
}

#[test]
fn zero_samples_give_an_empty_report() {
    let exp = ReachabilityExperiment::standard();
    let r = standard_result(&exp);
    let sim = exp.simulator(7).unwrap();
    let report = verify_containment(&sim, &r, &exp.x0, &exp.reach.zu, 0, 9, 1e-9).unwrap();
    assert_eq!(report.samples, 0);
    assert!(report
        .steps
        .iter()
        .all(|s| s.samples == 0 && s.contained == 0));
}

#[test]
fn generator_cube_sampling_stays_in_hull_and_centers() {
    let z = Zonotope::new(
        dvector![1.0, -2.0, 0.5],
        nalgebra::DMatrix::from_row_slice(
            3,
            4,
            &[
                1.0, 0.5, 0.0, -0.2, //
                0.0, 2.0, 1.0, 0.3, //
                -0.4, 0.0, 0.7, 1.0,
            ],
        ),
    )
    .unwrap();
    let hull = z.to_interval();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 10_000;
    let mut mean = DVector::zeros(3);
    for _ in 0..n {
        let p = sample_in_zonotope(&z, &mut rng);
        assert!(hull.contains(&p, 1e-12));
        mean += p;
    }
    mean /= n as f64;
    // each coordinate has standard deviation at most |g|₁/√3 ≈ 2, so the
    // mean of 10⁴ samples lies within 0.1 with overwhelming probability
    assert!((mean - z.center()).amax() < 0.1);
}
