use nalgebra::dvector;
use nzpc_core::benchmark::ControlExperiment;
use nzpc_core::nzpc::nzpc_step;
use nzpc_core::{DataWindow, QpStatus, Zonotope};

#[test]
fn first_step_from_the_initial_region_is_feasible() {
    let exp = ControlExperiment::standard();
    let data = exp.generate_data(1).unwrap();
    let window = DataWindow::build(&data.trajectories).unwrap();
    let mut sim = exp.simulator(2).unwrap();
    let x0 = sim.sample(&exp.x0);
    let y0 = sim.measure(&x0);
    let step = nzpc_step(&window, &y0, &exp.nzpc, &exp.dims).unwrap();
    assert_eq!(step.status, QpStatus::Optimal);
    let u = step.u_apply.unwrap();
    assert!(exp.nzpc.input_constraint.contains_point(&u, 1e-9).unwrap());
    assert_eq!(step.inputs.len(), 3);
    for (y, set) in step.predicted_outputs.iter().zip(&step.reachable_sets) {
        assert!(set.contains_point(y, 1e-8).unwrap());
    }
}

#[test]
fn noise_free_loop_settles_near_the_reference() {
    let mut exp = ControlExperiment::standard();
    exp.nzpc.reach.zw = Zonotope::origin(2);
    exp.nzpc.reach.zv = Zonotope::origin(2);
    exp.nzpc.output_lower = dvector![-100.0, -100.0];
    exp.nzpc.output_upper = dvector![100.0, 100.0];
    exp.nzpc.steps = 60;
    let log = exp.run(3, false).unwrap();
    assert!(log.aborted.is_none());
    let dist = |y: &nalgebra::DVector<f64>| (y - &exp.nzpc.y_ref).norm();
    let first = dist(log.initial_output.as_ref().unwrap());
    let last = dist(log.final_output.as_ref().unwrap());
    assert!(last < 0.05 * first, "{first} -> {last}");
    let tail: Vec<f64> = log.steps[40..].iter().map(|s| dist(&s.y)).collect();
    assert!(tail.iter().all(|&d| d < 0.1 * first));
}

#[test]
fn zero_steps_give_an_empty_log_with_a_header() {
    let mut exp = ControlExperiment::standard();
    exp.nzpc.steps = 0;
    let log = exp.run(1, false).unwrap();
    assert!(log.steps.is_empty());
    let mut buf = Vec::new();
    log.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1);
    let header = text.lines().next().unwrap();
    assert!(header
        .starts_with("step,y_1,y_2,u_1,u_2,qp_status,qp_iters,solve_ms,pred1_lo_1,pred1_hi_1"));
    assert!(header.ends_with("pred3_lo_2,pred3_hi_2"));
}

#[test]
fn short_run_satisfies_constraints_and_logs_every_step() {
    let mut exp = ControlExperiment::standard();
    exp.nzpc.steps = 20;
    let log = exp.run(5, true).unwrap();
    assert_eq!(log.steps.len(), 20);
    assert!(log.violations(&exp.nzpc, 1e-9).unwrap().is_clean());
    let mut buf = Vec::new();
    log.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 21);
    let sets: serde_json::Value = serde_json::from_str(&log.sets_json().unwrap()).unwrap();
    assert_eq!(sets.as_array().unwrap().len(), 20);
}

#[test]
fn same_seed_reproduces_the_loop() {
    let mut exp = ControlExperiment::standard();
    exp.nzpc.steps = 10;
    let a = exp.run(9, false).unwrap();
    let b = exp.run(9, false).unwrap();
    let ys = |l: &nzpc_core::ClosedLoopLog| {
        l.steps
            .iter()
            .map(|s| (s.y.clone(), s.u.clone()))
            .collect::<Vec<_>>()
    };
    assert_eq!(ys(&a), ys(&b));
}

#[test]
fn impossible_output_bounds_are_reported_infeasible() {
    let mut exp = ControlExperiment::standard();
    exp.nzpc.output_lower = dvector![10.0, 10.0];
    exp.nzpc.output_upper = dvector![10.5, 10.5];
    let data = exp.generate_data(1).unwrap();
    let window = DataWindow::build(&data.trajectories).unwrap();
    let step = nzpc_step(&window, &dvector![-2.0, -20.5], &exp.nzpc, &exp.dims).unwrap();
    assert_eq!(step.status, QpStatus::Infeasible);
    assert!(step.u_apply.is_none());
    assert!(step.diagnostics.unwrap().contains("output"));
}
