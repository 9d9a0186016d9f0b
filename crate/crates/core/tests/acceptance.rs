//! Acceptance suite: one test per criterion, printing one pass/fail line
//! each (run with `--nocapture` to see them; the test names mirror the
//! criteria).
//!
//! Everything runs the built-in quadratic Hamiltonian `H = p^2 - 2u` on a
//! 1000-node grid. Two separation-rate constants appear throughout: the
//! monotonicity band gives `k2 = 2`; the worked reach-time closed form for
//! this profile uses the sharper rate 4. Reports carry both.

use contact_hj_core::action::{check_inversion, ActionField, PointDatum, RecordSpec};
use contact_hj_core::characteristics::{shoot_h, ShootParams};
use contact_hj_core::fd::{suggest_alpha, FdParams, FdSolver};
use contact_hj_core::grid::{
    phi_eps_example, phi_example, u1_example, GridFunction, PeriodicGrid,
};
use contact_hj_core::model::example_hamiltonian;
use contact_hj_core::semigroup::{Direction, Semigroup, SemigroupParams};
use contact_hj_core::weakkam::{
    classify, compute_u_plus, construct_clipped_datum, estimate_class_bound, measure_reach_time,
    reach_time_estimate, restriction_residual, uniform_reach_bound, verify_pinned_datum,
    ClassLabel, Route,
};

const N: usize = 1000;
const DX: f64 = 1e-3;

/// Sup-norm band for evolved-slice comparisons (criteria 2, 3, 9): the
/// measured scheme error at this resolution is ~1e-3, an order below.
const EVOLVED_TOL: f64 = 0.01;

/// Frozen first-run value of the class-bound estimate; reruns must
/// reproduce it within 1e-3.
const C1_REGRESSION: f64 = 0.14634339495633306;

fn grid() -> PeriodicGrid {
    PeriodicGrid::new(N).unwrap()
}

/// Main evolution engine: dt = 0.5 dx / v_max = 2.5e-4.
fn sg_main() -> Semigroup<f64> {
    let ham = example_hamiltonian::<f64>();
    let g = grid();
    Semigroup::new(&ham, g, SemigroupParams::suggested(&ham, g, 2.0)).unwrap()
}

/// Point-field engine: dt = dx / v_max so the reachability cone is exact.
fn sg_point(v_max: f64, n_v: usize) -> Semigroup<f64> {
    let ham = example_hamiltonian::<f64>();
    let g = grid();
    let mut p = SemigroupParams::for_point_data(&ham, g, v_max);
    p.n_v = n_v;
    Semigroup::new(&ham, g, p).unwrap()
}

fn u_plus_reference() -> GridFunction<f64> {
    compute_u_plus(&sg_main(), Route::FixedPoint, 1e-8, 1_000_000).unwrap()
}

#[test]
fn c01_forward_weak_kam_solution_both_routes() {
    let sg = sg_main();
    let a = compute_u_plus(&sg, Route::FixedPoint, 1e-8, 1_000_000).unwrap();
    let b = compute_u_plus(&sg, Route::Duality, 1e-8, 1_000_000).unwrap();
    let (na, nb, gap) = (a.sup_norm(), b.sup_norm(), a.sup_distance(&b));
    assert!(na <= 2.0 * DX, "fixed-point route norm {na}");
    assert!(nb <= 2.0 * DX, "duality route norm {nb}");
    assert!(gap <= 3.0 * DX, "routes disagree by {gap}");
    println!(
        "criterion 01 forward solution: PASS (|u+| fixed-point {na:.2e}, duality {nb:.2e}, gap {gap:.2e})"
    );
}

#[test]
fn c02_stationary_profile_persists_under_evolution() {
    let sg = sg_main();
    let u1 = u1_example::<f64>(sg.grid());
    let trace = sg.evolve(&u1, 2.0, Direction::Backward, 40).unwrap();
    let drift = trace
        .sup_distances_to(&u1)
        .into_iter()
        .fold(0.0_f64, f64::max);
    assert!(drift <= EVOLVED_TOL, "stationarity drift {drift}");
    println!("criterion 02 stationarity: PASS (max drift {drift:.2e} <= {EVOLVED_TOL})");
}

#[test]
fn c03_finite_time_reach_of_the_pinned_datum() {
    let sg = sg_main();
    let g = sg.grid();
    let eps = 0.1_f64;
    let u1 = u1_example::<f64>(g);
    let phi = phi_example::<f64>(g);
    let u_plus = u_plus_reference();

    let phi_eps = phi_eps_example(g, eps).unwrap();
    let trace = sg.evolve(&phi_eps, 3.0, Direction::Backward, 40).unwrap();
    let mut report = measure_reach_time(&trace, &u1, "u1", EVOLVED_TOL);

    // analytic reach-time estimates at both candidate rates
    let t0_sharp = reach_time_estimate(&u1, &phi, &u_plus, eps, 0.125, 4.0).unwrap();
    let t0_conservative = reach_time_estimate(&u1, &phi, &u_plus, eps, 0.125, 2.0).unwrap();
    report.epsilon = Some(eps);
    report.t0_analytic = Some(t0_sharp);
    report.t0_analytic_alt = Some(t0_conservative);

    let closed_form = 0.5 * (9.0 / (4.0 * eps)).ln();
    assert!(
        (t0_sharp - closed_form).abs() <= 0.03,
        "grid reach estimate {t0_sharp} vs closed form {closed_form}"
    );
    let t_star = report.t_star.expect("target must be reached");
    assert!(report.reached);
    assert!(t_star <= 1.66, "t_star {t_star} exceeds 1.66");
    assert!(report.final_distance <= EVOLVED_TOL);
    println!(
        "criterion 03 finite-time reach: PASS (t* = {t_star:.3} <= 1.66; t0 = {t0_sharp:.4} [rate 4] / {t0_conservative:.4} [rate 2]; final dist {:.2e})",
        report.final_distance
    );
}

#[test]
fn c04_constant_data_follow_the_exponential_law() {
    let ham = example_hamiltonian::<f64>();
    let g = grid();
    let sg = sg_main();
    let mut worst = 0.0_f64;
    for c in [-1.0_f64, -0.1, 0.1, 1.0] {
        let datum = GridFunction::constant(g, c);
        let expect = c * (2.0_f64).exp();

        let sl = sg
            .evolve(&datum, 1.0, Direction::Backward, usize::MAX)
            .unwrap();
        let got_sl = sl.final_slice().value(0);
        let rel_sl = ((got_sl - expect) / expect).abs();
        assert!(rel_sl <= 0.01, "semi-Lagrangian c={c}: rel err {rel_sl}");

        let alpha = suggest_alpha(&ham, g, &datum);
        let fd = FdSolver::new(&ham, g, FdParams::new(0.9, alpha)).unwrap();
        let ft = fd.solve_cp(&datum, 1.0, usize::MAX).unwrap();
        let got_fd = ft.final_slice().value(0);
        let rel_fd = ((got_fd - expect) / expect).abs();
        assert!(rel_fd <= 0.01, "finite-difference c={c}: rel err {rel_fd}");
        worst = worst.max(rel_sl).max(rel_fd);
    }
    println!("criterion 04 constant-datum law: PASS (worst relative error {worst:.2e} <= 1e-2)");
}

#[test]
fn c05_action_separation_lower_bound() {
    // fields from the same base point with data 0 and 0.1 separate at
    // least like e^{2t} * 0.1
    let sg = sg_point(2.0, 129);
    let (u_lo, u_hi) = (0.0_f64, 0.1_f64);
    let times = [0.5_f64, 1.0];
    let offsets: [isize; 3] = [-150, 80, 220];
    let mut checked = 0usize;
    let mut min_margin = f64::INFINITY;
    for x0 in [100usize, 300, 500, 700, 900] {
        let rec = RecordSpec::Times(times.to_vec());
        let lo = ActionField::forward(&sg, PointDatum::at_node(x0, u_lo), 1.0, &rec).unwrap();
        let hi = ActionField::forward(&sg, PointDatum::at_node(x0, u_hi), 1.0, &rec).unwrap();
        for t in times {
            for off in offsets {
                let x = sg.grid().wrap(x0 as isize + off);
                let gap = hi.value(x, t).unwrap() - lo.value(x, t).unwrap();
                let bound = (2.0 * t).exp() * (u_hi - u_lo) - 0.02;
                assert!(
                    gap >= bound,
                    "separation {gap} below bound {bound} at x0={x0}, x={x}, t={t}"
                );
                min_margin = min_margin.min(gap - bound);
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 30);
    println!(
        "criterion 05 action separation: PASS (30 samples, min margin {min_margin:.3e})"
    );
}

#[test]
fn c06_semigroup_separation_of_ordered_pairs() {
    use rand::prelude::*;
    let ham = example_hamiltonian::<f64>();
    let g = grid();
    let mut params = SemigroupParams::suggested(&ham, g, 2.0);
    params.dt = 5e-4;
    params.n_v = 65;
    let sg = Semigroup::new(&ham, g, params).unwrap();

    let tau = std::f64::consts::TAU;
    let mut rng = StdRng::seed_from_u64(7);
    let mut min_margin = f64::INFINITY;
    for pair in 0..10 {
        let (a, b, ph) = (
            rng.gen_range(-0.08..0.08),
            rng.gen_range(-0.02..0.02),
            rng.gen_range(0.0..tau),
        );
        let gap = rng.gen_range(0.05..0.2);
        let psi = GridFunction::from_fn(g, |x: f64| {
            a * (tau * x + ph).sin() + b * (2.0 * tau * x).cos()
        });
        let phi = psi.map(|v| v + gap);
        let ta = sg.evolve(&phi, 1.0, Direction::Backward, usize::MAX).unwrap();
        let tb = sg.evolve(&psi, 1.0, Direction::Backward, usize::MAX).unwrap();
        let got = ta.final_slice().min_gap(tb.final_slice());
        let bound = (2.0_f64).exp().powi(1) * gap - 0.02;
        assert!(
            got >= bound,
            "pair {pair}: separation {got} below bound {bound} (gap {gap})"
        );
        min_margin = min_margin.min(got - bound);
    }
    println!("criterion 06 ordered-pair separation: PASS (10 pairs, min margin {min_margin:.3e})");
}

#[test]
fn c07_forward_solution_is_a_subsolution_under_backward_flow() {
    let sg = sg_main();
    let u_plus = u_plus_reference();
    let trace = sg.evolve(&u_plus, 2.0, Direction::Backward, 2000).unwrap();
    for t in [0.5_f64, 1.0, 2.0] {
        let (slice, t_rec) = trace.slice_nearest(t);
        assert!((t_rec - t).abs() < 1e-9);
        let worst = slice.min_gap(&u_plus);
        assert!(worst >= -2.0 * DX, "t={t}: min gap {worst} below -2dx");
    }
    println!("criterion 07 lower bound on evolved forward solution: PASS");
}

#[test]
fn c08_inversion_relation() {
    let sg = sg_point(2.0, 65);
    let g = sg.grid();
    let combos: [(usize, f64); 4] = [(100, 0.0), (350, 0.1), (600, -0.1), (850, 0.05)];
    let offsets: [isize; 5] = [-180, -60, 90, 200, 130];
    let mut worst = 0.0_f64;
    let mut count = 0usize;
    for (ci, (x0, u0)) in combos.iter().enumerate() {
        let rec = RecordSpec::Times(vec![0.5, 1.0]);
        let fwd = ActionField::forward(&sg, PointDatum::at_node(*x0, *u0), 1.0, &rec).unwrap();
        for (oi, off) in offsets.iter().enumerate() {
            let t = if (ci + oi) % 2 == 0 { 0.5 } else { 1.0 };
            let x = g.wrap(*x0 as isize + off);
            let u = fwd.value(x, t).unwrap();
            let bwd = ActionField::backward(
                &sg,
                PointDatum::at_node(x, u),
                t,
                &RecordSpec::FinalOnly,
            )
            .unwrap();
            let residual = (bwd.value(*x0, t).unwrap() - u0).abs();
            assert!(
                residual <= 0.02,
                "inversion residual {residual} at x0={x0}, u0={u0}, x={x}, t={t}"
            );
            worst = worst.max(residual);
            count += 1;
        }
    }
    assert_eq!(count, 20);
    // exercise the one-shot operation as well
    let r = check_inversion(&sg, 500, 0.0, 700, 1.0).unwrap();
    assert!(r <= 0.02, "one-shot inversion residual {r}");
    println!("criterion 08 inversion relation: PASS (20 samples, worst residual {worst:.3e})");
}

#[test]
fn c09_class_invariance_and_blow_up() {
    let sg = sg_main();
    let u_plus = u_plus_reference();
    let u1 = u1_example::<f64>(sg.grid());
    let reps: [(GridFunction<f64>, ClassLabel); 3] = [
        (u1.clone(), ClassLabel::A),
        (u_plus.offset(0.5), ClassLabel::APlus),
        (u_plus.offset(-0.5), ClassLabel::AMinus),
    ];
    for (rep, label) in &reps {
        assert_eq!(classify(rep, &u_plus, None).label, *label);
        let trace = sg.evolve(rep, 2.0, Direction::Backward, 4000).unwrap();
        let (at_one, _) = trace.slice_nearest(1.0);
        // evolved slices are classified inside a scheme-error band
        let evolved = classify(at_one, &u_plus, Some(EVOLVED_TOL));
        assert_eq!(
            evolved.label, *label,
            "class changed under evolution: {label:?} -> {:?} (gap {})",
            evolved.label, evolved.min_gap
        );
        let fin = trace.final_slice();
        match label {
            ClassLabel::APlus => assert!(
                fin.min_value() >= 10.0,
                "blow-up to +inf too slow: {}",
                fin.min_value()
            ),
            ClassLabel::AMinus => assert!(
                fin.max_value() <= -10.0,
                "blow-up to -inf too slow: {}",
                fin.max_value()
            ),
            ClassLabel::A => assert!(fin.sup_norm() <= 1.0),
        }
    }
    println!("criterion 09 class invariance and blow-up: PASS");
}

#[test]
fn c10_solver_cross_validation() {
    // semi-Lagrangian vs Lax-Friedrichs on the pinned datum at N = 400
    let ham = example_hamiltonian::<f64>();
    let g = PeriodicGrid::new(400).unwrap();
    let phi_eps = phi_eps_example(g, 0.1_f64).unwrap();
    let sg = Semigroup::new(&ham, g, SemigroupParams::suggested(&ham, g, 5.0)).unwrap();
    let sl = sg
        .evolve(&phi_eps, 1.0, Direction::Backward, usize::MAX)
        .unwrap();
    let alpha = suggest_alpha(&ham, g, &phi_eps);
    let fd = FdSolver::new(&ham, g, FdParams::new(0.9, alpha)).unwrap();
    let ft = fd.solve_cp(&phi_eps, 1.0, usize::MAX).unwrap();
    let gap = sl.final_slice().sup_distance(ft.final_slice());
    assert!(gap <= 0.05, "solver gap {gap}");

    // shooting oracle vs the dynamic-programming field
    let mut pp = SemigroupParams::for_point_data(&ham, g, 2.0);
    pp.n_v = 65;
    let sgp = Semigroup::new(&ham, g, pp).unwrap();
    let x0_node = 200usize; // x0 = 0
    let rec = RecordSpec::Times(vec![0.5, 1.0]);
    let field = ActionField::forward(&sgp, PointDatum::at_node(x0_node, 0.0), 1.0, &rec).unwrap();
    let shoot_params = ShootParams::default();
    let mut worst = 0.0_f64;
    let mut count = 0usize;
    for off in [-160isize, -120, -80, -40, 40, 60, 80, 120, 140, 160] {
        for t in [0.5_f64, 1.0] {
            let node = g.wrap(x0_node as isize + off);
            let x: f64 = g.node(node);
            let via_field = field.value(node, t).unwrap();
            let via_shot = shoot_h(&ham, 0.0, 0.0, x, t, &shoot_params).unwrap();
            let diff = (via_field - via_shot).abs();
            assert!(diff <= 0.02, "field vs shot at x={x}, t={t}: {diff}");
            worst = worst.max(diff);
            count += 1;
        }
    }
    assert_eq!(count, 20);
    println!(
        "criterion 10 cross-validation: PASS (solver gap {gap:.3e} <= 5e-2, worst field-vs-shot {worst:.3e} <= 2e-2)"
    );
}

#[test]
fn c11_uniform_reach_identity_from_the_clipped_datum() {
    let eps = 0.1_f64;
    let u_plus = u_plus_reference();

    // class-bound constant from subsampled point fields
    let ham = example_hamiltonian::<f64>();
    let g = grid();
    let mut pp = SemigroupParams::for_point_data(&ham, g, 1.25);
    pp.n_v = 17;
    let sg_fields = Semigroup::new(&ham, g, pp).unwrap();
    let c1 = estimate_class_bound(&sg_fields, &u_plus, None).unwrap();
    assert!(
        (c1 - C1_REGRESSION).abs() <= 1e-3,
        "class bound drifted: {c1} vs frozen {C1_REGRESSION}"
    );
    // sanity: at least the sup norm of the evolved stationary profile
    assert!(c1 >= 0.125 - 0.01 && c1 <= 5.0, "implausible class bound {c1}");

    let t0 = uniform_reach_bound(eps, 2.0, c1, u_plus.sup_norm());
    let t_check = t0 + 0.1;

    let sg = sg_main();
    let u1 = u1_example::<f64>(g);
    let phi = sg
        .evolve(&u1, 1.0, Direction::Backward, usize::MAX)
        .unwrap()
        .final_slice()
        .clone();
    let (phi_eps, _) = construct_clipped_datum(&phi, &u_plus, eps).unwrap();
    assert!(phi_eps.sup_distance(&u_plus) <= eps + 1e-12);

    let a = sg
        .evolve(&phi_eps, t_check, Direction::Backward, usize::MAX)
        .unwrap();
    let b = sg
        .evolve(&phi, t_check, Direction::Backward, usize::MAX)
        .unwrap();
    let gap = a.final_slice().sup_distance(b.final_slice());
    assert!(gap <= 0.03, "clipped and original evolutions differ by {gap} at t={t_check}");
    println!(
        "criterion 11 uniform reach identity: PASS (C1 = {c1:.17}, T0 = {t0:.4}, gap {gap:.3e} at t = {t_check:.4})"
    );
}

#[test]
fn c12_restriction_identities() {
    let eps = 0.1_f64;
    let g = grid();
    let u_plus = u_plus_reference();
    let u1 = u1_example::<f64>(g);
    let phi = phi_example::<f64>(g);
    let phi_eps = phi_eps_example(g, eps).unwrap();

    let o_nodes = verify_pinned_datum(&phi_eps, &u1, &phi, &u_plus, eps).unwrap();
    assert!(!o_nodes.is_empty());

    let sg = sg_point(2.0, 17);
    let r_pinned = restriction_residual(&sg, &phi_eps, &o_nodes, 2.0, 17).unwrap();
    assert!(r_pinned <= 0.02, "pinned-datum restriction residual {r_pinned}");
    let r_stationary = restriction_residual(&sg, &u1, &o_nodes, 2.0, 17).unwrap();
    assert!(
        r_stationary <= 0.02,
        "stationary-datum restriction residual {r_stationary}"
    );
    println!(
        "criterion 12 restriction identities: PASS (pinned {r_pinned:.3e}, stationary {r_stationary:.3e})"
    );
}
