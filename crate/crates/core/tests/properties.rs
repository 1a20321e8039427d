use cmrac_core::config::load_preset;
use cmrac_core::controller::{
    blf_raw_rates, classical_raw_rates, project, radial_clamp, saturate, AdaptiveLaw,
    ControllerGains, ProjectionParams,
};
use cmrac_core::feasibility::{
    check_c1, compute_alpha_beta, input_only_bound, max_state_bound, min_input_bound,
    min_state_bound, MaxStateBound,
};
use cmrac_core::models::{compute_true_gains, ConstraintSpec};
use cmrac_core::numerics::{
    eigenvalues_sym, left_pseudo_inverse, lyapunov_residual, norm, rk4_step, solve, solve_lyapunov,
    spectral_norm, Matrix,
};
use cmrac_core::signals::{eval_disturbance, DisturbanceSpec, Primitive, SignalSpec};
use cmrac_core::sim::{closed_loop_derivative, pack_state, run_scenario, RunOptions, SimConfig};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn square(n: usize, data: &[f64]) -> Matrix {
    Matrix::from_row_major(n, n, data[..n * n].to_vec()).unwrap()
}

/// `-(M^T M + c I) + (S - S^T)`: the symmetric part is negative definite,
/// so the matrix is Hurwitz.
fn hurwitz(n: usize, m: &[f64], s: &[f64], c: f64) -> Matrix {
    let m = square(n, m);
    let s = square(n, s);
    let sym = m
        .transpose()
        .matmul(&m)
        .unwrap()
        .add(&Matrix::scaled_identity(n, c))
        .unwrap();
    let skew = s.sub(&s.transpose()).unwrap();
    skew.sub(&sym).unwrap()
}

fn spd(n: usize, m: &[f64], c: f64) -> Matrix {
    let m = square(n, m);
    m.transpose()
        .matmul(&m)
        .unwrap()
        .add(&Matrix::scaled_identity(n, c))
        .unwrap()
}

fn entries(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

fn benchmark() -> SimConfig {
    load_preset("benchmark").unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lyapunov_solution_is_spd_with_small_residual(
        n in 1usize..=6,
        m in entries(36),
        s in entries(36),
        qm in entries(36),
        c in 0.05f64..2.0,
    ) {
        let a = hurwitz(n, &m, &s, c);
        let q = spd(n, &qm, 0.1);
        let p = solve_lyapunov(&a, &q).unwrap();
        prop_assert!(p.asymmetry() < 1e-9);
        let res = lyapunov_residual(&a, &p, &q).unwrap();
        prop_assert!(res <= 1e-9 * (1.0 + q.frobenius_norm()), "residual {res}");
        let eig = to_na(&p.symmetrized()).symmetric_eigen();
        prop_assert!(eig.eigenvalues.min() > 0.0);
    }

    #[test]
    fn symmetric_spectrum_matches_nalgebra(n in 1usize..=6, m in entries(36)) {
        let a = square(n, &m);
        let sym = a.add(&a.transpose()).unwrap();
        let mut ours = eigenvalues_sym(&sym).unwrap();
        let mut theirs: Vec<f64> = to_na(&sym).symmetric_eigen().eigenvalues.iter().copied().collect();
        ours.sort_by(f64::total_cmp);
        theirs.sort_by(f64::total_cmp);
        for (a, b) in ours.iter().zip(&theirs) {
            prop_assert!((a - b).abs() < 1e-9, "{ours:?} vs {theirs:?}");
        }
    }

    #[test]
    fn spectral_norm_matches_svd_and_is_below_frobenius(r in 1usize..=6, c in 1usize..=6, m in entries(36)) {
        let a = Matrix::from_row_major(r, c, m[..r * c].to_vec()).unwrap();
        let ours = spectral_norm(&a).unwrap();
        let theirs = to_na(&a).singular_values().max();
        prop_assert!((ours - theirs).abs() < 1e-9 * (1.0 + theirs));
        prop_assert!(ours <= a.frobenius_norm() + 1e-12);
    }

    #[test]
    fn linear_solve_matches_nalgebra(n in 1usize..=6, m in entries(36), b in entries(6)) {
        let a = spd(n, &m, 0.5);
        let x = solve(&a, &b[..n]).unwrap();
        let expect = to_na(&a).lu().solve(&nalgebra::DVector::from_column_slice(&b[..n])).unwrap();
        for (u, v) in x.iter().zip(expect.iter()) {
            prop_assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn left_pseudo_inverse_is_a_left_inverse(rows in 2usize..=6, m in entries(36)) {
        let cols = rows / 2;
        let mut data = m[..rows * cols].to_vec();
        for k in 0..cols {
            data[k * cols + k] += 3.0;
        }
        let b = Matrix::from_row_major(rows, cols, data).unwrap();
        let pinv = left_pseudo_inverse(&b).unwrap();
        let eye = pinv.matmul(&b).unwrap().sub(&Matrix::identity(cols)).unwrap();
        prop_assert!(eye.max_abs() < 1e-10);
        let theirs = to_na(&b).pseudo_inverse(1e-12).unwrap();
        let diff = to_na(&pinv) - theirs;
        prop_assert!(diff.amax() < 1e-9);
    }

    #[test]
    fn disturbance_respects_cap(
        cap in 0.0f64..3.0,
        amp in 0.0f64..10.0,
        omega in 0.1f64..5.0,
        seed in any::<u64>(),
        t in 0.0f64..50.0,
    ) {
        let spec = DisturbanceSpec {
            base: SignalSpec {
                channels: vec![
                    vec![Primitive::Sinusoid { amplitude: amp, omega, phase: 0.3 }],
                    vec![Primitive::Noise { amplitude: amp, hold: 0.05 }],
                    vec![Primitive::Constant { value: amp / 2.0 }],
                ],
            },
            onset: 1.0,
            norm_cap: cap,
            seed,
        };
        let d = eval_disturbance(&spec, t, 3).unwrap();
        prop_assert!(norm(&d) <= cap * (1.0 + 1e-12));
        if t < 1.0 {
            prop_assert!(d.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn blf_rates_are_classical_rates_over_the_gap(
        e in entries(4),
        x in prop::collection::vec(-8.0f64..8.0, 4),
        r in entries(2),
        shrink in 0.01f64..0.99,
    ) {
        let cfg = benchmark();
        let gains = &cfg.gains;
        let b = &cfg.plant.b;
        let epe = gains.p.quad_form(&e).unwrap();
        prop_assume!(epe > 0.0);
        let xi_prime = (epe / shrink).sqrt();
        let gap = xi_prime * xi_prime - epe;
        let (cx, cr) = classical_raw_rates(gains, b, &e, &x, &r).unwrap();
        let (bx, br) = blf_raw_rates(gains, b, &e, &x, &r, xi_prime).unwrap();
        for (c, bl) in [(&cx, &bx), (&cr, &br)] {
            let expect = c.scaled(1.0 / gap);
            let err = bl.sub(&expect).unwrap().frobenius_norm();
            prop_assert!(err <= 1e-12 * expect.frobenius_norm().max(f64::MIN_POSITIVE), "relative error {}", err / expect.frobenius_norm());
        }
    }

    #[test]
    fn beta_is_monotone_in_each_bound(
        d in 0.0f64..3.0,
        dd in 0.0f64..1.0,
        kr in 0.1f64..2.0,
        dkr in 0.0f64..1.0,
        xa in 0.5f64..8.0,
        dxa in 0.0f64..1.0,
        eta in 1e-4f64..1.0,
    ) {
        let cs = ConstraintSpec {
            x_bar: xa + dxa + 1.0,
            u_bar: 10.0,
            xa_bar: xa,
            d_bar: d,
            kx_bar: 1.0,
            kr_bar: kr,
            x0_bar: None,
            xr_bar: None,
        };
        let (_, beta) = compute_alpha_beta(&cs, eta, 1.5, 4.0);
        for bumped in [
            ConstraintSpec { d_bar: d + dd, ..cs.clone() },
            ConstraintSpec { kr_bar: kr + dkr, ..cs.clone() },
            ConstraintSpec { xa_bar: xa + dxa, ..cs.clone() },
        ] {
            let (_, b2) = compute_alpha_beta(&bumped, eta, 1.5, 4.0);
            prop_assert!(b2 >= beta);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn saturation_never_exceeds_the_bound(v in prop::collection::vec(-100.0f64..100.0, 1..6), u_bar in 1e-3f64..50.0) {
        let u = saturate(&v, u_bar);
        prop_assert!(norm(&u) <= u_bar + 1e-12);
        if norm(&v) > u_bar {
            prop_assert!((norm(&u) - u_bar).abs() <= 1e-12 * u_bar.max(1.0));
            let cos = v.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() / (norm(&v) * norm(&u));
            prop_assert!((cos - 1.0).abs() < 1e-12);
        } else {
            prop_assert_eq!(u, v);
        }
    }

    #[test]
    fn projection_never_pushes_outward_at_the_boundary(
        theta in entries(8),
        rate in prop::collection::vec(-10.0f64..10.0, 8),
        radius in 0.0f64..1.2,
        eps in 0.01f64..0.9,
    ) {
        let bound = 2.0;
        let raw = Matrix::from_row_major(2, 4, rate).unwrap();
        let dir = Matrix::from_row_major(2, 4, theta).unwrap();
        prop_assume!(dir.frobenius_norm() > 1e-6);
        let th = dir.scaled(radius * bound / dir.frobenius_norm());
        let pp = ProjectionParams::new(bound, eps).unwrap();
        let out = project(&th, &raw, &pp);
        let radial_raw = th.frobenius_dot(&raw).unwrap();
        let radial_out = th.frobenius_dot(&out).unwrap();
        prop_assert!(radial_out <= radial_raw.max(0.0) + 1e-9);
        if pp.indicator(&th) >= 1.0 {
            prop_assert!(radial_out <= 1e-9 * raw.frobenius_norm() * th.frobenius_norm());
        }
    }

    #[test]
    fn projected_integration_stays_in_the_ball(
        start in entries(8),
        rate in prop::collection::vec(-5.0f64..5.0, 8),
        spin in -3.0f64..3.0,
        eps in 0.05f64..0.5,
    ) {
        let bound = 1.6;
        let pp = ProjectionParams::new(bound, eps).unwrap();
        let mut th = Matrix::from_row_major(2, 4, start).unwrap();
        radial_clamp(&mut th, bound);
        let base = Matrix::from_row_major(2, 4, rate).unwrap();
        let h = 1e-2;
        for k in 0..400 {
            let t = k as f64 * h;
            let f = |t: f64, y: &[f64]| {
                let cur = Matrix::from_row_major(2, 4, y.to_vec()).unwrap();
                let raw = base.scaled((spin * t).cos());
                project(&cur, &raw, &pp).as_slice().to_vec()
            };
            let next = rk4_step(f, t, th.as_slice(), h).unwrap();
            th = Matrix::from_row_major(2, 4, next).unwrap();
            radial_clamp(&mut th, bound);
            prop_assert!(th.frobenius_norm() <= bound + 1e-6);
        }
    }
}

/// `u_bar > x_bar (kx_bar - eta) + eta xa_bar + kr_bar r_bar + d_bar / ||B||`
/// evaluated directly from the constraint parameters.
fn c1_direct(cs: &ConstraintSpec, eta: f64, r_bar: f64, b_norm: f64) -> bool {
    cs.u_bar
        > cs.x_bar * (cs.kx_bar - eta) + eta * cs.xa_bar + cs.kr_bar * r_bar + cs.d_bar / b_norm
}

fn c1_via_state_bound(cs: &ConstraintSpec, alpha: f64, beta: f64) -> bool {
    match max_state_bound(cs.u_bar, alpha, beta, cs.xa_bar) {
        MaxStateBound::Below(limit) => cs.x_bar < limit,
        MaxStateBound::Unbounded => cs.x_bar > min_state_bound(cs.u_bar, alpha, beta, cs.xa_bar),
        MaxStateBound::Infeasible => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn three_forms_of_the_feasibility_condition_agree(
        u_bar in 0.1f64..30.0,
        xa_bar in 0.1f64..10.0,
        gap in 1e-3f64..10.0,
        kx_bar in 0.0f64..3.0,
        kr_bar in 0.0f64..3.0,
        d_bar in 0.0f64..3.0,
        eta in 1e-4f64..2.0,
        r_bar in 0.0f64..3.0,
        b_norm in 0.1f64..10.0,
    ) {
        let cs = ConstraintSpec {
            x_bar: xa_bar + gap,
            u_bar,
            xa_bar,
            d_bar,
            kx_bar: kx_bar.max(1e-6),
            kr_bar: kr_bar.max(1e-6),
            x0_bar: None,
            xr_bar: None,
        };
        let (alpha, beta) = compute_alpha_beta(&cs, eta, r_bar, b_norm);
        let c1 = check_c1(cs.u_bar, cs.x_bar, alpha, beta);
        prop_assume!(c1.margin.abs() > 1e-9 * (1.0 + cs.u_bar));
        prop_assert_eq!(c1.feasible, c1_direct(&cs, eta, r_bar, b_norm));
        prop_assert_eq!(c1.feasible, c1_via_state_bound(&cs, alpha, beta));
        prop_assert_eq!(c1.feasible, cs.u_bar > min_input_bound(cs.x_bar, alpha, beta));
    }

    #[test]
    fn zero_alpha_reduces_to_the_input_only_bound(
        xa_bar in 0.1f64..10.0,
        kr_bar in 0.01f64..3.0,
        d_bar in 0.0f64..3.0,
        eta in 1e-4f64..2.0,
        r_bar in 0.0f64..3.0,
        b_norm in 0.1f64..10.0,
        x_bar_gap in 0.01f64..5.0,
    ) {
        let cs = ConstraintSpec {
            x_bar: xa_bar + x_bar_gap,
            u_bar: 10.0,
            xa_bar,
            d_bar,
            kx_bar: eta,
            kr_bar,
            x0_bar: Some(xa_bar),
            xr_bar: None,
        };
        let (alpha, beta) = compute_alpha_beta(&cs, eta, r_bar, b_norm);
        prop_assert_eq!(alpha, 0.0);
        let bound = min_input_bound(cs.x_bar, alpha, beta);
        prop_assert_eq!(bound, input_only_bound(&cs, r_bar, b_norm).unwrap());
    }
}

#[test]
fn runs_are_deterministic() {
    let mut cfg = benchmark();
    cfg.t_end = 22.0;
    cfg.log_stride = 50;
    let a = run_scenario(&cfg, RunOptions::default()).unwrap();
    let b = run_scenario(&cfg, RunOptions::default()).unwrap();
    assert_eq!(a.trajectory.to_csv(), b.trajectory.to_csv());
    assert_eq!(a.metrics, b.metrics);
}

#[test]
fn halving_the_step_barely_moves_the_error_peak() {
    let mut cfg = benchmark();
    cfg.log_stride = 1000;
    let coarse = run_scenario(&cfg, RunOptions::default()).unwrap();
    cfg.dt /= 2.0;
    cfg.log_stride *= 2;
    let fine = run_scenario(&cfg, RunOptions::default()).unwrap();
    let diff = (coarse.metrics.max_e_norm - fine.metrics.max_e_norm).abs();
    assert!(diff < 1e-4, "max ||e|| moved by {diff}");
}

#[test]
fn zero_initial_state_without_inputs_stays_at_rest() {
    let mut cfg = benchmark();
    cfg.x0 = vec![0.0; 4];
    cfg.xr0 = vec![0.0; 4];
    cfg.reference_signal = SignalSpec::zero(2);
    cfg.disturbance = DisturbanceSpec::none(4);
    cfg.constraints.d_bar = 0.0;
    cfg.t_end = 5.0;
    let run = run_scenario(&cfg, RunOptions::default()).unwrap();
    for rec in &run.trajectory.records {
        assert!(rec
            .x
            .iter()
            .chain(&rec.x_r)
            .chain(&rec.u)
            .all(|v| *v == 0.0));
        assert_eq!(rec.khat_x_fro, 0.0);
        assert_eq!(rec.khat_r_fro, 0.0);
    }
}

#[test]
fn ideal_gains_follow_the_reference_exactly() {
    let mut cfg = benchmark();
    let truth = compute_true_gains(&cfg.plant, &cfg.reference).unwrap();
    cfg.disturbance = DisturbanceSpec::none(4);
    cfg.constraints.kr_bar = 1.0;
    for law in [AdaptiveLaw::Blf, AdaptiveLaw::Classical] {
        cfg.gains = ControllerGains::new(
            cfg.gains.gamma_x.clone(),
            cfg.gains.gamma_r.clone(),
            cfg.gains.q.clone(),
            &cfg.reference.a,
            law,
        )
        .unwrap();
        let x = [0.4, -0.2, 0.3, 0.1];
        let y = pack_state(&x, &x, &truth.kx, &truth.kr).unwrap();
        let dy = closed_loop_derivative(&cfg, 0.5, &y).unwrap();
        for k in 0..4 {
            assert!(
                (dy[k] - dy[k + 4]).abs() < 1e-12,
                "{law}: state rates differ"
            );
        }
        assert!(
            dy[8..].iter().all(|v| v.abs() < 1e-12),
            "{law}: gains drift with zero error"
        );
    }
}
