use std::time::Instant;

use hypoflow::construct::catalog;
use hypoflow::flow::{assemble_8d, hitchin_integrate, FlowOptions, FlowStructure};
use hypoflow::gstruct::model;

fn h7_metric(t: f64) -> (f64, f64) {
    let s = 2.5 * t + 1.0;
    (s.powf(0.4), s.powf(-1.2))
}

#[test]
fn hitchin_flow_on_h7_matches_the_closed_form() {
    let fx = catalog("h7-cocal").unwrap();
    let g2 = fx.g2.clone().unwrap();
    assert!((&g2.phi - &model::phi0()).max_abs() < 1e-15);
    let start = Instant::now();
    let tr = hitchin_integrate(&fx.alg, &g2, 3.0, &FlowOptions::default()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(tr.stop_reason.is_none(), "{:?}", tr.stop_reason);
    assert!((tr.t_range().1 - 3.0).abs() < 1e-12);
    let mut worst = 0.0f64;
    for s in &tr.samples {
        let (a, b) = h7_metric(s.t);
        for i in 0..7 {
            for j in 0..7 {
                let want = match (i == j, i) {
                    (false, _) => 0.0,
                    (true, 6) => b,
                    (true, _) => a,
                };
                worst = worst.max((s.metric[(i, j)] - want).abs() / want.max(b));
            }
        }
    }
    println!(
        "h7 hitchin: {} steps, {elapsed:.2}s, max rel err {worst:e}",
        tr.samples.len()
    );
    assert!(worst <= 1e-6, "{worst:e}");
    assert!(elapsed <= 10.0, "{elapsed}s");

    // Off-grid evaluation and phi itself.
    for t in [0.123, 1.7, 2.95] {
        let (a, b) = h7_metric(t);
        let g = tr.metric_at(t).unwrap();
        assert!((g[(0, 0)] - a).abs() / a < 1e-6 && (g[(6, 6)] - b).abs() / b < 1e-6);
        let FlowStructure::G2(s) = tr.structure_at(t).unwrap() else {
            panic!()
        };
        let c = 2.5 * t + 1.0;
        let om7 = model::omega0(7)
            .wedge(&model::alpha0())
            .scaled(c.powf(-0.2));
        let want = &om7 + &model::rho0(7).scaled(c.powf(0.6));
        assert!((&s.phi - &want).max_abs() < 1e-6, "t = {t}");
    }
    let jet = tr.metric_jet(1.0).unwrap();
    // d/dt (5t/2 + 1)^(2/5) = (5t/2 + 1)^(-3/5).
    assert!((jet.dg[(0, 0)] - 3.5f64.powf(-0.6)).abs() < 1e-6);
    assert!((jet.ddg[(0, 0)] + 1.5 * 3.5f64.powf(-1.6)).abs() < 1e-6);

    let rep = assemble_8d(&tr).unwrap();
    println!("h7 assembly residual {:e}", rep.max_residual);
    assert!(rep.max_residual <= 1e-8);
}

use hypoflow::algebra::{Form, LieAlgebra};
use hypoflow::flow::{
    diagonal_solve, f_lambda_mu, hat_flow_residuals, hypo_invariant_closed,
    hypo_invariant_trajectory, hypo_reduced_2v1v8v12, FBranch, FlowMethod, FlowTrajectory,
};
use hypoflow::gstruct::{su3_to_g2, Su3Structure};
use hypoflow::torsion::hypo_torsion;

fn su3_at(tr: &FlowTrajectory, t: f64) -> Su3Structure {
    match tr.structure_at(t).unwrap() {
        FlowStructure::Su3(s) => s,
        FlowStructure::G2(_) => panic!("expected an SU(3)-structure"),
    }
}

fn max_rel(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax()
}

/// Largest relative metric difference of two trajectories over `n` interior points of the common range.
fn agreement(a: &FlowTrajectory, b: &FlowTrajectory, n: usize) -> f64 {
    let (a0, a1) = a.t_range();
    let (b0, b1) = b.t_range();
    let (lo, hi) = (a0.max(b0), a1.min(b1));
    assert!(hi > lo, "no common range");
    (0..=n)
        .map(|k| lo + (hi - lo) * k as f64 / n as f64)
        .map(|t| max_rel(&a.metric_at(t).unwrap(), &b.metric_at(t).unwrap()))
        .fold(0.0, f64::max)
}

#[test]
fn abelian_trajectories_are_constant() {
    let alg = LieAlgebra::abelian(7);
    let g2 = hypoflow::gstruct::g2_metric(&model::phi0()).unwrap();
    let tr = hitchin_integrate(&alg, &g2, 2.0, &FlowOptions::default()).unwrap();
    for s in &tr.samples {
        assert!((&s.metric - nalgebra::DMatrix::<f64>::identity(7, 7)).amax() < 1e-14);
    }
    assert_eq!(assemble_8d(&tr).unwrap().max_residual, 0.0);

    let s0 = catalog("parallel-nonideal").unwrap().su3.unwrap();
    let red = hypo_reduced_2v1v8v12(&alg, &s0, 2.0, &FlowOptions::default()).unwrap();
    for t in [0.0, 0.7, 2.0] {
        let s = su3_at(&red, t);
        assert!((&s.alpha - &s0.alpha).max_abs() < 1e-12);
        assert!((&s.omega - &s0.omega).max_abs() < 1e-12);
        assert!((&s.rho - &s0.rho).max_abs() < 1e-12);
    }
    assert!(assemble_8d(&red).unwrap().max_residual < 1e-12);
}

#[test]
fn reduced_flow_on_h7_matches_the_closed_form() {
    let fx = catalog("h7-cocal").unwrap();
    let s0 = fx.su3.unwrap();
    let opts = FlowOptions::default();
    let red = hypo_reduced_2v1v8v12(&fx.alg, &s0, 3.0, &opts).unwrap();
    assert_eq!(red.method, FlowMethod::Reduced);
    for s in &red.samples {
        let (a, b) = h7_metric(s.t);
        assert!(
            (s.metric[(0, 0)] - a).abs() / a < 1e-6 && (s.metric[(6, 6)] - b).abs() / b < 1e-6,
            "t = {}",
            s.t
        );
    }
    assert!(red.max_normalization_residual() <= 1e-8);

    let hit = hitchin_integrate(&fx.alg, &fx.g2.unwrap(), 3.0, &opts).unwrap();
    let agree = agreement(&hit, &red, 40);
    println!("h7 hitchin vs reduced {agree:e}");
    assert!(agree <= 1e-6);

    // The same family from the invariant-torsion closed form with (lambda1, lambda2) = (-1, 0).
    let closed = hypo_invariant_trajectory(&fx.alg, &s0, 3.0, &opts).unwrap();
    assert!(agreement(&closed, &red, 40) <= 1e-6);
    for t in [0.5, 2.0] {
        let x = closed.closed_parameter(t).unwrap().unwrap();
        assert!((x - ((2.5 * t + 1.0f64).powf(0.4) - 1.0)).abs() < 1e-8);
    }
    let rep = assemble_8d(&red).unwrap();
    println!("h7 reduced assembly residual {:e}", rep.max_residual);
    assert!(rep.max_residual <= 1e-8);
    assert!(assemble_8d(&closed).unwrap().max_residual <= 1e-8);
}

#[test]
fn closed_vector_field_keeps_omega_fixed() {
    let fx = catalog("class-ii(1,0,0,0,0,0)").unwrap();
    let s0 = fx.su3.unwrap();
    assert!(fx.alg.d(&s0.alpha).max_abs() < 1e-14);
    let opts = FlowOptions::default();
    let red = hypo_reduced_2v1v8v12(&fx.alg, &s0, 1.5, &opts).unwrap();
    for t in [0.3, 0.9, 1.5] {
        let s = su3_at(&red, t);
        assert!(
            (&s.omega - &s0.omega).max_abs() < 1e-12,
            "omega moved at t = {t}"
        );
        let c = s.alpha.coeffs()[6];
        assert!((&s.alpha - &s0.alpha.scaled(c)).max_abs() < 1e-12 && c > 0.0);
    }
    let hit = hitchin_integrate(&fx.alg, &su3_to_g2(&s0).unwrap(), 1.5, &opts).unwrap();
    let agree = agreement(&hit, &red, 30);
    println!("class-ii hitchin vs reduced {agree:e}");
    assert!(agree <= 1e-6);
    assert!(red.max_normalization_residual() <= 1e-8);
    assert!(assemble_8d(&red).unwrap().max_residual <= 1e-8);
}

#[test]
fn hat_flow_identities_hold_along_reduced_trajectories() {
    let opts = FlowOptions::default();
    for id in [
        "h7-cocal",
        "class-ii",
        "class-ii(2,1,-1,0.5,0.3,0.7)",
        "invtors-1",
        "invtors-2",
    ] {
        let fx = catalog(id).unwrap();
        let s0 = fx.su3.unwrap();
        let red = hypo_reduced_2v1v8v12(&fx.alg, &s0, 0.2, &opts).unwrap();
        let (t0, t1) = red.t_range();
        let mut worst = (0.0f64, 0.0f64);
        for k in 1..8 {
            let t = t0 + (t1 - t0) * k as f64 / 8.0;
            let r = hat_flow_residuals(&red, t).unwrap();
            worst = (worst.0.max(r.j), worst.1.max(r.tau_hat));
        }
        println!("{id}: J' defect {:e}, tau^' defect {:e}", worst.0, worst.1);
        assert!(worst.0 <= 1e-7 && worst.1 <= 1e-7, "{id}");
        assert!(red.max_normalization_residual() <= 1e-8, "{id}");
    }
}

#[test]
fn invariant_torsion_blow_down_is_truncated() {
    let fx = catalog("invtors-1").unwrap();
    let s0 = fx.su3.unwrap();
    let torsion = hypo_torsion(&fx.alg, &s0, 1e-9).unwrap();
    assert!((torsion.lambda1 + 2.0).abs() < 1e-9 && (torsion.lambda2 + 4.0).abs() < 1e-9);
    let opts = FlowOptions::default();
    let closed = hypo_invariant_trajectory(&fx.alg, &s0, -1.0, &opts).unwrap();
    let hit = hitchin_integrate(&fx.alg, &su3_to_g2(&s0).unwrap(), -1.0, &opts).unwrap();
    assert!(hit.stop_reason.is_some() && closed.stop_reason.is_some());
    println!("hitchin stop: {:?}", hit.stop_reason);
    println!("closed stop: {:?}", closed.stop_reason);
    let (t_end, _) = hit.t_range();
    assert!(t_end > -1.0);
    // x(t) approaches the blow-down at x = -1/2 where 1 + 2x vanishes.
    let (c0, _) = closed.t_range();
    let x_end = closed.closed_parameter(c0).unwrap().unwrap();
    println!("closed ends at t = {c0}, x = {x_end}; hitchin ends at t = {t_end}");
    assert!(x_end + 0.5 < 1e-3);
    let agree = agreement(&hit, &closed, 40);
    println!("invtors-1 hitchin vs closed {agree:e}");
    assert!(agree <= 1e-6);
}

#[test]
fn scalar_reduction_for_invariant_inputs() {
    // For class 2V1 + V8 the trajectory is (x' alpha0, omega0 - x d alpha0, (y / x') psi0)
    // with x' = y / s and y' = lambda2 s, where s^2 = 2 phi(omega0 - x d alpha0) / phi(psi0).
    let opts = FlowOptions::default();
    for id in ["invtors-1", "invtors-2", "h7-cocal"] {
        let fx = catalog(id).unwrap();
        let s0 = fx.su3.unwrap();
        let l2 = hypo_torsion(&fx.alg, &s0, 1e-9).unwrap().lambda2;
        let red = hypo_reduced_2v1v8v12(&fx.alg, &s0, 0.1, &opts).unwrap();
        let da = fx.alg.d(&s0.alpha);
        let top = |w: &Form| w.wedge(w).wedge(w).wedge(&s0.alpha).top();
        let data = |t: f64| {
            let s = su3_at(&red, t);
            let xp = s.alpha.coeffs()[6] / s0.alpha.coeffs()[6];
            let diff = &s0.omega - &s.omega;
            let x = diff
                .coeffs()
                .iter()
                .zip(da.coeffs())
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / da.norm().powi(2);
            let scale = (top(&(&s0.omega - &da.scaled(x))) / top(&s0.omega)).sqrt();
            let y = xp * scale;
            // psi(t) = (y / x') psi0.
            let psi_err = (&s.rho - &s0.rho.scaled(y / xp))
                .max_abs()
                .max((&s.rho_hat - &s0.rho_hat.scaled(y / xp)).max_abs());
            (x, xp, y, scale, psi_err)
        };
        let h = 5e-3;
        for t in [0.02, 0.05, 0.08] {
            let (_, xp, y, scale, psi_err) = data(t);
            let y_at = |k: f64| data(t + k * h).2;
            let dy = (y_at(-2.0) - y_at(2.0) + 8.0 * (y_at(1.0) - y_at(-1.0))) / (12.0 * h);
            assert!(
                (xp - y / scale).abs() < 1e-7 && psi_err < 1e-7,
                "{id} {psi_err:e}"
            );
            assert!(
                (dy - l2 * scale).abs() < 1e-7,
                "{id}: y' = {dy}, lambda2 s = {}",
                l2 * scale
            );
        }
    }
}

#[test]
fn f_lambda_mu_matches_direct_integration() {
    // Classical RK4 on f' = -(lambda f^2 + mu), independent of the library integrator.
    fn rk4(lambda: f64, mu: f64, y1: f64, n: usize) -> f64 {
        let h = y1 / n as f64;
        let g = |f: f64| -(lambda * f * f + mu);
        let mut f = 1.0;
        for _ in 0..n {
            let k1 = g(f);
            let k2 = g(f + 0.5 * h * k1);
            let k3 = g(f + 0.5 * h * k2);
            let k4 = g(f + h * k3);
            f += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        f
    }
    let cases = [
        ((1.0, 1.0), FBranch::Tan),
        ((1.0, -4.0), FBranch::Tanh),
        ((-4.0, 1.0), FBranch::Coth),
        ((2.0, 0.0), FBranch::Reciprocal),
        ((0.0, 2.0), FBranch::Linear),
    ];
    for ((l, m), branch) in cases {
        let f = f_lambda_mu(l, m);
        assert_eq!(f.branch, branch, "({l}, {m})");
        let (a, b) = f.domain;
        let (a, b) = (a.max(-50.0), b.min(50.0));
        let (lo, hi) = (a + 0.1 * (b - a), b - 0.1 * (b - a));
        let mut worst = 0.0f64;
        for k in 0..=20 {
            let y = lo + (hi - lo) * k as f64 / 20.0;
            let n = ((y.abs() / 1e-4) as usize).max(1);
            worst = worst.max((f.value(y) - rk4(l, m, y, n)).abs());
        }
        println!("f_({l},{m}) on [{lo:.3}, {hi:.3}]: {worst:e}");
        assert!(worst <= 1e-9, "({l}, {m}): {worst:e}");
    }
}

#[test]
fn invariant_closed_forms() {
    let (_, fam) = hypo_invariant_closed(-1.0, 0.0).unwrap();
    let fam = fam.unwrap();
    for x in [-0.3, 0.0, 0.8, 3.0] {
        assert!((fam.f(x) - 1.0f64).abs() < 1e-15);
    }
    let (metric, fam) = hypo_invariant_closed(-2.0, -4.0).unwrap();
    let fam = fam.unwrap();
    let hi: f64 = (2f64.powf(0.25) - 1.0) / 2.0;
    assert!((fam.domain.0 + 0.5).abs() < 1e-15 && (fam.domain.1 - hi).abs() < 1e-15);
    for x in [-0.4f64, -0.1, 0.0, 0.09] {
        let u = 1.0 + 2.0 * x;
        let q = 2.0 - u.powi(4);
        assert!((fam.f(x) - q.sqrt()).abs() < 1e-14);
        let g = metric.metric(x);
        assert!((g[(0, 0)] - u).abs() < 1e-14 && (g[(6, 6)] - q / u.powi(3)).abs() < 1e-13);
        assert!((metric.lapse(x) - u.powi(3) / q).abs() < 1e-12);
    }
    let (metric, fam) = hypo_invariant_closed(0.0, 2.0).unwrap();
    assert!(fam.is_none());
    assert!((metric.metric(0.5)[(6, 6)] - 4.0).abs() < 1e-15);
    assert!(hypo_invariant_closed(1.0, -1.0).is_err());
}

#[test]
fn diagonal_flow_matches_its_closed_form_and_the_general_flow() {
    let opts = FlowOptions::default();
    let sol = diagonal_solve(0.0, [0.0; 3], [3.0, 2.0, 1.0], 0.25, &opts).unwrap();
    assert!(sol.eligible);
    assert!(
        (&sol.trajectory.samples[0].metric - nalgebra::DMatrix::<f64>::identity(7, 7)).amax()
            < 1e-15
    );
    let iso = sol.isometry_residual();
    println!("diagonal isometry residual {iso:e}");
    assert!(iso <= 1e-6);
    // The printed metric for lambda = 0.
    let mu = [3.0, 2.0, 1.0];
    for &(_, x) in sol.x.iter().step_by(5) {
        let g = sol.closed.metric(x);
        let prod: f64 = mu.iter().map(|m| 1.0 - m * x).product();
        for i in 0..3 {
            assert!((g[(2 * i, 2 * i)] - 1.0 / (1.0 - mu[i] * x)).abs() < 1e-12);
            assert!((g[(2 * i + 1, 2 * i + 1)] - (1.0 - mu[i] * x)).abs() < 1e-12);
        }
        assert!((g[(6, 6)] - prod).abs() < 1e-12 && (sol.closed.lapse(x) - prod).abs() < 1e-12);
    }
    // The factor 1 - 3x reaches 0 at finite time, so the full run is truncated there.
    assert!(sol.trajectory.stop_reason.is_some());
    let x_end = sol.x.last().unwrap().1;
    assert!(x_end < 1.0 / 3.0 && x_end > 1.0 / 3.0 - 1e-3, "{x_end}");

    let regular = diagonal_solve(0.0, [0.0; 3], [3.0, 2.0, 1.0], 0.16, &opts).unwrap();
    assert!(regular.trajectory.stop_reason.is_none());
    let fx = catalog("diagonal").unwrap();
    let hit = hitchin_integrate(&fx.alg, &fx.g2.unwrap(), 0.16, &opts).unwrap();
    let agree = agreement(&hit, &regular.trajectory, 25);
    println!("diagonal vs hitchin {agree:e}");
    assert!(agree <= 1e-8);
    let rep = assemble_8d(&regular.trajectory).unwrap();
    println!("diagonal assembly {:e}", rep.max_residual);
    assert!(rep.max_residual <= 1e-8);

    let reducible = diagonal_solve(0.0, [1.0, 0.0, 0.0], [-1.0, 2.0, 1.0], 0.2, &opts).unwrap();
    assert!(!reducible.eligible);
    assert!(reducible.isometry_residual() <= 1e-6);
}

#[test]
fn assembly_detects_a_corrupted_sample() {
    let fx = catalog("h7-cocal").unwrap();
    let mut tr = hitchin_integrate(&fx.alg, &fx.g2.unwrap(), 1.0, &FlowOptions::default()).unwrap();
    let k = tr.samples.len() / 2;
    let g2 = tr.samples[k].g2.as_mut().unwrap();
    let mut phi = g2.phi.clone();
    phi.add_term(&[0, 1, 6], 0.01);
    *g2 = hypoflow::gstruct::g2_metric(&phi).unwrap();
    let rep = assemble_8d(&tr).unwrap();
    println!("corrupted residual {:e}", rep.max_residual);
    assert!(rep.max_residual > 1e-3);
    let bad = rep.residuals.iter().filter(|r| r.1 > 1e-3).count();
    assert_eq!(bad, 1);
}

#[test]
fn reduced_jets_hold_up_to_the_ends() {
    let fx = catalog("h7-cocal").unwrap();
    let red =
        hypo_reduced_2v1v8v12(&fx.alg, &fx.su3.unwrap(), 1.0, &FlowOptions::default()).unwrap();
    for t in [0.0, 0.004, 0.5, 0.996, 1.0] {
        let jet = red.metric_jet(t).unwrap();
        let c = 2.5 * t + 1.0f64;
        // (5t/2 + 1)^(2/5) and its first two derivatives.
        let (d1, d2) = (c.powf(-0.6), -1.5 * c.powf(-1.6));
        assert!(
            (jet.dg[(0, 0)] - d1).abs() < 1e-8,
            "t = {t}: {} vs {d1}",
            jet.dg[(0, 0)]
        );
        assert!(
            (jet.ddg[(0, 0)] - d2).abs() < 1e-7,
            "t = {t}: {} vs {d2}",
            jet.ddg[(0, 0)]
        );
    }
}
