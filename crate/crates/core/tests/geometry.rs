use std::sync::Arc;

use nalgebra::DMatrix;
use num_dual::{Dual2_64, DualNum};

use hypoflow::algebra::LieAlgebra;
use hypoflow::construct::catalog;
use hypoflow::flow::{
    diagonal_solve, hitchin_integrate, hypo_invariant_trajectory, ClosedFormMetric, FlowOptions,
    FlowTrajectory,
};
use hypoflow::geometry::{
    curvature, holonomy_estimate, levi_civita, CohomOneMetric, HolonomyOptions, HolonomyReport,
    Verdict,
};

fn e7() -> Vec<f64> {
    let mut a = vec![0.0; 7];
    a[6] = 1.0;
    a
}

fn h7_trajectory() -> FlowTrajectory {
    let fx = catalog("h7-cocal").unwrap();
    hitchin_integrate(&fx.alg, &fx.g2.unwrap(), 3.0, &FlowOptions::default()).unwrap()
}

fn print_report(name: &str, r: &HolonomyReport) {
    println!(
        "{name}: dim {} margin {:?} su4 {:?} intrinsic {:?} sp2 {:?} spin7 {:?} commutant {} forms {:?} ricci {:e} verdict {}",
        r.dimension,
        r.margin,
        r.su4.violation,
        r.su4_intrinsic.violation,
        r.sp2.violation,
        r.spin7.violation,
        r.commutant_dim,
        (r.parallel_forms.kernel_dim, r.parallel_forms.known_dim, r.parallel_forms.extra_dim),
        r.ricci_max,
        r.verdict.label()
    );
}

fn spd(n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.1);
    &a * a.transpose() + DMatrix::identity(n, n)
}

#[test]
fn flat_product_has_trivial_holonomy() {
    let m = CohomOneMetric::constant(LieAlgebra::abelian(7), spd(7));
    let conn = levi_civita(&m, 0.3).unwrap();
    assert!(conn.gamma.iter().all(|g| g.amax() == 0.0));
    let curv = curvature(&m, 0.3).unwrap();
    assert!(curv.riemann.iter().all(|r| r.amax() == 0.0));
    let r = holonomy_estimate(&m, &HolonomyOptions::uniform(0.0, 1.0, 3)).unwrap();
    print_report("flat", &r);
    assert_eq!(r.dimension, 0);
    assert_eq!(r.verdict, Verdict::Flat);
    assert_eq!(r.parallel_forms.kernel_dim, 28);
}

#[test]
fn too_few_samples_are_rejected() {
    let m = CohomOneMetric::constant(LieAlgebra::abelian(7), spd(7));
    assert!(holonomy_estimate(&m, &HolonomyOptions::uniform(0.0, 1.0, 2)).is_err());
}

/// A diagonal metric `sum h_i(s) e^i (x) e^i + ds^2` on the h7 algebra.
fn diagonal_metric(h: Vec<Arc<dyn Fn(Dual2_64) -> Dual2_64 + Send + Sync>>) -> CohomOneMetric {
    let alg = catalog("h7-cocal").unwrap().alg;
    let lapse: Arc<dyn Fn(Dual2_64) -> Dual2_64 + Send + Sync> =
        Arc::new(|_| Dual2_64::from_re(1.0));
    CohomOneMetric::from_closed(
        alg,
        ClosedFormMetric::diagonal("test", vec![], (-0.2, 2.0), h, lapse),
    )
}

/// `R(d/ds, E_i) d/ds` along `E_i` and the displayed formula for a diagonal metric.
fn time_curvature(m: &CohomOneMetric, s: f64) -> Vec<(f64, f64)> {
    let curv = curvature(m, s).unwrap();
    let jet = m.jet(s).unwrap();
    (0..7)
        .map(|i| {
            let (h, dh, ddh) = (jet.g[(i, i)], jet.dg[(i, i)], jet.ddg[(i, i)]);
            (
                curv.operator(7, i)[(i, 7)],
                (2.0 * h * ddh - dh * dh) / (4.0 * h * h),
            )
        })
        .collect()
}

#[test]
fn diagonal_connection_and_curvature_formulas() {
    let h: Vec<Arc<dyn Fn(Dual2_64) -> Dual2_64 + Send + Sync>> = (0..7)
        .map(|i| {
            let k = 0.3 + 0.1 * i as f64;
            Arc::new(move |s: Dual2_64| (s * k).exp() + s * s * 0.5 + 1.0)
                as Arc<dyn Fn(Dual2_64) -> Dual2_64 + Send + Sync>
        })
        .collect();
    let m = diagonal_metric(h);
    for s in [0.0, 0.4, 1.1] {
        let conn = levi_civita(&m, s).unwrap();
        assert!(conn.compatibility_residual() <= 1e-9 && conn.torsion_residual() <= 1e-9);
        let jet = m.jet(s).unwrap();
        for i in 0..7 {
            let want = jet.dg[(i, i)] / (2.0 * jet.g[(i, i)]);
            assert!((conn.gamma[7][(i, i)] - want).abs() < 1e-12);
        }
        let curv = curvature(&m, s).unwrap();
        assert!(
            curv.symmetry_residual() <= 1e-8,
            "{:e}",
            curv.symmetry_residual()
        );
        for (got, want) in time_curvature(&m, s) {
            assert!(
                (got - want).abs() <= 1e-6 * (1.0 + want.abs()),
                "{got} vs {want}"
            );
        }
    }
}

#[test]
fn squares_of_affine_functions_have_no_time_curvature() {
    let h: Vec<Arc<dyn Fn(Dual2_64) -> Dual2_64 + Send + Sync>> = (0..7)
        .map(|i| {
            let (a, b) = (0.5 + 0.2 * i as f64, 1.0 + 0.1 * i as f64);
            Arc::new(move |s: Dual2_64| (s * a + b).powi(2))
                as Arc<dyn Fn(Dual2_64) -> Dual2_64 + Send + Sync>
        })
        .collect();
    let m = diagonal_metric(h);
    for s in [0.0, 0.7, 1.5] {
        for (got, _) in time_curvature(&m, s) {
            assert!(got.abs() <= 1e-9, "{got:e}");
        }
    }
}

#[test]
fn diagonal_trajectory_matches_the_curvature_formula() {
    let sol = diagonal_solve(
        0.0,
        [0.0; 3],
        [3.0, 2.0, 1.0],
        0.16,
        &FlowOptions::default(),
    )
    .unwrap();
    let m = CohomOneMetric::from_trajectory(&sol.trajectory);
    for s in [0.0, 0.05, 0.1, 0.15] {
        let jet = m.jet(s).unwrap();
        assert!((&jet.g - DMatrix::from_diagonal(&jet.g.diagonal())).amax() < 1e-12);
        for (got, want) in time_curvature(&m, s) {
            assert!((got - want).abs() <= 1e-6, "{got} vs {want}");
        }
    }
}

#[test]
fn h7_connection_and_ricci_flatness() {
    let tr = h7_trajectory();
    let m = CohomOneMetric::from_trajectory(&tr);
    let conn = levi_civita(&m, 1.0).unwrap();
    println!(
        "h7 t=1: compatibility {:e}, torsion {:e}",
        conn.compatibility_residual(),
        conn.torsion_residual()
    );
    assert!(conn.compatibility_residual() <= 1e-9 && conn.torsion_residual() <= 1e-9);
    assert!(m.jet_consistency(1.0, 1e-3).unwrap() <= 1e-6);
    for t in [0.0, 1.0, 2.0] {
        let curv = curvature(&m, t).unwrap();
        let ric = curv.ricci_orthonormal().amax();
        println!(
            "h7 t={t}: ricci {ric:e}, symmetries {:e}",
            curv.symmetry_residual()
        );
        assert!(ric <= 1e-6 && curv.symmetry_residual() <= 1e-8);
        assert!(curv.riemann.iter().any(|r| r.amax() > 1e-3));
    }
    assert!(levi_civita(&m, 3.5).is_err());
}

#[test]
fn h7_holonomy_is_su4() {
    let m = CohomOneMetric::from_trajectory(&h7_trajectory()).with_reeb_covector(&e7());
    let r = holonomy_estimate(&m, &HolonomyOptions::uniform(0.0, 3.0, 4)).unwrap();
    print_report("h7", &r);
    assert_eq!(r.dimension, 15);
    assert!(r.su4.violation.unwrap() <= 1e-7 && r.su4_intrinsic.violation.unwrap() <= 1e-7);
    assert!(!r.sp2.contained);
    assert_eq!(r.verdict, Verdict::Su4);
    assert_eq!(
        (r.parallel_forms.known_dim, r.parallel_forms.extra_dim),
        (1, 0)
    );
    assert!(r.parallel_forms.witness.is_none());
    let json = serde_json::to_string(&r).unwrap();
    let back: HolonomyReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
}

#[test]
fn invariant_torsion_family_has_holonomy_su4() {
    let fx = catalog("invtors-1").unwrap();
    let tr = hypo_invariant_trajectory(&fx.alg, &fx.su3.unwrap(), 0.05, &FlowOptions::default())
        .unwrap();
    let m = CohomOneMetric::from_closed_trajectory(&tr).unwrap();
    for x in [-0.4, -0.2, 0.0, 0.05, 0.09] {
        let curv = curvature(&m, x).unwrap();
        let ric = curv.ricci_orthonormal().amax();
        println!("invtors x={x}: ricci {ric:e}");
        assert!(ric <= 1e-6);
    }
    let r = holonomy_estimate(&m, &HolonomyOptions::uniform(-0.4, 0.09, 5)).unwrap();
    print_report("invtors-1", &r);
    assert_eq!(r.verdict, Verdict::Su4);
}

#[test]
fn diagonal_holonomy_su4_and_reducible_case() {
    let opts = FlowOptions::default();
    let sol = diagonal_solve(0.0, [0.0; 3], [3.0, 2.0, 1.0], 0.16, &opts).unwrap();
    let m = CohomOneMetric::from_trajectory(&sol.trajectory).with_reeb_covector(&e7());
    let r = holonomy_estimate(&m, &HolonomyOptions::uniform(0.0, 0.16, 4)).unwrap();
    print_report("diagonal", &r);
    assert_eq!(r.verdict, Verdict::Su4);

    let red = diagonal_solve(0.0, [1.0, 0.0, 0.0], [-1.0, 2.0, 1.0], 0.2, &opts).unwrap();
    let m = CohomOneMetric::from_trajectory(&red.trajectory).with_reeb_covector(&e7());
    let r = holonomy_estimate(&m, &HolonomyOptions::uniform(0.0, 0.2, 4)).unwrap();
    print_report("reducible", &r);
    assert!(r.dimension < 15);
    assert!(r.parallel_forms.witness.is_some());
    assert_eq!(r.verdict, Verdict::ReducibleSuspected);
}

#[test]
fn adding_samples_never_lowers_the_dimension() {
    let sol = diagonal_solve(
        0.0,
        [0.0; 3],
        [3.0, 2.0, 1.0],
        0.16,
        &FlowOptions::default(),
    )
    .unwrap();
    let m = CohomOneMetric::from_trajectory(&sol.trajectory);
    let mut samples = vec![0.0, 0.08, 0.16];
    let mut last = 0;
    for extra in [0.04, 0.12, 0.02] {
        let opts = HolonomyOptions {
            samples: samples.clone(),
            derivatives: false,
            ..Default::default()
        };
        let d = holonomy_estimate(&m, &opts).unwrap().dimension;
        assert!(d >= last, "{d} < {last}");
        last = d;
        samples.push(extra);
    }
}
