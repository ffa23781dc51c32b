use nalgebra::DMatrix;
use num_dual::first_derivative;
use proptest::prelude::*;

use hypoflow::algebra::{binomial, Form};
use hypoflow::construct::{build_class_ii, catalog};
use hypoflow::flow::f_lambda_mu;
use hypoflow::gstruct::{model, stable_three_form_data, su3_to_g2, validate_su3};
use hypoflow::io::parse_form_degree;
use hypoflow::torsion::hypo_torsion;

fn form(dim: usize, degree: usize) -> impl Strategy<Value = Form> {
    prop::collection::vec(-1.0..1.0f64, binomial(dim, degree))
        .prop_map(move |c| Form::from_coeffs(dim, degree, c))
}

/// `I + E` with small entries, so the determinant stays positive.
fn near_identity(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-0.15..0.15f64, n * n)
        .prop_map(move |e| DMatrix::identity(n, n) + DMatrix::from_vec(n, n, e))
}

fn spd(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0..1.0f64, n * n).prop_map(move |e| {
        let a = DMatrix::from_vec(n, n, e);
        &a * a.transpose() + DMatrix::identity(n, n) * 0.5
    })
}

fn sign(p: usize) -> f64 {
    if p % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

const ALGEBRAS: [&str; 5] = [
    "h7-cocal",
    "invtors-1",
    "invtors-2",
    "class-ii(2,1,-1,0.5,0.3,0.7)",
    "diagonal",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn d_squared_vanishes_in_every_basis(k in 0..ALGEBRAS.len(), a in near_identity(7)) {
        let alg = catalog(ALGEBRAS[k]).unwrap().alg.change_basis(&a).unwrap();
        let scale = 1.0 + alg.structure_constants().iter().fold(0.0f64, |m, c| m.max(c.abs()));
        for p in 0..6 {
            let dd = alg.d_matrix(p + 1) * alg.d_matrix(p);
            prop_assert!(dd.amax() <= 1e-12 * scale * scale, "degree {p}: {:e}", dd.amax());
        }
    }

    #[test]
    fn d_is_a_graded_derivation(k in 0..ALGEBRAS.len(), a in form(7, 2), b in form(7, 3)) {
        let alg = catalog(ALGEBRAS[k]).unwrap().alg;
        let lhs = alg.d(&a.wedge(&b));
        let rhs = &alg.d(&a).wedge(&b) + &a.wedge(&alg.d(&b)).scaled(sign(a.degree()));
        prop_assert!((&lhs - &rhs).max_abs() <= 1e-12 * (1.0 + lhs.max_abs()));
        let c = Form::from_coeffs(7, 1, b.coeffs()[..7].to_vec());
        let lhs = alg.d(&c.wedge(&a));
        let rhs = &alg.d(&c).wedge(&a) - &c.wedge(&alg.d(&a));
        prop_assert!((&lhs - &rhs).max_abs() <= 1e-12 * (1.0 + lhs.max_abs()));
    }

    #[test]
    fn interior_product_is_a_graded_derivation(
        v in prop::collection::vec(-1.0..1.0f64, 7), a in form(7, 3), b in form(7, 2),
    ) {
        let lhs = a.wedge(&b).interior(&v);
        let rhs = &a.interior(&v).wedge(&b) + &a.wedge(&b.interior(&v)).scaled(sign(a.degree()));
        prop_assert!((&lhs - &rhs).max_abs() <= 1e-12 * (1.0 + lhs.max_abs()));
    }

    #[test]
    fn star_star_sign_law(g in spd(7), p in 0usize..=7, seed in form(7, 7)) {
        let n = 7;
        let a = Form::from_coeffs(n, p, (0..binomial(n, p)).map(|i| seed.coeffs()[0] + i as f64 * 0.37 - 1.0).collect());
        let back = a.hodge_star(&g, 1.0).hodge_star(&g, 1.0);
        let want = a.scaled(sign(p * (n - p)));
        prop_assert!((&back - &want).max_abs() <= 1e-10 * (1.0 + a.max_abs()));
    }

    #[test]
    fn star_star_sign_law_in_even_dimension(g in spd(6), a in form(6, 3), b in form(6, 2)) {
        let back = a.hodge_star(&g, 1.0).hodge_star(&g, 1.0);
        prop_assert!((&back + &a).max_abs() <= 1e-10 * (1.0 + a.max_abs()));
        let back = b.hodge_star(&g, -1.0).hodge_star(&g, -1.0);
        prop_assert!((&back - &b).max_abs() <= 1e-10 * (1.0 + b.max_abs()));
    }

    #[test]
    fn hodge_star_is_natural(g in spd(7), a in near_identity(7), x in form(7, 3)) {
        // Pulling back by A maps the metric g to A^T g A; orientation is kept since det A > 0.
        let pulled_metric = a.transpose() * &g * &a;
        let lhs = x.pullback(&a).hodge_star(&pulled_metric, 1.0);
        let rhs = x.hodge_star(&g, 1.0).pullback(&a);
        prop_assert!((&lhs - &rhs).max_abs() <= 1e-10 * (1.0 + rhs.max_abs()));
    }

    #[test]
    fn su3_structures_transform_naturally(a in near_identity(7)) {
        let pb = |f: Form| f.pullback(&a);
        let s = validate_su3(&pb(model::alpha0()), &pb(model::omega0(7)), &pb(model::rho0(7)), 1e-9).unwrap();
        let want = a.transpose() * &a;
        prop_assert!((&s.metric - &want).amax() <= 1e-10 * want.amax());
        prop_assert!(s.normalization_residual().abs() <= 1e-10);
        let g2 = su3_to_g2(&s).unwrap();
        prop_assert!((&g2.metric - &s.metric).amax() <= 1e-10 * want.amax());
    }

    #[test]
    fn stable_forms_have_a_complex_structure(a in near_identity(6)) {
        let rho = model::rho0(6).pullback(&a);
        let d = stable_three_form_data(&rho, 1.0).unwrap();
        prop_assert!((&d.j * &d.j + DMatrix::identity(6, 6)).amax() <= 1e-10);
        let hat_hat = stable_three_form_data(&d.rho_hat, 1.0).unwrap().rho_hat;
        prop_assert!((&hat_hat + &rho).max_abs() <= 1e-10 * rho.max_abs());
    }

    #[test]
    fn torsion_is_natural_under_basis_change(k in 0..4usize, a in near_identity(7)) {
        let fx = catalog(ALGEBRAS[k]).unwrap();
        let s = fx.su3.unwrap();
        let t = hypo_torsion(&fx.alg, &s, 1e-9).unwrap();
        let alg = fx.alg.change_basis(&a).unwrap();
        let pb = |f: &Form| f.pullback(&a);
        let s2 = validate_su3(&pb(&s.alpha), &pb(&s.omega), &pb(&s.rho), 1e-9).unwrap();
        let t2 = hypo_torsion(&alg, &s2, 1e-9).unwrap();
        let scale = 1.0 + t.lambda1.abs() + t.lambda2.abs();
        prop_assert!((t.lambda1 - t2.lambda1).abs() <= 1e-10 * scale);
        prop_assert!((t.lambda2 - t2.lambda2).abs() <= 1e-10 * scale);
        prop_assert!((&pb(&t.beta) - &t2.beta).max_abs() <= 1e-10 * scale);
        prop_assert!((&pb(&t.omega_tilde) - &t2.omega_tilde).max_abs() <= 1e-10 * scale);
        prop_assert!((&pb(&t.gamma) - &t2.gamma).max_abs() <= 1e-10 * scale);
        // Primitivity of omega~, as <omega~, omega> = 0 and omega~ ^ omega^2 = 0.
        let om = &s2.omega;
        let inner = t2.omega_tilde.inner(om, &s2.metric);
        let wedge = t2.omega_tilde.wedge(om).wedge(om).wedge(&s2.alpha).top();
        prop_assert!(inner.abs() <= 1e-12 * scale && wedge.abs() <= 1e-12 * scale);
    }

    #[test]
    fn class_ii_builder_outputs(a in 0.2..2.0f64, p in prop::collection::vec(-2.0..2.0f64, 5)) {
        let (alg, s) = build_class_ii(a, [p[0], p[1], p[2], p[3], p[4]]).unwrap();
        prop_assert!(alg.jacobi_residual() <= 1e-12);
        // [g, ker alpha] stays in ker alpha.
        for i in 0..7 {
            for j in 0..6 {
                let mut x = vec![0.0; 7];
                let mut y = vec![0.0; 7];
                x[i] = 1.0;
                y[j] = 1.0;
                let z = alg.bracket(&x, &y);
                prop_assert!(s.alpha.coeffs().iter().zip(&z).map(|(u, w)| u * w).sum::<f64>().abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn emitted_forms_reparse_exactly(dim in 3usize..=7, degree in 1usize..=3, c in prop::collection::vec(-10.0..10.0f64, 35)) {
        let n = binomial(dim, degree);
        let mut coeffs = c[..n].to_vec();
        // Exact zeros and ones exercise the terse emission paths.
        coeffs[0] = 0.0;
        if n > 1 {
            coeffs[1] = -1.0;
        }
        let f = Form::from_coeffs(dim, degree, coeffs);
        let back = parse_form_degree(dim, degree, &f.to_string()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn f_lambda_mu_solves_its_equation(lambda in -4.0..4.0f64, mu in -4.0..4.0f64, u in 0.05..0.95f64) {
        let f = f_lambda_mu(lambda, mu);
        let (lo, hi) = (f.domain.0.max(-20.0), f.domain.1.min(20.0));
        let y = lo + u * (hi - lo);
        let (v, dv) = first_derivative(|y| f.eval(y), y);
        prop_assert!((f.value(0.0) - 1.0).abs() <= 1e-14);
        prop_assert!(v > 0.0);
        prop_assert!((dv + lambda * v * v + mu).abs() <= 1e-9 * (1.0 + dv.abs()), "{dv} vs {}", -(lambda * v * v + mu));
    }
}
