use hypoflow::algebra::{ComplexForm, Form, LieAlgebra};
use hypoflow::construct::{
    build_domega_ideal, build_kahler_extension, catalog, catalog_ids, diagonal_conditions,
    find_inducing_hypo, quotient_by_reeb, KahlerData,
};
use hypoflow::error::ConstructError;
use hypoflow::gstruct::{model, su3_to_g2};
use hypoflow::torsion::{
    check_hypo, classify_torsion, hypo_torsion, rescale_invariant, TorsionComponent,
};

fn kahler_closedbeta() -> KahlerData {
    catalog("kahler-closedbeta").unwrap().kahler.unwrap()
}

#[test]
fn every_catalog_entry_passes_its_predicates() {
    for id in catalog_ids() {
        let fx = catalog(id).unwrap_or_else(|e| panic!("{id}: {e}"));
        fx.verify().unwrap_or_else(|e| panic!("{e}"));
        for i in 0..fx.alg.dim() {
            let dd = fx.alg.d(&fx.alg.d(&Form::monomial(fx.alg.dim(), &[i])));
            assert!(dd.max_abs() <= 1e-12, "{id}: d^2 e^{}", i + 1);
        }
    }
    assert!(matches!(
        catalog("bogus"),
        Err(ConstructError::UnknownFixture(_))
    ));
    assert!(catalog("class-ii(0,1,1,1,1,1)").is_err());
    assert!(catalog("h7-cocal(1)").is_err());
}

#[test]
fn closed_beta_example_builds_printed_differentials() {
    let k = kahler_closedbeta();
    let beta = Form::parse(6, "e2+e4+e6").unwrap();
    assert!((&k.beta - &beta).max_abs() < 1e-12);
    let (g, s) = build_domega_ideal(&k, 1e-10).unwrap();
    let printed = [
        "-e12",
        "0",
        "-e34",
        "0",
        "-e56",
        "0",
        "-e27-e47-e67+e14+e16+e36-e23-e25-e45+2*(e12+e34+e56)",
    ];
    for (i, src) in printed.iter().enumerate() {
        let want = Form::parse(7, src).unwrap();
        let want = if want.degree() == 0 {
            Form::zero(7, 2)
        } else {
            want
        };
        assert!(
            (&g.differentials()[i] - &want).max_abs() <= 1e-12,
            "de^{}",
            i + 1
        );
    }
    assert!(check_hypo(&g, &s).residual() < 1e-12);
    assert!(g.ideal_residual(std::slice::from_ref(&s.reeb)) < 1e-12);
    let t = hypo_torsion(&g, &s, 1e-9).unwrap();
    let class = classify_torsion(&t, 1e-8);
    assert_eq!(
        class.components,
        vec![
            TorsionComponent::V1Lambda1,
            TorsionComponent::V6,
            TorsionComponent::V8
        ]
    );
}

#[test]
fn quotient_recovers_kahler_data() {
    let k = kahler_closedbeta();
    let (g, s) = build_domega_ideal(&k, 1e-10).unwrap();
    let back = quotient_by_reeb(&g, &s, 1e-10).unwrap();
    let diff = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    };
    assert!(diff(back.alg.structure_constants(), k.alg.structure_constants()) <= 1e-12);
    assert!((&back.omega - &k.omega).max_abs() <= 1e-12);
    assert!((&back.psi.re - &k.psi.re).max_abs() <= 1e-12);
    assert!((&back.psi.im - &k.psi.im).max_abs() <= 1e-12);
    assert!((&back.beta - &k.beta).max_abs() <= 1e-12);
    assert!((back.tau.as_ref().unwrap() - k.tau.as_ref().unwrap()).max_abs() <= 1e-12);
}

#[test]
fn zero_tau_gives_class_v6_with_subalgebra() {
    let mut k = kahler_closedbeta();
    k.tau = None;
    let (g, s) = build_domega_ideal(&k, 1e-10).unwrap();
    let t = hypo_torsion(&g, &s, 1e-9).unwrap();
    assert_eq!(
        classify_torsion(&t, 1e-8).components,
        vec![TorsionComponent::V6]
    );
    let ker_alpha: Vec<Vec<f64>> = (0..6)
        .map(|i| {
            let mut v = vec![0.0; 7];
            v[i] = 1.0;
            v
        })
        .collect();
    for x in &ker_alpha {
        for y in &ker_alpha {
            assert!(g.bracket(x, y)[6].abs() < 1e-14);
        }
    }
}

#[test]
fn non_11_tau_is_rejected() {
    let k = kahler_closedbeta();
    let e = KahlerData::new(
        k.alg.clone(),
        k.omega.clone(),
        k.psi.clone(),
        Some(Form::parse(6, "e13").unwrap()),
        1e-10,
    )
    .unwrap_err();
    assert!(
        matches!(
            e,
            ConstructError::Kahler {
                identity: "tau of type (1,1)",
                ..
            }
        ),
        "{e}"
    );
}

#[test]
fn non_closed_beta_fails_with_named_identity() {
    let k = catalog("kahler-dbeta-nonzero").unwrap().kahler.unwrap();
    assert!((&k.beta - &Form::parse(6, "-e1-e4").unwrap()).max_abs() < 1e-12);
    match build_domega_ideal(&k, 1e-10) {
        Err(ConstructError::Precondition { identity, .. }) => assert_eq!(identity, "d beta = 0"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn kahler_extension_example_brackets() {
    let k = catalog("v1v6v12-r2").unwrap().kahler.unwrap();
    let (g, s) = build_kahler_extension(&k, 1e-10).unwrap();
    let brackets = LieAlgebra::from_brackets(
        7,
        &[
            (0, 1, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            (6, 0, vec![-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            (6, 1, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0]),
        ],
    )
    .unwrap();
    let diff = g
        .structure_constants()
        .iter()
        .zip(brackets.structure_constants())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(diff < 1e-14);
    let t = hypo_torsion(&g, &s, 1e-9).unwrap();
    let class = classify_torsion(&t, 1e-8);
    for c in &class.components {
        assert!(
            matches!(
                c,
                TorsionComponent::V1Lambda2 | TorsionComponent::V6 | TorsionComponent::V12
            ),
            "{class}"
        );
    }
}

#[test]
fn kahler_extension_rejects_lie_derivative_violation() {
    let mut k = catalog("v1v6v12-r2").unwrap().kahler.unwrap();
    // Y = e_2 is unchanged, but Y _| Omega picks up e^3 and L_Y Omega = beta ^ (Y _| Omega) breaks.
    k.omega = &k.omega + &Form::parse(6, "0.1*e23").unwrap();
    match build_kahler_extension(&k, 1e-10) {
        Err(ConstructError::Precondition { identity, .. }) => {
            assert!(identity.starts_with("L_Y Omega"))
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn abelian_extension_is_parallel() {
    let k = KahlerData::new(
        LieAlgebra::abelian(6),
        model::omega0(6),
        model::psi0(6),
        None,
        1e-12,
    )
    .unwrap();
    let (g, s) = build_kahler_extension(&k, 1e-10).unwrap();
    assert!(g.is_abelian(0.0));
    assert!(classify_torsion(&hypo_torsion(&g, &s, 1e-9).unwrap(), 1e-8).is_parallel());
}

#[test]
fn invariant_torsion_examples() {
    for id in ["invtors-1", "invtors-2"] {
        let fx = catalog(id).unwrap();
        let s = fx.su3.unwrap();
        let t = hypo_torsion(&fx.alg, &s, 1e-9).unwrap();
        assert!(
            (t.lambda1 + 2.0).abs() < 1e-12,
            "{id}: lambda1 = {}",
            t.lambda1
        );
        assert!(
            (t.lambda2 + 4.0).abs() < 1e-12,
            "{id}: lambda2 = {}",
            t.lambda2
        );
        assert!(classify_torsion(&t, 1e-8).is_invariant());
        let r = rescale_invariant(&s, &t, -1.0, -2.0, 1e-8).unwrap();
        let t2 = hypo_torsion(&fx.alg, &r, 1e-9).unwrap();
        assert!((t2.lambda1 + 1.0).abs() < 1e-10 && (t2.lambda2 + 2.0).abs() < 1e-10);
        assert!(rescale_invariant(&s, &t, 1.0, -2.0, 1e-8).is_err());
    }
}

#[test]
fn inducing_field_on_heisenberg() {
    let fx = catalog("h7-cocal").unwrap();
    let g2 = fx.g2.unwrap();
    let (x, s) = find_inducing_hypo(&fx.alg, &g2, 1e-10).unwrap();
    assert!((x[6].abs() - 1.0).abs() < 1e-12);
    assert!(x[..6].iter().all(|v| v.abs() < 1e-12));
    let back = su3_to_g2(&s).unwrap();
    assert!((&back.phi - &g2.phi).max_abs() < 1e-10);
}

#[test]
fn inducing_field_on_almost_abelian_is_orthogonal_to_ideal() {
    let fx = catalog("diagonal").unwrap();
    let g2 = fx.g2.unwrap();
    let (x, s) = find_inducing_hypo(&fx.alg, &g2, 1e-10).unwrap();
    assert!(x[..6].iter().all(|v| v.abs() < 1e-12), "{x:?}");
    assert!(check_hypo(&fx.alg, &s).residual() < 1e-12);
}

#[test]
fn diagonal_default_is_eligible() {
    let fx = catalog("diagonal").unwrap();
    let c = diagonal_conditions(fx.f.as_ref().unwrap(), fx.g2.as_ref().unwrap()).unwrap();
    assert_eq!(c.case.label(), "(iii)");
    assert!(c.eligible);
}

#[test]
fn non_abelian_kahler_rejects_wrong_phase() {
    let k = kahler_closedbeta();
    let wrong = ComplexForm::new(k.psi.im.clone(), k.psi.re.clone());
    assert!(KahlerData::new(k.alg.clone(), k.omega.clone(), wrong, None, 1e-10).is_err());
}
