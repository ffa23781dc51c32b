use nalgebra::DMatrix;

use super::builders::{build_almost_abelian, build_class_ii};
use super::diagonal::normal_form_matrix;
use super::kahler::KahlerData;
use crate::algebra::{jacobi_check, ComplexForm, Form, LieAlgebra};
use crate::error::ConstructError;
use crate::gstruct::{g2_metric, model, validate_su3, G2Structure, Su3Structure};
use crate::io::{parse_form_degree, parse_scalar};
use crate::torsion::{
    check_cocalibrated, check_hypo, classify_torsion, hypo_torsion, TorsionComponent,
};

/// Tolerance for the advertised predicates of catalog entries.
const FIXTURE_TOL: f64 = 1e-10;

/// A named algebra with the structures it is advertised to carry.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub id: String,
    pub alg: LieAlgebra,
    /// Hypo SU(3)-structure on a 7-dimensional algebra.
    pub su3: Option<Su3Structure>,
    /// Cocalibrated G2-structure on a 7-dimensional algebra.
    pub g2: Option<G2Structure>,
    /// Kahler input on a 6-dimensional algebra.
    pub kahler: Option<KahlerData>,
    /// `ad(e_7)` restricted to the Abelian ideal `span(e_1..e_6)`, for almost Abelian entries.
    pub f: Option<DMatrix<f64>>,
    /// Torsion modules the hypo structure may have.
    pub class_within: Option<Vec<TorsionComponent>>,
    /// The differentials `de^1, ..., de^n` as written in the source data.
    pub differentials: Vec<String>,
}

impl Fixture {
    /// Checks Jacobi and each advertised predicate, naming the first failure.
    pub fn verify(&self) -> Result<(), String> {
        let jac = jacobi_check(&self.alg, 1e-12).map_err(|e| e.to_string())?;
        let scale = 1.0
            + self
                .alg
                .structure_constants()
                .iter()
                .fold(0.0f64, |m, c| m.max(c.abs()));
        if let Some(s) = &self.su3 {
            let r = check_hypo(&self.alg, s).residual();
            if r > FIXTURE_TOL * scale {
                return Err(format!("{}: not hypo, residual {r:e}", self.id));
            }
            if let Some(allowed) = &self.class_within {
                let t = hypo_torsion(&self.alg, s, 1e-9).map_err(|e| e.to_string())?;
                let class = classify_torsion(&t, 1e-8);
                if let Some(c) = class.components.iter().find(|c| !allowed.contains(c)) {
                    return Err(format!(
                        "{}: unexpected torsion component {} in {class}",
                        self.id,
                        c.label()
                    ));
                }
            }
        }
        if let Some(g2) = &self.g2 {
            let r = check_cocalibrated(&self.alg, g2);
            if r > FIXTURE_TOL * scale {
                return Err(format!("{}: not cocalibrated, residual {r:e}", self.id));
            }
        }
        debug_assert!(jac <= 1e-12);
        Ok(())
    }
}

/// Base catalog ids. `class-ii` and `diagonal` also accept parameter lists,
/// `class-ii(a,a1,a2,a3,a4,a5)` and `diagonal(a,l1,l2,l3,m1,m2,m3)`.
pub fn catalog_ids() -> &'static [&'static str] {
    &[
        "h7-cocal",
        "h3-r4",
        "h5-r2",
        "invtors-1",
        "invtors-2",
        "kahler-closedbeta",
        "kahler-dbeta-nonzero",
        "parallel-nonideal",
        "v1v6v12-r2",
        "class-ii",
        "diagonal",
        "intrtors-su4",
    ]
}

const INVTORS_1: [&str; 7] = [
    "2*sqrt(2)*e12",
    "0",
    "(2/3)*sqrt(6)*(e34+e56)",
    "-(2/3)*sqrt(6)*(e34+e56)",
    "-2*sqrt(2)*e16 - (sqrt(6)/3)*(e35+3*e36+e45-3*e46) + 4*e67",
    "2*sqrt(2)*e15 + (sqrt(6)/3)*(3*e35-e36-3*e45-e46) - 4*e57",
    "-2*(e12+e34+e56)",
];

const INVTORS_2: [&str; 7] = [
    "2*sqrt(2)*e12",
    "0",
    "2*sqrt(2)*e34",
    "0",
    "-2*sqrt(2)*(e16+e36) + 4*e67",
    "2*sqrt(2)*(e15+e35) - 4*e57",
    "-2*(e12+e34+e56)",
];

/// Resolves a catalog id, with optional parameters in parentheses.
pub fn catalog(id: &str) -> Result<Fixture, ConstructError> {
    let id = id.trim();
    let (base, params) = match id.split_once('(') {
        Some((b, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| bad(id, "missing ')'"))?;
            let values = inner
                .split(',')
                .map(|p| parse_scalar(p.trim()).map_err(|e| bad(id, &e.to_string())))
                .collect::<Result<Vec<f64>, _>>()?;
            (b.trim(), Some(values))
        }
        None => (id, None),
    };
    if params.is_some() && !matches!(base, "class-ii" | "diagonal") {
        return Err(bad(id, "this fixture takes no parameters"));
    }
    match base {
        "h7-cocal" => cocalibrated(
            id,
            &["0", "0", "0", "0", "0", "0", "-e12-e34-e56"],
            Some(vec![TorsionComponent::V1Lambda1]),
        ),
        "h3-r4" => cocalibrated(id, &["0", "0", "0", "0", "0", "0", "-e12"], None),
        "h5-r2" => cocalibrated(id, &["0", "0", "0", "0", "0", "0", "-e12-e34"], None),
        "invtors-1" | "intrtors-su4" => hypo_model(
            id,
            &INVTORS_1,
            Some(vec![
                TorsionComponent::V1Lambda1,
                TorsionComponent::V1Lambda2,
            ]),
        ),
        "invtors-2" => hypo_model(
            id,
            &INVTORS_2,
            Some(vec![
                TorsionComponent::V1Lambda1,
                TorsionComponent::V1Lambda2,
            ]),
        ),
        "parallel-nonideal" => hypo_model(
            id,
            &["e27", "-e17", "-e47", "e37", "0", "0", "0"],
            Some(vec![]),
        ),
        "kahler-closedbeta" => kahler(
            id,
            &["-e12", "0", "-e34", "0", "-e56", "0"],
            "e12+e34+e56",
            ("e135-e146-e236-e245", "-e136-e145-e235+e246"),
            Some("e14+e16+e36-e23-e25-e45+2*(e12+e34+e56)"),
        ),
        "kahler-dbeta-nonzero" => kahler(
            id,
            // [e4,e1] = e1, [e4,e2] = -e3, [e4,e3] = e2.
            &["e14", "e34", "-e24", "0", "0", "0"],
            "e14+e23+e56",
            // (e1 - i e4)(e2 - i e3)(e5 - i e6).
            ("e125-e435-e136-e426", "-e126+e436-e135-e425"),
            None,
        ),
        "v1v6v12-r2" => kahler(
            id,
            &["-e12", "0", "0", "0", "0", "0"],
            "e12+e34+e56",
            ("e135-e146-e236-e245", "-e136-e145-e235+e246"),
            None,
        ),
        "class-ii" => {
            let p = params.unwrap_or_else(|| vec![1.0; 6]);
            if p.len() != 6 {
                return Err(bad(id, "expected (a,a1,a2,a3,a4,a5)"));
            }
            let (alg, s) = build_class_ii(p[0], [p[1], p[2], p[3], p[4], p[5]])?;
            Ok(Fixture {
                id: id.to_string(),
                differentials: alg.differentials().iter().map(|f| f.to_string()).collect(),
                alg,
                su3: Some(s),
                g2: None,
                kahler: None,
                f: None,
                class_within: Some(vec![TorsionComponent::V1Lambda2, TorsionComponent::V12]),
            })
        }
        "diagonal" => {
            let p = params.unwrap_or_else(|| vec![0.0, 0.0, 0.0, 0.0, 3.0, 2.0, 1.0]);
            if p.len() != 7 {
                return Err(bad(id, "expected (a,l1,l2,l3,m1,m2,m3)"));
            }
            let f = normal_form_matrix(p[0], [p[1], p[2], p[3]], [p[4], p[5], p[6]]);
            let (alg, _) = build_almost_abelian(&f, &model::omega0(6), &model::psi0(6))?;
            // phi0 is induced at X = e_7 by the phase (rho, rho_hat) = (rho_hat0, -rho0).
            let s = validate_su3(
                &model::alpha0(),
                &model::omega0(7),
                &model::rho_hat0(7),
                1e-9,
            )?;
            Ok(Fixture {
                id: id.to_string(),
                differentials: alg.differentials().iter().map(|f| f.to_string()).collect(),
                alg,
                su3: Some(s),
                g2: Some(g2_metric(&model::phi0())?),
                kahler: None,
                f: Some(f),
                class_within: None,
            })
        }
        _ => Err(ConstructError::UnknownFixture(id.to_string())),
    }
}

fn bad(id: &str, reason: &str) -> ConstructError {
    ConstructError::FixtureParameters {
        id: id.to_string(),
        reason: reason.to_string(),
    }
}

fn algebra(src: &[&str]) -> Result<LieAlgebra, ConstructError> {
    let n = src.len();
    let de = src
        .iter()
        .map(|s| parse_form_degree(n, 2, s).map_err(|e| bad("differentials", &e.to_string())))
        .collect::<Result<Vec<Form>, _>>()?;
    Ok(LieAlgebra::from_differentials(&de)?)
}

/// `phi0` together with the SU(3)-structure `(e^7, omega0, rho_hat0 - i rho0)` that induces it.
fn cocalibrated(
    id: &str,
    src: &[&str],
    class: Option<Vec<TorsionComponent>>,
) -> Result<Fixture, ConstructError> {
    let alg = algebra(src)?;
    let s = validate_su3(
        &model::alpha0(),
        &model::omega0(7),
        &model::rho_hat0(7),
        1e-9,
    )?;
    Ok(Fixture {
        id: id.to_string(),
        alg,
        su3: Some(s),
        g2: Some(g2_metric(&model::phi0())?),
        kahler: None,
        f: None,
        class_within: class,
        differentials: src.iter().map(|s| s.to_string()).collect(),
    })
}

/// The structure `(e^7, omega0, psi0)`.
fn hypo_model(
    id: &str,
    src: &[&str],
    class: Option<Vec<TorsionComponent>>,
) -> Result<Fixture, ConstructError> {
    let alg = algebra(src)?;
    let s = validate_su3(&model::alpha0(), &model::omega0(7), &model::rho0(7), 1e-9)?;
    Ok(Fixture {
        id: id.to_string(),
        alg,
        su3: Some(s),
        g2: None,
        kahler: None,
        f: None,
        class_within: class,
        differentials: src.iter().map(|s| s.to_string()).collect(),
    })
}

fn kahler(
    id: &str,
    src: &[&str],
    omega: &str,
    psi: (&str, &str),
    tau: Option<&str>,
) -> Result<Fixture, ConstructError> {
    let alg = algebra(src)?;
    let p = |s: &str, k: usize| parse_form_degree(6, k, s).map_err(|e| bad(id, &e.to_string()));
    let k = KahlerData::new(
        alg.clone(),
        p(omega, 2)?,
        ComplexForm::new(p(psi.0, 3)?, p(psi.1, 3)?),
        tau.map(|t| p(t, 2)).transpose()?,
        1e-10,
    )?;
    Ok(Fixture {
        id: id.to_string(),
        alg,
        su3: None,
        g2: None,
        kahler: Some(k),
        f: None,
        class_within: None,
        differentials: src.iter().map(|s| s.to_string()).collect(),
    })
}
