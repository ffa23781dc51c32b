use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::algebra::{endo_action, Form};
use crate::error::ConstructError;
use crate::gstruct::{model, validate_su3, G2Structure};

/// Tolerance for the pattern tests on `f`; inputs are exact up to rounding of radicals.
const CASE_TOL: f64 = 1e-9;

/// Which normal form an `f` in `sp(6)` takes relative to the SU(3)-structure of `phi` at `X = e_7`.
#[derive(Clone, Debug, PartialEq)]
pub enum DiagonalCase {
    /// `f` commutes with `J`.
    Unitary,
    /// `u = V4 + V2` orthogonally, both `J`- and `f`-invariant, with `f` unitary on `V4`
    /// and `f(v) = a v + b J v`, `f(J v) = c v + a J v` on `V2 = span(v, J v)`.
    Split {
        a: f64,
        b: f64,
        c: f64,
    },
    /// The block form with parameters `a`, `lambda` and `mu`, where `f(e_1) = lambda_1 e_2 + a e_3`,
    /// `f(e_2) = mu_1 e_1 + a e_4`, `f(e_3) = -a e_1 + lambda_2 e_4`, `f(e_4) = -a e_2 + mu_2 e_3`,
    /// `f(e_5) = lambda_3 e_6`, `f(e_6) = mu_3 e_5`, and `a((lambda1-lambda2)^2 + (mu1-mu2)^2) = 0`.
    Normal {
        a: f64,
        lambda: [f64; 3],
        mu: [f64; 3],
    },
    None,
}

impl DiagonalCase {
    pub fn label(&self) -> &'static str {
        match self {
            DiagonalCase::Unitary => "(i)",
            DiagonalCase::Split { .. } => "(ii)",
            DiagonalCase::Normal { .. } => "(iii)",
            DiagonalCase::None => "none",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalConditions {
    pub case: DiagonalCase,
    /// True iff the case is `Normal` with every `lambda_i + mu_i` nonzero, which makes the
    /// diagonal Hitchin flow solution have holonomy SU(4).
    pub eligible: bool,
}

/// Classifies `f` (columns `f(e_j)`, acting on `u = ker e^7`) into the cases in which the
/// orthogonal splitting of `u` is kept by the Hitchin flow.
///
/// Cases are tested in the order unitary, normal form, split, so that an `f` satisfying
/// several is reported by the first.
pub fn diagonal_conditions(
    f: &DMatrix<f64>,
    g2: &G2Structure,
) -> Result<DiagonalConditions, ConstructError> {
    assert_eq!(f.shape(), (6, 6));
    let x = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
    let flat: Vec<f64> = g2.metric.column(6).iter().copied().collect();
    let s = validate_su3(
        &Form::covector(&flat),
        &g2.phi.interior(&x),
        &g2.star_phi().interior(&x),
        1e-8,
    )?;
    let omega = s.omega.restrict(6);
    let j = s.j.view((0, 0), (6, 6)).into_owned();
    let g = s.metric.view((0, 0), (6, 6)).into_owned();
    let scale = 1.0 + f.amax();

    let residual = endo_action(f, &omega).max_abs();
    if residual > CASE_TOL * scale {
        return Err(ConstructError::NotSymplectic { residual });
    }
    let commutator = f * &j - &j * f;
    if commutator.amax() <= CASE_TOL * scale {
        return Ok(DiagonalConditions {
            case: DiagonalCase::Unitary,
            eligible: false,
        });
    }
    let is_model =
        (&omega - &model::omega0(6)).max_abs() < CASE_TOL && (&j - model::j0(6)).amax() < CASE_TOL;
    if is_model {
        if let Some((a, lambda, mu)) = normal_form(f, scale) {
            let eligible = (0..3).all(|i| (lambda[i] + mu[i]).abs() > CASE_TOL * scale);
            return Ok(DiagonalConditions {
                case: DiagonalCase::Normal { a, lambda, mu },
                eligible,
            });
        }
    }
    let case = split_form(f, &j, &g, &commutator, scale).unwrap_or(DiagonalCase::None);
    Ok(DiagonalConditions {
        case,
        eligible: false,
    })
}

fn normal_form(f: &DMatrix<f64>, scale: f64) -> Option<(f64, [f64; 3], [f64; 3])> {
    let a = f[(2, 0)];
    let lambda = [f[(1, 0)], f[(3, 2)], f[(5, 4)]];
    let mu = [f[(0, 1)], f[(2, 3)], f[(4, 5)]];
    if (f - normal_form_matrix(a, lambda, mu)).amax() > CASE_TOL * scale {
        return None;
    }
    let constraint = a * ((lambda[0] - lambda[1]).powi(2) + (mu[0] - mu[1]).powi(2));
    (constraint.abs() <= CASE_TOL * scale.powi(3)).then_some((a, lambda, mu))
}

/// `J [f, J] = J f J + f` vanishes exactly on the unitary part; case (ii) needs it of rank
/// two with kernel and orthogonal complement invariant under `J` and `f`.
fn split_form(
    f: &DMatrix<f64>,
    j: &DMatrix<f64>,
    g: &DMatrix<f64>,
    commutator: &DMatrix<f64>,
    scale: f64,
) -> Option<DiagonalCase> {
    let d = j * commutator;
    // Symmetrize against g so that ker D and its g-complement come from one eigenbasis of D^T g D.
    let q = d.transpose() * g * &d;
    let eig = SymmetricEigen::new((&q + q.transpose()) * 0.5);
    let tol = CASE_TOL * scale * scale;
    let big: Vec<usize> = (0..6).filter(|&i| eig.eigenvalues[i] > tol).collect();
    if big.len() != 2 {
        return None;
    }
    let kernel: Vec<DVector<f64>> = (0..6)
        .filter(|i| !big.contains(i))
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    // V2 = g-orthogonal complement of ker D.
    let ginv_k: Vec<DVector<f64>> = kernel.iter().map(|k| g * k).collect();
    let constraint = DMatrix::from_fn(4, 6, |r, c| ginv_k[r][c]);
    let v2 = crate::construct::inducing::null_space(&constraint, 1e-10);
    if v2.len() != 2 {
        return None;
    }
    let in_span = |basis: &[DVector<f64>], w: &DVector<f64>| {
        let m = DMatrix::from_columns(basis);
        let coef = m.clone().svd(true, true).solve(w, 1e-12).ok()?;
        Some((&m * coef - w).amax())
    };
    for space in [
        &kernel,
        &v2.iter()
            .map(|v| DVector::from_column_slice(v))
            .collect::<Vec<_>>(),
    ] {
        for w in space.iter() {
            for image in [j * w, f * w] {
                if in_span(space, &image)? > CASE_TOL * scale {
                    return None;
                }
            }
        }
    }
    let mut v = DVector::from_column_slice(&v2[0]);
    v /= (v.transpose() * g * &v)[0].sqrt();
    let jv = j * &v;
    let ip = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * g * b)[0];
    let fv = f * &v;
    let fjv = f * &jv;
    let (a, b, c) = (ip(&fv, &v), ip(&fv, &jv), ip(&fjv, &v));
    if (ip(&fjv, &jv) - a).abs() > CASE_TOL * scale {
        return None;
    }
    Some(DiagonalCase::Split { a, b, c })
}

/// The block matrix of the normal form.
pub fn normal_form_matrix(a: f64, lambda: [f64; 3], mu: [f64; 3]) -> DMatrix<f64> {
    let mut f = DMatrix::zeros(6, 6);
    for i in 0..3 {
        f[(2 * i + 1, 2 * i)] = lambda[i];
        f[(2 * i, 2 * i + 1)] = mu[i];
    }
    f[(2, 0)] = a;
    f[(3, 1)] = a;
    f[(0, 2)] = -a;
    f[(1, 3)] = -a;
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gstruct::g2_metric;

    fn phi0() -> G2Structure {
        g2_metric(&model::phi0()).unwrap()
    }

    #[test]
    fn final_example_is_eligible() {
        let f = normal_form_matrix(0.0, [0.0; 3], [3.0, 2.0, 1.0]);
        let c = diagonal_conditions(&f, &phi0()).unwrap();
        assert_eq!(c.case.label(), "(iii)");
        assert!(c.eligible);
    }

    #[test]
    fn cancelling_block_is_ineligible() {
        let f = normal_form_matrix(0.0, [-1.0, 0.0, 0.0], [1.0, 2.0, 3.0]);
        let c = diagonal_conditions(&f, &phi0()).unwrap();
        assert_eq!(c.case.label(), "(iii)");
        assert!(!c.eligible);
    }

    #[test]
    fn identity_is_not_symplectic() {
        let e = diagonal_conditions(&DMatrix::identity(6, 6), &phi0()).unwrap_err();
        assert!(matches!(e, ConstructError::NotSymplectic { .. }));
    }

    #[test]
    fn split_form_detected() {
        // Unitary on span(e1..e4) but off the normal form, hyperbolic on span(e5, e6).
        let mut f = DMatrix::zeros(6, 6);
        f[(3, 0)] = 1.0;
        f[(0, 3)] = -1.0;
        f[(2, 1)] = -1.0;
        f[(1, 2)] = 1.0;
        f[(5, 4)] = 2.0;
        f[(4, 5)] = 1.0;
        let c = diagonal_conditions(&f, &phi0()).unwrap();
        match c.case {
            DiagonalCase::Split { a, b, c } => {
                assert!(a.abs() < 1e-12);
                assert!((b * c).abs() > 0.5);
            }
            other => panic!("{other:?}"),
        }
    }
}
