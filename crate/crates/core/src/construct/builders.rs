use nalgebra::DMatrix;

use crate::algebra::{jacobi_check, ComplexForm, Form, LieAlgebra};
use crate::error::ConstructError;
use crate::gstruct::{model, validate_su3, Su3Structure};

/// The non-Abelian family of hypo structures with torsion in `V1(lambda2) + V12`:
/// a flat 6-dimensional Calabi-Yau algebra extended by a derivation `e_7`, with the
/// model structure `(e^7, omega0, psi0)`.
pub fn build_class_ii(a: f64, p: [f64; 5]) -> Result<(LieAlgebra, Su3Structure), ConstructError> {
    if a == 0.0 {
        return Err(ConstructError::FixtureParameters {
            id: "class-ii".into(),
            reason: "a must be nonzero".into(),
        });
    }
    let [a1, a2, a3, a4, a5] = p;
    let v = |entries: &[(usize, f64)]| {
        let mut out = vec![0.0; 7];
        for &(k, c) in entries {
            out[k - 1] = c;
        }
        out
    };
    let brackets = [
        (0, 5, v(&[(2, a)])),
        (1, 5, v(&[(1, -a)])),
        (2, 5, v(&[(4, -a)])),
        (3, 5, v(&[(3, a)])),
        (0, 6, v(&[(2, -a1), (3, a2), (4, a3)])),
        (1, 6, v(&[(1, a1), (3, a3), (4, -a2)])),
        (2, 6, v(&[(1, a2), (2, a3), (4, -a4)])),
        (3, 6, v(&[(1, a3), (2, -a2), (3, a4)])),
        (5, 6, v(&[(5, a5)])),
    ];
    let alg = LieAlgebra::from_brackets(7, &brackets)?;
    jacobi_check(&alg, 1e-10)?;
    let s = validate_su3(&model::alpha0(), &model::omega0(7), &model::rho0(7), 1e-9)?;
    Ok((alg, s))
}

/// `R^6 x| R e_7` with `ad(e_7)|_u = f` (columns are `f(e_j)`) and the structure `(e^7, omega, psi)`.
pub fn build_almost_abelian(
    f: &DMatrix<f64>,
    omega: &Form,
    psi: &ComplexForm,
) -> Result<(LieAlgebra, Su3Structure), ConstructError> {
    assert_eq!(f.shape(), (6, 6));
    let brackets: Vec<(usize, usize, Vec<f64>)> = (0..6)
        .map(|j| {
            let mut out: Vec<f64> = f.column(j).iter().copied().collect();
            out.push(0.0);
            (6, j, out)
        })
        .collect();
    let alg = LieAlgebra::from_brackets(7, &brackets)?;
    let s = validate_su3(&model::alpha0(), &omega.extend(7), &psi.re.extend(7), 1e-9)?;
    Ok((alg, s))
}

/// `|f.omega0|`, which vanishes iff `f` lies in `sp(6, R)` for `omega0`.
pub fn symplectic_residual(f: &DMatrix<f64>) -> f64 {
    crate::algebra::endo_action(f, &model::omega0(6)).max_abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torsion::{check_hypo, classify_torsion, hypo_torsion, TorsionComponent};

    #[test]
    fn class_ii_is_hypo_with_alpha_ideal() {
        for p in [[0.0; 5], [1.0; 5]] {
            let (alg, s) = build_class_ii(1.0, p).unwrap();
            assert!(check_hypo(&alg, &s).residual() < 1e-12);
            let t = hypo_torsion(&alg, &s, 1e-9).unwrap();
            let class = classify_torsion(&t, 1e-8);
            for c in &class.components {
                assert!(
                    matches!(c, TorsionComponent::V1Lambda2 | TorsionComponent::V12),
                    "{class}"
                );
            }
            let ker_alpha: Vec<Vec<f64>> = (0..6)
                .map(|i| {
                    let mut v = vec![0.0; 7];
                    v[i] = 1.0;
                    v
                })
                .collect();
            assert!(alg.ideal_residual(&ker_alpha) < 1e-14);
        }
        assert!(build_class_ii(0.0, [0.0; 5]).is_err());
    }

    #[test]
    fn almost_abelian_hypo_iff_symplectic() {
        let psi = model::psi0(6);
        let w = model::omega0(6);
        let (alg, s) = build_almost_abelian(&DMatrix::zeros(6, 6), &w, &psi).unwrap();
        assert!(alg.is_abelian(0.0));
        assert_eq!(check_hypo(&alg, &s).residual(), 0.0);
        let (alg, s) = build_almost_abelian(&DMatrix::identity(6, 6), &w, &psi).unwrap();
        assert!(check_hypo(&alg, &s).residual() > 1.0);
        assert!(symplectic_residual(&DMatrix::identity(6, 6)) > 1.0);
    }
}
