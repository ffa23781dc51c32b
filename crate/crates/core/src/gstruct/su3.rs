use nalgebra::{DMatrix, SymmetricEigen, SVD};

use super::stable::stable_three_form_data;
use crate::algebra::{ComplexForm, Form};
use crate::error::StructureError;

/// An SU(3)-structure `(alpha, omega, psi = rho + i rho_hat)` on `R^7` with its derived data.
#[derive(Clone, Debug)]
pub struct Su3Structure {
    pub alpha: Form,
    pub omega: Form,
    pub rho: Form,
    pub rho_hat: Form,
    /// The vector `X` spanning `ker omega`, normalized by `alpha(X) = 1`.
    pub reeb: Vec<f64>,
    /// Complex structure on `ker alpha`, extended by `J X = 0`.
    pub j: DMatrix<f64>,
    /// `alpha (x) alpha + omega(J., .)` on `ker alpha`.
    pub metric: DMatrix<f64>,
    /// Columns `b_1..b_6` span `ker alpha` and the last column is `X`.
    pub frame: DMatrix<f64>,
}

impl Su3Structure {
    pub fn psi(&self) -> ComplexForm {
        ComplexForm::new(self.rho.clone(), self.rho_hat.clone())
    }

    /// The structure `(alpha, omega, e^{i theta} psi)`, which has the same metric.
    pub fn rotate_phase(&self, theta: f64) -> Su3Structure {
        let (s, c) = theta.sin_cos();
        Su3Structure {
            rho: &self.rho.scaled(c) - &self.rho_hat.scaled(s),
            rho_hat: &self.rho.scaled(s) + &self.rho_hat.scaled(c),
            ..self.clone()
        }
    }

    pub fn dim(&self) -> usize {
        self.alpha.dim()
    }

    /// `phi(psi) - 2 phi(omega)` relative to `2 phi(omega)`, evaluated against `alpha`.
    pub fn normalization_residual(&self) -> f64 {
        let a = self.alpha.wedge(&self.rho_hat.wedge(&self.rho)).scaled(0.5);
        let b = self
            .alpha
            .wedge(&self.omega.wedge(&self.omega).wedge(&self.omega))
            .scaled(1.0 / 3.0);
        (&a - &b).norm() / b.norm()
    }
}

/// Checks that `(alpha, omega, rho)` defines an SU(3)-structure on `R^7` and derives
/// `X`, `J`, `rho_hat = J^* rho` and the metric.
///
/// `ker alpha` is oriented by `omega^3`. `tol` bounds the relative residuals of the
/// compatibility and normalization identities.
pub fn validate_su3(
    alpha: &Form,
    omega: &Form,
    rho: &Form,
    tol: f64,
) -> Result<Su3Structure, StructureError> {
    let n = 7;
    for (f, deg) in [(alpha, 1), (omega, 2), (rho, 3)] {
        if f.dim() != n || f.degree() != deg {
            return Err(StructureError::WrongType {
                expected: deg,
                dim: n,
                degree: f.degree(),
                got_dim: f.dim(),
            });
        }
    }
    let w = DMatrix::from_fn(n, n, |i, j| omega.coeff_pair(i, j));
    let svd = SVD::new(w, false, true);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let smax = sv[n - 1];
    if !(smax > 0.0) || sv[0] > 1e-10 * smax || sv[1] < 1e-8 * smax {
        return Err(StructureError::OmegaRank { singular: sv });
    }
    let vt = svd.v_t.as_ref().expect("right singular vectors");
    let mut x: Vec<f64> = vt.row(order[0]).iter().copied().collect();
    let ax: f64 = alpha.coeffs().iter().zip(&x).map(|(a, b)| a * b).sum();
    if ax.abs() <= 1e-10 * alpha.norm() {
        return Err(StructureError::AlphaOnKernel);
    }
    for v in x.iter_mut() {
        *v /= ax;
    }
    let horizontal = rho.interior(&x).norm() / (rho.norm() * norm(&x)).max(f64::MIN_POSITIVE);
    if horizontal > tol {
        return Err(StructureError::NotHorizontal {
            residual: horizontal,
        });
    }

    let frame = kernel_frame(alpha, &x);
    let inv = frame.clone().try_inverse().expect("frame is a basis");
    let omega6 = omega.pullback(&frame).restrict(6);
    let rho6 = rho.pullback(&frame).restrict(6);
    let omega3 = omega6.wedge(&omega6).wedge(&omega6).top();
    let orientation = omega3.signum();

    let compat = omega6.wedge(&rho6).norm() / (omega6.norm() * rho6.norm());
    if compat > tol {
        return Err(StructureError::Compatibility { residual: compat });
    }
    let data = stable_three_form_data(&rho6, orientation)?;
    let target = omega3 / 3.0;
    let normalization = (data.volume - target).abs() / target.abs();
    if normalization > tol {
        return Err(StructureError::Normalization {
            residual: normalization,
        });
    }

    let mut g6 = DMatrix::zeros(6, 6);
    for a in 0..6 {
        for b in 0..6 {
            g6[(a, b)] = (0..6)
                .map(|c| data.j[(c, a)] * omega6.coeff_pair(c, b))
                .sum();
        }
    }
    let asym = (&g6 - g6.transpose()).abs().max() / g6.abs().max();
    if asym > tol {
        return Err(StructureError::NotSymmetric { residual: asym });
    }
    let g6 = (&g6 + g6.transpose()) * 0.5;
    let eig = SymmetricEigen::new(g6.clone()).eigenvalues;
    let min_eig = eig.min();
    if min_eig <= 1e-12 * eig.max().abs() {
        return Err(StructureError::NotDefinite {
            min_eigenvalue: min_eig,
        });
    }

    let mut g_frame = DMatrix::zeros(n, n);
    g_frame.view_mut((0, 0), (6, 6)).copy_from(&g6);
    g_frame[(6, 6)] = 1.0;
    let metric = inv.transpose() * g_frame * &inv;
    let mut j_frame = DMatrix::zeros(n, n);
    j_frame.view_mut((0, 0), (6, 6)).copy_from(&data.j);
    let j = &frame * j_frame * &inv;
    let rho_hat = data.rho_hat.extend(n).pullback(&inv);

    Ok(Su3Structure {
        alpha: alpha.clone(),
        omega: omega.clone(),
        rho: rho.clone(),
        rho_hat,
        reeb: x,
        j,
        metric: (&metric + metric.transpose()) * 0.5,
        frame,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Columns `P e_i` (i != p) followed by `X`, where `P v = v - alpha(v) X` and `p` is the
/// largest component of `X`. For `alpha = e^7`, `X = e_7` this is the identity.
pub(crate) fn kernel_frame(alpha: &Form, x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let p = (0..n)
        .max_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs()))
        .unwrap();
    let mut frame = DMatrix::zeros(n, n);
    let mut col = 0;
    for i in 0..n {
        if i == p {
            continue;
        }
        let ai = alpha.coeffs()[i];
        for r in 0..n {
            frame[(r, col)] = if r == i { 1.0 } else { 0.0 } - ai * x[r];
        }
        col += 1;
    }
    for r in 0..n {
        frame[(r, n - 1)] = x[r];
    }
    frame
}

impl Form {
    /// `a(e_i, e_j)` for a 2-form, antisymmetric in `(i, j)`.
    pub fn coeff_pair(&self, i: usize, j: usize) -> f64 {
        assert_eq!(self.degree(), 2);
        if i == j {
            0.0
        } else {
            self.coeff(&[i, j])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gstruct::model;

    #[test]
    fn model_structure_validates() {
        let s = validate_su3(&model::alpha0(), &model::omega0(7), &model::rho0(7), 1e-9).unwrap();
        assert!((&s.metric - DMatrix::identity(7, 7)).abs().max() < 1e-14);
        assert!((&s.rho_hat - &model::rho_hat0(7)).is_zero(1e-14));
        assert_eq!(s.reeb, vec![0., 0., 0., 0., 0., 0., 1.]);
        assert!(s.normalization_residual() < 1e-14);
    }

    #[test]
    fn identifies_the_failed_identity() {
        let a = model::alpha0();
        let w = model::omega0(7);
        let r = model::rho0(7);
        assert!(matches!(
            validate_su3(&a, &w, &r.scaled(2.0), 1e-9),
            Err(StructureError::Normalization { .. })
        ));
        assert!(matches!(
            validate_su3(&a, &Form::parse(7, "e12+e34").unwrap(), &r, 1e-9),
            Err(StructureError::OmegaRank { .. })
        ));
        assert!(matches!(
            validate_su3(&Form::parse(7, "e1").unwrap(), &w, &r, 1e-9),
            Err(StructureError::AlphaOnKernel)
        ));
        assert!(matches!(
            validate_su3(&a, &w, &(&r + &Form::parse(7, "e127").unwrap()), 1e-9),
            Err(StructureError::NotHorizontal { .. })
        ));
        assert!(matches!(
            validate_su3(
                &a,
                &w,
                &(&r + &Form::parse(7, "e123").unwrap().scaled(0.1)),
                1e-9
            ),
            Err(StructureError::Compatibility { .. })
        ));
        assert!(matches!(
            validate_su3(&a, &Form::parse(7, "e12+e34-e56").unwrap(), &r, 1e-9),
            Err(StructureError::NotDefinite { .. })
        ));
        // (alpha, -omega, rho) is the conjugate structure with the same metric.
        let conj = validate_su3(&a, &w.scaled(-1.0), &r, 1e-9).unwrap();
        assert!((&conj.metric - DMatrix::identity(7, 7)).abs().max() < 1e-14);
    }
}
