//! Exterior algebra on `R^n` (n <= 8) and Chevalley-Eilenberg differentials of Lie algebras.

mod form;
mod lie;
pub(crate) mod multi_index;

pub use form::{ComplexForm, Form, FormGram};
pub use lie::LieAlgebra;
pub use multi_index::{binomial, MAX_DIM};

use nalgebra::DMatrix;

use crate::error::AlgebraError;

pub fn wedge(a: &Form, b: &Form) -> Form {
    a.wedge(b)
}

pub fn interior(v: &[f64], a: &Form) -> Form {
    a.interior(v)
}

pub fn hodge_star(a: &Form, metric: &DMatrix<f64>, orientation: f64) -> Form {
    a.hodge_star(metric, orientation)
}

pub fn ce_differential(alg: &LieAlgebra, a: &Form) -> Form {
    alg.d(a)
}

/// Returns the Jacobiator residual, or an error when it exceeds `tol`.
pub fn jacobi_check(alg: &LieAlgebra, tol: f64) -> Result<f64, AlgebraError> {
    let r = alg.jacobi_residual();
    if r > tol {
        Err(AlgebraError::Jacobi { residual: r })
    } else {
        Ok(r)
    }
}

/// Natural action of an endomorphism `f` of `R^n` on forms: the derivation extending
/// `eta -> -eta o f` on 1-forms.
///
/// For an almost Abelian algebra `u + R e_n` with `f = ad(e_n)|_u` and `nu` a form on `u`,
/// this gives `d nu = e^n ^ f.nu`.
pub fn endo_action(f: &DMatrix<f64>, a: &Form) -> Form {
    a.derivation(&(-f.transpose()))
}

/// Pullback `A^* a` for the linear map `A e_j = sum_i A[i][j] e_i`.
pub fn pullback(a: &Form, map: &DMatrix<f64>) -> Form {
    a.pullback(map)
}
