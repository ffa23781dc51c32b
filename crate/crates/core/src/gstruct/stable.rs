use nalgebra::DMatrix;

use crate::algebra::Form;
use crate::error::StructureError;

/// Invariants of a 3-form `rho` on an oriented `R^6`.
#[derive(Clone, Debug)]
pub struct StableData {
    /// `K_rho` with `K(v) (x) vol = A((v _| rho) ^ rho)`.
    pub k: DMatrix<f64>,
    /// `tr(K^2) / 6`; stable forms of the `SL(3, C)` orbit have `lambda < 0`.
    pub lambda: f64,
    /// `J = K / sqrt(-lambda)`.
    pub j: DMatrix<f64>,
    /// `J^* rho`, so that `rho + i rho_hat` is of type (3,0).
    pub rho_hat: Form,
    /// Coefficient of `e^{1...6}` in `phi(psi) = (1/2) rho_hat ^ rho`.
    pub volume: f64,
}

/// Complex structure, dual form and volume of a stable 3-form.
///
/// `orientation` is the sign of the positive volume form relative to `e^{1...6}`.
/// The sign of `J` is fixed so the model `rho0` gives `J0 e_1 = -e_2`, and `rho_hat0` is
/// the imaginary part of the model `psi0`.
pub fn stable_three_form_data(rho: &Form, orientation: f64) -> Result<StableData, StructureError> {
    if rho.dim() != 6 || rho.degree() != 3 {
        return Err(StructureError::WrongType {
            expected: 3,
            dim: 6,
            degree: rho.degree(),
            got_dim: rho.dim(),
        });
    }
    let o = if orientation < 0.0 { -1.0 } else { 1.0 };
    let mut k = DMatrix::zeros(6, 6);
    let full: [usize; 6] = [0, 1, 2, 3, 4, 5];
    for i in 0..6 {
        let eta = rho.interior_basis(i).wedge(rho);
        for j in 0..6 {
            let rest: Vec<usize> = full.iter().copied().filter(|&x| x != j).collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            k[(j, i)] = o * sign * eta.coeff(&rest);
        }
    }
    let lambda = (&k * &k).trace() / 6.0;
    let scale = rho.norm().powi(4);
    if !(lambda < -1e-12 * scale) {
        return Err(StructureError::NotStable { lambda });
    }
    let j = &k / (-lambda).sqrt();
    let rho_hat = rho.pullback(&j);
    let volume = 0.5 * rho_hat.wedge(rho).top();
    Ok(StableData {
        k,
        lambda,
        j,
        rho_hat,
        volume,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gstruct::model;

    #[test]
    fn model_form_recovers_model_structure() {
        let d = stable_three_form_data(&model::rho0(6), 1.0).unwrap();
        assert!((d.lambda + 4.0).abs() < 1e-14);
        assert!((&d.j - model::j0(6)).abs().max() < 1e-14);
        assert!((&d.rho_hat - &model::rho_hat0(6)).is_zero(1e-14));
        // (1/2) rho_hat ^ rho = (1/3) omega^3 = 2 e^{1...6}
        assert!((d.volume - 2.0).abs() < 1e-14);
    }

    #[test]
    fn decomposable_form_is_rejected() {
        let r = stable_three_form_data(&Form::parse(6, "e123").unwrap(), 1.0);
        assert!(matches!(r, Err(StructureError::NotStable { .. })));
    }

    #[test]
    fn double_hat_is_minus_identity() {
        let rho = Form::parse(6, "e135-e146-e236-e245+0.3*e125-0.2*e346").unwrap();
        let d = stable_three_form_data(&rho, 1.0).unwrap();
        let dd = stable_three_form_data(&d.rho_hat, 1.0).unwrap();
        assert!((&dd.rho_hat + &rho).is_zero(1e-12));
        assert!((&d.j * &d.j + DMatrix::identity(6, 6)).abs().max() < 1e-12);
    }
}
