use super::su3::{validate_su3, Su3Structure};
use crate::algebra::{Form, LieAlgebra};
use crate::error::StructureError;

/// An Sp(1)-structure `(alpha_1, alpha_2, alpha_3, omega_1, omega_2, omega_3)` on `R^7`.
#[derive(Clone, Debug)]
pub struct Sp1Structure {
    pub alpha: [Form; 3],
    pub omega: [Form; 3],
}

impl Sp1Structure {
    /// `(e^7, -e^6, -e^5, e^12 + e^34, e^13 - e^24, -e^14 - e^23)`.
    pub fn model() -> Self {
        let p = |s: &str| Form::parse(7, s).expect("model literal");
        Sp1Structure {
            alpha: [p("e7"), p("-e6"), p("-e5")],
            omega: [p("e12+e34"), p("e13-e24"), p("-e14-e23")],
        }
    }

    /// Relative residual of `omega_i ^ omega_j = 2 delta_ij v` with `v = omega_1^2 / 2`.
    pub fn relation_residual(&self) -> f64 {
        let v = self.omega[0].wedge(&self.omega[0]).scaled(0.5);
        let scale = v.norm();
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j {
                    v.scaled(2.0)
                } else {
                    Form::zero(7, 4)
                };
                worst = worst.max((&self.omega[i].wedge(&self.omega[j]) - &target).norm() / scale);
            }
        }
        worst
    }
}

/// The SU(3)-structure `alpha = alpha_1`, `omega = omega_1 - alpha_2 ^ alpha_3`,
/// `psi = -omega_3 ^ alpha_2 - omega_2 ^ alpha_3 + i(omega_2 ^ alpha_2 - omega_3 ^ alpha_3)`.
pub fn sp1_to_su3(s: &Sp1Structure, tol: f64) -> Result<Su3Structure, StructureError> {
    let [a1, a2, a3] = &s.alpha;
    let [w1, w2, w3] = &s.omega;
    let rel = s.relation_residual();
    if rel > tol {
        return Err(StructureError::Sp1Relation {
            identity: "omega_i ^ omega_j = 2 delta_ij v",
            residual: rel,
        });
    }
    let omega = w1 - &a2.wedge(a3);
    let rho = -&(&w3.wedge(a2) + &w2.wedge(a3));
    let rho_hat = &w2.wedge(a2) - &w3.wedge(a3);
    let su3 = validate_su3(a1, &omega, &rho, tol)?;
    let mismatch = (&su3.rho_hat - &rho_hat).norm() / rho_hat.norm();
    if mismatch > tol {
        return Err(StructureError::Sp1Relation {
            identity: "Im psi = J^* Re psi",
            residual: mismatch,
        });
    }
    Ok(su3)
}

/// Sup-norm of `d(omega_i - alpha_{i+1} ^ alpha_{i+2})` over `i`; zero exactly when the
/// induced SU(3)-structures of all three rotated triples are hypo.
pub fn sp1_hypo_residual(alg: &LieAlgebra, s: &Sp1Structure) -> f64 {
    (0..3)
        .map(|i| {
            let w = &s.omega[i] - &s.alpha[(i + 1) % 3].wedge(&s.alpha[(i + 2) % 3]);
            alg.d(&w).max_abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gstruct::model;

    #[test]
    fn model_maps_to_model() {
        let s = sp1_to_su3(&Sp1Structure::model(), 1e-9).unwrap();
        assert!((&s.omega - &model::omega0(7)).is_zero(1e-14));
        assert!((&s.rho - &model::rho0(7)).is_zero(1e-14));
        assert!((&s.rho_hat - &model::rho_hat0(7)).is_zero(1e-14));
    }
}
