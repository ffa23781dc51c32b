//! Hypo and cocalibrated conditions, and the intrinsic torsion of hypo SU(3)-structures.
//!
//! A hypo structure has `d omega = 0` and `d(alpha ^ psi) = 0`. Its torsion is encoded by
//!
//! ```text
//! d alpha   = alpha ^ beta + lambda1 omega + omega~
//! d rho     = beta ^ rho     - lambda2 alpha ^ rho_hat + alpha ^ gamma
//! d rho_hat = beta ^ rho_hat + lambda2 alpha ^ rho     - alpha ^ J^* gamma
//! ```
//!
//! with `beta` a horizontal 1-form, `omega~` a primitive (1,1)-form and `gamma` a primitive
//! 3-form of type (2,1)+(1,2). The components span the modules V1 + V1 + V6 + V8 + V12.

use std::fmt;

use crate::algebra::{Form, FormGram, LieAlgebra};
use crate::error::TorsionError;
use crate::gstruct::{validate_su3, G2Structure, Su3Structure};

/// Type conditions hold exactly for hypo structures; a violation means a convention error.
const TYPE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HypoReport {
    /// `|d omega|` in the structure's metric.
    pub d_omega: f64,
    /// `|d(alpha ^ psi)|`, combining real and imaginary parts.
    pub d_alpha_psi: f64,
}

impl HypoReport {
    pub fn residual(&self) -> f64 {
        self.d_omega.max(self.d_alpha_psi)
    }

    pub fn is_hypo(&self, tol: f64) -> bool {
        self.residual() <= tol
    }
}

pub fn check_hypo(alg: &LieAlgebra, s: &Su3Structure) -> HypoReport {
    let g = &s.metric;
    let d_omega = alg.d(&s.omega).norm_with(g);
    let re = alg.d(&s.alpha.wedge(&s.rho)).norm_with(g);
    let im = alg.d(&s.alpha.wedge(&s.rho_hat)).norm_with(g);
    HypoReport {
        d_omega,
        d_alpha_psi: re.hypot(im),
    }
}

/// `|d *_phi phi|` in the metric of `phi`.
pub fn check_cocalibrated(alg: &LieAlgebra, g2: &G2Structure) -> f64 {
    alg.d(&g2.star_phi()).norm_with(&g2.metric)
}

/// Intrinsic torsion of a hypo structure.
#[derive(Clone, Debug)]
pub struct HypoTorsion {
    pub lambda1: f64,
    pub lambda2: f64,
    pub beta: Form,
    pub omega_tilde: Form,
    pub gamma: Form,
    /// Metric norms of `beta`, `omega~` and `gamma`.
    pub beta_norm: f64,
    pub omega_tilde_norm: f64,
    pub gamma_norm: f64,
    /// Largest residual when the three structure equations are rebuilt from the components.
    pub residual: f64,
    /// Largest violation of the type conditions on `omega~` and `gamma`.
    pub type_residual: f64,
}

/// Extracts `(lambda1, lambda2, beta, omega~, gamma)` from a hypo structure.
///
/// `beta = X _| d alpha`, `lambda1 = <d alpha - alpha ^ beta, omega> / |omega|^2`,
/// `lambda2 = -<X _| d rho, rho_hat> / |rho_hat|^2`, `gamma = X _| d rho + lambda2 rho_hat`.
pub fn hypo_torsion(
    alg: &LieAlgebra,
    s: &Su3Structure,
    tol: f64,
) -> Result<HypoTorsion, TorsionError> {
    let scale = 1.0
        + alg
            .structure_constants()
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()));
    let report = check_hypo(alg, s);
    if !report.is_hypo(tol * scale) {
        return Err(TorsionError::NotHypo {
            d_omega: report.d_omega,
            d_alpha_psi: report.d_alpha_psi,
        });
    }
    let g = &s.metric;
    let g1 = FormGram::new(g, 1);
    let g2 = FormGram::new(g, 2);
    let g3 = FormGram::new(g, 3);
    let x = &s.reeb;

    let d_alpha = alg.d(&s.alpha);
    let beta = d_alpha.interior(x);
    let rest = &d_alpha - &s.alpha.wedge(&beta);
    let lambda1 = g2.inner(&rest, &s.omega) / g2.inner(&s.omega, &s.omega);
    let omega_tilde = &rest - &s.omega.scaled(lambda1);

    let d_rho = alg.d(&s.rho);
    let d_rho_hat = alg.d(&s.rho_hat);
    let x_d_rho = d_rho.interior(x);
    let lambda2 = -g3.inner(&x_d_rho, &s.rho_hat) / g3.inner(&s.rho_hat, &s.rho_hat);
    let gamma = &x_d_rho + &s.rho_hat.scaled(lambda2);
    let j_gamma = gamma.pullback(&s.j);

    let e_alpha = &d_alpha - &(&(&s.alpha.wedge(&beta) + &s.omega.scaled(lambda1)) + &omega_tilde);
    let e_rho = &d_rho
        - &(&(&beta.wedge(&s.rho) - &s.alpha.wedge(&s.rho_hat).scaled(lambda2))
            + &s.alpha.wedge(&gamma));
    let e_rho_hat = &d_rho_hat
        - &(&(&beta.wedge(&s.rho_hat) + &s.alpha.wedge(&s.rho).scaled(lambda2))
            - &s.alpha.wedge(&j_gamma));
    let residual = [
        e_alpha.norm_with(g),
        e_rho.norm_with(g),
        e_rho_hat.norm_with(g),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if residual > tol * scale {
        return Err(TorsionError::Reconstruction { residual });
    }

    let type_residual = [
        (&omega_tilde.pullback(&s.j) - &omega_tilde).norm_with(g),
        g2.inner(&omega_tilde, &s.omega).abs(),
        gamma.wedge(&s.omega).norm_with(g),
        g3.inner(&gamma, &s.rho).abs(),
        g3.inner(&gamma, &s.rho_hat).abs(),
        gamma.interior(x).norm_with(g),
        beta.interior(x).coeffs()[0].abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if type_residual > TYPE_TOL * scale {
        return Err(TorsionError::Typing {
            residual: type_residual,
        });
    }

    Ok(HypoTorsion {
        lambda1,
        lambda2,
        beta_norm: g1.norm(&beta),
        omega_tilde_norm: g2.norm(&omega_tilde),
        gamma_norm: g3.norm(&gamma),
        beta,
        omega_tilde,
        gamma,
        residual,
        type_residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum TorsionComponent {
    V1Lambda1,
    V1Lambda2,
    V6,
    V8,
    V12,
}

impl TorsionComponent {
    pub fn label(&self) -> &'static str {
        match self {
            TorsionComponent::V1Lambda1 => "V1(lambda1)",
            TorsionComponent::V1Lambda2 => "V1(lambda2)",
            TorsionComponent::V6 => "V6",
            TorsionComponent::V8 => "V8",
            TorsionComponent::V12 => "V12",
        }
    }
}

/// The torsion modules with magnitude above the classification threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct TorsionClass {
    pub components: Vec<TorsionComponent>,
}

impl TorsionClass {
    pub fn contains(&self, c: TorsionComponent) -> bool {
        self.components.contains(&c)
    }

    /// True for torsion in `2 V1` (only the scalars survive).
    pub fn is_invariant(&self) -> bool {
        self.components
            .iter()
            .all(|c| matches!(c, TorsionComponent::V1Lambda1 | TorsionComponent::V1Lambda2))
    }

    pub fn is_parallel(&self) -> bool {
        self.components.is_empty()
    }
}

impl fmt::Display for TorsionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return write!(f, "0");
        }
        let labels: Vec<&str> = self.components.iter().map(|c| c.label()).collect();
        write!(f, "{}", labels.join(" + "))
    }
}

pub fn classify_torsion(t: &HypoTorsion, threshold: f64) -> TorsionClass {
    let mags = [
        (TorsionComponent::V1Lambda1, t.lambda1.abs()),
        (TorsionComponent::V1Lambda2, t.lambda2.abs()),
        (TorsionComponent::V6, t.beta_norm),
        (TorsionComponent::V8, t.omega_tilde_norm),
        (TorsionComponent::V12, t.gamma_norm),
    ];
    TorsionClass {
        components: mags
            .iter()
            .filter(|(_, m)| *m > threshold)
            .map(|(c, _)| *c)
            .collect(),
    }
}

/// Rescales a structure with invariant torsion `(lambda1, lambda2)` to one with torsion
/// `(a1, a2)`: `(lambda2/a2 alpha, k omega, k^(3/2) psi)` with `k = lambda1 lambda2 / (a1 a2)`.
pub fn rescale_invariant(
    s: &Su3Structure,
    t: &HypoTorsion,
    a1: f64,
    a2: f64,
    threshold: f64,
) -> Result<Su3Structure, TorsionError> {
    let class = classify_torsion(t, threshold);
    if !class.is_invariant() {
        return Err(TorsionError::NotInvariant {
            detail: format!("torsion class {class}"),
        });
    }
    let actual = t.lambda1 * t.lambda2;
    let target = a1 * a2;
    if actual.abs() <= threshold || target == 0.0 {
        return Err(TorsionError::NotInvariant {
            detail: "lambda1 lambda2 and a1 a2 must be nonzero".into(),
        });
    }
    if actual.signum() != target.signum() {
        return Err(TorsionError::SignMismatch { target, actual });
    }
    let k = actual / target;
    let c = t.lambda2 / a2;
    let alpha = s.alpha.scaled(c);
    let omega = s.omega.scaled(k);
    let rho = s.rho.scaled(k.powf(1.5));
    Ok(validate_su3(&alpha, &omega, &rho, 1e-9)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gstruct::model;

    fn h7() -> LieAlgebra {
        let de: Vec<Form> = (0..6)
            .map(|_| Form::zero(7, 2))
            .chain(std::iter::once(Form::parse(7, "-e12-e34-e56").unwrap()))
            .collect();
        LieAlgebra::from_differentials(&de).unwrap()
    }

    #[test]
    fn heisenberg_torsion_is_lambda1_only() {
        let s = validate_su3(&model::alpha0(), &model::omega0(7), &model::rho0(7), 1e-9).unwrap();
        let t = hypo_torsion(&h7(), &s, 1e-9).unwrap();
        assert!((t.lambda1 + 1.0).abs() < 1e-14);
        assert!(t.lambda2.abs() < 1e-14);
        let class = classify_torsion(&t, 1e-8);
        assert_eq!(class.components, vec![TorsionComponent::V1Lambda1]);
    }

    #[test]
    fn abelian_model_is_parallel() {
        let s = validate_su3(&model::alpha0(), &model::omega0(7), &model::rho0(7), 1e-9).unwrap();
        let t = hypo_torsion(&LieAlgebra::abelian(7), &s, 1e-9).unwrap();
        assert!(classify_torsion(&t, 1e-8).is_parallel());
    }
}
