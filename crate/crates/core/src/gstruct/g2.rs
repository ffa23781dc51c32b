use nalgebra::{DMatrix, SymmetricEigen};

use super::kernel;
use super::su3::Su3Structure;
use crate::algebra::Form;
use crate::error::StructureError;

/// A G2-structure `phi` on `R^7` with the metric and orientation it induces.
#[derive(Clone, Debug)]
pub struct G2Structure {
    pub phi: Form,
    pub metric: DMatrix<f64>,
    /// Sign of the induced volume form relative to `e^{1...7}`.
    pub orientation: f64,
}

impl G2Structure {
    /// `*_phi phi`.
    pub fn star_phi(&self) -> Form {
        let g = to_mat7(&self.metric);
        let c =
            kernel::star3(&g, self.orientation, self.phi.coeffs()).expect("metric is invertible");
        Form::from_coeffs(7, 4, c)
    }
}

pub(crate) fn to_mat7(m: &DMatrix<f64>) -> kernel::Mat7<f64> {
    let mut g = [[0.0; 7]; 7];
    for (i, row) in g.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
    g
}

pub(crate) fn from_mat7(g: &kernel::Mat7<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(7, 7, |i, j| g[i][j])
}

/// Metric of a 3-form on `R^7` via `b_phi(X, Y) vol_0 = (1/6)(X _| phi)^(Y _| phi)^phi` and
/// `g = b / det(b)^(1/9)`; fails unless `g` is positive definite.
pub fn g2_metric(phi: &Form) -> Result<G2Structure, StructureError> {
    if phi.dim() != 7 || phi.degree() != 3 {
        return Err(StructureError::WrongType {
            expected: 3,
            dim: 7,
            degree: phi.degree(),
            got_dim: phi.dim(),
        });
    }
    let b = kernel::b_matrix(phi.coeffs());
    let mut work = b;
    let det = kernel::det_in_place(&mut work);
    // Relative to the Hadamard bound, so that anisotropic scalings are not flagged.
    let hadamard: f64 = b
        .iter()
        .map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt())
        .product();
    if !(det.abs() > 1e-12 * hadamard) {
        return Err(StructureError::Degenerate { det });
    }
    let (g, orientation) =
        kernel::metric(phi.coeffs()).ok_or(StructureError::Degenerate { det })?;
    let metric = from_mat7(&g);
    let eig = SymmetricEigen::new(metric.clone()).eigenvalues;
    if eig.min() <= 0.0 {
        return Err(StructureError::NotDefinite {
            min_eigenvalue: eig.min(),
        });
    }
    Ok(G2Structure {
        phi: phi.clone(),
        metric,
        orientation,
    })
}

/// The G2-structure `phi = omega ^ alpha - rho_hat` induced by an SU(3)-structure; its
/// 4-form is `omega^2 / 2 + alpha ^ rho` and its metric is the SU(3) metric.
pub fn su3_to_g2(s: &Su3Structure) -> Result<G2Structure, StructureError> {
    g2_metric(&(&s.omega.wedge(&s.alpha) - &s.rho_hat))
}

/// The SU(3)-structure of a G2-structure along the unit vector metrically dual to the
/// covector `a`: `alpha = a / |a|`, `omega = xi _| phi`, `rho = xi _| *phi`.
pub fn su3_from_g2(g: &G2Structure, a: &[f64]) -> Result<Su3Structure, StructureError> {
    let inv = g
        .metric
        .clone()
        .try_inverse()
        .ok_or(StructureError::Degenerate { det: 0.0 })?;
    let av = nalgebra::DVector::from_column_slice(a);
    let norm = av.dot(&(&inv * &av)).sqrt();
    if !(norm > 0.0) {
        return Err(StructureError::AlphaOnKernel);
    }
    let alpha = &av / norm;
    let xi: Vec<f64> = (&inv * &alpha).iter().copied().collect();
    let omega = g.phi.interior(&xi);
    let rho = g.star_phi().interior(&xi);
    super::validate_su3(&Form::covector(alpha.as_slice()), &omega, &rho, 1e-8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gstruct::model;

    #[test]
    fn model_star_phi() {
        let g2 = g2_metric(&model::phi0()).unwrap();
        assert!((&g2.star_phi() - &model::star_phi0()).is_zero(1e-14));
        // Cross-check against the generic Hodge star.
        let generic = g2.phi.hodge_star(&g2.metric, g2.orientation);
        assert!((&generic - &model::star_phi0()).is_zero(1e-14));
    }

    #[test]
    fn reversed_form_reverses_orientation() {
        let g2 = g2_metric(&model::phi0().scaled(-1.0)).unwrap();
        assert_eq!(g2.orientation, -1.0);
        assert!((&g2.metric - DMatrix::identity(7, 7)).abs().max() < 1e-14);
    }

    #[test]
    fn su3_along_e7_recovers_the_model() {
        let g2 = g2_metric(&model::phi0()).unwrap();
        let mut a = vec![0.0; 7];
        a[6] = 2.0;
        let s = su3_from_g2(&g2, &a).unwrap();
        assert!((&su3_to_g2(&s).unwrap().phi - &model::phi0()).is_zero(1e-12));
        assert!((&s.omega - &model::omega0(7)).is_zero(1e-12));
    }

    #[test]
    fn degenerate_form_is_rejected() {
        assert!(matches!(
            g2_metric(&Form::parse(7, "e123").unwrap()),
            Err(StructureError::Degenerate { .. })
        ));
    }
}
