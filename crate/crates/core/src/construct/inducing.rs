use nalgebra::{DMatrix, DVector};

use crate::algebra::{Form, LieAlgebra};
use crate::error::ConstructError;
use crate::gstruct::{validate_su3, G2Structure, Su3Structure};
use crate::torsion::{check_cocalibrated, check_hypo};

/// Relative singular-value cutoff for the kernel of the inducing equations.
const KERNEL_TOL: f64 = 1e-9;

/// Finds a unit vector `X` with `d(X _| phi) = 0` and `d(X^b ^ phi) = 0` and returns it with the
/// hypo structure `(X^b, X _| phi, rho + i tau)`, where `phi = omega ^ X^b - tau` and
/// `*phi = omega^2/2 + X^b ^ rho`.
///
/// Both equations are linear in `X`. When the solution space has dimension above one, the
/// first row of its reduced row echelon basis is used.
pub fn find_inducing_hypo(
    alg: &LieAlgebra,
    g2: &G2Structure,
    tol: f64,
) -> Result<(Vec<f64>, Su3Structure), ConstructError> {
    let n = 7;
    let scale = 1.0
        + alg
            .structure_constants()
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()));
    let cocal = check_cocalibrated(alg, g2);
    if cocal > tol * scale {
        return Err(ConstructError::Precondition {
            identity: "d *phi = 0",
            residual: cocal,
        });
    }
    let phi = &g2.phi;
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let flat: Vec<f64> = g2.metric.column(i).iter().copied().collect();
            let a = alg.d(&phi.interior_basis(i));
            let b = alg.d(&Form::covector(&flat).wedge(phi));
            a.coeffs().iter().chain(b.coeffs()).copied().collect()
        })
        .collect();
    let m = DMatrix::from_fn(cols[0].len(), n, |r, c| cols[c][r]);
    let kernel = null_space(&m, KERNEL_TOL);
    if kernel.is_empty() {
        return Err(ConstructError::NoInducingField);
    }
    let mut x = rref_first(&kernel);
    let len = (DVector::from_column_slice(&x).transpose()
        * &g2.metric
        * DVector::from_column_slice(&x))[0]
        .sqrt();
    for v in x.iter_mut() {
        *v /= len;
    }
    let flat = &g2.metric * DVector::from_column_slice(&x);
    let alpha = Form::covector(flat.as_slice());
    let omega = phi.interior(&x);
    let tau = &omega.wedge(&alpha) - phi;
    let rho = g2.star_phi().interior(&x);
    let s = validate_su3(&alpha, &omega, &rho, 1e-8)?;
    let mismatch = (&s.rho_hat - &tau).max_abs();
    if mismatch > 1e-8 * tau.max_abs().max(1.0) {
        return Err(ConstructError::Precondition {
            identity: "tau = J^* rho",
            residual: mismatch,
        });
    }
    let hypo = check_hypo(alg, &s).residual();
    if hypo > tol * scale {
        return Err(ConstructError::Precondition {
            identity: "induced structure is hypo",
            residual: hypo,
        });
    }
    Ok((x, s))
}

/// Orthonormal basis (as vectors) of the numerical kernel of `m`.
pub(crate) fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> Vec<Vec<f64>> {
    let n = m.ncols();
    // Pad to at least n rows so that the SVD returns a full right basis.
    let mut a = DMatrix::zeros(m.nrows().max(n), n);
    a.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors");
    let smax = svd.singular_values.max().max(f64::MIN_POSITIVE);
    (0..n)
        .filter(|&i| svd.singular_values[i] <= rel_tol * smax.max(1.0))
        .map(|i| vt.row(i).iter().copied().collect())
        .collect()
}

/// First row of the reduced row echelon form of the given basis.
fn rref_first(basis: &[Vec<f64>]) -> Vec<f64> {
    let rows = basis.len();
    let n = basis[0].len();
    let mut m = DMatrix::from_fn(rows, n, |r, c| basis[r][c]);
    let mut lead = 0;
    for col in 0..n {
        if lead == rows {
            break;
        }
        let piv = (lead..rows)
            .max_by(|&a, &b| m[(a, col)].abs().total_cmp(&m[(b, col)].abs()))
            .unwrap();
        if m[(piv, col)].abs() < 1e-10 {
            continue;
        }
        m.swap_rows(piv, lead);
        let p = m[(lead, col)];
        for c in 0..n {
            m[(lead, c)] /= p;
        }
        for r in 0..rows {
            if r != lead {
                let f = m[(r, col)];
                for c in 0..n {
                    let v = m[(lead, c)];
                    m[(r, c)] -= f * v;
                }
            }
        }
        lead += 1;
    }
    m.row(0).iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gstruct::{g2_metric, model};

    #[test]
    fn abelian_tie_break_is_first_basis_vector() {
        let g2 = g2_metric(&model::phi0()).unwrap();
        let (x, s) = find_inducing_hypo(&LieAlgebra::abelian(7), &g2, 1e-9).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && x[1..].iter().all(|v| v.abs() < 1e-12));
        assert!(s.normalization_residual() < 1e-12);
    }
}
