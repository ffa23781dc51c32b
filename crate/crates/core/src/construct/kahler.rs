use nalgebra::{DMatrix, DVector};

use crate::algebra::{ComplexForm, Form, LieAlgebra};
use crate::error::ConstructError;
use crate::gstruct::{kernel_frame, stable_three_form_data, validate_su3, Su3Structure};

/// A special almost Hermitian structure `(Omega, Psi)` on a 6-dimensional Lie algebra whose
/// underlying almost Hermitian structure is Kahler, with `d Psi = beta ^ Psi`.
#[derive(Clone, Debug)]
pub struct KahlerData {
    pub alg: LieAlgebra,
    pub omega: Form,
    pub psi: ComplexForm,
    pub beta: Form,
    /// Optional real (1,1)-form used as the curvature term of a central extension.
    pub tau: Option<Form>,
    pub j: DMatrix<f64>,
    /// `Omega(J., .)`.
    pub metric: DMatrix<f64>,
}

impl KahlerData {
    /// Validates `d Omega = 0`, `Psi ^ conj(Psi) = (4i/3) Omega^3`, that `Im Psi` is the
    /// hat of `Re Psi`, and solves `d Psi = beta ^ Psi` for a real `beta`.
    pub fn new(
        alg: LieAlgebra,
        omega: Form,
        psi: ComplexForm,
        tau: Option<Form>,
        tol: f64,
    ) -> Result<Self, ConstructError> {
        assert_eq!(alg.dim(), 6, "Kahler data lives on a 6-dimensional algebra");
        let scale = 1.0
            + alg
                .structure_constants()
                .iter()
                .fold(0.0f64, |m, c| m.max(c.abs()));
        let d_omega = alg.d(&omega).norm();
        if d_omega > tol * scale {
            return Err(ConstructError::Kahler {
                identity: "d Omega = 0",
                residual: d_omega,
            });
        }
        let omega3 = omega.wedge(&omega).wedge(&omega);
        let vol = psi.im.wedge(&psi.re);
        let norm = (&vol - &omega3.scaled(2.0 / 3.0)).norm() / omega3.norm().max(f64::MIN_POSITIVE);
        if norm > tol {
            return Err(ConstructError::Kahler {
                identity: "Psi ^ conj(Psi) = (4i/3) Omega^3",
                residual: norm,
            });
        }
        let data = stable_three_form_data(&psi.re, omega3.top().signum())?;
        let hat = (&data.rho_hat - &psi.im).norm() / psi.im.norm();
        if hat > tol {
            return Err(ConstructError::Kahler {
                identity: "Psi of type (3,0)",
                residual: hat,
            });
        }
        let compat = omega.wedge(&psi.re).norm();
        if compat > tol {
            return Err(ConstructError::Kahler {
                identity: "Omega ^ Psi = 0",
                residual: compat,
            });
        }
        let metric = DMatrix::from_fn(6, 6, |a, b| {
            (0..6)
                .map(|c| data.j[(c, a)] * omega.coeff_pair(c, b))
                .sum()
        });

        let (beta, residual) = solve_beta(&alg, &psi);
        if residual > tol * scale {
            return Err(ConstructError::Kahler {
                identity: "d Psi = beta ^ Psi",
                residual,
            });
        }
        if let Some(t) = &tau {
            let jt = (&t.pullback(&data.j) - t).norm();
            if jt > tol * t.norm().max(1.0) {
                return Err(ConstructError::Kahler {
                    identity: "tau of type (1,1)",
                    residual: jt,
                });
            }
        }
        Ok(KahlerData {
            alg,
            omega,
            psi,
            beta,
            tau,
            j: data.j,
            metric: (&metric + metric.transpose()) * 0.5,
        })
    }
}

/// Least-squares solution of `d rho = beta ^ rho`, `d rho_hat = beta ^ rho_hat`, and its residual.
fn solve_beta(alg: &LieAlgebra, psi: &ComplexForm) -> (Form, f64) {
    let n = alg.dim();
    let d_re = alg.d(&psi.re);
    let d_im = alg.d(&psi.im);
    let rows = d_re.coeffs().len();
    let mut a = DMatrix::zeros(2 * rows, n);
    for i in 0..n {
        let e = Form::monomial(n, &[i]);
        for (r, v) in e.wedge(&psi.re).coeffs().iter().enumerate() {
            a[(r, i)] = *v;
        }
        for (r, v) in e.wedge(&psi.im).coeffs().iter().enumerate() {
            a[(rows + r, i)] = *v;
        }
    }
    let b = DVector::from_iterator(2 * rows, d_re.coeffs().iter().chain(d_im.coeffs()).copied());
    // Normal equations: `A^T A` is twice the Hermitian Gram matrix of the (1,0)-parts of the
    // basis covectors, so it is as well conditioned as the metric, and integral data stays exact.
    let ata = a.transpose() * &a;
    let atb = a.transpose() * &b;
    let x = match ata.cholesky() {
        Some(ch) => ch.solve(&atb),
        None => a
            .clone()
            .svd(true, true)
            .solve(&b, 1e-12)
            .expect("SVD solve"),
    };
    let residual = (&a * &x - &b).amax();
    (Form::from_coeffs(n, 1, x.as_slice().to_vec()), residual)
}

/// Central extension `g = h + R` with `[1, X] = -beta(X) 1` and `[X, Y] = [X, Y]_h - tau(X, Y) 1`.
///
/// The new generator is the last basis vector; the returned structure is
/// `(e^7, pi^* Omega, pi^* Psi)`, hypo with `ker omega` an ideal.
pub fn build_domega_ideal(
    k: &KahlerData,
    tol: f64,
) -> Result<(LieAlgebra, Su3Structure), ConstructError> {
    let h = &k.alg;
    let tau = k.tau.clone().unwrap_or_else(|| Form::zero(6, 2));
    let d_beta = h.d(&k.beta).norm();
    if d_beta > tol {
        return Err(ConstructError::Precondition {
            identity: "d beta = 0",
            residual: d_beta,
        });
    }
    let d_tau = (&h.d(&tau) + &tau.wedge(&k.beta)).norm();
    if d_tau > tol {
        return Err(ConstructError::Precondition {
            identity: "d tau = -tau ^ beta",
            residual: d_tau,
        });
    }
    let n = 7;
    let mut c = vec![0.0; n * n * n];
    let mut set = |i: usize, j: usize, kk: usize, v: f64| {
        c[(i * n + j) * n + kk] = v;
        c[(j * n + i) * n + kk] = -v;
    };
    for i in 0..6 {
        for j in i + 1..6 {
            for kk in 0..6 {
                set(i, j, kk, h.c(i, j, kk));
            }
            set(i, j, 6, -tau.coeff_pair(i, j));
        }
        set(6, i, 6, -k.beta.coeffs()[i]);
    }
    let alg = LieAlgebra::from_structure_constants(n, c)?;
    crate::algebra::jacobi_check(&alg, 1e-10)?;
    let s = validate_su3(
        &Form::monomial(n, &[6]),
        &k.omega.extend(n),
        &k.psi.re.extend(n),
        1e-9,
    )?;
    Ok((alg, s))
}

/// Recovers the Kahler data on `g / ker omega` from a hypo structure whose `ker omega` is an
/// ideal: pushes down `omega`, `psi`, `beta = X _| d alpha` and `tau = d alpha - alpha ^ beta`.
pub fn quotient_by_reeb(
    alg: &LieAlgebra,
    s: &Su3Structure,
    tol: f64,
) -> Result<KahlerData, ConstructError> {
    let ideal = alg.ideal_residual(std::slice::from_ref(&s.reeb));
    if ideal > tol {
        return Err(ConstructError::Precondition {
            identity: "ker omega is an ideal",
            residual: ideal,
        });
    }
    let frame = kernel_frame(&s.alpha, &s.reeb);
    let g = alg.change_basis(&frame)?;
    let mut c = vec![0.0; 216];
    for i in 0..6 {
        for j in 0..6 {
            for kk in 0..6 {
                c[(i * 6 + j) * 6 + kk] = g.c(i, j, kk);
            }
        }
    }
    let h = LieAlgebra::from_structure_constants(6, c)?;
    let push = |f: &Form| f.pullback(&frame).restrict(6);
    let d_alpha = alg.d(&s.alpha);
    let beta7 = d_alpha.interior(&s.reeb);
    let tau7 = &d_alpha - &s.alpha.wedge(&beta7);
    let tau = push(&tau7);
    let tau = if tau.is_zero(tol) { None } else { Some(tau) };
    let k = KahlerData::new(
        h,
        push(&s.omega),
        ComplexForm::new(push(&s.rho), push(&s.rho_hat)),
        tau,
        1e-9,
    )?;
    let drift = (&k.beta - &push(&beta7)).max_abs();
    if drift > 1e-9 {
        return Err(ConstructError::Kahler {
            identity: "beta = X _| d alpha",
            residual: drift,
        });
    }
    Ok(k)
}

/// Extension `g = h + R X` with `[X, Z] = [Y, Z]_h + beta(Z)(Y - X)`, `Y = beta^sharp`.
///
/// Needs `d beta = 0` and `L_Y Omega = beta ^ (Y _| Omega)`; the result carries the hypo
/// structure `(e^7, Omega, Psi)` with torsion in `V1(lambda2) + V6 + V12`.
pub fn build_kahler_extension(
    k: &KahlerData,
    tol: f64,
) -> Result<(LieAlgebra, Su3Structure), ConstructError> {
    let h = &k.alg;
    let d_beta = h.d(&k.beta).norm();
    if d_beta > tol {
        return Err(ConstructError::Precondition {
            identity: "d beta = 0",
            residual: d_beta,
        });
    }
    let ginv = k
        .metric
        .clone()
        .try_inverse()
        .expect("Kahler metric is definite");
    let y: Vec<f64> = (&ginv * DVector::from_column_slice(k.beta.coeffs()))
        .iter()
        .copied()
        .collect();
    let y_omega = k.omega.interior(&y);
    let lie = (&h.d(&y_omega) - &k.beta.wedge(&y_omega)).norm();
    if lie > tol {
        return Err(ConstructError::Precondition {
            identity: "L_Y Omega = beta ^ (Y _| Omega)",
            residual: lie,
        });
    }
    let n = 7;
    let mut c = vec![0.0; n * n * n];
    for i in 0..6 {
        for j in 0..6 {
            for kk in 0..6 {
                c[(i * n + j) * n + kk] = h.c(i, j, kk);
            }
        }
    }
    let ad_y = h.ad(&y);
    for i in 0..6 {
        let b = k.beta.coeffs()[i];
        for kk in 0..6 {
            let v = ad_y[(kk, i)] + b * y[kk];
            c[(6 * n + i) * n + kk] = v;
            c[(i * n + 6) * n + kk] = -v;
        }
        c[(6 * n + i) * n + 6] = -b;
        c[(i * n + 6) * n + 6] = b;
    }
    let alg = LieAlgebra::from_structure_constants(n, c)?;
    crate::algebra::jacobi_check(&alg, 1e-10)?;
    let s = validate_su3(
        &Form::monomial(n, &[6]),
        &k.omega.extend(n),
        &k.psi.re.extend(n),
        1e-9,
    )?;
    Ok((alg, s))
}
