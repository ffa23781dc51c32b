//! The parallel 8-dimensional structures on `g + R` built from a trajectory, and the
//! residual of their closure.
//!
//! With `dt = e^8` and `d_8 F = d F + e^8 ^ F'`, where `d` treats `e^8` as closed,
//! `Phi = phi ^ dt + *phi`, `Omega = omega + alpha ^ dt` and `Psi = psi ^ (alpha - i dt)`
//! are all closed exactly when the flow equations hold.

use num_dual::Dual2_64;

use super::{closed_x_at, hitchin::HitchinDense, Dense, FlowStructure, FlowTrajectory};
use crate::algebra::{Form, LieAlgebra};
use crate::error::FlowError;
use crate::gstruct::Su3Structure;

/// The 8-dimensional forms at one grid time.
#[derive(Clone, Debug)]
pub enum Structure8 {
    Spin7 {
        phi: Form,
    },
    /// `Psi` is split into real and imaginary parts.
    Su4 {
        omega: Form,
        psi_re: Form,
        psi_im: Form,
    },
}

#[derive(Clone, Debug)]
pub struct AssemblyReport {
    pub max_residual: f64,
    /// `(t, |d_8 F|)` on the grid, the largest coefficient over all assembled forms.
    pub residuals: Vec<(f64, f64)>,
    pub forms: Vec<(f64, Structure8)>,
}

/// `g + R` with `e_8` central.
fn product_algebra(alg: &LieAlgebra) -> LieAlgebra {
    let mut de: Vec<Form> = alg.differentials().iter().map(|f| f.extend(8)).collect();
    de.push(Form::zero(8, 2));
    LieAlgebra::from_differentials(&de).expect("a product with R is a Lie algebra")
}

fn dt() -> Form {
    Form::monomial(8, &[7])
}

/// Step of the central differences in the parameter of a closed-form structure.
const FD_STEP: f64 = 1e-3;

/// `d/dp` of `f` at `p` by a five-point central stencil kept inside `domain`.
fn derivative<F>(f: F, p: f64, domain: (f64, f64)) -> Result<Vec<Form>, FlowError>
where
    F: Fn(f64) -> Result<Vec<Form>, FlowError>,
{
    let h = FD_STEP.min((p - domain.0) / 3.0).min((domain.1 - p) / 3.0);
    let at = |k: f64| f(p + k * h);
    let (m2, m1, p1, p2) = (at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?);
    Ok((0..m2.len())
        .map(|i| (&(&m2[i] - &p2[i]) + &(&p1[i] - &m1[i]).scaled(8.0)).scaled(1.0 / (12.0 * h)))
        .collect())
}

fn su4_forms(s: &Su3Structure) -> (Form, Form, Form) {
    let alpha = s.alpha.extend(8);
    let omega = &s.omega.extend(8) + &alpha.wedge(&dt());
    let (rho, rho_hat) = (s.rho.extend(8), s.rho_hat.extend(8));
    // psi ^ (alpha - i dt) with psi = rho + i rho^.
    let psi_re = &rho.wedge(&alpha) + &rho_hat.wedge(&dt());
    let psi_im = &rho_hat.wedge(&alpha) - &rho.wedge(&dt());
    (omega, psi_re, psi_im)
}

/// The t-dependent pieces whose derivatives enter `d_8`: `*phi`, or `omega` and `psi ^ alpha`.
fn moving_parts(s: &FlowStructure) -> Vec<Form> {
    match s {
        FlowStructure::G2(g) => vec![g.star_phi().extend(8)],
        FlowStructure::Su3(s) => {
            let alpha = s.alpha.extend(8);
            vec![
                s.omega.extend(8),
                s.rho.extend(8).wedge(&alpha),
                s.rho_hat.extend(8).wedge(&alpha),
            ]
        }
    }
}

/// Assembles the parallel Spin(7)- or SU(4)-structure on every grid point and measures `d_8`.
/// The `t`-derivatives come from the integrator's right-hand side, or for closed-form
/// trajectories from central differences of the closed form in its own parameter.
pub fn assemble_8d(tr: &FlowTrajectory) -> Result<AssemblyReport, FlowError> {
    let alg8 = product_algebra(&tr.alg);
    let mut residuals = Vec::with_capacity(tr.samples.len());
    let mut forms = Vec::with_capacity(tr.samples.len());
    for (k, sample) in tr.samples.iter().enumerate() {
        let t = sample.t;
        let structure = match (&sample.g2, &sample.su3) {
            (Some(g), _) => FlowStructure::G2(g.clone()),
            (None, Some(s)) => FlowStructure::Su3(s.clone()),
            (None, None) => tr.structure_at(t)?,
        };
        // Only the `Lambda^k M` part of `F'` survives `e^8 ^ F'`.
        let rates: Vec<Form> = match &tr.dense {
            Dense::Hitchin(h) => vec![hitchin_rate(h, k, t)?],
            Dense::Reduced(r) => r.rates(k)?.iter().map(|f| f.extend(8)).collect(),
            Dense::Reparametrized {
                metric,
                x,
                ode,
                speed,
                structure,
            } => {
                let p = closed_x_at(x, ode, speed, t)?;
                let v = speed(Dual2_64::from_re(p)).re;
                let d = derivative(|q| Ok(moving_parts(&(structure.0)(q)?)), p, metric.domain)?;
                d.iter().map(|f| f.scaled(v)).collect()
            }
            Dense::Direct { metric, structure } => {
                derivative(|q| Ok(moving_parts(&(structure.0)(q)?)), t, metric.domain)?
            }
        };
        let (residual, s8) = match &structure {
            FlowStructure::G2(g) => {
                let phi = g.phi.extend(8).wedge(&dt());
                let big = &phi + &g.star_phi().extend(8);
                let d8 = &alg8.d(&big) + &dt().wedge(&rates[0]);
                (d8.max_abs(), Structure8::Spin7 { phi: big })
            }
            FlowStructure::Su3(s) => {
                let (omega, psi_re, psi_im) = su4_forms(s);
                let d_omega = &alg8.d(&omega) + &dt().wedge(&rates[0]);
                let d_re = &alg8.d(&psi_re) + &dt().wedge(&rates[1]);
                let d_im = &alg8.d(&psi_im) + &dt().wedge(&rates[2]);
                let r = d_omega.max_abs().max(d_re.max_abs()).max(d_im.max_abs());
                (
                    r,
                    Structure8::Su4 {
                        omega,
                        psi_re,
                        psi_im,
                    },
                )
            }
        };
        residuals.push((t, residual));
        forms.push((t, s8));
    }
    let max_residual = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(AssemblyReport {
        max_residual,
        residuals,
        forms,
    })
}

/// `(*phi)'` at grid point `k`, the stored right-hand side `-d phi`.
fn hitchin_rate(h: &HitchinDense, k: usize, t: f64) -> Result<Form, FlowError> {
    let dy = match h.sol.t.get(k) {
        Some(&s) if s == t => h.sol.dy[k].clone(),
        _ => {
            return Err(FlowError::OutOfRange {
                t,
                t0: h.sol.t[0],
                t1: *h.sol.t.last().unwrap(),
            })
        }
    };
    Ok(Form::from_coeffs(7, 4, dy).extend(8))
}
