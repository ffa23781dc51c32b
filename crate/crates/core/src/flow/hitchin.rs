//! The Hitchin flow `d/dt (*phi phi) = -d phi` with state `sigma = *phi phi`.
//!
//! `phi` is recovered from `sigma` by Newton iteration on `phi -> *phi phi`, a local
//! diffeomorphism on stable 3-forms, warm-started from the last recovered `phi`.

use std::cell::RefCell;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_dual::{Dual2_64, Dual64};

use super::ode::{dopri45, OdeSolution};
use super::{
    min_eigenvalue, nearest, Dense, FlowMethod, FlowOptions, FlowSample, FlowTrajectory, MetricJet,
};
use crate::algebra::{Form, LieAlgebra};
use crate::error::FlowError;
use crate::gstruct::kernel::{self, N3};
use crate::gstruct::{from_mat7, g2_metric, G2Structure};
use crate::torsion::check_cocalibrated;

type Lu = LU<f64, Dyn, Dyn>;

/// Newton solver for `theta(phi) = sigma` with a cached finite-difference Jacobian.
#[derive(Clone, Debug)]
struct Inverter {
    fd_step: f64,
    tol: f64,
    max_iter: usize,
    jacobian: Option<Lu>,
}

impl Inverter {
    fn new(opts: &FlowOptions) -> Self {
        Inverter {
            fd_step: opts.fd_step,
            tol: opts.newton_tol,
            max_iter: opts.newton_max_iter,
            jacobian: None,
        }
    }

    fn fd_jacobian(&self, phi: &[f64]) -> Option<DMatrix<f64>> {
        let mut m = DMatrix::zeros(N3, N3);
        let mut p = phi.to_vec();
        for j in 0..N3 {
            let h = self.fd_step;
            p[j] = phi[j] + h;
            let plus = kernel::theta(&p)?;
            p[j] = phi[j] - h;
            let minus = kernel::theta(&p)?;
            p[j] = phi[j];
            for i in 0..N3 {
                m[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
        Some(m)
    }

    /// Returns `phi` with `theta(phi) = sigma` and the number of iterations used.
    ///
    /// The Jacobian is reused until the residual stops contracting by at least half per
    /// iteration, then rebuilt at the current iterate, at most once per solve.
    fn solve(
        &mut self,
        sigma: &[f64],
        guess: &[f64],
        t: f64,
    ) -> Result<(Vec<f64>, usize), FlowError> {
        let scale = 1.0 + sigma.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut phi = guess.to_vec();
        let residual = |phi: &[f64]| -> Option<(DVector<f64>, f64)> {
            let th = kernel::theta(phi)?;
            let r = DVector::from_iterator(N3, th.iter().zip(sigma).map(|(a, b)| a - b));
            let n = r.norm();
            n.is_finite().then_some((r, n))
        };
        let fail = |res: f64| FlowError::Newton { t, residual: res };
        let (mut r, mut norm) = residual(&phi).ok_or(fail(f64::INFINITY))?;
        let mut rebuilt = false;
        if self.jacobian.is_none() {
            self.jacobian = Some(self.fd_jacobian(&phi).ok_or(fail(norm))?.lu());
            rebuilt = true;
        }
        for it in 0..self.max_iter {
            if norm <= self.tol * scale {
                return Ok((phi, it));
            }
            let step = self
                .jacobian
                .as_ref()
                .unwrap()
                .solve(&r)
                .ok_or(fail(norm))?;
            let candidate: Vec<f64> = phi.iter().zip(step.iter()).map(|(p, s)| p - s).collect();
            let next = residual(&candidate);
            let contracted = matches!(&next, Some((_, n)) if *n <= 0.5 * norm);
            if !contracted && !rebuilt {
                self.jacobian = Some(self.fd_jacobian(&phi).ok_or(fail(norm))?.lu());
                rebuilt = true;
                continue;
            }
            match next {
                Some((rn, nn)) if nn < norm || nn <= self.tol * scale => {
                    phi = candidate;
                    r = rn;
                    norm = nn;
                }
                _ => return Err(fail(norm)),
            }
        }
        if norm <= self.tol * scale {
            Ok((phi, self.max_iter))
        } else {
            Err(fail(norm))
        }
    }
}

/// Mutable state shared by the right-hand side and the stop predicate.
struct Stepper<'a> {
    alg: &'a LieAlgebra,
    inverter: Inverter,
    last_phi: Vec<f64>,
}

impl Stepper<'_> {
    fn recover(&mut self, t: f64, sigma: &[f64]) -> Result<(Vec<f64>, usize), FlowError> {
        let (phi, it) = self.inverter.solve(sigma, &self.last_phi, t)?;
        self.last_phi.clone_from(&phi);
        Ok((phi, it))
    }
}

/// `-d phi` as a coefficient vector of 4-forms.
fn velocity(alg: &LieAlgebra, phi: &[f64]) -> Vec<f64> {
    alg.d(&Form::from_coeffs(7, 3, phi.to_vec()))
        .coeffs()
        .iter()
        .map(|v| -v)
        .collect()
}

/// `phi' = -(D theta)^{-1} d phi`, the velocity of `phi` along the flow.
pub fn hitchin_velocity(alg: &LieAlgebra, phi: &Form) -> Result<Form, FlowError> {
    let (p1, _) = jets(alg, phi.coeffs(), 0.0)?;
    Ok(Form::from_coeffs(7, 3, p1))
}

fn metric_min_eigenvalue(phi: &[f64]) -> Option<f64> {
    let (g, _) = kernel::metric(phi)?;
    Some(min_eigenvalue(&from_mat7(&g)))
}

/// Integrates the Hitchin flow from a cocalibrated `phi0` on `[0, t1]` (or `[t1, 0]`).
pub fn hitchin_integrate(
    alg: &LieAlgebra,
    phi0: &G2Structure,
    t1: f64,
    opts: &FlowOptions,
) -> Result<FlowTrajectory, FlowError> {
    if alg.dim() != 7 {
        return Err(FlowError::Initial(format!(
            "the Hitchin flow needs a 7-dimensional algebra, got {}",
            alg.dim()
        )));
    }
    let scale = 1.0
        + alg
            .structure_constants()
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()));
    let cocal = check_cocalibrated(alg, phi0);
    if cocal > 1e-10 * scale {
        return Err(FlowError::Initial(format!(
            "initial G2-structure is not cocalibrated: |d *phi phi| = {cocal:e}"
        )));
    }
    let sigma0 = phi0.star_phi().into_coeffs();
    let stepper = RefCell::new(Stepper {
        alg,
        inverter: Inverter::new(opts),
        last_phi: phi0.phi.coeffs().to_vec(),
    });
    let floor = opts.eigen_floor;
    let sol = dopri45(
        |t, sigma| {
            let mut s = stepper.borrow_mut();
            let (phi, _) = s.recover(t, sigma)?;
            Ok(velocity(s.alg, &phi))
        },
        0.0,
        sigma0,
        t1,
        &opts.ode,
        |t, sigma| {
            let mut s = stepper.borrow_mut();
            match s.recover(t, sigma) {
                Err(e) => Some(format!("{e}")),
                Ok((phi, _)) => match metric_min_eigenvalue(&phi) {
                    Some(m) if m >= floor => None,
                    Some(m) => Some(format!(
                        "metric degenerates at t = {t}: smallest eigenvalue {m:e}"
                    )),
                    None => Some(format!("3-form leaves the stable orbit at t = {t}")),
                },
            }
        },
    )?;
    build(alg, sol, phi0.phi.coeffs().to_vec(), opts)
}

fn build(
    alg: &LieAlgebra,
    sol: OdeSolution,
    phi0: Vec<f64>,
    opts: &FlowOptions,
) -> Result<FlowTrajectory, FlowError> {
    let mut inverter = Inverter::new(opts);
    let mut guess = phi0;
    let mut samples = Vec::with_capacity(sol.t.len());
    let mut phis = Vec::with_capacity(sol.t.len());
    let mut stop = sol.stop.clone();
    for (k, (&t, sigma)) in sol.t.iter().zip(&sol.y).enumerate() {
        let (phi, it) = inverter.solve(sigma, &guess, t)?;
        let g2 = g2_metric(&Form::from_coeffs(7, 3, phi.clone()))?;
        let closure = alg
            .d(&Form::from_coeffs(7, 4, sigma.clone()))
            .norm_with(&g2.metric);
        if closure > opts.residual_bound && k > 0 {
            stop = Some(format!(
                "cocalibration residual {closure:e} exceeds bound at t = {t}"
            ));
            break;
        }
        guess.clone_from(&phi);
        samples.push(FlowSample {
            t,
            metric: g2.metric.clone(),
            g2: Some(g2),
            su3: None,
            closure_residual: closure,
            normalization_residual: 0.0,
            newton_iterations: it,
        });
        phis.push(phi);
    }
    let n = samples.len();
    let mut sol = sol;
    sol.t.truncate(n);
    sol.y.truncate(n);
    sol.dy.truncate(n);
    let mut traj = FlowTrajectory {
        method: FlowMethod::Hitchin,
        alg: alg.clone(),
        samples,
        stop_reason: stop,
        dense: Dense::Hitchin(HitchinDense {
            alg: alg.clone(),
            sol,
            phis,
            opts: *opts,
        }),
    };
    orient_increasing(&mut traj);
    Ok(traj)
}

/// Backward integrations are stored with an increasing grid.
pub(crate) fn orient_increasing(traj: &mut FlowTrajectory) {
    if traj.samples.len() > 1 && traj.samples[1].t < traj.samples[0].t {
        traj.samples.reverse();
        if let Dense::Hitchin(h) = &mut traj.dense {
            h.sol.t.reverse();
            h.sol.y.reverse();
            h.sol.dy.reverse();
            h.phis.reverse();
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct HitchinDense {
    alg: LieAlgebra,
    /// Grid states `sigma` and the right-hand sides `-d phi` evaluated there.
    pub(crate) sol: OdeSolution,
    phis: Vec<Vec<f64>>,
    opts: FlowOptions,
}

impl HitchinDense {
    /// `phi(t)` by a short integration from the closest grid point.
    fn phi_at(&self, t: f64) -> Result<Vec<f64>, FlowError> {
        let k = nearest(&self.sol.t, t);
        if self.sol.t[k] == t {
            return Ok(self.phis[k].clone());
        }
        let stepper = RefCell::new(Stepper {
            alg: &self.alg,
            inverter: Inverter::new(&self.opts),
            last_phi: self.phis[k].clone(),
        });
        let sol = dopri45(
            |t, sigma| {
                let mut s = stepper.borrow_mut();
                let (phi, _) = s.recover(t, sigma)?;
                Ok(velocity(s.alg, &phi))
            },
            self.sol.t[k],
            self.sol.y[k].clone(),
            t,
            &self.opts.ode,
            |_, _| None,
        )?;
        if let Some(reason) = sol.stop {
            return Err(FlowError::Initial(reason));
        }
        let sigma = sol.y.last().unwrap();
        let guess = stepper.borrow().last_phi.clone();
        Ok(Inverter::new(&self.opts).solve(sigma, &guess, t)?.0)
    }

    pub(crate) fn structure_at(&self, t: f64) -> Result<G2Structure, FlowError> {
        Ok(g2_metric(&Form::from_coeffs(7, 3, self.phi_at(t)?))?)
    }

    pub(crate) fn metric_at(&self, t: f64) -> Result<DMatrix<f64>, FlowError> {
        let phi = self.phi_at(t)?;
        let (g, _) = kernel::metric(&phi).ok_or(FlowError::Newton {
            t,
            residual: f64::NAN,
        })?;
        Ok(from_mat7(&g))
    }

    pub(crate) fn metric_jet(&self, t: f64) -> Result<MetricJet, FlowError> {
        let phi = self.phi_at(t)?;
        metric_jet_of(&self.alg, &phi, t)
    }
}

/// `(phi', phi'')` at `phi` from `theta(phi)' = -d phi`, with exact derivatives of `theta`.
fn jets(alg: &LieAlgebra, phi: &[f64], t: f64) -> Result<(Vec<f64>, Vec<f64>), FlowError> {
    let fail = || FlowError::Newton {
        t,
        residual: f64::NAN,
    };
    let mut ds = DMatrix::zeros(N3, N3);
    for j in 0..N3 {
        let x: Vec<Dual64> = phi
            .iter()
            .enumerate()
            .map(|(i, &v)| Dual64::new(v, if i == j { 1.0 } else { 0.0 }))
            .collect();
        let th = kernel::theta(&x).ok_or_else(fail)?;
        for i in 0..N3 {
            ds[(i, j)] = th[i].eps;
        }
    }
    let lu = ds.lu();
    let rhs1 = DVector::from_vec(velocity(alg, phi));
    let phi1: Vec<f64> = lu.solve(&rhs1).ok_or_else(fail)?.iter().copied().collect();
    // theta(phi + s phi1) to second order in s gives D^2 theta[phi1, phi1].
    let x: Vec<Dual2_64> = phi
        .iter()
        .zip(&phi1)
        .map(|(&p, &q)| Dual2_64::new(p, q, 0.0))
        .collect();
    let th = kernel::theta(&x).ok_or_else(fail)?;
    let v1 = velocity(alg, &phi1);
    let rhs2 = DVector::from_iterator(N3, (0..N3).map(|i| v1[i] - th[i].v2));
    let phi2: Vec<f64> = lu.solve(&rhs2).ok_or_else(fail)?.iter().copied().collect();
    Ok((phi1, phi2))
}

/// Exact `(g, g', g'')` of the Hitchin flow through `phi` at time `t`.
pub(crate) fn metric_jet_of(alg: &LieAlgebra, phi: &[f64], t: f64) -> Result<MetricJet, FlowError> {
    let (phi1, phi2) = jets(alg, phi, t)?;
    let x: Vec<Dual2_64> = (0..N3)
        .map(|i| Dual2_64::new(phi[i], phi1[i], phi2[i]))
        .collect();
    let (g, _) = kernel::metric(&x).ok_or(FlowError::Newton {
        t,
        residual: f64::NAN,
    })?;
    Ok(MetricJet {
        g: DMatrix::from_fn(7, 7, |i, j| g[i][j].re),
        dg: DMatrix::from_fn(7, 7, |i, j| g[i][j].v1),
        ddg: DMatrix::from_fn(7, 7, |i, j| g[i][j].v2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gstruct::model;

    #[test]
    fn newton_recovers_a_perturbed_form() {
        let phi = model::phi0();
        let mut target = phi.coeffs().to_vec();
        target[3] += 0.05;
        target[10] -= 0.03;
        let sigma = kernel::theta(&target).unwrap();
        let mut inv = Inverter::new(&FlowOptions::default());
        let (got, it) = inv.solve(&sigma, phi.coeffs(), 0.0).unwrap();
        assert!(it < 15);
        let err = got
            .iter()
            .zip(&target)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-11, "{err:e}");
    }

    #[test]
    fn finite_difference_jacobian_matches_dual_jacobian() {
        let phi = model::phi0();
        let inv = Inverter::new(&FlowOptions::default());
        let fd = inv.fd_jacobian(phi.coeffs()).unwrap();
        for j in 0..N3 {
            let x: Vec<Dual64> = phi
                .coeffs()
                .iter()
                .enumerate()
                .map(|(i, &v)| Dual64::new(v, (i == j) as u8 as f64))
                .collect();
            let th = kernel::theta(&x).unwrap();
            for i in 0..N3 {
                assert!(
                    (fd[(i, j)] - th[i].eps).abs() < 1e-8,
                    "({i},{j}) {} {}",
                    fd[(i, j)],
                    th[i].eps
                );
            }
        }
    }
}
