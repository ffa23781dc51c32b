//! The Hitchin flow on almost Abelian algebras in the normal form where the basis
//! `e_1, ..., e_7` stays orthogonal.
//!
//! With `g_t(e_{2i}, e_{2i}) = f_i = 1 / g_t(e_{2i-1}, e_{2i-1})` and `P = 1 / g_t(e_7, e_7)`
//! the flow reduces to `f_i' = -(lambda_i f_i^2 + mu_i) sqrt(P)`,
//! `P = prod_j (lambda_j f_j + mu_j / f_j) / (lambda_j + mu_j)`, and `f_i = f_{lambda_i, mu_i}(x(t))`
//! with `x' = sqrt(P(x))`, `x(0) = 0`.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_dual::DualNum;

use super::closed::{diagonal_closed, diagonal_p, scalar, ClosedFormMetric, FLambdaMu};
use super::ode::{dopri45, OdeSolution};
use super::{
    Dense, FlowMethod, FlowOptions, FlowSample, FlowStructure, FlowTrajectory, StructureFn,
};
use crate::algebra::Form;
use crate::construct::{
    build_almost_abelian, diagonal_conditions, normal_form_matrix, DiagonalCase,
};
use crate::error::FlowError;
use crate::gstruct::{g2_metric, model};
use crate::torsion::check_cocalibrated;

/// The numeric trajectory, the closed-form metric in `x` and the reparametrization `x(t)`.
#[derive(Clone, Debug)]
pub struct DiagonalSolution {
    pub trajectory: FlowTrajectory,
    pub closed: ClosedFormMetric,
    /// `(t, x(t))` on the trajectory grid.
    pub x: Vec<(f64, f64)>,
    /// Whether every `lambda_i + mu_i` is nonzero.
    pub eligible: bool,
}

impl DiagonalSolution {
    /// Largest relative difference between `g_t` and the closed metric at `x(t)` over the grid.
    pub fn isometry_residual(&self) -> f64 {
        self.trajectory
            .samples
            .iter()
            .zip(&self.x)
            .map(|(s, &(_, x))| {
                let closed = self.closed.metric(x);
                (&s.metric - &closed).amax() / closed.amax()
            })
            .fold(0.0, f64::max)
    }
}

/// `phi(t)` in the orthogonal basis: the model form pulled back by the coframe
/// `e^{2i-1} / sqrt(f_i)`, `sqrt(f_i) e^{2i}`, `e^7 / sqrt(P)`.
pub(crate) fn adapted_phi(f: [f64; 3], p: f64) -> Form {
    let mut scale = DMatrix::zeros(7, 7);
    for i in 0..3 {
        scale[(2 * i, 2 * i)] = 1.0 / f[i].sqrt();
        scale[(2 * i + 1, 2 * i + 1)] = f[i].sqrt();
    }
    scale[(6, 6)] = 1.0 / p.sqrt();
    model::phi0().pullback(&scale)
}

/// Solves the diagonal flow for `f = normal_form_matrix(a, lambda, mu)` on `[0, t1]`.
pub fn diagonal_solve(
    a: f64,
    lambda: [f64; 3],
    mu: [f64; 3],
    t1: f64,
    opts: &FlowOptions,
) -> Result<DiagonalSolution, FlowError> {
    let f = normal_form_matrix(a, lambda, mu);
    let phi0 = g2_metric(&model::phi0())?;
    let cond = diagonal_conditions(&f, &phi0).map_err(|e| FlowError::Initial(e.to_string()))?;
    if !matches!(cond.case, DiagonalCase::Normal { .. }) {
        return Err(FlowError::Initial(format!(
            "the matrix is not in the orthogonal normal form (case {}); a((l1-l2)^2 + (m1-m2)^2) must vanish",
            cond.case.label()
        )));
    }
    let (alg, _) = build_almost_abelian(&f, &model::omega0(6), &model::psi0(6))
        .map_err(|e| FlowError::Initial(e.to_string()))?;
    let (closed, fs) = diagonal_closed(lambda, mu);
    let p_of = |y: &[f64]| -> f64 {
        (0..3).fold(1.0, |acc, i| {
            let s = lambda[i] + mu[i];
            if s == 0.0 {
                acc
            } else {
                acc * (lambda[i] * y[i] + mu[i] / y[i]) / s
            }
        })
    };
    let floor = opts.eigen_floor;
    let domain = closed.domain;
    let sol = dopri45(
        |t, y| {
            let p = p_of(y);
            if !(p > 0.0 && y[..3].iter().all(|&v| v > 0.0)) {
                return Err(FlowError::Degenerate {
                    t,
                    reason: format!("P = {p:e}, f = {:?}", &y[..3]),
                });
            }
            let sp = p.sqrt();
            let mut d: Vec<f64> = (0..3)
                .map(|i| -(lambda[i] * y[i] * y[i] + mu[i]) * sp)
                .collect();
            d.push(sp);
            Ok(d)
        },
        0.0,
        vec![1.0, 1.0, 1.0, 0.0],
        t1,
        &opts.ode,
        |t, y| {
            let p = p_of(y);
            let m = y[..3]
                .iter()
                .map(|&v| v.min(1.0 / v))
                .fold(1.0 / p, f64::min);
            if !(m >= floor) {
                return Some(format!(
                    "metric degenerates at t = {t}: smallest coefficient {m:e}"
                ));
            }
            let x = y[3];
            (!(x > domain.0 && x < domain.1))
                .then(|| format!("x = {x} leaves the closed-form domain at t = {t}"))
        },
    )?;

    let mut samples = Vec::with_capacity(sol.t.len());
    let mut xs = Vec::with_capacity(sol.t.len());
    for (&t, y) in sol.t.iter().zip(&sol.y) {
        let p = p_of(y);
        let g2 = g2_metric(&adapted_phi([y[0], y[1], y[2]], p))?;
        let closure = check_cocalibrated(&alg, &g2);
        samples.push(FlowSample {
            t,
            metric: g2.metric.clone(),
            g2: Some(g2),
            su3: None,
            closure_residual: closure,
            normalization_residual: 0.0,
            newton_iterations: 0,
        });
        xs.push((t, y[3]));
    }
    let x_sol = OdeSolution {
        t: sol.t.clone(),
        y: sol.y.iter().map(|y| vec![y[3]]).collect(),
        dy: sol.dy.iter().map(|d| vec![d[3]]).collect(),
        stop: sol.stop.clone(),
        rejected: sol.rejected,
    };
    let speed_fs: [FLambdaMu; 3] = fs;
    let mut trajectory = FlowTrajectory {
        method: FlowMethod::Diagonal,
        alg,
        samples,
        stop_reason: sol.stop.clone(),
        dense: Dense::Reparametrized {
            metric: closed.clone(),
            x: x_sol,
            ode: opts.ode,
            speed: scalar(move |x| diagonal_p(&speed_fs, x).sqrt()),
            structure: StructureFn(Arc::new(move |x: f64| {
                let f = [
                    speed_fs[0].value(x),
                    speed_fs[1].value(x),
                    speed_fs[2].value(x),
                ];
                Ok(FlowStructure::G2(g2_metric(&adapted_phi(
                    f,
                    diagonal_p(&speed_fs, x),
                ))?))
            })),
        },
    };
    if trajectory.samples.len() > 1 && trajectory.samples[1].t < trajectory.samples[0].t {
        trajectory.samples.reverse();
        xs.reverse();
        if let Dense::Reparametrized { x, .. } = &mut trajectory.dense {
            x.t.reverse();
            x.y.reverse();
            x.dy.reverse();
        }
    }
    Ok(DiagonalSolution {
        trajectory,
        closed,
        x: xs,
        eligible: cond.eligible,
    })
}
