//! Hypo flows whose solutions keep `ker alpha` and `ker omega` fixed.
//!
//! Without `V6` torsion the solution is `(x' alpha0, omega0 - x d alpha0, (tau + i tau^)/x')`
//! with `x' = sqrt(phi(tau) / 2 phi(omega0 - x d alpha0))` and `tau' = (X0 _| d tau^) / x'`,
//! so the state is `x` and a 3-form `tau` on `ker alpha0`. With invariant torsion the
//! solution is explicit up to the scalar equation for `x`.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_dual::DualNum;

use super::closed::{hypo_invariant_closed, scalar, ClosedFormMetric};
use super::ode::{dopri45, OdeSolution};
use super::{
    min_eigenvalue, nearest, Dense, FlowMethod, FlowOptions, FlowSample, FlowStructure,
    FlowTrajectory, MetricJet, StructureFn,
};
use crate::algebra::{Form, LieAlgebra};
use crate::error::FlowError;
use crate::gstruct::{stable_three_form_data, validate_su3, Su3Structure};
use crate::torsion::{check_hypo, hypo_torsion};

/// Tolerance for validating reconstructed SU(3)-structures.
const RECONSTRUCT_TOL: f64 = 1e-8;

/// The fixed data of a reduced flow, in a basis with `alpha0 = e^7` and `X0 = e_7`.
#[derive(Debug)]
struct Setup {
    /// The algebra in the adapted basis.
    alg: LieAlgebra,
    /// Columns: the adapted basis in original coordinates.
    frame_inv: DMatrix<f64>,
    omega0: Form,
    d_alpha0: Form,
    /// Sign of `omega0^3` relative to `e^{1...6}`.
    orientation: f64,
    /// `ad(X0)` on `ker alpha0`.
    ad_x: DMatrix<f64>,
}

impl Setup {
    fn new(alg: &LieAlgebra, s0: &Su3Structure) -> Result<(Self, Vec<f64>), FlowError> {
        let frame = s0.frame.clone();
        let frame_inv = frame
            .clone()
            .try_inverse()
            .ok_or_else(|| FlowError::Initial("singular adapted frame".into()))?;
        let alg_a = alg
            .change_basis(&frame)
            .map_err(|e| FlowError::Initial(e.to_string()))?;
        let omega7 = s0.omega.pullback(&frame);
        let rho7 = s0.rho.pullback(&frame);
        let d_alpha7 = alg_a.d(&s0.alpha.pullback(&frame));
        let scale = 1.0 + d_alpha7.max_abs();
        if d_alpha7.norm_outside(6) > 1e-9 * scale {
            return Err(FlowError::Initial(format!(
                "d alpha0 is not horizontal (|X0 _| d alpha0| = {:e}); the reduced flow needs vanishing V6 torsion",
                d_alpha7.norm_outside(6)
            )));
        }
        let omega0 = omega7.restrict(6);
        let orientation = omega0.wedge(&omega0).wedge(&omega0).top().signum();
        let ad = alg_a.ad_basis(6);
        let setup = Setup {
            ad_x: ad.view((0, 0), (6, 6)).into_owned(),
            alg: alg_a,
            frame_inv,
            omega0,
            d_alpha0: d_alpha7.restrict(6),
            orientation,
        };
        let mut y0 = vec![0.0];
        y0.extend_from_slice(rho7.restrict(6).coeffs());
        Ok((setup, y0))
    }

    /// `X0 _| d a` for a 3-form `a` on `ker alpha0`.
    fn x_d(&self, a: &Form) -> Form {
        self.alg.d(&a.extend(7)).interior_basis(6).restrict(6)
    }

    fn omega(&self, x: f64) -> Form {
        &self.omega0 - &self.d_alpha0.scaled(x)
    }

    /// `x'`, `tau^` and the complex structure of `tau` at a state.
    fn derived(&self, t: f64, y: &[f64]) -> Result<(f64, Form, DMatrix<f64>), FlowError> {
        let tau = Form::from_coeffs(6, 3, y[1..].to_vec());
        let sd = stable_three_form_data(&tau, self.orientation)?;
        let om = self.omega(y[0]);
        let phi_omega = om.wedge(&om).wedge(&om).top() / 6.0;
        let ratio = sd.volume / (2.0 * phi_omega);
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(FlowError::Degenerate {
                t,
                reason: format!("phi(tau) / 2 phi(omega) = {ratio:e}"),
            });
        }
        Ok((ratio.sqrt(), sd.rho_hat, sd.j))
    }

    fn rhs(&self, t: f64, y: &[f64]) -> Result<Vec<f64>, FlowError> {
        let (xp, tau_hat, _) = self.derived(t, y)?;
        let mut out = vec![xp];
        out.extend(self.x_d(&tau_hat).coeffs().iter().map(|v| v / xp));
        Ok(out)
    }

    /// The SU(3)-structure of a state, in the original basis.
    fn structure(&self, t: f64, y: &[f64]) -> Result<Su3Structure, FlowError> {
        let (xp, _, _) = self.derived(t, y)?;
        let alpha = Form::monomial(7, &[6]).scaled(xp).pullback(&self.frame_inv);
        let omega = self.omega(y[0]).extend(7).pullback(&self.frame_inv);
        let rho = Form::from_coeffs(6, 3, y[1..].to_vec())
            .scaled(1.0 / xp)
            .extend(7)
            .pullback(&self.frame_inv);
        Ok(validate_su3(&alpha, &omega, &rho, RECONSTRUCT_TOL)?)
    }
}

/// Integrates the hypo flow from `s0` of class `2V1 + V8 + V12` on `[0, t1]`.
pub fn hypo_reduced_2v1v8v12(
    alg: &LieAlgebra,
    s0: &Su3Structure,
    t1: f64,
    opts: &FlowOptions,
) -> Result<FlowTrajectory, FlowError> {
    let torsion = hypo_torsion(alg, s0, 1e-9)?;
    let scale = 1.0
        + alg
            .structure_constants()
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()));
    if torsion.beta_norm > 1e-9 * scale {
        return Err(FlowError::Initial(format!(
            "torsion class has a V6 component (|beta| = {:e}); route it through the Hitchin flow",
            torsion.beta_norm
        )));
    }
    let (setup, y0) = Setup::new(alg, s0)?;
    let setup = Arc::new(setup);
    let floor = opts.eigen_floor;
    let sol = dopri45(
        |t, y| setup.rhs(t, y),
        0.0,
        y0,
        t1,
        &opts.ode,
        |t, y| match setup.structure(t, y) {
            Err(e) => Some(e.to_string()),
            Ok(s) => {
                let m = min_eigenvalue(&s.metric);
                (m < floor)
                    .then(|| format!("metric degenerates at t = {t}: smallest eigenvalue {m:e}"))
            }
        },
    )?;
    let mut samples = Vec::with_capacity(sol.t.len());
    let mut stop = sol.stop.clone();
    for (&t, y) in sol.t.iter().zip(&sol.y) {
        let s = setup.structure(t, y)?;
        let closure = check_hypo(alg, &s).residual();
        let normalization = s.normalization_residual();
        if !samples.is_empty() && closure.max(normalization) > opts.residual_bound {
            stop = Some(format!("hypo residual {closure:e} / normalization {normalization:e} exceed bound at t = {t}"));
            break;
        }
        samples.push(su3_sample(t, s, closure, normalization));
    }
    let mut sol = sol;
    truncate(&mut sol, samples.len());
    let mut traj = FlowTrajectory {
        method: FlowMethod::Reduced,
        alg: alg.clone(),
        samples,
        stop_reason: stop,
        dense: Dense::Reduced(ReducedDense {
            setup,
            sol,
            opts: *opts,
        }),
    };
    orient(&mut traj);
    Ok(traj)
}

fn su3_sample(t: f64, s: Su3Structure, closure: f64, normalization: f64) -> FlowSample {
    FlowSample {
        t,
        metric: s.metric.clone(),
        g2: None,
        su3: Some(s),
        closure_residual: closure,
        normalization_residual: normalization,
        newton_iterations: 0,
    }
}

fn truncate(sol: &mut OdeSolution, n: usize) {
    sol.t.truncate(n);
    sol.y.truncate(n);
    sol.dy.truncate(n);
}

fn reverse(sol: &mut OdeSolution) {
    sol.t.reverse();
    sol.y.reverse();
    sol.dy.reverse();
}

/// Backward integrations are stored with an increasing grid.
fn orient(traj: &mut FlowTrajectory) {
    if traj.samples.len() > 1 && traj.samples[1].t < traj.samples[0].t {
        traj.samples.reverse();
        match &mut traj.dense {
            Dense::Reduced(r) => reverse(&mut r.sol),
            Dense::Reparametrized { x, .. } => reverse(x),
            _ => {}
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct ReducedDense {
    setup: Arc<Setup>,
    sol: OdeSolution,
    opts: FlowOptions,
}

impl ReducedDense {
    fn state_at(&self, t: f64) -> Result<Vec<f64>, FlowError> {
        let k = nearest(&self.sol.t, t);
        if self.sol.t[k] == t {
            return Ok(self.sol.y[k].clone());
        }
        let sol = dopri45(
            |t, y| self.setup.rhs(t, y),
            self.sol.t[k],
            self.sol.y[k].clone(),
            t,
            &self.opts.ode,
            |_, _| None,
        )?;
        if let Some(reason) = sol.stop {
            return Err(FlowError::Degenerate { t, reason });
        }
        Ok(sol.y.last().unwrap().clone())
    }

    pub(crate) fn structure_at(&self, t: f64) -> Result<Su3Structure, FlowError> {
        self.setup.structure(t, &self.state_at(t)?)
    }

    /// Exact `t`-derivatives of `omega`, `rho ^ alpha` and `rho^ ^ alpha` at grid point `k`,
    /// from the right-hand side. Since `rho ^ alpha = tau ^ alpha0`, no `x'` enters.
    pub(crate) fn rates(&self, k: usize) -> Result<[Form; 3], FlowError> {
        let (t, y) = (self.sol.t[k], &self.sol.y[k]);
        let s = &self.setup;
        let dy = s.rhs(t, y)?;
        let tau = Form::from_coeffs(6, 3, y[1..].to_vec());
        let dtau = Form::from_coeffs(6, 3, dy[1..].to_vec());
        let dtau_hat = directional(&tau, &dtau, |v| {
            Ok(DMatrix::from_row_slice(
                1,
                20,
                stable_three_form_data(v, s.orientation)?.rho_hat.coeffs(),
            ))
        })?;
        let dtau_hat = Form::from_coeffs(6, 3, dtau_hat.iter().copied().collect());
        let alpha0 = Form::monomial(7, &[6]);
        let back = |f: Form| f.pullback(&s.frame_inv);
        Ok([
            back(s.d_alpha0.scaled(-dy[0]).extend(7)),
            back(dtau.extend(7).wedge(&alpha0)),
            back(dtau_hat.extend(7).wedge(&alpha0)),
        ])
    }

    pub(crate) fn metric_at(&self, t: f64) -> Result<DMatrix<f64>, FlowError> {
        Ok(self.structure_at(t)?.metric)
    }

    /// `g = G(y)`, `g' = DG[v]` and `g'' = D^2 G[v, v] + DG[Dv[v]]` with `v = rhs(y)`; the flow
    /// is autonomous. Differencing the algebraic maps `G` and `rhs` in state space avoids the
    /// re-integration noise that differencing `metric_at` in `t` would amplify.
    pub(crate) fn metric_jet(&self, t: f64) -> Result<MetricJet, FlowError> {
        let s = &self.setup;
        let y = self.state_at(t)?;
        let metric = |y: &[f64]| -> Result<Vec<f64>, FlowError> {
            Ok(s.structure(t, y)?.metric.as_slice().to_vec())
        };
        let v = s.rhs(t, &y)?;
        let (dv, _) = state_directional(|y| s.rhs(t, y), &y, &v)?;
        let (g1, g2) = state_directional(metric, &y, &v)?;
        let (ga, _) = state_directional(metric, &y, &dv)?;
        let mat = |c: Vec<f64>| DMatrix::from_column_slice(7, 7, &c);
        let ddg: Vec<f64> = g2.iter().zip(&ga).map(|(a, b)| a + b).collect();
        Ok(MetricJet {
            g: s.structure(t, &y)?.metric,
            dg: mat(g1),
            ddg: mat(ddg),
        })
    }
}

/// First and second derivatives of `f(y + s v)` at `s = 0` by five-point stencils with
/// `|s v| ~ 2e-3 |y|`.
fn state_directional<F>(f: F, y: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>), FlowError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, FlowError>,
{
    let norm = |a: &[f64]| a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let f0 = f(y)?;
    if norm(v) == 0.0 {
        return Ok((vec![0.0; f0.len()], vec![0.0; f0.len()]));
    }
    let h = 2e-3 * norm(y).max(1e-300) / norm(v);
    let at = |k: f64| {
        f(&y.iter()
            .zip(v)
            .map(|(a, b)| a + k * h * b)
            .collect::<Vec<_>>())
    };
    let (m2, m1, p1, p2) = (at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?);
    let d1 = (0..f0.len())
        .map(|i| (m2[i] - p2[i] + 8.0 * (p1[i] - m1[i])) / (12.0 * h))
        .collect();
    let d2 = (0..f0.len())
        .map(|i| (-m2[i] - p2[i] + 16.0 * (p1[i] + m1[i]) - 30.0 * f0[i]) / (12.0 * h * h))
        .collect();
    Ok((d1, d2))
}

/// Residuals of the evolution identities for `J` and `tau^` along a reduced trajectory:
/// `J' v = -(1/x') (J [X0, J v] + [X0, v])` and `tau^' = -(1/x') X0 _| d tau`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HatFlowResiduals {
    pub t: f64,
    /// Largest entry of the `J'` defect relative to `max(1, |J'|)`.
    pub j: f64,
    /// Largest coefficient of the `tau^'` defect relative to `max(1, |tau^'|)`.
    pub tau_hat: f64,
}

/// Evaluates both identities at `t`. The derivatives are fourth-order differences of the
/// algebraic maps `tau -> J` and `tau -> tau^` along the exact velocity `tau'`.
pub fn hat_flow_residuals(traj: &FlowTrajectory, t: f64) -> Result<HatFlowResiduals, FlowError> {
    let Dense::Reduced(r) = &traj.dense else {
        return Err(FlowError::Parameters(
            "the identities are evaluated on reduced trajectories".into(),
        ));
    };
    let (t0, t1) = traj.t_range();
    if t < t0 || t > t1 {
        return Err(FlowError::OutOfRange { t, t0, t1 });
    }
    let y = r.state_at(t)?;
    let s = &r.setup;
    let dy = s.rhs(t, &y)?;
    let tau = Form::from_coeffs(6, 3, y[1..].to_vec());
    let dtau = Form::from_coeffs(6, 3, dy[1..].to_vec());
    let dj = directional(&tau, &dtau, |v| {
        Ok(stable_three_form_data(v, s.orientation)?.j)
    })?;
    let dtau_hat = directional(&tau, &dtau, |v| {
        Ok(DMatrix::from_row_slice(
            1,
            20,
            stable_three_form_data(v, s.orientation)?.rho_hat.coeffs(),
        ))
    })?;

    let (xp, _, j) = s.derived(t, &y)?;
    let f = 1.0 / xp;
    let ad = &s.ad_x;
    let want_j = -(&j * ad * &j + ad) * f;
    let want_tau_hat = s.x_d(&tau).scaled(-f);
    let want_tau_hat = DMatrix::from_row_slice(1, 20, want_tau_hat.coeffs());
    Ok(HatFlowResiduals {
        t,
        j: (&dj - want_j).amax() / dj.amax().max(1.0),
        tau_hat: (&dtau_hat - want_tau_hat).amax() / dtau_hat.amax().max(1.0),
    })
}

/// `d/ds f(tau + s v)` at `s = 0` by a five-point stencil with `|s v| ~ 1e-3 |tau|`.
fn directional<F>(tau: &Form, v: &Form, f: F) -> Result<DMatrix<f64>, FlowError>
where
    F: Fn(&Form) -> Result<DMatrix<f64>, FlowError>,
{
    let vn = v.max_abs();
    if vn == 0.0 {
        let m = f(tau)?;
        return Ok(DMatrix::zeros(m.nrows(), m.ncols()));
    }
    let h = 1e-3 * tau.max_abs().max(1e-300) / vn;
    let at = |k: f64| f(&(tau + &v.scaled(k * h)));
    let (m2, m1, p1, p2) = (at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?);
    Ok((m2 - p2 + (p1 - m1) * 8.0) / (12.0 * h))
}

/// The hypo flow of a structure with invariant torsion `(lambda1, lambda2)`, from the closed form
/// `(x' alpha0, (1 - lambda1 x) omega0, (f(x) / x') psi0)` and the scalar equation for `x`.
pub fn hypo_invariant_trajectory(
    alg: &LieAlgebra,
    s0: &Su3Structure,
    t1: f64,
    opts: &FlowOptions,
) -> Result<FlowTrajectory, FlowError> {
    let torsion = hypo_torsion(alg, s0, 1e-9)?;
    let scale = 1.0
        + alg
            .structure_constants()
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()));
    let rest = torsion
        .beta_norm
        .max(torsion.omega_tilde_norm)
        .max(torsion.gamma_norm);
    if rest > 1e-8 * scale {
        return Err(FlowError::Initial(format!(
            "torsion is not invariant: |beta| + |omega~| + |gamma| ~ {rest:e}"
        )));
    }
    let (l1, l2) = (torsion.lambda1, torsion.lambda2);
    let (_, family) = hypo_invariant_closed(l1, l2)?;
    let a = DMatrix::from_column_slice(7, 1, s0.alpha.coeffs());
    let m_alpha = &a * a.transpose();
    let m_omega = &s0.metric - &m_alpha;
    let params = vec![("lambda1".to_string(), l1), ("lambda2".to_string(), l2)];
    let base = s0.clone();
    let structure_at = move |xp: f64, u: f64, psi_scale: f64| {
        validate_su3(
            &base.alpha.scaled(xp),
            &base.omega.scaled(u),
            &base.rho.scaled(psi_scale),
            RECONSTRUCT_TOL,
        )
    };
    let structure_at = Arc::new(structure_at);
    let floor = opts.eigen_floor;

    let (samples_raw, dense, stop) = match family {
        None => {
            // alpha(t) = (1 + lambda2 t) alpha0 with omega and psi constant.
            let end = if l2 * t1 < 0.0 {
                t1.signum() * (1.0 - floor.sqrt()) / l2.abs()
            } else {
                f64::INFINITY
            };
            let stop =
                (end.abs() < t1.abs()).then(|| format!("alpha degenerates at t = {}", -1.0 / l2));
            let t_end = if end.abs() < t1.abs() { end } else { t1 };
            let n = 200;
            let samples: Vec<(f64, f64, f64, f64)> = (0..=n)
                .map(|k| t_end * k as f64 / n as f64)
                .map(|t| (t, 1.0 + l2 * t, 1.0, 1.0))
                .collect();
            let metric = ClosedFormMetric::new(
                "invariant-lambda1-zero",
                params,
                if l2 > 0.0 {
                    (-1.0 / l2, f64::INFINITY)
                } else if l2 < 0.0 {
                    (f64::NEG_INFINITY, -1.0 / l2)
                } else {
                    (f64::NEG_INFINITY, f64::INFINITY)
                },
                vec![
                    (scalar(|_| num_dual::Dual2_64::from_re(1.0)), m_omega),
                    (
                        scalar(move |t| {
                            let c = t * l2 + 1.0;
                            c * c
                        }),
                        m_alpha,
                    ),
                ],
                scalar(|_| num_dual::Dual2_64::from_re(1.0)),
            );
            let st = structure_at.clone();
            let structure = StructureFn(Arc::new(move |t: f64| {
                Ok(FlowStructure::Su3(st(1.0 + l2 * t, 1.0, 1.0)?))
            }));
            (samples, Dense::Direct { metric, structure }, stop)
        }
        Some(fam) => {
            let metric = ClosedFormMetric::new(
                "invariant-torsion",
                params,
                fam.domain,
                vec![
                    (scalar(move |x| fam.omega_coeff(x)), m_omega),
                    (scalar(move |x| fam.alpha_coeff(x)), m_alpha),
                ],
                scalar(move |x| fam.alpha_coeff(x).recip()),
            );
            let sol = dopri45(
                |_, y| {
                    let v = fam.x_prime(y[0]);
                    if v.is_finite() {
                        Ok(vec![v])
                    } else {
                        Err(FlowError::Degenerate {
                            t: f64::NAN,
                            reason: format!("x = {} left the domain", y[0]),
                        })
                    }
                },
                0.0,
                vec![0.0],
                t1,
                &opts.ode,
                |t, y| {
                    let x = y[0];
                    if !(x > fam.domain.0 && x < fam.domain.1) {
                        return Some(format!(
                            "x = {x} leaves the domain {:?} at t = {t}",
                            fam.domain
                        ));
                    }
                    let (u, xp) = (fam.omega_coeff(x), fam.x_prime(x));
                    let m = u.min(xp * xp);
                    (m < floor).then(|| {
                        format!("metric degenerates at t = {t}: smallest coefficient {m:e}")
                    })
                },
            )?;
            let samples = sol
                .t
                .iter()
                .zip(&sol.y)
                .map(|(&t, y)| {
                    let x = y[0];
                    let xp = fam.x_prime(x);
                    (t, xp, fam.omega_coeff(x), fam.f(x) / xp)
                })
                .collect();
            let stop = sol.stop.clone();
            let st = structure_at.clone();
            let structure = StructureFn(Arc::new(move |x: f64| {
                let xp = fam.x_prime(x);
                Ok(FlowStructure::Su3(st(
                    xp,
                    fam.omega_coeff(x),
                    fam.f(x) / xp,
                )?))
            }));
            let speed = scalar(move |x| fam.x_prime(x));
            (
                samples,
                Dense::Reparametrized {
                    metric,
                    x: sol,
                    ode: opts.ode,
                    speed,
                    structure,
                },
                stop,
            )
        }
    };
    let mut samples = Vec::with_capacity(samples_raw.len());
    for (t, xp, u, psi_scale) in samples_raw {
        let s = structure_at(xp, u, psi_scale)?;
        let closure = check_hypo(alg, &s).residual();
        let normalization = s.normalization_residual();
        samples.push(su3_sample(t, s, closure, normalization));
    }
    let mut traj = FlowTrajectory {
        method: FlowMethod::Closed,
        alg: alg.clone(),
        samples,
        stop_reason: stop,
        dense,
    };
    orient(&mut traj);
    Ok(traj)
}
