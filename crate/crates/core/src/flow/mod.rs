//! Hitchin and hypo flows on Lie algebras: the implicit Hitchin stepper, the reduced flow of
//! hypo structures without `V6` torsion, closed-form solutions and the 8-dimensional assembly.

mod assemble;
pub mod closed;
mod diagonal;
mod hitchin;
mod ode;
mod reduced;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::algebra::LieAlgebra;
use crate::error::FlowError;
use crate::gstruct::{G2Structure, Su3Structure};

pub use assemble::{assemble_8d, AssemblyReport, Structure8};
pub use closed::{
    diagonal_closed, f_lambda_mu, hypo_invariant_closed, ClosedFormMetric, FBranch, FLambdaMu,
    InvariantFamily,
};
pub use diagonal::{diagonal_solve, DiagonalSolution};
pub use hitchin::{hitchin_integrate, hitchin_velocity};
pub use ode::{dopri45, OdeOptions, OdeSolution};
pub use reduced::{
    hat_flow_residuals, hypo_invariant_trajectory, hypo_reduced_2v1v8v12, HatFlowResiduals,
};

/// A symmetric matrix-valued function with its first two derivatives at one parameter value.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricJet {
    pub g: DMatrix<f64>,
    pub dg: DMatrix<f64>,
    pub ddg: DMatrix<f64>,
}

impl MetricJet {
    pub fn zeros(n: usize) -> Self {
        MetricJet {
            g: DMatrix::zeros(n, n),
            dg: DMatrix::zeros(n, n),
            ddg: DMatrix::zeros(n, n),
        }
    }

    /// The jet of `g(t) + dt^2` from the jet of `g(t)`.
    pub fn with_unit_lapse(&self) -> MetricJet {
        let n = self.g.nrows();
        let mut out = MetricJet::zeros(n + 1);
        out.g.view_mut((0, 0), (n, n)).copy_from(&self.g);
        out.dg.view_mut((0, 0), (n, n)).copy_from(&self.dg);
        out.ddg.view_mut((0, 0), (n, n)).copy_from(&self.ddg);
        out.g[(n, n)] = 1.0;
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowMethod {
    Hitchin,
    Reduced,
    Closed,
    Diagonal,
}

impl FlowMethod {
    pub fn label(self) -> &'static str {
        match self {
            FlowMethod::Hitchin => "hitchin",
            FlowMethod::Reduced => "reduced",
            FlowMethod::Closed => "closed",
            FlowMethod::Diagonal => "diagonal",
        }
    }
}

impl fmt::Display for FlowMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for FlowMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hitchin" => Ok(FlowMethod::Hitchin),
            "reduced" => Ok(FlowMethod::Reduced),
            "closed" => Ok(FlowMethod::Closed),
            "diagonal" => Ok(FlowMethod::Diagonal),
            other => Err(format!(
                "unknown flow method {other:?}; expected hitchin, reduced, closed or diagonal"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowOptions {
    pub ode: OdeOptions,
    /// Integration stops once the smallest metric eigenvalue drops below this.
    pub eigen_floor: f64,
    /// Newton stops once `|*phi phi - sigma| <= newton_tol (1 + |sigma|)`.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Central-difference step for the Newton Jacobian.
    pub fd_step: f64,
    /// Samples whose closure or normalization residual exceeds this end the trajectory.
    pub residual_bound: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            ode: OdeOptions::default(),
            eigen_floor: 1e-8,
            newton_tol: 1e-13,
            newton_max_iter: 40,
            fd_step: 1e-6,
            residual_bound: 1e-6,
        }
    }
}

/// One accepted point of a trajectory.
#[derive(Clone, Debug)]
pub struct FlowSample {
    pub t: f64,
    /// `g(t)` on the Lie algebra.
    pub metric: DMatrix<f64>,
    pub g2: Option<G2Structure>,
    pub su3: Option<Su3Structure>,
    /// `|d(*phi phi)|` for G2 samples, `|d omega| + |d(alpha ^ psi)|` for SU(3) samples.
    pub closure_residual: f64,
    /// `phi(psi) / 2 phi(omega) - 1` for SU(3) samples, 0 otherwise.
    pub normalization_residual: f64,
    pub newton_iterations: usize,
}

/// A solution of one of the flows on a strictly increasing grid `t_0 = 0 < ... < t_n`.
#[derive(Clone, Debug)]
pub struct FlowTrajectory {
    pub method: FlowMethod,
    pub alg: LieAlgebra,
    pub samples: Vec<FlowSample>,
    /// Why the trajectory ends before the requested endpoint.
    pub stop_reason: Option<String>,
    pub(crate) dense: Dense,
}

/// The structure carried by a trajectory at one time.
#[derive(Clone, Debug)]
pub enum FlowStructure {
    G2(G2Structure),
    Su3(Su3Structure),
}

/// Structure as a function of the closed-form parameter.
#[derive(Clone)]
pub(crate) struct StructureFn(
    pub(crate) Arc<dyn Fn(f64) -> Result<FlowStructure, FlowError> + Send + Sync>,
);

impl fmt::Debug for StructureFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("StructureFn")
    }
}

#[derive(Clone)]
pub(crate) enum Dense {
    Hitchin(hitchin::HitchinDense),
    Reduced(reduced::ReducedDense),
    /// `g(t)` is a closed-form metric in `x` evaluated at `x(t)`.
    Reparametrized {
        metric: ClosedFormMetric,
        x: OdeSolution,
        ode: OdeOptions,
        speed: closed::ScalarFn,
        structure: StructureFn,
    },
    /// The closed-form metric is already parametrized by `t` with unit lapse.
    Direct {
        metric: ClosedFormMetric,
        structure: StructureFn,
    },
}

impl fmt::Debug for Dense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dense::Hitchin(h) => f.debug_tuple("Hitchin").field(h).finish(),
            Dense::Reduced(r) => f.debug_tuple("Reduced").field(r).finish(),
            Dense::Reparametrized { metric, x, .. } => f
                .debug_struct("Reparametrized")
                .field("metric", metric)
                .field("grid", &x.t.len())
                .finish(),
            Dense::Direct { metric, .. } => {
                f.debug_struct("Direct").field("metric", metric).finish()
            }
        }
    }
}

impl FlowTrajectory {
    pub fn t_range(&self) -> (f64, f64) {
        (
            self.samples[0].t,
            self.samples.last().map_or(self.samples[0].t, |s| s.t),
        )
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    fn check_range(&self, t: f64) -> Result<(), FlowError> {
        let (t0, t1) = self.t_range();
        let slack = 1e-12 * (1.0 + t0.abs().max(t1.abs()));
        if t < t0 - slack || t > t1 + slack {
            return Err(FlowError::OutOfRange { t, t0, t1 });
        }
        Ok(())
    }

    /// `g(t)` at any time in the trajectory range, to integrator accuracy.
    pub fn metric_at(&self, t: f64) -> Result<DMatrix<f64>, FlowError> {
        self.check_range(t)?;
        match &self.dense {
            Dense::Hitchin(h) => h.metric_at(t),
            Dense::Reduced(r) => r.metric_at(t),
            Dense::Reparametrized {
                metric,
                x,
                ode,
                speed,
                ..
            } => {
                let xv = closed_x_at(x, ode, speed, t)?;
                Ok(metric.metric(xv))
            }
            Dense::Direct { metric, .. } => Ok(metric.metric(t)),
        }
    }

    /// The G2- or SU(3)-structure at any time in the trajectory range.
    pub fn structure_at(&self, t: f64) -> Result<FlowStructure, FlowError> {
        self.check_range(t)?;
        match &self.dense {
            Dense::Hitchin(h) => Ok(FlowStructure::G2(h.structure_at(t)?)),
            Dense::Reduced(r) => Ok(FlowStructure::Su3(r.structure_at(t)?)),
            Dense::Reparametrized {
                x,
                ode,
                speed,
                structure,
                ..
            } => (structure.0)(closed_x_at(x, ode, speed, t)?),
            Dense::Direct { structure, .. } => (structure.0)(t),
        }
    }

    /// For closed-form trajectories, the parameter `x(t)` of the closed-form metric.
    pub fn closed_parameter(&self, t: f64) -> Option<Result<f64, FlowError>> {
        match &self.dense {
            Dense::Reparametrized { x, ode, speed, .. } => Some(
                self.check_range(t)
                    .and_then(|_| closed_x_at(x, ode, speed, t)),
            ),
            Dense::Direct { .. } => Some(self.check_range(t).map(|_| t)),
            _ => None,
        }
    }

    /// The closed-form metric behind a closed-form or diagonal trajectory.
    pub fn closed_metric(&self) -> Option<&ClosedFormMetric> {
        match &self.dense {
            Dense::Reparametrized { metric, .. } | Dense::Direct { metric, .. } => Some(metric),
            _ => None,
        }
    }

    /// For closed-form trajectories, the structure at the closed-form parameter `x`.
    pub fn closed_structure(&self, x: f64) -> Option<Result<FlowStructure, FlowError>> {
        match &self.dense {
            Dense::Reparametrized { structure, .. } | Dense::Direct { structure, .. } => {
                Some((structure.0)(x))
            }
            _ => None,
        }
    }

    /// `(g, g', g'')` at time `t`.
    ///
    /// Exact given the state at `t` for Hitchin and closed-form trajectories; reduced
    /// trajectories difference their state-space maps along the flow.
    pub fn metric_jet(&self, t: f64) -> Result<MetricJet, FlowError> {
        self.check_range(t)?;
        match &self.dense {
            Dense::Hitchin(h) => h.metric_jet(t),
            Dense::Reduced(r) => r.metric_jet(t),
            Dense::Reparametrized {
                metric,
                x,
                ode,
                speed,
                ..
            } => {
                let xv = closed_x_at(x, ode, speed, t)?;
                let jx = metric.jet(xv)?;
                let n = metric.dim();
                // x' = v(x), x'' = v'(x) v(x).
                let (v, dv, _) = num_dual::second_derivative(|y| speed(y), xv);
                let g = jx.g.view((0, 0), (n, n)).into_owned();
                let gx = jx.dg.view((0, 0), (n, n)).into_owned();
                let gxx = jx.ddg.view((0, 0), (n, n)).into_owned();
                Ok(MetricJet {
                    dg: &gx * v,
                    ddg: &gxx * (v * v) + &gx * (dv * v),
                    g,
                })
            }
            Dense::Direct { metric: m, .. } => {
                let j = m.jet(t)?;
                let n = m.dim();
                let cut = |a: &DMatrix<f64>| a.view((0, 0), (n, n)).into_owned();
                Ok(MetricJet {
                    g: cut(&j.g),
                    dg: cut(&j.dg),
                    ddg: cut(&j.ddg),
                })
            }
        }
    }

    pub fn max_closure_residual(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.closure_residual)
            .fold(0.0, f64::max)
    }

    pub fn max_normalization_residual(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.normalization_residual)
            .fold(0.0, f64::max)
    }

    pub fn max_newton_iterations(&self) -> usize {
        self.samples
            .iter()
            .map(|s| s.newton_iterations)
            .max()
            .unwrap_or(0)
    }
}

pub(crate) fn closed_x_at(
    x: &OdeSolution,
    ode: &OdeOptions,
    speed: &closed::ScalarFn,
    t: f64,
) -> Result<f64, FlowError> {
    let k = nearest(&x.t, t);
    if x.t[k] == t {
        return Ok(x.y[k][0]);
    }
    let sol = dopri45(
        |_, y| Ok(vec![speed(num_dual::Dual2_64::from_re(y[0])).re]),
        x.t[k],
        x.y[k].clone(),
        t,
        ode,
        |_, _| None,
    )?;
    Ok(sol.y.last().unwrap()[0])
}

/// Index of the grid point closest to `t`.
pub(crate) fn nearest(grid: &[f64], t: f64) -> usize {
    let k = grid.partition_point(|&s| s < t);
    if k == 0 {
        0
    } else if k == grid.len() || (t - grid[k - 1]) <= (grid[k] - t) {
        k - 1
    } else {
        k
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub(crate) fn min_eigenvalue(g: &DMatrix<f64>) -> f64 {
    nalgebra::SymmetricEigen::new((g + g.transpose()) * 0.5)
        .eigenvalues
        .min()
}
