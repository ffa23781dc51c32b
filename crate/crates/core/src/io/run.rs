//! Run configuration and summary documents, and flow dispatch from documents.

use serde::{Deserialize, Serialize};

use super::documents::{AlgebraDocument, Notation, Structure, StructureDocument, SCHEMA};
use crate::algebra::LieAlgebra;
use crate::construct::{diagonal_conditions, find_inducing_hypo, normal_form_matrix, DiagonalCase};
use crate::error::DocumentError;
use crate::flow::{
    assemble_8d, diagonal_solve, hitchin_integrate, hypo_invariant_trajectory,
    hypo_reduced_2v1v8v12, FlowMethod, FlowOptions, FlowTrajectory,
};
use crate::geometry::CohomOneMetric;
use crate::gstruct::{model, su3_to_g2, G2Structure};

fn schema() -> u32 {
    SCHEMA
}

fn default_rtol() -> f64 {
    1e-10
}

fn default_atol() -> f64 {
    1e-12
}

fn default_samples() -> usize {
    5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema")]
    pub schema: u32,
    pub method: FlowMethod,
    /// End of the time span, which starts at 0; negative values integrate backwards.
    pub t1: f64,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default = "default_samples")]
    pub holonomy_samples: usize,
    /// Directory receiving `trajectory.csv` and `summary.json`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl RunConfig {
    pub fn new(method: FlowMethod, t1: f64) -> Self {
        RunConfig {
            schema: SCHEMA,
            method,
            t1,
            rtol: default_rtol(),
            atol: default_atol(),
            holonomy_samples: default_samples(),
            output: None,
        }
    }

    pub fn check(&self) -> Result<(), DocumentError> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(DocumentError::Invalid(format!(
                "tolerances must be positive, got rtol {} atol {}",
                self.rtol, self.atol
            )));
        }
        if !(self.t1.is_finite() && self.t1 != 0.0) {
            return Err(DocumentError::Invalid(format!(
                "time span [0, {}] is degenerate",
                self.t1
            )));
        }
        Ok(())
    }

    pub fn flow_options(&self) -> FlowOptions {
        let mut o = FlowOptions::default();
        o.ode.rtol = self.rtol;
        o.ode.atol = self.atol;
        o
    }
}

/// `ad(e_7)` on `span(e_1, ..., e_6)` when that span is an Abelian ideal.
fn almost_abelian_matrix(alg: &LieAlgebra) -> Option<nalgebra::DMatrix<f64>> {
    if alg.dim() != 7 {
        return None;
    }
    for i in 0..6 {
        for j in 0..6 {
            if (0..7).any(|k| alg.c(i, j, k) != 0.0) {
                return None;
            }
        }
        if alg.c(6, i, 6) != 0.0 {
            return None;
        }
    }
    Some(nalgebra::DMatrix::from_fn(6, 6, |k, j| alg.c(6, j, k)))
}

fn g2_of(structure: &Structure) -> Result<G2Structure, DocumentError> {
    match structure {
        Structure::G2(g) => Ok(g.clone()),
        Structure::Su3(s) | Structure::Sp1(_, s) => Ok(su3_to_g2(s)?),
    }
}

fn needs_su3(
    structure: &Structure,
    method: FlowMethod,
) -> Result<&crate::gstruct::Su3Structure, DocumentError> {
    structure.su3().ok_or_else(|| {
        DocumentError::Invalid(format!("method {method} needs an su3 or sp1 structure"))
    })
}

/// Integrates the flow named by the configuration.
pub fn run_flow(
    cfg: &RunConfig,
    alg: &LieAlgebra,
    structure: &Structure,
) -> Result<FlowTrajectory, DocumentError> {
    cfg.check()?;
    if alg.dim() != 7 {
        return Err(DocumentError::Invalid(format!(
            "flows need a 7-dimensional algebra, got {}",
            alg.dim()
        )));
    }
    let opts = cfg.flow_options();
    let tr = match cfg.method {
        FlowMethod::Hitchin => hitchin_integrate(alg, &g2_of(structure)?, cfg.t1, &opts)?,
        FlowMethod::Reduced => {
            hypo_reduced_2v1v8v12(alg, needs_su3(structure, cfg.method)?, cfg.t1, &opts)?
        }
        FlowMethod::Closed => {
            hypo_invariant_trajectory(alg, needs_su3(structure, cfg.method)?, cfg.t1, &opts)?
        }
        FlowMethod::Diagonal => {
            let f = almost_abelian_matrix(alg).ok_or_else(|| {
                DocumentError::Invalid(
                    "the diagonal method needs span(e1..e6) to be an Abelian ideal".into(),
                )
            })?;
            let g2 = g2_of(structure)?;
            if !(&g2.phi - &model::phi0()).is_zero(1e-12) {
                return Err(DocumentError::Invalid(
                    "the diagonal method starts from the model G2-structure".into(),
                ));
            }
            let cond =
                diagonal_conditions(&f, &g2).map_err(|e| DocumentError::Invalid(e.to_string()))?;
            let DiagonalCase::Normal { a, lambda, mu } = cond.case else {
                return Err(DocumentError::Invalid(format!(
                    "ad(e7) is in case {}, not the normal form",
                    cond.case.label()
                )));
            };
            if (&f - normal_form_matrix(a, lambda, mu)).amax() > 1e-12 {
                return Err(DocumentError::Invalid(
                    "ad(e7) is not written in the normal-form basis".into(),
                ));
            }
            diagonal_solve(a, lambda, mu, cfg.t1, &opts)?.trajectory
        }
    };
    Ok(tr)
}

/// The 8-dimensional metric of a run, with SU(4) forms derived from the structure's
/// `alpha`, or from an inducing hypo structure when only `phi` is known.
pub fn run_metric(alg: &LieAlgebra, structure: &Structure, tr: &FlowTrajectory) -> CohomOneMetric {
    let m = CohomOneMetric::from_trajectory(tr);
    let reeb = match structure.su3() {
        Some(s) => Some(s.alpha.coeffs().to_vec()),
        None => match structure {
            Structure::G2(g) => find_inducing_hypo(alg, g, 1e-9)
                .ok()
                .map(|(_, s)| s.alpha.coeffs().to_vec()),
            _ => None,
        },
    };
    match reeb {
        Some(a) => m.with_reeb_covector(&a),
        None => m,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    #[serde(default = "schema")]
    pub schema: u32,
    pub config: RunConfig,
    pub algebra: AlgebraDocument,
    pub structure: StructureDocument,
    pub samples: usize,
    pub t_range: (f64, f64),
    pub stop_reason: Option<String>,
    pub max_closure_residual: f64,
    pub max_normalization_residual: f64,
    /// Largest `|d_8|` of the assembled 8-dimensional forms.
    pub assembly_residual: Option<f64>,
}

impl RunSummary {
    pub fn new(
        cfg: &RunConfig,
        alg: &LieAlgebra,
        structure: &StructureDocument,
        tr: &FlowTrajectory,
    ) -> Self {
        let fold =
            |f: fn(&crate::flow::FlowSample) -> f64| tr.samples.iter().map(f).fold(0.0, f64::max);
        RunSummary {
            schema: SCHEMA,
            config: cfg.clone(),
            algebra: AlgebraDocument::from_algebra(alg, Notation::Differentials),
            structure: structure.clone(),
            samples: tr.samples.len(),
            t_range: tr.t_range(),
            stop_reason: tr.stop_reason.clone(),
            max_closure_residual: fold(|s| s.closure_residual),
            max_normalization_residual: fold(|s| s.normalization_residual.abs()),
            assembly_residual: assemble_8d(tr).ok().map(|r| r.max_residual),
        }
    }

    pub fn from_json(src: &str) -> Result<Self, DocumentError> {
        serde_json::from_str(src).map_err(|e| DocumentError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summaries serialize")
    }

    /// Re-integrates the recorded run; the flows are deterministic, so this reproduces the
    /// trajectory behind the CSV with its exact jets.
    pub fn replay(&self) -> Result<(LieAlgebra, Structure, FlowTrajectory), DocumentError> {
        let alg = self.algebra.to_algebra()?;
        let structure = self.structure.validate()?;
        let tr = run_flow(&self.config, &alg, &structure)?;
        Ok((alg, structure, tr))
    }
}
