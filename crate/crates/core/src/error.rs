use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("dimension {0} is outside 1..=8")]
    Dimension(usize),
    #[error("expected {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("structure constants are not antisymmetric at (i, j, k) = ({i}, {j}, {k})")]
    NotAntisymmetric { i: usize, j: usize, k: usize },
    #[error("d e^{index} is not a 2-form on the algebra")]
    DifferentialShape { index: usize },
    #[error("Jacobi identity fails: residual {residual:e}")]
    Jacobi { residual: f64 },
    #[error("change of basis matrix is singular")]
    SingularBasis,
}

/// Failure of a structure to satisfy one of its defining identities; the variant names the
/// identity and carries the measured residual where one exists.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum StructureError {
    #[error("expected a {expected}-form on R^{dim}, got degree {degree} on R^{got_dim}")]
    WrongType {
        expected: usize,
        dim: usize,
        degree: usize,
        got_dim: usize,
    },
    #[error("3-form is not stable: lambda = {lambda:e} (need lambda < 0)")]
    NotStable { lambda: f64 },
    #[error("omega does not have rank 6 (singular values {singular:?})")]
    OmegaRank { singular: Vec<f64> },
    #[error("alpha vanishes on the kernel of omega")]
    AlphaOnKernel,
    #[error("psi is not horizontal: |X _| rho| = {residual:e}")]
    NotHorizontal { residual: f64 },
    #[error("compatibility omega ^ psi = 0 fails: residual {residual:e}")]
    Compatibility { residual: f64 },
    #[error("normalization phi(psi) = 2 phi(omega) fails: residual {residual:e}")]
    Normalization { residual: f64 },
    #[error("metric is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotDefinite { min_eigenvalue: f64 },
    #[error("induced bilinear form is not symmetric: asymmetry {residual:e}")]
    NotSymmetric { residual: f64 },
    #[error("3-form is degenerate: det b_phi = {det:e}")]
    Degenerate { det: f64 },
    #[error("Sp(1) relation fails: {identity} residual {residual:e}")]
    Sp1Relation {
        identity: &'static str,
        residual: f64,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TorsionError {
    #[error("structure is not hypo: |d omega| = {d_omega:e}, |d(alpha ^ psi)| = {d_alpha_psi:e}")]
    NotHypo { d_omega: f64, d_alpha_psi: f64 },
    #[error("structure equations reconstruct with residual {residual:e}")]
    Reconstruction { residual: f64 },
    #[error("torsion components violate their type conditions: residual {residual:e}")]
    Typing { residual: f64 },
    #[error("torsion is not of invariant type 2V1: {detail}")]
    NotInvariant { detail: String },
    #[error("rescaling needs sgn(a1 a2) = sgn(lambda1 lambda2); got a1 a2 = {target:e}, lambda1 lambda2 = {actual:e}")]
    SignMismatch { target: f64, actual: f64 },
    #[error(transparent)]
    Structure(#[from] StructureError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstructError {
    #[error("Kahler data fails {identity}: residual {residual:e}")]
    Kahler {
        identity: &'static str,
        residual: f64,
    },
    #[error("input violates {identity}: residual {residual:e}")]
    Precondition {
        identity: &'static str,
        residual: f64,
    },
    #[error("no vector field solves the inducing equations")]
    NoInducingField,
    #[error("endomorphism is not in sp(6): |f.omega| = {residual:e}")]
    NotSymplectic { residual: f64 },
    #[error("unknown catalog id {0:?}")]
    UnknownFixture(String),
    #[error("bad catalog parameters for {id}: {reason}")]
    FixtureParameters { id: String, reason: String },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Torsion(#[from] TorsionError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("initial data rejected: {0}")]
    Initial(String),
    #[error("Newton inversion of the 4-form failed at t = {t}: residual {residual:e}")]
    Newton { t: f64, residual: f64 },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("state degenerates at t = {t}: {reason}")]
    Degenerate { t: f64, reason: String },
    #[error("time {t} outside the trajectory range [{t0}, {t1}]")]
    OutOfRange { t: f64, t0: f64, t1: f64 },
    #[error("parameters outside the supported range: {0}")]
    Parameters(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Torsion(#[from] TorsionError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("metric is not positive definite at t = {t}")]
    NotDefinite { t: f64 },
    #[error("need at least {needed} sample points, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error(transparent)]
    Flow(#[from] FlowError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("{message} at byte {offset} in {input:?}")]
    Syntax {
        input: String,
        offset: usize,
        message: String,
    },
    #[error("basis index {index} outside 1..={dim}")]
    Index { index: usize, dim: usize },
    #[error("document error: {0}")]
    Document(String),
}

/// Failure to turn a document into a checked object. `is_usage` separates malformed input
/// from well-formed input that fails a mathematical check.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DocumentError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

impl DocumentError {
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            DocumentError::Json(_) | DocumentError::Invalid(_) | DocumentError::Parse(_)
        ) || matches!(
            self,
            DocumentError::Algebra(AlgebraError::Shape { .. } | AlgebraError::Dimension(_))
        )
    }
}
