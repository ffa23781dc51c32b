//! Curvature and holonomy of cohomogeneity-one metrics `g(s) + N(s) ds^2` on `G x I`.
//!
//! Everything is computed in the frame `(E_1, ..., E_n, d/ds)` of left-invariant fields
//! and the parameter direction, where all brackets with `d/ds` vanish and the only
//! non-trivial derivative of a coefficient is along `d/ds`.

mod holonomy;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::algebra::{Form, LieAlgebra};
use crate::error::{FlowError, GeometryError};
use crate::flow::{ClosedFormMetric, FlowStructure, FlowTrajectory, MetricJet};
use crate::gstruct::{su3_from_g2, su3_to_g2, G2Structure, Su3Structure};

pub use holonomy::{
    holonomy_algebra, holonomy_estimate, parallel_form_search, Containment, HolonomyAlgebra,
    HolonomyOptions, HolonomyReport, ParallelFormSearch, Verdict,
};

type JetFn = Arc<dyn Fn(f64) -> Result<MetricJet, FlowError> + Send + Sync>;
/// The structure and the lapse at one parameter value.
type StructureFn = Arc<dyn Fn(f64) -> Result<(FlowStructure, f64), GeometryError> + Send + Sync>;

/// The candidate parallel forms of a cohomogeneity-one metric, in the coframe `(e^1, ..., e^n, ds)`.
#[derive(Clone, Debug, Default)]
pub struct ParallelForms {
    /// `Omega`, `Re Psi`, `Im Psi`.
    pub su4: Option<[Form; 3]>,
    pub spin7: Option<Form>,
}

impl ParallelForms {
    /// The forms of `(alpha, omega, psi)` with `dt = sqrt(N) ds`.
    pub fn from_su3(s: &Su3Structure, lapse: f64) -> Result<Self, GeometryError> {
        let n = s.alpha.dim() + 1;
        let dt = Form::monomial(n, &[n - 1]).scaled(lapse.sqrt());
        let alpha = s.alpha.extend(n);
        let (rho, rho_hat) = (s.rho.extend(n), s.rho_hat.extend(n));
        let omega = &s.omega.extend(n) + &alpha.wedge(&dt);
        let psi_re = &rho.wedge(&alpha) + &rho_hat.wedge(&dt);
        let psi_im = &rho_hat.wedge(&alpha) - &rho.wedge(&dt);
        let g2 = su3_to_g2(s).map_err(FlowError::from)?;
        Ok(ParallelForms {
            su4: Some([omega, psi_re, psi_im]),
            spin7: Some(spin7_form(&g2, &dt)),
        })
    }

    pub fn from_g2(g: &G2Structure, lapse: f64) -> Self {
        let n = g.phi.dim() + 1;
        let dt = Form::monomial(n, &[n - 1]).scaled(lapse.sqrt());
        ParallelForms {
            su4: None,
            spin7: Some(spin7_form(g, &dt)),
        }
    }

    fn from_structure(
        s: &FlowStructure,
        lapse: f64,
        reeb: Option<&[f64]>,
    ) -> Result<Self, GeometryError> {
        match (s, reeb) {
            (FlowStructure::Su3(s), _) => Self::from_su3(s, lapse),
            (FlowStructure::G2(g), Some(a)) => {
                Self::from_su3(&su3_from_g2(g, a).map_err(FlowError::from)?, lapse)
            }
            (FlowStructure::G2(g), None) => Ok(Self::from_g2(g, lapse)),
        }
    }
}

/// `Phi = phi ^ dt + *phi`.
fn spin7_form(g: &G2Structure, dt: &Form) -> Form {
    let n = dt.dim();
    &g.phi.extend(n).wedge(dt) + &g.star_phi().extend(n)
}

/// A metric `g(s) + N(s) ds^2` on `G x I` given by the jet of its Gram matrix in the frame
/// `(E_1, ..., E_n, d/ds)`.
#[derive(Clone)]
pub struct CohomOneMetric {
    pub alg: LieAlgebra,
    pub domain: (f64, f64),
    /// Whether the endpoints belong to the domain.
    pub closed: bool,
    jet: JetFn,
    structure: Option<StructureFn>,
    reeb: Option<Vec<f64>>,
}

impl fmt::Debug for CohomOneMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CohomOneMetric")
            .field("dim", &self.alg.dim())
            .field("domain", &self.domain)
            .field("structure", &self.structure.is_some())
            .finish_non_exhaustive()
    }
}

impl CohomOneMetric {
    /// `jet(s)` is the `(n+1) x (n+1)` jet, the lapse `N` in the last diagonal entry.
    pub fn new<F>(alg: LieAlgebra, domain: (f64, f64), closed: bool, jet: F) -> Self
    where
        F: Fn(f64) -> Result<MetricJet, FlowError> + Send + Sync + 'static,
    {
        CohomOneMetric {
            alg,
            domain,
            closed,
            jet: Arc::new(jet),
            structure: None,
            reeb: None,
        }
    }

    /// `g(s) + ds^2` for a constant Gram matrix.
    pub fn constant(alg: LieAlgebra, g: DMatrix<f64>) -> Self {
        let jet = MetricJet {
            dg: DMatrix::zeros(g.nrows(), g.ncols()),
            ddg: DMatrix::zeros(g.nrows(), g.ncols()),
            g,
        };
        let full = jet.with_unit_lapse();
        Self::new(alg, (f64::NEG_INFINITY, f64::INFINITY), false, move |_| {
            Ok(full.clone())
        })
    }

    /// `g(t) + dt^2` along a flow trajectory, with the trajectory's structure as candidate
    /// parallel forms.
    pub fn from_trajectory(tr: &FlowTrajectory) -> Self {
        let tr = Arc::new(tr.clone());
        let (jt, ft) = (tr.clone(), tr.clone());
        let mut m = Self::new(tr.alg.clone(), tr.t_range(), true, move |t| {
            Ok(jt.metric_jet(t)?.with_unit_lapse())
        });
        m.structure = Some(Arc::new(move |t| Ok((ft.structure_at(t)?, 1.0))));
        m
    }

    /// A closed-form metric in its own parameter.
    pub fn from_closed(alg: LieAlgebra, metric: ClosedFormMetric) -> Self {
        let domain = metric.domain;
        Self::new(alg, domain, false, move |s| metric.jet(s))
    }

    /// The closed-form metric behind a closed-form trajectory, in the closed-form parameter
    /// and with its lapse, carrying the trajectory's structure family.
    pub fn from_closed_trajectory(tr: &FlowTrajectory) -> Option<Self> {
        let metric = tr.closed_metric()?.clone();
        let tr = Arc::new(tr.clone());
        let lapse = metric.clone();
        let mut m = Self::from_closed(tr.alg.clone(), metric);
        m.structure = Some(Arc::new(move |x| {
            let s = tr.closed_structure(x).expect("closed-form trajectory")?;
            Ok((s, lapse.lapse(x)))
        }));
        Some(m)
    }

    /// Derives the SU(4) forms of G2 samples from the SU(3)-structure along the unit vector
    /// dual to the covector `a`.
    pub fn with_reeb_covector(mut self, a: &[f64]) -> Self {
        self.reeb = Some(a.to_vec());
        self
    }

    /// Attaches a structure family with its lapse as candidate parallel data.
    pub fn with_structure<F>(mut self, structure: F) -> Self
    where
        F: Fn(f64) -> Result<(FlowStructure, f64), GeometryError> + Send + Sync + 'static,
    {
        self.structure = Some(Arc::new(structure));
        self
    }

    pub fn dim(&self) -> usize {
        self.alg.dim() + 1
    }

    pub fn contains(&self, s: f64) -> bool {
        if self.closed {
            s >= self.domain.0 && s <= self.domain.1
        } else {
            s > self.domain.0 && s < self.domain.1
        }
    }

    pub fn jet(&self, s: f64) -> Result<MetricJet, GeometryError> {
        if !self.contains(s) {
            return Err(FlowError::OutOfRange {
                t: s,
                t0: self.domain.0,
                t1: self.domain.1,
            }
            .into());
        }
        Ok((self.jet)(s)?)
    }

    pub fn forms(&self, s: f64) -> Option<Result<ParallelForms, GeometryError>> {
        let f = self.structure.as_ref()?;
        Some(f(s).and_then(|(st, lapse)| {
            ParallelForms::from_structure(&st, lapse, self.reeb.as_deref())
        }))
    }

    /// Largest deviation of the jet from fourth-order central differences of `g` with step
    /// `h`, relative to the size of the derivative.
    pub fn jet_consistency(&self, s: f64, h: f64) -> Result<f64, GeometryError> {
        let j = self.jet(s)?;
        let at = |k: f64| self.jet(s + k * h).map(|j| j.g);
        let (m2, m1, p1, p2) = (at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?);
        let d1 = (&m2 - &p2 + (&p1 - &m1) * 8.0) / (12.0 * h);
        let d2 = (-&m2 - &p2 + (&p1 + &m1) * 16.0 - &j.g * 30.0) / (12.0 * h * h);
        let e1 = (&d1 - &j.dg).abs().max() / j.dg.abs().max().max(1.0);
        let e2 = (&d2 - &j.ddg).abs().max() / j.ddg.abs().max().max(1.0);
        Ok(e1.max(e2))
    }
}

/// Structure constants of `g + R d/ds`, `c[(a * n + b) * n + d] = c_ab^d`.
fn frame_constants(alg: &LieAlgebra) -> Vec<f64> {
    let (m, n) = (alg.dim(), alg.dim() + 1);
    let mut c = vec![0.0; n * n * n];
    for a in 0..m {
        for b in 0..m {
            for d in 0..m {
                c[(a * n + b) * n + d] = alg.c(a, b, d);
            }
        }
    }
    c
}

/// Lower Koszul coefficients `2 g(nabla_A E_B, E_C)` for the Gram matrix `g` and its
/// parameter derivative `dg`, stored as matrices `k[A][(C, B)]`.
fn koszul(c: &[f64], g: &DMatrix<f64>, dg: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let n = g.nrows();
    let s = n - 1;
    let cc = |a: usize, b: usize, d: usize| c[(a * n + b) * n + d];
    let delta = |a: usize| if a == s { 1.0 } else { 0.0 };
    (0..n)
        .map(|a| {
            DMatrix::from_fn(n, n, |cix, b| {
                let mut v =
                    delta(a) * dg[(b, cix)] + delta(b) * dg[(a, cix)] - delta(cix) * dg[(a, b)];
                for d in 0..n {
                    v += cc(a, b, d) * g[(d, cix)]
                        - cc(a, cix, d) * g[(d, b)]
                        - cc(b, cix, d) * g[(d, a)];
                }
                0.5 * v
            })
        })
        .collect()
}

/// The Levi-Civita connection at one parameter value: `nabla_{E_A} E_C = sum_D gamma[A][(D, C)] E_D`.
#[derive(Clone, Debug)]
pub struct Connection {
    pub s: f64,
    pub jet: MetricJet,
    pub gamma: Vec<DMatrix<f64>>,
    /// `d/ds` of `gamma`.
    pub dgamma: Vec<DMatrix<f64>>,
    c: Vec<f64>,
}

impl Connection {
    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    /// `max |E_A g(E_B, E_C) - g(nabla_A E_B, E_C) - g(E_B, nabla_A E_C)|`.
    pub fn compatibility_residual(&self) -> f64 {
        let n = self.dim();
        let g = &self.jet.g;
        let mut r = 0.0f64;
        for a in 0..n {
            let lhs = if a == n - 1 {
                self.jet.dg.clone()
            } else {
                DMatrix::zeros(n, n)
            };
            let gg = g * &self.gamma[a];
            r = r.max((&lhs - &gg - gg.transpose()).abs().max());
        }
        r
    }

    /// `max |nabla_A E_B - nabla_B E_A - [E_A, E_B]|`.
    pub fn torsion_residual(&self) -> f64 {
        let n = self.dim();
        let mut r = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for d in 0..n {
                    let t =
                        self.gamma[a][(d, b)] - self.gamma[b][(d, a)] - self.c[(a * n + b) * n + d];
                    r = r.max(t.abs());
                }
            }
        }
        r
    }

    /// Size of the terms curvature is built from, for absolute thresholds.
    pub fn scale(&self) -> f64 {
        let g2: f64 = self.gamma.iter().map(|m| m.norm_squared()).sum();
        let dg: f64 = self.dgamma.iter().map(|m| m.norm_squared()).sum();
        g2.max(dg.sqrt())
    }

    fn structure_constant(&self, a: usize, b: usize, d: usize) -> f64 {
        let n = self.dim();
        self.c[(a * n + b) * n + d]
    }
}

pub fn levi_civita(m: &CohomOneMetric, s: f64) -> Result<Connection, GeometryError> {
    let jet = m.jet(s)?;
    let c = frame_constants(&m.alg);
    let ginv = jet
        .g
        .clone()
        .cholesky()
        .ok_or(GeometryError::NotDefinite { t: s })?
        .inverse();
    let k = koszul(&c, &jet.g, &jet.dg);
    let dk = koszul(&c, &jet.dg, &jet.ddg);
    let dginv = -(&ginv * &jet.dg * &ginv);
    let gamma: Vec<DMatrix<f64>> = k.iter().map(|ka| &ginv * ka).collect();
    let dgamma = k
        .iter()
        .zip(&dk)
        .map(|(ka, dka)| &ginv * dka + &dginv * ka)
        .collect();
    Ok(Connection {
        s,
        jet,
        gamma,
        dgamma,
        c,
    })
}

/// Riemann, Ricci and scalar curvature at one parameter value.
#[derive(Clone, Debug)]
pub struct Curvature {
    pub connection: Connection,
    /// `R(E_A, E_B) E_C = sum_D riemann[A * n + B][(D, C)] E_D`.
    pub riemann: Vec<DMatrix<f64>>,
    /// `Ric(E_B, E_C)`.
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
}

pub fn curvature(m: &CohomOneMetric, s: f64) -> Result<Curvature, GeometryError> {
    Ok(curvature_of(levi_civita(m, s)?))
}

fn curvature_of(conn: Connection) -> Curvature {
    let n = conn.dim();
    let last = n - 1;
    let mut riemann = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let g = &conn.gamma;
            let mut r = &g[a] * &g[b] - &g[b] * &g[a];
            if a == last {
                r += &conn.dgamma[b];
            }
            if b == last {
                r -= &conn.dgamma[a];
            }
            for d in 0..n {
                let c = conn.structure_constant(a, b, d);
                if c != 0.0 {
                    r -= &g[d] * c;
                }
            }
            riemann.push(r);
        }
    }
    let ricci = DMatrix::from_fn(n, n, |b, c| {
        (0..n).map(|a| riemann[a * n + b][(a, c)]).sum()
    });
    let ginv = conn.jet.g.clone().try_inverse().expect("positive definite");
    let scalar = ginv.component_mul(&ricci).sum();
    Curvature {
        connection: conn,
        riemann,
        ricci,
        scalar,
    }
}

impl Curvature {
    pub fn dim(&self) -> usize {
        self.ricci.nrows()
    }

    pub fn operator(&self, a: usize, b: usize) -> &DMatrix<f64> {
        &self.riemann[a * self.dim() + b]
    }

    /// `g(R(E_A, E_B) E_C, E_D)`.
    pub fn lower(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let n = self.dim();
        let r = self.operator(a, b);
        (0..n)
            .map(|e| r[(e, c)] * self.connection.jet.g[(e, d)])
            .sum()
    }

    /// Largest violation of `R_abcd = -R_bacd = -R_abdc = R_cdab` and the first Bianchi
    /// identity, relative to `max(1, |R|)`.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.dim();
        let mut low = vec![0.0; n * n * n * n];
        let idx = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        low[idx(a, b, c, d)] = self.lower(a, b, c, d);
                    }
                }
            }
        }
        let size = low.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut r = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let v = low[idx(a, b, c, d)];
                        r = r
                            .max((v + low[idx(b, a, c, d)]).abs())
                            .max((v + low[idx(a, b, d, c)]).abs())
                            .max((v - low[idx(c, d, a, b)]).abs())
                            .max((v + low[idx(b, c, a, d)] + low[idx(c, a, b, d)]).abs());
                    }
                }
            }
        }
        r / size
    }

    /// Ricci tensor in a `g`-orthonormal frame.
    pub fn ricci_orthonormal(&self) -> DMatrix<f64> {
        let p = orthonormal_frame(&self.connection.jet.g).expect("positive definite");
        p.transpose() * &self.ricci * p
    }
}

/// `P` with `P^T g P = 1`, upper triangular.
pub fn orthonormal_frame(g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let l = g.clone().cholesky()?.l();
    l.transpose().try_inverse()
}
