//! JSON documents for algebras and structures, and the CSV trajectory format.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::expr::{parse_form_degree, parse_scalar};
use crate::algebra::{jacobi_check, Form, LieAlgebra};
use crate::error::DocumentError;
use crate::flow::FlowTrajectory;
use crate::gstruct::{
    g2_metric, sp1_to_su3, validate_su3, G2Structure, Sp1Structure, Su3Structure,
};

pub const SCHEMA: u32 = 1;

fn schema() -> u32 {
    SCHEMA
}

/// A number or an expression such as `"2*sqrt(2)"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Number(f64),
    Expr(String),
}

impl Coefficient {
    pub fn value(&self) -> Result<f64, DocumentError> {
        match self {
            Coefficient::Number(x) => Ok(*x),
            Coefficient::Expr(s) => Ok(parse_scalar(s)?),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketTerm {
    pub k: usize,
    pub c: Coefficient,
}

/// `[e_i, e_j] = sum c e_k`, 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    pub terms: Vec<BracketTerm>,
}

/// A Lie algebra by its nonzero brackets or by the differentials of the dual basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraDocument {
    #[serde(default = "schema")]
    pub schema: u32,
    pub dim: usize,
    /// Basis labels, `e1, ..., en` when absent; keys of `differentials`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brackets: Option<Vec<BracketEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub differentials: Option<BTreeMap<String, String>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Notation {
    Brackets,
    Differentials,
}

impl AlgebraDocument {
    pub fn from_json(src: &str) -> Result<Self, DocumentError> {
        serde_json::from_str(src).map_err(|e| DocumentError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }

    fn labels(&self) -> Result<Vec<String>, DocumentError> {
        let labels = self
            .labels
            .clone()
            .unwrap_or_else(|| (1..=self.dim).map(|i| format!("e{i}")).collect());
        if labels.len() != self.dim {
            return Err(DocumentError::Invalid(format!(
                "{} labels for dimension {}",
                labels.len(),
                self.dim
            )));
        }
        Ok(labels)
    }

    /// Builds the algebra and checks the Jacobi identity to `1e-12`.
    pub fn to_algebra(&self) -> Result<LieAlgebra, DocumentError> {
        let n = self.dim;
        if n == 0 || n > 8 {
            return Err(DocumentError::Invalid(format!(
                "dimension {n} is outside 1..=8"
            )));
        }
        let alg = match (&self.brackets, &self.differentials) {
            (Some(brackets), None) => {
                let index = |i: usize| {
                    if (1..=n).contains(&i) {
                        Ok(i - 1)
                    } else {
                        Err(DocumentError::Invalid(format!(
                            "bracket index {i} outside 1..={n}"
                        )))
                    }
                };
                let mut list = Vec::with_capacity(brackets.len());
                for b in brackets {
                    let mut v = vec![0.0; n];
                    for t in &b.terms {
                        v[index(t.k)?] += t.c.value()?;
                    }
                    list.push((index(b.i)?, index(b.j)?, v));
                }
                LieAlgebra::from_brackets(n, &list)?
            }
            (None, Some(map)) => {
                let labels = self.labels()?;
                if let Some(k) = map.keys().find(|k| !labels.contains(k)) {
                    return Err(DocumentError::Invalid(format!(
                        "unknown label {k:?} in differentials"
                    )));
                }
                let de = labels
                    .iter()
                    .map(|l| match map.get(l) {
                        Some(src) => parse_form_degree(n, 2, src).map_err(DocumentError::from),
                        None => Ok(Form::zero(n, 2)),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                LieAlgebra::from_differentials(&de)?
            }
            _ => {
                return Err(DocumentError::Invalid(
                    "give exactly one of brackets and differentials".into(),
                ))
            }
        };
        jacobi_check(&alg, 1e-12)?;
        Ok(alg)
    }

    pub fn from_algebra(alg: &LieAlgebra, notation: Notation) -> Self {
        let n = alg.dim();
        let mut doc = AlgebraDocument {
            schema: SCHEMA,
            dim: n,
            labels: None,
            brackets: None,
            differentials: None,
        };
        match notation {
            Notation::Differentials => {
                let map = alg
                    .differentials()
                    .iter()
                    .enumerate()
                    .filter(|(_, f)| !f.is_zero(0.0))
                    .map(|(i, f)| (format!("e{}", i + 1), f.to_string()))
                    .collect();
                doc.differentials = Some(map);
            }
            Notation::Brackets => {
                let mut list = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        let terms: Vec<BracketTerm> = (0..n)
                            .filter(|&k| alg.c(i, j, k) != 0.0)
                            .map(|k| BracketTerm {
                                k: k + 1,
                                c: Coefficient::Number(alg.c(i, j, k)),
                            })
                            .collect();
                        if !terms.is_empty() {
                            list.push(BracketEntry {
                                i: i + 1,
                                j: j + 1,
                                terms,
                            });
                        }
                    }
                }
                doc.brackets = Some(list);
            }
        }
        doc
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureKind {
    Su3,
    G2,
    Sp1,
}

/// Named forms as expressions: `alpha, omega, rho` for su3, `phi` for g2 and
/// `alpha1..3, omega1..3` for sp1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureDocument {
    #[serde(default = "schema")]
    pub schema: u32,
    pub kind: StructureKind,
    pub forms: BTreeMap<String, String>,
}

/// A structure that passed its validator.
#[derive(Clone, Debug)]
pub enum Structure {
    Su3(Su3Structure),
    G2(G2Structure),
    /// With the SU(3)-structure it induces.
    Sp1(Sp1Structure, Su3Structure),
}

impl Structure {
    /// The SU(3)-structure, if the structure carries one.
    pub fn su3(&self) -> Option<&Su3Structure> {
        match self {
            Structure::Su3(s) | Structure::Sp1(_, s) => Some(s),
            Structure::G2(_) => None,
        }
    }
}

impl StructureDocument {
    pub fn from_json(src: &str) -> Result<Self, DocumentError> {
        serde_json::from_str(src).map_err(|e| DocumentError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }

    fn form(&self, name: &str, degree: usize) -> Result<Form, DocumentError> {
        let src = self
            .forms
            .get(name)
            .ok_or_else(|| DocumentError::Invalid(format!("missing form {name:?}")))?;
        Ok(parse_form_degree(7, degree, src)?)
    }

    fn expect_keys(&self, keys: &[&str]) -> Result<(), DocumentError> {
        match self.forms.keys().find(|k| !keys.contains(&k.as_str())) {
            Some(k) => Err(DocumentError::Invalid(format!(
                "unexpected form {k:?}; expected {keys:?}"
            ))),
            None => Ok(()),
        }
    }

    /// Parses the forms on `R^7` and runs the validator of the kind.
    pub fn validate(&self) -> Result<Structure, DocumentError> {
        match self.kind {
            StructureKind::Su3 => {
                self.expect_keys(&["alpha", "omega", "rho"])?;
                let (a, w, r) = (
                    self.form("alpha", 1)?,
                    self.form("omega", 2)?,
                    self.form("rho", 3)?,
                );
                Ok(Structure::Su3(validate_su3(&a, &w, &r, 1e-9)?))
            }
            StructureKind::G2 => {
                self.expect_keys(&["phi"])?;
                Ok(Structure::G2(g2_metric(&self.form("phi", 3)?)?))
            }
            StructureKind::Sp1 => {
                self.expect_keys(&["alpha1", "alpha2", "alpha3", "omega1", "omega2", "omega3"])?;
                let alpha = [
                    self.form("alpha1", 1)?,
                    self.form("alpha2", 1)?,
                    self.form("alpha3", 1)?,
                ];
                let omega = [
                    self.form("omega1", 2)?,
                    self.form("omega2", 2)?,
                    self.form("omega3", 2)?,
                ];
                let sp1 = Sp1Structure { alpha, omega };
                let su3 = sp1_to_su3(&sp1, 1e-9)?;
                Ok(Structure::Sp1(sp1, su3))
            }
        }
    }

    pub fn from_su3(s: &Su3Structure) -> Self {
        let forms = [("alpha", &s.alpha), ("omega", &s.omega), ("rho", &s.rho)]
            .into_iter()
            .map(|(k, f)| (k.to_string(), f.to_string()))
            .collect();
        StructureDocument {
            schema: SCHEMA,
            kind: StructureKind::Su3,
            forms,
        }
    }

    pub fn from_g2(g: &G2Structure) -> Self {
        let forms = [("phi".to_string(), g.phi.to_string())]
            .into_iter()
            .collect();
        StructureDocument {
            schema: SCHEMA,
            kind: StructureKind::G2,
            forms,
        }
    }
}

/// Writes `t, g_ij (i <= j), closure_residual, normalization_residual` per sample.
pub fn write_trajectory_csv<W: Write>(tr: &FlowTrajectory, mut out: W) -> std::io::Result<()> {
    let n = tr.alg.dim();
    let mut header = vec!["t".to_string()];
    for i in 0..n {
        for j in i..n {
            header.push(format!("g{}{}", i + 1, j + 1));
        }
    }
    header.push("closure_residual".into());
    header.push("normalization_residual".into());
    writeln!(out, "{}", header.join(","))?;
    for s in &tr.samples {
        let mut row = vec![s.t.to_string()];
        for i in 0..n {
            for j in i..n {
                row.push(s.metric[(i, j)].to_string());
            }
        }
        row.push(s.closure_residual.to_string());
        row.push(s.normalization_residual.to_string());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads the `t` column and the metrics back from [`write_trajectory_csv`] output.
pub fn read_trajectory_csv(src: &str) -> Result<Vec<(f64, nalgebra::DMatrix<f64>)>, DocumentError> {
    let mut lines = src.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| DocumentError::Invalid("empty CSV".into()))?
        .split(',')
        .collect();
    let entries = header.iter().filter(|h| h.starts_with('g')).count();
    // n (n + 1) / 2 metric columns.
    let n = ((((8 * entries + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    if n * (n + 1) / 2 != entries {
        return Err(DocumentError::Invalid(format!(
            "{entries} metric columns do not form a triangle"
        )));
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let vals = line
            .split(',')
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|e| DocumentError::Invalid(format!("row {}: {e}", k + 2)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if vals.len() != header.len() {
            return Err(DocumentError::Invalid(format!(
                "row {} has {} fields",
                k + 2,
                vals.len()
            )));
        }
        let mut g = nalgebra::DMatrix::zeros(n, n);
        let mut c = 1;
        for i in 0..n {
            for j in i..n {
                g[(i, j)] = vals[c];
                g[(j, i)] = vals[c];
                c += 1;
            }
        }
        rows.push((vals[0], g));
    }
    Ok(rows)
}
