use nalgebra::{DMatrix, DVector};

use super::form::Form;
use super::multi_index::{binomial, indices, table, MAX_DIM};
use crate::error::AlgebraError;

const ANTISYMMETRY_TOL: f64 = 1e-14;

/// A real Lie algebra given by structure constants `[e_i, e_j] = sum_k c[i][j][k] e_k`
/// in a fixed basis, together with the matrices of its Chevalley-Eilenberg differential.
///
/// The differential uses `d eta(X, Y) = -eta([X, Y])` on 1-forms, extended as an
/// antiderivation, so `d e^k = -sum_{i<j} c[i][j][k] e^{ij}`.
#[derive(Clone, Debug)]
pub struct LieAlgebra {
    dim: usize,
    c: Vec<f64>,
    d: Vec<DMatrix<f64>>,
}

impl LieAlgebra {
    pub fn from_structure_constants(dim: usize, c: Vec<f64>) -> Result<Self, AlgebraError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(AlgebraError::Dimension(dim));
        }
        if c.len() != dim * dim * dim {
            return Err(AlgebraError::Shape {
                expected: dim * dim * dim,
                got: c.len(),
            });
        }
        let scale = c.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let a = c[(i * dim + j) * dim + k];
                    let b = c[(j * dim + i) * dim + k];
                    if (a + b).abs() > ANTISYMMETRY_TOL * scale {
                        return Err(AlgebraError::NotAntisymmetric {
                            i: i + 1,
                            j: j + 1,
                            k: k + 1,
                        });
                    }
                }
            }
        }
        let mut alg = LieAlgebra {
            dim,
            c,
            d: Vec::new(),
        };
        alg.d = (0..dim).map(|k| alg.build_d_matrix(k)).collect();
        Ok(alg)
    }

    /// Brackets given as `(i, j, [e_i, e_j])` with 0-based indices; unlisted pairs commute.
    pub fn from_brackets(
        dim: usize,
        brackets: &[(usize, usize, Vec<f64>)],
    ) -> Result<Self, AlgebraError> {
        let mut c = vec![0.0; dim * dim * dim];
        for (i, j, v) in brackets {
            let (i, j) = (*i, *j);
            if i >= dim || j >= dim || v.len() != dim {
                return Err(AlgebraError::Shape {
                    expected: dim,
                    got: v.len().max(i.max(j) + 1),
                });
            }
            if i == j {
                if v.iter().any(|x| *x != 0.0) {
                    return Err(AlgebraError::NotAntisymmetric {
                        i: i + 1,
                        j: j + 1,
                        k: 0,
                    });
                }
                continue;
            }
            for k in 0..dim {
                c[(i * dim + j) * dim + k] += v[k];
                c[(j * dim + i) * dim + k] -= v[k];
            }
        }
        LieAlgebra::from_structure_constants(dim, c)
    }

    /// The algebra whose differentials of the dual basis are the given 2-forms.
    pub fn from_differentials(de: &[Form]) -> Result<Self, AlgebraError> {
        let dim = de.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(AlgebraError::Dimension(dim));
        }
        let mut c = vec![0.0; dim * dim * dim];
        for (k, f) in de.iter().enumerate() {
            if f.dim() != dim || f.degree() != 2 {
                return Err(AlgebraError::DifferentialShape { index: k + 1 });
            }
            for (idx, v) in f.terms() {
                let (i, j) = (idx[0], idx[1]);
                c[(i * dim + j) * dim + k] = -v;
                c[(j * dim + i) * dim + k] = v;
            }
        }
        LieAlgebra::from_structure_constants(dim, c)
    }

    pub fn abelian(dim: usize) -> Self {
        LieAlgebra::from_structure_constants(dim, vec![0.0; dim * dim * dim])
            .expect("abelian algebra")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.dim + j) * self.dim + k]
    }

    pub fn structure_constants(&self) -> &[f64] {
        &self.c
    }

    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n];
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let xy = x[i] * y[j];
                if xy == 0.0 {
                    continue;
                }
                for (k, o) in out.iter_mut().enumerate() {
                    *o += xy * self.c(i, j, k);
                }
            }
        }
        out
    }

    /// Matrix of `ad_x`, columns are `[x, e_j]`.
    pub fn ad(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |k, j| (0..n).map(|i| x[i] * self.c(i, j, k)).sum())
    }

    pub fn ad_basis(&self, i: usize) -> DMatrix<f64> {
        let mut x = vec![0.0; self.dim];
        x[i] = 1.0;
        self.ad(&x)
    }

    pub fn is_abelian(&self, tol: f64) -> bool {
        self.c.iter().all(|v| v.abs() <= tol)
    }

    /// Differentials `d e^k` of the dual basis.
    pub fn differentials(&self) -> Vec<Form> {
        (0..self.dim)
            .map(|k| self.d(&Form::monomial(self.dim, &[k])))
            .collect()
    }

    pub fn d_matrix(&self, degree: usize) -> &DMatrix<f64> {
        &self.d[degree]
    }

    pub fn d(&self, a: &Form) -> Form {
        assert_eq!(a.dim(), self.dim, "form and algebra dimensions differ");
        let k = a.degree();
        if k == self.dim {
            panic!("differential of a top-degree form");
        }
        let v = &self.d[k] * DVector::from_column_slice(a.coeffs());
        Form::from_coeffs(self.dim, k + 1, v.as_slice().to_vec())
    }

    /// Sup-norm of the Jacobiator over all basis triples.
    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        let basis = |i: usize| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            v
        };
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let (x, y, z) = (basis(i), basis(j), basis(k));
                    let a = self.bracket(&self.bracket(&x, &y), &z);
                    let b = self.bracket(&self.bracket(&y, &z), &x);
                    let c = self.bracket(&self.bracket(&z, &x), &y);
                    for l in 0..n {
                        worst = worst.max((a[l] + b[l] + c[l]).abs());
                    }
                }
            }
        }
        worst
    }

    /// Largest component of `[e_i, u]` orthogonal to `span(u)`, over the basis `e_i` and the
    /// given spanning vectors `u`. Zero iff the span is an ideal.
    pub fn ideal_residual(&self, span: &[Vec<f64>]) -> f64 {
        let n = self.dim;
        if span.is_empty() {
            return 0.0;
        }
        let u = DMatrix::from_fn(n, span.len(), |r, c| span[c][r]);
        let q = u.qr().q();
        let rank = span.len().min(n);
        let q = q.columns(0, rank).into_owned();
        let mut worst = 0.0f64;
        for i in 0..n {
            let ad = self.ad_basis(i);
            for v in span {
                let w = &ad * DVector::from_column_slice(v);
                let perp = &w - &q * (q.transpose() * &w);
                worst = worst.max(perp.amax());
            }
        }
        worst
    }

    /// Structure constants in the basis given by the columns of `a`.
    pub fn change_basis(&self, a: &DMatrix<f64>) -> Result<LieAlgebra, AlgebraError> {
        let n = self.dim;
        let inv = a.clone().try_inverse().ok_or(AlgebraError::SingularBasis)?;
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|j| a.column(j).iter().copied().collect())
            .collect();
        let mut c = vec![0.0; n * n * n];
        for i in 0..n {
            for j in i + 1..n {
                let b = DVector::from_vec(self.bracket(&cols[i], &cols[j]));
                let coords = &inv * b;
                for k in 0..n {
                    c[(i * n + j) * n + k] = coords[k];
                    c[(j * n + i) * n + k] = -coords[k];
                }
            }
        }
        LieAlgebra::from_structure_constants(n, c)
    }

    fn build_d_matrix(&self, degree: usize) -> DMatrix<f64> {
        let n = self.dim;
        let rows = binomial(n, degree + 1);
        let cols = binomial(n, degree);
        let mut m = DMatrix::zeros(rows, cols);
        if degree == 0 {
            return m;
        }
        let de: Vec<Form> = (0..n)
            .map(|k| {
                let mut f = Form::zero(n, 2);
                for i in 0..n {
                    for j in i + 1..n {
                        let v = self.c(i, j, k);
                        if v != 0.0 {
                            f.add_term(&[i, j], -v);
                        }
                    }
                }
                f
            })
            .collect();
        for (col, &mask) in table(n, degree).masks.iter().enumerate() {
            let idx: Vec<usize> = indices(mask).collect();
            let mut acc = Form::zero(n, degree + 1);
            for (slot, &i) in idx.iter().enumerate() {
                if de[i].is_zero(0.0) {
                    continue;
                }
                let prefix = Form::monomial(n, &idx[..slot]);
                let suffix = Form::monomial(n, &idx[slot + 1..]);
                let term = prefix.wedge(&de[i]).wedge(&suffix);
                if slot % 2 == 0 {
                    acc += &term;
                } else {
                    acc -= &term;
                }
            }
            for (row, v) in acc.coeffs().iter().enumerate() {
                m[(row, col)] = *v;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heisenberg_differential() {
        // [e1, e2] = e3 gives d e^3 = -e^{12}.
        let h3 = LieAlgebra::from_brackets(3, &[(0, 1, vec![0., 0., 1.])]).unwrap();
        let de = h3.differentials();
        assert_eq!(de[2], Form::monomial(3, &[0, 1]).scaled(-1.0));
        assert!(de[0].is_zero(0.0));
        assert_eq!(h3.jacobi_residual(), 0.0);
    }

    #[test]
    fn differentials_round_trip() {
        let h3 = LieAlgebra::from_brackets(3, &[(0, 1, vec![1., 0., 2.])]).unwrap();
        let again = LieAlgebra::from_differentials(&h3.differentials()).unwrap();
        assert_eq!(again.structure_constants(), h3.structure_constants());
    }

    #[test]
    fn rejects_non_antisymmetric() {
        let mut c = vec![0.0; 8];
        // [e_0, e_1] = e_0 without the matching [e_1, e_0] = -e_0.
        c[2] = 1.0;
        assert!(matches!(
            LieAlgebra::from_structure_constants(2, c),
            Err(AlgebraError::NotAntisymmetric { .. })
        ));
    }

    #[test]
    fn jacobi_violation_detected() {
        // [e1,e2]=e3, [e2,e3]=e1, [e1,e3]=e1 is not a Lie algebra.
        let alg = LieAlgebra::from_brackets(
            3,
            &[
                (0, 1, vec![0., 0., 1.]),
                (1, 2, vec![1., 0., 0.]),
                (0, 2, vec![1., 0., 0.]),
            ],
        )
        .unwrap();
        assert!(alg.jacobi_residual() > 0.5);
    }
}
