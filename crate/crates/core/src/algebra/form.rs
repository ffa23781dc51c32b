use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, DVector};

use super::multi_index::{binomial, indices, mask_of, merge_sign, table, MAX_DIM};

/// A real exterior form on `R^dim` with dense coefficients over lexicographically
/// ordered increasing multi-indices (0-based).
///
/// Evaluation follows the determinant convention: `e^{12}(e_1, e_2) = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Form {
    dim: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

impl Form {
    pub fn zero(dim: usize, degree: usize) -> Self {
        assert!(dim <= MAX_DIM, "dimension {dim} exceeds {MAX_DIM}");
        assert!(degree <= dim, "degree {degree} exceeds dimension {dim}");
        Form {
            dim,
            degree,
            coeffs: vec![0.0; binomial(dim, degree)],
        }
    }

    pub fn from_coeffs(dim: usize, degree: usize, coeffs: Vec<f64>) -> Self {
        assert_eq!(
            coeffs.len(),
            binomial(dim, degree),
            "coefficient count mismatch"
        );
        Form {
            dim,
            degree,
            coeffs,
        }
    }

    pub fn scalar(dim: usize, value: f64) -> Self {
        Form {
            dim,
            degree: 0,
            coeffs: vec![value],
        }
    }

    /// The monomial `e^{i1} ^ ... ^ e^{ik}` for 0-based indices in any order; repeated
    /// indices give zero.
    pub fn monomial(dim: usize, idx: &[usize]) -> Self {
        let mut f = Form::zero(dim, idx.len());
        assert!(
            idx.iter().all(|&i| i < dim),
            "index out of range in {idx:?}"
        );
        if let Some((mask, sign)) = mask_of(idx) {
            let p = f.position(mask);
            f.coeffs[p] = sign;
        }
        f
    }

    pub fn covector(v: &[f64]) -> Self {
        Form::from_coeffs(v.len(), 1, v.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub(crate) fn masks(&self) -> &'static [u16] {
        &table(self.dim, self.degree).masks
    }

    #[inline]
    pub(crate) fn position(&self, mask: u16) -> usize {
        table(self.dim, self.degree).position[mask as usize] as usize
    }

    /// Coefficient of the monomial with the given 0-based indices (sign-adjusted).
    pub fn coeff(&self, idx: &[usize]) -> f64 {
        assert_eq!(idx.len(), self.degree);
        match mask_of(idx) {
            Some((mask, sign)) => sign * self.coeffs[self.position(mask)],
            None => 0.0,
        }
    }

    pub fn add_term(&mut self, idx: &[usize], value: f64) {
        assert_eq!(idx.len(), self.degree);
        if let Some((mask, sign)) = mask_of(idx) {
            let p = self.position(mask);
            self.coeffs[p] += sign * value;
        }
    }

    /// Nonzero terms as (0-based increasing indices, coefficient).
    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.masks()
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, &c)| c != 0.0)
            .map(|(&m, &c)| (indices(m).collect(), c))
    }

    /// Euclidean norm of the coefficient vector (the norm of the standard metric).
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }

    /// Coefficient of `e^{1...n}`; zero unless the degree equals the dimension.
    pub fn top(&self) -> f64 {
        if self.degree == self.dim {
            self.coeffs[0]
        } else {
            0.0
        }
    }

    pub fn scaled(&self, s: f64) -> Form {
        Form {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| s * c).collect(),
        }
    }

    pub fn wedge(&self, other: &Form) -> Form {
        assert_eq!(self.dim, other.dim, "wedge of forms on different spaces");
        let n = self.dim;
        assert!(
            self.degree + other.degree <= n,
            "wedge product has degree above {n}"
        );
        let mut out = Form::zero(n, self.degree + other.degree);
        let out_pos = &table(n, out.degree).position;
        for (&ma, &a) in self.masks().iter().zip(&self.coeffs) {
            if a == 0.0 {
                continue;
            }
            for (&mb, &b) in other.masks().iter().zip(&other.coeffs) {
                if b == 0.0 || ma & mb != 0 {
                    continue;
                }
                out.coeffs[out_pos[(ma | mb) as usize] as usize] += merge_sign(ma, mb) * a * b;
            }
        }
        out
    }

    /// Interior product `v _| self`.
    pub fn interior(&self, v: &[f64]) -> Form {
        assert_eq!(v.len(), self.dim);
        assert!(self.degree > 0, "interior product of a function");
        let mut out = Form::zero(self.dim, self.degree - 1);
        let out_pos = &table(self.dim, self.degree - 1).position;
        for (&m, &a) in self.masks().iter().zip(&self.coeffs) {
            if a == 0.0 {
                continue;
            }
            for (slot, i) in indices(m).enumerate() {
                if v[i] == 0.0 {
                    continue;
                }
                let sign = if slot % 2 == 0 { 1.0 } else { -1.0 };
                out.coeffs[out_pos[(m & !(1 << i)) as usize] as usize] += sign * v[i] * a;
            }
        }
        out
    }

    pub fn interior_basis(&self, i: usize) -> Form {
        let mut v = vec![0.0; self.dim];
        v[i] = 1.0;
        self.interior(&v)
    }

    /// Pullback by the linear map `A` of the same dimension: `(A^* a)(X, ...) = a(AX, ...)`.
    pub fn pullback(&self, a: &DMatrix<f64>) -> Form {
        assert_eq!(a.nrows(), self.dim);
        assert_eq!(a.ncols(), self.dim);
        let mut out = Form::zero(self.dim, self.degree);
        let masks = self.masks();
        for (&mi, &c) in masks.iter().zip(&self.coeffs) {
            if c == 0.0 {
                continue;
            }
            for (pj, &mj) in masks.iter().enumerate() {
                out.coeffs[pj] += c * minor(a, mi, mj);
            }
        }
        out
    }

    /// Extension as a derivation of the linear map `l` acting on 1-form coefficient vectors.
    pub fn derivation(&self, l: &DMatrix<f64>) -> Form {
        assert_eq!(l.nrows(), self.dim);
        let n = self.dim;
        let mut out = Form::zero(n, self.degree);
        let pos = &table(n, self.degree).position;
        for (&m, &c) in self.masks().iter().zip(&self.coeffs) {
            if c == 0.0 {
                continue;
            }
            for i in indices(m) {
                // Replace e^i by sum_j l[j,i] e^j in place.
                let rest = m & !(1 << i);
                for j in 0..n {
                    let lji = l[(j, i)];
                    if lji == 0.0 || (rest & (1 << j)) != 0 {
                        continue;
                    }
                    // Sign of moving e^j from the slot of e^i to sorted position.
                    let between = if j > i {
                        (rest & (((1u16 << j) - 1) & !((1u16 << (i + 1)) - 1))).count_ones()
                    } else {
                        (rest & (((1u16 << i) - 1) & !((1u16 << (j + 1)) - 1))).count_ones()
                    };
                    let sign = if between % 2 == 0 { 1.0 } else { -1.0 };
                    out.coeffs[pos[(rest | (1 << j)) as usize] as usize] += sign * lji * c;
                }
            }
        }
        out
    }

    /// Drops the trailing coordinates, keeping forms on `R^new_dim`. Components that involve
    /// a dropped coordinate are ignored; callers check horizontality first.
    pub fn restrict(&self, new_dim: usize) -> Form {
        assert!(new_dim <= self.dim && self.degree <= new_dim);
        let mut out = Form::zero(new_dim, self.degree);
        let keep = ((1u32 << new_dim) - 1) as u16;
        for (&m, &c) in self.masks().iter().zip(&self.coeffs) {
            if m & !keep == 0 {
                let p = out.position(m);
                out.coeffs[p] = c;
            }
        }
        out
    }

    /// Includes the form into `R^new_dim` via the projection onto the leading coordinates.
    pub fn extend(&self, new_dim: usize) -> Form {
        assert!(new_dim >= self.dim && new_dim <= MAX_DIM);
        let mut out = Form::zero(new_dim, self.degree);
        for (&m, &c) in self.masks().iter().zip(&self.coeffs) {
            let p = out.position(m);
            out.coeffs[p] = c;
        }
        out
    }

    /// Part of the form involving coordinates at or beyond `split`.
    pub fn norm_outside(&self, split: usize) -> f64 {
        let keep = ((1u32 << split) - 1) as u16;
        self.masks()
            .iter()
            .zip(&self.coeffs)
            .filter(|(&m, _)| m & !keep != 0)
            .map(|(_, c)| c * c)
            .sum::<f64>()
            .sqrt()
    }

    /// Inner product induced by the metric `g` on vectors.
    pub fn inner(&self, other: &Form, g: &DMatrix<f64>) -> f64 {
        let gram = FormGram::new(g, self.degree);
        gram.inner(self, other)
    }

    pub fn norm_with(&self, g: &DMatrix<f64>) -> f64 {
        self.inner(self, g).max(0.0).sqrt()
    }

    /// Hodge star for the metric `g` and orientation sign (+1 for `e^{1...n}` positive),
    /// normalized so that `a ^ *b = <a, b> vol_g`.
    pub fn hodge_star(&self, g: &DMatrix<f64>, orientation: f64) -> Form {
        let n = self.dim;
        let gram = FormGram::new(g, self.degree);
        let vol = orientation * g.determinant().sqrt();
        let mut out = Form::zero(n, n - self.degree);
        let full = ((1u32 << n) - 1) as u16;
        for (pi, &mi) in self.masks().iter().enumerate() {
            let comp = full & !mi;
            let mut v = 0.0;
            for (pj, &c) in self.coeffs.iter().enumerate() {
                v += gram.matrix[(pi, pj)] * c;
            }
            let p = out.position(comp);
            out.coeffs[p] = vol * merge_sign(mi, comp) * v;
        }
        out
    }
}

/// Gram matrix of the induced inner product on forms of one degree.
pub struct FormGram {
    pub degree: usize,
    pub matrix: DMatrix<f64>,
}

impl FormGram {
    pub fn new(g: &DMatrix<f64>, degree: usize) -> Self {
        let n = g.nrows();
        let ginv = g.clone().try_inverse().expect("metric must be invertible");
        let masks = &table(n, degree).masks;
        let k = masks.len();
        let mut matrix = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let v = minor(&ginv, masks[a], masks[b]);
                matrix[(a, b)] = v;
                matrix[(b, a)] = v;
            }
        }
        FormGram { degree, matrix }
    }

    pub fn inner(&self, a: &Form, b: &Form) -> f64 {
        assert_eq!(a.degree, self.degree);
        assert_eq!(b.degree, self.degree);
        let va = DVector::from_column_slice(&a.coeffs);
        let vb = DVector::from_column_slice(&b.coeffs);
        va.dot(&(&self.matrix * vb))
    }

    pub fn norm(&self, a: &Form) -> f64 {
        self.inner(a, a).max(0.0).sqrt()
    }
}

/// Determinant of the submatrix with the given row and column index sets.
pub(crate) fn minor(a: &DMatrix<f64>, rows: u16, cols: u16) -> f64 {
    let r: Vec<usize> = indices(rows).collect();
    let c: Vec<usize> = indices(cols).collect();
    let k = r.len();
    match k {
        0 => 1.0,
        1 => a[(r[0], c[0])],
        2 => a[(r[0], c[0])] * a[(r[1], c[1])] - a[(r[0], c[1])] * a[(r[1], c[0])],
        _ => {
            let mut m = [[0.0f64; MAX_DIM]; MAX_DIM];
            for i in 0..k {
                for j in 0..k {
                    m[i][j] = a[(r[i], c[j])];
                }
            }
            small_det(&mut m, k)
        }
    }
}

fn small_det(m: &mut [[f64; MAX_DIM]; MAX_DIM], k: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..k {
            let f = m[row][col] / m[col][col];
            for j in col..k {
                m[row][j] -= f * m[col][j];
            }
        }
    }
    det
}

impl Add<&Form> for &Form {
    type Output = Form;
    fn add(self, rhs: &Form) -> Form {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for Form {
    type Output = Form;
    fn add(mut self, rhs: Form) -> Form {
        self += &rhs;
        self
    }
}

impl Sub<&Form> for &Form {
    type Output = Form;
    fn sub(self, rhs: &Form) -> Form {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Sub for Form {
    type Output = Form;
    fn sub(mut self, rhs: Form) -> Form {
        self -= &rhs;
        self
    }
}

impl AddAssign<&Form> for Form {
    fn add_assign(&mut self, rhs: &Form) {
        assert!(
            self.dim == rhs.dim && self.degree == rhs.degree,
            "adding forms of different type"
        );
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&Form> for Form {
    fn sub_assign(&mut self, rhs: &Form) {
        assert!(
            self.dim == rhs.dim && self.degree == rhs.degree,
            "subtracting forms of different type"
        );
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl Neg for &Form {
    type Output = Form;
    fn neg(self) -> Form {
        self.scaled(-1.0)
    }
}

impl Neg for Form {
    type Output = Form;
    fn neg(self) -> Form {
        self.scaled(-1.0)
    }
}

impl Mul<&Form> for f64 {
    type Output = Form;
    fn mul(self, rhs: &Form) -> Form {
        rhs.scaled(self)
    }
}

impl Mul<Form> for f64 {
    type Output = Form;
    fn mul(self, rhs: Form) -> Form {
        rhs.scaled(self)
    }
}

/// Prints 1-based monomials, e.g. `2*e12 - e34`.
impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (idx, c) in self.terms() {
            let name = if idx.is_empty() {
                String::from("1")
            } else if self.dim <= 9 {
                format!(
                    "e{}",
                    idx.iter().map(|i| (i + 1).to_string()).collect::<String>()
                )
            } else {
                format!(
                    "e{{{}}}",
                    idx.iter()
                        .map(|i| (i + 1).to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                )
            };
            let (sign, mag) = if c < 0.0 { ("-", -c) } else { ("+", c) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if mag == 1.0 && !idx.is_empty() {
                write!(f, "{name}")?;
            } else {
                write!(f, "{mag}*{name}")?;
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// A complex form stored as real and imaginary parts.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexForm {
    pub re: Form,
    pub im: Form,
}

impl ComplexForm {
    pub fn new(re: Form, im: Form) -> Self {
        assert_eq!(re.dim, im.dim);
        assert_eq!(re.degree, im.degree);
        ComplexForm { re, im }
    }

    pub fn real(re: Form) -> Self {
        let im = Form::zero(re.dim, re.degree);
        ComplexForm { re, im }
    }

    pub fn conj(&self) -> Self {
        ComplexForm {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    pub fn wedge(&self, other: &ComplexForm) -> ComplexForm {
        ComplexForm {
            re: &self.re.wedge(&other.re) - &self.im.wedge(&other.im),
            im: &self.re.wedge(&other.im) + &self.im.wedge(&other.re),
        }
    }

    pub fn wedge_real(&self, other: &Form) -> ComplexForm {
        ComplexForm {
            re: self.re.wedge(other),
            im: self.im.wedge(other),
        }
    }

    /// Multiplication by `a + ib`.
    pub fn scale(&self, a: f64, b: f64) -> ComplexForm {
        ComplexForm {
            re: &self.re.scaled(a) - &self.im.scaled(b),
            im: &self.re.scaled(b) + &self.im.scaled(a),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.re.norm().powi(2) + self.im.norm().powi(2)).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(dim: usize, idx: &[usize]) -> Form {
        Form::monomial(dim, &idx.iter().map(|i| i - 1).collect::<Vec<_>>())
    }

    #[test]
    fn monomial_signs() {
        assert_eq!(e(3, &[2, 1]), -&e(3, &[1, 2]));
        assert_eq!(e(3, &[1, 2]).wedge(&e(3, &[3])), e(3, &[1, 2, 3]));
        assert_eq!(e(3, &[2]).wedge(&e(3, &[1, 3])), -&e(3, &[1, 2, 3]));
        assert!(e(3, &[1, 1]).is_zero(0.0));
    }

    #[test]
    fn interior_of_monomial() {
        let f = e(4, &[1, 2, 4]);
        assert_eq!(f.interior_basis(0), e(4, &[2, 4]));
        assert_eq!(f.interior_basis(1), -&e(4, &[1, 4]));
        assert_eq!(f.interior_basis(3), e(4, &[1, 2]));
        assert!(f.interior_basis(2).is_zero(0.0));
    }

    #[test]
    fn hodge_star_euclidean() {
        let g = DMatrix::identity(4, 4);
        assert_eq!(e(4, &[1, 2]).hodge_star(&g, 1.0), e(4, &[3, 4]));
        assert_eq!(e(4, &[1, 3]).hodge_star(&g, 1.0), -&e(4, &[2, 4]));
        assert_eq!(e(4, &[1]).hodge_star(&g, 1.0), e(4, &[2, 3, 4]));
        assert_eq!(
            Form::scalar(4, 1.0).hodge_star(&g, -1.0),
            -&e(4, &[1, 2, 3, 4])
        );
    }

    #[test]
    fn pullback_swaps() {
        // A swaps e1 and e2: A^* e^1 = e^2.
        let a = DMatrix::from_row_slice(3, 3, &[0., 1., 0., 1., 0., 0., 0., 0., 1.]);
        assert_eq!(e(3, &[1]).pullback(&a), e(3, &[2]));
        assert_eq!(e(3, &[1, 3]).pullback(&a), e(3, &[2, 3]));
        assert_eq!(e(3, &[1, 2]).pullback(&a), -&e(3, &[1, 2]));
    }

    #[test]
    fn derivation_matches_leibniz() {
        let l = DMatrix::from_row_slice(3, 3, &[1., 2., 0., 0., -1., 3., 5., 0., 2.]);
        let a = e(3, &[1]);
        let b = e(3, &[2]) + e(3, &[3]).scaled(2.0);
        let la = Form::covector((&l * DVector::from_column_slice(a.coeffs())).as_slice());
        let lb = Form::covector((&l * DVector::from_column_slice(b.coeffs())).as_slice());
        let expected = &la.wedge(&b) + &a.wedge(&lb);
        let got = a.wedge(&b).derivation(&l);
        assert!((&got - &expected).is_zero(1e-14), "{got} vs {expected}");
    }

    #[test]
    fn display_is_one_based() {
        let f = &e(4, &[1, 2]).scaled(2.0) - &e(4, &[3, 4]);
        assert_eq!(f.to_string(), "2*e12 - e34");
    }
}
