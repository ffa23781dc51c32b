//! Scalar-generic G2 maps on `R^7`: `phi -> b_phi`, `phi -> g_phi`, `phi -> *_phi phi`.
//!
//! The maps are evaluated on coefficient slices so that dual numbers can carry exact first
//! and second derivatives through them.

use std::sync::OnceLock;

use num_dual::DualNum;

use crate::algebra::multi_index::{indices, merge_sign, table};

pub(crate) const N: usize = 7;
pub(crate) const N3: usize = 35;

pub(crate) type Mat7<T> = [[T; N]; N];

pub trait Scalar: DualNum<f64> + Copy {}
impl<T: DualNum<f64> + Copy> Scalar for T {}

struct BTerm {
    i: u8,
    j: u8,
    a: u8,
    b: u8,
    c: u8,
    coef: f64,
}

/// Sparse cubic tensor with `b_ij = sum coef * phi_a phi_b phi_c`, where
/// `b_phi(X, Y) vol_0 = (1/6) (X _| phi) ^ (Y _| phi) ^ phi`.
fn b_terms() -> &'static [BTerm] {
    static TERMS: OnceLock<Vec<BTerm>> = OnceLock::new();
    TERMS.get_or_init(|| {
        let masks = &table(N, 3).masks;
        let pos3 = &table(N, 3).position;
        let full: u16 = (1 << N) - 1;
        let mut out = Vec::new();
        let slot_sign = |m: u16, i: usize| {
            let before = (m & ((1u16 << i) - 1)).count_ones();
            if before.is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        };
        for i in 0..N {
            for j in 0..N {
                for (a, &ma) in masks.iter().enumerate() {
                    if ma & (1 << i) == 0 {
                        continue;
                    }
                    let ra = ma & !(1 << i);
                    for (b, &mb) in masks.iter().enumerate() {
                        if mb & (1 << j) == 0 {
                            continue;
                        }
                        let rb = mb & !(1 << j);
                        if ra & rb != 0 {
                            continue;
                        }
                        let mc = full & !(ra | rb);
                        let c = pos3[mc as usize] as usize;
                        let sign = slot_sign(ma, i)
                            * slot_sign(mb, j)
                            * merge_sign(ra, rb)
                            * merge_sign(ra | rb, mc);
                        out.push(BTerm {
                            i: i as u8,
                            j: j as u8,
                            a: a as u8,
                            b: b as u8,
                            c: c as u8,
                            coef: sign / 6.0,
                        });
                    }
                }
            }
        }
        out
    })
}

pub(crate) fn b_matrix<T: Scalar>(phi: &[T]) -> Mat7<T> {
    debug_assert_eq!(phi.len(), N3);
    let mut b = [[T::zero(); N]; N];
    for t in b_terms() {
        b[t.i as usize][t.j as usize] +=
            phi[t.a as usize] * phi[t.b as usize] * phi[t.c as usize] * t.coef;
    }
    b
}

/// LU determinant with partial pivoting on real parts; destroys `m`.
pub(crate) fn det_in_place<T: Scalar, const K: usize>(m: &mut [[T; K]; K]) -> T {
    let mut det = T::one();
    for col in 0..K {
        let piv = (col..K)
            .max_by(|&a, &b| m[a][col].re().abs().total_cmp(&m[b][col].re().abs()))
            .unwrap();
        if m[piv][col].re() == 0.0 {
            return T::zero();
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        let inv = m[col][col].recip();
        for row in col + 1..K {
            let f = m[row][col] * inv;
            for j in col..K {
                let v = m[col][j];
                m[row][j] -= f * v;
            }
        }
    }
    det
}

/// Gauss-Jordan inverse with partial pivoting; `None` when singular.
pub(crate) fn inverse<T: Scalar, const K: usize>(m: &[[T; K]; K]) -> Option<[[T; K]; K]> {
    let mut a = *m;
    let mut inv = [[T::zero(); K]; K];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = T::one();
    }
    for col in 0..K {
        let piv = (col..K)
            .max_by(|&x, &y| a[x][col].re().abs().total_cmp(&a[y][col].re().abs()))
            .unwrap();
        if a[piv][col].re() == 0.0 {
            return None;
        }
        a.swap(piv, col);
        inv.swap(piv, col);
        let p = a[col][col].recip();
        for j in 0..K {
            a[col][j] *= p;
            inv[col][j] *= p;
        }
        for row in 0..K {
            if row == col {
                continue;
            }
            // No zero-skipping: dual numbers compare equal on real parts only.
            let f = a[row][col];
            for j in 0..K {
                let (ac, ic) = (a[col][j], inv[col][j]);
                a[row][j] -= f * ac;
                inv[row][j] -= f * ic;
            }
        }
    }
    Some(inv)
}

/// `g_phi = b_phi / det(b_phi)^(1/9)` and the orientation sign `sgn det b_phi`.
pub(crate) fn metric<T: Scalar>(phi: &[T]) -> Option<(Mat7<T>, f64)> {
    let b = b_matrix(phi);
    let mut work = b;
    let det = det_in_place(&mut work);
    if det.re() == 0.0 {
        return None;
    }
    let orientation = det.re().signum();
    let root = det.abs().powf(1.0 / 9.0) * orientation;
    let inv_root = root.recip();
    let mut g = b;
    for row in g.iter_mut() {
        for v in row.iter_mut() {
            *v *= inv_root;
        }
    }
    Some((g, orientation))
}

/// Hodge star of `phi` with respect to its own metric and orientation.
pub(crate) fn theta<T: Scalar>(phi: &[T]) -> Option<Vec<T>> {
    let (g, orientation) = metric(phi)?;
    star3(&g, orientation, phi)
}

/// Hodge star of a 3-form on `R^7` for a given metric.
pub(crate) fn star3<T: Scalar>(g: &Mat7<T>, orientation: f64, a: &[T]) -> Option<Vec<T>> {
    let ginv = inverse(g)?;
    let mut work = *g;
    let vol = det_in_place(&mut work).sqrt() * orientation;
    let masks = &table(N, 3).masks;
    let pos4 = &table(N, 4).position;
    let idx: Vec<[usize; 3]> = masks
        .iter()
        .map(|&m| {
            let v: Vec<usize> = indices(m).collect();
            [v[0], v[1], v[2]]
        })
        .collect();
    let full: u16 = (1 << N) - 1;
    let mut out = vec![T::zero(); 35];
    for (p, &mi) in masks.iter().enumerate() {
        let r = idx[p];
        let mut acc = T::zero();
        for (q, &aq) in a.iter().enumerate() {
            let c = idx[q];
            let m = |x: usize, y: usize| ginv[r[x]][c[y]];
            let d = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
            acc += d * aq;
        }
        let comp = full & !mi;
        out[pos4[comp as usize] as usize] = acc * vol * merge_sign(mi, comp);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_dual::Dual64;

    fn model_phi() -> Vec<f64> {
        crate::gstruct::model::phi0().coeffs().to_vec()
    }

    #[test]
    fn model_metric_is_identity() {
        let (g, o) = metric(&model_phi()).unwrap();
        assert_eq!(o, 1.0);
        for i in 0..7 {
            for j in 0..7 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[i][j] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn dual_derivative_of_theta_matches_homogeneity() {
        // theta(s phi) = s^(4/3) theta(phi), so d/ds at s = 1 is (4/3) theta.
        let phi = model_phi();
        let dual: Vec<Dual64> = phi.iter().map(|&v| Dual64::new(v, v)).collect();
        let t = theta(&dual).unwrap();
        for v in &t {
            assert!((v.eps - 4.0 / 3.0 * v.re).abs() < 1e-13);
        }
    }
}
