//! The model tensors on `R^6` and `R^7` in the standard basis.

use nalgebra::DMatrix;

use crate::algebra::{ComplexForm, Form};

fn p(dim: usize, s: &str) -> Form {
    Form::parse(dim, s).expect("model tensor literal")
}

/// `e^7`.
pub fn alpha0() -> Form {
    Form::monomial(7, &[6])
}

/// `e^{12} + e^{34} + e^{56}` on `R^dim` (dim 6 or 7).
pub fn omega0(dim: usize) -> Form {
    p(dim, "e12+e34+e56")
}

/// `Re((e^1 - i e^2)(e^3 - i e^4)(e^5 - i e^6))`.
pub fn rho0(dim: usize) -> Form {
    p(dim, "e135-e146-e236-e245")
}

/// `Im((e^1 - i e^2)(e^3 - i e^4)(e^5 - i e^6))`.
pub fn rho_hat0(dim: usize) -> Form {
    p(dim, "-e136-e145-e235+e246")
}

pub fn psi0(dim: usize) -> ComplexForm {
    ComplexForm::new(rho0(dim), rho_hat0(dim))
}

/// `omega0 ^ e^7 + rho0`, whose metric is the identity and orientation `e^{1...7}`.
pub fn phi0() -> Form {
    &omega0(7).wedge(&alpha0()) + &rho0(7)
}

/// `*phi0 = e1234 + e1256 + e3456 + e1367 + e1457 + e2357 - e2467`.
pub fn star_phi0() -> Form {
    p(7, "e1234+e1256+e3456+e1367+e1457+e2357-e2467")
}

/// `J0 e_{2i-1} = -e_{2i}`, `J0 e_{2i} = e_{2i-1}` on the first six coordinates of `R^dim`.
pub fn j0(dim: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(dim, dim);
    for i in 0..3 {
        j[(2 * i + 1, 2 * i)] = -1.0;
        j[(2 * i, 2 * i + 1)] = 1.0;
    }
    j
}
