//! Closed-form solutions: `f_{lambda,mu}`, the invariant-torsion hypo family and the diagonal
//! almost Abelian metrics, all as metrics `sum_k c_k(s) M_k + N(s) ds^2` with exact jets.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_dual::{second_derivative, Dual2_64, DualNum};

use super::MetricJet;
use crate::error::FlowError;

pub type ScalarFn = Arc<dyn Fn(Dual2_64) -> Dual2_64 + Send + Sync>;

/// A cohomogeneity-one metric `g(s) + N(s) ds^2` on `G x J` with `g(s) = sum_k c_k(s) M_k`.
#[derive(Clone)]
pub struct ClosedFormMetric {
    pub tag: String,
    pub params: Vec<(String, f64)>,
    /// Open parameter interval on which the metric is positive definite.
    pub domain: (f64, f64),
    terms: Vec<(ScalarFn, DMatrix<f64>)>,
    lapse: ScalarFn,
}

impl fmt::Debug for ClosedFormMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosedFormMetric")
            .field("tag", &self.tag)
            .field("params", &self.params)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl ClosedFormMetric {
    pub fn new(
        tag: &str,
        params: Vec<(String, f64)>,
        domain: (f64, f64),
        terms: Vec<(ScalarFn, DMatrix<f64>)>,
        lapse: ScalarFn,
    ) -> Self {
        ClosedFormMetric {
            tag: tag.to_string(),
            params,
            domain,
            terms,
            lapse,
        }
    }

    /// Diagonal metric `sum_i c_i(s) e^i (x) e^i + N(s) ds^2`.
    pub fn diagonal(
        tag: &str,
        params: Vec<(String, f64)>,
        domain: (f64, f64),
        coeffs: Vec<ScalarFn>,
        lapse: ScalarFn,
    ) -> Self {
        let n = coeffs.len();
        let terms = coeffs
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                let mut m = DMatrix::zeros(n, n);
                m[(i, i)] = 1.0;
                (c, m)
            })
            .collect();
        Self::new(tag, params, domain, terms, lapse)
    }

    pub fn dim(&self) -> usize {
        self.terms[0].1.nrows()
    }

    pub fn contains(&self, s: f64) -> bool {
        s > self.domain.0 && s < self.domain.1
    }

    /// `g(s)` on the Lie algebra.
    pub fn metric(&self, s: f64) -> DMatrix<f64> {
        let n = self.dim();
        let x = Dual2_64::from_re(s);
        self.terms
            .iter()
            .fold(DMatrix::zeros(n, n), |acc, (c, m)| acc + m * c(x).re)
    }

    pub fn lapse(&self, s: f64) -> f64 {
        (self.lapse)(Dual2_64::from_re(s)).re
    }

    /// Exact jet of the 8-dimensional metric in the frame `(e_1, ..., e_n, d/ds)`.
    pub fn jet(&self, s: f64) -> Result<MetricJet, FlowError> {
        if !self.contains(s) {
            return Err(FlowError::OutOfRange {
                t: s,
                t0: self.domain.0,
                t1: self.domain.1,
            });
        }
        let n = self.dim();
        let mut jet = MetricJet::zeros(n + 1);
        for (c, m) in &self.terms {
            let (v, d1, d2) = second_derivative(|x| c(x), s);
            for i in 0..n {
                for j in 0..n {
                    jet.g[(i, j)] += v * m[(i, j)];
                    jet.dg[(i, j)] += d1 * m[(i, j)];
                    jet.ddg[(i, j)] += d2 * m[(i, j)];
                }
            }
        }
        let (v, d1, d2) = second_derivative(|x| (self.lapse)(x), s);
        jet.g[(n, n)] = v;
        jet.dg[(n, n)] = d1;
        jet.ddg[(n, n)] = d2;
        Ok(jet)
    }
}

pub(crate) fn scalar<F: Fn(Dual2_64) -> Dual2_64 + Send + Sync + 'static>(f: F) -> ScalarFn {
    Arc::new(f)
}

/// Branches of the solution of `f' = -(lambda f^2 + mu)`, `f(0) = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FBranch {
    /// `lambda / mu > 0`: `sqrt(mu/lambda) tan(-sgn(mu) sqrt(lambda mu) y + arctan sqrt(lambda/mu))`.
    Tan,
    /// `-1 < lambda / mu < 0`: the same with `tanh`, `artanh` and `sqrt(-lambda mu)`.
    Tanh,
    /// `lambda / mu < -1`: the same with `coth`, `arcoth`.
    Coth,
    /// `mu = 0`: `1 / (lambda y + 1)`.
    Reciprocal,
    /// `lambda = 0`: `1 - mu y`.
    Linear,
    /// `lambda + mu = 0`, `lambda != 0`: the constant solution `1`.
    Constant,
}

/// The maximal solution `f_{lambda,mu}` restricted to the interval around 0 where it is positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FLambdaMu {
    pub lambda: f64,
    pub mu: f64,
    pub branch: FBranch,
    pub domain: (f64, f64),
    k: f64,
    c: f64,
    theta0: f64,
}

pub fn f_lambda_mu(lambda: f64, mu: f64) -> FLambdaMu {
    let inf = f64::INFINITY;
    let base = FLambdaMu {
        lambda,
        mu,
        branch: FBranch::Constant,
        domain: (-inf, inf),
        k: 1.0,
        c: 0.0,
        theta0: 0.0,
    };
    if lambda == 0.0 {
        let domain = if mu > 0.0 {
            (-inf, 1.0 / mu)
        } else if mu < 0.0 {
            (1.0 / mu, inf)
        } else {
            (-inf, inf)
        };
        return FLambdaMu {
            branch: FBranch::Linear,
            domain,
            ..base
        };
    }
    if mu == 0.0 {
        let domain = if lambda > 0.0 {
            (-1.0 / lambda, inf)
        } else {
            (-inf, -1.0 / lambda)
        };
        return FLambdaMu {
            branch: FBranch::Reciprocal,
            domain,
            ..base
        };
    }
    let r = lambda / mu;
    if r == -1.0 {
        return base;
    }
    let s = mu.signum();
    // theta(y) = c y + theta0 must stay in (lo, hi).
    let (branch, k, c, theta0, lo, hi) = if r > 0.0 {
        (
            FBranch::Tan,
            (mu / lambda).sqrt(),
            -s * (lambda * mu).sqrt(),
            r.sqrt().atan(),
            0.0,
            FRAC_PI_2,
        )
    } else if r > -1.0 {
        (
            FBranch::Tanh,
            (-mu / lambda).sqrt(),
            -s * (-lambda * mu).sqrt(),
            (-r).sqrt().atanh(),
            0.0,
            inf,
        )
    } else {
        (
            FBranch::Coth,
            (-mu / lambda).sqrt(),
            -s * (-lambda * mu).sqrt(),
            (1.0 / (-r).sqrt()).atanh(),
            0.0,
            inf,
        )
    };
    let (a, b) = ((lo - theta0) / c, (hi - theta0) / c);
    FLambdaMu {
        lambda,
        mu,
        branch,
        domain: (a.min(b), a.max(b)),
        k,
        c,
        theta0,
    }
}

impl FLambdaMu {
    pub fn eval<T: DualNum<f64> + Copy>(&self, y: T) -> T {
        let theta = || y * self.c + self.theta0;
        match self.branch {
            FBranch::Tan => theta().tan() * self.k,
            FBranch::Tanh => theta().tanh() * self.k,
            FBranch::Coth => theta().tanh().recip() * self.k,
            FBranch::Reciprocal => (y * self.lambda + 1.0).recip(),
            FBranch::Linear => -y * self.mu + 1.0,
            FBranch::Constant => T::one(),
        }
    }

    pub fn value(&self, y: f64) -> f64 {
        self.eval(y)
    }

    pub fn contains(&self, y: f64) -> bool {
        y > self.domain.0 && y < self.domain.1
    }
}

/// The invariant-torsion family and the `x`-equation `x' = (1 - lambda1 x)^(-3/2) f(x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantFamily {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Maximal interval around 0 with `1 - lambda1 x > 0` and a positive radicand.
    pub domain: (f64, f64),
}

impl InvariantFamily {
    /// `f(x) = sqrt(-(lambda2 / 2 lambda1)(1 - lambda1 x)^4 + lambda2 / (2 lambda1) + 1)`.
    pub fn f<T: DualNum<f64> + Copy>(&self, x: T) -> T {
        let c = self.lambda2 / (2.0 * self.lambda1);
        let u = -x * self.lambda1 + 1.0;
        (-u.powi(4) * c + (c + 1.0)).sqrt()
    }

    /// `dx/dt`.
    pub fn x_prime<T: DualNum<f64> + Copy>(&self, x: T) -> T {
        let u = -x * self.lambda1 + 1.0;
        u.powf(-1.5) * self.f(x)
    }

    /// Coefficient of the `omega`-part of the metric.
    pub fn omega_coeff<T: DualNum<f64> + Copy>(&self, x: T) -> T {
        -x * self.lambda1 + 1.0
    }

    /// Coefficient of `alpha0 (x) alpha0`, `x'^2 = f^2 / (1 - lambda1 x)^3`.
    pub fn alpha_coeff<T: DualNum<f64> + Copy>(&self, x: T) -> T {
        let xp = self.x_prime(x);
        xp * xp
    }
}

/// Closed form of the hypo flow with invariant torsion `(lambda1, lambda2)` starting at the
/// model structure, parametrized by `x` (or by `t` when `lambda1 = 0`).
pub fn hypo_invariant_closed(
    lambda1: f64,
    lambda2: f64,
) -> Result<(ClosedFormMetric, Option<InvariantFamily>), FlowError> {
    if lambda1 * lambda2 < 0.0 {
        return Err(FlowError::Parameters(format!(
            "invariant torsion needs lambda1 lambda2 >= 0, got ({lambda1}, {lambda2})"
        )));
    }
    let params = vec![
        ("lambda1".to_string(), lambda1),
        ("lambda2".to_string(), lambda2),
    ];
    let one = scalar(|_| Dual2_64::from_re(1.0));
    if lambda1 == 0.0 {
        // alpha(t) = (1 + lambda2 t) alpha0 with omega and psi constant.
        let domain = if lambda2 > 0.0 {
            (-1.0 / lambda2, f64::INFINITY)
        } else if lambda2 < 0.0 {
            (f64::NEG_INFINITY, -1.0 / lambda2)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        };
        let mut coeffs: Vec<ScalarFn> = (0..6).map(|_| one.clone()).collect();
        coeffs.push(scalar(move |t| {
            let a = t * lambda2 + 1.0;
            a * a
        }));
        return Ok((
            ClosedFormMetric::diagonal("invariant-lambda1-zero", params, domain, coeffs, one),
            None,
        ));
    }
    let c = lambda2 / (2.0 * lambda1);
    // u = 1 - lambda1 x ranges over (0, u_max) with u_max^4 = (c + 1) / c when c > 0.
    let u_max = if c > 0.0 {
        ((c + 1.0) / c).powf(0.25)
    } else {
        f64::INFINITY
    };
    let (xa, xb) = ((1.0 - 0.0) / lambda1, (1.0 - u_max) / lambda1);
    let fam = InvariantFamily {
        lambda1,
        lambda2,
        domain: (xa.min(xb), xa.max(xb)),
    };
    let mut coeffs: Vec<ScalarFn> = (0..6)
        .map(|_| scalar(move |x| fam.omega_coeff(x)))
        .collect();
    coeffs.push(scalar(move |x| fam.alpha_coeff(x)));
    let lapse = scalar(move |x| fam.alpha_coeff(x).recip());
    Ok((
        ClosedFormMetric::diagonal("invariant-torsion", params, fam.domain, coeffs, lapse),
        Some(fam),
    ))
}

/// The closed metric of the diagonal almost Abelian flow:
/// `sum_i (1/f_i(x) e^{2i-1} (x) e^{2i-1} + f_i(x) e^{2i} (x) e^{2i}) + (1/P(x)) (e^7 (x) e^7 + dx^2)`,
/// `P = prod_j (lambda_j f_j + mu_j / f_j) / (lambda_j + mu_j)`.
///
/// A factor with `lambda_j + mu_j = 0` has `f_j = 1` and is taken as 1.
pub fn diagonal_closed(lambda: [f64; 3], mu: [f64; 3]) -> (ClosedFormMetric, [FLambdaMu; 3]) {
    let fs = [
        f_lambda_mu(lambda[0], mu[0]),
        f_lambda_mu(lambda[1], mu[1]),
        f_lambda_mu(lambda[2], mu[2]),
    ];
    let mut lo = fs
        .iter()
        .map(|f| f.domain.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut hi = fs.iter().map(|f| f.domain.1).fold(f64::INFINITY, f64::min);
    // P must stay positive as well; scan for sign changes of each factor away from the poles.
    for f in &fs {
        if (f.lambda + f.mu).abs() > 0.0 {
            let (a, b) = positive_factor_interval(f, (lo, hi));
            lo = lo.max(a);
            hi = hi.min(b);
        }
    }
    let p = move |x: Dual2_64| diagonal_p(&fs, x);
    let mut coeffs: Vec<ScalarFn> = Vec::new();
    for f in fs {
        coeffs.push(scalar(move |x| f.eval(x).recip()));
        coeffs.push(scalar(move |x| f.eval(x)));
    }
    coeffs.push(scalar(move |x| p(x).recip()));
    let lapse = scalar(move |x| p(x).recip());
    let mut params: Vec<(String, f64)> = Vec::new();
    for i in 0..3 {
        params.push((format!("lambda{}", i + 1), lambda[i]));
    }
    for i in 0..3 {
        params.push((format!("mu{}", i + 1), mu[i]));
    }
    (
        ClosedFormMetric::diagonal("diagonal", params, (lo, hi), coeffs, lapse),
        fs,
    )
}

pub(crate) fn diagonal_p<T: DualNum<f64> + Copy>(fs: &[FLambdaMu; 3], x: T) -> T {
    fs.iter().fold(T::one(), |acc, f| {
        let s = f.lambda + f.mu;
        if s == 0.0 {
            return acc;
        }
        let v = f.eval(x);
        acc * ((v * f.lambda + v.recip() * f.mu) / s)
    })
}

/// Interval around 0 inside `within` on which `(lambda f + mu / f) / (lambda + mu) > 0`.
///
/// `lambda f + mu/f = -f'/f` vanishes only where `lambda f^2 + mu = 0`, which the explicit
/// branches never reach inside the domain of `f` (the solution cannot cross an equilibrium),
/// so the factor keeps its sign at 0, where it equals 1.
fn positive_factor_interval(_f: &FLambdaMu, within: (f64, f64)) -> (f64, f64) {
    within
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_special_cases() {
        let f = f_lambda_mu(0.0, 2.0);
        assert_eq!(f.branch, FBranch::Linear);
        assert!((f.value(0.3) - 0.4).abs() < 1e-15);
        let f = f_lambda_mu(2.0, 0.0);
        assert_eq!(f.branch, FBranch::Reciprocal);
        assert!((f.value(0.5) - 0.5).abs() < 1e-15);
        let f = f_lambda_mu(1.0, 1.0);
        assert_eq!(f.branch, FBranch::Tan);
        assert!((f.value(0.2) - (-0.2 + std::f64::consts::FRAC_PI_4).tan()).abs() < 1e-14);
        assert!((f.domain.0 + std::f64::consts::FRAC_PI_4).abs() < 1e-14);
        assert!((f.domain.1 - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
        assert_eq!(f_lambda_mu(1.0, -4.0).branch, FBranch::Tanh);
        assert_eq!(f_lambda_mu(-4.0, 1.0).branch, FBranch::Coth);
        assert_eq!(f_lambda_mu(-3.0, 3.0).branch, FBranch::Constant);
    }

    #[test]
    fn branches_solve_the_ode() {
        for (l, m) in [
            (1.0, 1.0),
            (-1.0, -2.0),
            (1.0, -4.0),
            (-1.0, 4.0),
            (-4.0, 1.0),
            (4.0, -1.0),
            (2.0, 0.0),
            (0.0, 2.0),
        ] {
            let f = f_lambda_mu(l, m);
            assert!((f.value(0.0) - 1.0).abs() < 1e-14, "({l},{m})");
            for s in [0.1, 0.5, 0.9] {
                let y = f.domain.0.max(-5.0) * (1.0 - s) + f.domain.1.min(5.0) * s;
                let (v, d, _) = second_derivative(|x| f.eval(x), y);
                assert!(v > 0.0, "({l},{m}) at {y}");
                assert!(
                    (d + l * v * v + m).abs() < 1e-9 * (1.0 + v * v),
                    "({l},{m}) at {y}"
                );
            }
        }
    }

    #[test]
    fn invariant_family_spd_domain() {
        let (m, fam) = hypo_invariant_closed(-2.0, -4.0).unwrap();
        let fam = fam.unwrap();
        assert!((m.domain.0 + 0.5).abs() < 1e-15);
        assert!((m.domain.1 - (2f64.powf(0.25) - 1.0) / 2.0).abs() < 1e-15);
        let x = 0.05;
        let u: f64 = 1.0 + 2.0 * x;
        assert!((fam.f(x) - (2.0 - u.powi(4)).sqrt()).abs() < 1e-14);
        let g = m.metric(x);
        assert!((g[(0, 0)] - u).abs() < 1e-14);
        assert!((g[(6, 6)] - (2.0 - u.powi(4)) / u.powi(3)).abs() < 1e-14);
        assert!((m.lapse(x) - u.powi(3) / (2.0 - u.powi(4))).abs() < 1e-13);
        assert!(hypo_invariant_closed(1.0, -1.0).is_err());
    }
}
