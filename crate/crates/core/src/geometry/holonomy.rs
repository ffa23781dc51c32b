//! Ambrose-Singer estimate of the holonomy algebra at a reference point.
//!
//! Generators are the curvature operators `R(E_A, E_B)` and their covariant derivatives
//! along the group directions, at every sample, carried to the reference point by parallel
//! transport along the parameter line. The span is closed under commutators and its rank is
//! read off a singular value decomposition. Containment in su(4), sp(2) and spin(7) is
//! tested against the flow's forms and, independently, through the commutant of the algebra
//! in so(8).

use nalgebra::{DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};

use super::{curvature_of, levi_civita, orthonormal_frame, CohomOneMetric, Curvature};
use crate::algebra::Form;
use crate::error::GeometryError;
use crate::flow::{dopri45, OdeOptions};

#[derive(Clone, Debug)]
pub struct HolonomyOptions {
    pub samples: Vec<f64>,
    /// Base point of the estimate; the first sample when absent.
    pub reference: Option<f64>,
    /// Singular values below `rank_tol` times the largest are dropped.
    pub rank_tol: f64,
    /// Required ratio between the smallest kept and the largest dropped singular value.
    pub margin: f64,
    pub containment_tol: f64,
    /// Include `nabla_{E_i} R` among the generators.
    pub derivatives: bool,
    pub transport: OdeOptions,
}

impl Default for HolonomyOptions {
    fn default() -> Self {
        HolonomyOptions {
            samples: Vec::new(),
            reference: None,
            rank_tol: 1e-7,
            margin: 10.0,
            containment_tol: 1e-7,
            derivatives: true,
            transport: OdeOptions {
                rtol: 1e-12,
                atol: 1e-14,
                max_step: f64::INFINITY,
                min_step: 1e-14,
                max_steps: 100_000,
            },
        }
    }
}

impl HolonomyOptions {
    /// `count` evenly spaced samples in `[a, b]`.
    pub fn uniform(a: f64, b: f64, count: usize) -> Self {
        let last = count.max(2) - 1;
        let samples = (0..count)
            .map(|k| {
                if k == last {
                    b
                } else {
                    a + (b - a) * k as f64 / last as f64
                }
            })
            .collect();
        HolonomyOptions {
            samples,
            ..Default::default()
        }
    }
}

/// Outcome of one containment test; `violation` is `None` when the route is unavailable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Containment {
    pub contained: bool,
    pub violation: Option<f64>,
}

impl Containment {
    fn unavailable() -> Self {
        Containment {
            contained: false,
            violation: None,
        }
    }

    fn measured(violation: f64, tol: f64) -> Self {
        Containment {
            contained: violation <= tol,
            violation: Some(violation),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Flat,
    ReducibleSuspected,
    Sp2,
    Su4,
    Spin7,
    Undetermined,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Flat => "flat",
            Verdict::ReducibleSuspected => "reducible-suspected",
            Verdict::Sp2 => "sp2",
            Verdict::Su4 => "su4",
            Verdict::Spin7 => "spin7",
            Verdict::Undetermined => "undetermined",
        }
    }
}

/// Joint kernel of the holonomy algebra on 2-forms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelFormSearch {
    pub kernel_dim: usize,
    /// Known parallel 2-forms (the Kahler form) found in the kernel.
    pub known_dim: usize,
    /// Dimension of the kernel beyond the known forms.
    pub extra_dim: usize,
    /// A unit 2-form in the kernel orthogonal to the known forms, as coefficients on
    /// `e^{ab}` (`a < b`, lexicographic) in the coframe `(e^1, ..., e^n, ds)`.
    pub witness: Option<Vec<f64>>,
}

/// An orthonormal basis of the estimated holonomy algebra at the reference point.
#[derive(Clone, Debug)]
pub struct HolonomyAlgebra {
    pub reference: f64,
    /// `P` with `P^T g P = 1` at the reference; the basis acts in the frame `E P`.
    pub frame: DMatrix<f64>,
    /// Skew matrices of unit Frobenius norm.
    pub basis: Vec<DMatrix<f64>>,
    pub generator_count: usize,
    /// Singular values of the final closure step, relative to the largest.
    pub singular_values: Vec<f64>,
    /// Smallest ratio of kept to dropped singular values over all rank decisions; `None`
    /// when nothing nonzero was dropped.
    pub margin: Option<f64>,
    pub iterations: usize,
    /// Largest Ricci component in orthonormal frames over all samples.
    pub ricci_max: f64,
    /// Largest deviation of a transported generator from skew-symmetry.
    pub skew_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolonomyReport {
    pub schema: u32,
    /// The estimate only sees the sampled parameter values.
    pub scope: String,
    pub reference: f64,
    pub samples: Vec<f64>,
    pub generator_count: usize,
    pub closure_iterations: usize,
    pub dimension: usize,
    pub singular_values: Vec<f64>,
    pub margin: Option<f64>,
    pub rank_tol: f64,
    pub ricci_max: f64,
    /// Generators annihilate `Omega` and `Psi`.
    pub su4: Containment,
    /// The commutant in so(8) contains a complex structure `J` with `tr(J A) = 0`.
    pub su4_intrinsic: Containment,
    /// The commutant in so(8) is at least 3-dimensional.
    pub sp2: Containment,
    /// Generators annihilate `Phi`.
    pub spin7: Containment,
    pub commutant_dim: usize,
    pub parallel_forms: ParallelFormSearch,
    pub verdict: Verdict,
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

/// Coordinates of a skew matrix in the orthonormal basis `(E_ij - E_ji) / sqrt 2` of so(n).
fn to_vec(x: &DMatrix<f64>) -> DVector<f64> {
    let p = pairs(x.nrows());
    DVector::from_iterator(
        p.len(),
        p.iter()
            .map(|&(i, j)| (x[(i, j)] - x[(j, i)]) / std::f64::consts::SQRT_2),
    )
}

fn from_vec(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(n, n);
    for (k, &(i, j)) in pairs(n).iter().enumerate() {
        x[(i, j)] = v[k] / std::f64::consts::SQRT_2;
        x[(j, i)] = -v[k] / std::f64::consts::SQRT_2;
    }
    x
}

/// Singular values (descending) and right singular vectors of the rows `vs`.
fn svd_rows(vs: &[DVector<f64>], width: usize) -> (Vec<f64>, Vec<DVector<f64>>) {
    if vs.is_empty() {
        return (
            vec![0.0; width],
            (0..width)
                .map(|k| DVector::from_fn(width, |i, _| f64::from(i == k)))
                .collect(),
        );
    }
    // Padded to at least square so that the full right singular basis is returned.
    let m = DMatrix::from_fn(vs.len().max(width), width, |r, c| {
        if r < vs.len() {
            vs[r][c]
        } else {
            0.0
        }
    });
    let svd = SVD::new(m, false, true);
    let vt = svd.v_t.expect("right singular vectors");
    let mut order: Vec<usize> = (0..width).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv = order.iter().map(|&k| svd.singular_values[k]).collect();
    let vecs = order.iter().map(|&k| vt.row(k).transpose()).collect();
    (sv, vecs)
}

struct Span {
    basis: Vec<DVector<f64>>,
    relative: Vec<f64>,
    margin: Option<f64>,
}

/// Rank decision with relative threshold `tol` and absolute floor `floor`.
fn span(vs: &[DVector<f64>], width: usize, tol: f64, floor: f64) -> Span {
    let (sv, vecs) = svd_rows(vs, width);
    let top = sv[0];
    let keep = sv
        .iter()
        .take_while(|&&s| s > tol * top && s > floor)
        .count();
    let dropped = sv.get(keep).copied().unwrap_or(0.0);
    let margin = if keep > 0 && dropped > 0.0 {
        Some(sv[keep - 1] / dropped)
    } else {
        None
    };
    let relative = sv
        .iter()
        .map(|s| if top > 0.0 { s / top } else { 0.0 })
        .collect();
    Span {
        basis: vecs.into_iter().take(keep).collect(),
        relative,
        margin,
    }
}

/// `(nabla_{E_a} R)(E_b, E_c)` for a group direction `a`, from `nabla_a K = [Gamma_a, K]`
/// on endomorphism fields whose coefficients are constant along the group.
fn covariant_derivative(curv: &Curvature, a: usize, b: usize, c: usize) -> DMatrix<f64> {
    let n = curv.dim();
    let ga = &curv.connection.gamma[a];
    let r = curv.operator(b, c);
    let mut out = ga * r - r * ga;
    for d in 0..n {
        let (x, y) = (ga[(d, b)], ga[(d, c)]);
        if x != 0.0 {
            out -= curv.operator(d, c) * x;
        }
        if y != 0.0 {
            out -= curv.operator(b, d) * y;
        }
    }
    out
}

fn generators_at(curv: &Curvature, derivatives: bool) -> Vec<DMatrix<f64>> {
    let n = curv.dim();
    let mut out: Vec<DMatrix<f64>> = pairs(n)
        .iter()
        .map(|&(a, b)| curv.operator(a, b).clone())
        .collect();
    if derivatives {
        for a in 0..n - 1 {
            for &(b, c) in &pairs(n) {
                out.push(covariant_derivative(curv, a, b, c));
            }
        }
    }
    out
}

/// Parallel transport along the parameter line: `T' = -Gamma_s T`, `T(from) = t0`.
fn transport(
    m: &CohomOneMetric,
    from: f64,
    to: f64,
    t0: &DMatrix<f64>,
    opts: &OdeOptions,
) -> Result<DMatrix<f64>, GeometryError> {
    let n = t0.nrows();
    if from == to {
        return Ok(t0.clone());
    }
    let rhs = |s: f64, y: &[f64]| {
        let conn = levi_civita(m, s).map_err(|e| crate::error::FlowError::Degenerate {
            t: s,
            reason: e.to_string(),
        })?;
        let t = DMatrix::from_column_slice(n, n, y);
        Ok((-(&conn.gamma[n - 1] * t)).as_slice().to_vec())
    };
    let sol = dopri45(rhs, from, t0.as_slice().to_vec(), to, opts, |_, _| None)?;
    let last = *sol.t.last().expect("nonempty solution");
    if (last - to).abs() > 1e-12 * (1.0 + to.abs()) {
        return Err(GeometryError::Flow(crate::error::FlowError::Degenerate {
            t: last,
            reason: sol
                .stop
                .unwrap_or_else(|| "parallel transport stopped early".to_string()),
        }));
    }
    Ok(DMatrix::from_column_slice(
        n,
        n,
        sol.y.last().expect("nonempty solution"),
    ))
}

/// Estimates the holonomy algebra at the reference sample.
pub fn holonomy_algebra(
    m: &CohomOneMetric,
    opts: &HolonomyOptions,
) -> Result<HolonomyAlgebra, GeometryError> {
    if opts.samples.len() < 3 {
        return Err(GeometryError::TooFewSamples {
            needed: 3,
            got: opts.samples.len(),
        });
    }
    let n = m.dim();
    let width = n * (n - 1) / 2;
    let reference = opts.reference.unwrap_or(opts.samples[0]);
    let jet0 = m.jet(reference)?;
    let frame = orthonormal_frame(&jet0.g).ok_or(GeometryError::NotDefinite { t: reference })?;
    let frame_inv = frame
        .clone()
        .try_inverse()
        .ok_or(GeometryError::NotDefinite { t: reference })?;

    let mut samples = opts.samples.clone();
    samples.sort_by(f64::total_cmp);
    samples.dedup();
    // Transport outwards from the reference in both directions.
    let mut transports = Vec::with_capacity(samples.len());
    let identity = DMatrix::identity(n, n);
    let split = samples.partition_point(|&s| s < reference);
    let (mut at, mut t) = (reference, identity.clone());
    for &s in &samples[split..] {
        t = transport(m, at, s, &t, &opts.transport)?;
        at = s;
        transports.push((s, t.clone()));
    }
    let (mut at, mut t) = (reference, identity);
    for &s in samples[..split].iter().rev() {
        t = transport(m, at, s, &t, &opts.transport)?;
        at = s;
        transports.push((s, t.clone()));
    }

    let mut vectors = Vec::new();
    let mut scale = 0.0f64;
    let mut ricci_max = 0.0f64;
    let mut skew_residual = 0.0f64;
    for (s, t) in &transports {
        let curv = curvature_of(levi_civita(m, *s)?);
        scale = scale.max(curv.connection.scale());
        ricci_max = ricci_max.max(curv.ricci_orthonormal().abs().max());
        let t_inv = t
            .clone()
            .try_inverse()
            .ok_or(GeometryError::NotDefinite { t: *s })?;
        for op in generators_at(&curv, opts.derivatives) {
            let x = &frame_inv * (&t_inv * op * t) * &frame;
            skew_residual = skew_residual.max((&x + x.transpose()).abs().max() / scale.max(1e-300));
            vectors.push(to_vec(&x));
        }
    }
    let generator_count = vectors.len();

    let first = span(&vectors, width, opts.rank_tol, 1e-10 * scale);
    let Span {
        mut basis,
        mut margin,
        ..
    } = first;
    let mut relative;
    let mut iterations = 0;
    loop {
        let mats: Vec<DMatrix<f64>> = basis.iter().map(|v| from_vec(v, n)).collect();
        let mut next = basis.clone();
        for i in 0..mats.len() {
            for j in i + 1..mats.len() {
                next.push(to_vec(&(&mats[i] * &mats[j] - &mats[j] * &mats[i])));
            }
        }
        iterations += 1;
        let sp = span(&next, width, opts.rank_tol, 0.0);
        margin = match (margin, sp.margin) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let grew = sp.basis.len() > basis.len();
        basis = sp.basis;
        relative = sp.relative;
        if !grew {
            break;
        }
    }

    Ok(HolonomyAlgebra {
        reference,
        frame,
        basis: basis.iter().map(|v| from_vec(v, n)).collect(),
        generator_count,
        singular_values: relative,
        margin,
        iterations,
        ricci_max,
        skew_residual,
    })
}

/// Largest `|A . f| / |f|` over the basis, with forms given in the orthonormal coframe.
fn annihilation(alg: &HolonomyAlgebra, forms: &[Form]) -> f64 {
    let mut worst = 0.0f64;
    for f in forms {
        let size = f.norm();
        for a in &alg.basis {
            // A acts on covector coefficients by -A^T = A.
            worst = worst.max(f.derivation(a).norm() / size);
        }
    }
    worst
}

struct Commutant {
    /// Ascending singular values of `X -> ([X, A_k])_k`, relative to the largest.
    relative: Vec<f64>,
    /// Right singular vector of the smallest singular value.
    weakest: DMatrix<f64>,
    dim: usize,
}

fn commutant(alg: &HolonomyAlgebra, tol: f64) -> Commutant {
    let n = alg.frame.nrows();
    let width = n * (n - 1) / 2;
    let basis: Vec<DMatrix<f64>> = (0..width)
        .map(|k| from_vec(&DVector::from_fn(width, |i, _| f64::from(i == k)), n))
        .collect();
    let rows = width * alg.basis.len();
    let m = DMatrix::from_fn(rows.max(width), width, |r, c| {
        if r >= rows {
            return 0.0;
        }
        let (k, i) = (r / width, r % width);
        let x = &basis[c];
        let a = &alg.basis[k];
        to_vec(&(x * a - a * x))[i]
    });
    let svd = SVD::new(m, false, true);
    let vt = svd.v_t.expect("right singular vectors");
    let mut order: Vec<usize> = (0..width).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let top = svd.singular_values.max();
    let relative: Vec<f64> = order
        .iter()
        .map(|&k| {
            if top > 0.0 {
                svd.singular_values[k] / top
            } else {
                0.0
            }
        })
        .collect();
    let dim = relative.iter().filter(|&&s| s <= tol).count();
    Commutant {
        weakest: from_vec(&vt.row(order[0]).transpose(), n),
        relative,
        dim,
    }
}

/// The complex structure in the commutant and how far the algebra is from su(4) with it.
fn intrinsic_su4(alg: &HolonomyAlgebra, c: &Commutant) -> (DMatrix<f64>, f64, f64) {
    let n = alg.frame.nrows();
    let mut j = c.weakest.clone();
    let size = j.norm_squared() / n as f64;
    j /= size.sqrt();
    let square = (&j * &j + DMatrix::<f64>::identity(n, n)).abs().max();
    let trace = alg
        .basis
        .iter()
        .map(|a| (&j * a).trace().abs() / (n as f64).sqrt())
        .fold(0.0, f64::max);
    (j, square, c.relative[0].max(square).max(trace))
}

/// The 2-form `g(J X, Y)` in the orthonormal coframe.
fn kahler_form(j: &DMatrix<f64>) -> Form {
    let n = j.nrows();
    let mut f = Form::zero(n, 2);
    for (a, b) in pairs(n) {
        f.add_term(&[a, b], j[(b, a)]);
    }
    f
}

/// The joint kernel of the algebra on 2-forms and a witness orthogonal to `known`, where
/// `known` holds 2-forms in the orthonormal coframe at the reference.
pub fn parallel_form_search(alg: &HolonomyAlgebra, known: &[Form], tol: f64) -> ParallelFormSearch {
    let n = alg.frame.nrows();
    let width = n * (n - 1) / 2;
    let unit = |k: usize| Form::from_coeffs(n, 2, (0..width).map(|i| f64::from(i == k)).collect());
    let mut rows = Vec::new();
    for a in &alg.basis {
        let images: Vec<Form> = (0..width).map(|k| unit(k).derivation(a)).collect();
        for i in 0..width {
            rows.push(DVector::from_fn(width, |c, _| images[c].coeffs()[i]));
        }
    }
    let (sv, vecs) = svd_rows(&rows, width);
    let top = sv[0];
    let kernel: Vec<DVector<f64>> = sv
        .iter()
        .zip(vecs)
        .filter(|(s, _)| top == 0.0 || **s <= tol * top)
        .map(|(_, v)| v)
        .collect();

    // Orthonormalize the known forms that lie in the kernel.
    let mut q: Vec<DVector<f64>> = Vec::new();
    for f in known {
        let mut v = DVector::from_column_slice(f.coeffs());
        v /= v.norm();
        let inside: f64 = kernel.iter().map(|k| k.dot(&v).powi(2)).sum();
        if inside < 1.0 - 1e-6 {
            continue;
        }
        for b in &q {
            v -= b * b.dot(&v);
        }
        if v.norm() > 1e-6 {
            q.push(&v / v.norm());
        }
    }
    let rest: Vec<DVector<f64>> = kernel
        .iter()
        .map(|k| {
            let mut v = k.clone();
            for b in &q {
                v -= b * b.dot(k);
            }
            v
        })
        .collect();
    let (rsv, rvecs) = svd_rows(&rest, width);
    let extra_dim = if rest.is_empty() {
        0
    } else {
        rsv.iter().filter(|&&s| s > 0.5).count()
    };
    let witness = (extra_dim > 0).then(|| {
        let on = Form::from_coeffs(n, 2, rvecs[0].as_slice().to_vec());
        let inv = alg
            .frame
            .clone()
            .try_inverse()
            .expect("frame is invertible");
        let w = on.pullback(&inv);
        w.scaled(1.0 / w.norm()).into_coeffs()
    });
    ParallelFormSearch {
        kernel_dim: kernel.len(),
        known_dim: q.len(),
        extra_dim,
        witness,
    }
}

pub fn holonomy_estimate(
    m: &CohomOneMetric,
    opts: &HolonomyOptions,
) -> Result<HolonomyReport, GeometryError> {
    let alg = holonomy_algebra(m, opts)?;
    let tol = opts.containment_tol;
    let dimension = alg.basis.len();
    let forms = m.forms(alg.reference).transpose()?;
    let to_on = |f: &Form| f.pullback(&alg.frame);

    let su4 = match forms.as_ref().and_then(|f| f.su4.as_ref()) {
        Some(fs) => Containment::measured(
            annihilation(&alg, &fs.iter().map(to_on).collect::<Vec<_>>()),
            tol,
        ),
        None => Containment::unavailable(),
    };
    let spin7 = match forms.as_ref().and_then(|f| f.spin7.as_ref()) {
        Some(phi) => Containment::measured(annihilation(&alg, &[to_on(phi)]), tol),
        None => Containment::unavailable(),
    };
    let com = commutant(&alg, opts.rank_tol);
    let (j, square, intrinsic) = intrinsic_su4(&alg, &com);
    let su4_intrinsic = Containment::measured(intrinsic, tol);
    let sp2_violation = com.relative.get(2).copied().unwrap_or(f64::INFINITY);
    let sp2 = Containment {
        contained: sp2_violation <= tol && dimension <= 10,
        violation: Some(sp2_violation),
    };

    let known: Vec<Form> = match forms.as_ref().and_then(|f| f.su4.as_ref()) {
        Some(fs) => vec![to_on(&fs[0])],
        None if square <= 1e-6 => vec![kahler_form(&j)],
        None => Vec::new(),
    };
    let parallel_forms = parallel_form_search(&alg, &known, opts.rank_tol);

    let su4_ok = su4_intrinsic.contained && (su4.violation.is_none() || su4.contained);
    let ambiguous = alg.margin.is_some_and(|r| r < opts.margin);
    let verdict = if ambiguous {
        Verdict::Undetermined
    } else if dimension == 0 {
        Verdict::Flat
    } else if dimension == 10 && sp2.contained {
        Verdict::Sp2
    } else if dimension == 15 && su4_ok {
        Verdict::Su4
    } else if dimension == 21 && spin7.contained {
        Verdict::Spin7
    } else if parallel_forms.witness.is_some() {
        Verdict::ReducibleSuspected
    } else {
        Verdict::Undetermined
    };

    let mut samples = opts.samples.clone();
    samples.sort_by(f64::total_cmp);
    Ok(HolonomyReport {
        schema: 1,
        scope: "at sampled points".to_string(),
        reference: alg.reference,
        samples,
        generator_count: alg.generator_count,
        closure_iterations: alg.iterations,
        dimension,
        singular_values: alg.singular_values.clone(),
        margin: alg.margin,
        rank_tol: opts.rank_tol,
        ricci_max: alg.ricci_max,
        su4,
        su4_intrinsic,
        sp2,
        spin7,
        commutant_dim: com.dim,
        parallel_forms,
        verdict,
    })
}
