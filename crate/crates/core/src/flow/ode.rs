//! Dormand-Prince 5(4) with step-size control, a fallible right-hand side and stop predicates.
//!
//! A failing right-hand side evaluation (for instance a Newton inversion leaving the open set
//! of stable forms) shrinks the step instead of aborting, so trajectories end at the last
//! accepted state with a recorded reason.

use crate::error::FlowError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on `|h|`; keeps the stored grid fine enough for later sampling.
    pub max_step: f64,
    /// Steps below `min_step * max(1, |t|)` end the integration.
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: 0.05,
            min_step: 1e-12,
            max_steps: 200_000,
        }
    }
}

/// Accepted states with their derivatives, in integration order.
#[derive(Clone, Debug)]
pub struct OdeSolution {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub dy: Vec<Vec<f64>>,
    /// Why the integration ended before the requested endpoint.
    pub stop: Option<String>,
    pub rejected: usize,
}

impl OdeSolution {
    /// Cubic Hermite interpolation on the stored grid.
    pub fn interpolate(&self, t: f64) -> Result<Vec<f64>, FlowError> {
        let (lo, hi) = (
            self.t[0].min(*self.t.last().unwrap()),
            self.t[0].max(*self.t.last().unwrap()),
        );
        if t < lo - 1e-14 * (1.0 + lo.abs()) || t > hi + 1e-14 * (1.0 + hi.abs()) {
            return Err(FlowError::OutOfRange { t, t0: lo, t1: hi });
        }
        let forward = self.t.len() < 2 || self.t[1] > self.t[0];
        let k = if forward {
            self.t.partition_point(|&s| s <= t)
        } else {
            self.t.partition_point(|&s| s >= t)
        }
        .clamp(1, self.t.len().max(2) - 1);
        if self.t.len() == 1 {
            return Ok(self.y[0].clone());
        }
        let (t0, t1) = (self.t[k - 1], self.t[k]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (h00, h10, h01, h11) = (
            2.0 * s * s * s - 3.0 * s * s + 1.0,
            s * s * s - 2.0 * s * s + s,
            -2.0 * s * s * s + 3.0 * s * s,
            s * s * s - s * s,
        );
        Ok((0..self.y[0].len())
            .map(|i| {
                h00 * self.y[k - 1][i]
                    + h10 * h * self.dy[k - 1][i]
                    + h01 * self.y[k][i]
                    + h11 * h * self.dy[k][i]
            })
            .collect())
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
///
/// `check` is called on each candidate state before it is accepted; returning a reason ends
/// the integration at the previous state.
pub fn dopri45<F, S>(
    mut f: F,
    t0: f64,
    y0: Vec<f64>,
    t1: f64,
    opts: &OdeOptions,
    mut check: S,
) -> Result<OdeSolution, FlowError>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, FlowError>,
    S: FnMut(f64, &[f64]) -> Option<String>,
{
    let n = y0.len();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let f0 = f(t0, &y0)?;
    let mut sol = OdeSolution {
        t: vec![t0],
        y: vec![y0.clone()],
        dy: vec![f0.clone()],
        stop: None,
        rejected: 0,
    };
    if t1 == t0 {
        return Ok(sol);
    }
    let scale = |y: &[f64]| {
        y.iter()
            .map(|v| opts.atol + opts.rtol * v.abs())
            .collect::<Vec<_>>()
    };
    let rms = |v: &[f64], w: &[f64]| {
        (v.iter().zip(w).map(|(a, b)| (a / b).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt()
    };
    let w0 = scale(&y0);
    let (d0, d1) = (rms(&y0, &w0), rms(&f0, &w0));
    let mut h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h = h.min(opts.max_step).min((t1 - t0).abs());

    let (mut t, mut y, mut k1) = (t0, y0, f0);
    let mut k = vec![vec![0.0; n]; 7];
    let mut last_error: Option<FlowError> = None;
    for _ in 0..opts.max_steps {
        if (t1 - t) * dir <= 0.0 {
            return Ok(sol);
        }
        if h < opts.min_step * t.abs().max(1.0) {
            sol.stop = Some(match last_error {
                Some(e) => format!("step size underflow at t = {t}: {e}"),
                None => format!("step size underflow at t = {t}"),
            });
            return Ok(sol);
        }
        let hs = dir * h.min((t1 - t).abs());
        k[0].clone_from(&k1);
        let mut ok = true;
        for s in 1..7 {
            let ys: Vec<f64> = (0..n)
                .map(|i| y[i] + hs * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>())
                .collect();
            match f(t + C[s] * hs, &ys) {
                Ok(v) if v.iter().all(|x| x.is_finite()) => k[s] = v,
                Ok(_) => {
                    ok = false;
                    last_error = None;
                    break;
                }
                Err(e) => {
                    ok = false;
                    last_error = Some(e);
                    break;
                }
            }
        }
        if !ok {
            sol.rejected += 1;
            h *= 0.25;
            continue;
        }
        // Stage 7 is evaluated at the fifth-order solution (FSAL).
        let y_new: Vec<f64> = (0..n)
            .map(|i| y[i] + hs * (0..6).map(|j| A[6][j] * k[j][i]).sum::<f64>())
            .collect();
        let err: Vec<f64> = (0..n)
            .map(|i| hs * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>())
            .collect();
        let w: Vec<f64> = (0..n)
            .map(|i| opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs()))
            .collect();
        let en = rms(&err, &w);
        let factor = if en == 0.0 {
            5.0
        } else {
            (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
        };
        if en > 1.0 {
            sol.rejected += 1;
            h *= factor.min(1.0);
            continue;
        }
        let t_new = t + hs;
        if let Some(reason) = check(t_new, &y_new) {
            // Bisect towards the event so that the trajectory ends close to it.
            if h > opts.min_step * t.abs().max(1.0) * 1e3 && h > 1e-6 * (t1 - t0).abs() {
                h *= 0.25;
                continue;
            }
            sol.stop = Some(reason);
            return Ok(sol);
        }
        t = t_new;
        y = y_new;
        k1 = k[6].clone();
        sol.t.push(t);
        sol.y.push(y.clone());
        sol.dy.push(k1.clone());
        h = (h * factor).min(opts.max_step);
        last_error = None;
    }
    sol.stop = Some(format!("step limit {} reached at t = {t}", opts.max_steps));
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_forward_and_backward() {
        let opts = OdeOptions::default();
        for t1 in [2.0, -2.0] {
            let sol = dopri45(
                |_, y| Ok(vec![-y[0]]),
                0.0,
                vec![1.0],
                t1,
                &opts,
                |_, _| None,
            )
            .unwrap();
            assert!(sol.stop.is_none());
            let last = sol.y.last().unwrap()[0];
            assert!((last - (-t1).exp()).abs() < 1e-9 * (-t1).exp().max(1.0));
            let mid = sol.interpolate(t1 * 0.37).unwrap()[0];
            assert!((mid - (-t1 * 0.37).exp()).abs() < 1e-7);
        }
    }

    #[test]
    fn blow_up_is_truncated_with_reason() {
        // y' = y^2, y(0) = 1 blows up at t = 1.
        let opts = OdeOptions::default();
        let sol = dopri45(
            |_, y| Ok(vec![y[0] * y[0]]),
            0.0,
            vec![1.0],
            2.0,
            &opts,
            |_, y| (y[0] > 1e6).then(|| "blow-up".into()),
        )
        .unwrap();
        assert_eq!(sol.stop.as_deref(), Some("blow-up"));
        assert!((sol.t.last().unwrap() - 1.0).abs() < 1e-5);
    }
}
