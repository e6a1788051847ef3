//! Adaptive Dormand–Prince 5(4) integrator.
//!
//! The stepper is deliberately low level: callers drive it one accepted step
//! at a time so they can project the state (symmetrize a Riccati matrix,
//! renormalize a Jacobi tensor, apply a deck transformation) between steps.

#![allow(clippy::needless_range_loop)]

use thiserror::Error;

/// Right-hand side of a first-order system `y' = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

impl<F> OdeSystem for (usize, F)
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.0
    }
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        (self.1)(t, y, dy)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("maximum number of steps ({max_steps}) exceeded at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

/// Error control for the embedded pair.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-12,
            h_max: 0.1,
            h_min: 1e-14,
            max_steps: 10_000_000,
        }
    }
}

impl Tolerances {
    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self.atol = rtol * 0.1;
        self
    }
}

// Dormand–Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Continuous extension (Hairer & Wanner, DOPRI5 dense output).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One-step-at-a-time Dormand–Prince driver. Integration may run forward or
/// backward in time; the direction is taken from the target passed to
/// [`Stepper::step_toward`].
pub struct Stepper<'a, S: OdeSystem> {
    sys: &'a S,
    tol: Tolerances,
    t: f64,
    y: Vec<f64>,
    h: f64,
    k: [Vec<f64>; 7],
    fsal_valid: bool,
    steps: usize,
    // state at the start of the last accepted step, for dense output
    t_prev: f64,
    y_prev: Vec<f64>,
    dense: [Vec<f64>; 5],
    scratch: Vec<f64>,
    ynew: Vec<f64>,
}

impl<'a, S: OdeSystem> Stepper<'a, S> {
    pub fn new(sys: &'a S, t0: f64, y0: &[f64], tol: Tolerances) -> Self {
        let n = sys.dim();
        assert_eq!(y0.len(), n, "initial state has wrong dimension");
        let z = || vec![0.0; n];
        Self {
            sys,
            tol,
            t: t0,
            y: y0.to_vec(),
            h: 0.0,
            k: [z(), z(), z(), z(), z(), z(), z()],
            fsal_valid: false,
            steps: 0,
            t_prev: t0,
            y_prev: y0.to_vec(),
            dense: [z(), z(), z(), z(), z()],
            scratch: z(),
            ynew: z(),
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Replace the current state (after a projection or a chart change).
    pub fn set_state(&mut self, t: f64, y: &[f64]) {
        self.t = t;
        self.y.copy_from_slice(y);
        self.fsal_valid = false;
    }

    /// Modify the state in place; the derivative cache is invalidated.
    pub fn project(&mut self, f: impl FnOnce(&mut [f64])) {
        f(&mut self.y);
        self.fsal_valid = false;
    }

    fn initial_step(&mut self, dir: f64) -> f64 {
        let n = self.y.len();
        let mut d0: f64 = 0.0;
        let mut d1: f64 = 0.0;
        for i in 0..n {
            let sc = self.tol.atol + self.tol.rtol * self.y[i].abs();
            d0 += (self.y[i] / sc).powi(2);
            d1 += (self.k[0][i] / sc).powi(2);
        }
        d0 = (d0 / n as f64).sqrt();
        d1 = (d1 / n as f64).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(self.tol.h_max);
        // one Euler probe to estimate the second derivative
        for i in 0..n {
            self.scratch[i] = self.y[i] + dir * h0 * self.k[0][i];
        }
        let mut f1 = vec![0.0; n];
        self.sys.rhs(self.t + dir * h0, &self.scratch, &mut f1);
        let mut d2: f64 = 0.0;
        for i in 0..n {
            let sc = self.tol.atol + self.tol.rtol * self.y[i].abs();
            d2 += ((f1[i] - self.k[0][i]) / sc).powi(2);
        }
        d2 = (d2 / n as f64).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.tol.h_max)
    }

    /// Take one accepted step toward `t_end`, never overshooting it.
    /// Returns the time reached.
    pub fn step_toward(&mut self, t_end: f64) -> Result<f64, OdeError> {
        let span = t_end - self.t;
        if span == 0.0 {
            return Ok(self.t);
        }
        let dir = span.signum();
        if !self.fsal_valid {
            self.sys.rhs(self.t, &self.y, &mut self.k[0]);
            self.fsal_valid = true;
        }
        if self.h <= 0.0 {
            self.h = self.initial_step(dir);
        }
        let mut ynew = std::mem::take(&mut self.ynew);
        let res = self.step_loop(t_end, span, dir, &mut ynew);
        self.ynew = ynew;
        res
    }

    fn step_loop(
        &mut self,
        t_end: f64,
        span: f64,
        dir: f64,
        ynew: &mut [f64],
    ) -> Result<f64, OdeError> {
        let n = self.y.len();
        loop {
            if self.steps >= self.tol.max_steps {
                return Err(OdeError::TooManySteps {
                    t: self.t,
                    max_steps: self.tol.max_steps,
                });
            }
            let mut h = self.h.min(self.tol.h_max);
            let mut last = false;
            if h >= span.abs() {
                h = span.abs();
                last = true;
            }
            let hs = dir * h;
            self.stages(hs, ynew);
            // error estimate
            let mut err: f64 = 0.0;
            for i in 0..n {
                let e = hs
                    * (E1 * self.k[0][i]
                        + E3 * self.k[2][i]
                        + E4 * self.k[3][i]
                        + E5 * self.k[4][i]
                        + E6 * self.k[5][i]
                        + E7 * self.k[6][i]);
                let sc = self.tol.atol + self.tol.rtol * self.y[i].abs().max(ynew[i].abs());
                err += (e / sc).powi(2);
            }
            err = (err / n as f64).sqrt();
            if !err.is_finite() {
                self.h = h * 0.1;
                if self.h < self.tol.h_min {
                    return Err(OdeError::NonFinite { t: self.t });
                }
                continue;
            }
            if err <= 1.0 {
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                self.prepare_dense(hs, ynew);
                self.t_prev = self.t;
                self.y_prev.copy_from_slice(&self.y);
                self.t = if last { t_end } else { self.t + hs };
                self.y.copy_from_slice(ynew);
                // FSAL: k7 is f(t_new, y_new)
                self.k.swap(0, 6);
                self.steps += 1;
                if !last {
                    self.h = h * fac;
                }
                if self.y.iter().any(|v| !v.is_finite()) {
                    return Err(OdeError::NonFinite { t: self.t });
                }
                return Ok(self.t);
            }
            let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            self.h = h * fac;
            if self.h < self.tol.h_min {
                return Err(OdeError::StepUnderflow {
                    t: self.t,
                    h: self.h,
                });
            }
        }
    }

    fn stages(&mut self, hs: f64, ynew: &mut [f64]) {
        let n = self.y.len();
        let t = self.t;
        let (k, rest) = self.k.split_at_mut(1);
        let k1 = &k[0];
        let [k2, k3, k4, k5, k6, k7] = rest else {
            unreachable!()
        };
        let s = &mut self.scratch;
        for i in 0..n {
            s[i] = self.y[i] + hs * A21 * k1[i];
        }
        self.sys.rhs(t + C2 * hs, s, k2);
        for i in 0..n {
            s[i] = self.y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
        }
        self.sys.rhs(t + C3 * hs, s, k3);
        for i in 0..n {
            s[i] = self.y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        self.sys.rhs(t + C4 * hs, s, k4);
        for i in 0..n {
            s[i] = self.y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        self.sys.rhs(t + C5 * hs, s, k5);
        for i in 0..n {
            s[i] = self.y[i]
                + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        self.sys.rhs(t + hs, s, k6);
        for i in 0..n {
            ynew[i] = self.y[i]
                + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        self.sys.rhs(t + hs, ynew, k7);
    }

    fn prepare_dense(&mut self, hs: f64, ynew: &[f64]) {
        let n = self.y.len();
        for i in 0..n {
            let dy = ynew[i] - self.y[i];
            let bspl = hs * self.k[0][i] - dy;
            self.dense[0][i] = self.y[i];
            self.dense[1][i] = dy;
            self.dense[2][i] = bspl;
            self.dense[3][i] = dy - hs * self.k[6][i] - bspl;
            self.dense[4][i] = hs
                * (D1 * self.k[0][i]
                    + D3 * self.k[2][i]
                    + D4 * self.k[3][i]
                    + D5 * self.k[4][i]
                    + D6 * self.k[5][i]
                    + D7 * self.k[6][i]);
        }
    }

    /// Dense output inside the last accepted step `[t_prev, t]`.
    pub fn interpolate(&self, t: f64, out: &mut [f64]) {
        let h = self.t - self.t_prev;
        let theta = if h == 0.0 { 1.0 } else { (t - self.t_prev) / h };
        let th1 = 1.0 - theta;
        for (i, o) in out.iter_mut().enumerate() {
            let d = &self.dense;
            *o = d[0][i] + theta * (d[1][i] + th1 * (d[2][i] + theta * (d[3][i] + th1 * d[4][i])));
        }
    }

    pub fn last_step_start(&self) -> (f64, &[f64]) {
        (self.t_prev, &self.y_prev)
    }

    /// Integrate to `t_end` with no intermediate projection.
    pub fn advance_to(&mut self, t_end: f64) -> Result<(), OdeError> {
        while self.t != t_end {
            self.step_toward(t_end)?;
        }
        Ok(())
    }
}

/// Convenience: integrate `sys` from `(t0, y0)` to `t1` and return the final state.
pub fn integrate<S: OdeSystem>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    t1: f64,
    tol: Tolerances,
) -> Result<Vec<f64>, OdeError> {
    let mut st = Stepper::new(sys, t0, y0, tol);
    st.advance_to(t1)?;
    Ok(st.y().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let sys = (1usize, |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = -y[0]);
        let y = integrate(&sys, 0.0, &[1.0], 5.0, Tolerances::default()).unwrap();
        assert!((y[0] - (-5.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn backward_integration_of_harmonic_oscillator() {
        let sys = (2usize, |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        });
        let y = integrate(
            &sys,
            3.0,
            &[3.0f64.cos(), -(3.0f64).sin()],
            0.0,
            Tolerances::default(),
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10);
        assert!(y[1].abs() < 1e-10);
    }

    #[test]
    fn dense_output_is_accurate_inside_a_step() {
        let sys = (1usize, |t: f64, _y: &[f64], dy: &mut [f64]| dy[0] = t.cos());
        let tol = Tolerances {
            h_max: 0.5,
            ..Tolerances::default().with_rtol(1e-9)
        };
        let mut st = Stepper::new(&sys, 0.0, &[0.0], tol);
        st.step_toward(10.0).unwrap();
        let (t0, _) = st.last_step_start();
        let mid = 0.5 * (t0 + st.t());
        let mut out = [0.0];
        st.interpolate(mid, &mut out);
        assert!((out[0] - mid.sin()).abs() < 1e-8);
    }

    #[test]
    fn step_underflow_is_reported_near_a_pole() {
        // y' = y^2, y(0) = 1 blows up at t = 1
        let sys = (1usize, |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[0] * y[0]
        });
        let res = integrate(&sys, 0.0, &[1.0], 2.0, Tolerances::default());
        assert!(res.is_err());
    }
}
