//! Lyapunov exponents of periodic profiles, two independent ways: the period
//! average of the unstable Riccati solution, and the raw log-growth of a
//! Jacobi tensor integrated over a long horizon.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::ode::{OdeSystem, Stepper, Tolerances};
use crate::profile::{sorted_eigenvalues, CurvatureProfile, Domain};
use crate::quadrature::simpson_mean;
use crate::riccati::{
    default_settle_horizon, unstable_solution_with, RiccatiError, RiccatiSolution, StepControl,
};

/// Knobs for [`lyapunov_exponent_periodic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovConfig {
    pub step: StepControl,
    /// Defaults to `20/b`.
    pub settle_horizon: Option<f64>,
    pub periodicity_tol: f64,
    /// Oracle horizon in periods.
    pub oracle_periods: f64,
    pub oracle_tolerances: Tolerances,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        Self {
            step: StepControl::default(),
            settle_horizon: None,
            periodicity_tol: 1e-10,
            oracle_periods: 500.0,
            oracle_tolerances: Tolerances {
                h_max: 0.05,
                ..Tolerances::default().with_rtol(1e-12)
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovReport {
    pub period: f64,
    /// Top unstable exponent; in dimension two the unique one.
    pub chi_plus: f64,
    /// Per-direction exponents (eigenvalue averages of `U`), descending.
    pub exponents: Vec<f64>,
    /// `(1/τ) ∫ tr U`, the exponential growth rate of unstable volume.
    pub mean_trace: f64,
    /// `mean_trace / (n-1)`.
    pub mean_exponent: f64,
    /// `√(-(1/τ) ∫ tr R / (n-1))`.
    pub mean_curvature_bound: f64,
    /// `mean_curvature_bound - mean_exponent`; nonnegative by Cauchy–Schwarz.
    pub gap: f64,
    pub oracle_chi: f64,
    pub oracle_discrepancy: f64,
    pub parabolic: bool,
}

/// Exponent report for a periodic profile, with the Jacobi-growth oracle filled in.
pub fn lyapunov_exponent_periodic(
    profile: &CurvatureProfile,
    cfg: &LyapunovConfig,
) -> Result<LyapunovReport, RiccatiError> {
    lyapunov_with_solution(profile, cfg).map(|(r, _)| r)
}

/// As [`lyapunov_exponent_periodic`], also returning the periodic unstable solution.
pub fn lyapunov_with_solution(
    profile: &CurvatureProfile,
    cfg: &LyapunovConfig,
) -> Result<(LyapunovReport, RiccatiSolution), RiccatiError> {
    let period = profile.period().ok_or_else(|| {
        RiccatiError::InvalidInput("exponent report needs a periodic profile".into())
    })?;
    let settle = cfg
        .settle_horizon
        .unwrap_or_else(|| default_settle_horizon(profile));
    let sol = unstable_solution_with(profile, settle, cfg.periodicity_tol, &cfg.step)?;
    let oracle =
        jacobi_growth_oracle_with(profile, cfg.oracle_periods * period, &cfg.oracle_tolerances)?;
    Ok((report_from_solution(profile, &sol, oracle), sol))
}

/// Assemble the report from an already converged unstable solution.
pub fn report_from_solution(
    profile: &CurvatureProfile,
    sol: &RiccatiSolution,
    oracle_chi: f64,
) -> LyapunovReport {
    let n = profile.dim();
    let h = (sol.times.last().unwrap() - sol.times[0]) / (sol.times.len() - 1) as f64;
    let mean_trace = sol.time_average(|m| m.trace());
    // per-direction averages of the sorted eigenvalues
    let eig: Vec<Vec<f64>> = sol.values.iter().map(sorted_eigenvalues).collect();
    let mut exponents: Vec<f64> = (0..n)
        .map(|k| simpson_mean(&eig.iter().map(|e| e[k]).collect::<Vec<_>>(), h))
        .collect();
    exponents.reverse();
    let chi_plus = exponents[0];
    let mean_k: Vec<f64> = sol
        .times
        .iter()
        .map(|&t| profile.evaluate(t).trace() / n as f64)
        .collect();
    let mean_curv = simpson_mean(&mean_k, h);
    let bound = (-mean_curv).max(0.0).sqrt();
    let mean_exponent = mean_trace / n as f64;
    LyapunovReport {
        period: sol.times.last().unwrap() - sol.times[0],
        chi_plus,
        exponents,
        mean_trace,
        mean_exponent,
        mean_curvature_bound: bound,
        gap: bound - mean_exponent,
        oracle_chi,
        oracle_discrepancy: (chi_plus - oracle_chi).abs(),
        parabolic: sol.parabolic,
    }
}

struct JacobiFlow<'a> {
    profile: &'a CurvatureProfile,
    n: usize,
}

impl OdeSystem for JacobiFlow<'_> {
    fn dim(&self) -> usize {
        2 * self.n * self.n
    }

    // state = [Y, Y'] column-major; Y'' = -R Y
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let n = self.n;
        let nn = n * n;
        dy[..nn].copy_from_slice(&y[nn..]);
        if n == 1 {
            dy[1] = -self.profile.scalar(t) * y[0];
            return;
        }
        let r = self.profile.evaluate(t);
        let yy = DMatrix::from_column_slice(n, n, &y[..nn]);
        let acc = -(r * yy);
        dy[nn..].copy_from_slice(acc.as_slice());
    }
}

fn top_singular(y: &[f64], n: usize) -> f64 {
    if n == 1 {
        return y[0].abs();
    }
    DMatrix::from_column_slice(n, n, &y[..n * n])
        .singular_values()
        .max()
}

/// Growth-rate oracle with default tolerances.
pub fn jacobi_growth_oracle(profile: &CurvatureProfile, horizon: f64) -> Result<f64, RiccatiError> {
    jacobi_growth_oracle_with(
        profile,
        horizon,
        &LyapunovConfig::default().oracle_tolerances,
    )
}

/// Integrate `Y'' + R Y = 0` from `(Y, Y') = (I, c·I)` and return the mean
/// log-growth rate of the top singular value of `Y`. The first tenth of the
/// horizon (rounded to whole periods) is a burn-in that lets the solution
/// align with the unstable direction; growth is measured after it.
pub fn jacobi_growth_oracle_with(
    profile: &CurvatureProfile,
    horizon: f64,
    tol: &Tolerances,
) -> Result<f64, RiccatiError> {
    if !(horizon > 0.0) {
        return Err(RiccatiError::InvalidInput(
            "oracle horizon must be positive".into(),
        ));
    }
    let n = profile.dim();
    let nn = n * n;
    let (start, horizon) = match profile.domain() {
        Domain::Periodic { .. } => (0.0, horizon),
        Domain::Finite { start, end } => (start, horizon.min(end - start)),
    };
    let burn = match profile.period() {
        Some(p) => (0.1 * horizon / p).round() * p,
        None => 0.1 * horizon,
    };
    let c = match profile.bounds() {
        Some(b) if b.c > 0.0 => b.c,
        _ => 1.0,
    };
    let mut y0 = vec![0.0; 2 * nn];
    for i in 0..n {
        y0[i + i * n] = 1.0;
        y0[nn + i + i * n] = c;
    }
    let flow = JacobiFlow { profile, n };
    let mut st = Stepper::new(&flow, start, &y0, *tol);
    let mut log_acc = 0.0;
    let mut log_at_burn = None;
    let t_burn = start + burn;
    let t_end = start + horizon;
    for target in [t_burn, t_end] {
        while st.t() != target {
            st.step_toward(target)
                .map_err(|e| RiccatiError::ToleranceFailure(e.to_string()))?;
            let s = top_singular(st.y(), n);
            if !(s > 1e-200) {
                return Err(RiccatiError::ToleranceFailure(
                    "Jacobi tensor collapsed".into(),
                ));
            }
            if !(1e-8..=1e8).contains(&s) {
                log_acc += s.ln();
                st.project(|y| y.iter_mut().for_each(|v| *v /= s));
            }
        }
        let here = log_acc + top_singular(st.y(), n).ln();
        match log_at_burn {
            None => log_at_burn = Some(here),
            Some(start) => return Ok((here - start) / (t_end - t_burn)),
        }
    }
    unreachable!()
}
