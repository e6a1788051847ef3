//! Riccati equation `U' + U² + R(t) = 0` along a curvature profile.
//!
//! The stable and unstable solutions are the bounded branches: the unstable
//! one attracts forward-time trajectories, the stable one backward-time
//! trajectories. For periodic profiles both are found by iterating the period
//! map of the Riccati flow from a seed `±c·I` until the periodicity defect
//! falls below tolerance.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::ode::{OdeError, OdeSystem, Stepper, Tolerances};
use crate::profile::{sorted_eigenvalues, CurvatureProfile, Domain, ProfileError, SymMatrix};
use crate::quadrature::simpson;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiccatiError {
    #[error("Riccati solution blew up near t* = {t_star} (|U| = {norm:e}); conjugate point or non-solution seed")]
    BlowUp { t_star: f64, norm: f64 },
    #[error("integrator could not meet tolerance: {0}")]
    ToleranceFailure(String),
    #[error("period map did not converge: defect {defect:e} after {iterations} periods")]
    NoConvergence { defect: f64, iterations: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Stepping and sampling controls shared by every Riccati/Jacobi solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub ode: Tolerances,
    /// Maximum admissible integral-form residual of `U' + U² + R = 0`.
    pub residual_tol: f64,
    /// Target spacing of the output grid.
    pub grid_spacing: f64,
    /// Minimum number of output intervals (kept even for Simpson).
    pub min_intervals: usize,
    /// Overrides the default blow-up ceiling (`10·c`, or `1e3` without bounds).
    pub blowup_ceiling: Option<f64>,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            ode: Tolerances {
                h_max: 0.05,
                ..Tolerances::default().with_rtol(1e-12)
            },
            residual_tol: 1e-6,
            grid_spacing: 2.5e-3,
            min_intervals: 200,
            blowup_ceiling: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolutionKind {
    Unstable,
    Stable,
    /// A plain initial-value solution.
    Free,
}

/// A sampled solution of the Riccati equation on a uniform time grid.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub times: Vec<f64>,
    pub values: Vec<SymMatrix>,
    pub kind: SolutionKind,
    /// Max over interior samples of the two-cell integral-form defect.
    pub residual: f64,
    /// Per-sample residuals (zero where the stencil does not fit).
    pub residuals: Vec<f64>,
    /// `‖U(τ) - U(0)‖` for periodic profiles.
    pub periodicity_defect: Option<f64>,
    /// Set for `R ≡ 0`, where the attraction is only polynomial and `U ≡ 0`
    /// is returned directly.
    pub parabolic: bool,
    /// Number of period-map iterations used to converge.
    pub iterations: usize,
}

impl RiccatiSolution {
    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, |m| m.nrows())
    }

    /// `u(t)` samples of a scalar solution.
    pub fn scalar_values(&self) -> Vec<f64> {
        self.values.iter().map(|m| m[(0, 0)]).collect()
    }

    pub fn traces(&self) -> Vec<f64> {
        self.values.iter().map(|m| m.trace()).collect()
    }

    /// Smallest and largest eigenvalue over all samples.
    pub fn eigen_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for m in &self.values {
            let ev = sorted_eigenvalues(m);
            lo = lo.min(ev[0]);
            hi = hi.max(*ev.last().unwrap());
        }
        (lo, hi)
    }

    fn spacing(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            (self.times.last().unwrap() - self.times[0]) / (self.times.len() - 1) as f64
        }
    }

    /// `(1/T) ∫ f(U(t)) dt` over the sampled span by composite Simpson.
    pub fn time_average(&self, f: impl Fn(&SymMatrix) -> f64) -> f64 {
        let vals: Vec<f64> = self.values.iter().map(f).collect();
        let span = self.times.last().unwrap() - self.times[0];
        if span == 0.0 {
            return vals[0];
        }
        simpson(&vals, self.spacing()) / span
    }

    /// CSV with columns `t,u_11,u_12,...,residual` (upper triangle, row-major).
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut out = String::from("t");
        for i in 0..n {
            for j in i..n {
                out.push_str(&format!(",u_{}{}", i + 1, j + 1));
            }
        }
        out.push_str(",residual\n");
        for ((t, m), r) in self.times.iter().zip(&self.values).zip(&self.residuals) {
            out.push_str(&format!("{t:.12e}"));
            for i in 0..n {
                for j in i..n {
                    out.push_str(&format!(",{:.15e}", m[(i, j)]));
                }
            }
            out.push_str(&format!(",{r:.6e}\n"));
        }
        out
    }
}

struct RiccatiFlow<'a> {
    profile: &'a CurvatureProfile,
    n: usize,
}

impl OdeSystem for RiccatiFlow<'_> {
    fn dim(&self) -> usize {
        self.n * self.n
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let n = self.n;
        if n == 1 {
            dy[0] = -y[0] * y[0] - self.profile.scalar(t);
            return;
        }
        let u = DMatrix::from_column_slice(n, n, y);
        let d = -(&u * &u) - self.profile.evaluate(t);
        dy.copy_from_slice(d.as_slice());
    }
}

fn symmetrize(y: &mut [f64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (y[i + j * n] + y[j + i * n]);
            y[i + j * n] = m;
            y[j + i * n] = m;
        }
    }
}

/// Largest absolute eigenvalue, signed.
fn dominant_eigenvalue(y: &[f64], n: usize) -> f64 {
    if n == 1 {
        return y[0];
    }
    let ev = sorted_eigenvalues(&DMatrix::from_column_slice(n, n, y));
    let (lo, hi) = (ev[0], *ev.last().unwrap());
    if lo.abs() > hi.abs() {
        lo
    } else {
        hi
    }
}

fn ceiling(profile: &CurvatureProfile, ctl: &StepControl) -> f64 {
    if let Some(c) = ctl.blowup_ceiling {
        return c;
    }
    match profile.bounds() {
        Some(b) if b.c > 0.0 => 10.0 * b.c,
        _ => 1e3,
    }
}

fn ode_failure(e: OdeError) -> RiccatiError {
    RiccatiError::ToleranceFailure(e.to_string())
}

/// Integrate from `t_from` to `t_to` (either direction). With `intervals =
/// Some(N)` the solution is sampled at `N + 1` uniform points; otherwise only
/// the end state is returned.
fn solve(
    profile: &CurvatureProfile,
    u0: &SymMatrix,
    t_from: f64,
    t_to: f64,
    ctl: &StepControl,
    intervals: Option<usize>,
) -> Result<(Vec<f64>, Vec<SymMatrix>), RiccatiError> {
    let n = profile.dim();
    if u0.nrows() != n || u0.ncols() != n {
        return Err(RiccatiError::InvalidInput(format!("seed must be {n}x{n}")));
    }
    let flow = RiccatiFlow { profile, n };
    let ceil = ceiling(profile, ctl);
    let mut y0 = u0.as_slice().to_vec();
    symmetrize(&mut y0, n);
    let mut st = Stepper::new(&flow, t_from, &y0, ctl.ode);
    let targets: Vec<f64> = match intervals {
        Some(m) => (0..=m)
            .map(|i| t_from + (t_to - t_from) * i as f64 / m as f64)
            .collect(),
        None => vec![t_from, t_to],
    };
    let mut times = Vec::with_capacity(targets.len());
    let mut values = Vec::with_capacity(targets.len());
    let keep_all = intervals.is_some();
    if keep_all {
        times.push(t_from);
        values.push(DMatrix::from_column_slice(n, n, &y0));
    }
    for &target in &targets[1..] {
        while st.t() != target {
            if let Err(e) = st.step_toward(target) {
                let lam = dominant_eigenvalue(st.y(), n);
                if lam.abs() > 0.1 * ceil {
                    return Err(RiccatiError::BlowUp {
                        t_star: st.t() - 1.0 / lam,
                        norm: lam.abs(),
                    });
                }
                return Err(ode_failure(e));
            }
            st.project(|y| symmetrize(y, n));
            let lam = dominant_eigenvalue(st.y(), n);
            if lam.abs() > ceil {
                // near a pole U ≈ 1/(t - t*)
                return Err(RiccatiError::BlowUp {
                    t_star: st.t() - 1.0 / lam,
                    norm: lam.abs(),
                });
            }
        }
        if keep_all || target == t_to {
            times.push(target);
            values.push(DMatrix::from_column_slice(n, n, st.y()));
        }
    }
    if t_to < t_from {
        times.reverse();
        values.reverse();
    }
    Ok((times, values))
}

/// Sampled profiles have derivative jumps at their knots, so the output grid
/// is refined to resolve them for the residual check.
fn grid_intervals(profile: &CurvatureProfile, span: f64, ctl: &StepControl) -> usize {
    let h = profile
        .knot_spacing()
        .map_or(ctl.grid_spacing, |k| ctl.grid_spacing.min(k / 16.0));
    let m = ((span.abs() / h).ceil() as usize)
        .max(ctl.min_intervals)
        .max(4);
    m + (m % 2)
}

/// Local defect of the integral form over two grid cells,
/// `|U_{i+1} - U_{i-1} + ∫U² + ∫R| / 2h`, with Simpson's rule for `∫U²` and
/// the profile's exact integral for `∫R`. Unlike a difference stencil it
/// stays small when `R` is only Lipschitz.
fn residuals(profile: &CurvatureProfile, times: &[f64], values: &[SymMatrix]) -> Vec<f64> {
    let m = times.len();
    let mut out = vec![0.0; m];
    if m < 3 {
        return out;
    }
    let h = (times[m - 1] - times[0]) / (m - 1) as f64;
    let sq: Vec<SymMatrix> = values.iter().map(|u| u * u).collect();
    for i in 1..m - 1 {
        let quad = (&sq[i - 1] + &sq[i] * 4.0 + &sq[i + 1]) * (h / 3.0);
        let d =
            &values[i + 1] - &values[i - 1] + quad + profile.integral(times[i - 1], times[i + 1]);
        out[i] = d.amax() / (2.0 * h);
    }
    out
}

fn finish(
    profile: &CurvatureProfile,
    times: Vec<f64>,
    values: Vec<SymMatrix>,
    kind: SolutionKind,
    ctl: &StepControl,
) -> Result<RiccatiSolution, RiccatiError> {
    let res = residuals(profile, &times, &values);
    let residual = res.iter().copied().fold(0.0, f64::max);
    if residual > ctl.residual_tol {
        return Err(RiccatiError::ToleranceFailure(format!(
            "integral-form residual {residual:e} exceeds {:e}",
            ctl.residual_tol
        )));
    }
    Ok(RiccatiSolution {
        times,
        values,
        kind,
        residual,
        residuals: res,
        periodicity_defect: None,
        parabolic: false,
        iterations: 0,
    })
}

/// Solve the initial-value problem `U(t0) = u0` on `[t0, t1]`.
pub fn integrate_riccati(
    profile: &CurvatureProfile,
    u0: &SymMatrix,
    t0: f64,
    t1: f64,
    ctl: &StepControl,
) -> Result<RiccatiSolution, RiccatiError> {
    if !(t0 < t1) {
        return Err(RiccatiError::InvalidInput(format!(
            "need t0 < t1, got [{t0}, {t1}]"
        )));
    }
    let m = grid_intervals(profile, t1 - t0, ctl);
    let (times, values) = solve(profile, u0, t0, t1, ctl, Some(m))?;
    finish(profile, times, values, SolutionKind::Free, ctl)
}

fn seed_scale(profile: &CurvatureProfile) -> f64 {
    match profile.bounds() {
        Some(b) => b.c,
        None => profile.neg_spectrum_range(257).1.max(0.0).sqrt(),
    }
}

fn floor_scale(profile: &CurvatureProfile) -> f64 {
    match profile.bounds() {
        Some(b) => b.b,
        None => profile.neg_spectrum_range(257).0.max(0.0).sqrt(),
    }
}

/// Default settle horizon `20/b` (400 when `b = 0`).
pub fn default_settle_horizon(profile: &CurvatureProfile) -> f64 {
    let b = floor_scale(profile);
    if b > 0.0 {
        20.0 / b
    } else {
        400.0
    }
}

fn is_flat(profile: &CurvatureProfile) -> bool {
    profile.max_abs(257) <= 1e-14
}

fn parabolic_solution(
    profile: &CurvatureProfile,
    kind: SolutionKind,
    ctl: &StepControl,
) -> RiccatiSolution {
    let (a, b) = profile.span();
    let m = grid_intervals(profile, b - a, ctl);
    let n = profile.dim();
    let times: Vec<f64> = (0..=m).map(|i| a + (b - a) * i as f64 / m as f64).collect();
    RiccatiSolution {
        values: vec![DMatrix::zeros(n, n); times.len()],
        residuals: vec![0.0; times.len()],
        times,
        kind,
        residual: 0.0,
        periodicity_defect: Some(0.0),
        parabolic: true,
        iterations: 0,
    }
}

fn bounded_branch(
    profile: &CurvatureProfile,
    settle_horizon: f64,
    tol: f64,
    ctl: &StepControl,
    kind: SolutionKind,
) -> Result<RiccatiSolution, RiccatiError> {
    if !(settle_horizon > 0.0) || !(tol > 0.0) {
        return Err(RiccatiError::InvalidInput(
            "settle horizon and tolerance must be positive".into(),
        ));
    }
    if is_flat(profile) {
        return Ok(parabolic_solution(profile, kind, ctl));
    }
    let n = profile.dim();
    let sign = if kind == SolutionKind::Stable {
        -1.0
    } else {
        1.0
    };
    let seed = DMatrix::identity(n, n) * (sign * seed_scale(profile));
    match profile.domain() {
        Domain::Periodic { period } => {
            let (from, to) = if sign > 0.0 {
                (0.0, period)
            } else {
                (period, 0.0)
            };
            let max_iter = ((settle_horizon / period).ceil() as usize).max(3);
            let mut u = seed;
            let mut defect = f64::INFINITY;
            let mut iterations = 0;
            while iterations < max_iter {
                let (_, v) = solve(profile, &u, from, to, ctl, None)?;
                let next = v.into_iter().last().unwrap();
                defect = (&next - &u).amax();
                u = next;
                iterations += 1;
                if defect < tol {
                    break;
                }
            }
            if !(defect < tol) {
                return Err(RiccatiError::NoConvergence { defect, iterations });
            }
            let m = grid_intervals(profile, period, ctl);
            let (times, values) = solve(profile, &u, from, to, ctl, Some(m))?;
            let pd = (&values[values.len() - 1] - &values[0]).amax();
            let mut sol = finish(profile, times, values, kind, ctl)?;
            sol.periodicity_defect = Some(pd);
            sol.iterations = iterations;
            Ok(sol)
        }
        Domain::Finite { start, end } => {
            if end - start < settle_horizon {
                return Err(RiccatiError::InvalidInput(format!(
                    "horizon {} shorter than settle horizon {settle_horizon}",
                    end - start
                )));
            }
            let (from, to) = if sign > 0.0 {
                (start, end)
            } else {
                (end, start)
            };
            let m = grid_intervals(profile, end - start, ctl);
            let (times, values) = solve(profile, &seed, from, to, ctl, Some(m))?;
            // keep only the settled part of the horizon
            let keep: Vec<usize> = (0..times.len())
                .filter(|&i| {
                    if sign > 0.0 {
                        times[i] >= start + settle_horizon - 1e-12
                    } else {
                        times[i] <= end - settle_horizon + 1e-12
                    }
                })
                .collect();
            let (mut lo, mut hi) = (keep[0], *keep.last().unwrap());
            // Simpson needs an even number of intervals
            if (hi - lo) % 2 == 1 {
                if sign > 0.0 {
                    lo += 1;
                } else {
                    hi -= 1;
                }
            }
            finish(
                profile,
                times[lo..=hi].to_vec(),
                values[lo..=hi].to_vec(),
                kind,
                ctl,
            )
        }
    }
}

/// Unstable (forward-attracting) bounded solution with default controls.
pub fn unstable_solution(
    profile: &CurvatureProfile,
    settle_horizon: f64,
    tol: f64,
) -> Result<RiccatiSolution, RiccatiError> {
    unstable_solution_with(profile, settle_horizon, tol, &StepControl::default())
}

pub fn unstable_solution_with(
    profile: &CurvatureProfile,
    settle_horizon: f64,
    tol: f64,
    ctl: &StepControl,
) -> Result<RiccatiSolution, RiccatiError> {
    bounded_branch(profile, settle_horizon, tol, ctl, SolutionKind::Unstable)
}

/// Stable (backward-attracting) bounded solution with default controls.
pub fn stable_solution(
    profile: &CurvatureProfile,
    settle_horizon: f64,
    tol: f64,
) -> Result<RiccatiSolution, RiccatiError> {
    stable_solution_with(profile, settle_horizon, tol, &StepControl::default())
}

pub fn stable_solution_with(
    profile: &CurvatureProfile,
    settle_horizon: f64,
    tol: f64,
    ctl: &StepControl,
) -> Result<RiccatiSolution, RiccatiError> {
    bounded_branch(profile, settle_horizon, tol, ctl, SolutionKind::Stable)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> SymMatrix {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn hyperbolic_fixed_point_persists() {
        let p = CurvatureProfile::constant(-1.0);
        let s = integrate_riccati(&p, &scalar(1.0), 0.0, 10.0, &StepControl::default()).unwrap();
        assert!(s.values.iter().all(|u| (u[(0, 0)] - 1.0).abs() < 1e-14));
        assert!(s.residual < 1e-12);
    }

    #[test]
    fn repelling_fixed_point_survives_exact_seed() {
        // u = -1 is a fixed point; in exact arithmetic f(-1) = 0 so it stays put,
        // but any perturbation grows like e^{2t}.
        let p = CurvatureProfile::constant(-1.0);
        let s = integrate_riccati(&p, &scalar(-1.0), 0.0, 10.0, &StepControl::default()).unwrap();
        assert!(s.values.iter().all(|u| (u[(0, 0)] + 1.0).abs() < 1e-14));
        let drift = integrate_riccati(
            &p,
            &scalar(-1.0 + 1e-10),
            0.0,
            10.0,
            &StepControl::default(),
        )
        .unwrap();
        let last = drift.values.last().unwrap()[(0, 0)];
        assert!(
            last + 1.0 > 1e-3,
            "perturbation should have grown, got {last}"
        );
    }

    #[test]
    fn flat_profile_decays_like_one_over_t() {
        let p = CurvatureProfile::constant(0.0);
        let s = integrate_riccati(&p, &scalar(1.0), 0.0, 10.0, &StepControl::default()).unwrap();
        for (t, u) in s.times.iter().zip(&s.values) {
            assert!((u[(0, 0)] - 1.0 / (1.0 + t)).abs() < 1e-10);
        }
    }

    #[test]
    fn flat_profile_with_negative_seed_blows_up_at_one() {
        let p = CurvatureProfile::constant(0.0);
        match integrate_riccati(&p, &scalar(-1.0), 0.0, 10.0, &StepControl::default()) {
            Err(RiccatiError::BlowUp { t_star, .. }) => {
                assert!((t_star - 1.0).abs() < 1e-6, "t* = {t_star}")
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn rejects_reversed_interval_and_wrong_seed_shape() {
        let p = CurvatureProfile::constant(-1.0);
        assert!(matches!(
            integrate_riccati(&p, &scalar(1.0), 1.0, 0.0, &StepControl::default()),
            Err(RiccatiError::InvalidInput(_))
        ));
        assert!(matches!(
            integrate_riccati(
                &p,
                &DMatrix::identity(2, 2),
                0.0,
                1.0,
                &StepControl::default()
            ),
            Err(RiccatiError::InvalidInput(_))
        ));
    }

    #[test]
    fn constant_profiles_give_constant_branches() {
        for a in [0.5, 1.0, 2.0] {
            let p = CurvatureProfile::constant(-a * a)
                .with_bounds(a, a)
                .unwrap();
            let u = unstable_solution(&p, 20.0 / a, 1e-12).unwrap();
            let s = stable_solution(&p, 20.0 / a, 1e-12).unwrap();
            assert!(u.values.iter().all(|m| (m[(0, 0)] - a).abs() < 1e-12));
            assert!(s.values.iter().all(|m| (m[(0, 0)] + a).abs() < 1e-12));
            assert_eq!(u.kind, SolutionKind::Unstable);
            assert_eq!(s.kind, SolutionKind::Stable);
            assert!(u.periodicity_defect.unwrap() < 1e-12);
        }
    }

    #[test]
    fn decoupled_matrix_fixed_points() {
        let p = CurvatureProfile::diagonal(&[-1.0, -4.0])
            .with_bounds(1.0, 2.0)
            .unwrap();
        let u = unstable_solution(&p, 20.0, 1e-12).unwrap();
        let target = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[1.0, 2.0]));
        for m in &u.values {
            assert!((m - &target).amax() < 1e-11);
        }
        let s = stable_solution(&p, 20.0, 1e-12).unwrap();
        for m in &s.values {
            assert!((m + &target).amax() < 1e-11);
        }
    }

    #[test]
    fn flat_profile_is_parabolic() {
        let p = CurvatureProfile::constant(0.0);
        let u = unstable_solution(&p, default_settle_horizon(&p), 1e-10).unwrap();
        assert!(u.parabolic);
        assert!(u.values.iter().all(|m| m[(0, 0)] == 0.0));
    }

    #[test]
    fn unstable_branch_of_sinusoid_matches_long_horizon_oracle() {
        // Frozen from an independent long-horizon integration started at
        // t = -200 with u = 2 (DOP853, rtol 1e-13).
        const EXPECTED: [f64; 11] = [
            0.92613006, 0.95338912, 0.99810701, 1.04296527, 1.0706382, 1.07067664, 1.04332799,
            0.99908053, 0.95460257, 0.92669426, 0.92613006,
        ];
        let p = CurvatureProfile::fourier(-1.0, vec![], vec![-0.5], 1.0)
            .unwrap()
            .with_sampled_bounds(2001);
        let u = unstable_solution(&p, default_settle_horizon(&p), 1e-12).unwrap();
        let m = u.times.len() - 1;
        for (k, e) in EXPECTED.iter().enumerate() {
            let i = k * m / 10;
            assert!((u.times[i] - k as f64 / 10.0).abs() < 1e-12);
            assert!((u.values[i][(0, 0)] - e).abs() < 1e-8, "k={k}");
        }
        let (lo, hi) = u.eigen_range();
        assert!(lo > 0.5 && hi < 1.5);
        assert!(u.residual < 1e-6);
    }

    #[test]
    fn stable_branch_of_sinusoid_matches_backward_oracle() {
        const EXPECTED: [f64; 11] = [
            -1.07067664,
            -1.0706382,
            -1.04296527,
            -0.99810701,
            -0.95338912,
            -0.92613006,
            -0.92669426,
            -0.95460257,
            -0.99908053,
            -1.04332799,
            -1.07067664,
        ];
        let p = CurvatureProfile::fourier(-1.0, vec![], vec![-0.5], 1.0)
            .unwrap()
            .with_sampled_bounds(2001);
        let s = stable_solution(&p, default_settle_horizon(&p), 1e-12).unwrap();
        let m = s.times.len() - 1;
        for (k, e) in EXPECTED.iter().enumerate() {
            assert!((s.values[k * m / 10][(0, 0)] - e).abs() < 1e-8, "k={k}");
        }
        let (lo, hi) = s.eigen_range();
        assert!(lo > -1.5 && hi < -0.5);
    }

    #[test]
    fn pole_inside_period_map_reports_blowup_and_short_settle_reports_no_convergence() {
        // u' = -u^2 + 1/4 from a seed above the branch converges slowly when
        // the horizon is tiny.
        let p = CurvatureProfile::constant(-0.25)
            .with_bounds(0.5, 0.5)
            .unwrap();
        let ctl = StepControl {
            blowup_ceiling: Some(100.0),
            ..StepControl::default()
        };
        // with a forced seed via integrate, check blow-up from below the stable point
        let r = integrate_riccati(&p, &scalar(-0.6), 0.0, 50.0, &ctl);
        assert!(matches!(r, Err(RiccatiError::BlowUp { .. })));
        let bumpy = CurvatureProfile::fourier(-0.25, vec![0.2], vec![], 1.0).unwrap();
        let r = unstable_solution_with(&bumpy, 1.0, 1e-14, &ctl);
        assert!(
            matches!(r, Err(RiccatiError::NoConvergence { .. })),
            "{r:?}"
        );
    }

    #[test]
    fn finite_horizon_branch_discards_settling_window() {
        let times: Vec<f64> = (0..=400).map(|i| i as f64 * 0.1).collect();
        let values = vec![-1.0; times.len()];
        let p = CurvatureProfile::sampled_finite(times, values)
            .unwrap()
            .with_bounds(1.0, 1.0)
            .unwrap();
        let u = unstable_solution(&p, 10.0, 1e-10).unwrap();
        assert!(u.times[0] >= 10.0 - 1e-9);
        assert!((u.times.last().unwrap() - 40.0).abs() < 1e-9);
        assert!((u.time_average(|m| m[(0, 0)]) - 1.0).abs() < 1e-12);
        assert!(unstable_solution(&p, 50.0, 1e-10).is_err());
    }

    #[test]
    fn csv_has_upper_triangle_columns() {
        let p = CurvatureProfile::diagonal(&[-1.0, -4.0])
            .with_bounds(1.0, 2.0)
            .unwrap();
        let u = unstable_solution(&p, 20.0, 1e-12).unwrap();
        let csv = u.to_csv();
        assert!(csv.starts_with("t,u_11,u_12,u_22,residual\n"));
        assert_eq!(csv.lines().count(), u.times.len() + 1);
    }
}
