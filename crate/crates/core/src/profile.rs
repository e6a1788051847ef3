//! Curvature profiles along a geodesic: the coefficient `R(t)` of the Jacobi
//! equation `Y'' + R Y = 0`. In dimension two this is the scalar Gaussian
//! curvature `K(t)`; in matrix mode it is a symmetric `(n-1)×(n-1)` matrix
//! whose eigenvalues are the sectional curvatures of the normal planes.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

pub type SymMatrix = DMatrix<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("profile needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("sample times must start at 0 and increase strictly (offending index {index})")]
    BadSampleTimes { index: usize },
    #[error("period must be positive and finite, got {0}")]
    BadPeriod(f64),
    #[error("pinching bounds need 0 <= b <= c, got b = {b}, c = {c}")]
    BadBounds { b: f64, c: f64 },
    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("eigenvalue {eigenvalue} of -R at t = {t} lies outside [b², c²] = [{lo}, {hi}]")]
    BoundsViolated {
        t: f64,
        eigenvalue: f64,
        lo: f64,
        hi: f64,
    },
    #[error("non-finite curvature value at index {0}")]
    NonFinite(usize),
}

/// Where a profile is defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// `evaluate(t + period) == evaluate(t)` for all `t`.
    Periodic { period: f64 },
    /// Finite horizon; evaluation outside `[start, end]` clamps to the ends.
    Finite { start: f64, end: f64 },
}

/// Pinching constants: the spectrum of `-R(t)` lies in `[b², c²]`, i.e. the
/// sectional curvature lies in `[-c², -b²]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PinchingBounds {
    pub b: f64,
    pub c: f64,
}

impl PinchingBounds {
    pub fn new(b: f64, c: f64) -> Result<Self, ProfileError> {
        if !(b >= 0.0 && c >= b && c.is_finite()) {
            return Err(ProfileError::BadBounds { b, c });
        }
        Ok(Self { b, c })
    }
}

#[derive(Clone)]
enum Source {
    Constant(SymMatrix),
    Fourier {
        mean: f64,
        cos: Vec<f64>,
        sin: Vec<f64>,
    },
    /// `cum[i] = ∫_{t_0}^{t_i} K`.
    Linear {
        times: Vec<f64>,
        values: Vec<f64>,
        cum: Vec<f64>,
    },
    Spline(PeriodicSpline),
    Function(Arc<dyn Fn(f64) -> SymMatrix + Send + Sync>),
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Constant(m) => write!(f, "Constant({m:?})"),
            Source::Fourier { mean, cos, sin } => {
                write!(f, "Fourier {{ mean: {mean}, cos: {cos:?}, sin: {sin:?} }}")
            }
            Source::Linear { times, .. } => write!(f, "Linear({} samples)", times.len()),
            Source::Spline(s) => write!(f, "Spline({} knots)", s.values.len()),
            Source::Function(_) => write!(f, "Function"),
        }
    }
}

/// Uniform periodic cubic spline (C²).
#[derive(Debug, Clone)]
struct PeriodicSpline {
    period: f64,
    values: Vec<f64>,
    second: Vec<f64>,
    /// `cum[i] = ∫_0^{i·h}`, with `cum[n]` the integral over a period.
    cum: Vec<f64>,
}

impl PeriodicSpline {
    fn new(period: f64, values: Vec<f64>) -> Self {
        let n = values.len();
        let h = period / n as f64;
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                6.0 / (h * h) * (values[(i + n - 1) % n] - 2.0 * values[i] + values[(i + 1) % n])
            })
            .collect();
        // M_{i-1} + 4 M_i + M_{i+1} = rhs_i, cyclic; Gauss–Seidel contracts by 1/2 per sweep
        let mut m = vec![0.0; n];
        for _ in 0..200 {
            let mut delta: f64 = 0.0;
            for i in 0..n {
                let new = (rhs[i] - m[(i + n - 1) % n] - m[(i + 1) % n]) / 4.0;
                delta = delta.max((new - m[i]).abs());
                m[i] = new;
            }
            let scale = m.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            if delta <= 1e-15 * scale {
                break;
            }
        }
        let mut out = Self {
            period,
            values,
            second: m,
            cum: Vec::new(),
        };
        let mut cum = vec![0.0; n + 1];
        for i in 0..n {
            cum[i + 1] = cum[i] + out.interval_integral(i, 1.0);
        }
        out.cum = cum;
        out
    }

    fn interval_integral(&self, i: usize, alpha: f64) -> f64 {
        let n = self.values.len();
        let h = self.period / n as f64;
        let j = (i + 1) % n;
        let (yi, yj, mi, mj) = (
            self.values[i],
            self.values[j],
            self.second[i],
            self.second[j],
        );
        let a2 = alpha * alpha;
        let b4 = (1.0 - alpha).powi(4);
        let cubic_i = (1.0 - b4) / 4.0 - alpha + a2 / 2.0;
        let cubic_j = a2 * a2 / 4.0 - a2 / 2.0;
        h * (yi * (alpha - a2 / 2.0) + yj * a2 / 2.0 + h * h / 6.0 * (mi * cubic_i + mj * cubic_j))
    }

    /// `∫_0^t` of the spline, for any real `t`.
    fn primitive(&self, t: f64) -> f64 {
        let n = self.values.len();
        let h = self.period / n as f64;
        let laps = (t / self.period).floor();
        let s = (t - laps * self.period) / h;
        let i = (s.floor() as usize).min(n - 1);
        laps * self.cum[n] + self.cum[i] + self.interval_integral(i, s - i as f64)
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.values.len();
        let h = self.period / n as f64;
        let s = t.rem_euclid(self.period) / h;
        let i = (s.floor() as usize).min(n - 1);
        let a = s - i as f64;
        let b = 1.0 - a;
        let j = (i + 1) % n;
        let (yi, yj, mi, mj) = (
            self.values[i],
            self.values[j],
            self.second[i],
            self.second[j],
        );
        b * yi + a * yj + ((b * b * b - b) * mi + (a * a * a - a) * mj) * h * h / 6.0
    }
}

/// A scalar or symmetric-matrix curvature function along a geodesic.
#[derive(Debug, Clone)]
pub struct CurvatureProfile {
    dim: usize,
    domain: Domain,
    source: Source,
    bounds: Option<PinchingBounds>,
    reversed: bool,
}

impl CurvatureProfile {
    /// `K ≡ k` (scalar), nominal period 1.
    pub fn constant(k: f64) -> Self {
        Self::constant_matrix(DMatrix::from_element(1, 1, k)).expect("1x1 is symmetric")
    }

    pub fn constant_matrix(r: SymMatrix) -> Result<Self, ProfileError> {
        check_symmetric(&r)?;
        Ok(Self {
            dim: r.nrows(),
            domain: Domain::Periodic { period: 1.0 },
            source: Source::Constant(r),
            bounds: None,
            reversed: false,
        })
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        Self::constant_matrix(DMatrix::from_diagonal(
            &nalgebra::DVector::from_column_slice(diag),
        ))
        .expect("diagonal is symmetric")
    }

    /// `K(t) = mean + Σ_k cos[k-1]·cos(2πkt/τ) + sin[k-1]·sin(2πkt/τ)`.
    pub fn fourier(
        mean: f64,
        cos: Vec<f64>,
        sin: Vec<f64>,
        period: f64,
    ) -> Result<Self, ProfileError> {
        check_period(period)?;
        Ok(Self {
            dim: 1,
            domain: Domain::Periodic { period },
            source: Source::Fourier { mean, cos, sin },
            bounds: None,
            reversed: false,
        })
    }

    /// Periodic piecewise-linear profile through `(t_i, K_i)`; `t_0 = 0` and
    /// the period is the last time.
    pub fn sampled(times: Vec<f64>, values: Vec<f64>) -> Result<Self, ProfileError> {
        check_samples(&times, &values)?;
        if times[0] != 0.0 {
            return Err(ProfileError::BadSampleTimes { index: 0 });
        }
        let period = *times.last().unwrap();
        Ok(Self {
            dim: 1,
            domain: Domain::Periodic { period },
            source: linear_source(times, values),
            bounds: None,
            reversed: false,
        })
    }

    /// Finite-horizon piecewise-linear profile (curvature along an arbitrary
    /// trajectory).
    pub fn sampled_finite(times: Vec<f64>, values: Vec<f64>) -> Result<Self, ProfileError> {
        check_samples(&times, &values)?;
        let domain = Domain::Finite {
            start: times[0],
            end: *times.last().unwrap(),
        };
        Ok(Self {
            dim: 1,
            domain,
            source: linear_source(times, values),
            bounds: None,
            reversed: false,
        })
    }

    /// Periodic C² cubic spline through `values[i]` at `t = i·period/N`.
    pub fn periodic_spline(period: f64, values: Vec<f64>) -> Result<Self, ProfileError> {
        check_period(period)?;
        if values.len() < 4 {
            return Err(ProfileError::TooFewSamples {
                needed: 4,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ProfileError::NonFinite(i));
        }
        Ok(Self {
            dim: 1,
            domain: Domain::Periodic { period },
            source: Source::Spline(PeriodicSpline::new(period, values)),
            bounds: None,
            reversed: false,
        })
    }

    /// Arbitrary matrix-valued profile. The returned matrices are symmetrized.
    pub fn from_fn(
        dim: usize,
        domain: Domain,
        f: impl Fn(f64) -> SymMatrix + Send + Sync + 'static,
    ) -> Result<Self, ProfileError> {
        match domain {
            Domain::Periodic { period } => check_period(period)?,
            Domain::Finite { start, end } => {
                if !(end > start) {
                    return Err(ProfileError::BadPeriod(end - start));
                }
            }
        }
        Ok(Self {
            dim,
            domain,
            source: Source::Function(Arc::new(f)),
            bounds: None,
            reversed: false,
        })
    }

    pub fn with_period(mut self, period: f64) -> Result<Self, ProfileError> {
        check_period(period)?;
        match &self.source {
            Source::Constant(_) | Source::Function(_) => {
                self.domain = Domain::Periodic { period };
                Ok(self)
            }
            _ => Err(ProfileError::BadPeriod(period)),
        }
    }

    /// Declare pinching bounds, verified on `check_points` samples per period
    /// (or across the finite horizon).
    pub fn with_bounds(mut self, b: f64, c: f64) -> Result<Self, ProfileError> {
        let bounds = PinchingBounds::new(b, c)?;
        self.bounds = Some(bounds);
        self.check_bounds(512, 1e-9)?;
        Ok(self)
    }

    /// Declare the tightest bounds seen on a sample grid.
    pub fn with_sampled_bounds(mut self, points: usize) -> Self {
        let (lo, hi) = self.neg_spectrum_range(points);
        self.bounds = Some(PinchingBounds {
            b: lo.max(0.0).sqrt(),
            c: hi.max(0.0).sqrt(),
        });
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Mean spacing of the interpolation knots for sampled profiles.
    pub fn knot_spacing(&self) -> Option<f64> {
        match &self.source {
            Source::Linear { times, .. } => {
                Some((times[times.len() - 1] - times[0]) / (times.len() - 1) as f64)
            }
            Source::Spline(s) => Some(s.period / s.values.len() as f64),
            _ => None,
        }
    }

    pub fn domain(&self) -> Domain {
        match self.domain {
            Domain::Finite { start, end } if self.reversed => Domain::Finite {
                start: -end,
                end: -start,
            },
            d => d,
        }
    }

    pub fn period(&self) -> Option<f64> {
        match self.domain {
            Domain::Periodic { period } => Some(period),
            Domain::Finite { .. } => None,
        }
    }

    /// Start and end of one period (periodic) or of the horizon.
    pub fn span(&self) -> (f64, f64) {
        match self.domain() {
            Domain::Periodic { period } => (0.0, period),
            Domain::Finite { start, end } => (start, end),
        }
    }

    pub fn bounds(&self) -> Option<PinchingBounds> {
        self.bounds
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.source, Source::Constant(_))
    }

    /// The profile `t ↦ R(-t)`.
    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        out.reversed = !self.reversed;
        out
    }

    pub fn evaluate(&self, t: f64) -> SymMatrix {
        let t = if self.reversed { -t } else { t };
        match &self.source {
            Source::Constant(m) => m.clone(),
            Source::Function(f) => {
                let m = f(self.wrap(t));
                (&m + m.transpose()) * 0.5
            }
            _ => DMatrix::from_element(1, 1, self.scalar_source(t)),
        }
    }

    /// `∫_a^b R(t) dt`: closed form for sampled and trigonometric sources,
    /// 32-panel Simpson for function sources.
    pub fn integral(&self, a: f64, b: f64) -> SymMatrix {
        if self.reversed {
            let mut fwd = self.clone();
            fwd.reversed = false;
            return fwd.integral(-b, -a);
        }
        match &self.source {
            Source::Constant(m) => m * (b - a),
            Source::Function(_) => {
                let n = 32;
                let h = (b - a) / n as f64;
                let mut acc = self.evaluate(a) + self.evaluate(b);
                for i in 1..n {
                    acc += self.evaluate(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
                }
                acc * (h / 3.0)
            }
            _ => DMatrix::from_element(1, 1, self.scalar_primitive(b) - self.scalar_primitive(a)),
        }
    }

    fn scalar_primitive(&self, t: f64) -> f64 {
        match &self.source {
            Source::Fourier { mean, cos, sin } => {
                let period = self.period().unwrap();
                let w = 2.0 * std::f64::consts::PI / period;
                let mut p = mean * t;
                for (j, c) in cos.iter().enumerate() {
                    let k = (j + 1) as f64 * w;
                    p += c * (k * t).sin() / k;
                }
                for (j, s) in sin.iter().enumerate() {
                    let k = (j + 1) as f64 * w;
                    p -= s * (k * t).cos() / k;
                }
                p
            }
            Source::Linear { times, values, cum } => match self.domain {
                Domain::Periodic { period } => {
                    let laps = (t / period).floor();
                    laps * cum[cum.len() - 1]
                        + linear_primitive(times, values, cum, t - laps * period)
                }
                Domain::Finite { .. } => linear_primitive(times, values, cum, t),
            },
            Source::Spline(s) => s.primitive(t),
            Source::Constant(_) | Source::Function(_) => unreachable!(),
        }
    }

    /// Scalar curvature; for matrix profiles the Ricci-normalized mean
    /// curvature `tr R / (n-1)`.
    pub fn scalar(&self, t: f64) -> f64 {
        let t = if self.reversed { -t } else { t };
        match &self.source {
            Source::Constant(m) => m.trace() / self.dim as f64,
            Source::Function(f) => f(self.wrap(t)).trace() / self.dim as f64,
            _ => self.scalar_source(t),
        }
    }

    fn wrap(&self, t: f64) -> f64 {
        match self.domain {
            Domain::Periodic { period } => t.rem_euclid(period),
            Domain::Finite { start, end } => t.clamp(start, end),
        }
    }

    fn scalar_source(&self, t: f64) -> f64 {
        match &self.source {
            Source::Fourier { mean, cos, sin } => {
                let period = self.period().unwrap();
                let w = 2.0 * std::f64::consts::PI * t.rem_euclid(period) / period;
                let mut k = *mean;
                for (j, c) in cos.iter().enumerate() {
                    k += c * ((j + 1) as f64 * w).cos();
                }
                for (j, s) in sin.iter().enumerate() {
                    k += s * ((j + 1) as f64 * w).sin();
                }
                k
            }
            Source::Linear { times, values, .. } => linear_interp(times, values, self.wrap(t)),
            Source::Spline(s) => s.eval(t),
            Source::Constant(_) | Source::Function(_) => unreachable!(),
        }
    }

    /// Sample times covering one period (or the horizon), endpoints included.
    pub fn sample_times(&self, points: usize) -> Vec<f64> {
        let (a, b) = self.span();
        let n = points.max(2);
        (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect()
    }

    /// Range of the eigenvalues of `-R(t)` over a sample grid.
    pub fn neg_spectrum_range(&self, points: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for t in self.sample_times(points) {
            for e in neg_eigenvalues(&self.evaluate(t)) {
                lo = lo.min(e);
                hi = hi.max(e);
            }
        }
        (lo, hi)
    }

    /// Largest absolute entry of `R` over a sample grid.
    pub fn max_abs(&self, points: usize) -> f64 {
        self.sample_times(points)
            .into_iter()
            .map(|t| self.evaluate(t).amax())
            .fold(0.0, f64::max)
    }

    /// Verify symmetry and (if declared) pinching bounds on a sample grid.
    pub fn check_bounds(&self, points: usize, tol: f64) -> Result<(), ProfileError> {
        for t in self.sample_times(points) {
            let r = self.evaluate(t);
            check_symmetric(&r)?;
            if let Some(PinchingBounds { b, c }) = self.bounds {
                for e in neg_eigenvalues(&r) {
                    if e < b * b - tol || e > c * c + tol {
                        return Err(ProfileError::BoundsViolated {
                            t,
                            eigenvalue: e,
                            lo: b * b,
                            hi: c * c,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Eigenvalues of `-R`, ascending.
pub fn neg_eigenvalues(r: &SymMatrix) -> Vec<f64> {
    if r.nrows() == 1 {
        return vec![-r[(0, 0)]];
    }
    sorted_eigenvalues(&(-r))
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sorted_eigenvalues(m: &SymMatrix) -> Vec<f64> {
    if m.nrows() == 1 {
        return vec![m[(0, 0)]];
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

fn check_symmetric(m: &SymMatrix) -> Result<(), ProfileError> {
    if !m.is_square() {
        return Err(ProfileError::NotSymmetric {
            asymmetry: f64::INFINITY,
        });
    }
    let asym = (m - m.transpose()).amax();
    if asym > 1e-12 * m.amax().max(1.0) {
        return Err(ProfileError::NotSymmetric { asymmetry: asym });
    }
    Ok(())
}

fn check_period(period: f64) -> Result<(), ProfileError> {
    if period > 0.0 && period.is_finite() {
        Ok(())
    } else {
        Err(ProfileError::BadPeriod(period))
    }
}

fn check_samples(times: &[f64], values: &[f64]) -> Result<(), ProfileError> {
    if times.len() < 2 || times.len() != values.len() {
        return Err(ProfileError::TooFewSamples {
            needed: 2,
            got: times.len().min(values.len()),
        });
    }
    for i in 1..times.len() {
        if !(times[i] > times[i - 1]) {
            return Err(ProfileError::BadSampleTimes { index: i });
        }
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(ProfileError::NonFinite(i));
    }
    Ok(())
}

fn linear_source(times: Vec<f64>, values: Vec<f64>) -> Source {
    let mut cum = vec![0.0; times.len()];
    for i in 1..times.len() {
        cum[i] = cum[i - 1] + 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
    }
    Source::Linear { times, values, cum }
}

/// `∫_{t_0}^t` of the interpolant, extended by constants beyond the ends.
fn linear_primitive(times: &[f64], values: &[f64], cum: &[f64], t: f64) -> f64 {
    let n = times.len();
    if t <= times[0] {
        return (t - times[0]) * values[0];
    }
    if t >= times[n - 1] {
        return cum[n - 1] + (t - times[n - 1]) * values[n - 1];
    }
    let j = times.partition_point(|&x| x <= t);
    let t0 = times[j - 1];
    cum[j - 1] + 0.5 * (t - t0) * (values[j - 1] + linear_interp(times, values, t))
}

fn linear_interp(times: &[f64], values: &[f64], t: f64) -> f64 {
    let n = times.len();
    if t <= times[0] {
        return values[0];
    }
    if t >= times[n - 1] {
        return values[n - 1];
    }
    let j = times.partition_point(|&x| x <= t);
    let (t0, t1) = (times[j - 1], times[j]);
    let a = (t - t0) / (t1 - t0);
    values[j - 1] * (1.0 - a) + values[j] * a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sinusoid() -> CurvatureProfile {
        CurvatureProfile::fourier(-1.0, vec![], vec![-0.5], 1.0).unwrap()
    }

    #[test]
    fn fourier_profile_matches_formula_and_is_periodic() {
        let p = sinusoid();
        for &t in &[0.0, 0.1, 0.37, 0.9] {
            let k = -1.0 - 0.5 * (2.0 * std::f64::consts::PI * t).sin();
            assert!((p.scalar(t) - k).abs() < 1e-14);
            assert!((p.scalar(t + 1.0) - p.scalar(t)).abs() < 1e-12);
            assert!((p.scalar(t - 3.0) - p.scalar(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_profile_interpolates_linearly_and_wraps() {
        let p = CurvatureProfile::sampled(vec![0.0, 1.0, 2.0], vec![-1.0, -2.0, -1.0]).unwrap();
        assert_eq!(p.period(), Some(2.0));
        assert!((p.scalar(0.5) + 1.5).abs() < 1e-15);
        assert!((p.scalar(2.5) + 1.5).abs() < 1e-15);
        assert!(CurvatureProfile::sampled(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(CurvatureProfile::sampled(vec![0.5, 1.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn spline_reproduces_smooth_periodic_data() {
        let n = 200;
        let vals: Vec<f64> = (0..n)
            .map(|i| -1.0 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).sin())
            .collect();
        let p = CurvatureProfile::periodic_spline(1.0, vals).unwrap();
        let q = sinusoid();
        for i in 0..997 {
            let t = i as f64 / 997.0;
            assert!((p.scalar(t) - q.scalar(t)).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn declared_bounds_are_checked() {
        let p = sinusoid();
        assert!(p.clone().with_bounds(0.5f64.sqrt(), 1.5f64.sqrt()).is_ok());
        assert!(matches!(
            p.clone().with_bounds(0.9, 1.0),
            Err(ProfileError::BoundsViolated { .. })
        ));
        let q = p.with_sampled_bounds(1001);
        let b = q.bounds().unwrap();
        assert!((b.b * b.b - 0.5).abs() < 1e-9 && (b.c * b.c - 1.5).abs() < 1e-9);
    }

    #[test]
    fn reversal_flips_time() {
        let p = sinusoid();
        let r = p.reversed();
        assert!((r.scalar(0.2) - p.scalar(-0.2)).abs() < 1e-14);
        let f = CurvatureProfile::sampled_finite(vec![0.0, 1.0, 3.0], vec![0.0, 1.0, 3.0]).unwrap();
        let fr = f.reversed();
        assert_eq!(fr.span(), (-3.0, 0.0));
        assert!((fr.scalar(-2.0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn matrix_profiles_are_symmetric() {
        let p = CurvatureProfile::diagonal(&[-1.0, -4.0])
            .with_bounds(1.0, 2.0)
            .unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(neg_eigenvalues(&p.evaluate(0.3)), vec![1.0, 4.0]);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(CurvatureProfile::constant_matrix(bad).is_err());
        let f = CurvatureProfile::from_fn(2, Domain::Periodic { period: 1.0 }, |t| {
            DMatrix::from_row_slice(2, 2, &[-1.0, t, 0.0, -2.0])
        })
        .unwrap();
        let m = f.evaluate(0.4);
        assert_eq!(m[(0, 1)], m[(1, 0)]);
    }
}
