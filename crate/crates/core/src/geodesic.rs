//! Unit-speed geodesic flow of a conformal metric in the disk chart.
//!
//! State is `(x, y, θ)` with `θ` the Euclidean angle of the velocity:
//! `ż = e^{-σ} e^{iθ}`, `θ̇ = e^{-σ}(σ_y cos θ - σ_x sin θ)`. The metric speed
//! is identically one in this parametrization, so no renormalization is needed
//! and the reported drift is exactly zero.

use std::cell::RefCell;

use serde::Serialize;
use thiserror::Error;

use crate::hyperbolic::{geodesic_foot, hyperbolic_distance, MobiusTransform, C64};
use crate::metric::{ConformalMetric, MetricError};
use crate::ode::{OdeError, OdeSystem, Stepper, Tolerances};
use crate::profile::{CurvatureProfile, ProfileError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeodesicError {
    #[error("integration failed: {0}")]
    ToleranceFailure(String),
    #[error("trajectory left the convex core at t = {t}")]
    LimitSetEscape { t: f64 },
    #[error("start point must lie strictly inside the disk")]
    InvalidStart,
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub x: f64,
    pub y: f64,
    pub angle: f64,
}

impl PhasePoint {
    pub fn new(z: C64, angle: f64) -> Self {
        Self {
            x: z.re,
            y: z.im,
            angle,
        }
    }

    pub fn z(&self) -> C64 {
        C64::new(self.x, self.y)
    }

    /// Push-forward under an isometry of the chart.
    pub fn transform(&self, g: &MobiusTransform) -> Self {
        let z = self.z();
        Self::new(g.apply(z), wrap_angle(self.angle + g.derivative(z).arg()))
    }

    pub fn reversed(&self) -> Self {
        Self::new(self.z(), wrap_angle(self.angle + std::f64::consts::PI))
    }

    /// Chart distance, with angle differences wrapped.
    pub fn distance(&self, other: &Self) -> f64 {
        let dz = (self.z() - other.z()).norm();
        dz.max(wrap_angle(self.angle - other.angle).abs())
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r - two_pi
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub tolerances: Tolerances,
    /// Output sample spacing; the final time is always sampled.
    pub sample_dt: f64,
    /// Apply deck transformations on leaving the fundamental domain.
    pub reentry: bool,
    /// Stop when the forward ray provably leaves the core (Schottky funnels).
    pub detect_escape: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            tolerances: Tolerances {
                h_max: 0.05,
                ..Tolerances::default().with_rtol(1e-12)
            },
            sample_dt: 0.01,
            reentry: true,
            detect_escape: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub point: PhasePoint,
    pub curvature: f64,
    /// Length of the deck word accumulated up to this sample.
    pub word_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub deck_word: String,
    pub total_time: f64,
    pub speed_drift: f64,
    /// Time at which the forward ray was found to leave the core.
    pub escaped_at: Option<f64>,
    pub end: PhasePoint,
}

impl Trajectory {
    pub fn require_complete(&self) -> Result<&Self, GeodesicError> {
        match self.escaped_at {
            Some(t) => Err(GeodesicError::LimitSetEscape { t }),
            None => Ok(self),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x,y,angle,K,deck_word\n");
        for p in &self.samples {
            s.push_str(&format!(
                "{:.10},{:.12},{:.12},{:.12},{:.12},{}\n",
                p.t,
                p.point.x,
                p.point.y,
                p.point.angle,
                p.curvature,
                &self.deck_word[..p.word_len]
            ));
        }
        s
    }
}

struct GeodesicSystem<'a> {
    metric: &'a ConformalMetric,
    err: RefCell<Option<MetricError>>,
}

impl OdeSystem for GeodesicSystem<'_> {
    fn dim(&self) -> usize {
        3
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let z = C64::new(y[0], y[1]);
        match self.metric.geodesic_coefficients(z) {
            Ok((es, g)) => {
                let (s, c) = y[2].sin_cos();
                dy[0] = es * c;
                dy[1] = es * s;
                dy[2] = es * (g.im * c - g.re * s);
            }
            Err(e) => {
                self.err.borrow_mut().get_or_insert(e);
                dy.fill(f64::NAN);
            }
        }
    }
}

impl GeodesicSystem<'_> {
    fn fail(&self, e: OdeError) -> GeodesicError {
        match self.err.borrow_mut().take() {
            Some(m) => GeodesicError::Metric(m),
            None => GeodesicError::ToleranceFailure(e.to_string()),
        }
    }
}

/// The forward ray of `(z, θ)` stays in the fundamental domain and misses
/// every bump support, so it runs out a funnel without returning.
pub fn ray_escapes(metric: &ConformalMetric, p: &PhasePoint) -> bool {
    let z = p.z();
    let e = C64::from_polar(1.0, p.angle);
    let to_chart = |w: C64| (w + z) / (1.0 + z.conj() * w);
    let ahead = to_chart(e);
    if metric
        .group
        .sides
        .iter()
        .any(|s| (ahead - s.center).norm() <= s.radius)
    {
        return false;
    }
    let behind = to_chart(-e);
    metric.supports().iter().all(|&(c, r)| {
        let m = |w: C64| (w - c) / (1.0 - c.conj() * w);
        hyperbolic_distance(C64::new(0.0, 0.0), geodesic_foot(m(ahead), m(behind))) > r
    })
}

fn state(p: &PhasePoint) -> [f64; 3] {
    [p.x, p.y, p.angle]
}

fn point(y: &[f64]) -> PhasePoint {
    PhasePoint::new(C64::new(y[0], y[1]), y[2])
}

/// Integrate the geodesic flow for `time` (negative times flow backward).
pub fn flow(
    metric: &ConformalMetric,
    start: PhasePoint,
    time: f64,
    cfg: &FlowConfig,
) -> Result<Trajectory, GeodesicError> {
    if !(start.z().norm() < 1.0) || !start.angle.is_finite() {
        return Err(GeodesicError::InvalidStart);
    }
    let sys = GeodesicSystem {
        metric,
        err: RefCell::new(None),
    };
    let mut st = Stepper::new(&sys, 0.0, &state(&start), cfg.tolerances);
    let dir = if time < 0.0 { -1.0 } else { 1.0 };
    let n_samples = (time.abs() / cfg.sample_dt).ceil().max(0.0) as usize;
    let sample_time = |k: usize| {
        if k >= n_samples {
            time
        } else {
            dir * k as f64 * cfg.sample_dt
        }
    };
    let mut samples = vec![Sample {
        t: 0.0,
        point: start,
        curvature: metric.gaussian_curvature(start.z())?,
        word_len: 0,
    }];
    let mut next = 1usize;
    let mut word = String::new();
    let mut escaped_at = None;
    let mut buf = [0.0; 3];
    let emit = |st: &Stepper<GeodesicSystem>,
                upto: f64,
                next: &mut usize,
                samples: &mut Vec<Sample>,
                word_len: usize,
                buf: &mut [f64; 3]|
     -> Result<(), GeodesicError> {
        while *next <= n_samples && dir * sample_time(*next) <= dir * upto {
            let t = sample_time(*next);
            st.interpolate(t, buf);
            let p = point(buf);
            samples.push(Sample {
                t,
                point: p,
                curvature: metric.gaussian_curvature(p.z())?,
                word_len,
            });
            *next += 1;
        }
        Ok(())
    };
    if cfg.detect_escape && ray_escapes(metric, &start) {
        escaped_at = Some(0.0);
    }
    while escaped_at.is_none() && st.t() != time {
        let t_prev = st.t();
        let t_new = st.step_toward(time).map_err(|e| sys.fail(e))?;
        let z = C64::new(st.y()[0], st.y()[1]);
        let mut crossing: Option<(f64, char)> = None;
        if cfg.reentry && !metric.group.in_domain(z) {
            for side in metric.group.sides.iter().filter(|s| s.excess(z) < 0.0) {
                let (mut lo, mut hi) = (t_prev, t_new);
                while (hi - lo).abs() > 1e-13 {
                    let mid = 0.5 * (lo + hi);
                    st.interpolate(mid, &mut buf);
                    if side.excess(C64::new(buf[0], buf[1])) < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                if crossing.is_none_or(|(t, _)| dir * hi < dir * t) {
                    crossing = Some((hi, side.letter));
                }
            }
        }
        match crossing {
            Some((tc, letter)) => {
                emit(&st, tc, &mut next, &mut samples, word.len(), &mut buf)?;
                st.interpolate(tc, &mut buf);
                let g = metric
                    .group
                    .letter(letter)
                    .map_err(MetricError::from)?
                    .inverse();
                let p = point(&buf).transform(&g);
                word.push(letter);
                st.set_state(tc, &state(&p));
            }
            None => emit(&st, t_new, &mut next, &mut samples, word.len(), &mut buf)?,
        }
        if cfg.detect_escape && ray_escapes(metric, &point(st.y())) {
            escaped_at = Some(st.t());
        }
    }
    let end = point(st.y());
    if escaped_at.is_some() && samples.last().is_none_or(|s| s.t != st.t()) {
        samples.push(Sample {
            t: st.t(),
            point: end,
            curvature: metric.gaussian_curvature(end.z())?,
            word_len: word.len(),
        });
    }
    Ok(Trajectory {
        samples,
        deck_word: word,
        total_time: st.t(),
        speed_drift: 0.0,
        escaped_at,
        end: PhasePoint {
            angle: wrap_angle(end.angle),
            ..end
        },
    })
}

/// Endpoint of the flow in the universal cover (no re-entry, no sampling).
pub fn flow_endpoint(
    metric: &ConformalMetric,
    start: PhasePoint,
    time: f64,
    tol: &Tolerances,
) -> Result<PhasePoint, GeodesicError> {
    if !(start.z().norm() < 1.0) {
        return Err(GeodesicError::InvalidStart);
    }
    let sys = GeodesicSystem {
        metric,
        err: RefCell::new(None),
    };
    let mut st = Stepper::new(&sys, 0.0, &state(&start), *tol);
    st.advance_to(time).map_err(|e| sys.fail(e))?;
    Ok(point(st.y()))
}

/// Curvature along a trajectory as a finite-horizon profile.
pub fn curvature_along(traj: &Trajectory) -> Result<CurvatureProfile, GeodesicError> {
    let mut times = Vec::with_capacity(traj.samples.len());
    let mut values = Vec::with_capacity(traj.samples.len());
    for s in &traj.samples {
        // duplicate times can appear at a truncated end
        if times.last().is_some_and(|t: &f64| (s.t - t).abs() < 1e-14) {
            continue;
        }
        times.push(s.t);
        values.push(s.curvature);
    }
    if times.len() < 2 {
        times.push(times[0] + 1e-9);
        values.push(values[0]);
    }
    Ok(CurvatureProfile::sampled_finite(times, values)?)
}

/// Periodic curvature profile sampled at `n` equally spaced times over `period`.
pub fn curvature_along_periodic(
    metric: &ConformalMetric,
    start: PhasePoint,
    period: f64,
    n: usize,
    tol: &Tolerances,
) -> Result<(CurvatureProfile, Trajectory), GeodesicError> {
    let cfg = FlowConfig {
        tolerances: *tol,
        sample_dt: period / n as f64,
        reentry: true,
        detect_escape: false,
    };
    let traj = flow(metric, start, period, &cfg)?;
    let values: Vec<f64> = traj.samples.iter().take(n).map(|s| s.curvature).collect();
    Ok((CurvatureProfile::periodic_spline(period, values)?, traj))
}
