//! Closed geodesics of the perturbed metric by multiple-shooting Newton
//! continuation from the axes of the unperturbed group elements.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::geodesic::{
    curvature_along_periodic, flow, flow_endpoint, wrap_angle, FlowConfig, GeodesicError,
    PhasePoint,
};
use crate::hyperbolic::{canonical_cyclic, GeodesicClass, HyperbolicError, MobiusTransform};
use crate::lyapunov::{lyapunov_with_solution, LyapunovConfig, LyapunovReport};
use crate::metric::{ConformalMetric, MetricError};
use crate::ode::Tolerances;
use crate::profile::CurvatureProfile;
use crate::quadrature::simpson_mean;
use crate::riccati::{RiccatiError, RiccatiSolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitError {
    #[error("shooting did not converge for {word}; residual history {residuals:?}")]
    NoConvergence { word: String, residuals: Vec<f64> },
    #[error("orbit for {word} closes only to {defect:e} after one period")]
    ClosureDefect { word: String, defect: f64 },
    #[error("orbit for {expected} converged with deck word {found}")]
    WrongDeckWord { expected: String, found: String },
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Hyperbolic(#[from] HyperbolicError),
    #[error(transparent)]
    Riccati(#[from] RiccatiError),
}

impl From<MetricError> for OrbitError {
    fn from(e: MetricError) -> Self {
        OrbitError::Geodesic(GeodesicError::Metric(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingConfig {
    /// Target segment length; `m = max(2, ceil(ℓ / segment_length))`.
    pub segment_length: f64,
    /// Overrides the segment count when set.
    pub segments: Option<usize>,
    /// Arclength offset of the first seed point along the axis.
    pub start_offset: f64,
    pub fd_step: f64,
    pub residual_tol: f64,
    pub closure_tol: f64,
    pub max_newton: usize,
    /// Extra continuation stages tried when direct refinement fails.
    pub continuation_stages: usize,
    pub tolerances: Tolerances,
    /// Profile samples per unit period for the exponent computation.
    pub samples_per_unit: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            segment_length: 1.0,
            segments: None,
            start_offset: 0.0,
            fd_step: 1e-6,
            residual_tol: 1e-11,
            closure_tol: 1e-8,
            max_newton: 25,
            continuation_stages: 4,
            tolerances: Tolerances {
                h_max: 0.05,
                ..Tolerances::default().with_rtol(1e-12)
            },
            samples_per_unit: 128.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PeriodicOrbit {
    pub class: GeodesicClass,
    pub period: f64,
    pub start: PhasePoint,
    /// Norm of the multiple-shooting residual at the converged orbit.
    pub closure_defect: f64,
    /// `φ^period(start)` versus `start` from one uninterrupted integration.
    pub single_shot_defect: f64,
    pub deck_word: String,
    pub segments: usize,
    pub newton_iterations: usize,
    pub residual_history: Vec<f64>,
    pub mean_curvature: f64,
    #[serde(skip)]
    pub profile: Option<CurvatureProfile>,
    pub exponent_report: Option<LyapunovReport>,
}

/// Shooting unknowns: segment starts in fundamental-domain coordinates and the
/// period; segment `i` must end at `words[i]` applied to the next start.
struct Plan {
    m: usize,
    words: Vec<MobiusTransform>,
    phase_point: PhasePoint,
}

fn unpack(x: &DVector<f64>, i: usize) -> PhasePoint {
    PhasePoint {
        x: x[3 * i],
        y: x[3 * i + 1],
        angle: x[3 * i + 2],
    }
}

fn mismatch(a: &PhasePoint, b: &PhasePoint) -> [f64; 3] {
    [a.x - b.x, a.y - b.y, wrap_angle(a.angle - b.angle)]
}

fn velocity(metric: &ConformalMetric, p: &PhasePoint) -> Result<[f64; 3], MetricError> {
    let (es, g) = metric.geodesic_coefficients(p.z())?;
    let (s, c) = p.angle.sin_cos();
    Ok([es * c, es * s, es * (g.im * c - g.re * s)])
}

struct Shooter<'a> {
    metric: &'a ConformalMetric,
    plan: Plan,
    cfg: ShootingConfig,
}

impl Shooter<'_> {
    fn phase(&self, x: &DVector<f64>) -> f64 {
        let p = &self.plan.phase_point;
        let (s, c) = p.angle.sin_cos();
        (x[0] - p.x) * c + (x[1] - p.y) * s
    }

    fn residual(&self, x: &DVector<f64>) -> Result<(DVector<f64>, Vec<PhasePoint>), OrbitError> {
        let m = self.plan.m;
        let dt = x[3 * m] / m as f64;
        let mut r = DVector::zeros(3 * m + 1);
        let mut ends = Vec::with_capacity(m);
        for i in 0..m {
            let e = flow_endpoint(self.metric, unpack(x, i), dt, &self.cfg.tolerances)?;
            let target = unpack(x, (i + 1) % m).transform(&self.plan.words[i]);
            let d = mismatch(&e, &target);
            r.rows_mut(3 * i, 3).copy_from_slice(&d);
            ends.push(e);
        }
        r[3 * m] = self.phase(x);
        Ok((r, ends))
    }

    fn jacobian(&self, x: &DVector<f64>, ends: &[PhasePoint]) -> Result<DMatrix<f64>, OrbitError> {
        let m = self.plan.m;
        let n = 3 * m + 1;
        let h = self.cfg.fd_step;
        let dt = x[3 * m] / m as f64;
        let mut j = DMatrix::zeros(n, n);
        for i in 0..m {
            let s = unpack(x, i);
            for k in 0..3 {
                let mut sp = s;
                match k {
                    0 => sp.x += h,
                    1 => sp.y += h,
                    _ => sp.angle += h,
                }
                let e = flow_endpoint(self.metric, sp, dt, &self.cfg.tolerances)?;
                let d = mismatch(&e, &ends[i]);
                for row in 0..3 {
                    j[(3 * i + row, 3 * i + k)] += d[row] / h;
                }
            }
            // dependence on the next start through the deck map
            let next = (i + 1) % m;
            let s_next = unpack(x, next);
            let base = s_next.transform(&self.plan.words[i]);
            for k in 0..3 {
                let mut sp = s_next;
                match k {
                    0 => sp.x += h,
                    1 => sp.y += h,
                    _ => sp.angle += h,
                }
                let d = mismatch(&sp.transform(&self.plan.words[i]), &base);
                for row in 0..3 {
                    j[(3 * i + row, 3 * next + k)] -= d[row] / h;
                }
            }
            let v = velocity(self.metric, &ends[i])?;
            for row in 0..3 {
                j[(3 * i + row, 3 * m)] = v[row] / m as f64;
            }
        }
        let p = &self.plan.phase_point;
        j[(3 * m, 0)] = p.angle.cos();
        j[(3 * m, 1)] = p.angle.sin();
        Ok(j)
    }

    fn newton(&self, mut x: DVector<f64>) -> Result<(DVector<f64>, usize, Vec<f64>), Vec<f64>> {
        let mut history = Vec::new();
        let eval = |x: &DVector<f64>| self.residual(x);
        let Ok((mut r, mut ends)) = eval(&x) else {
            return Err(history);
        };
        history.push(r.norm());
        for it in 0..self.cfg.max_newton {
            if r.norm() < self.cfg.residual_tol {
                return Ok((x, it, history));
            }
            let Ok(j) = self.jacobian(&x, &ends) else {
                return Err(history);
            };
            let Some(dx) = j.lu().solve(&(-&r)) else {
                return Err(history);
            };
            // damped update: halve until the residual decreases
            let mut lambda = 1.0;
            loop {
                let trial = &x + &dx * lambda;
                match eval(&trial) {
                    Ok((rt, et)) if rt.norm() < r.norm() || lambda < 1e-3 => {
                        x = trial;
                        r = rt;
                        ends = et;
                        break;
                    }
                    _ if lambda < 1e-3 => return Err(history),
                    _ => lambda *= 0.5,
                }
            }
            history.push(r.norm());
        }
        if r.norm() < self.cfg.residual_tol {
            Ok((x, self.cfg.max_newton, history))
        } else {
            Err(history)
        }
    }
}

/// Seed segments from the unperturbed flow along the class axis.
fn seed(
    metric: &ConformalMetric,
    class: &GeodesicClass,
    cfg: &ShootingConfig,
) -> Result<(Plan, DVector<f64>), OrbitError> {
    let g = &class.transform;
    let z0 = g.axis_point(cfg.start_offset)?;
    let z1 = g.axis_point(cfg.start_offset + 1e-6)?;
    let lifted = PhasePoint::new(z0, (z1 - z0).arg());
    let proj = metric.group.fundamental_domain_project(z0)?;
    let start = lifted.transform(&proj.deck);
    let ell = class.length;
    let m = cfg
        .segments
        .unwrap_or_else(|| ((ell / cfg.segment_length).ceil() as usize).max(2));
    let base = metric.with_epsilon(0.0);
    let fc = FlowConfig {
        tolerances: cfg.tolerances,
        sample_dt: ell / m as f64,
        reentry: true,
        detect_escape: false,
    };
    let traj = flow(&base, start, ell, &fc)?;
    let mut x = DVector::zeros(3 * m + 1);
    let mut words = Vec::with_capacity(m);
    let mut prev_len = 0;
    for i in 0..m {
        let s = traj.samples[i];
        x.rows_mut(3 * i, 3)
            .copy_from_slice(&[s.point.x, s.point.y, s.point.angle]);
        let len = if i + 1 < m {
            traj.samples[i + 1].word_len
        } else {
            traj.deck_word.len()
        };
        words.push(metric.group.word(&traj.deck_word[prev_len..len])?);
        prev_len = len;
    }
    x[3 * m] = ell;
    Ok((
        Plan {
            m,
            words,
            phase_point: start,
        },
        x,
    ))
}

fn finish(
    metric: &ConformalMetric,
    class: &GeodesicClass,
    shooter: &Shooter,
    x: &DVector<f64>,
    iterations: usize,
    history: Vec<f64>,
) -> Result<PeriodicOrbit, OrbitError> {
    let cfg = &shooter.cfg;
    let m = shooter.plan.m;
    let period = x[3 * m];
    let start = unpack(x, 0);
    let n = ((period * cfg.samples_per_unit).ceil() as usize).max(64);
    let (profile, traj) = curvature_along_periodic(metric, start, period, n, &cfg.tolerances)?;
    // Single-shot closure grows like e^{χT} from roundoff, so closure is
    // certified by the segment mismatch of the converged shooting system.
    let single_shot_defect = traj.end.distance(&start);
    let closure_defect = history.last().copied().unwrap_or(f64::INFINITY);
    let found = canonical_cyclic(&traj.deck_word);
    if found != canonical_cyclic(&class.word) {
        return Err(OrbitError::WrongDeckWord {
            expected: class.word.clone(),
            found,
        });
    }
    if closure_defect > cfg.closure_tol {
        return Err(OrbitError::ClosureDefect {
            word: class.word.clone(),
            defect: closure_defect,
        });
    }
    let ks: Vec<f64> = traj
        .samples
        .iter()
        .take(n + 1)
        .map(|s| s.curvature)
        .collect();
    let mean_curvature = simpson_mean(&ks, period / n as f64);
    Ok(PeriodicOrbit {
        class: class.clone(),
        period,
        start,
        closure_defect,
        single_shot_defect,
        deck_word: traj.deck_word,
        segments: m,
        newton_iterations: iterations,
        residual_history: history,
        mean_curvature,
        profile: Some(profile),
        exponent_report: None,
    })
}

/// Refine the closed geodesic of `class` for `metric`. Direct Newton from
/// the unperturbed axis first; on failure, continuation in `epsilon`.
pub fn refine_orbit(
    metric: &ConformalMetric,
    class: &GeodesicClass,
    cfg: &ShootingConfig,
) -> Result<PeriodicOrbit, OrbitError> {
    let (plan, x0) = seed(metric, class, cfg)?;
    let direct = Shooter {
        metric,
        plan,
        cfg: *cfg,
    };
    let mut history = match direct.newton(x0.clone()) {
        Ok((x, it, hist)) => return finish(metric, class, &direct, &x, it, hist),
        Err(h) => h,
    };
    if metric.is_unperturbed() || cfg.continuation_stages == 0 {
        return Err(OrbitError::NoConvergence {
            word: class.word.clone(),
            residuals: history,
        });
    }
    let mut x = x0;
    let mut total = 0;
    let stages = cfg.continuation_stages + 1;
    for k in 1..=stages {
        let eps = metric.epsilon() * k as f64 / stages as f64;
        let mk = metric.with_epsilon(eps);
        let (plan, _) = seed(&mk, class, cfg)?;
        let sh = Shooter {
            metric: &mk,
            plan,
            cfg: *cfg,
        };
        match sh.newton(x.clone()) {
            Ok((xn, it, hist)) => {
                x = xn;
                total += it;
                history.extend(hist);
                if k == stages {
                    return finish(metric, class, &sh, &x, total, history);
                }
            }
            Err(h) => {
                history.extend(h);
                return Err(OrbitError::NoConvergence {
                    word: class.word.clone(),
                    residuals: history,
                });
            }
        }
    }
    unreachable!()
}

/// Exponent report for a refined orbit (Riccati average plus Jacobi oracle).
pub fn orbit_exponent(
    orbit: &mut PeriodicOrbit,
    cfg: &LyapunovConfig,
) -> Result<LyapunovReport, OrbitError> {
    orbit_exponent_with_solution(orbit, cfg).map(|(r, _, _)| r)
}

/// Exponent report plus the periodic profile and unstable solution behind it.
pub fn orbit_exponent_with_solution(
    orbit: &mut PeriodicOrbit,
    cfg: &LyapunovConfig,
) -> Result<(LyapunovReport, CurvatureProfile, RiccatiSolution), OrbitError> {
    let profile = orbit
        .profile
        .as_ref()
        .expect("refined orbits carry a profile")
        .clone()
        .with_sampled_bounds(4096);
    let (report, sol) = lyapunov_with_solution(&profile, cfg)?;
    orbit.exponent_report = Some(report.clone());
    Ok((report, profile, sol))
}

pub fn orbit_csv(orbits: &[PeriodicOrbit]) -> String {
    let mut s = String::from("word,period,chi_plus,mean_K,gap,closure_defect,oracle_discrepancy\n");
    for o in orbits {
        let (chi, gap, disc) = o
            .exponent_report
            .as_ref()
            .map(|r| (r.chi_plus, r.gap, r.oracle_discrepancy))
            .unwrap_or((f64::NAN, f64::NAN, f64::NAN));
        s.push_str(&format!(
            "{},{:.12},{:.12},{:.12},{:.6e},{:.3e},{:.3e}\n",
            o.class.word, o.period, chi, o.mean_curvature, gap, o.closure_defect, disc
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::{enumerate_classes, FuchsianGroup};
    use crate::metric::{Bump, MetricSpec};

    fn metric(eps: f64) -> ConformalMetric {
        let spec = MetricSpec {
            bumps: vec![Bump {
                center: [0.25, 0.15],
                radius: 0.5,
                amplitude: 1.0,
            }],
            epsilon: eps,
            ..Default::default()
        };
        ConformalMetric::new(FuchsianGroup::schottky(0.6, 0.05).unwrap(), spec).unwrap()
    }

    fn class(m: &ConformalMetric, w: &str) -> GeodesicClass {
        GeodesicClass::from_word(&m.group, w).unwrap()
    }

    #[test]
    fn unperturbed_orbits_are_axes() {
        let m = metric(0.0);
        for c in enumerate_classes(&m.group, 2).unwrap() {
            let o = refine_orbit(&m, &c, &ShootingConfig::default()).unwrap();
            assert!(o.newton_iterations <= 2, "{}", c.word);
            assert!((o.period - c.length).abs() < 1e-8);
            assert!(o.closure_defect < 1e-8);
            assert!((o.mean_curvature + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn perturbed_period_moves_linearly() {
        let c = class(&metric(0.0), "a");
        let cfg = ShootingConfig::default();
        let p1 = refine_orbit(&metric(0.01), &c, &cfg).unwrap();
        let p2 = refine_orbit(&metric(0.02), &c, &cfg).unwrap();
        let (d1, d2) = (p1.period - c.length, p2.period - c.length);
        assert!(d1.abs() > 1e-6 && d1.abs() < 0.1);
        assert!((d2 / d1 - 2.0).abs() < 0.1, "{d1} {d2}");
        assert!(p2.closure_defect < 1e-8);
    }

    #[test]
    fn exponent_is_independent_of_segmentation() {
        let m = metric(0.02);
        let c = class(&m, "ab");
        let lc = LyapunovConfig::default();
        let mut o1 = refine_orbit(&m, &c, &ShootingConfig::default()).unwrap();
        let cfg2 = ShootingConfig {
            segments: Some(7),
            start_offset: 0.37,
            ..Default::default()
        };
        let mut o2 = refine_orbit(&m, &c, &cfg2).unwrap();
        let r1 = orbit_exponent(&mut o1, &lc).unwrap();
        let r2 = orbit_exponent(&mut o2, &lc).unwrap();
        assert!(
            (r1.chi_plus - r2.chi_plus).abs() < 1e-6,
            "{} {}",
            r1.chi_plus,
            r2.chi_plus
        );
        assert!((o1.period - o2.period).abs() < 1e-8);
    }

    #[test]
    fn bump_crossing_orbit_loses_exponent() {
        let m = metric(0.02);
        let mut o = refine_orbit(&m, &class(&m, "a"), &ShootingConfig::default()).unwrap();
        let r = orbit_exponent(&mut o, &LyapunovConfig::default()).unwrap();
        assert!(r.chi_plus < r.mean_curvature_bound);
        assert!(r.gap > 0.0);
        assert!(r.oracle_discrepancy < 1e-4);
        let csv = orbit_csv(&[o]);
        assert!(
            csv.starts_with("word,period,chi_plus,mean_K,gap,closure_defect,oracle_discrepancy\n")
        );
    }

    #[test]
    fn excessive_epsilon_fails_to_converge() {
        let m = metric(0.6);
        let cfg = ShootingConfig {
            continuation_stages: 0,
            max_newton: 4,
            ..Default::default()
        };
        let e = refine_orbit(&m, &class(&m, "a"), &cfg).unwrap_err();
        assert!(
            matches!(
                e,
                OrbitError::NoConvergence { .. } | OrbitError::WrongDeckWord { .. }
            ),
            "{e:?}"
        );
    }
}
