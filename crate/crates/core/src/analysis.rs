//! Rigidity and entropy experiments over an orbit census.
//!
//! Per-class and per-sample work runs as a parallel map (with the `parallel`
//! feature) and is merged in input order, so reports are reproducible
//! bit for bit regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::chains::{case1_from_solution, case2_from_solution, Case1Report, Case2Report};
use crate::geodesic::{flow, FlowConfig, PhasePoint};
use crate::hyperbolic::{census_growth, enumerate_classes, GeodesicClass, HyperbolicError, C64};
use crate::lyapunov::LyapunovConfig;
use crate::metric::{ConformalMetric, CurvatureBounds, MetricError};
use crate::orbits::{
    orbit_csv, orbit_exponent_with_solution, refine_orbit, PeriodicOrbit, ShootingConfig,
};
use crate::profile::CurvatureProfile;
use crate::riccati::{unstable_solution_with, StepControl};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("only {used} of {drawn} Monte Carlo draws produced a usable profile")]
    InsufficientSamples { used: usize, drawn: usize },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Hyperbolic(#[from] HyperbolicError),
}

/// A reported number with the tolerance it is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Measured {
    pub value: f64,
    pub tol: f64,
}

/// A statistical estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, R>(items: &[T], f: impl Fn(&T) -> R) -> Vec<R> {
    items.iter().map(f).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigidityConfig {
    pub max_word_length: usize,
    pub shooting: ShootingConfig,
    pub lyapunov: LyapunovConfig,
    pub grid_resolution: usize,
    /// Tolerance for spreads, gaps and the Ruelle sign check.
    pub tol: f64,
    /// Tolerance for the per-orbit trace chains.
    pub chain_tol: f64,
}

impl Default for RigidityConfig {
    fn default() -> Self {
        Self {
            max_word_length: 4,
            shooting: ShootingConfig::default(),
            lyapunov: LyapunovConfig::default(),
            grid_resolution: 96,
            tol: 1e-6,
            chain_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitRow {
    pub word: String,
    pub period: f64,
    pub chi_plus: f64,
    pub oracle_chi: f64,
    pub oracle_discrepancy: f64,
    pub mean_curvature: f64,
    pub mean_curvature_bound: f64,
    pub gap: f64,
    /// Range of the unstable solution over one period.
    pub u_min: f64,
    pub u_max: f64,
    /// Range of the curvature along the orbit.
    pub k_min: f64,
    pub k_max: f64,
    pub closure_defect: f64,
    pub newton_iterations: usize,
    pub case1: Case1Report,
    pub case2: Case2Report,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitFailure {
    pub word: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RigidityReport {
    pub epsilon: f64,
    pub bounds: CurvatureBounds,
    pub classes: usize,
    pub orbit_rows: Vec<OrbitRow>,
    /// `max - min` of `chi_plus` over refined orbits.
    pub exponent_spread: Measured,
    /// `c² - b²`.
    pub curvature_spread: Measured,
    pub per_orbit_gaps: Vec<f64>,
    pub min_gap: Measured,
    /// Every orbit has `chi_plus ≥ -tol`; orbit measures carry zero entropy.
    pub ruelle_holds: bool,
    pub case2_all_tight: bool,
    pub failures: Vec<OrbitFailure>,
    #[serde(skip)]
    pub orbits: Vec<PeriodicOrbit>,
}

impl RigidityReport {
    pub fn orbit_csv(&self) -> String {
        orbit_csv(&self.orbits)
    }

    pub fn row(&self, word: &str) -> Option<&OrbitRow> {
        self.orbit_rows.iter().find(|r| r.word == word)
    }
}

fn analyze_orbit(
    metric: &ConformalMetric,
    class: &GeodesicClass,
    bounds: &CurvatureBounds,
    cfg: &RigidityConfig,
) -> Result<(OrbitRow, PeriodicOrbit), String> {
    let mut orbit = refine_orbit(metric, class, &cfg.shooting).map_err(|e| e.to_string())?;
    let (rep, profile, sol) =
        orbit_exponent_with_solution(&mut orbit, &cfg.lyapunov).map_err(|e| e.to_string())?;
    let case1 = case1_from_solution(&profile, &sol, bounds.b, cfg.chain_tol);
    let case2 =
        case2_from_solution(&profile, &sol, bounds.c, cfg.chain_tol).map_err(|e| e.to_string())?;
    let (u_min, u_max) = sol.eigen_range();
    let ks: Vec<f64> = sol.times.iter().map(|&t| profile.scalar(t)).collect();
    let k_min = ks.iter().copied().fold(f64::INFINITY, f64::min);
    let k_max = ks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let row = OrbitRow {
        word: class.word.clone(),
        period: orbit.period,
        chi_plus: rep.chi_plus,
        oracle_chi: rep.oracle_chi,
        oracle_discrepancy: rep.oracle_discrepancy,
        mean_curvature: orbit.mean_curvature,
        mean_curvature_bound: rep.mean_curvature_bound,
        gap: rep.gap,
        u_min,
        u_max,
        k_min,
        k_max,
        closure_defect: orbit.closure_defect,
        newton_iterations: orbit.newton_iterations,
        case1,
        case2,
    };
    Ok((row, orbit))
}

/// Refine every census class up to `cfg.max_word_length`, compute exponents
/// and trace chains, and aggregate. Classes that fail to refine are logged in
/// `failures` rather than aborting the run.
pub fn rigidity_experiment(
    metric: &ConformalMetric,
    cfg: &RigidityConfig,
) -> Result<RigidityReport, AnalysisError> {
    let bounds = metric.curvature_bounds(cfg.grid_resolution)?;
    let classes = enumerate_classes(&metric.group, cfg.max_word_length)?;
    let results = par_map(&classes, |c| analyze_orbit(metric, c, &bounds, cfg));
    let mut rows = Vec::new();
    let mut orbits = Vec::new();
    let mut failures = Vec::new();
    for (class, r) in classes.iter().zip(results) {
        match r {
            Ok((row, orbit)) => {
                rows.push(row);
                orbits.push(orbit);
            }
            Err(error) => {
                log::warn!("class {}: {error}", class.word);
                failures.push(OrbitFailure {
                    word: class.word.clone(),
                    error,
                });
            }
        }
    }
    let chis = rows.iter().map(|r| r.chi_plus);
    let spread = if rows.is_empty() {
        0.0
    } else {
        chis.clone().fold(f64::NEG_INFINITY, f64::max) - chis.clone().fold(f64::INFINITY, f64::min)
    };
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(RigidityReport {
        epsilon: metric.epsilon(),
        bounds,
        classes: classes.len(),
        exponent_spread: Measured {
            value: spread,
            tol: cfg.tol,
        },
        curvature_spread: Measured {
            value: bounds.c * bounds.c - bounds.b * bounds.b,
            tol: 1e-3,
        },
        min_gap: Measured {
            value: if gaps.is_empty() { 0.0 } else { min_gap },
            tol: cfg.tol,
        },
        per_orbit_gaps: gaps,
        ruelle_holds: rows.iter().all(|r| r.chi_plus >= -cfg.tol),
        case2_all_tight: rows.iter().all(|r| r.case2.all_tight()),
        orbit_rows: rows,
        failures,
        orbits,
    })
}

/// Spreads along an epsilon ladder, in the order given.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpreadTrend {
    pub epsilons: Vec<f64>,
    pub spreads: Vec<f64>,
    /// Nondecreasing within `tol`.
    pub monotone: bool,
    /// Consecutive ratios `spread[i+1] / spread[i]` (NaN for a zero denominator).
    pub ratios: Vec<f64>,
    pub tol: f64,
}

pub fn spread_trend(reports: &[RigidityReport], tol: f64) -> SpreadTrend {
    let spreads: Vec<f64> = reports.iter().map(|r| r.exponent_spread.value).collect();
    let ratios = spreads
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { f64::NAN })
        .collect();
    SpreadTrend {
        epsilons: reports.iter().map(|r| r.epsilon).collect(),
        monotone: spreads.windows(2).all(|w| w[1] >= w[0] - tol),
        spreads,
        ratios,
        tol,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Extremal {
    /// `α = b`: the exponent sits on the lower pinching bound.
    Lower,
    /// `α = c`: the exponent sits on the upper pinching bound.
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremalRow {
    pub word: String,
    /// `chi_plus - α`.
    pub slack: f64,
    pub hypothesis_holds: bool,
    /// `sup |K + α²|` along the orbit, when the hypothesis holds.
    pub curvature_deviation: Option<f64>,
    /// `sup |u - α|`, when the hypothesis holds.
    pub solution_deviation: Option<f64>,
    /// Hypothesis holds and both deviations are within tolerance.
    pub forced: bool,
    /// The unstable solution leaves the pinching interval.
    pub pinching_breach: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremalReport {
    pub kind: Extremal,
    pub alpha: f64,
    pub hypothesis_tol: f64,
    pub forcing_tol: f64,
    pub rows: Vec<ExtremalRow>,
    pub passing: usize,
    /// A passing orbit whose curvature is not forced constant contradicts
    /// the forcing argument; a breach signals a solver fault.
    pub consistent: bool,
}

/// Tolerances for the extremal check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalTolerances {
    pub hypothesis: f64,
    pub solution: f64,
    pub curvature: f64,
}

impl Default for ExtremalTolerances {
    fn default() -> Self {
        Self {
            hypothesis: 1e-6,
            solution: 1e-6,
            curvature: 1e-5,
        }
    }
}

/// Extremal classification of one orbit (or profile) from its summary numbers.
#[allow(clippy::too_many_arguments)]
pub fn classify_extremal(
    word: &str,
    chi_plus: f64,
    u_range: (f64, f64),
    k_range: (f64, f64),
    alpha: f64,
    kind: Extremal,
    tol: &ExtremalTolerances,
) -> ExtremalRow {
    let slack = chi_plus - alpha;
    let hypothesis_holds = slack.abs() < tol.hypothesis;
    let a2 = alpha * alpha;
    let curvature_deviation =
        hypothesis_holds.then(|| (k_range.0 + a2).abs().max((k_range.1 + a2).abs()));
    let solution_deviation =
        hypothesis_holds.then(|| (u_range.0 - alpha).abs().max((u_range.1 - alpha).abs()));
    let pinching_breach = match kind {
        Extremal::Lower => u_range.0 < alpha - tol.solution,
        Extremal::Upper => u_range.1 > alpha + tol.solution,
    };
    let forced = hypothesis_holds
        && !pinching_breach
        && solution_deviation.is_some_and(|d| d <= tol.solution)
        && curvature_deviation.is_some_and(|d| d <= tol.curvature);
    ExtremalRow {
        word: word.to_string(),
        slack,
        hypothesis_holds,
        curvature_deviation,
        solution_deviation,
        forced,
        pinching_breach,
    }
}

fn extremal_report(
    kind: Extremal,
    alpha: f64,
    tol: &ExtremalTolerances,
    rows: Vec<ExtremalRow>,
) -> ExtremalReport {
    ExtremalReport {
        kind,
        alpha,
        hypothesis_tol: tol.hypothesis,
        forcing_tol: tol.curvature,
        passing: rows.iter().filter(|r| r.hypothesis_holds).count(),
        consistent: rows
            .iter()
            .all(|r| !r.pinching_breach && (!r.hypothesis_holds || r.forced)),
        rows,
    }
}

/// Test every orbit of `report` against the extremal hypothesis `chi_plus = α`.
pub fn pinched_extremal_check(
    report: &RigidityReport,
    kind: Extremal,
    tol: &ExtremalTolerances,
) -> ExtremalReport {
    let alpha = match kind {
        Extremal::Lower => report.bounds.b,
        Extremal::Upper => report.bounds.c,
    };
    let rows = report
        .orbit_rows
        .iter()
        .map(|r| {
            classify_extremal(
                &r.word,
                r.chi_plus,
                (r.u_min, r.u_max),
                (r.k_min, r.k_max),
                alpha,
                kind,
                tol,
            )
        })
        .collect();
    extremal_report(kind, alpha, tol, rows)
}

/// Extremal check on a single periodic scalar profile.
pub fn profile_extremal_check(
    profile: &CurvatureProfile,
    alpha: f64,
    kind: Extremal,
    lyapunov: &LyapunovConfig,
    tol: &ExtremalTolerances,
) -> Result<ExtremalReport, crate::riccati::RiccatiError> {
    let (rep, sol) = crate::lyapunov::lyapunov_with_solution(profile, lyapunov)?;
    let ks: Vec<f64> = sol.times.iter().map(|&t| profile.scalar(t)).collect();
    let k_range = (
        ks.iter().copied().fold(f64::INFINITY, f64::min),
        ks.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let row = classify_extremal(
        "profile",
        rep.chi_plus,
        sol.eigen_range(),
        k_range,
        alpha,
        kind,
        tol,
    );
    Ok(extremal_report(kind, alpha, tol, vec![row]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyConfig {
    pub mc_samples: usize,
    /// Birkhoff averaging window.
    pub horizon: f64,
    /// Discarded lead-in that lets the Riccati solution settle on the unstable branch.
    pub settle: f64,
    pub max_word_length: usize,
    pub seed: u64,
    pub flow: FlowConfig,
    pub step: StepControl,
    /// Minimum fraction of usable draws.
    pub min_fraction: f64,
}

impl Default for EntropyConfig {
    fn default() -> Self {
        Self {
            mc_samples: 200,
            horizon: 50.0,
            settle: 20.0,
            max_word_length: 6,
            seed: 0,
            flow: FlowConfig::default(),
            step: StepControl::default(),
            min_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub epsilon: f64,
    /// Monte Carlo mean of Birkhoff averages of the unstable Riccati solution.
    pub liouville_entropy: Estimate,
    pub samples_drawn: usize,
    pub samples_used: usize,
    /// Draws whose forward geodesic left the core before the end of the window.
    pub samples_escaped: usize,
    /// Mean time before the forward geodesic left the core (the full
    /// settle plus averaging span for draws that never escaped).
    pub core_time: Estimate,
    /// Growth exponent of the primitive length spectrum; the error is the
    /// change in the fit when the census is cut one word length shorter.
    pub orbit_growth_exponent: Option<Estimate>,
    pub growth_classes_used: usize,
    pub growth_window: [f64; 2],
    /// `|δ - h_L| / h_L`.
    pub relative_gap: Option<f64>,
    pub infinite_area: bool,
    pub delta_below_liouville: bool,
    pub caveat: Option<String>,
}

/// Uniform point of the fundamental domain in the disk chart, uniform angle.
fn draw_start(metric: &ConformalMetric, rng: &mut ChaCha8Rng) -> PhasePoint {
    loop {
        let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        if z.norm() < 0.995 && metric.group.in_domain(z) {
            return PhasePoint::new(z, angle);
        }
    }
}

struct Draw {
    mean_u: f64,
    core_time: f64,
    escaped: bool,
}

/// After a certified escape the forward geodesic misses every bump support,
/// so the curvature is exactly the base value for the rest of the window.
fn birkhoff_draw(
    metric: &ConformalMetric,
    start: PhasePoint,
    cfg: &EntropyConfig,
) -> Result<Draw, String> {
    let total = cfg.settle + cfg.horizon;
    let traj = flow(metric, start, total, &cfg.flow).map_err(|e| e.to_string())?;
    let mut times: Vec<f64> = Vec::with_capacity(traj.samples.len());
    let mut values = Vec::with_capacity(traj.samples.len());
    for s in &traj.samples {
        if times.last().is_some_and(|t| s.t - t < 1e-12) {
            continue;
        }
        times.push(s.t);
        values.push(s.curvature);
    }
    let escaped_at = traj.escaped_at.filter(|t| *t < total);
    if escaped_at.is_some() {
        let k0 = metric.base_curvature();
        let mut t = *times.last().unwrap();
        while t < total {
            t = (t + cfg.flow.sample_dt).min(total);
            times.push(t);
            values.push(k0);
        }
    }
    let profile = CurvatureProfile::sampled_finite(times, values).map_err(|e| e.to_string())?;
    let sol = unstable_solution_with(&profile, cfg.settle, 1e-10, &cfg.step)
        .map_err(|e| e.to_string())?;
    Ok(Draw {
        mean_u: sol.time_average(|m| m[(0, 0)]),
        core_time: escaped_at.unwrap_or(total),
        escaped: escaped_at.is_some(),
    })
}

fn estimate(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Estimate {
        value: mean,
        stderr: (var / n).sqrt(),
    }
}

/// Liouville-side entropy by Monte Carlo Birkhoff averages of the unstable
/// Riccati solution, next to the census growth exponent.
pub fn entropy_experiment(
    metric: &ConformalMetric,
    cfg: &EntropyConfig,
) -> Result<EntropyReport, AnalysisError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let starts: Vec<PhasePoint> = (0..cfg.mc_samples)
        .map(|_| draw_start(metric, &mut rng))
        .collect();
    let draws = par_map(&starts, |s| birkhoff_draw(metric, *s, cfg));
    let mut used = Vec::new();
    for (i, d) in draws.into_iter().enumerate() {
        match d {
            Ok(d) => used.push(d),
            Err(e) => log::warn!("draw {i}: {e}"),
        }
    }
    let needed = (cfg.min_fraction * cfg.mc_samples as f64).ceil() as usize;
    if used.is_empty() || used.len() < needed {
        return Err(AnalysisError::InsufficientSamples {
            used: used.len(),
            drawn: cfg.mc_samples,
        });
    }
    let liouville = estimate(&used.iter().map(|d| d.mean_u).collect::<Vec<_>>());
    let core = estimate(&used.iter().map(|d| d.core_time).collect::<Vec<_>>());

    let group = &metric.group;
    let l = cfg.max_word_length;
    let classes = enumerate_classes(group, l)?;
    let fit = census_growth(group, &classes, l);
    let shorter = (l > 1)
        .then(|| {
            let cut: Vec<GeodesicClass> = classes
                .iter()
                .filter(|c| c.word.len() < l)
                .cloned()
                .collect();
            census_growth(group, &cut, l - 1)
        })
        .flatten();
    let growth = fit.as_ref().map(|f| Estimate {
        value: f.delta,
        stderr: shorter
            .as_ref()
            .map_or(f64::NAN, |s| (s.delta - f.delta).abs()),
    });
    let infinite_area = group.is_schottky();
    Ok(EntropyReport {
        epsilon: metric.epsilon(),
        liouville_entropy: liouville,
        samples_drawn: cfg.mc_samples,
        samples_used: used.len(),
        samples_escaped: used.iter().filter(|d| d.escaped).count(),
        core_time: core,
        delta_below_liouville: growth.is_some_and(|g| g.value < liouville.value),
        relative_gap: growth.map(|g| (g.value - liouville.value).abs() / liouville.value),
        orbit_growth_exponent: growth,
        growth_classes_used: fit.as_ref().map_or(0, |f| f.classes_used),
        growth_window: fit.as_ref().map_or([0.0, 0.0], |f| [f.t_min, f.t_max]),
        infinite_area,
        caveat: infinite_area.then(|| {
            "infinite-area quotient: the growth exponent is the limit-set dimension and is not expected to \
             equal the Liouville-side value; escaped draws are completed with the base curvature"
                .to_string()
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::FuchsianGroup;
    use crate::metric::{Bump, MetricSpec};

    fn metric(eps: f64) -> ConformalMetric {
        let spec = MetricSpec {
            bumps: vec![Bump {
                center: [0.3, 0.3],
                radius: 0.5,
                amplitude: 0.25,
            }],
            epsilon: eps,
            ..Default::default()
        };
        ConformalMetric::new(FuchsianGroup::schottky(0.6, 0.05).unwrap(), spec).unwrap()
    }

    fn short() -> RigidityConfig {
        RigidityConfig {
            max_word_length: 2,
            ..Default::default()
        }
    }

    #[test]
    fn unperturbed_census_is_rigid() {
        let r = rigidity_experiment(&metric(0.0), &short()).unwrap();
        assert!(r.failures.is_empty(), "{:?}", r.failures);
        assert_eq!(r.orbit_rows.len(), r.classes);
        assert!(r.exponent_spread.value <= 1e-6);
        assert!(r.per_orbit_gaps.iter().all(|g| g.abs() <= 1e-6));
        assert!(r.case2_all_tight);
        let ext = pinched_extremal_check(&r, Extremal::Lower, &ExtremalTolerances::default());
        assert_eq!(ext.passing, r.orbit_rows.len());
        assert!(ext.consistent);
        assert!(ext
            .rows
            .iter()
            .all(|x| x.curvature_deviation.unwrap() <= 1e-8));
    }

    #[test]
    fn perturbation_splits_exponents() {
        let r = rigidity_experiment(&metric(0.02), &short()).unwrap();
        assert!(r.failures.is_empty(), "{:?}", r.failures);
        assert!(r.exponent_spread.value > 1e-4);
        let a = r.row("A").unwrap();
        assert!((a.chi_plus - 1.0).abs() < 1e-6);
        assert!(r.orbit_rows.iter().any(|x| x.chi_plus < 1.0 - 1e-4));
        assert!(r.orbit_rows.iter().all(|x| x.gap >= -1e-6));
        for x in &r.orbit_rows {
            assert!(
                x.u_min >= r.bounds.b - 1e-6 && x.u_max <= r.bounds.c + 1e-6,
                "{}",
                x.word
            );
        }
        let ext = pinched_extremal_check(&r, Extremal::Lower, &ExtremalTolerances::default());
        assert_eq!(ext.passing, 0);
        assert!(ext.consistent);
    }

    #[test]
    fn dipping_solution_is_a_breach() {
        let row = classify_extremal(
            "x",
            1.0,
            (0.99, 1.01),
            (-1.0, -1.0),
            1.0,
            Extremal::Lower,
            &Default::default(),
        );
        assert!(row.hypothesis_holds);
        assert!(row.pinching_breach);
        assert!(!row.forced);
    }

    #[test]
    fn entropy_constant_curvature() {
        let cfg = EntropyConfig {
            mc_samples: 24,
            horizon: 20.0,
            settle: 10.0,
            max_word_length: 5,
            ..Default::default()
        };
        let r = entropy_experiment(&metric(0.0), &cfg).unwrap();
        assert_eq!(r.samples_used, 24);
        assert!((r.liouville_entropy.value - 1.0).abs() < 1e-6);
        let d = r.orbit_growth_exponent.unwrap();
        assert!(d.value > 0.2 && d.value < 1.0);
        assert!(r.delta_below_liouville && r.caveat.is_some());
    }

    #[test]
    fn no_samples_is_an_error() {
        let cfg = EntropyConfig {
            mc_samples: 0,
            ..Default::default()
        };
        assert!(matches!(
            entropy_experiment(&metric(0.0), &cfg),
            Err(AnalysisError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn entropy_is_seed_deterministic() {
        let cfg = EntropyConfig {
            mc_samples: 8,
            horizon: 10.0,
            settle: 5.0,
            max_word_length: 3,
            seed: 7,
            ..Default::default()
        };
        let m = metric(0.02);
        let a = entropy_experiment(&m, &cfg).unwrap();
        let b = entropy_experiment(&m, &cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
