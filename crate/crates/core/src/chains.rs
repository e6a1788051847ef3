//! Trace identities of the pinched-curvature rigidity argument, evaluated over
//! one period of the unstable Riccati solution.
//!
//! Lower pinching (`α = b`): `tr U ≥ (n-1)b` pointwise, so a period mean equal
//! to the floor forces `tr U ≡ (n-1)b` and hence constant curvature `-b²`.
//!
//! Upper pinching (`α = c`): the chain
//! `A ≤ B ≤ C = D ≤ (n-1)c` with
//! `A = (1/τ)∫tr U`, `B = √((1/τ)∫(tr U)²)`, `C = √(((n-1)/τ)∫tr U²)`,
//! `D = √(-((n-1)/τ)∫tr R)`, where `C = D` is the period-integrated Riccati
//! equation (the `∫ tr U'` term vanishes by periodicity).

use serde::Serialize;
use thiserror::Error;

use crate::lyapunov::LyapunovConfig;
use crate::profile::CurvatureProfile;
use crate::quadrature::simpson_mean;
use crate::riccati::{
    default_settle_horizon, unstable_solution_with, RiccatiError, RiccatiSolution,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("chain link `{link}` violated by {magnitude:e}")]
    ChainViolation { link: String, magnitude: f64 },
    #[error(transparent)]
    Riccati(#[from] RiccatiError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Case1Report {
    pub b: f64,
    pub mean_trace: f64,
    /// `(n-1)·b`.
    pub floor: f64,
    /// `sup_t (tr U(t) - (n-1)b)`.
    pub pointwise_trace_excess: f64,
    /// `inf_t (tr U(t) - (n-1)b)`; negative values breach the pinching bound.
    pub min_trace_excess: f64,
    /// Whether `mean_trace - floor < tol` (the lower-extremal hypothesis).
    pub hypothesis_holds: bool,
    /// `sup_t |tr R(t)/(n-1) + b²|`, only when the hypothesis holds.
    pub ricci_deviation: Option<f64>,
    /// Hypothesis holds and both pointwise quantities vanish within tolerance.
    pub forced_constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainLink {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs` for inequalities, `|rhs - lhs|` for the identity.
    pub slack: f64,
    pub tight: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Case2Report {
    pub c: f64,
    pub mean_trace: f64,
    pub rms_trace: f64,
    pub trace_square_root: f64,
    pub curvature_root: f64,
    /// `(n-1)·c`.
    pub ceiling: f64,
    /// `(1/τ)∫tr U² + (1/τ)∫tr R`; zero for a periodic solution.
    pub telescoping_defect: f64,
    pub links: Vec<ChainLink>,
}

impl Case2Report {
    pub fn all_tight(&self) -> bool {
        self.links.iter().all(|l| l.tight)
    }
}

fn unstable(
    profile: &CurvatureProfile,
    cfg: &LyapunovConfig,
) -> Result<RiccatiSolution, RiccatiError> {
    if profile.period().is_none() {
        return Err(RiccatiError::InvalidInput(
            "trace chains need a periodic profile".into(),
        ));
    }
    let settle = cfg
        .settle_horizon
        .unwrap_or_else(|| default_settle_horizon(profile));
    unstable_solution_with(profile, settle, cfg.periodicity_tol, &cfg.step)
}

fn spacing(sol: &RiccatiSolution) -> f64 {
    (sol.times.last().unwrap() - sol.times[0]) / (sol.times.len() - 1) as f64
}

pub fn trace_chain_case1(profile: &CurvatureProfile, b: f64) -> Result<Case1Report, RiccatiError> {
    let sol = unstable(profile, &LyapunovConfig::default())?;
    Ok(case1_from_solution(profile, &sol, b, 1e-8))
}

/// Case-1 quantities from a converged unstable solution.
pub fn case1_from_solution(
    profile: &CurvatureProfile,
    sol: &RiccatiSolution,
    b: f64,
    tol: f64,
) -> Case1Report {
    let n = profile.dim() as f64;
    let floor = n * b;
    let traces = sol.traces();
    let mean_trace = simpson_mean(&traces, spacing(sol));
    let excess = traces.iter().map(|t| t - floor);
    let pointwise_trace_excess = excess.clone().fold(f64::NEG_INFINITY, f64::max);
    let min_trace_excess = excess.fold(f64::INFINITY, f64::min);
    let hypothesis_holds = mean_trace - floor < tol;
    let ricci_deviation = hypothesis_holds.then(|| {
        sol.times
            .iter()
            .map(|&t| (profile.evaluate(t).trace() / n + b * b).abs())
            .fold(0.0, f64::max)
    });
    let forced_constant = hypothesis_holds
        && pointwise_trace_excess.abs() < tol.max(1e-6)
        && ricci_deviation.is_some_and(|d| d < tol.max(1e-5));
    Case1Report {
        b,
        mean_trace,
        floor,
        pointwise_trace_excess,
        min_trace_excess,
        hypothesis_holds,
        ricci_deviation,
        forced_constant,
    }
}

pub fn trace_chain_case2(profile: &CurvatureProfile, c: f64) -> Result<Case2Report, ChainError> {
    let sol = unstable(profile, &LyapunovConfig::default())?;
    case2_from_solution(profile, &sol, c, 1e-8)
}

/// Case-2 chain from a converged unstable solution. Links are checked to
/// `tol`; a link failing by more is a [`ChainError::ChainViolation`].
pub fn case2_from_solution(
    profile: &CurvatureProfile,
    sol: &RiccatiSolution,
    c: f64,
    tol: f64,
) -> Result<Case2Report, ChainError> {
    let n = profile.dim() as f64;
    let h = spacing(sol);
    let traces = sol.traces();
    let trace_sq: Vec<f64> = traces.iter().map(|t| t * t).collect();
    let tr_u2: Vec<f64> = sol.values.iter().map(|m| (m * m).trace()).collect();
    let tr_r: Vec<f64> = sol
        .times
        .iter()
        .map(|&t| profile.evaluate(t).trace())
        .collect();
    let a = simpson_mean(&traces, h);
    let mean_tr_u2 = simpson_mean(&tr_u2, h);
    let mean_tr_r = simpson_mean(&tr_r, h);
    let b = simpson_mean(&trace_sq, h).max(0.0).sqrt();
    let cc = (n * mean_tr_u2).max(0.0).sqrt();
    let d = (-n * mean_tr_r).max(0.0).sqrt();
    let ceiling = n * c;
    let le = |name: &str, lhs: f64, rhs: f64| ChainLink {
        name: name.to_string(),
        lhs,
        rhs,
        slack: rhs - lhs,
        tight: (rhs - lhs).abs() <= tol,
    };
    let links = vec![
        le("mean_trace <= rms_trace", a, b),
        le("rms_trace <= trace_square_root", b, cc),
        ChainLink {
            name: "trace_square_root == curvature_root".into(),
            lhs: cc,
            rhs: d,
            slack: (d - cc).abs(),
            tight: (d - cc).abs() <= tol,
        },
        le("curvature_root <= ceiling", d, ceiling),
    ];
    for l in &links {
        let violated = if l.name.contains("==") {
            l.slack > tol
        } else {
            l.slack < -tol
        };
        if violated {
            return Err(ChainError::ChainViolation {
                link: l.name.clone(),
                magnitude: l.slack.abs(),
            });
        }
    }
    Ok(Case2Report {
        c,
        mean_trace: a,
        rms_trace: b,
        trace_square_root: cc,
        curvature_root: d,
        ceiling,
        telescoping_defect: mean_tr_u2 + mean_tr_r,
        links,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINUSOID_CHI: f64 = 0.998_561_164_983_69;

    fn sinusoid() -> CurvatureProfile {
        CurvatureProfile::fourier(-1.0, vec![], vec![-0.5], 1.0)
            .unwrap()
            .with_sampled_bounds(2001)
    }

    #[test]
    fn case1_identity_profile_is_forced() {
        let p = CurvatureProfile::diagonal(&[-1.0, -1.0])
            .with_bounds(1.0, 1.0)
            .unwrap();
        let r = trace_chain_case1(&p, 1.0).unwrap();
        assert!((r.mean_trace - 2.0).abs() < 1e-12);
        assert!(r.pointwise_trace_excess.abs() < 1e-12);
        assert!(r.ricci_deviation.unwrap() < 1e-12);
        assert!(r.forced_constant);
    }

    #[test]
    fn case1_hypothesis_fails_for_unequal_directions() {
        let p = CurvatureProfile::diagonal(&[-1.0, -4.0])
            .with_bounds(1.0, 2.0)
            .unwrap();
        let r = trace_chain_case1(&p, 1.0).unwrap();
        assert!((r.mean_trace - 3.0).abs() < 1e-11);
        assert!(!r.hypothesis_holds);
        assert_eq!(r.ricci_deviation, None);
    }

    #[test]
    fn case1_on_sinusoid_has_positive_excess() {
        let b = 0.5f64.sqrt();
        let r = trace_chain_case1(&sinusoid(), b).unwrap();
        assert!((r.mean_trace - SINUSOID_CHI).abs() < 1e-9);
        assert!(r.mean_trace > b);
        assert!(r.pointwise_trace_excess > 0.0 && r.min_trace_excess > 0.0);
        assert!(!r.hypothesis_holds);
    }

    #[test]
    fn case2_identity_chain_is_tight() {
        let p = CurvatureProfile::diagonal(&[-1.0, -1.0])
            .with_bounds(1.0, 1.0)
            .unwrap();
        let r = trace_chain_case2(&p, 1.0).unwrap();
        for v in [
            r.mean_trace,
            r.rms_trace,
            r.trace_square_root,
            r.curvature_root,
            r.ceiling,
        ] {
            assert!((v - 2.0).abs() < 1e-10);
        }
        assert!(r.all_tight());
    }

    #[test]
    fn case2_unequal_directions() {
        let p = CurvatureProfile::diagonal(&[-1.0, -4.0])
            .with_bounds(1.0, 2.0)
            .unwrap();
        let r = trace_chain_case2(&p, 2.0).unwrap();
        assert!((r.mean_trace - 3.0).abs() < 1e-10);
        assert!((r.rms_trace - 3.0).abs() < 1e-10);
        assert!((r.trace_square_root - 10f64.sqrt()).abs() < 1e-10);
        assert!((r.curvature_root - 10f64.sqrt()).abs() < 1e-10);
        assert_eq!(r.ceiling, 4.0);
        assert!(r.links[0].tight && !r.links[1].tight && r.links[2].tight && !r.links[3].tight);
    }

    #[test]
    fn case2_on_sinusoid() {
        let c = 1.5f64.sqrt();
        let r = trace_chain_case2(&sinusoid(), c).unwrap();
        assert!(r.mean_trace < r.rms_trace - 1e-4);
        // scalar mode: (tr U)² = tr U², and mean u² = -mean K = 1
        assert!((r.rms_trace - r.trace_square_root).abs() < 1e-12);
        assert!((r.trace_square_root - 1.0).abs() < 1e-8);
        assert!(r.telescoping_defect.abs() < 1e-8);
        assert!(r.curvature_root < r.ceiling);
    }

    #[test]
    fn too_small_ceiling_is_a_violation() {
        let p = CurvatureProfile::diagonal(&[-1.0, -4.0])
            .with_bounds(1.0, 2.0)
            .unwrap();
        let e = trace_chain_case2(&p, 1.0).unwrap_err();
        assert!(
            matches!(e, ChainError::ChainViolation { ref link, .. } if link.contains("ceiling"))
        );
    }
}
