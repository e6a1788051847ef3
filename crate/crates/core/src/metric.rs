//! Group-invariant conformal perturbations `e^{2φ}·g_hyp` of a constant
//! curvature metric on the disk, with closed-form curvature.
//!
//! Bumps are radial in the hyperbolic distance `d` to their center and are
//! written in the variable `u = cosh d - 1`, in which
//! `Δ_hyp F(u) = (u² + 2u) F'' + 2(1 + u) F'` exactly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hyperbolic::{
    geodesic_foot, hyperbolic_distance, FuchsianGroup, HyperbolicError, MobiusTransform, C64,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("curvature is non-negative ({curvature:e}) at ({x}, {y})")]
    PositiveCurvature { x: f64, y: f64, curvature: f64 },
    #[error("invalid metric: {0}")]
    Invalid(String),
    #[error(transparent)]
    Hyperbolic(#[from] HyperbolicError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BumpProfile {
    /// `(1 - s)³`, C².
    #[default]
    Poly,
    /// `exp(1 - 1/(1 - s))`, C^∞.
    Smooth,
}

impl BumpProfile {
    /// Value and first two derivatives in `s ∈ [0, 1)`; zero beyond.
    fn eval(self, s: f64) -> (f64, f64, f64) {
        if s >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let w = 1.0 - s;
        match self {
            BumpProfile::Poly => (w * w * w, -3.0 * w * w, 6.0 * w),
            BumpProfile::Smooth => {
                let g = (1.0 - 1.0 / w).exp();
                let w2 = w * w;
                (g, -g / w2, g * (1.0 / (w2 * w2) - 2.0 / (w2 * w)))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    /// Disk coordinates `[x, y]`, inside the fundamental domain.
    pub center: [f64; 2],
    /// Hyperbolic support radius.
    pub radius: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn center(&self) -> C64 {
        C64::new(self.center[0], self.center[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    #[serde(default = "default_base_curvature")]
    pub base_curvature: f64,
    #[serde(default)]
    pub bumps: Vec<Bump>,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub profile: BumpProfile,
}

fn default_base_curvature() -> f64 {
    -1.0
}

impl Default for MetricSpec {
    fn default() -> Self {
        Self {
            base_curvature: -1.0,
            bumps: Vec::new(),
            epsilon: 0.0,
            profile: BumpProfile::Poly,
        }
    }
}

/// Word length of the translates checked by the support constraint.
const SAFETY_WORD_LENGTH: usize = 3;

#[derive(Debug, Clone)]
struct PlacedBump {
    bump: Bump,
    /// Translates of the center whose support can meet the fundamental domain.
    centers: Vec<C64>,
    u_radius: f64,
}

/// `(φ, ∇φ, Δ_flat φ)` with the gradient packed as `φ_x + i φ_y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalFactor {
    pub phi: f64,
    pub grad: C64,
    pub laplacian: f64,
}

#[derive(Debug, Clone)]
pub struct ConformalMetric {
    pub group: FuchsianGroup,
    pub spec: MetricSpec,
    placed: Vec<PlacedBump>,
}

/// `u = cosh d(z, c) - 1` with its flat gradient.
fn cosh_distance(z: C64, c: C64) -> (f64, C64) {
    let p = 1.0 - z.norm_sqr();
    let q = 1.0 - c.norm_sqr();
    let dz = z - c;
    let n = dz.norm_sqr();
    let u = 2.0 * n / (p * q);
    let grad = (2.0 / q) * (2.0 * dz / p + 2.0 * n * z / (p * p));
    (u, grad)
}

fn distance_to_side(z: C64, ends: (C64, C64)) -> f64 {
    // move z to the origin and measure to the foot of the image geodesic
    let m = |w: C64| (w - z) / (1.0 - z.conj() * w);
    hyperbolic_distance(C64::new(0.0, 0.0), geodesic_foot(m(ends.0), m(ends.1)))
}

fn all_words(group: &FuchsianGroup, max_len: usize) -> Vec<String> {
    let mut words = vec![String::new()];
    let mut frontier = vec![String::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for c in group.letters() {
                if w.ends_with(crate::hyperbolic::invert_letter(c)) {
                    continue;
                }
                next.push(format!("{w}{c}"));
            }
        }
        words.extend(next.iter().cloned());
        frontier = next;
    }
    words
}

impl ConformalMetric {
    pub fn new(group: FuchsianGroup, spec: MetricSpec) -> Result<Self, MetricError> {
        if !(spec.base_curvature < 0.0) {
            return Err(MetricError::Invalid(format!(
                "base_curvature {} must be negative",
                spec.base_curvature
            )));
        }
        if !spec.epsilon.is_finite() {
            return Err(MetricError::Invalid("epsilon must be finite".into()));
        }
        let words = all_words(&group, SAFETY_WORD_LENGTH);
        let transforms: Vec<MobiusTransform> = words
            .iter()
            .map(|w| group.word(w))
            .collect::<Result<_, _>>()?;
        let mut placed = Vec::new();
        for (k, bump) in spec.bumps.iter().enumerate() {
            let c = bump.center();
            if !(bump.radius > 0.0) || !bump.amplitude.is_finite() {
                return Err(MetricError::Invalid(format!(
                    "bump {k}: radius must be positive, amplitude finite"
                )));
            }
            if !group.in_domain(c) {
                return Err(MetricError::Invalid(format!(
                    "bump {k}: center lies outside the fundamental domain"
                )));
            }
            let min_sep = transforms[1..]
                .iter()
                .map(|g| hyperbolic_distance(c, g.apply(c)))
                .fold(f64::INFINITY, f64::min);
            if bump.radius >= 0.5 * min_sep {
                return Err(MetricError::Invalid(format!(
                    "bump {k}: radius {} violates the support constraint (half translate distance {:.6})",
                    bump.radius,
                    0.5 * min_sep
                )));
            }
            let mut centers = Vec::new();
            for g in &transforms {
                let gc = g.apply(c);
                let gap = group
                    .sides
                    .iter()
                    .filter(|s| s.excess(gc) < 0.0)
                    .map(|s| distance_to_side(gc, s.endpoints()))
                    .fold(0.0, f64::max);
                if gap < bump.radius {
                    centers.push(gc);
                }
            }
            placed.push(PlacedBump {
                bump: *bump,
                centers,
                u_radius: bump.radius.cosh() - 1.0,
            });
        }
        Ok(Self {
            group,
            spec,
            placed,
        })
    }

    /// Same metric with a different global amplitude.
    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        let mut m = self.clone();
        m.spec.epsilon = epsilon;
        m
    }

    pub fn epsilon(&self) -> f64 {
        self.spec.epsilon
    }

    pub fn base_curvature(&self) -> f64 {
        self.spec.base_curvature
    }

    /// Whether the perturbation vanishes identically.
    pub fn is_unperturbed(&self) -> bool {
        self.spec.epsilon == 0.0 || self.spec.bumps.iter().all(|b| b.amplitude == 0.0)
    }

    /// Bump supports `(center, hyperbolic radius)` near the fundamental domain;
    /// empty when the perturbation vanishes.
    pub fn supports(&self) -> Vec<(C64, f64)> {
        if self.is_unperturbed() {
            return Vec::new();
        }
        self.placed
            .iter()
            .flat_map(|p| p.centers.iter().map(move |&c| (c, p.bump.radius)))
            .collect()
    }

    fn factor_in_domain(&self, w: C64) -> ConformalFactor {
        let mut out = ConformalFactor {
            phi: 0.0,
            grad: C64::new(0.0, 0.0),
            laplacian: 0.0,
        };
        if self.is_unperturbed() {
            return out;
        }
        let lam = 2.0 / (1.0 - w.norm_sqr());
        for p in &self.placed {
            let scale = self.spec.epsilon * p.bump.amplitude;
            for &c in &p.centers {
                let (u, gu) = cosh_distance(w, c);
                if u >= p.u_radius {
                    continue;
                }
                let (g, g1, g2) = self.spec.profile.eval(u / p.u_radius);
                let (f1, f2) = (g1 / p.u_radius, g2 / (p.u_radius * p.u_radius));
                out.phi += scale * g;
                out.grad += scale * f1 * gu;
                out.laplacian +=
                    scale * lam * lam * ((u * u + 2.0 * u) * f2 + 2.0 * (1.0 + u) * f1);
            }
        }
        out
    }

    /// Conformal factor at any chart point, via the fundamental domain.
    pub fn conformal_factor(&self, z: C64) -> Result<ConformalFactor, MetricError> {
        if self.is_unperturbed() {
            return Ok(self.factor_in_domain(z));
        }
        let proj = self.group.fundamental_domain_project(z)?;
        let f = self.factor_in_domain(proj.point);
        if proj.word.is_empty() {
            return Ok(f);
        }
        let m = proj.deck.derivative(z);
        Ok(ConformalFactor {
            phi: f.phi,
            grad: m.conj() * f.grad,
            laplacian: m.norm_sqr() * f.laplacian,
        })
    }

    /// `K = -e^{-2σ} Δσ` with `σ = φ + log(2/(a(1-|z|²)))`, `K₀ = -a²`.
    pub fn gaussian_curvature(&self, z: C64) -> Result<f64, MetricError> {
        let f = self.conformal_factor(z)?;
        Ok(self.curvature_from(z, &f))
    }

    fn curvature_from(&self, z: C64, f: &ConformalFactor) -> f64 {
        let lam = 2.0 / (1.0 - z.norm_sqr());
        self.spec.base_curvature * (-2.0 * f.phi).exp() * (1.0 + f.laplacian / (lam * lam))
    }

    /// `(e^{-σ}, ∇σ)`, the coefficients of the geodesic equations.
    pub fn geodesic_coefficients(&self, z: C64) -> Result<(f64, C64), MetricError> {
        let f = self.conformal_factor(z)?;
        let r2 = z.norm_sqr();
        let a = (-self.spec.base_curvature).sqrt();
        let sigma = f.phi + (2.0 / (a * (1.0 - r2))).ln();
        Ok(((-sigma).exp(), f.grad + 2.0 * z / (1.0 - r2)))
    }

    /// Curvature bounds `(b, c)` with `-c² ≤ K ≤ -b²`.
    pub fn curvature_bounds(&self, grid_resolution: usize) -> Result<CurvatureBounds, MetricError> {
        curvature_bounds(self, grid_resolution)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureBounds {
    pub b: f64,
    pub c: f64,
    pub k_min: f64,
    pub k_max: f64,
    /// Disk points where the extremes were found.
    pub argmin: [f64; 2],
    pub argmax: [f64; 2],
    /// `k_max < 0`, i.e. the perturbation is below the negativity threshold.
    pub negative: bool,
}

/// Grid over the fundamental domain plus polar grids over each bump support,
/// refined by compass search at the extremes.
pub fn curvature_bounds(
    metric: &ConformalMetric,
    grid_resolution: usize,
) -> Result<CurvatureBounds, MetricError> {
    let n = grid_resolution.max(4);
    let mut pts: Vec<C64> = vec![C64::new(0.0, 0.0)];
    for i in 0..n {
        for j in 0..n {
            let z = C64::new(
                -1.0 + (2 * i + 1) as f64 / n as f64,
                -1.0 + (2 * j + 1) as f64 / n as f64,
            );
            if z.norm() < 0.98 && metric.group.in_domain(z) {
                pts.push(z);
            }
        }
    }
    for p in &metric.placed {
        for &c in &p.centers {
            // polar grid in hyperbolic radius around the center
            let to_c = MobiusTransform::new(1.0.into(), c, c.conj(), 1.0.into());
            for i in 0..=n {
                let r = (p.bump.radius * i as f64 / n as f64 / 2.0).tanh();
                for j in 0..2 * n {
                    let z = to_c.apply(C64::from_polar(
                        r,
                        std::f64::consts::PI * j as f64 / n as f64,
                    ));
                    if metric.group.in_domain(z) {
                        pts.push(z);
                    }
                }
            }
        }
    }
    let mut lo = (f64::INFINITY, C64::new(0.0, 0.0));
    let mut hi = (f64::NEG_INFINITY, C64::new(0.0, 0.0));
    for &z in &pts {
        let k = metric.gaussian_curvature(z)?;
        if k < lo.0 {
            lo = (k, z);
        }
        if k > hi.0 {
            hi = (k, z);
        }
    }
    let step0 = 2.0 / n as f64;
    lo = refine(metric, lo, step0, 1.0)?;
    hi = refine(metric, hi, step0, -1.0)?;
    if hi.0 >= 0.0 {
        return Err(MetricError::PositiveCurvature {
            x: hi.1.re,
            y: hi.1.im,
            curvature: hi.0,
        });
    }
    Ok(CurvatureBounds {
        b: (-hi.0).sqrt(),
        c: (-lo.0).sqrt(),
        k_min: lo.0,
        k_max: hi.0,
        argmin: [lo.1.re, lo.1.im],
        argmax: [hi.1.re, hi.1.im],
        negative: true,
    })
}

// compass search minimizing sign·K
fn refine(
    metric: &ConformalMetric,
    start: (f64, C64),
    step0: f64,
    sign: f64,
) -> Result<(f64, C64), MetricError> {
    let (mut best, mut z) = (sign * start.0, start.1);
    let mut step = step0;
    let dirs = [
        C64::new(1.0, 0.0),
        C64::new(0.0, 1.0),
        C64::new(-1.0, 0.0),
        C64::new(0.0, -1.0),
    ];
    while step > 1e-10 {
        let mut moved = false;
        for d in dirs {
            let w = z + d * step;
            if w.norm() >= 0.999 {
                continue;
            }
            let k = sign * metric.gaussian_curvature(w)?;
            if k < best {
                best = k;
                z = w;
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Ok((sign * best, z))
}

/// Largest `epsilon` (to `tol`) keeping the curvature negative, searched in `[0, hi]`.
pub fn epsilon_max(
    metric: &ConformalMetric,
    grid_resolution: usize,
    hi: f64,
    tol: f64,
) -> Result<f64, MetricError> {
    let negative = |e: f64| match curvature_bounds(&metric.with_epsilon(e), grid_resolution) {
        Ok(_) => Ok(true),
        Err(MetricError::PositiveCurvature { .. }) => Ok(false),
        Err(e) => Err(e),
    };
    if negative(hi)? {
        return Ok(hi);
    }
    let (mut a, mut b) = (0.0, hi);
    while b - a > tol {
        let m = 0.5 * (a + b);
        if negative(m)? {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schottky() -> FuchsianGroup {
        FuchsianGroup::schottky(0.6, 0.05).unwrap()
    }

    fn one_bump(center: [f64; 2], radius: f64, amplitude: f64, epsilon: f64) -> ConformalMetric {
        let spec = MetricSpec {
            bumps: vec![Bump {
                center,
                radius,
                amplitude,
            }],
            epsilon,
            ..Default::default()
        };
        ConformalMetric::new(schottky(), spec).unwrap()
    }

    #[test]
    fn unperturbed_metric_is_hyperbolic() {
        let m = one_bump([0.1, 0.0], 0.3, 1.0, 0.0);
        for z in [C64::new(0.0, 0.0), C64::new(0.3, -0.4), C64::new(0.7, 0.69)] {
            let f = m.conformal_factor(z).unwrap();
            assert_eq!((f.phi, f.grad, f.laplacian), (0.0, C64::new(0.0, 0.0), 0.0));
            assert!((m.gaussian_curvature(z).unwrap() + 1.0).abs() < 1e-12);
        }
        let b = m.curvature_bounds(40).unwrap();
        assert!((b.b - 1.0).abs() < 1e-12 && (b.c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outside_support_is_unperturbed() {
        let m = one_bump([0.0, 0.0], 0.3, 1.0, 0.5);
        let z = C64::new(0.4, 0.3);
        assert!(hyperbolic_distance(z, C64::new(0.0, 0.0)) > 0.3);
        assert!((m.gaussian_curvature(z).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn center_value_matches_closed_form() {
        // φ = A·ε(1-s)³ with s = (cosh d - 1)/(cosh ρ - 1); at the center
        // Δ_hyp φ = 2 φ_u(0) = -6Aε/(cosh ρ - 1) and K = -e^{-2Aε}(1 + Δ_hyp φ)
        let m = one_bump([0.0, 0.0], 0.2, 0.05, 1.0);
        let f = m.conformal_factor(C64::new(0.0, 0.0)).unwrap();
        assert!((f.phi - 0.05).abs() < 1e-15);
        assert!(f.grad.norm() < 1e-15);
        let k = m.gaussian_curvature(C64::new(0.0, 0.0)).unwrap();
        let want = -(-0.1f64).exp() * (1.0 - 0.3 / (0.2f64.cosh() - 1.0));
        assert!((k - want).abs() < 1e-12, "{k} {want}");
        assert!(k > -1.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for profile in [BumpProfile::Poly, BumpProfile::Smooth] {
            let spec = MetricSpec {
                bumps: vec![Bump {
                    center: [0.1, 0.05],
                    radius: 0.5,
                    amplitude: 0.3,
                }],
                epsilon: 1.0,
                profile,
                ..Default::default()
            };
            let m = ConformalMetric::new(schottky(), spec).unwrap();
            let z = C64::new(0.2, 0.1);
            let h = 1e-4;
            let phi = |w: C64| m.conformal_factor(w).unwrap().phi;
            let f = m.conformal_factor(z).unwrap();
            let hg = 1e-5;
            let gx = (phi(z + hg) - phi(z - hg)) / (2.0 * hg);
            let gy = (phi(z + C64::new(0.0, hg)) - phi(z - C64::new(0.0, hg))) / (2.0 * hg);
            let lap =
                (phi(z + h) + phi(z - h) + phi(z + C64::new(0.0, h)) + phi(z - C64::new(0.0, h))
                    - 4.0 * phi(z))
                    / (h * h);
            assert!((f.grad - C64::new(gx, gy)).norm() < 1e-7, "{profile:?}");
            assert!(
                (f.laplacian - lap).abs() < 1e-4 * lap.abs().max(1.0),
                "{profile:?} {} {lap}",
                f.laplacian
            );
        }
    }

    #[test]
    fn curvature_is_group_invariant() {
        let m = one_bump([0.35, 0.2], 0.6, 0.5, 0.05);
        let g = m.group.clone();
        for z in [C64::new(0.35, 0.2), C64::new(0.5, 0.1), C64::new(0.1, 0.3)] {
            let k = m.gaussian_curvature(z).unwrap();
            let f = m.conformal_factor(z).unwrap();
            for l in ['a', 'B', 'b'] {
                let gz = g.letter(l).unwrap().apply(z);
                assert!((m.gaussian_curvature(gz).unwrap() - k).abs() < 1e-9);
                assert!((m.conformal_factor(gz).unwrap().phi - f.phi).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn support_constraint_is_enforced() {
        let spec = MetricSpec {
            bumps: vec![Bump {
                center: [0.0, 0.0],
                radius: 2.0,
                amplitude: 1.0,
            }],
            epsilon: 0.01,
            ..Default::default()
        };
        assert!(matches!(
            ConformalMetric::new(schottky(), spec),
            Err(MetricError::Invalid(_))
        ));
        let outside = MetricSpec {
            bumps: vec![Bump {
                center: [0.9, 0.0],
                radius: 0.1,
                amplitude: 1.0,
            }],
            ..Default::default()
        };
        assert!(ConformalMetric::new(schottky(), outside).is_err());
    }

    #[test]
    fn small_bump_brackets_unit_curvature_and_converges_in_grid() {
        let m = one_bump([0.2, 0.1], 0.6, 1.0, 0.01);
        let b1 = m.curvature_bounds(40).unwrap();
        let b2 = m.curvature_bounds(80).unwrap();
        assert!(b1.b < 1.0 && 1.0 < b1.c);
        assert!((b1.b - 1.0).abs() < 0.2 && (b1.c - 1.0).abs() < 0.2);
        assert!((b1.b - b2.b).abs() < 1e-3 && (b1.c - b2.c).abs() < 1e-3);
    }

    #[test]
    fn large_epsilon_reports_positive_curvature() {
        let m = one_bump([0.2, 0.1], 0.6, 1.0, 1.0);
        assert!(matches!(
            m.curvature_bounds(40),
            Err(MetricError::PositiveCurvature { .. })
        ));
        let e = epsilon_max(&m, 30, 1.0, 1e-4).unwrap();
        assert!(e > 0.0 && e < 1.0);
        assert!(m.with_epsilon(0.9 * e).curvature_bounds(30).is_ok());
    }
}
