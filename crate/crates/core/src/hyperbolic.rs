//! Poincaré-disk isometries, Schottky and genus-2 Fuchsian groups, and the
//! closed-geodesic census of the constant-curvature quotient.
//!
//! Words use `a b c d` for generators and `A B C D` for their inverses.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;

/// Width of the indeterminate band around `|tr| = 2`.
pub const PARABOLIC_BAND: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HyperbolicError {
    #[error("transform is not hyperbolic (|trace| = {trace})")]
    NotHyperbolic { trace: f64 },
    #[error("no fundamental-domain representative after {iterations} ping-pong steps")]
    MaxIterations { iterations: usize },
    #[error("invalid group parameters: {0}")]
    InvalidGroup(String),
    #[error("unknown generator letter {0:?}")]
    UnknownLetter(char),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Hyperbolic,
    Elliptic,
    /// `|tr|` within [`PARABOLIC_BAND`] of 2; reported rather than guessed.
    Parabolic,
}

/// Möbius map `z ↦ (az+b)/(cz+d)` with `ad - bc = 1`, acting on the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct MobiusTransform {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
    pub label: Option<String>,
}

fn cayley() -> (C64, C64, C64, C64) {
    // upper half-plane -> disk, z ↦ (z - i)/(z + i)
    (
        C64::new(1.0, 0.0),
        C64::new(0.0, -1.0),
        C64::new(1.0, 0.0),
        C64::new(0.0, 1.0),
    )
}

impl MobiusTransform {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        let mut m = Self {
            a,
            b,
            c,
            d,
            label: None,
        };
        m.renormalize();
        m
    }

    pub fn identity() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Self::new(one, zero, zero, one)
    }

    /// Disk conjugate of the upper-half-plane map given by a real matrix.
    pub fn from_sl2r(a: f64, b: f64, c: f64, d: f64) -> Self {
        let (p, q, r, s) = cayley();
        let h = Self::new(p, q, r, s);
        let g = Self::new(a.into(), b.into(), c.into(), d.into());
        h.compose(&g).compose(&h.inverse())
    }

    /// Hyperbolic translation by `distance` along the diameter through `direction`.
    pub fn translation(direction: f64, distance: f64) -> Self {
        let t = (distance / 2.0).tanh();
        let u = C64::from_polar(1.0, direction);
        // u ∘ T_t ∘ u⁻¹ with T_t(z) = (z+t)/(1+tz)
        let s = 1.0 / (1.0 - t * t).sqrt();
        Self::new(s.into(), u * t * s, u.conj() * t * s, s.into())
    }

    pub fn rotation(angle: f64) -> Self {
        let h = C64::from_polar(1.0, angle / 2.0);
        Self::new(h, 0.0.into(), 0.0.into(), h.conj())
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    fn renormalize(&mut self) {
        let s = self.det().sqrt();
        self.a /= s;
        self.b /= s;
        self.c /= s;
        self.d /= s;
    }

    pub fn trace(&self) -> C64 {
        self.a + self.d
    }

    pub fn abs_trace(&self) -> f64 {
        self.trace().norm()
    }

    pub fn apply(&self, z: C64) -> C64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// Complex derivative at `z`.
    pub fn derivative(&self, z: C64) -> C64 {
        let den = self.c * z + self.d;
        1.0 / (den * den)
    }

    /// `self ∘ other`. Not renormalized: for long words `ad - bc` cancels
    /// catastrophically, while the product of unit-determinant factors keeps
    /// its determinant to relative roundoff.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
            label: None,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
            label: None,
        }
    }

    /// Equality as maps (matrices up to sign).
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let diff = |s: f64| {
            [
                (self.a, other.a),
                (self.b, other.b),
                (self.c, other.c),
                (self.d, other.d),
            ]
            .iter()
            .map(|(x, y)| (x - y * s).norm())
            .fold(0.0, f64::max)
        };
        diff(1.0).min(diff(-1.0)) <= tol
    }

    pub fn classify(&self) -> Classification {
        let t = self.abs_trace();
        if t > 2.0 + PARABOLIC_BAND {
            Classification::Hyperbolic
        } else if t < 2.0 - PARABOLIC_BAND {
            Classification::Elliptic
        } else {
            Classification::Parabolic
        }
    }

    fn require_hyperbolic(&self) -> Result<(), HyperbolicError> {
        match self.classify() {
            Classification::Hyperbolic => Ok(()),
            _ => Err(HyperbolicError::NotHyperbolic {
                trace: self.abs_trace(),
            }),
        }
    }

    /// Boundary fixed points `(repelling, attracting)`.
    pub fn fixed_points(&self) -> Result<(C64, C64), HyperbolicError> {
        self.require_hyperbolic()?;
        // c z² + (d - a) z - b = 0
        let (qa, qb, qc) = (self.c, self.d - self.a, -self.b);
        let (z1, z2) = if qa.norm() < 1e-300 {
            // fixes ∞; cannot happen for disk automorphisms but handled for completeness
            (-qc / qb, C64::new(f64::INFINITY, 0.0))
        } else {
            let disc = (qb * qb - 4.0 * qa * qc).sqrt();
            // stable root pairing
            let q = if (qb.conj() * disc).re >= 0.0 {
                -0.5 * (qb + disc)
            } else {
                -0.5 * (qb - disc)
            };
            (q / qa, qc / q)
        };
        if self.derivative(z1).norm() < 1.0 {
            Ok((z2, z1))
        } else {
            Ok((z1, z2))
        }
    }

    /// Equally spaced axis samples covering one translation period, starting
    /// at the axis point closest to the disk origin and moving toward the
    /// attracting fixed point.
    pub fn axis_points(&self, count: usize) -> Result<Vec<C64>, HyperbolicError> {
        let ell = translation_length(self)?;
        let (p, q) = self.fixed_points()?;
        let chart = AxisChart::new(p, q);
        Ok((0..count)
            .map(|k| chart.point(ell * k as f64 / count as f64))
            .collect())
    }

    /// Point at hyperbolic arclength `s` along the axis from its foot.
    pub fn axis_point(&self, s: f64) -> Result<C64, HyperbolicError> {
        let (p, q) = self.fixed_points()?;
        Ok(AxisChart::new(p, q).point(s))
    }

    /// Unit chart direction of the axis at its foot, pointing to the attracting end.
    pub fn axis_direction(&self) -> Result<(C64, f64), HyperbolicError> {
        let (p, q) = self.fixed_points()?;
        let chart = AxisChart::new(p, q);
        Ok((chart.point(0.0), chart.angle_at(0.0)))
    }
}

impl fmt::Display for MobiusTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// Disk automorphism carrying a geodesic onto the real diameter.
struct AxisChart {
    foot: C64,
    rot: C64,
}

impl AxisChart {
    fn new(p: C64, q: C64) -> Self {
        let foot = geodesic_foot(p, q);
        let w = |z: C64| (z - foot) / (1.0 - foot.conj() * z);
        let rot = w(q).conj() / w(q).norm();
        Self { foot, rot }
    }

    // inverse of z ↦ rot·(z - foot)/(1 - conj(foot) z)
    fn point(&self, s: f64) -> C64 {
        let u = self.rot.conj() * (s / 2.0).tanh();
        (u + self.foot) / (1.0 + self.foot.conj() * u)
    }

    fn angle_at(&self, s: f64) -> f64 {
        let h = 1e-6;
        (self.point(s + h) - self.point(s - h)).arg()
    }
}

/// Point of the geodesic with boundary endpoints `p, q` closest to the origin.
pub fn geodesic_foot(p: C64, q: C64) -> C64 {
    let m = p + q;
    if m.norm() < 1e-14 {
        return C64::new(0.0, 0.0);
    }
    let cos_psi = (m.norm() / 2.0).min(1.0);
    let sin_psi = (1.0 - cos_psi * cos_psi).sqrt();
    m / m.norm() * ((1.0 - sin_psi) / cos_psi)
}

pub fn translation_length(g: &MobiusTransform) -> Result<f64, HyperbolicError> {
    g.require_hyperbolic()?;
    Ok(2.0 * (g.abs_trace() / 2.0).acosh())
}

pub fn hyperbolic_distance(z: C64, w: C64) -> f64 {
    let r = ((z - w) / (1.0 - w.conj() * z)).norm();
    2.0 * r.min(1.0 - 1e-17).atanh()
}

/// Distance between two disjoint geodesics given by boundary endpoints.
pub fn geodesic_distance(a: (C64, C64), b: (C64, C64)) -> f64 {
    let m = |z: C64| (z - a.0) / (z - a.1);
    let r = m(b.0) / m(b.1);
    ((1.0 + r) / (1.0 - r)).norm().acosh()
}

pub fn disk_to_upper(z: C64) -> C64 {
    C64::new(0.0, 1.0) * (1.0 + z) / (1.0 - z)
}

pub fn upper_to_disk(w: C64) -> C64 {
    (w - C64::new(0.0, 1.0)) / (w + C64::new(0.0, 1.0))
}

/// A boundary side of the fundamental domain: the geodesic circle
/// `|z - center| = radius`, orthogonal to the unit circle. Points with
/// `|z - center| < radius` lie beyond it; crossing into that region records
/// `letter` and re-enters through `letter⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct Side {
    pub center: C64,
    pub radius: f64,
    pub letter: char,
}

impl Side {
    fn orthogonal(direction: f64, foot: f64, letter: char) -> Self {
        let d = (1.0 + foot * foot) / (2.0 * foot);
        Self {
            center: C64::from_polar(d, direction),
            radius: (d * d - 1.0).sqrt(),
            letter,
        }
    }

    /// Signed excess `|z - c| - r`; negative beyond the side.
    pub fn excess(&self, z: C64) -> f64 {
        (z - self.center).norm() - self.radius
    }

    pub fn endpoints(&self) -> (C64, C64) {
        let psi = (1.0 / self.center.norm()).acos();
        let dir = self.center.arg();
        (
            C64::from_polar(1.0, dir - psi),
            C64::from_polar(1.0, dir + psi),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupSpec {
    /// Rank-2 classical Schottky group; `midpoint` is where each pairing
    /// circle crosses its axis, `separation` the minimal angular gap between
    /// circles on the boundary (radians).
    Schottky {
        #[serde(default = "default_midpoint")]
        midpoint: f64,
        #[serde(default = "default_separation")]
        separation: f64,
    },
    SurfaceGenus2,
}

fn default_midpoint() -> f64 {
    0.6
}

fn default_separation() -> f64 {
    0.05
}

impl Default for GroupSpec {
    fn default() -> Self {
        GroupSpec::Schottky {
            midpoint: default_midpoint(),
            separation: default_separation(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuchsianGroup {
    pub spec: GroupSpec,
    /// Generators in letter order `a, b, ...`.
    pub generators: Vec<MobiusTransform>,
    pub sides: Vec<Side>,
    pub max_iterations: usize,
}

/// Ping-pong result: `point = deck(z)` lies in the fundamental domain and
/// `z = word(point)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: C64,
    pub deck: MobiusTransform,
    pub word: String,
}

pub fn invert_letter(c: char) -> char {
    if c.is_ascii_lowercase() {
        c.to_ascii_uppercase()
    } else {
        c.to_ascii_lowercase()
    }
}

pub fn invert_word(w: &str) -> String {
    w.chars().rev().map(invert_letter).collect()
}

/// Free reduction of a word.
pub fn reduce_word(w: &str) -> String {
    let mut out: Vec<char> = Vec::with_capacity(w.len());
    for c in w.chars() {
        if out.last() == Some(&invert_letter(c)) {
            out.pop();
        } else {
            out.push(c);
        }
    }
    out.into_iter().collect()
}

pub fn is_cyclically_reduced(w: &str) -> bool {
    let b = w.as_bytes();
    let n = b.len();
    let inv = |c: u8| invert_letter(c as char) as u8;
    (0..n.saturating_sub(1)).all(|i| b[i + 1] != inv(b[i])) && (n < 2 || b[0] != inv(b[n - 1]))
}

/// Least rotation of `w` or its inverse; the census key of a cyclic word.
pub fn canonical_cyclic(w: &str) -> String {
    let n = w.len();
    let wi = invert_word(w);
    let mut best = w.to_string();
    for s in [w, wi.as_str()] {
        for i in 0..n {
            let r = format!("{}{}", &s[i..], &s[..i]);
            if r < best {
                best = r;
            }
        }
    }
    best
}

pub fn is_primitive(w: &str) -> bool {
    let n = w.len();
    !(1..n).any(|k| n.is_multiple_of(k) && w == w[..k].repeat(n / k))
}

impl FuchsianGroup {
    pub fn from_spec(spec: GroupSpec) -> Result<Self, HyperbolicError> {
        match spec {
            GroupSpec::Schottky {
                midpoint,
                separation,
            } => Self::schottky(midpoint, separation),
            GroupSpec::SurfaceGenus2 => Ok(Self::genus2()),
        }
    }

    /// Generators `a` (real axis) and `b` (imaginary axis), each pairing
    /// geodesic circles that cross their axis at `±midpoint`.
    pub fn schottky(midpoint: f64, separation: f64) -> Result<Self, HyperbolicError> {
        if !(midpoint > 0.0 && midpoint < 1.0) || !(separation >= 0.0) {
            return Err(HyperbolicError::InvalidGroup(format!(
                "midpoint {midpoint} must lie in (0,1), separation {separation} must be >= 0"
            )));
        }
        let d = (1.0 + midpoint * midpoint) / (2.0 * midpoint);
        let half_angle = (1.0 / d).acos();
        let gap = PI / 2.0 - 2.0 * half_angle;
        if gap < separation {
            return Err(HyperbolicError::InvalidGroup(format!(
                "pairing circles overlap or are closer than {separation} rad (gap {gap:.4})"
            )));
        }
        let shift = 4.0 * midpoint.atanh();
        let generators = vec![
            MobiusTransform::translation(0.0, shift).with_label("a"),
            MobiusTransform::translation(PI / 2.0, shift).with_label("b"),
        ];
        let sides = vec![
            Side::orthogonal(0.0, midpoint, 'a'),
            Side::orthogonal(PI, midpoint, 'A'),
            Side::orthogonal(PI / 2.0, midpoint, 'b'),
            Side::orthogonal(-PI / 2.0, midpoint, 'B'),
        ];
        Ok(Self {
            spec: GroupSpec::Schottky {
                midpoint,
                separation,
            },
            generators,
            sides,
            max_iterations: 200,
        })
    }

    /// Regular octagon with interior angles π/4 and opposite sides paired.
    pub fn genus2() -> Self {
        let h = (1.0 + 2f64.sqrt()).acosh();
        let foot = (h / 2.0).tanh();
        let letters = ['a', 'b', 'c', 'd'];
        let mut generators = Vec::new();
        let mut sides = Vec::new();
        for (k, &l) in letters.iter().enumerate() {
            let dir = (k as f64 + 0.5) * PI / 4.0;
            generators.push(MobiusTransform::translation(dir, 2.0 * h).with_label(l.to_string()));
            sides.push(Side::orthogonal(dir, foot, l));
            sides.push(Side::orthogonal(dir + PI, foot, l.to_ascii_uppercase()));
        }
        Self {
            spec: GroupSpec::SurfaceGenus2,
            generators,
            sides,
            max_iterations: 200,
        }
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn letters(&self) -> Vec<char> {
        let mut v = Vec::new();
        for k in 0..self.rank() {
            let c = (b'a' + k as u8) as char;
            v.push(c);
            v.push(c.to_ascii_uppercase());
        }
        v
    }

    pub fn is_schottky(&self) -> bool {
        matches!(self.spec, GroupSpec::Schottky { .. })
    }

    pub fn letter(&self, c: char) -> Result<MobiusTransform, HyperbolicError> {
        let k = (c.to_ascii_lowercase() as u8).wrapping_sub(b'a') as usize;
        let g = self
            .generators
            .get(k)
            .ok_or(HyperbolicError::UnknownLetter(c))?;
        Ok(if c.is_ascii_uppercase() {
            g.inverse()
        } else {
            g.clone()
        })
    }

    pub fn word(&self, w: &str) -> Result<MobiusTransform, HyperbolicError> {
        let mut m = MobiusTransform::identity();
        for c in w.chars() {
            m = m.compose(&self.letter(c)?);
        }
        Ok(m.with_label(w))
    }

    pub fn in_domain(&self, z: C64) -> bool {
        z.norm() < 1.0 && self.sides.iter().all(|s| s.excess(z) >= 0.0)
    }

    /// Ping-pong reduction into the fundamental domain. Fails with
    /// `MaxIterations` when the reduction does not terminate within
    /// `max_iterations` steps or an intermediate point comes within `1e-9`
    /// of the boundary circle while still outside the domain.
    pub fn fundamental_domain_project(&self, z: C64) -> Result<Projection, HyperbolicError> {
        let mut w = z;
        let mut deck = MobiusTransform::identity();
        let mut word = String::new();
        for it in 0..=self.max_iterations {
            let beyond = self.sides.iter().filter(|s| s.excess(w) < 0.0);
            // deepest violated side brings the point closest to the origin
            let mut best: Option<(f64, C64, char)> = None;
            for s in beyond {
                let g = self.letter(s.letter)?.inverse();
                let img = g.apply(w);
                if best.is_none_or(|(r, _, _)| img.norm() < r) {
                    best = Some((img.norm(), img, s.letter));
                }
            }
            let Some((_, img, letter)) = best else {
                return Ok(Projection {
                    point: w,
                    deck: deck.with_label(invert_word(&word)),
                    word,
                });
            };
            if 1.0 - w.norm() < 1e-9 || it == self.max_iterations {
                return Err(HyperbolicError::MaxIterations { iterations: it });
            }
            deck = self.letter(letter)?.inverse().compose(&deck);
            word.push(letter);
            w = img;
        }
        unreachable!()
    }

    /// Minimal distance between distinct side geodesics.
    pub fn min_side_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, s) in self.sides.iter().enumerate() {
            for t in &self.sides[i + 1..] {
                let (p, q) = (s.endpoints(), t.endpoints());
                let touching = [p.0, p.1]
                    .iter()
                    .any(|x| (x - q.0).norm() < 1e-9 || (x - q.1).norm() < 1e-9);
                if !touching {
                    best = best.min(geodesic_distance(p, q));
                }
            }
        }
        best
    }

    /// Cutting sequence of the closed geodesic of `g`: the letters of the
    /// sides crossed while moving once along its axis, canonicalized.
    pub fn cutting_sequence(&self, g: &MobiusTransform) -> Result<String, HyperbolicError> {
        let ell = translation_length(g)?;
        let (p, q) = g.fixed_points()?;
        let chart = AxisChart::new(p, q);
        let start = self.fundamental_domain_project(chart.point(0.0))?;
        let mut deck = start.deck;
        let mut word = String::new();
        let step = 0.02;
        let mut s = 0.0;
        while s < ell {
            let s_next = (s + step).min(ell);
            let w = deck.apply(chart.point(s_next));
            let crossed = self.sides.iter().filter(|side| side.excess(w) < 0.0);
            // earliest crossing among the sides violated at s_next
            let mut first: Option<(f64, char)> = None;
            for side in crossed {
                let (mut lo, mut hi) = (s, s_next);
                while hi - lo > 1e-12 {
                    let mid = 0.5 * (lo + hi);
                    if side.excess(deck.apply(chart.point(mid))) < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                if first.is_none_or(|(t, _)| hi < t) {
                    first = Some((hi, side.letter));
                }
            }
            match first {
                Some((t, letter)) if t < ell - 1e-9 => {
                    word.push(letter);
                    deck = self.letter(letter)?.inverse().compose(&deck);
                    s = t;
                }
                _ => s = s_next,
            }
            if word.len() > 10_000 {
                return Err(HyperbolicError::MaxIterations {
                    iterations: word.len(),
                });
            }
        }
        Ok(canonical_cyclic(&word))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicClass {
    pub word: String,
    #[serde(skip)]
    pub transform: MobiusTransform,
    pub trace: f64,
    pub length: f64,
    #[serde(skip)]
    pub axis: (C64, C64),
    pub primitive: bool,
}

impl GeodesicClass {
    pub fn from_word(group: &FuchsianGroup, word: &str) -> Result<Self, HyperbolicError> {
        let transform = group.word(word)?;
        let length = translation_length(&transform)?;
        let axis = transform.fixed_points()?;
        Ok(Self {
            word: word.to_string(),
            trace: transform.trace().re,
            transform,
            length,
            axis,
            primitive: is_primitive(word),
        })
    }
}

fn for_each_reduced_word(letters: &[char], n: usize, f: &mut impl FnMut(&str)) {
    fn rec(letters: &[char], n: usize, cur: &mut String, f: &mut impl FnMut(&str)) {
        if cur.len() == n {
            f(cur);
            return;
        }
        for &c in letters {
            if cur.ends_with(invert_letter(c)) {
                continue;
            }
            cur.push(c);
            rec(letters, n, cur, f);
            cur.pop();
        }
    }
    rec(letters, n, &mut String::new(), f)
}

/// Closed-geodesic classes up to `max_word_length`, sorted by length then word.
///
/// Schottky groups are free, so classes are cyclically reduced words modulo
/// rotation and inversion. For the surface group distinct words can be
/// conjugate; there each word is keyed by the cutting sequence of its axis.
pub fn enumerate_classes(
    group: &FuchsianGroup,
    max_word_length: usize,
) -> Result<Vec<GeodesicClass>, HyperbolicError> {
    let letters = group.letters();
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut err = None;
    for n in 1..=max_word_length {
        for_each_reduced_word(&letters, n, &mut |w| {
            if err.is_some() || !is_cyclically_reduced(w) || canonical_cyclic(w) != w {
                return;
            }
            let class = match GeodesicClass::from_word(group, w) {
                Ok(c) => c,
                Err(e) => {
                    err = Some(e);
                    return;
                }
            };
            if group.is_schottky() {
                out.push(class);
                return;
            }
            match group.cutting_sequence(&class.transform) {
                Ok(key) => {
                    if seen.insert(key.clone()) {
                        let primitive = is_primitive(&key);
                        out.push(GeodesicClass {
                            word: key,
                            primitive,
                            ..class
                        });
                    }
                }
                Err(e) => err = Some(e),
            }
        });
    }
    if let Some(e) = err {
        return Err(e);
    }
    out.sort_by(|x, y| {
        x.length
            .total_cmp(&y.length)
            .then_with(|| x.word.cmp(&y.word))
    });
    Ok(out)
}

pub fn census_csv(classes: &[GeodesicClass]) -> String {
    let mut s = String::from("word,trace,length\n");
    for c in classes {
        s.push_str(&format!("{},{:.12},{:.12}\n", c.word, c.trace, c.length));
    }
    s
}

/// Least-squares fit of `N(T) ≈ e^{δT}/(δT)` to the primitive length spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthFit {
    pub delta: f64,
    /// RMS residual of `log N` over the fitted window.
    pub residual: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub classes_used: usize,
}

/// Lengths below `t_max` are assumed complete; the window starts at the
/// shortest length.
pub fn fit_growth_exponent(lengths: &[f64], t_max: f64) -> Option<GrowthFit> {
    let mut ls: Vec<f64> = lengths.iter().copied().filter(|l| *l <= t_max).collect();
    ls.sort_by(f64::total_cmp);
    let t_min = *ls.first()?;
    if ls.len() < 3 || t_max <= t_min {
        return None;
    }
    let points = 40;
    let grid: Vec<(f64, f64)> = (0..points)
        .map(|i| {
            let t = t_min + (t_max - t_min) * i as f64 / (points - 1) as f64;
            (t, ls.partition_point(|l| *l <= t) as f64)
        })
        .collect();
    let sse = |delta: f64| {
        let ys: Vec<f64> = grid
            .iter()
            .map(|(t, n)| n.ln() - delta * t + (delta * t).ln())
            .collect();
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>()
    };
    // coarse scan, then golden section around the best cell
    let (lo, hi) = (0.01, 3.0);
    let cells = 300;
    let h = (hi - lo) / cells as f64;
    let best = (0..=cells)
        .map(|i| lo + h * i as f64)
        .min_by(|a, b| sse(*a).total_cmp(&sse(*b)))
        .unwrap();
    let (mut a, mut b) = ((best - h).max(lo), (best + h).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-10 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if sse(c) < sse(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let delta = 0.5 * (a + b);
    Some(GrowthFit {
        delta,
        residual: (sse(delta) / points as f64).sqrt(),
        t_min,
        t_max,
        classes_used: ls.len(),
    })
}

/// Length below which a census to `max_word_length` is complete. For
/// Schottky groups each letter costs at least the minimal side distance;
/// for the surface group corner cutting voids that bound and the window
/// is cut at the longest length reached by single letters times the word length.
pub fn census_complete_length(group: &FuchsianGroup, max_word_length: usize) -> f64 {
    if group.is_schottky() {
        (max_word_length + 1) as f64 * group.min_side_distance()
    } else {
        let ell = translation_length(&group.generators[0]).unwrap_or(1.0);
        0.5 * ell * (max_word_length as f64)
    }
}

/// δ fit on a census of primitive classes.
pub fn census_growth(
    group: &FuchsianGroup,
    classes: &[GeodesicClass],
    max_word_length: usize,
) -> Option<GrowthFit> {
    let lengths: Vec<f64> = classes
        .iter()
        .filter(|c| c.primitive)
        .map(|c| c.length)
        .collect();
    fit_growth_exponent(&lengths, census_complete_length(group, max_word_length))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn group() -> FuchsianGroup {
        FuchsianGroup::schottky(0.6, 0.05).unwrap()
    }

    #[test]
    fn composition_basics() {
        let g = MobiusTransform::from_sl2r(2.0, 0.0, 0.0, 0.5);
        assert!(MobiusTransform::identity().compose(&g).approx_eq(&g, 1e-15));
        assert!(g
            .compose(&g.inverse())
            .approx_eq(&MobiusTransform::identity(), 1e-12));
        let g2 = g.compose(&g);
        assert!(g2.approx_eq(&MobiusTransform::from_sl2r(4.0, 0.0, 0.0, 0.25), 1e-12));
        assert!((g2.det() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn translation_length_examples() {
        let g = MobiusTransform::from_sl2r(2.0, 0.0, 0.0, 0.5);
        let ell = translation_length(&g).unwrap();
        assert!((ell - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!((translation_length(&g.compose(&g)).unwrap() - 2.0 * ell).abs() < 1e-12);
        let rot = MobiusTransform::rotation(0.7);
        assert_eq!(rot.classify(), Classification::Elliptic);
        assert!(matches!(
            translation_length(&rot),
            Err(HyperbolicError::NotHyperbolic { .. })
        ));
        let par = MobiusTransform::from_sl2r(1.0, 1.0, 0.0, 1.0);
        assert_eq!(par.classify(), Classification::Parabolic);
    }

    #[test]
    fn axis_of_diagonal_is_imaginary_axis() {
        let g = MobiusTransform::from_sl2r(2.0, 0.0, 0.0, 0.5);
        let pts = g.axis_points(8).unwrap();
        let ell = 2.0 * 2f64.ln();
        for (k, z) in pts.iter().enumerate() {
            let s = ell * k as f64 / 8.0;
            let w = disk_to_upper(*z);
            assert!((w - c(0.0, s.exp())).norm() < 1e-12, "{k}: {w}");
        }
        assert_eq!(g.axis_points(1).unwrap().len(), 1);
        let h = MobiusTransform::translation(0.3, 0.8).compose(&MobiusTransform::rotation(1.1));
        let conj = h.compose(&g).compose(&h.inverse());
        let (p, q) = conj.fixed_points().unwrap();
        let axis = AxisChart::new(p, q);
        for z in &pts {
            let hz = h.apply(*z);
            let t = hyperbolic_distance(axis.foot, hz);
            let off = (axis.point(t) - hz)
                .norm()
                .min((axis.point(-t) - hz).norm());
            assert!(off < 1e-10, "{off}");
        }
    }

    #[test]
    fn schottky_generators_pair_circles() {
        let g = group();
        for (k, gen) in g.generators.iter().enumerate() {
            let src = &g.sides[2 * k + 1];
            let dst = &g.sides[2 * k];
            for i in 0..16 {
                let z = src.center + C64::from_polar(src.radius, i as f64);
                if z.norm() < 1.0 {
                    assert!(dst.excess(gen.apply(z)).abs() < 1e-12);
                }
            }
            assert!((translation_length(gen).unwrap() - 4.0 * 0.6f64.atanh()).abs() < 1e-12);
        }
    }

    #[test]
    fn overlapping_circles_are_rejected() {
        assert!(FuchsianGroup::schottky(0.3, 0.05).is_err());
        assert!(FuchsianGroup::schottky(1.2, 0.0).is_err());
    }

    #[test]
    fn census_counts_match_exhaustive_enumeration() {
        // brute force over all words with naive rotation/inversion dedup
        let expected = [0, 2, 6, 12, 25, 51, 117];
        for (l, want) in expected.iter().enumerate() {
            assert_eq!(
                enumerate_classes(&group(), l).unwrap().len(),
                *want,
                "length {l}"
            );
        }
        let words: Vec<String> = enumerate_classes(&group(), 2)
            .unwrap()
            .into_iter()
            .map(|c| c.word)
            .collect();
        let set: BTreeSet<&str> = words.iter().map(|s| s.as_str()).collect();
        assert_eq!(
            set,
            ["A", "B", "AA", "BB", "AB", "Ab"].into_iter().collect()
        );
    }

    #[test]
    fn census_csv_has_header_and_sorted_lengths() {
        let classes = enumerate_classes(&group(), 3).unwrap();
        let csv = census_csv(&classes);
        assert!(csv.starts_with("word,trace,length\n"));
        assert_eq!(csv.lines().count(), 13);
        assert!(classes.windows(2).all(|w| w[0].length <= w[1].length));
        assert_eq!(census_csv(&[]), "word,trace,length\n");
    }

    #[test]
    fn projection_examples() {
        let g = group();
        let p = g.fundamental_domain_project(c(0.1, 0.2)).unwrap();
        assert_eq!(p.point, c(0.1, 0.2));
        assert!(p.word.is_empty());
        let a = g.letter('a').unwrap();
        let z = a.apply(c(0.05, -0.1));
        let p = g.fundamental_domain_project(z).unwrap();
        assert_eq!(p.word, "a");
        assert!((p.point - c(0.05, -0.1)).norm() < 1e-12);
        assert!((p.deck.apply(z) - p.point).norm() < 1e-12);
        // deep point: a^12 pushes 0 within ~1e-14 of the attracting fixed point
        let deep = g.word(&"a".repeat(12)).unwrap().apply(c(0.0, 0.0));
        assert!(matches!(
            g.fundamental_domain_project(deep),
            Err(HyperbolicError::MaxIterations { .. })
        ));
    }

    #[test]
    fn cutting_sequence_of_schottky_word_is_the_word() {
        let g = group();
        for w in ["a", "ab", "aB", "aab", "abAB", "aabbb"] {
            let t = g.word(w).unwrap();
            assert_eq!(g.cutting_sequence(&t).unwrap(), canonical_cyclic(w), "{w}");
        }
    }

    #[test]
    fn genus2_relation_and_domain() {
        let g = FuchsianGroup::genus2();
        // vertex-cycle relation of the opposite-side pairing
        let r = g.word("aBcDAbCd").unwrap();
        assert!(r.approx_eq(&MobiusTransform::identity(), 1e-9), "{r}");
        assert!(g.in_domain(c(0.0, 0.0)));
        let p = g.fundamental_domain_project(c(0.93, 0.2)).unwrap();
        assert!(g.in_domain(p.point));
        let classes = enumerate_classes(&g, 2).unwrap();
        assert!(classes.iter().all(|c| c.length > 0.0));
    }

    #[test]
    fn growth_fit_is_stable() {
        let g = group();
        let d4 = census_growth(&g, &enumerate_classes(&g, 4).unwrap(), 4)
            .unwrap()
            .delta;
        let d6 = census_growth(&g, &enumerate_classes(&g, 6).unwrap(), 6)
            .unwrap()
            .delta;
        assert!(d4 > 0.2 && d4 < 1.0, "{d4}");
        assert!((d6 / d4 - 1.0).abs() < 0.1, "{d4} {d6}");
    }
}
