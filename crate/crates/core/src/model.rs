//! Parameters, reaction terms and vector fields of the two-patch model.
//!
//! The physical system for patch densities `x1`, `x2` reads
//!
//! ```text
//! x1' = D (x2 - x1) + lambda1 k1 f(x1 / k1)
//! x2' = D (x1 - x2) + lambda2 k2 f(x2 / k2)
//! ```
//!
//! where `f` is the per-patch reaction shape. With `x = x1/k1`, `y = x2/k2`
//! and the rescaled time `tau = D t` it becomes the normalized system
//!
//! ```text
//! x' = gamma y - x + alpha f(x)
//! y' = x / gamma - y + beta f(y)
//! ```
//!
//! with `alpha = lambda1/D`, `beta = lambda2/D`, `gamma = k2/k1`. Equilibria
//! correspond one-to-one under the scaling; trajectories are time-rescaled by `D`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{domain, Error, Result};

/// Sawtooth breakpoints.
pub const SAWTOOTH_KINKS: [f64; 2] = [0.25, 0.75];

/// A point of the phase plane: patch-1 and patch-2 densities.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct State {
    pub x: f64,
    pub y: f64,
}

impl State {
    pub const ORIGIN: State = State { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs())
    }

    pub fn distance(self, other: State) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for State {
    type Output = State;
    fn add(self, rhs: State) -> State {
        State::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for State {
    type Output = State;
    fn sub(self, rhs: State) -> State {
        State::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<State> for f64 {
    type Output = State;
    fn mul(self, rhs: State) -> State {
        State::new(self * rhs.x, self * rhs.y)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Physical parameters, stored in canonical orientation `k2 <= k1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatchParams {
    d: f64,
    lambda1: f64,
    lambda2: f64,
    k1: f64,
    k2: f64,
    a1: f64,
    a2: f64,
    swapped: bool,
}

impl PatchParams {
    /// Parameters with the default viability threshold `a1 = a2 = 1/2`.
    pub fn new(d: f64, lambda1: f64, lambda2: f64, k1: f64, k2: f64) -> Result<Self> {
        Self::with_viability(d, lambda1, lambda2, k1, k2, 0.5, 0.5)
    }

    /// Validates and canonicalizes. If `k2 > k1` the two patches are exchanged
    /// (rates, capacities and thresholds together) and [`Self::swapped`] is set.
    pub fn with_viability(d: f64, lambda1: f64, lambda2: f64, k1: f64, k2: f64, a1: f64, a2: f64) -> Result<Self> {
        positive("D", d)?;
        positive("lambda1", lambda1)?;
        positive("lambda2", lambda2)?;
        positive("k1", k1)?;
        positive("k2", k2)?;
        viability("a1", a1)?;
        viability("a2", a2)?;
        let p = if k2 > k1 {
            Self { d, lambda1: lambda2, lambda2: lambda1, k1: k2, k2: k1, a1: a2, a2: a1, swapped: true }
        } else {
            Self { d, lambda1, lambda2, k1, k2, a1, a2, swapped: false }
        };
        Ok(p)
    }

    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }
    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }
    pub fn k1(&self) -> f64 {
        self.k1
    }
    pub fn k2(&self) -> f64 {
        self.k2
    }
    pub fn a1(&self) -> f64 {
        self.a1
    }
    pub fn a2(&self) -> f64 {
        self.a2
    }

    /// Whether the constructor exchanged the patches to enforce `k2 <= k1`.
    pub fn swapped(&self) -> bool {
        self.swapped
    }

    /// Per-patch reactions for a reaction shape. Cubic reactions take each
    /// patch's own viability threshold; the other shapes are threshold-free.
    pub fn reactions(&self, shape: ReactionKind) -> Reactions {
        match shape {
            ReactionKind::CubicAllee { .. } => {
                Reactions { x: ReactionKind::CubicAllee { a: self.a1 }, y: ReactionKind::CubicAllee { a: self.a2 } }
            }
            other => Reactions::uniform(other),
        }
    }

    /// Same parameters with a different diffusion rate.
    pub fn with_d(&self, d: f64) -> Result<Self> {
        positive("D", d)?;
        Ok(Self { d, ..*self })
    }
}

/// Reduced parameters of the normalized system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizedParams {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

impl NormalizedParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        positive("beta", beta)?;
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(domain(format!("gamma must lie in (0, 1], got {gamma}")));
        }
        Ok(Self { alpha, beta, gamma })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be positive, got {v}")))
    }
}

fn viability(name: &str, a: f64) -> Result<()> {
    if a > 0.0 && a < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must lie in (0, 1), got {a}")))
    }
}

/// Reaction nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReactionKind {
    /// `s (1 - s) (s - a)` with viability threshold `a`.
    CubicAllee { a: f64 },
    /// Continuous piecewise-linear caricature with breakpoints 1/4 and 3/4.
    Sawtooth,
    /// `s (1 - s)`.
    Logistic,
}

impl ReactionKind {
    /// The cubic with `a = 1/2`.
    pub const CUBIC_HALF: ReactionKind = ReactionKind::CubicAllee { a: 0.5 };

    pub fn cubic(a: f64) -> Result<Self> {
        viability("a", a)?;
        Ok(ReactionKind::CubicAllee { a })
    }

    /// Reaction value. At the sawtooth breakpoints the continuous limit is used.
    pub fn eval(self, s: f64) -> f64 {
        match self {
            ReactionKind::CubicAllee { a } => s * (1.0 - s) * (s - a),
            ReactionKind::Sawtooth => {
                if s <= 0.25 {
                    -s
                } else if s <= 0.75 {
                    s - 0.5
                } else {
                    1.0 - s
                }
            }
            ReactionKind::Logistic => s * (1.0 - s),
        }
    }

    /// Exact derivative; fails at a sawtooth kink.
    pub fn deriv(self, s: f64) -> Result<f64> {
        match self {
            ReactionKind::CubicAllee { a } => Ok(-3.0 * s * s + 2.0 * (1.0 + a) * s - a),
            ReactionKind::Sawtooth => {
                if let Some(&kink) = SAWTOOTH_KINKS.iter().find(|&&k| s == k) {
                    return Err(Error::Kink { kink });
                }
                Ok(sawtooth_slope(s))
            }
            ReactionKind::Logistic => Ok(1.0 - 2.0 * s),
        }
    }

    /// Derivative that takes the right-hand slope at sawtooth kinks.
    pub(crate) fn deriv_one_sided(self, s: f64) -> f64 {
        match self {
            ReactionKind::Sawtooth => {
                if s == 0.25 {
                    1.0
                } else if s == 0.75 {
                    -1.0
                } else {
                    sawtooth_slope(s)
                }
            }
            other => other.deriv(s).unwrap_or(f64::NAN),
        }
    }

    /// Kink of this reaction at `s`, if any.
    pub fn kink_at(self, s: f64, tol: f64) -> Option<f64> {
        match self {
            ReactionKind::Sawtooth => SAWTOOTH_KINKS.iter().copied().find(|k| (s - k).abs() <= tol),
            _ => None,
        }
    }

    /// Location and value of the maximum on `(0, 1)`.
    pub fn max_unit_interval(self) -> Result<(f64, f64)> {
        match self {
            ReactionKind::CubicAllee { a } => {
                let s = ((1.0 + a) + (a * a - a + 1.0).sqrt()) / 3.0;
                Ok((s, self.eval(s)))
            }
            ReactionKind::Sawtooth => Ok((0.75, 0.25)),
            ReactionKind::Logistic => {
                Err(Error::Unsupported("maximum on (0,1) is only provided for the bistable reactions".into()))
            }
        }
    }

    pub fn label(self) -> String {
        match self {
            ReactionKind::CubicAllee { a } => format!("cubic(a={a})"),
            ReactionKind::Sawtooth => "sawtooth".into(),
            ReactionKind::Logistic => "logistic".into(),
        }
    }
}

fn sawtooth_slope(s: f64) -> f64 {
    if !(0.25..=0.75).contains(&s) {
        -1.0
    } else {
        1.0
    }
}

/// Reaction of each patch. Most callers use the same shape in both patches;
/// `From<ReactionKind>` covers that case.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reactions {
    pub x: ReactionKind,
    pub y: ReactionKind,
}

impl Reactions {
    pub const fn uniform(r: ReactionKind) -> Self {
        Self { x: r, y: r }
    }

    pub const fn new(x: ReactionKind, y: ReactionKind) -> Self {
        Self { x, y }
    }

    /// The common reaction, if both patches share one.
    pub fn common(&self) -> Option<ReactionKind> {
        (self.x == self.y).then_some(self.x)
    }
}

impl From<ReactionKind> for Reactions {
    fn from(r: ReactionKind) -> Self {
        Reactions::uniform(r)
    }
}

/// Dispersal term of the physical system.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Coupling {
    /// `D (x2 - x1)`.
    #[default]
    Standard,
    /// `D (x2/k2 - x1/k1)`.
    Balanced,
}

/// `(lambda1 / D, lambda2 / D, k2 / k1)`.
pub fn normalize(p: &PatchParams) -> NormalizedParams {
    NormalizedParams { alpha: p.lambda1 / p.d, beta: p.lambda2 / p.d, gamma: p.k2 / p.k1 }
}

/// Inverse of [`normalize`] for a chosen diffusion rate and first capacity.
/// Thresholds are set to 1/2.
pub fn denormalize(n: &NormalizedParams, d: f64, k1: f64) -> Result<PatchParams> {
    positive("D", d)?;
    positive("k1", k1)?;
    PatchParams::new(d, n.alpha * d, n.beta * d, k1, n.gamma * k1)
}

/// Right-hand side of the normalized system.
pub fn vector_field(n: &NormalizedParams, r: impl Into<Reactions>, st: State) -> State {
    let r = r.into();
    State::new(n.gamma * st.y - st.x + n.alpha * r.x.eval(st.x), st.x / n.gamma - st.y + n.beta * r.y.eval(st.y))
}

/// Right-hand side of the physical system.
pub fn vector_field_physical(p: &PatchParams, r: impl Into<Reactions>, st: State, coupling: Coupling) -> State {
    let r = r.into();
    let flux = match coupling {
        Coupling::Standard => p.d * (st.y - st.x),
        Coupling::Balanced => p.d * (st.y / p.k2 - st.x / p.k1),
    };
    State::new(flux + p.lambda1 * p.k1 * r.x.eval(st.x / p.k1), -flux + p.lambda2 * p.k2 * r.y.eval(st.y / p.k2))
}

/// A real 2x2 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix2(pub [[f64; 2]; 2]);

impl Matrix2 {
    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn apply(&self, v: State) -> State {
        State::new(self.0[0][0] * v.x + self.0[0][1] * v.y, self.0[1][0] * v.x + self.0[1][1] * v.y)
    }

    /// Solves `M v = rhs`; `None` when singular.
    pub fn solve(&self, rhs: State) -> Option<State> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let [[a, b], [c, d]] = self.0;
        Some(State::new((d * rhs.x - b * rhs.y) / det, (a * rhs.y - c * rhs.x) / det))
    }

    /// Eigenvalues, ordered by real part (ascending).
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let [[a, b], [c, d]] = self.0;
        let half_tr = 0.5 * (a + d);
        // (a - d)^2 / 4 + b c avoids cancellation in tr^2/4 - det
        let disc = 0.25 * (a - d) * (a - d) + b * c;
        if disc >= 0.0 {
            let root = disc.sqrt();
            // larger-magnitude root first, then Vieta for the other
            let big = if half_tr >= 0.0 { half_tr + root } else { half_tr - root };
            let small = if big != 0.0 { self.det() / big } else { 0.0 };
            let (lo, hi) = if big < small { (big, small) } else { (small, big) };
            [Complex64::new(lo, 0.0), Complex64::new(hi, 0.0)]
        } else {
            let im = (-disc).sqrt();
            [Complex64::new(half_tr, -im), Complex64::new(half_tr, im)]
        }
    }
}

/// Jacobian of the normalized system. Fails at a sawtooth kink.
pub fn jacobian(n: &NormalizedParams, r: impl Into<Reactions>, st: State) -> Result<Matrix2> {
    let r = r.into();
    Ok(Matrix2([[-1.0 + n.alpha * r.x.deriv(st.x)?, n.gamma], [1.0 / n.gamma, -1.0 + n.beta * r.y.deriv(st.y)?]]))
}

/// Jacobian with one-sided slopes at kinks, for Newton iterations.
pub(crate) fn jacobian_one_sided(n: &NormalizedParams, r: Reactions, st: State) -> Matrix2 {
    Matrix2([
        [-1.0 + n.alpha * r.x.deriv_one_sided(st.x), n.gamma],
        [1.0 / n.gamma, -1.0 + n.beta * r.y.deriv_one_sided(st.y)],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT3: f64 = 1.732_050_807_568_877_2;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn normalize_examples() {
        let n = normalize(&PatchParams::new(1.0, 6.0, 8.0, 1.0, 0.4).unwrap());
        assert_eq!((n.alpha(), n.beta(), n.gamma()), (6.0, 8.0, 0.4));
        let n = normalize(&PatchParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap());
        assert_eq!((n.alpha(), n.beta(), n.gamma()), (1.0, 1.0, 1.0));
        let n = normalize(&PatchParams::new(4.0, 6.0, 8.0, 3.0, 1.0).unwrap());
        assert_eq!((n.alpha(), n.beta()), (1.5, 2.0));
        assert!(close(n.gamma(), 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn denormalize_examples() {
        let p = denormalize(&NormalizedParams::new(6.0, 8.0, 0.4).unwrap(), 1.0, 1.0).unwrap();
        assert_eq!((p.d(), p.lambda1(), p.lambda2(), p.k1(), p.k2()), (1.0, 6.0, 8.0, 1.0, 0.4));
        let p = denormalize(&NormalizedParams::new(1.0, 1.0, 1.0).unwrap(), 2.0, 5.0).unwrap();
        assert_eq!((p.d(), p.lambda1(), p.lambda2(), p.k1(), p.k2()), (2.0, 2.0, 2.0, 5.0, 5.0));
        let n = NormalizedParams::new(1.5, 2.0, 1.0 / 3.0).unwrap();
        let p = denormalize(&n, 4.0, 3.0).unwrap();
        assert_eq!((p.d(), p.lambda1(), p.lambda2(), p.k1()), (4.0, 6.0, 8.0, 3.0));
        assert!(close(p.k2(), 1.0, 1e-15));
        assert!(denormalize(&n, 0.0, 1.0).is_err());
        assert!(denormalize(&n, 1.0, -1.0).is_err());
    }

    #[test]
    fn constructor_canonicalizes_patch_order() {
        let p = PatchParams::with_viability(1.0, 2.0, 3.0, 0.5, 2.0, 0.3, 0.6).unwrap();
        assert!(p.swapped());
        assert_eq!((p.k1(), p.k2()), (2.0, 0.5));
        assert_eq!((p.lambda1(), p.lambda2()), (3.0, 2.0));
        assert_eq!((p.a1(), p.a2()), (0.6, 0.3));
        assert!(!PatchParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap().swapped());
        assert!(PatchParams::new(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(PatchParams::with_viability(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.5).is_err());
        assert!(NormalizedParams::new(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn reaction_values() {
        let f = ReactionKind::CUBIC_HALF;
        for s in [0.0, 0.5, 1.0] {
            assert_eq!(f.eval(s), 0.0);
        }
        let s = (3.0 + SQRT3) / 6.0;
        assert!(close(f.eval(s), SQRT3 / 36.0, 1e-15));
        let saw = ReactionKind::Sawtooth;
        for s in [0.0, 0.5, 1.0] {
            assert_eq!(saw.eval(s), 0.0);
        }
        assert_eq!(saw.eval(0.75), 0.25);
        assert_eq!(saw.eval(0.25), -0.25);
        assert_eq!(ReactionKind::Logistic.eval(0.5), 0.25);
        let a = ReactionKind::cubic(0.3).unwrap();
        assert_eq!((a.eval(0.0), a.eval(0.3), a.eval(1.0)), (0.0, 0.0, 0.0));
    }

    #[test]
    fn reaction_derivatives() {
        let f = ReactionKind::CUBIC_HALF;
        assert_eq!(f.deriv(0.0).unwrap(), -0.5);
        for s in [(3.0 - SQRT3) / 6.0, (3.0 + SQRT3) / 6.0] {
            assert!(f.deriv(s).unwrap().abs() < 1e-15);
        }
        assert_eq!(ReactionKind::Sawtooth.deriv(0.5).unwrap(), 1.0);
        assert_eq!(ReactionKind::Sawtooth.deriv(0.1).unwrap(), -1.0);
        match ReactionKind::Sawtooth.deriv(0.75) {
            Err(Error::Kink { kink }) => assert_eq!(kink, 0.75),
            other => panic!("expected kink error, got {other:?}"),
        }
    }

    #[test]
    fn reaction_maximum() {
        let (s, v) = ReactionKind::CUBIC_HALF.max_unit_interval().unwrap();
        assert!(close(s, (3.0 + SQRT3) / 6.0, 1e-15));
        assert!((v - SQRT3 / 36.0).abs() < 1e-14);
        assert_eq!(ReactionKind::Sawtooth.max_unit_interval().unwrap(), (0.75, 0.25));
        assert!(ReactionKind::Logistic.max_unit_interval().is_err());

        // brute-force grid maximum for a = 0.3
        let r = ReactionKind::cubic(0.3).unwrap();
        let (_, v) = r.max_unit_interval().unwrap();
        let n = 1_000_000;
        let grid_max = (1..n).map(|i| r.eval(i as f64 / n as f64)).fold(f64::MIN, f64::max);
        assert!((v - grid_max).abs() < 1e-10, "{v} vs {grid_max}");
        assert!(v >= grid_max);
    }

    #[test]
    fn vector_field_examples() {
        let n = NormalizedParams::new(3.0, 7.0, 0.25).unwrap();
        for r in [ReactionKind::CUBIC_HALF, ReactionKind::Sawtooth, ReactionKind::Logistic] {
            assert_eq!(vector_field(&n, r, State::ORIGIN), State::ORIGIN);
        }
        let n = NormalizedParams::new(2.5, 2.5, 1.0).unwrap();
        assert_eq!(vector_field(&n, ReactionKind::CUBIC_HALF, State::new(1.0, 1.0)), State::ORIGIN);
        let n = NormalizedParams::new(6.0, 8.0, 0.5).unwrap();
        assert_eq!(vector_field(&n, ReactionKind::CUBIC_HALF, State::new(0.5, 1.0)), State::ORIGIN);
    }

    #[test]
    fn physical_field_examples() {
        let p = PatchParams::new(1.3, 2.0, 2.0, 1.7, 1.7).unwrap();
        let r = ReactionKind::CUBIC_HALF;
        assert_eq!(vector_field_physical(&p, r, State::ORIGIN, Coupling::Standard), State::ORIGIN);
        let v = vector_field_physical(&p, r, State::new(1.7, 1.7), Coupling::Standard);
        assert!(v.max_abs() < 1e-15);
        let p = PatchParams::new(3.0, 2.0, 0.7, 2.0, 0.5).unwrap();
        let v = vector_field_physical(&p, ReactionKind::Logistic, State::new(2.0, 0.5), Coupling::Balanced);
        assert_eq!(v, State::ORIGIN);
    }

    #[test]
    fn jacobian_at_origin() {
        let n = NormalizedParams::new(1.5, 3.0, 0.4).unwrap();
        let j = jacobian(&n, ReactionKind::CUBIC_HALF, State::ORIGIN).unwrap();
        assert_eq!(j.0, [[-1.75, 0.4], [2.5, -2.5]]);
        assert!(j.trace() < 0.0);
        assert!((j.det() - (1.75 * 2.5 - 1.0)).abs() < 1e-14);
        assert!(jacobian(&n, ReactionKind::Sawtooth, State::new(0.25, 0.1)).is_err());
    }

    #[test]
    fn eigenvalues_match_characteristic_polynomial() {
        let m = Matrix2([[1.0, 2.0], [3.0, 4.0]]);
        let [l1, l2] = m.eigenvalues();
        let s = 33f64.sqrt();
        assert!(close(l1.re, (5.0 - s) / 2.0, 1e-14));
        assert!(close(l2.re, (5.0 + s) / 2.0, 1e-14));
        let rot = Matrix2([[-0.5, -2.0], [2.0, -0.5]]);
        let [c1, c2] = rot.eigenvalues();
        assert_eq!((c1.re, c2.re), (-0.5, -0.5));
        assert_eq!((c1.im, c2.im), (-2.0, 2.0));
    }
}
