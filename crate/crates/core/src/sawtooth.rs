//! Exact equilibria of the normalized system with the sawtooth reaction.
//!
//! The sawtooth is affine on each of `(-inf, 1/4)`, `(1/4, 3/4)` and
//! `(3/4, inf)`, so on each of the nine products of pieces the stationarity
//! conditions form a 2x2 linear system. A solution counts when it falls inside
//! its own piece rectangle (closed, so breakpoint solutions are kept; the
//! reaction is continuous there) and is nonnegative.

use crate::cartography::{self, Axis, Classifier, Plane, RegionMap, SweepSpec};
use std::fmt;

use crate::certificates::{CertificateId, CertificateVerdict, Condition};
use crate::equilibria::{equilibrium_at, Equilibrium};
use crate::error::{domain, Result};
use crate::model::{Matrix2, NormalizedParams, ReactionKind, Reactions, State};

const INSIDE_TOL: f64 = 1e-12;
const SINGULAR_TOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Piece {
    Low,
    Mid,
    High,
}

impl Piece {
    pub const ALL: [Piece; 3] = [Piece::Low, Piece::Mid, Piece::High];

    /// `(slope, intercept)` of the affine piece.
    pub fn affine(self) -> (f64, f64) {
        match self {
            Piece::Low => (-1.0, 0.0),
            Piece::Mid => (1.0, -0.5),
            Piece::High => (-1.0, 1.0),
        }
    }

    pub fn range(self) -> (f64, f64) {
        match self {
            Piece::Low => (f64::NEG_INFINITY, 0.25),
            Piece::Mid => (0.25, 0.75),
            Piece::High => (0.75, f64::INFINITY),
        }
    }

    fn contains(self, s: f64) -> bool {
        let (lo, hi) = self.range();
        s >= lo - INSIDE_TOL && s <= hi + INSIDE_TOL
    }
}

/// A product of pieces for `x` and `y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PieceCell {
    pub px: Piece,
    pub py: Piece,
}

impl PieceCell {
    pub fn all() -> impl Iterator<Item = PieceCell> {
        Piece::ALL.into_iter().flat_map(|px| Piece::ALL.into_iter().map(move |py| PieceCell { px, py }))
    }

    /// `(x-range, y-range)` of the open box.
    pub fn rectangle(&self) -> ((f64, f64), (f64, f64)) {
        (self.px.range(), self.py.range())
    }

    /// Coefficient matrix and right-hand side of the cell's stationarity system.
    fn system(&self, n: &NormalizedParams) -> (Matrix2, State) {
        let (mx, cx) = self.px.affine();
        let (my, cy) = self.py.affine();
        let (a, b, g) = (n.alpha(), n.beta(), n.gamma());
        (Matrix2([[a * mx - 1.0, g], [1.0 / g, b * my - 1.0]]), State::new(-a * cx, -b * cy))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SawtoothWarning {
    /// The cell's system is singular and consistent: a segment of equilibria
    /// crosses the cell.
    DegenerateFamily { cell: PieceCell },
}

impl fmt::Display for SawtoothWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SawtoothWarning::DegenerateFamily { cell } => {
                write!(f, "segment of equilibria in the {:?}/{:?} piece cell", cell.px, cell.py)
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SawtoothEquilibria {
    /// Sorted by `x`, then `y`; breakpoint solutions carry `kink = true`.
    pub equilibria: Vec<Equilibrium>,
    pub warnings: Vec<SawtoothWarning>,
}

impl SawtoothEquilibria {
    pub fn len(&self) -> usize {
        self.equilibria.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equilibria.is_empty()
    }

    pub fn points(&self) -> Vec<State> {
        self.equilibria.iter().map(|e| e.point).collect()
    }

    pub fn is_degenerate(&self) -> bool {
        !self.warnings.is_empty()
    }

    /// Smallest distance of any equilibrium coordinate to a breakpoint.
    pub fn breakpoint_distance(&self) -> f64 {
        self.equilibria
            .iter()
            .flat_map(|e| [e.point.x, e.point.y])
            .flat_map(|s| [(s - 0.25).abs(), (s - 0.75).abs()])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Enumerates all nonnegative equilibria piece by piece.
pub fn sawtooth_equilibria_exact(n: &NormalizedParams) -> SawtoothEquilibria {
    let reactions = Reactions::uniform(ReactionKind::Sawtooth);
    let mut points: Vec<State> = Vec::new();
    let mut warnings = Vec::new();
    for cell in PieceCell::all() {
        let (m, rhs) = cell.system(n);
        if m.det().abs() < SINGULAR_TOL {
            if consistent_family_crosses(&m, rhs, cell, n) {
                warnings.push(SawtoothWarning::DegenerateFamily { cell });
            }
            continue;
        }
        let Some(p) = m.solve(rhs) else { continue };
        if !(cell.px.contains(p.x) && cell.py.contains(p.y)) {
            continue;
        }
        if p.x < -INSIDE_TOL || p.y < -INSIDE_TOL {
            continue;
        }
        // the origin comes out of the low/low cell as signed zeros
        let p = if p.max_abs() <= INSIDE_TOL { State::ORIGIN } else { p };
        if points.iter().all(|q| q.distance(p) > 1e-9) {
            points.push(p);
        }
    }
    points.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    let equilibria = points.into_iter().map(|p| equilibrium_at(n, reactions, p)).collect();
    SawtoothEquilibria { equilibria, warnings }
}

fn consistent_family_crosses(m: &Matrix2, rhs: State, cell: PieceCell, n: &NormalizedParams) -> bool {
    let [[a, b], [c, d]] = m.0;
    let scale = 1.0 + a.abs().max(b.abs()).max(c.abs()).max(d.abs()) * (1.0 + rhs.max_abs());
    let consistent = (a * rhs.y - c * rhs.x).abs() < 1e-12 * scale && (b * rhs.y - d * rhs.x).abs() < 1e-12 * scale;
    if !consistent {
        return false;
    }
    // clip the cell to the nonnegative box that can hold equilibria
    let ((x0, x1), (y0, y1)) = cell.rectangle();
    let (x0, x1) = (x0.max(0.0), x1.min(1.0 + 1e-9));
    let (y0, y1) = (y0.max(0.0), y1.min(1.0 / n.gamma() + 1.0));
    if x0 > x1 || y0 > y1 {
        return false;
    }
    let line = |x: f64, y: f64| a * x + b * y - rhs.x;
    let vals = [line(x0, y0), line(x0, y1), line(x1, y0), line(x1, y1)];
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    lo <= 0.0 && hi >= 0.0
}

fn predicate_parts(n: &NormalizedParams) -> Result<(f64, bool, f64)> {
    let g = n.gamma();
    if !(g > 0.0 && g < 0.5) {
        return Err(domain(format!("sawtooth predicate needs gamma in (0, 1/2), got {g}")));
    }
    let (a, b) = (n.alpha(), n.beta());
    let first = a * (b + 1.0) + b * (4.0 * g - 3.0);
    let upper_branch = a >= 3.0 * g - 1.0;
    // both second-condition forms are rewritten as "expr < 0"
    let second = if upper_branch { a * b - 3.0 * a + b } else { -(a * (2.0 - 3.0 * g) + b * g * (a - 1.0)) };
    Ok((first, upper_branch, second))
}

/// Exact condition for the origin to be the only equilibrium:
/// `alpha (beta + 1) + beta (4 gamma - 3) < 0` and, depending on the sign of
/// `alpha - (3 gamma - 1)`, either `alpha beta - 3 alpha + beta < 0` or
/// `alpha (2 - 3 gamma) + beta gamma (alpha - 1) > 0`.
pub fn thm_sawtooth_predicate(n: &NormalizedParams) -> Result<bool> {
    let (first, _, second) = predicate_parts(n)?;
    Ok(first < 0.0 && second < 0.0)
}

/// [`thm_sawtooth_predicate`] with its two conditions spelled out.
pub fn check_sawtooth_predicate(n: &NormalizedParams) -> Result<CertificateVerdict> {
    let (first, upper_branch, second) = predicate_parts(n)?;
    let second_name = if upper_branch {
        "alpha beta - 3 alpha + beta < 0 (alpha >= 3 gamma - 1)"
    } else {
        "-(alpha (2 - 3 gamma) + beta gamma (alpha - 1)) < 0 (alpha < 3 gamma - 1)"
    };
    let conditions = vec![
        Condition::less("alpha (beta + 1) + beta (4 gamma - 3) < 0", first, 0.0),
        Condition::less(second_name, second, 0.0),
    ];
    let bounds = vec![("boundary_distance".to_string(), predicate_boundary_distance(n)?)];
    Ok(CertificateVerdict::new(CertificateId::SawtoothPredicate, conditions, bounds))
}

/// Distance (in the predicate's expressions) to the nearest boundary where
/// the predicate can switch.
pub fn predicate_boundary_distance(n: &NormalizedParams) -> Result<f64> {
    let (first, _, second) = predicate_parts(n)?;
    let branch = (n.alpha() - (3.0 * n.gamma() - 1.0)).abs();
    Ok(first.abs().min(second.abs()).min(branch))
}

/// Exact equilibrium counts over an `(alpha, beta)` grid at fixed `gamma`,
/// with the predicate overlaid.
pub fn sawtooth_region_counts(gamma: f64, alpha: Axis, beta: Axis) -> Result<RegionMap> {
    let spec = SweepSpec {
        plane: Plane::Normalized { gamma },
        x_axis: alpha,
        y_axis: beta,
        reaction: ReactionKind::Sawtooth,
        classifier: Classifier::SawtoothExact,
        overlays: vec![CertificateId::SawtoothPredicate],
    };
    cartography::run_sweep(&spec)
}
