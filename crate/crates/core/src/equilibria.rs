//! Stationary solutions of the normalized system.
//!
//! Equilibria are intersections of the nullclines
//!
//! ```text
//! N_x: y = (x - alpha f(x)) / gamma          =: nu_x(x)
//! N_y: gamma y - x - gamma beta f(y) = 0
//! ```
//!
//! Substituting `y = nu_x(x)` into the second relation leaves a scalar function
//! `g(x)` whose roots are scanned on a uniform grid, bracketed and bisected,
//! then polished by a damped Newton iteration on the full planar system. Every
//! nontrivial nonnegative equilibrium has `x` in `(0, 1)`, so the scan window
//! defaults to `[-1e-9, 1 + 1e-9]`.
//!
//! [`oracle::brute_force_equilibria`] is an independent two-dimensional grid
//! search used to cross-check the scan.

use std::fmt;

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::model::{jacobian_one_sided, vector_field, Matrix2, NormalizedParams, Reactions, State};

/// Real parts smaller than this in magnitude are treated as zero.
pub const NONHYPERBOLIC_TOL: f64 = 1e-9;

/// Points with a component below `-NONNEGATIVE_TOL` are discarded.
pub const NONNEGATIVE_TOL: f64 = 1e-12;

/// Minimum of `|g|` between two grid nodes below which a missed tangency is reported.
const TANGENCY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Number of scan subintervals of `x_window`.
    pub bracket_grid: usize,
    /// Bisection stops once the bracket is shorter than this.
    pub root_tol: f64,
    /// Roots closer than this are merged.
    pub dedup_tol: f64,
    pub x_window: (f64, f64),
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { bracket_grid: 20_000, root_tol: 1e-12, dedup_tol: 1e-8, x_window: (-1e-9, 1.0 + 1e-9) }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.bracket_grid < 1000 {
            return Err(domain(format!("bracket_grid must be at least 1000, got {}", self.bracket_grid)));
        }
        if !(self.root_tol > 0.0 && self.root_tol < self.dedup_tol) {
            return Err(domain(format!(
                "tolerances must satisfy 0 < root_tol < dedup_tol, got {} and {}",
                self.root_tol, self.dedup_tol
            )));
        }
        let (lo, hi) = self.x_window;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(domain(format!("x_window must be a finite interval, got [{lo}, {hi}]")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stability {
    StableNode,
    StableFocus,
    Saddle,
    UnstableNode,
    UnstableFocus,
    Nonhyperbolic,
}

impl Stability {
    pub fn is_stable(self) -> bool {
        matches!(self, Stability::StableNode | Stability::StableFocus)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stability::StableNode => "stable-node",
            Stability::StableFocus => "stable-focus",
            Stability::Saddle => "saddle",
            Stability::UnstableNode => "unstable-node",
            Stability::UnstableFocus => "unstable-focus",
            Stability::Nonhyperbolic => "nonhyperbolic",
        }
    }
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A priori location regions for `gamma < 1/2`. `Omega1`/`Omega2` are the
/// refined subsets of `OmegaHat1`/`OmegaHat2` valid when `alpha, beta < 4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    Origin,
    Omega1,
    Omega2,
    OmegaHat1,
    OmegaHat2,
    OmegaHat3,
    Other,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Origin => "origin",
            Region::Omega1 => "Omega1",
            Region::Omega2 => "Omega2",
            Region::OmegaHat1 => "OmegaHat1",
            Region::OmegaHat2 => "OmegaHat2",
            Region::OmegaHat3 => "OmegaHat3",
            Region::Other => "other",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Linearization verdict at a stationary point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityInfo {
    pub eigenvalues: [Complex64; 2],
    pub stability: Stability,
    /// The point sits on a sawtooth kink; eigenvalues use one-sided slopes.
    pub kink: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Equilibrium {
    pub point: State,
    pub eigenvalues: [Complex64; 2],
    pub stability: Stability,
    pub region: Region,
    pub kink: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolverWarning {
    /// Two sign changes closer than `dedup_tol` were merged into one root.
    DegenerateRoots { x1: f64, x2: f64 },
    /// `|g|` nearly vanishes between grid nodes without changing sign.
    NearTangency { x: f64, residual: f64 },
    /// Newton polishing moved the point too far or did not reduce the residual.
    PolishRejected { x: f64 },
}

impl fmt::Display for SolverWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverWarning::DegenerateRoots { x1, x2 } => {
                write!(f, "degenerate roots: x = {x1:.16e} and x = {x2:.16e} cannot be separated")
            }
            SolverWarning::NearTangency { x, residual } => {
                write!(f, "near-tangent nullclines at x = {x:.16e} (|g| = {residual:.3e})")
            }
            SolverWarning::PolishRejected { x } => write!(f, "Newton polish rejected at x = {x:.16e}"),
        }
    }
}

/// Result of [`find_equilibria`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EquilibriumSet {
    /// Sorted by `x`, then `y`. Always contains the origin.
    pub equilibria: Vec<Equilibrium>,
    pub warnings: Vec<SolverWarning>,
}

impl EquilibriumSet {
    pub fn len(&self) -> usize {
        self.equilibria.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equilibria.is_empty()
    }

    pub fn points(&self) -> Vec<State> {
        self.equilibria.iter().map(|e| e.point).collect()
    }

    /// True when some root could not be resolved reliably.
    pub fn is_degenerate(&self) -> bool {
        self.warnings
            .iter()
            .any(|w| matches!(w, SolverWarning::DegenerateRoots { .. } | SolverWarning::NearTangency { .. }))
    }
}

/// `nu_x(x) = (x - alpha f(x)) / gamma`.
pub fn nullcline_x(n: &NormalizedParams, r: impl Into<Reactions>, x: f64) -> f64 {
    let r = r.into();
    (x - n.alpha() * r.x.eval(x)) / n.gamma()
}

/// `gamma y - x - gamma beta f(y)`; zero exactly on `N_y`.
pub fn nullcline_y_residual(n: &NormalizedParams, r: impl Into<Reactions>, st: State) -> f64 {
    let r = r.into();
    n.gamma() * st.y - st.x - n.gamma() * n.beta() * r.y.eval(st.y)
}

fn reduced(n: &NormalizedParams, r: Reactions, x: f64) -> f64 {
    nullcline_y_residual(n, r, State::new(x, nullcline_x(n, r, x)))
}

fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut g_lo: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = g(mid);
        if g_mid == 0.0 {
            return mid;
        }
        if (g_mid < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimization of `h` on `[a, b]`.
fn golden_min(h: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut hc, mut hd) = (h(c), h(d));
    for _ in 0..80 {
        if hc < hd {
            b = d;
            d = c;
            hd = hc;
            c = b - INV_PHI * (b - a);
            hc = h(c);
        } else {
            a = c;
            c = d;
            hc = hd;
            d = a + INV_PHI * (b - a);
            hd = h(d);
        }
    }
    if hc < hd {
        (c, hc)
    } else {
        (d, hd)
    }
}

/// Damped Newton iteration on the planar field.
pub(crate) fn newton_polish(n: &NormalizedParams, r: Reactions, start: State) -> State {
    let mut st = start;
    let mut res = vector_field(n, r, st).max_abs();
    for _ in 0..60 {
        if res == 0.0 {
            break;
        }
        let f = vector_field(n, r, st);
        let Some(step) = jacobian_one_sided(n, r, st).solve(f) else { break };
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let trial = st - lambda * step;
            let trial_res = vector_field(n, r, trial).max_abs();
            if trial.is_finite() && trial_res < res {
                st = trial;
                res = trial_res;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved || step.max_abs() * lambda <= 1e-17 * (1.0 + st.max_abs()) {
            break;
        }
    }
    st
}

/// All nonnegative equilibria, classified and located.
pub fn find_equilibria(n: &NormalizedParams, r: impl Into<Reactions>, opts: &SolverOptions) -> Result<EquilibriumSet> {
    opts.validate()?;
    let r = r.into();
    let g = |x: f64| reduced(n, r, x);
    let (lo, hi) = opts.x_window;
    let m = opts.bracket_grid;
    let xs: Vec<f64> = (0..=m).map(|i| lo + (hi - lo) * (i as f64 / m as f64)).collect();
    let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();

    let mut warnings = Vec::new();
    let mut roots = Vec::new();
    for i in 0..=m {
        if gs[i] == 0.0 {
            roots.push(xs[i]);
            continue;
        }
        if i < m && gs[i + 1] != 0.0 && (gs[i] < 0.0) != (gs[i + 1] < 0.0) {
            roots.push(bisect(g, xs[i], xs[i + 1], gs[i], opts.root_tol));
        }
        // a local minimum of |g| may hide a pair of roots between nodes
        if i > 0 && i < m {
            let (a, b, c) = (gs[i - 1], gs[i], gs[i + 1]);
            let same_sign = a != 0.0 && c != 0.0 && (a < 0.0) == (b < 0.0) && (b < 0.0) == (c < 0.0);
            if same_sign && b.abs() <= a.abs() && b.abs() < c.abs() {
                let s = b.signum();
                let (xm, hm) = golden_min(|x| s * g(x), xs[i - 1], xs[i + 1]);
                if hm < 0.0 {
                    roots.push(bisect(g, xs[i - 1], xm, a, opts.root_tol));
                    roots.push(bisect(g, xm, xs[i + 1], hm, opts.root_tol));
                } else if hm < TANGENCY_TOL {
                    warnings.push(SolverWarning::NearTangency { x: xm, residual: hm });
                }
            }
        }
    }
    roots.sort_by(f64::total_cmp);

    let mut merged: Vec<f64> = Vec::with_capacity(roots.len());
    for x in roots {
        match merged.last() {
            Some(&prev) if x - prev < opts.dedup_tol => {
                warnings.push(SolverWarning::DegenerateRoots { x1: prev, x2: x });
            }
            _ => merged.push(x),
        }
    }

    let mut points = vec![State::ORIGIN];
    for x in merged {
        let rough = State::new(x, nullcline_x(n, r, x));
        let polished = newton_polish(n, r, rough);
        let st = if polished.distance(rough) < 1e-6
            && vector_field(n, r, polished).max_abs() <= vector_field(n, r, rough).max_abs()
        {
            polished
        } else {
            warnings.push(SolverWarning::PolishRejected { x });
            rough
        };
        if st.x < -NONNEGATIVE_TOL || st.y < -NONNEGATIVE_TOL {
            continue;
        }
        if st.max_abs() < opts.dedup_tol {
            continue;
        }
        if let Some(p) = points.iter().find(|p| p.distance(st) < opts.dedup_tol) {
            warnings.push(SolverWarning::DegenerateRoots { x1: p.x, x2: st.x });
            continue;
        }
        points.push(st);
    }
    points.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));

    let equilibria = points.into_iter().map(|p| equilibrium_at(n, r, p)).collect();
    Ok(EquilibriumSet { equilibria, warnings })
}

pub(crate) fn equilibrium_at(n: &NormalizedParams, r: Reactions, point: State) -> Equilibrium {
    let info = classify_stability(n, r, point);
    Equilibrium {
        point,
        eigenvalues: info.eigenvalues,
        stability: info.stability,
        region: locate_region(point, n.gamma()),
        kink: info.kink,
    }
}

/// Eigenvalues of the Jacobian and the resulting stability type.
pub fn classify_stability(n: &NormalizedParams, r: impl Into<Reactions>, e: State) -> StabilityInfo {
    let r = r.into();
    let kink = r.x.kink_at(e.x, 1e-12).is_some() || r.y.kink_at(e.y, 1e-12).is_some();
    let eigenvalues = jacobian_one_sided(n, r, e).eigenvalues();
    let stability = if kink { Stability::Nonhyperbolic } else { stability_of(&eigenvalues) };
    StabilityInfo { eigenvalues, stability, kink }
}

fn stability_of(ev: &[Complex64; 2]) -> Stability {
    if ev.iter().any(|l| l.re.abs() < NONHYPERBOLIC_TOL) {
        return Stability::Nonhyperbolic;
    }
    let complex = ev.iter().any(|l| l.im != 0.0);
    match (ev[0].re < 0.0, ev[1].re < 0.0) {
        (true, true) if complex => Stability::StableFocus,
        (true, true) => Stability::StableNode,
        (false, false) if complex => Stability::UnstableFocus,
        (false, false) => Stability::UnstableNode,
        _ => Stability::Saddle,
    }
}

/// Stability of the Jacobian `m` itself, for callers holding a matrix.
pub fn stability_of_matrix(m: &Matrix2) -> Stability {
    stability_of(&m.eigenvalues())
}

/// Region label. Subsets are reported before the sets containing them.
pub fn locate_region(e: State, gamma: f64) -> Region {
    if e.max_abs() <= NONNEGATIVE_TOL {
        return Region::Origin;
    }
    if !(gamma > 0.0 && gamma < 0.5) {
        return Region::Other;
    }
    let (x, y) = (e.x, e.y);
    let open = |v: f64, a: f64, b: f64| v > a && v < b;
    if open(x, gamma / 2.0, gamma) && open(y, x / gamma, 1.0) {
        Region::Omega1
    } else if open(x, 0.5, 1.0) && open(y, 0.5 / gamma, x / gamma) {
        Region::Omega2
    } else if open(x, 0.0, gamma) && open(y, 0.5, 1.0) && y > x / gamma {
        Region::OmegaHat1
    } else if open(x, 0.5, 1.0) && open(y, 1.0, x / gamma) {
        Region::OmegaHat2
    } else if open(x, 0.5, 1.0) && open(y, 0.0, 0.5) {
        Region::OmegaHat3
    } else {
        Region::Other
    }
}

/// Coefficients (ascending powers) of the degree-9 polynomial `g(x)` obtained
/// for the cubic reaction with threshold `a`. Intended as a cross-check of the
/// scan; root finding does not use it.
pub fn reduced_polynomial(n: &NormalizedParams, a: f64) -> Vec<f64> {
    let (al, be, ga) = (n.alpha(), n.beta(), n.gamma());
    // f(s) = -s^3 + (1 + a) s^2 - a s
    let nu = [0.0, (1.0 + al * a) / ga, -al * (1.0 + a) / ga, al / ga];
    let nu2 = poly_mul(&nu, &nu);
    let nu3 = poly_mul(&nu2, &nu);
    let mut g = vec![0.0; 10];
    for (i, c) in nu.iter().enumerate() {
        g[i] += ga * c + ga * be * a * c;
    }
    g[1] -= 1.0;
    for (i, c) in nu2.iter().enumerate() {
        g[i] -= ga * be * (1.0 + a) * c;
    }
    for (i, c) in nu3.iter().enumerate() {
        g[i] += ga * be * c;
    }
    g
}

fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// Horner evaluation of ascending coefficients.
pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

pub mod oracle {
    //! Two-dimensional grid search for equilibria, independent of the
    //! nullcline reduction used by [`super::find_equilibria`].

    use crate::model::{vector_field, Matrix2, NormalizedParams, Reactions, State};

    /// Default grid resolution per axis.
    pub const DEFAULT_GRID: usize = 2000;

    const MARGIN: f64 = 1e-6;

    /// Scans `[0, 1 + eps] x [0, 1/gamma + eps]` on an `grid x grid` lattice,
    /// flags cells across which both components of the field change sign,
    /// and runs a Newton iteration (finite-difference Jacobian) from each
    /// flagged cell. Returns distinct nonnegative roots sorted by `x`, `y`.
    pub fn brute_force_equilibria(n: &NormalizedParams, r: impl Into<Reactions>, grid: usize) -> Vec<State> {
        let r = r.into();
        let x_max = 1.0 + MARGIN;
        let y_max = 1.0 / n.gamma() + MARGIN;
        let hx = x_max / grid as f64;
        let hy = y_max / grid as f64;

        let row = |j: usize| -> Vec<State> {
            let y = j as f64 * hy;
            (0..=grid).map(|i| vector_field(n, r, State::new(i as f64 * hx, y))).collect()
        };
        let mut seeds = Vec::new();
        let mut below = row(0);
        for j in 0..grid {
            let above = row(j + 1);
            for i in 0..grid {
                let corners = [below[i], below[i + 1], above[i], above[i + 1]];
                if straddles(corners.iter().map(|c| c.x)) && straddles(corners.iter().map(|c| c.y)) {
                    seeds.push(State::new((i as f64 + 0.5) * hx, (j as f64 + 0.5) * hy));
                }
            }
            below = above;
        }

        let mut roots: Vec<State> = Vec::new();
        for seed in seeds {
            let Some(root) = newton_fd(n, r, seed) else { continue };
            if root.x < -1e-12 || root.y < -1e-12 || root.x > x_max || root.y > y_max {
                continue;
            }
            if roots.iter().all(|p| p.distance(root) > 1e-7) {
                roots.push(root);
            }
        }
        roots.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        roots
    }

    fn straddles(vals: impl Iterator<Item = f64>) -> bool {
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        lo <= 0.0 && hi >= 0.0
    }

    fn fd_jacobian(n: &NormalizedParams, r: Reactions, st: State) -> Matrix2 {
        let h = 1e-7;
        let dx = State::new(h, 0.0);
        let dy = State::new(0.0, h);
        let cx = (1.0 / (2.0 * h)) * (vector_field(n, r, st + dx) - vector_field(n, r, st - dx));
        let cy = (1.0 / (2.0 * h)) * (vector_field(n, r, st + dy) - vector_field(n, r, st - dy));
        Matrix2([[cx.x, cy.x], [cx.y, cy.y]])
    }

    fn newton_fd(n: &NormalizedParams, r: Reactions, seed: State) -> Option<State> {
        let mut st = seed;
        let mut res = vector_field(n, r, st).max_abs();
        for _ in 0..100 {
            if res < 1e-14 {
                break;
            }
            let step = fd_jacobian(n, r, st).solve(vector_field(n, r, st))?;
            let mut lambda = 1.0;
            loop {
                let trial = st - lambda * step;
                let trial_res = vector_field(n, r, trial).max_abs();
                if trial.is_finite() && trial_res < res {
                    st = trial;
                    res = trial_res;
                    break;
                }
                lambda *= 0.5;
                if lambda < 1e-12 {
                    return (res < 1e-11).then_some(st);
                }
            }
        }
        (res < 1e-11).then_some(st)
    }
}
