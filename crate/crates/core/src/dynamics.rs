//! Time integration, convergence detection and trajectory-level experiments.
//!
//! Two integrators are available: classical fixed-step RK4 and the adaptive
//! Dormand-Prince 5(4) pair. A trajectory is declared converged once its
//! state has moved less than `convergence_radius` over `stall_window` time
//! units and the vector field there is below `residual_tol`; the residual
//! test keeps trajectories that crawl past a saddle from being mistaken for
//! converged ones.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::certificates::{check_thm_main, perfect_mixing_capacity};
use crate::error::{domain, Result};
use crate::model::{
    vector_field, vector_field_physical, Coupling, Matrix2, NormalizedParams, PatchParams, ReactionKind, Reactions,
    State,
};

/// Smallest step the adaptive integrator may take before giving up.
pub const MIN_STEP: f64 = 1e-14;
/// States beyond this magnitude count as blow-up.
pub const BLOWUP: f64 = 1e8;
/// Distance within which a terminal state is attributed to an equilibrium.
pub const ATTRIBUTION_RADIUS: f64 = 1e-6;

/// An autonomous planar system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum System {
    Normalized {
        params: NormalizedParams,
        reactions: Reactions,
    },
    Physical {
        params: PatchParams,
        reactions: Reactions,
        coupling: Coupling,
    },
    /// `s' = A s`.
    Linear(Matrix2),
}

impl System {
    pub fn normalized(params: NormalizedParams, reactions: impl Into<Reactions>) -> Self {
        System::Normalized { params, reactions: reactions.into() }
    }

    /// Physical system with reaction shapes taken from the per-patch thresholds of `params`.
    pub fn physical(params: PatchParams, shape: ReactionKind, coupling: Coupling) -> Self {
        System::Physical { params, reactions: params.reactions(shape), coupling }
    }

    pub fn rhs(&self, s: State) -> State {
        match self {
            System::Normalized { params, reactions } => vector_field(params, *reactions, s),
            System::Physical { params, reactions, coupling } => vector_field_physical(params, *reactions, s, *coupling),
            System::Linear(m) => m.apply(s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    Rk4 { step: f64 },
    Rk45 { rel_tol: f64, abs_tol: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorOptions {
    pub method: Method,
    pub t_max: f64,
    pub convergence_radius: f64,
    pub stall_window: f64,
    pub residual_tol: f64,
    /// Keep every accepted step; otherwise only the endpoints are stored.
    pub record: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            method: Method::Rk45 { rel_tol: 1e-9, abs_tol: 1e-12 },
            t_max: 1e4,
            convergence_radius: 1e-8,
            stall_window: 10.0,
            residual_tol: 1e-6,
            record: true,
        }
    }
}

impl IntegratorOptions {
    pub fn rk4(step: f64) -> Self {
        Self { method: Method::Rk4 { step }, ..Self::default() }
    }

    /// Fixed-horizon integration: convergence detection is switched off.
    pub fn fixed_horizon(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self.stall_window = f64::INFINITY;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            Method::Rk4 { step } if !(step > 0.0 && step.is_finite()) => {
                return Err(domain(format!("step must be positive, got {step}")));
            }
            Method::Rk45 { rel_tol, abs_tol } if !(rel_tol > 0.0 && abs_tol > 0.0) => {
                return Err(domain("tolerances must be positive"));
            }
            _ => {}
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(domain(format!("t_max must be positive, got {}", self.t_max)));
        }
        if !(self.convergence_radius > 0.0 && self.stall_window > 0.0 && self.residual_tol > 0.0) {
            return Err(domain("convergence radius, stall window and residual tolerance must be positive"));
        }
        Ok(())
    }

    /// Scale of the error the integrator is allowed to commit on `scale`-sized states.
    pub fn tolerance(&self, scale: f64) -> f64 {
        match self.method {
            Method::Rk45 { rel_tol, abs_tol } => abs_tol + rel_tol * scale,
            Method::Rk4 { .. } => 1e-10 * scale.max(1.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Terminal {
    ConvergedTo(State),
    TMaxReached,
    Diverged { reason: String },
}

impl Terminal {
    pub fn label(&self) -> &'static str {
        match self {
            Terminal::ConvergedTo(_) => "converged",
            Terminal::TMaxReached => "t-max-reached",
            Terminal::Diverged { .. } => "diverged",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub terminal: Terminal,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> State {
        *self.states.last().expect("trajectory is never empty")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    pub fn converged_to(&self) -> Option<State> {
        match self.terminal {
            Terminal::ConvergedTo(s) => Some(s),
            _ => None,
        }
    }

    /// Most negative component seen along the recorded states.
    pub fn min_component(&self) -> f64 {
        self.states.iter().map(|s| s.x.min(s.y)).fold(f64::INFINITY, f64::min)
    }
}

struct Recorder {
    record: bool,
    times: Vec<f64>,
    states: Vec<State>,
}

impl Recorder {
    fn push(&mut self, t: f64, s: State) {
        if self.record || self.times.is_empty() {
            self.times.push(t);
            self.states.push(s);
        }
    }

    fn finish(mut self, t: f64, s: State, terminal: Terminal, accepted: usize, rejected: usize) -> Trajectory {
        if self.times.last() != Some(&t) {
            self.times.push(t);
            self.states.push(s);
        }
        Trajectory {
            times: self.times,
            states: self.states,
            terminal,
            accepted_steps: accepted,
            rejected_steps: rejected,
        }
    }
}

/// Convergence bookkeeping: anchor resets whenever the state moves farther
/// than the convergence radius.
struct Stall {
    t: f64,
    s: State,
}

impl Stall {
    fn update(&mut self, sys: &System, opts: &IntegratorOptions, t: f64, s: State) -> bool {
        if s.distance(self.s) >= opts.convergence_radius {
            self.t = t;
            self.s = s;
            return false;
        }
        t - self.t >= opts.stall_window && sys.rhs(s).norm() < opts.residual_tol
    }
}

fn blown_up(s: State) -> Option<String> {
    if !s.is_finite() {
        Some("non-finite state".into())
    } else if s.max_abs() > BLOWUP {
        Some(format!("state magnitude exceeded {BLOWUP:e}"))
    } else {
        None
    }
}

/// Integrates `sys` from `s0` until convergence, divergence or `t_max`.
pub fn integrate(sys: &System, s0: State, opts: &IntegratorOptions) -> Result<Trajectory> {
    opts.validate()?;
    if !s0.is_finite() {
        return Err(domain("initial state must be finite"));
    }
    if !matches!(sys, System::Linear(_)) && (s0.x < 0.0 || s0.y < 0.0) {
        return Err(domain(format!("initial state must be nonnegative, got {s0}")));
    }
    match opts.method {
        Method::Rk4 { step } => Ok(rk4(sys, s0, step, opts)),
        Method::Rk45 { rel_tol, abs_tol } => Ok(dopri(sys, s0, rel_tol, abs_tol, opts)),
    }
}

fn rk4_step(sys: &System, s: State, h: f64) -> State {
    let k1 = sys.rhs(s);
    let k2 = sys.rhs(s + (h / 2.0) * k1);
    let k3 = sys.rhs(s + (h / 2.0) * k2);
    let k4 = sys.rhs(s + h * k3);
    s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

fn rk4(sys: &System, s0: State, step: f64, opts: &IntegratorOptions) -> Trajectory {
    let mut rec = Recorder { record: opts.record, times: Vec::new(), states: Vec::new() };
    rec.push(0.0, s0);
    let mut stall = Stall { t: 0.0, s: s0 };
    let (mut t, mut s) = (0.0, s0);
    let mut n = 0usize;
    // step count from the start avoids accumulating rounding in t
    let total = (opts.t_max / step).ceil() as usize;
    while n < total {
        let t_next = if n + 1 == total { opts.t_max } else { (n + 1) as f64 * step };
        s = rk4_step(sys, s, t_next - t);
        t = t_next;
        n += 1;
        if let Some(reason) = blown_up(s) {
            return rec.finish(t, s, Terminal::Diverged { reason }, n, 0);
        }
        rec.push(t, s);
        if stall.update(sys, opts, t, s) {
            return rec.finish(t, s, Terminal::ConvergedTo(s), n, 0);
        }
    }
    rec.finish(t, s, Terminal::TMaxReached, n, 0)
}

// Dormand-Prince 5(4) tableau; the system is autonomous so the nodes are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn dopri(sys: &System, s0: State, rel_tol: f64, abs_tol: f64, opts: &IntegratorOptions) -> Trajectory {
    let mut rec = Recorder { record: opts.record, times: Vec::new(), states: Vec::new() };
    rec.push(0.0, s0);
    let mut stall = Stall { t: 0.0, s: s0 };
    let (mut t, mut s) = (0.0, s0);
    let mut k1 = sys.rhs(s);
    let h_max = opts.t_max.min(opts.stall_window.max(1.0));
    let scale0 = abs_tol + rel_tol * s.max_abs();
    let mut h = if k1.max_abs() > 0.0 { (0.01 * scale0.sqrt() / k1.max_abs()).clamp(1e-6, 0.1) } else { 0.1 };
    h = h.min(h_max);
    let (mut accepted, mut rejected) = (0usize, 0usize);

    while t < opts.t_max {
        let last = t + h >= opts.t_max;
        let h_try = if last { opts.t_max - t } else { h };
        let k2 = sys.rhs(s + (h_try * A21) * k1);
        let k3 = sys.rhs(s + h_try * (A31 * k1 + A32 * k2));
        let k4 = sys.rhs(s + h_try * (A41 * k1 + A42 * k2 + A43 * k3));
        let k5 = sys.rhs(s + h_try * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
        let k6 = sys.rhs(s + h_try * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
        let s_new = s + h_try * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        let k7 = sys.rhs(s_new);
        let err = h_try * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let sc = |a: f64, b: f64| abs_tol + rel_tol * a.abs().max(b.abs());
        let en = (((err.x / sc(s.x, s_new.x)).powi(2) + (err.y / sc(s.y, s_new.y)).powi(2)) / 2.0).sqrt();

        if en <= 1.0 {
            t = if last { opts.t_max } else { t + h_try };
            s = s_new;
            k1 = k7;
            accepted += 1;
            if let Some(reason) = blown_up(s) {
                return rec.finish(t, s, Terminal::Diverged { reason }, accepted, rejected);
            }
            rec.push(t, s);
            if stall.update(sys, opts, t, s) {
                return rec.finish(t, s, Terminal::ConvergedTo(s), accepted, rejected);
            }
            let factor = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h_try * factor).min(h_max);
        } else {
            rejected += 1;
            let factor = if en.is_finite() { (0.9 * en.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            h = h_try * factor;
            if h < MIN_STEP {
                let reason = format!("step size underflow ({h:e}) at t = {t}");
                return rec.finish(t, s, Terminal::Diverged { reason }, accepted, rejected);
            }
        }
    }
    rec.finish(t, s, Terminal::TMaxReached, accepted, rejected)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceViolation {
    pub start: State,
    pub time: f64,
    pub state: State,
    pub excursion: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceReport {
    pub k: f64,
    pub samples: usize,
    /// Largest distance outside `[0, k]^2` seen on any trajectory.
    pub worst_excursion: f64,
    pub tolerance: f64,
    pub violations: Vec<InvarianceViolation>,
}

impl InvarianceReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// `n` points evenly spaced along the perimeter of `[0, k]^2`, counter-clockwise from the origin.
pub fn box_boundary_points(k: f64, n: usize) -> Vec<State> {
    (0..n)
        .map(|i| {
            let u = 4.0 * i as f64 / n as f64;
            let (side, r) = (u.floor() as usize, u.fract() * k);
            match side {
                0 => State::new(r, 0.0),
                1 => State::new(k, r),
                2 => State::new(k - r, k),
                _ => State::new(0.0, k - r),
            }
        })
        .collect()
}

/// Integrates from `n_samples` points on the boundary of `[0, k]^2` and checks
/// that no trajectory leaves the box or the nonnegative quadrant by more than
/// ten times the integrator tolerance.
pub fn verify_invariance(sys: &System, k: f64, n_samples: usize, opts: &IntegratorOptions) -> Result<InvarianceReport> {
    if let System::Physical { params, .. } = sys {
        if k < params.k1() {
            return Err(domain(format!("box side {k} is below k1 = {}", params.k1())));
        }
    }
    if k.is_nan() || k <= 0.0 {
        return Err(domain("box side must be positive"));
    }
    let opts = IntegratorOptions { record: true, ..*opts };
    let tolerance = opts.tolerance(k);
    let starts = box_boundary_points(k, n_samples);
    let runs: Vec<Trajectory> = starts.par_iter().map(|&s0| integrate(sys, s0, &opts)).collect::<Result<_>>()?;
    let mut report =
        InvarianceReport { k, samples: n_samples, worst_excursion: 0.0, tolerance, violations: Vec::new() };
    for (start, traj) in starts.into_iter().zip(runs) {
        let mut worst: Option<(f64, f64, State)> = None;
        for (&t, &s) in traj.times.iter().zip(&traj.states) {
            let exc = [-s.x, -s.y, s.x - k, s.y - k].into_iter().fold(0.0, f64::max);
            if worst.is_none_or(|(w, _, _)| exc > w) {
                worst = Some((exc, t, s));
            }
        }
        let (exc, time, state) = worst.expect("trajectory is never empty");
        report.worst_excursion = report.worst_excursion.max(exc);
        if exc > 10.0 * tolerance {
            report.violations.push(InvarianceViolation { start, time, state, excursion: exc });
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtinctionReport {
    pub seed: u64,
    pub samples: usize,
    pub converged_to_origin: usize,
    /// Largest terminal distance from the origin.
    pub worst_distance: f64,
    pub max_time: f64,
    /// Start and terminal flag of every sample that did not reach the origin.
    pub failures: Vec<(State, Terminal)>,
    /// Verdict of the extinction certificate, when it applies to the parameters.
    pub certificate_holds: Option<bool>,
}

impl ExtinctionReport {
    pub fn fraction(&self) -> Option<f64> {
        (self.samples > 0).then(|| self.converged_to_origin as f64 / self.samples as f64)
    }
}

/// Seeded uniform points in `[x0, x1] x [y0, y1]`.
pub fn sample_box(seed: u64, n: usize, x: (f64, f64), y: (f64, f64)) -> Vec<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            State::new(x.0 + u * (x.1 - x.0), y.0 + v * (y.1 - y.0))
        })
        .collect()
}

/// Integrates the physical cubic system from `n_samples` seeded uniform points
/// of `[0, k1]^2` and counts those ending within [`ATTRIBUTION_RADIUS`] of the origin.
pub fn verify_global_extinction(
    p: &PatchParams,
    n_samples: usize,
    opts: &IntegratorOptions,
    seed: u64,
) -> Result<ExtinctionReport> {
    let sys = System::physical(*p, ReactionKind::CUBIC_HALF, Coupling::Standard);
    let opts = IntegratorOptions { record: false, ..*opts };
    let starts = sample_box(seed, n_samples, (0.0, p.k1()), (0.0, p.k1()));
    let runs: Vec<Trajectory> = starts.par_iter().map(|&s0| integrate(&sys, s0, &opts)).collect::<Result<_>>()?;
    let mut report = ExtinctionReport {
        seed,
        samples: n_samples,
        converged_to_origin: 0,
        worst_distance: 0.0,
        max_time: 0.0,
        failures: Vec::new(),
        certificate_holds: check_thm_main(p).ok().map(|v| v.holds),
    };
    for (s0, traj) in starts.into_iter().zip(runs) {
        let dist = traj.final_state().norm();
        report.worst_distance = report.worst_distance.max(dist);
        report.max_time = report.max_time.max(traj.final_time());
        if traj.converged_to().is_some() && dist < ATTRIBUTION_RADIUS {
            report.converged_to_origin += 1;
        } else {
            report.failures.push((s0, traj.terminal));
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasinReport {
    pub seed: u64,
    pub samples: usize,
    pub equilibria: Vec<State>,
    /// Samples attributed to each equilibrium, in input order.
    pub counts: Vec<usize>,
    pub unresolved: usize,
}

impl BasinReport {
    /// Basin fractions per equilibrium followed by the unresolved fraction.
    pub fn fractions(&self) -> (Vec<f64>, f64) {
        let n = self.samples.max(1) as f64;
        (self.counts.iter().map(|&c| c as f64 / n).collect(), self.unresolved as f64 / n)
    }
}

/// Attributes seeded samples of a box to the equilibrium their trajectory converges to.
pub fn basin_sample(
    sys: &System,
    equilibria: &[State],
    n_samples: usize,
    domain_box: ((f64, f64), (f64, f64)),
    opts: &IntegratorOptions,
    seed: u64,
) -> Result<BasinReport> {
    let ((x0, x1), (y0, y1)) = domain_box;
    if !(x0 >= 0.0 && y0 >= 0.0 && x0 < x1 && y0 < y1) {
        return Err(domain("sample box must be a nonempty subset of the nonnegative quadrant"));
    }
    let opts = IntegratorOptions { record: false, ..*opts };
    let starts = sample_box(seed, n_samples, (x0, x1), (y0, y1));
    let ends: Vec<Option<State>> =
        starts.par_iter().map(|&s0| integrate(sys, s0, &opts).map(|t| t.converged_to())).collect::<Result<_>>()?;
    let mut counts = vec![0; equilibria.len()];
    let mut unresolved = 0;
    for end in ends {
        let nearest = end.and_then(|e| {
            equilibria
                .iter()
                .enumerate()
                .map(|(i, q)| (i, q.distance(e)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .filter(|&(_, d)| d < ATTRIBUTION_RADIUS)
        });
        match nearest {
            Some((i, _)) => counts[i] += 1,
            None => unresolved += 1,
        }
    }
    Ok(BasinReport { seed, samples: n_samples, equilibria: equilibria.to_vec(), counts, unresolved })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixingEntry {
    pub d: f64,
    pub state: State,
    /// `x1 + x2` at the end of the run.
    pub total: f64,
    pub converged: bool,
}

/// Logistic two-patch runs from `(k1, k2)` for each dispersal rate.
pub fn perfect_mixing_experiment(
    k1: f64,
    k2: f64,
    lambda1: f64,
    lambda2: f64,
    d_list: &[f64],
    opts: &IntegratorOptions,
) -> Result<Vec<MixingEntry>> {
    if d_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(domain("dispersal rates must be strictly increasing"));
    }
    let opts = IntegratorOptions { record: false, ..*opts };
    d_list
        .iter()
        .map(|&d| {
            let p = PatchParams::new(d, lambda1, lambda2, k1, k2)?;
            let sys =
                System::Physical { params: p, reactions: ReactionKind::Logistic.into(), coupling: Coupling::Standard };
            // the constructor orders patches by capacity
            let traj = integrate(&sys, State::new(p.k1(), p.k2()), &opts)?;
            let state = traj.final_state();
            Ok(MixingEntry { d, state, total: state.x + state.y, converged: traj.converged_to().is_some() })
        })
        .collect()
}

/// Relative gap between a simulated total and the large-dispersal limit.
pub fn mixing_gap(entry: &MixingEntry, k1: f64, k2: f64, lambda1: f64, lambda2: f64) -> f64 {
    let target = perfect_mixing_capacity(k1, k2, lambda1, lambda2);
    (entry.total - target) / target
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{find_equilibria, SolverOptions};
    use crate::model::normalize;

    fn cubic_normalized(a: f64, b: f64, g: f64) -> System {
        System::normalized(NormalizedParams::new(a, b, g).unwrap(), ReactionKind::CUBIC_HALF)
    }

    /// `exp(t A) v` for a matrix with real distinct eigenvalues.
    fn exact_linear(m: &Matrix2, v: State, t: f64) -> State {
        let ev = m.eigenvalues();
        let (l1, l2) = (ev[0].re, ev[1].re);
        let shift = |l: f64| Matrix2([[m.0[0][0] - l, m.0[0][1]], [m.0[1][0], m.0[1][1] - l]]);
        let a = shift(l2).apply(v);
        let b = shift(l1).apply(v);
        (1.0 / (l1 - l2)) * ((l1 * t).exp() * a + (-(l2 * t).exp()) * b)
    }

    #[test]
    fn origin_is_fixed() {
        let traj = integrate(&cubic_normalized(1.0, 1.0, 0.4), State::ORIGIN, &IntegratorOptions::default()).unwrap();
        assert!(traj.states.iter().all(|s| *s == State::ORIGIN));
        assert_eq!(traj.terminal, Terminal::ConvergedTo(State::ORIGIN));
    }

    #[test]
    fn negative_start_rejected() {
        let r = integrate(&cubic_normalized(1.0, 1.0, 0.4), State::new(-1.0, 0.0), &IntegratorOptions::default());
        assert!(r.is_err());
        let bad = IntegratorOptions { t_max: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn stable_equilibria_are_kept() {
        let n = NormalizedParams::new(100.0, 100.0, 1.0).unwrap();
        let sys = System::normalized(n, ReactionKind::CUBIC_HALF);
        let set = find_equilibria(&n, ReactionKind::CUBIC_HALF, &SolverOptions::default()).unwrap();
        let opts = IntegratorOptions::default().fixed_horizon(100.0);
        for e in set.equilibria.iter().filter(|e| e.stability.is_stable()) {
            let traj = integrate(&sys, e.point, &opts).unwrap();
            let drift = traj.states.iter().map(|s| s.distance(e.point)).fold(0.0, f64::max);
            assert!(drift < 1e-6, "{} drifted {drift}", e.point);
        }
    }

    #[test]
    fn certified_parameters_go_extinct() {
        let p = PatchParams::new(1.0, 1.0, 1.0, 1.0, 1.0 / 3.0).unwrap();
        let sys = System::physical(p, ReactionKind::CUBIC_HALF, Coupling::Standard);
        let traj = integrate(&sys, State::new(1.0, 1.0 / 3.0), &IntegratorOptions::default()).unwrap();
        assert!(traj.converged_to().unwrap().norm() < 1e-6);
        assert!(traj.min_component() >= -1e-10);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let n = NormalizedParams::new(1.0, 2.0, 0.4).unwrap();
        let m = crate::model::jacobian(&n, ReactionKind::CUBIC_HALF, State::ORIGIN).unwrap();
        let sys = System::Linear(m);
        let v = State::new(1.0, 0.5);
        let max_err = |h: f64| {
            let traj = integrate(&sys, v, &IntegratorOptions::rk4(h).fixed_horizon(2.0)).unwrap();
            traj.times.iter().zip(&traj.states).map(|(&t, &s)| s.distance(exact_linear(&m, v, t))).fold(0.0, f64::max)
        };
        let ratio = max_err(0.1) / max_err(0.05);
        assert!((ratio - 16.0).abs() < 0.2 * 16.0, "ratio {ratio}");
    }

    #[test]
    fn adaptive_matches_exact_linear_solution() {
        let m = Matrix2([[-2.0, 0.5], [1.0, -1.5]]);
        let v = State::new(0.3, 0.7);
        let traj = integrate(&System::Linear(m), v, &IntegratorOptions::default().fixed_horizon(3.0)).unwrap();
        assert_eq!(traj.final_time(), 3.0);
        assert!(traj.final_state().distance(exact_linear(&m, v, 3.0)) < 1e-9);
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn physical_and_normalized_agree_under_rescaling() {
        let p = PatchParams::new(2.0, 3.0, 5.0, 2.0, 0.8).unwrap();
        let n = normalize(&p);
        let phys = System::physical(p, ReactionKind::CUBIC_HALF, Coupling::Standard);
        let norm = System::normalized(n, ReactionKind::CUBIC_HALF);
        let s0 = State::new(1.5, 0.7);
        let t = 1.3;
        let opts = |t| {
            IntegratorOptions { method: Method::Rk45 { rel_tol: 1e-11, abs_tol: 1e-13 }, ..Default::default() }
                .fixed_horizon(t)
        };
        let a = integrate(&phys, s0, &opts(t)).unwrap().final_state();
        let b = integrate(&norm, State::new(s0.x / p.k1(), s0.y / p.k2()), &opts(p.d() * t)).unwrap().final_state();
        assert!((a.x / p.k1() - b.x).abs() < 1e-9 && (a.y / p.k2() - b.y).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn box_is_invariant() {
        let p = PatchParams::new(1.0, 1.0, 1.0, 1.0, 1.0 / 3.0).unwrap();
        let sys = System::physical(p, ReactionKind::CUBIC_HALF, Coupling::Standard);
        let opts = IntegratorOptions::default().fixed_horizon(20.0);
        for k in [1.0, 2.0] {
            let report = verify_invariance(&sys, k, 100, &opts).unwrap();
            assert!(report.holds(), "{report:?}");
        }
        assert!(verify_invariance(&sys, 0.5, 4, &opts).is_err());
        let axis = integrate(&sys, State::new(0.0, 1.0 / 3.0), &opts).unwrap();
        assert!(axis.min_component() >= -1e-10);
    }

    #[test]
    fn boundary_points_cover_all_sides() {
        let pts = box_boundary_points(2.0, 8);
        assert_eq!(pts[0], State::new(0.0, 0.0));
        assert_eq!(pts[2], State::new(2.0, 0.0));
        assert_eq!(pts[4], State::new(2.0, 2.0));
        assert_eq!(pts[6], State::new(0.0, 2.0));
    }

    #[test]
    fn extinction_report() {
        let p = PatchParams::new(1.0, 1.0, 1.0, 1.0, 1.0 / 3.0).unwrap();
        let r = verify_global_extinction(&p, 50, &IntegratorOptions::default(), 7).unwrap();
        assert_eq!(r.fraction(), Some(1.0));
        assert_eq!(r.certificate_holds, Some(true));
        assert!(r.worst_distance < 1e-6);
        let empty = verify_global_extinction(&p, 0, &IntegratorOptions::default(), 7).unwrap();
        assert_eq!(empty.fraction(), None);
        // symmetric bistable case: the upper state attracts part of the box
        let sym = PatchParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let r = verify_global_extinction(&sym, 50, &IntegratorOptions::default(), 7).unwrap();
        assert!(r.fraction().unwrap() < 1.0);
    }

    #[test]
    fn basins_of_symmetric_bistable_case() {
        let n = NormalizedParams::new(1.0, 1.0, 1.0).unwrap();
        let sys = System::normalized(n, ReactionKind::CUBIC_HALF);
        let eq = find_equilibria(&n, ReactionKind::CUBIC_HALF, &SolverOptions::default()).unwrap().points();
        let opts = IntegratorOptions::default();
        let r = basin_sample(&sys, &eq, 200, ((0.0, 1.0), (0.0, 1.0)), &opts, 3).unwrap();
        let (f, un) = r.fractions();
        let sum: f64 = f.iter().sum::<f64>() + un;
        assert!((sum - 1.0).abs() < 1e-12);
        let idx = |q: State| eq.iter().position(|e| e.distance(q) < 1e-9).unwrap();
        assert!(f[idx(State::ORIGIN)] > 0.0 && f[idx(State::new(1.0, 1.0))] > 0.0);
        assert!(f[idx(State::new(0.5, 0.5))] < 0.01);
        assert_eq!(r, basin_sample(&sys, &eq, 200, ((0.0, 1.0), (0.0, 1.0)), &opts, 3).unwrap());
    }

    #[test]
    fn mixing_limits() {
        let opts = IntegratorOptions::default();
        let e = perfect_mixing_experiment(2.0, 1.0, 2.0, 1.0, &[1e3], &opts).unwrap();
        assert!(e[0].converged);
        assert!(mixing_gap(&e[0], 2.0, 1.0, 2.0, 1.0).abs() < 0.01, "{:?}", e[0]);
        let e = perfect_mixing_experiment(1.5, 1.5, 1.0, 3.0, &[0.1, 10.0], &opts).unwrap();
        assert!(e.iter().all(|m| (m.total - 3.0).abs() < 1e-6));
        assert!(perfect_mixing_experiment(1.0, 1.0, 1.0, 1.0, &[2.0, 1.0], &opts).is_err());
    }
}
