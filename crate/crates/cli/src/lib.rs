//! Subcommands of the `twopatch` tool. Each writes data to `out` and
//! diagnostics to `diag`, so the binary and the tests share one code path.

pub mod config;

use std::io::{self, Write};
use std::path::PathBuf;

use thiserror::Error;
use twopatch::cartography::{
    containment_report, export_csv, export_svg, run_sweep, run_sweep_with_threads, Axis, Classifier, Plane, SvgStyle,
    SweepSpec,
};
use twopatch::certificates::{check_corollary, check_thm_general_a_with, check_thm_main, perfect_mixing_capacity};
use twopatch::certificates::{CertificateId, CertificateVerdict, UpperBoundForm};
use twopatch::dynamics::{basin_sample, integrate, perfect_mixing_experiment, System, Terminal};
use twopatch::equilibria::{find_equilibria, Equilibrium};
use twopatch::sawtooth::{check_sawtooth_predicate, sawtooth_equilibria_exact};
use twopatch::{Coupling, ReactionKind, State};

use crate::config::{core_message, Form, Model, RawConfig, ReactionName, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] twopatch::Error),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Lists equilibria with eigenvalues, stability and region. With `basins`,
/// also samples that many seeded starting points and reports basin fractions.
pub fn cmd_equilibria(
    cfg: &RunConfig,
    basins: Option<usize>,
    out: &mut dyn Write,
    diag: &mut dyn Write,
) -> Result<(), CliError> {
    if cfg.coupling == Coupling::Balanced {
        return Err(usage("equilibrium analysis supports standard coupling only"));
    }
    if let Model::Physical(p) = &cfg.model {
        if p.swapped() {
            writeln!(diag, "note: patches exchanged so that k1 >= k2")?;
        }
    }
    let n = cfg.model.normalized();
    let equilibria: Vec<Equilibrium> = if cfg.reaction == ReactionKind::Sawtooth {
        let sol = sawtooth_equilibria_exact(&n);
        for w in &sol.warnings {
            writeln!(diag, "warning: {w}")?;
        }
        sol.equilibria
    } else {
        let set = find_equilibria(&n, cfg.model.reactions(cfg.reaction), &cfg.solver)?;
        for w in &set.warnings {
            writeln!(diag, "warning: {w}")?;
        }
        set.equilibria
    };

    let (names, scale, rate) = match &cfg.model {
        Model::Physical(p) => (["x1", "x2"], (p.k1(), p.k2()), p.d()),
        Model::Normalized(_) => (["x", "y"], (1.0, 1.0), 1.0),
    };
    let basin_report = match basins {
        Some(samples) => {
            let sys = System::normalized(n, cfg.model.reactions(cfg.reaction));
            let points: Vec<State> = equilibria.iter().map(|e| e.point).collect();
            let domain = ((0.0, 1.0), (0.0, 1.0 / n.gamma()));
            Some(basin_sample(&sys, &points, samples, domain, &cfg.integrator, cfg.seed)?)
        }
        None => None,
    };

    write!(out, "{},{},eig1_re,eig1_im,eig2_re,eig2_im,stability,region,kink", names[0], names[1])?;
    if basin_report.is_some() {
        write!(out, ",basin")?;
    }
    writeln!(out)?;
    for (i, e) in equilibria.iter().enumerate() {
        let [l1, l2] = e.eigenvalues;
        write!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            num(e.point.x * scale.0),
            num(e.point.y * scale.1),
            num(l1.re * rate),
            num(l1.im * rate),
            num(l2.re * rate),
            num(l2.im * rate),
            e.stability,
            e.region.as_str(),
            u8::from(e.kink)
        )?;
        if let Some(r) = &basin_report {
            write!(out, ",{}", num(r.fractions().0[i]))?;
        }
        writeln!(out)?;
    }
    if let Some(r) = &basin_report {
        writeln!(out, "# basin samples {} seed {} unresolved {}", r.samples, r.seed, num(r.fractions().1))?;
    }
    Ok(())
}

/// Evaluates a certificate. `Ok(true)` when it holds.
pub fn cmd_check(cfg: &RunConfig, id: CertificateId, out: &mut dyn Write) -> Result<bool, CliError> {
    let verdict = evaluate_certificate(cfg, id)?;
    write!(out, "{verdict}")?;
    Ok(verdict.holds)
}

fn evaluate_certificate(cfg: &RunConfig, id: CertificateId) -> Result<CertificateVerdict, CliError> {
    let cubic = matches!(cfg.reaction, ReactionKind::CubicAllee { .. });
    let physical = match &cfg.model {
        Model::Physical(p) => Some(p),
        Model::Normalized(_) => None,
    };
    let need_physical =
        || physical.ok_or_else(|| usage(format!("{id} is stated for physical parameters; use form = \"physical\"")));
    match id {
        CertificateId::ThmMain | CertificateId::ThmGeneralA | CertificateId::ThmGeneralARederived if !cubic => {
            Err(usage(format!("{id} applies to the cubic reaction")))
        }
        CertificateId::ThmMain => check_thm_main(need_physical()?)
            .map_err(|e| usage(format!("{}; thm-general-a covers other thresholds", core_message(&e)))),
        CertificateId::ThmGeneralA => Ok(check_thm_general_a_with(need_physical()?, UpperBoundForm::AsPrinted)?),
        CertificateId::ThmGeneralARederived => {
            Ok(check_thm_general_a_with(need_physical()?, UpperBoundForm::Rederived)?)
        }
        CertificateId::Corollary => {
            if cfg.reaction != ReactionKind::CUBIC_HALF {
                return Err(usage("corollary applies to the cubic reaction with a = 1/2"));
            }
            Ok(check_corollary(&cfg.model.normalized()))
        }
        CertificateId::SawtoothPredicate => {
            if cfg.reaction != ReactionKind::Sawtooth {
                return Err(usage("sawtooth-predicate applies to the sawtooth reaction"));
            }
            Ok(check_sawtooth_predicate(&cfg.model.normalized())?)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum PlaneName {
    /// `(lambda1, lambda2)` at fixed D, k1, k2.
    Lambda,
    /// `(alpha, beta)` at fixed gamma.
    AlphaBeta,
}

/// Parses `min:max:steps`.
pub fn parse_range(s: &str) -> Result<Axis, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [min, max, steps] = parts.as_slice() else {
        return Err(format!("expected min:max:steps, got `{s}`"));
    };
    let f = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    let steps = steps.trim().parse::<usize>().map_err(|e| format!("`{steps}`: {e}"))?;
    Ok(Axis::new(f(min)?, f(max)?, steps))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepArgs {
    pub plane: Option<PlaneName>,
    pub range: Option<Axis>,
    pub y_range: Option<Axis>,
    pub d: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub gamma: Option<f64>,
    pub reaction: Option<ReactionName>,
    pub a: Option<f64>,
    pub overlays: Vec<CertificateId>,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub threads: Option<usize>,
}

pub const DEFAULT_AXIS: Axis = Axis { min: 0.0, max: 4.0, steps: 400 };

/// Builds the sweep from flags, falling back on the config's fixed parameters.
pub fn sweep_spec(raw: &RawConfig, args: &SweepArgs) -> Result<SweepSpec, CliError> {
    let mut raw = raw.clone();
    if let Some(r) = args.reaction {
        raw.reaction.kind = Some(r);
    }
    if args.a.is_some() {
        raw.reaction.a = args.a;
    }
    let reaction = raw.reaction_kind()?;
    let phys = raw.physical.clone().unwrap_or_default();
    let norm = raw.normalized.clone().unwrap_or_default();
    let plane_name = match (args.plane, raw.form()) {
        (Some(p), _) => p,
        (None, Ok(Form::Normalized)) => PlaneName::AlphaBeta,
        _ => PlaneName::Lambda,
    };
    let plane = match plane_name {
        PlaneName::Lambda => Plane::Physical {
            d: args.d.or(phys.d).unwrap_or(1.0),
            k1: args.k1.or(phys.k1).unwrap_or(1.0),
            k2: args.k2.or(phys.k2).ok_or_else(|| usage("the lambda plane needs --k2"))?,
        },
        PlaneName::AlphaBeta => {
            let from_physical = phys.k2.zip(phys.k1).map(|(k2, k1)| k2 / k1);
            Plane::Normalized {
                gamma: args
                    .gamma
                    .or(norm.gamma)
                    .or(from_physical)
                    .ok_or_else(|| usage("the alpha-beta plane needs --gamma"))?,
            }
        }
    };
    let x_axis = args.range.unwrap_or(DEFAULT_AXIS);
    let y_axis = args.y_range.unwrap_or(x_axis);
    let classifier = if reaction == ReactionKind::Sawtooth {
        Classifier::SawtoothExact
    } else {
        Classifier::Numeric(raw.solver_options()?)
    };
    let overlays = if args.overlays.is_empty() { default_overlays(&plane, reaction) } else { args.overlays.clone() };
    let spec = SweepSpec { plane, x_axis, y_axis, reaction, classifier, overlays };
    spec.validate()?;
    Ok(spec)
}

fn default_overlays(plane: &Plane, reaction: ReactionKind) -> Vec<CertificateId> {
    match (plane, reaction) {
        (Plane::Physical { .. }, ReactionKind::CubicAllee { a: 0.5 }) => vec![CertificateId::ThmMain],
        (Plane::Physical { .. }, ReactionKind::CubicAllee { .. }) => {
            vec![CertificateId::ThmGeneralA, CertificateId::ThmGeneralARederived]
        }
        (Plane::Normalized { .. }, ReactionKind::CubicAllee { a: 0.5 }) => vec![CertificateId::Corollary],
        (Plane::Normalized { gamma }, ReactionKind::Sawtooth) if *gamma > 0.0 && *gamma < 0.5 => {
            vec![CertificateId::SawtoothPredicate]
        }
        _ => Vec::new(),
    }
}

/// Runs a sweep, writes the requested files and prints a summary.
pub fn cmd_sweep(raw: &RawConfig, args: &SweepArgs, out: &mut dyn Write, diag: &mut dyn Write) -> Result<(), CliError> {
    let spec = sweep_spec(raw, args)?;
    let map = match args.threads {
        Some(t) => run_sweep_with_threads(&spec, t)?,
        None => run_sweep(&spec)?,
    };
    if let Some(path) = &args.csv {
        export_csv(&map, path)?;
    }
    if let Some(path) = &args.svg {
        export_svg(&map, path, &SvgStyle::default())?;
    }
    let total = map.cells.len();
    writeln!(out, "cells {total}")?;
    for (count, cells) in map.count_histogram() {
        writeln!(out, "count {count}: {cells} cells, area fraction {}", num(cells as f64 / total as f64))?;
    }
    let degenerate = map.degenerate_cells();
    writeln!(out, "degenerate cells: {degenerate}")?;
    if degenerate > 0 {
        writeln!(diag, "warning: {degenerate} cells flagged degenerate")?;
    }
    for &id in &spec.overlays {
        let r = containment_report(&map, id);
        let fraction = r.fraction().map_or("n/a".to_string(), num);
        write!(
            out,
            "{id}: certified {} cells, unique-equilibrium fraction {fraction}, violations {}",
            r.certified,
            r.violations.len()
        )?;
        if id.is_iff() {
            write!(out, ", uncertified unique cells {}", r.inverse_violations.len())?;
        }
        writeln!(out)?;
        for v in r.violations.iter().take(5) {
            writeln!(diag, "violation: {id} holds at ({}, {}) with {} equilibria", num(v.p1), num(v.p2), v.count)?;
        }
    }
    Ok(())
}

/// Integrates from `(x0, y0)` (default: the carrying capacities) and writes the trajectory as CSV.
pub fn cmd_simulate(
    cfg: &RunConfig,
    start: (Option<f64>, Option<f64>),
    out: &mut dyn Write,
    diag: &mut dyn Write,
) -> Result<(), CliError> {
    let (sys, default_start, names) = match &cfg.model {
        Model::Physical(p) => {
            if p.swapped() {
                writeln!(diag, "note: patches exchanged so that k1 >= k2; columns follow that order")?;
            }
            (System::physical(*p, cfg.reaction, cfg.coupling), State::new(p.k1(), p.k2()), "t,x1,x2")
        }
        Model::Normalized(n) => (System::normalized(*n, cfg.reaction), State::new(1.0, 1.0), "t,x,y"),
    };
    let s0 = State::new(start.0.unwrap_or(default_start.x), start.1.unwrap_or(default_start.y));
    let traj = integrate(&sys, s0, &cfg.integrator)?;
    writeln!(out, "{names}")?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        writeln!(out, "{},{},{}", num(*t), num(s.x), num(s.y))?;
    }
    match &traj.terminal {
        Terminal::ConvergedTo(s) => writeln!(out, "# terminal converged {} {}", num(s.x), num(s.y))?,
        Terminal::TMaxReached => writeln!(out, "# terminal t-max-reached")?,
        Terminal::Diverged { reason } => {
            writeln!(out, "# terminal diverged")?;
            writeln!(diag, "warning: trajectory diverged: {reason}")?;
        }
    }
    Ok(())
}

/// Large-dispersal totals for the logistic model against the closed-form limit.
pub fn cmd_mixing(cfg: &RunConfig, d_list: &[f64], out: &mut dyn Write, diag: &mut dyn Write) -> Result<(), CliError> {
    let Model::Physical(p) = &cfg.model else {
        return Err(usage("mixing needs physical parameters"));
    };
    if cfg.reaction != ReactionKind::Logistic {
        return Err(usage("mixing needs the logistic reaction"));
    }
    if cfg.coupling != Coupling::Standard {
        return Err(usage("mixing uses standard coupling"));
    }
    if d_list.is_empty() {
        return Err(usage("give at least one dispersal rate"));
    }
    let (k1, k2, l1, l2) = (p.k1(), p.k2(), p.lambda1(), p.lambda2());
    let formula = perfect_mixing_capacity(k1, k2, l1, l2);
    let entries = perfect_mixing_experiment(k1, k2, l1, l2, d_list, &cfg.integrator)?;
    writeln!(out, "D,total,formula,relative_gap,converged")?;
    for e in &entries {
        writeln!(
            out,
            "{},{},{},{},{}",
            num(e.d),
            num(e.total),
            num(formula),
            num((e.total - formula) / formula),
            u8::from(e.converged)
        )?;
        if !e.converged {
            writeln!(diag, "warning: run at D = {} did not converge", num(e.d))?;
        }
    }
    Ok(())
}
