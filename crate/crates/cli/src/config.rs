//! Run configuration: a TOML document plus command-line overrides.
//!
//! ```toml
//! form = "physical"          # or "normalized"
//! seed = 1
//! coupling = "standard"      # or "balanced" (physical form only)
//!
//! [physical]
//! D = 1.0
//! lambda1 = 1.0
//! lambda2 = 1.0
//! k1 = 1.0
//! k2 = 0.3333333333333333
//! # a1, a2: per-patch thresholds for the cubic reaction
//!
//! [normalized]               # instead of [physical]
//! # alpha, beta, gamma
//!
//! [reaction]
//! kind = "cubic"             # "cubic" | "sawtooth" | "logistic"
//! a = 0.5
//!
//! [integrator]
//! method = "rk45"            # or "rk4" with `step`
//! rel_tol = 1e-9
//! abs_tol = 1e-12
//! t_max = 1e4
//! convergence_radius = 1e-8
//! stall_window = 10.0
//! residual_tol = 1e-6
//!
//! [solver]
//! bracket_grid = 20000
//! root_tol = 1e-12
//! dedup_tol = 1e-8
//! ```

use serde::Deserialize;
use twopatch::dynamics::{IntegratorOptions, Method};
use twopatch::equilibria::SolverOptions;
use twopatch::{Coupling, NormalizedParams, PatchParams, ReactionKind};

use crate::CliError;

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    Physical,
    Normalized,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReactionName {
    Cubic,
    Sawtooth,
    Logistic,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CouplingName {
    Standard,
    Balanced,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Rk4,
    Rk45,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawPhysical {
    #[serde(rename = "D")]
    pub d: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub a1: Option<f64>,
    pub a2: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawNormalized {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawReaction {
    pub kind: Option<ReactionName>,
    pub a: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawIntegrator {
    pub method: Option<MethodName>,
    pub step: Option<f64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub t_max: Option<f64>,
    pub convergence_radius: Option<f64>,
    pub stall_window: Option<f64>,
    pub residual_tol: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawSolver {
    pub bracket_grid: Option<usize>,
    pub root_tol: Option<f64>,
    pub dedup_tol: Option<f64>,
}

/// The configuration document as written, before validation.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub form: Option<Form>,
    pub seed: Option<u64>,
    pub coupling: Option<CouplingName>,
    pub physical: Option<RawPhysical>,
    pub normalized: Option<RawNormalized>,
    #[serde(default)]
    pub reaction: RawReaction,
    #[serde(default)]
    pub integrator: RawIntegrator,
    #[serde(default)]
    pub solver: RawSolver,
}

/// Values given on the command line; each one replaces its config entry.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub d: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub reaction: Option<ReactionName>,
    pub a: Option<f64>,
    pub coupling: Option<CouplingName>,
    pub seed: Option<u64>,
    pub t_max: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Model {
    Physical(PatchParams),
    Normalized(NormalizedParams),
}

impl Model {
    pub fn normalized(&self) -> NormalizedParams {
        match self {
            Model::Physical(p) => twopatch::normalize(p),
            Model::Normalized(n) => *n,
        }
    }

    pub fn reactions(&self, r: ReactionKind) -> twopatch::Reactions {
        match self {
            Model::Physical(p) => p.reactions(r),
            Model::Normalized(_) => r.into(),
        }
    }
}

/// A fully validated configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: Model,
    pub reaction: ReactionKind,
    pub coupling: Coupling,
    pub integrator: IntegratorOptions,
    pub solver: SolverOptions,
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 1;

fn config_error(path: &str, message: impl Into<String>) -> CliError {
    CliError::Config { path: path.to_string(), message: message.into() }
}

/// Parses TOML text; unknown keys and ill-typed values are reported with their key path.
pub fn parse_raw(text: &str) -> Result<RawConfig, CliError> {
    let de = toml::Deserializer::parse(text).map_err(|e| config_error(".", toml_message(&e)))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_error(&path, toml_message(&e.into_inner()))
    })
}

/// Folds toml's multi-line report (location, snippet, message) into one line.
fn toml_message(e: &toml::de::Error) -> String {
    let text = e.to_string();
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    match (lines.first(), lines.last()) {
        (Some(first), Some(last)) if lines.len() > 1 => {
            format!("{last} ({})", first.trim_start_matches("TOML parse error at ").trim_end_matches(':'))
        }
        _ => text.trim().to_string(),
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    parse_raw(text)?.resolve()
}

fn set<T: Copy>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

impl RawConfig {
    pub fn apply(&mut self, o: &Overrides) {
        let physical_flag = [o.d, o.lambda1, o.lambda2, o.k1, o.k2].iter().any(Option::is_some);
        let normalized_flag = [o.alpha, o.beta, o.gamma].iter().any(Option::is_some);
        if physical_flag {
            let p = self.physical.get_or_insert_with(Default::default);
            set(&mut p.d, o.d);
            set(&mut p.lambda1, o.lambda1);
            set(&mut p.lambda2, o.lambda2);
            set(&mut p.k1, o.k1);
            set(&mut p.k2, o.k2);
        }
        if normalized_flag {
            let n = self.normalized.get_or_insert_with(Default::default);
            set(&mut n.alpha, o.alpha);
            set(&mut n.beta, o.beta);
            set(&mut n.gamma, o.gamma);
        }
        if self.form.is_none() {
            self.form = match (physical_flag, normalized_flag) {
                (true, false) => Some(Form::Physical),
                (false, true) => Some(Form::Normalized),
                _ => None,
            };
        }
        set(&mut self.reaction.kind, o.reaction);
        set(&mut self.reaction.a, o.a);
        set(&mut self.coupling, o.coupling);
        set(&mut self.seed, o.seed);
        set(&mut self.integrator.t_max, o.t_max);
    }

    /// The parameter form, from the `form` key or from whichever block is present.
    pub fn form(&self) -> Result<Form, CliError> {
        match (self.form, &self.physical, &self.normalized) {
            (_, Some(_), Some(_)) => {
                Err(config_error(".", "give exactly one of the [physical] and [normalized] blocks"))
            }
            (Some(Form::Physical), None, Some(_)) | (Some(Form::Normalized), Some(_), None) => {
                Err(config_error("form", "does not match the parameter block present"))
            }
            (Some(f), _, _) => Ok(f),
            (None, Some(_), None) => Ok(Form::Physical),
            (None, None, Some(_)) => Ok(Form::Normalized),
            (None, None, None) => Err(config_error("form", "no model parameters given")),
        }
    }

    pub fn reaction_kind(&self) -> Result<ReactionKind, CliError> {
        let a = self.reaction.a;
        match self.reaction.kind.unwrap_or(ReactionName::Cubic) {
            ReactionName::Cubic => {
                ReactionKind::cubic(a.unwrap_or(0.5)).map_err(|e| config_error("reaction.a", core_message(&e)))
            }
            other if a.is_some() => {
                Err(config_error("reaction.a", format!("only the cubic reaction has a threshold, not {other:?}")))
            }
            ReactionName::Sawtooth => Ok(ReactionKind::Sawtooth),
            ReactionName::Logistic => Ok(ReactionKind::Logistic),
        }
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let reaction = self.reaction_kind()?;
        let form = self.form()?;
        let coupling = match self.coupling.unwrap_or(CouplingName::Standard) {
            CouplingName::Standard => Coupling::Standard,
            CouplingName::Balanced => Coupling::Balanced,
        };
        let model = match form {
            Form::Physical => {
                let p = self.physical.clone().unwrap_or_default();
                let need = |v: Option<f64>, name: &str| {
                    v.ok_or_else(|| config_error(&format!("physical.{name}"), "missing field"))
                };
                let d = need(p.d, "D")?;
                let (l1, l2) = (need(p.lambda1, "lambda1")?, need(p.lambda2, "lambda2")?);
                let (k1, k2) = (need(p.k1, "k1")?, need(p.k2, "k2")?);
                let a = match reaction {
                    ReactionKind::CubicAllee { a } => a,
                    _ if p.a1.is_some() || p.a2.is_some() => {
                        return Err(config_error("physical.a1", "thresholds apply to the cubic reaction only"));
                    }
                    _ => 0.5,
                };
                let params = PatchParams::with_viability(d, l1, l2, k1, k2, p.a1.unwrap_or(a), p.a2.unwrap_or(a))
                    .map_err(|e| physical_error(&e))?;
                Model::Physical(params)
            }
            Form::Normalized => {
                let n = self.normalized.clone().unwrap_or_default();
                let need = |v: Option<f64>, name: &str| {
                    v.ok_or_else(|| config_error(&format!("normalized.{name}"), "missing field"))
                };
                let (alpha, beta, gamma) = (need(n.alpha, "alpha")?, need(n.beta, "beta")?, need(n.gamma, "gamma")?);
                if coupling == Coupling::Balanced {
                    return Err(config_error("coupling", "balanced coupling needs the physical form"));
                }
                let params = NormalizedParams::new(alpha, beta, gamma)
                    .map_err(|e| config_error("normalized", core_message(&e)))?;
                Model::Normalized(params)
            }
        };
        Ok(RunConfig {
            model,
            reaction,
            coupling,
            integrator: self.integrator_options()?,
            solver: self.solver_options()?,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
        })
    }

    pub fn integrator_options(&self) -> Result<IntegratorOptions, CliError> {
        let r = &self.integrator;
        let mut o = IntegratorOptions::default();
        o.method = match (r.method.unwrap_or(MethodName::Rk45), r.step) {
            (MethodName::Rk4, Some(step)) => Method::Rk4 { step },
            (MethodName::Rk4, None) => return Err(config_error("integrator.step", "rk4 needs a step")),
            (MethodName::Rk45, Some(_)) => {
                return Err(config_error("integrator.step", "rk45 chooses its own step; use rel_tol/abs_tol"))
            }
            (MethodName::Rk45, None) => {
                let Method::Rk45 { rel_tol, abs_tol } = o.method else { unreachable!() };
                Method::Rk45 { rel_tol: r.rel_tol.unwrap_or(rel_tol), abs_tol: r.abs_tol.unwrap_or(abs_tol) }
            }
        };
        o.t_max = r.t_max.unwrap_or(o.t_max);
        o.convergence_radius = r.convergence_radius.unwrap_or(o.convergence_radius);
        o.stall_window = r.stall_window.unwrap_or(o.stall_window);
        o.residual_tol = r.residual_tol.unwrap_or(o.residual_tol);
        o.validate().map_err(|e| config_error("integrator", core_message(&e)))?;
        Ok(o)
    }

    pub fn solver_options(&self) -> Result<SolverOptions, CliError> {
        let r = &self.solver;
        let mut o = SolverOptions::default();
        o.bracket_grid = r.bracket_grid.unwrap_or(o.bracket_grid);
        o.root_tol = r.root_tol.unwrap_or(o.root_tol);
        o.dedup_tol = r.dedup_tol.unwrap_or(o.dedup_tol);
        o.validate().map_err(|e| config_error("solver", core_message(&e)))?;
        Ok(o)
    }
}

/// Library error text without its category prefix.
pub(crate) fn core_message(e: &twopatch::Error) -> String {
    match e {
        twopatch::Error::Domain(m) | twopatch::Error::Unsupported(m) => m.clone(),
        other => other.to_string(),
    }
}

/// Points a parameter error at the offending key, e.g. `physical.D: D must be positive, got 0`.
fn physical_error(e: &twopatch::Error) -> CliError {
    let msg = core_message(e);
    let key = msg.split_whitespace().next().unwrap_or("");
    config_error(&format!("physical.{key}"), msg)
}
