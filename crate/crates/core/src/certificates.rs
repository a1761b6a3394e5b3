//! Closed-form sufficient conditions for extinction to be the only equilibrium.
//!
//! Every check returns a [`CertificateVerdict`] listing each hypothesis with
//! the two numbers it compares, so a failing certificate explains itself. All
//! inequalities are strict; equality on a boundary fails the condition.

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::model::{NormalizedParams, PatchParams, ReactionKind};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Relative tolerance used to call the two branches of the `Omega1` bound equal.
const TIE_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CertificateId {
    /// Extinction theorem in physical parameters (`a = 1/2`).
    ThmMain,
    /// Its normalized form.
    Corollary,
    /// General viability threshold, upper bound as printed.
    ThmGeneralA,
    /// General viability threshold with the re-derived upper bound.
    ThmGeneralARederived,
    /// Necessary and sufficient condition for the sawtooth reaction.
    SawtoothPredicate,
}

impl CertificateId {
    pub const ALL: [CertificateId; 5] = [
        CertificateId::ThmMain,
        CertificateId::Corollary,
        CertificateId::ThmGeneralA,
        CertificateId::ThmGeneralARederived,
        CertificateId::SawtoothPredicate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CertificateId::ThmMain => "thm-main",
            CertificateId::Corollary => "corollary",
            CertificateId::ThmGeneralA => "thm-general-a",
            CertificateId::ThmGeneralARederived => "thm-general-a-rederived",
            CertificateId::SawtoothPredicate => "sawtooth-predicate",
        }
    }

    /// Whether the certificate is an equivalence rather than a sufficient condition.
    pub fn is_iff(self) -> bool {
        self == CertificateId::SawtoothPredicate
    }
}

impl fmt::Display for CertificateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CertificateId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CertificateId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| domain(format!("unknown certificate `{s}`")))
    }
}

/// One evaluated hypothesis `left < right` (or membership, encoded the same way).
#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub name: String,
    pub holds: bool,
    pub left: f64,
    pub right: f64,
}

impl Condition {
    pub(crate) fn less(name: impl Into<String>, left: f64, right: f64) -> Self {
        Self { name: name.into(), holds: left < right, left, right }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateVerdict {
    pub certificate: CertificateId,
    /// Conjunction of all conditions.
    pub holds: bool,
    pub conditions: Vec<Condition>,
    pub bounds: Vec<(String, f64)>,
    /// For the general-threshold theorem: `Some(true)` when the printed upper
    /// bound fails to reduce to the `a = 1/2` bound.
    pub upper_bound_flagged: Option<bool>,
}

impl CertificateVerdict {
    pub(crate) fn new(certificate: CertificateId, conditions: Vec<Condition>, bounds: Vec<(String, f64)>) -> Self {
        let holds = conditions.iter().all(|c| c.holds);
        Self { certificate, holds, conditions, bounds, upper_bound_flagged: None }
    }

    pub fn bound(&self, name: &str) -> Option<f64> {
        self.bounds.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    pub fn failing(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| !c.holds)
    }
}

impl fmt::Display for CertificateVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "certificate {}: {}", self.certificate, if self.holds { "holds" } else { "fails" })?;
        for c in &self.conditions {
            writeln!(f, "  [{}] {}: {:.16e} < {:.16e}", if c.holds { "ok" } else { "FAIL" }, c.name, c.left, c.right)?;
        }
        for (name, v) in &self.bounds {
            writeln!(f, "  {name} = {v:.16e}")?;
        }
        if let Some(flag) = self.upper_bound_flagged {
            writeln!(f, "  upper-bound consistency flag at a=1/2: {}", if flag { "RAISED" } else { "clear" })?;
        }
        Ok(())
    }
}

/// Which fraction attains the maximum in the `Omega1` exclusion bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    First,
    Second,
    Tie,
}

fn gamma_below_half(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 0.5 {
        Ok(())
    } else {
        Err(domain(format!("gamma must lie in (0, 1/2), got {gamma}")))
    }
}

/// Lower bound on `alpha / beta` excluding equilibria in `Omega1`:
/// `max{2 sqrt3 / (9 (1-g)(2-g)), sqrt3 / (18 (1-2g)(1-g))}`.
pub fn lemma_omega1_lower_bound(gamma: f64) -> Result<(f64, Branch)> {
    gamma_below_half(gamma)?;
    let first = 2.0 * SQRT3 / (9.0 * (1.0 - gamma) * (2.0 - gamma));
    let second = SQRT3 / (18.0 * (1.0 - 2.0 * gamma) * (1.0 - gamma));
    let branch = if (first - second).abs() <= TIE_TOL * first.max(second) {
        Branch::Tie
    } else if first > second {
        Branch::First
    } else {
        Branch::Second
    };
    Ok((first.max(second), branch))
}

/// Upper bound on `alpha / beta` excluding equilibria in `Omega2`:
/// `9 (1-2g)(1-g) / (2 sqrt3 g^2)`.
pub fn lemma_omega2_upper_bound(gamma: f64) -> Result<f64> {
    gamma_below_half(gamma)?;
    Ok(9.0 * (1.0 - 2.0 * gamma) * (1.0 - gamma) / (2.0 * SQRT3 * gamma * gamma))
}

fn require_half(p: &PatchParams) -> Result<()> {
    if p.a1() == 0.5 && p.a2() == 0.5 {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "thm-main needs a1 = a2 = 1/2 (got {}, {}); use thm-general-a instead",
            p.a1(),
            p.a2()
        )))
    }
}

/// Extinction theorem in physical parameters.
pub fn check_thm_main(p: &PatchParams) -> Result<CertificateVerdict> {
    require_half(p)?;
    let (d, l1, l2, k1, k2) = (p.d(), p.lambda1(), p.lambda2(), p.k1(), p.k2());
    let lower = f64::max(
        2.0 * SQRT3 * k1 * k1 / (9.0 * (k1 - k2) * (2.0 * k1 - k2)),
        SQRT3 * k1 * k1 / (18.0 * (k1 - 2.0 * k2) * (k1 - k2)),
    );
    let upper = 9.0 * (k1 - 2.0 * k2) * (k1 - k2) / (2.0 * SQRT3 * k2 * k2);
    let ratio = l1 / l2;
    let conditions = vec![
        Condition::less("max(lambda1, lambda2) < 4 D", l1.max(l2), 4.0 * d),
        Condition::less("2 k2 < k1", 2.0 * k2, k1),
        Condition::less("lower < lambda1/lambda2", lower, ratio),
        Condition::less("lambda1/lambda2 < upper", ratio, upper),
    ];
    let bounds = vec![("lower".into(), lower), ("upper".into(), upper), ("ratio".into(), ratio)];
    Ok(CertificateVerdict::new(CertificateId::ThmMain, conditions, bounds))
}

/// Normalized extinction condition; failing hypotheses are listed, never raised.
pub fn check_corollary(n: &NormalizedParams) -> CertificateVerdict {
    let (a, b, g) = (n.alpha(), n.beta(), n.gamma());
    let lower = lemma_omega1_lower_bound(g).map(|(v, _)| v).unwrap_or(f64::NAN);
    let upper = lemma_omega2_upper_bound(g).unwrap_or(f64::NAN);
    let ratio = a / b;
    let conditions = vec![
        Condition::less("alpha < 4", a, 4.0),
        Condition::less("beta < 4", b, 4.0),
        Condition::less("gamma < 1/2", g, 0.5),
        Condition::less("lower < alpha/beta", lower, ratio),
        Condition::less("alpha/beta < upper", ratio, upper),
    ];
    let bounds = vec![("lower".into(), lower), ("upper".into(), upper), ("ratio".into(), ratio)];
    CertificateVerdict::new(CertificateId::Corollary, conditions, bounds)
}

/// `(a+1)(a-1/2)(a-2)`.
fn cubic_term(a: f64) -> f64 {
    (a + 1.0) * (a - 0.5) * (a - 2.0)
}

/// Maximum of `s (1-s)(s-a)` on `(0, 1)` in closed form.
fn cubic_peak(a: f64) -> f64 {
    2.0 / 27.0 * (cubic_term(a) + (a * a - a + 1.0).powf(1.5))
}

fn general_a_domain(a: f64, k1: f64, k2: f64) -> Result<()> {
    if !(a > 0.0 && a < 1.0) {
        return Err(domain(format!("a must lie in (0, 1), got {a}")));
    }
    if !(k1 > 0.0 && k2 > 0.0) {
        return Err(domain("capacities must be positive"));
    }
    if k2 >= a * k1 {
        return Err(domain(format!("need k2 < a k1, got k2 = {k2}, a k1 = {}", a * k1)));
    }
    Ok(())
}

/// Bounds `(L, U)` on `lambda1 / lambda2` for a general threshold, both
/// evaluated exactly as printed. `U` is negative for every `a` in `(0, 1)`;
/// see [`upper_bound_consistency`] and [`general_a_upper_rederived`].
pub fn general_a_bounds(a: f64, k1: f64, k2: f64) -> Result<(f64, f64)> {
    general_a_domain(a, k1, k2)?;
    let lower = 2.0 * k1 * k1 * (cubic_term(a) + (1.0 + a * (a - 1.0)).powf(1.5)) / (27.0 * (k1 - k2))
        * f64::max(1.0 / (a * a * (k1 - a * k2)), 1.0 / (a * k1 - k2));
    let upper =
        2.0 * (a * k1 - k2) * (k1 - k2) * (cubic_term(a) - (1.0 - a * (1.0 - a)).powf(1.5)) / ((1.0 - a) * k2 * k2);
    Ok((lower, upper))
}

/// Upper bound obtained by repeating the `Omega2` exclusion argument for a
/// general threshold: the line `y = (x - alpha M)/gamma`, `M = max f`, must
/// meet `y = a/gamma` before `N_y` does, which gives
/// `lambda1/lambda2 < a^2 (a k1 - k2)(k1 - k2) / (k2^2 M)`.
/// Reduces to the `a = 1/2` bound exactly.
pub fn general_a_upper_rederived(a: f64, k1: f64, k2: f64) -> Result<f64> {
    general_a_domain(a, k1, k2)?;
    Ok(a * a * (a * k1 - k2) * (k1 - k2) / (k2 * k2 * cubic_peak(a)))
}

/// Comparison of the printed `U(1/2, k1, k2)` with the `a = 1/2` upper bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpperBoundConsistency {
    pub printed: f64,
    pub reference: f64,
    /// True when the two differ beyond relative 1e-12.
    pub flagged: bool,
}

pub fn upper_bound_consistency(k1: f64, k2: f64) -> Result<UpperBoundConsistency> {
    let (_, printed) = general_a_bounds(0.5, k1, k2)?;
    let reference = 9.0 * (k1 - 2.0 * k2) * (k1 - k2) / (2.0 * SQRT3 * k2 * k2);
    let flagged = (printed - reference).abs() > 1e-12 * reference.abs();
    Ok(UpperBoundConsistency { printed, reference, flagged })
}

/// Which upper bound [`check_thm_general_a_with`] uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpperBoundForm {
    AsPrinted,
    Rederived,
}

/// General-threshold theorem with the upper bound as printed.
pub fn check_thm_general_a(p: &PatchParams) -> Result<CertificateVerdict> {
    check_thm_general_a_with(p, UpperBoundForm::AsPrinted)
}

pub fn check_thm_general_a_with(p: &PatchParams, form: UpperBoundForm) -> Result<CertificateVerdict> {
    if p.a1() != p.a2() {
        return Err(Error::Unsupported(format!("closed-form bounds need a1 = a2 (got {}, {})", p.a1(), p.a2())));
    }
    let a = p.a1();
    let (d, l1, l2, k1, k2) = (p.d(), p.lambda1(), p.lambda2(), p.k1(), p.k2());
    let (lower, printed) = general_a_bounds(a, k1, k2).unwrap_or((f64::NAN, f64::NAN));
    let rederived = general_a_upper_rederived(a, k1, k2).unwrap_or(f64::NAN);
    let upper = match form {
        UpperBoundForm::AsPrinted => printed,
        UpperBoundForm::Rederived => rederived,
    };
    let ratio = l1 / l2;
    let conditions = vec![
        Condition::less("max(lambda1, lambda2) < 3 D / (a^2 - a + 1)", l1.max(l2), 3.0 * d / (a * a - a + 1.0)),
        Condition::less("k2 < a k1", k2, a * k1),
        Condition::less("L < lambda1/lambda2", lower, ratio),
        Condition::less("lambda1/lambda2 < U", ratio, upper),
    ];
    let bounds = vec![
        ("L".into(), lower),
        ("U".into(), upper),
        ("U_printed".into(), printed),
        ("U_rederived".into(), rederived),
        ("ratio".into(), ratio),
    ];
    let id = match form {
        UpperBoundForm::AsPrinted => CertificateId::ThmGeneralA,
        UpperBoundForm::Rederived => CertificateId::ThmGeneralARederived,
    };
    let mut verdict = CertificateVerdict::new(id, conditions, bounds);
    // the printed bound's failure at a = 1/2 does not depend on k1, k2
    verdict.upper_bound_flagged = Some(upper_bound_consistency(1.0, 0.25)?.flagged);
    Ok(verdict)
}

/// Large-dispersal total population of two logistic patches:
/// `k1 + k2 + (k1 - k2)(l1 k2 - l2 k1)/(l1 k2 + l2 k1)`.
pub fn perfect_mixing_capacity(k1: f64, k2: f64, lambda1: f64, lambda2: f64) -> f64 {
    k1 + k2 + (k1 - k2) * (lambda1 * k2 - lambda2 * k1) / (lambda1 * k2 + lambda2 * k1)
}

/// Threshold of a reaction for the general-threshold certificates.
pub fn viability_of(r: ReactionKind) -> Option<f64> {
    match r {
        ReactionKind::CubicAllee { a } => Some(a),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::normalize;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn thm_main_bounds_at_one_third() {
        let p = PatchParams::new(1.0, 1.0, 1.0, 1.0, 1.0 / 3.0).unwrap();
        let v = check_thm_main(&p).unwrap();
        // max{2 sqrt3 / 10, sqrt3 / 4}
        assert!(rel(v.bound("lower").unwrap(), SQRT3 / 4.0) < 1e-14);
        assert!(rel(v.bound("upper").unwrap(), 3.0 * SQRT3) < 1e-14);
        assert!(v.holds);
    }

    #[test]
    fn thm_main_capacity_condition() {
        let p = PatchParams::new(1.0, 1.0, 1.0, 1.0, 0.5).unwrap();
        let v = check_thm_main(&p).unwrap();
        assert!(!v.holds);
        assert_eq!(v.failing().next().unwrap().name, "2 k2 < k1");
        let p = PatchParams::with_viability(1.0, 1.0, 1.0, 1.0, 0.2, 0.4, 0.4).unwrap();
        assert!(matches!(check_thm_main(&p), Err(Error::Unsupported(_))));
    }

    #[test]
    fn omega1_branches() {
        let (v, b) = lemma_omega1_lower_bound(2.0 / 7.0).unwrap();
        assert_eq!(b, Branch::Tie);
        assert!(rel(v, 49.0 * SQRT3 / 270.0) < 1e-14);
        assert_eq!(lemma_omega1_lower_bound(0.1).unwrap().1, Branch::First);
        assert_eq!(lemma_omega1_lower_bound(0.4).unwrap().1, Branch::Second);
        assert!(lemma_omega1_lower_bound(0.5).is_err());
        assert!(lemma_omega1_lower_bound(0.0).is_err());
    }

    #[test]
    fn omega2_bound_values() {
        assert!(rel(lemma_omega2_upper_bound(1.0 / 3.0).unwrap(), 3.0 * SQRT3) < 1e-14);
        // 9 (1/5)(3/5) / (2 sqrt3 4/25) = 27 / (8 sqrt3)
        let v = lemma_omega2_upper_bound(0.4).unwrap();
        assert!(rel(v, 27.0 / (8.0 * SQRT3)) < 1e-14);
        assert!((v - 1.949).abs() < 1e-3);
        assert!(lemma_omega2_upper_bound(0.5 - 1e-12).unwrap() < 1e-9);
        assert!(lemma_omega2_upper_bound(0.7).is_err());
    }

    #[test]
    fn corollary_examples() {
        let v = check_corollary(&NormalizedParams::new(1.0, 1.0, 1.0 / 3.0).unwrap());
        assert!(v.holds);
        assert!(rel(v.bound("lower").unwrap(), SQRT3 / 4.0) < 1e-14);
        let v = check_corollary(&NormalizedParams::new(5.0, 1.0, 1.0 / 3.0).unwrap());
        assert!(!v.holds);
        assert_eq!(v.failing().next().unwrap().name, "alpha < 4");
        let v = check_corollary(&NormalizedParams::new(1.0, 1.0, 0.45).unwrap());
        assert!(!v.holds);
        let up = v.bound("upper").unwrap();
        assert!(rel(up, 9.0 * 0.1 * 0.55 / (2.0 * SQRT3 * 0.2025)) < 1e-14);
        assert!(up < 1.0);
        let v = check_corollary(&NormalizedParams::new(1.0, 1.0, 0.7).unwrap());
        assert!(!v.holds);
        assert!(v.bound("lower").unwrap().is_nan());
    }

    #[test]
    fn general_a_printed_upper_is_negative_at_half() {
        let (_, u) = general_a_bounds(0.5, 1.0, 1.0 / 3.0).unwrap();
        assert!(u < 0.0);
        // -(3 sqrt3 / 4)(k1 - 2 k2)(k1 - k2) / k2^2
        assert!(rel(u, -(3.0 * SQRT3 / 4.0) * (1.0 / 3.0) * (2.0 / 3.0) * 9.0) < 1e-13);
        let c = upper_bound_consistency(1.0, 1.0 / 3.0).unwrap();
        assert!(c.flagged);
        assert!(rel(c.reference, 3.0 * SQRT3) < 1e-14);
        assert!(general_a_bounds(0.5, 1.0, 0.5).is_err());
    }

    #[test]
    fn general_a_threshold_condition() {
        let p = PatchParams::new(1.0, 3.0, 3.0, 1.0, 0.2).unwrap();
        let v = check_thm_general_a(&p).unwrap();
        assert_eq!(v.conditions[0].right, 4.0);
        assert_eq!(v.upper_bound_flagged, Some(true));
        assert!(!v.holds);
        let main = check_thm_main(&p).unwrap();
        assert!(rel(v.bound("L").unwrap(), main.bound("lower").unwrap()) < 1e-12);
        assert!(rel(v.bound("U_rederived").unwrap(), main.bound("upper").unwrap()) < 1e-12);
        let p = PatchParams::with_viability(1.0, 1.0, 1.0, 1.0, 0.2, 0.4, 0.6).unwrap();
        assert!(matches!(check_thm_general_a(&p), Err(Error::Unsupported(_))));
    }

    #[test]
    fn the_two_threshold_expressions_agree() {
        for i in 1..1000 {
            let a = i as f64 / 1000.0;
            assert!(((1.0 + a * (a - 1.0)) - (1.0 - a * (1.0 - a))).abs() <= 1e-15);
        }
    }

    #[test]
    fn mixing_capacity_examples() {
        assert_eq!(perfect_mixing_capacity(1.5, 1.5, 2.0, 7.0), 3.0);
        assert_eq!(perfect_mixing_capacity(2.0, 1.0, 2.0, 1.0), 3.0);
        // equal rates still carry the correction -(k1-k2)^2/(k1+k2)
        assert!(rel(perfect_mixing_capacity(2.0, 1.0, 1.0, 1.0), 3.0 - 1.0 / 3.0) < 1e-15);
    }

    #[test]
    fn certificate_ids_round_trip() {
        for id in CertificateId::ALL {
            assert_eq!(id.as_str().parse::<CertificateId>().unwrap(), id);
        }
        assert!("thm".parse::<CertificateId>().is_err());
    }

    proptest! {
        #[test]
        fn thm_main_matches_corollary(
            d in 0.05f64..5.0,
            l1 in 0.01f64..20.0,
            l2 in 0.01f64..20.0,
            k1 in 0.1f64..10.0,
            ratio in 0.01f64..1.0,
        ) {
            let p = PatchParams::new(d, l1, l2, k1, k1 * ratio).unwrap();
            let thm = check_thm_main(&p).unwrap();
            let cor = check_corollary(&normalize(&p));
            prop_assert_eq!(thm.holds, cor.holds);
        }

        #[test]
        fn lower_bound_reduces_at_half(k1 in 0.1f64..10.0, ratio in 0.001f64..0.499) {
            let k2 = k1 * ratio;
            let (l, _) = general_a_bounds(0.5, k1, k2).unwrap();
            let p = PatchParams::new(1.0, 1.0, 1.0, k1, k2).unwrap();
            let eq2 = check_thm_main(&p).unwrap().bound("lower").unwrap();
            prop_assert!(rel(l, eq2) < 1e-12);
            let u = general_a_upper_rederived(0.5, k1, k2).unwrap();
            let eq2u = check_thm_main(&p).unwrap().bound("upper").unwrap();
            prop_assert!(rel(u, eq2u) < 1e-12);
        }

        #[test]
        fn branch_switches_at_two_sevenths(g in 0.001f64..0.499) {
            let (_, b) = lemma_omega1_lower_bound(g).unwrap();
            if g < 2.0 / 7.0 - 1e-9 {
                prop_assert_eq!(b, Branch::First);
            } else if g > 2.0 / 7.0 + 1e-9 {
                prop_assert_eq!(b, Branch::Second);
            }
        }
    }
}
