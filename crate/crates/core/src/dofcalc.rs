//! Closed-form multiplexing-gain values and bounds.
//!
//! The asymmetric model has an exact formula for every parameter choice.
//! The symmetric model has an exact or nearly exact answer when the side
//! information is balanced (`t_ℓ + r_ℓ = t_r + r_r`), and otherwise a
//! family of lower and upper bounds that are merged into an interval.

use num::rational::Rational64;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::netmodel::NetworkParams;
use crate::tridiag::Alpha;

/// Integer ceiling of `num / den` that is zero for nonpositive numerators.
fn ceil_pos(num: i64, den: i64) -> usize {
    if num <= 0 {
        0
    } else {
        ((num + den - 1) / den) as usize
    }
}

fn ser_ratio<S: Serializer>(r: &Rational64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

/// Silencing auxiliaries of one periodic bound: `β`, `γ = ⌊K/β⌋`,
/// `κ = K mod β` and the tail correction `θ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodAux {
    pub beta: usize,
    pub gamma: usize,
    pub kappa: usize,
    pub theta: usize,
}

impl PeriodAux {
    fn new(k: usize, beta: usize, theta_of_kappa: impl Fn(usize) -> usize) -> Self {
        let (gamma, kappa) = (k / beta, k % beta);
        Self { beta, gamma, kappa, theta: theta_of_kappa(kappa) }
    }

    /// `K − 2γ − θ`, clipped at zero.
    pub fn pair_value(&self, k: usize) -> usize {
        k.saturating_sub(2 * self.gamma + self.theta)
    }
}

/// `θ` for the pair-silencing lower bounds: 0, 1 or 2 for `κ = 0`, `1`, `≥ 2`.
pub fn pair_theta(kappa: usize) -> usize {
    kappa.min(2)
}

/// Which threshold to use for the tail corrections of the upper bounds.
///
/// The bound statements and the accompanying proof prose disagree by one on
/// these thresholds; `Statement` follows the bound statements and is the
/// default, `Prose` evaluates the alternative for comparison.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdRule {
    #[default]
    Statement,
    Prose,
}

/// `θ_4` of the first upper bound.
pub fn theta4(params: &NetworkParams, kappa: usize, rule: ThresholdRule) -> usize {
    let s = params.side();
    let m = s.left_sum().min(s.right_sum());
    let threshold = match rule {
        ThresholdRule::Statement => m + 2,
        ThresholdRule::Prose => m + 1,
    };
    usize::from(kappa >= threshold)
}

/// `θ_5` of the second upper bound (`mirrored` selects the third bound).
pub fn theta5(params: &NetworkParams, kappa: usize, rule: ThresholdRule, mirrored: bool) -> usize {
    let s = params.side();
    let far = if mirrored { s.left_sum() } else { s.right_sum() };
    let threshold = match rule {
        ThresholdRule::Statement => far + 1,
        ThresholdRule::Prose => far + 2,
    };
    usize::from(kappa >= threshold)
}

/// `γ = ⌈(K − t_ℓ − r_ℓ − 1)/β⌉` with `β = Σ + 2`, zero when the numerator is
/// nonpositive.
pub fn asym_gamma(params: &NetworkParams) -> usize {
    let s = params.side();
    ceil_pos(params.k as i64 - s.left_sum() as i64 - 1, s.sigma() as i64 + 2)
}

/// Multiplexing gain of the asymmetric network: `K − γ`.
pub fn asym_mg(params: &NetworkParams) -> usize {
    params.k - asym_gamma(params)
}

/// Per-user asymptote of the asymmetric network: `(Σ+1)/(Σ+2)`.
pub fn asym_mg_per_user(params: &NetworkParams) -> Rational64 {
    let s = params.sigma() as i64;
    Rational64::new(s + 1, s + 2)
}

/// An integer interval with the labels of the results that produced each end.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DofInterval {
    pub lower: usize,
    pub upper: usize,
    pub exact: bool,
    pub lower_by: String,
    pub upper_by: String,
}

impl DofInterval {
    fn new(lower: usize, upper: usize, lower_by: impl Into<String>, upper_by: impl Into<String>) -> Self {
        Self { lower, upper, exact: lower == upper, lower_by: lower_by.into(), upper_by: upper_by.into() }
    }

    /// A single exact value.
    pub fn exact(value: usize, by: &str) -> Self {
        Self::new(value, value, by, by)
    }
}

/// A rational interval for the per-user asymptote.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PerUserAsymptote {
    #[serde(serialize_with = "ser_ratio")]
    pub value_lower: Rational64,
    #[serde(serialize_with = "ser_ratio")]
    pub value_upper: Rational64,
    pub exact: bool,
}

/// The case of the balanced symmetric formula that applies to an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BalancedCase {
    /// `K ≤ s + 1`: full cooperation inside one cluster.
    Case1,
    /// `K > s + 2`, `u_{s+1} ≠ 0`, `u_s = 0`: interval of width one.
    Case2,
    /// `K > s + 2`, `u_{s+1} ≠ 0`, `u_s ≠ 0`: exact.
    Case3,
    /// `K > s + 2`, `u_{s+1} = 0`: interval.
    Case4,
    /// `K = s + 2`: not covered by the case split.
    Uncovered,
}

fn require_balanced(params: &NetworkParams) -> Result<usize> {
    let s = params.side();
    if !s.is_balanced() {
        return Err(Error::Precondition(format!(
            "requires balanced side information t_ℓ+r_ℓ = t_r+r_r, got {s}"
        )));
    }
    Ok(s.left_sum())
}

/// Classifies a balanced symmetric instance; `s = t_ℓ + r_ℓ`.
pub fn balanced_case(params: &NetworkParams, alpha: &Alpha) -> Result<BalancedCase> {
    let s = require_balanced(params)?;
    let k = params.k;
    Ok(if k <= s + 1 {
        BalancedCase::Case1
    } else if k == s + 2 {
        BalancedCase::Uncovered
    } else if alpha.u_is_zero(s + 1) {
        BalancedCase::Case4
    } else if alpha.u_is_zero(s) {
        BalancedCase::Case2
    } else {
        BalancedCase::Case3
    })
}

/// Interval given by the balanced symmetric formula, or `None` when the
/// instance is not covered by the case split.
pub fn balanced_interval(params: &NetworkParams, alpha: &Alpha) -> Result<Option<DofInterval>> {
    let s = require_balanced(params)?;
    let k = params.k;
    let case = balanced_case(params, alpha)?;
    Ok(match case {
        BalancedCase::Case1 => Some(DofInterval::exact(k - usize::from(alpha.u_is_zero(k)), "balanced case 1")),
        BalancedCase::Case2 => {
            let v = k - k / (s + 2);
            Some(DofInterval::new(v - 1, v, "balanced case 2", "balanced case 2"))
        }
        BalancedCase::Case3 => Some(DofInterval::exact(k - k / (s + 2), "balanced case 3")),
        BalancedCase::Case4 => {
            let p = 2 * s + 3;
            let delta2 = usize::from(k % p > s + 1);
            let upper = k - 2 * (k / p) - delta2;
            Some(DofInterval::new(k - k / (s + 1), upper, "balanced case 4", "balanced case 4"))
        }
        BalancedCase::Uncovered => None,
    })
}

/// Multiplexing gain of the balanced symmetric network.
///
/// When `K = t_ℓ + r_ℓ + 2` the case split does not apply and the merged
/// general-bound interval is returned with provenance "general bounds".
pub fn sym_mg_symmetric_si(params: &NetworkParams, alpha: &Alpha) -> Result<DofInterval> {
    match balanced_interval(params, alpha)? {
        Some(iv) => Ok(iv),
        None => {
            let mut iv = sym_dof_interval(params, GainKind::Equal(alpha)).interval;
            iv.lower_by = format!("general bounds ({})", iv.lower_by);
            iv.upper_by = format!("general bounds ({})", iv.upper_by);
            Ok(iv)
        }
    }
}

/// Per-user asymptote of the balanced symmetric network.
pub fn sym_mg_per_user(params: &NetworkParams, alpha: &Alpha) -> Result<PerUserAsymptote> {
    let s = require_balanced(params)? as i64;
    Ok(if alpha.u_is_zero(s as usize + 1) {
        PerUserAsymptote {
            value_lower: Rational64::new(s, s + 1),
            value_upper: Rational64::new(2 * s + 1, 2 * s + 3),
            exact: false,
        }
    } else {
        let v = Rational64::new(s + 1, s + 2);
        PerUserAsymptote { value_lower: v, value_upper: v, exact: true }
    })
}

/// One evaluated bound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundValue {
    pub label: String,
    pub value: Option<usize>,
    pub applicable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aux: Option<PeriodAux>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BoundValue {
    fn applicable(label: &str, value: usize, aux: PeriodAux) -> Self {
        Self { label: label.into(), value: Some(value), applicable: true, aux: Some(aux), note: None }
    }

    fn not_applicable(label: &str, note: impl Into<String>) -> Self {
        Self { label: label.into(), value: None, applicable: false, aux: None, note: Some(note.into()) }
    }
}

/// Auxiliaries of the four pair-silencing lower bounds, `None` when `β = 0`.
pub fn lower_bound_aux(params: &NetworkParams) -> [(&'static str, Option<PeriodAux>); 4] {
    let s = params.side();
    let k = params.k;
    let aux = |beta: usize| (beta > 0).then(|| PeriodAux::new(k, beta, pair_theta));
    [
        ("LB1", aux(s.sigma())),
        ("LB2", aux(s.left_sum() + 1)),
        ("LB3", aux(s.right_sum() + 1)),
        ("LB4", aux(s.r_left + s.r_right + 3)),
    ]
}

/// The four pair-silencing lower bounds. They hold for every cross-gain.
pub fn sym_lower_bounds(params: &NetworkParams) -> Vec<BoundValue> {
    lower_bound_aux(params)
        .into_iter()
        .map(|(label, aux)| match aux {
            Some(a) => BoundValue::applicable(label, a.pair_value(params.k), a),
            None => BoundValue::not_applicable(label, "period β is zero"),
        })
        .collect()
}

/// Auxiliaries of the first upper bound.
pub fn ub1_aux(params: &NetworkParams, rule: ThresholdRule) -> PeriodAux {
    PeriodAux::new(params.k, params.sigma() + 4, |kappa| theta4(params, kappa, rule))
}

/// Auxiliaries of the second (or, mirrored, third) upper bound.
pub fn ub2_aux(params: &NetworkParams, rule: ThresholdRule, mirrored: bool) -> PeriodAux {
    PeriodAux::new(params.k, params.sigma() + 3, |kappa| theta5(params, kappa, rule, mirrored))
}

/// The three upper bounds for equal cross-gains `α`.
///
/// The second bound needs `u_{t_ℓ+r_ℓ+1}(α) = 0` and the third needs
/// `u_{t_r+r_r+1}(α) = 0`; otherwise they are reported as not applicable.
pub fn sym_upper_bounds(params: &NetworkParams, alpha: &Alpha, rule: ThresholdRule) -> Vec<BoundValue> {
    let s = params.side();
    let k = params.k;
    let a1 = ub1_aux(params, rule);
    let mut out = vec![BoundValue::applicable("UB1", a1.pair_value(k), a1)];
    for (label, order, mirrored) in [("UB2", s.left_sum() + 1, false), ("UB3", s.right_sum() + 1, true)] {
        if alpha.u_is_zero(order) {
            let a = ub2_aux(params, rule, mirrored);
            out.push(BoundValue::applicable(label, a.pair_value(k), a));
        } else {
            out.push(BoundValue::not_applicable(label, format!("requires u_{order}(α) = 0")));
        }
    }
    out
}

/// The cross-gain description used by [`sym_dof_interval`].
#[derive(Clone, Copy, Debug)]
pub enum GainKind<'a> {
    /// All cross-gains equal to the given value.
    Equal(&'a Alpha),
    /// Generic gains drawn from a continuous law.
    Random,
}

/// Merged interval with every evaluated bound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DofReport {
    pub interval: DofInterval,
    pub bounds: Vec<BoundValue>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// Merges every applicable bound into one interval.
///
/// For random gains only the determinant-free bounds are used: the four
/// lower bounds and the first upper bound.
pub fn sym_dof_interval(params: &NetworkParams, gains: GainKind<'_>) -> DofReport {
    let k = params.k;
    let mut bounds = sym_lower_bounds(params);
    let mut flags = Vec::new();
    match gains {
        GainKind::Equal(alpha) => bounds.extend(sym_upper_bounds(params, alpha, ThresholdRule::Statement)),
        GainKind::Random => {
            let a = ub1_aux(params, ThresholdRule::Statement);
            bounds.push(BoundValue::applicable("UB1", a.pair_value(k), a));
        }
    }
    let mut lower = (0, "trivial".to_string());
    let mut upper = (k, "trivial".to_string());
    for b in bounds.iter().filter(|b| b.applicable) {
        let v = b.value.unwrap_or(0);
        if b.label.starts_with("LB") && v > lower.0 {
            lower = (v, b.label.clone());
        }
        if b.label.starts_with("UB") && v < upper.0 {
            upper = (v, b.label.clone());
        }
    }
    if let GainKind::Equal(alpha) = gains {
        if params.side().is_balanced() {
            match balanced_interval(params, alpha) {
                Ok(Some(t)) => {
                    if t.lower > lower.0 {
                        lower = (t.lower, t.lower_by.clone());
                    }
                    if t.upper < upper.0 {
                        upper = (t.upper, t.upper_by.clone());
                    }
                }
                Ok(None) => flags.push("K = t_ℓ+r_ℓ+2 is outside the balanced case split".to_string()),
                Err(_) => {}
            }
        }
    }
    if let GainKind::Equal(alpha) = gains {
        let central = params.side().r_left + params.side().r_right + 1;
        if lower.1 == "LB4" && alpha.u_is_zero(central) {
            flags.push(format!(
                "the LB4 value has no certified plan here: its central decoder needs H_{central}(α), which is singular"
            ));
        }
    }
    if lower.0 > upper.0 {
        flags.push(format!("inconsistent bounds: lower {} ({}) exceeds upper {} ({})", lower.0, lower.1, upper.0, upper.1));
    }
    DofReport { interval: DofInterval::new(lower.0, upper.0, lower.1, upper.1), bounds, flags }
}

/// The divergent part `−ν ln|α − α*|` of the power offset near a critical gain.
pub fn power_offset_prediction(alpha: f64, alpha_star: f64, nu: usize) -> Result<f64> {
    let d = (alpha - alpha_star).abs();
    if d == 0.0 {
        return Err(Error::Precondition("the offset is infinite at α = α*".into()));
    }
    Ok(-(nu as f64) * d.ln())
}
