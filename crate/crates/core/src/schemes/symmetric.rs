//! MIMO plans for the symmetric network with balanced side information.
//!
//! Silenced pairs split the chain into runs of at most `s + 1 = t_ℓ+r_ℓ+1`
//! consecutive pairs. Each run is served by one MIMO scheme (point-to-point,
//! broadcast or multiple access) that claims the rank of its channel matrix.

use std::collections::{BTreeMap, BTreeSet};

use super::{MimoMode, MimoStream, PlanInstance, SchemeFamily, StrategyTag, Subnet, SubnetKind, SubnetScheme, TransmissionPlan};
use crate::dofcalc::{balanced_case, balanced_interval, BalancedCase};
use crate::error::{Error, Result};
use crate::linalg::{rank, select};
use crate::netmodel::{h_matrix, NetworkParams, SideInfo, Topology};
use crate::tridiag::Alpha;

/// Stand-in cross-gain used to size the streams of a forced silencing
/// pattern, so that the claim does not depend on the actual gain.
const GENERIC_STAND_IN: f64 = std::f64::consts::FRAC_1_PI;

/// Lexicographically smallest `(t_ℓ', t_r', r_ℓ', r_r')` with
/// `κ = t_ℓ'+r_ℓ'+1 = t_r'+r_r'+1` and each entry at most its full value.
pub fn mimo_reduced_params(side: &SideInfo, kappa: usize) -> SideInfo {
    let span = kappa.saturating_sub(1);
    let tl = span.saturating_sub(side.r_left);
    let tr = span.saturating_sub(side.r_right);
    SideInfo::new(tl, tr, span - tl, span - tr)
}

type RankFn<'a> = dyn Fn(&[usize], &[usize]) -> usize + 'a;

/// Builds the MIMO subnet for pairs `start..start+len` with greedy
/// (chain-rule) prelog allocation.
fn mimo_subnet(
    start: usize,
    len: usize,
    side: &SideInfo,
    rank_of: &RankFn<'_>,
    served: &mut BTreeMap<usize, (StrategyTag, usize)>,
) -> Subnet {
    let red = mimo_reduced_params(side, len);
    let all: Vec<usize> = (1..=len).collect();
    let (rl, rr, tl, tr) = (red.r_left, red.r_right, red.t_left, red.t_right);
    let (mode, groups): (MimoMode, Vec<(usize, Vec<usize>)>) = if rl + rr == tl + tr {
        (MimoMode::P2P, vec![(tr + 1, all.clone())])
    } else if rl + rr < tl + tr {
        let groups = (rl + 1..=tr + 1)
            .map(|r| {
                let ants = if r == rl + 1 {
                    (1..=rl + 1).collect()
                } else if r == tr + 1 {
                    (tr + 1..=len).collect()
                } else {
                    vec![r]
                };
                (r, ants)
            })
            .collect();
        (MimoMode::BC, groups)
    } else {
        let groups = (tr + 1..=rl + 1)
            .map(|m| {
                let txs = if m == tr + 1 {
                    (1..=tr + 1).collect()
                } else if m == rl + 1 {
                    (rl + 1..=len).collect()
                } else {
                    vec![m]
                };
                (m, txs)
            })
            .collect();
        (MimoMode::MAC, groups)
    };
    let mut streams = Vec::new();
    let mut union = BTreeSet::new();
    let mut prev = 0;
    for (message, set) in groups {
        union.extend(set.iter().copied());
        let u: Vec<usize> = union.iter().copied().collect();
        let r = match mode {
            MimoMode::P2P => rank_of(&all, &all),
            MimoMode::BC => rank_of(&u, &all),
            MimoMode::MAC => rank_of(&all, &u),
        };
        let (tx, antennas) = match mode {
            MimoMode::P2P => (all.clone(), all.clone()),
            MimoMode::BC => (all.clone(), set),
            MimoMode::MAC => (set, all.clone()),
        };
        let g = |v: Vec<usize>| v.into_iter().map(|i| i + start - 1).collect::<Vec<_>>();
        streams.push(MimoStream { message: message + start - 1, prelog: r - prev, tx: g(tx), antennas: g(antennas) });
        prev = r;
    }
    let tag = match mode {
        MimoMode::P2P => StrategyTag::MimoP2P,
        MimoMode::BC => StrategyTag::MimoBC,
        MimoMode::MAC => StrategyTag::MimoMAC,
    };
    for s in &streams {
        served.insert(s.message, (tag, s.prelog));
    }
    let pairs: Vec<usize> = (start..start + len).collect();
    let generic = len == side.left_sum() + 1;
    Subnet {
        tx: pairs.clone(),
        rx: pairs,
        kind: if generic { SubnetKind::Generic } else { SubnetKind::Reduced },
        reduced_params: (!generic).then_some(red),
        claimed_dof: prev,
        scheme: SubnetScheme::Mimo { mode, streams },
    }
}

/// Maximal runs `(start, len)` of pairs not in `silenced`.
fn runs(k: usize, silenced: &BTreeSet<usize>) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut a = 1;
    while a <= k {
        if silenced.contains(&a) {
            a += 1;
            continue;
        }
        let mut b = a;
        while b < k && !silenced.contains(&(b + 1)) {
            b += 1;
        }
        out.push((a, b - a + 1));
        a = b + 1;
    }
    out
}

/// Rank of `H_L(α)` decided exactly: `L` unless `u_L(α) = 0`, then `L − 1`.
fn exact_run_rank(len: usize, alpha: &Alpha) -> usize {
    if len == 0 {
        0
    } else {
        len - usize::from(alpha.u_is_zero(len))
    }
}

fn build(
    params: &NetworkParams,
    silenced: BTreeSet<usize>,
    gain: f64,
    family: SchemeFamily,
) -> Result<TransmissionPlan> {
    let side = params.side();
    let limit = side.left_sum() + 1;
    let pieces = runs(params.k, &silenced);
    if let Some(&(start, len)) = pieces.iter().find(|(_, len)| *len > limit) {
        return Err(Error::Precondition(format!(
            "run of {len} pairs starting at {start} exceeds t_ℓ+r_ℓ+1 = {limit}"
        )));
    }
    let mut served = BTreeMap::new();
    let mut subnets = Vec::new();
    for (start, len) in pieces {
        let h = h_matrix(len, gain);
        let rank_of = |rows: &[usize], cols: &[usize]| {
            let r: Vec<usize> = rows.iter().map(|i| i - 1).collect();
            let c: Vec<usize> = cols.iter().map(|i| i - 1).collect();
            rank(&select(&h, &r, &c))
        };
        subnets.push(mimo_subnet(start, len, &side, &rank_of, &mut served));
    }
    Ok(TransmissionPlan::assemble(PlanInstance::new(params, Topology::Symmetric), silenced, subnets, served, family))
}

fn family_of(case: BalancedCase) -> SchemeFamily {
    match case {
        BalancedCase::Case1 => SchemeFamily::SymBalancedCase1,
        BalancedCase::Case2 => SchemeFamily::SymBalancedCase2,
        BalancedCase::Case3 | BalancedCase::Uncovered => SchemeFamily::SymBalancedCase3,
        BalancedCase::Case4 => SchemeFamily::SymBalancedCase4,
    }
}

/// Best silencing pattern with runs of at most `limit` pairs, maximizing the
/// sum of exact run ranks. Ties prefer fewer silenced pairs.
fn best_silencing(k: usize, limit: usize, alpha: &Alpha) -> BTreeSet<usize> {
    let ranks: Vec<usize> = (0..=limit).map(|l| exact_run_rank(l, alpha)).collect();
    // best[i]: value for pairs 1..=i when pair i+1 is silenced or i = K
    let mut best = vec![(0usize, 0usize, 0usize); k + 1];
    for i in 1..=k {
        let mut choice: Option<(usize, usize, usize)> = None;
        for (len, &run) in ranks.iter().enumerate().take(limit.min(i) + 1) {
            let head = i - len;
            let (value, silenced) = if head == 0 {
                (run, 0)
            } else {
                let prev = best[head - 1];
                (prev.0 + run, prev.1 + 1)
            };
            let better = match choice {
                None => true,
                Some((v, s, _)) => value > v || (value == v && silenced < s),
            };
            if better {
                choice = Some((value, silenced, len));
            }
        }
        best[i] = choice.expect("len 0 is always available");
    }
    let mut out = BTreeSet::new();
    let mut i = k;
    while i > 0 {
        let len = best[i].2;
        if i == len {
            break;
        }
        out.insert(i - len);
        i = i - len - 1;
    }
    out
}

/// The MIMO plan for a balanced symmetric instance with equal gains.
///
/// Silencing follows the applicable case: none when `K ≤ s+1`; every
/// `(s+2)`-th pair when `u_{s+1}(α) ≠ 0`, moving the last silenced pair one
/// step left when the tail run would be rank deficient; every `(s+1)`-th pair
/// when `u_{s+1}(α) = 0`. If the resulting ranks fall short of the case's
/// lower endpoint, the plan is replaced by the best pattern with runs of at
/// most `s+1` pairs and a note records the repair.
///
/// Fails with `Precondition` for unbalanced side information and with
/// `NotApplicable` when `K = s + 2`.
pub fn sym_symmetric_si_plan(params: &NetworkParams, alpha: &Alpha) -> Result<TransmissionPlan> {
    let case = balanced_case(params, alpha)?;
    let s = params.side().left_sum();
    let k = params.k;
    let lower = match balanced_interval(params, alpha)? {
        Some(iv) => iv.lower,
        None => {
            return Err(Error::NotApplicable(format!(
                "K = t_ℓ+r_ℓ+2 = {k} is outside the balanced case split"
            )))
        }
    };
    let total = |set: &BTreeSet<usize>| -> usize {
        runs(k, set).iter().map(|&(_, len)| exact_run_rank(len, alpha)).sum()
    };
    let mut candidates: Vec<BTreeSet<usize>> = Vec::new();
    match case {
        BalancedCase::Case1 => candidates.push(BTreeSet::new()),
        BalancedCase::Case2 | BalancedCase::Case3 => {
            let period = s + 2;
            let g = k / period;
            let base: BTreeSet<usize> = (1..=g).map(|j| j * period).collect();
            let mut shifted = base.clone();
            shifted.remove(&(g * period));
            shifted.insert(g * period - 1);
            candidates.push(base);
            candidates.push(shifted);
        }
        BalancedCase::Case4 => candidates.push((1..=k / (s + 1)).map(|j| j * (s + 1)).collect()),
        BalancedCase::Uncovered => unreachable!("handled above"),
    }
    let mut notes = Vec::new();
    let chosen = match candidates.iter().find(|c| total(c) >= lower) {
        Some(c) => c.clone(),
        None => {
            let best = best_silencing(k, s + 1, alpha);
            notes.push(format!(
                "stated silencing pattern reaches {} < {lower}; replaced by the best pattern with runs of at most {} pairs",
                candidates.iter().map(&total).max().unwrap_or(0),
                s + 1
            ));
            best
        }
    };
    let mut plan = build(params, chosen, alpha.value(), family_of(case))?;
    plan.notes = notes;
    Ok(plan)
}

/// A MIMO plan with an explicit silencing set.
///
/// Streams are sized as for a generic cross-gain, so certifying the plan at
/// a critical gain exposes rank deficiencies of the chosen pattern.
pub fn sym_plan_with_silencing(params: &NetworkParams, alpha: &Alpha, silenced: &[usize]) -> Result<TransmissionPlan> {
    let case = balanced_case(params, alpha)?;
    if let Some(&bad) = silenced.iter().find(|&&i| i == 0 || i > params.k) {
        return Err(Error::IndexOutOfRange { index: bad, k: params.k });
    }
    let mut plan = build(params, silenced.iter().copied().collect(), GENERIC_STAND_IN, family_of(case))?;
    plan.notes.push("forced silencing pattern; stream sizes assume a generic cross-gain".into());
    Ok(plan)
}

