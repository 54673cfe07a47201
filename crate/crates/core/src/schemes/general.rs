//! Pair-silencing plans behind the four general lower bounds.
//!
//! Each plan silences the pairs of transmitters `{mβ, mβ+1}` so that the
//! network splits into subnets of `β` antennas with `β − 2` active
//! transmitters, plus a shorter tail.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::blocks::{central_local, double_pair_local, Block};
use super::{PlanInstance, SchemeFamily, StrategyTag, TransmissionPlan};
use crate::dofcalc::lower_bound_aux;
use crate::error::{Error, Result};
use crate::netmodel::{NetworkParams, SideInfo, Topology};

/// One of the four general lower bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LowerBoundLabel {
    LB1,
    LB2,
    LB3,
    LB4,
}

impl LowerBoundLabel {
    /// All four labels in order.
    pub const ALL: [LowerBoundLabel; 4] = [Self::LB1, Self::LB2, Self::LB3, Self::LB4];

    fn family(self) -> SchemeFamily {
        match self {
            Self::LB1 => SchemeFamily::SymPropLB1,
            Self::LB2 => SchemeFamily::SymPropLB2,
            Self::LB3 => SchemeFamily::SymPropLB3,
            Self::LB4 => SchemeFamily::SymPropLB4,
        }
    }
}

impl fmt::Display for LowerBoundLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for LowerBoundLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LB1" => Ok(Self::LB1),
            "LB2" => Ok(Self::LB2),
            "LB3" => Ok(Self::LB3),
            "LB4" => Ok(Self::LB4),
            other => Err(Error::Parse(format!("unknown lower bound label {other:?}"))),
        }
    }
}

/// `(r_ℓ', t_ℓ')` of a left double-pair block with `kappa` antennas:
/// `r_ℓ' = min(κ−1, r_ℓ)`, `t_ℓ' = min((κ−r_ℓ−1)₊, t_ℓ)`.
pub fn lb2_reduced_params(side: &SideInfo, kappa: usize) -> (usize, usize) {
    let rl = kappa.saturating_sub(1).min(side.r_left);
    let tl = kappa.saturating_sub(side.r_left + 1).min(side.t_left);
    (rl, tl)
}

/// `(r_r', t_r')` of a mirrored double-pair block with `kappa` antennas.
pub fn lb3_reduced_params(side: &SideInfo, kappa: usize) -> (usize, usize) {
    lb2_reduced_params(&side.mirrored(), kappa)
}

/// `(r_ℓ', r_r')` of a central-decoding block with `kappa ≥ 3` antennas:
/// `r_ℓ' = min(r_ℓ, κ−3)`, `r_r' = κ − 3 − r_ℓ'`.
pub fn lb4_reduced_params(side: &SideInfo, kappa: usize) -> (usize, usize) {
    let rl = side.r_left.min(kappa.saturating_sub(3));
    (rl, kappa.saturating_sub(3) - rl)
}

fn mirrored_block(rr: usize, tr: usize) -> Block {
    double_pair_local(rr, tr).reflected().retagged(StrategyTag::MirroredDoublePair)
}

/// Local block and reduced parameters for a subnet of `kappa` antennas.
fn local_block(label: LowerBoundLabel, side: &SideInfo, kappa: usize, beta: usize) -> (Block, Option<SideInfo>) {
    let generic = kappa == beta;
    let (block, red) = match label {
        LowerBoundLabel::LB2 => {
            let (rl, tl) = if generic { (side.r_left, side.t_left) } else { lb2_reduced_params(side, kappa) };
            (double_pair_local(rl, tl), SideInfo::new(tl, 0, rl, 0))
        }
        LowerBoundLabel::LB3 => {
            let (rr, tr) = if generic { (side.r_right, side.t_right) } else { lb3_reduced_params(side, kappa) };
            (mirrored_block(rr, tr), SideInfo::new(0, tr, 0, rr))
        }
        LowerBoundLabel::LB1 => {
            let left = side.left_sum();
            if kappa <= left + 1 {
                let (rl, tl) = lb2_reduced_params(side, kappa);
                (double_pair_local(rl, tl), SideInfo::new(tl, 0, rl, 0))
            } else {
                let right_kappa = kappa + 1 - left;
                let (rr, tr) = lb3_reduced_params(side, right_kappa);
                let block = double_pair_local(side.r_left, side.t_left).merged(mirrored_block(rr, tr).shifted(left - 1));
                (block, SideInfo::new(side.t_left, tr, side.r_left, rr))
            }
        }
        LowerBoundLabel::LB4 => {
            let (rl, rr) = if generic { (side.r_left, side.r_right) } else { lb4_reduced_params(side, kappa) };
            (central_local(rl, rr), SideInfo::new(0, 0, rl, rr))
        }
    };
    (block, (!generic).then_some(red))
}

/// The pair-silencing plan behind one general lower bound.
///
/// Silences `{mβ+1 : m < γ}`, `{mβ : 1 ≤ m ≤ γ}`, transmitter `γβ+1` when
/// `θ ≥ 1` and transmitter `K` when `θ = 2`, then runs the label's block in
/// each subnet. The plan claims `K − 2γ − θ`.
///
/// `LB1` needs side information on both sides (`t_ℓ + r_ℓ ≥ 1` and
/// `t_r + r_r ≥ 1`); the other labels need a positive period.
pub fn sym_general_plan(params: &NetworkParams, label: LowerBoundLabel) -> Result<TransmissionPlan> {
    let side = params.side();
    let k = params.k;
    let aux = lower_bound_aux(params)[label as usize]
        .1
        .ok_or_else(|| Error::NotApplicable(format!("{label} has period zero")))?;
    if label == LowerBoundLabel::LB1 && (side.left_sum() == 0 || side.right_sum() == 0) {
        return Err(Error::NotApplicable(
            "LB1 combines a left and a right block and needs t_ℓ+r_ℓ ≥ 1 and t_r+r_r ≥ 1".into(),
        ));
    }
    let beta = aux.beta;
    let mut silenced = BTreeSet::new();
    for m in 0..aux.gamma {
        silenced.insert(m * beta + 1);
        silenced.insert((m + 1) * beta);
    }
    if aux.theta >= 1 {
        silenced.insert(aux.gamma * beta + 1);
    }
    if aux.theta == 2 {
        silenced.insert(k);
    }
    let mut served = BTreeMap::new();
    let mut subnets = Vec::new();
    let mut frames: Vec<(usize, usize)> = (0..aux.gamma).map(|m| (m * beta, beta)).collect();
    if aux.theta == 2 {
        frames.push((aux.gamma * beta, aux.kappa));
    }
    for (offset, kappa) in frames {
        if kappa < 3 {
            continue;
        }
        let (block, reduced) = local_block(label, &side, kappa, beta);
        let block = block.shifted(offset);
        let tx: Vec<usize> = (offset + 2..offset + kappa).collect();
        let rx: Vec<usize> = (offset + 1..=offset + kappa).collect();
        debug_assert_eq!(block.tx.len(), tx.len(), "{label} block size at kappa {kappa}");
        subnets.push(block.into_subnet(tx, rx, reduced, &mut served));
    }
    Ok(TransmissionPlan::assemble(
        PlanInstance::new(params, Topology::Symmetric),
        silenced,
        subnets,
        served,
        label.family(),
    ))
}
