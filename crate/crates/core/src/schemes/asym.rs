//! Plans for the asymmetric network.

use std::collections::{BTreeMap, BTreeSet};

use super::blocks::asym_local;
use super::{PlanInstance, SchemeFamily, TransmissionPlan};
use crate::netmodel::{NetworkParams, SideInfo, Topology};

/// Side information actually used by a subnet with `kappa` receive antennas:
/// `r_ℓ' = min(κ−1, r_ℓ)`, `t_ℓ' = min((κ−r_ℓ−1)₊, t_ℓ)`,
/// `t_r' = min((κ−r_ℓ−t_ℓ−2)₊, t_r)`, `r_r' = min((κ−r_ℓ−t_ℓ−t_r−2)₊, r_r)`.
pub fn asym_reduced_params(side: &SideInfo, kappa: usize) -> SideInfo {
    let pos = |x: isize| x.max(0) as usize;
    let k = kappa as isize;
    let (tl, tr, rl) = (side.t_left as isize, side.t_right as isize, side.r_left as isize);
    SideInfo::new(
        pos(k - rl - 1).min(side.t_left),
        pos(k - rl - tl - 2).min(side.t_right),
        kappa.saturating_sub(1).min(side.r_left),
        pos(k - rl - tl - tr - 2).min(side.r_right),
    )
}

/// Builds the plan for an arbitrary silencing set, one subnet per maximal
/// run of active transmitters. Each run `a..=b` uses antennas
/// `a..=min(b+1, K)`.
fn plan_for_silencing(params: &NetworkParams, silenced: BTreeSet<usize>, family: SchemeFamily) -> TransmissionPlan {
    let side = params.side();
    let k = params.k;
    let mut served = BTreeMap::new();
    let mut subnets = Vec::new();
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
        let n = b - a + 1;
        let last_rx = (b + 1).min(k);
        let kappa = last_rx - a + 1;
        let red = if kappa == n + 1 && kappa > side.left_sum() + 1 {
            asym_reduced_params(&side, kappa)
        } else {
            asym_reduced_params(&side, n)
        };
        let block = asym_local(red.t_left, red.t_right, red.r_left, red.r_right).shifted(a - 1);
        let reduced = (red != side).then_some(red);
        subnets.push(block.into_subnet((a..=b).collect(), (a..=last_rx).collect(), reduced, &mut served));
        a = b + 1;
    }
    TransmissionPlan::assemble(PlanInstance::new(params, Topology::Asymmetric), silenced, subnets, served, family)
}

/// Adds transmitter `K` to `silenced` when the last run ends at `K` and is
/// longer than `t_ℓ + r_ℓ + 1`.
fn close_tail(params: &NetworkParams, silenced: &mut BTreeSet<usize>) {
    let last = silenced.iter().next_back().copied().unwrap_or(0);
    if last < params.k && params.k - last > params.side().left_sum() + 1 {
        silenced.insert(params.k);
    }
}

/// The plan for the asymmetric network: silence every `β`-th transmitter
/// (`β = Σ + 2`) and, when the tail is too long, transmitter `K`.
///
/// It claims `K − γ` degrees of freedom.
pub fn asym_plan(params: &NetworkParams) -> TransmissionPlan {
    let beta = params.sigma() + 2;
    let mut silenced: BTreeSet<usize> = (1..=params.k / beta).map(|j| j * beta).collect();
    close_tail(params, &mut silenced);
    plan_for_silencing(params, silenced, SchemeFamily::AsymTheorem1)
}

/// The `β` rotations of the asymmetric plan used for time sharing.
///
/// Rotation `i` silences `{i + jβ}` and, when the tail is too long,
/// transmitter `K`. Averaging the rotations serves every user.
pub fn fair_time_sharing_plan(params: &NetworkParams) -> Vec<TransmissionPlan> {
    let beta = params.sigma() + 2;
    (1..=beta)
        .map(|i| {
            let mut silenced: BTreeSet<usize> = (0..).map(|j| i + j * beta).take_while(|&x| x <= params.k).collect();
            close_tail(params, &mut silenced);
            plan_for_silencing(params, silenced, SchemeFamily::AsymTimeSharing)
        })
        .collect()
}
