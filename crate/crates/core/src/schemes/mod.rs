//! Achievability schemes as explicit transmission plans.
//!
//! A [`TransmissionPlan`] lists the silenced transmitters and splits the
//! remaining network into non-interfering [`Subnet`]s. Each subnet runs either
//! a chain scheme (plain or zero-forcing precoders with successive decoding at
//! the receivers) or a MIMO scheme over the whole subnet. [`certify_plan`]
//! checks a plan against a concrete channel model with linear algebra only.

mod asym;
mod blocks;
mod general;
mod symmetric;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{half_log_det_i_plus, rank};
use crate::netmodel::{ChannelModel, NetworkParams, SideInfo, Topology};
use crate::tridiag::Alpha;

pub use asym::{asym_plan, asym_reduced_params, fair_time_sharing_plan};
pub use general::{lb2_reduced_params, lb3_reduced_params, lb4_reduced_params, sym_general_plan, LowerBoundLabel};
pub use symmetric::{mimo_reduced_params, sym_plan_with_silencing, sym_symmetric_si_plan};

/// Relative magnitude below which an effective channel coefficient counts as zero.
pub const PRESENCE_REL_TOL: f64 = 1e-9;

/// How a message is served.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrategyTag {
    SingleUserSICLeft,
    DPCLeft,
    DPCRightScaled,
    SingleUserSICRight,
    MimoP2P,
    MimoBC,
    MimoMAC,
    DoublePairSICLeft,
    DoublePairDPC,
    MirroredDoublePair,
    CentralMimoDecode,
    Skipped,
    Silenced,
}

/// Linear precoder of one transmitter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Precoder {
    /// `X_k = s_m`.
    Plain,
    /// `X_k` is chosen so that antenna `antenna` observes exactly `s_m`:
    /// `X_k = (s_m − Σ_{j≠k} h_{antenna,j} X_j) / h_{antenna,k}`.
    ZeroForce { antenna: usize },
}

/// Message and precoder of one transmitter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxRule {
    pub tx: usize,
    pub message: usize,
    pub precoder: Precoder,
}

/// One decoding step: the listed antennas are combined and the listed
/// messages are decoded jointly, after subtracting already known messages.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeStep {
    pub antennas: Vec<usize>,
    pub decodes: Vec<usize>,
}

/// The decoding program of one receiver, which wants its own message.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RxProgram {
    pub receiver: usize,
    pub steps: Vec<DecodeStep>,
}

/// Flavour of a MIMO subnet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MimoMode {
    /// One message sent by every transmitter to one receiver with every antenna.
    P2P,
    /// Every transmitter knows every message; receivers own disjoint antenna groups.
    BC,
    /// Transmitter groups send distinct messages; every receiver uses every antenna.
    MAC,
}

/// One stream of a MIMO subnet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MimoStream {
    pub message: usize,
    pub prelog: usize,
    pub tx: Vec<usize>,
    pub antennas: Vec<usize>,
}

/// The scheme run inside one subnet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SubnetScheme {
    Chain { transmitters: Vec<TxRule>, receivers: Vec<RxProgram> },
    Mimo { mode: MimoMode, streams: Vec<MimoStream> },
}

/// Whether a subnet has the full period length or a shortened one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubnetKind {
    Generic,
    Reduced,
}

/// A group of transmitters and receive antennas isolated from the rest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subnet {
    pub tx: Vec<usize>,
    pub rx: Vec<usize>,
    pub kind: SubnetKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced_params: Option<SideInfo>,
    pub scheme: SubnetScheme,
    pub claimed_dof: usize,
}

/// The construction a plan comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeFamily {
    AsymTheorem1,
    AsymTimeSharing,
    SymBalancedCase1,
    SymBalancedCase2,
    SymBalancedCase3,
    SymBalancedCase4,
    SymPropLB1,
    SymPropLB2,
    SymPropLB3,
    SymPropLB4,
}

/// Instance descriptor stored in a plan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanInstance {
    #[serde(rename = "K")]
    pub k: usize,
    pub side: SideInfo,
    pub topology: Topology,
}

impl PlanInstance {
    /// Descriptor of the given parameters and topology.
    pub fn new(params: &NetworkParams, topology: Topology) -> Self {
        Self { k: params.k, side: params.side(), topology }
    }
}

/// A complete achievability plan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransmissionPlan {
    pub instance: PlanInstance,
    pub silenced: Vec<usize>,
    pub subnets: Vec<Subnet>,
    pub strategies: BTreeMap<usize, StrategyTag>,
    pub per_message_prelog: BTreeMap<usize, usize>,
    pub claimed_dof: usize,
    pub family: SchemeFamily,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl TransmissionPlan {
    /// Assembles a plan, filling in `Silenced`/`Skipped` tags and prelogs for
    /// messages no subnet serves.
    pub(crate) fn assemble(
        instance: PlanInstance,
        silenced: BTreeSet<usize>,
        subnets: Vec<Subnet>,
        served: BTreeMap<usize, (StrategyTag, usize)>,
        family: SchemeFamily,
    ) -> Self {
        let mut strategies = BTreeMap::new();
        let mut prelog = BTreeMap::new();
        for m in 1..=instance.k {
            let (tag, d) = match served.get(&m) {
                Some(&(tag, d)) => (tag, d),
                None if silenced.contains(&m) => (StrategyTag::Silenced, 0),
                None => (StrategyTag::Skipped, 0),
            };
            strategies.insert(m, tag);
            prelog.insert(m, d);
        }
        let claimed_dof = prelog.values().sum();
        Self {
            instance,
            silenced: silenced.into_iter().collect(),
            subnets,
            strategies,
            per_message_prelog: prelog,
            claimed_dof,
            family,
            notes: Vec::new(),
        }
    }
}

/// The four checks of [`certify_plan`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// (a) subnets are disjoint and do not couple to each other.
    NonInterference,
    /// (b) transmitters use only known messages, receivers only their antennas.
    SideInformation,
    /// (c) each subnet achieves its claimed DoF.
    SubnetDof,
    /// (d) subnet claims add up to the plan claim.
    DofSum,
}

impl Check {
    /// Short label `(a)`..`(d)`.
    pub fn label(&self) -> &'static str {
        match self {
            Check::NonInterference => "(a)",
            Check::SideInformation => "(b)",
            Check::SubnetDof => "(c)",
            Check::DofSum => "(d)",
        }
    }
}

/// The first violated check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertFailure {
    pub check: Check,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subnet: Option<usize>,
    pub detail: String,
}

impl CertFailure {
    fn new(check: Check, subnet: Option<usize>, detail: impl Into<String>) -> Self {
        Self { check, subnet, detail: detail.into() }
    }
}

/// Result of [`certify_plan`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub pass: bool,
    pub certified_dof: usize,
    pub claimed_dof: usize,
    pub subnet_dofs: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<CertFailure>,
}

/// Effective channel of a chain subnet: the messages it carries and the
/// matrix `G = H[rx, tx] · V` mapping streams to the subnet's antennas.
struct ChainChannel {
    messages: Vec<usize>,
    /// Rows follow `subnet.rx`, columns follow `messages`.
    g: DMatrix<f64>,
    /// Precoding matrix; rows follow `subnet.tx`.
    v: DMatrix<f64>,
}

fn chain_channel(
    subnet: &Subnet,
    rules: &[TxRule],
    model: &ChannelModel,
    side: &SideInfo,
    idx: usize,
) -> std::result::Result<ChainChannel, CertFailure> {
    let fail = |check, msg: String| CertFailure::new(check, Some(idx), msg);
    let tx_pos: BTreeMap<usize, usize> = subnet.tx.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let mut rule_of = BTreeMap::new();
    for r in rules {
        if !tx_pos.contains_key(&r.tx) {
            return Err(fail(Check::SubnetDof, format!("transmitter {} is not in the subnet", r.tx)));
        }
        if rule_of.insert(r.tx, *r).is_some() {
            return Err(fail(Check::SubnetDof, format!("transmitter {} has two rules", r.tx)));
        }
    }
    if let Some(t) = subnet.tx.iter().find(|t| !rule_of.contains_key(t)) {
        return Err(fail(Check::SubnetDof, format!("transmitter {t} has no rule")));
    }
    let messages: Vec<usize> = subnet.tx.iter().map(|t| rule_of[t].message).collect();
    let msg_pos: BTreeMap<usize, usize> = messages.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    if msg_pos.len() != messages.len() {
        return Err(fail(Check::SubnetDof, "a message is carried by two transmitters".into()));
    }
    let rx_set: BTreeSet<usize> = subnet.rx.iter().copied().collect();
    let (n, s) = (subnet.tx.len(), messages.len());
    let mut v = DMatrix::<f64>::zeros(n, s);
    let mut deps: Vec<Option<BTreeSet<usize>>> = vec![None; n];
    loop {
        let mut progress = false;
        let mut pending = Vec::new();
        for (i, &t) in subnet.tx.iter().enumerate() {
            if deps[i].is_some() {
                continue;
            }
            let rule = rule_of[&t];
            let mpos = msg_pos[&rule.message];
            match rule.precoder {
                Precoder::Plain => {
                    v[(i, mpos)] = 1.0;
                    deps[i] = Some(BTreeSet::from([rule.message]));
                    progress = true;
                }
                Precoder::ZeroForce { antenna } => {
                    if !rx_set.contains(&antenna) {
                        return Err(fail(
                            Check::SubnetDof,
                            format!("transmitter {t} zero-forces antenna {antenna} outside the subnet"),
                        ));
                    }
                    let others: Vec<usize> = subnet
                        .tx
                        .iter()
                        .enumerate()
                        .filter(|&(j, &u)| j != i && model.gain(antenna, u) != 0.0)
                        .map(|(j, _)| j)
                        .collect();
                    if others.iter().any(|&j| deps[j].is_none()) {
                        pending.push(t);
                        continue;
                    }
                    let pivot = model.gain(antenna, t);
                    if pivot.abs() <= f64::MIN_POSITIVE {
                        return Err(fail(
                            Check::SubnetDof,
                            format!("zero pivot h[{antenna},{t}] in the zero-forcing precoder"),
                        ));
                    }
                    let mut row = DMatrix::<f64>::zeros(1, s);
                    row[(0, mpos)] = 1.0;
                    let mut d = BTreeSet::from([rule.message]);
                    for &j in &others {
                        let gj = model.gain(antenna, subnet.tx[j]);
                        row -= v.row(j) * gj;
                        d.extend(deps[j].iter().flatten().copied());
                    }
                    v.set_row(i, &(row / pivot).row(0));
                    deps[i] = Some(d);
                    progress = true;
                }
            }
        }
        if pending.is_empty() {
            break;
        }
        if !progress {
            return Err(fail(Check::SubnetDof, format!("cyclic zero-forcing dependencies at transmitters {pending:?}")));
        }
    }
    for (i, &t) in subnet.tx.iter().enumerate() {
        let (lo, hi) = (t as isize - side.t_left as isize, t + side.t_right);
        if let Some(m) = deps[i].iter().flatten().find(|&&m| (m as isize) < lo || m > hi) {
            return Err(fail(
                Check::SideInformation,
                format!("transmitter {t} needs message {m} outside its window [{lo}, {hi}]"),
            ));
        }
    }
    let h = model.submatrix(&subnet.rx, &subnet.tx).map_err(|e| fail(Check::SubnetDof, e.to_string()))?;
    Ok(ChainChannel { messages, g: &h * &v, v })
}

fn check_window(
    side: &SideInfo,
    receiver: usize,
    antennas: &[usize],
    rx_set: &BTreeSet<usize>,
    idx: usize,
) -> std::result::Result<(), CertFailure> {
    let (lo, hi) = (receiver as isize - side.r_left as isize, receiver + side.r_right);
    if let Some(a) = antennas.iter().find(|&&a| (a as isize) < lo || a > hi) {
        return Err(CertFailure::new(
            Check::SideInformation,
            Some(idx),
            format!("receiver {receiver} uses antenna {a} outside its window [{lo}, {hi}]"),
        ));
    }
    if let Some(a) = antennas.iter().find(|a| !rx_set.contains(a)) {
        return Err(CertFailure::new(
            Check::SubnetDof,
            Some(idx),
            format!("receiver {receiver} uses antenna {a} outside the subnet"),
        ));
    }
    Ok(())
}

fn positions(list: &[usize], wanted: &[usize]) -> Vec<usize> {
    wanted.iter().map(|w| list.iter().position(|x| x == w).expect("checked membership")).collect()
}

fn certify_chain(
    subnet: &Subnet,
    rules: &[TxRule],
    programs: &[RxProgram],
    model: &ChannelModel,
    side: &SideInfo,
    idx: usize,
) -> std::result::Result<usize, CertFailure> {
    let ch = chain_channel(subnet, rules, model, side, idx)?;
    let fail = |check, msg: String| CertFailure::new(check, Some(idx), msg);
    let rx_set: BTreeSet<usize> = subnet.rx.iter().copied().collect();
    let scale = ch.g.amax().max(f64::MIN_POSITIVE);
    let present = |a_rows: &[usize], m: usize| -> bool {
        a_rows.iter().any(|&r| ch.g[(r, m)].abs() > PRESENCE_REL_TOL * scale)
    };
    for &m in &ch.messages {
        if !programs.iter().any(|p| p.receiver == m) {
            return Err(fail(Check::SubnetDof, format!("message {m} has no receiver program")));
        }
    }
    for prog in programs {
        let mut known: BTreeSet<usize> = BTreeSet::new();
        for step in &prog.steps {
            check_window(side, prog.receiver, &step.antennas, &rx_set, idx)?;
            let rows = positions(&subnet.rx, &step.antennas);
            let unknown: BTreeSet<usize> = ch
                .messages
                .iter()
                .enumerate()
                .filter(|(j, m)| !known.contains(m) && present(&rows, *j))
                .map(|(_, &m)| m)
                .collect();
            let wanted: BTreeSet<usize> = step.decodes.iter().copied().collect();
            if unknown != wanted {
                return Err(fail(
                    Check::SubnetDof,
                    format!(
                        "receiver {} step on antennas {:?}: unknown streams {:?} differ from decoded {:?}",
                        prog.receiver, step.antennas, unknown, wanted
                    ),
                ));
            }
            let cols: Vec<usize> = step
                .decodes
                .iter()
                .map(|m| ch.messages.iter().position(|x| x == m).expect("present"))
                .collect();
            let sub = crate::linalg::select(&ch.g, &rows, &cols);
            let r = rank(&sub);
            if r < cols.len() {
                return Err(fail(
                    Check::SubnetDof,
                    format!(
                        "receiver {} cannot separate {:?} on antennas {:?} (rank {} < {})",
                        prog.receiver,
                        step.decodes,
                        step.antennas,
                        r,
                        cols.len()
                    ),
                ));
            }
            known.extend(wanted);
        }
        if ch.messages.contains(&prog.receiver) && !known.contains(&prog.receiver) {
            return Err(fail(Check::SubnetDof, format!("receiver {} never decodes its message", prog.receiver)));
        }
    }
    Ok(ch.messages.len())
}

fn subset_unions<'a>(
    items: &'a [MimoStream],
    pick: impl Fn(&'a MimoStream) -> &'a [usize] + 'a,
) -> impl Iterator<Item = (usize, Vec<usize>)> + 'a {
    (1u64..(1u64 << items.len())).map(move |mask| {
        let mut set = BTreeSet::new();
        let mut total = 0;
        for (i, s) in items.iter().enumerate() {
            if mask >> i & 1 == 1 {
                set.extend(pick(s).iter().copied());
                total += s.prelog;
            }
        }
        (total, set.into_iter().collect())
    })
}

fn certify_mimo(
    subnet: &Subnet,
    mode: MimoMode,
    streams: &[MimoStream],
    model: &ChannelModel,
    side: &SideInfo,
    idx: usize,
) -> std::result::Result<usize, CertFailure> {
    let fail = |check, msg: String| CertFailure::new(check, Some(idx), msg);
    let rx_set: BTreeSet<usize> = subnet.rx.iter().copied().collect();
    let tx_set: BTreeSet<usize> = subnet.tx.iter().copied().collect();
    for s in streams {
        for &t in &s.tx {
            if !tx_set.contains(&t) {
                return Err(fail(Check::SubnetDof, format!("stream {} uses transmitter {t} outside the subnet", s.message)));
            }
            let (lo, hi) = (t as isize - side.t_left as isize, t + side.t_right);
            if (s.message as isize) < lo || s.message > hi {
                return Err(fail(
                    Check::SideInformation,
                    format!("transmitter {t} does not know message {}", s.message),
                ));
            }
        }
        check_window(side, s.message, &s.antennas, &rx_set, idx)?;
    }
    let sub = model.submatrix(&subnet.rx, &subnet.tx).map_err(|e| fail(Check::SubnetDof, e.to_string()))?;
    let full_rank = rank(&sub);
    let claimed: usize = streams.iter().map(|s| s.prelog).sum();
    let rank_of = |rows: &[usize], cols: &[usize]| -> usize {
        model.submatrix(rows, cols).map(|m| rank(&m)).unwrap_or(0)
    };
    let violation = match mode {
        MimoMode::P2P => streams
            .iter()
            .find(|s| s.prelog > rank_of(&s.antennas, &s.tx))
            .map(|s| format!("stream {} prelog {} exceeds rank {}", s.message, s.prelog, rank_of(&s.antennas, &s.tx))),
        MimoMode::BC => subset_unions(streams, |s| &s.antennas)
            .find(|(total, rows)| *total > rank_of(rows, &subnet.tx))
            .map(|(total, rows)| {
                format!("receive antennas {rows:?} carry prelog {total} above rank {}", rank_of(&rows, &subnet.tx))
            }),
        MimoMode::MAC => subset_unions(streams, |s| &s.tx)
            .find(|(total, cols)| *total > rank_of(&subnet.rx, cols))
            .map(|(total, cols)| {
                format!("transmitters {cols:?} carry prelog {total} above rank {}", rank_of(&subnet.rx, &cols))
            }),
    };
    if full_rank < claimed {
        return Err(fail(
            Check::SubnetDof,
            format!("subnet matrix rank {full_rank} < claimed {claimed}"),
        ));
    }
    if let Some(v) = violation {
        return Err(fail(Check::SubnetDof, v));
    }
    Ok(claimed)
}

/// Certifies a plan against a channel model.
///
/// Checks, in order: (a) subnets are disjoint, avoid silenced transmitters,
/// and no active transmitter outside a subnet reaches its antennas; (b) every
/// precoder uses only messages the transmitter knows and every receiver only
/// antennas in its window; (c) each subnet achieves its claim, by successive
/// decodability with full-rank pivots for chains or by rank conditions for
/// MIMO subnets; (d) subnet claims add up to the plan's claim. The first
/// violated check is reported.
pub fn certify_plan(plan: &TransmissionPlan, model: &ChannelModel) -> Result<CertificationReport> {
    let inst = &plan.instance;
    if inst.k != model.k() || inst.side != model.params.side() || inst.topology != model.topology {
        return Err(Error::Precondition(format!(
            "plan instance (K={}, {}, {}) does not match the model (K={}, {}, {})",
            inst.k,
            inst.side,
            inst.topology,
            model.k(),
            model.params.side(),
            model.topology
        )));
    }
    let side = inst.side;
    let k = inst.k;
    let silenced: BTreeSet<usize> = plan.silenced.iter().copied().collect();
    let mut first: Option<CertFailure> = None;
    let note = |f: CertFailure, first: &mut Option<CertFailure>| {
        if first.is_none() {
            *first = Some(f);
        }
    };

    let mut seen_tx = BTreeSet::new();
    let mut seen_rx = BTreeSet::new();
    for (i, s) in plan.subnets.iter().enumerate() {
        for &t in &s.tx {
            if t == 0 || t > k || silenced.contains(&t) || !seen_tx.insert(t) {
                note(
                    CertFailure::new(Check::NonInterference, Some(i), format!("transmitter {t} is silenced, repeated or out of range")),
                    &mut first,
                );
            }
        }
        for &a in &s.rx {
            if a == 0 || a > k || !seen_rx.insert(a) {
                note(
                    CertFailure::new(Check::NonInterference, Some(i), format!("antenna {a} is repeated or out of range")),
                    &mut first,
                );
            }
        }
    }
    if first.is_none() {
        'outer: for (i, s) in plan.subnets.iter().enumerate() {
            let own: BTreeSet<usize> = s.tx.iter().copied().collect();
            for &a in &s.rx {
                for t in 1..=k {
                    if !silenced.contains(&t) && !own.contains(&t) && model.gain(a, t) != 0.0 {
                        note(
                            CertFailure::new(
                                Check::NonInterference,
                                Some(i),
                                format!("active transmitter {t} outside the subnet reaches antenna {a}"),
                            ),
                            &mut first,
                        );
                        break 'outer;
                    }
                }
            }
        }
    }

    let mut subnet_dofs = Vec::with_capacity(plan.subnets.len());
    let mut feasibility: Option<CertFailure> = None;
    let mut dof_failure: Option<CertFailure> = None;
    for (i, s) in plan.subnets.iter().enumerate() {
        let outcome = match &s.scheme {
            SubnetScheme::Chain { transmitters, receivers } => certify_chain(s, transmitters, receivers, model, &side, i),
            SubnetScheme::Mimo { mode, streams } => certify_mimo(s, *mode, streams, model, &side, i),
        };
        match outcome {
            Ok(d) if d == s.claimed_dof => subnet_dofs.push(d),
            Ok(d) => {
                subnet_dofs.push(d.min(s.claimed_dof));
                dof_failure.get_or_insert(CertFailure::new(
                    Check::SubnetDof,
                    Some(i),
                    format!("scheme delivers {d} but the subnet claims {}", s.claimed_dof),
                ));
            }
            Err(f) => {
                let partial = match &s.scheme {
                    SubnetScheme::Mimo { .. } => model.submatrix(&s.rx, &s.tx).map(|m| rank(&m)).unwrap_or(0).min(s.claimed_dof),
                    SubnetScheme::Chain { .. } => 0,
                };
                subnet_dofs.push(partial);
                let slot = if f.check == Check::SideInformation { &mut feasibility } else { &mut dof_failure };
                slot.get_or_insert(f);
            }
        }
    }
    if let Some(f) = feasibility {
        note(f, &mut first);
    }
    if let Some(f) = dof_failure {
        note(f, &mut first);
    }
    let subnet_sum: usize = plan.subnets.iter().map(|s| s.claimed_dof).sum();
    let prelog_sum: usize = plan.per_message_prelog.values().sum();
    if subnet_sum != plan.claimed_dof || prelog_sum != plan.claimed_dof {
        note(
            CertFailure::new(
                Check::DofSum,
                None,
                format!("subnet claims sum to {subnet_sum}, prelogs to {prelog_sum}, plan claims {}", plan.claimed_dof),
            ),
            &mut first,
        );
    }
    Ok(CertificationReport {
        pass: first.is_none(),
        certified_dof: subnet_dofs.iter().sum(),
        claimed_dof: plan.claimed_dof,
        subnet_dofs,
        failure: first,
    })
}

/// Achievable rate of one message at a given power, in nats per channel use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MessageRate {
    pub message: usize,
    pub rate: f64,
}

/// Per-message rates of a plan under linear precoding and Gaussian inputs.
///
/// Precoders are scaled so that every transmitter meets the power
/// constraint. A message decoded alone on some antennas gets
/// `½ ln(1 + P‖g‖²)`, minimized over every receiver that decodes it. A joint
/// decoding step is accounted at its sum rate `½ log det(I + P GᵀG)`. A MIMO
/// subnet gets `½ log det(I + P HᵀH)` split in proportion to the prelogs.
pub fn plan_rates(plan: &TransmissionPlan, model: &ChannelModel, power: f64) -> Result<Vec<MessageRate>> {
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::InvalidParams("power must be positive".into()));
    }
    let side = plan.instance.side;
    let mut out = Vec::new();
    for (i, s) in plan.subnets.iter().enumerate() {
        match &s.scheme {
            SubnetScheme::Mimo { streams, .. } => {
                let h = model.submatrix(&s.rx, &s.tx)?;
                let total = half_log_det_i_plus(&h, power);
                let weight: usize = streams.iter().map(|x| x.prelog).sum();
                for st in streams {
                    let rate = if weight == 0 { 0.0 } else { total * st.prelog as f64 / weight as f64 };
                    out.push(MessageRate { message: st.message, rate });
                }
            }
            SubnetScheme::Chain { transmitters, receivers } => {
                let ch = chain_channel(s, transmitters, model, &side, i).map_err(|f| Error::Structural(f.detail))?;
                let max_row = (0..ch.v.nrows()).map(|r| ch.v.row(r).norm()).fold(0.0, f64::max);
                let scale = if max_row > 0.0 { 1.0 / max_row } else { 1.0 };
                let g = &ch.g * scale;
                let col = |m: usize| ch.messages.iter().position(|&x| x == m).expect("carried message");
                let mut single: BTreeMap<usize, f64> = BTreeMap::new();
                let mut joint: Vec<(Vec<usize>, f64)> = Vec::new();
                for prog in receivers {
                    for step in &prog.steps {
                        let rows = positions(&s.rx, &step.antennas);
                        let cols: Vec<usize> = step.decodes.iter().map(|&m| col(m)).collect();
                        let sub = crate::linalg::select(&g, &rows, &cols);
                        if step.decodes.len() == 1 {
                            let c = 0.5 * (1.0 + power * sub.norm_squared()).ln();
                            let e = single.entry(step.decodes[0]).or_insert(f64::INFINITY);
                            *e = e.min(c);
                        } else {
                            joint.push((step.decodes.clone(), half_log_det_i_plus(&sub, power)));
                        }
                    }
                }
                let mut rates: BTreeMap<usize, f64> = ch.messages.iter().map(|&m| (m, single.get(&m).copied().unwrap_or(f64::INFINITY))).collect();
                for (set, cap) in joint {
                    let finite: f64 = set.iter().map(|m| rates[m]).filter(|r| r.is_finite()).sum();
                    let open: Vec<usize> = set.iter().copied().filter(|m| !rates[m].is_finite()).collect();
                    let shrink = if finite > cap { cap / finite } else { 1.0 };
                    for m in &set {
                        if rates[m].is_finite() {
                            *rates.get_mut(m).expect("present") *= shrink;
                        }
                    }
                    let rest = (cap - finite).max(0.0);
                    for m in &open {
                        rates.insert(*m, rest / open.len() as f64);
                    }
                }
                out.extend(rates.into_iter().map(|(message, rate)| MessageRate { message, rate: if rate.is_finite() { rate } else { 0.0 } }));
            }
        }
    }
    out.sort_by_key(|r| r.message);
    Ok(out)
}

/// Sum of [`plan_rates`].
pub fn plan_sum_rate(plan: &TransmissionPlan, model: &ChannelModel, power: f64) -> Result<f64> {
    Ok(plan_rates(plan, model, power)?.iter().map(|r| r.rate).sum())
}

/// The plan with the largest claim among the constructions that apply.
///
/// The asymmetric model always uses [`asym_plan`]. The symmetric model
/// compares the balanced construction (when the side information is
/// balanced and the case split applies) with the four general lower-bound
/// plans, keeping the first one with the largest claim. The `LB4` plan is
/// left out when `u_{r_ℓ+r_r+1}(α) = 0`, since its central receiver must
/// invert `H_{r_ℓ+r_r+1}(α)`.
pub fn best_plan(params: &NetworkParams, topology: Topology, alpha: &Alpha) -> Result<TransmissionPlan> {
    if topology == Topology::Asymmetric {
        return Ok(asym_plan(params));
    }
    let mut candidates = Vec::new();
    if params.side().is_balanced() {
        if let Ok(plan) = sym_symmetric_si_plan(params, alpha) {
            candidates.push(plan);
        }
    }
    let central = params.side().r_left + params.side().r_right + 1;
    candidates.extend(
        LowerBoundLabel::ALL
            .iter()
            .filter(|&&l| l != LowerBoundLabel::LB4 || !alpha.u_is_zero(central))
            .filter_map(|&l| sym_general_plan(params, l).ok()),
    );
    candidates
        .into_iter()
        .reduce(|best, c| if c.claimed_dof > best.claimed_dof { c } else { best })
        .ok_or_else(|| Error::NotApplicable(format!("no construction applies to K = {}, {}", params.k, params.side())))
}

#[cfg(test)]
mod tests;
