//! Local chain blocks in subnet coordinates.
//!
//! A block is written for transmitters and antennas numbered from 1 inside
//! its frame, then shifted to its global position and, for right-hand
//! constructions, reflected.

use std::collections::BTreeMap;

use super::{DecodeStep, Precoder, RxProgram, StrategyTag, Subnet, SubnetKind, SubnetScheme, TxRule};
use crate::netmodel::SideInfo;

/// A chain scheme in local coordinates `1..=frame`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub(crate) struct Block {
    pub frame: usize,
    pub tx: Vec<TxRule>,
    pub rx: Vec<RxProgram>,
    pub tags: Vec<(usize, StrategyTag)>,
}

fn step(antennas: impl IntoIterator<Item = usize>, decodes: impl IntoIterator<Item = usize>) -> DecodeStep {
    DecodeStep { antennas: antennas.into_iter().collect(), decodes: decodes.into_iter().collect() }
}

fn rule(tx: usize, message: usize, precoder: Precoder) -> TxRule {
    TxRule { tx, message, precoder }
}

impl Block {
    fn empty(frame: usize) -> Self {
        Self { frame, ..Self::default() }
    }

    fn serve(&mut self, tx: TxRule, rx: RxProgram, tag: StrategyTag) {
        self.tags.push((tx.message, tag));
        self.tx.push(tx);
        self.rx.push(rx);
    }

    /// Adds `offset` to every index.
    pub fn shifted(mut self, offset: usize) -> Self {
        for r in &mut self.tx {
            r.tx += offset;
            r.message += offset;
            if let Precoder::ZeroForce { antenna } = &mut r.precoder {
                *antenna += offset;
            }
        }
        for p in &mut self.rx {
            p.receiver += offset;
            for s in &mut p.steps {
                s.antennas.iter_mut().for_each(|a| *a += offset);
                s.decodes.iter_mut().for_each(|m| *m += offset);
            }
        }
        for (m, _) in &mut self.tags {
            *m += offset;
        }
        self.frame += offset;
        self
    }

    /// Maps every index `i` to `frame + 1 − i`.
    pub fn reflected(mut self) -> Self {
        let f = self.frame + 1;
        for r in &mut self.tx {
            r.tx = f - r.tx;
            r.message = f - r.message;
            if let Precoder::ZeroForce { antenna } = &mut r.precoder {
                *antenna = f - *antenna;
            }
        }
        for p in &mut self.rx {
            p.receiver = f - p.receiver;
            for s in &mut p.steps {
                s.antennas.iter_mut().for_each(|a| *a = f - *a);
                s.antennas.reverse();
                s.decodes.iter_mut().for_each(|m| *m = f - *m);
            }
        }
        for (m, _) in &mut self.tags {
            *m = f - *m;
        }
        self
    }

    /// Relabels every tag.
    pub fn retagged(mut self, tag: StrategyTag) -> Self {
        self.tags.iter_mut().for_each(|(_, t)| *t = tag);
        self
    }

    /// Turns a placed block into a chain subnet and records the served messages.
    pub fn into_subnet(
        self,
        tx: Vec<usize>,
        rx: Vec<usize>,
        reduced: Option<SideInfo>,
        served: &mut BTreeMap<usize, (StrategyTag, usize)>,
    ) -> Subnet {
        for (m, tag) in &self.tags {
            served.insert(*m, (*tag, 1));
        }
        let mut transmitters = self.tx;
        transmitters.sort_by_key(|r| r.tx);
        let mut receivers = self.rx;
        receivers.sort_by_key(|p| p.receiver);
        Subnet {
            claimed_dof: transmitters.len(),
            tx,
            rx,
            kind: if reduced.is_some() { SubnetKind::Reduced } else { SubnetKind::Generic },
            reduced_params: reduced,
            scheme: SubnetScheme::Chain { transmitters, receivers },
        }
    }

    /// Concatenates two blocks already placed in the same coordinates.
    pub fn merged(mut self, other: Block) -> Self {
        self.frame = self.frame.max(other.frame);
        self.tx.extend(other.tx);
        self.rx.extend(other.rx);
        self.tags.extend(other.tags);
        self
    }
}

/// The four-group chain for the asymmetric network with local side
/// information `(t_ℓ, t_r, r_ℓ, r_r)`: `n = Σ + 1` transmitters and `n + 1`
/// antennas.
///
/// * `1..=r_ℓ+1` send plainly; receiver `k` decodes `1..=k` in increasing
///   order, message `j` on antenna `j`.
/// * `r_ℓ+2..=r_ℓ+t_ℓ+1` zero-force their own antenna.
/// * the next `t_r` transmitters zero-force antenna `k + 1` so that receiver
///   `k` reads its message there; when `r_r = 0` transmitter `k` instead
///   carries message `k + 1` for receiver `k + 1`, and message `r_ℓ+t_ℓ+2`
///   is skipped.
/// * the last `r_r` transmitters send plainly; receiver `k` decodes
///   `n, n−1, ..., k` on antennas `n+1, n, ..., k+1`.
pub(crate) fn asym_local(tl: usize, tr: usize, rl: usize, rr: usize) -> Block {
    let n = tl + tr + rl + rr + 1;
    let mut b = Block::empty(n + 1);
    for k in 1..=rl + 1 {
        b.serve(
            rule(k, k, Precoder::Plain),
            RxProgram { receiver: k, steps: (1..=k).map(|j| step([j], [j])).collect() },
            StrategyTag::SingleUserSICLeft,
        );
    }
    for k in rl + 2..=rl + tl + 1 {
        b.serve(
            rule(k, k, Precoder::ZeroForce { antenna: k }),
            RxProgram { receiver: k, steps: vec![step([k], [k])] },
            StrategyTag::DPCLeft,
        );
    }
    let g3 = rl + tl + 2..=rl + tl + tr + 1;
    for k in g3 {
        if rr > 0 {
            b.serve(
                rule(k, k, Precoder::ZeroForce { antenna: k + 1 }),
                RxProgram { receiver: k, steps: vec![step([k + 1], [k])] },
                StrategyTag::DPCRightScaled,
            );
        } else {
            b.serve(
                rule(k, k + 1, Precoder::ZeroForce { antenna: k + 1 }),
                RxProgram { receiver: k + 1, steps: vec![step([k + 1], [k + 1])] },
                StrategyTag::DPCRightScaled,
            );
        }
    }
    for k in rl + tl + tr + 2..=n {
        b.serve(
            rule(k, k, Precoder::Plain),
            RxProgram { receiver: k, steps: (k..=n).rev().map(|j| step([j + 1], [j])).collect() },
            StrategyTag::SingleUserSICRight,
        );
    }
    b
}

/// The double-pair chain for the symmetric network: transmitters
/// `2..=r_ℓ+t_ℓ` inside a frame of `r_ℓ+t_ℓ+1` antennas whose first and last
/// transmitters are silenced.
///
/// With `r_ℓ ≥ 1`, transmitters `2..=r_ℓ+1` send plainly and receiver `k`
/// decodes messages `2..=k` on antennas `1..=k−1`; the remaining ones
/// zero-force antenna `k − 1`. With `r_ℓ = 0`, transmitter `k` carries
/// message `k − 1` and zero-forces antenna `k − 1`.
pub(crate) fn double_pair_local(rl: usize, tl: usize) -> Block {
    let frame = rl + tl + 1;
    let mut b = Block::empty(frame);
    if rl >= 1 {
        for k in 2..=(rl + 1).min(rl + tl) {
            b.serve(
                rule(k, k, Precoder::Plain),
                RxProgram { receiver: k, steps: (2..=k).map(|j| step([j - 1], [j])).collect() },
                StrategyTag::DoublePairSICLeft,
            );
        }
        for k in rl + 2..=rl + tl {
            b.serve(
                rule(k, k, Precoder::ZeroForce { antenna: k - 1 }),
                RxProgram { receiver: k, steps: vec![step([k - 1], [k])] },
                StrategyTag::DoublePairDPC,
            );
        }
    } else {
        for k in 2..=tl {
            b.serve(
                rule(k, k - 1, Precoder::ZeroForce { antenna: k - 1 }),
                RxProgram { receiver: k - 1, steps: vec![step([k - 1], [k - 1])] },
                StrategyTag::DoublePairDPC,
            );
        }
    }
    b
}

/// The central-decoding chain: transmitters `2..=r_ℓ+r_r+2` inside a frame
/// of `r_ℓ+r_r+3` antennas.
///
/// Transmitters `2..=r_ℓ+1` are decoded left to right as in the double-pair
/// chain, receiver `r_ℓ+2` decodes every message jointly from antennas
/// `2..=r_ℓ+r_r+2`, and the remaining receivers decode right to left on
/// antennas `j + 1`.
pub(crate) fn central_local(rl: usize, rr: usize) -> Block {
    let n = rl + rr + 2;
    let mut b = Block::empty(n + 1);
    for k in 2..=rl + 1 {
        b.serve(
            rule(k, k, Precoder::Plain),
            RxProgram { receiver: k, steps: (2..=k).map(|j| step([j - 1], [j])).collect() },
            StrategyTag::SingleUserSICLeft,
        );
    }
    let c = rl + 2;
    b.serve(
        rule(c, c, Precoder::Plain),
        RxProgram { receiver: c, steps: vec![step(2..=n, 2..=n)] },
        StrategyTag::CentralMimoDecode,
    );
    for k in rl + 3..=n {
        b.serve(
            rule(k, k, Precoder::Plain),
            RxProgram { receiver: k, steps: (k..=n).rev().map(|j| step([j + 1], [j])).collect() },
            StrategyTag::SingleUserSICRight,
        );
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asym_local_carries_sigma_plus_one_messages() {
        for (tl, tr, rl, rr) in [(2, 1, 2, 1), (0, 0, 0, 0), (1, 2, 0, 0), (0, 3, 1, 0)] {
            let b = asym_local(tl, tr, rl, rr);
            assert_eq!(b.tx.len(), tl + tr + rl + rr + 1);
        }
    }

    #[test]
    fn zero_right_reception_shifts_messages() {
        let b = asym_local(1, 2, 1, 0);
        let msgs: Vec<usize> = b.tx.iter().map(|r| r.message).collect();
        assert_eq!(msgs, vec![1, 2, 3, 5, 6]);
    }

    #[test]
    fn reflection_is_an_involution() {
        let b = double_pair_local(2, 2);
        assert_eq!(b.clone().reflected().reflected(), b);
        let r = b.clone().reflected();
        assert!(r.tx.iter().all(|t| (2..=4).contains(&t.tx)));
    }

    #[test]
    fn double_pair_counts() {
        for (rl, tl) in [(1, 1), (2, 1), (1, 3), (0, 3), (3, 0)] {
            assert_eq!(double_pair_local(rl, tl).tx.len(), rl + tl - 1);
        }
    }

    #[test]
    fn central_block_decodes_jointly() {
        let b = central_local(1, 1);
        assert_eq!(b.tx.len(), 3);
        let c = b.rx.iter().find(|p| p.receiver == 3).unwrap();
        assert_eq!(c.steps[0].decodes, vec![2, 3, 4]);
    }
}
