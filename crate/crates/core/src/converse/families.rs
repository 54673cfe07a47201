//! The concrete genie constructions: asymmetric, the three symmetric upper
//! bounds and the power-offset genie.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::{GenieFamily, GeniePartition, GenieSignal, InfoTerm};
use crate::dofcalc::{asym_gamma, theta4, theta5, ThresholdRule};
use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::netmodel::{h_matrix, NetworkParams, Topology};
use crate::tridiag::{build_m_and_inverse, v_sequence, Alpha};

/// Residual allowed for the null relation of the second upper bound.
pub const NULL_RELATION_TOL: f64 = 1e-9;

/// Entries of the inverse of `M_p(α)`, 1-based, zero outside the matrix.
/// For `p = 1` the matrix is the scalar `α`.
fn m_inverse(p: usize, alpha: f64) -> Result<Box<dyn Fn(usize, usize) -> f64>> {
    if alpha == 0.0 {
        return Err(Error::ZeroGain);
    }
    if p == 1 {
        return Ok(Box::new(move |r, c| if r == 1 && c == 1 { 1.0 / alpha } else { 0.0 }));
    }
    let m = build_m_and_inverse(p, alpha)?;
    Ok(Box::new(move |r, c| m.inv(r, c)))
}

fn range(lo: isize, hi: isize, k: usize) -> Vec<usize> {
    (lo.max(1)..=hi.min(k as isize)).map(|i| i as usize).collect()
}

fn complement(k: usize, a: &[usize]) -> Vec<usize> {
    (1..=k).filter(|i| a.binary_search(i).is_err()).collect()
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

/// A partition with `A` equal to every receiver and no genie.
fn trivial(family: GenieFamily, params: &NetworkParams, topology: Topology, alpha: f64, note: &str) -> Result<GeniePartition> {
    let mut p = GeniePartition::new(family, params.k, params.side(), topology, alpha, (1..=params.k).collect(), Vec::new(), Vec::new())?;
    p.notes.push(note.to_string());
    Ok(p)
}

/// Genie pair around the adjacent missing antennas `(p, p+1)` used by the
/// symmetric constructions. Both genies combine the noises `N_{p−j}` for
/// `j = 1..=R+1` and `N_{p+1+j}` for `j = 1..=L+1`; the first one isolates
/// `N_p`, the second one `N_{p+1}`.
struct PairCoefficients {
    a: Box<dyn Fn(usize, usize) -> f64>,
    b: Box<dyn Fn(usize, usize) -> f64>,
    l1: usize,
    r1: usize,
    alpha: f64,
}

impl PairCoefficients {
    fn new(params: &NetworkParams, alpha: f64) -> Result<Self> {
        let s = params.side();
        let (l1, r1) = (s.left_sum() + 1, s.right_sum() + 1);
        Ok(Self { a: m_inverse(l1, alpha)?, b: m_inverse(r1, alpha)?, l1, r1, alpha })
    }

    /// Genie isolating `N_p`, the left antenna of the pair.
    fn left(&self, index: usize, k: usize, p: isize) -> GenieSignal {
        let al = self.alpha;
        let terms = (1..=self.r1)
            .map(|j| (p - j as isize, (self.b)(1, j) + al * (self.b)(2, j)))
            .chain((1..=self.l1).map(|j| (p + 1 + j as isize, al * (self.a)(1, j))))
            .chain(std::iter::once((p, -1.0)));
        GenieSignal::noise_only(index, k, terms)
    }

    /// Like [`Self::left`], but for the case where the right neighbour
    /// `Y_{p+1}` is already rebuilt and one more input on the right is known:
    /// the right chain then has `L` terms with weights from `M_L(α)⁻¹`.
    fn left_short(&self, index: usize, k: usize, p: isize) -> Result<GenieSignal> {
        let al = self.alpha;
        let l = self.l1 - 1;
        let short: Box<dyn Fn(usize, usize) -> f64> = if l == 0 { Box::new(|_, _| 0.0) } else { m_inverse(l, al)? };
        let terms = (1..=self.r1)
            .map(|j| (p - j as isize, (self.b)(1, j) + al * (self.b)(2, j)))
            .chain((1..=l).map(|j| (p + 1 + j as isize, al * short(1, j))))
            .chain(std::iter::once((p, -1.0)));
        Ok(GenieSignal::noise_only(index, k, terms))
    }

    /// Genie isolating `N_{p+1}`, the right antenna of the pair.
    fn right(&self, index: usize, k: usize, p: isize) -> GenieSignal {
        let al = self.alpha;
        let terms = (1..=self.r1)
            .map(|j| (p - j as isize, al * (self.b)(1, j)))
            .chain((1..=self.l1).map(|j| (p + 1 + j as isize, (self.a)(1, j) + al * (self.a)(2, j))))
            .chain(std::iter::once((p + 1, -1.0)));
        GenieSignal::noise_only(index, k, terms)
    }
}

/// Genie-aided partition for the asymmetric network.
///
/// With `β = Σ + 2` and `γ` as in the multiplexing-gain formula, the group
/// `A` consists of the blocks `{mβ+r_ℓ+2, …, (m+1)β−r_r}` for `m < γ−1` and
/// the tail `{(γ−1)β+r_ℓ+2, …, K}`. The antennas `1+mβ` are not observed by
/// `A`; genie `V_m` carries `N_{1+mβ}` plus geometric weights in `−1/α` to
/// the right and in `−α` to the left.
pub fn build_asym_genie(params: &NetworkParams, alpha: f64) -> Result<GeniePartition> {
    params.validate()?;
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::ZeroGain);
    }
    let s = params.side();
    let k = params.k;
    let gamma = asym_gamma(params);
    if gamma == 0 {
        return trivial(GenieFamily::Asym, params, Topology::Asymmetric, alpha, "γ = 0: every receiver is in A");
    }
    let beta = (s.sigma() + 2) as isize;
    let g = gamma as isize - 1;
    let (rl, rr) = (s.r_left as isize, s.r_right as isize);
    let mut a = Vec::new();
    for m in 0..g {
        a.extend(range(m * beta + rl + 2, (m + 1) * beta - rr, k));
    }
    a.extend(range(g * beta + rl + 2, k as isize, k));
    let a = sorted(a);
    let b = vec![complement(k, &a)];
    let right_len = s.left_sum() + 1;
    let left_len = s.right_sum();
    let genies = (0..=g)
        .map(|m| {
            let c = 1 + m * beta;
            let right = (1..=right_len).map(|nu| (c + nu as isize, (-1.0 / alpha).powi(nu as i32)));
            let left = (1..=left_len)
                .filter(|_| m >= 1)
                .map(|nu| (c - nu as isize, (-alpha).powi(nu as i32)));
            GenieSignal::noise_only(m as usize, k, std::iter::once((c, 1.0)).chain(right).chain(left))
        })
        .collect();
    GeniePartition::new(GenieFamily::Asym, k, s, Topology::Asymmetric, alpha, a, b, genies)
}

/// Genie-aided partition behind the first symmetric upper bound
/// `K − 2γ_4 − θ_4` with `β_4 = Σ + 4`.
///
/// Each period leaves the adjacent antennas `(m+1)β_4` and `(m+1)β_4+1`
/// unobserved, and the first antenna as well. When `θ_4 = 1` the tail adds
/// one more unobserved antenna right after the last period; the construction
/// is built on the mirrored chain when the tail is too short on the left
/// side. When `θ_4 = 0` the last block stops before the right edge and the
/// final antenna `K` is rebuilt with its own genie.
pub fn build_sym_genie_ub1(params: &NetworkParams, alpha: f64, rule: ThresholdRule) -> Result<GeniePartition> {
    params.validate()?;
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::ZeroGain);
    }
    let s = params.side();
    let k = params.k;
    let beta4 = s.sigma() + 4;
    let gamma4 = k / beta4;
    let kappa4 = k - gamma4 * beta4;
    let th = theta4(params, kappa4, rule);
    if th == 1 && kappa4 < s.left_sum() + 2 {
        let mut p = ub1_direct(&params.mirrored(), alpha, gamma4, th)?.reflected();
        p.notes.push("built on the mirrored chain and reflected".into());
        return Ok(p);
    }
    ub1_direct(params, alpha, gamma4, th)
}

fn ub1_direct(params: &NetworkParams, alpha: f64, gamma4: usize, th: usize) -> Result<GeniePartition> {
    let s = params.side();
    let k = params.k;
    if gamma4 == 0 && th == 0 {
        return trivial(GenieFamily::Ub1, params, Topology::Symmetric, alpha, "γ_4 = 0 and θ_4 = 0: every receiver is in A");
    }
    let beta4 = (s.sigma() + 4) as isize;
    let (rl, rr) = (s.r_left as isize, s.r_right as isize);
    let span = (s.t_left + s.t_right) as isize + 3;
    let g4 = gamma4 as isize;
    let coef = PairCoefficients::new(params, alpha)?;
    let mut a = Vec::new();
    let mut genies = Vec::new();
    // Pairs: the right genie at mβ_4+1 and the left genie at (m+1)β_4.
    let full_periods = if th == 1 { g4 } else { g4 - 1 };
    for m in 0..g4 {
        let base = m * beta4;
        if m < full_periods {
            a.extend(range(base + rl + 2, base + rl + span, k));
        } else {
            a.extend(range(base + rl + 2, k as isize - rr - 1, k));
        }
        genies.push(coef.right(genies.len(), k, base));
        if m < full_periods {
            genies.push(coef.left(genies.len(), k, base + beta4));
        }
    }
    if th == 1 {
        let base = g4 * beta4;
        a.extend(range(base + rl + 2, k as isize, k));
        genies.push(coef.right(genies.len(), k, base));
    } else {
        // Final antenna K, isolated by the left-type genie with nothing to its right.
        genies.push(coef.left(genies.len(), k, k as isize));
    }
    let a = sorted(a);
    let b = vec![complement(k, &a)];
    GeniePartition::new(GenieFamily::Ub1, k, s, Topology::Symmetric, alpha, a, b, genies)
}

/// Coefficients `d_2..d_{L+1}` with `h_1 = Σ_{j≥2} d_j h_j` over the rows of
/// `H_{L+1}(α)`; they exist exactly when that matrix is singular.
pub fn null_relation(order: usize, alpha: f64) -> Result<Vec<f64>> {
    if order < 2 {
        return Err(Error::NotApplicable(format!("H_{order}(α) is never singular")));
    }
    let h = h_matrix(order, alpha);
    let rows = DMatrix::from_fn(order, order - 1, |c, j| h[(j + 1, c)]);
    let target = DVector::from_fn(order, |c, _| h[(0, c)]);
    let (d, resid) = least_squares(&rows, &target);
    if resid > NULL_RELATION_TOL {
        return Err(Error::NotApplicable(format!(
            "H_{order}(α) is not singular at α = {alpha}: null-relation residual {resid:.3e}"
        )));
    }
    Ok(d.iter().copied().collect())
}

/// Genie-aided partition behind the second symmetric upper bound, which
/// needs `u_{t_ℓ+r_ℓ+1}(α) = 0`.
///
/// With `β_5 = Σ + 3` each period leaves the adjacent antennas
/// `mβ_5+R+2` and `mβ_5+R+3` unobserved (`R = t_r + r_r`). They are rebuilt
/// over two rounds: first the right one using the null relation of
/// `H_{L+1}(α)`, then the left one, whose genie uses the shorter right
/// chain that the first round leaves behind. When `θ_5 = 1` a final round rebuilds
/// antenna `K`.
///
/// The final round needs the tail `κ_5 ≥ t_r + r_r + 2`, which is what
/// [`ThresholdRule::Prose`] selects. Under [`ThresholdRule::Statement`] the
/// tail round is also attempted at `κ_5 = t_r + r_r + 1`; there the first
/// round needs an input that depends on a message outside `A`, and recipe
/// synthesis reports a structural failure.
///
/// When `t_ℓ = 0` and `β_5` divides `K` the last period has no block of `A`
/// to its right and the construction does not apply; this is reported as a
/// structural error.
pub fn build_sym_genie_ub2(params: &NetworkParams, alpha: &Alpha, rule: ThresholdRule) -> Result<GeniePartition> {
    ub2_like(params, alpha, rule, false)
}

/// Mirror image of [`build_sym_genie_ub2`]; needs `u_{t_r+r_r+1}(α) = 0`.
pub fn build_sym_genie_ub3(params: &NetworkParams, alpha: &Alpha, rule: ThresholdRule) -> Result<GeniePartition> {
    ub2_like(params, alpha, rule, true)
}

fn ub2_like(params: &NetworkParams, alpha: &Alpha, rule: ThresholdRule, mirrored: bool) -> Result<GeniePartition> {
    params.validate()?;
    let work = if mirrored { params.mirrored() } else { *params };
    let order = work.side().left_sum() + 1;
    if !alpha.u_is_zero(order) {
        return Err(Error::NotApplicable(format!("requires u_{order}(α) = 0")));
    }
    let mut p = ub2_direct(&work, alpha.value(), rule)?;
    if mirrored {
        p = p.reflected();
        p.family = GenieFamily::Ub3;
    }
    Ok(p)
}

fn ub2_direct(params: &NetworkParams, alpha: f64, rule: ThresholdRule) -> Result<GeniePartition> {
    let s = params.side();
    let k = params.k;
    let beta5 = s.sigma() + 3;
    let gamma5 = k / beta5;
    let kappa5 = k - gamma5 * beta5;
    let th = theta5(params, kappa5, rule, false);
    let d = null_relation(s.left_sum() + 1, alpha)?;
    if gamma5 == 0 && th == 0 {
        return trivial(GenieFamily::Ub2, params, Topology::Symmetric, alpha, "γ_5 = 0 and θ_5 = 0: every receiver is in A");
    }
    if gamma5 >= 1 && kappa5 == 0 && s.t_left == 0 {
        return Err(Error::Structural(
            "t_ℓ = 0 and β_5 divides K: the last period has no receiver of A to its right, so its first round \
             cannot be carried out"
                .into(),
        ));
    }
    let coef = PairCoefficients::new(params, alpha)?;
    let b5 = beta5 as isize;
    let (tl, tr, rl, rr) = (s.t_left as isize, s.t_right as isize, s.r_left as isize, s.r_right as isize);
    let rsum = tr + rr;
    let g5 = gamma5 as isize;
    let mut a = Vec::new();
    for m in 0..g5 {
        a.extend(range(m * b5 - tl + 1, m * b5 + tr + 1, k));
    }
    let tail_end = if th == 1 { k as isize - rr - 1 } else { k as isize };
    a.extend(range(g5 * b5 - tl + 1, tail_end, k));
    let a = sorted(a);
    let mut b = Vec::new();
    let mut genies = Vec::new();
    for m in 0..g5 {
        let base = m * b5;
        let t = base + rsum + 3;
        b.push(range(base + rsum + rl + 3, base + rsum + rl + 3, k));
        let terms = d
            .iter()
            .enumerate()
            .map(|(i, &dj)| (t - 1 + (i as isize + 2), dj))
            .chain((1..=coef.r1).map(|j| (t - 1 - j as isize, alpha * (coef.b)(1, j))))
            .chain(std::iter::once((t, -1.0)));
        genies.push(GenieSignal::noise_only(genies.len(), k, terms));
        b.push(range(base + tr + 2, base + rsum + rl + 2, k));
        genies.push(coef.left_short(genies.len(), k, base + rsum + 2)?);
    }
    if th == 1 {
        b.push(range(k as isize - rr, k as isize, k));
        genies.push(coef.left(genies.len(), k, k as isize));
    }
    let b: Vec<Vec<usize>> = b.into_iter().filter(|r| !r.is_empty()).collect();
    GeniePartition::new(GenieFamily::Ub2, k, s, Topology::Symmetric, alpha, a, b, genies)
}

/// `(q, L)` for the power-offset construction, which needs balanced side
/// information `L = t_ℓ + r_ℓ = t_r + r_r` and `K = q(L+2) − 1`.
pub fn offset_shape(params: &NetworkParams) -> Result<(usize, usize)> {
    let s = params.side();
    if !s.is_balanced() {
        return Err(Error::Precondition("the power-offset genie needs t_ℓ + r_ℓ = t_r + r_r".into()));
    }
    let l = s.left_sum();
    if (params.k + 1) % (l + 2) != 0 {
        return Err(Error::Precondition(format!("the power-offset genie needs K = q·{} − 1", l + 2)));
    }
    Ok(((params.k + 1) / (l + 2), l))
}

/// Pre-log of the power-offset bound, `K − 2γ''' − 1` with `γ''' = (q−1)/2`,
/// for `K = q(L+2) − 1` and `q` odd.
pub fn offset_pre_log(params: &NetworkParams) -> Result<usize> {
    let (q, _) = offset_shape(params)?;
    if q % 2 == 0 {
        return Err(Error::NotApplicable(format!("the power-offset genie is only constructed for odd q (got q = {q})")));
    }
    Ok(params.k - (q - 1) - 1)
}

/// Information term of the power-offset genie for `L = t_ℓ + r_ℓ`:
/// signal gain `α v_{L+1}` against noise energy `‖(v_0, …, v_L)‖²`.
pub fn offset_info_term(l: usize, alpha: f64) -> Result<InfoTerm> {
    let v = v_sequence(l + 1, alpha)?;
    Ok(InfoTerm {
        signal_gain: alpha * v.get(l as isize + 1),
        noise_energy: (0..=l).map(|j| v.get(j as isize).powi(2)).sum(),
    })
}

/// Genie-aided partition for the power-offset bound.
///
/// The first genie mixes the noises `N_1..N_{L+1}` with weights `v_0..v_L`
/// and carries the signal term `−α v_{L+1} X_{L+1}`; it lets the first
/// receiver outside `A` recover `Y_1`. The other genies are the symmetric
/// pair genies around `mβ'''−1, mβ'''` with `β''' = 2L + 4`. The returned
/// partition records the closed form of the information term contributed by
/// the signal part.
pub fn build_offset_genie(params: &NetworkParams, alpha: f64) -> Result<GeniePartition> {
    params.validate()?;
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::ZeroGain);
    }
    let (q, l) = offset_shape(params)?;
    offset_pre_log(params)?;
    let s = params.side();
    let k = params.k;
    let bt = 2 * l as isize + 4;
    let gm = ((q - 1) / 2) as isize;
    let (rl, tr) = (s.r_left as isize, s.t_right as isize);
    let li = l as isize;
    let mut a = range(rl + 2, li + tr + 2, k);
    for m in 1..gm {
        a.extend(range(m * bt + rl + 1, m * bt + li + tr + 2, k));
    }
    if gm >= 1 {
        a.extend(range(gm * bt + rl + 1, k as isize, k));
    }
    let a = sorted(a);
    let b1 = vec![s.r_left + 1];
    let b2: Vec<usize> = complement(k, &a).into_iter().filter(|&r| r != s.r_left + 1).collect();
    let mut b = vec![b1];
    if !b2.is_empty() {
        b.push(b2);
    }
    let v = v_sequence(l + 1, alpha)?;
    let info = offset_info_term(l, alpha)?;
    let mut noise = BTreeMap::new();
    for j in 0..=l {
        let c = v.get(j as isize);
        if c != 0.0 {
            noise.insert(j + 1, c);
        }
    }
    let mut input = BTreeMap::new();
    if info.signal_gain != 0.0 && l < k {
        input.insert(l + 1, -info.signal_gain);
    }
    let mut genies = vec![GenieSignal { index: 0, noise, input }];
    let coef = PairCoefficients::new(params, alpha)?;
    for m in 1..=gm {
        let p = m * bt - 1;
        genies.push(coef.left(genies.len(), k, p));
        genies.push(coef.right(genies.len(), k, p));
    }
    let mut part = GeniePartition::new(GenieFamily::Offset, k, s, Topology::Symmetric, alpha, a, b, genies)?;
    part.info_term = Some(info);
    Ok(part)
}
