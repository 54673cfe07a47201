//! The tridiagonal determinant family and related sequences.
//!
//! `H_p(α)` is the `p × p` tridiagonal matrix with unit diagonal and `α` on
//! both off-diagonals. Its determinant `u_p(α)` obeys
//! `u_0 = u_1 = 1`, `u_{p+2} = u_{p+1} − α² u_p`, and decides whether a
//! cluster of `p` adjacent cells has full rank. This module evaluates the
//! family numerically and exactly, isolates its roots, and builds the
//! auxiliary objects used by the converse constructions: the normalised
//! sequence `v_p = u_p / (−α)^p` and the banded matrices `M_p(α)`.

mod alpha;
pub mod poly;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::h_matrix;
use poly::{cauchy_bound, count_roots, det_poly, isolate_roots, Poly, Q};

pub use alpha::Alpha;

/// Absolute tolerance for deciding `u_p(α) = 0` in floating point.
pub const ZERO_TOL: f64 = 1e-9;

/// `u_0..u_pmax` for one value of `α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetSequence {
    pub alpha: f64,
    pub values: Vec<f64>,
}

impl DetSequence {
    /// Largest index stored.
    pub fn pmax(&self) -> usize {
        self.values.len() - 1
    }
}

/// `u_p(α)` by the three-term recursion.
pub fn det_h(p: usize, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    let (mut prev, mut cur) = (1.0, 1.0);
    for _ in 2..=p {
        let next = cur - a2 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `u_0..u_pmax` by the recursion.
pub fn det_sequence(pmax: usize, alpha: f64) -> DetSequence {
    let a2 = alpha * alpha;
    let mut values = vec![1.0; pmax + 1];
    for p in 2..=pmax {
        values[p] = values[p - 1] - a2 * values[p - 2];
    }
    DetSequence { alpha, values }
}

/// `u_p(α)` in exact rational arithmetic.
pub fn det_h_exact(p: usize, alpha: &BigRational) -> BigRational {
    let a2 = alpha * alpha;
    let (mut prev, mut cur) = (BigRational::one(), BigRational::one());
    for _ in 2..=p {
        let next = &cur - &a2 * &prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// One real root of `u_p` with its multiplicity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootEntry {
    pub alpha: f64,
    pub multiplicity: usize,
}

/// All real roots of `u_p`, sorted ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub p: usize,
    pub roots: Vec<RootEntry>,
}

impl RootSet {
    /// Positive roots in ascending order.
    pub fn positive(&self) -> impl Iterator<Item = &RootEntry> {
        self.roots.iter().filter(|r| r.alpha > 0.0)
    }
}

/// A root of `u_p` in the variable `β = α²`, isolated by an exact interval.
#[derive(Clone, Debug)]
pub(crate) struct IsolatedRoot {
    pub lo: Q,
    pub hi: Q,
    pub beta: f64,
    pub multiplicity: usize,
}

fn root_cache() -> &'static Mutex<HashMap<usize, Arc<Vec<IsolatedRoot>>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<IsolatedRoot>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn refine_simple(p: &Poly, lo: &Q, hi: &Q, width: &Q) -> Option<(Q, Q)> {
    let (mut lo, mut hi) = (lo.clone(), hi.clone());
    let mut f_lo = p.eval(&lo);
    let f_hi = p.eval(&hi);
    if f_lo.is_zero() || f_hi.is_zero() || (f_lo > Q::zero()) == (f_hi > Q::zero()) {
        return None;
    }
    let two = Q::from_integer(2.into());
    while &(&hi - &lo) > width {
        let mid = (&lo + &hi) / &two;
        let f_mid = p.eval(&mid);
        if f_mid.is_zero() {
            return Some((mid.clone(), mid));
        }
        if (f_mid > Q::zero()) == (f_lo > Q::zero()) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some((lo, hi))
}

/// Exact isolation of the roots of `u_p` in `β`, ascending, cached per `p`.
pub(crate) fn isolated_roots(p: usize) -> Arc<Vec<IsolatedRoot>> {
    if let Some(hit) = root_cache().lock().expect("root cache poisoned").get(&p) {
        return Arc::clone(hit);
    }
    let poly = det_poly(p);
    let mut out = Vec::new();
    if poly.degree().unwrap_or(0) > 0 {
        let width = Q::new(1.into(), num::BigInt::from(2).pow(110u32));
        for (lo, hi) in isolate_roots(&poly, &Q::zero(), &cauchy_bound(&poly)) {
            let (flo, fhi) = refine_simple(&poly, &lo, &hi, &width)
                .unwrap_or_else(|| poly::refine_root(&poly, &lo, &hi, &width));
            let beta = ((&flo + &fhi) / Q::from_integer(2.into())).to_f64().unwrap_or(f64::NAN);
            let mut multiplicity = 1;
            let mut g = Poly::gcd(&poly, &poly.derivative());
            while g.degree().unwrap_or(0) > 0 && count_roots(&g.sturm_sequence(), &lo, &hi) > 0 {
                multiplicity += 1;
                g = Poly::gcd(&g, &g.derivative());
            }
            out.push(IsolatedRoot { lo, hi, beta, multiplicity });
        }
    }
    let arc = Arc::new(out);
    root_cache().lock().expect("root cache poisoned").insert(p, Arc::clone(&arc));
    arc
}

/// All real roots of `u_p` with multiplicities, found by exact Sturm
/// isolation on the recursion polynomial in `β = α²`.
pub fn critical_roots(p: usize) -> Result<RootSet> {
    if p < 2 {
        return Err(Error::Precondition(format!("critical roots need p ≥ 2, got {p}")));
    }
    let iso = isolated_roots(p);
    let mut roots: Vec<RootEntry> = iso
        .iter()
        .rev()
        .map(|r| RootEntry { alpha: -r.beta.sqrt(), multiplicity: r.multiplicity })
        .collect();
    roots.extend(iso.iter().map(|r| RootEntry { alpha: r.beta.sqrt(), multiplicity: r.multiplicity }));
    Ok(RootSet { p, roots })
}

/// Number of positive roots of `u_p`.
pub fn positive_root_count(p: usize) -> usize {
    if p < 2 {
        0
    } else {
        isolated_roots(p).len()
    }
}

/// `rank H_p(α)` from the determinant dichotomy (`p` or `p − 1`).
pub fn rank_h(p: usize, alpha: f64) -> usize {
    if p == 0 {
        return 0;
    }
    if det_h(p, alpha).abs() <= ZERO_TOL {
        p - 1
    } else {
        p
    }
}

/// `rank H_p(α)` using the exact zero test when `α` is exact.
pub fn rank_h_alpha(p: usize, alpha: &Alpha) -> usize {
    if p == 0 {
        0
    } else if alpha.u_is_zero(p) {
        p - 1
    } else {
        p
    }
}

/// Values of the determinants adjacent to a root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborReport {
    pub p: usize,
    pub neighbors: Vec<(usize, f64)>,
    pub all_nonzero: bool,
}

/// At a root of `u_p`, checks that `u_{p−1}`, `u_{p+1}`, `u_{p+2}` and, for
/// `p > 2`, `u_{p−2}` are all nonzero.
pub fn neighbor_nonzero_check(p: usize, alpha: &Alpha) -> Result<NeighborReport> {
    if p < 2 || !alpha.u_is_zero(p) {
        return Err(Error::Precondition(format!("u_{p}({alpha}) is not zero")));
    }
    let mut idx = vec![p - 1, p + 1, p + 2];
    if p > 2 {
        idx.insert(0, p - 2);
    }
    let neighbors: Vec<(usize, f64)> = idx.iter().map(|&q| (q, alpha.det(q))).collect();
    let all_nonzero = idx.iter().all(|&q| !alpha.u_is_zero(q));
    Ok(NeighborReport { p, neighbors, all_nonzero })
}

/// `v_{−1}..v_pmax` with `v_{−1} = 0`, `v_0 = 1`, `v_{p+2} = −v_{p+1}/α − v_p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VSequence {
    pub alpha: f64,
    values: Vec<f64>,
}

impl VSequence {
    /// `v_p` for `p ≥ −1`.
    pub fn get(&self, p: isize) -> f64 {
        self.values[(p + 1) as usize]
    }

    /// Largest index stored.
    pub fn pmax(&self) -> usize {
        self.values.len() - 2
    }
}

/// Builds the normalised sequence `v_p(α)`.
pub fn v_sequence(pmax: usize, alpha: f64) -> Result<VSequence> {
    if alpha == 0.0 {
        return Err(Error::Precondition("v_p requires α ≠ 0".into()));
    }
    let mut values = vec![0.0, 1.0];
    for _ in 1..=pmax {
        let n = values.len();
        values.push(-values[n - 1] / alpha - values[n - 2]);
    }
    Ok(VSequence { alpha, values })
}

/// Max deviation of `(v_l..v_{l+p−1}) H_p(α)` from
/// `(−α v_{l−1}, 0, …, 0, −α v_{l+p})`. Defined for `p ≥ 2`.
pub fn v_row_identity_check(p: usize, l: usize, alpha: f64) -> Result<f64> {
    if p < 2 {
        return Err(Error::Precondition("the row identity is stated for p ≥ 2".into()));
    }
    let v = v_sequence(l + p, alpha)?;
    let h = h_matrix(p, alpha);
    let row = DMatrix::from_fn(1, p, |_, j| v.get((l + j) as isize));
    let lhs = row * h;
    let li = l as isize;
    let mut rhs = vec![0.0; p];
    rhs[0] = -alpha * v.get(li - 1);
    rhs[p - 1] = -alpha * v.get(li + p as isize);
    Ok((0..p).map(|j| (lhs[(0, j)] - rhs[j]).abs()).fold(0.0, f64::max))
}

/// `M_p(α)` (diagonal `α`, first super-diagonal 1, second super-diagonal
/// `α`) together with its inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedM {
    pub p: usize,
    pub alpha: f64,
    pub matrix: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
}

impl BandedM {
    /// Entry `(row, col)` of the inverse, 1-based; zero outside the matrix.
    pub fn inv(&self, row: usize, col: usize) -> f64 {
        if row == 0 || col == 0 || row > self.p || col > self.p {
            0.0
        } else {
            self.inverse[(row - 1, col - 1)]
        }
    }

    /// Solves `M x = b` by back substitution.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let p = self.p;
        let mut x = vec![0.0; p];
        for i in (0..p).rev() {
            let mut s = b[i];
            if i + 1 < p {
                s -= x[i + 1];
            }
            if i + 2 < p {
                s -= self.alpha * x[i + 2];
            }
            x[i] = s / self.alpha;
        }
        x
    }
}

/// Builds `M_p(α)` and its inverse by back substitution.
pub fn build_m_and_inverse(p: usize, alpha: f64) -> Result<BandedM> {
    if alpha == 0.0 {
        return Err(Error::Precondition("inverse requires α ≠ 0".into()));
    }
    if p < 2 {
        return Err(Error::Precondition(format!("M_p needs p ≥ 2, got {p}")));
    }
    let matrix = DMatrix::from_fn(p, p, |i, j| match j.checked_sub(i) {
        Some(0) => alpha,
        Some(1) => 1.0,
        Some(2) => alpha,
        _ => 0.0,
    });
    let mut m = BandedM { p, alpha, matrix, inverse: DMatrix::zeros(p, p) };
    for c in 0..p {
        let mut e = vec![0.0; p];
        e[c] = 1.0;
        let col = m.solve(&e);
        for (r, v) in col.into_iter().enumerate() {
            m.inverse[(r, c)] = v;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn oracle_roots(p: usize) -> Vec<f64> {
        // det H_p(α) = Π (1 + 2α cos(kπ/(p+1))); roots where the cosine is nonzero
        let mut r: Vec<f64> = (1..=p)
            .filter_map(|k| {
                let c = (k as f64 * PI / (p as f64 + 1.0)).cos();
                (c.abs() > 1e-12).then(|| -1.0 / (2.0 * c))
            })
            .collect();
        r.sort_by(f64::total_cmp);
        r
    }

    #[test]
    fn det_examples() {
        assert_eq!(det_h(1, 123.0), 1.0);
        assert_eq!(det_h(0, 0.5), 1.0);
        assert!(det_h(3, 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(det_h(2, 1.0), 0.0);
        let s = det_sequence(5, 0.7);
        assert_eq!(s.pmax(), 5);
        assert_relative_eq!(s.values[5], det_h(5, 0.7));
    }

    #[test]
    fn exact_determinant_matches_recursion() {
        let a = BigRational::new(3.into(), 10.into());
        let exact = det_h_exact(3, &a);
        assert_eq!(exact, BigRational::new(82.into(), 100.into()));
    }

    #[test]
    fn root_examples() {
        let r2 = critical_roots(2).unwrap();
        assert_eq!(r2.roots.len(), 2);
        assert_relative_eq!(r2.roots[0].alpha, -1.0, epsilon = 1e-14);
        assert_relative_eq!(r2.roots[1].alpha, 1.0, epsilon = 1e-14);
        let r3 = critical_roots(3).unwrap();
        assert_relative_eq!(r3.roots[1].alpha, 2f64.sqrt() / 2.0, epsilon = 1e-14);
        let r4 = critical_roots(4).unwrap();
        assert_eq!(r4.roots.len(), 4);
        for (a, b) in r4.roots.iter().zip(r4.roots.iter().rev()) {
            assert_relative_eq!(a.alpha, -b.alpha, epsilon = 1e-14);
        }
        assert!(critical_roots(1).is_err());
    }

    #[test]
    fn roots_match_product_oracle_and_are_simple() {
        for p in 2..=16 {
            let found = critical_roots(p).unwrap();
            let oracle = oracle_roots(p);
            assert_eq!(found.roots.len(), oracle.len(), "p = {p}");
            for (f, o) in found.roots.iter().zip(&oracle) {
                assert!((f.alpha - o).abs() < 1e-12, "p = {p}: {} vs {o}", f.alpha);
                assert_eq!(f.multiplicity, 1);
            }
        }
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_h(3, 0.3), 3);
        assert_eq!(rank_h(3, 2f64.sqrt() / 2.0), 2);
        assert_eq!(rank_h(1, 5.0), 1);
        let root = Alpha::critical(3, 1, false).unwrap();
        assert_eq!(rank_h_alpha(3, &root), 2);
        assert_eq!(rank_h_alpha(4, &root), 4);
    }

    #[test]
    fn neighbor_examples() {
        let one = Alpha::parse("1").unwrap();
        let rep = neighbor_nonzero_check(2, &one).unwrap();
        assert!(rep.all_nonzero);
        assert_eq!(rep.neighbors, vec![(1, 1.0), (3, -1.0), (4, -1.0)]);
        let r3 = Alpha::parse("root:3:1").unwrap();
        let rep = neighbor_nonzero_check(3, &r3).unwrap();
        assert!(rep.all_nonzero);
        assert_eq!(rep.neighbors.len(), 4);
        for k in 1..=positive_root_count(4) {
            let a = Alpha::critical(4, k, false).unwrap();
            assert!(neighbor_nonzero_check(4, &a).unwrap().all_nonzero);
        }
        assert!(neighbor_nonzero_check(3, &Alpha::parse("0.3").unwrap()).is_err());
    }

    #[test]
    fn v_sequence_examples() {
        let v = v_sequence(0, 0.5).unwrap();
        assert_eq!((v.get(-1), v.get(0)), (0.0, 1.0));
        let v = v_sequence(2, 1.0).unwrap();
        assert_eq!((v.get(1), v.get(2)), (-1.0, 0.0));
        assert!(v_sequence(3, 0.0).is_err());
    }

    #[test]
    fn row_identity_examples() {
        assert!(v_row_identity_check(5, 3, 0.9).unwrap() <= 1e-9);
        assert!(v_row_identity_check(2, 0, 1.0).unwrap() <= 1e-12);
        assert!(v_row_identity_check(1, 0, 0.7).is_err());
    }

    #[test]
    fn banded_m_examples() {
        let m = build_m_and_inverse(2, 2.0).unwrap();
        assert_eq!(m.matrix, DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]));
        let expect = DMatrix::from_row_slice(2, 2, &[0.5, -0.25, 0.0, 0.5]);
        assert!((m.inverse.clone() - expect).amax() < 1e-15);
        let m3 = build_m_and_inverse(3, 1.0).unwrap();
        assert_eq!(m3.matrix, DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]));
        let m4 = build_m_and_inverse(4, 0.5).unwrap();
        assert_relative_eq!(m4.matrix.determinant(), 0.0625, max_relative = 1e-9);
        assert!(build_m_and_inverse(3, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn recursion_matches_dense_determinant(p in 1usize..=40, a in -2.0f64..2.0) {
            let dense = h_matrix(p, a).determinant();
            let rec = det_h(p, a);
            let scale = dense.abs().max(rec.abs()).max(1.0);
            prop_assert!((dense - rec).abs() / scale <= 1e-8);
        }

        #[test]
        fn v_matches_normalised_u(p in 0usize..30, a in prop_oneof![-2.0f64..-0.1, 0.1f64..2.0]) {
            let v = v_sequence(p, a).unwrap();
            let u = det_h(p, a);
            prop_assert!((v.get(p as isize) * (-a).powi(p as i32) - u).abs() <= 1e-9 * u.abs().max(1.0));
        }

        #[test]
        fn row_identity_holds(p in 2usize..=30, l in 0usize..=30, a in prop_oneof![-2.0f64..-0.1, 0.1f64..2.0]) {
            let v = v_sequence(l + p, a).unwrap();
            let scale = (0..=(l + p) as isize).map(|i| v.get(i).abs()).fold(1.0, f64::max);
            prop_assert!(v_row_identity_check(p, l, a).unwrap() <= 1e-9 * scale);
        }

        #[test]
        fn banded_inverse_is_accurate(p in 2usize..12, a in prop_oneof![-2.0f64..-0.3, 0.3f64..2.0]) {
            let m = build_m_and_inverse(p, a).unwrap();
            let prod = &m.matrix * &m.inverse;
            prop_assert!((prod - DMatrix::identity(p, p)).amax() <= 1e-10);
            let b: Vec<f64> = (0..p).map(|i| i as f64 - 1.5).collect();
            let x = m.solve(&b);
            let y = &m.inverse * nalgebra::DVector::from_vec(b);
            for i in 0..p {
                prop_assert!((x[i] - y[i]).abs() <= 1e-10 * y.amax().max(1.0));
            }
        }

        #[test]
        fn rank_dichotomy(p in 1usize..=12, a in -2.0f64..2.0) {
            let r = rank_h(p, a);
            prop_assert!(r == p || r + 1 == p);
            if a.abs() > 0.05 {
                let numeric = crate::linalg::rank(&h_matrix(p, a));
                prop_assert_eq!(numeric, r);
            }
        }
    }
}
