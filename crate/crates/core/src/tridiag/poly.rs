//! Exact univariate polynomials over the rationals with Sturm-sequence root
//! counting, used to isolate the roots of `u_p` viewed as a polynomial in
//! `β = α²`.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

/// Exact rational scalar.
pub type Q = BigRational;

/// Polynomial with coefficients stored from the constant term upwards.
///
/// The coefficient vector never has a trailing zero, so the zero polynomial
/// is the empty vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    coeffs: Vec<Q>,
}

fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

impl Poly {
    /// Builds a polynomial from low-to-high coefficients.
    pub fn new(coeffs: Vec<Q>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    /// The constant polynomial `c`.
    pub fn constant(c: Q) -> Self {
        Self::new(vec![c])
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
    }

    /// Coefficients from the constant term upwards.
    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    /// True for the zero polynomial.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    fn lead(&self) -> &Q {
        self.coeffs.last().expect("nonzero polynomial")
    }

    /// Horner evaluation.
    pub fn eval(&self, x: &Q) -> Q {
        let mut acc = Q::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Floating-point evaluation.
    pub fn eval_f64(&self, x: f64) -> f64 {
        use num::ToPrimitive;
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c.to_f64().unwrap_or(f64::NAN);
        }
        acc
    }

    /// Formal derivative.
    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * q(i as i64))
                .collect(),
        )
    }

    /// `self − other`.
    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let z = Q::zero();
        Self::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&z) - other.coeffs.get(i).unwrap_or(&z))
                .collect(),
        )
    }

    /// `c · self`.
    pub fn scale(&self, c: &Q) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    /// `x · self`.
    pub fn shift_up(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut c = Vec::with_capacity(self.coeffs.len() + 1);
        c.push(Q::zero());
        c.extend(self.coeffs.iter().cloned());
        Self::new(c)
    }

    /// Euclidean division remainder.
    pub fn rem(&self, d: &Self) -> Self {
        assert!(!d.is_zero(), "division by the zero polynomial");
        let mut r = self.coeffs.clone();
        let dd = d.coeffs.len() - 1;
        let lead = d.lead().clone();
        while r.len() > dd && !r.is_empty() {
            let shift = r.len() - 1 - dd;
            let f = r.last().unwrap().clone() / &lead;
            for (i, c) in d.coeffs.iter().enumerate() {
                r[i + shift] -= &f * c;
            }
            r.pop();
            while r.last().is_some_and(Zero::is_zero) {
                r.pop();
            }
        }
        Self::new(r)
    }

    /// Monic greatest common divisor.
    pub fn gcd(a: &Self, b: &Self) -> Self {
        let (mut x, mut y) = (a.clone(), b.clone());
        while !y.is_zero() {
            let r = x.rem(&y);
            x = y;
            y = r;
        }
        if x.is_zero() {
            return x;
        }
        let inv = Q::one() / x.lead();
        x.scale(&inv)
    }

    /// Sturm sequence `p, p', −rem(p, p'), …`.
    pub fn sturm_sequence(&self) -> Vec<Self> {
        let mut seq = vec![self.clone()];
        let d = self.derivative();
        if d.is_zero() {
            return seq;
        }
        seq.push(d);
        loop {
            let n = seq.len();
            let r = seq[n - 2].rem(&seq[n - 1]);
            if r.is_zero() {
                break;
            }
            seq.push(r.scale(&q(-1)));
        }
        seq
    }
}

/// Number of sign changes of a Sturm sequence at `x` (zeros skipped).
pub fn sign_changes(seq: &[Poly], x: &Q) -> usize {
    let mut changes = 0;
    let mut last = 0i8;
    for p in seq {
        let v = p.eval(x);
        let s = if v.is_positive() {
            1
        } else if v.is_negative() {
            -1
        } else {
            0
        };
        if s != 0 {
            if last != 0 && s != last {
                changes += 1;
            }
            last = s;
        }
    }
    changes
}

/// Distinct real roots in `(a, b]` for endpoints that are not roots.
pub fn count_roots(seq: &[Poly], a: &Q, b: &Q) -> usize {
    sign_changes(seq, a).saturating_sub(sign_changes(seq, b))
}

/// Picks a point strictly inside `(a, b)` where `p` does not vanish.
fn safe_midpoint(p: &Poly, a: &Q, b: &Q) -> Q {
    let width = b - a;
    for (num, den) in [(1, 2), (3, 7), (4, 7), (2, 5), (3, 5), (5, 11), (6, 11)] {
        let m = a + &width * Q::new(BigInt::from(num), BigInt::from(den));
        if !p.eval(&m).is_zero() {
            return m;
        }
    }
    unreachable!("a polynomial of bounded degree cannot vanish at seven interior points of a root-free check")
}

/// Disjoint intervals `(lo, hi]`, each holding exactly one distinct root of
/// `p` in `(a, b]`, sorted by position.
pub fn isolate_roots(p: &Poly, a: &Q, b: &Q) -> Vec<(Q, Q)> {
    let seq = p.sturm_sequence();
    let mut out = Vec::new();
    let mut stack = vec![(a.clone(), b.clone())];
    while let Some((lo, hi)) = stack.pop() {
        let n = count_roots(&seq, &lo, &hi);
        if n == 0 {
            continue;
        }
        if n == 1 {
            out.push((lo, hi));
            continue;
        }
        let mid = safe_midpoint(p, &lo, &hi);
        stack.push((lo, mid.clone()));
        stack.push((mid, hi));
    }
    out.sort_by(|x, y| x.0.cmp(&y.0));
    out
}

/// Shrinks an isolating interval until its width is below `width`.
pub fn refine_root(p: &Poly, lo: &Q, hi: &Q, width: &Q) -> (Q, Q) {
    let seq = p.sturm_sequence();
    let (mut lo, mut hi) = (lo.clone(), hi.clone());
    while &(&hi - &lo) > width {
        let mid = safe_midpoint(p, &lo, &hi);
        if count_roots(&seq, &lo, &mid) > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Cauchy upper bound on the magnitude of every root of `p`.
pub fn cauchy_bound(p: &Poly) -> Q {
    let lead = p.lead().abs();
    let mut m = Q::zero();
    for c in &p.coeffs[..p.coeffs.len() - 1] {
        let r = c.abs() / &lead;
        if r > m {
            m = r;
        }
    }
    m + Q::one()
}

/// `u_p` as a polynomial in `β = α²`: `P_0 = P_1 = 1`,
/// `P_{n+2} = P_{n+1} − β P_n`.
pub fn det_poly(p: usize) -> Poly {
    let one = Poly::constant(Q::one());
    if p <= 1 {
        return one;
    }
    let (mut a, mut b) = (one.clone(), one);
    for _ in 2..=p {
        let c = b.sub(&a.shift_up());
        a = b;
        b = c;
    }
    b
}
