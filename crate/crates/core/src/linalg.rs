//! Small dense linear-algebra helpers built on `nalgebra`.
//!
//! Everything here works on `DMatrix<f64>` with 0-based indices; callers in
//! the domain modules translate from the 1-based network indices.

use nalgebra::{DMatrix, DVector};

/// Relative threshold on singular values used for numeric rank decisions.
pub const RANK_REL_TOL: f64 = 1e-8;

/// Singular values of `m` (empty for an empty matrix).
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Numeric rank: the number of singular values above `rel_tol · σ_max`.
pub fn numeric_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    let smax = sv.iter().copied().fold(0.0_f64, f64::max);
    if smax <= f64::MIN_POSITIVE {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Rank with the crate-wide default tolerance.
pub fn rank(m: &DMatrix<f64>) -> usize {
    numeric_rank(m, RANK_REL_TOL)
}

/// Extracts the submatrix with the given 0-based rows and columns, in order.
pub fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// `½ ln det(I + P·GᵀG)` computed from the singular values of `G`.
pub fn half_log_det_i_plus(g: &DMatrix<f64>, power: f64) -> f64 {
    singular_values(g)
        .iter()
        .map(|s| 0.5 * (power * s * s).ln_1p())
        .sum()
}

/// Minimum-norm least-squares solution of `A x = b`.
///
/// Returns the solution and the max-abs residual `‖A x − b‖_∞`.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    if a.ncols() == 0 {
        let res = b.amax();
        return (DVector::zeros(0), res);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = (smax * 1e-12).max(1e-300);
    let x = svd
        .solve(b, eps)
        .unwrap_or_else(|_| DVector::zeros(a.ncols()));
    let res = (a * &x - b).amax();
    (x, res)
}

/// Basic least-squares solution of `A x = b` by column-pivoted QR.
///
/// Columns whose pivot falls below `rel_tol` times the largest pivot are
/// treated as dependent and get a zero coefficient. Returns the solution and
/// the max-abs residual.
pub fn pivoted_least_squares(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> (DVector<f64>, f64) {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return (DVector::zeros(n), b.amax());
    }
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let q = qr.q();
    let diag_max = r[(0, 0)].abs();
    let rank = (0..r.nrows().min(n))
        .take_while(|&i| r[(i, i)].abs() > rel_tol * diag_max && diag_max > 0.0)
        .count();
    let qtb = q.transpose() * b;
    let mut y = DVector::zeros(n);
    for i in (0..rank).rev() {
        let mut s = qtb[i];
        for j in i + 1..rank {
            s -= r[(i, j)] * y[j];
        }
        y[i] = s / r[(i, i)];
    }
    qr.p().inv_permute_rows(&mut y);
    let res = (a * &y - b).amax();
    (y, res)
}

/// `b − A x` with every entry accumulated in doubled precision
/// (error-free products and sums), rounded once at the end.
pub fn residual_compensated(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(a.nrows(), |i, _| {
        let (mut hi, mut lo) = (b[i], 0.0);
        for j in 0..a.ncols() {
            let p = -a[(i, j)] * x[j];
            let pe = (-a[(i, j)]).mul_add(x[j], -p);
            let s = hi + p;
            let bb = s - hi;
            let se = (hi - (s - bb)) + (p - bb);
            hi = s;
            lo += se + pe;
        }
        hi + lo
    })
}

/// Smallest eigenvalue of a symmetric matrix (`+∞` for an empty matrix).
pub fn min_eigenvalue_symmetric(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Moore–Penrose pseudo-inverse with a relative singular-value cutoff.
pub fn pseudo_inverse(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    svd.pseudo_inverse((smax * rel_tol).max(1e-300))
        .unwrap_or_else(|_| DMatrix::zeros(m.ncols(), m.nrows()))
}
