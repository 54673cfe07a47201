//! Finite-SNR experiments: rate curves and pre-log slopes of certified
//! plans, the power-offset growth near critical cross-gains, and random-gain
//! rank trials.
//!
//! Rates are in nats. The pre-log slope is the least-squares slope of the
//! sum rate against `½ ln P` over the upper half of a geometric power grid.

use serde::{Deserialize, Serialize};

use crate::converse::offset_info_term;
use crate::error::{Error, Result};
use crate::linalg::numeric_rank;
use crate::netmodel::{build_channel, sample_generic_gains, ChannelModel, CrossGainAssignment, NetworkParams, Topology};
use crate::schemes::{plan_sum_rate, TransmissionPlan};
use crate::tridiag::critical_roots;

/// Smallest number of grid points accepted by [`slope_estimate`].
pub const MIN_GRID_POINTS: usize = 12;

/// Smallest span of the power grid, in decades.
pub const MIN_GRID_DECADES: f64 = 6.0;

/// Relative singular-value threshold used by the rank trials.
pub const RANK_REL_TOL: f64 = 1e-8;

/// `n` powers spaced geometrically from `p_min` to `p_max` inclusive.
pub fn geometric_grid(p_min: f64, p_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(p_min > 0.0 && p_max > p_min && p_max.is_finite()) || n < 2 {
        return Err(Error::InvalidParams("power grid needs 0 < p_min < p_max and at least two points".into()));
    }
    let (a, b) = (p_min.ln(), p_max.ln());
    Ok((0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect())
}

/// The default grid: 12 points from `10³` to `10¹⁴`.
pub fn default_power_grid() -> Vec<f64> {
    geometric_grid(1e3, 1e14, 12).expect("fixed grid is valid")
}

/// One point of a rate curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    #[serde(rename = "P")]
    pub p: f64,
    pub sum_rate_nats: f64,
}

/// Sum rate of a plan over a power grid with its fitted pre-log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub plan_id: String,
    pub points: Vec<RatePoint>,
    pub slope_estimate: f64,
    pub slope_stderr: f64,
}

/// Ordinary least squares `y ≈ a + b x`; returns `(b, stderr(b))`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(Error::Dimension("linear fit needs two equally long series of length ≥ 2".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Precondition("linear fit needs at least two distinct abscissae".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let stderr = if n > 2 {
        let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
        (sse / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, stderr))
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < MIN_GRID_POINTS {
        return Err(Error::Precondition(format!("power grid needs at least {MIN_GRID_POINTS} points")));
    }
    if grid.iter().any(|p| !(*p > 0.0 && p.is_finite())) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("power grid must be positive and strictly increasing".into()));
    }
    let decades = (grid[grid.len() - 1] / grid[0]).log10();
    if decades < MIN_GRID_DECADES {
        return Err(Error::Precondition(format!("power grid spans {decades:.1} decades, need {MIN_GRID_DECADES}")));
    }
    Ok(())
}

/// Evaluates a plan's sum rate over `grid` and fits the pre-log.
///
/// The slope is fitted against `½ ln P` on the upper half of the grid,
/// which suppresses the `O(1/ln P)` bias of the constant terms.
pub fn slope_estimate(plan: &TransmissionPlan, model: &ChannelModel, grid: &[f64], plan_id: &str) -> Result<RateCurve> {
    check_grid(grid)?;
    let points = grid
        .iter()
        .map(|&p| Ok(RatePoint { p, sum_rate_nats: plan_sum_rate(plan, model, p)? }))
        .collect::<Result<Vec<_>>>()?;
    let top = &points[points.len() / 2..];
    let x: Vec<f64> = top.iter().map(|pt| 0.5 * pt.p.ln()).collect();
    let y: Vec<f64> = top.iter().map(|pt| pt.sum_rate_nats).collect();
    let (slope, stderr) = linear_fit(&x, &y)?;
    Ok(RateCurve { plan_id: plan_id.to_string(), points, slope_estimate: slope, slope_stderr: stderr })
}

/// One sample of the offset experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffsetSample {
    pub alpha: f64,
    pub offset_proxy: f64,
}

/// Offset proxy along a cross-gain grid approaching a critical root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffsetCurve {
    pub alpha_star: f64,
    /// Power at which the proxy is evaluated.
    #[serde(rename = "P")]
    pub p: f64,
    /// Pre-log of the converse bound, `K − q`.
    pub pre_log: usize,
    pub samples: Vec<OffsetSample>,
    /// Fitted slope of the proxy against `−ln|α − α*|`.
    pub fitted_nu: f64,
    /// Multiplicity of `α*` as a root of `u_{L+1}`.
    pub multiplicity: usize,
    /// True when the proxy increases strictly as `|α − α*|` shrinks.
    pub monotone: bool,
}

/// Converse-side offset proxy at one cross-gain.
///
/// With `K = q(L+2) − 1` the bound has pre-log `K − q` plus the information
/// term `½ ln(1 + P α² v_{L+1}² / ‖(v_0, …, v_L)‖²)`. Against the generic
/// multiplicity gain `η = K − q + 1` the proxy is
/// `½ η ln P − (K − q) ½ ln P − info(P)`; constant terms are dropped.
pub fn offset_proxy(l: usize, k: usize, alpha: f64, p: f64) -> Result<f64> {
    let q = offset_q(l, k)?;
    let pre_log = k - q;
    let eta = pre_log + 1;
    let info = offset_info_term(l, alpha)?.at_power(p);
    Ok(0.5 * (eta as f64) * p.ln() - 0.5 * (pre_log as f64) * p.ln() - info)
}

fn offset_q(l: usize, k: usize) -> Result<usize> {
    if (k + 1) % (l + 2) != 0 {
        return Err(Error::Precondition(format!("the offset experiment needs K = q·{} − 1", l + 2)));
    }
    Ok((k + 1) / (l + 2))
}

/// Runs the power-offset experiment around `alpha_star`, a root of `u_{L+1}`.
///
/// For each `α` in `alpha_grid` the proxy of [`offset_proxy`] is computed at
/// the largest power of `p_grid`; the slope against `−ln|α − α*|` estimates
/// the multiplicity `ν`.
pub fn offset_experiment(l: usize, k: usize, alpha_star: f64, alpha_grid: &[f64], p_grid: &[f64]) -> Result<OffsetCurve> {
    let roots = critical_roots(l + 1)?;
    let root = roots
        .roots
        .iter()
        .find(|r| (r.alpha - alpha_star).abs() <= 1e-9 * (1.0 + alpha_star.abs()))
        .ok_or_else(|| Error::Precondition(format!("{alpha_star} is not a root of u_{}", l + 1)))?;
    if alpha_grid.len() < 2 {
        return Err(Error::Precondition("the α grid needs at least two points".into()));
    }
    if let Some(a) = alpha_grid.iter().find(|a| (*a - alpha_star).abs() <= f64::EPSILON * alpha_star.abs().max(1.0)) {
        return Err(Error::Precondition(format!("α = {a} touches the critical root")));
    }
    let p = p_grid
        .iter()
        .copied()
        .fold(f64::NAN, f64::max);
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Precondition("power grid must contain a positive power".into()));
    }
    let samples = alpha_grid
        .iter()
        .map(|&alpha| Ok(OffsetSample { alpha, offset_proxy: offset_proxy(l, k, alpha, p)? }))
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = samples.iter().map(|s| -(s.alpha - alpha_star).abs().ln()).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.offset_proxy).collect();
    let (fitted_nu, _) = linear_fit(&x, &y)?;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let monotone = order.windows(2).all(|w| x[w[1]] > x[w[0]] && y[w[1]] > y[w[0]]);
    Ok(OffsetCurve {
        alpha_star: root.alpha,
        p,
        pre_log: k - offset_q(l, k)?,
        samples,
        fitted_nu,
        multiplicity: root.multiplicity,
        monotone,
    })
}

/// Cross-gains `α* + sign·2^{−e}` for `e` in `exponents`.
pub fn approach_grid(alpha_star: f64, exponents: std::ops::RangeInclusive<i32>, from_above: bool) -> Vec<f64> {
    let sign = if from_above { 1.0 } else { -1.0 };
    exponents.map(|e| alpha_star + sign * 2f64.powi(-e)).collect()
}

/// A contiguous principal submatrix found rank deficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankFailure {
    pub trial: usize,
    /// First index (1-based) of the block.
    pub start: usize,
    pub size: usize,
}

/// Outcome of [`random_gain_rank_trials`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankTrialReport {
    #[serde(rename = "K")]
    pub k: usize,
    pub topology: Topology,
    pub trials: usize,
    pub max_size: usize,
    pub failures: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub examples: Vec<RankFailure>,
}

/// Largest block size examined by the rank checks.
pub const MAX_BLOCK: usize = 12;

/// Contiguous principal blocks of `model` (sizes up to `min(K, 12)`) that are
/// rank deficient, as `(start, size)`.
pub fn principal_rank_failures(model: &ChannelModel) -> Vec<(usize, usize)> {
    let k = model.k();
    let h = model.matrix();
    let mut out = Vec::new();
    for size in 1..=k.min(MAX_BLOCK) {
        for start in 0..=k - size {
            let block = h.view((start, start), (size, size)).into_owned();
            if numeric_rank(&block, RANK_REL_TOL) < size {
                out.push((start + 1, size));
            }
        }
    }
    out
}

/// Samples generic cross-gains `trials` times and checks every contiguous
/// principal submatrix up to size `min(K, 12)` for full rank.
pub fn random_gain_rank_trials(k: usize, topology: Topology, trials: usize, seed: u64) -> Result<RankTrialReport> {
    if trials == 0 {
        return Err(Error::InvalidParams("at least one trial is required".into()));
    }
    let params = NetworkParams::new(k, 0, 0, 0, 0)?;
    let mut failures = 0;
    let mut examples = Vec::new();
    for trial in 0..trials {
        let gains = sample_generic_gains(k, topology, seed.wrapping_add(trial as u64));
        let model = build_channel(params, topology, gains)?;
        for (start, size) in principal_rank_failures(&model) {
            failures += 1;
            if examples.len() < 10 {
                examples.push(RankFailure { trial, start, size });
            }
        }
    }
    Ok(RankTrialReport { k, topology, trials, max_size: k.min(MAX_BLOCK), failures, examples })
}

/// Runs the same check on a fixed gain assignment (a single "trial").
pub fn fixed_gain_rank_check(k: usize, topology: Topology, gains: CrossGainAssignment) -> Result<RankTrialReport> {
    let params = NetworkParams::new(k, 0, 0, 0, 0)?;
    let model = build_channel(params, topology, gains)?;
    let fails = principal_rank_failures(&model);
    Ok(RankTrialReport {
        k,
        topology,
        trials: 1,
        max_size: k.min(MAX_BLOCK),
        failures: fails.len(),
        examples: fails.iter().take(10).map(|&(start, size)| RankFailure { trial: 0, start, size }).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{asym_plan, certify_plan, sym_symmetric_si_plan};
    use crate::tridiag::Alpha;
    use proptest::prelude::*;

    #[test]
    fn default_grid_shape() {
        let g = default_power_grid();
        assert_eq!(g.len(), 12);
        assert!((g[0] - 1e3).abs() < 1e-6 && (g[11] / 1e14 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_fit_recovers_a_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let (b, se) = linear_fit(&x, &y).unwrap();
        assert!((b - 2.0).abs() < 1e-12 && se < 1e-12);
    }

    #[test]
    fn example_one_slopes() {
        let params = NetworkParams::new(7, 1, 1, 1, 1).unwrap();
        for (alpha, want) in [("0.3", 6.0), ("root:3:1", 5.0)] {
            let a = Alpha::parse(alpha).unwrap();
            let plan = sym_symmetric_si_plan(&params, &a).unwrap();
            let model = ChannelModel::equal(params, Topology::Symmetric, a.value()).unwrap();
            assert!(certify_plan(&plan, &model).unwrap().pass);
            let curve = slope_estimate(&plan, &model, &default_power_grid(), alpha).unwrap();
            assert!((curve.slope_estimate - want).abs() <= 0.05, "{alpha}: {}", curve.slope_estimate);
        }
    }

    #[test]
    fn asym_slope_matches_certified_dof() {
        let params = NetworkParams::new(9, 1, 0, 1, 1).unwrap();
        let plan = asym_plan(&params);
        let model = ChannelModel::equal(params, Topology::Asymmetric, 0.8).unwrap();
        let dof = certify_plan(&plan, &model).unwrap().certified_dof;
        let curve = slope_estimate(&plan, &model, &default_power_grid(), "asym").unwrap();
        assert!((curve.slope_estimate - dof as f64).abs() <= 0.05);
        assert!(curve.points.windows(2).all(|w| w[1].sum_rate_nats >= w[0].sum_rate_nats));
    }

    #[test]
    fn short_grid_is_rejected() {
        let params = NetworkParams::new(3, 0, 0, 0, 0).unwrap();
        let plan = asym_plan(&params);
        let model = ChannelModel::equal(params, Topology::Asymmetric, 0.5).unwrap();
        let g = geometric_grid(1.0, 1e3, 12).unwrap();
        assert!(matches!(slope_estimate(&plan, &model, &g, "x"), Err(Error::Precondition(_))));
    }

    #[test]
    fn offset_grows_with_the_multiplicity() {
        let star = std::f64::consts::FRAC_1_SQRT_2;
        let grid = approach_grid(star, 3..=12, true);
        let curve = offset_experiment(2, 7, star, &grid, &default_power_grid()).unwrap();
        assert_eq!(curve.multiplicity, 1);
        assert_eq!(curve.pre_log, 5);
        assert!(curve.monotone);
        assert!((curve.fitted_nu - 1.0).abs() <= 0.2, "{}", curve.fitted_nu);
        let touching = [star, star + 0.1];
        assert!(offset_experiment(2, 7, star, &touching, &default_power_grid()).is_err());
        assert!(offset_experiment(2, 7, 0.5, &grid, &default_power_grid()).is_err());
    }

    #[test]
    fn offset_proxy_saturates_in_power() {
        let star = std::f64::consts::FRAC_1_SQRT_2;
        let a = star + 2f64.powi(-6);
        let hi = offset_proxy(2, 7, a, 1e14).unwrap();
        let lo = offset_proxy(2, 7, a, 1e12).unwrap();
        assert!((hi - lo).abs() < 1e-3);
    }

    #[test]
    fn rank_trials_and_negative_control() {
        for topo in [Topology::Symmetric, Topology::Asymmetric] {
            let r = random_gain_rank_trials(20, topo, 20, 11).unwrap();
            assert_eq!(r.failures, 0, "{r:?}");
        }
        let ctrl = fixed_gain_rank_check(20, Topology::Symmetric, CrossGainAssignment::EqualAlpha { alpha: std::f64::consts::FRAC_1_SQRT_2 })
            .unwrap();
        assert!(ctrl.failures > 0);
        assert_eq!(ctrl.examples.iter().map(|f| f.size).min(), Some(3));
        assert_eq!(random_gain_rank_trials(1, Topology::Symmetric, 3, 0).unwrap().failures, 0);
    }

    #[test]
    fn offset_needs_the_stated_shape() {
        assert!(matches!(offset_proxy(2, 8, 0.6, 1e6), Err(Error::Precondition(_))));
        assert!(offset_proxy(2, 11, 0.6, 1e6).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn sum_rate_is_monotone(k in 1usize..12, tl in 0usize..2, tr in 0usize..2, rl in 0usize..2, rr in 0usize..2,
                                alpha in 0.15f64..2.0, p1 in 1.0f64..1e6, f in 1.0f64..1e3) {
            let params = NetworkParams::new(k, tl, tr, rl, rr).unwrap();
            let plan = asym_plan(&params);
            let model = ChannelModel::equal(params, Topology::Asymmetric, alpha).unwrap();
            let a = plan_sum_rate(&plan, &model, p1).unwrap();
            let b = plan_sum_rate(&plan, &model, p1 * f).unwrap();
            prop_assert!(b + 1e-12 >= a);
        }
    }
}
