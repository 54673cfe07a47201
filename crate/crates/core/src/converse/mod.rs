//! Genie-aided converse constructions and their numerical verification.
//!
//! A converse bound comes from a partition of the receivers into a set `A`
//! and rounds `B_1, …, B_q`, together with genie signals. The bound is valid
//! when, after the messages of `A ∪ B_1 ∪ … ∪ B_{i−1}` are known, every
//! antenna needed by `B_i` can be rebuilt from the outputs seen so far, the
//! inputs computable from known messages and the genie signals. The bound
//! value is then `|R_A|`, the number of antennas observed by `A`.
//!
//! Constructions in [`families`] produce the partition and genies. The
//! reconstruction recipes are found by a least-squares solve against the
//! channel, then replayed on sampled data by [`verify_reconstruction`].

mod families;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue_symmetric, numeric_rank, pivoted_least_squares, pseudo_inverse, residual_compensated};
use crate::netmodel::{ChannelModel, SideInfo, Topology};

pub use families::{
    build_asym_genie, build_offset_genie, build_sym_genie_ub1, build_sym_genie_ub2, build_sym_genie_ub3, null_relation,
    offset_info_term, offset_pre_log, offset_shape, NULL_RELATION_TOL,
};

/// Residual above which a target is declared not reconstructible.
pub const RECIPE_RESIDUAL_TOL: f64 = 1e-8;

/// Relative pivot size below which a basis column counts as dependent.
const PIVOT_REL_TOL: f64 = 1e-11;

/// Iterative-refinement passes applied to each recipe solve.
const REFINE_STEPS: usize = 6;

/// Coefficients below this magnitude are dropped from recipes.
const COEFF_DROP: f64 = 1e-14;

/// The construction a partition comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenieFamily {
    Asym,
    Ub1,
    Ub2,
    Ub3,
    Offset,
    Custom,
}

/// A genie signal: a fixed linear combination of noises and, for the
/// offset construction, of inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenieSignal {
    pub index: usize,
    /// Antenna index to coefficient.
    pub noise: BTreeMap<usize, f64>,
    /// Transmitter index to coefficient; empty for noise-only genies.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub input: BTreeMap<usize, f64>,
}

impl GenieSignal {
    /// A noise-only genie from `(antenna, coefficient)` pairs; indices outside
    /// `1..=k` are ignored and repeated indices are summed.
    pub fn noise_only(index: usize, k: usize, terms: impl IntoIterator<Item = (isize, f64)>) -> Self {
        let mut noise = BTreeMap::new();
        for (i, c) in terms {
            if i >= 1 && i as usize <= k && c != 0.0 {
                *noise.entry(i as usize).or_insert(0.0) += c;
            }
        }
        Self { index, noise, input: BTreeMap::new() }
    }
}

/// How one missing output is rebuilt.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionRecipe {
    /// Antenna whose output is rebuilt.
    pub target: usize,
    /// Round (1-based) in which the recipe runs.
    pub stage: usize,
    /// Output index to coefficient (observed or rebuilt earlier).
    pub outputs: BTreeMap<usize, f64>,
    /// Transmitter index to coefficient (inputs computable from known messages).
    pub inputs: BTreeMap<usize, f64>,
    /// Genie index to coefficient.
    pub genies: BTreeMap<usize, f64>,
}

/// Closed form of the signal-dependent information term of the offset genie:
/// `½ ln(1 + P·signal_gain² / noise_energy)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoTerm {
    pub signal_gain: f64,
    pub noise_energy: f64,
}

impl InfoTerm {
    /// The term at power `p`, in nats.
    pub fn at_power(&self, p: f64) -> f64 {
        0.5 * (1.0 + p * self.signal_gain * self.signal_gain / self.noise_energy).ln()
    }
}

/// A receiver partition with its genies and reconstruction recipes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeniePartition {
    pub family: GenieFamily,
    #[serde(rename = "K")]
    pub k: usize,
    pub side: SideInfo,
    pub topology: Topology,
    pub alpha: f64,
    pub a: Vec<usize>,
    pub b: Vec<Vec<usize>>,
    pub r_a: Vec<usize>,
    pub genies: Vec<GenieSignal>,
    pub recipes: Vec<ReconstructionRecipe>,
    pub bound_value: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub info_term: Option<InfoTerm>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Antennas observed by a set of receivers, clipped to `1..=k`.
pub fn reachable_antennas(side: &SideInfo, k: usize, receivers: &[usize]) -> Vec<usize> {
    let mut out = BTreeSet::new();
    for &r in receivers {
        let (lo, hi) = side.rx_window(r, k);
        out.extend(lo..=hi);
    }
    out.into_iter().collect()
}

impl GeniePartition {
    /// Assembles a partition, checks that `A` and the rounds partition the
    /// receivers, and fills in `R_A` and the bound.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        family: GenieFamily,
        k: usize,
        side: SideInfo,
        topology: Topology,
        alpha: f64,
        a: Vec<usize>,
        b: Vec<Vec<usize>>,
        genies: Vec<GenieSignal>,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for &r in a.iter().chain(b.iter().flatten()) {
            if r == 0 || r > k {
                return Err(Error::IndexOutOfRange { index: r, k });
            }
            if !seen.insert(r) {
                return Err(Error::Structural(format!("receiver {r} appears twice in the partition")));
            }
        }
        if seen.len() != k {
            let missing: Vec<usize> = (1..=k).filter(|r| !seen.contains(r)).collect();
            return Err(Error::Structural(format!("receivers {missing:?} are not in the partition")));
        }
        for g in &genies {
            if let Some(&i) = g.noise.keys().chain(g.input.keys()).find(|&&i| i == 0 || i > k) {
                return Err(Error::IndexOutOfRange { index: i, k });
            }
        }
        let r_a = reachable_antennas(&side, k, &a);
        Ok(Self {
            family,
            k,
            side,
            topology,
            alpha,
            bound_value: r_a.len(),
            a,
            b,
            r_a,
            genies,
            recipes: Vec::new(),
            info_term: None,
            notes: Vec::new(),
        })
    }

    /// Reflects every index `i ↦ K + 1 − i`.
    pub fn reflected(mut self) -> Self {
        let f = self.k + 1;
        let flip = |v: &mut Vec<usize>| {
            v.iter_mut().for_each(|x| *x = f - *x);
            v.sort_unstable();
        };
        flip(&mut self.a);
        self.b.iter_mut().for_each(flip);
        flip(&mut self.r_a);
        let flip_map = |m: &BTreeMap<usize, f64>| m.iter().map(|(i, c)| (f - i, *c)).collect();
        for g in &mut self.genies {
            g.noise = flip_map(&g.noise);
            g.input = flip_map(&g.input);
        }
        for r in &mut self.recipes {
            r.target = f - r.target;
            r.outputs = flip_map(&r.outputs);
            r.inputs = flip_map(&r.inputs);
        }
        self.side = self.side.mirrored();
        self
    }

    /// Fills in the reconstruction recipes for `model`.
    pub fn with_recipes(mut self, model: &ChannelModel) -> Result<Self> {
        synthesize_recipes(&mut self, model)?;
        Ok(self)
    }

    /// Antennas outside `R_A`.
    pub fn missing(&self) -> Vec<usize> {
        (1..=self.k).filter(|i| self.r_a.binary_search(i).is_err()).collect()
    }

    /// Antennas rebuilt by the recipes, in execution order.
    pub fn targets(&self) -> Vec<usize> {
        self.recipes.iter().map(|r| r.target).collect()
    }

    /// Messages known before round `stage` (1-based): `A ∪ B_1 ∪ … ∪ B_{stage−1}`.
    fn known_messages(&self, stage: usize) -> BTreeSet<usize> {
        let mut known: BTreeSet<usize> = self.a.iter().copied().collect();
        for b in self.b.iter().take(stage.saturating_sub(1)) {
            known.extend(b.iter().copied());
        }
        known
    }

    /// True when transmitter `j` only needs messages in `known`.
    fn computable(&self, j: usize, known: &BTreeSet<usize>) -> bool {
        let (lo, hi) = self.side.tx_window(j, self.k);
        (lo..=hi).all(|m| known.contains(&m))
    }
}

/// `|R_A|`, the value of the bound.
pub fn mac_bound_value(partition: &GeniePartition) -> usize {
    partition.r_a.len()
}

/// Coordinates of a linear form over `(X_1..X_K, N_1..N_K)`.
fn output_form(h: &DMatrix<f64>, k: usize, j: usize) -> DVector<f64> {
    let mut v = DVector::zeros(2 * k);
    for t in 0..k {
        v[t] = h[(j - 1, t)];
    }
    v[k + j - 1] = 1.0;
    v
}

fn genie_form(g: &GenieSignal, k: usize) -> DVector<f64> {
    let mut v = DVector::zeros(2 * k);
    for (&i, &c) in &g.input {
        v[i - 1] += c;
    }
    for (&i, &c) in &g.noise {
        v[k + i - 1] += c;
    }
    v
}

#[derive(Clone, Copy, Debug)]
enum Basis {
    Output(usize),
    Input(usize),
    Genie(usize),
}

fn solve_recipe(
    target: usize,
    stage: usize,
    basis: &[(Basis, DVector<f64>)],
    goal: &DVector<f64>,
) -> Option<ReconstructionRecipe> {
    if basis.is_empty() {
        return None;
    }
    // Columns are scaled to unit norm so that large genie coefficients do
    // not swamp the pivot threshold. Residuals for the refinement passes are
    // formed in doubled precision against the unscaled basis.
    let raw = DMatrix::from_columns(&basis.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>());
    let norms: Vec<f64> = basis.iter().map(|(_, v)| v.norm().max(f64::MIN_POSITIVE)).collect();
    let scaled = DMatrix::from_columns(&basis.iter().zip(&norms).map(|((_, v), n)| v / *n).collect::<Vec<_>>());
    let unscale = |y: &DVector<f64>| DVector::from_iterator(y.len(), y.iter().zip(&norms).map(|(x, n)| x / n));
    let (y, _) = pivoted_least_squares(&scaled, goal, PIVOT_REL_TOL);
    let mut c = unscale(&y);
    let mut r = residual_compensated(&raw, &c, goal);
    let mut resid = r.amax();
    for _ in 0..REFINE_STEPS {
        let (dy, _) = pivoted_least_squares(&scaled, &r, PIVOT_REL_TOL);
        let next = &c + unscale(&dy);
        let next_r = residual_compensated(&raw, &next, goal);
        if next_r.amax() >= resid {
            break;
        }
        c = next;
        resid = next_r.amax();
        r = next_r;
    }
    let scale = 1.0 + c.amax();
    if resid.is_nan() || resid > RECIPE_RESIDUAL_TOL * scale {
        return None;
    }
    let mut recipe = ReconstructionRecipe {
        target,
        stage,
        outputs: BTreeMap::new(),
        inputs: BTreeMap::new(),
        genies: BTreeMap::new(),
    };
    let cut = COEFF_DROP * scale;
    for ((kind, _), &coef) in basis.iter().zip(c.iter()) {
        if coef.abs() <= cut {
            continue;
        }
        match *kind {
            Basis::Output(j) => recipe.outputs.insert(j, coef),
            Basis::Input(j) => recipe.inputs.insert(j, coef),
            Basis::Genie(j) => recipe.genies.insert(j, coef),
        };
    }
    Some(recipe)
}

/// Finds reconstruction recipes for every missing antenna, round by round.
///
/// In round `i` the targets are the antennas observed by `B_i` that are not
/// yet available. Each target is written as a linear combination of
/// available outputs, inputs computable from the known messages and genie
/// signals; a local window around the target is tried before the full set.
/// Targets rebuilt earlier in the same round are available to later ones.
pub fn synthesize_recipes(partition: &mut GeniePartition, model: &ChannelModel) -> Result<()> {
    let k = partition.k;
    if model.k() != k {
        return Err(Error::Dimension(format!("partition has K={k}, model has K={}", model.k())));
    }
    let h = model.matrix().clone();
    let mut available: BTreeSet<usize> = partition.r_a.iter().copied().collect();
    let observed = available.clone();
    let genie_forms: Vec<(usize, DVector<f64>)> = partition.genies.iter().map(|g| (g.index, genie_form(g, k))).collect();
    let window = 3 * (partition.side.sigma() + 4);
    let mut recipes = Vec::new();
    for stage in 1..=partition.b.len() {
        let known = partition.known_messages(stage);
        let inputs: Vec<usize> = (1..=k).filter(|&j| partition.computable(j, &known)).collect();
        let mut pending: Vec<usize> = reachable_antennas(&partition.side, k, &partition.b[stage - 1])
            .into_iter()
            .filter(|a| !available.contains(a))
            .collect();
        while !pending.is_empty() {
            let mut progress = false;
            let mut i = 0;
            while i < pending.len() {
                let t = pending[i];
                let goal = output_form(&h, k, t);
                let near = |j: usize| j.abs_diff(t) <= window;
                let build = |local: bool, rebuilt: bool| -> Vec<(Basis, DVector<f64>)> {
                    let mut basis = Vec::new();
                    let observed = |j: &usize| rebuilt || observed.contains(j);
                    for &j in available.iter().filter(|&&j| (!local || near(j)) && observed(&j)) {
                        basis.push((Basis::Output(j), output_form(&h, k, j)));
                    }
                    for &j in inputs.iter().filter(|&&j| !local || near(j)) {
                        let mut v = DVector::zeros(2 * k);
                        v[j - 1] = 1.0;
                        basis.push((Basis::Input(j), v));
                    }
                    for (idx, form) in &genie_forms {
                        let support_near = (0..2 * k).any(|c| form[c] != 0.0 && near(c % k + 1));
                        if !local || support_near {
                            basis.push((Basis::Genie(*idx), form.clone()));
                        }
                    }
                    basis
                };
                // Observed outputs are preferred: chaining through rebuilt
                // outputs compounds rounding errors.
                let found = [(true, false), (false, false), (true, true), (false, true)]
                    .into_iter()
                    .find_map(|(local, rebuilt)| solve_recipe(t, stage, &build(local, rebuilt), &goal));
                match found {
                    Some(r) => {
                        recipes.push(r);
                        available.insert(t);
                        pending.remove(i);
                        progress = true;
                    }
                    None => i += 1,
                }
            }
            if !progress {
                return Err(Error::Structural(format!(
                    "round {stage}: outputs {pending:?} cannot be rebuilt from the available outputs, computable inputs and genies"
                )));
            }
        }
    }
    partition.recipes = recipes;
    Ok(())
}

/// Outcome of [`verify_reconstruction`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub bound: usize,
    pub targets: Vec<usize>,
    pub max_abs_error: f64,
    pub trials: usize,
    pub tol: f64,
    pub pass: bool,
}

/// Checks that every recipe only uses what its round allows.
pub fn check_recipe_structure(partition: &GeniePartition) -> Result<()> {
    let mut available: BTreeSet<usize> = partition.r_a.iter().copied().collect();
    let genie_ids: BTreeSet<usize> = partition.genies.iter().map(|g| g.index).collect();
    let mut stage_prev = 0;
    for r in &partition.recipes {
        if r.stage < stage_prev || r.stage == 0 || r.stage > partition.b.len() {
            return Err(Error::Structural(format!("recipe for antenna {} has invalid round {}", r.target, r.stage)));
        }
        stage_prev = r.stage;
        let known = partition.known_messages(r.stage);
        if let Some(j) = r.inputs.keys().find(|&&j| j == 0 || j > partition.k || !partition.computable(j, &known)) {
            return Err(Error::Structural(format!(
                "recipe for antenna {} uses input X_{j}, which is not computable from the messages known in round {}",
                r.target, r.stage
            )));
        }
        if let Some(j) = r.outputs.keys().find(|j| !available.contains(j)) {
            return Err(Error::Structural(format!("recipe for antenna {} uses unavailable output Y_{j}", r.target)));
        }
        if let Some(g) = r.genies.keys().find(|g| !genie_ids.contains(g)) {
            return Err(Error::Structural(format!("recipe for antenna {} uses unknown genie V_{g}", r.target)));
        }
        available.insert(r.target);
    }
    let needed: BTreeSet<usize> = reachable_antennas(&partition.side, partition.k, &partition.b.concat()).into_iter().collect();
    if let Some(a) = needed.iter().find(|a| !available.contains(a)) {
        return Err(Error::Structural(format!("antenna {a} is needed but never rebuilt")));
    }
    Ok(())
}

/// Replays the recipes on sampled data and reports the largest error.
///
/// Each trial draws standard normal inputs and noises, forms
/// `Y = H X + N` and the genie values, then runs the recipes in order using
/// rebuilt (not true) values for earlier targets. The structure of every
/// recipe is checked first. A partition without recipes gets them
/// synthesized for `model` before the replay.
pub fn verify_reconstruction(
    partition: &GeniePartition,
    model: &ChannelModel,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<ReconstructionReport> {
    let k = partition.k;
    if model.k() != k || model.params.side() != partition.side {
        return Err(Error::Precondition("partition and model describe different instances".into()));
    }
    let synthesized;
    let partition = if partition.recipes.is_empty() && !partition.b.is_empty() {
        synthesized = partition.clone().with_recipes(model)?;
        &synthesized
    } else {
        partition
    };
    check_recipe_structure(partition)?;
    let h = model.matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_err: f64 = 0.0;
    for _ in 0..trials {
        let x = DVector::from_fn(k, |_, _| StandardNormal.sample(&mut rng));
        let n: DVector<f64> = DVector::from_fn(k, |_, _| StandardNormal.sample(&mut rng));
        let y = h * &x + &n;
        let genie: BTreeMap<usize, f64> = partition
            .genies
            .iter()
            .map(|g| {
                let v = g.noise.iter().map(|(i, c)| c * n[i - 1]).sum::<f64>()
                    + g.input.iter().map(|(i, c)| c * x[i - 1]).sum::<f64>();
                (g.index, v)
            })
            .collect();
        let mut seen: BTreeMap<usize, f64> = partition.r_a.iter().map(|&j| (j, y[j - 1])).collect();
        for r in &partition.recipes {
            let value = r.outputs.iter().map(|(j, c)| c * seen[j]).sum::<f64>()
                + r.inputs.iter().map(|(j, c)| c * x[j - 1]).sum::<f64>()
                + r.genies.iter().map(|(g, c)| c * genie[g]).sum::<f64>();
            max_err = max_err.max((value - y[r.target - 1]).abs());
            seen.insert(r.target, value);
        }
    }
    Ok(ReconstructionReport {
        bound: partition.bound_value,
        targets: partition.targets(),
        max_abs_error: max_err,
        trials,
        tol,
        pass: max_err <= tol,
    })
}

/// Outcome of [`genie_entropy_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    /// Smallest eigenvalue of the conditional covariance of `{N_k}_{k∈R_A}`.
    pub min_eigenvalue: f64,
    pub nonsingular: bool,
    /// Genie coefficients are fixed numbers, so no coefficient depends on the power.
    pub power_independent: bool,
    /// True when some genie also carries an input term, which is left out here.
    pub signal_terms_excluded: bool,
}

/// Relative tolerance of the rank test in [`genie_entropy_check`].
pub const ENTROPY_RANK_TOL: f64 = 1e-10;

/// Checks that the noises on `R_A` keep a nonsingular covariance given the
/// genie signals.
///
/// With unit-variance independent noises and genie noise matrix `C`, the
/// conditional covariance is `I − C_Rᵀ (C Cᵀ)⁺ C_R`; its smallest eigenvalue
/// is reported. It is singular exactly when some combination of genies only
/// involves noises on `R_A`, that is when `rank C` exceeds the rank of the
/// columns of `C` outside `R_A`. That rank test, on genies scaled to unit
/// norm, decides `nonsingular`: it stays reliable when large coefficients
/// push the smallest eigenvalue towards zero without reaching it. Only the
/// noise parts of the genies are used.
pub fn genie_entropy_check(partition: &GeniePartition) -> EntropyReport {
    let k = partition.k;
    let g = partition.genies.len();
    let r = &partition.r_a;
    let c = DMatrix::from_fn(g, k, |i, j| partition.genies[i].noise.get(&(j + 1)).copied().unwrap_or(0.0));
    let min_eig = if r.is_empty() || g == 0 {
        1.0
    } else {
        let cr = DMatrix::from_fn(g, r.len(), |i, j| c[(i, r[j] - 1)]);
        let gram = &c * c.transpose();
        let pinv = pseudo_inverse(&gram, 1e-12);
        min_eigenvalue_symmetric(&(DMatrix::identity(r.len(), r.len()) - cr.transpose() * pinv * cr))
    };
    let nonsingular = if g == 0 || r.is_empty() {
        true
    } else {
        let mut scaled = c.clone();
        for mut row in scaled.row_iter_mut() {
            let n = row.norm();
            if n > 0.0 {
                row /= n;
            }
        }
        let outside: Vec<usize> = (0..k).filter(|j| r.binary_search(&(j + 1)).is_err()).collect();
        let c_out = DMatrix::from_fn(g, outside.len(), |i, j| scaled[(i, outside[j])]);
        numeric_rank(&scaled, ENTROPY_RANK_TOL) == numeric_rank(&c_out, ENTROPY_RANK_TOL)
    };
    EntropyReport {
        min_eigenvalue: min_eig,
        nonsingular,
        power_independent: true,
        signal_terms_excluded: partition.genies.iter().any(|g| !g.input.is_empty()),
    }
}
