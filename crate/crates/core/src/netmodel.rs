//! Network instances and channel matrices.
//!
//! Two interference models are supported. In the asymmetric model receiver
//! `k` hears its own transmitter and the left neighbour:
//! `Y_k = X_k + α_k X_{k−1} + N_k`. In the symmetric model it also hears the
//! right neighbour: `Y_k = α_{k,ℓ} X_{k−1} + X_k + α_{k,r} X_{k+1} + N_k`.
//! Boundary inputs `X_0` and `X_{K+1}` do not exist.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower end of the magnitude support for randomly drawn cross-gains.
pub const RANDOM_GAIN_MIN: f64 = 0.1;
/// Upper end of the magnitude support for randomly drawn cross-gains.
pub const RANDOM_GAIN_MAX: f64 = 2.0;

fn default_power() -> f64 {
    1.0
}

/// The side-information quadruple `(t_ℓ, t_r, r_ℓ, r_r)`.
///
/// Transmitter `k` knows messages `M_{k−t_ℓ}..M_{k+t_r}`; receiver `k`
/// observes antennas `k−r_ℓ..k+r_r`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SideInfo {
    pub t_left: usize,
    pub t_right: usize,
    pub r_left: usize,
    pub r_right: usize,
}

impl SideInfo {
    /// Builds a quadruple in the order `(t_ℓ, t_r, r_ℓ, r_r)`.
    pub const fn new(t_left: usize, t_right: usize, r_left: usize, r_right: usize) -> Self {
        Self { t_left, t_right, r_left, r_right }
    }

    /// `t_ℓ + t_r + r_ℓ + r_r`.
    pub const fn sigma(&self) -> usize {
        self.t_left + self.t_right + self.r_left + self.r_right
    }

    /// `t_ℓ + r_ℓ`.
    pub const fn left_sum(&self) -> usize {
        self.t_left + self.r_left
    }

    /// `t_r + r_r`.
    pub const fn right_sum(&self) -> usize {
        self.t_right + self.r_right
    }

    /// True when `t_ℓ + r_ℓ = t_r + r_r`.
    pub const fn is_balanced(&self) -> bool {
        self.left_sum() == self.right_sum()
    }

    /// Swaps the roles of left and right.
    pub const fn mirrored(&self) -> Self {
        Self::new(self.t_right, self.t_left, self.r_right, self.r_left)
    }

    /// Messages transmitter `k` may use, clipped to `1..=n`.
    pub fn tx_window(&self, k: usize, n: usize) -> (usize, usize) {
        (k.saturating_sub(self.t_left).max(1), (k + self.t_right).min(n))
    }

    /// Antennas receiver `k` may observe, clipped to `1..=n`.
    pub fn rx_window(&self, k: usize, n: usize) -> (usize, usize) {
        (k.saturating_sub(self.r_left).max(1), (k + self.r_right).min(n))
    }
}

impl fmt::Display for SideInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "t=({},{}) r=({},{})",
            self.t_left, self.t_right, self.r_left, self.r_right
        )
    }
}

/// A problem instance: number of pairs, side information and power.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    #[serde(rename = "K")]
    pub k: usize,
    pub t_left: usize,
    pub t_right: usize,
    pub r_left: usize,
    pub r_right: usize,
    #[serde(default = "default_power")]
    pub power: f64,
}

impl NetworkParams {
    /// Builds validated parameters with unit power.
    pub fn new(k: usize, t_left: usize, t_right: usize, r_left: usize, r_right: usize) -> Result<Self> {
        let p = Self { k, t_left, t_right, r_left, r_right, power: 1.0 };
        p.validate()?;
        Ok(p)
    }

    /// Builds validated parameters from a side-information quadruple.
    pub fn from_side(k: usize, side: SideInfo) -> Result<Self> {
        Self::new(k, side.t_left, side.t_right, side.r_left, side.r_right)
    }

    /// Replaces the power level.
    pub fn with_power(mut self, power: f64) -> Result<Self> {
        self.power = power;
        self.validate()?;
        Ok(self)
    }

    /// Checks `K ≥ 1` and `P > 0`.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParams("K must be at least 1".into()));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Error::InvalidParams("power must be a positive finite number".into()));
        }
        Ok(())
    }

    /// The side-information quadruple.
    pub const fn side(&self) -> SideInfo {
        SideInfo::new(self.t_left, self.t_right, self.r_left, self.r_right)
    }

    /// `t_ℓ + t_r + r_ℓ + r_r`.
    pub const fn sigma(&self) -> usize {
        self.side().sigma()
    }

    /// The instance seen through a left/right reflection of the chain.
    pub fn mirrored(&self) -> Self {
        Self { t_left: self.t_right, t_right: self.t_left, r_left: self.r_right, r_right: self.r_left, ..*self }
    }
}

/// Interference topology.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// Interference from the left neighbour only.
    Asymmetric,
    /// Interference from both neighbours.
    Symmetric,
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "asym" | "asymmetric" => Ok(Self::Asymmetric),
            "sym" | "symmetric" => Ok(Self::Symmetric),
            other => Err(Error::Parse(format!("unknown topology '{other}'"))),
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Asymmetric => "asymmetric",
            Self::Symmetric => "symmetric",
        })
    }
}

/// Cross-gain assignment.
///
/// For explicit and random assignments `left[i]` is the gain `α_{i+2,ℓ}`
/// coupling `X_{i+1}` into `Y_{i+2}` and `right[i]` is `α_{i+1,r}` coupling
/// `X_{i+2}` into `Y_{i+1}`; both vectors have length `K − 1` (the right
/// vector is empty in the asymmetric model).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CrossGainAssignment {
    /// Every cross-gain equals `alpha`.
    EqualAlpha { alpha: f64 },
    /// Per-link gains.
    Explicit { left: Vec<f64>, right: Vec<f64> },
    /// Gains drawn from the continuous law, together with the draw itself.
    RandomContinuous { seed: u64, left: Vec<f64>, right: Vec<f64> },
}

impl CrossGainAssignment {
    /// The common gain, when all cross-gains are equal by construction.
    pub fn equal_alpha(&self) -> Option<f64> {
        match self {
            Self::EqualAlpha { alpha } => Some(*alpha),
            _ => None,
        }
    }

    /// True for randomly drawn gains.
    pub fn is_random(&self) -> bool {
        matches!(self, Self::RandomContinuous { .. })
    }
}

/// Draws generic cross-gains, uniform on `[−2,−0.1] ∪ [0.1,2]`.
pub fn sample_generic_gains(k: usize, topology: Topology, seed: u64) -> CrossGainAssignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|_| {
                let mag = rng.random_range(RANDOM_GAIN_MIN..=RANDOM_GAIN_MAX);
                if rng.random_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            })
            .collect()
    };
    let links = k.saturating_sub(1);
    let left = draw(links);
    let right = match topology {
        Topology::Asymmetric => Vec::new(),
        Topology::Symmetric => draw(links),
    };
    CrossGainAssignment::RandomContinuous { seed, left, right }
}

/// A network instance as read from or written to JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(flatten)]
    pub params: NetworkParams,
    pub topology: Topology,
    pub gains: CrossGainAssignment,
}

impl Instance {
    /// Builds the channel model described by this instance.
    pub fn build(&self) -> Result<ChannelModel> {
        build_channel(self.params, self.topology, self.gains.clone())
    }
}

/// An immutable channel model with its `K × K` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelModel {
    pub params: NetworkParams,
    pub topology: Topology,
    pub gains: CrossGainAssignment,
    matrix: DMatrix<f64>,
}

/// Builds the channel matrix for the given topology and gains.
pub fn build_channel(
    params: NetworkParams,
    topology: Topology,
    gains: CrossGainAssignment,
) -> Result<ChannelModel> {
    params.validate()?;
    let k = params.k;
    let links = k - 1;
    let (left, right): (Vec<f64>, Vec<f64>) = match &gains {
        CrossGainAssignment::EqualAlpha { alpha } => {
            let r = match topology {
                Topology::Asymmetric => Vec::new(),
                Topology::Symmetric => vec![*alpha; links],
            };
            (vec![*alpha; links], r)
        }
        CrossGainAssignment::Explicit { left, right }
        | CrossGainAssignment::RandomContinuous { left, right, .. } => (left.clone(), right.clone()),
    };
    if left.len() != links {
        return Err(Error::Dimension(format!("expected {links} left gains, got {}", left.len())));
    }
    let expected_right = match topology {
        Topology::Asymmetric => 0,
        Topology::Symmetric => links,
    };
    if right.len() != expected_right {
        return Err(Error::Dimension(format!(
            "expected {expected_right} right gains for the {topology} model, got {}",
            right.len()
        )));
    }
    if let CrossGainAssignment::EqualAlpha { alpha } = gains {
        if alpha == 0.0 {
            return Err(Error::ZeroGain);
        }
    }
    if left.iter().chain(right.iter()).any(|g| *g == 0.0 || !g.is_finite()) {
        return Err(Error::ZeroGain);
    }
    let mut m = DMatrix::<f64>::identity(k, k);
    for (i, g) in left.iter().enumerate() {
        m[(i + 1, i)] = *g;
    }
    for (i, g) in right.iter().enumerate() {
        m[(i, i + 1)] = *g;
    }
    Ok(ChannelModel { params, topology, gains, matrix: m })
}

impl ChannelModel {
    /// Convenience constructor for equal cross-gains.
    pub fn equal(params: NetworkParams, topology: Topology, alpha: f64) -> Result<Self> {
        build_channel(params, topology, CrossGainAssignment::EqualAlpha { alpha })
    }

    /// Number of pairs `K`.
    pub fn k(&self) -> usize {
        self.params.k
    }

    /// The full channel matrix (0-based storage).
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Gain from transmitter `tx` to receive antenna `rx` (1-based; zero when
    /// either index is outside `1..=K`).
    pub fn gain(&self, rx: usize, tx: usize) -> f64 {
        let k = self.k();
        if rx == 0 || tx == 0 || rx > k || tx > k {
            0.0
        } else {
            self.matrix[(rx - 1, tx - 1)]
        }
    }

    /// The common cross-gain, if the model was built with equal gains.
    pub fn equal_alpha(&self) -> Option<f64> {
        self.gains.equal_alpha()
    }

    /// Submatrix with rows `rx` and columns `tx` (1-based, order preserved).
    pub fn submatrix(&self, rx: &[usize], tx: &[usize]) -> Result<DMatrix<f64>> {
        let k = self.k();
        for &i in rx.iter().chain(tx.iter()) {
            if i == 0 || i > k {
                return Err(Error::IndexOutOfRange { index: i, k });
            }
        }
        Ok(DMatrix::from_fn(rx.len(), tx.len(), |i, j| self.matrix[(rx[i] - 1, tx[j] - 1)]))
    }
}

/// Builds `H_p(α)`: unit diagonal and `α` on both off-diagonals.
pub fn h_matrix(p: usize, alpha: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            1.0
        } else if i.abs_diff(j) == 1 {
            alpha
        } else {
            0.0
        }
    })
}
