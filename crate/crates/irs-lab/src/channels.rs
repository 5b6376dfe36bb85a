//! Array geometry, propagation regimes, and seeded channel synthesis.
//!
//! All arrays are uniform linear arrays aligned with the x-axis; steering
//! angles are measured in the x–y plane between the array axis and the
//! direction of departure/arrival (elevation is ignored — the steering model
//! is 1-D). For a link A→B the departure angle lives at A toward B and the
//! arrival angle at B toward A, both folded into (0°, 180°).

use crate::matcore::{C64, CMat, CVec};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("steering angle {0}° outside the open interval (0°, 180°)")]
    BadAngle(f64),
    #[error("array needs at least one element")]
    EmptyArray,
    #[error("element spacing must be positive, got {0}")]
    BadSpacing(f64),
    #[error("target rank {rank} outside 1..=min({rows}, {cols})")]
    BadRank { rank: usize, rows: usize, cols: usize },
    #[error("transmitter and receiver share a position; path loss undefined")]
    ZeroDistance,
    #[error("nodes {0} and {1} are vertically stacked; no azimuth angle exists")]
    DegenerateGeometry(String, String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, ChannelError>;

/// A uniform linear array: element count plus spacing in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub num_elements: usize,
    pub element_spacing_d: f64,
}

impl ArrayGeometry {
    pub fn new(num_elements: usize, element_spacing_d: f64) -> Result<Self> {
        if num_elements < 1 {
            return Err(ChannelError::EmptyArray);
        }
        if !(element_spacing_d > 0.0) {
            return Err(ChannelError::BadSpacing(element_spacing_d));
        }
        Ok(Self {
            num_elements,
            element_spacing_d,
        })
    }
}

/// Normalized ULA steering vector: entry n is
/// `(1/√N)·exp(+j·2π·(d/λ)·(n−1)·cosθ)`, giving ‖h‖₂ = 1 exactly.
pub fn steering_vector(theta_deg: f64, geom: &ArrayGeometry) -> Result<CVec> {
    if !(theta_deg > 0.0 && theta_deg < 180.0) {
        return Err(ChannelError::BadAngle(theta_deg));
    }
    let n = geom.num_elements;
    let cos_theta = (theta_deg * PI / 180.0).cos();
    let scale = 1.0 / (n as f64).sqrt();
    Ok(CVec::from_fn(n, |idx, _| {
        let phase = 2.0 * PI * geom.element_spacing_d * idx as f64 * cos_theta;
        C64::new(phase.cos(), phase.sin()) * scale
    }))
}

/// Rank-one line-of-sight channel `h(θ_rx)·hᴴ(θ_tx)`; rows come from the
/// receive array, columns from the transmit array.
pub fn los_channel(
    theta_rx_deg: f64,
    theta_tx_deg: f64,
    geom_rx: &ArrayGeometry,
    geom_tx: &ArrayGeometry,
) -> Result<CMat> {
    let h_rx = steering_vector(theta_rx_deg, geom_rx)?;
    let h_tx = steering_vector(theta_tx_deg, geom_tx)?;
    Ok(&h_rx * h_tx.adjoint())
}

/// I.i.d. circularly-symmetric complex Gaussian entries with unit variance
/// per entry (real and imaginary parts each N(0, 1/2)).
pub fn rayleigh_channel<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let normal = Normal::new(0.0, (0.5f64).sqrt()).expect("valid normal");
    // Row-major draw order so the matrix is a pure function of the stream.
    let data: Vec<C64> = (0..rows * cols)
        .map(|_| C64::new(normal.sample(rng), normal.sample(rng)))
        .collect();
    CMat::from_row_slice(rows, cols, &data)
}

/// Channel with exactly `r` scattering clusters: a sum of r independent
/// rank-1 outer products of unit-variance complex Gaussian vectors, scaled
/// by 1/√r so the expected squared Frobenius norm is `rows·cols`.
pub fn rank_deficient_channel<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    r: usize,
    rng: &mut R,
) -> Result<CMat> {
    if r < 1 || r > rows.min(cols) {
        return Err(ChannelError::BadRank { rank: r, rows, cols });
    }
    let mut h = CMat::zeros(rows, cols);
    for _ in 0..r {
        let u = rayleigh_channel(rows, 1, rng);
        let v = rayleigh_channel(cols, 1, rng);
        h += u * v.adjoint();
    }
    Ok(h.scale(1.0 / (r as f64).sqrt()))
}

pub fn distance_m(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d: f64 = (0..3).map(|i| (a[i] - b[i]).powi(2)).sum();
    d.sqrt()
}

/// Amplitude scale implied by the log-distance law
/// `PL_dB = ref_loss_dB − 10·exponent·log₁₀(distance)`.
pub fn pathloss_amplitude(
    tx_pos: [f64; 3],
    rx_pos: [f64; 3],
    exponent: f64,
    ref_loss_db: f64,
) -> Result<f64> {
    let dist = distance_m(tx_pos, rx_pos);
    if dist == 0.0 {
        return Err(ChannelError::ZeroDistance);
    }
    let pl_db = ref_loss_db - 10.0 * exponent * dist.log10();
    Ok(10f64.powf(pl_db / 20.0))
}

/// Scale a small-scale channel matrix by the link's path-loss amplitude.
pub fn apply_pathloss(
    h: &CMat,
    tx_pos: [f64; 3],
    rx_pos: [f64; 3],
    exponent: f64,
    ref_loss_db: f64,
) -> Result<CMat> {
    Ok(h.scale(pathloss_amplitude(tx_pos, rx_pos, exponent, ref_loss_db)?))
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Derive an independent per-task seed from a master seed and a task index
/// (splitmix64 finalizer). Workers draw from their own generator seeded this
/// way, so results cannot depend on scheduling or worker count.
pub fn mix_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PathLossModel {
    #[serde(default = "default_exponent_direct")]
    pub exponent_direct: f64,
    #[serde(default = "default_exponent_reflect")]
    pub exponent_reflect: f64,
    #[serde(rename = "ref_loss_dB", default = "default_ref_loss_db")]
    pub ref_loss_db: f64,
}

fn default_exponent_direct() -> f64 {
    2.2
}
fn default_exponent_reflect() -> f64 {
    2.0
}
fn default_ref_loss_db() -> f64 {
    -30.0
}
fn default_d_over_lambda() -> f64 {
    0.5
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self {
            exponent_direct: default_exponent_direct(),
            exponent_reflect: default_exponent_reflect(),
            ref_loss_db: default_ref_loss_db(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Positions {
    pub bs: [f64; 3],
    pub irs: [f64; 3],
    pub users: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum Regime {
    #[serde(rename = "LoS+LoS")]
    LosLos,
    #[serde(rename = "LoS+Rayleigh")]
    LosRayleigh,
    #[serde(rename = "rank-deficient")]
    RankDeficient {
        #[serde(rename = "I")]
        i: Vec<usize>,
        #[serde(rename = "J")]
        j: Vec<usize>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SystemConfig {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "Q")]
    pub q: Vec<usize>,
    #[serde(rename = "L")]
    pub l: Vec<usize>,
    #[serde(rename = "P_T_dBm")]
    pub p_t_dbm: f64,
    #[serde(rename = "P_I_dBm")]
    pub p_i_dbm: f64,
    #[serde(rename = "sigma2_irs_dBm")]
    pub sigma2_irs_dbm: f64,
    #[serde(rename = "sigma2_z_dBm")]
    pub sigma2_z_dbm: f64,
    pub positions: Positions,
    pub regime: Regime,
    #[serde(default)]
    pub pathloss: PathLossModel,
    #[serde(default = "default_d_over_lambda")]
    pub d_over_lambda: f64,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(ChannelError::Config(msg));
        if self.m < 1 || self.n < 1 || self.k < 1 {
            return fail(format!("M={}, N={}, K={} must all be ≥ 1", self.m, self.n, self.k));
        }
        if self.q.len() != self.k || self.l.len() != self.k {
            return fail(format!(
                "Q and L must list one entry per user: |Q|={}, |L|={}, K={}",
                self.q.len(),
                self.l.len(),
                self.k
            ));
        }
        if self.q.iter().any(|&q| q < 1) || self.l.iter().any(|&l| l < 1) {
            return fail("antenna and stream counts must be ≥ 1".into());
        }
        let sum_l: usize = self.l.iter().sum();
        if sum_l > self.m {
            return fail(format!("total streams {} exceed BS antennas {}", sum_l, self.m));
        }
        for v in [
            self.p_t_dbm,
            self.p_i_dbm,
            self.sigma2_irs_dbm,
            self.sigma2_z_dbm,
        ] {
            if !v.is_finite() {
                return fail("powers and noise variances must be finite".into());
            }
        }
        if self.positions.users.len() != self.k {
            return fail(format!(
                "positions list {} users but K={}",
                self.positions.users.len(),
                self.k
            ));
        }
        if !(self.d_over_lambda > 0.0) {
            return fail(format!("d_over_lambda must be positive, got {}", self.d_over_lambda));
        }
        if let Regime::RankDeficient { i, j } = &self.regime {
            if i.len() != self.k || j.len() != self.k {
                return fail(format!(
                    "rank-deficient regime needs per-user ranks: |I|={}, |J|={}, K={}",
                    i.len(),
                    j.len(),
                    self.k
                ));
            }
            for k in 0..self.k {
                if i[k] < 1 || j[k] < 1 {
                    return fail(format!("user {} has zero channel rank", k + 1));
                }
                if i[k] + j[k] > self.q[k] {
                    return fail(format!(
                        "user {}: I+J = {} exceeds Q = {}",
                        k + 1,
                        i[k] + j[k],
                        self.q[k]
                    ));
                }
                if i[k] > self.m || j[k] > self.n {
                    return fail(format!(
                        "user {}: ranks I={} (≤ M) and J={} (≤ N) must fit the arrays",
                        k + 1,
                        i[k],
                        j[k]
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn p_t_mw(&self) -> f64 {
        dbm_to_mw(self.p_t_dbm)
    }
    pub fn p_i_mw(&self) -> f64 {
        dbm_to_mw(self.p_i_dbm)
    }
    pub fn sigma2_irs_mw(&self) -> f64 {
        dbm_to_mw(self.sigma2_irs_dbm)
    }
    pub fn sigma2_z_mw(&self) -> f64 {
        dbm_to_mw(self.sigma2_z_dbm)
    }
    /// Total user antennas, Σ Q_k.
    pub fn n_u(&self) -> usize {
        self.q.iter().sum()
    }

    pub fn bs_geometry(&self) -> ArrayGeometry {
        ArrayGeometry {
            num_elements: self.m,
            element_spacing_d: self.d_over_lambda,
        }
    }
    pub fn irs_geometry(&self) -> ArrayGeometry {
        ArrayGeometry {
            num_elements: self.n,
            element_spacing_d: self.d_over_lambda,
        }
    }
    pub fn user_geometry(&self, k: usize) -> ArrayGeometry {
        ArrayGeometry {
            num_elements: self.q[k],
            element_spacing_d: self.d_over_lambda,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: SystemConfig =
            serde_json::from_str(s).map_err(|e| ChannelError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Azimuth of the direction `from → to` against the +x array axis, folded
/// into (0°, 180°) — the steering model only sees cosθ, so the fold is
/// lossless.
pub fn azimuth_deg(from: [f64; 3], to: [f64; 3]) -> Result<f64> {
    let dx = to[0] - from[0];
    let dy = to[1] - from[1];
    let planar = (dx * dx + dy * dy).sqrt();
    if planar == 0.0 {
        return Err(ChannelError::DegenerateGeometry(
            format!("{from:?}"),
            format!("{to:?}"),
        ));
    }
    let theta = (dx / planar).acos().to_degrees();
    if !(theta > 0.0 && theta < 180.0) {
        return Err(ChannelError::BadAngle(theta));
    }
    Ok(theta)
}

/// Line-of-sight departure/arrival angles, kept so beamformers that steer
/// from geometry (rather than from a channel estimate) can rebuild the
/// BS→IRS direction.
#[derive(Debug, Clone, PartialEq)]
pub struct LosMeta {
    /// Departure angle at the BS toward the IRS, degrees.
    pub bs_irs_departure_deg: f64,
    /// Departure angles at the BS toward each user, degrees.
    pub bs_user_departure_deg: Vec<f64>,
}

/// One draw of every channel matrix in the network.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// BS→IRS, N×M.
    pub h_bi: CMat,
    /// BS→user k direct channels, Q_k×M.
    pub h_d: Vec<CMat>,
    /// IRS→user k channels, Q_k×N.
    pub g_h: Vec<CMat>,
    /// Present only in the LoS+LoS regime.
    pub los_meta: Option<LosMeta>,
}

/// Build all channel matrices for one trial. Deterministic given the
/// configuration and the generator state; draw order is fixed (H_BI, then
/// every H_dk, then every G_kᴴ).
pub fn realize_channels<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<ChannelSet> {
    cfg.validate()?;
    let pl = &cfg.pathloss;
    let pos = &cfg.positions;
    let bs_geom = cfg.bs_geometry();
    let irs_geom = cfg.irs_geometry();

    let amp_bi = pathloss_amplitude(pos.bs, pos.irs, pl.exponent_reflect, pl.ref_loss_db)?;
    let amp_d: Vec<f64> = pos
        .users
        .iter()
        .map(|&u| pathloss_amplitude(pos.bs, u, pl.exponent_direct, pl.ref_loss_db))
        .collect::<Result<_>>()?;
    let amp_g: Vec<f64> = pos
        .users
        .iter()
        .map(|&u| pathloss_amplitude(pos.irs, u, pl.exponent_reflect, pl.ref_loss_db))
        .collect::<Result<_>>()?;

    let mut los_meta = None;

    let h_bi = match &cfg.regime {
        Regime::LosLos => {
            let dep = azimuth_deg(pos.bs, pos.irs)?;
            let arr = azimuth_deg(pos.irs, pos.bs)?;
            los_channel(arr, dep, &irs_geom, &bs_geom)?.scale(amp_bi)
        }
        Regime::LosRayleigh | Regime::RankDeficient { .. } => {
            rayleigh_channel(cfg.n, cfg.m, rng).scale(amp_bi)
        }
    };

    let mut h_d = Vec::with_capacity(cfg.k);
    for k in 0..cfg.k {
        let user_geom = cfg.user_geometry(k);
        let h = match &cfg.regime {
            Regime::LosLos | Regime::LosRayleigh => {
                let dep = azimuth_deg(pos.bs, pos.users[k])?;
                let arr = azimuth_deg(pos.users[k], pos.bs)?;
                los_channel(arr, dep, &user_geom, &bs_geom)?
            }
            Regime::RankDeficient { i, .. } => {
                rank_deficient_channel(cfg.q[k], cfg.m, i[k], rng)?
            }
        };
        h_d.push(h.scale(amp_d[k]));
    }

    let mut g_h = Vec::with_capacity(cfg.k);
    for k in 0..cfg.k {
        let user_geom = cfg.user_geometry(k);
        let g = match &cfg.regime {
            Regime::LosLos => {
                let dep = azimuth_deg(pos.irs, pos.users[k])?;
                let arr = azimuth_deg(pos.users[k], pos.irs)?;
                los_channel(arr, dep, &user_geom, &irs_geom)?
            }
            Regime::LosRayleigh => rayleigh_channel(cfg.q[k], cfg.n, rng),
            Regime::RankDeficient { j, .. } => {
                rank_deficient_channel(cfg.q[k], cfg.n, j[k], rng)?
            }
        };
        g_h.push(g.scale(amp_g[k]));
    }

    if matches!(cfg.regime, Regime::LosLos) {
        los_meta = Some(LosMeta {
            bs_irs_departure_deg: azimuth_deg(pos.bs, pos.irs)?,
            bs_user_departure_deg: pos
                .users
                .iter()
                .map(|&u| azimuth_deg(pos.bs, u))
                .collect::<Result<_>>()?,
        });
    }

    Ok(ChannelSet {
        h_bi,
        h_d,
        g_h,
        los_meta,
    })
}
