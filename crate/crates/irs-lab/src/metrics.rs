//! Rate and SNR evaluation for realized beamformer solutions.
//!
//! Two rate families are supported. Methods that keep multi-stream
//! transmit/receive matrices are scored with a determinant rate over
//! covariance operands (`log2 det(I + S B^-1)`); the single-stream methods
//! that reserve a dedicated reflected stream for user 1 are scored with
//! scalar SINR rates, the reflected stream adding to user 1's total.
//! [`evaluate`] dispatches on the method tag and aggregates a
//! [`RateReport`] per trial.

use serde::Serialize;
use thiserror::Error;

use crate::beamformers::{BeamformerSolution, MethodTag, ReflectionMatrix, ThetaConfig};
use crate::channels::{ChannelSet, SystemConfig};
use crate::matcore::{self, C64, CMat};

/// Shorthand for metric results.
pub type Result<T> = std::result::Result<T, MetricsError>;

/// Failures while scoring a solution.
#[derive(Debug, Error)]
pub enum MetricsError {
    /// A power term that must be non-negative came out negative (or NaN).
    #[error("power term must be non-negative and finite, got {0}")]
    NegativePower(f64),
    /// The additive noise power in a scalar SINR must be strictly positive.
    #[error("noise power must be positive, got {0}")]
    BadNoise(f64),
    /// Rate operands disagree in shape.
    #[error("operand dimensions disagree: {0}")]
    Dimension(String),
    /// The solution does not fit the channel set or configuration.
    #[error("solution does not match the channel set: {0}")]
    Mismatch(String),
    /// A solution produced an unusable quantity (e.g. a zero combiner).
    #[error("degenerate solution: {0}")]
    Degenerate(String),
    /// Propagated linear-algebra failure.
    #[error(transparent)]
    Mat(#[from] matcore::MatError),
}

/// The five covariance operands of the determinant rate for one user:
/// desired direct/reflected signal (`a1`, `a2`), cross-user direct/reflected
/// interference (`b1`, `b2`), and total noise after combining (`b3`).
#[derive(Debug, Clone)]
pub struct RateOperands {
    pub a1: CMat,
    pub a2: CMat,
    pub b1: CMat,
    pub b2: CMat,
    pub b3: CMat,
}

impl RateOperands {
    /// Determinant rate of these operands.
    pub fn rate(&self) -> Result<f64> {
        rate_det(&self.a1, &self.a2, &self.b1, &self.b2, &self.b3)
    }

    /// Ratio of desired to noise power, `trace(A1+A2)/trace(B3)`, in dB.
    pub fn snr_db(&self) -> Result<f64> {
        let num = (&self.a1 + &self.a2).trace().re;
        let den = self.b3.trace().re;
        if !(den > 0.0) {
            return Err(MetricsError::Degenerate(format!(
                "noise operand has non-positive trace {den}"
            )));
        }
        if !(num >= 0.0) || !num.is_finite() {
            return Err(MetricsError::NegativePower(num));
        }
        Ok(10.0 * (num / den).max(f64::MIN_POSITIVE).log10())
    }
}

fn check_operand(name: &str, m: &CMat, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(MetricsError::Dimension(format!(
            "{name} is {}x{}, expected {dim}x{dim}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !matcore::is_finite(m) {
        return Err(MetricsError::Dimension(format!(
            "{name} has non-finite entries"
        )));
    }
    Ok(())
}

/// Determinant rate `log2 det(I + (A1+A2)(B1+B2+B3)^-1)` in bit/s/Hz.
///
/// All five operands must be square with the same (stream) dimension. The
/// denominator is symmetrized and diagonally loaded per the shared
/// conditioning policy before inversion, and the product is evaluated in a
/// whitened form so the result is real by construction.
pub fn rate_det(a1: &CMat, a2: &CMat, b1: &CMat, b2: &CMat, b3: &CMat) -> Result<f64> {
    let dim = a1.nrows();
    if dim == 0 {
        return Err(MetricsError::Dimension("empty operands".into()));
    }
    check_operand("A1", a1, dim)?;
    check_operand("A2", a2, dim)?;
    check_operand("B1", b1, dim)?;
    check_operand("B2", b2, dim)?;
    check_operand("B3", b3, dim)?;
    let s = matcore::hermitianize(&(a1 + a2));
    let b = matcore::hermitianize(&(b1 + b2 + b3));
    let (b_loaded, _) = matcore::ridge_load(&b)?;
    let w = matcore::matrix_inv_sqrt(&b_loaded)?;
    let whitened = matcore::hermitianize(&(&w * s * &w));
    Ok(matcore::log2_det_i_plus(&whitened)?)
}

/// Scalar Shannon rate `log2(1 + signal/(interference + noise))`.
///
/// `signal` and `interference` must be non-negative; `noise` strictly
/// positive.
pub fn rate_sinr(signal: f64, interference: f64, noise: f64) -> Result<f64> {
    if !(noise > 0.0) || !noise.is_finite() {
        return Err(MetricsError::BadNoise(noise));
    }
    if !(signal >= 0.0) || !signal.is_finite() {
        return Err(MetricsError::NegativePower(signal));
    }
    if !(interference >= 0.0) || !interference.is_finite() {
        return Err(MetricsError::NegativePower(interference));
    }
    Ok((1.0 + signal / (interference + noise)).log2())
}

/// Validate that a solution structurally fits its channel set and config.
pub fn check_solution(solution: &BeamformerSolution, set: &ChannelSet, cfg: &SystemConfig) -> Result<()> {
    let k_users = cfg.k;
    if solution.num_users() != k_users || solution.u.len() != k_users {
        return Err(MetricsError::Mismatch(format!(
            "solution covers {} users, configuration has {k_users}",
            solution.num_users()
        )));
    }
    if set.h_d.len() != k_users || set.g_h.len() != k_users {
        return Err(MetricsError::Mismatch(format!(
            "channel set covers {} users, configuration has {k_users}",
            set.h_d.len()
        )));
    }
    if solution.theta.total_elements() != cfg.n {
        return Err(MetricsError::Mismatch(format!(
            "reflection coefficients cover {} elements, expected {}",
            solution.theta.total_elements(),
            cfg.n
        )));
    }
    if set.h_bi.nrows() != cfg.n || set.h_bi.ncols() != cfg.m {
        return Err(MetricsError::Mismatch(format!(
            "BS-IRS channel is {}x{}, expected {}x{}",
            set.h_bi.nrows(),
            set.h_bi.ncols(),
            cfg.n,
            cfg.m
        )));
    }
    for k in 0..k_users {
        let (v, u) = (&solution.v[k], &solution.u[k]);
        if v.nrows() != cfg.m {
            return Err(MetricsError::Mismatch(format!(
                "transmit beam {k} has {} rows, expected {}",
                v.nrows(),
                cfg.m
            )));
        }
        if u.nrows() != cfg.q[k] {
            return Err(MetricsError::Mismatch(format!(
                "receive combiner {k} has {} rows, expected {}",
                u.nrows(),
                cfg.q[k]
            )));
        }
        if v.ncols() != u.ncols() || v.ncols() == 0 {
            return Err(MetricsError::Mismatch(format!(
                "beam/combiner stream counts disagree for user {k}: {} vs {}",
                v.ncols(),
                u.ncols()
            )));
        }
        if !matcore::is_finite(v) || !matcore::is_finite(u) {
            return Err(MetricsError::Mismatch(format!(
                "solution for user {k} has non-finite entries"
            )));
        }
    }
    if let Some(rs) = &solution.reflect_stream {
        if rs.v0.len() != cfg.m {
            return Err(MetricsError::Mismatch(format!(
                "reflected-stream transmit beam has {} rows, expected {}",
                rs.v0.len(),
                cfg.m
            )));
        }
        if rs.u0.len() != cfg.q[0] {
            return Err(MetricsError::Mismatch(format!(
                "reflected-stream combiner has {} rows, expected {}",
                rs.u0.len(),
                cfg.q[0]
            )));
        }
    }
    Ok(())
}

fn theta_blocks(theta: &ThetaConfig) -> Vec<ReflectionMatrix> {
    match theta {
        ThetaConfig::Full(m) => vec![m.clone()],
        ThetaConfig::PerSubSurface(blocks) => blocks.clone(),
    }
}

fn outer(x: &CMat) -> CMat {
    x * x.adjoint()
}

/// Determinant-rate operands for user `k` when each IRS sub-surface serves
/// its own user: the reflected contributions add power-wise across blocks,
/// so every sub-surface cascade enters `A2`/`B2`/`B3` as a separate term.
pub fn tll_rate_operands(
    solution: &BeamformerSolution,
    set: &ChannelSet,
    cfg: &SystemConfig,
    k: usize,
) -> Result<RateOperands> {
    check_solution(solution, set, cfg)?;
    if k >= cfg.k {
        return Err(MetricsError::Mismatch(format!("no user {k}")));
    }
    let u = &solution.u[k];
    let streams = u.ncols();
    let sigma2_irs = cfg.sigma2_irs_mw();
    let sigma2_z = cfg.sigma2_z_mw();

    let uh_hd = u.adjoint() * &set.h_d[k];
    let a1 = outer(&(&uh_hd * &solution.v[k]));
    let mut b1 = CMat::zeros(streams, streams);
    for (i, v) in solution.v.iter().enumerate() {
        if i != k {
            b1 += outer(&(&uh_hd * v));
        }
    }

    let mut a2 = CMat::zeros(streams, streams);
    let mut b2 = CMat::zeros(streams, streams);
    let mut b3 = outer(&u.adjoint()) * C64::new(sigma2_z, 0.0);
    let mut offset = 0;
    for block in theta_blocks(&solution.theta) {
        let width = block.len();
        let g_block = set.g_h[k].columns(offset, width).clone_owned();
        let h_block = set.h_bi.rows(offset, width).clone_owned();
        let ug = u.adjoint() * g_block * block.to_matrix();
        let cascade = &ug * h_block;
        a2 += outer(&(&cascade * &solution.v[k]));
        for (i, v) in solution.v.iter().enumerate() {
            if i != k {
                b2 += outer(&(&cascade * v));
            }
        }
        b3 += outer(&ug) * C64::new(sigma2_irs, 0.0);
        offset += width;
    }
    Ok(RateOperands { a1, a2, b1, b2, b3 })
}

/// Determinant-rate operands for user `k` when the whole IRS acts as one
/// aperture, so the reflected path is the single coherent cascade
/// `G_k^H Theta H_BI`.
pub fn full_rate_operands(
    solution: &BeamformerSolution,
    set: &ChannelSet,
    cfg: &SystemConfig,
    k: usize,
) -> Result<RateOperands> {
    check_solution(solution, set, cfg)?;
    if k >= cfg.k {
        return Err(MetricsError::Mismatch(format!("no user {k}")));
    }
    let u = &solution.u[k];
    let theta = solution.theta.concatenated().to_matrix();
    let sigma2_irs = cfg.sigma2_irs_mw();
    let sigma2_z = cfg.sigma2_z_mw();

    let uh_hd = u.adjoint() * &set.h_d[k];
    let ug = u.adjoint() * &set.g_h[k] * &theta;
    let cascade = &ug * &set.h_bi;

    let a1 = outer(&(&uh_hd * &solution.v[k]));
    let a2 = outer(&(&cascade * &solution.v[k]));
    let streams = u.ncols();
    let mut b1 = CMat::zeros(streams, streams);
    let mut b2 = CMat::zeros(streams, streams);
    for (i, v) in solution.v.iter().enumerate() {
        if i != k {
            b1 += outer(&(&uh_hd * v));
            b2 += outer(&(&cascade * v));
        }
    }
    let b3 = outer(&ug) * C64::new(sigma2_irs, 0.0)
        + outer(&u.adjoint()) * C64::new(sigma2_z, 0.0);
    Ok(RateOperands { a1, a2, b1, b2, b3 })
}

/// Per-user scalar quantities behind the SINR rates: desired power, residual
/// interference, and effective noise after combining.
struct SinrTerms {
    signal: f64,
    interference: f64,
    noise: f64,
}

fn direct_stream_terms(
    solution: &BeamformerSolution,
    set: &ChannelSet,
    cfg: &SystemConfig,
    theta: &CMat,
    k: usize,
) -> SinrTerms {
    let u = solution.u[k].column(0).clone_owned();
    let v = solution.v[k].column(0).clone_owned();
    let ug = theta.adjoint() * (set.g_h[k].adjoint() * &u);
    let noise = cfg.sigma2_irs_mw() * ug.norm_squared() + cfg.sigma2_z_mw() * u.norm_squared();
    let signal = u.dotc(&(&set.h_d[k] * &v)).norm_sqr();
    let interference = match &solution.reflect_stream {
        Some(rs) => {
            let reflected = &set.g_h[k] * (theta * (&set.h_bi * &rs.v0));
            u.dotc(&reflected).norm_sqr()
        }
        None => 0.0,
    };
    SinrTerms { signal, interference, noise }
}

fn reflected_stream_terms(
    solution: &BeamformerSolution,
    set: &ChannelSet,
    cfg: &SystemConfig,
    theta: &CMat,
) -> Option<SinrTerms> {
    let rs = solution.reflect_stream.as_ref()?;
    let ug = theta.adjoint() * (set.g_h[0].adjoint() * &rs.u0);
    let noise = cfg.sigma2_irs_mw() * ug.norm_squared() + cfg.sigma2_z_mw() * rs.u0.norm_squared();
    let reflected = &set.g_h[0] * (theta * (&set.h_bi * &rs.v0));
    let signal = rs.u0.dotc(&reflected).norm_sqr();
    let v1 = solution.v[0].column(0).clone_owned();
    let interference = rs.u0.dotc(&(&set.h_d[0] * &v1)).norm_sqr();
    Some(SinrTerms { signal, interference, noise })
}

fn require_single_stream(solution: &BeamformerSolution) -> Result<()> {
    for (k, v) in solution.v.iter().enumerate() {
        if v.ncols() != 1 {
            return Err(MetricsError::Mismatch(format!(
                "scalar SINR rates need one stream per user, user {k} has {}",
                v.ncols()
            )));
        }
    }
    Ok(())
}

/// Per-user SINR rates for the single-stream methods. The reflected stream
/// (when present) is decoded by user 1 alongside its direct stream, so its
/// rate is added to that user's total.
pub fn sinr_rates(
    solution: &BeamformerSolution,
    set: &ChannelSet,
    cfg: &SystemConfig,
) -> Result<Vec<f64>> {
    check_solution(solution, set, cfg)?;
    require_single_stream(solution)?;
    let theta = solution.theta.concatenated().to_matrix();
    let mut rates = Vec::with_capacity(cfg.k);
    for k in 0..cfg.k {
        let t = direct_stream_terms(solution, set, cfg, &theta, k);
        rates.push(rate_sinr(t.signal, t.interference, t.noise)?);
    }
    if let Some(t) = reflected_stream_terms(solution, set, cfg, &theta) {
        rates[0] += rate_sinr(t.signal, t.interference, t.noise)?;
    }
    Ok(rates)
}

/// Per-user receive SNR in dB: desired power over effective noise power
/// after combining, cross-user interference excluded. For the single-stream
/// methods, user 1 aggregates its direct and reflected streams.
pub fn snr_per_stream(
    solution: &BeamformerSolution,
    set: &ChannelSet,
    cfg: &SystemConfig,
) -> Result<Vec<f64>> {
    check_solution(solution, set, cfg)?;
    match solution.method_tag {
        MethodTag::TllMmse | MethodTag::ZfBaseline => (0..cfg.k)
            .map(|k| {
                let ops = if solution.method_tag == MethodTag::TllMmse {
                    tll_rate_operands(solution, set, cfg, k)?
                } else {
                    full_rate_operands(solution, set, cfg, k)?
                };
                ops.snr_db()
            })
            .collect(),
        MethodTag::NspMtpMrp | MethodTag::SoMmse => {
            require_single_stream(solution)?;
            let theta = solution.theta.concatenated().to_matrix();
            let mut snrs = Vec::with_capacity(cfg.k);
            for k in 0..cfg.k {
                let t = direct_stream_terms(solution, set, cfg, &theta, k);
                let (mut signal, mut noise) = (t.signal, t.noise);
                if k == 0 {
                    if let Some(r) = reflected_stream_terms(solution, set, cfg, &theta) {
                        signal += r.signal;
                        noise += r.noise;
                    }
                }
                if !(noise > 0.0) {
                    return Err(MetricsError::Degenerate(format!(
                        "user {k} has non-positive noise power {noise}"
                    )));
                }
                snrs.push(10.0 * (signal / noise).max(f64::MIN_POSITIVE).log10());
            }
            Ok(snrs)
        }
    }
}

/// Rates and SNRs of one solution on one channel draw.
#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    /// Achievable rate per user, bit/s/Hz. For the single-stream methods the
    /// first entry includes the reflected stream.
    pub per_user_rate: Vec<f64>,
    /// Sum of `per_user_rate`.
    pub sum_rate: f64,
    /// Receive SNR per user, dB.
    pub per_user_snr_db: Vec<f64>,
    /// Seed the channel draw came from, for reproducibility.
    pub trial_seed: u64,
}

/// Score a solution on a channel draw, dispatching on the method family:
/// determinant rates with per-sub-surface operands for TLL-MMSE, determinant
/// rates with the full-aperture cascade for the ZF baseline, and scalar SINR
/// rates for NSP-MTP-MRP and SO-MMSE.
pub fn evaluate(
    solution: &BeamformerSolution,
    set: &ChannelSet,
    cfg: &SystemConfig,
    trial_seed: u64,
) -> Result<RateReport> {
    check_solution(solution, set, cfg)?;
    let per_user_rate = match solution.method_tag {
        MethodTag::TllMmse => (0..cfg.k)
            .map(|k| tll_rate_operands(solution, set, cfg, k)?.rate())
            .collect::<Result<Vec<_>>>()?,
        MethodTag::ZfBaseline => (0..cfg.k)
            .map(|k| full_rate_operands(solution, set, cfg, k)?.rate())
            .collect::<Result<Vec<_>>>()?,
        MethodTag::NspMtpMrp | MethodTag::SoMmse => sinr_rates(solution, set, cfg)?,
    };
    let per_user_snr_db = snr_per_stream(solution, set, cfg)?;
    Ok(RateReport {
        sum_rate: per_user_rate.iter().sum(),
        per_user_rate,
        per_user_snr_db,
        trial_seed,
    })
}

/// Average receive power at user `k` (sum of Frobenius norms of the
/// per-source covariance contributions), in mW. Diagnostic output; the
/// reflected stream of the single-stream methods is not included.
pub fn average_receive_power(
    solution: &BeamformerSolution,
    set: &ChannelSet,
    cfg: &SystemConfig,
    k: usize,
) -> Result<f64> {
    check_solution(solution, set, cfg)?;
    if k >= cfg.k {
        return Err(MetricsError::Mismatch(format!("no user {k}")));
    }
    let u = &solution.u[k];
    let theta = solution.theta.concatenated().to_matrix();
    let uh_hd = u.adjoint() * &set.h_d[k];
    let ug = u.adjoint() * &set.g_h[k] * &theta;
    let cascade = &ug * &set.h_bi;

    let mut power = 0.0;
    for v in &solution.v {
        power += outer(&(&uh_hd * v)).norm();
        power += outer(&(&cascade * v)).norm();
    }
    power += cfg.sigma2_irs_mw() * outer(&ug).norm();
    power += cfg.sigma2_z_mw() * outer(&u.adjoint()).norm();
    Ok(power)
}
