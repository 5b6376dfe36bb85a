//! Closed-form transmit/reflect/receive beamformer designs.
//!
//! Four methods share the [`BeamformerSolution`] output shape. TLL-MMSE
//! splits the surface into per-user sub-surfaces and runs three closed-form
//! stages (SLNR precoder, SLNR phase pencil, MMSE receiver). NSP-MTP-MRP and
//! SO-MMSE are single-stream LoS designs that reserve one extra reflected
//! stream for user 1. The ZF baseline zero-forces the stacked direct
//! channels. Every method has a companion `*_no_irs` variant that
//! re-optimizes without the reflect path, for like-for-like comparisons.

use crate::channels::{steering_vector, ChannelSet, SystemConfig};
use crate::matcore::{self, C64, CMat, CVec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Diagonal reflection matrix Θ = diag(α_l·e^{jθ_l}), stored as its
/// coefficient vector. An active surface may amplify (|coefficient| > 1) —
/// feasibility is governed by the aggregate reflect-power budget, not by
/// per-element magnitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionMatrix {
    pub coefficients: Vec<(f64, f64)>,
}

impl ReflectionMatrix {
    pub fn from_vec(v: &CVec) -> Self {
        Self {
            coefficients: v.iter().map(|z| (z.re, z.im)).collect(),
        }
    }

    /// The all-zero (switched-off) surface.
    pub fn zeros(n: usize) -> Self {
        Self {
            coefficients: vec![(0.0, 0.0); n],
        }
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn to_cvec(&self) -> CVec {
        CVec::from_iterator(
            self.coefficients.len(),
            self.coefficients.iter().map(|&(re, im)| C64::new(re, im)),
        )
    }

    /// Materialize Θ as the N×N diagonal matrix.
    pub fn to_matrix(&self) -> CMat {
        CMat::from_diagonal(&self.to_cvec())
    }

    /// ‖Θ‖²_F = Σ |coefficient|².
    pub fn frobenius_sq(&self) -> f64 {
        self.coefficients
            .iter()
            .map(|&(re, im)| re * re + im * im)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MethodTag {
    #[serde(rename = "TLL-MMSE")]
    TllMmse,
    #[serde(rename = "NSP-MTP-MRP")]
    NspMtpMrp,
    #[serde(rename = "SO-MMSE")]
    SoMmse,
    #[serde(rename = "ZF-baseline")]
    ZfBaseline,
}

impl MethodTag {
    pub const ALL: [MethodTag; 4] = [
        MethodTag::TllMmse,
        MethodTag::NspMtpMrp,
        MethodTag::SoMmse,
        MethodTag::ZfBaseline,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodTag::TllMmse => "TLL-MMSE",
            MethodTag::NspMtpMrp => "NSP-MTP-MRP",
            MethodTag::SoMmse => "SO-MMSE",
            MethodTag::ZfBaseline => "ZF-baseline",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|m| m.as_str() == s)
    }
}

impl std::fmt::Display for MethodTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether one reflection matrix spans the whole surface or the surface is
/// split into per-user sub-blocks, each with its own coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ThetaConfig {
    #[serde(rename = "full")]
    Full(ReflectionMatrix),
    #[serde(rename = "per_sub_surface")]
    PerSubSurface(Vec<ReflectionMatrix>),
}

impl ThetaConfig {
    /// All coefficients in element order (sub-blocks concatenated).
    pub fn concatenated(&self) -> ReflectionMatrix {
        match self {
            ThetaConfig::Full(r) => r.clone(),
            ThetaConfig::PerSubSurface(blocks) => ReflectionMatrix {
                coefficients: blocks
                    .iter()
                    .flat_map(|b| b.coefficients.iter().copied())
                    .collect(),
            },
        }
    }

    pub fn total_elements(&self) -> usize {
        match self {
            ThetaConfig::Full(r) => r.len(),
            ThetaConfig::PerSubSurface(blocks) => blocks.iter().map(|b| b.len()).sum(),
        }
    }

    /// The same block structure with every coefficient zeroed.
    pub fn switched_off(&self) -> ThetaConfig {
        match self {
            ThetaConfig::Full(r) => ThetaConfig::Full(ReflectionMatrix::zeros(r.len())),
            ThetaConfig::PerSubSurface(blocks) => ThetaConfig::PerSubSurface(
                blocks
                    .iter()
                    .map(|b| ReflectionMatrix::zeros(b.len()))
                    .collect(),
            ),
        }
    }
}

/// The extra stream user 1 receives through the surface in the LoS methods:
/// its transmit direction at the BS and combiner at the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectStream {
    pub v0: CVec,
    pub u0: CVec,
}

/// One complete beamforming design: per-user transmit matrices (power
/// included), per-user receive matrices, the reflection coefficients, and
/// optionally the reflect-only extra stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformerSolution {
    pub method_tag: MethodTag,
    /// Transmit beamformers, M×L_k; ‖V_k‖²_F carries the allocated power.
    pub v: Vec<CMat>,
    /// Receive beamformers, Q_k×L_k.
    pub u: Vec<CMat>,
    pub theta: ThetaConfig,
    pub reflect_stream: Option<ReflectStream>,
}

impl BeamformerSolution {
    pub fn num_users(&self) -> usize {
        self.v.len()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

/// Shorthand for beamformer results.
pub type Result<T> = std::result::Result<T, BeamformerError>;

/// Failures while constructing a beamforming design.
#[derive(Debug, Error)]
pub enum BeamformerError {
    /// The surface cannot be split evenly into per-user sub-surfaces.
    #[error("IRS size {n} is not divisible into {k} sub-surfaces")]
    BlockMismatch { n: usize, k: usize },
    /// The configuration admits no solution for this method.
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    /// The reflect-power budget denominator vanished (dead surface and no
    /// surface noise), so no scaling satisfies the budget.
    #[error("reflect-power budget is undefined: zero denominator")]
    ZeroDenominator,
    /// A power budget must be non-negative and finite.
    #[error("power budget must be non-negative and finite, got {0}")]
    BadBudget(f64),
    /// A direction vector expected to be unit-norm was not.
    #[error("direction vector must be unit-norm, got norm {0}")]
    NotUnit(f64),
    /// The noise covariance must be Hermitian with positive trace.
    #[error("noise covariance must be Hermitian PSD with positive trace")]
    BadNoiseCov,
    /// The channel set does not fit the configuration.
    #[error("channel set does not match the configuration: {0}")]
    Mismatch(String),
    /// Propagated channel-model failure.
    #[error(transparent)]
    Channel(#[from] crate::channels::ChannelError),
    /// Propagated linear-algebra failure.
    #[error(transparent)]
    Mat(#[from] matcore::MatError),
}

fn check_set(set: &ChannelSet, cfg: &SystemConfig) -> Result<()> {
    if set.h_bi.nrows() != cfg.n || set.h_bi.ncols() != cfg.m {
        return Err(BeamformerError::Mismatch(format!(
            "BS-IRS channel is {}x{}, expected {}x{}",
            set.h_bi.nrows(),
            set.h_bi.ncols(),
            cfg.n,
            cfg.m
        )));
    }
    if set.h_d.len() != cfg.k || set.g_h.len() != cfg.k {
        return Err(BeamformerError::Mismatch(format!(
            "channel set covers {} users, configuration has {}",
            set.h_d.len(),
            cfg.k
        )));
    }
    for k in 0..cfg.k {
        if set.h_d[k].nrows() != cfg.q[k] || set.h_d[k].ncols() != cfg.m {
            return Err(BeamformerError::Mismatch(format!(
                "direct channel {k} is {}x{}, expected {}x{}",
                set.h_d[k].nrows(),
                set.h_d[k].ncols(),
                cfg.q[k],
                cfg.m
            )));
        }
        if set.g_h[k].nrows() != cfg.q[k] || set.g_h[k].ncols() != cfg.n {
            return Err(BeamformerError::Mismatch(format!(
                "reflect channel {k} is {}x{}, expected {}x{}",
                set.g_h[k].nrows(),
                set.g_h[k].ncols(),
                cfg.q[k],
                cfg.n
            )));
        }
    }
    Ok(())
}

/// Orthogonal projector onto the null space of `t`: `P = I − Σ wᵢwᵢᴴ` over
/// the eigenvectors of the Hermitian gram `tᴴt` whose eigenvalues clear the
/// relative rank cutoff. Built from the gram's eigendecomposition rather
/// than a pseudo-inverse because the constraint matrices here are often
/// exact rank-one outer products, where the complex SVD loses accuracy. A
/// constraint matrix with no rows projects onto the whole space.
pub fn null_space_projector(t: &CMat) -> Result<CMat> {
    let dim = t.ncols();
    if t.nrows() == 0 {
        return Ok(matcore::eye(dim));
    }
    if !matcore::is_finite(t) {
        return Err(BeamformerError::Mismatch(
            "constraint matrix has non-finite entries".into(),
        ));
    }
    let gram = t.adjoint() * t;
    let (values, vectors) = matcore::hermitian_eig_desc(&gram)?;
    let top = values.first().copied().unwrap_or(0.0);
    let mut p = matcore::eye(dim);
    if !(top > 0.0) {
        return Ok(p);
    }
    let cutoff = matcore::RANK_REL_TOL * top;
    for (lambda, w) in values.iter().zip(vectors.iter()) {
        if *lambda > cutoff {
            p -= w * w.adjoint();
        }
    }
    Ok(p)
}

/// Stack matrices on top of each other. All parts must have `cols` columns;
/// an empty list yields a 0×cols matrix.
fn stack_rows(cols: usize, parts: &[&CMat]) -> Result<CMat> {
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut offset = 0;
    for p in parts {
        if p.ncols() != cols {
            return Err(BeamformerError::Mismatch(format!(
                "cannot stack a {}-column block into a {cols}-column matrix",
                p.ncols()
            )));
        }
        out.rows_mut(offset, p.nrows()).copy_from(*p);
        offset += p.nrows();
    }
    Ok(out)
}

/// Rayleigh–Ritz step shared by the null-space methods: maximize
/// `‖objective · x‖` over unit `x` confined to the null space of
/// `constraints`. Returns the unit-norm maximizer; errors when the
/// constraints leave no null space at all.
fn null_projected_max(constraints: &CMat, objective: &CMat) -> Result<CVec> {
    let p = null_space_projector(constraints)?;
    if p.trace().re < 0.5 {
        return Err(BeamformerError::Infeasible(
            "complementary channels span the whole space, leaving no null space".into(),
        ));
    }
    let reached = objective * &p;
    let gram = reached.adjoint() * &reached;
    let alpha = matcore::hermitian_top_eigpair(&gram)?.vector;
    let mut y = &p * alpha;
    let mut norm = y.norm();
    if norm <= 1e-9 {
        // The objective is blind to the null space; fall back to the
        // strongest projector column so the output stays deterministic.
        let best = (0..p.ncols())
            .max_by(|&a, &b| {
                p.column(a)
                    .norm()
                    .partial_cmp(&p.column(b).norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("projector has columns");
        y = p.column(best).into_owned();
        norm = y.norm();
        if norm <= 1e-9 {
            return Err(BeamformerError::Infeasible(
                "null-space projector is numerically zero".into(),
            ));
        }
    }
    y /= C64::new(norm, 0.0);
    matcore::fix_phase(&mut y);
    Ok(y)
}

/// Scale a unit phase-direction to meet the reflect-power budget with
/// equality: `μ̂ = √(P_Ik / (θ̂ᴴ(A_θᴴA_θ + σ²I)θ̂))`, coefficients `μ̂·θ̂`.
/// `a_theta` is the (diagonal) matrix of the signal image on the surface.
pub fn tll_phase_budget(
    theta_hat: &CVec,
    a_theta: &CMat,
    p_ik: f64,
    sigma2_irs: f64,
) -> Result<ReflectionMatrix> {
    if a_theta.ncols() != theta_hat.len() {
        return Err(BeamformerError::Mismatch(format!(
            "signal image acts on {} elements but the direction has {}",
            a_theta.ncols(),
            theta_hat.len()
        )));
    }
    if !(p_ik >= 0.0) || !p_ik.is_finite() {
        return Err(BeamformerError::BadBudget(p_ik));
    }
    if !(sigma2_irs >= 0.0) || !sigma2_irs.is_finite() {
        return Err(BeamformerError::BadBudget(sigma2_irs));
    }
    let norm = theta_hat.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(BeamformerError::NotUnit(norm));
    }
    let denom = (a_theta * theta_hat).norm_squared() + sigma2_irs;
    if !(denom > 0.0) {
        return Err(BeamformerError::ZeroDenominator);
    }
    let mu = (p_ik / denom).sqrt();
    Ok(ReflectionMatrix::from_vec(&(theta_hat * C64::new(mu, 0.0))))
}

/// Closed-form MMSE combiner: with `R = Σ s·sᴴ + Σ i·iᴴ + noise_cov` over
/// the per-path signal and interference matrices, returns
/// `U = R⁻¹ · (Σ signal paths)`. The system matrix is diagonally loaded per
/// the shared conditioning policy when near-singular.
pub fn mmse_receiver(
    signal_paths: &[CMat],
    interference_paths: &[CMat],
    noise_cov: &CMat,
) -> Result<CMat> {
    let first = signal_paths
        .first()
        .ok_or_else(|| BeamformerError::Mismatch("no signal paths given".into()))?;
    let (rows, cols) = (first.nrows(), first.ncols());
    if noise_cov.nrows() != rows || noise_cov.ncols() != rows {
        return Err(BeamformerError::Mismatch(format!(
            "noise covariance is {}x{}, expected {rows}x{rows}",
            noise_cov.nrows(),
            noise_cov.ncols()
        )));
    }
    if matcore::hermitian_asymmetry(noise_cov) > matcore::HERMITIAN_REL_TOL * noise_cov.norm().max(1.0)
        || !(noise_cov.trace().re > 0.0)
    {
        return Err(BeamformerError::BadNoiseCov);
    }
    let mut system = matcore::hermitianize(noise_cov);
    let mut desired = CMat::zeros(rows, cols);
    for s in signal_paths {
        if s.nrows() != rows || s.ncols() != cols {
            return Err(BeamformerError::Mismatch(
                "signal paths disagree in shape".into(),
            ));
        }
        system += s * s.adjoint();
        desired += s;
    }
    for i in interference_paths {
        if i.nrows() != rows {
            return Err(BeamformerError::Mismatch(
                "interference path row count disagrees with the signal paths".into(),
            ));
        }
        system += i * i.adjoint();
    }
    let (u, _loading) = matcore::solve_hermitian(&system, &desired)?;
    if !matcore::is_finite(&u) {
        return Err(BeamformerError::Infeasible(
            "MMSE combiner came out non-finite".into(),
        ));
    }
    Ok(u)
}

/// Top `count` generalized eigenvectors of the Hermitian pencil `(a, d)` as
/// unit-norm columns. Delegates to the tie-broken single-vector routine when
/// one column is requested.
fn generalized_top_cols(a: &CMat, d: &CMat, count: usize) -> Result<CMat> {
    let dim = a.nrows();
    if count == 0 || count > dim {
        return Err(BeamformerError::Mismatch(format!(
            "cannot take {count} eigenvectors from a {dim}-dimensional pencil"
        )));
    }
    if count == 1 {
        let pair = matcore::generalized_top_eigvec(a, d)?;
        return Ok(CMat::from_columns(&[pair.vector]));
    }
    let w = matcore::matrix_inv_sqrt(d)?;
    let m = matcore::hermitianize(&(&w * a * &w));
    let (_, vectors) = matcore::hermitian_eig_desc(&m)?;
    let mut out = CMat::zeros(dim, count);
    for (j, x) in vectors.iter().take(count).enumerate() {
        let mut col = &w * x;
        let norm = col.norm();
        if !(norm > 0.0) {
            return Err(BeamformerError::Infeasible(
                "degenerate pencil produced a zero eigenvector".into(),
            ));
        }
        col /= C64::new(norm, 0.0);
        matcore::fix_phase(&mut col);
        out.set_column(j, &col);
    }
    Ok(out)
}

/// Diagonal matrix whose entries are the per-element root-total-power of the
/// signal image across streams; used for budget accounting when more than
/// one stream passes over a surface.
fn power_diag(image: &CMat) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(
        image.nrows(),
        (0..image.nrows()).map(|i| {
            C64::new(
                image.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
                0.0,
            )
        }),
    ))
}

fn scale_to_power(mut v: CMat, power: f64) -> Result<CMat> {
    let norm = v.norm();
    if !(norm > 0.0) {
        return Err(BeamformerError::Infeasible(
            "transmit beam is numerically zero and cannot carry power".into(),
        ));
    }
    v *= C64::new(power.sqrt() / norm, 0.0);
    Ok(v)
}

/// Per-user SLNR transmit stage of TLL-MMSE (with or without the surface
/// Gram terms), returning power-bearing M×L_k matrices.
fn slnr_precoders(
    set: &ChannelSet,
    cfg: &SystemConfig,
    include_reflect: bool,
) -> Result<Vec<CMat>> {
    let block = cfg.n / cfg.k;
    let p_tk = cfg.p_t_mw() / cfg.k as f64;
    let c_noise = if include_reflect {
        cfg.sigma2_irs_mw() + cfg.sigma2_z_mw()
    } else {
        cfg.sigma2_z_mw()
    };
    let grams: Vec<CMat> = (0..cfg.k)
        .map(|j| {
            let mut g = set.h_d[j].adjoint() * &set.h_d[j];
            if include_reflect {
                let rows = set.h_bi.rows(j * block, block).clone_owned();
                g += rows.adjoint() * rows;
            }
            g
        })
        .collect();
    let mut v = Vec::with_capacity(cfg.k);
    for k in 0..cfg.k {
        let a = grams[k].clone();
        let mut d = CMat::zeros(cfg.m, cfg.m);
        for (j, g) in grams.iter().enumerate() {
            if j != k {
                d += g;
            }
        }
        let load = C64::new(c_noise / p_tk, 0.0);
        for i in 0..cfg.m {
            d[(i, i)] += load;
        }
        let dirs = generalized_top_cols(&a, &d, cfg.l[k])?;
        v.push(scale_to_power(dirs, p_tk)?);
    }
    Ok(v)
}

/// The per-sub-surface cascades `G_jkᴴ·Θ_j` and `G_jkᴴ·Θ_j·H_BIj` needed by
/// both the TLL receiver and its evaluation.
fn tll_mmse_receivers(
    set: &ChannelSet,
    cfg: &SystemConfig,
    v: &[CMat],
    blocks: &[ReflectionMatrix],
) -> Result<Vec<CMat>> {
    let block = cfg.n / cfg.k;
    let sigma2_irs = cfg.sigma2_irs_mw();
    let sigma2_z = cfg.sigma2_z_mw();
    let mut u = Vec::with_capacity(cfg.k);
    for k in 0..cfg.k {
        let mut signal = vec![&set.h_d[k] * &v[k]];
        let mut interference = Vec::new();
        for (i, vi) in v.iter().enumerate() {
            if i != k {
                interference.push(&set.h_d[k] * vi);
            }
        }
        let mut noise = matcore::eye(cfg.q[k]) * C64::new(sigma2_z, 0.0);
        for (j, refl) in blocks.iter().enumerate() {
            let g_theta = set.g_h[k].columns(j * block, block).clone_owned() * refl.to_matrix();
            let cascade = &g_theta * set.h_bi.rows(j * block, block).clone_owned();
            signal.push(&cascade * &v[k]);
            for (i, vi) in v.iter().enumerate() {
                if i != k {
                    interference.push(&cascade * vi);
                }
            }
            noise += (&g_theta * g_theta.adjoint()) * C64::new(sigma2_irs, 0.0);
        }
        u.push(mmse_receiver(&signal, &interference, &noise)?);
    }
    Ok(u)
}

/// TLL-MMSE: the surface is split into K equal sub-surfaces, sub-surface k
/// serving user k. Three closed-form stages run once each: an SLNR transmit
/// precoder per user, an SLNR phase pencil per sub-surface (scaled to its
/// power share with equality), and a full MMSE receiver per user.
pub fn tll_mmse(set: &ChannelSet, cfg: &SystemConfig) -> Result<BeamformerSolution> {
    check_set(set, cfg)?;
    if cfg.n % cfg.k != 0 {
        return Err(BeamformerError::BlockMismatch { n: cfg.n, k: cfg.k });
    }
    let block = cfg.n / cfg.k;
    let p_ik = cfg.p_i_mw() / cfg.k as f64;
    let sigma2_irs = cfg.sigma2_irs_mw();
    let v = slnr_precoders(set, cfg, true)?;

    let mut blocks = Vec::with_capacity(cfg.k);
    for k in 0..cfg.k {
        let h_bik = set.h_bi.rows(k * block, block).clone_owned();
        let image = &h_bik * &v[k];
        // Phases are designed on the lead stream; the budget below accounts
        // for every stream crossing this sub-surface.
        let a_theta = CMat::from_diagonal(&image.column(0).clone_owned());
        let g_own = set.g_h[k].columns(k * block, block).clone_owned();
        let numerator = a_theta.adjoint() * (g_own.adjoint() * &g_own) * &a_theta;
        let mut denominator = CMat::zeros(block, block);
        for j in 0..cfg.k {
            let g_to_j = set.g_h[j].columns(k * block, block).clone_owned();
            let gg = g_to_j.adjoint() * &g_to_j;
            if j != k {
                denominator += a_theta.adjoint() * &gg * &a_theta;
            }
            denominator += gg * C64::new(sigma2_irs, 0.0);
        }
        let ridge = C64::new(1e-12 * denominator.trace().re, 0.0);
        for i in 0..block {
            denominator[(i, i)] += ridge;
        }
        let theta_hat = matcore::generalized_top_eigvec(&numerator, &denominator)?.vector;
        blocks.push(tll_phase_budget(
            &theta_hat,
            &power_diag(&image),
            p_ik,
            sigma2_irs,
        )?);
    }

    let u = tll_mmse_receivers(set, cfg, &v, &blocks)?;
    Ok(BeamformerSolution {
        method_tag: MethodTag::TllMmse,
        v,
        u,
        theta: ThetaConfig::PerSubSurface(blocks),
        reflect_stream: None,
    })
}

/// TLL-MMSE re-optimized without the surface: the SLNR stage drops the
/// surface Grams and noise, the phase stage is skipped (all coefficients
/// zero), and the MMSE receiver sees only the direct paths.
pub fn tll_mmse_no_irs(set: &ChannelSet, cfg: &SystemConfig) -> Result<BeamformerSolution> {
    check_set(set, cfg)?;
    if cfg.n % cfg.k != 0 {
        return Err(BeamformerError::BlockMismatch { n: cfg.n, k: cfg.k });
    }
    let block = cfg.n / cfg.k;
    let v = slnr_precoders(set, cfg, false)?;
    let blocks = vec![ReflectionMatrix::zeros(block); cfg.k];
    let u = tll_mmse_receivers(set, cfg, &v, &blocks)?;
    Ok(BeamformerSolution {
        method_tag: MethodTag::TllMmse,
        v,
        u,
        theta: ThetaConfig::PerSubSurface(blocks),
        reflect_stream: None,
    })
}

fn column_solution(dir: CVec) -> CMat {
    CMat::from_columns(&[dir])
}

/// NSP-MTP-MRP: every stream is confined to the null space of its
/// complementary channels (maximizing transmit power there), receive
/// combiners null the reflected path while maximizing receive power, and the
/// surface phase-aligns the reflected stream for user 1 under the full
/// reflect budget.
pub fn nsp_mtp_mrp(set: &ChannelSet, cfg: &SystemConfig) -> Result<BeamformerSolution> {
    check_set(set, cfg)?;
    let share = cfg.p_t_mw() / (cfg.k + 1) as f64;

    let mut v = Vec::with_capacity(cfg.k);
    for k in 0..cfg.k {
        let mut parts: Vec<&CMat> = vec![&set.h_bi];
        for (j, h) in set.h_d.iter().enumerate() {
            if j != k {
                parts.push(h);
            }
        }
        let t = stack_rows(cfg.m, &parts)?;
        let dir = null_projected_max(&t, &set.h_d[k])?;
        v.push(scale_to_power(column_solution(dir), share)?);
    }
    let t0 = {
        let parts: Vec<&CMat> = set.h_d.iter().collect();
        stack_rows(cfg.m, &parts)?
    };
    let v0 = {
        let dir = null_projected_max(&t0, &set.h_bi)?;
        dir * C64::new(share.sqrt(), 0.0)
    };

    let mut u = Vec::with_capacity(cfg.k);
    for k in 0..cfg.k {
        let constraints = set.g_h[k].adjoint();
        let objective = set.h_d[k].adjoint();
        u.push(column_solution(null_projected_max(&constraints, &objective)?));
    }
    let u0 = {
        let constraints = set.h_d[0].adjoint();
        let objective = set.g_h[0].adjoint();
        null_projected_max(&constraints, &objective)?
    };

    let image = &set.h_bi * &v0;
    let a_theta = CMat::from_diagonal(&image);
    let aligned = a_theta.adjoint() * (set.g_h[0].adjoint() * &u0);
    let norm = aligned.norm();
    if !(norm > 0.0) {
        return Err(BeamformerError::Infeasible(
            "reflect cascade toward user 1 is zero; phase alignment is undefined".into(),
        ));
    }
    let theta_hat = aligned / C64::new(norm, 0.0);
    let refl = tll_phase_budget(&theta_hat, &a_theta, cfg.p_i_mw(), cfg.sigma2_irs_mw())?;

    Ok(BeamformerSolution {
        method_tag: MethodTag::NspMtpMrp,
        v,
        u,
        theta: ThetaConfig::Full(refl),
        reflect_stream: Some(ReflectStream { v0, u0 }),
    })
}

/// NSP-MTP-MRP without the surface: the reflected stream is dropped, the
/// transmit null spaces cover only the other users' direct channels, and the
/// combiner becomes the maximum-ratio (top left-singular) direction.
pub fn nsp_mtp_mrp_no_irs(set: &ChannelSet, cfg: &SystemConfig) -> Result<BeamformerSolution> {
    check_set(set, cfg)?;
    let share = cfg.p_t_mw() / cfg.k as f64;
    let mut v = Vec::with_capacity(cfg.k);
    let mut u = Vec::with_capacity(cfg.k);
    for k in 0..cfg.k {
        let mut parts: Vec<&CMat> = Vec::new();
        for (j, h) in set.h_d.iter().enumerate() {
            if j != k {
                parts.push(h);
            }
        }
        let t = stack_rows(cfg.m, &parts)?;
        let dir = null_projected_max(&t, &set.h_d[k])?;
        v.push(scale_to_power(column_solution(dir), share)?);
        u.push(column_solution(top_left_singular(&set.h_d[k])?));
    }
    Ok(BeamformerSolution {
        method_tag: MethodTag::NspMtpMrp,
        v,
        u,
        theta: ThetaConfig::Full(ReflectionMatrix::zeros(cfg.n)),
        reflect_stream: None,
    })
}

fn top_left_singular(m: &CMat) -> Result<CVec> {
    let gram = m * m.adjoint();
    let pair = matcore::hermitian_top_eigpair(&gram)?;
    Ok(pair.vector)
}

/// SO-MMSE: the reflected stream departs on the BS→IRS steering direction,
/// user streams are nulled sequentially against the surface channel and the
/// previously served users, the surface phase is the top eigenvector of the
/// reflected-power quadratic, and all combiners are closed-form MMSE.
pub fn so_mmse(set: &ChannelSet, cfg: &SystemConfig) -> Result<BeamformerSolution> {
    check_set(set, cfg)?;
    let meta = set.los_meta.as_ref().ok_or_else(|| {
        BeamformerError::Infeasible(
            "the steering-based reflect beam needs line-of-sight geometry".into(),
        )
    })?;
    let share = cfg.p_t_mw() / (cfg.k + 1) as f64;
    let sigma2_irs = cfg.sigma2_irs_mw();
    let sigma2_z = cfg.sigma2_z_mw();

    let v0 = steering_vector(meta.bs_irs_departure_deg, &cfg.bs_geometry())?
        * C64::new(share.sqrt(), 0.0);
    let mut v = Vec::with_capacity(cfg.k);
    for k in 0..cfg.k {
        let mut parts: Vec<&CMat> = vec![&set.h_bi];
        for h in set.h_d.iter().take(k) {
            parts.push(h);
        }
        let t = stack_rows(cfg.m, &parts)?;
        let dir = null_projected_max(&t, &set.h_d[k])?;
        v.push(scale_to_power(column_solution(dir), share)?);
    }

    let image = &set.h_bi * &v0;
    let a_theta = CMat::from_diagonal(&image);
    let quad = a_theta.adjoint() * (set.g_h[0].adjoint() * &set.g_h[0]) * &a_theta;
    let theta_hat = matcore::hermitian_top_eigpair(&quad)?.vector;
    let refl = tll_phase_budget(&theta_hat, &a_theta, cfg.p_i_mw(), sigma2_irs)?;
    let theta_mat = refl.to_matrix();
    let reflected = &set.h_bi * &v0;

    let mut u = Vec::with_capacity(cfg.k);
    for k in 0..cfg.k {
        let g_theta = &set.g_h[k] * &theta_mat;
        let noise = matcore::eye(cfg.q[k]) * C64::new(sigma2_z, 0.0)
            + (&g_theta * g_theta.adjoint()) * C64::new(sigma2_irs, 0.0);
        let signal = &set.h_d[k] * &v[k];
        let cross = column_solution(&g_theta * &reflected);
        u.push(mmse_receiver(&[signal], &[cross], &noise)?);
    }
    let u0 = {
        let g_theta = &set.g_h[0] * &theta_mat;
        let noise = matcore::eye(cfg.q[0]) * C64::new(sigma2_z, 0.0)
            + (&g_theta * g_theta.adjoint()) * C64::new(sigma2_irs, 0.0);
        let signal = column_solution(&g_theta * &reflected);
        let cross = &set.h_d[0] * &v[0];
        mmse_receiver(&[signal], &[cross], &noise)?
            .column(0)
            .clone_owned()
    };

    Ok(BeamformerSolution {
        method_tag: MethodTag::SoMmse,
        v,
        u,
        theta: ThetaConfig::Full(refl),
        reflect_stream: Some(ReflectStream { v0, u0 }),
    })
}

/// SO-MMSE without the surface: sequential nulling against previously served
/// users only, MMSE combiners with the reflect terms dropped.
pub fn so_mmse_no_irs(set: &ChannelSet, cfg: &SystemConfig) -> Result<BeamformerSolution> {
    check_set(set, cfg)?;
    let share = cfg.p_t_mw() / cfg.k as f64;
    let sigma2_z = cfg.sigma2_z_mw();
    let mut v = Vec::with_capacity(cfg.k);
    let mut u = Vec::with_capacity(cfg.k);
    for k in 0..cfg.k {
        let parts: Vec<&CMat> = set.h_d.iter().take(k).collect();
        let t = stack_rows(cfg.m, &parts)?;
        let dir = null_projected_max(&t, &set.h_d[k])?;
        let vk = scale_to_power(column_solution(dir), share)?;
        let signal = &set.h_d[k] * &vk;
        let noise = matcore::eye(cfg.q[k]) * C64::new(sigma2_z, 0.0);
        u.push(mmse_receiver(&[signal], &[], &noise)?);
        v.push(vk);
    }
    Ok(BeamformerSolution {
        method_tag: MethodTag::SoMmse,
        v,
        u,
        theta: ThetaConfig::Full(ReflectionMatrix::zeros(cfg.n)),
        reflect_stream: None,
    })
}

/// Zero-forcing baseline: per-user combiners are the dominant left-singular
/// directions of the direct channels, the transmitter inverts the stacked
/// effective channel (pseudo-inverse when rank-deficient), and the surface
/// phase-aligns toward user 1's lead stream with all streams counted in the
/// budget. A dead reflect cascade degrades gracefully to a switched-off
/// surface.
pub fn zf_baseline(set: &ChannelSet, cfg: &SystemConfig) -> Result<BeamformerSolution> {
    zf_impl(set, cfg, true)
}

/// Zero-forcing baseline with the surface switched off.
pub fn zf_baseline_no_irs(set: &ChannelSet, cfg: &SystemConfig) -> Result<BeamformerSolution> {
    zf_impl(set, cfg, false)
}

fn zf_impl(set: &ChannelSet, cfg: &SystemConfig, with_irs: bool) -> Result<BeamformerSolution> {
    check_set(set, cfg)?;
    let total_streams: usize = cfg.l.iter().sum();
    if total_streams > cfg.m {
        return Err(BeamformerError::Infeasible(format!(
            "{total_streams} streams cannot be zero-forced by {} transmit antennas",
            cfg.m
        )));
    }
    let p_tk = cfg.p_t_mw() / cfg.k as f64;

    let mut u = Vec::with_capacity(cfg.k);
    for k in 0..cfg.k {
        let streams = cfg.l[k];
        if streams > cfg.q[k] {
            return Err(BeamformerError::Infeasible(format!(
                "user {k} cannot combine {streams} streams with {} antennas",
                cfg.q[k]
            )));
        }
        let gram = &set.h_d[k] * set.h_d[k].adjoint();
        let (_, vectors) = matcore::hermitian_eig_desc(&gram)?;
        let cols: Vec<CVec> = vectors.into_iter().take(streams).collect();
        u.push(CMat::from_columns(&cols));
    }

    let effective = {
        let blocks: Vec<CMat> = (0..cfg.k).map(|k| u[k].adjoint() * &set.h_d[k]).collect();
        let refs: Vec<&CMat> = blocks.iter().collect();
        stack_rows(cfg.m, &refs)?
    };
    let inverse = matcore::pinv(&effective, matcore::PINV_REL_TOL)?;
    let mut v = Vec::with_capacity(cfg.k);
    let mut offset = 0;
    for k in 0..cfg.k {
        let cols = inverse.columns(offset, cfg.l[k]).clone_owned();
        v.push(scale_to_power(cols, p_tk)?);
        offset += cfg.l[k];
    }

    let theta = if with_irs {
        let image_all = {
            let blocks: Vec<CMat> = v.iter().map(|vk| &set.h_bi * vk).collect();
            let mut all = CMat::zeros(cfg.n, total_streams);
            let mut c = 0;
            for b in &blocks {
                all.columns_mut(c, b.ncols()).copy_from(b);
                c += b.ncols();
            }
            all
        };
        let lead_image = (&set.h_bi * &v[0]).column(0).clone_owned();
        let a_lead = CMat::from_diagonal(&lead_image);
        let aligned = a_lead.adjoint() * (set.g_h[0].adjoint() * u[0].column(0).clone_owned());
        let norm = aligned.norm();
        if norm > 0.0 {
            let theta_hat = aligned / C64::new(norm, 0.0);
            ThetaConfig::Full(tll_phase_budget(
                &theta_hat,
                &power_diag(&image_all),
                cfg.p_i_mw(),
                cfg.sigma2_irs_mw(),
            )?)
        } else {
            ThetaConfig::Full(ReflectionMatrix::zeros(cfg.n))
        }
    } else {
        ThetaConfig::Full(ReflectionMatrix::zeros(cfg.n))
    };

    Ok(BeamformerSolution {
        method_tag: MethodTag::ZfBaseline,
        v,
        u,
        theta,
        reflect_stream: None,
    })
}

/// Dispatch a method by tag, with or without the surface. The no-IRS arm
/// re-optimizes each method rather than just zeroing the coefficients.
pub fn solve(
    method: MethodTag,
    set: &ChannelSet,
    cfg: &SystemConfig,
    with_irs: bool,
) -> Result<BeamformerSolution> {
    match (method, with_irs) {
        (MethodTag::TllMmse, true) => tll_mmse(set, cfg),
        (MethodTag::TllMmse, false) => tll_mmse_no_irs(set, cfg),
        (MethodTag::NspMtpMrp, true) => nsp_mtp_mrp(set, cfg),
        (MethodTag::NspMtpMrp, false) => nsp_mtp_mrp_no_irs(set, cfg),
        (MethodTag::SoMmse, true) => so_mmse(set, cfg),
        (MethodTag::SoMmse, false) => so_mmse_no_irs(set, cfg),
        (MethodTag::ZfBaseline, true) => zf_baseline(set, cfg),
        (MethodTag::ZfBaseline, false) => zf_baseline_no_irs(set, cfg),
    }
}

/// Reflect power a solution actually spends, under each method's own
/// accounting: per-sub-surface designs count their own user's streams per
/// sub-surface, the LoS methods count the dedicated reflected stream, and
/// the ZF baseline counts every stream over the full surface. The surface
/// noise term `‖Θ‖²_F σ²` is included throughout.
pub fn realized_reflect_power(
    solution: &BeamformerSolution,
    set: &ChannelSet,
    cfg: &SystemConfig,
) -> Result<f64> {
    check_set(set, cfg)?;
    let sigma2_irs = cfg.sigma2_irs_mw();
    match &solution.theta {
        ThetaConfig::PerSubSurface(blocks) => {
            if blocks.len() != solution.v.len() {
                return Err(BeamformerError::Mismatch(format!(
                    "{} sub-surfaces serve {} users",
                    blocks.len(),
                    solution.v.len()
                )));
            }
            let mut power = 0.0;
            let mut offset = 0;
            for (k, refl) in blocks.iter().enumerate() {
                let width = refl.len();
                let image = set.h_bi.rows(offset, width).clone_owned() * &solution.v[k];
                power += (refl.to_matrix() * image).norm_squared()
                    + refl.frobenius_sq() * sigma2_irs;
                offset += width;
            }
            Ok(power)
        }
        ThetaConfig::Full(refl) => {
            let theta = refl.to_matrix();
            let through: f64 = match &solution.reflect_stream {
                Some(rs) => (&theta * (&set.h_bi * &rs.v0)).norm_squared(),
                None => solution
                    .v
                    .iter()
                    .map(|vk| (&theta * (&set.h_bi * vk)).norm_squared())
                    .sum(),
            };
            Ok(through + refl.frobenius_sq() * sigma2_irs)
        }
    }
}
