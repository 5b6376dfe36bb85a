//! Degrees-of-freedom analysis: rank upper bounds per regime, empirical
//! verification of the doubling effect, and the orthogonality-condition
//! angle solver.

use crate::beamformers::ReflectionMatrix;
use crate::channels::{mix_seed, realize_channels, ChannelSet, Regime, SystemConfig};
use crate::matcore::{numerical_rank, C64, CMat, CVec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Relative singular-value cutoff for DoF rank decisions. Looser than the
/// kernel default because cascaded channel products amplify roundoff.
pub const DOF_RANK_REL_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum DofError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no visible-region solution")]
    NoVisibleRegionSolution,
    #[error("premise violation: {0}")]
    PremiseViolation(String),
    #[error(transparent)]
    Channel(#[from] crate::channels::ChannelError),
    #[error(transparent)]
    Mat(#[from] crate::matcore::MatError),
}

pub type Result<T> = std::result::Result<T, DofError>;

/// Ĥ_k = G_kᴴ·Θ·H_BI + H_dk — the end-to-end channel seen by one user.
pub fn effective_channel(
    h_d: &CMat,
    g_h: &CMat,
    theta: &ReflectionMatrix,
    h_bi: &CMat,
) -> Result<CMat> {
    if g_h.ncols() != theta.len() || theta.len() != h_bi.nrows() {
        return Err(DofError::DimensionMismatch(format!(
            "reflect cascade: G_H is {}x{}, Θ has {} coefficients, H_BI is {}x{}",
            g_h.nrows(),
            g_h.ncols(),
            theta.len(),
            h_bi.nrows(),
            h_bi.ncols()
        )));
    }
    if h_d.nrows() != g_h.nrows() || h_d.ncols() != h_bi.ncols() {
        return Err(DofError::DimensionMismatch(format!(
            "direct term is {}x{} but cascade gives {}x{}",
            h_d.nrows(),
            h_d.ncols(),
            g_h.nrows(),
            h_bi.ncols()
        )));
    }
    // diag(θ)·H_BI via row scaling — avoids the N×N materialization.
    let coeffs = theta.to_cvec();
    let mut reflected = h_bi.clone();
    for (r, c) in coeffs.iter().enumerate() {
        reflected.row_mut(r).scale_mut(1.0);
        for e in reflected.row_mut(r).iter_mut() {
            *e *= *c;
        }
    }
    Ok(g_h * reflected + h_d)
}

/// All users' effective channels stacked vertically (N_U × M), the matrix
/// whose rank counts the network's parallel streams.
pub fn stacked_effective_channel(set: &ChannelSet, theta: &ReflectionMatrix) -> Result<CMat> {
    let rows: usize = set.h_d.iter().map(|h| h.nrows()).sum();
    let cols = set.h_bi.ncols();
    let mut stacked = CMat::zeros(rows, cols);
    let mut at = 0;
    for k in 0..set.h_d.len() {
        let hk = effective_channel(&set.h_d[k], &set.g_h[k], theta, &set.h_bi)?;
        stacked.rows_mut(at, hk.nrows()).copy_from(&hk);
        at += hk.nrows();
    }
    Ok(stacked)
}

/// Which branch of the rank analysis produced a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundCase {
    #[serde(rename = "LoS")]
    Los,
    #[serde(rename = "full-rank")]
    FullRank,
    #[serde(rename = "rank-deficient")]
    RankDeficient,
    #[serde(rename = "multi-user")]
    MultiUser,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofBound {
    pub upper_bound: usize,
    pub no_irs_bound: usize,
    pub case: BoundCase,
}

/// Rank bound for the stacked network channel given per-user direct ranks
/// I_k, reflect ranks J_k, and the BS→IRS rank: the direct term contributes
/// at most ΣI_k and the reflected cascade at most min(ΣJ_k, rank H_BI);
/// everything is capped by the stacked matrix's own dimensions N_U × M.
pub fn bound_from_ranks(
    m: usize,
    n_u: usize,
    i_ranks: &[usize],
    j_ranks: &[usize],
    rank_h_bi: usize,
) -> (usize, usize) {
    let sum_i: usize = i_ranks.iter().sum();
    let sum_j: usize = j_ranks.iter().sum();
    let dim_cap = n_u.min(m);
    let with_irs = (sum_i + sum_j.min(rank_h_bi)).min(dim_cap);
    let no_irs = sum_i.min(dim_cap);
    (with_irs, no_irs)
}

/// DoF upper bound implied by the configured regime.
pub fn dof_upper_bound(cfg: &SystemConfig) -> Result<DofBound> {
    cfg.validate()?;
    let n_u = cfg.n_u();
    let (i_ranks, j_ranks, rank_h_bi, case): (Vec<usize>, Vec<usize>, usize, BoundCase) =
        match &cfg.regime {
            Regime::LosLos => {
                let case = if cfg.k == 1 {
                    BoundCase::Los
                } else {
                    BoundCase::MultiUser
                };
                (vec![1; cfg.k], vec![1; cfg.k], 1, case)
            }
            Regime::LosRayleigh => (
                vec![1; cfg.k],
                cfg.q.iter().map(|&q| q.min(cfg.n)).collect(),
                cfg.n.min(cfg.m),
                BoundCase::FullRank,
            ),
            Regime::RankDeficient { i, j } => {
                (i.clone(), j.clone(), cfg.n.min(cfg.m), BoundCase::RankDeficient)
            }
        };
    let (upper_bound, no_irs_bound) =
        bound_from_ranks(cfg.m, n_u, &i_ranks, &j_ranks, rank_h_bi);
    Ok(DofBound {
        upper_bound,
        no_irs_bound,
        case,
    })
}

/// Draw a unit-amplitude reflection matrix with i.i.d. uniform phases — the
/// least-favorable well-conditioned Θ for generic-rank checks.
pub fn random_unit_modulus_theta<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ReflectionMatrix {
    let v = CVec::from_fn(n, |_, _| {
        let phase = rng.gen::<f64>() * 2.0 * PI;
        C64::new(phase.cos(), phase.sin())
    });
    ReflectionMatrix::from_vec(&v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublingReport {
    /// Fraction of trials whose stacked rank reached ΣI_k + ΣJ_k.
    pub achieved_fraction: f64,
    /// Trials whose rank exceeded the bound (must be zero).
    pub violations: usize,
    pub bound: usize,
    pub trials: usize,
}

/// Monte-Carlo check that random rank-deficient channels plus a random
/// reflection achieve the doubled rank bound. Each trial draws its own
/// channels and a fresh unit-modulus Θ from an independently seeded
/// generator.
pub fn verify_doubling(cfg: &SystemConfig, trials: usize, master_seed: u64) -> Result<DoublingReport> {
    cfg.validate()?;
    let (i_ranks, j_ranks) = match &cfg.regime {
        Regime::RankDeficient { i, j } => (i.clone(), j.clone()),
        _ => {
            return Err(DofError::PremiseViolation(
                "doubling verification requires the rank-deficient regime".into(),
            ))
        }
    };
    let n_u = cfg.n_u();
    if n_u > cfg.n.min(cfg.m) {
        return Err(DofError::PremiseViolation(format!(
            "doubling needs N_U ≤ min(N, M): N_U = {}, N = {}, M = {}",
            n_u, cfg.n, cfg.m
        )));
    }
    let sum_i: usize = i_ranks.iter().sum();
    let sum_j: usize = j_ranks.iter().sum();
    let bound = sum_i + sum_j;

    let outcomes: Vec<(bool, bool)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(master_seed, t as u64));
            let set = realize_channels(cfg, &mut rng).expect("validated config");
            let theta = random_unit_modulus_theta(cfg.n, &mut rng);
            let stacked = stacked_effective_channel(&set, &theta).expect("validated dims");
            let rank = numerical_rank(&stacked, DOF_RANK_REL_TOL).expect("finite channel");
            (rank == bound, rank > bound)
        })
        .collect();

    let achieved = outcomes.iter().filter(|o| o.0).count();
    let violations = outcomes.iter().filter(|o| o.1).count();
    Ok(DoublingReport {
        achieved_fraction: achieved as f64 / trials.max(1) as f64,
        violations,
        bound,
        trials,
    })
}

/// Report printed by the `dof-check` CLI subcommand: the regime's bound next
/// to empirically achieved ranks (best over `trials` random reflections).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct DofReport {
    pub effective_rank: usize,
    pub upper_bound: usize,
    pub bound_case: BoundCase,
    pub no_irs_rank: usize,
}

pub fn dof_report(cfg: &SystemConfig, trials: usize, master_seed: u64) -> Result<DofReport> {
    let bound = dof_upper_bound(cfg)?;
    let per_trial: Vec<(usize, usize)> = (0..trials.max(1))
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(master_seed, t as u64));
            let set = realize_channels(cfg, &mut rng).expect("validated config");
            let theta = random_unit_modulus_theta(cfg.n, &mut rng);
            let with_irs = stacked_effective_channel(&set, &theta).expect("validated dims");
            let without = stacked_effective_channel(&set, &ReflectionMatrix::zeros(cfg.n))
                .expect("validated dims");
            (
                numerical_rank(&with_irs, DOF_RANK_REL_TOL).expect("finite channel"),
                numerical_rank(&without, DOF_RANK_REL_TOL).expect("finite channel"),
            )
        })
        .collect();
    let effective_rank = per_trial.iter().map(|r| r.0).max().unwrap_or(0);
    let no_irs_rank = per_trial.iter().map(|r| r.1).max().unwrap_or(0);
    if effective_rank > bound.upper_bound {
        return Err(DofError::PremiseViolation(format!(
            "observed rank {} exceeds the derived bound {}",
            effective_rank, bound.upper_bound
        )));
    }
    Ok(DofReport {
        effective_rank,
        upper_bound: bound.upper_bound,
        bound_case: bound.case,
        no_irs_rank,
    })
}

/// Departure angle orthogonal to `theta_bkt_deg` for an M-element array:
/// `θ_Bt = arccos(cos θ_Bkt + i/(M·d/λ))`. Offset index `i = 0` returns the
/// input angle; offsets pushing the cosine outside [−1, 1] have no
/// visible-region solution.
pub fn oc_angle(theta_bkt_deg: f64, i: i64, m: usize, d_over_lambda: f64) -> Result<f64> {
    if !(theta_bkt_deg > 0.0 && theta_bkt_deg < 180.0) {
        return Err(DofError::PremiseViolation(format!(
            "reference angle {theta_bkt_deg}° outside (0°, 180°)"
        )));
    }
    if m < 1 || !(d_over_lambda > 0.0) {
        return Err(DofError::PremiseViolation(format!(
            "array must have M ≥ 1 and positive spacing, got M = {m}, d/λ = {d_over_lambda}"
        )));
    }
    let arg = (theta_bkt_deg * PI / 180.0).cos() + i as f64 / (m as f64 * d_over_lambda);
    if !(-1.0..=1.0).contains(&arg) {
        return Err(DofError::NoVisibleRegionSolution);
    }
    Ok(arg.acos().to_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{
        rank_deficient_channel, rayleigh_channel, steering_vector, ArrayGeometry, PathLossModel,
        Positions,
    };
    use crate::matcore::RANK_REL_TOL;

    #[test]
    fn oc_angle_matches_published_value() {
        let theta = oc_angle(60.0, 1, 16, 0.5).unwrap();
        assert!((theta - 51.3178).abs() < 5e-4, "got {theta}");
        assert!((theta - (0.625f64).acos().to_degrees()).abs() < 1e-12);
    }

    #[test]
    fn oc_angle_zero_offset_is_identity() {
        let theta = oc_angle(60.0, 0, 16, 0.5).unwrap();
        assert!((theta - 60.0).abs() < 1e-12);
    }

    #[test]
    fn oc_angle_out_of_visible_region() {
        let err = oc_angle(60.0, 16, 16, 0.5).unwrap_err();
        assert!(err.to_string().contains("no visible-region solution"));
    }

    #[test]
    fn oc_angle_plugged_into_steering_is_orthogonal() {
        let g = ArrayGeometry::new(16, 0.5).unwrap();
        for i in [-3i64, -1, 1, 2] {
            if let Ok(theta) = oc_angle(60.0, i, 16, 0.5) {
                let h1 = steering_vector(theta, &g).unwrap();
                let h2 = steering_vector(60.0, &g).unwrap();
                assert!(h1.dotc(&h2).norm() <= 1e-10, "offset {i}");
            }
        }
    }

    #[test]
    fn effective_channel_reduces_without_reflection() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h_bi = rayleigh_channel(4, 6, &mut rng);
        let h_d = rayleigh_channel(3, 6, &mut rng);
        let g_h = rayleigh_channel(3, 4, &mut rng);
        let zero = ReflectionMatrix::zeros(4);
        let eff = effective_channel(&h_d, &g_h, &zero, &h_bi).unwrap();
        assert_eq!(eff, h_d);

        let theta = random_unit_modulus_theta(4, &mut rng);
        let eff = effective_channel(&CMat::zeros(3, 6), &g_h, &theta, &h_bi).unwrap();
        let expect = &g_h * theta.to_matrix() * &h_bi;
        assert!((eff - expect).norm() < 1e-12);
    }

    #[test]
    fn effective_channel_checks_dimensions() {
        let h_bi = CMat::zeros(4, 6);
        let h_d = CMat::zeros(3, 6);
        let g_h = CMat::zeros(3, 5); // needs 3x4 to conform
        let theta = ReflectionMatrix::zeros(4);
        assert!(effective_channel(&h_d, &g_h, &theta, &h_bi).is_err());
    }

    #[test]
    fn los_effective_channel_rank_at_most_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bs = ArrayGeometry::new(8, 0.5).unwrap();
        let irs = ArrayGeometry::new(6, 0.5).unwrap();
        let user = ArrayGeometry::new(3, 0.5).unwrap();
        for _ in 0..50 {
            let h_bi = crate::channels::los_channel(100.0, 40.0, &irs, &bs).unwrap();
            let h_d = crate::channels::los_channel(70.0, 60.0, &user, &bs).unwrap();
            let g_h = crate::channels::los_channel(120.0, 80.0, &user, &irs).unwrap();
            let theta = random_unit_modulus_theta(6, &mut rng);
            let eff = effective_channel(&h_d, &g_h, &theta, &h_bi).unwrap();
            assert!(numerical_rank(&eff, DOF_RANK_REL_TOL).unwrap() <= 2);
        }
    }

    #[test]
    fn bound_examples_from_rank_arithmetic() {
        // Single LoS user with enough antennas: direct + reflected = 2.
        assert_eq!(bound_from_ranks(16, 2, &[1], &[1], 1), (2, 1));
        // Four users, unit ranks everywhere: 8 with IRS, 4 without.
        assert_eq!(
            bound_from_ranks(16, 16, &[1; 4], &[1; 4], 16),
            (8, 4)
        );
        // Low-rank direct, full-rank reflect (J_k = Q_k = 4): the stacked
        // dimension cap N_U = 16 binds, giving ΣQ_k versus K without IRS.
        assert_eq!(
            bound_from_ranks(16, 16, &[1; 4], &[4; 4], 16),
            (16, 4)
        );
    }

    fn rank_deficient_config(k: usize, q: usize, i: usize, j: usize, m: usize, n: usize) -> SystemConfig {
        SystemConfig {
            m,
            n,
            k,
            q: vec![q; k],
            l: vec![1; k],
            p_t_dbm: 30.0,
            p_i_dbm: 10.0,
            sigma2_irs_dbm: -40.0,
            sigma2_z_dbm: -40.0,
            positions: Positions {
                bs: [0.0, 0.0, 10.0],
                irs: [80.0, 20.0, 20.0],
                users: (0..k)
                    .map(|u| [100.0 + 5.0 * u as f64, 5.0 - 15.0 * u as f64, 0.0])
                    .collect(),
            },
            regime: Regime::RankDeficient {
                i: vec![i; k],
                j: vec![j; k],
            },
            pathloss: PathLossModel::default(),
            d_over_lambda: 0.5,
        }
    }

    #[test]
    fn upper_bound_by_regime() {
        let cfg = rank_deficient_config(2, 4, 2, 2, 16, 16);
        let b = dof_upper_bound(&cfg).unwrap();
        assert_eq!(b.upper_bound, 8);
        assert_eq!(b.no_irs_bound, 4);
        assert_eq!(b.case, BoundCase::RankDeficient);

        let mut cfg = rank_deficient_config(1, 2, 1, 1, 16, 8);
        cfg.regime = Regime::LosLos;
        let b = dof_upper_bound(&cfg).unwrap();
        assert_eq!(b.upper_bound, 2);
        assert_eq!(b.case, BoundCase::Los);

        let mut cfg = rank_deficient_config(3, 2, 1, 1, 16, 8);
        cfg.regime = Regime::LosLos;
        let b = dof_upper_bound(&cfg).unwrap();
        assert_eq!(b.upper_bound, 4); // K+1
        assert_eq!(b.no_irs_bound, 3);
        assert_eq!(b.case, BoundCase::MultiUser);

        let mut cfg = rank_deficient_config(2, 2, 1, 1, 16, 8);
        cfg.regime = Regime::LosRayleigh;
        let b = dof_upper_bound(&cfg).unwrap();
        // ΣI = 2, reflect term min(ΣJ = 4, min(N, M) = 8) = 4, cap N_U = 4.
        assert_eq!(b.upper_bound, 4);
        assert_eq!(b.case, BoundCase::FullRank);
    }

    #[test]
    fn doubling_achieved_generically() {
        let cfg = rank_deficient_config(2, 2, 1, 1, 16, 16);
        let report = verify_doubling(&cfg, 200, 77).unwrap();
        assert_eq!(report.bound, 4);
        assert_eq!(report.violations, 0);
        assert!(
            report.achieved_fraction >= 0.99,
            "fraction {}",
            report.achieved_fraction
        );
    }

    #[test]
    fn doubling_requires_rank_deficient_regime() {
        let mut cfg = rank_deficient_config(2, 2, 1, 1, 16, 16);
        cfg.regime = Regime::LosLos;
        assert!(matches!(
            verify_doubling(&cfg, 10, 0),
            Err(DofError::PremiseViolation(_))
        ));
    }

    #[test]
    fn doubling_requires_enough_array_elements() {
        // N_U = 8 > min(N, M) = 4: premise fails loudly instead of clamping.
        let cfg = rank_deficient_config(4, 2, 1, 1, 16, 4);
        assert!(matches!(
            verify_doubling(&cfg, 10, 0),
            Err(DofError::PremiseViolation(_))
        ));
    }

    #[test]
    fn zero_theta_collapses_to_direct_rank() {
        let cfg = rank_deficient_config(2, 2, 1, 1, 16, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let set = realize_channels(&cfg, &mut rng).unwrap();
        let stacked = stacked_effective_channel(&set, &ReflectionMatrix::zeros(16)).unwrap();
        assert_eq!(numerical_rank(&stacked, DOF_RANK_REL_TOL).unwrap(), 2);
    }

    #[test]
    fn report_shows_doubling() {
        let cfg = rank_deficient_config(2, 2, 1, 1, 16, 16);
        let report = dof_report(&cfg, 20, 13).unwrap();
        assert_eq!(report.upper_bound, 4);
        assert_eq!(report.effective_rank, 4);
        assert_eq!(report.no_irs_rank, 2);
        assert_eq!(report.bound_case, BoundCase::RankDeficient);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"bound_case\":\"rank-deficient\""));
    }

    #[test]
    fn rank_subadditivity_property() {
        // rank(A+B) ≤ rank(A) + rank(B) over structured random pairs.
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..1000 {
            let r1 = rng.gen_range(1..=3);
            let r2 = rng.gen_range(1..=3);
            let a = rank_deficient_channel(6, 7, r1, &mut rng).unwrap();
            let b = rank_deficient_channel(6, 7, r2, &mut rng).unwrap();
            let rank_sum = numerical_rank(&(&a + &b), RANK_REL_TOL).unwrap();
            assert!(rank_sum <= r1 + r2, "rank {} > {} + {}", rank_sum, r1, r2);
        }
    }

    #[test]
    fn cascade_rank_bounded_by_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let jg = rng.gen_range(1..=2);
            let g_h = rank_deficient_channel(4, 6, jg, &mut rng).unwrap();
            let h_bi = rayleigh_channel(6, 8, &mut rng);
            let theta = random_unit_modulus_theta(6, &mut rng);
            let cascade = &g_h * theta.to_matrix() * &h_bi;
            let bound = jg.min(numerical_rank(&h_bi, RANK_REL_TOL).unwrap());
            assert!(numerical_rank(&cascade, DOF_RANK_REL_TOL).unwrap() <= bound);
        }
    }

    #[test]
    fn single_user_oc_geometry_achieves_rank_two() {
        // Geometry engineered so the BS departs toward the IRS at the
        // orthogonal offset of the user's 60° departure: ranks then add.
        let theta_oc = oc_angle(60.0, 1, 16, 0.5).unwrap();
        let r_user = 120.0;
        let r_irs = 60.0;
        let user_dir = (60.0f64).to_radians();
        let irs_dir = theta_oc.to_radians();
        let cfg = SystemConfig {
            m: 16,
            n: 8,
            k: 1,
            q: vec![2],
            l: vec![1],
            p_t_dbm: 30.0,
            p_i_dbm: 10.0,
            sigma2_irs_dbm: -40.0,
            sigma2_z_dbm: -40.0,
            positions: Positions {
                bs: [0.0, 0.0, 10.0],
                irs: [r_irs * irs_dir.cos(), r_irs * irs_dir.sin(), 20.0],
                users: vec![[r_user * user_dir.cos(), r_user * user_dir.sin(), 0.0]],
            },
            regime: Regime::LosLos,
            pathloss: PathLossModel::default(),
            d_over_lambda: 0.5,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let set = realize_channels(&cfg, &mut rng).unwrap();
        // The OC construction: BS-side row spaces are exactly orthogonal.
        let product = &set.h_bi * set.h_d[0].adjoint();
        assert!(product.norm() <= 1e-10 * set.h_bi.norm() * set.h_d[0].norm());
        for _ in 0..100 {
            let theta = random_unit_modulus_theta(cfg.n, &mut rng);
            let eff = stacked_effective_channel(&set, &theta).unwrap();
            assert_eq!(numerical_rank(&eff, DOF_RANK_REL_TOL).unwrap(), 2);
        }
    }
}
