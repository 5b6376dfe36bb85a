//! End-to-end acceptance checks, one per shipped claim. Each test prints a
//! single `[PASS]` line with the measured quantity and its runtime budget;
//! a failure panics with the offending numbers.

use irs_lab::beamformers::{self, mmse_receiver, MethodTag, ReflectionMatrix};
use irs_lab::channels::{
    dbm_to_mw, mix_seed, realize_channels, ChannelSet, PathLossModel, Positions, Regime,
    SystemConfig,
};
use irs_lab::dof::{
    dof_report, oc_angle, random_unit_modulus_theta, stacked_effective_channel, verify_doubling,
    DOF_RANK_REL_TOL,
};
use irs_lab::harness::{render_csv, run_sweep, SweepSpec, SweepVariable};
use irs_lab::matcore::{generalized_top_eigvec, numerical_rank, C64, CMat, CVec};
use irs_lab::metrics::{self, rate_det};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn pass(label: &str, detail: &str, t0: Instant, budget_s: f64) {
    let dt = t0.elapsed().as_secs_f64();
    assert!(
        dt < budget_s,
        "[FAIL] {label}: runtime {dt:.2}s exceeds {budget_s:.0}s"
    );
    println!("[PASS] {label}: {detail} ({dt:.2}s < {budget_s:.0}s)");
}

/// BS and surface facing each other across the user cluster; users sit on a
/// line beyond both. K positions fan out in y so direct channels stay
/// distinguishable.
fn facing_positions(k: usize) -> Positions {
    let spread: Vec<f64> = match k {
        1 => vec![60.0],
        2 => vec![-60.0, 60.0],
        3 => vec![-60.0, 35.0, 60.0],
        4 => vec![-60.0, -35.0, 35.0, 60.0],
        // Interpolations dodge the BS and surface heights (y = ±20): a link
        // along the array axis has no steerable departure angle.
        _ => (0..k).map(|i| -62.0 + 124.0 * i as f64 / (k - 1) as f64).collect(),
    };
    Positions {
        bs: [100.0, 20.0, 0.0],
        irs: [100.0, -20.0, 0.0],
        users: spread.iter().map(|&y| [100.0 + 40.0, y, 0.0]).collect(),
    }
}

fn desk_config(k: usize, m: usize, n: usize, q: usize, regime: Regime) -> SystemConfig {
    SystemConfig {
        m,
        n,
        k,
        q: vec![q; k],
        l: vec![1; k],
        p_t_dbm: 30.0,
        p_i_dbm: 20.0,
        sigma2_irs_dbm: -70.0,
        sigma2_z_dbm: -80.0,
        positions: facing_positions(k),
        regime,
        pathloss: PathLossModel::default(),
        d_over_lambda: 0.5,
    }
}

#[test]
fn a1_oc_angle_cli() {
    let t0 = Instant::now();
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_irs-lab"))
        .args(["oc-angle", "--theta", "60", "--i", "1", "--m", "16", "--d-over-lambda", "0.5"])
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "[FAIL] oc-angle CLI exited nonzero");
    let angle: f64 = String::from_utf8(out.stdout)
        .expect("utf-8 stdout")
        .trim()
        .parse()
        .expect("numeric angle");
    assert!(
        (angle - 51.3178).abs() <= 0.005,
        "[FAIL] oc-angle CLI printed {angle}, expected 51.3178 ± 0.005"
    );
    pass("oc-angle CLI", &format!("printed {angle:.4}° within ±0.005°"), t0, 1.0);
}

#[test]
fn a2_single_user_los_rank_doubles() {
    let t0 = Instant::now();
    // Surface placed at the orthogonal-departure offset of the user's 60°
    // direction, so the direct and reflected transmit signatures decouple.
    let theta_oc = oc_angle(60.0, 1, 16, 0.5).unwrap();
    let (user_dir, irs_dir) = ((60.0f64).to_radians(), theta_oc.to_radians());
    let mut cfg = desk_config(1, 16, 8, 2, Regime::LosLos);
    cfg.positions = Positions {
        bs: [0.0, 0.0, 10.0],
        irs: [60.0 * irs_dir.cos(), 60.0 * irs_dir.sin(), 20.0],
        users: vec![[120.0 * user_dir.cos(), 120.0 * user_dir.sin(), 0.0]],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0xA2);
    let set = realize_channels(&cfg, &mut rng).unwrap();
    let mut achieved = 0;
    for _ in 0..100 {
        let theta = random_unit_modulus_theta(cfg.n, &mut rng);
        let eff = stacked_effective_channel(&set, &theta).unwrap();
        if numerical_rank(&eff, DOF_RANK_REL_TOL).unwrap() == 2 {
            achieved += 1;
        }
    }
    assert_eq!(achieved, 100, "[FAIL] rank 2 in only {achieved}/100 draws");
    let off = stacked_effective_channel(&set, &ReflectionMatrix::zeros(cfg.n)).unwrap();
    let off_rank = numerical_rank(&off, DOF_RANK_REL_TOL).unwrap();
    assert_eq!(off_rank, 1, "[FAIL] switched-off surface rank {off_rank} ≠ 1");
    pass(
        "single-user LoS rank",
        "rank 2 in 100/100 random reflections, rank 1 with the surface off",
        t0,
        5.0,
    );
}

#[test]
fn a3_rank_deficient_doubling() {
    let t0 = Instant::now();
    let mut cfg = desk_config(2, 16, 16, 2, Regime::LosLos);
    cfg.regime = Regime::RankDeficient {
        i: vec![1, 1],
        j: vec![1, 1],
    };
    let report = verify_doubling(&cfg, 500, 0xA3).unwrap();
    assert_eq!(report.violations, 0, "[FAIL] {} bound violations", report.violations);
    assert!(
        report.achieved_fraction >= 0.99,
        "[FAIL] doubling achieved in only {:.3} of trials",
        report.achieved_fraction
    );
    pass(
        "rank-deficient doubling",
        &format!(
            "rank {} achieved in {:.1}% of 500 trials, no violations",
            report.bound,
            100.0 * report.achieved_fraction
        ),
        t0,
        30.0,
    );
}

#[test]
fn a4_rank_bound_never_violated() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA4);
    for trial in 0..1000u64 {
        let k = rng.gen_range(1..=3);
        let m = rng.gen_range(k.max(2)..=10);
        let n = rng.gen_range(2..=8);
        let kind = rng.gen_range(0..3);
        // Rank-deficient draws need I + J ≤ Q with both factors ≥ 1, so those
        // configs get at least two receive antennas per user.
        let q: Vec<usize> = (0..k)
            .map(|_| rng.gen_range(if kind == 2 { 2 } else { 1 }..=3))
            .collect();
        let regime = match kind {
            0 => Regime::LosLos,
            1 => Regime::LosRayleigh,
            _ => {
                let i: Vec<usize> = q.iter().map(|&qk| rng.gen_range(1..=qk - 1)).collect();
                let j: Vec<usize> = q
                    .iter()
                    .zip(&i)
                    .map(|(&qk, &ik)| rng.gen_range(1..=qk - ik))
                    .collect();
                Regime::RankDeficient { i, j }
            }
        };
        let cfg = SystemConfig {
            m,
            n,
            k,
            q,
            l: vec![1; k],
            p_t_dbm: 30.0,
            p_i_dbm: 10.0,
            sigma2_irs_dbm: -60.0,
            sigma2_z_dbm: -70.0,
            positions: Positions {
                bs: [0.0, 0.0, rng.gen_range(5.0..15.0)],
                irs: [
                    rng.gen_range(20.0..120.0),
                    rng.gen_range(-40.0..40.0),
                    rng.gen_range(0.0..20.0),
                ],
                users: (0..k)
                    .map(|_| [rng.gen_range(30.0..150.0), rng.gen_range(-70.0..70.0), 0.0])
                    .collect(),
            },
            regime,
            pathloss: PathLossModel::default(),
            d_over_lambda: 0.5,
        };
        cfg.validate().unwrap();
        // dof_report itself rejects any draw whose rank exceeds the bound.
        let report = dof_report(&cfg, 1, mix_seed(0xA4, trial)).unwrap();
        assert!(
            report.effective_rank <= report.upper_bound,
            "[FAIL] config {trial}: rank {} > bound {}",
            report.effective_rank,
            report.upper_bound
        );
    }
    pass(
        "rank bound",
        "1000 randomized configs across all regimes stayed at or below the bound",
        t0,
        120.0,
    );
}

fn assert_nondecreasing(label: &str, cells: &[(f64, f64, f64)]) {
    for pair in cells.windows(2) {
        let (v0, m0, s0) = pair[0];
        let (v1, m1, s1) = pair[1];
        let slack = 2.0 * s0.max(s1);
        assert!(
            m1 >= m0 - slack,
            "[FAIL] {label}: mean dropped {m0:.4} → {m1:.4} between {v0} and {v1} (slack {slack:.4})"
        );
    }
}

fn arm_cells(result: &irs_lab::harness::SweepResult, method: MethodTag, irs: bool) -> Vec<(f64, f64, f64)> {
    result
        .rows
        .iter()
        .filter(|r| r.method == method && r.irs == irs)
        .map(|r| {
            (
                r.value,
                r.mean_sum_rate.expect("feasible cell"),
                r.stderr.expect("feasible cell"),
            )
        })
        .collect()
}

#[test]
fn a5_monotone_power_trends() {
    let t0 = Instant::now();
    let grid = vec![0.0, 10.0, 20.0, 30.0, 40.0];

    // Noise-limited operating point with the radio head bigger than the
    // surface (M > N): the surface-incident rows then span only a corner of
    // the precoder space, so serving the direct links and feeding the surface
    // are not in conflict and extra transmit power always helps.
    let mut tll_cfg = desk_config(2, 16, 8, 2, Regime::LosRayleigh);
    tll_cfg.p_i_dbm = 30.0;
    tll_cfg.sigma2_z_dbm = -50.0;
    tll_cfg.positions = Positions {
        bs: [100.0, 20.0, 0.0],
        irs: [100.0, -20.0, 0.0],
        users: vec![[100.0, 60.0, 0.0], [100.0, -60.0, 0.0]],
    };
    let tll_sweep = SweepSpec {
        variable: SweepVariable::PTDbm,
        values: grid.clone(),
        methods: vec![MethodTag::TllMmse],
        trials: 200,
        master_seed: 0xA51,
        base_config: tll_cfg,
    };
    let tll = run_sweep(&tll_sweep).unwrap();
    assert_nondecreasing("TLL-MMSE transmit-power sweep (with surface)", &arm_cells(&tll, MethodTag::TllMmse, true));
    assert_nondecreasing("TLL-MMSE transmit-power sweep (no surface)", &arm_cells(&tll, MethodTag::TllMmse, false));

    let nsp_sweep = SweepSpec {
        variable: SweepVariable::PIDbm,
        values: grid,
        methods: vec![MethodTag::NspMtpMrp],
        trials: 200,
        master_seed: 0xA52,
        base_config: desk_config(2, 16, 16, 2, Regime::LosLos),
    };
    let nsp = run_sweep(&nsp_sweep).unwrap();
    assert_nondecreasing("NSP-MTP-MRP reflect-power sweep (with surface)", &arm_cells(&nsp, MethodTag::NspMtpMrp, true));
    assert_nondecreasing("NSP-MTP-MRP reflect-power sweep (no surface)", &arm_cells(&nsp, MethodTag::NspMtpMrp, false));

    pass(
        "monotone power trends",
        "transmit- and reflect-power sweeps nondecreasing within 2 std-errors per step",
        t0,
        300.0,
    );
}

#[test]
fn a6_surface_gain_ratio() {
    let t0 = Instant::now();
    // Long, lossy direct links next to a short final reflect hop: the regime
    // where the active surface should at least double the sum rate.
    let mut cfg = desk_config(2, 32, 16, 2, Regime::LosRayleigh);
    cfg.sigma2_irs_dbm = -120.0;
    cfg.p_t_dbm = 10.0;
    cfg.p_i_dbm = 20.0;
    cfg.positions = Positions {
        bs: [0.0, 0.0, 10.0],
        irs: [130.0, 0.0, 5.0],
        users: vec![[140.0, -4.0, 0.0], [140.0, 4.0, 0.0]],
    };
    let spec = SweepSpec {
        variable: SweepVariable::PTDbm,
        values: vec![cfg.p_t_dbm],
        methods: vec![MethodTag::TllMmse],
        trials: 100,
        master_seed: 0xA6,
        base_config: cfg,
    };
    let result = run_sweep(&spec).unwrap();
    let with = arm_cells(&result, MethodTag::TllMmse, true)[0].1;
    let without = arm_cells(&result, MethodTag::TllMmse, false)[0].1;
    let ratio = with / without;
    assert!(
        ratio >= 2.0,
        "[FAIL] surface gain ratio {ratio:.3} < 2.0 (with {with:.3}, without {without:.3})"
    );
    pass(
        "surface gain ratio",
        &format!("with/without sum-rate ratio {ratio:.2} ≥ 2.0"),
        t0,
        120.0,
    );
}

#[test]
fn a7_method_ordering() {
    let t0 = Instant::now();
    // Deterministic line-of-sight cells: the sequentially orthogonalized
    // design must beat the fully nulled one for every user count.
    for k in [2usize, 3, 4] {
        let cfg = desk_config(k, 16, 16, 2, Regime::LosLos);
        let mut rng = ChaCha8Rng::seed_from_u64(0xA7 + k as u64);
        let set = realize_channels(&cfg, &mut rng).unwrap();
        let rate = |method| {
            let sol = beamformers::solve(method, &set, &cfg, true).unwrap();
            metrics::evaluate(&sol, &set, &cfg, 0).unwrap().sum_rate
        };
        let (so, nsp) = (rate(MethodTag::SoMmse), rate(MethodTag::NspMtpMrp));
        assert!(
            so >= nsp,
            "[FAIL] K={k}: sequential design {so:.4} below nulled design {nsp:.4}"
        );
    }

    // Four users on the broadside line share one departure direction, so the
    // direct links cannot be separated at the radio head; only a method that
    // points each sub-surface at its own user recovers the multiplex.
    let mut cfg = desk_config(4, 16, 8, 4, Regime::LosRayleigh);
    cfg.p_t_dbm = 40.0;
    cfg.p_i_dbm = 30.0;
    cfg.sigma2_z_dbm = -50.0;
    cfg.positions = Positions {
        bs: [100.0, 20.0, 0.0],
        irs: [100.0, -20.0, 0.0],
        users: vec![
            [100.0, 60.0, 0.0],
            [100.0, 40.0, 0.0],
            [100.0, -40.0, 0.0],
            [100.0, -60.0, 0.0],
        ],
    };
    let spec = SweepSpec {
        variable: SweepVariable::PTDbm,
        values: vec![40.0],
        methods: vec![MethodTag::TllMmse, MethodTag::ZfBaseline],
        trials: 100,
        master_seed: 0xA7,
        base_config: cfg,
    };
    let result = run_sweep(&spec).unwrap();
    let tll = arm_cells(&result, MethodTag::TllMmse, true)[0].1;
    let zf = arm_cells(&result, MethodTag::ZfBaseline, true)[0].1;
    assert!(tll >= zf, "[FAIL] leakage design {tll:.4} below forced-zero baseline {zf:.4}");
    pass(
        "method ordering",
        &format!("SO ≥ NSP for K ∈ {{2,3,4}}; TLL {tll:.2} ≥ ZF {zf:.2} at four users"),
        t0,
        180.0,
    );
}

#[test]
fn a8_surface_position_concavity() {
    let t0 = Instant::now();
    // Deterministic all-line-of-sight single-user layout: the user sits at
    // the middle of the swept range, so moving the surface toward it trades
    // a cleaner incident hop against a shorter delivery hop, and past it both
    // hops lengthen together.
    let cfg = SystemConfig {
        m: 16,
        n: 16,
        k: 1,
        q: vec![2],
        l: vec![1],
        p_t_dbm: 30.0,
        p_i_dbm: 30.0,
        sigma2_irs_dbm: -60.0,
        sigma2_z_dbm: -70.0,
        positions: Positions {
            bs: [0.0, 0.0, 10.0],
            irs: [80.0, 20.0, 20.0],
            users: vec![[100.0, 5.0, 0.0]],
        },
        regime: Regime::LosLos,
        pathloss: PathLossModel::default(),
        d_over_lambda: 0.5,
    };
    let spec = SweepSpec {
        variable: SweepVariable::IrsXPositionM,
        values: (0..=10).map(|i| 50.0 + 10.0 * i as f64).collect(),
        methods: vec![MethodTag::NspMtpMrp],
        trials: 1,
        master_seed: 0xA8,
        base_config: cfg,
    };
    let result = run_sweep(&spec).unwrap();
    let cells = arm_cells(&result, MethodTag::NspMtpMrp, true);
    let means: Vec<f64> = cells.iter().map(|c| c.1).collect();

    // 3-point moving average (window shrinks at the ends).
    let smoothed: Vec<f64> = (0..means.len())
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(means.len() - 1);
            means[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    let signs: Vec<f64> = smoothed
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d != 0.0)
        .map(f64::signum)
        .collect();
    let changes = signs.windows(2).filter(|s| s[0] != s[1]).count();
    assert_eq!(
        changes, 1,
        "[FAIL] smoothed first differences change sign {changes} times (means {means:?})"
    );
    assert!(
        signs.first() == Some(&1.0) && signs.last() == Some(&-1.0),
        "[FAIL] curve is not rise-then-fall (means {means:?})"
    );
    let peak = cells[smoothed
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0]
        .0;
    pass(
        "surface-position concavity",
        &format!("interior maximum near x = {peak} m with a single slope reversal"),
        t0,
        120.0,
    );
}

// ---- always-on property suite -------------------------------------------

fn random_psd(dim: usize, rank: usize, rng: &mut ChaCha8Rng) -> CMat {
    let b = CMat::from_fn(dim, rank, |_, _| {
        C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    &b * b.adjoint()
}

/// Partial-pivot LU determinant, independent of the library's rate path.
fn lu_det(m: &CMat) -> C64 {
    let n = m.nrows();
    let mut a = m.clone();
    let mut det = C64::new(1.0, 0.0);
    for p in 0..n {
        let (mut best, mut mag) = (p, a[(p, p)].norm());
        for r in p + 1..n {
            if a[(r, p)].norm() > mag {
                (best, mag) = (r, a[(r, p)].norm());
            }
        }
        if mag == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if best != p {
            a.swap_rows(p, best);
            det = -det;
        }
        det *= a[(p, p)];
        for r in p + 1..n {
            let f = a[(r, p)] / a[(p, p)];
            for c in p..n {
                let v = a[(p, c)];
                a[(r, c)] -= f * v;
            }
        }
    }
    det
}

fn budget_errors(method: MethodTag, set: &ChannelSet, cfg: &SystemConfig) -> (f64, f64) {
    let sol = beamformers::solve(method, set, cfg, true).unwrap();
    let transmit: f64 = sol.v.iter().map(|v| v.norm_squared()).sum::<f64>()
        + sol
            .reflect_stream
            .as_ref()
            .map_or(0.0, |r| r.v0.norm_squared());
    let reflect = beamformers::realized_reflect_power(&sol, set, cfg).unwrap();
    (
        (transmit - cfg.p_t_mw()).abs() / cfg.p_t_mw(),
        (reflect - cfg.p_i_mw()).abs() / cfg.p_i_mw(),
    )
}

#[test]
fn a9_property_suite() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA9);

    // Power budgets: every method spends exactly its transmit and reflect
    // allowances (relative error ≤ 1e-8).
    let ray_cfg = desk_config(2, 16, 16, 2, Regime::LosRayleigh);
    let ray_set = realize_channels(&ray_cfg, &mut rng).unwrap();
    let los_cfg = desk_config(2, 16, 16, 2, Regime::LosLos);
    let los_set = realize_channels(&los_cfg, &mut rng).unwrap();
    for (method, set, cfg) in [
        (MethodTag::TllMmse, &ray_set, &ray_cfg),
        (MethodTag::ZfBaseline, &ray_set, &ray_cfg),
        (MethodTag::NspMtpMrp, &los_set, &los_cfg),
        (MethodTag::SoMmse, &los_set, &los_cfg),
    ] {
        let (et, er) = budget_errors(method, set, cfg);
        assert!(
            et <= 1e-8 && er <= 1e-8,
            "[FAIL] {method}: transmit budget error {et:.2e}, reflect {er:.2e}"
        );
    }

    // Null-space residuals of the fully nulled design stay below 1e-9.
    let nsp = beamformers::solve(MethodTag::NspMtpMrp, &los_set, &los_cfg, true).unwrap();
    let mut worst: f64 = 0.0;
    let mut residual = |t: &CMat, x: &CVec| {
        let r = (t * x).norm() / (t.norm() * x.norm());
        worst = worst.max(r);
    };
    let v0 = &nsp.reflect_stream.as_ref().unwrap().v0;
    for (k, v) in nsp.v.iter().enumerate() {
        let vk = v.column(0).clone_owned();
        residual(&los_set.h_bi, &vk);
        for (j, h_d) in los_set.h_d.iter().enumerate() {
            if j != k {
                residual(h_d, &vk);
            }
            residual(h_d, v0);
        }
        residual(
            &los_set.g_h[k].adjoint(),
            &nsp.u[k].column(0).clone_owned(),
        );
    }
    residual(
        &los_set.h_d[0].adjoint(),
        &nsp.reflect_stream.as_ref().unwrap().u0,
    );
    assert!(worst <= 1e-9, "[FAIL] worst null residual {worst:.2e} > 1e-9");

    // MMSE receiver sits at a stationary point of the mean-square error:
    // central finite differences with step 1e-5 give gradient norm ≤ 1e-6.
    let q = 5;
    let s = CMat::from_fn(q, 1, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    let i1 = CMat::from_fn(q, 1, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    let noise = random_psd(q, q, &mut rng) + CMat::identity(q, q) * C64::new(0.1, 0.0);
    let u = mmse_receiver(&[s.clone()], &[i1.clone()], &noise).unwrap();
    let r = &s * s.adjoint() + &i1 * i1.adjoint() + &noise;
    let mse = |u: &CMat| -> f64 {
        (u.adjoint() * &r * u)[(0, 0)].re - 2.0 * (u.adjoint() * &s)[(0, 0)].re + 1.0
    };
    let step = 1e-5;
    let mut grad_sq = 0.0;
    for idx in 0..q {
        for part in 0..2 {
            let mut hi = u.clone();
            let mut lo = u.clone();
            let delta = if part == 0 {
                C64::new(step, 0.0)
            } else {
                C64::new(0.0, step)
            };
            hi[(idx, 0)] += delta;
            lo[(idx, 0)] -= delta;
            grad_sq += ((mse(&hi) - mse(&lo)) / (2.0 * step)).powi(2);
        }
    }
    let grad = grad_sq.sqrt();
    assert!(grad <= 1e-6, "[FAIL] MMSE gradient norm {grad:.2e} > 1e-6");

    // The generalized eigenvector beats 10⁴ random unit candidates on its
    // own Rayleigh quotient.
    let dim = 8;
    let a = random_psd(dim, dim, &mut rng);
    let d = random_psd(dim, dim, &mut rng) + CMat::identity(dim, dim) * C64::new(0.05, 0.0);
    let pair = generalized_top_eigvec(&a, &d).unwrap();
    let quotient = |v: &CVec| {
        (v.adjoint() * &a * v)[(0, 0)].re / (v.adjoint() * &d * v)[(0, 0)].re
    };
    let best = quotient(&pair.vector);
    for _ in 0..10_000 {
        let v = CVec::from_fn(dim, |_, _| {
            C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        assert!(
            best >= quotient(&v) * (1.0 - 1e-10),
            "[FAIL] random candidate beat the generalized eigenvector"
        );
    }

    // Determinant rate agrees with an independent LU determinant to 1e-9.
    for _ in 0..50 {
        let l = 3;
        let a1 = random_psd(l, l, &mut rng);
        let a2 = random_psd(l, l, &mut rng);
        let b1 = random_psd(l, l, &mut rng);
        let b2 = random_psd(l, l, &mut rng);
        let b3 = random_psd(l, l, &mut rng) + CMat::identity(l, l) * C64::new(0.2, 0.0);
        let rate = rate_det(&a1, &a2, &b1, &b2, &b3).unwrap();
        let b = &b1 + &b2 + &b3;
        let s = &a1 + &a2;
        let oracle = (lu_det(&(&b + &s)) / lu_det(&b)).re.log2();
        assert!(
            (rate - oracle).abs() <= 1e-9,
            "[FAIL] determinant rate {rate} vs oracle {oracle}"
        );
    }

    // Repeated seeded sweeps emit byte-identical CSV.
    let spec = SweepSpec {
        variable: SweepVariable::PTDbm,
        values: vec![10.0, 20.0],
        methods: vec![MethodTag::TllMmse, MethodTag::ZfBaseline],
        trials: 5,
        master_seed: 0xA9,
        base_config: desk_config(2, 8, 4, 2, Regime::LosRayleigh),
    };
    let first = render_csv(&run_sweep(&spec).unwrap());
    let second = render_csv(&run_sweep(&spec).unwrap());
    assert_eq!(first, second, "[FAIL] repeated sweep runs differ");

    // Powers round-trip the dBm helper exactly where it matters.
    assert!((dbm_to_mw(30.0) - 1000.0).abs() < 1e-9);

    pass(
        "property suite",
        "budgets ≤1e-8, null residuals ≤1e-9, MMSE gradient ≤1e-6, eigenvector optimal over 10⁴ draws, determinant oracle ≤1e-9, byte-identical CSV",
        t0,
        120.0,
    );
}
