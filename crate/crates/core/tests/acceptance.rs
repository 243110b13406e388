//! Acceptance criteria 1-12. Each test writes one PASS/FAIL line straight to
//! stdout (bypassing libtest capture) before asserting.

use std::io::Write;
use std::time::Instant;

use qpwalk::analysis::{
    c3_witness_from, localization_verdict, one_sided_verdict, stationary_density, two_sided_verdict,
    EngineChoice, TwoSidedConfig,
};
use qpwalk::circlemap::{
    birkhoff_rational_check, retained_expansion_degree, CircleMap, CohomologyMode, TrigPoly, UnaryFn,
};
use qpwalk::constructions::{coboundary_from, perturbed_p};
use qpwalk::engine::{exit_solve, simulate_exit, stream, SiteTable};
use qpwalk::environment::{EnvSpec, Environment, ProceduralRule};
use qpwalk::frequency::{Frequency, FrequencySpec};
use qpwalk::parallel;
use qpwalk::potential::{check_criterion, hit_prob, sigma_range, CriterionKind, PotentialTable, Thresholds};
use qpwalk::scenario::{
    c3_preset_plan, drift_monte_carlo, drift_preset_plan, drift_split, mc_phases, run_scenario,
    ScenarioConfig, ScenarioName,
};
use rand_chacha::rand_core::RngCore;

fn report(id: u32, title: &str, pass: bool, started: Instant, detail: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "criterion {id:>2} [{}] {title} ({:.1}s): {detail}",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    let _ = out.flush();
}

fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn c1_trap() -> Environment {
    Environment::build(&EnvSpec::Procedural(ProceduralRule::Layered {
        first: 1,
        core: Vec::new(),
        left: 2.0 / 3.0,
        right: 1.0 / 3.0,
    }))
    .unwrap()
}

#[test]
fn criterion_01_oracle_triangle() {
    let t0 = Instant::now();
    let n_traj = 100_000usize;
    let tv_bound = 3.0 * ((n_traj as f64).ln() / n_traj as f64).sqrt();
    let mut worst_exact: f64 = 0.0;
    let mut worst_tv: f64 = 0.0;
    let mut tv_fail = 0;
    for i in 0..25u64 {
        let mut rng = stream(2024, i);
        let w = 4 + (uniform(&mut rng) * 996.0) as i64;
        let values: Vec<f64> = (0..=w).map(|_| 0.1 + 0.8 * uniform(&mut rng)).collect();
        let env = Environment::tabulated(0, values).unwrap();
        for _ in 0..3 {
            let s = 1 + (uniform(&mut rng) * (w - 1) as f64) as i64;
            let h = hit_prob(&env, Some(0), s, Some(w)).unwrap();
            let e = exit_solve(&env, 0, w, s).unwrap().p_exit_right;
            worst_exact = worst_exact.max((h - e).abs());
        }
        // Monte Carlo leg on a sub-window whose expected exit time stays moderate.
        let a = (uniform(&mut rng) * (w / 2) as f64) as i64;
        let mut b = (a + 24).min(w);
        let mut s = (a + b) / 2;
        while b - a > 2 && exit_solve(&env, a, b, s).unwrap().m1 > 1000.0 {
            b = a + (b - a) / 2;
            s = (a + b) / 2;
        }
        let exact = exit_solve(&env, a, b, s).unwrap().p_exit_right;
        let table = SiteTable::from_env(&env, a, b).unwrap();
        let mc = simulate_exit(&table, a, s, b, n_traj, 77 + i, u64::MAX).unwrap();
        let tv = (mc.right_fraction - exact).abs();
        worst_tv = worst_tv.max(tv);
        if tv >= tv_bound {
            tv_fail += 1;
        }
    }
    let pass = worst_exact < 1e-10 && tv_fail == 0;
    report(
        1,
        "oracle triangle",
        pass,
        t0,
        &format!(
            "max |martingale - solver| = {worst_exact:.2e} (< 1e-10); max TV = {worst_tv:.4} (< {tv_bound:.4}), {tv_fail} over"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_02_gamblers_ruin() {
    let t0 = Instant::now();
    let env = Environment::constant(1.0 / 3.0).unwrap();
    let table = PotentialTable::build(&env, 0, 512).unwrap();
    let mut worst: f64 = 0.0;
    for n in 1..=512i64 {
        let got = table.log_hit_prob(0, 1, n).unwrap();
        let want = -(n as f64) * std::f64::consts::LN_2 - (-(2f64).powi(-(n as i32))).ln_1p();
        // relative error of the probability = |exp(got - want) - 1|
        worst = worst.max((got - want).exp_m1().abs());
    }
    let pass = worst < 1e-12;
    report(2, "gambler's ruin", pass, t0, &format!("max relative error over N <= 512: {worst:.2e} (< 1e-12)"));
    assert!(pass);
}

/// `max_k min(max_{k'>=k} Σ(k,k'), max_{k'<=k} Σ(k,k'))` on `[-l, l]`.
fn measured_a(env: &Environment, l: i64) -> f64 {
    let sig = sigma_range(env, -l, l).unwrap();
    let n = sig.len();
    let mut best_right = vec![f64::NEG_INFINITY; n];
    let mut run = f64::NEG_INFINITY;
    for i in (0..n).rev() {
        run = run.max(sig[i]);
        best_right[i] = run;
    }
    let mut run = f64::NEG_INFINITY;
    let mut a: f64 = 0.0;
    for i in 0..n {
        run = run.max(sig[i]);
        let up = best_right[i] - sig[i];
        let down = run - sig[i];
        a = a.max(up.min(down));
    }
    a
}

#[test]
fn criterion_03_exit_time_lemma() {
    let t0 = Instant::now();
    let golden = FrequencySpec::Golden;
    let co = coboundary_from(
        &CircleMap::cosine(0.5, 0.1, 1),
        &Frequency::build(&golden).unwrap(),
        8,
        CohomologyMode::Symmetric,
    )
    .unwrap();
    let quasi = |map: CircleMap| {
        Environment::build(&EnvSpec::Quasiperiodic {
            map,
            alpha: golden.clone(),
            phase: "0".into(),
            depth: None,
        })
        .unwrap()
    };
    let mut cases: Vec<(String, Environment, i64)> = vec![
        ("constant 1/2".into(), Environment::constant(0.5).unwrap(), 32),
        ("constant 0.55".into(), Environment::constant(0.55).unwrap(), 64),
        ("period-2 (0.7, 0.45)".into(), Environment::periodic(vec![0.7, 0.45]).unwrap(), 32),
        ("period-3".into(), Environment::periodic(vec![0.4, 0.6, 0.5]).unwrap(), 48),
        ("coboundary golden".into(), quasi(co.p_bar.clone()), 64),
        ("1/2 + 0.2cos golden".into(), quasi(CircleMap::cosine(0.5, 0.2, 1)), 40),
    ];
    for (k, l) in [16i64, 24, 32, 40].into_iter().enumerate() {
        let mut rng = stream(99, k as u64);
        let values: Vec<f64> = (0..=2 * l).map(|_| 0.35 + 0.3 * uniform(&mut rng)).collect();
        cases.push((format!("iid window L={l}"), Environment::tabulated(-l, values).unwrap(), l));
    }
    let kappa_min = cases
        .iter()
        .map(|(_, e, l)| e.ellipticity(-*l, *l).unwrap())
        .fold(f64::INFINITY, f64::min);
    // r_k >= κ/(2L e^A) and E[G^s] <= s!/r^s give E[τ^s] <= 2 s! (2/κ)^s e^{sA} L^{2s+1}.
    let c = |s: u32| 2.0 * (1..=s).product::<u32>() as f64 * (2.0 / kappa_min).powi(s as i32);
    let mut max_ratio = [0.0f64; 3];
    let mut ok = true;
    for (name, env, l) in &cases {
        let a = measured_a(env, *l);
        let st = exit_solve(env, -l, *l, 0).unwrap();
        if st.m1 < *l as f64 {
            ok = false;
            eprintln!("{name}: E[tau] = {} < L = {l}", st.m1);
        }
        for s in 1..=3u32 {
            let ratio = st.moment(s) / ((s as f64 * a).exp() * (*l as f64).powi(2 * s as i32 + 1));
            max_ratio[s as usize - 1] = max_ratio[s as usize - 1].max(ratio);
            if ratio > c(s) {
                ok = false;
                eprintln!("{name}: s = {s} ratio {ratio} > {}", c(s));
            }
        }
    }
    report(
        3,
        "exit-time lemma",
        ok,
        t0,
        &format!(
            "10 instances, E[tau] >= L; max ratios s=1,2,3: {:.3e}, {:.3e}, {:.3e} vs C_s = {:.3e}, {:.3e}, {:.3e}",
            max_ratio[0], max_ratio[1], max_ratio[2], c(1), c(2), c(3)
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_04_localization() {
    let t0 = Instant::now();
    let v = localization_verdict(&c1_trap(), 64, EngineChoice::Exact).unwrap();
    report(
        4,
        "localization",
        v.pass,
        t0,
        &format!(
            "T = {}, tail = {:.3e} (< {:.3e}), Var = {:.4} (< {:.1})",
            v.t,
            v.measured["tail_probability"],
            v.checks[0].bound,
            v.measured["variance"],
            v.checks[1].bound
        ),
    );
    assert!(v.pass);
}

#[test]
fn criterion_05_one_sided_renewal_clt() {
    let t0 = Instant::now();
    let env = Environment::periodic(vec![0.7, 0.45]).unwrap();
    let v = one_sided_verdict(&env, 10_000, 0.05, 2, Some((100_000, 5))).unwrap();
    let m = &v.measured;
    report(
        5,
        "one-sided renewal CLT",
        v.pass,
        t0,
        &format!(
            "ks = {:.4} (< 0.05); mu = {:.3}, MC mean = {:.3}; sigma = {:.3}, MC sd = {:.3}",
            m["ks"], m["mu"], m["mc_mean"], m["sigma"], m["mc_sd"]
        ),
    );
    assert!(v.pass);
}

#[test]
fn criterion_06_two_sided_drift() {
    let t0 = Instant::now();
    let plan = c3_preset_plan().unwrap();
    let env = Environment::build(&plan.env).unwrap();
    let reference = Environment::build(&plan.reference_env).unwrap();
    let th = Thresholds {
        q: Some(plan.q as i64),
        ..Thresholds::default()
    };
    let report_c3 = check_criterion(CriterionKind::C3, &env, 2000, 0.05, &th, Some(&reference)).unwrap();
    let w = c3_witness_from(&report_c3).unwrap();
    let v = two_sided_verdict(&env, 2000, 0.05, &w, &TwoSidedConfig::default()).unwrap();
    let m = &v.measured;
    let pass = report_c3.holds && v.pass;
    report(
        6,
        "two-sided drift",
        pass,
        t0,
        &format!(
            "C3 holds = {}; T = {}; masses right/left = {:.4}/{:.4} (> 0.1); split from 0 = {:.4} in [0.11, 0.89]",
            report_c3.holds, v.t, m["mass_right_window"], m["mass_left_window"], m["split_from_0"]
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_coboundary_boundedness() {
    let t0 = Instant::now();
    let freq = Frequency::build(&FrequencySpec::Golden).unwrap();
    let co = coboundary_from(&CircleMap::cosine(0.5, 0.1, 1), &freq, 8, CohomologyMode::Symmetric).unwrap();
    let bound = 2.0 * co.log_g_sup + 1e-6;
    let mut rng = stream(7, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let k = rng.next_u64() % (1 << 20);
        let env = Environment::build(&EnvSpec::Quasiperiodic {
            map: co.p_bar.clone(),
            alpha: FrequencySpec::Golden,
            phase: format!("{k}/1048576"),
            depth: None,
        })
        .unwrap();
        let sig = sigma_range(&env, -10_000, 10_000).unwrap();
        worst = worst.max(sig.iter().fold(0.0f64, |m, s| m.max(s.abs())));
    }
    let pass = worst <= bound;
    report(
        7,
        "coboundary boundedness",
        pass,
        t0,
        &format!("max |Σ̄_x(n)| over 20 phases, |n| <= 1e4: {worst:.6} <= {bound:.6}"),
    );
    assert!(pass);
}

#[test]
fn criterion_08_delta_balancing() {
    let t0 = Instant::now();
    let freq = Frequency::build(&FrequencySpec::Golden).unwrap();
    // No reflection symmetry, so I(0) != 0 and the bisection has work to do.
    let base = CircleMap::sum(vec![CircleMap::cosine(0.5, 0.1, 1), CircleMap::cosine(0.0, 0.06, 2)]);
    let p_bar = coboundary_from(&base, &freq, 8, CohomologyMode::Symmetric).unwrap().p_bar;
    let mut lines = Vec::new();
    let mut ok = true;
    for (n, q) in [(5u32, 13u64), (8, 34), (12, 89)] {
        let plan = perturbed_p(&p_bar, n, q, 1.0).unwrap();
        let good = plan.symmetry_defect.abs() < 1e-10 && plan.delta.abs() <= 1.0 / n as f64;
        ok &= good;
        lines.push(format!("n={n}, q={q}: delta={:.4e}, defect={:.1e}", plan.delta, plan.symmetry_defect));
    }
    report(8, "delta-balancing", ok, t0, &lines.join("; "));
    assert!(ok);
}

#[test]
fn criterion_09_asymmetric_drift_split() {
    let t0 = Instant::now();
    let plan = drift_preset_plan().unwrap();
    let t = 10_000u64;
    let split = drift_split(&plan, t as f64, 256).unwrap();
    let ratio = split.min_margin / split.b;
    let mut ok = split.u_emp < (t as f64).powf(0.25) && ratio >= split.predicted_ratio;
    let n_traj = 20_000;
    let mut mc = Vec::new();
    for (k, &i) in mc_phases(&split.rows).iter().enumerate() {
        let (mean, sd) = drift_monte_carlo(&plan, i, 256, t, n_traj, 11 + k as u64).unwrap();
        let b_t = split.rows[i].b_t as f64;
        let dev = (mean - b_t).abs();
        let bound = 3.0 * sd / (n_traj as f64).sqrt();
        ok &= dev < bound;
        mc.push(format!("x={i}/256 |{mean:.2}-{b_t}|<{bound:.2}"));
    }
    report(
        9,
        "asymmetric drift split",
        ok,
        t0,
        &format!(
            "b = {:.2}, U_emp on J = {:.3} (< t^1/4), margin/b on J' = {:.4} >= predicted {:.4}; MC {}",
            split.b,
            split.u_emp,
            ratio,
            split.predicted_ratio,
            mc.join(", ")
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_10_stationary_density() {
    let t0 = Instant::now();
    let tol = 1e-10;
    let golden = Frequency::build(&FrequencySpec::Golden).unwrap();
    let silver = Frequency::build(&FrequencySpec::Silver).unwrap();
    let cases = [
        (
            "logistic(-0.3 + 0.2cos), golden",
            CircleMap::cosine(-0.3, 0.2, 1).apply(UnaryFn::Logistic),
            &golden,
        ),
        ("2/3 + 0.1cos, silver", CircleMap::cosine(2.0 / 3.0, 0.1, 1), &silver),
        ("0.35 + 0.05sin 4pi x, golden", CircleMap::sine(0.35, 0.05, 2), &golden),
    ];
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, p, alpha) in cases {
        let d = stationary_density(&p, alpha, 512, tol).unwrap();
        ok &= d.eqim_residual < 10.0 * tol && d.flux_defect < 10.0 * tol;
        lines.push(format!("{name}: {:.1e}/{:.1e}", d.eqim_residual, d.flux_defect));
    }
    report(
        10,
        "stationary density",
        ok,
        t0,
        &format!("residual/flux defect (< 1e-9): {}", lines.join("; ")),
    );
    assert!(ok);
}

#[test]
fn criterion_11_birkhoff_threshold() {
    let t0 = Instant::now();
    let v = TrigPoly::new(vec![0.0, 1.0, 0.0]).unwrap();
    let degree = retained_expansion_degree(&v, 1e-14);
    let low = birkhoff_rational_check(&v, 2, 0.0).unwrap().defect;
    let mut above = Vec::new();
    for q in [degree as u64 + 1, 64, 101] {
        above.push(birkhoff_rational_check(&v, q, 0.3).unwrap().defect);
    }
    let worst = above.iter().cloned().fold(0.0, f64::max);
    let pass = worst < 1e-12 && low > 1e-3;
    report(
        11,
        "Birkhoff threshold",
        pass,
        t0,
        &format!("retained degree {degree}; defect at q=2: {low:.3e}; max defect for q > degree: {worst:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_12_reproducibility() {
    let t0 = Instant::now();
    let configs = [
        ScenarioConfig::preset(ScenarioName::Localization),
        ScenarioConfig::preset(ScenarioName::OneSided)
            .with_overrides(&["n_traj=2000".into()])
            .unwrap(),
        ScenarioConfig::preset(ScenarioName::AsymmetricDrift)
            .with_overrides(&["grid=32".into(), "n_traj=2000".into()])
            .unwrap(),
        ScenarioConfig::preset(ScenarioName::DiophantineWindow)
            .with_overrides(&["t=500".into()])
            .unwrap(),
    ];
    let mut ok = true;
    let mut files = 0;
    for cfg in &configs {
        let mut reference = None;
        for workers in [1usize, 2, 8] {
            let dir = tempfile::tempdir().unwrap();
            let (m, _) = parallel::install(Some(workers), || run_scenario(cfg, dir.path(), "acceptance"))
                .unwrap()
                .unwrap();
            let mut bytes = Vec::new();
            for o in &m.outputs {
                bytes.push(std::fs::read(dir.path().join(&o.path)).unwrap());
            }
            match &reference {
                None => {
                    files += m.outputs.len();
                    reference = Some((m.output_hashes(), bytes));
                }
                Some((hashes, raw)) => {
                    if *hashes != m.output_hashes() || *raw != bytes {
                        ok = false;
                        eprintln!("{:?} differs with {workers} workers", cfg.name);
                    }
                }
            }
        }
    }
    report(
        12,
        "reproducibility",
        ok,
        t0,
        &format!("4 presets x workers {{1, 2, 8}}: {files} output files byte-identical"),
    );
    assert!(ok);
}
