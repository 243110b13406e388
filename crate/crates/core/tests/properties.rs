use proptest::prelude::*;

use qpwalk::analysis::{ks_phi_samples, one_sided_verdict, u_value};
use qpwalk::circlemap::{CircleMap, CohomologyMode, TrigPoly};
use qpwalk::constructions::{coboundary_from, perturbed_p, u_set};
use qpwalk::engine::{evolve_exact, exit_solve, simulate, Record, SiteTable};
use qpwalk::environment::{symmetry_defect, Environment};
use qpwalk::frequency::{Frequency, FrequencySpec};
use qpwalk::numerics::MMatrixLu;
use qpwalk::parallel;
use qpwalk::potential::{find_traps, hit_prob, sigma_range, PotentialTable};
use qpwalk::scenario::{run_scenario, ScenarioConfig, ScenarioName};

fn probs(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1f64..0.9, len)
}

fn trig(max_degree: usize) -> impl Strategy<Value = TrigPoly> {
    (0..=max_degree)
        .prop_flat_map(|d| prop::collection::vec(-1.0f64..1.0, 2 * d + 1))
        .prop_map(|c| TrigPoly::new(c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn martingale_matches_exit_solver(values in probs(3..=200), pick in 0.0f64..1.0) {
        let w = values.len() as i64 - 1;
        let s = 1 + ((w - 1) as f64 * pick) as i64;
        let env = Environment::tabulated(0, values).unwrap();
        let h = hit_prob(&env, Some(0), s, Some(w)).unwrap();
        let e = exit_solve(&env, 0, w, s).unwrap().p_exit_right;
        prop_assert!((h - e).abs() < 1e-10, "{h} vs {e}");
    }

    #[test]
    fn hit_probabilities_are_complementary_under_reflection(values in probs(5..=120), pick in 0.0f64..1.0) {
        let w = values.len() as i64 - 1;
        let env = Environment::tabulated(-w / 2, values).unwrap();
        let (a, b) = (-w / 2, w - w / 2);
        let s = a + 1 + ((b - a - 2) as f64 * pick) as i64;
        let right = hit_prob(&env, Some(a), s, Some(b)).unwrap();
        let left = hit_prob(&env.reflected(), Some(-b), -s, Some(-a)).unwrap();
        prop_assert!((right + left - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hit_prob_ignores_the_potential_origin(values in probs(4..=80), shift in -50i64..50, pick in 0.0f64..1.0) {
        let w = values.len() as i64 - 1;
        let s = 1 + ((w - 1) as f64 * pick) as i64;
        let base = Environment::tabulated(0, values.clone()).unwrap();
        let moved = Environment::tabulated(shift, values).unwrap();
        let h0 = hit_prob(&base, Some(0), s, Some(w)).unwrap();
        let h1 = hit_prob(&moved, Some(shift), s + shift, Some(w + shift)).unwrap();
        prop_assert!((h0 - h1).abs() < 1e-12);
    }

    #[test]
    fn martingale_is_harmonic(values in probs(3..=60)) {
        let w = values.len() as i64 - 1;
        let env = Environment::tabulated(0, values.clone()).unwrap();
        let t = PotentialTable::build(&env, 0, w).unwrap();
        for j in 1..w {
            let p = values[j as usize];
            let m = t.m(j).unwrap();
            let next = p * t.m(j + 1).unwrap() + (1.0 - p) * t.m(j - 1).unwrap();
            prop_assert!((next - m).abs() <= 1e-9 * m.abs().max(1.0));
        }
    }

    #[test]
    fn sigma_falls_exactly_where_p_exceeds_half(values in probs(2..=100)) {
        let w = values.len() as i64 - 1;
        let env = Environment::tabulated(0, values.clone()).unwrap();
        let sig = sigma_range(&env, 0, w).unwrap();
        for j in 1..=w as usize {
            prop_assert_eq!(sig[j] < sig[j - 1], values[j] > 0.5);
        }
    }

    #[test]
    fn periodic_environment_repeats(values in probs(1..=12), j in -1000i64..1000) {
        let l = values.len() as i64;
        let env = Environment::periodic(values).unwrap();
        prop_assert_eq!(env.p(j).unwrap(), env.p(j + l).unwrap());
    }

    #[test]
    fn traps_reflect_with_the_environment(values in probs(20..=200)) {
        let w = values.len() as i64 - 1;
        let env = Environment::tabulated(0, values).unwrap();
        let mut a = find_traps(&env, 0, w, 1.0).unwrap();
        let mut b = find_traps(&env.reflected(), -w - 1, -1, 1.0).unwrap();
        a.sort_by_key(|t| t.bottom_span.0);
        b.sort_by_key(|t| -t.bottom_span.1);
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.bottom_span, (-y.bottom_span.1 - 1, -y.bottom_span.0 - 1));
            prop_assert!((x.depth - y.depth).abs() < 1e-9);
            prop_assert!((x.barrier_left - y.barrier_right).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_evolution_conserves_mass(values in probs(41..=41), t in 1u64..400) {
        let env = Environment::tabulated(-20, values).unwrap();
        let d = evolve_exact(&env, 0, t, Some((-20, 20))).unwrap();
        prop_assert!((d.total_mass() + d.boundary_leakage() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn m_matrix_solves_diagonally_dominant_systems(
        bands in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 1e-6f64..1.0, -5.0f64..5.0), 1..60)
    ) {
        let n = bands.len();
        let mut lower: Vec<f64> = bands.iter().map(|b| b.0).collect();
        let mut upper: Vec<f64> = bands.iter().map(|b| b.1).collect();
        lower[0] = 0.0;
        upper[n - 1] = 0.0;
        let slack: Vec<f64> = bands.iter().map(|b| b.2).collect();
        let rhs: Vec<f64> = bands.iter().map(|b| b.3).collect();
        let lu = MMatrixLu::factor(&lower, &upper, &slack).unwrap();
        // A = diag(lower + upper + slack) - lower on the sub-diagonal - upper on the super-diagonal.
        let apply = |x: &[f64], transpose: bool| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let mut v = (lower[i] + upper[i] + slack[i]) * x[i];
                    let (sub, sup) = if transpose {
                        (if i > 0 { upper[i - 1] } else { 0.0 }, if i + 1 < n { lower[i + 1] } else { 0.0 })
                    } else {
                        (lower[i], upper[i])
                    };
                    if i > 0 { v -= sub * x[i - 1]; }
                    if i + 1 < n { v -= sup * x[i + 1]; }
                    v
                })
                .collect()
        };
        for transpose in [false, true] {
            let x = if transpose { lu.solve_transposed(&rhs) } else { lu.solve(&rhs) };
            let back = apply(&x, transpose);
            let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (r, b) in rhs.iter().zip(&back) {
                prop_assert!((r - b).abs() <= 1e-9 * scale, "{r} vs {b}");
            }
        }
    }

    #[test]
    fn rational_orbit_averages_annihilate_modes(f in trig(6), x in 0.0f64..1.0, extra in 1u64..20) {
        let q = 2 * f.degree() as u64 + extra;
        let avg: f64 = (0..q).map(|j| f.eval(x + j as f64 / q as f64)).sum::<f64>() / q as f64;
        prop_assert!((avg - f.mean()).abs() < 1e-12);
    }

    #[test]
    fn integration_is_shift_invariant(f in trig(5), beta in 0.0f64..1.0) {
        let map = CircleMap::Trig(f);
        let a = map.integrate().unwrap();
        let b = map.clone().shift(beta).integrate().unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn convergent_errors_are_bracketed(qs in prop::collection::vec(1u64..500, 1..12)) {
        let f = Frequency::build(&FrequencySpec::quotients(&qs, 8)).unwrap();
        for (n, ok) in f.check_eta_bounds() {
            prop_assert!(ok, "index {n}");
        }
    }

    #[test]
    fn rational_orbit_is_periodic(qs in prop::collection::vec(1u64..30, 2..8), num in 0i64..1000, j in -500i64..500) {
        let f = Frequency::build(&FrequencySpec::quotients(&qs, 4)).unwrap();
        let depth = f.depth();
        let q = f.q_u64(depth).unwrap() as i64;
        let x = num_rational::BigRational::new(num.into(), 1000.into());
        let a = f.orbit_point(&x, j, depth).unwrap();
        let b = f.orbit_point(&x, j + q, depth).unwrap();
        prop_assert_eq!(a.point, b.point);
    }

    #[test]
    fn ks_distance_is_affine_invariant(
        samples in prop::collection::vec(-10.0f64..10.0, 1..200),
        mu in -3.0f64..3.0,
        sigma in 0.1f64..5.0,
        scale in 0.1f64..10.0,
        offset in -100.0f64..100.0,
    ) {
        let moved: Vec<f64> = samples.iter().map(|s| scale * s + offset).collect();
        let a = ks_phi_samples(&samples, mu, sigma).unwrap();
        let b = ks_phi_samples(&moved, scale * mu + offset, scale * sigma).unwrap();
        prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn constant_environment_u_is_inverse_speed(p in 0.55f64..0.95, x in 0.0f64..1.0) {
        let (u, _) = u_value(&CircleMap::constant(p), 0.618_033_988_749_894_9, x, 1e-12).unwrap();
        let want = 1.0 / (2.0 * p - 1.0);
        prop_assert!((u - want).abs() < 1e-9 * want, "{u} vs {want}");
    }

    #[test]
    fn simulation_is_independent_of_worker_count(seed in 0u64..1000, workers in 2usize..6) {
        let table = SiteTable::from_values(-60, vec![0.55; 121]).unwrap();
        let run = |w: usize| {
            parallel::install(Some(w), || simulate(&table, 0, 50, 300, seed, Record::Endpoints).unwrap())
                .unwrap()
                .histogram()
        };
        prop_assert_eq!(run(1), run(workers));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn perturbation_plans_are_symmetric(amp in 0.02f64..0.15, n in 4u32..10) {
        let freq = Frequency::build(&FrequencySpec::Golden).unwrap();
        let p_bar = coboundary_from(&CircleMap::cosine(0.5, amp, 1), &freq, 6, CohomologyMode::Symmetric)
            .unwrap()
            .p_bar;
        let q = freq.q_u64(n as usize + 2).unwrap();
        let plan = perturbed_p(&p_bar, n, q, 1.0).unwrap();
        prop_assert!(plan.symmetry_defect.abs() < 1e-10);
        prop_assert!(plan.ellipticity > 0.0);
        prop_assert!(symmetry_defect(&plan.p_n).unwrap().abs() < 1e-10);
    }

    #[test]
    fn perturbation_vanishes_near_u3(k in 0u64..10_000, offset in -0.0049f64..0.0049, n in 4u32..9) {
        let freq = Frequency::build(&FrequencySpec::Golden).unwrap();
        let idx = n as usize + 3;
        let q = freq.q_u64(idx).unwrap();
        let plan = perturbed_p(&CircleMap::constant(0.5), n, q, 1.0).unwrap();
        let y = ((k % q) as f64 + offset) / q as f64;
        let y = y.rem_euclid(1.0);
        prop_assert!(u_set(3, q).unwrap().contains(y));
        // Each step moves q x by q |eta| < 1/q_next, so the band stays inside the flat part of the bump.
        let reach = (freq.q_u64(idx + 1).unwrap() / 5) as i64;
        let alpha = freq.alpha_f64();
        for m in -reach..=reach {
            let z = (y + m as f64 * alpha).rem_euclid(1.0);
            prop_assert_eq!(plan.e_n.eval(z), 0.0, "m = {}", m);
        }
    }

    #[test]
    fn one_sided_verdict_is_reflection_covariant(a in 0.6f64..0.8, b in 0.35f64..0.55) {
        let env = Environment::periodic(vec![a, b]).unwrap();
        let v = one_sided_verdict(&env, 300, 0.05, 2, None).unwrap();
        let r = one_sided_verdict(&env.reflected(), 300, 0.05, 2, None).unwrap();
        let get = |v: &qpwalk::analysis::ScenarioVerdict, k: &str| v.measured[k];
        prop_assert!((get(&v, "mu") + get(&r, "mu")).abs() < 1e-9 * get(&v, "mu").abs());
        prop_assert!((get(&v, "sigma") - get(&r, "sigma")).abs() < 1e-9 * get(&v, "sigma"));
        prop_assert!((get(&v, "ks") - get(&r, "ks")).abs() < 1e-12);
    }
}

#[test]
fn manifests_repeat_exactly() {
    let cfg = ScenarioConfig::preset(ScenarioName::Localization);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ma, _) = run_scenario(&cfg, a.path(), "test").unwrap();
    let (mb, _) = run_scenario(&cfg, b.path(), "test").unwrap();
    assert_eq!(ma.output_hashes(), mb.output_hashes());
}
