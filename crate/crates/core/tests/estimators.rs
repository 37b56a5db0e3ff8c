use proptest::prelude::*;
use subexp_core::{
    esscher_is, exp_power_model, gauss_power_model, naive_mc, phi, rate_sweep, shift_is, subexp_tchebychev_bound,
    symmetrized_tchebychev_bound, DistributionModel, EstimatorResult, EventSpec, FreeEnergyModel, RandomStream,
    TiltedLaw,
};

fn exp2() -> (DistributionModel, FreeEnergyModel) {
    let fe = exp_power_model(2.0).unwrap();
    (fe.distribution().unwrap(), fe)
}

fn gauss4() -> (DistributionModel, FreeEnergyModel) {
    let fe = gauss_power_model(4.0).unwrap();
    (fe.distribution().unwrap(), fe)
}

fn combined_se(a: &EstimatorResult, b: &EstimatorResult) -> f64 {
    a.standard_error.hypot(b.standard_error)
}

fn assert_agree(a: &EstimatorResult, b: &EstimatorResult, k: f64) {
    let diff = (a.estimate - b.estimate).abs();
    assert!(
        diff <= k * combined_se(a, b),
        "{} {} +- {} vs {} {} +- {}",
        a.method,
        a.estimate,
        a.standard_error,
        b.method,
        b.estimate,
        b.standard_error
    );
}

#[test]
fn naive_single_summand_matches_closed_tail() {
    let (d, _) = exp2();
    let r = naive_mc(&d, &EventSpec::tail(1, 4.0).unwrap(), 10_000_000, 1).unwrap();
    let exact = 0.5 * (-2.0f64).exp();
    assert!((r.estimate - exact).abs() <= 4.0 * r.standard_error, "{r:?}");
}

#[test]
fn naive_tails_are_symmetric() {
    let (d, _) = gauss4();
    let up = naive_mc(&d, &EventSpec::tail(6, 0.8).unwrap(), 400_000, 2).unwrap();
    let down = naive_mc(&d, &EventSpec::lower_tail(6, 0.8).unwrap(), 400_000, 3).unwrap();
    assert_agree(&up, &down, 4.0);
}

#[test]
fn esscher_agrees_with_long_naive_run() {
    let (d, fe) = exp2();
    let e = EventSpec::tail(5, 3.0).unwrap();
    let is = esscher_is(&d, &fe, &e, 100_000, 4).unwrap();
    let naive = naive_mc(&d, &e, 10_000_000, 5).unwrap();
    assert_agree(&is, &naive, 3.0);
}

#[test]
fn shift_agrees_with_esscher() {
    let (d, fe) = exp2();
    let e = EventSpec::tail(5, 3.0).unwrap();
    let is = esscher_is(&d, &fe, &e, 1_000_000, 6).unwrap();
    let shift = shift_is(&d, &e, 1_000_000, 7).unwrap();
    assert_agree(&shift, &is, 3.0);
}

#[test]
fn estimators_pairwise_unbiased_on_fixtures() {
    let (e2, fe2) = exp2();
    let (g4, fg4) = gauss4();
    let fixtures = [
        (e2.clone(), fe2.clone(), EventSpec::tail(5, 1.0).unwrap()),
        (e2, fe2, EventSpec::ball(10, 1.0, 0.5).unwrap()),
        (g4.clone(), fg4.clone(), EventSpec::tail(10, 0.5).unwrap()),
        (g4, fg4, EventSpec::lower_tail(4, 1.0).unwrap()),
    ];
    for (i, (d, fe, e)) in fixtures.iter().enumerate() {
        let seed = 100 + 10 * i as u64;
        let naive = naive_mc(d, e, 400_000, seed).unwrap();
        assert!(naive.estimate >= 1e-4, "{e:?}: fixture too rare");
        let ess = esscher_is(d, fe, e, 400_000, seed + 1).unwrap();
        let shift = shift_is(d, e, 400_000, seed + 2).unwrap();
        assert_agree(&naive, &ess, 3.0);
        assert_agree(&naive, &shift, 3.0);
        assert_agree(&ess, &shift, 3.0);
    }
}

#[test]
fn esscher_beats_shift_at_n_100() {
    let (d, fe) = exp2();
    let e = EventSpec::tail(100, 1.0).unwrap();
    let is = esscher_is(&d, &fe, &e, 100_000, 8).unwrap();
    let shift = shift_is(&d, &e, 100_000, 9).unwrap();
    let naive = naive_mc(&d, &e, 100_000, 10).unwrap();
    println!(
        "relative SE at n=100, x=1: esscher {:.4}, shift {:.4}, naive {:.4}",
        is.relative_error(),
        shift.relative_error(),
        naive.relative_error()
    );
    assert!(is.relative_error() <= shift.relative_error());
}

#[test]
fn results_are_seed_deterministic_across_thread_counts() {
    let (d, fe) = gauss4();
    let e = EventSpec::tail(20, 1.0).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                (
                    naive_mc(&d, &e, 50_000, 77).unwrap(),
                    esscher_is(&d, &fe, &e, 50_000, 77).unwrap(),
                    shift_is(&d, &e, 50_000, 77).unwrap(),
                )
            })
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one, four);
    assert_eq!(one.1.estimate.to_bits(), four.1.estimate.to_bits());
    assert_ne!(one.1, esscher_is(&d, &fe, &e, 50_000, 78).unwrap());
}

#[test]
fn rate_sweep_singleton_and_theory_rate() {
    let (d, fe) = gauss4();
    let sweep = rate_sweep(&d, &fe, 1.0, &[30], 5_000, 1).unwrap();
    assert_eq!(sweep.len(), 1);
    assert_eq!(sweep[0].n, 30);
    assert!((sweep[0].theory_rate - 0.5).abs() < 1e-15);
    assert!(rate_sweep(&d, &fe, 1.0, &[], 5_000, 1).is_err());
    assert!(rate_sweep(&d, &fe, 1.0, &[10, 10], 5_000, 1).is_err());
}

#[test]
fn tchebychev_bound_dominates_closed_tails() {
    let (e2, fe2) = exp2();
    let (g4, fg4) = gauss4();
    for (d, fe) in [(e2, fe2), (g4, fg4)] {
        let xi = fe.xi();
        for frac in [0.05, 0.2, 0.5, 0.8, 0.95, 0.999] {
            for z in [0.1, 1.0, 4.0, 25.0, 100.0, 1e4, 1e6] {
                let bound = subexp_tchebychev_bound(&fe, frac * xi, z).unwrap();
                let tail = d.tail(z).unwrap();
                assert!(tail <= bound, "{d}: eta {}, z {z}: {tail} > {bound}", frac * xi);
            }
        }
    }
}

#[test]
fn symmetrized_bound_dominates_tilted_deviation() {
    let (_, fe) = exp2();
    let (eta, k, a) = (0.5, 0.2, 5.0);
    let bound = symmetrized_tchebychev_bound(&fe, k, a, eta).unwrap();
    let law = TiltedLaw::new(&fe, eta).unwrap();
    let mean = fe.lambda_prime(eta).unwrap();
    let mut rng = RandomStream::new(12);
    let draws = 1_000_000;
    let hits = (0..draws)
        .filter(|_| (phi(law.alpha(), law.sample(&mut rng).unwrap()) - mean).abs() > a)
        .count();
    let p = hits as f64 / draws as f64;
    assert!(p <= bound, "{p} > {bound}");

    let (_, fg) = gauss4();
    let law = TiltedLaw::new(&fg, 0.25).unwrap();
    let mean = fg.lambda_prime(0.25).unwrap();
    let zs: Vec<f64> = (0..200_000).map(|_| phi(law.alpha(), law.sample(&mut rng).unwrap())).collect();
    for a in [0.5, 1.0, 2.0, 5.0, 10.0] {
        let p = zs.iter().filter(|z| (*z - mean).abs() > a).count() as f64 / zs.len() as f64;
        let bound = symmetrized_tchebychev_bound(&fg, 0.2, a, 0.25).unwrap();
        assert!(p <= bound, "a = {a}: {p} > {bound}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // shift weights have infinite variance for densities singular at 0, so
    // the sanity band is only a property of the other two estimators
    #[test]
    fn result_invariants(n in 1u64..30, x in 0.2f64..3.0, seed in 0u64..1_000, esscher in any::<bool>()) {
        let (d, fe) = exp2();
        let e = EventSpec::tail(n, x).unwrap();
        let r = if esscher {
            esscher_is(&d, &fe, &e, 3_000, seed).unwrap()
        } else {
            naive_mc(&d, &e, 3_000, seed).unwrap()
        };
        prop_assert!(r.estimate - 10.0 * r.standard_error >= -0.5);
        prop_assert!(r.estimate + 10.0 * r.standard_error <= 1.5);
        prop_assert!(r.standard_error >= 0.0);
        if let Some(ess) = r.effective_sample_size {
            prop_assert!(ess <= r.replications as f64);
        }
        prop_assert_eq!(r.to_csv_row().split(',').count(), 12);
    }

    #[test]
    fn shift_result_shape(n in 1u64..30, x in 0.2f64..3.0, seed in 0u64..1_000) {
        let (d, _) = exp2();
        let r = shift_is(&d, &EventSpec::tail(n, x).unwrap(), 3_000, seed).unwrap();
        prop_assert!(r.estimate >= 0.0 && r.standard_error >= 0.0);
        prop_assert!(r.effective_sample_size.unwrap() <= r.replications as f64);
    }
}
