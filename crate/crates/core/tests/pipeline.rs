use fastsdr::config::{MetricSet, Precision, Solver};
use fastsdr::correlator::compute_correlations;
use fastsdr::metrics::{compute_filters_sdr, compute_filters_sir};
use fastsdr::oracle::{generate_mixture, oracle_bss_eval, MixtureSpec};
use fastsdr::signal::normalize_unit_norm;
use fastsdr::{bss_eval, si_sdr, synth, Error, EvalConfig, MultichannelSignal, Stage};
use proptest::prelude::*;

fn direct(taps: usize) -> EvalConfig {
    EvalConfig::default()
        .with_filter_length(taps)
        .with_solver(Solver::Direct)
}

fn scaled(sig: &MultichannelSignal, gains: &[f64]) -> MultichannelSignal {
    let chans = sig
        .channels()
        .zip(gains)
        .map(|(c, g)| c.iter().map(|v| v * g).collect())
        .collect();
    MultichannelSignal::new(chans, sig.sample_rate()).unwrap()
}

fn mixture(seed: u64, k: usize, m: usize, len: usize, noise: f64) -> (MultichannelSignal, MultichannelSignal) {
    let mut rng = synth::rng(seed);
    let refs = synth::white(&mut rng, k, len, 8000);
    let spec = MixtureSpec::random(&mut rng, k, m, 4, noise);
    let ests = generate_mixture(&refs, &spec, seed + 1).unwrap();
    (refs, ests)
}

#[test]
fn perfect_estimate_saturates_sdr() {
    let mut rng = synth::rng(1);
    let refs = synth::white(&mut rng, 2, 2000, 8000);
    let out = bss_eval(&refs, &refs, &direct(16)).unwrap();
    for k in 0..2 {
        assert!(out.cosine.c(k, k) > 1.0 - 1e-9);
        assert!(out.sdr.as_ref().unwrap()[k][k] > 80.0);
    }
    assert_eq!(out.permutation, Some(vec![Some(0), Some(1)]));
}

#[test]
fn delayed_estimate_puts_filter_peak_at_delay() {
    let mut rng = synth::rng(2);
    let refs = synth::white(&mut rng, 1, 3000, 8000);
    let s = refs.channel(0);
    let delayed: Vec<f64> = (0..s.len()).map(|t| if t >= 5 { s[t - 5] } else { 0.0 }).collect();
    let ests = MultichannelSignal::new(vec![delayed], 8000).unwrap();
    let refs_n = normalize_unit_norm(&refs).unwrap();
    let ests_n = normalize_unit_norm(&ests).unwrap();
    let corr = compute_correlations(&refs_n, &ests_n, 16).unwrap();
    let (filters, _) = compute_filters_sdr(&corr, &direct(16)).unwrap();
    let h = filters.h(0, 0);
    let peak = (0..16).max_by(|&a, &b| h[a].abs().total_cmp(&h[b].abs())).unwrap();
    assert_eq!(peak, 5);
    let out = bss_eval(&refs, &ests, &direct(16)).unwrap();
    assert!(out.sdr.unwrap()[0][0] > 25.0);
}

#[test]
fn single_source_joint_filters_equal_per_source_filters() {
    let (refs, ests) = mixture(3, 1, 2, 1500, 0.1);
    let corr = compute_correlations(&normalize_unit_norm(&refs).unwrap(), &normalize_unit_norm(&ests).unwrap(), 12).unwrap();
    let cfg = direct(12);
    let (h, _) = compute_filters_sdr(&corr, &cfg).unwrap();
    let (g, _) = compute_filters_sir(&corr, Some(&h), &cfg).unwrap();
    for m in 0..2 {
        for (a, b) in h.h(0, m).iter().zip(g.g(0, m).unwrap()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
    let out = bss_eval(&refs, &ests, &cfg).unwrap();
    for m in 0..2 {
        assert!((out.cosine.c(0, m) - out.cosine.d(m).unwrap()).abs() < 1e-10);
    }
}

#[test]
fn disjoint_references_decouple_the_joint_system() {
    let mut rng = synth::rng(4);
    let a = synth::white(&mut rng, 2, 1000, 8000);
    // A gap longer than the filter keeps every lagged cross-correlation at zero.
    let mut chans = vec![vec![0.0; 2020], vec![0.0; 2020]];
    chans[0][..1000].copy_from_slice(a.channel(0));
    chans[1][1020..].copy_from_slice(a.channel(1));
    let refs = MultichannelSignal::new(chans, 8000).unwrap();
    let spec = MixtureSpec::random(&mut rng, 2, 2, 3, 0.05);
    let ests = generate_mixture(&refs, &spec, 9).unwrap();
    let cfg = direct(8);
    let corr = compute_correlations(&normalize_unit_norm(&refs).unwrap(), &normalize_unit_norm(&ests).unwrap(), 8).unwrap();
    let (h, _) = compute_filters_sdr(&corr, &cfg).unwrap();
    let (g, _) = compute_filters_sir(&corr, Some(&h), &cfg).unwrap();
    for k in 0..2 {
        for m in 0..2 {
            for (x, y) in h.h(k, m).iter().zip(g.g(k, m).unwrap()) {
                assert!((x - y).abs() < 1e-9, "k={k} m={m}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn direct_path_matches_oracle() {
    for (seed, k, m) in [(10u64, 2usize, 2usize), (11, 3, 3), (12, 2, 3), (13, 3, 2)] {
        let (refs, ests) = mixture(seed, k, m, 400, 0.2);
        let cfg = direct(10);
        let fast = bss_eval(&refs, &ests, &cfg).unwrap();
        let slow = oracle_bss_eval(&refs, &ests, 10, cfg.epsilon()).unwrap();
        for r in 0..k {
            for e in 0..m {
                let o = slow[r][e];
                assert!((fast.sdr.as_ref().unwrap()[r][e] - o.sdr).abs() < 1e-8);
                assert!((fast.sir.as_ref().unwrap()[r][e] - o.sir).abs() < 1e-8);
                assert!((fast.sar.as_ref().unwrap()[e] - o.sar).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn every_solver_agrees_with_direct_when_converged() {
    let (refs, ests) = mixture(20, 2, 2, 3000, 0.3);
    let base = bss_eval(&refs, &ests, &direct(32)).unwrap();
    let mut cgd = EvalConfig::default().with_filter_length(32);
    cgd.cgd_iters = 200;
    cgd.cgd_tol = 1e-12;
    let lev = direct(32).with_solver(Solver::Levinson);
    for cfg in [cgd, lev] {
        let out = bss_eval(&refs, &ests, &cfg).unwrap();
        for (a, b) in out.sdr.unwrap().iter().flatten().zip(base.sdr.as_ref().unwrap().iter().flatten()) {
            assert!((a - b).abs() < 1e-6, "{:?}: {a} vs {b}", cfg.solver);
        }
        for (a, b) in out.sar.unwrap().iter().zip(base.sar.as_ref().unwrap()) {
            assert!((a - b).abs() < 1e-6, "{:?}: {a} vs {b}", cfg.solver);
        }
    }
}

#[test]
fn levinson_joint_system_is_reported_as_direct() {
    let (refs, ests) = mixture(21, 2, 2, 800, 0.1);
    let out = bss_eval(&refs, &ests, &direct(8).with_solver(Solver::Levinson)).unwrap();
    assert!(out.diagnostics.sdr_systems.iter().all(|r| r.solver == Solver::Levinson));
    assert!(out.diagnostics.sir_systems.iter().all(|r| r.solver == Solver::Direct));
    assert_eq!(out.diagnostics.fallbacks(), 0);
}

#[test]
fn swapped_estimates_are_realigned() {
    let (refs, ests) = mixture(30, 3, 3, 2000, 0.05);
    let swapped = ests.select_channels(&[2, 0, 1]).unwrap();
    let out = bss_eval(&refs, &swapped, &EvalConfig::default().with_filter_length(16)).unwrap();
    assert_eq!(out.permutation, Some(vec![Some(1), Some(2), Some(0)]));
    let aligned = out.aligned();
    assert_eq!(aligned.len(), 3);
    assert_eq!(aligned[0].estimate, 1);
}

#[test]
fn si_sdr_matches_textbook_formula() {
    let mut rng = synth::rng(40);
    let refs = synth::white(&mut rng, 1, 1000, 8000);
    let noise = synth::white(&mut rng, 1, 1000, 8000);
    let s = refs.channel(0);
    let est: Vec<f64> = s.iter().zip(noise.channel(0)).map(|(a, b)| 0.7 * a + 0.4 * b).collect();
    let alpha = s.iter().zip(&est).map(|(a, b)| a * b).sum::<f64>() / s.iter().map(|a| a * a).sum::<f64>();
    let target: f64 = s.iter().map(|a| (alpha * a).powi(2)).sum();
    let resid: f64 = s.iter().zip(&est).map(|(a, b)| (alpha * a - b).powi(2)).sum();
    let want = 10.0 * (target / resid).log10();
    let ests = MultichannelSignal::new(vec![est], 8000).unwrap();
    let got = si_sdr(&refs, &ests, &EvalConfig::default()).unwrap();
    assert!((got.sdr.unwrap()[0][0] - want).abs() < 1e-8);
}

#[test]
fn more_noise_means_lower_sdr() {
    let mut last = f64::INFINITY;
    for noise in [0.01, 0.1, 0.5, 2.0] {
        let (refs, ests) = mixture(50, 2, 2, 2000, noise);
        let out = bss_eval(&refs, &ests, &direct(8)).unwrap();
        let sar = out.sar.unwrap()[0];
        assert!(sar < last);
        last = sar;
    }
}

#[test]
fn sdr_only_skips_the_joint_system() {
    let (refs, ests) = mixture(60, 3, 3, 1500, 0.1);
    let out = bss_eval(&refs, &ests, &EvalConfig::default().with_filter_length(16).with_metrics(MetricSet::SDR_ONLY)).unwrap();
    assert_eq!(out.diagnostics.block_solves, 0);
    assert_eq!(out.diagnostics.toeplitz_solves, 9);
    assert!(out.sir.is_none() && out.sar.is_none());
    assert!(out.sdr.is_some() && out.permutation.is_some());
}

#[test]
fn single_precision_stays_close_to_double() {
    let (refs, ests) = mixture(70, 2, 2, 2000, 0.2);
    let cfg = direct(16);
    let d = bss_eval(&refs, &ests, &cfg).unwrap();
    let s = bss_eval(&refs, &ests, &cfg.clone().with_precision(Precision::Single)).unwrap();
    for (a, b) in d.sdr.unwrap().iter().flatten().zip(s.sdr.unwrap().iter().flatten()) {
        assert!((a - b).abs() < 1e-2, "{a} vs {b}");
    }
}

#[test]
fn errors_carry_their_stage() {
    let (refs, ests) = mixture(80, 2, 2, 500, 0.1);
    let short = MultichannelSignal::new(vec![vec![1.0; 400]; 2], 8000).unwrap();
    let err = bss_eval(&refs, &short, &direct(8)).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: Stage::Validate, .. }));
    assert!(matches!(err.root(), Error::LengthMismatch { .. }));

    let mut chans: Vec<Vec<f64>> = ests.channels().map(<[f64]>::to_vec).collect();
    chans[1].iter_mut().for_each(|v| *v = 0.0);
    let silent = MultichannelSignal::new(chans, 8000).unwrap();
    let err = bss_eval(&refs, &silent, &direct(8)).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: Stage::Normalize, .. }));
    assert!(matches!(err.root(), Error::ZeroSignal { channel: 1 }));

    let err = bss_eval(&refs, &ests, &direct(500)).unwrap_err();
    assert!(matches!(err.root(), Error::FilterTooLong { .. }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn metrics_are_scale_invariant(seed in 0u64..1000, a in 0.01f64..100.0, b in 0.01f64..100.0, c in 0.01f64..100.0) {
        let (refs, ests) = mixture(seed, 2, 2, 600, 0.3);
        let cfg = direct(6);
        let base = bss_eval(&refs, &ests, &cfg).unwrap();
        let out = bss_eval(&scaled(&refs, &[a, b]), &scaled(&ests, &[c, -a]), &cfg).unwrap();
        for (x, y) in base.sdr.unwrap().iter().flatten().zip(out.sdr.unwrap().iter().flatten()) {
            prop_assert!((x - y).abs() < 1e-7);
        }
        for (x, y) in base.sir.unwrap().iter().flatten().zip(out.sir.unwrap().iter().flatten()) {
            prop_assert!((x - y).abs() < 1e-7);
        }
        prop_assert_eq!(base.permutation, out.permutation);
    }
}
