//! Statistical checks of the Monte Carlo engine and the closed forms it uses.

use aircomp::channel::complex_gaussian;
use aircomp::domain::{FunctionKind, FunctionSpec, Interval};
use aircomp::mimo::{aggregation_beamformer, mimo_mse, mimo_transmit_receive, rayleigh_matrix, MimoScenario};
use aircomp::modem::SchemeConfig;
use aircomp::power::{apply_policy, solve_optimal_policy};
use aircomp::rng::{MasterSeed, Purpose};
use aircomp::sim::{
    csi_error_scenario, fig7a_scenarios, fig7b_scenarios, run_scheme_comparison, run_sweep, run_sweep_with,
    simulate_point, ChannelModel, DigitalScheme, InputDistribution, RunOptions, Scenario, SchemeChoice,
};
use aircomp::Complex64;
use nalgebra::DVector;

fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn confidence_halfwidth_scales_as_inverse_root_n() {
    let base = csi_error_scenario(&[10], &[20.0], &[30.0], 4000, 21).unwrap();
    let hw = |n: usize| {
        let s = Scenario { trials: n, ..base.clone() };
        run_sweep(&s).unwrap().points[0].report.confidence_halfwidth
    };
    let (h1, h2, h4) = (hw(4000), hw(8000), hw(16000));
    let r2 = h1 / h2;
    let r4 = h1 / h4;
    assert!((r2 / 2f64.sqrt() - 1.0).abs() < 0.1, "N→2N ratio {r2}");
    assert!((r4 / 2.0 - 1.0).abs() < 0.1, "N→4N ratio {r4}");
}

#[test]
fn zero_deviation_matches_power_control_floor() {
    let s = csi_error_scenario(&[10], &[0.0, 10.0, 20.0, 30.0], &[0.0], 20_000, 22).unwrap();
    let r = run_sweep(&s).unwrap();
    let seed = MasterSeed(s.seed);
    for p in &r.points {
        let sigma2 = 10f64.powf(-p.snr_db / 10.0);
        // expected MSE given the channel is the policy objective, since the
        // readings have unit variance
        let floor: Vec<f64> = (0..s.trials as u64)
            .map(|t| {
                let mags: Vec<f64> = (0..10)
                    .map(|n| complex_gaussian(&mut seed.substream(t, n, Purpose::Channel), 1.0).norm())
                    .collect();
                solve_optimal_policy(&mags, &[1.0; 10], sigma2).unwrap().objective
            })
            .collect();
        let (f, _) = mean_se(&floor);
        let se = p.report.confidence_halfwidth / 1.96;
        assert!((p.report.mse - f).abs() < 3.0 * se + 1e-3 * f, "{} dB: {} vs {}", p.snr_db, p.report.mse, f);
    }
}

#[test]
fn schemes_reach_their_noise_free_floor_at_high_snr() {
    let spec = FunctionSpec::new(FunctionKind::Sum, Interval::new(1.0, 64.0).unwrap(), 10).unwrap();
    let schemes = vec![
        ("analog", SchemeChoice::Modem(SchemeConfig::AnalogDa), 1e-5),
        ("sumcomp", SchemeChoice::Digital(DigitalScheme::SumComp { levels: 64, base: 8 }), 0.0),
        ("channelcomp", SchemeChoice::Digital(DigitalScheme::ChannelComp { levels: 64 }), 0.0),
        // energy detection leaves a noise-magnitude bias in empty bins
        ("tbma", SchemeChoice::Modem(SchemeConfig::TbmaFsk { levels: 64 }), 1e-5),
        ("bitwise", SchemeChoice::Modem(SchemeConfig::DigitalBitwise { base: 2, digits: 6 }), 0.0),
    ];
    for (name, scheme, floor) in schemes {
        let s = Scenario {
            name: name.into(),
            function: spec.clone(),
            scheme,
            inputs: InputDistribution::Levels { count: 64 },
            channel: ChannelModel::Awgn,
            snr_db: vec![60.0],
            phase_deviation_deg: vec![0.0],
            num_nodes: None,
            trials: 2000,
            seed: 23,
            epsilon: None,
        };
        let r = run_sweep(&s).unwrap();
        assert!(r.points[0].report.nmse <= floor + 1e-12, "{name}: {:?}", r.points[0].report);
    }
    // the geometric mean keeps its decomposition error
    let geo = &fig7a_scenarios(2000, 24).unwrap()[5];
    assert_eq!(geo.label, "analog_da/geometric_mean");
    let s = Scenario {
        snr_db: vec![60.0],
        ..geo.scenario.clone()
    };
    let r = run_sweep(&s).unwrap();
    assert!(r.points[0].report.nmse < 1e-6, "{:?}", r.points[0].report);
}

#[test]
fn comparison_uses_identical_draws() {
    let base = fig7a_scenarios(500, 25).unwrap()[0].scenario.clone();
    let schemes = vec![
        ("analog".to_string(), SchemeChoice::Modem(SchemeConfig::AnalogDa)),
        ("sumcomp".to_string(), SchemeChoice::Digital(DigitalScheme::SumComp { levels: 64, base: 8 })),
        ("channelcomp".to_string(), SchemeChoice::Digital(DigitalScheme::ChannelComp { levels: 64 })),
    ];
    let out = run_scheme_comparison(&schemes, &base, &RunOptions::default()).unwrap();
    let digest = &out[0].1.metadata.stream_digest;
    assert!(out.iter().all(|(_, r)| &r.metadata.stream_digest == digest));
    let truths: Vec<Vec<f64>> = schemes
        .iter()
        .map(|(_, sc)| {
            let s = Scenario { scheme: sc.clone(), ..base.clone() };
            simulate_point(&s, 10, 0.0, 0.0, &RunOptions::default())
                .unwrap()
                .iter()
                .map(|o| o.0)
                .collect()
        })
        .collect();
    assert!(truths.windows(2).all(|w| w[0] == w[1]));
    let mut other = base.clone();
    other.seed += 1;
    let r = run_sweep_with(&other, &RunOptions::default()).unwrap();
    assert_ne!(&r.metadata.stream_digest, digest);
}

#[test]
fn tbma_and_analog_fall_with_snr_for_many_nodes() {
    for f in fig7b_scenarios(1000, 26).unwrap() {
        let r = run_sweep(&f.scenario).unwrap();
        let nmse: Vec<f64> = r.points.iter().map(|p| p.report.nmse).collect();
        assert!(nmse.windows(2).all(|w| w[1] <= w[0]), "{}: {nmse:?}", f.label);
        assert!(nmse[nmse.len() - 1] < nmse[0] / 10.0, "{}: {nmse:?}", f.label);
    }
}

#[test]
fn power_policy_monte_carlo_matches_objective() {
    let mut rng = MasterSeed(27).substream(0, 0, Purpose::Channel);
    let mags: Vec<f64> = (0..8).map(|_| complex_gaussian(&mut rng, 1.0).norm()).collect();
    let sigma2 = 0.3;
    let policy = solve_optimal_policy(&mags, &[1.0; 8], sigma2).unwrap();
    let trials = 40_000;
    let mut noise = MasterSeed(27).substream(0, 1, Purpose::Noise);
    let errs: Vec<f64> = (0..trials)
        .map(|_| {
            let s: Vec<f64> = (0..8).map(|_| complex_gaussian(&mut rng, 2.0).re).collect();
            let mean = s.iter().sum::<f64>() / 8.0;
            let est = apply_policy(&s, &policy, &mags, sigma2, &mut noise).unwrap();
            // the mean estimate carries 1/K of the sum error
            (est - mean).norm_sqr() * 64.0
        })
        .collect();
    let (m, se) = mean_se(&errs);
    assert!((m - policy.objective).abs() < 4.0 * se, "{m} ± {se} vs {}", policy.objective);
}

#[test]
fn mimo_monte_carlo_matches_mse() {
    let mut rng = MasterSeed(28).substream(0, 0, Purpose::Channel);
    let hs = (0..3).map(|_| rayleigh_matrix(4, 3, &mut rng)).collect();
    let s = MimoScenario::new(hs, 2, 1.0, 0.2).unwrap();
    let bf = aggregation_beamformer(&s).unwrap();
    let want = mimo_mse(&s, &bf).unwrap();
    let mut noise = MasterSeed(28).substream(0, 1, Purpose::Noise);
    let errs: Vec<f64> = (0..20_000)
        .map(|_| {
            let xs: Vec<DVector<Complex64>> = (0..3)
                .map(|_| DVector::from_fn(2, |_, _| complex_gaussian(&mut rng, 1.0)))
                .collect();
            let sum = xs.iter().fold(DVector::zeros(2), |a, x| a + x);
            let y = mimo_transmit_receive(&xs, &s, &bf, &mut noise).unwrap();
            (y - sum).norm_squared()
        })
        .collect();
    let (m, se) = mean_se(&errs);
    assert!((m - want).abs() < 4.0 * se, "{m} ± {se} vs {want}");
}
