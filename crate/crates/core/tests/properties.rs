//! Property tests for the invariants of each module.

use aircomp::channel::{ChannelRealization, ImpairmentProfile, Tap};
use aircomp::constellation::{check_feasibility, pam_channelcomp, Constellation, FunctionTable, SumCompCode};
use aircomp::domain::{decompose, FunctionKind, FunctionSpec, Interval};
use aircomp::mimo::{
    aggregation_beamformer, random_orthonormal, rayleigh_matrix, subspace_matrix, trace_objective, CMatrix,
    MimoScenario,
};
use aircomp::modem::Quantizer;
use aircomp::ofdm::{predict_composite, receive_dft, superpose, Conditions, OfdmConfig};
use aircomp::power::{objective, solve_optimal_policy};
use aircomp::rng::{MasterSeed, Purpose};
use aircomp::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantizer_snap_is_idempotent(levels in 2usize..100, lo in -10.0f64..10.0, w in 0.1f64..20.0, x in -30.0f64..30.0) {
        let q = Quantizer::new(levels, Interval::new(lo, lo + w).unwrap()).unwrap();
        let s = q.snap(x);
        prop_assert_eq!(q.snap(s), s);
        prop_assert!(q.range.lo - 1e-12 <= s && s <= q.range.hi + 1e-12);
        if q.range.contains(x) {
            prop_assert!((s - x).abs() <= q.step() / 2.0 + 1e-12);
        }
    }

    #[test]
    fn decomposition_reproduces_exact_functions(values in prop::collection::vec(-5.0f64..5.0, 1..20)) {
        let k = values.len();
        for kind in [FunctionKind::Sum, FunctionKind::ArithmeticMean] {
            let spec = FunctionSpec::new(kind, Interval::new(-5.0, 5.0).unwrap(), k).unwrap();
            let d = decompose(&spec).unwrap();
            let truth = spec.evaluate(&values).unwrap();
            prop_assert!((d.compose(&values) - truth).abs() <= 1e-12 * truth.abs().max(1.0));
        }
    }

    #[test]
    fn substreams_are_reproducible(seed in any::<u64>(), trial in any::<u64>(), node in any::<u64>()) {
        let a: u64 = MasterSeed(seed).substream(trial, node, Purpose::Noise).random();
        let b: u64 = MasterSeed(seed).substream(trial, node, Purpose::Noise).random();
        let other: u64 = MasterSeed(seed).substream(trial, node, Purpose::Channel).random();
        prop_assert_eq!(a, b);
        prop_assert_ne!(a, other);
    }

    #[test]
    fn sumcomp_sum_decodes_exactly(base in 2usize..9, qam in any::<bool>(), seed in any::<u64>(), k in 1usize..12) {
        let levels = if qam { base * base } else { base };
        let code = SumCompCode::new(levels, base).unwrap();
        let mut rng = MasterSeed(seed).substream(0, 0, Purpose::Reading);
        let v: Vec<usize> = (0..k).map(|_| rng.random_range(0..levels)).collect();
        let y: Complex64 = v.iter().map(|&x| code.map(x).unwrap()).sum();
        prop_assert_eq!(code.decode(y, k), v.iter().sum::<usize>() as u64);
    }

    #[test]
    fn pam_constellation_is_feasible_for_sums(levels in 2usize..6, k in 1usize..4, budget in 0.1f64..4.0) {
        let inner: Vec<f64> = (0..levels).map(|i| i as f64).collect();
        let pts = pam_channelcomp(&inner, budget).unwrap();
        prop_assert!(pts.iter().all(|p| p.norm_sqr() <= budget * (1.0 + 1e-12)));
        let table = FunctionTable::from_levels(&inner, k, |v| v.iter().sum()).unwrap();
        let cons = Constellation::new(vec![pts; k], vec![budget; k], table).unwrap();
        prop_assert!(check_feasibility(&cons).unwrap().feasible);
    }

    #[test]
    fn power_policy_beats_every_denoising_factor(seed in any::<u64>(), k in 1usize..30, log_noise in -3.0f64..1.0, log_eta in -4.0f64..3.0) {
        let mut rng = MasterSeed(seed).substream(0, 0, Purpose::Channel);
        let h: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..3.0)).collect();
        let p: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..2.0)).collect();
        let sigma2 = 10f64.powf(log_noise);
        let policy = solve_optimal_policy(&h, &p, sigma2).unwrap();
        policy.check_structure(&h, &p).unwrap();
        let g: Vec<f64> = h.iter().zip(&p).map(|(h, p)| p * h * h).collect();
        let other = objective(10f64.powf(log_eta), &g, sigma2);
        prop_assert!(policy.objective <= other * (1.0 + 1e-12));
        prop_assert!(policy.powers.iter().zip(&p).all(|(x, cap)| *x <= cap * (1.0 + 1e-12)));
    }

    #[test]
    fn aggregation_beamformer_beats_random_combiners(seed in any::<u64>(), k in 1usize..5, nr in 2usize..6, nt in 1usize..4) {
        let mut rng = MasterSeed(seed).substream(0, 0, Purpose::Channel);
        let q = 1 + (seed as usize % nr.min(nt).min(2));
        let hs = (0..k).map(|_| rayleigh_matrix(nr, nt, &mut rng)).collect();
        let s = MimoScenario::new(hs, q, 1.0, 0.1).unwrap();
        let bf = aggregation_beamformer(&s).unwrap();
        let g = subspace_matrix(&s).unwrap();
        let star = trace_objective(&g, &bf.receive);
        let ff = bf.receive.adjoint() * &bf.receive - CMatrix::identity(q, q);
        prop_assert!(ff.iter().all(|v| v.norm() < 1e-10));
        for _ in 0..200 {
            let f = random_orthonormal(nr, q, &mut rng);
            prop_assert!(trace_objective(&g, &f) <= star * (1.0 + 1e-9));
        }
    }

    #[test]
    fn ofdm_pipeline_matches_closed_form(seed in any::<u64>(), k in 1usize..4, rx_to in -0.02f64..0.02) {
        let n = 8;
        let conf = OfdmConfig::new(n, 1.0, 0.2, 0.1).unwrap();
        let mut rng = MasterSeed(seed).substream(0, 0, Purpose::Impairment);
        let mut taps = Vec::new();
        let mut to = Vec::new();
        for _ in 0..k {
            let late = rng.random_range(0.0..0.05);
            let d = rng.random_range(late..conf.cp_duration);
            to.push(conf.backoff - rx_to - d);
            taps.push(vec![
                Tap { gain: c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)), delay: 0.0 },
                Tap { gain: c(rng.random_range(-0.5..0.5), 0.2), delay: late + 1e-3 },
            ]);
            if late + 1e-3 > d {
                taps.last_mut().unwrap().pop();
            }
        }
        let po: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
        let r = ChannelRealization::multipath(taps, 0.0).unwrap();
        let p = ImpairmentProfile::new(vec![0.0; k], to, po, rx_to, conf.backoff).unwrap();
        let a: Vec<Vec<Complex64>> = (0..k)
            .map(|_| (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
            .collect();
        let w = superpose(&a, &conf, &r, &p, &mut rng).unwrap();
        let y = receive_dft(&w, &conf, rx_to).unwrap();
        let m = predict_composite(&conf, &r, &p, Conditions::ALL).unwrap();
        let pred = m.apply(&a).unwrap();
        let gap = y.iter().zip(&pred).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
        prop_assert!(gap < 1e-9, "gap {}", gap);
    }
}
