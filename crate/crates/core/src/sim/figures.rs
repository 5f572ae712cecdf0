//! Scenario builders for the published experiment setups.

use serde::{Deserialize, Serialize};

use super::{csi_error_scenario, ChannelModel, DigitalScheme, InputDistribution, Scenario, SchemeChoice};
use crate::domain::{FunctionKind, FunctionSpec, Interval};
use crate::error::Result;
use crate::modem::SchemeConfig;

/// One labelled curve of a figure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigureSeries {
    pub label: String,
    pub scenario: Scenario,
}

/// SNR axis of the scheme comparisons, in dB.
pub const FIG7_SNR_DB: [f64; 7] = [-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0];

/// Precision of the geometric-mean approximation on integer inputs.
pub const GEOMEAN_P0: f64 = 1e6;

fn series(label: &str, function: FunctionSpec, scheme: SchemeChoice, levels: usize, trials: usize, seed: u64) -> FigureSeries {
    FigureSeries {
        label: label.to_string(),
        scenario: Scenario {
            name: label.to_string(),
            function,
            scheme,
            inputs: InputDistribution::Levels { count: levels },
            channel: ChannelModel::Awgn,
            snr_db: FIG7_SNR_DB.to_vec(),
            phase_deviation_deg: vec![0.0],
            num_nodes: None,
            trials,
            seed,
            epsilon: None,
        },
    }
}

fn sum_spec(k: usize) -> Result<FunctionSpec> {
    FunctionSpec::new(FunctionKind::Sum, Interval::new(1.0, 64.0)?, k)
}

fn geomean_spec(k: usize) -> Result<FunctionSpec> {
    FunctionSpec::new(FunctionKind::GeometricMean { p0: GEOMEAN_P0 }, Interval::new(1.0, 8.0)?, k)
}

/// `K = 10`: SumComp (64-QAM), ChannelComp and analog aggregation for the
/// sum of integers on `[1, 64]` and the geometric mean of integers on `[1, 8]`.
pub fn fig7a_scenarios(trials: usize, seed: u64) -> Result<Vec<FigureSeries>> {
    let k = 10;
    let sumcomp = SchemeChoice::Digital(DigitalScheme::SumComp { levels: 64, base: 8 });
    let analog = SchemeChoice::Modem(SchemeConfig::AnalogDa);
    Ok(vec![
        series("sum_comp/sum", sum_spec(k)?, sumcomp.clone(), 64, trials, seed),
        series(
            "channel_comp/sum",
            sum_spec(k)?,
            SchemeChoice::Digital(DigitalScheme::ChannelComp { levels: 64 }),
            64,
            trials,
            seed,
        ),
        series("analog_da/sum", sum_spec(k)?, analog.clone(), 64, trials, seed),
        series("sum_comp/geometric_mean", geomean_spec(k)?, sumcomp, 8, trials, seed),
        series(
            "channel_comp/geometric_mean",
            geomean_spec(k)?,
            SchemeChoice::Digital(DigitalScheme::ChannelComp { levels: 8 }),
            8,
            trials,
            seed,
        ),
        series("analog_da/geometric_mean", geomean_spec(k)?, analog, 8, trials, seed),
    ])
}

/// `K = 100`: TBMA with 64 tones against analog aggregation.
pub fn fig7b_scenarios(trials: usize, seed: u64) -> Result<Vec<FigureSeries>> {
    let k = 100;
    let tbma = SchemeChoice::Modem(SchemeConfig::TbmaFsk { levels: 64 });
    let analog = SchemeChoice::Modem(SchemeConfig::AnalogDa);
    Ok(vec![
        series("tbma_fsk/sum", sum_spec(k)?, tbma.clone(), 64, trials, seed),
        series("analog_da/sum", sum_spec(k)?, analog.clone(), 64, trials, seed),
        series("tbma_fsk/geometric_mean", geomean_spec(k)?, tbma, 8, trials, seed),
        series("analog_da/geometric_mean", geomean_spec(k)?, analog, 8, trials, seed),
    ])
}

/// `K = 10`, SNR 0/10/20/30 dB, maximum phase deviation 0° to 90°.
pub fn fig9_scenario(trials: usize, seed: u64) -> Result<Scenario> {
    let devs: Vec<f64> = (0..=9).map(|i| 10.0 * i as f64).collect();
    let mut s = csi_error_scenario(&[10], &[0.0, 10.0, 20.0, 30.0], &devs, trials, seed)?;
    s.name = "fig9".into();
    Ok(s)
}

/// `K = 1..10`, SNR 10/20 dB, maximum phase deviation 0°/30°/60°/90°.
pub fn fig10_scenario(trials: usize, seed: u64) -> Result<Scenario> {
    let ks: Vec<usize> = (1..=10).collect();
    let mut s = csi_error_scenario(&ks, &[10.0, 20.0], &[0.0, 30.0, 60.0, 90.0], trials, seed)?;
    s.name = "fig10".into();
    Ok(s)
}
