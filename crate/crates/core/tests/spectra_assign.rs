use nvspin_core::spectra::*;
use nvspin_core::transitions::{
    enumerate_transitions, filter_records, IntensityModel, TmeConvention, TransitionRecord,
};
use nvspin_core::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn records_608() -> Vec<TransitionRecord> {
    let sys = SpinSystem::new(&SpinSystemSpec::nv3c()).unwrap();
    let im = IntensityModel::new(&sys, TmeConvention::Magnitude).unwrap();
    enumerate_transitions(&sys, &im, 608.0).unwrap()
}

fn table_peaks() -> Vec<MeasuredPeak> {
    [
        (22.30, 1.24, 6.04e-6),
        (27.25, 0.53, 7.54e-5),
        (39.65, 2.80, 1.24e-4),
        (42.32, 4.49, 2.66e-6),
    ]
    .iter()
    .map(|&(nu_mhz, fwhm_mhz, amplitude)| MeasuredPeak {
        nu_mhz,
        fwhm_mhz,
        amplitude,
    })
    .collect()
}

#[test]
fn single_line_area() {
    let axis = FrequencyAxis::new(0.0, 40.0, 0.005).unwrap();
    let line = SpectralLine {
        nu_mhz: 20.0,
        fwhm_mhz: 0.8,
        amplitude: 3e-5,
    };
    let y = synthesize_lines(&[line], &axis);
    let area: f64 = y.iter().sum::<f64>() * axis.step_mhz;
    let expected = line.amplitude * line.sigma() * (2.0 * std::f64::consts::PI).sqrt();
    assert!((area / expected - 1.0).abs() < 0.01);
}

#[test]
fn synthesis_is_linear() {
    let axis = FrequencyAxis::new(0.0, 100.0, 0.1).unwrap();
    let a = SpectralLine {
        nu_mhz: 20.0,
        fwhm_mhz: 1.0,
        amplitude: 1.0,
    };
    let b = SpectralLine {
        nu_mhz: 70.0,
        fwhm_mhz: 2.0,
        amplitude: 0.5,
    };
    let both = synthesize_lines(&[a, b], &axis);
    let sa = synthesize_lines(&[a], &axis);
    let sb = synthesize_lines(&[b], &axis);
    for k in 0..both.len() {
        assert!((both[k] - sa[k] - sb[k]).abs() < 1e-15);
    }
}

#[test]
fn spectrum_at_608_gauss_has_resolved_lines() {
    let recs = records_608();
    let axis = FrequencyAxis::new(10.0, 80.0, 0.01).unwrap();
    let trace = synthesize_spectrum(&recs, &axis, &LinewidthModel::default(), 1e-6).unwrap();
    assert!(trace.intensity.iter().all(|&x| x >= 0.0));
    assert!(trace.local_maxima(0.0).len() >= 4);
    assert_eq!(trace.b_gauss, Some(608.0));
}

#[test]
fn table_peaks_at_608_gauss_are_all_assigned() {
    let predicted = filter_records(&records_608(), 1e-6, None, None);
    let out = assign_peaks(&table_peaks(), &predicted, DEFAULT_ASSIGN_WINDOW_MHZ).unwrap();
    assert!(out
        .iter()
        .all(|a| a.is_assigned() && a.distance_mhz.unwrap() <= 5.0));
    let mut pairs: Vec<_> = out.iter().map(|a| (a.level_i, a.level_f)).collect();
    pairs.sort();
    pairs.dedup();
    assert_eq!(pairs.len(), 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn assignment_ignores_prediction_order(seed in any::<u64>()) {
        let predicted = filter_records(&records_608(), 1e-6, Some(5.0), Some(90.0));
        let mut shuffled = predicted.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = assign_peaks(&table_peaks(), &predicted, 5.0).unwrap();
        let b = assign_peaks(&table_peaks(), &shuffled, 5.0).unwrap();
        prop_assert_eq!(a, b);
    }
}
