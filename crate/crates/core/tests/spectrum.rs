use std::f64::consts::PI;

use kapitza_core::dynamics::{evolve, AmplitudeField};
use kapitza_core::momentum::{fourier_coefficients, Level, MomentumDistribution, MomentumSpectrum};
use kapitza_core::params::{MediumSpec, ProbeFieldSpec, ProbeLevel, PumpFieldSpec, PumpMode};
use kapitza_core::spectroscopy::{
    find_resonances, off_diagonal_ratio, scan_spectrum, FullForm, SpectrumSource,
};
use proptest::collection::btree_map;
use proptest::prelude::*;

fn fig3_spectrum() -> MomentumSpectrum {
    let pump = PumpFieldSpec::default();
    let f = evolve(&AmplitudeField::ground_equal(512), &pump, PumpMode::Standing, 0.6).unwrap();
    fourier_coefficients(&f, 64).unwrap()
}

fn probe() -> ProbeFieldSpec {
    ProbeFieldSpec {
        level: ProbeLevel::One,
        ..ProbeFieldSpec::default()
    }
}

#[test]
fn transparent_medium_gives_flat_spectrum() {
    let spec = fig3_spectrum();
    let medium = MediumSpec {
        q_prime: 0.0,
        ..MediumSpec::default()
    };
    let mut p = probe();
    p.detuning_scan = p.aligned_scan(-25, 25, 100).into_iter().map(|d| d + 1e-7).collect();
    let s = scan_spectrum(SpectrumSource::Full(&spec), &medium, &p).unwrap();
    assert!(s.points.iter().all(|t| t.absorbance == 0.0 && t.abs_ratio() == 1.0));
    assert!(find_resonances(&s, &p).unwrap().is_empty());
}

#[test]
fn off_diagonal_part_fades_with_thickness() {
    let spec = fig3_spectrum();
    let p = probe();
    let between: Vec<f64> = (-20..20)
        .map(|m| p.resonance_center(m) + 0.5 * p.resonance_spacing())
        .collect();
    let thin = off_diagonal_ratio(&spec, 1.0, 6.0 * PI, &p, &between, 64).unwrap();
    let thick = off_diagonal_ratio(&spec, 1.0, 60.0 * PI, &p, &between, 64).unwrap();
    assert!(thin > 0.0);
    assert!(thick < thin / 5.0, "{thick} vs {thin}");
}

#[test]
fn off_diagonal_part_is_periodic_in_thickness() {
    let spec = fig3_spectrum();
    let p = probe();
    let d = p.resonance_center(3) + 0.3 * p.resonance_spacing();
    let a = FullForm::with_thickness(&spec, 1.0, 6.5 * PI, &p).off_diagonal_exponent(d).unwrap();
    let b = FullForm::with_thickness(&spec, 1.0, 60.5 * PI, &p).off_diagonal_exponent(d).unwrap();
    assert!((a - b).norm() < 1e-9 * a.norm());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Isolated lines come back at their centres with depth `w · u`.
    #[test]
    fn synthetic_lines_are_recovered(lines in btree_map(-12i64..=12, 0.05..1.0f64, 1..6)) {
        let total: f64 = lines.values().sum();
        let mut dist = MomentumDistribution::zeros(16);
        for (&m, &w) in &lines {
            dist.add(Level::G1, m, w / total).unwrap();
        }
        let mut p = probe();
        p.detuning_scan = p.aligned_scan(-14, 14, 100);
        let medium = MediumSpec { q_prime: 1e-9, ..MediumSpec::default() };
        let s = scan_spectrum(SpectrumSource::Diagonal(&dist), &medium, &p).unwrap();
        let found = find_resonances(&s, &p).unwrap();
        prop_assert_eq!(found.len(), lines.len());
        let u = s.metadata.unit_depth();
        for (r, (&m, &w)) in found.peaks.iter().zip(&lines) {
            prop_assert_eq!(r.m, m);
            prop_assert!((r.center - r.expected_center).abs() < p.gamma_relax);
            prop_assert!((r.depth / u - w / total).abs() < 0.03 * (w / total) + 0.01);
        }
    }

    /// The diagonal form is passive for any weights and detuning.
    #[test]
    fn diagonal_form_absorbs(
        lines in btree_map(-12i64..=12, 0.0..1.0f64, 1..8),
        d in -3e-3..3e-3f64,
    ) {
        let mut dist = MomentumDistribution::zeros(16);
        for (&m, &w) in &lines {
            dist.add(Level::G1, m, w).unwrap();
        }
        let mut p = probe();
        p.detuning_scan = vec![d];
        let s = scan_spectrum(SpectrumSource::Diagonal(&dist), &MediumSpec::default(), &p).unwrap();
        prop_assert!(s.points[0].absorbance >= 0.0);
        prop_assert!(s.points[0].abs_ratio() <= 1.0);
    }
}
