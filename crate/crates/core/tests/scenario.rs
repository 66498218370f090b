use kapitza_core::dynamics::family_transfer;
use kapitza_core::measurement::{
    apply_family_transfer, classify, degenerate_cells, effective_distribution, realize_set, sample_atoms,
    AtomState, ClassifierContext, ExperimentProtocol, Hypothesis, ScenarioModel, Stages,
};
use kapitza_core::momentum::{Level, MomentumDistribution};
use kapitza_core::params::{ProbeLevel, SpecBundle};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bundle() -> SpecBundle {
    let mut b = SpecBundle::default();
    b.probe.level = ProbeLevel::Both;
    b
}

fn standing_protocol(n_realizations: usize) -> ExperimentProtocol {
    ExperimentProtocol {
        stages: Stages::StandingOnly,
        n_realizations,
        seed: 5,
        ..ExperimentProtocol::default()
    }
}

fn ctx(model: &ScenarioModel, protocol: &ExperimentProtocol) -> ClassifierContext {
    ClassifierContext {
        protocol: protocol.clone(),
        populated_count: model.populated_count(),
        probe: model.probe.clone(),
    }
}

fn ground_mean(d: &MomentumDistribution) -> f64 {
    let g: f64 = d.level_total(Level::G1) + d.level_total(Level::G2);
    d.m_values()
        .map(|m| m as f64 * (d.weight(Level::G1, m) + d.weight(Level::G2, m)))
        .sum::<f64>()
        / g
}

#[test]
fn seeded_sampler_fixture() {
    let mut d = MomentumDistribution::zeros(8);
    for (l, m) in [(Level::G1, -2), (Level::G1, 2), (Level::G2, 0), (Level::E, 1)] {
        d.add(l, m, 0.25).unwrap();
    }
    let expect = vec![
        AtomState::Definite { level: Level::G2, m: 0 },
        AtomState::Definite { level: Level::E, m: 1 },
        AtomState::Definite { level: Level::G1, m: 2 },
    ];
    for h in [Hypothesis::SUP_COLLAPSE, Hypothesis::NONSUP_COLLAPSE] {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        assert_eq!(sample_atoms(h, &d, 3, &mut rng).unwrap(), expect, "{h}");
    }
}

#[test]
fn collapsing_cells_show_few_equal_lines() {
    let model = ScenarioModel::new(&bundle(), &[]).unwrap();
    assert_eq!(model.populated_count(), 64);
    let protocol = standing_protocol(30);
    for h in [Hypothesis::SUP_COLLAPSE, Hypothesis::NONSUP_COLLAPSE, Hypothesis::NONSUP_NON_COLLAPSE] {
        let set = realize_set(&model, h, &protocol).unwrap();
        let mut distance = 0.0f64;
        for r in &set.realizations {
            let obs = &r.observations[0];
            assert!(obs.resonances.len() <= 3);
            let u = obs.spectrum.metadata.unit_depth() / 3.0;
            for p in &obs.resonances.peaks {
                let k = (p.depth / u).round();
                assert!(k >= 1.0 && (p.depth - k * u).abs() < 0.01 * k * u, "{h}: {}", p.depth / u);
            }
            distance = distance.max(obs.spectrum.distance(&set.realizations[0].observations[0].spectrum));
        }
        let scale = set.realizations[0].observations[0].spectrum.metadata.unit_depth();
        assert!(distance > 10.0 * 1e-9 * scale, "{h}: no spread between realizations");
    }
}

#[test]
fn superposed_non_collapsing_cell_is_bit_identical() {
    let model = ScenarioModel::new(&bundle(), &[0.646]).unwrap();
    for protocol in [
        standing_protocol(12),
        ExperimentProtocol {
            tau2_sweep: vec![0.646],
            n_realizations: 12,
            ..ExperimentProtocol::default()
        },
    ] {
        let set = realize_set(&model, Hypothesis::SUP_NON_COLLAPSE, &protocol).unwrap();
        let first = &set.realizations[0].observations;
        for r in &set.realizations[1..] {
            for (a, b) in r.observations.iter().zip(first) {
                assert_eq!(a.spectrum, b.spectrum);
            }
        }
        assert!(first[0].resonances.len() > 3);
    }
}

#[test]
fn large_sample_approaches_the_comb() {
    let model = ScenarioModel::new(&bundle(), &[]).unwrap();
    let protocol = ExperimentProtocol {
        n_atoms: 10_000,
        n_realizations: 1,
        ..standing_protocol(1)
    };
    let comb = realize_set(&model, Hypothesis::SUP_NON_COLLAPSE, &protocol).unwrap();
    let comb = &comb.realizations[0].observations[0];
    let u = comb.spectrum.metadata.unit_depth();
    for h in [Hypothesis::SUP_COLLAPSE, Hypothesis::NONSUP_COLLAPSE, Hypothesis::NONSUP_NON_COLLAPSE] {
        let set = realize_set(&model, h, &protocol).unwrap();
        let s = &set.realizations[0].observations[0].spectrum;
        for p in &comb.resonances.peaks {
            let i = s.points.iter().position(|t| t.detuning == p.center).unwrap();
            assert!((s.points[i].absorbance - p.depth).abs() < 0.02 * u, "{h} m = {}", p.m);
        }
    }
}

#[test]
fn family_ensemble_stays_nearly_centred() {
    let sweep = [0.3, 0.4, 0.5, 0.646, 0.8];
    let model = ScenarioModel::new(&bundle(), &sweep).unwrap();
    let w = model.standing_distribution();
    for (&t, shared) in sweep.iter().zip(model.traveling_distributions()) {
        let p = family_transfer(&model.pump, t).unwrap();
        let mut ensemble = MomentumDistribution::zeros(w.m_max);
        for (level, m, weight) in w.support().into_iter().filter(|s| s.1.abs() < w.m_max as i64) {
            let atom = apply_family_transfer(&[AtomState::Definite { level, m }], &p);
            let one = effective_distribution(&atom, w).unwrap();
            for (l2, m2, x) in one.support() {
                ensemble.add(l2, m2, weight * x).unwrap();
            }
        }
        assert!((ensemble.total() - w.total()).abs() < 1e-10);
        assert!(ground_mean(&ensemble).abs() < 0.7, "tau2 = {t}");
        assert!(ground_mean(shared).abs() > 3.5, "tau2 = {t}");
    }
}

#[test]
fn standing_only_verdicts() {
    let model = ScenarioModel::new(&bundle(), &[]).unwrap();
    let protocol = standing_protocol(20);
    for h in Hypothesis::ALL {
        let set = realize_set(&model, h, &protocol).unwrap();
        let v = classify(&set.spectra(), &ctx(&model, &protocol)).unwrap();
        if h == Hypothesis::SUP_NON_COLLAPSE {
            assert_eq!(v.candidate_cells, vec![h]);
        } else {
            assert_eq!(v.candidate_cells, degenerate_cells(), "{h}");
        }
    }
}

#[test]
fn many_atoms_leave_all_cells_open() {
    let model = ScenarioModel::new(&bundle(), &[]).unwrap();
    let protocol = ExperimentProtocol {
        n_atoms: 64,
        ..standing_protocol(10)
    };
    let set = realize_set(&model, Hypothesis::SUP_COLLAPSE, &protocol).unwrap();
    let v = classify(&set.spectra(), &ctx(&model, &protocol)).unwrap();
    assert!(!v.few_atom);
    assert_eq!(v.candidate_cells, Hypothesis::ALL.to_vec());
}

#[test]
fn traveling_protocol_separates_cells() {
    let protocol = ExperimentProtocol {
        seed: 17,
        ..ExperimentProtocol::default()
    };
    let model = ScenarioModel::new(&bundle(), &protocol.tau2_sweep).unwrap();
    for h in Hypothesis::ALL {
        let set = realize_set(&model, h, &protocol).unwrap();
        let v = classify(&set.spectra(), &ctx(&model, &protocol)).unwrap();
        assert_eq!(v.unique(), Some(h), "{:?}", v.features);
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let protocol = ExperimentProtocol {
        n_realizations: 8,
        probe_between: true,
        ..ExperimentProtocol::default()
    };
    let model = ScenarioModel::new(&bundle(), &protocol.tau2_sweep).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    for h in Hypothesis::ALL {
        let serial = one.install(|| realize_set(&model, h, &protocol)).unwrap();
        let parallel = realize_set(&model, h, &protocol).unwrap();
        assert_eq!(serial, parallel);
    }
}
