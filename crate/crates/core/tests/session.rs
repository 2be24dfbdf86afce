use freqkey::adversary::AttackStrategy;
use freqkey::measurement::MeasurementSetting;
use freqkey::protocol::{disclose_and_group, plan_session, run_session, sift, AliceChoice, SessionConfig};

fn three_sigma(count: f64, n: f64, p: f64) -> bool {
    (count - n * p).abs() <= 3.0 * (n * p * (1.0 - p)).sqrt()
}

#[test]
fn uniform_choices_are_balanced() {
    let c = SessionConfig::reference(90_000, 21);
    let (plans, settings) = plan_session(&c).unwrap();
    for choice in AliceChoice::ALL {
        let k = plans.iter().filter(|p| p.alice_choice == choice).count() as f64;
        assert!(three_sigma(k, 9e4, 1.0 / 3.0), "{choice:?}: {k}");
    }
    let edt = settings
        .iter()
        .filter(|s| matches!(s, MeasurementSetting::TimeOfArrival(_)))
        .count() as f64;
    assert!(three_sigma(edt, 9e4, 1.0 / 3.0));
    assert_eq!(plan_session(&c).unwrap().0, plans);
}

#[test]
fn zero_state_always_fires_e0_with_bit_zero() {
    let t = run_session(&SessionConfig::reference(30_000, 22), AttackStrategy::None).unwrap();
    let hits: Vec<_> = t
        .slots
        .iter()
        .filter(|e| e.plan.alice_choice == AliceChoice::Zero && e.record.setting == MeasurementSetting::FreqE0)
        .collect();
    assert!(hits.len() > 3000);
    assert!(hits.iter().all(|e| e.record.clicked && e.record.bit_value == Some(0)));
}

#[test]
fn key_fraction_scales_with_transmittance() {
    for (eta, seed) in [(1.0, 23), (0.5, 24)] {
        let mut c = SessionConfig::reference(90_000, seed);
        c.info_disclosure_fraction = 0.0;
        c.channel.transmittance = eta;
        let t = run_session(&c, AttackStrategy::None).unwrap();
        let (a, b) = sift(&t, &disclose_and_group(&t, &c));
        assert_eq!(a.mismatches(&b), 0);
        assert!(three_sigma(a.len() as f64, 9e4, 2.0 / 9.0 * eta), "eta={eta}: {}", a.len());
    }
}

#[test]
fn identical_configs_give_identical_transcripts() {
    let c = SessionConfig::reference(5000, 25);
    assert_eq!(
        run_session(&c, AttackStrategy::InterceptFreq).unwrap(),
        run_session(&c, AttackStrategy::InterceptFreq).unwrap()
    );
    let other = SessionConfig { seed: 26, ..c.clone() };
    assert_ne!(
        run_session(&c, AttackStrategy::None).unwrap(),
        run_session(&other, AttackStrategy::None).unwrap()
    );
}

#[test]
fn frequency_attack_is_invisible_on_information_slots() {
    // Bob's detector draws from its own stream, so the eigenstate slots must match exactly
    let c = SessionConfig::reference(100_000, 27);
    let clean = run_session(&c, AttackStrategy::None).unwrap();
    let attacked = run_session(&c, AttackStrategy::InterceptFreq).unwrap();
    for (a, b) in clean.slots.iter().zip(&attacked.slots) {
        if a.plan.alice_choice != AliceChoice::Control {
            assert_eq!(a.record, b.record);
        }
    }
}

#[test]
fn time_attack_opens_the_wrong_projector() {
    let c = SessionConfig::reference(60_000, 28);
    let t = run_session(&c, AttackStrategy::InterceptTime).unwrap();
    let wrong: Vec<bool> = t
        .slots
        .iter()
        .filter(|e| e.plan.alice_choice == AliceChoice::Zero && e.record.setting == MeasurementSetting::FreqE1)
        .map(|e| e.record.clicked)
        .collect();
    let k = wrong.iter().filter(|&&x| x).count() as f64;
    assert!(three_sigma(k, wrong.len() as f64, 0.5), "{k} of {}", wrong.len());
}
