use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::SessionConfig;
use super::session::{AliceChoice, SettingKind, Transcript};
use crate::measurement::MeasurementSetting;
use crate::rng::{stream, Role};

/// What crosses the public channel. Only slot indices and Alice's disclosed
/// states; nothing ties a key position to Bob's projector.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PublicRecord {
    /// Every control slot.
    pub disclosed_control: Vec<u64>,
    /// Disclosed information slots with the bit Alice sent.
    pub disclosed_info: Vec<(u64, u8)>,
    /// Slots where Bob used a frequency setting and his detector fired.
    pub bob_frequency_clicks: Vec<u64>,
}

impl PublicRecord {
    pub fn disclosed_count(&self) -> usize {
        self.disclosed_control.len() + self.disclosed_info.len()
    }
}

/// Bob's sorting of the disclosed slots: three groups by Alice's state, each
/// split by his own setting.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroupedView {
    pub public: PublicRecord,
    groups: [[Vec<u64>; 3]; 3],
}

impl GroupedView {
    pub fn slots(&self, alice: AliceChoice, bob: SettingKind) -> &[u64] {
        &self.groups[alice.index()][bob.index()]
    }

    /// All disclosed slots in Alice's group `alice`.
    pub fn group(&self, alice: AliceChoice) -> impl Iterator<Item = u64> + '_ {
        self.groups[alice.index()].iter().flatten().copied()
    }

    pub fn is_disclosed(&self, slot: u64) -> bool {
        self.public.disclosed_control.binary_search(&slot).is_ok()
            || self.public.disclosed_info.binary_search_by_key(&slot, |&(s, _)| s).is_ok()
    }
}

/// `disclose_and_group`: Alice announces all control slots and each
/// information slot with probability `info_disclosure_fraction`; Bob sorts
/// the announced slots and names the slots of his frequency clicks.
pub fn disclose_and_group(transcript: &Transcript, config: &SessionConfig) -> GroupedView {
    let mut view = GroupedView::default();
    for entry in &transcript.slots {
        let slot = entry.plan.slot;
        let choice = entry.plan.alice_choice;
        let disclosed = match choice.bit() {
            None => {
                view.public.disclosed_control.push(slot);
                true
            }
            Some(bit) => {
                let mut rng = stream(config.seed, Role::Disclosure, slot);
                let d = rng.random::<f64>() < config.info_disclosure_fraction;
                if d {
                    view.public.disclosed_info.push((slot, bit));
                }
                d
            }
        };
        if disclosed {
            view.groups[choice.index()][SettingKind::of(&entry.record.setting).index()].push(slot);
        }
        if entry.record.clicked && !matches!(entry.record.setting, MeasurementSetting::TimeOfArrival(_)) {
            view.public.bob_frequency_clicks.push(slot);
        }
    }
    view
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SiftedKey {
    pub positions: Vec<u64>,
    pub bits: Vec<u8>,
}

impl SiftedKey {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Positions where the two keys hold different bits.
    pub fn mismatches(&self, other: &SiftedKey) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count()
            + self.len().abs_diff(other.len())
    }
}

/// `sift`: undisclosed information slots among Bob's announced frequency clicks.
pub fn sift(transcript: &Transcript, grouped: &GroupedView) -> (SiftedKey, SiftedKey) {
    let mut alice = SiftedKey::default();
    let mut bob = SiftedKey::default();
    for &slot in &grouped.public.bob_frequency_clicks {
        let entry = &transcript.slots[slot as usize];
        let Some(sent) = entry.plan.alice_choice.bit() else { continue };
        if grouped.is_disclosed(slot) {
            continue;
        }
        let Some(read) = entry.record.bit_value else { continue };
        alice.positions.push(slot);
        alice.bits.push(sent);
        bob.positions.push(slot);
        bob.bits.push(read);
    }
    (alice, bob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::AttackStrategy;
    use crate::protocol::session::run_session;

    fn session(n: u64, seed: u64, fraction: f64) -> (Transcript, GroupedView) {
        let mut c = SessionConfig::reference(n, seed);
        c.info_disclosure_fraction = fraction;
        let t = run_session(&c, AttackStrategy::None).unwrap();
        let g = disclose_and_group(&t, &c);
        (t, g)
    }

    #[test]
    fn full_disclosure_leaves_no_key() {
        let (t, g) = session(3000, 1, 1.0);
        assert_eq!(g.public.disclosed_count(), t.len());
        assert!(sift(&t, &g).0.is_empty());
    }

    #[test]
    fn control_slots_land_in_the_control_group() {
        let (t, g) = session(3000, 2, 0.25);
        let grouped: Vec<u64> = {
            let mut v: Vec<u64> = g.group(AliceChoice::Control).collect();
            v.sort_unstable();
            v
        };
        assert_eq!(grouped, g.public.disclosed_control);
        for s in grouped {
            assert_eq!(t.slots[s as usize].plan.alice_choice, AliceChoice::Control);
        }
    }

    #[test]
    fn disclosed_info_fraction() {
        let (t, g) = session(15_000, 3, 0.5);
        let info = t.slots.iter().filter(|e| e.plan.alice_choice != AliceChoice::Control).count() as f64;
        let got = g.public.disclosed_info.len() as f64;
        assert!((got - 0.5 * info).abs() < 3.0 * (0.25 * info).sqrt(), "{got} of {info}");
    }

    #[test]
    fn keys_agree_and_avoid_disclosed_slots() {
        let (t, g) = session(9000, 4, 0.25);
        let (a, b) = sift(&t, &g);
        assert_eq!(a, b);
        assert!(a.positions.windows(2).all(|w| w[0] < w[1]));
        for &p in &a.positions {
            assert!(!g.is_disclosed(p));
            assert_ne!(t.slots[p as usize].plan.alice_choice, AliceChoice::Control);
        }
    }

    #[test]
    fn key_shrinks_with_disclosure() {
        let lengths: Vec<usize> = [0.0, 0.25, 0.5, 1.0]
            .iter()
            .map(|&f| {
                let (t, g) = session(6000, 5, f);
                sift(&t, &g).0.len()
            })
            .collect();
        assert!(lengths.windows(2).all(|w| w[0] >= w[1]), "{lengths:?}");
    }

    #[test]
    fn public_record_carries_no_projector_identity() {
        let (_, g) = session(2000, 6, 0.25);
        let v = serde_json::to_value(&g.public).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["bob_frequency_clicks", "disclosed_control", "disclosed_info"]);
        // index lists only
        assert!(v["bob_frequency_clicks"].as_array().unwrap().iter().all(|x| x.is_u64()));
    }
}
