use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::SessionConfig;
use crate::adversary::{AttackAction, AttackStrategy, Eve};
use crate::channel::propagate;
use crate::error::Result;
use crate::measurement::{sample_outcome, DetectionRecord, MeasurementSetting};
use crate::par::Execution;
use crate::rng::{stream, Role};
use crate::source::excite;

/// State Alice prepares in a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AliceChoice {
    Control,
    Zero,
    One,
}

impl AliceChoice {
    pub const ALL: [AliceChoice; 3] = [AliceChoice::Control, AliceChoice::Zero, AliceChoice::One];

    pub fn info(bit: u8) -> Self {
        if bit == 0 {
            AliceChoice::Zero
        } else {
            AliceChoice::One
        }
    }

    pub fn bit(&self) -> Option<u8> {
        match self {
            AliceChoice::Control => None,
            AliceChoice::Zero => Some(0),
            AliceChoice::One => Some(1),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            AliceChoice::Control => "control",
            AliceChoice::Zero => "zero",
            AliceChoice::One => "one",
        }
    }

    pub(crate) fn index(&self) -> usize {
        *self as usize
    }
}

/// Bob's setting without its detector parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SettingKind {
    E0,
    E1,
    Edt,
}

impl SettingKind {
    pub const ALL: [SettingKind; 3] = [SettingKind::E0, SettingKind::E1, SettingKind::Edt];

    pub fn of(setting: &MeasurementSetting) -> Self {
        match setting {
            MeasurementSetting::FreqE0 => SettingKind::E0,
            MeasurementSetting::FreqE1 => SettingKind::E1,
            MeasurementSetting::TimeOfArrival(_) => SettingKind::Edt,
        }
    }

    pub(crate) fn index(&self) -> usize {
        *self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotPlan {
    pub slot: u64,
    pub alice_choice: AliceChoice,
    /// Start of the slot's time window.
    pub slot_start: f64,
    /// Emission time, inside the excitation pulse at the start of the slot.
    pub t0: f64,
}

/// Everything that happened in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotEntry {
    pub plan: SlotPlan,
    pub action: AttackAction,
    pub lost: bool,
    pub record: DetectionRecord,
}

/// Full log of a session, one entry per slot in slot order.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub config_hash: String,
    pub strategy: AttackStrategy,
    pub slots: Vec<SlotEntry>,
}

impl Transcript {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

fn pick<R: Rng + ?Sized, T: Copy>(rng: &mut R, options: [(f64, T); 3]) -> T {
    let u = rng.random::<f64>();
    let mut acc = 0.0;
    for (p, value) in options {
        acc += p;
        if u < acc {
            return value;
        }
    }
    // u landed in the rounding gap above the last partial sum
    options.iter().rev().find(|(p, _)| *p > 0.0).map_or(options[2].1, |o| o.1)
}

/// Alice's and Bob's independent choices for `slot`.
pub fn plan_slot(config: &SessionConfig, slot: u64) -> Result<(SlotPlan, MeasurementSetting)> {
    let a = config.alice_probs;
    let alice_choice = pick(
        &mut stream(config.seed, Role::Alice, slot),
        [(a.control, AliceChoice::Control), (a.zero, AliceChoice::Zero), (a.one, AliceChoice::One)],
    );
    let b = config.bob_probs;
    let setting = pick(
        &mut stream(config.seed, Role::Bob, slot),
        [
            (b.e0, MeasurementSetting::FreqE0),
            (b.e1, MeasurementSetting::FreqE1),
            (b.edt, MeasurementSetting::TimeOfArrival(config.timing()?)),
        ],
    );
    let slot_start = slot as f64 * config.slot_duration()?;
    let t0 = excite(slot_start, &config.source, &mut stream(config.seed, Role::Source, slot));
    Ok((
        SlotPlan {
            slot,
            alice_choice,
            slot_start,
            t0,
        },
        setting,
    ))
}

/// `plan_session`: every slot's plan and Bob's settings.
pub fn plan_session(config: &SessionConfig) -> Result<(Vec<SlotPlan>, Vec<MeasurementSetting>)> {
    config.validate()?;
    let planned: Result<Vec<_>> = (0..config.n_slots).map(|s| plan_slot(config, s)).collect();
    Ok(planned?.into_iter().unzip())
}

/// `run_session` with the default execution strategy.
pub fn run_session(config: &SessionConfig, strategy: AttackStrategy) -> Result<Transcript> {
    run_session_with(config, strategy, Execution::default())
}

/// Build, attack, propagate and detect every slot.
///
/// Each slot draws from its own random streams, so the transcript does not
/// depend on `execution`.
pub fn run_session_with(config: &SessionConfig, strategy: AttackStrategy, execution: Execution) -> Result<Transcript> {
    config.validate()?;
    let factory = config.factory()?;
    let detector = config.detector()?;
    let eve = Eve::new(strategy, factory);
    let templates = [factory.control(0.0)?, factory.info(0, 0.0)?, factory.info(1, 0.0)?];
    let seed = config.seed;

    let run_slot = |slot: usize| -> Result<SlotEntry> {
        let slot = slot as u64;
        let (plan, setting) = plan_slot(config, slot)?;
        let carrier = templates[plan.alice_choice.index()].at(plan.t0);
        let (carrier, action) = eve.intercept(&carrier, &mut stream(seed, Role::Eve, slot))?;
        let arrived = propagate(&carrier, &config.channel, &mut stream(seed, Role::Channel, slot));
        let record = sample_outcome(
            arrived.as_ref(),
            setting,
            &detector,
            slot,
            plan.slot_start,
            &mut stream(seed, Role::Detector, slot),
        )?;
        Ok(SlotEntry {
            plan,
            action,
            lost: arrived.is_none(),
            record,
        })
    };

    let slots: Result<Vec<SlotEntry>> = execution.map_indexed(config.n_slots as usize, run_slot).into_iter().collect();
    Ok(Transcript {
        config_hash: config.canonical_hash(),
        strategy,
        slots: slots?,
    })
}
