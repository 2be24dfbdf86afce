//! Session orchestration: state choices, the quantum exchange, public
//! disclosure and key extraction.

mod config;
mod session;
mod sift;

pub use config::{AliceProbs, BobProbs, DetectorParams, ModelKind, SessionConfig};
pub use session::{
    plan_session, plan_slot, run_session, run_session_with, AliceChoice, SettingKind, SlotEntry, SlotPlan,
    Transcript,
};
pub use sift::{disclose_and_group, sift, GroupedView, PublicRecord, SiftedKey};
