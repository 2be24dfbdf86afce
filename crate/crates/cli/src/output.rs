use std::collections::HashSet;
use std::io::Write;

use freqkey::protocol::{GroupedView, SiftedKey, Transcript};

pub const TRANSCRIPT_HEADER: [&str; 11] = [
    "slot",
    "alice_choice",
    "attack",
    "lost",
    "bob_setting",
    "clicked",
    "click_time_s",
    "bit_alice",
    "bit_bob",
    "disclosed",
    "in_key",
];

/// Seconds with 17 significant digits.
pub fn fmt_time(t: f64) -> String {
    format!("{t:.16e}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_transcript<W: Write>(
    out: W,
    transcript: &Transcript,
    grouped: &GroupedView,
    key: &SiftedKey,
) -> csv::Result<()> {
    let in_key: HashSet<u64> = key.positions.iter().copied().collect();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRANSCRIPT_HEADER)?;
    for e in &transcript.slots {
        let slot = e.plan.slot;
        w.write_record([
            slot.to_string(),
            e.plan.alice_choice.label().to_string(),
            e.action.tag(),
            e.lost.to_string(),
            e.record.setting.label().to_string(),
            e.record.clicked.to_string(),
            e.record.click_time.map(fmt_time).unwrap_or_default(),
            opt(e.plan.alice_choice.bit()),
            opt(e.record.bit_value),
            grouped.is_disclosed(slot).to_string(),
            in_key.contains(&slot).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Unquantized click times, for checking the detector binning.
pub fn write_raw_times<W: Write>(out: W, transcript: &Transcript) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot", "click_time_s", "raw_time_s"])?;
    for e in &transcript.slots {
        if let (Some(q), Some(raw)) = (e.record.click_time, e.record.raw_time) {
            w.write_record([e.plan.slot.to_string(), fmt_time(q), fmt_time(raw)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub const CURVES_HEADER: [&str; 5] = ["t", "p_info", "p_control", "p_gauss_info", "p_gauss_control"];

pub fn write_curves<W: Write>(out: W, rows: &[[f64; 5]]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVES_HEADER)?;
    for r in rows {
        w.write_record(r.iter().map(|&v| fmt_time(v)))?;
    }
    w.flush()?;
    Ok(())
}
