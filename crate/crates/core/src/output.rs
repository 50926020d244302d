//! CSV and JSON-lines writers. All floating-point values are written in
//! scientific notation with 17 significant digits.

use std::io::Write;

use serde::Serialize;

use crate::cost::CostFunction;
use crate::harness::{labels, AggregateResult};
use crate::events::Trajectory;
use crate::Result;

pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// Long format: `checkpoint_T,series,mean,stderr`, one row per series and checkpoint.
pub fn write_aggregate_csv<W: Write>(result: &AggregateResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["checkpoint_T", "series", "mean", "stderr"])?;
    for s in &result.series {
        for (k, t) in result.checkpoints.iter().enumerate() {
            w.write_record([
                t.to_string(),
                s.label.clone(),
                sci(s.mean[k]),
                sci(s.stderr[k]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Wide per-checkpoint summary of the trial means.
pub fn write_summary_csv<W: Write>(result: &AggregateResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "T",
        "mean_reg",
        "mean_ben",
        "mean_pot",
        "mean_reg/T",
        "mean_pot/T",
        "trial_count",
    ])?;
    let get = |label| &result.series(label).expect("empirical series").mean;
    let (reg, ben, pot) = (get(labels::REG), get(labels::BEN), get(labels::POT));
    let (reg_avg, pot_avg) = (get(labels::REG_AVG), get(labels::POT_AVG));
    for (k, t) in result.checkpoints.iter().enumerate() {
        w.write_record([
            t.to_string(),
            sci(reg[k]),
            sci(ben[k]),
            sci(pot[k]),
            sci(reg_avg[k]),
            sci(pot_avg[k]),
            result.trials.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-step dump: `t,event_kind,leaving_or_pair,f_est,f_opt,f_selfish,C_t,dF,dFstar`.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t",
        "event_kind",
        "leaving_or_pair",
        "f_est",
        "f_opt",
        "f_selfish",
        "C_t",
        "dF",
        "dFstar",
    ])?;
    for r in &traj.records {
        w.write_record([
            r.t.to_string(),
            r.event.kind_label().to_owned(),
            r.event.to_string(),
            sci(r.f_est),
            sci(r.f_opt),
            sci(r.f_selfish),
            sci(r.c),
            sci(r.d_f),
            sci(r.d_fstar),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct FunctionRecord<'a> {
    t: u64,
    slot: usize,
    #[serde(flatten)]
    function: &'a CostFunction,
}

/// Cost functions held by each slot: the initial population at `t = 0`, then
/// one line per arrival.
pub fn write_functions_jsonl<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    let initial = traj
        .initial_functions
        .iter()
        .enumerate()
        .map(|(slot, f)| FunctionRecord { t: 0, slot, function: f });
    let arrivals = traj.arrivals.iter().map(|a| FunctionRecord {
        t: a.t,
        slot: a.slot,
        function: &a.function,
    });
    for rec in initial.chain(arrivals) {
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
