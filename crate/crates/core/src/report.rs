//! Fixed-format metric outputs: per-task, per-device, assignment, and
//! controller CSVs plus the line-delimited broadcast log. Column order is
//! fixed and floats print at 9 significant digits so identical runs yield
//! byte-identical files.

use crate::engine::{RunResult, RunSummary};
use std::fmt::Write as _;

/// 9 significant digits in scientific notation; infinities print as `inf`.
pub fn format_float(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.8e}")
}

pub fn tasks_csv(result: &RunResult) -> String {
    let mut out = String::from("cycle,scheme,task_id,device_id,e2e_delay_s,deadline_hit,reward_paid\n");
    for cycle in &result.cycles {
        for task in &cycle.tasks {
            let device = task
                .device
                .map_or_else(|| "NONE".to_string(), |d| d.to_string());
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                cycle.cycle,
                result.scheme,
                task.task,
                device,
                format_float(task.e2e_delay),
                task.deadline_hit,
                format_float(task.reward_paid),
            );
        }
    }
    out
}

pub fn devices_csv(result: &RunResult) -> String {
    let mut out = String::from("cycle,device_id,payoff,energy_j\n");
    for cycle in &result.cycles {
        for record in &cycle.devices {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                cycle.cycle,
                record.device,
                format_float(record.payoff),
                format_float(record.energy),
            );
        }
    }
    out
}

pub fn assignments_csv(result: &RunResult) -> String {
    let mut out = String::from("cycle,device_id,server_id,distance\n");
    for record in &result.assignments {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            record.cycle,
            record.device,
            record.server,
            format_float(record.distance),
        );
    }
    out
}

pub fn controller_csv(result: &RunResult) -> String {
    let mut out = String::from("cycle,alpha1,alpha2,budget,loss_trans,loss_comp,misses\n");
    for record in &result.controller {
        let loss = |v: Option<f64>| v.map_or_else(String::new, format_float);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            record.cycle,
            format_float(record.alpha1),
            format_float(record.alpha2),
            format_float(record.budget),
            loss(record.loss_trans),
            loss(record.loss_comp),
            record.misses,
        );
    }
    out
}

/// Line-delimited JSON of every server broadcast, the format the privacy
/// audit consumes.
pub fn broadcast_log_jsonl(result: &RunResult) -> String {
    let mut out = String::new();
    for message in &result.broadcasts {
        let line = serde_json::to_string(message).expect("broadcast serializes");
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// One row of the combined summary: a run cell plus its grid coordinates.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub scheme: String,
    pub seed: u64,
    pub sweep_axis: String,
    pub sweep_value: String,
    pub summary: RunSummary,
}

pub const SUMMARY_HEADER: &str = "scheme,seed,sweep_axis,sweep_value,cycles,tasks_total,dhr,mean_e2e_delay_s,total_payoff,mean_device_payoff,total_energy_j,converged_fraction";

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for row in rows {
        let s = &row.summary;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            row.scheme,
            row.seed,
            row.sweep_axis,
            row.sweep_value,
            s.cycles,
            s.tasks_total,
            format_float(s.dhr),
            format_float(s.mean_e2e_delay),
            format_float(s.total_payoff),
            format_float(s.mean_device_payoff),
            format_float(s.total_energy),
            format_float(s.converged_fraction),
        );
    }
    out
}
