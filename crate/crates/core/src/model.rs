//! Shared domain types: devices, servers, tasks, per-cycle metrics.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Identifier of an end device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeviceId(pub u32);

/// Identifier of an edge server.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ServerId(pub u32);

/// Identifier of a task within a sensing cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub u32);

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ServerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A point in the 2-D plane, in abstract distance units. Serializes as a
/// two-element array so scenario files can write `location = [x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64)", into = "(f64, f64)")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

impl From<Point> for (f64, f64) {
    fn from(p: Point) -> Self {
        (p.x, p.y)
    }
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// True state of an end device. Only the privacy-masked view of the
/// frequency, usage, and location fields ever leaves the device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceState {
    pub id: DeviceId,
    /// CPU frequency in GHz.
    pub cpu_freq: f64,
    /// Background CPU usage, a fraction in [0, 1].
    pub cpu_usage: f64,
    pub location: Point,
    /// Computation power draw in watts.
    pub power_comp: f64,
    /// Transmission power coefficient, watts per byte/s carried.
    pub power_trans_per_byte: f64,
    /// Fraction of the cycle already committed to accepted work.
    pub utilization: f64,
}

impl DeviceState {
    /// Checks the field invariants, returning the offending field name.
    /// The negated comparisons are deliberate: they reject NaN too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if !(self.cpu_freq > 0.0) {
            return Err(("cpu_freq", format!("must be > 0, got {}", self.cpu_freq)));
        }
        if !(0.0..=1.0).contains(&self.cpu_usage) {
            return Err(("cpu_usage", format!("must lie in [0,1], got {}", self.cpu_usage)));
        }
        if !(self.utilization >= 0.0) {
            return Err(("utilization", format!("must be >= 0, got {}", self.utilization)));
        }
        if !(self.power_comp >= 0.0) {
            return Err(("power_comp", format!("must be >= 0, got {}", self.power_comp)));
        }
        if !(self.power_trans_per_byte >= 0.0) {
            return Err((
                "power_trans_per_byte",
                format!("must be >= 0, got {}", self.power_trans_per_byte),
            ));
        }
        Ok(())
    }
}

/// An edge server and the devices currently assigned to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeServer {
    pub id: ServerId,
    pub location: Point,
    pub assigned_devices: Vec<DeviceId>,
}

/// One computation unit of a sensing cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    /// Input data volume in bytes.
    pub input_volume: f64,
    /// Output data volume in bytes.
    pub output_volume: f64,
    /// Computation demand in giga-operations, so that
    /// `comp_complexity / (cpu_freq * (1 - cpu_usage))` is seconds.
    pub comp_complexity: f64,
    /// Transfer demand in abstract units (drives reward weighting only).
    pub trans_complexity: f64,
    pub algorithm_label: String,
    pub data_type_label: String,
    /// Reward in currency units, set by the reward controller each cycle.
    pub reward: f64,
}

/// Outcome of one task in one cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task: TaskId,
    pub device: Option<DeviceId>,
    /// End-to-end delay in seconds; infinite when the task was never run.
    pub e2e_delay: f64,
    pub deadline_hit: bool,
    pub reward_paid: f64,
}

/// Per-device outcome of one cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceRecord {
    pub device: DeviceId,
    pub payoff: f64,
    /// Energy spent executing and transmitting, in joules.
    pub energy: f64,
}

/// All outcomes of one sensing cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleMetrics {
    pub cycle: u32,
    pub tasks: Vec<TaskRecord>,
    pub devices: Vec<DeviceRecord>,
    /// Deadline hit rate: hits / total tasks (1.0 for an empty cycle).
    pub dhr: f64,
}

impl CycleMetrics {
    pub fn from_records(cycle: u32, tasks: Vec<TaskRecord>, devices: Vec<DeviceRecord>) -> Self {
        let hits = tasks.iter().filter(|t| t.deadline_hit).count();
        let dhr = if tasks.is_empty() {
            1.0
        } else {
            hits as f64 / tasks.len() as f64
        };
        Self { cycle, tasks, devices, dhr }
    }
}

/// Deadline-miss indicator: 1 iff the delay strictly exceeds the deadline.
/// The boundary `delay == deadline` counts as a hit.
pub fn deadline_indicator(delay: f64, deadline: f64) -> u8 {
    debug_assert!(deadline > 0.0);
    u8::from(delay > deadline)
}

/// Energy in joules for a compute phase plus a transfer phase.
///
/// The transfer power is `power_trans_per_byte` times the byte rate carried
/// during the transfer, so a transfer of fixed size costs energy
/// proportional to its size.
pub fn edge_cost(
    device: &DeviceState,
    compute_time: f64,
    trans_time: f64,
    trans_rate_bytes_per_s: f64,
) -> f64 {
    debug_assert!(compute_time >= 0.0 && trans_time >= 0.0);
    device.power_comp * compute_time
        + device.power_trans_per_byte * trans_rate_bytes_per_s * trans_time
}
