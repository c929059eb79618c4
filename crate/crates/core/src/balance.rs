//! Uncertainty-aware load balancing: an expected-distance metric over
//! disclosed location regions and a greedy round-robin device-to-server
//! assignment that keeps group sizes within one of each other.

use crate::model::Point;
use crate::privacy::DisclosedView;
use serde::{Deserialize, Serialize};

/// Device-to-server assignment for one cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    /// Server index per device index.
    pub server_of: Vec<usize>,
    /// Device indices per server index, in pick order.
    pub groups: Vec<Vec<usize>>,
}

impl Assignment {
    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }
}

/// One row of the assignment trace emitted into the metrics stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub cycle: u32,
    pub device: crate::model::DeviceId,
    pub server: crate::model::ServerId,
    pub distance: f64,
}

/// Balancing metric: expected distance from the disclosed location region
/// to the server, divided by the estimated spare compute capacity. Devices
/// with no spare capacity get an infinite distance and are picked last.
pub fn ulb_distance(
    view: &DisclosedView,
    server_location: Point,
    freq_hat: f64,
    usage_hat: f64,
) -> f64 {
    let expected = view.location_region.mean_distance(server_location);
    let capacity = freq_hat * (1.0 - usage_hat);
    if capacity <= 0.0 {
        f64::INFINITY
    } else {
        expected / capacity
    }
}

/// Greedy round-robin assignment: servers take turns in index order, each
/// claiming the unassigned device with the smallest distance to it (ties
/// to the lowest device index), until every device is assigned.
///
/// `distances[device][server]` must be finite or `+inf`, never NaN.
/// Each server works through a presorted list with a forward-only cursor,
/// so the whole pass is O(X log X) sorting plus O(X + Y) selection work
/// per server.
pub fn balance(distances: &[Vec<f64>], servers: usize) -> Assignment {
    assert!(servers > 0, "balance needs at least one server");
    let devices = distances.len();

    // per-server preference order
    let mut order: Vec<Vec<usize>> = (0..servers)
        .map(|s| {
            let mut devs: Vec<usize> = (0..devices).collect();
            devs.sort_by(|a, b| {
                distances[*a][s]
                    .partial_cmp(&distances[*b][s])
                    .expect("NaN distance")
                    .then(a.cmp(b))
            });
            devs
        })
        .collect();

    let mut taken = vec![false; devices];
    let mut cursor = vec![0usize; servers];
    let mut server_of = vec![0usize; devices];
    let mut groups = vec![Vec::new(); servers];
    let mut remaining = devices;
    while remaining > 0 {
        for s in 0..servers {
            if remaining == 0 {
                break;
            }
            let list = &mut order[s];
            while cursor[s] < list.len() && taken[list[cursor[s]]] {
                cursor[s] += 1;
            }
            let device = list[cursor[s]];
            taken[device] = true;
            server_of[device] = s;
            groups[s].push(device);
            remaining -= 1;
        }
    }
    Assignment { server_of, groups }
}
