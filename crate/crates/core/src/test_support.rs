//! Shared scenario builders for unit tests.

use crate::scenario::ScenarioConfig;

/// Two devices (one fast, one slow), one server, exact disclosure, small
/// tasks. `tasks_per_cycle` and `deadline` vary per test.
pub fn tiny_scenario(tasks_per_cycle: u32, deadline: f64) -> ScenarioConfig {
    let text = format!(
        r#"
        seed = 11
        cycles = 2
        deadline = {deadline}
        tasks_per_cycle = {tasks_per_cycle}

        [privacy]
        preset = "low"

        [taskgen]
        input_volume = {{ min = 1e4, max = 2e4 }}
        output_volume = {{ min = 1e3, max = 2e3 }}
        comp_complexity = {{ min = 0.1, max = 0.3 }}
        trans_complexity = {{ min = 0.1, max = 0.5 }}

        [[hierarchy.city]]
        name = "a"
        [[hierarchy.city.street]]
        name = "a0"
        pois = [[0.0, 0.0], [0.2, 0.0], [0.4, 0.0]]

        [[device]]
        id = 0
        cpu_freq = 2.0
        cpu_usage = 0.1
        location = [0.0, 0.0]
        power_comp = 3.0
        power_trans_per_byte = 1e-6

        [[device]]
        id = 1
        cpu_freq = 1.0
        cpu_usage = 0.2
        location = [0.4, 0.0]
        power_comp = 2.0
        power_trans_per_byte = 1e-6

        [[server]]
        id = 0
        location = [0.2, 0.0]
    "#
    );
    ScenarioConfig::from_toml_str(&text).unwrap()
}
