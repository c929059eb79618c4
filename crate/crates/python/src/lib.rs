//! Python bindings: scenario loading, scheme runs, and a few pure
//! helpers, driven in-process with no files beyond the scenario itself.

use gpata::privacy::Estimate;
use gpata::scenario::PrivacyPreset;
use gpata::{dhr_at_deadline, run_scheme, ScenarioConfig, Scheme};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use std::str::FromStr;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A validated scenario. Immutable; the `with_*` methods return modified
/// copies so seed and sweep variations stay cheap from Python.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Scenario {
    inner: ScenarioConfig,
}

#[pymethods]
impl Scenario {
    /// Load and validate a scenario file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: ScenarioConfig::load(path).map_err(value_error)? })
    }

    /// Parse and validate scenario TOML from a string.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self { inner: ScenarioConfig::from_toml_str(text).map_err(value_error)? })
    }

    /// The bundled reference scenario.
    #[staticmethod]
    fn reference() -> Self {
        Self { inner: ScenarioConfig::reference() }
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn cycles(&self) -> u32 {
        self.inner.cycles
    }

    #[getter]
    fn deadline(&self) -> f64 {
        self.inner.deadline
    }

    #[getter]
    fn tasks_per_cycle(&self) -> u32 {
        self.inner.tasks_per_cycle
    }

    #[getter]
    fn device_count(&self) -> usize {
        self.inner.devices.len()
    }

    #[getter]
    fn server_count(&self) -> usize {
        self.inner.servers.len()
    }

    fn with_seed(&self, seed: u64) -> Self {
        let mut copy = self.clone();
        copy.inner.seed = seed;
        copy
    }

    fn with_cycles(&self, cycles: u32) -> PyResult<Self> {
        let mut copy = self.clone();
        copy.inner.cycles = cycles;
        copy.inner.validate().map_err(value_error)?;
        Ok(copy)
    }

    fn with_deadline(&self, deadline: f64) -> PyResult<Self> {
        let mut copy = self.clone();
        copy.inner.deadline = deadline;
        copy.inner.validate().map_err(value_error)?;
        Ok(copy)
    }

    /// Switch the privacy preset: "high", "medium", "low", or "custom".
    fn with_privacy(&self, preset: &str) -> PyResult<Self> {
        let mut copy = self.clone();
        copy.inner.privacy.preset = PrivacyPreset::from_str(preset).map_err(value_error)?;
        copy.inner.validate().map_err(value_error)?;
        Ok(copy)
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(devices={}, servers={}, tasks_per_cycle={}, cycles={}, deadline={}, seed={})",
            self.inner.devices.len(),
            self.inner.servers.len(),
            self.inner.tasks_per_cycle,
            self.inner.cycles,
            self.inner.deadline,
            self.inner.seed,
        )
    }
}

/// Aggregates of one simulated run.
#[pyclass(frozen)]
struct RunStats {
    #[pyo3(get)]
    scheme: String,
    #[pyo3(get)]
    cycles: u32,
    #[pyo3(get)]
    tasks_total: u32,
    #[pyo3(get)]
    dhr: f64,
    #[pyo3(get)]
    mean_e2e_delay: f64,
    #[pyo3(get)]
    total_payoff: f64,
    #[pyo3(get)]
    mean_device_payoff: f64,
    #[pyo3(get)]
    total_energy: f64,
    #[pyo3(get)]
    converged_fraction: f64,
    device_payoffs: Vec<(u32, f64)>,
}

#[pymethods]
impl RunStats {
    /// Per-device payoff totals as `{device_id: payoff}`.
    fn device_payoffs(&self) -> std::collections::BTreeMap<u32, f64> {
        self.device_payoffs.iter().copied().collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "RunStats(scheme={}, dhr={:.4}, mean_e2e_delay={:.4}, mean_device_payoff={:.2})",
            self.scheme, self.dhr, self.mean_e2e_delay, self.mean_device_payoff
        )
    }
}

/// Run every cycle of `scenario` under `scheme` and return the aggregates.
#[pyfunction]
fn run(scenario: &Scenario, scheme: &str) -> PyResult<RunStats> {
    let scheme = Scheme::from_str(scheme).map_err(value_error)?;
    let result = run_scheme(&scenario.inner, scheme);
    let s = result.summary;
    Ok(RunStats {
        scheme: s.scheme,
        cycles: s.cycles,
        tasks_total: s.tasks_total,
        dhr: s.dhr,
        mean_e2e_delay: s.mean_e2e_delay,
        total_payoff: s.total_payoff,
        mean_device_payoff: s.mean_device_payoff,
        total_energy: s.total_energy,
        converged_fraction: s.converged_fraction,
        device_payoffs: s.device_payoffs.iter().map(|(d, p)| (d.0, *p)).collect(),
    })
}

/// Run once, then replay the recorded allocation against each deadline:
/// the hit rate the same run would have had under that threshold.
#[pyfunction]
fn dhr_curve(scenario: &Scenario, scheme: &str, deadlines: Vec<f64>) -> PyResult<Vec<f64>> {
    let scheme = Scheme::from_str(scheme).map_err(value_error)?;
    let result = run_scheme(&scenario.inner, scheme);
    Ok(deadlines
        .into_iter()
        .map(|d| dhr_at_deadline(&result.cycles, d))
        .collect())
}

/// 1 iff the delay strictly exceeds the deadline.
#[pyfunction]
fn deadline_indicator(delay: f64, deadline: f64) -> u8 {
    gpata::model::deadline_indicator(delay, deadline)
}

/// Quality score of a device estimate, floored at the quality floor.
#[pyfunction]
fn quality_score(freq: f64, usage: f64, dist: f64, lambda1: f64, lambda2: f64) -> f64 {
    gpata::game::quality_score(&Estimate { freq, usage, dist }, lambda1, lambda2)
}

#[pymodule]
fn gpata_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<RunStats>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(dhr_curve, m)?)?;
    m.add_function(wrap_pyfunction!(deadline_indicator, m)?)?;
    m.add_function(wrap_pyfunction!(quality_score, m)?)?;
    m.add(
        "SCHEMES",
        Scheme::ALL.iter().map(Scheme::as_str).collect::<Vec<_>>(),
    )?;
    Ok(())
}
