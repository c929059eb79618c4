//! Per-user privacy levels, cloaking of true device state into disclosed
//! uncertainty regions, and server-side estimation over those regions.
//!
//! Levels run from 0 (exact disclosure) to 3 (hidden). Scalar attributes
//! cloak to grid-aligned intervals; locations cloak to point sets drawn
//! from a street/city hierarchy. Servers read regions either conservatively
//! (worst case) or by averaging sampled anchor points.

use crate::model::{DeviceState, Point};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Interval grid resolutions per level for CPU frequency (GHz).
/// Level 0 is exact and level 3 is hidden; both bypass the grid.
const FREQ_RESOLUTION: [f64; 2] = [0.5, 2.0];
/// Interval grid resolutions per level for CPU usage (fraction).
const USAGE_RESOLUTION: [f64; 2] = [0.2, 0.5];

/// Highest privacy level.
pub const MAX_LEVEL: u8 = 3;

#[derive(Debug, Error, PartialEq)]
pub enum PrivacyError {
    #[error("privacy level {0} out of range 0..=3")]
    LevelOutOfRange(u8),
    #[error("true {attribute} {value} lies outside the global bound {bound}")]
    OutOfBounds {
        attribute: &'static str,
        value: f64,
        bound: f64,
    },
    #[error("device location ({x}, {y}) is not a point of the location hierarchy")]
    UnknownLocation { x: f64, y: f64 },
}

/// Per-attribute disclosure levels chosen by the device owner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacyProfile {
    pub location: u8,
    pub freq: u8,
    pub usage: u8,
}

impl PrivacyProfile {
    pub fn uniform(level: u8) -> Self {
        Self { location: level, freq: level, usage: level }
    }

    pub fn validate(&self) -> Result<(), PrivacyError> {
        for level in [self.location, self.freq, self.usage] {
            if level > MAX_LEVEL {
                return Err(PrivacyError::LevelOutOfRange(level));
            }
        }
        Ok(())
    }
}

/// Closed interval `[lb, ub]` with uniform density: the disclosed form of a
/// scalar attribute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lb: f64,
    pub ub: f64,
}

impl Interval {
    pub fn new(lb: f64, ub: f64) -> Self {
        debug_assert!(lb <= ub);
        Self { lb, ub }
    }

    pub fn degenerate(v: f64) -> Self {
        Self { lb: v, ub: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lb <= v && v <= self.ub
    }

    pub fn width(&self) -> f64 {
        self.ub - self.lb
    }

    pub fn is_degenerate(&self) -> bool {
        self.lb == self.ub
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.is_degenerate() {
            self.lb
        } else {
            rng.random_range(self.lb..self.ub)
        }
    }
}

/// Finite point set with an optional weight per point: the disclosed form
/// of a location. Without weights the density is uniform over the points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSet {
    pub points: Vec<Point>,
    pub weights: Option<Vec<f64>>,
}

impl RegionSet {
    pub fn uniform(points: Vec<Point>) -> Self {
        debug_assert!(!points.is_empty());
        Self { points, weights: None }
    }

    pub fn singleton(p: Point) -> Self {
        Self { points: vec![p], weights: None }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.points.contains(&p)
    }

    pub fn is_degenerate(&self) -> bool {
        self.points.len() == 1
    }

    /// Largest distance from any point of the region to `to`.
    pub fn max_distance(&self, to: Point) -> f64 {
        self.points
            .iter()
            .map(|p| p.distance(to))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Density-weighted expected distance from the region to `to`,
    /// evaluated exactly as a finite sum.
    pub fn mean_distance(&self, to: Point) -> f64 {
        match &self.weights {
            Some(w) => {
                debug_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                self.points
                    .iter()
                    .zip(w)
                    .map(|(p, w)| w * p.distance(to))
                    .sum()
            }
            None => {
                self.points.iter().map(|p| p.distance(to)).sum::<f64>() / self.points.len() as f64
            }
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Point {
        match &self.weights {
            None => self.points[rng.random_range(0..self.points.len())],
            Some(w) => {
                // inverse-CDF over the (normalized) weights
                let total: f64 = w.iter().sum();
                let mut u = rng.random::<f64>() * total;
                for (p, wi) in self.points.iter().zip(w) {
                    u -= wi;
                    if u < 0.0 {
                        return *p;
                    }
                }
                *self.points.last().unwrap()
            }
        }
    }
}

/// Privacy-masked view of one device, as visible to servers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisclosedView {
    pub device: crate::model::DeviceId,
    pub freq_region: Interval,
    pub usage_region: Interval,
    pub location_region: RegionSet,
}

/// A street: a named set of points of interest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Street {
    pub name: String,
    pub pois: Vec<Point>,
}

/// A city: a named set of streets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct City {
    pub name: String,
    #[serde(rename = "street")]
    pub streets: Vec<Street>,
}

/// Two-level location hierarchy. Every point of interest belongs to exactly
/// one street and every street to exactly one city.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocationHierarchy {
    #[serde(rename = "city")]
    pub cities: Vec<City>,
}

impl LocationHierarchy {
    /// Indices of the (city, street) containing `p`, by exact coordinate match.
    pub fn locate(&self, p: Point) -> Option<(usize, usize)> {
        for (ci, city) in self.cities.iter().enumerate() {
            for (si, street) in city.streets.iter().enumerate() {
                if street.pois.contains(&p) {
                    return Some((ci, si));
                }
            }
        }
        None
    }

    pub fn street_points(&self, city: usize, street: usize) -> Vec<Point> {
        self.cities[city].streets[street].pois.clone()
    }

    pub fn city_points(&self, city: usize) -> Vec<Point> {
        self.cities[city]
            .streets
            .iter()
            .flat_map(|s| s.pois.iter().copied())
            .collect()
    }

    pub fn all_points(&self) -> Vec<Point> {
        self.cities
            .iter()
            .flat_map(|c| c.streets.iter())
            .flat_map(|s| s.pois.iter().copied())
            .collect()
    }

    /// Axis-aligned rectangle covering every point, as (min, max) corners.
    pub fn world_bound(&self) -> (Point, Point) {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in self.all_points() {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        (min, max)
    }

    /// Every point belongs to exactly one street (no duplicates anywhere).
    pub fn validate(&self) -> Result<(), String> {
        let mut seen: Vec<Point> = Vec::new();
        for city in &self.cities {
            if city.streets.is_empty() {
                return Err(format!("city {:?} has no streets", city.name));
            }
            for street in &city.streets {
                if street.pois.is_empty() {
                    return Err(format!("street {:?} has no points", street.name));
                }
                for p in &street.pois {
                    if seen.contains(p) {
                        return Err(format!(
                            "point ({}, {}) appears in more than one street",
                            p.x, p.y
                        ));
                    }
                    seen.push(*p);
                }
            }
        }
        Ok(())
    }
}

/// Global disclosure bounds shared by all devices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalBounds {
    /// Upper bound of the hidden-frequency interval, GHz.
    pub freq_max: f64,
}

/// Smallest grid cell `(k*res, (k+1)*res]` containing `v`, stored with
/// closed bounds and clamped to `[0, max]`. Cells anchor at zero; `v == 0`
/// maps to the first cell.
fn grid_cell(v: f64, res: f64, max: f64) -> Interval {
    let k = ((v / res).ceil() - 1.0).max(0.0);
    Interval::new((k * res).min(max), ((k + 1.0) * res).min(max))
}

/// Masks `state` down to what `profile` allows.
///
/// Frequency and usage cloak to their level's grid cell (full range when
/// hidden); location cloaks to the street, city, or world point set.
pub fn cloak(
    state: &DeviceState,
    profile: &PrivacyProfile,
    hierarchy: &LocationHierarchy,
    bounds: &GlobalBounds,
) -> Result<DisclosedView, PrivacyError> {
    profile.validate()?;
    if state.cpu_freq > bounds.freq_max {
        return Err(PrivacyError::OutOfBounds {
            attribute: "cpu_freq",
            value: state.cpu_freq,
            bound: bounds.freq_max,
        });
    }
    if state.cpu_usage > 1.0 {
        return Err(PrivacyError::OutOfBounds {
            attribute: "cpu_usage",
            value: state.cpu_usage,
            bound: 1.0,
        });
    }

    let freq_region = match profile.freq {
        0 => Interval::degenerate(state.cpu_freq),
        level @ (1 | 2) => grid_cell(
            state.cpu_freq,
            FREQ_RESOLUTION[level as usize - 1],
            bounds.freq_max,
        ),
        _ => Interval::new(0.0, bounds.freq_max),
    };
    let usage_region = match profile.usage {
        0 => Interval::degenerate(state.cpu_usage),
        level @ (1 | 2) => grid_cell(state.cpu_usage, USAGE_RESOLUTION[level as usize - 1], 1.0),
        _ => Interval::new(0.0, 1.0),
    };

    let (city, street) = hierarchy
        .locate(state.location)
        .ok_or(PrivacyError::UnknownLocation {
            x: state.location.x,
            y: state.location.y,
        })?;
    let location_region = match profile.location {
        0 => RegionSet::singleton(state.location),
        1 => RegionSet::uniform(hierarchy.street_points(city, street)),
        2 => RegionSet::uniform(hierarchy.city_points(city)),
        _ => RegionSet::uniform(hierarchy.all_points()),
    };

    Ok(DisclosedView {
        device: state.id,
        freq_region,
        usage_region,
        location_region,
    })
}

/// Attribute estimates a server derives from a disclosed view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub freq: f64,
    pub usage: f64,
    pub dist: f64,
}

/// Worst-case reading: lowest frequency, highest usage, furthest distance.
pub fn estimate_conservative(view: &DisclosedView, server_location: Point) -> Estimate {
    Estimate {
        freq: view.freq_region.lb,
        usage: view.usage_region.ub,
        dist: view.location_region.max_distance(server_location),
    }
}

/// Mean of `k` anchor points drawn per region from its density.
pub fn estimate_anchor<R: Rng>(
    view: &DisclosedView,
    server_location: Point,
    k: u32,
    rng: &mut R,
) -> Estimate {
    AnchorDraws::draw(view, k, rng).estimate(server_location)
}

/// Mean that stays exact when every sample is identical, so degenerate
/// regions estimate to the true value with no rounding.
fn sample_mean(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let mut iter = values.clone();
    let first = iter.next().expect("at least one sample");
    if iter.all(|v| v == first) {
        return first;
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values {
        sum += v;
        count += 1;
    }
    sum / count as f64
}

/// Anchor samples held so one draw can serve several servers consistently.
#[derive(Debug, Clone)]
pub struct AnchorDraws {
    pub freq: f64,
    pub usage: f64,
    points: Vec<Point>,
}

impl AnchorDraws {
    pub fn draw<R: Rng>(view: &DisclosedView, k: u32, rng: &mut R) -> Self {
        assert!(k >= 1, "anchor estimation needs at least one sample");
        let n = k as usize;
        let freqs: Vec<f64> = (0..n).map(|_| view.freq_region.sample(rng)).collect();
        let usages: Vec<f64> = (0..n).map(|_| view.usage_region.sample(rng)).collect();
        let points = (0..n).map(|_| view.location_region.sample(rng)).collect();
        Self {
            freq: sample_mean(freqs.iter().copied()),
            usage: sample_mean(usages.iter().copied()),
            points,
        }
    }

    pub fn estimate(&self, server_location: Point) -> Estimate {
        let dist = sample_mean(self.points.iter().map(|p| p.distance(server_location)));
        Estimate { freq: self.freq, usage: self.usage, dist }
    }
}
