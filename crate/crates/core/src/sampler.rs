//! Seeded scenario sampling.
//!
//! Every simulation draws from its own ChaCha8 stream, seeded from the
//! master seed and the simulation id, so runs are reproducible and can be
//! generated in any order.

use std::fmt;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    round2, Colour, DimensionTable, Dimensions, LaneGeometry, PresetName, SimClock, VehicleKind,
    WeatherPreset,
};
use crate::error::{Error, Result};

pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;
/// Minimum longitudinal clearance between spawn boxes in the same lane.
pub const SPAWN_CLEARANCE: f64 = 1.0;

const SPEED_FLOOR: f64 = 50.0;
const SPEED_CEIL: f64 = 120.0;

/// Bounds for scenario sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n_vehicles_min: usize,
    pub n_vehicles_max: usize,
    pub speed_min: f64,
    pub speed_max: f64,
    pub clock: SimClock,
    pub presets: Vec<PresetName>,
    /// Lanes vehicles may spawn in. The ego additionally never uses lane 5.
    pub lanes: Vec<u8>,
    pub mv_limits: Vec<f64>,
    pub dimensions: DimensionTable,
    pub geometry: LaneGeometry,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_vehicles_min: 2,
            n_vehicles_max: 6,
            speed_min: SPEED_FLOOR,
            speed_max: SPEED_CEIL,
            clock: SimClock::default(),
            presets: PresetName::ALL.to_vec(),
            lanes: vec![1, 2, 3, 4, 5],
            mv_limits: vec![90.0, 100.0, 120.0],
            dimensions: DimensionTable::default(),
            geometry: LaneGeometry::default(),
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_vehicles_min < 2 || self.n_vehicles_max > 6 || self.n_vehicles_min > self.n_vehicles_max {
            return bad(format!(
                "vehicle count bounds [{}, {}] must satisfy 2 <= min <= max <= 6",
                self.n_vehicles_min, self.n_vehicles_max
            ));
        }
        if !(self.speed_min >= SPEED_FLOOR && self.speed_max <= SPEED_CEIL && self.speed_min <= self.speed_max)
            || self.speed_min.ceil() > self.speed_max.floor()
        {
            return bad(format!(
                "speed bounds [{}, {}] must lie within [50, 120] and contain an integer",
                self.speed_min, self.speed_max
            ));
        }
        if !(self.clock.dt > 0.0 && self.clock.duration > 0.0 && self.clock.dt <= self.clock.duration) {
            return bad(format!("clock dt={} duration={}", self.clock.dt, self.clock.duration));
        }
        if self.presets.is_empty() {
            return bad("preset whitelist is empty".into());
        }
        if self.mv_limits.is_empty() || self.mv_limits.iter().any(|v| v.is_nan() || *v <= 0.0) {
            return bad("mv_limits must be a non-empty list of positive speeds".into());
        }
        for &lane in &self.lanes {
            if self.geometry.check_lane(lane).is_err() {
                return bad(format!("spawn lane {lane} outside 1..=5"));
            }
        }
        if self.ego_lanes().is_empty() {
            return bad("no spawn lane available for the ego (lanes 1..=4)".into());
        }
        Ok(())
    }

    fn ego_lanes(&self) -> Vec<u8> {
        self.lanes.iter().copied().filter(|l| *l < self.geometry.n_lanes).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSpawn {
    pub id: u32,
    pub kind: VehicleKind,
    pub dims: Dimensions,
    pub colour: Colour,
    /// Longitudinal center position at t = 0.
    pub x0: f64,
    pub lane0: u8,
    /// km/h
    pub target_speed: f64,
}

/// Sampled initial conditions of one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub sim_id: u32,
    pub seed: u64,
    pub vehicles: Vec<VehicleSpawn>,
    pub ego_index: usize,
    pub preset: WeatherPreset,
    pub clock: SimClock,
    /// Speed limit for every lane, km/h.
    pub mv_limit: f64,
    pub geometry: LaneGeometry,
}

impl ScenarioSpec {
    pub fn ego(&self) -> &VehicleSpawn {
        &self.vehicles[self.ego_index]
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the per-simulation stream derived from the master seed.
pub fn stream_seed(master_seed: u64, sim_id: u32) -> u64 {
    mix64(mix64(master_seed) ^ u64::from(sim_id).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Samples one scenario from `seed` (sim id 1).
pub fn sample_scenario(seed: u64, config: &GeneratorConfig) -> Result<ScenarioSpec> {
    sample_with_id(1, seed, config)
}

/// Samples scenario `sim_id` of a run seeded with `master_seed`.
pub fn scenario_for(master_seed: u64, sim_id: u32, config: &GeneratorConfig) -> Result<ScenarioSpec> {
    sample_with_id(sim_id, stream_seed(master_seed, sim_id), config)
}

fn sample_with_id(sim_id: u32, seed: u64, config: &GeneratorConfig) -> Result<ScenarioSpec> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geom = config.geometry;

    let n = rng.random_range(config.n_vehicles_min..=config.n_vehicles_max);
    let speed_lo = config.speed_min.ceil() as u32;
    let speed_hi = config.speed_max.floor() as u32;
    let ego_lanes = config.ego_lanes();

    let mut kinds = Vec::with_capacity(n);
    kinds.push(*VehicleKind::EGO.choose(&mut rng).expect("non-empty"));
    for _ in 1..n {
        kinds.push(*VehicleKind::ALL.choose(&mut rng).expect("non-empty"));
    }
    let speeds: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(speed_lo..=speed_hi))).collect();
    let colours: Vec<Colour> = (0..n).map(|_| *Colour::ALL.choose(&mut rng).expect("non-empty")).collect();
    let dims: Vec<Dimensions> = kinds.iter().map(|k| config.dimensions.get(*k)).collect();

    let ego_lane = *ego_lanes.choose(&mut rng).expect("validated");
    let mut placed: Vec<(u8, f64)> = Vec::with_capacity(n);

    // Ego and its guaranteed preceding vehicle are placed as a pair.
    let mut pair = None;
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let xe = round2(rng.random_range(geom.x_min..=geom.x_max));
        let xp = round2(rng.random_range(geom.x_min..=geom.x_max));
        if xp > xe && longitudinal_gap(xe, dims[0].length, xp, dims[1].length) >= SPAWN_CLEARANCE {
            pair = Some((xe, xp));
            break;
        }
    }
    let (xe, xp) = pair.ok_or(Error::PlacementFailure {
        vehicle: 1,
        attempts: MAX_PLACEMENT_ATTEMPTS,
    })?;
    placed.push((ego_lane, xe));
    placed.push((ego_lane, xp));

    for i in 2..n {
        let mut slot = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let lane = *config.lanes.choose(&mut rng).expect("validated");
            let x = round2(rng.random_range(geom.x_min..=geom.x_max));
            let clear = placed.iter().enumerate().all(|(j, &(l, xj))| {
                l != lane || longitudinal_gap(x, dims[i].length, xj, dims[j].length) >= SPAWN_CLEARANCE
            });
            if clear {
                slot = Some((lane, x));
                break;
            }
        }
        placed.push(slot.ok_or(Error::PlacementFailure {
            vehicle: i,
            attempts: MAX_PLACEMENT_ATTEMPTS,
        })?);
    }

    let preset = config.presets.choose(&mut rng).expect("validated").preset();
    let mv_limit = *config.mv_limits.choose(&mut rng).expect("validated");

    let vehicles = (0..n)
        .map(|i| VehicleSpawn {
            id: i as u32 + 1,
            kind: kinds[i],
            dims: dims[i],
            colour: colours[i],
            x0: placed[i].1,
            lane0: placed[i].0,
            target_speed: speeds[i],
        })
        .collect();

    Ok(ScenarioSpec {
        sim_id,
        seed,
        vehicles,
        ego_index: 0,
        preset,
        clock: config.clock,
        mv_limit,
        geometry: geom,
    })
}

/// Bumper-to-bumper distance between two boxes centered at `xa` and `xb`.
fn longitudinal_gap(xa: f64, len_a: f64, xb: f64, len_b: f64) -> f64 {
    (xa - xb).abs() - (len_a + len_b) / 2.0
}

/// The weather presets scenarios draw from.
pub fn preset_catalog() -> Vec<WeatherPreset> {
    crate::domain::preset_catalog()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScenarioViolation {
    VehicleCount(usize),
    SpeedOutOfRange { id: u32, speed: f64 },
    EgoOnLaneFive,
    EgoKind(VehicleKind),
    BadEgoIndex(usize),
    SpawnOutsideWindow { id: u32, x: f64 },
    BadLane { id: u32, lane: u8 },
    Overlap { a: u32, b: u32 },
    NoPrecedingVehicle,
    DuplicateId(u32),
    BadClock,
}

impl fmt::Display for ScenarioViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioViolation::VehicleCount(n) => write!(f, "vehicle count {n} out of [2,6]"),
            ScenarioViolation::SpeedOutOfRange { id, speed } => {
                write!(f, "speed out of [50,120]: vehicle {id} at {speed} km/h")
            }
            ScenarioViolation::EgoOnLaneFive => write!(f, "ego on lane 5"),
            ScenarioViolation::EgoKind(k) => write!(f, "ego kind {k} not allowed"),
            ScenarioViolation::BadEgoIndex(i) => write!(f, "ego index {i} out of range"),
            ScenarioViolation::SpawnOutsideWindow { id, x } => {
                write!(f, "spawn x out of [320,450]: vehicle {id} at {x}")
            }
            ScenarioViolation::BadLane { id, lane } => write!(f, "vehicle {id} on invalid lane {lane}"),
            ScenarioViolation::Overlap { a, b } => write!(f, "spawn boxes of {a} and {b} overlap"),
            ScenarioViolation::NoPrecedingVehicle => write!(f, "no preceding vehicle in the ego lane"),
            ScenarioViolation::DuplicateId(id) => write!(f, "duplicate vehicle id {id}"),
            ScenarioViolation::BadClock => write!(f, "clock dt/duration must be positive"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<ScenarioViolation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }
}

/// Checks every scenario invariant; violations are returned as data.
pub fn validate_scenario(spec: &ScenarioSpec) -> ValidationReport {
    let mut v = Vec::new();
    let geom = spec.geometry;
    let n = spec.vehicles.len();
    if !(2..=6).contains(&n) {
        v.push(ScenarioViolation::VehicleCount(n));
    }
    if !(spec.clock.dt > 0.0 && spec.clock.duration > 0.0) {
        v.push(ScenarioViolation::BadClock);
    }
    let mut seen = std::collections::BTreeSet::new();
    for veh in &spec.vehicles {
        if !seen.insert(veh.id) {
            v.push(ScenarioViolation::DuplicateId(veh.id));
        }
        if !(SPEED_FLOOR..=SPEED_CEIL).contains(&veh.target_speed) {
            v.push(ScenarioViolation::SpeedOutOfRange {
                id: veh.id,
                speed: veh.target_speed,
            });
        }
        if !(geom.x_min..=geom.x_max).contains(&veh.x0) {
            v.push(ScenarioViolation::SpawnOutsideWindow { id: veh.id, x: veh.x0 });
        }
        if geom.check_lane(veh.lane0).is_err() {
            v.push(ScenarioViolation::BadLane {
                id: veh.id,
                lane: veh.lane0,
            });
        }
    }
    for (i, a) in spec.vehicles.iter().enumerate() {
        for b in &spec.vehicles[i + 1..] {
            if a.lane0 == b.lane0
                && longitudinal_gap(a.x0, a.dims.length, b.x0, b.dims.length) < SPAWN_CLEARANCE
            {
                v.push(ScenarioViolation::Overlap { a: a.id, b: b.id });
            }
        }
    }
    match spec.vehicles.get(spec.ego_index) {
        None => v.push(ScenarioViolation::BadEgoIndex(spec.ego_index)),
        Some(ego) => {
            if ego.lane0 >= geom.n_lanes {
                v.push(ScenarioViolation::EgoOnLaneFive);
            }
            if !ego.kind.can_be_ego() {
                v.push(ScenarioViolation::EgoKind(ego.kind));
            }
            let has_preceding = spec
                .vehicles
                .iter()
                .enumerate()
                .any(|(i, o)| i != spec.ego_index && o.lane0 == ego.lane0 && o.x0 > ego.x0);
            if !has_preceding {
                v.push(ScenarioViolation::NoPrecedingVehicle);
            }
        }
    }
    ValidationReport { violations: v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_respect_bounds() {
        let spec = sample_scenario(7, &GeneratorConfig::default()).unwrap();
        assert!((2..=6).contains(&spec.vehicles.len()));
        assert!(spec
            .vehicles
            .iter()
            .all(|v| (50.0..=120.0).contains(&v.target_speed)));
        assert!(validate_scenario(&spec).is_empty());
    }

    #[test]
    fn minimal_two_vehicle_single_lane() {
        let cfg = GeneratorConfig {
            n_vehicles_min: 2,
            n_vehicles_max: 2,
            lanes: vec![3],
            ..Default::default()
        };
        for seed in 0..50 {
            let spec = sample_scenario(seed, &cfg).unwrap();
            assert_eq!(spec.vehicles.len(), 2);
            let (e, p) = (&spec.vehicles[0], &spec.vehicles[1]);
            assert_eq!((e.lane0, p.lane0), (3, 3));
            assert!(p.x0 > e.x0);
            assert!(longitudinal_gap(e.x0, e.dims.length, p.x0, p.dims.length) >= SPAWN_CLEARANCE);
        }
    }

    #[test]
    fn ego_never_on_lane_five() {
        let cfg = GeneratorConfig::default();
        let lane5 = (0..10_000u32)
            .filter(|&i| scenario_for(99, i, &cfg).unwrap().ego().lane0 == 5)
            .count();
        assert_eq!(lane5, 0);
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = GeneratorConfig::default();
        assert_eq!(scenario_for(42, 3, &cfg).unwrap(), scenario_for(42, 3, &cfg).unwrap());
        assert_ne!(scenario_for(42, 3, &cfg).unwrap(), scenario_for(42, 4, &cfg).unwrap());
    }

    #[test]
    fn catalog_contents() {
        let cat = preset_catalog();
        assert_eq!(cat.len(), 9);
        assert_eq!(cat.iter().filter(|p| p.is_night).count(), 5);
        let mid = cat.iter().find(|p| p.name == PresetName::MidRainNight).unwrap();
        assert_eq!((mid.precipitation, mid.wind, mid.fog), (60.0, 60.0, 60.0));
    }

    #[test]
    fn validation_flags_violations() {
        let mut spec = sample_scenario(11, &GeneratorConfig::default()).unwrap();
        assert!(validate_scenario(&spec).is_empty());

        let mut fast = spec.clone();
        fast.vehicles[1].target_speed = 130.0;
        let msgs = validate_scenario(&fast).messages();
        assert!(msgs.iter().any(|m| m.starts_with("speed out of [50,120]")), "{msgs:?}");

        spec.vehicles[0].lane0 = 5;
        let msgs = validate_scenario(&spec).messages();
        assert!(msgs.contains(&"ego on lane 5".to_string()), "{msgs:?}");
    }

    #[test]
    fn overlapping_spawns_are_reported() {
        let mut spec = sample_scenario(5, &GeneratorConfig::default()).unwrap();
        let e = spec.vehicles[0].clone();
        spec.vehicles[1].lane0 = e.lane0;
        spec.vehicles[1].x0 = e.x0 + 0.5;
        assert!(validate_scenario(&spec)
            .violations
            .iter()
            .any(|v| matches!(v, ScenarioViolation::Overlap { .. })));
    }

    #[test]
    fn bad_config_rejected() {
        let cfg = GeneratorConfig {
            speed_min: 100.0,
            speed_max: 60.0,
            ..Default::default()
        };
        assert!(matches!(sample_scenario(1, &cfg), Err(Error::InvalidConfig(_))));
        let cfg = GeneratorConfig {
            lanes: vec![5],
            ..Default::default()
        };
        assert!(matches!(sample_scenario(1, &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn crowded_lane_fails_placement() {
        // Six trucks in one lane cannot all fit with the ego pair wedged in.
        let mut dims = DimensionTable::default();
        for k in VehicleKind::ALL {
            dims.set(k, Dimensions::new(40.0, 2.0, 2.0));
        }
        let cfg = GeneratorConfig {
            n_vehicles_min: 6,
            n_vehicles_max: 6,
            lanes: vec![2],
            dimensions: dims,
            ..Default::default()
        };
        assert!(matches!(
            sample_scenario(3, &cfg),
            Err(Error::PlacementFailure { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn sampled_specs_validate(seed in any::<u64>(), sim in 1u32..10_000) {
            let spec = scenario_for(seed, sim, &GeneratorConfig::default()).unwrap();
            prop_assert!(validate_scenario(&spec).is_empty());
            for (i, a) in spec.vehicles.iter().enumerate() {
                for b in &spec.vehicles[i + 1..] {
                    if a.lane0 == b.lane0 {
                        prop_assert!(longitudinal_gap(a.x0, a.dims.length, b.x0, b.dims.length) >= 1.0);
                    }
                }
            }
        }
    }
}
