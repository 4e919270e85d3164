//! Fixed-timestep kinematic engine.
//!
//! Non-ego vehicles cruise at their target speed in their spawn lane. The
//! ego follows its leader with an IDM-style law and always tries to
//! overtake: it changes to the left lane, passes, and returns once it is
//! clear of the vehicle it overtook. Weather adds periodic lateral
//! impulses and shortens the ego's detection range.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{round2, Dimensions, LaneGeometry, SimClock, WeatherPreset};
use crate::error::{Error, Result};
use crate::log::{FrameRecord, SimulationLog, VehicleFrame};
use crate::sampler::ScenarioSpec;

const KMH_PER_MS: f64 = 3.6;
/// ChaCha stream used for weather draws (sampling uses stream 0).
const WEATHER_STREAM: u64 = 1;

/// Car-following parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdmParams {
    /// m/s²
    pub max_accel: f64,
    /// m/s²
    pub comfort_decel: f64,
    /// m
    pub min_gap: f64,
    /// s
    pub time_headway: f64,
    pub exponent: f64,
    /// Physical braking limit, m/s².
    pub max_brake: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            max_accel: 1.5,
            comfort_decel: 2.0,
            min_gap: 2.0,
            time_headway: 1.5,
            exponent: 4.0,
            max_brake: 9.0,
        }
    }
}

impl IdmParams {
    /// Acceleration for speed `v` (m/s) toward `v0`, optionally behind a
    /// leader at bumper gap `gap` (m) moving at `v_lead` (m/s).
    pub fn accel(&self, v: f64, v0: f64, leader: Option<(f64, f64)>) -> f64 {
        let free = if v0 > 0.0 {
            1.0 - (v / v0).powf(self.exponent)
        } else {
            -1.0
        };
        let interaction = match leader {
            Some((gap, v_lead)) => {
                let dv = v - v_lead;
                let s_star = self.min_gap
                    + (v * self.time_headway + v * dv / (2.0 * (self.max_accel * self.comfort_decel).sqrt()))
                        .max(0.0);
                let s = gap.max(0.1);
                (s_star / s).powi(2)
            }
            None => 0.0,
        };
        (self.max_accel * (free - interaction)).max(-self.max_brake)
    }
}

/// Lane-change duration rule: `clamp(base * speed / reference, min, max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneChangeTiming {
    pub base: f64,
    /// km/h
    pub reference_speed: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for LaneChangeTiming {
    fn default() -> Self {
        Self {
            base: 2.0,
            reference_speed: 80.0,
            min: 1.5,
            max: 4.0,
        }
    }
}

impl LaneChangeTiming {
    pub fn duration(&self, speed_kmh: f64) -> f64 {
        (self.base * speed_kmh / self.reference_speed).clamp(self.min, self.max)
    }

    /// Whole frames a lane change started at `speed_kmh` takes.
    pub fn frames(&self, speed_kmh: f64, dt: f64) -> u32 {
        ((self.duration(speed_kmh) / dt).round() as u32).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationParams {
    pub enabled: bool,
    /// Largest lateral impulse, m.
    pub y_pert_max: f64,
    /// Shortest interval between impulses, frames.
    pub k_min: u32,
    pub k_max: u32,
    /// Lane-keeping relaxation time constant, s.
    pub lane_keep_tau: f64,
}

impl Default for PerturbationParams {
    fn default() -> Self {
        Self {
            enabled: true,
            y_pert_max: 0.3,
            k_min: 10,
            k_max: 60,
            lane_keep_tau: 0.5,
        }
    }
}

impl PerturbationParams {
    fn intensity(preset: &WeatherPreset) -> f64 {
        ((preset.wind + preset.precipitation) / 200.0).clamp(0.0, 1.0)
    }

    /// Frames between impulses; shorter for stronger wind and rain.
    pub fn interval(&self, preset: &WeatherPreset) -> u32 {
        let span = f64::from(self.k_max) - f64::from(self.k_min);
        ((f64::from(self.k_max) - span * Self::intensity(preset)).round() as u32).max(1)
    }

    pub fn magnitude(&self, preset: &WeatherPreset) -> f64 {
        self.y_pert_max * Self::intensity(preset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityParams {
    /// m
    pub base_range: f64,
    /// Cloudiness (%) above which vision is reduced.
    pub cloud_threshold: f64,
    pub cloud_factor: f64,
    pub horizon_factor: f64,
    /// v_fog(f) = 1 - fog_slope * f / 100 for fog above `fog_baseline`.
    pub fog_slope: f64,
    pub fog_baseline: f64,
    pub min_range: f64,
}

impl Default for VisibilityParams {
    fn default() -> Self {
        Self {
            base_range: 80.0,
            cloud_threshold: 60.0,
            cloud_factor: 0.6,
            horizon_factor: 0.6,
            fog_slope: 0.5,
            fog_baseline: 2.0,
            min_range: 15.0,
        }
    }
}

impl VisibilityParams {
    pub fn fog_factor(&self, fog: f64) -> f64 {
        if fog <= self.fog_baseline {
            1.0
        } else {
            (1.0 - self.fog_slope * fog / 100.0).max(0.0)
        }
    }
}

/// All engine thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub idm: IdmParams,
    pub lane_change: LaneChangeTiming,
    pub perturbation: PerturbationParams,
    pub visibility: VisibilityParams,
    /// Bumper gap (m) below which the ego starts overtaking.
    pub trigger_gap: f64,
    /// Ego rear must lead the target front by this much before returning, m.
    pub pass_margin: f64,
    /// Free space required around the ego in the return lane, m.
    pub return_clearance: f64,
    /// Deceleration of both vehicles after a collision, m/s².
    pub collision_decel: f64,
    /// Acceleration bound for non-ego speed keeping, m/s².
    pub cruise_accel: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            idm: IdmParams::default(),
            lane_change: LaneChangeTiming::default(),
            perturbation: PerturbationParams::default(),
            visibility: VisibilityParams::default(),
            trigger_gap: 40.0,
            pass_margin: 5.0,
            return_clearance: 5.0,
            collision_decel: 8.0,
            cruise_accel: 2.0,
        }
    }
}

/// Cosine-eased lateral position during a lane change.
pub fn lateral_offset(t: f64, t_lc: f64, from_y: f64, to_y: f64) -> Result<f64> {
    if t_lc.is_nan() || t_lc <= 0.0 {
        return Err(Error::BadDuration(t_lc));
    }
    let s = (t / t_lc).clamp(0.0, 1.0);
    Ok(from_y + (to_y - from_y) * (1.0 - (PI * s).cos()) / 2.0)
}

/// Axis-aligned footprint of a vehicle on the road plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    pub x: f64,
    pub y: f64,
    pub length: f64,
    pub width: f64,
}

impl Footprint {
    pub fn new(x: f64, y: f64, dims: Dimensions) -> Self {
        Self {
            x,
            y,
            length: dims.length,
            width: dims.width,
        }
    }
}

/// True when the two rectangles overlap in both axes.
pub fn detect_collision(a: &Footprint, b: &Footprint) -> bool {
    (a.x - b.x).abs() < (a.length + b.length) / 2.0 && (a.y - b.y).abs() < (a.width + b.width) / 2.0
}

/// Euclidean separation between two rectangles; zero when they overlap.
pub fn footprint_gap(a: &Footprint, b: &Footprint) -> f64 {
    let dx = ((a.x - b.x).abs() - (a.length + b.length) / 2.0).max(0.0);
    let dy = ((a.y - b.y).abs() - (a.width + b.width) / 2.0).max(0.0);
    dx.hypot(dy)
}

/// Sensing range of the ego under `preset`.
pub fn effective_detection_range(preset: &WeatherPreset, params: &VisibilityParams) -> f64 {
    let mut r = params.base_range;
    if preset.cloudiness > params.cloud_threshold {
        r *= params.cloud_factor;
    }
    if preset.horizon_line {
        r *= params.horizon_factor;
    }
    r *= params.fog_factor(preset.fog);
    r.max(params.min_range)
}

/// Linear speed map used to fit the 120 km/h range into a 40 km/h
/// simulator cap, with the matching time dilation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rescaled {
    pub sim_speed: f64,
    /// Multiply rescaled timestamps by this to recover real seconds.
    pub time_scale: f64,
}

pub fn rule_of_three_rescale(speed_kmh: f64) -> Result<Rescaled> {
    if !(0.0..=120.0).contains(&speed_kmh) {
        return Err(Error::BadSpeed(speed_kmh));
    }
    Ok(Rescaled {
        sim_speed: speed_kmh * 40.0 / 120.0,
        time_scale: 3.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: u32,
    pub dims: Dimensions,
    pub x: f64,
    pub y: f64,
    pub lane: u8,
    /// km/h
    pub speed: f64,
    /// m/s²
    pub accel: f64,
    pub wheel_dir: (f64, f64),
    pub alive: bool,
    /// km/h
    pub target_speed: f64,
    /// Lateral reference (lane center or lane-change profile).
    pub base_y: f64,
    /// Weather-induced lateral offset from `base_y`.
    pub drift: f64,
    pub collided: bool,
}

impl VehicleState {
    pub fn footprint(&self) -> Footprint {
        Footprint::new(self.x, self.y, self.dims)
    }

    fn front(&self) -> f64 {
        self.x + self.dims.length / 2.0
    }

    fn rear(&self) -> f64 {
        self.x - self.dims.length / 2.0
    }
}

/// Draws the weather impulse for `frame`, adds it to the vehicle's drift,
/// and returns it (zero off the impulse schedule).
pub fn apply_weather_perturbation(
    state: &mut VehicleState,
    preset: &WeatherPreset,
    params: &PerturbationParams,
    rng: &mut impl Rng,
    frame: u32,
) -> f64 {
    if !params.enabled || frame == 0 || !frame.is_multiple_of(params.interval(preset)) {
        return 0.0;
    }
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let dy = sign * params.magnitude(preset);
    state.drift += dy;
    dy
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Follow,
    ChangingLeft,
    Passing,
    ChangingRight,
    Done,
    Aborted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EgoControllerState {
    pub phase: Phase,
    pub target_id: Option<u32>,
    pub t_phase_start: f64,
    pub origin_lane: u8,
    lane_from: u8,
    lane_to: u8,
    lc_frames: u32,
    lc_elapsed: u32,
}

impl EgoControllerState {
    fn new(origin_lane: u8) -> Self {
        Self {
            phase: Phase::Follow,
            target_id: None,
            t_phase_start: 0.0,
            origin_lane,
            lane_from: origin_lane,
            lane_to: origin_lane,
            lc_frames: 0,
            lc_elapsed: 0,
        }
    }

    fn enter(&mut self, phase: Phase, t: f64) {
        self.phase = phase;
        self.t_phase_start = t;
    }
}

#[derive(Debug, Clone)]
pub struct WorldState {
    pub clock: SimClock,
    pub frame: u32,
    pub vehicles: Vec<VehicleState>,
    pub ego_index: usize,
    pub preset: WeatherPreset,
    pub mv_limit: f64,
    pub geometry: LaneGeometry,
    /// First ego contact: (frame, other vehicle id).
    pub collision: Option<(u32, u32)>,
    pub ov_events: Vec<u32>,
}

impl WorldState {
    pub fn from_spec(spec: &ScenarioSpec) -> Result<Self> {
        let geom = spec.geometry;
        let vehicles = spec
            .vehicles
            .iter()
            .map(|v| {
                let y = geom.lane_center(v.lane0)?;
                Ok(VehicleState {
                    id: v.id,
                    dims: v.dims,
                    x: v.x0,
                    y,
                    lane: v.lane0,
                    speed: v.target_speed,
                    accel: 0.0,
                    wheel_dir: (1.0, 0.0),
                    alive: true,
                    target_speed: v.target_speed,
                    base_y: y,
                    drift: 0.0,
                    collided: false,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            clock: spec.clock,
            frame: 0,
            vehicles,
            ego_index: spec.ego_index,
            preset: spec.preset,
            mv_limit: spec.mv_limit,
            geometry: geom,
            collision: None,
            ov_events: Vec::new(),
        })
    }

    pub fn ego(&self) -> &VehicleState {
        &self.vehicles[self.ego_index]
    }

    fn index_of(&self, id: u32) -> Option<usize> {
        self.vehicles.iter().position(|v| v.id == id)
    }

    /// Nearest vehicle ahead of the ego in `lane`, with its bumper gap.
    fn leader_in_lane(&self, lane: u8) -> Option<(usize, f64)> {
        let ego = self.ego();
        self.vehicles
            .iter()
            .enumerate()
            .filter(|(i, v)| *i != self.ego_index && v.lane == lane && v.x > ego.x)
            .map(|(i, v)| (i, v.rear() - ego.front()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    fn lane_clear_around_ego(&self, lane: u8, clearance: f64) -> bool {
        let ego = self.ego();
        self.vehicles.iter().enumerate().all(|(i, v)| {
            i == self.ego_index
                || v.lane != lane
                || (v.x - ego.x).abs() - (v.dims.length + ego.dims.length) / 2.0 >= clearance
        })
    }
}

/// Result of one integration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// An ego lane change began in this step.
    pub lane_change_started: bool,
}

/// Advances the world by one frame.
pub fn step(
    world: &mut WorldState,
    ctrl: &mut EgoControllerState,
    rng: &mut impl Rng,
    config: &EngineConfig,
) -> StepOutcome {
    let dt = world.clock.dt;
    let geom = world.geometry;
    let t_next = world.clock.timestamp(world.frame + 1);
    let range = effective_detection_range(&world.preset, &config.visibility);
    let ego_i = world.ego_index;
    let mut started = false;

    // Controller decisions use the state at the current frame.
    let ego_collided = world.ego().collided;
    if !ego_collided {
        match ctrl.phase {
            Phase::Follow => {
                let ego = world.ego();
                if let Some((li, gap)) = world.leader_in_lane(ego.lane) {
                    let leader = &world.vehicles[li];
                    if gap <= range
                        && gap < config.trigger_gap
                        && ego.target_speed > leader.speed
                        && ego.lane < geom.n_lanes
                    {
                        ctrl.target_id = Some(leader.id);
                        ctrl.origin_lane = ego.lane;
                        ctrl.lane_from = ego.lane;
                        ctrl.lane_to = ego.lane + 1;
                        ctrl.lc_frames = config.lane_change.frames(round2(ego.speed), dt);
                        ctrl.lc_elapsed = 0;
                        ctrl.enter(Phase::ChangingLeft, t_next);
                        started = true;
                    }
                }
            }
            Phase::Passing => {
                let ego = world.ego();
                let target = ctrl.target_id.and_then(|id| world.index_of(id));
                if let Some(ti) = target {
                    let tgt = &world.vehicles[ti];
                    if ego.rear() - tgt.front() >= config.pass_margin
                        && world.lane_clear_around_ego(ctrl.origin_lane, config.return_clearance)
                    {
                        ctrl.lane_from = ctrl.lane_to;
                        ctrl.lane_to = ctrl.origin_lane;
                        ctrl.lc_frames = config.lane_change.frames(round2(ego.speed), dt);
                        ctrl.lc_elapsed = 0;
                        ctrl.enter(Phase::ChangingRight, t_next);
                        started = true;
                    }
                }
            }
            _ => {}
        }
    }

    // Longitudinal accelerations.
    let accels: Vec<f64> = world
        .vehicles
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if v.collided {
                return if v.speed > 0.0 { -config.collision_decel } else { 0.0 };
            }
            if i != ego_i {
                let dv = (v.target_speed - v.speed) / KMH_PER_MS;
                return (dv / dt).clamp(-config.cruise_accel, config.cruise_accel);
            }
            let lane = match ctrl.phase {
                Phase::ChangingLeft | Phase::Passing | Phase::ChangingRight => ctrl.lane_to,
                _ => v.lane,
            };
            let leader = world
                .leader_in_lane(lane)
                .filter(|(_, gap)| *gap <= range)
                .map(|(li, gap)| (gap, world.vehicles[li].speed / KMH_PER_MS));
            config
                .idm
                .accel(v.speed / KMH_PER_MS, v.target_speed / KMH_PER_MS, leader)
        })
        .collect();

    // Semi-implicit Euler.
    for (v, a) in world.vehicles.iter_mut().zip(accels) {
        let v_old = v.speed / KMH_PER_MS;
        let v_new = (v_old + a * dt).max(0.0);
        v.accel = (v_new - v_old) / dt;
        v.speed = v_new * KMH_PER_MS;
        v.x += v_new * dt;
    }

    // Lateral motion.
    if matches!(ctrl.phase, Phase::ChangingLeft | Phase::ChangingRight) && !world.ego().collided {
        ctrl.lc_elapsed += 1;
        let from = geom.lane_center(ctrl.lane_from).expect("valid lane");
        let to = geom.lane_center(ctrl.lane_to).expect("valid lane");
        let t_lc = f64::from(ctrl.lc_frames) * dt;
        world.vehicles[ego_i].base_y =
            lateral_offset(f64::from(ctrl.lc_elapsed) * dt, t_lc, from, to).expect("positive duration");
    }
    let next_frame = world.frame + 1;
    let relax = (-dt / config.perturbation.lane_keep_tau).exp();
    let preset = world.preset;
    for v in world.vehicles.iter_mut() {
        let y_old = v.y;
        let impulse = if v.speed > 0.0 {
            apply_weather_perturbation(v, &preset, &config.perturbation, rng, next_frame)
        } else {
            0.0
        };
        if impulse == 0.0 {
            v.drift *= relax;
        }
        v.y = v.base_y + v.drift;
        if let Ok(lane) = geom.lane_of(v.y) {
            v.lane = lane;
        }
        let vy = (v.y - y_old) / dt;
        let vx = v.speed / KMH_PER_MS;
        let norm = vx.hypot(vy);
        v.wheel_dir = if norm > 0.0 { (vx / norm, vy / norm) } else { (1.0, 0.0) };
    }

    if matches!(ctrl.phase, Phase::ChangingLeft | Phase::ChangingRight) && ctrl.lc_elapsed >= ctrl.lc_frames {
        let next = if ctrl.phase == Phase::ChangingLeft {
            Phase::Passing
        } else {
            Phase::Done
        };
        ctrl.enter(next, t_next);
    }

    if world.collision.is_none() {
        let ego_fp = world.ego().footprint();
        let hit = world
            .vehicles
            .iter()
            .enumerate()
            .find(|(i, v)| *i != ego_i && detect_collision(&ego_fp, &v.footprint()))
            .map(|(i, v)| (i, v.id));
        if let Some((oi, oid)) = hit {
            world.collision = Some((next_frame, oid));
            world.vehicles[ego_i].collided = true;
            world.vehicles[oi].collided = true;
            ctrl.enter(Phase::Aborted, t_next);
        }
    }

    world.frame = next_frame;
    if started {
        world.ov_events.push(next_frame);
    }
    StepOutcome {
        lane_change_started: started,
    }
}

fn record(world: &WorldState, sim_id: u32, ov: bool) -> FrameRecord {
    let geom = world.geometry;
    let vehicles: Vec<VehicleFrame> = world
        .vehicles
        .iter()
        .map(|v| {
            let y = round2(v.y);
            VehicleFrame {
                id: v.id,
                dims: Dimensions::new(round2(v.dims.length), round2(v.dims.width), round2(v.dims.height)),
                x: round2(v.x),
                y,
                lane: i32::from(geom.lane_of(y).unwrap_or(v.lane)),
                speed: round2(v.speed),
                dir: (round2(v.wheel_dir.0), round2(v.wheel_dir.1)),
                accel: round2(v.accel),
            }
        })
        .collect();
    let ego_lane = vehicles[world.ego_index].lane.clamp(1, i32::from(geom.n_lanes)) as u8;
    FrameRecord {
        sim: sim_id,
        frame: world.frame,
        ts: world.clock.timestamp(world.frame),
        ego_id: world.ego().id,
        vehicles,
        mv: world.mv_limit,
        rt: geom.right_line(ego_lane),
        lt: geom.left_line(ego_lane),
        lw: geom.lane_width,
        lwr: geom.right_width(ego_lane),
        lwl: geom.left_width(ego_lane),
        collision: world.collision.map(|(_, id)| id),
        prec: world.preset.precipitation,
        fog: world.preset.fog,
        wind: world.preset.wind,
        day_night: world.preset.day_night(),
        horizon: world.preset.horizon_line,
        ov,
    }
}

/// Simulates `spec` from frame 0 to the end of its clock.
pub fn run(spec: &ScenarioSpec, config: &EngineConfig) -> Result<SimulationLog> {
    let mut world = WorldState::from_spec(spec)?;
    let mut ctrl = EgoControllerState::new(world.ego().lane);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(WEATHER_STREAM);
    let last = spec.clock.last_frame();
    let mut frames = Vec::with_capacity(last as usize + 1);
    frames.push(record(&world, spec.sim_id, false));
    while world.frame < last {
        let out = step(&mut world, &mut ctrl, &mut rng, config);
        frames.push(record(&world, spec.sim_id, out.lane_change_started));
    }
    Ok(SimulationLog {
        sim_id: spec.sim_id,
        frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Colour, PresetName, VehicleKind};
    use crate::sampler::{scenario_for, GeneratorConfig, VehicleSpawn};
    use proptest::prelude::*;

    fn spawn(id: u32, kind: VehicleKind, x0: f64, lane0: u8, speed: f64) -> VehicleSpawn {
        VehicleSpawn {
            id,
            kind,
            dims: crate::domain::DimensionTable::default().get(kind),
            colour: Colour::Blue,
            x0,
            lane0,
            target_speed: speed,
        }
    }

    fn spec_with(vehicles: Vec<VehicleSpawn>, preset: PresetName) -> ScenarioSpec {
        ScenarioSpec {
            sim_id: 1,
            seed: 7,
            vehicles,
            ego_index: 0,
            preset: preset.preset(),
            clock: SimClock::default(),
            mv_limit: 120.0,
            geometry: LaneGeometry::default(),
        }
    }

    #[test]
    fn lateral_profile() {
        assert_eq!(lateral_offset(0.0, 2.0, 240.0, 244.0).unwrap(), 240.0);
        assert!((lateral_offset(2.0, 2.0, 240.0, 244.0).unwrap() - 244.0).abs() < 1e-12);
        assert!((lateral_offset(1.0, 2.0, 240.0, 244.0).unwrap() - 242.0).abs() < 1e-12);
        assert!(matches!(lateral_offset(0.5, 0.0, 240.0, 244.0), Err(Error::BadDuration(_))));
        // zero lateral velocity at both ends (finite differences)
        let h = 1e-6;
        let v0 = (lateral_offset(h, 2.0, 240.0, 244.0).unwrap() - 240.0) / h;
        let v1 = (244.0 - lateral_offset(2.0 - h, 2.0, 240.0, 244.0).unwrap()) / h;
        assert!(v0.abs() < 1e-4 && v1.abs() < 1e-4);
    }

    #[test]
    fn collision_boxes() {
        let d = Dimensions::new(4.0, 1.8, 1.5);
        let a = Footprint::new(100.0, 240.0, d);
        assert!(detect_collision(&a, &a));
        let b = Footprint::new(100.0 + 4.0 + 0.01, 240.0, d);
        assert!(!detect_collision(&a, &b));
        let c = Footprint::new(100.0, 244.0, Dimensions::new(7.5, 2.5, 3.5));
        assert!(!detect_collision(&a, &c));
        assert_eq!(detect_collision(&a, &c), detect_collision(&c, &a));
        assert!((footprint_gap(&a, &b) - 0.01).abs() < 1e-9);
        assert_eq!(footprint_gap(&a, &a), 0.0);
    }

    #[test]
    fn visibility_ranges() {
        let p = VisibilityParams::default();
        assert_eq!(effective_detection_range(&PresetName::ClearNoon.preset(), &p), 80.0);
        assert_eq!(effective_detection_range(&PresetName::ClearSunset.preset(), &p), 80.0 * 0.6);
        let cloudy = effective_detection_range(&PresetName::CloudyNight.preset(), &p);
        assert!((cloudy - 80.0 * 0.6 * (1.0 - 0.5 * 0.9)).abs() < 1e-12);
        assert!(cloudy >= p.min_range);
        for preset in crate::domain::preset_catalog() {
            assert!(effective_detection_range(&preset, &p) >= p.min_range);
        }
        // non-increasing in fog
        let mut last = f64::INFINITY;
        for f in 0..=100 {
            let v = p.fog_factor(f64::from(f));
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn rescaling() {
        let r = rule_of_three_rescale(120.0).unwrap();
        assert_eq!((r.sim_speed, r.time_scale), (40.0, 3.0));
        assert_eq!(rule_of_three_rescale(0.0).unwrap().sim_speed, 0.0);
        assert_eq!(rule_of_three_rescale(60.0).unwrap().sim_speed, 20.0);
        assert!(matches!(rule_of_three_rescale(-1.0), Err(Error::BadSpeed(_))));
    }

    #[test]
    fn perturbation_schedule() {
        let p = PerturbationParams::default();
        let calm = PresetName::ClearNoon.preset();
        assert_eq!(p.interval(&calm), 58);
        assert!((p.magnitude(&calm) - 0.05 * 0.3).abs() < 1e-15);
        let storm = PresetName::HardRainNight.preset();
        assert_eq!(p.interval(&storm), p.k_min);
        assert_eq!(p.magnitude(&storm), p.y_pert_max);
    }

    #[test]
    fn perturbation_signs_reproducible() {
        let preset = PresetName::HardRainNoon.preset();
        let p = PerturbationParams::default();
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let mut s = WorldState::from_spec(&spec_with(
                vec![spawn(1, VehicleKind::M, 330.0, 2, 80.0), spawn(2, VehicleKind::M, 400.0, 2, 60.0)],
                PresetName::HardRainNoon,
            ))
            .unwrap()
            .vehicles[0]
                .clone();
            (0..400)
                .map(|f| apply_weather_perturbation(&mut s, &preset, &p, &mut rng, f))
                .collect::<Vec<_>>()
        };
        let a = draw();
        assert_eq!(a, draw());
        assert!(a.iter().any(|d| *d > 0.0) && a.iter().any(|d| *d < 0.0));
    }

    #[test]
    fn zero_velocity_fixed_point() {
        let mut spec = spec_with(
            vec![spawn(1, VehicleKind::M, 330.0, 2, 50.0), spawn(2, VehicleKind::M, 400.0, 2, 50.0)],
            PresetName::ClearNoon,
        );
        spec.vehicles.iter_mut().for_each(|v| v.target_speed = 0.0);
        let cfg = EngineConfig {
            perturbation: PerturbationParams {
                enabled: false,
                ..Default::default()
            },
            ..Default::default()
        };
        let mut world = WorldState::from_spec(&spec).unwrap();
        let before: Vec<(f64, f64)> = world.vehicles.iter().map(|v| (v.x, v.y)).collect();
        let mut ctrl = EgoControllerState::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            step(&mut world, &mut ctrl, &mut rng, &cfg);
        }
        let after: Vec<(f64, f64)> = world.vehicles.iter().map(|v| (v.x, v.y)).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn constant_speed_advance() {
        // Non-ego vehicle cruising at 72 km/h moves 1 m per 0.05 s frame.
        let spec = spec_with(
            vec![spawn(1, VehicleKind::M, 330.0, 1, 72.0), spawn(2, VehicleKind::M, 440.0, 1, 72.0)],
            PresetName::ClearNoon,
        );
        let mut world = WorldState::from_spec(&spec).unwrap();
        let mut ctrl = EgoControllerState::new(1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x0 = world.vehicles[1].x;
        step(&mut world, &mut ctrl, &mut rng, &EngineConfig::default());
        assert!((world.vehicles[1].x - x0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn run_frame_count_and_cadence() {
        let spec = scenario_for(1, 1, &GeneratorConfig::default()).unwrap();
        let log = run(&spec, &EngineConfig::default()).unwrap();
        assert_eq!(log.frames.len(), 401);
        assert_eq!(log.frames[0].frame, 0);
        assert_eq!(log.frames[400].frame, 400);
        assert_eq!(log.frames[70].ts, 3.5);
        log.check_well_formed().unwrap();
    }

    #[test]
    fn two_vehicle_overtake_marks_two_events() {
        let spec = spec_with(
            vec![spawn(1, VehicleKind::M, 330.0, 2, 100.0), spawn(2, VehicleKind::M, 380.0, 2, 60.0)],
            PresetName::ClearNoon,
        );
        let log = run(&spec, &EngineConfig::default()).unwrap();
        let ov = log.ov_indices();
        assert_eq!(ov.len(), 2, "{ov:?}");
        assert!(log.frames.iter().all(|f| f.collision.is_none()));
        let ego_last = log.frames.last().unwrap().ego().unwrap();
        assert_eq!(ego_last.lane, 2);
    }

    #[test]
    fn storm_step_displacement_bounded() {
        let spec = spec_with(
            vec![spawn(1, VehicleKind::M, 330.0, 1, 60.0), spawn(2, VehicleKind::M, 440.0, 1, 120.0)],
            PresetName::HardRainNight,
        );
        let cfg = EngineConfig::default();
        let mut world = WorldState::from_spec(&spec).unwrap();
        let mut ctrl = EgoControllerState::new(1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..400 {
            let ys: Vec<f64> = world.vehicles.iter().map(|v| v.y).collect();
            step(&mut world, &mut ctrl, &mut rng, &cfg);
            for (v, y) in world.vehicles.iter().zip(ys) {
                assert!((v.y - y).abs() <= cfg.perturbation.y_pert_max + 1e-12);
            }
        }
    }

    #[test]
    fn perturbation_window_bound() {
        let preset = PresetName::HardRainNight.preset();
        let p = PerturbationParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut s = WorldState::from_spec(&spec_with(
            vec![spawn(1, VehicleKind::M, 330.0, 2, 80.0), spawn(2, VehicleKind::M, 400.0, 2, 60.0)],
            PresetName::HardRainNight,
        ))
        .unwrap()
        .vehicles[0]
            .clone();
        let impulses: Vec<f64> = (0..2000)
            .map(|f| apply_weather_perturbation(&mut s, &preset, &p, &mut rng, f).abs())
            .collect();
        for w in [1usize, 7, 10, 33, 100] {
            let bound = (w as f64 / f64::from(p.k_min)).ceil() * p.y_pert_max;
            for win in impulses.windows(w) {
                assert!(win.iter().sum::<f64>() <= bound + 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn run_invariants(seed in any::<u64>(), sim in 1u32..500) {
            let spec = scenario_for(seed, sim, &GeneratorConfig::default()).unwrap();
            let cfg = EngineConfig::default();
            let log = run(&spec, &cfg).unwrap();
            prop_assert_eq!(&log, &run(&spec, &cfg).unwrap());
            let ov = log.ov_indices();
            prop_assert!(ov.len() <= 2);
            for f in &log.frames {
                prop_assert_eq!(f.vehicles.len(), spec.vehicles.len());
                prop_assert!(f.vehicles.iter().all(|v| v.speed >= 0.0));
            }
            // Non-ego vehicles hold their spawn lane and target speed unless hit.
            let hit = log.frames.last().unwrap().collision;
            for (i, s) in spec.vehicles.iter().enumerate().skip(1) {
                if Some(s.id) == hit { continue; }
                for f in &log.frames {
                    prop_assert_eq!(f.vehicles[i].lane, i32::from(s.lane0));
                    prop_assert!((f.vehicles[i].speed - s.target_speed).abs() < 1e-9);
                }
            }
        }
    }
}
