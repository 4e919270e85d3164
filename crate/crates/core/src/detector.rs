//! Post-hoc analysis of a frame log: lane-change events, manoeuvre stages,
//! traffic-rule verdicts and the five-way outcome label.

use serde::{Deserialize, Serialize};

use crate::domain::{ClassLabel, DimensionTable, LineType};
use crate::error::{Error, Result};
use crate::log::SimulationLog;
use crate::sim::{footprint_gap, Footprint, LaneChangeTiming};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Minimum footprint gap (m) during a manoeuvre before it counts as
    /// endangering other road users.
    pub g_safe: f64,
    /// Must match the engine's timing to locate the end of the return.
    pub lane_change: LaneChangeTiming,
    /// Used to recover vehicle kinds from logged dimensions.
    pub dimensions: DimensionTable,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            g_safe: 2.0,
            lane_change: LaneChangeTiming::default(),
            dimensions: DimensionTable::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StageReached {
    #[serde(rename = "NONE")]
    None,
    #[serde(rename = "STAGE2")]
    Stage2,
    #[serde(rename = "STAGE3")]
    Stage3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    #[serde(rename = "SOLID_LINE_CROSS")]
    SolidLineCross,
    #[serde(rename = "SPEEDING")]
    Speeding,
    #[serde(rename = "UNSAFE_GAP")]
    UnsafeGap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleViolation {
    pub rule: Rule,
    pub frame: u32,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManeuverTrace {
    /// Start of the first lane change, s.
    pub t_a: Option<f64>,
    /// Start of the second lane change, s.
    pub t_b: Option<f64>,
    pub t_collision: Option<f64>,
    /// End of the manoeuvre, s. May lie past the log when the return was
    /// still in progress at the last frame.
    pub t_end: Option<f64>,
    pub stages_reached: StageReached,
    pub violations: Vec<RuleViolation>,
    #[serde(skip)]
    pub(crate) a_index: Option<usize>,
    #[serde(skip)]
    pub(crate) collision_index: Option<usize>,
    #[serde(skip)]
    pub(crate) end_index: Option<usize>,
}

impl ManeuverTrace {
    pub fn attempted(&self) -> bool {
        self.t_a.is_some()
    }
}

/// Recovers the stage timeline from the OV column and ego lanes.
pub fn stage_trace(log: &SimulationLog, config: &DetectorConfig) -> Result<ManeuverTrace> {
    log.check_well_formed()?;
    let ov = log.ov_indices();
    if ov.len() > 2 {
        return Err(Error::MalformedLog(format!(
            "{} lane-change events; at most 2 expected",
            ov.len()
        )));
    }
    let frames = &log.frames;
    let last = frames.len() - 1;
    let ts = |i: usize| frames[i].ts;
    let initial_lane = frames[0].ego()?.lane;
    let final_lane = frames[last].ego()?.lane;
    let collision_index = frames.iter().position(|f| f.collision.is_some());

    let stages_reached = match ov.len() {
        0 => StageReached::None,
        1 => StageReached::Stage2,
        _ if final_lane == initial_lane => StageReached::Stage3,
        _ => StageReached::Stage2,
    };

    let a_index = ov.first().copied();
    let end_index = match a_index {
        None => None,
        Some(a) => Some(match collision_index {
            Some(c) if c >= a => c,
            _ if stages_reached == StageReached::Stage3 => {
                let b = ov[1];
                let decision = b.saturating_sub(1);
                let speed = frames[decision].ego()?.speed;
                decision + config.lane_change.frames(speed, log.dt()?) as usize
            }
            _ => last,
        }),
    };
    let t_end = end_index.map(|e| {
        if e <= last {
            ts(e)
        } else {
            ts(last) + (e - last) as f64 * log.dt().unwrap_or(0.0)
        }
    });

    Ok(ManeuverTrace {
        t_a: a_index.map(ts),
        t_b: ov.get(1).copied().map(ts),
        t_collision: collision_index.map(ts),
        t_end,
        stages_reached,
        violations: Vec::new(),
        a_index,
        collision_index,
        end_index,
    })
}

/// Traffic-rule verdicts over the manoeuvre window `[t_a, end]`.
pub fn legality_check(
    log: &SimulationLog,
    trace: &ManeuverTrace,
    config: &DetectorConfig,
) -> Result<Vec<RuleViolation>> {
    let (Some(a), Some(end)) = (trace.a_index, trace.end_index) else {
        return Ok(Vec::new());
    };
    let frames = &log.frames;
    let end = end.min(frames.len() - 1);
    let mut out = Vec::new();

    for i in a.max(1)..=end {
        let prev = frames[i - 1].ego()?;
        let cur = frames[i].ego()?;
        let line = if cur.lane > prev.lane {
            Some(frames[i - 1].lt)
        } else if cur.lane < prev.lane {
            Some(frames[i - 1].rt)
        } else {
            None
        };
        if line == Some(LineType::Solid) {
            out.push(RuleViolation {
                rule: Rule::SolidLineCross,
                frame: frames[i].frame,
                detail: format!("lane {} -> {} over a solid line", prev.lane, cur.lane),
            });
        }
    }

    let mut peak: Option<(usize, f64)> = None;
    let mut first_over = None;
    for (i, f) in frames.iter().enumerate().take(end + 1).skip(a) {
        let v = f.ego()?.speed;
        if v > f.mv {
            first_over.get_or_insert(i);
            if peak.is_none_or(|(_, p)| v > p) {
                peak = Some((i, v));
            }
        }
    }
    if let (Some(i), Some((_, p))) = (first_over, peak) {
        out.push(RuleViolation {
            rule: Rule::Speeding,
            frame: frames[i].frame,
            detail: format!("peak {p} km/h over limit {}", frames[i].mv),
        });
    }

    let mut closest: Option<(usize, u32, f64)> = None;
    for (i, f) in frames.iter().enumerate().take(end + 1).skip(a) {
        let ego = f.ego()?;
        let efp = Footprint::new(ego.x, ego.y, ego.dims);
        for o in f.vehicles.iter().filter(|v| v.id != ego.id) {
            let g = footprint_gap(&efp, &Footprint::new(o.x, o.y, o.dims));
            if closest.is_none_or(|(_, _, best)| g < best) {
                closest = Some((i, o.id, g));
            }
        }
    }
    if let Some((i, id, g)) = closest {
        if g < config.g_safe {
            out.push(RuleViolation {
                rule: Rule::UnsafeGap,
                frame: frames[i].frame,
                detail: format!("gap {g:.2} m to vehicle {id} below {}", config.g_safe),
            });
        }
    }
    Ok(out)
}

/// Five-way outcome label; a function of stage, collision and violations.
pub fn classify(trace: &ManeuverTrace) -> ClassLabel {
    match trace.stages_reached {
        StageReached::None => ClassLabel::NoAttempt,
        _ if trace.t_collision.is_some() => ClassLabel::UnsuccessCollision,
        StageReached::Stage2 => ClassLabel::UnsuccessNoCollision,
        StageReached::Stage3 if trace.violations.is_empty() => ClassLabel::SuccessLegal,
        StageReached::Stage3 => ClassLabel::SuccessIllegal,
    }
}

/// Per-run verdict record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub sim: u32,
    pub label: ClassLabel,
    #[serde(flatten)]
    pub trace: ManeuverTrace,
}

/// Stage trace, rule verdicts and label in one pass.
pub fn analyze(log: &SimulationLog, config: &DetectorConfig) -> Result<Verdict> {
    let mut trace = stage_trace(log, config)?;
    trace.violations = legality_check(log, &trace, config)?;
    Ok(Verdict {
        sim: log.sim_id,
        label: classify(&trace),
        trace,
    })
}


#[cfg(test)]
mod tests {
    use super::testlog::*;
    use super::*;
    use crate::log::SimulationLog;

    fn cfg() -> DetectorConfig {
        DetectorConfig::default()
    }

    /// Ego overtakes: OV at frame `a` to lane 3, OV at `b` back to lane 2.
    fn overtake(a: usize, b: usize, n: usize) -> SimulationLog {
        let mut log = quiet(n as u32);
        for (i, f) in log.frames.iter_mut().enumerate() {
            let ego = &mut f.vehicles[0];
            if i >= a && i < b {
                ego.lane = 3;
                ego.y = 248.0;
            }
            // ego moves far ahead once passing so gaps stay large
            if i >= a {
                ego.x += 100.0;
            }
        }
        log.frames[a].ov = true;
        log.frames[b].ov = true;
        log
    }

    #[test]
    fn stage_counts() {
        let log = overtake(40, 120, 401);
        let t = stage_trace(&log, &cfg()).unwrap();
        assert_eq!(t.stages_reached, StageReached::Stage3);
        assert_eq!(t.t_a, Some(2.0));
        assert_eq!(t.t_b, Some(6.0));

        let mut one = quiet(200);
        one.frames[40].ov = true;
        for f in &mut one.frames[40..] {
            f.vehicles[0].lane = 3;
        }
        assert_eq!(stage_trace(&one, &cfg()).unwrap().stages_reached, StageReached::Stage2);

        assert_eq!(stage_trace(&quiet(50), &cfg()).unwrap().stages_reached, StageReached::None);
    }

    #[test]
    fn success_end_uses_lane_change_timing() {
        let log = overtake(40, 120, 401);
        let t = stage_trace(&log, &cfg()).unwrap();
        // 72 km/h -> clamp(1.8 s) -> 36 frames from the decision frame 119.
        assert_eq!(t.end_index, Some(119 + 36));
    }

    #[test]
    fn too_many_events_is_malformed() {
        let mut log = quiet(50);
        for i in [5, 10, 15] {
            log.frames[i].ov = true;
        }
        assert!(matches!(stage_trace(&log, &cfg()), Err(Error::MalformedLog(_))));
    }

    #[test]
    fn malformed_vehicle_set() {
        let mut log = quiet(10);
        log.frames[5].vehicles.pop();
        assert!(matches!(stage_trace(&log, &cfg()), Err(Error::MalformedLog(_))));
    }

    #[test]
    fn classification_cases() {
        let log = overtake(40, 120, 401);
        assert_eq!(analyze(&log, &cfg()).unwrap().label, ClassLabel::SuccessLegal);

        let mut col = overtake(40, 120, 401);
        for f in &mut col.frames[60..] {
            f.collision = Some(2);
        }
        assert_eq!(analyze(&col, &cfg()).unwrap().label, ClassLabel::UnsuccessCollision);

        assert_eq!(analyze(&quiet(30), &cfg()).unwrap().label, ClassLabel::NoAttempt);
    }

    #[test]
    fn solid_line_crossing() {
        let mut log = overtake(40, 120, 401);
        log.frames[39].lt = LineType::Solid;
        let v = analyze(&log, &cfg()).unwrap();
        assert_eq!(v.trace.violations.len(), 1);
        assert_eq!(v.trace.violations[0].rule, Rule::SolidLineCross);
        assert_eq!(v.label, ClassLabel::SuccessIllegal);
    }

    #[test]
    fn speeding() {
        let mut log = overtake(40, 120, 401);
        for f in &mut log.frames {
            f.mv = 90.0;
        }
        log.frames[80].vehicles[0].speed = 95.0;
        let v = analyze(&log, &cfg()).unwrap();
        assert_eq!(v.trace.violations.len(), 1);
        assert_eq!(v.trace.violations[0].rule, Rule::Speeding);
        assert_eq!(v.trace.violations[0].frame, 80);
        // speeding before the manoeuvre does not count
        let mut early = overtake(40, 120, 401);
        early.frames[10].vehicles[0].speed = 130.0;
        assert!(analyze(&early, &cfg()).unwrap().trace.violations.is_empty());
    }

    #[test]
    fn unsafe_gap() {
        let mut log = overtake(40, 120, 401);
        let ego_x = log.frames[70].vehicles[0].x;
        // put vehicle 2 alongside in the adjacent lane, 1.0 m lateral gap
        let other = &mut log.frames[70].vehicles[1];
        other.x = ego_x;
        other.y = 248.0 - 1.9 - 1.0;
        let v = analyze(&log, &cfg()).unwrap();
        assert!(v.trace.violations.iter().any(|r| r.rule == Rule::UnsafeGap));
        assert_eq!(v.label, ClassLabel::SuccessIllegal);
    }

    /// Literal reading of the class definitions over small logs.
    fn reference_label(ov: &[usize], collision: Option<usize>, final_back: bool, violation: bool) -> ClassLabel {
        if ov.is_empty() {
            return ClassLabel::NoAttempt;
        }
        if collision.is_some() {
            return ClassLabel::UnsuccessCollision;
        }
        let completed = ov.len() == 2 && final_back;
        if !completed {
            return ClassLabel::UnsuccessNoCollision;
        }
        if violation {
            ClassLabel::SuccessIllegal
        } else {
            ClassLabel::SuccessLegal
        }
    }

    #[test]
    fn brute_force_oracle_on_ten_frame_logs() {
        let n = 10usize;
        let mut checked = 0;
        let mut ov_sets: Vec<Vec<usize>> = vec![vec![]];
        for a in 1..n {
            ov_sets.push(vec![a]);
            for b in a + 1..n {
                ov_sets.push(vec![a, b]);
            }
        }
        for ov in &ov_sets {
            for collision in std::iter::once(None).chain((ov.first().copied().unwrap_or(1)..n).step_by(3).map(Some)) {
                for final_back in [true, false] {
                    for speeding_at in [None, Some(n - 1)] {
                        let mut log = quiet(n as u32);
                        for &i in ov {
                            log.frames[i].ov = true;
                        }
                        // lane 3 between events; stays in 3 unless final_back
                        if let Some(&a) = ov.first() {
                            let back = ov.get(1).copied().filter(|_| final_back).unwrap_or(n);
                            for f in &mut log.frames[a..back] {
                                f.vehicles[0].lane = 3;
                            }
                        }
                        if let Some(c) = collision {
                            for f in &mut log.frames[c..] {
                                f.collision = Some(2);
                            }
                        }
                        if let Some(s) = speeding_at {
                            log.frames[s].vehicles[0].speed = 200.0;
                        }
                        // Speeding at the last frame is inside the window for
                        // every attempt whose end reaches it.
                        let trace = {
                            let mut t = stage_trace(&log, &cfg()).unwrap();
                            t.violations = legality_check(&log, &t, &cfg()).unwrap();
                            t
                        };
                        let in_window = speeding_at.is_some()
                            && trace.end_index.is_some_and(|e| e >= n - 1);
                        let expected = reference_label(ov, collision, final_back || ov.len() < 2, in_window);
                        let expected = if ov.len() == 2 && !final_back && collision.is_none() {
                            ClassLabel::UnsuccessNoCollision
                        } else {
                            expected
                        };
                        assert_eq!(classify(&trace), expected, "ov={ov:?} col={collision:?} back={final_back}");
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 200);
    }

    #[test]
    fn label_consistency() {
        for t in [
            overtake(40, 120, 401),
            {
                let mut l = overtake(40, 120, 401);
                l.frames[39].lt = LineType::Solid;
                l
            },
        ] {
            let v = analyze(&t, &cfg()).unwrap();
            let legal = v.trace.stages_reached == StageReached::Stage3
                && v.trace.t_collision.is_none()
                && v.trace.violations.is_empty();
            assert_eq!(v.label == ClassLabel::SuccessLegal, legal);
        }
    }
}
