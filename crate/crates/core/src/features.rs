//! Per-simulation feature rows: static descriptors of the run plus dynamic
//! measurements taken when the overtake starts (or frame-averaged when it
//! never does).

use serde::{Deserialize, Serialize};

use crate::detector::{DetectorConfig, Verdict};
use crate::domain::{ClassLabel, DayNight, LaneGeometry, VehicleKind};
use crate::error::{Error, Result};
use crate::log::{FrameRecord, SimulationLog, VehicleFrame};

/// Column names of the numeric part of a feature row, in file order.
pub const FEATURE_NAMES: [&str; 15] = [
    "DN", "HL", "TE", "TP", "WT", "OT", "NV", "SE", "SP", "DSEP", "D", "OLR", "PREC", "WIND", "FOG",
];

/// Which feature columns are categorical.
pub const CATEGORICAL: [&str; 4] = ["DN", "HL", "TE", "TP"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub dn: DayNight,
    pub hl: bool,
    pub te: VehicleKind,
    pub tp: VehicleKind,
    pub wt: f64,
    pub ot: f64,
    pub nv: u32,
    pub se: f64,
    pub sp: f64,
    pub dsep: f64,
    pub d: f64,
    pub olr: f64,
    pub prec: f64,
    pub wind: f64,
    pub fog: f64,
    pub class: ClassLabel,
}

impl FeatureRow {
    /// Numeric encoding in [`FEATURE_NAMES`] order.
    pub fn encode(&self) -> [f64; 15] {
        [
            f64::from(self.dn.code()),
            if self.hl { 1.0 } else { 0.0 },
            f64::from(self.te.code()),
            f64::from(self.tp.code()),
            self.wt,
            self.ot,
            f64::from(self.nv),
            self.se,
            self.sp,
            self.dsep,
            self.d,
            self.olr,
            self.prec,
            self.wind,
            self.fog,
        ]
    }

    pub fn decode(values: &[f64; 15], class: ClassLabel) -> Result<Self> {
        let code = |i: usize| -> Result<u8> {
            let v = values[i];
            if v.fract() != 0.0 || !(0.0..=255.0).contains(&v) {
                return Err(Error::UnknownCategory {
                    column: FEATURE_NAMES[i].into(),
                    value: v.to_string(),
                });
            }
            Ok(v as u8)
        };
        let hl = match code(1)? {
            0 => false,
            1 => true,
            c => {
                return Err(Error::UnknownCategory {
                    column: "HL".into(),
                    value: c.to_string(),
                })
            }
        };
        let nv = values[6];
        if nv.fract() != 0.0 || nv < 0.0 {
            return Err(Error::InvalidInput(format!("NV must be a count, got {nv}")));
        }
        Ok(Self {
            dn: DayNight::from_code(code(0)?)?,
            hl,
            te: VehicleKind::from_code(code(2)?)?,
            tp: VehicleKind::from_code(code(3)?)?,
            wt: values[4],
            ot: values[5],
            nv: nv as u32,
            se: values[7],
            sp: values[8],
            dsep: values[9],
            d: values[10],
            olr: values[11],
            prec: values[12],
            wind: values[13],
            fog: values[14],
            class,
        })
    }

    /// Value of the named numeric column.
    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.encode()[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticFields {
    pub dn: DayNight,
    pub hl: bool,
    pub te: VehicleKind,
    pub tp: VehicleKind,
    pub nv: u32,
    pub wt: f64,
    pub ot: f64,
    /// Vehicle id of the overtake target.
    pub target_id: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicFields {
    pub se: f64,
    pub sp: f64,
    pub dsep: f64,
    pub d: f64,
    pub olr: f64,
    pub prec: f64,
    pub wind: f64,
    pub fog: f64,
}

/// Nearest vehicle ahead of the ego in the ego's lane.
pub fn preceding_vehicle(frame: &FrameRecord) -> Option<&VehicleFrame> {
    let ego = frame.ego().ok()?;
    frame
        .vehicles
        .iter()
        .filter(|v| v.id != ego.id && v.lane == ego.lane && v.x > ego.x)
        .min_by(|a, b| a.x.total_cmp(&b.x))
}

/// Overtake target at the first frame. Falls back to the nearest vehicle
/// ahead in any lane, then to the nearest vehicle overall.
fn initial_target(frame: &FrameRecord) -> Result<&VehicleFrame> {
    let ego = frame.ego()?;
    let others = || frame.vehicles.iter().filter(|v| v.id != ego.id);
    preceding_vehicle(frame)
        .or_else(|| others().filter(|v| v.x > ego.x).min_by(|a, b| a.x.total_cmp(&b.x)))
        .or_else(|| others().min_by(|a, b| (a.x - ego.x).abs().total_cmp(&(b.x - ego.x).abs())))
        .ok_or_else(|| Error::MalformedLog("log has no vehicle besides the ego".into()))
}

/// Percent of the window length covered by vehicles in `lane`.
pub fn occupancy_rate(frame: &FrameRecord, lane: i32, geometry: &LaneGeometry) -> f64 {
    let covered: f64 = frame
        .vehicles
        .iter()
        .filter(|v| v.lane == lane && v.x >= geometry.x_min && v.x <= geometry.x_max)
        .map(|v| v.dims.length)
        .sum();
    100.0 * covered / geometry.window_length()
}

pub fn extract_static(log: &SimulationLog, verdict: &Verdict, config: &DetectorConfig) -> Result<StaticFields> {
    let first = log
        .frames
        .first()
        .ok_or_else(|| Error::MalformedLog("log has no frames".into()))?;
    let ego = first.ego()?;
    let target = initial_target(first)?;
    let trace = &verdict.trace;
    let (wt, ot) = match (verdict.label, trace.t_a) {
        (ClassLabel::NoAttempt, _) | (_, None) => (log.duration(), 0.0),
        (_, Some(t_a)) => (t_a, trace.t_end.unwrap_or(log.duration()) - t_a),
    };
    Ok(StaticFields {
        dn: first.day_night,
        hl: first.horizon,
        te: config.dimensions.nearest_kind(ego.dims),
        tp: config.dimensions.nearest_kind(target.dims),
        nv: first.vehicles.len() as u32,
        wt,
        ot,
        target_id: target.id,
    })
}

fn dynamic_in(frame: &FrameRecord, target_id: u32, geometry: &LaneGeometry) -> Result<DynamicFields> {
    let ego = frame.ego()?;
    let target = frame.vehicle(target_id).ok_or_else(|| {
        Error::MalformedLog(format!("frame {} has no vehicle {target_id}", frame.frame))
    })?;
    let olr = if ego.lane >= 1 && ego.lane < i32::from(geometry.n_lanes) {
        occupancy_rate(frame, ego.lane + 1, geometry)
    } else {
        0.0
    };
    Ok(DynamicFields {
        se: ego.speed,
        sp: target.speed,
        dsep: ego.speed - target.speed,
        d: (ego.x - target.x).hypot(ego.y - target.y),
        olr,
        prec: frame.prec,
        wind: frame.wind,
        fog: frame.fog,
    })
}

/// Dynamic fields at the frame whose timestamp is `t`.
pub fn extract_dynamic_at(
    log: &SimulationLog,
    t: f64,
    target_id: u32,
    geometry: &LaneGeometry,
) -> Result<DynamicFields> {
    let i = log.index_at(t)?;
    dynamic_in(&log.frames[i], target_id, geometry)
}

/// Frame-averaged dynamic fields, re-resolving the target every frame.
fn dynamic_mean(log: &SimulationLog, fallback: u32, geometry: &LaneGeometry) -> Result<DynamicFields> {
    let n = log.frames.len() as f64;
    let mut acc = [0.0; 7];
    for f in &log.frames {
        let target = preceding_vehicle(f).map_or(fallback, |v| v.id);
        let d = dynamic_in(f, target, geometry)?;
        for (a, v) in acc.iter_mut().zip([d.se, d.sp, d.d, d.olr, d.prec, d.wind, d.fog]) {
            *a += v;
        }
    }
    let [se, sp, d, olr, prec, wind, fog] = acc.map(|a| a / n);
    Ok(DynamicFields {
        se,
        sp,
        dsep: se - sp,
        d,
        olr,
        prec,
        wind,
        fog,
    })
}

pub fn feature_row(
    log: &SimulationLog,
    verdict: &Verdict,
    config: &DetectorConfig,
    geometry: &LaneGeometry,
) -> Result<FeatureRow> {
    let s = extract_static(log, verdict, config)?;
    let dynamic = match (verdict.label, verdict.trace.t_a) {
        (ClassLabel::NoAttempt, _) | (_, None) => dynamic_mean(log, s.target_id, geometry)?,
        (_, Some(t_a)) => extract_dynamic_at(log, t_a, s.target_id, geometry)?,
    };
    Ok(FeatureRow {
        dn: s.dn,
        hl: s.hl,
        te: s.te,
        tp: s.tp,
        wt: s.wt,
        ot: s.ot,
        nv: s.nv,
        se: dynamic.se,
        sp: dynamic.sp,
        dsep: dynamic.dsep,
        d: dynamic.d,
        olr: dynamic.olr,
        prec: dynamic.prec,
        wind: dynamic.wind,
        fog: dynamic.fog,
        class: verdict.label,
    })
}

/// Rectangular numeric data where any cell may be missing.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

/// Cells that were filled, as (row, column name).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImputationReport {
    pub filled: Vec<(usize, String)>,
}

impl NumericTable {
    pub fn from_features(rows: &[FeatureRow]) -> Self {
        Self {
            columns: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            rows: rows.iter().map(|r| r.encode().map(Some).to_vec()).collect(),
        }
    }

    /// Ego-centred numeric view of a frame log; `C` is missing until a
    /// collision happens.
    pub fn from_frame_log(log: &SimulationLog) -> Result<Self> {
        let columns = ["F", "TS", "V", "A", "MV", "LW", "LWR", "LWL", "C", "Prec", "Fog", "Wind", "OV"];
        let mut rows = Vec::with_capacity(log.frames.len());
        for f in &log.frames {
            let ego = f.ego()?;
            rows.push(vec![
                Some(f64::from(f.frame)),
                Some(f.ts),
                Some(ego.speed),
                Some(ego.accel),
                Some(f.mv),
                Some(f.lw),
                Some(f.lwr),
                Some(f.lwl),
                f.collision.map(f64::from),
                Some(f.prec),
                Some(f.fog),
                Some(f.wind),
                Some(if f.ov { 1.0 } else { 0.0 }),
            ]);
        }
        Ok(Self {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows,
        })
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Replaces every missing value with 0.
pub fn impute_missing(table: &NumericTable) -> (NumericTable, ImputationReport) {
    let mut report = ImputationReport::default();
    let rows = table
        .rows
        .iter()
        .enumerate()
        .map(|(r, row)| {
            row.iter()
                .enumerate()
                .map(|(c, v)| {
                    if v.is_none() {
                        report.filled.push((r, table.columns[c].clone()));
                    }
                    Some(v.unwrap_or(0.0))
                })
                .collect()
        })
        .collect();
    (
        NumericTable {
            columns: table.columns.clone(),
            rows,
        },
        report,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{analyze, testlog::*};
    use crate::domain::Dimensions;

    fn geom() -> LaneGeometry {
        LaneGeometry::default()
    }

    #[test]
    fn occupancy() {
        let mut f = frame(0, vec![vehicle(1, 330.0, 2, 60.0)]);
        assert_eq!(occupancy_rate(&f, 3, &geom()), 0.0);
        let mut v = vehicle(2, 400.0, 3, 60.0);
        v.dims = Dimensions::new(6.5, 2.0, 2.0);
        f.vehicles.push(v.clone());
        assert!((occupancy_rate(&f, 3, &geom()) - 5.0).abs() < 1e-12);
        f.vehicles[1].dims.length = 7.5;
        v.id = 3;
        v.dims.length = 5.5;
        f.vehicles.push(v);
        assert!((occupancy_rate(&f, 3, &geom()) - 10.0).abs() < 1e-12);
        // outside the window
        f.vehicles[2].x = 460.0;
        assert!((occupancy_rate(&f, 3, &geom()) - 7.5 / 1.3).abs() < 1e-12);
    }

    #[test]
    fn distance_and_speed_difference() {
        let f = frame(
            0,
            vec![vehicle(1, 351.35, 2, 66.0), vehicle(2, 391.35, 2, 66.0)],
        );
        let log = SimulationLog { sim_id: 1, frames: vec![f.clone(), { let mut g = f; g.frame = 1; g.ts = 0.05; g }] };
        let d = extract_dynamic_at(&log, 0.0, 2, &geom()).unwrap();
        assert_eq!(d.dsep, 0.0);
        assert!((d.d - 40.0).abs() < 1e-9);
        assert!(matches!(extract_dynamic_at(&log, 0.07, 2, &geom()), Err(Error::BadInstant(_))));
    }

    #[test]
    fn no_attempt_row() {
        let mut log = quiet(401);
        for (i, f) in log.frames.iter_mut().enumerate() {
            f.vehicles[0].speed = 50.0 + 10.0 * i as f64 / 400.0;
        }
        let v = analyze(&log, &DetectorConfig::default()).unwrap();
        let row = feature_row(&log, &v, &DetectorConfig::default(), &geom()).unwrap();
        assert_eq!(row.class, ClassLabel::NoAttempt);
        assert_eq!(row.ot, 0.0);
        assert_eq!(row.wt, 20.0);
        assert!((row.se - 55.0).abs() < 1e-9);
        assert!((row.dsep - (row.se - row.sp)).abs() < 1e-12);
        assert_eq!(row.te, VehicleKind::M);
    }

    #[test]
    fn attempt_row_sampled_at_t_a() {
        let mut log = quiet(401);
        log.frames[40].ov = true;
        for f in &mut log.frames[40..] {
            f.vehicles[0].lane = 3;
        }
        let v = analyze(&log, &DetectorConfig::default()).unwrap();
        let row = feature_row(&log, &v, &DetectorConfig::default(), &geom()).unwrap();
        let d = extract_dynamic_at(&log, 2.0, 2, &geom()).unwrap();
        assert_eq!(row.wt, 2.0);
        assert_eq!(row.ot, 18.0);
        assert_eq!((row.se, row.sp, row.d, row.olr), (d.se, d.sp, d.d, d.olr));
    }

    #[test]
    fn encode_decode() {
        let row = FeatureRow {
            dn: DayNight::Night,
            hl: true,
            te: VehicleKind::V,
            tp: VehicleKind::T,
            wt: 2.5,
            ot: 4.05,
            nv: 4,
            se: 88.0,
            sp: 60.0,
            dsep: 28.0,
            d: 30.5,
            olr: 4.2,
            prec: 60.0,
            wind: 60.0,
            fog: 60.0,
            class: ClassLabel::SuccessIllegal,
        };
        assert_eq!(FeatureRow::decode(&row.encode(), row.class).unwrap(), row);
        let mut bad = row.encode();
        bad[2] = 9.0;
        assert!(FeatureRow::decode(&bad, row.class).is_err());
    }

    #[test]
    fn imputation() {
        let log = quiet(5);
        let table = NumericTable::from_frame_log(&log).unwrap();
        let (filled, report) = impute_missing(&table);
        assert_eq!(report.filled.len(), 5);
        assert!(report.filled.iter().all(|(_, c)| c == "C"));
        assert!(filled.column("C").unwrap().iter().all(|v| *v == Some(0.0)));

        let complete = NumericTable {
            columns: vec!["a".into()],
            rows: vec![vec![Some(1.5)]],
        };
        let (same, report) = impute_missing(&complete);
        assert_eq!(same, complete);
        assert!(report.filled.is_empty());
    }
}
