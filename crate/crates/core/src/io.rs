//! File formats: frame logs, feature tables, verdicts, statistics tables,
//! the relational export, replay traces and the run manifest.

use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::{AssociationMatrix, BoxStats, ClassSummary, Histogram, SbsResult};
use crate::detector::Verdict;
use crate::domain::{horizon_label, parse_horizon, ClassLabel, DayNight, DimensionTable, Dimensions, LineType};
use crate::error::{Error, Result};
use crate::features::{FeatureRow, FEATURE_NAMES};
use crate::log::{FrameRecord, SimulationLog, VehicleFrame};

pub const FRAME_LOG_COLUMNS: [&str; 22] = [
    "S", "F", "TS", "IDego", "Dim", "L", "V", "D", "A", "MV", "RT", "LT", "LW", "LWR", "LWL", "C", "Prec", "Fog",
    "Wind", "DN", "HL", "OV",
];

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).from_reader(r)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(Error::SchemaMismatch {
            expected: expected.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(())
}

/// Row-and-column aware field parser.
struct Fields<'a> {
    record: &'a csv::StringRecord,
    row: usize,
    names: &'a [&'a str],
}

impl Fields<'_> {
    fn raw(&self, i: usize) -> &str {
        self.record.get(i).unwrap_or("")
    }

    fn err(&self, i: usize, msg: impl Into<String>) -> Error {
        Error::parse(self.row, self.names[i], msg)
    }

    fn get<T: FromStr>(&self, i: usize) -> Result<T>
    where
        T::Err: Display,
    {
        let s = self.raw(i);
        s.parse::<T>().map_err(|e| self.err(i, format!("{s:?}: {e}")))
    }
}

fn tuple_cell<T: Display>(parts: impl Iterator<Item = T>) -> String {
    let items: Vec<String> = parts.map(|p| p.to_string()).collect();
    format!("({})", items.join(","))
}

fn join_tuples(vehicles: &[VehicleFrame], f: impl Fn(&VehicleFrame) -> String) -> String {
    vehicles.iter().map(f).collect::<Vec<_>>().join(";")
}

/// Splits `"(a,b);(c,d)"` into `[[a,b],[c,d]]`.
fn split_tuples(cell: &str, arity: usize) -> std::result::Result<Vec<Vec<&str>>, String> {
    if cell.trim().is_empty() {
        return Ok(Vec::new());
    }
    cell.split(';')
        .map(|t| {
            let t = t.trim();
            let inner = t
                .strip_prefix('(')
                .and_then(|t| t.strip_suffix(')'))
                .ok_or_else(|| format!("tuple {t:?} is not parenthesised"))?;
            let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
            if parts.len() != arity {
                return Err(format!("tuple {t:?} has {} fields, expected {arity}", parts.len()));
            }
            Ok(parts)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrameLogOptions {
    /// Write lanes 1..=5 as -3..=-7.
    pub carla_lane_ids: bool,
}

pub fn carla_lane_id(lane: i32) -> i32 {
    -(lane + 2)
}

pub fn native_lane_id(lane: i32) -> i32 {
    if (-7..=-3).contains(&lane) {
        -lane - 2
    } else {
        lane
    }
}

impl SimulationLog {
    /// Maps lane ids written with the carla convention back to 1..=5.
    pub fn with_native_lane_ids(mut self) -> Self {
        for f in &mut self.frames {
            for v in &mut f.vehicles {
                v.lane = native_lane_id(v.lane);
            }
        }
        self
    }
}

pub fn write_frame_log<W: Write>(log: &SimulationLog, out: W, opts: FrameLogOptions) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(FRAME_LOG_COLUMNS)?;
    for f in &log.frames {
        let lane = |v: &VehicleFrame| if opts.carla_lane_ids { carla_lane_id(v.lane) } else { v.lane };
        let vs = &f.vehicles;
        let record: [String; 22] = [
            f.sim.to_string(),
            f.frame.to_string(),
            f.ts.to_string(),
            f.ego_id.to_string(),
            join_tuples(vs, |v| {
                tuple_cell([v.id.to_string(), v.dims.length.to_string(), v.dims.width.to_string(), v.dims.height.to_string()].into_iter())
            }),
            join_tuples(vs, |v| tuple_cell([v.id.to_string(), v.x.to_string(), v.y.to_string(), lane(v).to_string()].into_iter())),
            join_tuples(vs, |v| tuple_cell([v.id.to_string(), v.speed.to_string()].into_iter())),
            join_tuples(vs, |v| tuple_cell([v.id.to_string(), v.dir.0.to_string(), v.dir.1.to_string()].into_iter())),
            join_tuples(vs, |v| tuple_cell([v.id.to_string(), v.accel.to_string()].into_iter())),
            f.mv.to_string(),
            f.rt.to_string(),
            f.lt.to_string(),
            f.lw.to_string(),
            f.lwr.to_string(),
            f.lwl.to_string(),
            f.collision.map(|c| c.to_string()).unwrap_or_default(),
            f.prec.to_string(),
            f.fog.to_string(),
            f.wind.to_string(),
            f.day_night.as_str().to_string(),
            horizon_label(f.horizon).to_string(),
            u8::from(f.ov).to_string(),
        ];
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<frame log>", e))?;
    Ok(())
}

fn parse_frame(fields: &Fields) -> Result<FrameRecord> {
    let num = |i: usize, s: &str| -> Result<f64> {
        s.parse::<f64>().map_err(|e| fields.err(i, format!("{s:?}: {e}")))
    };
    let id = |i: usize, s: &str| -> Result<u32> {
        s.parse::<u32>().map_err(|e| fields.err(i, format!("{s:?}: {e}")))
    };
    let tuples = |i: usize, arity: usize| split_tuples(fields.raw(i), arity).map_err(|m| fields.err(i, m));

    let dims = tuples(4, 4)?;
    let pos = tuples(5, 4)?;
    let speed = tuples(6, 2)?;
    let dir = tuples(7, 3)?;
    let acc = tuples(8, 2)?;
    let n = dims.len();
    for (i, t) in [(5, &pos), (6, &speed), (7, &dir), (8, &acc)] {
        if t.len() != n {
            return Err(fields.err(i, format!("{} vehicles, Dim lists {n}", t.len())));
        }
    }
    let mut vehicles = Vec::with_capacity(n);
    for k in 0..n {
        let vid = id(4, dims[k][0])?;
        for (i, t) in [(5, &pos), (6, &speed), (7, &dir), (8, &acc)] {
            if id(i, t[k][0])? != vid {
                return Err(fields.err(i, format!("vehicle order differs from Dim at position {k}")));
            }
        }
        vehicles.push(VehicleFrame {
            id: vid,
            dims: Dimensions::new(num(4, dims[k][1])?, num(4, dims[k][2])?, num(4, dims[k][3])?),
            x: num(5, pos[k][1])?,
            y: num(5, pos[k][2])?,
            lane: pos[k][3]
                .parse::<i32>()
                .map_err(|e| fields.err(5, format!("{:?}: {e}", pos[k][3])))?,
            speed: num(6, speed[k][1])?,
            dir: (num(7, dir[k][1])?, num(7, dir[k][2])?),
            accel: num(8, acc[k][1])?,
        });
    }
    let collision = match fields.raw(15) {
        "" => None,
        _ => Some(fields.get::<u32>(15)?),
    };
    let hl = parse_horizon(fields.raw(20)).map_err(|e| fields.err(20, e.to_string()))?;
    let ov = match fields.raw(21) {
        "0" => false,
        "1" => true,
        other => return Err(fields.err(21, format!("{other:?} is not 0 or 1"))),
    };
    Ok(FrameRecord {
        sim: fields.get(0)?,
        frame: fields.get(1)?,
        ts: fields.get(2)?,
        ego_id: fields.get(3)?,
        vehicles,
        mv: fields.get(9)?,
        rt: fields.get::<LineType>(10)?,
        lt: fields.get::<LineType>(11)?,
        lw: fields.get(12)?,
        lwr: fields.get(13)?,
        lwl: fields.get(14)?,
        collision,
        prec: fields.get(16)?,
        fog: fields.get(17)?,
        wind: fields.get(18)?,
        day_night: fields.get::<DayNight>(19)?,
        horizon: hl,
        ov,
    })
}

/// Parses a frame log. Lane ids are kept as written. An empty log reads
/// back with `sim_id` 0.
pub fn read_frame_log<R: Read>(input: R) -> Result<SimulationLog> {
    let mut r = csv_reader(input);
    check_header(r.headers()?, &FRAME_LOG_COLUMNS)?;
    let mut frames = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let fields = Fields {
            record: &rec,
            row: i + 1,
            names: &FRAME_LOG_COLUMNS,
        };
        frames.push(parse_frame(&fields)?);
    }
    Ok(SimulationLog {
        sim_id: frames.first().map_or(0, |f| f.sim),
        frames,
    })
}

pub fn save_frame_log(path: &Path, log: &SimulationLog, opts: FrameLogOptions) -> Result<()> {
    write_frame_log(log, create(path)?, opts)
}

pub fn load_frame_log(path: &Path) -> Result<SimulationLog> {
    read_frame_log(open(path)?)
}

pub fn feature_header() -> Vec<&'static str> {
    let mut h = FEATURE_NAMES.to_vec();
    h.push("CLASS");
    h
}

pub fn write_features<W: Write>(rows: &[FeatureRow], out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(feature_header())?;
    for row in rows {
        // + 0.0 turns -0 into 0
        let mut rec: Vec<String> = row.encode().iter().map(|v| (v + 0.0).to_string()).collect();
        rec.push(row.class.as_str().to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<features>", e))?;
    Ok(())
}

pub fn read_features<R: Read>(input: R) -> Result<Vec<FeatureRow>> {
    let header = feature_header();
    let mut r = csv_reader(input);
    check_header(r.headers()?, &header)?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let fields = Fields {
            record: &rec,
            row: i + 1,
            names: &header,
        };
        let mut values = [0.0; 15];
        for (j, v) in values.iter_mut().enumerate() {
            *v = fields.get(j)?;
        }
        let class: ClassLabel = fields.get(15)?;
        rows.push(FeatureRow::decode(&values, class).map_err(|e| Error::parse(i + 1, "CLASS", e.to_string()))?);
    }
    Ok(rows)
}

pub fn save_features(path: &Path, rows: &[FeatureRow]) -> Result<()> {
    write_features(rows, create(path)?)
}

pub fn load_features(path: &Path) -> Result<Vec<FeatureRow>> {
    read_features(open(path)?)
}

/// One JSON object per line.
pub fn save_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, "json", e.to_string()))?);
    }
    Ok(out)
}

pub fn save_verdicts(path: &Path, verdicts: &[Verdict]) -> Result<()> {
    save_jsonl(path, verdicts)
}

pub fn load_verdicts(path: &Path) -> Result<Vec<Verdict>> {
    load_jsonl(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayVehicle {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub lane: i32,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayFrame {
    pub sim: u32,
    pub frame: u32,
    pub ts: f64,
    pub vehicles: Vec<ReplayVehicle>,
}

pub fn replay_trace(log: &SimulationLog) -> Vec<ReplayFrame> {
    log.frames
        .iter()
        .map(|f| ReplayFrame {
            sim: f.sim,
            frame: f.frame,
            ts: f.ts,
            vehicles: f
                .vehicles
                .iter()
                .map(|v| ReplayVehicle {
                    id: v.id,
                    x: v.x,
                    y: v.y,
                    lane: v.lane,
                    speed: v.speed,
                })
                .collect(),
        })
        .collect()
}

fn write_rows<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    let mut w = csv_writer(create(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_plain(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv_writer(create(path)?);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn save_class_stats(path: &Path, stats: &[ClassSummary]) -> Result<()> {
    let header = ["feature", "class", "n", "min", "mean", "max", "sigma"].map(String::from);
    let rows: Vec<Vec<String>> = stats
        .iter()
        .map(|s| {
            vec![
                s.feature.clone(),
                s.class.to_string(),
                s.n.to_string(),
                s.min.to_string(),
                s.mean.to_string(),
                s.max.to_string(),
                s.sigma.to_string(),
            ]
        })
        .collect();
    write_plain(path, &header, &rows)
}

pub fn load_class_stats(path: &Path) -> Result<Vec<ClassSummary>> {
    let names = ["feature", "class", "n", "min", "mean", "max", "sigma"];
    let mut r = csv_reader(open(path)?);
    check_header(r.headers()?, &names)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let f = Fields {
            record: &rec,
            row: i + 1,
            names: &names,
        };
        out.push(ClassSummary {
            feature: f.raw(0).to_string(),
            class: f.get(1)?,
            n: f.get(2)?,
            min: f.get(3)?,
            mean: f.get(4)?,
            max: f.get(5)?,
            sigma: f.get(6)?,
        });
    }
    Ok(out)
}

pub fn save_histograms(path: &Path, hists: &[(String, Histogram)]) -> Result<()> {
    let header = ["feature", "bin", "lo", "hi", "count"].map(String::from);
    let mut rows = Vec::new();
    for (name, h) in hists {
        for (b, c) in h.counts.iter().enumerate() {
            rows.push(vec![
                name.clone(),
                b.to_string(),
                h.edges[b].to_string(),
                h.edges[b + 1].to_string(),
                c.to_string(),
            ]);
        }
    }
    write_plain(path, &header, &rows)
}

pub fn save_boxes(path: &Path, boxes: &[(String, BoxStats)]) -> Result<()> {
    let header = ["feature", "q1", "median", "q3", "whisker_lo", "whisker_hi", "outliers"].map(String::from);
    let rows: Vec<Vec<String>> = boxes
        .iter()
        .map(|(name, b)| {
            vec![
                name.clone(),
                b.q1.to_string(),
                b.median.to_string(),
                b.q3.to_string(),
                b.whisker_lo.to_string(),
                b.whisker_hi.to_string(),
                b.outliers.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";"),
            ]
        })
        .collect();
    write_plain(path, &header, &rows)
}

/// Columns of already-scaled values followed by the class label.
pub fn save_scaled(path: &Path, names: &[String], columns: &[Vec<f64>], classes: &[ClassLabel]) -> Result<()> {
    let mut header = names.to_vec();
    header.push("CLASS".into());
    let rows: Vec<Vec<String>> = (0..classes.len())
        .map(|i| {
            let mut r: Vec<String> = columns.iter().map(|c| c[i].to_string()).collect();
            r.push(classes[i].to_string());
            r
        })
        .collect();
    write_plain(path, &header, &rows)
}

fn save_square(path: &Path, names: &[String], cells: &[Vec<Option<f64>>]) -> Result<()> {
    let mut header = vec![String::new()];
    header.extend(names.iter().cloned());
    let rows: Vec<Vec<String>> = names
        .iter()
        .zip(cells)
        .map(|(n, row)| {
            let mut r = vec![n.clone()];
            r.extend(row.iter().map(|v| v.map(|v| v.to_string()).unwrap_or_default()));
            r
        })
        .collect();
    write_plain(path, &header, &rows)
}

/// Reads a square matrix written by [`save_associations`]; empty cells are
/// `None`.
/// Column names and a square matrix with `None` for empty cells.
pub type SquareTable = (Vec<String>, Vec<Vec<Option<f64>>>);

pub fn load_square(path: &Path) -> Result<SquareTable> {
    let mut r = csv_reader(open(path)?);
    let header = r.headers()?.clone();
    let names: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let mut cells = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.get(0) != names.get(i).map(String::as_str) {
            return Err(Error::parse(i + 1, "", "row label does not match header"));
        }
        let row = rec
            .iter()
            .skip(1)
            .zip(&names)
            .map(|(s, n)| match s {
                "" => Ok(None),
                s => s.parse::<f64>().map(Some).map_err(|e| Error::parse(i + 1, n.as_str(), e.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        cells.push(row);
    }
    Ok((names, cells))
}

pub fn save_associations(assoc_path: &Path, pvalues_path: &Path, m: &AssociationMatrix) -> Result<()> {
    save_square(assoc_path, &m.columns, &m.entries)?;
    save_square(pvalues_path, &m.columns, &m.p_values)
}

pub fn save_sbs(path: &Path, result: &SbsResult) -> Result<()> {
    let header = ["rank", "feature", "accuracy"].map(String::from);
    let k = result.ranking.len();
    let rows: Vec<Vec<String>> = result
        .ranking
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let kept = i + 1;
            let acc = if kept == k {
                result.baseline
            } else {
                result.steps.iter().find(|s| s.remaining == kept).map_or(f64::NAN, |s| s.accuracy)
            };
            vec![kept.to_string(), name.clone(), acc.to_string()]
        })
        .collect();
    write_plain(path, &header, &rows)
}

/// Normalized tables of a set of simulations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RelationalTables {
    pub simulations: Vec<SimulationRow>,
    pub weather: Vec<WeatherRow>,
    pub frames: Vec<FrameRow>,
    pub vehicles: Vec<VehicleRow>,
    pub ego_vehicle: Vec<EgoVehicleRow>,
    pub vehicle_states: Vec<VehicleStateRow>,
    pub ego_states: Vec<EgoStateRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRow {
    pub sim_id: u32,
    pub n_frames: usize,
    pub duration: f64,
    pub n_vehicles: usize,
    pub class: Option<ClassLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherRow {
    pub sim_id: u32,
    pub day_night: String,
    pub horizon_line: String,
    pub precipitation: f64,
    pub fog: f64,
    pub wind: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRow {
    pub sim_id: u32,
    pub frame: u32,
    pub ts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleRow {
    pub sim_id: u32,
    pub vehicle_id: u32,
    pub kind: String,
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoVehicleRow {
    pub sim_id: u32,
    pub vehicle_id: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleStateRow {
    pub sim_id: u32,
    pub frame: u32,
    pub vehicle_id: u32,
    pub x: f64,
    pub y: f64,
    pub lane: i32,
    pub speed: f64,
    pub dir_x: f64,
    pub dir_y: f64,
    pub accel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoStateRow {
    pub sim_id: u32,
    pub frame: u32,
    pub vehicle_id: u32,
    pub mv: f64,
    pub rt: String,
    pub lt: String,
    pub lw: f64,
    pub lwr: f64,
    pub lwl: f64,
    pub collision: Option<u32>,
    pub ov: u8,
}

/// Splits logs into normalized tables. Every frame must belong to its log's
/// simulation, every vehicle state to a vehicle of that simulation, and
/// every verdict to a known simulation.
pub fn relational_tables(
    logs: &[SimulationLog],
    verdicts: &[Verdict],
    dims: &DimensionTable,
) -> Result<RelationalTables> {
    let mut t = RelationalTables::default();
    for v in verdicts {
        if !logs.iter().any(|l| l.sim_id == v.sim) {
            return Err(Error::Referential(format!("verdict for unknown simulation {}", v.sim)));
        }
    }
    for log in logs {
        if t.simulations.iter().any(|s| s.sim_id == log.sim_id) {
            return Err(Error::Referential(format!("simulation {} appears twice", log.sim_id)));
        }
        let Some(first) = log.frames.first() else {
            return Err(Error::Referential(format!("simulation {} has no frames", log.sim_id)));
        };
        let ids: Vec<u32> = first.vehicles.iter().map(|v| v.id).collect();
        if !ids.contains(&first.ego_id) {
            return Err(Error::Referential(format!(
                "ego {} of simulation {} is not among its vehicles",
                first.ego_id, log.sim_id
            )));
        }
        t.simulations.push(SimulationRow {
            sim_id: log.sim_id,
            n_frames: log.frames.len(),
            duration: log.duration(),
            n_vehicles: ids.len(),
            class: verdicts.iter().find(|v| v.sim == log.sim_id).map(|v| v.label),
        });
        t.weather.push(WeatherRow {
            sim_id: log.sim_id,
            day_night: first.day_night.as_str().into(),
            horizon_line: horizon_label(first.horizon).into(),
            precipitation: first.prec,
            fog: first.fog,
            wind: first.wind,
        });
        for v in &first.vehicles {
            t.vehicles.push(VehicleRow {
                sim_id: log.sim_id,
                vehicle_id: v.id,
                kind: dims.nearest_kind(v.dims).to_string(),
                length: v.dims.length,
                width: v.dims.width,
                height: v.dims.height,
            });
        }
        t.ego_vehicle.push(EgoVehicleRow {
            sim_id: log.sim_id,
            vehicle_id: first.ego_id,
        });
        for f in &log.frames {
            if f.sim != log.sim_id {
                return Err(Error::Referential(format!(
                    "frame {} refers to simulation {} inside log {}",
                    f.frame, f.sim, log.sim_id
                )));
            }
            if f.ego_id != first.ego_id {
                return Err(Error::Referential(format!("frame {} names a different ego", f.frame)));
            }
            t.frames.push(FrameRow {
                sim_id: f.sim,
                frame: f.frame,
                ts: f.ts,
            });
            for v in &f.vehicles {
                if !ids.contains(&v.id) {
                    return Err(Error::Referential(format!(
                        "frame {} of simulation {} has unknown vehicle {}",
                        f.frame, f.sim, v.id
                    )));
                }
                t.vehicle_states.push(VehicleStateRow {
                    sim_id: f.sim,
                    frame: f.frame,
                    vehicle_id: v.id,
                    x: v.x,
                    y: v.y,
                    lane: v.lane,
                    speed: v.speed,
                    dir_x: v.dir.0,
                    dir_y: v.dir.1,
                    accel: v.accel,
                });
            }
            if let Some(c) = f.collision.filter(|c| !ids.contains(c)) {
                return Err(Error::Referential(format!("frame {} collides with unknown vehicle {c}", f.frame)));
            }
            t.ego_states.push(EgoStateRow {
                sim_id: f.sim,
                frame: f.frame,
                vehicle_id: f.ego_id,
                mv: f.mv,
                rt: f.rt.to_string(),
                lt: f.lt.to_string(),
                lw: f.lw,
                lwr: f.lwr,
                lwl: f.lwl,
                collision: f.collision,
                ov: u8::from(f.ov),
            });
        }
    }
    Ok(t)
}

pub const RELATIONAL_FILES: [&str; 7] = [
    "simulations.csv",
    "weather.csv",
    "frames.csv",
    "vehicles.csv",
    "ego_vehicle.csv",
    "vehicle_states.csv",
    "ego_states.csv",
];

pub fn write_relational(tables: &RelationalTables, dir: &Path) -> Result<Vec<PathBuf>> {
    let paths: Vec<PathBuf> = RELATIONAL_FILES.iter().map(|f| dir.join(f)).collect();
    write_rows(&paths[0], &tables.simulations)?;
    write_rows(&paths[1], &tables.weather)?;
    write_rows(&paths[2], &tables.frames)?;
    write_rows(&paths[3], &tables.vehicles)?;
    write_rows(&paths[4], &tables.ego_vehicle)?;
    write_rows(&paths[5], &tables.vehicle_states)?;
    write_rows(&paths[6], &tables.ego_states)?;
    Ok(paths)
}

fn read_rows<S: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<S>> {
    let mut r = csv_reader(open(path)?);
    let mut out = Vec::new();
    for (i, rec) in r.deserialize().enumerate() {
        out.push(rec.map_err(|e: csv::Error| Error::parse(i + 1, path.display().to_string(), e.to_string()))?);
    }
    Ok(out)
}

pub fn read_relational(dir: &Path) -> Result<RelationalTables> {
    let p = |i: usize| dir.join(RELATIONAL_FILES[i]);
    Ok(RelationalTables {
        simulations: read_rows(&p(0))?,
        weather: read_rows(&p(1))?,
        frames: read_rows(&p(2))?,
        vehicles: read_rows(&p(3))?,
        ego_vehicle: read_rows(&p(4))?,
        vehicle_states: read_rows(&p(5))?,
        ego_states: read_rows(&p(6))?,
    })
}

pub fn export_relational(
    logs: &[SimulationLog],
    verdicts: &[Verdict],
    dims: &DimensionTable,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    write_relational(&relational_tables(logs, verdicts, dims)?, dir)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the run directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub generator: String,
    pub version: String,
    pub seed: u64,
    pub sims: u32,
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_file(path: &Path) -> Result<(u64, String)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok((bytes.len() as u64, hex::encode(Sha256::digest(&bytes))))
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(root, &p, out)?;
        } else {
            let rel = p.strip_prefix(root).expect("walk stays under root");
            let rel: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
            let rel = rel.join("/");
            if rel != MANIFEST_FILE {
                out.push(rel);
            }
        }
    }
    Ok(())
}

/// Hashes every file under `root` except the manifest itself.
pub fn build_manifest(root: &Path, seed: u64, sims: u32) -> Result<Manifest> {
    let mut rels = Vec::new();
    collect_files(root, root, &mut rels)?;
    rels.sort();
    let files = rels
        .into_iter()
        .map(|rel| {
            let (bytes, sha256) = sha256_file(&root.join(&rel))?;
            Ok(ManifestEntry { path: rel, bytes, sha256 })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Manifest {
        generator: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        sims,
        files,
    })
}

pub fn save_manifest(root: &Path, manifest: &Manifest) -> Result<()> {
    let path = root.join(MANIFEST_FILE);
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, manifest)?;
    w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
    w.flush().map_err(|e| Error::io(&path, e))
}

pub fn load_manifest(root: &Path) -> Result<Manifest> {
    let path = root.join(MANIFEST_FILE);
    Ok(serde_json::from_reader(open(&path)?)?)
}

/// Differences between the manifest and the files on disk.
pub fn verify_manifest(root: &Path, manifest: &Manifest) -> Result<Vec<String>> {
    let mut problems = Vec::new();
    for e in &manifest.files {
        let p = root.join(&e.path);
        if !p.exists() {
            problems.push(format!("{}: missing", e.path));
            continue;
        }
        let (bytes, sha) = sha256_file(&p)?;
        if bytes != e.bytes || sha != e.sha256 {
            problems.push(format!("{}: content hash mismatch", e.path));
        }
    }
    let mut on_disk = Vec::new();
    collect_files(root, root, &mut on_disk)?;
    for rel in on_disk {
        if !manifest.files.iter().any(|e| e.path == rel) {
            problems.push(format!("{rel}: not listed in manifest"));
        }
    }
    Ok(problems)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE7_HEADER: &str = "S,F,TS,IDego,Dim,L,V,D,A,MV,RT,LT,LW,LWR,LWL,C,Prec,Fog,Wind,DN,HL,OV";

    #[test]
    fn tuple_splitting() {
        assert_eq!(split_tuples("(1,2);(3,4)", 2).unwrap(), vec![vec!["1", "2"], vec!["3", "4"]]);
        assert!(split_tuples("(1,2,3)", 2).is_err());
        assert!(split_tuples("1,2", 2).is_err());
        assert!(split_tuples("", 2).unwrap().is_empty());
    }

    #[test]
    fn empty_log_is_header_only() {
        let log = SimulationLog { sim_id: 0, frames: vec![] };
        let mut buf = Vec::new();
        write_frame_log(&log, &mut buf, FrameLogOptions::default()).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), format!("{TABLE7_HEADER}\n"));
        assert_eq!(read_frame_log(buf.as_slice()).unwrap(), log);
    }

    #[test]
    fn header_mismatch() {
        let text = "S,F,TS\n1,2,3\n";
        assert!(matches!(read_frame_log(text.as_bytes()), Err(Error::SchemaMismatch { .. })));
    }

    #[test]
    fn parse_error_coordinates() {
        let text = format!(
            "{TABLE7_HEADER}\n1,0,0,1,\"(1,4.6,1.9,1.6)\",\"(1,330,244,2)\",\"(1,abc)\",\"(1,1,0)\",\"(1,0)\",90,Broken,Broken,3.5,3.5,3.5,,0,2,10,Day,No,0\n"
        );
        match read_frame_log(text.as_bytes()) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(column, "V");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn carla_ids() {
        for l in 1..=5 {
            assert_eq!(native_lane_id(carla_lane_id(l)), l);
        }
        assert_eq!(carla_lane_id(5), -7);
    }
}
