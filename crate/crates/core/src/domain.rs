//! Road geometry, vehicle kinds, weather presets and the categorical
//! vocabularies shared by every stage of the pipeline.
//!
//! The road is a straight one-way segment with five lanes stacked along
//! the y axis. Lane 1 is the rightmost lane and lane 5 the leftmost, so
//! "changing left" means moving to `lane + 1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static geometry of the simulated highway window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneGeometry {
    pub x_min: f64,
    pub x_max: f64,
    /// Width of the y band that defines lane membership.
    pub lane_band_width: f64,
    pub first_band_y: f64,
    pub n_lanes: u8,
    /// Drivable lane width reported in the frame log (`LW`).
    pub lane_width: f64,
    pub shoulder_width: f64,
}

impl Default for LaneGeometry {
    fn default() -> Self {
        Self {
            x_min: 320.0,
            x_max: 450.0,
            lane_band_width: 4.0,
            first_band_y: 238.0,
            n_lanes: 5,
            lane_width: 3.5,
            shoulder_width: 0.5,
        }
    }
}

impl LaneGeometry {
    pub fn y_max(&self) -> f64 {
        self.first_band_y + self.lane_band_width * f64::from(self.n_lanes)
    }

    pub fn window_length(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Lane index whose half-open band `[lo, hi)` contains `y`.
    pub fn lane_of(&self, y: f64) -> Result<u8> {
        if !(y >= self.first_band_y && y < self.y_max()) {
            return Err(Error::OutOfRoad(y));
        }
        let idx = ((y - self.first_band_y) / self.lane_band_width).floor() as u8;
        Ok(idx.min(self.n_lanes - 1) + 1)
    }

    pub fn lane_center(&self, lane: u8) -> Result<f64> {
        self.check_lane(lane)?;
        Ok(self.first_band_y + self.lane_band_width * f64::from(lane - 1) + self.lane_band_width / 2.0)
    }

    pub fn check_lane(&self, lane: u8) -> Result<()> {
        if lane == 0 || lane > self.n_lanes {
            return Err(Error::BadLane(i64::from(lane)));
        }
        Ok(())
    }

    /// Marking on the right-hand side of `lane`.
    pub fn right_line(&self, lane: u8) -> LineType {
        if lane <= 1 {
            LineType::Solid
        } else {
            LineType::Broken
        }
    }

    /// Marking on the left-hand side of `lane`.
    pub fn left_line(&self, lane: u8) -> LineType {
        if lane >= self.n_lanes {
            LineType::Solid
        } else {
            LineType::Broken
        }
    }

    /// Width of the strip to the right of `lane` (shoulder for lane 1).
    pub fn right_width(&self, lane: u8) -> f64 {
        if lane <= 1 {
            self.shoulder_width
        } else {
            self.lane_width
        }
    }

    pub fn left_width(&self, lane: u8) -> f64 {
        if lane >= self.n_lanes {
            self.shoulder_width
        } else {
            self.lane_width
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LineType {
    Solid,
    Broken,
}

impl LineType {
    pub fn as_str(self) -> &'static str {
        match self {
            LineType::Solid => "Solid",
            LineType::Broken => "Broken",
        }
    }
}

impl fmt::Display for LineType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LineType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Solid" => Ok(LineType::Solid),
            "Broken" => Ok(LineType::Broken),
            other => Err(unknown("line type", other)),
        }
    }
}

fn unknown(column: &str, value: &str) -> Error {
    Error::UnknownCategory {
        column: column.to_string(),
        value: value.to_string(),
    }
}

/// Vehicle categories. The discriminant is the numeric code used in the
/// features dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VehicleKind {
    S = 0,
    M = 1,
    L = 2,
    V = 3,
    T = 4,
    MC = 5,
    B = 6,
}

impl VehicleKind {
    pub const ALL: [VehicleKind; 7] = [
        VehicleKind::S,
        VehicleKind::M,
        VehicleKind::L,
        VehicleKind::V,
        VehicleKind::T,
        VehicleKind::MC,
        VehicleKind::B,
    ];

    /// Kinds allowed to act as the ego vehicle (no bicycles or motorcycles).
    pub const EGO: [VehicleKind; 5] = [
        VehicleKind::S,
        VehicleKind::M,
        VehicleKind::L,
        VehicleKind::V,
        VehicleKind::T,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Self::ALL
            .get(usize::from(code))
            .copied()
            .ok_or_else(|| unknown("vehicle kind", &code.to_string()))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VehicleKind::S => "S",
            VehicleKind::M => "M",
            VehicleKind::L => "L",
            VehicleKind::V => "V",
            VehicleKind::T => "T",
            VehicleKind::MC => "MC",
            VehicleKind::B => "B",
        }
    }

    pub fn can_be_ego(self) -> bool {
        Self::EGO.contains(&self)
    }
}

impl fmt::Display for VehicleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VehicleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| unknown("vehicle kind", s))
    }
}

/// Bounding box extents in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dimensions {
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

impl Dimensions {
    pub const fn new(length: f64, width: f64, height: f64) -> Self {
        Self {
            length,
            width,
            height,
        }
    }
}

/// Per-kind bounding boxes. Configurable; the defaults are fixed values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionTable {
    entries: [Dimensions; 7],
}

impl Default for DimensionTable {
    fn default() -> Self {
        Self {
            entries: [
                Dimensions::new(4.0, 1.8, 1.5),
                Dimensions::new(4.6, 1.9, 1.6),
                Dimensions::new(5.0, 2.0, 1.8),
                Dimensions::new(5.4, 2.0, 2.2),
                Dimensions::new(7.5, 2.5, 3.5),
                Dimensions::new(2.2, 0.8, 1.4),
                Dimensions::new(1.8, 0.6, 1.2),
            ],
        }
    }
}

impl DimensionTable {
    pub fn get(&self, kind: VehicleKind) -> Dimensions {
        self.entries[kind as usize]
    }

    pub fn set(&mut self, kind: VehicleKind, dims: Dimensions) {
        self.entries[kind as usize] = dims;
    }

    pub fn max_length(&self) -> f64 {
        self.entries.iter().map(|d| d.length).fold(0.0, f64::max)
    }

    /// Kind whose table entry is closest (L1 over length/width/height) to
    /// `dims`. Exact for boxes produced from this table; ties resolve to the
    /// lower code.
    pub fn nearest_kind(&self, dims: Dimensions) -> VehicleKind {
        let dist = |d: &Dimensions| {
            (d.length - dims.length).abs() + (d.width - dims.width).abs() + (d.height - dims.height).abs()
        };
        let mut best = VehicleKind::S;
        let mut best_d = f64::INFINITY;
        for kind in VehicleKind::ALL {
            let d = dist(&self.get(kind));
            if d < best_d {
                best = kind;
                best_d = d;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Colour {
    Yellow,
    Blue,
    Red,
    Green,
    Orange,
    Grey,
    White,
    Brown,
}

impl Colour {
    pub const ALL: [Colour; 8] = [
        Colour::Yellow,
        Colour::Blue,
        Colour::Red,
        Colour::Green,
        Colour::Orange,
        Colour::Grey,
        Colour::White,
        Colour::Brown,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DayNight {
    Day = 0,
    Night = 1,
}

impl DayNight {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(DayNight::Day),
            1 => Ok(DayNight::Night),
            other => Err(unknown("DN", &other.to_string())),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DayNight::Day => "Day",
            DayNight::Night => "Night",
        }
    }
}

impl FromStr for DayNight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Day" => Ok(DayNight::Day),
            "Night" => Ok(DayNight::Night),
            other => Err(unknown("DN", other)),
        }
    }
}

/// Horizon-line flag encoding: Yes maps to 1, No to 0.
pub fn horizon_code(present: bool) -> u8 {
    u8::from(present)
}

pub fn horizon_from_code(code: u8) -> Result<bool> {
    match code {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(unknown("HL", &other.to_string())),
    }
}

pub fn horizon_label(present: bool) -> &'static str {
    if present {
        "Yes"
    } else {
        "No"
    }
}

pub fn parse_horizon(s: &str) -> Result<bool> {
    match s {
        "Yes" => Ok(true),
        "No" => Ok(false),
        other => Err(unknown("HL", other)),
    }
}

/// Maps the raw categorical value of one of the DN, HL, TE or TP columns
/// to its numeric code.
pub fn encode_categorical(column: &str, value: &str) -> Result<u8> {
    match column {
        "DN" => value.parse::<DayNight>().map(DayNight::code),
        "HL" => parse_horizon(value).map(horizon_code),
        "TE" | "TP" => value.parse::<VehicleKind>().map(VehicleKind::code),
        other => Err(unknown("categorical column", other)),
    }
}

/// Inverse of [`encode_categorical`].
pub fn decode_categorical(column: &str, code: u8) -> Result<&'static str> {
    match column {
        "DN" => DayNight::from_code(code).map(DayNight::as_str),
        "HL" => horizon_from_code(code).map(horizon_label),
        "TE" | "TP" => VehicleKind::from_code(code).map(VehicleKind::as_str),
        other => Err(unknown("categorical column", other)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PresetName {
    ClearNoon,
    ClearSunset,
    SoftRainNoon,
    HardRainNoon,
    ClearNight,
    CloudyNight,
    SoftRainNight,
    MidRainNight,
    HardRainNight,
}

impl PresetName {
    pub const ALL: [PresetName; 9] = [
        PresetName::ClearNoon,
        PresetName::ClearSunset,
        PresetName::SoftRainNoon,
        PresetName::HardRainNoon,
        PresetName::ClearNight,
        PresetName::CloudyNight,
        PresetName::SoftRainNight,
        PresetName::MidRainNight,
        PresetName::HardRainNight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::ClearNoon => "ClearNoon",
            PresetName::ClearSunset => "ClearSunset",
            PresetName::SoftRainNoon => "SoftRainNoon",
            PresetName::HardRainNoon => "HardRainNoon",
            PresetName::ClearNight => "ClearNight",
            PresetName::CloudyNight => "CloudyNight",
            PresetName::SoftRainNight => "SoftRainNight",
            PresetName::MidRainNight => "MidRainNight",
            PresetName::HardRainNight => "HardRainNight",
        }
    }

    pub fn preset(self) -> WeatherPreset {
        // night, horizon, cloudiness, precipitation, wind, fog
        let (night, hl, cloud, prec, wind, fog) = match self {
            PresetName::ClearNoon => (false, false, 5.0, 0.0, 10.0, 2.0),
            PresetName::ClearSunset => (false, true, 5.0, 0.0, 10.0, 2.0),
            PresetName::SoftRainNoon => (false, false, 40.0, 30.0, 30.0, 10.0),
            PresetName::HardRainNoon => (false, false, 90.0, 100.0, 100.0, 20.0),
            PresetName::ClearNight => (true, false, 5.0, 0.0, 10.0, 2.0),
            PresetName::CloudyNight => (true, false, 90.0, 0.0, 10.0, 90.0),
            PresetName::SoftRainNight => (true, false, 40.0, 30.0, 30.0, 30.0),
            PresetName::MidRainNight => (true, false, 70.0, 60.0, 60.0, 60.0),
            PresetName::HardRainNight => (true, false, 90.0, 100.0, 100.0, 100.0),
        };
        WeatherPreset {
            name: self,
            is_night: night,
            horizon_line: hl,
            cloudiness: cloud,
            precipitation: prec,
            wind,
            fog,
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| unknown("weather preset", s))
    }
}

/// Named weather bundle. Percentages are in `[0, 100]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherPreset {
    pub name: PresetName,
    pub is_night: bool,
    pub horizon_line: bool,
    pub cloudiness: f64,
    pub precipitation: f64,
    pub wind: f64,
    pub fog: f64,
}

impl WeatherPreset {
    pub fn day_night(&self) -> DayNight {
        if self.is_night {
            DayNight::Night
        } else {
            DayNight::Day
        }
    }
}

/// The nine presets, in a fixed order.
pub fn preset_catalog() -> Vec<WeatherPreset> {
    PresetName::ALL.iter().map(|p| p.preset()).collect()
}

/// Fixed-step simulation clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimClock {
    pub dt: f64,
    pub duration: f64,
}

impl Default for SimClock {
    fn default() -> Self {
        Self {
            dt: 0.05,
            duration: 20.0,
        }
    }
}

impl SimClock {
    /// Index of the last frame; frames run `0..=last_frame()`.
    pub fn last_frame(&self) -> u32 {
        (self.duration / self.dt).round() as u32
    }

    pub fn n_frames(&self) -> usize {
        self.last_frame() as usize + 1
    }

    /// Timestamp of `frame`. When `1/dt` is integral the division form is
    /// used, which is correctly rounded (frame 70 at 0.05 s gives 3.5).
    pub fn timestamp(&self, frame: u32) -> f64 {
        let rate = 1.0 / self.dt;
        if (rate - rate.round()).abs() < 1e-9 {
            f64::from(frame) / rate.round()
        } else {
            f64::from(frame) * self.dt
        }
    }

    /// Frame index of `t`, if `t` lies on the grid.
    pub fn frame_at(&self, t: f64) -> Option<u32> {
        if !t.is_finite() || t < 0.0 {
            return None;
        }
        let f = (t / self.dt).round();
        ((f * self.dt - t).abs() < 1e-9).then_some(f as u32)
    }
}

/// Outcome class of one simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    #[serde(rename = "Success_L")]
    SuccessLegal,
    #[serde(rename = "Success_I")]
    SuccessIllegal,
    #[serde(rename = "Unsuccess_col")]
    UnsuccessCollision,
    #[serde(rename = "Unsuccess_ncol")]
    UnsuccessNoCollision,
    #[serde(rename = "No_attempt")]
    NoAttempt,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 5] = [
        ClassLabel::SuccessLegal,
        ClassLabel::SuccessIllegal,
        ClassLabel::UnsuccessCollision,
        ClassLabel::UnsuccessNoCollision,
        ClassLabel::NoAttempt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::SuccessLegal => "Success_L",
            ClassLabel::SuccessIllegal => "Success_I",
            ClassLabel::UnsuccessCollision => "Unsuccess_col",
            ClassLabel::UnsuccessNoCollision => "Unsuccess_ncol",
            ClassLabel::NoAttempt => "No_attempt",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| unknown("CLASS", s))
    }
}

/// Rounds to two decimals, the precision of logged kinematics.
pub fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0 + 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lane_bands() {
        let g = LaneGeometry::default();
        assert_eq!(g.lane_of(240.0).unwrap(), 1);
        assert_eq!(g.lane_of(238.0).unwrap(), 1);
        assert_eq!(g.lane_of(242.0).unwrap(), 2);
        assert_eq!(g.lane_of(257.9).unwrap(), 5);
        assert!(matches!(g.lane_of(258.0), Err(Error::OutOfRoad(_))));
        assert!(matches!(g.lane_of(237.99), Err(Error::OutOfRoad(_))));
        assert!(g.lane_of(f64::NAN).is_err());
        assert_eq!(g.window_length(), 130.0);
    }

    #[test]
    fn lane_centers() {
        let g = LaneGeometry::default();
        assert_eq!(g.lane_center(1).unwrap(), 240.0);
        assert_eq!(g.lane_center(3).unwrap(), 248.0);
        assert_eq!(g.lane_center(5).unwrap(), 256.0);
        assert!(matches!(g.lane_center(0), Err(Error::BadLane(0))));
        assert!(matches!(g.lane_center(6), Err(Error::BadLane(6))));
    }

    #[test]
    fn line_markings() {
        let g = LaneGeometry::default();
        assert_eq!(g.right_line(1), LineType::Solid);
        assert_eq!(g.left_line(1), LineType::Broken);
        assert_eq!(g.left_line(5), LineType::Solid);
        assert_eq!(g.right_line(3), LineType::Broken);
        assert_eq!(g.right_width(1), 0.5);
        assert_eq!(g.left_width(1), 3.5);
    }

    #[test]
    fn categorical_codes() {
        assert_eq!(encode_categorical("DN", "Night").unwrap(), 1);
        assert_eq!(encode_categorical("DN", "Day").unwrap(), 0);
        assert_eq!(encode_categorical("HL", "No").unwrap(), 0);
        assert_eq!(encode_categorical("HL", "Yes").unwrap(), 1);
        assert_eq!(encode_categorical("TP", "B").unwrap(), 6);
        assert_eq!(encode_categorical("TE", "S").unwrap(), 0);
        assert!(matches!(
            encode_categorical("TE", "Bus"),
            Err(Error::UnknownCategory { .. })
        ));
        assert!(encode_categorical("DN", "Dusk").is_err());
    }

    #[test]
    fn categorical_bijection() {
        for (col, values) in [
            ("DN", vec!["Day", "Night"]),
            ("HL", vec!["No", "Yes"]),
            ("TE", vec!["S", "M", "L", "V", "T", "MC", "B"]),
        ] {
            let codes: Vec<u8> = values.iter().map(|v| encode_categorical(col, v).unwrap()).collect();
            let expected: Vec<u8> = (0..values.len() as u8).collect();
            assert_eq!(codes, expected);
            for (v, c) in values.iter().zip(codes) {
                assert_eq!(decode_categorical(col, c).unwrap(), *v);
            }
        }
    }

    #[test]
    fn preset_table() {
        let cat = preset_catalog();
        assert_eq!(cat.len(), 9);
        assert_eq!(cat.iter().filter(|p| p.is_night).count(), 5);
        for p in &cat {
            assert_eq!(p.wind, p.precipitation.max(10.0));
            assert!(p.fog >= 2.0 && p.wind >= 10.0);
            assert!((0.0..=100.0).contains(&p.precipitation));
            assert_eq!(p.horizon_line, p.name == PresetName::ClearSunset);
        }
        let mid = PresetName::MidRainNight.preset();
        assert_eq!((mid.precipitation, mid.wind, mid.fog), (60.0, 60.0, 60.0));
    }

    #[test]
    fn clock_cadence() {
        let c = SimClock::default();
        assert_eq!(c.timestamp(70), 3.5);
        assert_eq!(c.n_frames(), 401);
        assert_eq!(c.frame_at(3.5), Some(70));
        assert_eq!(c.frame_at(3.52), None);
        for f in 0..=10_000u32 {
            assert!((c.timestamp(f) - 0.05 * f64::from(f)).abs() < 1e-12);
        }
    }

    #[test]
    fn nearest_kind_recovers_table_entries() {
        let t = DimensionTable::default();
        for k in VehicleKind::ALL {
            assert_eq!(t.nearest_kind(t.get(k)), k);
        }
    }

    proptest! {
        #[test]
        fn lane_center_is_fixed_point(y in 238.0f64..258.0) {
            let g = LaneGeometry::default();
            let lane = g.lane_of(y).unwrap();
            prop_assert_eq!(g.lane_of(g.lane_center(lane).unwrap()).unwrap(), lane);
        }
    }
}
