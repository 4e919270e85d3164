//! In-memory frame log: one [`FrameRecord`] per simulated frame, holding
//! the ordered variables of the persisted frame-log schema.

use serde::{Deserialize, Serialize};

use crate::domain::{DayNight, Dimensions, LineType};
use crate::error::{Error, Result};

/// Per-vehicle observation within a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleFrame {
    pub id: u32,
    pub dims: Dimensions,
    pub x: f64,
    pub y: f64,
    /// Lane id as written in the log (1..=5 natively).
    pub lane: i32,
    /// km/h
    pub speed: f64,
    /// Wheel direction vector.
    pub dir: (f64, f64),
    /// m/s²
    pub accel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub sim: u32,
    pub frame: u32,
    pub ts: f64,
    pub ego_id: u32,
    pub vehicles: Vec<VehicleFrame>,
    /// Speed limit of the ego lane, km/h.
    pub mv: f64,
    pub rt: LineType,
    pub lt: LineType,
    pub lw: f64,
    pub lwr: f64,
    pub lwl: f64,
    /// Id of the vehicle the ego collided with; absent until contact.
    pub collision: Option<u32>,
    pub prec: f64,
    pub fog: f64,
    pub wind: f64,
    pub day_night: DayNight,
    pub horizon: bool,
    /// Set on the first frame of each ego lane change.
    pub ov: bool,
}

impl FrameRecord {
    pub fn vehicle(&self, id: u32) -> Option<&VehicleFrame> {
        self.vehicles.iter().find(|v| v.id == id)
    }

    pub fn ego(&self) -> Result<&VehicleFrame> {
        self.vehicle(self.ego_id).ok_or_else(|| {
            Error::MalformedLog(format!(
                "frame {} has no entry for ego {}",
                self.frame, self.ego_id
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationLog {
    pub sim_id: u32,
    pub frames: Vec<FrameRecord>,
}

impl SimulationLog {
    pub fn ego_id(&self) -> Option<u32> {
        self.frames.first().map(|f| f.ego_id)
    }

    /// Frame spacing in seconds, from the first two timestamps.
    pub fn dt(&self) -> Result<f64> {
        match self.frames.as_slice() {
            [a, b, ..] if b.ts > a.ts => Ok((b.ts - a.ts) / f64::from(b.frame - a.frame)),
            _ => Err(Error::MalformedLog("need two increasing frames to infer dt".into())),
        }
    }

    pub fn duration(&self) -> f64 {
        self.frames.last().map_or(0.0, |f| f.ts)
    }

    /// Indices of frames flagged with OV = 1.
    pub fn ov_indices(&self) -> Vec<usize> {
        self.frames
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.ov.then_some(i))
            .collect()
    }

    /// Index of the frame whose timestamp is `t`.
    pub fn index_at(&self, t: f64) -> Result<usize> {
        self.frames
            .iter()
            .position(|f| (f.ts - t).abs() < 1e-9)
            .ok_or(Error::BadInstant(t))
    }

    /// Structural checks: contiguous frames, one simulation, one ego, a
    /// constant vehicle set.
    pub fn check_well_formed(&self) -> Result<()> {
        let first = self
            .frames
            .first()
            .ok_or_else(|| Error::MalformedLog("log has no frames".into()))?;
        let ids: Vec<u32> = first.vehicles.iter().map(|v| v.id).collect();
        first.ego()?;
        for (i, f) in self.frames.iter().enumerate() {
            if f.sim != self.sim_id {
                return Err(Error::MalformedLog(format!(
                    "frame {} belongs to simulation {}, expected {}",
                    f.frame, f.sim, self.sim_id
                )));
            }
            if f.frame as usize != first.frame as usize + i {
                return Err(Error::MalformedLog(format!(
                    "frame numbers not contiguous at row {i} (found {})",
                    f.frame
                )));
            }
            if f.ego_id != first.ego_id {
                return Err(Error::MalformedLog(format!("ego id changes at frame {}", f.frame)));
            }
            if f.vehicles.iter().map(|v| v.id).ne(ids.iter().copied()) {
                return Err(Error::MalformedLog(format!(
                    "vehicle set changes at frame {}",
                    f.frame
                )));
            }
        }
        Ok(())
    }
}
