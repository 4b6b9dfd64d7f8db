//! Static problem data for an isolated intersection: geometry, phase plan,
//! speed limits, vehicle attributes and the arrival process.
//!
//! Internal units are feet and seconds. Scenario documents may give any speed
//! either in mph (`*_mph` keys) or in ft/s (`*_fps` keys); conversion happens
//! once, at load time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type LaneId = usize;
pub type PhaseId = usize;

/// Feet per second in one mile per hour.
pub const FPS_PER_MPH: f64 = 5280.0 / 3600.0;

pub fn mph_to_fps(mph: f64) -> f64 {
    mph * FPS_PER_MPH
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Movement {
    Left,
    Straight,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: LaneId,
    /// Distance from the detection point to the stop bar (ft).
    pub detection_range: f64,
    pub movement: Movement,
}

/// Ordered phases plus the phase-lane incidence matrix (`incidence[p][l]` is 1
/// when the phase at position `p` serves lane `l`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePlan {
    pub phases: Vec<PhaseId>,
    pub incidence: Vec<Vec<u8>>,
}

impl PhasePlan {
    /// Position of `phase` in plan order.
    pub fn index_of(&self, phase: PhaseId) -> Result<usize> {
        self.phases
            .iter()
            .position(|&p| p == phase)
            .ok_or(Error::UnknownId { kind: "phase", id: phase })
    }

    pub fn serves(&self, phase: PhaseId, lane: LaneId) -> Result<bool> {
        let row = &self.incidence[self.index_of(phase)?];
        row.get(lane)
            .map(|&x| x == 1)
            .ok_or(Error::UnknownId { kind: "lane", id: lane })
    }

    /// Lanes served by `phase`, in lane order.
    pub fn lanes_of(&self, phase: PhaseId) -> Vec<LaneId> {
        match self.index_of(phase) {
            Ok(i) => self.incidence[i]
                .iter()
                .enumerate()
                .filter(|(_, &x)| x == 1)
                .map(|(l, _)| l)
                .collect(),
            Err(_) => Vec::new(),
        }
    }

    /// Phases serving `lane`, in plan order.
    pub fn phases_of(&self, lane: LaneId) -> Vec<PhaseId> {
        self.phases
            .iter()
            .zip(&self.incidence)
            .filter(|(_, row)| row.get(lane) == Some(&1))
            .map(|(&p, _)| p)
            .collect()
    }

    /// The phase following `phase` in plan order (wrapping).
    pub fn next_in_order(&self, phase: PhaseId) -> PhaseId {
        match self.index_of(phase) {
            Ok(i) => self.phases[(i + 1) % self.phases.len()],
            Err(_) => self.phases[0],
        }
    }
}

/// Tests whether `phase` serves `lane`.
pub fn phase_serves_lane(plan: &PhasePlan, phase: PhaseId, lane: LaneId) -> Result<bool> {
    plan.serves(phase, lane)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalTimingBounds {
    pub g_min: f64,
    pub g_max: f64,
    pub yellow: f64,
    pub all_red: f64,
    /// Latency between detecting a vehicle and serving its trajectory (s).
    pub dt_serve: f64,
    /// Sampling step of materialized trajectories (s).
    pub sample_step: f64,
    /// Integration step and reaction time of the car-following model (s).
    pub gipps_step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MovementLimits {
    pub v_max: f64,
    pub v_cross: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedLimits {
    pub left: MovementLimits,
    pub straight: MovementLimits,
    pub right: MovementLimits,
}

impl SpeedLimits {
    pub fn get(&self, movement: Movement) -> &MovementLimits {
        match movement {
            Movement::Left => &self.left,
            Movement::Straight => &self.straight,
            Movement::Right => &self.right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleAttributes {
    /// Maximum deceleration (ft/s², negative).
    pub a_max_dec: f64,
    /// Maximum acceleration (ft/s², positive).
    pub a_max_acc: f64,
    pub length: f64,
    pub v_des: f64,
}

/// Attribute defaults per vehicle type, plus the standstill margin used by
/// the car-following model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleetAttributes {
    pub av: VehicleAttributes,
    pub cv: VehicleAttributes,
    pub jam_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangularSpeed {
    pub min: f64,
    pub mode: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalProcess {
    /// Mean inter-arrival time on every lane (s).
    pub mean_headway: f64,
    pub av_ratio: f64,
    pub speed: TriangularSpeed,
    /// Arrivals are generated on `[0, horizon)` (s).
    pub horizon: f64,
    pub saturation_headway: f64,
    /// Time after the horizon during which in-flight vehicles may still
    /// depart before being counted as residual (s).
    pub drain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub lanes: Vec<Lane>,
    pub phase_plan: PhasePlan,
    pub timing: SignalTimingBounds,
    pub limits: SpeedLimits,
    pub attributes: FleetAttributes,
    pub arrivals: ArrivalProcess,
    pub seed: u64,
}

impl Default for Scenario {
    /// The four-leg, six-lane, four-phase test intersection.
    ///
    /// The phase plan is one valid conflict-free assignment: protected lefts
    /// for the two approaches with exclusive left lanes, their through/right
    /// lanes together, then split phases for the two shared-lane approaches.
    fn default() -> Self {
        let v_max = mph_to_fps(40.0);
        let v_turn = mph_to_fps(30.0);
        let movements = default_movements();
        Scenario {
            lanes: movements
                .iter()
                .enumerate()
                .map(|(id, &movement)| Lane {
                    id,
                    detection_range: 1000.0,
                    movement,
                })
                .collect(),
            phase_plan: PhasePlan {
                phases: vec![0, 1, 2, 3],
                incidence: default_incidence(),
            },
            timing: SignalTimingBounds {
                g_min: 4.5,
                g_max: 60.0,
                yellow: 1.5,
                all_red: 1.5,
                dt_serve: 0.1,
                sample_step: 0.1,
                gipps_step: 0.5,
            },
            limits: SpeedLimits {
                left: MovementLimits { v_max, v_cross: v_turn },
                straight: MovementLimits { v_max, v_cross: v_max },
                right: MovementLimits { v_max, v_cross: v_turn },
            },
            attributes: FleetAttributes {
                av: default_attributes(),
                cv: default_attributes(),
                jam_gap: 2.0,
            },
            arrivals: ArrivalProcess {
                mean_headway: 20.0,
                av_ratio: 0.5,
                speed: TriangularSpeed {
                    min: mph_to_fps(34.0),
                    mode: mph_to_fps(40.0),
                    max: mph_to_fps(44.0),
                },
                horizon: 900.0,
                saturation_headway: 1.5,
                drain: 120.0,
            },
            seed: 42,
        }
    }
}

fn default_attributes() -> VehicleAttributes {
    VehicleAttributes {
        a_max_dec: -15.0,
        a_max_acc: 10.0,
        length: 18.0,
        v_des: mph_to_fps(40.0),
    }
}

// EB left, EB through/right, WB left, WB through/right, NB shared, SB shared.
fn default_movements() -> [Movement; 6] {
    use Movement::*;
    [Left, Straight, Left, Straight, Straight, Straight]
}

fn default_incidence() -> Vec<Vec<u8>> {
    vec![
        vec![1, 0, 1, 0, 0, 0],
        vec![0, 1, 0, 1, 0, 0],
        vec![0, 0, 0, 0, 1, 0],
        vec![0, 0, 0, 0, 0, 1],
    ]
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.lanes.is_empty() {
            return Err(Error::validation("lanes", "at least one lane is required"));
        }
        for (i, lane) in self.lanes.iter().enumerate() {
            if lane.id != i {
                return Err(Error::validation(
                    "lanes",
                    format!("lane ids must be 0..n in order; found {} at position {i}", lane.id),
                ));
            }
            if !(lane.detection_range > 0.0) || !lane.detection_range.is_finite() {
                return Err(Error::validation(
                    "detection_range",
                    format!("lane {i} detection range must be positive"),
                ));
            }
        }

        let plan = &self.phase_plan;
        if plan.phases.is_empty() {
            return Err(Error::validation("phases", "at least one phase is required"));
        }
        let mut seen = plan.phases.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != plan.phases.len() {
            return Err(Error::validation("phases", "phase ids must be unique"));
        }
        if plan.incidence.len() != plan.phases.len() {
            return Err(Error::validation(
                "incidence",
                format!(
                    "expected {} rows (one per phase), found {}",
                    plan.phases.len(),
                    plan.incidence.len()
                ),
            ));
        }
        for (row, &phase) in plan.incidence.iter().zip(&plan.phases) {
            if row.len() != self.lanes.len() {
                return Err(Error::validation(
                    "incidence",
                    format!("row for phase {phase} must have {} entries", self.lanes.len()),
                ));
            }
            if row.iter().any(|&x| x > 1) {
                return Err(Error::validation("incidence", "entries must be 0 or 1"));
            }
            if !row.contains(&1) {
                return Err(Error::validation(
                    "incidence",
                    format!("phase {phase} serves no lane"),
                ));
            }
        }
        for lane in &self.lanes {
            if plan.phases_of(lane.id).is_empty() {
                return Err(Error::validation(
                    "incidence",
                    format!("lane {} is served by no phase", lane.id),
                ));
            }
        }

        let t = &self.timing;
        if !(t.g_min > 0.0 && t.g_min <= t.g_max) {
            return Err(Error::validation("timing", "require 0 < g_min <= g_max"));
        }
        if !(t.yellow >= 0.0 && t.all_red >= 0.0) {
            return Err(Error::validation("timing", "yellow and all_red must be non-negative"));
        }
        if !(t.dt_serve >= 0.0) {
            return Err(Error::validation("dt_serve", "must be non-negative"));
        }
        if !(t.sample_step > 0.0 && t.gipps_step > 0.0) {
            return Err(Error::validation("timing", "sampling steps must be positive"));
        }

        for (name, m) in [
            ("left", &self.limits.left),
            ("straight", &self.limits.straight),
            ("right", &self.limits.right),
        ] {
            if !(m.v_cross > 0.0 && m.v_cross <= m.v_max) {
                return Err(Error::validation(
                    "limits",
                    format!("{name}: require 0 < v_cross <= v_max"),
                ));
            }
        }

        for (name, a) in [("av", &self.attributes.av), ("cv", &self.attributes.cv)] {
            if !(a.a_max_dec < 0.0 && a.a_max_acc > 0.0) {
                return Err(Error::validation(
                    "attributes",
                    format!("{name}: require a_max_dec < 0 < a_max_acc"),
                ));
            }
            if !(a.length > 0.0 && a.v_des > 0.0) {
                return Err(Error::validation(
                    "attributes",
                    format!("{name}: length and v_des must be positive"),
                ));
            }
        }
        if !(self.attributes.jam_gap >= 0.0) {
            return Err(Error::validation("jam_gap", "must be non-negative"));
        }

        let a = &self.arrivals;
        if !(a.mean_headway > 0.0) {
            return Err(Error::validation("mean_headway", "must be positive"));
        }
        if !(0.0..=1.0).contains(&a.av_ratio) {
            return Err(Error::validation(
                "av_ratio",
                format!("{} is not a probability in [0, 1]", a.av_ratio),
            ));
        }
        let s = a.speed;
        if !(s.min > 0.0 && s.min <= s.mode && s.mode <= s.max) {
            return Err(Error::validation("speed", "require 0 < min <= mode <= max"));
        }
        if !(a.saturation_headway > 0.0) {
            return Err(Error::validation("saturation_headway", "must be positive"));
        }
        if !(a.horizon >= 0.0 && a.drain >= 0.0) {
            return Err(Error::validation("horizon", "horizon and drain must be non-negative"));
        }
        Ok(())
    }

    pub fn lane(&self, id: LaneId) -> Result<&Lane> {
        self.lanes.get(id).ok_or(Error::UnknownId { kind: "lane", id })
    }

    /// Sets every lane's detection range.
    pub fn with_detection_range(mut self, range: f64) -> Self {
        for lane in &mut self.lanes {
            lane.detection_range = range;
        }
        self
    }

    pub fn to_document(&self) -> ScenarioDoc {
        ScenarioDoc::from(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("scenario serializes")
    }
}

/// Parses and validates a scenario document, filling defaults for omitted
/// fields.
pub fn load_scenario(text: &str) -> Result<Scenario> {
    let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let scenario = doc.into_scenario()?;
    scenario.validate()?;
    Ok(scenario)
}

// ---------------------------------------------------------------------------
// Document format
// ---------------------------------------------------------------------------

fn speed(field: &str, mph: Option<f64>, fps: Option<f64>, default: f64) -> Result<f64> {
    match (mph, fps) {
        (Some(_), Some(_)) => Err(Error::validation(
            field,
            "give either the _mph or the _fps form, not both",
        )),
        (Some(v), None) => Ok(mph_to_fps(v)),
        (None, Some(v)) => Ok(v),
        (None, None) => Ok(default),
    }
}

/// On-disk scenario document.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lanes: Option<Vec<LaneDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<Vec<PhaseId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incidence: Option<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits: Option<LimitsDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attributes: Option<AttributesDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrivals: Option<ArrivalsDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<LaneId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_range_ft: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub movement: Option<Movement>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_min_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_max_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yellow_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub all_red_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_serve_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_step_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gipps_step_s: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MovementLimitsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_max_mph: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_max_fps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_cross_mph: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_cross_fps: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<MovementLimitsDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub straight: Option<MovementLimitsDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<MovementLimitsDoc>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleAttributesDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_max_dec_fps2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_max_acc_fps2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_ft: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_des_mph: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_des_fps: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributesDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub av: Option<VehicleAttributesDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv: Option<VehicleAttributesDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jam_gap_ft: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_headway_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub av_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_min_mph: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_min_fps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_mode_mph: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_mode_fps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_max_mph: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_max_fps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation_headway_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drain_s: Option<f64>,
}

impl ScenarioDoc {
    pub fn into_scenario(self) -> Result<Scenario> {
        let base = Scenario::default();

        let lanes = match self.lanes {
            None => base.lanes.clone(),
            Some(docs) => docs
                .into_iter()
                .enumerate()
                .map(|(i, d)| {
                    let fallback = base.lanes.get(i);
                    Lane {
                        id: d.id.unwrap_or(i),
                        detection_range: d
                            .detection_range_ft
                            .or(fallback.map(|l| l.detection_range))
                            .unwrap_or(1000.0),
                        movement: d
                            .movement
                            .or(fallback.map(|l| l.movement))
                            .unwrap_or(Movement::Straight),
                    }
                })
                .collect(),
        };

        let phases = self.phases.unwrap_or_else(|| base.phase_plan.phases.clone());
        let incidence = match self.incidence {
            Some(m) => m,
            // The default matrix only applies to the default geometry.
            None if lanes.len() == base.lanes.len()
                && phases.len() == base.phase_plan.phases.len() =>
            {
                base.phase_plan.incidence.clone()
            }
            None => {
                return Err(Error::validation(
                    "incidence",
                    "required unless the layout has 6 lanes and 4 phases",
                ))
            }
        };

        let t = self.timing.unwrap_or_default();
        let bt = &base.timing;
        let timing = SignalTimingBounds {
            g_min: t.g_min_s.unwrap_or(bt.g_min),
            g_max: t.g_max_s.unwrap_or(bt.g_max),
            yellow: t.yellow_s.unwrap_or(bt.yellow),
            all_red: t.all_red_s.unwrap_or(bt.all_red),
            dt_serve: t.dt_serve_s.unwrap_or(bt.dt_serve),
            sample_step: t.sample_step_s.unwrap_or(bt.sample_step),
            gipps_step: t.gipps_step_s.unwrap_or(bt.gipps_step),
        };

        let l = self.limits.unwrap_or_default();
        let movement = |name: &str, doc: Option<MovementLimitsDoc>, def: &MovementLimits| {
            let d = doc.unwrap_or_default();
            Ok::<_, Error>(MovementLimits {
                v_max: speed(&format!("limits.{name}.v_max"), d.v_max_mph, d.v_max_fps, def.v_max)?,
                v_cross: speed(
                    &format!("limits.{name}.v_cross"),
                    d.v_cross_mph,
                    d.v_cross_fps,
                    def.v_cross,
                )?,
            })
        };
        let limits = SpeedLimits {
            left: movement("left", l.left, &base.limits.left)?,
            straight: movement("straight", l.straight, &base.limits.straight)?,
            right: movement("right", l.right, &base.limits.right)?,
        };

        let a = self.attributes.unwrap_or_default();
        let vehicle = |name: &str, doc: Option<VehicleAttributesDoc>, def: &VehicleAttributes| {
            let d = doc.unwrap_or_default();
            Ok::<_, Error>(VehicleAttributes {
                a_max_dec: d.a_max_dec_fps2.unwrap_or(def.a_max_dec),
                a_max_acc: d.a_max_acc_fps2.unwrap_or(def.a_max_acc),
                length: d.length_ft.unwrap_or(def.length),
                v_des: speed(&format!("attributes.{name}.v_des"), d.v_des_mph, d.v_des_fps, def.v_des)?,
            })
        };
        let attributes = FleetAttributes {
            av: vehicle("av", a.av, &base.attributes.av)?,
            cv: vehicle("cv", a.cv, &base.attributes.cv)?,
            jam_gap: a.jam_gap_ft.unwrap_or(base.attributes.jam_gap),
        };

        let r = self.arrivals.unwrap_or_default();
        let br = &base.arrivals;
        let arrivals = ArrivalProcess {
            mean_headway: r.mean_headway_s.unwrap_or(br.mean_headway),
            av_ratio: r.av_ratio.unwrap_or(br.av_ratio),
            speed: TriangularSpeed {
                min: speed("arrivals.speed_min", r.speed_min_mph, r.speed_min_fps, br.speed.min)?,
                mode: speed("arrivals.speed_mode", r.speed_mode_mph, r.speed_mode_fps, br.speed.mode)?,
                max: speed("arrivals.speed_max", r.speed_max_mph, r.speed_max_fps, br.speed.max)?,
            },
            horizon: r.horizon_s.unwrap_or(br.horizon),
            saturation_headway: r.saturation_headway_s.unwrap_or(br.saturation_headway),
            drain: r.drain_s.unwrap_or(br.drain),
        };

        Ok(Scenario {
            lanes,
            phase_plan: PhasePlan { phases, incidence },
            timing,
            limits,
            attributes,
            arrivals,
            seed: self.seed.unwrap_or(base.seed),
        })
    }
}

impl From<&Scenario> for ScenarioDoc {
    fn from(s: &Scenario) -> Self {
        let lim = |m: &MovementLimits| MovementLimitsDoc {
            v_max_fps: Some(m.v_max),
            v_cross_fps: Some(m.v_cross),
            ..Default::default()
        };
        let att = |a: &VehicleAttributes| VehicleAttributesDoc {
            a_max_dec_fps2: Some(a.a_max_dec),
            a_max_acc_fps2: Some(a.a_max_acc),
            length_ft: Some(a.length),
            v_des_fps: Some(a.v_des),
            ..Default::default()
        };
        ScenarioDoc {
            lanes: Some(
                s.lanes
                    .iter()
                    .map(|l| LaneDoc {
                        id: Some(l.id),
                        detection_range_ft: Some(l.detection_range),
                        movement: Some(l.movement),
                    })
                    .collect(),
            ),
            phases: Some(s.phase_plan.phases.clone()),
            incidence: Some(s.phase_plan.incidence.clone()),
            timing: Some(TimingDoc {
                g_min_s: Some(s.timing.g_min),
                g_max_s: Some(s.timing.g_max),
                yellow_s: Some(s.timing.yellow),
                all_red_s: Some(s.timing.all_red),
                dt_serve_s: Some(s.timing.dt_serve),
                sample_step_s: Some(s.timing.sample_step),
                gipps_step_s: Some(s.timing.gipps_step),
            }),
            limits: Some(LimitsDoc {
                left: Some(lim(&s.limits.left)),
                straight: Some(lim(&s.limits.straight)),
                right: Some(lim(&s.limits.right)),
            }),
            attributes: Some(AttributesDoc {
                av: Some(att(&s.attributes.av)),
                cv: Some(att(&s.attributes.cv)),
                jam_gap_ft: Some(s.attributes.jam_gap),
            }),
            arrivals: Some(ArrivalsDoc {
                mean_headway_s: Some(s.arrivals.mean_headway),
                av_ratio: Some(s.arrivals.av_ratio),
                speed_min_fps: Some(s.arrivals.speed.min),
                speed_mode_fps: Some(s.arrivals.speed.mode),
                speed_max_fps: Some(s.arrivals.speed.max),
                horizon_s: Some(s.arrivals.horizon),
                saturation_headway_s: Some(s.arrivals.saturation_headway),
                drain_s: Some(s.arrivals.drain),
                ..Default::default()
            }),
            seed: Some(s.seed),
        }
    }
}
