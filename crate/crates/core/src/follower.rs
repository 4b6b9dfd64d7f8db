//! Per-lane trajectory computation: optimized followers for automated
//! vehicles, Gipps car-following estimates for conventional ones, and the
//! front-to-back dispatch that ties them together.
//!
//! A vehicle is either *served* (its trajectory departs the stop bar inside a
//! green window) or *held* (no window admits it yet, so it is modelled as
//! approaching a red light and stopping). Held vehicles are re-planned from
//! their current state once the signal schedule offers them a window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lto::{solve_lto, GreenWindow, LtoProblem};
use crate::scenario::{LaneId, Movement, MovementLimits, VehicleAttributes};
use crate::trajectory::{sample_plan, TrajPoint, Trajectory, FEAS_TOL};

/// Distance short of the stop bar at which a vehicle facing red comes to rest.
pub const STOP_MARGIN: f64 = 0.5;

const MAX_GIPPS_STEPS: usize = 200_000;
const SPEED_MATCH_TOL: f64 = 1e-6;
const CLEARANCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleType {
    Av,
    Cv,
}

/// State recorded at detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrivalState {
    pub t0: f64,
    pub d0: f64,
    pub v0: f64,
    pub movement: Movement,
}

/// How a vehicle's current trajectory was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMethod {
    /// Lead-vehicle optimization.
    Lto,
    /// Joined to the lagged trajectory of the vehicle ahead.
    FtoJoin,
    /// Follower that could not join and was optimized as a lead instead.
    FtoLto,
    /// Car-following estimate (or car-following fallback for an automated
    /// vehicle).
    Gipps,
    /// Conventional lead holding its detection speed.
    ConstantSpeed,
    /// Not yet served: approaching a red stop bar.
    Hold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleRecord {
    pub id: usize,
    #[serde(rename = "type")]
    pub kind: VehicleType,
    pub lane: LaneId,
    pub spt: ArrivalState,
    pub att: VehicleAttributes,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Trajectory>,
    pub method: Option<PlanMethod>,
    pub departed: bool,
    pub departure_time: Option<f64>,
}

impl VehicleRecord {
    pub fn new(id: usize, kind: VehicleType, lane: LaneId, spt: ArrivalState, att: VehicleAttributes) -> Self {
        VehicleRecord {
            id,
            kind,
            lane,
            spt,
            att,
            trajectory: None,
            method: None,
            departed: false,
            departure_time: None,
        }
    }

    pub fn is_served(&self) -> bool {
        matches!(self.method, Some(m) if m != PlanMethod::Hold)
    }

    pub fn is_held(&self) -> bool {
        self.method == Some(PlanMethod::Hold)
    }

    pub fn travel_time(&self) -> Option<f64> {
        self.departure_time.map(|t| t - self.spt.t0)
    }

    /// State to plan from at `now`: the detection state for a new vehicle,
    /// otherwise the current point of its held trajectory.
    pub fn start_state(&self, now: f64) -> Start {
        match &self.trajectory {
            None => Start {
                t: self.spt.t0,
                d: self.spt.d0,
                v: self.spt.v0,
                fresh: true,
            },
            Some(traj) => {
                let t = now.max(self.spt.t0);
                let (d, v) = traj.state_clamped(t);
                Start {
                    t,
                    d: d.max(0.0),
                    v: v.max(0.0),
                    fresh: false,
                }
            }
        }
    }
}

/// Kinematic state a plan starts from. `fresh` marks the detection state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Start {
    pub t: f64,
    pub d: f64,
    pub v: f64,
    pub fresh: bool,
}

impl From<&ArrivalState> for Start {
    fn from(s: &ArrivalState) -> Self {
        Start {
            t: s.t0,
            d: s.d0,
            v: s.v0,
            fresh: true,
        }
    }
}

/// Lane-independent planning parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanParams {
    pub limits: MovementLimits,
    pub saturation_headway: f64,
    pub jam_gap: f64,
    pub sample_step: f64,
    pub gipps_step: f64,
}

/// The vehicle directly ahead in the lane.
#[derive(Debug, Clone, Copy)]
pub struct Lead<'a> {
    pub traj: &'a Trajectory,
    pub length: f64,
    /// Stop-bar departure time, `None` while the lead is held.
    pub departure: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Planned {
    Served {
        trajectory: Trajectory,
        method: PlanMethod,
    },
    Held {
        trajectory: Trajectory,
    },
}

// ---------------------------------------------------------------------------
// Gipps car following

fn gipps_free_speed(v: f64, att: &VehicleAttributes, dt: f64) -> f64 {
    let r = v / att.v_des;
    v + 2.5 * att.a_max_acc * dt * (1.0 - r) * (0.025 + r).max(0.0).sqrt()
}

/// Safe-braking speed bound for clearance `gap` behind an obstacle moving at
/// `v_lead`, with the follower's own deceleration `a_dec` (< 0) assumed for
/// both vehicles.
pub fn gipps_brake_speed(v: f64, gap: f64, v_lead: f64, a_dec: f64, dt: f64) -> f64 {
    let arg = a_dec * a_dec * dt * dt - 2.0 * a_dec * gap + a_dec * dt * v + v_lead * v_lead;
    a_dec * dt + arg.max(0.0).sqrt()
}

/// One car-following update.
pub fn gipps_next_speed(
    v: f64,
    att: &VehicleAttributes,
    dt: f64,
    constraints: impl IntoIterator<Item = (f64, f64)>,
) -> f64 {
    let mut vn = gipps_free_speed(v, att, dt);
    for (gap, v_lead) in constraints {
        vn = vn.min(gipps_brake_speed(v, gap, v_lead, att.a_max_dec, dt));
    }
    vn.max(0.0)
}

/// Largest speed at which a follower `gap` behind a lead moving at `v_lead`
/// is already in a car-following steady state (the braking bound admits it).
pub fn gipps_safe_speed(gap: f64, v_lead: f64, a_dec: f64, dt: f64) -> f64 {
    let b = -a_dec;
    let disc = 9.0 * b * b * dt * dt + 4.0 * (2.0 * b * gap.max(0.0) + v_lead * v_lead);
    ((-3.0 * b * dt + disc.sqrt()) / 2.0).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum StopBar {
    Open,
    RedUntil(f64),
    Red,
}

enum GippsEnd {
    Departed(Trajectory),
    Stopped(Trajectory),
    TooLate,
}

fn gipps_run(
    start: Start,
    att: &VehicleAttributes,
    lead: Option<&Lead>,
    bar: StopBar,
    jam_gap: f64,
    dt: f64,
    give_up_after: f64,
) -> Result<GippsEnd> {
    let (mut t, mut d, mut v) = (start.t, start.d, start.v);
    let mut points = vec![TrajPoint { t, d, v }];
    let lead_dep = lead.map_or(f64::NEG_INFINITY, |l| l.departure.unwrap_or(f64::INFINITY));
    let lead_settled = lead.map_or(f64::NEG_INFINITY, |l| l.departure.unwrap_or(l.traj.last().t));
    for _ in 0..MAX_GIPPS_STEPS {
        if t > give_up_after {
            return Ok(GippsEnd::TooLate);
        }
        let red = match bar {
            StopBar::Open => false,
            StopBar::RedUntil(tr) => t < tr,
            StopBar::Red => true,
        };
        let ahead = lead.filter(|_| t < lead_dep).map(|l| {
            let (dl, vl) = l.traj.state_clamped(t);
            (d - dl - l.length - jam_gap, vl)
        });
        let bar_gap = red.then_some((d - STOP_MARGIN, 0.0));
        let mut vn = gipps_next_speed(v, att, dt, ahead.into_iter().chain(bar_gap));
        let mut dn = d - 0.5 * (v + vn) * dt;
        if dn <= 0.0 {
            if red {
                dn = d.clamp(0.0, STOP_MARGIN);
                vn = 0.0;
            } else {
                let a = (vn - v) / dt;
                let h = crossing_time(v, a, d, dt);
                let tc = t + h;
                points.push(TrajPoint {
                    t: tc,
                    d: 0.0,
                    v: (v + a * h).max(0.0),
                });
                return Ok(GippsEnd::Departed(Trajectory::from_points(points)));
            }
        }
        let stopped_before = v == 0.0;
        t += dt;
        d = dn;
        v = vn;
        points.push(TrajPoint { t, d, v });
        if bar == StopBar::Red && stopped_before && v == 0.0 && t >= lead_settled {
            let departure_time = t;
            return Ok(GippsEnd::Stopped(Trajectory {
                points,
                departure_time,
            }));
        }
    }
    Err(Error::Stalled)
}

/// Time within a step of length `dt` to cover `d` starting at speed `v` with
/// constant acceleration `a`.
fn crossing_time(v: f64, a: f64, d: f64, dt: f64) -> f64 {
    let h = if a.abs() < 1e-12 {
        if v > 0.0 {
            d / v
        } else {
            dt
        }
    } else {
        let disc = (v * v + 2.0 * a * d).max(0.0);
        let sq = disc.sqrt();
        // Stable form of (-v + sq) / a.
        if v + sq > 0.0 {
            2.0 * d / (v + sq)
        } else {
            dt
        }
    };
    h.clamp(0.0, dt)
}

fn window_containing(windows: &[GreenWindow], t: f64) -> Option<usize> {
    windows.iter().position(|w| w.contains(t))
}

/// Earliest time `>= t` inside some window.
pub fn earliest_window_time(windows: &[GreenWindow], t: f64) -> Option<f64> {
    windows
        .iter()
        .find(|w| w.end >= t - FEAS_TOL)
        .map(|w| w.start.max(t))
}

/// Windows restricted to departures no earlier than `t`.
pub fn truncate_windows(windows: &[GreenWindow], t: f64) -> Vec<GreenWindow> {
    windows
        .iter()
        .filter(|w| w.end >= t - FEAS_TOL)
        .map(|w| GreenWindow::new(w.start.max(t), w.end.max(t)))
        .collect()
}

/// Car-following trajectory with no signal in the way.
pub fn estimate_fte(
    lead: &Lead,
    start: Start,
    att_follower: &VehicleAttributes,
    jam_gap: f64,
    dt: f64,
) -> Result<Trajectory> {
    match gipps_run(start, att_follower, Some(lead), StopBar::Open, jam_gap, dt, f64::INFINITY)? {
        GippsEnd::Departed(t) => Ok(t),
        _ => Err(Error::Stalled),
    }
}

/// Car-following trajectory that treats the stop bar as red until a window
/// opens and departs inside that window. Tries the unobstructed run first
/// when `try_open` is set. `None` when no window can be met.
fn gipps_in_windows(
    start: Start,
    att: &VehicleAttributes,
    lead: Option<&Lead>,
    windows: &[GreenWindow],
    jam_gap: f64,
    dt: f64,
    try_open: bool,
) -> Result<Option<Trajectory>> {
    let Some(last) = windows.last() else {
        return Ok(None);
    };
    if try_open {
        if let GippsEnd::Departed(tr) =
            gipps_run(start, att, lead, StopBar::Open, jam_gap, dt, last.end)?
        {
            if window_containing(windows, tr.departure_time).is_some() {
                return Ok(Some(tr));
            }
        }
    }
    for w in windows.iter().filter(|w| w.end >= start.t) {
        if let GippsEnd::Departed(tr) =
            gipps_run(start, att, lead, StopBar::RedUntil(w.start), jam_gap, dt, w.end)?
        {
            if w.contains(tr.departure_time) {
                return Ok(Some(tr));
            }
        }
    }
    Ok(None)
}

/// Trajectory of a vehicle waiting for a red stop bar (and its lead).
fn hold_trajectory(
    start: Start,
    att: &VehicleAttributes,
    lead: Option<&Lead>,
    jam_gap: f64,
    dt: f64,
) -> Result<Trajectory> {
    match gipps_run(start, att, lead, StopBar::Red, jam_gap, dt, f64::INFINITY)? {
        GippsEnd::Stopped(t) => Ok(t),
        _ => Err(Error::Stalled),
    }
}

/// Conventional lead vehicle keeping its detection speed to the stop bar.
pub fn estimate_lead_cv(spt: &ArrivalState, sample_step: f64) -> Result<Trajectory> {
    if !(spt.v0 > 0.0) {
        return Err(Error::DegenerateArrival(format!(
            "vehicle detected at speed {} cannot be projected at constant speed",
            spt.v0
        )));
    }
    let travel = spt.d0 / spt.v0;
    let mut points = Vec::with_capacity((travel / sample_step) as usize + 2);
    let mut k = 0u64;
    loop {
        let h = k as f64 * sample_step;
        if h >= travel - FEAS_TOL {
            break;
        }
        points.push(TrajPoint {
            t: spt.t0 + h,
            d: spt.d0 - spt.v0 * h,
            v: spt.v0,
        });
        k += 1;
    }
    points.push(TrajPoint {
        t: spt.t0 + travel,
        d: 0.0,
        v: spt.v0,
    });
    Ok(Trajectory::from_points(points))
}

// ---------------------------------------------------------------------------
// Automated followers

/// Constant-acceleration segment between two states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub d0: f64,
    pub v0: f64,
    pub a: f64,
    pub t1: f64,
}

impl Segment {
    pub fn state(&self, t: f64) -> (f64, f64) {
        let h = (t - self.t0).clamp(0.0, self.t1 - self.t0);
        (self.d0 - self.v0 * h - 0.5 * self.a * h * h, self.v0 + self.a * h)
    }

    /// Points every `dt` from the start, excluding the end point.
    pub fn sample(&self, dt: f64) -> Vec<TrajPoint> {
        let mut out = Vec::new();
        let mut k = 0u64;
        loop {
            let t = self.t0 + k as f64 * dt;
            if t >= self.t1 - FEAS_TOL {
                break;
            }
            let (d, v) = self.state(t);
            out.push(TrajPoint { t, d, v });
            k += 1;
        }
        out
    }
}

/// Single constant-acceleration move from `start` that arrives at `point`
/// with its position and speed, if the acceleration is admissible.
pub fn transition_to(point: TrajPoint, start: Start, att: &VehicleAttributes) -> Option<Segment> {
    let dt = point.t - start.t;
    if !(dt > 0.0) {
        return None;
    }
    let a = 2.0 * ((start.d - point.d) - start.v * dt) / (dt * dt);
    let v_end = start.v + a * dt;
    let ok = a >= att.a_max_dec - FEAS_TOL
        && a <= att.a_max_acc + FEAS_TOL
        && v_end >= -FEAS_TOL
        && (v_end - point.v).abs() <= SPEED_MATCH_TOL;
    ok.then_some(Segment {
        t0: start.t,
        d0: start.d,
        v0: start.v,
        a,
        t1: point.t,
    })
}

/// Smallest lag keeping a copy of `lead` delayed by it at least `clearance`
/// behind the lead, over lead times from `from` on. Checked at the lead's
/// sample points.
fn spatial_lag(lead: &Trajectory, clearance: f64, from: f64) -> f64 {
    let mut lag: f64 = 0.0;
    let mut check = |t: f64, d: f64| {
        if d >= clearance {
            if let Some(tc) = lead.time_at_distance(d - clearance) {
                lag = lag.max(tc - t);
            }
        }
    };
    if from > lead.start_time() && from < lead.departure_time {
        let (d, _) = lead.state_clamped(from);
        check(from, d);
    }
    for p in lead.points.iter().filter(|p| p.t >= from) {
        check(p.t, p.d);
    }
    lag
}

/// Smallest value of `d_follower - d_lead - lead_length` over the follower's
/// points and the lead's points in the common span before the lead departs.
pub fn min_clearance(follower: &Trajectory, lead: &Trajectory, lead_length: f64) -> f64 {
    let lo = follower.start_time().max(lead.start_time());
    let hi = follower.departure_time.min(lead.departure_time);
    let mut worst = f64::INFINITY;
    if hi < lo {
        return worst;
    }
    let times = follower
        .points
        .iter()
        .chain(lead.points.iter())
        .map(|p| p.t)
        .filter(|&t| t >= lo - FEAS_TOL && t <= hi + FEAS_TOL);
    for t in times {
        let (df, _) = follower.state_clamped(t);
        let (dl, _) = lead.state_clamped(t);
        worst = worst.min(df - dl - lead_length);
    }
    worst
}

fn lto_problem(start: Start, att: &VehicleAttributes, limits: &MovementLimits, windows: Vec<GreenWindow>) -> LtoProblem {
    LtoProblem {
        d0: start.d,
        v0: start.v,
        t0: start.t,
        v_max: limits.v_max,
        v_cross: limits.v_cross,
        a_max_dec: att.a_max_dec,
        a_max_acc: att.a_max_acc,
        v_des: att.v_des,
        green_windows: windows,
    }
}

fn lto_trajectory(
    start: Start,
    att: &VehicleAttributes,
    params: &PlanParams,
    windows: &[GreenWindow],
) -> Result<Trajectory> {
    if !(start.d > FEAS_TOL) || windows.is_empty() {
        return Err(Error::Infeasible);
    }
    let problem = lto_problem(start, att, &params.limits, windows.to_vec());
    let sol = solve_lto(&problem)?;
    sample_plan(&sol.plan, params.sample_step)
}

/// Trajectory for an automated follower: a constant-acceleration transition
/// onto the lead's trajectory lagged to the earliest admissible departure,
/// or, when no transition exists, a lead-vehicle optimization with departures
/// held back by the saturation headway. Errors with `Infeasible` when neither
/// yields a collision-free plan.
pub fn solve_fto(
    lead: &Lead,
    start: Start,
    att: &VehicleAttributes,
    params: &PlanParams,
    windows: &[GreenWindow],
) -> Result<(Trajectory, PlanMethod)> {
    let lead_dep = lead
        .departure
        .ok_or_else(|| Error::InvalidArgument("lead has no departure".into()))?;
    let s_h = params.saturation_headway;
    let clearance = lead.length + params.jam_gap;

    if let Some(joined) = try_join(lead, lead_dep, start, att, params, windows, clearance)? {
        return Ok((joined, PlanMethod::FtoJoin));
    }

    let held_back = truncate_windows(windows, lead_dep + s_h);
    let traj = lto_trajectory(start, att, params, &held_back)?;
    if min_clearance(&traj, lead.traj, lead.length) >= params.jam_gap - CLEARANCE_TOL {
        Ok((traj, PlanMethod::FtoLto))
    } else {
        Err(Error::Infeasible)
    }
}

fn try_join(
    lead: &Lead,
    lead_dep: f64,
    start: Start,
    att: &VehicleAttributes,
    params: &PlanParams,
    windows: &[GreenWindow],
    clearance: f64,
) -> Result<Option<Trajectory>> {
    let Some(first) = earliest_window_time(windows, lead_dep + params.saturation_headway) else {
        return Ok(None);
    };
    let mut lag = first - lead_dep;
    for _ in 0..32 {
        let needed = spatial_lag(lead.traj, clearance, start.t - lag);
        if needed <= lag + 1e-9 {
            break;
        }
        match earliest_window_time(windows, lead_dep + needed) {
            Some(t) => lag = t - lead_dep,
            None => return Ok(None),
        }
    }
    if window_containing(windows, lead_dep + lag).is_none() {
        return Ok(None);
    }
    let hypo = lead.traj.lagged(lag);
    let pts = &hypo.points;

    for i in 0..pts.len().saturating_sub(1) {
        let (p, q) = (pts[i], pts[i + 1]);
        if q.t <= start.t {
            continue;
        }
        let span = q.t - p.t;
        if span <= 0.0 {
            continue;
        }
        let a = (q.v - p.v) / span;
        let c = p.t - start.t;
        // Gap between the follower's average-speed distance and the
        // hypothetical's distance is linear in the time into the segment.
        let alpha = (start.d - p.d) - 0.5 * (start.v + p.v) * c;
        let beta = 0.5 * (p.v - start.v) - 0.5 * a * c;
        let h_lo = (start.t - p.t).max(0.0);
        let h = if beta.abs() < 1e-12 {
            if alpha.abs() < 1e-9 {
                h_lo
            } else {
                continue;
            }
        } else {
            -alpha / beta
        };
        if h < h_lo - 1e-12 || h > span + 1e-12 {
            continue;
        }
        let h = h.clamp(h_lo, span);
        let t_join = p.t + h;
        let (d_join, v_join) = hypo.state_clamped(t_join);
        let mut points;
        if t_join - start.t <= 1e-9 {
            // Already on the hypothetical trajectory.
            if (start.d - d_join).abs() > 1e-6 || (start.v - v_join).abs() > SPEED_MATCH_TOL {
                continue;
            }
            points = vec![TrajPoint {
                t: start.t,
                d: start.d,
                v: start.v,
            }];
        } else {
            let target = TrajPoint {
                t: t_join,
                d: d_join,
                v: v_join,
            };
            let Some(seg) = transition_to(target, start, att) else {
                continue;
            };
            points = seg.sample(params.sample_step);
            points.push(target);
        }
        points.extend(pts.iter().copied().filter(|x| x.t > t_join + FEAS_TOL));
        let traj = Trajectory::from_points(points);
        if min_clearance(&traj, lead.traj, lead.length) >= params.jam_gap - CLEARANCE_TOL {
            return Ok(Some(traj));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Dispatch

/// Plans one vehicle from `start` given the vehicle ahead and the departure
/// windows of its lane. `min_departure` holds automated vehicles back by the
/// saturation headway behind the previous departure in the lane.
#[allow(clippy::too_many_arguments)]
pub fn plan_vehicle(
    kind: VehicleType,
    start: Start,
    att: &VehicleAttributes,
    lead: Option<&Lead>,
    min_departure: Option<f64>,
    windows: &[GreenWindow],
    params: &PlanParams,
) -> Result<Planned> {
    let dt = params.gipps_step;
    let hold = |lead: Option<&Lead>| -> Result<Planned> {
        Ok(Planned::Held {
            trajectory: hold_trajectory(start, att, lead, params.jam_gap, dt)?,
        })
    };
    if let Some(l) = lead {
        if l.departure.is_none() {
            return hold(lead);
        }
    }
    let windows: Vec<GreenWindow> = windows.iter().copied().filter(|w| w.end >= start.t).collect();
    let served = |trajectory: Trajectory, method| Planned::Served { trajectory, method };

    match kind {
        VehicleType::Av => {
            let held_back = match min_departure {
                Some(t) => truncate_windows(&windows, t),
                None => windows.clone(),
            };
            let optimized = match lead {
                Some(l) => solve_fto(l, start, att, params, &windows),
                None => lto_trajectory(start, att, params, &held_back).map(|t| (t, PlanMethod::Lto)),
            };
            match optimized {
                Ok((t, m)) => return Ok(served(t, m)),
                Err(Error::Infeasible) => {}
                Err(e) => return Err(e),
            }
            match gipps_in_windows(start, att, lead, &held_back, params.jam_gap, dt, false)? {
                Some(t) => Ok(served(t.resampled(params.sample_step), PlanMethod::Gipps)),
                None => hold(lead),
            }
        }
        VehicleType::Cv => {
            if lead.is_none() && start.fresh && start.v > 0.0 {
                let spt = ArrivalState {
                    t0: start.t,
                    d0: start.d,
                    v0: start.v,
                    movement: Movement::Straight,
                };
                let t = estimate_lead_cv(&spt, params.sample_step)?;
                if window_containing(&windows, t.departure_time).is_some() {
                    return Ok(served(t, PlanMethod::ConstantSpeed));
                }
            }
            match gipps_in_windows(start, att, lead, &windows, params.jam_gap, dt, true)? {
                Some(t) => Ok(served(t.resampled(params.sample_step), PlanMethod::Gipps)),
                None => hold(lead),
            }
        }
    }
}

/// Vehicles of one lane that have not departed yet, front (closest to the
/// stop bar) first.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LaneQueue {
    pub lane: LaneId,
    pub vehicles: Vec<VehicleRecord>,
    /// Departure time of the last vehicle that left the lane.
    pub last_departure: Option<f64>,
}

impl LaneQueue {
    pub fn new(lane: LaneId) -> Self {
        LaneQueue {
            lane,
            vehicles: Vec::new(),
            last_departure: None,
        }
    }

    /// Removes the front vehicle once it crosses the stop bar.
    pub fn depart_front(&mut self) -> Option<VehicleRecord> {
        if self.vehicles.is_empty() {
            return None;
        }
        let mut v = self.vehicles.remove(0);
        v.departed = true;
        self.last_departure = v.departure_time;
        Some(v)
    }
}

/// Computes a trajectory for every vehicle in `queue` that has none or is
/// held, front to back, so each vehicle is planned against the final
/// trajectory of the one ahead. Returns the indices of vehicles that became
/// served.
pub fn dispatch_ato(
    queue: &mut LaneQueue,
    windows: &[GreenWindow],
    params: &PlanParams,
    now: f64,
) -> Result<Vec<usize>> {
    let mut newly_served = Vec::new();
    let mut lead_changed = false;
    for i in 0..queue.vehicles.len() {
        let needs = !queue.vehicles[i].is_served();
        if !needs {
            lead_changed = false;
            continue;
        }
        let (before, rest) = queue.vehicles.split_at_mut(i);
        let me = &mut rest[0];
        let prev = before.last();
        let lead = prev.and_then(|p| {
            p.trajectory.as_ref().map(|traj| Lead {
                traj,
                length: p.att.length,
                departure: if p.is_served() { p.departure_time } else { None },
            })
        });
        let min_departure = match prev {
            Some(p) => p.departure_time,
            None => queue.last_departure,
        }
        .map(|t| t + params.saturation_headway);
        let start = me.start_state(now);
        let was_held = me.is_held();
        let planned = plan_vehicle(me.kind, start, &me.att, lead.as_ref(), min_departure, windows, params)
            .map_err(|e| match e {
                Error::Infeasible => Error::VehicleInfeasible { vehicle: me.id },
                other => other,
            })?;
        match planned {
            Planned::Served { trajectory, method } => {
                let full = match (&me.trajectory, start.fresh) {
                    (Some(old), false) => old.spliced(trajectory),
                    _ => trajectory,
                };
                me.departure_time = Some(full.departure_time);
                me.trajectory = Some(full);
                me.method = Some(method);
                newly_served.push(i);
                lead_changed = true;
            }
            Planned::Held { trajectory } => {
                if was_held && !lead_changed {
                    continue;
                }
                let full = match (&me.trajectory, start.fresh) {
                    (Some(old), false) => old.spliced(trajectory),
                    _ => trajectory,
                };
                me.trajectory = Some(full);
                me.method = Some(PlanMethod::Hold);
                me.departure_time = None;
                lead_changed = true;
            }
        }
    }
    Ok(newly_served)
}
