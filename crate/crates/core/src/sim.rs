//! Event-driven simulation of the intersection under the trajectory-driven
//! controller, plus a time-stepped run of the actuated baseline on the same
//! arrival stream.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Triangular};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::follower::{gipps_next_speed, gipps_safe_speed, ArrivalState, VehicleRecord, VehicleType, STOP_MARGIN};
use crate::lto::MIN_CRUISE_SPEED;
use crate::scenario::{LaneId, Scenario};
use crate::signal::{ActuatedController, ActuatedParams, Intersection, PhaseInterval};
use crate::trajectory::{TrajPoint, Trajectory, FEAS_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Iics,
    Actuated,
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ControllerKind::Iics => "iics",
            ControllerKind::Actuated => "actuated",
        })
    }
}

// ---------------------------------------------------------------------------
// Event queue

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Departure,
    GreenEnd,
    Arrival,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub lane: LaneId,
    /// Vehicle id for arrivals and departures, interval index for green ends.
    pub payload: usize,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap.
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.kind.cmp(&self.kind))
            .then_with(|| other.lane.cmp(&self.lane))
            .then_with(|| other.payload.cmp(&self.payload))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Time-ordered events; ties go departure, green end, arrival, then lane.
#[derive(Debug, Clone, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: Event) {
        self.heap.push(event);
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }

    pub fn peek(&self) -> Option<&Event> {
        self.heap.peek()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Arrivals

/// Clearance a follower at speed `v` needs behind a lead at `v_lead` to be in
/// a car-following steady state with step `dt`.
pub fn safe_gap(v: f64, v_lead: f64, a_dec: f64, dt: f64) -> f64 {
    let b = -a_dec;
    ((v * v + 3.0 * b * dt * v - v_lead * v_lead) / (2.0 * b)).max(0.0)
}

/// Every vehicle of a run in detection order, ids assigned by detection time.
/// Lanes draw from independent streams of one seeded generator.
pub fn generate_arrivals(scenario: &Scenario, seed: u64) -> Vec<VehicleRecord> {
    let a = &scenario.arrivals;
    let mut out: Vec<VehicleRecord> = Vec::new();
    if !a.mean_headway.is_finite() {
        return out;
    }
    let gap_dist = Exp::new(1.0 / a.mean_headway).expect("positive rate");
    let speed_dist = Triangular::new(a.speed.min, a.speed.max, a.speed.mode).expect("valid triangular speeds");
    let jam = scenario.attributes.jam_gap;
    let dt = scenario.timing.gipps_step;
    for lane in &scenario.lanes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(lane.id as u64);
        let mut t = 0.0;
        let mut prev: Option<(f64, f64, f64)> = None;
        loop {
            t += gap_dist.sample(&mut rng);
            let v0 = speed_dist.sample(&mut rng);
            let kind = if rng.random_bool(a.av_ratio.clamp(0.0, 1.0)) {
                VehicleType::Av
            } else {
                VehicleType::Cv
            };
            let att = match kind {
                VehicleType::Av => scenario.attributes.av,
                VehicleType::Cv => scenario.attributes.cv,
            };
            // Defer a vehicle that would appear on top of the previous one,
            // assuming the previous one kept its detection speed.
            if let Some((t_prev, v_prev, len_prev)) = prev {
                let need = len_prev + jam + safe_gap(v0, v_prev, att.a_max_dec, dt);
                t = t.max(t_prev + need / v_prev);
            }
            if t > a.horizon {
                break;
            }
            prev = Some((t, v0, att.length));
            let spt = ArrivalState {
                t0: t,
                d0: lane.detection_range,
                v0,
                movement: lane.movement,
            };
            out.push(VehicleRecord::new(0, kind, lane.id, spt, att));
        }
    }
    out.sort_by(|x, y| x.spt.t0.total_cmp(&y.spt.t0).then(x.lane.cmp(&y.lane)));
    for (i, v) in out.iter_mut().enumerate() {
        v.id = i;
    }
    out
}

/// Detection state adjusted for the vehicle ahead at the moment of
/// detection: the speed is capped so the follower can still brake behind it.
/// `None` while there is no room to enter yet.
fn entry_speed(v: &VehicleRecord, lead: Option<(f64, f64, f64)>, jam_gap: f64, dt: f64) -> Option<f64> {
    let Some((d_lead, v_lead, len_lead)) = lead else {
        return Some(v.spt.v0);
    };
    let gap = v.spt.d0 - d_lead - len_lead - jam_gap;
    if gap < 0.0 {
        return None;
    }
    let cap = gipps_safe_speed(gap, v_lead, v.att.a_max_dec, dt);
    let v0 = v.spt.v0.min(cap);
    (v0 >= MIN_CRUISE_SPEED).then_some(v0)
}

// ---------------------------------------------------------------------------
// Results

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub controller: ControllerKind,
    pub seed: u64,
    /// Vehicles that crossed the stop bar, in departure order.
    pub vehicles: Vec<VehicleRecord>,
    /// Completed green intervals.
    pub signal_history: Vec<PhaseInterval>,
    /// Vehicles still on the approach (or not yet able to enter it) when the
    /// run ended.
    pub residual: Vec<VehicleRecord>,
    /// Green still open when the run ended.
    #[serde(default)]
    pub open_interval: Option<PhaseInterval>,
    /// Simulated end of the run: horizon plus drain time.
    pub end_time: f64,
    pub config_echo: Scenario,
}

impl SimResult {
    pub fn generated(&self) -> usize {
        self.vehicles.len() + self.residual.len()
    }

    /// Drops per-vehicle trajectories, which dominate the serialized size.
    pub fn without_trajectories(mut self) -> Self {
        for v in self.vehicles.iter_mut().chain(self.residual.iter_mut()) {
            v.trajectory = None;
        }
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

/// Minimum detection range so that a vehicle can be served and still slow to
/// the crossing speed after the decision latency.
pub fn min_detection_range(v0: f64, v_cross: f64, a_max_dec: f64, dt_serve: f64) -> f64 {
    let travel = v0 * dt_serve;
    if v_cross > v0 {
        return travel;
    }
    travel + (v_cross * v_cross - v0 * v0) / (2.0 * a_max_dec)
}

/// One warning per lane whose detection range is shorter than the minimum for
/// the fastest arrivals.
pub fn check_scenario_feasibility(scenario: &Scenario) -> Vec<String> {
    let v0 = scenario.arrivals.speed.max;
    let dt = scenario.timing.dt_serve;
    let mut out = Vec::new();
    for lane in &scenario.lanes {
        let lim = scenario.limits.get(lane.movement);
        let a = scenario.attributes.av.a_max_dec.max(scenario.attributes.cv.a_max_dec);
        let need = min_detection_range(v0, lim.v_cross, a, dt);
        if lane.detection_range < need {
            out.push(format!(
                "lane {}: detection range {:.1} ft is below the {:.2} ft needed at {:.2} ft/s",
                lane.id, lane.detection_range, need, v0
            ));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Trajectory-driven controller

/// Event-driven run of the trajectory-driven controller. Step through with
/// [`IicsSim::step`] or call [`run`].
#[derive(Debug, Clone)]
pub struct IicsSim {
    scenario: Scenario,
    seed: u64,
    pub state: Intersection,
    events: EventQueue,
    /// Generated vehicles by id, taken out when detected.
    pending: Vec<Option<VehicleRecord>>,
    departed: Vec<VehicleRecord>,
    green_end_token: Option<(usize, f64)>,
    now: f64,
    end_time: f64,
}

impl IicsSim {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        Self::with_arrivals(scenario, generate_arrivals(scenario, scenario.seed))
    }

    pub fn with_arrivals(scenario: &Scenario, arrivals: Vec<VehicleRecord>) -> Result<Self> {
        scenario.validate()?;
        let mut events = EventQueue::new();
        for v in &arrivals {
            events.push(Event {
                time: v.spt.t0,
                kind: EventKind::Arrival,
                lane: v.lane,
                payload: v.id,
            });
        }
        let pending = index_by_id(arrivals)?;
        Ok(IicsSim {
            scenario: scenario.clone(),
            seed: scenario.seed,
            state: Intersection::new(scenario),
            events,
            pending,
            departed: Vec::new(),
            green_end_token: None,
            now: 0.0,
            end_time: scenario.arrivals.horizon + scenario.arrivals.drain,
        })
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Kind of the next event to process, `None` when the run is over.
    pub fn next_event(&self) -> Option<EventKind> {
        self.events
            .peek()
            .filter(|e| e.time <= self.end_time)
            .map(|e| e.kind)
    }

    /// Vehicles detected so far (on the approach or departed).
    pub fn detected(&self) -> usize {
        self.departed.len() + self.state.queues.iter().map(|q| q.vehicles.len()).sum::<usize>()
    }

    pub fn departed(&self) -> &[VehicleRecord] {
        &self.departed
    }

    /// Processes one event. Returns its kind, or `None` when the run is over.
    pub fn step(&mut self) -> Result<Option<EventKind>> {
        let Some(ev) = self.events.peek().copied() else {
            return Ok(None);
        };
        if ev.time > self.end_time {
            return Ok(None);
        }
        self.events.pop();
        self.now = self.now.max(ev.time);
        match ev.kind {
            EventKind::Arrival => self.on_arrival(ev)?,
            EventKind::Departure => self.on_departure(ev),
            EventKind::GreenEnd => {
                if self.green_end_token == Some((ev.payload, ev.time)) && self.state.schedule.open {
                    self.green_end_token = None;
                    self.state.on_green_end(self.now)?;
                    self.after_decision();
                }
            }
        }
        Ok(Some(ev.kind))
    }

    fn on_arrival(&mut self, ev: Event) -> Result<()> {
        let Some(mut v) = self.pending.get_mut(ev.payload).and_then(Option::take) else {
            return Ok(());
        };
        let dt = self.scenario.timing.gipps_step;
        let lead = self.state.queues[v.lane].vehicles.last().map(|l| {
            let (d, s) = l
                .trajectory
                .as_ref()
                .map_or((l.spt.d0, l.spt.v0), |tr| tr.state_clamped(ev.time));
            (d, s, l.att.length)
        });
        match entry_speed(&v, lead, self.scenario.attributes.jam_gap, dt) {
            Some(v0) => {
                v.spt.v0 = v0;
                v.spt.t0 = ev.time;
                self.state.on_arrival(v, self.now)?;
                self.after_decision();
            }
            None => {
                // No room yet: try again a step later.
                let later = ev.time + dt;
                v.spt.t0 = later;
                self.pending[ev.payload] = Some(v);
                self.events.push(Event { time: later, ..ev });
            }
        }
        Ok(())
    }

    fn on_departure(&mut self, ev: Event) {
        let q = &mut self.state.queues[ev.lane];
        let matches = q
            .vehicles
            .first()
            .is_some_and(|v| v.id == ev.payload && v.is_served() && v.departure_time == Some(ev.time));
        if matches {
            if let Some(v) = q.depart_front() {
                self.departed.push(v);
            }
            self.schedule_departure(ev.lane);
        }
    }

    fn schedule_departure(&mut self, lane: LaneId) {
        if let Some(v) = self.state.queues[lane].vehicles.first() {
            if let (true, Some(t)) = (v.is_served(), v.departure_time) {
                self.events.push(Event {
                    time: t.max(self.now),
                    kind: EventKind::Departure,
                    lane,
                    payload: v.id,
                });
            }
        }
    }

    fn after_decision(&mut self) {
        for lane in 0..self.state.queues.len() {
            self.schedule_departure(lane);
        }
        if let Some(iv) = self.state.schedule.current() {
            let token = (self.state.schedule.intervals.len() - 1, iv.green_end);
            if self.green_end_token != Some(token) {
                self.green_end_token = Some(token);
                self.events.push(Event {
                    time: iv.green_end.max(self.now),
                    kind: EventKind::GreenEnd,
                    lane: 0,
                    payload: token.0,
                });
                // Stale tokens are ignored when popped; the stored one must
                // carry the pushed time.
                self.green_end_token = Some((token.0, iv.green_end.max(self.now)));
            }
        } else {
            self.green_end_token = None;
        }
    }

    /// Runs every remaining event.
    pub fn run_to_end(&mut self) -> Result<()> {
        while self.step()?.is_some() {}
        Ok(())
    }

    pub fn finish(mut self) -> SimResult {
        let end = self.end_time;
        let mut residual: Vec<VehicleRecord> = self.state.queues.iter_mut().flat_map(|q| q.vehicles.drain(..)).collect();
        residual.extend(self.pending.into_iter().flatten());
        residual.sort_by_key(|v| v.id);
        let signal_history = completed_intervals(&self.state.schedule.intervals, self.state.schedule.open, end);
        let open_interval = self.state.schedule.current().copied();
        SimResult {
            open_interval,
            controller: ControllerKind::Iics,
            seed: self.seed,
            vehicles: self.departed,
            signal_history,
            residual,
            end_time: end,
            config_echo: self.scenario,
        }
    }
}

fn index_by_id(arrivals: Vec<VehicleRecord>) -> Result<Vec<Option<VehicleRecord>>> {
    let mut out: Vec<Option<VehicleRecord>> = vec![None; arrivals.len()];
    for v in arrivals {
        let id = v.id;
        match out.get_mut(id) {
            Some(slot @ None) => *slot = Some(v),
            _ => return Err(Error::InvalidArgument(format!("vehicle ids must be 0..n without repeats; got {id}"))),
        }
    }
    Ok(out)
}

fn completed_intervals(intervals: &[PhaseInterval], open: bool, end: f64) -> Vec<PhaseInterval> {
    let n = intervals.len() - usize::from(open);
    intervals[..n]
        .iter()
        .copied()
        .filter(|iv| iv.yellow_end() <= end + FEAS_TOL)
        .collect()
}

// ---------------------------------------------------------------------------
// Actuated baseline

struct Moving {
    rec: VehicleRecord,
    d: f64,
    v: f64,
    points: Vec<TrajPoint>,
}

/// Time-stepped run of the actuated controller. Every vehicle is driven by
/// car following, stopping for red and for yellow when it still can.
pub fn run_actuated(scenario: &Scenario, arrivals: Vec<VehicleRecord>, params: ActuatedParams) -> Result<SimResult> {
    scenario.validate()?;
    let dt = scenario.timing.gipps_step;
    let end = scenario.arrivals.horizon + scenario.arrivals.drain;
    let jam = scenario.attributes.jam_gap;
    let n_lanes = scenario.lanes.len();
    let mut ctrl = ActuatedController::new(scenario.phase_plan.clone(), scenario.timing, params);
    let mut pending: std::collections::VecDeque<VehicleRecord> = arrivals.into();
    let mut waiting: Vec<VehicleRecord> = Vec::new();
    let mut lanes: Vec<Vec<Moving>> = (0..n_lanes).map(|_| Vec::new()).collect();
    let mut departed: Vec<VehicleRecord> = Vec::new();
    let steps = (end / dt).ceil() as usize;

    for k in 0..steps {
        let t_prev = k as f64 * dt;
        let t_next = t_prev + dt;
        let signal: Vec<LaneSignal> = (0..n_lanes).map(|l| lane_signal(&ctrl, scenario, l, t_prev)).collect();

        // Move vehicles already on the approach.
        let mut presence = vec![false; n_lanes];
        for (l, lane) in lanes.iter_mut().enumerate() {
            let mut lead: Option<(f64, f64, f64)> = None;
            let mut keep = Vec::with_capacity(lane.len());
            for mut m in lane.drain(..) {
                let a = m.rec.att;
                let mut cons: Vec<(f64, f64)> = Vec::with_capacity(2);
                if let Some((dl, vl, ll)) = lead {
                    cons.push((m.d - dl - ll - jam, vl));
                }
                let stop = match signal[l] {
                    LaneSignal::Green => false,
                    LaneSignal::Red => true,
                    LaneSignal::Yellow => m.v * m.v / (-2.0 * a.a_max_dec) <= m.d - STOP_MARGIN + FEAS_TOL,
                };
                if stop {
                    cons.push((m.d - STOP_MARGIN, 0.0));
                }
                let d_before = m.d;
                let mut vn = gipps_next_speed(m.v, &a, dt, cons);
                let mut dn = m.d - 0.5 * (m.v + vn) * dt;
                if stop && dn < 0.0 {
                    dn = m.d.clamp(0.0, STOP_MARGIN);
                    vn = 0.0;
                }
                if dn <= 0.0 {
                    let acc = (vn - m.v) / dt;
                    let h = crossing(m.v, acc, m.d, dt);
                    let tc = t_prev + h;
                    m.points.push(TrajPoint { t: tc, d: 0.0, v: (m.v + acc * h).max(0.0) });
                    occupy(&mut presence[l], d_before, 0.0, a.length, params.detector_length);
                    let mut rec = m.rec;
                    rec.trajectory = Some(Trajectory { points: m.points, departure_time: tc });
                    rec.departure_time = Some(tc);
                    rec.departed = true;
                    departed.push(rec);
                    // A departed vehicle no longer constrains the one behind.
                    continue;
                }
                occupy(&mut presence[l], d_before, dn, a.length, params.detector_length);
                m.d = dn;
                m.v = vn;
                m.points.push(TrajPoint { t: t_next, d: dn, v: vn });
                lead = Some((m.d, m.v, a.length));
                keep.push(m);
            }
            *lane = keep;
        }

        // Vehicles detected during this step enter behind the last one.
        while pending.front().is_some_and(|v| v.spt.t0 <= t_next) {
            waiting.push(pending.pop_front().expect("front"));
        }
        let mut still = Vec::new();
        for mut rec in waiting.drain(..) {
            let l = rec.lane;
            let t_in = rec.spt.t0.max(t_prev);
            let lead = lanes[l].last().map(|m| (m.d + m.v * (t_next - t_in), m.v, m.rec.att.length));
            match entry_speed(&rec, lead, jam, dt) {
                Some(v0) => {
                    rec.spt.t0 = t_in;
                    rec.spt.v0 = v0;
                    rec.method = Some(crate::follower::PlanMethod::Gipps);
                    let h = t_next - t_in;
                    let d = rec.spt.d0 - v0 * h;
                    let points = vec![
                        TrajPoint { t: t_in, d: rec.spt.d0, v: v0 },
                        TrajPoint { t: t_next, d, v: v0 },
                    ];
                    lanes[l].push(Moving { rec, d, v: v0, points });
                }
                None => still.push(rec),
            }
        }
        waiting = still;

        ctrl.actuated_step(&presence, t_next);
    }

    let mut residual: Vec<VehicleRecord> = lanes
        .into_iter()
        .flatten()
        .map(|m| {
            let mut rec = m.rec;
            rec.trajectory = Some(Trajectory::from_points(m.points));
            rec
        })
        .collect();
    residual.extend(waiting);
    residual.extend(pending);
    residual.sort_by_key(|v| v.id);
    departed.sort_by(|a, b| {
        a.departure_time
            .unwrap_or(f64::INFINITY)
            .total_cmp(&b.departure_time.unwrap_or(f64::INFINITY))
            .then(a.id.cmp(&b.id))
    });
    let signal_history = completed_intervals(&ctrl.schedule.intervals, ctrl.schedule.open, end);
    let open_interval = ctrl.schedule.current().copied();
    Ok(SimResult {
        open_interval,
        controller: ControllerKind::Actuated,
        seed: scenario.seed,
        vehicles: departed,
        signal_history,
        residual,
        end_time: end,
        config_echo: scenario.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum LaneSignal {
    Green,
    Yellow,
    Red,
}

fn lane_signal(ctrl: &ActuatedController, scenario: &Scenario, lane: LaneId, t: f64) -> LaneSignal {
    let plan = &scenario.phase_plan;
    let serves = |p| plan.serves(p, lane).unwrap_or(false);
    if ctrl.green_phase(t).is_some_and(serves) {
        return LaneSignal::Green;
    }
    if ctrl.yellow_phase(t).is_some_and(serves) {
        return LaneSignal::Yellow;
    }
    LaneSignal::Red
}

/// Marks the stop-bar detector occupied when any part of the vehicle was over
/// it during the step.
fn occupy(flag: &mut bool, d_from: f64, d_to: f64, length: f64, detector: f64) {
    if d_to <= detector && d_from + length >= 0.0 {
        *flag = true;
    }
}

fn crossing(v: f64, a: f64, d: f64, dt: f64) -> f64 {
    let h = if a.abs() < 1e-12 {
        if v > 0.0 {
            d / v
        } else {
            dt
        }
    } else {
        let sq = (v * v + 2.0 * a * d).max(0.0).sqrt();
        if v + sq > 0.0 {
            2.0 * d / (v + sq)
        } else {
            dt
        }
    };
    h.clamp(0.0, dt)
}

/// Runs one controller on the scenario's own arrival stream.
pub fn run(scenario: &Scenario, controller: ControllerKind) -> Result<SimResult> {
    let arrivals = generate_arrivals(scenario, scenario.seed);
    run_with_arrivals(scenario, controller, arrivals)
}

/// Runs one controller on a given arrival stream (ids 0..n).
pub fn run_with_arrivals(scenario: &Scenario, controller: ControllerKind, arrivals: Vec<VehicleRecord>) -> Result<SimResult> {
    match controller {
        ControllerKind::Iics => {
            let mut sim = IicsSim::with_arrivals(scenario, arrivals)?;
            sim.run_to_end()?;
            Ok(sim.finish())
        }
        ControllerKind::Actuated => run_actuated(scenario, arrivals, ActuatedParams::default()),
    }
}

/// Safety and signal-timing violations in a result, one message each.
///
/// Checks clearance between consecutive vehicles of a lane until the lead
/// crosses the stop bar, the saturation headway behind automated followers,
/// first-in first-out departures, departures only on green or yellow of a
/// serving phase, green bounds and the clearance time between greens.
pub fn check_safety(result: &SimResult) -> Vec<String> {
    let sc = &result.config_echo;
    let tol = 1e-6;
    let mut out = Vec::new();
    for lane in &sc.lanes {
        let mut vs: Vec<&VehicleRecord> = result.vehicles.iter().filter(|v| v.lane == lane.id).collect();
        vs.sort_by_key(|v| v.id);
        for w in vs.windows(2) {
            let (lead, fol) = (w[0], w[1]);
            let (Some(tl), Some(tf)) = (lead.departure_time, fol.departure_time) else {
                continue;
            };
            if tf < tl - tol {
                out.push(format!("lane {}: vehicle {} departed before vehicle {}", lane.id, fol.id, lead.id));
            }
            if fol.kind == VehicleType::Av && tf - tl < sc.arrivals.saturation_headway - tol {
                out.push(format!(
                    "lane {}: vehicle {} departed {:.3} s after vehicle {}",
                    lane.id,
                    fol.id,
                    tf - tl,
                    lead.id
                ));
            }
            if let (Some(a), Some(b)) = (&lead.trajectory, &fol.trajectory) {
                let t_from = a.start_time().max(b.start_time());
                let gap = b
                    .points
                    .iter()
                    .map(|p| p.t)
                    .chain(a.points.iter().map(|p| p.t))
                    .filter(|&t| t >= t_from && t <= tl)
                    .map(|t| b.state_clamped(t).0 - a.state_clamped(t).0 - lead.att.length)
                    .fold(f64::INFINITY, f64::min);
                if gap < -tol {
                    out.push(format!(
                        "lane {}: vehicle {} overlaps vehicle {} by {:.3} ft",
                        lane.id, fol.id, lead.id, -gap
                    ));
                }
            }
        }
    }
    let intervals: Vec<PhaseInterval> = result.signal_history.iter().chain(result.open_interval.iter()).copied().collect();
    for v in &result.vehicles {
        let Some(t) = v.departure_time else { continue };
        let ok = intervals.iter().any(|iv| {
            sc.phase_plan.serves(iv.phase, v.lane).unwrap_or(false)
                && t >= iv.start - tol
                && t <= iv.yellow_end() + tol
        });
        if !ok {
            out.push(format!("vehicle {} departed on red at {:.3} s", v.id, t));
        }
    }
    let tm = &sc.timing;
    for iv in &result.signal_history {
        if iv.green() < tm.g_min - tol || iv.green() > tm.g_max + tol {
            out.push(format!("phase {} green of {:.3} s at {:.3} s", iv.phase, iv.green(), iv.start));
        }
    }
    for w in intervals.windows(2) {
        if w[1].start < w[0].end() - tol {
            out.push(format!("green at {:.3} s starts before clearance ends at {:.3} s", w[1].start, w[0].end()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn event_order() {
        let mut q = EventQueue::new();
        let e = |time, kind, lane| Event { time, kind, lane, payload: 0 };
        q.push(e(2.0, EventKind::Arrival, 0));
        q.push(e(1.0, EventKind::Arrival, 3));
        q.push(e(1.0, EventKind::Arrival, 1));
        q.push(e(1.0, EventKind::GreenEnd, 0));
        q.push(e(1.0, EventKind::Departure, 5));
        let order: Vec<_> = std::iter::from_fn(|| q.pop()).map(|e| (e.time, e.kind, e.lane)).collect();
        assert_eq!(
            order,
            vec![
                (1.0, EventKind::Departure, 5),
                (1.0, EventKind::GreenEnd, 0),
                (1.0, EventKind::Arrival, 1),
                (1.0, EventKind::Arrival, 3),
                (2.0, EventKind::Arrival, 0),
            ]
        );
    }

    #[test]
    fn detection_range_examples() {
        assert_abs_diff_eq!(min_detection_range(58.667, 44.0, -15.0, 0.1), 56.06, epsilon = 0.01);
        assert_abs_diff_eq!(min_detection_range(64.533, 0.0, -15.0, 0.1), 145.27, epsilon = 0.01);
        assert_eq!(min_detection_range(50.0, 50.0, -15.0, 0.0), 0.0);
        assert_abs_diff_eq!(min_detection_range(30.0, 40.0, -15.0, 0.1), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn feasibility_warnings() {
        let s = Scenario::default().with_detection_range(500.0);
        assert!(check_scenario_feasibility(&s).is_empty());
        let mut s = Scenario::default().with_detection_range(100.0);
        s.limits.straight.v_cross = 0.0;
        let w = check_scenario_feasibility(&s);
        assert_eq!(w.len(), 4);
        let mut s = Scenario::default().with_detection_range(1.0);
        s.timing.dt_serve = 0.0;
        s.limits.left.v_cross = s.arrivals.speed.max;
        s.limits.straight.v_cross = s.arrivals.speed.max;
        assert!(check_scenario_feasibility(&s).is_empty());
    }

    #[test]
    fn arrivals_follow_the_configuration() {
        let mut s = Scenario::default();
        s.arrivals.av_ratio = 1.0;
        let a = generate_arrivals(&s, 7);
        assert!(!a.is_empty());
        assert!(a.iter().all(|v| v.kind == VehicleType::Av));
        assert!(a.iter().all(|v| v.spt.t0 <= s.arrivals.horizon));
        assert!(a.windows(2).all(|w| w[0].spt.t0 <= w[1].spt.t0));
        assert_eq!(a, generate_arrivals(&s, 7));
        assert_ne!(a, generate_arrivals(&s, 8));
    }

    #[test]
    fn arrival_counts_match_poisson() {
        let mut s = Scenario::default();
        s.arrivals.mean_headway = 8.0;
        let per_lane: f64 = 900.0 / 8.0;
        let sigma = per_lane.sqrt();
        for seed in 0..5 {
            let a = generate_arrivals(&s, seed);
            for lane in 0..6 {
                let n = a.iter().filter(|v| v.lane == lane).count() as f64;
                // Spawn spacing removes a little time per gap.
                assert!((n - per_lane).abs() < 3.0 * sigma + 3.0, "lane {lane}: {n}");
            }
        }
    }

    #[test]
    fn empty_demand() {
        let mut s = Scenario::default();
        s.arrivals.mean_headway = f64::INFINITY;
        let r = run(&s, ControllerKind::Iics).unwrap();
        assert!(r.vehicles.is_empty() && r.residual.is_empty() && r.signal_history.is_empty());
    }

    #[test]
    fn single_av_is_not_delayed() {
        let s = Scenario::default();
        let att = s.attributes.av;
        let spt = ArrivalState { t0: 3.0, d0: 1000.0, v0: att.v_des, movement: s.lanes[1].movement };
        let v = VehicleRecord::new(0, VehicleType::Av, 1, spt, att);
        let r = run_with_arrivals(&s, ControllerKind::Iics, vec![v]).unwrap();
        assert_eq!(r.vehicles.len(), 1);
        let tt = r.vehicles[0].travel_time().unwrap();
        assert_abs_diff_eq!(tt, 1000.0 / att.v_des, epsilon = 1e-3);
        assert_eq!(r.signal_history.len(), 1);
    }

    #[test]
    fn runs_are_deterministic_and_conserve_vehicles() {
        let mut s = Scenario::default();
        s.seed = 11;
        s.arrivals.horizon = 300.0;
        for c in [ControllerKind::Iics, ControllerKind::Actuated] {
            let r1 = run(&s, c).unwrap();
            let r2 = run(&s, c).unwrap();
            assert_eq!(r1.to_json(), r2.to_json());
            assert_eq!(r1.generated(), generate_arrivals(&s, 11).len());
        }
    }
}
