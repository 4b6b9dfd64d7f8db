//! Signal timing: the trajectory-driven extend-or-switch controller and a
//! gap-out/max-out actuated controller used as a baseline.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::follower::{dispatch_ato, LaneQueue, PlanParams, VehicleRecord};
use crate::lto::{GreenWindow, DELAY_TOL};
use crate::scenario::{Lane, LaneId, PhaseId, PhasePlan, Scenario, SignalTimingBounds, SpeedLimits};
use crate::trajectory::FEAS_TOL;

/// One green of one phase followed by its clearance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseInterval {
    pub phase: PhaseId,
    pub start: f64,
    pub green_end: f64,
    pub yellow: f64,
    pub all_red: f64,
}

impl PhaseInterval {
    pub fn green(&self) -> f64 {
        self.green_end - self.start
    }

    pub fn yellow_end(&self) -> f64 {
        self.green_end + self.yellow
    }

    /// End of the all-red that follows this interval.
    pub fn end(&self) -> f64 {
        self.green_end + self.yellow + self.all_red
    }

    /// End of the arrival interval whose vehicles this green serves: a
    /// vehicle detected later cannot reach the stop bar before yellow ends.
    pub fn arrival_interval_end(&self, lag: f64) -> f64 {
        self.yellow_end() - lag
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalDecision {
    /// Keep (or start) serving `phase` with green until `extend_to`.
    Extend { phase: PhaseId, extend_to: f64 },
    Switch { next_phase: PhaseId },
}

/// Committed signal plan. Every interval but possibly the last is final; the
/// last one is *open* while its green may still be extended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSchedule {
    pub intervals: Vec<PhaseInterval>,
    pub open: bool,
    pub timing: SignalTimingBounds,
}

impl SignalSchedule {
    pub fn new(timing: SignalTimingBounds) -> Self {
        SignalSchedule {
            intervals: Vec::new(),
            open: false,
            timing,
        }
    }

    /// The extendable interval, if any.
    pub fn current(&self) -> Option<&PhaseInterval> {
        if self.open {
            self.intervals.last()
        } else {
            None
        }
    }

    pub fn current_phase(&self) -> Option<PhaseId> {
        self.current().map(|i| i.phase)
    }

    /// Intervals that can no longer change.
    pub fn history(&self) -> &[PhaseInterval] {
        let n = self.intervals.len() - usize::from(self.open);
        &self.intervals[..n]
    }

    /// Departure windows for a lane that end at or after `now`. The open
    /// interval offers its whole potential green up to `g_max`.
    pub fn windows_for_lane(&self, plan: &PhasePlan, lane: LaneId, now: f64) -> Vec<GreenWindow> {
        let last = self.intervals.len().wrapping_sub(1);
        self.intervals
            .iter()
            .enumerate()
            .filter(|(_, iv)| plan.serves(iv.phase, lane).unwrap_or(false))
            .map(|(i, iv)| {
                let green_end = if self.open && i == last {
                    iv.start + self.timing.g_max
                } else {
                    iv.green_end
                };
                GreenWindow::new(iv.start, green_end + iv.yellow)
            })
            .filter(|w| w.end >= now)
            .collect()
    }

    /// Makes the open green cover a departure at `t_dep` when that departure
    /// relies on it. Returns whether the green end moved.
    pub fn extend_for(&mut self, t_dep: f64) -> bool {
        let g_max = self.timing.g_max;
        match self.intervals.last_mut() {
            Some(iv) if self.open && t_dep >= iv.start - FEAS_TOL && t_dep > iv.green_end => {
                let target = t_dep.min(iv.start + g_max);
                if target > iv.green_end {
                    iv.green_end = target;
                    return true;
                }
                false
            }
            _ => false,
        }
    }

    /// Ends the open green no earlier than its minimum and schedules `phase`
    /// right after the clearance (or at `now` when the signal is idle).
    pub fn switch_to(&mut self, phase: PhaseId, now: f64) {
        let g_min = self.timing.g_min;
        if self.open {
            if let Some(iv) = self.intervals.last_mut() {
                iv.green_end = iv.green_end.max(iv.start + g_min);
            }
        }
        let start = self.intervals.last().map_or(now, |iv| iv.end().max(now));
        self.intervals.push(PhaseInterval {
            phase,
            start,
            green_end: start + g_min,
            yellow: self.timing.yellow,
            all_red: self.timing.all_red,
        });
        self.open = true;
    }

    /// Freezes the open interval (its green has run out).
    pub fn close(&mut self) {
        self.open = false;
    }

    /// Interval whose window contains `t` for a lane.
    pub fn interval_serving(&self, plan: &PhasePlan, lane: LaneId, t: f64) -> Option<usize> {
        let last = self.intervals.len().wrapping_sub(1);
        self.intervals.iter().enumerate().position(|(i, iv)| {
            let end = if self.open && i == last {
                iv.start + self.timing.g_max + iv.yellow
            } else {
                iv.yellow_end()
            };
            plan.serves(iv.phase, lane).unwrap_or(false) && t >= iv.start - FEAS_TOL && t <= end + FEAS_TOL
        })
    }
}

/// Minimum time to traverse a lane's detection range: the lead time between
/// a signal decision and the departures it governs.
pub fn lag_time(lane: &Lane, limits: &SpeedLimits) -> f64 {
    let v_max = limits.get(lane.movement).v_max;
    if v_max > 0.0 {
        lane.detection_range / v_max
    } else {
        f64::INFINITY
    }
}

/// Planning parameters for every lane of a scenario.
pub fn lane_params(scenario: &Scenario) -> Vec<PlanParams> {
    scenario
        .lanes
        .iter()
        .map(|lane| PlanParams {
            limits: *scenario.limits.get(lane.movement),
            saturation_headway: scenario.arrivals.saturation_headway,
            jam_gap: scenario.attributes.jam_gap,
            sample_step: scenario.timing.sample_step,
            gipps_step: scenario.timing.gipps_step,
        })
        .collect()
}

/// Live state of the trajectory-driven controller: lane queues plus the
/// committed schedule.
#[derive(Debug, Clone)]
pub struct Intersection {
    pub queues: Vec<LaneQueue>,
    pub schedule: SignalSchedule,
    pub plan: PhasePlan,
    params: Vec<PlanParams>,
}

impl Intersection {
    pub fn new(scenario: &Scenario) -> Self {
        Intersection {
            queues: scenario.lanes.iter().map(|l| LaneQueue::new(l.id)).collect(),
            schedule: SignalSchedule::new(scenario.timing),
            plan: scenario.phase_plan.clone(),
            params: lane_params(scenario),
        }
    }

    /// Plans every unserved vehicle of `lane` and stretches the open green to
    /// cover the new departures. Returns vehicle ids that became served.
    fn dispatch_lane(queues: &mut [LaneQueue], schedule: &mut SignalSchedule, plan: &PhasePlan, params: &[PlanParams], lane: LaneId, now: f64) -> Result<Vec<usize>> {
        let windows = schedule.windows_for_lane(plan, lane, now);
        let queue = &mut queues[lane];
        let served = dispatch_ato(queue, &windows, &params[lane], now)?;
        let mut ids = Vec::with_capacity(served.len());
        for i in served {
            let v = &queue.vehicles[i];
            if let Some(t) = v.departure_time {
                schedule.extend_for(t);
            }
            ids.push(v.id);
        }
        Ok(ids)
    }

    fn held_lanes(&self) -> Vec<LaneId> {
        self.queues
            .iter()
            .filter(|q| q.vehicles.iter().any(|v| !v.is_served()))
            .map(|q| q.lane)
            .collect()
    }

    /// Phases serving at least one lane with an unserved vehicle, in plan
    /// order.
    pub fn switch_candidates(&self) -> Vec<PhaseId> {
        let lanes = self.held_lanes();
        self.plan
            .phases
            .iter()
            .copied()
            .filter(|&p| lanes.iter().any(|&l| self.plan.serves(p, l).unwrap_or(false)))
            .collect()
    }

    /// Handles a newly detected vehicle: appends it to its lane, plans it and
    /// either stretches the green that serves it or switches phases.
    pub fn on_arrival(&mut self, vehicle: VehicleRecord, now: f64) -> Result<SignalDecision> {
        let lane = vehicle.lane;
        let id = vehicle.id;
        self.queues[lane].vehicles.push(vehicle);
        let served = Self::dispatch_lane(&mut self.queues, &mut self.schedule, &self.plan, &self.params, lane, now)?;
        if served.contains(&id) {
            let dep = self.queues[lane]
                .vehicles
                .iter()
                .find(|v| v.id == id)
                .and_then(|v| v.departure_time)
                .unwrap_or(now);
            let idx = self
                .schedule
                .interval_serving(&self.plan, lane, dep)
                .unwrap_or(self.schedule.intervals.len() - 1);
            let iv = &self.schedule.intervals[idx];
            return Ok(SignalDecision::Extend {
                phase: iv.phase,
                extend_to: iv.green_end,
            });
        }
        let mut candidates = self.switch_candidates();
        if let Some(iv) = self.schedule.current().copied() {
            // Waiting vehicles of the open phase are picked up when its green
            // ends.
            candidates.retain(|&p| p != iv.phase);
            if candidates.is_empty() {
                return Ok(SignalDecision::Extend {
                    phase: iv.phase,
                    extend_to: iv.green_end,
                });
            }
        }
        let next = self.select_next_phase(&candidates, now)?;
        self.apply_switch(next, now)?;
        Ok(SignalDecision::Switch { next_phase: next })
    }

    /// Handles the end of the open green: freezes it, then serves waiting
    /// vehicles if there are any.
    pub fn on_green_end(&mut self, now: f64) -> Result<Option<SignalDecision>> {
        self.schedule.close();
        let mut candidates = self.switch_candidates();
        if candidates.is_empty() {
            return Ok(None);
        }
        // The phase that just maxed out runs again only if nothing else waits.
        if let Some(last) = self.schedule.intervals.last().map(|iv| iv.phase) {
            if candidates.len() > 1 {
                candidates.retain(|&p| p != last);
            }
        }
        let next = self.select_next_phase(&candidates, now)?;
        self.apply_switch(next, now)?;
        Ok(Some(SignalDecision::Switch { next_phase: next }))
    }

    fn apply_switch(&mut self, phase: PhaseId, now: f64) -> Result<()> {
        self.schedule.switch_to(phase, now);
        for lane in self.plan.lanes_of(phase) {
            Self::dispatch_lane(&mut self.queues, &mut self.schedule, &self.plan, &self.params, lane, now)?;
        }
        Ok(())
    }

    /// Summed delay of all unserved vehicles if `phase` were switched to now.
    /// Vehicles still unserved afterwards count with the delay they incur
    /// waiting at least until that phase's clearance ends.
    fn tentative_delay(&self, phase: PhaseId, now: f64) -> Result<f64> {
        let mut schedule = self.schedule.clone();
        schedule.switch_to(phase, now);
        let lanes = self.plan.lanes_of(phase);
        let mut trial: Vec<(LaneId, LaneQueue)> = Vec::with_capacity(lanes.len());
        for &lane in &lanes {
            let mut q = LaneQueue {
                lane,
                vehicles: self.queues[lane].vehicles.clone(),
                last_departure: self.queues[lane].last_departure,
            };
            let windows = schedule.windows_for_lane(&self.plan, lane, now);
            let served = dispatch_ato(&mut q, &windows, &self.params[lane], now)?;
            for i in served {
                if let Some(t) = q.vehicles[i].departure_time {
                    schedule.extend_for(t);
                }
            }
            trial.push((lane, q));
        }
        let release = schedule.intervals.last().map_or(now, |iv| iv.end());
        let h = self.params.first().map_or(0.0, |p| p.saturation_headway);
        let mut total = 0.0;
        for q in &self.queues {
            let vehicles = trial
                .iter()
                .find(|(l, _)| *l == q.lane)
                .map_or(&q.vehicles, |(_, tq)| &tq.vehicles);
            let mut prev = q.last_departure;
            for (v, orig) in vehicles.iter().zip(&q.vehicles) {
                let dep = match v.departure_time {
                    Some(t) if v.is_served() => t,
                    // Still waiting: no earlier than the clearance of the
                    // candidate phase, discharging at saturation headway.
                    _ => {
                        let free = v.spt.t0 + v.spt.d0 / v.att.v_des;
                        let mut t = free.max(release);
                        if let Some(p) = prev {
                            t = t.max(p + h);
                        }
                        t
                    }
                };
                prev = Some(dep);
                if !orig.is_served() {
                    let free = v.spt.t0 + v.spt.d0 / v.att.v_des;
                    total += (dep - free).max(0.0);
                }
            }
        }
        Ok(total)
    }

    /// Candidate with the least summed delay; ties go to the first candidate
    /// in plan order after the current phase.
    pub fn select_next_phase(&self, candidates: &[PhaseId], now: f64) -> Result<PhaseId> {
        assert!(!candidates.is_empty(), "select_next_phase needs candidates");
        if candidates.len() == 1 {
            return Ok(candidates[0]);
        }
        let order = self.round_robin_order();
        let mut ranked: Vec<(usize, PhaseId)> = candidates
            .iter()
            .map(|&p| (order.iter().position(|&q| q == p).unwrap_or(usize::MAX), p))
            .collect();
        ranked.sort();
        let mut best: Option<(f64, PhaseId)> = None;
        for (_, p) in ranked {
            let d = self.tentative_delay(p, now)?;
            if best.is_none_or(|(b, _)| d < b - DELAY_TOL) {
                best = Some((d, p));
            }
        }
        Ok(best.map(|(_, p)| p).unwrap_or(candidates[0]))
    }

    fn round_robin_order(&self) -> Vec<PhaseId> {
        let phases = &self.plan.phases;
        let n = phases.len();
        let start = self
            .schedule
            .intervals
            .last()
            .and_then(|iv| self.plan.index_of(iv.phase).ok())
            .map_or(0, |i| i + 1);
        (0..n).map(|k| phases[(start + k) % n]).collect()
    }
}

// ---------------------------------------------------------------------------
// Actuated baseline

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatedParams {
    /// Gap (s) without detector presence that ends the green.
    pub unit_extension: f64,
    /// Length (ft) of the presence detector upstream of the stop bar.
    pub detector_length: f64,
}

impl Default for ActuatedParams {
    fn default() -> Self {
        ActuatedParams {
            unit_extension: 3.0,
            detector_length: 40.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ActuatedState {
    Idle,
    Green { last_presence: f64 },
    Clearing,
}

/// Fully actuated controller with stop-bar presence detection, locking calls
/// and plan-order phase rotation.
#[derive(Debug, Clone)]
pub struct ActuatedController {
    pub schedule: SignalSchedule,
    pub params: ActuatedParams,
    plan: PhasePlan,
    calls: Vec<bool>,
    state: ActuatedState,
}

impl ActuatedController {
    pub fn new(plan: PhasePlan, timing: SignalTimingBounds, params: ActuatedParams) -> Self {
        let n = plan.phases.len();
        ActuatedController {
            schedule: SignalSchedule::new(timing),
            params,
            plan,
            calls: vec![false; n],
            state: ActuatedState::Idle,
        }
    }

    /// Phase currently showing green, if any.
    pub fn green_phase(&self, now: f64) -> Option<PhaseId> {
        match self.state {
            ActuatedState::Green { .. } => self.schedule.current().filter(|iv| now >= iv.start).map(|iv| iv.phase),
            _ => None,
        }
    }

    /// Phase showing yellow at `now`, if any.
    pub fn yellow_phase(&self, now: f64) -> Option<PhaseId> {
        self.schedule
            .intervals
            .last()
            .filter(|iv| !self.schedule.open && now >= iv.green_end && now < iv.yellow_end())
            .map(|iv| iv.phase)
    }

    fn next_called(&self, after: Option<PhaseId>) -> Option<PhaseId> {
        let n = self.plan.phases.len();
        let start = after.and_then(|p| self.plan.index_of(p).ok()).map_or(0, |i| i + 1);
        (0..n)
            .map(|k| (start + k) % n)
            .find(|&i| self.calls[i])
            .map(|i| self.plan.phases[i])
    }

    fn start_green(&mut self, phase: PhaseId, now: f64) {
        self.schedule.switch_to(phase, now);
        if let Ok(i) = self.plan.index_of(phase) {
            self.calls[i] = false;
        }
        self.state = ActuatedState::Green { last_presence: now };
    }

    /// Advances the controller to `now` given per-lane detector presence.
    pub fn actuated_step(&mut self, presence: &[bool], now: f64) -> Option<SignalDecision> {
        let timing = self.schedule.timing;
        let green = self.green_phase(now);
        for (i, &p) in self.plan.phases.iter().enumerate() {
            if Some(p) == green {
                continue;
            }
            let lanes = self.plan.lanes_of(p);
            if lanes.iter().any(|&l| presence.get(l).copied().unwrap_or(false)) {
                self.calls[i] = true;
            }
        }
        match self.state {
            ActuatedState::Green { last_presence } => {
                let iv = *self.schedule.current().expect("green interval");
                let occupied = self
                    .plan
                    .lanes_of(iv.phase)
                    .iter()
                    .any(|&l| presence.get(l).copied().unwrap_or(false));
                let last_presence = if occupied { now } else { last_presence };
                let elapsed = now - iv.start;
                let gap_out = now - last_presence >= self.params.unit_extension && elapsed >= timing.g_min - FEAS_TOL;
                let max_out = elapsed >= timing.g_max - FEAS_TOL;
                if gap_out || max_out {
                    if let Some(last) = self.schedule.intervals.last_mut() {
                        last.green_end = now.min(last.start + timing.g_max).max(last.start + timing.g_min);
                    }
                    self.schedule.close();
                    self.state = ActuatedState::Clearing;
                    if max_out && occupied {
                        if let Ok(i) = self.plan.index_of(iv.phase) {
                            self.calls[i] = true;
                        }
                    }
                    let next = self.next_called(Some(iv.phase))?;
                    return Some(SignalDecision::Switch { next_phase: next });
                }
                self.state = ActuatedState::Green { last_presence };
                if let Some(last) = self.schedule.intervals.last_mut() {
                    last.green_end = (last_presence + self.params.unit_extension)
                        .min(last.start + timing.g_max)
                        .max(last.green_end)
                        .max(now);
                }
                Some(SignalDecision::Extend {
                    phase: iv.phase,
                    extend_to: self.schedule.intervals.last().map_or(now, |l| l.green_end),
                })
            }
            ActuatedState::Clearing => {
                let last = *self.schedule.intervals.last().expect("cleared interval");
                if now + FEAS_TOL < last.end() {
                    return None;
                }
                let next = self.next_called(Some(last.phase));
                match next {
                    Some(p) => {
                        self.start_green(p, now);
                        Some(SignalDecision::Switch { next_phase: p })
                    }
                    None => {
                        self.state = ActuatedState::Idle;
                        None
                    }
                }
            }
            ActuatedState::Idle => {
                let after = self.schedule.intervals.last().map(|iv| iv.phase);
                let p = self.next_called(after)?;
                self.start_green(p, now);
                Some(SignalDecision::Switch { next_phase: p })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::follower::{ArrivalState, VehicleType};
    use crate::scenario::Movement;
    use approx::assert_abs_diff_eq;

    fn scenario() -> Scenario {
        Scenario::default()
    }

    fn vehicle(id: usize, lane: LaneId, t0: f64, kind: VehicleType) -> VehicleRecord {
        let s = scenario();
        let spt = ArrivalState {
            t0,
            d0: s.lanes[lane].detection_range,
            v0: s.limits.straight.v_max,
            movement: s.lanes[lane].movement,
        };
        VehicleRecord::new(id, kind, lane, spt, s.attributes.av)
    }

    #[test]
    fn lag_time_examples() {
        let s = scenario();
        let mut lane = s.lanes[1].clone();
        assert_abs_diff_eq!(lag_time(&lane, &s.limits), 17.045, epsilon = 1e-3);
        lane.detection_range = 500.0;
        assert_abs_diff_eq!(lag_time(&lane, &s.limits), 8.523, epsilon = 1e-3);
        lane.detection_range = 0.0;
        assert_eq!(lag_time(&lane, &s.limits), 0.0);
        let iv = PhaseInterval { phase: 0, start: 0.0, green_end: 20.0, yellow: 1.5, all_red: 1.5 };
        assert_abs_diff_eq!(iv.arrival_interval_end(17.045), 4.455, epsilon = 1e-3);
    }

    #[test]
    fn schedule_switch_and_extend() {
        let s = scenario();
        let mut sched = SignalSchedule::new(s.timing);
        sched.switch_to(1, 10.0);
        assert_eq!(sched.current().unwrap().start, 10.0);
        assert_eq!(sched.current().unwrap().green_end, 14.5);
        assert!(sched.extend_for(30.0));
        assert_eq!(sched.current().unwrap().green_end, 30.0);
        assert!(sched.extend_for(500.0));
        assert_eq!(sched.current().unwrap().green_end, 70.0);
        sched.switch_to(2, 40.0);
        assert_eq!(sched.intervals[1].start, 73.0);
        assert_eq!(sched.history().len(), 1);
        let w = sched.windows_for_lane(&s.phase_plan, 1, 0.0);
        assert_eq!(w, vec![GreenWindow::new(10.0, 71.5)]);
        let w4 = sched.windows_for_lane(&s.phase_plan, 4, 0.0);
        assert_eq!(w4, vec![GreenWindow::new(73.0, 73.0 + 60.0 + 1.5)]);
    }

    #[test]
    fn single_av_on_current_green_extends() {
        let mut x = Intersection::new(&scenario());
        x.schedule.switch_to(1, 0.0);
        let d = x.on_arrival(vehicle(0, 1, 0.0, VehicleType::Av), 0.0).unwrap();
        match d {
            SignalDecision::Extend { phase, extend_to } => {
                assert_eq!(phase, 1);
                assert_abs_diff_eq!(extend_to, 1000.0 / 58.666_666_666_666_664, epsilon = 1e-6);
            }
            other => panic!("expected extend, got {other:?}"),
        }
    }

    #[test]
    fn conflicting_arrival_switches() {
        let mut x = Intersection::new(&scenario());
        x.schedule.switch_to(1, 0.0);
        let d = x.on_arrival(vehicle(0, 4, 1.0, VehicleType::Cv), 1.0).unwrap();
        assert_eq!(d, SignalDecision::Switch { next_phase: 2 });
        let v = &x.queues[4].vehicles[0];
        assert!(v.is_served());
        // The switch keeps the minimum green of the interrupted phase.
        assert_eq!(x.schedule.intervals[0].green_end, 4.5);
        assert_eq!(x.schedule.intervals[1].start, 7.5);
    }

    #[test]
    fn idle_signal_serves_a_lone_vehicle() {
        let mut x = Intersection::new(&scenario());
        let d = x.on_arrival(vehicle(0, 1, 5.0, VehicleType::Av), 5.0).unwrap();
        assert_eq!(d, SignalDecision::Switch { next_phase: 1 });
        let v = &x.queues[1].vehicles[0];
        assert_abs_diff_eq!(v.departure_time.unwrap(), 5.0 + 1000.0 / 58.666_666_666_666_664, epsilon = 1e-6);
    }

    fn held_intersection(lanes: &[(LaneId, usize)]) -> Intersection {
        // Nothing is scheduled, so every vehicle is held.
        let mut x = Intersection::new(&scenario());
        let mut id = 0;
        for &(lane, n) in lanes {
            for k in 0..n {
                let v = vehicle(id, lane, k as f64, VehicleType::Av);
                x.queues[lane].vehicles.push(v);
                id += 1;
            }
        }
        let params = x.params.clone();
        for q in &mut x.queues {
            dispatch_ato(q, &[], &params[q.lane], 0.0).unwrap();
        }
        x
    }

    #[test]
    fn heavier_phase_wins() {
        let x = held_intersection(&[(4, 5), (5, 1)]);
        assert_eq!(x.switch_candidates(), vec![2, 3]);
        assert_eq!(x.select_next_phase(&[2, 3], 0.0).unwrap(), 2);
        let y = held_intersection(&[(4, 1), (5, 5)]);
        assert_eq!(y.select_next_phase(&[2, 3], 0.0).unwrap(), 3);
    }

    #[test]
    fn symmetric_demand_breaks_ties_in_plan_order() {
        let x = held_intersection(&[(4, 1), (5, 1)]);
        assert_eq!(x.select_next_phase(&[3, 2], 0.0).unwrap(), 2);
        assert_eq!(x.select_next_phase(&[3], 0.0).unwrap(), 3);
        let mut y = held_intersection(&[(4, 1), (5, 1)]);
        y.schedule.switch_to(2, 0.0);
        y.schedule.close();
        assert_eq!(y.select_next_phase(&[2, 3], 0.0).unwrap(), 3);
    }

    #[test]
    fn actuated_extend_gap_out_max_out() {
        let s = scenario();
        let mut c = ActuatedController::new(s.phase_plan.clone(), s.timing, ActuatedParams::default());
        let mut presence = vec![false; 6];
        presence[1] = true;
        assert_eq!(c.actuated_step(&presence, 0.0), Some(SignalDecision::Switch { next_phase: 1 }));
        assert!(matches!(c.actuated_step(&presence, 0.5), Some(SignalDecision::Extend { phase: 1, .. })));
        // Continuous presence until the maximum green.
        let mut t = 0.5;
        let mut last = None;
        while t < 60.0 {
            t += 0.5;
            presence[4] = true;
            last = c.actuated_step(&presence, t);
            if matches!(last, Some(SignalDecision::Switch { .. })) {
                break;
            }
        }
        assert_eq!(t, 60.0);
        assert_eq!(last, Some(SignalDecision::Switch { next_phase: 2 }));
        assert_eq!(c.schedule.intervals[0].green(), 60.0);

        // Gap-out: phase 2 green, then no presence for the unit extension.
        let none = vec![false; 6];
        let mut t = 60.0;
        let mut started = None;
        while started.is_none() {
            t += 0.5;
            if let Some(SignalDecision::Switch { next_phase }) = c.actuated_step(&presence, t) {
                started = Some((next_phase, t));
            }
        }
        assert_eq!(started, Some((2, 63.0)));
        let mut t = 63.0;
        loop {
            t += 0.5;
            if let Some(SignalDecision::Switch { .. }) | None = c.actuated_step(&none, t) {
                break;
            }
        }
        assert_eq!(t, 67.5);
        assert_eq!(c.schedule.intervals[1].green(), 4.5);
        let _ = Movement::Left;
    }
}
