//! Three-stage trajectory kinematics and sampled trajectories.
//!
//! A three-stage plan changes speed from `v0` to `v2` at constant rate `a1`,
//! cruises at `v2`, then changes speed to `v3` at rate `a3`, arriving at the
//! stop bar (`d = 0`). Sampled trajectories are interpreted as piecewise
//! constant acceleration between consecutive points, which is exact for every
//! profile this crate produces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on stage durations and constraint slacks.
pub const FEAS_TOL: f64 = 1e-9;

/// Speed differences below this are treated as "no speed change".
const SPEED_EPS: f64 = 1e-12;

/// Default trajectory sampling step (s).
pub const DEFAULT_SAMPLE_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeStagePlan {
    pub d0: f64,
    pub v0: f64,
    pub v2: f64,
    pub v3: f64,
    pub a1: f64,
    pub a3: f64,
    pub t0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageDurations {
    pub dt1: f64,
    pub dt2: f64,
    pub dt3: f64,
}

impl StageDurations {
    pub fn total(&self) -> f64 {
        self.dt1 + self.dt2 + self.dt3
    }
}

impl ThreeStagePlan {
    pub fn stage1_distance(&self) -> f64 {
        if (self.v2 - self.v0).abs() < SPEED_EPS {
            0.0
        } else {
            (self.v2 * self.v2 - self.v0 * self.v0) / (2.0 * self.a1)
        }
    }

    pub fn stage3_distance(&self) -> f64 {
        if (self.v3 - self.v2).abs() < SPEED_EPS {
            0.0
        } else {
            (self.v3 * self.v3 - self.v2 * self.v2) / (2.0 * self.a3)
        }
    }
}

fn speed_change_time(from: f64, to: f64, accel: f64, stage: u8) -> Result<f64> {
    if (to - from).abs() < SPEED_EPS {
        return Ok(0.0);
    }
    if accel == 0.0 {
        return Err(Error::InfeasiblePlan(format!(
            "stage {stage} changes speed with zero acceleration"
        )));
    }
    let dt = (to - from) / accel;
    if dt < -FEAS_TOL {
        return Err(Error::InfeasiblePlan(format!(
            "stage {stage} acceleration has the wrong sign for its speed change"
        )));
    }
    Ok(dt.max(0.0))
}

/// Durations of the three stages.
pub fn stage_durations(plan: &ThreeStagePlan) -> Result<StageDurations> {
    if !(plan.d0 > 0.0) {
        return Err(Error::InfeasiblePlan("detection distance must be positive".into()));
    }
    if !(plan.v2 > 0.0) {
        return Err(Error::InfeasiblePlan("cruise speed must be positive".into()));
    }
    if plan.v0 < 0.0 || plan.v3 < 0.0 {
        return Err(Error::InfeasiblePlan("speeds must be non-negative".into()));
    }
    let dt1 = speed_change_time(plan.v0, plan.v2, plan.a1, 1)?;
    let dt3 = speed_change_time(plan.v2, plan.v3, plan.a3, 3)?;
    let cruise = plan.d0 - plan.stage1_distance() - plan.stage3_distance();
    let dt2 = cruise / plan.v2;
    if dt2 < -FEAS_TOL {
        return Err(Error::InfeasiblePlan(format!(
            "speed-change stages need {:.3} ft more than the available distance",
            -cruise
        )));
    }
    Ok(StageDurations {
        dt1,
        dt2: dt2.max(0.0),
        dt3,
    })
}

pub fn travel_time(plan: &ThreeStagePlan) -> Result<f64> {
    stage_durations(plan).map(|s| s.total())
}

/// Travel-time delay against an ideal traversal at the desired speed. May be
/// negative for a vehicle that beats `d0 / v_des`.
pub fn delay(travel_time: f64, d0: f64, v_des: f64) -> f64 {
    travel_time - d0 / v_des
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajPoint {
    pub t: f64,
    /// Distance to the stop bar (ft).
    pub d: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<TrajPoint>,
    pub departure_time: f64,
}

impl Trajectory {
    /// Builds a trajectory ending at the stop bar from its points.
    pub fn from_points(points: Vec<TrajPoint>) -> Self {
        let departure_time = points.last().map_or(0.0, |p| p.t);
        Trajectory {
            points,
            departure_time,
        }
    }

    pub fn first(&self) -> &TrajPoint {
        &self.points[0]
    }

    pub fn last(&self) -> &TrajPoint {
        self.points.last().expect("trajectory has points")
    }

    pub fn start_time(&self) -> f64 {
        self.first().t
    }

    pub fn departure_speed(&self) -> f64 {
        self.last().v
    }

    fn segment_index(&self, t: f64) -> usize {
        // Largest i with points[i].t <= t.
        let idx = self.points.partition_point(|p| p.t <= t);
        idx.saturating_sub(1).min(self.points.len() - 1)
    }

    /// State (distance, speed) at time `t`, or `None` outside the trajectory's
    /// time span.
    pub fn state_at(&self, t: f64) -> Option<(f64, f64)> {
        if t < self.start_time() - FEAS_TOL || t > self.departure_time + FEAS_TOL {
            return None;
        }
        Some(self.state_clamped(t))
    }

    /// State at `t`, holding the first point before the start and continuing
    /// at the final speed past the stop bar.
    pub fn state_clamped(&self, t: f64) -> (f64, f64) {
        let first = self.first();
        if t <= first.t {
            return (first.d, first.v);
        }
        let last = self.last();
        if t >= last.t {
            return (last.d - last.v * (t - last.t), last.v);
        }
        let i = self.segment_index(t);
        let p = &self.points[i];
        let q = &self.points[i + 1];
        let span = q.t - p.t;
        if span <= 0.0 {
            return (q.d, q.v);
        }
        let a = (q.v - p.v) / span;
        let h = t - p.t;
        (p.d - (p.v * h + 0.5 * a * h * h), p.v + a * h)
    }

    /// Earliest time the trajectory reaches distance `d` (ft from the bar).
    pub fn time_at_distance(&self, d: f64) -> Option<f64> {
        let first = self.first();
        if d > first.d + FEAS_TOL {
            return None;
        }
        if d >= first.d {
            return Some(first.t);
        }
        let last = self.last();
        if d < last.d {
            if last.v <= 0.0 {
                return None;
            }
            return Some(last.t + (last.d - d) / last.v);
        }
        // First index whose distance is <= d.
        let j = self.points.partition_point(|p| p.d > d);
        if j == 0 {
            return Some(first.t);
        }
        let p = &self.points[j - 1];
        let q = &self.points[j];
        let span = q.t - p.t;
        let travel = p.d - d;
        if span <= 0.0 || travel <= 0.0 {
            return Some(p.t);
        }
        let a = (q.v - p.v) / span;
        // Solve p.v*h + a/2*h^2 = travel for the smallest h in [0, span].
        let h = if a.abs() < 1e-12 {
            if p.v > 0.0 {
                travel / p.v
            } else {
                span
            }
        } else {
            let disc = (p.v * p.v + 2.0 * a * travel).max(0.0);
            (-p.v + disc.sqrt()) / a
        };
        Some(p.t + h.clamp(0.0, span))
    }

    /// Copy with every timestamp shifted by `dt`.
    pub fn lagged(&self, dt: f64) -> Trajectory {
        Trajectory {
            points: self
                .points
                .iter()
                .map(|p| TrajPoint { t: p.t + dt, ..*p })
                .collect(),
            departure_time: self.departure_time + dt,
        }
    }

    /// Resamples onto a regular grid of step `dt` starting at the first point,
    /// keeping every original point so the piecewise-constant-acceleration
    /// profile is preserved exactly.
    pub fn resampled(&self, dt: f64) -> Trajectory {
        let t0 = self.start_time();
        let end = self.departure_time;
        let mut times: Vec<f64> = Vec::new();
        let mut k = 0u64;
        loop {
            let t = t0 + k as f64 * dt;
            if t >= end - FEAS_TOL {
                break;
            }
            times.push(t);
            k += 1;
        }
        times.extend(self.points.iter().map(|p| p.t));
        times.sort_by(f64::total_cmp);
        times.dedup_by(|a, b| (*a - *b).abs() <= FEAS_TOL);
        let mut points: Vec<TrajPoint> = times
            .into_iter()
            .map(|t| {
                let (d, v) = self.state_clamped(t);
                TrajPoint { t, d, v }
            })
            .collect();
        if let Some(last) = points.last_mut() {
            *last = *self.last();
        }
        Trajectory {
            points,
            departure_time: end,
        }
    }

    /// Keeps this trajectory strictly before `tail` starts, then continues
    /// with `tail`.
    pub fn spliced(&self, tail: Trajectory) -> Trajectory {
        let cut = tail.start_time() - FEAS_TOL;
        let mut points: Vec<TrajPoint> = self.points.iter().copied().filter(|p| p.t < cut).collect();
        points.extend(tail.points);
        Trajectory {
            points,
            departure_time: tail.departure_time,
        }
    }

    /// Checks the structural invariants: strictly increasing time,
    /// non-increasing distance, non-negative speed, and a final point at the
    /// stop bar.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if self.points.is_empty() {
            return Err("empty trajectory".into());
        }
        for w in self.points.windows(2) {
            if w[1].t <= w[0].t {
                return Err(format!("time not increasing at t={}", w[1].t));
            }
            if w[1].d > w[0].d + 1e-9 {
                return Err(format!("distance increases at t={}", w[1].t));
            }
        }
        if let Some(p) = self.points.iter().find(|p| p.v < -1e-9) {
            return Err(format!("negative speed at t={}", p.t));
        }
        if self.last().d.abs() > 1e-6 {
            return Err(format!("final distance {} is not the stop bar", self.last().d));
        }
        if (self.last().t - self.departure_time).abs() > 1e-9 {
            return Err("departure time does not match the final point".into());
        }
        Ok(())
    }
}

/// State of a plan `tau` seconds after detection.
fn plan_state(plan: &ThreeStagePlan, s: &StageDurations, tau: f64) -> (f64, f64) {
    let tau = tau.clamp(0.0, s.total());
    let (travelled, v) = if tau <= s.dt1 {
        let a = if s.dt1 > 0.0 { plan.a1 } else { 0.0 };
        (plan.v0 * tau + 0.5 * a * tau * tau, plan.v0 + a * tau)
    } else if tau <= s.dt1 + s.dt2 {
        let h = tau - s.dt1;
        (plan.stage1_distance() + plan.v2 * h, plan.v2)
    } else {
        let h = tau - s.dt1 - s.dt2;
        let a = if s.dt3 > 0.0 { plan.a3 } else { 0.0 };
        (
            plan.stage1_distance() + plan.v2 * s.dt2 + plan.v2 * h + 0.5 * a * h * h,
            plan.v2 + a * h,
        )
    };
    ((plan.d0 - travelled).max(0.0), v.max(0.0))
}

/// Materializes a plan into points every `dt` seconds, plus the stage
/// boundaries and the departure point `(t0 + T, 0, v3)`.
pub fn sample_plan(plan: &ThreeStagePlan, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("sampling step must be positive".into()));
    }
    let s = stage_durations(plan)?;
    let total = s.total();
    let mut taus: Vec<f64> = Vec::with_capacity((total / dt) as usize + 4);
    let mut k = 0u64;
    loop {
        let tau = k as f64 * dt;
        if tau >= total - FEAS_TOL {
            break;
        }
        taus.push(tau);
        k += 1;
    }
    for boundary in [s.dt1, s.dt1 + s.dt2] {
        if boundary > FEAS_TOL && boundary < total - FEAS_TOL {
            taus.push(boundary);
        }
    }
    taus.sort_by(f64::total_cmp);
    taus.dedup_by(|a, b| (*a - *b).abs() <= FEAS_TOL);

    let mut points: Vec<TrajPoint> = taus
        .into_iter()
        .map(|tau| {
            let (d, v) = plan_state(plan, &s, tau);
            TrajPoint {
                t: plan.t0 + tau,
                d,
                v,
            }
        })
        .collect();
    points.push(TrajPoint {
        t: plan.t0 + total,
        d: 0.0,
        v: plan.v3,
    });
    if points.len() == 1 {
        // Zero-length plan cannot happen with d0 > 0, but keep the start point.
        points.insert(0, TrajPoint { t: plan.t0, d: plan.d0, v: plan.v0 });
    }
    Ok(Trajectory {
        points,
        departure_time: plan.t0 + total,
    })
}

/// Shifts every timestamp by `dt_lag`.
pub fn lag_trajectory(traj: &Trajectory, dt_lag: f64) -> Trajectory {
    traj.lagged(dt_lag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn accel_plan() -> ThreeStagePlan {
        ThreeStagePlan {
            d0: 1000.0,
            v0: 49.867,
            v2: 58.667,
            v3: 58.667,
            a1: 10.0,
            a3: -15.0,
            t0: 0.0,
        }
    }

    fn constant_plan() -> ThreeStagePlan {
        ThreeStagePlan {
            d0: 1000.0,
            v0: 58.667,
            v2: 58.667,
            v3: 58.667,
            a1: 10.0,
            a3: -15.0,
            t0: 3.0,
        }
    }

    #[test]
    fn stage_durations_of_acceleration_plan() {
        let s = stage_durations(&accel_plan()).unwrap();
        assert_abs_diff_eq!(s.dt1, 0.88, epsilon = 1e-9);
        assert_abs_diff_eq!(s.dt2, 16.232, epsilon = 1e-3);
        assert_eq!(s.dt3, 0.0);
        assert_abs_diff_eq!(accel_plan().stage1_distance(), 47.75, epsilon = 1e-2);
    }

    #[test]
    fn constant_speed_identity() {
        let s = stage_durations(&constant_plan()).unwrap();
        assert_eq!((s.dt1, s.dt3), (0.0, 0.0));
        assert_abs_diff_eq!(s.dt2, 17.045, epsilon = 1e-3);
        assert_abs_diff_eq!(travel_time(&constant_plan()).unwrap(), 1000.0 / 58.667, epsilon = 1e-12);
    }

    #[test]
    fn short_range_full_stop_is_infeasible() {
        let plan = ThreeStagePlan {
            d0: 50.0,
            v3: 0.0,
            ..constant_plan()
        };
        assert!(matches!(stage_durations(&plan), Err(Error::InfeasiblePlan(_))));
    }

    #[test]
    fn wrong_sign_acceleration_is_infeasible() {
        let plan = ThreeStagePlan { a1: -10.0, ..accel_plan() };
        assert!(stage_durations(&plan).is_err());
    }

    #[test]
    fn travel_time_examples() {
        assert_abs_diff_eq!(travel_time(&accel_plan()).unwrap(), 17.112, epsilon = 1e-3);
        let decel = ThreeStagePlan { v3: 44.0, ..constant_plan() };
        let s = stage_durations(&decel).unwrap();
        assert_abs_diff_eq!(s.dt3, 0.978, epsilon = 1e-3);
        assert_abs_diff_eq!(decel.stage3_distance(), 50.19, epsilon = 1e-2);
        // (1000 - 50.19) / 58.667
        assert_abs_diff_eq!(s.dt2, 16.190, epsilon = 1e-3);
        assert_abs_diff_eq!(s.total(), 17.168, epsilon = 1e-3);
    }

    #[test]
    fn delay_examples() {
        assert_abs_diff_eq!(delay(17.112, 1000.0, 58.667), 0.0665, epsilon = 2e-4);
        assert_abs_diff_eq!(delay(1000.0 / 58.667, 1000.0, 58.667), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(delay(20.0, 1000.0, 58.667), 2.955, epsilon = 1e-3);
    }

    #[test]
    fn sampling_constant_plan() {
        let traj = sample_plan(&constant_plan(), 0.1).unwrap();
        traj.check_invariants().unwrap();
        assert!(traj.points.iter().all(|p| (p.v - 58.667).abs() < 1e-12));
        let steps: Vec<f64> = traj.points.windows(2).map(|w| w[0].d - w[1].d).collect();
        for s in &steps[..steps.len() - 1] {
            assert_abs_diff_eq!(*s, 5.8667, epsilon = 1e-9);
        }
        assert_eq!(traj.first().d, 1000.0);
    }

    #[test]
    fn sampling_keeps_stage_boundary() {
        let traj = sample_plan(&accel_plan(), 0.1).unwrap();
        traj.check_invariants().unwrap();
        // 172 grid points on [0, 17.1116), the stage boundary at 0.88, and
        // the departure point.
        assert_eq!(traj.points.len(), 174);
        let b = traj
            .points
            .iter()
            .find(|p| (p.t - 0.88).abs() < 1e-9)
            .expect("boundary point");
        assert_abs_diff_eq!(b.v, 58.667, epsilon = 1e-9);
        assert_abs_diff_eq!(b.d, 952.25, epsilon = 1e-2);
        let last = traj.last();
        assert_eq!((last.d, last.v), (0.0, 58.667));
        assert_abs_diff_eq!(last.t, 17.1116, epsilon = 1e-3);
    }

    #[test]
    fn coarse_step_keeps_endpoints() {
        let traj = sample_plan(&constant_plan(), 100.0).unwrap();
        assert_eq!(traj.points.len(), 2);
        assert_eq!(traj.first().t, 3.0);
        assert_eq!(traj.last().d, 0.0);
    }

    #[test]
    fn lagging() {
        let traj = sample_plan(&accel_plan(), 0.1).unwrap();
        assert_eq!(lag_trajectory(&traj, 0.0), traj);
        let lagged = lag_trajectory(&traj, 1.5);
        assert_abs_diff_eq!(lagged.departure_time - traj.departure_time, 1.5, epsilon = 1e-12);
        let twice = lag_trajectory(&lag_trajectory(&traj, 1.5), 0.5);
        let once = lag_trajectory(&traj, 2.0);
        for (a, b) in twice.points.iter().zip(&once.points) {
            assert_abs_diff_eq!(a.t, b.t, epsilon = 1e-12);
            assert_eq!((a.d, a.v), (b.d, b.v));
        }
    }

    #[test]
    fn interpolation_and_inverse() {
        let traj = sample_plan(&accel_plan(), 0.5).unwrap();
        let (d, v) = traj.state_at(0.88).unwrap();
        assert_abs_diff_eq!(d, 952.25, epsilon = 1e-2);
        assert_abs_diff_eq!(v, 58.667, epsilon = 1e-9);
        let t = traj.time_at_distance(d).unwrap();
        assert_abs_diff_eq!(t, 0.88, epsilon = 1e-6);
        assert!(traj.state_at(-1.0).is_none());
        let (d_after, _) = traj.state_clamped(traj.departure_time + 1.0);
        assert_abs_diff_eq!(d_after, -58.667, epsilon = 1e-9);
    }

    fn arb_plan() -> impl Strategy<Value = ThreeStagePlan> {
        (200.0f64..3000.0, 45.0f64..65.0, 5.0f64..58.667, 0.0f64..58.667, 1.0f64..10.0, 1.0f64..15.0)
            .prop_map(|(d0, v0, v2, v3, acc, dec)| ThreeStagePlan {
                d0,
                v0,
                v2,
                v3,
                a1: if v2 >= v0 { acc } else { -dec },
                a3: if v3 >= v2 { acc } else { -dec },
                t0: 10.0,
            })
    }

    proptest! {
        #[test]
        fn distance_closure(plan in arb_plan()) {
            if let Ok(s) = stage_durations(&plan) {
                let total = plan.stage1_distance() + plan.v2 * s.dt2 + plan.stage3_distance();
                prop_assert!((total - plan.d0).abs() < 1e-6);
            }
        }

        #[test]
        fn sampled_profile_is_consistent(plan in arb_plan()) {
            if let Ok(traj) = sample_plan(&plan, 0.1) {
                prop_assert!(traj.check_invariants().is_ok());
                let s = stage_durations(&plan).unwrap();
                for w in traj.points.windows(2) {
                    let h = w[1].t - w[0].t;
                    let mid = 0.5 * (w[0].t + w[1].t) - plan.t0;
                    let slope = if mid < s.dt1 { plan.a1 }
                        else if mid < s.dt1 + s.dt2 { 0.0 }
                        else { plan.a3 };
                    prop_assert!((w[1].v - w[0].v - slope * h).abs() < 1e-9);
                    let trapezoid = 0.5 * (w[0].v + w[1].v) * h;
                    prop_assert!(((w[0].d - w[1].d) - trapezoid).abs() < 1e-6);
                }
            }
        }

        #[test]
        fn delay_is_increasing(t in 0.0f64..100.0, extra in 1e-6f64..10.0, d0 in 1.0f64..3000.0, v in 1.0f64..70.0) {
            prop_assert!(delay(t + extra, d0, v) > delay(t, d0, v));
        }

        #[test]
        fn lag_preserves_headways(plan in arb_plan(), lag in 0.0f64..30.0) {
            if let Ok(traj) = sample_plan(&plan, 0.1) {
                let lagged = lag_trajectory(&traj, lag);
                for (a, b) in traj.points.windows(2).zip(lagged.points.windows(2)) {
                    prop_assert!(((a[1].t - a[0].t) - (b[1].t - b[0].t)).abs() < 1e-9);
                }
            }
        }
    }
}
