//! Exact lead-vehicle trajectory optimization.
//!
//! The problem minimizes travel-time delay over `(v2, v3, a1, a3)` subject to
//! box bounds, non-negative stage durations and a departure inside a green
//! (plus yellow) window. The objective has no stationary point inside the
//! feasible region, so the optimum lies on its boundary. [`solve_lto`] walks
//! that boundary: each variable in turn is freed while the other three sit at
//! every combination of their box limits, and the free variable takes every
//! value at which some constraint becomes active (box limit, zero-length
//! stage, window edge). Every such value is a root of an equation of degree
//! at most two, so the search is closed-form.
//!
//! [`brute_force_lto`] is an independent grid oracle used for verification.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{delay, stage_durations, ThreeStagePlan, FEAS_TOL};

/// Lower box bound on the cruise speed (ft/s). The three-stage form cannot
/// represent a standing stop, so a vehicle creeps at this speed at worst.
pub const MIN_CRUISE_SPEED: f64 = 1.0;

/// Tolerance when comparing delays.
pub const DELAY_TOL: f64 = 1e-6;

const SPEED_EPS: f64 = 1e-12;

/// Absolute interval during which departure at the stop bar is allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenWindow {
    pub start: f64,
    pub end: f64,
}

impl GreenWindow {
    pub fn new(start: f64, end: f64) -> Self {
        GreenWindow { start, end }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start - FEAS_TOL && t <= self.end + FEAS_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtoProblem {
    pub d0: f64,
    pub v0: f64,
    pub t0: f64,
    pub v_max: f64,
    pub v_cross: f64,
    pub a_max_dec: f64,
    pub a_max_acc: f64,
    pub v_des: f64,
    pub green_windows: Vec<GreenWindow>,
}

impl LtoProblem {
    pub fn validate(&self) -> Result<()> {
        if !(self.d0 > 0.0) {
            return Err(Error::InvalidArgument("d0 must be positive".into()));
        }
        if !(self.v0 >= 0.0) {
            return Err(Error::InvalidArgument("v0 must be non-negative".into()));
        }
        if !(self.v_max >= MIN_CRUISE_SPEED && self.v_cross > 0.0) {
            return Err(Error::InvalidArgument("speed limits must be positive".into()));
        }
        if !(self.a_max_dec < 0.0 && self.a_max_acc > 0.0) {
            return Err(Error::InvalidArgument("require a_max_dec < 0 < a_max_acc".into()));
        }
        if !(self.v_des > 0.0) {
            return Err(Error::InvalidArgument("v_des must be positive".into()));
        }
        for w in &self.green_windows {
            if !(w.start <= w.end) {
                return Err(Error::InvalidArgument("green window ends before it starts".into()));
            }
        }
        for pair in self.green_windows.windows(2) {
            if pair[1].start < pair[0].end {
                return Err(Error::InvalidArgument(
                    "green windows must be ordered and non-overlapping".into(),
                ));
            }
        }
        Ok(())
    }

    fn v2_bounds(&self) -> (f64, f64) {
        (MIN_CRUISE_SPEED, self.v_max)
    }

    fn v3_bounds(&self) -> (f64, f64) {
        (0.0, self.v_cross)
    }

    fn accel_bounds(&self) -> (f64, f64) {
        (self.a_max_dec, self.a_max_acc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LtoSolution {
    pub plan: ThreeStagePlan,
    pub delay: f64,
    pub window_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Var {
    V2,
    V3,
    A1,
    A3,
}

fn within(x: f64, (lo, hi): (f64, f64)) -> Option<f64> {
    if x < lo - FEAS_TOL || x > hi + FEAS_TOL || !x.is_finite() {
        None
    } else {
        Some(x.clamp(lo, hi))
    }
}

/// Builds a plan from decision values and checks every constraint against
/// `window`. Accelerations of zero-length stages are normalized to zero.
fn evaluate(
    p: &LtoProblem,
    window: &GreenWindow,
    v2: f64,
    v3: f64,
    a1: f64,
    a3: f64,
) -> Option<(ThreeStagePlan, f64)> {
    let v2 = within(v2, p.v2_bounds())?;
    let v3 = within(v3, p.v3_bounds())?;
    let a1 = within(a1, p.accel_bounds())?;
    let a3 = within(a3, p.accel_bounds())?;
    let plan = ThreeStagePlan {
        d0: p.d0,
        v0: p.v0,
        v2,
        v3,
        a1: if (v2 - p.v0).abs() < SPEED_EPS { 0.0 } else { a1 },
        a3: if (v3 - v2).abs() < SPEED_EPS { 0.0 } else { a3 },
        t0: p.t0,
    };
    let t = stage_durations(&plan).ok()?.total();
    window.contains(p.t0 + t).then_some((plan, t))
}

fn push_quadratic_roots(a: f64, b: f64, c: f64, out: &mut Vec<f64>) {
    if a.abs() < 1e-15 {
        if b.abs() > 1e-15 {
            out.push(-c / b);
        }
        return;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return;
    }
    let sq = disc.sqrt();
    // Numerically stable pair.
    let q = -0.5 * (b + b.signum() * sq);
    if q != 0.0 {
        out.push(q / a);
        out.push(c / q);
    } else {
        out.push(-b / (2.0 * a));
    }
}

/// Values of the free variable at which some constraint becomes active, with
/// the other three fixed. `targets` are the travel times pinned to the window
/// edges.
fn critical_values(
    p: &LtoProblem,
    var: Var,
    fixed: [f64; 3],
    targets: [f64; 2],
    out: &mut Vec<f64>,
) {
    out.clear();
    let (d0, v0) = (p.d0, p.v0);
    match var {
        Var::V2 => {
            let [v3, a1, a3] = fixed;
            let (lo, hi) = p.v2_bounds();
            out.extend([lo, hi, v0, v3]);
            // T(v2) * v2 = A v2^2 + B v2 + C
            let a = 0.5 * (1.0 / a1 - 1.0 / a3);
            let b = v3 / a3 - v0 / a1;
            let c = d0 + v0 * v0 / (2.0 * a1) - v3 * v3 / (2.0 * a3);
            // Zero cruise length coincides with the stationary point of T.
            if a != 0.0 && c / a > 0.0 {
                out.push((c / a).sqrt());
            }
            for t in targets {
                push_quadratic_roots(a, b - t, c, out);
            }
        }
        Var::V3 => {
            let [v2, a1, a3] = fixed;
            let (lo, hi) = p.v3_bounds();
            out.extend([lo, hi, v2]);
            let dist1 = if (v2 - v0).abs() < SPEED_EPS {
                0.0
            } else {
                (v2 * v2 - v0 * v0) / (2.0 * a1)
            };
            let dt1 = if (v2 - v0).abs() < SPEED_EPS { 0.0 } else { (v2 - v0) / a1 };
            let sq = v2 * v2 + 2.0 * a3 * (d0 - dist1);
            if sq >= 0.0 {
                out.push(sq.sqrt());
            }
            // T = K - (v3 - v2)^2 / (2 a3 v2)
            let k = dt1 + (d0 - dist1) / v2;
            for t in targets {
                let rhs = 2.0 * a3 * v2 * (k - t);
                if rhs >= 0.0 {
                    let r = rhs.sqrt();
                    out.push(v2 + r);
                    out.push(v2 - r);
                }
            }
        }
        Var::A1 => {
            let [v2, v3, a3] = fixed;
            let (lo, hi) = p.accel_bounds();
            out.extend([lo, hi]);
            let (dist3, dt3) = if (v3 - v2).abs() < SPEED_EPS {
                (0.0, 0.0)
            } else {
                ((v3 * v3 - v2 * v2) / (2.0 * a3), (v3 - v2) / a3)
            };
            let room = d0 - dist3;
            if room > 0.0 {
                out.push((v2 * v2 - v0 * v0) / (2.0 * room));
            }
            // T = K + (v2 - v0)^2 / (2 v2 a1)
            let k = room / v2 + dt3;
            for t in targets {
                if (t - k).abs() > 1e-15 {
                    out.push((v2 - v0).powi(2) / (2.0 * v2 * (t - k)));
                }
            }
        }
        Var::A3 => {
            let [v2, v3, a1] = fixed;
            let (lo, hi) = p.accel_bounds();
            out.extend([lo, hi]);
            let (dist1, dt1) = if (v2 - v0).abs() < SPEED_EPS {
                (0.0, 0.0)
            } else {
                ((v2 * v2 - v0 * v0) / (2.0 * a1), (v2 - v0) / a1)
            };
            let room = d0 - dist1;
            if room > 0.0 {
                out.push((v3 * v3 - v2 * v2) / (2.0 * room));
            }
            // T = K - (v3 - v2)^2 / (2 v2 a3)
            let k = dt1 + room / v2;
            for t in targets {
                if (k - t).abs() > 1e-15 {
                    out.push((v3 - v2).powi(2) / (2.0 * v2 * (k - t)));
                }
            }
        }
    }
}

/// Orders candidates by delay, then by the tie-break: higher discharge speed,
/// higher cruise speed, gentler first stage, gentler last stage.
fn compare_candidates(a: &(ThreeStagePlan, f64), b: &(ThreeStagePlan, f64)) -> Ordering {
    if (a.1 - b.1).abs() > DELAY_TOL {
        return a.1.total_cmp(&b.1);
    }
    b.0.v3
        .total_cmp(&a.0.v3)
        .then(b.0.v2.total_cmp(&a.0.v2))
        .then(a.0.a1.abs().total_cmp(&b.0.a1.abs()))
        .then(a.0.a3.abs().total_cmp(&b.0.a3.abs()))
}

/// Every feasible plan on the boundary search set for one window.
pub fn boundary_candidates(p: &LtoProblem, window: &GreenWindow) -> Vec<ThreeStagePlan> {
    boundary_candidates_with_time(p, window)
        .into_iter()
        .map(|(plan, _)| plan)
        .collect()
}

fn boundary_candidates_with_time(p: &LtoProblem, window: &GreenWindow) -> Vec<(ThreeStagePlan, f64)> {
    let targets = [window.start - p.t0, window.end - p.t0];
    let (v2lo, v2hi) = p.v2_bounds();
    let (v3lo, v3hi) = p.v3_bounds();
    let (alo, ahi) = p.accel_bounds();
    let mut values = Vec::with_capacity(8);
    let mut out = Vec::new();

    for var in [Var::V2, Var::V3, Var::A1, Var::A3] {
        // The three non-selected variables in a fixed order, each at a limit.
        let limits: [(f64, f64); 3] = match var {
            Var::V2 => [(v3lo, v3hi), (alo, ahi), (alo, ahi)],
            Var::V3 => [(v2lo, v2hi), (alo, ahi), (alo, ahi)],
            Var::A1 => [(v2lo, v2hi), (v3lo, v3hi), (alo, ahi)],
            Var::A3 => [(v2lo, v2hi), (v3lo, v3hi), (alo, ahi)],
        };
        for mask in 0..8u8 {
            let pick = |i: usize| {
                if mask & (1 << i) == 0 {
                    limits[i].0
                } else {
                    limits[i].1
                }
            };
            let fixed = [pick(0), pick(1), pick(2)];
            critical_values(p, var, fixed, targets, &mut values);
            for &x in &values {
                let (v2, v3, a1, a3) = match var {
                    Var::V2 => (x, fixed[0], fixed[1], fixed[2]),
                    Var::V3 => (fixed[0], x, fixed[1], fixed[2]),
                    Var::A1 => (fixed[0], fixed[1], x, fixed[2]),
                    Var::A3 => (fixed[0], fixed[1], fixed[2], x),
                };
                if let Some(c) = evaluate(p, window, v2, v3, a1, a3) {
                    out.push(c);
                }
            }
        }
    }
    out
}

/// Minimum-delay plan in the earliest green window that admits one.
pub fn solve_lto(p: &LtoProblem) -> Result<LtoSolution> {
    p.validate()?;
    for (index, window) in p.green_windows.iter().enumerate() {
        if window.end < p.t0 {
            continue;
        }
        let best = boundary_candidates_with_time(p, window)
            .into_iter()
            .map(|(plan, t)| (plan, delay(t, p.d0, p.v_des)))
            .min_by(compare_candidates);
        if let Some((plan, d)) = best {
            return Ok(LtoSolution {
                plan,
                delay: d,
                window_index: index,
            });
        }
    }
    Err(Error::Infeasible)
}

/// Result of the exhaustive grid search, including the best point lying
/// strictly inside every box and strictly inside the window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSearch {
    pub best: Option<LtoSolution>,
    pub best_interior_delay: Option<f64>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Exhaustive grid over `(v2, v3, a1, a3)` with `n_grid` points per axis,
/// plus, for every `(v3, a1, a3)` grid triple, the cruise speeds that put the
/// departure exactly on a window edge.
pub fn grid_search_lto(p: &LtoProblem, n_grid: usize) -> Result<GridSearch> {
    p.validate()?;
    if n_grid < 2 {
        return Err(Error::InvalidArgument("n_grid must be at least 2".into()));
    }
    let (v2lo, v2hi) = p.v2_bounds();
    let (v3lo, v3hi) = p.v3_bounds();
    let (alo, ahi) = p.accel_bounds();
    let v2s = linspace(v2lo, v2hi, n_grid);
    let v3s = linspace(v3lo, v3hi, n_grid);
    let accels = linspace(alo, ahi, n_grid);
    let interior = |i: usize| i > 0 && i + 1 < n_grid;
    let (d0, v0, t0) = (p.d0, p.v0, p.t0);

    for (index, window) in p.green_windows.iter().enumerate() {
        if window.end < t0 {
            continue;
        }
        let mut best: Option<(ThreeStagePlan, f64)> = None;
        let mut best_interior: Option<f64> = None;
        let consider = |plan: ThreeStagePlan, d: f64, best: &mut Option<(ThreeStagePlan, f64)>| {
            let cand = (plan, d);
            if best.as_ref().is_none_or(|b| compare_candidates(&cand, b) == Ordering::Less) {
                *best = Some(cand);
            }
        };

        for (i2, &v2) in v2s.iter().enumerate() {
            let dv1 = v2 - v0;
            for (i1, &a1) in accels.iter().enumerate() {
                let (dt1, dist1) = if dv1.abs() < SPEED_EPS {
                    if i1 > 0 {
                        continue;
                    }
                    (0.0, 0.0)
                } else {
                    if a1 == 0.0 || dv1 / a1 < -FEAS_TOL {
                        continue;
                    }
                    (dv1 / a1, dv1 * (v2 + v0) / (2.0 * a1))
                };
                if dist1 > d0 + FEAS_TOL {
                    continue;
                }
                for (i3, &v3) in v3s.iter().enumerate() {
                    let dv3 = v3 - v2;
                    for (i4, &a3) in accels.iter().enumerate() {
                        let (dt3, dist3) = if dv3.abs() < SPEED_EPS {
                            if i4 > 0 {
                                continue;
                            }
                            (0.0, 0.0)
                        } else {
                            if a3 == 0.0 || dv3 / a3 < -FEAS_TOL {
                                continue;
                            }
                            (dv3 / a3, dv3 * (v3 + v2) / (2.0 * a3))
                        };
                        let rem = d0 - dist1 - dist3;
                        if rem < -FEAS_TOL * v2 {
                            continue;
                        }
                        let t = dt1 + rem.max(0.0) / v2 + dt3;
                        let dep = t0 + t;
                        if !window.contains(dep) {
                            continue;
                        }
                        let d = delay(t, d0, p.v_des);
                        let plan = ThreeStagePlan {
                            d0,
                            v0,
                            v2,
                            v3,
                            a1: if dv1.abs() < SPEED_EPS { 0.0 } else { a1 },
                            a3: if dv3.abs() < SPEED_EPS { 0.0 } else { a3 },
                            t0,
                        };
                        consider(plan, d, &mut best);
                        if interior(i2)
                            && interior(i1)
                            && interior(i3)
                            && interior(i4)
                            && dep > window.start
                            && dep < window.end
                        {
                            best_interior = Some(best_interior.map_or(d, |b: f64| b.min(d)));
                        }
                    }
                }
            }
        }

        // Window-edge travel times, solved exactly for the cruise speed.
        let targets = [window.start - t0, window.end - t0];
        let mut roots = Vec::with_capacity(4);
        for &v3 in &v3s {
            for &a1 in &accels {
                for &a3 in &accels {
                    if a1 == 0.0 || a3 == 0.0 {
                        continue;
                    }
                    let a = 0.5 * (1.0 / a1 - 1.0 / a3);
                    let b = v3 / a3 - v0 / a1;
                    let c = d0 + v0 * v0 / (2.0 * a1) - v3 * v3 / (2.0 * a3);
                    roots.clear();
                    for t in targets {
                        push_quadratic_roots(a, b - t, c, &mut roots);
                    }
                    for &v2 in &roots {
                        if let Some((plan, t)) = evaluate(p, window, v2, v3, a1, a3) {
                            consider(plan, delay(t, d0, p.v_des), &mut best);
                        }
                    }
                }
            }
        }

        if let Some((plan, d)) = best {
            return Ok(GridSearch {
                best: Some(LtoSolution {
                    plan,
                    delay: d,
                    window_index: index,
                }),
                best_interior_delay: best_interior,
            });
        }
    }
    Ok(GridSearch {
        best: None,
        best_interior_delay: None,
    })
}

/// Best feasible grid point (see [`grid_search_lto`]).
pub fn brute_force_lto(p: &LtoProblem, n_grid: usize) -> Result<LtoSolution> {
    grid_search_lto(p, n_grid)?.best.ok_or(Error::Infeasible)
}

/// Checks every constraint of the lead-vehicle program for `sol`.
pub fn check_solution(p: &LtoProblem, sol: &LtoSolution) -> std::result::Result<(), String> {
    let plan = &sol.plan;
    let s = stage_durations(plan).map_err(|e| e.to_string())?;
    let t = s.total();
    let window = p
        .green_windows
        .get(sol.window_index)
        .ok_or("window index out of range")?;
    if !window.contains(p.t0 + t) {
        return Err(format!("departure {} outside window {:?}", p.t0 + t, window));
    }
    if plan.v2 > p.v_max + FEAS_TOL {
        return Err(format!("v2 {} exceeds v_max", plan.v2));
    }
    if plan.v3 > p.v_cross + FEAS_TOL {
        return Err(format!("v3 {} exceeds v_cross", plan.v3));
    }
    for (name, a) in [("a1", plan.a1), ("a3", plan.a3)] {
        if a < p.a_max_dec - FEAS_TOL || a > p.a_max_acc + FEAS_TOL {
            return Err(format!("{name} {a} outside acceleration bounds"));
        }
    }
    if (delay(t, p.d0, p.v_des) - sol.delay).abs() > 1e-9 {
        return Err("reported delay does not match the plan".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const VMAX: f64 = 58.666_666_666_666_664;

    fn problem(window: (f64, f64)) -> LtoProblem {
        LtoProblem {
            d0: 1000.0,
            v0: VMAX,
            t0: 0.0,
            v_max: VMAX,
            v_cross: VMAX,
            a_max_dec: -15.0,
            a_max_acc: 10.0,
            v_des: VMAX,
            green_windows: vec![GreenWindow::new(window.0, window.1)],
        }
    }

    #[test]
    fn unconstrained_vehicle_keeps_speed() {
        let p = problem((0.0, 60.0));
        let sol = solve_lto(&p).unwrap();
        assert_abs_diff_eq!(sol.delay, 0.0, epsilon = 1e-9);
        assert_eq!(sol.plan.v2, VMAX);
        assert_eq!(sol.plan.v3, VMAX);
        check_solution(&p, &sol).unwrap();
        assert!(boundary_candidates(&p, &p.green_windows[0])
            .iter()
            .any(|c| c.v2 == VMAX && c.v3 == VMAX));
    }

    #[test]
    fn red_ahead_departs_at_green_start() {
        let p = problem((25.0, 85.0));
        let sol = solve_lto(&p).unwrap();
        assert_abs_diff_eq!(sol.delay, 25.0 - 1000.0 / VMAX, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.delay, 7.955, epsilon = 1e-3);
        check_solution(&p, &sol).unwrap();
        let has_edge = boundary_candidates(&p, &p.green_windows[0])
            .iter()
            .any(|c| (stage_durations(c).unwrap().total() - 25.0).abs() < 1e-9);
        assert!(has_edge);
    }

    #[test]
    fn past_window_is_infeasible() {
        let p = problem((0.0, 10.0));
        assert_eq!(solve_lto(&p), Err(Error::Infeasible));
        assert_eq!(brute_force_lto(&p, 10), Err(Error::Infeasible));
    }

    #[test]
    fn earliest_feasible_window_wins() {
        let mut p = problem((0.0, 10.0));
        p.green_windows.push(GreenWindow::new(30.0, 40.0));
        p.green_windows.push(GreenWindow::new(50.0, 90.0));
        let sol = solve_lto(&p).unwrap();
        assert_eq!(sol.window_index, 1);
        assert_abs_diff_eq!(sol.plan.t0 + stage_durations(&sol.plan).unwrap().total(), 30.0, epsilon = 1e-6);
    }

    #[test]
    fn oracle_examples() {
        let open = problem((0.0, 60.0));
        assert_abs_diff_eq!(brute_force_lto(&open, 20).unwrap().delay, 0.0, epsilon = 1e-9);
        let red = problem((25.0, 85.0));
        let exact = solve_lto(&red).unwrap().delay;
        let grid = brute_force_lto(&red, 50).unwrap().delay;
        assert!((grid - exact).abs() < 0.1, "grid {grid} exact {exact}");
        assert!(exact <= grid + DELAY_TOL);
    }

    #[test]
    fn rejects_invalid_problems() {
        let mut p = problem((0.0, 60.0));
        p.green_windows.push(GreenWindow::new(30.0, 70.0));
        assert!(matches!(solve_lto(&p), Err(Error::InvalidArgument(_))));
        assert!(brute_force_lto(&problem((0.0, 1.0)), 1).is_err());
    }

    #[test]
    fn fast_arrival_decelerates_to_the_limit() {
        let mut p = problem((0.0, 100.0));
        p.v0 = 64.533;
        p.v_cross = 44.0;
        let sol = solve_lto(&p).unwrap();
        check_solution(&p, &sol).unwrap();
        assert_abs_diff_eq!(sol.plan.v2, VMAX, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.plan.v3, 44.0, epsilon = 1e-9);
        // Gentlest first-stage deceleration that still leaves room to slow down.
        assert_eq!(sol.plan.a3, -15.0);
        assert!(sol.plan.a1 > -15.0 && sol.plan.a1 < 0.0);
        assert_abs_diff_eq!(stage_durations(&sol.plan).unwrap().dt2, 0.0, epsilon = 1e-9);
    }

    fn arb_problem() -> impl Strategy<Value = LtoProblem> {
        (200.0f64..3000.0, 49.867f64..64.533, -10.0f64..60.0, 3.0f64..45.0, prop::bool::ANY)
            .prop_map(|(d0, v0, start, len, turning)| LtoProblem {
                d0,
                v0,
                t0: 0.0,
                v_max: VMAX,
                v_cross: if turning { 44.0 } else { VMAX },
                a_max_dec: -15.0,
                a_max_acc: 10.0,
                v_des: VMAX,
                green_windows: vec![GreenWindow::new(start, start + len)],
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn solutions_are_sound_and_beat_the_grid(p in arb_problem()) {
            let exact = solve_lto(&p);
            let grid = grid_search_lto(&p, 20).unwrap();
            match (&exact, &grid.best) {
                (Ok(sol), Some(g)) => {
                    prop_assert!(check_solution(&p, sol).is_ok());
                    prop_assert!(sol.delay <= g.delay + DELAY_TOL);
                    if let Some(inner) = grid.best_interior_delay {
                        prop_assert!(sol.delay <= inner + DELAY_TOL);
                    }
                }
                (Ok(sol), None) => prop_assert!(check_solution(&p, sol).is_ok()),
                (Err(_), Some(g)) => prop_assert!(false, "grid found {:?}", g),
                (Err(_), None) => {}
            }
        }

        #[test]
        fn widening_never_hurts(p in arb_problem(), extra_start in 0.0f64..10.0, extra_end in 0.0f64..10.0) {
            let mut wide = p.clone();
            wide.green_windows[0].start -= extra_start;
            wide.green_windows[0].end += extra_end;
            if let Ok(narrow) = solve_lto(&p) {
                let widened = solve_lto(&wide).unwrap();
                prop_assert!(widened.delay <= narrow.delay + DELAY_TOL);
            }
        }
    }
}
