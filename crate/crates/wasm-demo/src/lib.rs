//! Browser bindings for the static demo page in `www/`.
//!
//! Every export returns plain numbers or a JSON string so the page needs no
//! glue beyond what `wasm-bindgen --target web` generates.

use iics_core::lto::{solve_lto, GreenWindow, LtoProblem};
use iics_core::metrics::{compute_moes, cumulative_curves};
use iics_core::scenario::{mph_to_fps, Scenario};
use iics_core::sim::{min_detection_range, run, ControllerKind};
use iics_core::trajectory::sample_plan;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct LeadPlan {
    feasible: bool,
    delay: f64,
    departure: f64,
    v2: f64,
    v3: f64,
    a1: f64,
    a3: f64,
    /// `[t, d, v]` samples.
    samples: Vec<[f64; 3]>,
}

/// Minimum-delay trajectory for a lone automated vehicle detected `d0_ft`
/// from the stop bar at `v0_mph`, with one green+yellow window.
#[wasm_bindgen]
pub fn plan_lead(d0_ft: f64, v0_mph: f64, green_start: f64, green_end: f64) -> String {
    let s = Scenario::default();
    let lim = s.limits.straight;
    let p = LtoProblem {
        d0: d0_ft,
        v0: mph_to_fps(v0_mph),
        t0: 0.0,
        v_max: lim.v_max,
        v_cross: lim.v_cross,
        a_max_dec: s.attributes.av.a_max_dec,
        a_max_acc: s.attributes.av.a_max_acc,
        v_des: s.attributes.av.v_des,
        green_windows: vec![GreenWindow::new(green_start, green_end.max(green_start))],
    };
    let out = match solve_lto(&p).and_then(|sol| Ok((sol, sample_plan(&sol.plan, 0.1)?))) {
        Ok((sol, traj)) => LeadPlan {
            feasible: true,
            delay: sol.delay,
            departure: traj.departure_time,
            v2: sol.plan.v2,
            v3: sol.plan.v3,
            a1: sol.plan.a1,
            a3: sol.plan.a3,
            samples: traj.points.iter().map(|q| [q.t, q.d, q.v]).collect(),
        },
        Err(_) => LeadPlan {
            feasible: false,
            delay: f64::NAN,
            departure: f64::NAN,
            v2: f64::NAN,
            v3: f64::NAN,
            a1: f64::NAN,
            a3: f64::NAN,
            samples: Vec::new(),
        },
    };
    serde_json::to_string(&out).unwrap_or_default()
}

/// Minimum detection range (ft).
#[wasm_bindgen]
pub fn detection_range(v0_mph: f64, v_cross_mph: f64, a_max_dec: f64, dt_serve: f64) -> f64 {
    min_detection_range(mph_to_fps(v0_mph), mph_to_fps(v_cross_mph), a_max_dec, dt_serve)
}

#[derive(Serialize)]
struct Summary {
    controller: String,
    avg_travel_time: Option<f64>,
    avg_delay: Option<f64>,
    avg_effective_green: Option<f64>,
    throughput: usize,
    residual: usize,
    arrivals: Vec<(f64, usize)>,
    departures: Vec<(f64, usize)>,
    /// `[phase, start, green_end, yellow_end]` per completed green.
    greens: Vec<(usize, f64, f64, f64)>,
}

/// Five simulated minutes of the default intersection. Returns MOEs, the
/// cumulative curves of `lane` and the signal history.
#[wasm_bindgen]
pub fn simulate(mean_headway: f64, av_ratio: f64, seed: u32, actuated: bool, lane: usize) -> String {
    let mut s = Scenario::default();
    s.arrivals.mean_headway = mean_headway.max(1.0);
    s.arrivals.av_ratio = av_ratio.clamp(0.0, 1.0);
    s.arrivals.horizon = 300.0;
    s.arrivals.drain = 60.0;
    s.seed = u64::from(seed);
    let controller = if actuated { ControllerKind::Actuated } else { ControllerKind::Iics };
    let r = match run(&s, controller) {
        Ok(r) => r,
        Err(e) => return format!("{{\"error\": {:?}}}", e.to_string()),
    };
    let m = compute_moes(&r);
    let (arrivals, departures) = cumulative_curves(&r, lane.min(s.lanes.len() - 1));
    let out = Summary {
        controller: controller.to_string(),
        avg_travel_time: m.avg_travel_time,
        avg_delay: m.avg_delay,
        avg_effective_green: m.avg_effective_green,
        throughput: m.throughput,
        residual: m.residual_count,
        arrivals,
        departures,
        greens: r
            .signal_history
            .iter()
            .map(|iv| (iv.phase, iv.start, iv.green_end, iv.yellow_end()))
            .collect(),
    };
    serde_json::to_string(&out).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lead_plan_round_trip() {
        let v: serde_json::Value = serde_json::from_str(&plan_lead(1000.0, 40.0, 25.0, 40.0)).unwrap();
        assert_eq!(v["feasible"], true);
        assert!((v["departure"].as_f64().unwrap() - 25.0).abs() < 1e-6);
        let v: serde_json::Value = serde_json::from_str(&plan_lead(1000.0, 40.0, 0.0, 3.0)).unwrap();
        assert_eq!(v["feasible"], false);
    }

    #[test]
    fn range_in_mph() {
        assert!((detection_range(40.0, 30.0, -15.0, 0.1) - 56.06).abs() < 0.01);
    }

    #[test]
    fn small_simulation() {
        let v: serde_json::Value = serde_json::from_str(&simulate(20.0, 0.5, 1, false, 1)).unwrap();
        assert_eq!(v["controller"], "iics");
        assert!(v["throughput"].as_u64().unwrap() > 0);
        let v: serde_json::Value = serde_json::from_str(&simulate(20.0, 0.5, 1, true, 1)).unwrap();
        assert_eq!(v["controller"], "actuated");
    }
}
