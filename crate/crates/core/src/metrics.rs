//! Measures of effectiveness, cumulative count curves and parameter sweeps.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::scenario::{LaneId, Scenario};
use crate::sim::{generate_arrivals, run_with_arrivals, ControllerKind, SimResult};
use crate::trajectory::delay;

const FEET_PER_MILE: f64 = 5280.0;

/// Aggregate outcomes of one run. Means are `None` when nothing departed
/// (or, for effective green, no green completed).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MoeReport {
    pub avg_travel_time: Option<f64>,
    pub avg_delay: Option<f64>,
    pub avg_effective_green: Option<f64>,
    pub throughput: usize,
    pub residual_count: usize,
    pub avg_travel_time_per_mile: Option<f64>,
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs {
        s += x;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}

pub fn compute_moes(result: &SimResult) -> MoeReport {
    let departed: Vec<_> = result
        .vehicles
        .iter()
        .filter_map(|v| v.travel_time().map(|tt| (v, tt)))
        .collect();
    let lanes = &result.config_echo.lanes;
    MoeReport {
        avg_travel_time: mean(departed.iter().map(|(_, tt)| *tt)),
        avg_delay: mean(departed.iter().map(|(v, tt)| delay(*tt, v.spt.d0, v.att.v_des).max(0.0))),
        avg_effective_green: mean(result.signal_history.iter().map(|iv| iv.green() + iv.yellow)),
        throughput: departed.len(),
        residual_count: result.residual.len(),
        avg_travel_time_per_mile: mean(
            departed
                .iter()
                .map(|(v, tt)| tt * FEET_PER_MILE / lanes[v.lane].detection_range),
        ),
    }
}

/// Step curve of cumulative counts: `(time, count after the step)`.
pub type CountCurve = Vec<(f64, usize)>;

/// Cumulative arrivals at the detection point and departures at the stop bar
/// for one lane.
pub fn cumulative_curves(result: &SimResult, lane: LaneId) -> (CountCurve, CountCurve) {
    let mut arrivals: Vec<f64> = result
        .vehicles
        .iter()
        .chain(&result.residual)
        .filter(|v| v.lane == lane && (v.departed || v.method.is_some()))
        .map(|v| v.spt.t0)
        .collect();
    let mut departures: Vec<f64> = result
        .vehicles
        .iter()
        .filter(|v| v.lane == lane)
        .filter_map(|v| v.departure_time)
        .collect();
    arrivals.sort_by(f64::total_cmp);
    departures.sort_by(f64::total_cmp);
    let steps = |ts: Vec<f64>| ts.into_iter().enumerate().map(|(i, t)| (t, i + 1)).collect();
    (steps(arrivals), steps(departures))
}

pub fn curve_csv(curve: &CountCurve) -> String {
    let mut s = String::from("time_s,count\n");
    for (t, n) in curve {
        let _ = writeln!(s, "{t},{n}");
    }
    s
}

// ---------------------------------------------------------------------------
// Sweeps

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub detection_ranges: Vec<f64>,
    pub av_ratios: Vec<f64>,
    pub mean_headways: Vec<f64>,
    pub saturation_headways: Vec<f64>,
    pub seeds: Vec<u64>,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// One cell of the grid before seeds are applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub detection_range: f64,
    pub av_ratio: f64,
    pub mean_headway: f64,
    pub saturation_headway: f64,
    pub seed: u64,
}

impl Cell {
    pub fn scenario(&self, base: &Scenario) -> Scenario {
        let mut s = base.clone().with_detection_range(self.detection_range);
        s.arrivals.av_ratio = self.av_ratio;
        s.arrivals.mean_headway = self.mean_headway;
        s.arrivals.saturation_headway = self.saturation_headway;
        s.seed = self.seed;
        s
    }
}

impl SweepGrid {
    /// Ten detection ranges over 500..3000 ft, ten AV ratios over 0.3..1, ten
    /// mean headways over 8..60 s and saturation headways of 1, 1.5 and 2 s.
    pub fn full(seeds: Vec<u64>) -> Self {
        SweepGrid {
            detection_ranges: linspace(500.0, 3000.0, 10),
            av_ratios: linspace(0.3, 1.0, 10),
            mean_headways: linspace(8.0, 60.0, 10),
            saturation_headways: vec![1.0, 1.5, 2.0],
            seeds,
        }
    }

    pub fn single(base: &Scenario) -> Self {
        SweepGrid {
            detection_ranges: vec![base.lanes[0].detection_range],
            av_ratios: vec![base.arrivals.av_ratio],
            mean_headways: vec![base.arrivals.mean_headway],
            saturation_headways: vec![base.arrivals.saturation_headway],
            seeds: vec![base.seed],
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let lists = [
            ("detection_ranges", self.detection_ranges.len()),
            ("av_ratios", self.av_ratios.len()),
            ("mean_headways", self.mean_headways.len()),
            ("saturation_headways", self.saturation_headways.len()),
            ("seeds", self.seeds.len()),
        ];
        for (name, n) in lists {
            if n == 0 {
                return Err(crate::Error::validation(name, "must not be empty"));
            }
        }
        Ok(())
    }

    /// Every cell and seed, in table order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::with_capacity(self.len());
        for &detection_range in &self.detection_ranges {
            for &av_ratio in &self.av_ratios {
                for &mean_headway in &self.mean_headways {
                    for &saturation_headway in &self.saturation_headways {
                        for &seed in &self.seeds {
                            out.push(Cell {
                                detection_range,
                                av_ratio,
                                mean_headway,
                                saturation_headway,
                                seed,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.detection_ranges.len()
            * self.av_ratios.len()
            * self.mean_headways.len()
            * self.saturation_headways.len()
            * self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: Cell,
    pub controller: ControllerKind,
    pub report: MoeReport,
    /// Set when the run failed; the report is then empty.
    pub error: Option<String>,
}

pub const SWEEP_HEADER: &str = "detection_range_ft,av_ratio,mean_headway_s,saturation_headway_s,seed,controller,avg_travel_time_s,avg_delay_s,avg_effective_green_s,throughput,residual,tt_per_mile_s";

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"))
}

fn cell_prefix(c: &Cell) -> String {
    format!("{},{},{},{},{}", c.detection_range, c.av_ratio, c.mean_headway, c.saturation_headway, c.seed)
}

/// CSV table with one row per cell and seed. Failed cells carry `ERROR` in
/// every outcome column.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        let prefix = cell_prefix(&r.cell);
        if r.error.is_some() {
            let _ = writeln!(s, "{prefix},{},ERROR,ERROR,ERROR,ERROR,ERROR,ERROR", r.controller);
            continue;
        }
        let m = &r.report;
        let _ = writeln!(
            s,
            "{prefix},{},{},{},{},{},{},{}",
            r.controller,
            opt(m.avg_travel_time),
            opt(m.avg_delay),
            opt(m.avg_effective_green),
            m.throughput,
            m.residual_count,
            opt(m.avg_travel_time_per_mile)
        );
    }
    s
}

fn run_cell(base: &Scenario, cell: &Cell, controllers: &[ControllerKind]) -> Vec<Result<MoeReport, String>> {
    let sc = cell.scenario(base);
    let arrivals = generate_arrivals(&sc, sc.seed);
    controllers
        .iter()
        .map(|&c| {
            run_with_arrivals(&sc, c, arrivals.clone())
                .map(|r| compute_moes(&r))
                .map_err(|e| e.to_string())
        })
        .collect()
}

/// Maps `f` over `items`, on `threads` workers when built with the parallel
/// feature. Output order follows input order.
fn map_cells<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if threads != 1 {
            let mut b = rayon::ThreadPoolBuilder::new();
            if threads > 1 {
                b = b.num_threads(threads);
            }
            if let Ok(pool) = b.build() {
                return pool.install(|| items.par_iter().map(&f).collect());
            }
        }
    }
    let _ = threads;
    items.iter().map(f).collect()
}

/// Runs one controller over every cell and seed. `threads == 0` uses all
/// cores.
pub fn run_sweep(base: &Scenario, grid: &SweepGrid, controller: ControllerKind, threads: usize) -> crate::Result<Vec<SweepRow>> {
    grid.validate()?;
    let cells = grid.cells();
    Ok(map_cells(&cells, threads, |cell| {
        let res = run_cell(base, cell, &[controller]).remove(0);
        match res {
            Ok(report) => SweepRow { cell: *cell, controller, report, error: None },
            Err(e) => SweepRow { cell: *cell, controller, report: MoeReport::default(), error: Some(e) },
        }
    }))
}

/// Both controllers on the identical arrival stream of each cell and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub cell: Cell,
    pub iics: Result<MoeReport, String>,
    pub actuated: Result<MoeReport, String>,
}

impl PairRow {
    /// Actuated minus trajectory-driven travel time per mile; 0 when neither
    /// moved any vehicle.
    pub fn tt_per_mile_diff(&self) -> Option<f64> {
        diff(self, |m| m.avg_travel_time_per_mile)
    }

    pub fn effective_green_diff(&self) -> Option<f64> {
        diff(self, |m| m.avg_effective_green)
    }
}

fn diff(r: &PairRow, f: impl Fn(&MoeReport) -> Option<f64>) -> Option<f64> {
    let (Ok(a), Ok(b)) = (&r.iics, &r.actuated) else {
        return None;
    };
    match (f(b), f(a)) {
        (Some(x), Some(y)) => Some(x - y),
        (None, None) => Some(0.0),
        _ => None,
    }
}

pub fn compare_controllers(base: &Scenario, grid: &SweepGrid, threads: usize) -> crate::Result<Vec<PairRow>> {
    grid.validate()?;
    let cells = grid.cells();
    Ok(map_cells(&cells, threads, |cell| {
        let mut r = run_cell(base, cell, &[ControllerKind::Iics, ControllerKind::Actuated]);
        let actuated = r.pop().expect("two runs");
        let iics = r.pop().expect("two runs");
        PairRow { cell: *cell, iics, actuated }
    }))
}

pub const COMPARE_HEADER: &str = "detection_range_ft,av_ratio,mean_headway_s,saturation_headway_s,seed,iics_tt_per_mile_s,actuated_tt_per_mile_s,tt_per_mile_diff_s,iics_avg_effective_green_s,actuated_avg_effective_green_s,effective_green_diff_s";

pub fn compare_csv(rows: &[PairRow]) -> String {
    let mut s = String::from(COMPARE_HEADER);
    s.push('\n');
    let field = |r: &Result<MoeReport, String>, f: fn(&MoeReport) -> Option<f64>| match r {
        Ok(m) => opt(f(m)),
        Err(_) => "ERROR".to_string(),
    };
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            cell_prefix(&r.cell),
            field(&r.iics, |m| m.avg_travel_time_per_mile),
            field(&r.actuated, |m| m.avg_travel_time_per_mile),
            opt(r.tt_per_mile_diff()),
            field(&r.iics, |m| m.avg_effective_green),
            field(&r.actuated, |m| m.avg_effective_green),
            opt(r.effective_green_diff()),
        );
    }
    s
}

// ---------------------------------------------------------------------------
// Trend statistics

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation; `None` when either side is constant or the
/// inputs are shorter than two.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    if x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::follower::{ArrivalState, VehicleRecord, VehicleType};
    use crate::signal::PhaseInterval;
    use approx::assert_abs_diff_eq;

    fn result_with(travel: &[f64]) -> SimResult {
        let sc = Scenario::default();
        let att = sc.attributes.av;
        let vehicles = travel
            .iter()
            .enumerate()
            .map(|(i, &tt)| {
                let spt = ArrivalState { t0: i as f64, d0: 1000.0, v0: att.v_des, movement: sc.lanes[1].movement };
                let mut v = VehicleRecord::new(i, VehicleType::Av, 1, spt, att);
                v.departure_time = Some(i as f64 + tt);
                v.departed = true;
                v
            })
            .collect();
        SimResult {
            controller: ControllerKind::Iics,
            seed: 0,
            vehicles,
            signal_history: vec![],
            residual: vec![],
            open_interval: None,
            end_time: 1020.0,
            config_echo: sc,
        }
    }

    #[test]
    fn single_vehicle_moes() {
        let free = 1000.0 / Scenario::default().attributes.av.v_des;
        let m = compute_moes(&result_with(&[free]));
        assert_abs_diff_eq!(m.avg_delay.unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.avg_travel_time_per_mile.unwrap(), 90.0, epsilon = 1e-9);
        assert_eq!(m.throughput, 1);
        assert_eq!(m.avg_effective_green, None);
    }

    #[test]
    fn empty_and_mean_moes() {
        let m = compute_moes(&result_with(&[]));
        assert_eq!(m.throughput, 0);
        assert_eq!((m.avg_travel_time, m.avg_delay, m.avg_travel_time_per_mile), (None, None, None));
        let free = 1000.0 / Scenario::default().attributes.av.v_des;
        let mut r = result_with(&[free + 1.0, free + 3.0]);
        r.signal_history = vec![
            PhaseInterval { phase: 0, start: 0.0, green_end: 10.0, yellow: 1.5, all_red: 1.5 },
            PhaseInterval { phase: 1, start: 13.0, green_end: 17.5, yellow: 1.5, all_red: 1.5 },
        ];
        let m = compute_moes(&r);
        assert_abs_diff_eq!(m.avg_delay.unwrap(), 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m.avg_effective_green.unwrap(), 8.75, epsilon = 1e-12);
        assert!(m.avg_delay.unwrap() <= m.avg_travel_time.unwrap());
    }

    #[test]
    fn curves_are_consistent() {
        let free = 1000.0 / Scenario::default().attributes.av.v_des;
        let r = result_with(&[free, free + 2.0, free + 1.0]);
        let (a, d) = cumulative_curves(&r, 1);
        assert_eq!(a.len(), 3);
        assert_eq!(d.len(), 3);
        for (k, (ta, _)) in a.iter().enumerate() {
            let v = &r.vehicles[k];
            assert_abs_diff_eq!(v.departure_time.unwrap() - ta, v.travel_time().unwrap(), epsilon = 1e-12);
        }
        for &(t, n) in &d {
            assert!(a.iter().filter(|(ta, _)| *ta <= t).count() >= n);
        }
        let (a0, d0) = cumulative_curves(&r, 0);
        assert!(a0.is_empty() && d0.is_empty());
    }

    #[test]
    fn grid_shapes() {
        let g = SweepGrid::full(vec![1]);
        assert_eq!(g.len(), 3000);
        assert_eq!(g.cells().len(), 3000);
        assert_eq!(g.detection_ranges[0], 500.0);
        assert_eq!(g.detection_ranges[9], 3000.0);
        let mut bad = g.clone();
        bad.seeds.clear();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn singleton_sweep_equals_direct_run() {
        let mut base = Scenario::default();
        base.arrivals.horizon = 200.0;
        let grid = SweepGrid::single(&base);
        let rows = run_sweep(&base, &grid, ControllerKind::Iics, 1).unwrap();
        assert_eq!(rows.len(), 1);
        let direct = compute_moes(&crate::sim::run(&base, ControllerKind::Iics).unwrap());
        assert_eq!(rows[0].report, direct);
        let csv = sweep_csv(&rows);
        assert_eq!(csv.lines().next().unwrap(), SWEEP_HEADER);
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn empty_demand_pair() {
        let mut base = Scenario::default();
        base.arrivals.mean_headway = f64::INFINITY;
        let grid = SweepGrid::single(&base);
        let rows = compare_controllers(&base, &grid, 1).unwrap();
        assert_eq!(rows[0].iics.as_ref().unwrap().throughput, 0);
        assert_eq!(rows[0].actuated.as_ref().unwrap().throughput, 0);
        assert_eq!(rows[0].tt_per_mile_diff(), Some(0.0));
    }

    #[test]
    fn spearman_basics() {
        assert_abs_diff_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 1.0, 0.0]).unwrap(), -1.0, epsilon = 1e-12);
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
        assert_abs_diff_eq!(spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 2.0, 3.0]).unwrap(), 1.0, epsilon = 1e-12);
    }
}
