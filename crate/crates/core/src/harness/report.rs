//! CSV, SVG and JSON reports of an experiment.
//!
//! CSV outputs contain only quantities that are deterministic for a given
//! configuration; wall-clock times go to the JSON summary alone.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::svg::{render, Panel, Series};
use super::{ExperimentResult, RunRecord};
use crate::io::write_atomic;
use crate::planner::Strategy;
use crate::Result;

/// Mean and spread of one strategy (or depth) across seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub strategy: Strategy,
    pub runs: usize,
    pub obj_mean: f64,
    /// Sample standard deviation (zero for a single run).
    pub obj_std: f64,
    pub mass_mean: f64,
    pub time_mean: f64,
    pub work_mean: f64,
    pub load_time_mean: f64,
    pub load_work_mean: f64,
    pub vturn_time_mean: f64,
    pub vturn_work_mean: f64,
    pub dump_time_mean: f64,
    pub predictions_mean: f64,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

impl Aggregate {
    pub fn from_runs<'a>(strategy: Strategy, runs: impl Iterator<Item = &'a RunRecord>) -> Self {
        let runs: Vec<&RunRecord> = runs.collect();
        let col = |f: &dyn Fn(&RunRecord) -> f64| runs.iter().map(|r| f(r)).collect::<Vec<f64>>();
        let obj = col(&|r| r.totals.objective);
        Self {
            strategy,
            runs: runs.len(),
            obj_mean: mean(&obj),
            obj_std: sample_std(&obj),
            mass_mean: mean(&col(&|r| r.totals.mass)),
            time_mean: mean(&col(&|r| r.totals.time)),
            work_mean: mean(&col(&|r| r.totals.work)),
            load_time_mean: mean(&col(&|r| r.totals.load_time)),
            load_work_mean: mean(&col(&|r| r.totals.load_work)),
            vturn_time_mean: mean(&col(&|r| r.totals.vturn_time)),
            vturn_work_mean: mean(&col(&|r| r.totals.vturn_work)),
            dump_time_mean: mean(&col(&|r| r.totals.dump_time)),
            predictions_mean: mean(&col(&|r| r.totals.predictions as f64)),
        }
    }
}

pub fn plan_log_csv(run: &RunRecord) -> String {
    let mut s = String::from(
        "n,x_dig,y_dig,heading,a1,a2,a3,a4,M,T_load,W_load,T_v1,W_v1,T_v2,W_v2,T_total,W_total,objective,predictions\n",
    );
    for r in &run.rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.x_dig,
            r.y_dig,
            r.heading,
            r.action[0],
            r.action[1],
            r.action[2],
            r.action[3],
            r.mass,
            r.t_load,
            r.w_load,
            r.t_v1,
            r.w_v1,
            r.t_v2,
            r.w_v2,
            r.t_total,
            r.w_total,
            r.objective,
            r.predictions
        )
        .unwrap();
    }
    s
}

pub fn runs_csv(result: &ExperimentResult) -> String {
    let mut s = String::from("seed,strategy,cycles,termination,mass_kg,time_s,work_j,objective,predictions\n");
    for r in &result.runs {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.seed,
            r.strategy,
            r.totals.cycles,
            serde_json::to_value(r.termination).unwrap().as_str().unwrap(),
            r.totals.mass,
            r.totals.time,
            r.totals.work,
            r.totals.objective,
            r.totals.predictions
        )
        .unwrap();
    }
    s
}

fn depth_rows(result: &ExperimentResult) -> Vec<(usize, &Aggregate)> {
    let mut rows: Vec<(usize, &Aggregate)> = result
        .aggregates
        .iter()
        .filter_map(|a| match a.strategy {
            Strategy::Tree { depth } => Some((depth, a)),
            _ => None,
        })
        .collect();
    rows.sort_by_key(|r| r.0);
    rows
}

/// Mean totals against search depth.
pub fn depth_sweep_csv(result: &ExperimentResult) -> String {
    let mut s = String::from("depth,obj_mean,obj_std,mass_t,time_s,work_MJ,predictions\n");
    for (d, a) in depth_rows(result) {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            d,
            a.obj_mean,
            a.obj_std,
            a.mass_mean / 1000.0,
            a.time_mean,
            a.work_mean / 1e6,
            a.predictions_mean
        )
        .unwrap();
    }
    s
}

/// Chart of the depth sweep; `None` with fewer than two depths.
pub fn depth_sweep_svg(result: &ExperimentResult) -> Option<String> {
    let rows = depth_rows(result);
    if rows.len() < 2 {
        return None;
    }
    let series = |name: &str, f: &dyn Fn(&Aggregate) -> f64| Series {
        name: name.into(),
        points: rows.iter().map(|(d, a)| (*d as f64, f(a))).collect(),
        dashed: false,
    };
    let panels = [
        Panel {
            title: "Total objective (mean over seeds)".into(),
            x_label: "search depth d".into(),
            y_label: "objective".into(),
            series: vec![series("objective", &|a| a.obj_mean)],
        },
        Panel {
            title: "Totals".into(),
            x_label: "search depth d".into(),
            y_label: "mass [t], time [100 s], work [MJ]".into(),
            series: vec![
                series("mass [t]", &|a| a.mass_mean / 1000.0),
                series("time [100 s]", &|a| a.time_mean / 100.0),
                series("work [MJ]", &|a| a.work_mean / 1e6),
            ],
        },
        Panel {
            title: "Predictions per run".into(),
            x_label: "search depth d".into(),
            y_label: "predictions".into(),
            series: vec![series("predictions", &|a| a.predictions_mean)],
        },
    ];
    Some(render("Depth sweep", &panels))
}

/// Per-strategy totals split by subtask. Total time is the sum of loading,
/// V-turn and dumping time; total work the sum of loading and V-turn work.
pub fn strategy_csv(result: &ExperimentResult) -> String {
    let mut s = String::from(
        "strategy,runs,mass_t,load_time_s,load_work_MJ,vturn_time_s,vturn_work_MJ,dump_time_s,total_time_s,total_work_MJ,obj_mean,obj_std\n",
    );
    for a in &result.aggregates {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            a.strategy,
            a.runs,
            a.mass_mean / 1000.0,
            a.load_time_mean,
            a.load_work_mean / 1e6,
            a.vturn_time_mean,
            a.vturn_work_mean / 1e6,
            a.dump_time_mean,
            a.time_mean,
            a.work_mean / 1e6,
            a.obj_mean,
            a.obj_std
        )
        .unwrap();
    }
    s
}

/// Per-cycle means of mass, time and work per strategy; V-turn parts dashed.
pub fn strategy_svg(result: &ExperimentResult) -> String {
    let per_cycle = |strategy: Strategy, f: &dyn Fn(&super::StepRow) -> f64| -> Vec<(f64, f64)> {
        (1..=result.cycles)
            .filter_map(|n| {
                let v: Vec<f64> = result
                    .runs_for(strategy)
                    .filter_map(|r| r.rows.get(n - 1).map(f))
                    .collect();
                (!v.is_empty()).then(|| (n as f64, mean(&v)))
            })
            .collect()
    };
    let mut mass = Vec::new();
    let mut time = Vec::new();
    let mut work = Vec::new();
    for a in &result.aggregates {
        let name = a.strategy.label();
        mass.push(Series {
            name: name.clone(),
            points: per_cycle(a.strategy, &|r| r.mass / 1000.0),
            dashed: false,
        });
        time.push(Series {
            name: format!("{name} load"),
            points: per_cycle(a.strategy, &|r| r.t_load),
            dashed: false,
        });
        time.push(Series {
            name: format!("{name} V-turns"),
            points: per_cycle(a.strategy, &|r| r.t_v1 + r.t_v2),
            dashed: true,
        });
        work.push(Series {
            name: format!("{name} load"),
            points: per_cycle(a.strategy, &|r| r.w_load / 1e6),
            dashed: false,
        });
        work.push(Series {
            name: format!("{name} V-turns"),
            points: per_cycle(a.strategy, &|r| (r.w_v1 + r.w_v2) / 1e6),
            dashed: true,
        });
    }
    let panels = [
        Panel {
            title: "Loaded mass per cycle".into(),
            x_label: "cycle".into(),
            y_label: "mass [t]".into(),
            series: mass,
        },
        Panel {
            title: "Time per cycle".into(),
            x_label: "cycle".into(),
            y_label: "time [s]".into(),
            series: time,
        },
        Panel {
            title: "Work per cycle".into(),
            x_label: "cycle".into(),
            y_label: "work [MJ]".into(),
            series: work,
        },
    ];
    render("Strategy comparison", &panels)
}

#[derive(Serialize)]
struct RunSummary<'a> {
    seed: u64,
    strategy: Strategy,
    termination: super::Termination,
    totals: &'a super::RunTotals,
    stats: &'a crate::planner::SearchStats,
}

/// Summary including wall-clock times.
pub fn stats_json(result: &ExperimentResult) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        cycles: usize,
        runs: Vec<RunSummary<'a>>,
        aggregates: &'a [Aggregate],
    }
    let doc = Doc {
        cycles: result.cycles,
        runs: result
            .runs
            .iter()
            .map(|r| RunSummary {
                seed: r.seed,
                strategy: r.strategy,
                termination: r.termination,
                totals: &r.totals,
                stats: &r.stats,
            })
            .collect(),
        aggregates: &result.aggregates,
    };
    serde_json::to_string_pretty(&doc).expect("stats serialize")
}

/// Paths written by [`write_reports`].
#[derive(Debug, Clone, Default)]
pub struct ReportFiles {
    pub plan_logs: Vec<PathBuf>,
    pub runs_csv: PathBuf,
    pub depth_csv: Option<PathBuf>,
    pub depth_svg: Option<PathBuf>,
    pub strategy_csv: Option<PathBuf>,
    pub strategy_svg: Option<PathBuf>,
    pub stats_json: PathBuf,
    pub warnings: Vec<String>,
}

/// Writes every report into `dir` (created if missing).
pub fn write_reports(result: &ExperimentResult, dir: impl AsRef<Path>) -> Result<ReportFiles> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    let mut files = ReportFiles::default();
    for run in &result.runs {
        let p = dir.join(format!("plan_{}_seed{}.csv", run.strategy, run.seed));
        write_atomic(&p, plan_log_csv(run).as_bytes())?;
        files.plan_logs.push(p);
    }
    files.runs_csv = dir.join("runs.csv");
    write_atomic(&files.runs_csv, runs_csv(result).as_bytes())?;

    let depths = depth_rows(result).len();
    if depths >= 1 {
        let p = dir.join("depth_sweep.csv");
        write_atomic(&p, depth_sweep_csv(result).as_bytes())?;
        files.depth_csv = Some(p);
        match depth_sweep_svg(result) {
            Some(svg) => {
                let p = dir.join("depth_sweep.svg");
                write_atomic(&p, svg.as_bytes())?;
                files.depth_svg = Some(p);
            }
            None => files.warnings.push("single depth: depth-sweep chart skipped".into()),
        }
    }
    if result.aggregates.len() >= 2 {
        let p = dir.join("strategies.csv");
        write_atomic(&p, strategy_csv(result).as_bytes())?;
        files.strategy_csv = Some(p);
        let p = dir.join("strategies.svg");
        write_atomic(&p, strategy_svg(result).as_bytes())?;
        files.strategy_svg = Some(p);
    }
    files.stats_json = dir.join("stats.json");
    write_atomic(&files.stats_json, stats_json(result).as_bytes())?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_std_uses_n_minus_one() {
        assert_eq!(sample_std(&[1.0]), 0.0);
        assert!((sample_std(&[1.0, 3.0]) - 2f64.sqrt()).abs() < 1e-15);
    }
}
