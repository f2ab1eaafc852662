//! Scenario configuration and seeded experiments.
//!
//! An experiment generates one initial pile per seed and runs every
//! configured depth and strategy on it. Runs are independent and executed in
//! parallel; results are collected in configuration order.

mod report;
mod svg;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::heightfield::{generate_pile, FieldDims, HeightField, PileSpec};
use crate::planner::{PlanOutcome, Planner, PlannerConfig, SearchStats, Strategy, Termination};
use crate::vturn::{LutAxis, VTurnConfig, VTurnLut, VehicleParams};
use crate::worldmodel::{Normalization, Surrogate, SurrogateParams};
use crate::{Error, Result};

pub use report::{
    depth_sweep_csv, depth_sweep_svg, plan_log_csv, runs_csv, stats_json, strategy_csv, strategy_svg, write_reports,
    Aggregate, ReportFiles,
};

/// Lattice of the V-turn lookup table over the dig region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LutLattice {
    #[serde(rename = "x_step_m")]
    pub x_step: f64,
    #[serde(rename = "y_step_m")]
    pub y_step: f64,
    pub heading_count: u32,
}

impl Default for LutLattice {
    fn default() -> Self {
        Self {
            x_step: 1.0,
            y_step: 1.0,
            heading_count: 24,
        }
    }
}

/// Everything an experiment needs. All fields are required in JSON; the
/// `default-config` command prints a complete document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub field: FieldDims,
    pub pile: PileSpec,
    /// Relax the generated pile to the angle of repose before planning.
    pub settle_initial_pile: bool,
    pub planner: PlannerConfig,
    pub normalization: Normalization,
    pub surrogate: SurrogateParams,
    pub vehicle: VehicleParams,
    pub vturn: VTurnConfig,
    pub lut: LutLattice,
    pub cycles: usize,
    pub depths: Vec<usize>,
    pub strategies: Vec<Strategy>,
    pub seeds: Vec<u64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            field: FieldDims {
                nx: 301,
                ny: 211,
                cell: 0.1,
                origin: [-14.0, -6.0],
            },
            pile: PileSpec::default(),
            settle_initial_pile: true,
            planner: PlannerConfig::default(),
            normalization: Normalization::default(),
            surrogate: SurrogateParams::default(),
            vehicle: VehicleParams::default(),
            vturn: VTurnConfig::default(),
            lut: LutLattice::default(),
            cycles: 15,
            depths: vec![1, 2, 4, 6],
            strategies: vec![Strategy::Greedy, Strategy::MaxLoading, Strategy::Nominal],
            seeds: (0..10).collect(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.field.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.pile.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.planner.validate()?;
        self.normalization.validate()?;
        self.surrogate.validate()?;
        self.vehicle.validate()?;
        self.vturn.validate()?;
        if !(self.lut.x_step > 0.0 && self.lut.y_step > 0.0 && self.lut.heading_count >= 4) {
            return Err(Error::Config("lookup-table lattice needs positive steps and >= 4 headings".into()));
        }
        if self.cycles == 0 {
            return Err(Error::Config("cycles must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.depths.iter().any(|&d| d == 0 || d > self.cycles) {
            return Err(Error::Config("depths must lie in 1..=cycles".into()));
        }
        if self.depths.is_empty() && self.strategies.is_empty() {
            return Err(Error::Config("nothing to run: no depths and no strategies".into()));
        }
        Ok(())
    }

    /// Runs in execution order: depths first, then strategies.
    pub fn runs(&self) -> Vec<Strategy> {
        self.depths
            .iter()
            .map(|&depth| Strategy::Tree { depth })
            .chain(self.strategies.iter().copied())
            .collect()
    }

    pub fn model(&self) -> Result<Surrogate> {
        Surrogate::new(self.surrogate)
    }

    /// Initial pile for `seed`, settled if configured.
    pub fn initial_pile(&self, seed: u64) -> Result<HeightField> {
        let spec = PileSpec { seed, ..self.pile };
        let f = generate_pile(&spec, self.field)?;
        if self.settle_initial_pile {
            f.settle(self.surrogate.repose)
        } else {
            Ok(f)
        }
    }

    pub fn build_lut(&self) -> Result<VTurnLut> {
        let r = &self.planner.region;
        VTurnLut::build(
            self.planner.dump,
            LutAxis::covering(r.x_min, r.x_max, self.lut.x_step),
            LutAxis::covering(r.y_min, r.y_max, self.lut.y_step),
            LutAxis::headings(self.lut.heading_count),
            &self.vturn,
            &self.vehicle,
        )
    }

    /// Checks that a table loaded from disk belongs to this scenario.
    pub fn check_lut(&self, lut: &VTurnLut) -> Result<()> {
        let d = &self.planner.dump;
        let same = (lut.dump.x - d.x).abs() < 1e-9
            && (lut.dump.y - d.y).abs() < 1e-9
            && crate::geometry::normalize_angle(lut.dump.heading - d.heading).abs() < 1e-9;
        if !same {
            return Err(Error::Config("lookup table was built for a different receiver pose".into()));
        }
        let r = &self.planner.region;
        if lut.x.min > r.x_min + 1e-9 || lut.x.max() < r.x_max - 1e-9 || lut.y.min > r.y_min + 1e-9 || lut.y.max() < r.y_max - 1e-9 {
            return Err(Error::Config("lookup table does not cover the dig region".into()));
        }
        Ok(())
    }
}

/// One cycle of a plan log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRow {
    pub n: usize,
    pub x_dig: f64,
    pub y_dig: f64,
    pub heading: f64,
    pub action: [f64; 4],
    pub mass: f64,
    pub t_load: f64,
    pub w_load: f64,
    pub t_v1: f64,
    pub w_v1: f64,
    pub t_v2: f64,
    pub w_v2: f64,
    pub t_dump: f64,
    pub t_total: f64,
    pub w_total: f64,
    pub objective: f64,
    pub predictions: usize,
}

/// Totals of one run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RunTotals {
    pub cycles: usize,
    pub mass: f64,
    pub load_time: f64,
    pub load_work: f64,
    pub vturn_time: f64,
    pub vturn_work: f64,
    pub dump_time: f64,
    pub time: f64,
    pub work: f64,
    pub objective: f64,
    pub predictions: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub seed: u64,
    pub strategy: Strategy,
    pub rows: Vec<StepRow>,
    pub totals: RunTotals,
    pub stats: SearchStats,
    pub termination: Termination,
}

impl RunRecord {
    pub fn from_outcome(seed: u64, outcome: &PlanOutcome) -> Self {
        let rows: Vec<StepRow> = outcome
            .steps
            .iter()
            .map(|s| StepRow {
                n: s.cycle,
                x_dig: s.dig.pose.x,
                y_dig: s.dig.pose.y,
                heading: s.dig.pose.heading,
                action: s.action.0,
                mass: s.perf_load.mass,
                t_load: s.perf_load.time,
                w_load: s.perf_load.work,
                t_v1: s.perf_v1.time,
                w_v1: s.perf_v1.work,
                t_v2: s.perf_v2.time,
                w_v2: s.perf_v2.work,
                t_dump: s.perf_dump.time,
                t_total: s.perf_total.time,
                w_total: s.perf_total.work,
                objective: s.objective,
                predictions: s.predictions,
            })
            .collect();
        let mut t = RunTotals {
            cycles: rows.len(),
            ..RunTotals::default()
        };
        for r in &rows {
            t.mass += r.mass;
            t.load_time += r.t_load;
            t.load_work += r.w_load;
            t.vturn_time += r.t_v1 + r.t_v2;
            t.vturn_work += r.w_v1 + r.w_v2;
            t.dump_time += r.t_dump;
            t.time += r.t_total;
            t.work += r.w_total;
            t.objective += r.objective;
            t.predictions += r.predictions;
        }
        Self {
            seed,
            strategy: outcome.strategy,
            rows,
            totals: t,
            stats: outcome.stats.clone(),
            termination: outcome.termination,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub cycles: usize,
    pub runs: Vec<RunRecord>,
    pub aggregates: Vec<Aggregate>,
}

impl ExperimentResult {
    pub fn runs_for(&self, strategy: Strategy) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(move |r| r.strategy == strategy)
    }

    pub fn aggregate(&self, strategy: Strategy) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.strategy == strategy)
    }
}

/// Source of the initial piles.
#[derive(Debug, Clone)]
pub enum InitialPiles {
    /// Generated from the pile spec, one per seed.
    Generated,
    /// The same field for every seed.
    Fixed(HeightField),
}

/// Runs every (seed, depth/strategy) combination of `config`.
pub fn run_experiment(config: &ScenarioConfig, lut: &VTurnLut, piles: &InitialPiles) -> Result<ExperimentResult> {
    config.validate()?;
    config.check_lut(lut)?;
    let model = config.model()?;
    let planner = Planner::new(&model, lut, config.normalization, config.planner)?;
    let fields: Vec<HeightField> = config
        .seeds
        .par_iter()
        .map(|&seed| match piles {
            InitialPiles::Generated => config.initial_pile(seed),
            InitialPiles::Fixed(f) => Ok(f.clone()),
        })
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, Strategy)> = (0..config.seeds.len())
        .flat_map(|k| config.runs().into_iter().map(move |s| (k, s)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(k, strategy)| {
            let outcome = planner.run(&fields[k], strategy, config.cycles)?;
            Ok(RunRecord::from_outcome(config.seeds[k], &outcome))
        })
        .collect::<Result<Vec<_>>>()?;
    let aggregates = config
        .runs()
        .into_iter()
        .map(|s| Aggregate::from_runs(s, runs.iter().filter(|r| r.strategy == s)))
        .collect();
    Ok(ExperimentResult {
        cycles: config.cycles,
        runs,
        aggregates,
    })
}
