//! Dig-location and loading-action selection over a horizon of cycles.
//!
//! Every cycle lists dig candidates on the current pile, scores each with a
//! strategy-specific evaluation, commits the best, and expands the pile with
//! the world model. The look-ahead evaluation adds the objective of a greedy
//! rollout of further cycles on the predicted pile.
//!
//! Candidates are evaluated in parallel; the winner is then picked by a
//! sequential scan with a total order (score, V-turn time, index), so the
//! plan does not depend on the thread count.

mod contour;

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Pose;
use crate::heightfield::HeightField;
use crate::vturn::{VTurnCost, VTurnLut};
use crate::worldmodel::{optimize_action, LoadAction, Normalization, OptimizeOptions, PerformanceTriple, WorldModel};
use crate::{units, Error, Result};

pub use contour::{listup, DigCandidate, ListupOptions, Region};

/// Selection rule applied at each cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Look-ahead tree search with the given depth.
    Tree { depth: usize },
    /// Full single-cycle objective.
    Greedy,
    /// Loading objective only, ignoring transport.
    MaxLoading,
    /// Transport objective only, with the fixed nominal loading action.
    Nominal,
}

impl Strategy {
    pub fn label(&self) -> String {
        match self {
            Strategy::Tree { depth } => format!("tree-d{depth}"),
            Strategy::Greedy => "greedy".into(),
            Strategy::MaxLoading => "max_loading".into(),
            Strategy::Nominal => "nominal".into(),
        }
    }

    /// Parses `greedy`, `max_loading`, `nominal` or `tree-d<N>`.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Strategy::Greedy),
            "max_loading" => Ok(Strategy::MaxLoading),
            "nominal" => Ok(Strategy::Nominal),
            _ => s
                .strip_prefix("tree-d")
                .and_then(|d| d.parse::<usize>().ok())
                .filter(|d| *d >= 1)
                .map(|depth| Strategy::Tree { depth })
                .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}"))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for Strategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for Strategy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Strategy::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// How actions are chosen for candidates inside a look-ahead rollout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RolloutActions {
    Optimized,
    Nominal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    /// Receiver pose; the heading is the direction the loader backs away in.
    #[serde(rename = "dump_pose_m_deg", with = "units::pose_m_deg")]
    pub dump: Pose,
    #[serde(rename = "dig_region")]
    pub region: Region,
    pub listup: ListupOptions,
    #[serde(rename = "action_optimizer")]
    pub optimize: OptimizeOptions,
    #[serde(rename = "dump_time_s")]
    pub dump_time: f64,
    pub rollout_actions: RolloutActions,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            dump: Pose::new(-12.0, -3.0, (-30f64).to_radians()),
            region: Region::default(),
            listup: ListupOptions::default(),
            optimize: OptimizeOptions::default(),
            dump_time: 5.0,
            rollout_actions: RolloutActions::Optimized,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        self.region.validate()?;
        if !(self.listup.dx > 0.0 && self.listup.level > 0.0) {
            return Err(Error::Config("candidate spacing and contour level must be positive".into()));
        }
        if !(self.dump_time >= 0.0) {
            return Err(Error::Config("dump time must be non-negative".into()));
        }
        let o = &self.optimize;
        if !(o.step_length > 0.0 && o.fd_step > 0.0 && o.fd_step < 0.5 && o.tolerance >= 0.0) {
            return Err(Error::Config("invalid action-optimizer settings".into()));
        }
        Ok(())
    }
}

/// Cycle total: mass from loading only, times and works summed, plus the
/// fixed dumping time.
pub fn perf_total(load: &PerformanceTriple, v1: &VTurnCost, v2: &VTurnCost, dump_time: f64) -> PerformanceTriple {
    PerformanceTriple::new(
        load.mass,
        load.time + v1.time + v2.time + dump_time,
        load.work + v1.work + v2.work,
    )
}

fn transport(c: &VTurnCost) -> PerformanceTriple {
    PerformanceTriple::new(0.0, c.time, c.work)
}

/// One (pile, candidate) evaluation: action choice, loading performance and
/// interpolated V-turn costs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub candidate: DigCandidate,
    pub action: LoadAction,
    pub load: PerformanceTriple,
    pub v1: VTurnCost,
    pub v2: VTurnCost,
    pub total: PerformanceTriple,
    /// `w · P` of the full cycle.
    pub objective: f64,
}

impl Prediction {
    pub fn vturn_time(&self) -> f64 {
        self.v1.time + self.v2.time
    }
}

/// One committed cycle.
#[derive(Debug, Clone)]
pub struct PlanStep {
    pub cycle: usize,
    pub dig: DigCandidate,
    pub action: LoadAction,
    pub perf_load: PerformanceTriple,
    pub perf_v1: PerformanceTriple,
    pub perf_v2: PerformanceTriple,
    pub perf_dump: PerformanceTriple,
    pub perf_total: PerformanceTriple,
    /// `w · P` of this cycle.
    pub objective: f64,
    /// Strategy score of the chosen candidate.
    pub score: f64,
    pub candidates: usize,
    pub predictions: usize,
    pub field_after: Arc<HeightField>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub predictions_total: usize,
    pub predictions_per_cycle: Vec<usize>,
    pub expansions_total: usize,
    #[serde(rename = "wall_time_s")]
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    RegionExhausted,
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub strategy: Strategy,
    pub steps: Vec<PlanStep>,
    pub stats: SearchStats,
    pub termination: Termination,
}

impl PlanOutcome {
    /// Sum of per-cycle objectives.
    pub fn total_objective(&self) -> f64 {
        self.steps.iter().map(|s| s.objective).sum()
    }

    pub fn totals(&self) -> PerformanceTriple {
        self.steps
            .iter()
            .fold(PerformanceTriple::default(), |acc, s| acc + s.perf_total)
    }
}

/// Counters gathered while evaluating one candidate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounts {
    pub predictions: usize,
    pub expansions: usize,
}

/// Evaluation of a top-level candidate.
#[derive(Debug, Clone)]
pub struct Scored {
    pub prediction: Prediction,
    pub score: f64,
    pub counts: EvalCounts,
    /// Pile after this candidate, when the evaluation already expanded it.
    pub expanded: Option<Arc<HeightField>>,
}

/// Total order used for every argmin: score, then V-turn time, then index.
fn better(a: (f64, f64, usize), b: (f64, f64, usize)) -> bool {
    a.0.total_cmp(&b.0)
        .then(a.1.total_cmp(&b.1))
        .then(a.2.cmp(&b.2))
        .is_lt()
}

/// Planner over a world model and a V-turn table.
pub struct Planner<'a, M: WorldModel> {
    pub model: &'a M,
    pub lut: &'a VTurnLut,
    pub norm: Normalization,
    pub config: PlannerConfig,
}

impl<'a, M: WorldModel> Planner<'a, M> {
    pub fn new(model: &'a M, lut: &'a VTurnLut, norm: Normalization, config: PlannerConfig) -> Result<Self> {
        norm.validate()?;
        config.validate()?;
        Ok(Self {
            model,
            lut,
            norm,
            config,
        })
    }

    pub fn listup(&self, field: &HeightField) -> Vec<DigCandidate> {
        listup(field, &self.config.region, &self.config.listup)
    }

    /// Scores one candidate on `field`. With `optimize` the action minimizes
    /// the loading objective; otherwise the nominal action is used.
    pub fn predict(&self, field: &HeightField, cand: &DigCandidate, optimize: bool) -> Result<Prediction> {
        let enc = self.model.encode(field, &cand.pose)?;
        let (action, load) = if optimize {
            let r = optimize_action(self.model, &enc, &self.norm, &self.config.optimize);
            (r.action, r.performance)
        } else {
            let a = LoadAction::NOMINAL;
            (a, self.model.performance(&enc, &a))
        };
        let carried = if load.is_zero_mass() { 0.0 } else { load.mass };
        let (v1, v2) = self.lut.lookup(&cand.pose.pose(), carried)?;
        let total = perf_total(&load, &v1, &v2, self.config.dump_time);
        Ok(Prediction {
            candidate: *cand,
            action,
            load,
            v1,
            v2,
            total,
            objective: self.norm.objective(&total),
        })
    }

    fn expand(&self, field: &HeightField, p: &Prediction) -> Result<HeightField> {
        Ok(self.model.predict_pile(field, &p.candidate.pose, &p.action)?.field)
    }

    /// Greedy choice on `field`: the candidate with the smallest full-cycle
    /// objective. `None` when no candidate exists.
    pub fn greedy_choice(&self, field: &HeightField, counts: &mut EvalCounts) -> Result<Option<Prediction>> {
        let optimize = self.config.rollout_actions == RolloutActions::Optimized;
        let mut best: Option<Prediction> = None;
        for cand in self.listup(field) {
            let p = self.predict(field, &cand, optimize)?;
            counts.predictions += 1;
            if best.map_or(true, |b| {
                better(
                    (p.objective, p.vturn_time(), cand.index),
                    (b.objective, b.vturn_time(), b.candidate.index),
                )
            }) {
                best = Some(p);
            }
        }
        Ok(best)
    }

    /// Depth-`depth` evaluation of candidate `cand` with `remaining` cycles
    /// left (this one included): its own objective plus a greedy rollout of
    /// up to `min(depth, remaining) - 1` further cycles.
    pub fn evaluate_q(
        &self,
        field: &HeightField,
        cand: &DigCandidate,
        depth: usize,
        remaining: usize,
    ) -> Result<Scored> {
        let mut counts = EvalCounts::default();
        let first = self.predict(field, cand, true)?;
        counts.predictions += 1;
        let mut q = first.objective;
        let levels = depth.min(remaining);
        let mut expanded = None;
        if levels >= 2 {
            let after = Arc::new(self.expand(field, &first)?);
            counts.expansions += 1;
            expanded = Some(after.clone());
            let mut pile = after;
            for level in 2..=levels {
                let Some(choice) = self.greedy_choice(&pile, &mut counts)? else {
                    break;
                };
                q += choice.objective;
                if level < levels {
                    pile = Arc::new(self.expand(&pile, &choice)?);
                    counts.expansions += 1;
                }
            }
        }
        Ok(Scored {
            prediction: first,
            score: q,
            counts,
            expanded,
        })
    }

    fn score_single(&self, field: &HeightField, cand: &DigCandidate, strategy: Strategy) -> Result<Scored> {
        let p = self.predict(field, cand, strategy != Strategy::Nominal)?;
        let score = match strategy {
            Strategy::MaxLoading => self.norm.objective(&p.load),
            Strategy::Nominal => self.norm.objective(&(transport(&p.v1) + transport(&p.v2))),
            _ => p.objective,
        };
        Ok(Scored {
            prediction: p,
            score,
            counts: EvalCounts {
                predictions: 1,
                expansions: 0,
            },
            expanded: None,
        })
    }

    /// Scores every candidate for one cycle (in parallel) and returns them in
    /// listing order.
    pub fn score_all(
        &self,
        field: &HeightField,
        cands: &[DigCandidate],
        strategy: Strategy,
        remaining: usize,
    ) -> Result<Vec<Scored>> {
        cands
            .par_iter()
            .map(|c| match strategy {
                Strategy::Tree { depth } => self.evaluate_q(field, c, depth, remaining),
                _ => self.score_single(field, c, strategy),
            })
            .collect()
    }

    /// Runs `cycles` cycles of `strategy` from `field`.
    pub fn run(&self, field: &HeightField, strategy: Strategy, cycles: usize) -> Result<PlanOutcome> {
        if cycles == 0 {
            return Err(Error::invalid("horizon must be at least one cycle"));
        }
        if let Strategy::Tree { depth } = strategy {
            if depth == 0 {
                return Err(Error::invalid("search depth must be at least 1"));
            }
        }
        let started = Instant::now();
        let mut stats = SearchStats::default();
        let mut steps = Vec::with_capacity(cycles);
        let mut pile = Arc::new(field.clone());
        let mut termination = Termination::Completed;
        for n in 1..=cycles {
            let cands = self.listup(&pile);
            if cands.is_empty() {
                termination = Termination::RegionExhausted;
                break;
            }
            let scored = self.score_all(&pile, &cands, strategy, cycles - n + 1)?;
            let mut best = 0;
            for k in 1..scored.len() {
                let key = |s: &Scored| (s.score, s.prediction.vturn_time(), s.prediction.candidate.index);
                if better(key(&scored[k]), key(&scored[best])) {
                    best = k;
                }
            }
            let predictions: usize = scored.iter().map(|s| s.counts.predictions).sum();
            stats.expansions_total += scored.iter().map(|s| s.counts.expansions).sum::<usize>();
            stats.predictions_total += predictions;
            stats.predictions_per_cycle.push(predictions);

            let chosen = &scored[best];
            let p = chosen.prediction;
            let next = match &chosen.expanded {
                Some(f) => f.clone(),
                None => {
                    stats.expansions_total += 1;
                    Arc::new(self.expand(&pile, &p)?)
                }
            };
            steps.push(PlanStep {
                cycle: n,
                dig: p.candidate,
                action: p.action,
                perf_load: p.load,
                perf_v1: transport(&p.v1),
                perf_v2: transport(&p.v2),
                perf_dump: PerformanceTriple::new(0.0, self.config.dump_time, 0.0),
                perf_total: p.total,
                objective: p.objective,
                score: chosen.score,
                candidates: cands.len(),
                predictions,
                field_after: next.clone(),
            });
            pile = next;
        }
        stats.wall_time = started.elapsed().as_secs_f64();
        Ok(PlanOutcome {
            strategy,
            steps,
            stats,
            termination,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_labels_roundtrip() {
        for s in [
            Strategy::Greedy,
            Strategy::MaxLoading,
            Strategy::Nominal,
            Strategy::Tree { depth: 4 },
        ] {
            assert_eq!(Strategy::parse(&s.label()).unwrap(), s);
        }
        assert!(Strategy::parse("tree-d0").is_err());
        assert!(Strategy::parse("random").is_err());
    }

    #[test]
    fn total_adds_dump_time_only() {
        let load = PerformanceTriple::new(3000.0, 20.0, 1e5);
        let zero = VTurnCost::default();
        let t = perf_total(&load, &zero, &zero, 5.0);
        assert_eq!(t, PerformanceTriple::new(3000.0, 25.0, 1e5));
        let v = VTurnCost {
            time: 12.0,
            work: 2e5,
            capped: false,
        };
        let t = perf_total(&load, &v, &v, 5.0);
        assert_eq!(t, PerformanceTriple::new(3000.0, 49.0, 5e5));
    }

    #[test]
    fn ordering_breaks_ties_by_time_then_index() {
        assert!(better((1.0, 5.0, 3), (1.0, 6.0, 0)));
        assert!(better((1.0, 5.0, 1), (1.0, 5.0, 2)));
        assert!(!better((1.0, 5.0, 2), (1.0, 5.0, 2)));
        assert!(better((0.5, 9.0, 9), (1.0, 0.0, 0)));
    }

    #[test]
    fn config_json_roundtrip() {
        let c = PlannerConfig::default();
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("dump_pose_m_deg"));
        let back: PlannerConfig = serde_json::from_str(&s).unwrap();
        assert!((back.dump.heading - c.dump.heading).abs() < 1e-12);
        assert_eq!(back.region, c.region);
    }
}
