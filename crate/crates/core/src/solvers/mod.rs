//! Exact and heuristic solvers.
//!
//! * [`solve_exact`] enumerates covering out-arborescences per `(t, s)` and
//!   searches their cross product; desk-scale only.
//! * [`solve_greedy`] grows one tree per source with cheapest marginal-cost
//!   paths.
//! * [`improve_local`] hill-climbs from a feasible plan.

mod arborescence;
mod exact;
mod greedy;
mod local;

use serde::{Deserialize, Serialize};

pub use arborescence::covering_arborescences;
pub use exact::{solve_exact, ExactLimits};
pub use greedy::solve_greedy;
pub use local::improve_local;

use crate::io::{to_pretty, PlanFile};
use crate::model::AllocationPlan;
use crate::rational::Rational;

pub const REPORT_SCHEMA: &str = "nba-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    ProvenOptimal,
    Heuristic,
    Infeasible,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveStats {
    /// Candidate trees (exact) or plans (oracles) generated.
    pub enumerated: u64,
    /// Search nodes visited by the exact product search.
    pub nodes_explored: u64,
    /// Improving moves applied by local search.
    pub moves_applied: u64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub plan: AllocationPlan,
    /// `None` when infeasible.
    pub cost: Option<Rational>,
    pub stats: SolveStats,
    /// Cost after each accepted step, starting with the input cost
    /// (local search only).
    pub trace: Vec<Rational>,
}

impl SolveReport {
    pub(crate) fn infeasible(stats: SolveStats) -> Self {
        SolveReport {
            status: SolveStatus::Infeasible,
            plan: AllocationPlan::new(),
            cost: None,
            stats,
            trace: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        to_pretty(&ReportFile::from(self))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema: String,
    pub status: SolveStatus,
    pub cost: Option<Rational>,
    pub plan: PlanFile,
    pub stats: SolveStats,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<Rational>,
}

impl From<&SolveReport> for ReportFile {
    fn from(r: &SolveReport) -> Self {
        ReportFile {
            schema: REPORT_SCHEMA.to_string(),
            status: r.status,
            cost: r.cost,
            plan: PlanFile::from(&r.plan),
            stats: r.stats.clone(),
            trace: r.trace.clone(),
        }
    }
}

pub(crate) fn elapsed_ms(start: std::time::Instant) -> u64 {
    start.elapsed().as_millis() as u64
}
