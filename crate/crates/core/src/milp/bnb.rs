//! Depth-first branch and bound over the flow binaries.
//!
//! Peaks and exclusions are never branched on: once the flows are fixed the
//! cheapest peak of a node is its percentile load, which
//! [`MilpModel::complete_peaks`] sets directly. Rows over flow binaries only
//! are propagated by activity bounds (a free binary whose value would make a
//! row unsatisfiable is fixed to the other value). The bound at a node is
//! the objective of the loads already forced to 1, which never exceeds the
//! cost of any completion because loads only grow.

use super::{MilpModel, RowRole, RowSense, VarKind, VarRole};
use crate::cost::kth_largest;
use crate::error::{Error, Result};
use crate::model::NodeId;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MilpSolution {
    /// One value per model variable.
    pub values: Vec<Rational>,
    /// Unscaled objective, `sum u_i y_i`.
    pub objective: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MilpOutcome {
    Optimal { solution: MilpSolution, nodes: u64 },
    Infeasible { nodes: u64 },
    Unsolved { nodes: u64 },
}

struct Row {
    terms: Vec<(usize, Rational)>,
    sense: RowSense,
    rhs: Rational,
    lo: Rational,
    hi: Rational,
}

impl Row {
    fn violated(&self) -> bool {
        match self.sense {
            RowSense::Le => self.lo > self.rhs,
            RowSense::Ge => self.hi < self.rhs,
            RowSense::Eq => self.lo > self.rhs || self.hi < self.rhs,
        }
    }
}

struct Search<'a> {
    model: &'a MilpModel,
    /// Flow variable positions in the model, in branching order.
    flows: Vec<usize>,
    /// Per flow: (slot, tail, head, weight).
    meta: Vec<(usize, NodeId, NodeId, Rational)>,
    rows: Vec<Row>,
    /// Per flow: (row, coefficient).
    occurs: Vec<Vec<(usize, Rational)>>,
    value: Vec<Option<bool>>,
    trail: Vec<usize>,
    out_load: Vec<Vec<Rational>>,
    in_load: Vec<Vec<Rational>>,
    prices: Vec<(NodeId, Rational)>,
    best: Option<(Rational, Vec<bool>)>,
    nodes: u64,
    budget: u64,
}

impl Search<'_> {
    fn set(&mut self, f: usize, on: bool) -> bool {
        debug_assert!(self.value[f].is_none());
        self.value[f] = Some(on);
        self.trail.push(f);
        if on {
            let (t, i, j, w) = self.meta[f];
            self.out_load[i][t - 1] += w;
            self.in_load[j][t - 1] += w;
        }
        let mut ok = true;
        for &(r, a) in &self.occurs[f] {
            let row = &mut self.rows[r];
            match (on, a.is_positive()) {
                (true, true) => row.lo += a,
                (true, false) => row.hi += a,
                (false, true) => row.hi -= a,
                (false, false) => row.lo -= a,
            }
            ok &= !row.violated();
        }
        ok
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let f = self.trail.pop().expect("trail entry");
            let on = self.value[f].take().expect("assigned");
            if on {
                let (t, i, j, w) = self.meta[f];
                self.out_load[i][t - 1] -= w;
                self.in_load[j][t - 1] -= w;
            }
            for &(r, a) in &self.occurs[f] {
                let row = &mut self.rows[r];
                match (on, a.is_positive()) {
                    (true, true) => row.lo -= a,
                    (true, false) => row.hi -= a,
                    (false, true) => row.hi += a,
                    (false, false) => row.lo += a,
                }
            }
        }
    }

    /// Fixes forced binaries until nothing changes; false on conflict.
    fn propagate(&mut self) -> bool {
        loop {
            let mut forced: Option<(usize, bool)> = None;
            'rows: for row in &self.rows {
                for &(f, a) in &row.terms {
                    if self.value[f].is_some() {
                        continue;
                    }
                    // Effect of setting to 1 (raising lo or lowering hi) and to 0.
                    let (lo1, hi1, lo0, hi0) = if a.is_positive() {
                        (row.lo + a, row.hi, row.lo, row.hi - a)
                    } else {
                        (row.lo, row.hi + a, row.lo - a, row.hi)
                    };
                    let bad = |lo: Rational, hi: Rational| match row.sense {
                        RowSense::Le => lo > row.rhs,
                        RowSense::Ge => hi < row.rhs,
                        RowSense::Eq => lo > row.rhs || hi < row.rhs,
                    };
                    if bad(lo1, hi1) {
                        forced = Some((f, false));
                        break 'rows;
                    }
                    if bad(lo0, hi0) {
                        forced = Some((f, true));
                        break 'rows;
                    }
                }
            }
            match forced {
                None => return true,
                Some((f, on)) => {
                    if !self.set(f, on) {
                        return false;
                    }
                }
            }
        }
    }

    fn bound(&self) -> Rational {
        let k = self.model.discard;
        self.prices
            .iter()
            .map(|&(i, u)| {
                let mut y = kth_largest(&self.out_load[i], k);
                if self.model.ingress_billed {
                    y = y.max(kth_largest(&self.in_load[i], k));
                }
                u * y
            })
            .sum()
    }

    fn dfs(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        let mark = self.trail.len();
        if self.propagate() {
            let bound = self.bound();
            if self.best.as_ref().is_none_or(|(b, _)| bound < *b) {
                match self.value.iter().position(Option::is_none) {
                    None => {
                        let assignment = self.value.iter().map(|v| v.expect("complete")).collect();
                        self.best = Some((bound, assignment));
                    }
                    Some(f) => {
                        for on in [false, true] {
                            let inner = self.trail.len();
                            if self.set(f, on) && !self.dfs() {
                                self.undo(mark);
                                return false;
                            }
                            self.undo(inner);
                        }
                    }
                }
            }
        }
        self.undo(mark);
        true
    }
}

fn malformed<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Model(msg.into()))
}

/// Proven optimum of a model built by [`encode`](super::encode), or
/// `Unsolved` once more than `budget` search nodes would be needed. The
/// first optimal assignment in branching order (0 before 1, model order) is
/// returned.
pub fn solve_milp_internal(model: &MilpModel, budget: u64) -> Result<MilpOutcome> {
    let nvars = model.variables.len();
    let mut position = vec![usize::MAX; nvars];
    let mut flows = Vec::new();
    let mut meta = Vec::new();
    let mut max_node = 0;
    for (v, var) in model.variables.iter().enumerate() {
        if let VarRole::Flow { t, edge: (i, j), w, .. } = var.role {
            if var.kind != VarKind::Binary || t == 0 || t > model.p {
                return malformed(format!("flow variable {} is not a binary of a valid slot", var.name));
            }
            position[v] = flows.len();
            flows.push(v);
            meta.push((t, i, j, w));
            max_node = max_node.max(i).max(j);
        }
    }
    let mut prices = Vec::new();
    for &(v, c) in &model.objective {
        let Some(var) = model.variables.get(v) else {
            return malformed(format!("objective refers to variable {v}"));
        };
        let VarRole::Peak { node } = var.role else {
            return malformed(format!("objective term on non-peak variable {}", var.name));
        };
        max_node = max_node.max(node);
        prices.push((node, c / model.objective_scale));
    }
    let mut rows = Vec::new();
    let mut occurs = vec![Vec::new(); flows.len()];
    for c in &model.constraints {
        if let Some(&(v, _)) = c.terms.iter().find(|&&(v, _)| v >= nvars) {
            return malformed(format!("row {} refers to variable {v}", c.name));
        }
        let flow_only = c.terms.iter().all(|&(v, _)| position[v] != usize::MAX);
        match (&c.role, flow_only) {
            (RowRole::Peak { .. } | RowRole::Budget { .. }, _) => continue,
            (_, false) => return malformed(format!("row {} mixes flow and peak variables", c.name)),
            (_, true) => {}
        }
        let r = rows.len();
        let terms: Vec<(usize, Rational)> = c.terms.iter().map(|&(v, a)| (position[v], a)).collect();
        let lo = terms.iter().map(|&(_, a)| a.min(Rational::ZERO)).sum();
        let hi = terms.iter().map(|&(_, a)| a.max(Rational::ZERO)).sum();
        for &(f, a) in &terms {
            occurs[f].push((r, a));
        }
        rows.push(Row {
            terms,
            sense: c.sense,
            rhs: c.rhs,
            lo,
            hi,
        });
    }

    let mut search = Search {
        model,
        flows,
        meta,
        occurs,
        value: vec![None; position.iter().filter(|&&p| p != usize::MAX).count()],
        trail: Vec::new(),
        out_load: vec![vec![Rational::ZERO; model.p]; max_node + 1],
        in_load: vec![vec![Rational::ZERO; model.p]; max_node + 1],
        prices,
        rows,
        best: None,
        nodes: 0,
        budget,
    };
    let feasible_root = search.rows.iter().all(|r| !r.violated());
    let finished = !feasible_root || search.dfs();
    let nodes = search.nodes;
    if !finished {
        return Ok(MilpOutcome::Unsolved { nodes });
    }
    let Some((_, assignment)) = search.best.take() else {
        return Ok(MilpOutcome::Infeasible { nodes });
    };
    let mut values = vec![Rational::ZERO; nvars];
    for (f, &on) in assignment.iter().enumerate() {
        if on {
            values[search.flows[f]] = Rational::ONE;
        }
    }
    model.complete_peaks(&mut values);
    let eval = model.evaluate(&values)?;
    if !eval.feasible() {
        return malformed(format!("completed assignment violates {}", eval.violated.join(", ")));
    }
    Ok(MilpOutcome::Optimal {
        solution: MilpSolution {
            values,
            objective: eval.objective,
        },
        nodes,
    })
}
