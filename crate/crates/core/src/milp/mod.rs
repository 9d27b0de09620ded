//! Mixed-integer linear model of an instance.
//!
//! Every `(t, s, edge)` triple gets a binary `f_t{t}_s{s}_e{i}_{j}`. The
//! percentile is linearized with one continuous peak `y_n{i}` per billed node
//! and exclusion binaries `zout_n{i}_t{t}` / `zin_n{i}_t{t}`: in at most `k`
//! slots a node's load may exceed its peak, up to a big-M bound. The peak is
//! shared by both directions, so minimizing `sum u_i y_i` charges the larger
//! percentile.
//!
//! Rows, named after the quantity they bound:
//!
//! * `src_t{t}_s{s}`: the source sends at least one copy (exactly one under
//!   single ingest); only when the source has destinations.
//! * `dst_t{t}_s{s}_n{j}`: destination `j` receives at least one copy.
//! * `relay_t{t}_s{s}_n{j}`: a relay forwards at least as many copies as it
//!   receives; for every relay-constrained `j` outside the destinations with
//!   an in-edge in the slot.
//! * `cut_t{t}_s{s}_u{a}_{b}..`: some chosen edge enters the node set `U`,
//!   for every `U` of at least two nodes that excludes `s` and contains a
//!   destination. Together with the destination rows these force every
//!   destination to be reachable from `s`; without them a detached cycle
//!   could feed a destination.
//! * `capout_t{t}_n{i}` / `capin_t{t}_n{i}`: capacities.
//! * `pkout_n{i}_t{t}` / `pkin_n{i}_t{t}`: `load - y_i - M z <= 0`.
//! * `bout_n{i}` / `bin_n{i}`: `sum_t z <= k`.
//!
//! `M` for node `i` in slot `t` is the smaller of the capacity and
//! `sum_s w_s` times the number of eligible edges leaving (entering) `i`;
//! a single source may use several edges at a node, so `sum_s w_s` alone is
//! not an upper bound on the load.
//!
//! # Counts
//!
//! Let `B` be the billed nodes, `r = 2` when ingress is billed and 1
//! otherwise, `W_ts` the nodes other than `s` touched by `E_t`.
//!
//! | family | count |
//! |---|---|
//! | `f` | `sum_t |S_t| |E_t|` |
//! | `y` | `|B|` |
//! | `z` | `r |B| p` if `k > 0`, else 0 |
//! | source | pairs `(t, s)` with `D_ts` nonempty |
//! | destination | `sum |D_ts|` |
//! | relay | triples `(t, s, j)` as above |
//! | cut | `sum 2^|W_ts| - 2^|W_ts \ D_ts| - |W_ts ∩ D_ts|` over pairs with `D_ts` nonempty |
//! | capacity | per direction, `(t, i)` with `S_t` nonempty, `i` capacity-limited and an edge of `E_t` at `i` |
//! | peak | per direction, billed `(i, t)` with `M > 0` |
//! | budget | `r |B|` if `k > 0` |
//!
//! Rows are scaled to integer coefficients. The objective is scaled by the
//! least common denominator of the prices ([`MilpModel::objective_scale`]).

mod bnb;
mod export;

pub use bnb::{solve_milp_internal, MilpOutcome, MilpSolution};
pub use export::{export_lp, export_mps};

use std::collections::{BTreeMap, BTreeSet};

use crate::cost::kth_largest;
use crate::error::{Error, Result};
use crate::model::{AllocationPlan, Edge, Instance, NodeId};
use crate::rational::{common_denominator, Rational};

/// Largest `|W_ts|` for which cut rows are enumerated.
pub const MAX_CUT_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Out,
    In,
}

impl Direction {
    fn tag(self) -> &'static str {
        match self {
            Direction::Out => "out",
            Direction::In => "in",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarRole {
    Flow { t: usize, s: NodeId, edge: Edge, w: Rational },
    Peak { node: NodeId },
    Exclude { node: NodeId, t: usize, dir: Direction },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: Rational,
    pub upper: Option<Rational>,
    pub role: VarRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowRole {
    Source { t: usize, s: NodeId },
    Destination { t: usize, s: NodeId, node: NodeId },
    Relay { t: usize, s: NodeId, node: NodeId },
    Cut { t: usize, s: NodeId, nodes: Vec<NodeId> },
    Capacity { t: usize, node: NodeId, dir: Direction },
    Peak { node: NodeId, t: usize, dir: Direction },
    Budget { node: NodeId, dir: Direction },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    /// `(variable index, coefficient)`, sorted by index, no zeros.
    pub terms: Vec<(usize, Rational)>,
    pub sense: RowSense,
    pub rhs: Rational,
    pub role: RowRole,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MilpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Minimized. Coefficients are the prices times `objective_scale`.
    pub objective: Vec<(usize, Rational)>,
    pub objective_scale: Rational,
    pub p: usize,
    pub discard: usize,
    pub ingress_billed: bool,
}

/// Result of [`MilpModel::evaluate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    /// Names of violated rows, plus `bound:{var}` / `integer:{var}` entries.
    pub violated: Vec<String>,
    /// Unscaled objective: `sum u_i y_i`.
    pub objective: Rational,
}

impl Evaluation {
    pub fn feasible(&self) -> bool {
        self.violated.is_empty()
    }
}

fn scale_row(terms: &mut [(usize, Rational)], rhs: &mut Rational) {
    let d = common_denominator(terms.iter().map(|(_, a)| a).chain(std::iter::once(&*rhs)));
    if d != 1 {
        let f = Rational::from_int(d);
        for (_, a) in terms.iter_mut() {
            *a = *a * f;
        }
        *rhs = *rhs * f;
    }
}

struct Builder {
    model: MilpModel,
}

impl Builder {
    fn var(&mut self, name: String, kind: VarKind, role: VarRole) -> usize {
        let upper = (kind == VarKind::Binary).then_some(Rational::ONE);
        self.model.variables.push(Variable {
            name,
            kind,
            lower: Rational::ZERO,
            upper,
            role,
        });
        self.model.variables.len() - 1
    }

    fn row(&mut self, name: String, mut terms: Vec<(usize, Rational)>, sense: RowSense, mut rhs: Rational, role: RowRole) {
        terms.sort_by_key(|&(v, _)| v);
        let mut merged: Vec<(usize, Rational)> = Vec::with_capacity(terms.len());
        for (v, a) in terms {
            match merged.last_mut() {
                Some((u, b)) if *u == v => *b += a,
                _ => merged.push((v, a)),
            }
        }
        merged.retain(|(_, a)| !a.is_zero());
        scale_row(&mut merged, &mut rhs);
        self.model.constraints.push(Constraint {
            name,
            terms: merged,
            sense,
            rhs,
            role,
        });
    }
}

/// Builds the model. Fails with a resource error when a cut family would
/// range over more than [`MAX_CUT_NODES`] nodes.
pub fn encode(instance: &Instance) -> Result<MilpModel> {
    let net = instance.network();
    let p = instance.p();
    let k = instance.billing().discard_count();
    let ingress_billed = instance.tracks_ingress();
    let billed: Vec<NodeId> = net.nodes().filter(|&i| instance.is_billed(i)).collect();
    let scale = Rational::from_int(common_denominator(billed.iter().map(|&i| &net.prices()[i - 1])));
    let mut b = Builder {
        model: MilpModel {
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            objective_scale: scale,
            p,
            discard: k,
            ingress_billed,
        },
    };
    let mut flow = BTreeMap::new();
    let dirs: &[Direction] = if ingress_billed {
        &[Direction::Out, Direction::In]
    } else {
        &[Direction::Out]
    };

    for slot in instance.demands() {
        let t = slot.t;
        for (&s, d) in &slot.sources {
            for &(i, j) in &slot.edges {
                let v = b.var(
                    format!("f_t{t}_s{s}_e{i}_{j}"),
                    VarKind::Binary,
                    VarRole::Flow {
                        t,
                        s,
                        edge: (i, j),
                        w: d.w,
                    },
                );
                flow.insert((t, s, (i, j)), v);
            }
        }
    }
    let mut peak = BTreeMap::new();
    for &i in &billed {
        let v = b.var(format!("y_n{i}"), VarKind::Continuous, VarRole::Peak { node: i });
        peak.insert(i, v);
        b.model.objective.push((v, net.price(i) * scale));
    }
    let mut exclude = BTreeMap::new();
    if k > 0 {
        for &i in &billed {
            for &dir in dirs {
                for t in 1..=p {
                    let v = b.var(
                        format!("z{}_n{i}_t{t}", dir.tag()),
                        VarKind::Binary,
                        VarRole::Exclude { node: i, t, dir },
                    );
                    exclude.insert((i, t, dir), v);
                }
            }
        }
    }

    for slot in instance.demands() {
        let t = slot.t;
        for (&s, d) in &slot.sources {
            let f = |e: Edge| flow[&(t, s, e)];
            let one = Rational::ONE;
            if !d.dests.is_empty() {
                let terms = slot.edges.iter().filter(|e| e.0 == s).map(|&e| (f(e), one)).collect();
                let sense = if instance.single_ingest() { RowSense::Eq } else { RowSense::Ge };
                b.row(format!("src_t{t}_s{s}"), terms, sense, one, RowRole::Source { t, s });
            }
            for &j in &d.dests {
                let terms = slot.edges.iter().filter(|e| e.1 == j).map(|&e| (f(e), one)).collect();
                b.row(
                    format!("dst_t{t}_s{s}_n{j}"),
                    terms,
                    RowSense::Ge,
                    one,
                    RowRole::Destination { t, s, node: j },
                );
            }
            let touched: BTreeSet<NodeId> = slot.edges.iter().flat_map(|&(i, j)| [i, j]).collect();
            for &j in &touched {
                if d.dests.contains(&j) || !instance.relay_constrained(j) || !slot.edges.iter().any(|e| e.1 == j) {
                    continue;
                }
                let mut terms: Vec<(usize, Rational)> = Vec::new();
                for &e in &slot.edges {
                    if e.1 == j {
                        terms.push((f(e), one));
                    }
                    if e.0 == j {
                        terms.push((f(e), -one));
                    }
                }
                b.row(
                    format!("relay_t{t}_s{s}_n{j}"),
                    terms,
                    RowSense::Le,
                    Rational::ZERO,
                    RowRole::Relay { t, s, node: j },
                );
            }
            if d.dests.is_empty() {
                continue;
            }
            let w: Vec<NodeId> = touched.iter().copied().filter(|&v| v != s).collect();
            if w.len() > MAX_CUT_NODES {
                return Err(Error::Resource(format!(
                    "slot {t}, source {s}: {} nodes exceed the cut enumeration limit {MAX_CUT_NODES}",
                    w.len()
                )));
            }
            for mask in 1u32..1 << w.len() {
                if mask.count_ones() < 2 {
                    continue;
                }
                let set: Vec<NodeId> = (0..w.len()).filter(|b| mask >> b & 1 == 1).map(|b| w[b]).collect();
                if !set.iter().any(|v| d.dests.contains(v)) {
                    continue;
                }
                let inside: BTreeSet<NodeId> = set.iter().copied().collect();
                let terms = slot
                    .edges
                    .iter()
                    .filter(|e| inside.contains(&e.1) && !inside.contains(&e.0))
                    .map(|&e| (f(e), one))
                    .collect();
                let label: Vec<String> = set.iter().map(|v| v.to_string()).collect();
                b.row(
                    format!("cut_t{t}_s{s}_u{}", label.join("_")),
                    terms,
                    RowSense::Ge,
                    one,
                    RowRole::Cut { t, s, nodes: set },
                );
            }
        }

        if slot.sources.is_empty() {
            continue;
        }
        for i in net.nodes() {
            for &dir in &[Direction::Out, Direction::In] {
                let limited = match dir {
                    Direction::Out => instance.is_server(i),
                    Direction::In => instance.tracks_ingress(),
                };
                let at = |e: &Edge| match dir {
                    Direction::Out => e.0 == i,
                    Direction::In => e.1 == i,
                };
                let degree = slot.edges.iter().filter(|e| at(e)).count();
                if !limited || degree == 0 {
                    continue;
                }
                let mut load: Vec<(usize, Rational)> = Vec::new();
                for (&s, d) in &slot.sources {
                    for e in slot.edges.iter().filter(|e| at(e)) {
                        load.push((flow[&(t, s, *e)], d.w));
                    }
                }
                let cap = match dir {
                    Direction::Out => net.egress_cap(i),
                    Direction::In => net.ingress_cap(i),
                };
                b.row(
                    format!("cap{}_t{t}_n{i}", dir.tag()),
                    load.clone(),
                    RowSense::Le,
                    cap,
                    RowRole::Capacity { t, node: i, dir },
                );
                let Some(&y) = peak.get(&i) else { continue };
                if dir == Direction::In && !ingress_billed {
                    continue;
                }
                let total_w: Rational = slot.sources.values().map(|d| d.w).sum();
                let big_m = cap.min(total_w * Rational::from(degree));
                let mut terms = load;
                terms.push((y, -Rational::ONE));
                if let Some(&z) = exclude.get(&(i, t, dir)) {
                    terms.push((z, -big_m));
                }
                b.row(
                    format!("pk{}_n{i}_t{t}", dir.tag()),
                    terms,
                    RowSense::Le,
                    Rational::ZERO,
                    RowRole::Peak { node: i, t, dir },
                );
            }
        }
    }
    if k > 0 {
        for &i in &billed {
            for &dir in dirs {
                let terms = (1..=p).map(|t| (exclude[&(i, t, dir)], Rational::ONE)).collect();
                b.row(
                    format!("b{}_n{i}", dir.tag()),
                    terms,
                    RowSense::Le,
                    Rational::from(k),
                    RowRole::Budget { node: i, dir },
                );
            }
        }
    }
    // Peak rows were emitted per slot; keep the documented family order.
    b.model.constraints.sort_by_key(|c| match c.role {
        RowRole::Peak { .. } => 1,
        RowRole::Budget { .. } => 2,
        _ => 0,
    });
    Ok(b.model)
}

impl MilpModel {
    pub fn count_kind(&self, kind: VarKind) -> usize {
        self.variables.iter().filter(|v| v.kind == kind).count()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Checks bounds, integrality and every row; the objective is unscaled.
    pub fn evaluate(&self, values: &[Rational]) -> Result<Evaluation> {
        if values.len() != self.variables.len() {
            return Err(Error::Model(format!(
                "expected {} values, got {}",
                self.variables.len(),
                values.len()
            )));
        }
        let mut violated = Vec::new();
        for (v, x) in self.variables.iter().zip(values) {
            if *x < v.lower || v.upper.is_some_and(|u| *x > u) {
                violated.push(format!("bound:{}", v.name));
            }
            if v.kind != VarKind::Continuous && !x.is_integer() {
                violated.push(format!("integer:{}", v.name));
            }
        }
        for c in &self.constraints {
            let lhs: Rational = c.terms.iter().map(|&(v, a)| a * values[v]).sum();
            let ok = match c.sense {
                RowSense::Le => lhs <= c.rhs,
                RowSense::Ge => lhs >= c.rhs,
                RowSense::Eq => lhs == c.rhs,
            };
            if !ok {
                violated.push(c.name.clone());
            }
        }
        Ok(Evaluation {
            violated,
            objective: self.objective_value(values),
        })
    }

    pub fn objective_value(&self, values: &[Rational]) -> Rational {
        let scaled: Rational = self.objective.iter().map(|&(v, c)| c * values[v]).sum();
        scaled / self.objective_scale
    }

    /// The edge sets selected by the flow binaries.
    pub fn plan_from_values(&self, values: &[Rational]) -> AllocationPlan {
        let mut plan = AllocationPlan::new();
        for (v, x) in self.variables.iter().zip(values) {
            if let VarRole::Flow { t, s, edge, .. } = v.role {
                plan.ensure(t, s);
                if *x == Rational::ONE {
                    plan.insert(t, s, edge);
                }
            }
        }
        plan
    }

    /// Assignment of `plan` with the cheapest peaks: each node excludes its
    /// `k` largest slots (earliest first among equals) and its peak is the
    /// larger percentile. Edges without a flow binary are a model error.
    pub fn assignment(&self, plan: &AllocationPlan) -> Result<Vec<Rational>> {
        let mut values = vec![Rational::ZERO; self.variables.len()];
        let mut index = BTreeMap::new();
        for (v, var) in self.variables.iter().enumerate() {
            if let VarRole::Flow { t, s, edge, .. } = var.role {
                index.insert((t, s, edge), v);
            }
        }
        for (t, s, edges) in plan.iter() {
            for &e in edges {
                let v = index
                    .get(&(t, s, e))
                    .ok_or_else(|| Error::Model(format!("no variable for slot {t}, source {s}, edge {e:?}")))?;
                values[*v] = Rational::ONE;
            }
        }
        self.complete_peaks(&mut values);
        Ok(values)
    }

    /// Loads per `(node, direction)` implied by the flow values.
    pub(crate) fn loads(&self, values: &[Rational]) -> BTreeMap<(NodeId, Direction), Vec<Rational>> {
        let mut loads: BTreeMap<(NodeId, Direction), Vec<Rational>> = BTreeMap::new();
        for (var, x) in self.variables.iter().zip(values) {
            if let VarRole::Flow { t, edge: (i, j), w, .. } = var.role {
                if x.is_zero() {
                    continue;
                }
                for (node, dir) in [(i, Direction::Out), (j, Direction::In)] {
                    loads.entry((node, dir)).or_insert_with(|| vec![Rational::ZERO; self.p])[t - 1] += w * *x;
                }
            }
        }
        loads
    }

    /// Sets every peak and exclusion variable to its cheapest value for the
    /// flow part of `values`.
    pub(crate) fn complete_peaks(&self, values: &mut [Rational]) {
        let loads = self.loads(values);
        let zero = vec![Rational::ZERO; self.p];
        let mut peaks = BTreeMap::new();
        let mut excluded = BTreeSet::new();
        for var in &self.variables {
            let VarRole::Peak { node } = var.role else { continue };
            let mut y = Rational::ZERO;
            for dir in [Direction::Out, Direction::In] {
                if dir == Direction::In && !self.ingress_billed {
                    continue;
                }
                let series = loads.get(&(node, dir)).unwrap_or(&zero);
                y = y.max(kth_largest(series, self.discard));
                let mut order: Vec<usize> = (0..self.p).collect();
                order.sort_by(|&a, &b| series[b].cmp(&series[a]).then(a.cmp(&b)));
                for &t in order.iter().take(self.discard) {
                    excluded.insert((node, t + 1, dir));
                }
            }
            peaks.insert(node, y);
        }
        for (var, x) in self.variables.iter().zip(values.iter_mut()) {
            match var.role {
                VarRole::Peak { node } => *x = peaks[&node],
                VarRole::Exclude { node, t, dir } => *x = Rational::from(usize::from(excluded.contains(&(node, t, dir)))),
                VarRole::Flow { .. } => {}
            }
        }
    }
}
