//! Oracles shared by the integration tests. None of them calls the solver or
//! cost code under test except where noted.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use nba_core::gen::{generate_instance, GenSpec};
use nba_core::milp::{MilpModel, RowSense, VarKind};
use nba_core::model::{AllocationPlan, Edge, Instance, NodeId};
use nba_core::scenarios::{CdnInstance, CloudWanInstance, RtcnInstance};
use nba_core::{check_feasible, Rational};

pub fn r(v: i128) -> Rational {
    Rational::from_int(v)
}

/// Sort descending, drop `floor((1 - q) p)` entries, take the next one.
pub fn sort_percentile(series: &[Rational], q: Rational) -> Rational {
    let p = series.len() as i128;
    let drop = ((q.denom() - q.numer()) * p / q.denom()) as usize;
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| b.cmp(a));
    sorted[drop]
}

/// Total cost recomputed from scratch with [`sort_percentile`].
pub fn oracle_cost(instance: &Instance, plan: &AllocationPlan) -> Rational {
    let net = instance.network();
    let p = instance.p();
    let q = instance.billing().q();
    let mut out = vec![vec![Rational::ZERO; p]; instance.n() + 1];
    let mut inn = vec![vec![Rational::ZERO; p]; instance.n() + 1];
    for (t, s, edges) in plan.iter() {
        let w = instance.slot(t).sources[&s].w;
        for &(i, j) in edges {
            out[i][t - 1] += w;
            inn[j][t - 1] += w;
        }
    }
    let mut total = Rational::ZERO;
    for i in 1..=instance.n() {
        if !instance.is_billed(i) {
            continue;
        }
        let mut charge = sort_percentile(&out[i], q);
        if instance.tracks_ingress() {
            charge = charge.max(sort_percentile(&inn[i], q));
        }
        total += net.price(i) * charge;
    }
    total
}

/// Every subset of `edges`, as bit masks over the sorted edge list.
fn subsets(edges: &[Edge]) -> impl Iterator<Item = BTreeSet<Edge>> + '_ {
    (0u64..1 << edges.len()).map(move |mask| {
        edges
            .iter()
            .enumerate()
            .filter(|(b, _)| mask >> b & 1 == 1)
            .map(|(_, &e)| e)
            .collect()
    })
}

/// Keeps one subset per degree vector and drops subsets whose per-node
/// (out, in) degrees dominate another's. Loads, capacity use and cost are
/// monotone in these degrees, so the minimum survives.
fn pareto(candidates: Vec<BTreeSet<Edge>>) -> Vec<BTreeSet<Edge>> {
    let degree = |set: &BTreeSet<Edge>| {
        let mut d: BTreeMap<(NodeId, bool), usize> = BTreeMap::new();
        for &(i, j) in set {
            *d.entry((i, true)).or_default() += 1;
            *d.entry((j, false)).or_default() += 1;
        }
        d
    };
    let mut unique: BTreeMap<Vec<((NodeId, bool), usize)>, BTreeSet<Edge>> = BTreeMap::new();
    for c in candidates {
        let key: Vec<_> = degree(&c).into_iter().collect();
        unique.entry(key).or_insert(c);
    }
    let items: Vec<(BTreeMap<(NodeId, bool), usize>, BTreeSet<Edge>)> =
        unique.into_iter().map(|(k, v)| (k.into_iter().collect(), v)).collect();
    let le = |a: &BTreeMap<(NodeId, bool), usize>, b: &BTreeMap<(NodeId, bool), usize>| {
        a.iter().all(|(key, &v)| b.get(key).copied().unwrap_or(0) >= v)
    };
    items
        .iter()
        .filter(|(d, _)| !items.iter().any(|(e, _)| e != d && le(e, d)))
        .map(|(_, s)| s.clone())
        .collect()
}

/// Structure-agnostic optimum: every edge subset of every `(t, s)`,
/// reduced per pair by the pair's own constraints and degree dominance,
/// then the full product filtered by `check_feasible`. `None` when no
/// feasible plan exists.
pub fn brute_force(instance: &Instance) -> Option<(Rational, AllocationPlan)> {
    let pairs = instance.pairs();
    let mut options: Vec<Vec<BTreeSet<Edge>>> = Vec::new();
    for &(t, s) in &pairs {
        let edges: Vec<Edge> = instance.slot(t).edges.iter().copied().collect();
        assert!(edges.len() <= 16, "oracle is exponential in the edge count");
        let ok: Vec<BTreeSet<Edge>> = subsets(&edges)
            .filter(|set| {
                let mut plan = AllocationPlan::empty_for(instance);
                plan.set_edges(t, s, set.clone());
                check_feasible(instance, &plan)
                    .iter()
                    .all(|v| v.t != t || v.s.is_some_and(|x| x != s))
            })
            .collect();
        if ok.is_empty() {
            return None;
        }
        options.push(pareto(ok));
    }
    let mut best: Option<(Rational, AllocationPlan)> = None;
    let mut choice = vec![0usize; pairs.len()];
    loop {
        let mut plan = AllocationPlan::empty_for(instance);
        for (x, &(t, s)) in pairs.iter().enumerate() {
            plan.set_edges(t, s, options[x][choice[x]].clone());
        }
        if check_feasible(instance, &plan).is_empty() {
            let cost = oracle_cost(instance, &plan);
            if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                best = Some((cost, plan));
            }
        }
        let mut x = 0;
        while x < pairs.len() && choice[x] + 1 == options[x].len() {
            choice[x] = 0;
            x += 1;
        }
        if x == pairs.len() {
            return best;
        }
        choice[x] += 1;
    }
}

/// Tiny generic instances: n in 2..=4, p in 1..=2, at most two sources,
/// alternating percentiles so some instances have a free slot.
pub fn tiny_instances(count: usize, seed: u64) -> Vec<Instance> {
    (0..count as u64)
        .map(|x| {
            let mut spec = GenSpec::generic(seed + x, 2 + (x % 3) as usize, 1 + (x / 3 % 2) as usize);
            spec.density = [Rational::new(1, 2), Rational::new(2, 3), Rational::ONE][(x / 6 % 3) as usize];
            spec.q = if x % 4 == 3 { Rational::new(1, 2) } else { Rational::new(95, 100) };
            spec.sources = [1, 2.min(spec.n)];
            spec.dests = [0, spec.n - 1];
            spec.capacity = [4, 12];
            spec.feasible = x % 10 != 9;
            generate_instance(&spec).expect("valid spec")
        })
        .collect()
}

/// Direct brute force of the group-communication model: every stream (a
/// participant within one group) picks exactly one upload edge and any set
/// of server-to-server and server-to-member edges, such that every other
/// member is reachable and every server forwards at least as many copies as
/// it receives. Only server egress is billed and capacity-limited.
pub fn rtcn_brute_force(rtcn: &RtcnInstance) -> Option<Rational> {
    let n = rtcn.servers;
    let p = rtcn.slots.len();
    let k = rtcn.billing.config().unwrap().discard_count();
    // Per stream: (slot, weight, options as edge sets).
    let mut streams: Vec<(usize, Rational, Vec<BTreeSet<Edge>>)> = Vec::new();
    for slot in &rtcn.slots {
        let edges: BTreeSet<Edge> = slot.edges.iter().map(|&[i, j]| (i, j)).collect();
        for group in &slot.groups {
            for &a in group {
                let w = slot.participants.iter().find(|x| x.id == a).unwrap().w;
                let members: BTreeSet<NodeId> = group.iter().copied().filter(|&m| m != a).collect();
                let allowed: Vec<Edge> = edges
                    .iter()
                    .copied()
                    .filter(|&(i, j)| {
                        (i == a && j <= n) || (i <= n && j <= n) || (i <= n && members.contains(&j))
                    })
                    .collect();
                let valid: Vec<BTreeSet<Edge>> = subsets(&allowed)
                    .filter(|set| {
                        if set.iter().filter(|e| e.0 == a).count() != 1 {
                            return false;
                        }
                        let mut reach = BTreeSet::from([a]);
                        loop {
                            let before = reach.len();
                            for &(i, j) in set {
                                if reach.contains(&i) {
                                    reach.insert(j);
                                }
                            }
                            if reach.len() == before {
                                break;
                            }
                        }
                        if !members.iter().all(|m| reach.contains(m)) {
                            return false;
                        }
                        (1..=n).all(|v| {
                            set.iter().filter(|e| e.1 == v).count() <= set.iter().filter(|e| e.0 == v).count()
                        })
                    })
                    .map(|set| set.into_iter().filter(|e| e.0 <= n).collect())
                    .collect();
                if valid.is_empty() {
                    return None;
                }
                // Dominance on server out-degrees only.
                let deg = |set: &BTreeSet<Edge>| {
                    (1..=n).map(|v| set.iter().filter(|e| e.0 == v).count()).collect::<Vec<_>>()
                };
                let mut by_deg: BTreeMap<Vec<usize>, BTreeSet<Edge>> = BTreeMap::new();
                for v in valid {
                    by_deg.entry(deg(&v)).or_insert(v);
                }
                let keys: Vec<Vec<usize>> = by_deg.keys().cloned().collect();
                let minimal: Vec<BTreeSet<Edge>> = keys
                    .iter()
                    .filter(|d| !keys.iter().any(|e| e != *d && e.iter().zip(d.iter()).all(|(x, y)| x <= y)))
                    .map(|d| by_deg[d].clone())
                    .collect();
                streams.push((slot.t, w, minimal));
            }
        }
    }
    let mut best: Option<Rational> = None;
    let mut choice = vec![0usize; streams.len()];
    loop {
        let mut load = vec![vec![Rational::ZERO; p]; n + 1];
        for (x, (t, w, options)) in streams.iter().enumerate() {
            for &(i, _) in &options[choice[x]] {
                if (1..=n).contains(&i) {
                    load[i][t - 1] += *w;
                }
            }
        }
        let fits = (1..=n).all(|i| load[i].iter().all(|&l| l <= rtcn.caps[i - 1]));
        if fits {
            let cost: Rational = (1..=n)
                .map(|i| {
                    let mut sorted = load[i].clone();
                    sorted.sort_by(|a, b| b.cmp(a));
                    rtcn.prices[i - 1] * sorted[k]
                })
                .sum();
            if best.is_none_or(|b| cost < b) {
                best = Some(cost);
            }
        }
        let mut x = 0;
        while x < streams.len() && choice[x] + 1 == streams[x].2.len() {
            choice[x] = 0;
            x += 1;
        }
        if x == streams.len() {
            return best;
        }
        choice[x] += 1;
    }
}

/// Coefficient view used to compare a model with a parsed export.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Matrix {
    pub objective: BTreeMap<String, Rational>,
    /// row -> (sense, rhs)
    pub rows: BTreeMap<String, (char, Rational)>,
    pub entries: BTreeMap<(String, String), Rational>,
    pub binaries: BTreeSet<String>,
    pub generals: BTreeSet<String>,
    pub columns: BTreeSet<String>,
}

pub fn model_matrix(model: &MilpModel) -> Matrix {
    let mut m = Matrix::default();
    let name = |v: usize| model.variables[v].name.clone();
    for v in &model.variables {
        m.columns.insert(v.name.clone());
        match v.kind {
            VarKind::Binary => m.binaries.insert(v.name.clone()),
            VarKind::Integer => m.generals.insert(v.name.clone()),
            VarKind::Continuous => false,
        };
    }
    for &(v, c) in &model.objective {
        m.objective.insert(name(v), c);
    }
    for c in &model.constraints {
        let sense = match c.sense {
            RowSense::Le => 'L',
            RowSense::Ge => 'G',
            RowSense::Eq => 'E',
        };
        m.rows.insert(c.name.clone(), (sense, c.rhs));
        for &(v, a) in &c.terms {
            m.entries.insert((c.name.clone(), name(v)), a);
        }
    }
    m
}

fn number(tok: &str) -> Option<Rational> {
    if tok.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        tok.parse().ok()
    } else {
        None
    }
}

/// `[+|-] [coef] name ...` into (name, coef) pairs, zero terms dropped.
fn linear(tokens: &[&str]) -> BTreeMap<String, Rational> {
    let mut out = BTreeMap::new();
    let mut sign = Rational::ONE;
    let mut coef: Option<Rational> = None;
    for &tok in tokens {
        match tok {
            "+" => sign = Rational::ONE,
            "-" => sign = -Rational::ONE,
            _ => {
                if let Some(c) = number(tok) {
                    coef = Some(c);
                } else {
                    let value = sign * coef.unwrap_or(Rational::ONE);
                    if !value.is_zero() {
                        *out.entry(tok.to_string()).or_insert(Rational::ZERO) += value;
                    }
                    sign = Rational::ONE;
                    coef = None;
                }
            }
        }
    }
    out
}

/// Reads the CPLEX LP subset written by `export_lp`.
pub fn read_lp(text: &str) -> Matrix {
    let mut m = Matrix::default();
    let mut section = "";
    let mut statement: Vec<String> = Vec::new();
    let flush = |section: &str, st: &mut Vec<String>, m: &mut Matrix| {
        if st.is_empty() {
            return;
        }
        let name = st[0].trim_end_matches(':').to_string();
        let body: Vec<&str> = st[1..].iter().map(String::as_str).collect();
        if section == "minimize" {
            m.objective = linear(&body);
        } else {
            let op = body.iter().position(|t| matches!(*t, "<=" | ">=" | "=")).expect("relation");
            let sense = match body[op] {
                "<=" => 'L',
                ">=" => 'G',
                _ => 'E',
            };
            let rhs = number(body[op + 1].trim_start_matches('-'))
                .map(|v| if body[op + 1].starts_with('-') { -v } else { v })
                .expect("rhs");
            for (var, a) in linear(&body[..op]) {
                m.entries.insert((name.clone(), var), a);
            }
            m.rows.insert(name, (sense, rhs));
        }
        st.clear();
    };
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.starts_with('\\') || trimmed.is_empty() {
            continue;
        }
        let lower = trimmed.to_ascii_lowercase();
        if matches!(
            lower.as_str(),
            "minimize" | "subject to" | "bounds" | "binaries" | "generals" | "end"
        ) {
            flush(section, &mut statement, &mut m);
            section = match lower.as_str() {
                "minimize" => "minimize",
                "subject to" => "rows",
                "bounds" => "bounds",
                "binaries" => "binaries",
                "generals" => "generals",
                _ => "end",
            };
            continue;
        }
        match section {
            "minimize" | "rows" => {
                for tok in trimmed.split_whitespace() {
                    if tok.ends_with(':') {
                        flush(section, &mut statement, &mut m);
                    }
                    statement.push(tok.to_string());
                }
            }
            "bounds" => {
                for tok in trimmed.split_whitespace() {
                    if number(tok).is_none() && !matches!(tok, "<=" | ">=") {
                        m.columns.insert(tok.to_string());
                    }
                }
            }
            "binaries" => {
                m.binaries.insert(trimmed.to_string());
                m.columns.insert(trimmed.to_string());
            }
            "generals" => {
                m.generals.insert(trimmed.to_string());
                m.columns.insert(trimmed.to_string());
            }
            _ => {}
        }
    }
    flush(section, &mut statement, &mut m);
    for (_, v) in m.entries.keys() {
        m.columns.insert(v.clone());
    }
    for v in m.objective.keys() {
        m.columns.insert(v.clone());
    }
    m
}

/// Reads fixed-column MPS by field positions, mapping positional names back
/// through the `* label name` comment block.
pub fn read_mps(text: &str) -> Matrix {
    let mut m = Matrix::default();
    let mut names: BTreeMap<String, String> = BTreeMap::new();
    let mut section = String::new();
    let mut integral = false;
    let mut objective_row = String::new();
    let field = |line: &str, a: usize, b: usize| -> String {
        line.get(a..b.min(line.len())).unwrap_or("").trim().to_string()
    };
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("* ") {
            let mut parts = rest.split_whitespace();
            if let (Some(label), Some(name)) = (parts.next(), parts.next()) {
                if label.len() == 8 && (label.starts_with('R') || label.starts_with('C')) {
                    names.insert(label.to_string(), name.to_string());
                }
            }
            continue;
        }
        if !line.starts_with(' ') {
            section = line.split_whitespace().next().unwrap_or("").to_string();
            continue;
        }
        let (f1, f2, f3, f4, f5, f6) = (
            field(line, 1, 3),
            field(line, 4, 12),
            field(line, 14, 22),
            field(line, 24, 36),
            field(line, 39, 47),
            field(line, 49, 61),
        );
        let real = |label: &str| names.get(label).cloned().unwrap_or_else(|| label.to_string());
        match section.as_str() {
            "ROWS" => {
                let sense = f1.chars().next().unwrap();
                if sense == 'N' {
                    objective_row = f2;
                } else {
                    m.rows.insert(real(&f2), (sense, Rational::ZERO));
                }
            }
            "COLUMNS" => {
                if f3 == "'MARKER'" {
                    integral = f5 == "'INTORG'";
                    continue;
                }
                let col = real(&f2);
                m.columns.insert(col.clone());
                if integral {
                    m.binaries.insert(col.clone());
                }
                for (row, value) in [(f3, f4), (f5, f6)] {
                    if row.is_empty() {
                        continue;
                    }
                    let v: Rational = value.parse().expect("coefficient");
                    if v.is_zero() {
                        continue;
                    }
                    if row == objective_row {
                        m.objective.insert(col.clone(), v);
                    } else {
                        m.entries.insert((real(&row), col.clone()), v);
                    }
                }
            }
            "RHS" => {
                for (row, value) in [(f3, f4), (f5, f6)] {
                    if !row.is_empty() {
                        m.rows.get_mut(&real(&row)).expect("known row").1 = value.parse().expect("rhs");
                    }
                }
            }
            "BOUNDS" => {
                // Integer columns bounded by UP 1 are the binaries.
                let col = real(&f3);
                if f1 == "UP" && f4 != "1" {
                    m.binaries.remove(&col);
                }
            }
            _ => {}
        }
    }
    m
}

/// Complete digraph on three nodes, one slot, source 1 sending to {2, 3},
/// unit prices and weight.
pub fn triangle() -> Instance {
    use nba_core::model::{BillingConfig, Network, SlotDemand};
    let net = Network::complete(3, r(1), r(10)).unwrap();
    let edges = net.edges().clone();
    let slot = SlotDemand::new(1, edges).with_source(1, r(1), [2, 3]);
    Instance::new(net, BillingConfig::percentile95(1).unwrap(), vec![slot]).unwrap()
}

pub fn plan_of(pairs: &[(usize, NodeId, &[Edge])]) -> AllocationPlan {
    let mut plan = AllocationPlan::new();
    for &(t, s, edges) in pairs {
        plan.set_edges(t, s, edges.iter().copied().collect());
    }
    plan
}

/// Whether the edge set contains a directed cycle.
pub fn has_cycle(edges: &BTreeSet<Edge>) -> bool {
    let nodes: BTreeSet<NodeId> = edges.iter().flat_map(|&(i, j)| [i, j]).collect();
    let mut indeg: BTreeMap<NodeId, usize> = nodes.iter().map(|&v| (v, 0)).collect();
    for &(_, j) in edges {
        *indeg.get_mut(&j).unwrap() += 1;
    }
    let mut queue: Vec<NodeId> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&v, _)| v).collect();
    let mut seen = 0;
    while let Some(v) = queue.pop() {
        seen += 1;
        for &(_, j) in edges.iter().filter(|e| e.0 == v) {
            let d = indeg.get_mut(&j).unwrap();
            *d -= 1;
            if *d == 0 {
                queue.push(j);
            }
        }
    }
    seen < nodes.len()
}

/// Minimum CDN cost over every customer assignment, recomputing loads,
/// upstream traffic and percentiles from the instance fields.
pub fn cdn_brute_force(cdn: &CdnInstance) -> Option<Rational> {
    let n = cdn.parents.len();
    let q = cdn.billing.q;
    let children = |k: NodeId| (1..=n).filter(move |&c| cdn.parents[c - 1] == k);
    let mut per_slot: Vec<Vec<Vec<Rational>>> = Vec::new();
    for slot in &cdn.slots {
        let mut options = Vec::new();
        let mut pick = vec![0usize; slot.customers.len()];
        loop {
            let mut load = vec![Rational::ZERO; n + 1];
            for (c, cust) in slot.customers.iter().enumerate() {
                load[cust.eligible[pick[c]]] += cust.w;
            }
            // Bottom-up: deepest nodes first.
            let depth = |mut i: NodeId| {
                let mut d = 0;
                while cdn.parents[i - 1] != 0 {
                    i = cdn.parents[i - 1];
                    d += 1;
                }
                d
            };
            let mut order: Vec<NodeId> = (1..=n).collect();
            order.sort_by_key(|&i| std::cmp::Reverse(depth(i)));
            for &k in &order {
                if children(k).next().is_some() {
                    load[k] = children(k).map(|c| slot.miss[c - 1] * load[c]).sum();
                }
            }
            if (1..=n).all(|i| load[i] <= cdn.caps[i - 1]) {
                options.push(load);
            }
            let Some(c) = (0..pick.len()).find(|&c| pick[c] + 1 < slot.customers[c].eligible.len()) else { break };
            pick[c] += 1;
            pick[..c].iter_mut().for_each(|v| *v = 0);
        }
        if options.is_empty() {
            return None;
        }
        per_slot.push(options);
    }
    let mut best: Option<Rational> = None;
    let mut idx = vec![0usize; per_slot.len()];
    loop {
        let cost = (1..=n)
            .map(|i| {
                let series: Vec<Rational> = idx.iter().enumerate().map(|(t, &o)| per_slot[t][o][i]).collect();
                cdn.prices[i - 1] * sort_percentile(&series, q)
            })
            .sum();
        best = Some(best.map_or(cost, |b: Rational| b.min(cost)));
        let Some(t) = (0..idx.len()).find(|&t| idx[t] + 1 < per_slot[t].len()) else { break };
        idx[t] += 1;
        idx[..t].iter_mut().for_each(|v| *v = 0);
    }
    best
}

/// Minimum Cloud-WAN cost over every integer split of every demand.
pub fn cwan_brute_force(cw: &CloudWanInstance) -> Option<Rational> {
    let m = cw.pops;
    let mut per_slot: Vec<BTreeSet<Vec<u64>>> = Vec::new();
    for slot in &cw.slots {
        let mut loads: BTreeSet<Vec<u64>> = [vec![0; m + 1]].into_iter().collect();
        for (c, &d) in slot.demands.iter().enumerate() {
            let pops: Vec<NodeId> = slot.edges.iter().filter(|e| e[1] == m + c + 1).map(|e| e[0]).collect();
            let mut next = BTreeSet::new();
            for base in &loads {
                let mut stack = vec![(0usize, d, base.clone())];
                while let Some((k, left, l)) = stack.pop() {
                    if k == pops.len() {
                        if left == 0 {
                            next.insert(l);
                        }
                        continue;
                    }
                    for a in 0..=left {
                        let mut l2 = l.clone();
                        l2[pops[k]] += a;
                        if l2[pops[k]] <= cw.caps[pops[k] - 1] {
                            stack.push((k + 1, left - a, l2));
                        }
                    }
                }
            }
            loads = next;
        }
        if loads.is_empty() {
            return None;
        }
        per_slot.push(loads);
    }
    let per_slot: Vec<Vec<Vec<u64>>> = per_slot.into_iter().map(|s| s.into_iter().collect()).collect();
    let mut best: Option<Rational> = None;
    let mut idx = vec![0usize; per_slot.len()];
    loop {
        let cost = (1..=m)
            .map(|i| {
                let series: Vec<Rational> = idx.iter().enumerate().map(|(t, &o)| Rational::from(per_slot[t][o][i])).collect();
                cw.prices[i - 1] * sort_percentile(&series, cw.billing.q)
            })
            .sum();
        best = Some(best.map_or(cost, |b: Rational| b.min(cost)));
        let Some(t) = (0..idx.len()).find(|&t| idx[t] + 1 < per_slot[t].len()) else { break };
        idx[t] += 1;
        idx[..t].iter_mut().for_each(|v| *v = 0);
    }
    best
}

/// Feasible plans padded with random extra edges that keep them feasible.
pub fn padded_plans(count: usize, seed: u64) -> Vec<(Instance, AllocationPlan)> {
    let mut rng = nba_core::gen::Prng::new(seed);
    let mut out = Vec::new();
    let insts: Vec<(Instance, AllocationPlan)> = tiny_instances(80, seed)
        .into_iter()
        .filter_map(|i| brute_force(&i).map(|(_, p)| (i, p)))
        .collect();
    while out.len() < count {
        let (inst, base) = &insts[rng.below(insts.len() as u64) as usize];
        let mut plan = base.clone();
        for (t, s) in inst.pairs() {
            for &e in &inst.slot(t).edges {
                if rng.chance(Rational::new(1, 3)) && plan.insert(t, s, e) && !check_feasible(inst, &plan).is_empty() {
                    plan.remove(t, s, e);
                }
            }
        }
        out.push((inst.clone(), plan));
    }
    out
}
