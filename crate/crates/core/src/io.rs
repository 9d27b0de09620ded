//! Versioned JSON formats for instances and plans.
//!
//! ```text
//! nba-instance/1: { schema, network: { n, prices[], egress_caps[], ingress_caps[], edges[[i,j]] },
//!                   billing: { p, q }, demands: [ { t, edges[[i,j]], sources: [ { s, w, dests[] } ] } ],
//!                   rules?: { servers, single_ingest } }
//! nba-plan/1:     { schema, slots: [ { t, sources: [ { s, edges[[i,j]] } ] } ] }
//! ```
//!
//! Numbers that may be fractional (`prices`, caps, `q`, `w`) use the
//! [`Rational`] encoding. Serialization sorts every list, so
//! `parse → write` is a fixed point after the first write.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    AllocationPlan, BillingConfig, Edge, Instance, Network, NodeId, ScenarioRules, SlotDemand,
    SourceDemand,
};
use crate::rational::Rational;

pub const INSTANCE_SCHEMA: &str = "nba-instance/1";
pub const PLAN_SCHEMA: &str = "nba-plan/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema: String,
    pub network: NetworkFile,
    pub billing: BillingFile,
    pub demands: Vec<DemandFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules: Option<RulesFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub n: usize,
    pub prices: Vec<Rational>,
    pub egress_caps: Vec<Rational>,
    pub ingress_caps: Vec<Rational>,
    pub edges: Vec<[NodeId; 2]>,
}

fn default_q() -> Rational {
    Rational::new(95, 100)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BillingFile {
    pub p: usize,
    #[serde(default = "default_q")]
    pub q: Rational,
}

impl BillingFile {
    pub fn config(&self) -> Result<BillingConfig> {
        BillingConfig::new(self.p, self.q)
    }
}

impl From<&BillingConfig> for BillingFile {
    fn from(b: &BillingConfig) -> Self {
        BillingFile { p: b.p(), q: b.q() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandFile {
    pub t: usize,
    pub edges: Vec<[NodeId; 2]>,
    pub sources: Vec<SourceFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceFile {
    pub s: NodeId,
    pub w: Rational,
    pub dests: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RulesFile {
    pub servers: usize,
    pub single_ingest: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub schema: String,
    pub slots: Vec<PlanSlotFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSlotFile {
    pub t: usize,
    pub sources: Vec<PlanSourceFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSourceFile {
    pub s: NodeId,
    pub edges: Vec<[NodeId; 2]>,
}

pub(crate) fn check_schema(found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::Input(format!(
            "schema: expected \"{expected}\", found \"{found}\""
        )));
    }
    Ok(())
}

fn edge_set(list: &[[NodeId; 2]], ctx: &str) -> Result<BTreeSet<Edge>> {
    let mut out = BTreeSet::new();
    for &[i, j] in list {
        if !out.insert((i, j)) {
            return Err(Error::Input(format!("{ctx}: duplicate edge [{i},{j}]")));
        }
    }
    Ok(out)
}

fn edge_list(set: &BTreeSet<Edge>) -> Vec<[NodeId; 2]> {
    set.iter().map(|&(i, j)| [i, j]).collect()
}

impl TryFrom<InstanceFile> for Instance {
    type Error = Error;

    fn try_from(f: InstanceFile) -> Result<Instance> {
        check_schema(&f.schema, INSTANCE_SCHEMA)?;
        if f.network.n != f.network.prices.len() {
            return Err(Error::Input(format!(
                "network.n = {} but {} prices given",
                f.network.n,
                f.network.prices.len()
            )));
        }
        let edges = edge_set(&f.network.edges, "network.edges")?;
        let network = Network::new(
            f.network.prices,
            f.network.egress_caps,
            f.network.ingress_caps,
            edges,
        )?;
        let billing = BillingConfig::new(f.billing.p, f.billing.q)?;
        let mut demands = Vec::with_capacity(f.demands.len());
        for (idx, d) in f.demands.into_iter().enumerate() {
            let ctx = format!("demands[{idx}]");
            let mut slot = SlotDemand::new(d.t, edge_set(&d.edges, &ctx)?);
            for src in d.sources {
                let dests: BTreeSet<NodeId> = src.dests.iter().copied().collect();
                if dests.len() != src.dests.len() {
                    return Err(Error::Input(format!("{ctx}: source {} repeats a destination", src.s)));
                }
                if slot
                    .sources
                    .insert(src.s, SourceDemand { w: src.w, dests })
                    .is_some()
                {
                    return Err(Error::Input(format!("{ctx}: duplicate source {}", src.s)));
                }
            }
            demands.push(slot);
        }
        let rules = f.rules.map(|r| ScenarioRules {
            servers: r.servers,
            single_ingest: r.single_ingest,
        });
        Instance::with_rules(network, billing, demands, rules)
    }
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> InstanceFile {
        let net = inst.network();
        InstanceFile {
            schema: INSTANCE_SCHEMA.to_string(),
            network: NetworkFile {
                n: net.node_count(),
                prices: net.prices().to_vec(),
                egress_caps: net.egress_caps().to_vec(),
                ingress_caps: net.ingress_caps().to_vec(),
                edges: edge_list(net.edges()),
            },
            billing: BillingFile {
                p: inst.billing().p(),
                q: inst.billing().q(),
            },
            demands: inst
                .demands()
                .iter()
                .map(|d| DemandFile {
                    t: d.t,
                    edges: edge_list(&d.edges),
                    sources: d
                        .sources
                        .iter()
                        .map(|(&s, sd)| SourceFile {
                            s,
                            w: sd.w,
                            dests: sd.dests.iter().copied().collect(),
                        })
                        .collect(),
                })
                .collect(),
            rules: inst.rules().map(|r| RulesFile {
                servers: r.servers,
                single_ingest: r.single_ingest,
            }),
        }
    }
}

impl TryFrom<PlanFile> for AllocationPlan {
    type Error = Error;

    fn try_from(f: PlanFile) -> Result<AllocationPlan> {
        check_schema(&f.schema, PLAN_SCHEMA)?;
        let mut plan = AllocationPlan::new();
        for slot in f.slots {
            for src in slot.sources {
                if plan.edges(slot.t, src.s).is_some() {
                    return Err(Error::Input(format!(
                        "plan: slot {} lists source {} twice",
                        slot.t, src.s
                    )));
                }
                let ctx = format!("plan slot {} source {}", slot.t, src.s);
                plan.set_edges(slot.t, src.s, edge_set(&src.edges, &ctx)?);
            }
        }
        Ok(plan)
    }
}

impl From<&AllocationPlan> for PlanFile {
    fn from(plan: &AllocationPlan) -> PlanFile {
        PlanFile {
            schema: PLAN_SCHEMA.to_string(),
            slots: plan
                .slots()
                .iter()
                .map(|(&t, m)| PlanSlotFile {
                    t,
                    sources: m
                        .iter()
                        .map(|(&s, e)| PlanSourceFile { s, edges: edge_list(e) })
                        .collect(),
                })
                .collect(),
        }
    }
}

pub fn instance_from_json(text: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text)?;
    Instance::try_from(file)
}

pub fn instance_to_json(inst: &Instance) -> String {
    to_pretty(&InstanceFile::from(inst))
}

pub fn plan_from_json(text: &str) -> Result<AllocationPlan> {
    let file: PlanFile = serde_json::from_str(text)?;
    AllocationPlan::try_from(file)
}

pub fn plan_to_json(plan: &AllocationPlan) -> String {
    to_pretty(&PlanFile::from(plan))
}

pub(crate) fn to_pretty<T: Serialize>(value: &T) -> String {
    // Serializing plain data structures into a String cannot fail.
    serde_json::to_string_pretty(value).expect("serializable value")
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = r#"{
        "schema": "nba-instance/1",
        "network": { "n": 3, "prices": [1, 1, 1], "egress_caps": [10, 10, 10],
                     "ingress_caps": [10, 10, 10],
                     "edges": [[1,2],[1,3],[2,1],[2,3],[3,1],[3,2]] },
        "billing": { "p": 1 },
        "demands": [ { "t": 1, "edges": [[1,2],[1,3],[2,1],[2,3],[3,1],[3,2]],
                       "sources": [ { "s": 1, "w": 1, "dests": [2, 3] } ] } ]
    }"#;

    #[test]
    fn instance_round_trip_is_byte_stable() {
        let inst = instance_from_json(TRIANGLE).unwrap();
        assert_eq!(inst.billing().q(), Rational::new(19, 20));
        let text = instance_to_json(&inst);
        let again = instance_from_json(&text).unwrap();
        assert_eq!(inst, again);
        assert_eq!(text, instance_to_json(&again));
    }

    #[test]
    fn rejects_wrong_schema_and_unknown_fields() {
        let bad = TRIANGLE.replace("nba-instance/1", "nba-instance/2");
        assert!(matches!(instance_from_json(&bad), Err(Error::Input(_))));
        let extra = TRIANGLE.replace("\"p\": 1", "\"p\": 1, \"bogus\": 3");
        assert!(matches!(instance_from_json(&extra), Err(Error::Json(_))));
    }

    #[test]
    fn plan_round_trip() {
        let text = r#"{"schema":"nba-plan/1","slots":[{"t":1,"sources":[{"s":1,"edges":[[2,3],[1,2]]}]}]}"#;
        let plan = plan_from_json(text).unwrap();
        assert_eq!(plan.edge_count(), 2);
        let out = plan_to_json(&plan);
        assert_eq!(plan_from_json(&out).unwrap(), plan);
        let file: PlanFile = serde_json::from_str(&out).unwrap();
        assert_eq!(file.slots[0].sources[0].edges, vec![[1, 2], [2, 3]]);
        let dup = r#"{"schema":"nba-plan/1","slots":[{"t":1,"sources":[{"s":1,"edges":[[1,2],[1,2]]}]}]}"#;
        assert!(plan_from_json(dup).is_err());
    }
}
