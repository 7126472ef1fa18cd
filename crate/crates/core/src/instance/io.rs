//! JSON form of instances and allocations.
//!
//! ```json
//! {"kind": "general",
//!  "agents": ["X", "Y"], "items": ["a", "b", "c"],
//!  "relevance": {"X": ["a", "b", "c"], "Y": ["b"]},
//!  "valuations": {"type": "additive",
//!                 "weights": {"X": {"a": "1", "b": "1", "c": "1/5"}, "Y": {"b": "1"}}}}
//! ```
//!
//! Graph kinds list `edges` (`{"u", "v", "id", "weight"}`) and may omit
//! `items` and `relevance`; relevance is then the incident edges. With
//! `"type": "graph-symmetric"` every edge carries a `weight`. Planar kinds
//! list `faces` as vertex triples; face ids default to `f0, f1, ...` and the
//! `outer_boundary` is derived when absent. An optional `allocation` maps
//! agents to item lists.

use indexmap::IndexMap;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::planar::derive_outer_boundary;
use super::{
    AgentId, Allocation, BundleTable, Instance, InstanceKind, ItemId, ItemSet, SharedValuation,
    Structure, ValuationProfile,
};
use crate::error::{Error, Result};
use crate::rational::{serde_str, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct Rat(#[serde(with = "serde_str")] Rational);

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    kind: String,
    agents: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    items: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    relevance: Option<IndexMap<String, Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    valuations: Option<RawValuations>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<RawEdge>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    faces: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outer_boundary: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    allocation: Option<IndexMap<String, Vec<String>>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
enum RawValuations {
    Additive {
        weights: IndexMap<String, IndexMap<String, Rat>>,
    },
    Table {
        tables: IndexMap<String, Vec<RawEntry>>,
    },
    Identical {
        shared: RawShared,
    },
    GraphSymmetric {},
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum RawShared {
    Additive(IndexMap<String, Rat>),
    Table(Vec<RawEntry>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    bundle: Vec<String>,
    value: Rat,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    u: String,
    v: String,
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<Rat>,
}

/// An instance plus an optional allocation read from the same file.
#[derive(Clone, Debug)]
pub struct Document {
    pub instance: Instance,
    pub allocation: Option<Allocation>,
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    Ok(parse_document(text)?.instance)
}

pub fn parse_document(text: &str) -> Result<Document> {
    let raw: RawInstance = serde_json::from_str(text).map_err(|e| Error::schema(e.to_string()))?;
    let kind = match raw.kind.as_str() {
        "general" => InstanceKind::General,
        "graph" => InstanceKind::Graph,
        "multigraph" => InstanceKind::Multigraph,
        "planar-faces" => InstanceKind::PlanarFaces,
        other => return Err(Error::schema(format!("unknown kind `{other}`"))),
    };
    let agents = raw.agents.clone();
    let agent_pos = |name: &str| -> Result<AgentId> {
        agents
            .iter()
            .position(|a| a == name)
            .map(AgentId)
            .ok_or_else(|| Error::UnknownAgent(name.to_string()))
    };

    let (items, structure) = match kind {
        InstanceKind::General => {
            if raw.edges.is_some() || raw.faces.is_some() || raw.outer_boundary.is_some() {
                return Err(Error::schema("general instances take no edges or faces"));
            }
            let items = raw.items.clone().ok_or_else(|| Error::schema("missing `items`"))?;
            (items, Structure::General)
        }
        InstanceKind::Graph | InstanceKind::Multigraph => {
            if raw.faces.is_some() || raw.outer_boundary.is_some() {
                return Err(Error::schema("graph instances take no faces"));
            }
            let edges = raw.edges.as_ref().ok_or_else(|| Error::schema("missing `edges`"))?;
            let mut endpoints = Vec::with_capacity(edges.len());
            let ids: Vec<String> = edges.iter().map(|e| e.id.clone()).collect();
            for e in edges {
                endpoints.push((agent_pos(&e.u)?, agent_pos(&e.v)?));
            }
            if let Some(items) = &raw.items {
                if *items != ids {
                    return Err(Error::schema("`items` must list the edge ids in edge order"));
                }
            }
            (
                ids,
                Structure::Graph {
                    endpoints,
                    multi: kind == InstanceKind::Multigraph,
                },
            )
        }
        InstanceKind::PlanarFaces => {
            if raw.edges.is_some() {
                return Err(Error::schema("planar-faces instances take no edges"));
            }
            let faces_raw = raw.faces.as_ref().ok_or_else(|| Error::schema("missing `faces`"))?;
            let mut faces = Vec::with_capacity(faces_raw.len());
            for f in faces_raw {
                if f.len() != 3 {
                    return Err(Error::Planar(format!(
                        "inner face {f:?} has {} vertices, expected 3",
                        f.len()
                    )));
                }
                faces.push([agent_pos(&f[0])?, agent_pos(&f[1])?, agent_pos(&f[2])?]);
            }
            let items = match &raw.items {
                Some(items) if items.len() != faces.len() => {
                    return Err(Error::schema("`items` must name every face"));
                }
                Some(items) => items.clone(),
                None => (0..faces.len()).map(|k| format!("f{k}")).collect(),
            };
            let outer_boundary = match &raw.outer_boundary {
                Some(b) => b.iter().map(|v| agent_pos(v)).collect::<Result<Vec<_>>>()?,
                None => derive_outer_boundary(agents.len(), &faces)?,
            };
            (items, Structure::Planar { faces, outer_boundary })
        }
    };
    let item_pos = |name: &str| -> Result<ItemId> {
        items
            .iter()
            .position(|a| a == name)
            .map(ItemId)
            .ok_or_else(|| Error::UnknownItem(name.to_string()))
    };
    let n = agents.len();
    let m = items.len();

    let structural = match &structure {
        Structure::General => None,
        Structure::Graph { endpoints, .. } => {
            let mut rel = vec![Vec::new(); n];
            for (k, &(u, v)) in endpoints.iter().enumerate() {
                rel[u.0].push(ItemId(k));
                if v != u {
                    rel[v.0].push(ItemId(k));
                }
            }
            Some(rel)
        }
        Structure::Planar { faces, .. } => {
            let mut rel = vec![Vec::new(); n];
            for (k, t) in faces.iter().enumerate() {
                for v in t {
                    rel[v.0].push(ItemId(k));
                }
            }
            Some(rel)
        }
    };
    let relevance = match (&raw.relevance, structural) {
        (Some(map), structural) => {
            let mut rel = vec![Vec::new(); n];
            for (agent, list) in map {
                let a = agent_pos(agent)?;
                rel[a.0] = list.iter().map(|it| item_pos(it)).collect::<Result<Vec<_>>>()?;
            }
            if let Some(s) = structural {
                for i in 0..n {
                    let mut declared = rel[i].clone();
                    declared.sort();
                    if declared != s[i] {
                        return Err(Error::RelevanceMismatch {
                            agent: agents[i].clone(),
                            declared: declared.iter().map(|it| items[it.0].clone()).collect(),
                            derived: s[i].iter().map(|it| items[it.0].clone()).collect(),
                        });
                    }
                }
            }
            rel
        }
        (None, Some(s)) => s,
        (None, None) => return Err(Error::schema("missing `relevance`")),
    };

    let valuation = match &raw.valuations {
        None => match &raw.edges {
            Some(edges) => graph_weights(edges)?,
            None => return Err(Error::schema("missing `valuations`")),
        },
        Some(v) => {
            if !matches!(v, RawValuations::GraphSymmetric {}) {
                if let Some(edges) = &raw.edges {
                    if edges.iter().any(|e| e.weight.is_some()) {
                        return Err(Error::schema(
                            "edge weights are only meaningful for graph-symmetric valuations",
                        ));
                    }
                }
            }
            match v {
                RawValuations::Additive { weights } => {
                    let mut w = vec![vec![Rational::zero(); m]; n];
                    for (agent, row) in weights {
                        let a = agent_pos(agent)?;
                        for (item, val) in row {
                            w[a.0][item_pos(item)?.0] = val.0;
                        }
                    }
                    ValuationProfile::Additive { weights: w }
                }
                RawValuations::Table { tables } => {
                    let mut out: Vec<Option<BundleTable>> = vec![None; n];
                    for (agent, entries) in tables {
                        let a = agent_pos(agent)?;
                        let mut domain = relevance[a.0].clone();
                        domain.sort();
                        out[a.0] = Some(table_from_entries(agent, domain, entries, &item_pos)?);
                    }
                    let mut tables = Vec::with_capacity(n);
                    for (i, t) in out.into_iter().enumerate() {
                        tables.push(match t {
                            Some(t) => t,
                            None if relevance[i].is_empty() => BundleTable::new(Vec::new(), vec![Rational::zero()])?,
                            None => {
                                return Err(Error::schema(format!("missing table for agent `{}`", agents[i])))
                            }
                        });
                    }
                    ValuationProfile::Table { tables }
                }
                RawValuations::Identical { shared } => match shared {
                    RawShared::Additive(map) => {
                        let mut w = vec![Rational::zero(); m];
                        for (item, val) in map {
                            w[item_pos(item)?.0] = val.0;
                        }
                        ValuationProfile::Identical {
                            shared: SharedValuation::Additive(w),
                        }
                    }
                    RawShared::Table(entries) => {
                        let mut domain: Vec<ItemId> = Vec::new();
                        for e in entries {
                            for it in &e.bundle {
                                let id = item_pos(it)?;
                                if !domain.contains(&id) {
                                    domain.push(id);
                                }
                            }
                        }
                        domain.sort();
                        ValuationProfile::Identical {
                            shared: SharedValuation::Table(table_from_entries("shared", domain, entries, &item_pos)?),
                        }
                    }
                },
                RawValuations::GraphSymmetric {} => match &raw.edges {
                    Some(edges) => graph_weights(edges)?,
                    None => return Err(Error::schema("graph-symmetric valuations need `edges`")),
                },
            }
        }
    };

    let instance = Instance::new(kind, agents.clone(), items.clone(), relevance, valuation, structure)?;
    let allocation = match &raw.allocation {
        None => None,
        Some(map) => {
            let mut bundles = vec![ItemSet::new(); n];
            for (agent, list) in map {
                let a = agent_pos(agent)?;
                for it in list {
                    bundles[a.0].insert(item_pos(it)?);
                }
            }
            Some(Allocation::from_bundles(n, m, bundles)?)
        }
    };
    Ok(Document { instance, allocation })
}

fn graph_weights(edges: &[RawEdge]) -> Result<ValuationProfile> {
    let weights = edges
        .iter()
        .map(|e| {
            e.weight
                .map(|w| w.0)
                .ok_or_else(|| Error::schema(format!("edge `{}` has no weight", e.id)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ValuationProfile::GraphSymmetric { weights })
}

fn table_from_entries(
    owner: &str,
    domain: Vec<ItemId>,
    entries: &[RawEntry],
    item_pos: &dyn Fn(&str) -> Result<ItemId>,
) -> Result<BundleTable> {
    if domain.len() > super::TABLE_CAP {
        return Err(Error::CapExceeded {
            what: "table domain",
            size: domain.len(),
            cap: super::TABLE_CAP,
        });
    }
    let size = 1usize << domain.len();
    let mut values: Vec<Option<Rational>> = vec![None; size];
    values[0] = Some(Rational::zero());
    for e in entries {
        let mut mask = 0usize;
        for it in &e.bundle {
            let id = item_pos(it)?;
            let p = domain.iter().position(|d| *d == id).ok_or_else(|| {
                Error::schema(format!("table of `{owner}` mentions item `{it}` outside its relevant set"))
            })?;
            if mask & (1 << p) != 0 {
                return Err(Error::schema(format!("table of `{owner}` repeats item `{it}` in a bundle")));
            }
            mask |= 1 << p;
        }
        if mask == 0 && !e.value.0.is_zero() {
            return Err(Error::schema(format!("table of `{owner}` gives the empty bundle a non-zero value")));
        }
        if mask != 0 && values[mask].is_some() {
            return Err(Error::schema(format!("table of `{owner}` lists bundle {:?} twice", e.bundle)));
        }
        values[mask] = Some(e.value.0);
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(mask, v)| {
            v.ok_or_else(|| {
                Error::schema(format!("table of `{owner}` is missing a bundle (mask {mask:#b})"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    BundleTable::new(domain, values)
}

fn entries_of(inst: &Instance, table: &BundleTable) -> Vec<RawEntry> {
    (1u64..table.values().len() as u64)
        .map(|mask| RawEntry {
            bundle: super::mask_items(table.domain(), mask)
                .map(|it| inst.item_name(it).to_string())
                .collect(),
            value: Rat(*table.value_of_mask(mask)),
        })
        .collect()
}

fn to_raw(inst: &Instance) -> RawInstance {
    let names = |v: &[AgentId]| v.iter().map(|a| inst.agent_name(*a).to_string()).collect::<Vec<_>>();
    let relevance: IndexMap<String, Vec<String>> = inst
        .agents()
        .map(|a| (inst.agent_name(a).to_string(), inst.item_names(inst.relevant(a))))
        .collect();
    let symmetric = matches!(inst.valuation(), ValuationProfile::GraphSymmetric { .. });
    let valuations = match inst.valuation() {
        ValuationProfile::Additive { weights } => RawValuations::Additive {
            weights: inst
                .agents()
                .map(|a| {
                    let row = inst
                        .items()
                        .filter(|it| !weights[a.0][it.0].is_zero())
                        .map(|it| (inst.item_name(it).to_string(), Rat(weights[a.0][it.0])))
                        .collect();
                    (inst.agent_name(a).to_string(), row)
                })
                .collect(),
        },
        ValuationProfile::Table { tables } => RawValuations::Table {
            tables: inst
                .agents()
                .map(|a| (inst.agent_name(a).to_string(), entries_of(inst, &tables[a.0])))
                .collect(),
        },
        ValuationProfile::Identical { shared } => RawValuations::Identical {
            shared: match shared {
                SharedValuation::Additive(w) => RawShared::Additive(
                    inst.items()
                        .map(|it| (inst.item_name(it).to_string(), Rat(w[it.0])))
                        .collect(),
                ),
                SharedValuation::Table(t) => RawShared::Table(entries_of(inst, t)),
            },
        },
        ValuationProfile::GraphSymmetric { .. } => RawValuations::GraphSymmetric {},
    };
    let mut raw = RawInstance {
        kind: inst.kind().as_str().to_string(),
        agents: inst.agent_names().to_vec(),
        items: Some(inst.item_names_all().to_vec()),
        relevance: Some(relevance),
        valuations: Some(valuations),
        edges: None,
        faces: None,
        outer_boundary: None,
        allocation: None,
    };
    match inst.structure() {
        Structure::General => {}
        Structure::Graph { endpoints, .. } => {
            let weights = match inst.valuation() {
                ValuationProfile::GraphSymmetric { weights } => Some(weights),
                _ => None,
            };
            raw.edges = Some(
                endpoints
                    .iter()
                    .enumerate()
                    .map(|(k, &(u, v))| RawEdge {
                        u: inst.agent_name(u).to_string(),
                        v: inst.agent_name(v).to_string(),
                        id: inst.item_name(ItemId(k)).to_string(),
                        weight: weights.filter(|_| symmetric).map(|w| Rat(w[k])),
                    })
                    .collect(),
            );
        }
        Structure::Planar { faces, outer_boundary } => {
            raw.faces = Some(faces.iter().map(|t| names(t)).collect());
            raw.outer_boundary = Some(names(outer_boundary));
        }
    }
    raw
}

pub fn instance_to_json(inst: &Instance) -> serde_json::Value {
    serde_json::to_value(to_raw(inst)).expect("instance serializes")
}

pub fn serialize_instance(inst: &Instance) -> String {
    serde_json::to_string_pretty(&to_raw(inst)).expect("instance serializes")
}

/// Instance plus an allocation, in the same file format.
pub fn serialize_document(inst: &Instance, alloc: &Allocation) -> String {
    let mut raw = to_raw(inst);
    raw.allocation = Some(allocation_map(inst, alloc));
    serde_json::to_string_pretty(&raw).expect("document serializes")
}

fn allocation_map(inst: &Instance, alloc: &Allocation) -> IndexMap<String, Vec<String>> {
    inst.agents()
        .map(|a| (inst.agent_name(a).to_string(), inst.item_names(alloc.bundle(a))))
        .collect()
}

/// `{"agent": ["item", ...], ...}` in declaration order.
pub fn allocation_to_json(inst: &Instance, alloc: &Allocation) -> serde_json::Value {
    serde_json::to_value(allocation_map(inst, alloc)).expect("allocation serializes")
}
