use std::collections::BTreeSet;

use super::{AgentId, Allocation, Instance, InstanceKind, ItemId, Structure, ValuationProfile};
use crate::error::{Error, Result};
use crate::rational::Rational;

/// An instance whose items are the edges of a (multi)graph on the agents.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphInstance {
    inst: Instance,
    endpoints: Vec<(AgentId, AgentId)>,
    neighbors: Vec<Vec<AgentId>>,
    multi: bool,
}

impl GraphInstance {
    pub fn new(inst: Instance) -> Result<Self> {
        let (endpoints, multi) = match inst.structure() {
            Structure::Graph { endpoints, multi } => (endpoints.clone(), *multi),
            _ => {
                return Err(Error::Unsupported(format!(
                    "expected a graph instance, got kind `{}`",
                    inst.kind().as_str()
                )))
            }
        };
        let mut nb = vec![BTreeSet::new(); inst.n()];
        for &(u, v) in &endpoints {
            nb[u.0].insert(v);
            nb[v.0].insert(u);
        }
        Ok(GraphInstance {
            inst,
            endpoints,
            neighbors: nb.into_iter().map(|s| s.into_iter().collect()).collect(),
            multi,
        })
    }

    /// Symmetric weights: both endpoints value an edge at its weight.
    pub fn symmetric(
        vertices: Vec<String>,
        edges: Vec<(usize, usize, String, Rational)>,
        multi: bool,
    ) -> Result<Self> {
        let weights = edges.iter().map(|e| e.3).collect();
        let plain = edges.into_iter().map(|(u, v, id, _)| (u, v, id)).collect();
        Self::with_valuation(vertices, plain, multi, ValuationProfile::GraphSymmetric { weights })
    }

    /// Arbitrary valuation profile over the given edges.
    pub fn with_valuation(
        vertices: Vec<String>,
        edges: Vec<(usize, usize, String)>,
        multi: bool,
        valuation: ValuationProfile,
    ) -> Result<Self> {
        let n = vertices.len();
        let mut relevance = vec![Vec::new(); n];
        let mut endpoints = Vec::with_capacity(edges.len());
        let mut items = Vec::with_capacity(edges.len());
        for (k, (u, v, id)) in edges.into_iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::UnknownAgent(format!("#{}", u.max(v))));
            }
            if u != v {
                relevance[u].push(ItemId(k));
                relevance[v].push(ItemId(k));
            }
            endpoints.push((AgentId(u), AgentId(v)));
            items.push(id);
        }
        let kind = if multi { InstanceKind::Multigraph } else { InstanceKind::Graph };
        let inst = Instance::new(
            kind,
            vertices,
            items,
            relevance,
            valuation,
            Structure::Graph { endpoints, multi },
        )?;
        GraphInstance::new(inst)
    }

    pub fn instance(&self) -> &Instance {
        &self.inst
    }

    pub fn into_instance(self) -> Instance {
        self.inst
    }

    pub fn is_multi(&self) -> bool {
        self.multi
    }

    pub fn vertex_count(&self) -> usize {
        self.inst.n()
    }

    pub fn edge_count(&self) -> usize {
        self.endpoints.len()
    }

    pub fn endpoints(&self, e: ItemId) -> (AgentId, AgentId) {
        self.endpoints[e.0]
    }

    pub fn all_endpoints(&self) -> &[(AgentId, AgentId)] {
        &self.endpoints
    }

    pub fn other_endpoint(&self, e: ItemId, v: AgentId) -> AgentId {
        let (a, b) = self.endpoints[e.0];
        if a == v {
            b
        } else {
            a
        }
    }

    /// Edges incident to `v`, in declaration order.
    pub fn incident(&self, v: AgentId) -> &[ItemId] {
        self.inst.relevant(v)
    }

    pub fn neighbors(&self, v: AgentId) -> &[AgentId] {
        &self.neighbors[v.0]
    }

    /// Lowers an orientation vector (`true` = second endpoint receives) to
    /// an allocation.
    pub fn orientation_allocation(&self, o: &OrientationVector) -> Result<Allocation> {
        if o.0.len() != self.edge_count() {
            return Err(Error::Allocation(format!(
                "orientation has {} entries for {} edges",
                o.0.len(),
                self.edge_count()
            )));
        }
        let owners = self
            .endpoints
            .iter()
            .zip(&o.0)
            .map(|(&(u, v), &to_v)| Some(if to_v { v } else { u }))
            .collect();
        Allocation::from_owners(self.vertex_count(), owners)
    }

    /// Reads an orientation back from a total allocation.
    pub fn orientation_of(&self, alloc: &Allocation) -> Result<OrientationVector> {
        let mut bits = Vec::with_capacity(self.edge_count());
        for (k, &(u, v)) in self.endpoints.iter().enumerate() {
            match alloc.owner(ItemId(k)) {
                Some(a) if a == v => bits.push(true),
                Some(a) if a == u => bits.push(false),
                Some(a) => {
                    return Err(Error::Allocation(format!(
                        "edge `{}` given to non-endpoint `{}`",
                        self.inst.item_name(ItemId(k)),
                        self.inst.agent_name(a)
                    )))
                }
                None => {
                    return Err(Error::Allocation(format!(
                        "edge `{}` is unallocated",
                        self.inst.item_name(ItemId(k))
                    )))
                }
            }
        }
        Ok(OrientationVector(bits))
    }
}

/// One bit per edge: `false` if the first endpoint receives it, `true` if
/// the second does.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrientationVector(pub Vec<bool>);
