use std::collections::BTreeSet;

use super::{AgentId, Instance, ItemId, ItemSet};
use crate::error::{Error, Result};

/// A partial or total assignment of items to agents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    bundles: Vec<ItemSet>,
    owner: Vec<Option<AgentId>>,
}

impl Allocation {
    pub fn empty(n: usize, m: usize) -> Self {
        Allocation {
            bundles: vec![BTreeSet::new(); n],
            owner: vec![None; m],
        }
    }

    pub fn for_instance(inst: &Instance) -> Self {
        Self::empty(inst.n(), inst.m())
    }

    /// Builds an allocation from bundles, rejecting overlaps and unknown ids.
    pub fn from_bundles(n: usize, m: usize, bundles: Vec<ItemSet>) -> Result<Self> {
        if bundles.len() != n {
            return Err(Error::Allocation(format!("expected {n} bundles, got {}", bundles.len())));
        }
        let mut owner: Vec<Option<AgentId>> = vec![None; m];
        for (i, b) in bundles.iter().enumerate() {
            for it in b {
                if it.0 >= m {
                    return Err(Error::UnknownItem(format!("#{}", it.0)));
                }
                if let Some(prev) = owner[it.0] {
                    return Err(Error::Allocation(format!(
                        "item #{} given to agents #{} and #{}",
                        it.0, prev.0, i
                    )));
                }
                owner[it.0] = Some(AgentId(i));
            }
        }
        Ok(Allocation { bundles, owner })
    }

    pub fn from_owners(n: usize, owner: Vec<Option<AgentId>>) -> Result<Self> {
        let mut bundles = vec![BTreeSet::new(); n];
        for (it, o) in owner.iter().enumerate() {
            if let Some(a) = o {
                if a.0 >= n {
                    return Err(Error::UnknownAgent(format!("#{}", a.0)));
                }
                bundles[a.0].insert(ItemId(it));
            }
        }
        Ok(Allocation { bundles, owner })
    }

    pub fn n(&self) -> usize {
        self.bundles.len()
    }

    pub fn m(&self) -> usize {
        self.owner.len()
    }

    pub fn bundle(&self, agent: AgentId) -> &ItemSet {
        &self.bundles[agent.0]
    }

    pub fn bundles(&self) -> &[ItemSet] {
        &self.bundles
    }

    pub fn owner(&self, item: ItemId) -> Option<AgentId> {
        self.owner[item.0]
    }

    pub fn owners(&self) -> &[Option<AgentId>] {
        &self.owner
    }

    /// Gives an unallocated item to `agent`.
    pub fn assign(&mut self, item: ItemId, agent: AgentId) -> Result<()> {
        if let Some(prev) = self.owner[item.0] {
            return Err(Error::Allocation(format!(
                "item #{} already belongs to agent #{}",
                item.0, prev.0
            )));
        }
        self.owner[item.0] = Some(agent);
        self.bundles[agent.0].insert(item);
        Ok(())
    }

    /// Takes an item back; returns its former owner.
    pub fn unassign(&mut self, item: ItemId) -> Option<AgentId> {
        let prev = self.owner[item.0].take();
        if let Some(a) = prev {
            self.bundles[a.0].remove(&item);
        }
        prev
    }

    /// Replaces a bundle wholesale. Items must not be held by another agent.
    pub(crate) fn set_bundle(&mut self, agent: AgentId, bundle: ItemSet) {
        for it in std::mem::take(&mut self.bundles[agent.0]) {
            if self.owner[it.0] == Some(agent) {
                self.owner[it.0] = None;
            }
        }
        for it in &bundle {
            self.owner[it.0] = Some(agent);
        }
        self.bundles[agent.0] = bundle;
    }

    pub fn unallocated(&self) -> ItemSet {
        self.owner
            .iter()
            .enumerate()
            .filter(|(_, o)| o.is_none())
            .map(|(k, _)| ItemId(k))
            .collect()
    }

    pub fn is_total(&self) -> bool {
        self.owner.iter().all(Option::is_some)
    }

    /// Union of allocations over disjoint item sets.
    pub fn merge(&mut self, other: &Allocation) -> Result<()> {
        if other.n() != self.n() || other.m() != self.m() {
            return Err(Error::internal("merging allocations of different shapes"));
        }
        for (it, o) in other.owner.iter().enumerate() {
            if let Some(a) = o {
                if self.owner[it].is_some() {
                    return Err(Error::internal(format!("item #{it} allocated by two groups")));
                }
                self.owner[it] = Some(*a);
                self.bundles[a.0].insert(ItemId(it));
            }
        }
        Ok(())
    }

    /// Offending `(agent, item)` pairs with `item ∉ A_agent`.
    pub fn orientation_offenders(&self, inst: &Instance) -> Vec<(AgentId, ItemId)> {
        let mut out = Vec::new();
        for (i, b) in self.bundles.iter().enumerate() {
            for &it in b {
                if !inst.is_relevant(AgentId(i), it) {
                    out.push((AgentId(i), it));
                }
            }
        }
        out
    }
}
