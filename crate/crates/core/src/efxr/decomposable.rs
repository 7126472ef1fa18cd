//! Item groups of decomposable instances and the union of per-group
//! allocations.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::ef1::{solve_ef1, Policy};
use crate::efx_exact::{brute_force_efx_allocation, AllocationCaps};
use crate::error::{Error, Result};
use crate::instance::{AgentId, Allocation, Instance, ItemId};

/// Items sharing one agent list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ItemGroup {
    /// The common agent list, sorted.
    pub agents: Vec<AgentId>,
    /// Members in declaration order.
    pub items: Vec<ItemId>,
}

impl ItemGroup {
    /// Sub-instance on the group's agents and items.
    pub fn instance(&self, inst: &Instance) -> Result<Instance> {
        inst.restrict(&self.agents, &self.items)
    }

    /// Maps an allocation of [`ItemGroup::instance`] back onto `inst`.
    pub fn lift(&self, inst: &Instance, sub: &Allocation) -> Result<Allocation> {
        if sub.n() != self.agents.len() || sub.m() != self.items.len() {
            return Err(Error::Allocation("group allocation has the wrong shape".into()));
        }
        let mut owner = vec![None; inst.m()];
        for (k, o) in sub.owners().iter().enumerate() {
            owner[self.items[k].0] = o.map(|a| self.agents[a.0]);
        }
        Allocation::from_owners(inst.n(), owner)
    }
}

/// Groups items by agent list and checks that distinct groups share at most
/// one agent. On failure the error names one item from each offending group.
pub fn decompose_groups(inst: &Instance) -> Result<Vec<ItemGroup>> {
    let mut by_list: BTreeMap<Vec<AgentId>, usize> = BTreeMap::new();
    let mut groups: Vec<ItemGroup> = Vec::new();
    for it in inst.items() {
        let mut list = inst.agent_list(it).to_vec();
        list.sort_unstable();
        let k = *by_list.entry(list.clone()).or_insert_with(|| {
            groups.push(ItemGroup {
                agents: list,
                items: Vec::new(),
            });
            groups.len() - 1
        });
        groups[k].items.push(it);
    }
    for (x, gx) in groups.iter().enumerate() {
        for gy in &groups[x + 1..] {
            let shared = gx.agents.iter().filter(|a| gy.agents.binary_search(a).is_ok()).count();
            if shared > 1 {
                return Err(Error::NotDecomposable(
                    inst.item_name(gx.items[0]).to_string(),
                    inst.item_name(gy.items[0]).to_string(),
                ));
            }
        }
    }
    Ok(groups)
}

/// Union of per-group allocations, each given on the full instance and
/// covering exactly its group's items.
pub fn combine_group_allocations(inst: &Instance, groups: &[ItemGroup], per_group: &[Allocation]) -> Result<Allocation> {
    if groups.len() != per_group.len() {
        return Err(Error::Allocation(format!(
            "{} groups but {} group allocations",
            groups.len(),
            per_group.len()
        )));
    }
    let mut out = Allocation::for_instance(inst);
    for (k, (g, a)) in groups.iter().zip(per_group).enumerate() {
        let mut covered: Vec<ItemId> = a
            .owners()
            .iter()
            .enumerate()
            .filter(|(_, o)| o.is_some())
            .map(|(it, _)| ItemId(it))
            .collect();
        let mut want = g.items.clone();
        covered.sort_unstable();
        want.sort_unstable();
        if covered != want {
            return Err(Error::Allocation(format!("allocation {k} does not cover exactly its group")));
        }
        out.merge(a)?;
    }
    Ok(out)
}

/// Fairness notion solved inside each group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupRule {
    /// Exhaustive EFX per group; the union is EFXr.
    Efx,
    /// Envy-cycle elimination per group; the union is EF1.
    Ef1,
}

#[derive(Clone, Debug)]
pub struct DecomposableOutcome {
    pub groups: Vec<ItemGroup>,
    pub allocation: Allocation,
}

/// Solves every group independently (in parallel) and glues the results.
pub fn solve_decomposable(inst: &Instance, rule: GroupRule, caps: AllocationCaps) -> Result<DecomposableOutcome> {
    let groups = decompose_groups(inst)?;
    let per_group = groups
        .par_iter()
        .enumerate()
        .map(|(k, g)| {
            let sub = g.instance(inst)?;
            let a = match rule {
                GroupRule::Efx => brute_force_efx_allocation(&sub, caps)?
                    .ok_or_else(|| Error::NoEfx(format!("item group {k}")))?,
                GroupRule::Ef1 => solve_ef1(&sub, &Policy::default())?.allocation,
            };
            g.lift(inst, &a)
        })
        .collect::<Result<Vec<_>>>()?;
    let allocation = combine_group_allocations(inst, &groups, &per_group)?;
    Ok(DecomposableOutcome { groups, allocation })
}
