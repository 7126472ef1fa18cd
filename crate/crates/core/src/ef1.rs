//! EF1 orientations by envy-cycle elimination restricted to agent lists.
//!
//! Items are handed out one at a time from a FIFO pool. Each item goes to a
//! source of the envy graph induced on its agent list, so nobody who envies
//! the receiver can value the new item. Envy cycles are then removed by
//! shifting bundles backwards along the cycle; items that become irrelevant
//! to their new holder are put back at the end of the pool.

use std::collections::VecDeque;

use num_traits::Zero;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::instance::{AgentId, Allocation, Instance, ItemId, ItemSet, ValuationProfile};
use crate::rational::{format_rational, Rational};
use crate::verify::{envy_graph, EnvyGraph};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum ItemOrder {
    #[default]
    Declaration,
    /// Decreasing agent-list size; requires laminar agent lists.
    Laminar,
    Custom(Vec<ItemId>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum SourceTiebreak {
    #[default]
    LowestIndex,
    /// Agents in priority order; unlisted agents follow by index.
    Custom(Vec<AgentId>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Policy {
    pub item_order: ItemOrder,
    pub source_tiebreak: SourceTiebreak,
    /// Recompute the envy graph from scratch after every step and compare.
    pub debug_recompute: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceEvent {
    Assign { item: ItemId, agent: AgentId },
    CycleShift { cycle: Vec<AgentId>, returned: Vec<ItemId> },
    PoolReturn { item: ItemId, from: AgentId },
}

/// An event with the own-value vector `W` right after it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub event: TraceEvent,
    pub potential: Vec<Rational>,
}

impl TraceEntry {
    pub fn to_json(&self, inst: &Instance) -> Value {
        let agents = |v: &[AgentId]| v.iter().map(|a| inst.agent_name(*a)).collect::<Vec<_>>();
        let mut o = match &self.event {
            TraceEvent::Assign { item, agent } => json!({
                "event": "assign", "item": inst.item_name(*item), "agent": inst.agent_name(*agent)
            }),
            TraceEvent::CycleShift { cycle, returned } => json!({
                "event": "cycle-shift", "cycle": agents(cycle), "returned": inst.item_names(returned)
            }),
            TraceEvent::PoolReturn { item, from } => json!({
                "event": "pool-return", "item": inst.item_name(*item), "from": inst.agent_name(*from)
            }),
        };
        o["potential"] = json!(self.potential.iter().map(format_rational).collect::<Vec<_>>());
        o
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ef1Stats {
    pub assignments: usize,
    pub cycle_shifts: usize,
    pub pool_returns: usize,
}

#[derive(Clone, Debug)]
pub struct Ef1Outcome {
    pub allocation: Allocation,
    pub trace: Vec<TraceEntry>,
    pub stats: Ef1Stats,
}

/// Working state of the algorithm: partial allocation, envy graph, pool,
/// cached own values and the trace.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub alloc: Allocation,
    pub envy: EnvyGraph,
    pub pool: VecDeque<ItemId>,
    pub trace: Vec<TraceEntry>,
    own: Vec<Rational>,
    debug_recompute: bool,
}

impl SolverState {
    pub fn new(inst: &Instance, order: Vec<ItemId>) -> Self {
        SolverState {
            alloc: Allocation::for_instance(inst),
            envy: EnvyGraph::empty(inst.n()),
            pool: order.into(),
            trace: Vec::new(),
            own: vec![Rational::zero(); inst.n()],
            debug_recompute: false,
        }
    }

    /// State for an existing partial orientation; unallocated items form
    /// the pool in declaration order.
    pub fn from_allocation(inst: &Instance, alloc: Allocation) -> Self {
        let pool = alloc.unallocated().into_iter().collect();
        let envy = envy_graph(inst, &alloc);
        let own = inst.agents().map(|a| inst.value_of(a, alloc.bundle(a))).collect();
        SolverState {
            alloc,
            envy,
            pool,
            trace: Vec::new(),
            own,
            debug_recompute: false,
        }
    }

    /// The potential vector `W` of own-bundle values.
    pub fn potential(&self) -> &[Rational] {
        &self.own
    }

    fn record(&mut self, event: TraceEvent) {
        self.trace.push(TraceEntry {
            event,
            potential: self.own.clone(),
        });
    }

    fn check_envy(&self, inst: &Instance) -> Result<()> {
        if self.debug_recompute && envy_graph(inst, &self.alloc) != self.envy {
            return Err(Error::internal("incremental envy graph diverged from recomputation"));
        }
        Ok(())
    }

    /// Gives `item` to `agent` and updates the arcs at `agent`.
    pub fn assign(&mut self, inst: &Instance, item: ItemId, agent: AgentId) -> Result<()> {
        self.alloc.assign(item, agent)?;
        self.own[agent.0] = inst.value_of(agent, self.alloc.bundle(agent));
        for j in inst.agents() {
            if j == agent {
                continue;
            }
            let into = inst.value_of(j, self.alloc.bundle(agent)) > self.own[j.0];
            self.envy.set_arc(j, agent, into);
            let out = inst.value_of(agent, self.alloc.bundle(j)) > self.own[agent.0];
            self.envy.set_arc(agent, j, out);
        }
        self.record(TraceEvent::Assign { item, agent });
        self.check_envy(inst)
    }

    /// Shifts bundles backwards along envy cycles until none is left.
    pub fn eliminate_cycles(&mut self, inst: &Instance) -> Result<usize> {
        let mut shifts = 0;
        while let Some(cycle) = self.envy.find_cycle() {
            self.shift(inst, &cycle)?;
            shifts += 1;
        }
        Ok(shifts)
    }

    fn shift(&mut self, inst: &Instance, cycle: &[AgentId]) -> Result<()> {
        let l = cycle.len();
        let old: Vec<ItemSet> = cycle.iter().map(|a| self.alloc.bundle(*a).clone()).collect();
        let mut returned: Vec<(ItemId, AgentId)> = Vec::new();
        let mut fresh: Vec<ItemSet> = Vec::with_capacity(l);
        for (k, &agent) in cycle.iter().enumerate() {
            let next = &old[(k + 1) % l];
            let (keep, drop): (ItemSet, ItemSet) = next.iter().partition(|&&it| inst.is_relevant(agent, it));
            returned.extend(drop.into_iter().map(|it| (it, cycle[(k + 1) % l])));
            fresh.push(keep);
        }
        for &agent in cycle {
            self.alloc.set_bundle(agent, ItemSet::new());
        }
        for (k, &agent) in cycle.iter().enumerate() {
            let before = self.own[agent.0];
            self.alloc.set_bundle(agent, std::mem::take(&mut fresh[k]));
            let after = inst.value_of(agent, self.alloc.bundle(agent));
            if after <= before {
                return Err(Error::internal(format!(
                    "cycle shift did not improve agent `{}`",
                    inst.agent_name(agent)
                )));
            }
            self.own[agent.0] = after;
        }
        self.envy = envy_graph(inst, &self.alloc);
        self.record(TraceEvent::CycleShift {
            cycle: cycle.to_vec(),
            returned: returned.iter().map(|r| r.0).collect(),
        });
        for (item, from) in returned {
            self.pool.push_back(item);
            self.record(TraceEvent::PoolReturn { item, from });
        }
        Ok(())
    }
}

/// A source of the envy graph induced on `candidates`.
pub fn pick_source(envy: &EnvyGraph, candidates: &[AgentId], tiebreak: &SourceTiebreak) -> Result<AgentId> {
    let sources = envy.sources_within(candidates);
    let pick = match tiebreak {
        SourceTiebreak::LowestIndex => sources.iter().min().copied(),
        SourceTiebreak::Custom(prio) => prio
            .iter()
            .find(|a| sources.contains(a))
            .copied()
            .or_else(|| sources.iter().min().copied()),
    };
    pick.ok_or_else(|| Error::internal("no source in the induced envy graph"))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LaminarOrder {
    Order(Vec<ItemId>),
    NotLaminar(ItemId, ItemId),
}

/// Orders items by decreasing agent-list size (stable) and checks that
/// every later list is nested in or disjoint from every earlier one.
pub fn laminar_order(inst: &Instance) -> LaminarOrder {
    let mut order: Vec<ItemId> = inst.items().collect();
    order.sort_by_key(|&it| std::cmp::Reverse(inst.agent_list(it).len()));
    for (j, &a) in order.iter().enumerate() {
        for &b in &order[j + 1..] {
            let big = inst.agent_list(a);
            let small = inst.agent_list(b);
            let meet = small.iter().filter(|x| big.contains(x)).count();
            if meet != 0 && meet != small.len() {
                return LaminarOrder::NotLaminar(a.min(b), a.max(b));
            }
        }
    }
    LaminarOrder::Order(order)
}

fn iteration_cap(inst: &Instance) -> u128 {
    let exp = inst.max_relevant().min(24) as u32;
    4u128 * inst.n().max(1) as u128 * inst.m().max(1) as u128 * (1u128 << exp)
}

pub fn solve_ef1(inst: &Instance, policy: &Policy) -> Result<Ef1Outcome> {
    let order = match &policy.item_order {
        ItemOrder::Declaration => inst.items().collect(),
        ItemOrder::Laminar => match laminar_order(inst) {
            LaminarOrder::Order(o) => o,
            LaminarOrder::NotLaminar(a, b) => {
                return Err(Error::NotLaminar(
                    inst.item_name(a).to_string(),
                    inst.item_name(b).to_string(),
                ))
            }
        },
        ItemOrder::Custom(o) => {
            let mut sorted = o.clone();
            sorted.sort();
            if sorted != inst.items().collect::<Vec<_>>() {
                return Err(Error::Params("custom item order must be a permutation of the items".into()));
            }
            o.clone()
        }
    };
    for it in inst.items() {
        if inst.agent_list(it).is_empty() {
            return Err(Error::EmptyAgentList(inst.item_name(it).to_string()));
        }
    }
    let mut state = SolverState::new(inst, order);
    state.debug_recompute = policy.debug_recompute;
    let cap = iteration_cap(inst);
    let mut steps: u128 = 0;
    let mut stats = Ef1Stats::default();
    while let Some(item) = state.pool.pop_front() {
        steps += 1;
        if steps > cap {
            return Err(Error::internal(format!("iteration guard of {cap} steps exceeded")));
        }
        let agent = pick_source(&state.envy, inst.agent_list(item), &policy.source_tiebreak)?;
        state.assign(inst, item, agent)?;
        stats.assignments += 1;
        let before = state.trace.len();
        let shifts = state.eliminate_cycles(inst)?;
        stats.cycle_shifts += shifts;
        stats.pool_returns += state.trace[before..]
            .iter()
            .filter(|e| matches!(e.event, TraceEvent::PoolReturn { .. }))
            .count();
        steps += shifts as u128;
        state.check_envy(inst)?;
    }
    log::debug!(
        "ef1: {} assignments, {} cycle shifts, {} pool returns",
        stats.assignments,
        stats.cycle_shifts,
        stats.pool_returns
    );
    Ok(Ef1Outcome {
        allocation: state.alloc,
        trace: state.trace,
        stats,
    })
}

/// The algorithm on identical valuations, where envy cycles cannot occur.
/// A cycle is reported as an internal error.
pub fn solve_ef1_identical(inst: &Instance) -> Result<Ef1Outcome> {
    if !matches!(inst.valuation(), ValuationProfile::Identical { .. }) {
        return Err(Error::NotIdentical(inst.valuation().type_name().to_string()));
    }
    let mut state = SolverState::new(inst, inst.items().collect());
    let mut stats = Ef1Stats::default();
    while let Some(item) = state.pool.pop_front() {
        let agent = pick_source(&state.envy, inst.agent_list(item), &SourceTiebreak::LowestIndex)?;
        state.assign(inst, item, agent)?;
        stats.assignments += 1;
        if state.envy.find_cycle().is_some() {
            return Err(Error::internal("envy cycle under identical valuations"));
        }
    }
    Ok(Ef1Outcome {
        allocation: state.alloc,
        trace: state.trace,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::io::parse_instance;
    use crate::verify::{check_ef1, check_orientation};

    const INTRO: &str = r#"{"kind":"general","agents":["X","Y"],"items":["a","b","c"],
        "relevance":{"X":["a","b","c"],"Y":["b"]},
        "valuations":{"type":"additive","weights":{"X":{"a":"1","b":"1","c":"1/5"},"Y":{"b":"1"}}}}"#;

    #[test]
    fn intro_gets_an_ef1_orientation() {
        let inst = parse_instance(INTRO).unwrap();
        let out = solve_ef1(&inst, &Policy { debug_recompute: true, ..Policy::default() }).unwrap();
        assert!(out.allocation.is_total());
        assert!(check_orientation(&inst, &out.allocation).holds);
        assert!(check_ef1(&inst, &out.allocation).holds);
        let x = inst.agent_id("X").unwrap();
        assert!(out.allocation.bundle(x).contains(&inst.item_id("a").unwrap()));
        assert!(out.allocation.bundle(x).contains(&inst.item_id("c").unwrap()));
    }

    #[test]
    fn no_items_gives_empty_bundles() {
        let text = r#"{"kind":"general","agents":["1","2"],"items":[],"relevance":{},
            "valuations":{"type":"additive","weights":{}}}"#;
        let inst = parse_instance(text).unwrap();
        let out = solve_ef1(&inst, &Policy::default()).unwrap();
        assert!(out.allocation.bundles().iter().all(|b| b.is_empty()));
        assert!(out.trace.is_empty());
    }

    #[test]
    fn source_choice() {
        let mut g = EnvyGraph::empty(4);
        let c = [AgentId(1), AgentId(2), AgentId(3)];
        g.set_arc(AgentId(1), AgentId(2), true);
        assert_eq!(pick_source(&g, &c, &SourceTiebreak::LowestIndex).unwrap(), AgentId(1));
        assert_eq!(
            pick_source(&g, &c, &SourceTiebreak::Custom(vec![AgentId(3)])).unwrap(),
            AgentId(3)
        );
        g.set_arc(AgentId(2), AgentId(3), true);
        assert_eq!(pick_source(&g, &c, &SourceTiebreak::LowestIndex).unwrap(), AgentId(1));
        assert_eq!(pick_source(&g, &[AgentId(2)], &SourceTiebreak::LowestIndex).unwrap(), AgentId(2));
        g.set_arc(AgentId(3), AgentId(1), true);
        assert!(pick_source(&g, &c, &SourceTiebreak::LowestIndex).unwrap_err().is_internal());
    }

    fn two_agents(extra: bool) -> Instance {
        let text = if extra {
            r#"{"kind":"general","agents":["i","j"],"items":["p","q","z"],
                "relevance":{"i":["p","q"],"j":["p","q","z"]},
                "valuations":{"type":"additive","weights":{
                    "i":{"p":"1","q":"3"},"j":{"p":"3","q":"1","z":"1/2"}}}}"#
        } else {
            r#"{"kind":"general","agents":["i","j"],"items":["p","q"],
                "relevance":{"i":["p","q"],"j":["p","q"]},
                "valuations":{"type":"additive","weights":{
                    "i":{"p":"1","q":"3"},"j":{"p":"3","q":"1"}}}}"#
        };
        parse_instance(text).unwrap()
    }

    #[test]
    fn two_cycle_swaps_bundles() {
        let inst = two_agents(false);
        let alloc = Allocation::from_bundles(2, 2, vec![[ItemId(0)].into(), [ItemId(1)].into()]).unwrap();
        let mut st = SolverState::from_allocation(&inst, alloc);
        let before = st.potential().to_vec();
        assert_eq!(st.eliminate_cycles(&inst).unwrap(), 1);
        assert_eq!(st.alloc.bundle(AgentId(0)), &[ItemId(1)].into());
        assert_eq!(st.alloc.bundle(AgentId(1)), &[ItemId(0)].into());
        assert!(st.pool.is_empty());
        assert!(st.potential().iter().zip(&before).all(|(a, b)| a > b));
    }

    #[test]
    fn irrelevant_item_returns_to_pool() {
        let inst = two_agents(true);
        let alloc = Allocation::from_bundles(
            2,
            3,
            vec![[ItemId(0)].into(), [ItemId(1), ItemId(2)].into()],
        )
        .unwrap();
        let mut st = SolverState::from_allocation(&inst, alloc);
        let v_i_before = inst.value_of(AgentId(0), &[ItemId(1), ItemId(2)].into());
        st.eliminate_cycles(&inst).unwrap();
        assert_eq!(st.pool, VecDeque::from(vec![ItemId(2)]));
        assert_eq!(st.alloc.bundle(AgentId(0)), &[ItemId(1)].into());
        assert_eq!(st.potential()[0], v_i_before);
    }

    #[test]
    fn acyclic_state_is_unchanged() {
        let inst = parse_instance(INTRO).unwrap();
        let alloc = Allocation::from_bundles(2, 3, vec![[ItemId(0)].into(), [ItemId(1)].into()]).unwrap();
        let mut st = SolverState::from_allocation(&inst, alloc.clone());
        assert_eq!(st.eliminate_cycles(&inst).unwrap(), 0);
        assert_eq!(st.alloc, alloc);
    }

    #[test]
    fn identical_example_has_no_shifts() {
        let text = r#"{"kind":"general","agents":["1","2","3"],"items":["a1","a2","a3","a4"],
            "relevance":{"1":["a1","a2"],"2":["a2","a3"],"3":["a3","a4"]},
            "valuations":{"type":"identical","shared":{"additive":{"a1":"5","a2":"3","a3":"2","a4":"2"}}}}"#;
        let inst = parse_instance(text).unwrap();
        let fast = solve_ef1_identical(&inst).unwrap();
        assert!(check_ef1(&inst, &fast.allocation).holds);
        assert!(check_orientation(&inst, &fast.allocation).holds);
        assert_eq!(fast.stats.cycle_shifts, 0);
        let general = solve_ef1(&inst, &Policy::default()).unwrap();
        assert_eq!(general.stats.cycle_shifts, 0);
        assert!(check_ef1(&inst, &general.allocation).holds);
        assert!(matches!(solve_ef1_identical(&parse_instance(INTRO).unwrap()), Err(Error::NotIdentical(_))));
    }

    fn lists(lists: &[&[usize]], n: usize) -> Instance {
        let mut w = vec![serde_json::Map::new(); n];
        for (a, l) in lists.iter().enumerate() {
            for &i in *l {
                w[i].insert(format!("a{a}"), json!("1"));
            }
        }
        let mut rel = serde_json::Map::new();
        for (i, row) in w.iter().enumerate() {
            rel.insert(i.to_string(), json!(row.keys().collect::<Vec<_>>()));
        }
        let weights: serde_json::Map<String, Value> =
            w.into_iter().enumerate().map(|(i, r)| (i.to_string(), Value::Object(r))).collect();
        let doc = json!({
            "kind": "general",
            "agents": (0..n).map(|i| i.to_string()).collect::<Vec<_>>(),
            "items": (0..lists.len()).map(|a| format!("a{a}")).collect::<Vec<_>>(),
            "relevance": rel,
            "valuations": {"type": "additive", "weights": weights},
        });
        parse_instance(&doc.to_string()).unwrap()
    }

    #[test]
    fn laminar_orders() {
        let inst = lists(&[&[0, 1, 2], &[0, 1], &[2]], 3);
        assert_eq!(laminar_order(&inst), LaminarOrder::Order(vec![ItemId(0), ItemId(1), ItemId(2)]));
        let inst = lists(&[&[0, 1], &[1, 2]], 3);
        assert_eq!(laminar_order(&inst), LaminarOrder::NotLaminar(ItemId(0), ItemId(1)));
        let inst = lists(&[&[0, 1], &[0, 1], &[0, 1]], 2);
        assert!(matches!(laminar_order(&inst), LaminarOrder::Order(_)));
    }

    #[test]
    fn laminar_policy_rejects_crossing_lists() {
        let inst = lists(&[&[0, 1], &[1, 2]], 3);
        let policy = Policy {
            item_order: ItemOrder::Laminar,
            ..Policy::default()
        };
        assert!(matches!(solve_ef1(&inst, &policy), Err(Error::NotLaminar(..))));
    }

    #[test]
    fn trace_json_names_the_event() {
        let inst = parse_instance(INTRO).unwrap();
        let out = solve_ef1(&inst, &Policy::default()).unwrap();
        let j = out.trace[0].to_json(&inst);
        assert_eq!(j["event"], "assign");
        assert_eq!(j["potential"].as_array().unwrap().len(), 2);
    }
}
