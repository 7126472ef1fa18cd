//! Definitional fairness checkers.
//!
//! These are deliberately naive: every pair of agents is compared by direct
//! value queries, so they serve as the oracle for all solvers. Partial
//! allocations are judged on the allocated items only.

use serde_json::{json, Value};

use crate::instance::{AgentId, Allocation, Instance, ItemId, ItemSet};
use crate::rational::{format_rational, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Property {
    Ef,
    Ef1,
    Efx,
    Efxr,
}

impl Property {
    pub fn as_str(self) -> &'static str {
        match self {
            Property::Ef => "EF",
            Property::Ef1 => "EF1",
            Property::Efx => "EFX",
            Property::Efxr => "EFXr",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ef" => Some(Property::Ef),
            "ef1" => Some(Property::Ef1),
            "efx" => Some(Property::Efx),
            "efxr" => Some(Property::Efxr),
            _ => None,
        }
    }
}

/// One unresolved envy `envier → envied`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub envier: AgentId,
    pub envied: AgentId,
    /// `V_envier(π_envier)`.
    pub own_value: Rational,
    /// `V_envier(π_envied)`.
    pub other_value: Rational,
    /// EF1: the removal that helps most. EFX/EFXr: the first removal that
    /// does not help. `None` for EF.
    pub item: Option<ItemId>,
    /// `V_envier(π_envied ∖ item)`.
    pub after_removal: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FairnessReport {
    pub property: Property,
    pub holds: bool,
    pub violations: Vec<Violation>,
}

impl FairnessReport {
    fn from_violations(property: Property, violations: Vec<Violation>) -> Self {
        FairnessReport {
            property,
            holds: violations.is_empty(),
            violations,
        }
    }

    pub fn to_json(&self, inst: &Instance) -> Value {
        let violations: Vec<Value> = self
            .violations
            .iter()
            .map(|v| {
                let mut o = json!({
                    "envier": inst.agent_name(v.envier),
                    "envied": inst.agent_name(v.envied),
                    "own_value": format_rational(&v.own_value),
                    "envied_value": format_rational(&v.other_value),
                });
                if let (Some(it), Some(r)) = (v.item, &v.after_removal) {
                    o["item"] = json!(inst.item_name(it));
                    o["after_removal"] = json!(format_rational(r));
                }
                o
            })
            .collect();
        json!({"property": self.property.as_str(), "holds": self.holds, "violations": violations})
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrientationReport {
    pub holds: bool,
    pub offenders: Vec<(AgentId, ItemId)>,
}

impl OrientationReport {
    pub fn to_json(&self, inst: &Instance) -> Value {
        let offenders: Vec<Value> = self
            .offenders
            .iter()
            .map(|&(a, it)| json!({"agent": inst.agent_name(a), "item": inst.item_name(it)}))
            .collect();
        json!({"property": "orientation", "holds": self.holds, "offenders": offenders})
    }
}

pub fn check_orientation(inst: &Instance, alloc: &Allocation) -> OrientationReport {
    let offenders = alloc.orientation_offenders(inst);
    OrientationReport {
        holds: offenders.is_empty(),
        offenders,
    }
}

pub fn check(inst: &Instance, alloc: &Allocation, property: Property) -> FairnessReport {
    match property {
        Property::Ef => check_ef(inst, alloc),
        Property::Ef1 => check_ef1(inst, alloc),
        Property::Efx => check_efx(inst, alloc),
        Property::Efxr => check_efxr(inst, alloc),
    }
}

/// Visits every envious ordered pair with the two values.
fn envious_pairs(
    inst: &Instance,
    alloc: &Allocation,
    mut f: impl FnMut(AgentId, AgentId, Rational, Rational),
) {
    for i in inst.agents() {
        let own = inst.value_of(i, alloc.bundle(i));
        for j in inst.agents() {
            if i == j {
                continue;
            }
            let other = inst.value_of(i, alloc.bundle(j));
            if other > own {
                f(i, j, own, other);
            }
        }
    }
}

fn without(bundle: &ItemSet, item: ItemId) -> impl Iterator<Item = &ItemId> {
    bundle.iter().filter(move |&&x| x != item)
}

pub fn check_ef(inst: &Instance, alloc: &Allocation) -> FairnessReport {
    let mut v = Vec::new();
    envious_pairs(inst, alloc, |i, j, own, other| {
        v.push(Violation {
            envier: i,
            envied: j,
            own_value: own,
            other_value: other,
            item: None,
            after_removal: None,
        })
    });
    FairnessReport::from_violations(Property::Ef, v)
}

pub fn check_ef1(inst: &Instance, alloc: &Allocation) -> FairnessReport {
    let mut v = Vec::new();
    envious_pairs(inst, alloc, |i, j, own, other| {
        let bundle = alloc.bundle(j);
        let best = bundle
            .iter()
            .map(|&a| (a, inst.value_of_items(i, without(bundle, a))))
            .min_by(|x, y| x.1.cmp(&y.1));
        if let Some((a, rest)) = best {
            if rest > own {
                v.push(Violation {
                    envier: i,
                    envied: j,
                    own_value: own,
                    other_value: other,
                    item: Some(a),
                    after_removal: Some(rest),
                });
            }
        }
    });
    FairnessReport::from_violations(Property::Ef1, v)
}

fn check_up_to_any(inst: &Instance, alloc: &Allocation, relevant_only: bool) -> FairnessReport {
    let mut v = Vec::new();
    envious_pairs(inst, alloc, |i, j, own, other| {
        let bundle = alloc.bundle(j);
        let failing = bundle
            .iter()
            .filter(|&&a| !relevant_only || inst.is_relevant(i, a))
            .map(|&a| (a, inst.value_of_items(i, without(bundle, a))))
            .find(|(_, rest)| *rest > own);
        if let Some((a, rest)) = failing {
            v.push(Violation {
                envier: i,
                envied: j,
                own_value: own,
                other_value: other,
                item: Some(a),
                after_removal: Some(rest),
            });
        }
    });
    let property = if relevant_only { Property::Efxr } else { Property::Efx };
    FairnessReport::from_violations(property, v)
}

pub fn check_efx(inst: &Instance, alloc: &Allocation) -> FairnessReport {
    check_up_to_any(inst, alloc, false)
}

pub fn check_efxr(inst: &Instance, alloc: &Allocation) -> FairnessReport {
    check_up_to_any(inst, alloc, true)
}

/// Arc `i → j` iff `V_i(π_j) > V_i(π_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvyGraph {
    n: usize,
    arcs: Vec<bool>,
}

impl EnvyGraph {
    pub fn empty(n: usize) -> Self {
        EnvyGraph {
            n,
            arcs: vec![false; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_arc(&self, i: AgentId, j: AgentId) -> bool {
        self.arcs[i.0 * self.n + j.0]
    }

    pub(crate) fn set_arc(&mut self, i: AgentId, j: AgentId, on: bool) {
        self.arcs[i.0 * self.n + j.0] = on;
    }

    pub fn arcs(&self) -> Vec<(AgentId, AgentId)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.arcs[i * self.n + j] {
                    out.push((AgentId(i), AgentId(j)));
                }
            }
        }
        out
    }

    /// First cycle found by depth-first search, starting from the lowest
    /// agent and exploring out-neighbours in index order. The cycle is
    /// returned as `[i_1, ..., i_l]` with arcs `i_k → i_{k+1}` and
    /// `i_l → i_1`.
    pub fn find_cycle(&self) -> Option<Vec<AgentId>> {
        // 0 = unvisited, 1 = on stack, 2 = done.
        let mut state = vec![0u8; self.n];
        let mut path: Vec<usize> = Vec::new();
        for root in 0..self.n {
            if state[root] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
            state[root] = 1;
            path.push(root);
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if *next < self.n {
                    let w = *next;
                    *next += 1;
                    if !self.arcs[v * self.n + w] {
                        continue;
                    }
                    match state[w] {
                        0 => {
                            state[w] = 1;
                            path.push(w);
                            stack.push((w, 0));
                        }
                        1 => {
                            let start = path.iter().position(|&x| x == w).expect("on stack");
                            return Some(path[start..].iter().map(|&x| AgentId(x)).collect());
                        }
                        _ => {}
                    }
                } else {
                    state[v] = 2;
                    path.pop();
                    stack.pop();
                }
            }
        }
        None
    }

    /// Candidates with no incoming arc from another candidate, in index order.
    pub fn sources_within(&self, candidates: &[AgentId]) -> Vec<AgentId> {
        candidates
            .iter()
            .copied()
            .filter(|&j| !candidates.iter().any(|&i| i != j && self.has_arc(i, j)))
            .collect()
    }

    pub fn to_json(&self, inst: &Instance) -> Value {
        let arcs: Vec<Value> = self
            .arcs()
            .into_iter()
            .map(|(i, j)| json!([inst.agent_name(i), inst.agent_name(j)]))
            .collect();
        json!({"arcs": arcs})
    }
}

pub fn envy_graph(inst: &Instance, alloc: &Allocation) -> EnvyGraph {
    let mut g = EnvyGraph::empty(inst.n());
    envious_pairs(inst, alloc, |i, j, _, _| g.set_arc(i, j, true));
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::io::parse_instance;

    const INTRO: &str = r#"{"kind":"general","agents":["X","Y"],"items":["a","b","c"],
        "relevance":{"X":["a","b","c"],"Y":["b"]},
        "valuations":{"type":"additive","weights":{"X":{"a":"1","b":"1","c":"1/5"},"Y":{"b":"1"}}}}"#;

    fn alloc(inst: &Instance, x: &[&str], y: &[&str]) -> Allocation {
        let b = |names: &[&str]| names.iter().map(|n| inst.item_id(n).unwrap()).collect();
        Allocation::from_bundles(2, inst.m(), vec![b(x), b(y)]).unwrap()
    }

    #[test]
    fn intro_orientation_checks() {
        let inst = parse_instance(INTRO).unwrap();
        let bad = check_orientation(&inst, &alloc(&inst, &["a"], &["b", "c"]));
        assert!(!bad.holds);
        assert_eq!(bad.offenders, vec![(AgentId(1), inst.item_id("c").unwrap())]);
        assert!(check_orientation(&inst, &alloc(&inst, &["a", "c"], &["b"])).holds);
        assert!(check_orientation(&inst, &Allocation::for_instance(&inst)).holds);
    }

    #[test]
    fn intro_allocation_is_efx_and_ef1() {
        let inst = parse_instance(INTRO).unwrap();
        let a = alloc(&inst, &["a"], &["b", "c"]);
        assert!(check_ef1(&inst, &a).holds);
        assert!(check_efx(&inst, &a).holds);
        assert!(check_efxr(&inst, &a).holds);
        // X values {b, c} at 6/5 against 1 for {a}: envious but EFX.
        assert_eq!(envy_graph(&inst, &a).arcs(), vec![(AgentId(0), AgentId(1))]);
    }

    #[test]
    fn everything_to_y_fails_ef1() {
        let inst = parse_instance(INTRO).unwrap();
        let r = check_ef1(&inst, &alloc(&inst, &[], &["a", "b", "c"]));
        assert!(!r.holds);
        let v = &r.violations[0];
        assert_eq!(v.envier, AgentId(0));
        // Removing a or b leaves 6/5; removing c leaves 2.
        assert_eq!(v.after_removal, Some(Rational::new(6, 5)));
    }

    #[test]
    fn envy_arc_only_one_way() {
        let inst = parse_instance(INTRO).unwrap();
        let g = envy_graph(&inst, &alloc(&inst, &[], &["b"]));
        assert_eq!(g.arcs(), vec![(AgentId(0), AgentId(1))]);
        assert!(envy_graph(&inst, &Allocation::for_instance(&inst)).arcs().is_empty());
    }

    #[test]
    fn cycle_search_and_sources() {
        let mut g = EnvyGraph::empty(4);
        g.set_arc(AgentId(0), AgentId(1), true);
        g.set_arc(AgentId(1), AgentId(2), true);
        assert_eq!(g.find_cycle(), None);
        let cands = [AgentId(0), AgentId(1), AgentId(2)];
        assert_eq!(g.sources_within(&cands), vec![AgentId(0)]);
        g.set_arc(AgentId(2), AgentId(1), true);
        assert_eq!(g.find_cycle(), Some(vec![AgentId(1), AgentId(2)]));
    }

    #[test]
    fn report_json_shape() {
        let inst = parse_instance(INTRO).unwrap();
        let r = check_ef1(&inst, &alloc(&inst, &[], &["a", "b", "c"]));
        let j = r.to_json(&inst);
        assert_eq!(j["property"], "EF1");
        assert_eq!(j["holds"], false);
        assert_eq!(j["violations"][0]["envier"], "X");
    }
}
