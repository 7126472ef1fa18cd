//! Exhaustive EFX search for orientations of (multi)graphs and for small
//! general allocations.
//!
//! The search assigns items one by one and prunes a branch as soon as some
//! pair `(x, y)` can no longer satisfy EFX in any completion. Let `U_x` be
//! the value `x` would get from its bundle plus every still-unassigned item
//! it may receive, and `M` the part of `π_y` relevant to `x`. Since `π_y`
//! only grows and `x` never exceeds `U_x`:
//!
//! * if `π_y` already holds an item irrelevant to `x`, removing it leaves
//!   `M`, so `V_x(M) > U_x` is fatal;
//! * otherwise `max_a V_x(M ∖ a) > U_x` is fatal.
//!
//! At a leaf `U_x` is the final value and both tests are exactly EFX.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::{AgentId, Allocation, GraphInstance, Instance, IntValuation, ItemId, OrientationVector};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactConfig {
    /// Refuse graphs with more edges than this.
    pub edge_cap: usize,
    /// Apply the bound-based pruning (off only for soundness tests).
    pub prune: bool,
    /// Split the search over orientation prefixes with rayon.
    pub parallel: bool,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig {
            edge_cap: 24,
            prune: true,
            parallel: false,
        }
    }
}

/// Enumeration caps for general allocations (`n^m` leaves).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AllocationCaps {
    pub max_agents: usize,
    pub max_items: usize,
}

impl Default for AllocationCaps {
    fn default() -> Self {
        AllocationCaps {
            max_agents: 4,
            max_items: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes: u64,
    pub pruned: u64,
    pub leaves: u64,
}

impl SearchStats {
    fn add(&mut self, o: &SearchStats) {
        self.nodes += o.nodes;
        self.pruned += o.pruned;
        self.leaves += o.leaves;
    }
}

/// Static description of a search: item order, who may receive each item,
/// and every agent's integer valuation.
struct Problem {
    n: usize,
    order: Vec<ItemId>,
    candidates: Vec<Vec<AgentId>>,
    /// For each item: `(agent, local bit)` for every agent it is relevant to.
    relevant_bits: Vec<Vec<(usize, u64)>>,
    vals: Vec<IntValuation>,
    /// For each agent, agents that may ever hold an item relevant to it.
    related: Vec<Vec<usize>>,
    /// Inverse of `related`.
    watchers: Vec<Vec<usize>>,
}

impl Problem {
    fn new(inst: &Instance, order: Vec<ItemId>, candidates: Vec<Vec<AgentId>>) -> Result<Self> {
        let n = inst.n();
        let vals = inst.agents().map(|a| inst.int_valuation(a)).collect::<Result<Vec<_>>>()?;
        let mut relevant_bits = vec![Vec::new(); inst.m()];
        for a in inst.agents() {
            for (p, &it) in vals[a.0].domain().iter().enumerate() {
                relevant_bits[it.0].push((a.0, 1u64 << p));
            }
        }
        let mut related = vec![Vec::new(); n];
        for x in 0..n {
            let mut r: Vec<usize> = vals[x]
                .domain()
                .iter()
                .flat_map(|it| candidates[it.0].iter().map(|a| a.0))
                .filter(|&y| y != x)
                .collect();
            r.sort_unstable();
            r.dedup();
            related[x] = r;
        }
        let mut watchers = vec![Vec::new(); n];
        for x in 0..n {
            for &y in &related[x] {
                watchers[y].push(x);
            }
        }
        Ok(Problem {
            n,
            order,
            candidates,
            relevant_bits,
            vals,
            related,
            watchers,
        })
    }
}

#[derive(Clone)]
struct State {
    owner: Vec<Option<AgentId>>,
    own: Vec<u64>,
    avail: Vec<u64>,
    upper: Vec<i128>,
    /// `rel[x * n + y]`: items of `y` relevant to `x`, as `x`-local bits.
    rel: Vec<u64>,
    count: Vec<u32>,
    stats: SearchStats,
}

impl State {
    fn new(p: &Problem, m: usize) -> Self {
        let mut avail = vec![0u64; p.n];
        for it in &p.order {
            for &(x, bit) in &p.relevant_bits[it.0] {
                if p.candidates[it.0].iter().any(|a| a.0 == x) {
                    avail[x] |= bit;
                }
            }
        }
        let upper = (0..p.n).map(|x| p.vals[x].value(avail[x])).collect();
        State {
            owner: vec![None; m],
            own: vec![0; p.n],
            avail,
            upper,
            rel: vec![0; p.n * p.n],
            count: vec![0; p.n],
            stats: SearchStats::default(),
        }
    }

    fn apply(&mut self, p: &Problem, it: ItemId, y: usize) {
        self.owner[it.0] = Some(AgentId(y));
        self.count[y] += 1;
        for &(x, bit) in &p.relevant_bits[it.0] {
            if x == y {
                self.own[y] |= bit;
                self.avail[y] &= !bit;
            } else {
                self.rel[x * p.n + y] |= bit;
                if self.avail[x] & bit != 0 {
                    self.avail[x] &= !bit;
                    self.upper[x] = p.vals[x].value(self.own[x] | self.avail[x]);
                }
            }
        }
    }

    fn undo(&mut self, p: &Problem, it: ItemId, y: usize) {
        self.owner[it.0] = None;
        self.count[y] -= 1;
        let may = |x: usize| p.candidates[it.0].iter().any(|a| a.0 == x);
        for &(x, bit) in &p.relevant_bits[it.0] {
            if x == y {
                self.own[y] &= !bit;
                self.avail[y] |= bit;
            } else {
                self.rel[x * p.n + y] &= !bit;
                if may(x) {
                    self.avail[x] |= bit;
                    self.upper[x] = p.vals[x].value(self.own[x] | self.avail[x]);
                }
            }
        }
    }

    #[inline]
    fn pair_ok(&self, p: &Problem, x: usize, y: usize) -> bool {
        let m = self.rel[x * p.n + y];
        if m == 0 {
            return true;
        }
        let foreign = self.count[y] > m.count_ones();
        let lhs = if foreign {
            p.vals[x].value(m)
        } else {
            p.vals[x].max_after_removal(m)
        };
        lhs <= self.upper[x]
    }

    /// Pairs whose data changed when `it` went to `y`: everyone watching
    /// `y` (its bundle grew), and every other candidate that lost `it`.
    fn consistent_after(&self, p: &Problem, it: ItemId, y: usize) -> bool {
        for &x in &p.watchers[y] {
            if !self.pair_ok(p, x, y) {
                return false;
            }
        }
        for &(x, _) in &p.relevant_bits[it.0] {
            if x != y && p.candidates[it.0].iter().any(|a| a.0 == x) {
                for &w in &p.related[x] {
                    if !self.pair_ok(p, x, w) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn all_pairs_ok(&self, p: &Problem) -> bool {
        (0..p.n).all(|x| p.related[x].iter().all(|&y| self.pair_ok(p, x, y)))
    }
}

/// Depth-first search from depth `k`. `on_leaf` returns `true` to stop.
fn dfs(p: &Problem, st: &mut State, k: usize, prune: bool, on_leaf: &mut dyn FnMut(&State) -> bool) -> bool {
    st.stats.nodes += 1;
    if k == p.order.len() {
        st.stats.leaves += 1;
        if !prune && !st.all_pairs_ok(p) {
            return false;
        }
        return on_leaf(st);
    }
    let it = p.order[k];
    for a in &p.candidates[it.0] {
        let y = a.0;
        st.apply(p, it, y);
        if !prune || st.consistent_after(p, it, y) {
            if dfs(p, st, k + 1, prune, on_leaf) {
                return true;
            }
        } else {
            st.stats.pruned += 1;
        }
        st.undo(p, it, y);
    }
    false
}

/// Prefix assignments (in search order) of the first `depth` items.
fn prefixes(p: &Problem, depth: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for k in 0..depth {
        let it = p.order[k];
        out = out
            .into_iter()
            .flat_map(|pre| {
                p.candidates[it.0].iter().map(move |a| {
                    let mut v = pre.clone();
                    v.push(a.0);
                    v
                })
            })
            .collect();
    }
    out
}

fn apply_prefix(p: &Problem, st: &mut State, pre: &[usize], prune: bool) -> bool {
    for (k, &y) in pre.iter().enumerate() {
        let it = p.order[k];
        st.apply(p, it, y);
        if prune && !st.consistent_after(p, it, y) {
            return false;
        }
    }
    true
}

fn find_first(p: &Problem, m: usize, prune: bool, parallel: bool) -> (Option<Vec<Option<AgentId>>>, SearchStats) {
    if !parallel || p.order.len() < 8 {
        let mut st = State::new(p, m);
        let mut found = None;
        dfs(p, &mut st, 0, prune, &mut |s| {
            found = Some(s.owner.clone());
            true
        });
        return (found, st.stats);
    }
    let depth = p.order.len().min(10);
    let pres = prefixes(p, depth);
    let results: Vec<(Option<Vec<Option<AgentId>>>, SearchStats)> = pres
        .par_iter()
        .map(|pre| {
            let mut st = State::new(p, m);
            if !apply_prefix(p, &mut st, pre, prune) {
                return (None, st.stats);
            }
            let mut found = None;
            dfs(p, &mut st, depth, prune, &mut |s| {
                found = Some(s.owner.clone());
                true
            });
            (found, st.stats)
        })
        .collect();
    // The first success in prefix order is the sequential first witness.
    let mut stats = SearchStats::default();
    let mut found = None;
    for (f, s) in results {
        stats.add(&s);
        if found.is_none() {
            found = f;
        }
    }
    (found, stats)
}

fn count_all(p: &Problem, m: usize, prune: bool, parallel: bool) -> (u64, SearchStats) {
    let run = |pre: &[usize]| {
        let mut st = State::new(p, m);
        let mut count = 0u64;
        if apply_prefix(p, &mut st, pre, prune) {
            dfs(p, &mut st, pre.len(), prune, &mut |_| {
                count += 1;
                false
            });
        }
        (count, st.stats)
    };
    if !parallel || p.order.len() < 8 {
        return run(&[]);
    }
    let pres = prefixes(p, p.order.len().min(10));
    pres.par_iter().map(|pre| run(pre)).reduce(
        || (0, SearchStats::default()),
        |mut a, b| {
            a.0 += b.0;
            a.1.add(&b.1);
            a
        },
    )
}

/// Edges by decreasing largest endpoint value, ties in declaration order.
fn edge_order(g: &GraphInstance) -> Vec<ItemId> {
    let inst = g.instance();
    let weight = |e: ItemId| -> Rational {
        let (u, v) = g.endpoints(e);
        let one = |a| inst.value_of_items(a, std::iter::once(&e));
        one(u).max(one(v))
    };
    let mut order: Vec<ItemId> = inst.items().collect();
    order.sort_by_key(|&a| std::cmp::Reverse(weight(a)));
    order
}

fn graph_problem(g: &GraphInstance, cfg: &ExactConfig) -> Result<Problem> {
    if g.edge_count() > cfg.edge_cap {
        return Err(Error::CapExceeded {
            what: "edge count",
            size: g.edge_count(),
            cap: cfg.edge_cap,
        });
    }
    let candidates = g
        .all_endpoints()
        .iter()
        .map(|&(u, v)| vec![u, v])
        .collect();
    Problem::new(g.instance(), edge_order(g), candidates)
}

fn owners_to_orientation(g: &GraphInstance, owners: &[Option<AgentId>]) -> OrientationVector {
    OrientationVector(
        g.all_endpoints()
            .iter()
            .zip(owners)
            .map(|(&(_, v), o)| *o == Some(v))
            .collect(),
    )
}

/// Some EFX orientation, or `None` if every orientation fails.
pub fn brute_force_efx_orientation(g: &GraphInstance, cfg: &ExactConfig) -> Result<Option<OrientationVector>> {
    let p = graph_problem(g, cfg)?;
    let (found, stats) = find_first(&p, g.edge_count(), cfg.prune, cfg.parallel);
    log::debug!(
        "efx search: {} edges, {} nodes, {} pruned branches, {} leaves, answer {}",
        g.edge_count(),
        stats.nodes,
        stats.pruned,
        stats.leaves,
        if found.is_some() { "found" } else { "none (all branches exhausted or pruned)" }
    );
    Ok(found.map(|o| owners_to_orientation(g, &o)))
}

pub fn count_efx_orientations(g: &GraphInstance, cfg: &ExactConfig) -> Result<u64> {
    let p = graph_problem(g, cfg)?;
    let (count, stats) = count_all(&p, g.edge_count(), cfg.prune, cfg.parallel);
    log::debug!("efx count: {count} orientations, {} nodes, {} pruned", stats.nodes, stats.pruned);
    Ok(count)
}

/// Some EFX allocation (not necessarily an orientation), or `None`.
pub fn brute_force_efx_allocation(inst: &Instance, caps: AllocationCaps) -> Result<Option<Allocation>> {
    if inst.n() > caps.max_agents {
        return Err(Error::CapExceeded {
            what: "agent count",
            size: inst.n(),
            cap: caps.max_agents,
        });
    }
    if inst.m() > caps.max_items {
        return Err(Error::CapExceeded {
            what: "item count",
            size: inst.m(),
            cap: caps.max_items,
        });
    }
    if inst.n() == 0 {
        return Ok((inst.m() == 0).then(|| Allocation::for_instance(inst)));
    }
    let all: Vec<AgentId> = inst.agents().collect();
    let candidates = vec![all; inst.m()];
    let p = Problem::new(inst, inst.items().collect(), candidates)?;
    let (found, _) = find_first(&p, inst.m(), true, false);
    found
        .map(|owners| Allocation::from_owners(inst.n(), owners))
        .transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gadget_x;
    use crate::verify::{check_efx, check_orientation};

    fn q(n: i128) -> Rational {
        Rational::from_integer(n)
    }

    fn graph(n: usize, edges: &[(usize, usize, i128)]) -> GraphInstance {
        GraphInstance::symmetric(
            (0..n).map(|i| format!("v{i}")).collect(),
            edges
                .iter()
                .enumerate()
                .map(|(k, &(u, v, w))| (u, v, format!("e{k}"), q(w)))
                .collect(),
            false,
        )
        .unwrap()
    }

    fn assert_efx(g: &GraphInstance, o: &OrientationVector) {
        let a = g.orientation_allocation(o).unwrap();
        assert!(check_efx(g.instance(), &a).holds);
        assert!(check_orientation(g.instance(), &a).holds);
    }

    #[test]
    fn single_edge() {
        let g = graph(2, &[(0, 1, 1)]);
        let o = brute_force_efx_orientation(&g, &ExactConfig::default()).unwrap().unwrap();
        assert_efx(&g, &o);
        assert_eq!(count_efx_orientations(&g, &ExactConfig::default()).unwrap(), 2);
    }

    #[test]
    fn unit_triangle_has_two_cyclic_orientations() {
        let g = graph(3, &[(0, 1, 1), (1, 2, 1), (2, 0, 1)]);
        let o = brute_force_efx_orientation(&g, &ExactConfig::default()).unwrap().unwrap();
        assert_efx(&g, &o);
        assert_eq!(count_efx_orientations(&g, &ExactConfig::default()).unwrap(), 2);
    }

    #[test]
    fn gadget_has_none() {
        let g = gadget_x(q(3)).unwrap();
        assert_eq!(brute_force_efx_orientation(&g, &ExactConfig::default()).unwrap(), None);
        assert_eq!(count_efx_orientations(&g, &ExactConfig::default()).unwrap(), 0);
        let unpruned = ExactConfig {
            prune: false,
            ..ExactConfig::default()
        };
        assert_eq!(count_efx_orientations(&g, &unpruned).unwrap(), 0);
    }

    #[test]
    fn edge_cap_is_enforced() {
        let g = graph(2, &[(0, 1, 1)]);
        let cfg = ExactConfig {
            edge_cap: 0,
            ..ExactConfig::default()
        };
        assert!(matches!(brute_force_efx_orientation(&g, &cfg), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn path_with_weights_two_one() {
        let g = graph(3, &[(0, 1, 2), (1, 2, 1)]);
        let o = brute_force_efx_orientation(&g, &ExactConfig::default()).unwrap().unwrap();
        assert_efx(&g, &o);
    }

    #[test]
    fn parallel_matches_sequential_witness() {
        let g = graph(
            6,
            &[(0, 1, 3), (1, 2, 1), (2, 3, 2), (3, 4, 1), (4, 5, 2), (5, 0, 1), (0, 3, 1), (1, 4, 2), (2, 5, 1)],
        );
        let seq = brute_force_efx_orientation(&g, &ExactConfig::default()).unwrap();
        let par = brute_force_efx_orientation(
            &g,
            &ExactConfig {
                parallel: true,
                ..ExactConfig::default()
            },
        )
        .unwrap();
        assert_eq!(seq, par);
        let c_seq = count_efx_orientations(&g, &ExactConfig::default()).unwrap();
        let c_par = count_efx_orientations(
            &g,
            &ExactConfig {
                parallel: true,
                ..ExactConfig::default()
            },
        )
        .unwrap();
        assert_eq!(c_seq, c_par);
    }

    fn additive(rows: &[&[i128]]) -> Instance {
        use crate::instance::{InstanceKind, Structure, ValuationProfile};
        let n = rows.len();
        let m = rows[0].len();
        Instance::new(
            InstanceKind::General,
            (0..n).map(|i| format!("{i}")).collect(),
            (0..m).map(|a| format!("a{a}")).collect(),
            (0..n)
                .map(|i| (0..m).filter(|&a| rows[i][a] > 0).map(ItemId).collect())
                .collect(),
            ValuationProfile::Additive {
                weights: rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect(),
            },
            Structure::General,
        )
        .unwrap()
    }

    #[test]
    fn small_allocations() {
        for rows in [&[&[1i128, 1][..], &[3, 1][..]][..], &[&[1, 1, 1][..], &[1, 1, 1][..]][..], &[&[2, 5, 1][..]][..]] {
            let inst = additive(rows);
            let a = brute_force_efx_allocation(&inst, AllocationCaps::default()).unwrap().unwrap();
            assert!(a.is_total());
            assert!(check_efx(&inst, &a).holds);
        }
        let inst = additive(&[&[1; 11]]);
        assert!(brute_force_efx_allocation(&inst, AllocationCaps::default()).is_err());
    }
}
