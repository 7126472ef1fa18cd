//! Hard-instance constructors (gadget X and the two PARTITION reductions)
//! and seeded random instance families.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::instance::{
    AgentId, BundleTable, GraphInstance, Instance, InstanceKind, ItemId, PlanarInstance, SharedValuation, Structure,
    ValuationProfile,
};
use crate::rational::Rational;
use crate::rng::SplitMix64;

/// A multiset of positive integers to be split into two equal halves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionInput {
    values: Vec<u64>,
}

impl PartitionInput {
    pub fn new(values: Vec<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Partition("empty multiset".into()));
        }
        if values.contains(&0) {
            return Err(Error::Partition("values must be positive".into()));
        }
        Ok(PartitionInput { values })
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn total(&self) -> u64 {
        self.values.iter().sum()
    }

    /// Half the total; not an integer when the total is odd.
    pub fn target(&self) -> Rational {
        Rational::new(self.total() as i128, 2)
    }

    /// Every value is strictly below the target, and the target exceeds 2.
    /// Gadget X only loses its EFX orientations once its heavy edges weigh
    /// more than 2, so smaller targets break the reduction ({1,1,1} is a
    /// NO input whose graph still has an EFX orientation).
    pub fn is_valid_for_reduction(&self) -> bool {
        let b = self.target();
        b > Rational::from_integer(2) && self.values.iter().all(|&s| Rational::from_integer(s as i128) < b)
    }

    /// Subset-sum check by bitset DP.
    pub fn has_equal_split(&self) -> bool {
        let total = self.total();
        if total % 2 == 1 {
            return false;
        }
        let half = (total / 2) as usize;
        let mut reach = vec![false; half + 1];
        reach[0] = true;
        for &s in &self.values {
            let s = s as usize;
            for t in (s..=half).rev() {
                reach[t] |= reach[t - s];
            }
        }
        reach[half]
    }

    fn require_valid(&self) -> Result<()> {
        if self.is_valid_for_reduction() {
            Ok(())
        } else {
            Err(Error::Partition(format!(
                "half the total ({}) must exceed 2 and every value must be below it",
                crate::rational::format_rational(&self.target())
            )))
        }
    }
}

/// A reduction output along with a vertex cover of its graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Reduction {
    pub graph: GraphInstance,
    pub vertex_cover: Vec<AgentId>,
}

struct Builder {
    vertices: Vec<String>,
    edges: Vec<(usize, usize, String, Rational)>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            vertices: Vec::new(),
            edges: Vec::new(),
        }
    }

    fn vertex(&mut self, name: impl Into<String>) -> usize {
        self.vertices.push(name.into());
        self.vertices.len() - 1
    }

    fn edge(&mut self, u: usize, v: usize, w: Rational) {
        let id = format!("e{}", self.edges.len());
        self.edges.push((u, v, id, w));
    }

    /// K4 on four new vertices; returns their indices.
    fn gadget(&mut self, prefix: &str, b: Rational) -> [usize; 4] {
        let x = [1, 2, 3, 4].map(|k| self.vertex(format!("{prefix}{k}")));
        let one = Rational::from_integer(1);
        self.edge(x[0], x[1], b);
        self.edge(x[2], x[3], b);
        self.edge(x[0], x[2], one);
        self.edge(x[0], x[3], one);
        self.edge(x[1], x[2], one);
        self.edge(x[1], x[3], one);
        x
    }

    fn finish(self, multi: bool) -> Result<GraphInstance> {
        GraphInstance::symmetric(self.vertices, self.edges, multi)
    }
}

/// Weighted K4 without an EFX orientation: edges X1X2 and X3X4 weigh `b`,
/// the other four weigh 1.
pub fn gadget_x(b: Rational) -> Result<GraphInstance> {
    if b < Rational::from_integer(3) {
        return Err(Error::Params("gadget weight must be at least 3".into()));
    }
    let mut g = Builder::new();
    g.gadget("X", b);
    g.finish(false)
}

/// Gadgets and connectors come first so that an edge search meets the
/// forcing structure before the partition choices.
fn reduction_frame(s: &PartitionInput) -> (Builder, usize, usize, Vec<AgentId>) {
    let b = s.target();
    let mut g = Builder::new();
    let i = g.vertex("i");
    let j = g.vertex("j");
    let x1 = g.gadget("X1", b);
    let x2 = g.gadget("X2", b);
    g.edge(i, x1[0], b);
    g.edge(j, x2[0], b);
    // {i, j} plus three corners of each clique.
    let cover = [i, j, x1[0], x1[1], x1[2], x2[0], x2[1], x2[2]].map(AgentId).to_vec();
    (g, i, j, cover)
}

/// PARTITION to EFX orientation on a graph with a constant-size vertex cover.
pub fn partition_to_vc_graph(s: &PartitionInput) -> Result<GraphInstance> {
    Ok(partition_to_vc_graph_with_cover(s)?.graph)
}

pub fn partition_to_vc_graph_with_cover(s: &PartitionInput) -> Result<Reduction> {
    s.require_valid()?;
    let (mut g, i, j, cover) = reduction_frame(s);
    for (v, &sv) in s.values().iter().enumerate() {
        let x = g.vertex(format!("x{}", v + 1));
        let w = Rational::from_integer(sv as i128);
        g.edge(i, x, w);
        g.edge(j, x, w);
    }
    Ok(Reduction {
        graph: g.finish(false)?,
        vertex_cover: cover,
    })
}

/// PARTITION to EFX orientation on a 10-vertex multigraph.
pub fn partition_to_multigraph(s: &PartitionInput) -> Result<GraphInstance> {
    Ok(partition_to_multigraph_with_cover(s)?.graph)
}

pub fn partition_to_multigraph_with_cover(s: &PartitionInput) -> Result<Reduction> {
    s.require_valid()?;
    let (mut g, i, j, cover) = reduction_frame(s);
    for &sv in s.values() {
        g.edge(i, j, Rational::from_integer(sv as i128));
    }
    Ok(Reduction {
        graph: g.finish(true)?,
        vertex_cover: cover,
    })
}

pub fn is_vertex_cover(g: &GraphInstance, cover: &[AgentId]) -> bool {
    g.all_endpoints()
        .iter()
        .all(|(u, v)| cover.contains(u) || cover.contains(v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RandomKind {
    General,
    Table,
    Graph,
    Multigraph,
    Laminar,
    Identical,
    Decomposable,
    Planar,
}

impl RandomKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "general" => RandomKind::General,
            "table" => RandomKind::Table,
            "graph" => RandomKind::Graph,
            "multigraph" => RandomKind::Multigraph,
            "laminar" => RandomKind::Laminar,
            "identical" => RandomKind::Identical,
            "decomposable" => RandomKind::Decomposable,
            "planar" => RandomKind::Planar,
            other => return Err(Error::Params(format!("unknown random kind `{other}`"))),
        })
    }
}

/// Knobs for [`random_instance`]. `items` means edges for graph kinds and
/// is ignored for planar instances (faces follow from `agents`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomParams {
    pub agents: usize,
    pub items: usize,
    pub max_weight: u64,
    /// Percent chance that an agent ignores an item (general kind).
    pub zero_percent: u64,
    /// Laminar nesting depth, or the number of groups (decomposable).
    pub depth: usize,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            agents: 4,
            items: 6,
            max_weight: 5,
            zero_percent: 40,
            depth: 2,
        }
    }
}

const MAX_AGENTS: usize = 64;
const MAX_ITEMS: usize = 256;
const MAX_TABLE_ITEMS: usize = 10;

fn names(prefix: &str, k: usize) -> Vec<String> {
    (0..k).map(|i| format!("{prefix}{i}")).collect()
}

fn int(x: u64) -> Rational {
    Rational::from_integer(x as i128)
}

pub fn random_instance(kind: RandomKind, params: &RandomParams, seed: u64) -> Result<Instance> {
    let p = params;
    if p.agents == 0 || p.agents > MAX_AGENTS {
        return Err(Error::Params(format!("agents must be in 1..={MAX_AGENTS}")));
    }
    if p.items > MAX_ITEMS {
        return Err(Error::Params(format!("items must be at most {MAX_ITEMS}")));
    }
    if p.max_weight == 0 {
        return Err(Error::Params("max_weight must be positive".into()));
    }
    let mut rng = SplitMix64::new(seed);
    match kind {
        RandomKind::General => random_general(p, &mut rng),
        RandomKind::Table => random_table(p, &mut rng),
        RandomKind::Graph => Ok(random_graph(p, false, &mut rng)?.into_instance()),
        RandomKind::Multigraph => Ok(random_graph(p, true, &mut rng)?.into_instance()),
        RandomKind::Laminar => random_laminar(p, &mut rng),
        RandomKind::Identical => random_identical(p, &mut rng),
        RandomKind::Decomposable => random_decomposable(p, &mut rng),
        RandomKind::Planar => Ok(random_planar(p.agents, p.max_weight, false, &mut rng)?.instance().clone()),
    }
}

fn general_from_weights(n: usize, weights: Vec<Vec<Rational>>) -> Result<Instance> {
    let m = weights.first().map_or(0, |r| r.len());
    let relevance = weights
        .iter()
        .map(|row| (0..m).filter(|&a| row[a] > Rational::from_integer(0)).map(ItemId).collect())
        .collect();
    Instance::new(
        InstanceKind::General,
        names("agent", n),
        names("item", m),
        relevance,
        ValuationProfile::Additive { weights },
        Structure::General,
    )
}

fn random_general(p: &RandomParams, rng: &mut SplitMix64) -> Result<Instance> {
    let mut weights = vec![vec![Rational::from_integer(0); p.items]; p.agents];
    for a in 0..p.items {
        for row in weights.iter_mut() {
            if !rng.chance(p.zero_percent.min(100), 100) {
                row[a] = int(rng.range(1, p.max_weight));
            }
        }
        if weights.iter().all(|row| row[a] == Rational::from_integer(0)) {
            let i = rng.index(p.agents);
            weights[i][a] = int(rng.range(1, p.max_weight));
        }
    }
    general_from_weights(p.agents, weights)
}

/// Random monotone table over `domain`: each bundle adds a random
/// non-negative bonus to its best proper subset, singletons stay positive.
fn random_monotone_table(domain: Vec<ItemId>, max_weight: u64, rng: &mut SplitMix64) -> Result<BundleTable> {
    let k = domain.len();
    let mut values = vec![Rational::from_integer(0); 1 << k];
    for mask in 1usize..(1 << k) {
        let best = (0..k)
            .filter(|b| mask & (1 << b) != 0)
            .map(|b| values[mask & !(1 << b)])
            .max()
            .unwrap_or_default();
        let lo = if mask.count_ones() == 1 { 1 } else { 0 };
        values[mask] = best + int(rng.range(lo, max_weight));
    }
    BundleTable::new(domain, values)
}

fn random_table(p: &RandomParams, rng: &mut SplitMix64) -> Result<Instance> {
    if p.items > MAX_TABLE_ITEMS {
        return Err(Error::Params(format!("table instances allow at most {MAX_TABLE_ITEMS} items")));
    }
    let mut relevance: Vec<Vec<ItemId>> = vec![Vec::new(); p.agents];
    for a in 0..p.items {
        let mut any = false;
        for rel in relevance.iter_mut() {
            if !rng.chance(p.zero_percent.min(100), 100) {
                rel.push(ItemId(a));
                any = true;
            }
        }
        if !any {
            relevance[rng.index(p.agents)].push(ItemId(a));
        }
    }
    let tables = relevance
        .iter()
        .map(|rel| random_monotone_table(rel.clone(), p.max_weight, rng))
        .collect::<Result<Vec<_>>>()?;
    Instance::new(
        InstanceKind::General,
        names("agent", p.agents),
        names("item", p.items),
        relevance,
        ValuationProfile::Table { tables },
        Structure::General,
    )
}

pub fn random_graph_instance(params: &RandomParams, multi: bool, seed: u64) -> Result<GraphInstance> {
    random_graph(params, multi, &mut SplitMix64::new(seed))
}

fn random_graph(p: &RandomParams, multi: bool, rng: &mut SplitMix64) -> Result<GraphInstance> {
    let n = p.agents;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    if pairs.is_empty() && p.items > 0 {
        return Err(Error::Params("edges need at least two vertices".into()));
    }
    let chosen: Vec<(usize, usize)> = if multi {
        (0..p.items).map(|_| pairs[rng.index(pairs.len())]).collect()
    } else {
        if p.items > pairs.len() {
            return Err(Error::Params(format!(
                "{} vertices allow at most {} edges",
                n,
                pairs.len()
            )));
        }
        let mut all = pairs;
        rng.shuffle(&mut all);
        all.truncate(p.items);
        all.sort_unstable();
        all
    };
    let edges = chosen
        .into_iter()
        .enumerate()
        .map(|(k, (u, v))| (u, v, format!("e{k}"), int(rng.range(1, p.max_weight))))
        .collect();
    GraphInstance::symmetric(names("v", n), edges, multi)
}

/// Random graph whose vertices hold random monotone tables over their
/// incident edges instead of symmetric weights.
pub fn random_monotone_graph(params: &RandomParams, seed: u64) -> Result<GraphInstance> {
    let mut rng = SplitMix64::new(seed);
    let base = random_graph(params, false, &mut rng)?;
    if base.vertex_count() > 0 && (0..base.vertex_count()).any(|v| base.incident(AgentId(v)).len() > MAX_TABLE_ITEMS) {
        return Err(Error::Params(format!("vertex degree above {MAX_TABLE_ITEMS}")));
    }
    let tables = (0..base.vertex_count())
        .map(|v| random_monotone_table(base.incident(AgentId(v)).to_vec(), params.max_weight, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let inst = base.instance();
    let edges = base
        .all_endpoints()
        .iter()
        .enumerate()
        .map(|(k, &(u, v))| (u.0, v.0, inst.item_name(ItemId(k)).to_string()))
        .collect();
    GraphInstance::with_valuation(
        inst.agent_names().to_vec(),
        edges,
        false,
        ValuationProfile::Table { tables },
    )
}

/// Additive instance where item `a` is valued exactly by `lists[a]`.
fn additive_over_lists(n: usize, lists: &[Vec<usize>], max_weight: u64, rng: &mut SplitMix64) -> Result<Instance> {
    let mut weights = vec![vec![Rational::from_integer(0); lists.len()]; n];
    for (a, list) in lists.iter().enumerate() {
        for &i in list {
            weights[i][a] = int(rng.range(1, max_weight));
        }
    }
    general_from_weights(n, weights)
}

fn random_laminar(p: &RandomParams, rng: &mut SplitMix64) -> Result<Instance> {
    if p.depth == 0 || p.depth > p.agents {
        return Err(Error::Params(format!(
            "laminar depth must be in 1..={} (the agent count)",
            p.agents
        )));
    }
    // Nested chain root ⊋ ... plus random disjoint splits along the way.
    let mut family: Vec<Vec<usize>> = Vec::new();
    let mut order: Vec<usize> = (0..p.agents).collect();
    rng.shuffle(&mut order);
    fn split(set: &[usize], depth: usize, rng: &mut SplitMix64, family: &mut Vec<Vec<usize>>) {
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        family.push(sorted);
        if depth <= 1 || set.len() <= 1 {
            return;
        }
        let cut = rng.range(1, set.len() as u64 - 1) as usize;
        let (a, b) = set.split_at(cut);
        split(a, depth - 1, rng, family);
        if rng.chance(1, 2) {
            split(b, depth - 1, rng, family);
        }
    }
    split(&order, p.depth, rng, &mut family);
    let lists: Vec<Vec<usize>> = (0..p.items).map(|_| family[rng.index(family.len())].clone()).collect();
    additive_over_lists(p.agents, &lists, p.max_weight, rng)
}

fn random_identical(p: &RandomParams, rng: &mut SplitMix64) -> Result<Instance> {
    let shared: Vec<Rational> = (0..p.items).map(|_| int(rng.range(1, p.max_weight))).collect();
    let mut relevance: Vec<Vec<ItemId>> = vec![Vec::new(); p.agents];
    for a in 0..p.items {
        let mut any = false;
        for rel in relevance.iter_mut() {
            if rng.chance(1, 2) {
                rel.push(ItemId(a));
                any = true;
            }
        }
        if !any {
            relevance[rng.index(p.agents)].push(ItemId(a));
        }
    }
    Instance::new(
        InstanceKind::General,
        names("agent", p.agents),
        names("item", p.items),
        relevance,
        ValuationProfile::Identical {
            shared: SharedValuation::Additive(shared),
        },
        Structure::General,
    )
}

fn random_decomposable(p: &RandomParams, rng: &mut SplitMix64) -> Result<Instance> {
    let groups = p.depth.max(1);
    if p.items < groups {
        return Err(Error::Params("decomposable instances need at least one item per group".into()));
    }
    // Each new group takes fresh agents plus at most one agent seen before,
    // so any two groups share at most one agent.
    let mut lists: Vec<Vec<usize>> = Vec::new();
    let mut next = 0usize;
    for g in 0..groups {
        let mut members = Vec::new();
        if g > 0 && next > 0 && rng.chance(3, 4) {
            members.push(rng.index(next));
        }
        let fresh = rng.range(1, 2) as usize;
        for _ in 0..fresh {
            if next < p.agents {
                members.push(next);
                next += 1;
            }
        }
        if members.is_empty() {
            members.push(rng.index(next.max(1)));
        }
        members.sort_unstable();
        members.dedup();
        if lists.iter().any(|l| overlap(l, &members) > 1 || *l == members) {
            continue;
        }
        lists.push(members);
    }
    if next < p.agents {
        return Err(Error::Params(format!(
            "{groups} groups cannot use all {} agents; raise the group count",
            p.agents
        )));
    }
    let mut item_lists: Vec<Vec<usize>> = lists.clone();
    while item_lists.len() < p.items {
        item_lists.push(lists[rng.index(lists.len())].clone());
    }
    rng.shuffle(&mut item_lists);
    additive_over_lists(p.agents, &item_lists, p.max_weight, rng)
}

fn overlap(a: &[usize], b: &[usize]) -> usize {
    a.iter().filter(|x| b.contains(x)).count()
}

pub fn random_planar_instance(vertices: usize, max_weight: u64, seed: u64) -> Result<PlanarInstance> {
    random_planar(vertices, max_weight, false, &mut SplitMix64::new(seed))
}

/// Like [`random_planar_instance`], but every vertex gets its own random
/// monotone table over its faces (at most ten faces per vertex).
pub fn random_planar_table_instance(vertices: usize, max_weight: u64, seed: u64) -> Result<PlanarInstance> {
    random_planar(vertices, max_weight, true, &mut SplitMix64::new(seed))
}

/// Triangulated disk grown from one triangle. Each step glues a new vertex
/// onto one boundary edge or onto two consecutive ones, or closes a
/// boundary angle `a-b-c` with the face `abc`.
fn random_planar(vertices: usize, max_weight: u64, tables: bool, rng: &mut SplitMix64) -> Result<PlanarInstance> {
    if vertices < 3 {
        return Err(Error::Params("planar instances need at least 3 vertices".into()));
    }
    let cap = if tables { MAX_TABLE_ITEMS } else { usize::MAX };
    let mut faces: Vec<[AgentId; 3]> = vec![[AgentId(0), AgentId(1), AgentId(2)]];
    let mut boundary: Vec<usize> = vec![0, 1, 2];
    let mut load = vec![1usize; 3];
    let mut adj: BTreeSet<(usize, usize)> = [(0, 1), (0, 2), (1, 2)].into_iter().collect();
    let mut attempts = 0;
    while load.len() < vertices {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::Params("could not grow a disk within the face cap".into()));
        }
        let len = boundary.len();
        let k = rng.index(len);
        let (a, b, c) = (boundary[k], boundary[(k + 1) % len], boundary[(k + 2) % len]);
        let v = load.len();
        let roll = rng.index(4);
        if roll == 0 && len >= 4 && !adj.contains(&(a.min(c), a.max(c))) {
            if [a, b, c].iter().any(|&x| load[x] >= cap) {
                continue;
            }
            faces.push([AgentId(a), AgentId(b), AgentId(c)]);
            adj.insert((a.min(c), a.max(c)));
            for x in [a, b, c] {
                load[x] += 1;
            }
            boundary.remove((k + 1) % len);
        } else if roll == 1 && len >= 4 {
            // Cover the path a-b-c; b becomes interior.
            if load[a] >= cap || load[b] + 2 > cap || load[c] >= cap {
                continue;
            }
            faces.push([AgentId(a), AgentId(b), AgentId(v)]);
            faces.push([AgentId(b), AgentId(c), AgentId(v)]);
            for (x, y) in [(a, v), (b, v), (c, v)] {
                adj.insert((x.min(y), x.max(y)));
            }
            load[a] += 1;
            load[b] += 2;
            load[c] += 1;
            load.push(2);
            boundary[(k + 1) % len] = v;
        } else {
            if load[a] >= cap || load[b] >= cap {
                continue;
            }
            faces.push([AgentId(a), AgentId(b), AgentId(v)]);
            for (x, y) in [(a, v), (b, v)] {
                adj.insert((x.min(y), x.max(y)));
            }
            load[a] += 1;
            load[b] += 1;
            load.push(1);
            boundary.insert(k + 1, v);
        }
    }
    let f = faces.len();
    let mut relevance = vec![Vec::new(); vertices];
    for (k, face) in faces.iter().enumerate() {
        for a in face {
            relevance[a.0].push(ItemId(k));
        }
    }
    let valuation = if tables {
        let tables = relevance
            .iter()
            .map(|rel| random_monotone_table(rel.clone(), max_weight, rng))
            .collect::<Result<Vec<_>>>()?;
        ValuationProfile::Table { tables }
    } else {
        let shared = (0..f).map(|_| int(rng.range(1, max_weight))).collect();
        ValuationProfile::Identical {
            shared: SharedValuation::Additive(shared),
        }
    };
    let inst = Instance::new(
        InstanceKind::PlanarFaces,
        names("v", vertices),
        names("f", f),
        relevance,
        valuation,
        Structure::Planar {
            faces,
            outer_boundary: boundary.into_iter().map(AgentId).collect(),
        },
    )?;
    PlanarInstance::new(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ef1::{laminar_order, solve_ef1, LaminarOrder, Policy};
    use crate::instance::io::serialize_instance;
    use crate::verify::{check_ef1, check_orientation};

    fn part(v: &[u64]) -> PartitionInput {
        PartitionInput::new(v.to_vec()).unwrap()
    }

    #[test]
    fn gadget_shape() {
        let g = gadget_x(Rational::from_integer(3)).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (4, 6));
        let heavy = g
            .instance()
            .items()
            .filter(|&e| g.instance().value_of_items(g.endpoints(e).0, [e].iter()) == Rational::from_integer(3))
            .count();
        assert_eq!(heavy, 2);
        assert!(gadget_x(Rational::new(5, 2)).is_err());
    }

    #[test]
    fn gadget_has_an_ef1_orientation() {
        for b in [3, 4, 7, 100] {
            let g = gadget_x(Rational::from_integer(b)).unwrap();
            let out = solve_ef1(g.instance(), &Policy::default()).unwrap();
            assert!(check_ef1(g.instance(), &out.allocation).holds);
            assert!(check_orientation(g.instance(), &out.allocation).holds);
        }
    }

    #[test]
    fn reduction_sizes() {
        let s = part(&[2, 3, 3, 4]);
        let r = partition_to_vc_graph_with_cover(&s).unwrap();
        assert_eq!(r.graph.vertex_count(), 4 + 2 + 8);
        assert_eq!(r.graph.edge_count(), 2 * 4 + 12 + 2);
        assert!(is_vertex_cover(&r.graph, &r.vertex_cover));
        assert_eq!(r.vertex_cover.len(), 8);
        let m = partition_to_multigraph_with_cover(&s).unwrap();
        assert_eq!(m.graph.vertex_count(), 10);
        assert!(m.graph.is_multi());
        assert!(is_vertex_cover(&m.graph, &m.vertex_cover));
    }

    #[test]
    fn partition_validity() {
        assert!(part(&[2, 3, 3, 4]).has_equal_split());
        assert!(!part(&[2, 2, 3, 5]).has_equal_split());
        assert!(!part(&[1, 2]).has_equal_split());
        assert!(!part(&[1, 5]).is_valid_for_reduction());
        assert!(partition_to_vc_graph(&part(&[1, 5])).is_err());
        assert!(!part(&[1, 1, 1]).is_valid_for_reduction());
        assert!(part(&[1, 1, 1, 1, 1]).is_valid_for_reduction());
        assert!(PartitionInput::new(vec![]).is_err());
        assert!(PartitionInput::new(vec![0, 1]).is_err());
    }

    #[test]
    fn random_is_deterministic() {
        let p = RandomParams {
            agents: 6,
            items: 9,
            ..RandomParams::default()
        };
        let a = serialize_instance(&random_instance(RandomKind::Graph, &p, 42).unwrap());
        let b = serialize_instance(&random_instance(RandomKind::Graph, &p, 42).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn random_kinds_validate() {
        let p = RandomParams::default();
        for kind in [
            RandomKind::General,
            RandomKind::Table,
            RandomKind::Graph,
            RandomKind::Multigraph,
            RandomKind::Laminar,
            RandomKind::Identical,
            RandomKind::Planar,
        ] {
            for seed in 0..20 {
                random_instance(kind, &p, seed).unwrap();
            }
        }
        for seed in 0..20 {
            let inst = random_instance(RandomKind::Laminar, &p, seed).unwrap();
            assert!(matches!(laminar_order(&inst), LaminarOrder::Order(_)));
        }
        let dp = RandomParams {
            agents: 5,
            items: 8,
            depth: 5,
            ..RandomParams::default()
        };
        for seed in 0..20 {
            random_instance(RandomKind::Decomposable, &dp, seed).unwrap();
        }
    }

    #[test]
    fn laminar_depth_beyond_agents_is_rejected() {
        let p = RandomParams {
            agents: 3,
            depth: 4,
            ..RandomParams::default()
        };
        assert!(random_instance(RandomKind::Laminar, &p, 0).is_err());
    }
}
