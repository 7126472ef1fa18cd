//! Tree layouts: a spanning tree `T` of a supergraph `H ⊇ G`, with the
//! subtree sets, boundaries and local feedback edge sets the DP needs.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::instance::{AgentId, GraphInstance, ItemId};

type Pair = (usize, usize);

fn pair(a: usize, b: usize) -> Pair {
    (a.min(b), a.max(b))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeLayout {
    n: usize,
    g_edges: Vec<Pair>,
    h_extra: Vec<Pair>,
    parent: Vec<Option<usize>>,
    root: usize,
    children: Vec<Vec<usize>>,
    preorder: Vec<usize>,
    tin: Vec<usize>,
    tout: Vec<usize>,
    crossing: Vec<Vec<ItemId>>,
    boundary: Vec<Vec<usize>>,
    e_loc: Vec<Vec<Pair>>,
    closed: Vec<bool>,
    k: usize,
}

impl TreeLayout {
    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> AgentId {
        AgentId(self.root)
    }

    pub fn parent(&self, v: AgentId) -> Option<AgentId> {
        self.parent[v.0].map(AgentId)
    }

    pub fn children(&self, v: AgentId) -> impl Iterator<Item = AgentId> + '_ {
        self.children[v.0].iter().map(|&c| AgentId(c))
    }

    /// Edges of `H` that are not edges of `G`.
    pub fn extra_edges(&self) -> &[Pair] {
        &self.h_extra
    }

    pub fn is_plain(&self) -> bool {
        self.h_extra.is_empty()
    }

    /// `ecw(H, T) = 1 + max_v |E_loc(v)|`.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn e_loc(&self, v: AgentId) -> &[Pair] {
        &self.e_loc[v.0]
    }

    /// `u ∈ V_v`.
    pub fn in_subtree(&self, v: AgentId, u: AgentId) -> bool {
        self.tin[v.0] <= self.tin[u.0] && self.tin[u.0] < self.tout[v.0]
    }

    pub fn subtree(&self, v: AgentId) -> Vec<AgentId> {
        let mut out: Vec<AgentId> = self.preorder[self.tin[v.0]..self.tout[v.0]].iter().map(|&u| AgentId(u)).collect();
        out.sort_unstable();
        out
    }

    /// G-edges with exactly one endpoint in `V_v`, by item id.
    pub fn crossing(&self, v: AgentId) -> &[ItemId] {
        &self.crossing[v.0]
    }

    /// `δ(v)`: endpoints of the crossing edges, sorted.
    pub fn boundary(&self, v: AgentId) -> &[usize] {
        &self.boundary[v.0]
    }

    /// `δ(v) = {parent, v}`, so the tree edge to the parent is the only
    /// crossing edge. Children with a small boundary of any other shape
    /// (possible once `H ⊋ G`) are not closed here.
    pub fn is_closed(&self, v: AgentId) -> bool {
        self.closed[v.0]
    }

    /// Vertices in post-order (children before parents).
    pub fn postorder(&self) -> Vec<AgentId> {
        let mut out: Vec<AgentId> = self.preorder.iter().map(|&v| AgentId(v)).collect();
        out.reverse();
        out
    }

    pub fn to_json(&self, g: &GraphInstance) -> Value {
        let inst = g.instance();
        let name = |v: usize| inst.agent_name(AgentId(v)).to_string();
        let mut parents = serde_json::Map::new();
        for v in &self.preorder {
            if let Some(p) = self.parent[*v] {
                parents.insert(name(*v), Value::String(name(p)));
            }
        }
        json!({
            "h_extra_edges": self.h_extra.iter().map(|&(a, b)| json!([name(a), name(b)])).collect::<Vec<_>>(),
            "tree_parent": parents,
            "root": name(self.root),
        })
    }
}

/// Builds and validates a layout. `h_extra` lists edges of `H` beyond `G`;
/// `parent[v]` is `v`'s tree parent (`None` exactly at `root`).
pub fn build_layout(
    g: &GraphInstance,
    h_extra: &[(AgentId, AgentId)],
    parent: &[Option<AgentId>],
    root: AgentId,
) -> Result<TreeLayout> {
    let n = g.vertex_count();
    if g.is_multi() {
        return Err(Error::Unsupported("tree layouts need a simple graph".into()));
    }
    if parent.len() != n || root.0 >= n {
        return Err(Error::Layout("parent map must cover every vertex".into()));
    }
    let g_edges: Vec<Pair> = g.all_endpoints().iter().map(|&(u, v)| pair(u.0, v.0)).collect();
    let g_set: BTreeSet<Pair> = g_edges.iter().copied().collect();
    let mut extra_set = BTreeSet::new();
    for &(a, b) in h_extra {
        if a.0 >= n || b.0 >= n || a == b {
            return Err(Error::Layout(format!("bad extra edge ({}, {})", a.0, b.0)));
        }
        let p = pair(a.0, b.0);
        if !g_set.contains(&p) {
            extra_set.insert(p);
        }
    }
    let h_set: BTreeSet<Pair> = g_set.union(&extra_set).copied().collect();

    let parent: Vec<Option<usize>> = parent.iter().map(|p| p.map(|a| a.0)).collect();
    let mut children = vec![Vec::new(); n];
    for v in 0..n {
        match parent[v] {
            None if v == root.0 => {}
            None => return Err(Error::Layout(format!("vertex {v} has no parent and is not the root"))),
            Some(_) if v == root.0 => return Err(Error::Layout("the root must not have a parent".into())),
            Some(p) if p >= n => return Err(Error::Layout(format!("unknown parent {p}"))),
            Some(p) => {
                if !h_set.contains(&pair(v, p)) {
                    return Err(Error::Layout(format!("tree edge ({v}, {p}) is not an edge of H")));
                }
                children[p].push(v);
            }
        }
    }

    // Pre-order from the root; a vertex never reached means T is not a
    // spanning tree (a cycle elsewhere).
    let mut preorder = Vec::with_capacity(n);
    let mut tin = vec![usize::MAX; n];
    let mut tout = vec![0; n];
    let mut stack = vec![(root.0, false)];
    while let Some((v, done)) = stack.pop() {
        if done {
            tout[v] = preorder.len();
            continue;
        }
        tin[v] = preorder.len();
        preorder.push(v);
        stack.push((v, true));
        for &c in children[v].iter().rev() {
            stack.push((c, false));
        }
    }
    if preorder.len() != n {
        return Err(Error::Layout("the parent map does not form a spanning tree".into()));
    }
    let inside = |v: usize, u: usize| tin[v] <= tin[u] && tin[u] < tout[v];

    let mut crossing = vec![Vec::new(); n];
    let mut boundary = vec![Vec::new(); n];
    for v in 0..n {
        let mut b = BTreeSet::new();
        for (k, &(a, c)) in g_edges.iter().enumerate() {
            if inside(v, a) != inside(v, c) {
                crossing[v].push(ItemId(k));
                b.insert(a);
                b.insert(c);
            }
        }
        boundary[v] = b.into_iter().collect();
    }

    let tree: BTreeSet<Pair> = (0..n).filter_map(|v| parent[v].map(|p| pair(v, p))).collect();
    let depth = {
        let mut d = vec![0usize; n];
        for &v in &preorder {
            if let Some(p) = parent[v] {
                d[v] = d[p] + 1;
            }
        }
        d
    };
    let mut e_loc = vec![Vec::new(); n];
    for &(a, b) in h_set.difference(&tree) {
        let (mut x, mut y) = (a, b);
        while x != y {
            if depth[x] >= depth[y] {
                e_loc[x].push((a, b));
                x = parent[x].expect("non-root");
            } else {
                e_loc[y].push((a, b));
                y = parent[y].expect("non-root");
            }
        }
        e_loc[x].push((a, b));
    }
    let k = 1 + e_loc.iter().map(Vec::len).max().unwrap_or(0);

    let closed = (0..n)
        .map(|v| match parent[v] {
            Some(p) => boundary[v] == [v.min(p), v.max(p)],
            None => false,
        })
        .collect();

    let layout = TreeLayout {
        n,
        g_edges,
        h_extra: extra_set.into_iter().collect(),
        parent,
        root: root.0,
        children,
        preorder,
        tin,
        tout,
        crossing,
        boundary,
        e_loc,
        closed,
        k,
    };
    check_observations(&layout)?;
    Ok(layout)
}

/// Structural facts every layout satisfies; a failure is a bug.
fn check_observations(l: &TreeLayout) -> Result<()> {
    for v in 0..l.n {
        let b = l.boundary[v].len();
        if b == 1 {
            return Err(Error::internal(format!("boundary of vertex {v} has size 1")));
        }
        if b > 2 * l.k + 2 {
            return Err(Error::internal(format!("boundary of vertex {v} exceeds 2k+2")));
        }
        let open = l.children[v].iter().filter(|&&c| l.boundary[c].len() > 2).count();
        if open > 2 * l.k {
            return Err(Error::internal(format!("vertex {v} has more than 2k open children")));
        }
        if l.is_plain() {
            for &c in &l.children[v] {
                if l.boundary[c].len() <= 2 && !l.closed[c] {
                    return Err(Error::internal(format!("closed child {c} of {v} has boundary {:?}", l.boundary[c])));
                }
            }
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutFile {
    #[serde(default)]
    h_extra_edges: Vec<[String; 2]>,
    tree_parent: BTreeMap<String, String>,
    root: String,
}

pub fn parse_layout(g: &GraphInstance, text: &str) -> Result<TreeLayout> {
    let raw: LayoutFile = serde_json::from_str(text).map_err(|e| Error::Layout(e.to_string()))?;
    let inst = g.instance();
    let id = |s: &str| inst.agent_id(s);
    let extra = raw
        .h_extra_edges
        .iter()
        .map(|[a, b]| Ok((id(a)?, id(b)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut parent = vec![None; g.vertex_count()];
    for (v, p) in &raw.tree_parent {
        parent[id(v)?.0] = Some(id(p)?);
    }
    build_layout(g, &extra, &parent, id(&raw.root)?)
}

/// Connected components of `G`, each sorted, ordered by smallest vertex.
fn components(g: &GraphInstance) -> Vec<Vec<usize>> {
    let n = g.vertex_count();
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![s];
        comp[s] = id;
        let mut i = 0;
        while i < members.len() {
            let v = members[i];
            i += 1;
            for w in g.neighbors(AgentId(v)) {
                if comp[w.0] == usize::MAX {
                    comp[w.0] = id;
                    members.push(w.0);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

/// `max_v |E_loc(v)|` for a spanning forest given as a parent map, within
/// one component (`edges` are that component's edges).
fn local_width(edges: &[Pair], parent: &[Option<usize>], depth: &[usize]) -> (usize, usize) {
    let mut count: BTreeMap<usize, usize> = BTreeMap::new();
    for &(a, b) in edges {
        if parent[a] == Some(b) || parent[b] == Some(a) {
            continue;
        }
        let (mut x, mut y) = (a, b);
        while x != y {
            if depth[x] >= depth[y] {
                *count.entry(x).or_default() += 1;
                x = parent[x].expect("non-root");
            } else {
                *count.entry(y).or_default() += 1;
                y = parent[y].expect("non-root");
            }
        }
        *count.entry(x).or_default() += 1;
    }
    (
        count.values().copied().max().unwrap_or(0),
        count.values().sum(),
    )
}

/// Parent map and depths of a tree given by an edge list, rooted at `root`.
fn root_tree(n: usize, tree: &[Pair], root: usize) -> (Vec<Option<usize>>, Vec<usize>) {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in tree {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut parent = vec![None; n];
    let mut depth = vec![0; n];
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some(v);
                depth[w] = depth[v] + 1;
                queue.push_back(w);
            }
        }
    }
    (parent, depth)
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        r
    }
}

/// Best spanning tree of one component by exhaustive enumeration, giving up
/// after `budget` complete trees.
fn exhaustive_tree(n: usize, verts: &[usize], edges: &[Pair], budget: usize) -> Option<Vec<Pair>> {
    fn rec(
        k: usize,
        edges: &[Pair],
        need: usize,
        dsu: &mut Dsu,
        chosen: &mut Vec<Pair>,
        visit: &mut dyn FnMut(&[Pair]) -> bool,
    ) -> bool {
        if chosen.len() == need {
            return visit(chosen);
        }
        if edges.len() - k < need - chosen.len() {
            return true;
        }
        let (a, b) = edges[k];
        let (ra, rb) = (dsu.find(a), dsu.find(b));
        if ra != rb {
            let saved = dsu.0.clone();
            dsu.0[ra] = rb;
            chosen.push((a, b));
            let go = rec(k + 1, edges, need, dsu, chosen, visit);
            chosen.pop();
            dsu.0 = saved;
            if !go {
                return false;
            }
        }
        rec(k + 1, edges, need, dsu, chosen, visit)
    }
    let root = verts[0];
    let mut best: Option<((usize, usize), Vec<Pair>)> = None;
    let mut seen = 0usize;
    let mut dsu = Dsu((0..n).collect());
    rec(0, edges, verts.len() - 1, &mut dsu, &mut Vec::new(), &mut |tree| {
        seen += 1;
        let (parent, depth) = root_tree(n, tree, root);
        let score = local_width(edges, &parent, &depth);
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, tree.to_vec()));
        }
        seen < budget
    });
    best.map(|(_, t)| t)
}

/// BFS tree from a minimum-degree vertex, then improving edge swaps.
fn greedy_tree(n: usize, g: &GraphInstance, verts: &[usize], edges: &[Pair], budget: usize) -> Vec<Pair> {
    let root = *verts
        .iter()
        .min_by_key(|&&v| (g.neighbors(AgentId(v)).len(), v))
        .expect("non-empty component");
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for w in g.neighbors(AgentId(v)) {
            if !seen[w.0] {
                seen[w.0] = true;
                parent[w.0] = Some(v);
                queue.push_back(w.0);
            }
        }
    }
    let mut tree: Vec<Pair> = verts.iter().filter_map(|&v| parent[v].map(|p| pair(v, p))).collect();
    let score = |tree: &[Pair]| {
        let (p, d) = root_tree(n, tree, root);
        local_width(edges, &p, &d)
    };
    let mut current = score(&tree);
    let mut tries = 0usize;
    'outer: loop {
        for &e in edges {
            if tree.contains(&e) {
                continue;
            }
            for k in 0..tree.len() {
                if tries >= budget {
                    break 'outer;
                }
                tries += 1;
                let mut cand = tree.clone();
                cand[k] = e;
                let (p, _) = root_tree(n, &cand, root);
                if verts.iter().filter(|&&v| v != root).any(|&v| p[v].is_none()) {
                    continue;
                }
                let s = score(&cand);
                if s < current {
                    tree = cand;
                    current = s;
                    continue 'outer;
                }
            }
        }
        break;
    }
    tree
}

/// A low-width layout with `H = G` per component; components are chained
/// by extra `H` edges between their smallest vertices, which leaves every
/// local feedback edge set unchanged. Exhaustive for components of at most
/// 8 vertices, greedy beyond.
pub fn search_layout(g: &GraphInstance, budget: usize) -> Result<TreeLayout> {
    let n = g.vertex_count();
    if n == 0 {
        return Err(Error::Layout("graph has no vertices".into()));
    }
    let comps = components(g);
    let all_edges: Vec<Pair> = g.all_endpoints().iter().map(|&(u, v)| pair(u.0, v.0)).collect();
    let mut tree_edges = Vec::new();
    for verts in &comps {
        let edges: Vec<Pair> = all_edges
            .iter()
            .copied()
            .filter(|(a, _)| verts.binary_search(a).is_ok())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let t = if verts.len() <= 8 {
            exhaustive_tree(n, verts, &edges, budget.max(1)).unwrap_or_default()
        } else {
            greedy_tree(n, g, verts, &edges, budget)
        };
        tree_edges.extend(t);
    }
    let mut extra = Vec::new();
    for w in comps.windows(2) {
        extra.push(pair(w[0][0], w[1][0]));
    }
    tree_edges.extend(extra.iter().copied());
    let root = 0;
    let (parent, _) = root_tree(n, &tree_edges, root);
    let parent: Vec<Option<AgentId>> = parent.into_iter().map(|p| p.map(AgentId)).collect();
    let extra: Vec<(AgentId, AgentId)> = extra.into_iter().map(|(a, b)| (AgentId(a), AgentId(b))).collect();
    build_layout(g, &extra, &parent, AgentId(root))
}
