use std::collections::{BTreeMap, BTreeSet};

use super::{AgentId, Instance, ItemId, Structure};
use crate::error::{Error, Result};

pub(crate) type Edge = (AgentId, AgentId);

pub(crate) fn edge(a: AgentId, b: AgentId) -> Edge {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// A triangulated disk: a 2-connected plane graph whose inner faces are
/// triangles (the items) and whose outer face is bounded by a simple cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanarInstance {
    inst: Instance,
    faces: Vec<[AgentId; 3]>,
    boundary: Vec<AgentId>,
}

impl PlanarInstance {
    pub fn new(inst: Instance) -> Result<Self> {
        let (faces, boundary) = match inst.structure() {
            Structure::Planar { faces, outer_boundary } => (faces.clone(), outer_boundary.clone()),
            _ => {
                return Err(Error::Unsupported(format!(
                    "expected a planar-faces instance, got kind `{}`",
                    inst.kind().as_str()
                )))
            }
        };
        validate_disk(inst.n(), &faces, &boundary)?;
        Ok(PlanarInstance { inst, faces, boundary })
    }

    pub fn instance(&self) -> &Instance {
        &self.inst
    }

    pub fn faces(&self) -> &[[AgentId; 3]] {
        &self.faces
    }

    pub fn face(&self, f: ItemId) -> [AgentId; 3] {
        self.faces[f.0]
    }

    pub fn outer_boundary(&self) -> &[AgentId] {
        &self.boundary
    }
}

/// Edge → incident faces.
pub(crate) fn edge_faces(faces: &[[AgentId; 3]]) -> BTreeMap<Edge, Vec<usize>> {
    let mut map: BTreeMap<Edge, Vec<usize>> = BTreeMap::new();
    for (f, t) in faces.iter().enumerate() {
        for k in 0..3 {
            map.entry(edge(t[k], t[(k + 1) % 3])).or_default().push(f);
        }
    }
    map
}

/// The boundary cycle implied by the faces: edges lying on exactly one
/// face, walked from the lowest vertex towards its lower boundary neighbour.
pub fn derive_outer_boundary(n: usize, faces: &[[AgentId; 3]]) -> Result<Vec<AgentId>> {
    let ef = edge_faces(faces);
    let mut adj: Vec<Vec<AgentId>> = vec![Vec::new(); n];
    for (&(a, b), fs) in &ef {
        if fs.len() > 2 {
            return Err(Error::Planar(format!(
                "edge {}-{} lies on {} faces",
                a.0,
                b.0,
                fs.len()
            )));
        }
        if fs.len() == 1 {
            adj[a.0].push(b);
            adj[b.0].push(a);
        }
    }
    let start = match adj.iter().position(|l| !l.is_empty()) {
        Some(s) => AgentId(s),
        None => return Err(Error::Planar("no outer boundary".into())),
    };
    if let Some(v) = adj.iter().position(|l| !l.is_empty() && l.len() != 2) {
        return Err(Error::Planar(format!("vertex {v} has {} boundary edges", adj[v].len())));
    }
    let mut cycle = vec![start];
    let mut prev = start;
    let mut cur = *adj[start.0].iter().min().expect("two boundary neighbours");
    while cur != start {
        cycle.push(cur);
        let next = if adj[cur.0][0] == prev { adj[cur.0][1] } else { adj[cur.0][0] };
        prev = cur;
        cur = next;
        if cycle.len() > n {
            return Err(Error::Planar("boundary walk does not close".into()));
        }
    }
    let on_boundary = adj.iter().filter(|l| !l.is_empty()).count();
    if cycle.len() != on_boundary {
        return Err(Error::Planar("boundary edges form more than one cycle".into()));
    }
    Ok(cycle)
}

pub(crate) fn validate_disk(n: usize, faces: &[[AgentId; 3]], boundary: &[AgentId]) -> Result<()> {
    if faces.is_empty() {
        return Err(Error::Planar("no inner faces".into()));
    }
    let derived = derive_outer_boundary(n, faces)?;
    let declared: BTreeSet<Edge> = boundary
        .iter()
        .zip(boundary.iter().cycle().skip(1))
        .map(|(&a, &b)| edge(a, b))
        .collect();
    let expected: BTreeSet<Edge> = derived
        .iter()
        .zip(derived.iter().cycle().skip(1))
        .map(|(&a, &b)| edge(a, b))
        .collect();
    if boundary.len() != derived.len() || declared != expected {
        return Err(Error::Planar(
            "declared outer boundary differs from the face boundary".into(),
        ));
    }
    let mut incident = vec![Vec::new(); n];
    for (f, t) in faces.iter().enumerate() {
        for v in t {
            incident[v.0].push(f);
        }
    }
    if let Some(v) = incident.iter().position(Vec::is_empty) {
        return Err(Error::Planar(format!("vertex {v} lies on no face")));
    }
    let ef = edge_faces(faces);
    let dup: BTreeSet<[AgentId; 3]> = faces
        .iter()
        .map(|t| {
            let mut s = *t;
            s.sort();
            s
        })
        .collect();
    if dup.len() != faces.len() {
        return Err(Error::Planar("a face is listed twice".into()));
    }
    // Euler characteristic of a closed disk.
    let chi = n as i64 - ef.len() as i64 + faces.len() as i64;
    if chi != 1 {
        return Err(Error::Planar(format!("Euler characteristic is {chi}, expected 1")));
    }
    // The faces around each vertex must form one fan: a path at boundary
    // vertices and a cycle at inner ones.
    let on_boundary: BTreeSet<AgentId> = boundary.iter().copied().collect();
    for v in 0..n {
        let v = AgentId(v);
        let fs = &incident[v.0];
        let mut link: BTreeMap<AgentId, Vec<AgentId>> = BTreeMap::new();
        for &f in fs {
            let others: Vec<AgentId> = faces[f].iter().copied().filter(|&x| x != v).collect();
            link.entry(others[0]).or_default().push(others[1]);
            link.entry(others[1]).or_default().push(others[0]);
        }
        let ends = link.values().filter(|l| l.len() == 1).count();
        if link.values().any(|l| l.len() > 2) {
            return Err(Error::Planar(format!("vertex {} is not a manifold point", v.0)));
        }
        let want_ends = if on_boundary.contains(&v) { 2 } else { 0 };
        if ends != want_ends || !connected_link(&link) {
            return Err(Error::Planar(format!(
                "faces around vertex {} do not form a single fan",
                v.0
            )));
        }
    }
    let adj = adjacency(n, faces);
    if !is_biconnected(&adj, None) {
        return Err(Error::Planar("graph is not 2-connected".into()));
    }
    Ok(())
}

fn connected_link(link: &BTreeMap<AgentId, Vec<AgentId>>) -> bool {
    let Some((&start, _)) = link.iter().next() else {
        return true;
    };
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(x) = stack.pop() {
        for &y in &link[&x] {
            if seen.insert(y) {
                stack.push(y);
            }
        }
    }
    seen.len() == link.len()
}

pub(crate) fn adjacency(n: usize, faces: &[[AgentId; 3]]) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); n];
    for t in faces {
        for k in 0..3 {
            let (a, b) = (t[k].0, t[(k + 1) % 3].0);
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }
    adj
}

/// 2-connectivity of the graph on the non-removed vertices that have at
/// least one neighbour, optionally with one vertex deleted first.
pub(crate) fn is_biconnected(adj: &[BTreeSet<usize>], removed: Option<usize>) -> bool {
    let alive: Vec<usize> = (0..adj.len())
        .filter(|&v| Some(v) != removed && adj[v].iter().any(|&w| Some(w) != removed))
        .collect();
    if alive.len() < 3 {
        return alive.len() == 2 || alive.len() < 2 && !alive.is_empty();
    }
    let n = adj.len();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0;
    let root = alive[0];
    // Iterative DFS for articulation points.
    let mut stack: Vec<(usize, usize, Vec<usize>)> = Vec::new();
    disc[root] = timer;
    low[root] = timer;
    timer += 1;
    let nbrs = |v: usize| -> Vec<usize> { adj[v].iter().copied().filter(|&w| Some(w) != removed).collect() };
    stack.push((root, usize::MAX, nbrs(root)));
    let mut root_children = 0;
    let mut articulation = false;
    while let Some((v, parent, mut rest)) = stack.pop() {
        if let Some(w) = rest.pop() {
            stack.push((v, parent, rest));
            if w == parent {
                continue;
            }
            if disc[w] == usize::MAX {
                disc[w] = timer;
                low[w] = timer;
                timer += 1;
                if v == root {
                    root_children += 1;
                }
                stack.push((w, v, nbrs(w)));
            } else {
                low[v] = low[v].min(disc[w]);
            }
        } else if parent != usize::MAX {
            low[parent] = low[parent].min(low[v]);
            if parent != root && low[v] >= disc[parent] {
                articulation = true;
            }
        }
    }
    let visited = alive.iter().all(|&v| disc[v] != usize::MAX);
    visited && !articulation && root_children <= 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri(a: usize, b: usize, c: usize) -> [AgentId; 3] {
        [AgentId(a), AgentId(b), AgentId(c)]
    }

    #[test]
    fn boundary_of_two_triangles() {
        let faces = vec![tri(0, 1, 2), tri(1, 2, 3)];
        let b = derive_outer_boundary(4, &faces).unwrap();
        assert_eq!(b.len(), 4);
        validate_disk(4, &faces, &b).unwrap();
    }

    #[test]
    fn wheel_has_hexagon_boundary() {
        let faces: Vec<_> = (0..6).map(|k| tri(0, 1 + k, 1 + (k + 1) % 6)).collect();
        let b = derive_outer_boundary(7, &faces).unwrap();
        assert_eq!(b.len(), 6);
        assert!(!b.contains(&AgentId(0)));
        validate_disk(7, &faces, &b).unwrap();
    }

    #[test]
    fn bowtie_is_rejected() {
        // Two triangles sharing only vertex 0.
        let faces = vec![tri(0, 1, 2), tri(0, 3, 4)];
        assert!(derive_outer_boundary(5, &faces).is_err());
    }

    #[test]
    fn biconnectivity() {
        let mut adj = vec![BTreeSet::new(); 4];
        for (a, b) in [(0, 1), (1, 2), (2, 0), (2, 3)] {
            adj[a].insert(b);
            adj[b].insert(a);
        }
        assert!(!is_biconnected(&adj, None));
        assert!(is_biconnected(&adj, Some(3)));
    }
}
