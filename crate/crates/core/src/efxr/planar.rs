//! Proper allocations of the inner faces of a triangulated disk.
//!
//! An allocation is proper when every vertex gets at most two faces and,
//! for every pair of vertices sharing inner faces, each of the two gets at
//! most one of the shared faces. Proper allocations are EFXr for any
//! monotone valuations over incident faces.
//!
//! The construction peels a boundary vertex `v` off the disk. If `v` lies on
//! a single face, that face goes to `v`. Otherwise `v` is merged into its
//! boundary neighbour `v'`, the smaller disk is solved, and the faces of `v`
//! are lifted back from their images. The face `f0 = v v' v''` goes to `v`
//! when `v` has fewer than two faces and does not hold the other face on
//! `v v''`, and to `v'` otherwise.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::instance::planar::{adjacency, derive_outer_boundary, is_biconnected, validate_disk};
use crate::instance::{AgentId, Allocation, PlanarInstance};

type Tri = [AgentId; 3];

/// How the allocation was assembled, one count per induction step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PlanarStats {
    pub base: usize,
    pub shortcut: usize,
    pub contraction: usize,
    /// Steps where no peelable vertex gave a proper lift and a direct
    /// search was used instead.
    pub fallback: usize,
}

#[derive(Clone, Debug)]
pub struct ProperAllocation {
    pub allocation: Allocation,
    pub stats: PlanarStats,
}

/// Ways in which `alloc` fails to be a proper allocation of `p`'s faces.
pub fn proper_violations(p: &PlanarInstance, alloc: &Allocation) -> Vec<String> {
    let faces = p.faces();
    let mut owner = Vec::with_capacity(faces.len());
    let mut out = Vec::new();
    for (f, t) in faces.iter().enumerate() {
        match alloc.owners().get(f).copied().flatten() {
            Some(a) if t.contains(&a) => owner.push(a),
            Some(a) => {
                out.push(format!("face {f} given to vertex {} outside it", a.0));
                owner.push(a);
            }
            None => {
                out.push(format!("face {f} is unallocated"));
                return out;
            }
        }
    }
    out.extend(violations(faces, &owner));
    out
}

fn violations(faces: &[Tri], owner: &[AgentId]) -> Vec<String> {
    let mut out = Vec::new();
    let mut count: HashMap<AgentId, usize> = HashMap::new();
    // (holder, other) -> shared faces the holder got.
    let mut shared: HashMap<(AgentId, AgentId), usize> = HashMap::new();
    for (t, &o) in faces.iter().zip(owner) {
        *count.entry(o).or_default() += 1;
        for &w in t.iter().filter(|&&w| w != o) {
            *shared.entry((o, w)).or_default() += 1;
        }
    }
    let mut over: Vec<_> = count.into_iter().filter(|&(_, c)| c > 2).collect();
    over.sort();
    for (v, c) in over {
        out.push(format!("vertex {} holds {c} faces", v.0));
    }
    let mut twice: Vec<_> = shared.into_iter().filter(|&(_, c)| c > 1).collect();
    twice.sort();
    for ((v, w), c) in twice {
        out.push(format!("vertex {} holds {c} faces shared with vertex {}", v.0, w.0));
    }
    out
}

pub fn planar_faces_orientation(p: &PlanarInstance) -> Result<ProperAllocation> {
    let faces = p.faces();
    let mut stats = PlanarStats::default();
    let owner = construct(faces, &mut stats)?;
    let bad = violations(faces, &owner);
    if !bad.is_empty() {
        return Err(Error::internal(format!("construction is not proper: {}", bad.join("; "))));
    }
    let allocation = Allocation::from_owners(p.instance().n(), owner.into_iter().map(Some).collect())?;
    log::debug!("planar construction: {stats:?}");
    Ok(ProperAllocation { allocation, stats })
}

fn construct(faces: &[Tri], stats: &mut PlanarStats) -> Result<Vec<AgentId>> {
    if faces.len() == 1 {
        stats.base += 1;
        return Ok(vec![*faces[0].iter().min().expect("three vertices")]);
    }
    if let Some(owner) = peel(faces, stats)? {
        return Ok(owner);
    }
    stats.fallback += 1;
    log::warn!("planar construction fell back to search on {} faces", faces.len());
    search(faces).ok_or_else(|| Error::internal("no proper allocation exists"))
}

/// Vertex count bound for the shared helpers, which index by vertex id.
fn span(faces: &[Tri]) -> usize {
    faces.iter().flatten().map(|v| v.0 + 1).max().unwrap_or(0)
}

/// Whether `faces` form a triangulated 2-connected disk.
fn is_disk(faces: &[Tri]) -> bool {
    if faces.is_empty() {
        return false;
    }
    let verts: BTreeSet<AgentId> = faces.iter().flatten().copied().collect();
    let relabel: HashMap<AgentId, AgentId> = verts.iter().enumerate().map(|(k, &v)| (v, AgentId(k))).collect();
    let compact: Vec<Tri> = faces.iter().map(|t| t.map(|v| relabel[&v])).collect();
    let n = verts.len();
    match derive_outer_boundary(n, &compact) {
        Ok(b) => validate_disk(n, &compact, &b).is_ok(),
        Err(_) => false,
    }
}

/// One induction step. `None` when no boundary vertex yields a proper lift.
fn peel(faces: &[Tri], stats: &mut PlanarStats) -> Result<Option<Vec<AgentId>>> {
    let n = span(faces);
    let boundary = derive_outer_boundary(n, faces)?;
    let adj = adjacency(n, faces);
    let mut candidates: Vec<(AgentId, usize)> = boundary.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    candidates.sort();
    for (v, pos) in candidates {
        if !is_biconnected(&adj, Some(v.0)) {
            continue;
        }
        let mine: Vec<usize> = (0..faces.len()).filter(|&f| faces[f].contains(&v)).collect();
        if mine.len() == 1 {
            let rest: Vec<Tri> = faces.iter().enumerate().filter(|&(f, _)| f != mine[0]).map(|(_, t)| *t).collect();
            if !is_disk(&rest) {
                continue;
            }
            let sub = construct(&rest, stats)?;
            let mut it = sub.into_iter();
            let owner: Vec<AgentId> = (0..faces.len())
                .map(|f| if f == mine[0] { v } else { it.next().expect("one owner per face") })
                .collect();
            stats.shortcut += 1;
            return Ok(violations(faces, &owner).is_empty().then_some(owner));
        }
        let len = boundary.len();
        let mut nbrs = [boundary[(pos + len - 1) % len], boundary[(pos + 1) % len]];
        nbrs.sort();
        for vp in nbrs {
            if let Some(owner) = contract(faces, &boundary, &mine, v, vp, stats)? {
                stats.contraction += 1;
                return Ok(violations(faces, &owner).is_empty().then_some(owner));
            }
        }
    }
    Ok(None)
}

/// Merges `v` into its boundary neighbour `vp`, solves the smaller disk and
/// lifts the result. `None` if the merged faces do not form a disk.
fn contract(
    faces: &[Tri],
    boundary: &[AgentId],
    mine: &[usize],
    v: AgentId,
    vp: AgentId,
    stats: &mut PlanarStats,
) -> Result<Option<Vec<AgentId>>> {
    let Some(&f0) = mine.iter().find(|&&f| faces[f].contains(&vp)) else {
        return Err(Error::internal("boundary edge without a face"));
    };
    let vpp = *faces[f0].iter().find(|&&x| x != v && x != vp).expect("triangle");
    if boundary.contains(&vpp) {
        return Ok(None);
    }
    let Some(&f1) = mine.iter().find(|&&f| f != f0 && faces[f].contains(&vpp)) else {
        return Ok(None);
    };
    // Faces of G' in the order of their preimages, skipping f0.
    let merged: Vec<Tri> = faces
        .iter()
        .enumerate()
        .filter(|&(f, _)| f != f0)
        .map(|(_, t)| t.map(|x| if x == v { vp } else { x }))
        .collect();
    if !is_disk(&merged) {
        return Ok(None);
    }
    let sub = construct(&merged, stats)?;
    let mut owner = Vec::with_capacity(faces.len());
    let mut it = sub.into_iter();
    for f in 0..faces.len() {
        if f == f0 {
            owner.push(vp);
            continue;
        }
        let o = it.next().expect("one owner per face");
        owner.push(if o == vp && faces[f].contains(&v) { v } else { o });
    }
    let held = owner.iter().enumerate().filter(|&(f, &o)| f != f0 && o == v).count();
    if held < 2 && owner[f1] != v {
        owner[f0] = v;
    }
    Ok(Some(owner))
}

/// Direct backtracking search for a proper allocation.
pub(super) fn search(faces: &[Tri]) -> Option<Vec<AgentId>> {
    struct Ctx<'a> {
        faces: &'a [Tri],
        count: HashMap<AgentId, usize>,
        shared: HashMap<(AgentId, AgentId), usize>,
        owner: Vec<AgentId>,
    }
    fn go(c: &mut Ctx, f: usize) -> bool {
        if f == c.faces.len() {
            return true;
        }
        let mut t = c.faces[f];
        t.sort();
        for x in t {
            let others: Vec<AgentId> = t.iter().copied().filter(|&w| w != x).collect();
            if c.count.get(&x).copied().unwrap_or(0) >= 2
                || others.iter().any(|&w| c.shared.get(&(x, w)).copied().unwrap_or(0) >= 1)
            {
                continue;
            }
            *c.count.entry(x).or_default() += 1;
            for &w in &others {
                *c.shared.entry((x, w)).or_default() += 1;
            }
            c.owner.push(x);
            if go(c, f + 1) {
                return true;
            }
            c.owner.pop();
            *c.count.get_mut(&x).expect("counted") -= 1;
            for &w in &others {
                *c.shared.get_mut(&(x, w)).expect("counted") -= 1;
            }
        }
        false
    }
    let mut c = Ctx {
        faces,
        count: HashMap::new(),
        shared: HashMap::new(),
        owner: Vec::new(),
    };
    go(&mut c, 0).then_some(c.owner)
}
