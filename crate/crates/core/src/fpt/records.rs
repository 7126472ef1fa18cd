//! Record sets and their bottom-up combination.
//!
//! A record `(R, S)` at `v` is stored as two masks: bit `j` of `r` is set
//! when the endpoint of `crossing(v)[j]` inside `V_v` receives the edge,
//! and bit `p` of `s` marks `boundary(v)[p]` as a member of `S`.

use std::collections::HashMap;

use super::layout::TreeLayout;
use crate::error::{Error, Result};
use crate::instance::{AgentId, GraphInstance, IntValuation, ItemId, OrientationVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Record {
    pub r: u64,
    pub s: u64,
}

/// The four records a closed child `c` of `v` can usefully carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Canonical {
    /// `({c→v}, ∅)`
    ToParent,
    /// `({c→v}, {v})`
    ToParentEnvied,
    /// `({v→c}, ∅)`
    ToChild,
    /// `({v→c}, {c})`
    ToChildEnvied,
}

const CANONICAL: [Canonical; 4] = [
    Canonical::ToParent,
    Canonical::ToParentEnvied,
    Canonical::ToChild,
    Canonical::ToChildEnvied,
];

#[derive(Clone, Debug, PartialEq, Eq)]
enum Provenance {
    Leaf,
    /// Record index chosen for every child, in child order.
    Combined(Vec<usize>),
}

#[derive(Clone, Debug, Default)]
pub struct RecordSet {
    records: Vec<Record>,
    index: HashMap<Record, usize>,
    provenance: Vec<Provenance>,
}

impl RecordSet {
    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, rec: &Record) -> bool {
        self.index.contains_key(rec)
    }

    /// Keeps the first provenance seen for a record.
    fn add(&mut self, rec: Record, prov: impl FnOnce() -> Provenance) {
        if !self.index.contains_key(&rec) {
            self.index.insert(rec, self.records.len());
            self.records.push(rec);
            self.provenance.push(prov());
        }
    }

    fn position(&self, rec: &Record) -> Option<usize> {
        self.index.get(rec).copied()
    }

    /// Records in sorted order, for comparisons in tests.
    pub fn sorted(&self) -> Vec<Record> {
        let mut v = self.records.clone();
        v.sort_unstable();
        v
    }
}

fn check_width(layout: &TreeLayout, v: AgentId) -> Result<()> {
    let c = layout.crossing(v).len();
    let b = layout.boundary(v).len();
    if c > 63 || b > 63 {
        return Err(Error::CapExceeded {
            what: "boundary size",
            size: c.max(b),
            cap: 63,
        });
    }
    Ok(())
}

fn bit_of(list: &[usize], x: usize) -> Option<u64> {
    list.binary_search(&x).ok().map(|p| 1u64 << p)
}

/// Mask of `v`'s local valuation bits for the given edges.
fn local_mask(val: &IntValuation, edges: impl IntoIterator<Item = ItemId>) -> u64 {
    edges
        .into_iter()
        .map(|e| 1u64 << val.local_index(e).expect("incident edge is relevant"))
        .fold(0, |a, b| a | b)
}

/// All records at a leaf of the tree, straight from the definition.
pub fn leaf_records(g: &GraphInstance, layout: &TreeLayout, v: AgentId) -> Result<RecordSet> {
    if layout.children(v).next().is_some() {
        return Err(Error::Layout(format!("vertex {} is not a leaf", v.0)));
    }
    check_width(layout, v)?;
    let val = g.instance().int_valuation(v)?;
    let crossing = layout.crossing(v);
    let boundary = layout.boundary(v);
    let mut out = RecordSet::default();
    for r in 0u64..(1u64 << crossing.len()) {
        let own: Vec<ItemId> = (0..crossing.len()).filter(|j| r >> j & 1 == 1).map(|j| crossing[j]).collect();
        let own_value = val.value(local_mask(&val, own.iter().copied()));
        let mut must = 0u64;
        let mut may = 0u64;
        for (j, &e) in crossing.iter().enumerate() {
            if r >> j & 1 == 0 {
                let w = g.other_endpoint(e, v).0;
                let b = bit_of(boundary, w).expect("neighbor on boundary");
                may |= b;
                if val.value(local_mask(&val, [e])) > own_value {
                    must |= b;
                }
            }
        }
        if own.len() == 1 {
            may |= bit_of(boundary, v.0).expect("v on its own boundary");
        }
        let free = may & !must;
        // Every superset of `must` within `may`.
        let mut sub = free;
        loop {
            out.add(Record { r, s: must | sub }, || Provenance::Leaf);
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & free;
        }
    }
    Ok(out)
}

fn canonical_record(layout: &TreeLayout, c: AgentId, kind: Canonical) -> Record {
    let v = layout.parent(c).expect("closed child has a parent").0;
    let b = layout.boundary(c);
    let vb = bit_of(b, v).expect("parent on boundary");
    let cb = bit_of(b, c.0).expect("child on boundary");
    match kind {
        Canonical::ToParent => Record { r: 0, s: 0 },
        Canonical::ToParentEnvied => Record { r: 0, s: vb },
        Canonical::ToChild => Record { r: 1, s: 0 },
        Canonical::ToChildEnvied => Record { r: 1, s: cb },
    }
}

/// Which canonical records a closed child carries.
#[derive(Clone, Copy, Debug)]
struct ClosedInfo {
    child: AgentId,
    edge: ItemId,
    /// `V_v` of the connecting edge.
    value: i128,
    idx: [Option<usize>; 4],
}

impl ClosedInfo {
    fn has(&self, k: Canonical) -> bool {
        self.idx[k as usize].is_some()
    }

    fn pick(&self, k: Canonical) -> usize {
        self.idx[k as usize].expect("record checked before use")
    }
}

/// `CRC(v)`: combines the record sets of `v`'s children.
pub fn combine_records(
    g: &GraphInstance,
    layout: &TreeLayout,
    v: AgentId,
    child_sets: &[&RecordSet],
) -> Result<RecordSet> {
    let children: Vec<AgentId> = layout.children(v).collect();
    if children.len() != child_sets.len() {
        return Err(Error::internal("one record set per child expected"));
    }
    check_width(layout, v)?;
    let mut out = RecordSet::default();
    if child_sets.iter().any(|s| s.is_empty()) {
        return Ok(out);
    }
    let inst = g.instance();
    let val = inst.int_valuation(v)?;
    let n = g.vertex_count();

    let mut open = Vec::new();
    let mut closed = Vec::new();
    for (pos, &c) in children.iter().enumerate() {
        if layout.is_closed(c) {
            let edge = layout.crossing(c)[0];
            let idx = CANONICAL.map(|k| child_sets[pos].position(&canonical_record(layout, c, k)));
            closed.push((
                pos,
                ClosedInfo {
                    child: c,
                    edge,
                    value: val.value(local_mask(&val, [edge])),
                    idx,
                },
            ));
        } else {
            open.push(pos);
        }
    }
    let closed_set: Vec<bool> = {
        let mut m = vec![false; n];
        for (_, ci) in &closed {
            m[ci.child.0] = true;
        }
        m
    };

    // Which child subtree (if any) contains each vertex.
    let mut owner_child = vec![usize::MAX; n];
    for (pos, &c) in children.iter().enumerate() {
        for u in layout.subtree(c) {
            owner_child[u.0] = pos;
        }
    }
    let in_vv = |u: usize| layout.in_subtree(v, AgentId(u));

    // Edges from v leaving V_v, and V_0 ∖ {v}.
    let e0: Vec<ItemId> = g
        .incident(v)
        .iter()
        .copied()
        .filter(|&e| !in_vv(g.other_endpoint(e, v).0))
        .collect();
    let v0_out: Vec<usize> = layout
        .boundary(v)
        .iter()
        .copied()
        .filter(|&w| w != v.0 && owner_child[w] == usize::MAX)
        .collect();

    // Neighbours of v that are not closed children, with the edge to them.
    let other_nbrs: Vec<(usize, ItemId, i128)> = g
        .incident(v)
        .iter()
        .map(|&e| {
            let w = g.other_endpoint(e, v).0;
            (w, e, val.value(local_mask(&val, [e])))
        })
        .filter(|&(w, _, _)| !closed_set[w])
        .collect();

    let v_bit = bit_of(layout.boundary(v), v.0);
    let crossing_v = layout.crossing(v);

    let mut indeg = vec![0u32; n];
    let mut in_s = vec![false; n];
    let mut body = |choice: &[usize], receiver: &mut Vec<Option<usize>>, touched: &mut Vec<ItemId>| -> Result<()> {
        let mut s_open: Vec<usize> = Vec::new();
        for (slot, &pos) in open.iter().enumerate() {
            let rec = child_sets[pos].records()[choice[slot]];
            for (p, &w) in layout.boundary(children[pos]).iter().enumerate() {
                if rec.s >> p & 1 == 1 {
                    s_open.push(w);
                }
            }
        }
        s_open.sort_unstable();
        s_open.dedup();
        // V_i ∩ S' must equal V_i ∩ S_i.
        for (slot, &pos) in open.iter().enumerate() {
            let rec = child_sets[pos].records()[choice[slot]];
            let b = layout.boundary(children[pos]);
            for &w in &s_open {
                if owner_child[w] == pos {
                    match bit_of(b, w) {
                        Some(bit) if rec.s & bit != 0 => {}
                        _ => return Ok(()),
                    }
                }
            }
        }
        let base_touched = touched.len();
        for r0 in 0u64..(1u64 << e0.len()) {
            for e in touched.drain(base_touched..) {
                receiver[e.0] = None;
            }
            for (j, &e) in e0.iter().enumerate() {
                let w = g.other_endpoint(e, v).0;
                receiver[e.0] = Some(if r0 >> j & 1 == 1 { v.0 } else { w });
                touched.push(e);
            }
            for x in indeg.iter_mut() {
                *x = 0;
            }
            for &e in touched.iter() {
                indeg[receiver[e.0].expect("set")] += 1;
            }
            if s_open.iter().any(|&w| indeg[w] >= 2) {
                continue;
            }
            let candidates: Vec<usize> = v0_out
                .iter()
                .copied()
                .filter(|&w| indeg[w] == 1 && s_open.binary_search(&w).is_err())
                .collect();
            let mut r = 0u64;
            for (j, &e) in crossing_v.iter().enumerate() {
                let to = receiver[e.0].ok_or_else(|| Error::internal("crossing edge without orientation"))?;
                if in_vv(to) {
                    r |= 1 << j;
                }
            }
            let v_in: Vec<ItemId> = touched
                .iter()
                .copied()
                .filter(|&e| receiver[e.0] == Some(v.0))
                .collect();
            for s0 in 0u64..(1u64 << candidates.len()) {
                for x in in_s.iter_mut() {
                    *x = false;
                }
                for &w in &s_open {
                    in_s[w] = true;
                }
                for (j, &w) in candidates.iter().enumerate() {
                    if s0 >> j & 1 == 1 {
                        in_s[w] = true;
                    }
                }
                let mut s = 0u64;
                for (p, &w) in layout.boundary(v).iter().enumerate() {
                    if in_s[w] {
                        s |= 1 << p;
                    }
                }
                let ctx = CaseContext {
                    v,
                    val: &val,
                    closed: &closed,
                    other_nbrs: &other_nbrs,
                    receiver,
                    in_s: &in_s,
                    v_in: &v_in,
                    v_bit,
                    r,
                    s,
                    open_choice: choice,
                    open: &open,
                    n_children: children.len(),
                };
                ctx.apply(&mut out);
            }
        }
        for e in touched.drain(base_touched..) {
            receiver[e.0] = None;
        }
        Ok(())
    };
    let open_sets: Vec<(AgentId, &RecordSet)> = open.iter().map(|&p| (children[p], child_sets[p])).collect();
    let mut receiver: Vec<Option<usize>> = vec![None; g.edge_count()];
    let mut choice = vec![0usize; open.len()];
    consistent_choices(g, layout, &open_sets, 0, &mut choice, &mut receiver, &mut Vec::new(), &mut body)?;
    finish(layout, v, out)
}

/// Calls `f` for every choice of one record per open child whose
/// orientations agree on shared edges, assigning children one at a time.
fn consistent_choices<F>(
    g: &GraphInstance,
    layout: &TreeLayout,
    sets: &[(AgentId, &RecordSet)],
    slot: usize,
    choice: &mut Vec<usize>,
    receiver: &mut Vec<Option<usize>>,
    touched: &mut Vec<ItemId>,
    f: &mut F,
) -> Result<()>
where
    F: FnMut(&[usize], &mut Vec<Option<usize>>, &mut Vec<ItemId>) -> Result<()>,
{
    if slot == sets.len() {
        return f(choice, receiver, touched);
    }
    let (c, set) = sets[slot];
    let base = touched.len();
    'records: for (i, rec) in set.records().iter().enumerate() {
        for e in touched.drain(base..) {
            receiver[e.0] = None;
        }
        for (j, &e) in layout.crossing(c).iter().enumerate() {
            let (a, b) = g.endpoints(e);
            let (inside, outside) = if layout.in_subtree(c, a) { (a.0, b.0) } else { (b.0, a.0) };
            let to = if rec.r >> j & 1 == 1 { inside } else { outside };
            match receiver[e.0] {
                None => {
                    receiver[e.0] = Some(to);
                    touched.push(e);
                }
                Some(t) if t == to => {}
                Some(_) => continue 'records,
            }
        }
        choice[slot] = i;
        consistent_choices(g, layout, sets, slot + 1, choice, receiver, touched, f)?;
    }
    for e in touched.drain(base..) {
        receiver[e.0] = None;
    }
    Ok(())
}

struct CaseContext<'a> {
    v: AgentId,
    val: &'a IntValuation,
    closed: &'a [(usize, ClosedInfo)],
    other_nbrs: &'a [(usize, ItemId, i128)],
    receiver: &'a [Option<usize>],
    in_s: &'a [bool],
    v_in: &'a [ItemId],
    v_bit: Option<u64>,
    r: u64,
    s: u64,
    open_choice: &'a [usize],
    open: &'a [usize],
    n_children: usize,
}

impl CaseContext<'_> {
    fn provenance(&self, closed_pick: impl Fn(&ClosedInfo) -> usize) -> Provenance {
        let mut picks = vec![0usize; self.n_children];
        for (slot, &pos) in self.open.iter().enumerate() {
            picks[pos] = self.open_choice[slot];
        }
        for (pos, ci) in self.closed {
            picks[*pos] = closed_pick(ci);
        }
        Provenance::Combined(picks)
    }

    /// Some non-closed neighbour outside `S'` holding its edge to `v` is
    /// worth more to `v` than `own`.
    fn envies_unprotected(&self, own: i128) -> bool {
        self.other_nbrs
            .iter()
            .any(|&(w, e, value)| self.receiver[e.0] == Some(w) && !self.in_s[w] && value > own)
    }

    fn with_v(&self) -> u64 {
        self.s | self.v_bit.unwrap_or(0)
    }

    fn apply(&self, out: &mut RecordSet) {
        let v_in_s = self.in_s[self.v.0];
        let rec = |s| Record { r: self.r, s };

        // Case 0: v receives nothing.
        if self.v_in.is_empty() && !v_in_s {
            let fine = self.closed.iter().all(|(_, ci)| {
                if ci.value > 0 {
                    ci.has(Canonical::ToChildEnvied)
                } else {
                    ci.has(Canonical::ToChild)
                }
            }) && !self.envies_unprotected(0);
            if fine {
                out.add(
                    rec(self.s),
                    || self.provenance(|ci| {
                        if ci.value > 0 {
                            ci.pick(Canonical::ToChildEnvied)
                        } else {
                            ci.pick(Canonical::ToChild)
                        }
                    }),
                );
            }
        }

        // Case 1: exactly one arc into v, from outside the closed children.
        if self.v_in.len() == 1 {
            let s1 = self.val.value(local_mask(self.val, [self.v_in[0]]));
            let fine = self.closed.iter().all(|(_, ci)| {
                ci.has(Canonical::ToChild) && (ci.value <= s1 || ci.has(Canonical::ToChildEnvied))
            }) && !self.envies_unprotected(s1);
            if fine {
                let pick = |ci: &ClosedInfo| {
                    if ci.value > s1 {
                        ci.pick(Canonical::ToChildEnvied)
                    } else {
                        ci.pick(Canonical::ToChild)
                    }
                };
                out.add(rec(self.s), || self.provenance(pick));
                out.add(rec(self.with_v()), || self.provenance(pick));
            }
        }

        // Case 1': the one arc into v comes from closed child c_i.
        if self.v_in.is_empty() && !v_in_s {
            for (_, ci) in self.closed {
                if !ci.has(Canonical::ToParentEnvied) {
                    continue;
                }
                let si = ci.value;
                let fine = self.closed.iter().all(|(_, cj)| {
                    cj.child == ci.child
                        || (cj.has(Canonical::ToChild) && (cj.value <= si || cj.has(Canonical::ToChildEnvied)))
                }) && !self.envies_unprotected(si);
                if !fine {
                    continue;
                }
                let others = |cj: &ClosedInfo| {
                    if cj.value > si {
                        cj.pick(Canonical::ToChildEnvied)
                    } else {
                        cj.pick(Canonical::ToChild)
                    }
                };
                let chosen = if ci.has(Canonical::ToParent) {
                    ci.pick(Canonical::ToParent)
                } else {
                    ci.pick(Canonical::ToParentEnvied)
                };
                let me = ci.child;
                out.add(
                    rec(self.with_v()),
                    || self.provenance(|cj| if cj.child == me { chosen } else { others(cj) }),
                );
                if ci.has(Canonical::ToParent) {
                    out.add(
                        rec(self.s),
                        || self.provenance(|cj| if cj.child == me { chosen } else { others(cj) }),
                    );
                }
            }
        }

        // Case 2: nobody may envy v; closed children give v their edge
        // whenever they can do so without envy.
        if !v_in_s {
            if self
                .closed
                .iter()
                .any(|(_, ci)| !ci.has(Canonical::ToParent) && !ci.has(Canonical::ToChild))
            {
                return;
            }
            let gets = self.v_in.iter().copied().chain(
                self.closed
                    .iter()
                    .filter(|(_, ci)| ci.has(Canonical::ToParent))
                    .map(|(_, ci)| ci.edge),
            );
            let s = self.val.value(local_mask(self.val, gets));
            let fine = self.closed.iter().all(|(_, ci)| {
                ci.has(Canonical::ToParent) || ci.value <= s || ci.has(Canonical::ToChildEnvied)
            }) && !self.envies_unprotected(s);
            if fine {
                out.add(
                    rec(self.s),
                    || self.provenance(|ci| {
                        if ci.has(Canonical::ToParent) {
                            ci.pick(Canonical::ToParent)
                        } else if ci.value > s {
                            ci.pick(Canonical::ToChildEnvied)
                        } else {
                            ci.pick(Canonical::ToChild)
                        }
                    }),
                );
            }
        }
    }
}

/// Normalises the record set of a closed vertex `c` to the canonical four.
/// When `c` hands its edge to the parent, `c ∈ S` only says that `c`'s
/// in-degree (fixed inside `V_c`) is one, which the parent cannot change,
/// so `c` is dropped from `S`. The two implications between canonical
/// records are then checked.
fn finish(layout: &TreeLayout, v: AgentId, set: RecordSet) -> Result<RecordSet> {
    if !layout.is_closed(v) {
        return Ok(set);
    }
    let b = layout.boundary(v);
    let cb = bit_of(b, v.0).expect("own bit");
    let mut out = RecordSet::default();
    for (rec, prov) in set.records.iter().zip(&set.provenance) {
        let norm = if rec.r == 0 {
            Record { r: 0, s: rec.s & !cb }
        } else {
            *rec
        };
        if !CANONICAL.iter().any(|&k| canonical_record(layout, v, k) == norm) {
            return Err(Error::internal(format!("closed vertex {} has record {rec:?}", v.0)));
        }
        out.add(norm, || prov.clone());
    }
    let mut sorted = RecordSet::default();
    for k in CANONICAL {
        let rec = canonical_record(layout, v, k);
        if let Some(p) = out.position(&rec) {
            sorted.add(rec, || out.provenance[p].clone());
        }
    }
    let has = |k| sorted.contains(&canonical_record(layout, v, k));
    if has(Canonical::ToParent) && !has(Canonical::ToParentEnvied) {
        return Err(Error::internal(format!("closed vertex {} breaks ({{c→v}},∅) ⇒ ({{c→v}},{{v}})", v.0)));
    }
    if has(Canonical::ToChildEnvied) && !has(Canonical::ToChild) {
        return Err(Error::internal(format!("closed vertex {} breaks ({{v→c}},{{c}}) ⇒ ({{v→c}},∅)", v.0)));
    }
    Ok(sorted)
}

/// Record sets for every vertex, bottom-up.
pub fn all_record_sets(g: &GraphInstance, layout: &TreeLayout) -> Result<Vec<RecordSet>> {
    if layout.vertex_count() != g.vertex_count() {
        return Err(Error::Layout("layout and graph disagree on the vertex count".into()));
    }
    let mut sets: Vec<Option<RecordSet>> = vec![None; g.vertex_count()];
    for v in layout.postorder() {
        let set = if layout.children(v).next().is_none() {
            finish(layout, v, leaf_records(g, layout, v)?)?
        } else {
            let kids: Vec<&RecordSet> = layout
                .children(v)
                .map(|c| sets[c.0].as_ref().expect("children first"))
                .collect();
            combine_records(g, layout, v, &kids)?
        };
        sets[v.0] = Some(set);
    }
    Ok(sets.into_iter().map(|s| s.expect("every vertex visited")).collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FptOutcome {
    pub exists: bool,
    pub witness: Option<OrientationVector>,
    pub k: usize,
    pub max_records: usize,
}

/// Decides whether an EFX orientation exists; with `witness`, also
/// rebuilds one from the stored provenance.
pub fn decide_efx(g: &GraphInstance, layout: &TreeLayout, witness: bool) -> Result<FptOutcome> {
    let sets = all_record_sets(g, layout)?;
    let root = layout.root();
    let empty = Record { r: 0, s: 0 };
    let exists = sets[root.0].contains(&empty);
    let max_records = sets.iter().map(RecordSet::len).max().unwrap_or(0);
    log::debug!(
        "fpt: k = {}, largest record set {max_records}, answer {exists}",
        layout.k()
    );
    let witness = if exists && witness {
        Some(reconstruct(g, layout, &sets)?)
    } else {
        None
    };
    Ok(FptOutcome {
        exists,
        witness,
        k: layout.k(),
        max_records,
    })
}

fn reconstruct(g: &GraphInstance, layout: &TreeLayout, sets: &[RecordSet]) -> Result<OrientationVector> {
    let mut to: Vec<Option<AgentId>> = vec![None; g.edge_count()];
    let root = layout.root();
    let start = sets[root.0]
        .position(&Record { r: 0, s: 0 })
        .ok_or_else(|| Error::internal("root record missing"))?;
    let mut stack = vec![(root, start)];
    while let Some((v, idx)) = stack.pop() {
        let set = &sets[v.0];
        let rec = set.records[idx];
        for (j, &e) in layout.crossing(v).iter().enumerate() {
            let (a, b) = g.endpoints(e);
            let a_in = layout.in_subtree(v, a);
            let receiver = if (rec.r >> j & 1 == 1) == a_in { a } else { b };
            match to[e.0] {
                None => to[e.0] = Some(receiver),
                Some(x) if x == receiver => {}
                Some(_) => return Err(Error::internal(format!("edge {} oriented both ways", e.0))),
            }
        }
        if let Provenance::Combined(picks) = &set.provenance[idx] {
            for (c, &p) in layout.children(v).zip(picks) {
                stack.push((c, p));
            }
        }
    }
    let bits = to
        .iter()
        .enumerate()
        .map(|(e, t)| {
            let t = t.ok_or_else(|| Error::internal(format!("edge {e} left unoriented")))?;
            Ok(t == g.endpoints(ItemId(e)).1)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(OrientationVector(bits))
}
