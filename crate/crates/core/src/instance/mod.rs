//! Fair-division instances: agents, items, relevant sets and valuations.
//!
//! An [`Instance`] is immutable once built. Every constructor validates it:
//! names are unique, each item is relevant to at least one agent, values are
//! non-negative, tables are monotone, and declared relevance agrees with the
//! relevance implied by the valuation.
//!
//! Valuations are relevance-respecting: the value of any bundle `B` for agent
//! `i` is the value of `B ∩ A_i`.

mod allocation;
mod graph;
pub mod io;
pub(crate) mod planar;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{common_denominator, format_rational, is_negative, scale_to_int, Rational};

pub use allocation::Allocation;
pub use graph::{GraphInstance, OrientationVector};
pub use planar::PlanarInstance;

/// Largest relevant set for which tables are stored or relevance is derived
/// exhaustively.
pub const TABLE_CAP: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ItemId(pub usize);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "agent#{}", self.0)
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "item#{}", self.0)
    }
}

pub type ItemSet = BTreeSet<ItemId>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InstanceKind {
    General,
    Graph,
    Multigraph,
    PlanarFaces,
}

impl InstanceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InstanceKind::General => "general",
            InstanceKind::Graph => "graph",
            InstanceKind::Multigraph => "multigraph",
            InstanceKind::PlanarFaces => "planar-faces",
        }
    }
}

/// Explicit values for every subset of a small item domain. `values[mask]`
/// is the value of the items whose domain positions are set in `mask`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BundleTable {
    domain: Vec<ItemId>,
    values: Vec<Rational>,
}

impl BundleTable {
    pub fn new(domain: Vec<ItemId>, values: Vec<Rational>) -> Result<Self> {
        if domain.len() > TABLE_CAP {
            return Err(Error::CapExceeded {
                what: "table domain",
                size: domain.len(),
                cap: TABLE_CAP,
            });
        }
        if values.len() != 1usize << domain.len() {
            return Err(Error::schema(format!(
                "table over {} items needs {} entries, got {}",
                domain.len(),
                1usize << domain.len(),
                values.len()
            )));
        }
        if !values[0].is_zero() {
            return Err(Error::schema("table value of the empty bundle must be 0"));
        }
        Ok(BundleTable { domain, values })
    }

    /// Builds a table by evaluating `f` on every subset of `domain`.
    pub fn from_fn(domain: Vec<ItemId>, mut f: impl FnMut(&[ItemId]) -> Rational) -> Result<Self> {
        if domain.len() > TABLE_CAP {
            return Err(Error::CapExceeded {
                what: "table domain",
                size: domain.len(),
                cap: TABLE_CAP,
            });
        }
        let mut values = Vec::with_capacity(1 << domain.len());
        let mut buf = Vec::new();
        for mask in 0u64..(1u64 << domain.len()) {
            buf.clear();
            buf.extend(mask_items(&domain, mask));
            values.push(f(&buf));
        }
        BundleTable::new(domain, values)
    }

    pub fn domain(&self) -> &[ItemId] {
        &self.domain
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn value_of_mask(&self, mask: u64) -> &Rational {
        &self.values[mask as usize]
    }

    pub fn value_of<'a>(&self, items: impl IntoIterator<Item = &'a ItemId>) -> Rational {
        let mut mask = 0u64;
        for it in items {
            if let Some(p) = self.domain.iter().position(|d| d == it) {
                mask |= 1 << p;
            }
        }
        self.values[mask as usize]
    }

    /// First pair `(smaller, larger)` with `smaller ⊂ larger` and a larger
    /// value on the smaller side.
    fn monotonicity_witness(&self) -> Option<(u64, u64)> {
        for mask in 0u64..self.values.len() as u64 {
            for b in 0..self.domain.len() {
                if mask & (1 << b) != 0 {
                    let sub = mask & !(1 << b);
                    if self.values[sub as usize] > self.values[mask as usize] {
                        return Some((sub, mask));
                    }
                }
            }
        }
        None
    }

    /// Positions that strictly increase the value of some bundle.
    fn relevant_positions(&self) -> Vec<usize> {
        (0..self.domain.len())
            .filter(|&b| {
                (0u64..self.values.len() as u64)
                    .filter(|m| m & (1 << b) != 0)
                    .any(|m| self.values[(m & !(1 << b)) as usize] < self.values[m as usize])
            })
            .collect()
    }
}

pub(crate) fn mask_items(domain: &[ItemId], mask: u64) -> impl Iterator<Item = ItemId> + '_ {
    domain
        .iter()
        .enumerate()
        .filter(move |(p, _)| mask & (1 << p) != 0)
        .map(|(_, &it)| it)
}

/// The shared function of an identical profile.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SharedValuation {
    /// One weight per item of the instance.
    Additive(Vec<Rational>),
    Table(BundleTable),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValuationProfile {
    /// `weights[agent][item]`.
    Additive { weights: Vec<Vec<Rational>> },
    /// One table per agent over that agent's relevant items.
    Table { tables: Vec<BundleTable> },
    /// `V_i(B) = V(B ∩ A_i)` for a shared `V`.
    Identical { shared: SharedValuation },
    /// Graph kinds only: every endpoint values an edge at its weight.
    GraphSymmetric { weights: Vec<Rational> },
}

impl ValuationProfile {
    pub fn type_name(&self) -> &'static str {
        match self {
            ValuationProfile::Additive { .. } => "additive",
            ValuationProfile::Table { .. } => "table",
            ValuationProfile::Identical { .. } => "identical",
            ValuationProfile::GraphSymmetric { .. } => "graph-symmetric",
        }
    }
}

/// Structure attached to graph-like instances.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Structure {
    General,
    /// `endpoints[item]` for every edge-item.
    Graph { endpoints: Vec<(AgentId, AgentId)>, multi: bool },
    /// Inner faces (items) and the outer boundary cycle.
    Planar { faces: Vec<[AgentId; 3]>, outer_boundary: Vec<AgentId> },
}

#[derive(Clone, Debug)]
enum LocalKind {
    Additive(Vec<Rational>),
    Table(Vec<Rational>),
}

/// One agent's valuation over its relevant set, indexed locally.
#[derive(Clone, Debug)]
struct AgentValuation {
    domain: Vec<ItemId>,
    pos: HashMap<ItemId, usize>,
    kind: LocalKind,
}

impl AgentValuation {
    fn local_mask<'a>(&self, items: impl IntoIterator<Item = &'a ItemId>) -> u64 {
        let mut mask = 0u64;
        for it in items {
            if let Some(&p) = self.pos.get(it) {
                mask |= 1 << p;
            }
        }
        mask
    }

    fn value_of<'a>(&self, items: impl IntoIterator<Item = &'a ItemId>) -> Rational {
        match &self.kind {
            LocalKind::Additive(w) => items
                .into_iter()
                .filter_map(|it| self.pos.get(it))
                .fold(Rational::zero(), |acc, &p| acc + w[p]),
            LocalKind::Table(t) => t[self.local_mask(items) as usize],
        }
    }
}

/// An agent's valuation rescaled to integers over local masks of its
/// relevant set. Comparisons between values of the same agent are exact.
#[derive(Clone, Debug)]
pub struct IntValuation {
    domain: Vec<ItemId>,
    pos: HashMap<ItemId, usize>,
    additive: Option<Vec<i128>>,
    table: Option<Vec<i128>>,
}

impl IntValuation {
    pub fn domain(&self) -> &[ItemId] {
        &self.domain
    }

    pub fn local_index(&self, item: ItemId) -> Option<usize> {
        self.pos.get(&item).copied()
    }

    #[inline]
    pub fn value(&self, mask: u64) -> i128 {
        if let Some(w) = &self.additive {
            let mut m = mask;
            let mut acc = 0i128;
            while m != 0 {
                let b = m.trailing_zeros() as usize;
                acc += w[b];
                m &= m - 1;
            }
            acc
        } else {
            self.table.as_ref().expect("table or additive")[mask as usize]
        }
    }

    /// Largest value left after removing one element of `mask`.
    pub fn max_after_removal(&self, mask: u64) -> i128 {
        if let Some(w) = &self.additive {
            let total = self.value(mask);
            let mut m = mask;
            let mut least = i128::MAX;
            while m != 0 {
                let b = m.trailing_zeros() as usize;
                least = least.min(w[b]);
                m &= m - 1;
            }
            if mask == 0 {
                0
            } else {
                total - least
            }
        } else {
            let mut m = mask;
            let mut best = 0i128;
            while m != 0 {
                let bit = m & m.wrapping_neg();
                best = best.max(self.value(mask & !bit));
                m &= m - 1;
            }
            best
        }
    }
}

/// Number of distinct values an agent's valuation attains, or `Exceeded`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RangeSize {
    Exact(usize),
    Exceeded,
}

#[derive(Clone, Debug)]
pub struct Instance {
    kind: InstanceKind,
    agents: Vec<String>,
    items: Vec<String>,
    relevance: Vec<Vec<ItemId>>,
    agent_lists: Vec<Vec<AgentId>>,
    valuation: ValuationProfile,
    structure: Structure,
    trusted_relevance: bool,
    local: Vec<AgentValuation>,
    agent_index: HashMap<String, AgentId>,
    item_index: HashMap<String, ItemId>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.agents == other.agents
            && self.items == other.items
            && self.relevance == other.relevance
            && self.valuation == other.valuation
            && self.structure == other.structure
    }
}

impl Instance {
    /// Validates and builds an instance. `relevance[i]` is the declared `A_i`.
    pub fn new(
        kind: InstanceKind,
        agents: Vec<String>,
        items: Vec<String>,
        relevance: Vec<Vec<ItemId>>,
        valuation: ValuationProfile,
        structure: Structure,
    ) -> Result<Self> {
        Self::build(kind, agents, items, relevance, valuation, structure, false)
    }

    fn build(
        kind: InstanceKind,
        agents: Vec<String>,
        items: Vec<String>,
        mut relevance: Vec<Vec<ItemId>>,
        valuation: ValuationProfile,
        structure: Structure,
        trusted_relevance: bool,
    ) -> Result<Self> {
        let n = agents.len();
        let m = items.len();
        let agent_index = index_names(&agents, "agent")?;
        let item_index = index_names(&items, "item")?;
        if relevance.len() != n {
            return Err(Error::schema("relevance must list every agent"));
        }
        for (i, rel) in relevance.iter_mut().enumerate() {
            rel.sort_unstable();
            let before = rel.len();
            rel.dedup();
            if rel.len() != before {
                return Err(Error::schema(format!("duplicate relevant item for agent `{}`", agents[i])));
            }
            if let Some(bad) = rel.iter().find(|it| it.0 >= m) {
                return Err(Error::UnknownItem(format!("#{}", bad.0)));
            }
        }

        check_structure(kind, &agents, &items, &relevance, &structure)?;

        let mut agent_lists = vec![Vec::new(); m];
        for (i, rel) in relevance.iter().enumerate() {
            for it in rel {
                agent_lists[it.0].push(AgentId(i));
            }
        }
        if let Some(a) = agent_lists.iter().position(|l| l.is_empty()) {
            return Err(Error::EmptyAgentList(items[a].clone()));
        }

        let local = compile_valuations(&agents, &items, &relevance, &valuation, &structure)?;

        let inst = Instance {
            kind,
            agents,
            items,
            relevance,
            agent_lists,
            valuation,
            structure,
            trusted_relevance,
            local,
            agent_index,
            item_index,
        };
        inst.check_relevance()?;
        Ok(inst)
    }

    fn check_relevance(&self) -> Result<()> {
        for i in 0..self.n() {
            let agent = AgentId(i);
            let declared = &self.relevance[i];
            let derived = self.derived_relevant_items(agent);
            let within = derived.iter().all(|it| declared.binary_search(it).is_ok());
            let exact = derived == *declared;
            let structural = !matches!(self.structure, Structure::General) || self.trusted_relevance;
            if !within || (!structural && !exact) {
                return Err(Error::RelevanceMismatch {
                    agent: self.agents[i].clone(),
                    declared: self.item_names(declared),
                    derived: self.item_names(&derived),
                });
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> InstanceKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn m(&self) -> usize {
        self.items.len()
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        (0..self.n()).map(AgentId)
    }

    pub fn items(&self) -> impl Iterator<Item = ItemId> + '_ {
        (0..self.m()).map(ItemId)
    }

    pub fn agent_names(&self) -> &[String] {
        &self.agents
    }

    pub fn item_names_all(&self) -> &[String] {
        &self.items
    }

    pub fn agent_name(&self, a: AgentId) -> &str {
        &self.agents[a.0]
    }

    pub fn item_name(&self, it: ItemId) -> &str {
        &self.items[it.0]
    }

    pub fn item_names<'a>(&self, items: impl IntoIterator<Item = &'a ItemId>) -> Vec<String> {
        items.into_iter().map(|it| self.items[it.0].clone()).collect()
    }

    pub fn agent_id(&self, name: &str) -> Result<AgentId> {
        self.agent_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownAgent(name.to_string()))
    }

    pub fn item_id(&self, name: &str) -> Result<ItemId> {
        self.item_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownItem(name.to_string()))
    }

    pub fn valuation(&self) -> &ValuationProfile {
        &self.valuation
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// Declared relevant set `A_i`, sorted by declaration order.
    pub fn relevant(&self, agent: AgentId) -> &[ItemId] {
        &self.relevance[agent.0]
    }

    pub fn is_relevant(&self, agent: AgentId, item: ItemId) -> bool {
        self.relevance[agent.0].binary_search(&item).is_ok()
    }

    /// Agent list `N_a`, sorted by declaration order.
    pub fn agent_list(&self, item: ItemId) -> &[AgentId] {
        &self.agent_lists[item.0]
    }

    pub fn value_of(&self, agent: AgentId, bundle: &ItemSet) -> Rational {
        self.local[agent.0].value_of(bundle.iter())
    }

    pub fn value_of_items<'a>(&self, agent: AgentId, items: impl IntoIterator<Item = &'a ItemId>) -> Rational {
        self.local[agent.0].value_of(items)
    }

    /// Name-based value query with unknown-id errors.
    pub fn value_of_named(&self, agent: &str, bundle: &[&str]) -> Result<Rational> {
        let a = self.agent_id(agent)?;
        let set = bundle.iter().map(|b| self.item_id(b)).collect::<Result<ItemSet>>()?;
        Ok(self.value_of(a, &set))
    }

    /// Items that strictly increase the agent's value of some bundle,
    /// computed from the valuation alone.
    pub fn derived_relevant_items(&self, agent: AgentId) -> Vec<ItemId> {
        let av = &self.local[agent.0];
        match &av.kind {
            LocalKind::Additive(w) => av
                .domain
                .iter()
                .zip(w)
                .filter(|(_, w)| !w.is_zero())
                .map(|(&it, _)| it)
                .collect(),
            LocalKind::Table(t) => {
                let table = BundleTable {
                    domain: av.domain.clone(),
                    values: t.clone(),
                };
                table.relevant_positions().into_iter().map(|p| av.domain[p]).collect()
            }
        }
    }

    /// The relevant set of an agent. For general instances this is derived
    /// from the valuation and must equal the declared set; for graph-like
    /// instances relevance is structural (incident edges or faces).
    pub fn relevant_items(&self, agent: AgentId) -> Result<Vec<ItemId>> {
        if matches!(self.structure, Structure::General) && !self.trusted_relevance {
            let derived = self.derived_relevant_items(agent);
            if derived != self.relevance[agent.0] {
                return Err(Error::RelevanceMismatch {
                    agent: self.agents[agent.0].clone(),
                    declared: self.item_names(&self.relevance[agent.0]),
                    derived: self.item_names(&derived),
                });
            }
        }
        Ok(self.relevance[agent.0].clone())
    }

    /// Distinct values of `V_i` over subsets of `A_i`, giving up once more
    /// than `cap` values are seen.
    pub fn range_size(&self, agent: AgentId, cap: usize) -> RangeSize {
        let av = &self.local[agent.0];
        let mut seen: HashSet<Rational> = HashSet::new();
        seen.insert(Rational::zero());
        match &av.kind {
            LocalKind::Additive(w) => {
                for x in w {
                    let next: Vec<Rational> = seen.iter().map(|v| v + x).collect();
                    seen.extend(next);
                    if seen.len() > cap {
                        return RangeSize::Exceeded;
                    }
                }
            }
            LocalKind::Table(t) => {
                for v in t {
                    seen.insert(*v);
                    if seen.len() > cap {
                        return RangeSize::Exceeded;
                    }
                }
            }
        }
        if seen.len() > cap {
            RangeSize::Exceeded
        } else {
            RangeSize::Exact(seen.len())
        }
    }

    /// Integer-scaled valuation of one agent over local masks of `A_i`.
    pub fn int_valuation(&self, agent: AgentId) -> Result<IntValuation> {
        let av = &self.local[agent.0];
        if av.domain.len() > 64 {
            return Err(Error::CapExceeded {
                what: "relevant set for mask evaluation",
                size: av.domain.len(),
                cap: 64,
            });
        }
        let (vals, is_additive) = match &av.kind {
            LocalKind::Additive(w) => (w, true),
            LocalKind::Table(t) => (t, false),
        };
        let scale = common_denominator(vals.iter())?;
        let ints = vals.iter().map(|v| scale_to_int(v, scale)).collect::<Result<Vec<_>>>()?;
        Ok(IntValuation {
            domain: av.domain.clone(),
            pos: av.pos.clone(),
            additive: is_additive.then(|| ints.clone()),
            table: (!is_additive).then_some(ints),
        })
    }

    /// Sub-instance on the given agents and items (in the given order).
    /// Relevance is intersected with `items` and trusted as declared, since
    /// restricting a non-additive valuation may hide some relevance.
    pub fn restrict(&self, agents: &[AgentId], items: &[ItemId]) -> Result<Instance> {
        let item_new: HashMap<ItemId, ItemId> =
            items.iter().enumerate().map(|(k, &it)| (it, ItemId(k))).collect();
        let relevance: Vec<Vec<ItemId>> = agents
            .iter()
            .map(|&a| {
                self.relevance[a.0]
                    .iter()
                    .filter_map(|it| item_new.get(it).copied())
                    .collect()
            })
            .collect();
        let additive = matches!(
            self.valuation,
            ValuationProfile::Additive { .. }
                | ValuationProfile::GraphSymmetric { .. }
                | ValuationProfile::Identical {
                    shared: SharedValuation::Additive(_)
                }
        );
        let valuation = if additive {
            let weights = agents
                .iter()
                .map(|&a| {
                    items
                        .iter()
                        .map(|it| self.value_of_items(a, std::iter::once(it)))
                        .collect()
                })
                .collect();
            ValuationProfile::Additive { weights }
        } else {
            let mut tables = Vec::with_capacity(agents.len());
            for (k, &a) in agents.iter().enumerate() {
                let mut domain = relevance[k].clone();
                domain.sort();
                let av = &self.local[a.0];
                tables.push(BundleTable::from_fn(domain, |sub| {
                    av.value_of(sub.iter().map(|it| &items[it.0]))
                })?);
            }
            ValuationProfile::Table { tables }
        };
        Instance::build(
            InstanceKind::General,
            agents.iter().map(|a| self.agents[a.0].clone()).collect(),
            items.iter().map(|it| self.items[it.0].clone()).collect(),
            relevance,
            valuation,
            Structure::General,
            true,
        )
    }

    /// Largest declared relevant set.
    pub fn max_relevant(&self) -> usize {
        self.relevance.iter().map(Vec::len).max().unwrap_or(0)
    }
}

fn index_names<T: From<usize> + Copy>(names: &[String], what: &str) -> Result<HashMap<String, T>> {
    let mut map = HashMap::with_capacity(names.len());
    for (k, name) in names.iter().enumerate() {
        if map.insert(name.clone(), T::from(k)).is_some() {
            return Err(Error::schema(format!("duplicate {what} id `{name}`")));
        }
    }
    Ok(map)
}

impl From<usize> for AgentId {
    fn from(v: usize) -> Self {
        AgentId(v)
    }
}

impl From<usize> for ItemId {
    fn from(v: usize) -> Self {
        ItemId(v)
    }
}

fn check_structure(
    kind: InstanceKind,
    agents: &[String],
    items: &[String],
    relevance: &[Vec<ItemId>],
    structure: &Structure,
) -> Result<()> {
    let n = agents.len();
    let m = items.len();
    let expect = |incident: Vec<Vec<ItemId>>| -> Result<()> {
        for (i, (want, got)) in incident.iter().zip(relevance).enumerate() {
            if want != got {
                return Err(Error::RelevanceMismatch {
                    agent: agents[i].clone(),
                    declared: got.iter().map(|it| items[it.0].clone()).collect(),
                    derived: want.iter().map(|it| items[it.0].clone()).collect(),
                });
            }
        }
        Ok(())
    };
    match (kind, structure) {
        (InstanceKind::General, Structure::General) => Ok(()),
        (InstanceKind::Graph | InstanceKind::Multigraph, Structure::Graph { endpoints, multi }) => {
            if *multi != (kind == InstanceKind::Multigraph) {
                return Err(Error::schema("graph multiplicity flag does not match the instance kind"));
            }
            if endpoints.len() != m {
                return Err(Error::schema("every item must be an edge"));
            }
            let mut seen = HashSet::new();
            let mut incident = vec![Vec::new(); n];
            for (e, &(u, v)) in endpoints.iter().enumerate() {
                if u.0 >= n || v.0 >= n {
                    return Err(Error::UnknownAgent(format!("#{}", u.0.max(v.0))));
                }
                if u == v {
                    return Err(Error::schema(format!("edge `{}` is a self-loop", items[e])));
                }
                let key = (u.min(v), u.max(v));
                if !*multi && !seen.insert(key) {
                    return Err(Error::schema(format!(
                        "parallel edge `{}` in a simple graph",
                        items[e]
                    )));
                }
                incident[u.0].push(ItemId(e));
                incident[v.0].push(ItemId(e));
            }
            expect(incident)
        }
        (InstanceKind::PlanarFaces, Structure::Planar { faces, outer_boundary }) => {
            if faces.len() != m {
                return Err(Error::schema("every item must be a face"));
            }
            let mut incident = vec![Vec::new(); n];
            for (f, tri) in faces.iter().enumerate() {
                if tri.iter().any(|v| v.0 >= n) {
                    return Err(Error::UnknownAgent(format!("face `{}`", items[f])));
                }
                if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                    return Err(Error::Planar(format!("face `{}` repeats a vertex", items[f])));
                }
                for v in tri {
                    incident[v.0].push(ItemId(f));
                }
            }
            if outer_boundary.iter().any(|v| v.0 >= n) {
                return Err(Error::UnknownAgent("outer boundary".into()));
            }
            expect(incident)
        }
        _ => Err(Error::schema(format!(
            "structure does not match instance kind `{}`",
            kind.as_str()
        ))),
    }
}

fn compile_valuations(
    agents: &[String],
    items: &[String],
    relevance: &[Vec<ItemId>],
    valuation: &ValuationProfile,
    structure: &Structure,
) -> Result<Vec<AgentValuation>> {
    let n = agents.len();
    let m = items.len();
    let negative = |agent: &str, v: &Rational| -> Result<()> {
        if is_negative(v) {
            Err(Error::NegativeValue {
                agent: agent.to_string(),
                value: format_rational(v),
            })
        } else {
            Ok(())
        }
    };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let domain = relevance[i].clone();
        let pos: HashMap<ItemId, usize> = domain.iter().enumerate().map(|(p, &it)| (it, p)).collect();
        let kind = match valuation {
            ValuationProfile::Additive { weights } => {
                if weights.len() != n || weights.iter().any(|w| w.len() != m) {
                    return Err(Error::schema("additive weights must cover every agent and item"));
                }
                for v in &weights[i] {
                    negative(&agents[i], v)?;
                }
                if let Some((it, _)) = weights[i]
                    .iter()
                    .enumerate()
                    .find(|(it, w)| !w.is_zero() && !pos.contains_key(&ItemId(*it)))
                {
                    let mut derived: Vec<ItemId> = (0..m)
                        .filter(|&k| !weights[i][k].is_zero())
                        .map(ItemId)
                        .collect();
                    derived.sort();
                    let _ = it;
                    return Err(Error::RelevanceMismatch {
                        agent: agents[i].clone(),
                        declared: domain.iter().map(|d| items[d.0].clone()).collect(),
                        derived: derived.iter().map(|d| items[d.0].clone()).collect(),
                    });
                }
                LocalKind::Additive(domain.iter().map(|it| weights[i][it.0]).collect())
            }
            ValuationProfile::Table { tables } => {
                if tables.len() != n {
                    return Err(Error::schema("table profile must have one table per agent"));
                }
                let t = &tables[i];
                if t.domain != domain {
                    return Err(Error::schema(format!(
                        "table of agent `{}` must range over exactly its relevant items",
                        agents[i]
                    )));
                }
                check_table(&agents[i], items, t)?;
                LocalKind::Table(t.values.clone())
            }
            ValuationProfile::Identical { shared } => match shared {
                SharedValuation::Additive(w) => {
                    if w.len() != m {
                        return Err(Error::schema("shared additive weights must cover every item"));
                    }
                    for v in w {
                        negative(&agents[i], v)?;
                    }
                    LocalKind::Additive(domain.iter().map(|it| w[it.0]).collect())
                }
                SharedValuation::Table(t) => {
                    if t.domain.iter().any(|it| it.0 >= m) {
                        return Err(Error::schema("shared table mentions an unknown item"));
                    }
                    check_table("shared", items, t)?;
                    let restricted = BundleTable::from_fn(domain.clone(), |sub| t.value_of(sub.iter()))?;
                    LocalKind::Table(restricted.values)
                }
            },
            ValuationProfile::GraphSymmetric { weights } => {
                if !matches!(structure, Structure::Graph { .. }) {
                    return Err(Error::schema("graph-symmetric valuations need a graph instance"));
                }
                if weights.len() != m {
                    return Err(Error::schema("every edge needs a weight"));
                }
                for v in weights {
                    negative(&agents[i], v)?;
                }
                LocalKind::Additive(domain.iter().map(|it| weights[it.0]).collect())
            }
        };
        out.push(AgentValuation { domain, pos, kind });
    }
    Ok(out)
}

fn check_table(agent: &str, items: &[String], t: &BundleTable) -> Result<()> {
    if let Some(v) = t.values.iter().find(|v| is_negative(v)) {
        return Err(Error::NegativeValue {
            agent: agent.to_string(),
            value: format_rational(v),
        });
    }
    if let Some((small, large)) = t.monotonicity_witness() {
        let names = |mask| mask_items(&t.domain, mask).map(|it| items[it.0].clone()).collect();
        return Err(Error::NonMonotone {
            agent: agent.to_string(),
            smaller: names(small),
            larger: names(large),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests;
