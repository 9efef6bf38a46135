//! Bipartite stable b-matching data model.
//!
//! Agents on both sides share one dense index space: `U` agents occupy
//! `0..n_u` and `W` agents occupy `n_u..n_u + n_w`. Preference lists are
//! stored in rank order with tie groups contiguous, and every acceptable pair
//! gets a per-agent *slot* (its position in the original list) so that rank
//! lookups under either the original tied ranks or a tie-breaking strategy
//! are O(1).

use std::fmt;
use std::ops::Range;
use std::time::Duration;

use smallvec::SmallVec;

use crate::error::ModelError;

const NO_SLOT: u32 = u32::MAX;

/// Dense agent handle, valid for the [`Instance`] that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Agent(pub(crate) u32);

impl Agent {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    U,
    W,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::U => Side::W,
            Side::W => Side::U,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    /// Stable marriage with ties and incomplete lists: every quota is 1.
    Smti,
    /// Hospitals/residents with ties: `U` are residents (quota 1), `W` are
    /// hospitals with capacities.
    Hrt,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Smti => "SMTI",
            Kind::Hrt => "HRT",
        })
    }
}

/// Side-local, zero-based agent reference. Displays as `u1`, `w3`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentRef {
    pub side: Side,
    pub index: usize,
}

impl AgentRef {
    pub fn u(index: usize) -> Self {
        AgentRef {
            side: Side::U,
            index,
        }
    }

    pub fn w(index: usize) -> Self {
        AgentRef {
            side: Side::W,
            index,
        }
    }
}

impl fmt::Display for AgentRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.side {
            Side::U => 'u',
            Side::W => 'w',
        };
        write!(f, "{}{}", prefix, self.index + 1)
    }
}

/// Rank of an agent in a preference list, 1 = most preferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rank(u32);

impl Rank {
    pub fn new(value: u32) -> Option<Rank> {
        (value > 0).then_some(Rank(value))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

/// Unvalidated instance description. Preference entries are zero-based
/// indices into the opposite side; each list is a sequence of tie groups in
/// rank order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceSpec {
    pub kind: Kind,
    pub quota_u: Vec<u32>,
    pub quota_w: Vec<u32>,
    pub prefs_u: Vec<Vec<Vec<usize>>>,
    pub prefs_w: Vec<Vec<Vec<usize>>>,
}

impl InstanceSpec {
    /// An SMTI description with unit quotas on both sides.
    pub fn smti(prefs_u: Vec<Vec<Vec<usize>>>, prefs_w: Vec<Vec<Vec<usize>>>) -> Self {
        InstanceSpec {
            kind: Kind::Smti,
            quota_u: vec![1; prefs_u.len()],
            quota_w: vec![1; prefs_w.len()],
            prefs_u,
            prefs_w,
        }
    }

    /// An HRT description: residents have quota 1, hospitals get `capacities`.
    pub fn hrt(
        prefs_u: Vec<Vec<Vec<usize>>>,
        prefs_w: Vec<Vec<Vec<usize>>>,
        capacities: Vec<u32>,
    ) -> Self {
        InstanceSpec {
            kind: Kind::Hrt,
            quota_u: vec![1; prefs_u.len()],
            quota_w: capacities,
            prefs_u,
            prefs_w,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Number of preference lists differs from the number of quotas.
    ListCount {
        side: Side,
        quotas: usize,
        lists: usize,
    },
    IndexOutOfRange {
        agent: AgentRef,
        entry: usize,
    },
    EmptyTieGroup {
        agent: AgentRef,
    },
    Duplicate {
        agent: AgentRef,
        entry: AgentRef,
    },
    /// `lister` accepts `listed`, but `listed` does not accept `lister`.
    Mutuality {
        lister: AgentRef,
        listed: AgentRef,
    },
    ZeroQuota {
        agent: AgentRef,
    },
    SmtiQuota {
        agent: AgentRef,
        quota: u32,
    },
    ResidentQuota {
        agent: AgentRef,
        quota: u32,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ListCount {
                side,
                quotas,
                lists,
            } => write!(
                f,
                "side {side:?} has {quotas} quotas but {lists} preference lists"
            ),
            Violation::IndexOutOfRange { agent, entry } => {
                write!(f, "{agent} lists out-of-range index {}", entry + 1)
            }
            Violation::EmptyTieGroup { agent } => write!(f, "{agent} has an empty tie group"),
            Violation::Duplicate { agent, entry } => write!(f, "{agent} lists {entry} twice"),
            Violation::Mutuality { lister, listed } => {
                let (u, w) = if lister.side == Side::U {
                    (lister, listed)
                } else {
                    (listed, lister)
                };
                write!(
                    f,
                    "mutuality ({u},{w}): {lister} lists {listed} but not vice versa"
                )
            }
            Violation::ZeroQuota { agent } => write!(f, "{agent} has quota 0"),
            Violation::SmtiQuota { agent, quota } => {
                write!(f, "{agent} has quota {quota} in an SMTI instance")
            }
            Violation::ResidentQuota { agent, quota } => {
                write!(f, "resident {agent} has quota {quota}")
            }
        }
    }
}

/// Returns every invariant violation of `spec`; empty means valid.
pub fn validate(spec: &InstanceSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let n_u = spec.prefs_u.len();
    let n_w = spec.prefs_w.len();
    for (side, quotas, lists) in [
        (Side::U, spec.quota_u.len(), n_u),
        (Side::W, spec.quota_w.len(), n_w),
    ] {
        if quotas != lists {
            out.push(Violation::ListCount {
                side,
                quotas,
                lists,
            });
        }
    }

    for (side, quotas) in [(Side::U, &spec.quota_u), (Side::W, &spec.quota_w)] {
        for (index, &quota) in quotas.iter().enumerate() {
            let agent = AgentRef { side, index };
            if quota == 0 {
                out.push(Violation::ZeroQuota { agent });
            } else if spec.kind == Kind::Smti && quota != 1 {
                out.push(Violation::SmtiQuota { agent, quota });
            } else if spec.kind == Kind::Hrt && side == Side::U && quota != 1 {
                out.push(Violation::ResidentQuota { agent, quota });
            }
        }
    }

    // acceptability[u][w] bit per direction
    let mut accepts_u = vec![false; n_u * n_w];
    let mut accepts_w = vec![false; n_u * n_w];
    for (side, lists, other_len) in [(Side::U, &spec.prefs_u, n_w), (Side::W, &spec.prefs_w, n_u)] {
        for (index, groups) in lists.iter().enumerate() {
            let agent = AgentRef { side, index };
            let mut seen = vec![false; other_len];
            for group in groups {
                if group.is_empty() {
                    out.push(Violation::EmptyTieGroup { agent });
                }
                for &entry in group {
                    if entry >= other_len {
                        out.push(Violation::IndexOutOfRange { agent, entry });
                        continue;
                    }
                    if seen[entry] {
                        out.push(Violation::Duplicate {
                            agent,
                            entry: AgentRef {
                                side: side.opposite(),
                                index: entry,
                            },
                        });
                        continue;
                    }
                    seen[entry] = true;
                    match side {
                        Side::U => accepts_u[index * n_w + entry] = true,
                        Side::W => accepts_w[entry * n_w + index] = true,
                    }
                }
            }
        }
    }

    for u in 0..n_u {
        for w in 0..n_w {
            let (a, b) = (accepts_u[u * n_w + w], accepts_w[u * n_w + w]);
            if a && !b {
                out.push(Violation::Mutuality {
                    lister: AgentRef::u(u),
                    listed: AgentRef::w(w),
                });
            } else if b && !a {
                out.push(Violation::Mutuality {
                    lister: AgentRef::w(w),
                    listed: AgentRef::u(u),
                });
            }
        }
    }
    out
}

/// One agent's preference list: entries in rank order with tie groups kept
/// contiguous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefList {
    entries: Vec<Agent>,
    group_of: Vec<u32>,
    bounds: Vec<u32>,
}

impl PrefList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in original listing order (slot order).
    pub fn entries(&self) -> &[Agent] {
        &self.entries
    }

    pub fn group_count(&self) -> usize {
        self.bounds.len() - 1
    }

    /// Zero-based tie group of the entry at `slot`.
    #[inline]
    pub fn group_of_slot(&self, slot: u32) -> u32 {
        self.group_of[slot as usize]
    }

    /// Slot range occupied by tie group `group`.
    #[inline]
    pub fn group_range(&self, group: u32) -> Range<usize> {
        self.bounds[group as usize] as usize..self.bounds[group as usize + 1] as usize
    }

    pub fn groups(&self) -> impl Iterator<Item = &[Agent]> + '_ {
        self.bounds
            .windows(2)
            .map(|b| &self.entries[b[0] as usize..b[1] as usize])
    }
}

/// A validated SMTI or HRT instance. Immutable once constructed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    kind: Kind,
    n_u: usize,
    n_w: usize,
    quota: Vec<u32>,
    lists: Vec<PrefList>,
    // slot_u[u * n_w + w] = slot of w in L_u; slot_w[w * n_u + u] likewise
    slot_u: Vec<u32>,
    slot_w: Vec<u32>,
}

impl Instance {
    pub fn new(spec: InstanceSpec) -> Result<Instance, ModelError> {
        let violations = validate(&spec);
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations));
        }
        let n_u = spec.prefs_u.len();
        let n_w = spec.prefs_w.len();
        let mut quota = spec.quota_u;
        quota.extend(spec.quota_w);

        let mut lists = Vec::with_capacity(n_u + n_w);
        let mut slot_u = vec![NO_SLOT; n_u * n_w];
        let mut slot_w = vec![NO_SLOT; n_u * n_w];
        for (side, prefs) in [(Side::U, &spec.prefs_u), (Side::W, &spec.prefs_w)] {
            for (index, groups) in prefs.iter().enumerate() {
                let mut entries = Vec::new();
                let mut group_of = Vec::new();
                let mut bounds = vec![0u32];
                for (g, group) in groups.iter().enumerate() {
                    for &other in group {
                        let slot = entries.len() as u32;
                        match side {
                            Side::U => {
                                slot_u[index * n_w + other] = slot;
                                entries.push(Agent((n_u + other) as u32));
                            }
                            Side::W => {
                                slot_w[index * n_u + other] = slot;
                                entries.push(Agent(other as u32));
                            }
                        }
                        group_of.push(g as u32);
                    }
                    bounds.push(entries.len() as u32);
                }
                lists.push(PrefList {
                    entries,
                    group_of,
                    bounds,
                });
            }
        }

        Ok(Instance {
            kind: spec.kind,
            n_u,
            n_w,
            quota,
            lists,
            slot_u,
            slot_w,
        })
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn n_w(&self) -> usize {
        self.n_w
    }

    /// Total number of agents on both sides.
    pub fn agent_count(&self) -> usize {
        self.n_u + self.n_w
    }

    pub fn agents(&self) -> impl Iterator<Item = Agent> {
        (0..self.agent_count() as u32).map(Agent)
    }

    pub fn side_agents(&self, side: Side) -> impl Iterator<Item = Agent> {
        let range = match side {
            Side::U => 0..self.n_u as u32,
            Side::W => self.n_u as u32..(self.n_u + self.n_w) as u32,
        };
        range.map(Agent)
    }

    /// Panics if `index` is out of range; see [`Instance::checked_agent`].
    pub fn u(&self, index: usize) -> Agent {
        assert!(index < self.n_u, "u index {index} out of range");
        Agent(index as u32)
    }

    /// Panics if `index` is out of range; see [`Instance::checked_agent`].
    pub fn w(&self, index: usize) -> Agent {
        assert!(index < self.n_w, "w index {index} out of range");
        Agent((self.n_u + index) as u32)
    }

    pub fn checked_agent(&self, r: AgentRef) -> Result<Agent, ModelError> {
        let limit = match r.side {
            Side::U => self.n_u,
            Side::W => self.n_w,
        };
        if r.index >= limit {
            return Err(ModelError::UnknownAgent(r));
        }
        Ok(match r.side {
            Side::U => Agent(r.index as u32),
            Side::W => Agent((self.n_u + r.index) as u32),
        })
    }

    #[inline]
    pub fn side(&self, a: Agent) -> Side {
        if a.index() < self.n_u {
            Side::U
        } else {
            Side::W
        }
    }

    pub fn agent_ref(&self, a: Agent) -> AgentRef {
        match self.side(a) {
            Side::U => AgentRef::u(a.index()),
            Side::W => AgentRef::w(a.index() - self.n_u),
        }
    }

    pub(crate) fn contains(&self, a: Agent) -> bool {
        a.index() < self.agent_count()
    }

    #[inline]
    pub fn quota(&self, a: Agent) -> u32 {
        self.quota[a.index()]
    }

    #[inline]
    pub fn list(&self, a: Agent) -> &PrefList {
        &self.lists[a.index()]
    }

    /// Sum of quotas on one side.
    pub fn total_quota(&self, side: Side) -> u64 {
        self.side_agents(side)
            .map(|a| u64::from(self.quota(a)))
            .sum()
    }

    /// Largest feasible matching size, `min(Σ_U b, Σ_W b)`.
    pub fn capacity_bound(&self) -> u64 {
        self.total_quota(Side::U).min(self.total_quota(Side::W))
    }

    pub fn max_list_len(&self, side: Side) -> usize {
        self.side_agents(side)
            .map(|a| self.list(a).len())
            .max()
            .unwrap_or(0)
    }

    /// Slot (original list position) of `x` in `L_v`, if acceptable.
    #[inline]
    pub fn slot(&self, v: Agent, x: Agent) -> Option<u32> {
        let (vi, xi) = (v.index(), x.index());
        let s = if vi < self.n_u {
            if xi < self.n_u || xi >= self.agent_count() {
                return None;
            }
            self.slot_u[vi * self.n_w + (xi - self.n_u)]
        } else {
            if xi >= self.n_u || vi >= self.agent_count() {
                return None;
            }
            self.slot_w[(vi - self.n_u) * self.n_u + xi]
        };
        (s != NO_SLOT).then_some(s)
    }

    #[inline]
    pub fn accepts(&self, v: Agent, x: Agent) -> bool {
        self.slot(v, x).is_some()
    }

    /// Original (tied) rank `r_v(x)`.
    pub fn rank(&self, v: Agent, x: Agent) -> Option<Rank> {
        self.slot(v, x)
            .map(|s| Rank(self.list(v).group_of_slot(s) + 1))
    }

    /// Rebuilds the unvalidated description (zero-based, side-local indices).
    pub fn to_spec(&self) -> InstanceSpec {
        let groups_of = |a: Agent| -> Vec<Vec<usize>> {
            self.list(a)
                .groups()
                .map(|g| g.iter().map(|&x| self.agent_ref(x).index).collect())
                .collect()
        };
        InstanceSpec {
            kind: self.kind,
            quota_u: self.side_agents(Side::U).map(|a| self.quota(a)).collect(),
            quota_w: self.side_agents(Side::W).map(|a| self.quota(a)).collect(),
            prefs_u: self.side_agents(Side::U).map(groups_of).collect(),
            prefs_w: self.side_agents(Side::W).map(groups_of).collect(),
        }
    }
}

/// A ranking over preference lists: the original tied ranks, or the strict
/// ranks induced by a tie-breaking strategy. Positions are zero-based and
/// smaller is better.
pub trait Ranking {
    fn position(&self, inst: &Instance, v: Agent, slot: u32) -> u32;
}

/// The instance's own tied ranks `r`.
#[derive(Debug, Clone, Copy, Default)]
pub struct OriginalRanks;

impl Ranking for OriginalRanks {
    #[inline]
    fn position(&self, inst: &Instance, v: Agent, slot: u32) -> u32 {
        inst.list(v).group_of_slot(slot)
    }
}

impl<R: Ranking + ?Sized> Ranking for &R {
    #[inline]
    fn position(&self, inst: &Instance, v: Agent, slot: u32) -> u32 {
        (**self).position(inst, v, slot)
    }
}

/// A b-matching over an instance.
#[derive(Debug, Clone)]
pub struct Matching {
    n_u: u32,
    partners: Vec<SmallVec<[Agent; 2]>>,
    size: usize,
}

impl Matching {
    pub fn empty(inst: &Instance) -> Matching {
        Matching {
            n_u: inst.n_u() as u32,
            partners: vec![SmallVec::new(); inst.agent_count()],
            size: 0,
        }
    }

    /// Builds a matching from `(u, w)` pairs, checking sides, acceptability,
    /// duplicates and quotas.
    pub fn from_pairs(inst: &Instance, pairs: &[(Agent, Agent)]) -> Result<Matching, ModelError> {
        let mut m = Matching::empty(inst);
        for &(u, w) in pairs {
            if !inst.contains(u) || !inst.contains(w) {
                return Err(ModelError::MalformedMatching(
                    "agent index out of range".into(),
                ));
            }
            if inst.side(u) != Side::U || inst.side(w) != Side::W {
                return Err(ModelError::MalformedMatching(format!(
                    "pair ({}, {}) is not a (U, W) pair",
                    inst.agent_ref(u),
                    inst.agent_ref(w)
                )));
            }
            let (ur, wr) = (inst.agent_ref(u), inst.agent_ref(w));
            if !inst.accepts(u, w) {
                return Err(ModelError::MalformedMatching(format!(
                    "pair ({ur}, {wr}) is not mutually acceptable"
                )));
            }
            if m.contains(u, w) {
                return Err(ModelError::MalformedMatching(format!(
                    "pair ({ur}, {wr}) listed twice"
                )));
            }
            for a in [u, w] {
                if m.degree(a) >= inst.quota(a) as usize {
                    return Err(ModelError::MalformedMatching(format!(
                        "{} exceeds its quota {}",
                        inst.agent_ref(a),
                        inst.quota(a)
                    )));
                }
            }
            m.connect(u, w);
        }
        Ok(m)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn partners(&self, v: Agent) -> &[Agent] {
        &self.partners[v.index()]
    }

    #[inline]
    pub fn degree(&self, v: Agent) -> usize {
        self.partners[v.index()].len()
    }

    #[inline]
    pub fn contains(&self, a: Agent, b: Agent) -> bool {
        let (pa, pb) = (&self.partners[a.index()], &self.partners[b.index()]);
        if pa.len() <= pb.len() {
            pa.contains(&b)
        } else {
            pb.contains(&a)
        }
    }

    #[inline]
    pub fn is_full(&self, inst: &Instance, v: Agent) -> bool {
        self.degree(v) >= inst.quota(v) as usize
    }

    #[inline]
    pub fn is_free(&self, inst: &Instance, v: Agent) -> bool {
        !self.is_full(inst, v)
    }

    /// The free-agent set `F_M`, in index order.
    pub fn free_agents<'a>(&'a self, inst: &'a Instance) -> impl Iterator<Item = Agent> + 'a {
        inst.agents().filter(move |&a| self.is_free(inst, a))
    }

    /// `ξ_f`: candidates of `f` not currently matched with it.
    pub fn unmatched_candidates<'a>(
        &'a self,
        inst: &'a Instance,
        f: Agent,
    ) -> impl Iterator<Item = Agent> + 'a {
        let mine = self.partners(f);
        inst.list(f)
            .entries()
            .iter()
            .copied()
            .filter(move |x| !mine.contains(x))
    }

    /// Worst partner of `v` under `ranking`; ties in position resolve to the
    /// earliest-connected partner.
    pub fn worst_partner<R: Ranking>(
        &self,
        inst: &Instance,
        ranking: &R,
        v: Agent,
    ) -> Option<Agent> {
        let mut worst: Option<(u32, Agent)> = None;
        for &p in self.partners(v) {
            let slot = inst.slot(v, p).expect("partner must be acceptable");
            let pos = ranking.position(inst, v, slot);
            if worst.is_none_or(|(wp, _)| pos > wp) {
                worst = Some((pos, p));
            }
        }
        worst.map(|(_, p)| p)
    }

    /// All pairs as `(u, w)`, sorted.
    pub fn pairs(&self) -> Vec<(Agent, Agent)> {
        let mut out: Vec<(Agent, Agent)> = (0..self.n_u as usize)
            .flat_map(|u| self.partners[u].iter().map(move |&w| (Agent(u as u32), w)))
            .collect();
        out.sort_unstable();
        out
    }

    pub(crate) fn connect(&mut self, a: Agent, b: Agent) {
        debug_assert!(!self.contains(a, b));
        self.partners[a.index()].push(b);
        self.partners[b.index()].push(a);
        self.size += 1;
    }

    pub(crate) fn disconnect(&mut self, a: Agent, b: Agent) {
        let pa = &mut self.partners[a.index()];
        let i = pa.iter().position(|&x| x == b).expect("pair not matched");
        pa.remove(i);
        let pb = &mut self.partners[b.index()];
        let j = pb.iter().position(|&x| x == a).expect("pair not matched");
        pb.remove(j);
        self.size -= 1;
    }
}

impl PartialEq for Matching {
    fn eq(&self, other: &Self) -> bool {
        self.n_u == other.n_u && self.size == other.size && self.pairs() == other.pairs()
    }
}

impl Eq for Matching {}

/// `true` iff `v` is free or strictly prefers `y` to its worst partner.
#[inline]
pub(crate) fn wants<R: Ranking>(
    inst: &Instance,
    ranking: &R,
    m: &Matching,
    v: Agent,
    slot_y: u32,
) -> bool {
    if m.is_free(inst, v) {
        return true;
    }
    let worst = m
        .worst_partner(inst, ranking, v)
        .expect("full agent has a partner");
    let worst_slot = inst.slot(v, worst).expect("partner must be acceptable");
    ranking.position(inst, v, slot_y) < ranking.position(inst, v, worst_slot)
}

/// Blocking-pair test for agents `a`, `b` on opposite sides (either order).
#[inline]
pub(crate) fn blocks<R: Ranking>(
    inst: &Instance,
    ranking: &R,
    m: &Matching,
    a: Agent,
    b: Agent,
) -> bool {
    let (Some(slot_ab), Some(slot_ba)) = (inst.slot(a, b), inst.slot(b, a)) else {
        return false;
    };
    !m.contains(a, b) && wants(inst, ranking, m, a, slot_ab) && wants(inst, ranking, m, b, slot_ba)
}

/// Whether `(u, w)` is a blocking pair of `m` under `ranking`.
pub fn is_blocking_pair<R: Ranking>(
    inst: &Instance,
    ranking: &R,
    m: &Matching,
    u: Agent,
    w: Agent,
) -> Result<bool, ModelError> {
    for (a, side) in [(u, Side::U), (w, Side::W)] {
        if !inst.contains(a) || inst.side(a) != side {
            return Err(ModelError::UnknownAgent(AgentRef {
                side,
                index: a.index(),
            }));
        }
    }
    Ok(blocks(inst, ranking, m, u, w))
}

/// Summed original ranks `(Σ r_u(w), Σ r_w(u))` over matched pairs.
pub fn rank_sums(inst: &Instance, m: &Matching) -> (u64, u64) {
    m.pairs().iter().fold((0, 0), |(su, sw), &(u, w)| {
        let ru = inst.rank(u, w).expect("matched pair acceptable").get();
        let rw = inst.rank(w, u).expect("matched pair acceptable").get();
        (su + u64::from(ru), sw + u64::from(rw))
    })
}

/// Sex equality cost over matched pairs, using original ranks.
pub fn sex_equality_cost(inst: &Instance, m: &Matching) -> Result<u64, ModelError> {
    if inst.kind() != Kind::Smti {
        return Err(ModelError::UnsupportedMetric {
            metric: "sex equality cost",
        });
    }
    let (su, sw) = rank_sums(inst, m);
    Ok(su.abs_diff(sw))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Favored {
    U,
    W,
    Balanced,
}

/// Which side a matching favors: the side with the smaller summed ranks.
pub fn favored_side(inst: &Instance, m: &Matching) -> Result<Favored, ModelError> {
    if inst.kind() != Kind::Smti {
        return Err(ModelError::UnsupportedMetric {
            metric: "favored side",
        });
    }
    let (su, sw) = rank_sums(inst, m);
    Ok(match su.cmp(&sw) {
        std::cmp::Ordering::Less => Favored::U,
        std::cmp::Ordering::Greater => Favored::W,
        std::cmp::Ordering::Equal => Favored::Balanced,
    })
}

/// Per-run metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub matching_size: usize,
    pub unmatched_u: usize,
    pub unmatched_w: usize,
    /// `Σ_W b(w) − size`; for SMTI this equals `unmatched_w`.
    pub unassigned_positions: u64,
    /// `None` for HRT instances.
    pub sex_equality_cost: Option<u64>,
    pub iterations: u64,
    pub elapsed: Duration,
    pub seed: u64,
}

impl RunReport {
    pub fn measure(
        inst: &Instance,
        m: &Matching,
        iterations: u64,
        elapsed: Duration,
        seed: u64,
    ) -> RunReport {
        let unmatched = |side| inst.side_agents(side).filter(|&a| m.degree(a) == 0).count();
        RunReport {
            matching_size: m.size(),
            unmatched_u: unmatched(Side::U),
            unmatched_w: unmatched(Side::W),
            unassigned_positions: inst.total_quota(Side::W) - m.size() as u64,
            sex_equality_cost: sex_equality_cost(inst, m).ok(),
            iterations,
            elapsed,
            seed,
        }
    }
}
