//! Brute-force ground truth for small instances.
//!
//! Nothing here reuses the solver's blocking-pair code: ranks are copied into
//! dense tables straight from the tie groups (or from a strategy's strict
//! lists), and stability is checked by a full scan over all pairs.

use thiserror::Error;

use crate::error::ModelError;
use crate::model::{Agent, Instance, Kind, Matching, Side};
use crate::strategy::TieBreakingStrategy;

/// Largest `|U|·|W|` accepted by [`all_blocking_pairs`].
pub const MAX_SCAN_PAIRS: usize = 1_000_000;
/// Largest number of agents per side (SMTI) or residents (HRT) accepted by
/// [`max_weakly_stable`].
pub const MAX_ENUM_AGENTS: usize = 8;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance too large for the oracle: {what} is {actual}, limit {limit}")]
    TooLarge {
        what: &'static str,
        actual: usize,
        limit: usize,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which ranks decide preference.
#[derive(Debug, Clone, Copy)]
pub enum RankBasis<'a> {
    /// Tie groups of the instance: tied agents are indifferent.
    Original,
    /// Strict ranks of a complete tie-breaking.
    Strategy(&'a TieBreakingStrategy),
}

const UNACCEPTABLE: u32 = u32::MAX;

struct RankTable {
    n_u: usize,
    n_w: usize,
    // u-major: rank_u[u * n_w + w] is u's rank of w
    rank_u: Vec<u32>,
    // w-major: rank_w[w * n_u + u] is w's rank of u
    rank_w: Vec<u32>,
}

impl RankTable {
    fn build(inst: &Instance, basis: RankBasis<'_>) -> RankTable {
        let (n_u, n_w) = (inst.n_u(), inst.n_w());
        let mut t = RankTable {
            n_u,
            n_w,
            rank_u: vec![UNACCEPTABLE; n_u * n_w],
            rank_w: vec![UNACCEPTABLE; n_u * n_w],
        };
        for v in inst.agents() {
            let ranked: Vec<(Agent, u32)> = match basis {
                RankBasis::Original => inst
                    .list(v)
                    .groups()
                    .enumerate()
                    .flat_map(|(g, group)| group.iter().map(move |&x| (x, g as u32)))
                    .collect(),
                RankBasis::Strategy(s) => s
                    .tie_free_list(inst, v)
                    .enumerate()
                    .map(|(pos, x)| (x, pos as u32))
                    .collect(),
            };
            for (x, r) in ranked {
                let cell = t.cell(inst, v, x);
                match inst.side(v) {
                    Side::U => t.rank_u[cell] = r,
                    Side::W => t.rank_w[cell] = r,
                }
            }
        }
        t
    }

    fn cell(&self, inst: &Instance, v: Agent, x: Agent) -> usize {
        let (vi, xi) = (side_index(inst, v), side_index(inst, x));
        match inst.side(v) {
            Side::U => vi * self.n_w + xi,
            Side::W => vi * self.n_u + xi,
        }
    }

    fn u_rank(&self, u: usize, w: usize) -> u32 {
        self.rank_u[u * self.n_w + w]
    }

    fn w_rank(&self, w: usize, u: usize) -> u32 {
        self.rank_w[w * self.n_u + u]
    }
}

fn side_index(inst: &Instance, a: Agent) -> usize {
    match inst.side(a) {
        Side::U => a.index(),
        Side::W => a.index() - inst.n_u(),
    }
}

/// Matching state in side-local indices.
struct State {
    matched: Vec<bool>,
    deg_u: Vec<u32>,
    deg_w: Vec<u32>,
}

impl State {
    fn new(n_u: usize, n_w: usize) -> State {
        State {
            matched: vec![false; n_u * n_w],
            deg_u: vec![0; n_u],
            deg_w: vec![0; n_w],
        }
    }

    fn set(&mut self, n_w: usize, u: usize, w: usize, on: bool) {
        self.matched[u * n_w + w] = on;
        if on {
            self.deg_u[u] += 1;
            self.deg_w[w] += 1;
        } else {
            self.deg_u[u] -= 1;
            self.deg_w[w] -= 1;
        }
    }
}

struct Scanner<'a> {
    table: &'a RankTable,
    quota_u: Vec<u32>,
    quota_w: Vec<u32>,
}

impl<'a> Scanner<'a> {
    fn new(inst: &Instance, table: &'a RankTable) -> Scanner<'a> {
        Scanner {
            table,
            quota_u: inst.side_agents(Side::U).map(|a| inst.quota(a)).collect(),
            quota_w: inst.side_agents(Side::W).map(|a| inst.quota(a)).collect(),
        }
    }

    /// Calls `found(u, w)` for every blocking pair; stops early when it
    /// returns false.
    #[allow(clippy::needless_range_loop)]
    fn scan(&self, st: &State, mut found: impl FnMut(usize, usize) -> bool) {
        let t = self.table;
        let mut worst_u = vec![0u32; t.n_u];
        let mut worst_w = vec![0u32; t.n_w];
        for u in 0..t.n_u {
            for w in 0..t.n_w {
                if st.matched[u * t.n_w + w] {
                    worst_u[u] = worst_u[u].max(t.u_rank(u, w));
                    worst_w[w] = worst_w[w].max(t.w_rank(w, u));
                }
            }
        }
        for u in 0..t.n_u {
            let u_free = st.deg_u[u] < self.quota_u[u];
            for w in 0..t.n_w {
                let (ru, rw) = (t.u_rank(u, w), t.w_rank(w, u));
                if ru == UNACCEPTABLE || rw == UNACCEPTABLE || st.matched[u * t.n_w + w] {
                    continue;
                }
                let u_wants = u_free || ru < worst_u[u];
                let w_wants = st.deg_w[w] < self.quota_w[w] || rw < worst_w[w];
                if u_wants && w_wants && !found(u, w) {
                    return;
                }
            }
        }
    }
}

fn load(inst: &Instance, m: &Matching) -> State {
    let mut st = State::new(inst.n_u(), inst.n_w());
    for (u, w) in m.pairs() {
        st.set(inst.n_w(), side_index(inst, u), side_index(inst, w), true);
    }
    st
}

/// Every blocking pair `(u, w)` of `m`, sorted.
pub fn all_blocking_pairs(
    inst: &Instance,
    m: &Matching,
    basis: RankBasis<'_>,
) -> Result<Vec<(Agent, Agent)>, OracleError> {
    let pairs = inst.n_u() * inst.n_w();
    if pairs > MAX_SCAN_PAIRS {
        return Err(OracleError::TooLarge {
            what: "|U|*|W|",
            actual: pairs,
            limit: MAX_SCAN_PAIRS,
        });
    }
    let table = RankTable::build(inst, basis);
    let st = load(inst, m);
    let mut out = Vec::new();
    Scanner::new(inst, &table).scan(&st, |u, w| {
        out.push((inst.u(u), inst.w(w)));
        true
    });
    Ok(out)
}

/// True iff `m` has no blocking pair under the original tied ranks.
pub fn verify_weakly_stable(inst: &Instance, m: &Matching) -> Result<bool, OracleError> {
    Ok(all_blocking_pairs(inst, m, RankBasis::Original)?.is_empty())
}

/// Like [`verify_weakly_stable`] for a raw pair list; malformed lists are
/// reported as errors.
pub fn verify_pairs(inst: &Instance, pairs: &[(Agent, Agent)]) -> Result<bool, OracleError> {
    let m = Matching::from_pairs(inst, pairs)?;
    verify_weakly_stable(inst, &m)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub max_stable_size: usize,
    /// Every weakly stable matching of maximum size, in enumeration order.
    pub optimal_matchings: Vec<Matching>,
    pub total_weakly_stable: u64,
}

struct Enumerator<'a> {
    inst: &'a Instance,
    scanner: Scanner<'a>,
    lists: Vec<Vec<usize>>,
    st: State,
    stack: Vec<(usize, usize)>,
    best: usize,
    optimal: Vec<Vec<(usize, usize)>>,
    total: u64,
}

impl Enumerator<'_> {
    fn visit(&mut self, u: usize, from: usize) {
        if u == self.lists.len() {
            self.leaf();
            return;
        }
        self.visit(u + 1, 0);
        if self.st.deg_u[u] >= self.scanner.quota_u[u] {
            return;
        }
        for pos in from..self.lists[u].len() {
            let w = self.lists[u][pos];
            if self.st.deg_w[w] >= self.scanner.quota_w[w] {
                continue;
            }
            let n_w = self.inst.n_w();
            self.st.set(n_w, u, w, true);
            self.stack.push((u, w));
            self.visit(u, pos + 1);
            self.stack.pop();
            self.st.set(n_w, u, w, false);
        }
    }

    fn leaf(&mut self) {
        let mut stable = true;
        self.scanner.scan(&self.st, |_, _| {
            stable = false;
            false
        });
        if !stable {
            return;
        }
        self.total += 1;
        let size = self.stack.len();
        if size > self.best {
            self.best = size;
            self.optimal.clear();
        }
        if size == self.best {
            self.optimal.push(self.stack.clone());
        }
    }
}

/// Exhaustive maximum weakly stable matching.
pub fn max_weakly_stable(inst: &Instance) -> Result<OracleResult, OracleError> {
    let guarded: &[(&'static str, usize)] = match inst.kind() {
        Kind::Smti => &[("|U|", inst.n_u()), ("|W|", inst.n_w())],
        Kind::Hrt => &[("residents", inst.n_u())],
    };
    for &(what, actual) in guarded {
        if actual > MAX_ENUM_AGENTS {
            return Err(OracleError::TooLarge {
                what,
                actual,
                limit: MAX_ENUM_AGENTS,
            });
        }
    }
    let table = RankTable::build(inst, RankBasis::Original);
    let mut e = Enumerator {
        inst,
        scanner: Scanner::new(inst, &table),
        lists: inst
            .side_agents(Side::U)
            .map(|u| {
                inst.list(u)
                    .entries()
                    .iter()
                    .map(|&w| side_index(inst, w))
                    .collect()
            })
            .collect(),
        st: State::new(inst.n_u(), inst.n_w()),
        stack: Vec::new(),
        best: 0,
        optimal: Vec::new(),
        total: 0,
    };
    e.visit(0, 0);
    let optimal_matchings = e
        .optimal
        .iter()
        .map(|pairs| {
            let pairs: Vec<_> = pairs.iter().map(|&(u, w)| (inst.u(u), inst.w(w))).collect();
            Matching::from_pairs(inst, &pairs)
        })
        .collect::<Result<_, _>>()?;
    Ok(OracleResult {
        max_stable_size: e.best,
        optimal_matchings,
        total_weakly_stable: e.total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::toy;
    use crate::model::InstanceSpec;

    fn pairs(inst: &Instance, ps: &[(usize, usize)]) -> Matching {
        let v: Vec<_> = ps.iter().map(|&(u, w)| (inst.u(u), inst.w(w))).collect();
        Matching::from_pairs(inst, &v).unwrap()
    }

    #[test]
    fn toy_m1_is_weakly_stable() {
        let inst = toy();
        let m1 = pairs(&inst, &[(0, 0), (1, 1)]);
        assert!(all_blocking_pairs(&inst, &m1, RankBasis::Original)
            .unwrap()
            .is_empty());
        assert!(verify_weakly_stable(&inst, &m1).unwrap());
    }

    #[test]
    fn toy_m1_under_s2_has_one_blocking_pair() {
        let inst = toy();
        let (m2, m4, w2) = (inst.u(1), inst.u(3), inst.w(1));
        let s2 = TieBreakingStrategy::from_orders(&inst, &[(w2, vec![m4, m2, inst.u(0)])]).unwrap();
        let m1 = pairs(&inst, &[(0, 0), (1, 1)]);
        assert_eq!(
            all_blocking_pairs(&inst, &m1, RankBasis::Strategy(&s2)).unwrap(),
            vec![(m4, w2)]
        );
    }

    #[test]
    fn toy_empty_matching_blocked_by_every_edge() {
        let inst = toy();
        let bps = all_blocking_pairs(&inst, &Matching::empty(&inst), RankBasis::Original).unwrap();
        let mut expected: Vec<_> = [
            (0, 0),
            (0, 2),
            (0, 1),
            (1, 0),
            (1, 1),
            (1, 3),
            (2, 0),
            (3, 1),
        ]
        .iter()
        .map(|&(u, w)| (inst.u(u), inst.w(w)))
        .collect();
        expected.sort();
        assert_eq!(bps, expected);
    }

    #[test]
    fn toy_m3_stable_and_swap_unstable() {
        let inst = toy();
        let m3 = pairs(&inst, &[(0, 2), (1, 3), (2, 0), (3, 1)]);
        assert!(verify_weakly_stable(&inst, &m3).unwrap());
        let swapped = pairs(&inst, &[(0, 1), (1, 0)]);
        assert!(!verify_weakly_stable(&inst, &swapped).unwrap());
        assert!(all_blocking_pairs(&inst, &swapped, RankBasis::Original)
            .unwrap()
            .contains(&(inst.u(0), inst.w(0))));
    }

    #[test]
    fn malformed_pairs_are_errors() {
        let inst = toy();
        assert!(verify_pairs(&inst, &[(inst.u(2), inst.w(3))]).is_err());
        assert!(verify_pairs(&inst, &[(inst.u(0), inst.w(0)), (inst.u(1), inst.w(0))]).is_err());
    }

    #[test]
    fn toy_maximum_is_perfect() {
        let inst = toy();
        let r = max_weakly_stable(&inst).unwrap();
        assert_eq!(r.max_stable_size, 4);
        assert_eq!(
            r.optimal_matchings,
            vec![pairs(&inst, &[(0, 2), (1, 3), (2, 0), (3, 1)])]
        );
        assert!(r.total_weakly_stable >= 2);
        for m in &r.optimal_matchings {
            assert!(verify_weakly_stable(&inst, m).unwrap());
        }
    }

    #[test]
    fn trivial_maxima() {
        let empty = Instance::new(InstanceSpec::smti(vec![vec![]; 3], vec![vec![]; 3])).unwrap();
        let r = max_weakly_stable(&empty).unwrap();
        assert_eq!((r.max_stable_size, r.total_weakly_stable), (0, 1));

        let single =
            Instance::new(InstanceSpec::smti(vec![vec![vec![0]]], vec![vec![vec![0]]])).unwrap();
        assert_eq!(max_weakly_stable(&single).unwrap().max_stable_size, 1);
    }

    #[test]
    fn hrt_capacity_respected() {
        // residents r1, r2, r3 all tied at h1 (capacity 2)
        let inst = Instance::new(InstanceSpec::hrt(
            vec![vec![vec![0]]; 3],
            vec![vec![vec![0, 1, 2]]],
            vec![2],
        ))
        .unwrap();
        let r = max_weakly_stable(&inst).unwrap();
        assert_eq!(r.max_stable_size, 2);
        assert_eq!(r.optimal_matchings.len(), 3);
    }

    #[test]
    fn guards_refuse_large_instances() {
        let big = Instance::new(InstanceSpec::smti(vec![vec![]; 9], vec![vec![]; 9])).unwrap();
        assert!(matches!(
            max_weakly_stable(&big),
            Err(OracleError::TooLarge { .. })
        ));
        let huge =
            Instance::new(InstanceSpec::smti(vec![vec![]; 1001], vec![vec![]; 1000])).unwrap();
        assert!(matches!(
            all_blocking_pairs(&huge, &Matching::empty(&huge), RankBasis::Original),
            Err(OracleError::TooLarge { .. })
        ));
    }
}
