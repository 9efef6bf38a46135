//! Tie-breaking based local search.
//!
//! The search keeps a complete tie-breaking strategy together with a matching
//! that is stable under it. Each iteration either promotes one free agent
//! inside a tie of a candidate's strict list (deliberately creating a
//! blocking pair) or, with a small probability or when no such promotion
//! exists, re-shuffles the ties of a few random agents. The matching is then
//! re-stabilized by removing blocking pairs, starting from the agents whose
//! lists changed, and falls back to the base algorithm when that exceeds its
//! budget. Matchings are compared by an exact integer evaluation score whose
//! primary key is matching size.

use std::time::{Duration, Instant};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basealg::{BalancedBase, BaseAlgorithm, GaleShapley};
use crate::error::{ModelError, SolveError};
use crate::model::{
    blocks, favored_side, Agent, Favored, Instance, Kind, Matching, Ranking, RunReport, Side,
};
use crate::strategy::TieBreakingStrategy;

/// Fixed-point scale of [`EvaluationScore`] and [`SizeEstimate`].
pub const SCORE_SCALE: i128 = 1000;

/// Budget for one blocking-pair removal pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threshold {
    /// Step budget equal to the number of proposals made by the initial base
    /// run. Deterministic for a given seed.
    Auto,
    /// Wall-clock budget equal to the duration of the initial base run.
    MeasuredWall,
    /// Fixed number of examined candidates.
    Steps(u64),
    /// Fixed wall-clock budget.
    Wall(Duration),
    Unlimited,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub max_iters: u64,
    /// Probability of a disruption even when adjustments are available.
    pub disruption_prob: f64,
    /// Ratio `c` used to estimate the minimum matching size from the initial
    /// matching.
    pub estimate_ratio: f64,
    /// Agents re-shuffled per disruption on the `U` and `W` side.
    pub k_u: usize,
    pub k_w: usize,
    pub threshold: Threshold,
    pub equity_mode: bool,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            max_iters: 3000,
            disruption_prob: 0.05,
            estimate_ratio: 0.9,
            k_u: 1,
            k_w: 1,
            threshold: Threshold::Auto,
            equity_mode: false,
            seed: 0,
        }
    }
}

impl SolverParams {
    /// Defaults with disruption sizes chosen by instance size class: large
    /// instances (1000 or more `U` agents) use `k_u = 5` and `k_w = 5` for
    /// SMTI, `k_w = 1` for HRT.
    pub fn for_instance(inst: &Instance) -> SolverParams {
        let (k_u, k_w) = disruption_sizes(inst.kind(), inst.n_u());
        SolverParams {
            k_u,
            k_w,
            ..SolverParams::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        for (name, p) in [
            ("disruption probability", self.disruption_prob),
            ("estimate ratio", self.estimate_ratio),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SolveError::InvalidParam(format!(
                    "{name} must be in [0, 1], got {p}"
                )));
            }
        }
        Ok(())
    }
}

/// `(k_u, k_w)` for an instance kind and size.
pub fn disruption_sizes(kind: Kind, n: usize) -> (usize, usize) {
    match (kind, n >= 1000) {
        (_, false) => (1, 1),
        (Kind::Smti, true) => (5, 5),
        (Kind::Hrt, true) => (5, 1),
    }
}

/// Estimated minimum matching size `e_M`, held in thousandths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SizeEstimate {
    milli: u64,
}

impl SizeEstimate {
    pub fn from_milli(milli: u64) -> Self {
        SizeEstimate { milli }
    }

    /// `c · size`, with `c` rounded to three decimals.
    pub fn from_ratio(ratio: f64, size: usize) -> Self {
        let c_milli = (ratio * SCORE_SCALE as f64).round() as u64;
        SizeEstimate {
            milli: c_milli * size as u64,
        }
    }

    pub fn milli(self) -> u64 {
        self.milli
    }
}

/// Exact evaluation score, scaled by [`SCORE_SCALE`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EvaluationScore(i128);

impl EvaluationScore {
    pub fn scaled(self) -> i128 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCORE_SCALE as f64
    }
}

/// `E(M) = size(M)·bigM + Σ_{v free} |L_v|·(b(v) − |M(v)|)` with
/// `bigM = (max_U |L_u| + max_W |L_w|)·(N − e_M)`.
#[derive(Debug, Clone, Copy)]
pub struct Evaluator {
    big_m: i128,
}

impl Evaluator {
    pub fn new(inst: &Instance, estimate: SizeEstimate) -> Evaluator {
        let longest = (inst.max_list_len(Side::U) + inst.max_list_len(Side::W)) as i128;
        // N counts the larger side's capacity so that bigM also dominates
        // the free positions of instances whose side totals differ.
        let total = inst.total_quota(Side::U).max(inst.total_quota(Side::W)) as i128;
        let headroom = (total * SCORE_SCALE - estimate.milli as i128).max(0);
        Evaluator {
            big_m: longest * headroom,
        }
    }

    /// `bigM`, scaled.
    pub fn big_m(&self) -> i128 {
        self.big_m
    }

    pub fn score(&self, inst: &Instance, m: &Matching) -> EvaluationScore {
        let free_weight: i128 = inst
            .agents()
            .map(|v| {
                let open = inst.quota(v) as usize - m.degree(v);
                (inst.list(v).len() * open) as i128
            })
            .sum();
        EvaluationScore(m.size() as i128 * self.big_m + free_weight * SCORE_SCALE)
    }
}

pub fn evaluate(inst: &Instance, m: &Matching, estimate: SizeEstimate) -> EvaluationScore {
    Evaluator::new(inst, estimate).score(inst, m)
}

/// Promote `free` to the front of its tie in `candidate`'s strict list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Adjustment {
    pub free: Agent,
    pub candidate: Agent,
}

/// All adjustments `(f, x)`: `f` free, `x` an unmatched candidate of `f`,
/// and `x` matched to someone tied with `f` in `x`'s list. Grouped by free
/// agent in index order.
pub fn candidate_adjustments(inst: &Instance, m: &Matching) -> Vec<Adjustment> {
    let mut out = Vec::new();
    for f in m.free_agents(inst) {
        for x in m.unmatched_candidates(inst, f) {
            let list = inst.list(x);
            let tie = list.group_of_slot(inst.slot(x, f).expect("mutual acceptability"));
            let shares_tie = m
                .partners(x)
                .iter()
                .any(|&p| list.group_of_slot(inst.slot(x, p).expect("partner acceptable")) == tie);
            if shares_tie {
                out.push(Adjustment {
                    free: f,
                    candidate: x,
                });
            }
        }
    }
    out
}

/// Balanced sample: for each free agent `f`, `min(b(f) − |M(f)|, |R_M(f)|)`
/// of its adjustments drawn uniformly without replacement.
pub fn obtain_adjustments<R: Rng + ?Sized>(
    inst: &Instance,
    m: &Matching,
    rng: &mut R,
) -> Vec<Adjustment> {
    let all = candidate_adjustments(inst, m);
    let mut out = Vec::with_capacity(all.len());
    for group in all.chunk_by(|a, b| a.free == b.free) {
        let f = group[0].free;
        let k = (inst.quota(f) as usize - m.degree(f)).min(group.len());
        if k == group.len() {
            out.extend_from_slice(group);
        } else {
            let mut picks = index::sample(rng, group.len(), k).into_vec();
            picks.sort_unstable();
            out.extend(picks.into_iter().map(|i| group[i]));
        }
    }
    out
}

pub fn apply_adjustment(
    strategy: &mut TieBreakingStrategy,
    inst: &Instance,
    adjustment: Adjustment,
) -> Result<(), ModelError> {
    strategy.promote(inst, adjustment.candidate, adjustment.free)
}

/// Keeps only adjustments whose free agent is on the side the matching
/// currently favors; returns the input unchanged when balanced or when the
/// restriction would leave nothing.
pub fn equity_filter(
    inst: &Instance,
    m: &Matching,
    adjustments: Vec<Adjustment>,
) -> Result<Vec<Adjustment>, ModelError> {
    let side = match favored_side(inst, m)? {
        Favored::U => Side::U,
        Favored::W => Side::W,
        Favored::Balanced => return Ok(adjustments),
    };
    let kept: Vec<_> = adjustments
        .iter()
        .copied()
        .filter(|a| inst.side(a.free) == side)
        .collect();
    Ok(if kept.is_empty() { adjustments } else { kept })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefinementKind {
    Adjusted(Adjustment),
    Disrupted,
}

/// Outcome of one refinement: what happened and the agents whose lists
/// must be re-examined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refinement {
    pub kind: RefinementKind,
    pub altered: Vec<Agent>,
}

/// Refines `strategy` in place: a random balanced adjustment, or a
/// disruption when none exists or with probability `disruption_prob`.
pub fn refine_strategy<R: Rng + ?Sized>(
    inst: &Instance,
    m: &Matching,
    strategy: &mut TieBreakingStrategy,
    params: &SolverParams,
    rng: &mut R,
) -> Result<Refinement, ModelError> {
    let mut pool = obtain_adjustments(inst, m, rng);
    if params.equity_mode && !pool.is_empty() {
        pool = equity_filter(inst, m, pool)?;
    }
    if pool.is_empty() || rng.random_bool(params.disruption_prob) {
        let mut altered = Vec::with_capacity(params.k_u + params.k_w);
        for (side, k, n) in [
            (Side::U, params.k_u, inst.n_u()),
            (Side::W, params.k_w, inst.n_w()),
        ] {
            let offset = match side {
                Side::U => 0,
                Side::W => inst.n_u(),
            };
            for i in index::sample(rng, n, k.min(n)) {
                let v = Agent((offset + i) as u32);
                strategy.shuffle_ties(inst, v, rng);
                altered.push(v);
            }
        }
        return Ok(Refinement {
            kind: RefinementKind::Disrupted,
            altered,
        });
    }
    let adjustment = pool[rng.random_range(0..pool.len())];
    apply_adjustment(strategy, inst, adjustment)?;
    Ok(Refinement {
        kind: RefinementKind::Adjusted(adjustment),
        altered: vec![adjustment.free],
    })
}

/// Agents released when a blocking pair `(u, w)` was removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Removal {
    /// The former worst partner of `u`, if `u` was full.
    pub released_by_u: Option<Agent>,
    /// The former worst partner of `w`, if `w` was full.
    pub released_by_w: Option<Agent>,
}

/// Removes blocking pair `(u, w)`: each full endpoint drops its worst
/// partner, then `u` and `w` are connected.
pub fn remove_blocking_pair<R: Ranking>(
    inst: &Instance,
    ranking: &R,
    m: &mut Matching,
    u: Agent,
    w: Agent,
) -> Result<Removal, ModelError> {
    if !inst.contains(u) || !inst.contains(w) || inst.side(u) == inst.side(w) {
        return Err(ModelError::MalformedMatching(
            "blocking pair needs one agent per side".into(),
        ));
    }
    if !blocks(inst, ranking, m, u, w) {
        return Err(ModelError::MalformedMatching(format!(
            "({}, {}) is not a blocking pair",
            inst.agent_ref(u),
            inst.agent_ref(w)
        )));
    }
    Ok(remove_unchecked(inst, ranking, m, u, w))
}

fn remove_unchecked<R: Ranking>(
    inst: &Instance,
    ranking: &R,
    m: &mut Matching,
    u: Agent,
    w: Agent,
) -> Removal {
    let release = |v: Agent, m: &mut Matching| {
        if m.is_full(inst, v) {
            let worst = m
                .worst_partner(inst, ranking, v)
                .expect("full agent has a partner");
            m.disconnect(v, worst);
            Some(worst)
        } else {
            None
        }
    };
    let released_by_u = release(u, m);
    let released_by_w = release(w, m);
    m.connect(u, w);
    Removal {
        released_by_u,
        released_by_w,
    }
}

/// The removal pass ran out of budget with agents still pending.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Timeout {
    pub steps: u64,
    pub pending: usize,
}

/// Resource limit for a removal pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Steps(u64),
    Wall(Duration),
    Unlimited,
}

struct Worklist {
    items: Vec<Agent>,
    member: Vec<bool>,
}

impl Worklist {
    fn new(n: usize) -> Self {
        Worklist {
            items: Vec::new(),
            member: vec![false; n],
        }
    }

    fn insert(&mut self, a: Agent) {
        if !self.member[a.index()] {
            self.member[a.index()] = true;
            self.items.push(a);
        }
    }

    fn pop_random<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<Agent> {
        if self.items.is_empty() {
            return None;
        }
        let a = self
            .items
            .swap_remove(rng.random_range(0..self.items.len()));
        self.member[a.index()] = false;
        Some(a)
    }
}

/// Stabilizes `m` under `strategy`, examining only agents reachable from
/// `altered`. Returns the number of examined candidates, or [`Timeout`] if
/// the budget ran out first (`m` is then left partially repaired).
pub fn remove_blocking_pairs<R: Rng + ?Sized>(
    inst: &Instance,
    strategy: &TieBreakingStrategy,
    m: &mut Matching,
    altered: &[Agent],
    budget: Budget,
    rng: &mut R,
) -> Result<u64, Timeout> {
    let mut pending = Worklist::new(inst.agent_count());
    for &a in altered {
        pending.insert(a);
    }
    let started = Instant::now();
    let within = |steps: u64| match budget {
        Budget::Steps(limit) => steps < limit,
        Budget::Wall(limit) => started.elapsed() <= limit,
        Budget::Unlimited => true,
    };
    let strict_pos =
        |v: Agent, x: Agent| strategy.position(inst, v, inst.slot(v, x).expect("acceptable"));

    let mut steps = 0u64;
    while !pending.items.is_empty() && within(steps) {
        let v = pending.pop_random(rng).expect("non-empty");
        let entries = inst.list(v).entries();
        let mut worst = m.worst_partner(inst, strategy, v);
        for pos in 0..entries.len() {
            let y = entries[strategy.slot_at(v, pos) as usize];
            steps += 1;
            if m.contains(v, y) {
                continue;
            }
            let v_full = m.is_full(inst, v);
            if v_full && pos as u32 > strict_pos(v, worst.expect("full agent has a partner")) {
                break;
            }
            if !blocks(inst, strategy, m, v, y) {
                continue;
            }
            if let Some(w) = worst.filter(|&w| v_full && m.is_full(inst, w)) {
                pending.insert(w);
            }
            if m.is_full(inst, y) {
                let z = m
                    .worst_partner(inst, strategy, y)
                    .expect("full agent has a partner");
                if m.is_full(inst, z) {
                    pending.insert(z);
                }
            }
            remove_unchecked(inst, strategy, m, v, y);
            worst = m.worst_partner(inst, strategy, v);
        }
    }
    if pending.items.is_empty() {
        Ok(steps)
    } else {
        Err(Timeout {
            steps,
            pending: pending.items.len(),
        })
    }
}

/// Counters describing one search run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub adjustments: u64,
    pub disruptions: u64,
    pub fallbacks: u64,
    pub accepted: u64,
    /// Proposals made by the initial base run.
    pub initial_base_proposals: u64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub matching: Matching,
    pub strategy: TieBreakingStrategy,
    pub report: RunReport,
    pub stats: SearchStats,
}

/// The base algorithm matching `params.equity_mode`: U-proposing deferred
/// acceptance, or [`BalancedBase`] for equity mode.
pub fn default_base(params: &SolverParams) -> Box<dyn BaseAlgorithm> {
    if params.equity_mode {
        Box::new(BalancedBase)
    } else {
        Box::new(GaleShapley::default())
    }
}

/// Runs the local search with the base algorithm implied by `params`.
pub fn run(inst: &Instance, params: &SolverParams) -> Result<Solution, SolveError> {
    solve(inst, params, default_base(params).as_ref())
}

/// Runs the local search from a random initial tie-breaking.
pub fn solve(
    inst: &Instance,
    params: &SolverParams,
    base: &dyn BaseAlgorithm,
) -> Result<Solution, SolveError> {
    params.validate()?;
    if params.equity_mode && inst.kind() != Kind::Smti {
        return Err(SolveError::EquityRequiresSmti);
    }
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut stats = SearchStats::default();

    let mut strategy = TieBreakingStrategy::random(inst, &mut rng);
    let base_started = Instant::now();
    let initial = base.run(inst, &strategy)?;
    let base_time = base_started.elapsed();
    stats.initial_base_proposals = initial.proposals;
    let budget = match params.threshold {
        Threshold::Auto => Budget::Steps(initial.proposals),
        Threshold::MeasuredWall => Budget::Wall(base_time),
        Threshold::Steps(n) => Budget::Steps(n),
        Threshold::Wall(d) => Budget::Wall(d),
        Threshold::Unlimited => Budget::Unlimited,
    };

    let mut current = initial.matching;
    let evaluator = Evaluator::new(
        inst,
        SizeEstimate::from_ratio(params.estimate_ratio, current.size()),
    );
    let perfect = inst.capacity_bound() as usize;
    let mut best_score = evaluator.score(inst, &current);
    let mut best_matching = current.clone();
    let mut best_strategy = strategy.clone();
    let mut iterations = 0;

    while iterations < params.max_iters && best_matching.size() < perfect {
        iterations += 1;
        let refinement = refine_strategy(inst, &current, &mut strategy, params, &mut rng)?;
        match refinement.kind {
            RefinementKind::Adjusted(_) => stats.adjustments += 1,
            RefinementKind::Disrupted => stats.disruptions += 1,
        }
        if remove_blocking_pairs(
            inst,
            &strategy,
            &mut current,
            &refinement.altered,
            budget,
            &mut rng,
        )
        .is_err()
        {
            stats.fallbacks += 1;
            current = base.run(inst, &strategy)?.matching;
        }
        let score = evaluator.score(inst, &current);
        if score >= best_score {
            stats.accepted += 1;
            best_score = score;
            best_matching.clone_from(&current);
            best_strategy.clone_from(&strategy);
        }
    }

    let report = RunReport::measure(
        inst,
        &best_matching,
        iterations,
        started.elapsed(),
        params.seed,
    );
    Ok(Solution {
        matching: best_matching,
        strategy: best_strategy,
        report,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basealg::gale_shapley;
    use crate::fixtures::toy;
    use crate::model::{is_blocking_pair, InstanceSpec};

    struct Toy {
        inst: Instance,
        m: [Agent; 4],
        w: [Agent; 4],
    }

    fn toy_agents() -> Toy {
        let inst = toy();
        let m = [inst.u(0), inst.u(1), inst.u(2), inst.u(3)];
        let w = [inst.w(0), inst.w(1), inst.w(2), inst.w(3)];
        Toy { inst, m, w }
    }

    fn pairs(t: &Toy, p: &[(usize, usize)]) -> Matching {
        let pairs: Vec<_> = p.iter().map(|&(i, j)| (t.m[i], t.w[j])).collect();
        Matching::from_pairs(&t.inst, &pairs).unwrap()
    }

    #[test]
    fn evaluate_toy_matchings() {
        let t = toy_agents();
        let e = SizeEstimate::from_ratio(0.9, 2);
        assert_eq!(e.milli(), 1800);
        let m1 = pairs(&t, &[(0, 0), (1, 1)]);
        let m3 = pairs(&t, &[(0, 2), (1, 3), (2, 0), (3, 1)]);
        assert_eq!(Evaluator::new(&t.inst, e).big_m(), 13_200);
        assert_eq!(evaluate(&t.inst, &m1, e).scaled(), 30_400);
        assert_eq!(evaluate(&t.inst, &m3, e).scaled(), 52_800);
    }

    #[test]
    fn evaluate_empty_instance() {
        let inst = Instance::new(InstanceSpec::smti(vec![], vec![])).unwrap();
        let m = Matching::empty(&inst);
        assert_eq!(evaluate(&inst, &m, SizeEstimate::from_milli(0)).scaled(), 0);
    }

    #[test]
    fn adjustments_on_toy() {
        let t = toy_agents();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m1 = pairs(&t, &[(0, 0), (1, 1)]);
        let adj = obtain_adjustments(&t.inst, &m1, &mut rng);
        assert_eq!(
            adj,
            vec![
                Adjustment {
                    free: t.m[3],
                    candidate: t.w[1]
                },
                Adjustment {
                    free: t.w[2],
                    candidate: t.m[0]
                },
            ]
        );
        let m2 = pairs(&t, &[(0, 0), (1, 3), (3, 1)]);
        assert_eq!(
            obtain_adjustments(&t.inst, &m2, &mut rng),
            vec![Adjustment {
                free: t.w[2],
                candidate: t.m[0]
            }]
        );
        let m3 = pairs(&t, &[(0, 2), (1, 3), (2, 0), (3, 1)]);
        assert!(obtain_adjustments(&t.inst, &m3, &mut rng).is_empty());
    }

    #[test]
    fn balanced_sampling_respects_open_positions() {
        // one hospital (capacity 1, full) tied over three residents; two
        // residents free, each with exactly one adjustment
        let inst = Instance::new(InstanceSpec::hrt(
            vec![vec![vec![0]], vec![vec![0]], vec![vec![0]]],
            vec![vec![vec![0, 1, 2]]],
            vec![1],
        ))
        .unwrap();
        let m = Matching::from_pairs(&inst, &[(inst.u(0), inst.w(0))]).unwrap();
        let all = candidate_adjustments(&inst, &m);
        assert_eq!(all.len(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(obtain_adjustments(&inst, &m, &mut rng), all);

        // h1 has capacity 2 and one open position, while both r2 and r3 are
        // held by hospitals tied with h1 in their lists
        let inst = Instance::new(InstanceSpec::hrt(
            vec![vec![vec![0]], vec![vec![0, 1]], vec![vec![0, 2]]],
            vec![
                vec![vec![0], vec![1], vec![2]],
                vec![vec![1]],
                vec![vec![2]],
            ],
            vec![2, 1, 1],
        ))
        .unwrap();
        let (r, h) = (|i| inst.u(i), |j| inst.w(j));
        let m = Matching::from_pairs(&inst, &[(r(0), h(0)), (r(1), h(1)), (r(2), h(2))]).unwrap();
        assert_eq!(
            candidate_adjustments(&inst, &m),
            vec![
                Adjustment {
                    free: h(0),
                    candidate: r(1)
                },
                Adjustment {
                    free: h(0),
                    candidate: r(2)
                },
            ]
        );
        let mut picked = [0; 2];
        for seed in 0..40 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sampled = obtain_adjustments(&inst, &m, &mut rng);
            assert_eq!(sampled.len(), 1);
            picked[if sampled[0].candidate == r(1) { 0 } else { 1 }] += 1;
        }
        assert!(picked[0] > 0 && picked[1] > 0);
    }

    #[test]
    fn apply_adjustment_walkthrough() {
        let t = toy_agents();
        let mut s = TieBreakingStrategy::identity(&t.inst);
        apply_adjustment(
            &mut s,
            &t.inst,
            Adjustment {
                free: t.m[3],
                candidate: t.w[1],
            },
        )
        .unwrap();
        assert!(s.strict_rank(&t.inst, t.w[1], t.m[3]) < s.strict_rank(&t.inst, t.w[1], t.m[1]));
        apply_adjustment(
            &mut s,
            &t.inst,
            Adjustment {
                free: t.w[2],
                candidate: t.m[0],
            },
        )
        .unwrap();
        assert!(s.strict_rank(&t.inst, t.m[0], t.w[2]) < s.strict_rank(&t.inst, t.m[0], t.w[0]));
        let before = s.clone();
        apply_adjustment(
            &mut s,
            &t.inst,
            Adjustment {
                free: t.w[2],
                candidate: t.m[0],
            },
        )
        .unwrap();
        assert_eq!(s, before);
        assert!(apply_adjustment(
            &mut s,
            &t.inst,
            Adjustment {
                free: t.m[2],
                candidate: t.w[1]
            }
        )
        .is_err());
    }

    #[test]
    fn refine_picks_adjustment_and_reports_free_agent() {
        let t = toy_agents();
        let m1 = pairs(&t, &[(0, 0), (1, 1)]);
        let params = SolverParams {
            disruption_prob: 0.0,
            ..SolverParams::default()
        };
        let mut seen_m4 = false;
        for seed in 0..32 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = TieBreakingStrategy::identity(&t.inst);
            let r = refine_strategy(&t.inst, &m1, &mut s, &params, &mut rng).unwrap();
            let RefinementKind::Adjusted(a) = r.kind else {
                panic!("p_d = 0 with adjustments available must adjust");
            };
            assert_eq!(r.altered, vec![a.free]);
            if a.free == t.m[3] {
                seen_m4 = true;
                assert_eq!(a.candidate, t.w[1]);
                assert!(
                    s.strict_rank(&t.inst, t.w[1], t.m[3]) < s.strict_rank(&t.inst, t.w[1], t.m[1])
                );
            }
        }
        assert!(seen_m4);
    }

    #[test]
    fn refine_disrupts_when_no_adjustments() {
        let t = toy_agents();
        let m3 = pairs(&t, &[(0, 2), (1, 3), (2, 0), (3, 1)]);
        let params = SolverParams {
            disruption_prob: 0.0,
            k_u: 2,
            k_w: 1,
            ..SolverParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = TieBreakingStrategy::identity(&t.inst);
        let r = refine_strategy(&t.inst, &m3, &mut s, &params, &mut rng).unwrap();
        assert_eq!(r.kind, RefinementKind::Disrupted);
        assert_eq!(r.altered.len(), 3);
        assert_eq!(
            r.altered
                .iter()
                .filter(|&&a| t.inst.side(a) == Side::U)
                .count(),
            2
        );

        let none = SolverParams {
            k_u: 0,
            k_w: 0,
            ..params
        };
        let mut s = TieBreakingStrategy::identity(&t.inst);
        let r = refine_strategy(&t.inst, &m3, &mut s, &none, &mut rng).unwrap();
        assert_eq!(r.kind, RefinementKind::Disrupted);
        assert!(r.altered.is_empty());
        assert_eq!(s, TieBreakingStrategy::identity(&t.inst));
    }

    #[test]
    fn equity_filter_examples() {
        let t = toy_agents();
        let m1 = pairs(&t, &[(0, 0), (1, 1)]);
        let pool = vec![
            Adjustment {
                free: t.m[3],
                candidate: t.w[1],
            },
            Adjustment {
                free: t.w[2],
                candidate: t.m[0],
            },
        ];
        assert_eq!(
            equity_filter(&t.inst, &m1, pool.clone()).unwrap(),
            vec![Adjustment {
                free: t.w[2],
                candidate: t.m[0]
            }]
        );
        // M1 favors W; with no W adjustments the restriction is lifted
        let only_u = vec![pool[0]];
        assert_eq!(equity_filter(&t.inst, &m1, only_u.clone()).unwrap(), only_u);
        // empty matching is balanced
        let empty = Matching::empty(&t.inst);
        assert_eq!(equity_filter(&t.inst, &empty, pool.clone()).unwrap(), pool);
    }

    #[test]
    fn removal_walkthrough() {
        let t = toy_agents();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = TieBreakingStrategy::identity(&t.inst);
        let mut m = gale_shapley(&t.inst, &s, Side::U);
        assert_eq!(m, pairs(&t, &[(0, 0), (1, 1)]));

        apply_adjustment(
            &mut s,
            &t.inst,
            Adjustment {
                free: t.m[3],
                candidate: t.w[1],
            },
        )
        .unwrap();
        assert!(is_blocking_pair(&t.inst, &s, &m, t.m[3], t.w[1]).unwrap());
        remove_blocking_pairs(&t.inst, &s, &mut m, &[t.m[3]], Budget::Unlimited, &mut rng).unwrap();
        assert_eq!(m, pairs(&t, &[(0, 0), (1, 3), (3, 1)]));

        apply_adjustment(
            &mut s,
            &t.inst,
            Adjustment {
                free: t.w[2],
                candidate: t.m[0],
            },
        )
        .unwrap();
        remove_blocking_pairs(&t.inst, &s, &mut m, &[t.w[2]], Budget::Unlimited, &mut rng).unwrap();
        assert_eq!(m, pairs(&t, &[(0, 2), (1, 3), (2, 0), (3, 1)]));

        let before = m.clone();
        assert_eq!(
            remove_blocking_pairs(&t.inst, &s, &mut m, &[], Budget::Unlimited, &mut rng),
            Ok(0)
        );
        assert_eq!(m, before);
    }

    #[test]
    fn removal_times_out_on_zero_budget() {
        let t = toy_agents();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = TieBreakingStrategy::identity(&t.inst);
        let mut m = gale_shapley(&t.inst, &s, Side::U);
        apply_adjustment(
            &mut s,
            &t.inst,
            Adjustment {
                free: t.m[3],
                candidate: t.w[1],
            },
        )
        .unwrap();
        let r = remove_blocking_pairs(&t.inst, &s, &mut m, &[t.m[3]], Budget::Steps(1), &mut rng);
        assert!(matches!(r, Err(Timeout { .. })));
    }

    #[test]
    fn remove_blocking_pair_reports_released_agents() {
        let t = toy_agents();
        let s =
            TieBreakingStrategy::from_orders(&t.inst, &[(t.w[1], vec![t.m[3], t.m[1], t.m[0]])])
                .unwrap();
        let mut m = pairs(&t, &[(0, 0), (1, 1)]);
        let r = remove_blocking_pair(&t.inst, &s, &mut m, t.m[3], t.w[1]).unwrap();
        assert_eq!(
            r,
            Removal {
                released_by_u: None,
                released_by_w: Some(t.m[1])
            }
        );
        assert!(remove_blocking_pair(&t.inst, &s, &mut m, t.m[0], t.w[0]).is_err());
    }

    #[test]
    fn solve_toy_is_perfect() {
        let inst = toy();
        for seed in 0..20 {
            for equity_mode in [false, true] {
                let params = SolverParams {
                    max_iters: 10,
                    seed,
                    equity_mode,
                    ..SolverParams::default()
                };
                let sol = run(&inst, &params).unwrap();
                assert_eq!(sol.matching.size(), 4, "seed {seed}");
            }
        }
    }

    #[test]
    fn solve_zero_iterations_returns_base_matching() {
        let inst = toy();
        let params = SolverParams {
            max_iters: 0,
            seed: 11,
            ..SolverParams::default()
        };
        let sol = run(&inst, &params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = TieBreakingStrategy::random(&inst, &mut rng);
        assert_eq!(sol.matching, gale_shapley(&inst, &s, Side::U));
        assert_eq!(sol.strategy, s);
        assert_eq!(sol.report.iterations, 0);
    }

    #[test]
    fn solve_empty_lists() {
        let inst = Instance::new(InstanceSpec::smti(vec![vec![]; 3], vec![vec![]; 3])).unwrap();
        let sol = run(
            &inst,
            &SolverParams {
                max_iters: 5,
                ..SolverParams::default()
            },
        )
        .unwrap();
        assert_eq!(sol.matching.size(), 0);
    }

    #[test]
    fn solve_rejects_bad_params() {
        let inst = toy();
        let bad = SolverParams {
            disruption_prob: 1.5,
            ..SolverParams::default()
        };
        assert!(matches!(run(&inst, &bad), Err(SolveError::InvalidParam(_))));
        let hrt = Instance::new(InstanceSpec::hrt(
            vec![vec![vec![0]]],
            vec![vec![vec![0]]],
            vec![1],
        ))
        .unwrap();
        let equity = SolverParams {
            equity_mode: true,
            ..SolverParams::default()
        };
        assert!(matches!(
            run(&hrt, &equity),
            Err(SolveError::EquityRequiresSmti)
        ));
    }

    #[test]
    fn size_classes() {
        assert_eq!(disruption_sizes(Kind::Smti, 100), (1, 1));
        assert_eq!(disruption_sizes(Kind::Smti, 1000), (5, 5));
        assert_eq!(disruption_sizes(Kind::Hrt, 1000), (5, 1));
    }
}
