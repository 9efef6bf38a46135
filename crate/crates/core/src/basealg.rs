//! Base algorithms: produce a matching that is stable under a complete
//! tie-breaking strategy.

use std::collections::VecDeque;

use crate::error::SolveError;
use crate::model::{sex_equality_cost, Instance, Kind, Matching, Ranking, Side};
use crate::strategy::TieBreakingStrategy;

/// Result of a base run. `proposals` counts deferred-acceptance proposals
/// and serves as the work measure for the default stabilization budget.
#[derive(Debug, Clone)]
pub struct BaseOutcome {
    pub matching: Matching,
    pub proposals: u64,
}

/// Produces a matching with no blocking pairs under the strategy's strict
/// ranks.
pub trait BaseAlgorithm: Send + Sync {
    fn name(&self) -> &'static str;

    fn run(
        &self,
        inst: &Instance,
        strategy: &TieBreakingStrategy,
    ) -> Result<BaseOutcome, SolveError>;
}

/// Deferred acceptance extended to quotas on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaleShapley {
    pub proposing: Side,
}

impl Default for GaleShapley {
    fn default() -> Self {
        GaleShapley { proposing: Side::U }
    }
}

impl BaseAlgorithm for GaleShapley {
    fn name(&self) -> &'static str {
        match self.proposing {
            Side::U => "gs-u",
            Side::W => "gs-w",
        }
    }

    fn run(
        &self,
        inst: &Instance,
        strategy: &TieBreakingStrategy,
    ) -> Result<BaseOutcome, SolveError> {
        Ok(deferred_acceptance(inst, strategy, self.proposing))
    }
}

/// Runs deferred acceptance in both directions and keeps the result with the
/// lower sex equality cost (the `U`-proposing result on ties). SMTI only.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BalancedBase;

impl BaseAlgorithm for BalancedBase {
    fn name(&self) -> &'static str {
        "balanced"
    }

    fn run(
        &self,
        inst: &Instance,
        strategy: &TieBreakingStrategy,
    ) -> Result<BaseOutcome, SolveError> {
        if inst.kind() != Kind::Smti {
            return Err(SolveError::EquityRequiresSmti);
        }
        let by_u = deferred_acceptance(inst, strategy, Side::U);
        let by_w = deferred_acceptance(inst, strategy, Side::W);
        let proposals = by_u.proposals + by_w.proposals;
        let cost_u = sex_equality_cost(inst, &by_u.matching)?;
        let cost_w = sex_equality_cost(inst, &by_w.matching)?;
        let matching = if cost_w < cost_u {
            by_w.matching
        } else {
            by_u.matching
        };
        Ok(BaseOutcome {
            matching,
            proposals,
        })
    }
}

/// Proposing-side-optimal stable matching under `strategy`.
pub fn gale_shapley(inst: &Instance, strategy: &TieBreakingStrategy, proposing: Side) -> Matching {
    deferred_acceptance(inst, strategy, proposing).matching
}

/// See [`BalancedBase`].
pub fn balanced_base(
    inst: &Instance,
    strategy: &TieBreakingStrategy,
) -> Result<Matching, SolveError> {
    BalancedBase.run(inst, strategy).map(|o| o.matching)
}

fn deferred_acceptance(
    inst: &Instance,
    strategy: &TieBreakingStrategy,
    proposing: Side,
) -> BaseOutcome {
    let mut m = Matching::empty(inst);
    let mut next = vec![0usize; inst.agent_count()];
    let mut queued = vec![false; inst.agent_count()];
    let mut queue: VecDeque<_> = inst
        .side_agents(proposing)
        .filter(|&p| !inst.list(p).is_empty())
        .collect();
    for &p in &queue {
        queued[p.index()] = true;
    }
    let mut proposals = 0u64;

    while let Some(p) = queue.pop_front() {
        queued[p.index()] = false;
        let list = inst.list(p);
        while m.is_free(inst, p) && next[p.index()] < list.len() {
            let slot = strategy.slot_at(p, next[p.index()]);
            next[p.index()] += 1;
            proposals += 1;
            let r = list.entries()[slot as usize];
            if m.is_free(inst, r) {
                m.connect(p, r);
                continue;
            }
            let worst = m
                .worst_partner(inst, strategy, r)
                .expect("full receiver has a partner");
            let pos = |x| {
                let s = inst.slot(r, x).expect("mutual acceptability");
                strategy.position(inst, r, s)
            };
            if pos(p) < pos(worst) {
                m.disconnect(r, worst);
                m.connect(p, r);
                if !queued[worst.index()] {
                    queued[worst.index()] = true;
                    queue.push_back(worst);
                }
            }
        }
    }
    BaseOutcome {
        matching: m,
        proposals,
    }
}
