//! Tie-breaking strategies: per-agent strict orders within tie groups.
//!
//! Each agent's strict list is stored behind an `Arc`, so cloning a strategy
//! (done whenever the search records a new incumbent) copies one pointer per
//! agent, and a refinement only reallocates the lists it touches.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::ModelError;
use crate::model::{Agent, Instance, Ranking};

#[derive(Debug, Clone, PartialEq, Eq)]
struct StrictList {
    // slots of L_v in strict order
    order: Vec<u32>,
    // zero-based strict rank of each slot
    rank: Vec<u32>,
}

impl StrictList {
    fn identity(len: usize) -> StrictList {
        let order: Vec<u32> = (0..len as u32).collect();
        StrictList {
            rank: order.clone(),
            order,
        }
    }

    fn reindex(&mut self, range: std::ops::Range<usize>) {
        for pos in range {
            self.rank[self.order[pos] as usize] = pos as u32;
        }
    }
}

/// A complete tie-breaking of an instance, inducing strict ranks `r*`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TieBreakingStrategy {
    lists: Vec<Arc<StrictList>>,
}

impl TieBreakingStrategy {
    /// Breaks every tie by original listing order.
    pub fn identity(inst: &Instance) -> TieBreakingStrategy {
        TieBreakingStrategy {
            lists: inst
                .agents()
                .map(|a| Arc::new(StrictList::identity(inst.list(a).len())))
                .collect(),
        }
    }

    /// Breaks every tie by an independent uniform shuffle.
    pub fn random<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> TieBreakingStrategy {
        let mut s = TieBreakingStrategy::identity(inst);
        for a in inst.agents() {
            s.shuffle_ties(inst, a, rng);
        }
        s
    }

    /// Builds a strategy from explicit strict lists (each a permutation of
    /// `L_v` that keeps tie groups in rank order). Agents not listed in
    /// `overrides` use the identity order.
    pub fn from_orders(
        inst: &Instance,
        overrides: &[(Agent, Vec<Agent>)],
    ) -> Result<TieBreakingStrategy, ModelError> {
        let mut s = TieBreakingStrategy::identity(inst);
        for (v, order) in overrides {
            let list = inst.list(*v);
            if order.len() != list.len() {
                return Err(ModelError::InvalidStrategy(format!(
                    "{}: expected {} entries, got {}",
                    inst.agent_ref(*v),
                    list.len(),
                    order.len()
                )));
            }
            let mut strict = StrictList::identity(list.len());
            let mut seen = vec![false; list.len()];
            let mut last_group = 0;
            for (pos, &x) in order.iter().enumerate() {
                let slot = inst.slot(*v, x).ok_or_else(|| {
                    ModelError::InvalidStrategy(format!(
                        "{} does not list {}",
                        inst.agent_ref(*v),
                        inst.agent_ref(x)
                    ))
                })?;
                let group = list.group_of_slot(slot);
                if seen[slot as usize] || group < last_group {
                    return Err(ModelError::InvalidStrategy(format!(
                        "{}: order is not a tie-respecting permutation",
                        inst.agent_ref(*v)
                    )));
                }
                seen[slot as usize] = true;
                last_group = group;
                strict.order[pos] = slot;
            }
            strict.reindex(0..list.len());
            s.lists[v.index()] = Arc::new(strict);
        }
        Ok(s)
    }

    /// Strict rank `r*_v(x)`, 1-based.
    pub fn strict_rank(&self, inst: &Instance, v: Agent, x: Agent) -> Option<u32> {
        inst.slot(v, x)
            .map(|s| self.lists[v.index()].rank[s as usize] + 1)
    }

    /// `v`'s tie-free preference list, most preferred first.
    pub fn tie_free_list<'a>(
        &'a self,
        inst: &'a Instance,
        v: Agent,
    ) -> impl ExactSizeIterator<Item = Agent> + 'a {
        let entries = inst.list(v).entries();
        self.lists[v.index()]
            .order
            .iter()
            .map(move |&slot| entries[slot as usize])
    }

    #[inline]
    pub(crate) fn slot_at(&self, v: Agent, pos: usize) -> u32 {
        self.lists[v.index()].order[pos]
    }

    /// Moves `f` to the front of its tie group in `x`'s strict list, keeping
    /// the relative order of every other entry.
    pub fn promote(&mut self, inst: &Instance, x: Agent, f: Agent) -> Result<(), ModelError> {
        let slot = inst.slot(x, f).ok_or_else(|| {
            ModelError::InvalidStrategy(format!(
                "{} does not list {}",
                inst.agent_ref(x),
                inst.agent_ref(f)
            ))
        })?;
        let list = inst.list(x);
        let start = list.group_range(list.group_of_slot(slot)).start;
        let current = self.lists[x.index()].rank[slot as usize] as usize;
        if current == start {
            return Ok(());
        }
        let strict = Arc::make_mut(&mut self.lists[x.index()]);
        strict.order[start..=current].rotate_right(1);
        strict.reindex(start..current + 1);
        Ok(())
    }

    /// Re-breaks every tie in `v`'s list uniformly at random.
    pub fn shuffle_ties<R: Rng + ?Sized>(&mut self, inst: &Instance, v: Agent, rng: &mut R) {
        let list = inst.list(v);
        if list.group_count() == list.len() {
            return;
        }
        let strict = Arc::make_mut(&mut self.lists[v.index()]);
        for g in 0..list.group_count() as u32 {
            let range = list.group_range(g);
            if range.len() > 1 {
                strict.order[range.clone()].shuffle(rng);
                strict.reindex(range);
            }
        }
    }
}

impl Ranking for TieBreakingStrategy {
    #[inline]
    fn position(&self, _inst: &Instance, v: Agent, slot: u32) -> u32 {
        self.lists[v.index()].rank[slot as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::toy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assert_order_preserving(inst: &Instance, s: &TieBreakingStrategy) {
        for v in inst.agents() {
            let list = inst.list(v);
            let mut ranks: Vec<u32> = list
                .entries()
                .iter()
                .map(|&x| s.strict_rank(inst, v, x).unwrap())
                .collect();
            for (i, &x) in list.entries().iter().enumerate() {
                for (j, &y) in list.entries().iter().enumerate() {
                    if inst.rank(v, x) < inst.rank(v, y) {
                        assert!(ranks[i] < ranks[j]);
                    }
                }
            }
            ranks.sort_unstable();
            assert_eq!(ranks, (1..=list.len() as u32).collect::<Vec<_>>());
        }
    }

    #[test]
    fn random_strategies_preserve_order() {
        let inst = toy();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let s = TieBreakingStrategy::random(&inst, &mut rng);
            assert_order_preserving(&inst, &s);
        }
    }

    #[test]
    fn promote_moves_to_front_of_tie() {
        let inst = toy();
        let (m2, m4, w2) = (inst.u(1), inst.u(3), inst.w(1));
        let mut s = TieBreakingStrategy::identity(&inst);
        assert!(s.strict_rank(&inst, w2, m2) < s.strict_rank(&inst, w2, m4));
        s.promote(&inst, w2, m4).unwrap();
        assert!(s.strict_rank(&inst, w2, m4) < s.strict_rank(&inst, w2, m2));
        assert_eq!(s.strict_rank(&inst, w2, inst.u(0)), Some(3));
        assert_order_preserving(&inst, &s);

        let before = s.clone();
        s.promote(&inst, w2, m4).unwrap();
        assert_eq!(s, before);

        assert!(s.promote(&inst, w2, inst.u(2)).is_err());
    }

    #[test]
    fn from_orders_rejects_tie_violations() {
        let inst = toy();
        let (m1, w1, w2, w3) = (inst.u(0), inst.w(0), inst.w(1), inst.w(2));
        assert!(TieBreakingStrategy::from_orders(&inst, &[(m1, vec![w3, w1, w2])]).is_ok());
        assert!(TieBreakingStrategy::from_orders(&inst, &[(m1, vec![w2, w1, w3])]).is_err());
        assert!(TieBreakingStrategy::from_orders(&inst, &[(m1, vec![w1, w3])]).is_err());
    }
}
