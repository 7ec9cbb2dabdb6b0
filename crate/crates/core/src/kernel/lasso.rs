//! Ultimately periodic runs.

use super::state::GlobalState;

/// An infinite run `prefix · cycle^ω` in canonical form: the cycle has minimal
/// period and the prefix is as short as possible. Two canonical lassos are equal
/// iff they denote the same infinite run.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LassoRun {
    prefix: Vec<GlobalState>,
    cycle: Vec<GlobalState>,
}

impl LassoRun {
    /// Canonicalizes `prefix · cycle^ω`. Panics on an empty cycle.
    pub fn new(prefix: Vec<GlobalState>, cycle: Vec<GlobalState>) -> Self {
        canonicalize(prefix, cycle)
    }

    pub fn prefix(&self) -> &[GlobalState] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[GlobalState] {
        &self.cycle
    }

    /// Number of distinct positions: `|prefix| + |cycle|`.
    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Folds an arbitrary time onto its representative position in `0..len()`.
    pub fn fold(&self, time: usize) -> usize {
        if time < self.prefix.len() {
            time
        } else {
            self.prefix.len() + (time - self.prefix.len()) % self.cycle.len()
        }
    }

    /// Successor of a representative position.
    pub fn next_pos(&self, pos: usize) -> usize {
        if pos + 1 < self.len() {
            pos + 1
        } else {
            self.prefix.len()
        }
    }

    pub fn state_at(&self, time: usize) -> &GlobalState {
        let pos = self.fold(time);
        if pos < self.prefix.len() {
            &self.prefix[pos]
        } else {
            &self.cycle[pos - self.prefix.len()]
        }
    }

    pub fn states(&self) -> impl Iterator<Item = &GlobalState> {
        self.prefix.iter().chain(self.cycle.iter())
    }

    pub fn initial(&self) -> &GlobalState {
        self.state_at(0)
    }
}

/// Returns the canonical lasso denoting `prefix · cycle^ω`.
pub fn canonicalize(mut prefix: Vec<GlobalState>, mut cycle: Vec<GlobalState>) -> LassoRun {
    assert!(!cycle.is_empty(), "lasso cycle must be nonempty");
    let n = cycle.len();
    if let Some(period) = (1..n).filter(|&d| n.is_multiple_of(d)).find(|&d| (0..n - d).all(|i| cycle[i] == cycle[i + d])) {
        cycle.truncate(period);
    }
    while let Some(last) = prefix.last() {
        if *last != *cycle.last().unwrap() {
            break;
        }
        let s = prefix.pop().unwrap();
        cycle.pop();
        cycle.insert(0, s);
    }
    LassoRun { prefix, cycle }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::decl::{Declarations, Owner, VarDecl};
    use proptest::prelude::*;

    fn st(v: i64) -> GlobalState {
        let d = Declarations::new(
            vec!["a".into()],
            vec![VarDecl::new("v", (0..10).collect(), Owner::Agent(0)).unwrap()],
            false,
            None,
            None,
        )
        .unwrap();
        GlobalState::initial(&d, &[v]).unwrap()
    }

    fn run(prefix: &[i64], cycle: &[i64]) -> LassoRun {
        canonicalize(prefix.iter().map(|&v| st(v)).collect(), cycle.iter().map(|&v| st(v)).collect())
    }

    #[test]
    fn state_at_folds_into_the_cycle() {
        let r = run(&[0, 1], &[2]);
        assert_eq!(*r.state_at(0), st(0));
        assert_eq!(*r.state_at(5), st(2));
    }

    #[test]
    fn minimal_period() {
        let r = run(&[7], &[3, 3]);
        assert_eq!(r.prefix(), &[st(7)]);
        assert_eq!(r.cycle(), &[st(3)]);
    }

    #[test]
    fn prefix_absorption() {
        let r = run(&[7, 3], &[3]);
        assert_eq!(r.prefix(), &[st(7)]);
        assert_eq!(r.cycle(), &[st(3)]);
    }

    #[test]
    fn fully_periodic_prefix_disappears() {
        let raw_prefix = [0, 1, 0, 1];
        let raw_cycle = [0, 1];
        let r = run(&raw_prefix, &raw_cycle);
        assert!(r.prefix().is_empty());
        assert_eq!(r.cycle(), &[st(0), st(1)]);
        // unfold oracle
        for t in 0..=20 {
            let expected = if t < 4 { raw_prefix[t] } else { raw_cycle[(t - 4) % 2] };
            assert_eq!(*r.state_at(t), st(expected));
        }
    }

    fn unfold(prefix: &[i64], cycle: &[i64], t: usize) -> i64 {
        if t < prefix.len() {
            prefix[t]
        } else {
            cycle[(t - prefix.len()) % cycle.len()]
        }
    }

    proptest! {
        #[test]
        fn canonicalize_preserves_denotation_and_is_idempotent(
            prefix in proptest::collection::vec(0i64..3, 0..6),
            cycle in proptest::collection::vec(0i64..3, 1..6),
        ) {
            let r = run(&prefix, &cycle);
            let horizon = 3 * (prefix.len() + cycle.len());
            for t in 0..horizon {
                prop_assert_eq!(r.state_at(t).clone(), st(unfold(&prefix, &cycle, t)));
            }
            let again = canonicalize(r.prefix().to_vec(), r.cycle().to_vec());
            prop_assert_eq!(&again, &r);
        }

        #[test]
        fn equal_denotations_have_equal_canonical_forms(
            prefix in proptest::collection::vec(0i64..2, 0..4),
            cycle in proptest::collection::vec(0i64..2, 1..4),
            extra_unroll in 0usize..4,
            repeat in 1usize..3,
        ) {
            // an alternative encoding of the same run: unroll some cycle steps into
            // the prefix and repeat the (rotated) cycle
            let mut p2 = prefix.clone();
            for k in 0..extra_unroll {
                p2.push(cycle[k % cycle.len()]);
            }
            let rot: Vec<i64> = (0..cycle.len()).map(|k| cycle[(k + extra_unroll) % cycle.len()]).collect();
            let c2: Vec<i64> = rot.iter().cycle().take(rot.len() * repeat).copied().collect();
            prop_assert_eq!(run(&prefix, &cycle), run(&p2, &c2));
        }
    }
}
