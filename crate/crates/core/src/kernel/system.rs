//! Systems (sets of runs) and their points.

use std::collections::{BTreeSet, HashMap};

use super::lasso::LassoRun;
use super::state::{GlobalState, LocalState};

/// A point `(r, m)`: an index into [`System::runs`] and a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub run: usize,
    pub time: usize,
}

/// A finite set of canonical lasso runs, sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct System {
    runs: Vec<LassoRun>,
}

impl System {
    pub fn new(runs: impl IntoIterator<Item = LassoRun>) -> Self {
        let set: BTreeSet<LassoRun> = runs.into_iter().collect();
        System { runs: set.into_iter().collect() }
    }

    pub fn empty() -> Self {
        System::default()
    }

    pub fn runs(&self) -> &[LassoRun] {
        &self.runs
    }

    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn contains(&self, run: &LassoRun) -> bool {
        self.runs.binary_search(run).is_ok()
    }

    pub fn is_subset_of(&self, other: &System) -> bool {
        self.runs.iter().all(|r| other.contains(r))
    }

    pub fn union(&self, other: &System) -> System {
        System::new(self.runs.iter().chain(other.runs.iter()).cloned())
    }

    pub fn state(&self, p: Point) -> &GlobalState {
        self.runs[p.run].state_at(p.time)
    }

    /// Folds a point onto its representative.
    pub fn representative(&self, p: Point) -> Point {
        Point { run: p.run, time: self.runs[p.run].fold(p.time) }
    }

    /// Every distinct global state appearing in some run.
    pub fn states(&self) -> BTreeSet<&GlobalState> {
        self.runs.iter().flat_map(|r| r.states()).collect()
    }
}

/// Per run, the points at times `0..|prefix|+|cycle|`. Every point of the system
/// has one of these as a representative with the same state and the same suffix.
pub fn representative_points(system: &System) -> Vec<Point> {
    system
        .runs
        .iter()
        .enumerate()
        .flat_map(|(run, r)| (0..r.len()).map(move |time| Point { run, time }))
        .collect()
}

/// All representative points where `agent` has the same local state as at `point`.
pub fn indistinguishable_points(system: &System, agent: usize, point: Point) -> Vec<Point> {
    let local = system.state(point).local(agent);
    representative_points(system).into_iter().filter(|&q| system.state(q).local(agent) == local).collect()
}

/// Representative points grouped by each agent's local state; the lookup
/// structure behind knowledge evaluation.
#[derive(Debug, Clone)]
pub struct PointIndex<'s> {
    pub system: &'s System,
    pub points: Vec<Point>,
    /// Per run, offset of its time-0 point in `points`.
    offsets: Vec<usize>,
    /// Per agent: local state -> indices into `points`.
    by_local: Vec<HashMap<&'s LocalState, Vec<usize>>>,
}

impl<'s> PointIndex<'s> {
    pub fn new(system: &'s System, agents: usize) -> Self {
        let points = representative_points(system);
        let mut offsets = Vec::with_capacity(system.len());
        let mut acc = 0;
        for r in system.runs() {
            offsets.push(acc);
            acc += r.len();
        }
        let mut by_local: Vec<HashMap<&LocalState, Vec<usize>>> = vec![HashMap::new(); agents];
        for (idx, p) in points.iter().enumerate() {
            let s = system.state(*p);
            for (a, map) in by_local.iter_mut().enumerate() {
                map.entry(s.local(a)).or_default().push(idx);
            }
        }
        PointIndex { system, points, offsets, by_local }
    }

    /// Index of the representative of `p` in `points`.
    pub fn index_of(&self, p: Point) -> usize {
        self.offsets[p.run] + self.system.runs()[p.run].fold(p.time)
    }

    pub fn same_local(&self, agent: usize, local: &LocalState) -> &[usize] {
        self.by_local[agent].get(local).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn state(&self, idx: usize) -> &'s GlobalState {
        self.system.state(self.points[idx])
    }

    /// Index of the representative successor of point `idx`.
    pub fn next(&self, idx: usize) -> usize {
        let p = self.points[idx];
        self.offsets[p.run] + self.system.runs()[p.run].next_pos(p.time)
    }

    pub fn local_states(&self, agent: usize) -> impl Iterator<Item = &&'s LocalState> {
        self.by_local[agent].keys()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::decl::{Declarations, Owner, VarDecl};

    fn decls() -> Declarations {
        Declarations::new(
            vec!["a".into(), "b".into()],
            vec![
                VarDecl::new("x", vec![0, 1, 2], Owner::Agent(0)).unwrap(),
                VarDecl::new("y", vec![0, 1], Owner::Agent(1)).unwrap(),
            ],
            false,
            None,
            None,
        )
        .unwrap()
    }

    fn st(x: i64, y: i64) -> GlobalState {
        GlobalState::initial(&decls(), &[x, y]).unwrap()
    }

    #[test]
    fn representative_counts() {
        let one = System::new([LassoRun::new(vec![], vec![st(0, 0)])]);
        assert_eq!(representative_points(&one), vec![Point { run: 0, time: 0 }]);
        let three = System::new([LassoRun::new(vec![st(0, 0)], vec![st(1, 0), st(2, 0)])]);
        assert_eq!(representative_points(&three).len(), 3);
    }

    #[test]
    fn single_state_system_is_reflexive() {
        let one = System::new([LassoRun::new(vec![], vec![st(0, 0)])]);
        let p = Point { run: 0, time: 0 };
        assert_eq!(indistinguishable_points(&one, 0, p), vec![p]);
    }

    #[test]
    fn duplicates_collapse() {
        let r = LassoRun::new(vec![], vec![st(0, 0)]);
        let r2 = LassoRun::new(vec![st(0, 0)], vec![st(0, 0)]);
        assert_eq!(System::new([r, r2]).len(), 1);
    }

    #[test]
    fn indistinguishability_is_an_equivalence() {
        let sys = System::new([
            LassoRun::new(vec![st(0, 0)], vec![st(1, 1)]),
            LassoRun::new(vec![], vec![st(2, 0), st(1, 0)]),
        ]);
        let pts = representative_points(&sys);
        for agent in 0..2 {
            for &p in &pts {
                let cls = indistinguishable_points(&sys, agent, p);
                assert!(cls.contains(&p));
                for &q in &cls {
                    let cls_q = indistinguishable_points(&sys, agent, q);
                    assert_eq!(cls, cls_q, "symmetric and transitive");
                }
            }
        }
    }

    #[test]
    fn index_agrees_with_direct_computation() {
        let sys = System::new([
            LassoRun::new(vec![st(0, 0)], vec![st(1, 1)]),
            LassoRun::new(vec![], vec![st(2, 0), st(1, 0)]),
        ]);
        let idx = PointIndex::new(&sys, 2);
        for &p in &idx.points {
            let direct = indistinguishable_points(&sys, 1, p);
            let via: Vec<Point> = idx.same_local(1, sys.state(p).local(1)).iter().map(|&i| idx.points[i]).collect();
            assert_eq!(direct, via);
        }
        assert_eq!(idx.index_of(Point { run: 1, time: 7 }), idx.index_of(Point { run: 1, time: 1 }));
    }
}
