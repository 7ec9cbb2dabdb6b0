//! Exact evaluation of temporal-epistemic formulas on systems of lasso runs.
//!
//! Each subformula is labelled over all representative points at once. Temporal
//! operators follow the run's successor structure (the last position loops back to
//! the start of the cycle); `K[i]` quantifies over all points of the system where
//! agent `i` has the same local state.

use std::collections::HashMap;
use std::rc::Rc;

use crate::error::SpecError;
use crate::formula::Formula;
use crate::kernel::{Declarations, LassoRun, Point, PointIndex, System};

pub struct Evaluator<'s> {
    decls: &'s Declarations,
    index: PointIndex<'s>,
    memo: HashMap<Formula, Rc<Vec<bool>>>,
}

impl<'s> Evaluator<'s> {
    pub fn new(decls: &'s Declarations, system: &'s System) -> Self {
        Evaluator { decls, index: PointIndex::new(system, decls.agent_count()), memo: HashMap::new() }
    }

    pub fn index(&self) -> &PointIndex<'s> {
        &self.index
    }

    pub fn at(&mut self, point: Point, f: &Formula) -> bool {
        let idx = self.index.index_of(point);
        self.label(f)[idx]
    }

    /// First representative point (in run/time order) where `f` is false.
    pub fn first_failure(&mut self, f: &Formula) -> Option<Point> {
        let labels = self.label(f);
        labels.iter().position(|v| !v).map(|i| self.index.points[i])
    }

    pub fn valid(&mut self, f: &Formula) -> bool {
        self.label(f).iter().all(|v| *v)
    }

    /// Truth of `f` at every representative point, in `PointIndex::points` order.
    pub fn label(&mut self, f: &Formula) -> Rc<Vec<bool>> {
        if let Some(v) = self.memo.get(f) {
            return v.clone();
        }
        let n = self.index.points.len();
        let out: Vec<bool> = match f {
            Formula::Atom(a) => (0..n).map(|i| a.eval(self.decls, self.index.state(i))).collect(),
            Formula::Not(a) => self.label(a).iter().map(|v| !v).collect(),
            Formula::And(a, b) => {
                let (la, lb) = (self.label(a), self.label(b));
                la.iter().zip(lb.iter()).map(|(x, y)| *x && *y).collect()
            }
            Formula::Or(a, b) => {
                let (la, lb) = (self.label(a), self.label(b));
                la.iter().zip(lb.iter()).map(|(x, y)| *x || *y).collect()
            }
            Formula::Implies(a, b) => {
                let (la, lb) = (self.label(a), self.label(b));
                la.iter().zip(lb.iter()).map(|(x, y)| !*x || *y).collect()
            }
            Formula::Know(agent, a) => {
                let la = self.label(a);
                let mut out = vec![false; n];
                let mut done = vec![false; n];
                for i in 0..n {
                    if done[i] {
                        continue;
                    }
                    let class = self.index.same_local(*agent, self.index.state(i).local(*agent));
                    let all = class.iter().all(|&j| la[j]);
                    for &j in class {
                        out[j] = all;
                        done[j] = true;
                    }
                }
                out
            }
            Formula::Next(a) => {
                let la = self.label(a);
                (0..n).map(|i| la[self.index.next(i)]).collect()
            }
            Formula::Eventually(a) => {
                let la = self.label(a);
                self.per_run(|run, base, out| {
                    let p = run.prefix().len();
                    let in_cycle = (p..run.len()).any(|t| la[base + t]);
                    let mut acc = in_cycle;
                    for t in (0..run.len()).rev() {
                        acc = if t >= p { in_cycle } else { acc || la[base + t] };
                        out[base + t] = acc;
                    }
                })
            }
            Formula::Always(a) => {
                let la = self.label(a);
                self.per_run(|run, base, out| {
                    let p = run.prefix().len();
                    let in_cycle = (p..run.len()).all(|t| la[base + t]);
                    let mut acc = in_cycle;
                    for t in (0..run.len()).rev() {
                        acc = if t >= p { in_cycle } else { acc && la[base + t] };
                        out[base + t] = acc;
                    }
                })
            }
            Formula::Until(a, b) => {
                let (la, lb) = (self.label(a), self.label(b));
                self.per_run(|run, base, out| {
                    let p = run.prefix().len();
                    let len = run.len();
                    // least fixed point on the cycle
                    loop {
                        let mut changed = false;
                        for t in (p..len).rev() {
                            let next = if t + 1 < len { t + 1 } else { p };
                            let v = lb[base + t] || (la[base + t] && out[base + next]);
                            if v != out[base + t] {
                                out[base + t] = v;
                                changed = true;
                            }
                        }
                        if !changed {
                            break;
                        }
                    }
                    for t in (0..p).rev() {
                        out[base + t] = lb[base + t] || (la[base + t] && out[base + t + 1]);
                    }
                })
            }
        };
        let rc = Rc::new(out);
        self.memo.insert(f.clone(), rc.clone());
        rc
    }

    fn per_run(&self, mut f: impl FnMut(&LassoRun, usize, &mut Vec<bool>)) -> Vec<bool> {
        let mut out = vec![false; self.index.points.len()];
        let mut base = 0;
        for run in self.index.system.runs() {
            f(run, base, &mut out);
            base += run.len();
        }
        out
    }
}

/// Truth of `f` at `point` of `system`.
pub fn eval_formula(decls: &Declarations, system: &System, point: Point, f: &Formula) -> bool {
    Evaluator::new(decls, system).at(point, f)
}

/// `f` holds at every point of `system` (vacuously true for the empty system).
pub fn valid_in_system(decls: &Declarations, system: &System, f: &Formula) -> bool {
    Evaluator::new(decls, system).valid(f)
}

/// Run-based reading: `f` evaluated at time 0 of `run`, temporal clauses only.
pub fn run_satisfies(decls: &Declarations, run: &LassoRun, f: &Formula) -> Result<bool, SpecError> {
    if f.has_know() {
        return Err(SpecError::EpistemicInRunSpec);
    }
    let sys = System::new([run.clone()]);
    Ok(eval_formula(decls, &sys, Point { run: 0, time: 0 }, f))
}
