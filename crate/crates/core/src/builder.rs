//! Generating the system `R(P, γ)` of a protocol in a context.

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use crate::error::BuildError;
use crate::kernel::{Admissibility, Context, Declarations, EnvProtocol, GlobalState, LassoRun, LocalState, Owner, System, Transit};
use crate::program::{Action, ActionList, Protocol};

/// Default bound on distinct reachable global states (and on runs).
pub const DEFAULT_STATE_CAP: usize = 100_000;

/// The state cap, overridable through `KBP_STATE_CAP`.
pub fn state_cap() -> usize {
    std::env::var("KBP_STATE_CAP").ok().and_then(|v| v.parse().ok()).unwrap_or(DEFAULT_STATE_CAP)
}

/// The environment's move: which directed sends of this round it drops.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct EnvAction {
    pub dropped: BTreeSet<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointAction {
    pub env: EnvAction,
    pub agents: Vec<ActionList>,
}

/// Local states on which the protocol was undefined (treated as no-op).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub states: usize,
    pub undefined: BTreeSet<(usize, LocalState)>,
}

/// Every joint action available in `state`. The agents' choices are fixed by
/// the protocol; a lossy environment may drop any subset of this round's sends.
pub fn joint_actions(protocol: &dyn Protocol, env: EnvProtocol, decls: &Declarations, state: &GlobalState, stats: &mut BuildStats) -> Vec<JointAction> {
    let agents: Vec<ActionList> = (0..decls.agent_count())
        .map(|a| {
            protocol.actions(a, state.local(a)).unwrap_or_else(|| {
                stats.undefined.insert((a, state.local(a).clone()));
                ActionList::noop()
            })
        })
        .collect();
    let edges: Vec<(usize, usize)> = match env {
        EnvProtocol::NoOp => Vec::new(),
        EnvProtocol::Lossy => {
            let set: BTreeSet<(usize, usize)> = agents
                .iter()
                .enumerate()
                .flat_map(|(from, acts)| {
                    acts.0.iter().filter_map(move |act| match act {
                        Action::Send { to, .. } => Some((from, *to)),
                        _ => None,
                    })
                })
                .collect();
            set.into_iter().collect()
        }
    };
    (0..1usize << edges.len())
        .map(|mask| JointAction {
            env: EnvAction { dropped: edges.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, e)| *e).collect() },
            agents: agents.clone(),
        })
        .collect()
}

/// `τ(a)(s)`: simultaneous assignments evaluated on the pre-state, message
/// logging, change counters and the clock.
pub fn apply_transition(decls: &Declarations, env: EnvProtocol, joint: &JointAction, state: &GlobalState) -> GlobalState {
    let old = state.valuation(decls);
    let mut new = old.clone();
    let mut sends = Vec::new();
    for (agent, acts) in joint.agents.iter().enumerate() {
        for act in &acts.0 {
            match act {
                Action::Assign { var, expr, .. } => {
                    debug_assert_eq!(decls.var(*var).owner, Owner::Agent(agent));
                    new[*var] = decls.var(*var).normalize(expr.eval(decls, state));
                }
                Action::Send { to, payload } => sends.push((agent, *to, payload.eval(decls, state))),
                Action::NoOp => {}
            }
        }
    }
    let counters = decls
        .layout
        .tracked
        .iter()
        .zip(&state.counters)
        .map(|(&v, &c)| if new[v] != old[v] { (c + 1).min(2) } else { c })
        .collect();
    let clock = decls.clock.map(|max| (state.clock().unwrap_or(0) + 1).min(max));
    let env_local = LocalState { vars: decls.layout.env_slots.iter().map(|&v| new[v]).collect(), clock, ..state.env.clone() };
    let mut locals: Vec<LocalState> = decls
        .layout
        .agent_slots
        .iter()
        .zip(&state.locals)
        .map(|(slots, l)| LocalState { vars: slots.iter().map(|&v| new[v]).collect(), clock, sent: l.sent.clone(), recv: l.recv.clone() })
        .collect();
    let mut transits = BTreeSet::new();
    for (from, to, payload) in sends {
        let delivered = !joint.env.dropped.contains(&(from, to));
        locals[from].sent.insert((to, payload));
        if delivered {
            locals[to].recv.insert((from, payload));
        }
        if env == EnvProtocol::Lossy {
            transits.insert(Transit { from, to, payload, delivered });
        }
    }
    GlobalState { env: env_local, locals, counters, transits }
}

/// Ψ on a lasso run.
pub fn admissible(run: &LassoRun, psi: Admissibility) -> bool {
    match psi {
        Admissibility::All => true,
        Admissibility::FairDelivery => {
            let cycle = run.cycle();
            cycle.iter().flat_map(|s| &s.transits).filter(|t| !t.delivered).all(|t| {
                cycle.iter().any(|s| s.transits.contains(&Transit { delivered: true, ..*t }))
            })
        }
    }
}

/// `R(P, γ)` with the cap from [`state_cap`].
pub fn build_system(protocol: &dyn Protocol, ctx: &Context) -> Result<System, BuildError> {
    build_system_with(protocol, ctx, state_cap()).map(|(s, _)| s)
}

/// Explores every path from every initial state, closing each one into a lasso
/// at its first repeated state, and keeps the admissible runs.
pub fn build_system_with(protocol: &dyn Protocol, ctx: &Context, cap: usize) -> Result<(System, BuildStats), BuildError> {
    let decls = &*ctx.decls;
    let mut stats = BuildStats::default();
    let mut succ: HashMap<GlobalState, Rc<Vec<GlobalState>>> = HashMap::new();
    let mut runs: BTreeSet<LassoRun> = BTreeSet::new();

    struct Frame {
        state: GlobalState,
        next: Rc<Vec<GlobalState>>,
        pos: usize,
    }

    for init in &ctx.initial {
        let mut on_path: HashMap<GlobalState, usize> = HashMap::new();
        let mut path: Vec<Frame> = Vec::new();
        let mut push = |state: GlobalState, path: &mut Vec<Frame>, on_path: &mut HashMap<GlobalState, usize>, stats: &mut BuildStats| -> Result<(), BuildError> {
            let next = match succ.get(&state) {
                Some(n) => n.clone(),
                None => {
                    let mut out: Vec<GlobalState> =
                        joint_actions(protocol, ctx.env, decls, &state, stats).iter().map(|j| apply_transition(decls, ctx.env, j, &state)).collect();
                    out.sort();
                    out.dedup();
                    let rc = Rc::new(out);
                    succ.insert(state.clone(), rc.clone());
                    if succ.len() > cap {
                        return Err(BuildError::StateBudgetExceeded { cap });
                    }
                    rc
                }
            };
            on_path.insert(state.clone(), path.len());
            path.push(Frame { state, next, pos: 0 });
            Ok(())
        };
        push(init.clone(), &mut path, &mut on_path, &mut stats)?;
        while let Some(top) = path.last_mut() {
            if top.pos == top.next.len() {
                let done = path.pop().unwrap();
                on_path.remove(&done.state);
                continue;
            }
            let t = top.next[top.pos].clone();
            top.pos += 1;
            if let Some(&k) = on_path.get(&t) {
                let states: Vec<GlobalState> = path.iter().map(|f| f.state.clone()).collect();
                let run = LassoRun::new(states[..k].to_vec(), states[k..].to_vec());
                if admissible(&run, ctx.admissibility) {
                    runs.insert(run);
                    if runs.len() > cap {
                        return Err(BuildError::StateBudgetExceeded { cap });
                    }
                }
            } else {
                push(t, &mut path, &mut on_path, &mut stats)?;
            }
        }
    }
    stats.states = succ.len();
    Ok((System::new(runs), stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Formula;
    use crate::kernel::VarDecl;
    use crate::program::{derive_protocol, AgentProgram, GuardedBranch, Program, StandardProtocol};
    use std::sync::Arc;

    fn pg1_decls() -> Arc<Declarations> {
        Arc::new(
            Declarations::new(
                vec!["1".into()],
                vec![
                    VarDecl::new("x", vec![0, 1], Owner::Agent(0)).unwrap(),
                    VarDecl::new("y", (0..=5).collect(), Owner::Agent(0)).unwrap().saturating(true),
                ],
                false,
                None,
                None,
            )
            .unwrap(),
        )
    }

    fn pg1(d: &Declarations) -> Program {
        Program {
            name: "pg1".into(),
            agents: vec![AgentProgram {
                branches: vec![GuardedBranch {
                    guard: Formula::parse("x=0", d).unwrap(),
                    actions: ActionList::new([Action::parse("y := y+1", d).unwrap()]),
                }],
            }],
        }
    }

    fn st(d: &Declarations, x: i64, y: i64) -> GlobalState {
        GlobalState::initial(d, &[x, y]).unwrap()
    }

    #[test]
    fn pg1_runs() {
        let d = pg1_decls();
        let ctx = Context::new(d.clone(), EnvProtocol::NoOp, [st(&d, 0, 0), st(&d, 1, 0)], Admissibility::All);
        let p = pg1(&d);
        let sys = build_system(&derive_protocol(&p, &d, None).unwrap(), &ctx).unwrap();
        assert_eq!(sys.len(), 2);
        let counting = LassoRun::new((0..5).map(|y| st(&d, 0, y)).collect(), vec![st(&d, 0, 5)]);
        assert!(sys.contains(&counting));
        assert!(sys.contains(&LassoRun::new(vec![], vec![st(&d, 1, 0)])));
        // same system from the lazily read program
        assert_eq!(build_system(&StandardProtocol { decls: &d, program: &p }, &ctx).unwrap(), sys);
    }

    #[test]
    fn wrapping_counter_cycles() {
        let d = Arc::new(
            Declarations::new(
                vec!["1".into()],
                vec![VarDecl::new("x", vec![0, 1], Owner::Agent(0)).unwrap(), VarDecl::new("y", (0..=2).collect(), Owner::Agent(0)).unwrap()],
                false,
                None,
                None,
            )
            .unwrap(),
        );
        let ctx = Context::new(d.clone(), EnvProtocol::NoOp, [st(&d, 0, 0)], Admissibility::All);
        let sys = build_system(&derive_protocol(&pg1(&d), &d, None).unwrap(), &ctx).unwrap();
        assert_eq!(sys.runs()[0].prefix().len(), 0);
        assert_eq!(sys.runs()[0].cycle().len(), 3);
    }

    #[test]
    fn cap_is_enforced() {
        let d = pg1_decls();
        let ctx = Context::new(d.clone(), EnvProtocol::NoOp, [st(&d, 0, 0)], Admissibility::All);
        let err = build_system_with(&derive_protocol(&pg1(&d), &d, None).unwrap(), &ctx, 3).unwrap_err();
        assert_eq!(err, BuildError::StateBudgetExceeded { cap: 3 });
    }

    #[test]
    fn undefined_entries_are_noops_and_reported() {
        let d = pg1_decls();
        let ctx = Context::new(d.clone(), EnvProtocol::NoOp, [st(&d, 0, 0)], Admissibility::All);
        let (sys, stats) = build_system_with(&crate::program::ProtocolTable { tables: vec![Default::default()] }, &ctx, 10).unwrap();
        assert_eq!(sys.runs()[0].cycle(), &[st(&d, 0, 0)]);
        assert_eq!(stats.undefined.len(), 1);
    }

    fn chatter() -> (Arc<Declarations>, Program) {
        let d = Arc::new(
            Declarations::new(
                vec!["1".into(), "2".into()],
                vec![VarDecl::new("b", vec![0, 1], Owner::Agent(0)).unwrap()],
                true,
                None,
                None,
            )
            .unwrap(),
        );
        let p = Program {
            name: "ping".into(),
            agents: vec![
                AgentProgram {
                    branches: vec![GuardedBranch {
                        guard: Formula::truth(),
                        actions: ActionList::new([Action::parse("b := 0", &d).unwrap(), Action::parse("send(2, b)", &d).unwrap()]),
                    }],
                },
                AgentProgram::default(),
            ],
        };
        (d, p)
    }

    #[test]
    fn lossy_channels_and_fairness() {
        let (d, p) = chatter();
        let init = GlobalState::initial(&d, &[0]).unwrap();
        let proto = derive_protocol(&p, &d, None).unwrap();
        let reliable = build_system(&proto, &Context::new(d.clone(), EnvProtocol::NoOp, [init.clone()], Admissibility::All)).unwrap();
        assert_eq!(reliable.len(), 1);
        assert!(reliable.runs()[0].cycle()[0].local(1).recv.contains(&(0, 0)));

        let lossy = build_system(&proto, &Context::new(d.clone(), EnvProtocol::Lossy, [init.clone()], Admissibility::All)).unwrap();
        let fair = build_system(&proto, &Context::new(d.clone(), EnvProtocol::Lossy, [init], Admissibility::FairDelivery)).unwrap();
        assert!(fair.is_subset_of(&lossy));
        assert!(fair.len() < lossy.len());
        // the run that drops forever is unfair
        assert!(lossy.runs().iter().any(|r| r.cycle().iter().all(|s| s.local(1).recv.is_empty())));
        assert!(fair.runs().iter().all(|r| r.cycle().iter().all(|s| !s.local(1).recv.is_empty())));
    }

    #[test]
    fn transitions_are_simultaneous() {
        let d = Declarations::new(
            vec!["1".into(), "2".into()],
            vec![
                VarDecl::new("a", vec![0, 1], Owner::Agent(0)).unwrap().visible_to(vec![1]),
                VarDecl::new("b", vec![0, 1], Owner::Agent(1)).unwrap().visible_to(vec![0]).tracked(true),
            ],
            false,
            None,
            None,
        )
        .unwrap();
        let s = GlobalState::initial(&d, &[1, 0]).unwrap();
        let joint = JointAction {
            env: EnvAction::default(),
            agents: vec![ActionList::new([Action::parse("a := b", &d).unwrap()]), ActionList::new([Action::parse("b := a", &d).unwrap()])],
        };
        let t = apply_transition(&d, EnvProtocol::NoOp, &joint, &s);
        assert_eq!(t.valuation(&d), vec![0, 1]);
        assert_eq!(t.counter(&d, 1), Some(1));
        // copies are kept in sync
        assert_eq!(t.local(0).vars, vec![0, 1]);
        assert_eq!(t.local(1).vars, vec![1, 0]);
    }
}
