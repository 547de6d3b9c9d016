//! Automaton-based proof search: a decision procedure for logics whose
//! propagation behaviour is given by a family of finite automata, one per
//! letter, sharing a state space.
//!
//! The automaton labels diamond bodies with states and pushes them along
//! tree edges (downwards on the edge letter, upwards on its bar). A final
//! state releases the body as a plain formula. Search stops on an atomic
//! clash (valid) or on a stable sequent (refuted); leaves whose content
//! repeats an ancestor are not expanded, which bounds the tree.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::formula::{Formula, Letter};
use crate::lang::UserFsa;
use crate::sequent::{Member, NestedSequent, NodeId, StateId};
use crate::trace::{Step, StepKind, Trace};

#[derive(Debug, Error)]
pub enum AutoError {
    #[error("no initial state declared for letter {0}")]
    MissingInit(Letter),
    #[error("search is stuck at {node}: it holds {formula} and its negation, and no rule applies")]
    Stuck { node: NodeId, formula: Formula },
    #[error("content bound violated at {node}: {len} members, bound {bound}")]
    ContentBound {
        node: NodeId,
        len: usize,
        bound: usize,
    },
    #[error("search revisited a sequent on the same branch (hash {0:#x})")]
    BranchRevisit(u64),
}

#[derive(Debug)]
pub enum AutoVerdict {
    /// The formula is valid; the trace derives an atomic clash on every
    /// branch.
    Valid(Trace),
    /// The formula is refuted by a stable sequent. `loops` maps each
    /// unrealised leaf to its closest content-equal proper ancestor.
    Refuted {
        sequent: NestedSequent,
        loops: BTreeMap<NodeId, NodeId>,
    },
}

#[derive(Debug, Clone, Default)]
pub struct AutoStats {
    pub steps: usize,
    pub branches: usize,
    /// Largest node content (plain plus labeled members) seen anywhere.
    pub max_content: usize,
    /// The a-priori bound (|Q| + 1) * |subformulas|; `max_content` must
    /// never exceed it.
    pub content_bound: usize,
}

/// A loop assignment: leaf `i` is blocked because the proper ancestor `j`
/// carries exactly the same content, labels included.
pub fn loop_ancestor(seq: &NestedSequent, leaf: NodeId) -> Option<NodeId> {
    seq.ancestors(leaf)
        .into_iter()
        .find(|&j| seq.content_eq(leaf, j))
}

/// Checks stability against `fsa`. Returns the loop assignment for the
/// unrealised leaves when the sequent is stable, `None` otherwise.
pub fn stability_loops(seq: &NestedSequent, fsa: &UserFsa) -> Option<BTreeMap<NodeId, NodeId>> {
    if seq.node_ids().any(|i| !seq.node_saturated(i)) {
        return None;
    }
    if propagation_violation(seq, fsa).is_some() {
        return None;
    }
    if seq.internal_nodes().iter().any(|&i| !seq.node_realised(i)) {
        return None;
    }
    let mut loops = BTreeMap::new();
    for leaf in seq.leaves() {
        if seq.node_realised(leaf) {
            continue;
        }
        match loop_ancestor(seq, leaf) {
            Some(j) => {
                loops.insert(leaf, j);
            }
            None => return None,
        }
    }
    Some(loops)
}

/// First propagation violation in a fixed scan order, as the step that
/// repairs it.
fn propagation_violation(seq: &NestedSequent, fsa: &UserFsa) -> Option<StepKind> {
    // Clause 1: every diamond spawns its initial label.
    for i in seq.node_ids() {
        for f in &seq.node(i).formulas {
            if let Formula::Dia(l, body) = f {
                if let Some(init) = fsa.init_of.get(l) {
                    if !seq.node(i).labeled.contains(&(init.clone(), (**body).clone())) {
                        return Some(StepKind::DiaInit {
                            node: i,
                            letter: l.clone(),
                            formula: (**body).clone(),
                            state: init.clone(),
                        });
                    }
                }
            }
        }
    }
    // Clause 2: final-state labels release their formula.
    for i in seq.node_ids() {
        for (s, f) in &seq.node(i).labeled {
            if fsa.finals.contains(s) && !seq.node(i).formulas.contains(f) {
                return Some(StepKind::FinalRelease {
                    node: i,
                    state: s.clone(),
                    formula: f.clone(),
                });
            }
        }
    }
    // Clause 3: labels move down edges on the edge letter.
    for i in seq.node_ids() {
        for (l, j) in seq.children(i) {
            for (s, f) in &seq.node(i).labeled {
                for t in transitions_on(fsa, s, l) {
                    if !seq.node(*j).labeled.contains(&(t.clone(), f.clone())) {
                        return Some(StepKind::LabelDown {
                            from: i,
                            to: *j,
                            letter: l.clone(),
                            from_state: s.clone(),
                            to_state: t,
                            formula: f.clone(),
                        });
                    }
                }
            }
        }
    }
    // Clause 4: labels move up edges on the barred letter.
    for i in seq.node_ids() {
        let Some((j, l)) = seq.parent(i).cloned() else {
            continue;
        };
        for (s, f) in &seq.node(i).labeled {
            for t in transitions_on(fsa, s, &l.bar()) {
                if !seq.node(j).labeled.contains(&(t.clone(), f.clone())) {
                    return Some(StepKind::LabelUp {
                        from: i,
                        to: j,
                        letter: l.clone(),
                        from_state: s.clone(),
                        to_state: t,
                        formula: f.clone(),
                    });
                }
            }
        }
    }
    None
}

fn transitions_on(fsa: &UserFsa, s: &StateId, l: &Letter) -> Vec<StateId> {
    fsa.transitions
        .iter()
        .filter(|(from, letter, _)| from == s && letter == l)
        .map(|(_, _, to)| to.clone())
        .collect()
}

/// Decides validity of `f` under the automaton family `fsa`.
pub fn prove1(fsa: &UserFsa, f: &Formula) -> Result<(AutoVerdict, AutoStats), AutoError> {
    let nnf = f.nnf();
    for sub in nnf.subformulas() {
        if let Formula::Dia(l, _) = &sub {
            if !fsa.init_of.contains_key(l) {
                return Err(AutoError::MissingInit(l.clone()));
            }
        }
    }
    let bound = (fsa.states.len() + 1) * nnf.subformulas().len();
    let seq = NestedSequent::from_formula(&nnf);
    let mut stats = AutoStats {
        content_bound: bound,
        max_content: 1,
        ..AutoStats::default()
    };
    let mut seen = HashSet::new();
    seen.insert(seq.stable_hash());
    let verdict = search(fsa, seq, &mut stats, &mut seen)?;
    Ok((verdict, stats))
}

/// The first applicable non-branching rule, or the conjunction to branch
/// on, in the procedure's priority order.
enum Choice {
    Apply(StepKind),
    Branch { node: NodeId, formula: Formula },
    Stuck { node: NodeId, formula: Formula },
    None,
}

fn choose(seq: &NestedSequent, fsa: &UserFsa) -> Choice {
    // Disjunctions first, across the whole tree, smallest formula first.
    for i in seq.node_ids() {
        for f in &seq.node(i).formulas {
            if let Formula::Or(a, b) = f {
                if !(seq.node(i).formulas.contains(a) && seq.node(i).formulas.contains(b)) {
                    return Choice::Apply(StepKind::OrExpand {
                        node: i,
                        formula: f.clone(),
                    });
                }
            }
        }
    }
    // Then conjunctions.
    for i in seq.node_ids() {
        for f in &seq.node(i).formulas {
            if let Formula::And(a, b) = f {
                if !seq.node(i).formulas.contains(a) && !seq.node(i).formulas.contains(b) {
                    return Choice::Branch {
                        node: i,
                        formula: f.clone(),
                    };
                }
            }
        }
    }
    if let Some(step) = propagation_violation(seq, fsa) {
        return Choice::Apply(step);
    }
    for i in seq.internal_nodes() {
        if let Some((l, a)) = unrealised_box(seq, i) {
            return Choice::Apply(StepKind::RealiseInternal {
                node: i,
                letter: l,
                formula: a,
            });
        }
    }
    for i in seq.leaves() {
        if seq.node_realised(i) || loop_ancestor(seq, i).is_some() {
            continue;
        }
        let (l, a) = unrealised_box(seq, i).expect("unrealised leaf has an unrealised box");
        return Choice::Apply(StepKind::ExpandLeaf {
            node: i,
            letter: l,
            formula: a,
        });
    }
    // Nothing applies. Either the sequent is stable, or a node holds a
    // compound formula together with its negation.
    for i in seq.node_ids() {
        for f in &seq.node(i).formulas {
            if seq.node(i).formulas.contains(&f.lneg()) {
                return Choice::Stuck {
                    node: i,
                    formula: f.clone(),
                };
            }
        }
    }
    Choice::None
}

fn unrealised_box(seq: &NestedSequent, i: NodeId) -> Option<(Letter, Formula)> {
    for f in &seq.node(i).formulas {
        if let Formula::Box(l, a) = f {
            let realised = seq
                .children(i)
                .iter()
                .any(|(cl, j)| cl == l && seq.node(*j).formulas.contains(a));
            if !realised {
                return Some((l.clone(), (**a).clone()));
            }
        }
    }
    None
}

fn apply(seq: &mut NestedSequent, kind: &StepKind) {
    match kind {
        StepKind::OrExpand { node, formula } => {
            let Formula::Or(a, b) = formula else {
                unreachable!()
            };
            seq.add_formulas(*node, [(**a).clone(), (**b).clone()])
                .expect("node exists");
        }
        StepKind::DiaInit {
            node,
            formula,
            state,
            ..
        } => {
            seq.add_members(*node, [Member::Labeled(state.clone(), formula.clone())])
                .expect("node exists");
        }
        StepKind::FinalRelease { node, formula, .. } => {
            seq.add_formulas(*node, [formula.clone()]).expect("node exists");
        }
        StepKind::LabelDown {
            to,
            to_state,
            formula,
            ..
        }
        | StepKind::LabelUp {
            to,
            to_state,
            formula,
            ..
        } => {
            seq.add_members(*to, [Member::Labeled(to_state.clone(), formula.clone())])
                .expect("node exists");
        }
        StepKind::RealiseInternal {
            node,
            letter,
            formula,
        }
        | StepKind::ExpandLeaf {
            node,
            letter,
            formula,
        } => {
            seq.add_child(*node, letter.clone(), [formula.clone()])
                .expect("node exists");
        }
        StepKind::AndBranch { .. } | StepKind::GrammarProp { .. } => unreachable!(),
    }
}

fn post_step_checks(
    seq: &NestedSequent,
    stats: &mut AutoStats,
    seen: &mut HashSet<u64>,
) -> Result<u64, AutoError> {
    for i in seq.node_ids() {
        let len = seq.node(i).content_len();
        stats.max_content = stats.max_content.max(len);
        if len > stats.content_bound {
            return Err(AutoError::ContentBound {
                node: i,
                len,
                bound: stats.content_bound,
            });
        }
    }
    let h = seq.stable_hash();
    if !seen.insert(h) {
        return Err(AutoError::BranchRevisit(h));
    }
    Ok(h)
}

fn search(
    fsa: &UserFsa,
    mut seq: NestedSequent,
    stats: &mut AutoStats,
    seen: &mut HashSet<u64>,
) -> Result<AutoVerdict, AutoError> {
    let mut steps: Vec<Step> = Vec::new();
    loop {
        if let Some((node, atom)) = seq.find_clash() {
            return Ok(AutoVerdict::Valid(fold_steps(steps, Trace::Closed {
                node,
                atom,
            })));
        }
        if let Some(loops) = stability_loops(&seq, fsa) {
            return Ok(AutoVerdict::Refuted { sequent: seq, loops });
        }
        match choose(&seq, fsa) {
            Choice::Apply(kind) => {
                apply(&mut seq, &kind);
                stats.steps += 1;
                let h = post_step_checks(&seq, stats, seen)?;
                steps.push(Step {
                    kind,
                    sequent_hash: h,
                });
            }
            Choice::Branch { node, formula } => {
                let Formula::And(a, b) = &formula else {
                    unreachable!()
                };
                stats.steps += 1;
                stats.branches += 1;
                let mut left = seq.clone();
                left.add_formulas(node, [(**a).clone()]).expect("node exists");
                let mut left_seen = seen.clone();
                let lh = post_step_checks(&left, stats, &mut left_seen)?;
                let lres = search(fsa, left, stats, &mut left_seen)?;
                let ltrace = match lres {
                    AutoVerdict::Valid(t) => t,
                    refuted => return Ok(refuted),
                };
                let mut right = seq;
                right.add_formulas(node, [(**b).clone()]).expect("node exists");
                let mut right_seen = seen.clone();
                post_step_checks(&right, stats, &mut right_seen)?;
                let rres = search(fsa, right, stats, &mut right_seen)?;
                let rtrace = match rres {
                    AutoVerdict::Valid(t) => t,
                    refuted => return Ok(refuted),
                };
                let branch = Trace::Branch {
                    step: Step {
                        kind: StepKind::AndBranch { node, formula },
                        // Branch hashes record the left premise; the right
                        // one is recomputed by the replayer.
                        sequent_hash: lh,
                    },
                    left: Box::new(ltrace),
                    right: Box::new(rtrace),
                };
                return Ok(AutoVerdict::Valid(fold_steps(steps, branch)));
            }
            Choice::Stuck { node, formula } => {
                return Err(AutoError::Stuck { node, formula });
            }
            Choice::None => unreachable!("no rule applies but sequent is not stable"),
        }
    }
}

fn fold_steps(steps: Vec<Step>, tail: Trace) -> Trace {
    steps.into_iter().rev().fold(tail, |acc, step| Trace::Step {
        step,
        rest: Box::new(acc),
    })
}
