//! Derivation traces and their independent replay checker.
//!
//! Both provers record every applied step. The checker re-executes a trace
//! from the initial sequent, verifying that each step is a legal rule
//! instance (with its side condition actually satisfied) and that the
//! sequent hash recorded after the step matches.

use serde::Serialize;
use thiserror::Error;

use crate::formula::{Formula, Letter};
use crate::grammar::SemiThueSystem;
use crate::lang::{build_propagation_automaton, intersection_nonempty, UserFsa};
use crate::sequent::{Member, NestedSequent, NodeId, StateId};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("step {index}: {msg}")]
    IllegalStep { index: usize, msg: String },
    #[error("step {index}: sequent hash mismatch (expected {expected:#x}, got {got:#x})")]
    HashMismatch {
        index: usize,
        expected: u64,
        got: u64,
    },
    #[error("trace ends without a clash: node {0} has no atomic clash")]
    NoClash(NodeId),
}

/// One applied rule instance.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum StepKind {
    /// Disjunction expansion: add both disjuncts of `formula` at `node`.
    OrExpand { node: NodeId, formula: Formula },
    /// Conjunction branching on `formula` at `node`; the trace forks.
    AndBranch { node: NodeId, formula: Formula },
    /// Automaton propagation: a diamond spawns its initial label.
    DiaInit {
        node: NodeId,
        letter: Letter,
        formula: Formula,
        state: StateId,
    },
    /// Automaton propagation: a final-state label releases its formula.
    FinalRelease {
        node: NodeId,
        state: StateId,
        formula: Formula,
    },
    /// Automaton propagation: label pushed down an edge.
    LabelDown {
        from: NodeId,
        to: NodeId,
        letter: Letter,
        from_state: StateId,
        to_state: StateId,
        formula: Formula,
    },
    /// Automaton propagation: label pushed up an edge (via a bar
    /// transition).
    LabelUp {
        from: NodeId,
        to: NodeId,
        letter: Letter,
        from_state: StateId,
        to_state: StateId,
        formula: Formula,
    },
    /// Grammar propagation: a diamond body lands at a node reachable in the
    /// intersection of the propagation automaton and the letter's language.
    GrammarProp {
        from: NodeId,
        to: NodeId,
        letter: Letter,
        formula: Formula,
    },
    /// Realisation of a box at an internal node by a fresh child.
    RealiseInternal {
        node: NodeId,
        letter: Letter,
        formula: Formula,
    },
    /// Expansion of an unrealised leaf by a fresh child.
    ExpandLeaf {
        node: NodeId,
        letter: Letter,
        formula: Formula,
    },
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct Step {
    #[serde(flatten)]
    pub kind: StepKind,
    /// Stable hash of the sequent after the step was applied.
    pub sequent_hash: u64,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trace {
    /// Terminal: an atomic clash closes the branch.
    Closed { node: NodeId, atom: String },
    Step {
        #[serde(flatten)]
        step: Step,
        rest: Box<Trace>,
    },
    Branch {
        #[serde(flatten)]
        step: Step,
        left: Box<Trace>,
        right: Box<Trace>,
    },
}

impl Trace {
    pub fn step_count(&self) -> usize {
        match self {
            Trace::Closed { .. } => 0,
            Trace::Step { rest, .. } => 1 + rest.step_count(),
            Trace::Branch { left, right, .. } => 1 + left.step_count() + right.step_count(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Trace::Closed { .. } => 0,
            Trace::Step { rest, .. } => 1 + rest.depth(),
            Trace::Branch { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

/// The rule system a trace belongs to, with whatever the side conditions
/// need: the automaton for automaton-based traces, the system and height
/// bound for grammar-based ones.
pub enum RuleSystem<'a> {
    Auto(&'a UserFsa),
    Grammar {
        system: &'a SemiThueSystem,
        height_bound: usize,
    },
}

/// Re-run a trace from `initial`, checking legality of every step.
pub fn replay(trace: &Trace, initial: &NestedSequent, rules: &RuleSystem) -> Result<(), ReplayError> {
    let mut sequent = initial.clone();
    let mut index = 0;
    replay_inner(trace, &mut sequent, rules, &mut index)
}

fn illegal(index: usize, msg: impl Into<String>) -> ReplayError {
    ReplayError::IllegalStep {
        index,
        msg: msg.into(),
    }
}

fn replay_inner(
    trace: &Trace,
    sequent: &mut NestedSequent,
    rules: &RuleSystem,
    index: &mut usize,
) -> Result<(), ReplayError> {
    match trace {
        Trace::Closed { node, atom } => {
            let contents = &sequent.node(*node).formulas;
            if contents.contains(&Formula::Atom(atom.clone()))
                && contents.contains(&Formula::NegAtom(atom.clone()))
            {
                Ok(())
            } else {
                Err(ReplayError::NoClash(*node))
            }
        }
        Trace::Step { step, rest } => {
            let i = *index;
            *index += 1;
            apply_step(&step.kind, sequent, rules, i)?;
            check_hash(sequent, step, i)?;
            replay_inner(rest, sequent, rules, index)
        }
        Trace::Branch { step, left, right } => {
            let i = *index;
            *index += 1;
            let StepKind::AndBranch { node, formula } = &step.kind else {
                return Err(illegal(i, "branching on a non-branching step"));
            };
            let Formula::And(a, b) = formula else {
                return Err(illegal(i, "branch formula is not a conjunction"));
            };
            let contents = &sequent.node(*node).formulas;
            if !contents.contains(formula) {
                return Err(illegal(i, format!("{formula} not present at {node}")));
            }
            if contents.contains(a) || contents.contains(b) {
                return Err(illegal(i, "branching on an already-satisfied conjunction"));
            }
            let mut left_seq = sequent.clone();
            left_seq
                .add_formulas(*node, [(**a).clone()])
                .map_err(|e| illegal(i, e.to_string()))?;
            // The recorded hash is that of the left premise.
            check_hash(&left_seq, step, i)?;
            let mut right_seq = sequent.clone();
            right_seq
                .add_formulas(*node, [(**b).clone()])
                .map_err(|e| illegal(i, e.to_string()))?;
            replay_inner(left, &mut left_seq, rules, index)?;
            replay_inner(right, &mut right_seq, rules, index)
        }
    }
}

fn check_hash(sequent: &NestedSequent, step: &Step, index: usize) -> Result<(), ReplayError> {
    let got = sequent.stable_hash();
    if got != step.sequent_hash {
        Err(ReplayError::HashMismatch {
            index,
            expected: step.sequent_hash,
            got,
        })
    } else {
        Ok(())
    }
}

fn apply_step(
    kind: &StepKind,
    sequent: &mut NestedSequent,
    rules: &RuleSystem,
    i: usize,
) -> Result<(), ReplayError> {
    let auto = |msg: &str| -> Result<&UserFsa, ReplayError> {
        match rules {
            RuleSystem::Auto(fsa) => Ok(fsa),
            RuleSystem::Grammar { .. } => Err(illegal(i, format!("{msg} in a grammar-based trace"))),
        }
    };
    match kind {
        StepKind::AndBranch { .. } => Err(illegal(i, "conjunction step without branch structure")),
        StepKind::OrExpand { node, formula } => {
            let Formula::Or(a, b) = formula else {
                return Err(illegal(i, "or-expansion on a non-disjunction"));
            };
            let contents = &sequent.node(*node).formulas;
            if !contents.contains(formula) {
                return Err(illegal(i, format!("{formula} not present at {node}")));
            }
            if contents.contains(a) && contents.contains(b) {
                return Err(illegal(i, "disjunction already expanded"));
            }
            sequent
                .add_formulas(*node, [(**a).clone(), (**b).clone()])
                .map_err(|e| illegal(i, e.to_string()))?;
            Ok(())
        }
        StepKind::DiaInit {
            node,
            letter,
            formula,
            state,
        } => {
            let fsa = auto("automaton step")?;
            let dia = Formula::dia(letter.clone(), formula.clone());
            if !sequent.node(*node).formulas.contains(&dia) {
                return Err(illegal(i, format!("{dia} not present at {node}")));
            }
            match fsa.init_of.get(letter) {
                Some(s) if s == state => {}
                _ => return Err(illegal(i, format!("{state} is not the initial state for {letter}"))),
            }
            let member = (state.clone(), formula.clone());
            if sequent.node(*node).labeled.contains(&member) {
                return Err(illegal(i, "label already present"));
            }
            sequent
                .add_members(*node, [Member::Labeled(state.clone(), formula.clone())])
                .map_err(|e| illegal(i, e.to_string()))?;
            Ok(())
        }
        StepKind::FinalRelease {
            node,
            state,
            formula,
        } => {
            let fsa = auto("automaton step")?;
            if !fsa.finals.contains(state) {
                return Err(illegal(i, format!("{state} is not a final state")));
            }
            if !sequent
                .node(*node)
                .labeled
                .contains(&(state.clone(), formula.clone()))
            {
                return Err(illegal(i, format!("{state}:{formula} not present at {node}")));
            }
            if sequent.node(*node).formulas.contains(formula) {
                return Err(illegal(i, "formula already released"));
            }
            sequent
                .add_formulas(*node, [formula.clone()])
                .map_err(|e| illegal(i, e.to_string()))?;
            Ok(())
        }
        StepKind::LabelDown {
            from,
            to,
            letter,
            from_state,
            to_state,
            formula,
        }
        | StepKind::LabelUp {
            from,
            to,
            letter,
            from_state,
            to_state,
            formula,
        } => {
            let fsa = auto("automaton step")?;
            let down = matches!(kind, StepKind::LabelDown { .. });
            // Down: edge from -> to, automaton transition on the edge
            // letter. Up: edge to -> from, transition on the bar letter.
            let edge_ok = if down {
                sequent
                    .children(*from)
                    .iter()
                    .any(|(l, j)| l == letter && j == to)
            } else {
                sequent
                    .children(*to)
                    .iter()
                    .any(|(l, j)| l == letter && j == from)
            };
            if !edge_ok {
                return Err(illegal(i, format!("no {letter}-edge between {from} and {to}")));
            }
            let trans_letter = if down { letter.clone() } else { letter.bar() };
            if !fsa
                .transitions
                .contains(&(from_state.clone(), trans_letter.clone(), to_state.clone()))
            {
                return Err(illegal(
                    i,
                    format!("no automaton transition {from_state} -{trans_letter}-> {to_state}"),
                ));
            }
            if !sequent
                .node(*from)
                .labeled
                .contains(&(from_state.clone(), formula.clone()))
            {
                return Err(illegal(i, format!("{from_state}:{formula} not present at {from}")));
            }
            let member = (to_state.clone(), formula.clone());
            if sequent.node(*to).labeled.contains(&member) {
                return Err(illegal(i, "label already present at target"));
            }
            sequent
                .add_members(*to, [Member::Labeled(to_state.clone(), formula.clone())])
                .map_err(|e| illegal(i, e.to_string()))?;
            Ok(())
        }
        StepKind::GrammarProp {
            from,
            to,
            letter,
            formula,
        } => {
            let RuleSystem::Grammar { system, .. } = rules else {
                return Err(illegal(i, "grammar step in an automaton-based trace"));
            };
            let dia = Formula::dia(letter.clone(), formula.clone());
            if !sequent.node(*from).formulas.contains(&dia) {
                return Err(illegal(i, format!("{dia} not present at {from}")));
            }
            if sequent.node(*to).formulas.contains(formula) {
                return Err(illegal(i, "formula already present at target"));
            }
            let p = build_propagation_automaton(sequent, *from, *to)
                .map_err(|e| illegal(i, e.to_string()))?;
            let g = crate::grammar::cfg_for(system, letter).map_err(|e| illegal(i, e.to_string()))?;
            if !intersection_nonempty(&p, &g) {
                return Err(illegal(
                    i,
                    format!("propagation of {dia} from {from} to {to} has an empty intersection"),
                ));
            }
            sequent
                .add_formulas(*to, [formula.clone()])
                .map_err(|e| illegal(i, e.to_string()))?;
            Ok(())
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
            let realise = matches!(kind, StepKind::RealiseInternal { .. });
            let boxed = Formula::boxed(letter.clone(), formula.clone());
            if !sequent.node(*node).formulas.contains(&boxed) {
                return Err(illegal(i, format!("{boxed} not present at {node}")));
            }
            if sequent
                .children(*node)
                .iter()
                .any(|(l, j)| l == letter && sequent.node(*j).formulas.contains(formula))
            {
                return Err(illegal(i, "box already realised"));
            }
            if realise {
                if sequent.is_leaf(*node) {
                    return Err(illegal(i, "internal realisation applied to a leaf"));
                }
            } else {
                if !sequent.is_leaf(*node) {
                    return Err(illegal(i, "leaf expansion applied to an internal node"));
                }
                if let RuleSystem::Grammar { height_bound, .. } = rules {
                    if sequent.height(*node) > *height_bound {
                        return Err(illegal(
                            i,
                            format!("leaf {node} is above the height bound {height_bound}"),
                        ));
                    }
                }
            }
            sequent
                .add_child(*node, letter.clone(), [formula.clone()])
                .map_err(|e| illegal(i, e.to_string()))?;
            Ok(())
        }
    }
}
