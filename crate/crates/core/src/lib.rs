//! Proof search for multi-modal grammar logics with converse.
//!
//! The library provides formulas in negation normal form, semi-Thue
//! rewrite systems over an alphabet closed under converse, nested
//! sequents, two provers (an automaton-based decision procedure and a
//! grammar-based semi-decision procedure with iterative deepening), and
//! Kripke countermodel extraction with independent verification.

pub mod formula;
pub mod grammar;
pub mod lang;
pub mod parse;
pub mod prover_auto;
pub mod prover_grammar;
pub mod semantics;
pub mod sequent;
pub mod trace;

pub use formula::{bar_string, word_to_string, Formula, Letter, Word};
pub use grammar::{cfg_for, parse_system, Cfg, GrammarError, LoadedSystem, Production, SemiThueSystem};
pub use lang::{
    build_propagation_automaton, check_fsa_matches_grammar, fsa_membership, intersection_nonempty,
    parse_fsa, Disagreement, Fsa, LangError, PropagationAutomaton, UserFsa,
};
pub use parse::{parse_formula, ParseError};
pub use prover_auto::{prove1, stability_loops, AutoError, AutoStats, AutoVerdict};
pub use prover_grammar::{
    prove, prove2, KStats, Prove2Result, ProveConfig, ProveError, ProveOutcome, ProveStats,
    StabilityWitness,
};
pub use semantics::{
    brute_force_search, extract_countermodel_auto, extract_countermodel_grammar, KripkeModel,
    ModelError,
};
pub use sequent::{Member, NestedSequent, Node, NodeId, StateId};
pub use trace::{replay, ReplayError, RuleSystem, Step, StepKind, Trace};
