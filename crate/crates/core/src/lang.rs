//! Finite state automata, propagation automata over sequent trees, and
//! emptiness of CFG/NFA intersections.
//!
//! The intersection test is the engine behind the diamond-propagation side
//! condition: a propagation automaton between two tree nodes is intersected
//! with the language generated from a letter, and propagation fires iff the
//! intersection is nonempty.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::hash::Hash;

use serde::Deserialize;
use thiserror::Error;

use crate::formula::{Letter, Word};
use crate::grammar::{Cfg, GrammarError, SemiThueSystem};
use crate::sequent::{NestedSequent, NodeId, SequentError};

#[derive(Debug, Error)]
pub enum LangError {
    #[error("no initial state declared for letter {0}")]
    MissingInit(Letter),
    #[error("automaton refers to undeclared state {0:?}")]
    UnknownState(String),
    #[error("transition [{0:?}, {1:?}, {2:?}] has no letter (silent transitions are rejected)")]
    SilentTransition(String, String, String),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Sequent(#[from] SequentError),
    #[error("invalid automaton file: {0}")]
    Format(#[from] serde_json::Error),
}

/// A finite state automaton without silent transitions. The state type is
/// generic: user-supplied automata use string names, propagation automata use
/// sequent node ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fsa<S> {
    pub states: BTreeSet<S>,
    pub initials: BTreeSet<S>,
    pub finals: BTreeSet<S>,
    pub transitions: BTreeSet<(S, Letter, S)>,
    /// Designated initial state per letter; populated only for user-supplied
    /// automata, where each letter must have exactly one.
    pub init_of: BTreeMap<Letter, S>,
}

impl<S: Clone + Ord> Fsa<S> {
    pub fn new() -> Fsa<S> {
        Fsa {
            states: BTreeSet::new(),
            initials: BTreeSet::new(),
            finals: BTreeSet::new(),
            transitions: BTreeSet::new(),
            init_of: BTreeMap::new(),
        }
    }

    pub fn add_transition(&mut self, from: S, letter: Letter, to: S) {
        self.states.insert(from.clone());
        self.states.insert(to.clone());
        self.transitions.insert((from, letter, to));
    }

    /// NFA simulation from the given start set.
    pub fn accepts_from(&self, starts: &BTreeSet<S>, word: &[Letter]) -> bool {
        let mut current: BTreeSet<&S> = starts.iter().collect();
        for letter in word {
            let mut next = BTreeSet::new();
            for (from, l, to) in &self.transitions {
                if l == letter && current.contains(from) {
                    next.insert(to);
                }
            }
            current = next;
            if current.is_empty() {
                return false;
            }
        }
        current.iter().any(|s| self.finals.contains(*s))
    }

    /// All accepted words of length at most `max_len`, by path enumeration.
    pub fn accepted_words(&self, starts: &BTreeSet<S>, max_len: usize) -> BTreeSet<Word> {
        let mut out = BTreeSet::new();
        let mut queue: VecDeque<(BTreeSet<&S>, Word)> = VecDeque::new();
        queue.push_back((starts.iter().collect(), Vec::new()));
        while let Some((current, word)) = queue.pop_front() {
            if current.iter().any(|s| self.finals.contains(*s)) {
                out.insert(word.clone());
            }
            if word.len() == max_len {
                continue;
            }
            let letters: BTreeSet<&Letter> = self
                .transitions
                .iter()
                .filter(|(from, _, _)| current.contains(from))
                .map(|(_, l, _)| l)
                .collect();
            for letter in letters {
                let next: BTreeSet<&S> = self
                    .transitions
                    .iter()
                    .filter(|(from, l, _)| l == letter && current.contains(from))
                    .map(|(_, _, to)| to)
                    .collect();
                let mut w = word.clone();
                w.push(letter.clone());
                queue.push_back((next, w));
            }
        }
        out
    }
}

impl<S: Clone + Ord> Default for Fsa<S> {
    fn default() -> Self {
        Fsa::new()
    }
}

/// Is the intersection of the two automata's languages nonempty? Plain
/// product reachability over matching letters.
pub fn product_nonempty<S1, S2>(x: &Fsa<S1>, y: &Fsa<S2>) -> bool
where
    S1: Clone + Ord + Hash,
    S2: Clone + Ord + Hash,
{
    let mut seen: HashSet<(&S1, &S2)> = HashSet::new();
    let mut queue: VecDeque<(&S1, &S2)> = VecDeque::new();
    for i in &x.initials {
        for j in &y.initials {
            if seen.insert((i, j)) {
                queue.push_back((i, j));
            }
        }
    }
    while let Some((p, q)) = queue.pop_front() {
        if x.finals.contains(p) && y.finals.contains(q) {
            return true;
        }
        for (f1, l1, t1) in &x.transitions {
            if f1 != p {
                continue;
            }
            for (f2, l2, t2) in &y.transitions {
                if f2 == q && l1 == l2 && seen.insert((t1, t2)) {
                    queue.push_back((t1, t2));
                }
            }
        }
    }
    false
}

/// User-facing automaton: states carry names, and every letter of interest
/// has a designated unique initial state.
pub type UserFsa = Fsa<String>;

#[derive(Deserialize)]
struct FsaFile {
    states: Vec<String>,
    finals: Vec<String>,
    init: BTreeMap<String, String>,
    delta: Vec<(String, String, String)>,
}

/// Load an automaton from its JSON form. Silent transitions (empty letter)
/// and references to undeclared states are rejected.
pub fn parse_fsa(input: &str) -> Result<UserFsa, LangError> {
    let file: FsaFile = serde_json::from_str(input)?;
    let states: BTreeSet<String> = file.states.iter().cloned().collect();
    let mut fsa = Fsa::new();
    fsa.states = states.clone();
    let check = |s: &String| -> Result<(), LangError> {
        if states.contains(s) {
            Ok(())
        } else {
            Err(LangError::UnknownState(s.clone()))
        }
    };
    for s in &file.finals {
        check(s)?;
        fsa.finals.insert(s.clone());
    }
    for (from, letter, to) in &file.delta {
        check(from)?;
        check(to)?;
        if letter.is_empty() {
            return Err(LangError::SilentTransition(
                from.clone(),
                letter.clone(),
                to.clone(),
            ));
        }
        let letter: Letter = letter
            .parse()
            .map_err(|_| LangError::SilentTransition(from.clone(), letter.clone(), to.clone()))?;
        fsa.transitions.insert((from.clone(), letter, to.clone()));
    }
    for (letter_text, state) in &file.init {
        check(state)?;
        let letter: Letter = letter_text
            .parse()
            .map_err(|_| LangError::UnknownState(letter_text.clone()))?;
        fsa.initials.insert(state.clone());
        fsa.init_of.insert(letter, state.clone());
    }
    Ok(fsa)
}

/// Membership in `L(A_a)`: the automaton restricted to `init_a` as its only
/// initial state.
pub fn fsa_membership(fsa: &UserFsa, letter: &Letter, word: &[Letter]) -> Result<bool, LangError> {
    let init = fsa
        .init_of
        .get(letter)
        .ok_or_else(|| LangError::MissingInit(letter.clone()))?;
    let starts = BTreeSet::from([init.clone()]);
    Ok(fsa.accepts_from(&starts, word))
}

/// A disagreement found by bounded cross-validation of an automaton against
/// a semi-Thue system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disagreement {
    pub letter: Letter,
    pub word: Word,
    pub fsa_accepts: bool,
    pub grammar_derives: bool,
}

/// Compare `L(A_a)` against the words derivable from `a`, for every letter of
/// the system's alphabet and every word up to `max_len`. An empty report
/// means the automaton is consistent with the system up to that length; full
/// equivalence is not certified.
pub fn check_fsa_matches_grammar(
    fsa: &UserFsa,
    system: &SemiThueSystem,
    max_len: usize,
) -> Result<Vec<Disagreement>, LangError> {
    let alphabet: Vec<Letter> = system.alphabet().iter().cloned().collect();
    let mut disagreements = Vec::new();
    for a in &alphabet {
        let enumeration = system.enumerate_language(a, max_len);
        if enumeration.truncated {
            return Err(GrammarError::EnumerationCap {
                letter: a.clone(),
                fuel: crate::grammar::DEFAULT_ENUM_FUEL,
            }
            .into());
        }
        // Every word over the alphabet up to max_len.
        let mut words: Vec<Word> = vec![Vec::new()];
        let mut layer: Vec<Word> = vec![Vec::new()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &layer {
                for l in &alphabet {
                    let mut w2 = w.clone();
                    w2.push(l.clone());
                    next.push(w2);
                }
            }
            words.extend(next.iter().cloned());
            layer = next;
        }
        for w in &words {
            let fsa_accepts = fsa_membership(fsa, a, w)?;
            let grammar_derives = enumeration.words.contains(w);
            if fsa_accepts != grammar_derives {
                disagreements.push(Disagreement {
                    letter: a.clone(),
                    word: w.clone(),
                    fsa_accepts,
                    grammar_derives,
                });
            }
        }
    }
    Ok(disagreements)
}

/// The automaton associated with a nested sequent and a pair of nodes:
/// states are the tree's nodes, each edge contributes a transition and its
/// dual, the first node is initial and the second final.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropagationAutomaton {
    pub fsa: Fsa<NodeId>,
    pub initial: NodeId,
    pub final_: NodeId,
}

pub fn build_propagation_automaton(
    sequent: &NestedSequent,
    i: NodeId,
    j: NodeId,
) -> Result<PropagationAutomaton, SequentError> {
    sequent.check_node(i)?;
    sequent.check_node(j)?;
    let mut fsa = Fsa::new();
    for node in sequent.node_ids() {
        fsa.states.insert(node);
        for (letter, child) in sequent.children(node) {
            fsa.transitions.insert((node, letter.clone(), *child));
            fsa.transitions.insert((*child, letter.bar(), node));
        }
    }
    fsa.initials.insert(i);
    fsa.finals.insert(j);
    Ok(PropagationAutomaton {
        fsa,
        initial: i,
        final_: j,
    })
}

impl PropagationAutomaton {
    /// Apply a postfix state substitution to states, initial/final markers
    /// and both endpoints of every transition.
    pub fn remap(&self, assignment: &[(NodeId, NodeId)]) -> PropagationAutomaton {
        let map = |s: NodeId| -> NodeId {
            assignment
                .iter()
                .find(|(from, _)| *from == s)
                .map(|(_, to)| *to)
                .unwrap_or(s)
        };
        let mut fsa = Fsa::new();
        fsa.states = self.fsa.states.iter().map(|&s| map(s)).collect();
        fsa.initials = self.fsa.initials.iter().map(|&s| map(s)).collect();
        fsa.finals = self.fsa.finals.iter().map(|&s| map(s)).collect();
        fsa.transitions = self
            .fsa
            .transitions
            .iter()
            .map(|(f, l, t)| (map(*f), l.clone(), map(*t)))
            .collect();
        PropagationAutomaton {
            fsa,
            initial: map(self.initial),
            final_: map(self.final_),
        }
    }

    /// The duality invariant: every transition has its bar-reverse.
    pub fn duality_holds(&self) -> bool {
        self.fsa
            .transitions
            .iter()
            .all(|(f, l, t)| self.fsa.transitions.contains(&(*t, l.bar(), *f)))
    }
}

/// Identifier of a nonterminal in the binarized grammar.
type NtId = usize;

/// A context-free grammar binarized for the intersection fixpoint and CYK:
/// every production is a terminal rule, a unit rule, a binary rule, or an
/// epsilon rule. Nullability and the transitive unit closure are
/// precomputed.
#[derive(Debug, Clone)]
pub struct BinCfg {
    nt_count: usize,
    start: NtId,
    nt_of_letter: BTreeMap<Letter, NtId>,
    term_rules: Vec<(NtId, Letter)>,
    unit_rules: Vec<(NtId, NtId)>,
    bin_rules: Vec<(NtId, NtId, NtId)>,
    nullable: Vec<bool>,
    /// unit_closure[x] = all y with x =>* y through unit rules (includes x).
    unit_closure: Vec<Vec<NtId>>,
}

impl BinCfg {
    pub fn from_cfg(cfg: &Cfg) -> BinCfg {
        let mut nt_of_letter = BTreeMap::new();
        for l in &cfg.alphabet {
            let id = nt_of_letter.len();
            nt_of_letter.insert(l.clone(), id);
        }
        let mut nt_count = nt_of_letter.len();
        let mut term_rules = Vec::new();
        let mut unit_rules = Vec::new();
        let mut bin_rules = Vec::new();
        let mut eps_rules: Vec<NtId> = Vec::new();

        // Letters derive themselves: N_b -> b.
        for (l, &id) in &nt_of_letter {
            term_rules.push((id, l.clone()));
        }

        for (lhs, rhs) in &cfg.rules {
            let lhs_id = nt_of_letter[lhs];
            let ids: Vec<NtId> = rhs.iter().map(|l| nt_of_letter[l]).collect();
            match ids.len() {
                0 => eps_rules.push(lhs_id),
                1 => unit_rules.push((lhs_id, ids[0])),
                2 => bin_rules.push((lhs_id, ids[0], ids[1])),
                _ => {
                    // Chain with fresh nonterminals: X -> Y1 T1, T1 -> Y2 T2, ...
                    let mut head = lhs_id;
                    for k in 0..ids.len() - 2 {
                        let fresh = nt_count;
                        nt_count += 1;
                        bin_rules.push((head, ids[k], fresh));
                        head = fresh;
                    }
                    bin_rules.push((head, ids[ids.len() - 2], ids[ids.len() - 1]));
                }
            }
        }

        // Nullable fixpoint.
        let mut nullable = vec![false; nt_count];
        for &x in &eps_rules {
            nullable[x] = true;
        }
        let mut changed = true;
        while changed {
            changed = false;
            for &(x, y) in &unit_rules {
                if nullable[y] && !nullable[x] {
                    nullable[x] = true;
                    changed = true;
                }
            }
            for &(x, y, z) in &bin_rules {
                if nullable[y] && nullable[z] && !nullable[x] {
                    nullable[x] = true;
                    changed = true;
                }
            }
        }

        // Transitive closure of unit derivability, including the effective
        // units X -> Y from binary rules with a nullable partner.
        let mut eff_units: Vec<(NtId, NtId)> = unit_rules.clone();
        for &(x, y, z) in &bin_rules {
            if nullable[z] {
                eff_units.push((x, y));
            }
            if nullable[y] {
                eff_units.push((x, z));
            }
        }
        let mut closure: Vec<BTreeSet<NtId>> = (0..nt_count).map(|x| BTreeSet::from([x])).collect();
        let mut changed = true;
        while changed {
            changed = false;
            for &(x, y) in &eff_units {
                let extra: Vec<NtId> = closure[y]
                    .iter()
                    .filter(|z| !closure[x].contains(z))
                    .cloned()
                    .collect();
                if !extra.is_empty() {
                    closure[x].extend(extra);
                    changed = true;
                }
            }
        }

        BinCfg {
            nt_count,
            start: nt_of_letter[&cfg.start],
            nt_of_letter,
            term_rules,
            unit_rules,
            bin_rules,
            nullable,
            unit_closure: closure.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }

    pub fn nt_for(&self, letter: &Letter) -> Option<NtId> {
        self.nt_of_letter.get(letter).copied()
    }

    /// CYK membership test, independent of the intersection fixpoint.
    pub fn accepts(&self, word: &[Letter]) -> bool {
        self.derives(self.start, word)
    }

    pub fn derives_letter(&self, letter: &Letter, word: &[Letter]) -> bool {
        match self.nt_for(letter) {
            Some(nt) => self.derives(nt, word),
            None => false,
        }
    }

    fn derives(&self, nt: NtId, word: &[Letter]) -> bool {
        let n = word.len();
        if n == 0 {
            return self.nullable[nt];
        }
        // chart[i][len-1] = set of nonterminals deriving word[i..i+len].
        let mut chart: Vec<Vec<BTreeSet<NtId>>> = vec![vec![BTreeSet::new(); n]; n];
        for i in 0..n {
            let mut cell = BTreeSet::new();
            for (x, l) in &self.term_rules {
                if l == &word[i] {
                    cell.insert(*x);
                }
            }
            self.close_cell(&mut cell);
            chart[i][0] = cell;
        }
        for len in 2..=n {
            for i in 0..=(n - len) {
                let mut cell = BTreeSet::new();
                for split in 1..len {
                    for &(x, y, z) in &self.bin_rules {
                        if chart[i][split - 1].contains(&y)
                            && chart[i + split][len - split - 1].contains(&z)
                        {
                            cell.insert(x);
                        }
                    }
                }
                self.close_cell(&mut cell);
                chart[i][len - 1] = cell;
            }
        }
        chart[0][n - 1].contains(&nt)
    }

    // Close a CYK cell under (effective) unit derivability.
    fn close_cell(&self, cell: &mut BTreeSet<NtId>) {
        let base: Vec<NtId> = cell.iter().cloned().collect();
        for y in base {
            for x in 0..self.nt_count {
                if self.unit_closure[x].contains(&y) {
                    cell.insert(x);
                }
            }
        }
    }
}

/// All triples `(p, X, q)` such that nonterminal `X` derives some word that
/// drives the automaton from state `p` to state `q`. This is the
/// reachability core of the regular/context-free intersection construction;
/// emptiness of `L(P) ∩ L(G)` for any start/final choice reduces to a lookup.
#[derive(Debug, Clone)]
pub struct IntersectionTriples {
    state_index: HashMap<NodeId, usize>,
    triples: HashSet<(usize, NtId, usize)>,
}

impl IntersectionTriples {
    pub fn compute(states: &BTreeSet<NodeId>, transitions: &BTreeSet<(NodeId, Letter, NodeId)>, g: &BinCfg) -> IntersectionTriples {
        let state_index: HashMap<NodeId, usize> =
            states.iter().enumerate().map(|(k, &s)| (s, k)).collect();
        let n = state_index.len();
        let trans: Vec<(usize, Letter, usize)> = transitions
            .iter()
            .map(|(f, l, t)| (state_index[f], l.clone(), state_index[t]))
            .collect();

        let mut triples: HashSet<(usize, NtId, usize)> = HashSet::new();
        let mut worklist: VecDeque<(usize, NtId, usize)> = VecDeque::new();
        // Index triples by left state and by right state for the binary-rule
        // joins.
        let mut by_left: Vec<Vec<(NtId, usize)>> = vec![Vec::new(); n];
        let mut by_right: Vec<Vec<(usize, NtId)>> = vec![Vec::new(); n];
        // For each nonterminal, the binary rules it appears in.
        let mut bin_by_y: HashMap<NtId, Vec<(NtId, NtId)>> = HashMap::new(); // y -> (x, z)
        let mut bin_by_z: HashMap<NtId, Vec<(NtId, NtId)>> = HashMap::new(); // z -> (x, y)
        let mut units_by_y: HashMap<NtId, Vec<NtId>> = HashMap::new(); // y -> xs
        for &(x, y, z) in &g.bin_rules {
            bin_by_y.entry(y).or_default().push((x, z));
            bin_by_z.entry(z).or_default().push((x, y));
        }
        for &(x, y) in &g.unit_rules {
            units_by_y.entry(y).or_default().push(x);
        }

        let add = |t: (usize, NtId, usize),
                       triples: &mut HashSet<(usize, NtId, usize)>,
                       worklist: &mut VecDeque<(usize, NtId, usize)>,
                       by_left: &mut Vec<Vec<(NtId, usize)>>,
                       by_right: &mut Vec<Vec<(usize, NtId)>>| {
            if triples.insert(t) {
                by_left[t.0].push((t.1, t.2));
                by_right[t.2].push((t.0, t.1));
                worklist.push_back(t);
            }
        };

        for (p, letter, q) in &trans {
            for (x, l) in &g.term_rules {
                if l == letter {
                    add((*p, *x, *q), &mut triples, &mut worklist, &mut by_left, &mut by_right);
                }
            }
        }
        for p in 0..n {
            for (x, is_nullable) in g.nullable.iter().enumerate() {
                if *is_nullable {
                    add((p, x, p), &mut triples, &mut worklist, &mut by_left, &mut by_right);
                }
            }
        }

        while let Some((p, y, q)) = worklist.pop_front() {
            if let Some(xs) = units_by_y.get(&y) {
                for &x in xs {
                    add((p, x, q), &mut triples, &mut worklist, &mut by_left, &mut by_right);
                }
            }
            // (p, Y, q) as the left part: X -> Y Z needs (q, Z, r).
            if let Some(rules) = bin_by_y.get(&y) {
                let continuations: Vec<(NtId, usize)> = by_left[q].clone();
                for &(x, z) in rules {
                    for &(z2, r) in &continuations {
                        if z2 == z {
                            add((p, x, r), &mut triples, &mut worklist, &mut by_left, &mut by_right);
                        }
                    }
                }
            }
            // (p, Z, q) as the right part: X -> Y Z needs (o, Y, p).
            if let Some(rules) = bin_by_z.get(&y) {
                let beginnings: Vec<(usize, NtId)> = by_right[p].clone();
                for &(x, yy) in rules {
                    for &(o, y2) in &beginnings {
                        if y2 == yy {
                            add((o, x, q), &mut triples, &mut worklist, &mut by_left, &mut by_right);
                        }
                    }
                }
            }
        }

        IntersectionTriples {
            state_index,
            triples,
        }
    }

    pub fn derives_between(&self, from: NodeId, nt: NtId, to: NodeId) -> bool {
        match (self.state_index.get(&from), self.state_index.get(&to)) {
            (Some(&p), Some(&q)) => self.triples.contains(&(p, nt, q)),
            _ => false,
        }
    }
}

/// Is `L(P) ∩ L(G)` nonempty? `P` must have a single initial and a single
/// final state.
pub fn intersection_nonempty(p: &PropagationAutomaton, g: &Cfg) -> bool {
    let bin = BinCfg::from_cfg(g);
    let triples = IntersectionTriples::compute(&p.fsa.states, &p.fsa.transitions, &bin);
    let start = match bin.nt_for(&g.start) {
        Some(nt) => nt,
        None => return false,
    };
    triples.derives_between(p.initial, start, p.final_)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Formula;
    use crate::grammar::{cfg_for, Production};

    fn a() -> Letter {
        Letter::plain("a")
    }

    fn ab() -> Letter {
        Letter::barred("a")
    }

    fn b() -> Letter {
        Letter::plain("b")
    }

    fn single_node_sequent() -> NestedSequent {
        NestedSequent::from_formula(&Formula::atom("p"))
    }

    fn two_node_sequent() -> (NestedSequent, NodeId, NodeId) {
        let mut s = NestedSequent::from_formula(&Formula::atom("p"));
        let root = s.root();
        let child = s
            .add_child(root, a(), [Formula::atom("q")])
            .unwrap();
        (s, root, child)
    }

    #[test]
    fn propagation_automaton_single_node() {
        let s = single_node_sequent();
        let p = build_propagation_automaton(&s, s.root(), s.root()).unwrap();
        assert!(p.fsa.transitions.is_empty());
        let words = p.fsa.accepted_words(&p.fsa.initials, 2);
        assert_eq!(words, BTreeSet::from([vec![]]));
    }

    #[test]
    fn propagation_automaton_edge_words() {
        let (s, root, child) = two_node_sequent();
        let down = build_propagation_automaton(&s, root, child).unwrap();
        assert!(down.duality_holds());
        let words = down.fsa.accepted_words(&down.fsa.initials, 3);
        // Shortest accepted word is `a`; longer words bounce along the edge.
        assert!(words.contains(&vec![a()]));
        assert!(words.contains(&vec![a(), ab(), a()]));
        assert_eq!(words.iter().map(Vec::len).min(), Some(1));

        let up = build_propagation_automaton(&s, child, root).unwrap();
        let words = up.fsa.accepted_words(&up.fsa.initials, 1);
        assert_eq!(words, BTreeSet::from([vec![ab()]]));
    }

    #[test]
    fn remap_identity_and_merge() {
        let (s, root, child) = two_node_sequent();
        let p = build_propagation_automaton(&s, root, child).unwrap();
        assert_eq!(p.remap(&[]), p);

        let merged = p.remap(&[(child, root)]);
        assert!(merged.duality_holds());
        assert_eq!(merged.fsa.states.len(), 1);
        // Both transition labels survive as self-loops.
        assert!(merged.fsa.transitions.contains(&(root, a(), root)));
        assert!(merged.fsa.transitions.contains(&(root, ab(), root)));
    }

    #[test]
    fn remap_merging_only_grows_language() {
        let (s, root, child) = two_node_sequent();
        let p = build_propagation_automaton(&s, root, child).unwrap();
        let merged = p.remap(&[(child, root)]);
        let before = p.fsa.accepted_words(&p.fsa.initials, 5);
        let after = merged.fsa.accepted_words(&merged.fsa.initials, 5);
        assert!(after.is_superset(&before));
    }

    fn line_automaton(word: &[Letter]) -> PropagationAutomaton {
        // A non-dual automaton accepting exactly `word`; fine for
        // intersection tests, which do not rely on duality.
        let mut fsa: Fsa<NodeId> = Fsa::new();
        let ids: Vec<NodeId> = (0..=word.len() as u32).map(NodeId::test_id).collect();
        for (k, l) in word.iter().enumerate() {
            fsa.add_transition(ids[k], l.clone(), ids[k + 1]);
        }
        fsa.states.extend(ids.iter().copied());
        fsa.initials.insert(ids[0]);
        fsa.finals.insert(*ids.last().unwrap());
        PropagationAutomaton {
            fsa,
            initial: ids[0],
            final_: *ids.last().unwrap(),
        }
    }

    #[test]
    fn intersection_epsilon_case() {
        let s = crate::grammar::SemiThueSystem::new([Production::new(vec![a()], vec![])]).close();
        let g = cfg_for(&s, &a()).unwrap();
        let p = line_automaton(&[]);
        assert!(intersection_nonempty(&p, &g));
    }

    #[test]
    fn intersection_base_cases() {
        let mut s = crate::grammar::SemiThueSystem::empty();
        s.extend_alphabet([a(), b()]);
        let g = cfg_for(&s, &a()).unwrap();
        assert!(intersection_nonempty(&line_automaton(&[a()]), &g));
        assert!(!intersection_nonempty(&line_automaton(&[b()]), &g));
        assert!(!intersection_nonempty(&line_automaton(&[]), &g));
    }

    #[test]
    fn intersection_transitive() {
        let s = crate::grammar::SemiThueSystem::new([Production::new(vec![a()], vec![a(), a()])])
            .close();
        let g = cfg_for(&s, &a()).unwrap();
        assert!(intersection_nonempty(&line_automaton(&[a(), a(), a()]), &g));
        assert!(!intersection_nonempty(&line_automaton(&[a(), ab()]), &g));
    }

    #[test]
    fn cyk_agrees_with_enumeration() {
        let systems = [
            crate::grammar::SemiThueSystem::new([Production::new(vec![a()], vec![a(), a()])])
                .close(),
            crate::grammar::SemiThueSystem::new([Production::new(vec![a()], vec![])]).close(),
            crate::grammar::SemiThueSystem::new([Production::new(vec![a()], vec![ab()])]).close(),
            crate::grammar::SemiThueSystem::new([Production::new(vec![a()], vec![a(), b()])])
                .close(),
        ];
        for s in systems {
            for start in s.alphabet().clone() {
                let g = cfg_for(&s, &start).unwrap();
                let bin = BinCfg::from_cfg(&g);
                let e = s.enumerate_language(&start, 6);
                assert!(!e.truncated);
                let alphabet: Vec<Letter> = s.alphabet().iter().cloned().collect();
                let mut words: Vec<Word> = vec![Vec::new()];
                let mut layer: Vec<Word> = vec![Vec::new()];
                for _ in 0..6 {
                    let mut next = Vec::new();
                    for w in &layer {
                        for l in &alphabet {
                            let mut w2 = w.clone();
                            w2.push(l.clone());
                            next.push(w2);
                        }
                    }
                    words.extend(next.iter().cloned());
                    layer = next;
                }
                for w in &words {
                    assert_eq!(
                        bin.accepts(w),
                        e.words.contains(w),
                        "start {start}, word {:?}",
                        crate::formula::word_to_string(w)
                    );
                }
            }
        }
    }

    #[test]
    fn fsa_membership_examples() {
        // Automaton for a+ / (a^-)+.
        let json = r#"{
            "states": ["s0", "s1", "s2", "s3"],
            "finals": ["s1", "s3"],
            "init": {"a": "s0", "a^-": "s2"},
            "delta": [["s0", "a", "s1"], ["s1", "a", "s1"],
                      ["s2", "a^-", "s3"], ["s3", "a^-", "s3"]]
        }"#;
        let fsa = parse_fsa(json).unwrap();
        assert!(fsa_membership(&fsa, &a(), &[a(), a()]).unwrap());
        assert!(!fsa_membership(&fsa, &a(), &[ab()]).unwrap());
        assert!(!fsa_membership(&fsa, &a(), &[]).unwrap());
        assert!(fsa_membership(&fsa, &ab(), &[ab()]).unwrap());
        assert!(fsa_membership(&fsa, &b(), &[b()]).is_err());
    }

    #[test]
    fn fsa_membership_epsilon_when_init_final() {
        let json = r#"{
            "states": ["s0"],
            "finals": ["s0"],
            "init": {"a": "s0"},
            "delta": [["s0", "a", "s0"]]
        }"#;
        let fsa = parse_fsa(json).unwrap();
        assert!(fsa_membership(&fsa, &a(), &[]).unwrap());
    }

    #[test]
    fn fsa_loader_rejects_bad_input() {
        let silent = r#"{
            "states": ["s0", "s1"], "finals": ["s1"],
            "init": {"a": "s0"}, "delta": [["s0", "", "s1"]]
        }"#;
        assert!(matches!(parse_fsa(silent), Err(LangError::SilentTransition(..))));

        let unknown = r#"{
            "states": ["s0"], "finals": ["s9"],
            "init": {"a": "s0"}, "delta": []
        }"#;
        assert!(matches!(parse_fsa(unknown), Err(LangError::UnknownState(_))));
    }

    #[test]
    fn validation_catches_wrong_fsa() {
        let s = crate::grammar::SemiThueSystem::new([Production::new(vec![a()], vec![a(), a()])])
            .close();
        // Accepts exactly {a} / {a^-}: misses aa.
        let json = r#"{
            "states": ["s0", "s1", "s2", "s3"],
            "finals": ["s1", "s3"],
            "init": {"a": "s0", "a^-": "s2"},
            "delta": [["s0", "a", "s1"], ["s2", "a^-", "s3"]]
        }"#;
        let fsa = parse_fsa(json).unwrap();
        let report = check_fsa_matches_grammar(&fsa, &s, 2).unwrap();
        assert!(report
            .iter()
            .any(|d| d.letter == a() && d.word == vec![a(), a()] && !d.fsa_accepts));
    }

    #[test]
    fn validation_accepts_matching_fsa() {
        let s = crate::grammar::SemiThueSystem::new([Production::new(vec![a()], vec![a(), a()])])
            .close();
        let json = r#"{
            "states": ["s0", "s1", "s2", "s3"],
            "finals": ["s1", "s3"],
            "init": {"a": "s0", "a^-": "s2"},
            "delta": [["s0", "a", "s1"], ["s1", "a", "s1"],
                      ["s2", "a^-", "s3"], ["s3", "a^-", "s3"]]
        }"#;
        let fsa = parse_fsa(json).unwrap();
        assert!(check_fsa_matches_grammar(&fsa, &s, 4).unwrap().is_empty());
    }

    #[test]
    fn validation_propagates_truncation() {
        let s = crate::grammar::SemiThueSystem::new([
            Production::new(vec![a()], vec![a(), a()]),
            Production::new(vec![a()], vec![]),
        ])
        .close();
        let json = r#"{
            "states": ["s0"], "finals": ["s0"],
            "init": {"a": "s0", "a^-": "s0"},
            "delta": [["s0", "a", "s0"], ["s0", "a^-", "s0"]]
        }"#;
        let fsa = parse_fsa(json).unwrap();
        assert!(check_fsa_matches_grammar(&fsa, &s, 3).is_err());
    }
}
