//! Kripke models, satisfaction, countermodel extraction from stable
//! sequents, and a brute-force small-model oracle.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};
use thiserror::Error;

use crate::formula::{Formula, Letter};
use crate::grammar::{cfg_for, SemiThueSystem};
use crate::lang::{BinCfg, Fsa, IntersectionTriples, product_nonempty, UserFsa};
use crate::prover_auto::stability_loops;
use crate::prover_grammar::StabilityWitness;
use crate::sequent::{NestedSequent, NodeId};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model json: {0}")]
    Format(String),
    #[error("unknown world {0}")]
    UnknownWorld(String),
    #[error("relation key {0} is not a positive letter")]
    BarredRelation(Letter),
    #[error("extraction precondition violated: {0}")]
    Precondition(String),
}

/// A finite Kripke model. Relations are stored per letter, barred letters
/// included; `add_edge` maintains converse closure, `add_edge_raw` does
/// not (extraction computes both polarities independently and closure is
/// then a checked property).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeModel {
    pub worlds: Vec<String>,
    rel: BTreeMap<Letter, BTreeSet<(usize, usize)>>,
    pub val: BTreeMap<String, BTreeSet<usize>>,
}

impl KripkeModel {
    pub fn new(worlds: Vec<String>) -> KripkeModel {
        KripkeModel {
            worlds,
            rel: BTreeMap::new(),
            val: BTreeMap::new(),
        }
    }

    pub fn world_index(&self, name: &str) -> Option<usize> {
        self.worlds.iter().position(|w| w == name)
    }

    pub fn add_edge(&mut self, letter: &Letter, x: usize, y: usize) {
        self.rel.entry(letter.clone()).or_default().insert((x, y));
        self.rel.entry(letter.bar()).or_default().insert((y, x));
    }

    pub fn add_edge_raw(&mut self, letter: &Letter, x: usize, y: usize) {
        self.rel.entry(letter.clone()).or_default().insert((x, y));
    }

    pub fn set_true(&mut self, atom: &str, w: usize) {
        self.val.entry(atom.to_string()).or_default().insert(w);
    }

    pub fn letters(&self) -> impl Iterator<Item = &Letter> {
        self.rel.keys()
    }

    pub fn edges(&self, letter: &Letter) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rel.get(letter).into_iter().flatten().copied()
    }

    pub fn has_edge(&self, letter: &Letter, x: usize, y: usize) -> bool {
        self.rel.get(letter).is_some_and(|r| r.contains(&(x, y)))
    }

    /// First violation of R_a = R_ā⁻¹, if any.
    pub fn check_converse_closure(&self) -> Result<(), (Letter, usize, usize)> {
        for (l, r) in &self.rel {
            for &(x, y) in r {
                if !self.has_edge(&l.bar(), y, x) {
                    return Err((l.clone(), x, y));
                }
            }
        }
        Ok(())
    }

    pub fn satisfies(&self, w: usize, f: &Formula) -> bool {
        match f {
            Formula::Atom(p) => self.val.get(p).is_some_and(|s| s.contains(&w)),
            Formula::NegAtom(p) => !self.val.get(p).is_some_and(|s| s.contains(&w)),
            Formula::Neg(a) => !self.satisfies(w, a),
            Formula::And(a, b) => self.satisfies(w, a) && self.satisfies(w, b),
            Formula::Or(a, b) => self.satisfies(w, a) || self.satisfies(w, b),
            Formula::Box(l, a) => self.edges(l).all(|(x, y)| x != w || self.satisfies(y, a)),
            Formula::Dia(l, a) => self.edges(l).any(|(x, y)| x == w && self.satisfies(y, a)),
        }
    }

    /// The composed relation R_u; R_ε is the identity.
    pub fn string_relation(&self, word: &[Letter]) -> BTreeSet<(usize, usize)> {
        let mut r: BTreeSet<(usize, usize)> = (0..self.worlds.len()).map(|x| (x, x)).collect();
        for l in word {
            let step = self.rel.get(l).cloned().unwrap_or_default();
            r = r
                .iter()
                .flat_map(|&(x, y)| {
                    step.iter()
                        .filter(move |&&(a, _)| a == y)
                        .map(move |&(_, z)| (x, z))
                })
                .collect();
        }
        r
    }

    /// Every production u → v holds as R_v ⊆ R_u, and the model is closed
    /// under converse.
    pub fn frame_satisfies(&self, system: &SemiThueSystem) -> bool {
        if self.check_converse_closure().is_err() {
            return false;
        }
        system.productions().iter().all(|p| {
            let ru = self.string_relation(&p.lhs);
            self.string_relation(&p.rhs).is_subset(&ru)
        })
    }

    /// Only positive letters are serialized; converse pairs are
    /// reconstructed on load.
    pub fn to_json(&self) -> Value {
        let rel: BTreeMap<String, Vec<Value>> = self
            .rel
            .iter()
            .filter(|(l, _)| !l.is_barred())
            .map(|(l, r)| {
                (
                    l.to_string(),
                    r.iter()
                        .map(|&(x, y)| json!([self.worlds[x], self.worlds[y]]))
                        .collect(),
                )
            })
            .collect();
        let val: BTreeMap<String, Vec<String>> = self
            .val
            .iter()
            .map(|(p, ws)| (p.clone(), ws.iter().map(|&w| self.worlds[w].clone()).collect()))
            .collect();
        json!({ "worlds": self.worlds, "rel": rel, "val": val })
    }

    pub fn from_json(v: &Value) -> Result<KripkeModel, ModelError> {
        let worlds: Vec<String> = v
            .get("worlds")
            .and_then(Value::as_array)
            .ok_or_else(|| ModelError::Format("missing worlds array".into()))?
            .iter()
            .map(|w| {
                w.as_str()
                    .map(String::from)
                    .ok_or_else(|| ModelError::Format("world is not a string".into()))
            })
            .collect::<Result<_, _>>()?;
        let mut model = KripkeModel::new(worlds);
        if let Some(rel) = v.get("rel") {
            let rel = rel
                .as_object()
                .ok_or_else(|| ModelError::Format("rel is not an object".into()))?;
            for (lname, pairs) in rel {
                let letter: Letter = lname
                    .parse()
                    .map_err(|e: String| ModelError::Format(e))?;
                if letter.is_barred() {
                    return Err(ModelError::BarredRelation(letter));
                }
                let pairs = pairs
                    .as_array()
                    .ok_or_else(|| ModelError::Format("rel entry is not an array".into()))?;
                for pair in pairs {
                    let get = |k: usize| -> Result<usize, ModelError> {
                        let name = pair
                            .get(k)
                            .and_then(Value::as_str)
                            .ok_or_else(|| ModelError::Format("edge is not a pair of worlds".into()))?;
                        model
                            .world_index(name)
                            .ok_or_else(|| ModelError::UnknownWorld(name.to_string()))
                    };
                    let (x, y) = (get(0)?, get(1)?);
                    model.add_edge(&letter, x, y);
                }
            }
        }
        if let Some(val) = v.get("val") {
            let val = val
                .as_object()
                .ok_or_else(|| ModelError::Format("val is not an object".into()))?;
            for (atom, ws) in val {
                let ws = ws
                    .as_array()
                    .ok_or_else(|| ModelError::Format("val entry is not an array".into()))?;
                model.val.entry(atom.clone()).or_default();
                for w in ws {
                    let name = w
                        .as_str()
                        .ok_or_else(|| ModelError::Format("world is not a string".into()))?;
                    let idx = model
                        .world_index(name)
                        .ok_or_else(|| ModelError::UnknownWorld(name.to_string()))?;
                    model.set_true(atom, idx);
                }
            }
        }
        Ok(model)
    }
}

/// Countermodel from a stable sequent of the automaton prover. Worlds are
/// the realised nodes; transitions through an unrealised leaf are
/// redirected to its loop ancestor; R_a is decided by product emptiness
/// of the redirected automaton with the letter's automaton.
pub fn extract_countermodel_auto(
    seq: &NestedSequent,
    loops: &BTreeMap<NodeId, NodeId>,
    fsa: &UserFsa,
) -> Result<KripkeModel, ModelError> {
    match stability_loops(seq, fsa) {
        Some(expected) if expected == *loops => {}
        Some(_) => {
            return Err(ModelError::Precondition(
                "loop assignment does not match the stable sequent".into(),
            ))
        }
        None => return Err(ModelError::Precondition("sequent is not stable".into())),
    }
    let worlds: Vec<NodeId> = seq.node_ids().filter(|&i| seq.node_realised(i)).collect();
    let theta = |n: NodeId| loops.get(&n).copied().unwrap_or(n);
    let mut core: Fsa<NodeId> = Fsa::new();
    for &w in &worlds {
        core.states.insert(w);
    }
    for i in seq.node_ids() {
        for (l, j) in seq.children(i) {
            core.transitions.insert((theta(i), l.clone(), theta(*j)));
            core.transitions.insert((theta(*j), l.bar(), theta(i)));
        }
    }
    let mut model = KripkeModel::new(worlds.iter().map(|w| w.to_string()).collect());
    let index: BTreeMap<NodeId, usize> =
        worlds.iter().enumerate().map(|(k, &w)| (w, k)).collect();
    for (letter, init) in &fsa.init_of {
        let mut letter_fsa: Fsa<String> = Fsa::new();
        letter_fsa.states = fsa.states.clone();
        letter_fsa.initials.insert(init.clone());
        letter_fsa.finals = fsa.finals.clone();
        letter_fsa.transitions = fsa.transitions.clone();
        for &x in &worlds {
            for &y in &worlds {
                let mut p = core.clone();
                p.initials.insert(x);
                p.finals.insert(y);
                if product_nonempty(&p, &letter_fsa) {
                    model.add_edge_raw(letter, index[&x], index[&y]);
                }
            }
        }
    }
    // A letter whose bar has no automaton of its own gets the converse
    // relation.
    for (letter, _) in &fsa.init_of {
        if !fsa.init_of.contains_key(&letter.bar()) {
            let edges: Vec<(usize, usize)> = model.edges(letter).collect();
            for (x, y) in edges {
                model.add_edge_raw(&letter.bar(), y, x);
            }
        }
    }
    valuation_from_sequent(&mut model, seq, &index);
    Ok(model)
}

/// Countermodel from a stable sequent of the grammar prover. Worlds are
/// the nodes minus the unrealised leaves; R_a is decided by the
/// intersection triples over the loop-remapped automaton core.
pub fn extract_countermodel_grammar(
    seq: &NestedSequent,
    witness: &StabilityWitness,
    system: &SemiThueSystem,
) -> Result<KripkeModel, ModelError> {
    if !witness.validate(seq, system) {
        return Err(ModelError::Precondition(
            "stability witness does not validate".into(),
        ));
    }
    let worlds: Vec<NodeId> = seq
        .node_ids()
        .filter(|i| !witness.lambda.contains_key(i))
        .collect();
    let theta = |n: NodeId| witness.lambda.get(&n).copied().unwrap_or(n);
    let mut sys = system.clone();
    sys.extend_alphabet(seq.letters().into_iter().flat_map(|l| [l.bar(), l]));
    let mut model = KripkeModel::new(worlds.iter().map(|w| w.to_string()).collect());
    let index: BTreeMap<NodeId, usize> =
        worlds.iter().enumerate().map(|(k, &w)| (w, k)).collect();
    if let Some(start) = sys.alphabet().iter().next() {
        let cfg = cfg_for(&sys, start)
            .map_err(|e| ModelError::Precondition(e.to_string()))?;
        let bin = BinCfg::from_cfg(&cfg);
        let mut states = BTreeSet::new();
        let mut transitions = BTreeSet::new();
        for i in seq.node_ids() {
            states.insert(theta(i));
            for (l, j) in seq.children(i) {
                transitions.insert((theta(i), l.clone(), theta(*j)));
                transitions.insert((theta(*j), l.bar(), theta(i)));
            }
        }
        let triples = IntersectionTriples::compute(&states, &transitions, &bin);
        for letter in sys.alphabet() {
            let Some(nt) = bin.nt_for(letter) else { continue };
            for &x in &worlds {
                for &y in &worlds {
                    if triples.derives_between(x, nt, y) {
                        model.add_edge_raw(letter, index[&x], index[&y]);
                    }
                }
            }
        }
    }
    valuation_from_sequent(&mut model, seq, &index);
    Ok(model)
}

// V(p) = { x : ¬p ∈ Γ|x }: each member of the sequent must come out false.
fn valuation_from_sequent(
    model: &mut KripkeModel,
    seq: &NestedSequent,
    index: &BTreeMap<NodeId, usize>,
) {
    for (&node, &w) in index {
        for f in &seq.node(node).formulas {
            if let Formula::NegAtom(p) = f {
                model.set_true(p, w);
            }
        }
    }
}

/// Exhaustive countermodel search: all converse-closed relation
/// assignments over at most `max_worlds` worlds for the letters of `f`
/// and `system`, filtered by the frame conditions, all valuations over
/// the atoms of `f`. Returns a model and a world falsifying `f`.
/// Exponential; keep `max_worlds` at 4 or below.
pub fn brute_force_search(
    system: &SemiThueSystem,
    f: &Formula,
    max_worlds: usize,
) -> Option<(KripkeModel, usize)> {
    let target = f.lneg();
    let mut letters: BTreeSet<Letter> = f.letters().iter().map(|l| l.positive()).collect();
    letters.extend(system.alphabet().iter().map(|l| l.positive()));
    let letters: Vec<Letter> = letters.into_iter().collect();
    let atoms: Vec<String> = f.atoms().into_iter().collect();
    let productions: Vec<(Vec<Letter>, Vec<Letter>)> = system
        .productions()
        .iter()
        .map(|p| (p.lhs.clone(), p.rhs.clone()))
        .collect();

    for n in 1..=max_worlds {
        let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        let rel_bits = letters.len() * n * n;
        let val_bits = atoms.len() * n;
        assert!(rel_bits < 63 && val_bits < 63, "search space too large");
        for rel_code in 0u64..(1u64 << rel_bits) {
            // rows[l][x] = successor mask of world x under letter l.
            let mut rows: BTreeMap<Letter, Vec<u32>> = BTreeMap::new();
            for (li, l) in letters.iter().enumerate() {
                let mut fwd = vec![0u32; n];
                let mut bwd = vec![0u32; n];
                for x in 0..n {
                    for y in 0..n {
                        if rel_code >> (li * n * n + x * n + y) & 1 == 1 {
                            fwd[x] |= 1 << y;
                            bwd[y] |= 1 << x;
                        }
                    }
                }
                rows.insert(l.clone(), fwd);
                rows.insert(l.bar(), bwd);
            }
            if !frame_ok(&rows, &productions, n, full) {
                continue;
            }
            for val_code in 0u64..(1u64 << val_bits) {
                let mut val: BTreeMap<String, u32> = BTreeMap::new();
                for (ai, a) in atoms.iter().enumerate() {
                    val.insert(a.clone(), ((val_code >> (ai * n)) as u32) & full);
                }
                let mask = eval_mask(&target, n, full, &rows, &val);
                if mask != 0 {
                    let w = mask.trailing_zeros() as usize;
                    return Some((assemble(n, &rows, &val), w));
                }
            }
        }
    }
    None
}

fn compose_word(
    rows: &BTreeMap<Letter, Vec<u32>>,
    word: &[Letter],
    n: usize,
) -> Vec<u32> {
    let mut r: Vec<u32> = (0..n).map(|x| 1 << x).collect();
    let empty = vec![0u32; n];
    for l in word {
        let step = rows.get(l).unwrap_or(&empty);
        r = (0..n)
            .map(|x| {
                let mut out = 0u32;
                for y in 0..n {
                    if r[x] >> y & 1 == 1 {
                        out |= step[y];
                    }
                }
                out
            })
            .collect();
    }
    r
}

fn frame_ok(
    rows: &BTreeMap<Letter, Vec<u32>>,
    productions: &[(Vec<Letter>, Vec<Letter>)],
    n: usize,
    _full: u32,
) -> bool {
    productions.iter().all(|(lhs, rhs)| {
        let ru = compose_word(rows, lhs, n);
        let rv = compose_word(rows, rhs, n);
        (0..n).all(|x| rv[x] & !ru[x] == 0)
    })
}

// Bitmask evaluator: the set of worlds satisfying `f`, as a mask.
fn eval_mask(
    f: &Formula,
    n: usize,
    full: u32,
    rows: &BTreeMap<Letter, Vec<u32>>,
    val: &BTreeMap<String, u32>,
) -> u32 {
    match f {
        Formula::Atom(p) => val.get(p).copied().unwrap_or(0),
        Formula::NegAtom(p) => !val.get(p).copied().unwrap_or(0) & full,
        Formula::Neg(a) => !eval_mask(a, n, full, rows, val) & full,
        Formula::And(a, b) => eval_mask(a, n, full, rows, val) & eval_mask(b, n, full, rows, val),
        Formula::Or(a, b) => eval_mask(a, n, full, rows, val) | eval_mask(b, n, full, rows, val),
        Formula::Dia(l, a) => {
            let m = eval_mask(a, n, full, rows, val);
            let empty = vec![0u32; n];
            let r = rows.get(l).unwrap_or(&empty);
            (0..n).fold(0u32, |acc, x| if r[x] & m != 0 { acc | 1 << x } else { acc })
        }
        Formula::Box(l, a) => {
            let m = eval_mask(a, n, full, rows, val);
            let empty = vec![0u32; n];
            let r = rows.get(l).unwrap_or(&empty);
            (0..n).fold(0u32, |acc, x| if r[x] & !m & full == 0 { acc | 1 << x } else { acc })
        }
    }
}

fn assemble(n: usize, rows: &BTreeMap<Letter, Vec<u32>>, val: &BTreeMap<String, u32>) -> KripkeModel {
    let mut model = KripkeModel::new((0..n).map(|x| format!("w{x}")).collect());
    for (l, r) in rows {
        for x in 0..n {
            for y in 0..n {
                if r[x] >> y & 1 == 1 {
                    model.add_edge_raw(l, x, y);
                }
            }
        }
    }
    for (a, mask) in val {
        for x in 0..n {
            if mask >> x & 1 == 1 {
                model.set_true(a, x);
            }
        }
    }
    model
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::Production;
    use crate::parse::parse_formula;

    fn a() -> Letter {
        Letter::plain("a")
    }

    fn fof(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn satisfaction_basics() {
        let mut m = KripkeModel::new(vec!["w".into()]);
        m.set_true("p", 0);
        assert!(m.satisfies(0, &fof("p")));
        assert!(!m.satisfies(0, &fof("q")));
        // Empty relation: boxes vacuous, diamonds false.
        assert!(m.satisfies(0, &fof("[a](p & ~p)")));
        assert!(!m.satisfies(0, &fof("<a>p")));
    }

    #[test]
    fn converse_closure_via_add_edge() {
        let mut m = KripkeModel::new(vec!["x".into(), "y".into()]);
        m.add_edge(&a(), 0, 1);
        assert!(m.has_edge(&a().bar(), 1, 0));
        assert!(m.check_converse_closure().is_ok());
        m.add_edge_raw(&a(), 1, 1);
        assert_eq!(m.check_converse_closure(), Err((a(), 1, 1)));
    }

    #[test]
    fn string_relation_composes() {
        let mut m = KripkeModel::new(vec!["x".into(), "y".into(), "z".into()]);
        m.add_edge(&a(), 0, 1);
        m.add_edge(&a(), 1, 2);
        let raa = m.string_relation(&[a(), a()]);
        assert!(raa.contains(&(0, 2)));
        assert_eq!(raa.len(), 1);
        // R_eps is the identity.
        assert_eq!(m.string_relation(&[]).len(), 3);
    }

    #[test]
    fn frame_satisfaction() {
        let sys = SemiThueSystem::new([Production::new(vec![a()], vec![a(), a()])]);
        // Chain x -> y only: R_aa empty, production holds.
        let mut chain = KripkeModel::new(vec!["x".into(), "y".into()]);
        chain.add_edge(&a(), 0, 1);
        assert!(chain.frame_satisfies(&sys));
        // x -> y -> z without x -> z: violates transitivity.
        let mut m = KripkeModel::new(vec!["x".into(), "y".into(), "z".into()]);
        m.add_edge(&a(), 0, 1);
        m.add_edge(&a(), 1, 2);
        assert!(!m.frame_satisfies(&sys));
        m.add_edge(&a(), 0, 2);
        assert!(m.frame_satisfies(&sys));
        // Any converse-closed model satisfies the empty system.
        assert!(chain.frame_satisfies(&SemiThueSystem::empty()));
    }

    #[test]
    fn brute_force_finds_and_rejects() {
        // Tautology: no countermodel.
        assert!(brute_force_search(&SemiThueSystem::empty(), &fof("p | ~p"), 2).is_none());
        // p => [a]p is not valid.
        let (m, w) = brute_force_search(&SemiThueSystem::empty(), &fof("p => [a]p"), 2).unwrap();
        assert!(!m.satisfies(w, &fof("p => [a]p")));
        assert!(m.frame_satisfies(&SemiThueSystem::empty()));
        // 4 axiom is valid on transitive frames.
        let sys = SemiThueSystem::new([Production::new(vec![a()], vec![a(), a()])]).close();
        assert!(brute_force_search(&sys, &fof("[a]p => [a][a]p"), 3).is_none());
        // ... but not on arbitrary frames.
        assert!(
            brute_force_search(&SemiThueSystem::empty(), &fof("[a]p => [a][a]p"), 3).is_some()
        );
    }

    #[test]
    fn brute_force_respects_residuation_frames() {
        // p => [a]<a^->p is valid on all converse-closed frames.
        assert!(brute_force_search(&SemiThueSystem::empty(), &fof("p => [a]<a^->p"), 3).is_none());
    }

    #[test]
    fn model_json_round_trip() {
        let mut m = KripkeModel::new(vec!["w0".into(), "w1".into()]);
        m.add_edge(&a(), 0, 1);
        m.set_true("p", 1);
        m.val.entry("q".into()).or_default();
        let j = m.to_json();
        // Only the positive letter appears.
        assert!(j["rel"].get("a").is_some());
        assert!(j["rel"].get("a^-").is_none());
        let back = KripkeModel::from_json(&j).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn model_json_rejects_bad_input() {
        let j = json!({"worlds": ["w"], "rel": {"a^-": [["w", "w"]]}});
        assert!(matches!(
            KripkeModel::from_json(&j),
            Err(ModelError::BarredRelation(_))
        ));
        let j = json!({"worlds": ["w"], "rel": {"a": [["w", "v"]]}});
        assert!(matches!(
            KripkeModel::from_json(&j),
            Err(ModelError::UnknownWorld(_))
        ));
    }

    // The bitmask evaluator agrees with the direct satisfaction relation.
    #[test]
    fn eval_mask_matches_satisfies() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let forms = [
            "p", "~p", "p & q", "p | ~q", "<a>p", "[a]p", "<a^->q", "[a](p | <a>q)",
            "<a>(p & [a^-]~q)", "[a][a]p => [a]p",
        ];
        for _ in 0..50 {
            let n = rng.gen_range(1..=3);
            let mut model = KripkeModel::new((0..n).map(|x| format!("w{x}")).collect());
            let mut rows: BTreeMap<Letter, Vec<u32>> = BTreeMap::new();
            rows.insert(a(), vec![0; n]);
            rows.insert(a().bar(), vec![0; n]);
            for x in 0..n {
                for y in 0..n {
                    if rng.gen_bool(0.4) {
                        model.add_edge(&a(), x, y);
                        rows.get_mut(&a()).unwrap()[x] |= 1 << y;
                        rows.get_mut(&a().bar()).unwrap()[y] |= 1 << x;
                    }
                }
            }
            let mut val: BTreeMap<String, u32> = BTreeMap::new();
            for p in ["p", "q"] {
                let mut mask = 0u32;
                for x in 0..n {
                    if rng.gen_bool(0.5) {
                        model.set_true(p, x);
                        mask |= 1 << x;
                    }
                }
                val.insert(p.into(), mask);
            }
            let full = (1u32 << n) - 1;
            for s in forms {
                let f = fof(s).nnf();
                let mask = eval_mask(&f, n, full, &rows, &val);
                for w in 0..n {
                    assert_eq!(mask >> w & 1 == 1, model.satisfies(w, &f), "{s} at w{w}");
                }
            }
        }
    }
}
