//! Nested sequents: trees of formula sets with letter-labeled edges and
//! stable node identifiers. All prover steps only ever add content, so
//! sequents grow monotonically; a revision counter tracks growth and a
//! separate shape revision tracks tree-structure changes (used to key the
//! intersection cache).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::formula::{Formula, Letter};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SequentError {
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
}

/// Identifier of a node within one sequent. Stable for the life of the
/// sequent; fresh ids are never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NodeId(u32);

impl NodeId {
    #[cfg(any(test, feature = "testing"))]
    pub fn test_id(raw: u32) -> NodeId {
        NodeId(raw)
    }

    pub fn index(&self) -> u32 {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// State name of a user automaton, used in labeled formulae `s : A`.
pub type StateId = String;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Node {
    pub formulas: BTreeSet<Formula>,
    pub labeled: BTreeSet<(StateId, Formula)>,
    parent: Option<(NodeId, Letter)>,
    children: Vec<(Letter, NodeId)>,
}

impl Node {
    fn new() -> Node {
        Node {
            formulas: BTreeSet::new(),
            labeled: BTreeSet::new(),
            parent: None,
            children: Vec::new(),
        }
    }

    /// Total content count (plain plus labeled formulae).
    pub fn content_len(&self) -> usize {
        self.formulas.len() + self.labeled.len()
    }
}

/// Either a plain formula or a labeled formula, for uniform insertion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Member {
    Plain(Formula),
    Labeled(StateId, Formula),
}

impl From<Formula> for Member {
    fn from(f: Formula) -> Member {
        Member::Plain(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NestedSequent {
    nodes: BTreeMap<NodeId, Node>,
    root: NodeId,
    next_id: u32,
    revision: u64,
    shape_revision: u64,
}

impl NestedSequent {
    /// A single-root sequent holding the NNF of the given formula.
    pub fn from_formula(f: &Formula) -> NestedSequent {
        let mut node = Node::new();
        node.formulas.insert(f.nnf());
        let root = NodeId(0);
        NestedSequent {
            nodes: BTreeMap::from([(root, node)]),
            root,
            next_id: 1,
            revision: 0,
            shape_revision: 0,
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn shape_revision(&self) -> u64 {
        self.shape_revision
    }

    pub fn check_node(&self, i: NodeId) -> Result<(), SequentError> {
        if self.nodes.contains_key(&i) {
            Ok(())
        } else {
            Err(SequentError::UnknownNode(i))
        }
    }

    pub fn node(&self, i: NodeId) -> &Node {
        &self.nodes[&i]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Add formulae (plain or labeled) to a node; set semantics. Returns
    /// whether anything new was added.
    pub fn add_members(
        &mut self,
        i: NodeId,
        members: impl IntoIterator<Item = Member>,
    ) -> Result<bool, SequentError> {
        self.check_node(i)?;
        let node = self.nodes.get_mut(&i).unwrap();
        let mut changed = false;
        for m in members {
            changed |= match m {
                Member::Plain(f) => {
                    debug_assert!(f.is_nnf(), "sequents hold NNF formulae only");
                    node.formulas.insert(f)
                }
                Member::Labeled(s, f) => node.labeled.insert((s, f)),
            };
        }
        if changed {
            self.revision += 1;
        }
        Ok(changed)
    }

    pub fn add_formulas(
        &mut self,
        i: NodeId,
        formulas: impl IntoIterator<Item = Formula>,
    ) -> Result<bool, SequentError> {
        self.add_members(i, formulas.into_iter().map(Member::Plain))
    }

    /// Create a fresh child of `i` along `letter`, holding the given
    /// formulae.
    pub fn add_child(
        &mut self,
        i: NodeId,
        letter: Letter,
        formulas: impl IntoIterator<Item = Formula>,
    ) -> Result<NodeId, SequentError> {
        self.check_node(i)?;
        let id = NodeId(self.next_id);
        self.next_id += 1;
        let mut node = Node::new();
        for f in formulas {
            debug_assert!(f.is_nnf(), "sequents hold NNF formulae only");
            node.formulas.insert(f);
        }
        node.parent = Some((i, letter.clone()));
        self.nodes.insert(id, node);
        self.nodes.get_mut(&i).unwrap().children.push((letter, id));
        self.revision += 1;
        self.shape_revision += 1;
        Ok(id)
    }

    pub fn parent(&self, i: NodeId) -> Option<&(NodeId, Letter)> {
        self.nodes[&i].parent.as_ref()
    }

    pub fn children(&self, i: NodeId) -> &[(Letter, NodeId)] {
        &self.nodes[&i].children
    }

    pub fn is_leaf(&self, i: NodeId) -> bool {
        self.nodes[&i].children.is_empty()
    }

    /// Proper ancestors, closest first.
    pub fn ancestors(&self, i: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut cur = i;
        while let Some((p, _)) = self.nodes[&cur].parent {
            out.push(p);
            cur = p;
        }
        out
    }

    /// Length of the branch from the root to `i`. `height(root) = 0`.
    pub fn height(&self, i: NodeId) -> usize {
        self.ancestors(i).len()
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.node_ids().filter(|&i| self.is_leaf(i)).collect()
    }

    pub fn internal_nodes(&self) -> Vec<NodeId> {
        self.node_ids().filter(|&i| !self.is_leaf(i)).collect()
    }

    /// First node containing an atomic clash `p, ~p`, with the atom name.
    pub fn find_clash(&self) -> Option<(NodeId, String)> {
        for (&i, node) in &self.nodes {
            for f in &node.formulas {
                if let Formula::Atom(p) = f {
                    if node.formulas.contains(&Formula::NegAtom(p.clone())) {
                        return Some((i, p.clone()));
                    }
                }
            }
        }
        None
    }

    /// Saturation of a node: no formula together with its negation, every
    /// disjunction expanded, every conjunction with at least one conjunct.
    pub fn node_saturated(&self, i: NodeId) -> bool {
        let node = &self.nodes[&i];
        for f in &node.formulas {
            if node.formulas.contains(&f.lneg()) {
                return false;
            }
            match f {
                Formula::Or(a, b) => {
                    if !node.formulas.contains(a) || !node.formulas.contains(b) {
                        return false;
                    }
                }
                Formula::And(a, b) => {
                    if !node.formulas.contains(a) && !node.formulas.contains(b) {
                        return false;
                    }
                }
                _ => {}
            }
        }
        true
    }

    /// Realisation of a node: every box formula has a witnessing child.
    pub fn node_realised(&self, i: NodeId) -> bool {
        let node = &self.nodes[&i];
        node.formulas.iter().all(|f| match f {
            Formula::Box(a, body) => node
                .children
                .iter()
                .any(|(l, j)| l == a && self.nodes[j].formulas.contains(body)),
            _ => true,
        })
    }

    /// Equality of full node contents, labeled formulae included.
    pub fn content_eq(&self, i: NodeId, j: NodeId) -> bool {
        let (a, b) = (&self.nodes[&i], &self.nodes[&j]);
        a.formulas == b.formulas && a.labeled == b.labeled
    }

    /// Equality of plain-formula contents only.
    pub fn formulas_eq(&self, i: NodeId, j: NodeId) -> bool {
        self.nodes[&i].formulas == self.nodes[&j].formulas
    }

    /// Letters occurring in formulae or on edges, not closed under bar.
    pub fn letters(&self) -> BTreeSet<Letter> {
        let mut out = BTreeSet::new();
        for node in self.nodes.values() {
            for f in &node.formulas {
                out.extend(f.letters());
            }
            for (s, f) in &node.labeled {
                let _ = s;
                out.extend(f.letters());
            }
            for (l, _) in &node.children {
                out.insert(l.clone());
            }
        }
        out
    }

    /// Deterministic structural hash, stable across processes. Used in
    /// traces so an independent checker can compare intermediate sequents.
    pub fn stable_hash(&self) -> u64 {
        let mut h = Fnv::new();
        self.hash_node(self.root, &mut h);
        h.finish()
    }

    fn hash_node(&self, i: NodeId, h: &mut Fnv) {
        let node = &self.nodes[&i];
        h.write_str("(");
        for f in &node.formulas {
            h.write_str(&f.to_string());
            h.write_str(";");
        }
        for (s, f) in &node.labeled {
            h.write_str(s);
            h.write_str(":");
            h.write_str(&f.to_string());
            h.write_str(";");
        }
        // Children sorted by (letter, subtree rendering) so the hash depends
        // on the tree shape, not on id assignment order.
        let mut rendered: Vec<(String, NodeId)> = node
            .children
            .iter()
            .map(|(l, j)| (format!("{l}>{}", self.render_node(*j)), *j))
            .collect();
        rendered.sort();
        for (prefix, j) in rendered {
            h.write_str("<");
            h.write_str(&prefix);
            let _ = j;
            h.write_str(">");
        }
        h.write_str(")");
    }

    /// Nested-notation rendering: `p, q, <a>[ r ]`.
    pub fn render(&self) -> String {
        self.render_node(self.root)
    }

    fn render_node(&self, i: NodeId) -> String {
        let node = &self.nodes[&i];
        let mut parts: Vec<String> = node.formulas.iter().map(|f| f.to_string()).collect();
        parts.extend(node.labeled.iter().map(|(s, f)| format!("{s}:{f}")));
        let mut children: Vec<String> = node
            .children
            .iter()
            .map(|(l, j)| format!("<{l}>[ {} ]", self.render_node(*j)))
            .collect();
        children.sort();
        parts.extend(children);
        parts.join(", ")
    }

    /// JSON tree export with node ids, for traces and verdicts.
    pub fn to_json(&self) -> serde_json::Value {
        self.node_json(self.root)
    }

    fn node_json(&self, i: NodeId) -> serde_json::Value {
        let node = &self.nodes[&i];
        serde_json::json!({
            "id": i.to_string(),
            "formulas": node.formulas.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
            "labeled": node.labeled.iter()
                .map(|(s, f)| format!("{s}:{f}"))
                .collect::<Vec<_>>(),
            "children": node.children.iter()
                .map(|(l, j)| serde_json::json!({
                    "edge": l.to_string(),
                    "node": self.node_json(*j),
                }))
                .collect::<Vec<_>>(),
        })
    }
}

// FNV-1a. The standard hasher is seeded per process; trace hashes must be
// reproducible across runs.
struct Fnv(u64);

impl Fnv {
    fn new() -> Fnv {
        Fnv(0xcbf29ce484222325)
    }

    fn write_str(&mut self, s: &str) {
        for b in s.as_bytes() {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a() -> Letter {
        Letter::plain("a")
    }

    fn p() -> Formula {
        Formula::atom("p")
    }

    fn q() -> Formula {
        Formula::atom("q")
    }

    #[test]
    fn add_formulas_is_set_based() {
        let mut s = NestedSequent::from_formula(&p());
        let root = s.root();
        let rev = s.revision();
        assert!(!s.add_formulas(root, [p()]).unwrap());
        assert_eq!(s.revision(), rev, "no-op insert must not bump the revision");
        assert!(s.add_formulas(root, [q()]).unwrap());
        assert_eq!(s.node(root).formulas.len(), 2);
    }

    #[test]
    fn add_is_local() {
        let mut s = NestedSequent::from_formula(&p());
        let root = s.root();
        let child = s.add_child(root, a(), [q()]).unwrap();
        s.add_formulas(root, [Formula::atom("r")]).unwrap();
        assert_eq!(s.node(child).formulas, BTreeSet::from([q()]));
    }

    #[test]
    fn add_child_geometry() {
        let mut s = NestedSequent::from_formula(&p());
        let root = s.root();
        let child = s.add_child(root, a(), [p()]).unwrap();
        assert_ne!(child, root);
        assert_eq!(s.height(root), 0);
        assert_eq!(s.height(child), 1);
        assert_eq!(s.parent(child), Some(&(root, a())));
        assert_eq!(s.ancestors(root), vec![]);
        assert_eq!(s.ancestors(child), vec![root]);
        assert!(s.is_leaf(child));
        assert!(!s.is_leaf(root));

        let grand = s.add_child(child, a(), []).unwrap();
        assert_eq!(s.ancestors(grand), vec![child, root]);
        assert_eq!(s.height(grand), 2);
    }

    #[test]
    fn unknown_node_is_an_error() {
        let mut s = NestedSequent::from_formula(&p());
        let bogus = NodeId::test_id(99);
        assert!(s.add_formulas(bogus, [p()]).is_err());
        assert!(s.add_child(bogus, a(), []).is_err());
    }

    #[test]
    fn clash_detection() {
        let mut s = NestedSequent::from_formula(&p());
        assert_eq!(s.find_clash(), None);
        let root = s.root();
        s.add_formulas(root, [Formula::neg_atom("p")]).unwrap();
        assert_eq!(s.find_clash(), Some((root, "p".to_string())));
    }

    #[test]
    fn saturation_clauses() {
        let or = Formula::or(p(), q());
        let mut s = NestedSequent::from_formula(&or);
        let root = s.root();
        assert!(!s.node_saturated(root));
        s.add_formulas(root, [p(), q()]).unwrap();
        assert!(s.node_saturated(root));

        let mut s = NestedSequent::from_formula(&p());
        let root = s.root();
        s.add_formulas(root, [Formula::neg_atom("p")]).unwrap();
        assert!(!s.node_saturated(root), "clashing node is not saturated");

        let and = Formula::and(p(), q());
        let mut s = NestedSequent::from_formula(&and);
        let root = s.root();
        assert!(!s.node_saturated(root));
        s.add_formulas(root, [p()]).unwrap();
        assert!(s.node_saturated(root), "one conjunct suffices");
    }

    #[test]
    fn realisation() {
        let boxed = Formula::boxed(a(), p());
        let mut s = NestedSequent::from_formula(&boxed);
        let root = s.root();
        assert!(!s.node_realised(root));
        let child = s.add_child(root, a(), []).unwrap();
        assert!(!s.node_realised(root));
        s.add_formulas(child, [p()]).unwrap();
        assert!(s.node_realised(root));

        let empty = NestedSequent::from_formula(&p());
        assert!(empty.node_realised(empty.root()));
    }

    #[test]
    fn stable_hash_ignores_insertion_order() {
        let mut s1 = NestedSequent::from_formula(&p());
        s1.add_formulas(s1.root(), [q()]).unwrap();
        let mut s2 = NestedSequent::from_formula(&q());
        s2.add_formulas(s2.root(), [p()]).unwrap();
        assert_eq!(s1.stable_hash(), s2.stable_hash());

        s1.add_formulas(s1.root(), [Formula::atom("r")]).unwrap();
        assert_ne!(s1.stable_hash(), s2.stable_hash());
    }

    #[test]
    fn render_nested_notation() {
        let mut s = NestedSequent::from_formula(&p());
        let root = s.root();
        s.add_formulas(root, [q()]).unwrap();
        let child = s.add_child(root, a(), [Formula::atom("r")]).unwrap();
        let _ = child;
        assert_eq!(s.render(), "p, q, <a>[ r ]");
    }
}
