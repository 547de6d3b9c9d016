//! Grammar-based proof search: a semi-decision procedure driven directly
//! by a context-free semi-Thue system closed under converse.
//!
//! Propagation asks whether the language of the propagation automaton
//! between two nodes meets the rewrite language of a letter; the
//! intersection emptiness test is a fixpoint over (state, nonterminal,
//! state) triples, shared across all node pairs of the current tree shape.
//! Refutation requires a loop assignment for the unrealised leaves that
//! keeps the remapped automata propagated. The height of the tree is
//! capped at `k`; `prove` iterates k upwards.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::formula::{Formula, Letter};
use crate::grammar::{cfg_for, Cfg, GrammarError, SemiThueSystem};
use crate::lang::{BinCfg, IntersectionTriples};
use crate::sequent::{NestedSequent, NodeId};
use crate::trace::{Step, StepKind, Trace};

#[derive(Debug, Error)]
pub enum ProveError {
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("the rewrite system is not closed under converse")]
    NotClosed,
    #[error("loop assignment search exceeded the cap of {cap} candidates")]
    LambdaCap { cap: usize },
    #[error("timeout")]
    Timeout,
}

/// A refutation witness: the loop assignment found for the unrealised
/// leaves of the stable sequent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilityWitness {
    pub lambda: BTreeMap<NodeId, NodeId>,
}

impl StabilityWitness {
    /// Re-check the witness from scratch: each assigned leaf is an
    /// unrealised leaf with an equal-content proper ancestor, and the
    /// remapped automata are propagated.
    pub fn validate(&self, seq: &NestedSequent, system: &SemiThueSystem) -> bool {
        let unrealised: BTreeSet<NodeId> = seq
            .leaves()
            .into_iter()
            .filter(|&l| !seq.node_realised(l))
            .collect();
        if unrealised != self.lambda.keys().copied().collect() {
            return false;
        }
        for (&leaf, &anc) in &self.lambda {
            if !seq.ancestors(leaf).contains(&anc) || !seq.formulas_eq(leaf, anc) {
                return false;
            }
        }
        let mut oracle = match Oracle::new(system, seq) {
            Ok(o) => o,
            Err(_) => return false,
        };
        if !seq.node_ids().all(|i| seq.node_saturated(i)) {
            return false;
        }
        if seq.internal_nodes().iter().any(|&i| !seq.node_realised(i)) {
            return false;
        }
        propagation_violation(seq, &mut oracle).is_none()
            && oracle.lambda_propagated(seq, &self.lambda)
    }
}

#[derive(Debug)]
pub enum Prove2Result {
    Top(Trace),
    Bottom {
        sequent: NestedSequent,
        witness: StabilityWitness,
    },
    Star,
}

#[derive(Debug, Clone)]
pub struct ProveConfig {
    /// Largest height bound tried by the iterative deepening loop.
    pub max_k: usize,
    pub timeout: Option<Duration>,
    /// Cap on loop assignments tried per stability check.
    pub lambda_cap: usize,
}

impl Default for ProveConfig {
    fn default() -> ProveConfig {
        ProveConfig {
            max_k: 10,
            timeout: None,
            lambda_cap: 10_000,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct KStats {
    pub k: usize,
    pub steps: usize,
    pub emptiness_queries: usize,
    pub triple_recomputes: usize,
    pub cache_hits: usize,
    pub lambdas_tried: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ProveStats {
    pub per_k: Vec<KStats>,
}

impl ProveStats {
    pub fn total_steps(&self) -> usize {
        self.per_k.iter().map(|s| s.steps).sum()
    }
}

#[derive(Debug)]
pub enum ProveOutcome {
    Valid(Trace),
    Refuted {
        sequent: NestedSequent,
        witness: StabilityWitness,
    },
    /// Search exhausted `max_k` or the timeout without an answer.
    Budget { last_k: usize, timed_out: bool },
}

/// Shared emptiness oracle for one run: the binarized grammar is fixed,
/// the triple fixpoint is cached per tree shape.
pub struct Oracle {
    bin: Option<BinCfg>,
    cfg: Option<Cfg>,
    cache: Option<(u64, IntersectionTriples)>,
    pub stats: KStats,
}

impl Oracle {
    /// `seq` supplies the letters the formula mentions, which the grammar's
    /// alphabet must cover even when no production involves them.
    pub fn new(system: &SemiThueSystem, seq: &NestedSequent) -> Result<Oracle, ProveError> {
        Self::for_letters(system, seq.letters().into_iter().chain(dia_letters(seq)))
    }

    pub fn for_letters(
        system: &SemiThueSystem,
        letters: impl IntoIterator<Item = Letter>,
    ) -> Result<Oracle, ProveError> {
        if !system.is_closed() {
            return Err(ProveError::NotClosed);
        }
        let mut sys = system.clone();
        sys.extend_alphabet(letters);
        let (cfg, bin) = match sys.alphabet().iter().next() {
            Some(start) => {
                let cfg = cfg_for(&sys, start)?;
                let bin = BinCfg::from_cfg(&cfg);
                (Some(cfg), Some(bin))
            }
            None => (None, None),
        };
        Ok(Oracle {
            bin,
            cfg,
            cache: None,
            stats: KStats::default(),
        })
    }

    fn triples(&mut self, seq: &NestedSequent) -> &IntersectionTriples {
        let rev = seq.shape_revision();
        let hit = matches!(&self.cache, Some((r, _)) if *r == rev);
        if hit {
            self.stats.cache_hits += 1;
        } else {
            let (states, transitions) = automaton_core(seq);
            let bin = self.bin.as_ref().expect("grammar present when edges exist");
            self.stats.triple_recomputes += 1;
            self.cache = Some((rev, IntersectionTriples::compute(&states, &transitions, bin)));
        }
        &self.cache.as_ref().unwrap().1
    }

    /// Does some word of L_letter drive the propagation automaton of `seq`
    /// from `i` to `j`?
    pub fn propagates(&mut self, seq: &NestedSequent, i: NodeId, letter: &Letter, j: NodeId) -> bool {
        self.stats.emptiness_queries += 1;
        let Some(nt) = self.bin.as_ref().and_then(|b| b.nt_for(letter)) else {
            return i == j;
        };
        self.triples(seq).derives_between(i, nt, j)
    }

    /// Checks the loop-assignment propagation condition: with every
    /// occurrence of an assigned leaf replaced by its ancestor, every
    /// reachable (i, a, j) propagation is already satisfied.
    pub fn lambda_propagated(&self, seq: &NestedSequent, lambda: &BTreeMap<NodeId, NodeId>) -> bool {
        let theta = |n: NodeId| lambda.get(&n).copied().unwrap_or(n);
        let (states, transitions) = automaton_core(seq);
        let states: BTreeSet<NodeId> = states.into_iter().map(theta).collect();
        let transitions: BTreeSet<(NodeId, Letter, NodeId)> = transitions
            .into_iter()
            .map(|(f, l, t)| (theta(f), l, theta(t)))
            .collect();
        let Some(bin) = self.bin.as_ref() else {
            // No letters at all: no diamonds, nothing to propagate.
            return true;
        };
        let triples = IntersectionTriples::compute(&states, &transitions, bin);
        for i in seq.node_ids() {
            for f in &seq.node(i).formulas {
                let Formula::Dia(l, body) = f else { continue };
                let Some(nt) = bin.nt_for(l) else { continue };
                for j in seq.node_ids() {
                    if triples.derives_between(theta(i), nt, theta(j))
                        && !seq.node(j).formulas.contains(body)
                    {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn cfg(&self) -> Option<&Cfg> {
        self.cfg.as_ref()
    }
}

fn dia_letters(seq: &NestedSequent) -> BTreeSet<Letter> {
    let mut out = BTreeSet::new();
    for i in seq.node_ids() {
        for f in &seq.node(i).formulas {
            for sub in f.subformulas() {
                if let Formula::Dia(l, _) = sub {
                    out.insert(l.clone());
                    out.insert(l.bar());
                }
            }
        }
    }
    out
}

/// States and transitions shared by the propagation automata of all node
/// pairs: one transition per edge plus its bar-reverse.
fn automaton_core(seq: &NestedSequent) -> (BTreeSet<NodeId>, BTreeSet<(NodeId, Letter, NodeId)>) {
    let mut states = BTreeSet::new();
    let mut transitions = BTreeSet::new();
    for i in seq.node_ids() {
        states.insert(i);
        for (l, j) in seq.children(i) {
            transitions.insert((i, l.clone(), *j));
            transitions.insert((*j, l.bar(), i));
        }
    }
    (states, transitions)
}

/// First propagation violation, in node-id then formula order.
fn propagation_violation(seq: &NestedSequent, oracle: &mut Oracle) -> Option<StepKind> {
    for i in seq.node_ids() {
        let dias: Vec<(Letter, Formula)> = seq
            .node(i)
            .formulas
            .iter()
            .filter_map(|f| match f {
                Formula::Dia(l, body) => Some((l.clone(), (**body).clone())),
                _ => None,
            })
            .collect();
        for (l, body) in dias {
            for j in seq.node_ids() {
                if !seq.node(j).formulas.contains(&body) && oracle.propagates(seq, i, &l, j) {
                    return Some(StepKind::GrammarProp {
                        from: i,
                        to: j,
                        letter: l,
                        formula: body,
                    });
                }
            }
        }
    }
    None
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

/// Loop assignment search: candidates per leaf are equal-content proper
/// ancestors, closest first. Returns the first assignment under which the
/// remapped automata are propagated.
fn find_lambda(
    seq: &NestedSequent,
    oracle: &mut Oracle,
    cap: usize,
) -> Result<Option<BTreeMap<NodeId, NodeId>>, ProveError> {
    let leaves: Vec<NodeId> = seq
        .leaves()
        .into_iter()
        .filter(|&l| !seq.node_realised(l))
        .collect();
    let mut candidates: Vec<Vec<NodeId>> = Vec::new();
    for &leaf in &leaves {
        let cs: Vec<NodeId> = seq
            .ancestors(leaf)
            .into_iter()
            .filter(|&j| seq.formulas_eq(leaf, j))
            .collect();
        if cs.is_empty() {
            return Ok(None);
        }
        candidates.push(cs);
    }
    if leaves.is_empty() {
        return Ok(Some(BTreeMap::new()));
    }
    // Mixed-radix counter over the candidate lists.
    let mut index = vec![0usize; leaves.len()];
    loop {
        oracle.stats.lambdas_tried += 1;
        if oracle.stats.lambdas_tried > cap {
            return Err(ProveError::LambdaCap { cap });
        }
        let lambda: BTreeMap<NodeId, NodeId> = leaves
            .iter()
            .enumerate()
            .map(|(m, &l)| (l, candidates[m][index[m]]))
            .collect();
        if oracle.lambda_propagated(seq, &lambda) {
            return Ok(Some(lambda));
        }
        // Increment the counter.
        let mut pos = 0;
        loop {
            if pos == leaves.len() {
                return Ok(None);
            }
            index[pos] += 1;
            if index[pos] < candidates[pos].len() {
                break;
            }
            index[pos] = 0;
            pos += 1;
        }
    }
}

struct Ctx<'a> {
    k: usize,
    config: &'a ProveConfig,
    deadline: Option<Instant>,
    oracle: Oracle,
}

/// One bounded round: decides `seq` up to height `k`, or returns `Star`.
pub fn prove2(
    system: &SemiThueSystem,
    seq: &NestedSequent,
    k: usize,
    config: &ProveConfig,
) -> Result<(Prove2Result, KStats), ProveError> {
    let deadline = config.timeout.map(|t| Instant::now() + t);
    let mut ctx = Ctx {
        k,
        config,
        deadline,
        oracle: Oracle::new(system, seq)?,
    };
    let result = search(&mut ctx, seq.clone())?;
    let mut stats = ctx.oracle.stats;
    stats.k = k;
    Ok((result, stats))
}

fn search(ctx: &mut Ctx, mut seq: NestedSequent) -> Result<Prove2Result, ProveError> {
    let mut steps: Vec<Step> = Vec::new();
    loop {
        if let Some(deadline) = ctx.deadline {
            if Instant::now() > deadline {
                return Err(ProveError::Timeout);
            }
        }
        if let Some((node, atom)) = seq.find_clash() {
            return Ok(Prove2Result::Top(fold_steps(steps, Trace::Closed {
                node,
                atom,
            })));
        }
        // Stability requires saturation, so the check is gated on it;
        // the violation found doubles as the propagation rule instance.
        let saturated = seq.node_ids().all(|i| seq.node_saturated(i));
        let mut prop_violation = None;
        let mut prop_checked = false;
        if saturated {
            prop_violation = propagation_violation(&seq, &mut ctx.oracle);
            prop_checked = true;
            if prop_violation.is_none()
                && seq.internal_nodes().iter().all(|&i| seq.node_realised(i))
            {
                if let Some(lambda) = find_lambda(&seq, &mut ctx.oracle, ctx.config.lambda_cap)? {
                    return Ok(Prove2Result::Bottom {
                        sequent: seq,
                        witness: StabilityWitness { lambda },
                    });
                }
            }
        }
        // Saturation: disjunctions first, then branch on a conjunction.
        if let Some((i, f)) = first_unexpanded(&seq, |f| matches!(f, Formula::Or(_, _))) {
            let kind = StepKind::OrExpand {
                node: i,
                formula: f,
            };
            apply(&mut seq, &kind);
            record(&mut steps, &mut ctx.oracle.stats, kind, &seq);
            continue;
        }
        if let Some((i, f)) = first_unexpanded(&seq, |f| matches!(f, Formula::And(_, _))) {
            let Formula::And(a, b) = &f else { unreachable!() };
            ctx.oracle.stats.steps += 1;
            let mut left = seq.clone();
            left.add_formulas(i, [(**a).clone()]).expect("node exists");
            let lh = left.stable_hash();
            let lres = search(ctx, left)?;
            if let Prove2Result::Bottom { .. } = lres {
                return Ok(lres);
            }
            let mut right = seq;
            right.add_formulas(i, [(**b).clone()]).expect("node exists");
            let rres = search(ctx, right)?;
            if let Prove2Result::Bottom { .. } = rres {
                return Ok(rres);
            }
            return match (lres, rres) {
                (Prove2Result::Top(lt), Prove2Result::Top(rt)) => {
                    let branch = Trace::Branch {
                        step: Step {
                            kind: StepKind::AndBranch {
                                node: i,
                                formula: f,
                            },
                            sequent_hash: lh,
                        },
                        left: Box::new(lt),
                        right: Box::new(rt),
                    };
                    Ok(Prove2Result::Top(fold_steps(steps, branch)))
                }
                _ => Ok(Prove2Result::Star),
            };
        }
        // Propagation, then realisation, then bounded leaf expansion.
        if !prop_checked {
            prop_violation = propagation_violation(&seq, &mut ctx.oracle);
        }
        if let Some(kind) = prop_violation {
            apply(&mut seq, &kind);
            record(&mut steps, &mut ctx.oracle.stats, kind, &seq);
            continue;
        }
        if let Some(i) = seq
            .internal_nodes()
            .into_iter()
            .find(|&i| !seq.node_realised(i))
        {
            let (letter, formula) = unrealised_box(&seq, i).expect("unrealised internal node");
            let kind = StepKind::RealiseInternal {
                node: i,
                letter,
                formula,
            };
            apply(&mut seq, &kind);
            record(&mut steps, &mut ctx.oracle.stats, kind, &seq);
            continue;
        }
        if let Some(i) = seq
            .leaves()
            .into_iter()
            .find(|&i| !seq.node_realised(i) && seq.height(i) <= ctx.k)
        {
            let (letter, formula) = unrealised_box(&seq, i).expect("unrealised leaf");
            let kind = StepKind::ExpandLeaf {
                node: i,
                letter,
                formula,
            };
            apply(&mut seq, &kind);
            record(&mut steps, &mut ctx.oracle.stats, kind, &seq);
            continue;
        }
        return Ok(Prove2Result::Star);
    }
}

fn first_unexpanded(
    seq: &NestedSequent,
    pick: impl Fn(&Formula) -> bool,
) -> Option<(NodeId, Formula)> {
    for i in seq.node_ids() {
        for f in &seq.node(i).formulas {
            if !pick(f) {
                continue;
            }
            let (a, b) = match f {
                Formula::Or(a, b) | Formula::And(a, b) => (a, b),
                _ => continue,
            };
            let fs = &seq.node(i).formulas;
            let needs = match f {
                Formula::Or(_, _) => !(fs.contains(a) && fs.contains(b)),
                _ => !fs.contains(a) && !fs.contains(b),
            };
            if needs {
                return Some((i, f.clone()));
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
        StepKind::GrammarProp { to, formula, .. } => {
            seq.add_formulas(*to, [formula.clone()]).expect("node exists");
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
        _ => unreachable!("not a grammar-prover step"),
    }
}

fn record(steps: &mut Vec<Step>, stats: &mut KStats, kind: StepKind, seq: &NestedSequent) {
    stats.steps += 1;
    steps.push(Step {
        kind,
        sequent_hash: seq.stable_hash(),
    });
}

fn fold_steps(steps: Vec<Step>, tail: Trace) -> Trace {
    steps.into_iter().rev().fold(tail, |acc, step| Trace::Step {
        step,
        rest: Box::new(acc),
    })
}

/// Iterative deepening over the height bound. A semi-decision procedure in
/// general; total when the rewrite languages are regular.
pub fn prove(
    system: &SemiThueSystem,
    formula: &Formula,
    config: &ProveConfig,
) -> Result<(ProveOutcome, ProveStats), ProveError> {
    let nnf = formula.nnf();
    let seq = NestedSequent::from_formula(&nnf);
    let mut stats = ProveStats::default();
    let overall_deadline = config.timeout.map(|t| Instant::now() + t);
    for k in 0..=config.max_k {
        let round_config = ProveConfig {
            timeout: overall_deadline.map(|d| d.saturating_duration_since(Instant::now())),
            ..config.clone()
        };
        match prove2(system, &seq, k, &round_config) {
            Ok((result, k_stats)) => {
                stats.per_k.push(k_stats);
                match result {
                    Prove2Result::Top(trace) => return Ok((ProveOutcome::Valid(trace), stats)),
                    Prove2Result::Bottom { sequent, witness } => {
                        return Ok((ProveOutcome::Refuted { sequent, witness }, stats))
                    }
                    Prove2Result::Star => continue,
                }
            }
            Err(ProveError::Timeout) => {
                return Ok((
                    ProveOutcome::Budget {
                        last_k: k,
                        timed_out: true,
                    },
                    stats,
                ))
            }
            Err(e) => return Err(e),
        }
    }
    Ok((
        ProveOutcome::Budget {
            last_k: config.max_k,
            timed_out: false,
        },
        stats,
    ))
}
