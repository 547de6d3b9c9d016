//! Semi-Thue systems closed under converse, bounded rewriting, and the
//! languages generated from a single start letter as context-free grammars.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::formula::{bar_string, word_to_string, Letter, Word};

#[derive(Debug, Error)]
pub enum GrammarError {
    #[error("grammar file, line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("system is not context-free: rule `{0}` has a non-singleton left-hand side")]
    NotContextFree(String),
    #[error("language enumeration hit the step-fuel cap ({fuel}) for letter {letter}")]
    EnumerationCap { letter: Letter, fuel: usize },
}

/// A rewrite rule `u -> v`. Context-free iff the left-hand side is a single
/// letter.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Production {
    pub lhs: Word,
    pub rhs: Word,
}

impl Production {
    pub fn new(lhs: Word, rhs: Word) -> Production {
        assert!(!lhs.is_empty(), "production left-hand side must be nonempty");
        Production { lhs, rhs }
    }

    pub fn is_context_free(&self) -> bool {
        self.lhs.len() == 1
    }

    /// The converse image `u-bar -> v-bar`.
    pub fn bar(&self) -> Production {
        Production {
            lhs: bar_string(&self.lhs),
            rhs: bar_string(&self.rhs),
        }
    }
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", word_to_string(&self.lhs), word_to_string(&self.rhs))
    }
}

/// A set of production rules together with its alphabet. The alphabet is
/// always closed under bar; the rule set need not be closed until
/// [`SemiThueSystem::close`] is applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemiThueSystem {
    productions: BTreeSet<Production>,
    alphabet: BTreeSet<Letter>,
}

/// Result of a bounded language enumeration. `truncated` is set when the
/// step-fuel cap was hit before the search space was exhausted, in which case
/// `words` is a sound under-approximation.
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub words: BTreeSet<Word>,
    pub truncated: bool,
}

pub const DEFAULT_ENUM_FUEL: usize = 200_000;

impl SemiThueSystem {
    pub fn new(productions: impl IntoIterator<Item = Production>) -> SemiThueSystem {
        let productions: BTreeSet<_> = productions.into_iter().collect();
        let mut alphabet = BTreeSet::new();
        for p in &productions {
            for l in p.lhs.iter().chain(p.rhs.iter()) {
                alphabet.insert(l.clone());
                alphabet.insert(l.bar());
            }
        }
        SemiThueSystem {
            productions,
            alphabet,
        }
    }

    pub fn empty() -> SemiThueSystem {
        SemiThueSystem::new([])
    }

    pub fn productions(&self) -> &BTreeSet<Production> {
        &self.productions
    }

    pub fn alphabet(&self) -> &BTreeSet<Letter> {
        &self.alphabet
    }

    /// Extend the alphabet (bar-closed) without adding rules. Used to bring
    /// the letters of a goal formula into scope.
    pub fn extend_alphabet(&mut self, letters: impl IntoIterator<Item = Letter>) {
        for l in letters {
            self.alphabet.insert(l.bar());
            self.alphabet.insert(l);
        }
    }

    pub fn is_context_free(&self) -> bool {
        self.productions.iter().all(Production::is_context_free)
    }

    pub fn is_closed(&self) -> bool {
        self.productions
            .iter()
            .all(|p| self.productions.contains(&p.bar()))
    }

    /// Smallest closed superset: add the bar image of every rule. Idempotent.
    pub fn close(&self) -> SemiThueSystem {
        let mut prods = self.productions.clone();
        for p in &self.productions {
            prods.insert(p.bar());
        }
        let mut out = SemiThueSystem::new(prods);
        out.extend_alphabet(self.alphabet.iter().cloned());
        out
    }

    fn rewrites_of(&self, w: &[Letter]) -> Vec<Word> {
        let mut out = Vec::new();
        for p in &self.productions {
            let n = p.lhs.len();
            if n > w.len() {
                continue;
            }
            for start in 0..=(w.len() - n) {
                if &w[start..start + n] == p.lhs.as_slice() {
                    let mut next = Vec::with_capacity(w.len() - n + p.rhs.len());
                    next.extend_from_slice(&w[..start]);
                    next.extend_from_slice(&p.rhs);
                    next.extend_from_slice(&w[start + n..]);
                    out.push(next);
                }
            }
        }
        out
    }

    /// Does `u` rewrite to `v` in at most `fuel` steps? Zero steps count, so
    /// `derives_bounded(u, u, 0)` is always true.
    pub fn derives_bounded(&self, u: &[Letter], v: &[Letter], fuel: usize) -> bool {
        let mut seen: BTreeSet<Word> = BTreeSet::new();
        let mut frontier = vec![u.to_vec()];
        seen.insert(u.to_vec());
        if u == v {
            return true;
        }
        for _ in 0..fuel {
            let mut next_frontier = Vec::new();
            for w in &frontier {
                for next in self.rewrites_of(w) {
                    if next == v {
                        return true;
                    }
                    if seen.insert(next.clone()) {
                        next_frontier.push(next);
                    }
                }
            }
            if next_frontier.is_empty() {
                return false;
            }
            frontier = next_frontier;
        }
        false
    }

    /// For each letter, the length of the shortest word derivable from it.
    /// Letters that can be erased altogether get 0. Used to prune sentential
    /// forms that can never shrink back under the target length.
    fn min_derivable_len(&self) -> BTreeMap<Letter, usize> {
        let mut min: BTreeMap<Letter, usize> = self
            .alphabet
            .iter()
            .map(|l| (l.clone(), 1))
            .collect();
        let mut changed = true;
        while changed {
            changed = false;
            for p in &self.productions {
                if p.lhs.len() != 1 {
                    continue;
                }
                let total: usize = p.rhs.iter().map(|l| min[l]).sum();
                let entry = min.get_mut(&p.lhs[0]).unwrap();
                if total < *entry {
                    *entry = total;
                    changed = true;
                }
            }
        }
        min
    }

    /// All words of length at most `max_len` derivable from `start`, by
    /// breadth-first saturation of rewrites.
    ///
    /// Sentential forms whose letters cannot jointly shrink below `max_len`
    /// are pruned; for systems where that still leaves an infinite frontier
    /// (growth through erasable letters) the fuel cap bounds the search and
    /// the result is marked truncated.
    pub fn enumerate_language(&self, start: &Letter, max_len: usize) -> Enumeration {
        self.enumerate_language_with_fuel(start, max_len, DEFAULT_ENUM_FUEL)
    }

    pub fn enumerate_language_with_fuel(
        &self,
        start: &Letter,
        max_len: usize,
        fuel: usize,
    ) -> Enumeration {
        let min = if self.is_context_free() {
            Some(self.min_derivable_len())
        } else {
            None
        };
        // Sentential forms longer than this are cut off even when erasing
        // rules could shrink them back; such cuts are reported as
        // truncation. Without the cap, erasing systems grow the frontier
        // without bound.
        let longest_rhs = self.productions.iter().map(|p| p.rhs.len()).max().unwrap_or(0);
        let len_cap = max_len + longest_rhs.max(2);
        // Returns whether to prune, and whether the cut loses words.
        let prune = |w: &[Letter]| -> (bool, bool) {
            match &min {
                Some(min) => {
                    if w.iter().map(|l| min[l]).sum::<usize>() > max_len {
                        // Can never shrink below max_len: a sound cut.
                        (true, false)
                    } else if w.len() > len_cap {
                        (true, true)
                    } else {
                        (false, false)
                    }
                }
                // For general systems fall back to a plain length bound when
                // no rule shrinks strings.
                None => {
                    let sound = self.productions.iter().all(|p| p.rhs.len() >= p.lhs.len());
                    if sound && w.len() > max_len {
                        (true, false)
                    } else if w.len() > len_cap {
                        (true, !sound)
                    } else {
                        (false, false)
                    }
                }
            }
        };

        let mut words = BTreeSet::new();
        let mut seen: BTreeSet<Word> = BTreeSet::new();
        let mut queue: VecDeque<Word> = VecDeque::new();
        let init = vec![start.clone()];
        seen.insert(init.clone());
        queue.push_back(init);
        let mut budget = fuel;
        let mut truncated = false;
        while let Some(w) = queue.pop_front() {
            if budget == 0 {
                truncated = true;
                break;
            }
            budget -= 1;
            if w.len() <= max_len {
                words.insert(w.clone());
            }
            for next in self.rewrites_of(&w) {
                let (cut, lossy) = prune(&next);
                if cut {
                    truncated |= lossy;
                    continue;
                }
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        Enumeration { words, truncated }
    }
}

impl fmt::Display for SemiThueSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.productions {
            writeln!(f, "{p}")?;
        }
        Ok(())
    }
}

/// The language L(start) of a context-free system, as a grammar with one
/// nonterminal per letter. For each rule `b -> c1 .. ck` there is a grammar
/// production `N_b -> N_c1 .. N_ck`, and every letter `b` of the alphabet has
/// the terminal production `N_b -> b` (letters derive themselves).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfg {
    pub start: Letter,
    pub rules: Vec<(Letter, Word)>,
    pub alphabet: BTreeSet<Letter>,
}

/// Transcribe a context-free system into the grammar for `L_start`.
pub fn cfg_for(system: &SemiThueSystem, start: &Letter) -> Result<Cfg, GrammarError> {
    let mut rules = Vec::new();
    for p in system.productions() {
        if !p.is_context_free() {
            return Err(GrammarError::NotContextFree(p.to_string()));
        }
        rules.push((p.lhs[0].clone(), p.rhs.clone()));
    }
    let mut alphabet = system.alphabet().clone();
    alphabet.insert(start.bar());
    alphabet.insert(start.clone());
    Ok(Cfg {
        start: start.clone(),
        rules,
        alphabet,
    })
}

/// Outcome of loading a grammar file: the closed system, plus whether closure
/// had to add any rules beyond those written in the file.
#[derive(Debug, Clone)]
pub struct LoadedSystem {
    pub system: SemiThueSystem,
    pub closure_added_rules: bool,
}

/// Parse a grammar file: one production per line (`a -> b c d`, `a -> eps`),
/// `#` comments. The result is closed under converse automatically.
pub fn parse_system(input: &str) -> Result<LoadedSystem, GrammarError> {
    let mut prods = Vec::new();
    for (idx, raw) in input.lines().enumerate() {
        let line = idx + 1;
        let text = raw.split('#').next().unwrap().trim();
        if text.is_empty() {
            continue;
        }
        let (lhs_text, rhs_text) = text.split_once("->").ok_or_else(|| GrammarError::Syntax {
            line,
            msg: "expected `lhs -> rhs`".to_string(),
        })?;
        let parse_word = |part: &str| -> Result<Word, GrammarError> {
            part.split_whitespace()
                .map(|tok| {
                    tok.parse::<Letter>().map_err(|msg| GrammarError::Syntax { line, msg })
                })
                .collect()
        };
        let lhs = parse_word(lhs_text)?;
        if lhs.is_empty() {
            return Err(GrammarError::Syntax {
                line,
                msg: "empty left-hand side".to_string(),
            });
        }
        let rhs_text = rhs_text.trim();
        let rhs = if rhs_text == "eps" {
            Vec::new()
        } else {
            parse_word(rhs_text)?
        };
        prods.push(Production::new(lhs, rhs));
    }
    let raw = SemiThueSystem::new(prods);
    let system = raw.close();
    let closure_added_rules = system.productions().len() != raw.productions().len();
    Ok(LoadedSystem {
        system,
        closure_added_rules,
    })
}
