//! Modal formulae over an alphabet with converse, and negation normal form.
//!
//! The alphabet is split into positive letters `a` and their converses `a^-`;
//! taking the converse (`bar`) flips between the two halves, so `bar` is an
//! involution by construction.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A modal index: a base name plus a polarity. `a^-` is the converse of `a`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    base: String,
    barred: bool,
}

impl Letter {
    pub fn plain(base: impl Into<String>) -> Letter {
        Letter {
            base: base.into(),
            barred: false,
        }
    }

    pub fn barred(base: impl Into<String>) -> Letter {
        Letter {
            base: base.into(),
            barred: true,
        }
    }

    /// The converse letter: flips polarity, keeps the base name.
    pub fn bar(&self) -> Letter {
        Letter {
            base: self.base.clone(),
            barred: !self.barred,
        }
    }

    pub fn is_barred(&self) -> bool {
        self.barred
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    /// The positive-polarity representative of this letter.
    pub fn positive(&self) -> Letter {
        Letter {
            base: self.base.clone(),
            barred: false,
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.barred {
            write!(f, "{}^-", self.base)
        } else {
            write!(f, "{}", self.base)
        }
    }
}

impl FromStr for Letter {
    type Err = String;

    fn from_str(s: &str) -> Result<Letter, String> {
        let (base, barred) = match s.strip_suffix("^-") {
            Some(b) => (b, true),
            None => (s, false),
        };
        if base.is_empty()
            || !base.chars().next().unwrap().is_ascii_alphabetic()
            || !base.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            return Err(format!("invalid letter: {s:?}"));
        }
        Ok(Letter {
            base: base.to_string(),
            barred,
        })
    }
}

impl Serialize for Letter {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Letter {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Letter, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// A string over the alphabet.
pub type Word = Vec<Letter>;

/// Converse of a string: reverse it and bar every letter.
pub fn bar_string(u: &[Letter]) -> Word {
    u.iter().rev().map(Letter::bar).collect()
}

pub fn word_to_string(w: &[Letter]) -> String {
    if w.is_empty() {
        "eps".to_string()
    } else {
        w.iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A modal formula. `NegAtom` is the only form negation takes in NNF;
/// `Neg` nodes appear in parsed input and are removed by [`Formula::nnf`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(String),
    NegAtom(String),
    Neg(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Box(Letter, Box<Formula>),
    Dia(Letter, Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Formula {
        Formula::Atom(name.into())
    }

    pub fn neg_atom(name: impl Into<String>) -> Formula {
        Formula::NegAtom(name.into())
    }

    pub fn neg(f: Formula) -> Formula {
        Formula::Neg(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn imp(a: Formula, b: Formula) -> Formula {
        Formula::or(Formula::neg(a), b)
    }

    pub fn boxed(l: Letter, f: Formula) -> Formula {
        Formula::Box(l, Box::new(f))
    }

    pub fn dia(l: Letter, f: Formula) -> Formula {
        Formula::Dia(l, Box::new(f))
    }

    /// Box prefix over a string: `[a1][a2]...[an] f`.
    pub fn boxed_word(u: &[Letter], f: Formula) -> Formula {
        u.iter()
            .rev()
            .fold(f, |acc, l| Formula::boxed(l.clone(), acc))
    }

    pub fn dia_word(u: &[Letter], f: Formula) -> Formula {
        u.iter().rev().fold(f, |acc, l| Formula::dia(l.clone(), acc))
    }

    /// Number of nodes in the syntax tree.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::NegAtom(_) => 1,
            Formula::Neg(f) | Formula::Box(_, f) | Formula::Dia(_, f) => 1 + f.size(),
            Formula::And(a, b) | Formula::Or(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn is_nnf(&self) -> bool {
        match self {
            Formula::Atom(_) | Formula::NegAtom(_) => true,
            Formula::Neg(_) => false,
            Formula::And(a, b) | Formula::Or(a, b) => a.is_nnf() && b.is_nnf(),
            Formula::Box(_, f) | Formula::Dia(_, f) => f.is_nnf(),
        }
    }

    /// Negation normal form: push negations to the atoms.
    pub fn nnf(&self) -> Formula {
        match self {
            Formula::Atom(_) | Formula::NegAtom(_) => self.clone(),
            Formula::Neg(f) => f.negated_nnf(),
            Formula::And(a, b) => Formula::and(a.nnf(), b.nnf()),
            Formula::Or(a, b) => Formula::or(a.nnf(), b.nnf()),
            Formula::Box(l, f) => Formula::boxed(l.clone(), f.nnf()),
            Formula::Dia(l, f) => Formula::dia(l.clone(), f.nnf()),
        }
    }

    /// NNF of the negation of this formula.
    pub fn lneg(&self) -> Formula {
        self.negated_nnf()
    }

    fn negated_nnf(&self) -> Formula {
        match self {
            Formula::Atom(p) => Formula::NegAtom(p.clone()),
            Formula::NegAtom(p) => Formula::Atom(p.clone()),
            Formula::Neg(f) => f.nnf(),
            Formula::And(a, b) => Formula::or(a.negated_nnf(), b.negated_nnf()),
            Formula::Or(a, b) => Formula::and(a.negated_nnf(), b.negated_nnf()),
            Formula::Box(l, f) => Formula::dia(l.clone(), f.negated_nnf()),
            Formula::Dia(l, f) => Formula::boxed(l.clone(), f.negated_nnf()),
        }
    }

    /// All subformulae, including the formula itself.
    pub fn subformulas(&self) -> BTreeSet<Formula> {
        let mut out = BTreeSet::new();
        self.collect_subformulas(&mut out);
        out
    }

    fn collect_subformulas(&self, out: &mut BTreeSet<Formula>) {
        out.insert(self.clone());
        match self {
            Formula::Atom(_) | Formula::NegAtom(_) => {}
            Formula::Neg(f) | Formula::Box(_, f) | Formula::Dia(_, f) => {
                f.collect_subformulas(out)
            }
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_subformulas(out);
                b.collect_subformulas(out);
            }
        }
    }

    /// Atom names occurring in the formula.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(p) | Formula::NegAtom(p) => {
                out.insert(p.clone());
            }
            Formula::Neg(f) | Formula::Box(_, f) | Formula::Dia(_, f) => f.collect_atoms(out),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Modal indices occurring in the formula (not closed under bar).
    pub fn letters(&self) -> BTreeSet<Letter> {
        let mut out = BTreeSet::new();
        self.collect_letters(&mut out);
        out
    }

    fn collect_letters(&self, out: &mut BTreeSet<Letter>) {
        match self {
            Formula::Atom(_) | Formula::NegAtom(_) => {}
            Formula::Neg(f) => f.collect_letters(out),
            Formula::Box(l, f) | Formula::Dia(l, f) => {
                out.insert(l.clone());
                f.collect_letters(out);
            }
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_letters(out);
                b.collect_letters(out);
            }
        }
    }

    fn variant_rank(&self) -> u8 {
        match self {
            Formula::Atom(_) => 0,
            Formula::NegAtom(_) => 1,
            Formula::Neg(_) => 2,
            Formula::And(..) => 3,
            Formula::Or(..) => 4,
            Formula::Box(..) => 5,
            Formula::Dia(..) => 6,
        }
    }

    fn structural_cmp(&self, other: &Formula) -> Ordering {
        use Formula::*;
        match (self, other) {
            (Atom(a), Atom(b)) | (NegAtom(a), NegAtom(b)) => a.cmp(b),
            (Neg(a), Neg(b)) => a.cmp(b),
            (And(a1, b1), And(a2, b2)) | (Or(a1, b1), Or(a2, b2)) => {
                a1.cmp(a2).then_with(|| b1.cmp(b2))
            }
            (Box(l1, f1), Box(l2, f2)) | (Dia(l1, f1), Dia(l2, f2)) => {
                l1.cmp(l2).then_with(|| f1.cmp(f2))
            }
            _ => self.variant_rank().cmp(&other.variant_rank()),
        }
    }
}

// Formulae are ordered by size first, so the deterministic scan order used by
// the provers ("smallest formula first") is just the natural order.
impl Ord for Formula {
    fn cmp(&self, other: &Formula) -> Ordering {
        self.size()
            .cmp(&other.size())
            .then_with(|| self.structural_cmp(other))
    }
}

impl PartialOrd for Formula {
    fn partial_cmp(&self, other: &Formula) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl Formula {
    // Precedence levels: 0 = or, 1 = and, 2 = unary/atom.
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Formula::Atom(p) => write!(f, "{p}"),
            Formula::NegAtom(p) => write!(f, "~{p}"),
            Formula::Neg(inner) => {
                write!(f, "~")?;
                inner.fmt_prec(f, 2)
            }
            Formula::And(a, b) => {
                if prec > 1 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 2)?;
                write!(f, " & ")?;
                b.fmt_prec(f, 2)?;
                if prec > 1 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Formula::Or(a, b) => {
                if prec > 0 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 1)?;
                write!(f, " | ")?;
                b.fmt_prec(f, 1)?;
                if prec > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Formula::Box(l, inner) => {
                write!(f, "[{l}]")?;
                inner.fmt_prec(f, 2)
            }
            Formula::Dia(l, inner) => {
                write!(f, "<{l}>")?;
                inner.fmt_prec(f, 2)
            }
        }
    }
}

impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Formula, D::Error> {
        let s = String::deserialize(d)?;
        crate::parse::parse_formula(&s).map_err(D::Error::custom)
    }
}
