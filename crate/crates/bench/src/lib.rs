//! Shared fixtures for the benchmarks.

use gramlog::formula::Letter;
use gramlog::grammar::{Production, SemiThueSystem};

pub fn a() -> Letter {
    Letter::plain("a")
}

pub fn b() -> Letter {
    Letter::plain("b")
}

/// Transitive system {a -> aa} plus its converse image.
pub fn k4() -> SemiThueSystem {
    SemiThueSystem::new([Production::new(vec![a()], vec![a(), a()])]).close()
}

/// Two-letter interaction {a -> bb} plus its converse image.
pub fn interaction() -> SemiThueSystem {
    SemiThueSystem::new([Production::new(vec![a()], vec![b(), b()])]).close()
}
