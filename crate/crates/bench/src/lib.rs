//! Shared fixtures for the benchmark suite.

use onfair_core::generators::{like_adversary, random_instance, upper_triangular};
use onfair_core::rational::{rat, rat_int};
use onfair_core::{Instance, Rational, UtilityRegime};

/// The n-agent triangular square: items shed one bidder each round, so
/// the early rounds are maximally contested — the exact engines' worst
/// case among the named families.
pub fn triangular(n: usize) -> Instance {
    upper_triangular(n)
}

/// The adversarial family (half the items popular, half single-bidder)
/// that pins like-style mechanisms near an n/2 serve rate.
pub fn adversary(n: usize) -> Instance {
    like_adversary(n).expect("the adversarial family needs an even n")
}

/// A seeded dense general-utility instance.
pub fn dense_general(n: usize, m: usize) -> Instance {
    random_instance(n, m, UtilityRegime::General, 7)
}

/// An exactly bistochastic matrix: the mixture of the n cyclic shifts
/// with weights proportional to 1, 2, ..., n. Dense, with no zero
/// cells, so the decomposition cannot shortcut.
pub fn cyclic_bistochastic(n: usize) -> Vec<Vec<Rational>> {
    let total = (n * (n + 1) / 2) as i64;
    let mut p = vec![vec![rat_int(0); n]; n];
    for s in 0..n {
        let w = rat((s + 1) as i64, total);
        for (i, row) in p.iter_mut().enumerate() {
            row[(i + s) % n] += w.clone();
        }
    }
    p
}
