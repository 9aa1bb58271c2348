//! Allocations, distributions over allocations, and assignment
//! probability matrices.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::rational::{format_pq, Rational};
use num::traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Where a single item ended up. `Discarded` arises when a rule finds
/// no eligible recipient: Ranking and Random skip items whose positive
/// bidders are all served, and any rule skips an item that no agent
/// bids positively for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Assignee {
    Agent(usize),
    Discarded,
}

impl fmt::Display for Assignee {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assignee::Agent(i) => write!(f, "{i}"),
            Assignee::Discarded => write!(f, "-"),
        }
    }
}

/// A complete run outcome: one assignee per item, indexed by item.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Allocation(pub Vec<Assignee>);

impl Allocation {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of distinct agents receiving at least one item.
    pub fn matching_size(&self, n: usize) -> usize {
        let mut served = vec![false; n];
        for a in &self.0 {
            if let Assignee::Agent(i) = a {
                served[*i] = true;
            }
        }
        served.iter().filter(|&&s| s).count()
    }

    /// Agent `i`'s total utility for the bundle it receives.
    pub fn agent_utility(&self, inst: &Instance, agent: usize) -> Rational {
        let mut total = Rational::zero();
        for (item, a) in self.0.iter().enumerate() {
            if *a == Assignee::Agent(agent) {
                total += inst.utility(agent, item);
            }
        }
        total
    }

    /// Utility agent `viewer` assigns to the bundle `owner` receives.
    pub fn bundle_value_for(&self, inst: &Instance, viewer: usize, owner: usize) -> Rational {
        let mut total = Rational::zero();
        for (item, a) in self.0.iter().enumerate() {
            if *a == Assignee::Agent(owner) {
                total += inst.utility(viewer, item);
            }
        }
        total
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(Assignee::to_string).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// An exact probability distribution over allocations. Entries are
/// pairwise distinct, carry positive probability, and sum to one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AllocationDistribution {
    entries: Vec<(Allocation, Rational)>,
}

impl AllocationDistribution {
    /// Builds a distribution, merging duplicate allocations and
    /// dropping zero-probability entries before validating.
    pub fn from_entries(entries: Vec<(Allocation, Rational)>) -> Result<Self> {
        let mut merged: BTreeMap<Allocation, Rational> = BTreeMap::new();
        for (alloc, p) in entries {
            if p.is_negative() {
                return Err(Error::InvalidDistribution(format!(
                    "negative probability {} for {}",
                    format_pq(&p),
                    alloc
                )));
            }
            if p.is_zero() {
                continue;
            }
            *merged.entry(alloc).or_insert_with(Rational::zero) += p;
        }
        let dist = AllocationDistribution {
            entries: merged.into_iter().collect(),
        };
        dist.validate()?;
        Ok(dist)
    }

    pub fn validate(&self) -> Result<()> {
        let mut total = Rational::zero();
        let mut len = None;
        for (alloc, p) in &self.entries {
            if p.is_zero() || p.is_negative() || p > &Rational::one() {
                return Err(Error::InvalidDistribution(format!(
                    "probability {} outside (0, 1]",
                    format_pq(p)
                )));
            }
            match len {
                None => len = Some(alloc.len()),
                Some(l) if l != alloc.len() => {
                    return Err(Error::InvalidDistribution(
                        "support allocations have mixed lengths".into(),
                    ))
                }
                _ => {}
            }
            total += p;
        }
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {}, not 1",
                format_pq(&total)
            )));
        }
        Ok(())
    }

    /// Support entries in canonical (lexicographic) order.
    pub fn entries(&self) -> &[(Allocation, Rational)] {
        &self.entries
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    /// Probability of a specific allocation (zero if absent).
    pub fn probability_of(&self, alloc: &Allocation) -> Rational {
        self.entries
            .iter()
            .find(|(a, _)| a == alloc)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(Rational::zero)
    }
}

/// Exact per-agent, per-item assignment probabilities: `p[i][j]` is
/// the probability that agent `i` receives item `j`. Column sums stay
/// at or below one; mass missing from a column is discard probability.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssignmentMatrix {
    pub n: usize,
    pub m: usize,
    pub p: Vec<Vec<Rational>>,
}

impl AssignmentMatrix {
    pub fn zeros(n: usize, m: usize) -> Self {
        AssignmentMatrix {
            n,
            m,
            p: vec![vec![Rational::zero(); m]; n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p.len() != self.n || self.p.iter().any(|row| row.len() != self.m) {
            return Err(Error::DimensionMismatch(
                "assignment matrix shape does not match its dimensions".into(),
            ));
        }
        for row in &self.p {
            for v in row {
                if v.is_negative() || v > &Rational::one() {
                    return Err(Error::InvalidDistribution(format!(
                        "assignment probability {} outside [0, 1]",
                        format_pq(v)
                    )));
                }
            }
        }
        for j in 0..self.m {
            let sum = self.column_sum(j);
            if sum > Rational::one() {
                return Err(Error::InvalidDistribution(format!(
                    "column {} sums to {}",
                    j,
                    format_pq(&sum)
                )));
            }
        }
        Ok(())
    }

    /// Total probability that item `j` is allocated to anyone.
    pub fn column_sum(&self, item: usize) -> Rational {
        let mut sum = Rational::zero();
        for i in 0..self.n {
            sum += &self.p[i][item];
        }
        sum
    }
}
