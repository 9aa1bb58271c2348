//! The online allocation mechanisms as per-round decision rules.
//!
//! Every base rule reduces to "pick uniformly from a candidate set of
//! positive bidders, or discard when the set is empty":
//!
//! * uniform split — every positive bidder;
//! * balanced split — positive bidders holding the fewest items;
//! * highest bid — positive bidders with the maximal bid;
//! * priority match — the single highest-priority positive bidder who
//!   has no item yet (deterministic per priority order; the mechanism
//!   is the uniform mixture over all `n!` orders);
//! * first-timers split — positive bidders with no item yet, with the
//!   item discarded if everyone interested is already served.
//!
//! The advised wrapper overrides whole rounds: when the tape names an
//! agent for the current round, that agent receives the item with
//! probability one (and counts as served from then on); other rounds
//! fall through to the base rule.

use crate::advice::AdviceTape;
use crate::allocation::Assignee;
use crate::error::{Error, Result};
use crate::instance::{BidProfile, Instance};
use crate::rational::{rat, Rational};

/// The five base mechanisms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MechanismKind {
    Like,
    BalancedLike,
    MaximumLike,
    Ranking,
    Random,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 5] = [
        MechanismKind::Like,
        MechanismKind::BalancedLike,
        MechanismKind::MaximumLike,
        MechanismKind::Ranking,
        MechanismKind::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MechanismKind::Like => "like",
            MechanismKind::BalancedLike => "balanced-like",
            MechanismKind::MaximumLike => "maximum-like",
            MechanismKind::Ranking => "ranking",
            MechanismKind::Random => "random",
        }
    }

    /// Whether evaluation must average over the `n!` priority orders.
    pub fn uses_priority(self) -> bool {
        matches!(self, MechanismKind::Ranking)
    }
}

impl std::fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MechanismKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "like" => Ok(MechanismKind::Like),
            "balanced-like" => Ok(MechanismKind::BalancedLike),
            "maximum-like" => Ok(MechanismKind::MaximumLike),
            "ranking" => Ok(MechanismKind::Ranking),
            "random" => Ok(MechanismKind::Random),
            other => Err(Error::Unsupported(format!(
                "unknown mechanism `{other}` (expected like, balanced-like, maximum-like, ranking, or random)"
            ))),
        }
    }
}

/// A mechanism to evaluate: a base rule, optionally wrapped with an
/// advice tape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MechanismSpec {
    pub kind: MechanismKind,
    pub advice: Option<AdviceTape>,
}

impl MechanismSpec {
    pub fn base(kind: MechanismKind) -> Self {
        MechanismSpec { kind, advice: None }
    }

    pub fn advised(kind: MechanismKind, tape: AdviceTape) -> Self {
        MechanismSpec {
            kind,
            advice: Some(tape),
        }
    }

    pub fn is_advised(&self) -> bool {
        self.advice.is_some()
    }

    /// The identifier used in command lines and reports, e.g.
    /// `"balanced-like"` or `"advised:ranking"`.
    pub fn id(&self) -> String {
        match &self.advice {
            Some(_) => format!("advised:{}", self.kind.as_str()),
            None => self.kind.as_str().to_string(),
        }
    }
}

/// Mutable per-run state: item counts (an agent is "served" once its
/// count is positive), the current round, and — for the priority
/// mechanism — the fixed priority order (`priority[0]` is served
/// first).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MechanismState {
    pub counts: Vec<u32>,
    pub round: usize,
    pub priority: Option<Vec<usize>>,
}

impl MechanismState {
    pub fn new(n: usize) -> Self {
        MechanismState {
            counts: vec![0; n],
            round: 0,
            priority: None,
        }
    }

    pub fn with_priority(n: usize, priority: Vec<usize>) -> Self {
        MechanismState {
            counts: vec![0; n],
            round: 0,
            priority: Some(priority),
        }
    }

    pub fn served(&self, agent: usize) -> bool {
        self.counts[agent] > 0
    }

    /// Applies one round's outcome and advances the round counter.
    pub fn record(&mut self, assignee: Assignee) {
        if let Assignee::Agent(a) = assignee {
            self.counts[a] += 1;
        }
        self.round += 1;
    }
}

/// One possible outcome of a round with its probability.
pub type Branch = (Assignee, Rational);

/// The agents a base rule splits the item over, in agent-index order.
/// An empty set means the item is discarded.
pub fn candidate_set(
    kind: MechanismKind,
    bids: &BidProfile,
    state: &MechanismState,
    item: usize,
) -> Result<Vec<usize>> {
    let bidders = bids.positive_bidders(item);
    Ok(match kind {
        MechanismKind::Like => bidders,
        MechanismKind::BalancedLike => {
            let min = bidders.iter().map(|&a| state.counts[a]).min();
            match min {
                Some(min) => bidders
                    .into_iter()
                    .filter(|&a| state.counts[a] == min)
                    .collect(),
                None => Vec::new(),
            }
        }
        MechanismKind::MaximumLike => {
            let max = bidders.iter().map(|&a| &bids.bids[a][item]).max();
            match max {
                Some(max) => {
                    let max = max.clone();
                    bidders
                        .into_iter()
                        .filter(|&a| bids.bids[a][item] == max)
                        .collect()
                }
                None => Vec::new(),
            }
        }
        MechanismKind::Random => bidders
            .into_iter()
            .filter(|&a| !state.served(a))
            .collect(),
        MechanismKind::Ranking => {
            let priority = state.priority.as_ref().ok_or_else(|| {
                Error::Unsupported("the priority mechanism needs a priority order".into())
            })?;
            priority
                .iter()
                .copied()
                .find(|&a| !state.served(a) && bidders.contains(&a))
                .into_iter()
                .collect()
        }
    })
}

/// The full branch list for one round: the advised agent with
/// probability one on advised rounds, otherwise a uniform split over
/// the base rule's candidate set (or a certain discard when empty).
pub fn decide(
    spec: &MechanismSpec,
    inst: &Instance,
    bids: &BidProfile,
    state: &MechanismState,
) -> Result<Vec<Branch>> {
    if let Some(tape) = &spec.advice {
        if let Some(agent) = tape.advised_agent(state.round) {
            return Ok(vec![(Assignee::Agent(agent), rat(1, 1))]);
        }
    }
    let item = inst.item_at(state.round);
    let candidates = candidate_set(spec.kind, bids, state, item)?;
    if candidates.is_empty() {
        return Ok(vec![(Assignee::Discarded, rat(1, 1))]);
    }
    let share = rat(1, candidates.len() as i64);
    Ok(candidates
        .into_iter()
        .map(|a| (Assignee::Agent(a), share.clone()))
        .collect())
}
