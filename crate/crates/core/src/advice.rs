//! Advice tapes: offline-computed hints an online mechanism may read.
//!
//! A tape fixes, for some advised rounds, the agent who must receive
//! that round's item. The agent choices are serialized into a bit
//! string whose length is the information-theoretic budget: choices of
//! `k` *distinct* agents out of `n` use a mixed-radix code over the
//! shrinking list of remaining agents (`ceil(log2 n!/(n-k)!)` bits);
//! unrestricted choices use a base-`n` positional code
//! (`ceil(k*log2 n)` bits). Oracles build tapes that target one of the
//! three welfare objectives.

use crate::error::{Error, Result};
use crate::instance::{Instance, UtilityRegime};
use crate::offline::{lex_min_matching, max_matching, offline_ew, offline_uw};
use crate::welfare::Objective;
use num::traits::Zero;
use num::{BigUint, Integer};
use std::collections::BTreeSet;

/// How the agent choices of a tape are packed into bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdviceEncoding {
    /// Mixed-radix code over the shrinking remaining-agent list;
    /// requires pairwise distinct agents.
    Distinct,
    /// Plain base-`n` positional code; agents may repeat.
    BaseN,
}

/// An advice tape: the advised `(round, agent)` pairs plus their
/// bit-string encoding and the declared bit budget.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdviceTape {
    /// Advised rounds with their designated agents, sorted by round.
    pub entries: Vec<(usize, usize)>,
    /// Number of agents in the underlying instance.
    pub n: usize,
    /// Agent choices encoded most-significant-bit first.
    pub bits: Vec<bool>,
    /// Always equal to `bits.len()`; the budget the tape declares.
    pub declared_bit_budget: usize,
    /// The coarser `ceil(log2 k!)` figure, reported alongside.
    pub factorial_bits: usize,
    pub encoding: AdviceEncoding,
}

/// Bits needed to address `count` distinct codewords (zero when the
/// space has at most one element).
pub fn bits_for_count(count: &BigUint) -> usize {
    if count <= &BigUint::from(1u8) {
        0
    } else {
        (count - 1u8).bits() as usize
    }
}

/// `n * (n-1) * … * (n-k+1)`: the number of length-`k` sequences of
/// distinct agents out of `n`.
pub fn falling_factorial(n: usize, k: usize) -> BigUint {
    let mut ff = BigUint::from(1u8);
    for i in 0..k {
        ff *= BigUint::from(n - i);
    }
    ff
}

pub fn factorial(k: usize) -> BigUint {
    falling_factorial(k, k)
}

fn value_to_bits(value: &BigUint, len: usize) -> Vec<bool> {
    (0..len).rev().map(|b| value.bit(b as u64)).collect()
}

fn bits_to_value(bits: &[bool]) -> BigUint {
    let mut v = BigUint::from(0u8);
    for &b in bits {
        v <<= 1u8;
        if b {
            v += 1u8;
        }
    }
    v
}

/// Packs `k` distinct agent choices into the mixed-radix code: digit
/// `i` is the choice's index in the list of agents not yet used, and
/// the digits accumulate with radices `n`, `n-1`, ….
pub fn encode_distinct(choices: &[usize], n: usize) -> Result<Vec<bool>> {
    let k = choices.len();
    if k > n {
        return Err(Error::InvalidTape(format!(
            "cannot pick {k} distinct agents out of {n}"
        )));
    }
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut value = BigUint::from(0u8);
    for (i, &agent) in choices.iter().enumerate() {
        let digit = remaining
            .iter()
            .position(|&a| a == agent)
            .ok_or_else(|| {
                Error::InvalidTape(format!(
                    "agent {agent} is out of range or repeated in the advice"
                ))
            })?;
        value = value * BigUint::from(n - i) + BigUint::from(digit);
        remaining.remove(digit);
    }
    Ok(value_to_bits(&value, bits_for_count(&falling_factorial(n, k))))
}

/// Inverse of [`encode_distinct`].
pub fn decode_distinct(bits: &[bool], n: usize, k: usize) -> Result<Vec<usize>> {
    if k > n {
        return Err(Error::InvalidTape(format!(
            "cannot pick {k} distinct agents out of {n}"
        )));
    }
    let mut value = bits_to_value(bits);
    if value >= falling_factorial(n, k) {
        return Err(Error::InvalidTape(
            "code value out of range for the declared shape".into(),
        ));
    }
    let mut digits = vec![0usize; k];
    for i in (0..k).rev() {
        let radix = BigUint::from(n - i);
        let (q, r) = value.div_rem(&radix);
        digits[i] = usize::try_from(u64::try_from(&r).expect("digit fits")).expect("digit fits");
        value = q;
    }
    let mut remaining: Vec<usize> = (0..n).collect();
    Ok(digits
        .into_iter()
        .map(|d| remaining.remove(d))
        .collect())
}

/// Packs `k` (possibly repeating) agent choices base `n`.
pub fn encode_base_n(choices: &[usize], n: usize) -> Result<Vec<bool>> {
    let mut value = BigUint::from(0u8);
    for &agent in choices {
        if agent >= n {
            return Err(Error::InvalidTape(format!(
                "agent {agent} is out of range for n = {n}"
            )));
        }
        value = value * BigUint::from(n) + BigUint::from(agent);
    }
    let count = BigUint::from(n).pow(choices.len() as u32);
    Ok(value_to_bits(&value, bits_for_count(&count)))
}

/// Inverse of [`encode_base_n`].
pub fn decode_base_n(bits: &[bool], n: usize, k: usize) -> Result<Vec<usize>> {
    let mut value = bits_to_value(bits);
    if value >= BigUint::from(n).pow(k as u32) {
        return Err(Error::InvalidTape(
            "code value out of range for the declared shape".into(),
        ));
    }
    let radix = BigUint::from(n);
    let mut out = vec![0usize; k];
    for slot in out.iter_mut().rev() {
        let (q, r) = value.div_rem(&radix);
        *slot = usize::try_from(u64::try_from(&r).expect("digit fits")).expect("digit fits");
        value = q;
    }
    Ok(out)
}

impl AdviceTape {
    /// An empty tape: no advised rounds, zero bits.
    pub fn empty(n: usize) -> Self {
        AdviceTape {
            entries: Vec::new(),
            n,
            bits: Vec::new(),
            declared_bit_budget: 0,
            factorial_bits: 0,
            encoding: AdviceEncoding::Distinct,
        }
    }

    /// Builds a tape from `(round, agent)` assignments, encoding the
    /// agent choices in increasing round order.
    pub fn from_assignments(
        n: usize,
        m: usize,
        mut entries: Vec<(usize, usize)>,
        encoding: AdviceEncoding,
    ) -> Result<Self> {
        entries.sort();
        let rounds: BTreeSet<usize> = entries.iter().map(|&(r, _)| r).collect();
        if rounds.len() != entries.len() {
            return Err(Error::InvalidTape("a round is advised twice".into()));
        }
        if entries.iter().any(|&(r, a)| r >= m || a >= n) {
            return Err(Error::InvalidTape(
                "advised round or agent out of range".into(),
            ));
        }
        let choices: Vec<usize> = entries.iter().map(|&(_, a)| a).collect();
        let bits = match encoding {
            AdviceEncoding::Distinct => encode_distinct(&choices, n)?,
            AdviceEncoding::BaseN => encode_base_n(&choices, n)?,
        };
        let k = choices.len();
        Ok(AdviceTape {
            entries,
            n,
            declared_bit_budget: bits.len(),
            factorial_bits: bits_for_count(&factorial(k)),
            bits,
            encoding,
        })
    }

    /// Number of advised rounds.
    pub fn k(&self) -> usize {
        self.entries.len()
    }

    /// Number of distinct advised agents (the `l` parameter).
    pub fn distinct_agent_count(&self) -> usize {
        self.entries
            .iter()
            .map(|&(_, a)| a)
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// The agent advised for a round, if any.
    pub fn advised_agent(&self, round: usize) -> Option<usize> {
        self.entries
            .iter()
            .find(|&&(r, _)| r == round)
            .map(|&(_, a)| a)
    }

    /// Re-decodes the agent choices from the bit string (sanity path;
    /// must equal the agents of `entries`).
    pub fn decode_choices(&self) -> Result<Vec<usize>> {
        match self.encoding {
            AdviceEncoding::Distinct => decode_distinct(&self.bits, self.n, self.k()),
            AdviceEncoding::BaseN => decode_base_n(&self.bits, self.n, self.k()),
        }
    }

    /// The bit string as text, e.g. `"101"`; empty for zero bits.
    pub fn bits_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    /// Hex form of the code value, zero-padded to the nibble count of
    /// the bit budget; empty for zero bits.
    pub fn to_hex(&self) -> String {
        if self.bits.is_empty() {
            return String::new();
        }
        let value = bits_to_value(&self.bits);
        let width = self.bits.len().div_ceil(4);
        format!("{value:0>width$x}")
    }
}

/// Descriptive metadata for an oracle-built tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OraclePolicy {
    pub objective: Objective,
    pub regime: UtilityRegime,
    /// Number of advised items.
    pub k: usize,
    /// Number of distinct advised agents.
    pub l: usize,
}

/// Builds the advice tape for the matching-size objective: one perfect
/// matching of agents to liked items is computed offline, and the
/// first `k` matched items in arrival order are advised to their
/// matched agents. Requires a perfect matching.
pub fn oracle_es(inst: &Instance, k: usize) -> Result<AdviceTape> {
    if k > inst.m {
        return Err(Error::InvalidTape(format!(
            "cannot advise {k} of {} items",
            inst.m
        )));
    }
    let matching = max_matching(inst.n, inst.m, |i, j| {
        !inst.utility(i, j).is_zero()
    });
    if matching.iter().any(Option::is_none) {
        return Err(Error::NoPerfectMatching);
    }
    let mut agent_of_item = vec![None; inst.m];
    for (agent, item) in matching.iter().enumerate() {
        agent_of_item[item.expect("perfect matching")] = Some(agent);
    }
    let entries: Vec<(usize, usize)> = (0..inst.m)
        .filter_map(|round| {
            agent_of_item[inst.item_at(round)].map(|agent| (round, agent))
        })
        .take(k)
        .collect();
    if entries.len() < k {
        return Err(Error::InvalidTape(format!(
            "only {} matched items exist, cannot advise {k}",
            entries.len()
        )));
    }
    AdviceTape::from_assignments(inst.n, inst.m, entries, AdviceEncoding::Distinct)
}

/// Builds the advice tape for the utilitarian objective: the `k` items
/// of largest best-agent utility (ties: lower item index) are each
/// advised to an agent valuing them most (ties: lower agent index).
/// Agents may repeat.
pub fn oracle_uw(inst: &Instance, k: usize) -> Result<AdviceTape> {
    if k > inst.m {
        return Err(Error::InvalidTape(format!(
            "cannot advise {k} of {} items",
            inst.m
        )));
    }
    let (_, best_agent) = offline_uw(inst);
    let mut items: Vec<usize> = (0..inst.m).collect();
    items.sort_by(|&a, &b| {
        inst.utility(best_agent[b], b)
            .cmp(inst.utility(best_agent[a], a))
            .then(a.cmp(&b))
    });
    let chosen: BTreeSet<usize> = items.into_iter().take(k).collect();
    let entries: Vec<(usize, usize)> = (0..inst.m)
        .filter(|round| chosen.contains(&inst.item_at(*round)))
        .map(|round| (round, best_agent[inst.item_at(round)]))
        .collect();
    AdviceTape::from_assignments(inst.n, inst.m, entries, AdviceEncoding::BaseN)
}

/// Builds the advice tape for the egalitarian objective: an
/// egalitarian-optimal complete allocation is computed offline
/// (lexicographically smallest witness) and its choices for the first
/// `k` rounds are advised. Advised items always go to their witness
/// owners, so advice can only add to what an agent would have won
/// unadvised. With `m == n` and a positive optimum the witness is a
/// perfect matching, so the tape names `k` distinct agents and uses
/// the distinct encoding; otherwise agents may repeat.
pub fn oracle_ew(inst: &Instance, k: usize) -> Result<AdviceTape> {
    if k > inst.m {
        return Err(Error::InvalidTape(format!(
            "cannot advise {k} of {} items",
            inst.m
        )));
    }
    let (_, witness) = offline_ew(inst)?;
    let entries: Vec<(usize, usize)> = (0..k)
        .map(|round| (round, witness[inst.item_at(round)]))
        .collect();
    let mut seen = vec![false; inst.n];
    let distinct = entries
        .iter()
        .all(|&(_, agent)| !std::mem::replace(&mut seen[agent], true));
    let encoding = if distinct {
        AdviceEncoding::Distinct
    } else {
        AdviceEncoding::BaseN
    };
    AdviceTape::from_assignments(inst.n, inst.m, entries, encoding)
}

/// Dispatches to the per-objective oracle and reports the policy
/// metadata alongside the tape.
pub fn oracle(inst: &Instance, objective: Objective, k: usize) -> Result<(AdviceTape, OraclePolicy)> {
    let tape = match objective {
        Objective::Es => oracle_es(inst, k),
        Objective::Uw => oracle_uw(inst, k),
        Objective::Ew => oracle_ew(inst, k),
    }?;
    let policy = OraclePolicy {
        objective,
        regime: inst.regime(),
        k: tape.k(),
        l: tape.distinct_agent_count(),
    };
    Ok((tape, policy))
}

/// Verifies that a tape's advised prefix extends to a perfect
/// matching: the unadvised agents must still be perfectly matchable to
/// the unadvised items through liked edges.
pub fn extends_to_perfect_matching(inst: &Instance, tape: &AdviceTape) -> bool {
    let advised_agents: BTreeSet<usize> = tape.entries.iter().map(|&(_, a)| a).collect();
    let advised_items: BTreeSet<usize> =
        tape.entries.iter().map(|&(r, _)| inst.item_at(r)).collect();
    let free_agents: Vec<usize> = (0..inst.n)
        .filter(|a| !advised_agents.contains(a))
        .collect();
    let free_items: Vec<usize> = (0..inst.m)
        .filter(|j| !advised_items.contains(j))
        .collect();
    if free_agents.is_empty() {
        return true;
    }
    max_matching(free_agents.len(), free_items.len(), |i, j| {
        !inst.utility(free_agents[i], free_items[j]).is_zero()
    })
    .iter()
    .all(Option::is_some)
}

/// Convenience: the lexicographically smallest perfect matching of all
/// `n` agents into liked items, as `(round, agent)` assignments over
/// the full arrival order. Used for full-advice tapes on `m == n`.
pub fn full_matching_entries(inst: &Instance) -> Option<Vec<(usize, usize)>> {
    let matching = lex_min_matching(inst.m, inst.n, |j, i| !inst.utility(i, j).is_zero())?;
    Some(
        (0..inst.m)
            .map(|round| (round, matching[inst.item_at(round)]))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{example_fixture, upper_triangular, FixtureParams};
    use crate::instance::Instance;
    use itertools::Itertools;

    #[test]
    fn distinct_code_matches_hand_values() {
        // Identity on n = 3 is the first permutation: code 0 in 3 bits.
        let bits = encode_distinct(&[0, 1, 2], 3).unwrap();
        assert_eq!(bits, vec![false, false, false]);
        // The reverse permutation is the last: code 5 = 101.
        let bits = encode_distinct(&[2, 1, 0], 3).unwrap();
        assert_eq!(bits, vec![true, false, true]);
        assert_eq!(decode_distinct(&bits, 3, 3).unwrap(), vec![2, 1, 0]);
        // Empty choice list needs no bits.
        assert_eq!(encode_distinct(&[], 3).unwrap(), Vec::<bool>::new());
        // Out-of-range code values are rejected.
        let bad = vec![true, true, true]; // 7 >= 3! = 6
        assert!(decode_distinct(&bad, 3, 3).is_err());
        // Repeated agents are rejected.
        assert!(encode_distinct(&[1, 1], 3).is_err());
    }

    #[test]
    fn round_trips_exhaustively_to_n8() {
        for n in 1..=8usize {
            for k in 0..=n {
                for choices in (0..n).permutations(k) {
                    let bits = encode_distinct(&choices, n).unwrap();
                    assert_eq!(
                        bits.len(),
                        bits_for_count(&falling_factorial(n, k)),
                        "bit budget for n={n} k={k}"
                    );
                    let back = decode_distinct(&bits, n, k).unwrap();
                    assert_eq!(back, choices, "n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn base_n_round_trips() {
        for n in 1..=4usize {
            for k in 0..=3usize {
                for choices in std::iter::repeat_n(0..n, k).multi_cartesian_product() {
                    let bits = encode_base_n(&choices, n).unwrap();
                    let back = decode_base_n(&bits, n, k).unwrap();
                    assert_eq!(back, choices);
                }
            }
        }
        assert!(encode_base_n(&[3], 3).is_err());
    }

    #[test]
    fn bit_budget_is_monotone_and_full_at_k_equals_n() {
        for n in 1..=8usize {
            let mut prev = 0;
            for k in 0..=n {
                let budget = bits_for_count(&falling_factorial(n, k));
                assert!(budget >= prev, "n={n} k={k}");
                prev = budget;
            }
            assert_eq!(prev, bits_for_count(&factorial(n)), "full advice for n={n}");
        }
        // The two reported figures differ where the apparent-typo
        // budget undercounts: picking 1 of 8 agents needs 3 bits, but
        // ceil(log2 1!) = 0.
        let tape = AdviceTape::from_assignments(
            8,
            8,
            vec![(0, 5)],
            AdviceEncoding::Distinct,
        )
        .unwrap();
        assert_eq!(tape.declared_bit_budget, 3);
        assert_eq!(tape.factorial_bits, 0);
    }

    #[test]
    fn tape_construction_validates() {
        assert!(AdviceTape::from_assignments(2, 2, vec![(0, 0), (0, 1)], AdviceEncoding::BaseN)
            .is_err());
        assert!(AdviceTape::from_assignments(2, 2, vec![(2, 0)], AdviceEncoding::BaseN).is_err());
        assert!(AdviceTape::from_assignments(2, 2, vec![(0, 2)], AdviceEncoding::BaseN).is_err());
        let tape =
            AdviceTape::from_assignments(3, 3, vec![(1, 2), (0, 1)], AdviceEncoding::Distinct)
                .unwrap();
        assert_eq!(tape.entries, vec![(0, 1), (1, 2)]); // sorted by round
        assert_eq!(tape.k(), 2);
        assert_eq!(tape.distinct_agent_count(), 2);
        assert_eq!(tape.advised_agent(1), Some(2));
        assert_eq!(tape.advised_agent(2), None);
        assert_eq!(tape.decode_choices().unwrap(), vec![1, 2]);
        let empty = AdviceTape::empty(4);
        assert_eq!(empty.k(), 0);
        assert_eq!(empty.bits_string(), "");
        assert_eq!(empty.to_hex(), "");
    }

    #[test]
    fn matching_oracle_on_triangular() {
        let inst = upper_triangular(3);
        let tape = oracle_es(&inst, 3).unwrap();
        // The unique perfect matching pairs item j with agent n-1-j.
        assert_eq!(tape.entries, vec![(0, 2), (1, 1), (2, 0)]);
        // Choices (2,1,0) are the reverse permutation: code value 5.
        assert_eq!(tape.bits_string(), "101");
        assert_eq!(tape.declared_bit_budget, 3);
        for k in 0..=3 {
            let tape = oracle_es(&inst, k).unwrap();
            assert_eq!(tape.k(), k);
            assert!(extends_to_perfect_matching(&inst, &tape), "k={k}");
        }
        let no_pm = Instance::from_integer_rows(
            "no-pm",
            &[vec![1, 0, 0], vec![1, 0, 0], vec![0, 1, 1]],
        )
        .unwrap();
        assert!(matches!(oracle_es(&no_pm, 1), Err(Error::NoPerfectMatching)));
    }

    #[test]
    fn utilitarian_oracle_picks_most_valued_items() {
        let inst = example_fixture(3, FixtureParams::default()).unwrap();
        // Item 1 (value 100) outranks item 0 (value 1).
        let tape = oracle_uw(&inst, 1).unwrap();
        assert_eq!(tape.entries, vec![(1, 1)]);
        let tape = oracle_uw(&inst, 2).unwrap();
        assert_eq!(tape.entries, vec![(0, 1), (1, 1)]);
        assert_eq!(tape.encoding, AdviceEncoding::BaseN);
        // All-equal utilities: ties resolve to item 0, agent 0.
        let flat = Instance::from_integer_rows("flat", &[vec![1, 1], vec![1, 1]]).unwrap();
        let tape = oracle_uw(&flat, 1).unwrap();
        assert_eq!(tape.entries, vec![(0, 0)]);
    }

    #[test]
    fn egalitarian_oracle_square_and_wide() {
        // Square general: the optimal perfect allocation, lex-smallest
        // witness, gives item 0 to agent 0 here.
        let inst = example_fixture(4, FixtureParams::default()).unwrap();
        let tape = oracle_ew(&inst, 1).unwrap();
        assert_eq!(tape.entries, vec![(0, 0)]);
        // Square binary: the triangular witness is the unique matching.
        let tape = oracle_ew(&upper_triangular(3), 2).unwrap();
        assert_eq!(tape.entries, vec![(0, 2), (1, 1)]);
        assert_eq!(tape.distinct_agent_count(), 2);
        // Wide binary: the witness allocation [0, 0, 1] restricted to
        // two rounds repeats agent 0, so the encoding degrades.
        let wide =
            Instance::from_integer_rows("wide", &[vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        let tape = oracle_ew(&wide, 2).unwrap();
        assert_eq!(tape.entries, vec![(0, 0), (1, 0)]);
        assert_eq!(tape.encoding, AdviceEncoding::BaseN);
        // Advice never steals a critical item: the witness hands item 0
        // to the agent that likes nothing else.
        let critical =
            Instance::from_integer_rows("critical", &[vec![1, 1, 1], vec![1, 0, 0]]).unwrap();
        let tape = oracle_ew(&critical, 1).unwrap();
        assert_eq!(tape.entries, vec![(0, 1)]);
        // Wide general: witness restriction, agents may repeat.
        let wg =
            Instance::from_integer_rows("wg", &[vec![1, 2, 1], vec![0, 0, 3]]).unwrap();
        let tape = oracle_ew(&wg, 2).unwrap();
        assert_eq!(tape.entries, vec![(0, 0), (1, 0)]);
        assert_eq!(tape.encoding, AdviceEncoding::BaseN);
    }

    #[test]
    fn oracle_dispatch_reports_policy() {
        let inst = upper_triangular(4);
        let (tape, policy) = oracle(&inst, Objective::Es, 2).unwrap();
        assert_eq!(policy.k, 2);
        assert_eq!(policy.l, 2);
        assert_eq!(policy.regime, UtilityRegime::Binary);
        assert_eq!(policy.objective, Objective::Es);
        assert_eq!(tape.k(), 2);
    }

    #[test]
    fn hex_serialization() {
        let tape = AdviceTape::from_assignments(
            16,
            16,
            (0..16).map(|r| (r, 15 - r)).collect(),
            AdviceEncoding::Distinct,
        )
        .unwrap();
        // 16! - 1 in hex, zero-padded to ceil(45/4) digits, is the
        // largest representable code (the reverse permutation).
        assert_eq!(tape.declared_bit_budget, 45);
        assert_eq!(tape.to_hex().len(), 12);
        let round = tape.decode_choices().unwrap();
        assert_eq!(round, (0..16).map(|r| 15 - r).collect::<Vec<_>>());
    }
}
