//! Exact fairness and efficiency checks for mechanisms on small
//! instances: strategy-proofness over a bounded report space, envy
//! both in expectation and on every support allocation, and Pareto
//! efficiency of every support allocation.

use crate::allocation::{Allocation, Assignee};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_exact_compressed, evaluate_exact_full, EngineConfig};
use crate::instance::{BidProfile, Instance};
use crate::mechanisms::MechanismSpec;
use crate::rational::Rational;
use crate::welfare::welfare_of_distribution;
use itertools::Itertools;
use num::traits::Zero;
use std::collections::BTreeSet;

/// Largest number of alternative allocations (`n^m`) the Pareto check
/// will enumerate.
pub const PARETO_ENUM_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Satisfied,
    Violated,
}

impl Verdict {
    pub fn is_satisfied(self) -> bool {
        self == Verdict::Satisfied
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Satisfied => "SATISFIED",
            Verdict::Violated => "VIOLATED",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A profitable deviation found by [`check_strategyproof`].
#[derive(Clone, Debug)]
pub struct Misreport {
    pub agent: usize,
    pub report: Vec<Rational>,
    pub sincere_value: Rational,
    pub deviant_value: Rational,
}

/// Outcome of the strategy-proofness search. `Satisfied` means no
/// profitable deviation exists *within the searched report space*
/// (row permutations and zero masks), not over all possible reports.
#[derive(Clone, Debug)]
pub struct StrategyproofReport {
    pub verdict: Verdict,
    pub reports_checked: usize,
    pub counterexample: Option<Misreport>,
}

/// The bounded report space for one agent: every permutation of the
/// true row and every copy of it with some subset of entries zeroed,
/// deduplicated. Errors once the space exceeds `cap`.
pub fn strategy_report_space(row: &[Rational], cap: usize) -> Result<Vec<Vec<Rational>>> {
    let m = row.len();
    let mut space: BTreeSet<Vec<Rational>> = BTreeSet::new();
    let insert = |candidate: Vec<Rational>, space: &mut BTreeSet<Vec<Rational>>| {
        space.insert(candidate);
        if space.len() > cap {
            return Err(Error::SizeCapExceeded(format!(
                "strategy-proofness report space exceeds cap {cap}"
            )));
        }
        Ok(())
    };
    for perm in (0..m).permutations(m) {
        let candidate: Vec<Rational> = perm.iter().map(|&j| row[j].clone()).collect();
        insert(candidate, &mut space)?;
    }
    for mask in 0..(1u64 << m) {
        let candidate: Vec<Rational> = (0..m)
            .map(|j| {
                if mask & (1 << j) != 0 {
                    Rational::zero()
                } else {
                    row[j].clone()
                }
            })
            .collect();
        insert(candidate, &mut space)?;
    }
    Ok(space.into_iter().collect())
}

fn expected_true_utility(
    inst: &Instance,
    bids: &BidProfile,
    spec: &MechanismSpec,
    agent: usize,
) -> Result<Rational> {
    let (report, _) = evaluate_exact_compressed(inst, bids, spec, &EngineConfig::default())?;
    Ok(report.per_agent[agent].clone())
}

/// Searches every agent's bounded report space for a deviation that
/// strictly increases that agent's expected true utility. Agents'
/// reports only change behavior; welfare is always measured against
/// the true utilities.
pub fn check_strategyproof(
    inst: &Instance,
    spec: &MechanismSpec,
    report_space_cap: usize,
) -> Result<StrategyproofReport> {
    let sincere = BidProfile::sincere(inst);
    let mut reports_checked = 0;
    for agent in 0..inst.n {
        let truthful_value = expected_true_utility(inst, &sincere, spec, agent)?;
        for report in strategy_report_space(&inst.utilities[agent], report_space_cap)? {
            if report == inst.utilities[agent] {
                continue;
            }
            let deviant = BidProfile::with_misreport(inst, agent, report.clone())?;
            let deviant_value = expected_true_utility(inst, &deviant, spec, agent)?;
            reports_checked += 1;
            if deviant_value > truthful_value {
                return Ok(StrategyproofReport {
                    verdict: Verdict::Violated,
                    reports_checked,
                    counterexample: Some(Misreport {
                        agent,
                        report,
                        sincere_value: truthful_value,
                        deviant_value,
                    }),
                });
            }
        }
    }
    Ok(StrategyproofReport {
        verdict: Verdict::Satisfied,
        reports_checked,
        counterexample: None,
    })
}

/// Envy between a pair of agents measured on expected assignment
/// probabilities.
#[derive(Clone, Debug)]
pub struct EnvyExAnteReport {
    pub verdict: Verdict,
    /// Largest value of sum_j (p_envied(j) - p_envious(j)) * u_envious(j).
    pub max_envy: Rational,
    pub worst_pair: Option<(usize, usize)>,
}

/// Checks envy-freeness of the expected allocation: no agent values
/// another agent's assignment-probability column more than their own.
pub fn check_envy_ex_ante(inst: &Instance, spec: &MechanismSpec) -> Result<EnvyExAnteReport> {
    let bids = BidProfile::sincere(inst);
    let (_, matrix) = evaluate_exact_compressed(inst, &bids, spec, &EngineConfig::default())?;
    let mut max_envy = Rational::zero();
    let mut worst_pair = None;
    for i in 0..inst.n {
        for k in 0..inst.n {
            if i == k {
                continue;
            }
            let mut envy = Rational::zero();
            for j in 0..inst.m {
                envy += (&matrix.p[k][j] - &matrix.p[i][j]) * inst.utility(i, j);
            }
            if worst_pair.is_none() || envy > max_envy {
                max_envy = envy;
                worst_pair = Some((i, k));
            }
        }
    }
    let verdict = if max_envy <= Rational::zero() {
        Verdict::Satisfied
    } else {
        Verdict::Violated
    };
    Ok(EnvyExAnteReport {
        verdict,
        max_envy,
        worst_pair,
    })
}

/// A realized allocation on which one agent envies another by more
/// than the allowed bound.
#[derive(Clone, Debug)]
pub struct EnvyWitness {
    pub allocation: Allocation,
    pub probability: Rational,
    pub envious: usize,
    pub envied: usize,
    pub envy: Rational,
}

#[derive(Clone, Debug)]
pub struct EnvyExPostReport {
    pub verdict: Verdict,
    pub bound: Rational,
    /// Largest envy over all support allocations and agent pairs.
    pub max_envy: Rational,
    pub worst: Option<EnvyWitness>,
}

/// Checks that on every allocation in the support, every agent's envy
/// toward every other agent stays within `bound`.
pub fn check_envy_ex_post(
    inst: &Instance,
    spec: &MechanismSpec,
    bound: &Rational,
) -> Result<EnvyExPostReport> {
    let bids = BidProfile::sincere(inst);
    let dist = evaluate_exact_full(inst, &bids, spec, &EngineConfig::default())?;
    let mut max_envy = Rational::zero();
    let mut worst: Option<EnvyWitness> = None;
    for (alloc, prob) in dist.entries() {
        for i in 0..inst.n {
            let own = alloc.bundle_value_for(inst, i, i);
            for k in 0..inst.n {
                if i == k {
                    continue;
                }
                let envy = alloc.bundle_value_for(inst, i, k) - &own;
                if worst.is_none() || envy > max_envy {
                    max_envy = envy.clone();
                    worst = Some(EnvyWitness {
                        allocation: alloc.clone(),
                        probability: prob.clone(),
                        envious: i,
                        envied: k,
                        envy,
                    });
                }
            }
        }
    }
    let verdict = if max_envy <= *bound {
        Verdict::Satisfied
    } else {
        Verdict::Violated
    };
    Ok(EnvyExPostReport {
        verdict,
        bound: bound.clone(),
        max_envy,
        worst,
    })
}

/// A support allocation together with an alternative that makes
/// someone strictly better off and no one worse off.
#[derive(Clone, Debug)]
pub struct ParetoWitness {
    pub dominated: Allocation,
    pub probability: Rational,
    pub dominating: Allocation,
}

#[derive(Clone, Debug)]
pub struct ParetoExPostReport {
    pub verdict: Verdict,
    pub witness: Option<ParetoWitness>,
}

fn utilities_of(inst: &Instance, alloc: &Allocation) -> Vec<Rational> {
    (0..inst.n).map(|i| alloc.agent_utility(inst, i)).collect()
}

/// Checks Pareto efficiency of every allocation in the support by
/// enumerating all `n^m` discard-free alternatives. (An alternative
/// that discards items is always weakly dominated by one that does
/// not, so discard-free alternatives are enough to find a dominator.)
pub fn check_pareto_ex_post(inst: &Instance, spec: &MechanismSpec) -> Result<ParetoExPostReport> {
    let alternatives = (inst.n as u128).checked_pow(inst.m as u32);
    match alternatives {
        Some(count) if count <= PARETO_ENUM_CAP as u128 => {}
        _ => {
            return Err(Error::SizeCapExceeded(format!(
                "Pareto check enumerates n^m alternatives, which exceeds {PARETO_ENUM_CAP} for n = {}, m = {}",
                inst.n, inst.m
            )));
        }
    }
    let bids = BidProfile::sincere(inst);
    let dist = evaluate_exact_full(inst, &bids, spec, &EngineConfig::default())?;
    for (alloc, prob) in dist.entries() {
        let current = utilities_of(inst, alloc);
        let mut owner = vec![0usize; inst.m];
        loop {
            let candidate = Allocation(owner.iter().map(|&a| Assignee::Agent(a)).collect());
            let proposed = utilities_of(inst, &candidate);
            let no_one_worse = proposed.iter().zip(&current).all(|(p, c)| p >= c);
            let someone_better = proposed.iter().zip(&current).any(|(p, c)| p > c);
            if no_one_worse && someone_better {
                return Ok(ParetoExPostReport {
                    verdict: Verdict::Violated,
                    witness: Some(ParetoWitness {
                        dominated: alloc.clone(),
                        probability: prob.clone(),
                        dominating: candidate,
                    }),
                });
            }
            // Advance the odometer over agent choices per item.
            let mut pos = 0;
            loop {
                if pos == inst.m {
                    break;
                }
                owner[pos] += 1;
                if owner[pos] < inst.n {
                    break;
                }
                owner[pos] = 0;
                pos += 1;
            }
            if pos == inst.m {
                break;
            }
        }
    }
    Ok(ParetoExPostReport {
        verdict: Verdict::Satisfied,
        witness: None,
    })
}

/// Convenience: the expected-welfare report under sincere bidding,
/// used by axiom scanners that also want the welfare context.
pub fn sincere_welfare(inst: &Instance, spec: &MechanismSpec) -> Result<crate::welfare::WelfareReport> {
    let bids = BidProfile::sincere(inst);
    let dist = evaluate_exact_full(inst, &bids, spec, &EngineConfig::default())?;
    Ok(welfare_of_distribution(inst, &dist))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{enumerate_binary, example_fixture, upper_triangular, FixtureParams};
    use crate::mechanisms::MechanismKind;
    use crate::rational::{rat, rat_int};

    fn fixture(id: usize) -> Instance {
        example_fixture(id, FixtureParams::default()).unwrap()
    }

    const CAP: usize = 10_000;

    #[test]
    fn report_space_contains_permutations_and_masks() {
        let row = vec![rat_int(2), rat_int(1)];
        let space = strategy_report_space(&row, CAP).unwrap();
        for expected in [
            vec![rat_int(2), rat_int(1)],
            vec![rat_int(1), rat_int(2)],
            vec![rat_int(0), rat_int(1)],
            vec![rat_int(2), rat_int(0)],
            vec![rat_int(0), rat_int(0)],
        ] {
            assert!(space.contains(&expected), "missing {expected:?}");
        }
        assert_eq!(space.len(), 5);
        assert!(strategy_report_space(&row, 3).is_err());
    }

    #[test]
    fn popular_choice_is_strategyproof_on_small_binary_instances() {
        let spec = MechanismSpec::base(MechanismKind::Like);
        for inst in enumerate_binary(2, 2).unwrap() {
            let report = check_strategyproof(&inst, &spec, CAP).unwrap();
            assert!(report.verdict.is_satisfied(), "violated on {:?}", inst.name);
        }
        for inst in enumerate_binary(2, 3).unwrap() {
            let report = check_strategyproof(&inst, &spec, CAP).unwrap();
            assert!(report.verdict.is_satisfied(), "violated on {:?}", inst.name);
        }
    }

    #[test]
    fn highest_bid_rule_admits_profitable_misreport() {
        // Agent 1 truly values the items (1, 2). Sincerely it wins only
        // item 1 (value 2). Reporting (2, 1) ties item 0 and still wins
        // item 1 outright: expected true value 1/2 + 2 > 2.
        let inst = fixture(2);
        let spec = MechanismSpec::base(MechanismKind::MaximumLike);
        let report = check_strategyproof(&inst, &spec, CAP).unwrap();
        assert_eq!(report.verdict, Verdict::Violated);
        let cx = report.counterexample.expect("counterexample");
        assert_eq!(cx.agent, 1);
        assert_eq!(cx.report, vec![rat_int(2), rat_int(1)]);
        assert_eq!(cx.sincere_value, rat_int(2));
        assert_eq!(cx.deviant_value, rat(5, 2));
    }

    #[test]
    fn single_agent_is_vacuously_strategyproof() {
        let inst = Instance::from_integer_rows("solo", &[vec![1, 1]]).unwrap();
        for kind in MechanismKind::ALL {
            let report = check_strategyproof(&inst, &MechanismSpec::base(kind), CAP).unwrap();
            assert!(report.verdict.is_satisfied(), "{kind}");
        }
    }

    #[test]
    fn expected_allocation_envy_for_uniform_rule() {
        let spec = MechanismSpec::base(MechanismKind::Like);
        for inst in enumerate_binary(2, 2).unwrap() {
            let report = check_envy_ex_ante(&inst, &spec).unwrap();
            assert!(report.verdict.is_satisfied(), "violated on {:?}", inst.name);
            assert!(report.max_envy <= Rational::zero());
        }
    }

    #[test]
    fn symmetric_instance_has_antisymmetric_envy() {
        // Both agents see the same instance up to relabeling, so the
        // two directed envy values are negatives of each other.
        let inst = fixture(5);
        for kind in [MechanismKind::Like, MechanismKind::BalancedLike] {
            let bids = BidProfile::sincere(&inst);
            let (_, matrix) =
                evaluate_exact_compressed(&inst, &bids, &MechanismSpec::base(kind), &EngineConfig::default())
                    .unwrap();
            let envy = |i: usize, k: usize| -> Rational {
                (0..inst.m)
                    .map(|j| (&matrix.p[k][j] - &matrix.p[i][j]) * inst.utility(i, j))
                    .fold(Rational::zero(), |a, b| a + b)
            };
            assert_eq!(envy(0, 1), -envy(1, 0), "{kind}");
        }
    }

    #[test]
    fn highest_bid_rule_creates_expected_envy() {
        // Items are worth (2, 2) to agent 0 and (1, 1) to agent 1; the
        // highest-bid rule hands both to agent 0, leaving agent 1
        // envious by its full valuation of the pair.
        let inst = fixture(4);
        let report =
            check_envy_ex_ante(&inst, &MechanismSpec::base(MechanismKind::MaximumLike)).unwrap();
        assert_eq!(report.verdict, Verdict::Violated);
        assert_eq!(report.max_envy, rat_int(2));
        assert_eq!(report.worst_pair, Some((1, 0)));
    }

    #[test]
    fn realized_envy_bounds() {
        // The uniform rule can hand both triangular items to agent 0,
        // so envy-freeness on realizations fails at bound 0 …
        let inst = upper_triangular(2);
        let like = check_envy_ex_post(&inst, &MechanismSpec::base(MechanismKind::Like), &rat_int(0))
            .unwrap();
        assert_eq!(like.verdict, Verdict::Violated);
        assert_eq!(like.max_envy, rat_int(1));
        let witness = like.worst.expect("witness");
        assert_eq!(witness.envious, 1);
        assert_eq!(witness.envied, 0);
        // … while the count-balancing rule keeps every realized envy
        // within one item's worth on small binary instances.
        for nm in [2, 3] {
            for inst in enumerate_binary(nm, nm).unwrap() {
                let report = check_envy_ex_post(
                    &inst,
                    &MechanismSpec::base(MechanismKind::BalancedLike),
                    &rat_int(1),
                )
                .unwrap();
                assert!(report.verdict.is_satisfied(), "violated on {:?}", inst.name);
            }
        }
    }

    #[test]
    fn identical_split_has_no_realized_envy() {
        // Two identical items, each agent ends with exactly one under
        // the count-balancing rule, so realized envy is zero.
        let inst = Instance::from_integer_rows("twins", &[vec![1, 1], vec![1, 1]]).unwrap();
        let report = check_envy_ex_post(
            &inst,
            &MechanismSpec::base(MechanismKind::BalancedLike),
            &rat_int(0),
        )
        .unwrap();
        assert!(report.verdict.is_satisfied());
        assert_eq!(report.max_envy, rat_int(0));
    }

    #[test]
    fn highest_bid_rule_is_pareto_efficient_on_fixtures() {
        let spec = MechanismSpec::base(MechanismKind::MaximumLike);
        for id in [2, 4, 5] {
            let report = check_pareto_ex_post(&fixture(id), &spec).unwrap();
            assert!(report.verdict.is_satisfied(), "violated on fixture {id}");
        }
    }

    #[test]
    fn priority_rule_discards_into_domination() {
        // Priority order (agent 0 first) serves agent 0 with item 0 and
        // then discards item 1 — dominated by crossing the assignment.
        let inst = upper_triangular(2);
        let report =
            check_pareto_ex_post(&inst, &MechanismSpec::base(MechanismKind::Ranking)).unwrap();
        assert_eq!(report.verdict, Verdict::Violated);
        let witness = report.witness.expect("witness");
        assert_eq!(
            witness.dominated,
            Allocation(vec![Assignee::Agent(0), Assignee::Discarded])
        );
        assert_eq!(witness.probability, rat(1, 2));
        let before = utilities_of(&inst, &witness.dominated);
        let after = utilities_of(&inst, &witness.dominating);
        assert!(after.iter().zip(&before).all(|(a, b)| a >= b));
        assert!(after.iter().zip(&before).any(|(a, b)| a > b));
    }

    #[test]
    fn pareto_cap_rejects_oversized_enumeration() {
        let inst = upper_triangular(9);
        let err = check_pareto_ex_post(&inst, &MechanismSpec::base(MechanismKind::Like));
        assert!(matches!(err, Err(Error::SizeCapExceeded(_))));
    }
}
