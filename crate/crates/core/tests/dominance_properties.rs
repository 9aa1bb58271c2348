//! Structural relationships between the mechanisms on small binary
//! instances, checked exactly: the count-balancing rule never trails
//! the uniform rule on expected matching size (and the dominance
//! survives conditioning on any partial allocation), it ties the
//! serve-once rule exactly, both allocate every item, and every rule
//! guarantees each agent a 1/n share of their first liked item.

use onfair_core::evaluation::{
    evaluate_completion_es, evaluate_exact_compressed, EngineConfig,
};
use onfair_core::generators::enumerate_binary;
use onfair_core::mechanisms::{MechanismKind, MechanismSpec};
use onfair_core::rational::{rat, rat_int};
use onfair_core::{Assignee, BidProfile, Instance, WelfareReport};

fn compressed(inst: &Instance, kind: MechanismKind) -> WelfareReport {
    evaluate_exact_compressed(
        inst,
        &BidProfile::sincere(inst),
        &MechanismSpec::base(kind),
        &EngineConfig::default(),
    )
    .unwrap()
    .0
}

#[test]
fn count_balancing_never_trails_uniform_on_matching_size() {
    let mut strict = 0usize;
    for size in 1..=3 {
        for inst in enumerate_binary(size, size).unwrap() {
            let like = compressed(&inst, MechanismKind::Like).es;
            let balanced = compressed(&inst, MechanismKind::BalancedLike).es;
            assert!(
                balanced >= like,
                "dominance fails on {:?}: {balanced} < {like}",
                inst.name
            );
            if balanced > like {
                strict += 1;
            }
        }
    }
    assert!(strict > 0, "dominance should be strict somewhere");
}

#[test]
fn dominance_survives_any_partial_allocation() {
    // Conditioned on an arbitrary fixed outcome for the first rounds,
    // the count-balancing completion still matches at least as many
    // agents in expectation as the uniform completion.
    let cfg = EngineConfig::default();
    for size in 2..=3 {
        for inst in enumerate_binary(size, size).unwrap() {
            let bids = BidProfile::sincere(&inst);
            let mut alphabet: Vec<Assignee> =
                (0..inst.n).map(Assignee::Agent).collect();
            alphabet.push(Assignee::Discarded);
            for len in 0..inst.m {
                let mut prefix = vec![0usize; len];
                loop {
                    let fixed: Vec<Assignee> = prefix.iter().map(|&x| alphabet[x]).collect();
                    let balanced = evaluate_completion_es(
                        &inst,
                        &bids,
                        MechanismKind::BalancedLike,
                        &fixed,
                        &cfg,
                    )
                    .unwrap();
                    let like =
                        evaluate_completion_es(&inst, &bids, MechanismKind::Like, &fixed, &cfg)
                            .unwrap();
                    assert!(
                        balanced >= like,
                        "completion dominance fails on {:?} with prefix {fixed:?}",
                        inst.name
                    );
                    // Odometer over prefix outcomes.
                    let mut pos = 0;
                    while pos < len {
                        prefix[pos] += 1;
                        if prefix[pos] < alphabet.len() {
                            break;
                        }
                        prefix[pos] = 0;
                        pos += 1;
                    }
                    if pos == len {
                        break;
                    }
                }
            }
        }
    }
}

#[test]
fn count_balancing_and_serve_once_tie_on_matching_size() {
    for size in 1..=3 {
        for inst in enumerate_binary(size, size).unwrap() {
            let balanced = compressed(&inst, MechanismKind::BalancedLike).es;
            let serve_once = compressed(&inst, MechanismKind::Random).es;
            assert_eq!(balanced, serve_once, "mismatch on {:?}", inst.name);
        }
    }
}

#[test]
fn bidders_always_absorb_every_item() {
    // Every item has a positive bidder, so the uniform and the
    // count-balancing rules never discard: utilitarian welfare equals
    // the number of items on binary instances. The priority rule does
    // discard once its bidders are all served.
    let mut priority_dropped = 0usize;
    for size in 1..=3 {
        for inst in enumerate_binary(size, size).unwrap() {
            let m = rat_int(inst.m as i64);
            assert_eq!(compressed(&inst, MechanismKind::Like).uw, m);
            assert_eq!(compressed(&inst, MechanismKind::BalancedLike).uw, m);
            if compressed(&inst, MechanismKind::Ranking).uw < m {
                priority_dropped += 1;
            }
        }
    }
    assert!(priority_dropped > 0, "priority rule should discard somewhere");
}

#[test]
fn every_rule_guarantees_a_first_item_share() {
    // Each agent wins their earliest liked item with probability at
    // least 1/n under every rule, so the egalitarian value of a binary
    // instance never falls below 1/n.
    for size in 2..=3 {
        let floor = rat(1, size as i64);
        for inst in enumerate_binary(size, size).unwrap() {
            for kind in MechanismKind::ALL {
                let report = compressed(&inst, kind);
                assert!(
                    report.ew >= floor,
                    "{kind} on {:?}: ew {} below 1/{size}",
                    inst.name,
                    report.ew
                );
            }
        }
    }
}
