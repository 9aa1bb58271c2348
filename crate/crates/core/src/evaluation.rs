//! Exact and sampled evaluation of mechanisms on instances.
//!
//! Three engines are provided. The full engine enumerates every
//! probabilistic branch round by round and returns the complete
//! distribution over allocations (the priority mechanism is averaged
//! over all `n!` priority orders). The compressed engine propagates a
//! distribution over item-count vectors instead — every base rule
//! depends on history only through the counts — and returns the
//! welfare report plus the per-item assignment probabilities without
//! materializing the support. The Monte Carlo engine samples seeded
//! trials, parallelized in fixed blocks so results are reproducible
//! bit for bit regardless of thread scheduling.

use crate::allocation::{Allocation, AllocationDistribution, Assignee, AssignmentMatrix};
use crate::error::{Error, Result};
use crate::instance::{BidProfile, Instance};
use crate::mechanisms::{decide, MechanismKind, MechanismSpec, MechanismState};
use crate::rational::{rat_int, to_f64, Rational};
use crate::welfare::{welfare_from_parts, welfare_of_distribution, Objective, WelfareReport};
use itertools::Itertools;
use num::traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::HashMap;

/// Largest `n` for which the priority mechanism is evaluated exactly
/// (all `n!` priority orders are enumerated).
pub const RANKING_EXACT_MAX_N: usize = 9;

pub const DEFAULT_BRANCH_CAP: usize = 1_000_000;
pub const DEFAULT_STATE_CAP: usize = 1_000_000;
pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_SEED: u64 = 42;

/// Which evaluation engine to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    ExactFull,
    ExactCompressed,
    MonteCarlo,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::ExactFull => "exact-full",
            Engine::ExactCompressed => "exact-compressed",
            Engine::MonteCarlo => "monte-carlo",
        }
    }
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact-full" => Ok(Engine::ExactFull),
            "exact-compressed" => Ok(Engine::ExactCompressed),
            "monte-carlo" => Ok(Engine::MonteCarlo),
            other => Err(Error::Unsupported(format!(
                "unknown engine `{other}` (expected exact-full, exact-compressed, or monte-carlo)"
            ))),
        }
    }
}

/// Engine selection plus caps, sample count, and seed.
#[derive(Clone, Copy, Debug)]
pub struct EngineConfig {
    pub engine: Engine,
    /// Largest support size the full engine may build.
    pub branch_cap: usize,
    /// Largest count-state population the compressed engine may hold.
    pub state_cap: usize,
    /// Monte Carlo trial count.
    pub samples: usize,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            engine: Engine::ExactCompressed,
            branch_cap: DEFAULT_BRANCH_CAP,
            state_cap: DEFAULT_STATE_CAP,
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
        }
    }
}

impl EngineConfig {
    pub fn with_engine(engine: Engine) -> Self {
        EngineConfig {
            engine,
            ..Default::default()
        }
    }
}

fn ranking_size_check(n: usize) -> Result<()> {
    if n > RANKING_EXACT_MAX_N {
        return Err(Error::SizeCapExceeded(format!(
            "exact evaluation of the priority mechanism enumerates n! orders and supports n <= {RANKING_EXACT_MAX_N}, got n = {n}; use the monte-carlo engine"
        )));
    }
    Ok(())
}

/// Runs one deterministic pass of a mechanism whose every round has a
/// single branch (the priority mechanism under a fixed order, possibly
/// advised). Returns the item-indexed allocation.
fn deterministic_run(
    inst: &Instance,
    bids: &BidProfile,
    spec: &MechanismSpec,
    mut state: MechanismState,
) -> Result<Allocation> {
    let mut by_item = vec![Assignee::Discarded; inst.m];
    for round in 0..inst.m {
        debug_assert_eq!(state.round, round);
        let branches = decide(spec, inst, bids, &state)?;
        debug_assert_eq!(branches.len(), 1, "deterministic run must not branch");
        let (assignee, _) = branches.into_iter().next().expect("one branch");
        by_item[inst.item_at(round)] = assignee;
        state.record(assignee);
    }
    Ok(Allocation(by_item))
}

/// The exact distribution over allocations. The priority mechanism is
/// evaluated by enumerating all `n!` orders with equal weight; other
/// mechanisms enumerate their probabilistic branches round by round.
pub fn evaluate_exact_full(
    inst: &Instance,
    bids: &BidProfile,
    spec: &MechanismSpec,
    cfg: &EngineConfig,
) -> Result<AllocationDistribution> {
    bids.validate_for(inst)?;
    if spec.kind == MechanismKind::Ranking {
        ranking_size_check(inst.n)?;
        let weight =
            rat_int(1) / (1..=inst.n as i64).map(rat_int).fold(rat_int(1), |a, b| a * b);
        let mut entries = Vec::new();
        for order in (0..inst.n).permutations(inst.n) {
            let state = MechanismState::with_priority(inst.n, order);
            entries.push((deterministic_run(inst, bids, spec, state)?, weight.clone()));
            if entries.len() > cfg.branch_cap {
                return Err(Error::BranchCapExceeded {
                    cap: cfg.branch_cap,
                });
            }
        }
        return AllocationDistribution::from_entries(entries);
    }

    // (round-prefix, counts, probability) triples; distinct prefixes
    // never collide, so a flat list suffices.
    let mut beams: Vec<(Vec<Assignee>, Vec<u32>, Rational)> =
        vec![(Vec::new(), vec![0; inst.n], rat_int(1))];
    for round in 0..inst.m {
        let mut next = Vec::with_capacity(beams.len());
        for (prefix, counts, prob) in beams {
            let state = MechanismState {
                counts: counts.clone(),
                round,
                priority: None,
            };
            for (assignee, q) in decide(spec, inst, bids, &state)? {
                let mut prefix = prefix.clone();
                let mut counts = counts.clone();
                prefix.push(assignee);
                if let Assignee::Agent(a) = assignee {
                    counts[a] += 1;
                }
                next.push((prefix, counts, &prob * &q));
            }
            if next.len() > cfg.branch_cap {
                return Err(Error::BranchCapExceeded {
                    cap: cfg.branch_cap,
                });
            }
        }
        beams = next;
    }
    let entries = beams
        .into_iter()
        .map(|(prefix, _, prob)| {
            let mut by_item = vec![Assignee::Discarded; inst.m];
            for (round, assignee) in prefix.into_iter().enumerate() {
                by_item[inst.item_at(round)] = assignee;
            }
            (Allocation(by_item), prob)
        })
        .collect();
    AllocationDistribution::from_entries(entries)
}

/// Propagates the exact distribution over count vectors from a given
/// starting point, accumulating per-round assignment probabilities.
/// Returns the expected number of served agents at the end and the
/// assignment probabilities for the rounds that were simulated.
fn propagate_counts(
    inst: &Instance,
    bids: &BidProfile,
    spec: &MechanismSpec,
    start_counts: Vec<u32>,
    start_round: usize,
    cfg: &EngineConfig,
) -> Result<(Rational, AssignmentMatrix)> {
    let mut matrix = AssignmentMatrix::zeros(inst.n, inst.m);
    let mut states: HashMap<Vec<u32>, Rational> = HashMap::new();
    states.insert(start_counts, rat_int(1));
    for round in start_round..inst.m {
        let item = inst.item_at(round);
        let mut next: HashMap<Vec<u32>, Rational> = HashMap::with_capacity(states.len());
        for (counts, prob) in states {
            let state = MechanismState {
                counts: counts.clone(),
                round,
                priority: None,
            };
            for (assignee, q) in decide(spec, inst, bids, &state)? {
                let mass = &prob * &q;
                let mut counts = counts.clone();
                if let Assignee::Agent(a) = assignee {
                    counts[a] += 1;
                    matrix.p[a][item] += &mass;
                }
                *next.entry(counts).or_insert_with(Rational::zero) += mass;
            }
            if next.len() > cfg.state_cap {
                return Err(Error::StateCapExceeded { cap: cfg.state_cap });
            }
        }
        states = next;
    }
    let mut es = Rational::zero();
    for (counts, prob) in states {
        let served = counts.iter().filter(|&&c| c > 0).count();
        es += prob * rat_int(served as i64);
    }
    Ok((es, matrix))
}

/// Exact welfare without materializing the allocation support. The
/// priority mechanism accumulates its `n!` deterministic runs with
/// integer counters; the other mechanisms propagate count vectors.
pub fn evaluate_exact_compressed(
    inst: &Instance,
    bids: &BidProfile,
    spec: &MechanismSpec,
    cfg: &EngineConfig,
) -> Result<(WelfareReport, AssignmentMatrix)> {
    bids.validate_for(inst)?;
    if spec.kind == MechanismKind::Ranking {
        ranking_size_check(inst.n)?;
        let mut assign_counts = vec![vec![0u64; inst.m]; inst.n];
        let mut served_total: u64 = 0;
        let mut orders: u64 = 0;
        for order in (0..inst.n).permutations(inst.n) {
            let state = MechanismState::with_priority(inst.n, order);
            let alloc = deterministic_run(inst, bids, spec, state)?;
            let mut served = vec![false; inst.n];
            for (item, assignee) in alloc.0.iter().enumerate() {
                if let Assignee::Agent(a) = assignee {
                    assign_counts[*a][item] += 1;
                    served[*a] = true;
                }
            }
            served_total += served.iter().filter(|&&s| s).count() as u64;
            orders += 1;
        }
        let total = rat_int(orders as i64);
        let mut matrix = AssignmentMatrix::zeros(inst.n, inst.m);
        for i in 0..inst.n {
            for j in 0..inst.m {
                matrix.p[i][j] = rat_int(assign_counts[i][j] as i64) / &total;
            }
        }
        let es = rat_int(served_total as i64) / &total;
        return Ok((welfare_from_parts(inst, es, &matrix), matrix));
    }
    let (es, matrix) = propagate_counts(inst, bids, spec, vec![0; inst.n], 0, cfg)?;
    Ok((welfare_from_parts(inst, es, &matrix), matrix))
}

/// The exact expected matching size of finishing a partially played
/// run: the first rounds are fixed to `prefix` (one assignee per round
/// already dealt), and the mechanism plays the remaining rounds.
/// Supports the history-through-counts mechanisms (not the priority
/// mechanism, whose state is not count-determined).
pub fn evaluate_completion_es(
    inst: &Instance,
    bids: &BidProfile,
    kind: MechanismKind,
    prefix: &[Assignee],
    cfg: &EngineConfig,
) -> Result<Rational> {
    if kind == MechanismKind::Ranking {
        return Err(Error::Unsupported(
            "completion evaluation needs count-determined mechanisms".into(),
        ));
    }
    if prefix.len() > inst.m {
        return Err(Error::DimensionMismatch(format!(
            "prefix of {} rounds on an instance with {} items",
            prefix.len(),
            inst.m
        )));
    }
    bids.validate_for(inst)?;
    let mut counts = vec![0u32; inst.n];
    for assignee in prefix {
        if let Assignee::Agent(a) = assignee {
            if *a >= inst.n {
                return Err(Error::DimensionMismatch(format!(
                    "prefix assigns to agent {a} but n = {}",
                    inst.n
                )));
            }
            counts[*a] += 1;
        }
    }
    let spec = MechanismSpec::base(kind);
    let (es, _) = propagate_counts(inst, bids, &spec, counts, prefix.len(), cfg)?;
    Ok(es)
}

/// Monte Carlo estimates with standard errors. The egalitarian value
/// is the minimum of the per-agent *means* (with the standard error of
/// that agent's mean), matching its definition as a minimum over
/// expectations.
#[derive(Clone, Debug)]
pub struct McReport {
    pub samples: usize,
    pub es: f64,
    pub es_stderr: f64,
    pub uw: f64,
    pub uw_stderr: f64,
    pub ew: f64,
    pub ew_stderr: f64,
    pub per_agent: Vec<f64>,
    /// The agent attaining the egalitarian minimum (lowest index on ties).
    pub min_agent: usize,
}

impl McReport {
    pub fn value(&self, objective: Objective) -> f64 {
        match objective {
            Objective::Es => self.es,
            Objective::Uw => self.uw,
            Objective::Ew => self.ew,
        }
    }

    pub fn stderr(&self, objective: Objective) -> f64 {
        match objective {
            Objective::Es => self.es_stderr,
            Objective::Uw => self.uw_stderr,
            Objective::Ew => self.ew_stderr,
        }
    }
}

#[derive(Clone)]
struct McAccumulator {
    es_sum: f64,
    es_sq: f64,
    uw_sum: f64,
    uw_sq: f64,
    agent_sum: Vec<f64>,
    agent_sq: Vec<f64>,
}

impl McAccumulator {
    fn new(n: usize) -> Self {
        McAccumulator {
            es_sum: 0.0,
            es_sq: 0.0,
            uw_sum: 0.0,
            uw_sq: 0.0,
            agent_sum: vec![0.0; n],
            agent_sq: vec![0.0; n],
        }
    }

    fn merge(mut self, other: &McAccumulator) -> Self {
        self.es_sum += other.es_sum;
        self.es_sq += other.es_sq;
        self.uw_sum += other.uw_sum;
        self.uw_sq += other.uw_sq;
        for i in 0..self.agent_sum.len() {
            self.agent_sum[i] += other.agent_sum[i];
            self.agent_sq[i] += other.agent_sq[i];
        }
        self
    }
}

fn stderr_of_mean(sum: f64, sq: f64, n: f64) -> f64 {
    if n < 2.0 {
        return 0.0;
    }
    let mean = sum / n;
    let var = ((sq - n * mean * mean) / (n - 1.0)).max(0.0);
    (var / n).sqrt()
}

/// Seeded Monte Carlo evaluation. Each trial draws its own generator
/// stream from `(seed, trial index)`, so the estimate is independent
/// of thread scheduling and identical for identical configurations.
pub fn evaluate_monte_carlo(
    inst: &Instance,
    bids: &BidProfile,
    spec: &MechanismSpec,
    cfg: &EngineConfig,
) -> Result<McReport> {
    bids.validate_for(inst)?;
    if cfg.samples == 0 {
        return Err(Error::Unsupported(
            "monte-carlo needs a positive sample count".into(),
        ));
    }
    let n = inst.n;
    let m = inst.m;
    // Everything the hot loop needs, in plain integers and floats.
    let likers: Vec<Vec<u32>> = (0..m)
        .map(|j| bids.positive_bidders(j).into_iter().map(|a| a as u32).collect())
        .collect();
    let argmax: Vec<Vec<u32>> = (0..m)
        .map(|j| {
            let max = (0..n)
                .map(|i| &bids.bids[i][j])
                .max()
                .expect("at least one agent");
            if max.is_zero() {
                Vec::new()
            } else {
                (0..n)
                    .filter(|&i| &bids.bids[i][j] == max)
                    .map(|i| i as u32)
                    .collect()
            }
        })
        .collect();
    let true_util: Vec<Vec<f64>> = inst
        .utilities
        .iter()
        .map(|row| row.iter().map(to_f64).collect())
        .collect();
    let advice: Vec<Option<u32>> = (0..m)
        .map(|round| {
            spec.advice
                .as_ref()
                .and_then(|t| t.advised_agent(round))
                .map(|a| a as u32)
        })
        .collect();
    let kind = spec.kind;

    const BLOCK: usize = 1024;
    let blocks = cfg.samples.div_ceil(BLOCK);
    let partials: Vec<McAccumulator> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = ((b + 1) * BLOCK).min(cfg.samples);
            let mut acc = McAccumulator::new(n);
            let mut counts = vec![0u32; n];
            let mut bundle = vec![0.0f64; n];
            let mut rank = vec![0u32; n];
            let mut agents: Vec<u32> = (0..n as u32).collect();
            let mut scratch: Vec<u32> = Vec::with_capacity(n);
            for trial in lo..hi {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(trial as u64);
                counts.fill(0);
                bundle.fill(0.0);
                if kind == MechanismKind::Ranking {
                    agents.shuffle(&mut rng);
                    for (pos, &a) in agents.iter().enumerate() {
                        rank[a as usize] = pos as u32;
                    }
                }
                for round in 0..m {
                    let item = inst.item_at(round);
                    let winner: Option<u32> = if let Some(a) = advice[round] {
                        Some(a)
                    } else {
                        match kind {
                            MechanismKind::Like => {
                                let set = &likers[item];
                                if set.is_empty() {
                                    None
                                } else {
                                    Some(set[rng.gen_range(0..set.len())])
                                }
                            }
                            MechanismKind::BalancedLike => {
                                let set = &likers[item];
                                if set.is_empty() {
                                    None
                                } else {
                                    let min = set
                                        .iter()
                                        .map(|&a| counts[a as usize])
                                        .min()
                                        .expect("non-empty");
                                    scratch.clear();
                                    scratch.extend(
                                        set.iter()
                                            .copied()
                                            .filter(|&a| counts[a as usize] == min),
                                    );
                                    Some(scratch[rng.gen_range(0..scratch.len())])
                                }
                            }
                            MechanismKind::MaximumLike => {
                                let set = &argmax[item];
                                if set.is_empty() {
                                    None
                                } else {
                                    Some(set[rng.gen_range(0..set.len())])
                                }
                            }
                            MechanismKind::Random => {
                                scratch.clear();
                                scratch.extend(
                                    likers[item]
                                        .iter()
                                        .copied()
                                        .filter(|&a| counts[a as usize] == 0),
                                );
                                if scratch.is_empty() {
                                    None
                                } else {
                                    Some(scratch[rng.gen_range(0..scratch.len())])
                                }
                            }
                            MechanismKind::Ranking => likers[item]
                                .iter()
                                .copied()
                                .filter(|&a| counts[a as usize] == 0)
                                .min_by_key(|&a| rank[a as usize]),
                        }
                    };
                    if let Some(a) = winner {
                        counts[a as usize] += 1;
                        bundle[a as usize] += true_util[a as usize][item];
                    }
                }
                let served = counts.iter().filter(|&&c| c > 0).count() as f64;
                acc.es_sum += served;
                acc.es_sq += served * served;
                let uw: f64 = bundle.iter().sum();
                acc.uw_sum += uw;
                acc.uw_sq += uw * uw;
                for i in 0..n {
                    acc.agent_sum[i] += bundle[i];
                    acc.agent_sq[i] += bundle[i] * bundle[i];
                }
            }
            acc
        })
        .collect();
    // Sequential merge in block order keeps the result deterministic.
    let acc = partials
        .iter()
        .fold(McAccumulator::new(n), |a, b| a.merge(b));

    let nf = cfg.samples as f64;
    let per_agent: Vec<f64> = acc.agent_sum.iter().map(|s| s / nf).collect();
    let (min_agent, _) = per_agent
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.partial_cmp(b).expect("finite").then(ia.cmp(ib)))
        .expect("at least one agent");
    Ok(McReport {
        samples: cfg.samples,
        es: acc.es_sum / nf,
        es_stderr: stderr_of_mean(acc.es_sum, acc.es_sq, nf),
        uw: acc.uw_sum / nf,
        uw_stderr: stderr_of_mean(acc.uw_sum, acc.uw_sq, nf),
        ew: per_agent[min_agent],
        ew_stderr: stderr_of_mean(acc.agent_sum[min_agent], acc.agent_sq[min_agent], nf),
        per_agent,
        min_agent,
    })
}

/// Result of [`evaluate`]: exact reports carry rationals (and the full
/// distribution when the full engine ran); sampled reports carry float
/// estimates with standard errors.
#[derive(Clone, Debug)]
pub enum Evaluation {
    Exact {
        report: WelfareReport,
        matrix: AssignmentMatrix,
        distribution: Option<AllocationDistribution>,
    },
    Sampled(McReport),
}

impl Evaluation {
    /// The requested objective as a float (exact values converted).
    pub fn value_f64(&self, objective: Objective) -> f64 {
        match self {
            Evaluation::Exact { report, .. } => to_f64(report.value(objective)),
            Evaluation::Sampled(mc) => mc.value(objective),
        }
    }

    /// The exact rational value, when an exact engine ran.
    pub fn exact_value(&self, objective: Objective) -> Option<&Rational> {
        match self {
            Evaluation::Exact { report, .. } => Some(report.value(objective)),
            Evaluation::Sampled(_) => None,
        }
    }
}

/// Runs the engine selected in `cfg`.
pub fn evaluate(
    inst: &Instance,
    bids: &BidProfile,
    spec: &MechanismSpec,
    cfg: &EngineConfig,
) -> Result<Evaluation> {
    match cfg.engine {
        Engine::ExactFull => {
            let dist = evaluate_exact_full(inst, bids, spec, cfg)?;
            let report = welfare_of_distribution(inst, &dist);
            let matrix = crate::welfare::assignment_matrix(inst, &dist);
            Ok(Evaluation::Exact {
                report,
                matrix,
                distribution: Some(dist),
            })
        }
        Engine::ExactCompressed => {
            let (report, matrix) = evaluate_exact_compressed(inst, bids, spec, cfg)?;
            Ok(Evaluation::Exact {
                report,
                matrix,
                distribution: None,
            })
        }
        Engine::MonteCarlo => Ok(Evaluation::Sampled(evaluate_monte_carlo(
            inst, bids, spec, cfg,
        )?)),
    }
}

/// Convenience: sincere bids, compressed engine, default caps.
pub fn evaluate_sincere(inst: &Instance, spec: &MechanismSpec) -> Result<WelfareReport> {
    let bids = BidProfile::sincere(inst);
    let (report, _) = evaluate_exact_compressed(inst, &bids, spec, &EngineConfig::default())?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advice::{oracle_es, AdviceTape};
    use crate::generators::{example_fixture, upper_triangular, FixtureParams};
    use crate::rational::rat;
    use crate::welfare::assignment_matrix;

    fn fixture(id: usize) -> Instance {
        example_fixture(id, FixtureParams::default()).unwrap()
    }

    fn full(inst: &Instance, kind: MechanismKind) -> AllocationDistribution {
        evaluate_exact_full(
            inst,
            &BidProfile::sincere(inst),
            &MechanismSpec::base(kind),
            &EngineConfig::default(),
        )
        .unwrap()
    }

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
    fn uniform_split_distribution_on_incomparability_fixture() {
        let inst = fixture(2);
        let dist = full(&inst, MechanismKind::Like);
        assert_eq!(dist.support_size(), 2);
        let a = Allocation(vec![Assignee::Agent(0), Assignee::Agent(1)]);
        let b = Allocation(vec![Assignee::Agent(1), Assignee::Agent(1)]);
        assert_eq!(dist.probability_of(&a), rat(1, 2));
        assert_eq!(dist.probability_of(&b), rat(1, 2));
        let report = welfare_of_distribution(&inst, &dist);
        assert_eq!(report.es, rat(3, 2));
        assert_eq!(report.per_agent, vec![rat_int(1), rat(5, 2)]);
        let matrix = assignment_matrix(&inst, &dist);
        assert_eq!(matrix.p[0], vec![rat(1, 2), rat_int(0)]);
        assert_eq!(matrix.p[1], vec![rat(1, 2), rat_int(1)]);
    }

    #[test]
    fn fixture_two_matching_sizes() {
        let inst = fixture(2);
        let ml = welfare_of_distribution(&inst, &full(&inst, MechanismKind::MaximumLike));
        assert_eq!(ml.es, rat_int(2));
        let rk = welfare_of_distribution(&inst, &full(&inst, MechanismKind::Ranking));
        assert_eq!(rk.es, rat(3, 2));
    }

    #[test]
    fn fixture_five_egalitarian_values() {
        let inst = fixture(5);
        assert_eq!(compressed(&inst, MechanismKind::MaximumLike).ew, rat_int(2));
        assert_eq!(compressed(&inst, MechanismKind::Like).ew, rat(3, 2));
        assert_eq!(compressed(&inst, MechanismKind::BalancedLike).ew, rat(3, 2));
        assert_eq!(compressed(&inst, MechanismKind::Ranking).ew, rat(3, 2));
    }

    #[test]
    fn engines_agree_across_mechanisms() {
        for inst in [fixture(2), fixture(4), fixture(5), upper_triangular(3)] {
            for kind in MechanismKind::ALL {
                let via_full = welfare_of_distribution(&inst, &full(&inst, kind));
                let via_compressed = compressed(&inst, kind);
                assert_eq!(via_full, via_compressed, "{} on {:?}", kind, inst.name);
            }
        }
    }

    #[test]
    fn triangular_egalitarian_floor() {
        // Agent 2's only liked item is item 0, won with probability 1/3.
        let report = compressed(&upper_triangular(3), MechanismKind::Like);
        assert_eq!(report.ew, rat(1, 3));
        assert_eq!(report.per_agent[2], rat(1, 3));
    }

    #[test]
    fn first_timers_and_balanced_split_share_matching_size() {
        for inst in [upper_triangular(2), upper_triangular(4), fixture(2)] {
            let bl = compressed(&inst, MechanismKind::BalancedLike);
            let rd = compressed(&inst, MechanismKind::Random);
            assert_eq!(bl.es, rd.es, "on {:?}", inst.name);
        }
        let ut2 = compressed(&upper_triangular(2), MechanismKind::BalancedLike);
        assert_eq!(ut2.es, rat(3, 2));
    }

    #[test]
    fn completion_with_empty_prefix_matches_full_run() {
        let inst = upper_triangular(3);
        let bids = BidProfile::sincere(&inst);
        let cfg = EngineConfig::default();
        for kind in [
            MechanismKind::Like,
            MechanismKind::BalancedLike,
            MechanismKind::Random,
        ] {
            let es = evaluate_completion_es(&inst, &bids, kind, &[], &cfg).unwrap();
            assert_eq!(es, compressed(&inst, kind).es, "{kind}");
        }
        // Round 0 fixed to agent 2: item 1 then splits between agents
        // 0 and 1, item 2 always goes to agent 0, so the expected
        // matching size is (1/2)*3 + (1/2)*2.
        let es = evaluate_completion_es(
            &inst,
            &bids,
            MechanismKind::Like,
            &[Assignee::Agent(2)],
            &cfg,
        )
        .unwrap();
        assert_eq!(es, rat(5, 2));
        assert!(evaluate_completion_es(
            &inst,
            &bids,
            MechanismKind::Ranking,
            &[],
            &cfg
        )
        .is_err());
    }

    #[test]
    fn full_advice_is_deterministic_for_every_mechanism() {
        let inst = upper_triangular(3);
        let bids = BidProfile::sincere(&inst);
        let tape = oracle_es(&inst, 3).unwrap();
        let cfg = EngineConfig::default();
        for kind in MechanismKind::ALL {
            let spec = MechanismSpec::advised(kind, tape.clone());
            let dist = evaluate_exact_full(&inst, &bids, &spec, &cfg).unwrap();
            assert_eq!(dist.support_size(), 1, "{kind}");
            let report = welfare_of_distribution(&inst, &dist);
            assert_eq!(report.es, rat_int(3), "{kind}");
            assert_eq!(report.ew, rat_int(1), "{kind}");
        }
    }

    #[test]
    fn branch_cap_is_enforced() {
        let inst = upper_triangular(3);
        let cfg = EngineConfig {
            branch_cap: 2,
            ..Default::default()
        };
        let err = evaluate_exact_full(
            &inst,
            &BidProfile::sincere(&inst),
            &MechanismSpec::base(MechanismKind::Like),
            &cfg,
        );
        assert!(matches!(err, Err(Error::BranchCapExceeded { cap: 2 })));
    }

    #[test]
    fn monte_carlo_is_reproducible_and_consistent() {
        let inst = upper_triangular(3);
        let bids = BidProfile::sincere(&inst);
        let cfg = EngineConfig {
            engine: Engine::MonteCarlo,
            samples: 20_000,
            seed: 7,
            ..Default::default()
        };
        let spec = MechanismSpec::base(MechanismKind::Like);
        let a = evaluate_monte_carlo(&inst, &bids, &spec, &cfg).unwrap();
        let b = evaluate_monte_carlo(&inst, &bids, &spec, &cfg).unwrap();
        assert_eq!(a.es, b.es);
        assert_eq!(a.per_agent, b.per_agent);
        let exact = compressed(&inst, MechanismKind::Like);
        let exact_es = to_f64(&exact.es);
        assert!(
            (a.es - exact_es).abs() <= 4.0 * a.es_stderr.max(1e-9),
            "estimate {} too far from exact {}",
            a.es,
            exact_es
        );
        // A different seed moves the estimate (same mechanism).
        let other = evaluate_monte_carlo(
            &inst,
            &bids,
            &spec,
            &EngineConfig {
                seed: 8,
                ..cfg
            },
        )
        .unwrap();
        assert_ne!(a.es, other.es);
    }

    #[test]
    fn monte_carlo_priority_matches_exact() {
        let inst = upper_triangular(4);
        let bids = BidProfile::sincere(&inst);
        let cfg = EngineConfig {
            engine: Engine::MonteCarlo,
            samples: 40_000,
            seed: 11,
            ..Default::default()
        };
        let spec = MechanismSpec::base(MechanismKind::Ranking);
        let mc = evaluate_monte_carlo(&inst, &bids, &spec, &cfg).unwrap();
        let exact = compressed(&inst, MechanismKind::Ranking);
        assert!((mc.es - to_f64(&exact.es)).abs() <= 4.0 * mc.es_stderr);
        assert!((mc.ew - to_f64(&exact.ew)).abs() <= 4.0 * mc.ew_stderr.max(1e-9));
    }

    #[test]
    fn deterministic_mechanism_has_zero_variance() {
        let inst = fixture(2);
        let bids = BidProfile::sincere(&inst);
        let cfg = EngineConfig {
            engine: Engine::MonteCarlo,
            samples: 1000,
            ..Default::default()
        };
        let mc = evaluate_monte_carlo(
            &inst,
            &bids,
            &MechanismSpec::base(MechanismKind::MaximumLike),
            &cfg,
        )
        .unwrap();
        assert_eq!(mc.es, 2.0);
        assert_eq!(mc.es_stderr, 0.0);
        assert_eq!(mc.uw_stderr, 0.0);
    }

    #[test]
    fn dispatch_covers_all_engines() {
        let inst = fixture(5);
        let bids = BidProfile::sincere(&inst);
        let spec = MechanismSpec::base(MechanismKind::BalancedLike);
        for engine in [Engine::ExactFull, Engine::ExactCompressed, Engine::MonteCarlo] {
            let cfg = EngineConfig::with_engine(engine);
            let eval = evaluate(&inst, &bids, &spec, &cfg).unwrap();
            let v = eval.value_f64(Objective::Ew);
            assert!((v - 1.5).abs() < 0.05, "{engine}: {v}");
            match (engine, eval) {
                (Engine::ExactFull, Evaluation::Exact { distribution, .. }) => {
                    assert!(distribution.is_some());
                }
                (Engine::ExactCompressed, Evaluation::Exact { distribution, .. }) => {
                    assert!(distribution.is_none());
                }
                (Engine::MonteCarlo, Evaluation::Sampled(_)) => {}
                (engine, other) => panic!("{engine} produced {other:?}"),
            }
        }
        let ids = ["exact-full", "exact-compressed", "monte-carlo"];
        for id in ids {
            let parsed: Engine = id.parse().unwrap();
            assert_eq!(parsed.as_str(), id);
        }
        assert!("exact".parse::<Engine>().is_err());
    }

    #[test]
    fn ranking_size_cap_reports_clearly() {
        let inst = upper_triangular(10);
        let err = evaluate_exact_compressed(
            &inst,
            &BidProfile::sincere(&inst),
            &MechanismSpec::base(MechanismKind::Ranking),
            &EngineConfig::default(),
        );
        assert!(matches!(err, Err(Error::SizeCapExceeded(_))));
    }

    #[test]
    fn advised_tape_entries_count_as_served() {
        // Advising agent 1 for round 0 on the 2-agent triangular
        // instance: under the priority mechanism agent 1 is then
        // served, so item 1 (liked by agent 0 alone) goes to agent 0
        // in every priority order.
        let inst = upper_triangular(2);
        let bids = BidProfile::sincere(&inst);
        let tape = AdviceTape::from_assignments(
            2,
            2,
            vec![(0, 1)],
            crate::advice::AdviceEncoding::Distinct,
        )
        .unwrap();
        let spec = MechanismSpec::advised(MechanismKind::Ranking, tape);
        let (report, _) =
            evaluate_exact_compressed(&inst, &bids, &spec, &EngineConfig::default()).unwrap();
        assert_eq!(report.es, rat_int(2));
    }
}
