//! Directional guarantee checks: each cell asserts a claimed relation
//! between an (advised) mechanism's welfare and the offline optimum,
//! verified exhaustively over a small scope, or exhibits a witness
//! instance showing the guarantee cannot be improved.

use crate::harness::CellCheck;
use anyhow::{Context, Result};
use onfair_core::advice::oracle;
use onfair_core::evaluation::{evaluate, EngineConfig, Evaluation};
use onfair_core::generators::{enumerate_binary, enumerate_with_values, example_fixture, FixtureParams};
use onfair_core::instance::Instance;
use onfair_core::mechanisms::{MechanismKind, MechanismSpec};
use onfair_core::offline::{has_perfect_matching, offline_ew, offline_uw};
use onfair_core::rational::{format_pq, rat, rat_int};
use onfair_core::welfare::{Objective, WelfareReport};
use onfair_core::BidProfile;

/// Exact welfare of a mechanism under sincere bidding.
fn exact_welfare(inst: &Instance, spec: &MechanismSpec) -> Result<WelfareReport> {
    let cfg = EngineConfig::default();
    let bids = BidProfile::sincere(inst);
    match evaluate(inst, &bids, spec, &cfg)? {
        Evaluation::Exact { report, .. } => Ok(report),
        Evaluation::Sampled(_) => unreachable!("the default engine is exact"),
    }
}

/// Welfare of `kind` advised by the k-round oracle for `objective`,
/// together with the number of distinct agents named by the tape.
fn advised_welfare(
    inst: &Instance,
    kind: MechanismKind,
    objective: Objective,
    k: usize,
) -> Result<(WelfareReport, usize)> {
    let (tape, _) = oracle(inst, objective, k).with_context(|| {
        format!(
            "building the {objective} oracle tape with k = {k} on {}",
            inst.name.as_deref().unwrap_or("unnamed")
        )
    })?;
    let served = tape.distinct_agent_count();
    let spec = MechanismSpec::advised(kind, tape);
    Ok((exact_welfare(inst, &spec)?, served))
}

fn name_of(inst: &Instance) -> String {
    inst.name.clone().unwrap_or_else(|| "unnamed".into())
}

/// All binary square instances with sides `1..=max_n`.
fn binary_squares(max_n: usize) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        out.extend(enumerate_binary(n, n)?);
    }
    Ok(out)
}

/// Binary squares plus every `{0,1,2}`-valued 2x2 and 2x3 instance.
fn mixed_scope() -> Result<Vec<Instance>> {
    let mut out = binary_squares(3)?;
    out.extend(enumerate_with_values(2, 2, 2)?);
    out.extend(enumerate_with_values(2, 3, 2)?);
    Ok(out)
}

/// Runs `check` on every `(instance, k)` cell with `0 <= k < m`,
/// reporting either the first violation or the number of cells passed.
fn sweep_cells<F>(instances: &[Instance], mut check: F) -> Result<(usize, Option<String>)>
where
    F: FnMut(&Instance, usize) -> Result<Option<String>>,
{
    let mut cells = 0usize;
    for inst in instances {
        for k in 0..inst.m {
            if let Some(detail) = check(inst, k)? {
                return Ok((cells, Some(detail)));
            }
            cells += 1;
        }
    }
    Ok((cells, None))
}

fn verdict_cell(
    cell: &str,
    scope: String,
    outcome: (usize, Option<String>),
) -> CellCheck {
    match outcome {
        (cells, None) => {
            CellCheck::holds(cell, scope, format!("all {cells} (instance, k) cells satisfied"))
        }
        (_, Some(detail)) => CellCheck::fails(cell, scope, detail),
    }
}

/// Advised maximum-like attains the utilitarian optimum at every k in
/// both regimes: every item goes to a highest bidder no matter what.
fn cell_maximum_like_uw(instances: &[Instance]) -> Result<CellCheck> {
    let outcome = sweep_cells(instances, |inst, k| {
        let opt = offline_uw(inst).0;
        let (report, _) = advised_welfare(inst, MechanismKind::MaximumLike, Objective::Uw, k)?;
        Ok((report.uw != opt).then(|| {
            format!(
                "{} at k = {k}: uw {} != optimum {}",
                name_of(inst),
                format_pq(&report.uw),
                format_pq(&opt)
            )
        }))
    })?;
    Ok(verdict_cell(
        "advised maximum-like UW = offline optimum (every k, both regimes)",
        "binary n=m<=3 plus all {0,1,2} grids 2x2 and 2x3".into(),
        outcome,
    ))
}

/// Advised like guarantees at least 1/n of the egalitarian optimum:
/// assignment probabilities never depend on history, so each agent
/// keeps probability >= 1/n on every item of their witness bundle.
fn cell_like_ew(instances: &[Instance]) -> Result<CellCheck> {
    let outcome = sweep_cells(instances, |inst, k| {
        let opt = offline_ew(inst)?.0;
        let n = rat_int(inst.n as i64);
        let (report, _) = advised_welfare(inst, MechanismKind::Like, Objective::Ew, k)?;
        Ok((report.ew.clone() * n.clone() < opt).then(|| {
            format!(
                "{} at k = {k}: ew {} < optimum {} / {}",
                name_of(inst),
                format_pq(&report.ew),
                format_pq(&opt),
                inst.n
            )
        }))
    })?;
    Ok(verdict_cell(
        "advised like EW >= offline optimum / n (every k, both regimes)",
        "binary n=m<=3 plus all {0,1,2} grids 2x2 and 2x3".into(),
        outcome,
    ))
}

/// Advised balanced-like and ranking guarantee 1/(n - l) of the
/// egalitarian optimum on square instances, where l counts the
/// distinct agents the tape serves.
fn cell_balancing_ew(instances: &[Instance]) -> Result<CellCheck> {
    let squares: Vec<Instance> = instances.iter().filter(|i| i.n == i.m).cloned().collect();
    let mut outcome = (0usize, None);
    for kind in [MechanismKind::BalancedLike, MechanismKind::Ranking] {
        let (cells, violation) = sweep_cells(&squares, |inst, k| {
            let opt = offline_ew(inst)?.0;
            let (report, served) = advised_welfare(inst, kind, Objective::Ew, k)?;
            let slack = rat_int((inst.n - served) as i64);
            Ok((report.ew.clone() * slack < opt).then(|| {
                format!(
                    "{} {} at k = {k} (l = {served}): ew {} < optimum {} / {}",
                    kind.as_str(),
                    name_of(inst),
                    format_pq(&report.ew),
                    format_pq(&opt),
                    inst.n - served
                )
            }))
        })?;
        outcome.0 += cells;
        if outcome.1.is_none() {
            outcome.1 = violation;
        }
    }
    Ok(verdict_cell(
        "advised balanced-like and ranking EW >= offline optimum / (n - l) when m = n",
        "square instances: binary n=m<=3 plus all {0,1,2} grids 2x2".into(),
        outcome,
    ))
}

/// Advised like hands the k most valuable items to their best agents
/// outright and every remaining item to its best agent with
/// probability >= 1/n, so its UW is at least (k/m + 1/n - k/(nm)) of
/// the optimum in both regimes.
fn cell_like_uw(instances: &[Instance]) -> Result<CellCheck> {
    let outcome = sweep_cells(instances, |inst, k| {
        let (n, m) = (inst.n as i64, inst.m as i64);
        let opt = offline_uw(inst).0;
        let (report, _) = advised_welfare(inst, MechanismKind::Like, Objective::Uw, k)?;
        // uw >= opt * (kn + m - k) / (nm), cleared of denominators.
        let lhs = report.uw.clone() * rat_int(n * m);
        let rhs = opt.clone() * rat_int(k as i64 * n + m - k as i64);
        Ok((lhs < rhs).then(|| {
            format!(
                "{} at k = {k}: uw {} below the guaranteed share of {}",
                name_of(inst),
                format_pq(&report.uw),
                format_pq(&opt)
            )
        }))
    })?;
    Ok(verdict_cell(
        "advised like UW >= (k/m + 1/n - k/(nm)) * offline optimum (every k, both regimes)",
        "binary n=m<=3 plus all {0,1,2} grids 2x2 and 2x3".into(),
        outcome,
    ))
}

/// With k matched items advised, maximum-like serves at least k
/// distinct agents.
fn cell_maximum_like_es(instances: &[Instance]) -> Result<CellCheck> {
    let outcome = sweep_cells(instances, |inst, k| {
        let (report, _) = advised_welfare(inst, MechanismKind::MaximumLike, Objective::Es, k)?;
        Ok((report.es < rat_int(k as i64)).then(|| {
            format!(
                "{} at k = {k}: es {} < k",
                name_of(inst),
                format_pq(&report.es)
            )
        }))
    })?;
    Ok(verdict_cell(
        "advised maximum-like ES >= k",
        "binary squares n=m<=3 with a perfect matching".into(),
        outcome,
    ))
}

/// With k matched items advised, balanced-like serves at least
/// (k + n)/2 agents in expectation on matchable square instances.
fn cell_balanced_like_es(instances: &[Instance]) -> Result<CellCheck> {
    let outcome = sweep_cells(instances, |inst, k| {
        let bound = rat((k + inst.n) as i64, 2);
        let (report, _) = advised_welfare(inst, MechanismKind::BalancedLike, Objective::Es, k)?;
        Ok((report.es < bound).then(|| {
            format!(
                "{} at k = {k}: es {} < (k + n)/2 = {}",
                name_of(inst),
                format_pq(&report.es),
                format_pq(&bound)
            )
        }))
    })?;
    Ok(verdict_cell(
        "advised balanced-like ES >= (k + n)/2",
        "binary squares n=m<=3 with a perfect matching".into(),
        outcome,
    ))
}

/// One advised round short of a full matching already forces every
/// agent to be served: the lone unserved agent is the only minimum-
/// count (and only unserved) bidder on its matched item.
fn cell_saturation_es(instances: &[Instance]) -> Result<CellCheck> {
    let mut cells = 0usize;
    let mut violation = None;
    for kind in [MechanismKind::BalancedLike, MechanismKind::Ranking] {
        for inst in instances {
            let k = inst.n - 1;
            let (report, _) = advised_welfare(inst, kind, Objective::Es, k)?;
            if report.es != rat_int(inst.n as i64) {
                violation.get_or_insert_with(|| {
                    format!(
                        "{} {} at k = {k}: es {} != n",
                        kind.as_str(),
                        name_of(inst),
                        format_pq(&report.es)
                    )
                });
            }
            cells += 1;
        }
    }
    Ok(verdict_cell(
        "advised balanced-like and ranking ES = n at k = n - 1",
        "binary squares n=m<=3 with a perfect matching".into(),
        (cells, violation),
    ))
}

/// Maximum-like can starve an agent entirely even when everyone could
/// be served: a square witness and an items-outnumber-agents witness.
fn cell_maximum_like_ew_witnesses() -> Result<Vec<CellCheck>> {
    let mut checks = Vec::new();

    let square = example_fixture(4, FixtureParams::default())?;
    let report = exact_welfare(&square, &MechanismSpec::base(MechanismKind::MaximumLike))?;
    let opt = offline_ew(&square)?.0;
    let ok = report.ew == rat_int(0) && opt == rat_int(1);
    checks.push(CellCheck::witness(
        "maximum-like EW can be 0 while the optimum is positive (m = n)",
        format!("fixture {}", name_of(&square)),
        format!("ew {} against optimum {}", format_pq(&report.ew), format_pq(&opt)),
        ok,
    ));

    let wide = Instance::from_integer_rows("maximum-like-starves", &[vec![2, 2, 2], vec![1, 1, 1]])?;
    let report = exact_welfare(&wide, &MechanismSpec::base(MechanismKind::MaximumLike))?;
    let opt = offline_ew(&wide)?.0;
    let ok = report.ew == rat_int(0) && opt == rat_int(2);
    checks.push(CellCheck::witness(
        "maximum-like EW can be 0 while the optimum is positive (m > n)",
        format!("fixture {}", name_of(&wide)),
        format!("ew {} against optimum {}", format_pq(&report.ew), format_pq(&opt)),
        ok,
    ));

    Ok(checks)
}

/// With more items than agents, balanced-like and ranking can pay an
/// agent only epsilon while the optimum pays 1: cheap early items
/// exhaust the agent's claim before its valuable item arrives.
fn cell_overload_ew_witness() -> Result<CellCheck> {
    let eps = rat(1, 100);
    let inst = Instance::new(
        Some("cheap-items-first".into()),
        vec![
            vec![eps.clone(), eps.clone(), rat_int(1), rat_int(0)],
            vec![rat_int(0), rat_int(0), rat_int(1), rat_int(1)],
        ],
        None,
    )?;
    let opt = offline_ew(&inst)?.0;
    let balanced = exact_welfare(&inst, &MechanismSpec::base(MechanismKind::BalancedLike))?;
    let ranking = exact_welfare(&inst, &MechanismSpec::base(MechanismKind::Ranking))?;
    let ok = opt == rat_int(1) && balanced.ew == rat(1, 50) && ranking.ew == rat(1, 100);
    Ok(CellCheck::witness(
        "balanced-like and ranking EW can be arbitrarily small when m > n",
        format!("fixture {}", name_of(&inst)),
        format!(
            "balanced-like ew {}, ranking ew {}, optimum {} (shrinks with the epsilon items)",
            format_pq(&balanced.ew),
            format_pq(&ranking.ew),
            format_pq(&opt)
        ),
        ok,
    ))
}

/// Runs every guarantee cell and returns one verdict per cell.
pub fn table1_check() -> Result<Vec<CellCheck>> {
    let mixed = mixed_scope()?;
    let matchable: Vec<Instance> = binary_squares(3)?
        .into_iter()
        .filter(has_perfect_matching)
        .collect();

    let mut checks = vec![
        cell_maximum_like_uw(&mixed)?,
        cell_like_ew(&mixed)?,
        cell_balancing_ew(&mixed)?,
        cell_like_uw(&mixed)?,
        cell_maximum_like_es(&matchable)?,
        cell_balanced_like_es(&matchable)?,
        cell_saturation_es(&matchable)?,
    ];
    checks.extend(cell_maximum_like_ew_witnesses()?);
    checks.push(cell_overload_ew_witness()?);
    Ok(checks)
}
