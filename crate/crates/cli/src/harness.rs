//! Experiment drivers: single-instance evaluation rows, the example
//! regression suite, advice sweeps, the mechanism dominance scan, and
//! the axiom scan.

use crate::reports::{AxiomRow, ReportRow};
use anyhow::{Context, Result};
use onfair_core::advice::oracle;
use onfair_core::axioms::{
    check_envy_ex_ante, check_envy_ex_post, check_pareto_ex_post, check_strategyproof,
};
use onfair_core::evaluation::{evaluate, Engine, EngineConfig, Evaluation};
use onfair_core::generators::{enumerate_binary, example_fixture, FixtureParams};
use onfair_core::mechanisms::{MechanismKind, MechanismSpec};
use onfair_core::offline::{offline_es, offline_ew, offline_uw};
use onfair_core::rational::{format_pq, rat, rat_int, to_f64};
use onfair_core::welfare::Objective;
use onfair_core::{BidProfile, Instance, Rational};
use rayon::prelude::*;
use serde::Serialize;

/// CLI-level evaluation settings shared by every subcommand.
#[derive(Clone, Copy, Debug)]
pub struct RunConfig {
    pub engine: Engine,
    pub seed: u64,
    pub samples: usize,
}

impl RunConfig {
    pub fn exact() -> Self {
        RunConfig {
            engine: Engine::ExactCompressed,
            seed: 42,
            samples: 10_000,
        }
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            engine: self.engine,
            samples: self.samples,
            seed: self.seed,
            ..Default::default()
        }
    }
}

/// One verdict line of a scan (dominance or guarantee-direction
/// checks). `ok` is false only when a claimed relation failed.
#[derive(Clone, Debug, Serialize)]
pub struct CellCheck {
    pub cell: String,
    pub scope: String,
    pub verdict: String,
    pub detail: String,
    pub ok: bool,
}

impl CellCheck {
    pub fn holds(cell: &str, scope: String, detail: String) -> Self {
        CellCheck {
            cell: cell.into(),
            scope,
            verdict: "HOLDS".into(),
            detail,
            ok: true,
        }
    }

    pub fn fails(cell: &str, scope: String, detail: String) -> Self {
        CellCheck {
            cell: cell.into(),
            scope,
            verdict: "FAILS".into(),
            detail,
            ok: false,
        }
    }

    pub fn witness(cell: &str, scope: String, detail: String, ok: bool) -> Self {
        CellCheck {
            cell: cell.into(),
            scope,
            verdict: if ok { "WITNESS FOUND" } else { "WITNESS MISSING" }.into(),
            detail,
            ok,
        }
    }
}

fn instance_family(inst: &Instance) -> String {
    inst.name.clone().unwrap_or_else(|| "unnamed".into())
}

fn offline_optimum(inst: &Instance, objective: Objective) -> Option<Rational> {
    match objective {
        Objective::Es => Some(rat_int(offline_es(inst).0 as i64)),
        Objective::Uw => Some(offline_uw(inst).0),
        Objective::Ew => offline_ew(inst).ok().map(|(v, _)| v),
    }
}

/// Builds the three objective rows (es, uw, ew) for one mechanism on
/// one instance, with reciprocal ratios against the offline optima.
pub fn evaluate_rows(
    inst: &Instance,
    kind: MechanismKind,
    advice: Option<(Objective, usize)>,
    cfg: &RunConfig,
) -> Result<Vec<ReportRow>> {
    let spec = match advice {
        Some((objective, k)) => {
            let (tape, _) = oracle(inst, objective, k)
                .with_context(|| format!("building the {objective} oracle tape for k = {k}"))?;
            MechanismSpec::advised(kind, tape)
        }
        None => MechanismSpec::base(kind),
    };
    let bids = BidProfile::sincere(inst);
    let engine_cfg = cfg.engine_config();
    let outcome = evaluate(inst, &bids, &spec, &engine_cfg)
        .with_context(|| format!("evaluating {} on {}", spec.id(), instance_family(inst)))?;
    let family = instance_family(inst);
    let mut rows = Vec::with_capacity(3);
    for objective in [Objective::Es, Objective::Uw, Objective::Ew] {
        let mut row = ReportRow::blank(&spec.id(), objective.as_str(), &family, inst.n, inst.m);
        row.regime = inst.regime().as_str().into();
        row.engine = cfg.engine.as_str().into();
        row.k = spec.advice.as_ref().map(|t| t.k());
        row.l = spec.advice.as_ref().map(|t| t.distinct_agent_count());
        row.value = outcome.value_f64(objective);
        row.value_exact = outcome.exact_value(objective).map(format_pq);
        let optimum = offline_optimum(inst, objective);
        row.optimum = optimum.as_ref().map(format_pq);
        row.ratio = optimum.as_ref().and_then(|opt| {
            let opt = to_f64(opt);
            (opt > 0.0).then(|| row.value / opt)
        });
        row.convention = "reciprocal".into();
        if let Evaluation::Sampled(mc) = &outcome {
            row.seed = Some(cfg.seed);
            row.samples = Some(mc.samples);
            row.stderr = Some(mc.stderr(objective));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// The example regression suite: every fixture under the four named
/// mechanisms plus the offline benchmarks, compared against the
/// pinned values.
pub struct RegressionOutcome {
    pub rows: Vec<ReportRow>,
    pub mismatches: Vec<String>,
}

const EXAMPLE_MECHANISMS: [MechanismKind; 4] = [
    MechanismKind::Like,
    MechanismKind::BalancedLike,
    MechanismKind::MaximumLike,
    MechanismKind::Ranking,
];

pub fn run_examples() -> Result<RegressionOutcome> {
    let cfg = RunConfig::exact();
    let mut rows = Vec::new();
    let mut exact: Vec<(String, String, Objective, Rational)> = Vec::new();
    for id in 1..=5 {
        let inst = example_fixture(id, FixtureParams::default())?;
        let family = instance_family(&inst);
        // Offline benchmark rows.
        for objective in [Objective::Es, Objective::Uw, Objective::Ew] {
            if let Some(opt) = offline_optimum(&inst, objective) {
                let mut row =
                    ReportRow::blank("offline", objective.as_str(), &family, inst.n, inst.m);
                row.regime = inst.regime().as_str().into();
                row.engine = "offline".into();
                row.value = to_f64(&opt);
                row.value_exact = Some(format_pq(&opt));
                exact.push(("offline".into(), family.clone(), objective, opt));
                rows.push(row);
            }
        }
        for kind in EXAMPLE_MECHANISMS {
            let mech_rows = evaluate_rows(&inst, kind, None, &cfg)?;
            for (row, objective) in mech_rows
                .iter()
                .zip([Objective::Es, Objective::Uw, Objective::Ew])
            {
                let value = row
                    .value_exact
                    .as_deref()
                    .expect("exact engine emits exact values");
                exact.push((
                    kind.as_str().into(),
                    family.clone(),
                    objective,
                    onfair_core::rational::parse_rational(value)?,
                ));
            }
            rows.extend(mech_rows);
        }
    }

    let pins: [(&str, &str, Objective, Rational); 11] = [
        ("example-2", "maximum-like", Objective::Es, rat_int(2)),
        ("example-2", "ranking", Objective::Es, rat(3, 2)),
        ("example-3-u100", "offline", Objective::Uw, rat_int(101)),
        ("example-3-u100", "balanced-like", Objective::Uw, rat_int(2)),
        ("example-3-u100", "ranking", Objective::Uw, rat_int(2)),
        ("example-4", "maximum-like", Objective::Ew, rat_int(0)),
        ("example-4", "offline", Objective::Ew, rat_int(1)),
        ("example-5", "maximum-like", Objective::Ew, rat_int(2)),
        ("example-5", "like", Objective::Ew, rat(3, 2)),
        ("example-5", "balanced-like", Objective::Ew, rat(3, 2)),
        ("example-5", "ranking", Objective::Ew, rat(3, 2)),
    ];
    let mut mismatches = Vec::new();
    for (family, mechanism, objective, expected) in pins {
        let found = exact.iter().find(|(mech, fam, obj, _)| {
            mech == mechanism && fam == family && *obj == objective
        });
        match found {
            Some((_, _, _, actual)) if *actual == expected => {}
            Some((_, _, _, actual)) => mismatches.push(format!(
                "{mechanism} {objective} on {family}: expected {}, computed {}",
                format_pq(&expected),
                format_pq(actual)
            )),
            None => mismatches.push(format!(
                "{mechanism} {objective} on {family}: no value computed"
            )),
        }
    }
    Ok(RegressionOutcome { rows, mismatches })
}

/// Advice sweep: for each requested number of advised rounds, builds
/// the per-objective oracle tape, evaluates the advised mechanism,
/// and reports the reciprocal ratio against the offline optimum.
/// Cells run in parallel; rows come back ordered by k.
pub fn sweep_advice(
    inst: &Instance,
    kind: MechanismKind,
    objective: Objective,
    ks: &[usize],
    cfg: &RunConfig,
) -> Result<Vec<ReportRow>> {
    let mut rows: Vec<(usize, Vec<ReportRow>)> = ks
        .par_iter()
        .map(|&k| {
            let rows = evaluate_rows(inst, kind, Some((objective, k)), cfg)?;
            Ok((k, rows))
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|(k, _)| *k);
    // The sweep reports the swept objective's row per k.
    Ok(rows
        .into_iter()
        .flat_map(|(_, rows)| {
            rows.into_iter()
                .filter(|row| row.objective == objective.as_str())
        })
        .collect())
}

/// Exhaustive pointwise comparison of the mechanisms on all binary
/// square instances up to n = m = 3, plus the incomparability
/// witnesses among the example fixtures.
pub fn dominance_scan() -> Result<Vec<CellCheck>> {
    let cfg = RunConfig::exact();
    let mut checks = Vec::new();

    let mut instances = Vec::new();
    for size in 1..=3 {
        instances.extend(enumerate_binary(size, size)?);
    }
    let scope = format!("all binary instances n=m<=3 ({} total)", instances.len());

    let report = |inst: &Instance, kind: MechanismKind| -> Result<(Rational, Rational, Rational)> {
        let rows = evaluate_rows(inst, kind, None, &cfg)?;
        let value = |idx: usize| -> Result<Rational> {
            onfair_core::rational::parse_rational(
                rows[idx].value_exact.as_deref().expect("exact engine"),
            )
            .map_err(Into::into)
        };
        Ok((value(0)?, value(1)?, value(2)?))
    };

    // Count-balancing vs uniform on expected matching size.
    let mut strict = 0usize;
    let mut violation = None;
    let mut serve_once_mismatch = None;
    let mut uw_violation = None;
    let mut priority_discards = None;
    let mut ranking_es = (0usize, 0usize, 0usize); // (>, =, <) vs balanced
    let mut ranking_ew = (0usize, 0usize, 0usize);
    for inst in &instances {
        let (like_es, like_uw, like_ew) = report(inst, MechanismKind::Like)?;
        let (bal_es, bal_uw, bal_ew) = report(inst, MechanismKind::BalancedLike)?;
        let (rand_es, _, _) = report(inst, MechanismKind::Random)?;
        let (rank_es, rank_uw, rank_ew) = report(inst, MechanismKind::Ranking)?;
        let name = instance_family(inst);
        if bal_es < like_es && violation.is_none() {
            violation = Some(format!(
                "{name}: balanced-like {} < like {}",
                format_pq(&bal_es),
                format_pq(&like_es)
            ));
        }
        if bal_es > like_es {
            strict += 1;
        }
        if bal_es != rand_es && serve_once_mismatch.is_none() {
            serve_once_mismatch = Some(format!(
                "{name}: balanced-like {} != random {}",
                format_pq(&bal_es),
                format_pq(&rand_es)
            ));
        }
        let m = rat_int(inst.m as i64);
        if (like_uw != m || bal_uw != m) && uw_violation.is_none() {
            uw_violation = Some(format!(
                "{name}: like uw {}, balanced-like uw {}, m = {}",
                format_pq(&like_uw),
                format_pq(&bal_uw),
                inst.m
            ));
        }
        if rank_uw < m && priority_discards.is_none() {
            priority_discards = Some(format!("{name}: ranking uw {} < m", format_pq(&rank_uw)));
        }
        match rank_es.cmp(&bal_es) {
            std::cmp::Ordering::Greater => ranking_es.0 += 1,
            std::cmp::Ordering::Equal => ranking_es.1 += 1,
            std::cmp::Ordering::Less => ranking_es.2 += 1,
        }
        match rank_ew.cmp(&bal_ew.min(like_ew)) {
            std::cmp::Ordering::Greater => ranking_ew.0 += 1,
            std::cmp::Ordering::Equal => ranking_ew.1 += 1,
            std::cmp::Ordering::Less => ranking_ew.2 += 1,
        }
    }

    checks.push(match violation {
        None if strict > 0 => CellCheck::holds(
            "balanced-like ES >= like ES, strict somewhere",
            scope.clone(),
            format!("strict on {strict} instances"),
        ),
        None => CellCheck::fails(
            "balanced-like ES >= like ES, strict somewhere",
            scope.clone(),
            "never strict".into(),
        ),
        Some(detail) => CellCheck::fails(
            "balanced-like ES >= like ES, strict somewhere",
            scope.clone(),
            detail,
        ),
    });
    checks.push(match serve_once_mismatch {
        None => CellCheck::holds(
            "balanced-like ES = random ES",
            scope.clone(),
            "exact equality on every instance".into(),
        ),
        Some(detail) => CellCheck::fails("balanced-like ES = random ES", scope.clone(), detail),
    });
    checks.push(match (uw_violation, priority_discards) {
        (None, Some(witness)) => CellCheck::holds(
            "like/balanced-like UW = m; ranking discards somewhere",
            scope.clone(),
            witness,
        ),
        (Some(detail), _) => CellCheck::fails(
            "like/balanced-like UW = m; ranking discards somewhere",
            scope.clone(),
            detail,
        ),
        (None, None) => CellCheck::fails(
            "like/balanced-like UW = m; ranking discards somewhere",
            scope.clone(),
            "ranking never discarded".into(),
        ),
    });
    checks.push(CellCheck {
        cell: "ranking vs balanced-like ES (pointwise status)".into(),
        scope: scope.clone(),
        verdict: "REPORTED".into(),
        detail: format!(
            "ranking greater on {}, equal on {}, less on {} instances",
            ranking_es.0, ranking_es.1, ranking_es.2
        ),
        ok: true,
    });
    checks.push(CellCheck {
        cell: "ranking vs min(like, balanced-like) EW (pointwise status)".into(),
        scope,
        verdict: "REPORTED".into(),
        detail: format!(
            "ranking greater on {}, equal on {}, less on {} instances",
            ranking_ew.0, ranking_ew.1, ranking_ew.2
        ),
        ok: true,
    });

    // Incomparability witnesses: each of the highest-bid and priority
    // rules beats the other on some fixture.
    let ex2 = example_fixture(2, FixtureParams::default())?;
    let ex4 = example_fixture(4, FixtureParams::default())?;
    let (ml2, _, _) = report(&ex2, MechanismKind::MaximumLike)?;
    let (rk2, _, _) = report(&ex2, MechanismKind::Ranking)?;
    let (ml4, _, _) = report(&ex4, MechanismKind::MaximumLike)?;
    let (rk4, _, _) = report(&ex4, MechanismKind::Ranking)?;
    let ok = ml2 > rk2 && rk4 > ml4;
    checks.push(CellCheck::witness(
        "maximum-like and ranking are ES-incomparable",
        "example fixtures 2 and 4".into(),
        format!(
            "fixture 2: maximum-like {} > ranking {}; fixture 4: ranking {} > maximum-like {}",
            format_pq(&ml2),
            format_pq(&rk2),
            format_pq(&rk4),
            format_pq(&ml4)
        ),
        ok,
    ));
    Ok(checks)
}

/// Which axioms to scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxiomSelect {
    All,
    Strategyproof,
    EnvyExAnte,
    EnvyExPost,
    Pareto,
}

impl std::str::FromStr for AxiomSelect {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(AxiomSelect::All),
            "strategyproof" | "sp" => Ok(AxiomSelect::Strategyproof),
            "envy-ex-ante" => Ok(AxiomSelect::EnvyExAnte),
            "envy-ex-post" => Ok(AxiomSelect::EnvyExPost),
            "pareto" => Ok(AxiomSelect::Pareto),
            other => anyhow::bail!(
                "unknown axiom `{other}` (expected all, strategyproof, envy-ex-ante, envy-ex-post, or pareto)"
            ),
        }
    }
}

const REPORT_SPACE_CAP: usize = 100_000;

/// Scans every binary square instance up to `max_n` for violations of
/// the selected axioms by the given mechanism, reporting one verdict
/// row per axiom.
pub fn axioms_scan(
    kind: MechanismKind,
    max_n: usize,
    which: AxiomSelect,
    envy_bound: &Rational,
) -> Result<Vec<AxiomRow>> {
    let spec = MechanismSpec::base(kind);
    let mut instances = Vec::new();
    for size in 1..=max_n {
        instances.extend(enumerate_binary(size, size)?);
    }
    let scope = format!(
        "all binary instances n=m<={max_n} ({} total)",
        instances.len()
    );
    let wants = |ax: AxiomSelect| which == AxiomSelect::All || which == ax;
    let mut rows = Vec::new();

    if wants(AxiomSelect::Strategyproof) {
        let mut verdict = "SATISFIED (within searched report space)".to_string();
        let mut detail = String::new();
        for inst in &instances {
            let report = check_strategyproof(inst, &spec, REPORT_SPACE_CAP)?;
            if let Some(cx) = report.counterexample {
                verdict = "VIOLATED".into();
                detail = format!(
                    "{}: agent {} reports {:?} raising expected utility {} -> {}",
                    instance_family(inst),
                    cx.agent,
                    cx.report.iter().map(format_pq).collect::<Vec<_>>(),
                    format_pq(&cx.sincere_value),
                    format_pq(&cx.deviant_value)
                );
                break;
            }
        }
        rows.push(AxiomRow {
            axiom: "strategy-proofness".into(),
            mechanism: kind.as_str().into(),
            scope: scope.clone(),
            verdict,
            detail,
        });
    }

    if wants(AxiomSelect::EnvyExAnte) {
        let mut verdict = "SATISFIED".to_string();
        let mut detail = String::new();
        for inst in &instances {
            let report = check_envy_ex_ante(inst, &spec)?;
            if !report.verdict.is_satisfied() {
                let (i, k) = report.worst_pair.expect("violated implies a pair");
                verdict = "VIOLATED".into();
                detail = format!(
                    "{}: agent {i} envies agent {k} by {} in expectation",
                    instance_family(inst),
                    format_pq(&report.max_envy)
                );
                break;
            }
        }
        rows.push(AxiomRow {
            axiom: "envy-freeness ex ante".into(),
            mechanism: kind.as_str().into(),
            scope: scope.clone(),
            verdict,
            detail,
        });
    }

    if wants(AxiomSelect::EnvyExPost) {
        let mut verdict = "SATISFIED".to_string();
        let mut detail = format!("bound {}", format_pq(envy_bound));
        for inst in &instances {
            let report = check_envy_ex_post(inst, &spec, envy_bound)?;
            if !report.verdict.is_satisfied() {
                let w = report.worst.expect("violated implies a witness");
                verdict = "VIOLATED".into();
                detail = format!(
                    "{}: agent {} envies agent {} by {} on an allocation of probability {}",
                    instance_family(inst),
                    w.envious,
                    w.envied,
                    format_pq(&w.envy),
                    format_pq(&w.probability)
                );
                break;
            }
        }
        rows.push(AxiomRow {
            axiom: format!("envy bounded ex post (r = {})", format_pq(envy_bound)),
            mechanism: kind.as_str().into(),
            scope: scope.clone(),
            verdict,
            detail,
        });
    }

    if wants(AxiomSelect::Pareto) {
        let mut verdict = "SATISFIED".to_string();
        let mut detail = String::new();
        for inst in &instances {
            let report = check_pareto_ex_post(inst, &spec)?;
            if !report.verdict.is_satisfied() {
                let w = report.witness.expect("violated implies a witness");
                verdict = "VIOLATED".into();
                detail = format!(
                    "{}: allocation {:?} (probability {}) is dominated by {:?}",
                    instance_family(inst),
                    w.dominated,
                    format_pq(&w.probability),
                    w.dominating
                );
                break;
            }
        }
        rows.push(AxiomRow {
            axiom: "Pareto efficiency ex post".into(),
            mechanism: kind.as_str().into(),
            scope,
            verdict,
            detail,
        });
    }

    Ok(rows)
}
