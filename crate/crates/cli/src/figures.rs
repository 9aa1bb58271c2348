//! The advice-vs-guarantee figure: closed-form competitive-ratio
//! curves for the advised mechanisms as the advised prefix grows from
//! nothing (k = 0) to everything (k = n), optionally joined by
//! measured points on the worst-case instance family.

use crate::harness::{sweep_advice, RunConfig};
use crate::reports::ReportRow;
use anyhow::{Context, Result};
use onfair_core::evaluation::Engine;
use onfair_core::generators::like_adversary;
use onfair_core::mechanisms::MechanismKind;
use onfair_core::rational::{format_pq, rat, rat_int, to_f64};
use onfair_core::welfare::Objective;
use onfair_core::Rational;

const E: f64 = std::f64::consts::E;

/// Guarantees measured against the offline optimum. The exact form is
/// given whenever the point is rational.
fn offline_curves(n: usize, k: usize) -> Vec<(&'static str, f64, Option<Rational>)> {
    let (nf, kf) = (n as f64, k as f64);
    vec![
        (
            "advised:maximum-like",
            kf / nf,
            Some(rat(k as i64, n as i64)),
        ),
        (
            "advised:balanced-like",
            (kf + nf) / (2.0 * nf),
            Some(rat((k + n) as i64, 2 * n as i64)),
        ),
        (
            "advised:ranking",
            (kf + (nf - kf) * (1.0 - 1.0 / E)) / nf,
            (k == n).then(|| rat_int(1)),
        ),
    ]
}

/// Guarantees measured against the best online algorithm.
fn online_curves(n: usize, k: usize) -> Vec<(&'static str, f64, Option<Rational>)> {
    let (nf, kf) = (n as f64, k as f64);
    vec![
        (
            "advised:maximum-like",
            E * kf / ((E - 1.0) * nf + kf),
            match k {
                0 => Some(rat_int(0)),
                _ if k == n => Some(rat_int(1)),
                _ => None,
            },
        ),
        (
            "advised:balanced-like",
            E * (kf + nf) / (2.0 * (E - 1.0) * nf + 2.0 * kf),
            (k == n).then(|| rat_int(1)),
        ),
        ("advised:ranking", 1.0, Some(rat_int(1))),
    ]
}

/// One row per curve point: the guarantee for serving agents when the
/// first k of n rounds are advised, for k = 0..=n. With `measured`,
/// sampled runs of the advised mechanisms on the adversarial family
/// of the same size are appended for comparison (their `ratio` column
/// is the measured counterpart of the curves' `value`).
pub fn figure1_data(n: usize, cfg: &RunConfig, measured: bool) -> Result<Vec<ReportRow>> {
    anyhow::ensure!(n >= 1, "the curve parameter n must be at least 1");
    let mut rows = Vec::new();
    for k in 0..=n {
        for (family, curves) in [
            ("figure1-offline", offline_curves(n, k)),
            ("figure1-online", online_curves(n, k)),
        ] {
            for (mechanism, value, exact) in curves {
                let mut row = ReportRow::blank(mechanism, "es", family, n, n);
                row.regime = "binary".into();
                row.engine = "closed-form".into();
                row.k = Some(k);
                row.value = exact.as_ref().map_or(value, to_f64);
                row.value_exact = exact.as_ref().map(format_pq);
                row.ratio = Some(row.value);
                row.convention = "reciprocal".into();
                rows.push(row);
            }
        }
    }
    if measured {
        let inst = like_adversary(n)
            .with_context(|| format!("building the adversarial family of size {n}"))?;
        let sampled = RunConfig {
            engine: Engine::MonteCarlo,
            ..*cfg
        };
        let ks: Vec<usize> = (0..=n).collect();
        for kind in [
            MechanismKind::MaximumLike,
            MechanismKind::BalancedLike,
            MechanismKind::Ranking,
        ] {
            rows.extend(sweep_advice(&inst, kind, Objective::Es, &ks, &sampled)?);
        }
    }
    Ok(rows)
}
