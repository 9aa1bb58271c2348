//! Welfare objectives and exact welfare reports.
//!
//! Three objectives are measured for a (distribution over) allocation:
//! expected matching size (number of agents receiving at least one
//! item), expected utilitarian welfare (sum of expected agent
//! utilities), and expected egalitarian welfare (minimum expected
//! agent utility).

use crate::allocation::{AllocationDistribution, AssignmentMatrix, Assignee};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::rational::{format_pq, rat_int, Rational};
use num::traits::Zero;
use std::fmt;
use std::str::FromStr;

/// The welfare objective under study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Objective {
    /// Expected matching size.
    Es,
    /// Expected utilitarian welfare.
    Uw,
    /// Expected egalitarian welfare.
    Ew,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Objective::Es, Objective::Uw, Objective::Ew];

    pub fn as_str(&self) -> &'static str {
        match self {
            Objective::Es => "es",
            Objective::Uw => "uw",
            Objective::Ew => "ew",
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "es" => Ok(Objective::Es),
            "uw" => Ok(Objective::Uw),
            "ew" => Ok(Objective::Ew),
            other => Err(Error::Unsupported(format!("unknown objective `{other}`"))),
        }
    }
}

/// Exact welfare values for one mechanism run on one instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WelfareReport {
    /// Expected number of agents receiving at least one item.
    pub es: Rational,
    /// Sum of expected agent utilities.
    pub uw: Rational,
    /// Minimum expected agent utility.
    pub ew: Rational,
    /// Expected utility per agent.
    pub per_agent: Vec<Rational>,
}

impl WelfareReport {
    pub fn value(&self, objective: Objective) -> &Rational {
        match objective {
            Objective::Es => &self.es,
            Objective::Uw => &self.uw,
            Objective::Ew => &self.ew,
        }
    }

    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        if self.per_agent.len() != n {
            return Err(Error::DimensionMismatch(
                "per-agent welfare length differs from agent count".into(),
            ));
        }
        let cap = rat_int(n.min(m) as i64);
        if self.es < Rational::zero() || self.es > cap {
            return Err(Error::InvalidDistribution(format!(
                "expected matching size {} outside [0, min(n, m)]",
                format_pq(&self.es)
            )));
        }
        Ok(())
    }
}

/// Aggregates the exact per-agent, per-item assignment probabilities
/// of a distribution.
pub fn assignment_matrix(inst: &Instance, dist: &AllocationDistribution) -> AssignmentMatrix {
    let mut matrix = AssignmentMatrix::zeros(inst.n, inst.m);
    for (alloc, prob) in dist.entries() {
        for (item, a) in alloc.0.iter().enumerate() {
            if let Assignee::Agent(i) = a {
                matrix.p[*i][item] += prob;
            }
        }
    }
    matrix
}

/// Computes the exact welfare report of a distribution: expected
/// matching size over the support, and per-agent expected utilities
/// aggregated through the assignment probabilities. Utilities are the
/// instance's true utilities regardless of the bids that produced the
/// distribution.
pub fn welfare_of_distribution(inst: &Instance, dist: &AllocationDistribution) -> WelfareReport {
    let mut es = Rational::zero();
    for (alloc, prob) in dist.entries() {
        es += prob * rat_int(alloc.matching_size(inst.n) as i64);
    }
    let matrix = assignment_matrix(inst, dist);
    welfare_from_parts(inst, es, &matrix)
}

/// Builds a report from an already-computed expected matching size and
/// assignment matrix.
pub fn welfare_from_parts(
    inst: &Instance,
    es: Rational,
    matrix: &AssignmentMatrix,
) -> WelfareReport {
    let per_agent: Vec<Rational> = (0..inst.n)
        .map(|i| {
            let mut total = Rational::zero();
            for j in 0..inst.m {
                total += &matrix.p[i][j] * inst.utility(i, j);
            }
            total
        })
        .collect();
    let uw = per_agent.iter().fold(Rational::zero(), |acc, u| acc + u);
    let ew = per_agent
        .iter()
        .min()
        .cloned()
        .unwrap_or_else(Rational::zero);
    WelfareReport {
        es,
        uw,
        ew,
        per_agent,
    }
}

/// A ratio that may be infinite (optimum positive, achieved zero).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RatioValue {
    Finite(Rational),
    Infinite,
}

impl RatioValue {
    pub fn is_infinite(&self) -> bool {
        matches!(self, RatioValue::Infinite)
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            RatioValue::Finite(r) => crate::rational::to_f64(r),
            RatioValue::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for RatioValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RatioValue::Finite(r) => f.write_str(&format_pq(r)),
            RatioValue::Infinite => f.write_str("inf"),
        }
    }
}

/// The canonical competitive ratio `optimum / achieved`, with a
/// distinguished infinite value when the achieved welfare is zero.
pub fn ratio(optimum: &Rational, achieved: &Rational) -> RatioValue {
    if achieved.is_zero() {
        RatioValue::Infinite
    } else {
        RatioValue::Finite(optimum / achieved)
    }
}

/// The reciprocal orientation `achieved / optimum`, used by
/// advice-budget tables; zero achieved maps to zero, and a zero
/// optimum with positive achieved maps to the infinite value.
pub fn reciprocal_ratio(optimum: &Rational, achieved: &Rational) -> RatioValue {
    if optimum.is_zero() {
        if achieved.is_zero() {
            RatioValue::Finite(Rational::zero())
        } else {
            RatioValue::Infinite
        }
    } else {
        RatioValue::Finite(achieved / optimum)
    }
}

/// A welfare comparison between a mechanism and an optimum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatioReport {
    pub objective: Objective,
    pub optimum: Rational,
    pub achieved: Rational,
    /// Canonical orientation: `optimum / achieved`.
    pub ratio: RatioValue,
}

impl RatioReport {
    pub fn new(objective: Objective, optimum: Rational, achieved: Rational) -> Self {
        let ratio = ratio(&optimum, &achieved);
        RatioReport {
            objective,
            optimum,
            achieved,
            ratio,
        }
    }
}
