//! Problem instances and bid profiles.
//!
//! An instance fixes `n` agents, `m` indivisible items, a non-negative
//! rational utility matrix, and the order in which items arrive. Items
//! are indexed by their position in the utility matrix; the arrival
//! order maps rounds to item indices. Every valid instance satisfies
//! two liking conditions: each agent assigns positive utility to at
//! least one item, and each item is assigned positive utility by at
//! least one agent.

use crate::error::{Error, Result};
use crate::rational::{self, rat_int, Rational};
use num::traits::Zero;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// The two utility classes studied: 0/1 ("binary") and arbitrary
/// non-negative rationals ("general").
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UtilityRegime {
    Binary,
    General,
}

impl UtilityRegime {
    pub fn as_str(self) -> &'static str {
        match self {
            UtilityRegime::Binary => "binary",
            UtilityRegime::General => "general",
        }
    }
}

impl std::fmt::Display for UtilityRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for UtilityRegime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(UtilityRegime::Binary),
            "general" => Ok(UtilityRegime::General),
            other => Err(Error::Unsupported(format!(
                "unknown utility regime `{other}` (expected `binary` or `general`)"
            ))),
        }
    }
}

/// An online fair division instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub name: Option<String>,
    pub n: usize,
    pub m: usize,
    /// `utilities[i][j]` is agent `i`'s utility for item `j`.
    pub utilities: Vec<Vec<Rational>>,
    /// `arrival_order[t]` is the item revealed in round `t`.
    pub arrival_order: Vec<usize>,
}

impl Instance {
    /// Builds and validates an instance. The arrival order defaults to
    /// item-index order when `order` is `None`.
    pub fn new(
        name: Option<String>,
        utilities: Vec<Vec<Rational>>,
        order: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = utilities.len();
        let m = utilities.first().map_or(0, Vec::len);
        let arrival_order = order.unwrap_or_else(|| (0..m).collect());
        let inst = Instance {
            name,
            n,
            m,
            utilities,
            arrival_order,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Convenience constructor for integer utility matrices.
    pub fn from_integer_rows(name: &str, rows: &[Vec<i64>]) -> Result<Self> {
        let utilities = rows
            .iter()
            .map(|row| row.iter().map(|&v| rat_int(v)).collect())
            .collect();
        Instance::new(Some(name.to_string()), utilities, None)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidInstance(
                "need at least one agent and one item".into(),
            ));
        }
        if self.utilities.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} utility rows, found {}",
                self.n,
                self.utilities.len()
            )));
        }
        for (i, row) in self.utilities.iter().enumerate() {
            if row.len() != self.m {
                return Err(Error::DimensionMismatch(format!(
                    "agent {}: expected {} utilities, found {}",
                    i,
                    self.m,
                    row.len()
                )));
            }
            for (j, u) in row.iter().enumerate() {
                if !rational::is_non_negative(u) {
                    return Err(Error::InvalidInstance(format!(
                        "utility of agent {i} for item {j} is negative"
                    )));
                }
            }
            if row.iter().all(Rational::is_zero) {
                return Err(Error::InvalidInstance(format!(
                    "agent {i} likes no item"
                )));
            }
        }
        for j in 0..self.m {
            if (0..self.n).all(|i| self.utilities[i][j].is_zero()) {
                return Err(Error::InvalidInstance(format!(
                    "item {j} is liked by no agent"
                )));
            }
        }
        if self.arrival_order.len() != self.m {
            return Err(Error::InvalidInstance(format!(
                "arrival order lists {} rounds for {} items",
                self.arrival_order.len(),
                self.m
            )));
        }
        let mut seen = vec![false; self.m];
        for &j in &self.arrival_order {
            if j >= self.m || seen[j] {
                return Err(Error::InvalidInstance(
                    "arrival order is not a permutation of the items".into(),
                ));
            }
            seen[j] = true;
        }
        Ok(())
    }

    /// Agent `i`'s utility for item `j`.
    pub fn utility(&self, agent: usize, item: usize) -> &Rational {
        &self.utilities[agent][item]
    }

    /// The item revealed in round `t`.
    pub fn item_at(&self, round: usize) -> usize {
        self.arrival_order[round]
    }

    /// Agents with positive utility for item `j`, in index order.
    pub fn likers(&self, item: usize) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| !self.utilities[i][item].is_zero())
            .collect()
    }

    /// True when every utility is 0 or 1.
    pub fn is_binary(&self) -> bool {
        use num::traits::One;
        self.utilities
            .iter()
            .flatten()
            .all(|u| u.is_zero() || u.is_one())
    }

    /// The utility regime this instance belongs to.
    pub fn regime(&self) -> UtilityRegime {
        if self.is_binary() {
            UtilityRegime::Binary
        } else {
            UtilityRegime::General
        }
    }

    /// Reads an instance from its JSON file form.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| Error::Serde(e.to_string()))?;
        if file.utilities.len() != file.n {
            return Err(Error::DimensionMismatch(format!(
                "field n is {} but utilities has {} rows",
                file.n,
                file.utilities.len()
            )));
        }
        if file.utilities.iter().any(|row| row.len() != file.m) {
            return Err(Error::DimensionMismatch(format!(
                "field m is {} but a utility row has a different length",
                file.m
            )));
        }
        Instance::new(file.name, file.utilities, Some(file.order))
    }

    /// Serializes the instance to its JSON file form.
    pub fn to_json_string(&self) -> String {
        let file = InstanceFile {
            name: self.name.clone(),
            n: self.n,
            m: self.m,
            utilities: self.utilities.clone(),
            order: self.arrival_order.clone(),
        };
        serde_json::to_string_pretty(&file).expect("instance serialization cannot fail")
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Instance::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_json_string() + "\n")?)
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    n: usize,
    m: usize,
    #[serde(with = "rational::pq::matrix")]
    utilities: Vec<Vec<Rational>>,
    order: Vec<usize>,
}

/// The bids a mechanism sees, one row per agent. Bids default to the
/// true utilities (sincere bidding) but may deviate row-wise when
/// probing strategic behaviour; only the dimensions are constrained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BidProfile {
    pub bids: Vec<Vec<Rational>>,
}

impl BidProfile {
    /// The sincere profile: bids equal to the instance utilities.
    pub fn sincere(inst: &Instance) -> Self {
        BidProfile {
            bids: inst.utilities.clone(),
        }
    }

    /// A profile in which `agent` reports `row` and everyone else bids
    /// sincerely.
    pub fn with_misreport(inst: &Instance, agent: usize, row: Vec<Rational>) -> Result<Self> {
        let mut bids = inst.utilities.clone();
        if row.len() != inst.m {
            return Err(Error::DimensionMismatch(format!(
                "misreport for agent {agent} has {} entries, expected {}",
                row.len(),
                inst.m
            )));
        }
        bids[agent] = row;
        Ok(BidProfile { bids })
    }

    pub fn validate_for(&self, inst: &Instance) -> Result<()> {
        if self.bids.len() != inst.n || self.bids.iter().any(|row| row.len() != inst.m) {
            return Err(Error::DimensionMismatch(
                "bid profile does not match instance dimensions".into(),
            ));
        }
        for row in &self.bids {
            for b in row {
                if !rational::is_non_negative(b) {
                    return Err(Error::InvalidInstance("bids must be non-negative".into()));
                }
            }
        }
        Ok(())
    }

    /// Agents with a positive bid for item `j`, in index order.
    pub fn positive_bidders(&self, item: usize) -> Vec<usize> {
        (0..self.bids.len())
            .filter(|&i| !self.bids[i][item].is_zero())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn sample() -> Instance {
        Instance::from_integer_rows("sample", &[vec![2, 0], vec![1, 2]]).unwrap()
    }

    #[test]
    fn accepts_valid_instance() {
        let inst = sample();
        assert_eq!(inst.n, 2);
        assert_eq!(inst.m, 2);
        assert_eq!(inst.arrival_order, vec![0, 1]);
        assert_eq!(inst.likers(0), vec![0, 1]);
        assert_eq!(inst.likers(1), vec![1]);
    }

    #[test]
    fn rejects_agent_liking_nothing() {
        let err = Instance::from_integer_rows("bad", &[vec![0, 0], vec![1, 2]]).unwrap_err();
        assert!(err.to_string().contains("agent 0"));
    }

    #[test]
    fn rejects_item_liked_by_nobody() {
        let err = Instance::from_integer_rows("bad", &[vec![1, 0], vec![2, 0]]).unwrap_err();
        assert!(err.to_string().contains("item 1"));
    }

    #[test]
    fn rejects_negative_utility() {
        let err = Instance::new(
            None,
            vec![vec![rat(1, 1), rat(-1, 2)], vec![rat(1, 1), rat(1, 1)]],
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("negative"));
    }

    #[test]
    fn rejects_bad_arrival_order() {
        let err = Instance::new(
            None,
            vec![vec![rat_int(1), rat_int(1)], vec![rat_int(1), rat_int(1)]],
            Some(vec![0, 0]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("permutation"));
        let err = Instance::new(
            None,
            vec![vec![rat_int(1), rat_int(1)], vec![rat_int(1), rat_int(1)]],
            Some(vec![0]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("arrival order"));
    }

    #[test]
    fn json_round_trip_preserves_instance() {
        let inst = Instance::new(
            Some("frac".into()),
            vec![
                vec![rat(1, 2), rat_int(0)],
                vec![rat_int(3), rat(7, 3)],
            ],
            Some(vec![1, 0]),
        )
        .unwrap();
        let text = inst.to_json_string();
        let back = Instance::from_json_str(&text).unwrap();
        assert_eq!(inst, back);
        // Rationals appear as p/q strings in the file form.
        assert!(text.contains("\"1/2\""));
        assert!(text.contains("\"7/3\""));
    }

    #[test]
    fn json_accepts_integer_entries() {
        let text = r#"{"n":2,"m":2,"utilities":[[2,0],["1","2"]],"order":[0,1]}"#;
        let inst = Instance::from_json_str(text).unwrap();
        assert_eq!(inst, sample_unnamed());
    }

    fn sample_unnamed() -> Instance {
        Instance::new(
            None,
            vec![
                vec![rat_int(2), rat_int(0)],
                vec![rat_int(1), rat_int(2)],
            ],
            None,
        )
        .unwrap()
    }

    #[test]
    fn json_rejects_dimension_lies() {
        let text = r#"{"n":3,"m":2,"utilities":[[2,0],[1,2]],"order":[0,1]}"#;
        assert!(Instance::from_json_str(text).is_err());
        let text = r#"{"n":2,"m":2,"utilities":[[2,0],[1,2]],"order":[0]}"#;
        assert!(Instance::from_json_str(text).is_err());
    }

    #[test]
    fn sincere_bids_match_utilities() {
        let inst = sample();
        let bids = BidProfile::sincere(&inst);
        assert_eq!(bids.bids, inst.utilities);
        assert_eq!(bids.positive_bidders(0), vec![0, 1]);
        assert_eq!(bids.positive_bidders(1), vec![1]);
    }

    #[test]
    fn misreport_replaces_single_row() {
        let inst = sample();
        let bids =
            BidProfile::with_misreport(&inst, 1, vec![rat_int(2), rat_int(1)]).unwrap();
        assert_eq!(bids.bids[0], inst.utilities[0]);
        assert_eq!(bids.bids[1], vec![rat_int(2), rat_int(1)]);
        // A misreport may remove every positive bid for an item.
        let bids = BidProfile::with_misreport(&inst, 1, vec![rat_int(1), rat_int(0)]).unwrap();
        assert_eq!(bids.positive_bidders(1), Vec::<usize>::new());
    }
}
