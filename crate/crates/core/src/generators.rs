//! Instance families: triangular structures, the adversarial family
//! for uniform-splitting mechanisms, the worked 2x2 fixtures,
//! exhaustive binary enumeration, and seeded random instances.

use crate::error::{Error, Result};
use crate::instance::{Instance, UtilityRegime};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Largest `n * m` accepted by [`enumerate_binary`].
pub const ENUMERATE_MAX_CELLS: usize = 12;

/// Agent `i` likes the first `n - i` items (so agent 0 likes all of
/// them and agent `n-1` likes only the first). The unique perfect
/// allocation sends item `j` to agent `n-1-j`.
pub fn upper_triangular(n: usize) -> Instance {
    assert!(n >= 1, "need at least one agent");
    let rows: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| i64::from(j < n - i)).collect())
        .collect();
    Instance::from_integer_rows(&format!("upper-triangular-n{n}"), &rows)
        .expect("triangular structure is always valid")
}

/// Agent `i` likes the first `i + 1` items (mirror image of
/// [`upper_triangular`]: `lower[i][j] = upper[n-1-i][j]`).
pub fn lower_triangular(n: usize) -> Instance {
    assert!(n >= 1, "need at least one agent");
    let rows: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| i64::from(j <= i)).collect())
        .collect();
    Instance::from_integer_rows(&format!("lower-triangular-n{n}"), &rows)
        .expect("triangular structure is always valid")
}

/// The adversarial family on which uniform-splitting mechanisms cannot
/// beat half the agents in expectation. `n` must be even. Agents split
/// into targets `a_0..a_{n/2-1}` and decoys `a_{n/2}..a_{n-1}`:
///
/// * item `t < n/2` is liked by every target plus the single decoy
///   `a_{n/2+t}`;
/// * item `n/2 + t` is liked only by target `a_t`.
///
/// Every target is eventually served by its private late item, so the
/// early rounds only decide how many decoys win their one chance
/// against the full crowd of targets; splitting uniformly serves about
/// `n/2 + O(log n)` agents although a perfect allocation serves `n`.
pub fn like_adversary(n: usize) -> Result<Instance> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::Unsupported(format!(
            "the adversarial family needs an even number of agents >= 2, got {n}"
        )));
    }
    let half = n / 2;
    let mut rows = vec![vec![0i64; n]; n];
    for t in 0..half {
        for target in 0..half {
            rows[target][t] = 1; // every target likes every early item
        }
        rows[half + t][t] = 1; // one decoy per early item
        rows[t][half + t] = 1; // each target's private late item
    }
    Instance::from_integer_rows(&format!("like-adversary-n{n}"), &rows)
}

/// Optional parameters for [`example_fixture`].
#[derive(Clone, Copy, Debug, Default)]
pub struct FixtureParams {
    /// Number of agents for the triangular fixture (id 1); default 3.
    pub n: Option<usize>,
    /// The large utility in fixture 3; default 100.
    pub u: Option<i64>,
}

/// The five worked fixtures used throughout the test and regression
/// suites. Fixture 1 is the upper-triangular family (size `params.n`);
/// fixtures 2, 4, and 5 are literal 2x2 matrices; fixture 3 is
/// `[[0, 1], [1, u]]` with `u = params.u`.
pub fn example_fixture(id: usize, params: FixtureParams) -> Result<Instance> {
    match id {
        1 => {
            let n = params.n.unwrap_or(3);
            let mut inst = upper_triangular(n);
            inst.name = Some(format!("example-1-n{n}"));
            Ok(inst)
        }
        2 => Instance::from_integer_rows("example-2", &[vec![2, 0], vec![1, 2]]),
        3 => {
            let u = params.u.unwrap_or(100);
            if u <= 0 {
                return Err(Error::Unsupported(format!(
                    "fixture 3 needs a positive high utility, got {u}"
                )));
            }
            Instance::from_integer_rows(&format!("example-3-u{u}"), &[vec![0, 1], vec![1, u]])
        }
        4 => Instance::from_integer_rows("example-4", &[vec![2, 2], vec![1, 1]]),
        5 => Instance::from_integer_rows("example-5", &[vec![2, 1], vec![1, 2]]),
        other => Err(Error::Unsupported(format!(
            "fixture ids run from 1 to 5, got {other}"
        ))),
    }
}

/// Every instance with utilities in `{0, 1, …, max_value}` and no
/// all-zero row or column, for exhaustive small-scale checks with
/// non-binary utilities. The enumeration space `(max_value+1)^(n*m)`
/// is capped at 100,000 matrices.
pub fn enumerate_with_values(n: usize, m: usize, max_value: i64) -> Result<Vec<Instance>> {
    const SPACE_CAP: u128 = 100_000;
    if n == 0 || m == 0 || max_value < 1 {
        return Err(Error::Unsupported(format!(
            "value enumeration needs n, m >= 1 and max_value >= 1, got {n}x{m} up to {max_value}"
        )));
    }
    let base = max_value as u128 + 1;
    match base.checked_pow((n * m) as u32) {
        Some(space) if space <= SPACE_CAP => {}
        _ => {
            return Err(Error::SizeCapExceeded(format!(
                "value enumeration over {n}x{m} matrices with entries 0..={max_value} exceeds {SPACE_CAP}"
            )));
        }
    }
    let mut out = Vec::new();
    let mut cells = vec![0i64; n * m];
    let mut index = 0usize;
    loop {
        let rows: Vec<Vec<i64>> = (0..n)
            .map(|i| cells[i * m..(i + 1) * m].to_vec())
            .collect();
        let rows_ok = rows.iter().all(|r| r.iter().any(|&v| v > 0));
        let cols_ok = (0..m).all(|j| (0..n).any(|i| rows[i][j] > 0));
        if rows_ok && cols_ok {
            out.push(Instance::from_integer_rows(
                &format!("values{max_value}-{n}x{m}-{index}"),
                &rows,
            )?);
        }
        index += 1;
        let mut pos = 0;
        while pos < cells.len() {
            cells[pos] += 1;
            if cells[pos] <= max_value {
                break;
            }
            cells[pos] = 0;
            pos += 1;
        }
        if pos == cells.len() {
            break;
        }
    }
    Ok(out)
}

/// Every 0/1 utility matrix of the given shape in which each agent
/// likes at least one item and each item is liked by at least one
/// agent, in mask order, with the canonical arrival order. Capped at
/// `n * m <= 12` cells.
pub fn enumerate_binary(n: usize, m: usize) -> Result<Vec<Instance>> {
    if n == 0 || m == 0 || n * m > ENUMERATE_MAX_CELLS {
        return Err(Error::SizeCapExceeded(format!(
            "binary enumeration supports 1 <= n*m <= {ENUMERATE_MAX_CELLS}, got {n}x{m}"
        )));
    }
    let cells = n * m;
    let mut out = Vec::new();
    for mask in 0u32..(1 << cells) {
        let rows: Vec<Vec<i64>> = (0..n)
            .map(|i| (0..m).map(|j| i64::from(mask >> (i * m + j) & 1 == 1)).collect())
            .collect();
        let rows_ok = rows.iter().all(|r| r.iter().any(|&v| v == 1));
        let cols_ok = (0..m).all(|j| (0..n).any(|i| rows[i][j] == 1));
        if rows_ok && cols_ok {
            out.push(Instance::from_integer_rows(
                &format!("binary-{n}x{m}-{mask:0>width$b}", width = cells),
                &rows,
            )?);
        }
    }
    Ok(out)
}

/// A seeded random instance. Binary regime: fair-coin cells, then empty
/// rows and columns are repaired by switching on one uniformly chosen
/// cell each. General regime: integer utilities uniform in `0..=4`,
/// repaired to `1..=4`. Identical seeds yield identical instances.
pub fn random_instance(n: usize, m: usize, regime: UtilityRegime, seed: u64) -> Instance {
    assert!(n >= 1 && m >= 1, "need at least one agent and one item");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = vec![vec![0i64; m]; n];
    for row in &mut rows {
        for cell in row.iter_mut() {
            *cell = match regime {
                UtilityRegime::Binary => i64::from(rng.gen::<bool>()),
                UtilityRegime::General => rng.gen_range(0..=4),
            };
        }
    }
    let positive = |rng: &mut ChaCha8Rng| match regime {
        UtilityRegime::Binary => 1,
        UtilityRegime::General => rng.gen_range(1..=4),
    };
    for i in 0..n {
        if rows[i].iter().all(|&v| v == 0) {
            let j = rng.gen_range(0..m);
            rows[i][j] = positive(&mut rng);
        }
    }
    for j in 0..m {
        if (0..n).all(|i| rows[i][j] == 0) {
            let i = rng.gen_range(0..n);
            rows[i][j] = positive(&mut rng);
        }
    }
    Instance::from_integer_rows(
        &format!("random-{regime}-{n}x{m}-s{seed}"),
        &rows,
    )
    .expect("repair guarantees both liking conditions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offline::{has_perfect_matching, offline_es};
    use crate::rational::rat_int;
    use itertools::Itertools;
    use num::traits::Zero;

    fn rows_i64(inst: &Instance) -> Vec<Vec<i64>> {
        inst.utilities
            .iter()
            .map(|r| {
                r.iter()
                    .map(|u| if u.is_zero() { 0 } else { 1 })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn triangular_shapes() {
        assert_eq!(rows_i64(&upper_triangular(1)), vec![vec![1]]);
        assert_eq!(rows_i64(&upper_triangular(2)), vec![vec![1, 1], vec![1, 0]]);
        assert_eq!(
            rows_i64(&upper_triangular(3)),
            vec![vec![1, 1, 1], vec![1, 1, 0], vec![1, 0, 0]]
        );
        assert_eq!(rows_i64(&lower_triangular(2)), vec![vec![1, 0], vec![1, 1]]);
        // The two families are mirror images through the agent order.
        let (up, low) = (upper_triangular(5), lower_triangular(5));
        for i in 0..5 {
            assert_eq!(low.utilities[i], up.utilities[4 - i]);
        }
    }

    #[test]
    fn triangular_has_unique_perfect_allocation() {
        for n in 1..=6 {
            let inst = upper_triangular(n);
            let matchings = (0..n)
                .permutations(n)
                .filter(|perm| {
                    perm.iter()
                        .enumerate()
                        .all(|(i, &j)| !inst.utility(i, j).is_zero())
                })
                .count();
            assert_eq!(matchings, 1, "n = {n}");
            assert_eq!(offline_es(&inst).1, (0..n).map(|i| Some(n - 1 - i)).collect::<Vec<_>>());
        }
    }

    #[test]
    fn adversary_structure_and_matching() {
        assert_eq!(rows_i64(&like_adversary(2).unwrap()), vec![vec![1, 1], vec![1, 0]]);
        assert_eq!(
            rows_i64(&like_adversary(4).unwrap()),
            vec![
                vec![1, 1, 1, 0],
                vec![1, 1, 0, 1],
                vec![1, 0, 0, 0],
                vec![0, 1, 0, 0],
            ]
        );
        for n in [2, 4, 6, 8, 100] {
            let inst = like_adversary(n).unwrap();
            assert!(has_perfect_matching(&inst), "n = {n}");
            // Early items are liked by all targets, late ones by one agent.
            let half = n / 2;
            for t in 0..half {
                assert_eq!(inst.likers(t).len(), half + 1);
                assert_eq!(inst.likers(half + t), vec![t]);
            }
        }
        assert!(like_adversary(3).is_err());
        assert!(like_adversary(0).is_err());
    }

    #[test]
    fn fixtures_match_their_matrices() {
        let two = example_fixture(2, FixtureParams::default()).unwrap();
        assert_eq!(rows_i64(&two), vec![vec![1, 0], vec![1, 1]]);
        assert_eq!(two.utility(0, 0), &rat_int(2));
        let three = example_fixture(3, FixtureParams::default()).unwrap();
        assert_eq!(three.utility(1, 1), &rat_int(100));
        let three = example_fixture(3, FixtureParams { u: Some(7), ..Default::default() }).unwrap();
        assert_eq!(three.utility(1, 1), &rat_int(7));
        let four = example_fixture(4, FixtureParams::default()).unwrap();
        assert_eq!(four.utility(0, 1), &rat_int(2));
        let five = example_fixture(5, FixtureParams::default()).unwrap();
        assert_eq!(five.utility(1, 1), &rat_int(2));
        let one = example_fixture(1, FixtureParams { n: Some(4), ..Default::default() }).unwrap();
        assert_eq!(one.n, 4);
        assert!(example_fixture(6, FixtureParams::default()).is_err());
        assert!(example_fixture(0, FixtureParams::default()).is_err());
    }

    #[test]
    fn value_enumeration_counts_and_validity() {
        // Inclusion-exclusion over empty rows/columns of 3^(n*m) grids.
        let small = enumerate_with_values(2, 2, 2).unwrap();
        assert_eq!(small.len(), 56);
        let wide = enumerate_with_values(2, 3, 2).unwrap();
        assert_eq!(wide.len(), 496);
        for inst in small.iter().chain(wide.iter()) {
            assert!(Instance::new(None, inst.utilities.clone(), None).is_ok());
        }
        // Binary special case agrees with the dedicated enumerator.
        assert_eq!(
            enumerate_with_values(2, 2, 1).unwrap().len(),
            enumerate_binary(2, 2).unwrap().len()
        );
        assert!(enumerate_with_values(3, 3, 9).is_err());
        assert!(enumerate_with_values(2, 2, 0).is_err());
    }

    #[test]
    fn enumeration_counts_and_validity() {
        assert_eq!(enumerate_binary(1, 1).unwrap().len(), 1);
        assert_eq!(enumerate_binary(2, 2).unwrap().len(), 7);
        let all = enumerate_binary(3, 3).unwrap();
        // Inclusion-exclusion over empty rows and columns.
        assert_eq!(all.len(), 265);
        for inst in &all {
            assert!(Instance::new(None, inst.utilities.clone(), None).is_ok());
        }
        assert!(enumerate_binary(4, 4).is_err());
        assert!(enumerate_binary(0, 3).is_err());
    }

    #[test]
    fn random_instances_are_reproducible_and_valid() {
        for seed in 0..50 {
            let a = random_instance(3, 4, UtilityRegime::Binary, seed);
            let b = random_instance(3, 4, UtilityRegime::Binary, seed);
            assert_eq!(a, b);
            assert!(a.is_binary());
            let g = random_instance(4, 5, UtilityRegime::General, seed);
            assert!(Instance::new(None, g.utilities.clone(), None).is_ok());
        }
        let a = random_instance(3, 4, UtilityRegime::Binary, 1);
        let b = random_instance(3, 4, UtilityRegime::Binary, 2);
        assert_ne!(a, b);
    }

    #[test]
    fn random_instance_golden_seed() {
        // Pinned output so accidental generator changes are caught.
        let inst = random_instance(2, 3, UtilityRegime::Binary, 42);
        let cells: Vec<i64> = inst
            .utilities
            .iter()
            .flatten()
            .map(|u| if u.is_zero() { 0 } else { 1 })
            .collect();
        assert_eq!(cells.len(), 6);
        assert_eq!(inst.name.as_deref(), Some("random-binary-2x3-s42"));
        // The exact pattern is pinned below (verified once, then frozen).
        assert_eq!(cells, golden_binary_2x3_seed42());
    }

    fn golden_binary_2x3_seed42() -> Vec<i64> {
        vec![0, 1, 0, 1, 1, 1]
    }
}
