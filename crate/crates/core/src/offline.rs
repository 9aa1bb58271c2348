//! Offline optima and doubly stochastic decomposition.
//!
//! The offline benchmarks know the whole instance in advance: the
//! largest number of agents that can simultaneously receive a liked
//! item (a maximum bipartite matching), the best utilitarian welfare
//! (sum of per-item maxima), and the best egalitarian welfare (a
//! bottleneck perfect matching when `m == n`, a capped brute force
//! otherwise).

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::rational::{format_pq, Rational};
use num::traits::{One, Signed, Zero};

/// Caps for the brute-force egalitarian optimum (`n^m` assignments).
const EW_BRUTE_MAX_N: usize = 6;
const EW_BRUTE_MAX_M: usize = 8;

/// Maximum bipartite matching by augmenting paths. `likes(i, j)` says
/// whether left vertex `i` may be matched to right vertex `j`.
/// Returns the matched right vertex per left vertex. Deterministic:
/// left vertices are processed in index order and edges are tried in
/// right-index order.
pub fn max_matching<F: Fn(usize, usize) -> bool>(
    left: usize,
    right: usize,
    likes: F,
) -> Vec<Option<usize>> {
    let mut right_to_left: Vec<Option<usize>> = vec![None; right];

    fn augment<F: Fn(usize, usize) -> bool>(
        i: usize,
        right: usize,
        likes: &F,
        right_to_left: &mut Vec<Option<usize>>,
        visited: &mut Vec<bool>,
    ) -> bool {
        for j in 0..right {
            if likes(i, j) && !visited[j] {
                visited[j] = true;
                if right_to_left[j].is_none()
                    || augment(right_to_left[j].unwrap(), right, likes, right_to_left, visited)
                {
                    right_to_left[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }

    for i in 0..left {
        let mut visited = vec![false; right];
        augment(i, right, &likes, &mut right_to_left, &mut visited);
    }

    let mut left_to_right = vec![None; left];
    for (j, owner) in right_to_left.iter().enumerate() {
        if let Some(i) = owner {
            left_to_right[*i] = Some(j);
        }
    }
    left_to_right
}

/// The offline optimum for expected matching size: the size of a
/// maximum matching between agents and items they like, with the
/// matching itself as witness (`witness[i]` is agent `i`'s item).
pub fn offline_es(inst: &Instance) -> (usize, Vec<Option<usize>>) {
    let witness = max_matching(inst.n, inst.m, |i, j| !inst.utility(i, j).is_zero());
    let size = witness.iter().filter(|w| w.is_some()).count();
    (size, witness)
}

/// True when every agent can simultaneously receive an item they like.
pub fn has_perfect_matching(inst: &Instance) -> bool {
    offline_es(inst).0 == inst.n
}

/// The offline optimum for utilitarian welfare: every item goes to an
/// agent valuing it most. Returns the total and the witness agent per
/// item (lowest index among the maximisers).
pub fn offline_uw(inst: &Instance) -> (Rational, Vec<usize>) {
    let mut total = Rational::zero();
    let mut witness = Vec::with_capacity(inst.m);
    for j in 0..inst.m {
        let best = (0..inst.n)
            .max_by(|&a, &b| {
                inst.utility(a, j)
                    .cmp(inst.utility(b, j))
                    .then(b.cmp(&a)) // prefer the lower index on ties
            })
            .expect("instance has at least one agent");
        total += inst.utility(best, j);
        witness.push(best);
    }
    (total, witness)
}

/// The offline optimum for egalitarian welfare together with a witness
/// allocation (`witness[j]` is the agent receiving item `j`).
///
/// With `m == n` this is the perfect allocation maximising the minimum
/// utility, found by a bottleneck search over utility thresholds (zero,
/// with every item on the first agent as witness, when no perfect
/// matching over liked items exists); the unmatched regime falls back
/// to a brute force over all complete allocations, capped at `n <= 6`,
/// `m <= 8`.
pub fn offline_ew(inst: &Instance) -> Result<(Rational, Vec<usize>)> {
    if inst.m == inst.n {
        bottleneck_assignment(inst)
    } else {
        brute_force_ew(inst)
    }
}

fn bottleneck_assignment(inst: &Instance) -> Result<(Rational, Vec<usize>)> {
    let mut values: Vec<Rational> = inst
        .utilities
        .iter()
        .flatten()
        .filter(|u| !u.is_zero())
        .cloned()
        .collect();
    values.sort();
    values.dedup();

    let feasible = |threshold: &Rational| -> bool {
        max_matching(inst.n, inst.m, |i, j| inst.utility(i, j) >= threshold)
            .iter()
            .all(Option::is_some)
    };

    if !feasible(&values[0]) {
        // Someone starves in every perfect allocation; any complete
        // allocation witnesses the zero optimum, `[0, 0, …]` being the
        // lexicographically smallest.
        return Ok((Rational::zero(), vec![0; inst.m]));
    }
    // Largest threshold admitting a perfect matching.
    let (mut lo, mut hi) = (0usize, values.len() - 1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if feasible(&values[mid]) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let threshold = values[lo].clone();
    // Lexicographically smallest witness: each item in turn takes the
    // lowest-indexed agent that keeps the rest perfectly matchable.
    let witness = lex_min_matching(inst.m, inst.n, |j, i| inst.utility(i, j) >= &threshold)
        .expect("feasibility verified");
    Ok((threshold, witness))
}

fn brute_force_ew(inst: &Instance) -> Result<(Rational, Vec<usize>)> {
    if inst.n > EW_BRUTE_MAX_N || inst.m > EW_BRUTE_MAX_M {
        return Err(Error::SizeCapExceeded(format!(
            "egalitarian brute force supports n <= {EW_BRUTE_MAX_N} and m <= {EW_BRUTE_MAX_M}, got n = {}, m = {}",
            inst.n, inst.m
        )));
    }
    let mut assignment = vec![0usize; inst.m];
    let mut best: Option<(Rational, Vec<usize>)> = None;
    loop {
        let mut totals = vec![Rational::zero(); inst.n];
        for (j, &agent) in assignment.iter().enumerate() {
            totals[agent] += inst.utility(agent, j);
        }
        let min = totals.iter().min().cloned().expect("non-empty");
        // Strict improvement keeps the lexicographically smallest witness.
        if best.as_ref().is_none_or(|(b, _)| min > *b) {
            best = Some((min, assignment.clone()));
        }
        // Advance the assignment vector like an odometer.
        let mut pos = inst.m;
        loop {
            if pos == 0 {
                let (value, witness) = best.expect("at least one assignment");
                return Ok((value, witness));
            }
            pos -= 1;
            assignment[pos] += 1;
            if assignment[pos] < inst.n {
                break;
            }
            assignment[pos] = 0;
        }
    }
}

/// True when `p` is a square matrix of non-negative entries whose rows
/// and columns each sum to exactly one.
pub fn is_bistochastic(p: &[Vec<Rational>]) -> bool {
    let n = p.len();
    if n == 0 || p.iter().any(|row| row.len() != n) {
        return false;
    }
    for row in p {
        if row.iter().any(Rational::is_negative) {
            return false;
        }
        if !row.iter().fold(Rational::zero(), |a, v| a + v).is_one() {
            return false;
        }
    }
    for j in 0..n {
        if !(0..n).fold(Rational::zero(), |a, i| a + &p[i][j]).is_one() {
            return false;
        }
    }
    true
}

/// Writes a bistochastic matrix as an exact convex combination of
/// permutation matrices (`perm[i]` is the column assigned to row `i`),
/// using at most `n^2 - 2n + 2` terms.
///
/// Permutations are peeled greedily from the positive-support graph
/// (lexicographically smallest matching first, removing the minimum
/// remaining weight); if the peel produces more terms than the bound,
/// an exact Caratheodory reduction merges them back below it.
pub fn birkhoff_decompose(p: &[Vec<Rational>]) -> Result<Vec<(Rational, Vec<usize>)>> {
    let n = p.len();
    if !is_bistochastic(p) {
        return Err(Error::NotBistochastic(
            "rows and columns must each sum to one".into(),
        ));
    }
    let mut remaining: Vec<Vec<Rational>> = p.to_vec();
    let mut scale = Rational::one();
    let mut terms: Vec<(Rational, Vec<usize>)> = Vec::new();

    while !scale.is_zero() {
        let perm = lex_min_matching(n, n, |i, j| !remaining[i][j].is_zero()).ok_or_else(|| {
            Error::NotBistochastic("support graph lost its perfect matching".into())
        })?;
        let weight = perm
            .iter()
            .enumerate()
            .map(|(i, &j)| remaining[i][j].clone())
            .min()
            .expect("non-empty permutation");
        for (i, &j) in perm.iter().enumerate() {
            remaining[i][j] -= &weight;
        }
        scale -= &weight;
        terms.push((weight, perm));
    }

    let bound = birkhoff_term_bound(n);
    while terms.len() > bound {
        reduce_convex_combination(n, &mut terms);
    }
    Ok(terms)
}

/// The Caratheodory bound on the number of permutation terms.
pub fn birkhoff_term_bound(n: usize) -> usize {
    n * n - 2 * n + 2
}

/// Lexicographically smallest perfect matching of `rows` left vertices
/// into `cols` right vertices: row 0 takes the smallest column that
/// keeps the remaining rows matchable, then row 1, and so on. Returns
/// the column per row, or `None` when no perfect matching exists.
pub fn lex_min_matching<F: Fn(usize, usize) -> bool>(
    rows: usize,
    cols: usize,
    likes: F,
) -> Option<Vec<usize>> {
    let mut chosen: Vec<usize> = Vec::with_capacity(rows);
    let mut used = vec![false; cols];
    for row in 0..rows {
        let mut found = false;
        for col in 0..cols {
            if used[col] || !likes(row, col) {
                continue;
            }
            // The remaining rows must still be matchable if we commit.
            used[col] = true;
            let rest = max_matching(rows - row - 1, cols, |i, j| {
                !used[j] && likes(row + 1 + i, j)
            });
            if rest.iter().all(Option::is_some) {
                chosen.push(col);
                found = true;
                break;
            }
            used[col] = false;
        }
        if !found {
            return None;
        }
    }
    Some(chosen)
}

/// Removes one term from a convex combination of permutation matrices
/// without changing the combined matrix, exploiting an affine
/// dependency (which must exist above the Caratheodory bound).
fn reduce_convex_combination(n: usize, terms: &mut Vec<(Rational, Vec<usize>)>) {
    let cols = terms.len();
    // One row per matrix cell plus the affine row of ones.
    let mut system: Vec<Vec<Rational>> = vec![vec![Rational::zero(); cols]; n * n + 1];
    for (t, (_, perm)) in terms.iter().enumerate() {
        for (i, &j) in perm.iter().enumerate() {
            system[i * n + j][t] = Rational::one();
        }
        system[n * n][t] = Rational::one();
    }
    let mut lambda = kernel_vector(&system)
        .expect("terms beyond the Caratheodory bound are affinely dependent");
    if !lambda.iter().any(|l| l.is_positive()) {
        for l in &mut lambda {
            *l = -l.clone();
        }
    }
    let theta = terms
        .iter()
        .zip(&lambda)
        .filter(|(_, l)| l.is_positive())
        .map(|((w, _), l)| w / l)
        .min()
        .expect("some positive multiplier");
    for ((w, _), l) in terms.iter_mut().zip(&lambda) {
        *w -= &theta * l;
    }
    terms.retain(|(w, _)| !w.is_zero());
}

/// A nonzero rational solution of `a x = 0`, if one exists.
fn kernel_vector(a: &[Vec<Rational>]) -> Option<Vec<Rational>> {
    let rows = a.len();
    let cols = a.first()?.len();
    let mut mat = a.to_vec();
    let mut pivot_row_of_col: Vec<Option<usize>> = vec![None; cols];
    let mut next_row = 0;
    for c in 0..cols {
        if next_row == rows {
            break;
        }
        let Some(pr) = (next_row..rows).find(|&r| !mat[r][c].is_zero()) else {
            continue;
        };
        mat.swap(next_row, pr);
        let inv = mat[next_row][c].clone();
        for v in &mut mat[next_row] {
            *v = &*v / &inv;
        }
        for r in 0..rows {
            if r != next_row && !mat[r][c].is_zero() {
                let f = mat[r][c].clone();
                for cc in 0..cols {
                    let delta = &f * &mat[next_row][cc];
                    mat[r][cc] -= delta;
                }
            }
        }
        pivot_row_of_col[c] = Some(next_row);
        next_row += 1;
    }
    let free = (0..cols).find(|&c| pivot_row_of_col[c].is_none())?;
    let mut x = vec![Rational::zero(); cols];
    x[free] = Rational::one();
    for c in 0..cols {
        if let Some(pr) = pivot_row_of_col[c] {
            x[c] = -mat[pr][free].clone();
        }
    }
    Some(x)
}

/// Recomposes a decomposition back into a matrix (for verification).
pub fn recompose(n: usize, terms: &[(Rational, Vec<usize>)]) -> Vec<Vec<Rational>> {
    let mut out = vec![vec![Rational::zero(); n]; n];
    for (w, perm) in terms {
        for (i, &j) in perm.iter().enumerate() {
            out[i][j] += w;
        }
    }
    out
}

/// Formats a decomposition compactly for reports.
pub fn format_decomposition(terms: &[(Rational, Vec<usize>)]) -> String {
    terms
        .iter()
        .map(|(w, perm)| {
            let cols: Vec<String> = perm.iter().map(usize::to_string).collect();
            format!("{} * ({})", format_pq(w), cols.join(","))
        })
        .collect::<Vec<_>>()
        .join(" + ")
}
