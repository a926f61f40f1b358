//! Linear and semilinear subsets of ℕ^ℓ, and the coordinate-fixing
//! updates the isolation search performs on them.

mod grammar;
mod parikh;

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

pub use grammar::{
    validate_letter_bounded, Grammar, GrammarError, LetterBoundedGrammar, Production, Symbol,
};
pub use parikh::{parikh_image, parikh_image_with, ParikhOptions, DEFAULT_MAX_NONTERMINALS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemilinearError {
    #[error("vector of length {found} in a set of dimension {expected}")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("grammar is not letter-bounded for the given order: counterexample '{}'", .0.join(""))]
    NotLetterBounded(Vec<String>),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
}

/// `{ base + Σ tᵢ·periodᵢ : tᵢ ∈ ℕ }`
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearSet {
    base: Vec<u64>,
    periods: Vec<Vec<u64>>,
}

impl LinearSet {
    /// Zero periods are dropped.
    pub fn new(base: Vec<u64>, periods: Vec<Vec<u64>>) -> Result<Self, SemilinearError> {
        let dim = base.len();
        if let Some(p) = periods.iter().find(|p| p.len() != dim) {
            return Err(SemilinearError::Dimension {
                expected: dim,
                found: p.len(),
            });
        }
        let periods = periods
            .into_iter()
            .filter(|p| p.iter().any(|&x| x != 0))
            .collect();
        Ok(Self { base, periods })
    }

    pub fn point(base: Vec<u64>) -> Self {
        Self {
            base,
            periods: Vec::new(),
        }
    }

    /// All of ℕ^dim.
    pub fn full(dim: usize) -> Self {
        let periods = (0..dim)
            .map(|i| (0..dim).map(|j| u64::from(i == j)).collect())
            .collect();
        Self {
            base: vec![0; dim],
            periods,
        }
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn base(&self) -> &[u64] {
        &self.base
    }

    pub fn periods(&self) -> &[Vec<u64>] {
        &self.periods
    }

    /// `base + Σ params[i]·periods[i]`
    pub fn point_at(&self, params: &[u64]) -> Vec<u64> {
        let mut x = self.base.clone();
        for (p, &t) in self.periods.iter().zip(params) {
            for (xi, pi) in x.iter_mut().zip(p) {
                *xi += t * pi;
            }
        }
        x
    }

    pub fn contains(&self, x: &[u64]) -> bool {
        if x.len() != self.dim() || x.iter().zip(&self.base).any(|(a, b)| a < b) {
            return false;
        }
        let rest: Vec<u64> = x.iter().zip(&self.base).map(|(a, b)| a - b).collect();
        solve_nonneg(&self.periods, rest)
    }

    /// Every point with all coordinates ≤ `bound`.
    fn points_within(&self, bound: u64, out: &mut BTreeSet<Vec<u64>>) {
        if self.base.iter().any(|&b| b > bound) {
            return;
        }
        fn go(periods: &[Vec<u64>], x: &mut Vec<u64>, bound: u64, out: &mut BTreeSet<Vec<u64>>) {
            let Some((p, rest)) = periods.split_first() else {
                out.insert(x.clone());
                return;
            };
            let saved = x.clone();
            loop {
                go(rest, x, bound, out);
                if x.iter().zip(p).any(|(xi, pi)| xi + pi > bound) {
                    break;
                }
                for (xi, pi) in x.iter_mut().zip(p) {
                    *xi += pi;
                }
            }
            *x = saved;
        }
        let mut x = self.base.clone();
        go(&self.periods, &mut x, bound, out);
    }
}

impl fmt::Display for LinearSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.base)?;
        for p in &self.periods {
            write!(f, " + t·{p:?}")?;
        }
        Ok(())
    }
}

/// Does `target` lie in the monoid generated by `periods`?
fn solve_nonneg(periods: &[Vec<u64>], target: Vec<u64>) -> bool {
    fn go(periods: &[Vec<u64>], target: &mut [u64], seen: &mut HashSet<(usize, Vec<u64>)>) -> bool {
        if target.iter().all(|&x| x == 0) {
            return true;
        }
        let Some((p, rest)) = periods.split_first() else {
            return false;
        };
        if !seen.insert((periods.len(), target.to_vec())) {
            return false;
        }
        let max_t = p
            .iter()
            .zip(target.iter())
            .filter(|(pi, _)| **pi > 0)
            .map(|(pi, ti)| ti / pi)
            .min()
            .unwrap_or(0);
        for t in 0..=max_t {
            let mut next: Vec<u64> = target.to_vec();
            for (x, pi) in next.iter_mut().zip(p) {
                *x -= t * pi;
            }
            if go(rest, &mut next, seen) {
                return true;
            }
        }
        false
    }
    let mut target = target;
    go(periods, &mut target, &mut HashSet::new())
}

/// Finite union of linear sets of a common dimension; no components means the empty set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SemilinearSet {
    dim: usize,
    components: Vec<LinearSet>,
}

impl SemilinearSet {
    pub fn new(dim: usize, components: Vec<LinearSet>) -> Result<Self, SemilinearError> {
        if let Some(c) = components.iter().find(|c| c.dim() != dim) {
            return Err(SemilinearError::Dimension {
                expected: dim,
                found: c.dim(),
            });
        }
        Ok(Self { dim, components })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            components: Vec::new(),
        }
    }

    pub fn full(dim: usize) -> Self {
        Self {
            dim,
            components: vec![LinearSet::full(dim)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[LinearSet] {
        &self.components
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn contains(&self, x: &[u64]) -> bool {
        self.components.iter().any(|c| c.contains(x))
    }
}

impl fmt::Display for SemilinearSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return write!(f, "∅");
        }
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "{{{c}}}")?;
        }
        Ok(())
    }
}

/// Support of a vector: the indices of its nonzero coordinates.
fn support(v: &[u64]) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, &x)| x != 0)
        .map(|(i, _)| i)
        .collect()
}

pub fn is_stratified_linear(q: &LinearSet) -> bool {
    let supports: Vec<Vec<usize>> = q.periods.iter().map(|p| support(p)).collect();
    if supports.iter().any(|s| s.len() > 2) {
        return false;
    }
    let pairs: Vec<(usize, usize)> = supports
        .iter()
        .filter(|s| s.len() == 2)
        .map(|s| (s[0], s[1]))
        .collect();
    for (a, &(i1, i2)) in pairs.iter().enumerate() {
        for &(j1, j2) in &pairs[a + 1..] {
            if (i1 < j1 && j1 < i2 && i2 < j2) || (j1 < i1 && i1 < j2 && j2 < i2) {
                return false;
            }
        }
    }
    true
}

/// Every period has at most two nonzero coordinates and no two
/// two-coordinate supports interlace.
pub fn is_stratified(s: &SemilinearSet) -> bool {
    s.components.iter().all(is_stratified_linear)
}

/// Indices `j ∈ pending` touched by at least one period.
pub fn free_indices(q: &LinearSet, pending: &BTreeSet<usize>) -> BTreeSet<usize> {
    pending
        .iter()
        .copied()
        .filter(|&j| q.periods.iter().any(|p| p[j] != 0))
        .collect()
}

/// Parameter values for the periods touching coordinate `j` that make
/// the `j`-th coordinate equal `value`.
///
/// Each returned vector lists values for the touching periods in their
/// original order; the first touching period is enumerated from its largest
/// feasible value downwards.
pub fn fix_coordinate_assignments(q: &LinearSet, j: usize, value: u64) -> Vec<Vec<u64>> {
    let Some(remaining) = value.checked_sub(q.base[j]) else {
        return Vec::new();
    };
    let coeffs: Vec<u64> = q
        .periods
        .iter()
        .map(|p| p[j])
        .filter(|&c| c != 0)
        .collect();
    let mut out = Vec::new();
    fn go(coeffs: &[u64], remaining: u64, acc: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        let Some((&c, rest)) = coeffs.split_first() else {
            if remaining == 0 {
                out.push(acc.clone());
            }
            return;
        };
        for t in (0..=remaining / c).rev() {
            acc.push(t);
            go(rest, remaining - t * c, acc, out);
            acc.pop();
        }
    }
    go(&coeffs, remaining, &mut Vec::new(), &mut out);
    out
}

/// Applies one assignment from [`fix_coordinate_assignments`]: the assigned
/// periods are folded into the base and dropped.
pub fn apply_assignment(q: &LinearSet, j: usize, assignment: &[u64]) -> LinearSet {
    let mut base = q.base.clone();
    let mut periods = Vec::new();
    let mut values = assignment.iter();
    for p in &q.periods {
        if p[j] != 0 {
            let t = *values.next().expect("one value per touching period");
            for (b, pi) in base.iter_mut().zip(p) {
                *b += t * pi;
            }
        } else {
            periods.push(p.clone());
        }
    }
    LinearSet { base, periods }
}

/// Every rebasing of `q` whose `j`-th coordinate is pinned to `value`.
/// Empty when no parameter choice reaches `value`.
pub fn fix_coordinate(q: &LinearSet, j: usize, value: u64) -> Vec<LinearSet> {
    fix_coordinate_assignments(q, j, value)
        .iter()
        .map(|a| apply_assignment(q, j, a))
        .collect()
}

/// Every point of `s` with all coordinates ≤ `bound`, once each, lexicographically.
pub fn enumerate_points(s: &SemilinearSet, bound: u64) -> impl Iterator<Item = Vec<u64>> {
    let mut out = BTreeSet::new();
    for c in &s.components {
        c.points_within(bound, &mut out);
    }
    out.into_iter()
}
