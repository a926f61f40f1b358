//! The isolation search.
//!
//! Each linear component of the language is explored as a tree. At a node the
//! coordinates that no remaining period touches are pinned to the base; the
//! others (the free set `R`) are either driven to infinity together, which
//! yields finitely many limit values (one per residue class of the period
//! parameters modulo `W = lcm D_j`), or one of them stays below a constant
//! `C`, in which case it is fixed to each value in `[0, C)` and the search
//! recurses. `C` is the first exponent at which the summed decay bounds of
//! the free letters fall to half the gap between `λ` and the nearest limit
//! value; past it every value stays on the same side of `λ` as its limit.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::exactmath::{lcm_u64, rat_int, Rat, RatMatrix};
use crate::semilinear::{apply_assignment, fix_coordinate_assignments, free_indices, LinearSet, SemilinearSet};
use crate::stochastic::{ExponentAssignment, LimitError, LimitSystem, Pfa, DEFAULT_DECAY_CEILING};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("cutpoint {0} is outside [0, 1]")]
    LambdaOutOfRange(Rat),
    #[error("language has dimension {language} but the automaton has {letters} letters")]
    DimensionMismatch { letters: usize, language: usize },
}

/// A cutpoint question: is `lambda` isolated for `pfa` on `language`?
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pfa: Pfa,
    language: SemilinearSet,
    lambda: Rat,
}

impl Problem {
    pub fn new(pfa: Pfa, language: SemilinearSet, lambda: Rat) -> Result<Self, ProblemError> {
        if lambda.is_negative() || lambda > rat_int(1) {
            return Err(ProblemError::LambdaOutOfRange(lambda));
        }
        if language.dim() != pfa.letter_count() {
            return Err(ProblemError::DimensionMismatch {
                letters: pfa.letter_count(),
                language: language.dim(),
            });
        }
        Ok(Self {
            pfa,
            language,
            lambda,
        })
    }

    pub fn pfa(&self) -> &Pfa {
        &self.pfa
    }

    pub fn language(&self) -> &SemilinearSet {
        &self.language
    }

    pub fn lambda(&self) -> &Rat {
        &self.lambda
    }

    pub fn with_lambda(&self, lambda: Rat) -> Result<Self, ProblemError> {
        Self::new(self.pfa.clone(), self.language.clone(), lambda)
    }
}

/// A family of language points whose values converge to `value`.
///
/// `assignment` fixes some parameters of component `component` (one entry
/// per period of the original component); the unfixed parameters run
/// through `residues[i] + modulus·m` as `m → ∞`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LimitWitness {
    pub component: usize,
    pub assignment: Vec<Option<u64>>,
    pub residues: Vec<u64>,
    pub modulus: u64,
    pub value: Rat,
}

impl LimitWitness {
    /// The rebased linear set the family lives in; `None` if the witness does
    /// not fit the language.
    pub fn family_set(&self, language: &SemilinearSet) -> Option<LinearSet> {
        let comp = language.components().get(self.component)?;
        if self.assignment.len() != comp.periods().len() {
            return None;
        }
        let mut base = comp.base().to_vec();
        let mut periods = Vec::new();
        for (p, a) in comp.periods().iter().zip(&self.assignment) {
            match a {
                Some(t) => {
                    for (b, pi) in base.iter_mut().zip(p) {
                        *b += t * pi;
                    }
                }
                None => periods.push(p.clone()),
            }
        }
        if periods.len() != self.residues.len() {
            return None;
        }
        LinearSet::new(base, periods).ok()
    }

    /// The `m`-th point of the family.
    pub fn point(&self, set: &LinearSet, m: u64) -> Vec<u64> {
        let params: Vec<u64> = self.residues.iter().map(|r| r + self.modulus * m).collect();
        set.point_at(&params)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Witness {
    /// Exponent tuple whose value is exactly the cutpoint.
    Finite(Vec<u64>),
    Limit(LimitWitness),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Isolated { epsilon: Rat, note: Option<String> },
    NonIsolated(Witness),
}

impl Verdict {
    pub fn is_isolated(&self) -> bool {
        matches!(self, Verdict::Isolated { .. })
    }

    pub fn epsilon(&self) -> Option<&Rat> {
        match self {
            Verdict::Isolated { epsilon, .. } => Some(epsilon),
            Verdict::NonIsolated(_) => None,
        }
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Isolated { .. } => None,
            Verdict::NonIsolated(w) => Some(w),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("exploration budget of {budget} nodes exceeded")]
    Resource { budget: u64 },
    #[error(transparent)]
    Limit(#[from] LimitError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineOptions {
    pub node_budget: u64,
    /// Ceiling on `W^{#periods}` residue vectors per limit evaluation.
    pub residue_budget: u64,
    pub decay_ceiling: u64,
    pub parallel: bool,
    pub trace: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            node_budget: 1_000_000,
            residue_budget: 1_000_000,
            decay_ceiling: DEFAULT_DECAY_CEILING,
            parallel: false,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceOutcome {
    /// All exponents fixed; the exact value differs from the cutpoint.
    Leaf { value: Rat },
    /// All exponents fixed and the value equals the cutpoint.
    Attained { value: Rat },
    /// A limit value equals the cutpoint.
    LimitAttained,
    /// Children explored below the constant; `epsilon` bounds the tail region.
    Branch { epsilon: Rat },
}

/// One explored node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub component: usize,
    pub assignment: Vec<Option<u64>>,
    pub fixed: BTreeMap<usize, u64>,
    pub free: Vec<usize>,
    pub modulus: Option<u64>,
    pub limit_values: Vec<Rat>,
    pub constant: Option<u64>,
    pub outcome: TraceOutcome,
}

/// A value every achievable value of some region is close to: either an
/// exact leaf value or a limit value whose tail stays on its side of `λ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Representative {
    Leaf { point: Vec<u64>, value: Rat },
    Limit(LimitWitness),
}

impl Representative {
    pub fn value(&self) -> &Rat {
        match self {
            Representative::Leaf { value, .. } => value,
            Representative::Limit(w) => &w.value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub verdict: Verdict,
    pub trace: Vec<TraceRecord>,
}

/// Distinct limit value with the first residue vector (lexicographically) reaching it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LimitValue {
    pub value: Rat,
    pub residues: Vec<u64>,
}

/// Limit values of `⟨u|∏ M_j|v⟩` over the points of `set` as every free
/// coordinate grows, one per residue class of the period parameters mod `W`.
///
/// `fixed[j]` must be set for every letter outside `free`; `systems[j]` for every letter in it.
pub fn limit_value_set(
    pfa: &Pfa,
    systems: &[Option<LimitSystem>],
    set: &LinearSet,
    fixed: &[Option<u64>],
    free: &BTreeSet<usize>,
    residue_budget: u64,
) -> Result<(u64, Vec<LimitValue>), EngineError> {
    let letters = pfa.letter_count();
    if free.is_empty() {
        let point: Vec<u64> = fixed.iter().map(|k| k.expect("all letters fixed")).collect();
        return Ok((
            1,
            vec![LimitValue {
                value: pfa.value(&point),
                residues: Vec::new(),
            }],
        ));
    }
    let system = |j: usize| systems[j].as_ref().expect("limit system for a free letter");
    let modulus = free.iter().fold(1u64, |w, &j| lcm_u64(w, system(j).period));
    let p = set.periods().len();
    let total = (modulus as u128).checked_pow(p as u32);
    if total.is_none_or(|t| t > residue_budget as u128) {
        return Err(EngineError::Capacity(format!(
            "{modulus}^{p} residue vectors exceed the budget of {residue_budget}"
        )));
    }
    let fixed_mats: Vec<Option<RatMatrix>> = (0..letters)
        .map(|j| {
            if free.contains(&j) {
                None
            } else {
                let k = fixed[j].expect("non-free letters are fixed");
                Some(pfa.matrix(j).pow(k).expect("square"))
            }
        })
        .collect();

    let mut by_class: HashMap<Vec<u64>, Rat> = HashMap::new();
    let mut values: BTreeMap<Rat, Vec<u64>> = BTreeMap::new();
    let mut r = vec![0u64; p];
    loop {
        let class: Vec<u64> = free
            .iter()
            .map(|&j| {
                let a = set.base()[j]
                    + set
                        .periods()
                        .iter()
                        .zip(&r)
                        .map(|(q, ri)| q[j] * ri)
                        .sum::<u64>();
                a % system(j).period
            })
            .collect();
        let value = by_class
            .entry(class.clone())
            .or_insert_with(|| {
                let mut it = class.iter();
                let factors = (0..letters).map(|j| match &fixed_mats[j] {
                    Some(m) => m,
                    None => system(j).limit_matrix(*it.next().expect("class per free letter")),
                });
                pfa.value_of_product(factors)
            })
            .clone();
        values.entry(value).or_insert_with(|| r.clone());

        // odometer over [0, modulus)^p, last coordinate fastest
        let mut i = p;
        loop {
            if i == 0 {
                let out = values
                    .into_iter()
                    .map(|(value, residues)| LimitValue { value, residues })
                    .collect();
                return Ok((modulus, out));
            }
            i -= 1;
            r[i] += 1;
            if r[i] < modulus {
                break;
            }
            r[i] = 0;
        }
    }
}

/// `Σ_j err_bound_j(k)`
pub fn tail_bound(systems: &[&LimitSystem], k: u64) -> Rat {
    systems
        .iter()
        .fold(Rat::zero(), |acc, ls| acc + ls.err_bound(k))
}

/// Least `C ≥ 1` with `Σ_j err_bound_j(k) ≤ half_gap` for all `k ≥ C`.
///
/// Each bound is non-increasing and only changes at multiples of its
/// halving step, so only those points need checking. `half_gap` must be positive.
pub fn branch_constant(systems: &[&LimitSystem], half_gap: &Rat) -> u64 {
    assert!(half_gap.is_positive(), "gap must be positive");
    let mut k = 1u64;
    loop {
        if tail_bound(systems, k) <= *half_gap {
            return k;
        }
        k = systems
            .iter()
            .map(|ls| (k / ls.halving_step() + 1) * ls.halving_step())
            .min()
            .expect("at least one free letter");
    }
}

#[derive(Debug, Clone)]
struct Node {
    component: usize,
    set: LinearSet,
    // original period index of each current period
    origin: Vec<usize>,
    assignment: Vec<Option<u64>>,
    fixed: Vec<Option<u64>>,
    pending: BTreeSet<usize>,
}

#[derive(Debug, Default)]
struct Outcome {
    witness: Option<Witness>,
    epsilon: Option<Rat>,
    reps: Vec<Representative>,
    trace: Vec<TraceRecord>,
}

impl Outcome {
    fn absorb(&mut self, child: Outcome) {
        self.trace.extend(child.trace);
        self.reps.extend(child.reps);
        if let Some(e) = child.epsilon {
            self.epsilon = Some(match self.epsilon.take() {
                Some(cur) if cur <= e => cur,
                _ => e,
            });
        }
        if child.witness.is_some() {
            self.witness = child.witness;
        }
    }
}

/// Decision engine bound to one problem; limit systems are computed once.
pub struct Engine<'a> {
    problem: &'a Problem,
    options: EngineOptions,
    systems: Vec<Option<LimitSystem>>,
    nodes: AtomicU64,
    collect_reps: bool,
}

impl<'a> Engine<'a> {
    pub fn new(problem: &'a Problem, options: EngineOptions) -> Result<Self, EngineError> {
        let letters = problem.pfa.letter_count();
        let mut touched = vec![false; letters];
        for c in problem.language.components() {
            for p in c.periods() {
                for (j, &x) in p.iter().enumerate() {
                    touched[j] |= x != 0;
                }
            }
        }
        let systems = (0..letters)
            .map(|j| {
                touched[j]
                    .then(|| {
                        LimitSystem::compute_with_ceiling(j, problem.pfa.matrix(j), options.decay_ceiling)
                    })
                    .transpose()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            problem,
            options,
            systems,
            nodes: AtomicU64::new(0),
            collect_reps: false,
        })
    }

    pub fn limit_systems(&self) -> &[Option<LimitSystem>] {
        &self.systems
    }

    pub fn nodes_visited(&self) -> u64 {
        self.nodes.load(Ordering::Relaxed)
    }

    pub fn decide(&self) -> Result<Decision, EngineError> {
        let out = self.run()?;
        Ok(Decision {
            verdict: self.verdict_of(&out),
            trace: out.trace,
        })
    }

    /// Runs the full search and also returns the representative values of
    /// every region.
    pub fn decide_with_representatives(
        &mut self,
    ) -> Result<(Verdict, Vec<Representative>), EngineError> {
        self.collect_reps = true;
        let out = self.run();
        self.collect_reps = false;
        let out = out?;
        Ok((self.verdict_of(&out), out.reps))
    }

    fn verdict_of(&self, out: &Outcome) -> Verdict {
        if let Some(w) = &out.witness {
            return Verdict::NonIsolated(w.clone());
        }
        match &out.epsilon {
            Some(e) => Verdict::Isolated {
                epsilon: e.clone(),
                note: None,
            },
            None => Verdict::Isolated {
                epsilon: rat_int(1),
                note: Some("empty language".into()),
            },
        }
    }

    fn run(&self) -> Result<Outcome, EngineError> {
        self.nodes.store(0, Ordering::Relaxed);
        let letters = self.problem.pfa.letter_count();
        let roots: Vec<Node> = self
            .problem
            .language
            .components()
            .iter()
            .enumerate()
            .map(|(i, c)| Node {
                component: i,
                set: c.clone(),
                origin: (0..c.periods().len()).collect(),
                assignment: vec![None; c.periods().len()],
                fixed: vec![None; letters],
                pending: (0..letters).collect(),
            })
            .collect();
        self.explore_many(roots.into_iter())
    }

    fn explore_many(&self, nodes: impl Iterator<Item = Node>) -> Result<Outcome, EngineError> {
        let mut out = Outcome::default();
        if self.options.parallel {
            let nodes: Vec<Node> = nodes.collect();
            let results: Vec<Result<Outcome, EngineError>> =
                nodes.into_par_iter().map(|n| self.explore(n)).collect();
            for r in results {
                let child = r?;
                let stop = child.witness.is_some();
                out.absorb(child);
                if stop {
                    break;
                }
            }
        } else {
            for n in nodes {
                let child = self.explore(n)?;
                let stop = child.witness.is_some();
                out.absorb(child);
                if stop {
                    break;
                }
            }
        }
        Ok(out)
    }

    fn explore(&self, node: Node) -> Result<Outcome, EngineError> {
        let visited = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        if visited > self.options.node_budget {
            return Err(EngineError::Resource {
                budget: self.options.node_budget,
            });
        }
        let pfa = &self.problem.pfa;
        let lambda = &self.problem.lambda;
        let free = free_indices(&node.set, &node.pending);
        let mut fixed = node.fixed.clone();
        for &j in node.pending.difference(&free) {
            fixed[j] = Some(node.set.base()[j]);
        }
        let mut out = Outcome::default();
        let mut record = TraceRecord {
            component: node.component,
            assignment: node.assignment.clone(),
            fixed: fixed
                .iter()
                .enumerate()
                .filter_map(|(j, k)| k.map(|k| (j, k)))
                .collect(),
            free: free.iter().copied().collect(),
            modulus: None,
            limit_values: Vec::new(),
            constant: None,
            outcome: TraceOutcome::LimitAttained,
        };

        if free.is_empty() {
            let point: Vec<u64> = fixed.iter().map(|k| k.expect("all fixed")).collect();
            let value = pfa.value(&point);
            if value == *lambda {
                record.outcome = TraceOutcome::Attained {
                    value: value.clone(),
                };
                out.witness = Some(Witness::Finite(point));
            } else {
                out.epsilon = Some((&value - lambda).abs());
                record.outcome = TraceOutcome::Leaf {
                    value: value.clone(),
                };
                if self.collect_reps {
                    out.reps.push(Representative::Leaf { point, value });
                }
            }
            if self.options.trace {
                out.trace.push(record);
            }
            return Ok(out);
        }

        let (modulus, values) = limit_value_set(
            pfa,
            &self.systems,
            &node.set,
            &fixed,
            &free,
            self.options.residue_budget,
        )?;
        record.modulus = Some(modulus);
        record.limit_values = values.iter().map(|v| v.value.clone()).collect();
        let make_witness = |lv: &LimitValue| LimitWitness {
            component: node.component,
            assignment: node.assignment.clone(),
            residues: lv.residues.clone(),
            modulus,
            value: lv.value.clone(),
        };
        if let Some(hit) = values.iter().find(|v| v.value == *lambda) {
            out.witness = Some(Witness::Limit(make_witness(hit)));
            if self.options.trace {
                out.trace.push(record);
            }
            return Ok(out);
        }

        let gap = values
            .iter()
            .map(|v| (&v.value - lambda).abs())
            .min()
            .expect("at least one limit value");
        let free_systems: Vec<&LimitSystem> = free
            .iter()
            .map(|&j| self.systems[j].as_ref().expect("free letter has limits"))
            .collect();
        let constant = branch_constant(&free_systems, &(&gap / rat_int(2)));
        // Past the constant every value is within the tail bound of its limit.
        let tail_eps = &gap - tail_bound(&free_systems, constant);
        record.constant = Some(constant);
        record.outcome = TraceOutcome::Branch {
            epsilon: tail_eps.clone(),
        };
        out.epsilon = Some(tail_eps);
        if self.collect_reps {
            out.reps
                .extend(values.iter().map(|v| Representative::Limit(make_witness(v))));
        }
        if self.options.trace {
            out.trace.push(record);
        }

        let children = free.iter().flat_map(|&j| {
            let node = &node;
            let fixed = &fixed;
            let free = &free;
            (0..constant).flat_map(move |k| {
                fix_coordinate_assignments(&node.set, j, k)
                    .into_iter()
                    .map(move |values| child_node(node, fixed, free, j, k, &values))
            })
        });
        let below = self.explore_many(children)?;
        out.absorb(below);
        Ok(out)
    }
}

fn child_node(
    node: &Node,
    fixed: &[Option<u64>],
    free: &BTreeSet<usize>,
    j: usize,
    k: u64,
    values: &[u64],
) -> Node {
    let mut assignment = node.assignment.clone();
    let mut origin = Vec::new();
    let mut vals = values.iter();
    for (p, &o) in node.set.periods().iter().zip(&node.origin) {
        if p[j] != 0 {
            assignment[o] = Some(*vals.next().expect("value per touching period"));
        } else {
            origin.push(o);
        }
    }
    let mut fixed = fixed.to_vec();
    fixed[j] = Some(k);
    let mut pending = free.clone();
    pending.remove(&j);
    Node {
        component: node.component,
        set: apply_assignment(&node.set, j, values),
        origin,
        assignment,
        fixed,
        pending,
    }
}

/// Runs the search with default options.
pub fn decide_isolation(problem: &Problem) -> Result<Verdict, EngineError> {
    decide_with(problem, EngineOptions::default()).map(|d| d.verdict)
}

pub fn decide_with(problem: &Problem, options: EngineOptions) -> Result<Decision, EngineError> {
    Engine::new(problem, options)?.decide()
}

/// Number of family steps checked when verifying a limit witness.
const FAMILY_SAMPLES: u64 = 20;

/// Independent re-check of a non-isolation witness.
///
/// A finite witness must lie in the language and hit `λ` exactly. A limit
/// witness must evaluate to `λ` through the limit matrices, and along 20
/// points of its family the distance to `λ` must stay under the summed decay
/// bounds, which must shrink strictly from point to point (or be zero).
pub fn verify_witness(problem: &Problem, witness: &Witness) -> bool {
    let pfa = &problem.pfa;
    match witness {
        Witness::Finite(point) => {
            point.len() == pfa.letter_count()
                && problem.language.contains(point)
                && pfa.value(point) == problem.lambda
        }
        Witness::Limit(w) => verify_limit_witness(problem, w).unwrap_or(false),
    }
}

fn verify_limit_witness(problem: &Problem, w: &LimitWitness) -> Option<bool> {
    let pfa = &problem.pfa;
    if w.value != problem.lambda || w.modulus == 0 {
        return Some(false);
    }
    let set = w.family_set(&problem.language)?;
    let letters = pfa.letter_count();
    let free: BTreeSet<usize> = (0..letters)
        .filter(|&j| set.periods().iter().any(|p| p[j] != 0))
        .collect();
    let mut systems: Vec<Option<LimitSystem>> = vec![None; letters];
    for &j in &free {
        let ls = LimitSystem::compute(j, pfa.matrix(j)).ok()?;
        if !w.modulus.is_multiple_of(ls.period) {
            return Some(false);
        }
        systems[j] = Some(ls);
    }
    let start = w.point(&set, 0);
    let exps: Vec<ExponentAssignment> = (0..letters)
        .map(|j| {
            if free.contains(&j) {
                ExponentAssignment::Omega(start[j] % systems[j].as_ref().unwrap().period)
            } else {
                ExponentAssignment::Finite(start[j])
            }
        })
        .collect();
    let refs: Vec<Option<&LimitSystem>> = systems.iter().map(Option::as_ref).collect();
    if pfa.value_at(&exps, &refs) != problem.lambda {
        return Some(false);
    }
    if free.is_empty() {
        return Some(pfa.value(&start) == problem.lambda);
    }
    // Step far enough that every free coordinate crosses a halving boundary.
    let widest = free
        .iter()
        .map(|&j| systems[j].as_ref().unwrap().halving_step())
        .max()
        .unwrap_or(1);
    let stride = widest.div_ceil(w.modulus).max(1);
    let free_systems: Vec<&LimitSystem> = free.iter().map(|&j| systems[j].as_ref().unwrap()).collect();
    let mut previous: Option<Rat> = None;
    for s in 1..=FAMILY_SAMPLES {
        let point = w.point(&set, s * stride);
        let bound = free_systems
            .iter()
            .fold(Rat::zero(), |acc, ls| acc + ls.err_bound(point[ls.letter]));
        let distance = (pfa.value(&point) - &problem.lambda).abs();
        if distance > bound {
            return Some(false);
        }
        if let Some(prev) = &previous {
            if !(bound < *prev || bound.is_zero()) {
                return Some(false);
            }
        }
        previous = Some(bound);
    }
    Some(true)
}
