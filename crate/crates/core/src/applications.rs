//! Emptiness, value one, bounded alternation and the subset-sum gadget.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::exactmath::{rat, rat_int, Rat, RatMatrix};
use crate::isolation::{
    Engine, EngineError, EngineOptions, Problem, ProblemError, Representative, Verdict,
};
use crate::semilinear::{Grammar, LinearSet, SemilinearSet};
use crate::stochastic::{Letter, Pfa};

/// Sequences explored by [`bounded_alternation_isolation`] before giving up.
pub const MAX_ALTERNATION_SEQUENCES: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApplicationError {
    #[error("invalid subset-sum instance: {0}")]
    Instance(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
}

/// Positive integers `x_1..x_k` and a target `T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetSumInstance {
    values: Vec<u64>,
    target: u64,
}

impl SubsetSumInstance {
    pub fn new(values: Vec<u64>, target: u64) -> Result<Self, ApplicationError> {
        if values.is_empty() {
            return Err(ApplicationError::Instance("the set is empty".into()));
        }
        if values.contains(&0) {
            return Err(ApplicationError::Instance("values must be positive".into()));
        }
        Ok(Self { values, target })
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn target(&self) -> u64 {
        self.target
    }

    /// `∏ (x_j + 1)`, the common denominator of every gadget word value.
    pub fn denominator(&self) -> Rat {
        self.values
            .iter()
            .fold(Rat::one(), |acc, &x| acc * Rat::from_integer((x + 1).into()))
    }

    /// `T / ∏ (x_j + 1)`
    pub fn cutpoint(&self) -> Rat {
        Rat::from_integer(self.target.into()) / self.denominator()
    }

    /// 1-based indices of a subset summing to the target, by exhaustive search.
    pub fn solve_by_enumeration(&self) -> Option<Vec<usize>> {
        let k = self.values.len();
        assert!(k < 64, "enumeration is limited to fewer than 64 values");
        (0u64..1 << k).find_map(|mask| {
            let subset: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).collect();
            let sum: u64 = subset.iter().map(|&i| self.values[i - 1]).sum();
            (sum == self.target).then_some(subset)
        })
    }
}

/// Letter names `a1 b1 a2 b2 ...`
pub fn gadget_letter_names(k: usize) -> Vec<String> {
    (1..=k).flat_map(|i| [format!("a{i}"), format!("b{i}")]).collect()
}

/// Three-state automaton whose word `c_1···c_k` (`c_i ∈ {a_i, b_i}`) has value
/// `Σ_{c_i = a_i} x_i / ∏ (x_j + 1)`, on the language `(a_1|b_1)···(a_k|b_k)`
/// given as its Parikh image, with cutpoint `T / ∏ (x_j + 1)`.
pub fn subset_sum_gadget(inst: &SubsetSumInstance) -> Result<Problem, ApplicationError> {
    let lambda = inst.cutpoint();
    if lambda > rat_int(1) {
        return Err(ApplicationError::Instance(format!(
            "target {} exceeds the product bound {}",
            inst.target,
            inst.denominator()
        )));
    }
    let names = gadget_letter_names(inst.values.len());
    let mut letters = Vec::with_capacity(names.len());
    for (i, &x) in inst.values.iter().enumerate() {
        let x = x as i64;
        let d = x + 1;
        let a = RatMatrix::from_fractions(&[
            &[(1, d), (x, d), (0, 1)],
            &[(0, 1), (1, d), (x, d)],
            &[(0, 1), (0, 1), (1, 1)],
        ]);
        let b = RatMatrix::from_fractions(&[
            &[(1, d), (0, 1), (x, d)],
            &[(0, 1), (1, d), (x, d)],
            &[(0, 1), (0, 1), (1, 1)],
        ]);
        letters.push(Letter {
            name: names[2 * i].clone(),
            matrix: a,
        });
        letters.push(Letter {
            name: names[2 * i + 1].clone(),
            matrix: b,
        });
    }
    let pfa = Pfa::new(vec![rat_int(1), rat_int(0), rat_int(0)], vec![0, 1, 0], letters)
        .expect("gadget matrices are stochastic");
    Problem::new(pfa, gadget_language(inst.values.len()), lambda).map_err(Into::into)
}

/// Parikh image of `(a_1|b_1)···(a_k|b_k)`: one point per choice word.
///
/// Components are ordered by the choice bitmask, bit `i` set meaning `a_{i+1}`.
pub fn gadget_language(k: usize) -> SemilinearSet {
    let components = (0u64..1 << k)
        .map(|mask| {
            let mut base = vec![0u64; 2 * k];
            for i in 0..k {
                base[2 * i + usize::from(mask >> i & 1 == 0)] = 1;
            }
            LinearSet::point(base)
        })
        .collect();
    SemilinearSet::new(2 * k, components).expect("dimensions agree")
}

/// The gadget language as a grammar, for cross-checking the Parikh construction.
pub fn gadget_grammar(k: usize) -> Grammar {
    let names = gadget_letter_names(k);
    let mut text = format!("alphabet: {}\nS ->", names.join(" "));
    for i in 1..=k {
        text.push_str(&format!(" C{i}"));
    }
    text.push('\n');
    for i in 1..=k {
        text.push_str(&format!("C{i} -> a{i} | b{i}\n"));
    }
    Grammar::parse(&text).expect("generated grammar parses")
}

/// 1-based indices `i` with `a_i` chosen in a gadget exponent tuple.
pub fn decode_subset(tuple: &[u64]) -> Vec<usize> {
    tuple
        .chunks(2)
        .enumerate()
        .filter(|(_, c)| c[0] == 1)
        .map(|(i, _)| i + 1)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmptinessOutcome {
    /// No word reaches the cutpoint.
    Empty,
    /// Exponent tuple of a word whose value exceeds the cutpoint.
    NonEmpty(Vec<u64>),
    NotIsolated,
}

/// Decides whether some word of the language has value above `λ`, which is
/// sound only because `λ` is isolated: every achievable value then sits on
/// the same side of `λ` as a leaf value or a limit value of its region.
pub fn emptiness_if_isolated(
    problem: &Problem,
    options: EngineOptions,
) -> Result<EmptinessOutcome, ApplicationError> {
    let mut engine = Engine::new(problem, options)?;
    let (verdict, reps) = engine.decide_with_representatives()?;
    if !verdict.is_isolated() {
        return Ok(EmptinessOutcome::NotIsolated);
    }
    let lambda = problem.lambda();
    let leaf = reps.iter().find_map(|r| match r {
        Representative::Leaf { point, value } if value > lambda => Some(point.clone()),
        _ => None,
    });
    if let Some(point) = leaf {
        return Ok(EmptinessOutcome::NonEmpty(point));
    }
    let limit = reps.iter().find_map(|r| match r {
        Representative::Limit(w) if w.value > *lambda => Some(w),
        _ => None,
    });
    let Some(w) = limit else {
        return Ok(EmptinessOutcome::Empty);
    };
    let set = w
        .family_set(problem.language())
        .expect("engine witnesses fit the language");
    // Once every free coordinate passes the branch constant the value is on
    // the limit's side of λ, so this walk terminates.
    let mut m = 0u64;
    loop {
        let point = w.point(&set, m);
        if problem.pfa().value(&point) > *lambda {
            return Ok(EmptinessOutcome::NonEmpty(point));
        }
        m += 1;
    }
}

/// Whether values arbitrarily close to 1 are achieved.
pub fn value_one(
    pfa: &Pfa,
    language: &SemilinearSet,
    options: EngineOptions,
) -> Result<bool, ApplicationError> {
    let problem = Problem::new(pfa.clone(), language.clone(), rat_int(1))?;
    let decision = Engine::new(&problem, options)?.decide()?;
    Ok(!decision.verdict.is_isolated())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlternationReport {
    pub verdict: Verdict,
    /// Letter indices `w_1..w_k` of the first non-isolated block sequence.
    pub sequence: Option<Vec<usize>>,
    pub sequences_explored: u64,
}

/// Isolation on `w_1* ··· w_k*` for every letter sequence `w`, each block
/// becoming its own letter of a derived automaton over all of `ℕ^k`.
pub fn bounded_alternation_isolation(
    pfa: &Pfa,
    k: usize,
    lambda: &Rat,
    options: EngineOptions,
) -> Result<AlternationReport, ApplicationError> {
    assert!(k >= 1, "at least one block");
    let sigma = pfa.letter_count() as u64;
    let total = sigma
        .checked_pow(k as u32)
        .filter(|&t| t <= MAX_ALTERNATION_SEQUENCES)
        .ok_or_else(|| {
            ApplicationError::Capacity(format!(
                "{sigma}^{k} block sequences exceed the budget of {MAX_ALTERNATION_SEQUENCES}"
            ))
        })?;
    let mut best: Option<Rat> = None;
    for index in 0..total {
        let mut rest = index;
        let mut sequence = vec![0usize; k];
        for slot in sequence.iter_mut().rev() {
            *slot = (rest % sigma) as usize;
            rest /= sigma;
        }
        let letters = sequence
            .iter()
            .enumerate()
            .map(|(i, &w)| Letter {
                name: format!("{}_{}", pfa.letters()[w].name, i + 1),
                matrix: pfa.matrix(w).clone(),
            })
            .collect();
        let finals = pfa.finals().iter().map(|&f| i64::from(f)).collect();
        let derived = Pfa::new(pfa.initial().to_vec(), finals, letters).expect("same matrices");
        let problem = Problem::new(derived, SemilinearSet::full(k), lambda.clone())?;
        match Engine::new(&problem, options)?.decide()?.verdict {
            Verdict::NonIsolated(w) => {
                return Ok(AlternationReport {
                    verdict: Verdict::NonIsolated(w),
                    sequence: Some(sequence),
                    sequences_explored: index + 1,
                })
            }
            Verdict::Isolated { epsilon, .. } => {
                if best.as_ref().is_none_or(|b| epsilon < *b) {
                    best = Some(epsilon);
                }
            }
        }
    }
    Ok(AlternationReport {
        verdict: Verdict::Isolated {
            epsilon: best.unwrap_or_else(Rat::zero),
            note: None,
        },
        sequence: None,
        sequences_explored: total,
    })
}

/// `1/∏(x_j + 1)`: distinct gadget values are at least this far apart.
pub fn gadget_resolution(inst: &SubsetSumInstance) -> Rat {
    rat(1, 1) / inst.denominator()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isolation::{decide_isolation, verify_witness, Witness};
    use crate::semilinear::{parikh_image, LetterBoundedGrammar};

    fn halving(lambda: Rat) -> Problem {
        let a = RatMatrix::from_fractions(&[&[(1, 1), (0, 1)], &[(1, 2), (1, 2)]]);
        let pfa = Pfa::from_matrices(vec![rat_int(0), rat_int(1)], vec![1, 0], vec![a]).unwrap();
        Problem::new(pfa, SemilinearSet::full(1), lambda).unwrap()
    }

    fn gadget(values: &[u64], target: u64) -> Problem {
        subset_sum_gadget(&SubsetSumInstance::new(values.to_vec(), target).unwrap()).unwrap()
    }

    #[test]
    fn gadget_matrices() {
        let p = gadget(&[2], 1);
        assert_eq!(p.lambda(), &rat(1, 3));
        let a = RatMatrix::from_fractions(&[&[(1, 3), (2, 3), (0, 1)], &[(0, 1), (1, 3), (2, 3)], &[(0, 1), (0, 1), (1, 1)]]);
        let b = RatMatrix::from_fractions(&[&[(1, 3), (0, 1), (2, 3)], &[(0, 1), (1, 3), (2, 3)], &[(0, 1), (0, 1), (1, 1)]]);
        assert_eq!(p.pfa().matrix(0), &a);
        assert_eq!(p.pfa().matrix(1), &b);
        assert_eq!(p.pfa().letters()[1].name, "b1");
    }

    #[test]
    fn gadget_word_values() {
        let p = gadget(&[1, 2], 3);
        assert_eq!(p.lambda(), &rat(1, 2));
        let mut values: Vec<Rat> = p
            .language()
            .components()
            .iter()
            .map(|c| p.pfa().value(c.base()))
            .collect();
        values.sort();
        assert_eq!(values, vec![rat(0, 1), rat(1, 6), rat(1, 3), rat(1, 2)]);
    }

    #[test]
    fn gadget_decides_subset_sum() {
        let v = decide_isolation(&gadget(&[1, 2], 3)).unwrap();
        match v {
            Verdict::NonIsolated(Witness::Finite(t)) => assert_eq!(decode_subset(&t), vec![1, 2]),
            other => panic!("{other:?}"),
        }
        let v = decide_isolation(&gadget(&[2], 1)).unwrap();
        assert_eq!(v.epsilon(), Some(&rat(1, 3)));
    }

    #[test]
    fn gadget_rejects_unreachable_targets() {
        let inst = SubsetSumInstance::new(vec![1], 3).unwrap();
        assert!(matches!(subset_sum_gadget(&inst), Err(ApplicationError::Instance(_))));
        assert!(SubsetSumInstance::new(vec![], 0).is_err());
        assert!(SubsetSumInstance::new(vec![0, 1], 0).is_err());
    }

    #[test]
    fn gadget_grammar_matches_language() {
        for k in 1..=3 {
            let g = LetterBoundedGrammar::with_declared_order(gadget_grammar(k)).unwrap();
            let image = parikh_image(&g).unwrap();
            let lang = gadget_language(k);
            let mut got: Vec<_> = image.components().iter().map(|c| c.base().to_vec()).collect();
            let mut want: Vec<_> = lang.components().iter().map(|c| c.base().to_vec()).collect();
            got.sort();
            want.sort();
            assert_eq!(got, want);
            assert!(image.components().iter().all(|c| c.periods().is_empty()));
        }
    }

    #[test]
    fn emptiness_examples() {
        let opts = EngineOptions::default();
        assert_eq!(
            emptiness_if_isolated(&halving(rat(9, 10)), opts).unwrap(),
            EmptinessOutcome::NonEmpty(vec![4])
        );
        assert_eq!(
            emptiness_if_isolated(&halving(rat_int(1)), opts).unwrap(),
            EmptinessOutcome::NotIsolated
        );
        match emptiness_if_isolated(&gadget(&[2], 1), opts).unwrap() {
            EmptinessOutcome::NonEmpty(t) => assert_eq!(t, vec![1, 0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn emptiness_finds_nothing_below_a_constant() {
        let pfa = Pfa::from_matrices(vec![rat_int(1), rat_int(0)], vec![0, 1], vec![RatMatrix::identity(2)]).unwrap();
        let p = Problem::new(pfa, SemilinearSet::full(1), rat(1, 2)).unwrap();
        assert_eq!(emptiness_if_isolated(&p, EngineOptions::default()).unwrap(), EmptinessOutcome::Empty);
    }

    #[test]
    fn emptiness_walks_a_limit_family() {
        // 20 + ℕ lies entirely past the branch constant, so no leaf is explored
        let p = halving(rat(1, 2));
        let lang = SemilinearSet::new(1, vec![LinearSet::new(vec![20], vec![vec![1]]).unwrap()]).unwrap();
        let p = Problem::new(p.pfa().clone(), lang, rat(1, 2)).unwrap();
        assert_eq!(
            emptiness_if_isolated(&p, EngineOptions::default()).unwrap(),
            EmptinessOutcome::NonEmpty(vec![20])
        );
    }

    #[test]
    fn value_one_examples() {
        let opts = EngineOptions::default();
        let p = halving(rat_int(1));
        assert!(value_one(p.pfa(), p.language(), opts).unwrap());
        let stuck = Pfa::from_matrices(vec![rat_int(1), rat_int(0)], vec![0, 1], vec![RatMatrix::identity(2)]).unwrap();
        assert!(!value_one(&stuck, &SemilinearSet::full(1), opts).unwrap());
        let done = Pfa::from_matrices(vec![rat_int(0), rat_int(1)], vec![0, 1], vec![RatMatrix::identity(2)]).unwrap();
        assert!(value_one(&done, &SemilinearSet::full(1), opts).unwrap());
    }

    #[test]
    fn alternation_examples() {
        let opts = EngineOptions::default();
        let swap = RatMatrix::from_fractions(&[&[(0, 1), (1, 1)], &[(1, 1), (0, 1)]]);
        let pfa = Pfa::from_matrices(vec![rat_int(1), rat_int(0)], vec![1, 0], vec![swap]).unwrap();
        let r = bounded_alternation_isolation(&pfa, 1, &rat(1, 2), opts).unwrap();
        assert_eq!(r.verdict.epsilon(), Some(&rat(1, 2)));
        assert_eq!(r.sequences_explored, 1);

        let a = RatMatrix::from_fractions(&[&[(1, 1), (0, 1)], &[(1, 2), (1, 2)]]);
        let two = Pfa::from_matrices(vec![rat_int(0), rat_int(1)], vec![1, 0], vec![a.clone(), RatMatrix::identity(2)]).unwrap();
        let one = Pfa::from_matrices(vec![rat_int(0), rat_int(1)], vec![1, 0], vec![a]).unwrap();
        for lambda in [rat(9, 10), rat(3, 4), rat_int(1), rat(1, 3)] {
            let single = decide_isolation(&Problem::new(one.clone(), SemilinearSet::full(1), lambda.clone()).unwrap()).unwrap();
            let alt = bounded_alternation_isolation(&two, 2, &lambda, opts).unwrap();
            assert_eq!(single.is_isolated(), alt.verdict.is_isolated(), "λ = {lambda}");
        }
        let r = bounded_alternation_isolation(&two, 2, &rat(3, 4), opts).unwrap();
        let w = r.verdict.witness().unwrap();
        let seq = r.sequence.unwrap();
        let letters = seq.iter().map(|&i| two.matrix(i).clone()).collect();
        let derived = Pfa::from_matrices(two.initial().to_vec(), vec![1, 0], letters).unwrap();
        assert!(verify_witness(&Problem::new(derived, SemilinearSet::full(2), rat(3, 4)).unwrap(), w));
    }

    #[test]
    fn alternation_budget() {
        let pfa = Pfa::from_matrices(vec![rat_int(1)], vec![1], vec![RatMatrix::identity(1); 10]).unwrap();
        assert!(matches!(
            bounded_alternation_isolation(&pfa, 6, &rat(1, 2), EngineOptions::default()),
            Err(ApplicationError::Capacity(_))
        ));
    }
}
