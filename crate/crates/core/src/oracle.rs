//! Brute-force ground truth. Nothing here is used by the decision path.

use num_traits::{Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::exactmath::{dot, rat, rat_int, vec_mat, Rat, RatMatrix};
use crate::isolation::{verify_witness, Problem, Verdict};
use crate::semilinear::{enumerate_points, LinearSet, SemilinearSet};
use crate::stochastic::{LimitSystem, Pfa};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleReport {
    /// `None` when nothing was enumerated.
    pub min_distance: Option<Rat>,
    pub argmin: Option<Vec<u64>>,
    pub samples: u64,
    pub bound: u64,
}

/// Per-letter powers `A^0, A^1, …`, grown on demand.
struct PowerTable {
    powers: Vec<Vec<RatMatrix>>,
}

impl PowerTable {
    fn new(pfa: &Pfa) -> Self {
        Self {
            powers: (0..pfa.letter_count())
                .map(|j| vec![RatMatrix::identity(pfa.states()), pfa.matrix(j).clone()])
                .collect(),
        }
    }

    fn get(&mut self, j: usize, k: u64) -> &RatMatrix {
        let k = k as usize;
        let table = &mut self.powers[j];
        while table.len() <= k {
            let next = table[table.len() - 1].matmul(&table[1]).expect("square");
            table.push(next);
        }
        &table[k]
    }
}

/// Minimum of `|value − λ|` over every language point with coordinates ≤ `bound`.
///
/// Points arrive in lexicographic order, so the row vector after each
/// prefix of letters is reused from the previous point.
pub fn brute_force_min_distance(problem: &Problem, bound: u64) -> OracleReport {
    let pfa = problem.pfa();
    let lambda = problem.lambda();
    let letters = pfa.letter_count();
    let finals = pfa.final_vector();
    let mut table = PowerTable::new(pfa);
    // rows[i] = u · A_0^{x_0} ··· A_{i-1}^{x_{i-1}}
    let mut rows: Vec<Vec<Rat>> = vec![pfa.initial().to_vec()];
    let mut previous: Vec<u64> = Vec::new();
    let mut report = OracleReport {
        min_distance: None,
        argmin: None,
        samples: 0,
        bound,
    };
    for point in enumerate_points(problem.language(), bound) {
        let shared = previous
            .iter()
            .zip(&point)
            .take_while(|(a, b)| a == b)
            .count();
        rows.truncate(shared + 1);
        for j in shared..letters {
            let next = vec_mat(&rows[j], table.get(j, point[j]));
            rows.push(next);
        }
        let distance = (dot(&rows[letters], &finals) - lambda).abs();
        report.samples += 1;
        if report.min_distance.as_ref().is_none_or(|d| distance < *d) {
            report.min_distance = Some(distance);
            report.argmin = Some(point.clone());
        }
        previous = point;
    }
    report
}

/// Largest entrywise `|B^iterations − P|` in floating point, `B = A^D`.
pub fn numeric_limit_check(a: &RatMatrix, ls: &LimitSystem, iterations: u64) -> f64 {
    let b = a.pow(ls.period).expect("square").to_f64();
    let n = b.len();
    let mut current = vec![vec![0.0; n]; n];
    for (i, row) in current.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..iterations {
        let mut next = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 0..n {
                let c = current[i][k];
                if c != 0.0 {
                    for j in 0..n {
                        next[i][j] += c * b[k][j];
                    }
                }
            }
        }
        current = next;
    }
    let p = ls.projection.to_f64();
    current
        .iter()
        .zip(&p)
        .flat_map(|(r, q)| r.iter().zip(q).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerdictCheck {
    pub pass: bool,
    pub detail: String,
    /// Enumerated point closer to `λ` than the claimed `ε`.
    pub counterexample: Option<Vec<u64>>,
}

/// Isolated verdicts must not be refuted by enumeration up to `bound`;
/// non-isolated ones must carry a witness that verifies.
pub fn check_verdict(problem: &Problem, verdict: &Verdict, bound: u64) -> VerdictCheck {
    match verdict {
        Verdict::Isolated { epsilon, .. } => {
            if !epsilon.is_positive() {
                return VerdictCheck {
                    pass: false,
                    detail: format!("isolation radius {epsilon} is not positive"),
                    counterexample: None,
                };
            }
            let report = brute_force_min_distance(problem, bound);
            match report.min_distance {
                Some(d) if d < *epsilon => VerdictCheck {
                    pass: false,
                    detail: format!("distance {d} is below the claimed radius {epsilon}"),
                    counterexample: report.argmin,
                },
                _ => VerdictCheck {
                    pass: true,
                    detail: format!("{} points within bound {bound} respect radius {epsilon}", report.samples),
                    counterexample: None,
                },
            }
        }
        Verdict::NonIsolated(w) => {
            let ok = verify_witness(problem, w);
            VerdictCheck {
                pass: ok,
                detail: if ok { "witness verified" } else { "witness failed verification" }.into(),
                counterexample: None,
            }
        }
    }
}

/// Shape of generated problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusConfig {
    pub max_states: usize,
    pub max_letters: usize,
    pub max_denominator: i64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            max_states: 3,
            max_letters: 2,
            max_denominator: 4,
        }
    }
}

/// Probability vector of length `n` with entries `c/d`, `d ≤ max_denominator`.
pub fn random_distribution<R: Rng>(rng: &mut R, n: usize, max_denominator: i64) -> Vec<Rat> {
    let d = rng.gen_range(1..=max_denominator);
    let mut counts = vec![0i64; n];
    for _ in 0..d {
        counts[rng.gen_range(0..n)] += 1;
    }
    counts.into_iter().map(|c| rat(c, d)).collect()
}

pub fn random_stochastic_matrix<R: Rng>(rng: &mut R, n: usize, max_denominator: i64) -> RatMatrix {
    let rows = (0..n)
        .map(|_| random_distribution(rng, n, max_denominator))
        .collect();
    RatMatrix::from_rows(rows).expect("rectangular")
}

/// Linear set whose periods each touch one coordinate or two adjacent ones.
pub fn random_stratified_set<R: Rng>(rng: &mut R, dim: usize) -> LinearSet {
    let base = (0..dim).map(|_| rng.gen_range(0..=3)).collect();
    let periods = (0..rng.gen_range(0..=2))
        .map(|_| {
            let mut p = vec![0u64; dim];
            let i = rng.gen_range(0..dim);
            p[i] = rng.gen_range(1..=2);
            if i + 1 < dim && rng.gen_bool(0.3) {
                p[i + 1] = rng.gen_range(1..=2);
            }
            p
        })
        .collect();
    LinearSet::new(base, periods).expect("dimensions agree")
}

/// Random problem whose cutpoint is an attained value, a limit value, or a
/// small perturbation of either.
pub fn random_problem<R: Rng>(rng: &mut R, config: CorpusConfig) -> Problem {
    let n = rng.gen_range(1..=config.max_states);
    let letters = rng.gen_range(1..=config.max_letters);
    let initial = random_distribution(rng, n, config.max_denominator);
    let mut finals: Vec<i64> = (0..n).map(|_| i64::from(rng.gen_bool(0.5))).collect();
    if finals.iter().all(|&f| f == 0) {
        finals[rng.gen_range(0..n)] = 1;
    }
    let matrices = (0..letters)
        .map(|_| random_stochastic_matrix(rng, n, config.max_denominator))
        .collect();
    let pfa = Pfa::from_matrices(initial, finals, matrices).expect("stochastic by construction");
    let language = if rng.gen_bool(0.25) {
        SemilinearSet::full(letters)
    } else {
        let components = (0..rng.gen_range(1..=2))
            .map(|_| random_stratified_set(rng, letters))
            .collect();
        SemilinearSet::new(letters, components).expect("dimensions agree")
    };
    let lambda = random_cutpoint(rng, &pfa, &language);
    Problem::new(pfa, language, lambda).expect("cutpoint in range")
}

fn random_cutpoint<R: Rng>(rng: &mut R, pfa: &Pfa, language: &SemilinearSet) -> Rat {
    let component = language
        .components()
        .choose(rng)
        .expect("generated languages are non-empty");
    let params: Vec<u64> = component.periods().iter().map(|_| rng.gen_range(0..4)).collect();
    let point = component.point_at(&params);
    let base = match rng.gen_range(0..3) {
        0 => pfa.value(&point),
        _ => limit_along(pfa, component, &point),
    };
    let perturb = rng.gen_bool(0.3);
    let lambda = if perturb {
        let step = rat(1, rng.gen_range(2..=40));
        if rng.gen_bool(0.5) {
            base + step
        } else {
            base - step
        }
    } else {
        base
    };
    lambda.clamp(Rat::zero(), rat_int(1))
}

/// Value with every letter touched by a period of `set` sent to its limit
/// along the residue of `point`, computed through plain matrix powers.
fn limit_along(pfa: &Pfa, set: &LinearSet, point: &[u64]) -> Rat {
    let mut row = pfa.initial().to_vec();
    for (j, &k) in point.iter().enumerate() {
        let touched = set.periods().iter().any(|p| p[j] != 0);
        let m = if touched {
            match LimitSystem::compute(j, pfa.matrix(j)) {
                Ok(ls) => ls.limit_matrix(k % ls.period).clone(),
                Err(_) => pfa.matrix(j).pow(k).expect("square"),
            }
        } else {
            pfa.matrix(j).pow(k).expect("square")
        };
        row = vec_mat(&row, &m);
    }
    dot(&row, &pfa.final_vector())
}

/// `f64` view of a rational, for diagnostics.
pub fn approx(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
