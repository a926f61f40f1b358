//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
//!
//! Corpora are seeded, so every run sees the same instances.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use isolde_core::applications::{
    decode_subset, emptiness_if_isolated, gadget_grammar, subset_sum_gadget, value_one,
    EmptinessOutcome, SubsetSumInstance,
};
use isolde_core::exactmath::{rat, rat_int, Rat, RatMatrix};
use isolde_core::format::{trace_json, verdict_json};
use isolde_core::isolation::{decide_with, verify_witness, EngineOptions, Problem, Verdict, Witness};
use isolde_core::oracle::{
    brute_force_min_distance, check_verdict, numeric_limit_check, random_problem,
    random_stochastic_matrix, CorpusConfig,
};
use isolde_core::semilinear::{
    enumerate_points, is_stratified, parikh_image, Grammar, LetterBoundedGrammar, SemilinearSet,
};
use isolde_core::stochastic::{LimitSystem, Pfa};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MATRIX_CORPUS: usize = 500;
const MATRIX_SEED: u64 = 0x15_01de;
const NUMERIC_ITERATIONS: u64 = 2000;
const NUMERIC_TOLERANCE: f64 = 1e-8;
const DECAY_HORIZON: u64 = 64;
const GADGET_CORPUS: usize = 100;
const GADGET_SEED: u64 = 4;
const RANDOM_CORPUS: usize = 200;
const RANDOM_SEED: u64 = 6;
const RANDOM_BOUND: u64 = 40;
const HALVING_BOUND: u64 = 50;
const WORD_LENGTH: usize = 12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass: ok, detail: detail.into() }
}

fn matrix_corpus() -> Vec<RatMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(MATRIX_SEED);
    (0..MATRIX_CORPUS)
        .map(|_| {
            let n = rng.gen_range(1..=5);
            random_stochastic_matrix(&mut rng, n, 6)
        })
        .collect()
}

fn systems(corpus: &[RatMatrix]) -> Vec<LimitSystem> {
    corpus
        .iter()
        .map(|a| LimitSystem::compute(0, a).expect("stochastic matrices have limit systems"))
        .collect()
}

fn criterion_1(corpus: &[RatMatrix], systems: &[LimitSystem]) -> Outcome {
    let mut failures = Vec::new();
    for (i, (a, ls)) in corpus.iter().zip(systems).enumerate() {
        let p = &ls.projection;
        let b = a.pow(ls.period).unwrap();
        let ok = p.matmul(p).unwrap() == *p
            && p.matmul(&b).unwrap() == *p
            && b.matmul(p).unwrap() == *p
            && p.is_row_stochastic();
        if !ok {
            failures.push(i);
        }
    }
    verdict(
        failures.is_empty(),
        format!("{} matrices, P²=P, PB=BP=P, P stochastic; failures {:?}", corpus.len(), failures),
    )
}

fn criterion_2(corpus: &[RatMatrix], systems: &[LimitSystem]) -> Outcome {
    let worst = corpus
        .iter()
        .zip(systems)
        .map(|(a, ls)| numeric_limit_check(a, ls, NUMERIC_ITERATIONS))
        .fold(0.0, f64::max);
    verdict(
        worst <= NUMERIC_TOLERANCE,
        format!("max deviation {worst:.3e} after {NUMERIC_ITERATIONS} iterations (tolerance {NUMERIC_TOLERANCE:e})"),
    )
}

fn criterion_3(corpus: &[RatMatrix], systems: &[LimitSystem]) -> Outcome {
    let mut failures = Vec::new();
    for (i, (a, ls)) in corpus.iter().zip(systems).enumerate() {
        let mut power = RatMatrix::identity(a.rows());
        for k in 0..=DECAY_HORIZON {
            let residual = power.sub(ls.limit_matrix(k % ls.period)).unwrap().inf_norm();
            if residual > ls.err_bound(k) {
                failures.push((i, k));
                break;
            }
            power = power.matmul(a).unwrap();
        }
    }
    verdict(
        failures.is_empty(),
        format!("{} matrices, k ≤ {DECAY_HORIZON}; (matrix, k) failures {:?}", corpus.len(), failures),
    )
}

fn gadget_corpus() -> Vec<SubsetSumInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(GADGET_SEED);
    (0..GADGET_CORPUS)
        .map(|_| {
            let k = rng.gen_range(1..=10);
            let values: Vec<u64> = (0..k).map(|_| rng.gen_range(1..=20)).collect();
            let total: u64 = values.iter().sum();
            let target = if rng.gen_bool(0.5) {
                values.iter().filter(|_| rng.gen_bool(0.5)).sum()
            } else {
                rng.gen_range(0..=total)
            };
            SubsetSumInstance::new(values, target).unwrap()
        })
        .collect()
}

fn decide_json(problem: &Problem, parallel: bool) -> (Verdict, String) {
    let options = EngineOptions { parallel, trace: true, ..EngineOptions::default() };
    match decide_with(problem, options) {
        Ok(d) => {
            let json = serde_json::json!({ "result": verdict_json(&d.verdict), "trace": trace_json(&d.trace) });
            (d.verdict, json.to_string())
        }
        Err(e) => panic!("engine error: {e}"),
    }
}

fn criterion_4(instances: &[SubsetSumInstance], outputs: &mut Vec<String>) -> Outcome {
    let mut mismatched = Vec::new();
    let mut bad_witness = Vec::new();
    let mut above_sum_bound = Vec::new();
    let mut below_resolution = Vec::new();
    let (mut isolated, mut non_isolated) = (0, 0);
    for (i, inst) in instances.iter().enumerate() {
        let problem = subset_sum_gadget(inst).unwrap();
        let (v, json) = decide_json(&problem, false);
        outputs.push(json);
        let solvable = inst.solve_by_enumeration().is_some();
        if v.is_isolated() == solvable {
            mismatched.push(i);
        }
        match &v {
            Verdict::NonIsolated(w) => {
                non_isolated += 1;
                let valid = match w {
                    Witness::Finite(t) => {
                        decode_subset(t).iter().map(|&j| inst.values()[j - 1]).sum::<u64>() == inst.target()
                    }
                    Witness::Limit(_) => false,
                };
                if !valid {
                    bad_witness.push(i);
                }
            }
            Verdict::Isolated { epsilon, .. } => {
                isolated += 1;
                let sum: u64 = inst.values().iter().map(|x| x + 1).sum();
                if !(*epsilon > rat_int(0) && *epsilon <= rat(1, sum as i64)) {
                    above_sum_bound.push(i);
                }
                if *epsilon < rat(1, 1) / inst.denominator() {
                    below_resolution.push(i);
                }
            }
        }
    }
    let example = above_sum_bound.first().map(|&i| {
        let inst = &instances[i];
        format!("; e.g. instance {i}: S={:?} T={}", inst.values(), inst.target())
    });
    verdict(
        mismatched.is_empty() && bad_witness.is_empty() && above_sum_bound.is_empty() && below_resolution.is_empty(),
        format!(
            "{} instances ({isolated} isolated, {non_isolated} non-isolated); verdict mismatches {:?}; invalid witnesses {:?}; \
             ε outside (0, 1/Σ(x+1)] in {} cases{}; ε below 1/∏(x+1) in {} cases",
            instances.len(),
            mismatched,
            bad_witness,
            above_sum_bound.len(),
            example.unwrap_or_default(),
            below_resolution.len(),
        ),
    )
}

fn halving(lambda: Rat) -> Problem {
    let a = RatMatrix::from_fractions(&[&[(1, 1), (0, 1)], &[(1, 2), (1, 2)]]);
    let pfa = Pfa::from_matrices(vec![rat_int(0), rat_int(1)], vec![1, 0], vec![a]).unwrap();
    Problem::new(pfa, SemilinearSet::full(1), lambda).unwrap()
}

fn halving_cutpoints() -> Vec<(Rat, bool)> {
    // (λ, non-isolated by the closed form λ ∈ {1 − 2^{−k}} ∪ {1})
    vec![
        (rat(0, 1), true),
        (rat(1, 3), false),
        (rat(1, 2), true),
        (rat(3, 4), true),
        (rat(7, 8), true),
        (rat(9, 10), false),
        (rat(1, 1), true),
    ]
}

fn criterion_5(outputs: &mut Vec<String>) -> Outcome {
    let mut wrong = Vec::new();
    let mut detail = String::new();
    for (lambda, expected_non_isolated) in halving_cutpoints() {
        let problem = halving(lambda.clone());
        let (v, json) = decide_json(&problem, false);
        outputs.push(json);
        let witness_ok = v.witness().is_none_or(|w| verify_witness(&problem, w));
        if v.is_isolated() == expected_non_isolated || !witness_ok {
            wrong.push(lambda.to_string());
        }
        if lambda == rat(9, 10) {
            let eps = v.epsilon().cloned().unwrap_or_else(|| rat_int(0));
            let report = brute_force_min_distance(&problem, HALVING_BOUND);
            let min = report.min_distance.clone().unwrap_or_else(|| rat_int(1));
            if !(eps > rat_int(0) && min == rat(1, 40) && min >= eps) {
                wrong.push(format!("9/10 (ε {eps}, brute force {min})"));
            }
            detail = format!("; λ=9/10: ε = {eps}, brute-force min distance {min} at {:?}", report.argmin.unwrap_or_default());
        }
    }
    verdict(wrong.is_empty(), format!("7 cutpoints, misclassified {:?}{detail}", wrong))
}

fn random_corpus() -> Vec<Problem> {
    let mut rng = ChaCha8Rng::seed_from_u64(RANDOM_SEED);
    (0..RANDOM_CORPUS)
        .map(|_| random_problem(&mut rng, CorpusConfig::default()))
        .collect()
}

fn criterion_6(corpus: &[Problem], outputs: &mut Vec<String>) -> Outcome {
    let mut failures = Vec::new();
    let (mut isolated, mut non_isolated) = (0, 0);
    for (i, problem) in corpus.iter().enumerate() {
        let (v, json) = decide_json(problem, false);
        outputs.push(json);
        if v.is_isolated() {
            isolated += 1;
        } else {
            non_isolated += 1;
        }
        let check = check_verdict(problem, &v, RANDOM_BOUND);
        if !check.pass {
            failures.push(format!("#{i}: {}", check.detail));
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{} problems ({isolated} isolated, {non_isolated} non-isolated), bound {RANDOM_BOUND}; failures {:?}",
            corpus.len(),
            failures
        ),
    )
}

fn grammar_corpus() -> Vec<Grammar> {
    let texts = [
        "alphabet: a b\nS -> a S b | ε",
        "alphabet: a b\nS -> A B\nA -> a A | ε\nB -> b B | ε",
        "alphabet: a b c\nS -> a S c | B\nB -> b B | ε",
        "alphabet: a b\nS -> a S b b | ε",
        "alphabet: a b c d\nS -> X Y\nX -> a X b | ε\nY -> c Y d | ε",
        "alphabet: a b c d\nS -> a S d | T\nT -> b T c | ε",
        "alphabet: a b\nS -> a S b | A\nA -> a A | a",
        "alphabet: a b c\nS -> a S c | B | D\nB -> b B | b\nD -> a D\nU -> c",
        "alphabet: a b\nS -> a a b | a b b | ε",
    ];
    let mut out: Vec<Grammar> = texts.iter().map(|t| Grammar::parse(t).unwrap()).collect();
    out.push(gadget_grammar(2));
    out.push(gadget_grammar(4));
    out
}

/// Parikh vectors of all words of length ≤ `max_len`, by expanding sentential forms leftmost-first.
fn word_parikh_vectors(g: &Grammar, max_len: usize) -> BTreeSet<Vec<u64>> {
    use isolde_core::semilinear::Symbol;
    let dim = g.terminals().len();
    let mut words = BTreeSet::new();
    let mut seen = BTreeSet::new();
    let mut stack = vec![vec![Symbol::Nonterminal(g.start())]];
    while let Some(form) = stack.pop() {
        let terminals = form.iter().filter(|s| matches!(s, Symbol::Terminal(_))).count();
        if terminals > max_len || !seen.insert(form.clone()) {
            continue;
        }
        match form.iter().position(|s| matches!(s, Symbol::Nonterminal(_))) {
            None => {
                let mut v = vec![0u64; dim];
                for s in &form {
                    if let Symbol::Terminal(t) = s {
                        v[*t] += 1;
                    }
                }
                words.insert(v);
            }
            Some(i) => {
                let Symbol::Nonterminal(x) = form[i] else { unreachable!() };
                // keeps chains of non-generating nonterminals finite
                if form.len() > 4 * max_len + 4 {
                    continue;
                }
                for p in g.productions().iter().filter(|p| p.lhs == x) {
                    let mut next = form[..i].to_vec();
                    next.extend(p.rhs.iter().copied());
                    next.extend_from_slice(&form[i + 1..]);
                    stack.push(next);
                }
            }
        }
    }
    words
}

fn criterion_7() -> Outcome {
    let mut failures = Vec::new();
    let corpus = grammar_corpus();
    for (i, g) in corpus.iter().enumerate() {
        let lb = LetterBoundedGrammar::with_declared_order(g.clone()).unwrap();
        let image = parikh_image(&lb).unwrap();
        let expected = word_parikh_vectors(g, WORD_LENGTH);
        let got: BTreeSet<Vec<u64>> = enumerate_points(&image, WORD_LENGTH as u64)
            .filter(|x| x.iter().sum::<u64>() <= WORD_LENGTH as u64)
            .collect();
        if got != expected {
            let extra: Vec<_> = got.difference(&expected).take(3).collect();
            let missing: Vec<_> = expected.difference(&got).take(3).collect();
            failures.push(format!("grammar {i}: extra {extra:?} missing {missing:?}"));
        }
        if !is_stratified(&image) {
            failures.push(format!("grammar {i}: image not stratified"));
        }
    }
    verdict(
        failures.is_empty(),
        format!("{} grammars, words up to length {WORD_LENGTH}; failures {:?}", corpus.len(), failures),
    )
}

fn criterion_8() -> Outcome {
    let options = EngineOptions::default();
    let mut wrong = Vec::new();
    let p = halving(rat_int(1));
    if !value_one(p.pfa(), p.language(), options).unwrap() {
        wrong.push("value one of 1 − 2^{−k}");
    }
    let stuck = Pfa::from_matrices(vec![rat_int(1), rat_int(0)], vec![0, 1], vec![RatMatrix::identity(2)]).unwrap();
    if value_one(&stuck, &SemilinearSet::full(1), options).unwrap() {
        wrong.push("value one of constant 0");
    }
    let done = Pfa::from_matrices(vec![rat_int(0), rat_int(1)], vec![0, 1], vec![RatMatrix::identity(2)]).unwrap();
    if !value_one(&done, &SemilinearSet::full(1), options).unwrap() {
        wrong.push("value one of constant 1");
    }
    let p = halving(rat(9, 10));
    match emptiness_if_isolated(&p, options).unwrap() {
        EmptinessOutcome::NonEmpty(t) if t == [4] && p.language().contains(&t) && p.pfa().value(&t) >= rat(9, 10) => {}
        _ => wrong.push("emptiness at 9/10"),
    }
    if emptiness_if_isolated(&halving(rat_int(1)), options).unwrap() != EmptinessOutcome::NotIsolated {
        wrong.push("emptiness at 1");
    }
    verdict(wrong.is_empty(), format!("3 value-one cases, 2 emptiness cases; wrong {:?}", wrong))
}

fn criterion_9(
    first: &[String],
    gadgets: &[SubsetSumInstance],
    random: &[Problem],
) -> Outcome {
    let mut rerun = Vec::new();
    let mut parallel = Vec::new();
    let mut problems: Vec<Problem> = gadgets.iter().map(|g| subset_sum_gadget(g).unwrap()).collect();
    problems.extend(halving_cutpoints().into_iter().map(|(l, _)| halving(l)));
    problems.extend(random.iter().cloned());
    for p in &problems {
        rerun.push(decide_json(p, false).1);
        parallel.push(decide_json(p, true).1);
    }
    let differ = |other: &[String]| first.iter().zip(other).filter(|(a, b)| a != b).count() + first.len().abs_diff(other.len());
    let (d_rerun, d_parallel) = (differ(&rerun), differ(&parallel));
    verdict(
        d_rerun == 0 && d_parallel == 0,
        format!(
            "{} verdict+trace documents; differing across runs {d_rerun}, serial vs parallel {d_parallel}",
            first.len()
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(u8, &str, Outcome, f64)> = Vec::new();
    let mut run = |n: u8, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {n} ({name}): {} [{secs:.1}s] {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
        results.push((n, name, outcome, secs));
    };

    let matrices = matrix_corpus();
    let limit_systems = systems(&matrices);
    let gadgets = gadget_corpus();
    let random = random_corpus();
    let mut outputs = Vec::new();

    run(1, "projection identities", &mut || criterion_1(&matrices, &limit_systems));
    run(2, "limit convergence", &mut || criterion_2(&matrices, &limit_systems));
    run(3, "decay certificate validity", &mut || criterion_3(&matrices, &limit_systems));
    run(4, "gadget equivalence", &mut || criterion_4(&gadgets, &mut outputs));
    run(5, "closed-form family", &mut || criterion_5(&mut outputs));
    run(6, "randomized verdict soundness", &mut || criterion_6(&random, &mut outputs));
    run(7, "Parikh correctness", &mut || criterion_7());
    run(8, "corollary behaviors", &mut || criterion_8());
    let snapshot = outputs.clone();
    run(9, "determinism", &mut || criterion_9(&snapshot, &gadgets, &random));

    let failed: Vec<u8> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria PASS", results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAIL on criteria {failed:?}");
        ExitCode::FAILURE
    }
}
