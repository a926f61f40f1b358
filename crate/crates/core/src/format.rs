//! JSON problem files and result encodings.
//!
//! Rationals are always strings (`"p/q"` or an integer). Errors carry JSON
//! pointer paths into the offending document.

use std::fmt;

use num_traits::{Signed, ToPrimitive};
use serde_json::{json, Map, Value};

use crate::applications::{AlternationReport, EmptinessOutcome};
use crate::exactmath::{format_rat, parse_rat, rat_int, Rat, RatMatrix};
use crate::isolation::{Problem, TraceOutcome, TraceRecord, Verdict, Witness};
use crate::oracle::OracleReport;
use crate::semilinear::{
    parikh_image, Grammar, LetterBoundedGrammar, LinearSet, SemilinearError, SemilinearSet,
};
use crate::stochastic::{validate_pfa, Letter, Pfa};

/// One problem with a JSON pointer to where it was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub pointer: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormatError {
    /// The document is not JSON at all.
    Syntax(String),
    /// Schema or automaton violations, in document order.
    Invalid(Vec<FieldError>),
    /// The grammar's Parikh image could not be built within capacity.
    Capacity(String),
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatError::Syntax(m) => write!(f, "not valid JSON: {m}"),
            FormatError::Invalid(errors) => {
                for (i, e) in errors.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{}: {}", pointer_or_root(&e.pointer), e.message)?;
                }
                Ok(())
            }
            FormatError::Capacity(m) => write!(f, "capacity exceeded: {m}"),
        }
    }
}

impl std::error::Error for FormatError {}

fn pointer_or_root(p: &str) -> &str {
    if p.is_empty() {
        "/"
    } else {
        p
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LanguageSpec {
    Grammar(String),
    Semilinear(SemilinearSet),
}

/// A parsed problem file; the language keeps the form it was written in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemFile {
    pub pfa: Pfa,
    pub language: LanguageSpec,
    pub lambda: Rat,
}

struct Errors(Vec<FieldError>);

impl Errors {
    fn push(&mut self, pointer: impl Into<String>, message: impl Into<String>) {
        self.0.push(FieldError {
            pointer: pointer.into(),
            message: message.into(),
        });
    }
}

fn get<'v>(obj: &'v Map<String, Value>, key: &str, errs: &mut Errors) -> Option<&'v Value> {
    let v = obj.get(key);
    if v.is_none() {
        errs.push(format!("/{key}"), "missing field");
    }
    v
}

fn as_array<'v>(v: &'v Value, at: &str, errs: &mut Errors) -> Option<&'v Vec<Value>> {
    let a = v.as_array();
    if a.is_none() {
        errs.push(at, "expected an array");
    }
    a
}

fn as_rat(v: &Value, at: &str, errs: &mut Errors) -> Option<Rat> {
    match v {
        Value::String(s) => match parse_rat(s) {
            Ok(r) => Some(r),
            Err(e) => {
                errs.push(at, format!("invalid rational {s:?}: {e}"));
                None
            }
        },
        _ => {
            errs.push(at, "expected a rational string such as \"1/2\"");
            None
        }
    }
}

fn as_nat(v: &Value, at: &str, errs: &mut Errors) -> Option<u64> {
    let n = v.as_u64();
    if n.is_none() {
        errs.push(at, "expected a non-negative integer");
    }
    n
}

fn nat_vector(v: &Value, at: &str, dim: usize, errs: &mut Errors) -> Option<Vec<u64>> {
    let a = as_array(v, at, errs)?;
    if a.len() != dim {
        errs.push(at, format!("expected {dim} entries, found {}", a.len()));
        return None;
    }
    let out: Vec<Option<u64>> = a
        .iter()
        .enumerate()
        .map(|(i, x)| as_nat(x, &format!("{at}/{i}"), errs))
        .collect();
    out.into_iter().collect()
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let value: Value = serde_json::from_str(text).map_err(|e| FormatError::Syntax(e.to_string()))?;
        Self::from_json(&value)
    }

    pub fn from_json(value: &Value) -> Result<Self, FormatError> {
        let mut errs = Errors(Vec::new());
        let Some(obj) = value.as_object() else {
            return Err(FormatError::Invalid(vec![FieldError {
                pointer: String::new(),
                message: "expected an object".into(),
            }]));
        };
        for key in obj.keys() {
            if !["states", "initial", "final", "letters", "language", "lambda"].contains(&key.as_str()) {
                errs.push(format!("/{key}"), "unknown field");
            }
        }
        let states = get(obj, "states", &mut errs).and_then(|v| as_nat(v, "/states", &mut errs));
        let states = match states {
            Some(0) => {
                errs.push("/states", "at least one state is required");
                None
            }
            s => s.map(|s| s as usize),
        };

        let initial = get(obj, "initial", &mut errs)
            .and_then(|v| as_array(v, "/initial", &mut errs))
            .map(|a| {
                a.iter()
                    .enumerate()
                    .map(|(i, x)| as_rat(x, &format!("/initial/{i}"), &mut errs))
                    .collect::<Vec<_>>()
            });
        let finals = get(obj, "final", &mut errs)
            .and_then(|v| as_array(v, "/final", &mut errs))
            .map(|a| {
                a.iter()
                    .enumerate()
                    .map(|(i, x)| match x.as_i64() {
                        Some(f @ (0 | 1)) => Some(f),
                        _ => {
                            errs.push(format!("/final/{i}"), "expected 0 or 1");
                            None
                        }
                    })
                    .collect::<Vec<_>>()
            });
        let letters = get(obj, "letters", &mut errs)
            .and_then(|v| as_array(v, "/letters", &mut errs))
            .map(|a| {
                a.iter()
                    .enumerate()
                    .map(|(l, x)| parse_letter(x, l, states, &mut errs))
                    .collect::<Vec<_>>()
            });
        let lambda = get(obj, "lambda", &mut errs).and_then(|v| as_rat(v, "/lambda", &mut errs));
        if let Some(l) = &lambda {
            if l.is_negative() || *l > rat_int(1) {
                errs.push("/lambda", format!("cutpoint {l} is outside [0, 1]"));
            }
        }
        if let Some(n) = states {
            for (name, len) in [
                ("initial", initial.as_ref().map(Vec::len)),
                ("final", finals.as_ref().map(Vec::len)),
            ] {
                if let Some(len) = len.filter(|&len| len != n) {
                    errs.push(format!("/{name}"), format!("expected {n} entries, found {len}"));
                }
            }
        }
        // language checks need every letter name; skip them rather than cascade
        let letter_names: Option<Vec<String>> = letters
            .as_ref()
            .and_then(|ls| ls.iter().map(|l| l.as_ref().map(|l| l.name.clone())).collect());
        if let Some(names) = &letter_names {
            for (i, n) in names.iter().enumerate() {
                if names[..i].contains(n) {
                    errs.push(format!("/letters/{i}/name"), format!("duplicate letter name {n:?}"));
                }
            }
        }
        let language = get(obj, "language", &mut errs)
            .and_then(|v| parse_language(v, letter_names.as_deref(), &mut errs));

        if !errs.0.is_empty() {
            return Err(FormatError::Invalid(errs.0));
        }
        let initial: Vec<Rat> = initial.unwrap().into_iter().map(Option::unwrap).collect();
        let finals: Vec<i64> = finals.unwrap().into_iter().map(Option::unwrap).collect();
        let letters: Vec<Letter> = letters.unwrap().into_iter().map(Option::unwrap).collect();
        let violations = validate_pfa(&initial, &finals, &letters);
        if !violations.is_empty() {
            return Err(FormatError::Invalid(
                violations
                    .into_iter()
                    .map(|v| FieldError {
                        pointer: format!("/{}", v.location),
                        message: v.message,
                    })
                    .collect(),
            ));
        }
        let pfa = Pfa::new(initial, finals, letters).expect("validated");
        Ok(Self {
            pfa,
            language: language.unwrap(),
            lambda: lambda.unwrap(),
        })
    }

    /// The semilinear language, building the Parikh image for grammars.
    pub fn semilinear(&self) -> Result<SemilinearSet, FormatError> {
        match &self.language {
            LanguageSpec::Semilinear(s) => Ok(s.clone()),
            LanguageSpec::Grammar(text) => {
                let grammar = Grammar::parse(text).expect("checked when parsed");
                let names = self.pfa.letters().iter().map(|l| l.name.clone()).collect();
                let g = LetterBoundedGrammar::new(grammar, names).expect("checked when parsed");
                parikh_image(&g).map_err(|e| match e {
                    SemilinearError::Capacity(m) => FormatError::Capacity(m),
                    other => FormatError::Invalid(vec![FieldError {
                        pointer: "/language/grammar".into(),
                        message: other.to_string(),
                    }]),
                })
            }
        }
    }

    pub fn to_problem(&self) -> Result<Problem, FormatError> {
        let language = self.semilinear()?;
        Ok(Problem::new(self.pfa.clone(), language, self.lambda.clone()).expect("validated"))
    }

    pub fn from_problem(problem: &Problem) -> Self {
        Self {
            pfa: problem.pfa().clone(),
            language: LanguageSpec::Semilinear(problem.language().clone()),
            lambda: problem.lambda().clone(),
        }
    }

    pub fn to_json(&self) -> Value {
        let pfa = &self.pfa;
        let language = match &self.language {
            LanguageSpec::Grammar(text) => json!({ "grammar": text }),
            LanguageSpec::Semilinear(s) => json!({
                "semilinear": s.components().iter().map(|c| json!({
                    "base": c.base(),
                    "periods": c.periods(),
                })).collect::<Vec<_>>()
            }),
        };
        json!({
            "states": pfa.states(),
            "initial": pfa.initial().iter().map(format_rat).collect::<Vec<_>>(),
            "final": pfa.finals().iter().map(|&f| u8::from(f)).collect::<Vec<_>>(),
            "letters": pfa.letters().iter().map(|l| json!({
                "name": l.name,
                "matrix": matrix_json(&l.matrix),
            })).collect::<Vec<_>>(),
            "language": language,
            "lambda": format_rat(&self.lambda),
        })
    }

    pub fn to_pretty_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("serializable") + "\n"
    }
}

fn parse_letter(v: &Value, l: usize, states: Option<usize>, errs: &mut Errors) -> Option<Letter> {
    let at = format!("/letters/{l}");
    let Some(obj) = v.as_object() else {
        errs.push(at, "expected an object with \"name\" and \"matrix\"");
        return None;
    };
    let name = match obj.get("name") {
        Some(Value::String(s)) if !s.is_empty() && !s.chars().any(char::is_whitespace) => Some(s.clone()),
        Some(_) => {
            errs.push(format!("{at}/name"), "expected a non-empty name without spaces");
            None
        }
        None => {
            errs.push(format!("{at}/name"), "missing field");
            None
        }
    };
    let Some(rows) = obj.get("matrix") else {
        errs.push(format!("{at}/matrix"), "missing field");
        return None;
    };
    let rows = as_array(rows, &format!("{at}/matrix"), errs)?;
    let n = states.unwrap_or(rows.len());
    if rows.len() != n {
        errs.push(format!("{at}/matrix"), format!("expected {n} rows, found {}", rows.len()));
        return None;
    }
    let mut data = Vec::with_capacity(n * n);
    let mut ok = true;
    for (i, row) in rows.iter().enumerate() {
        let rat_at = format!("{at}/matrix/{i}");
        let Some(row) = as_array(row, &rat_at, errs) else {
            ok = false;
            continue;
        };
        if row.len() != n {
            errs.push(rat_at, format!("expected {n} entries, found {}", row.len()));
            ok = false;
            continue;
        }
        for (j, x) in row.iter().enumerate() {
            match as_rat(x, &format!("{at}/matrix/{i}/{j}"), errs) {
                Some(r) => data.push(r),
                None => ok = false,
            }
        }
    }
    if !ok {
        return None;
    }
    Some(Letter {
        name: name?,
        matrix: RatMatrix::new(n, n, data).expect("checked shape"),
    })
}

fn parse_language(v: &Value, letters: Option<&[String]>, errs: &mut Errors) -> Option<LanguageSpec> {
    let Some(obj) = v.as_object() else {
        errs.push("/language", "expected an object");
        return None;
    };
    match (obj.get("grammar"), obj.get("semilinear")) {
        (Some(_), Some(_)) | (None, None) => {
            errs.push("/language", "expected exactly one of \"grammar\" or \"semilinear\"");
            None
        }
        (Some(g), None) => {
            let Some(text) = g.as_str() else {
                errs.push("/language/grammar", "expected grammar text");
                return None;
            };
            let grammar = match Grammar::parse(text) {
                Ok(g) => g,
                Err(e) => {
                    errs.push("/language/grammar", e.to_string());
                    return None;
                }
            };
            let letters = letters?;
            if grammar.terminals() != letters {
                errs.push(
                    "/language/grammar",
                    format!(
                        "alphabet [{}] must list the letters [{}] in order",
                        grammar.terminals().join(" "),
                        letters.join(" ")
                    ),
                );
                return None;
            }
            if let Err(e) = LetterBoundedGrammar::new(grammar, letters.to_vec()) {
                errs.push("/language/grammar", e.to_string());
                return None;
            }
            Some(LanguageSpec::Grammar(text.to_string()))
        }
        (None, Some(s)) => {
            let comps = as_array(s, "/language/semilinear", errs)?;
            let dim = letters?.len();
            let mut out = Vec::new();
            for (i, c) in comps.iter().enumerate() {
                let at = format!("/language/semilinear/{i}");
                let Some(c) = c.as_object() else {
                    errs.push(at, "expected an object with \"base\" and \"periods\"");
                    continue;
                };
                let base = match c.get("base") {
                    Some(b) => nat_vector(b, &format!("{at}/base"), dim, errs),
                    None => {
                        errs.push(format!("{at}/base"), "missing field");
                        None
                    }
                };
                let periods = match c.get("periods") {
                    None => Some(Vec::new()),
                    Some(p) => as_array(p, &format!("{at}/periods"), errs).and_then(|ps| {
                        ps.iter()
                            .enumerate()
                            .map(|(k, p)| nat_vector(p, &format!("{at}/periods/{k}"), dim, errs))
                            .collect::<Vec<_>>()
                            .into_iter()
                            .collect::<Option<Vec<_>>>()
                    }),
                };
                if let (Some(b), Some(p)) = (base, periods) {
                    out.push(LinearSet::new(b, p).expect("checked dimensions"));
                }
            }
            Some(LanguageSpec::Semilinear(
                SemilinearSet::new(dim, out).expect("checked dimensions"),
            ))
        }
    }
}

fn matrix_json(m: &RatMatrix) -> Value {
    Value::Array(
        m.to_rows()
            .iter()
            .map(|r| Value::Array(r.iter().map(|x| Value::String(format_rat(x))).collect()))
            .collect(),
    )
}

pub fn witness_json(w: &Witness) -> Value {
    match w {
        Witness::Finite(t) => json!({ "finite": t }),
        Witness::Limit(l) => json!({
            "limit": {
                "component": l.component,
                "assignment": l.assignment,
                "residues": l.residues,
                "modulus": l.modulus,
                "value": format_rat(&l.value),
            }
        }),
    }
}

pub fn verdict_json(verdict: &Verdict) -> Value {
    match verdict {
        Verdict::Isolated { epsilon, note } => {
            let mut v = json!({ "verdict": "isolated", "epsilon": format_rat(epsilon) });
            if let Some(n) = note {
                v["note"] = json!(n);
            }
            v
        }
        Verdict::NonIsolated(w) => json!({ "verdict": "non-isolated", "witness": witness_json(w) }),
    }
}

pub fn trace_json(records: &[TraceRecord]) -> Value {
    Value::Array(
        records
            .iter()
            .map(|r| {
                let outcome = match &r.outcome {
                    TraceOutcome::Leaf { value } => json!({ "kind": "leaf", "value": format_rat(value) }),
                    TraceOutcome::Attained { value } => json!({ "kind": "attained", "value": format_rat(value) }),
                    TraceOutcome::LimitAttained => json!({ "kind": "limit-attained" }),
                    TraceOutcome::Branch { epsilon } => json!({ "kind": "branch", "epsilon": format_rat(epsilon) }),
                };
                json!({
                    "component": r.component,
                    "assignment": r.assignment,
                    "fixed": r.fixed.iter().map(|(j, k)| (j.to_string(), json!(k))).collect::<Map<_, _>>(),
                    "free": r.free,
                    "modulus": r.modulus,
                    "limit_values": r.limit_values.iter().map(format_rat).collect::<Vec<_>>(),
                    "constant": r.constant,
                    "outcome": outcome,
                })
            })
            .collect(),
    )
}

pub fn emptiness_json(outcome: &EmptinessOutcome) -> Value {
    match outcome {
        EmptinessOutcome::Empty => json!({ "outcome": "empty" }),
        EmptinessOutcome::NonEmpty(t) => json!({ "outcome": "non-empty", "witness": t }),
        EmptinessOutcome::NotIsolated => json!({ "outcome": "not-isolated" }),
    }
}

pub fn oracle_json(report: &OracleReport) -> Value {
    json!({
        "bound": report.bound,
        "samples": report.samples,
        "min_distance": report.min_distance.as_ref().map_or_else(|| "inf".to_string(), format_rat),
        "min_distance_approx": report.min_distance.as_ref().map(|d| d.to_f64()),
        "argmin": report.argmin,
    })
}

pub fn alternation_json(report: &AlternationReport) -> Value {
    let mut v = verdict_json(&report.verdict);
    v["sequences_explored"] = json!(report.sequences_explored);
    if let Some(s) = &report.sequence {
        v["sequence"] = json!(s);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::rat;

    const HALVING: &str = r#"{
        "states": 2,
        "initial": ["0", "1"],
        "final": [1, 0],
        "letters": [{"name": "a", "matrix": [["1", "0"], ["1/2", "1/2"]]}],
        "language": {"grammar": "alphabet: a\nS -> a S | ε"},
        "lambda": "9/10"
    }"#;

    fn pointers(e: FormatError) -> Vec<String> {
        match e {
            FormatError::Invalid(es) => es.into_iter().map(|e| e.pointer).collect(),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parses_grammar_problems() {
        let f = ProblemFile::parse(HALVING).unwrap();
        assert_eq!(f.lambda, rat(9, 10));
        let p = f.to_problem().unwrap();
        assert!(p.language().contains(&[7]));
        assert_eq!(p.pfa().value(&[2]), rat(3, 4));
    }

    #[test]
    fn round_trip_is_stable() {
        let f = ProblemFile::parse(HALVING).unwrap();
        let text = f.to_pretty_string();
        let g = ProblemFile::parse(&text).unwrap();
        assert_eq!(f, g);
        assert_eq!(text, g.to_pretty_string());
    }

    #[test]
    fn bad_rational_has_pointer() {
        let bad = HALVING.replace("\"1/2\", \"1/2\"", "\"1/0\", \"1/2\"");
        assert_eq!(pointers(ProblemFile::parse(&bad).unwrap_err()), vec!["/letters/0/matrix/1/0"]);
    }

    #[test]
    fn stochastic_violations_have_pointers() {
        let bad = HALVING.replace("\"1/2\", \"1/2\"", "\"1/2\", \"1/3\"");
        assert_eq!(pointers(ProblemFile::parse(&bad).unwrap_err()), vec!["/letters/0/matrix/1"]);
    }

    #[test]
    fn schema_errors_are_collected() {
        let bad = r#"{"states": 2, "initial": ["1"], "final": [1, 2],
            "letters": [], "language": {"semilinear": []}, "lambda": "3/2", "extra": 1}"#;
        assert_eq!(
            pointers(ProblemFile::parse(bad).unwrap_err()),
            vec!["/extra", "/final/1", "/lambda", "/initial"]
        );
    }

    #[test]
    fn grammar_alphabet_must_match_letters() {
        let bad = HALVING.replace("alphabet: a\\nS -> a S", "alphabet: b\\nS -> b S");
        assert_eq!(pointers(ProblemFile::parse(&bad).unwrap_err()), vec!["/language/grammar"]);
        let both = HALVING.replace(r#""language": {"#, r#""language": {"semilinear": [], "#);
        assert_eq!(pointers(ProblemFile::parse(&both).unwrap_err()), vec!["/language"]);
    }

    #[test]
    fn semilinear_dimension_errors() {
        let bad = HALVING.replace(
            r#"{"grammar": "alphabet: a\nS -> a S | ε"}"#,
            r#"{"semilinear": [{"base": [0, 1], "periods": [[-1]]}]}"#,
        );
        assert_eq!(
            pointers(ProblemFile::parse(&bad).unwrap_err()),
            vec!["/language/semilinear/0/base", "/language/semilinear/0/periods/0/0"]
        );
    }

    #[test]
    fn verdict_encodings() {
        let v = Verdict::Isolated { epsilon: rat(1, 40), note: None };
        assert_eq!(verdict_json(&v).to_string(), r#"{"epsilon":"1/40","verdict":"isolated"}"#);
        let v = Verdict::NonIsolated(Witness::Finite(vec![2]));
        assert_eq!(verdict_json(&v).to_string(), r#"{"verdict":"non-isolated","witness":{"finite":[2]}}"#);
        let r = OracleReport { min_distance: None, argmin: None, samples: 0, bound: 5 };
        assert_eq!(oracle_json(&r)["min_distance"], "inf");
    }
}
