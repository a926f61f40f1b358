//! Context-free grammars in the line-oriented text format, and the
//! letter-boundedness check.
//!
//! ```text
//! # comments run to end of line
//! alphabet: a b
//! S -> a S b | ε
//! ```
//!
//! The start symbol is the left-hand side of the first production. Every
//! left-hand side is a nonterminal; every other token must be a declared
//! letter. `ε`, `eps`, `epsilon` or an empty alternative denote the empty word.

use std::collections::HashMap;

use thiserror::Error;

use super::SemilinearError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: undeclared symbol '{symbol}'")]
    Undeclared { line: usize, symbol: String },
    #[error("'{0}' is declared both as a letter and as a nonterminal")]
    Ambiguous(String),
    #[error("letter '{0}' is declared twice")]
    DuplicateLetter(String),
    #[error("missing 'alphabet:' header line")]
    MissingAlphabet,
    #[error("grammar has no productions")]
    NoProductions,
    #[error("symbol index out of range in production {0}")]
    BadIndex(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Terminal(usize),
    Nonterminal(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Production {
    pub lhs: usize,
    pub rhs: Vec<Symbol>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    terminals: Vec<String>,
    nonterminals: Vec<String>,
    start: usize,
    productions: Vec<Production>,
}

const EPSILON_TOKENS: [&str; 3] = ["ε", "eps", "epsilon"];

impl Grammar {
    pub fn new(
        terminals: Vec<String>,
        nonterminals: Vec<String>,
        start: usize,
        productions: Vec<Production>,
    ) -> Result<Self, GrammarError> {
        if start >= nonterminals.len() {
            return Err(GrammarError::NoProductions);
        }
        for (i, p) in productions.iter().enumerate() {
            let bad = p.lhs >= nonterminals.len()
                || p.rhs.iter().any(|s| match *s {
                    Symbol::Terminal(t) => t >= terminals.len(),
                    Symbol::Nonterminal(n) => n >= nonterminals.len(),
                });
            if bad {
                return Err(GrammarError::BadIndex(i));
            }
        }
        Ok(Self {
            terminals,
            nonterminals,
            start,
            productions,
        })
    }

    pub fn parse(text: &str) -> Result<Self, GrammarError> {
        let mut alphabet: Option<Vec<String>> = None;
        let mut rules: Vec<(usize, String, String)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("alphabet:") {
                let letters: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
                for (i, l) in letters.iter().enumerate() {
                    if letters[..i].contains(l) {
                        return Err(GrammarError::DuplicateLetter(l.clone()));
                    }
                }
                alphabet = Some(letters);
                continue;
            }
            let (lhs, rhs) = line
                .split_once("->")
                .or_else(|| line.split_once('→'))
                .ok_or_else(|| GrammarError::Syntax {
                    line: line_no,
                    message: "expected 'LHS -> alternatives'".into(),
                })?;
            let lhs = lhs.trim();
            if lhs.is_empty() || lhs.split_whitespace().count() != 1 {
                return Err(GrammarError::Syntax {
                    line: line_no,
                    message: "left-hand side must be a single nonterminal".into(),
                });
            }
            rules.push((line_no, lhs.to_string(), rhs.to_string()));
        }
        let terminals = alphabet.ok_or(GrammarError::MissingAlphabet)?;
        if rules.is_empty() {
            return Err(GrammarError::NoProductions);
        }
        let mut nonterminals: Vec<String> = Vec::new();
        let mut nt_index: HashMap<String, usize> = HashMap::new();
        for (_, lhs, _) in &rules {
            if !nt_index.contains_key(lhs) {
                if terminals.contains(lhs) {
                    return Err(GrammarError::Ambiguous(lhs.clone()));
                }
                nt_index.insert(lhs.clone(), nonterminals.len());
                nonterminals.push(lhs.clone());
            }
        }
        let t_index: HashMap<&str, usize> = terminals
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();
        let mut productions = Vec::new();
        for (line, lhs, rhs) in &rules {
            let lhs = nt_index[lhs];
            for alt in rhs.split('|') {
                let mut symbols = Vec::new();
                for tok in alt.split_whitespace() {
                    if EPSILON_TOKENS.contains(&tok) {
                        continue;
                    }
                    let sym = if let Some(&n) = nt_index.get(tok) {
                        Symbol::Nonterminal(n)
                    } else if let Some(&t) = t_index.get(tok) {
                        Symbol::Terminal(t)
                    } else {
                        return Err(GrammarError::Undeclared {
                            line: *line,
                            symbol: tok.to_string(),
                        });
                    };
                    symbols.push(sym);
                }
                productions.push(Production { lhs, rhs: symbols });
            }
        }
        Self::new(terminals, nonterminals, 0, productions)
    }

    /// Renders the grammar back into the text format, one line per nonterminal.
    pub fn to_text(&self) -> String {
        let mut out = format!("alphabet: {}\n", self.terminals.join(" "));
        for (n, name) in self.nonterminals.iter().enumerate() {
            let alts: Vec<String> = self
                .productions
                .iter()
                .filter(|p| p.lhs == n)
                .map(|p| {
                    if p.rhs.is_empty() {
                        "ε".to_string()
                    } else {
                        p.rhs
                            .iter()
                            .map(|s| self.symbol_name(*s).to_string())
                            .collect::<Vec<_>>()
                            .join(" ")
                    }
                })
                .collect();
            if !alts.is_empty() {
                out.push_str(&format!("{name} -> {}\n", alts.join(" | ")));
            }
        }
        out
    }

    pub fn terminals(&self) -> &[String] {
        &self.terminals
    }

    pub fn nonterminals(&self) -> &[String] {
        &self.nonterminals
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn symbol_name(&self, s: Symbol) -> &str {
        match s {
            Symbol::Terminal(t) => &self.terminals[t],
            Symbol::Nonterminal(n) => &self.nonterminals[n],
        }
    }
}

/// Decides `L(g) ⊆ a₁*⋯a_ℓ*` for the letter order `order`.
///
/// Intersects `g` with the automaton for the complement of `a₁*⋯a_ℓ*` and
/// searches the product grammar for a shortest word; among shortest words the
/// lexicographically smallest (by letter names) is returned.
pub fn validate_letter_bounded(g: &Grammar, order: &[String]) -> Result<(), Vec<String>> {
    let l = order.len();
    // States 0..l track the block of the last letter read (start = 0); `dead` absorbs.
    let dead = l.max(1);
    let states = dead + 1;
    let position: Vec<Option<usize>> = g
        .terminals
        .iter()
        .map(|t| order.iter().position(|o| o == t))
        .collect();
    let step = |s: usize, t: usize| -> usize {
        if s == dead {
            return dead;
        }
        match position[t] {
            Some(j) if j >= s => j,
            _ => dead,
        }
    };

    type Word = Vec<usize>;
    let key = |w: &Word| -> (usize, Vec<&str>) {
        (w.len(), w.iter().map(|&t| g.terminals[t].as_str()).collect())
    };
    let better = |cand: &Word, cur: &Option<Word>| -> bool {
        match cur {
            None => true,
            Some(c) => key(cand) < key(c),
        }
    };

    let nts = g.nonterminals.len();
    let idx = |p: usize, x: usize, q: usize| (p * nts + x) * states + q;
    let mut best: Vec<Option<Word>> = vec![None; states * nts * states];
    loop {
        let mut changed = false;
        for prod in &g.productions {
            for p in 0..states {
                let mut cur: Vec<Option<Word>> = vec![None; states];
                cur[p] = Some(Vec::new());
                for sym in &prod.rhs {
                    let mut next: Vec<Option<Word>> = vec![None; states];
                    for s in 0..states {
                        let Some(prefix) = &cur[s] else { continue };
                        match *sym {
                            Symbol::Terminal(t) => {
                                let q = step(s, t);
                                let mut w = prefix.clone();
                                w.push(t);
                                if better(&w, &next[q]) {
                                    next[q] = Some(w);
                                }
                            }
                            Symbol::Nonterminal(y) => {
                                for q in 0..states {
                                    if let Some(suffix) = &best[idx(s, y, q)] {
                                        let mut w = prefix.clone();
                                        w.extend_from_slice(suffix);
                                        if better(&w, &next[q]) {
                                            next[q] = Some(w);
                                        }
                                    }
                                }
                            }
                        }
                    }
                    cur = next;
                }
                for (q, w) in cur.into_iter().enumerate() {
                    if let Some(w) = w {
                        let slot = &mut best[idx(p, prod.lhs, q)];
                        if better(&w, slot) {
                            *slot = Some(w);
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    match &best[idx(0, g.start, dead)] {
        None => Ok(()),
        Some(w) => Err(w.iter().map(|&t| g.terminals[t].clone()).collect()),
    }
}

/// A grammar together with a letter order it has been checked against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LetterBoundedGrammar {
    grammar: Grammar,
    order: Vec<String>,
    // grammar terminal -> position in `order`
    coordinate: Vec<Option<usize>>,
}

impl LetterBoundedGrammar {
    pub fn new(grammar: Grammar, order: Vec<String>) -> Result<Self, SemilinearError> {
        validate_letter_bounded(&grammar, &order).map_err(SemilinearError::NotLetterBounded)?;
        let coordinate = grammar
            .terminals
            .iter()
            .map(|t| order.iter().position(|o| o == t))
            .collect();
        Ok(Self {
            grammar,
            order,
            coordinate,
        })
    }

    /// Uses the grammar's own `alphabet:` line as the letter order.
    pub fn with_declared_order(grammar: Grammar) -> Result<Self, SemilinearError> {
        let order = grammar.terminals.clone();
        Self::new(grammar, order)
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn order(&self) -> &[String] {
        &self.order
    }

    pub(crate) fn coordinate(&self, terminal: usize) -> Option<usize> {
        self.coordinate[terminal]
    }
}
