//! Parikh image of a letter-bounded grammar as an explicit semilinear set.
//!
//! For every set `U` of nonterminals containing the start symbol:
//!
//! * bases are the Parikh vectors of complete derivation trees whose
//!   nonterminal set is exactly `U` and in which no root-to-leaf path
//!   carries any nonterminal more than `|U|` times;
//! * periods are the Parikh vectors of pump trees `X ⇒* αXβ` with `X ∈ U`,
//!   nonterminals drawn from `U`, and at most `|U| + 1` occurrences of any
//!   nonterminal on a path (root and foot included).
//!
//! Any tree with nonterminal set `U` shrinks to such a base by repeatedly
//! cutting out a pump between consecutive occurrences of a nonterminal at
//! the deepest over-full node: among `|U|` consecutive segments at most
//! `|U| − 1` can be the only home of some other nonterminal, so one segment
//! can go without changing the nonterminal set, and every segment cut this
//! way satisfies the pump bound. Conversely every such pump can be inserted
//! into every base of `U`. The union over `U` is therefore exact.

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use super::grammar::{LetterBoundedGrammar, Symbol};
use super::{LinearSet, SemilinearError, SemilinearSet};

pub const DEFAULT_MAX_NONTERMINALS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParikhOptions {
    /// Useful nonterminals beyond this count are a capacity error.
    pub max_nonterminals: usize,
    /// Ceiling on the number of memoised (vector, nonterminal set) pairs.
    pub max_entries: usize,
}

impl Default for ParikhOptions {
    fn default() -> Self {
        Self {
            max_nonterminals: DEFAULT_MAX_NONTERMINALS,
            max_entries: 2_000_000,
        }
    }
}

pub fn parikh_image(g: &LetterBoundedGrammar) -> Result<SemilinearSet, SemilinearError> {
    parikh_image_with(g, ParikhOptions::default())
}

type Entry = (Vec<u64>, u64);
type Entries = Rc<BTreeSet<Entry>>;

/// Grammar restricted to productive, reachable nonterminals, with terminals
/// already mapped to coordinates.
struct Trimmed {
    dim: usize,
    start: usize,
    count: usize,
    // per nonterminal: list of right-hand sides
    rules: Vec<Vec<Vec<Item>>>,
}

#[derive(Clone, Copy)]
enum Item {
    Letter(usize),
    Var(usize),
}

fn trim(g: &LetterBoundedGrammar) -> Option<Trimmed> {
    let grammar = g.grammar();
    let n = grammar.nonterminals().len();
    let prods = grammar.productions();

    let mut productive = vec![false; n];
    loop {
        let mut changed = false;
        for p in prods {
            if !productive[p.lhs]
                && p.rhs.iter().all(|s| match *s {
                    Symbol::Terminal(_) => true,
                    Symbol::Nonterminal(y) => productive[y],
                })
            {
                productive[p.lhs] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if !productive[grammar.start()] {
        return None;
    }
    let usable = |p: &&super::Production| {
        productive[p.lhs]
            && p.rhs.iter().all(|s| match *s {
                Symbol::Terminal(_) => true,
                Symbol::Nonterminal(y) => productive[y],
            })
    };
    let mut reachable = vec![false; n];
    reachable[grammar.start()] = true;
    let mut stack = vec![grammar.start()];
    while let Some(x) = stack.pop() {
        for p in prods.iter().filter(|p| p.lhs == x).filter(usable) {
            for s in &p.rhs {
                if let Symbol::Nonterminal(y) = *s {
                    if !reachable[y] {
                        reachable[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
    }
    let mut remap = vec![usize::MAX; n];
    let mut count = 0;
    for x in 0..n {
        if productive[x] && reachable[x] {
            remap[x] = count;
            count += 1;
        }
    }
    let mut rules = vec![Vec::new(); count];
    for p in prods.iter().filter(usable) {
        if remap[p.lhs] == usize::MAX {
            continue;
        }
        let rhs = p
            .rhs
            .iter()
            .map(|s| match *s {
                Symbol::Terminal(t) => Item::Letter(
                    g.coordinate(t)
                        .expect("letters of useful productions lie in the order"),
                ),
                Symbol::Nonterminal(y) => Item::Var(remap[y]),
            })
            .collect();
        rules[remap[p.lhs]].push(rhs);
    }
    Some(Trimmed {
        dim: g.order().len(),
        start: remap[grammar.start()],
        count,
        rules,
    })
}

struct Enumerator<'a> {
    g: &'a Trimmed,
    trees: HashMap<(usize, Vec<u8>), Entries>,
    pumps: HashMap<(usize, usize, Vec<u8>), Entries>,
    entries: usize,
    max_entries: usize,
}

impl<'a> Enumerator<'a> {
    fn new(g: &'a Trimmed, max_entries: usize) -> Self {
        Self {
            g,
            trees: HashMap::new(),
            pumps: HashMap::new(),
            entries: 0,
            max_entries,
        }
    }

    fn charge(&mut self, n: usize) -> Result<(), SemilinearError> {
        self.entries += n;
        if self.entries > self.max_entries {
            return Err(SemilinearError::Capacity(format!(
                "Parikh tree enumeration exceeded {} entries",
                self.max_entries
            )));
        }
        Ok(())
    }

    fn unit(&self, letter: usize) -> Vec<u64> {
        let mut v = vec![0; self.g.dim];
        v[letter] = 1;
        v
    }

    /// Complete trees rooted at `x` within the per-path occurrence budget.
    fn trees(&mut self, x: usize, budget: &[u8]) -> Result<Entries, SemilinearError> {
        if budget[x] == 0 {
            return Ok(Rc::new(BTreeSet::new()));
        }
        let key = (x, budget.to_vec());
        if let Some(hit) = self.trees.get(&key) {
            return Ok(hit.clone());
        }
        let mut inner = budget.to_vec();
        inner[x] -= 1;
        let mut out = BTreeSet::new();
        let g = self.g;
        for rhs in &g.rules[x] {
            let mut acc: BTreeSet<Entry> = BTreeSet::from([(vec![0; g.dim], 1u64 << x)]);
            for item in rhs {
                acc = match *item {
                    Item::Letter(l) => {
                        let u = self.unit(l);
                        acc.into_iter().map(|(v, m)| (add(&v, &u), m)).collect()
                    }
                    Item::Var(y) => {
                        let child = self.trees(y, &inner)?;
                        combine(&acc, &child)
                    }
                };
                if acc.is_empty() {
                    break;
                }
            }
            out.extend(acc);
        }
        self.charge(out.len())?;
        let out = Rc::new(out);
        self.trees.insert(key, out.clone());
        Ok(out)
    }

    /// Trees rooted at `x` with exactly one unexpanded leaf labelled `foot`.
    fn pumps(&mut self, x: usize, foot: usize, budget: &[u8]) -> Result<Entries, SemilinearError> {
        if budget[x] == 0 {
            return Ok(Rc::new(BTreeSet::new()));
        }
        let key = (x, foot, budget.to_vec());
        if let Some(hit) = self.pumps.get(&key) {
            return Ok(hit.clone());
        }
        let mut inner = budget.to_vec();
        inner[x] -= 1;
        let mut out = BTreeSet::new();
        let g = self.g;
        for rhs in &g.rules[x] {
            for (hole, item) in rhs.iter().enumerate() {
                let Item::Var(y) = *item else { continue };
                let mut through: BTreeSet<Entry> = (*self.pumps(y, foot, &inner)?).clone();
                if y == foot && inner[foot] > 0 {
                    through.insert((vec![0; g.dim], 1u64 << foot));
                }
                if through.is_empty() {
                    continue;
                }
                let mut acc: BTreeSet<Entry> = BTreeSet::from([(vec![0; g.dim], 1u64 << x)]);
                for (pos, other) in rhs.iter().enumerate() {
                    acc = if pos == hole {
                        combine(&acc, &through)
                    } else {
                        match *other {
                            Item::Letter(l) => {
                                let u = self.unit(l);
                                acc.into_iter().map(|(v, m)| (add(&v, &u), m)).collect()
                            }
                            Item::Var(z) => {
                                let child = self.trees(z, &inner)?;
                                combine(&acc, &child)
                            }
                        }
                    };
                    if acc.is_empty() {
                        break;
                    }
                }
                out.extend(acc);
            }
        }
        self.charge(out.len())?;
        let out = Rc::new(out);
        self.pumps.insert(key, out.clone());
        Ok(out)
    }
}

fn add(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn combine(acc: &BTreeSet<Entry>, child: &BTreeSet<Entry>) -> BTreeSet<Entry> {
    let mut out = BTreeSet::new();
    for (v, m) in acc {
        for (w, n) in child {
            out.insert((add(v, w), m | n));
        }
    }
    out
}

pub fn parikh_image_with(
    g: &LetterBoundedGrammar,
    options: ParikhOptions,
) -> Result<SemilinearSet, SemilinearError> {
    let dim = g.order().len();
    let Some(t) = trim(g) else {
        return Ok(SemilinearSet::empty(dim));
    };
    if t.count > options.max_nonterminals || t.count >= 64 {
        return Err(SemilinearError::Capacity(format!(
            "{} useful nonterminals exceed the limit of {}",
            t.count, options.max_nonterminals
        )));
    }
    let mut en = Enumerator::new(&t, options.max_entries);
    let mut components: Vec<LinearSet> = Vec::new();
    let others: Vec<usize> = (0..t.count).filter(|&x| x != t.start).collect();
    for subset in 0u64..(1u64 << others.len()) {
        let mut mask = 1u64 << t.start;
        for (bit, &x) in others.iter().enumerate() {
            if subset >> bit & 1 == 1 {
                mask |= 1 << x;
            }
        }
        let size = mask.count_ones() as u8;
        let in_u = |x: usize| mask >> x & 1 == 1;
        let base_budget: Vec<u8> = (0..t.count).map(|x| if in_u(x) { size } else { 0 }).collect();
        let bases: Vec<Vec<u64>> = en
            .trees(t.start, &base_budget)?
            .iter()
            .filter(|(_, m)| *m == mask)
            .map(|(v, _)| v.clone())
            .collect();
        if bases.is_empty() {
            continue;
        }
        let pump_budget: Vec<u8> = base_budget.iter().map(|&b| if b > 0 { b + 1 } else { 0 }).collect();
        let mut periods: BTreeSet<Vec<u64>> = BTreeSet::new();
        for x in (0..t.count).filter(|&x| in_u(x)) {
            for (v, _) in en.pumps(x, x, &pump_budget)?.iter() {
                if v.iter().any(|&c| c != 0) {
                    periods.insert(v.clone());
                }
            }
        }
        let periods: Vec<Vec<u64>> = periods.into_iter().collect();
        for b in bases {
            components.push(LinearSet {
                base: b,
                periods: periods.clone(),
            });
        }
    }
    Ok(SemilinearSet {
        dim,
        components: prune_contained(components),
    })
}

/// Drops components contained in another one (by base membership and
/// period generation); the first of two equal components survives.
/// Drops periods that are non-negative combinations of the other periods;
/// the set is unchanged.
fn drop_redundant_periods(mut c: LinearSet) -> LinearSet {
    c.periods.sort_by_key(|p| std::cmp::Reverse(p.iter().sum::<u64>()));
    let mut i = 0;
    while i < c.periods.len() {
        let others: Vec<Vec<u64>> = c
            .periods
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, p)| p.clone())
            .collect();
        if super::solve_nonneg(&others, c.periods[i].clone()) {
            c.periods.remove(i);
        } else {
            i += 1;
        }
    }
    c.periods.sort();
    c
}

fn prune_contained(components: Vec<LinearSet>) -> Vec<LinearSet> {
    let mut components: Vec<LinearSet> = components.into_iter().map(drop_redundant_periods).collect();
    components.sort();
    components.dedup();
    let contains = |outer: &LinearSet, inner: &LinearSet| {
        outer.contains(&inner.base)
            && inner
                .periods
                .iter()
                .all(|p| super::solve_nonneg(&outer.periods, p.clone()))
    };
    let keep: Vec<bool> = (0..components.len())
        .map(|i| {
            !(0..components.len()).any(|j| {
                j != i
                    && contains(&components[j], &components[i])
                    && (j < i || !contains(&components[i], &components[j]))
            })
        })
        .collect();
    components
        .into_iter()
        .zip(keep)
        .filter_map(|(c, k)| k.then_some(c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semilinear::{enumerate_points, is_stratified, Grammar};

    fn image(text: &str) -> SemilinearSet {
        let g = LetterBoundedGrammar::with_declared_order(Grammar::parse(text).unwrap()).unwrap();
        parikh_image(&g).unwrap()
    }

    #[test]
    fn epsilon_only() {
        let s = image("alphabet: a\nS -> ε");
        assert_eq!(s.components(), &[LinearSet::point(vec![0])]);
    }

    #[test]
    fn balanced() {
        let s = image("alphabet: a b\nS -> a S b | ε");
        assert_eq!(
            s.components(),
            &[LinearSet::new(vec![0, 0], vec![vec![1, 1]]).unwrap()]
        );
        assert!(is_stratified(&s));
    }

    #[test]
    fn two_blocks() {
        let s = image("alphabet: a b\nS -> a S | B\nB -> b B | ε");
        let pts: Vec<_> = enumerate_points(&s, 6).collect();
        assert_eq!(pts.len(), 49);
        assert!(s
            .components()
            .iter()
            .any(|c| c.base() == [0, 0] && c.periods().contains(&vec![1, 0]) && c.periods().contains(&vec![0, 1])));
    }

    #[test]
    fn empty_language() {
        let s = image("alphabet: a\nS -> a S");
        assert!(s.is_empty());
        assert_eq!(s.dim(), 1);
    }

    #[test]
    fn capacity_is_reported() {
        let mut text = String::from("alphabet: a\nS -> N1\n");
        for i in 1..=9 {
            text.push_str(&format!("N{i} -> a N{} | ε\n", i + 1));
        }
        text.push_str("N10 -> ε\n");
        let g = LetterBoundedGrammar::with_declared_order(Grammar::parse(&text).unwrap()).unwrap();
        assert!(matches!(parikh_image(&g), Err(SemilinearError::Capacity(_))));
    }
}
