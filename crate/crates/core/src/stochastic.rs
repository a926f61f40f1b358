//! PFA data model and the limit machinery for powers of stochastic matrices.
//!
//! For a row-stochastic `A` every eigenvalue of modulus one is a root of
//! unity of order at most `n`, with trivial Jordan blocks. Taking `D` as the
//! lcm of those orders, `B = A^D` has `1` as its only unimodular eigenvalue,
//! so `B^m` converges to the spectral projection `P`. Everything is computed
//! over the rationals from the minimal polynomial of `B`.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::exactmath::{
    char_poly, cyclotomic, dot, lcm_u64, min_poly, pow2, vec_mat, MathError, Rat,
    RatMatrix, RatPoly,
};

/// Default ceiling for the doubling search of `m₀`.
pub const DEFAULT_DECAY_CEILING: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LimitError {
    #[error("matrix is not row-stochastic")]
    NotStochastic,
    #[error("minimal polynomial of A^{period} has a repeated factor (x-1)")]
    DefectiveUnitEigenvalue { period: u64 },
    #[error("minimal polynomial of A^{period} has no factor (x-1)")]
    MissingUnitEigenvalue { period: u64 },
    #[error("decay search exceeded the ceiling of {ceiling} powers")]
    DecayCeiling { ceiling: u64 },
    #[error(transparent)]
    Math(#[from] MathError),
}

/// One located problem with a would-be PFA.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid PFA: {}", .0.iter().map(|v| v.message.clone()).collect::<Vec<_>>().join("; "))]
pub struct InvalidPfa(pub Vec<Violation>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Letter {
    pub name: String,
    pub matrix: RatMatrix,
}

/// Probabilistic finite automaton `(u, {A_i}, v)` over an ordered alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pfa {
    initial: Vec<Rat>,
    finals: Vec<bool>,
    letters: Vec<Letter>,
}

/// Checks every PFA invariant and reports each violation with its location.
///
/// `finals` is taken as raw integers so that entries outside `{0, 1}` can be reported.
pub fn validate_pfa(initial: &[Rat], finals: &[i64], letters: &[Letter]) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = initial.len();
    let mut push = |location: String, message: String| out.push(Violation { location, message });
    if n == 0 {
        push("initial".into(), "PFA must have at least one state".into());
    }
    for (i, x) in initial.iter().enumerate() {
        if x.is_negative() {
            push(
                format!("initial/{i}"),
                format!("entry {} of u is negative ({x})", i + 1),
            );
        }
    }
    let total = initial.iter().fold(Rat::zero(), |a, x| a + x);
    if n > 0 && !total.is_one() {
        push("initial".into(), format!("u sums to {total}, expected 1"));
    }
    if finals.len() != n {
        push(
            "final".into(),
            format!("v has length {}, expected {n}", finals.len()),
        );
    }
    for (i, &f) in finals.iter().enumerate() {
        if f != 0 && f != 1 {
            push(
                format!("final/{i}"),
                format!("entry {} of v is {f}, expected 0 or 1", i + 1),
            );
        }
    }
    for (l, letter) in letters.iter().enumerate() {
        let a = &letter.matrix;
        let tag = format!("A{}", l + 1);
        if a.rows() != n || a.cols() != n {
            push(
                format!("letters/{l}/matrix"),
                format!("{tag} is {}x{}, expected {n}x{n}", a.rows(), a.cols()),
            );
            continue;
        }
        for i in 0..n {
            for (j, x) in a.row(i).iter().enumerate() {
                if x.is_negative() {
                    push(
                        format!("letters/{l}/matrix/{i}/{j}"),
                        format!("entry ({}, {}) of {tag} is negative ({x})", i + 1, j + 1),
                    );
                }
            }
            let s = a.row(i).iter().fold(Rat::zero(), |acc, x| acc + x);
            if !s.is_one() {
                push(
                    format!("letters/{l}/matrix/{i}"),
                    format!("row {} of {tag} sums to {s}", i + 1),
                );
            }
        }
    }
    out
}

/// Exponent of one letter: a concrete power, or the limit along a residue class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExponentAssignment {
    Finite(u64),
    Omega(u64),
}

impl Pfa {
    pub fn new(initial: Vec<Rat>, finals: Vec<i64>, letters: Vec<Letter>) -> Result<Self, InvalidPfa> {
        let violations = validate_pfa(&initial, &finals, &letters);
        if !violations.is_empty() {
            return Err(InvalidPfa(violations));
        }
        Ok(Self {
            initial,
            finals: finals.into_iter().map(|f| f == 1).collect(),
            letters,
        })
    }

    /// Unnamed letters `a1, a2, …` in order.
    pub fn from_matrices(
        initial: Vec<Rat>,
        finals: Vec<i64>,
        matrices: Vec<RatMatrix>,
    ) -> Result<Self, InvalidPfa> {
        let letters = matrices
            .into_iter()
            .enumerate()
            .map(|(i, matrix)| Letter {
                name: format!("a{}", i + 1),
                matrix,
            })
            .collect();
        Self::new(initial, finals, letters)
    }

    pub fn states(&self) -> usize {
        self.initial.len()
    }

    pub fn letter_count(&self) -> usize {
        self.letters.len()
    }

    pub fn initial(&self) -> &[Rat] {
        &self.initial
    }

    pub fn finals(&self) -> &[bool] {
        &self.finals
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn matrix(&self, letter: usize) -> &RatMatrix {
        &self.letters[letter].matrix
    }

    pub fn final_vector(&self) -> Vec<Rat> {
        self.finals
            .iter()
            .map(|&f| if f { Rat::one() } else { Rat::zero() })
            .collect()
    }

    /// `⟨u| A₁^{k₁} ⋯ A_ℓ^{k_ℓ} |v⟩`, exactly.
    pub fn value(&self, exponents: &[u64]) -> Rat {
        assert_eq!(
            exponents.len(),
            self.letters.len(),
            "one exponent per letter"
        );
        let mut row = self.initial.clone();
        for (letter, &k) in self.letters.iter().zip(exponents) {
            row = apply_power(&row, &letter.matrix, k);
        }
        dot(&row, &self.final_vector())
    }

    /// Value with each letter replaced by an explicit matrix (a power or a limit).
    pub fn value_of_product<'a>(&self, factors: impl IntoIterator<Item = &'a RatMatrix>) -> Rat {
        let mut row = self.initial.clone();
        for m in factors {
            row = vec_mat(&row, m);
        }
        dot(&row, &self.final_vector())
    }

    /// Value with some exponents at `ω`, using the letter's limit system for those.
    ///
    /// `systems[j]` must be present for every `Omega` position `j`.
    pub fn value_at(
        &self,
        exponents: &[ExponentAssignment],
        systems: &[Option<&LimitSystem>],
    ) -> Rat {
        let mut row = self.initial.clone();
        for (j, e) in exponents.iter().enumerate() {
            row = match *e {
                ExponentAssignment::Finite(k) => apply_power(&row, self.matrix(j), k),
                ExponentAssignment::Omega(r) => {
                    let ls = systems[j].expect("limit system for an omega exponent");
                    vec_mat(&row, ls.limit_matrix(r))
                }
            };
        }
        dot(&row, &self.final_vector())
    }
}

/// `row · m^k` using whichever of iteration or squaring is cheaper.
pub fn apply_power(row: &[Rat], m: &RatMatrix, k: u64) -> Vec<Rat> {
    let n = m.rows() as u64;
    if k <= 2 * n.max(1) * 4 {
        let mut r = row.to_vec();
        for _ in 0..k {
            r = vec_mat(&r, m);
        }
        r
    } else {
        vec_mat(row, &m.pow(k).expect("square letter matrix"))
    }
}

/// `lcm{ k ≤ n : Φ_k | charpoly(a) }`.
pub fn dominant_period(a: &RatMatrix) -> Result<u64, LimitError> {
    if !a.is_square() || !a.is_row_stochastic() {
        return Err(LimitError::NotStochastic);
    }
    let chi = char_poly(a)?;
    let mut d = 1u64;
    for k in 1..=a.rows() {
        if cyclotomic(k).divides(&chi)? {
            d = lcm_u64(d, k as u64);
        }
    }
    Ok(d)
}

/// `lim_m (a^period)^m`, computed as `h(B)/h(1)` where `minpoly(B) = (x−1)·h(x)`.
pub fn power_projection(a: &RatMatrix, period: u64) -> Result<RatMatrix, LimitError> {
    let b = a.pow(period)?;
    let mu = min_poly(&b)?;
    let x_minus_one = RatPoly::linear(&Rat::one());
    let (h, rem) = mu.div_rem(&x_minus_one)?;
    if !rem.is_zero() {
        return Err(LimitError::MissingUnitEigenvalue { period });
    }
    let h_at_one = h.eval(&Rat::one());
    if h_at_one.is_zero() {
        return Err(LimitError::DefectiveUnitEigenvalue { period });
    }
    Ok(h.eval_matrix(&b)?.scale(&(Rat::one() / h_at_one)))
}

/// Certificate of geometric decay of `B^m − P`.
///
/// `‖(B−P)^{m0}‖ ≤ 1/2` and `bound = max_{0≤s<m0} ‖B^s − P‖`, which gives
/// `‖A^k − P·A^{k mod D}‖ ≤ bound · 2^{−⌊⌊k/D⌋/m0⌋}` for every `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecayCert {
    pub m0: u64,
    pub bound: Rat,
}

pub fn decay_certificate(
    a: &RatMatrix,
    period: u64,
    projection: &RatMatrix,
    ceiling: u64,
) -> Result<DecayCert, LimitError> {
    let b = a.pow(period)?;
    let residual = b.sub(projection)?;
    let half = BigRational::new(1.into(), 2.into());
    let mut m0 = 1u64;
    let mut power = residual.clone();
    while power.inf_norm() > half {
        if m0 >= ceiling {
            return Err(LimitError::DecayCeiling { ceiling });
        }
        power = power.matmul(&power)?;
        m0 *= 2;
    }
    let n = a.rows();
    let mut bound = RatMatrix::identity(n).sub(projection)?.inf_norm();
    let mut bs = RatMatrix::identity(n);
    for _ in 1..m0 {
        bs = bs.matmul(&b)?;
        let norm = bs.sub(projection)?.inf_norm();
        if norm > bound {
            bound = norm;
        }
    }
    Ok(DecayCert { m0, bound })
}

/// Limit data for the powers of one letter's matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LimitSystem {
    pub letter: usize,
    pub period: u64,
    pub projection: RatMatrix,
    pub decay: DecayCert,
    // limits[r] = P · A^r for r < period
    limits: Vec<RatMatrix>,
}

impl LimitSystem {
    pub fn compute(letter: usize, a: &RatMatrix) -> Result<Self, LimitError> {
        Self::compute_with_ceiling(letter, a, DEFAULT_DECAY_CEILING)
    }

    pub fn compute_with_ceiling(
        letter: usize,
        a: &RatMatrix,
        ceiling: u64,
    ) -> Result<Self, LimitError> {
        let period = dominant_period(a)?;
        let projection = power_projection(a, period)?;
        let decay = decay_certificate(a, period, &projection, ceiling)?;
        let mut limits = Vec::with_capacity(period as usize);
        let mut current = projection.clone();
        for _ in 0..period {
            let next = current.matmul(a)?;
            limits.push(current);
            current = next;
        }
        Ok(Self {
            letter,
            period,
            projection,
            decay,
            limits,
        })
    }

    /// Hand-built system, used when only the certificate matters.
    pub fn from_parts(letter: usize, a: &RatMatrix, period: u64, projection: RatMatrix, decay: DecayCert) -> Self {
        let mut limits = Vec::with_capacity(period as usize);
        let mut current = projection.clone();
        for _ in 0..period {
            let next = current.matmul(a).expect("square");
            limits.push(current);
            current = next;
        }
        Self {
            letter,
            period,
            projection,
            decay,
            limits,
        }
    }

    /// `lim_m A^{D·m + residue} = P · A^{residue mod D}`.
    pub fn limit_matrix(&self, residue: u64) -> &RatMatrix {
        &self.limits[(residue % self.period) as usize]
    }

    /// `K · 2^{−⌊⌊k/D⌋/m0⌋}`
    pub fn err_bound(&self, k: u64) -> Rat {
        let halvings = (k / self.period) / self.decay.m0;
        if self.decay.bound.is_zero() {
            return Rat::zero();
        }
        &self.decay.bound / Rat::from_integer(pow2(halvings))
    }

    /// Number of steps in `k` after which the bound halves again.
    pub fn halving_step(&self) -> u64 {
        self.period * self.decay.m0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::{rat, rat_int};

    fn m(rows: &[&[(i64, i64)]]) -> RatMatrix {
        RatMatrix::from_fractions(rows)
    }

    fn swap() -> RatMatrix {
        m(&[&[(0, 1), (1, 1)], &[(1, 1), (0, 1)]])
    }

    fn absorbing() -> RatMatrix {
        m(&[&[(1, 1), (0, 1)], &[(1, 2), (1, 2)]])
    }

    #[test]
    fn validation_examples() {
        let ok = validate_pfa(
            &[rat_int(1), rat_int(0)],
            &[0, 1],
            &[Letter {
                name: "a".into(),
                matrix: RatMatrix::identity(2),
            }],
        );
        assert!(ok.is_empty());

        let bad_row = validate_pfa(
            &[rat_int(1), rat_int(0)],
            &[0, 1],
            &[Letter {
                name: "a".into(),
                matrix: m(&[&[(1, 2), (2, 5)], &[(0, 1), (1, 1)]]),
            }],
        );
        assert_eq!(bad_row.len(), 1);
        assert_eq!(bad_row[0].message, "row 1 of A1 sums to 9/10");

        let neg = validate_pfa(&[rat(3, 2), rat(-1, 2)], &[0, 1], &[]);
        assert!(neg.iter().any(|v| v.location == "initial/1"));

        let finals = validate_pfa(&[rat_int(1)], &[2], &[]);
        assert_eq!(finals[0].location, "final/0");
    }

    #[test]
    fn value_examples() {
        let p = Pfa::from_matrices(vec![rat_int(0), rat_int(1)], vec![1, 0], vec![absorbing()]).unwrap();
        assert_eq!(p.value(&[0]), rat_int(0));
        assert_eq!(p.value(&[3]), rat(7, 8));
        for k in 0..20u64 {
            assert_eq!(p.value(&[k]), rat_int(1) - Rat::new(1.into(), pow2(k)));
        }
        assert_eq!(p.value(&[40]), p.value_of_product([&absorbing().pow(40).unwrap()]));
    }

    #[test]
    fn period_examples() {
        assert_eq!(dominant_period(&RatMatrix::identity(2)).unwrap(), 1);
        assert_eq!(dominant_period(&swap()).unwrap(), 2);
        assert_eq!(dominant_period(&absorbing()).unwrap(), 1);
        let cycle3 = m(&[
            &[(0, 1), (1, 1), (0, 1)],
            &[(0, 1), (0, 1), (1, 1)],
            &[(1, 1), (0, 1), (0, 1)],
        ]);
        assert_eq!(dominant_period(&cycle3).unwrap(), 3);
        assert_eq!(
            dominant_period(&m(&[&[(1, 2), (1, 3)], &[(0, 1), (1, 1)]])),
            Err(LimitError::NotStochastic)
        );
    }

    #[test]
    fn projection_examples() {
        assert_eq!(
            power_projection(&RatMatrix::identity(2), 1).unwrap(),
            RatMatrix::identity(2)
        );
        let p = power_projection(&absorbing(), 1).unwrap();
        assert_eq!(p, m(&[&[(1, 1), (0, 1)], &[(1, 1), (0, 1)]]));
        let b60 = absorbing().pow(60).unwrap().to_f64();
        let pf = p.to_f64();
        for i in 0..2 {
            for j in 0..2 {
                assert!((b60[i][j] - pf[i][j]).abs() < 1e-12);
            }
        }
        assert_eq!(power_projection(&swap(), 2).unwrap(), RatMatrix::identity(2));
        // period 1 on the swap leaves −1 as an eigenvalue of B; P is then not a limit,
        // but the split still succeeds. A Jordan block at 1 must fail loudly.
        let jordan = m(&[&[(1, 1), (1, 1)], &[(0, 1), (1, 1)]]);
        assert_eq!(
            power_projection(&jordan, 1),
            Err(LimitError::DefectiveUnitEigenvalue { period: 1 })
        );
    }

    #[test]
    fn limit_matrix_examples() {
        let ls = LimitSystem::compute(0, &swap()).unwrap();
        assert_eq!(ls.limit_matrix(0), &RatMatrix::identity(2));
        assert_eq!(ls.limit_matrix(1), &swap());
        assert_eq!(ls.limit_matrix(7), &swap());
        let ls = LimitSystem::compute(0, &absorbing()).unwrap();
        assert_eq!(ls.limit_matrix(0), &m(&[&[(1, 1), (0, 1)], &[(1, 1), (0, 1)]]));
        let ls = LimitSystem::compute(0, &RatMatrix::identity(3)).unwrap();
        assert_eq!(ls.limit_matrix(5), &RatMatrix::identity(3));
    }

    #[test]
    fn decay_examples() {
        let id = RatMatrix::identity(2);
        let cert = decay_certificate(&id, 1, &id, DEFAULT_DECAY_CEILING).unwrap();
        assert_eq!(cert, DecayCert { m0: 1, bound: rat_int(0) });

        let a = absorbing();
        let p = power_projection(&a, 1).unwrap();
        let cert = decay_certificate(&a, 1, &p, DEFAULT_DECAY_CEILING).unwrap();
        // ‖B−P‖ = 1, ‖(B−P)²‖ = 1/2; ‖I−P‖ = 2 dominates the bound.
        assert_eq!(cert, DecayCert { m0: 2, bound: rat_int(2) });
        let r2 = a.sub(&p).unwrap().pow(2).unwrap();
        assert_eq!(r2, m(&[&[(0, 1), (0, 1)], &[(-1, 4), (1, 4)]]));

        let s = swap();
        let cert = decay_certificate(&s, 2, &id, DEFAULT_DECAY_CEILING).unwrap();
        assert_eq!(cert.m0, 1);
    }

    #[test]
    fn err_bound_examples() {
        let ls = LimitSystem::compute(0, &absorbing()).unwrap();
        assert_eq!(ls.err_bound(0), rat_int(2));
        assert_eq!(ls.err_bound(8), rat(1, 8));
        let a8 = absorbing().pow(8).unwrap();
        let residual = a8.sub(ls.limit_matrix(8)).unwrap().inf_norm();
        assert_eq!(residual, rat(1, 128));
        assert!(residual <= ls.err_bound(8));

        let ls = LimitSystem::compute(0, &RatMatrix::identity(2)).unwrap();
        assert_eq!(ls.err_bound(0), rat_int(0));
        assert_eq!(ls.err_bound(9), rat_int(0));
    }

    #[test]
    fn decay_ceiling_is_reported() {
        // B − P has norm 1 − 1/64 at power one; a ceiling of 1 stops the search.
        let a = m(&[&[(63, 64), (1, 64)], &[(1, 64), (63, 64)]]);
        let err = LimitSystem::compute_with_ceiling(0, &a, 1).unwrap_err();
        assert_eq!(err, LimitError::DecayCeiling { ceiling: 1 });
    }

    #[test]
    fn value_at_uses_limits() {
        let p = Pfa::from_matrices(vec![rat_int(0), rat_int(1)], vec![1, 0], vec![absorbing()]).unwrap();
        let ls = LimitSystem::compute(0, &absorbing()).unwrap();
        assert_eq!(
            p.value_at(&[ExponentAssignment::Omega(0)], &[Some(&ls)]),
            rat_int(1)
        );
        assert_eq!(
            p.value_at(&[ExponentAssignment::Finite(2)], &[None]),
            rat(3, 4)
        );
    }
}
