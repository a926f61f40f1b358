//! Exact rational scalars, matrices and univariate polynomials.
//!
//! Nothing in here rounds. Every decision made elsewhere in the crate is
//! built on these types, so floating point never enters a verdict.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Arbitrary-precision rational, always in lowest terms with a positive denominator.
pub type Rat = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MathError {
    #[error("dimension mismatch: {left_rows}x{left_cols} times {right_rows}x{right_cols}")]
    DimensionMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix shape {rows}x{cols} does not match {len} entries")]
    BadShape { rows: usize, cols: usize, len: usize },
    #[error("division by the zero polynomial")]
    ZeroPolynomial,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRatError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid integer '{0}'")]
    InvalidInteger(String),
    #[error("zero denominator")]
    ZeroDenominator,
}

/// `n/d` as a [`Rat`]. Panics on a zero denominator.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses `p/q` or a plain integer literal. No decimals, no whitespace inside.
pub fn parse_rat(s: &str) -> Result<Rat, ParseRatError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ParseRatError::Empty);
    }
    let parse_int = |t: &str| -> Result<BigInt, ParseRatError> {
        let digits = t.strip_prefix(['-', '+']).unwrap_or(t);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ParseRatError::InvalidInteger(t.to_string()));
        }
        t.parse::<BigInt>()
            .map_err(|_| ParseRatError::InvalidInteger(t.to_string()))
    };
    match s.split_once('/') {
        None => Ok(Rat::from_integer(parse_int(s)?)),
        Some((n, d)) => {
            let n = parse_int(n)?;
            let d = parse_int(d)?;
            if d.is_zero() {
                return Err(ParseRatError::ZeroDenominator);
            }
            Ok(Rat::new(n, d))
        }
    }
}

/// Canonical string form: `p/q`, or `p` when the denominator is one.
pub fn format_rat(r: &Rat) -> String {
    r.to_string()
}

/// Dense row-major rational matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl RatMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Rat>) -> Result<Self, MathError> {
        if data.len() != rows * cols {
            return Err(MathError::BadShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Result<Self, MathError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let len: usize = rows.iter().map(Vec::len).sum();
        if rows.iter().any(|row| row.len() != c) {
            return Err(MathError::BadShape { rows: r, cols: c, len });
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    /// Convenience constructor for tests and fixtures: `(numerator, denominator)` pairs.
    pub fn from_fractions(rows: &[&[(i64, i64)]]) -> Self {
        let rows = rows
            .iter()
            .map(|row| row.iter().map(|&(n, d)| rat(n, d)).collect())
            .collect();
        Self::from_rows(rows).expect("rectangular fixture")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Rat::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Rat::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Rat) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[Rat] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<Rat>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    fn require_square(&self) -> Result<usize, MathError> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(MathError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    /// Exact product `self · other`.
    pub fn matmul(&self, other: &RatMatrix) -> Result<RatMatrix, MathError> {
        if self.cols != other.rows {
            return Err(MathError::DimensionMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut out = RatMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `self^k` by repeated squaring; `self^0` is the identity.
    pub fn pow(&self, mut k: u64) -> Result<RatMatrix, MathError> {
        let n = self.require_square()?;
        let mut result = RatMatrix::identity(n);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = result.matmul(&base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.matmul(&base)?;
            }
        }
        Ok(result)
    }

    fn zip_with(
        &self,
        other: &RatMatrix,
        f: impl Fn(&Rat, &Rat) -> Rat,
    ) -> Result<RatMatrix, MathError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(MathError::DimensionMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| f(a, b))
            .collect();
        Ok(RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn add(&self, other: &RatMatrix) -> Result<RatMatrix, MathError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &RatMatrix) -> Result<RatMatrix, MathError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: &Rat) -> RatMatrix {
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn trace(&self) -> Rat {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i).clone())
            .fold(Rat::zero(), |acc, x| acc + x)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> Rat {
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .fold(Rat::zero(), |acc, x| acc + x.abs())
            })
            .max()
            .unwrap_or_else(Rat::zero)
    }

    /// True when every entry is non-negative and every row sums to exactly one.
    pub fn is_row_stochastic(&self) -> bool {
        (0..self.rows).all(|i| {
            let row = self.row(i);
            row.iter().all(|x| !x.is_negative())
                && row.iter().fold(Rat::zero(), |acc, x| acc + x) == Rat::one()
        })
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        use num_traits::ToPrimitive;
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .map(|x| x.to_f64().unwrap_or(f64::NAN))
                    .collect()
            })
            .collect()
    }
}

impl fmt::Display for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for (j, x) in self.row(i).iter().enumerate() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Row vector times matrix.
pub fn vec_mat(v: &[Rat], m: &RatMatrix) -> Vec<Rat> {
    assert_eq!(v.len(), m.rows(), "vector length must match matrix rows");
    let mut out = vec![Rat::zero(); m.cols()];
    for (i, a) in v.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        for (j, b) in m.row(i).iter().enumerate() {
            if !b.is_zero() {
                out[j] += a * b;
            }
        }
    }
    out
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).fold(Rat::zero(), |acc, (x, y)| acc + x * y)
}

/// Univariate polynomial with rational coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RatPoly {
    coeffs: Vec<Rat>,
}

impl RatPoly {
    pub fn new(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| rat_int(c)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::from_ints(&[1])
    }

    /// `x^k - 1`
    pub fn x_pow_minus_one(k: usize) -> Self {
        let mut c = vec![Rat::zero(); k + 1];
        c[0] = rat_int(-1);
        c[k] = Rat::one();
        Self::new(c)
    }

    /// `x - root`
    pub fn linear(root: &Rat) -> Self {
        Self::new(vec![-root.clone(), Rat::one()])
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&Rat> {
        self.coeffs.last()
    }

    pub fn is_monic(&self) -> bool {
        self.leading().is_some_and(One::is_one)
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        self.coeffs
            .iter()
            .rev()
            .fold(Rat::zero(), |acc, c| acc * x + c)
    }

    /// Horner evaluation at a square matrix.
    pub fn eval_matrix(&self, m: &RatMatrix) -> Result<RatMatrix, MathError> {
        let n = m.require_square()?;
        let mut acc = RatMatrix::zeros(n, n);
        for c in self.coeffs.iter().rev() {
            acc = acc.matmul(m)?;
            for i in 0..n {
                acc.data[i * n + i] += c;
            }
        }
        Ok(acc)
    }

    pub fn mul(&self, other: &RatPoly) -> RatPoly {
        if self.is_zero() || other.is_zero() {
            return RatPoly::zero();
        }
        let mut c = vec![Rat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        RatPoly::new(c)
    }

    pub fn sub(&self, other: &RatPoly) -> RatPoly {
        let len = self.coeffs.len().max(other.coeffs.len());
        let c = (0..len)
            .map(|i| {
                let a = self.coeffs.get(i).cloned().unwrap_or_else(Rat::zero);
                let b = other.coeffs.get(i).cloned().unwrap_or_else(Rat::zero);
                a - b
            })
            .collect();
        RatPoly::new(c)
    }

    /// Euclidean division: `(quotient, remainder)` with `deg remainder < deg divisor`.
    pub fn div_rem(&self, divisor: &RatPoly) -> Result<(RatPoly, RatPoly), MathError> {
        let dd = divisor.degree().ok_or(MathError::ZeroPolynomial)?;
        let lead = divisor.leading().expect("nonzero divisor");
        let mut rem = self.coeffs.clone();
        let Some(nd) = self.degree() else {
            return Ok((RatPoly::zero(), RatPoly::zero()));
        };
        if nd < dd {
            return Ok((RatPoly::zero(), self.clone()));
        }
        let mut quot = vec![Rat::zero(); nd - dd + 1];
        for i in (0..=nd - dd).rev() {
            let c = &rem[i + dd] / lead;
            if c.is_zero() {
                continue;
            }
            for (j, d) in divisor.coeffs.iter().enumerate() {
                rem[i + j] -= &c * d;
            }
            quot[i] = c;
        }
        rem.truncate(dd);
        Ok((RatPoly::new(quot), RatPoly::new(rem)))
    }

    /// True iff `self` divides `other` exactly.
    pub fn divides(&self, other: &RatPoly) -> Result<bool, MathError> {
        Ok(other.div_rem(self)?.1.is_zero())
    }
}

impl fmt::Display for RatPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            let show_coeff = !a.is_one() || i == 0;
            if show_coeff {
                write!(f, "{a}")?;
            }
            match i {
                0 => {}
                1 => write!(f, "x")?,
                _ => write!(f, "x^{i}")?,
            }
        }
        Ok(())
    }
}

/// Characteristic polynomial `det(xI - a)` by the Faddeev–LeVerrier recurrence.
///
/// The recurrence only divides by the small integers `1..=n`, so it is exact
/// over the rationals and needs no pivoting.
pub fn char_poly(a: &RatMatrix) -> Result<RatPoly, MathError> {
    let n = a.require_square()?;
    let mut coeffs = vec![Rat::zero(); n + 1];
    coeffs[n] = Rat::one();
    let mut m = RatMatrix::zeros(n, n);
    for k in 1..=n {
        m = a.matmul(&m)?;
        let c_prev = coeffs[n - k + 1].clone();
        for i in 0..n {
            m.data[i * n + i] += &c_prev;
        }
        let am = a.matmul(&m)?;
        coeffs[n - k] = -am.trace() / rat_int(k as i64);
    }
    Ok(RatPoly::new(coeffs))
}

/// Minimal polynomial via rank tests on the vectorised powers `I, a, a², …`.
pub fn min_poly(a: &RatMatrix) -> Result<RatPoly, MathError> {
    let n = a.require_square()?;
    if n == 0 {
        return Ok(RatPoly::one());
    }
    let mut basis = ReducedBasis::new(n * n);
    let mut power = RatMatrix::identity(n);
    for d in 0..=n {
        if let Some(combo) = basis.express(power.entries()) {
            // power = Σ combo[i] · a^i, so x^d − Σ combo[i] x^i annihilates a.
            let mut c: Vec<Rat> = combo.into_iter().map(|x| -x).collect();
            c.resize(d, Rat::zero());
            c.push(Rat::one());
            return Ok(RatPoly::new(c));
        }
        basis.insert(power.entries().to_vec());
        power = power.matmul(a)?;
    }
    unreachable!("Cayley–Hamilton bounds the minimal polynomial degree by n")
}

/// Incrementally row-reduced set of vectors that remembers how each reduced
/// row was formed from the inserted originals.
struct ReducedBasis {
    dim: usize,
    // (pivot column, reduced vector, coefficients over inserted vectors)
    rows: Vec<(usize, Vec<Rat>, Vec<Rat>)>,
    inserted: usize,
}

impl ReducedBasis {
    fn new(dim: usize) -> Self {
        Self {
            dim,
            rows: Vec::new(),
            inserted: 0,
        }
    }

    /// Reduces `v` against the basis; returns the residual and the
    /// combination of inserted vectors that was subtracted.
    fn reduce(&self, v: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
        let mut v = v.to_vec();
        let mut combo = vec![Rat::zero(); self.inserted];
        for (pivot, row, row_combo) in &self.rows {
            if v[*pivot].is_zero() {
                continue;
            }
            let f = &v[*pivot] / &row[*pivot];
            for (x, r) in v.iter_mut().zip(row) {
                if !r.is_zero() {
                    *x -= &f * r;
                }
            }
            for (c, rc) in combo.iter_mut().zip(row_combo) {
                *c += &f * rc;
            }
        }
        (v, combo)
    }

    fn express(&self, v: &[Rat]) -> Option<Vec<Rat>> {
        debug_assert_eq!(v.len(), self.dim);
        let (residual, combo) = self.reduce(v);
        residual.iter().all(Zero::is_zero).then_some(combo)
    }

    fn insert(&mut self, v: Vec<Rat>) {
        let (residual, combo) = self.reduce(&v);
        self.inserted += 1;
        for (_, _, c) in &mut self.rows {
            c.push(Rat::zero());
        }
        // residual = v − Σ combo·inserted, i.e. coefficients (−combo, 1).
        let mut coeffs: Vec<Rat> = combo.into_iter().map(|x| -x).collect();
        coeffs.push(Rat::one());
        if let Some(pivot) = residual.iter().position(|x| !x.is_zero()) {
            self.rows.push((pivot, residual, coeffs));
        }
    }
}

/// The `k`-th cyclotomic polynomial, by exact division of `x^k − 1` by `Φ_d` for proper divisors `d`.
pub fn cyclotomic(k: usize) -> RatPoly {
    assert!(k >= 1, "cyclotomic index must be positive");
    let mut p = RatPoly::x_pow_minus_one(k);
    for d in 1..k {
        if k.is_multiple_of(d) {
            let (q, r) = p.div_rem(&cyclotomic(d)).expect("nonzero cyclotomic");
            debug_assert!(r.is_zero());
            p = q;
        }
    }
    p
}

pub fn poly_divides(p: &RatPoly, q: &RatPoly) -> Result<bool, MathError> {
    p.divides(q)
}

pub fn lcm_u64(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}

pub fn pow2(e: u64) -> BigInt {
    BigInt::one() << e
}
