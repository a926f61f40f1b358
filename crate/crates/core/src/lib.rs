//! Exact decision procedures for cutpoint isolation of probabilistic finite
//! automata whose inputs range over a letter-bounded context-free language.
//!
//! The crate is organised bottom-up:
//!
//! * [`exactmath`]: rationals, matrices, polynomials;
//! * [`stochastic`]: the automaton model and limits of matrix powers;
//! * [`semilinear`]: exponent sets and Parikh images of grammars;
//! * [`isolation`]: the branch search deciding isolation;
//! * [`applications`]: emptiness, value one, bounded alternation, subset-sum gadgets;
//! * [`oracle`]: brute-force cross-checks, never used by the search itself;
//! * [`format`]: the JSON problem file and verdict encoding.

pub mod applications;
pub mod exactmath;
pub mod format;
pub mod isolation;
pub mod oracle;
pub mod semilinear;
pub mod stochastic;
