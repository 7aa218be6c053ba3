//! Valuations of definable sets over dense subgroups `Z ⊆ G ⊂ Q`.
//!
//! A group is fixed by the primes it fully divides by (the set `S`) and
//! bounded exponents for the rest. Definable sets are quantifier-free
//! formulas in linear order and divisibility predicates; the crate computes
//! their class in the candidate ring `(Z/q)[X]/(X^2+X)` together with a
//! trace of the cell decomposition behind the number.

pub mod cli;
pub mod evaluator;
pub mod formula;
pub mod group_model;
pub mod harness;
pub mod k0ring;
pub mod lincell;
pub mod numtheory;
