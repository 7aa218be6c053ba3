//! Subgroups `Z ⊆ G ⊂ Q` described by their prime-divisibility profile.
//!
//! A group is given by the set `S` of primes `p` for which `G` is
//! `p`-divisible (either finite, or cofinite via its complement) and, for
//! finitely many primes outside `S`, the largest exponent `k_p` with
//! `1/p^k_p ∈ G`. Every other prime outside `S` has `k_p = 0`.
//!
//! On disk this is the JSON document
//!
//! ```json
//! {"divisible": {"kind": "cofinite", "primes": [7]}, "partial_exponents": {"7": 1}}
//! ```
//!
//! where `primes` lists `S` itself for `"finite"` and its complement for
//! `"cofinite"`. Unknown keys are rejected.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numtheory::{factorize, is_prime, odd_part};

/// Default cap on the prime scan used for finite `S`.
pub const DEFAULT_SCAN_BOUND: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("descriptor represents Q itself (cofinite S with empty complement)")]
    RepresentsRationals,
    #[error("descriptor is not dense in Q: S must contain at least one prime")]
    NotDense,
    #[error("partial exponent given for prime {0}, which lies in S")]
    ExponentKeyCollision(u64),
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("no certificate for q found among primes up to {bound} (running odd gcd {running})")]
    ScanBoundExhausted { bound: u64, running: u64 },
    #[error("malformed group descriptor: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read group descriptor: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SKind {
    Finite,
    Cofinite,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivisibleSpec {
    pub kind: SKind,
    pub primes: Vec<u64>,
}

/// Unvalidated descriptor, as read from JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupDescriptor {
    pub divisible: DivisibleSpec,
    #[serde(default)]
    pub partial_exponents: BTreeMap<u64, u32>,
}

impl GroupDescriptor {
    /// `S` is exactly `primes`.
    pub fn finite(primes: &[u64]) -> Self {
        Self::new(SKind::Finite, primes)
    }

    /// `S` is every prime except `complement`.
    pub fn cofinite(complement: &[u64]) -> Self {
        Self::new(SKind::Cofinite, complement)
    }

    fn new(kind: SKind, primes: &[u64]) -> Self {
        GroupDescriptor {
            divisible: DivisibleSpec {
                kind,
                primes: primes.to_vec(),
            },
            partial_exponents: BTreeMap::new(),
        }
    }

    pub fn with_exponent(mut self, p: u64, k: u32) -> Self {
        self.partial_exponents.insert(p, k);
        self
    }

    pub fn from_json(text: &str) -> Result<Self, GroupError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("descriptor serializes")
    }

    pub fn validate(&self) -> Result<Group, GroupError> {
        Group::new(self)
    }
}

/// A validated group descriptor. Immutable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    kind: SKind,
    primes: BTreeSet<u64>,
    exponents: BTreeMap<u64, u32>,
}

/// The torsion parameter `q` together with the evidence that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QCertificate {
    pub q: u64,
    pub evidence: QEvidence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QEvidence {
    /// `q = odd_part(gcd(p - 1))` over the finite complement of `S`.
    ExactGcd {
        complement_primes: Vec<u64>,
        /// Running gcd after each complement prime.
        gcd_trace: Vec<u64>,
    },
    /// `q = 1`: every odd prime fails to divide `p - 1` for some `p ∉ S`.
    /// Odd primes not dividing `base_prime - 1` are witnessed by
    /// `base_prime` itself; the others are listed.
    DirichletWitnesses {
        base_prime: u64,
        witnesses: Vec<Witness>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub odd_prime: u64,
    pub prime: u64,
}

impl Group {
    fn new(desc: &GroupDescriptor) -> Result<Self, GroupError> {
        let primes: BTreeSet<u64> = desc.divisible.primes.iter().copied().collect();
        if let Some(&p) = primes.iter().find(|&&p| !is_prime(p)) {
            return Err(GroupError::NotPrime(p));
        }
        if let Some(&p) = desc.partial_exponents.keys().find(|&&p| !is_prime(p)) {
            return Err(GroupError::NotPrime(p));
        }
        match desc.divisible.kind {
            SKind::Cofinite if primes.is_empty() => return Err(GroupError::RepresentsRationals),
            SKind::Finite if primes.is_empty() => return Err(GroupError::NotDense),
            _ => {}
        }
        let group = Group {
            kind: desc.divisible.kind,
            primes,
            exponents: BTreeMap::new(),
        };
        if let Some(&p) = desc.partial_exponents.keys().find(|&&p| group.in_s(p)) {
            return Err(GroupError::ExponentKeyCollision(p));
        }
        let exponents = desc
            .partial_exponents
            .iter()
            .filter(|(_, &k)| k > 0)
            .map(|(&p, &k)| (p, k))
            .collect();
        Ok(Group { exponents, ..group })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GroupError> {
        let text = std::fs::read_to_string(path)?;
        GroupDescriptor::from_json(&text)?.validate()
    }

    pub fn descriptor(&self) -> GroupDescriptor {
        GroupDescriptor {
            divisible: DivisibleSpec {
                kind: self.kind,
                primes: self.primes.iter().copied().collect(),
            },
            partial_exponents: self.exponents.clone(),
        }
    }

    pub fn kind(&self) -> SKind {
        self.kind
    }

    /// The listed primes: `S` when finite, its complement when cofinite.
    pub fn listed_primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.primes.iter().copied()
    }

    /// Whether `G` is `p`-divisible.
    pub fn in_s(&self, p: u64) -> bool {
        match self.kind {
            SKind::Finite => self.primes.contains(&p),
            SKind::Cofinite => !self.primes.contains(&p),
        }
    }

    /// `k_p` for `p ∉ S`; `None` when `p ∈ S`.
    pub fn exponent(&self, p: u64) -> Option<u32> {
        (!self.in_s(p)).then(|| self.exponents.get(&p).copied().unwrap_or(0))
    }

    /// Membership of a rational in `G`.
    pub fn contains(&self, r: &BigRational) -> bool {
        self.admits_denominator(&r.denom().magnitude().clone())
    }

    /// Whether `1/d ∈ G`, for `d >= 1`.
    pub fn admits_denominator(&self, d: &BigUint) -> bool {
        match self.kind {
            SKind::Cofinite => self.primes.iter().all(|&p| {
                let k = self.exponents.get(&p).copied().unwrap_or(0);
                valuation_capped(d, p, k + 1) <= k
            }),
            SKind::Finite => {
                let mut rest = d.clone();
                for &p in &self.primes {
                    strip(&mut rest, p, u32::MAX);
                }
                for (&p, &k) in &self.exponents {
                    strip(&mut rest, p, k);
                }
                rest.is_one()
            }
        }
    }

    /// `(n_S, n_T)`: the part of `n` made of primes in `S`, and the rest.
    pub fn s_split(&self, n: u64) -> (u64, u64) {
        assert!(n >= 1, "s_split needs a positive integer");
        let mut outside = 1u64;
        let mut rest = n;
        match self.kind {
            SKind::Cofinite => {
                for &p in &self.primes {
                    while rest.is_multiple_of(p) {
                        rest /= p;
                        outside *= p;
                    }
                }
                (n / outside, outside)
            }
            SKind::Finite => {
                let mut inside = 1u64;
                for &p in &self.primes {
                    while rest.is_multiple_of(p) {
                        rest /= p;
                        inside *= p;
                    }
                }
                (inside, n / inside)
            }
        }
    }

    /// `n_K`: the primes of `n_T`, each raised to its exponent `k_p`.
    pub fn k_part(&self, n: u64) -> u64 {
        let (_, n_t) = self.s_split(n);
        let primes: Vec<u64> = match self.kind {
            SKind::Cofinite => self
                .primes
                .iter()
                .copied()
                .filter(|p| n_t % p == 0)
                .collect(),
            SKind::Finite => factorize(n_t).expect("n_T >= 1").primes().collect(),
        };
        primes.into_iter().fold(1u64, |acc, p| {
            let k = self.exponents.get(&p).copied().unwrap_or(0);
            p.checked_pow(k)
                .and_then(|pk| acc.checked_mul(pk))
                .expect("n_K overflows u64")
        })
    }

    /// Primes outside `S` in increasing order, up to `bound`.
    pub fn complement_primes(&self, bound: u64) -> Vec<u64> {
        match self.kind {
            SKind::Cofinite => self
                .primes
                .iter()
                .copied()
                .filter(|&p| p <= bound)
                .collect(),
            SKind::Finite => crate::numtheory::primes_between(2, bound)
                .filter(|p| !self.primes.contains(p))
                .collect(),
        }
    }

    /// The largest odd `q` dividing `p - 1` for every prime `p ∉ S`.
    pub fn compute_q(&self, scan_bound: u64) -> Result<QCertificate, GroupError> {
        match self.kind {
            SKind::Cofinite => {
                let complement: Vec<u64> = self.primes.iter().copied().collect();
                let mut g = 0u64;
                let trace = complement
                    .iter()
                    .map(|&p| {
                        g = g.gcd(&(p - 1));
                        g
                    })
                    .collect();
                Ok(QCertificate {
                    q: odd_part(g).expect("complement nonempty"),
                    evidence: QEvidence::ExactGcd {
                        complement_primes: complement,
                        gcd_trace: trace,
                    },
                })
            }
            SKind::Finite => self.dirichlet_certificate(scan_bound),
        }
    }

    fn dirichlet_certificate(&self, scan_bound: u64) -> Result<QCertificate, GroupError> {
        let mut outside = (2..=scan_bound).filter(|&p| is_prime(p) && !self.primes.contains(&p));
        let base = outside.next().ok_or(GroupError::ScanBoundExhausted {
            bound: scan_bound,
            running: 0,
        })?;
        let mut running = odd_part(base - 1).expect("p >= 2");
        let mut witnesses = Vec::new();
        while running > 1 {
            let Some(p) = outside.next() else {
                return Err(GroupError::ScanBoundExhausted {
                    bound: scan_bound,
                    running,
                });
            };
            let next = odd_part(running.gcd(&(p - 1))).expect("gcd positive");
            if next < running {
                let dropped = factorize(running).expect("running >= 1");
                witnesses.extend(
                    dropped
                        .primes()
                        .filter(|&r| !next.is_multiple_of(r))
                        .map(|r| Witness {
                            odd_prime: r,
                            prime: p,
                        }),
                );
            }
            running = next;
        }
        Ok(QCertificate {
            q: 1,
            evidence: QEvidence::DirichletWitnesses {
                base_prime: base,
                witnesses,
            },
        })
    }

    /// `q` with the default scan bound.
    pub fn q(&self) -> Result<u64, GroupError> {
        Ok(self.compute_q(DEFAULT_SCAN_BOUND)?.q)
    }

    /// Denominators `d <= budget` with `1/d ∈ G`, ascending.
    pub fn admissible_denominators(&self, budget: u64) -> Vec<u64> {
        (1..=budget.max(1))
            .filter(|&d| self.admits_denominator(&BigUint::from(d)))
            .collect()
    }

    /// Random elements of `G` with denominators at most `denominator_budget`
    /// and absolute value at most `magnitude_bound`.
    pub fn sample_elements<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        count: usize,
        denominator_budget: u64,
        magnitude_bound: u64,
    ) -> Vec<BigRational> {
        let dens = self.admissible_denominators(denominator_budget);
        (0..count)
            .map(|_| {
                let d = dens[rng.gen_range(0..dens.len())] as i64;
                let span = magnitude_bound as i64 * d;
                let a = rng.gen_range(-span..=span);
                BigRational::new(BigInt::from(a), BigInt::from(d))
            })
            .collect()
    }

    pub fn sample_elements_seeded(
        &self,
        seed: u64,
        count: usize,
        denominator_budget: u64,
        magnitude_bound: u64,
    ) -> Vec<BigRational> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_elements(&mut rng, count, denominator_budget, magnitude_bound)
    }
}

impl QCertificate {
    /// Re-checks the certificate's invariants against `group`.
    pub fn verify(&self, group: &Group) -> bool {
        if self.q.is_multiple_of(2) {
            return false;
        }
        match &self.evidence {
            QEvidence::ExactGcd {
                complement_primes,
                gcd_trace,
            } => {
                if group.kind() != SKind::Cofinite
                    || *complement_primes != group.listed_primes().collect::<Vec<_>>()
                {
                    return false;
                }
                let g = complement_primes.iter().fold(0u64, |g, &p| g.gcd(&(p - 1)));
                gcd_trace.last() == Some(&g) && odd_part(g).ok() == Some(self.q)
            }
            QEvidence::DirichletWitnesses {
                base_prime,
                witnesses,
            } => {
                let ok_prime = |p: u64| is_prime(p) && !group.in_s(p);
                if self.q != 1 || !ok_prime(*base_prime) {
                    return false;
                }
                let needed = factorize(odd_part(base_prime - 1).unwrap()).unwrap();
                let covered = needed.primes().all(|r| {
                    witnesses
                        .iter()
                        .any(|w| w.odd_prime == r && ok_prime(w.prime) && (w.prime - 1) % r != 0)
                });
                covered
            }
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = self
            .primes
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(", ");
        match self.kind {
            SKind::Finite => write!(f, "Z[1/p : p in {{{list}}}]")?,
            SKind::Cofinite => write!(f, "Z[1/p : p not in {{{list}}}]")?,
        }
        for (p, k) in &self.exponents {
            write!(f, " + (1/{p}^{k})Z")?;
        }
        Ok(())
    }
}

fn valuation_capped(d: &BigUint, p: u64, cap: u32) -> u32 {
    let p = BigUint::from(p);
    let mut v = 0;
    let mut rest = d.clone();
    while v < cap && !rest.is_zero() {
        let (quo, rem) = rest.div_rem(&p);
        if !rem.is_zero() {
            break;
        }
        rest = quo;
        v += 1;
    }
    v
}

fn strip(d: &mut BigUint, p: u64, max: u32) {
    let p = BigUint::from(p);
    let mut n = 0;
    while n < max {
        let (quo, rem) = d.div_rem(&p);
        if !rem.is_zero() {
            break;
        }
        *d = quo;
        n += 1;
    }
}

/// `a/b` as a `BigRational`.
pub fn ratio(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn no7() -> Group {
        GroupDescriptor::cofinite(&[7]).validate().unwrap()
    }

    fn two_and_nine() -> Group {
        GroupDescriptor::finite(&[2])
            .with_exponent(3, 2)
            .validate()
            .unwrap()
    }

    #[test]
    fn validate_examples() {
        assert!(GroupDescriptor::cofinite(&[7]).validate().is_ok());
        assert!(matches!(
            GroupDescriptor::cofinite(&[]).validate(),
            Err(GroupError::RepresentsRationals)
        ));
        assert!(matches!(
            GroupDescriptor::finite(&[]).validate(),
            Err(GroupError::NotDense)
        ));
        assert!(matches!(
            GroupDescriptor::finite(&[]).with_exponent(3, 2).validate(),
            Err(GroupError::NotDense)
        ));
        assert!(matches!(
            GroupDescriptor::finite(&[2]).with_exponent(2, 1).validate(),
            Err(GroupError::ExponentKeyCollision(2))
        ));
        assert!(matches!(
            GroupDescriptor::cofinite(&[7])
                .with_exponent(5, 1)
                .validate(),
            Err(GroupError::ExponentKeyCollision(5))
        ));
        assert!(matches!(
            GroupDescriptor::cofinite(&[9]).validate(),
            Err(GroupError::NotPrime(9))
        ));
    }

    #[test]
    fn json_schema() {
        let text =
            r#"{"divisible": {"kind": "finite", "primes": [2]}, "partial_exponents": {"3": 2}}"#;
        let g = GroupDescriptor::from_json(text)
            .unwrap()
            .validate()
            .unwrap();
        assert_eq!(g, two_and_nine());
        let again = GroupDescriptor::from_json(&g.descriptor().to_json()).unwrap();
        assert_eq!(again.validate().unwrap(), g);
        let bad = r#"{"divisible": {"kind": "finite", "primes": [2]}, "extra": 1}"#;
        assert!(GroupDescriptor::from_json(bad).is_err());
        let bad_kind = r#"{"divisible": {"kind": "all", "primes": []}}"#;
        assert!(GroupDescriptor::from_json(bad_kind).is_err());
    }

    #[test]
    fn contains_examples() {
        let g = no7();
        assert!(g.contains(&ratio(1, 6)));
        assert!(!g.contains(&ratio(3, 7)));
        let h = two_and_nine();
        assert!(h.contains(&ratio(5, 9)));
        assert!(!h.contains(&ratio(5, 27)));
        assert!(h.contains(&ratio(5, 72)));
        assert!(!h.contains(&ratio(1, 5)));
    }

    #[test]
    fn split_and_k_part_examples() {
        assert_eq!(no7().s_split(84), (12, 7));
        assert_eq!(no7().s_split(1), (1, 1));
        assert_eq!(two_and_nine().s_split(12), (4, 3));
        assert_eq!(two_and_nine().k_part(12), 9);
        assert_eq!(no7().k_part(7), 1);
        assert_eq!(no7().k_part(12), 1);
        assert_eq!(two_and_nine().k_part(15), 9);
    }

    #[test]
    fn q_examples() {
        let c = no7().compute_q(100).unwrap();
        assert_eq!(c.q, 3);
        assert_eq!(
            c.evidence,
            QEvidence::ExactGcd {
                complement_primes: vec![7],
                gcd_trace: vec![6]
            }
        );
        assert!(c.verify(&no7()));
        let g31 = GroupDescriptor::cofinite(&[31]).validate().unwrap();
        assert_eq!(g31.q().unwrap(), 15);
        let g3 = GroupDescriptor::cofinite(&[3]).validate().unwrap();
        assert_eq!(g3.q().unwrap(), 1);
        let g = GroupDescriptor::cofinite(&[7, 13]).validate().unwrap();
        assert_eq!(g.q().unwrap(), 3);

        let fin = GroupDescriptor::finite(&[2, 3, 5]).validate().unwrap();
        let c = fin.compute_q(1000).unwrap();
        assert_eq!(c.q, 1);
        assert_eq!(
            c.evidence,
            QEvidence::DirichletWitnesses {
                base_prime: 7,
                witnesses: vec![Witness {
                    odd_prime: 3,
                    prime: 11
                }]
            }
        );
        assert!(c.verify(&fin));
        assert!(!c.verify(&no7()));
        assert!(matches!(
            fin.compute_q(10),
            Err(GroupError::ScanBoundExhausted {
                bound: 10,
                running: 3
            })
        ));
    }

    #[test]
    fn q_for_finite_s_missing_two() {
        let g = GroupDescriptor::finite(&[3, 5]).validate().unwrap();
        let c = g.compute_q(100).unwrap();
        assert_eq!(c.q, 1);
        assert!(
            matches!(c.evidence, QEvidence::DirichletWitnesses { base_prime: 2, ref witnesses } if witnesses.is_empty())
        );
    }

    #[test]
    fn sampling() {
        let g = GroupDescriptor::finite(&[2]).validate().unwrap();
        for r in g.sample_elements_seeded(3, 200, 8, 5) {
            assert!((r.clone() * ratio(8, 1)).is_integer(), "{r}");
        }
        let h = two_and_nine();
        let samples = h.sample_elements_seeded(11, 500, 100, 3);
        assert!(samples.iter().all(|r| h.contains(r)));
        assert!(samples.iter().any(|r| !r.is_integer()));
        assert!(samples.iter().any(|r| r.is_integer()));
        assert!(!h.admissible_denominators(100).contains(&27));
        assert!(h.admissible_denominators(100).contains(&72));
        assert_eq!(
            h.sample_elements_seeded(5, 10, 50, 2),
            h.sample_elements_seeded(5, 10, 50, 2)
        );
    }

    fn groups() -> Vec<Group> {
        vec![
            no7(),
            two_and_nine(),
            GroupDescriptor::cofinite(&[31]).validate().unwrap(),
            GroupDescriptor::cofinite(&[7, 13])
                .with_exponent(13, 1)
                .validate()
                .unwrap(),
            GroupDescriptor::finite(&[2, 3, 5]).validate().unwrap(),
        ]
    }

    proptest! {
        #[test]
        fn subgroup_closure(seed in any::<u64>(), which in 0usize..5) {
            let g = &groups()[which];
            let xs = g.sample_elements_seeded(seed, 20, 200, 10);
            for w in xs.windows(2) {
                prop_assert!(g.contains(&(&w[0] + &w[1])));
                prop_assert!(g.contains(&(&w[0] - &w[1])));
            }
        }

        #[test]
        fn divisibility_and_exponent_caps(seed in any::<u64>(), which in 0usize..5) {
            let g = &groups()[which];
            for x in g.sample_elements_seeded(seed, 10, 200, 10) {
                for p in [2u64, 3, 5, 7, 11, 13, 31] {
                    if g.in_s(p) {
                        prop_assert!(g.contains(&(&x / ratio(p as i64, 1))));
                    }
                }
            }
            for p in [2u64, 3, 5, 7, 11, 13, 31] {
                if let Some(k) = g.exponent(p) {
                    let pk = (p as i64).pow(k);
                    prop_assert!(g.contains(&ratio(1, pk)));
                    prop_assert!(!g.contains(&ratio(1, pk * p as i64)));
                }
            }
        }

        #[test]
        fn split_consistency(n in 1u64..5000, which in 0usize..5) {
            let g = &groups()[which];
            let (s, t) = g.s_split(n);
            prop_assert_eq!(s * t, n);
            let nk = g.k_part(n);
            prop_assert!(g.contains(&ratio(1, nk as i64)));
            for (p, _) in factorize(t).unwrap().factors {
                prop_assert!(!g.in_s(p));
                prop_assert!(nk.is_multiple_of(p.pow(g.exponent(p).unwrap())));
                prop_assert!(!g.contains(&ratio(1, (nk * p) as i64)));
            }
            for (p, _) in factorize(s).unwrap().factors {
                prop_assert!(g.in_s(p));
            }
        }

        #[test]
        fn q_divides_complement_predecessors(which in 0usize..5) {
            let g = &groups()[which];
            let q = g.q().unwrap();
            for p in g.complement_primes(500) {
                prop_assert_eq!((p - 1) % q, 0);
            }
        }
    }
}
