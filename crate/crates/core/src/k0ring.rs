//! The candidate ring `(Z/qZ)[T]/(T + T^2)` and closed-form values of
//! unary intervals.
//!
//! Elements are written `a + b*X` where `X` is the class of the half-line
//! `(0, +inf)`, so `X^2 = -X`. For `q = 1` the ring is trivial and every
//! element is `0`.
//!
//! The true Grothendieck ring is a quotient of this one. Equal values here
//! imply equal classes there; unequal values are inconclusive.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_integer::Integer;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group_model::Group;
use crate::numtheory::mul_mod;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RingError {
    #[error("ring modulus must be odd and positive, got {0}")]
    EvenModulus(u64),
    #[error("operands live in different rings (q = {0} and q = {1})")]
    MixedRings(u64, u64),
    #[error("residue {value} out of range for q = {q}")]
    OutOfRange { value: u64, q: u64 },
}

/// `(Z/qZ)[T]/(T + T^2)` for an odd `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct RingSpec {
    q: u64,
}

impl RingSpec {
    pub fn new(q: u64) -> Result<Self, RingError> {
        if q == 0 || q.is_multiple_of(2) {
            return Err(RingError::EvenModulus(q));
        }
        Ok(RingSpec { q })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn is_trivial(&self) -> bool {
        self.q == 1
    }

    /// The residue of `1/2`, i.e. `(q + 1) / 2` (0 in the trivial ring).
    pub fn half_residue(&self) -> u64 {
        self.q.div_ceil(2) % self.q
    }

    pub fn element(&self, a: i64, b: i64) -> K0Element {
        K0Element {
            q: self.q,
            a: reduce(a as i128, self.q),
            b: reduce(b as i128, self.q),
        }
    }

    pub fn zero(&self) -> K0Element {
        self.element(0, 0)
    }

    pub fn one(&self) -> K0Element {
        self.element(1, 0)
    }

    /// The class of `(0, +inf)`.
    pub fn x(&self) -> K0Element {
        self.element(0, 1)
    }

    pub fn half(&self) -> K0Element {
        K0Element {
            q: self.q,
            a: self.half_residue(),
            b: 0,
        }
    }

    /// The whole line, `2X + 1`.
    pub fn line(&self) -> K0Element {
        self.element(1, 2)
    }

    /// `num/den` as a constant, when `den` is invertible mod `q`.
    pub fn rational(&self, num: i64, den: i64) -> Option<K0Element> {
        let den_r = reduce(den as i128, self.q) as i128;
        let eg = den_r.extended_gcd(&(self.q as i128));
        if eg.gcd != 1 && self.q != 1 {
            return None;
        }
        let inv = reduce(eg.x, self.q);
        let a = mul_mod(reduce(num as i128, self.q), inv, self.q);
        Some(K0Element { q: self.q, a, b: 0 })
    }
}

fn reduce(v: i128, q: u64) -> u64 {
    v.rem_euclid(q as i128) as u64
}

/// `a + b*X` with residues in `0..q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawElement")]
pub struct K0Element {
    pub q: u64,
    pub a: u64,
    pub b: u64,
}

#[derive(Deserialize)]
struct RawElement {
    q: u64,
    a: u64,
    b: u64,
}

impl TryFrom<RawElement> for K0Element {
    type Error = RingError;

    fn try_from(raw: RawElement) -> Result<Self, RingError> {
        RingSpec::new(raw.q)?;
        for value in [raw.a, raw.b] {
            if value >= raw.q {
                return Err(RingError::OutOfRange { value, q: raw.q });
            }
        }
        Ok(K0Element {
            q: raw.q,
            a: raw.a,
            b: raw.b,
        })
    }
}

impl K0Element {
    pub fn ring(&self) -> RingSpec {
        RingSpec { q: self.q }
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }

    fn same_ring(&self, other: &Self) -> Result<u64, RingError> {
        if self.q == other.q {
            Ok(self.q)
        } else {
            Err(RingError::MixedRings(self.q, other.q))
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, RingError> {
        let q = self.same_ring(other)?;
        Ok(K0Element {
            q,
            a: ((self.a as u128 + other.a as u128) % q as u128) as u64,
            b: ((self.b as u128 + other.b as u128) % q as u128) as u64,
        })
    }

    /// `(a + bX)(c + dX) = ac + (ad + bc - bd)X`.
    pub fn try_mul(&self, other: &Self) -> Result<Self, RingError> {
        let q = self.same_ring(other)?;
        let ac = mul_mod(self.a, other.a, q);
        let ad = mul_mod(self.a, other.b, q) as u128;
        let bc = mul_mod(self.b, other.a, q) as u128;
        let bd = mul_mod(self.b, other.b, q) as u128;
        let b = ((ad + bc + q as u128 - bd) % q as u128) as u64;
        Ok(K0Element { q, a: ac, b })
    }

    pub fn scale(&self, k: i64) -> Self {
        let k = reduce(k as i128, self.q);
        K0Element {
            q: self.q,
            a: mul_mod(self.a, k, self.q),
            b: mul_mod(self.b, k, self.q),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("element serializes")
    }
}

impl Neg for K0Element {
    type Output = K0Element;

    fn neg(self) -> K0Element {
        K0Element {
            q: self.q,
            a: (self.q - self.a) % self.q,
            b: (self.q - self.b) % self.q,
        }
    }
}

// The operator impls panic on mixed rings; use `try_add` / `try_mul` to
// get an error instead.
impl Add for K0Element {
    type Output = K0Element;

    fn add(self, rhs: K0Element) -> K0Element {
        self.try_add(&rhs).unwrap()
    }
}

impl Sub for K0Element {
    type Output = K0Element;

    fn sub(self, rhs: K0Element) -> K0Element {
        self.try_add(&-rhs).unwrap()
    }
}

impl Mul for K0Element {
    type Output = K0Element;

    fn mul(self, rhs: K0Element) -> K0Element {
        self.try_mul(&rhs).unwrap()
    }
}

impl fmt::Display for K0Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}*X (mod {})", self.a, self.b, self.q)
    }
}

/// An interval endpoint, with `G`-membership for finite ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    NegInf,
    PosInf,
    Finite { value: BigRational, in_group: bool },
}

impl Endpoint {
    pub fn at(group: &Group, value: BigRational) -> Self {
        let in_group = group.contains(&value);
        Endpoint::Finite { value, in_group }
    }

    fn cmp_extended(&self, other: &Endpoint) -> Ordering {
        use Endpoint::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (_, NegInf) | (PosInf, _) => Ordering::Greater,
            (Finite { value: a, .. }, Finite { value: b, .. }) => a.cmp(b),
        }
    }
}

/// Value of the open interval `(lo, hi) ∩ G`.
///
/// | endpoints                         | value      |
/// |-----------------------------------|------------|
/// | both finite, both in `G`          | `-1`       |
/// | both finite, exactly one in `G`   | `-1/2`     |
/// | both finite, neither in `G`       | `0`        |
/// | one infinite, finite one in `G`   | `X`        |
/// | one infinite, finite one not in G | `X + 1/2`  |
/// | both infinite                     | `2X + 1`   |
///
/// Empty intervals (`lo >= hi`) have value `0`.
pub fn interval_value(spec: &RingSpec, lo: &Endpoint, hi: &Endpoint) -> K0Element {
    use Endpoint::*;
    if lo.cmp_extended(hi) != Ordering::Less {
        return spec.zero();
    }
    let half = spec.half();
    match (lo, hi) {
        (NegInf, PosInf) => spec.line(),
        (NegInf, Finite { in_group, .. }) | (Finite { in_group, .. }, PosInf) => {
            if *in_group {
                spec.x()
            } else {
                spec.x() + half
            }
        }
        (Finite { in_group: a, .. }, Finite { in_group: b, .. }) => match (a, b) {
            (true, true) => -spec.one(),
            (false, false) => spec.zero(),
            _ => -half,
        },
        _ => unreachable!("lo < hi rules out the remaining endpoint pairs"),
    }
}

/// Value of `{r} ∩ G`: one point, or the empty set.
pub fn point_value(spec: &RingSpec, group: &Group, r: &BigRational) -> K0Element {
    if group.contains(r) {
        spec.one()
    } else {
        spec.zero()
    }
}
