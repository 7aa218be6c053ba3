//! Exact integer number theory on `u64`: primality, factorization,
//! Chinese remaindering and prime search in arithmetic progressions.
//!
//! Everything here is desk-scale. Primality is deterministic Miller-Rabin
//! (the witness set below is exact for all 64-bit inputs) and factoring is
//! trial division followed by Brent's variant of Pollard rho.

use num_integer::Integer;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumError {
    #[error("expected a positive integer, got {0}")]
    NotPositive(i128),
    #[error("modulus must be at least 1")]
    ZeroModulus,
    #[error("least common multiple of the moduli overflows 64 bits")]
    Overflow,
}

/// Prime decomposition of a positive integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub value: u64,
    /// `(prime, exponent)` pairs with strictly increasing primes.
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// Multiplies the factors back out.
    pub fn product(&self) -> u64 {
        self.factors
            .iter()
            .fold(1u64, |acc, &(p, e)| acc * p.pow(e))
    }
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, exact below 2^64.
pub fn is_prime(n: u64) -> bool {
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &SMALL {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let d = (n - 1) >> (n - 1).trailing_zeros();
    let r = (n - 1).trailing_zeros();
    'witness: for &a in &SMALL {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

const TRIAL_LIMIT: u64 = 1_000_000;

/// Prime factorization of `n >= 1`; `factorize(1)` has no factors.
pub fn factorize(n: u64) -> Result<Factorization, NumError> {
    if n == 0 {
        return Err(NumError::NotPositive(0));
    }
    let mut primes = Vec::new();
    let mut rest = n;
    for p in [2u64, 3, 5] {
        while rest.is_multiple_of(p) {
            primes.push(p);
            rest /= p;
        }
    }
    // wheel over 6k +- 1
    let mut d = 7u64;
    let mut step = [4u64, 2].into_iter().cycle();
    while d <= TRIAL_LIMIT && d.saturating_mul(d) <= rest {
        while rest.is_multiple_of(d) {
            primes.push(d);
            rest /= d;
        }
        d += step.next().unwrap();
    }
    if rest > 1 {
        split_large(rest, &mut primes);
    }
    primes.sort_unstable();
    let mut factors: Vec<(u64, u32)> = Vec::new();
    for p in primes {
        match factors.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => factors.push((p, 1)),
        }
    }
    Ok(Factorization { value: n, factors })
}

fn split_large(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = pollard_brent(n);
    split_large(d, out);
    split_large(n / d, out);
}

// Nontrivial divisor of an odd composite with no factor below the trial limit.
fn pollard_brent(n: u64) -> u64 {
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut g) = (2u64, 2u64, 1u64);
        let mut ys = y;
        let mut r = 1u64;
        let mut q = 1u64;
        const BATCH: u64 = 128;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..BATCH.min(r - k) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = q.gcd(&n);
                k += BATCH;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = x.abs_diff(ys).gcd(&n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}

/// `n / 2^v2(n)`.
pub fn odd_part(n: u64) -> Result<u64, NumError> {
    if n == 0 {
        return Err(NumError::NotPositive(0));
    }
    Ok(n >> n.trailing_zeros())
}

/// Solution of a system of congruences, or `None` when they conflict.
///
/// Returns the least nonnegative solution together with the lcm of the
/// moduli. Moduli need not be coprime.
pub fn crt_solve(congruences: &[(i64, u64)]) -> Result<Option<(u64, u64)>, NumError> {
    let mut r: i128 = 0;
    let mut m: i128 = 1;
    for &(a, n) in congruences {
        if n == 0 {
            return Err(NumError::ZeroModulus);
        }
        let n = n as i128;
        let a = (a as i128).rem_euclid(n);
        let eg = m.extended_gcd(&n);
        let g = eg.gcd;
        if (a - r) % g != 0 {
            return Ok(None);
        }
        let lcm = m / g * n;
        if lcm > u64::MAX as i128 {
            return Err(NumError::Overflow);
        }
        // r + m * t with t = ((a - r)/g) * inv(m/g) mod n/g
        let step = n / g;
        let t = (((a - r) / g) % step * (eg.x % step)).rem_euclid(step);
        r = (r + m * t).rem_euclid(lcm);
        m = lcm;
    }
    Ok(Some((r as u64, m as u64)))
}

/// Outcome of a prime search in an arithmetic progression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimeSearch {
    Found(u64),
    /// The progression is coprime but holds no prime up to the bound.
    NotFoundBelow(u64),
    /// `gcd(a, m) > 1` and no prime divisor of the gcd lies in the class.
    NoneExists,
}

/// Least prime `p <= bound` with `p ≡ a (mod m)`.
pub fn find_prime_in_ap(a: i64, m: u64, bound: u64) -> Result<PrimeSearch, NumError> {
    if m == 0 {
        return Err(NumError::ZeroModulus);
    }
    let r = (a as i128).rem_euclid(m as i128) as u64;
    let g = r.gcd(&m);
    if g > 1 {
        // every prime in the class divides g
        let fac = factorize(g)?;
        return Ok(fac
            .primes()
            .find(|&p| p % m == r)
            .map_or(PrimeSearch::NoneExists, |p| {
                if p <= bound {
                    PrimeSearch::Found(p)
                } else {
                    PrimeSearch::NotFoundBelow(bound)
                }
            }));
    }
    let mut p = if r == 0 { m } else { r };
    while p <= bound {
        if is_prime(p) {
            return Ok(PrimeSearch::Found(p));
        }
        p = match p.checked_add(m) {
            Some(next) => next,
            None => break,
        };
    }
    Ok(PrimeSearch::NotFoundBelow(bound))
}

/// Primes of the form `2^n + 1` with `n >= 0`, so 2 counts.
pub fn is_fermat_prime(p: u64) -> bool {
    p >= 2 && (p - 1).is_power_of_two() && is_prime(p)
}

/// Primes in `[from, to]` in increasing order.
pub fn primes_between(from: u64, to: u64) -> impl Iterator<Item = u64> {
    (from.max(2)..=to).filter(|&n| is_prime(n))
}
