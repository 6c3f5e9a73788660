//! Exact integer and modular arithmetic.
//!
//! Everything here is pure and allocation-light. Overflow is reported as an
//! error (or, where the precondition rules it out, asserted), never wrapped.

use serde::Serialize;

use crate::error::{Error, Result};

/// A modulus `m >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Modulus(u64);

impl Modulus {
    pub fn new(m: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("modulus must be at least 1".into()));
        }
        Ok(Modulus(m))
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    /// Reduces any signed integer into `[0, m)`.
    #[inline]
    pub fn reduce(self, a: i128) -> u64 {
        a.rem_euclid(self.0 as i128) as u64
    }
}

/// Prime factorization `n = prod p^e`, primes strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Factorization {
    pub n: u64,
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    /// Multiplies the factors back together.
    pub fn product(&self) -> u64 {
        self.factors
            .iter()
            .fold(1u64, |acc, &(p, e)| acc * p.pow(e))
    }
}

/// Nonnegative gcd of two signed integers; `gcd(0, 0) = 0`.
pub fn gcd(a: i64, b: i64) -> u64 {
    gcd_u64(a.unsigned_abs(), b.unsigned_abs())
}

/// Binary gcd.
pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    if a == 0 || b == 0 {
        return a | b;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

pub fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    if m <= u32::MAX as u64 {
        (a % m) * (b % m) % m
    } else {
        ((a as u128 * b as u128) % m as u128) as u64
    }
}

/// `base^exp mod m`, result in `[0, m)`.
pub fn mod_pow(base: u64, mut exp: u64, m: Modulus) -> u64 {
    let m = m.get();
    if m == 1 {
        return 0;
    }
    let mut b = base % m;
    let mut acc = 1u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo `m`, or `None` when `gcd(a, m) != 1`.
///
/// Modulo 1 every residue is 0 and `0 * 0 = 0 = 1`, so the answer is `Some(0)`.
pub fn mod_inverse(a: u64, m: Modulus) -> Option<u64> {
    let m = m.get();
    if m == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = ((a % m) as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

/// Exponent of the prime `p` in `n` (`n != 0`).
pub fn valuation(p: u64, mut n: u128) -> u32 {
    debug_assert!(p >= 2 && n != 0);
    let p = p as u128;
    let mut v = 0;
    while n.is_multiple_of(p) {
        n /= p;
        v += 1;
    }
    v
}

/// Trial-division factorization. Meant for `n` up to a few times 10^9 per call;
/// it stays correct (but slow) all the way to `u64::MAX`.
pub fn factorize(mut n: u64) -> Factorization {
    assert!(n >= 1, "factorize requires n >= 1");
    let orig = n;
    let mut factors = Vec::new();
    for p in [2u64, 3] {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            factors.push((p, e));
        }
    }
    // 6j +- 1 wheel
    let mut p = 5u64;
    let mut step = 2u64;
    while p.checked_mul(p).is_some_and(|sq| sq <= n) {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        p += step;
        step = 6 - step;
    }
    if n > 1 {
        factors.push((n, 1));
    }
    Factorization { n: orig, factors }
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factorize(n).factors == [(n, 1)]
}

/// Möbius function via factorization.
pub fn mobius(n: u64) -> i8 {
    let f = factorize(n);
    if !f.is_squarefree() {
        0
    } else if f.factors.len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Indicator of k-free integers.
///
/// Negative inputs are judged by their absolute value and 0 is never k-free
/// (every `p^k` divides it).
pub fn mu_k(n: i64, k: u32) -> u8 {
    assert!(k >= 2, "mu_k requires k >= 2");
    if n == 0 {
        return 0;
    }
    let f = factorize(n.unsigned_abs());
    u8::from(f.factors.iter().all(|&(_, e)| e < k))
}

pub fn euler_phi(n: u64) -> u64 {
    assert!(n >= 1, "euler_phi requires n >= 1");
    factorize(n)
        .factors
        .iter()
        .fold(1u64, |acc, &(p, e)| acc * (p - 1) * p.pow(e - 1))
}

/// `floor(n^(1/k))`, computed without floating point error:
/// the result `r` satisfies `r^k <= n < (r+1)^k`.
pub fn iroot(n: u64, k: u32) -> u64 {
    assert!(k >= 1);
    if k == 1 || n < 2 {
        return n;
    }
    let mut r = (n as f64).powf(1.0 / k as f64) as u64;
    while r > 0 && checked_pow(r, k).is_none_or(|v| v > n) {
        r -= 1;
    }
    while checked_pow(r + 1, k).is_some_and(|v| v <= n) {
        r += 1;
    }
    r
}

/// `floor(n^(1/k))` for 128-bit input.
pub fn iroot_u128(n: u128, k: u32) -> u128 {
    assert!(k >= 1);
    if k == 1 || n < 2 {
        return n;
    }
    let mut r = (n as f64).powf(1.0 / k as f64) as u128;
    while r > 0 && checked_pow_u128(r, k).is_none_or(|v| v > n) {
        r -= 1;
    }
    while checked_pow_u128(r + 1, k).is_some_and(|v| v <= n) {
        r += 1;
    }
    r
}

#[inline]
pub fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp)
}

#[inline]
pub fn checked_pow_u128(base: u128, exp: u32) -> Option<u128> {
    base.checked_pow(exp)
}

pub(crate) fn pow_or_overflow(base: u64, exp: u32, what: &'static str) -> Result<u64> {
    base.checked_pow(exp).ok_or(Error::Overflow(what))
}

pub(crate) fn pow_or_overflow_u128(base: u128, exp: u32, what: &'static str) -> Result<u128> {
    base.checked_pow(exp).ok_or(Error::Overflow(what))
}
