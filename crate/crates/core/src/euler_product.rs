//! Certified enclosures of the Euler products
//!
//! ```text
//! c_f  = prod_p (1 - rho(p^k) / p^(2k))
//! c'_f = prod_p (1 - rho'(p^k) / phi(p^k)^2)
//! ```
//!
//! The finite product over `p <= P` is accumulated in outward-rounded
//! interval arithmetic. The tail over `p > P` lies in `[exp(-T), 1]` with
//! `T = 2 P^(1-k) / (k-1)`:
//!
//! * plain: for `p > P >= |C|^(1/k)` we have `p^k ∤ C`, so the factor is
//!   `1 - x` with `x = (p-1)/p^(k+1) <= p^-k <= 1/2`;
//! * coprime: `x = 1/phi(p^k)` and for `p >= 3`, `x/(1-x) <= 2 p^-k`;
//!
//! and `-log(1-x) <= x + x^2 <= 2x` for `x <= 1/2`, while
//! `sum_{n>P} n^-k <= P^(1-k)/(k-1)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::iroot;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::local_density::{rho_of_power, rho_prime_power_closed, PolySpec, Variant};
use crate::sieves::{fold_prime_segments, mobius_up_to, SieveConfig, MAX_PRIME_LIMIT};

/// Tightest precision accepted by [`c_f`] and [`c_f_prime`].
pub const MIN_PRECISION: f64 = 1e-14;

/// Largest prime cutoff the enclosure will sieve to.
pub const MAX_PRODUCT_CUTOFF: u64 = MAX_PRIME_LIMIT;

pub const MAX_DIAGNOSTIC_Z: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProductBracket {
    pub variant: Variant,
    pub k: u32,
    pub c: i64,
    pub lower: f64,
    pub upper: f64,
    pub prime_cutoff: u64,
    pub tail_bound: f64,
}

impl ProductBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// True when `self` lies inside `outer`.
    pub fn is_within(&self, outer: &ProductBracket) -> bool {
        outer.lower <= self.lower && self.upper <= outer.upper
    }
}

/// Enclosure of the local factor `1 - x_p` at the prime `p`.
fn local_factor(spec: PolySpec, variant: Variant, p: u64) -> Interval {
    let k = spec.k();
    let pi = Interval::from_u128(p as u128);
    match variant {
        Variant::Plain => {
            let p2k = (p as u128).checked_pow(2 * k);
            match (p2k, rho_prime_power_closed(spec, p, k)) {
                (Some(den), Ok(rho)) => Interval::from_u128(rho.value)
                    .div(Interval::from_u128(den))
                    .one_minus(),
                // p^k out of range, hence p^k ∤ C and rho(p^k) = phi(p^k)
                _ => Interval::from_u128((p - 1) as u128)
                    .div(pi.pow(k + 1))
                    .one_minus(),
            }
        }
        Variant::Coprime => {
            if spec.c().unsigned_abs().is_multiple_of(p) {
                Interval::ONE
            } else {
                let phi = Interval::from_u128((p - 1) as u128).mul(pi.pow(k - 1));
                Interval::ONE.div(phi).one_minus()
            }
        }
    }
}

/// Upper bound on `T = 2 P^(1-k) / (k-1)`.
fn tail_exponent(k: u32, cutoff: u64) -> f64 {
    let p_pow = Interval::from_u128(cutoff as u128).pow(k - 1);
    (2.0 / ((k - 1) as f64 * p_pow.lo)).next_up()
}

fn minimum_cutoff(spec: PolySpec) -> u64 {
    iroot(spec.c().unsigned_abs(), spec.k()).max(2)
}

fn bracket_at(
    spec: PolySpec,
    variant: Variant,
    cutoff: u64,
    cfg: &SieveConfig,
) -> Result<ProductBracket> {
    if cutoff > MAX_PRODUCT_CUTOFF {
        return Err(Error::budget(
            "Euler product prime cutoff",
            cutoff,
            MAX_PRODUCT_CUTOFF,
        ));
    }
    let min_cut = minimum_cutoff(spec);
    if cutoff < min_cut {
        return Err(Error::InvalidInput(format!(
            "prime cutoff {cutoff} is below the minimum {min_cut} for k={}, C={}",
            spec.k(),
            spec.c()
        )));
    }
    // fixed segment boundaries, combined in order: result is independent of
    // the worker count
    let partials = fold_prime_segments(2, cutoff, cfg, |primes| {
        primes.iter().fold(Interval::ONE, |acc, &p| {
            acc.mul_unit(local_factor(spec, variant, p))
        })
    })?;
    let finite = partials
        .into_iter()
        .fold(Interval::ONE, |acc, part| acc.mul_unit(part));
    let t = tail_exponent(spec.k(), cutoff);
    let tail_lo = (-t).exp().next_down().next_down();
    Ok(ProductBracket {
        variant,
        k: spec.k(),
        c: spec.c(),
        lower: (finite.lo * tail_lo).next_down(),
        upper: finite.hi,
        prime_cutoff: cutoff,
        tail_bound: t,
    })
}

/// Enclosure of `c_f` using the finite product over `p <= cutoff`.
pub fn c_f_at_cutoff(spec: PolySpec, cutoff: u64) -> Result<ProductBracket> {
    bracket_at(spec, Variant::Plain, cutoff, &SieveConfig::default())
}

/// Enclosure of `c'_f` using the finite product over `p <= cutoff`.
pub fn c_f_prime_at_cutoff(spec: PolySpec, cutoff: u64) -> Result<ProductBracket> {
    bracket_at(spec, Variant::Coprime, cutoff, &SieveConfig::default())
}

fn with_precision(spec: PolySpec, variant: Variant, precision: f64) -> Result<ProductBracket> {
    if !(precision.is_finite() && precision >= MIN_PRECISION) {
        return Err(Error::InvalidInput(format!(
            "precision must be at least {MIN_PRECISION:e}, got {precision:e}"
        )));
    }
    let k = spec.k();
    // aim for T <= precision / 2, leaving room for rounding
    let needed = (4.0 / ((k - 1) as f64 * precision)).powf(1.0 / (k - 1) as f64);
    if !needed.is_finite() || needed > MAX_PRODUCT_CUTOFF as f64 {
        return Err(Error::budget(
            "Euler product prime cutoff",
            needed.min(u128::MAX as f64) as u128,
            MAX_PRODUCT_CUTOFF,
        ));
    }
    let mut cutoff = (needed.ceil() as u64 + 1).max(minimum_cutoff(spec));
    loop {
        let bracket = bracket_at(spec, variant, cutoff, &SieveConfig::default())?;
        if bracket.width() <= precision {
            return Ok(bracket);
        }
        cutoff = cutoff
            .checked_mul(2)
            .ok_or(Error::Overflow("prime cutoff"))?;
    }
}

/// Enclosure of `c_f` of width at most `precision`.
pub fn c_f(spec: PolySpec, precision: f64) -> Result<ProductBracket> {
    with_precision(spec, Variant::Plain, precision)
}

/// Enclosure of `c'_f` of width at most `precision`.
pub fn c_f_prime(spec: PolySpec, precision: f64) -> Result<ProductBracket> {
    with_precision(spec, Variant::Coprime, precision)
}

/// Truncated sums over squarefree `d <= z1` that control the main term of the
/// Möbius expansion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PartialSums {
    pub z1: u64,
    /// `sum mu(d) rho(d^k) / d^(2k)`, which tends to `c_f`.
    pub mobius_weighted: f64,
    /// `sum rho(d^k) / d^k`.
    pub first_moment: f64,
    /// `sum rho(d^k)`, exact.
    pub rho_sum: u128,
}

pub fn partial_sum_diagnostics(spec: PolySpec, z1: u64) -> Result<PartialSums> {
    if z1 == 0 {
        return Err(Error::InvalidInput("z1 must be >= 1".into()));
    }
    if z1 > MAX_DIAGNOSTIC_Z {
        return Err(Error::budget("diagnostic z1", z1, MAX_DIAGNOSTIC_Z));
    }
    let mobius = mobius_up_to(z1);
    let k = spec.k() as i32;
    let terms: Vec<(f64, f64, u128)> = (1..=z1)
        .into_par_iter()
        .filter(|&d| mobius.get(d) != 0)
        .map(|d| {
            let r = rho_of_power(spec, d, spec.k())?;
            let df = d as f64;
            let rf = r as f64;
            Ok((
                mobius.get(d) as f64 * rf / df.powi(2 * k),
                rf / df.powi(k),
                r,
            ))
        })
        .collect::<Result<_>>()?;
    let mut out = PartialSums {
        z1,
        mobius_weighted: 0.0,
        first_moment: 0.0,
        rho_sum: 0,
    };
    for (w, f, r) in terms {
        out.mobius_weighted += w;
        out.first_moment += f;
        out.rho_sum = out
            .rho_sum
            .checked_add(r)
            .ok_or(Error::Overflow("rho partial sum"))?;
    }
    Ok(out)
}

/// `-log(1 - x_p)` summed over primes in `(lo, hi]` in plain `f64`; a
/// diagnostic for checking the tail bound, not part of any enclosure.
pub fn tail_log_sum(spec: PolySpec, variant: Variant, lo: u64, hi: u64) -> Result<f64> {
    let parts = fold_prime_segments(lo + 1, hi, &SieveConfig::default(), |primes| {
        primes
            .iter()
            .map(|&p| {
                let f = local_factor(spec, variant, p);
                -(0.5 * (f.lo + f.hi)).ln()
            })
            .sum::<f64>()
    })?;
    Ok(parts.into_iter().sum())
}

/// The exact rational value of `1 - rho(p^k)/p^(2k)` (or the coprime
/// analogue), as `(numerator, denominator)`.
pub fn local_factor_exact(spec: PolySpec, variant: Variant, p: u64) -> Result<(u128, u128)> {
    let k = spec.k();
    match variant {
        Variant::Plain => {
            let den = crate::arith::pow_or_overflow_u128(p as u128, 2 * k, "p^(2k)")?;
            let rho = rho_prime_power_closed(spec, p, k)?.value;
            Ok((den - rho, den))
        }
        Variant::Coprime => {
            let phi = ((p - 1) as u128) * (p as u128).pow(k - 1);
            let den = phi.checked_mul(phi).ok_or(Error::Overflow("phi(p^k)^2"))?;
            let rho = crate::local_density::rho_prime_variant_prime_power(spec, p, k)?.value;
            Ok((den - rho, den))
        }
    }
}
