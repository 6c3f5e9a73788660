//! Exact counts over the box `1 <= x, y <= H`.
//!
//! `S(H)` counts pairs with `f(x, y)` k-free, `S'(H)` does the same over prime
//! pairs, and `S(m, H)` counts pairs with `f(x, y) ≡ 0 (mod m)`. Nonpositive
//! values follow [`crate::arith::mu_k`]: negatives are judged by absolute
//! value and 0 is never k-free.

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{gcd_u64, iroot_u128, mod_inverse, mod_pow, mu_k, Modulus};
use crate::error::{Error, Result};
use crate::euler_product::{c_f, c_f_prime, ProductBracket};
use crate::local_density::{count_m, PolySpec};
use crate::sieves::{fold_kfree_segments, mobius_up_to, primes_up_to, SieveConfig};

/// Largest `|f(x, y)|` the sieve path will cover.
pub const VALUE_BUDGET: u64 = 2_000_000_000;
/// Largest `H` for the per-value factorization path.
pub const FACTORIZATION_MAX_H: u64 = 200;
pub const MAX_CONGRUENCE_MODULUS: u64 = 1_000_000_000;
pub const MAX_CONGRUENCE_H: u64 = 1_000_000_000;
/// Precision of the Euler-product bracket behind every main term.
pub const MAIN_TERM_PRECISION: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Restriction {
    AllIntegers,
    PrimesOnly,
}

impl Restriction {
    pub fn as_str(self) -> &'static str {
        match self {
            Restriction::AllIntegers => "all-integers",
            Restriction::PrimesOnly => "primes-only",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountPath {
    /// Segmented k-free table over the value range.
    Sieve,
    /// Factor every value.
    Factorization,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxCount {
    pub k: u32,
    pub c: i64,
    pub h: u64,
    pub restriction: Restriction,
    pub count: u64,
    /// Number of pairs in the box: `H^2` or `pi(H)^2`.
    pub pairs: u64,
    pub main_term: f64,
    pub main_term_lower: f64,
    pub main_term_upper: f64,
    /// `|count - main_term| / main_term`, or 0 when the main term vanishes.
    pub relative_deviation: f64,
    /// Smallest and largest relative deviation over the bracket endpoints.
    pub relative_deviation_range: (f64, f64),
}

impl BoxCount {
    fn new(
        spec: PolySpec,
        h: u64,
        restriction: Restriction,
        count: u64,
        side: u64,
        bracket: &ProductBracket,
    ) -> Self {
        let area = (side as f64) * (side as f64);
        let main = bracket.midpoint() * area;
        let rel = |m: f64| {
            if m > 0.0 {
                (count as f64 - m).abs() / m
            } else {
                0.0
            }
        };
        let (lo, hi) = (bracket.lower * area, bracket.upper * area);
        let (a, b) = (rel(lo), rel(hi));
        let inside = (lo..=hi).contains(&(count as f64));
        BoxCount {
            k: spec.k(),
            c: spec.c(),
            h,
            restriction,
            count,
            pairs: side * side,
            main_term: main,
            main_term_lower: lo,
            main_term_upper: hi,
            relative_deviation: rel(main),
            relative_deviation_range: (if inside { 0.0 } else { a.min(b) }, a.max(b)),
        }
    }
}

fn axis(h: u64, restriction: Restriction) -> Result<Vec<u64>> {
    match restriction {
        Restriction::AllIntegers => Ok((1..=h).collect()),
        Restriction::PrimesOnly => Ok(primes_up_to(h)?.iter().collect()),
    }
}

fn check_h(h: u64) -> Result<()> {
    if h == 0 {
        return Err(Error::InvalidInput("H must be >= 1".into()));
    }
    Ok(())
}

/// Counts pairs `(x, y) ∈ xs × ys` with `f(x, y)` k-free. Both axes must be
/// sorted ascending and positive.
pub fn count_kfree_pairs(spec: PolySpec, xs: &[u64], ys: &[u64], path: CountPath) -> Result<u64> {
    if xs.is_empty() || ys.is_empty() {
        return Ok(0);
    }
    debug_assert!(xs.windows(2).all(|w| w[0] < w[1]) && ys.windows(2).all(|w| w[0] < w[1]));
    match path {
        CountPath::Factorization => count_by_factorization(spec, xs, ys),
        CountPath::Sieve => count_by_sieve(spec, xs, ys, &SieveConfig::default()),
    }
}

fn count_by_factorization(spec: PolySpec, xs: &[u64], ys: &[u64]) -> Result<u64> {
    let max_side = xs.last().unwrap().max(ys.last().unwrap());
    if *max_side > FACTORIZATION_MAX_H {
        return Err(Error::budget(
            "factorization path H",
            *max_side,
            FACTORIZATION_MAX_H,
        ));
    }
    ys.par_iter()
        .map(|&y| {
            xs.iter().try_fold(0u64, |acc, &x| {
                let v = spec.eval(x, y)?;
                let v = i64::try_from(v).map_err(|_| Error::Overflow("f(x, y) as i64"))?;
                Ok(acc + mu_k(v, spec.k()) as u64)
            })
        })
        .sum()
}

pub(crate) fn count_by_sieve(
    spec: PolySpec,
    xs: &[u64],
    ys: &[u64],
    cfg: &SieveConfig,
) -> Result<u64> {
    let k = spec.k();
    let c = spec.c() as i128;
    let top = spec.eval(*xs.last().unwrap(), *ys.last().unwrap())?;
    let bottom = spec.eval(xs[0], ys[0])?;
    let extent = top.unsigned_abs().max(bottom.unsigned_abs());
    if extent > VALUE_BUDGET as u128 {
        return Err(Error::budget(
            "sieve value range |f(x, y)|",
            extent,
            VALUE_BUDGET,
        ));
    }
    let yks: Vec<i128> = ys.iter().map(|&y| (y as i128).pow(k)).collect();

    // values <= 0 occur only for C < 0 and are few: judge them directly
    let mut count = 0u64;
    if c < 0 {
        for &yk in &yks {
            if yk + c > 0 {
                break;
            }
            for &x in xs {
                let v = x as i128 * yk + c;
                if v > 0 {
                    break;
                }
                count += mu_k(v as i64, k) as u64;
            }
        }
    }
    if top <= 0 {
        return Ok(count);
    }
    let lo = bottom.max(1) as u64;
    let hi = top as u64;
    let per_segment = fold_kfree_segments(lo, hi, k, cfg, |seg| {
        let (s_lo, s_hi) = (seg.lo() as i128, seg.hi() as i128);
        let mut n = 0u64;
        for &yk in &yks {
            // x with s_lo <= x*yk + C <= s_hi
            let x_min = (s_lo - c + yk - 1).div_euclid(yk);
            let x_max = (s_hi - c).div_euclid(yk);
            if x_max < 1 || x_min > x_max {
                continue;
            }
            let start = xs.partition_point(|&x| (x as i128) < x_min);
            let end = xs.partition_point(|&x| (x as i128) <= x_max);
            for &x in &xs[start..end] {
                if seg.is_kfree((x as i128 * yk + c) as u64) {
                    n += 1;
                }
            }
        }
        n
    })?;
    Ok(count + per_segment.into_iter().sum::<u64>())
}

/// The sieve when the value range fits its budget, else factorization for
/// small boxes.
pub fn default_path(spec: PolySpec, h: u64) -> CountPath {
    let within_sieve = spec
        .eval(h, h)
        .is_ok_and(|v| v.unsigned_abs() <= VALUE_BUDGET as u128)
        && spec.c().unsigned_abs() <= VALUE_BUDGET;
    if within_sieve || h > FACTORIZATION_MAX_H {
        CountPath::Sieve
    } else {
        CountPath::Factorization
    }
}

/// `S(H)` with its main term `c_f H^2`.
pub fn count_s(spec: PolySpec, h: u64) -> Result<BoxCount> {
    count_s_with(spec, h, default_path(spec, h))
}

pub fn count_s_with(spec: PolySpec, h: u64, path: CountPath) -> Result<BoxCount> {
    check_h(h)?;
    let bracket = c_f(spec, MAIN_TERM_PRECISION)?;
    count_with_bracket(spec, h, Restriction::AllIntegers, path, &bracket)
}

/// `S'(H)` over primes `p, q <= H` with its main term `c'_f pi(H)^2`.
pub fn count_s_prime(spec: PolySpec, h: u64) -> Result<BoxCount> {
    count_s_prime_with(spec, h, default_path(spec, h))
}

pub fn count_s_prime_with(spec: PolySpec, h: u64, path: CountPath) -> Result<BoxCount> {
    check_h(h)?;
    let bracket = c_f_prime(spec, MAIN_TERM_PRECISION)?;
    count_with_bracket(spec, h, Restriction::PrimesOnly, path, &bracket)
}

/// Count over the box using an already computed bracket for the main term.
pub fn count_with_bracket(
    spec: PolySpec,
    h: u64,
    restriction: Restriction,
    path: CountPath,
    bracket: &ProductBracket,
) -> Result<BoxCount> {
    check_h(h)?;
    let side = axis(h, restriction)?;
    let count = count_kfree_pairs(spec, &side, &side, path)?;
    Ok(BoxCount::new(
        spec,
        h,
        restriction,
        count,
        side.len() as u64,
        bracket,
    ))
}

/// Solutions `1 <= x <= h` of `x * t ≡ neg_c (mod m)`.
fn linear_solutions_in_box(t: u64, neg_c: u64, m: Modulus, h: u64) -> u64 {
    let md = m.get();
    let g = gcd_u64(t, md);
    if !neg_c.is_multiple_of(g) {
        return 0;
    }
    let reduced = Modulus::new(md / g).expect("nonzero");
    let inv = mod_inverse((t / g) % reduced.get(), reduced).expect("coprime after dividing by gcd");
    let x0 = crate::arith::mul_mod((neg_c / g) % reduced.get(), inv, reduced.get());
    count_m(x0, reduced, h)
}

/// `S(m, H)`: pairs in the box with `f(x, y) ≡ 0 (mod m)`.
///
/// For each `y` the congruence is linear in `x`: solvable iff
/// `gcd(y^k, m) | C`, with `gcd(y^k, m)` solutions per period. Since that only
/// depends on `y mod m`, the loop runs over `min(H, m)` residues.
pub fn count_congruence_box(spec: PolySpec, m: Modulus, h: u64) -> Result<u64> {
    check_h(h)?;
    let md = m.get();
    if md > MAX_CONGRUENCE_MODULUS {
        return Err(Error::budget(
            "congruence modulus",
            md,
            MAX_CONGRUENCE_MODULUS,
        ));
    }
    if h > MAX_CONGRUENCE_H {
        return Err(Error::budget("congruence box H", h, MAX_CONGRUENCE_H));
    }
    let neg_c = m.reduce(-(spec.c() as i128));
    let k = spec.k() as u64;
    let row = |r: u64, weight: u64| -> u64 {
        if weight == 0 {
            return 0;
        }
        weight * linear_solutions_in_box(mod_pow(r, k, m), neg_c, m, h)
    };
    let full_periods = h >= md;
    let n = if full_periods { md } else { h };
    let eval = |i: u64| {
        if full_periods {
            row(i, count_m(i, m, h))
        } else {
            row(i + 1, 1)
        }
    };
    Ok(if n > 1 << 16 {
        (0..n).into_par_iter().map(eval).sum()
    } else {
        (0..n).map(eval).sum()
    })
}

/// Largest `H` for [`congruence_counts_up_to`].
pub const MAX_SWEEP_H: u64 = 10_000;

/// `S(m, H)` for every `0 <= H <= h_max` at once: each solution `(x, y)` of
/// the box `[1, h_max]^2` is counted from `H = max(x, y)` onwards.
pub fn congruence_counts_up_to(spec: PolySpec, m: Modulus, h_max: u64) -> Result<Vec<u64>> {
    if h_max > MAX_SWEEP_H {
        return Err(Error::budget("congruence sweep H", h_max, MAX_SWEEP_H));
    }
    let md = m.get();
    let neg_c = m.reduce(-(spec.c() as i128));
    let mut hist = vec![0u64; h_max as usize + 1];
    for y in 1..=h_max {
        let t = mod_pow(y, spec.k() as u64, m);
        let g = gcd_u64(t, md);
        if !neg_c.is_multiple_of(g) {
            continue;
        }
        let step = md / g;
        let reduced = Modulus::new(step).expect("nonzero");
        let inv = mod_inverse((t / g) % step, reduced).expect("coprime after dividing by gcd");
        let x0 = match crate::arith::mul_mod((neg_c / g) % step, inv, step) {
            0 => step,
            r => r,
        };
        for x in (x0..=h_max).step_by(step as usize) {
            hist[x.max(y) as usize] += 1;
        }
    }
    let mut acc = 0;
    for v in hist.iter_mut() {
        acc += *v;
        *v = acc;
    }
    Ok(hist)
}

/// Pairs in the box with `f(x, y) = 0`, i.e. `x y^k = -C`.
pub fn zero_value_pairs(spec: PolySpec, h: u64) -> u64 {
    if spec.c() > 0 {
        return 0;
    }
    let target = spec.c().unsigned_abs();
    let mut n = 0;
    for y in 1..=h {
        let Some(yk) = y.checked_pow(spec.k()).filter(|&v| v <= target) else {
            break;
        };
        if target.is_multiple_of(yk) && target / yk <= h {
            n += 1;
        }
    }
    n
}

/// `floor(max |f|^(1/k))` over the box, at least 1: every `d` with
/// `d^k | f(x, y) != 0` is at most this.
pub fn max_divisor(spec: PolySpec, h: u64) -> Result<u64> {
    let top = spec.eval(h, h)?.unsigned_abs();
    let bottom = spec.eval(1, 1)?.unsigned_abs();
    let z = iroot_u128(top.max(bottom), spec.k()).max(1);
    u64::try_from(z).map_err(|_| Error::Overflow("max divisor"))
}

/// `sum_{d <= z} mu(d) S*(d^k, H)`, where `S*` is [`count_congruence_box`]
/// with the pairs at which `f` vanishes left out (they are divisible by every
/// `d^k` and contribute nothing to `S(H)`). With `z = max_divisor(spec, H)`
/// this equals `S(H)` exactly.
pub fn truncated_main_term(spec: PolySpec, h: u64, z: u64) -> Result<i128> {
    check_h(h)?;
    if z == 0 {
        return Err(Error::InvalidInput("z must be >= 1".into()));
    }
    let zk = (z as u128).checked_pow(spec.k());
    if zk.is_none_or(|v| v > MAX_CONGRUENCE_MODULUS as u128) {
        return Err(Error::budget(
            "truncated main term modulus z^k",
            zk.unwrap_or(u128::MAX),
            MAX_CONGRUENCE_MODULUS,
        ));
    }
    let mobius = mobius_up_to(z);
    let zeros = zero_value_pairs(spec, h) as i128;
    let terms: Vec<i128> = (1..=z)
        .into_par_iter()
        .filter(|&d| mobius.get(d) != 0)
        .map(|d| {
            let m = Modulus::new(d.pow(spec.k()))?;
            let s = count_congruence_box(spec, m, h)? as i128;
            Ok(mobius.get(d) as i128 * (s - zeros))
        })
        .collect::<Result<_>>()?;
    Ok(terms.into_iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(k: u32, c: i64) -> PolySpec {
        PolySpec::new(k, c).unwrap()
    }

    fn m(x: u64) -> Modulus {
        Modulus::new(x).unwrap()
    }

    fn raw(s: PolySpec, h: u64, path: CountPath) -> u64 {
        let side: Vec<u64> = (1..=h).collect();
        count_kfree_pairs(s, &side, &side, path).unwrap()
    }

    #[test]
    fn count_s_examples() {
        assert_eq!(count_s(spec(2, 4), 3).unwrap().count, 6);
        assert_eq!(count_s(spec(2, 4), 1).unwrap().count, 1);
        assert_eq!(count_s(spec(2, -4), 2).unwrap().count, 2);
        for path in [CountPath::Sieve, CountPath::Factorization] {
            assert_eq!(raw(spec(2, -4), 2, path), 2);
            assert_eq!(raw(spec(2, 4), 3, path), 6);
        }
    }

    #[test]
    fn count_s_prime_examples() {
        assert_eq!(count_s_prime(spec(2, 4), 5).unwrap().count, 4);
        assert_eq!(count_s_prime(spec(2, 4), 2).unwrap().count, 0);
        let none = count_s_prime(spec(2, 4), 1).unwrap();
        assert_eq!((none.count, none.pairs), (0, 0));
        assert_eq!(none.relative_deviation, 0.0);
    }

    #[test]
    fn paths_agree() {
        for k in [2, 3] {
            for c in [1i64, -1, 4, -4, 12, -30, 7] {
                for h in [1u64, 2, 5, 17, 50, 100] {
                    let s = spec(k, c);
                    assert_eq!(
                        raw(s, h, CountPath::Sieve),
                        raw(s, h, CountPath::Factorization),
                        "k={k} C={c} H={h}"
                    );
                }
            }
        }
    }

    #[test]
    fn sieve_path_is_segment_width_independent() {
        let s = spec(2, -7);
        let side: Vec<u64> = (1..=300).collect();
        let base = count_by_sieve(s, &side, &side, &SieveConfig::default()).unwrap();
        for w in [64u64, 4096, 1 << 16] {
            let cfg = SieveConfig {
                segment_width: w,
                ..SieveConfig::default()
            };
            assert_eq!(count_by_sieve(s, &side, &side, &cfg).unwrap(), base);
        }
    }

    #[test]
    fn primes_only_is_a_sub_box() {
        let s = spec(2, 4);
        for h in [10u64, 50, 100] {
            let all = count_s(s, h).unwrap().count;
            let primes = count_s_prime(s, h).unwrap().count;
            assert!(primes <= all);
        }
    }

    #[test]
    fn budget_errors() {
        assert!(matches!(
            count_s(spec(2, 4), 5000),
            Err(Error::Budget { .. })
        ));
        assert!(matches!(
            count_s_with(spec(2, 4), 300, CountPath::Factorization),
            Err(Error::Budget { .. })
        ));
        assert!(count_s(spec(2, 4), 0).is_err());
        assert!(count_congruence_box(spec(2, 4), m(MAX_CONGRUENCE_MODULUS + 1), 5).is_err());
    }

    #[test]
    fn congruence_examples() {
        assert_eq!(count_congruence_box(spec(2, 4), m(4), 10).unwrap(), 60);
        assert_eq!(count_congruence_box(spec(2, 4), m(1), 7).unwrap(), 49);
        let s = spec(2, 3);
        let direct = (1..=9u64)
            .flat_map(|x| (1..=9u64).map(move |y| (x, y)))
            .filter(|&(x, y)| (x * y * y + 3) % 9 == 0)
            .count() as u64;
        assert_eq!(count_congruence_box(s, m(9), 9).unwrap(), direct);
    }

    #[test]
    fn sweep_matches_pointwise_counts() {
        for (k, c) in [(2, 4), (3, -1), (2, 3)] {
            let s = spec(k, c);
            for md in [1u64, 2, 4, 9, 12, 36, 97, 128, 1000, 7919] {
                let sweep = congruence_counts_up_to(s, m(md), 150).unwrap();
                assert_eq!(sweep[0], 0);
                for h in 1..=150u64 {
                    assert_eq!(
                        sweep[h as usize],
                        count_congruence_box(s, m(md), h).unwrap(),
                        "m={md} H={h}"
                    );
                }
            }
        }
    }

    #[test]
    fn congruence_matches_double_loop() {
        for (k, c) in [(2i64, 4i64), (3, -1), (2, -12)] {
            let s = spec(k as u32, c);
            for md in [1u64, 3, 8, 25, 36, 49, 210, 999] {
                for h in [1u64, 10, 37, 100] {
                    let direct = (1..=h)
                        .flat_map(|x| (1..=h).map(move |y| (x, y)))
                        .filter(|&(x, y)| s.eval(x, y).unwrap().rem_euclid(md as i128) == 0)
                        .count() as u64;
                    assert_eq!(count_congruence_box(s, m(md), h).unwrap(), direct);
                }
            }
        }
    }

    #[test]
    fn truncated_examples() {
        let s = spec(2, 4);
        assert_eq!(max_divisor(s, 3).unwrap(), 5);
        assert_eq!(truncated_main_term(s, 3, 5).unwrap(), 6);
        assert_eq!(truncated_main_term(s, 17, 1).unwrap(), 17 * 17);
        assert!(truncated_main_term(s, 17, 0).is_err());
    }

    #[test]
    fn truncation_at_sqrt_h_is_close() {
        let s = spec(2, 4);
        let h = 50;
        let exact = count_s(s, h).unwrap().count as i128;
        let partial = truncated_main_term(s, h, 7).unwrap();
        let z = max_divisor(s, h).unwrap();
        let omitted: i128 = (8..=z)
            .map(|d| count_congruence_box(s, m(d.pow(2)), h).unwrap() as i128)
            .sum();
        assert!((partial - exact).abs() <= omitted);
    }

    #[test]
    fn zero_values_are_handled() {
        // x y^2 = 12 has (12,1), (3,2) inside H = 12
        assert_eq!(zero_value_pairs(spec(2, -12), 12), 2);
        assert_eq!(zero_value_pairs(spec(2, -12), 5), 1);
        assert_eq!(zero_value_pairs(spec(2, 12), 100), 0);
        let s = spec(2, -12);
        for h in [3u64, 12, 20] {
            let z = max_divisor(s, h).unwrap();
            assert_eq!(
                truncated_main_term(s, h, z).unwrap(),
                count_s(s, h).unwrap().count as i128
            );
        }
    }

    #[test]
    fn box_count_fields() {
        let b = count_s(spec(2, 4), 100).unwrap();
        assert_eq!(b.pairs, 10_000);
        assert!(b.main_term_lower <= b.main_term && b.main_term <= b.main_term_upper);
        let (lo, hi) = b.relative_deviation_range;
        assert!(lo <= b.relative_deviation && b.relative_deviation <= hi);
    }
}
