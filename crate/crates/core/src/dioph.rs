//! Diophantine counts behind the error term.
//!
//! [`count_n`] counts quadruples `(d, e, u, v)` with `v^l e^k - u^l d^k = h`
//! in open dyadic boxes `x ∼ X  <=>  X < x < 2X`, and [`reuss_bound`]
//! evaluates the upper bound those counts are compared with.
//! [`enumerate_equation`] lists solutions of `x y^k + C = a d^k`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Pow;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{gcd_u64, mod_inverse, mul_mod, Modulus};
use crate::error::{Error, Result};
use crate::local_density::PolySpec;

/// Largest number of `(u, d)` or `(v, e)` pairs kept in the hash table.
pub const BUILD_BUDGET: u64 = 10_000_000;
/// Largest number of pairs streamed against the table.
pub const PROBE_BUDGET: u64 = 100_000_000;
/// Largest `|y range| * |d range|` for [`enumerate_equation`].
pub const EQUATION_BUDGET: u64 = 10_000_000;
/// Floor on `log(DE)/log z` and `log(UV)/log z` for the first hypothesis.
pub const LOG_RATIO_FLOOR: f64 = 0.05;

/// Inclusive integer range; empty when `lo > hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct IntRange {
    pub lo: u64,
    pub hi: u64,
}

impl IntRange {
    pub fn new(lo: u64, hi: u64) -> Self {
        IntRange { lo, hi }
    }

    pub fn empty() -> Self {
        IntRange { lo: 1, hi: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn len(&self) -> u64 {
        if self.is_empty() {
            0
        } else {
            self.hi - self.lo + 1
        }
    }

    pub fn iter(&self) -> std::ops::RangeInclusive<u64> {
        self.lo..=self.hi
    }
}

/// Integers in the open interval `(x, 2x)`.
pub fn dyadic_members(x: f64) -> IntRange {
    if !(x.is_finite() && x > 0.0) {
        return IntRange::empty();
    }
    let lo = x.floor() + 1.0;
    let hi = (2.0 * x).ceil() - 1.0;
    if hi < lo || hi >= u64::MAX as f64 {
        return IntRange::empty();
    }
    IntRange::new(lo as u64, hi as u64)
}

/// Four dyadic scales for `d, e, u, v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DyadicBox {
    pub d: f64,
    pub e: f64,
    pub u: f64,
    pub v: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DyadicInstance {
    pub z: f64,
    pub d: f64,
    pub e: f64,
    pub k: u32,
    pub l: u32,
    pub h: i64,
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

impl DyadicInstance {
    pub fn new(z: f64, d: f64, e: f64, k: u32, l: u32, h: i64) -> Result<Self> {
        for (name, x) in [("z", z), ("D", d), ("E", e)] {
            if !(x.is_finite() && x > 1.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be a finite real > 1, got {x}"
                )));
            }
        }
        if l == 0 || l >= k {
            return Err(Error::InvalidInput(format!(
                "need 1 <= l < k, got k={k}, l={l}"
            )));
        }
        if h == 0 {
            return Err(Error::InvalidInput("h must be nonzero".into()));
        }
        Ok(DyadicInstance { z, d, e, k, l, h })
    }

    /// `U = z^(1/l) / D^(k/l)`.
    pub fn u(&self) -> f64 {
        (self.z.ln() / self.l as f64 - self.d.ln() * self.k as f64 / self.l as f64).exp()
    }

    /// `V = z^(1/l) / E^(k/l)`.
    pub fn v(&self) -> f64 {
        (self.z.ln() / self.l as f64 - self.e.ln() * self.k as f64 / self.l as f64).exp()
    }

    pub fn dyadic_box(&self) -> DyadicBox {
        DyadicBox {
            d: self.d,
            e: self.e,
            u: self.u(),
            v: self.v(),
        }
    }

    /// Integers in `(U, 2U)` (or `(V, 2V)` for `scale = E`), decided exactly by
    /// `z < n^l scale^k < 2^l z` rather than through the rounded `U`.
    fn derived_members(&self, scale: f64, approx: f64) -> Result<IntRange> {
        let guess = dyadic_members(approx);
        if guess.len() > PROBE_BUDGET {
            return Err(Error::budget("dyadic box width", guess.len(), PROBE_BUDGET));
        }
        let lo = guess.lo.saturating_sub(2).max(1);
        let hi = guess.hi.saturating_add(2);
        let z = exact(self.z);
        let z_top = &z * BigRational::from_integer(BigInt::from(2u32).pow(self.l));
        let sk = exact(scale).pow(self.k as i32);
        let inside = |n: u64| {
            let w = BigRational::from_integer(BigInt::from(n).pow(self.l)) * &sk;
            z < w && w < z_top
        };
        let first = (lo..=hi).find(|&n| inside(n));
        let Some(first) = first else {
            return Ok(IntRange::empty());
        };
        let last = (first..=hi).rev().find(|&n| inside(n)).unwrap_or(first);
        Ok(IntRange::new(first, last))
    }

    /// Member ranges `(d, e, u, v)`.
    pub fn member_ranges(&self) -> Result<[IntRange; 4]> {
        Ok([
            dyadic_members(self.d),
            dyadic_members(self.e),
            self.derived_members(self.d, self.u())?,
            self.derived_members(self.e, self.v())?,
        ])
    }
}

fn term(base_l: u64, l: u32, base_k: u64, k: u32) -> Result<i128> {
    let a = (base_l as i128).checked_pow(l);
    let b = (base_k as i128).checked_pow(k);
    a.zip(b)
        .and_then(|(a, b)| a.checked_mul(b))
        .filter(|v| *v < i128::MAX / 4)
        .ok_or(Error::Overflow("v^l e^k"))
}

fn pair_values(outer: IntRange, l: u32, inner: IntRange, k: u32) -> Result<Vec<i128>> {
    let mut out = Vec::with_capacity((outer.len() * inner.len()) as usize);
    for a in outer.iter() {
        for b in inner.iter() {
            out.push(term(a, l, b, k)?);
        }
    }
    Ok(out)
}

/// Number of `(d, e, u, v)` in the given ranges with `v^l e^k - u^l d^k = h`,
/// by hash join on the smaller side.
pub fn count_in_ranges(
    k: u32,
    l: u32,
    h: i64,
    d: IntRange,
    e: IntRange,
    u: IntRange,
    v: IntRange,
) -> Result<u64> {
    let left = u.len().saturating_mul(d.len());
    let right = v.len().saturating_mul(e.len());
    if left == 0 || right == 0 {
        return Ok(0);
    }
    let (small, large) = (left.min(right), left.max(right));
    if small > BUILD_BUDGET {
        return Err(Error::budget(
            "hash-join build side pairs",
            small,
            BUILD_BUDGET,
        ));
    }
    if large > PROBE_BUDGET {
        return Err(Error::budget(
            "hash-join probe side pairs",
            large,
            PROBE_BUDGET,
        ));
    }
    let h = h as i128;
    // key: u^l d^k + h == v^l e^k
    let (build, shift, probe_outer, probe_inner) = if left <= right {
        (pair_values(u, l, d, k)?, h, v, e)
    } else {
        (pair_values(v, l, e, k)?, -h, u, d)
    };
    let mut table: HashMap<i128, u32> = HashMap::with_capacity(build.len());
    for w in build {
        *table.entry(w + shift).or_default() += 1;
    }
    let outer: Vec<u64> = probe_outer.iter().collect();
    outer
        .par_iter()
        .map(|&a| {
            probe_inner.iter().try_fold(0u64, |acc, b| {
                let w = term(a, l, b, k)?;
                Ok(acc + table.get(&w).copied().unwrap_or(0) as u64)
            })
        })
        .sum()
}

/// Count over the four dyadic boxes of `b`.
pub fn count_box(k: u32, l: u32, h: i64, b: &DyadicBox) -> Result<u64> {
    count_in_ranges(
        k,
        l,
        h,
        dyadic_members(b.d),
        dyadic_members(b.e),
        dyadic_members(b.u),
        dyadic_members(b.v),
    )
}

/// `N(z; D, E)`.
pub fn count_n(inst: &DyadicInstance) -> Result<u64> {
    let [d, e, u, v] = inst.member_ranges()?;
    count_in_ranges(inst.k, inst.l, inst.h, d, e, u, v)
}

/// Scales `X_i = 2^i (a - 1/3)`, `i < levels`. The open intervals
/// `(X_i, 2 X_i)` are disjoint, no endpoint is an integer, and together they
/// cover exactly the integers `a ..= floor(2^levels (a - 1/3))`.
pub fn dyadic_tiling(a: u64, levels: u32) -> Vec<f64> {
    let x0 = a as f64 - 1.0 / 3.0;
    (0..levels).map(|i| x0 * (1u64 << i) as f64).collect()
}

/// Last integer covered by [`dyadic_tiling`]`(a, levels)`.
pub fn dyadic_tiling_end(a: u64, levels: u32) -> u64 {
    ((3 * a - 1) << levels) / 3
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReussBound {
    pub m: f64,
    pub bound_de: f64,
    pub bound_uv: f64,
    pub bound: f64,
    /// `log(DE) / log z`.
    pub log_ratio_de: f64,
    /// `log(UV) / log z`.
    pub log_ratio_uv: f64,
    /// `log(DE) / log(UV)`.
    pub log_ratio_de_uv: f64,
    /// `(logs comparable, l >= 2 or DE >= z^(1/k))`.
    pub conditions_ok: (bool, bool),
}

/// `z^eps min((DEM)^(1/2) + D + E, (UVM)^(1/2) + U + V)` with
/// `log M = (9/8) log(DE) log(UV) / log z`. The implied constant is taken as 1.
pub fn reuss_bound(inst: &DyadicInstance, epsilon: f64) -> Result<ReussBound> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidInput(format!(
            "epsilon must be > 0, got {epsilon}"
        )));
    }
    let (d, e, u, v) = (inst.d, inst.e, inst.u(), inst.v());
    let log_z = inst.z.ln();
    let log_de = (d * e).ln();
    let log_uv = u.ln() + v.ln();
    let m = (1.125 * log_de * log_uv / log_z).exp();
    let z_eps = inst.z.powf(epsilon);
    let bound_de = z_eps * ((d * e * m).sqrt() + d + e);
    let bound_uv = z_eps * ((u * v * m).sqrt() + u + v);
    let (r_de, r_uv) = (log_de / log_z, log_uv / log_z);
    let comparable = r_de >= LOG_RATIO_FLOOR && r_uv >= LOG_RATIO_FLOOR;
    let second = inst.l >= 2 || log_de >= log_z / inst.k as f64 - 1e-12;
    Ok(ReussBound {
        m,
        bound_de,
        bound_uv,
        bound: bound_de.min(bound_uv),
        log_ratio_de: r_de,
        log_ratio_uv: r_uv,
        log_ratio_de_uv: log_de / log_uv,
        conditions_ok: (comparable, second),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Solution {
    pub x: u64,
    pub y: u64,
    pub a: u128,
    pub d: u64,
}

/// All `(x, y, a, d)` with `x y^k + C = a d^k`, `a >= 1`, sorted. For each
/// `(y, d)` the solutions in `x` form one residue class mod `d^k / g`.
pub fn enumerate_equation(
    spec: PolySpec,
    x_range: IntRange,
    y_range: IntRange,
    d_range: IntRange,
) -> Result<Vec<Solution>> {
    if x_range.is_empty() || y_range.is_empty() || d_range.is_empty() {
        return Ok(Vec::new());
    }
    if x_range.lo == 0 || y_range.lo == 0 || d_range.lo == 0 {
        return Err(Error::InvalidInput(
            "ranges must contain positive integers only".into(),
        ));
    }
    let pairs = y_range.len().saturating_mul(d_range.len());
    if pairs > EQUATION_BUDGET {
        return Err(Error::budget(
            "equation (y, d) pairs",
            pairs,
            EQUATION_BUDGET,
        ));
    }
    let k = spec.k();
    let ds: Vec<u64> = d_range.iter().collect();
    let per_d: Vec<Vec<Solution>> = ds
        .par_iter()
        .map(|&d| -> Result<Vec<Solution>> {
            let Some(dk) = d.checked_pow(k) else {
                return Ok(Vec::new());
            };
            let m = Modulus::new(dk)?;
            let neg_c = m.reduce(-(spec.c() as i128));
            let mut out = Vec::new();
            for y in y_range.iter() {
                let t = m.reduce(spec.eval(1, y)? - spec.c() as i128);
                let g = gcd_u64(t, dk);
                if neg_c % g != 0 {
                    continue;
                }
                let step = dk / g;
                let reduced = Modulus::new(step)?;
                let inv = mod_inverse((t / g) % step, reduced).expect("coprime");
                let x0 = mul_mod((neg_c / g) % step, inv, step);
                let offset = (x0 + step - x_range.lo % step) % step;
                let mut x = x_range.lo.checked_add(offset);
                while let Some(xv) = x.filter(|&xv| xv <= x_range.hi) {
                    let f = spec.eval(xv, y)?;
                    if f > 0 {
                        out.push(Solution {
                            x: xv,
                            y,
                            a: (f as u128) / dk as u128,
                            d,
                        });
                        if out.len() as u64 > EQUATION_BUDGET {
                            return Err(Error::budget(
                                "equation solutions",
                                out.len() as u64,
                                EQUATION_BUDGET,
                            ));
                        }
                    }
                    x = xv.checked_add(step);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut all: Vec<Solution> = per_d.into_iter().flatten().collect();
    if all.len() as u64 > EQUATION_BUDGET {
        return Err(Error::budget(
            "equation solutions",
            all.len() as u64,
            EQUATION_BUDGET,
        ));
    }
    all.sort_unstable();
    Ok(all)
}
