//! Local solution counts of `x*y^k + C ≡ 0 (mod m)`.
//!
//! `rho(m)` counts residue pairs `(mu, nu)` mod `m` solving the congruence and
//! `rho'(m)` counts those with both coordinates invertible. Three independent
//! routes are provided: brute force over residues, a prime-power closed form,
//! and multiplicative composition of the closed form. The closed form is only
//! trusted after [`certify_closed_forms`] agrees with brute force.
//!
//! Prime-power closed form: split `nu` by its valuation `t = v_p(nu)`. For such
//! `nu` the linear congruence `mu * nu^k ≡ -C (mod p^j)` has `g = p^min(kt, j)`
//! solutions when `g | C` and none otherwise, and there are `(p-1) p^(j-t-1)`
//! residues of valuation `t < j` plus the single residue `nu = 0`.

use serde::Serialize;

use crate::arith::{
    factorize, gcd_u64, is_prime, mod_inverse, mod_pow, pow_or_overflow, pow_or_overflow_u128,
    valuation, Modulus,
};
use crate::error::{Error, Result};

/// Largest modulus accepted by the brute-force oracle.
pub const BRUTE_MAX_MODULUS: u64 = 1_000_000;
/// Largest modulus for which the plain double loop is used.
pub const PAIR_SCAN_MAX_MODULUS: u64 = 1_000;

/// The polynomial `f(x, y) = x*y^k + C` with `k >= 2`, `C != 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PolySpec {
    k: u32,
    c: i64,
}

impl PolySpec {
    pub fn new(k: u32, c: i64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidInput(format!("k must be >= 2, got {k}")));
        }
        if c == 0 {
            return Err(Error::InvalidInput("C must be nonzero".into()));
        }
        Ok(PolySpec { k, c })
    }

    #[inline]
    pub fn k(&self) -> u32 {
        self.k
    }

    #[inline]
    pub fn c(&self) -> i64 {
        self.c
    }

    /// `x*y^k + C` in 128-bit arithmetic.
    pub fn eval(&self, x: u64, y: u64) -> Result<i128> {
        let yk = pow_or_overflow_u128(y as u128, self.k, "f(x, y)")?;
        let xyk = (x as u128)
            .checked_mul(yk)
            .filter(|&v| v <= i128::MAX as u128 / 2)
            .ok_or(Error::Overflow("f(x, y)"))?;
        Ok(xyk as i128 + self.c as i128)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Plain,
    Coprime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Brute,
    Closed,
    Multiplicative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LocalDensity {
    pub m: u64,
    pub value: u128,
    pub variant: Variant,
    pub method: Method,
}

fn check_brute_budget(m: u64) -> Result<()> {
    if m > BRUTE_MAX_MODULUS {
        return Err(Error::budget("brute-force modulus", m, BRUTE_MAX_MODULUS));
    }
    Ok(())
}

/// Ground truth: the double loop over `(Z/mZ)^2`. Only for small `m`.
pub fn rho_pair_scan(spec: PolySpec, m: Modulus) -> Result<u128> {
    if m.get() > PAIR_SCAN_MAX_MODULUS {
        return Err(Error::budget(
            "pair-scan modulus",
            m.get(),
            PAIR_SCAN_MAX_MODULUS,
        ));
    }
    let md = m.get();
    let c = m.reduce(spec.c() as i128);
    let mut count = 0u128;
    for nu in 0..md {
        let nk = mod_pow(nu, spec.k() as u64, m);
        // value = mu * nk + c, stepped through mu = 0, 1, ...
        let mut value = c;
        for _ in 0..md {
            count += (value == 0) as u128;
            value += nk;
            if value >= md {
                value -= md;
            }
        }
    }
    Ok(count)
}

/// Brute force with the linear-congruence shortcut: for each `nu`, the
/// congruence `mu * nu^k ≡ -C` has `gcd(nu^k, m)` solutions if that gcd
/// divides `C`, else none.
pub fn rho_residue_scan(spec: PolySpec, m: Modulus) -> Result<u128> {
    check_brute_budget(m.get())?;
    let md = m.get();
    let neg_c = m.reduce(-(spec.c() as i128));
    Ok((0..md)
        .map(|nu| {
            let g = match gcd_u64(nu, md) {
                1 => 1,
                _ => gcd_u64(mod_pow(nu, spec.k() as u64, m), md),
            };
            if neg_c.is_multiple_of(g) {
                g as u128
            } else {
                0
            }
        })
        .sum())
}

/// Brute-force `rho(m)`: the pair scan for `m <= 1000`, the residue scan up to `10^6`.
pub fn rho_brute(spec: PolySpec, m: Modulus) -> Result<LocalDensity> {
    check_brute_budget(m.get())?;
    let value = if m.get() <= PAIR_SCAN_MAX_MODULUS {
        rho_pair_scan(spec, m)?
    } else {
        rho_residue_scan(spec, m)?
    };
    Ok(LocalDensity {
        m: m.get(),
        value,
        variant: Variant::Plain,
        method: Method::Brute,
    })
}

/// Brute-force `rho'(m)`. For a unit `nu` the solution `mu = -C nu^-k` is
/// unique, so a single loop suffices; small moduli use the double loop.
pub fn rho_prime_brute(spec: PolySpec, m: Modulus) -> Result<LocalDensity> {
    check_brute_budget(m.get())?;
    let md = m.get();
    let k = spec.k() as u64;
    let c = m.reduce(spec.c() as i128);
    let value = if md <= PAIR_SCAN_MAX_MODULUS {
        let mut count = 0u128;
        for nu in (0..md).filter(|&v| gcd_u64(v, md) == 1) {
            let nk = mod_pow(nu, k, m);
            for mu in (0..md).filter(|&v| gcd_u64(v, md) == 1) {
                if (mu * nk + c).is_multiple_of(md) {
                    count += 1;
                }
            }
        }
        count
    } else {
        let neg_c = m.reduce(-(spec.c() as i128));
        (0..md)
            .filter(|&nu| gcd_u64(nu, md) == 1)
            .filter(|&nu| {
                let inv = mod_inverse(mod_pow(nu, k, m), m).expect("unit");
                let mu = crate::arith::mul_mod(neg_c, inv, md);
                gcd_u64(mu, md) == 1
            })
            .count() as u128
    };
    Ok(LocalDensity {
        m: md,
        value,
        variant: Variant::Coprime,
        method: Method::Brute,
    })
}

/// `rho(p^j)` by the valuation split described in the module docs.
pub fn rho_prime_power_closed(spec: PolySpec, p: u64, j: u32) -> Result<LocalDensity> {
    if j == 0 {
        return Err(Error::InvalidInput("exponent j must be >= 1".into()));
    }
    let m = pow_or_overflow(p, j, "p^j")?;
    let pp = p as u128;
    let c_val = valuation(p, spec.c().unsigned_abs() as u128);
    let k = spec.k();
    let mut total = 0u128;
    for t in 0..j {
        let e = k.saturating_mul(t).min(j);
        if e > c_val {
            continue;
        }
        let residues = (pp - 1) * pp.pow(j - t - 1);
        total += residues * pp.pow(e);
    }
    if j <= c_val {
        total += m as u128;
    }
    Ok(LocalDensity {
        m,
        value: total,
        variant: Variant::Plain,
        method: Method::Closed,
    })
}

/// `rho'(p^j)`: `phi(p^j)` when `p` does not divide `C`, else 0.
pub fn rho_prime_variant_prime_power(spec: PolySpec, p: u64, j: u32) -> Result<LocalDensity> {
    if j == 0 {
        return Err(Error::InvalidInput("exponent j must be >= 1".into()));
    }
    let m = pow_or_overflow(p, j, "p^j")?;
    let value = if spec.c().unsigned_abs().is_multiple_of(p) {
        0
    } else {
        ((p - 1) as u128) * (p as u128).pow(j - 1)
    };
    Ok(LocalDensity {
        m,
        value,
        variant: Variant::Coprime,
        method: Method::Closed,
    })
}

fn compose<F>(m: Modulus, variant: Variant, mut per_prime: F) -> Result<LocalDensity>
where
    F: FnMut(u64, u32) -> Result<LocalDensity>,
{
    let mut value = 1u128;
    for &(p, e) in &factorize(m.get()).factors {
        let local = per_prime(p, e)?.value;
        value = value
            .checked_mul(local)
            .ok_or(Error::Overflow("local density product"))?;
    }
    Ok(LocalDensity {
        m: m.get(),
        value,
        variant,
        method: Method::Multiplicative,
    })
}

/// `rho(m)` as the product of closed-form prime-power values.
pub fn rho(spec: PolySpec, m: Modulus) -> Result<LocalDensity> {
    compose(m, Variant::Plain, |p, e| rho_prime_power_closed(spec, p, e))
}

/// `rho'(m)` as the product of closed-form prime-power values.
pub fn rho_prime_variant(spec: PolySpec, m: Modulus) -> Result<LocalDensity> {
    compose(m, Variant::Coprime, |p, e| {
        rho_prime_variant_prime_power(spec, p, e)
    })
}

/// `rho(d^e)` from the factorization of `d`, without forming `d^e` itself.
pub fn rho_of_power(spec: PolySpec, d: u64, e: u32) -> Result<u128> {
    let mut value = 1u128;
    for &(p, a) in &factorize(d).factors {
        let local = rho_prime_power_closed(spec, p, a * e)?.value;
        value = value
            .checked_mul(local)
            .ok_or(Error::Overflow("local density product"))?;
    }
    Ok(value)
}

/// Number of `1 <= x <= h` with `x ≡ alpha (mod m)`, in closed form.
pub fn count_m(alpha: u64, m: Modulus, h: u64) -> u64 {
    let md = m.get();
    let first = match alpha % md {
        0 => md,
        a => a,
    };
    if first > h {
        0
    } else {
        (h - first) / md + 1
    }
}

/// Record of a successful closed-form certification for one polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub k: u32,
    pub c: i64,
    /// Every `(p, j)` checked, both variants.
    pub checked: Vec<(u64, u32)>,
}

/// Compares both closed forms against brute force on every prime power
/// `p^j` with `p <= max_prime`, `1 <= j <= max_exp` and `p^j` within the
/// brute-force budget. Any disagreement is an error.
pub fn certify_closed_forms(spec: PolySpec, max_prime: u64, max_exp: u32) -> Result<Certificate> {
    let mut checked = Vec::new();
    for p in (2..=max_prime).filter(|&p| is_prime(p)) {
        for j in 1..=max_exp {
            let Some(q) = p.checked_pow(j).filter(|&q| q <= BRUTE_MAX_MODULUS) else {
                break;
            };
            let modulus = Modulus::new(q)?;
            let fail = |closed: u128, brute: u128| Error::CertificationFailed {
                k: spec.k(),
                c: spec.c(),
                p,
                j,
                closed,
                brute,
            };
            let closed = rho_prime_power_closed(spec, p, j)?.value;
            let brute = rho_brute(spec, modulus)?.value;
            if closed != brute {
                return Err(fail(closed, brute));
            }
            let closed = rho_prime_variant_prime_power(spec, p, j)?.value;
            let brute = rho_prime_brute(spec, modulus)?.value;
            if closed != brute {
                return Err(fail(closed, brute));
            }
            checked.push((p, j));
        }
    }
    Ok(Certificate {
        k: spec.k(),
        c: spec.c(),
        checked,
    })
}
