//! Prime, Möbius and k-free tables.
//!
//! The k-free sieve is segmented: each segment of the value range is an
//! independent job, so tables come out identical for every segment width and
//! every worker count. Segments always start on a byte boundary relative to
//! `lo`, which lets them be concatenated directly into a [`KfreeTable`].

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::arith::iroot;
use crate::error::{Error, Result};

/// Largest prime-table limit supported in memory.
pub const MAX_PRIME_LIMIT: u64 = 1 << 32;

/// Largest value the k-free sieve accepts.
pub const MAX_SIEVE_VALUE: u64 = 1 << 40;

pub const DEFAULT_SEGMENT_WIDTH: u64 = 1 << 22;

/// Default ceiling on a materialized [`KfreeTable`], in bits (128 MiB).
pub const DEFAULT_TABLE_BUDGET_BITS: u64 = 1 << 30;

const KFSV_MAGIC: &[u8; 4] = b"KFSV";
const KFSV_VERSION: u8 = 1;
const KFSV_HEADER_LEN: usize = 4 + 1 + 1 + 8 + 8;

#[derive(Clone, Debug)]
pub struct SieveConfig {
    /// Integers per segment; rounded up to a multiple of 8.
    pub segment_width: u64,
    /// Upper limit on the size of a materialized table, in bits.
    pub table_budget_bits: u64,
}

impl Default for SieveConfig {
    fn default() -> Self {
        SieveConfig {
            segment_width: DEFAULT_SEGMENT_WIDTH,
            table_budget_bits: DEFAULT_TABLE_BUDGET_BITS,
        }
    }
}

impl SieveConfig {
    fn width(&self) -> u64 {
        self.segment_width.max(8).div_ceil(8) * 8
    }
}

/// All primes up to `limit`.
#[derive(Clone, Debug)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u32>,
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.primes.iter().map(|&p| p as u64)
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// Number of primes `<= x`, for `x <= limit`.
    pub fn pi(&self, x: u64) -> usize {
        assert!(
            x <= self.limit,
            "pi({x}) queried beyond table limit {}",
            self.limit
        );
        self.primes.partition_point(|&p| (p as u64) <= x)
    }

    pub fn is_prime(&self, n: u64) -> bool {
        assert!(n <= self.limit);
        n <= u32::MAX as u64 && self.primes.binary_search(&(n as u32)).is_ok()
    }
}

/// Odd-only Eratosthenes for small limits; used to seed the segmented sieves.
fn small_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n / 2 + 1];
    let mut primes = vec![2u64];
    let mut i = 3usize;
    while i <= n {
        if !composite[i / 2] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j / 2] = true;
                j += 2 * i;
            }
        }
        i += 2;
    }
    primes
}

/// Primes in `[lo, hi]` given every prime up to `sqrt(hi)` in `base`.
fn primes_in_segment(lo: u64, hi: u64, base: &[u64]) -> Vec<u64> {
    let len = (hi - lo + 1) as usize;
    let mut composite = vec![false; len];
    for &p in base {
        let sq = p * p;
        if sq > hi {
            break;
        }
        let start = sq.max(lo.div_ceil(p) * p);
        let mut n = start;
        while n <= hi {
            composite[(n - lo) as usize] = true;
            n += p;
        }
    }
    composite
        .iter()
        .enumerate()
        .filter(|&(i, &c)| !c && lo + i as u64 >= 2)
        .map(|(i, _)| lo + i as u64)
        .collect()
}

/// Runs `f` over the primes of `[lo, hi]`, one segment at a time, returning
/// the per-segment results in ascending segment order. Segments are processed
/// in parallel.
pub fn fold_prime_segments<T, F>(lo: u64, hi: u64, cfg: &SieveConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&[u64]) -> T + Sync,
{
    if hi > MAX_PRIME_LIMIT {
        return Err(Error::budget("prime sieve limit", hi, MAX_PRIME_LIMIT));
    }
    if hi < lo.max(2) {
        return Ok(Vec::new());
    }
    let lo = lo.max(2);
    let base = small_primes(iroot(hi, 2));
    let width = cfg.width();
    let count = (hi - lo) / width + 1;
    Ok((0..count)
        .into_par_iter()
        .map(|s| {
            let s_lo = lo + s * width;
            let s_hi = (s_lo + width - 1).min(hi);
            f(&primes_in_segment(s_lo, s_hi, &base))
        })
        .collect())
}

pub fn primes_up_to(limit: u64) -> Result<PrimeTable> {
    let segments = fold_prime_segments(2, limit, &SieveConfig::default(), |ps| {
        ps.iter().map(|&p| p as u32).collect::<Vec<u32>>()
    })?;
    Ok(PrimeTable {
        limit,
        primes: segments.concat(),
    })
}

/// Möbius values for `1..=limit`.
#[derive(Clone, Debug)]
pub struct MobiusTable {
    values: Vec<i8>,
}

impl MobiusTable {
    pub fn limit(&self) -> u64 {
        self.values.len() as u64 - 1
    }

    pub fn get(&self, n: u64) -> i8 {
        assert!(n >= 1 && n <= self.limit());
        self.values[n as usize]
    }

    /// Values for `n = 1..=limit`.
    pub fn values(&self) -> &[i8] {
        &self.values[1..]
    }
}

/// Linear sieve: every composite is crossed exactly once, by its smallest
/// prime factor.
pub fn mobius_up_to(limit: u64) -> MobiusTable {
    let n = limit as usize;
    let mut mu = vec![0i8; n + 1];
    if n >= 1 {
        mu[1] = 1;
    }
    let mut is_composite = vec![false; n + 1];
    let mut primes: Vec<usize> = Vec::new();
    for i in 2..=n {
        if !is_composite[i] {
            primes.push(i);
            mu[i] = -1;
        }
        for &p in &primes {
            let Some(t) = i.checked_mul(p).filter(|&t| t <= n) else {
                break;
            };
            is_composite[t] = true;
            if i % p == 0 {
                mu[t] = 0;
                break;
            }
            mu[t] = -mu[i];
        }
    }
    MobiusTable { values: mu }
}

/// Bit table over `[lo, hi]`; bit set iff the integer is k-free.
///
/// Layout matches the KFSV payload: bit `j` of byte `i` is `n = lo + 8i + j`.
/// Padding bits past `hi` are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KfreeTable {
    lo: u64,
    hi: u64,
    k: u32,
    bits: Vec<u8>,
}

impl KfreeTable {
    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> u64 {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn is_kfree(&self, n: u64) -> bool {
        debug_assert!(n >= self.lo && n <= self.hi);
        let i = n - self.lo;
        self.bits[(i >> 3) as usize] & (1 << (i & 7)) != 0
    }

    pub fn get(&self, n: u64) -> Option<bool> {
        (n >= self.lo && n <= self.hi).then(|| self.is_kfree(n))
    }

    pub fn count_kfree(&self) -> u64 {
        self.bits.iter().map(|b| b.count_ones() as u64).sum()
    }

    pub fn write_kfsv<W: Write>(&self, mut w: W) -> Result<()> {
        let k = u8::try_from(self.k)
            .map_err(|_| Error::Format(format!("k={} does not fit u8", self.k)))?;
        w.write_all(KFSV_MAGIC)?;
        w.write_all(&[KFSV_VERSION, k])?;
        w.write_all(&self.lo.to_le_bytes())?;
        w.write_all(&self.hi.to_le_bytes())?;
        w.write_all(&self.bits)?;
        Ok(())
    }

    /// Parses only the header: `(k, lo, hi)`.
    pub fn read_kfsv_header<R: Read>(mut r: R) -> Result<(u32, u64, u64)> {
        let mut header = [0u8; KFSV_HEADER_LEN];
        r.read_exact(&mut header)
            .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
        if &header[..4] != KFSV_MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        if header[4] != KFSV_VERSION {
            return Err(Error::Format(format!("unsupported version {}", header[4])));
        }
        let k = header[5] as u32;
        let lo = u64::from_le_bytes(header[6..14].try_into().unwrap());
        let hi = u64::from_le_bytes(header[14..22].try_into().unwrap());
        if k < 2 || lo == 0 || lo > hi {
            return Err(Error::Format(format!(
                "invalid header k={k} lo={lo} hi={hi}"
            )));
        }
        Ok((k, lo, hi))
    }

    pub fn read_kfsv<R: Read>(mut r: R) -> Result<Self> {
        let (k, lo, hi) = Self::read_kfsv_header(&mut r)?;
        let nbytes = (hi - lo + 1).div_ceil(8) as usize;
        let mut bits = Vec::with_capacity(nbytes);
        r.read_to_end(&mut bits)?;
        if bits.len() != nbytes {
            return Err(Error::Format(format!(
                "payload is {} bytes, expected {nbytes}",
                bits.len()
            )));
        }
        Ok(KfreeTable { lo, hi, k, bits })
    }
}

fn validate_kfree_range(lo: u64, hi: u64, k: u32) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("k must be >= 2, got {k}")));
    }
    if k > u8::MAX as u32 {
        return Err(Error::InvalidInput(format!(
            "k must fit in a byte, got {k}"
        )));
    }
    if lo == 0 || lo > hi {
        return Err(Error::InvalidInput(format!(
            "need 1 <= lo <= hi, got [{lo}, {hi}]"
        )));
    }
    if hi > MAX_SIEVE_VALUE {
        return Err(Error::budget("k-free sieve upper end", hi, MAX_SIEVE_VALUE));
    }
    Ok(())
}

/// Sieves one segment `[s_lo, s_hi]` by striking multiples of `p^k`.
fn sieve_segment(s_lo: u64, s_hi: u64, k: u32, base: &[u64]) -> KfreeTable {
    let len = s_hi - s_lo + 1;
    let mut bits = vec![0xffu8; len.div_ceil(8) as usize];
    let tail = len % 8;
    if tail != 0 {
        *bits.last_mut().unwrap() = (1u8 << tail) - 1;
    }
    for &p in base {
        // base only holds primes with p^k <= hi, so this cannot overflow
        let q = p.pow(k);
        if q > s_hi {
            break;
        }
        let mut n = s_lo.div_ceil(q) * q;
        while n <= s_hi {
            let i = n - s_lo;
            bits[(i >> 3) as usize] &= !(1 << (i & 7));
            n += q;
        }
    }
    KfreeTable {
        lo: s_lo,
        hi: s_hi,
        k,
        bits,
    }
}

/// Streams the k-free table of `[lo, hi]` segment by segment, applying `f` to
/// each segment (itself a [`KfreeTable`]) and returning results in segment
/// order. Memory stays bounded by the segment width times the worker count.
pub fn fold_kfree_segments<T, F>(
    lo: u64,
    hi: u64,
    k: u32,
    cfg: &SieveConfig,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&KfreeTable) -> T + Sync,
{
    validate_kfree_range(lo, hi, k)?;
    let r = iroot(hi, k);
    let base = small_primes(r);
    let width = cfg.width();
    let count = (hi - lo) / width + 1;
    Ok((0..count)
        .into_par_iter()
        .map(|s| {
            let s_lo = lo + s * width;
            let s_hi = s_lo.saturating_add(width - 1).min(hi);
            f(&sieve_segment(s_lo, s_hi, k, &base))
        })
        .collect())
}

pub fn kfree_flags(lo: u64, hi: u64, k: u32) -> Result<KfreeTable> {
    kfree_flags_with(lo, hi, k, &SieveConfig::default())
}

/// Materializes the k-free table of `[lo, hi]`, refusing ranges above the
/// configured table budget (use [`fold_kfree_segments`] for those).
pub fn kfree_flags_with(lo: u64, hi: u64, k: u32, cfg: &SieveConfig) -> Result<KfreeTable> {
    validate_kfree_range(lo, hi, k)?;
    let len = hi - lo + 1;
    if len > cfg.table_budget_bits {
        return Err(Error::budget(
            "materialized k-free table (bits)",
            len,
            cfg.table_budget_bits,
        ));
    }
    let segments = fold_kfree_segments(lo, hi, k, cfg, |seg| seg.bits.clone())?;
    Ok(KfreeTable {
        lo,
        hi,
        k,
        bits: segments.concat(),
    })
}
