//! Scaling studies of `S(H)` and `S'(H)`, empirical error exponents, and the
//! predicted exponents `g`, `G_k` and `Q(k, alpha)`.

use serde::Serialize;

use crate::box_counting::{count_with_bracket, default_path, Restriction, MAIN_TERM_PRECISION};
use crate::error::{Error, Result};
use crate::euler_product::{c_f, c_f_prime};
use crate::local_density::PolySpec;

/// Rows with `H` below this are ignored by [`fit_error_exponent`].
pub const FIT_MIN_H: u64 = 128;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub h: u64,
    pub count: u64,
    pub main_term: f64,
    pub main_lower: f64,
    pub main_upper: f64,
    pub abs_deviation: f64,
    pub rel_deviation: f64,
    /// `abs_deviation` is smaller than the width of the main-term band, so
    /// its size is not determined by the data.
    pub indeterminate: bool,
}

/// One row per `H`. `hs` must be strictly ascending and positive.
pub fn scaling_run(
    spec: PolySpec,
    hs: &[u64],
    restriction: Restriction,
) -> Result<Vec<ScalingRow>> {
    if hs.is_empty() {
        return Ok(Vec::new());
    }
    if hs[0] == 0 || hs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "H values must be positive and strictly ascending".into(),
        ));
    }
    let bracket = match restriction {
        Restriction::AllIntegers => c_f(spec, MAIN_TERM_PRECISION)?,
        Restriction::PrimesOnly => c_f_prime(spec, MAIN_TERM_PRECISION)?,
    };
    hs.iter()
        .map(|&h| {
            let b = count_with_bracket(spec, h, restriction, default_path(spec, h), &bracket)?;
            let abs = (b.count as f64 - b.main_term).abs();
            Ok(ScalingRow {
                h,
                count: b.count,
                main_term: b.main_term,
                main_lower: b.main_term_lower,
                main_upper: b.main_term_upper,
                abs_deviation: abs,
                rel_deviation: b.relative_deviation,
                indeterminate: abs < b.main_term_upper - b.main_term_lower,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentFit {
    /// Least-squares slope of `log(abs_deviation)` against `log(H)`.
    pub exponent: f64,
    pub rows_used: Vec<u64>,
    pub skipped_zero: Vec<u64>,
    pub skipped_indeterminate: Vec<u64>,
    pub skipped_below_min_h: Vec<u64>,
}

/// Fits `abs_deviation ≈ A H^e` over rows with `H >= FIT_MIN_H`, skipping
/// rows whose deviation is zero or indeterminate. Needs three usable rows.
pub fn fit_error_exponent(rows: &[ScalingRow]) -> Result<ExponentFit> {
    let mut fit = ExponentFit {
        exponent: f64::NAN,
        rows_used: Vec::new(),
        skipped_zero: Vec::new(),
        skipped_indeterminate: Vec::new(),
        skipped_below_min_h: Vec::new(),
    };
    let mut points = Vec::new();
    for r in rows {
        if r.h < FIT_MIN_H {
            fit.skipped_below_min_h.push(r.h);
        } else if r.abs_deviation <= 0.0 {
            fit.skipped_zero.push(r.h);
        } else if r.indeterminate {
            fit.skipped_indeterminate.push(r.h);
        } else {
            fit.rows_used.push(r.h);
            points.push(((r.h as f64).ln(), r.abs_deviation.ln()));
        }
    }
    if points.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "exponent fit needs at least 3 usable rows with H >= {FIT_MIN_H}, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    fit.exponent = sxy / sxx;
    Ok(fit)
}

/// `g(k, delta, theta) = (9/8)(2 - k(2 - (delta + theta))/(k + 1))(2 + delta)`.
pub fn g_exponent(k: u32, delta: f64, theta: f64) -> f64 {
    let k = k as f64;
    1.125 * (2.0 - k * (2.0 - (delta + theta)) / (k + 1.0)) * (2.0 + delta)
}

/// `G(k, delta) = 1 + delta/2 + g(k, delta, 2 delta)/2`.
pub fn big_g(k: u32, delta: f64) -> f64 {
    1.0 + delta / 2.0 + g_exponent(k, delta, 2.0 * delta) / 2.0
}

/// `G_k = (1 + 1/(14k)) (1 + (153/56)/(k + 1))`.
pub fn g_closed(k: u32) -> f64 {
    let k = k as f64;
    (1.0 + 1.0 / (14.0 * k)) * (1.0 + 153.0 / 56.0 / (k + 1.0))
}

/// `Q(k, alpha) = 16 alpha^2 k^2 - (20 alpha^2 + 62 alpha) k - (26 alpha + 27)`.
/// `G(k, 1/(alpha k)) < 2` exactly when this is positive.
pub fn quadratic_form_q(k: i64, alpha: i64) -> i64 {
    16 * alpha * alpha * k * k - (20 * alpha * alpha + 62 * alpha) * k - (26 * alpha + 27)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentReport {
    pub k: u32,
    /// `1/(7k)` for `k >= 3`; `2 - G_2` for `k = 2` (before the `epsilon` loss).
    pub delta: f64,
    /// `g(k, 1/(7k), 2/(7k))`.
    pub g_value: f64,
    pub g_k: f64,
    /// `2 - 1/(7k)` for `k >= 3`; `G_2` for `k = 2`.
    pub error_exponent: f64,
}

pub fn predicted_exponents(k: u32) -> Result<ExponentReport> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("k must be >= 2, got {k}")));
    }
    let delta0 = 1.0 / (7.0 * k as f64);
    let g_k = g_closed(k);
    let (delta, error_exponent) = if k == 2 {
        (2.0 - g_k, g_k)
    } else {
        (delta0, 2.0 - delta0)
    };
    Ok(ExponentReport {
        k,
        delta,
        g_value: g_exponent(k, delta0, 2.0 * delta0),
        g_k,
        error_exponent,
    })
}
