use alloc::format;

use super::special::{inc_beta, inc_gamma_upper};
use crate::{Error, Result};

fn check_df(name: &str, df: f64) -> Result<()> {
    if df.is_finite() && df > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {df}")))
    }
}

/// Standard normal CDF via `Q(1/2, z^2/2)`.
pub fn normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    let tail = 0.5 * inc_gamma_upper(0.5, 0.5 * z * z);
    if z < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Student t CDF with `df` degrees of freedom.
pub fn t_cdf(t: f64, df: f64) -> Result<f64> {
    check_df("df", df)?;
    if t.is_infinite() {
        return Ok(if t > 0.0 { 1.0 } else { 0.0 });
    }
    let tail = 0.5 * inc_beta(0.5 * df, 0.5, df / (df + t * t));
    Ok(if t > 0.0 { 1.0 - tail } else { tail })
}

/// Two-sided tail probability `P(|T| >= |t|)`. Computed directly from the
/// incomplete beta, so it stays accurate far into the tail.
pub fn t_two_sided(t: f64, df: f64) -> Result<f64> {
    check_df("df", df)?;
    if t.is_infinite() {
        return Ok(0.0);
    }
    Ok(inc_beta(0.5 * df, 0.5, df / (df + t * t)).min(1.0))
}

/// Fisher-Snedecor F CDF.
pub fn f_cdf(f: f64, df1: f64, df2: f64) -> Result<f64> {
    check_df("df1", df1)?;
    check_df("df2", df2)?;
    if f.is_nan() || f < 0.0 {
        return Err(Error::Domain(format!("F statistic must be >= 0, got {f}")));
    }
    if f.is_infinite() {
        return Ok(1.0);
    }
    Ok(inc_beta(0.5 * df1, 0.5 * df2, df1 * f / (df1 * f + df2)))
}

/// Upper tail `1 - F_cdf`, computed without cancellation.
pub fn f_sf(f: f64, df1: f64, df2: f64) -> Result<f64> {
    check_df("df1", df1)?;
    check_df("df2", df2)?;
    if f.is_nan() || f < 0.0 {
        return Err(Error::Domain(format!("F statistic must be >= 0, got {f}")));
    }
    if f.is_infinite() {
        return Ok(0.0);
    }
    Ok(inc_beta(0.5 * df2, 0.5 * df1, df2 / (df1 * f + df2)))
}
