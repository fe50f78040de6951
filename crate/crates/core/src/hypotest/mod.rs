//! Paired t-test, Levene's test, Pearson correlation, and the normal, t and
//! F distribution functions behind them.

mod distributions;
pub mod special;

use alloc::format;
use alloc::string::String;

pub use distributions::{f_cdf, f_sf, normal_cdf, t_cdf, t_two_sided};

use crate::{Error, Result};

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator). Computed on values shifted
/// by the first element, so identical inputs give exactly 0.
pub(crate) fn sample_sd(xs: &[f64]) -> f64 {
    let x0 = xs[0];
    let m = xs.iter().map(|x| x - x0).sum::<f64>() / xs.len() as f64;
    let ss: f64 = xs.iter().map(|x| (x - x0 - m) * (x - x0 - m)).sum();
    libm::sqrt(ss / (xs.len() - 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    pub t: f64,
    pub df: usize,
    pub p_two_sided: f64,
    pub mean_diff: f64,
    pub sd_diff: f64,
    pub n: usize,
}

/// Paired-samples t-test on the differences `b[i] - a[i]`, two-sided.
///
/// A zero standard deviation of the differences is reported as
/// [`Error::ZeroVariance`] rather than a p-value of 0 or 1.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("paired t-test needs n >= 2, got {n}")));
    }
    let d: alloc::vec::Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let mean_diff = mean(&d);
    let sd_diff = sample_sd(&d);
    if sd_diff == 0.0 {
        let what = if d.iter().all(|&x| x == 0.0) {
            "all replicates identical"
        } else {
            "all paired differences are equal"
        };
        return Err(Error::ZeroVariance(String::from(what)));
    }
    let t = mean_diff / (sd_diff / libm::sqrt(n as f64));
    let df = n - 1;
    Ok(TTestResult {
        t,
        df,
        p_two_sided: t_two_sided(t, df as f64)?,
        mean_diff,
        sd_diff,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeveneResult {
    pub w: f64,
    pub df1: usize,
    pub df2: usize,
    pub p: f64,
}

/// Levene's test for equal variances, mean-centered.
///
/// With `Z_ij = |x_ij - mean_i|`,
/// `W = (N - k) / (k - 1) * sum_i n_i (Zbar_i - Zbar)^2 / sum_ij (Z_ij - Zbar_i)^2`.
///
/// Every group constant (all `Z_ij = 0`) is [`Error::ZeroDeviation`]. If only
/// the within-group sum vanishes, `W` is 0 (p = 1) when the group means of
/// `Z` agree and `+inf` (p = 0) otherwise.
pub fn levene_test<G: AsRef<[f64]>>(groups: &[G]) -> Result<LeveneResult> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::InsufficientData(format!("Levene needs >= 2 groups, got {k}")));
    }
    if let Some((i, g)) = groups.iter().enumerate().find(|(_, g)| g.as_ref().len() < 2) {
        return Err(Error::InsufficientData(format!(
            "group {i} has {} values, needs >= 2",
            g.as_ref().len()
        )));
    }
    let deviations: alloc::vec::Vec<alloc::vec::Vec<f64>> = groups
        .iter()
        .map(|g| {
            let g = g.as_ref();
            let m = mean(g);
            g.iter().map(|x| libm::fabs(x - m)).collect()
        })
        .collect();
    if deviations.iter().flatten().all(|&z| z == 0.0) {
        return Err(Error::ZeroDeviation(String::from(
            "every group is constant; all replicates identical",
        )));
    }
    let n_total: usize = deviations.iter().map(|z| z.len()).sum();
    let z_means: alloc::vec::Vec<f64> = deviations.iter().map(|z| mean(z)).collect();
    let z_grand = deviations.iter().flatten().sum::<f64>() / n_total as f64;
    let between: f64 = deviations
        .iter()
        .zip(&z_means)
        .map(|(z, zm)| z.len() as f64 * (zm - z_grand) * (zm - z_grand))
        .sum();
    let within: f64 = deviations
        .iter()
        .zip(&z_means)
        .map(|(z, zm)| z.iter().map(|v| (v - zm) * (v - zm)).sum::<f64>())
        .sum();
    let (df1, df2) = (k - 1, n_total - k);
    let w = if within == 0.0 {
        if between == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (df2 as f64 / df1 as f64) * between / within
    };
    Ok(LeveneResult {
        w,
        df1,
        df2,
        p: f_sf(w, df1 as f64, df2 as f64)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PearsonResult {
    pub r: f64,
    pub t: f64,
    pub df: usize,
    pub p_two_sided: f64,
    pub n: usize,
}

/// Pearson product-moment correlation with a two-sided t-based p-value.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<PearsonResult> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("Pearson needs n >= 3, got {n}")));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        let which = if sxx == 0.0 { "x" } else { "y" };
        return Err(Error::ZeroVariance(format!("{which} is constant")));
    }
    let df = n - 2;
    let r = sxy / libm::sqrt(sxx * syy);
    if libm::fabs(r) >= 1.0 {
        let r = r.signum();
        return Ok(PearsonResult {
            r,
            t: r * f64::INFINITY,
            df,
            p_two_sided: 0.0,
            n,
        });
    }
    let t = r * libm::sqrt(df as f64 / (1.0 - r * r));
    Ok(PearsonResult {
        r,
        t,
        df,
        p_two_sided: t_two_sided(t, df as f64)?,
        n,
    })
}

/// Ranks starting at 1, ties given their average rank.
pub fn ranks(xs: &[f64]) -> alloc::vec::Vec<f64> {
    let mut order: alloc::vec::Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = alloc::vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation: Pearson on average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<PearsonResult> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    pearson(&ranks(x), &ranks(y))
}
