//! Location-dependent detector quality and the sample-size learning curve.

use alloc::vec::Vec;

use super::config::{CurveConfig, FieldConfig};
use crate::geomodel::RngStream;
use crate::{Error, Result};

/// `q(n) = q_inf - (q_inf - q0) exp(-n / tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningCurve {
    q0: f64,
    q_inf: f64,
    tau: f64,
}

impl LearningCurve {
    pub fn new(q0: f64, q_inf: f64, tau: f64) -> Result<Self> {
        if !(q0.is_finite() && q_inf.is_finite() && q_inf > q0) {
            return Err(Error::config("/curve/q_inf", "must exceed q0"));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::config("/curve/tau", "must be positive"));
        }
        Ok(LearningCurve { q0, q_inf, tau })
    }

    pub fn from_config(c: &CurveConfig) -> Result<Self> {
        Self::new(c.q0, c.q_inf, c.tau)
    }

    pub fn quality(&self, train_size: f64) -> f64 {
        self.q_inf - (self.q_inf - self.q0) * libm::exp(-train_size / self.tau)
    }

    pub fn plateau(&self) -> f64 {
        self.q_inf
    }
}

/// Fully normalized associated Legendre values `Pbar_lm(t)` for
/// `0 <= m <= l <= degree`, stored row by row (`l (l + 1) / 2 + m`), with
/// `t = sin(lat)` and `u = cos(lat)`. Normalized so that the real spherical
/// harmonics built from them have mean square 1 over the sphere.
fn legendre_table(degree: usize, t: f64, u: f64) -> Vec<f64> {
    let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut p = alloc::vec![0.0; idx(degree, degree) + 1];
    p[0] = 1.0;
    if degree == 0 {
        return p;
    }
    p[idx(1, 1)] = libm::sqrt(3.0) * u;
    for m in 2..=degree {
        let mf = m as f64;
        p[idx(m, m)] = libm::sqrt((2.0 * mf + 1.0) / (2.0 * mf)) * u * p[idx(m - 1, m - 1)];
    }
    for m in 0..degree {
        p[idx(m + 1, m)] = libm::sqrt(2.0 * m as f64 + 3.0) * t * p[idx(m, m)];
    }
    for m in 0..=degree {
        for l in (m + 2)..=degree {
            let (lf, mf) = (l as f64, m as f64);
            let a = libm::sqrt((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf));
            let b = libm::sqrt(((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0));
            p[idx(l, m)] = a * (t * p[idx(l - 1, m)] - b * p[idx(l - 2, m)]);
        }
    }
    p
}

/// One real spherical-harmonic term: degree `l`, order `m` (negative orders
/// use `sin`), coefficient `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Harmonic {
    l: usize,
    m: i32,
    c: f64,
}

/// Detector quality surface `f(lat, lon)` in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceField {
    base: f64,
    lat_gradient: f64,
    degree: usize,
    harmonics: Vec<Harmonic>,
    /// Block offsets, already scaled by the patchiness amplitude.
    blocks: Vec<f64>,
    block_deg: f64,
    patch_scale: f64,
    noise_sd: f64,
}

impl PerformanceField {
    /// Draws the smooth coefficients from substream `"field"` and the block
    /// offsets from `"field/patch"` of `seed`.
    pub fn generate(config: &FieldConfig, seed: u64) -> Self {
        let degree = config.sh_degree as usize;
        let terms = degree * degree + 2 * degree;
        let mut rng = RngStream::new(seed, "field");
        let scale = if terms > 0 {
            config.smooth_amplitude / libm::sqrt(terms as f64)
        } else {
            0.0
        };
        let mut harmonics = Vec::with_capacity(terms);
        for l in 1..=degree {
            for m in -(l as i32)..=(l as i32) {
                harmonics.push(Harmonic {
                    l,
                    m,
                    c: scale * rng.standard_normal(),
                });
            }
        }
        let n_blocks = (360 / config.lon_block_deg.max(1)) as usize;
        let mut patch = RngStream::new(seed, "field/patch");
        let blocks = (0..n_blocks)
            .map(|_| config.lon_patchiness * patch.uniform_range(-1.0, 1.0))
            .collect();
        PerformanceField {
            base: config.base,
            lat_gradient: config.lat_gradient,
            degree,
            harmonics,
            blocks,
            block_deg: config.lon_block_deg.max(1) as f64,
            patch_scale: 1.0,
            noise_sd: config.noise_sd,
        }
    }

    /// A field that is 1 everywhere with no per-scene noise.
    pub fn constant_one() -> Self {
        PerformanceField {
            base: 1.0,
            lat_gradient: 0.0,
            degree: 0,
            harmonics: Vec::new(),
            blocks: alloc::vec![0.0],
            block_deg: 360.0,
            patch_scale: 1.0,
            noise_sd: 0.0,
        }
    }

    /// Same field with the longitude blocks multiplied by `scale`.
    pub fn with_patch_scale(mut self, scale: f64) -> Self {
        self.patch_scale = scale;
        self
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    /// Smooth spherical-harmonic component alone.
    pub fn smooth(&self, lat_deg: f64, lon_deg: f64) -> f64 {
        if self.harmonics.is_empty() {
            return 0.0;
        }
        let phi = lat_deg.to_radians();
        let lam = lon_deg.to_radians();
        let p = legendre_table(self.degree, libm::sin(phi), libm::cos(phi));
        self.harmonics
            .iter()
            .map(|h| {
                let m = h.m.unsigned_abs() as usize;
                let leg = p[h.l * (h.l + 1) / 2 + m];
                let trig = if h.m >= 0 {
                    libm::cos(m as f64 * lam)
                } else {
                    libm::sin(m as f64 * lam)
                };
                h.c * leg * trig
            })
            .sum()
    }

    pub fn patch(&self, lon_deg: f64) -> f64 {
        let i = (libm::floor(lon_deg / self.block_deg) as usize).min(self.blocks.len() - 1);
        self.patch_scale * self.blocks[i]
    }

    /// Clamped quality at a location.
    pub fn value(&self, lat_deg: f64, lon_deg: f64) -> f64 {
        let v = self.base - self.lat_gradient * libm::fabs(lat_deg) / 90.0
            + self.smooth(lat_deg, lon_deg)
            + self.patch(lon_deg);
        v.clamp(0.0, 1.0)
    }
}
