use alloc::format;
use core::f64::consts::PI;

use crate::{Error, Result};

/// Area of the spherical quadrangle `[lat_lo, lat_hi] x [lon_lo, lon_hi]`,
/// `R^2 (sin lat_hi - sin lat_lo) dlon`, in the squared unit of `radius`.
pub fn spherical_cell_area(
    lat_lo: f64,
    lat_hi: f64,
    lon_lo: f64,
    lon_hi: f64,
    radius: f64,
) -> Result<f64> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Domain(format!("radius {radius} must be positive")));
    }
    if !(-90.0..=90.0).contains(&lat_lo) || !(-90.0..=90.0).contains(&lat_hi) || lat_lo >= lat_hi {
        return Err(Error::Domain(format!(
            "latitude bounds [{lat_lo}, {lat_hi}] must satisfy -90 <= lo < hi <= 90"
        )));
    }
    let dlon = lon_hi - lon_lo;
    if !(dlon > 0.0 && dlon <= 360.0) {
        return Err(Error::Domain(format!(
            "longitude extent {dlon} must lie in (0, 360]"
        )));
    }
    let band = libm::sin(lat_hi.to_radians()) - libm::sin(lat_lo.to_radians());
    Ok(radius * radius * band * dlon.to_radians())
}

/// `4 pi R^2`.
pub fn sphere_area(radius: f64) -> f64 {
    4.0 * PI * radius * radius
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomodel::MARS_RADIUS_KM;

    // composite Simpson over latitude of R^2 cos(phi) dphi, times dlon
    fn quadrature_area(lat_lo: f64, lat_hi: f64, dlon: f64, r: f64) -> f64 {
        let n = 2000;
        let (a, b) = (lat_lo.to_radians(), lat_hi.to_radians());
        let h = (b - a) / n as f64;
        let mut s = libm::cos(a) + libm::cos(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * libm::cos(a + i as f64 * h);
        }
        r * r * s * h / 3.0 * dlon.to_radians()
    }

    #[test]
    fn full_sphere() {
        let r = 2.5;
        let a = spherical_cell_area(-90.0, 90.0, 0.0, 360.0, r).unwrap();
        assert!((a - sphere_area(r)).abs() / sphere_area(r) < 1e-14);
    }

    #[test]
    fn equator_cell_on_mars() {
        let a = spherical_cell_area(0.0, 10.0, 0.0, 10.0, MARS_RADIUS_KM).unwrap();
        let q = quadrature_area(0.0, 10.0, 10.0, MARS_RADIUS_KM);
        assert!((a - q).abs() / a < 1e-12, "{a} vs {q}");
        assert!((a - 348_192.068_527_554_9).abs() < 1e-6);
        assert!((a - 3.4817e5).abs() / a < 1e-4);
    }

    #[test]
    fn invalid_bounds() {
        assert!(spherical_cell_area(0.0, 10.0, 10.0, 10.0, 1.0).is_err());
        assert!(spherical_cell_area(10.0, 0.0, 0.0, 10.0, 1.0).is_err());
        assert!(spherical_cell_area(0.0, 10.0, 0.0, 361.0, 1.0).is_err());
        assert!(spherical_cell_area(-91.0, 10.0, 0.0, 10.0, 1.0).is_err());
        assert!(spherical_cell_area(0.0, 10.0, 0.0, 10.0, 0.0).is_err());
    }
}
