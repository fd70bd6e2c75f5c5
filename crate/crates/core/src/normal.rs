//! Standard normal distribution function and its inverse.

use crate::error::{Error, Result};
use statrs::distribution::{ContinuousCDF, Normal};
use std::sync::OnceLock;

fn standard() -> &'static Normal {
    static N: OnceLock<Normal> = OnceLock::new();
    N.get_or_init(Normal::standard)
}

pub fn std_normal_cdf(z: f64) -> f64 {
    standard().cdf(z)
}

pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfDomain(p));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    Ok(standard().inverse_cdf(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_center() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
    }

    #[test]
    fn endpoints_rejected() {
        assert_eq!(std_normal_quantile(0.0), Err(Error::OutOfDomain(0.0)));
        assert_eq!(std_normal_quantile(1.0), Err(Error::OutOfDomain(1.0)));
        assert!(std_normal_quantile(f64::NAN).is_err());
    }

    #[test]
    fn quantile_inverts_cdf() {
        let mut z = -6.0;
        while z <= 6.0 {
            let back = std_normal_quantile(std_normal_cdf(z)).unwrap();
            assert!((back - z).abs() <= 1e-7, "z={z} back={back}");
            z += 0.01;
        }
    }
}
