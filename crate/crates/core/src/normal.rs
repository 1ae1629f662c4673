//! Standard normal density, distribution and quantile functions.
//!
//! `erfc` comes from libm (sub-ulp accuracy). The quantile starts from
//! statrs' `erfc_inv` and takes two Halley steps against that `erfc`, which
//! brings it to full double precision; both tails are solved on the lower
//! side so tiny probabilities keep their relative precision.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[inline]
pub fn pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Φ(x).
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Φ̄(x) = 1 − Φ(x), evaluated without cancellation.
#[inline]
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Φ⁻¹(p) for p in (0, 1).
pub fn inv_cdf(p: f64) -> f64 {
    if p <= 0.5 {
        lower_quantile(p)
    } else {
        // 1 - p is exact for p >= 0.5
        -lower_quantile(1.0 - p)
    }
}

/// Φ̄⁻¹(q) = Φ⁻¹(1 − q) for q in (0, 1).
pub fn inv_sf(q: f64) -> f64 {
    -inv_cdf(q)
}

/// Solves Φ(x) = p for p in (0, 0.5].
fn lower_quantile(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    if !(p > 0.0) {
        return if p == 0.0 { f64::NEG_INFINITY } else { f64::NAN };
    }
    let mut x = -SQRT_2 * erfc_inv(2.0 * p);
    for _ in 0..2 {
        let e = cdf(x) - p;
        let u = e / pdf(x);
        if !u.is_finite() {
            break;
        }
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    // 30-digit reference values.
    const CDF_REF: [(f64, f64); 7] = [
        (-3.0, 0.001_349_898_031_630_094_5),
        (-1.5, 0.066_807_201_268_858_066),
        (0.0, 0.5),
        (0.5, 0.691_462_461_274_013_1),
        (1.2, 0.884_930_329_778_291_7),
        (4.0, 0.999_968_328_758_166_9),
        (-8.0, 6.220_960_574_271_784e-16),
    ];

    const INV_REF: [(f64, f64); 6] = [
        (1e-10, -6.361_340_902_404_056),
        (1e-4, -3.719_016_485_455_680_6),
        (0.025, -1.959_963_984_540_054),
        (0.3, -0.524_400_512_708_040_8),
        (0.9, 1.281_551_565_544_600_5),
        (0.999_999, 4.753_424_308_817_088),
    ];

    #[test]
    fn cdf_matches_reference() {
        for (x, v) in CDF_REF {
            assert!((cdf(x) - v).abs() <= 1e-15, "x={x}");
            assert!((sf(-x) - v).abs() <= 1e-15, "x={x}");
        }
        assert!((cdf(-8.0) / 6.220_960_574_271_784e-16 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn quantiles_match_reference() {
        for (p, z) in INV_REF {
            assert!((inv_cdf(p) - z).abs() <= 1e-14 * z.abs().max(1.0), "p={p}");
            assert!((inv_sf(p) + z).abs() <= 1e-14 * z.abs().max(1.0), "p={p}");
        }
        assert_eq!(inv_cdf(0.5), 0.0);
    }

    #[test]
    fn pdf_is_symmetric_and_normalised_at_zero() {
        assert!((pdf(0.0) - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-16);
        assert_eq!(pdf(1.3), pdf(-1.3));
    }
}
