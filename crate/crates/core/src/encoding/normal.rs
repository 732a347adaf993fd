//! Standard normal CDF and its inverse.

use std::f64::consts::{PI, SQRT_2};

/// Standard normal CDF, via the complementary error function.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const P_LOW: f64 = 0.02425;

/// Lower-half inverse (p <= 0.5): Acklam's rational approximation
/// (relative error ~1e-9) followed by one Halley step against `norm_cdf`.
fn lower_inverse(p: f64) -> f64 {
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    let e = norm_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Inverse standard normal CDF. Returns `-inf`/`+inf` at 0/1 and NaN outside [0, 1].
pub fn norm_inv(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p <= 0.5 {
        lower_inverse(p)
    } else {
        -lower_inverse(1.0 - p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // mpmath, 40 digits
    const INV: [(f64, f64); 12] = [
        (1e-20, -9.2623400897984075737),
        (1e-10, -6.3613409024040562047),
        (0.001, -3.0902323061678135415),
        (0.02425, -1.9729610513118848503),
        (0.1, -1.281551565544600467),
        (0.3, -0.52440051270804078404),
        (0.5, 0.0),
        (0.7, 0.52440051270804078404),
        (0.875, 1.1503493803760081783),
        (0.97575, 1.9729610513118848503),
        (0.999, 3.0902323061678135415),
        (0.999999999, 5.9978070150076868716),
    ];

    const CDF: [(f64, f64); 9] = [
        (-30.0, 4.9067139271481870595e-198),
        (-10.0, 7.619853024160526066e-24),
        (-5.0, 2.8665157187919391167e-7),
        (-1.5, 0.066807201268858066004),
        (0.0, 0.5),
        (0.5, 0.69146246127401310364),
        (3.0, 0.99865010196836990547),
        (8.0, 0.9999999999999993779),
        (1.1503493803760079, 0.87499999999999994271),
    ];

    #[test]
    fn inverse_matches_high_precision_values() {
        for (p, z) in INV {
            let got = norm_inv(p);
            // 1 - p is inexact for p near 1, which dominates the error there
            let tol = if p > 0.99 { 1e-7 } else { 1e-12 };
            assert!((got - z).abs() < tol, "p={p}: {got} vs {z}");
        }
    }

    #[test]
    fn cdf_matches_high_precision_values() {
        for (z, p) in CDF {
            let got = norm_cdf(z);
            assert!((got - p).abs() <= 1e-15 + 1e-13 * p, "z={z}: {got} vs {p}");
        }
    }

    #[test]
    fn round_trip_is_tight() {
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            assert!((norm_cdf(norm_inv(p)) - p).abs() < 1e-14, "p={p}");
        }
    }

    #[test]
    fn edges() {
        assert_eq!(norm_inv(0.0), f64::NEG_INFINITY);
        assert_eq!(norm_inv(1.0), f64::INFINITY);
        assert!(norm_inv(1.5).is_nan());
    }
}
