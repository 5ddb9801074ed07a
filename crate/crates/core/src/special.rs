//! Error function and fixed-node quadrature.
//!
//! `erf` is a port of FreeBSD's `s_erf.c`, which carries this notice:
//!
//! ```text
//! Copyright (C) 1993 by Sun Microsystems, Inc. All rights reserved.
//!
//! Developed at SunPro, a Sun Microsystems, Inc. business.
//! Permission to use, copy, modify, and distribute this
//! software is freely granted, provided that this notice
//! is preserved.
//! ```
//!
//! Piecewise rational minimax approximations; error below one ulp on the
//! whole real line.

const ERX: f64 = 8.45062911510467529297e-01;
const EFX: f64 = 1.28379167095512586316e-01;
const EFX8: f64 = 1.02703333676410069053e+00;

// erf on [0, 0.84375]
const PP: [f64; 5] = [
    1.28379167095512558561e-01,
    -3.25042107247001499370e-01,
    -2.84817495755985104766e-02,
    -5.77027029648944159157e-03,
    -2.37630166566501626084e-05,
];
const QQ: [f64; 6] = [
    1.0,
    3.97917223959155352819e-01,
    6.50222499887672944485e-02,
    5.08130628187576562776e-03,
    1.32494738004321644526e-04,
    -3.96022827877536812320e-06,
];

// erf on [0.84375, 1.25]
const PA: [f64; 7] = [
    -2.36211856075265944077e-03,
    4.14856118683748331666e-01,
    -3.72207876035701323847e-01,
    3.18346619901161753674e-01,
    -1.10894694282396677476e-01,
    3.54783043256182359371e-02,
    -2.16637559486879084300e-03,
];
const QA: [f64; 7] = [
    1.0,
    1.06420880400844228286e-01,
    5.40397917702171048937e-01,
    7.18286544141962662868e-02,
    1.26171219808761642112e-01,
    1.36370839120290507362e-02,
    1.19844998467991074170e-02,
];

// erfc on [1.25, 1/0.35]
const RA: [f64; 8] = [
    -9.86494403484714822705e-03,
    -6.93858572707181764372e-01,
    -1.05586262253232909814e+01,
    -6.23753324503260060396e+01,
    -1.62396669462573470355e+02,
    -1.84605092906711035994e+02,
    -8.12874355063065934246e+01,
    -9.81432934416914548592e+00,
];
const SA: [f64; 9] = [
    1.0,
    1.96512716674392571292e+01,
    1.37657754143519042600e+02,
    4.34565877475229228821e+02,
    6.45387271733267880336e+02,
    4.29008140027567833386e+02,
    1.08635005541779435134e+02,
    6.57024977031928170135e+00,
    -6.04244152148580987438e-02,
];

// erfc on [1/0.35, 6]
const RB: [f64; 7] = [
    -9.86494292470009928597e-03,
    -7.99283237680523006574e-01,
    -1.77579549177547519889e+01,
    -1.60636384855821916062e+02,
    -6.37566443368389627722e+02,
    -1.02509513161107724954e+03,
    -4.83519191608651397019e+02,
];
const SB: [f64; 8] = [
    1.0,
    3.03380607434824582924e+01,
    3.25792512996573918826e+02,
    1.53672958608443695994e+03,
    3.19985821950859553908e+03,
    2.55305040643316442583e+03,
    4.74528541206955367215e+02,
    -2.24409524465858183362e+01,
];

const VERY_TINY: f64 = 2.848094538889218e-306;
const SMALL: f64 = 3.725290298461914e-9; // 2^-28

#[inline]
fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Gaussian error function.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let negative = x < 0.0;
    let ax = x.abs();
    let magnitude = if ax < 0.84375 {
        if ax < SMALL {
            if ax < VERY_TINY {
                0.125 * (8.0 * ax + EFX8 * ax)
            } else {
                ax + EFX * ax
            }
        } else {
            let z = ax * ax;
            ax + ax * (horner(&PP, z) / horner(&QQ, z))
        }
    } else if ax < 1.25 {
        let s = ax - 1.0;
        ERX + horner(&PA, s) / horner(&QA, s)
    } else if ax >= 6.0 {
        1.0
    } else {
        let s = 1.0 / (ax * ax);
        let (r, q) = if ax < 1.0 / 0.35 {
            (horner(&RA, s), horner(&SA, s))
        } else {
            (horner(&RB, s), horner(&SB, s))
        };
        // ax with the low 32 bits cleared, so z*z is exact
        let z = f64::from_bits(ax.to_bits() & 0xffff_ffff_0000_0000);
        let tail = (-z * z - 0.5625).exp() * ((z - ax) * (z + ax) + r / q).exp();
        1.0 - tail / ax
    };
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

/// 8-point Gauss–Legendre nodes and weights on [-1, 1].
const GL8: [(f64, f64); 4] = [
    (0.18343464249564978, 0.36268378337836177),
    (0.525532409916329, 0.31370664587788705),
    (0.7966664774136267, 0.22238103445337434),
    (0.9602898564975362, 0.10122853629037669),
];

pub const GL_ORDER: usize = 8;

/// Composite 8-point Gauss–Legendre rule over `[lo, hi]` with `panels`
/// equal panels.
pub fn gauss_legendre<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, panels: usize) -> f64 {
    if hi <= lo || panels == 0 {
        return 0.0;
    }
    let width = (hi - lo) / panels as f64;
    let half = 0.5 * width;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * width;
        let mut acc = 0.0;
        for &(x, w) in &GL8 {
            acc += w * (f(mid - half * x) + f(mid + half * x));
        }
        total += acc * half;
    }
    total
}

/// `ln(1 + e^y)` without overflow.
pub(crate) fn softplus(y: f64) -> f64 {
    if y > 36.0 {
        y + (-y).exp().ln_1p()
    } else {
        y.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // mpmath at 50 digits
    const REFERENCE: &[(f64, f64)] = &[
        (0.0, 0.0),
        (1e-10, 1.128379167095512573892398e-10),
        (0.3, 0.328626759459127427638914),
        (0.84375, 0.7672256612323416334589782),
        (1.0, 0.8427007929497148693412206),
        (1.25, 0.9229001282564582301365235),
        (2.0, 0.9953222650189527341620693),
        (2.857, 0.9999466417399131535625722),
        (3.5, 0.9999992569016276585872545),
        (5.9, 0.9999999999999999280959022),
        (6.5, 1.0),
        (-1.7, -0.9837904585907745636262426),
    ];

    #[test]
    fn matches_high_precision_values() {
        for &(x, want) in REFERENCE {
            let got = erf(x);
            assert!((got - want).abs() <= 1e-15, "erf({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn odd_symmetry_and_limits() {
        for i in 0..400 {
            let x = i as f64 * 0.02;
            assert_eq!(erf(-x), -erf(x));
        }
        assert_eq!(erf(f64::INFINITY), 1.0);
        assert_eq!(erf(f64::NEG_INFINITY), -1.0);
        assert!(erf(f64::NAN).is_nan());
    }

    #[test]
    fn agrees_with_taylor_series_near_zero() {
        // erf(x) = 2/sqrt(pi) * sum (-1)^n x^(2n+1) / (n! (2n+1))
        for i in 1..50 {
            let x = i as f64 * 0.02;
            let mut term = x;
            let mut sum = 0.0;
            for n in 0..40 {
                sum += term / (2 * n + 1) as f64;
                term *= -x * x / (n + 1) as f64;
            }
            let series = sum * 2.0 / std::f64::consts::PI.sqrt();
            assert!((erf(x) - series).abs() < 1e-15, "x = {x}");
        }
    }

    #[test]
    fn monotone_on_a_fine_grid() {
        let mut prev = erf(-7.0);
        for i in 1..=14_000 {
            let x = -7.0 + i as f64 * 1e-3;
            let v = erf(x);
            assert!(v >= prev, "erf not monotone at {x}");
            prev = v;
        }
    }

    #[test]
    fn gauss_legendre_is_exact_for_degree_15() {
        let f = |x: f64| x.powi(15) - 3.0 * x.powi(8) + 1.0;
        let exact = |x: f64| x.powi(16) / 16.0 - x.powi(9) / 3.0 + x;
        let got = gauss_legendre(f, -0.3, 1.7, 1);
        assert!((got - (exact(1.7) - exact(-0.3))).abs() < 1e-12);
    }

    #[test]
    fn softplus_matches_naive_where_safe() {
        for y in [-700.0, -30.0, -1.0, 0.0, 1.0, 30.0, 35.9, 36.1, 100.0] {
            let naive: f64 = (1.0 + f64::exp(y)).ln();
            let got = softplus(y);
            if y < -30.0 {
                assert!((got - y.exp()).abs() <= 1e-15 * y.exp());
            } else {
                assert!((got - naive).abs() <= 1e-14 * naive.max(1.0), "{y}");
            }
        }
        assert_eq!(softplus(1000.0), 1000.0);
    }
}
