//! Bessel function of the first kind, order one.
//!
//! Rational approximation on [0, 2) and the Hankel-form `pone`/`qone`
//! rational fits beyond, following FreeBSD's e_j1.c:
//!
//! ====================================================
//! Copyright (C) 1993 by Sun Microsystems, Inc. All rights reserved.
//!
//! Developed at SunPro, a Sun Microsystems, Inc. business.
//! Permission to use, copy, modify, and distribute this
//! software is freely granted, provided that this notice
//! is preserved.
//! ====================================================

#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Upper end of the supported argument range.
pub const J1_MAX_ARG: f64 = 200.0;

/// First positive zero of J1.
pub const J1_FIRST_ZERO: f64 = 3.831_705_970_207_512_3;

const TWO_M27: f64 = 7.450_580_596_923_828e-9;

// j1(x) = x/2 + x*z*R0/S0 on [0, 2), z = x*x
const R00: f64 = -6.25000000000000000000e-02;
const R01: f64 = 1.40705666955189706048e-03;
const R02: f64 = -1.59955631084035597520e-05;
const R03: f64 = 4.96727999609584448412e-08;
const S01: f64 = 1.91537599538363460805e-02;
const S02: f64 = 1.85946785588630915560e-04;
const S03: f64 = 1.17718464042623683263e-06;
const S04: f64 = 5.04636257076217042715e-09;
const S05: f64 = 1.23542274426137913908e-11;

/// J1(x) on `[0, 200]`.
pub fn bessel_j1(x: f64) -> Result<f64> {
    if !(0.0..=J1_MAX_ARG).contains(&x) {
        return Err(Error::domain(format!(
            "J1 argument {x} outside [0, {J1_MAX_ARG}]"
        )));
    }
    Ok(j1(x))
}

/// J1 for finite non-negative `x` without the range check.
pub(crate) fn j1(x: f64) -> f64 {
    debug_assert!(x >= 0.0 && x.is_finite());
    if x == 0.0 {
        return 0.0;
    }
    if x >= 2.0 {
        // x1 = x - 3pi/4; cos(x1) = (sin x - cos x)/sqrt2, sin(x1) = -(sin x + cos x)/sqrt2.
        // The sum/difference that cancels is rebuilt from cos(2x).
        let (s, c) = x.sin_cos();
        let mut ss = -s - c;
        let mut cc = s - c;
        let z = (x + x).cos();
        if s * c > 0.0 {
            cc = z / ss;
        } else {
            ss = z / cc;
        }
        let u = pone(x);
        let v = qone(x);
        return (u * cc - v * ss) / (PI.sqrt() * x.sqrt());
    }
    if x < TWO_M27 {
        return 0.5 * x;
    }
    let z = x * x;
    let r = z * (R00 + z * (R01 + z * (R02 + z * R03)));
    let s = 1.0 + z * (S01 + z * (S02 + z * (S03 + z * (S04 + z * S05))));
    0.5 * x + x * r / s
}

// pone(x) = 1 + R/S in s = 1/x, one fit per interval.
const P1R8: [f64; 6] = [
    0.00000000000000000000e+00,
    1.17187499999988647970e-01,
    1.32394806593073575129e+01,
    4.12051854307378562225e+02,
    3.87474538913960532227e+03,
    7.91447954031891731574e+03,
];
const P1S8: [f64; 5] = [
    1.14207370375678408436e+02,
    3.65093083420853463394e+03,
    3.69562060269033463555e+04,
    9.76027935934950801311e+04,
    3.08042720627888811578e+04,
];
const P1R5: [f64; 6] = [
    1.31990519556243522749e-11,
    1.17187493190614097638e-01,
    6.80275127868432871736e+00,
    1.08308182990189109773e+02,
    5.17636139533199752805e+02,
    5.28715201363337541807e+02,
];
const P1S5: [f64; 5] = [
    5.92805987221131331921e+01,
    9.91401418733614377743e+02,
    5.35326695291487976647e+03,
    7.84469031749551231769e+03,
    1.50404688810361062679e+03,
];
const P1R3: [f64; 6] = [
    3.02503916137373618024e-09,
    1.17186865567253592491e-01,
    3.93297750033315640650e+00,
    3.51194035591636932736e+01,
    9.10550110750781271918e+01,
    4.85590685197364919645e+01,
];
const P1S3: [f64; 5] = [
    3.47913095001251519989e+01,
    3.36762458747825746741e+02,
    1.04687139975775130551e+03,
    8.90811346398256432622e+02,
    1.03787932439639277504e+02,
];
const P1R2: [f64; 6] = [
    1.07710830106873743082e-07,
    1.17176219462683348094e-01,
    2.36851496667608785174e+00,
    1.22426109148261232917e+01,
    1.76939711271687727390e+01,
    5.07352312588818499250e+00,
];
const P1S2: [f64; 5] = [
    2.14364859363821409488e+01,
    1.25290227168402751090e+02,
    2.32276469057162813669e+02,
    1.17679373287147100768e+02,
    8.36463893371618283368e+00,
];

fn pone(x: f64) -> f64 {
    let (p, q) = if x >= 8.0 {
        (&P1R8, &P1S8)
    } else if x >= 4.5454 {
        (&P1R5, &P1S5)
    } else if x >= 2.8571 {
        (&P1R3, &P1S3)
    } else {
        (&P1R2, &P1S2)
    };
    let z = 1.0 / (x * x);
    let r = p[0] + z * (p[1] + z * (p[2] + z * (p[3] + z * (p[4] + z * p[5]))));
    let s = 1.0 + z * (q[0] + z * (q[1] + z * (q[2] + z * (q[3] + z * q[4]))));
    1.0 + r / s
}

// qone(x) = s * (0.375 + R/S), s = 1/x.
const Q1R8: [f64; 6] = [
    0.00000000000000000000e+00,
    -1.02539062499992714161e-01,
    -1.62717534544589987888e+01,
    -7.59601722513950107896e+02,
    -1.18498066702429587167e+04,
    -4.84385124285750353010e+04,
];
const Q1S8: [f64; 6] = [
    1.61395369700722909556e+02,
    7.82538599923348465381e+03,
    1.33875336287249578163e+05,
    7.19657723683240939863e+05,
    6.66601232617776375264e+05,
    -2.94490264303834643215e+05,
];
const Q1R5: [f64; 6] = [
    -2.08979931141764104297e-11,
    -1.02539050241375426231e-01,
    -8.05644828123936029840e+00,
    -1.83669607474888380239e+02,
    -1.37319376065508163265e+03,
    -2.61244440453215656817e+03,
];
const Q1S5: [f64; 6] = [
    8.12765501384335777857e+01,
    1.99179873460485964642e+03,
    1.74684851924908907677e+04,
    4.98514270910352279316e+04,
    2.79480751638918118260e+04,
    -4.71918354795128470869e+03,
];
const Q1R3: [f64; 6] = [
    -5.07831226461766561369e-09,
    -1.02537829820837089745e-01,
    -4.61011581139473403113e+00,
    -5.78472216562783643212e+01,
    -2.28244540737631695038e+02,
    -2.19210128478909325622e+02,
];
const Q1S3: [f64; 6] = [
    4.76651550323729509273e+01,
    6.73865112676699709482e+02,
    3.38015286679526343505e+03,
    5.54772909720722782367e+03,
    1.90311919338810798763e+03,
    -1.35201191444307340817e+02,
];
const Q1R2: [f64; 6] = [
    -1.78381727510958865572e-07,
    -1.02517042607985553460e-01,
    -2.75220568278187460720e+00,
    -1.96636162643703720221e+01,
    -4.23253133372830490089e+01,
    -2.13719211703704061733e+01,
];
const Q1S2: [f64; 6] = [
    2.95333629060523854548e+01,
    2.52981549982190529136e+02,
    7.57502834868645436472e+02,
    7.39393205320467245656e+02,
    1.55949003336666123687e+02,
    -4.95949898822628210127e+00,
];

fn qone(x: f64) -> f64 {
    let (p, q) = if x >= 8.0 {
        (&Q1R8, &Q1S8)
    } else if x >= 4.5454 {
        (&Q1R5, &Q1S5)
    } else if x >= 2.8571 {
        (&Q1R3, &Q1S3)
    } else {
        (&Q1R2, &Q1S2)
    };
    let z = 1.0 / (x * x);
    let r = p[0] + z * (p[1] + z * (p[2] + z * (p[3] + z * (p[4] + z * p[5]))));
    let s = 1.0 + z * (q[0] + z * (q[1] + z * (q[2] + z * (q[3] + z * (q[4] + z * q[5])))));
    (0.375 + r / s) / x
}


#[cfg(test)]
mod tests {
    use super::oracle::j1_series;
    use super::*;

    #[test]
    fn oracle_sanity() {
        // Reference digits of J1(1), J1(5) (tabulated values).
        assert!((j1_series(1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((j1_series(5.0) + 0.327_579_137_591_465_2).abs() < 1e-14);
    }

    #[test]
    fn point_values() {
        assert_eq!(bessel_j1(0.0).unwrap(), 0.0);
        assert!((bessel_j1(1.0).unwrap() - 0.4400505857).abs() < 1e-10);
        assert!(bessel_j1(3.83171).unwrap().abs() < 1e-5);
        assert!(bessel_j1(J1_FIRST_ZERO).unwrap().abs() < 1e-15);
    }

    #[test]
    fn range_checks() {
        assert!(bessel_j1(-0.1).is_err());
        assert!(bessel_j1(200.1).is_err());
        assert!(bessel_j1(f64::NAN).is_err());
        assert!(bessel_j1(200.0).is_ok());
    }

    #[test]
    fn matches_series_oracle_on_0_50() {
        let n = 10_000;
        let mut worst = (0.0, 0.0);
        for i in 0..=n {
            let x = 50.0 * f64::from(i) / f64::from(n);
            let err = (j1(x) - j1_series(x)).abs();
            if err > worst.1 {
                worst = (x, err);
            }
        }
        assert!(
            worst.1 <= 1e-9,
            "worst error {:e} at x = {}",
            worst.1,
            worst.0
        );
    }

    #[test]
    fn first_zero_by_bisection_on_oracle() {
        let (mut lo, mut hi) = (3.0, 4.5);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if j1_series(lo) * j1_series(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((lo - J1_FIRST_ZERO).abs() < 1e-12);
    }
}
