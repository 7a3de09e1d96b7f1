//! Exact rational scalars and float-to-rational snapping.

use num_bigint::{BigInt, ToBigInt};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RationalParseError {
    #[error("malformed rational literal `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, `"p"`, or a decimal like `"0.25"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational, RationalParseError> {
    let t = s.trim();
    if let Some((p, q)) = t.split_once('/') {
        let pn: BigInt = p
            .trim()
            .parse()
            .map_err(|_| RationalParseError::Malformed(s.to_string()))?;
        let qn: BigInt = q
            .trim()
            .parse()
            .map_err(|_| RationalParseError::Malformed(s.to_string()))?;
        if qn.is_zero() {
            return Err(RationalParseError::ZeroDenominator(s.to_string()));
        }
        return Ok(BigRational::new(pn, qn));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let digits = frac.len() as u32;
        let scale = BigInt::from(10u32).pow(digits);
        let int_part: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse()
                .map_err(|_| RationalParseError::Malformed(s.to_string()))?
        };
        let frac_part: BigInt = frac
            .parse()
            .map_err(|_| RationalParseError::Malformed(s.to_string()))?;
        let neg = t.starts_with('-');
        let num = int_part.abs() * &scale + frac_part;
        let num = if neg { -num } else { num };
        return Ok(BigRational::new(num, scale));
    }
    let n: BigInt = t
        .parse()
        .map_err(|_| RationalParseError::Malformed(s.to_string()))?;
    Ok(BigRational::from_integer(n))
}

/// Renders as `p/q`, or `p` when the denominator is one.
pub fn fmt_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// Best rational approximation of `x` with denominator at most `max_den`,
/// via continued-fraction convergents/semiconvergents. Returns `None` when
/// no such rational lies within `tol` of `x`.
pub fn snap_to_rational(x: f64, max_den: u64, tol: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let neg = x < 0.0;
    let x_abs = x.abs();
    // Continued fraction expansion with convergent tracking.
    let (mut p0, mut q0) = (BigInt::one(), BigInt::zero());
    let (mut p1, mut q1) = (x_abs.floor().to_bigint().unwrap(), BigInt::one());
    let mut frac = x_abs - x_abs.floor();
    let max_den_big = BigInt::from(max_den);
    let mut best = (p1.clone(), q1.clone());
    for _ in 0..64 {
        if q1 > max_den_big {
            break;
        }
        best = (p1.clone(), q1.clone());
        if frac.abs() < 1e-15 {
            break;
        }
        let inv = 1.0 / frac;
        let a = inv.floor().to_bigint().unwrap();
        frac = inv - inv.floor();
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        // Largest semiconvergent still within the denominator bound.
        if q2 > max_den_big {
            let k = (&max_den_big - &q0) / &q1;
            let ps = &k * &p1 + &p0;
            let qs = &k * &q1 + &q0;
            if !qs.is_zero() {
                let cand = BigRational::new(ps, qs);
                let prev = BigRational::new(p1.clone(), q1.clone());
                if (rational_to_f64(&cand) - x_abs).abs() < (rational_to_f64(&prev) - x_abs).abs() {
                    best = (cand.numer().clone(), cand.denom().clone());
                }
            }
            break;
        }
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
    }
    let (p, q) = best;
    if q.is_zero() {
        return None;
    }
    let cand = BigRational::new(if neg { -p } else { p }, q);
    if (rational_to_f64(&cand) - x).abs() <= tol {
        Some(cand)
    } else {
        None
    }
}

/// Snaps when possible, otherwise keeps the float bit-exactly as a rational.
pub fn snap_or_exact(x: f64, max_den: u64, tol: f64) -> Rational {
    snap_to_rational(x, max_den, tol)
        .or_else(|| BigRational::from_float(x))
        .unwrap_or_else(Rational::zero)
}
