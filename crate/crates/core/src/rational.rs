//! Exact rational arithmetic for boxes, segments, and zonotopes.
//!
//! Floating-point results for permanents, determinants, and the factorial
//! identity `prod g(k) = n!/n^n` are cross-checked here in `BigRational`
//! arithmetic, where "equal" means equal.  General polytope hulls stay in
//! `f64`; exact mode covers only representations whose volume is a finite
//! sum of products.

use crate::{Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use std::str::FromStr;

/// Parses `"p/q"`, integer, or plain decimal strings into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::ParseInput("empty rational literal".into()));
    }
    let bad = |msg: &str| Error::ParseInput(format!("{msg}: {t:?}"));
    if let Some((p, q)) = t.split_once('/') {
        let num = BigInt::from_str(p.trim()).map_err(|_| bad("bad numerator"))?;
        let den = BigInt::from_str(q.trim()).map_err(|_| bad("bad denominator"))?;
        if den.is_zero() {
            return Err(bad("zero denominator"));
        }
        return Ok(BigRational::new(num, den));
    }
    // Decimal form, optionally with an exponent: mantissa * 10^e.
    let (mantissa, exp) = match t.split_once(['e', 'E']) {
        Some((m, e)) => (m, i64::from_str(e).map_err(|_| bad("bad exponent"))?),
        None => (t, 0i64),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    let digits = format!("{int_part}{frac_part}");
    if digits.is_empty() || digits == "-" || digits == "+" {
        return Err(bad("bad mantissa"));
    }
    let num = BigInt::from_str(&digits).map_err(|_| bad("bad mantissa"))?;
    let shift = exp - frac_part.len() as i64;
    let ten = BigInt::from(10);
    Ok(if shift >= 0 {
        BigRational::from_integer(num * ten.pow(shift as u32))
    } else {
        BigRational::new(num, ten.pow((-shift) as u32))
    })
}

/// Exact value of an `f64` (every finite double is rational).
pub fn rational_from_f64(v: f64) -> Result<BigRational> {
    BigRational::from_float(v).ok_or_else(|| Error::ParseInput(format!("non-finite value {v}")))
}

/// Rounds to the nearest double.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact determinant by Gaussian elimination with rational pivots.
pub fn det_rational(m: &[Vec<BigRational>]) -> Result<BigRational> {
    let n = m.len();
    for row in m {
        if row.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: row.len() });
        }
    }
    let mut a = m.to_vec();
    let mut det = BigRational::one();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero());
        let Some(p) = pivot else { return Ok(BigRational::zero()) };
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        let pv = a[col][col].clone();
        det *= pv.clone();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &pv;
            for c in col..n {
                let sub = &factor * &a[col][c];
                a[r][c] -= sub;
            }
        }
    }
    Ok(det)
}

/// Exact permanent by Ryser's formula with a Gray-code subset walk.
pub fn permanent_rational(m: &[Vec<BigRational>]) -> Result<BigRational> {
    let n = m.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    if n > crate::mv_exact::PERMANENT_MAX_N {
        return Err(Error::ArityCap {
            n,
            cap: crate::mv_exact::PERMANENT_MAX_N,
            op: "exact permanent",
        });
    }
    for row in m {
        if row.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: row.len() });
        }
    }
    let mut sums = vec![BigRational::zero(); n];
    let mut total = BigRational::zero();
    let mut prev: usize = 0;
    for k in 1usize..(1 << n) {
        let gray = k ^ (k >> 1);
        let diff = gray ^ prev;
        let j = diff.trailing_zeros() as usize;
        if gray & diff != 0 {
            for (s, row) in sums.iter_mut().zip(m) {
                *s += &row[j];
            }
        } else {
            for (s, row) in sums.iter_mut().zip(m) {
                *s -= &row[j];
            }
        }
        prev = gray;
        let card = gray.count_ones() as usize;
        let mut prod = BigRational::one();
        for s in &sums {
            prod *= s;
        }
        if (n - card).is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    Ok(total)
}

/// Exact volume of a box given by lower/upper corners.
pub fn box_volume_rational(lower: &[BigRational], upper: &[BigRational]) -> Result<BigRational> {
    if lower.len() != upper.len() {
        return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
    }
    let mut v = BigRational::one();
    for (l, u) in lower.iter().zip(upper) {
        if u < l {
            return Err(Error::InvalidBody("box with upper < lower".into()));
        }
        v *= u - l;
    }
    Ok(v)
}

/// Exact zonotope volume: sum over all `n`-subsets of generators of
/// `|det|` of the chosen columns.
pub fn zonotope_volume_rational(
    generators: &[Vec<BigRational>],
    dim: usize,
) -> Result<BigRational> {
    for g in generators {
        if g.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: g.len() });
        }
    }
    if generators.len() < dim {
        return Ok(BigRational::zero());
    }
    let mut total = BigRational::zero();
    let mut pick: Vec<usize> = (0..dim).collect();
    loop {
        let cols: Vec<Vec<BigRational>> =
            (0..dim).map(|r| pick.iter().map(|&j| generators[j][r].clone()).collect()).collect();
        total += det_rational(&cols)?.abs();
        // next lexicographic dim-subset of {0..generators.len()}
        let m = generators.len();
        let mut i = dim;
        loop {
            if i == 0 {
                return Ok(total);
            }
            i -= 1;
            if pick[i] != i + m - dim {
                pick[i] += 1;
                for j in i + 1..dim {
                    pick[j] = pick[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Exact `n!/n^n`.
pub fn vdw_ratio_exact(n: usize) -> BigRational {
    let mut num = BigInt::one();
    for i in 1..=n {
        num *= BigInt::from(i);
    }
    let den = BigInt::from(n).pow(n as u32);
    BigRational::new(num, den)
}

/// Exact `prod_{k=1..n} g(k)` with `g(k) = ((k-1)/k)^(k-1)`.
pub fn g_product_exact(n: usize) -> BigRational {
    let mut prod = BigRational::one();
    for k in 2..=n {
        let base = BigRational::new(BigInt::from(k - 1), BigInt::from(k));
        for _ in 0..k - 1 {
            prod *= base.clone();
        }
    }
    prod
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn parsing_accepts_fractions_integers_and_decimals() {
        assert_eq!(r("3/4"), BigRational::new(3.into(), 4.into()));
        assert_eq!(r("-3/4"), BigRational::new((-3).into(), 4.into()));
        assert_eq!(r("7"), BigRational::from_integer(7.into()));
        assert_eq!(r("1.25"), BigRational::new(5.into(), 4.into()));
        assert_eq!(r("-0.5"), BigRational::new((-1).into(), 2.into()));
        assert_eq!(r("25e-2"), BigRational::new(1.into(), 4.into()));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn f64_round_trip_is_exact_for_dyadics() {
        let v = rational_from_f64(0.375).unwrap();
        assert_eq!(v, BigRational::new(3.into(), 8.into()));
        assert_eq!(rational_to_f64(&v), 0.375);
    }

    #[test]
    fn determinant_exact_values() {
        let eye: Vec<Vec<BigRational>> = (0..3)
            .map(|i| (0..3).map(|j| if i == j { r("1") } else { r("0") }).collect())
            .collect();
        assert_eq!(det_rational(&eye).unwrap(), r("1"));
        let m = vec![vec![r("1/2"), r("1/3")], vec![r("1/4"), r("1/5")]];
        // 1/10 - 1/12 = 1/60
        assert_eq!(det_rational(&m).unwrap(), r("1/60"));
        let sing = vec![vec![r("1"), r("2")], vec![r("2"), r("4")]];
        assert_eq!(det_rational(&sing).unwrap(), r("0"));
    }

    #[test]
    fn permanent_exact_matches_float_oracle() {
        let ones = vec![vec![r("1"); 4]; 4];
        assert_eq!(permanent_rational(&ones).unwrap(), r("24"));
        let m = vec![
            vec![r("1/2"), r("1/3"), r("1/6")],
            vec![r("1/4"), r("1/4"), r("1/2")],
            vec![r("0"), r("2/3"), r("1/3")],
        ];
        let exact = permanent_rational(&m).unwrap();
        let floats: Vec<Vec<f64>> =
            m.iter().map(|row| row.iter().map(rational_to_f64).collect()).collect();
        let approx = crate::mv_exact::permanent_ryser(&floats).unwrap();
        assert!((rational_to_f64(&exact) - approx).abs() < 1e-12);
    }

    #[test]
    fn box_and_zonotope_volumes() {
        let v = box_volume_rational(&[r("0"), r("0")], &[r("1/3"), r("3/5")]).unwrap();
        assert_eq!(v, r("1/5"));
        assert!(box_volume_rational(&[r("1")], &[r("0")]).is_err());
        // hexagon: generators (1,0),(0,1),(1,1) has area 3
        let gens = vec![vec![r("1"), r("0")], vec![r("0"), r("1")], vec![r("1"), r("1")]];
        assert_eq!(zonotope_volume_rational(&gens, 2).unwrap(), r("3"));
        // a single segment in the plane is flat
        assert_eq!(zonotope_volume_rational(&[vec![r("1"), r("2")]], 2).unwrap(), r("0"));
    }

    #[test]
    fn factorial_identity_is_exact_up_to_twelve() {
        for n in 1..=12 {
            assert_eq!(g_product_exact(n), vdw_ratio_exact(n), "n = {n}");
        }
        assert_eq!(vdw_ratio_exact(3), r("2/9"));
    }
}
