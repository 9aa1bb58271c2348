//! Exact rational arithmetic.
//!
//! All exact computation paths in this library use arbitrary-precision
//! rationals; floating point appears only in Monte Carlo estimates and
//! closed-form curve output. Values are kept in lowest terms with a
//! positive denominator (the backing type normalises on construction),
//! and serialize as `"p/q"` strings.

use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::traits::{One, Signed, ToPrimitive, Zero};

pub use num::BigRational as Rational;

/// Builds a rational from integer numerator and denominator.
///
/// Panics if `den` is zero; use this only with literal constants.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Builds a rational from an integer.
pub fn rat_int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// The rational zero.
pub fn zero() -> Rational {
    Rational::zero()
}

/// The rational one.
pub fn one() -> Rational {
    Rational::one()
}

/// Formats a rational as `p/q` in lowest terms with a positive
/// denominator, e.g. `3/2`, `-1/3`, `5/1`.
pub fn format_pq(value: &Rational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Parses `p/q` or a bare integer `p` into a rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let bad = || Error::ParseRational(text.to_string());
    let mut parts = text.splitn(2, '/');
    let numer: BigInt = parts
        .next()
        .ok_or_else(bad)?
        .trim()
        .parse()
        .map_err(|_| bad())?;
    let denom: BigInt = match parts.next() {
        Some(d) => d.trim().parse().map_err(|_| bad())?,
        None => BigInt::one(),
    };
    if denom.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(numer, denom))
}

/// Converts a rational to the nearest `f64` (for reporting only).
pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        // Fall back to a quotient of lossy conversions for magnitudes
        // outside f64 range; good enough for display purposes.
        let n = value.numer().to_f64().unwrap_or(f64::MAX);
        let d = value.denom().to_f64().unwrap_or(f64::MAX);
        n / d
    })
}

/// True if the value is non-negative.
pub fn is_non_negative(value: &Rational) -> bool {
    !value.is_negative()
}

/// Serde adapters serializing rationals as `"p/q"` strings and
/// accepting either integers or strings on input.
pub mod pq {
    use super::*;
    use serde::de::Error as DeError;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Int(i64),
        Text(String),
    }

    fn entry_to_rational<E: DeError>(entry: Entry) -> std::result::Result<Rational, E> {
        match entry {
            Entry::Int(v) => Ok(rat_int(v)),
            Entry::Text(s) => parse_rational(&s).map_err(|e| E::custom(e.to_string())),
        }
    }

    pub fn serialize<S: Serializer>(value: &Rational, ser: S) -> std::result::Result<S::Ok, S::Error> {
        format_pq(value).serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Rational, D::Error> {
        entry_to_rational(Entry::deserialize(de)?)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(
            values: &[Rational],
            ser: S,
        ) -> std::result::Result<S::Ok, S::Error> {
            values.iter().map(format_pq).collect::<Vec<_>>().serialize(ser)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            de: D,
        ) -> std::result::Result<Vec<Rational>, D::Error> {
            Vec::<Entry>::deserialize(de)?
                .into_iter()
                .map(entry_to_rational)
                .collect()
        }
    }

    pub mod matrix {
        use super::*;

        pub fn serialize<S: Serializer>(
            values: &[Vec<Rational>],
            ser: S,
        ) -> std::result::Result<S::Ok, S::Error> {
            values
                .iter()
                .map(|row| row.iter().map(format_pq).collect::<Vec<_>>())
                .collect::<Vec<_>>()
                .serialize(ser)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            de: D,
        ) -> std::result::Result<Vec<Vec<Rational>>, D::Error> {
            Vec::<Vec<Entry>>::deserialize(de)?
                .into_iter()
                .map(|row| row.into_iter().map(entry_to_rational).collect())
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_stay_in_lowest_terms() {
        let r = rat(2, 4);
        assert_eq!(format_pq(&r), "1/2");
        let r = rat(-2, -4);
        assert_eq!(format_pq(&r), "1/2");
    }

    #[test]
    fn denominator_is_positive() {
        let r = rat(1, -2);
        assert_eq!(format_pq(&r), "-1/2");
        assert!(r.denom() > &BigInt::zero());
    }

    #[test]
    fn parse_accepts_fractions_and_integers() {
        assert_eq!(parse_rational("3/2").unwrap(), rat(3, 2));
        assert_eq!(parse_rational("6/4").unwrap(), rat(3, 2));
        assert_eq!(parse_rational("5").unwrap(), rat_int(5));
        assert_eq!(parse_rational(" 7 / 3 ").unwrap(), rat(7, 3));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn format_parse_round_trips() {
        for (n, d) in [(0, 1), (1, 3), (-5, 7), (100, 1), (22, 7)] {
            let r = rat(n, d);
            assert_eq!(parse_rational(&format_pq(&r)).unwrap(), r);
        }
    }

    #[test]
    fn exact_arithmetic_has_no_drift() {
        // 1/3 summed three times is exactly one.
        let third = rat(1, 3);
        let sum = &third + &third + &third;
        assert_eq!(sum, one());
    }

    #[test]
    fn f64_conversion_is_close() {
        assert!((to_f64(&rat(1, 3)) - 1.0 / 3.0).abs() < 1e-15);
    }
}
