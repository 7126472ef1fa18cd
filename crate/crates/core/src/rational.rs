//! Exact rational values.
//!
//! Values are parsed from `"p/q"` strings, integers, or finite decimals such
//! as `"0.2"`, and always printed as `"p"` or `"p/q"` in lowest terms.

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = Ratio<i128>;

pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::Rational(text.to_string());
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = t.split_once('/') {
        let p: i128 = p.trim().parse().map_err(|_| bad())?;
        let q: i128 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(p, q));
    }
    let (neg, digits) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    if frac_part.len() > 30 {
        return Err(bad());
    }
    let mut numer: i128 = 0;
    for c in int_part.chars().chain(frac_part.chars()) {
        numer = numer
            .checked_mul(10)
            .and_then(|n| n.checked_add(c as i128 - '0' as i128))
            .ok_or_else(bad)?;
    }
    let denom = 10i128.checked_pow(frac_part.len() as u32).ok_or_else(bad)?;
    let value = Ratio::new(numer, denom);
    Ok(if neg { -value } else { value })
}

pub fn format_rational(value: &Rational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn is_negative(value: &Rational) -> bool {
    value.is_negative()
}

/// Least common multiple of the denominators, used to rescale one agent's
/// values to integers.
pub(crate) fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Result<i128> {
    let mut acc: i128 = 1;
    for v in values {
        if v.is_zero() {
            continue;
        }
        let d = *v.denom();
        let g = acc.gcd(&d);
        acc = (acc / g)
            .checked_mul(d)
            .ok_or_else(|| Error::internal("denominator overflow while scaling a valuation"))?;
    }
    Ok(acc)
}

pub(crate) fn scale_to_int(value: &Rational, scale: i128) -> Result<i128> {
    let n = value
        .numer()
        .checked_mul(scale / value.denom())
        .ok_or_else(|| Error::internal("overflow while scaling a valuation"))?;
    Ok(n)
}

pub mod serde_str {
    //! Serde adapter storing a [`Rational`] as a string.
    use super::{format_rational, parse_rational, Rational};
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(v))
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Str(String),
        Int(i64),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Str(s) => parse_rational(&s).map_err(de::Error::custom),
            Raw::Int(i) => Ok(Rational::from_integer(i as i128)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(p: i128, q: i128) -> Rational {
        Ratio::new(p, q)
    }

    #[test]
    fn parses_fraction_decimal_and_integer() {
        assert_eq!(parse_rational("1/5").unwrap(), r(1, 5));
        assert_eq!(parse_rational("0.2").unwrap(), r(1, 5));
        assert_eq!(parse_rational(".5").unwrap(), r(1, 2));
        assert_eq!(parse_rational("3").unwrap(), r(3, 1));
        assert_eq!(parse_rational("6/4").unwrap(), r(3, 2));
        assert_eq!(parse_rational("-1.5").unwrap(), r(-3, 2));
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "1/0", "a", "1.2.3", "1e3", "/", ".", "1/x"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn formats_lowest_terms() {
        assert_eq!(format_rational(&r(2, 4)), "1/2");
        assert_eq!(format_rational(&r(4, 2)), "2");
        assert_eq!(format_rational(&r(0, 7)), "0");
    }

    #[test]
    fn common_denominator_scales_to_integers() {
        let vals = [r(1, 6), r(3, 4), r(2, 1)];
        let d = common_denominator(vals.iter()).unwrap();
        assert_eq!(d, 12);
        let ints: Vec<i128> = vals.iter().map(|v| scale_to_int(v, d).unwrap()).collect();
        assert_eq!(ints, vec![2, 9, 24]);
    }

    proptest! {
        #[test]
        fn format_then_parse_is_identity(p in -10_000i128..10_000, q in 1i128..10_000) {
            let v = r(p, q);
            prop_assert_eq!(parse_rational(&format_rational(&v)).unwrap(), v);
        }
    }
}
